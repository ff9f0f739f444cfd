//! Lexer and recursive-descent parser for the clause language.
//!
//! ```text
//! clause   := weight "::" atom ( ":-" atom ("," atom)* )? "."
//! weight   := decimal | "?"
//! atom     := name ( "(" term ("," term)* ")" )?
//! term     := constant | Variable | "quoted constant"
//! section  := "#example" id          (example and query files only)
//! comment  := "%" to end of line
//! ```

use std::fmt;

use thiserror::Error;

use super::{Atom, Predicate, Symbol, Term};

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StatementWeight {
    Value(f64),
    Learnable,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Statement {
    Clause {
        weight: StatementWeight,
        head: Atom,
        body: Vec<Atom>,
        line: usize,
        column: usize,
    },
    Section {
        name: String,
        line: usize,
        column: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    Var(String),
    Quoted(String),
    Number(f64),
    Question,
    DoubleColon,
    Neck,
    LParen,
    RParen,
    Comma,
    Dot,
    Section(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(s) | Tok::Var(s) => write!(f, "`{s}`"),
            Tok::Quoted(s) => write!(f, "\"{s}\""),
            Tok::Number(n) => write!(f, "`{n}`"),
            Tok::Question => f.write_str("`?`"),
            Tok::DoubleColon => f.write_str("`::`"),
            Tok::Neck => f.write_str("`:-`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Section(s) => write!(f, "section `{s}`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn take_while(&mut self, mut pred: impl FnMut(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        let mut line_has_token = false;
        let mut current_line = 1;
        while let Some(c) = self.peek() {
            if self.line != current_line {
                current_line = self.line;
                line_has_token = false;
            }
            let (line, column) = (self.line, self.column);
            let tok = match c {
                c if c.is_whitespace() => {
                    self.bump();
                    continue;
                }
                '%' => {
                    self.take_while(|c| c != '\n');
                    continue;
                }
                '#' => {
                    if line_has_token {
                        return Err(ParseError::new(
                            line,
                            column,
                            "section header must start a line",
                        ));
                    }
                    self.bump();
                    let kind = self.take_while(|c| c.is_ascii_alphabetic());
                    if kind != "example" {
                        return Err(ParseError::new(
                            line,
                            column,
                            format!("unknown section kind `#{kind}`"),
                        ));
                    }
                    let rest = self.take_while(|c| c != '\n' && c != '%');
                    let name = rest.trim();
                    if name.is_empty() || name.contains(char::is_whitespace) {
                        return Err(ParseError::new(
                            line,
                            column,
                            "`#example` needs a single identifier",
                        ));
                    }
                    Tok::Section(name.to_string())
                }
                'a'..='z' => Tok::Name(self.take_while(|c| c.is_ascii_alphanumeric() || c == '_')),
                'A'..='Z' => Tok::Var(self.take_while(|c| c.is_ascii_alphanumeric() || c == '_')),
                '0'..='9' | '-' | '+' => self.number(line, column)?,
                '"' => self.quoted(line, column)?,
                '?' => {
                    self.bump();
                    Tok::Question
                }
                '(' => {
                    self.bump();
                    Tok::LParen
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                ',' => {
                    self.bump();
                    Tok::Comma
                }
                '.' => {
                    self.bump();
                    Tok::Dot
                }
                ':' => {
                    self.bump();
                    match self.peek() {
                        Some(':') => {
                            self.bump();
                            Tok::DoubleColon
                        }
                        Some('-') => {
                            self.bump();
                            Tok::Neck
                        }
                        _ => return Err(ParseError::new(line, column, "expected `::` or `:-`")),
                    }
                }
                other => {
                    return Err(ParseError::new(
                        line,
                        column,
                        format!("unexpected character `{other}`"),
                    ))
                }
            };
            line_has_token = true;
            out.push(Spanned { tok, line, column });
        }
        Ok(out)
    }

    fn number(&mut self, line: usize, column: usize) -> Result<Tok, ParseError> {
        let mut s = String::new();
        if let Some(sign @ ('-' | '+')) = self.peek() {
            s.push(sign);
            self.bump();
        }
        let int = self.take_while(|c| c.is_ascii_digit());
        if int.is_empty() {
            return Err(ParseError::new(line, column, "expected digits"));
        }
        s.push_str(&int);
        // A '.' only belongs to the number when a digit follows it.
        if self.peek() == Some('.') {
            let mut ahead = self.chars.clone();
            ahead.next();
            if matches!(ahead.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
                s.push('.');
                s.push_str(&self.take_while(|c| c.is_ascii_digit()));
            }
        }
        if let Some(e @ ('e' | 'E')) = self.peek() {
            self.bump();
            s.push(e);
            if let Some(sign @ ('-' | '+')) = self.peek() {
                self.bump();
                s.push(sign);
            }
            let exp = self.take_while(|c| c.is_ascii_digit());
            if exp.is_empty() {
                return Err(ParseError::new(line, column, "malformed exponent"));
            }
            s.push_str(&exp);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Tok::Number(v)),
            _ => Err(ParseError::new(
                line,
                column,
                format!("invalid number `{s}`"),
            )),
        }
    }

    fn quoted(&mut self, line: usize, column: usize) -> Result<Tok, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(ParseError::new(
                        line,
                        column,
                        "unterminated quoted constant",
                    ))
                }
                Some('"') => return Ok(Tok::Quoted(s)),
                Some('\\') => match self.bump() {
                    Some(c @ ('"' | '\\')) => s.push(c),
                    _ => return Err(ParseError::new(line, column, "invalid escape")),
                },
                Some(c) => s.push(c),
            }
        }
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn error_at(&self, t: Option<&Spanned>, expected: &str) -> ParseError {
        match t {
            Some(s) => ParseError::new(
                s.line,
                s.column,
                format!("expected {expected}, found {}", s.tok),
            ),
            None => ParseError::new(
                self.eof.0,
                self.eof.1,
                format!("expected {expected}, found end of input"),
            ),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        match self.next() {
            Some(s) if s.tok == tok => Ok(()),
            other => Err(self.error_at(other.as_ref(), expected)),
        }
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        let first = self.next().expect("caller checked for a token");
        let (line, column) = (first.line, first.column);
        let weight = match first.tok {
            Tok::Section(name) => return Ok(Statement::Section { name, line, column }),
            Tok::Number(v) => StatementWeight::Value(v),
            Tok::Question => StatementWeight::Learnable,
            _ => return Err(self.error_at(Some(&first), "a weight (decimal or `?`)")),
        };
        self.expect(Tok::DoubleColon, "`::`")?;
        let head = self.atom()?;
        let mut body = Vec::new();
        match self.next() {
            Some(Spanned { tok: Tok::Dot, .. }) => {}
            Some(Spanned { tok: Tok::Neck, .. }) => loop {
                body.push(self.atom()?);
                match self.next() {
                    Some(Spanned {
                        tok: Tok::Comma, ..
                    }) => continue,
                    Some(Spanned { tok: Tok::Dot, .. }) => break,
                    other => return Err(self.error_at(other.as_ref(), "`,` or `.`")),
                }
            },
            other => return Err(self.error_at(other.as_ref(), "`:-` or `.`")),
        }
        Ok(Statement::Clause {
            weight,
            head,
            body,
            line,
            column,
        })
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let name = match self.next() {
            Some(Spanned {
                tok: Tok::Name(n), ..
            }) => n,
            other => return Err(self.error_at(other.as_ref(), "a predicate name")),
        };
        let mut args = Vec::new();
        if matches!(
            self.peek(),
            Some(Spanned {
                tok: Tok::LParen,
                ..
            })
        ) {
            self.next();
            loop {
                args.push(self.term()?);
                match self.next() {
                    Some(Spanned {
                        tok: Tok::Comma, ..
                    }) => continue,
                    Some(Spanned {
                        tok: Tok::RParen, ..
                    }) => break,
                    other => return Err(self.error_at(other.as_ref(), "`,` or `)`")),
                }
            }
        }
        Ok(Atom {
            predicate: Predicate {
                name: Symbol::from(name.as_str()),
                arity: args.len(),
            },
            args,
        })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.next() {
            Some(Spanned {
                tok: Tok::Name(n), ..
            })
            | Some(Spanned {
                tok: Tok::Quoted(n),
                ..
            }) => Ok(Term::Const(n.as_str().into())),
            Some(Spanned {
                tok: Tok::Var(v), ..
            }) => Ok(Term::Var(v.as_str().into())),
            other => Err(self.error_at(other.as_ref(), "a constant or variable")),
        }
    }
}

/// Parses clause statements and `#example` section headers in source order.
pub fn parse_statements(text: &str) -> Result<Vec<Statement>, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let eof = {
        let line = 1 + text.matches('\n').count();
        let column = 1 + text.rsplit('\n').next().map_or(0, |l| l.chars().count());
        (line, column)
    };
    let mut p = Parser { toks, pos: 0, eof };
    let mut out = Vec::new();
    while p.peek().is_some() {
        out.push(p.statement()?);
    }
    Ok(out)
}
