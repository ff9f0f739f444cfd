//! Activation-function families for rule (conjunction), aggregation and
//! atom (disjunction) neurons, with input-wise partial derivatives.
//!
//! | family | conjunction | aggregation | disjunction |
//! |---|---|---|---|
//! | Gödel | `min` | `max` | `max` |
//! | Max-Sigmoid | `sigm(Σb − k + b0)` | `max` | `sigm(Σb + b0)` |
//! | Avg-Sigmoid | `sigm(Σb − k + b0)` | mean | `Σb + b0` |
//!
//! Max and min use a one-hot subgradient at the lowest-index winner. The
//! Gödel family ignores offsets; it is meant for evaluation; training under it
//! works on subgradients only and tends to stall.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
pub enum ActivationError {
    #[error("activation applied to an empty input list")]
    EmptyInput,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    Godel,
    MaxSigmoid,
    AvgSigmoid,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Godel => "godel",
            FamilyKind::MaxSigmoid => "ms",
            FamilyKind::AvgSigmoid => "as",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown activation family `{0}` (expected godel, ms or as)")]
pub struct UnknownFamily(pub String);

impl FromStr for FamilyKind {
    type Err = UnknownFamily;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "godel" | "goedel" | "gödel" => Ok(FamilyKind::Godel),
            "ms" | "max-sigmoid" | "maxsigmoid" => Ok(FamilyKind::MaxSigmoid),
            "as" | "avg-sigmoid" | "avgsigmoid" => Ok(FamilyKind::AvgSigmoid),
            _ => Err(UnknownFamily(s.to_string())),
        }
    }
}

/// A family plus the offsets used by its sigmoid forms. In ground networks
/// the offsets are per-clause and per-predicate learnable parameters; the
/// values here are their initial values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActivationFamily {
    pub kind: FamilyKind,
    pub conj_offset: f64,
    pub disj_offset: f64,
}

impl Default for ActivationFamily {
    fn default() -> Self {
        Self::new(FamilyKind::MaxSigmoid)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActivationEval {
    pub value: f64,
    /// ∂value/∂input_i.
    pub partials: Vec<f64>,
    /// ∂value/∂offset; zero where the function has no offset.
    pub offset_partial: f64,
    /// Winning input of a max.
    pub argmax_index: Option<usize>,
}

/// Logistic function in the two-branch form that never overflows `exp`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sigmoid_eval(sum: f64, n: usize) -> ActivationEval {
    let s = sigmoid(sum);
    let d = s * (1.0 - s);
    ActivationEval {
        value: s,
        partials: vec![d; n],
        offset_partial: d,
        argmax_index: None,
    }
}

fn select(inputs: &[f64], better: impl Fn(f64, f64) -> bool) -> ActivationEval {
    let mut best = 0;
    for (i, &x) in inputs.iter().enumerate().skip(1) {
        if better(x, inputs[best]) {
            best = i;
        }
    }
    let mut partials = vec![0.0; inputs.len()];
    partials[best] = 1.0;
    ActivationEval {
        value: inputs[best],
        partials,
        offset_partial: 0.0,
        argmax_index: Some(best),
    }
}

fn max_eval(inputs: &[f64]) -> ActivationEval {
    select(inputs, |x, best| x > best)
}

fn min_eval(inputs: &[f64]) -> ActivationEval {
    ActivationEval {
        argmax_index: None,
        ..select(inputs, |x, best| x < best)
    }
}

fn non_empty(inputs: &[f64]) -> Result<(), ActivationError> {
    if inputs.is_empty() {
        Err(ActivationError::EmptyInput)
    } else {
        Ok(())
    }
}

impl ActivationFamily {
    /// Family with the default initial offsets: 1.0 for conjunctions and 0.0
    /// for disjunctions.
    pub fn new(kind: FamilyKind) -> Self {
        Self {
            kind,
            conj_offset: 1.0,
            disj_offset: 0.0,
        }
    }

    pub fn godel() -> Self {
        Self::new(FamilyKind::Godel)
    }

    pub fn max_sigmoid() -> Self {
        Self::new(FamilyKind::MaxSigmoid)
    }

    pub fn avg_sigmoid() -> Self {
        Self::new(FamilyKind::AvgSigmoid)
    }

    pub fn with_offsets(mut self, conj_offset: f64, disj_offset: f64) -> Self {
        self.conj_offset = conj_offset;
        self.disj_offset = disj_offset;
        self
    }

    /// Whether the family's functions depend on an offset at all.
    pub fn uses_offsets(&self) -> bool {
        self.kind != FamilyKind::Godel
    }

    /// g∧ with this family's conjunction offset.
    pub fn eval_conj(&self, inputs: &[f64]) -> Result<ActivationEval, ActivationError> {
        self.conj_with_offset(inputs, self.conj_offset)
    }

    pub fn conj_with_offset(
        &self,
        inputs: &[f64],
        offset: f64,
    ) -> Result<ActivationEval, ActivationError> {
        non_empty(inputs)?;
        Ok(match self.kind {
            FamilyKind::Godel => min_eval(inputs),
            FamilyKind::MaxSigmoid | FamilyKind::AvgSigmoid => {
                let sum: f64 = inputs.iter().sum();
                sigmoid_eval(sum - inputs.len() as f64 + offset, inputs.len())
            }
        })
    }

    /// g∧*: combines the rule neurons that share one ground head.
    pub fn eval_agg(&self, inputs: &[f64]) -> Result<ActivationEval, ActivationError> {
        non_empty(inputs)?;
        Ok(match self.kind {
            FamilyKind::Godel | FamilyKind::MaxSigmoid => max_eval(inputs),
            FamilyKind::AvgSigmoid => {
                let m = inputs.len() as f64;
                ActivationEval {
                    value: inputs.iter().sum::<f64>() / m,
                    partials: vec![1.0 / m; inputs.len()],
                    offset_partial: 0.0,
                    argmax_index: None,
                }
            }
        })
    }

    /// g∨ with this family's disjunction offset.
    pub fn eval_disj(&self, inputs: &[f64]) -> Result<ActivationEval, ActivationError> {
        self.disj_with_offset(inputs, self.disj_offset)
    }

    pub fn disj_with_offset(
        &self,
        inputs: &[f64],
        offset: f64,
    ) -> Result<ActivationEval, ActivationError> {
        non_empty(inputs)?;
        let sum: f64 = inputs.iter().sum();
        Ok(match self.kind {
            FamilyKind::Godel => max_eval(inputs),
            FamilyKind::MaxSigmoid => sigmoid_eval(sum + offset, inputs.len()),
            FamilyKind::AvgSigmoid => ActivationEval {
                value: sum + offset,
                partials: vec![1.0; inputs.len()],
                offset_partial: 1.0,
                argmax_index: None,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Frozen from an independent double-precision evaluation of 1/(1+e^-x).
    const SIGM_0_7: f64 = 0.6681877721681662;
    const SIGM_1: f64 = 0.7310585786300049;

    const FAMILIES: [FamilyKind; 3] = [
        FamilyKind::Godel,
        FamilyKind::MaxSigmoid,
        FamilyKind::AvgSigmoid,
    ];

    #[test]
    fn conj_examples() {
        let ms = ActivationFamily::max_sigmoid();
        let e = ms.eval_conj(&[0.8, 0.9]).unwrap();
        assert!((e.value - SIGM_0_7).abs() < 1e-15);
        for k in [1, 2, 5] {
            let v = ms.eval_conj(&vec![1.0; k]).unwrap().value;
            assert!((v - SIGM_1).abs() < 1e-15, "k={k}");
        }
        let g = ActivationFamily::godel().eval_conj(&[0.2, 0.7]).unwrap();
        assert_eq!(g.value, 0.2);
        assert_eq!(g.partials, vec![1.0, 0.0]);
    }

    #[test]
    fn agg_examples() {
        let e = ActivationFamily::max_sigmoid()
            .eval_agg(&[0.3, 0.9, 0.9])
            .unwrap();
        assert_eq!(e.value, 0.9);
        assert_eq!(e.argmax_index, Some(1));
        assert_eq!(e.partials, vec![0.0, 1.0, 0.0]);

        let e = ActivationFamily::avg_sigmoid()
            .eval_agg(&[0.2, 0.4, 0.6])
            .unwrap();
        assert!((e.value - 0.4).abs() < 1e-15);
        assert_eq!(e.partials, vec![1.0 / 3.0; 3]);

        for kind in FAMILIES {
            assert_eq!(
                ActivationFamily::new(kind).eval_agg(&[0.37]).unwrap().value,
                0.37
            );
        }
    }

    #[test]
    fn disj_examples() {
        let e = ActivationFamily::max_sigmoid()
            .eval_disj(&[0.5, 0.5])
            .unwrap();
        assert!((e.value - SIGM_1).abs() < 1e-15);
        assert_eq!(
            ActivationFamily::avg_sigmoid()
                .eval_disj(&[0.5])
                .unwrap()
                .value,
            0.5
        );
        assert_eq!(
            ActivationFamily::godel()
                .eval_disj(&[0.1, 0.8, 0.3])
                .unwrap()
                .value,
            0.8
        );
    }

    #[test]
    fn empty_inputs_are_rejected() {
        for kind in FAMILIES {
            let f = ActivationFamily::new(kind);
            assert_eq!(f.eval_conj(&[]), Err(ActivationError::EmptyInput));
            assert_eq!(f.eval_agg(&[]), Err(ActivationError::EmptyInput));
            assert_eq!(f.eval_disj(&[]), Err(ActivationError::EmptyInput));
        }
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        // the negative branch keeps relative precision in the far tail
        let tail = sigmoid(-40.0);
        assert!((tail / (-40.0f64).exp() - 1.0).abs() < 1e-12);
        assert!(!sigmoid(-1e308).is_nan());
    }

    #[test]
    fn family_names() {
        assert_eq!("ms".parse::<FamilyKind>().unwrap(), FamilyKind::MaxSigmoid);
        assert_eq!("Godel".parse::<FamilyKind>().unwrap(), FamilyKind::Godel);
        assert_eq!("as".parse::<FamilyKind>().unwrap(), FamilyKind::AvgSigmoid);
        assert!("lukasiewicz".parse::<FamilyKind>().is_err());
    }

    type Op = fn(&ActivationFamily, &[f64]) -> Result<ActivationEval, ActivationError>;
    const OPS: [Op; 3] = [
        ActivationFamily::eval_conj,
        ActivationFamily::eval_agg,
        ActivationFamily::eval_disj,
    ];

    fn spread(inputs: &[f64]) -> bool {
        let mut v = inputs.to_vec();
        v.sort_by(f64::total_cmp);
        v.windows(2).all(|w| w[1] - w[0] >= 1e-3)
    }

    proptest! {
        #[test]
        fn partials_match_central_differences(
            inputs in prop::collection::vec(-3.0f64..3.0, 1..6),
            offset in -2.0f64..2.0,
            kind in prop::sample::select(FAMILIES.to_vec()),
        ) {
            prop_assume!(spread(&inputs));
            let f = ActivationFamily::new(kind).with_offsets(offset, offset);
            let h = 1e-6;
            for op in OPS {
                let e = op(&f, &inputs).unwrap();
                prop_assert_eq!(e.partials.len(), inputs.len());
                for i in 0..inputs.len() {
                    let mut up = inputs.clone();
                    let mut down = inputs.clone();
                    up[i] += h;
                    down[i] -= h;
                    let fd = (op(&f, &up).unwrap().value - op(&f, &down).unwrap().value) / (2.0 * h);
                    prop_assert!((fd - e.partials[i]).abs() < 1e-5, "{:?} i={} fd={} an={}", kind, i, fd, e.partials[i]);
                }
            }
            // offset partials
            let h = 1e-6;
            let c = |b: f64| f.conj_with_offset(&inputs, b).unwrap().value;
            let d = |b: f64| f.disj_with_offset(&inputs, b).unwrap().value;
            let fd_c = (c(offset + h) - c(offset - h)) / (2.0 * h);
            let fd_d = (d(offset + h) - d(offset - h)) / (2.0 * h);
            prop_assert!((fd_c - f.conj_with_offset(&inputs, offset).unwrap().offset_partial).abs() < 1e-5);
            prop_assert!((fd_d - f.disj_with_offset(&inputs, offset).unwrap().offset_partial).abs() < 1e-5);
        }

        #[test]
        fn monotone_in_every_input(
            inputs in prop::collection::vec(-3.0f64..3.0, 1..6),
            bump in 0.0f64..1.0,
            idx in 0usize..6,
            kind in prop::sample::select(FAMILIES.to_vec()),
        ) {
            let i = idx % inputs.len();
            let mut higher = inputs.clone();
            higher[i] += bump;
            let f = ActivationFamily::new(kind);
            for op in OPS {
                prop_assert!(op(&f, &higher).unwrap().value >= op(&f, &inputs).unwrap().value);
            }
        }

        #[test]
        fn permutation_invariant(
            inputs in prop::collection::vec(-3.0f64..3.0, 1..6).prop_shuffle(),
            kind in prop::sample::select(FAMILIES.to_vec()),
        ) {
            let mut sorted = inputs.clone();
            sorted.sort_by(f64::total_cmp);
            let f = ActivationFamily::new(kind);
            for op in OPS {
                let a = op(&f, &inputs).unwrap().value;
                let b = op(&f, &sorted).unwrap().value;
                // summation order may differ in the last ulp
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn range_bounds(inputs in prop::collection::vec(-5.0f64..5.0, 1..6)) {
            let ms = ActivationFamily::max_sigmoid().eval_conj(&inputs).unwrap().value;
            prop_assert!(ms > 0.0 && ms < 1.0);
            let lo = inputs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = inputs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let g = ActivationFamily::godel();
            for op in OPS {
                let v = op(&g, &inputs).unwrap().value;
                prop_assert!(v >= lo && v <= hi);
            }
        }
    }
}
