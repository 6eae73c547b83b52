//! Problem data and the constants that gate the step-size rule.
//!
//! An instance holds `m >= 1` objectives, each a triple `(f, g, h)` with
//! objective value `F_i = f_i + g_i - h_i`: `f_i` locally Lipschitz (convex
//! for built-ins), `g_i` differentiable with an `ell`-Lipschitz gradient, and
//! `h_i` weakly convex with modulus at most `beta`. The constants are global
//! across objectives; reduce per-objective constants to their maxima before
//! construction (`derive_constants` does this for built-ins).

use crate::error::{Error, Result};
use crate::funcs::FunctionSpec;
use crate::linalg;
use crate::sets::FeasibleSetSpec;

/// A point of the decision space. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if !linalg::all_finite(&coords) {
            return Err(Error::Input("point has non-finite coordinates".into()));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// One objective `F = f + g - h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveTriple {
    pub f: FunctionSpec,
    pub g: FunctionSpec,
    pub h: FunctionSpec,
}

/// An immutable problem instance. Oracles must be pure, so instances may be
/// shared by concurrent solver runs without synchronization.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    n: usize,
    objectives: Vec<ObjectiveTriple>,
    set: FeasibleSetSpec,
    ell: f64,
    beta: f64,
}

impl ProblemInstance {
    pub fn new(
        n: usize,
        objectives: Vec<ObjectiveTriple>,
        set: FeasibleSetSpec,
        ell: f64,
        beta: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("dimension must be positive".into()));
        }
        if objectives.is_empty() {
            return Err(Error::Input("at least one objective is required".into()));
        }
        if !(ell >= 0.0) || !ell.is_finite() {
            return Err(Error::Input("ell must be a nonnegative real".into()));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::Input("beta must be a nonnegative real".into()));
        }
        for (i, t) in objectives.iter().enumerate() {
            t.f.validate(n)
                .map_err(|e| Error::Input(format!("objective {i}, f: {e}")))?;
            t.g.validate(n)
                .map_err(|e| Error::Input(format!("objective {i}, g: {e}")))?;
            t.h.validate(n)
                .map_err(|e| Error::Input(format!("objective {i}, h: {e}")))?;
            if !t.g.is_smooth() {
                return Err(Error::Contract {
                    op: "ProblemInstance::new",
                    reason: format!("objective {i}: g must support exact gradients"),
                });
            }
        }
        set.validate(n)?;
        Ok(Self {
            n,
            objectives,
            set,
            ell,
            beta,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_objectives(&self) -> usize {
        self.objectives.len()
    }

    pub fn objectives(&self) -> &[ObjectiveTriple] {
        &self.objectives
    }

    pub fn set(&self) -> &FeasibleSetSpec {
        &self.set
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `F_i(x) = f_i(x) + g_i(x) - h_i(x)`, composed exactly from the three
    /// oracles. `i` is zero-based.
    pub fn evaluate_objective(&self, i: usize, x: &Point) -> Result<f64> {
        let t = self.objectives.get(i).ok_or_else(|| {
            Error::Input(format!(
                "objective index {i} out of range (m = {})",
                self.objectives.len()
            ))
        })?;
        if x.dim() != self.n {
            return Err(Error::Dimension {
                what: "evaluate_objective point",
                expected: self.n,
                got: x.dim(),
            });
        }
        let v = t.f.eval(x.coords())? + t.g.eval(x.coords())? - t.h.eval(x.coords())?;
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("F_{i} is non-finite at {x:?}")));
        }
        Ok(v)
    }

    /// All objective values at `x`.
    pub fn evaluate_all(&self, x: &Point) -> Result<Vec<f64>> {
        (0..self.objectives.len())
            .map(|i| self.evaluate_objective(i, x))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// User oracle: correctness of the declared constant is the caller's
    /// responsibility.
    Unverified,
}

#[derive(Debug, Clone)]
pub struct ObjectiveConstantsReport {
    pub index: usize,
    pub g_status: CheckStatus,
    /// Computed Lipschitz bound of the gradient of g, when available.
    pub g_bound: Option<f64>,
    pub h_status: CheckStatus,
    /// Computed weak-convexity modulus of h, when available.
    pub h_bound: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ConstantsReport {
    pub objectives: Vec<ObjectiveConstantsReport>,
}

impl ConstantsReport {
    pub fn all_passed(&self) -> bool {
        self.objectives
            .iter()
            .all(|o| o.g_status != CheckStatus::Fail && o.h_status != CheckStatus::Fail)
    }
}

/// Certify `ell` and `beta` against the built-in oracles: for smooth g the
/// spectral norm of the accumulated Hessian (power iteration, relative
/// tolerance 1e-10), for h the weak-convexity modulus. Report-only; user
/// oracles are marked unverified with a note.
pub fn validate_constants(p: &ProblemInstance) -> ConstantsReport {
    let n = p.n();
    let tol = 1e-9;
    let mut objectives = Vec::with_capacity(p.num_objectives());
    for (i, t) in p.objectives().iter().enumerate() {
        let mut notes = Vec::new();
        let g_bound = t.g.grad_lipschitz_bound(n);
        let g_status = match g_bound {
            Some(b) => {
                if p.ell() >= b - tol * (1.0 + b) {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                }
            }
            None => {
                notes.push(format!("objective {i}: g is a user oracle, ell unverified"));
                CheckStatus::Unverified
            }
        };
        let h_bound = t.h.weak_convexity_modulus(n);
        let h_status = match h_bound {
            Some(b) => {
                if p.beta() >= b - tol * (1.0 + b) {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                }
            }
            None => {
                notes.push(format!("objective {i}: h is a user oracle, beta unverified"));
                CheckStatus::Unverified
            }
        };
        objectives.push(ObjectiveConstantsReport {
            index: i,
            g_status,
            g_bound,
            h_status,
            h_bound,
            notes,
        });
    }
    ConstantsReport { objectives }
}

/// Derive global `(ell, beta)` as the maxima of per-objective bounds. Errors
/// when any objective hides a user oracle, since no finite procedure
/// certifies those.
pub fn derive_constants(objectives: &[ObjectiveTriple], n: usize) -> Result<(f64, f64)> {
    let mut ell = 0.0_f64;
    let mut beta = 0.0_f64;
    for (i, t) in objectives.iter().enumerate() {
        let gb = t.g.grad_lipschitz_bound(n).ok_or_else(|| {
            Error::Input(format!(
                "objective {i}: g is a user oracle; explicit ell is required"
            ))
        })?;
        let hb = t.h.weak_convexity_modulus(n).ok_or_else(|| {
            Error::Input(format!(
                "objective {i}: h is a user oracle; explicit beta is required"
            ))
        })?;
        ell = ell.max(gb);
        beta = beta.max(hb);
    }
    Ok((ell, beta))
}

/// The paper's counterexample instance: `f_1 = |x|`, `f_2 = 2x`,
/// `h_1 = |x| + x`, `h_2 = |x|`, `g = 0`, over the given set.
pub fn example1_instance(set: FeasibleSetSpec) -> ProblemInstance {
    let abs = FunctionSpec::WeightedL1 { w: vec![1.0] };
    let obj1 = ObjectiveTriple {
        f: abs.clone(),
        g: FunctionSpec::Zero,
        h: FunctionSpec::Sum(vec![
            abs.clone(),
            FunctionSpec::Affine { a: vec![1.0], b: 0.0 },
        ]),
    };
    let obj2 = ObjectiveTriple {
        f: FunctionSpec::Affine { a: vec![2.0], b: 0.0 },
        g: FunctionSpec::Zero,
        h: abs,
    };
    ProblemInstance::new(1, vec![obj1, obj2], set, 0.0, 0.0).expect("static instance is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_objective_values() {
        let p = example1_instance(FeasibleSetSpec::WholeSpace);
        // F_1(2) = -2 and F_2(-1) = -3
        let x = Point::new(vec![2.0]).unwrap();
        assert_eq!(p.evaluate_objective(0, &x).unwrap(), -2.0);
        let x = Point::new(vec![-1.0]).unwrap();
        assert_eq!(p.evaluate_objective(1, &x).unwrap(), -3.0);
    }

    #[test]
    fn zero_functions_evaluate_to_zero() {
        let t = ObjectiveTriple {
            f: FunctionSpec::Zero,
            g: FunctionSpec::Zero,
            h: FunctionSpec::Zero,
        };
        let p = ProblemInstance::new(3, vec![t], FeasibleSetSpec::WholeSpace, 0.0, 0.0).unwrap();
        let x = Point::new(vec![0.3, -4.0, 11.0]).unwrap();
        assert_eq!(p.evaluate_objective(0, &x).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_is_deterministic() {
        let p = example1_instance(FeasibleSetSpec::WholeSpace);
        let x = Point::new(vec![0.7071067811865476]).unwrap();
        let a = p.evaluate_objective(1, &x).unwrap();
        let b = p.evaluate_objective(1, &x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let p = example1_instance(FeasibleSetSpec::WholeSpace);
        let x = Point::new(vec![1.0, 2.0]).unwrap();
        assert!(p.evaluate_objective(0, &x).is_err());
        assert!(p.evaluate_objective(7, &Point::new(vec![0.0]).unwrap()).is_err());
    }

    #[test]
    fn validate_constants_identity_hessian() {
        let g = FunctionSpec::quadratic(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0], 0.0)
            .unwrap();
        let t = ObjectiveTriple { f: FunctionSpec::Zero, g, h: FunctionSpec::Zero };
        let p = ProblemInstance::new(2, vec![t], FeasibleSetSpec::WholeSpace, 1.0, 0.0).unwrap();
        let r = validate_constants(&p);
        assert_eq!(r.objectives[0].g_status, CheckStatus::Pass);
        assert!((r.objectives[0].g_bound.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn validate_constants_catches_small_ell() {
        let g = FunctionSpec::quadratic(vec![vec![1.0, 0.0], vec![0.0, 4.0]], vec![0.0, 0.0], 0.0)
            .unwrap();
        let t = ObjectiveTriple { f: FunctionSpec::Zero, g, h: FunctionSpec::Zero };
        let p = ProblemInstance::new(2, vec![t], FeasibleSetSpec::WholeSpace, 2.0, 0.0).unwrap();
        let r = validate_constants(&p);
        assert_eq!(r.objectives[0].g_status, CheckStatus::Fail);
        assert!((r.objectives[0].g_bound.unwrap() - 4.0).abs() < 1e-8);
        assert!(!r.all_passed());
    }

    #[test]
    fn convex_h_passes_with_beta_zero() {
        let t = ObjectiveTriple {
            f: FunctionSpec::Zero,
            g: FunctionSpec::Zero,
            h: FunctionSpec::WeightedL1 { w: vec![1.0] },
        };
        let p = ProblemInstance::new(1, vec![t], FeasibleSetSpec::WholeSpace, 0.0, 0.0).unwrap();
        let r = validate_constants(&p);
        assert_eq!(r.objectives[0].h_status, CheckStatus::Pass);
        assert_eq!(r.objectives[0].h_bound, Some(0.0));
    }

    #[test]
    fn derive_constants_takes_maxima() {
        let g1 = FunctionSpec::quadratic(vec![vec![2.0]], vec![0.0], 0.0).unwrap();
        let g2 = FunctionSpec::quadratic(vec![vec![5.0]], vec![0.0], 0.0).unwrap();
        let h2 = FunctionSpec::quadratic(vec![vec![-3.0]], vec![0.0], 0.0).unwrap();
        let objs = vec![
            ObjectiveTriple { f: FunctionSpec::Zero, g: g1, h: FunctionSpec::Zero },
            ObjectiveTriple { f: FunctionSpec::Zero, g: g2, h: h2 },
        ];
        let (ell, beta) = derive_constants(&objs, 1).unwrap();
        assert!((ell - 5.0).abs() < 1e-9);
        assert!((beta - 3.0).abs() < 1e-9);
    }

    #[test]
    fn nonsmooth_g_rejected() {
        let t = ObjectiveTriple {
            f: FunctionSpec::Zero,
            g: FunctionSpec::WeightedL1 { w: vec![1.0] },
            h: FunctionSpec::Zero,
        };
        assert!(ProblemInstance::new(1, vec![t], FeasibleSetSpec::WholeSpace, 0.0, 0.0).is_err());
    }
}
