//! Built-in function catalog: evaluation, exact gradients, deterministic
//! subgradient selection, and exact subdifferential polytopes for the
//! piecewise-affine class.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, dot};
use crate::polytope::SubdifferentialPolytope;

/// Absolute activity tolerance deciding which affine pieces are active,
/// applied after scaling by `1 + |max|`.
pub const ACTIVITY_TOL: f64 = 1e-9;

/// Maximum nesting depth of `Sum` terms accepted from user input.
pub const MAX_SUM_DEPTH: usize = 4;

/// A user-supplied function oracle. Implementations must be pure: repeated
/// calls on equal inputs must return identical values, and no hidden state
/// may be mutated, so instances can be shared across threads.
pub trait Oracle: Send + Sync {
    /// Dimension the oracle expects, if fixed.
    fn dim(&self) -> Option<usize> {
        None
    }
    fn eval(&self, x: &[f64]) -> f64;
    /// One element of the subdifferential at `x`.
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;
    /// Exact gradient when the function is smooth; `None` otherwise.
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
    /// True when `gradient` returns `Some` everywhere.
    fn smooth(&self) -> bool {
        false
    }
    /// A global Lipschitz bound on the function value, when known.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }
    fn name(&self) -> &str {
        "custom"
    }
}

/// Declarative description of a function used as one of the f/g/h parts.
///
/// `Quadratic { q, lin, c }` is `x -> 0.5 x'Qx + lin'x + c`;
/// `MaxAffine { rows, offsets }` is `x -> max_j (rows[j]'x + offsets[j])`;
/// `WeightedL1 { w }` is `x -> sum_j w_j |x_j|`.
#[derive(Clone)]
pub enum FunctionSpec {
    Zero,
    Affine { a: Vec<f64>, b: f64 },
    Quadratic { q: Vec<Vec<f64>>, lin: Vec<f64>, c: f64 },
    WeightedL1 { w: Vec<f64> },
    MaxAffine { rows: Vec<Vec<f64>>, offsets: Vec<f64> },
    Sum(Vec<FunctionSpec>),
    Custom(Arc<dyn Oracle>),
}

impl fmt::Debug for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Affine { a, b } => f.debug_struct("Affine").field("a", a).field("b", b).finish(),
            Self::Quadratic { q, lin, c } => f
                .debug_struct("Quadratic")
                .field("q", q)
                .field("lin", lin)
                .field("c", c)
                .finish(),
            Self::WeightedL1 { w } => f.debug_struct("WeightedL1").field("w", w).finish(),
            Self::MaxAffine { rows, offsets } => f
                .debug_struct("MaxAffine")
                .field("rows", rows)
                .field("offsets", offsets)
                .finish(),
            Self::Sum(terms) => f.debug_tuple("Sum").field(terms).finish(),
            Self::Custom(o) => write!(f, "Custom({})", o.name()),
        }
    }
}

impl PartialEq for FunctionSpec {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Zero, Self::Zero) => true,
            (Self::Affine { a, b }, Self::Affine { a: a2, b: b2 }) => a == a2 && b == b2,
            (
                Self::Quadratic { q, lin, c },
                Self::Quadratic { q: q2, lin: l2, c: c2 },
            ) => q == q2 && lin == l2 && c == c2,
            (Self::WeightedL1 { w }, Self::WeightedL1 { w: w2 }) => w == w2,
            (
                Self::MaxAffine { rows, offsets },
                Self::MaxAffine { rows: r2, offsets: o2 },
            ) => rows == r2 && offsets == o2,
            (Self::Sum(a), Self::Sum(b)) => a == b,
            (Self::Custom(a), Self::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl FunctionSpec {
    /// Symmetrizing constructor for quadratics. Asymmetry beyond 1e-12
    /// (relative) is an input error.
    pub fn quadratic(q: Vec<Vec<f64>>, lin: Vec<f64>, c: f64) -> Result<Self> {
        let n = lin.len();
        if q.len() != n || q.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension {
                what: "quadratic matrix",
                expected: n,
                got: q.len(),
            });
        }
        let scale = q
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()));
        let mut sym = q.clone();
        for i in 0..n {
            for j in 0..n {
                let d = (q[i][j] - q[j][i]).abs();
                if d > 1e-12 * (1.0 + scale) {
                    return Err(Error::Input(format!(
                        "quadratic matrix asymmetric at ({i},{j}) by {d:.3e}"
                    )));
                }
                sym[i][j] = 0.5 * (q[i][j] + q[j][i]);
            }
        }
        Ok(Self::Quadratic { q: sym, lin, c })
    }

    /// Fixed dimension implied by the data, if any (`Zero` fits any).
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Zero => None,
            Self::Affine { a, .. } => Some(a.len()),
            Self::Quadratic { lin, .. } => Some(lin.len()),
            Self::WeightedL1 { w } => Some(w.len()),
            Self::MaxAffine { rows, .. } => rows.first().map(|r| r.len()),
            Self::Sum(terms) => terms.iter().find_map(|t| t.dim()),
            Self::Custom(o) => o.dim(),
        }
    }

    /// Structural validation against the ambient dimension `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.validate_depth(n, 0)
    }

    fn validate_depth(&self, n: usize, depth: usize) -> Result<()> {
        match self {
            Self::Zero => Ok(()),
            Self::Affine { a, .. } => expect_dim("affine coefficient", a.len(), n),
            Self::Quadratic { q, lin, .. } => {
                expect_dim("quadratic linear term", lin.len(), n)?;
                expect_dim("quadratic matrix", q.len(), n)?;
                for row in q {
                    expect_dim("quadratic matrix row", row.len(), n)?;
                }
                let scale = q
                    .iter()
                    .flat_map(|r| r.iter())
                    .fold(0.0_f64, |m, x| m.max(x.abs()));
                for i in 0..n {
                    for j in 0..n {
                        if (q[i][j] - q[j][i]).abs() > 1e-12 * (1.0 + scale) {
                            return Err(Error::Input(
                                "quadratic matrix is not symmetric; build it via FunctionSpec::quadratic".into(),
                            ));
                        }
                    }
                }
                Ok(())
            }
            Self::WeightedL1 { w } => {
                expect_dim("l1 weights", w.len(), n)?;
                if w.iter().any(|x| *x < 0.0 || !x.is_finite()) {
                    return Err(Error::Input("l1 weights must be nonnegative".into()));
                }
                Ok(())
            }
            Self::MaxAffine { rows, offsets } => {
                if rows.is_empty() {
                    return Err(Error::Input("max_affine needs at least one row".into()));
                }
                if rows.len() != offsets.len() {
                    return Err(Error::Dimension {
                        what: "max_affine offsets",
                        expected: rows.len(),
                        got: offsets.len(),
                    });
                }
                for row in rows {
                    expect_dim("max_affine row", row.len(), n)?;
                }
                Ok(())
            }
            Self::Sum(terms) => {
                if terms.is_empty() {
                    return Err(Error::Input("sum needs at least one term".into()));
                }
                if depth + 1 > MAX_SUM_DEPTH {
                    return Err(Error::Input(format!(
                        "sum nesting deeper than {MAX_SUM_DEPTH}"
                    )));
                }
                for t in terms {
                    t.validate_depth(n, depth + 1)?;
                }
                Ok(())
            }
            Self::Custom(o) => {
                if let Some(d) = o.dim() {
                    expect_dim("custom oracle", d, n)?;
                }
                Ok(())
            }
        }
    }

    /// Exact function value.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = self.eval_inner(x)?;
        if !v.is_finite() {
            return Err(Error::Evaluation(format!(
                "non-finite value from {self:?}"
            )));
        }
        Ok(v)
    }

    fn eval_inner(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Self::Zero => 0.0,
            Self::Affine { a, b } => {
                check_dim(a.len(), x.len())?;
                dot(a, x) + b
            }
            Self::Quadratic { q, lin, c } => {
                check_dim(lin.len(), x.len())?;
                let mut v = *c + dot(lin, x);
                for (i, row) in q.iter().enumerate() {
                    v += 0.5 * x[i] * dot(row, x);
                }
                v
            }
            Self::WeightedL1 { w } => {
                check_dim(w.len(), x.len())?;
                w.iter().zip(x).map(|(wi, xi)| wi * xi.abs()).sum()
            }
            Self::MaxAffine { rows, offsets } => {
                check_dim(rows[0].len(), x.len())?;
                rows.iter()
                    .zip(offsets)
                    .map(|(r, b)| dot(r, x) + b)
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            Self::Sum(terms) => {
                let mut v = 0.0;
                for t in terms {
                    v += t.eval_inner(x)?;
                }
                v
            }
            Self::Custom(o) => o.eval(x),
        })
    }

    /// True when the spec has an exact gradient everywhere.
    pub fn is_smooth(&self) -> bool {
        match self {
            Self::Zero | Self::Affine { .. } | Self::Quadratic { .. } => true,
            Self::WeightedL1 { w } => w.iter().all(|x| *x == 0.0),
            Self::MaxAffine { rows, .. } => rows.len() == 1,
            Self::Sum(terms) => terms.iter().all(|t| t.is_smooth()),
            Self::Custom(o) => o.smooth(),
        }
    }

    /// Exact gradient. Errors with a contract violation on nonsmooth specs.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g = match self {
            Self::Zero => vec![0.0; x.len()],
            Self::Affine { a, .. } => {
                check_dim(a.len(), x.len())?;
                a.clone()
            }
            Self::Quadratic { q, lin, .. } => {
                check_dim(lin.len(), x.len())?;
                let mut out = vec![0.0; x.len()];
                for (i, row) in q.iter().enumerate() {
                    out[i] = dot(row, x) + lin[i];
                }
                out
            }
            Self::WeightedL1 { w } if w.iter().all(|x| *x == 0.0) => vec![0.0; x.len()],
            Self::MaxAffine { rows, offsets } if rows.len() == 1 => {
                let _ = offsets;
                check_dim(rows[0].len(), x.len())?;
                rows[0].clone()
            }
            Self::Sum(terms) => {
                let mut g = vec![0.0; x.len()];
                for t in terms {
                    let tg = t.gradient(x)?;
                    linalg::axpy(&mut g, 1.0, &tg);
                }
                g
            }
            Self::Custom(o) => o.gradient(x).ok_or_else(|| Error::Contract {
                op: "gradient",
                reason: "custom oracle is nonsmooth; use subgradient_select".into(),
            })?,
            _ => {
                return Err(Error::Contract {
                    op: "gradient",
                    reason: format!("{self:?} is nonsmooth; use subgradient_select"),
                })
            }
        };
        if !linalg::all_finite(&g) {
            return Err(Error::Evaluation("non-finite gradient".into()));
        }
        Ok(g)
    }

    /// A deterministic element of the convex subdifferential at `x`. At kinks
    /// the vertex average (centroid) of the exact subdifferential is returned.
    pub fn subgradient_select(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g = match self {
            Self::Zero => vec![0.0; x.len()],
            Self::Affine { a, .. } => {
                check_dim(a.len(), x.len())?;
                a.clone()
            }
            Self::Quadratic { .. } => self.gradient(x)?,
            Self::WeightedL1 { w } => {
                check_dim(w.len(), x.len())?;
                w.iter()
                    .zip(x)
                    .map(|(wi, xi)| {
                        if xi.abs() <= ACTIVITY_TOL {
                            0.0
                        } else {
                            wi * xi.signum()
                        }
                    })
                    .collect()
            }
            Self::MaxAffine { rows, offsets } => {
                check_dim(rows[0].len(), x.len())?;
                let vals: Vec<f64> = rows.iter().zip(offsets).map(|(r, b)| dot(r, x) + b).collect();
                let top = vals.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
                let tol = ACTIVITY_TOL * (1.0 + top.abs());
                let active: Vec<&Vec<f64>> = rows
                    .iter()
                    .zip(&vals)
                    .filter(|(_, v)| **v >= top - tol)
                    .map(|(r, _)| r)
                    .collect();
                // centroid of the deduplicated active rows
                let poly = SubdifferentialPolytope::from_vertices(
                    active.into_iter().cloned().collect(),
                    true,
                )?;
                poly.centroid()
            }
            Self::Sum(terms) => {
                let mut g = vec![0.0; x.len()];
                for t in terms {
                    let tg = t.subgradient_select(x)?;
                    linalg::axpy(&mut g, 1.0, &tg);
                }
                g
            }
            Self::Custom(o) => o.subgradient(x),
        };
        if !linalg::all_finite(&g) {
            return Err(Error::Evaluation("non-finite subgradient".into()));
        }
        Ok(g)
    }

    /// True when the spec is piecewise affine, the class with exact
    /// subdifferential polytopes.
    pub fn is_piecewise_affine(&self) -> bool {
        match self {
            Self::Zero | Self::Affine { .. } | Self::WeightedL1 { .. } | Self::MaxAffine { .. } => {
                true
            }
            Self::Quadratic { .. } | Self::Custom(_) => false,
            Self::Sum(terms) => terms.iter().all(|t| t.is_piecewise_affine()),
        }
    }

    /// Exact convex subdifferential at `x` for the piecewise-affine class.
    pub fn subdifferential_polytope(&self, x: &[f64]) -> Result<SubdifferentialPolytope> {
        match self {
            Self::Zero => SubdifferentialPolytope::singleton(vec![0.0; x.len()]),
            Self::Affine { a, .. } => {
                check_dim(a.len(), x.len())?;
                SubdifferentialPolytope::singleton(a.clone())
            }
            Self::WeightedL1 { w } => {
                check_dim(w.len(), x.len())?;
                // coordinate-wise interval product, expanded to vertices
                let mut kinks: Vec<usize> = Vec::new();
                let mut base: Vec<f64> = Vec::with_capacity(x.len());
                for (j, (wj, xj)) in w.iter().zip(x).enumerate() {
                    if *wj > 0.0 && xj.abs() <= ACTIVITY_TOL {
                        kinks.push(j);
                        base.push(0.0);
                    } else if *wj > 0.0 {
                        base.push(wj * xj.signum());
                    } else {
                        base.push(0.0);
                    }
                }
                if (1usize << kinks.len().min(63)) > crate::polytope::VERTEX_CAP {
                    return Err(Error::Capacity {
                        what: "l1 subdifferential vertices",
                        limit: crate::polytope::VERTEX_CAP,
                    });
                }
                let mut verts = Vec::with_capacity(1 << kinks.len());
                for mask in 0..(1usize << kinks.len()) {
                    let mut v = base.clone();
                    for (bit, &j) in kinks.iter().enumerate() {
                        v[j] = if mask & (1 << bit) != 0 { w[j] } else { -w[j] };
                    }
                    verts.push(v);
                }
                SubdifferentialPolytope::from_vertices(verts, true)
            }
            Self::MaxAffine { rows, offsets } => {
                check_dim(rows[0].len(), x.len())?;
                let vals: Vec<f64> = rows.iter().zip(offsets).map(|(r, b)| dot(r, x) + b).collect();
                let top = vals.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
                let tol = ACTIVITY_TOL * (1.0 + top.abs());
                let verts: Vec<Vec<f64>> = rows
                    .iter()
                    .zip(&vals)
                    .filter(|(_, v)| **v >= top - tol)
                    .map(|(r, _)| r.clone())
                    .collect();
                SubdifferentialPolytope::from_vertices(verts, true)
            }
            Self::Sum(terms) => {
                let mut acc: Option<SubdifferentialPolytope> = None;
                for t in terms {
                    let p = t.subdifferential_polytope(x)?;
                    acc = Some(match acc {
                        None => p,
                        Some(a) => a.minkowski(&p)?,
                    });
                }
                Ok(acc.expect("sum is nonempty"))
            }
            Self::Quadratic { .. } | Self::Custom(_) => Err(Error::Contract {
                op: "subdifferential_polytope",
                reason: format!("{self:?} is not piecewise affine"),
            }),
        }
    }

    /// Subdifferential as a vertex set for piecewise-affine or smooth specs
    /// (singleton gradient for the smooth part). Used by the inner-solver
    /// optimality certificates. `None` when neither route applies.
    pub(crate) fn subdiff_vertex_set(&self, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        if self.is_piecewise_affine() {
            return self.subdifferential_polytope(x).ok().map(|p| p.vertices().to_vec());
        }
        if let Self::Sum(terms) = self {
            let mut acc = vec![vec![0.0; x.len()]];
            for t in terms {
                let vs = t.subdiff_vertex_set(x)?;
                let mut next = Vec::with_capacity(acc.len() * vs.len());
                for a in &acc {
                    for v in &vs {
                        next.push(linalg::add(a, v));
                    }
                }
                if next.len() > crate::polytope::VERTEX_CAP {
                    return None;
                }
                acc = next;
            }
            return Some(acc);
        }
        self.gradient(x).ok().map(|g| vec![g])
    }

    /// The spec scaled by `c >= 0` (used for simplex-weighted aggregation).
    /// `None` for custom oracles, which cannot be scaled declaratively.
    pub fn scaled(&self, c: f64) -> Option<FunctionSpec> {
        if c == 0.0 {
            return Some(Self::Zero);
        }
        Some(match self {
            Self::Zero => Self::Zero,
            Self::Affine { a, b } => Self::Affine {
                a: linalg::scale(a, c),
                b: c * b,
            },
            Self::Quadratic { q, lin, c: cc } => Self::Quadratic {
                q: q.iter().map(|r| linalg::scale(r, c)).collect(),
                lin: linalg::scale(lin, c),
                c: c * cc,
            },
            Self::WeightedL1 { w } => Self::WeightedL1 {
                w: linalg::scale(w, c),
            },
            Self::MaxAffine { rows, offsets } => Self::MaxAffine {
                rows: rows.iter().map(|r| linalg::scale(r, c)).collect(),
                offsets: linalg::scale(offsets, c),
            },
            Self::Sum(terms) => {
                let mut scaled = Vec::with_capacity(terms.len());
                for t in terms {
                    scaled.push(t.scaled(c)?);
                }
                Self::Sum(scaled)
            }
            Self::Custom(_) => return None,
        })
    }

    /// Constant Hessian of the smooth part, flattened row-major, when the
    /// whole spec is smooth with constant curvature. `None` otherwise.
    pub fn hessian(&self, n: usize) -> Option<Vec<f64>> {
        match self {
            Self::Zero | Self::Affine { .. } => Some(vec![0.0; n * n]),
            Self::Quadratic { q, .. } => {
                let mut flat = vec![0.0; n * n];
                for (i, row) in q.iter().enumerate() {
                    flat[i * n..(i + 1) * n].copy_from_slice(row);
                }
                Some(flat)
            }
            Self::WeightedL1 { w } if w.iter().all(|x| *x == 0.0) => Some(vec![0.0; n * n]),
            Self::MaxAffine { rows, .. } if rows.len() == 1 => Some(vec![0.0; n * n]),
            Self::Sum(terms) => {
                let mut acc = vec![0.0; n * n];
                for t in terms {
                    let h = t.hessian(n)?;
                    for (a, b) in acc.iter_mut().zip(&h) {
                        *a += b;
                    }
                }
                Some(acc)
            }
            _ => None,
        }
    }

    /// Lipschitz bound of the gradient (spectral norm of the Hessian),
    /// computed by power iteration to relative tolerance 1e-10.
    pub fn grad_lipschitz_bound(&self, n: usize) -> Option<f64> {
        self.hessian(n)
            .map(|h| linalg::spectral_norm_sym(&h, n, 1e-10, 100_000))
    }

    /// Weak-convexity modulus for built-ins: 0 for the convex piecewise-affine
    /// variants, `max(0, -lambda_min)` of the accumulated Hessian for smooth
    /// parts. `None` when a custom oracle blocks the computation.
    pub fn weak_convexity_modulus(&self, n: usize) -> Option<f64> {
        match self {
            Self::Zero
            | Self::Affine { .. }
            | Self::WeightedL1 { .. }
            | Self::MaxAffine { .. } => Some(0.0),
            Self::Quadratic { .. } => {
                let h = self.hessian(n)?;
                Some((-linalg::min_eigenvalue_sym(&h, n, 1e-10, 100_000)).max(0.0))
            }
            Self::Sum(terms) => {
                // convex PA parts contribute nothing; pool smooth curvature
                let mut h_total = vec![0.0; n * n];
                for t in terms {
                    match t {
                        Self::Zero | Self::Affine { .. } | Self::WeightedL1 { .. } | Self::MaxAffine { .. } => {}
                        _ => {
                            let h = t.hessian(n)?;
                            for (a, b) in h_total.iter_mut().zip(&h) {
                                *a += b;
                            }
                        }
                    }
                }
                Some((-linalg::min_eigenvalue_sym(&h_total, n, 1e-10, 100_000)).max(0.0))
            }
            Self::Custom(_) => None,
        }
    }

    /// True when the built-in is convex; custom oracles report `false`
    /// (unknown).
    pub fn is_convex_builtin(&self, n: usize) -> bool {
        match self {
            Self::Zero | Self::Affine { .. } | Self::WeightedL1 { .. } | Self::MaxAffine { .. } => {
                true
            }
            Self::Quadratic { .. } => self
                .hessian(n)
                .map(|h| {
                    let lo = linalg::min_eigenvalue_sym(&h, n, 1e-10, 100_000);
                    let scale = linalg::spectral_norm_sym(&h, n, 1e-10, 100_000);
                    lo >= -1e-10 * (1.0 + scale)
                })
                .unwrap_or(false),
            Self::Sum(terms) => terms.iter().all(|t| t.is_convex_builtin(n)),
            Self::Custom(_) => false,
        }
    }

    /// Global Lipschitz bound of the function value, when one exists.
    pub fn value_lipschitz_bound(&self) -> Option<f64> {
        match self {
            Self::Zero => Some(0.0),
            Self::Affine { a, .. } => Some(linalg::norm(a)),
            Self::WeightedL1 { w } => Some(linalg::norm(w)),
            Self::MaxAffine { rows, .. } => rows
                .iter()
                .map(|r| linalg::norm(r))
                .fold(Some(0.0_f64), |acc, v| acc.map(|a| a.max(v))),
            Self::Quadratic { .. } => None,
            Self::Sum(terms) => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.value_lipschitz_bound()?;
                }
                Some(acc)
            }
            Self::Custom(o) => o.lipschitz_bound(),
        }
    }

    /// Kink hyperplanes `{x : <normal, x> + offset = 0}` of the spec, used to
    /// polish inner-solver iterates onto exact nonsmooth structure.
    pub(crate) fn kink_walls(&self, n: usize, out: &mut Vec<Wall>) {
        match self {
            Self::WeightedL1 { w } => {
                for (j, wj) in w.iter().enumerate() {
                    if *wj > 0.0 {
                        let mut normal = vec![0.0; n];
                        normal[j] = 1.0;
                        out.push(Wall { normal, offset: 0.0 });
                    }
                }
            }
            Self::MaxAffine { rows, offsets } => {
                for r in 0..rows.len() {
                    for s in r + 1..rows.len() {
                        let normal = linalg::sub(&rows[r], &rows[s]);
                        if linalg::norm(&normal) > 1e-14 {
                            out.push(Wall {
                                normal,
                                offset: offsets[r] - offsets[s],
                            });
                        }
                    }
                }
            }
            Self::Sum(terms) => {
                for t in terms {
                    t.kink_walls(n, out);
                }
            }
            _ => {}
        }
    }
}

/// An affine hyperplane `{x : <normal, x> + offset = 0}`.
#[derive(Debug, Clone)]
pub(crate) struct Wall {
    pub normal: Vec<f64>,
    pub offset: f64,
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::Dimension {
            what: "function argument",
            expected,
            got,
        })
    } else {
        Ok(())
    }
}

fn expect_dim(what: &'static str, got: usize, n: usize) -> Result<()> {
    if got != n {
        Err(Error::Dimension {
            what,
            expected: n,
            got,
        })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_1d() -> FunctionSpec {
        FunctionSpec::WeightedL1 { w: vec![1.0] }
    }

    #[test]
    fn eval_examples() {
        // weighted_l1(w=(1)) at (-3) -> 3
        assert_eq!(abs_1d().eval(&[-3.0]).unwrap(), 3.0);
        // max_affine encoding |x| at (2) -> 2
        let ma = FunctionSpec::MaxAffine {
            rows: vec![vec![1.0], vec![-1.0]],
            offsets: vec![0.0, 0.0],
        };
        assert_eq!(ma.eval(&[2.0]).unwrap(), 2.0);
        // affine(a=(2), b=0) at (-1) -> -2
        let f2 = FunctionSpec::Affine { a: vec![2.0], b: 0.0 };
        assert_eq!(f2.eval(&[-1.0]).unwrap(), -2.0);
    }

    #[test]
    fn gradient_examples() {
        let q = FunctionSpec::quadratic(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0], 0.0)
            .unwrap();
        assert_eq!(q.gradient(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);

        let aff = FunctionSpec::Affine { a: vec![2.0], b: 0.0 };
        assert_eq!(aff.gradient(&[13.7]).unwrap(), vec![2.0]);

        // hand-computed Qx + q for Q = diag(1,4), q = (1,0) at (1,1)
        let q2 = FunctionSpec::quadratic(
            vec![vec![1.0, 0.0], vec![0.0, 4.0]],
            vec![1.0, 0.0],
            0.0,
        )
        .unwrap();
        assert_eq!(q2.gradient(&[1.0, 1.0]).unwrap(), vec![2.0, 4.0]);
    }

    #[test]
    fn gradient_of_nonsmooth_is_contract_error() {
        assert!(matches!(
            abs_1d().gradient(&[0.0]),
            Err(Error::Contract { .. })
        ));
    }

    #[test]
    fn subgradient_selection() {
        // midpoint of [-1,1] at the kink
        assert_eq!(abs_1d().subgradient_select(&[0.0]).unwrap(), vec![0.0]);
        // sign selection off the kink
        assert_eq!(abs_1d().subgradient_select(&[-2.0]).unwrap(), vec![-1.0]);
        // |x|+x as max_affine rows {2, 0}: midpoint of [0,2] is 1
        let h1 = FunctionSpec::MaxAffine {
            rows: vec![vec![2.0], vec![0.0]],
            offsets: vec![0.0, 0.0],
        };
        assert_eq!(h1.subgradient_select(&[0.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn polytope_tables() {
        // |x| at 0 -> [-1, 1]
        let p = abs_1d().subdifferential_polytope(&[0.0]).unwrap();
        assert_eq!(p.interval(), Some((-1.0, 1.0)));
        // |x|+x at 0 -> [0, 2] via sum of l1 and affine
        let h1 = FunctionSpec::Sum(vec![
            abs_1d(),
            FunctionSpec::Affine { a: vec![1.0], b: 0.0 },
        ]);
        let p = h1.subdifferential_polytope(&[0.0]).unwrap();
        assert_eq!(p.interval(), Some((0.0, 2.0)));
        // affine anywhere -> {2}
        let f2 = FunctionSpec::Affine { a: vec![2.0], b: 0.0 };
        let p = f2.subdifferential_polytope(&[0.37]).unwrap();
        assert_eq!(p.interval(), Some((2.0, 2.0)));
        assert!(p.is_singleton());
    }

    #[test]
    fn polytope_of_smooth_is_contract_error() {
        let q = FunctionSpec::quadratic(vec![vec![1.0]], vec![0.0], 0.0).unwrap();
        assert!(matches!(
            q.subdifferential_polytope(&[0.0]),
            Err(Error::Contract { .. })
        ));
    }

    #[test]
    fn l1_vertex_expansion_2d() {
        let f = FunctionSpec::WeightedL1 { w: vec![1.0, 2.0] };
        let p = f.subdifferential_polytope(&[0.0, 0.0]).unwrap();
        assert_eq!(p.vertices().len(), 4);
        // every vertex has |v1| = 1, |v2| = 2
        for v in p.vertices() {
            assert_eq!(v[0].abs(), 1.0);
            assert_eq!(v[1].abs(), 2.0);
        }
    }

    #[test]
    fn scaled_specs() {
        let f = FunctionSpec::WeightedL1 { w: vec![2.0] };
        let s = f.scaled(0.5).unwrap();
        assert_eq!(s.eval(&[-3.0]).unwrap(), 3.0);
        let z = f.scaled(0.0).unwrap();
        assert_eq!(z.eval(&[5.0]).unwrap(), 0.0);
    }

    #[test]
    fn modulus_and_convexity() {
        let concave = FunctionSpec::quadratic(vec![vec![-2.0]], vec![0.0], 0.0).unwrap();
        assert!((concave.weak_convexity_modulus(1).unwrap() - 2.0).abs() < 1e-8);
        assert!(!concave.is_convex_builtin(1));
        assert_eq!(abs_1d().weak_convexity_modulus(1), Some(0.0));
        assert!(abs_1d().is_convex_builtin(1));
    }

    #[test]
    fn sum_depth_guard() {
        let mut s = FunctionSpec::Zero;
        for _ in 0..5 {
            s = FunctionSpec::Sum(vec![s]);
        }
        assert!(s.validate(1).is_err());
    }
}
