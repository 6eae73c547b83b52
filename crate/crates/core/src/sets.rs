//! Feasible-set catalog: membership, Euclidean projection, and polyhedral
//! normal-cone representation at a point. All variants are convex, so the
//! regular and limiting normal cones coincide and projections are unique.

use crate::error::{Error, Result};
use crate::linalg::{self, dot};

/// Default activity tolerance for normal-cone generators. Looser than the
/// subdifferential activity tolerance because query points arrive from an
/// iterative solver.
pub const NORMAL_CONE_TOL: f64 = 1e-7;

const DYKSTRA_TOL: f64 = 1e-10;
const DYKSTRA_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSetSpec {
    WholeSpace,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Simplex { scale: f64 },
    /// Intersection of halfspaces `<rows[l], x> <= offsets[l]`.
    Halfspaces { rows: Vec<Vec<f64>>, offsets: Vec<f64> },
}

/// Finitely generated normal cone: `pos(generators) + span(lineality)`.
/// For the whole space the cone is `{0}` (both lists empty).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalConeRep {
    pub generators: Vec<Vec<f64>>,
    pub lineality: Vec<Vec<f64>>,
}

impl NormalConeRep {
    pub fn zero() -> Self {
        Self {
            generators: Vec::new(),
            lineality: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.generators.is_empty() && self.lineality.is_empty()
    }
}

impl FeasibleSetSpec {
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::WholeSpace | Self::Simplex { .. } => None,
            Self::Box { lo, .. } => Some(lo.len()),
            Self::Ball { center, .. } => Some(center.len()),
            Self::Halfspaces { rows, .. } => rows.first().map(|r| r.len()),
        }
    }

    /// Structural validation; certifies halfspace regions nonempty by one
    /// projection from the origin succeeding.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Self::WholeSpace => Ok(()),
            Self::Box { lo, hi } => {
                if lo.len() != n || hi.len() != n {
                    return Err(Error::Dimension {
                        what: "box bounds",
                        expected: n,
                        got: lo.len().max(hi.len()),
                    });
                }
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(Error::Input("box has lo > hi".into()));
                }
                Ok(())
            }
            Self::Ball { center, radius } => {
                if center.len() != n {
                    return Err(Error::Dimension {
                        what: "ball center",
                        expected: n,
                        got: center.len(),
                    });
                }
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::Input("ball radius must be positive".into()));
                }
                Ok(())
            }
            Self::Simplex { scale } => {
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(Error::Input("simplex scale must be positive".into()));
                }
                Ok(())
            }
            Self::Halfspaces { rows, offsets } => {
                if rows.is_empty() {
                    return Err(Error::Input("halfspaces need at least one row".into()));
                }
                if rows.len() != offsets.len() {
                    return Err(Error::Dimension {
                        what: "halfspace offsets",
                        expected: rows.len(),
                        got: offsets.len(),
                    });
                }
                for r in rows {
                    if r.len() != n {
                        return Err(Error::Dimension {
                            what: "halfspace row",
                            expected: n,
                            got: r.len(),
                        });
                    }
                    if linalg::norm(r) <= 1e-14 {
                        return Err(Error::Input("halfspace row is numerically zero".into()));
                    }
                }
                // nonemptiness certificate
                self.project(&vec![0.0; n])?;
                Ok(())
            }
        }
    }

    /// True iff `x` violates no defining inequality by more than `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            Self::WholeSpace => true,
            Self::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(xi, (l, h))| *xi >= l - tol && *xi <= h + tol),
            Self::Ball { center, radius } => linalg::dist(x, center) <= radius + tol,
            Self::Simplex { scale } => {
                x.iter().all(|xi| *xi >= -tol)
                    && (x.iter().sum::<f64>() - scale).abs() <= tol
            }
            Self::Halfspaces { rows, offsets } => rows
                .iter()
                .zip(offsets)
                .all(|(r, b)| dot(r, x) <= b + tol),
        }
    }

    /// Euclidean projection onto the set. Closed form for box/ball/simplex;
    /// Dykstra's alternating projections for halfspace intersections.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::WholeSpace => Ok(x.to_vec()),
            Self::Box { lo, hi } => Ok(x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(xi, (l, h))| xi.max(*l).min(*h))
                .collect()),
            Self::Ball { center, radius } => {
                let d = linalg::dist(x, center);
                if d <= *radius {
                    Ok(x.to_vec())
                } else {
                    let t = radius / d;
                    Ok(center
                        .iter()
                        .zip(x)
                        .map(|(c, xi)| c + t * (xi - c))
                        .collect())
                }
            }
            Self::Simplex { scale } => Ok(linalg::project_simplex(x, *scale)),
            Self::Halfspaces { rows, offsets } => {
                let mut z = x.to_vec();
                let mut corrections = vec![vec![0.0; x.len()]; rows.len()];
                let mut residual = f64::INFINITY;
                for _cycle in 0..DYKSTRA_CAP {
                    let z_prev = z.clone();
                    for (l, (r, b)) in rows.iter().zip(offsets).enumerate() {
                        let y = linalg::add(&z, &corrections[l]);
                        let znew = project_halfspace(&y, r, *b);
                        corrections[l] = linalg::sub(&y, &znew);
                        z = znew;
                    }
                    let movement = linalg::dist(&z, &z_prev);
                    let violation = rows
                        .iter()
                        .zip(offsets)
                        .map(|(r, b)| (dot(r, &z) - b).max(0.0))
                        .fold(0.0_f64, f64::max);
                    residual = movement + violation;
                    if residual <= DYKSTRA_TOL {
                        return Ok(z);
                    }
                }
                Err(Error::Convergence {
                    what: "Dykstra projection",
                    residual,
                    iterations: DYKSTRA_CAP,
                })
            }
        }
    }

    /// Exact normal cone of the convex set at a feasible point.
    pub fn normal_cone(&self, x: &[f64], tol: f64) -> Result<NormalConeRep> {
        if !self.contains(x, tol.max(1e-9)) {
            return Err(Error::Precondition(format!(
                "normal_cone query point is infeasible (tol {tol:.1e})"
            )));
        }
        let n = x.len();
        let mut cone = NormalConeRep::zero();
        match self {
            Self::WholeSpace => {}
            Self::Box { lo, hi } => {
                for j in 0..n {
                    let at_lo = x[j] <= lo[j] + tol;
                    let at_hi = x[j] >= hi[j] - tol;
                    if at_lo && at_hi {
                        cone.lineality.push(unit(n, j, 1.0));
                    } else if at_lo {
                        cone.generators.push(unit(n, j, -1.0));
                    } else if at_hi {
                        cone.generators.push(unit(n, j, 1.0));
                    }
                }
            }
            Self::Ball { center, radius } => {
                let d = linalg::dist(x, center);
                if d >= radius - tol {
                    cone.generators.push(linalg::sub(x, center));
                }
            }
            Self::Simplex { scale } => {
                cone.lineality.push(vec![1.0; n]);
                for j in 0..n {
                    if x[j] <= tol * scale.max(1.0) {
                        cone.generators.push(unit(n, j, -1.0));
                    }
                }
            }
            Self::Halfspaces { rows, offsets } => {
                for (r, b) in rows.iter().zip(offsets) {
                    let slack = b - dot(r, x);
                    if slack <= tol * (1.0 + b.abs()) {
                        cone.generators.push(r.clone());
                    }
                }
            }
        }
        Ok(cone)
    }

    /// An axis-aligned box enclosing the set, when one is implied by the data.
    pub fn bounding_box(&self, n: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Self::WholeSpace | Self::Halfspaces { .. } => None,
            Self::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            Self::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            Self::Simplex { scale } => Some((vec![0.0; n], vec![*scale; n])),
        }
    }

    /// Boundary hyperplanes near enough to matter for polishing: each as
    /// `(normal, offset)` with the wall `{x : <normal, x> + offset = 0}`.
    pub(crate) fn facet_walls(&self, n: usize, out: &mut Vec<crate::funcs::Wall>) {
        use crate::funcs::Wall;
        match self {
            Self::WholeSpace | Self::Ball { .. } => {}
            Self::Box { lo, hi } => {
                for j in 0..n {
                    out.push(Wall { normal: unit(n, j, 1.0), offset: -lo[j] });
                    out.push(Wall { normal: unit(n, j, 1.0), offset: -hi[j] });
                }
            }
            Self::Simplex { scale } => {
                out.push(Wall { normal: vec![1.0; n], offset: -scale });
                for j in 0..n {
                    out.push(Wall { normal: unit(n, j, 1.0), offset: 0.0 });
                }
            }
            Self::Halfspaces { rows, offsets } => {
                for (r, b) in rows.iter().zip(offsets) {
                    out.push(Wall { normal: r.clone(), offset: -b });
                }
            }
        }
    }

    /// Clip the line `p + t*d` to the set, returning a feasible `t` interval
    /// within `[t_lo, t_hi]`, or `None` if empty. For the ball this is the
    /// exact chord; polyhedral variants clip each inequality.
    pub(crate) fn clip_line(
        &self,
        p: &[f64],
        d: &[f64],
        mut t_lo: f64,
        mut t_hi: f64,
    ) -> Option<(f64, f64)> {
        match self {
            Self::WholeSpace => Some((t_lo, t_hi)),
            Self::Box { lo, hi } => {
                for j in 0..p.len() {
                    let (a, b) = (d[j], p[j]);
                    if a.abs() < 1e-16 {
                        if b < lo[j] - 1e-12 || b > hi[j] + 1e-12 {
                            return None;
                        }
                        continue;
                    }
                    let mut t1 = (lo[j] - b) / a;
                    let mut t2 = (hi[j] - b) / a;
                    if t1 > t2 {
                        std::mem::swap(&mut t1, &mut t2);
                    }
                    t_lo = t_lo.max(t1);
                    t_hi = t_hi.min(t2);
                }
                (t_lo <= t_hi).then_some((t_lo, t_hi))
            }
            Self::Ball { center, radius } => {
                // ||p + t d - c||^2 = r^2
                let pc = linalg::sub(p, center);
                let aa = linalg::norm_sq(d);
                let bb = 2.0 * dot(&pc, d);
                let cc = linalg::norm_sq(&pc) - radius * radius;
                if aa < 1e-16 {
                    return (cc <= 0.0).then_some((t_lo, t_hi));
                }
                let disc = bb * bb - 4.0 * aa * cc;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                let t1 = (-bb - s) / (2.0 * aa);
                let t2 = (-bb + s) / (2.0 * aa);
                t_lo = t_lo.max(t1);
                t_hi = t_hi.min(t2);
                (t_lo <= t_hi).then_some((t_lo, t_hi))
            }
            Self::Simplex { scale } => {
                // x >= 0 and sum = scale
                let sp: f64 = p.iter().sum();
                let sd: f64 = d.iter().sum();
                if sd.abs() > 1e-14 {
                    let t_eq = (scale - sp) / sd;
                    t_lo = t_lo.max(t_eq);
                    t_hi = t_hi.min(t_eq);
                } else if (sp - scale).abs() > 1e-10 {
                    return None;
                }
                for j in 0..p.len() {
                    if d[j].abs() < 1e-16 {
                        if p[j] < -1e-12 {
                            return None;
                        }
                        continue;
                    }
                    let t0 = -p[j] / d[j];
                    if d[j] > 0.0 {
                        t_lo = t_lo.max(t0);
                    } else {
                        t_hi = t_hi.min(t0);
                    }
                }
                (t_lo <= t_hi).then_some((t_lo, t_hi))
            }
            Self::Halfspaces { rows, offsets } => {
                for (r, b) in rows.iter().zip(offsets) {
                    let rd = dot(r, d);
                    let rp = dot(r, p);
                    if rd.abs() < 1e-16 {
                        if rp > b + 1e-10 {
                            return None;
                        }
                        continue;
                    }
                    let t0 = (b - rp) / rd;
                    if rd > 0.0 {
                        t_hi = t_hi.min(t0);
                    } else {
                        t_lo = t_lo.max(t0);
                    }
                }
                (t_lo <= t_hi).then_some((t_lo, t_hi))
            }
        }
    }
}

fn project_halfspace(x: &[f64], row: &[f64], offset: f64) -> Vec<f64> {
    let v = dot(row, x);
    if v <= offset {
        x.to_vec()
    } else {
        let t = (v - offset) / linalg::norm_sq(row);
        x.iter().zip(row).map(|(xi, ri)| xi - t * ri).collect()
    }
}

fn unit(n: usize, j: usize, sign: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = sign;
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contains_examples() {
        let b = FeasibleSetSpec::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
        assert!(b.contains(&[0.5, 0.5], 1e-9));
        let ball = FeasibleSetSpec::Ball { center: vec![0.0, 0.0], radius: 1.0 };
        assert!(!ball.contains(&[2.0, 0.0], 1e-9));
        assert!(FeasibleSetSpec::WholeSpace.contains(&[1e9, -1e9], 1e-9));
    }

    #[test]
    fn projection_examples() {
        let s = FeasibleSetSpec::Simplex { scale: 1.0 };
        let p = s.project(&[0.5, 0.5, 0.5]).unwrap();
        for c in &p {
            assert!((c - 1.0 / 3.0).abs() < 1e-12);
        }
        let b = FeasibleSetSpec::Box { lo: vec![0.0], hi: vec![1.0] };
        assert_eq!(b.project(&[-2.0]).unwrap(), vec![0.0]);
        // radial scaling: (3,4) -> (0.6, 0.8)
        let ball = FeasibleSetSpec::Ball { center: vec![0.0, 0.0], radius: 1.0 };
        let p = ball.project(&[3.0, 4.0]).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-12 && (p[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn dykstra_matches_single_halfspace_closed_form() {
        let hs = FeasibleSetSpec::Halfspaces {
            rows: vec![vec![1.0, 1.0]],
            offsets: vec![1.0],
        };
        let p = hs.project(&[1.0, 1.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-9 && (p[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn dykstra_two_halfspaces() {
        // x <= 0 and y <= 0: projection of (1,1) is the origin
        let hs = FeasibleSetSpec::Halfspaces {
            rows: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            offsets: vec![0.0, 0.0],
        };
        let p = hs.project(&[1.0, 1.0]).unwrap();
        assert!(linalg::norm(&p) < 1e-9);
    }

    #[test]
    fn normal_cone_examples() {
        let w = FeasibleSetSpec::WholeSpace;
        assert!(w.normal_cone(&[0.3], NORMAL_CONE_TOL).unwrap().is_zero());

        let b = FeasibleSetSpec::Box { lo: vec![0.0], hi: vec![1.0] };
        let c = b.normal_cone(&[0.0], NORMAL_CONE_TOL).unwrap();
        assert_eq!(c.generators, vec![vec![-1.0]]);

        let ball = FeasibleSetSpec::Ball { center: vec![0.0, 0.0], radius: 1.0 };
        let c = ball.normal_cone(&[1.0, 0.0], NORMAL_CONE_TOL).unwrap();
        assert_eq!(c.generators, vec![vec![1.0, 0.0]]);

        // infeasible point is a precondition error
        assert!(b.normal_cone(&[2.0], NORMAL_CONE_TOL).is_err());
    }

    #[test]
    fn pinned_box_coordinate_gives_lineality() {
        let b = FeasibleSetSpec::Box { lo: vec![1.0], hi: vec![1.0] };
        let c = b.normal_cone(&[1.0], NORMAL_CONE_TOL).unwrap();
        assert_eq!(c.lineality, vec![vec![1.0]]);
        assert!(c.generators.is_empty());
    }

    #[test]
    fn simplex_cone_structure() {
        let s = FeasibleSetSpec::Simplex { scale: 1.0 };
        let c = s.normal_cone(&[0.0, 1.0], NORMAL_CONE_TOL).unwrap();
        assert_eq!(c.lineality, vec![vec![1.0, 1.0]]);
        assert_eq!(c.generators, vec![vec![-1.0, 0.0]]);
    }

    #[test]
    fn halfspace_nonempty_certification() {
        let hs = FeasibleSetSpec::Halfspaces {
            rows: vec![vec![1.0], vec![-1.0]],
            offsets: vec![1.0, 1.0],
        };
        assert!(hs.validate(1).is_ok());
    }

    #[test]
    fn clip_line_on_ball() {
        let ball = FeasibleSetSpec::Ball { center: vec![0.0, 0.0], radius: 1.0 };
        let (lo, hi) = ball
            .clip_line(&[0.0, 0.0], &[1.0, 0.0], -10.0, 10.0)
            .unwrap();
        assert!((lo + 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }
}
