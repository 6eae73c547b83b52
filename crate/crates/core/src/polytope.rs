//! Vertex-represented convex subdifferentials and the geometric queries the
//! stationarity checkers run on them.

use crate::error::{Error, Result};
use crate::linalg::{self, dist};
use crate::qp::{Block, BlockKind, BlockQp};

/// Hard cap on vertex counts for Minkowski expansions (2^12).
pub const VERTEX_CAP: usize = 4096;

const DEDUP_TOL: f64 = 1e-12;

/// The convex subdifferential of a piecewise-affine function at a point,
/// stored as a list of vertices whose convex hull is the set. The list may
/// contain non-extreme points (e.g. every active row of a max of affine
/// functions); the implied hull is unchanged. For n = 1 the list is
/// normalized to the interval endpoints `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdifferentialPolytope {
    vertices: Vec<Vec<f64>>,
    exact: bool,
}

impl SubdifferentialPolytope {
    pub fn from_vertices(vertices: Vec<Vec<f64>>, exact: bool) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Input("polytope needs at least one vertex".into()));
        }
        let dim = vertices[0].len();
        for v in &vertices {
            if v.len() != dim {
                return Err(Error::Dimension {
                    what: "polytope vertex",
                    expected: dim,
                    got: v.len(),
                });
            }
            if !linalg::all_finite(v) {
                return Err(Error::Input("non-finite polytope vertex".into()));
            }
        }
        let mut dedup: Vec<Vec<f64>> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if !dedup.iter().any(|u| dist(u, &v) <= DEDUP_TOL) {
                dedup.push(v);
            }
        }
        let mut poly = Self {
            vertices: dedup,
            exact,
        };
        poly.normalize_interval();
        Ok(poly)
    }

    pub fn singleton(v: Vec<f64>) -> Result<Self> {
        Self::from_vertices(vec![v], true)
    }

    fn normalize_interval(&mut self) {
        if self.dim() == 1 && self.vertices.len() > 1 {
            let lo = self
                .vertices
                .iter()
                .map(|v| v[0])
                .fold(f64::INFINITY, f64::min);
            let hi = self
                .vertices
                .iter()
                .map(|v| v[0])
                .fold(f64::NEG_INFINITY, f64::max);
            self.vertices = if (hi - lo).abs() <= DEDUP_TOL {
                vec![vec![lo]]
            } else {
                vec![vec![lo], vec![hi]]
            };
        }
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// For 1-D polytopes: the interval endpoints (lo, hi).
    pub fn interval(&self) -> Option<(f64, f64)> {
        if self.dim() != 1 {
            return None;
        }
        let lo = self.vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
        let hi = self
            .vertices
            .iter()
            .map(|v| v[0])
            .fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }

    pub fn is_singleton(&self) -> bool {
        self.vertices.len() == 1
    }

    /// Vertex average, the deterministic kink tie-break element.
    pub fn centroid(&self) -> Vec<f64> {
        let n = self.dim();
        let mut c = vec![0.0; n];
        for v in &self.vertices {
            linalg::axpy(&mut c, 1.0, v);
        }
        let k = self.vertices.len() as f64;
        for x in c.iter_mut() {
            *x /= k;
        }
        c
    }

    pub fn translate(&self, shift: &[f64]) -> Self {
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|v| linalg::add(v, shift))
                .collect(),
            exact: self.exact,
        }
    }

    pub fn negate(&self) -> Self {
        let mut out = Self {
            vertices: self.vertices.iter().map(|v| linalg::scale(v, -1.0)).collect(),
            exact: self.exact,
        };
        out.normalize_interval();
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = Self {
            vertices: self.vertices.iter().map(|v| linalg::scale(v, c)).collect(),
            exact: self.exact,
        };
        out.normalize_interval();
        out
    }

    /// Minkowski sum by pairwise vertex addition, guarded by `VERTEX_CAP`.
    pub fn minkowski(&self, other: &Self) -> Result<Self> {
        if self.vertices.len().saturating_mul(other.vertices.len()) > VERTEX_CAP {
            return Err(Error::Capacity {
                what: "Minkowski sum vertices",
                limit: VERTEX_CAP,
            });
        }
        let mut verts = Vec::with_capacity(self.vertices.len() * other.vertices.len());
        for a in &self.vertices {
            for b in &other.vertices {
                verts.push(linalg::add(a, b));
            }
        }
        let exact = self.exact && other.exact;
        Self::from_vertices(verts, exact)
    }
}

/// Result of a least-norm query against `conv(union of groups) + cone`.
#[derive(Debug, Clone)]
pub(crate) struct PolytopeDistance {
    pub distance: f64,
    /// Total hull weight landing in each group.
    pub group_weights: Vec<f64>,
    /// Convex combination achieved inside each group (centroid for groups
    /// with zero weight).
    pub group_points: Vec<Vec<f64>>,
    /// Contribution of the cone generators and lineality directions.
    pub cone_point: Vec<f64>,
    /// The optimal element of the queried set.
    pub achieved: Vec<f64>,
    pub kkt_residual: f64,
}

/// Distance from `point` to `conv(v : v in any group) + pos(generators) +
/// span(lineality)`, with the witnessing combination, solved as a block QP.
pub(crate) fn distance_to_point(
    groups: &[&[Vec<f64>]],
    generators: &[Vec<f64>],
    lineality: &[Vec<f64>],
    point: &[f64],
) -> PolytopeDistance {
    let n = point.len();
    let total_verts: usize = groups.iter().map(|g| g.len()).sum();
    debug_assert!(total_verts > 0, "distance query needs at least one vertex");

    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(total_verts + generators.len() + lineality.len());
    for g in groups {
        cols.extend(g.iter().cloned());
    }
    cols.extend(generators.iter().cloned());
    cols.extend(lineality.iter().cloned());

    let mut blocks = vec![Block {
        kind: BlockKind::Simplex,
        len: total_verts,
    }];
    if !generators.is_empty() {
        blocks.push(Block {
            kind: BlockKind::NonNeg,
            len: generators.len(),
        });
    }
    if !lineality.is_empty() {
        blocks.push(Block {
            kind: BlockKind::Free,
            len: lineality.len(),
        });
    }

    let scale = cols
        .iter()
        .chain(std::iter::once(&point.to_vec()))
        .flat_map(|v| v.iter())
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    let qp_tol = 1e-11 * (1.0 + scale);

    let qp = BlockQp {
        cols: &cols,
        target: point,
        lin: None,
        blocks: &blocks,
    };
    let sol = qp.solve(qp_tol, 100_000);

    let mut group_weights = Vec::with_capacity(groups.len());
    let mut group_points = Vec::with_capacity(groups.len());
    let mut off = 0usize;
    for g in groups {
        let w: f64 = sol.z[off..off + g.len()].iter().sum();
        let mut p = vec![0.0; n];
        if w > 1e-300 {
            for (v, zi) in g.iter().zip(&sol.z[off..off + g.len()]) {
                linalg::axpy(&mut p, zi / w, v);
            }
        } else {
            // centroid placeholder; weight zero means it does not contribute
            for v in g.iter() {
                linalg::axpy(&mut p, 1.0 / g.len() as f64, v);
            }
        }
        group_weights.push(w);
        group_points.push(p);
        off += g.len();
    }
    let mut cone_point = vec![0.0; n];
    for (c, zi) in cols[total_verts..].iter().zip(&sol.z[total_verts..]) {
        linalg::axpy(&mut cone_point, *zi, c);
    }

    PolytopeDistance {
        distance: dist(&sol.combination, point),
        group_weights,
        group_points,
        cone_point,
        achieved: sol.combination,
        kkt_residual: sol.kkt_residual,
    }
}

/// Distance from `point` to a single polytope plus cone.
pub(crate) fn membership_distance(
    vertices: &[Vec<f64>],
    generators: &[Vec<f64>],
    lineality: &[Vec<f64>],
    point: &[f64],
) -> f64 {
    distance_to_point(&[vertices], generators, lineality, point).distance
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(vs: &[&[f64]]) -> SubdifferentialPolytope {
        SubdifferentialPolytope::from_vertices(vs.iter().map(|v| v.to_vec()).collect(), true)
            .unwrap()
    }

    #[test]
    fn interval_normalization() {
        let p = poly(&[&[1.0], &[-1.0], &[0.5]]);
        assert_eq!(p.interval(), Some((-1.0, 1.0)));
        assert_eq!(p.vertices().len(), 2);
    }

    #[test]
    fn minkowski_of_intervals() {
        // [-1,1] + {1} = [0,2]
        let a = poly(&[&[-1.0], &[1.0]]);
        let b = poly(&[&[1.0]]);
        let s = a.minkowski(&b).unwrap();
        assert_eq!(s.interval(), Some((0.0, 2.0)));
    }

    #[test]
    fn dedup_and_centroid() {
        let p = poly(&[&[2.0], &[0.0], &[2.0]]);
        assert_eq!(p.vertices().len(), 2);
        assert_eq!(p.centroid(), vec![1.0]);
    }

    #[test]
    fn capacity_guard() {
        let big: Vec<Vec<f64>> = (0..80).map(|i| vec![i as f64, 0.0]).collect();
        let a = SubdifferentialPolytope::from_vertices(big.clone(), true).unwrap();
        let b = SubdifferentialPolytope::from_vertices(big, true).unwrap();
        assert!(matches!(a.minkowski(&b), Err(Error::Capacity { .. })));
    }

    #[test]
    fn distance_with_groups_recovers_weights() {
        // group 0: interval [-3,1] (contains 0), group 1: {5}
        let g0 = vec![vec![-3.0], vec![1.0]];
        let g1 = vec![vec![5.0]];
        let d = distance_to_point(&[&g0, &g1], &[], &[], &[0.0]);
        assert!(d.distance < 1e-9, "distance {}", d.distance);
        let sum: f64 = d.group_weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        // achieved point equals sum of weighted group points
        let mut acc = 0.0;
        for (w, p) in d.group_weights.iter().zip(&d.group_points) {
            acc += w * p[0];
        }
        assert!((acc - d.achieved[0]).abs() < 1e-9);
    }

    #[test]
    fn membership_with_cone() {
        // segment x=2 plus the cone pointing in -x reaches the origin
        let verts = vec![vec![2.0, 1.0], vec![2.0, -1.0]];
        let gens = vec![vec![-1.0, 0.0]];
        let d = membership_distance(&verts, &gens, &[], &[0.0, 0.0]);
        assert!(d < 1e-8, "d = {d}");
        let d2 = membership_distance(&verts, &[], &[], &[0.0, 0.0]);
        assert!((d2 - 2.0).abs() < 1e-8);
    }
}
