//! Dense convex QP over products of simplices, nonnegative orthants and free
//! blocks:
//!
//! minimize  0.5 * ||A z - t||^2 + <p, z>
//!
//! where the coordinates of `z` are partitioned into blocks, each either a
//! probability simplex (z >= 0, sum = 1), a nonnegative orthant, or free.
//!
//! This one solver backs every geometric query in the crate: least-norm
//! points of convex hulls, membership in polytope + cone sums, and the dual
//! of the polyhedral proximal subproblem. Projected gradient supplies global
//! progress; an active-set polish with exact KKT solves supplies machine
//! precision once the active set settles.

use crate::linalg::{dot, norm, spectral_norm_sym};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BlockKind {
    Simplex,
    NonNeg,
    Free,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Block {
    pub kind: BlockKind,
    pub len: usize,
}

pub(crate) struct BlockQp<'a> {
    /// Columns of A, each of dimension `dim`.
    pub cols: &'a [Vec<f64>],
    pub target: &'a [f64],
    /// Optional linear term p (length = number of columns).
    pub lin: Option<&'a [f64]>,
    pub blocks: &'a [Block],
}

#[derive(Debug, Clone)]
pub(crate) struct QpResult {
    pub z: Vec<f64>,
    /// Objective value 0.5*||Az - t||^2 + <p, z>.
    pub value: f64,
    /// The combination A z.
    pub combination: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

impl<'a> BlockQp<'a> {
    pub fn solve(&self, tol: f64, max_iter: usize) -> QpResult {
        let n_cols = self.cols.len();
        let dim = self.target.len();
        debug_assert_eq!(n_cols, self.blocks.iter().map(|b| b.len).sum::<usize>());
        debug_assert!(self.cols.iter().all(|c| c.len() == dim));

        if n_cols == 0 {
            return QpResult {
                z: Vec::new(),
                value: 0.5 * dot(self.target, self.target),
                combination: vec![0.0; dim],
                kkt_residual: 0.0,
                iterations: 0,
            };
        }

        // Lipschitz constant of the gradient: ||A||^2 = lambda_max(A A^T),
        // an n x n problem regardless of the column count.
        let mut gram = vec![0.0; dim * dim];
        for c in self.cols {
            for i in 0..dim {
                for j in 0..dim {
                    gram[i * dim + j] += c[i] * c[j];
                }
            }
        }
        let lip = spectral_norm_sym(&gram, dim, 1e-12, 10_000).max(1e-30) * 1.000001;

        let mut z = self.initial_point();
        let mut best = z.clone();
        let mut best_val = self.value(&z);
        let mut best_kkt = self.kkt_residual(&z);
        let mut iters = 0usize;

        if best_kkt <= tol {
            let combination = self.apply(&best);
            return QpResult {
                value: best_val,
                kkt_residual: best_kkt,
                z: best,
                combination,
                iterations: 0,
            };
        }

        let mut next_polish = 0usize;
        while iters < max_iter {
            if iters >= next_polish {
                if let Some(cand) = self.polish(&z, tol) {
                    let v = self.value(&cand);
                    if v <= best_val + 1e-14 * (1.0 + best_val.abs()) {
                        let k = self.kkt_residual(&cand);
                        if v < best_val || k < best_kkt {
                            best = cand.clone();
                            best_val = v;
                            best_kkt = k;
                        }
                        if best_kkt <= tol {
                            break;
                        }
                        z = cand;
                    }
                }
                next_polish = iters + 64;
            }
            // projected gradient step
            let g = self.gradient(&z);
            for (zi, gi) in z.iter_mut().zip(&g) {
                *zi -= gi / lip;
            }
            self.project(&mut z);
            iters += 1;
            let v = self.value(&z);
            if v < best_val {
                best_val = v;
                best = z.clone();
                best_kkt = self.kkt_residual(&best);
                if best_kkt <= tol {
                    break;
                }
            }
        }
        // final polish attempt
        if best_kkt > tol {
            if let Some(cand) = self.polish(&best, tol) {
                let v = self.value(&cand);
                let k = self.kkt_residual(&cand);
                if v <= best_val + 1e-12 * (1.0 + best_val.abs()) && k < best_kkt {
                    best = cand;
                    best_val = v;
                    best_kkt = k;
                }
            }
        }
        let combination = self.apply(&best);
        QpResult {
            value: best_val,
            kkt_residual: best_kkt,
            z: best,
            combination,
            iterations: iters,
        }
    }

    fn initial_point(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.cols.len());
        for b in self.blocks {
            match b.kind {
                BlockKind::Simplex => {
                    let w = 1.0 / b.len.max(1) as f64;
                    z.extend(std::iter::repeat(w).take(b.len));
                }
                _ => z.extend(std::iter::repeat(0.0).take(b.len)),
            }
        }
        z
    }

    fn apply(&self, z: &[f64]) -> Vec<f64> {
        let dim = self.target.len();
        let mut out = vec![0.0; dim];
        for (c, zi) in self.cols.iter().zip(z) {
            if *zi != 0.0 {
                for (o, ci) in out.iter_mut().zip(c) {
                    *o += zi * ci;
                }
            }
        }
        out
    }

    fn value(&self, z: &[f64]) -> f64 {
        let az = self.apply(z);
        let mut v = 0.0;
        for (a, t) in az.iter().zip(self.target) {
            v += (a - t) * (a - t);
        }
        v *= 0.5;
        if let Some(p) = self.lin {
            v += dot(p, z);
        }
        v
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let az = self.apply(z);
        let resid: Vec<f64> = az.iter().zip(self.target).map(|(a, t)| a - t).collect();
        let mut g: Vec<f64> = self.cols.iter().map(|c| dot(c, &resid)).collect();
        if let Some(p) = self.lin {
            for (gi, pi) in g.iter_mut().zip(p) {
                *gi += pi;
            }
        }
        g
    }

    fn project(&self, z: &mut [f64]) {
        let mut off = 0;
        for b in self.blocks {
            let seg = &mut z[off..off + b.len];
            match b.kind {
                BlockKind::Simplex => {
                    let proj = crate::linalg::project_simplex(seg, 1.0);
                    seg.copy_from_slice(&proj);
                }
                BlockKind::NonNeg => {
                    for x in seg.iter_mut() {
                        if *x < 0.0 {
                            *x = 0.0;
                        }
                    }
                }
                BlockKind::Free => {}
            }
            off += b.len;
        }
    }

    /// Max KKT violation at z (absolute scale).
    fn kkt_residual(&self, z: &[f64]) -> f64 {
        let g = self.gradient(z);
        let zmax = z.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let act = 1e-12 * (1.0 + zmax);
        let mut worst = 0.0_f64;
        let mut off = 0;
        for b in self.blocks {
            match b.kind {
                BlockKind::Simplex => {
                    let nu = g[off..off + b.len]
                        .iter()
                        .fold(f64::INFINITY, |m, v| m.min(*v));
                    for i in off..off + b.len {
                        if z[i] > act {
                            worst = worst.max((g[i] - nu).abs());
                        }
                    }
                }
                BlockKind::NonNeg => {
                    for i in off..off + b.len {
                        if z[i] > act {
                            worst = worst.max(g[i].abs());
                        } else {
                            worst = worst.max(-g[i]);
                        }
                    }
                }
                BlockKind::Free => {
                    for i in off..off + b.len {
                        worst = worst.max(g[i].abs());
                    }
                }
            }
            off += b.len;
        }
        worst.max(0.0)
    }

    /// Active-set polish: exact KKT solves on the current support, with
    /// Lawson-Hanson style partial steps when a solve leaves the orthant and
    /// entering-variable moves when a zero coordinate violates optimality.
    fn polish(&self, z0: &[f64], tol: f64) -> Option<Vec<f64>> {
        let n_cols = self.cols.len();
        if n_cols > 600 {
            return None; // KKT solve too large; rely on projected gradient
        }
        let zmax = z0.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let act = 1e-10 * (1.0 + zmax);
        let mut support: Vec<bool> = z0.iter().map(|v| *v > act).collect();
        // every simplex block needs at least one supported coordinate
        let mut off = 0;
        for b in self.blocks {
            if b.kind == BlockKind::Simplex && !support[off..off + b.len].iter().any(|s| *s) {
                let mut arg = off;
                for i in off..off + b.len {
                    if z0[i] > z0[arg] {
                        arg = i;
                    }
                }
                support[arg] = true;
            }
            off += b.len;
        }

        let mut work = z0.to_vec();
        let rounds = 4 * n_cols + 16;
        for _ in 0..rounds {
            let sol = self.kkt_solve(&support)?;
            // negative entries on constrained coordinates: partial step
            let mut alpha = 1.0_f64;
            let mut blocking = usize::MAX;
            let mut off = 0;
            for b in self.blocks {
                if b.kind != BlockKind::Free {
                    for i in off..off + b.len {
                        if support[i] && sol[i] < -1e-11 && work[i] > sol[i] {
                            let a = work[i] / (work[i] - sol[i]);
                            if a < alpha {
                                alpha = a;
                                blocking = i;
                            }
                        }
                    }
                }
                off += b.len;
            }
            if blocking != usize::MAX {
                for i in 0..n_cols {
                    let target = if support[i] { sol[i] } else { 0.0 };
                    work[i] += alpha * (target - work[i]);
                }
                work[blocking] = 0.0;
                support[blocking] = false;
                continue;
            }
            // feasible KKT point on the support; check entering variables
            let mut cand = vec![0.0; n_cols];
            for i in 0..n_cols {
                if support[i] {
                    cand[i] = sol[i].max(0.0.min(sol[i])); // free coords keep sign
                    if !matches!(self.block_of(i), BlockKind::Free) && cand[i] < 0.0 {
                        cand[i] = 0.0;
                    }
                }
            }
            self.renormalize_simplex(&mut cand);
            let g = self.gradient(&cand);
            let mut worst = 0.0_f64;
            let mut worst_i = usize::MAX;
            let mut off = 0;
            for b in self.blocks {
                match b.kind {
                    BlockKind::Simplex => {
                        let mut nu = f64::INFINITY;
                        for i in off..off + b.len {
                            if support[i] {
                                nu = nu.min(g[i]);
                            }
                        }
                        for i in off..off + b.len {
                            if !support[i] && nu - g[i] > worst {
                                worst = nu - g[i];
                                worst_i = i;
                            }
                        }
                    }
                    BlockKind::NonNeg => {
                        for i in off..off + b.len {
                            if !support[i] && -g[i] > worst {
                                worst = -g[i];
                                worst_i = i;
                            }
                        }
                    }
                    BlockKind::Free => {}
                }
                off += b.len;
            }
            if worst_i != usize::MAX && worst > 0.25 * tol {
                support[worst_i] = true;
                work = cand;
                continue;
            }
            return Some(cand);
        }
        None
    }

    fn block_of(&self, idx: usize) -> BlockKind {
        let mut off = 0;
        for b in self.blocks {
            if idx < off + b.len {
                return b.kind;
            }
            off += b.len;
        }
        BlockKind::Free
    }

    fn renormalize_simplex(&self, z: &mut [f64]) {
        let mut off = 0;
        for b in self.blocks {
            if b.kind == BlockKind::Simplex {
                let s: f64 = z[off..off + b.len].iter().sum();
                if s > 1e-300 {
                    for x in &mut z[off..off + b.len] {
                        *x /= s;
                    }
                }
            }
            off += b.len;
        }
    }

    /// Equality-constrained least squares on the support via an SVD KKT solve.
    fn kkt_solve(&self, support: &[bool]) -> Option<Vec<f64>> {
        let idx: Vec<usize> = (0..support.len()).filter(|i| support[*i]).collect();
        let s = idx.len();
        if s == 0 {
            return Some(vec![0.0; support.len()]);
        }
        // simplex blocks that intersect the support contribute a sum-to-one row
        let mut eq_rows: Vec<Vec<usize>> = Vec::new();
        let mut off = 0;
        for b in self.blocks {
            if b.kind == BlockKind::Simplex {
                let members: Vec<usize> = (0..s).filter(|k| idx[*k] >= off && idx[*k] < off + b.len).collect();
                if !members.is_empty() {
                    eq_rows.push(members);
                }
            }
            off += b.len;
        }
        let q = eq_rows.len();
        let size = s + q;
        let mut m = DMatrix::<f64>::zeros(size, size);
        let mut rhs = DVector::<f64>::zeros(size);
        for a in 0..s {
            for b in a..s {
                let h = dot(&self.cols[idx[a]], &self.cols[idx[b]]);
                m[(a, b)] = h;
                m[(b, a)] = h;
            }
            let mut r = dot(&self.cols[idx[a]], self.target);
            if let Some(p) = self.lin {
                r -= p[idx[a]];
            }
            rhs[a] = r;
        }
        for (r, members) in eq_rows.iter().enumerate() {
            for &k in members {
                m[(s + r, k)] = 1.0;
                m[(k, s + r)] = 1.0;
            }
            rhs[s + r] = 1.0;
        }
        let svd = m.svd(true, true);
        let sol = svd.solve(&rhs, 1e-12).ok()?;
        let mut out = vec![0.0; support.len()];
        for (k, &i) in idx.iter().enumerate() {
            out[i] = sol[k];
        }
        if out.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist;

    fn solve(cols: Vec<Vec<f64>>, target: Vec<f64>, blocks: Vec<Block>) -> QpResult {
        BlockQp {
            cols: &cols,
            target: &target,
            lin: None,
            blocks: &blocks,
        }
        .solve(1e-11, 50_000)
    }

    #[test]
    fn distance_to_segment() {
        // closest point of the segment [(1,1),(2,0)] to the origin is (1,1)
        let r = solve(
            vec![vec![1.0, 1.0], vec![2.0, 0.0]],
            vec![0.0, 0.0],
            vec![Block { kind: BlockKind::Simplex, len: 2 }],
        );
        let d = (2.0 * r.value).sqrt();
        assert!((d - 2.0_f64.sqrt()).abs() < 1e-9, "d = {d}");
        assert!(dist(&r.combination, &[1.0, 1.0]) < 1e-8);
    }

    #[test]
    fn triangle_containing_origin() {
        let r = solve(
            vec![vec![-1.0, -1.0], vec![2.0, 0.0], vec![0.0, 2.0]],
            vec![0.0, 0.0],
            vec![Block { kind: BlockKind::Simplex, len: 3 }],
        );
        assert!(r.value < 1e-18, "value = {}", r.value);
    }

    #[test]
    fn nonneg_cone_projection() {
        // min over c >= 0 of ||c*(1,0) - (-1,2)||: optimum c = 0
        let r = solve(
            vec![vec![1.0, 0.0]],
            vec![-1.0, 2.0],
            vec![Block { kind: BlockKind::NonNeg, len: 1 }],
        );
        let d = (2.0 * r.value).sqrt();
        assert!((d - 5.0_f64.sqrt()).abs() < 1e-10);
        assert!(r.z[0].abs() < 1e-12);
    }

    #[test]
    fn hull_plus_cone_reaches_origin() {
        let r = solve(
            vec![vec![2.0, 1.0], vec![2.0, -1.0], vec![-1.0, 0.0]],
            vec![0.0, 0.0],
            vec![
                Block { kind: BlockKind::Simplex, len: 2 },
                Block { kind: BlockKind::NonNeg, len: 1 },
            ],
        );
        assert!(r.value < 1e-16, "value = {}", r.value);
        let s: f64 = r.z[..2].iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn free_block_solves_exactly() {
        // min ||l*(1,2) - (3,1)||^2 over free l: l = (3+2)/5 = 1
        let r = solve(
            vec![vec![1.0, 2.0]],
            vec![3.0, 1.0],
            vec![Block { kind: BlockKind::Free, len: 1 }],
        );
        assert!((r.z[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn linear_term_dual_shape() {
        // minimize 0.5*||w1*a1 + w2*a2||^2 - <beta, w> over the simplex:
        // a1 = (1), a2 = (-1), beta = (0.3, 0.0).
        // With w2 = 1-w1: 0.5*(2w1-1)^2 - 0.3 w1 -> 4w1 - 2 - 0.3 = 0 at w1 = 0.575.
        let cols = vec![vec![1.0], vec![-1.0]];
        let target = vec![0.0];
        let lin = vec![-0.3, 0.0];
        let blocks = vec![Block { kind: BlockKind::Simplex, len: 2 }];
        let r = BlockQp {
            cols: &cols,
            target: &target,
            lin: Some(&lin),
            blocks: &blocks,
        }
        .solve(1e-11, 50_000);
        assert!((r.z[0] - 0.575).abs() < 1e-9, "w1 = {}", r.z[0]);
    }

    #[test]
    fn random_problems_satisfy_kkt() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for case in 0..60 {
            let dim = 1 + case % 3;
            let nv = 2 + case % 4;
            let cols: Vec<Vec<f64>> = (0..nv + 1)
                .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let target: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            let blocks = vec![
                Block { kind: BlockKind::Simplex, len: nv },
                Block { kind: BlockKind::NonNeg, len: 1 },
            ];
            let r = BlockQp { cols: &cols, target: &target, lin: None, blocks: &blocks }
                .solve(1e-10, 50_000);
            assert!(r.kkt_residual <= 1e-8, "case {case}: kkt {}", r.kkt_residual);
            let s: f64 = r.z[..nv].iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(r.z.iter().all(|v| *v >= -1e-12));
        }
    }
}
