//! The strongly convex minimax subproblem of each outer iteration:
//!
//! minimize over x in S:
//!     max_i ( f_i(x) - f_i(x^k) + <grad_i, x - x^k> ) + ||x - x^k||^2 / (2 gamma)
//!
//! with `grad_i = nabla g_i(x^k) - u_i^k`. Two strategies are provided: the
//! epigraph route (projected subgradient descent on the max form) and the
//! simplex-weight route (alternating x-minimization and multiplier ascent on
//! the saddle form). Both are finished off by an active-structure polish that
//! snaps iterates onto kinks and facets and certifies optimality through the
//! exact subdifferential, so results reach near machine precision on the
//! piecewise-affine catalog. A brute-force grid oracle backs the tests.

use crate::error::{Error, Result};
use crate::funcs::{FunctionSpec, Wall, ACTIVITY_TOL};
use crate::linalg::{self, dot};
use crate::model::Point;
use crate::polytope;
use crate::sets::FeasibleSetSpec;

/// Pieces within this of the max (scaled by `1 + |max|`) share the recovered
/// weight mass.
const WEIGHT_ACTIVITY: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct SubproblemInput {
    pub xk: Point,
    /// Per objective: `nabla g_i(x^k) - u_i^k`.
    pub grads: Vec<Vec<f64>>,
    pub f_specs: Vec<FunctionSpec>,
    pub f_at_xk: Vec<f64>,
    pub gamma: f64,
    pub set: FeasibleSetSpec,
}

impl SubproblemInput {
    pub fn m(&self) -> usize {
        self.f_specs.len()
    }

    pub fn n(&self) -> usize {
        self.xk.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.f_specs.is_empty() {
            return Err(Error::Input("subproblem needs at least one objective".into()));
        }
        if self.grads.len() != self.f_specs.len() || self.f_at_xk.len() != self.f_specs.len() {
            return Err(Error::Input(
                "grads / f_specs / f_at_xk lengths disagree".into(),
            ));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Input("gamma must be positive".into()));
        }
        let n = self.n();
        for g in &self.grads {
            if g.len() != n {
                return Err(Error::Dimension {
                    what: "subproblem gradient",
                    expected: n,
                    got: g.len(),
                });
            }
            if !linalg::all_finite(g) {
                return Err(Error::Input("non-finite subproblem gradient".into()));
            }
        }
        for f in &self.f_specs {
            f.validate(n)?;
        }
        self.set.validate(n)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SubproblemResult {
    pub x_next: Point,
    /// Multipliers on the unit simplex, uniform over active pieces.
    pub weights: Vec<f64>,
    /// Step 2 objective at `x_next`; at most 0 since x = x^k scores exactly 0.
    pub objective_value: f64,
    pub inner_iterations: usize,
    /// Upper bound on the optimality gap of `x_next`: the certified bound
    /// when the polish verified the subdifferential inclusion, otherwise the
    /// step-schedule estimate.
    pub residual: f64,
}

/// Remark's epigraph reformulation, run as projected subgradient descent on
/// the max form with the strong-convexity schedule `2/(mu (j+2))`, `mu = 1/gamma`.
pub fn solve_epigraph(
    input: &SubproblemInput,
    tol: f64,
    max_iter: usize,
) -> Result<SubproblemResult> {
    input.validate()?;
    Engine::new(input).run(tol, max_iter)
}

/// Remark's simplex-weight representation: alternate exact x-minimization of
/// the weighted aggregation with projected multiplier ascent, stopping on the
/// duality-gap surrogate.
pub fn solve_simplex_weight(
    input: &SubproblemInput,
    tol: f64,
    max_iter: usize,
) -> Result<SubproblemResult> {
    input.validate()?;
    let m = input.m();
    let mut lambda = vec![1.0 / m as f64; m];
    let mut total_iters = 0usize;
    let x_tol = (0.1 * tol).max(1e-14);

    let mut evaluate = |lambda: &[f64], iters: &mut usize| -> Result<(Vec<f64>, Vec<f64>, f64, f64)> {
        let (res, dual_val) = solve_weighted(input, lambda, x_tol, max_iter)?;
        *iters += res.inner_iterations;
        let x = res.x_next.into_inner();
        let values = piece_values(input, &x)?;
        Ok((x, values, dual_val, res.residual))
    };

    let mut best: Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>, f64)> = None; // (dual, lambda, x, values, xres)
    let rounds = 48usize;
    for j in 0..rounds {
        let (x, values, dual_val, xres) = evaluate(&lambda, &mut total_iters)?;
        let gap = surrogate_gap(&lambda, &values) + xres;
        if best.as_ref().map(|b| dual_val > b.0).unwrap_or(true) {
            best = Some((dual_val, lambda.clone(), x, values.clone(), xres));
        }
        if gap <= tol {
            break;
        }
        if j + 2 == rounds || j >= 11 {
            break; // hand over to the dual polish
        }
        let step = 1.0 / (j + 1) as f64;
        let mut next: Vec<f64> = lambda
            .iter()
            .zip(&values)
            .map(|(l, v)| l + step * v)
            .collect();
        next = linalg::project_simplex(&next, 1.0);
        lambda = next;
    }

    // concave dual polish over the simplex (coordinate golden-section)
    let m_small = m <= 3;
    if m_small && m >= 2 {
        let (_, mut lam, _, _, _) = best.clone().expect("at least one evaluation ran");
        let pairs: Vec<(usize, usize)> = match m {
            2 => vec![(0, 1)],
            _ => vec![(0, 1), (0, 2), (1, 2)],
        };
        let sweeps = if m == 2 { 1 } else { 3 };
        for _ in 0..sweeps {
            for &(a, b) in &pairs {
                let s = lam[a] + lam[b];
                if s <= 1e-13 {
                    continue;
                }
                let base = lam.clone();
                let mut dual_of = |t: f64, iters: &mut usize| -> f64 {
                    let mut trial = base.clone();
                    trial[a] = t * s;
                    trial[b] = (1.0 - t) * s;
                    match solve_weighted(input, &trial, x_tol, max_iter) {
                        Ok((_, d)) => -d, // golden_min maximizes d
                        Err(_) => f64::INFINITY,
                    }
                };
                let (t_best, _) = golden_min(|t| dual_of(t, &mut total_iters), 0.0, 1.0, 64);
                lam[a] = t_best * s;
                lam[b] = (1.0 - t_best) * s;
                let norm: f64 = lam.iter().sum();
                for l in lam.iter_mut() {
                    *l /= norm;
                }
            }
        }
        let (x, values, dual_val, xres) = evaluate(&lam, &mut total_iters)?;
        if best.as_ref().map(|b| dual_val > b.0).unwrap_or(true) {
            best = Some((dual_val, lam, x, values, xres));
        }
    }

    let (_, lambda, x, values, xres) = best.expect("at least one evaluation ran");
    let gap = surrogate_gap(&lambda, &values) + xres;
    let top = values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let quad = linalg::norm_sq(&linalg::sub(&x, input.xk.coords())) / (2.0 * input.gamma);
    Ok(SubproblemResult {
        x_next: Point::new(x)?,
        weights: lambda,
        objective_value: top + quad,
        inner_iterations: total_iters,
        residual: gap,
    })
}

fn surrogate_gap(lambda: &[f64], values: &[f64]) -> f64 {
    let top = values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let weighted: f64 = lambda.iter().zip(values).map(|(l, v)| l * v).sum();
    (top - weighted).max(0.0)
}

/// x-minimization of the lambda-weighted aggregation; returns the weighted
/// (m = 1) solve and its optimal value, which equals the dual function at
/// lambda up to the solve residual.
fn solve_weighted(
    input: &SubproblemInput,
    lambda: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(SubproblemResult, f64)> {
    let n = input.n();
    let mut terms = Vec::new();
    for (l, f) in lambda.iter().zip(&input.f_specs) {
        if *l > 1e-15 {
            terms.push(f.scaled(*l));
        }
    }
    let combined_f = match terms.len() {
        0 => FunctionSpec::Zero,
        1 => terms.pop().expect("len checked"),
        _ => FunctionSpec::Sum(terms),
    };
    let mut combined_grad = vec![0.0; n];
    for (l, g) in lambda.iter().zip(&input.grads) {
        linalg::axpy(&mut combined_grad, *l, g);
    }
    let f_at = combined_f.eval(input.xk.coords())?;
    let weighted = SubproblemInput {
        xk: input.xk.clone(),
        grads: vec![combined_grad],
        f_specs: vec![combined_f],
        f_at_xk: vec![f_at],
        gamma: input.gamma,
        set: input.set.clone(),
    };
    let res = Engine::new(&weighted).run(tol, max_iter)?;
    let dual_val = res.objective_value - res.residual.max(0.0);
    Ok((res, dual_val))
}

/// Exhaustive lattice oracle for tests (n <= 2). The lattice is anchored at
/// zero with the given spacing; in 2-D the full lattice at fine spacings is
/// replaced by a convexity-safe multilevel refinement whose windows are sized
/// from the strong-convexity bound, ending on the same anchored lattice.
pub fn solve_bruteforce(input: &SubproblemInput, grid: f64) -> Result<SubproblemResult> {
    input.validate()?;
    let n = input.n();
    if n > 2 {
        return Err(Error::Capacity {
            what: "brute-force grid dimension",
            limit: 2,
        });
    }
    if !(grid > 0.0) {
        return Err(Error::Input("grid spacing must be positive".into()));
    }
    let xk = input.xk.coords();
    let gamma = input.gamma;
    let max_grad = input
        .grads
        .iter()
        .map(|g| linalg::norm(g))
        .fold(0.0_f64, f64::max);
    let lip: Option<f64> = input
        .f_specs
        .iter()
        .map(|f| f.value_lipschitz_bound())
        .try_fold(0.0_f64, |acc, b| b.map(|b| acc.max(b)));

    // search box: strong-convexity radius bound, else the bounded set itself
    let (mut lo, mut hi) = match lip {
        Some(lf) => {
            let r = 2.0 * gamma * (max_grad + lf) + 4.0 * grid + 1e-6;
            (
                xk.iter().map(|c| c - r).collect::<Vec<f64>>(),
                xk.iter().map(|c| c + r).collect::<Vec<f64>>(),
            )
        }
        None => input.set.bounding_box(n).ok_or_else(|| {
            Error::Input(
                "brute force needs piecewise-Lipschitz objectives or a bounded set".into(),
            )
        })?,
    };
    if let Some((slo, shi)) = input.set.bounding_box(n) {
        for j in 0..n {
            lo[j] = lo[j].max(slo[j] - grid);
            hi[j] = hi[j].min(shi[j] + grid);
        }
    }

    let total_lip = max_grad + lip.unwrap_or(10.0);
    let phi = |x: &[f64]| -> Result<f64> {
        let vals = piece_values(input, x)?;
        let top = vals.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        Ok(top + linalg::norm_sq(&linalg::sub(x, xk)) / (2.0 * gamma))
    };

    let mut evals = 0usize;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut scan = |spacing: f64,
                    wlo: &[f64],
                    whi: &[f64],
                    best: &mut Option<(Vec<f64>, f64)>,
                    evals: &mut usize|
     -> Result<()> {
        let idx: Vec<(i64, i64)> = (0..n)
            .map(|j| {
                (
                    (wlo[j] / spacing - 1e-9).ceil() as i64,
                    (whi[j] / spacing + 1e-9).floor() as i64,
                )
            })
            .collect();
        let count: i64 = idx
            .iter()
            .map(|(a, b)| (b - a + 1).max(0))
            .product();
        if count > 30_000_000 {
            return Err(Error::Capacity {
                what: "brute-force grid points",
                limit: 30_000_000,
            });
        }
        let mut point = vec![0.0; n];
        let mut cursor = vec![0i64; n];
        for (j, (a, _)) in idx.iter().enumerate() {
            cursor[j] = *a;
        }
        'outer: loop {
            for j in 0..n {
                point[j] = cursor[j] as f64 * spacing;
            }
            if input.set.contains(&point, 1e-9) {
                let v = phi(&point)?;
                *evals += 1;
                if best.as_ref().map(|(_, bv)| v < *bv).unwrap_or(true) {
                    *best = Some((point.clone(), v));
                }
            }
            for j in 0..n {
                cursor[j] += 1;
                if cursor[j] <= idx[j].1 {
                    continue 'outer;
                }
                cursor[j] = idx[j].0;
                if j == n - 1 {
                    break 'outer;
                }
            }
        }
        Ok(())
    };

    // coarsest level keeping at most ~600 points per axis, refining by 5x so
    // every level stays on the anchored lattice of its spacing
    let span = (0..n)
        .map(|j| hi[j] - lo[j])
        .fold(0.0_f64, f64::max)
        .max(grid);
    let mut spacing = grid;
    while span / spacing > 600.0 {
        spacing *= 5.0;
    }
    let (mut wlo, mut whi) = (lo.clone(), hi.clone());
    loop {
        scan(spacing, &wlo, &whi, &mut best, &mut evals)?;
        if spacing <= grid * (1.0 + 1e-12) {
            break;
        }
        let center = best
            .as_ref()
            .map(|(p, _)| p.clone())
            .unwrap_or_else(|| xk.to_vec());
        // window covers the strong-convexity localization of the argmin
        let w = (3.0 * spacing)
            .max((2.0 * gamma * total_lip * spacing * (n as f64).sqrt()).sqrt() + 2.0 * spacing);
        for j in 0..n {
            wlo[j] = (center[j] - w).max(lo[j]);
            whi[j] = (center[j] + w).min(hi[j]);
        }
        spacing /= 5.0;
    }

    let (x_best, value) = best.ok_or_else(|| {
        Error::Input("brute-force grid contains no feasible point".into())
    })?;
    let values = piece_values(input, &x_best)?;
    let weights = recover_weights(&values);
    Ok(SubproblemResult {
        x_next: Point::new(x_best.clone())?,
        weights,
        objective_value: value,
        inner_iterations: evals,
        residual: grid * (total_lip + linalg::dist(&x_best, xk) / gamma),
    })
}

fn piece_values(input: &SubproblemInput, x: &[f64]) -> Result<Vec<f64>> {
    let xk = input.xk.coords();
    let dx = linalg::sub(x, xk);
    let mut out = Vec::with_capacity(input.m());
    for i in 0..input.m() {
        let v = input.f_specs[i].eval(x)? - input.f_at_xk[i] + dot(&input.grads[i], &dx);
        out.push(v);
    }
    Ok(out)
}

fn recover_weights(values: &[f64]) -> Vec<f64> {
    let top = values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let tol = WEIGHT_ACTIVITY * (1.0 + top.abs());
    let active: Vec<bool> = values.iter().map(|v| *v >= top - tol).collect();
    let count = active.iter().filter(|a| **a).count().max(1);
    active
        .iter()
        .map(|a| if *a { 1.0 / count as f64 } else { 0.0 })
        .collect()
}

fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Shared iteration/polish engine for both strategies.
struct Engine<'a> {
    input: &'a SubproblemInput,
    n: usize,
    m: usize,
    grad_scale: f64,
}

impl<'a> Engine<'a> {
    fn new(input: &'a SubproblemInput) -> Self {
        let grad_scale = input
            .grads
            .iter()
            .map(|g| linalg::norm(g))
            .fold(0.0_f64, f64::max)
            + input
                .f_specs
                .iter()
                .map(|f| f.value_lipschitz_bound().unwrap_or(10.0))
                .fold(0.0_f64, f64::max);
        Self {
            input,
            n: input.n(),
            m: input.m(),
            grad_scale,
        }
    }

    fn phi(&self, x: &[f64]) -> Result<f64> {
        let vals = piece_values(self.input, x)?;
        let top = vals.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        Ok(top
            + linalg::norm_sq(&linalg::sub(x, self.input.xk.coords()))
                / (2.0 * self.input.gamma))
    }

    /// Infinity-on-error variant for line searches.
    fn phi_value(&self, x: &[f64]) -> f64 {
        self.phi(x).unwrap_or(f64::INFINITY)
    }

    fn phi_subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let vals = piece_values(self.input, x)?;
        let mut arg = 0;
        for (i, v) in vals.iter().enumerate() {
            if *v > vals[arg] {
                arg = i;
            }
        }
        let mut sg = self.input.f_specs[arg].subgradient_select(x)?;
        linalg::axpy(&mut sg, 1.0, &self.input.grads[arg]);
        let dx = linalg::sub(x, self.input.xk.coords());
        linalg::axpy(&mut sg, 1.0 / self.input.gamma, &dx);
        Ok(sg)
    }

    fn run(&self, tol: f64, max_iter: usize) -> Result<SubproblemResult> {
        let set = &self.input.set;
        let gamma = self.input.gamma;
        let xk = self.input.xk.coords();

        let start = set.project(xk)?;
        let mut x = start.clone();
        let mut best_x = start;
        let mut best_phi = self.phi(&best_x)?;
        let mut certified: Option<f64> = None;
        let mut schedule_est = f64::INFINITY;
        let mut iters = 0usize;
        let mut next_polish = 0usize;

        loop {
            if iters >= next_polish {
                self.polish(&x, &mut best_x, &mut best_phi)?;
                if let Some(gap) = self.certify(&best_x)? {
                    certified = Some(certified.map_or(gap, |c: f64| c.min(gap)));
                    if gap <= tol {
                        break;
                    }
                }
                next_polish = if iters == 0 { 64 } else { 3 * iters };
                // restart the schedule from the polished point when it won
                if best_phi < self.phi_value(&x) {
                    x = best_x.clone();
                }
            }
            if iters >= max_iter {
                break;
            }
            let sg = self.phi_subgradient(&x)?;
            let step = 2.0 * gamma / (iters as f64 + 2.0);
            let mut xn = x.clone();
            linalg::axpy(&mut xn, -step, &sg);
            let xn = set.project(&xn)?;
            schedule_est = linalg::dist(&x, &xn) / gamma;
            let v = self.phi(&xn)?;
            if v < best_phi {
                best_phi = v;
                best_x = xn.clone();
            }
            x = xn;
            iters += 1;
            if schedule_est <= tol {
                self.polish(&x, &mut best_x, &mut best_phi)?;
                if let Some(gap) = self.certify(&best_x)? {
                    certified = Some(certified.map_or(gap, |c: f64| c.min(gap)));
                }
                break;
            }
        }

        let residual = match certified {
            Some(c) => c.min(schedule_est),
            None => schedule_est,
        };
        let values = piece_values(self.input, &best_x)?;
        let weights = recover_weights(&values);
        Ok(SubproblemResult {
            x_next: Point::new(best_x)?,
            weights,
            objective_value: best_phi,
            inner_iterations: iters,
            residual: residual.max(0.0),
        })
    }

    /// Evaluate structured candidates (prox steps, kink/facet walls and their
    /// intersections, snaps) and keep the best.
    fn polish(&self, x: &[f64], best_x: &mut Vec<f64>, best_phi: &mut f64) -> Result<()> {
        let mut cands: Vec<Vec<f64>> = Vec::new();
        self.collect_candidates(x, &mut cands)?;
        self.collect_candidates(best_x, &mut cands)?;
        for c in cands {
            if !self.input.set.contains(&c, 1e-8) {
                continue;
            }
            if !linalg::all_finite(&c) {
                continue;
            }
            let v = self.phi_value(&c);
            if v < *best_phi {
                *best_phi = v;
                *best_x = c;
            }
        }
        Ok(())
    }

    fn collect_candidates(&self, x: &[f64], acc: &mut Vec<Vec<f64>>) -> Result<()> {
        let set = &self.input.set;
        let xk = self.input.xk.coords();
        let gamma = self.input.gamma;
        let n = self.n;

        acc.push(x.to_vec());
        acc.push(set.project(xk)?);

        // proximal step through each piece's selected subgradient
        for i in 0..self.m {
            if let Ok(mut sel) = self.input.f_specs[i].subgradient_select(x) {
                linalg::axpy(&mut sel, 1.0, &self.input.grads[i]);
                let mut t = xk.to_vec();
                linalg::axpy(&mut t, -gamma, &sel);
                acc.push(set.project(&t)?);
            }
        }

        // coordinate / bound snaps at two radii
        for r in [1e-6, 1e-3] {
            let mut s = x.to_vec();
            let mut changed = false;
            for v in s.iter_mut() {
                if *v != 0.0 && v.abs() <= r {
                    *v = 0.0;
                    changed = true;
                }
            }
            if let FeasibleSetSpec::Box { lo, hi } = set {
                for j in 0..n {
                    if (s[j] - lo[j]).abs() <= r && s[j] != lo[j] {
                        s[j] = lo[j];
                        changed = true;
                    }
                    if (s[j] - hi[j]).abs() <= r && s[j] != hi[j] {
                        s[j] = hi[j];
                        changed = true;
                    }
                }
            }
            if changed {
                acc.push(set.project(&s)?);
            }
        }

        if let FeasibleSetSpec::Ball { center, radius } = set {
            let d = linalg::dist(x, center);
            if d > 1e-30 {
                let t = radius / d;
                acc.push(
                    center
                        .iter()
                        .zip(x)
                        .map(|(c, xi)| c + t * (xi - c))
                        .collect(),
                );
            }
        }

        let walls = self.walls(x)?;
        match n {
            1 => {
                for w in &walls {
                    if w.normal[0].abs() > 1e-12 {
                        let pt = vec![-w.offset / w.normal[0]];
                        if set.contains(&pt, 1e-9) {
                            acc.push(pt);
                        }
                    }
                }
                self.golden_1d(acc)?;
            }
            2 => {
                for w in &walls {
                    self.wall_search(w, x, acc);
                }
                // pairwise wall intersections among the nearest few
                let cap = walls.len().min(16);
                for a in 0..cap {
                    for b in a + 1..cap {
                        if let Some(pt) = intersect_walls(&walls[a], &walls[b]) {
                            if set.contains(&pt, 1e-9) {
                                acc.push(pt.clone());
                            }
                            acc.push(set.project(&pt)?);
                        }
                    }
                }
            }
            _ => {
                for w in &walls {
                    let nn = linalg::norm_sq(&w.normal);
                    if nn > 1e-24 {
                        let t = (dot(&w.normal, x) + w.offset) / nn;
                        let mut p = x.to_vec();
                        linalg::axpy(&mut p, -t, &w.normal);
                        acc.push(set.project(&p)?);
                    }
                }
            }
        }
        Ok(())
    }

    /// Kink walls of the pieces, locally linearized tie walls between pieces,
    /// and set facets, nearest first, capped.
    fn walls(&self, x: &[f64]) -> Result<Vec<Wall>> {
        let n = self.n;
        let mut walls = Vec::new();
        for f in &self.input.f_specs {
            f.kink_walls(n, &mut walls);
        }
        if self.m > 1 {
            let vals = piece_values(self.input, x)?;
            let mut sgs = Vec::with_capacity(self.m);
            for (i, f) in self.input.f_specs.iter().enumerate() {
                let mut sg = f.subgradient_select(x)?;
                linalg::axpy(&mut sg, 1.0, &self.input.grads[i]);
                sgs.push(sg);
            }
            for i in 0..self.m {
                for j in i + 1..self.m {
                    let normal = linalg::sub(&sgs[i], &sgs[j]);
                    if linalg::norm(&normal) > 1e-12 {
                        // q_i(x) - q_j(x) = 0 linearized at the query point
                        let offset = vals[i] - vals[j] - dot(&normal, x);
                        walls.push(Wall { normal, offset });
                    }
                }
            }
        }
        self.input.set.facet_walls(n, &mut walls);
        walls.sort_by(|a, b| {
            let da = wall_distance(a, x);
            let db = wall_distance(b, x);
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
        });
        walls.truncate(48);
        Ok(walls)
    }

    /// Golden-section along a wall clipped to the set (n = 2).
    fn wall_search(&self, w: &Wall, x: &[f64], acc: &mut Vec<Vec<f64>>) {
        let nn = linalg::norm_sq(&w.normal);
        if nn < 1e-24 {
            return;
        }
        let p0 = {
            let t = (dot(&w.normal, x) + w.offset) / nn;
            let mut p = x.to_vec();
            linalg::axpy(&mut p, -t, &w.normal);
            p
        };
        let nrm = nn.sqrt();
        let d = vec![-w.normal[1] / nrm, w.normal[0] / nrm];
        let reach = 4.0
            * (1.0
                + linalg::dist(x, self.input.xk.coords())
                + self.input.gamma * self.grad_scale);
        match self.input.set.clip_line(&p0, &d, -reach, reach) {
            Some((t_lo, t_hi)) => {
                if t_lo > t_hi {
                    return;
                }
                let (t, _) = golden_min(
                    |t| {
                        let mut p = p0.clone();
                        linalg::axpy(&mut p, t, &d);
                        self.phi_value(&p)
                    },
                    t_lo,
                    t_hi,
                    90,
                );
                for tt in [t, t_lo, t_hi] {
                    let mut p = p0.clone();
                    linalg::axpy(&mut p, tt, &d);
                    acc.push(p);
                }
            }
            None => {}
        }
    }

    /// Direct golden-section over the feasible interval (n = 1), bracketed by
    /// doubling until the objective grows. The minimizer of the strongly
    /// convex objective always lies inside such a bracket.
    fn golden_1d(&self, acc: &mut Vec<Vec<f64>>) -> Result<()> {
        let xk = self.input.xk.coords();
        let mut reach = 1.0 + 2.0 * self.input.gamma * self.grad_scale;
        for _ in 0..60 {
            let lo = self.phi_value(&[xk[0] - reach]);
            let hi = self.phi_value(&[xk[0] + reach]);
            let mid_lo = self.phi_value(&[xk[0] - 0.5 * reach]);
            let mid_hi = self.phi_value(&[xk[0] + 0.5 * reach]);
            if lo >= mid_lo && hi >= mid_hi {
                break;
            }
            reach *= 2.0;
        }
        if let Some((t_lo, t_hi)) =
            self.input
                .set
                .clip_line(&[xk[0]], &[1.0], -reach, reach)
        {
            let (t, _) = golden_min(|t| self.phi_value(&[xk[0] + t]), t_lo, t_hi, 100);
            acc.push(vec![xk[0] + t]);
        }
        Ok(())
    }

    /// Exact optimality certificate at a feasible point: distance from the
    /// negated prox gradient to `conv(union of active piece subdifferentials)
    /// + N_S(x)`. By strong convexity the optimality gap is bounded by
    /// `gamma * d^2 / 2` plus the activity slack actually incurred.
    fn certify(&self, x: &[f64]) -> Result<Option<f64>> {
        let gamma = self.input.gamma;
        let xk = self.input.xk.coords();
        let vals = piece_values(self.input, x)?;
        let top = vals.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        let act = ACTIVITY_TOL * (1.0 + top.abs());

        let mut groups: Vec<Vec<Vec<f64>>> = Vec::new();
        let mut eps = 0.0_f64;
        for (i, v) in vals.iter().enumerate() {
            if *v < top - act {
                continue;
            }
            let verts = match self.input.f_specs[i].subdiff_vertex_set(x) {
                Some(vs) => vs,
                None => return Ok(None), // no certificate for custom oracles
            };
            let shifted: Vec<Vec<f64>> = verts
                .into_iter()
                .map(|mut vtx| {
                    linalg::axpy(&mut vtx, 1.0, &self.input.grads[i]);
                    vtx
                })
                .collect();
            let slack = (top - *v) + self.input.f_specs[i].kink_slack(x);
            eps = eps.max(slack);
            groups.push(shifted);
        }

        let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let cone = match self.input.set.normal_cone(x, 1e-12 * (1.0 + scale)) {
            Ok(c) => c,
            Err(_) => return Ok(None), // infeasible query; no certificate
        };

        let dx = linalg::sub(x, xk);
        let point: Vec<f64> = dx.iter().map(|d| -d / gamma).collect();
        let refs: Vec<&[Vec<f64>]> = groups.iter().map(|g| g.as_slice()).collect();
        let dist = polytope::distance_to_point(&refs, &cone.generators, &cone.lineality, &point);
        Ok(Some(0.5 * gamma * dist.distance * dist.distance + eps))
    }
}

fn wall_distance(w: &Wall, x: &[f64]) -> f64 {
    let nrm = linalg::norm(&w.normal);
    if nrm < 1e-14 {
        return f64::INFINITY;
    }
    (dot(&w.normal, x) + w.offset).abs() / nrm
}

fn intersect_walls(a: &Wall, b: &Wall) -> Option<Vec<f64>> {
    let det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
    let scale = linalg::norm(&a.normal) * linalg::norm(&b.normal);
    if det.abs() <= 1e-10 * (1.0 + scale) {
        return None;
    }
    let x = (-a.offset * b.normal[1] + b.offset * a.normal[1]) / det;
    let y = (-a.normal[0] * b.offset + b.normal[0] * a.offset) / det;
    Some(vec![x, y])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn whole() -> FeasibleSetSpec {
        FeasibleSetSpec::WholeSpace
    }

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn proximal_gradient_step_closed_form() {
        // m=1, f=0, grad = x^k with g = 0.5||x||^2: x_next = x^k - gamma x^k
        let input = SubproblemInput {
            xk: pt(&[1.0, 0.0]),
            grads: vec![vec![1.0, 0.0]],
            f_specs: vec![FunctionSpec::Zero],
            f_at_xk: vec![0.0],
            gamma: 0.5,
            set: whole(),
        };
        let r = solve_epigraph(&input, 1e-10, 10_000).unwrap();
        assert!(linalg::dist(r.x_next.coords(), &[0.5, 0.0]) < 1e-10);
        assert!(r.residual <= 1e-10);
    }

    #[test]
    fn zero_gradients_fix_the_point() {
        let input = SubproblemInput {
            xk: pt(&[0.3, -0.7]),
            grads: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            f_specs: vec![FunctionSpec::Zero, FunctionSpec::Zero],
            f_at_xk: vec![0.0, 0.0],
            gamma: 1.0,
            set: FeasibleSetSpec::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] },
        };
        let r = solve_epigraph(&input, 1e-10, 10_000).unwrap();
        assert!(linalg::dist(r.x_next.coords(), &[0.3, -0.7]) < 1e-12);
        assert!(r.objective_value.abs() < 1e-14);
    }

    #[test]
    fn soft_threshold_via_bruteforce() {
        // f = |x|, grad = 0, gamma = 1: prox lands at max(|v|-1, 0) sign(v)
        for (xk, expected) in [(0.3, 0.0), (2.0, 1.0)] {
            let input = SubproblemInput {
                xk: pt(&[xk]),
                grads: vec![vec![0.0]],
                f_specs: vec![FunctionSpec::WeightedL1 { w: vec![1.0] }],
                f_at_xk: vec![xk.abs()],
                gamma: 1.0,
                set: whole(),
            };
            let r = solve_bruteforce(&input, 1e-5).unwrap();
            assert!(
                (r.x_next.coords()[0] - expected).abs() <= 1e-5 + 1e-12,
                "xk={xk}: got {}",
                r.x_next.coords()[0]
            );
        }
    }

    #[test]
    fn epigraph_soft_threshold_is_exact() {
        let input = SubproblemInput {
            xk: pt(&[0.3]),
            grads: vec![vec![0.0]],
            f_specs: vec![FunctionSpec::WeightedL1 { w: vec![1.0] }],
            f_at_xk: vec![0.3],
            gamma: 1.0,
            set: whole(),
        };
        let r = solve_epigraph(&input, 1e-10, 10_000).unwrap();
        assert_eq!(r.x_next.coords()[0], 0.0);
        assert!(r.residual <= 1e-10);
    }

    #[test]
    fn simplex_weight_matches_epigraph_for_single_objective() {
        let input = SubproblemInput {
            xk: pt(&[1.0, 0.0]),
            grads: vec![vec![1.0, 0.0]],
            f_specs: vec![FunctionSpec::Zero],
            f_at_xk: vec![0.0],
            gamma: 0.5,
            set: whole(),
        };
        let a = solve_epigraph(&input, 1e-10, 10_000).unwrap();
        let b = solve_simplex_weight(&input, 1e-10, 10_000).unwrap();
        assert!(linalg::dist(a.x_next.coords(), b.x_next.coords()) < 1e-9);
        assert_eq!(b.weights, vec![1.0]);
        assert!((a.objective_value - b.objective_value).abs() < 1e-9);
    }

    #[test]
    fn symmetric_pair_splits_weights() {
        // pieces +x and -x are mirror images about x^k = 0
        let input = SubproblemInput {
            xk: pt(&[0.0]),
            grads: vec![vec![1.0], vec![-1.0]],
            f_specs: vec![FunctionSpec::Zero, FunctionSpec::Zero],
            f_at_xk: vec![0.0, 0.0],
            gamma: 0.5,
            set: whole(),
        };
        let r = solve_simplex_weight(&input, 1e-10, 10_000).unwrap();
        assert!((r.weights[0] - 0.5).abs() < 1e-6, "weights {:?}", r.weights);
        assert!(r.x_next.coords()[0].abs() < 1e-8);
    }

    #[test]
    fn bruteforce_rejects_high_dimension() {
        let input = SubproblemInput {
            xk: pt(&[0.0, 0.0, 0.0]),
            grads: vec![vec![0.0, 0.0, 0.0]],
            f_specs: vec![FunctionSpec::Zero],
            f_at_xk: vec![0.0],
            gamma: 1.0,
            set: whole(),
        };
        assert!(matches!(
            solve_bruteforce(&input, 1e-2),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn objective_never_exceeds_zero() {
        // the value at x = x^k is exactly 0, so the minimizer scores <= 0
        let input = SubproblemInput {
            xk: pt(&[0.4, -0.2]),
            grads: vec![vec![0.3, 0.1], vec![-0.2, 0.4]],
            f_specs: vec![
                FunctionSpec::WeightedL1 { w: vec![1.0, 0.5] },
                FunctionSpec::Zero,
            ],
            f_at_xk: vec![0.4 + 0.5 * 0.2, 0.0],
            gamma: 0.7,
            set: FeasibleSetSpec::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] },
        };
        for res in [
            solve_epigraph(&input, 1e-10, 20_000).unwrap(),
            solve_simplex_weight(&input, 1e-10, 20_000).unwrap(),
        ] {
            assert!(res.objective_value <= 1e-12);
            let s: f64 = res.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}
