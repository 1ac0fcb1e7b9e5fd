//! Minimization of a pointwise maximum of convex quadratics.
//!
//! Two cooperating phases. A smoothing phase anneals softmax weights over
//! the terms and solves the weighted quadratic exactly at each step; every
//! weight vector yields a rigorous global lower bound by weak duality
//! (the weighted sum under-estimates the max), so smooth instances certify
//! their own optimality gap without any cutting planes. Instances the
//! smoothing cannot close (singular weighted Hessians, flat directions)
//! fall through to a Kelley cutting-plane loop over an auto-doubling box.

use super::{lp_solve, LinearProgram, SolveOutcome, SolveStatus, SolverOptions};
use crate::error::{Error, Result};

/// One quadratic `u' Q u + b' u + c`. `Q` must be positive semidefinite for
/// the lower bounds to be valid.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadraticTerm {
    pub quadratic: Vec<Vec<f64>>,
    pub linear: Vec<f64>,
    pub constant: f64,
}

impl QuadraticTerm {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        let mut quad = 0.0;
        for (row, &ui) in self.quadratic.iter().zip(u) {
            let along: f64 = row.iter().zip(u).map(|(q, v)| q * v).sum();
            quad += ui * along;
        }
        quad + self.linear.iter().zip(u).map(|(b, v)| b * v).sum::<f64>() + self.constant
    }

    /// Gradient (Q + Q')u + b; the symmetrization makes slightly asymmetric
    /// inputs behave like their symmetric part, matching `eval`.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut g = self.linear.clone();
        for i in 0..d {
            for j in 0..d {
                g[i] += (self.quadratic[i][j] + self.quadratic[j][i]) * u[j];
            }
        }
        g
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.linear.len() != dim || self.quadratic.len() != dim {
            return Err(Error::domain("minimax_quadratic_solve", "terms must share one dimension"));
        }
        for row in &self.quadratic {
            if row.len() != dim {
                return Err(Error::domain("minimax_quadratic_solve", "quadratic matrix must be square"));
            }
            if !row.iter().all(|v| v.is_finite()) {
                return Err(Error::domain("minimax_quadratic_solve", "non-finite quadratic entry"));
            }
        }
        if !self.linear.iter().all(|v| v.is_finite()) || !self.constant.is_finite() {
            return Err(Error::domain("minimax_quadratic_solve", "non-finite term entry"));
        }
        Ok(())
    }
}

/// Solve tuning knobs.
#[derive(Debug, Clone, Copy)]
pub struct MinimaxOptions {
    /// Stop when upper - lower <= gap_tol * (1 + |upper|).
    pub gap_tol: f64,
    /// Initial cutting-plane trust box half-width around the origin.
    pub half_width: f64,
    /// The box doubles when the master optimum lands on its boundary, up to
    /// this half-width.
    pub max_half_width: f64,
    /// Outer rounds of the cutting-plane loop.
    pub max_rounds: u64,
    /// Cut-pool cap; the loosest cuts at the incumbent are dropped beyond
    /// it. A reduced pool still under-estimates, so bounds stay valid.
    pub max_cuts: usize,
}

impl Default for MinimaxOptions {
    fn default() -> Self {
        MinimaxOptions {
            gap_tol: 1e-6,
            half_width: 10.0,
            max_half_width: (2.0f64).powi(40),
            max_rounds: 2000,
            max_cuts: 400,
        }
    }
}

struct Cut {
    gradient: Vec<f64>,
    /// g . u - gamma <= offset
    offset: f64,
}

/// Keep the cuts that bind most tightly at the incumbent (plus the newest
/// one); slackness is measured against the incumbent objective level.
fn prune_cuts(cuts: &mut Vec<Cut>, at: &[f64], level: f64, keep: usize) {
    if cuts.len() <= keep {
        return;
    }
    let newest = cuts.len() - 1;
    let mut order: Vec<(f64, usize)> = cuts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let reach: f64 = c.gradient.iter().zip(at).map(|(g, v)| g * v).sum();
            (c.offset - (reach - level), i)
        })
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut selected: Vec<usize> = order.iter().take(keep).map(|&(_, i)| i).collect();
    if !selected.contains(&newest) {
        selected.pop();
        selected.push(newest);
    }
    selected.sort_unstable();
    let mut kept = Vec::with_capacity(selected.len());
    for (i, cut) in std::mem::take(cuts).into_iter().enumerate() {
        if selected.binary_search(&i).is_ok() {
            kept.push(cut);
        }
    }
    *cuts = kept;
}

/// Cholesky solve of a symmetric positive definite system; None when the
/// matrix is not numerically positive definite.
fn solve_spd(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for k in 0..n {
        let mut pivot = a[k][k];
        for j in 0..k {
            pivot -= a[k][j] * a[k][j];
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return None;
        }
        let root = pivot.sqrt();
        a[k][k] = root;
        for i in k + 1..n {
            let mut v = a[i][k];
            for j in 0..k {
                v -= a[i][j] * a[k][j];
            }
            a[i][k] = v / root;
        }
    }
    for i in 0..n {
        for j in 0..i {
            rhs[i] -= a[i][j] * rhs[j];
        }
        rhs[i] /= a[i][i];
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            rhs[i] -= a[j][i] * rhs[j];
        }
        rhs[i] /= a[i][i];
    }
    Some(rhs)
}

/// Exact minimizer and minimum of `sum_k w_k f_k(u) + ridge ||u||^2`. The
/// minimum is a global lower bound on the minimax value whenever the weights
/// lie on the simplex. None when the weighted Hessian is not positive
/// definite.
fn solve_weighted(terms: &[QuadraticTerm], weights: &[f64], ridge: f64) -> Option<(Vec<f64>, f64)> {
    let dim = terms[0].dim();
    let mut hess = vec![vec![0.0; dim]; dim];
    let mut shift = vec![0.0; dim];
    let mut constant = 0.0;
    for (t, &w) in terms.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for i in 0..dim {
            for j in 0..dim {
                hess[i][j] += w * (t.quadratic[i][j] + t.quadratic[j][i]);
            }
            shift[i] += w * t.linear[i];
        }
        constant += w * t.constant;
    }
    for (i, row) in hess.iter_mut().enumerate() {
        row[i] += 2.0 * ridge;
    }
    let rhs: Vec<f64> = shift.iter().map(|b| -b).collect();
    let u = solve_spd(hess, rhs)?;
    // with H u = -b the quadratic minimum collapses to c + b . u / 2
    let value = constant + 0.5 * shift.iter().zip(&u).map(|(b, v)| b * v).sum::<f64>();
    Some((u, value))
}

/// Dense LU with partial pivoting. None when a pivot collapses, which the
/// callers treat as "this active set is degenerate, change it".
fn solve_lu(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    for k in 0..n {
        let pivot_row = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[pivot_row][k].abs() <= 1e-14 * (1.0 + scale) {
            return None;
        }
        a.swap(k, pivot_row);
        rhs.swap(k, pivot_row);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == 0.0 {
                continue;
            }
            for j in k + 1..n {
                a[i][j] -= f * a[k][j];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            rhs[i] -= a[i][j] * rhs[j];
        }
        rhs[i] /= a[i][i];
        if !rhs[i].is_finite() {
            return None;
        }
    }
    Some(rhs)
}

struct KktPoint {
    u: Vec<f64>,
    weights: Vec<f64>,
}

/// Newton's method on the equality form of the optimality system for
/// `min_u max_{k in active} f_k(u) + ridge ||u||^2`: stationarity of the
/// weighted sum, all active terms level with gamma, weights summing to one.
/// Weights are free to go negative here; the caller inspects their signs.
fn newton_kkt(
    terms: &[QuadraticTerm],
    active: &[usize],
    ridge: f64,
    start: &[f64],
) -> Option<KktPoint> {
    let dim = start.len();
    let m = active.len();
    let size = dim + m + 1;
    let full_value = |k: usize, u: &[f64]| {
        terms[k].eval(u) + ridge * u.iter().map(|v| v * v).sum::<f64>()
    };
    let full_gradient = |k: usize, u: &[f64]| {
        let mut g = terms[k].gradient(u);
        for (gi, ui) in g.iter_mut().zip(u) {
            *gi += 2.0 * ridge * ui;
        }
        g
    };

    let mut u = start.to_vec();
    let mut w = vec![1.0 / m as f64; m];
    let mut gamma = active
        .iter()
        .map(|&k| full_value(k, &u))
        .fold(f64::NEG_INFINITY, f64::max);

    let residual = |u: &[f64], w: &[f64], gamma: f64| {
        let mut r = vec![0.0; size];
        for (i, &k) in active.iter().enumerate() {
            let g = full_gradient(k, u);
            for (rj, gj) in r.iter_mut().zip(&g) {
                *rj += w[i] * gj;
            }
            r[dim + i] = full_value(k, u) - gamma;
        }
        r[dim + m] = w.iter().sum::<f64>() - 1.0;
        r
    };
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |a, &v| a.max(v.abs()));

    let mut r = residual(&u, &w, gamma);
    for _ in 0..40 {
        let spread = u.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let tol = 1e-12 * (1.0 + gamma.abs() + spread);
        if norm(&r) <= tol {
            break;
        }
        let mut jac = vec![vec![0.0; size]; size];
        for (i, &k) in active.iter().enumerate() {
            let g = full_gradient(k, &u);
            let t = &terms[k];
            for a in 0..dim {
                for b in 0..dim {
                    jac[a][b] += w[i] * (t.quadratic[a][b] + t.quadratic[b][a]);
                }
                jac[a][a] += 2.0 * ridge * w[i];
                jac[a][dim + i] = g[a];
                jac[dim + i][a] = g[a];
            }
            jac[dim + i][dim + m] = -1.0;
            jac[dim + m][dim + i] = 1.0;
        }
        let step = solve_lu(jac, r.iter().map(|v| -v).collect())?;
        // backtrack until the residual shrinks; stalls count as failure
        let base = norm(&r);
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..8 {
            let cu: Vec<f64> = u.iter().zip(&step[..dim]).map(|(a, d)| a + t * d).collect();
            let cw: Vec<f64> = w
                .iter()
                .zip(&step[dim..dim + m])
                .map(|(a, d)| a + t * d)
                .collect();
            let cg = gamma + t * step[dim + m];
            let cr = residual(&cu, &cw, cg);
            if norm(&cr) < base * (1.0 - 1e-4 * t) {
                u = cu;
                w = cw;
                gamma = cg;
                r = cr;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            return None;
        }
    }
    if norm(&r) > 1e-7 * (1.0 + gamma.abs()) {
        return None;
    }
    Some(KktPoint { u, weights: w })
}

struct SeedPoint {
    u: Vec<f64>,
    upper: f64,
    lower: f64,
    evals: u64,
}

/// Close the remaining gap by solving the optimality system on a small
/// active set of terms, exchanging members until the certificates meet.
/// Every bound recorded in `best` stays rigorous: uppers are exact
/// evaluations, lowers come from nonnegative normalized weights through
/// [`solve_weighted`].
fn kkt_refine(terms: &[QuadraticTerm], ridge: f64, gap_tol: f64, best: &mut SeedPoint) {
    let dim = terms[0].dim();
    let count = terms.len();
    let cap = (dim + 1).min(count);
    let upper_at = |u: &[f64]| {
        terms.iter().map(|t| t.eval(u)).fold(f64::NEG_INFINITY, f64::max)
            + ridge * u.iter().map(|v| v * v).sum::<f64>()
    };
    let closed =
        |s: &SeedPoint| s.upper - s.lower <= 0.5 * gap_tol * (1.0 + s.upper.abs());

    // start from the terms nearest the max at the incumbent
    let values: Vec<f64> = terms.iter().map(|t| t.eval(&best.u)).collect();
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let top = values[order[0]];
    let band = (best.upper - best.lower).max(1e-9 * (1.0 + top.abs()));
    let mut active: Vec<usize> = order
        .iter()
        .copied()
        .take(cap)
        .filter(|&k| top - values[k] <= band)
        .collect();
    if active.is_empty() {
        active.push(order[0]);
    }

    for _round in 0..40 {
        let Some(point) = newton_kkt(terms, &active, ridge, &best.u) else {
            // degenerate set: retry without its least promising member
            if active.len() <= 1 {
                return;
            }
            active.pop();
            continue;
        };
        best.evals += 1;
        if let Some((i, _)) = point
            .weights
            .iter()
            .enumerate()
            .find(|(_, &w)| w < -1e-10)
        {
            if active.len() <= 1 {
                return;
            }
            active.remove(i);
            continue;
        }

        let mut full = vec![0.0; count];
        let mut total = 0.0;
        for (&k, &w) in active.iter().zip(&point.weights) {
            let w = w.max(0.0);
            full[k] = w;
            total += w;
        }
        if total > 0.0 {
            for w in &mut full {
                *w /= total;
            }
            if let Some((u_w, lower)) = solve_weighted(terms, &full, ridge) {
                best.lower = best.lower.max(lower);
                let value = upper_at(&u_w);
                if value < best.upper {
                    best.upper = value;
                    best.u = u_w;
                }
            }
        }
        let value = upper_at(&point.u);
        if value < best.upper {
            best.upper = value;
            best.u = point.u.clone();
        }
        if closed(best) {
            return;
        }

        // exchange: bring in the worst violator at the system's point
        let mut worst = 0;
        let mut worst_value = f64::NEG_INFINITY;
        for (k, t) in terms.iter().enumerate() {
            let v = t.eval(&point.u);
            if v > worst_value {
                worst_value = v;
                worst = k;
            }
        }
        if active.contains(&worst) {
            // stable active set with an open gap: nothing more to exchange
            return;
        }
        if active.len() >= cap {
            let (drop, _) = point
                .weights
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("active set is nonempty");
            active.remove(drop);
        }
        active.push(worst);
    }
}

/// Smoothing phase: anneal a softmax temperature over the term values with
/// damped weight updates, re-solving the weighted quadratic each step. The
/// running best primal value and best dual bound certify the gap. None when
/// the exact solves are unavailable (singular Hessian), in which event the
/// caller falls back to cutting planes alone.
fn smoothing_seed(terms: &[QuadraticTerm], ridge: f64, gap_tol: f64) -> Option<SeedPoint> {
    let count = terms.len();
    let upper_at = |u: &[f64]| {
        terms.iter().map(|t| t.eval(u)).fold(f64::NEG_INFINITY, f64::max)
            + ridge * u.iter().map(|v| v * v).sum::<f64>()
    };
    let mut weights = vec![1.0 / count as f64; count];
    let (u, lower) = solve_weighted(terms, &weights, ridge)?;
    let mut best = SeedPoint { upper: upper_at(&u), u, lower, evals: 1 };
    let closed = |s: &SeedPoint| s.upper - s.lower <= 0.5 * gap_tol * (1.0 + s.upper.abs());
    if count == 1 || closed(&best) {
        return Some(best);
    }

    let values: Vec<f64> = terms.iter().map(|t| t.eval(&best.u)).collect();
    let spread = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let mut eta = spread.max(1e-3);
    let mut u = best.u.clone();
    'anneal: for _stage in 0..60 {
        for _ in 0..6 {
            let values: Vec<f64> = terms.iter().map(|t| t.eval(&u)).collect();
            let top = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let mut total = 0.0;
            let softmax: Vec<f64> = values
                .iter()
                .map(|&v| {
                    let e = ((v - top) / eta).exp();
                    total += e;
                    e
                })
                .collect();
            for (w, e) in weights.iter_mut().zip(&softmax) {
                *w = 0.5 * *w + 0.5 * e / total;
            }
            let Some((next, lower)) = solve_weighted(terms, &weights, ridge) else {
                break 'anneal;
            };
            u = next;
            let upper = upper_at(&u);
            best.evals += 1;
            if upper < best.upper {
                best.upper = upper;
                best.u = u.clone();
            }
            if lower > best.lower {
                best.lower = lower;
            }
            if closed(&best) {
                break 'anneal;
            }
        }
        eta *= 0.25;
        if eta < 1e-13 {
            break;
        }
    }
    if !closed(&best) {
        kkt_refine(terms, ridge, gap_tol, &mut best);
    }
    Some(best)
}

/// Minimize max_k f_k(u) + ridge ||u||^2 over free u. Returns the best
/// evaluated point once the certified gap closes; the objective reported is
/// the exact evaluation at that point.
pub fn minimax_quadratic_solve(
    terms: &[QuadraticTerm],
    ridge: f64,
    options: &MinimaxOptions,
) -> Result<SolveOutcome> {
    let Some(first) = terms.first() else {
        return Err(Error::domain("minimax_quadratic_solve", "need at least one term"));
    };
    let dim = first.dim();
    if dim == 0 {
        return Err(Error::domain("minimax_quadratic_solve", "terms must have dimension >= 1"));
    }
    for t in terms {
        t.validate(dim)?;
    }
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(Error::domain("minimax_quadratic_solve", "ridge weight must be finite and >= 0"));
    }

    let ridge_at = |u: &[f64]| ridge * u.iter().map(|v| v * v).sum::<f64>();
    let objective = |u: &[f64]| {
        terms.iter().map(|t| t.eval(u)).fold(f64::NEG_INFINITY, f64::max) + ridge_at(u)
    };
    let gap_closed = |upper: f64, lower: f64| upper - lower <= options.gap_tol * (1.0 + upper.abs());
    // tangent cuts from every term attaining the max (up to a whisker), so
    // kinks get their whole active bundle at once
    let add_cuts_at = |cuts: &mut Vec<Cut>, u: &[f64]| {
        let values: Vec<f64> = terms.iter().map(|t| t.eval(u)).collect();
        let top = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let active = 1e-9 * (1.0 + top.abs());
        let mut added = 0;
        for (k, &v) in values.iter().enumerate() {
            if top - v > active || added >= dim + 2 {
                continue;
            }
            let mut g = terms[k].gradient(u);
            for (gi, ui) in g.iter_mut().zip(u) {
                *gi += 2.0 * ridge * ui;
            }
            let value = v + ridge_at(u);
            let dot: f64 = g.iter().zip(u).map(|(a, w)| a * w).sum();
            cuts.push(Cut { gradient: g, offset: dot - value });
            added += 1;
        }
    };

    let mut half = options.half_width;
    let mut cuts: Vec<Cut> = Vec::new();
    let origin = vec![0.0; dim];
    let mut best_u = origin.clone();
    let mut best_value = objective(&origin);
    // a dual bound stays valid for good; the box bound joins below only
    // when it is globally rigorous
    let mut lower_all = f64::NEG_INFINITY;
    add_cuts_at(&mut cuts, &origin);

    if let Some(seed) = smoothing_seed(terms, ridge, options.gap_tol) {
        if seed.upper < best_value {
            best_value = seed.upper;
            best_u = seed.u.clone();
        }
        lower_all = seed.lower;
        if gap_closed(best_value, lower_all) {
            return Ok(SolveOutcome::optimal(best_u, best_value, seed.evals));
        }
        let norm = seed.u.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        while half < 1.25 * norm && half < options.max_half_width {
            half *= 2.0;
        }
        add_cuts_at(&mut cuts, &seed.u);
    }

    let lp_options = SolverOptions::default();
    for round in 1..=options.max_rounds {
        // master over v = u + half (so v in [0, 2 half]) plus free gamma
        let mut master = LinearProgram::new({
            let mut c = vec![0.0; dim + 1];
            c[dim] = 1.0;
            c
        });
        master.set_free(dim);
        for j in 0..dim {
            master.set_upper(j, 2.0 * half);
        }
        for cut in &cuts {
            let mut coeffs = Vec::with_capacity(dim + 1);
            coeffs.extend_from_slice(&cut.gradient);
            coeffs.push(-1.0);
            let shift: f64 = cut.gradient.iter().sum::<f64>() * half;
            master.push_le(coeffs, cut.offset + shift);
        }
        let out = lp_solve(&master, &lp_options)?;
        let v = out.require_optimal("minimax master program")?;
        let lower = out.objective.expect("optimal master carries an objective");
        let u: Vec<f64> = v[..dim].iter().map(|vj| vj - half).collect();

        let value = objective(&u);
        if value < best_value {
            best_value = value;
            best_u = u.clone();
        }

        // an interior master optimum makes the box bound a global one; at
        // the width cap it is accepted as the search-region bound
        let at_boundary = u.iter().any(|&uj| uj.abs() >= half * (1.0 - 1e-9));
        if !at_boundary || half >= options.max_half_width {
            lower_all = lower_all.max(lower);
        }
        if gap_closed(best_value, lower_all) {
            return Ok(SolveOutcome::optimal(best_u, best_value, round));
        }
        if at_boundary && half < options.max_half_width {
            half *= 2.0;
        }
        add_cuts_at(&mut cuts, &u);
        if cuts.len() > options.max_cuts.max(8) {
            prune_cuts(&mut cuts, &best_u, best_value, options.max_cuts.max(8) * 3 / 4);
        }
    }
    Ok(SolveOutcome::of_status(SolveStatus::IterationLimit, options.max_rounds))
}
