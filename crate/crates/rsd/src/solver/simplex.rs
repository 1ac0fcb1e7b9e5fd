//! Dense two-phase primal simplex with Bland's rule, plus a row-activation
//! wrapper for programs with many more rows than columns.

use super::{LinearProgram, RowSense, SolveOutcome, SolveStatus, SolverOptions, VarLower};
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-9;

/// Solve a linear program. Deterministic: Bland's rule everywhere, ties by
/// lowest index. Optimal solutions are re-verified against every row; the
/// residual must stay within `tol * residual_scale`.
pub fn lp_solve(lp: &LinearProgram, options: &SolverOptions) -> Result<SolveOutcome> {
    lp.validate()?;
    let outcome = if lp.rows.len() <= options.activation_threshold {
        let sub = solve_rows(lp, &(0..lp.rows.len()).collect::<Vec<_>>(), options)?;
        finish(lp, sub)
    } else {
        solve_by_activation(lp, options)?
    };
    if let SolveOutcome { status: SolveStatus::Optimal, solution: Some(x), .. } = &outcome {
        let worst = lp.max_violation(x);
        let allowed = options.tol * lp.residual_scale();
        if worst > allowed {
            return Err(Error::Solver {
                status: "residual".into(),
                context: format!("optimal point violates constraints by {worst:e} (allowed {allowed:e})"),
            });
        }
    }
    Ok(outcome)
}

fn finish(lp: &LinearProgram, sub: Subset) -> SolveOutcome {
    match sub.status {
        SubsetStatus::Optimal { x } => {
            let obj = lp.objective_value(&x);
            SolveOutcome::optimal(x, obj, sub.pivots)
        }
        SubsetStatus::Infeasible => SolveOutcome::of_status(SolveStatus::Infeasible, sub.pivots),
        SubsetStatus::Unbounded { .. } => SolveOutcome::of_status(SolveStatus::Unbounded, sub.pivots),
        SubsetStatus::PivotLimit => SolveOutcome::of_status(SolveStatus::IterationLimit, sub.pivots),
    }
}

/// Outer loop for tall programs: solve on a working subset of rows, then pull
/// in the most violated inactive rows (or, when the subset is unbounded, the
/// rows that best block the certificate ray) until the full program checks
/// out. Equality rows are always active.
fn solve_by_activation(lp: &LinearProgram, options: &SolverOptions) -> Result<SolveOutcome> {
    let m = lp.rows.len();
    let mut active: Vec<bool> = vec![false; m];
    // duplicate rows add nothing to a working set and pile degenerate
    // artificials onto phase 1, so activation skips exact copies
    let row_key = |i: usize| -> Vec<u64> {
        lp.rows[i]
            .coeffs
            .iter()
            .map(|v| v.to_bits())
            .chain(std::iter::once(lp.rows[i].rhs.to_bits()))
            .collect()
    };
    let mut seen: std::collections::HashSet<Vec<u64>> = std::collections::HashSet::new();
    for (i, row) in lp.rows.iter().enumerate() {
        if row.sense == RowSense::Eq {
            active[i] = true;
            seen.insert(row_key(i));
        }
    }
    // seed with the rows most violated at the origin
    let mut seed: Vec<usize> = (0..m)
        .filter(|&i| !active[i] && lp.rows[i].rhs < 0.0)
        .collect();
    seed.sort_by(|&a, &b| {
        lp.rows[a].rhs.partial_cmp(&lp.rows[b].rhs).unwrap().then(a.cmp(&b))
    });
    let mut budget = options.activation_threshold.saturating_sub(active.iter().filter(|&&a| a).count());
    for &i in &seed {
        if budget == 0 {
            break;
        }
        if seen.insert(row_key(i)) {
            active[i] = true;
            budget -= 1;
        }
    }

    let tol = options.tol * lp.residual_scale();
    let batch = 32;
    let mut pivots = 0u64;
    let debug = std::env::var("RSD_LP_DEBUG").is_ok();
    for _round in 0..=m {
        let working: Vec<usize> = (0..m).filter(|&i| active[i]).collect();
        let sub = solve_rows(lp, &working, options)?;
        pivots += sub.pivots;
        if debug {
            let tag = match &sub.status {
                SubsetStatus::Optimal { .. } => "optimal",
                SubsetStatus::Infeasible => "INFEASIBLE",
                SubsetStatus::Unbounded { .. } => "unbounded",
                SubsetStatus::PivotLimit => "pivot-limit",
            };
            eprintln!("round {_round}: working {} rows, {} pivots, {tag}", working.len(), sub.pivots);
        }
        match sub.status {
            SubsetStatus::Infeasible => {
                return Ok(SolveOutcome::of_status(SolveStatus::Infeasible, pivots));
            }
            SubsetStatus::PivotLimit => {
                return Ok(SolveOutcome::of_status(SolveStatus::IterationLimit, pivots));
            }
            SubsetStatus::Optimal { x } => {
                let mut violated: Vec<(usize, f64)> = Vec::new();
                for i in 0..m {
                    if active[i] {
                        continue;
                    }
                    let row = &lp.rows[i];
                    let lhs: f64 = row.coeffs.iter().zip(&x).map(|(a, v)| a * v).sum();
                    let gap = lhs - row.rhs;
                    if gap > tol {
                        violated.push((i, gap));
                    }
                }
                if violated.is_empty() {
                    let obj = lp.objective_value(&x);
                    return Ok(SolveOutcome::optimal(x, obj, pivots));
                }
                violated.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
                let mut added = 0usize;
                for &(i, _) in &violated {
                    if added == batch {
                        break;
                    }
                    if seen.insert(row_key(i)) {
                        active[i] = true;
                        added += 1;
                    }
                }
                if added == 0 {
                    // every violated row duplicates an active one: the subset
                    // optimum is drifting past the shared tolerance
                    return Err(Error::Solver {
                        status: "activation".into(),
                        context: "violated rows are all duplicates of active rows".into(),
                    });
                }
            }
            SubsetStatus::Unbounded { ray } => {
                let norm = ray.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
                let mut blocking: Vec<(usize, f64)> = Vec::new();
                for i in 0..m {
                    if active[i] {
                        continue;
                    }
                    let row = &lp.rows[i];
                    let along: f64 = row.coeffs.iter().zip(&ray).map(|(a, v)| a * v).sum();
                    let scale = row.coeffs.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
                    if along > 1e-9 * scale * norm {
                        blocking.push((i, along / (scale * norm)));
                    }
                }
                if blocking.is_empty() {
                    return Ok(SolveOutcome::of_status(SolveStatus::Unbounded, pivots));
                }
                blocking.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
                let mut added = 0usize;
                for &(i, _) in &blocking {
                    if added == batch {
                        break;
                    }
                    if seen.insert(row_key(i)) {
                        active[i] = true;
                        added += 1;
                    }
                }
                if added == 0 {
                    return Ok(SolveOutcome::of_status(SolveStatus::Unbounded, pivots));
                }
            }
        }
    }
    Err(Error::Solver {
        status: "activation".into(),
        context: "row-activation loop failed to settle within the row budget".into(),
    })
}

enum SubsetStatus {
    Optimal { x: Vec<f64> },
    Infeasible,
    Unbounded { ray: Vec<f64> },
    PivotLimit,
}

struct Subset {
    status: SubsetStatus,
    pivots: u64,
}

/// Which original quantity a standard-form column carries.
#[derive(Clone, Copy, PartialEq)]
enum Col {
    Plus(usize),
    Minus(usize),
    Slack,
    Artificial,
}

struct Tableau {
    cols: Vec<Col>,
    rows: Vec<Vec<f64>>, // m x (ncols + 1), rhs last
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    banned: Vec<bool>,
    pivots: u64,
    limit: u64,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        *self.rows[i].last().unwrap()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.rows[r].len();
        let inv = 1.0 / self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        self.rows[r][c] = 1.0;
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][c];
            if factor == 0.0 {
                continue;
            }
            for j in 0..width {
                self.rows[i][j] -= factor * self.rows[r][j];
            }
            self.rows[i][c] = 0.0;
        }
        self.in_basis[self.basis[r]] = false;
        self.in_basis[c] = true;
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Reduced costs recomputed from the phase's base cost vector and the
    /// current basis. Basic tableau columns are exact unit vectors, so this
    /// carries none of the drift the incrementally priced row accumulates.
    fn reprice(&self, base: &[f64]) -> Vec<f64> {
        let mut cost = base.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            let factor = base[self.basis[i]];
            if factor != 0.0 {
                for (c, v) in cost.iter_mut().zip(row.iter()) {
                    *c -= factor * v;
                }
            }
        }
        for &b in &self.basis {
            cost[b] = 0.0;
        }
        cost
    }

    /// Run the simplex, re-pricing the cost row from `base` at every claimed
    /// termination and resuming when fresh reduced costs still show an
    /// eligible entering column. Claims are only accepted once confirmed
    /// against drift-free costs; each resumed round performs at least one
    /// pivot, so the pivot budget bounds the loop.
    fn run_refreshed(&mut self, base: &[f64]) -> Result<RunEnd> {
        let mut cost = self.reprice(base);
        loop {
            let end = self.run(&mut cost)?;
            if matches!(end, RunEnd::PivotLimit) {
                return Ok(RunEnd::PivotLimit);
            }
            let fresh = self.reprice(base);
            let entering = (0..self.cols.len())
                .find(|&j| !self.banned[j] && !self.in_basis[j] && fresh[j] < -COST_TOL);
            match end {
                RunEnd::Converged if entering.is_none() => return Ok(RunEnd::Converged),
                RunEnd::Unbounded { entering: c } if fresh[c] < -COST_TOL => {
                    return Ok(RunEnd::Unbounded { entering: c })
                }
                RunEnd::Unbounded { .. } if entering.is_none() => return Ok(RunEnd::Converged),
                _ => cost = fresh,
            }
        }
    }

    /// Bland's rule on the given priced cost row: lowest eligible entering
    /// index, ratio ties broken by lowest basis index. Anti-cycling and
    /// deterministic.
    fn run(&mut self, cost: &mut [f64]) -> Result<RunEnd> {
        loop {
            if self.pivots >= self.limit {
                return Ok(RunEnd::PivotLimit);
            }
            let entering = (0..self.cols.len())
                .find(|&j| !self.banned[j] && cost[j] < -COST_TOL && !self.in_basis[j]);
            let Some(c) = entering else { return Ok(RunEnd::Converged) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((best_i, best)) => {
                            ratio < best - 1e-12
                                || ((ratio - best).abs() <= 1e-12 && self.basis[i] < self.basis[best_i])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return Ok(RunEnd::Unbounded { entering: c }) };
            let left = self.basis[r];
            self.pivot(r, c);
            if self.cols[left] == Col::Artificial {
                self.banned[left] = true;
            }
            // price the cost row against the updated pivot row
            let factor = cost[c];
            if factor != 0.0 {
                let width = self.rows[r].len();
                for j in 0..width {
                    cost[j] -= factor * self.rows[r][j];
                }
                cost[c] = 0.0;
            }
        }
    }
}

enum RunEnd {
    Converged,
    Unbounded { entering: usize },
    PivotLimit,
}

/// Two-phase simplex over the selected subset of rows (upper-bound rows are
/// appended internally and always enforced).
fn solve_rows(lp: &LinearProgram, row_idx: &[usize], options: &SolverOptions) -> Result<Subset> {
    let n = lp.num_vars();
    let mut cols: Vec<Col> = Vec::with_capacity(2 * n);
    let mut plus = vec![0usize; n];
    let mut minus = vec![usize::MAX; n];
    for j in 0..n {
        plus[j] = cols.len();
        cols.push(Col::Plus(j));
        if lp.lower[j] == VarLower::Free {
            minus[j] = cols.len();
            cols.push(Col::Minus(j));
        }
    }

    // gather (coeffs, sense, rhs) with rhs >= 0; uppers ride along as Le rows
    struct Raw {
        coeffs: Vec<f64>,
        ge: bool,
        eq: bool,
        rhs: f64,
    }
    let expand = |coeffs: &mut Vec<f64>, j: usize, a: f64, plus: &[usize], minus: &[usize]| {
        coeffs[plus[j]] += a;
        if minus[j] != usize::MAX {
            coeffs[minus[j]] -= a;
        }
    };
    let mut raws: Vec<Raw> = Vec::with_capacity(row_idx.len() + n);
    let mut push_raw = |coeffs_orig: &[(usize, f64)], sense: RowSense, rhs: f64, cols_len: usize| {
        let mut coeffs = vec![0.0; cols_len];
        for &(j, a) in coeffs_orig {
            expand(&mut coeffs, j, a, &plus, &minus);
        }
        let mut rhs = rhs;
        let mut flip = false;
        if rhs < 0.0 {
            for v in coeffs.iter_mut() {
                *v = -*v;
            }
            rhs = -rhs;
            flip = true;
        }
        raws.push(Raw { coeffs, ge: sense == RowSense::Le && flip, eq: sense == RowSense::Eq, rhs });
    };
    for &i in row_idx {
        let row = &lp.rows[i];
        let sparse: Vec<(usize, f64)> = row.coeffs.iter().copied().enumerate().collect();
        push_raw(&sparse, row.sense, row.rhs, cols.len());
    }
    for j in 0..n {
        if let Some(u) = lp.upper[j] {
            push_raw(&[(j, 1.0)], RowSense::Le, u, cols.len());
        }
    }

    // attach slack / surplus / artificial columns
    let m = raws.len();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut needs_artificial: Vec<usize> = Vec::new();
    for raw in &mut raws {
        rows.push(std::mem::take(&mut raw.coeffs));
    }
    for (i, raw) in raws.iter().enumerate() {
        if raw.eq {
            needs_artificial.push(i);
        } else if raw.ge {
            cols.push(Col::Slack);
            for (k, row) in rows.iter_mut().enumerate() {
                row.push(if k == i { -1.0 } else { 0.0 });
            }
            needs_artificial.push(i);
        } else {
            let c = cols.len();
            cols.push(Col::Slack);
            for (k, row) in rows.iter_mut().enumerate() {
                row.push(if k == i { 1.0 } else { 0.0 });
            }
            basis.push(c);
        }
    }
    // artificials come last; initial basis order must follow row order
    let mut basis_full = vec![usize::MAX; m];
    {
        let mut slack_iter = basis.into_iter();
        let mut art_rows = needs_artificial.iter().copied().peekable();
        for (i, b) in basis_full.iter_mut().enumerate() {
            if art_rows.peek() == Some(&i) {
                art_rows.next();
                let c = cols.len();
                cols.push(Col::Artificial);
                for (k, row) in rows.iter_mut().enumerate() {
                    row.push(if k == i { 1.0 } else { 0.0 });
                }
                *b = c;
            } else {
                *b = slack_iter.next().expect("slack for non-artificial row");
            }
        }
    }
    for (i, raw) in raws.iter().enumerate() {
        rows[i].push(raw.rhs);
    }

    let ncols = cols.len();
    let mut in_basis = vec![false; ncols];
    for &b in &basis_full {
        in_basis[b] = true;
    }
    let mut t = Tableau {
        cols,
        rows,
        basis: basis_full,
        in_basis,
        banned: vec![false; ncols],
        pivots: 0,
        limit: options.max_pivots,
    };

    // phase 1: minimize the artificial sum
    if !needs_artificial.is_empty() {
        let mut base = vec![0.0; ncols + 1];
        for j in 0..ncols {
            if t.cols[j] == Col::Artificial {
                base[j] = 1.0;
            }
        }
        match t.run_refreshed(&base)? {
            RunEnd::PivotLimit => return Ok(Subset { status: SubsetStatus::PivotLimit, pivots: t.pivots }),
            RunEnd::Unbounded { .. } => {
                return Err(Error::Solver {
                    status: "internal".into(),
                    context: "phase 1 objective is bounded by construction".into(),
                })
            }
            RunEnd::Converged => {}
        }
        // measure infeasibility from the basic artificial values themselves
        let infeasibility: f64 = (0..t.rows.len())
            .filter(|&i| t.cols[t.basis[i]] == Col::Artificial)
            .map(|i| t.rhs(i).max(0.0))
            .sum();
        if infeasibility > COST_TOL * (1.0 + lp.residual_scale()) {
            return Ok(Subset { status: SubsetStatus::Infeasible, pivots: t.pivots });
        }
        // drive leftover artificials out of the basis; rows that resist are
        // linearly dependent and get dropped
        let mut drop_rows: Vec<usize> = Vec::new();
        for i in 0..t.rows.len() {
            if t.cols[t.basis[i]] != Col::Artificial {
                continue;
            }
            let pivot_col = (0..ncols)
                .find(|&j| t.cols[j] != Col::Artificial && t.rows[i][j].abs() > PIVOT_TOL);
            match pivot_col {
                Some(c) => {
                    let left = t.basis[i];
                    t.pivot(i, c);
                    t.banned[left] = true;
                }
                None => drop_rows.push(i),
            }
        }
        for &i in drop_rows.iter().rev() {
            t.in_basis[t.basis[i]] = false;
            t.rows.remove(i);
            t.basis.remove(i);
        }
        for j in 0..ncols {
            if t.cols[j] == Col::Artificial {
                t.banned[j] = true;
            }
        }
    }

    // phase 2: original objective on the split columns
    let mut base = vec![0.0; ncols + 1];
    for j in 0..ncols {
        match t.cols[j] {
            Col::Plus(v) => base[j] = lp.objective[v],
            Col::Minus(v) => base[j] = -lp.objective[v],
            _ => {}
        }
    }
    let end = t.run_refreshed(&base)?;
    let pivots = t.pivots;
    match end {
        RunEnd::PivotLimit => Ok(Subset { status: SubsetStatus::PivotLimit, pivots }),
        RunEnd::Unbounded { entering } => {
            let mut ray_std = vec![0.0; ncols];
            ray_std[entering] = 1.0;
            for i in 0..t.rows.len() {
                ray_std[t.basis[i]] = -t.rows[i][entering];
            }
            let mut ray = vec![0.0; n];
            for (j, col) in t.cols.iter().enumerate() {
                match *col {
                    Col::Plus(v) => ray[v] += ray_std[j],
                    Col::Minus(v) => ray[v] -= ray_std[j],
                    _ => {}
                }
            }
            Ok(Subset { status: SubsetStatus::Unbounded { ray }, pivots })
        }
        RunEnd::Converged => {
            let mut x_std = vec![0.0; ncols];
            for i in 0..t.rows.len() {
                x_std[t.basis[i]] = t.rhs(i).max(0.0);
            }
            let mut x = vec![0.0; n];
            for (j, col) in t.cols.iter().enumerate() {
                match *col {
                    Col::Plus(v) => x[v] += x_std[j],
                    Col::Minus(v) => x[v] -= x_std[j],
                    _ => {}
                }
            }
            Ok(Subset { status: SubsetStatus::Optimal { x }, pivots })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{sample_stream, uniform_in, StreamRole};

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn simple_vertex_optimum() {
        let mut lp = LinearProgram::new(vec![-1.0, -1.0]);
        lp.push_le(vec![1.0, 1.0], 1.0);
        let out = lp_solve(&lp, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective.unwrap() + 1.0).abs() < 1e-9);
        let x = out.solution.unwrap();
        assert!((x[0] + x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_row() {
        let mut lp = LinearProgram::new(vec![1.0, 0.0]);
        lp.push_eq(vec![1.0, 1.0], 2.0);
        lp.push_le(vec![1.0, -1.0], 0.0);
        let out = lp_solve(&lp, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!(out.objective.unwrap().abs() < 1e-9);
        let x = out.solution.unwrap();
        assert!((x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_program() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.push_le(vec![1.0], -1.0); // x <= -1 with x >= 0
        let out = lp_solve(&lp, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
        assert!(out.solution.is_none());
        assert!(out.objective.is_none());
    }

    #[test]
    fn unbounded_programs() {
        let lp = LinearProgram::new(vec![-1.0]);
        let out = lp_solve(&lp, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Unbounded);

        // free variable with nonzero cost and no rows
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.set_free(0);
        let out = lp_solve(&lp, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Unbounded);
    }

    #[test]
    fn upper_bound_binds() {
        let mut lp = LinearProgram::new(vec![-1.0]);
        lp.set_upper(0, 3.5);
        let out = lp_solve(&lp, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective.unwrap() + 3.5).abs() < 1e-9);
    }

    #[test]
    fn free_variable_reaches_negative_values() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.set_free(0);
        lp.push_le(vec![-1.0], 2.0); // x >= -2
        let out = lp_solve(&lp, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        let x = out.solution.unwrap();
        assert!((x[0] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_equality() {
        let mut lp = LinearProgram::new(vec![0.0, 1.0]);
        lp.push_eq(vec![-1.0, 0.0], -3.0); // x0 = 3
        lp.push_le(vec![-1.0, -1.0], -4.0); // x0 + x1 >= 4
        let out = lp_solve(&lp, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        let x = out.solution.unwrap();
        assert!((x[0] - 3.0).abs() < 1e-9);
        assert!((x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn random_feasible_programs_stay_feasible() {
        let mut rng = sample_stream(7, 0, StreamRole::Design, 0);
        for case in 0..50u64 {
            let n = 4 + (case % 5) as usize;
            let m = 3 + (case % 7) as usize;
            let x0: Vec<f64> = (0..n).map(|_| uniform_in(&mut rng, 0.1, 2.0)).collect();
            let mut lp = LinearProgram::new((0..n).map(|_| uniform_in(&mut rng, 0.1, 1.0)).collect());
            for _ in 0..m {
                let coeffs: Vec<f64> = (0..n).map(|_| uniform_in(&mut rng, -1.0, 1.0)).collect();
                let lhs: f64 = coeffs.iter().zip(&x0).map(|(a, v)| a * v).sum();
                lp.push_le(coeffs, lhs + uniform_in(&mut rng, 0.0, 0.5));
            }
            let out = lp_solve(&lp, &opts()).unwrap();
            assert_eq!(out.status, SolveStatus::Optimal, "case {case}");
            // positive costs and x >= 0 keep the program bounded; x0 feasible
            let reference = lp.objective_value(&x0);
            assert!(out.objective.unwrap() <= reference + 1e-9, "case {case}");
        }
    }

    #[test]
    fn activation_matches_direct_solve_on_tall_program() {
        let mut rng = sample_stream(11, 0, StreamRole::Design, 0);
        let n = 4;
        let x0: Vec<f64> = (0..n).map(|_| uniform_in(&mut rng, 0.2, 1.5)).collect();
        let mut lp = LinearProgram::new(vec![1.0; n]);
        for _ in 0..500 {
            let coeffs: Vec<f64> = (0..n).map(|_| uniform_in(&mut rng, -1.0, 0.2)).collect();
            let lhs: f64 = coeffs.iter().zip(&x0).map(|(a, v)| a * v).sum();
            lp.push_le(coeffs, lhs + uniform_in(&mut rng, 0.0, 0.1));
        }
        let tall = lp_solve(&lp, &opts()).unwrap();
        let direct = lp_solve(&lp, &SolverOptions { activation_threshold: 10_000, ..opts() }).unwrap();
        assert_eq!(tall.status, SolveStatus::Optimal);
        assert_eq!(direct.status, SolveStatus::Optimal);
        assert!((tall.objective.unwrap() - direct.objective.unwrap()).abs() < 1e-7);
    }

    #[test]
    fn activation_detects_unbounded_tall_program() {
        // many rows, none of which blocks the descent direction of x1
        let mut lp = LinearProgram::new(vec![0.0, -1.0]);
        for i in 0..1000 {
            lp.push_le(vec![1.0, 0.0], 1.0 + i as f64 / 1000.0);
        }
        let out = lp_solve(&lp, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Unbounded);
    }

    #[test]
    fn activation_detects_infeasible_tall_program() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        for i in 0..500 {
            lp.push_le(vec![1.0, 1.0], 2.0 + i as f64 / 500.0);
        }
        lp.push_le(vec![-1.0, -1.0], -5.0); // x0 + x1 >= 5 contradicts <= 2
        let out = lp_solve(&lp, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
    }

    #[test]
    fn degenerate_ties_terminate() {
        // several rows active at the optimum with identical ratios
        let mut lp = LinearProgram::new(vec![-1.0, -2.0, -3.0]);
        lp.push_le(vec![1.0, 1.0, 1.0], 1.0);
        lp.push_le(vec![1.0, 1.0, 1.0], 1.0);
        lp.push_le(vec![0.0, 1.0, 1.0], 1.0);
        lp.push_le(vec![0.0, 0.0, 1.0], 1.0);
        let out = lp_solve(&lp, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective.unwrap() + 3.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_malformed_programs() {
        let lp = LinearProgram::new(vec![]);
        assert!(lp_solve(&lp, &opts()).is_err());

        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.push_le(vec![1.0], 1.0);
        assert!(lp_solve(&lp, &opts()).is_err());

        let mut lp = LinearProgram::new(vec![1.0]);
        lp.push_le(vec![f64::NAN], 1.0);
        assert!(lp_solve(&lp, &opts()).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let mut lp = LinearProgram::new(vec![-1.0, 2.0]);
        lp.push_le(vec![1.0, 1.0], 1.0);
        lp.push_eq(vec![1.0, -1.0], 0.25);
        lp.set_free(1);
        lp.set_upper(0, 0.75);
        let json = serde_json::to_string(&lp).unwrap();
        let back: LinearProgram = serde_json::from_str(&json).unwrap();
        assert_eq!(lp, back);
        let a = lp_solve(&lp, &opts()).unwrap();
        let b = lp_solve(&back, &opts()).unwrap();
        assert_eq!(a.solution, b.solution);
    }
}
