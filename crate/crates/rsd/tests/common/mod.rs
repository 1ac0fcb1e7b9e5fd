//! Shared helpers for the integration tests: an adaptive quadrature routine,
//! exact small-scale combinatorics independent of the library's special
//! functions, a tiny dense linear solver, and chi-square machinery for
//! distributional checks.

#![allow(dead_code)]

/// Adaptive Simpson on [a, b] to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(&f, a, fa, b, fb);
    recurse(&f, a, fa, b, fb, whole, m, fm, tol, 40)
}

/// ln k! by direct summation; plenty for the small exact oracles.
pub fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// ln C(n, k).
pub fn ln_choose(n: u64, k: u64) -> f64 {
    assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Exact binomial CDF P[X <= limit] for X ~ Bin(trials, p), by direct
/// summation of the pmf.
pub fn binom_cdf(limit: u64, trials: u64, p: f64) -> f64 {
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return if limit >= trials { 1.0 } else { 0.0 };
    }
    let mut total = 0.0;
    for k in 0..=limit.min(trials) {
        let ln_pmf = ln_choose(trials, k)
            + k as f64 * p.ln()
            + (trials - k) as f64 * (1.0 - p).ln();
        total += ln_pmf.exp();
    }
    total.min(1.0)
}

/// Density of Beta(a, b) at v for integer shape parameters, built from
/// factorials only.
pub fn beta_pdf_int(v: f64, a: u64, b: u64) -> f64 {
    assert!(a >= 1 && b >= 1);
    if !(0.0..=1.0).contains(&v) {
        return 0.0;
    }
    let ln_norm = ln_factorial(a + b - 1) - ln_factorial(a - 1) - ln_factorial(b - 1);
    let ln_core = if a > 1 { (a - 1) as f64 * v.ln() } else { 0.0 }
        + if b > 1 { (b - 1) as f64 * (1.0 - v).ln() } else { 0.0 };
    (ln_norm + ln_core).exp()
}

/// Solve a dense square system by Gaussian elimination with partial
/// pivoting. None when the matrix is singular to working precision.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[piv][k].abs() < 1e-11 {
            return None;
        }
        a.swap(k, piv);
        rhs.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
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
    }
    Some(rhs)
}

/// Pearson statistic over bins with expected counts; bins below `min_mass`
/// expected observations are pooled into the final bin.
pub fn chi_square_statistic(observed: &[f64], expected: &[f64], min_mass: f64) -> (f64, usize) {
    assert_eq!(observed.len(), expected.len());
    let mut pooled_obs = Vec::new();
    let mut pooled_exp = Vec::new();
    let mut acc_obs = 0.0;
    let mut acc_exp = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        acc_obs += o;
        acc_exp += e;
        if acc_exp >= min_mass {
            pooled_obs.push(acc_obs);
            pooled_exp.push(acc_exp);
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    if acc_exp > 0.0 {
        match pooled_exp.last_mut() {
            Some(last) => {
                *last += acc_exp;
                *pooled_obs.last_mut().expect("lists stay aligned") += acc_obs;
            }
            None => {
                pooled_exp.push(acc_exp);
                pooled_obs.push(acc_obs);
            }
        }
    }
    let stat = pooled_obs
        .iter()
        .zip(&pooled_exp)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    (stat, pooled_exp.len())
}

/// 0.999 quantiles of the chi-square distribution for 1..=14 degrees of
/// freedom; a statistic above the quantile rejects at significance 1e-3.
pub fn chi_square_crit_999(df: usize) -> f64 {
    const TABLE: [f64; 14] = [
        10.827566170662733,
        13.815510557964274,
        16.26623619623813,
        18.46682695290317,
        20.515005652432873,
        22.457744484825323,
        24.321886347856854,
        26.12448155837614,
        27.877164871256568,
        29.58829844507442,
        31.264133620239985,
        32.90949040736021,
        34.52817897487089,
        36.12327368039813,
    ];
    assert!((1..=TABLE.len()).contains(&df), "no tabulated quantile for df = {df}");
    TABLE[df - 1]
}

/// Three binomial standard errors around probability p over `trials` draws.
pub fn three_se(p: f64, trials: u64) -> f64 {
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}
