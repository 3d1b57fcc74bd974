//! Numerical checks of the structural estimates behind the existence result.
//!
//! Every check is pure and returns a [`CheckResult`] whose `passed` flag is
//! `worst_violation <= tolerance`. Asymptotic statements are tested as trends
//! on finite grids, which are recorded in `context`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{gen_bent, gen_packed_block, gen_straight, ChainArray, Dim};
use crate::greens::Kappa;
use crate::lattice::{coupling_shift, g_theta, threshold_kappa};
use crate::operator::{build_dmatrix_with, build_gamma_with, hs_norm};
use crate::solver::{expand_levels, finite_array_spectrum};

pub const DKERN_TOL: f64 = 1e-14;
pub const GBOUND_TOL: f64 = 1e-14;
pub const EXAMPLE_TOL: f64 = 1e-10;
/// Required smallness of the trial-vector tail `exp(-2 lambda N)`.
pub const TRIAL_TAIL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub worst_violation: f64,
    pub tolerance: f64,
    /// Parameters of the worst case plus the grids used.
    pub context: Value,
}

impl CheckResult {
    fn new(name: &str, worst_violation: f64, tolerance: f64, context: Value) -> Self {
        // an empty grid has nothing to violate
        let worst_violation = if worst_violation == f64::NEG_INFINITY { 0.0 } else { worst_violation };
        CheckResult {
            name: name.to_string(),
            passed: worst_violation <= tolerance,
            worst_violation,
            tolerance,
            context,
        }
    }
}

/// Violation of strict decrease from `prev` to `next`: positive unless `next < prev`.
fn strict_decrease_violation(prev: f64, next: f64) -> f64 {
    let d = next - prev;
    if d >= 0.0 {
        d.max(f64::MIN_POSITIVE)
    } else {
        d
    }
}

/// Largest off-diagonal entry of `D` over the grid; must not be positive.
pub fn check_dkern_negativity(chain: &ChainArray, kappa_grid: &[f64]) -> Result<CheckResult> {
    let n = chain.len();
    let mut worst = f64::NEG_INFINITY;
    let mut at = json!(null);
    for &k in kappa_grid {
        let d = build_dmatrix_with(chain, Kappa::new(k)?, Execution::Sequential)?;
        let m = d.matrix.as_slice();
        for i in 0..n {
            for j in 0..n {
                if i != j && m[i * n + j] > worst {
                    worst = m[i * n + j];
                    at = json!({"kappa": k, "j": chain.index_of(i), "k": chain.index_of(j)});
                }
            }
        }
    }
    let worst = worst.max(0.0);
    Ok(CheckResult::new(
        "dkern_negativity",
        worst,
        DKERN_TOL,
        json!({"worst_at": at, "kappa_grid": kappa_grid, "points": n}),
    ))
}

/// Decay rate and half-width of the trial vector `psi_j = sqrt(tanh lambda) exp(-lambda |j|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialVectorParams {
    pub lambda: f64,
    pub window: usize,
}

impl TrialVectorParams {
    pub fn new(lambda: f64, window: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Parameter(format!("lambda must lie in (0, 1], got {lambda}")));
        }
        let need = Self::required_window(lambda);
        if window < need {
            return Err(Error::Parameter(format!(
                "window {window} too small for lambda = {lambda}; need at least {need}"
            )));
        }
        Ok(TrialVectorParams { lambda, window })
    }

    /// Smallest `N` with `exp(-2 lambda N) < TRIAL_TAIL`.
    pub fn required_window(lambda: f64) -> usize {
        (-TRIAL_TAIL.ln() / (2.0 * lambda)).floor() as usize + 1
    }

    /// Smallest admissible window.
    pub fn for_lambda(lambda: f64) -> Result<Self> {
        Self::new(lambda, Self::required_window(lambda))
    }

    pub fn vector(&self) -> Vec<f64> {
        let amp = self.lambda.tanh().sqrt();
        let n = self.window as i64;
        (-n..=n).map(|j| amp * (-self.lambda * j.abs() as f64).exp()).collect()
    }
}

/// Split of the trial-vector gap into the full value and its `D` contribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialVectorGap {
    pub value: f64,
    pub d_term: f64,
}

/// `<psi, Gamma(i kappa) psi> - (alpha + shift - g(kappa, 0)) |psi|^2` on the window.
pub fn trial_vector_value(chain: &ChainArray, alpha: f64, kappa: Kappa, params: TrialVectorParams) -> Result<f64> {
    trial_vector_gap(chain, alpha, kappa, params).map(|g| g.value)
}

pub fn trial_vector_gap(chain: &ChainArray, alpha: f64, kappa: Kappa, params: TrialVectorParams) -> Result<TrialVectorGap> {
    let params = TrialVectorParams::new(params.lambda, params.window)?;
    let sub = chain.window(params.window)?;
    if sub.j_min() != -(params.window as i64) || sub.j_max() != params.window as i64 {
        return Err(Error::Parameter(format!(
            "chain does not cover the window [-{0}, {0}]",
            params.window
        )));
    }
    let psi = params.vector();
    let norm2: f64 = psi.iter().map(|x| x * x).sum();
    let gamma = build_gamma_with(&sub, alpha, kappa, Execution::Sequential)?;
    let d = build_dmatrix_with(&sub, kappa, Execution::Sequential)?;
    let symbol0 = alpha + coupling_shift(sub.dim()) - g_theta(sub.dim(), kappa, 0.0, sub.ell())?;
    Ok(TrialVectorGap {
        value: gamma.matrix.quadratic_form(&psi) - symbol0 * norm2,
        d_term: d.matrix.quadratic_form(&psi),
    })
}

/// Strict decrease of `f` in `|x|` along the grid (absolute values sorted, duplicates dropped).
pub fn check_decreasing(name: &str, f: impl Fn(f64) -> Result<f64>, grid: &[f64]) -> Result<CheckResult> {
    let mut xs: Vec<f64> = grid.iter().map(|x| x.abs()).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let vals = xs.iter().map(|&x| f(x)).collect::<Result<Vec<f64>>>()?;
    let mut worst = f64::NEG_INFINITY;
    let mut at = json!(null);
    for i in 1..xs.len() {
        let v = strict_decrease_violation(vals[i - 1], vals[i]);
        if v > worst {
            worst = v;
            at = json!({"from": xs[i - 1], "to": xs[i]});
        }
    }
    Ok(CheckResult::new(name, worst, 0.0, json!({"worst_at": at, "grid_points": xs.len()})))
}

/// `g(kappa, theta)` strictly decreasing in `|theta|` on `[0, pi/ell]`.
pub fn check_g_monotone(dim: Dim, kappa: Kappa, ell: f64, theta_grid: &[f64]) -> Result<CheckResult> {
    let mut r = check_decreasing("g_monotone", |t| g_theta(dim, kappa, t, ell), theta_grid)?;
    r.context["dim"] = json!(dim.as_usize());
    r.context["kappa"] = json!(kappa.value());
    r.context["ell"] = json!(ell);
    Ok(r)
}

/// `0 <= g(kappa, 0) - g(kappa, theta) <= c theta^2` with
/// `c = (ell / 16 pi) sinh(kappa ell / 2)^-2`, for `d = 3`, `ell = 1`.
pub fn check_gbound(kappa_list: &[f64]) -> Result<CheckResult> {
    let ell = 1.0;
    let thetas: Vec<f64> = (0..=200).map(|i| -PI + 2.0 * PI * i as f64 / 200.0).collect();
    let mut worst = f64::NEG_INFINITY;
    let mut at = json!(null);
    for &k in kappa_list {
        let kappa = Kappa::new(k)?;
        let c = ell / (16.0 * PI) / (k * ell / 2.0).sinh().powi(2);
        let g0 = g_theta(Dim::Three, kappa, 0.0, ell)?;
        for &t in &thetas {
            let gap = g0 - g_theta(Dim::Three, kappa, t, ell)?;
            let v = (gap - c * t * t).max(-gap);
            if v > worst {
                worst = v;
                at = json!({"kappa": k, "theta": t});
            }
        }
    }
    Ok(CheckResult::new(
        "gbound",
        worst,
        GBOUND_TOL,
        json!({"worst_at": at, "theta_points": thetas.len(), "ell": ell}),
    ))
}

/// Finiteness and evenness of `g(kappa, .)`, the only properties asserted for `d = 2`.
pub fn check_g_even(dim: Dim, kappa_list: &[f64], ell: f64) -> Result<CheckResult> {
    let mut worst = f64::NEG_INFINITY;
    let mut at = json!(null);
    for &k in kappa_list {
        let kappa = Kappa::new(k)?;
        for i in 0..=50 {
            let t = PI / ell * i as f64 / 50.0;
            let (a, b) = (g_theta(dim, kappa, t, ell)?, g_theta(dim, kappa, -t, ell)?);
            let v = if a.is_finite() && b.is_finite() { (a - b).abs() } else { f64::INFINITY };
            if v > worst {
                worst = v;
                at = json!({"kappa": k, "theta": t});
            }
        }
    }
    Ok(CheckResult::new(
        "g_even",
        worst,
        0.0,
        json!({"worst_at": at, "dim": dim.as_usize(), "ell": ell}),
    ))
}

/// Hilbert-Schmidt norm of `D` strictly decreasing along ascending `kappa_list`;
/// a chain with `D = 0` passes when the norm vanishes identically.
pub fn check_hs_decay(chain: &ChainArray, kappa_list: &[f64]) -> Result<CheckResult> {
    if kappa_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("kappa list must be strictly ascending".into()));
    }
    let norms = kappa_list
        .iter()
        .map(|&k| Ok(hs_norm(&build_dmatrix_with(chain, Kappa::new(k)?, Execution::Sequential)?)))
        .collect::<Result<Vec<f64>>>()?;
    let (worst, at) = if norms.iter().all(|&x| x == 0.0) {
        (0.0, json!(null))
    } else {
        let mut worst = f64::NEG_INFINITY;
        let mut at = json!(null);
        for i in 1..norms.len() {
            let v = strict_decrease_violation(norms[i - 1], norms[i]);
            if v > worst {
                worst = v;
                at = json!({"from": kappa_list[i - 1], "to": kappa_list[i]});
            }
        }
        (worst, at)
    };
    Ok(CheckResult::new(
        "hs_decay",
        worst,
        0.0,
        json!({"worst_at": at, "kappa_list": kappa_list, "norms": norms}),
    ))
}

/// `|(||D_kappa|| - ||D_{kappa+1e-4}||)| / ||D_kappa||`, required below 1e-2.
pub fn check_hs_continuity(chain: &ChainArray, kappa_list: &[f64]) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let mut at = json!(null);
    for &k in kappa_list {
        let a = hs_norm(&build_dmatrix_with(chain, Kappa::new(k)?, Execution::Sequential)?);
        let b = hs_norm(&build_dmatrix_with(chain, Kappa::new(k + 1e-4)?, Execution::Sequential)?);
        let v = if a > 0.0 { (a - b).abs() / a } else { (a - b).abs() };
        if v > worst {
            worst = v;
            at = json!({"kappa": k});
        }
    }
    Ok(CheckResult::new("hs_continuity", worst, 1e-2, json!({"worst_at": at, "step": 1e-4})))
}

/// Negative spectrum of the packed-block array `Y(M, N)` with `ell = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleSpectrum {
    pub m: usize,
    pub n: usize,
    /// Eigenvalues with multiplicity, ascending.
    pub energies: Vec<f64>,
    /// Number of eigenvalues below the straight-chain threshold energy.
    pub below_threshold: usize,
}

/// Spectra of `Y(M, N)` for `M <= m_max`, `N <= n_max` (row-major in `M`).
pub fn example_spectra(m_max: usize, n_max: usize, alpha: f64, dim: Dim) -> Result<Vec<ExampleSpectrum>> {
    if m_max > 3 || n_max > 3 {
        return Err(Error::Parameter("M and N are limited to 3".into()));
    }
    let e_thr = -threshold_kappa(dim, alpha, 1.0)?.powi(2);
    let pairs: Vec<(usize, usize)> = (0..=m_max).flat_map(|m| (0..=n_max).map(move |n| (m, n))).collect();
    Execution::default().try_map(pairs.len(), |i| {
        let (m, n) = pairs[i];
        let chain = gen_packed_block(m, n, 1.0, dim)?;
        let energies = expand_levels(&finite_array_spectrum(&chain, alpha)?);
        let below_threshold = energies.iter().filter(|&&e| e < e_thr).count();
        Ok(ExampleSpectrum { m, n, energies, below_threshold })
    })
}

/// `mu_j(M, N) >= max(mu_j(M+1, N), mu_j(M, N+1)) - EXAMPLE_TOL`, with the
/// `j`-th eigenvalue taken as 0 (the essential spectrum bottom) when absent.
pub fn check_example_monotonicity(m_max: usize, n_max: usize, alpha: f64, dim: Dim) -> Result<CheckResult> {
    let spectra = example_spectra(m_max, n_max, alpha, dim)?;
    Ok(example_monotonicity_of(&spectra, m_max, n_max, alpha, dim))
}

pub fn example_monotonicity_of(
    spectra: &[ExampleSpectrum],
    m_max: usize,
    n_max: usize,
    alpha: f64,
    dim: Dim,
) -> CheckResult {
    let get = |m: usize, n: usize| spectra.iter().find(|s| s.m == m && s.n == n);
    let mu = |s: &ExampleSpectrum, j: usize| s.energies.get(j).copied().unwrap_or(0.0);
    let mut worst = f64::NEG_INFINITY;
    let mut at = json!(null);
    for a in spectra {
        for b in [get(a.m + 1, a.n), get(a.m, a.n + 1)].into_iter().flatten() {
            for j in 0..a.energies.len().max(b.energies.len()) {
                let v = mu(b, j) - mu(a, j);
                if v > worst {
                    worst = v;
                    at = json!({"from": [a.m, a.n], "to": [b.m, b.n], "j": j});
                }
            }
        }
    }
    let counts: Vec<Value> = spectra.iter().map(|s| json!([s.m, s.n, s.below_threshold])).collect();
    CheckResult::new(
        "example_monotonicity",
        worst,
        EXAMPLE_TOL,
        json!({"worst_at": at, "m_max": m_max, "n_max": n_max, "alpha": alpha, "dim": dim.as_usize(), "counts_below_threshold": counts}),
    )
}

/// Checks run by the default verification suite.
pub fn run_suite() -> Result<Vec<CheckResult>> {
    let kappas = [0.5, 1.0, 2.0, 4.0, 8.0];
    let bent = gen_bent(40, 1.0, Dim::Three, PI / 2.0)?;
    let packed = gen_packed_block(1, 3, 1.0, Dim::Three)?;
    let straight = gen_straight(40, 1.0, Dim::Three)?;
    let thetas: Vec<f64> = (0..=40).map(|i| PI * i as f64 / 40.0).collect();
    let mut out = Vec::new();

    for (label, chain) in [("bent", &bent), ("packed", &packed), ("straight", &straight)] {
        let mut r = check_dkern_negativity(chain, &kappas)?;
        r.name = format!("dkern_negativity_{label}");
        out.push(r);
        let mut r = check_hs_decay(chain, &kappas)?;
        r.name = format!("hs_decay_{label}");
        out.push(r);
    }
    out.push(check_hs_continuity(&bent, &kappas)?);

    let lambdas = [0.2, 0.1, 0.05, 0.025];
    for (label, angle, sign) in [("bent", PI / 2.0, 1.0), ("straight", PI, -1.0)] {
        let n = TrialVectorParams::required_window(0.025);
        let chain = gen_bent(n, 1.0, Dim::Three, angle)?;
        let mut worst = f64::NEG_INFINITY;
        let mut values = Vec::new();
        for &l in &lambdas {
            let v = trial_vector_value(&chain, 0.0, Kappa::new(1.0)?, TrialVectorParams::for_lambda(l)?)?;
            values.push(v);
            worst = worst.max(sign * v);
        }
        // bent: the gap must be negative; straight: nonnegative
        let tol = if sign > 0.0 { -f64::MIN_POSITIVE } else { 0.0 };
        out.push(CheckResult::new(
            &format!("trial_vector_{label}"),
            worst,
            tol,
            json!({"alpha": 0.0, "kappa": 1.0, "lambdas": lambdas, "values": values}),
        ));
    }

    for dim in [Dim::Two, Dim::Three] {
        for k in [0.5, 1.0, 2.0] {
            let mut r = check_g_monotone(dim, Kappa::new(k)?, 1.0, &thetas)?;
            r.name = format!("g_monotone_d{}_k{k}", dim.as_usize());
            out.push(r);
        }
    }
    out.push(check_gbound(&[0.5, 1.0, 2.0])?);
    let mut r = check_g_even(Dim::Two, &[0.5, 1.0, 2.0], 1.0)?;
    r.name = "g_even_d2".into();
    out.push(r);

    out.push(check_example_monotonicity(2, 2, -0.5, Dim::Three)?);
    Ok(out)
}

#[derive(Serialize)]
struct SuiteReport<'a> {
    passed: bool,
    checks: &'a [CheckResult],
}

/// JSON report of a suite run; `passed` is the conjunction of all checks.
pub fn suite_json(results: &[CheckResult]) -> Result<String> {
    let passed = results.iter().all(|r| r.passed);
    Ok(serde_json::to_string_pretty(&SuiteReport { passed, checks: results })?)
}
