//! Bound states as zero crossings of the eigenvalue branches of `Gamma(i kappa)`.
//!
//! A branch is the `k`-th smallest eigenvalue as a function of `kappa`. The
//! bracket is sampled on a logarithmic grid, every sign change is refined with
//! Brent's method, and roots of different branches that coincide within
//! [`MULTIPLICITY_TOL`] are merged into one degenerate level.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{distance, ChainArray, Point};
use crate::greens::{green_raw, Kappa, KAPPA_MAX, KAPPA_MIN};
use crate::lattice::threshold_kappa;
use crate::operator::{build_gamma_with, GammaMatrix};
use crate::roots::{brent, Tolerance};
use crate::UNITS_NOTE;

/// Roots of different branches closer than this are one degenerate level.
pub const MULTIPLICITY_TOL: f64 = 1e-8;
/// Relative residual `||Gamma c|| / ||Gamma||` accepted for a null vector.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Relative size of a window increment indistinguishable from round-off.
pub const INCREMENT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub samples_per_decade: usize,
    pub kappa_tol: Tolerance,
    pub exec: Execution,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            samples_per_decade: 64,
            kappa_tol: Tolerance::new(1e-14, 1e-14),
            exec: Execution::default(),
        }
    }
}

/// Isolated eigenvalue `-kappa0^2` below the straight-chain threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub kappa0: f64,
    pub energy: f64,
    /// Index (ascending order, from 0) of the lowest branch vanishing at `kappa0`.
    pub branch_index: usize,
    pub multiplicity: usize,
    /// Unit null vector of `Gamma(i kappa0)`, first significant entry positive.
    pub coeffs: Vec<f64>,
    /// Chain index of `coeffs[0]`.
    pub j_min: i64,
    /// Half-width of the truncation window.
    pub window: usize,
    pub kappa0_convergence: Vec<(usize, f64)>,
    pub below_threshold: bool,
    /// `||Gamma(i kappa0) c|| / ||Gamma(i kappa0)||_2`.
    pub residual: f64,
}

/// Negative eigenvalue of a finite array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteLevel {
    pub kappa: f64,
    pub energy: f64,
    pub multiplicity: usize,
    /// Individual branch roots merged into this level, descending.
    pub branch_kappas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct BranchRoot {
    kappa: f64,
    branch: usize,
}

fn gamma_at(chain: &ChainArray, alpha: f64, kappa: f64, exec: Execution) -> Result<GammaMatrix> {
    build_gamma_with(chain, alpha, Kappa::new(kappa)?, exec)
}

fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let count = ((per_decade as f64 * decades).ceil() as usize + 1).max(2);
    let step = decades / (count - 1) as f64;
    let mut grid: Vec<f64> = (0..count).map(|i| lo * 10f64.powf(step * i as f64)).collect();
    grid[0] = lo;
    grid[count - 1] = hi;
    grid
}

/// Zero crossings of the lowest branches of `Gamma(i kappa)` on `[lo, hi]`.
/// Only branches negative at `lo` are tracked; each must be nonnegative at `hi`.
fn branch_roots(chain: &ChainArray, alpha: f64, lo: f64, hi: f64, opts: &SolveOptions) -> Result<Vec<BranchRoot>> {
    let grid = log_grid(lo, hi, opts.samples_per_decade.max(1));
    let eval = |k: f64| -> Result<Vec<f64>> { gamma_at(chain, alpha, k, Execution::Sequential)?.matrix.eigenvalues() };

    let first = eval(grid[0])?;
    let tracked = first.iter().take_while(|v| **v < 0.0).count();
    if tracked == 0 {
        return Ok(Vec::new());
    }
    let rest = opts
        .exec
        .try_map(grid.len() - 1, |i| eval(grid[i + 1]).map(|mut v| {
            v.truncate(tracked);
            v
        }))?;
    let mut samples = Vec::with_capacity(grid.len());
    samples.push(first[..tracked].to_vec());
    samples.extend(rest);

    let last = samples.last().expect("grid has two points");
    if let Some(b) = (0..tracked).find(|&b| last[b] < 0.0) {
        return Err(Error::Bracket(format!(
            "branch {b} is still negative at kappa_max = {hi}; increase kappa_max"
        )));
    }

    let mut tasks = Vec::new();
    for (i, pair) in samples.windows(2).enumerate() {
        for (b, (fa, fb)) in pair[0].iter().zip(&pair[1]).enumerate() {
            if (*fa < 0.0) != (*fb < 0.0) {
                tasks.push((b, grid[i], grid[i + 1]));
            }
        }
    }
    let tol = opts.kappa_tol;
    let roots = opts.exec.try_map(tasks.len(), |t| {
        let (b, a, c) = tasks[t];
        let f = |k: f64| eval(k).map(|v| v[b]).unwrap_or(f64::NAN);
        brent(f, a, c, tol).map(|kappa| BranchRoot { kappa, branch: b })
    })?;
    Ok(roots)
}

/// Groups roots by `kappa` (descending, i.e. energy ascending). Each group
/// carries its head root and the member roots.
fn cluster(mut roots: Vec<BranchRoot>) -> Vec<(BranchRoot, Vec<f64>)> {
    roots.sort_by(|a, b| b.kappa.total_cmp(&a.kappa).then(a.branch.cmp(&b.branch)));
    let mut out: Vec<(BranchRoot, Vec<f64>)> = Vec::new();
    for r in roots {
        match out.last_mut() {
            Some((head, members)) if (head.kappa - r.kappa).abs() < MULTIPLICITY_TOL => {
                members.push(r.kappa);
                if r.branch < head.branch {
                    head.branch = r.branch;
                }
            }
            _ => out.push((r, vec![r.kappa])),
        }
    }
    out
}

fn normalise(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * scale) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    v
}

fn null_vector(chain: &ChainArray, alpha: f64, kappa: f64, branch: usize) -> Result<(Vec<f64>, f64)> {
    let gamma = gamma_at(chain, alpha, kappa, Execution::Sequential)?;
    let eig = gamma.matrix.eigen()?;
    let coeffs = normalise(eig.vectors[branch].clone());
    let scale = eig.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let res = gamma.matrix.mul_vec(&coeffs).iter().map(|x| x * x).sum::<f64>().sqrt();
    let residual = if scale > 0.0 { res / scale } else { res };
    if residual > RESIDUAL_TOL {
        return Err(Error::Convergence(format!(
            "null vector at kappa = {kappa} has relative residual {residual:e}"
        )));
    }
    Ok((coeffs, residual))
}

/// Bound states of the chain truncated to the window `[-window, window]`.
pub fn find_bound_states(chain: &ChainArray, alpha: f64, window: usize, kappa_max: f64) -> Result<Vec<BoundState>> {
    find_bound_states_with(chain, alpha, window, kappa_max, &SolveOptions::default())
}

pub fn find_bound_states_with(
    chain: &ChainArray,
    alpha: f64,
    window: usize,
    kappa_max: f64,
    opts: &SolveOptions,
) -> Result<Vec<BoundState>> {
    let sub = chain.window(window)?;
    let kappa_thr = threshold_kappa(sub.dim(), alpha, sub.ell())?;
    let lo = kappa_thr * (1.0 + 1e-6);
    Kappa::new(lo)?;
    if !(kappa_max > lo) {
        return Err(Error::Parameter(format!(
            "kappa_max = {kappa_max} must exceed the threshold kappa = {kappa_thr}"
        )));
    }
    Kappa::new(kappa_max)?;

    let roots = branch_roots(&sub, alpha, lo, kappa_max, opts)?;
    cluster(roots)
        .into_iter()
        .map(|(root, members)| {
            let multiplicity = members.len();
            let (coeffs, residual) = null_vector(&sub, alpha, root.kappa, root.branch)?;
            Ok(BoundState {
                kappa0: root.kappa,
                energy: -root.kappa * root.kappa,
                branch_index: root.branch,
                multiplicity,
                coeffs,
                j_min: sub.j_min(),
                window,
                kappa0_convergence: vec![(window, root.kappa)],
                below_threshold: root.kappa > kappa_thr,
                residual,
            })
        })
        .collect()
}

/// Negative spectrum of the finite array formed by all points of `chain`.
///
/// Branches are tracked from `kappa = KAPPA_MIN`; the upper end starts at 1
/// and doubles until `Gamma` is positive definite.
pub fn finite_array_spectrum(chain: &ChainArray, alpha: f64) -> Result<Vec<FiniteLevel>> {
    finite_array_spectrum_with(chain, alpha, &SolveOptions::default())
}

pub fn finite_array_spectrum_with(chain: &ChainArray, alpha: f64, opts: &SolveOptions) -> Result<Vec<FiniteLevel>> {
    let mut hi = 1.0;
    loop {
        let lmin = gamma_at(chain, alpha, hi, opts.exec)?.matrix.eigenvalues()?[0];
        if lmin >= 0.0 {
            break;
        }
        if hi >= KAPPA_MAX {
            return Err(Error::Bracket(format!(
                "Gamma is not positive at kappa = {KAPPA_MAX}; spectrum extends beyond the admitted range"
            )));
        }
        hi = (2.0 * hi).min(KAPPA_MAX);
    }
    let roots = branch_roots(chain, alpha, KAPPA_MIN, hi, opts)?;
    Ok(cluster(roots)
        .into_iter()
        .map(|(r, branch_kappas)| FiniteLevel {
            kappa: r.kappa,
            energy: -r.kappa * r.kappa,
            multiplicity: branch_kappas.len(),
            branch_kappas,
        })
        .collect())
}

/// Eigenvalues counted with multiplicity, ascending. Members of a merged
/// level keep their own branch roots.
pub fn expand_levels(levels: &[FiniteLevel]) -> Vec<f64> {
    let mut out: Vec<f64> = levels
        .iter()
        .flat_map(|l| l.branch_kappas.iter().map(|k| -k * k))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Bound-state function `psi(x) = sum_j c_j G(|x - y_j|)`, unnormalised.
pub fn eigenfunction_eval(state: &BoundState, chain: &ChainArray, points: &[Point]) -> Result<Vec<f64>> {
    let sites: Vec<&Point> = (0..state.coeffs.len())
        .map(|i| {
            let j = state.j_min + i as i64;
            chain
                .point(j)
                .ok_or_else(|| Error::Parameter(format!("chain has no point with index {j}")))
        })
        .collect::<Result<_>>()?;
    let dim = chain.dim();
    let min_sep = 1e-6 * chain.ell();
    points
        .iter()
        .map(|x| {
            let mut acc = 0.0;
            for (c, y) in state.coeffs.iter().zip(&sites) {
                let r = distance(x, y);
                if r < min_sep {
                    return Err(Error::Domain(format!(
                        "evaluation point {x:?} lies on the chain (distance {r})"
                    )));
                }
                acc += c * green_raw(dim, state.kappa0, r);
            }
            Ok(acc)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub window: usize,
    pub kappa0: Option<f64>,
    pub increment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Consecutive increments decrease (only rows with roots count); an
    /// increment below the round-off floor counts as converged.
    pub increments_decreasing: bool,
}

/// Lowest-branch root per window, with Cauchy increments between windows.
pub fn convergence_study(chain: &ChainArray, alpha: f64, windows: &[usize], kappa_max: f64) -> Result<ConvergenceStudy> {
    if windows.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("windows must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(windows.len());
    let mut prev: Option<f64> = None;
    for &n in windows {
        let states = find_bound_states(chain, alpha, n, kappa_max)?;
        let kappa0 = states.first().map(|s| s.kappa0);
        let increment = match (prev, kappa0) {
            (Some(a), Some(b)) => Some((b - a).abs()),
            _ => None,
        };
        rows.push(ConvergenceRow { window: n, kappa0, increment });
        prev = kappa0;
    }
    let floor = rows.iter().filter_map(|r| r.kappa0).fold(0.0f64, f64::max) * INCREMENT_FLOOR;
    let incs: Vec<f64> = rows.iter().filter_map(|r| r.increment).collect();
    let increments_decreasing = incs.windows(2).all(|w| w[1] < w[0] || w[1] <= floor);
    Ok(ConvergenceStudy { rows, increments_decreasing })
}

/// Lowest `branches` eigenvalues of `Gamma(i kappa)` on an evenly spaced
/// grid `kappa_min ..= kappa_max` (a single row at `kappa_min` when `samples = 1`).
pub fn branch_sweep(
    chain: &ChainArray,
    alpha: f64,
    kappa_min: f64,
    kappa_max: f64,
    samples: usize,
    branches: usize,
    exec: Execution,
) -> Result<Vec<(f64, Vec<f64>)>> {
    Kappa::new(kappa_min)?;
    Kappa::new(kappa_max)?;
    if samples == 0 || branches == 0 {
        return Err(Error::Parameter("samples and branches must be positive".into()));
    }
    if samples > 1 && !(kappa_max > kappa_min) {
        return Err(Error::Parameter("kappa_max must exceed kappa_min".into()));
    }
    let step = if samples > 1 { (kappa_max - kappa_min) / (samples - 1) as f64 } else { 0.0 };
    exec.try_map(samples, |i| {
        let k = if i + 1 == samples && samples > 1 { kappa_max } else { kappa_min + step * i as f64 };
        let mut v = gamma_at(chain, alpha, k, Execution::Sequential)?.matrix.eigenvalues()?;
        v.truncate(branches);
        Ok((k, v))
    })
}

// ---------------------------------------------------------------------------
// Output formats
// ---------------------------------------------------------------------------

/// CSV `branch_index,kappa0,energy,window,below_threshold`, one row per state,
/// 17 significant digits.
pub fn bound_states_csv(states: &[BoundState]) -> String {
    let mut out = format!("# {UNITS_NOTE}\nbranch_index,kappa0,energy,window,below_threshold\n");
    for s in states {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{},{}",
            s.branch_index, s.kappa0, s.energy, s.window, s.below_threshold
        );
    }
    out
}

#[derive(Serialize)]
struct StatesReport<'a> {
    units: &'a str,
    states: &'a [BoundState],
}

/// JSON report embedding the coefficient vectors.
pub fn bound_states_json(states: &[BoundState]) -> Result<String> {
    Ok(serde_json::to_string_pretty(&StatesReport { units: UNITS_NOTE, states })?)
}

/// CSV `kappa,lambda_1,...,lambda_k` for plotting branch curves.
pub fn sweep_csv(rows: &[(f64, Vec<f64>)]) -> String {
    let k = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
    let mut out = format!("# {UNITS_NOTE}\nkappa");
    for b in 1..=k {
        let _ = write!(out, ",lambda_{b}");
    }
    out.push('\n');
    for (kappa, vals) in rows {
        let _ = write!(out, "{kappa:.16e}");
        for v in vals {
            let _ = write!(out, ",{v:.16e}");
        }
        out.push('\n');
    }
    out
}
