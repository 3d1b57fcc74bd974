//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::{LN_2, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use polychain::geometry::{gen_bent, gen_packed_block, gen_straight, ChainArray, Dim};
use polychain::greens::{bessel_k0, bessel_k1, Kappa};
use polychain::lattice::{band_edges, g_theta, g_theta_poisson, threshold_kappa, threshold_kappa_closed_form_3d};
use polychain::roots::{bisect, Tolerance};
use polychain::solver::{finite_array_spectrum, find_bound_states};
use polychain::verify::{
    check_dkern_negativity, check_hs_decay, example_monotonicity_of, example_spectra, trial_vector_value,
    TrialVectorParams, EXAMPLE_TOL,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_s {
        Ok(())
    } else {
        Err(format!("runtime {:.2} s exceeds {limit_s} s", elapsed.as_secs_f64()))
    }
}

fn err(e: polychain::Error) -> String {
    e.to_string()
}

fn threshold_3d() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for alpha in [-0.3, -0.1, 0.0, 0.1, 0.3] {
        for ell in [0.5, 1.0, 2.0] {
            let num = threshold_kappa(Dim::Three, alpha, ell).map_err(err)?;
            let exact = threshold_kappa_closed_form_3d(alpha, ell);
            worst = worst.max((num - exact).abs() / exact);
        }
    }
    within(t.elapsed(), 1.0)?;
    if worst <= 1e-10 {
        Ok(format!("max rel. error {worst:.2e} (tol 1e-10)"))
    } else {
        Err(format!("max rel. error {worst:.2e} > 1e-10"))
    }
}

fn lattice_dual_oracle_2d() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for k in [0.5, 1.0, 2.0] {
        let kappa = Kappa::new(k).map_err(err)?;
        for i in 0..21 {
            let theta = -PI + 2.0 * PI * i as f64 / 20.0;
            let a = g_theta(Dim::Two, kappa, theta, 1.0).map_err(err)?;
            let b = g_theta_poisson(Dim::Two, kappa, theta, 1.0).map_err(err)?;
            worst = worst.max((a - b).abs());
        }
    }
    within(t.elapsed(), 5.0)?;
    if worst <= 1e-8 {
        Ok(format!("max abs. difference {worst:.2e} (tol 1e-8)"))
    } else {
        Err(format!("max abs. difference {worst:.2e} > 1e-8"))
    }
}

fn overlap_boundary_3d() -> Outcome {
    let boundary = -LN_2 / (2.0 * PI);
    for ell in [0.5, 1.0, 2.0] {
        let above = band_edges(Dim::Three, (boundary + 1e-9) / ell, ell).map_err(err)?;
        let below = band_edges(Dim::Three, (boundary - 1e-9) / ell, ell).map_err(err)?;
        if !above.overlapping || below.overlapping {
            return Err(format!(
                "ell = {ell}: overlapping {} above, {} below the boundary",
                above.overlapping, below.overlapping
            ));
        }
    }
    Ok("flag flips at alpha*ell = -ln2/(2 pi) +- 1e-9 for ell in {0.5, 1, 2}".into())
}

fn two_point_array() -> Outcome {
    let t = Instant::now();
    let chain = ChainArray::new(Dim::Three, 1.0, 0, vec![[0.0; 3], [1.0, 0.0, 0.0]]).map_err(err)?;
    let levels = finite_array_spectrum(&chain, 0.0).map_err(err)?;
    let elapsed = t.elapsed();
    let w = bisect(|k| k - (-k).exp(), 0.0, 1.0, Tolerance::new(1e-16, 0.0)).map_err(err)?;
    within(elapsed, 0.1)?;
    if levels.len() != 1 {
        return Err(format!("expected one level, found {}", levels.len()));
    }
    let e = levels[0].energy;
    let diff = (e + w * w).abs();
    if diff <= 1e-8 {
        Ok(format!("E = {e:.10} vs -W(1)^2 = {:.10}", -w * w))
    } else {
        Err(format!("E = {e} differs from -W(1)^2 = {} by {diff:.2e}", -w * w))
    }
}

fn bent_bound_state() -> Outcome {
    let t = Instant::now();
    let bands = band_edges(Dim::Three, 0.0, 1.0).map_err(err)?;
    let chain = gen_bent(400, 1.0, Dim::Three, PI / 2.0).map_err(err)?;
    let s200 = find_bound_states(&chain, 0.0, 200, 4.0).map_err(err)?;
    let s400 = find_bound_states(&chain, 0.0, 400, 4.0).map_err(err)?;
    within(t.elapsed(), 60.0)?;
    let (Some(a), Some(b)) = (s200.first(), s400.first()) else {
        return Err("no bound state found".into());
    };
    if !(a.energy < bands.e_lower && a.energy < -0.926_259_3) {
        return Err(format!("E = {} not below E_lower = {}", a.energy, bands.e_lower));
    }
    let drift = (a.kappa0 - b.kappa0).abs();
    if drift >= 1e-4 {
        return Err(format!("kappa0 moved by {drift:.2e} between N=200 and N=400"));
    }
    Ok(format!(
        "{} state(s), E = {:.10} < E_lower = {:.10}, |dkappa0| = {drift:.1e}",
        s200.len(),
        a.energy,
        bands.e_lower
    ))
}

fn trial_vector_signs() -> Outcome {
    let t = Instant::now();
    let kappa = Kappa::new(1.0).map_err(err)?;
    let lambdas = [0.1, 0.05, 0.025];
    let n = TrialVectorParams::required_window(0.025);
    let bent = gen_bent(n, 1.0, Dim::Three, PI / 2.0).map_err(err)?;
    let straight = gen_straight(n, 1.0, Dim::Three).map_err(err)?;
    let mut bent_max = f64::NEG_INFINITY;
    let mut straight_min = f64::INFINITY;
    for l in lambdas {
        let p = TrialVectorParams::for_lambda(l).map_err(err)?;
        bent_max = bent_max.max(trial_vector_value(&bent, 0.0, kappa, p).map_err(err)?);
        straight_min = straight_min.min(trial_vector_value(&straight, 0.0, kappa, p).map_err(err)?);
    }
    within(t.elapsed(), 5.0)?;
    if bent_max < 0.0 && straight_min >= 0.0 {
        Ok(format!("bent max {bent_max:.3e} < 0, straight min {straight_min:.3e} >= 0"))
    } else {
        Err(format!("bent max {bent_max:.3e}, straight min {straight_min:.3e}"))
    }
}

fn perturbation_properties() -> Outcome {
    let t = Instant::now();
    let kappas = [0.5, 1.0, 2.0, 4.0, 8.0];
    let bent = gen_bent(100, 1.0, Dim::Three, PI / 2.0).map_err(err)?;
    let packed = gen_packed_block(2, 60, 1.0, Dim::Three).map_err(err)?;
    let mut notes = Vec::new();
    for (name, chain) in [("bent", &bent), ("packed", &packed)] {
        let neg = check_dkern_negativity(chain, &kappas).map_err(err)?;
        let hs = check_hs_decay(chain, &kappas).map_err(err)?;
        if !neg.passed {
            return Err(format!("{name}: max D entry {:.2e} > 1e-14", neg.worst_violation));
        }
        if !hs.passed {
            return Err(format!("{name}: HS norm not strictly decreasing ({})", hs.context));
        }
        notes.push(format!("{name} max D {:.1e}", neg.worst_violation));
    }
    within(t.elapsed(), 10.0)?;
    Ok(format!("{}, HS norms strictly decreasing", notes.join(", ")))
}

fn packing_monotonicity() -> Outcome {
    let t = Instant::now();
    let spectra = example_spectra(2, 2, -0.5, Dim::Three).map_err(err)?;
    let check = example_monotonicity_of(&spectra, 2, 2, -0.5, Dim::Three);
    within(t.elapsed(), 300.0)?;
    if !check.passed {
        return Err(format!("violation {:.2e} > {EXAMPLE_TOL:e} at {}", check.worst_violation, check.context["worst_at"]));
    }
    for n in 0..=2 {
        let counts: Vec<usize> = (0..=2)
            .map(|m| spectra.iter().find(|s| s.m == m && s.n == n).map_or(0, |s| s.below_threshold))
            .collect();
        if counts.windows(2).any(|w| w[1] < w[0]) {
            return Err(format!("N = {n}: counts below threshold {counts:?} decrease in M"));
        }
    }
    Ok(format!("worst violation {:.1e} (tol 1e-10), counts nondecreasing in M", check.worst_violation))
}

fn straight_null() -> Outcome {
    let t = Instant::now();
    let chain = gen_straight(400, 1.0, Dim::Three).map_err(err)?;
    for alpha in [-0.5, 0.0, 0.5] {
        let kmax = 2.0 * threshold_kappa(Dim::Three, alpha, 1.0).map_err(err)? + 1.0;
        for n in [50, 100, 200, 400] {
            let states = find_bound_states(&chain, alpha, n, kmax).map_err(err)?;
            if !states.is_empty() {
                return Err(format!("alpha = {alpha}, N = {n}: {} spurious state(s)", states.len()));
            }
        }
    }
    within(t.elapsed(), 60.0)?;
    Ok("no states for alpha in {-0.5, 0, 0.5}, N in {50, 100, 200, 400}".into())
}

/// `e^x K_nu(x) = int_0^inf cosh(nu t) exp(-x (cosh t - 1)) dt` by the trapezoidal rule,
/// which converges geometrically for this analytic, rapidly decaying integrand.
fn k_scaled_quadrature(nu: f64, x: f64) -> f64 {
    let h = (4.0 / (x + 40.0)).min(0.05);
    let t_max = (1.0 + 60.0 / x).acosh();
    let steps = (t_max / h).ceil() as usize;
    let f = |t: f64| (nu * t).cosh() * (-x * (t.cosh() - 1.0)).exp();
    let mut s = 0.5 * f(0.0);
    for i in 1..=steps {
        s += f(i as f64 * h);
    }
    s * h
}

/// `e^-x I_n(x) = (1/pi) int_0^pi exp(x (cos t - 1)) cos(n t) dt`, periodic trapezoid.
fn i_scaled_quadrature(n: f64, x: f64) -> f64 {
    let m = 64 + (20.0 * x.sqrt()) as usize;
    let h = PI / m as f64;
    let f = |t: f64| (x * (t.cos() - 1.0)).exp() * (n * t).cos();
    let mut s = 0.5 * (f(0.0) + f(PI));
    for i in 1..m {
        s += f(i as f64 * h);
    }
    s * h / PI
}

fn special_functions() -> Outcome {
    let (lo, hi) = (1e-6f64.ln(), 700f64.ln());
    let mut worst_k = 0.0f64;
    let mut worst_w = 0.0f64;
    for i in 0..50 {
        let x = (lo + (hi - lo) * i as f64 / 49.0).exp();
        let k0 = bessel_k0(x).map_err(err)?;
        let k1 = bessel_k1(x).map_err(err)?;
        let scale = x.exp();
        let (q0, q1) = (k_scaled_quadrature(0.0, x), k_scaled_quadrature(1.0, x));
        worst_k = worst_k.max((k0 * scale - q0).abs() / q0).max((k1 * scale - q1).abs() / q1);
        let (i0, i1) = (i_scaled_quadrature(0.0, x), i_scaled_quadrature(1.0, x));
        let wronskian = x * scale * (i0 * k1 + i1 * k0);
        worst_w = worst_w.max((wronskian - 1.0).abs());
    }
    if worst_k <= 1e-9 && worst_w <= 1e-8 {
        Ok(format!("K0/K1 max rel. error {worst_k:.1e} (tol 1e-9), Wronskian {worst_w:.1e} (tol 1e-8)"))
    } else {
        Err(format!("K0/K1 max rel. error {worst_k:.2e}, Wronskian {worst_w:.2e}"))
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("d=3 threshold matches closed form", threshold_3d),
        ("d=2 lattice sum, series vs Poisson", lattice_dual_oracle_2d),
        ("d=3 band overlap boundary", overlap_boundary_3d),
        ("two-point array energy", two_point_array),
        ("bent chain bound state below threshold", bent_bound_state),
        ("trial vector sign, bent vs straight", trial_vector_signs),
        ("perturbation matrix negativity and HS decay", perturbation_properties),
        ("packed-block eigenvalue monotonicity", packing_monotonicity),
        ("straight chain has no bound states", straight_null),
        ("Bessel K0/K1 accuracy and Wronskian", special_functions),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
