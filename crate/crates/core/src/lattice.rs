//! Straight-chain band structure.
//!
//! For the straight chain `Gamma(i kappa)` is a Toeplitz operator whose symbol
//! on the Brillouin zone `(-pi/ell, pi/ell)` is
//! `alpha + (gamma - ln 2)/2pi [d = 2] - g(kappa, theta)`.
//! The lattice sum `g` is evaluated in closed form in 3D and by an
//! Euler-resummed series in 2D; [`g_theta_poisson`] evaluates the same
//! quantity from the real-space side as an independent check.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Dim;
use crate::greens::{green_raw, Kappa, KAPPA_MAX, KAPPA_MIN};
use crate::roots::{bisect, Tolerance};
use crate::EULER_GAMMA;

/// Straight-chain band data. `e_upper` is clipped at 0 and `overlapping`
/// is set when the upper edge of the first band has no negative energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub dim: Dim,
    pub alpha: f64,
    pub ell: f64,
    pub kappa_thr: f64,
    #[serde(rename = "E_lower")]
    pub e_lower: f64,
    #[serde(rename = "E_upper")]
    pub e_upper: f64,
    /// Root of the zone-boundary edge equation, when it exists.
    pub kappa_upper: Option<f64>,
    pub overlapping: bool,
}

/// Constant shift between the coupling and the symbol: `(gamma - ln 2)/2pi` in 2D.
pub fn coupling_shift(dim: Dim) -> f64 {
    match dim {
        Dim::Two => (EULER_GAMMA - LN_2) / (2.0 * PI),
        Dim::Three => 0.0,
    }
}

fn check_theta(theta: f64, ell: f64) -> Result<()> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::Parameter(format!("edge length must be positive, got {ell}")));
    }
    if !(theta.abs() <= PI / ell * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "quasi-momentum {theta} outside the Brillouin zone [-pi/ell, pi/ell]"
        )));
    }
    Ok(())
}

/// Lattice sum `g_{i kappa}(theta)` for `|theta| <= pi/ell`.
pub fn g_theta(dim: Dim, kappa: Kappa, theta: f64, ell: f64) -> Result<f64> {
    check_theta(theta, ell)?;
    Ok(g_raw(dim, kappa.value(), theta, ell))
}

/// Unchecked lattice sum; `kappa >= 0`, and `kappa > 0` unless `theta != 0`.
pub(crate) fn g_raw(dim: Dim, kappa: f64, theta: f64, ell: f64) -> f64 {
    match dim {
        Dim::Three => {
            // 2(cosh a - cos b) = 4(sinh^2(a/2) + sin^2(b/2)), no cancellation
            let sh = (0.5 * kappa * ell).sinh();
            let sn = (0.5 * theta * ell).sin();
            -(4.0 * (sh * sh + sn * sn)).ln() / (4.0 * PI * ell)
        }
        Dim::Two => {
            let b = theta * ell / (2.0 * PI);
            let c = kappa * ell / (2.0 * PI);
            (resummed_series(b, c) + (ell / (4.0 * PI)).ln()) / (2.0 * PI)
        }
    }
}

/// `lim_N sum_{|n| <= N} (1/2)((n+b)^2 + c^2)^{-1/2} - ln N`
/// `= (1/2)(b^2+c^2)^{-1/2} + gamma + sum_{n >= 1} t_n`
/// with `t_n = (1/2)((n+b)^2+c^2)^{-1/2} + (1/2)((n-b)^2+c^2)^{-1/2} - 1/n`.
///
/// The first `n0 - 1` terms are summed directly; the remainder is the
/// Euler–Maclaurin tail (integral, endpoint and first-derivative terms), whose
/// error is `O(c^2 / n0^6)`.
fn resummed_series(b: f64, c: f64) -> f64 {
    let b = b.abs();
    let n0 = 64 + (8.0 * (b + c)).ceil() as usize;
    let t = |x: f64| {
        let rp = ((x + b) * (x + b) + c * c).sqrt();
        let rm = ((x - b) * (x - b) + c * c).sqrt();
        (rp, rm, 0.5 / rp + 0.5 / rm - 1.0 / x)
    };

    let mut sum = 0.0;
    for n in 1..n0 {
        sum += t(n as f64).2;
    }

    let x = n0 as f64;
    let (rp, rm, h) = t(x);
    // integral of t from x to infinity:
    // -(1/2) ln((x+b+rp)/(2x)) - (1/2) ln((x-b+rm)/(2x)), written with ln_1p
    let dp = (2.0 * x * b + b * b + c * c) / (rp + x); // rp - x
    let dm = (-2.0 * x * b + b * b + c * c) / (rm + x); // rm - x
    let integral = -0.5 * ((b + dp) / (2.0 * x)).ln_1p() - 0.5 * ((-b + dm) / (2.0 * x)).ln_1p();
    let dh = -0.5 * (x + b) / (rp * rp * rp) - 0.5 * (x - b) / (rm * rm * rm) + 1.0 / (x * x);
    let tail = integral + 0.5 * h - dh / 12.0;

    let centre = 0.5 / (b * b + c * c).sqrt();
    centre + EULER_GAMMA + sum + tail
}

/// Same quantity from the real-space lattice sum:
/// `sum_{j != 0} G_{i kappa}(ell j) cos(j ell theta)` minus `ln(kappa)/2pi` (2D)
/// or `kappa/4pi` (3D). The truncation drops a tail below `1e-13`.
pub fn g_theta_poisson(dim: Dim, kappa: Kappa, theta: f64, ell: f64) -> Result<f64> {
    check_theta(theta, ell)?;
    let k = kappa.value();
    let q = (-k * ell).exp();
    let mut sum = 0.0;
    let mut j = 1usize;
    loop {
        let r = ell * j as f64;
        let term = 2.0 * green_raw(dim, k, r);
        sum += term * (j as f64 * ell * theta).cos();
        // successive terms shrink at least by the factor q
        if term * q / (1.0 - q) < 1e-13 || j > 50_000_000 {
            break;
        }
        j += 1;
    }
    let reg = match dim {
        Dim::Two => k.ln() / (2.0 * PI),
        Dim::Three => k / (4.0 * PI),
    };
    Ok(sum - reg)
}

/// Spectrum of the straight-chain `Gamma(i kappa)`:
/// `[alpha + shift - g(kappa, 0), alpha + shift - g(kappa, pi/ell)]`.
pub fn straight_gamma_interval(dim: Dim, alpha: f64, ell: f64, kappa: Kappa) -> Result<(f64, f64)> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::Parameter(format!("edge length must be positive, got {ell}")));
    }
    let a = alpha + coupling_shift(dim);
    let k = kappa.value();
    Ok((a - g_raw(dim, k, 0.0, ell), a - g_raw(dim, k, PI / ell, ell)))
}

/// Spectral threshold `kappa_thr`: root of `alpha + shift = g(kappa, 0)`.
///
/// Bracketing starts on `[KAPPA_MIN, 1]` and doubles the upper end until the
/// sign changes; the root is then bisected to relative width `1e-14`.
pub fn threshold_kappa(dim: Dim, alpha: f64, ell: f64) -> Result<f64> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::Parameter(format!("edge length must be positive, got {ell}")));
    }
    if !alpha.is_finite() {
        return Err(Error::Parameter(format!("coupling must be finite, got {alpha}")));
    }
    let a = alpha + coupling_shift(dim);
    let f = |k: f64| a - g_raw(dim, k, 0.0, ell);
    if f(KAPPA_MIN) > 0.0 {
        return Err(Error::Parameter(format!(
            "threshold for alpha = {alpha}, ell = {ell} lies below kappa = {KAPPA_MIN}"
        )));
    }
    let mut hi = 1.0f64.max(KAPPA_MIN);
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > KAPPA_MAX {
            if f(KAPPA_MAX) < 0.0 {
                return Err(Error::Parameter(format!(
                    "threshold for alpha = {alpha}, ell = {ell} lies above kappa = {KAPPA_MAX}"
                )));
            }
            hi = KAPPA_MAX;
        }
    }
    bisect(f, KAPPA_MIN, hi, Tolerance::new(0.0, 1e-14))
}

/// Closed form of the 3D threshold: `kappa = (2/ell) asinh(e^{-2 pi alpha ell} / 2)`,
/// i.e. `E = -(1/ell^2) [ln(1 + x^2/2 + x sqrt(1 + x^2/4))]^2` with `x = e^{-2 pi alpha ell}`.
pub fn threshold_kappa_closed_form_3d(alpha: f64, ell: f64) -> f64 {
    let x = (-2.0 * PI * alpha * ell).exp();
    (1.0 + 0.5 * x * x + x * (1.0 + 0.25 * x * x).sqrt()).ln() / ell
}

/// Band edges of the straight chain.
pub fn band_edges(dim: Dim, alpha: f64, ell: f64) -> Result<BandStructure> {
    let kappa_thr = threshold_kappa(dim, alpha, ell)?;
    let a = alpha + coupling_shift(dim);
    let theta = PI / ell;
    // g(kappa, pi/ell) decreases in kappa, so a root exists iff the symbol is
    // negative in the limit kappa -> 0+.
    let limit = match dim {
        Dim::Three => -LN_2 / (2.0 * PI * ell),
        Dim::Two => g_raw(dim, 0.0, theta, ell),
    };
    let kappa_upper = if a < limit {
        let f = |k: f64| a - g_raw(dim, k, theta, ell);
        let lo = 1e-12;
        if f(lo) >= 0.0 {
            None
        } else {
            let mut hi = kappa_thr;
            while f(hi) < 0.0 {
                hi *= 2.0;
            }
            Some(bisect(f, lo, hi, Tolerance::new(0.0, 1e-14))?)
        }
    } else {
        None
    };
    let e_upper = kappa_upper.map_or(0.0, |k| -k * k);
    Ok(BandStructure {
        dim,
        alpha,
        ell,
        kappa_thr,
        e_lower: -kappa_thr * kappa_thr,
        e_upper,
        kappa_upper,
        overlapping: kappa_upper.is_none(),
    })
}
