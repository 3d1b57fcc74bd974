//! Free Green's functions of `-Delta + kappa^2` in two and three dimensions,
//! their regularised diagonal values, and the modified Bessel kernels.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Dim;
use crate::EULER_GAMMA;

/// Smallest admitted spectral parameter.
pub const KAPPA_MIN: f64 = 1e-4;
/// Largest admitted spectral parameter.
pub const KAPPA_MAX: f64 = 50.0;

/// Spectral parameter `kappa > 0`, momentum `k = i kappa`, energy `-kappa^2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Kappa(f64);

impl Kappa {
    pub fn new(value: f64) -> Result<Self> {
        if !(KAPPA_MIN..=KAPPA_MAX).contains(&value) {
            return Err(Error::Parameter(format!(
                "kappa = {value} outside the admitted range [{KAPPA_MIN}, {KAPPA_MAX}]"
            )));
        }
        Ok(Kappa(value))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn energy(self) -> f64 {
        -self.0 * self.0
    }
}

impl TryFrom<f64> for Kappa {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Kappa::new(v)
    }
}

impl From<Kappa> for f64 {
    fn from(k: Kappa) -> f64 {
        k.0
    }
}

// ---------------------------------------------------------------------------
// Modified Bessel functions of the second kind
// ---------------------------------------------------------------------------

/// `K_0(x)` for `x > 0`.
pub fn bessel_k0(x: f64) -> Result<f64> {
    check_bessel_arg(x)?;
    Ok(k0_k1(x).0)
}

/// `K_1(x)` for `x > 0`.
pub fn bessel_k1(x: f64) -> Result<f64> {
    check_bessel_arg(x)?;
    Ok(k0_k1(x).1)
}

fn check_bessel_arg(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("Bessel K argument must be positive, got {x}")))
    }
}

/// `(K_0(x), K_1(x))` for `x > 0`; underflows to zero for very large `x`.
pub(crate) fn k0_k1(x: f64) -> (f64, f64) {
    if x <= 2.0 {
        k0_k1_series(x)
    } else {
        let (s0, s1) = k0_k1_scaled_cf(x);
        let e = (-x).exp();
        (s0 * e, s1 * e)
    }
}

/// Ascending series around the origin. Terms decay like `(x^2/4)^k / (k!)^2`,
/// so at `x <= 2` about 20 terms reach machine precision.
fn k0_k1_series(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let log_half = (0.5 * x).ln();

    // K0: I0 and the harmonic-weighted companion series.
    let mut term = 1.0; // y^k / (k!)^2
    let mut i0 = 1.0;
    let mut harm = 0.0;
    let mut acc0 = 0.0;
    // K1: I1 and the digamma-weighted series; term1 = y^k / (k! (k+1)!)
    let mut term1 = 1.0;
    let mut i1_sum = 1.0;
    let mut psi_k1 = -EULER_GAMMA; // psi(k+1)
    let mut psi_k2 = 1.0 - EULER_GAMMA; // psi(k+2)
    let mut acc1 = psi_k1 + psi_k2;

    for k in 1..60 {
        let kf = k as f64;
        term *= y / (kf * kf);
        harm += 1.0 / kf;
        i0 += term;
        acc0 += term * harm;

        term1 *= y / (kf * (kf + 1.0));
        psi_k1 += 1.0 / kf;
        psi_k2 += 1.0 / (kf + 1.0);
        i1_sum += term1;
        acc1 += term1 * (psi_k1 + psi_k2);

        if term < 1e-18 * i0 && term1 < 1e-18 * i1_sum {
            break;
        }
    }

    let k0 = -(log_half + EULER_GAMMA) * i0 + acc0;
    let i1 = 0.5 * x * i1_sum;
    let k1 = 1.0 / x + log_half * i1 - 0.25 * x * acc1;
    (k0, k1)
}

/// Steed's continued fraction (Temme's CF2 with order zero) for
/// `e^x K_0(x)` and `e^x K_1(x)`, valid for `x >= 2`.
fn k0_k1_scaled_cf(x: f64) -> (f64, f64) {
    const EPS: f64 = 1e-16;
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

// ---------------------------------------------------------------------------
// Green's functions at k = i kappa
// ---------------------------------------------------------------------------

/// `G_{i kappa}(r)`: `K_0(kappa r) / 2 pi` in 2D, `e^{-kappa r} / (4 pi r)` in 3D.
pub fn green_free(dim: Dim, kappa: Kappa, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!(
            "Green's function needs r > 0 (got {r}); the diagonal is given by xi_reg"
        )));
    }
    Ok(green_raw(dim, kappa.value(), r))
}

#[inline]
pub(crate) fn green_raw(dim: Dim, kappa: f64, r: f64) -> f64 {
    match dim {
        Dim::Two => k0_k1(kappa * r).0 / (2.0 * PI),
        Dim::Three => (-kappa * r).exp() / (4.0 * PI * r),
    }
}

/// Regularised diagonal value `xi_d` at `k = i kappa`.
///
/// 2D: `-(ln(kappa/2) + gamma) / 2 pi`; 3D: `-kappa / 4 pi`.
pub fn xi_reg(dim: Dim, kappa: Kappa) -> f64 {
    xi_raw(dim, kappa.value())
}

#[inline]
pub(crate) fn xi_raw(dim: Dim, kappa: f64) -> f64 {
    match dim {
        Dim::Two => -((0.5 * kappa).ln() + EULER_GAMMA) / (2.0 * PI),
        Dim::Three => -kappa / (4.0 * PI),
    }
}

/// `rho * G'_{i kappa}(rho)`, the radial derivative scaled by the radius.
/// Always negative; bounded as `rho -> 0` in 2D (limit `-1/2pi`).
pub fn green_rad_deriv(dim: Dim, kappa: Kappa, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("radial derivative needs rho > 0, got {rho}")));
    }
    let k = kappa.value();
    let x = k * rho;
    Ok(match dim {
        Dim::Two => -x * k0_k1(x).1 / (2.0 * PI),
        Dim::Three => -(-x).exp() * (1.0 + x) / (4.0 * PI * rho),
    })
}
