//! Truncated Krein matrix `Gamma(i kappa)`, the curvature perturbation `D`,
//! and the dense symmetric eigensolver behind every spectral computation.

mod eigen;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{distance, ChainArray, Dim, COINCIDENCE_TOL};
use crate::greens::{green_raw, xi_raw, Kappa};

/// Relative asymmetry accepted by [`SymMatrix::from_row_major`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense real symmetric matrix, row-major, full storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

/// Eigenvalues (ascending) with eigenvectors; `vectors[i]` belongs to `values[i]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl SymMatrix {
    /// Checks symmetry to `SYMMETRY_TOL * max|a_ij|` and stores the symmetric part.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Parameter(format!("expected {} entries, got {}", n * n, data.len())));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("matrix has non-finite entries".into()));
        }
        let scale = data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut data = data;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if (a - b).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Parameter(format!(
                        "matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
                let s = 0.5 * (a + b);
                data[i * n + j] = s;
                data[j * n + i] = s;
            }
        }
        Ok(SymMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Parameter("rows must form a square matrix".into()));
        }
        Self::from_row_major(n, rows.concat())
    }

    /// Caller guarantees exact symmetry.
    pub(crate) fn from_symmetric_unchecked(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        SymMatrix { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `v^T A v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut a = self.data.clone();
        let (d, e, _) = eigen::tridiagonalize(&mut a, self.n, false);
        eigen::tridiagonal_ql(d, &e, None)
    }

    /// Eigenvalues in ascending order with orthonormal eigenvectors.
    pub fn eigen(&self) -> Result<EigenDecomposition> {
        let n = self.n;
        let mut a = self.data.clone();
        let (d, e, qt) = eigen::tridiagonalize(&mut a, n, true);
        let mut z = qt.expect("requested");
        let values = eigen::tridiagonal_ql(d, &e, Some(&mut z))?;
        let vectors = z.chunks_exact(n.max(1)).take(n).map(<[f64]>::to_vec).collect();
        Ok(EigenDecomposition { values, vectors })
    }
}

/// Eigenvalues of a symmetric matrix given as rows; optionally eigenvectors.
pub fn eig_sym(rows: &[Vec<f64>], with_vectors: bool) -> Result<EigenDecomposition> {
    let m = SymMatrix::from_rows(rows)?;
    if with_vectors {
        m.eigen()
    } else {
        Ok(EigenDecomposition { values: m.eigenvalues()?, vectors: Vec::new() })
    }
}

/// Truncation of `Gamma_{alpha,Y}(i kappa)` to the index window of a chain.
#[derive(Debug, Clone)]
pub struct GammaMatrix {
    pub j_min: i64,
    pub j_max: i64,
    pub kappa: Kappa,
    pub alpha: f64,
    pub dim: Dim,
    pub ell: f64,
    pub matrix: SymMatrix,
}

/// `D_kappa = Gamma_Y(i kappa) - Gamma_{Y0}(i kappa)` on the chain window.
#[derive(Debug, Clone)]
pub struct PerturbationMatrix {
    pub j_min: i64,
    pub j_max: i64,
    pub kappa: Kappa,
    pub dim: Dim,
    pub ell: f64,
    pub matrix: SymMatrix,
}

/// `G(ell |j - k|)` for `|j - k| = 0 .. n-1`, entry 0 unused.
fn straight_profile(dim: Dim, kappa: f64, ell: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (s, o) in out.iter_mut().enumerate().skip(1) {
        *o = green_raw(dim, kappa, ell * s as f64);
    }
    out
}

fn check_separation(chain: &ChainArray) -> Result<()> {
    let pts = chain.points();
    let tol = COINCIDENCE_TOL * chain.ell();
    for i in 0..pts.len() {
        for k in i + 1..pts.len() {
            if distance(&pts[i], &pts[k]) < tol {
                return Err(Error::Assembly(format!(
                    "points {} and {} coincide; Gamma is undefined",
                    chain.index_of(i),
                    chain.index_of(k)
                )));
            }
        }
    }
    Ok(())
}

/// Assembles `Gamma(i kappa)` with the default execution policy.
pub fn build_gamma(chain: &ChainArray, alpha: f64, kappa: Kappa) -> Result<GammaMatrix> {
    build_gamma_with(chain, alpha, kappa, Execution::default())
}

/// Diagonal `alpha - xi_d`, off-diagonal `-G(|y_j - y_k|)`.
pub fn build_gamma_with(chain: &ChainArray, alpha: f64, kappa: Kappa, exec: Execution) -> Result<GammaMatrix> {
    if !alpha.is_finite() {
        return Err(Error::Parameter(format!("coupling must be finite, got {alpha}")));
    }
    check_separation(chain)?;
    let n = chain.len();
    let dim = chain.dim();
    let k = kappa.value();
    let diag = alpha - xi_raw(dim, k);
    let pts = chain.points();
    let rows = exec.map(n, |i| {
        let mut row = vec![0.0; n];
        for (j, r) in row.iter_mut().enumerate() {
            *r = if i == j { diag } else { -green_raw(dim, k, distance(&pts[i], &pts[j])) };
        }
        row
    });
    Ok(GammaMatrix {
        j_min: chain.j_min(),
        j_max: chain.j_max(),
        kappa,
        alpha,
        dim,
        ell: chain.ell(),
        matrix: SymMatrix::from_symmetric_unchecked(n, rows.concat()),
    })
}

pub fn build_dmatrix(chain: &ChainArray, kappa: Kappa) -> Result<PerturbationMatrix> {
    build_dmatrix_with(chain, kappa, Execution::default())
}

/// Off-diagonal `G(ell |j - k|) - G(|y_j - y_k|)`, zero diagonal.
pub fn build_dmatrix_with(chain: &ChainArray, kappa: Kappa, exec: Execution) -> Result<PerturbationMatrix> {
    check_separation(chain)?;
    let n = chain.len();
    let dim = chain.dim();
    let k = kappa.value();
    let straight = straight_profile(dim, k, chain.ell(), n);
    let pts = chain.points();
    let rows = exec.map(n, |i| {
        let mut row = vec![0.0; n];
        for (j, r) in row.iter_mut().enumerate() {
            if i != j {
                *r = straight[i.abs_diff(j)] - green_raw(dim, k, distance(&pts[i], &pts[j]));
            }
        }
        row
    });
    Ok(PerturbationMatrix {
        j_min: chain.j_min(),
        j_max: chain.j_max(),
        kappa,
        dim,
        ell: chain.ell(),
        matrix: SymMatrix::from_symmetric_unchecked(n, rows.concat()),
    })
}

/// Frobenius norm of the truncated perturbation.
pub fn hs_norm(d: &PerturbationMatrix) -> f64 {
    d.matrix.frobenius_norm()
}

/// Smallest eigenvalue of the truncated `Gamma(i kappa)`.
pub fn lambda_min(chain: &ChainArray, alpha: f64, kappa: Kappa) -> Result<f64> {
    let g = build_gamma(chain, alpha, kappa)?;
    Ok(g.matrix.eigenvalues()?[0])
}

#[derive(Serialize)]
struct DumpHeader {
    dim: u8,
    ell: f64,
    alpha: f64,
    kappa: f64,
    #[serde(rename = "N")]
    n: i64,
    j_min: i64,
    j_max: i64,
}

impl GammaMatrix {
    pub fn size(&self) -> usize {
        self.matrix.size()
    }

    /// Row-major CSV, one comment header line with the parameters, entries
    /// at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let header = DumpHeader {
            dim: self.dim.into(),
            ell: self.ell,
            alpha: self.alpha,
            kappa: self.kappa.value(),
            n: self.j_min.abs().max(self.j_max.abs()),
            j_min: self.j_min,
            j_max: self.j_max,
        };
        let n = self.size();
        let mut out = String::with_capacity(n * n * 24 + 128);
        out.push_str("# ");
        out.push_str(&serde_json::to_string(&header).expect("plain struct"));
        out.push('\n');
        for row in self.matrix.as_slice().chunks_exact(n) {
            let mut first = true;
            for x in row {
                if !first {
                    out.push(',');
                }
                first = false;
                let _ = write!(out, "{x:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{gen_bent, gen_straight};
    use std::f64::consts::PI;

    fn k(v: f64) -> Kappa {
        Kappa::new(v).unwrap()
    }

    #[test]
    fn two_by_two() {
        let e = eig_sym(&[vec![2.0, 1.0], vec![1.0, 2.0]], true).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-15 && (e.values[1] - 3.0).abs() < 1e-15);
        let v = &e.vectors[0];
        assert!((v[0] + v[1]).abs() < 1e-15);
    }

    #[test]
    fn diagonal_sorted() {
        let rows = vec![vec![3.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, 2.0]];
        assert_eq!(eig_sym(&rows, false).unwrap().values, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_asymmetric() {
        assert!(eig_sym(&[vec![1.0, 2.0], vec![0.0, 1.0]], false).is_err());
    }

    #[test]
    fn trivial_sizes() {
        assert!(SymMatrix::from_row_major(0, vec![]).unwrap().eigenvalues().unwrap().is_empty());
        let one = SymMatrix::from_row_major(1, vec![4.5]).unwrap().eigen().unwrap();
        assert_eq!(one.values, vec![4.5]);
        assert_eq!(one.vectors, vec![vec![1.0]]);
    }

    #[test]
    fn single_point_gamma() {
        let c = gen_straight(1, 1.0, Dim::Three).unwrap().window(0).unwrap();
        let g = build_gamma(&c, 0.0, k(1.0)).unwrap();
        assert_eq!(g.size(), 1);
        assert!((g.matrix.get(0, 0) - 1.0 / (4.0 * PI)).abs() < 1e-16);
    }

    #[test]
    fn two_point_gamma() {
        let c = ChainArray::new(Dim::Three, 1.0, 0, vec![[0.0; 3], [1.0, 0.0, 0.0]]).unwrap();
        let g = build_gamma(&c, 0.0, k(1.0)).unwrap();
        let off = -(-1.0f64).exp() / (4.0 * PI);
        assert!((g.matrix.get(0, 1) - off).abs() < 1e-16);
        assert!((g.matrix.get(0, 1) + 0.029_274_915_762_159_58).abs() < 1e-15);
        assert!((g.matrix.get(1, 1) - 0.079_577_471_545_947_67).abs() < 1e-15);
        let lmin = lambda_min(&c, 0.0, k(1.0)).unwrap();
        assert!((lmin - (1.0 / (4.0 * PI) + off)).abs() < 1e-15);
        assert!((lmin - 0.050_302_555_783_788_09).abs() < 1e-15);
    }

    #[test]
    fn gamma_invariants() {
        let c = gen_bent(12, 1.0, Dim::Two, 1.1).unwrap();
        let g = build_gamma(&c, 0.3, k(0.8)).unwrap();
        let n = g.size();
        let diag = g.matrix.get(0, 0);
        for i in 0..n {
            assert_eq!(g.matrix.get(i, i), diag);
            for j in 0..n {
                assert_eq!(g.matrix.get(i, j), g.matrix.get(j, i));
                if i != j {
                    assert!(g.matrix.get(i, j) < 0.0);
                }
            }
        }
    }

    #[test]
    fn bent_d_entry() {
        let c = gen_bent(1, 1.0, Dim::Three, PI / 2.0).unwrap();
        let d = build_dmatrix(&c, k(1.0)).unwrap();
        let want = (-2.0f64).exp() / (8.0 * PI) - (-(2f64.sqrt())).exp() / (4.0 * PI * 2f64.sqrt());
        assert!((d.matrix.get(0, 2) - want).abs() < 1e-16);
        assert!((d.matrix.get(0, 2) + 0.008_295_302_845_910_166).abs() < 1e-15);
        assert_eq!(d.matrix.get(0, 1), 0.0);
    }

    #[test]
    fn straight_d_vanishes() {
        let c = gen_straight(30, 1.0, Dim::Two).unwrap();
        let d = build_dmatrix(&c, k(1.3)).unwrap();
        assert_eq!(hs_norm(&d), 0.0);
        // non-dyadic spacing: only rounding in the chord lengths survives
        let c = gen_straight(30, 0.7, Dim::Three).unwrap();
        let d = build_dmatrix(&c, k(1.3)).unwrap();
        assert!(hs_norm(&d) < 1e-13);
    }

    #[test]
    fn gamma_decomposes_into_straight_plus_d() {
        for dim in [Dim::Two, Dim::Three] {
            let bent = gen_bent(15, 1.0, dim, 1.2).unwrap();
            let straight = gen_straight(15, 1.0, dim).unwrap();
            let kap = k(0.9);
            let gy = build_gamma(&bent, -0.1, kap).unwrap();
            let g0 = build_gamma(&straight, -0.1, kap).unwrap();
            let d = build_dmatrix(&bent, kap).unwrap();
            for ((a, b), c) in gy.matrix.as_slice().iter().zip(g0.matrix.as_slice()).zip(d.matrix.as_slice()) {
                assert!((a - (b + c)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn coincident_points_refused() {
        let c = ChainArray::from_points_unchecked(Dim::Three, 1.0, 0, vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0; 3]]).unwrap();
        assert!(matches!(build_gamma(&c, 0.0, k(1.0)), Err(Error::Assembly(_))));
    }

    #[test]
    fn csv_dump_layout() {
        let c = gen_straight(1, 1.0, Dim::Three).unwrap();
        let g = build_gamma(&c, 0.0, k(1.0)).unwrap();
        let csv = g.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("# {\"dim\":3"));
        let first: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(first.len(), 3);
        assert_eq!(first[0], g.matrix.get(0, 0));
    }

    #[test]
    fn execution_policy_is_bitwise_neutral() {
        let c = gen_bent(20, 1.0, Dim::Two, 2.0).unwrap();
        let a = build_gamma_with(&c, 0.0, k(1.0), Execution::Sequential).unwrap();
        let b = build_gamma_with(&c, 0.0, k(1.0), Execution::Parallel).unwrap();
        assert_eq!(a.matrix, b.matrix);
    }
}
