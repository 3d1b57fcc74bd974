//! Chain arrays: generators, validation of the geometric assumptions, and
//! the JSON geometry file format.
//!
//! A chain is a finite window `j_min ..= j_max` of an integer-indexed
//! sequence of points with fixed neighbour spacing `ell`.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance of all geometric equality tests.
pub const GEOMETRY_TOL: f64 = 1e-12;
/// Points closer than this (in units of `ell`) are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-9;

pub type Point = [f64; 3];

/// Ambient dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn as_usize(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }
}

impl TryFrom<u8> for Dim {
    type Error = Error;
    fn try_from(d: u8) -> Result<Self> {
        match d {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(Error::Parameter(format!("dimension must be 2 or 3, got {d}"))),
        }
    }
}

impl From<Dim> for u8 {
    fn from(d: Dim) -> u8 {
        d.as_usize() as u8
    }
}

#[inline]
pub fn distance(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Finite window of a polygonal chain with constant edge length.
///
/// Two-dimensional chains store `z = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometryFile", into = "GeometryFile")]
pub struct ChainArray {
    dim: Dim,
    ell: f64,
    j_min: i64,
    points: Vec<Point>,
}

impl ChainArray {
    /// Builds a chain and checks the neighbour, chord and injectivity invariants.
    pub fn new(dim: Dim, ell: f64, j_min: i64, points: Vec<Point>) -> Result<Self> {
        let chain = Self::from_points_unchecked(dim, ell, j_min, points)?;
        chain.check_invariants()?;
        Ok(chain)
    }

    /// Builds a chain without the geometric checks. Only the edge length and
    /// point count are validated; used to construct counterexamples.
    pub fn from_points_unchecked(dim: Dim, ell: f64, j_min: i64, points: Vec<Point>) -> Result<Self> {
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::Parameter(format!("edge length must be positive, got {ell}")));
        }
        if points.is_empty() {
            return Err(Error::Parameter("chain needs at least one point".into()));
        }
        if dim == Dim::Two && points.iter().any(|p| p[2] != 0.0) {
            return Err(Error::Parameter("two-dimensional chain with nonzero z component".into()));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("non-finite coordinate".into()));
        }
        Ok(ChainArray { dim, ell, j_min, points })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn j_min(&self) -> i64 {
        self.j_min
    }

    pub fn j_max(&self) -> i64 {
        self.j_min + self.points.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Chain index of the `i`-th stored point.
    pub fn index_of(&self, i: usize) -> i64 {
        self.j_min + i as i64
    }

    /// Point with chain index `j`, if inside the window.
    pub fn point(&self, j: i64) -> Option<&Point> {
        usize::try_from(j - self.j_min).ok().and_then(|i| self.points.get(i))
    }

    /// Sub-chain restricted to indices `-n ..= n` (clipped to the stored window).
    pub fn window(&self, n: usize) -> Result<ChainArray> {
        let lo = (-(n as i64)).max(self.j_min);
        let hi = (n as i64).min(self.j_max());
        if lo > hi {
            return Err(Error::Parameter(format!(
                "window [-{n}, {n}] does not intersect chain indices [{}, {}]",
                self.j_min,
                self.j_max()
            )));
        }
        let a = (lo - self.j_min) as usize;
        let b = (hi - self.j_min) as usize;
        Ok(ChainArray {
            dim: self.dim,
            ell: self.ell,
            j_min: lo,
            points: self.points[a..=b].to_vec(),
        })
    }

    /// Applies `x -> R x + t`. `rotation` must be orthogonal; for 2D chains it
    /// must keep the plane `z = 0`.
    pub fn rigid_motion(&self, rotation: [[f64; 3]; 3], shift: Point) -> Result<ChainArray> {
        let points = self
            .points
            .iter()
            .map(|p| {
                let mut q = [0.0; 3];
                for (r, qr) in rotation.iter().zip(q.iter_mut()) {
                    *qr = r[0] * p[0] + r[1] * p[1] + r[2] * p[2];
                }
                [q[0] + shift[0], q[1] + shift[1], q[2] + shift[2]]
            })
            .collect();
        ChainArray::new(self.dim, self.ell, self.j_min, points)
    }

    /// Matrix of pairwise distances, row-major.
    pub fn distance_matrix(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                out[i * n + k] = distance(&self.points[i], &self.points[k]);
            }
        }
        out
    }

    fn check_invariants(&self) -> Result<()> {
        let ell = self.ell;
        for (i, w) in self.points.windows(2).enumerate() {
            let d = distance(&w[0], &w[1]);
            if ((d - ell) / ell).abs() > GEOMETRY_TOL {
                return Err(Error::Validation {
                    j: self.index_of(i),
                    k: self.index_of(i + 1),
                    reason: format!("neighbour distance {d} differs from ell = {ell}"),
                });
            }
        }
        let n = self.len();
        for i in 0..n {
            for k in i + 1..n {
                let d = distance(&self.points[i], &self.points[k]);
                let bound = ell * (k - i) as f64;
                if d > bound * (1.0 + GEOMETRY_TOL) {
                    return Err(Error::Validation {
                        j: self.index_of(i),
                        k: self.index_of(k),
                        reason: format!("chord {d} exceeds ell |j - j'| = {bound}"),
                    });
                }
                if d < COINCIDENCE_TOL * ell {
                    return Err(Error::Validation {
                        j: self.index_of(i),
                        k: self.index_of(k),
                        reason: "coincident points".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<ChainArray> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// On-disk geometry layout: points listed in index order, `j_max` implied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryFile {
    pub dim: u8,
    pub ell: f64,
    pub j_min: i64,
    pub points: Vec<Vec<f64>>,
}

impl TryFrom<GeometryFile> for ChainArray {
    type Error = Error;
    fn try_from(f: GeometryFile) -> Result<Self> {
        let dim = Dim::try_from(f.dim)?;
        let points = f
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if p.len() != dim.as_usize() {
                    return Err(Error::Parameter(format!(
                        "point {i} has {} coordinates, expected {}",
                        p.len(),
                        dim.as_usize()
                    )));
                }
                Ok([p[0], p[1], if p.len() == 3 { p[2] } else { 0.0 }])
            })
            .collect::<Result<Vec<_>>>()?;
        ChainArray::new(dim, f.ell, f.j_min, points)
    }
}

impl From<ChainArray> for GeometryFile {
    fn from(c: ChainArray) -> Self {
        let d = c.dim.as_usize();
        GeometryFile {
            dim: d as u8,
            ell: c.ell,
            j_min: c.j_min,
            points: c.points.iter().map(|p| p[..d].to_vec()).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

fn check_common(n_half: usize, ell: f64) -> Result<()> {
    if n_half == 0 {
        return Err(Error::Parameter("n_half must be at least 1".into()));
    }
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::Parameter(format!("edge length must be positive, got {ell}")));
    }
    Ok(())
}

/// Straight chain `y_j = (j ell, 0, 0)` on `[-n_half, n_half]`.
pub fn gen_straight(n_half: usize, ell: f64, dim: Dim) -> Result<ChainArray> {
    check_common(n_half, ell)?;
    let n = n_half as i64;
    let points = (-n..=n).map(|j| [j as f64 * ell, 0.0, 0.0]).collect();
    ChainArray::new(dim, ell, -n, points)
}

/// Two straight arms meeting at the origin with interior angle `angle`.
/// Indices `j >= 0` lie on the positive x-axis.
pub fn gen_bent(n_half: usize, ell: f64, dim: Dim, angle: f64) -> Result<ChainArray> {
    check_common(n_half, ell)?;
    if !(angle > 0.0 && angle <= PI) {
        return Err(Error::Parameter(format!("bend angle must lie in (0, pi], got {angle}")));
    }
    let n = n_half as i64;
    let (s, c) = angle.sin_cos();
    let points = (-n..=n)
        .map(|j| {
            let t = j.unsigned_abs() as f64 * ell;
            if j >= 0 {
                [t, 0.0, 0.0]
            } else {
                [t * c, t * s, 0.0]
            }
        })
        .collect();
    ChainArray::new(dim, ell, -n, points)
}

/// Chain that turns by `turn` in total, spread evenly over `arc_edges`
/// consecutive central vertices; straight tails outside. With `arc_edges = 1`
/// this is [`gen_bent`] with `angle = pi - |turn|` up to a rigid motion.
pub fn gen_arc_chain(n_half: usize, ell: f64, dim: Dim, arc_edges: usize, turn: f64) -> Result<ChainArray> {
    check_common(n_half, ell)?;
    if arc_edges == 0 {
        return Err(Error::Parameter("arc_edges must be at least 1".into()));
    }
    if !(turn.abs() < PI) {
        return Err(Error::Parameter(format!("total turn must satisfy |turn| < pi, got {turn}")));
    }
    let n = n_half as i64;
    let first = -((arc_edges as i64 - 1) / 2);
    let last = first + arc_edges as i64 - 1;
    let step = turn / arc_edges as f64;
    // heading of the edge j -> j+1
    let heading = |j: i64| step * (j.clamp(first - 1, last) - first + 1) as f64;

    let size = (2 * n + 1) as usize;
    let mut points = vec![[0.0; 3]; size];
    let at = |j: i64| (j + n) as usize;
    for j in 0..n {
        let (s, c) = heading(j).sin_cos();
        let p = points[at(j)];
        points[at(j + 1)] = [p[0] + ell * c, p[1] + ell * s, 0.0];
    }
    for j in (-n..0).rev() {
        let (s, c) = heading(j).sin_cos();
        let p = points[at(j + 1)];
        points[at(j)] = [p[0] - ell * c, p[1] - ell * s, 0.0];
    }
    ChainArray::new(dim, ell, -n, points)
}

/// Square lattice block of side `2M+1` (spacing `ell`) sitting on the x-axis,
/// `{(a, b): |a| <= M, 0 <= b <= 2M}`, joined to the axis segment
/// `{(a, 0): |a| <= N}`. The chain enters the block at `(-M, 0)`, climbs the
/// first column, sweeps the remaining columns row by row (serpentine) and
/// leaves at `(M, 0)`.
///
/// The point sets are nested: `Y(M, N)` is contained in `Y(M+1, N)` and in
/// `Y(M, N+1)`. `N < M` is accepted and simply means no tails.
pub fn gen_packed_block(m: usize, n: usize, ell: f64, dim: Dim) -> Result<ChainArray> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::Parameter(format!("edge length must be positive, got {ell}")));
    }
    let m = m as i64;
    let n = n as i64;
    let tail = (n - m).max(0);
    let mut cells: Vec<(i64, i64)> = Vec::new();
    cells.extend((1..=tail).rev().map(|t| (-m - t, 0)));
    cells.extend((0..=2 * m).map(|b| (-m, b)));
    for (r, b) in (0..=2 * m).rev().enumerate() {
        if r % 2 == 0 {
            cells.extend((-m + 1..=m).map(|a| (a, b)));
        } else {
            cells.extend((-m + 1..=m).rev().map(|a| (a, b)));
        }
    }
    cells.extend((1..=tail).map(|t| (m + t, 0)));

    let count = cells.len() as i64;
    let j_min = -(count - 1) / 2;
    let points = cells
        .into_iter()
        .map(|(a, b)| [a as f64 * ell, b as f64 * ell, 0.0])
        .collect();
    ChainArray::new(dim, ell, j_min, points)
}

// ---------------------------------------------------------------------------
// Assumption report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A2Params {
    pub c2_est: f64,
    pub mu: f64,
    pub omega: f64,
}

/// Empirical constants of the geometric assumptions on a finite window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// `min |y_j - y_k| / (ell |j - k|)` over all pairs.
    pub c1_est: f64,
    /// Pairs whose chord is shorter than `ell |j - k|` beyond tolerance.
    pub sharp_pairs: u64,
    pub a2_params: A2Params,
    pub a2_satisfied: bool,
    /// The decay constants are fitted on a finite window and are estimates only.
    pub a2_window_estimate: bool,
    pub straight: bool,
}

/// Fits the geometric constants of `chain`.
///
/// The asymptotic-straightness check uses pairs `(j, k)` of the sector
/// `j, k != 0, omega < j/k < 1/omega`. For every `mu` in `mu_grid` the smallest
/// `c2` with `1 - |y_j - y_k|/(ell|j-k|) <= c2 (1 + |j+k|^{2 mu})^{-1/2}` is
/// fitted. A value of `mu` is accepted when the constant fitted on the inner
/// half of the sector (`|j+k| <= S/2`) already covers the outer half. The
/// reported `mu` is the largest accepted value above 1/2, or the largest grid
/// value when none is accepted.
pub fn validate_chain(chain: &ChainArray, omega: f64, mu_grid: &[f64]) -> Result<AssumptionReport> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::Parameter(format!("omega must lie in (0, 1), got {omega}")));
    }
    if mu_grid.is_empty() || mu_grid.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::Parameter("mu grid must be nonempty and positive".into()));
    }
    chain.check_invariants()?;

    let ell = chain.ell();
    let n = chain.len();
    let pts = chain.points();
    let mut c1 = 1.0f64;
    let mut sharp = 0u64;
    // (deficit, |j+k|) for sector pairs with nonzero deficit
    let mut sector: Vec<(f64, f64)> = Vec::new();
    let mut s_max = 0.0f64;
    for i in 0..n {
        for k in i + 1..n {
            let sep = (k - i) as f64;
            let ratio = distance(&pts[i], &pts[k]) / (ell * sep);
            c1 = c1.min(ratio);
            if ratio < 1.0 - GEOMETRY_TOL {
                sharp += 1;
            }
            let (j1, j2) = (chain.index_of(i), chain.index_of(k));
            if j1 == 0 || j2 == 0 {
                continue;
            }
            let q = j1 as f64 / j2 as f64;
            if q > omega && q < 1.0 / omega {
                let s = (j1 + j2).unsigned_abs() as f64;
                s_max = s_max.max(s);
                let deficit = (1.0 - ratio).max(0.0);
                if deficit > GEOMETRY_TOL {
                    sector.push((deficit, s));
                }
            }
        }
    }

    let fit = |mu: f64| {
        let mut inner = 0.0f64;
        let mut outer = 0.0f64;
        for &(d, s) in &sector {
            let w = d * (1.0 + s.powf(2.0 * mu)).sqrt();
            if s <= 0.5 * s_max {
                inner = inner.max(w);
            } else {
                outer = outer.max(w);
            }
        }
        (inner.max(outer), outer <= inner * (1.0 + 1e-9) + 1e-12)
    };

    let mut mus: Vec<f64> = mu_grid.to_vec();
    mus.sort_by(f64::total_cmp);
    let accepted = mus.iter().rev().find(|&&mu| mu > 0.5 && fit(mu).1).copied();
    let mu = accepted.unwrap_or(*mus.last().unwrap());
    let (c2, _) = fit(mu);

    Ok(AssumptionReport {
        c1_est: c1,
        sharp_pairs: sharp,
        a2_params: A2Params { c2_est: c2, mu, omega },
        a2_satisfied: accepted.is_some(),
        a2_window_estimate: true,
        straight: sharp == 0,
    })
}

/// Grid of exponents used when the caller has no preference.
pub const DEFAULT_MU_GRID: [f64; 6] = [0.5, 0.75, 1.0, 1.5, 2.0, 3.0];
pub const DEFAULT_OMEGA: f64 = 0.5;
