//! Dense real symmetric eigensolver: Householder reduction to tridiagonal
//! form followed by the implicit QL iteration with Wilkinson-type shifts.

use crate::error::{Error, Result};

/// Reduces the symmetric row-major `a` (destroyed) to tridiagonal form.
/// Returns `(diag, off)` with `off[i]` coupling `i` and `i+1`, plus `Q^T`
/// (row-major) when `want_q` is set, where `A = Q T Q^T`.
pub(crate) fn tridiagonalize(a: &mut [f64], n: usize, want_q: bool) -> (Vec<f64>, Vec<f64>, Option<Vec<f64>>) {
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut reflectors: Vec<(usize, f64, Vec<f64>)> = Vec::new();
    let mut p = vec![0.0; n];

    // Only the lower triangle of the trailing block is read and updated.
    let mut x = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        diag[k] = a[k * n + k];
        let start = k + 1;
        let m = n - start;
        let x = &mut x[..m];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = a[(start + i) * n + k];
        }
        if m == 1 {
            off[k] = x[0];
            continue;
        }
        let tail = dot(&x[1..], &x[1..]);
        if tail == 0.0 {
            off[k] = x[0];
            continue;
        }
        let norm = (x[0] * x[0] + tail).sqrt();
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = x.to_vec();
        v[0] -= alpha;
        let vtv = v[0] * v[0] + tail;
        let beta = 2.0 / vtv;
        off[k] = alpha;

        // p = beta * B v on the trailing block
        let p = &mut p[..m];
        p.iter_mut().for_each(|q| *q = 0.0);
        for i in 0..m {
            let base = (start + i) * n + start;
            let row = &a[base..base + i];
            let vi = v[i];
            let mut s = dot(row, &v[..i]);
            s += a[base + i] * vi;
            for (q, r) in p[..i].iter_mut().zip(row) {
                *q += r * vi;
            }
            p[i] += s;
        }
        p.iter_mut().for_each(|q| *q *= beta);
        let kfac = 0.5 * beta * dot(p, &v);
        for (pi, vi) in p.iter_mut().zip(&v) {
            *pi -= kfac * vi;
        }
        // B -= v w^T + w v^T
        for i in 0..m {
            let (vi, wi) = (v[i], p[i]);
            let base = (start + i) * n + start;
            let row = &mut a[base..=base + i];
            for ((r, vj), wj) in row.iter_mut().zip(&v[..=i]).zip(&p[..=i]) {
                *r -= vi * wj + wi * vj;
            }
        }
        if want_q {
            reflectors.push((start, beta, v));
        }
    }
    if n > 0 {
        diag[n - 1] = a[(n - 1) * n + n - 1];
    }

    let qt = want_q.then(|| {
        // Q^T = H_last ... H_0, applied to the identity from the left
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        let mut acc = vec![0.0; n];
        for (start, beta, v) in &reflectors {
            acc.iter_mut().for_each(|x| *x = 0.0);
            for (i, vi) in v.iter().enumerate() {
                let row = &z[(start + i) * n..(start + i + 1) * n];
                for (a, r) in acc.iter_mut().zip(row) {
                    *a += vi * r;
                }
            }
            for (i, vi) in v.iter().enumerate() {
                let f = beta * vi;
                let row = &mut z[(start + i) * n..(start + i + 1) * n];
                for (r, a) in row.iter_mut().zip(&acc) {
                    *r -= f * a;
                }
            }
        }
        z
    });
    (diag, off, qt)
}

/// Dot product with four independent accumulators (fixed summation order).
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// Implicit QL on a symmetric tridiagonal matrix. `e[i]` couples `i`, `i+1`.
/// When `z` is given its rows are rotated along; on entry it holds `Q^T`,
/// on exit row `i` is the eigenvector of eigenvalue `i`. Eigenvalues are
/// returned ascending.
pub(crate) fn tridiagonal_ql(mut d: Vec<f64>, off: &[f64], mut z: Option<&mut Vec<f64>>) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(d);
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::Convergence(format!("QL iteration stalled at index {l}")));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (lo, hi) = z.split_at_mut((i + 1) * n);
                        let zi = &mut lo[i * n..];
                        let zi1 = &mut hi[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let t = *b;
                            *b = s * *a + c * t;
                            *a = c * *a - s * t;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    if let Some(z) = z {
        let old = z.clone();
        for (dst, &src) in order.iter().enumerate() {
            z[dst * n..(dst + 1) * n].copy_from_slice(&old[src * n..(src + 1) * n]);
        }
    }
    Ok(sorted)
}
