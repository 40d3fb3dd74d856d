use num_complex::Complex64;

use super::{Fim2x2, FimPath};
use crate::covariance::SpectralCovariances;
use crate::error::{Error, Result};

type M2 = [[Complex64; 2]; 2];

const RANK_TOL: f64 = 1e-10;
const LEAK_TOL: f64 = 1e-8;

fn z() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[z(); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `tr(A B)` without forming the product.
fn trace_prod(a: &M2, b: &M2) -> Complex64 {
    a[0][0] * b[0][0] + a[0][1] * b[1][0] + a[1][0] * b[0][1] + a[1][1] * b[1][1]
}

fn scale(a: &M2, s: Complex64) -> M2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

fn fro(a: &M2) -> f64 {
    a.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigen-pair of the largest eigenvalue of a Hermitian 2x2 `[[a, g], [g*, b]]`.
fn top_eigen(a: f64, b: f64, g: Complex64) -> (f64, f64, [Complex64; 2]) {
    let mean = 0.5 * (a + b);
    let rad = (0.25 * (a - b) * (a - b) + g.norm_sqr()).sqrt();
    let l_max = mean + rad;
    let det = a * b - g.norm_sqr();
    let l_min = if l_max > 0.0 { det / l_max } else { 0.0 };
    let v = if g.norm() == 0.0 {
        if a >= b {
            [re(1.0), z()]
        } else {
            [z(), re(1.0)]
        }
    } else if a >= b {
        [re(l_max - b), g.conj()]
    } else {
        [g, re(l_max - a)]
    };
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    (l_max, l_min, [v[0] / n, v[1] / n])
}

/// Fisher information from the per-bin 2x2 blocks of the prefix-free model.
///
/// Bins whose block vanishes carry no information and are skipped. A
/// rank-one block whose `alpha` derivative leaves its range makes `alpha`
/// exactly identifiable and marks the result unbounded.
pub fn fim_fast(sc: &SpectralCovariances) -> Result<Fim2x2> {
    let n = sc.n_dft();
    let g1 = sc.k1.norm_sqr();
    let k1 = sc.k1;
    let alpha = sc.alpha;
    let a2 = alpha.norm_sqr();

    let scale_max = (0..n).map(|i| top_eigen(sc.r[i], sc.r_img[i], sc.gamma[i]).0).fold(0.0f64, f64::max);
    if !(scale_max > 0.0 && scale_max.is_finite()) {
        return Err(Error::Numerical("received covariance is zero or not finite".into()));
    }
    let tol = RANK_TOL * scale_max;

    let mut acc = [[z(); 2]; 2];
    for i in 0..n {
        let (s, si) = (sc.s[i], sc.s_img[i]);
        let sum = s + si;
        let x: M2 = [[re(s + a2 * si), alpha * sum], [alpha.conj() * sum, re(a2 * s + si)]];
        let d_k1 = scale(&x, k1.conj());
        let d_k1c = scale(&x, k1);
        let d_a: M2 = [[alpha.conj() * (g1 * si), re(g1 * sum)], [z(), alpha.conj() * (g1 * s)]];
        let d_ac: M2 = [[alpha * (g1 * si), z()], [re(g1 * sum), alpha * (g1 * s)]];

        let (a, b, g) = (sc.r[i], sc.r_img[i], sc.gamma[i]);
        let (l_max, l_min, v1) = top_eigen(a, b, g);
        let pinv: M2 = if l_max <= tol {
            continue;
        } else if l_min > tol {
            let det = a * b - g.norm_sqr();
            [[re(b / det), -g / det], [-g.conj() / det, re(a / det)]]
        } else {
            let v0 = [-v1[1].conj(), v1[0].conj()];
            let quad = |u: &[Complex64; 2], m: &M2, w: &[Complex64; 2]| {
                u[0].conj() * (m[0][0] * w[0] + m[0][1] * w[1]) + u[1].conj() * (m[1][0] * w[0] + m[1][1] * w[1])
            };
            let leak = quad(&v0, &d_a, &v1).norm() + quad(&v1, &d_a, &v0).norm() + quad(&v0, &d_a, &v0).norm();
            if leak > LEAK_TOL * fro(&d_a).max(f64::MIN_POSITIVE) {
                return Ok(Fim2x2 { j: [[z(); 2]; 2], unbounded: true, path: FimPath::Fast });
            }
            let inv_l = 1.0 / l_max;
            [
                [v1[0] * v1[0].conj() * inv_l, v1[0] * v1[1].conj() * inv_l],
                [v1[1] * v1[0].conj() * inv_l, v1[1] * v1[1].conj() * inv_l],
            ]
        };
        let a_k1 = mul(&pinv, &d_k1);
        let a_k1c = mul(&pinv, &d_k1c);
        let a_a = mul(&pinv, &d_a);
        let a_ac = mul(&pinv, &d_ac);
        acc[0][0] += trace_prod(&a_k1, &a_k1c);
        acc[0][1] += trace_prod(&a_k1, &a_ac);
        acc[1][0] += trace_prod(&a_a, &a_k1c);
        acc[1][1] += trace_prod(&a_a, &a_ac);
    }
    let f = 0.5 * sc.n_ofdm as f64;
    let j = [[acc[0][0] * f, acc[0][1] * f], [acc[1][0] * f, acc[1][1] * f]];
    Ok(Fim2x2 { j, unbounded: false, path: FimPath::Fast })
}
