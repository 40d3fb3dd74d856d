use num_complex::Complex64;

use super::{Fim2x2, FimPath};
use crate::covariance::dense::{cov_s, received_from_cov_s, CMatrix, DenseLayout};
use crate::covariance::ModelSpec;
use crate::error::{Error, Result};

const RANK_TOL: f64 = 1e-10;
const LEAK_TOL: f64 = 1e-8;

fn blocks(nw: &CMatrix, ne: &CMatrix, sw: &CMatrix, se: &CMatrix) -> CMatrix {
    let n = nw.nrows();
    let mut out = CMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(nw);
    out.view_mut((0, n), (n, n)).copy_from(ne);
    out.view_mut((n, 0), (n, n)).copy_from(sw);
    out.view_mut((n, n), (n, n)).copy_from(se);
    out
}

/// `tr(A B)` without forming the product.
fn trace_prod(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Fisher information from the dense augmented covariance.
///
/// When the covariance is rank deficient the information is computed on its
/// range. If the `alpha` derivative reaches outside that range the parameter
/// is exactly identifiable and the result is marked unbounded; a `K1`
/// derivative doing the same is reported as a singular covariance.
pub fn fim_full(model: &ModelSpec, layout: DenseLayout) -> Result<Fim2x2> {
    let cs = cov_s(model, layout)?;
    let n = cs.nrows();
    let cov = received_from_cov_s(&cs, model).assemble();

    let k1 = model.params.k1();
    let alpha = model.params.alpha();
    let g1 = k1.norm_sqr();
    let a2 = alpha.norm_sqr();
    let c = |v: f64| Complex64::new(v, 0.0);
    let cs_conj = cs.map(|v| v.conj());
    let two_re = &cs + &cs_conj;
    let zero = CMatrix::zeros(n, n);

    let x = blocks(&(&cs + &cs_conj * c(a2)), &(&two_re * alpha), &(&two_re * alpha.conj()), &(&cs * c(a2) + &cs_conj));
    let d_k1 = &x * k1.conj();
    let d_k1c = &x * k1;
    let d_a = blocks(&(&cs_conj * (alpha.conj() * g1)), &(&two_re * c(g1)), &zero, &(&cs * (alpha.conj() * g1)));
    let d_ac = blocks(&(&cs_conj * (alpha * g1)), &zero, &(&two_re * c(g1)), &(&cs * (alpha * g1)));

    let eig = cov.symmetric_eigen();
    let l_max = eig.eigenvalues.max();
    if !(l_max > 0.0 && l_max.is_finite()) {
        return Err(Error::Numerical("received covariance is zero or not finite".into()));
    }
    let tol = RANK_TOL * l_max;
    let l_min = eig.eigenvalues.min();
    if l_min < -tol {
        return Err(Error::Numerical(format!("covariance is not positive semidefinite (min eigenvalue {l_min:e})")));
    }
    let range: Vec<usize> = (0..2 * n).filter(|&i| eig.eigenvalues[i] > tol).collect();
    let v = &eig.eigenvectors;
    let mut pinv = CMatrix::zeros(2 * n, 2 * n);
    for &k in &range {
        let col = v.column(k);
        pinv += (col * col.adjoint()) * c(1.0 / eig.eigenvalues[k]);
    }

    if range.len() < 2 * n {
        let mut p0 = CMatrix::identity(2 * n, 2 * n);
        for &k in &range {
            let col = v.column(k);
            p0 -= col * col.adjoint();
        }
        let leaks = |d: &CMatrix| ((&p0 * d).norm() + (d * &p0).norm()) > LEAK_TOL * d.norm().max(f64::MIN_POSITIVE);
        if leaks(&d_a) {
            return Ok(Fim2x2 { j: [[Complex64::new(0.0, 0.0); 2]; 2], unbounded: true, path: FimPath::Full });
        }
        if leaks(&d_k1) {
            return Err(Error::SingularCovariance { rcond: l_min.max(0.0) / l_max });
        }
    }

    let a_k1 = &pinv * &d_k1;
    let a_k1c = &pinv * &d_k1c;
    let a_a = &pinv * &d_a;
    let a_ac = &pinv * &d_ac;
    let j = [
        [trace_prod(&a_k1, &a_k1c) * 0.5, trace_prod(&a_k1, &a_ac) * 0.5],
        [trace_prod(&a_a, &a_k1c) * 0.5, trace_prod(&a_a, &a_ac) * 0.5],
    ];
    Ok(Fim2x2 { j, unbounded: false, path: FimPath::Full })
}
