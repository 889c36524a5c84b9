//! Small dense linear algebra on top of nalgebra, sized for n ≤ 4.

use nalgebra::{Complex, DMatrix, DVector};

pub fn det(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant()
}

/// Product of row norms: Hadamard's bound on |det m|. Used to make
/// "determinant is small" tests scale-free.
pub fn det_scale(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm()).product()
}

pub fn inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().try_inverse()
}

/// All eigenvalues of a general real matrix (real Schur form).
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    if m.nrows() == 1 {
        return vec![Complex::new(m[(0, 0)], 0.0)];
    }
    m.complex_eigenvalues().iter().copied().collect()
}

/// Eigenvalues of a symmetric matrix, ascending. Only the lower triangle is read.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Thin SVD with singular values in descending order.
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd(m: &DMatrix<f64>) -> SortedSvd {
    let n = m.nrows();
    let s = m.clone().svd(true, true);
    let u = s.u.expect("requested U");
    let v_t = s.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..s.singular_values.len()).collect();
    order.sort_by(|&a, &b| s.singular_values[b].total_cmp(&s.singular_values[a]));
    let mut su = DMatrix::zeros(n, order.len());
    let mut sv = DMatrix::zeros(m.ncols(), order.len());
    let mut sigma = Vec::with_capacity(order.len());
    for (dst, &src) in order.iter().enumerate() {
        su.set_column(dst, &u.column(src));
        sv.set_column(dst, &v_t.row(src).transpose());
        sigma.push(s.singular_values[src]);
    }
    SortedSvd { u: su, sigma, v: sv }
}

/// Cofactor transpose: `adj(m) m = m adj(m) = det(m) I`.
pub fn adjugate(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    let mut adj = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let minor = m.clone().remove_row(i).remove_column(j);
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            adj[(j, i)] = sign * det(&minor);
        }
    }
    adj
}

/// Coefficients `c_0..c_{n-1}` of `det(λI − b) = λ^n + Σ c_k λ^k`
/// (Faddeev–LeVerrier recursion).
pub fn faddeev_leverrier(b: &DMatrix<f64>) -> Vec<f64> {
    let n = b.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut mk = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        mk = b * &mk + &id * c[n - k + 1];
        let bm = b * &mk;
        c[n - k] = -bm.trace() / k as f64;
    }
    c.truncate(n);
    c
}

/// Horner evaluation of a monic polynomial `t^n + Σ c_k t^k`.
pub fn eval_monic(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(1.0, |acc, &a| acc * t + a)
}

/// Derivative of a monic polynomial at `t`.
pub fn eval_monic_derivative(c: &[f64], t: f64) -> f64 {
    let n = c.len();
    let mut acc = n as f64;
    for k in (1..n).rev() {
        acc = acc * t + k as f64 * c[k];
    }
    acc
}

pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, data)
    }

    #[test]
    fn charpoly_of_2x2() {
        // det(λI − B) for B = [[1,-2],[-1,1]] is λ² − 2λ − 1.
        let c = faddeev_leverrier(&m(2, &[1.0, -2.0, -1.0, 1.0]));
        assert!((c[0] + 1.0).abs() < 1e-15 && (c[1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn adjugate_identity() {
        let a = m(3, &[2.0, -1.0, 0.5, 0.3, 1.0, 4.0, -2.0, 0.0, 1.5]);
        let prod = &a * adjugate(&a);
        let d = det(&a);
        assert!((prod - DMatrix::identity(3, 3) * d).abs().max() < 1e-12);
    }

    #[test]
    fn svd_is_sorted() {
        let s = svd(&m(2, &[0.0, 0.0, 0.0, 3.0]));
        assert_eq!(s.sigma[0], 3.0);
        assert_eq!(s.sigma[1], 0.0);
        assert!(s.v[(0, 1)].abs() == 1.0);
    }

    #[test]
    fn rotation_has_complex_spectrum() {
        let ev = eigenvalues(&m(2, &[0.0, -1.0, 1.0, 0.0]));
        assert!(ev.iter().all(|z| (z.im.abs() - 1.0).abs() < 1e-14 && z.re.abs() < 1e-14));
    }

    #[test]
    fn monic_horner() {
        let c = [-1.0, -2.0];
        assert_eq!(eval_monic(&c, 3.0), 2.0);
        assert_eq!(eval_monic_derivative(&c, 3.0), 4.0);
        assert_eq!(eval_monic(&[], 5.0), 1.0);
    }
}
