//! Economy SVD for tall-and-skinny matrices.
//!
//! The input is first reduced by a thin Householder QR (`M = QR`, `R` is
//! `r × r` with `r = min(m, n)`), then `R` is diagonalized with one-sided
//! Jacobi rotations. Wide inputs are handled through the transpose. Video
//! matrices have far fewer frames than pixels, so all the iterative work
//! happens on the small factor.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::SolverError;

#[derive(Clone, Debug)]
pub struct SvdResult {
    /// `m × r`, orthonormal columns.
    pub u: Array2<f64>,
    /// Nonincreasing, nonnegative.
    pub s: Array1<f64>,
    /// `n × r`, orthonormal columns.
    pub v: Array2<f64>,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Array2<f64> {
        scaled_product(&self.u, self.s.as_slice().unwrap(), &self.v)
    }
}

/// `U · diag(s) · Vᵀ` using only the first `s.len()` columns of `U` and `V`.
pub(crate) fn scaled_product(u: &Array2<f64>, s: &[f64], v: &Array2<f64>) -> Array2<f64> {
    let k = s.len();
    let mut us = u.slice(ndarray::s![.., ..k]).to_owned();
    for (mut col, &sv) in us.axis_iter_mut(Axis(1)).zip(s) {
        col *= sv;
    }
    us.dot(&v.slice(ndarray::s![.., ..k]).t())
}

pub fn svd_economy(m: &Array2<f64>) -> Result<SvdResult, SolverError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFinite);
    }
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Ok(SvdResult {
            u: Array2::zeros((rows, 0)),
            s: Array1::zeros(0),
            v: Array2::zeros((cols, 0)),
        });
    }
    if rows >= cols {
        Ok(tall_svd(m.view()))
    } else {
        let t = tall_svd(m.t());
        Ok(SvdResult {
            u: t.v,
            s: t.s,
            v: t.u,
        })
    }
}

/// Column-major dense matrix used by the kernels below.
struct ColMajor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ColMajor {
    fn from_view(m: ArrayView2<f64>) -> Self {
        let (rows, cols) = m.dim();
        let mut data = Vec::with_capacity(rows * cols);
        for col in m.axis_iter(Axis(1)) {
            data.extend(col.iter());
        }
        Self { rows, cols, data }
    }

    fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    #[inline]
    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn two_cols_mut(&mut self, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
        debug_assert!(p < q);
        let r = self.rows;
        let (head, tail) = self.data.split_at_mut(q * r);
        (&mut head[p * r..(p + 1) * r], &mut tail[..r])
    }

    fn to_array(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.cols, self.rows), self.data.clone())
            .expect("shape matches buffer")
            .reversed_axes()
            .as_standard_layout()
            .into_owned()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Thin Householder QR of a tall `m × n` matrix. Returns `(Q, R)` with `Q`
/// `m × n` and `R` `n × n` upper triangular.
fn householder_qr(a: ArrayView2<f64>) -> (ColMajor, ColMajor) {
    let mut w = ColMajor::from_view(a);
    let (m, n) = (w.rows, w.cols);
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut r = ColMajor {
        rows: n,
        cols: n,
        data: vec![0.0; n * n],
    };
    for k in 0..n {
        let x = &w.col(k)[k..];
        let norm = dot(x, x).sqrt();
        let mut v = x.to_vec();
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        if norm == 0.0 || vnorm2 == 0.0 {
            // Column already zero below the diagonal; identity reflector.
            reflectors.push(Vec::new());
        } else {
            for j in k..n {
                let col = &mut w.col_mut(j)[k..];
                let f = 2.0 * dot(&v, col) / vnorm2;
                for (c, vi) in col.iter_mut().zip(&v) {
                    *c -= f * vi;
                }
            }
            let inv = 1.0 / vnorm2.sqrt();
            v.iter_mut().for_each(|vi| *vi *= inv);
            reflectors.push(v);
        }
        for i in 0..=k {
            r.data[k * n + i] = w.col(k)[i];
        }
    }
    // Q = H_0 H_1 … H_{n-1} applied to the first n columns of the identity.
    let mut q = ColMajor {
        rows: m,
        cols: n,
        data: vec![0.0; m * n],
    };
    for j in 0..n {
        q.col_mut(j)[j] = 1.0;
    }
    for (k, v) in reflectors.iter().enumerate().rev() {
        if v.is_empty() {
            continue;
        }
        for j in k..n {
            let col = &mut q.col_mut(j)[k..];
            let f = 2.0 * dot(v, col);
            for (c, vi) in col.iter_mut().zip(v) {
                *c -= f * vi;
            }
        }
    }
    (q, r)
}

/// One-sided Jacobi SVD of a square matrix: returns `(U, s, V)` unsorted,
/// where the columns of `U` are the normalized columns of `AV`.
fn jacobi(mut a: ColMajor) -> (ColMajor, Vec<f64>, ColMajor) {
    let n = a.cols;
    let mut v = ColMajor::identity(n);
    const MAX_SWEEPS: usize = 80;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (cp, cq) = a.two_cols_mut(p, q);
                let alpha = dot(cp, cp);
                let beta = dot(cq, cq);
                let gamma = dot(cp, cq);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(cp, cq, c, s);
                let (vp, vq) = v.two_cols_mut(p, q);
                rotate(vp, vq, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sv: Vec<f64> = (0..n).map(|j| dot(a.col(j), a.col(j)).sqrt()).collect();
    let scale = sv.iter().cloned().fold(0.0, f64::max);
    let mut u = a;
    let mut missing = Vec::new();
    for (j, &s) in sv.iter().enumerate() {
        if s > scale * f64::EPSILON * n as f64 && s > 0.0 {
            u.col_mut(j).iter_mut().for_each(|x| *x /= s);
        } else {
            missing.push(j);
        }
    }
    complete_basis(&mut u, &missing);
    let sv = sv
        .iter()
        .enumerate()
        .map(|(j, &s)| if missing.contains(&j) { 0.0 } else { s })
        .collect();
    (u, sv, v)
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let (a, b) = (*xi, *yi);
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

/// Replaces the columns listed in `missing` (numerically zero singular
/// values) with unit vectors orthogonal to every other column.
fn complete_basis(u: &mut ColMajor, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let n = u.rows;
    let mut basis: Vec<Vec<f64>> = (0..u.cols)
        .filter(|j| !missing.contains(j))
        .map(|j| u.col(j).to_vec())
        .collect();
    let mut candidate = 0;
    for &j in missing {
        loop {
            assert!(candidate < n, "basis completion exhausted candidates");
            let mut e = vec![0.0; n];
            e[candidate] = 1.0;
            candidate += 1;
            // Two Gram-Schmidt passes for orthogonality to working precision.
            for _ in 0..2 {
                for b in &basis {
                    let d = dot(&e, b);
                    e.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 0.5 {
                e.iter_mut().for_each(|x| *x /= norm);
                u.col_mut(j).copy_from_slice(&e);
                basis.push(e);
                break;
            }
        }
    }
}

fn tall_svd(m: ArrayView2<f64>) -> SvdResult {
    let n = m.ncols();
    let (q, r) = householder_qr(m);
    let (ur, s, vr) = jacobi(r);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));

    let q = q.to_array();
    let ur = ur.to_array();
    let vr = vr.to_array();
    let ur_sorted = ur.select(Axis(1), &order);
    let v = vr.select(Axis(1), &order);
    let s = order.iter().map(|&j| s[j]).collect();
    SvdResult {
        u: q.dot(&ur_sorted),
        s,
        v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::random_matrix;
    use ndarray::array;

    fn check_invariants(m: &Array2<f64>, svd: &SvdResult) {
        let scale = 1f64.max(m.iter().map(|x| x * x).sum::<f64>().sqrt());
        let err = (&svd.reconstruct() - m)
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-9 * scale, "reconstruction error {err}");
        let r = svd.s.len();
        assert_eq!(r, m.nrows().min(m.ncols()));
        for w in svd.s.as_slice().unwrap().windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(svd.s.iter().all(|&s| s >= 0.0));
        for basis in [&svd.u, &svd.v] {
            let g = basis.t().dot(basis);
            for ((i, j), &x) in g.indexed_iter() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((x - target).abs() <= 1e-9, "gram[{i},{j}] = {x}");
            }
        }
    }

    #[test]
    fn identity_and_diagonal() {
        let eye = Array2::<f64>::eye(3);
        let svd = svd_economy(&eye).unwrap();
        assert!(svd.s.iter().all(|&s| (s - 1.0).abs() < 1e-14));
        check_invariants(&eye, &svd);

        let d = array![[3.0, 0.0], [0.0, 1.0]];
        let svd = svd_economy(&d).unwrap();
        assert!((svd.s[0] - 3.0).abs() < 1e-14 && (svd.s[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_shapes() {
        for (seed, (m, n)) in [(20, 10), (10, 20), (200, 50), (7, 7), (1, 5), (5, 1)]
            .into_iter()
            .enumerate()
        {
            let a = random_matrix(m, n, seed as u64);
            check_invariants(&a, &svd_economy(&a).unwrap());
        }
    }

    #[test]
    fn rank_deficient_keeps_orthonormal_basis() {
        let a = random_matrix(30, 1, 3);
        let b = random_matrix(1, 6, 4);
        let low = a.dot(&b);
        let svd = svd_economy(&low).unwrap();
        check_invariants(&low, &svd);
        assert!(svd.s[1] < 1e-12 * svd.s[0]);

        let zero = Array2::<f64>::zeros((8, 4));
        let svd = svd_economy(&zero).unwrap();
        check_invariants(&zero, &svd);
        assert!(svd.s.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn rejects_non_finite() {
        let m = array![[1.0, f64::NAN]];
        assert!(matches!(svd_economy(&m), Err(SolverError::NonFinite)));
    }
}
