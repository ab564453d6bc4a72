//! Small-dimension dense linear algebra, metric orthonormalization and
//! central finite-difference kernels shared by the geometric modules.
//!
//! Everything here works on chart dimensions `n <= 4` with fixed-capacity
//! storage; there is no heap traffic in the hot evaluation paths.

use alloc::vec::Vec;

use crate::error::Error;
use crate::math;
use crate::Result;

/// Largest supported chart dimension.
pub const MAX_DIM: usize = 4;

/// Intermediate Gram-Schmidt norms below this signal rank deficiency.
const GS_NORM_FLOOR: f64 = 1e-10;

/// Dense real vector of dimension `n <= 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vector {
    dim: usize,
    data: [f64; MAX_DIM],
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM, "vector dim out of range");
        Vector { dim, data: [0.0; MAX_DIM] }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut v = Vector::zeros(values.len());
        v.data[..values.len()].copy_from_slice(values);
        v
    }

    /// Standard basis vector `e_k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Vector::zeros(dim);
        v.data[k] = 1.0;
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for k in 0..self.dim {
            out.data[k] += other.data[k];
        }
        out
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for k in 0..self.dim {
            out.data[k] -= other.data[k];
        }
        out
    }

    pub fn scale(&self, s: f64) -> Vector {
        let mut out = *self;
        for k in 0..self.dim {
            out.data[k] *= s;
        }
        out
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for k in 0..self.dim {
            out.data[k] += s * other.data[k];
        }
        out
    }

    /// Shift the `k`-th coordinate by `delta`.
    pub fn shifted(&self, k: usize, delta: f64) -> Vector {
        let mut out = *self;
        out.data[k] += delta;
        out
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0;
        for k in 0..self.dim {
            m = f64::max(m, math::abs(self.data[k]));
        }
        m
    }
}

impl core::ops::Index<usize> for Vector {
    type Output = f64;
    #[inline]
    fn index(&self, k: usize) -> &f64 {
        debug_assert!(k < self.dim);
        &self.data[k]
    }
}

impl core::ops::IndexMut<usize> for Vector {
    #[inline]
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        debug_assert!(k < self.dim);
        &mut self.data[k]
    }
}

/// Dense real `n x n` matrix, `n <= 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: [[f64; MAX_DIM]; MAX_DIM],
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM, "matrix dim out of range");
        Matrix { dim, data: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for k in 0..dim {
            m.data[k][k] = 1.0;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len());
        for (k, &v) in values.iter().enumerate() {
            m.data[k][k] = v;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        debug_assert_eq!(self.dim, v.dim());
        let mut out = Vector::zeros(self.dim);
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..self.dim {
                acc += self.data[i][j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn mul_mat(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = Matrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut acc = 0.0;
                for k in 0..self.dim {
                    acc += self.data[i][k] * other.data[k][j];
                }
                out.data[i][j] = acc;
            }
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[i][j] -= other.data[i][j];
            }
        }
        out
    }

    /// Bilinear pairing `x^T (self) y`.
    pub fn inner(&self, x: &Vector, y: &Vector) -> f64 {
        debug_assert_eq!(self.dim, x.dim());
        debug_assert_eq!(self.dim, y.dim());
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += x[i] * self.data[i][j] * y[j];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = f64::max(m, math::abs(self.data[i][j]));
            }
        }
        m
    }

    pub fn determinant(&self) -> f64 {
        match self.dim {
            1 => self.data[0][0],
            2 => self.data[0][0] * self.data[1][1] - self.data[0][1] * self.data[1][0],
            3 => {
                let d = &self.data;
                d[0][0] * (d[1][1] * d[2][2] - d[1][2] * d[2][1])
                    - d[0][1] * (d[1][0] * d[2][2] - d[1][2] * d[2][0])
                    + d[0][2] * (d[1][0] * d[2][1] - d[1][1] * d[2][0])
            }
            4 => {
                // Laplace expansion along the first row.
                let mut det = 0.0;
                for j in 0..4 {
                    let minor = self.minor(0, j);
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    det += sign * self.data[0][j] * minor.determinant();
                }
                det
            }
            _ => unreachable!(),
        }
    }

    fn minor(&self, row: usize, col: usize) -> Matrix {
        let mut m = Matrix::zeros(self.dim - 1);
        let mut r = 0;
        for i in 0..self.dim {
            if i == row {
                continue;
            }
            let mut c = 0;
            for j in 0..self.dim {
                if j == col {
                    continue;
                }
                m.data[r][c] = self.data[i][j];
                c += 1;
            }
            r += 1;
        }
        m
    }

    /// Lower-triangular Cholesky factor; fails with [`Error::NotSpd`] when the
    /// matrix is asymmetric or has a non-positive pivot.
    pub fn cholesky(&self) -> Result<Matrix> {
        let scale = 1.0 + self.max_abs();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                if math::abs(self.data[i][j] - self.data[j][i]) > 1e-9 * scale {
                    return Err(Error::NotSpd);
                }
            }
        }
        let mut l = Matrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..=i {
                let mut acc = self.data[i][j];
                for k in 0..j {
                    acc -= l.data[i][k] * l.data[j][k];
                }
                if i == j {
                    if !(acc > 0.0) || !acc.is_finite() {
                        return Err(Error::NotSpd);
                    }
                    l.data[i][j] = math::sqrt(acc);
                } else {
                    l.data[i][j] = acc / l.data[j][j];
                }
            }
        }
        Ok(l)
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.dim && j < self.dim);
        &self.data[i][j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.dim && j < self.dim);
        &mut self.data[i][j]
    }
}

/// Dense rank-3 array holding connection coefficients, indexed `[(k, i, j)]`
/// for the coefficient of `∂_k` in `∇_{∂_i} ∂_j`. Coefficient data of a
/// torsion-free connection is symmetric in `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Array3 {
    dim: usize,
    data: [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM],
}

impl Array3 {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM, "array dim out of range");
        Array3 { dim, data: [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γ(x, y)^k = Γ^k_{ij} x^i y^j` as an ambient vector.
    pub fn contract(&self, x: &Vector, y: &Vector) -> Vector {
        debug_assert_eq!(self.dim, x.dim());
        debug_assert_eq!(self.dim, y.dim());
        let mut out = Vector::zeros(self.dim);
        for k in 0..self.dim {
            let mut acc = 0.0;
            for i in 0..self.dim {
                for j in 0..self.dim {
                    acc += self.data[k][i][j] * x[i] * y[j];
                }
            }
            out[k] = acc;
        }
        out
    }

    /// Componentwise `a * self + b * other`.
    pub fn linear_comb(&self, a: f64, other: &Array3, b: f64) -> Array3 {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = Array3::zeros(self.dim);
        for k in 0..self.dim {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    out.data[k][i][j] = a * self.data[k][i][j] + b * other.data[k][i][j];
                }
            }
        }
        out
    }

    /// Largest deviation from lower-index symmetry `Γ^k_{ij} = Γ^k_{ji}`.
    pub fn torsion_max(&self) -> f64 {
        let mut m = 0.0;
        for k in 0..self.dim {
            for i in 0..self.dim {
                for j in (i + 1)..self.dim {
                    m = f64::max(m, math::abs(self.data[k][i][j] - self.data[k][j][i]));
                }
            }
        }
        m
    }
}

impl core::ops::Index<(usize, usize, usize)> for Array3 {
    type Output = f64;
    #[inline]
    fn index(&self, (k, i, j): (usize, usize, usize)) -> &f64 {
        debug_assert!(k < self.dim && i < self.dim && j < self.dim);
        &self.data[k][i][j]
    }
}

impl core::ops::IndexMut<(usize, usize, usize)> for Array3 {
    #[inline]
    fn index_mut(&mut self, (k, i, j): (usize, usize, usize)) -> &mut f64 {
        debug_assert!(k < self.dim && i < self.dim && j < self.dim);
        &mut self.data[k][i][j]
    }
}

/// Central finite-difference scheme (second order). The step lives in chart
/// coordinate units; the default balances truncation against rounding for
/// the fixture scales used here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdScheme {
    step: f64,
}

impl FdScheme {
    pub const DEFAULT_STEP: f64 = 1e-4;

    /// Step used when a finite-difference pass differentiates quantities that
    /// are themselves finite-difference results (induced Christoffel fields,
    /// form fields, frame fields). The wider step keeps the rounding noise of
    /// the inner pass from being amplified by the outer divided difference.
    pub const ORACLE_STEP: f64 = 1e-3;

    pub fn new(step: f64) -> Self {
        assert!(step > 0.0 && step.is_finite(), "fd step must be positive");
        FdScheme { step }
    }

    /// Scheme for derivatives of fields that were produced by finite
    /// differences themselves.
    pub fn oracle() -> Self {
        FdScheme::new(Self::ORACLE_STEP)
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.step
    }
}

impl Default for FdScheme {
    fn default() -> Self {
        FdScheme::new(Self::DEFAULT_STEP)
    }
}

/// Values a finite-difference kernel can act on.
pub trait FieldValue: Sized {
    /// `(a - b) * s`, the divided-difference combination.
    fn diff_scale(a: &Self, b: &Self, s: f64) -> Self;
}

impl FieldValue for f64 {
    fn diff_scale(a: &Self, b: &Self, s: f64) -> f64 {
        (a - b) * s
    }
}

impl FieldValue for Vector {
    fn diff_scale(a: &Self, b: &Self, s: f64) -> Vector {
        a.sub(b).scale(s)
    }
}

impl FieldValue for Matrix {
    fn diff_scale(a: &Self, b: &Self, s: f64) -> Matrix {
        let mut out = a.sub(b);
        for i in 0..out.dim {
            for j in 0..out.dim {
                out.data[i][j] *= s;
            }
        }
        out
    }
}

impl FieldValue for Array3 {
    fn diff_scale(a: &Self, b: &Self, s: f64) -> Array3 {
        a.linear_comb(s, b, -s)
    }
}

/// Central difference `(f(p + h e_k) - f(p - h e_k)) / (2h)` of a scalar or
/// array field over the chart; truncation error `O(h^2)`. Errors from the
/// field (chart boundary, SPD failures) propagate.
pub fn central_diff<T, F>(field: F, point: &Vector, direction: usize, scheme: &FdScheme) -> Result<T>
where
    T: FieldValue,
    F: Fn(&Vector) -> Result<T>,
{
    let h = scheme.step();
    let plus = field(&point.shifted(direction, h))?;
    let minus = field(&point.shifted(direction, -h))?;
    Ok(T::diff_scale(&plus, &minus, 1.0 / (2.0 * h)))
}

/// Gram-Schmidt orthonormalization with respect to the inner product induced
/// by `metric`. Inputs are processed in the given order and each output is a
/// positive multiple of its input after projection, so the produced frame is
/// reproducible. Fails with [`Error::DegenerateInput`] when an intermediate
/// norm drops below the rank-deficiency floor.
pub fn gram_schmidt(vectors: &[Vector], metric: &Matrix) -> Result<Vec<Vector>> {
    let mut out: Vec<Vector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = *v;
        for e in &out {
            let c = metric.inner(&w, e);
            w = w.axpy(-c, e);
        }
        let norm_sq = metric.inner(&w, &w);
        if !(norm_sq > 0.0) {
            return Err(Error::DegenerateInput);
        }
        let norm = math::sqrt(norm_sq);
        if norm < GS_NORM_FLOOR {
            return Err(Error::DegenerateInput);
        }
        out.push(w.scale(1.0 / norm));
    }
    Ok(out)
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
pub fn invert_spd(metric: &Matrix) -> Result<Matrix> {
    let l = metric.cholesky()?;
    let n = metric.dim;
    // Solve L L^T x = e_k for each basis column.
    let mut inv = Matrix::zeros(n);
    for col in 0..n {
        let mut y = [0.0; MAX_DIM];
        for i in 0..n {
            let mut acc = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                acc -= l.data[i][k] * y[k];
            }
            y[i] = acc / l.data[i][i];
        }
        let mut x = [0.0; MAX_DIM];
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in (i + 1)..n {
                acc -= l.data[k][i] * x[k];
            }
            x[i] = acc / l.data[i][i];
        }
        for i in 0..n {
            inv.data[i][col] = x[i];
        }
    }
    // Symmetrize; the factor-based solve leaves tiny asymmetry.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (inv.data[i][j] + inv.data[j][i]);
            inv.data[i][j] = avg;
            inv.data[j][i] = avg;
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vec2(x: f64, y: f64) -> Vector {
        Vector::from_slice(&[x, y])
    }

    #[test]
    fn gram_schmidt_identity_metric_keeps_orthonormal_input() {
        let out = gram_schmidt(&[vec2(1.0, 0.0), vec2(0.0, 1.0)], &Matrix::identity(2)).unwrap();
        assert_eq!(out[0], vec2(1.0, 0.0));
        assert_eq!(out[1], vec2(0.0, 1.0));
    }

    #[test]
    fn gram_schmidt_normalizes_and_projects() {
        let out = gram_schmidt(&[vec2(2.0, 0.0), vec2(1.0, 1.0)], &Matrix::identity(2)).unwrap();
        assert_eq!(out[0], vec2(1.0, 0.0));
        assert!((out[1][0]).abs() < 1e-15);
        assert!((out[1][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gram_schmidt_respects_metric() {
        // g(e1, e1) = 4 * (1/2)^2 = 1.
        let metric = Matrix::diagonal(&[4.0, 1.0]);
        let out = gram_schmidt(&[vec2(1.0, 0.0)], &metric).unwrap();
        assert!((out[0][0] - 0.5).abs() < 1e-15);
        assert_eq!(out[0][1], 0.0);
    }

    #[test]
    fn gram_schmidt_rejects_dependent_input() {
        let err = gram_schmidt(&[vec2(1.0, 1.0), vec2(2.0, 2.0)], &Matrix::identity(2)).unwrap_err();
        assert_eq!(err, Error::DegenerateInput);
    }

    #[test]
    fn central_diff_quadratic() {
        let scheme = FdScheme::default();
        let f = |p: &Vector| -> crate::Result<f64> { Ok(p[0] * p[0]) };
        let d = central_diff(f, &Vector::from_slice(&[1.0]), 0, &scheme).unwrap();
        assert!((d - 2.0).abs() < 1e-10);
    }

    #[test]
    fn central_diff_constant_is_exact_zero() {
        let scheme = FdScheme::default();
        let f = |_: &Vector| -> crate::Result<f64> { Ok(7.25) };
        let d = central_diff(f, &Vector::from_slice(&[0.3]), 0, &scheme).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn central_diff_second_order_convergence() {
        // sin'(0) = 1; halving the step must cut the error by >= 3.5x.
        let f = |p: &Vector| -> crate::Result<f64> { Ok(math::sin(p[0])) };
        let p = Vector::from_slice(&[0.0]);
        let coarse = central_diff(f, &p, 0, &FdScheme::new(2e-4)).unwrap();
        let fine = central_diff(f, &p, 0, &FdScheme::new(1e-4)).unwrap();
        let e_coarse = (coarse - 1.0).abs();
        let e_fine = (fine - 1.0).abs();
        assert!(e_coarse / e_fine >= 3.5, "ratio {}", e_coarse / e_fine);
    }

    #[test]
    fn invert_spd_diagonal() {
        let inv = invert_spd(&Matrix::diagonal(&[4.0, 1.0, 1.0])).unwrap();
        assert!((inv[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((inv[(1, 1)] - 1.0).abs() < 1e-15);
        assert!((inv[(2, 2)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invert_spd_identity() {
        let inv = invert_spd(&Matrix::identity(3)).unwrap();
        assert_eq!(inv, Matrix::identity(3));
    }

    #[test]
    fn invert_spd_conformal_upper_half_space_metric() {
        // (y3)^-2 * delta at y3 = 2 is diag(1/4, 1/4, 1/4).
        let inv = invert_spd(&Matrix::diagonal(&[0.25, 0.25, 0.25])).unwrap();
        for k in 0..3 {
            assert!((inv[(k, k)] - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invert_spd_rejects_indefinite() {
        let m = Matrix::diagonal(&[1.0, -1.0]);
        assert_eq!(invert_spd(&m).unwrap_err(), Error::NotSpd);
    }

    #[test]
    fn invert_spd_rejects_asymmetric() {
        let mut m = Matrix::identity(2);
        m[(0, 1)] = 0.5;
        assert_eq!(invert_spd(&m).unwrap_err(), Error::NotSpd);
    }

    fn spd_strategy(n: usize) -> impl Strategy<Value = Matrix> {
        prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |entries| {
            let mut a = Matrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = entries[i * n + j];
                }
            }
            // A^T A + I/2 is SPD with a modest condition number.
            let mut spd = Matrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    let mut acc = if i == j { 0.5 } else { 0.0 };
                    for k in 0..n {
                        acc += a[(k, i)] * a[(k, j)];
                    }
                    spd[(i, j)] = acc;
                }
            }
            spd
        })
    }

    fn any_spd() -> impl Strategy<Value = Matrix> {
        (1usize..=4).prop_flat_map(spd_strategy)
    }

    fn spd_with_vectors() -> impl Strategy<Value = (Matrix, Vec<Vector>)> {
        (2usize..=4).prop_flat_map(|n| {
            (spd_strategy(n), prop::collection::vec(-1.0f64..1.0, n * n)).prop_map(
                move |(metric, raw)| {
                    let mut vectors = Vec::new();
                    for i in 0..n {
                        let mut v = Vector::zeros(n);
                        for j in 0..n {
                            // Diagonal dominance keeps the set independent.
                            v[j] = raw[i * n + j] + if i == j { 2.0 } else { 0.0 };
                        }
                        vectors.push(v);
                    }
                    (metric, vectors)
                },
            )
        })
    }

    proptest! {
        #[test]
        fn prop_invert_spd_product_is_identity(m in any_spd()) {
            let inv = invert_spd(&m).unwrap();
            let prod = m.mul_mat(&inv);
            let resid = prod.sub(&Matrix::identity(m.dim())).max_abs();
            prop_assert!(resid < 1e-12, "residual {resid}");
        }

        #[test]
        fn prop_invert_spd_is_involutive(m in any_spd()) {
            let twice = invert_spd(&invert_spd(&m).unwrap()).unwrap();
            let resid = twice.sub(&m).max_abs();
            prop_assert!(resid < 1e-10, "residual {resid}");
        }

        #[test]
        fn prop_gram_schmidt_outputs_orthonormal((metric, vectors) in spd_with_vectors()) {
            let n = metric.dim();
            let frame = gram_schmidt(&vectors, &metric).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    let got = metric.inner(&frame[i], &frame[j]);
                    prop_assert!((got - want).abs() <= 1e-10);
                }
            }
            // First output is a positive multiple of the first input.
            let c = metric.inner(&vectors[0], &frame[0]);
            prop_assert!(c > 0.0);
        }
    }
}
