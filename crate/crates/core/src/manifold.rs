//! Charted statistical manifolds: metric plus a pair of torsion-free dual
//! connections, with curvature evaluation and structure validation.
//!
//! A chart is a box-free predicate over chart coordinates; metric and
//! connection coefficients are closed-form coefficient fields supplied by
//! the caller (usually the fixture catalogue). Curvature tensors are always
//! obtained by central differencing of the coefficient fields, never
//! symbolically.
//!
//! Sign convention used throughout the crate:
//! `R(X, Y)Z = ∇_X ∇_Y Z − ∇_Y ∇_X Z − ∇_{[X,Y]} Z`, in coordinates
//! `R(∂_i, ∂_j)∂_k = R^l_{kij} ∂_l` with
//! `R^l_{kij} = ∂_i Γ^l_{jk} − ∂_j Γ^l_{ik} + Γ^l_{im} Γ^m_{jk} − Γ^l_{jm} Γ^m_{ik}`.
//! The classical sectional curvature of a plane `(X, Y)` is then
//! `g(R(X, Y)Y, X) / (|X|²|Y|² − g(X,Y)²)`, which gives the round sphere a
//! positive value and the hyperbolic upper half-space −1.

use alloc::boxed::Box;

use crate::error::Error;
use crate::numerics::{central_diff, invert_spd, Array3, FdScheme, Matrix, Vector, MAX_DIM};
use crate::Result;

pub type ChartFn = dyn Fn(&Vector) -> bool + Send + Sync;
pub type MetricFn = dyn Fn(&Vector) -> Matrix + Send + Sync;
pub type ConnectionFn = dyn Fn(&Vector) -> Array3 + Send + Sync;

/// A charted statistical manifold: metric field and primal connection field
/// over a chart predicate. The dual connection is derived algebraically from
/// the Levi-Civita connection; the latter comes from a closed-form field when
/// one is supplied and from finite differences of the metric otherwise.
pub struct StatisticalManifold {
    dim: usize,
    chart: Box<ChartFn>,
    metric: Box<MetricFn>,
    primal: Box<ConnectionFn>,
    levi_civita: Option<Box<ConnectionFn>>,
    claimed_c: Option<f64>,
}

impl core::fmt::Debug for StatisticalManifold {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("StatisticalManifold")
            .field("dim", &self.dim)
            .field("claimed_c", &self.claimed_c)
            .field("closed_form_levi_civita", &self.levi_civita.is_some())
            .finish()
    }
}

impl StatisticalManifold {
    pub fn new(
        dim: usize,
        chart: Box<ChartFn>,
        metric: Box<MetricFn>,
        primal: Box<ConnectionFn>,
    ) -> Self {
        assert!((2..=MAX_DIM).contains(&dim), "ambient dim out of range");
        StatisticalManifold { dim, chart, metric, primal, levi_civita: None, claimed_c: None }
    }

    /// Attach a closed-form Levi-Civita coefficient field. Without it the
    /// Levi-Civita connection is differenced from the metric on every
    /// evaluation, which carries an `O(step²)` error into everything built
    /// on top of it.
    pub fn with_levi_civita(mut self, lc: Box<ConnectionFn>) -> Self {
        self.levi_civita = Some(lc);
        self
    }

    /// Record the constant-curvature claim to be validated against Eq-style
    /// residuals before the manifold is used.
    pub fn with_claimed_c(mut self, c: f64) -> Self {
        self.claimed_c = Some(c);
        self
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn claimed_c(&self) -> Option<f64> {
        self.claimed_c
    }

    #[inline]
    pub fn contains(&self, p: &Vector) -> bool {
        (self.chart)(p)
    }

    /// Metric at `p`; errors when `p` is outside the chart.
    pub fn metric_at(&self, p: &Vector) -> Result<Matrix> {
        if !self.contains(p) {
            return Err(Error::ChartBoundary);
        }
        Ok((self.metric)(p))
    }

    /// Primal connection coefficients at `p`.
    pub fn primal_at(&self, p: &Vector) -> Result<Array3> {
        if !self.contains(p) {
            return Err(Error::ChartBoundary);
        }
        Ok((self.primal)(p))
    }

    /// Levi-Civita coefficients at `p`: closed form when available, central
    /// differences of the metric otherwise.
    pub fn levi_civita_at(&self, p: &Vector, scheme: &FdScheme) -> Result<Array3> {
        match &self.levi_civita {
            Some(lc) => {
                if !self.contains(p) {
                    return Err(Error::ChartBoundary);
                }
                Ok(lc(p))
            }
            None => levi_civita(self, p, scheme),
        }
    }

    /// Dual connection coefficients `2 Γ⁰ − Γ` at `p`.
    pub fn dual_at(&self, p: &Vector, scheme: &FdScheme) -> Result<Array3> {
        let lc = self.levi_civita_at(p, scheme)?;
        let primal = self.primal_at(p)?;
        Ok(dual_connection(&primal, &lc))
    }

    /// True when a closed-form Levi-Civita field was supplied.
    pub fn has_closed_form_levi_civita(&self) -> bool {
        self.levi_civita.is_some()
    }
}

/// Levi-Civita coefficients from the metric field by central differences:
/// `Γ⁰^k_{ij} = ½ g^{kl} (∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})`.
pub fn levi_civita(m: &StatisticalManifold, p: &Vector, scheme: &FdScheme) -> Result<Array3> {
    let n = m.dim();
    let g_inv = invert_spd(&m.metric_at(p)?)?;
    let mut dg = [Matrix::zeros(n); MAX_DIM];
    for c in 0..n {
        dg[c] = central_diff(|q| m.metric_at(q), p, c, scheme)?;
    }
    let mut gamma = Array3::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += g_inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                let v = 0.5 * acc;
                gamma[(k, i, j)] = v;
                gamma[(k, j, i)] = v;
            }
        }
    }
    Ok(gamma)
}

/// Dual connection coefficients `Γ* = 2 Γ⁰ − Γ`, componentwise. Applying the
/// map twice returns the original coefficients.
pub fn dual_connection(primal: &Array3, levi_civita: &Array3) -> Array3 {
    levi_civita.linear_comb(2.0, primal, -1.0)
}

/// Curvature tensor components `R^l_{kij}` at a point, for the convention
/// `R(∂_i, ∂_j)∂_k = R^l_{kij} ∂_l`; antisymmetric in `(i, j)` exactly.
#[derive(Debug, Clone)]
pub struct CurvatureTensor {
    dim: usize,
    data: [[[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM]; MAX_DIM],
}

impl CurvatureTensor {
    pub fn zeros(dim: usize) -> Self {
        CurvatureTensor { dim, data: [[[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM]; MAX_DIM] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Component `R^l_{kij}`.
    #[inline]
    pub fn get(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        self.data[l][k][i][j]
    }

    /// `R(x, y)z` as an ambient vector.
    pub fn apply(&self, x: &Vector, y: &Vector, z: &Vector) -> Vector {
        let n = self.dim;
        let mut out = Vector::zeros(n);
        for l in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        acc += self.data[l][k][i][j] * z[k] * x[i] * y[j];
                    }
                }
            }
            out[l] = acc;
        }
        out
    }

    /// `g(R(x, y)z, w)`.
    pub fn pairing(&self, g: &Matrix, x: &Vector, y: &Vector, z: &Vector, w: &Vector) -> f64 {
        g.inner(&self.apply(x, y, z), w)
    }

    /// Classical sectional curvature of the coordinate plane `(i, j)`:
    /// `g(R(∂_i, ∂_j)∂_j, ∂_i) / (g_ii g_jj − g_ij²)`.
    pub fn classical_sectional(&self, g: &Matrix, i: usize, j: usize) -> Result<f64> {
        let mut num = 0.0;
        for l in 0..self.dim {
            num += g[(l, i)] * self.data[l][j][i][j];
        }
        let denom = g[(i, i)] * g[(j, j)] - g[(i, j)] * g[(i, j)];
        if denom.abs() < 1e-12 {
            return Err(Error::DegenerateInput);
        }
        Ok(num / denom)
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        let n = self.dim;
        let mut m = 0.0;
        for l in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        m = f64::max(m, self.data[l][k][i][j].abs());
                    }
                }
            }
        }
        m
    }
}

/// Curvature of a connection coefficient field by central differences:
/// `R^l_{kij} = ∂_i Γ^l_{jk} − ∂_j Γ^l_{ik} + Γ^l_{im} Γ^m_{jk} − Γ^l_{jm} Γ^m_{ik}`.
/// Antisymmetry in `(i, j)` holds exactly because the mirrored components are
/// the negated float values.
pub fn curvature<F>(conn_field: F, p: &Vector, scheme: &FdScheme) -> Result<CurvatureTensor>
where
    F: Fn(&Vector) -> Result<Array3>,
{
    let gamma = conn_field(p)?;
    let n = gamma.dim();
    let mut dgamma = [Array3::zeros(n); MAX_DIM];
    for c in 0..n {
        dgamma[c] = central_diff(&conn_field, p, c, scheme)?;
    }
    let mut r = CurvatureTensor::zeros(n);
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in (i + 1)..n {
                    let mut acc = dgamma[i][(l, j, k)] - dgamma[j][(l, i, k)];
                    for mm in 0..n {
                        acc += gamma[(l, i, mm)] * gamma[(mm, j, k)]
                            - gamma[(l, j, mm)] * gamma[(mm, i, k)];
                    }
                    r.data[l][k][i][j] = acc;
                    r.data[l][k][j][i] = -acc;
                }
            }
        }
    }
    Ok(r)
}

/// Pointwise defect of the duality condition
/// `∂_c g(∂_a, ∂_b) = g(∇_{∂_c} ∂_a, ∂_b) + g(∂_a, ∇*_{∂_c} ∂_b)`,
/// maximized over all basis triples. Near zero exactly when `dual` is the
/// metric dual of the manifold's primal connection.
pub fn duality_residual<F>(
    m: &StatisticalManifold,
    dual: F,
    p: &Vector,
    scheme: &FdScheme,
) -> Result<f64>
where
    F: Fn(&Vector) -> Result<Array3>,
{
    let n = m.dim();
    let g = m.metric_at(p)?;
    let primal = m.primal_at(p)?;
    let dual = dual(p)?;
    let mut worst = 0.0_f64;
    for c in 0..n {
        let dg = central_diff(|q| m.metric_at(q), p, c, scheme)?;
        for a in 0..n {
            for b in 0..n {
                let mut lhs = dg[(a, b)];
                for k in 0..n {
                    lhs -= primal[(k, c, a)] * g[(k, b)];
                    lhs -= dual[(k, c, b)] * g[(a, k)];
                }
                worst = worst.max(lhs.abs());
            }
        }
    }
    Ok(worst)
}

/// Defect of the constant-curvature identity
/// `R(∂_i, ∂_j)∂_k = c { g(∂_j, ∂_k) ∂_i − g(∂_i, ∂_k) ∂_j }`
/// for an arbitrary connection coefficient field, maximized over the given
/// points and all index tuples; components are lowered with the metric so the
/// comparison is scale-consistent.
pub fn constant_curvature_residual_field<F>(
    m: &StatisticalManifold,
    conn_field: F,
    c: f64,
    points: &[Vector],
    scheme: &FdScheme,
) -> Result<f64>
where
    F: Fn(&Vector) -> Result<Array3>,
{
    let n = m.dim();
    let mut worst = 0.0_f64;
    for p in points {
        let g = m.metric_at(p)?;
        let r = curvature(&conn_field, p, scheme)?;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for mm in 0..n {
                        let mut lowered = 0.0;
                        for l in 0..n {
                            lowered += g[(mm, l)] * r.get(l, k, i, j);
                        }
                        let target = c * (g[(j, k)] * g[(mm, i)] - g[(i, k)] * g[(mm, j)]);
                        worst = worst.max((lowered - target).abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// [`constant_curvature_residual_field`] applied to the primal connection.
pub fn constant_curvature_residual(
    m: &StatisticalManifold,
    c: f64,
    points: &[Vector],
    scheme: &FdScheme,
) -> Result<f64> {
    constant_curvature_residual_field(m, |q| m.primal_at(q), c, points, scheme)
}

/// Defect of the curvature duality identity
/// `g(R*(X, Y)Z, W) + g(Z, R(X, Y)W) = 0`, maximized over basis tuples.
/// Holds for every genuine dual pair regardless of constant curvature.
pub fn curvature_duality_residual(
    m: &StatisticalManifold,
    p: &Vector,
    scheme: &FdScheme,
) -> Result<f64> {
    let n = m.dim();
    let g = m.metric_at(p)?;
    let r = curvature(|q| m.primal_at(q), p, scheme)?;
    let r_star = curvature(|q| m.dual_at(q, scheme), p, scheme)?;
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for w in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += g[(w, l)] * r_star.get(l, k, i, j);
                        acc += g[(k, l)] * r.get(l, w, i, j);
                    }
                    worst = worst.max(acc.abs());
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn euclidean(dim: usize) -> StatisticalManifold {
        StatisticalManifold::new(
            dim,
            Box::new(|_| true),
            Box::new(move |p: &Vector| Matrix::identity(p.dim())),
            Box::new(move |p: &Vector| Array3::zeros(p.dim())),
        )
        .with_levi_civita(Box::new(move |p: &Vector| Array3::zeros(p.dim())))
    }

    fn h3() -> StatisticalManifold {
        fixtures::build_manifold("h3-hessian", 0.05).unwrap()
    }

    fn p0() -> Vector {
        Vector::from_slice(&[0.0, 0.0, 1.0])
    }

    #[test]
    fn levi_civita_flat_metric_vanishes() {
        let m = euclidean(3);
        let gamma = levi_civita(&m, &p0(), &FdScheme::default()).unwrap();
        assert_eq!(gamma, Array3::zeros(3));
    }

    #[test]
    fn levi_civita_matches_conformal_closed_form() {
        // Conformal metric (y3)^-2 delta: Γ^k_ij = δ_ik φ_j + δ_jk φ_i − δ_ij φ_k
        // with φ = −ln y3, so at (0,0,1): Γ³₁₁ = 1, Γ¹₁₃ = −1, Γ³₃₃ = −1.
        let m = h3();
        let gamma = levi_civita(&m, &p0(), &FdScheme::default()).unwrap();
        assert!((gamma[(2, 0, 0)] - 1.0).abs() < 1e-7);
        assert!((gamma[(0, 0, 2)] + 1.0).abs() < 1e-7);
        assert!((gamma[(2, 2, 2)] + 1.0).abs() < 1e-7);
        // Spot-check the whole tensor against the closed form the fixture carries.
        let closed = m.levi_civita_at(&p0(), &FdScheme::default()).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((gamma[(k, i, j)] - closed[(k, i, j)]).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn levi_civita_hessian_potential_cubic_term() {
        // g = Hess(|y|²/2 + (ε/6) y1³) has g11 = 1 + ε y1, so Γ¹₁₁ = ε/2 at 0.
        let eps = 0.3;
        let m = StatisticalManifold::new(
            3,
            Box::new(|_| true),
            Box::new(move |p: &Vector| {
                let mut g = Matrix::identity(3);
                g[(0, 0)] = 1.0 + eps * p[0];
                g
            }),
            Box::new(move |p: &Vector| Array3::zeros(p.dim())),
        );
        let gamma = levi_civita(&m, &Vector::zeros(3), &FdScheme::default()).unwrap();
        assert!((gamma[(0, 0, 0)] - eps / 2.0).abs() < 1e-9);
    }

    #[test]
    fn dual_of_levi_civita_is_levi_civita() {
        let m = h3();
        let scheme = FdScheme::default();
        let lc = m.levi_civita_at(&p0(), &scheme).unwrap();
        assert_eq!(dual_connection(&lc, &lc), lc);
    }

    #[test]
    fn dual_connection_is_involutive() {
        let m = h3();
        let scheme = FdScheme::default();
        let gamma = m.primal_at(&p0()).unwrap();
        let lc = m.levi_civita_at(&p0(), &scheme).unwrap();
        let twice = dual_connection(&dual_connection(&gamma, &lc), &lc);
        assert_eq!(twice, gamma);
    }

    #[test]
    fn dual_connection_matches_hand_values() {
        // At (0,0,1): Γ*³₁₁ = 2·1 − 2 = 0, Γ*¹₁₃ = −2, Γ*³₃₃ = −3.
        let m = h3();
        let dual = m.dual_at(&p0(), &FdScheme::default()).unwrap();
        assert!((dual[(2, 0, 0)]).abs() < 1e-12);
        assert!((dual[(0, 0, 2)] + 2.0).abs() < 1e-12);
        assert!((dual[(2, 2, 2)] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn curvature_of_zero_connection_vanishes() {
        let field = |_: &Vector| Ok(Array3::zeros(3));
        let r = curvature(field, &p0(), &FdScheme::default()).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn h3_primal_curvature_is_flat() {
        let m = h3();
        let r = curvature(|q| m.primal_at(q), &p0(), &FdScheme::default()).unwrap();
        assert!(r.max_abs() < 1e-7, "max {}", r.max_abs());
    }

    #[test]
    fn h3_levi_civita_has_sectional_curvature_minus_one() {
        let m = h3();
        let scheme = FdScheme::default();
        for p in [p0(), Vector::from_slice(&[0.4, -0.2, 1.7])] {
            let g = m.metric_at(&p).unwrap();
            let r = curvature(|q| m.levi_civita_at(q, &scheme), &p, &scheme).unwrap();
            for i in 0..3 {
                for j in (i + 1)..3 {
                    let k = r.classical_sectional(&g, i, j).unwrap();
                    assert!((k + 1.0).abs() < 1e-5, "plane ({i},{j}): {k}");
                }
            }
        }
    }

    #[test]
    fn levi_civita_curvature_has_pair_symmetry() {
        // g(R(X,Y)Z,W) = g(R(Z,W)X,Y) holds for the Levi-Civita connection.
        let m = h3();
        let scheme = FdScheme::default();
        let p = Vector::from_slice(&[0.3, 0.1, 1.3]);
        let g = m.metric_at(&p).unwrap();
        let r = curvature(|q| m.levi_civita_at(q, &scheme), &p, &scheme).unwrap();
        let lowered = |x: usize, y: usize, z: usize, w: usize| -> f64 {
            let mut acc = 0.0;
            for l in 0..3 {
                acc += g[(w, l)] * r.get(l, z, x, y);
            }
            acc
        };
        for x in 0..3 {
            for y in 0..3 {
                for z in 0..3 {
                    for w in 0..3 {
                        let diff = lowered(x, y, z, w) - lowered(z, w, x, y);
                        assert!(diff.abs() < 1e-6, "({x},{y},{z},{w}): {diff}");
                    }
                }
            }
        }
    }

    #[test]
    fn duality_residual_trivial_structure_is_zero() {
        let m = euclidean(3);
        let scheme = FdScheme::default();
        let r = duality_residual(&m, |q| m.dual_at(q, &scheme), &p0(), &scheme).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn duality_residual_h3_pair_is_small() {
        let m = h3();
        let scheme = FdScheme::default();
        let r = duality_residual(&m, |q| m.dual_at(q, &scheme), &p0(), &scheme).unwrap();
        assert!(r <= 1e-6, "residual {r}");
    }

    #[test]
    fn duality_residual_detects_perturbation() {
        let m = h3();
        let scheme = FdScheme::default();
        let perturbed = |q: &Vector| -> Result<Array3> {
            let mut d = m.dual_at(q, &scheme)?;
            d[(0, 0, 0)] += 0.1;
            Ok(d)
        };
        let r = duality_residual(&m, perturbed, &p0(), &scheme).unwrap();
        assert!(r >= 0.09, "residual {r}");
    }

    #[test]
    fn constant_curvature_residual_trivial() {
        let m = euclidean(3);
        let r =
            constant_curvature_residual(&m, 0.0, &[p0()], &FdScheme::default()).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn constant_curvature_residual_h3_accepts_zero_rejects_one() {
        let m = h3();
        let scheme = FdScheme::default();
        let ok = constant_curvature_residual(&m, 0.0, &[p0()], &scheme).unwrap();
        assert!(ok <= 1e-6, "residual {ok}");
        let bad = constant_curvature_residual(&m, 1.0, &[p0()], &scheme).unwrap();
        assert!(bad >= 0.5, "residual {bad}");
    }

    #[test]
    fn dual_structure_inherits_constant_curvature() {
        let m = h3();
        let scheme = FdScheme::default();
        let pts = [p0(), Vector::from_slice(&[-0.4, 0.6, 1.4])];
        let r =
            constant_curvature_residual_field(&m, |q| m.dual_at(q, &scheme), 0.0, &pts, &scheme)
                .unwrap();
        assert!(r <= 1e-6, "residual {r}");
    }

    #[test]
    fn curvature_duality_residual_small_on_fixtures() {
        let scheme = FdScheme::default();
        let m = h3();
        let r = curvature_duality_residual(&m, &p0(), &scheme).unwrap();
        assert!(r <= 1e-6, "h3 residual {r}");

        let trivial = euclidean(3);
        let r0 = curvature_duality_residual(&trivial, &p0(), &scheme).unwrap();
        assert_eq!(r0, 0.0);

        let potential = fixtures::build_manifold("hessian-potential-r4", 0.05).unwrap();
        for p in [
            Vector::from_slice(&[0.0, 0.0, 0.0, 0.0]),
            Vector::from_slice(&[0.3, -0.2, 0.5, -0.4]),
        ] {
            let r = curvature_duality_residual(&potential, &p, &scheme).unwrap();
            assert!(r <= 1e-6, "potential residual {r}");
        }
    }

    #[test]
    fn chart_boundary_is_reported() {
        let m = h3();
        let outside = Vector::from_slice(&[0.0, 0.0, -1.0]);
        assert_eq!(m.metric_at(&outside).unwrap_err(), Error::ChartBoundary);
        // Stencil that crosses y3 = 0 fails too.
        let near = Vector::from_slice(&[0.0, 0.0, 5e-5]);
        let err = levi_civita(&m, &near, &FdScheme::default()).unwrap_err();
        assert_eq!(err, Error::ChartBoundary);
    }
}
