//! Curvature invariants of statistical surfaces and the Euler/Wintgen
//! inequality slacks, assembled into per-point reports.
//!
//! Sign conventions (one ledger for every formula below):
//! * The statistical sectional curvature averages the two curvature
//!   operators and evaluates `T(X, Y, X, Y)`, so in the self-dual case the
//!   surface Gauss invariant `G` is the *negative* of the classical Gauss
//!   curvature.
//! * `G0` (intrinsic, Levi-Civita) and `K0_ambient` (ambient section of the
//!   tangent plane) use the classical sign: spheres positive, hyperbolic
//!   upper half-space −1. This is the assignment under which the Wintgen
//!   bound reduces to the classical one for self-dual structures.
//! * Slacks are right-hand side minus left-hand side, reported signed so a
//!   violation is visible as a negative value.

use alloc::collections::BTreeMap;

use crate::error::Error;
use crate::immersion::{
    analyze, codazzi_residual, gauss_equation_residual_at, induced_curvature_fd,
    normal_curvature_fd, normal_curvature_tensor_at, Connection, SurfaceCurvature,
    SurfaceImmersion, SurfacePoint,
};
use crate::manifold::{curvature, StatisticalManifold};
use crate::numerics::{FdScheme, Matrix, Vector};
use crate::Result;

/// Options for per-point invariant evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub scheme: FdScheme,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { scheme: FdScheme::default() }
    }
}

/// Skew-symmetric averaged curvature 4-tensor `T = ½ (R + R*)` of an induced
/// connection pair, lowered with the induced metric; components indexed
/// `T[a][b][c][d] = T(∂_a, ∂_b, ∂_c, ∂_d)`.
#[derive(Debug, Clone, Copy)]
pub struct TTensor {
    pub comps: [[[[f64; 2]; 2]; 2]; 2],
}

impl TTensor {
    pub fn eval(&self, x: &Vector, y: &Vector, z: &Vector, w: &Vector) -> f64 {
        let mut acc = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        acc += self.comps[a][b][c][d] * x[a] * y[b] * z[c] * w[d];
                    }
                }
            }
        }
        acc
    }
}

/// Assemble the averaged curvature tensor from the two induced curvatures.
pub fn t_tensor_full(
    r: &SurfaceCurvature,
    r_star: &SurfaceCurvature,
    g: &Matrix,
) -> TTensor {
    let mut comps = [[[[0.0; 2]; 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    let mut acc = 0.0;
                    for e in 0..2 {
                        acc += g[(d, e)] * 0.5 * (r.comps[e][c][a][b] + r_star.comps[e][c][a][b]);
                    }
                    comps[a][b][c][d] = acc;
                }
            }
        }
    }
    TTensor { comps }
}

/// `T(X, Y, Z, W) = ½ [g(R(X,Y)Z, W) + g(R*(X,Y)Z, W)]`.
pub fn t_tensor(
    r: &SurfaceCurvature,
    r_star: &SurfaceCurvature,
    g: &Matrix,
    x: &Vector,
    y: &Vector,
    z: &Vector,
    w: &Vector,
) -> f64 {
    0.5 * (r.pairing(g, x, y, z, w) + r_star.pairing(g, x, y, z, w))
}

/// Sectional curvature `K(X ∧ Y) = T(X, Y, X, Y) / (g(X,X) g(Y,Y) − g(X,Y)²)`.
pub fn sectional_curvature(t: &TTensor, g: &Matrix, x: &Vector, y: &Vector) -> Result<f64> {
    let denom = g.inner(x, x) * g.inner(y, y) - g.inner(x, y) * g.inner(x, y);
    if denom.abs() < 1e-12 {
        return Err(Error::DegenerateInput);
    }
    Ok(t.eval(x, y, x, y) / denom)
}

fn gauss_from_point(sp: &SurfacePoint, amb: f64, amb_star: f64) -> f64 {
    let forms = &sp.forms;
    let mut cross_diag = 0.0;
    let mut cross_off = 0.0;
    for alpha in 0..forms.codim {
        cross_diag += forms.h[alpha][0][0] * forms.h_star[alpha][1][1]
            + forms.h_star[alpha][0][0] * forms.h[alpha][1][1];
        cross_off += forms.h[alpha][0][1] * forms.h_star[alpha][0][1];
    }
    0.5 * (amb + amb_star) - 0.5 * cross_diag + cross_off
}

fn ambient_pairings(
    m: &StatisticalManifold,
    sp: &SurfacePoint,
    scheme: &FdScheme,
) -> Result<(f64, f64, f64)> {
    let g = &sp.ambient_metric;
    let e1 = &sp.frame.tangent[0];
    let e2 = &sp.frame.tangent[1];
    let r = curvature(|q| m.primal_at(q), &sp.p, scheme)?;
    let r_star = curvature(|q| m.dual_at(q, scheme), &sp.p, scheme)?;
    let r0 = curvature(|q| m.levi_civita_at(q, scheme), &sp.p, scheme)?;
    let amb = r.pairing(g, e1, e2, e1, e2);
    let amb_star = r_star.pairing(g, e1, e2, e1, e2);
    // Classical sign: K̃0 = g(R0(e1, e2) e2, e1).
    let k0 = r0.pairing(g, e1, e2, e2, e1);
    Ok((amb, amb_star, k0))
}

/// Statistical Gauss curvature `G = K(e1 ∧ e2)` through the Gauss equations:
/// ambient curvature terms plus products of the dual fundamental forms. This
/// is the default route; [`gauss_curvature_fd`] is the independent one.
pub fn gauss_curvature(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    u: [f64; 2],
    scheme: &FdScheme,
) -> Result<f64> {
    let sp = analyze(m, s, u, scheme)?;
    let (amb, amb_star, _) = ambient_pairings(m, &sp, scheme)?;
    Ok(gauss_from_point(&sp, amb, amb_star))
}

/// Statistical Gauss curvature through the induced-connection curvature by
/// finite differences: the cross-check oracle for [`gauss_curvature`].
pub fn gauss_curvature_fd(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    u: [f64; 2],
    scheme: &FdScheme,
) -> Result<f64> {
    let sp = analyze(m, s, u, scheme)?;
    let r = induced_curvature_fd(m, s, u, Connection::Primal)?;
    let r_star = induced_curvature_fd(m, s, u, Connection::Dual)?;
    let t = t_tensor_full(&r, &r_star, &sp.induced);
    sectional_curvature(&t, &sp.induced, &Vector::basis(2, 0), &Vector::basis(2, 1))
}

/// Statistical normal curvature of a surface in a 4-dimensional ambient:
/// the average of the two Ricci-equation pairings. Returns the signed value
/// and its orientation-free absolute value.
pub fn normal_curvature(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    u: [f64; 2],
    scheme: &FdScheme,
) -> Result<(f64, f64)> {
    let sp = analyze(m, s, u, scheme)?;
    let (primal, dual) = normal_curvature_tensor_at(m, &sp, scheme)?;
    let g_perp = 0.5 * (primal + dual);
    Ok((g_perp, g_perp.abs()))
}

/// Classical invariants `(G0, K0_ambient)`: the Levi-Civita Gauss curvature
/// of the surface via the classical Gauss equation, and the ambient
/// sectional curvature of the tangent plane.
pub fn classical_invariants(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    u: [f64; 2],
    scheme: &FdScheme,
) -> Result<(f64, f64)> {
    let sp = analyze(m, s, u, scheme)?;
    let (_, _, k0) = ambient_pairings(m, &sp, scheme)?;
    Ok((classical_gauss_from_point(&sp, k0), k0))
}

fn classical_gauss_from_point(sp: &SurfacePoint, k0: f64) -> f64 {
    let forms = &sp.forms;
    let mut products = 0.0;
    for alpha in 0..forms.codim {
        products += forms.h0[alpha][0][0] * forms.h0[alpha][1][1]
            - forms.h0[alpha][0][1] * forms.h0[alpha][0][1];
    }
    k0 + products
}

/// Euler slack `2 ‖H‖ ‖H*‖ − c − G`; nonnegative for surfaces in
/// 3-dimensional constant-curvature statistical manifolds.
pub fn euler_slack(g: f64, h_norm: f64, h_star_norm: f64, c: f64) -> f64 {
    2.0 * h_norm * h_star_norm - c - g
}

/// Wintgen slack
/// `½ (‖H‖² + ‖H*‖²) − c + 2 K0 − G − |G⊥| − 2 G0`; nonnegative for surfaces
/// in 4-dimensional constant-curvature statistical manifolds.
pub fn wintgen_slack(
    g: f64,
    g_perp_abs: f64,
    g0: f64,
    k0: f64,
    h_norm: f64,
    h_star_norm: f64,
    c: f64,
) -> f64 {
    0.5 * (h_norm * h_norm + h_star_norm * h_star_norm) - c + 2.0 * k0
        - g
        - g_perp_abs
        - 2.0 * g0
}

/// Slack of the commutator estimate used on the way to the Wintgen bound:
/// `¼ [‖h11 − h22‖² + ‖h*11 − h*22‖²] + ‖h12‖² + ‖h*12‖² − 2 |G⊥|`.
fn proof_step_slack(sp: &SurfacePoint, g_perp_abs: f64) -> f64 {
    let forms = &sp.forms;
    let mut quarter = 0.0;
    let mut off = 0.0;
    for alpha in 0..forms.codim {
        let d = forms.h[alpha][0][0] - forms.h[alpha][1][1];
        let d_star = forms.h_star[alpha][0][0] - forms.h_star[alpha][1][1];
        quarter += d * d + d_star * d_star;
        off += forms.h[alpha][0][1] * forms.h[alpha][0][1]
            + forms.h_star[alpha][0][1] * forms.h_star[alpha][0][1];
    }
    0.25 * quarter + off - 2.0 * g_perp_abs
}

/// Per-point invariant report: curvature invariants, mean-curvature norms,
/// the applicable inequality slack and a map of residual diagnostics.
#[derive(Debug, Clone)]
pub struct InvariantReport {
    pub u: [f64; 2],
    /// Statistical Gauss curvature `G`.
    pub g: f64,
    /// Statistical normal curvature (4-dimensional ambient only).
    pub g_perp: Option<f64>,
    /// Classical intrinsic Gauss curvature `G0`.
    pub g0: f64,
    /// Ambient Levi-Civita sectional curvature of the tangent plane.
    pub k0_ambient: f64,
    pub h_norm: f64,
    pub h_star_norm: f64,
    pub euler_slack: Option<f64>,
    pub wintgen_slack: Option<f64>,
    /// Diagnostic name → value. Entries whose name ends in `_slack` are
    /// inequality slacks (sign matters); everything else is a residual.
    pub residuals: BTreeMap<&'static str, f64>,
}

impl InvariantReport {
    /// Largest residual diagnostic, excluding inequality slacks.
    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .filter(|(name, _)| !name.ends_with("_slack"))
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }

    /// The inequality slack applicable to the ambient dimension.
    pub fn slack(&self) -> Option<f64> {
        self.euler_slack.or(self.wintgen_slack)
    }
}

/// Evaluate the full invariant report at one parameter point. The manifold
/// must carry a validated constant-curvature claim for the slacks to be
/// produced.
pub fn evaluate(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    u: [f64; 2],
    opts: &EvalOptions,
) -> Result<InvariantReport> {
    let scheme = &opts.scheme;
    let sp = analyze(m, s, u, scheme)?;
    let (amb, amb_star, k0) = ambient_pairings(m, &sp, scheme)?;

    let g_val = gauss_from_point(&sp, amb, amb_star);
    let g0 = classical_gauss_from_point(&sp, k0);
    let h_norm = sp.forms.mean_norm;
    let h_star_norm = sp.forms.mean_star_norm;

    let mut residuals = BTreeMap::new();

    // Independent intrinsic-curvature route and the Gauss equation defects.
    let r_ind = induced_curvature_fd(m, s, u, Connection::Primal)?;
    let r_ind_star = induced_curvature_fd(m, s, u, Connection::Dual)?;
    let t = t_tensor_full(&r_ind, &r_ind_star, &sp.induced);
    let g_fd =
        sectional_curvature(&t, &sp.induced, &Vector::basis(2, 0), &Vector::basis(2, 1))?;
    residuals.insert("gauss_curvature_cross", (g_val - g_fd).abs());

    let (gauss_primal, gauss_dual) = gauss_equation_residual_at(m, s, &sp, scheme)?;
    residuals.insert("gauss_primal", gauss_primal);
    residuals.insert("gauss_dual", gauss_dual);

    let (codazzi_primal, codazzi_dual) = codazzi_residual(m, s, u, scheme)?;
    residuals.insert("codazzi_primal", codazzi_primal);
    residuals.insert("codazzi_dual", codazzi_dual);

    residuals.insert("h0_identity", sp.forms.average_identity_defect());
    residuals.insert("frame_orthonormality", sp.frame.orthonormality_defect(&sp.ambient_metric));

    let c = m.claimed_c();
    let mut g_perp = None;
    let mut euler = None;
    let mut wintgen = None;
    if m.dim() == 4 {
        let (ricci_primal, ricci_dual) = normal_curvature_tensor_at(m, &sp, scheme)?;
        let (fd_primal, fd_dual) = normal_curvature_fd(m, s, u, scheme)?;
        residuals.insert("ricci_primal_cross", (ricci_primal - fd_primal).abs());
        residuals.insert("ricci_dual_cross", (ricci_dual - fd_dual).abs());
        let perp = 0.5 * (ricci_primal + ricci_dual);
        g_perp = Some(perp);
        residuals.insert("proof_step_slack", proof_step_slack(&sp, perp.abs()));
        if let Some(c) = c {
            wintgen =
                Some(wintgen_slack(g_val, perp.abs(), g0, k0, h_norm, h_star_norm, c));
        }
    } else if let Some(c) = c {
        euler = Some(euler_slack(g_val, h_norm, h_star_norm, c));
    }

    Ok(InvariantReport {
        u,
        g: g_val,
        g_perp,
        g0,
        k0_ambient: k0,
        h_norm,
        h_star_norm,
        euler_slack: euler,
        wintgen_slack: wintgen,
        residuals,
    })
}

/// Evaluate the report at every grid point of the surface, in grid order.
pub fn evaluate_grid(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    opts: &EvalOptions,
) -> Result<alloc::vec::Vec<InvariantReport>> {
    s.grid_points().into_iter().map(|u| evaluate(m, s, u, opts)).collect()
}

/// Reduction of a batch of reports: worst slack, worst residual, and the
/// verdict against the given tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub min_slack: f64,
    pub max_residual: f64,
    pub pass: bool,
}

impl Summary {
    pub fn empty() -> Self {
        Summary { min_slack: f64::INFINITY, max_residual: 0.0, pass: true }
    }

    pub fn fold(&mut self, report: &InvariantReport) {
        if let Some(slack) = report.slack() {
            self.min_slack = self.min_slack.min(slack);
        }
        self.max_residual = self.max_residual.max(report.max_residual());
    }

    pub fn finish(mut self, slack_tolerance: f64, residual_tolerance: f64) -> Self {
        self.pass = self.min_slack >= -slack_tolerance && self.max_residual <= residual_tolerance;
        self
    }
}

/// Summarize reports against a slack tolerance and a residual tolerance.
pub fn summarize<'a, I>(reports: I, slack_tolerance: f64, residual_tolerance: f64) -> Summary
where
    I: IntoIterator<Item = &'a InvariantReport>,
{
    let mut summary = Summary::empty();
    for report in reports {
        summary.fold(report);
    }
    summary.finish(slack_tolerance, residual_tolerance)
}
