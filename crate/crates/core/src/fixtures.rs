//! Self-validating catalogue of statistical manifolds and surfaces, plus a
//! seeded random-scan generator for graph surfaces.
//!
//! Every catalogue manifold ships closed-form metric, primal-connection and
//! Levi-Civita coefficient fields together with a sampling box for
//! validation. A fixture must pass [`validate_fixture`] before invariants
//! are computed on it; failing fixtures are rejected, never silently used.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::Error;
use crate::immersion::SurfaceImmersion;
use crate::manifold::{
    constant_curvature_residual, curvature_duality_residual, duality_residual, StatisticalManifold,
};
use crate::math;
use crate::numerics::{invert_spd, Array3, FdScheme, Matrix, Vector, MAX_DIM};
use crate::Result;

/// Names of the catalogue manifolds.
pub const MANIFOLD_NAMES: [&str; 5] = [
    "euclidean3-trivial",
    "euclidean4-trivial",
    "h3-hessian",
    "h4-hessian-analogue",
    "hessian-potential-r4",
];

/// Names of the catalogue surface kinds.
pub const SURFACE_NAMES: [&str; 5] = ["plane", "graph", "sphere", "torus", "horosphere"];

/// Default coupling of the exponential term in the Hessian potential; zero
/// degenerates the fixture to the trivial Euclidean structure.
pub const DEFAULT_POTENTIAL_EPSILON: f64 = 0.05;

/// Graph-surface polynomial coefficients per height function: full quadratic
/// `c0 + c1 u + c2 v + c3 u² + c4 uv + c5 v²`.
pub const GRAPH_COEFFS_PER_HEIGHT: usize = 6;

/// Coefficient bound for randomly generated graph surfaces.
pub const SCAN_COEFF_BOUND: f64 = 0.3;

/// Parameters selecting and configuring a catalogue fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    /// Catalogue manifold name.
    pub manifold: String,
    /// Optional surface riding in the manifold's chart.
    pub surface: Option<SurfaceSpec>,
    /// Seed for validation sampling and randomized variants.
    pub seed: u64,
    /// Coupling of the Hessian-potential fixture (ignored elsewhere).
    pub epsilon: f64,
}

impl FixtureSpec {
    pub fn manifold_only(name: &str) -> Self {
        FixtureSpec {
            manifold: name.to_string(),
            surface: None,
            seed: 0,
            epsilon: DEFAULT_POTENTIAL_EPSILON,
        }
    }

    pub fn with_surface(name: &str, surface: SurfaceSpec) -> Self {
        FixtureSpec { surface: Some(surface), ..FixtureSpec::manifold_only(name) }
    }
}

/// Surface selection and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    /// Sphere radius or first torus radius.
    pub radius: f64,
    /// Second torus radius.
    pub radius2: f64,
    /// Offset of the last chart coordinate (plane/graph/horosphere).
    pub offset: f64,
    /// Graph polynomial coefficients, [`GRAPH_COEFFS_PER_HEIGHT`] per height
    /// function; missing coefficients are treated as zero.
    pub coeffs: Vec<f64>,
    /// Default sampling grid (per axis).
    pub grid: [usize; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Plane,
    Graph,
    Sphere,
    Torus,
    Horosphere,
}

impl SurfaceKind {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "plane" => SurfaceKind::Plane,
            "graph" => SurfaceKind::Graph,
            "sphere" => SurfaceKind::Sphere,
            "torus" => SurfaceKind::Torus,
            "horosphere" => SurfaceKind::Horosphere,
            _ => return Err(Error::UnknownFixture(name.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SurfaceKind::Plane => "plane",
            SurfaceKind::Graph => "graph",
            SurfaceKind::Sphere => "sphere",
            SurfaceKind::Torus => "torus",
            SurfaceKind::Horosphere => "horosphere",
        }
    }
}

impl SurfaceSpec {
    pub fn new(kind: SurfaceKind) -> Self {
        let offset = match kind {
            SurfaceKind::Horosphere => 1.0,
            _ => 0.0,
        };
        SurfaceSpec { kind, radius: 1.0, radius2: 1.0, offset, coeffs: Vec::new(), grid: [17, 17] }
    }
}

/// A built fixture: the manifold, an optional surface, and the sampling
/// metadata used by validation.
pub struct BuiltFixture {
    pub name: String,
    pub manifold: StatisticalManifold,
    pub surface: Option<SurfaceImmersion>,
    pub claimed_c: f64,
    /// Per-axis bounds of the validation sampling box.
    pub sample_box: [[f64; 2]; MAX_DIM],
    /// Distance from the sampling box to the chart boundary (infinite for
    /// all-space charts); finite-difference stencils must stay well inside.
    pub chart_margin: f64,
    pub seed: u64,
}

/// Residual report produced by fixture validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Max defect of the metric-duality condition over the sample points.
    pub duality: f64,
    /// Max defect of the constant-curvature identity for the claimed c.
    pub constant_curvature: f64,
    /// Max defect of the curvature-duality pairing identity.
    pub curvature_duality: f64,
    /// Metric passed the SPD decomposition at every sample point.
    pub metric_spd: bool,
    /// The FD step is at most a tenth of the chart margin.
    pub step_ok: bool,
    pub tolerance: f64,
    pub pass: bool,
}

/// Build a catalogue manifold by name. `epsilon` configures the
/// Hessian-potential fixture and is ignored by the others.
pub fn build_manifold(name: &str, epsilon: f64) -> Result<StatisticalManifold> {
    match name {
        "euclidean3-trivial" => Ok(trivial_manifold(3)),
        "euclidean4-trivial" => Ok(trivial_manifold(4)),
        "h3-hessian" => Ok(upper_half_space(3)),
        "h4-hessian-analogue" => Ok(upper_half_space(4)),
        "hessian-potential-r4" => Ok(hessian_potential(epsilon)),
        _ => Err(Error::UnknownFixture(name.to_string())),
    }
}

fn trivial_manifold(dim: usize) -> StatisticalManifold {
    StatisticalManifold::new(
        dim,
        Box::new(|_| true),
        Box::new(move |_: &Vector| Matrix::identity(dim)),
        Box::new(move |_: &Vector| Array3::zeros(dim)),
    )
    .with_levi_civita(Box::new(move |_: &Vector| Array3::zeros(dim)))
    .with_claimed_c(0.0)
}

/// Upper half space `{ y^d > 0 }` with the conformal metric `(y^d)^-2 δ` and
/// the flat primal connection `Γ^d_dd = 1/y^d`, `Γ^d_ii = 2/y^d` (i < d).
/// For `dim = 3` this is the textbook Hessian structure on hyperbolic space;
/// the 4-dimensional transcription is gated by numerical validation.
fn upper_half_space(dim: usize) -> StatisticalManifold {
    let last = dim - 1;
    StatisticalManifold::new(
        dim,
        Box::new(move |p: &Vector| p[last] > 0.0),
        Box::new(move |p: &Vector| {
            let t = p[last];
            let w = 1.0 / (t * t);
            let mut g = Matrix::zeros(dim);
            for k in 0..dim {
                g[(k, k)] = w;
            }
            g
        }),
        Box::new(move |p: &Vector| {
            let inv_t = 1.0 / p[last];
            let mut gamma = Array3::zeros(dim);
            gamma[(last, last, last)] = inv_t;
            for i in 0..last {
                gamma[(last, i, i)] = 2.0 * inv_t;
            }
            gamma
        }),
    )
    .with_levi_civita(Box::new(move |p: &Vector| {
        // Conformal factor φ = −ln y^d: Γ^k_ij = δ_ik φ_j + δ_jk φ_i − δ_ij φ_k.
        let inv_t = 1.0 / p[last];
        let mut gamma = Array3::zeros(dim);
        gamma[(last, last, last)] = -inv_t;
        for i in 0..last {
            gamma[(last, i, i)] = inv_t;
            gamma[(i, i, last)] = -inv_t;
            gamma[(i, last, i)] = -inv_t;
        }
        gamma
    }))
    .with_claimed_c(0.0)
}

/// Flat affine connection with the Hessian metric of
/// `φ(y) = |y|²/2 + ε exp(Σ y^k)` on the chart `max |y^k| < 1`:
/// `g = I + a(y) J` with `a = ε exp(Σ y^k)` and `J` the all-ones matrix.
fn hessian_potential(epsilon: f64) -> StatisticalManifold {
    let dim = 4;
    StatisticalManifold::new(
        dim,
        Box::new(move |p: &Vector| p.max_abs() < 1.0),
        Box::new(move |p: &Vector| {
            let a = epsilon * math::exp(p[0] + p[1] + p[2] + p[3]);
            let mut g = Matrix::zeros(dim);
            for i in 0..dim {
                for j in 0..dim {
                    g[(i, j)] = a + if i == j { 1.0 } else { 0.0 };
                }
            }
            g
        }),
        Box::new(move |_: &Vector| Array3::zeros(dim)),
    )
    .with_levi_civita(Box::new(move |p: &Vector| {
        // With ∂_k g_ij = a for all indices, Γ⁰^k_ij = a / (2 (1 + 4a))
        // uniformly (Sherman-Morrison row sums of g⁻¹).
        let a = epsilon * math::exp(p[0] + p[1] + p[2] + p[3]);
        let v = a / (2.0 * (1.0 + 4.0 * a));
        let mut gamma = Array3::zeros(dim);
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    gamma[(k, i, j)] = v;
                }
            }
        }
        gamma
    }))
    .with_claimed_c(0.0)
}

fn sample_box_for(name: &str) -> [[f64; 2]; MAX_DIM] {
    let mut b = [[-1.0, 1.0]; MAX_DIM];
    match name {
        "h3-hessian" => b[2] = [0.8, 2.2],
        "h4-hessian-analogue" => b[3] = [0.8, 2.2],
        "hessian-potential-r4" => b = [[-0.9, 0.9]; MAX_DIM],
        _ => {}
    }
    b
}

fn chart_margin_for(name: &str) -> f64 {
    match name {
        // Distance from the sampling box to the chart boundary.
        "h3-hessian" | "h4-hessian-analogue" => 0.8,
        "hessian-potential-r4" => 0.1,
        _ => f64::INFINITY,
    }
}

/// Build the manifold and optional surface described by `spec`. Construction
/// is purely algebraic; run [`validate_fixture`] before using the result.
pub fn build_fixture(spec: &FixtureSpec) -> Result<BuiltFixture> {
    let manifold = build_manifold(&spec.manifold, spec.epsilon)?;
    let claimed_c = manifold.claimed_c().unwrap_or(0.0);
    let surface = match &spec.surface {
        Some(s) => Some(build_surface(&spec.manifold, manifold.dim(), s)?),
        None => None,
    };
    Ok(BuiltFixture {
        name: spec.manifold.clone(),
        manifold,
        surface,
        claimed_c,
        sample_box: sample_box_for(&spec.manifold),
        chart_margin: chart_margin_for(&spec.manifold),
        seed: spec.seed,
    })
}

/// Build a catalogue surface inside a manifold of the given dimension.
pub fn build_surface(manifold_name: &str, dim: usize, spec: &SurfaceSpec) -> Result<SurfaceImmersion> {
    let codim = dim - 2;
    match spec.kind {
        SurfaceKind::Plane | SurfaceKind::Horosphere => {
            let offset = spec.offset;
            let map = move |u: f64, v: f64| -> Vector {
                let mut p = Vector::zeros(dim);
                p[0] = u;
                p[1] = v;
                p[dim - 1] = offset;
                p
            };
            Ok(SurfaceImmersion::new(Box::new(map), [[-1.0, 1.0], [-1.0, 1.0]], spec.grid))
        }
        SurfaceKind::Graph => {
            let mut coeffs = spec.coeffs.clone();
            coeffs.resize(GRAPH_COEFFS_PER_HEIGHT * codim, 0.0);
            let offset = spec.offset;
            let map = move |u: f64, v: f64| -> Vector {
                let mut p = Vector::zeros(dim);
                p[0] = u;
                p[1] = v;
                for alpha in 0..codim {
                    let c = &coeffs[alpha * GRAPH_COEFFS_PER_HEIGHT..(alpha + 1) * GRAPH_COEFFS_PER_HEIGHT];
                    let psi = c[0] + c[1] * u + c[2] * v + c[3] * u * u + c[4] * u * v + c[5] * v * v;
                    p[2 + alpha] = psi + if alpha == codim - 1 { offset } else { 0.0 };
                }
                p
            };
            Ok(SurfaceImmersion::new(Box::new(map), [[-0.5, 0.5], [-0.5, 0.5]], spec.grid))
        }
        SurfaceKind::Sphere => {
            let r = spec.radius;
            if r <= 0.0 {
                return Err(Error::DegenerateInput);
            }
            let map = move |u: f64, v: f64| -> Vector {
                let mut p = Vector::zeros(dim);
                p[0] = r * math::sin(u) * math::cos(v);
                p[1] = r * math::sin(u) * math::sin(v);
                p[2] = r * math::cos(u);
                p
            };
            Ok(SurfaceImmersion::new(
                Box::new(map),
                [[0.5, core::f64::consts::PI - 0.5], [0.3, 6.0]],
                spec.grid,
            ))
        }
        SurfaceKind::Torus => {
            if dim != 4 {
                return Err(Error::UnknownFixture(alloc::format!(
                    "torus in {manifold_name} (requires a 4-dimensional ambient)"
                )));
            }
            let (a, b) = (spec.radius, spec.radius2);
            if a <= 0.0 || b <= 0.0 {
                return Err(Error::DegenerateInput);
            }
            let map = move |u: f64, v: f64| -> Vector {
                Vector::from_slice(&[
                    a * math::cos(u),
                    a * math::sin(u),
                    b * math::cos(v),
                    b * math::sin(v),
                ])
            };
            let tau = 2.0 * core::f64::consts::PI;
            Ok(SurfaceImmersion::new(Box::new(map), [[0.0, tau], [0.0, tau]], spec.grid))
        }
    }
}

/// Deterministic validation lattice: three points per axis over the sampling
/// box (corners and centers), 3^dim points in total.
pub fn lattice_points(fixture: &BuiltFixture) -> Vec<Vector> {
    let dim = fixture.manifold.dim();
    let mut points = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let mut p = Vector::zeros(dim);
        for k in 0..dim {
            let [lo, hi] = fixture.sample_box[k];
            p[k] = lo + (hi - lo) * (idx[k] as f64) / 2.0;
        }
        points.push(p);
        // Odometer increment.
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < 3 {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == dim {
                return points;
            }
        }
    }
}

fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    // 53 uniform mantissa bits in [0, 1).
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// 16 seeded pseudo-random points in the sampling box.
pub fn random_points(fixture: &BuiltFixture) -> Vec<Vector> {
    let dim = fixture.manifold.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(fixture.seed);
    let mut points = Vec::with_capacity(16);
    for _ in 0..16 {
        let mut p = Vector::zeros(dim);
        for k in 0..dim {
            let [lo, hi] = fixture.sample_box[k];
            p[k] = lo + (hi - lo) * unit_f64(&mut rng);
        }
        points.push(p);
    }
    points
}

/// Run the fixture validation gate: duality, constant-curvature and
/// curvature-duality residuals over the lattice plus 16 seeded random
/// points, an SPD check of the metric, and the step-margin rule.
pub fn validate_fixture(
    fixture: &BuiltFixture,
    scheme: &FdScheme,
    tolerance: f64,
) -> Result<ValidationReport> {
    let m = &fixture.manifold;
    let mut points = lattice_points(fixture);
    points.extend(random_points(fixture));

    let mut metric_spd = true;
    let mut duality = 0.0_f64;
    let mut cc = 0.0_f64;
    let mut cd = 0.0_f64;
    for p in &points {
        if invert_spd(&m.metric_at(p)?).is_err() {
            metric_spd = false;
        }
        duality = duality.max(duality_residual(m, |q| m.dual_at(q, scheme), p, scheme)?);
        cd = cd.max(curvature_duality_residual(m, p, scheme)?);
    }
    cc = cc.max(constant_curvature_residual(m, fixture.claimed_c, &points, scheme)?);

    let step_ok = scheme.step() <= fixture.chart_margin / 10.0;
    let pass = metric_spd && step_ok && duality <= tolerance && cc <= tolerance && cd <= tolerance;
    Ok(ValidationReport {
        duality,
        constant_curvature: cc,
        curvature_duality: cd,
        metric_spd,
        step_ok,
        tolerance,
        pass,
    })
}

/// Build and validate in one step, rejecting fixtures that fail the gate.
pub fn build_validated(
    spec: &FixtureSpec,
    scheme: &FdScheme,
    tolerance: f64,
) -> Result<BuiltFixture> {
    let fixture = build_fixture(spec)?;
    let report = validate_fixture(&fixture, scheme, tolerance)?;
    if !report.pass {
        return Err(Error::ValidationFailed(report));
    }
    Ok(fixture)
}

/// One generated sample of a random scan: a graph surface plus an interior
/// parameter point.
pub struct ScanSample {
    pub index: usize,
    pub surface: SurfaceImmersion,
    /// The generated polynomial coefficients (reporting/reproducibility).
    pub coeffs: Vec<f64>,
    pub point: [f64; 2],
}

/// Deterministic stream of random graph surfaces in a fixture family. The
/// coefficient and point stream is a pure function of the seed; the same
/// seed reproduces bit-identical samples.
pub fn random_scan(seed: u64, count: usize, family: &str) -> Result<Vec<ScanSample>> {
    let manifold = build_manifold(family, DEFAULT_POTENTIAL_EPSILON)?;
    let dim = manifold.dim();
    let codim = dim - 2;
    let offset = match family {
        "h3-hessian" | "h4-hessian-analogue" => 1.0,
        _ => 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count);
    for index in 0..count {
        let mut coeffs = Vec::with_capacity(GRAPH_COEFFS_PER_HEIGHT * codim);
        for _ in 0..GRAPH_COEFFS_PER_HEIGHT * codim {
            coeffs.push(SCAN_COEFF_BOUND * (2.0 * unit_f64(&mut rng) - 1.0));
        }
        let point = [0.9 * (unit_f64(&mut rng) - 0.5), 0.9 * (unit_f64(&mut rng) - 0.5)];
        let spec = SurfaceSpec {
            kind: SurfaceKind::Graph,
            offset,
            coeffs: coeffs.clone(),
            ..SurfaceSpec::new(SurfaceKind::Graph)
        };
        let surface = build_surface(family, dim, &spec)?;
        samples.push(ScanSample { index, surface, coeffs, point });
    }
    Ok(samples)
}
