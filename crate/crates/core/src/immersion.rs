//! Parametric surfaces inside a statistical manifold: adapted frames, the
//! dual fundamental forms `h` and `h*`, shape operators, mean curvature
//! vectors, and the residuals of the Gauss, Codazzi and Ricci equations for
//! both connections.
//!
//! Forms are computed in the coordinate basis of the parameter domain and
//! frame-transformed afterwards; the second fundamental forms are tensorial,
//! so no extension of frame fields off the surface is needed. Derivatives of
//! the immersion use nested central differences at the caller's step, while
//! derivatives of quantities that are themselves finite-difference results
//! (induced Christoffel fields, form fields, frame fields) run at the wider
//! [`FdScheme::ORACLE_STEP`] so inner rounding noise is not amplified.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::Error;
use crate::manifold::{curvature, StatisticalManifold};
use crate::math;
use crate::numerics::{gram_schmidt, invert_spd, Array3, FdScheme, Matrix, Vector};
use crate::Result;

/// Smallest admissible determinant of the pullback metric; below this the
/// map is treated as rank-deficient at the point.
pub const IMMERSION_DET_FLOOR: f64 = 1e-8;

pub type SurfaceMap = dyn Fn(f64, f64) -> Vector + Send + Sync;

/// Smooth map from a planar parameter box into a chart, with a default
/// sampling resolution per axis.
pub struct SurfaceImmersion {
    map: Box<SurfaceMap>,
    domain: [[f64; 2]; 2],
    grid: [usize; 2],
}

impl SurfaceImmersion {
    pub fn new(map: Box<SurfaceMap>, domain: [[f64; 2]; 2], grid: [usize; 2]) -> Self {
        assert!(domain[0][0] < domain[0][1] && domain[1][0] < domain[1][1]);
        assert!(grid[0] >= 2 && grid[1] >= 2);
        SurfaceImmersion { map, domain, grid }
    }

    #[inline]
    pub fn value(&self, u: [f64; 2]) -> Vector {
        (self.map)(u[0], u[1])
    }

    #[inline]
    pub fn domain(&self) -> [[f64; 2]; 2] {
        self.domain
    }

    #[inline]
    pub fn grid(&self) -> [usize; 2] {
        self.grid
    }

    pub fn set_grid(&mut self, grid: [usize; 2]) {
        assert!(grid[0] >= 2 && grid[1] >= 2);
        self.grid = grid;
    }

    /// Sampling lattice over the parameter box, row-major with the first
    /// parameter slowest; includes both endpoints of each axis.
    pub fn grid_points(&self) -> Vec<[f64; 2]> {
        let [nu, nv] = self.grid;
        let mut points = Vec::with_capacity(nu * nv);
        for i in 0..nu {
            let fu = i as f64 / (nu - 1) as f64;
            let u = self.domain[0][0] + (self.domain[0][1] - self.domain[0][0]) * fu;
            for j in 0..nv {
                let fv = j as f64 / (nv - 1) as f64;
                let v = self.domain[1][0] + (self.domain[1][1] - self.domain[1][0]) * fv;
                points.push([u, v]);
            }
        }
        points
    }
}

/// Which of the three canonical connections drives a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connection {
    Primal,
    Dual,
    LeviCivita,
}

pub(crate) fn connection_at(
    m: &StatisticalManifold,
    conn: Connection,
    p: &Vector,
    scheme: &FdScheme,
) -> Result<Array3> {
    match conn {
        Connection::Primal => m.primal_at(p),
        Connection::Dual => m.dual_at(p, scheme),
        Connection::LeviCivita => m.levi_civita_at(p, scheme),
    }
}

/// First and nested second parameter derivatives of the immersion at `u`.
fn map_partials(s: &SurfaceImmersion, u: [f64; 2], h: f64) -> (Vector, [Vector; 2], [[Vector; 2]; 2]) {
    let shift = |a: usize, da: f64, b: usize, db: f64| -> Vector {
        let mut w = u;
        w[a] += da;
        w[b] += db;
        s.value(w)
    };
    let p = s.value(u);
    let inv2h = 1.0 / (2.0 * h);
    let xu = [
        shift(0, h, 0, 0.0).sub(&shift(0, -h, 0, 0.0)).scale(inv2h),
        shift(1, h, 1, 0.0).sub(&shift(1, -h, 1, 0.0)).scale(inv2h),
    ];
    let inv4h2 = 1.0 / (4.0 * h * h);
    let dim = p.dim();
    let mut d2 = [[Vector::zeros(dim); 2]; 2];
    for a in 0..2 {
        for b in a..2 {
            let val = shift(a, h, b, h)
                .sub(&shift(a, h, b, -h))
                .sub(&shift(a, -h, b, h))
                .add(&shift(a, -h, b, -h))
                .scale(inv4h2);
            d2[a][b] = val;
            d2[b][a] = val;
        }
    }
    (p, xu, d2)
}

/// Geometry shared by every per-connection computation at one parameter
/// point: chart point, coordinate tangents, ambient metric and the pullback
/// (induced) metric with its inverse.
pub(crate) struct SurfaceBase {
    pub p: Vector,
    pub xu: [Vector; 2],
    pub d2: [[Vector; 2]; 2],
    pub ambient: Matrix,
    pub induced: Matrix,
    pub induced_inv: Matrix,
}

pub(crate) fn surface_base(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    u: [f64; 2],
    step: f64,
) -> Result<SurfaceBase> {
    let (p, xu, d2) = map_partials(s, u, step);
    let ambient = m.metric_at(&p)?;
    let mut induced = Matrix::zeros(2);
    for a in 0..2 {
        for b in 0..2 {
            induced[(a, b)] = ambient.inner(&xu[a], &xu[b]);
        }
    }
    if induced.determinant() < IMMERSION_DET_FLOOR {
        return Err(Error::DegenerateInput);
    }
    let induced_inv = invert_spd(&induced)?;
    Ok(SurfaceBase { p, xu, d2, ambient, induced, induced_inv })
}

/// Per-connection data at one parameter point: ambient covariant second
/// derivatives `D_ab = ∂_a∂_b f + Γ(∂_a f, ∂_b f)`, the induced Christoffel
/// coefficients of the tangential part, and the normal parts `ĥ_ab`.
pub(crate) struct ConnData {
    pub gamma_ambient: Array3,
    pub d: [[Vector; 2]; 2],
    /// Induced Christoffels `γ^c_{ab}` indexed `[c][a][b]`.
    pub gamma: [[[f64; 2]; 2]; 2],
    /// Normal parts of `D_ab` as ambient vectors.
    pub hnormal: [[Vector; 2]; 2],
}

pub(crate) fn conn_data(
    m: &StatisticalManifold,
    base: &SurfaceBase,
    conn: Connection,
    scheme: &FdScheme,
) -> Result<ConnData> {
    let gamma_ambient = connection_at(m, conn, &base.p, scheme)?;
    let dim = base.p.dim();
    let mut d = [[Vector::zeros(dim); 2]; 2];
    let mut gamma = [[[0.0; 2]; 2]; 2];
    let mut hnormal = [[Vector::zeros(dim); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let cov = base.d2[a][b].add(&gamma_ambient.contract(&base.xu[a], &base.xu[b]));
            for c in 0..2 {
                let mut acc = 0.0;
                for e in 0..2 {
                    acc += base.induced_inv[(c, e)] * base.ambient.inner(&cov, &base.xu[e]);
                }
                gamma[c][a][b] = acc;
            }
            let tangential = base.xu[0].scale(gamma[0][a][b]).axpy(gamma[1][a][b], &base.xu[1]);
            hnormal[a][b] = cov.sub(&tangential);
            d[a][b] = cov;
        }
    }
    Ok(ConnData { gamma_ambient, d, gamma, hnormal })
}

/// Orthonormal frame adapted to the surface: two tangent vectors spanning
/// the image of the differential, `dim − 2` normals seeded from chart basis
/// vectors, all orthonormal for the ambient metric. In dimension 4 the frame
/// is positively oriented with respect to the chart; the flag records
/// whether the last normal was flipped to achieve that.
#[derive(Debug, Clone)]
pub struct AdaptedFrame {
    pub tangent: [Vector; 2],
    pub normal: Vec<Vector>,
    /// Chart basis indices used to seed the normal frame.
    pub seeds: Vec<usize>,
    pub flipped: bool,
}

impl AdaptedFrame {
    /// Largest deviation from orthonormality, `max |g(e_a, e_b) − δ_ab|`.
    pub fn orthonormality_defect(&self, g: &Matrix) -> f64 {
        let mut all: Vec<&Vector> = self.tangent.iter().collect();
        all.extend(self.normal.iter());
        let mut worst = 0.0_f64;
        for (a, va) in all.iter().enumerate() {
            for (b, vb) in all.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g.inner(va, vb) - want).abs());
            }
        }
        worst
    }
}

fn frame_from_base(base: &SurfaceBase, seeds: Option<&[usize]>) -> Result<AdaptedFrame> {
    let dim = base.p.dim();
    let g = &base.ambient;
    let tangent = gram_schmidt(&base.xu, g)?;

    let chosen: Vec<usize> = match seeds {
        Some(s) => s.to_vec(),
        None => {
            // Rank chart basis vectors by the metric norm of their residual
            // off the tangent plane; ties break toward the smaller index.
            let mut ranked: Vec<(usize, f64)> = (0..dim)
                .map(|k| {
                    let mut r = Vector::basis(dim, k);
                    for t in &tangent {
                        r = r.axpy(-g.inner(&r, t), t);
                    }
                    (k, g.inner(&r, &r))
                })
                .collect();
            ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            ranked.truncate(dim - 2);
            ranked.into_iter().map(|(k, _)| k).collect()
        }
    };

    let mut inputs: Vec<Vector> = base.xu.to_vec();
    for &k in &chosen {
        inputs.push(Vector::basis(dim, k));
    }
    let mut frame = gram_schmidt(&inputs, g)?;
    let normals = frame.split_off(2);
    let tangent = [frame[0], frame[1]];

    let mut columns = Matrix::zeros(dim);
    for (col, v) in tangent.iter().chain(normals.iter()).enumerate() {
        for row in 0..dim {
            columns[(row, col)] = v[row];
        }
    }
    let mut normals = normals;
    let mut flipped = false;
    if columns.determinant() < 0.0 {
        let last = normals.len() - 1;
        normals[last] = normals[last].scale(-1.0);
        flipped = true;
    }
    Ok(AdaptedFrame { tangent, normal: normals, seeds: chosen, flipped })
}

/// Adapted orthonormal frame at a parameter point.
pub fn frames(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    u: [f64; 2],
    scheme: &FdScheme,
) -> Result<AdaptedFrame> {
    let base = surface_base(m, s, u, scheme.step())?;
    frame_from_base(&base, None)
}

pub(crate) fn frames_with_seeds(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    u: [f64; 2],
    step: f64,
    seeds: &[usize],
) -> Result<AdaptedFrame> {
    let base = surface_base(m, s, u, step)?;
    frame_from_base(&base, Some(seeds))
}

/// Frame components of the dual fundamental forms and the derived shape
/// operators and mean curvature data at one point. Components are indexed
/// `[α][i][j]` with `α` over normals and `i, j` over the orthonormal tangent
/// frame; `h0` comes from the Levi-Civita connection directly and equals
/// `(h + h*)/2` up to rounding.
#[derive(Debug, Clone)]
pub struct FundamentalForms {
    pub codim: usize,
    pub h: [[[f64; 2]; 2]; 2],
    pub h_star: [[[f64; 2]; 2]; 2],
    pub h0: [[[f64; 2]; 2]; 2],
    /// Shape operators `A_{e_{2+α}}` in the orthonormal tangent frame.
    pub shape: [Matrix; 2],
    pub shape_star: [Matrix; 2],
    /// Mean curvature vector components along the normal frame.
    pub mean: [f64; 2],
    pub mean_star: [f64; 2],
    pub mean_norm: f64,
    pub mean_star_norm: f64,
}

impl FundamentalForms {
    /// `max |2 h0 − h − h*|` over all components.
    pub fn average_identity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for alpha in 0..self.codim {
            for i in 0..2 {
                for j in 0..2 {
                    let d = 2.0 * self.h0[alpha][i][j] - self.h[alpha][i][j] - self.h_star[alpha][i][j];
                    worst = worst.max(d.abs());
                }
            }
        }
        worst
    }

    /// `max |g(A_ξ e_i, e_j) − h^ξ_ij|` plus the starred counterpart.
    pub fn shape_duality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for alpha in 0..self.codim {
            for i in 0..2 {
                for j in 0..2 {
                    worst = worst.max((self.shape[alpha][(i, j)] - self.h[alpha][i][j]).abs());
                    worst =
                        worst.max((self.shape_star[alpha][(i, j)] - self.h_star[alpha][i][j]).abs());
                }
            }
        }
        worst
    }
}

/// Full pointwise analysis of a surface point: base geometry, adapted frame,
/// frame coefficients and the fundamental forms for all three connections.
#[derive(Debug)]
pub struct SurfacePoint {
    pub u: [f64; 2],
    pub p: Vector,
    pub xu: [Vector; 2],
    pub ambient_metric: Matrix,
    pub induced: Matrix,
    pub induced_inv: Matrix,
    pub frame: AdaptedFrame,
    /// `e_i = Σ_a coeffs[i][a] ∂_a f`.
    pub frame_coeffs: [[f64; 2]; 2],
    pub forms: FundamentalForms,
}

/// Analyze a surface point: frames, induced metric and all three sets of
/// fundamental forms.
pub fn analyze(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    u: [f64; 2],
    scheme: &FdScheme,
) -> Result<SurfacePoint> {
    let base = surface_base(m, s, u, scheme.step())?;
    let frame = frame_from_base(&base, None)?;
    let primal = conn_data(m, &base, Connection::Primal, scheme)?;
    let dual = conn_data(m, &base, Connection::Dual, scheme)?;
    let levi_civita = conn_data(m, &base, Connection::LeviCivita, scheme)?;

    let dim = base.p.dim();
    let codim = dim - 2;
    let g = &base.ambient;

    // e_i in the coordinate tangent basis, via the induced metric.
    let mut coeffs = [[0.0; 2]; 2];
    for i in 0..2 {
        for a in 0..2 {
            let mut acc = 0.0;
            for e in 0..2 {
                acc += base.induced_inv[(a, e)] * g.inner(&base.xu[e], &frame.tangent[i]);
            }
            coeffs[i][a] = acc;
        }
    }

    let frame_comps = |data: &ConnData| -> [[[f64; 2]; 2]; 2] {
        let mut out = [[[0.0; 2]; 2]; 2];
        for (alpha, n) in frame.normal.iter().enumerate() {
            let mut coord = [[0.0; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    coord[a][b] = g.inner(&data.d[a][b], n);
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    let mut acc = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            acc += coeffs[i][a] * coeffs[j][b] * coord[a][b];
                        }
                    }
                    out[alpha][i][j] = acc;
                }
            }
        }
        out
    };

    let h = frame_comps(&primal);
    let h_star = frame_comps(&dual);
    let h0 = frame_comps(&levi_civita);

    let shape_of = |comps: &[[[f64; 2]; 2]; 2]| -> [Matrix; 2] {
        let mut shapes = [Matrix::zeros(2); 2];
        for alpha in 0..codim {
            for i in 0..2 {
                for j in 0..2 {
                    shapes[alpha][(i, j)] = comps[alpha][i][j];
                }
            }
        }
        shapes
    };
    let shape = shape_of(&h);
    let shape_star = shape_of(&h_star);

    let mut mean = [0.0; 2];
    let mut mean_star = [0.0; 2];
    let mut norm_sq = 0.0;
    let mut norm_star_sq = 0.0;
    for alpha in 0..codim {
        mean[alpha] = 0.5 * (h[alpha][0][0] + h[alpha][1][1]);
        mean_star[alpha] = 0.5 * (h_star[alpha][0][0] + h_star[alpha][1][1]);
        norm_sq += mean[alpha] * mean[alpha];
        norm_star_sq += mean_star[alpha] * mean_star[alpha];
    }

    let forms = FundamentalForms {
        codim,
        h,
        h_star,
        h0,
        shape,
        shape_star,
        mean,
        mean_star,
        mean_norm: math::sqrt(norm_sq),
        mean_star_norm: math::sqrt(norm_star_sq),
    };

    Ok(SurfacePoint {
        u,
        p: base.p,
        xu: base.xu,
        ambient_metric: base.ambient,
        induced: base.induced,
        induced_inv: base.induced_inv,
        frame,
        frame_coeffs: coeffs,
        forms,
    })
}

/// Fundamental forms at a parameter point.
pub fn fundamental_forms(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    u: [f64; 2],
    scheme: &FdScheme,
) -> Result<FundamentalForms> {
    Ok(analyze(m, s, u, scheme)?.forms)
}

/// Curvature components of an induced connection over the 2-dimensional
/// parameter domain, `R^d_{cab}` indexed `[d][c][a][b]`.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceCurvature {
    pub comps: [[[[f64; 2]; 2]; 2]; 2],
}

impl SurfaceCurvature {
    /// `g(R(x, y)z, w)` with a 2-dimensional metric and vectors.
    pub fn pairing(&self, g: &Matrix, x: &Vector, y: &Vector, z: &Vector, w: &Vector) -> f64 {
        let mut acc = 0.0;
        for d in 0..2 {
            let mut lowered = 0.0;
            for e in 0..2 {
                lowered += g[(d, e)] * w[e];
            }
            for c in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        acc += lowered * self.comps[d][c][a][b] * z[c] * x[a] * y[b];
                    }
                }
            }
        }
        acc
    }
}

/// Curvature of the induced connection on the parameter domain, by central
/// differences of the induced Christoffel field at the oracle step. This is
/// the independent route to the intrinsic curvature; the Gauss equations
/// provide the algebraic one.
pub fn induced_curvature_fd(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    u: [f64; 2],
    conn: Connection,
) -> Result<SurfaceCurvature> {
    let scheme = FdScheme::oracle();
    let h = scheme.step();
    let gamma_at = |w: [f64; 2]| -> Result<[[[f64; 2]; 2]; 2]> {
        let base = surface_base(m, s, w, h)?;
        Ok(conn_data(m, &base, conn, &scheme)?.gamma)
    };
    let center = gamma_at(u)?;
    let mut dgamma = [[[[0.0; 2]; 2]; 2]; 2];
    for e in 0..2 {
        let mut up = u;
        up[e] += h;
        let mut dn = u;
        dn[e] -= h;
        let plus = gamma_at(up)?;
        let minus = gamma_at(dn)?;
        for c in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    dgamma[e][c][a][b] = (plus[c][a][b] - minus[c][a][b]) / (2.0 * h);
                }
            }
        }
    }
    let mut out = SurfaceCurvature { comps: [[[[0.0; 2]; 2]; 2]; 2] };
    for d in 0..2 {
        for c in 0..2 {
            let mut acc = dgamma[0][d][1][c] - dgamma[1][d][0][c];
            for mm in 0..2 {
                acc += center[d][0][mm] * center[mm][1][c] - center[d][1][mm] * center[mm][0][c];
            }
            out.comps[d][c][0][1] = acc;
            out.comps[d][c][1][0] = -acc;
        }
    }
    Ok(out)
}

fn frame_vec2(coeffs: &[[f64; 2]; 2], i: usize) -> Vector {
    Vector::from_slice(&coeffs[i])
}

/// Residuals of the Gauss equations for the primal and dual connections,
/// evaluated on `(e1, e2, e1, e2)`: ambient curvature term minus intrinsic
/// curvature (independent finite-difference route) minus the form products.
pub fn gauss_equation_residual(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    u: [f64; 2],
    scheme: &FdScheme,
) -> Result<(f64, f64)> {
    let sp = analyze(m, s, u, scheme)?;
    gauss_equation_residual_at(m, s, &sp, scheme)
}

pub(crate) fn gauss_equation_residual_at(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    sp: &SurfacePoint,
    scheme: &FdScheme,
) -> Result<(f64, f64)> {
    let g = &sp.ambient_metric;
    let e1 = &sp.frame.tangent[0];
    let e2 = &sp.frame.tangent[1];
    let fe1 = frame_vec2(&sp.frame_coeffs, 0);
    let fe2 = frame_vec2(&sp.frame_coeffs, 1);
    let forms = &sp.forms;

    let mut residuals = [0.0; 2];
    for (slot, conn) in [(0, Connection::Primal), (1, Connection::Dual)] {
        let ambient = curvature(|q| connection_at(m, conn, q, scheme), &sp.p, scheme)?;
        let amb = ambient.pairing(g, e1, e2, e1, e2);
        let induced = induced_curvature_fd(m, s, sp.u, conn)?;
        let intrinsic = induced.pairing(&sp.induced, &fe1, &fe2, &fe1, &fe2);
        let (ha, hb) = match conn {
            Connection::Primal => (&forms.h, &forms.h_star),
            _ => (&forms.h_star, &forms.h),
        };
        let mut products = 0.0;
        for alpha in 0..forms.codim {
            products += ha[alpha][0][0] * hb[alpha][1][1];
            products -= hb[alpha][0][1] * ha[alpha][0][1];
        }
        residuals[slot] = (amb - intrinsic - products).abs();
    }
    Ok((residuals[0], residuals[1]))
}

/// Residuals of the Codazzi equations (normal components) for the primal and
/// dual connections, with `X = ∂_1`, `Y = ∂_2`, `Z ∈ {∂_1, ∂_2}` and the
/// antisymmetrized right-hand side
/// `[∇⊥_X h(Y,Z) − h(∇_X Y, Z) − h(Y, ∇_X Z)] − [X ↔ Y]`.
pub fn codazzi_residual(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    u: [f64; 2],
    _scheme: &FdScheme,
) -> Result<(f64, f64)> {
    let scheme = FdScheme::oracle();
    let h = scheme.step();
    let mut residuals = [0.0; 2];
    for (slot, conn) in [(0, Connection::Primal), (1, Connection::Dual)] {
        let base = surface_base(m, s, u, h)?;
        let center = conn_data(m, &base, conn, &scheme)?;
        let g = &base.ambient;

        let perp = |v: &Vector| -> Vector {
            let mut out = *v;
            for c in 0..2 {
                let mut coeff = 0.0;
                for e in 0..2 {
                    coeff += base.induced_inv[(c, e)] * g.inner(v, &base.xu[e]);
                }
                out = out.axpy(-coeff, &base.xu[c]);
            }
            out
        };

        // ĥ field at the four stencil points.
        let hfield = |w: [f64; 2]| -> Result<[[Vector; 2]; 2]> {
            let b = surface_base(m, s, w, h)?;
            Ok(conn_data(m, &b, conn, &scheme)?.hnormal)
        };
        let mut stencil = [[None, None], [None, None]];
        for dir in 0..2 {
            let mut up = u;
            up[dir] += h;
            let mut dn = u;
            dn[dir] -= h;
            stencil[dir] = [Some(hfield(up)?), Some(hfield(dn)?)];
        }

        // ∇⊥ of the normal field h(∂_b, ∂_c) along ∂_dir.
        let cov_perp = |dir: usize, b: usize, c: usize| -> Vector {
            let plus = stencil[dir][0].as_ref().unwrap();
            let minus = stencil[dir][1].as_ref().unwrap();
            let deriv = plus[b][c].sub(&minus[b][c]).scale(1.0 / (2.0 * h));
            let corrected =
                deriv.add(&center.gamma_ambient.contract(&base.xu[dir], &center.hnormal[b][c]));
            perp(&corrected)
        };

        let ambient = curvature(|q| connection_at(m, conn, q, &scheme), &base.p, &scheme)?;

        let mut worst = 0.0_f64;
        for c in 0..2 {
            let lhs = perp(&ambient.apply(&base.xu[0], &base.xu[1], &base.xu[c]));
            let term = |x: usize, y: usize| -> Vector {
                let mut t = cov_perp(x, y, c);
                for dcoef in 0..2 {
                    t = t.axpy(-center.gamma[dcoef][x][y], &center.hnormal[dcoef][c]);
                    t = t.axpy(-center.gamma[dcoef][x][c], &center.hnormal[y][dcoef]);
                }
                t
            };
            let e = term(0, 1).sub(&term(1, 0)).sub(&lhs);
            worst = worst.max(math::sqrt(g.inner(&e, &e)));
        }
        residuals[slot] = worst;
    }
    Ok((residuals[0], residuals[1]))
}

/// Normal-curvature pairings `g(R⊥(e1, e2) e3, e4)` and the dual value, by
/// the algebraic Ricci-equation route: ambient curvature term plus the shape
/// operator commutators. Requires a 4-dimensional ambient manifold.
pub fn normal_curvature_tensor(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    u: [f64; 2],
    scheme: &FdScheme,
) -> Result<(f64, f64)> {
    let sp = analyze(m, s, u, scheme)?;
    normal_curvature_tensor_at(m, &sp, scheme)
}

pub(crate) fn normal_curvature_tensor_at(
    m: &StatisticalManifold,
    sp: &SurfacePoint,
    scheme: &FdScheme,
) -> Result<(f64, f64)> {
    if m.dim() != 4 {
        return Err(Error::WrongCodimension { dim: m.dim() });
    }
    let g = &sp.ambient_metric;
    let e1 = &sp.frame.tangent[0];
    let e2 = &sp.frame.tangent[1];
    let n1 = &sp.frame.normal[0];
    let n2 = &sp.frame.normal[1];

    let amb = curvature(|q| m.primal_at(q), &sp.p, scheme)?.pairing(g, e1, e2, n1, n2);
    let amb_star =
        curvature(|q| m.dual_at(q, scheme), &sp.p, scheme)?.pairing(g, e1, e2, n1, n2);

    // g([P, Q] e1, e2) in the orthonormal tangent frame is (PQ − QP)[1][0].
    let commutator_entry = |p: &Matrix, q: &Matrix| -> f64 {
        let pq = p.mul_mat(q);
        let qp = q.mul_mat(p);
        pq[(1, 0)] - qp[(1, 0)]
    };
    let forms = &sp.forms;
    let primal = amb + commutator_entry(&forms.shape_star[0], &forms.shape[1]);
    let dual = amb_star + commutator_entry(&forms.shape[0], &forms.shape_star[1]);
    Ok((primal, dual))
}

/// Independent finite-difference route to the same normal-curvature
/// pairings: differentiate the normal connection coefficients of the frame
/// field directly. Cross-checks [`normal_curvature_tensor`].
pub fn normal_curvature_fd(
    m: &StatisticalManifold,
    s: &SurfaceImmersion,
    u: [f64; 2],
    scheme: &FdScheme,
) -> Result<(f64, f64)> {
    if m.dim() != 4 {
        return Err(Error::WrongCodimension { dim: m.dim() });
    }
    let center_base = surface_base(m, s, u, scheme.step())?;
    let center_frame = frame_from_base(&center_base, None)?;
    let seeds = center_frame.seeds.clone();
    let root_det = math::sqrt(center_base.induced.determinant());

    let oracle = FdScheme::oracle();
    let h = oracle.step();

    // Normal-connection coefficients ω[a][β][γ] = g(∇̃_{∂_a} n_β, n_γ) of the
    // frame field at a parameter point.
    let omega = |w: [f64; 2], conn: Connection| -> Result<[[[f64; 2]; 2]; 2]> {
        let base = surface_base(m, s, w, h)?;
        let frame = frame_from_base(&base, Some(&seeds))?;
        let gamma = connection_at(m, conn, &base.p, &oracle)?;
        let mut out = [[[0.0; 2]; 2]; 2];
        for a in 0..2 {
            let mut up = w;
            up[a] += h;
            let mut dn = w;
            dn[a] -= h;
            let fp = frames_with_seeds(m, s, up, h, &seeds)?;
            let fm = frames_with_seeds(m, s, dn, h, &seeds)?;
            for beta in 0..2 {
                let deriv = fp.normal[beta].sub(&fm.normal[beta]).scale(1.0 / (2.0 * h));
                let cov = deriv.add(&gamma.contract(&base.xu[a], &frame.normal[beta]));
                for g_idx in 0..2 {
                    out[a][beta][g_idx] = base.ambient.inner(&cov, &frame.normal[g_idx]);
                }
            }
        }
        Ok(out)
    };

    let mut values = [0.0; 2];
    for (slot, conn) in [(0, Connection::Primal), (1, Connection::Dual)] {
        let center = omega(u, conn)?;
        let mut domega = [[[[0.0; 2]; 2]; 2]; 2];
        for e in 0..2 {
            let mut up = u;
            up[e] += h;
            let mut dn = u;
            dn[e] -= h;
            let plus = omega(up, conn)?;
            let minus = omega(dn, conn)?;
            for a in 0..2 {
                for beta in 0..2 {
                    for g_idx in 0..2 {
                        domega[e][a][beta][g_idx] =
                            (plus[a][beta][g_idx] - minus[a][beta][g_idx]) / (2.0 * h);
                    }
                }
            }
        }
        // g(R⊥(∂_0, ∂_1) n_0, n_1), then normalized to the orthonormal
        // tangent pair via the area factor.
        let mut val = domega[0][1][0][1] - domega[1][0][0][1];
        for delta in 0..2 {
            val += center[1][0][delta] * center[0][delta][1];
            val -= center[0][0][delta] * center[1][delta][1];
        }
        values[slot] = val / root_det;
    }
    Ok((values[0], values[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{build_manifold, build_surface, SurfaceKind, SurfaceSpec};

    fn scheme() -> FdScheme {
        FdScheme::default()
    }

    fn plane_r3() -> (StatisticalManifold, SurfaceImmersion) {
        let m = build_manifold("euclidean3-trivial", 0.0).unwrap();
        let s = build_surface("euclidean3-trivial", 3, &SurfaceSpec::new(SurfaceKind::Plane)).unwrap();
        (m, s)
    }

    fn horosphere_h3() -> (StatisticalManifold, SurfaceImmersion) {
        let m = build_manifold("h3-hessian", 0.0).unwrap();
        let s =
            build_surface("h3-hessian", 3, &SurfaceSpec::new(SurfaceKind::Horosphere)).unwrap();
        (m, s)
    }

    fn sphere(dim: usize, r: f64) -> (StatisticalManifold, SurfaceImmersion) {
        let name = if dim == 3 { "euclidean3-trivial" } else { "euclidean4-trivial" };
        let m = build_manifold(name, 0.0).unwrap();
        let spec = SurfaceSpec { radius: r, ..SurfaceSpec::new(SurfaceKind::Sphere) };
        let s = build_surface(name, dim, &spec).unwrap();
        (m, s)
    }

    fn torus() -> (StatisticalManifold, SurfaceImmersion) {
        let m = build_manifold("euclidean4-trivial", 0.0).unwrap();
        let s = build_surface("euclidean4-trivial", 4, &SurfaceSpec::new(SurfaceKind::Torus)).unwrap();
        (m, s)
    }

    #[test]
    fn frames_plane_recovers_coordinate_frame() {
        let (m, s) = plane_r3();
        let f = frames(&m, &s, [0.2, -0.3], &scheme()).unwrap();
        assert!(f.tangent[0].sub(&Vector::from_slice(&[1.0, 0.0, 0.0])).max_abs() < 1e-10);
        assert!(f.tangent[1].sub(&Vector::from_slice(&[0.0, 1.0, 0.0])).max_abs() < 1e-10);
        assert!(f.normal[0].sub(&Vector::from_slice(&[0.0, 0.0, 1.0])).max_abs() < 1e-10);
    }

    #[test]
    fn frames_horosphere_is_coordinate_frame_at_unit_height() {
        // The conformal factor is 1 at y3 = 1.
        let (m, s) = horosphere_h3();
        let f = frames(&m, &s, [0.4, 0.1], &scheme()).unwrap();
        assert!(f.tangent[0].sub(&Vector::from_slice(&[1.0, 0.0, 0.0])).max_abs() < 1e-10);
        assert!(f.tangent[1].sub(&Vector::from_slice(&[0.0, 1.0, 0.0])).max_abs() < 1e-10);
        assert!(f.normal[0].sub(&Vector::from_slice(&[0.0, 0.0, 1.0])).max_abs() < 1e-10);
    }

    #[test]
    fn frames_tilted_graph() {
        let m = build_manifold("euclidean3-trivial", 0.0).unwrap();
        let s = SurfaceImmersion::new(
            Box::new(|u, v| Vector::from_slice(&[u, v, u])),
            [[-1.0, 1.0], [-1.0, 1.0]],
            [17, 17],
        );
        let f = frames(&m, &s, [0.0, 0.0], &scheme()).unwrap();
        let inv_sqrt2 = 1.0 / math::sqrt(2.0);
        assert!(f.tangent[0].sub(&Vector::from_slice(&[inv_sqrt2, 0.0, inv_sqrt2])).max_abs() < 1e-10);
    }

    #[test]
    fn frames_are_orthonormal_and_oriented_in_dim4() {
        let (m, s) = torus();
        let f = frames(&m, &s, [0.7, 1.9], &scheme()).unwrap();
        let g = m.metric_at(&s.value([0.7, 1.9])).unwrap();
        assert!(f.orthonormality_defect(&g) < 1e-12);
        let mut cols = Matrix::zeros(4);
        for (c, v) in f.tangent.iter().chain(f.normal.iter()).enumerate() {
            for r in 0..4 {
                cols[(r, c)] = v[r];
            }
        }
        assert!(cols.determinant() > 0.0);
    }

    #[test]
    fn degenerate_immersion_is_rejected() {
        let m = build_manifold("euclidean3-trivial", 0.0).unwrap();
        let s = SurfaceImmersion::new(
            Box::new(|u, v| Vector::from_slice(&[u + v, u + v, 0.0])),
            [[-1.0, 1.0], [-1.0, 1.0]],
            [17, 17],
        );
        let err = analyze(&m, &s, [0.0, 0.0], &scheme()).unwrap_err();
        assert_eq!(err, Error::DegenerateInput);
    }

    #[test]
    fn forms_plane_vanish() {
        let (m, s) = plane_r3();
        let forms = fundamental_forms(&m, &s, [0.1, 0.2], &scheme()).unwrap();
        for alpha in 0..forms.codim {
            for i in 0..2 {
                for j in 0..2 {
                    assert!(forms.h[alpha][i][j].abs() < 1e-8);
                    assert!(forms.h_star[alpha][i][j].abs() < 1e-8);
                }
            }
        }
        assert!(forms.mean_norm < 1e-8);
        assert!(forms.mean_star_norm < 1e-8);
    }

    #[test]
    fn forms_horosphere_match_hand_values() {
        // ∇̃_{∂_i}∂_j = 2 δ_ij (y3)^-1 ∂_3, so h³ = 2 δ at y3 = 1, while the
        // dual connection is tangential there: h* = 0.
        let (m, s) = horosphere_h3();
        let forms = fundamental_forms(&m, &s, [-0.2, 0.5], &scheme()).unwrap();
        assert!((forms.h[0][0][0] - 2.0).abs() < 1e-9);
        assert!((forms.h[0][1][1] - 2.0).abs() < 1e-9);
        assert!(forms.h[0][0][1].abs() < 1e-9);
        for i in 0..2 {
            for j in 0..2 {
                assert!(forms.h_star[0][i][j].abs() < 1e-8);
            }
        }
        assert!(forms.mean_star_norm < 1e-8);
        assert!((forms.mean_norm - 2.0).abs() < 1e-8);
    }

    #[test]
    fn forms_sphere_match_round_shape_oracle() {
        // Classical round sphere: h = h* = h0, |h_ij| = δ_ij / r against the
        // outward or inward unit normal, mean norms 1/r.
        let r = 2.0;
        let (m, s) = sphere(3, r);
        let forms = fundamental_forms(&m, &s, [1.1, 2.0], &scheme()).unwrap();
        let sign = forms.h[0][0][0].signum();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { sign / r } else { 0.0 };
                assert!((forms.h[0][i][j] - want).abs() < 1e-6, "h[{i}][{j}]");
                assert!((forms.h_star[0][i][j] - want).abs() < 1e-6);
                assert!((forms.h0[0][i][j] - want).abs() < 1e-6);
            }
        }
        assert!((forms.mean_norm - 1.0 / r).abs() < 1e-7);
        assert!((forms.mean_star_norm - 1.0 / r).abs() < 1e-7);
    }

    #[test]
    fn h0_is_average_of_dual_pair() {
        let (m, s) = horosphere_h3();
        let forms = fundamental_forms(&m, &s, [0.3, -0.4], &scheme()).unwrap();
        assert!(forms.average_identity_defect() < 1e-12);
        let (m4, s4) = torus();
        let forms4 = fundamental_forms(&m4, &s4, [0.9, 2.3], &scheme()).unwrap();
        assert!(forms4.average_identity_defect() < 1e-12);
    }

    #[test]
    fn shape_operators_are_metric_duals_of_forms() {
        let (m, s) = sphere(4, 1.0);
        let forms = fundamental_forms(&m, &s, [0.8, 1.4], &scheme()).unwrap();
        assert!(forms.shape_duality_defect() < 1e-10);
    }

    #[test]
    fn swapping_connections_swaps_forms_exactly() {
        // A manifold whose primal connection is the dual field of h3 has the
        // original primal as its dual; h and h* trade places bitwise.
        let m = build_manifold("h3-hessian", 0.0).unwrap();
        let scheme = scheme();
        let swapped = {
            let inner = build_manifold("h3-hessian", 0.0).unwrap();
            let sch = scheme;
            StatisticalManifold::new(
                3,
                Box::new(|p: &Vector| p[2] > 0.0),
                Box::new({
                    let mm = build_manifold("h3-hessian", 0.0).unwrap();
                    move |p: &Vector| mm.metric_at(p).unwrap()
                }),
                Box::new(move |p: &Vector| inner.dual_at(p, &sch).unwrap()),
            )
            .with_levi_civita(Box::new({
                let mm = build_manifold("h3-hessian", 0.0).unwrap();
                move |p: &Vector| mm.levi_civita_at(p, &sch).unwrap()
            }))
            .with_claimed_c(0.0)
        };
        let s = build_surface("h3-hessian", 3, &SurfaceSpec::new(SurfaceKind::Horosphere)).unwrap();
        let u = [0.25, -0.35];
        let original = fundamental_forms(&m, &s, u, &scheme).unwrap();
        let flipped = fundamental_forms(&swapped, &s, u, &scheme).unwrap();
        for alpha in 0..original.codim {
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(original.h[alpha][i][j], flipped.h_star[alpha][i][j]);
                    assert_eq!(original.h_star[alpha][i][j], flipped.h[alpha][i][j]);
                }
            }
        }
        assert_eq!(original.mean_norm, flipped.mean_star_norm);
        assert_eq!(original.mean_star_norm, flipped.mean_norm);
    }

    #[test]
    fn gauss_equation_residual_examples() {
        let (m, s) = plane_r3();
        let (rp, rd) = gauss_equation_residual(&m, &s, [0.0, 0.1], &scheme()).unwrap();
        assert!(rp < 1e-9 && rd < 1e-9, "plane: {rp} {rd}");

        let (m, s) = horosphere_h3();
        let (rp, rd) = gauss_equation_residual(&m, &s, [0.3, 0.2], &scheme()).unwrap();
        assert!(rp <= 1e-5 && rd <= 1e-5, "horosphere: {rp} {rd}");

        let (m, s) = sphere(3, 1.0);
        let (rp, rd) = gauss_equation_residual(&m, &s, [1.2, 2.5], &scheme()).unwrap();
        assert!(rp <= 1e-5 && rd <= 1e-5, "sphere: {rp} {rd}");
    }

    #[test]
    fn codazzi_residual_examples() {
        let (m, s) = plane_r3();
        let (rp, rd) = codazzi_residual(&m, &s, [0.4, -0.2], &scheme()).unwrap();
        assert!(rp < 1e-9 && rd < 1e-9, "plane: {rp} {rd}");

        let (m, s) = sphere(3, 1.0);
        let (rp, rd) = codazzi_residual(&m, &s, [1.0, 1.8], &scheme()).unwrap();
        assert!(rp <= 1e-4 && rd <= 1e-4, "sphere: {rp} {rd}");

        let (m, s) = horosphere_h3();
        let (rp, rd) = codazzi_residual(&m, &s, [-0.3, 0.6], &scheme()).unwrap();
        assert!(rp <= 1e-4 && rd <= 1e-4, "horosphere: {rp} {rd}");
    }

    #[test]
    fn normal_curvature_vanishes_for_sphere_and_torus() {
        let (m, s) = sphere(4, 1.5);
        let (a, b) = normal_curvature_tensor(&m, &s, [1.0, 2.2], &scheme()).unwrap();
        assert!(a.abs() < 1e-6 && b.abs() < 1e-6, "sphere: {a} {b}");

        let (m, s) = torus();
        let (a, b) = normal_curvature_tensor(&m, &s, [0.6, 2.8], &scheme()).unwrap();
        assert!(a.abs() < 1e-6 && b.abs() < 1e-6, "torus: {a} {b}");
    }

    #[test]
    fn normal_curvature_requires_dim4() {
        let (m, s) = plane_r3();
        let err = normal_curvature_tensor(&m, &s, [0.0, 0.0], &scheme()).unwrap_err();
        assert_eq!(err, Error::WrongCodimension { dim: 3 });
        let err = normal_curvature_fd(&m, &s, [0.0, 0.0], &scheme()).unwrap_err();
        assert_eq!(err, Error::WrongCodimension { dim: 3 });
    }

    #[test]
    fn normal_curvature_fd_matches_algebraic_route() {
        let (m, s) = torus();
        for u in [[0.6, 2.8], [1.4, 0.9]] {
            let (a, b) = normal_curvature_tensor(&m, &s, u, &scheme()).unwrap();
            let (fa, fb) = normal_curvature_fd(&m, &s, u, &scheme()).unwrap();
            assert!((a - fa).abs() <= 1e-4, "{a} vs {fa}");
            assert!((b - fb).abs() <= 1e-4, "{b} vs {fb}");
        }
    }

    #[test]
    fn tensoriality_frame_field_extension_agrees() {
        // h evaluated on frame vectors by differentiating the frame field
        // directly must match the coordinate-basis computation.
        let (m, s) = sphere(3, 1.0);
        let u = [1.2, 2.0];
        let sch = scheme();
        let sp = analyze(&m, &s, u, &sch).unwrap();
        let seeds = sp.frame.seeds.clone();
        let h = FdScheme::ORACLE_STEP;
        let g = &sp.ambient_metric;
        let gamma = m.primal_at(&sp.p).unwrap();

        let perp = |v: &Vector| -> Vector {
            let mut out = *v;
            for c in 0..2 {
                let mut coeff = 0.0;
                for e in 0..2 {
                    coeff += sp.induced_inv[(c, e)] * g.inner(v, &sp.xu[e]);
                }
                out = out.axpy(-coeff, &sp.xu[c]);
            }
            out
        };

        for i in 0..2 {
            for j in 0..2 {
                // Directional derivative of the tangent-frame field e_j
                // along e_i = Σ_a B[i][a] ∂_a.
                let mut cov = Vector::zeros(3);
                for a in 0..2 {
                    let mut up = u;
                    up[a] += h;
                    let mut dn = u;
                    dn[a] -= h;
                    let fp = frames_with_seeds(&m, &s, up, h, &seeds).unwrap();
                    let fm = frames_with_seeds(&m, &s, dn, h, &seeds).unwrap();
                    let deriv = fp.tangent[j].sub(&fm.tangent[j]).scale(1.0 / (2.0 * h));
                    let term = deriv.add(&gamma.contract(&sp.xu[a], &sp.frame.tangent[j]));
                    cov = cov.axpy(sp.frame_coeffs[i][a], &term);
                }
                let direct = g.inner(&perp(&cov), &sp.frame.normal[0]);
                let transformed = sp.forms.h[0][i][j];
                assert!(
                    (direct - transformed).abs() <= 1e-4,
                    "({i},{j}): {direct} vs {transformed}"
                );
            }
        }
    }
}
