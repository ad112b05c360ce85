//! Piecewise-linear finite elements for the layered diffraction problem and
//! for its Robin limit, plus the derived fields living on the reference
//! layer `Σ₁`.

use rayon::prelude::*;

use crate::geometry::{BoundaryField, LayerGeometry};
use crate::linalg::{solve_spd, CsrMatrix, SolveStats, SolverOptions, TripletBuilder};
use crate::meshing::{BoundaryEdge, LayerMesh, Region};
use crate::quadrature::EDGE_GAUSS;
use crate::{Error, Point, Result};

/// Source term `f`, evaluated on the interior only.
pub type Source<'a> = &'a (dyn Fn(Point) -> f64 + Sync);

const ASSEMBLY_CHUNK: usize = 2048;

/// Per-vertex coefficients of a continuous piecewise-linear function.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Periodic linear interpolation in the curve parameter of the values at
    /// the interface nodes.
    pub fn boundary_trace(&self, mesh: &LayerMesh, t: f64) -> f64 {
        let (i, frac) = mesh.locate_parameter(t);
        let j = (i + 1) % mesh.boundary_panels();
        (1.0 - frac) * self.values[i] + frac * self.values[j]
    }

    /// Writes `vertex,x,y,value` rows.
    pub fn write_csv<W: std::io::Write>(&self, mesh: &LayerMesh, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# schema: field v1")?;
        writeln!(w, "vertex,x,y,value")?;
        for (k, (p, v)) in mesh.vertices().iter().zip(&self.values).enumerate() {
            writeln!(w, "{k},{:.17e},{:.17e},{:.17e}", p[0], p[1], v)?;
        }
        Ok(())
    }
}

/// Samples on the uniform grid `tᵢ = i/n_t`, `s_j = j/(n_s − 1)` covering the
/// reference layer `Σ₁`: the point `(tᵢ, s_j)` is `γ(tᵢ) + s_j·h(tᵢ)·ν₀(tᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceLayerField {
    n_t: usize,
    n_s: usize,
    values: Vec<f64>,
}

impl ReferenceLayerField {
    pub fn from_fn(
        n_t: usize,
        n_s: usize,
        mut f: impl FnMut(f64, f64) -> Result<f64>,
    ) -> Result<Self> {
        if n_t < 4 || n_s < 2 {
            return Err(Error::InvalidParameter(format!(
                "reference grid {n_t}×{n_s} is too coarse"
            )));
        }
        let mut values = Vec::with_capacity(n_t * n_s);
        for i in 0..n_t {
            for j in 0..n_s {
                values.push(f(i as f64 / n_t as f64, j as f64 / (n_s - 1) as f64)?);
            }
        }
        Ok(Self { n_t, n_s, values })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_t, self.n_s)
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 / self.n_t as f64
    }

    pub fn s(&self, j: usize) -> f64 {
        j as f64 / (self.n_s - 1) as f64
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i % self.n_t) * self.n_s + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise map, e.g. to build perturbed profiles.
    pub fn map(&self, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n_t {
            for j in 0..self.n_s {
                out.values[i * self.n_s + j] = f(self.t(i), self.s(j), self.get(i, j));
            }
        }
        out
    }

    /// `‖a − b‖_{L²(Σ₁)}` with the exact area element `(1 + d k)·h·|γ'| ds dt`
    /// (trapezoid rule in both directions, periodic in `t`).
    pub fn l2_distance(&self, other: &Self, geom: &LayerGeometry) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::Mismatch("reference grids differ".into()));
        }
        let ds = 1.0 / (self.n_s - 1) as f64;
        let dt = 1.0 / self.n_t as f64;
        let mut acc = 0.0;
        for i in 0..self.n_t {
            let t = self.t(i);
            let f = geom.curve().frame(t);
            let h = geom.h().value(t);
            for j in 0..self.n_s {
                let w = if j == 0 || j + 1 == self.n_s {
                    0.5
                } else {
                    1.0
                };
                let d = self.s(j) * h;
                let diff = self.get(i, j) - other.get(i, j);
                acc += w * diff * diff * (1.0 + d * f.curvature) * h * f.speed * ds * dt;
            }
        }
        Ok(acc.sqrt())
    }

    /// Writes `t,s,value` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# schema: reference_layer v1")?;
        writeln!(w, "t,s,value")?;
        for i in 0..self.n_t {
            for j in 0..self.n_s {
                writeln!(
                    w,
                    "{:.17e},{:.17e},{:.17e}",
                    self.t(i),
                    self.s(j),
                    self.get(i, j)
                )?;
            }
        }
        Ok(())
    }
}

/// Gradients of the barycentric coordinates and the area of a triangle.
pub(crate) fn p1_gradients(p: [Point; 3]) -> ([[f64; 2]; 3], f64) {
    let area = crate::meshing::signed_area(p[0], p[1], p[2]);
    let g = |a: Point, b: Point| [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
    ([g(p[1], p[2]), g(p[2], p[0]), g(p[0], p[1])], area)
}

/// Gradient of the piecewise-linear field `u` on triangle `k`.
pub(crate) fn element_gradient(mesh: &LayerMesh, values: &[f64], k: usize) -> ([f64; 2], f64) {
    let (grads, area) = p1_gradients(mesh.triangle_points(k));
    let tri = mesh.triangles()[k];
    let mut g = [0.0; 2];
    for (a, grad) in tri.iter().zip(grads) {
        g[0] += values[*a] * grad[0];
        g[1] += values[*a] * grad[1];
    }
    (g, area)
}

/// Stiffness matrix with conductivity `conductivity(region)`; triangles with
/// `None` are skipped.
pub(crate) fn assemble_stiffness(
    mesh: &LayerMesh,
    n: usize,
    conductivity: impl Fn(Region) -> Option<f64> + Sync,
) -> TripletBuilder {
    let tris: Vec<usize> = (0..mesh.triangles().len()).collect();
    let parts: Vec<TripletBuilder> = tris
        .par_chunks(ASSEMBLY_CHUNK)
        .map(|chunk| {
            let mut b = TripletBuilder::new(n);
            for &k in chunk {
                let Some(c) = conductivity(mesh.regions()[k]) else {
                    continue;
                };
                let (grads, area) = p1_gradients(mesh.triangle_points(k));
                let tri = mesh.triangles()[k];
                for a in 0..3 {
                    for bb in 0..3 {
                        let v =
                            c * area * (grads[a][0] * grads[bb][0] + grads[a][1] * grads[bb][1]);
                        b.add(tri[a], tri[bb], v);
                    }
                }
            }
            b
        })
        .collect();
    let mut out = TripletBuilder::new(n);
    for p in parts {
        out.extend(p);
    }
    out
}

/// Load vector `∫_Ω f φ_a` with the edge-midpoint rule (exact for quadratics).
pub(crate) fn assemble_load(mesh: &LayerMesh, n: usize, f: Source<'_>) -> Vec<f64> {
    let mut load = vec![0.0; n];
    for k in mesh.region_triangles(Region::Interior) {
        let tri = mesh.triangles()[k];
        let p = mesh.triangle_points(k);
        let area = mesh.triangle_area(k);
        let mid = |a: usize, b: usize| f([0.5 * (p[a][0] + p[b][0]), 0.5 * (p[a][1] + p[b][1])]);
        let (m01, m12, m20) = (mid(0, 1), mid(1, 2), mid(2, 0));
        load[tri[0]] += area / 6.0 * (m01 + m20);
        load[tri[1]] += area / 6.0 * (m01 + m12);
        load[tri[2]] += area / 6.0 * (m12 + m20);
    }
    load
}

/// Boundary mass `∫ α(t) φ_a φ_b` over `edges`, two Gauss points per edge.
pub(crate) fn assemble_robin(
    mesh: &LayerMesh,
    n: usize,
    edges: &[BoundaryEdge],
    alpha: impl Fn(f64) -> f64,
) -> TripletBuilder {
    let mut b = TripletBuilder::new(n);
    for e in edges {
        let len = mesh.edge_length(e);
        for (s, w) in EDGE_GAUSS {
            let a = alpha(e.parameter_at(s)) * w * len;
            let (pa, pb) = (1.0 - s, s);
            b.add(e.a, e.a, a * pa * pa);
            b.add(e.a, e.b, a * pa * pb);
            b.add(e.b, e.a, a * pa * pb);
            b.add(e.b, e.b, a * pb * pb);
        }
    }
    b
}

/// `∫ α(t) u²` over `edges` with the same rule as [`assemble_robin`].
pub(crate) fn robin_integral(
    mesh: &LayerMesh,
    values: &[f64],
    edges: &[BoundaryEdge],
    alpha: impl Fn(f64) -> f64,
) -> f64 {
    edges
        .iter()
        .map(|e| {
            let len = mesh.edge_length(e);
            EDGE_GAUSS
                .iter()
                .map(|&(s, w)| {
                    let u = (1.0 - s) * values[e.a] + s * values[e.b];
                    alpha(e.parameter_at(s)) * u * u * w * len
                })
                .sum::<f64>()
        })
        .sum()
}

fn check_layer_mesh(mesh: &LayerMesh, geom: &LayerGeometry) -> Result<()> {
    if !mesh.has_layer() {
        return Err(Error::Mismatch("mesh has no layer region".into()));
    }
    if (mesh.eps() - geom.eps()).abs() > 1e-14 * geom.eps() {
        return Err(Error::Mismatch(format!(
            "mesh was built for ε = {} but the geometry has ε = {}",
            mesh.eps(),
            geom.eps()
        )));
    }
    Ok(())
}

fn check_field(u: &ScalarField, n: usize, what: &str) -> Result<()> {
    if u.len() != n {
        return Err(Error::Mismatch(format!(
            "{what} has {} coefficients, mesh needs {n}",
            u.len()
        )));
    }
    if u.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Mismatch(format!(
            "{what} has non-finite coefficients"
        )));
    }
    Ok(())
}

pub(crate) fn check_solution(u: &ScalarField, mesh: &LayerMesh) -> Result<()> {
    check_field(u, mesh.n_vertices(), "field")
}

pub(crate) fn check_limit_solution(u: &ScalarField, mesh: &LayerMesh) -> Result<()> {
    check_field(u, mesh.n_interior_vertices(), "limit field")
}

/// Minimizer of `F_ε` over the P1 space of the layered mesh: conductivity 1
/// on the interior, `ε` on the layer, Robin mass `β` on the outer boundary
/// and load on the interior only.
pub fn solve_diffraction(
    mesh: &LayerMesh,
    geom: &LayerGeometry,
    f: Source<'_>,
    opts: &SolverOptions,
) -> Result<(ScalarField, SolveStats)> {
    check_layer_mesh(mesh, geom)?;
    let n = mesh.n_vertices();
    let eps = geom.eps();
    let beta = geom.beta();
    let mut a = assemble_stiffness(mesh, n, |r| match r {
        Region::Interior => Some(1.0),
        Region::Layer => Some(eps),
    });
    a.extend(assemble_robin(mesh, n, mesh.outer_edges(), |_| beta));
    let load = assemble_load(mesh, n, f);
    let (x, stats) = solve_spd(&a.build(), &load, opts)?;
    Ok((ScalarField::new(x), stats))
}

/// The limit problem on the interior part of a mesh, with the stiffness and
/// load assembled once so that only the Robin term changes with `h`.
#[derive(Debug, Clone)]
pub struct LimitProblem<'m> {
    mesh: &'m LayerMesh,
    stiffness: CsrMatrix,
    load: Vec<f64>,
}

impl<'m> LimitProblem<'m> {
    pub fn new(mesh: &'m LayerMesh, f: Source<'_>) -> Self {
        let n = mesh.n_interior_vertices();
        let stiffness = assemble_stiffness(mesh, n, |r| match r {
            Region::Interior => Some(1.0),
            Region::Layer => None,
        })
        .build();
        let load = assemble_load(mesh, n, f);
        Self {
            mesh,
            stiffness,
            load,
        }
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    /// Solves with Robin coefficient `β/(1 + βh(t))` on the interface.
    pub fn solve(
        &self,
        h: &BoundaryField,
        beta: f64,
        opts: &SolverOptions,
    ) -> Result<(ScalarField, SolveStats)> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "β must be positive, got {beta}"
            )));
        }
        let n = self.mesh.n_interior_vertices();
        let robin = assemble_robin(self.mesh, n, self.mesh.interface_edges(), |t| {
            beta / (1.0 + beta * h.value(t))
        })
        .build();
        let a = self.stiffness.add(&robin);
        let (x, stats) = solve_spd(&a, &self.load, opts)?;
        Ok((ScalarField::new(x), stats))
    }
}

/// Minimizer of `F₀(·, h)` on the interior of `mesh`; the result has one
/// coefficient per interior vertex.
pub fn solve_limit(
    mesh: &LayerMesh,
    h: &BoundaryField,
    beta: f64,
    f: Source<'_>,
    opts: &SolverOptions,
) -> Result<(ScalarField, SolveStats)> {
    LimitProblem::new(mesh, f).solve(h, beta, opts)
}

/// `ũ_ε = u_ε ∘ Ψ_ε` sampled on the reference grid. The layer mesh is
/// fiber-aligned, so `Ψ_ε(γ(t) + s h ν₀) = γ(t) + s ε h ν₀` is located by
/// index arithmetic: panel from `t`, fiber level from `s·m`.
pub fn pullback(
    u: &ScalarField,
    mesh: &LayerMesh,
    geom: &LayerGeometry,
    n_t: usize,
    n_s: usize,
) -> Result<ReferenceLayerField> {
    check_layer_mesh(mesh, geom)?;
    check_solution(u, mesh)?;
    let m = mesh.fibers();
    let n_b = mesh.boundary_panels();
    ReferenceLayerField::from_fn(n_t, n_s, |t, s| {
        if !(-1e-12..=1.0 + 1e-12).contains(&s) {
            return Err(Error::Mismatch(format!(
                "fiber fraction {s} outside [0, 1]"
            )));
        }
        let (i, xi) = mesh.locate_parameter(t);
        let level = (s * m as f64).clamp(0.0, m as f64);
        let j = (level.floor() as usize).min(m - 1);
        let eta = level - j as f64;
        let i1 = (i + 1) % n_b;
        let v = |ii, jj| u.values[mesh.layer_vertex(ii, jj)];
        let (ua, ub, uc, ud) = (v(i, j), v(i1, j), v(i1, j + 1), v(i, j + 1));
        Ok(if xi >= eta {
            ua + xi * (ub - ua) + eta * (uc - ub)
        } else {
            ua + xi * (uc - ud) + eta * (ud - ua)
        })
    })
}

/// `ũ₀(t, s) = u₀(γ(t))·(1 − β s h(t)/(1 + β h(t)))` on the reference grid.
pub fn limit_profile(
    u0: &ScalarField,
    mesh: &LayerMesh,
    geom: &LayerGeometry,
    n_t: usize,
    n_s: usize,
) -> Result<ReferenceLayerField> {
    limit_profile_with(u0, mesh, geom, n_t, n_s, |beta, h| beta / (1.0 + beta * h))
}

/// Like [`limit_profile`] with the slope factor `β/(1+βh)` replaced by
/// `slope(β, h)`; used for negative controls.
pub fn limit_profile_with(
    u0: &ScalarField,
    mesh: &LayerMesh,
    geom: &LayerGeometry,
    n_t: usize,
    n_s: usize,
    slope: impl Fn(f64, f64) -> f64,
) -> Result<ReferenceLayerField> {
    check_limit_solution(u0, mesh)?;
    let beta = geom.beta();
    ReferenceLayerField::from_fn(n_t, n_s, |t, s| {
        let h = geom.h().value(t);
        Ok(u0.boundary_trace(mesh, t) * (1.0 - slope(beta, h) * s * h))
    })
}

/// The recovery family `φ_ε`: `u₀` on the interior and
/// `u₀(σ(x))·(1 − β d(x)/(ε(1 + β h)))` on the layer, evaluated at every
/// vertex of the layered mesh (layer vertices through the metric projection).
pub fn recovery_sequence(
    u0: &ScalarField,
    mesh: &LayerMesh,
    geom: &LayerGeometry,
) -> Result<ScalarField> {
    check_layer_mesh(mesh, geom)?;
    check_limit_solution(u0, mesh)?;
    let n_int = mesh.n_interior_vertices();
    let eps = geom.eps();
    let beta = geom.beta();
    let mut values = u0.values.clone();
    values.reserve(mesh.n_vertices() - n_int);
    for p in &mesh.vertices()[n_int..] {
        let c = geom.project(*p)?;
        let h = geom.h().value(c.t);
        values.push(u0.boundary_trace(mesh, c.t) * (1.0 - beta * c.d / (eps * (1.0 + beta * h))));
    }
    Ok(ScalarField::new(values))
}

/// Extends a limit solution to the layered mesh by its boundary trace,
/// constant along fibers.
pub fn extend_by_trace(u0: &ScalarField, mesh: &LayerMesh) -> Result<ScalarField> {
    check_limit_solution(u0, mesh)?;
    let mut values = u0.values.clone();
    for j in 1..=mesh.fibers() {
        for i in 0..mesh.boundary_panels() {
            debug_assert_eq!(values.len(), mesh.layer_vertex(i, j));
            values.push(u0.values[i]);
        }
    }
    Ok(ScalarField::new(values))
}
