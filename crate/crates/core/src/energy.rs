//! The functionals `F_ε`, `F₀`, `F⁽¹⁾`, `δF_ε`, `G_ε` and the diagnostics
//! used in the convergence proofs.

use serde::{Deserialize, Serialize};

use crate::geometry::{jacobians_at, BoundaryField, ClosedCurve, LayerGeometry};
use crate::linalg::SolverOptions;
use crate::meshing::{LayerMesh, Region};
use crate::quadrature::{GaussLegendre, EDGE_GAUSS};
use crate::solver::{
    assemble_load, check_limit_solution, check_solution, element_gradient, robin_integral,
    solve_diffraction, solve_limit, ReferenceLayerField, ScalarField, Source,
};
use crate::{Error, Point, Result};

/// One `(geometry, ε)` instance. Mesh metadata is `None` for the radial
/// oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub f_eps: f64,
    pub f0: f64,
    pub delta: f64,
    pub f1: f64,
    pub g_eps: f64,
    pub tangential_layer_energy: f64,
    pub h1_bound_quantity: f64,
    pub eps: f64,
    pub boundary_panels: Option<usize>,
    pub fibers: Option<usize>,
}

impl EnergyReport {
    /// Fills `delta` and `g_eps` from the other fields.
    pub fn new(eps: f64, f_eps: f64, f0: f64, f1: f64) -> Self {
        Self {
            f_eps,
            f0,
            delta: delta_f(f_eps, f0, eps),
            f1,
            g_eps: approx_g(f0, f1, eps),
            tangential_layer_energy: 0.0,
            h1_bound_quantity: 0.0,
            eps,
            boundary_panels: None,
            fibers: None,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.f_eps,
            self.f0,
            self.delta,
            self.f1,
            self.g_eps,
            self.tangential_layer_energy,
            self.h1_bound_quantity,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dirichlet(mesh: &LayerMesh, values: &[f64], region: Region) -> f64 {
    mesh.region_triangles(region)
        .map(|k| {
            let (g, area) = element_gradient(mesh, values, k);
            area * (g[0] * g[0] + g[1] * g[1])
        })
        .sum()
}

/// `∫_Ω|∇u|² + ε∫_Σ|∇u|² + β∫_{∂Ω_ε}u² − 2∫_Ω f u`.
pub fn energy_f_eps(
    u: &ScalarField,
    mesh: &LayerMesh,
    geom: &LayerGeometry,
    f: Source<'_>,
) -> Result<f64> {
    check_solution(u, mesh)?;
    let load = assemble_load(mesh, mesh.n_vertices(), f);
    Ok(dirichlet(mesh, &u.values, Region::Interior)
        + geom.eps() * dirichlet(mesh, &u.values, Region::Layer)
        + geom.beta() * robin_integral(mesh, &u.values, mesh.outer_edges(), |_| 1.0)
        - 2.0 * dot(&load, &u.values))
}

/// `∫_Ω|∇u|² + β∫_{∂Ω} u²/(1+βh) − 2∫_Ω f u` on the interior of `mesh`.
pub fn energy_f0(
    u0: &ScalarField,
    mesh: &LayerMesh,
    h: &BoundaryField,
    beta: f64,
    f: Source<'_>,
) -> Result<f64> {
    check_limit_solution(u0, mesh)?;
    let load = assemble_load(mesh, mesh.n_interior_vertices(), f);
    Ok(dirichlet(mesh, &u0.values, Region::Interior)
        + robin_integral(mesh, &u0.values, mesh.interface_edges(), |t| {
            beta / (1.0 + beta * h.value(t))
        })
        - 2.0 * dot(&load, &u0.values))
}

/// Density of `F⁽¹⁾` per unit boundary length and unit `u₀²`.
pub fn first_order_density(beta: f64, h: f64, curvature: f64) -> f64 {
    let q = 1.0 + beta * h;
    beta * curvature * h * (2.0 + beta * h) / (2.0 * q * q)
}

/// `F⁽¹⁾ = β∫_{∂Ω} H h (2+βh)/(2(1+βh)²) u₀²`, integrated edge by edge on the
/// interface with the exact arc-length element of the curve.
pub fn first_order(u0: &ScalarField, mesh: &LayerMesh, geom: &LayerGeometry) -> Result<f64> {
    first_order_with(u0, mesh, geom.curve(), geom.h(), geom.beta())
}

/// [`first_order`] with the curve, profile and `β` given separately.
pub fn first_order_with(
    u0: &ScalarField,
    mesh: &LayerMesh,
    curve: &ClosedCurve,
    h: &BoundaryField,
    beta: f64,
) -> Result<f64> {
    check_limit_solution(u0, mesh)?;
    let mut total = 0.0;
    for e in mesh.interface_edges() {
        let span = e.t1 - e.t0;
        for (s, w) in EDGE_GAUSS {
            let t = e.parameter_at(s);
            let u = (1.0 - s) * u0.values[e.a] + s * u0.values[e.b];
            let frame = curve.frame(t);
            total += w
                * span
                * frame.speed
                * first_order_density(beta, h.value(t), frame.curvature)
                * u
                * u;
        }
    }
    Ok(total)
}

/// `F⁽¹⁾` for a trace given as a function on the boundary, with composite
/// Gauss quadrature in the curve parameter.
pub fn first_order_of_trace(
    geom: &LayerGeometry,
    trace: impl Fn(Point) -> f64,
    panels: usize,
) -> f64 {
    let curve = geom.curve();
    let beta = geom.beta();
    GaussLegendre::new(8).integrate_composite(0.0, 1.0, panels, |t| {
        let frame = curve.frame(t);
        let u = trace(frame.point);
        frame.speed * first_order_density(beta, geom.h().value(t), frame.curvature) * u * u
    })
}

pub fn delta_f(f_eps: f64, f0: f64, eps: f64) -> f64 {
    (f_eps - f0) / eps
}

pub fn approx_g(f0: f64, f1: f64, eps: f64) -> f64 {
    f0 + eps * f1
}

/// `∫_Σ |∇u − (∇u·ν₀)ν₀|²`. The layer quads follow the fibers, so each
/// element uses `ν₀` at the middle parameter of its boundary panel.
pub fn layer_tangential_energy(
    u: &ScalarField,
    mesh: &LayerMesh,
    geom: &LayerGeometry,
) -> Result<f64> {
    check_solution(u, mesh)?;
    if !mesh.has_layer() {
        return Err(Error::Mismatch("mesh has no layer region".into()));
    }
    let mut total = 0.0;
    for k in mesh.region_triangles(Region::Layer) {
        let (i, _) = mesh.layer_panel(k).expect("layer triangle");
        let (t0, t1) = mesh.panel_parameters(i);
        let tau = geom.curve().frame(0.5 * (t0 + t1)).tangent;
        let (g, area) = element_gradient(mesh, &u.values, k);
        let gt = g[0] * tau[0] + g[1] * tau[1];
        total += area * gt * gt;
    }
    Ok(total)
}

/// `∫_Ω|∇u|² + ε∫_Σ|∇u|² + β∫_{∂Ω_ε}u²`, the quantity bounded uniformly in `ε`.
pub fn h1_bound_quantity(u: &ScalarField, mesh: &LayerMesh, geom: &LayerGeometry) -> Result<f64> {
    check_solution(u, mesh)?;
    Ok(dirichlet(mesh, &u.values, Region::Interior)
        + geom.eps() * dirichlet(mesh, &u.values, Region::Layer)
        + geom.beta() * robin_integral(mesh, &u.values, mesh.outer_edges(), |_| 1.0))
}

/// `ε∫_{Σ_ε}|∇u|²` evaluated on the mesh.
pub fn layer_energy(u: &ScalarField, mesh: &LayerMesh, geom: &LayerGeometry) -> Result<f64> {
    check_solution(u, mesh)?;
    Ok(geom.eps() * dirichlet(mesh, &u.values, Region::Layer))
}

/// The same quantity computed on the reference layer from the pulled-back
/// field: `∫_{Σ₁}[(∂_d ũ)² + ε²((1+dk)/(1+εdk))²(∇ũ·τ)²] J_ε dz`, with
/// derivatives from cell-wise differences and a midpoint rule per cell.
pub fn pullback_layer_energy(
    field: &ReferenceLayerField,
    geom: &LayerGeometry,
    eps: f64,
) -> Result<f64> {
    let (n_t, n_s) = field.dims();
    let dt = 1.0 / n_t as f64;
    let ds = 1.0 / (n_s - 1) as f64;
    let mut total = 0.0;
    for i in 0..n_t {
        let t = (i as f64 + 0.5) * dt;
        let frame = geom.curve().frame(t);
        let h = geom.h().value(t);
        let h_t = geom.h().derivative(t);
        for j in 0..n_s - 1 {
            let s = (j as f64 + 0.5) * ds;
            let d = s * h;
            let u_s = 0.5
                * ((field.get(i, j + 1) - field.get(i, j))
                    + (field.get(i + 1, j + 1) - field.get(i + 1, j)))
                / ds;
            let u_t = 0.5
                * ((field.get(i + 1, j) - field.get(i, j))
                    + (field.get(i + 1, j + 1) - field.get(i, j + 1)))
                / dt;
            let base = 1.0 + d * frame.curvature;
            let normal = u_s / h;
            let tangential = (u_t - s * h_t / h * u_s) / (base * frame.speed);
            let jac = jacobians_at(frame.curvature, d, eps, 0.0)?;
            let factor = base / (1.0 + eps * d * frame.curvature);
            let density = normal * normal + eps * eps * factor * factor * tangential * tangential;
            total += density * jac.j_eps * base * h * frame.speed * ds * dt;
        }
    }
    Ok(total)
}

/// Residual of the limit weak equation
/// `∫_{Σ₁}(∇ũ·ν₀)(∇φ·ν₀)J₀ dz + β∫_{∂Ω₁} ũ φ J₀/√(1+|∇h|²) dH¹`
/// for `φ = T(t)·P(s)`, `T ∈ {1, cos 2πkt, sin 2πkt : k ≤ modes}`,
/// `P ∈ {s, s², s³}`; returns the largest absolute value.
pub fn limit_weak_residual(
    field: &ReferenceLayerField,
    geom: &LayerGeometry,
    modes: usize,
) -> Result<f64> {
    let (n_t, n_s) = field.dims();
    let beta = geom.beta();
    let polys: [fn(f64) -> f64; 3] = [|s| s, |s| s * s, |s| s * s * s];
    let mut fiber = vec![[0.0; 3]; n_t];
    for (i, row) in fiber.iter_mut().enumerate() {
        let t = field.t(i);
        let frame = geom.curve().frame(t);
        let h = geom.h().value(t);
        let h_s = geom.h().arc_derivative(geom.curve(), t);
        for (p, poly) in polys.iter().enumerate() {
            let mut volume = 0.0;
            for j in 0..n_s - 1 {
                let (s0, s1) = (field.s(j), field.s(j + 1));
                let d = 0.5 * (s0 + s1) * h;
                let j0 = jacobians_at(frame.curvature, d, 1.0, 0.0)?.j0;
                let du = (field.get(i, j + 1) - field.get(i, j)) / (s1 - s0) / h;
                let dphi = (poly(s1) - poly(s0)) / (s1 - s0) / h;
                volume += du * dphi * j0 * (1.0 + d * frame.curvature) * h * (s1 - s0);
            }
            let top = 1.0 + h * frame.curvature;
            let jtau0 = jacobians_at(frame.curvature, h, 1.0, h_s.abs() / top)?.jtau0;
            let outer_metric = (top * top + h_s * h_s).sqrt();
            let surface = beta * field.get(i, n_s - 1) * poly(1.0) * jtau0 * outer_metric;
            row[p] = (volume + surface) * frame.speed / n_t as f64;
        }
    }
    let mut worst: f64 = 0.0;
    for k in 0..=modes {
        let trig: Vec<Box<dyn Fn(f64) -> f64>> = if k == 0 {
            vec![Box::new(|_| 1.0)]
        } else {
            let w = std::f64::consts::TAU * k as f64;
            vec![
                Box::new(move |t: f64| (w * t).cos()),
                Box::new(move |t: f64| (w * t).sin()),
            ]
        };
        for tr in &trig {
            for p in 0..3 {
                let r: f64 = fiber
                    .iter()
                    .enumerate()
                    .map(|(i, row)| tr(field.t(i)) * row[p])
                    .sum();
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}

/// Solutions of both problems on one mesh together with the full report.
#[derive(Debug, Clone)]
pub struct InstanceSolution {
    pub report: EnergyReport,
    pub u_eps: ScalarField,
    pub u0: ScalarField,
}

/// Solves the layered and the limit problem on `mesh` and evaluates every
/// functional; `F₀` comes from the interior of the same mesh.
pub fn energy_report(
    mesh: &LayerMesh,
    geom: &LayerGeometry,
    f: Source<'_>,
    opts: &SolverOptions,
) -> Result<InstanceSolution> {
    let (u_eps, _) = solve_diffraction(mesh, geom, f, opts)?;
    let (u0, _) = solve_limit(mesh, geom.h(), geom.beta(), f, opts)?;
    let eps = geom.eps();
    let mut report = EnergyReport::new(
        eps,
        energy_f_eps(&u_eps, mesh, geom, f)?,
        energy_f0(&u0, mesh, geom.h(), geom.beta(), f)?,
        first_order(&u0, mesh, geom)?,
    );
    report.tangential_layer_energy = layer_tangential_energy(&u_eps, mesh, geom)?;
    report.h1_bound_quantity = h1_bound_quantity(&u_eps, mesh, geom)?;
    report.boundary_panels = Some(mesh.boundary_panels());
    report.fibers = Some(mesh.fibers());
    Ok(InstanceSolution { report, u_eps, u0 })
}
