use super::curve::{ClosedCurve, TubularCoords};
use super::field::BoundaryField;
use crate::quadrature::GaussLegendre;
use crate::{Error, Point, Result};

const GUARD_SAMPLES: usize = 1024;
const MEMBERSHIP_TOL: f64 = 1e-9;

/// `k₀/(1 + d·k₀)`: curvature of the level set at distance `d` from a
/// boundary point of curvature `k₀`.
pub fn shifted_curvature(k0: f64, d: f64) -> Result<f64> {
    let denom = 1.0 + d * k0;
    if denom <= 0.0 {
        return Err(Error::Focal {
            distance: d,
            curvature: k0,
            value: denom,
        });
    }
    Ok(k0 / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `Σ₁ → Σ_ε`, `z ↦ σ(z) + ε·d(z)·ν₀(z)`.
    Forward,
    /// `Σ_ε → Σ₁`, `x ↦ σ(x) + d(x)/ε·ν₀(x)`.
    Inverse,
}

/// Jacobian factors of the stretching map at one point of the reference layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobians {
    /// Volume factor `(1 + ε d k)/(1 + d k)` (the `ε` from the normal
    /// direction is kept outside).
    pub j_eps: f64,
    /// Its limit `1/(1 + d k)`.
    pub j0: f64,
    /// Limit tangential factor on the outer boundary, `J₀/√(1 + |∇h|²)`.
    pub jtau0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberTarget {
    /// `∫_{Σ_ε} g dx`.
    LayerVolume,
    /// `∫_{∂Ω_ε} g dH¹`.
    OuterSurface,
    /// `∫_{Σ₁} g dz`.
    ReferenceLayer,
}

/// Tensor-product rule: Gauss panels along the boundary parameter times a
/// Gauss rule across each fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureRule {
    pub panels: usize,
    pub points_per_panel: usize,
    pub fiber_points: usize,
}

impl QuadratureRule {
    /// Four panels per Fourier mode (at least 32 modes' worth), 8 Gauss
    /// points per panel and per fiber.
    pub fn for_geometry(geom: &LayerGeometry) -> Self {
        let modes = geom.curve().modes().max(geom.h().series().modes()).max(32);
        Self {
            panels: 4 * modes,
            points_per_panel: 8,
            fiber_points: 8,
        }
    }

    pub fn doubled(self) -> Self {
        Self {
            panels: 2 * self.panels,
            points_per_panel: self.points_per_panel,
            fiber_points: 2 * self.fiber_points,
        }
    }
}

/// The body boundary together with the layer profile and the physical
/// parameters: everything needed to describe `Σ_ε`, `Ω_ε`, `ν₀` and `ν_ε`.
#[derive(Debug, Clone)]
pub struct LayerGeometry {
    curve: ClosedCurve,
    h: BoundaryField,
    eps: f64,
    beta: f64,
    d0: f64,
    h_min: f64,
    h_max: f64,
}

impl LayerGeometry {
    /// Validates every admissibility guard. When `d0` is not given, the
    /// curvature bound `1/sup|k|` is used as tubular radius.
    pub fn new(
        curve: ClosedCurve,
        h: BoundaryField,
        eps: f64,
        beta: f64,
        d0: Option<f64>,
    ) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "β must be positive, got {beta}"
            )));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "ε must lie in (0, 1], got {eps}"
            )));
        }
        let d0 = d0.unwrap_or_else(|| Self::curvature_radius(&curve));
        if !(d0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "d0 must be positive, got {d0}"
            )));
        }
        let (h_min, h_max) = h.range(GUARD_SAMPLES);
        let geom = Self {
            curve,
            h,
            eps,
            beta,
            d0,
            h_min,
            h_max,
        };
        geom.check_guards(eps)?;
        Ok(geom)
    }

    /// `1/sup|k|`, the default tubular radius.
    pub fn curvature_radius(curve: &ClosedCurve) -> f64 {
        1.0 / curve.k_max()
    }

    fn check_guards(&self, eps: f64) -> Result<()> {
        if !(self.h_min > 0.0) {
            return Err(Error::Guard(format!(
                "layer profile must be positive, min h = {:.6}",
                self.h_min
            )));
        }
        if eps * self.h_max >= self.d0 {
            return Err(Error::Guard(format!(
                "ε·max h = {:.6} must stay below the tubular radius d0 = {:.6}",
                eps * self.h_max,
                self.d0
            )));
        }
        if self.h_max >= self.d0 {
            return Err(Error::Guard(format!(
                "reference layer thickness max h = {:.6} must stay below d0 = {:.6}",
                self.h_max, self.d0
            )));
        }
        for j in 0..GUARD_SAMPLES {
            let t = j as f64 / GUARD_SAMPLES as f64;
            let k = self.curve.curvature(t);
            let d = self.h.value(t).max(eps * self.h.value(t));
            if 1.0 + d * k <= 0.0 {
                return Err(Error::Focal {
                    distance: d,
                    curvature: k,
                    value: 1.0 + d * k,
                });
            }
        }
        Ok(())
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(
            self.curve.clone(),
            self.h.clone(),
            eps,
            self.beta,
            Some(self.d0),
        )
    }

    pub fn with_profile(&self, h: BoundaryField) -> Result<Self> {
        Self::new(self.curve.clone(), h, self.eps, self.beta, Some(self.d0))
    }

    pub fn curve(&self) -> &ClosedCurve {
        &self.curve
    }

    pub fn h(&self) -> &BoundaryField {
        &self.h
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    pub fn h_range(&self) -> (f64, f64) {
        (self.h_min, self.h_max)
    }

    pub fn project(&self, p: Point) -> Result<TubularCoords> {
        self.curve.project(p, self.d0)
    }

    /// `γ(t) + d·ν₀(t)`.
    pub fn point_at(&self, t: f64, d: f64) -> Point {
        self.curve.offset_point(t, d)
    }

    /// `|∇h|` of the normal extension at distance `d` above `γ(t)`.
    pub fn grad_h_norm(&self, t: f64, d: f64) -> f64 {
        let k = self.curve.curvature(t);
        self.h.arc_derivative(&self.curve, t).abs() / (1.0 + d * k)
    }

    /// Unit outer normal `ν_ε` of `∂Ω_ε` above `γ(t)`.
    pub fn outer_normal(&self, eps: f64, t: f64) -> Point {
        let f = self.curve.frame(t);
        let g = eps * self.grad_h_norm(t, eps * self.h.value(t));
        let signed = self.h.arc_derivative(&self.curve, t).signum() * g;
        let scale = 1.0 / (1.0 + g * g).sqrt();
        [
            (f.normal[0] - signed * f.tangent[0]) * scale,
            (f.normal[1] - signed * f.tangent[1]) * scale,
        ]
    }

    pub fn stretch(&self, direction: Direction, eps: f64, z: Point) -> Result<Point> {
        let c = self.project(z)?;
        let h = self.h.value(c.t);
        let (limit, factor) = match direction {
            Direction::Forward => (h, eps),
            Direction::Inverse => (eps * h, 1.0 / eps),
        };
        if c.d > limit * (1.0 + MEMBERSHIP_TOL) + MEMBERSHIP_TOL {
            return Err(Error::OutOfTube {
                x: z[0],
                y: z[1],
                reason: format!("distance {:.6} exceeds the layer thickness {limit:.6}", c.d),
            });
        }
        Ok(self.point_at(c.t, factor * c.d))
    }

    pub fn jacobians(&self, eps: f64, z: Point) -> Result<Jacobians> {
        let c = self.project(z)?;
        let k = self.curve.curvature(c.t);
        jacobians_at(k, c.d, eps, self.grad_h_norm(c.t, c.d))
    }

    /// Weight `W(ε, σ)` with `dH¹(∂Ω_ε) = W dH¹(∂Ω)`:
    /// `(1 + εhk)·√(1 + ε²|∇h|²)`, the gradient taken at the outer point.
    pub fn outer_surface_weight(&self, eps: f64, t: f64) -> f64 {
        let k = self.curve.curvature(t);
        let eh = eps * self.h.value(t);
        let g = self.grad_h_norm(t, eh);
        (1.0 + eh * k) * (1.0 + eps * eps * g * g).sqrt()
    }

    /// Integrates `g` over the layer, its outer boundary, or the reference
    /// layer, using normal coordinates with the exact metric weights.
    pub fn fiber_integral<G>(
        &self,
        eps: f64,
        g: G,
        target: FiberTarget,
        rule: QuadratureRule,
    ) -> Result<f64>
    where
        G: Fn(Point) -> f64,
    {
        if target != FiberTarget::ReferenceLayer {
            self.check_guards(eps)?;
        }
        let along = GaussLegendre::new(rule.points_per_panel);
        let across = GaussLegendre::new(rule.fiber_points);
        let mut total = 0.0;
        for p in 0..rule.panels {
            let lo = p as f64 / rule.panels as f64;
            let hi = (p + 1) as f64 / rule.panels as f64;
            for (t, wt) in along.on_interval(lo, hi) {
                let f = self.curve.frame(t);
                let ds = wt * f.speed;
                let thickness = match target {
                    FiberTarget::LayerVolume | FiberTarget::OuterSurface => eps * self.h.value(t),
                    FiberTarget::ReferenceLayer => self.h.value(t),
                };
                let at = |d: f64| [f.point[0] + d * f.normal[0], f.point[1] + d * f.normal[1]];
                total += match target {
                    FiberTarget::OuterSurface => {
                        g(at(thickness)) * self.outer_surface_weight(eps, t) * ds
                    }
                    _ => {
                        across
                            .on_interval(0.0, thickness)
                            .map(|(d, wd)| wd * g(at(d)) * (1.0 + d * f.curvature))
                            .sum::<f64>()
                            * ds
                    }
                };
            }
        }
        Ok(total)
    }

    /// `∫_{Σ_ε} g dx` computed on the reference layer as
    /// `ε∫_{Σ₁} g(Ψ_ε(z)) J_ε(z) dz`, with `Ψ_ε` and `J_ε` evaluated through
    /// the metric projection of each quadrature point.
    pub fn pullback_integral<G>(&self, eps: f64, g: G, rule: QuadratureRule) -> Result<f64>
    where
        G: Fn(Point) -> f64,
    {
        self.check_guards(eps)?;
        let failure = std::cell::RefCell::new(None);
        let value = self.fiber_integral(
            eps,
            |z| {
                let mapped = self
                    .stretch(Direction::Forward, eps, z)
                    .and_then(|x| Ok((x, self.jacobians(eps, z)?)));
                match mapped {
                    Ok((x, jac)) => g(x) * jac.j_eps,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    }
                }
            },
            FiberTarget::ReferenceLayer,
            rule,
        )?;
        match failure.into_inner() {
            Some(e) => Err(e),
            None => Ok(eps * value),
        }
    }
}

/// Closed-form Jacobians at distance `d` above a boundary point of
/// curvature `k`, with `|∇h| = grad_h` at that point.
pub fn jacobians_at(k: f64, d: f64, eps: f64, grad_h: f64) -> Result<Jacobians> {
    let base = 1.0 + d * k;
    let stretched = 1.0 + eps * d * k;
    if base <= 0.0 || stretched <= 0.0 {
        return Err(Error::Focal {
            distance: d,
            curvature: k,
            value: base.min(stretched),
        });
    }
    let j0 = 1.0 / base;
    Ok(Jacobians {
        j_eps: stretched / base,
        j0,
        jtau0: j0 / (1.0 + grad_h * grad_h).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FourierSeries;
    use std::f64::consts::PI;

    fn disk(h: f64, eps: f64) -> LayerGeometry {
        LayerGeometry::new(
            ClosedCurve::circle(1.0).unwrap(),
            BoundaryField::constant(h),
            eps,
            1.0,
            None,
        )
        .unwrap()
    }

    #[test]
    fn shifted_curvature_examples() {
        assert_eq!(shifted_curvature(1.0, 0.0).unwrap(), 1.0);
        assert!((shifted_curvature(1.0, 0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(shifted_curvature(1.0, 1.0).unwrap(), 0.5);
        assert!(matches!(
            shifted_curvature(-2.0, 0.5),
            Err(Error::Focal { .. })
        ));
    }

    #[test]
    fn stretch_examples() {
        let g = disk(0.5, 0.5);
        let z = g.stretch(Direction::Forward, 1.0, [1.3, 0.2]).unwrap();
        assert!((z[0] - 1.3).abs() < 1e-12 && (z[1] - 0.2).abs() < 1e-12);
        let x = g.stretch(Direction::Forward, 0.5, [1.4, 0.0]).unwrap();
        assert!((x[0] - 1.2).abs() < 1e-14 && x[1].abs() < 1e-14);
        let z = g.stretch(Direction::Inverse, 0.5, [1.2, 0.0]).unwrap();
        assert!((z[0] - 1.4).abs() < 1e-14 && z[1].abs() < 1e-14);
        assert!(g.stretch(Direction::Inverse, 0.5, [1.4, 0.0]).is_err());
    }

    #[test]
    fn jacobian_examples() {
        let g = disk(0.5, 0.5);
        let j = g.jacobians(0.5, [1.0, 0.0]).unwrap();
        assert!((j.j_eps - 1.0).abs() < 1e-14 && (j.j0 - 1.0).abs() < 1e-14);
        let j = g.jacobians(1.0, [1.2, 0.3]).unwrap();
        assert!((j.j_eps - 1.0).abs() < 1e-14);
        let j = g.jacobians(0.5, [1.5, 0.0]).unwrap();
        assert!((j.j_eps - 1.25 / 1.5).abs() < 1e-14);
        assert!((j.jtau0 - j.j0).abs() < 1e-15, "constant h has no gradient");
    }

    #[test]
    fn annulus_area_and_perimeter() {
        let g = disk(0.2, 0.5);
        let rule = QuadratureRule::for_geometry(&g);
        let area = g
            .fiber_integral(0.5, |_| 1.0, FiberTarget::LayerVolume, rule)
            .unwrap();
        assert!((area - 0.21 * PI).abs() < 1e-12);
        let len = g
            .fiber_integral(0.5, |_| 1.0, FiberTarget::OuterSurface, rule)
            .unwrap();
        assert!((len - 2.0 * PI * 1.1).abs() < 1e-12);
    }

    #[test]
    fn guards() {
        let c = ClosedCurve::circle(1.0).unwrap();
        let r = LayerGeometry::new(c.clone(), BoundaryField::constant(-0.1), 0.5, 1.0, None);
        assert!(matches!(r, Err(Error::Guard(_))));
        let r = LayerGeometry::new(c.clone(), BoundaryField::constant(0.5), 0.5, 1.0, Some(0.2));
        assert!(matches!(r, Err(Error::Guard(_))));
        let r = LayerGeometry::new(c, BoundaryField::constant(0.1), 0.0, 1.0, None);
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn outer_normal_is_unit_and_matches_offset_curve() {
        let g = LayerGeometry::new(
            ClosedCurve::ellipse(2.0, 1.0).unwrap(),
            BoundaryField::from_series(FourierSeries::new(0.2, vec![0.05], vec![0.0])),
            0.3,
            1.0,
            None,
        )
        .unwrap();
        for &t in &[0.1, 0.37, 0.8] {
            let n = g.outer_normal(0.3, t);
            assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-14);
            // tangent of the outer curve by differences
            let dt = 1e-6;
            let a = g.point_at(t - dt, 0.3 * g.h().value(t - dt));
            let b = g.point_at(t + dt, 0.3 * g.h().value(t + dt));
            let tan = [b[0] - a[0], b[1] - a[1]];
            let dot = (n[0] * tan[0] + n[1] * tan[1]) / tan[0].hypot(tan[1]);
            assert!(dot.abs() < 1e-8, "t={t} dot={dot}");
        }
    }
}
