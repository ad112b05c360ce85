use super::curve::ClosedCurve;
use super::fourier::FourierSeries;

/// A smooth periodic function on the boundary, stored in the same Fourier
/// representation as the curve. Off the boundary it is extended constantly
/// along normal rays, so its gradient has no normal component.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    series: FourierSeries,
}

impl BoundaryField {
    pub fn constant(c: f64) -> Self {
        Self {
            series: FourierSeries::constant(c),
        }
    }

    pub fn from_series(series: FourierSeries) -> Self {
        Self { series }
    }

    pub fn series(&self) -> &FourierSeries {
        &self.series
    }

    pub fn value(&self, t: f64) -> f64 {
        self.series.value(t)
    }

    /// `dh/dt` in the curve parameter.
    pub fn derivative(&self, t: f64) -> f64 {
        self.series.eval(t)[1]
    }

    /// Arc-length derivative `dh/ds = h'(t)/|γ'(t)|`, the full boundary
    /// gradient magnitude of the normal extension.
    pub fn arc_derivative(&self, curve: &ClosedCurve, t: f64) -> f64 {
        self.derivative(t) / curve.speed(t)
    }

    /// Sampled minimum and maximum over `n` uniform parameters.
    pub fn range(&self, n: usize) -> (f64, f64) {
        (0..n)
            .map(|j| self.value(j as f64 / n as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// `∫_{∂Ω} h dH¹`.
    pub fn boundary_integral(&self, curve: &ClosedCurve, panels: usize) -> f64 {
        let rule = crate::quadrature::GaussLegendre::new(8);
        rule.integrate_composite(0.0, 1.0, panels, |t| self.value(t) * curve.speed(t))
    }
}
