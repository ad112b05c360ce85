//! Closed-form radial solutions on a ball of radius `R` in dimension
//! `n ≥ 2` with constant `h` and constant source `f ≡ c`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::energy::{first_order_density, EnergyReport};
use crate::quadrature::{richardson, GaussLegendre};
use crate::{Error, Result};

const GAUSS_POINTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialConfig {
    pub n: usize,
    pub radius: f64,
    pub h: f64,
    pub beta: f64,
    pub c: f64,
}

impl RadialConfig {
    /// The unit disk with `h = 0.2`, `β = 1`, `f ≡ 1`.
    pub fn disk() -> Self {
        Self {
            n: 2,
            radius: 1.0,
            h: 0.2,
            beta: 1.0,
            c: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("dimension {} < 2", self.n)));
        }
        for (name, v) in [("R", self.radius), ("h", self.h), ("β", self.beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !self.c.is_finite() {
            return Err(Error::InvalidParameter(
                "source constant is not finite".into(),
            ));
        }
        Ok(())
    }

    /// Mean curvature `(n − 1)/R` of the sphere.
    pub fn mean_curvature(&self) -> f64 {
        (self.n - 1) as f64 / self.radius
    }

    /// Area `ω_n rⁿ⁻¹` of the sphere of radius `r`.
    pub fn sphere_area(&self, r: f64) -> f64 {
        unit_sphere_area(self.n) * r.powi(self.n as i32 - 1)
    }

    fn phi(&self, r: f64) -> f64 {
        if self.n == 2 {
            r.ln()
        } else {
            let p = 2 - self.n as i32;
            r.powi(p) / p as f64
        }
    }

    fn phi_prime(&self, r: f64) -> f64 {
        r.powi(1 - self.n as i32)
    }
}

/// `|S^{n−1}|`: 2π, 4π, then `ω_{n+2} = 2π ω_n / n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    match n {
        0 | 1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unit_sphere_area(n - 2) * 2.0 * PI / (n - 2) as f64,
    }
}

/// `u_ε(r) = A − c r²/(2n)` for `r ≤ R`, `B + D Φ_n(r)` on the layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSolution {
    pub cfg: RadialConfig,
    pub eps: f64,
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl RadialSolution {
    pub fn outer_radius(&self) -> f64 {
        self.cfg.radius + self.eps * self.cfg.h
    }

    pub fn inner(&self, r: f64) -> f64 {
        self.a - self.cfg.c * r * r / (2.0 * self.cfg.n as f64)
    }

    pub fn layer(&self, r: f64) -> f64 {
        self.b + self.d * self.cfg.phi(r)
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.cfg.radius {
            self.inner(r)
        } else {
            self.layer(r)
        }
    }

    /// Radial derivative.
    pub fn derivative(&self, r: f64) -> f64 {
        if r <= self.cfg.radius {
            -self.cfg.c * r / self.cfg.n as f64
        } else {
            self.d * self.cfg.phi_prime(r)
        }
    }
}

pub fn radial_solution(cfg: &RadialConfig, eps: f64) -> Result<RadialSolution> {
    cfg.validate()?;
    if !(eps > 0.0) || eps * cfg.h >= cfg.radius {
        return Err(Error::InvalidParameter(format!(
            "ε = {eps} with h = {} is not admissible for R = {}",
            cfg.h, cfg.radius
        )));
    }
    let n = cfg.n as f64;
    let r = cfg.radius;
    let rho = r + eps * cfg.h;
    let d = -cfg.c * r.powi(cfg.n as i32) / (n * eps);
    let b = -d * (eps * cfg.phi_prime(rho) / cfg.beta + cfg.phi(rho));
    let a = b + d * cfg.phi(r) + cfg.c * r * r / (2.0 * n);
    Ok(RadialSolution {
        cfg: *cfg,
        eps,
        a,
        b,
        d,
    })
}

/// `u₀(r) = A₀ − c r²/(2n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialLimit {
    pub cfg: RadialConfig,
    pub a: f64,
}

impl RadialLimit {
    pub fn eval(&self, r: f64) -> f64 {
        self.a - self.cfg.c * r * r / (2.0 * self.cfg.n as f64)
    }

    pub fn boundary_value(&self) -> f64 {
        self.eval(self.cfg.radius)
    }
}

pub fn radial_limit(cfg: &RadialConfig) -> Result<RadialLimit> {
    cfg.validate()?;
    let n = cfg.n as f64;
    let r = cfg.radius;
    let boundary = cfg.c * r * (1.0 + cfg.beta * cfg.h) / (n * cfg.beta);
    Ok(RadialLimit {
        cfg: *cfg,
        a: boundary + cfg.c * r * r / (2.0 * n),
    })
}

fn ball_integral(cfg: &RadialConfig, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    GaussLegendre::new(GAUSS_POINTS).integrate(a, b, |r| f(r) * cfg.sphere_area(r))
}

/// `F_ε(u_ε)` by Gauss quadrature in `r`.
pub fn radial_f_eps(sol: &RadialSolution) -> f64 {
    let cfg = &sol.cfg;
    let r = cfg.radius;
    let rho = sol.outer_radius();
    let grad_in = ball_integral(cfg, 0.0, r, |x| sol.derivative(x).powi(2));
    let grad_layer = ball_integral(cfg, r, rho, |x| sol.derivative(x).powi(2));
    let source = ball_integral(cfg, 0.0, r, |x| sol.inner(x));
    grad_in + sol.eps * grad_layer + cfg.beta * cfg.sphere_area(rho) * sol.layer(rho).powi(2)
        - 2.0 * cfg.c * source
}

pub fn radial_f0(lim: &RadialLimit) -> f64 {
    let cfg = &lim.cfg;
    let r = cfg.radius;
    let n = cfg.n as f64;
    let grad = ball_integral(cfg, 0.0, r, |x| (cfg.c * x / n).powi(2));
    let source = ball_integral(cfg, 0.0, r, |x| lim.eval(x));
    grad + cfg.beta / (1.0 + cfg.beta * cfg.h) * cfg.sphere_area(r) * lim.boundary_value().powi(2)
        - 2.0 * cfg.c * source
}

pub fn radial_f1(lim: &RadialLimit) -> f64 {
    let cfg = &lim.cfg;
    cfg.sphere_area(cfg.radius)
        * first_order_density(cfg.beta, cfg.h, cfg.mean_curvature())
        * lim.boundary_value().powi(2)
}

pub fn radial_energy_report(cfg: &RadialConfig, eps: f64) -> Result<EnergyReport> {
    let sol = radial_solution(cfg, eps)?;
    let lim = radial_limit(cfg)?;
    let mut report = EnergyReport::new(eps, radial_f_eps(&sol), radial_f0(&lim), radial_f1(&lim));
    let grad_in = ball_integral(cfg, 0.0, cfg.radius, |x| sol.derivative(x).powi(2));
    let grad_layer = ball_integral(cfg, cfg.radius, sol.outer_radius(), |x| {
        sol.derivative(x).powi(2)
    });
    report.h1_bound_quantity = grad_in
        + eps * grad_layer
        + cfg.beta * cfg.sphere_area(sol.outer_radius()) * sol.layer(sol.outer_radius()).powi(2);
    Ok(report)
}

/// Reports over an `ε` list with the one-term Richardson extrapolation of
/// `δF_ε` from the two smallest values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialSequence {
    pub reports: Vec<EnergyReport>,
    pub extrapolated_delta: Option<f64>,
}

impl RadialSequence {
    pub fn errors(&self) -> Vec<f64> {
        self.reports
            .iter()
            .map(|r| (r.delta - r.f1).abs())
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# schema: oracle v1")?;
        writeln!(w, "eps,f_eps,f0,delta,f1,err")?;
        for r in &self.reports {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.eps,
                r.f_eps,
                r.f0,
                r.delta,
                r.f1,
                (r.delta - r.f1).abs()
            )?;
        }
        Ok(())
    }
}

pub fn radial_sequence(cfg: &RadialConfig, eps_list: &[f64]) -> Result<RadialSequence> {
    let reports = eps_list
        .iter()
        .map(|&e| radial_energy_report(cfg, e))
        .collect::<Result<Vec<_>>>()?;
    let extrapolated_delta = match reports.as_slice() {
        [.., a, b] => Some(richardson(a.eps, a.delta, b.eps, b.delta)),
        _ => None,
    };
    Ok(RadialSequence {
        reports,
        extrapolated_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_source_is_zero() {
        let cfg = RadialConfig {
            c: 0.0,
            ..RadialConfig::disk()
        };
        let s = radial_solution(&cfg, 0.1).unwrap();
        assert_eq!((s.a, s.b, s.d), (0.0, 0.0, 0.0));
        let r = radial_energy_report(&cfg, 0.1).unwrap();
        assert_eq!((r.f_eps, r.f0, r.f1, r.delta), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn disk_coefficients() {
        let s = radial_solution(&RadialConfig::disk(), 0.05).unwrap();
        assert!((s.d + 10.0).abs() < 1e-12);
        assert!((s.inner(1.0) - s.layer(1.0)).abs() < 1e-12);
    }

    #[test]
    fn closures_hold() {
        for n in 2..=5 {
            let cfg = RadialConfig {
                n,
                radius: 1.3,
                h: 0.3,
                beta: 2.5,
                c: -0.7,
            };
            let eps = 0.07;
            let s = radial_solution(&cfg, eps).unwrap();
            let r = cfg.radius;
            let rho = s.outer_radius();
            assert!((s.inner(r) - s.layer(r)).abs() < 1e-12);
            let inner_flux = -cfg.c * r / n as f64;
            assert!((inner_flux - eps * s.d * cfg.phi_prime(r)).abs() < 1e-12);
            assert!((eps * s.derivative(rho) + cfg.beta * s.layer(rho)).abs() < 1e-12);
            let lim = radial_limit(&cfg).unwrap();
            let q = cfg.beta / (1.0 + cfg.beta * cfg.h);
            assert!((inner_flux + q * lim.boundary_value()).abs() < 1e-12);
        }
    }

    #[test]
    fn limit_boundary_values() {
        let disk = radial_limit(&RadialConfig::disk()).unwrap();
        assert!((disk.boundary_value() - 0.6).abs() < 1e-15);
        let ball = radial_limit(&RadialConfig {
            n: 3,
            ..RadialConfig::disk()
        })
        .unwrap();
        assert!((ball.boundary_value() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn disk_first_order() {
        let r = radial_energy_report(&RadialConfig::disk(), 0.1).unwrap();
        assert!((r.f1 - 0.11 * PI).abs() < 1e-14);
    }

    #[test]
    fn disk_trace_expansion() {
        // u_ε(1) = 1/(2(1+0.2ε)) + ln(1+0.2ε)/(2ε)
        for eps in [0.2, 0.05, 0.01] {
            let s = radial_solution(&RadialConfig::disk(), eps).unwrap();
            let x: f64 = 1.0 + 0.2 * eps;
            let expected = 1.0 / (2.0 * x) + x.ln() / (2.0 * eps);
            assert!((s.inner(1.0) - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn disk_limit_energy_closed_form() {
        // F₀ = −2π(A₀/2 − 1/16) with A₀ = 0.85.
        let lim = radial_limit(&RadialConfig::disk()).unwrap();
        assert!((lim.a - 0.85).abs() < 1e-15);
        assert!((radial_f0(&lim) + 2.0 * PI * (0.425 - 0.0625)).abs() < 1e-13);
    }

    #[test]
    fn delta_converges() {
        let eps = [0.2, 0.1, 0.05, 0.025, 0.0125];
        let seq = radial_sequence(&RadialConfig::disk(), &eps).unwrap();
        let e = seq.errors();
        assert!(e.windows(2).all(|w| w[1] < w[0]));
        let f1 = 0.11 * PI;
        assert!((seq.extrapolated_delta.unwrap() - f1).abs() / f1 < 1e-3);
        // δF_ε ≈ F⁽¹⁾ − 0.0213π ε
        let slope = (seq.reports[4].delta - f1) / 0.0125;
        assert!((slope / PI + 0.0213).abs() < 1e-3, "{}", slope / PI);
    }

    #[test]
    fn energy_identity() {
        for n in 2..=4 {
            let cfg = RadialConfig {
                n,
                ..RadialConfig::disk()
            };
            let s = radial_solution(&cfg, 0.1).unwrap();
            let source = ball_integral(&cfg, 0.0, 1.0, |x| s.inner(x));
            assert!((radial_f_eps(&s) + cfg.c * source).abs() < 1e-12);
        }
    }
}
