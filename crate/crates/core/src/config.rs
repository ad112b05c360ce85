//! Declarative study configuration (TOML). Every default is materialized
//! on parse, so [`StudyConfig::to_toml`] reproduces the full configuration.

use serde::{Deserialize, Serialize};

use crate::geometry::{BoundaryField, ClosedCurve, FourierSeries, LayerGeometry};
use crate::linalg::SolverOptions;
use crate::meshing::MeshParams;
use crate::{Error, Point, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeometrySpec {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Fourier { x: FourierSeries, y: FourierSeries },
}

impl Default for GeometrySpec {
    fn default() -> Self {
        GeometrySpec::Circle { radius: 1.0 }
    }
}

impl GeometrySpec {
    pub fn curve(&self) -> Result<ClosedCurve> {
        match self {
            GeometrySpec::Circle { radius } => ClosedCurve::circle(*radius),
            GeometrySpec::Ellipse { a, b } => ClosedCurve::ellipse(*a, *b),
            GeometrySpec::Fourier { x, y } => ClosedCurve::from_fourier(x.clone(), y.clone()),
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self, GeometrySpec::Circle { .. })
    }
}

/// Affine source `f(x) = constant + gradient·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceSpec {
    pub constant: f64,
    pub gradient: [f64; 2],
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            constant: 1.0,
            gradient: [0.0, 0.0],
        }
    }
}

impl SourceSpec {
    pub fn eval(&self, p: Point) -> f64 {
        self.constant + self.gradient[0] * p[0] + self.gradient[1] * p[1]
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.gradient == [0.0, 0.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSpec {
    pub boundary_panels: usize,
    pub fibers: usize,
    pub interior_grading: f64,
    /// Grow the boundary resolution like `1/√ε` from the first `ε`.
    pub scale_with_eps: bool,
    pub max_boundary_panels: usize,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self {
            boundary_panels: 128,
            fibers: 4,
            interior_grading: 1.0,
            scale_with_eps: true,
            max_boundary_panels: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tolerance: f64,
    pub direct_limit: usize,
    pub max_cg_iterations: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            tolerance: o.tolerance,
            direct_limit: o.direct_limit,
            max_cg_iterations: o.max_cg_iterations,
        }
    }
}

impl SolverSpec {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tolerance: self.tolerance,
            direct_limit: self.direct_limit,
            max_cg_iterations: self.max_cg_iterations,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub oracle_extrapolation: f64,
    pub rate_extrapolation: f64,
    pub rate_final_gap: f64,
    pub fit_residual: f64,
    pub scaling_slope: f64,
    pub scaling_residual: f64,
    pub stretch_final: f64,
    pub stretch_control: f64,
    pub optimizer_constant: f64,
    pub constraint: f64,
    pub energy_identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            oracle_extrapolation: 5e-3,
            rate_extrapolation: 2e-2,
            rate_final_gap: 5e-2,
            fit_residual: 0.5,
            scaling_slope: 0.8,
            scaling_residual: 0.2,
            stretch_final: 1e-2,
            stretch_control: 1e-1,
            optimizer_constant: 1e-4,
            constraint: 1e-8,
            energy_identity: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StretchSpec {
    pub grid_t: usize,
    pub grid_s: usize,
}

impl Default for StretchSpec {
    fn default() -> Self {
        Self {
            grid_t: 512,
            grid_s: 17,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSpec {
    /// `ε` in the objective `G_ε = F₀ + εF⁽¹⁾`; zero gives the bare limit energy.
    pub eps: f64,
    /// Prescribed `∫_{∂Ω} h`; defaults to the mass of the initial profile.
    pub mass: Option<f64>,
    pub h_min: f64,
    pub modes: usize,
    pub max_iterations: usize,
    pub relative_decrease: f64,
    pub max_halvings: usize,
    pub fd_step: f64,
    /// Relative `cos 2πt` modulation added to the initial profile.
    pub initial_modulation: f64,
}

impl Default for OptimizeSpec {
    fn default() -> Self {
        Self {
            eps: 0.05,
            mass: None,
            h_min: 0.05,
            modes: 8,
            max_iterations: 200,
            relative_decrease: 1e-8,
            max_halvings: 20,
            fd_step: 1e-5,
            initial_modulation: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSpec {
    pub dimension: usize,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self { dimension: 2 }
    }
}

fn default_beta() -> f64 {
    1.0
}

fn default_eps() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}

fn default_profile() -> FourierSeries {
    FourierSeries::constant(0.2)
}

fn default_output() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Strictly decreasing.
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default = "default_profile")]
    pub profile: FourierSeries,
    #[serde(default)]
    pub source: SourceSpec,
    #[serde(default)]
    pub mesh: MeshSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub stretch: StretchSpec,
    #[serde(default)]
    pub optimize: OptimizeSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
}

impl Default for StudyConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config uses defaults")
    }
}

impl StudyConfig {
    /// Parses and validates the schema; geometric guards are checked
    /// separately by [`StudyConfig::check_guards`].
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("key `beta`: must be positive, got {}", self.beta));
        }
        if self.eps.is_empty() {
            return bad("key `eps`: list is empty".into());
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return bad(format!("key `eps`: {e} outside (0, 1]"));
        }
        if let Some(w) = self.eps.windows(2).find(|w| w[1] >= w[0]) {
            return bad(format!(
                "key `eps`: list must be strictly decreasing ({} then {})",
                w[0], w[1]
            ));
        }
        if self.mesh.boundary_panels < 16 {
            return bad("key `mesh.boundary_panels`: at least 16 required".into());
        }
        if self.mesh.fibers < 2 {
            return bad("key `mesh.fibers`: at least 2 required".into());
        }
        if self.mesh.max_boundary_panels < self.mesh.boundary_panels {
            return bad(
                "key `mesh.max_boundary_panels`: smaller than `mesh.boundary_panels`".into(),
            );
        }
        if !(self.mesh.interior_grading > 0.0) {
            return bad("key `mesh.interior_grading`: must be positive".into());
        }
        if !(self.solver.tolerance > 0.0 && self.solver.tolerance < 1.0) {
            return bad("key `solver.tolerance`: must lie in (0, 1)".into());
        }
        if self.stretch.grid_t < 4 || self.stretch.grid_s < 2 {
            return bad("key `stretch`: grid too coarse".into());
        }
        if self.oracle.dimension < 2 {
            return bad("key `oracle.dimension`: at least 2 required".into());
        }
        let o = &self.optimize;
        if !(o.eps >= 0.0 && o.eps <= 1.0) {
            return bad("key `optimize.eps`: must lie in [0, 1]".into());
        }
        if !(o.h_min > 0.0) || o.modes == 0 || o.max_iterations == 0 || !(o.fd_step > 0.0) {
            return bad(
                "key `optimize`: h_min, modes, max_iterations and fd_step must be positive".into(),
            );
        }
        if o.mass.is_some_and(|m| !(m > 0.0)) {
            return bad("key `optimize.mass`: must be positive".into());
        }
        Ok(())
    }

    pub fn curve(&self) -> Result<ClosedCurve> {
        self.geometry.curve()
    }

    pub fn profile(&self) -> BoundaryField {
        BoundaryField::from_series(self.profile.clone())
    }

    /// The layered geometry at the largest `ε` of the list; this validates
    /// the guards for every listed `ε`.
    pub fn geometry(&self) -> Result<LayerGeometry> {
        LayerGeometry::new(self.curve()?, self.profile(), self.eps[0], self.beta, None)
    }

    pub fn check_guards(&self) -> Result<()> {
        self.geometry().map(|_| ())
    }

    /// Mesh parameters for one `ε`: `n_b(ε) = min(cap, ⌈n_b·√(ε₀/ε)⌉)`.
    pub fn mesh_params(&self, eps: f64) -> MeshParams {
        let m = &self.mesh;
        let panels = if m.scale_with_eps {
            let scaled = (m.boundary_panels as f64 * (self.eps[0] / eps).sqrt()).ceil() as usize;
            scaled.clamp(m.boundary_panels, m.max_boundary_panels)
        } else {
            m.boundary_panels
        };
        MeshParams {
            boundary_panels: panels,
            fibers: m.fibers,
            interior_grading: m.interior_grading,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_materializes_defaults() {
        let cfg = StudyConfig::from_toml("[geometry]\nkind = \"circle\"\nradius = 1.0\n").unwrap();
        assert_eq!(cfg.mesh.boundary_panels, 128);
        assert_eq!(cfg.mesh.fibers, 4);
        assert_eq!(cfg.solver.tolerance, 1e-10);
        let echoed = cfg.to_toml();
        assert!(echoed.contains("boundary_panels = 128"));
        assert_eq!(StudyConfig::from_toml(&echoed).unwrap(), cfg);
    }

    #[test]
    fn round_trip_with_fourier_geometry() {
        let text = r#"
            eps = [0.1, 0.05, 0.025]
            [geometry]
            kind = "fourier"
            x = { mean = 0.0, cos = [2.0] }
            y = { mean = 0.0, sin = [1.0] }
            [profile]
            mean = 0.2
            cos = [0.05]
            [optimize]
            mass = 2.0
        "#;
        let cfg = StudyConfig::from_toml(text).unwrap();
        assert_eq!(StudyConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert!(cfg.check_guards().is_ok());
    }

    #[test]
    fn schema_violations() {
        for text in [
            "eps = [0.1, 0.2]",
            "eps = [0.1, 0.1]",
            "eps = []",
            "unknown = 1",
            "[mesh]\nfibres = 3",
            "[geometry]\nkind = \"square\"",
            "beta = -1.0",
            "[mesh]\nboundary_panels = \"many\"",
        ] {
            assert!(
                matches!(StudyConfig::from_toml(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn diagnostics_name_the_location() {
        let err = StudyConfig::from_toml("beta = 1.0\n[mesh]\nfibres = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("fibres") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn guard_violation_reports_the_bound() {
        let cfg = StudyConfig::from_toml("eps = [1.0]\n[profile]\nmean = 1.2\n").unwrap();
        let err = cfg.check_guards().unwrap_err();
        assert!(err.is_guard());
        assert!(err.to_string().contains("d0 = 1.000000"), "{err}");
    }

    #[test]
    fn mesh_scaling() {
        let cfg = StudyConfig::default();
        assert_eq!(cfg.mesh_params(0.2).boundary_panels, 128);
        assert_eq!(cfg.mesh_params(0.05).boundary_panels, 256);
        assert_eq!(cfg.mesh_params(0.025).boundary_panels, 363);
        assert_eq!(cfg.mesh_params(0.001).boundary_panels, 512);
    }
}
