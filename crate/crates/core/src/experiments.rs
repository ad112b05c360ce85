//! Studies over an `ε` list and the exploratory profile optimizer.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::StudyConfig;
use crate::energy::{
    energy_f0, energy_f_eps, energy_report, first_order_with, layer_energy, EnergyReport,
    InstanceSolution,
};
use crate::geometry::{BoundaryField, FourierSeries, LayerGeometry};
use crate::meshing::{build_interior_mesh, build_mesh, LayerMesh};
use crate::oracle::{radial_sequence, RadialConfig};
use crate::quadrature::{linear_fit, richardson};
use crate::solver::{limit_profile, limit_profile_with, pullback, recovery_sequence, LimitProblem};
use crate::{Error, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    Oracle,
    Solve,
    Rates,
    Stretch,
    Scaling,
    Optimize,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Oracle => "oracle",
            StudyKind::Solve => "solve",
            StudyKind::Rates => "rates",
            StudyKind::Stretch => "stretch",
            StudyKind::Scaling => "scaling",
            StudyKind::Optimize => "optimize",
        }
    }
}

/// Least-squares line through `(log ε, log value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRecord {
    pub report: EnergyReport,
    pub norms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub study: StudyKind,
    pub records: Vec<StudyRecord>,
    pub fits: BTreeMap<String, Fit>,
    pub extrapolated: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, bool>,
    pub flags: Vec<String>,
    pub pass: bool,
}

impl StudyResult {
    fn new(study: StudyKind, records: Vec<StudyRecord>) -> Self {
        Self {
            study,
            records,
            fits: BTreeMap::new(),
            extrapolated: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            flags: Vec::new(),
            pass: false,
        }
    }

    fn finish(mut self) -> Self {
        self.pass = self.verdicts.values().all(|v| *v);
        self
    }

    pub fn norm(&self, name: &str) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.norms.get(name).copied().unwrap_or(f64::NAN))
            .collect()
    }

    /// Flat scalar summary: fits, extrapolations, verdicts (as 0/1) and the
    /// norms of the last record.
    pub fn metrics(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        for (name, fit) in &self.fits {
            m.insert(format!("{name}_slope"), fit.slope);
            m.insert(format!("{name}_fit_residual"), fit.residual);
        }
        for (name, v) in &self.extrapolated {
            m.insert(format!("extrapolated_{name}"), *v);
        }
        for (name, v) in &self.verdicts {
            m.insert(format!("verdict_{name}"), if *v { 1.0 } else { 0.0 });
        }
        if let Some(last) = self.records.last() {
            m.insert("final_eps".into(), last.report.eps);
            for (name, v) in &last.norms {
                m.insert(format!("final_{name}"), *v);
            }
        }
        m
    }

    /// One row per `ε`: the energy report followed by the study norms.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let norm_names: Vec<&String> = self
            .records
            .first()
            .map(|r| r.norms.keys().collect())
            .unwrap_or_default();
        let mut columns: Vec<String> = [
            "eps",
            "boundary_panels",
            "fibers",
            "f_eps",
            "f0",
            "delta",
            "f1",
            "g_eps",
            "tangential_layer_energy",
            "h1_bound_quantity",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        columns.extend(norm_names.iter().map(|s| s.to_string()));
        writeln!(w, "# schema: {} v1", self.study.name())?;
        writeln!(
            w,
            "# columns: energies of one (geometry, eps) instance; delta = (f_eps - f0)/eps; g_eps = f0 + eps*f1; remaining columns are study norms"
        )?;
        writeln!(w, "{}", columns.join(","))?;
        let opt = |v: Option<usize>| v.map(|n| n.to_string()).unwrap_or_default();
        for rec in &self.records {
            let r = &rec.report;
            let mut row = vec![
                format!("{:.17e}", r.eps),
                opt(r.boundary_panels),
                opt(r.fibers),
            ];
            for v in [
                r.f_eps,
                r.f0,
                r.delta,
                r.f1,
                r.g_eps,
                r.tangential_layer_energy,
                r.h1_bound_quantity,
            ] {
                row.push(format!("{v:.17e}"));
            }
            for name in &norm_names {
                row.push(format!("{:.17e}", rec.norms[*name]));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn fit_loglog(eps: &[f64], values: &[f64]) -> Option<Fit> {
    if values.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    linear_fit(&x, &y).map(|(slope, intercept, residual)| Fit {
        slope,
        intercept,
        residual,
    })
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// One layered instance of a study: geometry at `ε`, its mesh, and both solutions.
pub struct SolvedInstance {
    pub geometry: LayerGeometry,
    pub mesh: LayerMesh,
    pub solution: InstanceSolution,
}

fn solve_instance(cfg: &StudyConfig, base: &LayerGeometry, eps: f64) -> Result<SolvedInstance> {
    let geometry = base.with_eps(eps)?;
    let mesh = build_mesh(&geometry, eps, cfg.mesh_params(eps))?;
    let f = |p: Point| cfg.source.eval(p);
    let solution = energy_report(&mesh, &geometry, &f, &cfg.solver.options())?;
    Ok(SolvedInstance {
        geometry,
        mesh,
        solution,
    })
}

fn solve_all(cfg: &StudyConfig) -> Result<Vec<SolvedInstance>> {
    let base = cfg.geometry()?;
    cfg.eps
        .par_iter()
        .map(|&eps| solve_instance(cfg, &base, eps))
        .collect()
}

fn is_degenerate(records: &[StudyRecord]) -> bool {
    records
        .iter()
        .all(|r| r.report.f_eps == 0.0 && r.report.f0 == 0.0 && r.report.f1 == 0.0)
}

/// Solves every instance and checks the discrete energy identity
/// `F_ε(u_ε) = −∫ f u_ε`. Returns the solved instances for export.
pub fn solve_study(cfg: &StudyConfig) -> Result<(StudyResult, Vec<SolvedInstance>)> {
    let instances = solve_all(cfg)?;
    let mut worst: f64 = 0.0;
    let mut records = Vec::new();
    for inst in &instances {
        let r = &inst.solution.report;
        let quadratic = energy_f_eps(&inst.solution.u_eps, &inst.mesh, &inst.geometry, &|_| 0.0)?;
        let minus_load = 0.5 * (r.f_eps - quadratic);
        let defect = if r.f_eps == 0.0 {
            (r.f_eps - minus_load).abs()
        } else {
            relative_gap(minus_load, r.f_eps)
        };
        worst = worst.max(defect);
        let mut norms = BTreeMap::new();
        norms.insert("energy_identity_defect".into(), defect);
        norms.insert("vertices".into(), inst.mesh.n_vertices() as f64);
        records.push(StudyRecord {
            report: r.clone(),
            norms,
        });
    }
    let mut result = StudyResult::new(StudyKind::Solve, records);
    result.verdicts.insert(
        "finite".into(),
        result.records.iter().all(|r| r.report.is_finite()),
    );
    result.verdicts.insert(
        "energy_identity".into(),
        worst <= cfg.tolerances.energy_identity,
    );
    Ok((result.finish(), instances))
}

/// `δF_ε` against `F⁽¹⁾(u₀)` over the `ε` list, with the recovery family
/// `φ_ε` evaluated alongside.
pub fn rate_study(cfg: &StudyConfig) -> Result<StudyResult> {
    if cfg.eps.len() < 3 {
        return Err(Error::Config(
            "key `eps`: a rate study needs at least 3 values".into(),
        ));
    }
    let base = cfg.geometry()?;
    let f = |p: Point| cfg.source.eval(p);
    let records = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            let inst = solve_instance(cfg, &base, eps)?;
            let r = inst.solution.report;
            let rec = recovery_sequence(&inst.solution.u0, &inst.mesh, &inst.geometry)?;
            let rec_f = energy_f_eps(&rec, &inst.mesh, &inst.geometry, &f)?;
            let mut norms = BTreeMap::new();
            norms.insert("gap".into(), (r.delta - r.f1).abs());
            norms.insert("recovery_f_eps".into(), rec_f);
            norms.insert("recovery_delta".into(), (rec_f - r.f0) / eps);
            Ok(StudyRecord { report: r, norms })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = StudyResult::new(StudyKind::Rates, records);
    if is_degenerate(&result.records) {
        result.flags.push("degenerate".into());
        return Ok(result.finish());
    }
    let eps = &cfg.eps;
    let gaps = result.norm("gap");
    let n = eps.len();
    let last = &result.records[n - 1];
    let prev = &result.records[n - 2];
    let f1 = last.report.f1;
    let delta_x = richardson(
        prev.report.eps,
        prev.report.delta,
        last.report.eps,
        last.report.delta,
    );
    let rec_x = richardson(
        prev.report.eps,
        prev.norms["recovery_delta"],
        last.report.eps,
        last.norms["recovery_delta"],
    );
    result.extrapolated.insert("delta".into(), delta_x);
    result.extrapolated.insert("recovery_delta".into(), rec_x);
    match fit_loglog(eps, &gaps) {
        Some(fit) if fit.residual <= cfg.tolerances.fit_residual => {
            result.fits.insert("gap".into(), fit);
        }
        _ => result.flags.push("gap_fit_refused".into()),
    }
    let tol = &cfg.tolerances;
    let recovery_above = result
        .records
        .iter()
        .all(|r| r.norms["recovery_f_eps"] >= r.report.f_eps - 1e-12 * r.report.f_eps.abs());
    let recovery_from_above = result
        .records
        .iter()
        .all(|r| r.norms["recovery_delta"] >= r.report.f1);
    result
        .verdicts
        .insert("gap_decreasing".into(), strictly_decreasing(&gaps));
    result.verdicts.insert(
        "final_gap".into(),
        gaps[n - 1] <= tol.rate_final_gap * f1.abs(),
    );
    result.verdicts.insert(
        "extrapolation".into(),
        relative_gap(delta_x, f1) <= tol.rate_extrapolation,
    );
    result
        .verdicts
        .insert("recovery_above_minimum".into(), recovery_above);
    result.verdicts.insert(
        "recovery_extrapolation".into(),
        relative_gap(rec_x, f1) <= tol.rate_extrapolation,
    );
    if !recovery_from_above {
        result.flags.push("recovery_delta_below_first_order".into());
    }
    Ok(result.finish())
}

/// `‖ũ_ε − ũ₀‖_{L²(Σ₁)}` over the `ε` list, with the wrong-slope profile
/// `u₀(1 − β d/(1 + βh/2))` as negative control.
pub fn stretch_convergence_study(cfg: &StudyConfig) -> Result<StudyResult> {
    let base = cfg.geometry()?;
    let (n_t, n_s) = (cfg.stretch.grid_t, cfg.stretch.grid_s);
    let records = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            let inst = solve_instance(cfg, &base, eps)?;
            let (mesh, geom, sol) = (&inst.mesh, &inst.geometry, &inst.solution);
            let pulled = pullback(&sol.u_eps, mesh, geom, n_t, n_s)?;
            let limit = limit_profile(&sol.u0, mesh, geom, n_t, n_s)?;
            let control = limit_profile_with(&sol.u0, mesh, geom, n_t, n_s, |beta, h| {
                beta / (1.0 + 0.5 * beta * h)
            })?;
            let zero = limit.map(|_, _, _| 0.0);
            let mut norms = BTreeMap::new();
            norms.insert("distance".into(), pulled.l2_distance(&limit, geom)?);
            norms.insert(
                "control_distance".into(),
                pulled.l2_distance(&control, geom)?,
            );
            norms.insert("limit_norm".into(), limit.l2_distance(&zero, geom)?);
            Ok(StudyRecord {
                report: sol.report.clone(),
                norms,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = StudyResult::new(StudyKind::Stretch, records);
    if is_degenerate(&result.records) {
        result.flags.push("degenerate".into());
        return Ok(result.finish());
    }
    let distances = result.norm("distance");
    let control = result.norm("control_distance");
    if let Some(fit) = fit_loglog(&cfg.eps, &distances) {
        result.fits.insert("distance".into(), fit);
    }
    let tol = &cfg.tolerances;
    result
        .verdicts
        .insert("monotone".into(), strictly_decreasing(&distances));
    result.verdicts.insert(
        "final_distance".into(),
        *distances.last().expect("non-empty") < tol.stretch_final,
    );
    result.verdicts.insert(
        "control_rejected".into(),
        control.iter().cloned().fold(f64::INFINITY, f64::min) > tol.stretch_control,
    );
    Ok(result.finish())
}

/// Fits the decay of `∫_{Σ_ε}|∇^{∂Ω}u_ε|²` in `ε`.
pub fn scaling_study(cfg: &StudyConfig) -> Result<StudyResult> {
    let base = cfg.geometry()?;
    let records = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            let inst = solve_instance(cfg, &base, eps)?;
            let layer = layer_energy(&inst.solution.u_eps, &inst.mesh, &inst.geometry)? / eps;
            let r = inst.solution.report;
            let mut norms = BTreeMap::new();
            norms.insert("layer_gradient_energy".into(), layer);
            norms.insert(
                "tangential_fraction".into(),
                if layer > 0.0 {
                    r.tangential_layer_energy / layer
                } else {
                    0.0
                },
            );
            Ok(StudyRecord { report: r, norms })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = StudyResult::new(StudyKind::Scaling, records);
    let fractions = result.norm("tangential_fraction");
    if fractions.iter().all(|f| *f < 1e-4) {
        result.flags.push("degenerate".into());
        return Ok(result.finish());
    }
    let energies: Vec<f64> = result
        .records
        .iter()
        .map(|r| r.report.tangential_layer_energy)
        .collect();
    let tol = &cfg.tolerances;
    match fit_loglog(&cfg.eps, &energies) {
        Some(fit) => {
            result
                .verdicts
                .insert("slope".into(), fit.slope >= tol.scaling_slope);
            result
                .verdicts
                .insert("fit_residual".into(), fit.residual < tol.scaling_residual);
            result.fits.insert("tangential".into(), fit);
        }
        None => {
            result.flags.push("fit_refused".into());
            result.verdicts.insert("slope".into(), false);
        }
    }
    Ok(result.finish())
}

/// The radial oracle over the `ε` list; needs a circle, a constant profile
/// and a constant source.
pub fn oracle_study(cfg: &StudyConfig) -> Result<(StudyResult, crate::oracle::RadialSequence)> {
    let radius = match cfg.geometry {
        crate::config::GeometrySpec::Circle { radius } => radius,
        _ => {
            return Err(Error::Config(
                "key `geometry`: the oracle needs a circle".into(),
            ))
        }
    };
    if cfg.profile.modes() > 0
        && (cfg
            .profile
            .cos
            .iter()
            .chain(&cfg.profile.sin)
            .any(|c| *c != 0.0))
    {
        return Err(Error::Config(
            "key `profile`: the oracle needs a constant profile".into(),
        ));
    }
    if cfg.source.gradient != [0.0, 0.0] {
        return Err(Error::Config(
            "key `source`: the oracle needs a constant source".into(),
        ));
    }
    let rc = RadialConfig {
        n: cfg.oracle.dimension,
        radius,
        h: cfg.profile.mean,
        beta: cfg.beta,
        c: cfg.source.constant,
    };
    let seq = radial_sequence(&rc, &cfg.eps)?;
    let records = seq
        .reports
        .iter()
        .map(|r| {
            let mut norms = BTreeMap::new();
            norms.insert("gap".into(), (r.delta - r.f1).abs());
            StudyRecord {
                report: r.clone(),
                norms,
            }
        })
        .collect();
    let mut result = StudyResult::new(StudyKind::Oracle, records);
    if is_degenerate(&result.records) {
        result.flags.push("degenerate".into());
        return Ok((result.finish(), seq));
    }
    let gaps = result.norm("gap");
    let f1 = seq.reports[0].f1;
    result
        .verdicts
        .insert("gap_decreasing".into(), strictly_decreasing(&gaps));
    if let Some(x) = seq.extrapolated_delta {
        result.extrapolated.insert("delta".into(), x);
        result.verdicts.insert(
            "extrapolation".into(),
            relative_gap(x, f1) <= cfg.tolerances.oracle_extrapolation,
        );
    }
    if let Some(fit) = fit_loglog(&cfg.eps, &gaps) {
        result.fits.insert("gap".into(), fit);
    }
    Ok((result.finish(), seq))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeResult {
    pub initial: FourierSeries,
    pub h_star: FourierSeries,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub mass: f64,
    pub constraint_violation: f64,
    /// `(max h* − min h*)/mean h*`.
    pub relative_spread: f64,
    /// Pearson correlation of `h*` and the curvature at arc-length-uniform samples.
    pub curvature_correlation: f64,
    pub verdicts: BTreeMap<String, bool>,
    pub pass: bool,
}

impl OptimizeResult {
    pub fn trace_non_increasing(&self) -> bool {
        self.trace.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn metrics(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("iterations".into(), self.iterations as f64);
        m.insert("converged".into(), if self.converged { 1.0 } else { 0.0 });
        m.insert("mass".into(), self.mass);
        m.insert("constraint_violation".into(), self.constraint_violation);
        m.insert("relative_spread".into(), self.relative_spread);
        m.insert("curvature_correlation".into(), self.curvature_correlation);
        m.insert("initial_objective".into(), self.trace[0]);
        m.insert(
            "final_objective".into(),
            *self.trace.last().expect("non-empty trace"),
        );
        for (name, v) in &self.verdicts {
            m.insert(format!("verdict_{name}"), if *v { 1.0 } else { 0.0 });
        }
        m
    }

    pub fn write_trace_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# schema: optimize_trace v1")?;
        writeln!(
            w,
            "# columns: iteration, objective G_eps(h) after the accepted step"
        )?;
        writeln!(w, "iteration,objective")?;
        for (i, g) in self.trace.iter().enumerate() {
            writeln!(w, "{i},{g:.17e}")?;
        }
        Ok(())
    }

    /// `t, x, y, curvature, h_initial, h_star` at `samples` parameters.
    pub fn write_profile_csv<W: std::io::Write>(
        &self,
        cfg: &StudyConfig,
        samples: usize,
        mut w: W,
    ) -> std::io::Result<()> {
        let curve = cfg.curve().map_err(std::io::Error::other)?;
        writeln!(w, "# schema: optimize_profile v1")?;
        writeln!(
            w,
            "# columns: boundary parameter, point, curvature, initial and optimized thickness"
        )?;
        writeln!(w, "t,x,y,curvature,h_initial,h_star")?;
        for i in 0..samples {
            let t = i as f64 / samples as f64;
            let f = curve.frame(t);
            writeln!(
                w,
                "{t:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                f.point[0],
                f.point[1],
                f.curvature,
                self.initial.value(t),
                self.h_star.value(t)
            )?;
        }
        Ok(())
    }
}

struct Profiles<'a> {
    mesh: &'a LayerMesh,
    problem: LimitProblem<'a>,
    cfg: &'a StudyConfig,
    curve: crate::geometry::ClosedCurve,
    d0: f64,
    modes: usize,
    /// `∫ bₖ |γ'|` for every coefficient basis function.
    mass_weights: Vec<f64>,
    length: f64,
    samples: usize,
}

impl Profiles<'_> {
    fn series(&self, c: &[f64]) -> FourierSeries {
        FourierSeries::from_vector(c)
    }

    fn mass(&self, c: &[f64]) -> f64 {
        c.iter().zip(&self.mass_weights).map(|(a, b)| a * b).sum()
    }

    fn objective(&self, c: &[f64]) -> Result<f64> {
        let h = BoundaryField::from_series(self.series(c));
        let (lo, hi) = h.range(self.samples);
        if !(lo > 0.0) || hi >= self.d0 {
            return Err(Error::Guard(format!(
                "profile range [{lo:.4}, {hi:.4}] not admissible"
            )));
        }
        let opts = self.cfg.solver.options();
        let beta = self.cfg.beta;
        let f = |p: Point| self.cfg.source.eval(p);
        let (u0, _) = self.problem.solve(&h, beta, &opts)?;
        let f0 = energy_f0(&u0, self.mesh, &h, beta, &f)?;
        let eps = self.cfg.optimize.eps;
        if eps == 0.0 {
            return Ok(f0);
        }
        Ok(f0 + eps * first_order_with(&u0, self.mesh, &self.curve, &h, beta)?)
    }

    fn sample(&self, c: &[f64]) -> Vec<f64> {
        let series = self.series(c);
        (0..self.samples)
            .map(|i| series.value(i as f64 / self.samples as f64))
            .collect()
    }

    /// Mass shift, then up to ten rounds of clamping at `h_min` and shifting.
    /// Whatever violation survives is removed by contracting `h` toward the
    /// constant profile of the same mass, which leaves feasible points fixed.
    fn project(&self, c: &mut [f64], mass: f64) {
        let h_min = self.cfg.optimize.h_min;
        c[0] += (mass - self.mass(c)) / self.length;
        for _ in 0..10 {
            let values = self.sample(c);
            if values.iter().all(|v| *v >= h_min) {
                return;
            }
            let clamped: Vec<f64> = values.iter().map(|v| v.max(h_min)).collect();
            let refit = FourierSeries::from_samples(&clamped, self.modes).to_vector(self.modes);
            c.copy_from_slice(&refit);
            c[0] += (mass - self.mass(c)) / self.length;
        }
        let level = mass / self.length;
        let lowest = self.sample(c).into_iter().fold(f64::INFINITY, f64::min);
        if lowest < h_min {
            let lambda = (level - h_min) / (level - lowest);
            c[0] = level + lambda * (c[0] - level);
            c[1..].iter_mut().for_each(|v| *v *= lambda);
        }
    }

    fn gradient(&self, c: &[f64]) -> Result<Vec<f64>> {
        let step = self.cfg.optimize.fd_step;
        (0..c.len())
            .into_par_iter()
            .map(|k| {
                let mut plus = c.to_vec();
                let mut minus = c.to_vec();
                plus[k] += step;
                minus[k] -= step;
                Ok((self.objective(&plus)? - self.objective(&minus)?) / (2.0 * step))
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

/// Projected gradient descent on `G_ε(h) = F₀(u₀(h), h) + εF⁽¹⁾(u₀(h), h)`
/// under `∫_{∂Ω} h = m` and `h ≥ h_min`, in the Fourier coefficients of `h`.
pub fn optimize_profile(cfg: &StudyConfig) -> Result<OptimizeResult> {
    let o = &cfg.optimize;
    let curve = cfg.curve()?;
    let mesh = build_interior_mesh(&curve, cfg.mesh_params(cfg.eps[0]))?;
    let f = |p: Point| cfg.source.eval(p);
    let modes = o.modes;
    let dim = 2 * modes + 1;
    let quad_panels = 4 * curve.modes().max(modes).max(32);
    let mass_weights: Vec<f64> = (0..dim)
        .map(|k| {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            BoundaryField::from_series(FourierSeries::from_vector(&e))
                .boundary_integral(&curve, quad_panels)
        })
        .collect();
    let length = mass_weights[0];
    let d0 = LayerGeometry::curvature_radius(&curve);
    let profiles = Profiles {
        mesh: &mesh,
        problem: LimitProblem::new(&mesh, &f),
        cfg,
        curve: curve.clone(),
        d0,
        modes,
        mass_weights,
        length,
        samples: 64 * modes.max(4),
    };

    let mut start = cfg.profile.to_vector(modes);
    start[1] += o.initial_modulation * cfg.profile.mean;
    let mass = o.mass.unwrap_or_else(|| profiles.mass(&start));
    if mass <= o.h_min * length {
        return Err(Error::Config(format!(
            "key `optimize.mass`: {mass:.6} is not above h_min·|∂Ω| = {:.6}",
            o.h_min * length
        )));
    }
    let mut c = start.clone();
    profiles.project(&mut c, mass);
    let initial = profiles.series(&c);
    let mut value = profiles.objective(&c)?;
    let mut trace = vec![value];
    let mut alpha = 0.0;
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut converged = false;
    let mut iterations = 0;
    let w = profiles.mass_weights.clone();
    let ww = dot(&w, &w);

    while iterations < o.max_iterations {
        iterations += 1;
        let mut g = profiles.gradient(&c)?;
        let along = dot(&g, &w) / ww;
        g.iter_mut().zip(&w).for_each(|(gi, wi)| *gi -= along * wi);
        let gnorm = dot(&g, &g).sqrt();
        if gnorm == 0.0 {
            converged = true;
            break;
        }
        alpha = match &previous {
            Some((c_old, g_old)) => {
                let s: Vec<f64> = c.iter().zip(c_old).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g.iter().zip(g_old).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 0.0 {
                    dot(&s, &s) / sy
                } else {
                    2.0 * alpha
                }
            }
            None => 0.05 * cfg.profile.mean.abs().max(o.h_min) / gnorm,
        };
        let mut accepted = None;
        let mut smallest_excess = f64::INFINITY;
        for _ in 0..=o.max_halvings {
            let mut trial: Vec<f64> = c.iter().zip(&g).map(|(ci, gi)| ci - alpha * gi).collect();
            profiles.project(&mut trial, mass);
            match profiles.objective(&trial) {
                Ok(v) if v <= value => {
                    accepted = Some((trial, v));
                    break;
                }
                Ok(v) => {
                    smallest_excess = smallest_excess.min((v - value) / value.abs().max(1e-300))
                }
                Err(e) if e.is_guard() => {}
                Err(e) => return Err(e),
            }
            alpha *= 0.5;
        }
        let Some((next, next_value)) = accepted else {
            if smallest_excess < 1e-12 {
                converged = true;
                break;
            }
            return Err(Error::Optimizer(format!(
                "no decrease after {} step halvings at iteration {iterations}",
                o.max_halvings
            )));
        };
        let decrease = (value - next_value) / value.abs().max(1e-300);
        previous = Some((c, g));
        c = next;
        value = next_value;
        trace.push(value);
        if decrease < o.relative_decrease {
            converged = true;
            break;
        }
    }

    let h_star = profiles.series(&c);
    let field = BoundaryField::from_series(h_star.clone());
    let constraint_violation = (field.boundary_integral(&curve, quad_panels) - mass).abs() / mass;
    let n = profiles.samples;
    let total = curve.length();
    let (hs, ks): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|i| {
            let t = curve.parameter_at_arc_length(total * i as f64 / n as f64);
            (h_star.value(t), curve.curvature(t))
        })
        .unzip();
    let (lo, hi) = field.range(n);
    let relative_spread = (hi - lo) / h_star.mean;
    let mut result = OptimizeResult {
        initial,
        h_star,
        curvature_correlation: correlation(&hs, &ks),
        trace,
        iterations,
        converged,
        mass,
        constraint_violation,
        relative_spread,
        verdicts: BTreeMap::new(),
        pass: false,
    };
    result
        .verdicts
        .insert("trace_non_increasing".into(), result.trace_non_increasing());
    result.verdicts.insert(
        "constraint".into(),
        constraint_violation < cfg.tolerances.constraint,
    );
    if cfg.geometry.is_circle() {
        result.verdicts.insert(
            "constant_on_circle".into(),
            relative_spread < cfg.tolerances.optimizer_constant,
        );
    }
    result.pass = result.verdicts.values().all(|v| *v);
    Ok(result)
}
