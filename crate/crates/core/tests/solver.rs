mod common;

use common::*;
use layerlab::geometry::BoundaryField;
use layerlab::linalg::SolverOptions;
use layerlab::meshing::{build_interior_mesh, MeshParams};
use layerlab::oracle::{radial_limit, radial_solution, RadialConfig};
use layerlab::solver::*;
use layerlab::Error;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn zero_source_gives_zero() {
    let g = disk(0.2, 0.1);
    let m = mesh(&g, 64, 2);
    let (u, _) = solve_diffraction(&m, &g, &|_| 0.0, &opts()).unwrap();
    assert_eq!(u.max_abs(), 0.0);
    let (u0, _) = solve_limit(&m, g.h(), 1.0, &|_| 0.0, &opts()).unwrap();
    assert_eq!(u0.max_abs(), 0.0);
}

#[test]
fn solution_is_linear_in_the_source() {
    let g = ellipse(modulated(0.2, 0.3), 0.1);
    let m = mesh(&g, 64, 3);
    let (a, _) = solve_diffraction(&m, &g, &one, &opts()).unwrap();
    let (b, _) = solve_diffraction(&m, &g, &|p| p[0], &opts()).unwrap();
    let (c, _) = solve_diffraction(&m, &g, &|p| 2.0 - 3.0 * p[0], &opts()).unwrap();
    for k in 0..c.len() {
        let expected = 2.0 * a.values[k] - 3.0 * b.values[k];
        assert!((c.values[k] - expected).abs() < 1e-9 * (1.0 + expected.abs()));
    }
}

#[test]
fn disk_matches_radial_oracle() {
    let eps = 0.05;
    let g = disk(0.2, eps);
    let m = mesh(&g, 128, 4);
    let (u, stats) = solve_diffraction(&m, &g, &one, &opts()).unwrap();
    assert!(stats.relative_residual <= 1e-10);
    let exact = radial_solution(&RadialConfig::disk(), eps).unwrap();
    for i in 0..m.boundary_panels() {
        let rel = (u.values[i] - exact.inner(1.0)).abs() / exact.inner(1.0);
        assert!(rel < 5e-3, "interface node {i}: {rel}");
        let outer = u.values[m.layer_vertex(i, m.fibers())];
        let rel = (outer - exact.layer(1.0 + 0.2 * eps)).abs() / exact.layer(1.0 + 0.2 * eps);
        assert!(rel < 5e-3, "outer node {i}: {rel}");
    }
    let (u0, _) = solve_limit(&m, g.h(), 1.0, &one, &opts()).unwrap();
    let limit = radial_limit(&RadialConfig::disk())
        .unwrap()
        .boundary_value();
    for i in 0..m.boundary_panels() {
        assert!((u0.values[i] - limit).abs() / limit < 5e-3);
    }
}

#[test]
fn nonnegative_source_gives_nonnegative_solution() {
    let g = ellipse(modulated(0.2, 0.5), 0.1);
    let m = mesh(&g, 96, 4);
    let (u, _) = solve_diffraction(&m, &g, &|p| 1.0 + p[0] * p[0], &opts()).unwrap();
    let min = u.values.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min >= -1e-12 * u.max_abs(), "{min}");
}

#[test]
fn interior_only_mesh_is_rejected_for_the_layered_problem() {
    let g = disk(0.2, 0.1);
    let interior = build_interior_mesh(
        g.curve(),
        MeshParams {
            boundary_panels: 32,
            fibers: 2,
            interior_grading: 1.0,
        },
    )
    .unwrap();
    assert!(matches!(
        solve_diffraction(&interior, &g, &one, &opts()),
        Err(Error::Mismatch(_))
    ));
    let other = disk(0.2, 0.05);
    let m = mesh(&g, 32, 2);
    assert!(matches!(
        solve_diffraction(&m, &other, &one, &opts()),
        Err(Error::Mismatch(_))
    ));
}

#[test]
fn limit_problem_reuses_assembly() {
    let g = ellipse(BoundaryField::constant(0.2), 0.1);
    let m = mesh(&g, 64, 2);
    let problem = LimitProblem::new(&m, &one);
    let (a, _) = problem.solve(&modulated(0.2, 0.4), 1.0, &opts()).unwrap();
    let (b, _) = solve_limit(&m, &modulated(0.2, 0.4), 1.0, &one, &opts()).unwrap();
    assert_eq!(a, b);
    assert!(problem.solve(g.h(), 0.0, &opts()).is_err());
}

#[test]
fn pullback_hits_mesh_nodes() {
    for eps in [1.0, 0.1] {
        let g = disk(0.2, eps);
        let m = mesh(&g, 32, 4);
        let u = ScalarField::new(
            m.vertices()
                .iter()
                .map(|p| p[0] + 2.0 * p[1] * p[1])
                .collect(),
        );
        let field = pullback(&u, &m, &g, 32, 5).unwrap();
        for i in 0..32 {
            for j in 0..5 {
                let expected = u.values[m.layer_vertex(i, j)];
                assert!((field.get(i, j) - expected).abs() < 1e-9, "{eps} {i} {j}");
            }
        }
    }
}

#[test]
fn pullback_at_unit_eps_samples_the_field() {
    // Ψ₁ is the identity: a linear function is reproduced up to the
    // polygonal approximation of the fibers.
    let g = ellipse(modulated(0.2, 0.3), 1.0);
    let m = mesh(&g, 256, 8);
    let u = ScalarField::new(m.vertices().iter().map(|p| 1.0 + p[0] - p[1]).collect());
    let field = pullback(&u, &m, &g, 100, 7).unwrap();
    for i in 0..100 {
        for j in 0..7 {
            let t = field.t(i);
            let p = g.point_at(t, field.s(j) * g.h().value(t));
            assert!((field.get(i, j) - (1.0 + p[0] - p[1])).abs() < 2e-3);
        }
    }
}

#[test]
fn limit_profile_and_recovery_agree_on_nodes() {
    let eps = 0.1;
    let g = disk(0.2, eps);
    let m = mesh(&g, 64, 4);
    let (u0, _) = solve_limit(&m, g.h(), 1.0, &one, &opts()).unwrap();
    let rec = recovery_sequence(&u0, &m, &g).unwrap();
    assert_eq!(&rec.values[..m.n_interior_vertices()], &u0.values[..]);
    let factor = 1.0 - 0.2 / 1.2;
    for i in 0..64 {
        let outer = rec.values[m.layer_vertex(i, 4)];
        assert!((outer - u0.values[i] * factor).abs() < 1e-9);
    }
    let profile = limit_profile(&u0, &m, &g, 64, 5).unwrap();
    let pulled = pullback(&rec, &m, &g, 64, 5).unwrap();
    assert!(profile.l2_distance(&pulled, &g).unwrap() < 1e-8);
    for i in 0..64 {
        assert!((profile.get(i, 0) - u0.values[i]).abs() < 1e-12);
    }
}

#[test]
fn extension_by_trace_is_constant_on_fibers() {
    let g = disk(0.2, 0.1);
    let m = mesh(&g, 32, 3);
    let (u0, _) = solve_limit(&m, g.h(), 1.0, &one, &opts()).unwrap();
    let ext = extend_by_trace(&u0, &m).unwrap();
    assert_eq!(ext.len(), m.n_vertices());
    for j in 0..=3 {
        assert_eq!(ext.values[m.layer_vertex(5, j)], u0.values[5]);
    }
}

#[test]
fn field_exports() {
    let g = disk(0.2, 0.1);
    let m = mesh(&g, 32, 2);
    let u = ScalarField::zeros(m.n_vertices());
    let mut buf = Vec::new();
    u.write_csv(&m, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("# schema: field v1\nvertex,x,y,value\n"));
    assert_eq!(text.lines().count(), 2 + m.n_vertices());
    let field = pullback(&u, &m, &g, 8, 3).unwrap();
    let mut buf = Vec::new();
    field.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2 + 24);
}
