mod common;

use common::*;
use layerlab::geometry::{Direction, FiberTarget, QuadratureRule};
use proptest::prelude::*;

#[test]
fn pullback_quadrature_matches_direct_layer_quadrature() {
    type Integrand = (&'static str, fn([f64; 2]) -> f64);
    let integrands: [Integrand; 3] = [
        ("1", |_| 1.0),
        ("x^2", |p| p[0] * p[0]),
        ("sin y", |p| p[1].sin()),
    ];
    for (name, g) in [
        ("circle", disk(0.2, 0.1)),
        ("ellipse", ellipse(modulated(0.2, 0.3), 0.1)),
    ] {
        let rule = QuadratureRule::for_geometry(&g);
        for eps in [0.5, 0.1, 0.02] {
            for (label, f) in integrands {
                let direct = g
                    .fiber_integral(eps, f, FiberTarget::LayerVolume, rule)
                    .unwrap();
                let pulled = g.pullback_integral(eps, f, rule).unwrap();
                let scale = direct.abs().max(1e-3 * eps);
                assert!(
                    (direct - pulled).abs() < 1e-6 * scale,
                    "{name} {label} {eps}: {direct} {pulled}"
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stretch_round_trip(t in 0.0f64..1.0, s in 0.0f64..1.0, eps in 0.01f64..1.0) {
        let g = ellipse(modulated(0.2, 0.3), 1.0);
        let z = g.point_at(t, s * g.h().value(t));
        let x = g.stretch(Direction::Forward, eps, z).unwrap();
        let back = g.stretch(Direction::Inverse, eps, x).unwrap();
        prop_assert!((back[0] - z[0]).abs() < 1e-9 && (back[1] - z[1]).abs() < 1e-9);
        let c = g.project(x).unwrap();
        prop_assert!((c.d - eps * s * g.h().value(t)).abs() < 1e-9);
    }

    #[test]
    fn jacobians_are_positive_and_ordered(t in 0.0f64..1.0, s in 0.0f64..1.0, eps in 0.01f64..1.0) {
        let g = ellipse(modulated(0.2, 0.3), 1.0);
        let z = g.point_at(t, s * g.h().value(t));
        let j = g.jacobians(eps, z).unwrap();
        prop_assert!(j.j_eps > 0.0 && j.j0 > 0.0 && j.jtau0 > 0.0);
        prop_assert!(j.jtau0 <= j.j0);
        prop_assert!(j.j_eps >= j.j0 - 1e-15);
    }
}
