#![allow(dead_code)]

use layerlab::geometry::{BoundaryField, ClosedCurve, FourierSeries, LayerGeometry};
use layerlab::meshing::{build_mesh, LayerMesh, MeshParams};

pub fn disk(h: f64, eps: f64) -> LayerGeometry {
    LayerGeometry::new(
        ClosedCurve::circle(1.0).unwrap(),
        BoundaryField::constant(h),
        eps,
        1.0,
        None,
    )
    .unwrap()
}

pub fn ellipse(h: BoundaryField, eps: f64) -> LayerGeometry {
    LayerGeometry::new(ClosedCurve::ellipse(2.0, 1.0).unwrap(), h, eps, 1.0, None).unwrap()
}

pub fn modulated(mean: f64, amp: f64) -> BoundaryField {
    BoundaryField::from_series(FourierSeries::new(mean, vec![amp * mean], vec![0.0]))
}

pub fn mesh(geom: &LayerGeometry, n_b: usize, m: usize) -> LayerMesh {
    build_mesh(
        geom,
        geom.eps(),
        MeshParams {
            boundary_panels: n_b,
            fibers: m,
            interior_grading: 1.0,
        },
    )
    .unwrap()
}

pub fn one(_: [f64; 2]) -> f64 {
    1.0
}
