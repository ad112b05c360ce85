//! Boundary-fitted triangulations of `Ω_ε = Ω ∪ Σ_ε`.
//!
//! The layer is a structured band of `n_b × m` quadrilaterals, each split in
//! two triangles, with nodes at the exact offsets `γ(tᵢ) + (j/m)·ε h(tᵢ) ν₀(tᵢ)`.
//! The interior is an unstructured constrained Delaunay mesh whose boundary
//! is exactly the interface polyline of the layer, so the conductivity jump
//! and both boundaries are carried by element edges.
//!
//! Vertex numbering: the `n_b` interface nodes come first, then the interior
//! Steiner nodes, then layer fibers `j = 1..=m`, each of length `n_b`. The
//! interior-only sub-mesh therefore uses the contiguous range
//! `0..n_interior_vertices()`.

use std::collections::HashSet;
use std::io::Write;

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::geometry::{ClosedCurve, LayerGeometry};
use crate::{Error, Point, Result};

/// Minimum interior angle accepted for unstructured triangles, in degrees.
pub const MIN_ANGLE_FLOOR_DEG: f64 = 20.0;

const SMOOTHING_PASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Interior,
    Layer,
}

impl Region {
    pub fn code(self) -> u8 {
        match self {
            Region::Interior => 0,
            Region::Layer => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    /// `∂Ω`, between the interior and the layer.
    Interface,
    /// `∂Ω_ε`, carrying the Robin condition.
    Outer,
}

impl BoundaryTag {
    pub fn code(self) -> u8 {
        match self {
            BoundaryTag::Interface => 1,
            BoundaryTag::Outer => 2,
        }
    }
}

/// Boundary edge `a → b` spanning the curve parameters `[t0, t1]` (`t1` may
/// equal 1 on the closing edge).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub t0: f64,
    pub t1: f64,
}

impl BoundaryEdge {
    pub fn mid_parameter(&self) -> f64 {
        0.5 * (self.t0 + self.t1)
    }

    /// Curve parameter at fraction `s ∈ [0, 1]` along the edge.
    pub fn parameter_at(&self, s: f64) -> f64 {
        self.t0 + s * (self.t1 - self.t0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshParams {
    /// Number of boundary panels `n_b`.
    pub boundary_panels: usize,
    /// Number of fibers `m` across the layer.
    pub fibers: usize,
    /// Interior target edge length relative to the interface panel length.
    pub interior_grading: f64,
}

impl Default for MeshParams {
    fn default() -> Self {
        Self {
            boundary_panels: 128,
            fibers: 4,
            interior_grading: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LayerMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    regions: Vec<Region>,
    interface_edges: Vec<BoundaryEdge>,
    outer_edges: Vec<BoundaryEdge>,
    boundary_params: Vec<f64>,
    n_interior_vertices: usize,
    fibers: usize,
    eps: f64,
    params: MeshParams,
}

/// Mesh of `Ω_ε` for the layer of `geom` at thickness parameter `eps`.
pub fn build_mesh(geom: &LayerGeometry, eps: f64, params: MeshParams) -> Result<LayerMesh> {
    if params.fibers < 2 {
        return Err(Error::InvalidParameter(format!(
            "at least 2 fibers are required, got {}",
            params.fibers
        )));
    }
    let geom = geom.with_eps(eps)?;
    let mut mesh = build_interior_mesh(geom.curve(), params)?;
    mesh.add_layer(&geom, params.fibers);
    mesh.params = params;
    mesh.check_positive()?;
    Ok(mesh)
}

/// Mesh of `Ω` alone; interface edges are tagged but there is no layer.
pub fn build_interior_mesh(curve: &ClosedCurve, params: MeshParams) -> Result<LayerMesh> {
    let n_b = params.boundary_panels;
    if n_b < 16 {
        return Err(Error::InvalidParameter(format!(
            "at least 16 boundary panels are required, got {n_b}"
        )));
    }
    if !(params.interior_grading > 0.0) {
        return Err(Error::InvalidParameter(
            "interior grading must be positive".into(),
        ));
    }
    let len = curve.length();
    let boundary_params: Vec<f64> = (0..n_b)
        .map(|i| curve.parameter_at_arc_length(len * i as f64 / n_b as f64))
        .collect();
    let polygon: Vec<Point> = boundary_params.iter().map(|&t| curve.point(t)).collect();
    let perimeter: f64 = (0..n_b)
        .map(|i| dist(polygon[i], polygon[(i + 1) % n_b]))
        .sum();
    let spacing = perimeter / n_b as f64 * params.interior_grading;

    let mut steiner = lattice_points(&polygon, spacing);
    let mut triangles = Vec::new();
    for pass in 0..=SMOOTHING_PASSES {
        triangles = constrained_delaunay(&polygon, &steiner)?;
        if pass < SMOOTHING_PASSES {
            steiner = smooth(&polygon, &steiner, &triangles);
        }
    }

    let mut vertices = polygon;
    vertices.extend_from_slice(&steiner);
    let interface_edges = (0..n_b)
        .map(|i| BoundaryEdge {
            a: i,
            b: (i + 1) % n_b,
            t0: boundary_params[i],
            t1: if i + 1 == n_b {
                1.0
            } else {
                boundary_params[i + 1]
            },
        })
        .collect();
    let n_interior_vertices = vertices.len();
    let regions = vec![Region::Interior; triangles.len()];
    let mesh = LayerMesh {
        vertices,
        triangles,
        regions,
        interface_edges,
        outer_edges: Vec::new(),
        boundary_params,
        n_interior_vertices,
        fibers: 0,
        eps: 0.0,
        params,
    };
    mesh.check_positive()?;
    let min_angle = mesh.min_angle(Region::Interior);
    if min_angle < MIN_ANGLE_FLOOR_DEG {
        return Err(Error::MeshQuality(format!(
            "interior minimum angle {min_angle:.2}° is below the {MIN_ANGLE_FLOOR_DEG}° floor \
             ({} triangles, spacing {spacing:.4})",
            mesh.triangles.len()
        )));
    }
    Ok(mesh)
}

impl LayerMesh {
    fn add_layer(&mut self, geom: &LayerGeometry, fibers: usize) {
        let n_b = self.boundary_params.len();
        let eps = geom.eps();
        for j in 1..=fibers {
            let s = j as f64 / fibers as f64;
            for &t in &self.boundary_params {
                let d = s * eps * geom.h().value(t);
                self.vertices.push(geom.point_at(t, d));
            }
        }
        self.fibers = fibers;
        self.eps = eps;
        for j in 0..fibers {
            for i in 0..n_b {
                let i1 = (i + 1) % n_b;
                let (a, b) = (self.layer_vertex(i, j), self.layer_vertex(i1, j));
                let (c, d) = (self.layer_vertex(i1, j + 1), self.layer_vertex(i, j + 1));
                for tri in [[a, b, c], [a, c, d]] {
                    let tri = self.oriented(tri);
                    self.triangles.push(tri);
                    self.regions.push(Region::Layer);
                }
            }
        }
        self.outer_edges = (0..n_b)
            .map(|i| BoundaryEdge {
                a: self.layer_vertex(i, fibers),
                b: self.layer_vertex((i + 1) % n_b, fibers),
                t0: self.boundary_params[i],
                t1: if i + 1 == n_b {
                    1.0
                } else {
                    self.boundary_params[i + 1]
                },
            })
            .collect();
    }

    fn oriented(&self, [a, b, c]: [usize; 3]) -> [usize; 3] {
        if signed_area(self.vertices[a], self.vertices[b], self.vertices[c]) < 0.0 {
            [a, c, b]
        } else {
            [a, b, c]
        }
    }

    fn check_positive(&self) -> Result<()> {
        for (k, tri) in self.triangles.iter().enumerate() {
            let area = self.triangle_area(k);
            if !(area > 0.0) {
                return Err(Error::MeshQuality(format!(
                    "triangle {k} {tri:?} ({:?}) has non-positive area {area:.3e}",
                    self.regions[k]
                )));
            }
        }
        Ok(())
    }

    /// Index of layer node `i` on fiber level `j` (`j = 0` is the interface).
    pub fn layer_vertex(&self, i: usize, j: usize) -> usize {
        let n_b = self.boundary_params.len();
        if j == 0 {
            i
        } else {
            self.n_interior_vertices + (j - 1) * n_b + i
        }
    }

    /// Quad `(i, j)` of the layer containing triangle `k` (panel `i`, between
    /// fiber levels `j` and `j + 1`), or `None` for interior triangles.
    pub fn layer_panel(&self, k: usize) -> Option<(usize, usize)> {
        let n_b = self.boundary_params.len();
        let first = self.triangles.len() - 2 * n_b * self.fibers;
        if k < first || k >= self.triangles.len() {
            return None;
        }
        let q = (k - first) / 2;
        Some((q % n_b, q / n_b))
    }

    /// Parameter interval `[tᵢ, tᵢ₊₁]` of boundary panel `i` (the last one ends at 1).
    pub fn panel_parameters(&self, i: usize) -> (f64, f64) {
        let params = &self.boundary_params;
        let hi = if i + 1 == params.len() {
            1.0 + params[0]
        } else {
            params[i + 1]
        };
        (params[i], hi)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn interface_edges(&self) -> &[BoundaryEdge] {
        &self.interface_edges
    }

    pub fn outer_edges(&self) -> &[BoundaryEdge] {
        &self.outer_edges
    }

    /// Curve parameters `tᵢ` of the interface nodes, increasing in `[0, 1)`.
    pub fn boundary_params(&self) -> &[f64] {
        &self.boundary_params
    }

    pub fn boundary_panels(&self) -> usize {
        self.boundary_params.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_interior_vertices(&self) -> usize {
        self.n_interior_vertices
    }

    pub fn fibers(&self) -> usize {
        self.fibers
    }

    pub fn has_layer(&self) -> bool {
        self.fibers > 0
    }

    /// Thickness parameter the layer was built for (0 without a layer).
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn params(&self) -> MeshParams {
        self.params
    }

    pub fn triangle_points(&self, k: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[k];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, k: usize) -> f64 {
        let [a, b, c] = self.triangle_points(k);
        signed_area(a, b, c)
    }

    /// Indices of triangles in `region`.
    pub fn region_triangles(&self, region: Region) -> impl Iterator<Item = usize> + '_ {
        (0..self.triangles.len()).filter(move |&k| self.regions[k] == region)
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        dist(self.vertices[e.a], self.vertices[e.b])
    }

    fn min_angle(&self, region: Region) -> f64 {
        self.region_triangles(region)
            .map(|k| {
                triangle_angles(self.triangle_points(k))
                    .into_iter()
                    .fold(180.0, f64::min)
            })
            .fold(180.0, f64::min)
    }

    /// Panel index `i` with `tᵢ ≤ t < tᵢ₊₁` (periodic) and the fraction of the
    /// panel covered.
    pub fn locate_parameter(&self, t: f64) -> (usize, f64) {
        let t = t.rem_euclid(1.0);
        let params = &self.boundary_params;
        let n = params.len();
        let i = match params.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(0) => n - 1,
            Err(i) => i - 1,
        };
        let lo = params[i];
        let hi = if i + 1 == n {
            1.0 + params[0]
        } else {
            params[i + 1]
        };
        let t = if t < lo { t + 1.0 } else { t };
        (i, (t - lo) / (hi - lo))
    }

    /// Writes the plain-text node/element format: a `vertices N` section
    /// (`x y`), a `triangles M` section (`a b c region`) and an `edges K`
    /// section (`a b tag`); region 0 = interior, 1 = layer; tag 1 = interface,
    /// 2 = outer.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "vertices {}", self.vertices.len())?;
        for p in &self.vertices {
            writeln!(w, "{:.17e} {:.17e}", p[0], p[1])?;
        }
        writeln!(w, "triangles {}", self.triangles.len())?;
        for (t, r) in self.triangles.iter().zip(&self.regions) {
            writeln!(w, "{} {} {} {}", t[0], t[1], t[2], r.code())?;
        }
        let edges = self.interface_edges.len() + self.outer_edges.len();
        writeln!(w, "edges {edges}")?;
        for (tag, list) in [
            (BoundaryTag::Interface, &self.interface_edges),
            (BoundaryTag::Outer, &self.outer_edges),
        ] {
            for e in list {
                writeln!(w, "{} {} {}", e.a, e.b, tag.code())?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MeshDiagnostics {
    pub vertices: usize,
    pub triangles: usize,
    pub edges: usize,
    pub min_angle_interior_deg: f64,
    pub min_angle_layer_deg: f64,
    pub max_aspect: f64,
    pub interior_area: f64,
    pub layer_area: f64,
    pub interface_length: f64,
    pub outer_length: f64,
    pub euler_characteristic: i64,
}

pub fn mesh_diagnostics(mesh: &LayerMesh) -> MeshDiagnostics {
    let mut edges = HashSet::new();
    for t in &mesh.triangles {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let area_of = |r| {
        mesh.region_triangles(r)
            .map(|k| mesh.triangle_area(k))
            .sum()
    };
    let max_aspect = (0..mesh.triangles.len())
        .map(|k| aspect_ratio(mesh.triangle_points(k)))
        .fold(0.0, f64::max);
    let min_layer = if mesh.has_layer() {
        mesh.min_angle(Region::Layer)
    } else {
        f64::NAN
    };
    MeshDiagnostics {
        vertices: mesh.vertices.len(),
        triangles: mesh.triangles.len(),
        edges: edges.len(),
        min_angle_interior_deg: mesh.min_angle(Region::Interior),
        min_angle_layer_deg: min_layer,
        max_aspect,
        interior_area: area_of(Region::Interior),
        layer_area: area_of(Region::Layer),
        interface_length: mesh
            .interface_edges
            .iter()
            .map(|e| mesh.edge_length(e))
            .sum(),
        outer_length: mesh.outer_edges.iter().map(|e| mesh.edge_length(e)).sum(),
        euler_characteristic: mesh.vertices.len() as i64 - edges.len() as i64
            + mesh.triangles.len() as i64,
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn triangle_angles([a, b, c]: [Point; 3]) -> [f64; 3] {
    let angle = |p: Point, q: Point, r: Point| {
        let u = [q[0] - p[0], q[1] - p[1]];
        let v = [r[0] - p[0], r[1] - p[1]];
        let cross = u[0] * v[1] - u[1] * v[0];
        let dot = u[0] * v[0] + u[1] * v[1];
        cross.abs().atan2(dot).to_degrees()
    };
    [angle(a, b, c), angle(b, c, a), angle(c, a, b)]
}

/// Longest edge over shortest altitude.
fn aspect_ratio(p: [Point; 3]) -> f64 {
    let area = signed_area(p[0], p[1], p[2]).abs();
    let longest = dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]));
    let shortest_altitude = 2.0 * area / longest;
    longest / shortest_altitude
}

fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn distance_to_polygon(p: Point, poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let ab = [b[0] - a[0], b[1] - a[1]];
            let ap = [p[0] - a[0], p[1] - a[1]];
            let s =
                ((ap[0] * ab[0] + ap[1] * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1])).clamp(0.0, 1.0);
            dist(p, [a[0] + s * ab[0], a[1] + s * ab[1]])
        })
        .fold(f64::INFINITY, f64::min)
}

/// Equilateral lattice points at least `0.55·spacing` inside the polygon.
fn lattice_points(poly: &[Point], spacing: f64) -> Vec<Point> {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in poly {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let dy = spacing * 3f64.sqrt() / 2.0;
    let rows = ((hi[1] - lo[1]) / dy).ceil() as usize + 1;
    let cols = ((hi[0] - lo[0]) / spacing).ceil() as usize + 2;
    // center the lattice in the bounding box
    let y0 = 0.5 * (lo[1] + hi[1]) - 0.5 * (rows - 1) as f64 * dy;
    let x0 = 0.5 * (lo[0] + hi[0]) - 0.5 * (cols - 1) as f64 * spacing;
    let mut out = Vec::new();
    for r in 0..rows {
        let y = y0 + r as f64 * dy;
        let shift = if r % 2 == 1 { 0.5 * spacing } else { 0.0 };
        for c in 0..cols {
            let p = [x0 + shift + c as f64 * spacing, y];
            if point_in_polygon(p, poly) && distance_to_polygon(p, poly) >= 0.55 * spacing {
                out.push(p);
            }
        }
    }
    out
}

/// Triangles of the constrained Delaunay triangulation of the polygon plus
/// Steiner points, indexed as `[polygon..., steiner...]`.
fn constrained_delaunay(poly: &[Point], steiner: &[Point]) -> Result<Vec<[usize; 3]>> {
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    let mut index_of = Vec::new();
    let mut handles = Vec::with_capacity(poly.len());
    for (k, p) in poly.iter().chain(steiner).enumerate() {
        let h = cdt
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::MeshQuality(format!("vertex insertion failed: {e:?}")))?;
        if h.index() != index_of.len() {
            return Err(Error::MeshQuality(format!(
                "duplicate mesh vertex at {p:?}"
            )));
        }
        index_of.push(k);
        if k < poly.len() {
            handles.push(h);
        }
    }
    let n = poly.len();
    for i in 0..n {
        cdt.add_constraint(handles[i], handles[(i + 1) % n]);
    }
    let mut tris = Vec::new();
    for face in cdt.inner_faces() {
        let vs = face.vertices();
        let idx = vs.map(|v| index_of[v.fix().index()]);
        let pts = vs.map(|v| {
            let p = v.position();
            [p.x, p.y]
        });
        let centroid = [
            (pts[0][0] + pts[1][0] + pts[2][0]) / 3.0,
            (pts[0][1] + pts[1][1] + pts[2][1]) / 3.0,
        ];
        if point_in_polygon(centroid, poly) {
            let tri = if signed_area(pts[0], pts[1], pts[2]) < 0.0 {
                [idx[0], idx[2], idx[1]]
            } else {
                idx
            };
            tris.push(tri);
        }
    }
    Ok(tris)
}

/// One Laplacian smoothing pass over the Steiner points.
fn smooth(poly: &[Point], steiner: &[Point], tris: &[[usize; 3]]) -> Vec<Point> {
    let n_poly = poly.len();
    let all: Vec<Point> = poly.iter().chain(steiner).copied().collect();
    let mut sum = vec![[0.0; 2]; all.len()];
    let mut count = vec![0usize; all.len()];
    let mut seen = HashSet::new();
    for t in tris {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            if seen.insert((a.min(b), a.max(b))) {
                for (u, v) in [(a, b), (b, a)] {
                    sum[u][0] += all[v][0];
                    sum[u][1] += all[v][1];
                    count[u] += 1;
                }
            }
        }
    }
    steiner
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let v = n_poly + k;
            if count[v] == 0 {
                return p;
            }
            let q = [sum[v][0] / count[v] as f64, sum[v][1] / count[v] as f64];
            if point_in_polygon(q, poly) {
                q
            } else {
                p
            }
        })
        .collect()
}
