use super::fourier::FourierSeries;
use crate::quadrature::GaussLegendre;
use crate::{Error, Point, Result};

/// Default number of harmonics when a curve is fitted from samples.
pub const DEFAULT_MODES: usize = 32;

const ARC_PANELS_MIN: usize = 64;
const PROJECTION_SCAN_MIN: usize = 256;
const NEWTON_MAX_ITERS: usize = 30;
const NEWTON_TOL: f64 = 1e-12;

/// Local frame of the curve at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub point: Point,
    pub tangent: Point,
    /// Outward unit normal `ν₀`.
    pub normal: Point,
    /// Signed curvature, positive on convex arcs.
    pub curvature: f64,
    /// Parametric speed `|γ'(t)|`.
    pub speed: f64,
}

/// Normal coordinates of a point near the curve: `x = γ(t) + d·ν₀(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubularCoords {
    pub t: f64,
    pub d: f64,
}

/// A smooth simple closed curve `γ: [0,1) → ℝ²` given by Fourier series in
/// each coordinate, always traversed counterclockwise.
#[derive(Debug, Clone)]
pub struct ClosedCurve {
    x: FourierSeries,
    y: FourierSeries,
    /// Cumulative arc length at panel boundaries `j / arc_panels`.
    arc: Vec<f64>,
    gauss: GaussLegendre,
    k_min: f64,
    k_max: f64,
}

impl ClosedCurve {
    pub fn circle(radius: f64) -> Result<Self> {
        Self::ellipse(radius, radius)
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidCurve(format!(
                "semi-axes must be positive, got ({a}, {b})"
            )));
        }
        Self::from_fourier(
            FourierSeries::new(0.0, vec![a], vec![0.0]),
            FourierSeries::new(0.0, vec![0.0], vec![b]),
        )
    }

    /// Fit `modes` harmonics to points sampled uniformly in parameter.
    pub fn from_samples(points: &[Point], modes: usize) -> Result<Self> {
        if points.len() <= 2 * modes {
            return Err(Error::InvalidCurve(format!(
                "{} samples cannot carry {modes} modes",
                points.len()
            )));
        }
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
        Self::from_fourier(
            FourierSeries::from_samples(&xs, modes),
            FourierSeries::from_samples(&ys, modes),
        )
    }

    /// Build from coordinate series. Clockwise input is reversed so the
    /// outward normal is always the right-hand normal of the tangent.
    pub fn from_fourier(x: FourierSeries, y: FourierSeries) -> Result<Self> {
        let modes = x.modes().max(y.modes());
        if modes == 0 {
            return Err(Error::InvalidCurve("curve has no harmonics".into()));
        }
        let samples = (16 * modes).max(512);
        let pts: Vec<Point> = (0..samples)
            .map(|j| {
                let t = j as f64 / samples as f64;
                [x.value(t), y.value(t)]
            })
            .collect();
        let scale = pts
            .iter()
            .map(|p| p[0].abs().max(p[1].abs()))
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let signed_area = 0.5
            * (0..samples)
                .map(|j| {
                    let p = pts[j];
                    let q = pts[(j + 1) % samples];
                    p[0] * q[1] - q[0] * p[1]
                })
                .sum::<f64>();
        let (x, y) = if signed_area < 0.0 {
            (x.reversed(), y.reversed())
        } else {
            (x, y)
        };

        let mut k_min = f64::INFINITY;
        let mut k_max = f64::NEG_INFINITY;
        for j in 0..samples {
            let t = j as f64 / samples as f64;
            let [_, x1, x2] = x.eval(t);
            let [_, y1, y2] = y.eval(t);
            let speed = x1.hypot(y1);
            if !(speed > 1e-10 * scale) {
                return Err(Error::InvalidCurve(format!(
                    "degenerate parametrization: |γ'({t:.4})| = {speed:.3e}"
                )));
            }
            let k = (x1 * y2 - y1 * x2) / speed.powi(3);
            k_min = k_min.min(k);
            k_max = k_max.max(k);
        }
        if !signed_area.is_finite() || signed_area.abs() < 1e-12 * scale * scale {
            return Err(Error::InvalidCurve("curve encloses no area".into()));
        }
        if let Some((i, j)) = first_self_intersection(&pts) {
            return Err(Error::InvalidCurve(format!(
                "curve is not simple: segments at t = {:.4} and t = {:.4} cross",
                i as f64 / samples as f64,
                j as f64 / samples as f64
            )));
        }

        let gauss = GaussLegendre::new(8);
        let panels = (8 * modes).max(ARC_PANELS_MIN);
        let mut arc = Vec::with_capacity(panels + 1);
        arc.push(0.0);
        let mut acc = 0.0;
        for p in 0..panels {
            let lo = p as f64 / panels as f64;
            let hi = (p + 1) as f64 / panels as f64;
            acc += gauss.integrate(lo, hi, |t| speed_of(&x, &y, t));
            arc.push(acc);
        }
        Ok(Self {
            x,
            y,
            arc,
            gauss,
            k_min,
            k_max,
        })
    }

    pub fn x_series(&self) -> &FourierSeries {
        &self.x
    }

    pub fn y_series(&self) -> &FourierSeries {
        &self.y
    }

    pub fn modes(&self) -> usize {
        self.x.modes().max(self.y.modes())
    }

    /// Same geometric curve with the parameter shifted by `shift`.
    pub fn reparametrized(&self, shift: f64) -> Result<Self> {
        Self::from_fourier(self.x.shifted(shift), self.y.shifted(shift))
    }

    pub fn point(&self, t: f64) -> Point {
        [self.x.value(t), self.y.value(t)]
    }

    pub fn speed(&self, t: f64) -> f64 {
        speed_of(&self.x, &self.y, t)
    }

    pub fn frame(&self, t: f64) -> Frame {
        let [x0, x1, x2] = self.x.eval(t);
        let [y0, y1, y2] = self.y.eval(t);
        let speed = x1.hypot(y1);
        let tangent = [x1 / speed, y1 / speed];
        Frame {
            point: [x0, y0],
            tangent,
            normal: [tangent[1], -tangent[0]],
            curvature: (x1 * y2 - y1 * x2) / speed.powi(3),
            speed,
        }
    }

    pub fn curvature(&self, t: f64) -> f64 {
        self.frame(t).curvature
    }

    /// Smallest and largest sampled curvature.
    pub fn curvature_range(&self) -> (f64, f64) {
        (self.k_min, self.k_max)
    }

    /// `sup |k|` over the sampled curve.
    pub fn k_max(&self) -> f64 {
        self.k_min.abs().max(self.k_max.abs())
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().unwrap()
    }

    /// Arc length from `γ(0)` to `γ(t)` for `t ∈ [0, 1]`.
    pub fn arc_length(&self, t: f64) -> f64 {
        let periods = t.floor();
        let tt = t - periods;
        let panels = self.arc.len() - 1;
        let p = ((tt * panels as f64).floor() as usize).min(panels - 1);
        let lo = p as f64 / panels as f64;
        let partial = self.gauss.integrate(lo, tt, |s| self.speed(s));
        periods * self.length() + self.arc[p] + partial
    }

    /// Inverse of [`Self::arc_length`] on one period.
    pub fn parameter_at_arc_length(&self, s: f64) -> f64 {
        let len = self.length();
        let s = s.rem_euclid(len);
        let panels = self.arc.len() - 1;
        let p = match self.arc.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
            Ok(i) => return i as f64 / panels as f64,
            Err(i) => i - 1,
        };
        let lo = p as f64 / panels as f64;
        let hi = (p + 1) as f64 / panels as f64;
        let mut t = lo + (s - self.arc[p]) / (self.arc[p + 1] - self.arc[p]) * (hi - lo);
        for _ in 0..NEWTON_MAX_ITERS {
            let dt = (self.arc_length(t) - s) / self.speed(t);
            t = (t - dt).clamp(lo, hi);
            if dt.abs() < 1e-15 {
                break;
            }
        }
        t
    }

    /// Enclosed area, `½∮(x dy − y dx)`.
    pub fn area(&self) -> f64 {
        let panels = self.arc.len() - 1;
        0.5 * self.gauss.integrate_composite(0.0, 1.0, panels, |t| {
            let [x0, x1, _] = self.x.eval(t);
            let [y0, y1, _] = self.y.eval(t);
            x0 * y1 - y0 * x1
        })
    }

    /// Nearest point on the curve to `p`, for `p` outside the enclosed
    /// region and within distance `d0` of the curve.
    ///
    /// A dense scan seeds Newton iterations on `(p − γ(t))·γ'(t) = 0`; every
    /// local minimum of the scan is refined so that near-ties are detected.
    pub fn project(&self, p: Point, d0: f64) -> Result<TubularCoords> {
        let n = (4 * self.modes()).max(PROJECTION_SCAN_MIN);
        let dist2: Vec<f64> = (0..n)
            .map(|j| {
                let q = self.point(j as f64 / n as f64);
                (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
            })
            .collect();
        let mut candidates: Vec<TubularCoords> = (0..n)
            .filter(|&j| {
                let prev = dist2[(j + n - 1) % n];
                let next = dist2[(j + 1) % n];
                dist2[j] <= prev && dist2[j] < next
            })
            .map(|j| self.refine_projection(p, j as f64 / n as f64, 1.0 / n as f64))
            .collect();
        candidates.sort_by(|a, b| a.d.partial_cmp(&b.d).unwrap());
        let best = *candidates.first().ok_or_else(|| Error::OutOfTube {
            x: p[0],
            y: p[1],
            reason: "no projection candidate found".into(),
        })?;
        let scale = 1.0_f64.max(best.d);
        if let Some(second) = candidates.iter().skip(1).find(|c| {
            let dt = (c.t - best.t).rem_euclid(1.0);
            dt.min(1.0 - dt) > 1e-6
        }) {
            if second.d - best.d < 1e-9 * scale {
                return Err(Error::NonUniqueProjection {
                    x: p[0],
                    y: p[1],
                    t1: best.t,
                    t2: second.t,
                });
            }
        }
        let f = self.frame(best.t);
        let side = (p[0] - f.point[0]) * f.normal[0] + (p[1] - f.point[1]) * f.normal[1];
        if side < -1e-12 * scale {
            return Err(Error::OutOfTube {
                x: p[0],
                y: p[1],
                reason: format!("point lies inside the curve (signed distance {side:.3e})"),
            });
        }
        if best.d >= d0 {
            return Err(Error::OutOfTube {
                x: p[0],
                y: p[1],
                reason: format!("distance {:.6} is not below d0 = {d0:.6}", best.d),
            });
        }
        Ok(best)
    }

    fn refine_projection(&self, p: Point, seed: f64, spacing: f64) -> TubularCoords {
        let mut t = seed;
        for _ in 0..NEWTON_MAX_ITERS {
            let [x0, x1, x2] = self.x.eval(t);
            let [y0, y1, y2] = self.y.eval(t);
            let (rx, ry) = (x0 - p[0], y0 - p[1]);
            let g = rx * x1 + ry * y1;
            let dg = x1 * x1 + y1 * y1 + rx * x2 + ry * y2;
            let step = if dg > 0.0 {
                (g / dg).clamp(-spacing, spacing)
            } else {
                0.25 * spacing * g.signum()
            };
            t -= step;
            if step.abs() < NEWTON_TOL {
                break;
            }
        }
        let t = t.rem_euclid(1.0);
        let q = self.point(t);
        TubularCoords {
            t,
            d: (p[0] - q[0]).hypot(p[1] - q[1]),
        }
    }

    /// `γ(t) + d·ν₀(t)`.
    pub fn offset_point(&self, t: f64, d: f64) -> Point {
        let f = self.frame(t);
        [f.point[0] + d * f.normal[0], f.point[1] + d * f.normal[1]]
    }
}

fn speed_of(x: &FourierSeries, y: &FourierSeries, t: f64) -> f64 {
    x.eval(t)[1].hypot(y.eval(t)[1])
}

fn first_self_intersection(pts: &[Point]) -> Option<(usize, usize)> {
    let n = pts.len();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Angle of the tangent at `t`, continuous only locally; used by tests that
/// cross-check curvature as `dθ/ds`.
pub fn tangent_angle(curve: &ClosedCurve, t: f64) -> f64 {
    let f = curve.frame(t);
    f.tangent[1].atan2(f.tangent[0])
}

/// Uniform parameter samples `j/n`.
pub fn uniform_parameters(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| j as f64 / n as f64)
}
