//! Gauss–Legendre rules and a few helpers built on them.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule with `panels` equal panels on `[a, b]`.
    pub fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let dx = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + p as f64 * dx;
                self.integrate(lo, lo + dx, &mut f)
            })
            .sum()
    }
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Two-point Gauss rule on `[0, 1]` as `(node, weight)` pairs; used for every
/// boundary edge term.
pub const EDGE_GAUSS: [(f64, f64); 2] = [
    (0.211_324_865_405_187_1, 0.5),
    (0.788_675_134_594_812_9, 0.5),
];

/// Least-squares slope and RMS residual of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    Some((slope, intercept, rms))
}

/// One-term Richardson extrapolation assuming `value(ε) = limit + a·ε + o(ε)`.
pub fn richardson(eps_coarse: f64, coarse: f64, eps_fine: f64, fine: f64) -> f64 {
    let q = eps_coarse / eps_fine;
    (q * fine - coarse) / (q - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_degree_2n_minus_1() {
        for n in [1, 2, 3, 8, 32] {
            let rule = GaussLegendre::new(n);
            let w: f64 = rule.weights.iter().sum();
            assert!((w - 2.0).abs() < 1e-13, "n={n} weight sum {w}");
            let deg = 2 * n - 1;
            let got = rule.integrate(0.0, 1.0, |x| x.powi(deg as i32));
            let want = 1.0 / (deg as f64 + 1.0);
            assert!((got - want).abs() < 1e-13, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        let rule = GaussLegendre::new(8);
        for w in rule.nodes.windows(2) {
            assert!(w[0] < w[1]);
        }
        for i in 0..8 {
            assert!((rule.nodes[i] + rule.nodes[7 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn edge_rule_matches_two_point_gauss() {
        let rule = GaussLegendre::new(2);
        let mapped: Vec<_> = rule.on_interval(0.0, 1.0).collect();
        for (a, b) in mapped.iter().zip(EDGE_GAUSS.iter()) {
            assert!((a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15);
        }
    }

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let (s, c, r) = linear_fit(&x, &y).unwrap();
        assert!((s - 2.0).abs() < 1e-14 && (c + 1.0).abs() < 1e-14 && r < 1e-14);
    }

    #[test]
    fn richardson_removes_linear_term() {
        let f = |e: f64| 3.0 + 0.7 * e;
        assert!((richardson(0.1, f(0.1), 0.05, f(0.05)) - 3.0).abs() < 1e-14);
        assert!((richardson(0.3, f(0.3), 0.1, f(0.1)) - 3.0).abs() < 1e-14);
    }
}
