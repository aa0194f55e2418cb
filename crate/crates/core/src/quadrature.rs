//! Composite Gauss–Legendre quadrature with panel doubling.

use serde::{Deserialize, Serialize};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights by Newton iteration on `P_n`, started from the Chebyshev guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
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

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Lagrange basis values `ℓ_m(x)` for the given interpolation nodes.
pub fn lagrange_basis(nodes: &[f64], x: f64) -> Vec<f64> {
    nodes
        .iter()
        .enumerate()
        .map(|(m, &xm)| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != m)
                .map(|(_, &xj)| (x - xj) / (xm - xj))
                .product()
        })
        .collect()
}

/// Composite Gauss–Legendre settings used by the Dyson–Phillips engine and the
/// integral-equation residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Nodes per panel.
    pub nodes: usize,
    /// Panel count of the first pass; doubled until successive results agree.
    pub initial_panels: usize,
    /// Give up once the panel count would exceed this.
    pub max_panels: usize,
    /// Trace-norm agreement required between successive passes.
    pub tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: 16,
            initial_panels: 1,
            max_panels: 256,
            tol: 1e-11,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Grading exponent of the panels next to a breakpoint.
pub const GRADING: i32 = 4;

/// A breakpoint outside a cut interval but within this fraction of its length
/// still grades the panels toward the closer end.
pub const NEAR_BREAKPOINT: f64 = 0.25;

/// Panel edges covering `[a, b]` with `panels` panels between consecutive cuts.
///
/// Cuts are `a`, `b` and the breakpoints inside `(a, b)`. Panels are uniform on a
/// cut interval unless one of its ends is at or near a breakpoint, in which case
/// they are graded polynomially toward that end.
pub fn panel_edges(a: f64, b: f64, breakpoints: &[f64], panels: usize) -> Vec<f64> {
    let panels = panels.max(1);
    let near = |x: f64, y: f64| (x - y).abs() <= 1e-14 * (1.0 + x.abs());
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b && !near(x, a) && !near(x, b))
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    let mut cuts = vec![a];
    cuts.extend(inner);
    cuts.push(b);
    let mut edges = vec![a];
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let is_kink = |x: f64| {
            breakpoints.iter().any(|&k| {
                near(k, x) || ((k <= lo || k >= hi) && (k - x).abs() <= NEAR_BREAKPOINT * (hi - lo))
            })
        };
        match (is_kink(lo), is_kink(hi)) {
            (false, false) => graded(&mut edges, lo, hi, panels, Toward::Neither),
            (true, false) => graded(&mut edges, lo, hi, panels, Toward::Lo),
            (false, true) => graded(&mut edges, lo, hi, panels, Toward::Hi),
            (true, true) => {
                let mid = 0.5 * (lo + hi);
                let half = panels.div_ceil(2);
                graded(&mut edges, lo, mid, half, Toward::Lo);
                graded(&mut edges, mid, hi, half, Toward::Hi);
            }
        }
    }
    edges
}

#[derive(Clone, Copy)]
enum Toward {
    Neither,
    Lo,
    Hi,
}

fn graded(edges: &mut Vec<f64>, lo: f64, hi: f64, panels: usize, toward: Toward) {
    let len = hi - lo;
    for k in 1..panels {
        let r = k as f64 / panels as f64;
        edges.push(match toward {
            Toward::Neither => lo + len * r,
            Toward::Lo => lo + len * r.powi(GRADING),
            Toward::Hi => hi - len * (1.0 - r).powi(GRADING),
        });
    }
    edges.push(hi);
}
