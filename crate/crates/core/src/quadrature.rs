//! Gauss-Legendre quadrature rules and small helpers built on them.
//!
//! All lattice-measure integrals in this crate go through these rules. Error
//! estimates come from node doubling: the reported value is the fine-rule
//! result, the error the difference to the coarse rule.

/// A Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights by Newton iteration on the Legendre polynomial.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Tricomi initial guess, then Newton.
            let mut x =
                (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_and_derivative(n, x);
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node/weight pairs mapped to the interval [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (mid + half * x, half * w))
            .collect()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        half * acc
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
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
    if n == 1 {
        return (x, 1.0);
    }
    let d = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A value together with a numerical error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, error: 0.0 }
    }
}

/// Integrates `f` over [a, b] with `n` and `2n` nodes; the difference is the
/// error estimate.
pub fn integrate_with_doubling<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    n: usize,
    mut f: F,
) -> Estimate {
    let coarse = GaussLegendre::new(n).integrate(a, b, &mut f);
    let fine = GaussLegendre::new(2 * n).integrate(a, b, &mut f);
    Estimate {
        value: fine,
        error: (fine - coarse).abs(),
    }
}

/// Semi-infinite integral ∫_0^∞ f via truncation at `cut` plus a uniform
/// panel split; `f` must decay fast beyond `cut`.
pub fn integrate_half_line<F: FnMut(f64) -> f64>(
    cut: f64,
    panels: usize,
    nodes: usize,
    mut f: F,
) -> Estimate {
    let rule_c = GaussLegendre::new(nodes);
    let rule_f = GaussLegendre::new(2 * nodes);
    let mut coarse = 0.0;
    let mut fine = 0.0;
    for i in 0..panels {
        let a = cut * i as f64 / panels as f64;
        let b = cut * (i + 1) as f64 / panels as f64;
        coarse += rule_c.integrate(a, b, &mut f);
        fine += rule_f.integrate(a, b, &mut f);
    }
    Estimate {
        value: fine,
        error: (fine - coarse).abs(),
    }
}
