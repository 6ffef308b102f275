//! Gauss-Legendre rules and a composite rule for integrands with an
//! integrable power singularity at the left endpoint.

use std::f64::consts::PI;

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the Legendre recurrence.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
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
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn points(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.points(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule for `∫_lo^hi f(e) de` where `f(e) ~ e^{β-1}` as `e → 0`.
///
/// The substitution `e = v^{1/β}` turns that behaviour into a constant, after
/// which Gauss-Legendre panels uniform in `v` are used; the panel touching
/// `v = 0` is additionally split dyadically so that residual non-smooth terms
/// such as `v^{1/β}` are resolved.
#[derive(Clone, Debug)]
pub struct SingularRule {
    beta: f64,
    rule: GaussLegendre,
    panels: usize,
    dyadic_levels: usize,
}

impl SingularRule {
    pub fn new(beta: f64, order: usize, panels: usize, dyadic_levels: usize) -> Self {
        assert!(beta > 0.0 && beta <= 1.0, "substitution exponent must lie in (0, 1]");
        Self {
            beta,
            rule: GaussLegendre::new(order),
            panels: panels.max(1),
            dyadic_levels,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Quadrature points `(e, weight)` for `∫_lo^hi · de`, `0 ≤ lo < hi`.
    pub fn points(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let inv = 1.0 / self.beta;
        let (v_lo, v_hi) = (lo.powf(self.beta), hi.powf(self.beta));
        let mut out = Vec::new();
        if v_hi <= v_lo {
            return out;
        }
        let h = (v_hi - v_lo) / self.panels as f64;
        let push_panel = |a: f64, b: f64, out: &mut Vec<(f64, f64)>| {
            for (v, w) in self.rule.points(a, b) {
                let e = v.powf(inv);
                out.push((e, w * inv * v.powf(inv - 1.0)));
            }
        };
        for j in 1..self.panels {
            push_panel(v_lo + h * j as f64, v_lo + h * (j + 1) as f64, &mut out);
        }
        let (a, mut b) = (v_lo, v_lo + h);
        if lo == 0.0 {
            for _ in 0..self.dyadic_levels {
                let m = 0.5 * b;
                push_panel(m, b, &mut out);
                b = m;
            }
        }
        push_panel(a, b, &mut out);
        out
    }

    pub fn integrate(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.points(lo, hi).into_iter().map(|(e, w)| w * f(e)).sum()
    }
}

/// Pairwise (cascade) summation; result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for order in [1, 2, 5, 8, 16, 20] {
            let rule = GaussLegendre::new(order);
            let wsum: f64 = rule.points(-1.0, 1.0).map(|(_, w)| w).sum();
            assert!((wsum - 2.0).abs() < 1e-14);
            for deg in 0..(2 * order) {
                let got = rule.integrate(0.0, 2.0, |x| x.powi(deg as i32));
                let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
                assert!(
                    (got - exact).abs() <= 1e-13 * exact,
                    "order {order} deg {deg}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn singular_rule_power_singularity() {
        // ∫_0^1 e^{-3/4} de = 4
        let rule = SingularRule::new(0.25, 16, 8, 40);
        let got = rule.integrate(0.0, 1.0, |e| e.powf(-0.75));
        assert!((got - 4.0).abs() < 1e-12, "{got}");
        // Beta integral ∫_0^1 (1-e) e^{-1/4} de = 4/3 - 4/7
        let rule = SingularRule::new(0.75, 16, 32, 40);
        let got = rule.integrate(0.0, 1.0, |e| (1.0 - e) * e.powf(-0.25));
        assert!((got - (4.0 / 3.0 - 4.0 / 7.0)).abs() < 1e-12, "{got}");
    }

    #[test]
    fn singular_rule_interior_interval_and_additivity() {
        let rule = SingularRule::new(0.5, 16, 16, 40);
        let f = |e: f64| e.powf(-0.5) + e.cos();
        let whole = rule.integrate(0.0, 2.0, f);
        let split = rule.integrate(0.0, 0.3, f) + rule.integrate(0.3, 2.0, f);
        assert!((whole - split).abs() < 1e-12);
        let exact = 2.0 * 2f64.sqrt() + 2f64.sin();
        assert!((whole - exact).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_ints() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }
}
