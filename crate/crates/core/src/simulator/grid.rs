use crate::error::{Error, Result};

/// Time nodes `t_k = T(1 - (1 - k/N)^γ)`, clustered at the horizon for `γ > 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
    gamma: f64,
    nodes: Vec<f64>,
    remaining: Vec<f64>,
}

pub fn build_grid(horizon: f64, steps: usize, gamma: f64) -> Result<TimeGrid> {
    TimeGrid::new(horizon, steps, gamma)
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize, gamma: f64) -> Result<Self> {
        if steps < 2 {
            return Err(Error::invalid(format!("time grid needs at least 2 steps, got {steps}")));
        }
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!(
                "clustering exponent gamma must be >= 1 (coarsening near the horizon is not allowed), got {gamma}"
            )));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
        }
        let n = steps as f64;
        let remaining: Vec<f64> = (0..=steps)
            .map(|k| {
                if k == steps {
                    0.0
                } else {
                    horizon * (1.0 - k as f64 / n).powf(gamma)
                }
            })
            .collect();
        let nodes = remaining
            .iter()
            .enumerate()
            .map(|(k, r)| match k {
                0 => 0.0,
                k if k == steps => horizon,
                _ => horizon - r,
            })
            .collect();
        Ok(Self {
            horizon,
            steps,
            gamma,
            nodes,
            remaining,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `t_0, …, t_N`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `T - t_k`, computed without cancellation.
    pub fn remaining(&self) -> &[f64] {
        &self.remaining
    }

    pub fn step_length(&self, k: usize) -> f64 {
        self.remaining[k] - self.remaining[k + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid() {
        let g = build_grid(1.0, 4, 1.0).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn quadratic_grid() {
        let g = build_grid(1.0, 4, 2.0).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.4375, 0.75, 0.9375, 1.0]);
    }

    #[test]
    fn terminal_node_is_exact() {
        for (t, n, gamma) in [(0.3, 7, 1.3), (2.5, 4096, 2.0), (1e-3, 3, 3.7)] {
            let g = build_grid(t, n, gamma).unwrap();
            assert_eq!(*g.nodes().last().unwrap(), t);
            assert_eq!(g.nodes()[0], 0.0);
            assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_grid(1.0, 4, 0.5).is_err());
        assert!(build_grid(1.0, 1, 1.0).is_err());
        assert!(build_grid(0.0, 4, 1.0).is_err());
    }
}
