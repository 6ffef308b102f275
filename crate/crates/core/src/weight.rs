//! The degenerating cost weight `Γ(t) = g(t) G`.
//!
//! `g` vanishes at the horizon like `(T - t)^α` with `α ∈ (0.5, 1)`, which
//! lets the optimal control blow up near `T` while keeping the cost finite.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, SquareMatrix};

/// Number of grid points on which the growth bounds are spot-checked.
pub const GROWTH_CHECK_POINTS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum WeightForm {
    /// `g(t) = (T - t)^α`.
    PurePower,
    /// `g(t) = 1` for `t < T - τ`, `(T - t)^α` afterwards.
    Plateau { tau: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightSpec {
    form: WeightForm,
    alpha: f64,
    c: f64,
    horizon: f64,
}

impl WeightSpec {
    pub fn new(form: WeightForm, alpha: f64, c: f64, horizon: f64) -> Result<Self> {
        let spec = Self::new_unchecked(form, alpha, c, horizon);
        let violations = spec.violations();
        if violations.is_empty() {
            Ok(spec)
        } else {
            Err(Error::InvalidArgument(violations.join("; ")))
        }
    }

    pub fn pure_power(alpha: f64, c: f64, horizon: f64) -> Result<Self> {
        Self::new(WeightForm::PurePower, alpha, c, horizon)
    }

    pub fn plateau(alpha: f64, tau: f64, c: f64, horizon: f64) -> Result<Self> {
        Self::new(WeightForm::Plateau { tau }, alpha, c, horizon)
    }

    /// Skips every check, including the exponent range. Only meant for
    /// exercising the divergence diagnostics with an inadmissible exponent.
    #[doc(hidden)]
    pub fn new_unchecked(form: WeightForm, alpha: f64, c: f64, horizon: f64) -> Self {
        Self {
            form,
            alpha,
            c,
            horizon,
        }
    }

    /// Every violated constraint, as human-readable messages.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            out.push(format!("horizon must be positive and finite, got {}", self.horizon));
            return out;
        }
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            out.push(format!(
                "weight exponent alpha = {} violates the growth condition: alpha must lie in the open interval (0.5, 1)",
                self.alpha
            ));
        }
        if let WeightForm::Plateau { tau } = self.form {
            if !(tau > 0.0 && tau < self.horizon) {
                out.push(format!(
                    "plateau threshold tau = {tau} must lie in (0, {})",
                    self.horizon
                ));
            }
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            out.push(format!("growth constant c must be positive, got {}", self.c));
        }
        if out.is_empty() {
            if let Some(msg) = self.growth_violation() {
                out.push(msg);
            }
        }
        out
    }

    /// Checks `0 < g ≤ c(T-t)^α` and `1/g ≤ c(1 + (T-t)^{-α})` on a grid.
    fn growth_violation(&self) -> Option<String> {
        let slack = 1.0 + 1e-12;
        for i in 0..GROWTH_CHECK_POINTS {
            let t = self.horizon * i as f64 / GROWTH_CHECK_POINTS as f64;
            let rem = self.horizon - t;
            let g = self.at_remaining(rem);
            let upper = self.c * rem.powf(self.alpha);
            let inv_upper = self.c * (1.0 + rem.powf(-self.alpha));
            if !(g > 0.0) || g > upper * slack || 1.0 / g > inv_upper * slack {
                return Some(format!(
                    "weight violates the growth bounds at t = {t}: g = {g}, c(T-t)^alpha = {upper}, c(1+(T-t)^-alpha) = {inv_upper}; increase c"
                ));
            }
        }
        None
    }

    pub fn form(&self) -> WeightForm {
        self.form
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `g(t)` for `t ∈ [0, T)`.
    pub fn value(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t < self.horizon) {
            return Err(Error::Domain {
                t,
                horizon: self.horizon,
            });
        }
        Ok(self.at_remaining(self.horizon - t))
    }

    /// `g` as a function of the remaining time `T - t > 0`.
    pub fn at_remaining(&self, rem: f64) -> f64 {
        match self.form {
            WeightForm::PurePower => rem.powf(self.alpha),
            WeightForm::Plateau { tau } if rem > tau => 1.0,
            WeightForm::Plateau { .. } => rem.powf(self.alpha),
        }
    }

    /// `∫ g(T - e)^{-1} de` over remaining times `lo ≤ e ≤ hi`.
    pub fn inverse_integral(&self, lo: f64, hi: f64) -> f64 {
        let power = |a: f64, b: f64| (b.powf(1.0 - self.alpha) - a.powf(1.0 - self.alpha)) / (1.0 - self.alpha);
        match self.form {
            WeightForm::PurePower => power(lo, hi),
            WeightForm::Plateau { tau } => {
                if hi <= tau {
                    power(lo, hi)
                } else if lo >= tau {
                    hi - lo
                } else {
                    power(lo, tau) + (hi - tau)
                }
            }
        }
    }

    /// Exponent `p = 1/(1-α)` of the substitution `T - t = v^p`.
    pub(crate) fn substitution_power(&self) -> f64 {
        1.0 / (1.0 - self.alpha)
    }

    /// `p v^{p-1} / g(T - v^p)`: the Jacobian of the substitution divided by
    /// the weight. Constant where `g` is a pure power.
    pub(crate) fn substituted_inverse_weight(&self, v: f64) -> f64 {
        let p = self.substitution_power();
        match self.form {
            WeightForm::PurePower => p,
            WeightForm::Plateau { tau } if v.powf(p) > tau => p * v.powf(p - 1.0),
            WeightForm::Plateau { .. } => p,
        }
    }

    /// Remaining times at which `g` changes formula.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        match self.form {
            WeightForm::PurePower => vec![],
            WeightForm::Plateau { tau } => vec![tau],
        }
    }
}

/// The constant symmetric positive definite factor `G` of the cost weight.
#[derive(Clone, Debug, PartialEq)]
pub struct GMatrix {
    g: SquareMatrix,
    g_inv: SquareMatrix,
}

impl GMatrix {
    pub fn new(g: SquareMatrix) -> Result<Self> {
        let g_inv = SquareMatrix::new(spd_inverse(&g)?)?;
        Ok(Self { g, g_inv })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            g: SquareMatrix::identity(n),
            g_inv: SquareMatrix::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.g_inv
    }
}
