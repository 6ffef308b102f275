use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A state-dependent scalar coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Coefficient {
    Constant {
        value: f64,
    },
    /// `slope * x + intercept`
    Affine {
        slope: f64,
        intercept: f64,
    },
}

impl Coefficient {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Coefficient::Constant { value } => value,
            Coefficient::Affine { slope, intercept } => slope * x + intercept,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Coefficient::Constant { value } => value == 0.0,
            Coefficient::Affine { slope, intercept } => slope == 0.0 && intercept == 0.0,
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match *self {
            Coefficient::Constant { value } => Some(value),
            Coefficient::Affine { slope: 0.0, intercept } => Some(intercept),
            Coefficient::Affine { .. } => None,
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            Coefficient::Constant { value } => value.is_finite(),
            Coefficient::Affine { slope, intercept } => slope.is_finite() && intercept.is_finite(),
        }
    }

    /// Bound on `|c(x)|` over `|x - center| ≤ half_width`.
    fn max_abs_on(&self, center: f64, half_width: f64) -> f64 {
        self.eval(center - half_width)
            .abs()
            .max(self.eval(center + half_width).abs())
    }
}

/// Scalar Itô diffusion `dy = a(y) dt + β(y) dw`, `y(0) = y0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSpec {
    pub drift: Coefficient,
    pub vol: Coefficient,
    pub y0: f64,
    /// `δ` in `β²/2 ≥ δ`.
    pub ellipticity_floor: f64,
}

impl DiffusionSpec {
    pub fn brownian(y0: f64) -> Self {
        Self {
            drift: Coefficient::Constant { value: 0.0 },
            vol: Coefficient::Constant { value: 1.0 },
            y0,
            ellipticity_floor: 0.1,
        }
    }

    pub fn drift_at(&self, x: f64) -> f64 {
        self.drift.eval(x)
    }

    pub fn vol_at(&self, x: f64) -> f64 {
        self.vol.eval(x)
    }

    /// `β²/2`
    pub fn diffusivity_at(&self, x: f64) -> f64 {
        0.5 * self.vol.eval(x).powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.y0.is_finite() && self.drift.is_finite() && self.vol.is_finite()) {
            return Err(Error::InvalidDiffusion("non-finite diffusion parameters".into()));
        }
        if !(self.ellipticity_floor > 0.0) {
            return Err(Error::InvalidDiffusion("ellipticity floor must be positive".into()));
        }
        Ok(())
    }

    /// Checks `β²/2 ≥ δ` at every point of `xs`.
    pub fn check_ellipticity(&self, xs: impl IntoIterator<Item = f64>) -> Result<()> {
        for x in xs {
            let b = self.diffusivity_at(x);
            if !(b >= self.ellipticity_floor) {
                return Err(Error::InvalidDiffusion(format!(
                    "β²/2 = {b} at x = {x} is below the ellipticity floor {}",
                    self.ellipticity_floor
                )));
            }
        }
        Ok(())
    }

    /// Half-width of a window around `y0` that holds `y` on `[0, horizon]`
    /// up to `sds` standard deviations, with drift excursions added.
    pub fn covering_half_width(&self, horizon: f64, sds: f64) -> f64 {
        // Grow the window until the coefficient bounds on it are self-consistent.
        let mut half = sds * self.vol.eval(self.y0).abs().max(self.ellipticity_floor.sqrt()) * horizon.sqrt();
        for _ in 0..50 {
            let vol = self.vol.max_abs_on(self.y0, half);
            let drift = self.drift.max_abs_on(self.y0, half);
            let next = sds * vol * horizon.sqrt() + drift * horizon;
            if next <= half * (1.0 + 1e-9) {
                break;
            }
            half = next;
        }
        half
    }

    pub fn has_zero_drift(&self) -> bool {
        self.drift.is_zero()
    }
}
