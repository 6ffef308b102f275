//! Competitor controls `u' = û + Γ⁻¹bᵀe^{Aᵀ(T-t)} h(t)` for deterministic,
//! piecewise-constant `h` that leave the terminal state unchanged.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::path::Simulator;
use crate::controller::ControlLaw;
use crate::error::{Error, Result};
use crate::linalg::spd_inverse;

/// Largest allowed `|∫ Q h dt|` for a profile to count as replication-preserving.
pub const CONSTRAINT_TOL: f64 = 1e-8;

/// `h(t) = levels[j]` on `[breakpoints[j], breakpoints[j+1])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationProfile {
    pub breakpoints: Vec<f64>,
    pub levels: Vec<Vec<f64>>,
}

impl PerturbationProfile {
    pub fn zero(dim: usize, horizon: f64) -> Self {
        Self {
            breakpoints: vec![0.0, horizon],
            levels: vec![vec![0.0; dim]],
        }
    }

    /// `h = h1` on `[0, T/2)` and `h2 = -R(T/2)⁻¹ (R(0) - R(T/2)) h1` after,
    /// which makes `∫ Q h dt` vanish.
    pub fn balanced_two_piece(law: &ControlLaw, h1: &[f64]) -> Result<Self> {
        let half = 0.5 * law.horizon();
        let r0 = law.gramian().at(0.0)?;
        let rh = law.gramian().at(half)?;
        let h1v = DVector::from_column_slice(h1);
        let h2 = -(spd_inverse(&rh)? * ((r0 - &rh) * &h1v));
        Ok(Self {
            breakpoints: vec![0.0, half, law.horizon()],
            levels: vec![h1.to_vec(), h2.iter().copied().collect()],
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            levels: self
                .levels
                .iter()
                .map(|l| l.iter().map(|v| v * factor).collect())
                .collect(),
        }
    }

    fn validate(&self, dim: usize, horizon: f64) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProfile(m));
        if self.breakpoints.len() < 2 || self.levels.len() + 1 != self.breakpoints.len() {
            return bad("need one level per interval between consecutive breakpoints".into());
        }
        if self.breakpoints[0] != 0.0 || *self.breakpoints.last().unwrap() != horizon {
            return bad(format!("breakpoints must run from 0 to the horizon {horizon}"));
        }
        if self.breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("breakpoints must increase strictly".into());
        }
        if self
            .levels
            .iter()
            .any(|l| l.len() != dim || l.iter().any(|v| !v.is_finite()))
        {
            return bad(format!("every level must be a finite {dim}-vector"));
        }
        Ok(())
    }

    /// `R` at each breakpoint.
    fn gramians(&self, law: &ControlLaw) -> Result<Vec<DMatrix<f64>>> {
        self.breakpoints.iter().map(|&t| law.gramian().at(t)).collect()
    }

    /// `∫ Q h dt`.
    pub fn constraint_residual(&self, law: &ControlLaw) -> Result<DVector<f64>> {
        self.validate(law.dim(), law.horizon())?;
        let r = self.gramians(law)?;
        let mut acc = DVector::zeros(law.dim());
        for (j, level) in self.levels.iter().enumerate() {
            acc += (&r[j] - &r[j + 1]) * DVector::from_column_slice(level);
        }
        Ok(acc)
    }

    /// `∫ hᵀ Q h dt`.
    pub fn quadratic_cost(&self, law: &ControlLaw) -> Result<f64> {
        self.validate(law.dim(), law.horizon())?;
        let r = self.gramians(law)?;
        Ok(self
            .levels
            .iter()
            .enumerate()
            .map(|(j, level)| {
                let h = DVector::from_column_slice(level);
                h.dot(&((&r[j] - &r[j + 1]) * &h))
            })
            .sum())
    }

    fn level_at(&self, t: f64) -> &[f64] {
        let j = self.breakpoints[1..].partition_point(|&b| b <= t);
        &self.levels[j.min(self.levels.len() - 1)]
    }
}

/// A profile resolved onto the steps of a simulator grid.
#[derive(Clone, Debug)]
pub(crate) struct StepPerturbation {
    /// `∫_{step} Q h dt`, flattened per step
    shifts: Vec<f64>,
    /// `∫_{step} hᵀ Q h dt`
    quadratic: Vec<f64>,
    /// `h` at the step midpoint
    levels: Vec<f64>,
    dim: usize,
}

impl StepPerturbation {
    pub(crate) fn new(sim: &Simulator<'_>, profile: &PerturbationProfile) -> Result<Self> {
        let law = sim.law();
        let residual = profile.constraint_residual(law)?;
        if residual.amax() > CONSTRAINT_TOL {
            return Err(Error::InvalidProfile(format!(
                "profile moves the terminal state: |∫Qh dt| = {:.3e} exceeds {CONSTRAINT_TOL:e}",
                residual.amax()
            )));
        }
        let n = law.dim();
        let nodes = sim.grid().nodes();
        let steps = sim.grid().steps();
        let inner = &profile.breakpoints[1..profile.breakpoints.len() - 1];
        let mut shifts = Vec::with_capacity(n * steps);
        let mut quadratic = Vec::with_capacity(steps);
        let mut levels = Vec::with_capacity(n * steps);
        for k in 0..steps {
            let (a, b) = (nodes[k], nodes[k + 1]);
            let mut cuts: Vec<(f64, DMatrix<f64>)> = vec![(a, sim.gramian_at_node(k))];
            for &c in inner.iter().filter(|&&c| c > a && c < b) {
                cuts.push((c, law.gramian().at(c)?));
            }
            cuts.push((b, sim.gramian_at_node(k + 1)));
            let mut shift = DVector::zeros(n);
            let mut quad = 0.0;
            for w in cuts.windows(2) {
                let h = DVector::from_column_slice(profile.level_at(w[0].0));
                let s = (&w[0].1 - &w[1].1) * &h;
                quad += h.dot(&s);
                shift += s;
            }
            shifts.extend(shift.iter());
            quadratic.push(quad);
            levels.extend_from_slice(profile.level_at(0.5 * (a + b)));
        }
        Ok(Self {
            shifts,
            quadratic,
            levels,
            dim: n,
        })
    }

    #[inline]
    pub(crate) fn shift(&self, k: usize) -> &[f64] {
        &self.shifts[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub(crate) fn quadratic(&self, k: usize) -> f64 {
        self.quadratic[k]
    }

    #[inline]
    pub(crate) fn level(&self, k: usize) -> &[f64] {
        &self.levels[k * self.dim..(k + 1) * self.dim]
    }
}
