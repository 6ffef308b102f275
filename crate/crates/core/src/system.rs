use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{is_nondegenerate, mat_exp, RealVector, SquareMatrix};

/// The controlled linear plant `dx/dt = A x + b u`, `x(0) = a`, on `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    state_matrix: SquareMatrix,
    input_matrix: SquareMatrix,
    initial_state: RealVector,
    horizon: f64,
}

impl SystemSpec {
    pub fn new(
        state_matrix: SquareMatrix,
        input_matrix: SquareMatrix,
        initial_state: RealVector,
        horizon: f64,
    ) -> Result<Self> {
        let n = state_matrix.dim();
        if input_matrix.dim() != n || initial_state.dim() != n {
            return Err(Error::invalid(format!(
                "system dimensions disagree: A is {n}x{n}, b is {0}x{0}, a has {1} entries",
                input_matrix.dim(),
                initial_state.dim()
            )));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if !is_nondegenerate(&input_matrix) {
            return Err(Error::invalid("input matrix b must be non-degenerate"));
        }
        Ok(Self {
            state_matrix,
            input_matrix,
            initial_state,
            horizon,
        })
    }

    /// Scalar plant `dx/dt = u` started at `a`.
    pub fn scalar_integrator(a: f64, horizon: f64) -> Result<Self> {
        Self::new(
            SquareMatrix::zeros(1),
            SquareMatrix::identity(1),
            RealVector::from_slice(&[a])?,
            horizon,
        )
    }

    pub fn dim(&self) -> usize {
        self.state_matrix.dim()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn state_matrix(&self) -> &DMatrix<f64> {
        &self.state_matrix
    }

    pub fn input_matrix(&self) -> &DMatrix<f64> {
        &self.input_matrix
    }

    pub fn initial_state(&self) -> &DVector<f64> {
        &self.initial_state
    }

    pub fn has_zero_dynamics(&self) -> bool {
        self.state_matrix.is_zero()
    }

    /// `e^{A s}`.
    pub fn propagator(&self, s: f64) -> DMatrix<f64> {
        mat_exp(&self.state_matrix, s).expect("validated finite state matrix")
    }

    /// Uncontrolled terminal state `q = e^{AT} a`.
    pub fn free_terminal_state(&self) -> DVector<f64> {
        self.propagator(self.horizon) * self.initial_state.as_vector()
    }
}
