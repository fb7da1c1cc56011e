//! Property suites run by the `check` command and the acceptance tests.
//!
//! Every check runs in 64-bit mode (plus 32-bit where a tolerance is given
//! for it) with fixed seeds and compares against the literal references in
//! [`oracles`].

pub mod oracles;
mod suites;

pub use suites::{correlation_oracle, exact_checks, grad_checks, oracle_checks};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// Brute-force equivalence of correlation, convolution, warping and up-sampling.
    Oracle,
    /// Finite-difference checks of every adjoint.
    Grad,
    /// Cases that must hold bit for bit.
    Exact,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Oracle, Suite::Grad, Suite::Exact];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::Grad => "grad",
            Suite::Exact => "exact",
        }
    }

    pub fn run(self) -> Vec<CheckOutcome> {
        match self {
            Suite::Oracle => oracle_checks(),
            Suite::Grad => grad_checks(),
            Suite::Exact => exact_checks(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    /// Absolute error for oracle and exact checks, relative error for gradients.
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Set when the check could not run to completion.
    pub error: Option<String>,
}

impl CheckOutcome {
    pub fn measured(name: impl Into<String>, max_error: f64, tolerance: f64) -> Self {
        let exact = tolerance == 0.0;
        let passed = if exact { max_error == 0.0 } else { max_error < tolerance };
        Self { name: name.into(), max_error, tolerance, passed, error: None }
    }

    pub fn from_result(name: impl Into<String>, result: crate::Result<f64>, tolerance: f64) -> Self {
        match result {
            Ok(e) => Self::measured(name, e, tolerance),
            Err(e) => Self {
                name: name.into(),
                max_error: f64::NAN,
                tolerance,
                passed: false,
                error: Some(e.to_string()),
            },
        }
    }
}
