//! Central finite-difference verification of analytic adjoints.

use crate::error::{Error, Result};

/// Denominator floor of the relative error.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Flat index of the worst element.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// Compares `analytic` against central differences of the scalar
/// `sum(terms(x))` at `point`.
///
/// The objective is returned as a vector of terms and differenced term by
/// term, so contributions that do not depend on the perturbed element cancel
/// exactly instead of adding rounding noise.
pub fn finite_diff_check<F>(terms: F, point: &[f64], analytic: &[f64], eps: f64) -> Result<GradCheckReport>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if analytic.len() != point.len() {
        return Err(Error::Verification(format!(
            "analytic gradient has {} elements for {} inputs",
            analytic.len(),
            point.len()
        )));
    }
    let mut report = GradCheckReport { max_rel_error: 0.0, worst_index: 0, analytic: 0.0, numeric: 0.0, checked: 0 };
    let mut x = point.to_vec();
    for (i, &a) in analytic.iter().enumerate() {
        if !a.is_finite() {
            return Err(Error::Verification(format!("analytic gradient element {i} is {a}")));
        }
        x[i] = point[i] + eps;
        let plus = terms(&x);
        x[i] = point[i] - eps;
        let minus = terms(&x);
        x[i] = point[i];
        let diff: f64 = plus.iter().zip(&minus).map(|(p, m)| p - m).sum();
        let numeric = diff / (2.0 * eps);
        if !numeric.is_finite() {
            return Err(Error::Verification(format!("numeric gradient element {i} is {numeric}")));
        }
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
        if rel > report.max_rel_error || report.checked == 0 {
            report.max_rel_error = rel;
            report.worst_index = i;
            report.analytic = a;
            report.numeric = numeric;
        }
        report.checked += 1;
    }
    Ok(report)
}

/// Checks a vector-valued operation through a fixed cotangent: the scalar is
/// `<cotangent, forward(x)>` and the analytic gradient is
/// `adjoint(x, cotangent)`.
pub fn check_adjoint<F, A>(forward: F, adjoint: A, point: &[f64], cotangent: &[f64], eps: f64) -> Result<GradCheckReport>
where
    F: Fn(&[f64]) -> Vec<f64>,
    A: Fn(&[f64], &[f64]) -> Vec<f64>,
{
    let analytic = adjoint(point, cotangent);
    finite_diff_check(
        |x| forward(x).iter().zip(cotangent).map(|(y, w)| y * w).collect(),
        point,
        &analytic,
        eps,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_has_unit_gradient() {
        let point: Vec<f64> = (1..=10).map(|v| v as f64).collect();
        let r = finite_diff_check(|x| x.to_vec(), &point, &[1.0; 10], 2f64.powi(-20)).unwrap();
        assert_eq!(r.max_rel_error, 0.0);
        assert_eq!(r.checked, 10);
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let point = [0.3, -1.2, 2.0];
        let f = |x: &[f64]| vec![x[0] * x[1], x[2] * x[2]];
        let mut grad = vec![point[1], point[0], 2.0 * point[2]];
        assert!(finite_diff_check(f, &point, &grad, 1e-6).unwrap().max_rel_error < 1e-8);
        grad[1] *= 2.0;
        let r = finite_diff_check(f, &point, &grad, 1e-6).unwrap();
        assert!(r.max_rel_error > 0.4);
        assert_eq!(r.worst_index, 1);
    }

    #[test]
    fn non_finite_gradient_fails() {
        let r = finite_diff_check(|x| x.to_vec(), &[1.0], &[f64::NAN], 1e-6);
        assert!(matches!(r, Err(Error::Verification(_))));
    }
}
