use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Parameters of `t(n) = overload / n + independent`.
///
/// The overload term (ms x images) is fixed per-dataset overhead such as
/// network transfer; the independent term (ms) is the asymptotic per-image
/// time as the dataset grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicFit {
    pub overload_term_ot: f64,
    pub independent_term_it: f64,
    /// Unweighted root-mean-square residual over the fitted points, in ms.
    pub residual_rms: f64,
}

impl HyperbolicFit {
    pub fn predict(&self, n: u32) -> f64 {
        predict_latency(self, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWeighting {
    /// Every point counts equally.
    #[default]
    Uniform,
    /// Points weighted by 1/n, for sensitivity checks.
    InverseSize,
}

/// Ordinary least squares of per-image time against `1/n`.
pub fn fit_hyperbolic(points: &[(u32, f64)]) -> Result<HyperbolicFit, AnalysisError> {
    fit_hyperbolic_weighted(points, FitWeighting::Uniform)
}

/// Weighted least squares of per-image time against `1/n`, solved in closed
/// form on centred sums.
pub fn fit_hyperbolic_weighted(
    points: &[(u32, f64)],
    weighting: FitWeighting,
) -> Result<HyperbolicFit, AnalysisError> {
    if let Some(&(n, t)) = points.iter().find(|(n, t)| *n == 0 || !t.is_finite()) {
        return Err(AnalysisError::InvalidInput(format!("point ({n}, {t})")));
    }
    let first_n = points.first().ok_or(AnalysisError::DegenerateInput)?.0;
    if points.iter().all(|(n, _)| *n == first_n) {
        return Err(AnalysisError::DegenerateInput);
    }

    let weight = |n: u32| match weighting {
        FitWeighting::Uniform => 1.0,
        FitWeighting::InverseSize => 1.0 / f64::from(n),
    };
    let xs: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|&(n, t)| (1.0 / f64::from(n), t, weight(n)))
        .collect();
    let w_sum: f64 = xs.iter().map(|p| p.2).sum();
    let x_mean = xs.iter().map(|p| p.2 * p.0).sum::<f64>() / w_sum;
    let y_mean = xs.iter().map(|p| p.2 * p.1).sum::<f64>() / w_sum;
    let sxx: f64 = xs.iter().map(|p| p.2 * (p.0 - x_mean).powi(2)).sum();
    let sxy: f64 = xs.iter().map(|p| p.2 * (p.0 - x_mean) * (p.1 - y_mean)).sum();
    if sxx <= 0.0 {
        return Err(AnalysisError::DegenerateInput);
    }
    let overload = sxy / sxx;
    let independent = y_mean - overload * x_mean;
    let sq: f64 = xs
        .iter()
        .map(|p| (p.1 - (overload * p.0 + independent)).powi(2))
        .sum();
    Ok(HyperbolicFit {
        overload_term_ot: overload,
        independent_term_it: independent,
        residual_rms: (sq / xs.len() as f64).sqrt(),
    })
}

/// Model prediction `OT / n + IT`.
pub fn predict_latency(fit: &HyperbolicFit, n: u32) -> f64 {
    fit.overload_term_ot / f64::from(n.max(1)) + fit.independent_term_it
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1.0)
    }

    #[test]
    fn exact_member_of_model_family() {
        let pts: Vec<(u32, f64)> = [10u32, 20, 50, 100]
            .iter()
            .map(|&n| (n, 600.0 / f64::from(n) + 6.0))
            .collect();
        let f = fit_hyperbolic(&pts).unwrap();
        assert!(close(f.overload_term_ot, 600.0, 1e-12));
        assert!(close(f.independent_term_it, 6.0, 1e-12));
        assert!(f.residual_rms < 1e-12);
    }

    #[test]
    fn two_points_closed_form() {
        // 66 = a/10 + b, 12 = a/100 + b  =>  a = 54 / 0.09 = 600, b = 6
        let f = fit_hyperbolic(&[(10, 66.0), (100, 12.0)]).unwrap();
        assert!(close(f.overload_term_ot, 600.0, 1e-12));
        assert!(close(f.independent_term_it, 6.0, 1e-12));
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(fit_hyperbolic(&[]), Err(AnalysisError::DegenerateInput));
        assert_eq!(fit_hyperbolic(&[(10, 5.0)]), Err(AnalysisError::DegenerateInput));
        assert_eq!(fit_hyperbolic(&[(10, 5.0), (10, 6.0)]), Err(AnalysisError::DegenerateInput));
        assert_eq!(fit_hyperbolic(&[(0, 5.0), (10, 6.0)]).unwrap_err().name(), "InvalidInput");
    }

    #[test]
    fn weighting_is_exact_on_model_data_too() {
        let pts: Vec<(u32, f64)> = (1..20).map(|k| (k * 7, 300.0 / f64::from(k * 7) + 4.0)).collect();
        let f = fit_hyperbolic_weighted(&pts, FitWeighting::InverseSize).unwrap();
        assert!(close(f.overload_term_ot, 300.0, 1e-10));
        assert!(close(f.independent_term_it, 4.0, 1e-10));
    }

    #[test]
    fn predictions() {
        let f = HyperbolicFit {
            overload_term_ot: 600.0,
            independent_term_it: 6.0,
            residual_rms: 0.0,
        };
        assert_eq!(predict_latency(&f, 10), 66.0);
        assert!((predict_latency(&f, u32::MAX) - 6.0).abs() < 1e-6);
        let flat = HyperbolicFit {
            overload_term_ot: 0.0,
            ..f
        };
        assert_eq!(predict_latency(&flat, 1), 6.0);
        assert_eq!(predict_latency(&flat, 1234), 6.0);
    }
}
