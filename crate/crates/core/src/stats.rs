//! Least-squares slopes and batch confidence intervals.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Ordinary least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "slope fit needs paired samples");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Two-sided 95% Student-t quantile with `dof` degrees of freedom.
pub fn t975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64).expect("dof ≥ 1").inverse_cdf(0.975)
}

/// Mean and 95% half-width of independent batch estimates.
pub fn batch_ci(batches: &[f64]) -> (f64, f64) {
    let b = batches.len();
    let mean = batches.iter().sum::<f64>() / b as f64;
    if b < 2 {
        return (mean, f64::INFINITY);
    }
    let var = batches.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    (mean, t975(b - 1) * (var / b as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((ls_slope(&x, &y) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn t_quantiles() {
        assert!((t975(9) - 2.262157).abs() < 1e-5);
        assert!((t975(1000) - 1.962339).abs() < 1e-5);
    }

    #[test]
    fn batch_interval() {
        let (m, h) = batch_ci(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((h - t975(2) / 3f64.sqrt()).abs() < 1e-14);
    }
}
