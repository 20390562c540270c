//! Ordinary least squares on `(log x, log y)` pairs.

use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Residuals of `log y` against the fitted line, in input order of the kept points.
    pub residuals: Vec<f64>,
    /// Indices of the input pairs that entered the fit.
    pub used: Vec<usize>,
}

impl LogLogFit {
    /// `exp(intercept)`, the constant of the power law `y ≈ C x^slope`.
    pub fn constant(&self) -> f64 {
        self.intercept.exp()
    }
}

/// Fits `log y = intercept + slope·log x`, dropping pairs with non-positive
/// `x` or `y`. Needs at least [`MIN_FIT_POINTS`] usable pairs.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument("x and y lengths differ".into()));
    }
    let used: Vec<usize> = (0..xs.len())
        .filter(|&i| xs[i] > 0.0 && ys[i] > 0.0 && xs[i].is_finite() && ys[i].is_finite())
        .collect();
    if used.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewRadii {
            usable: used.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    let lx: Vec<f64> = used.iter().map(|&i| xs[i].ln()).collect();
    let ly: Vec<f64> = used.iter().map(|&i| ys[i].ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| y - (intercept + slope * x))
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    // A perfectly flat series is perfectly explained by its mean.
    let r_squared = if ss_tot <= f64::EPSILON * n * my.abs().max(1.0) {
        if ss_res <= f64::EPSILON * n * my.abs().max(1.0) {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LogLogFit {
        slope,
        intercept,
        r_squared,
        residuals,
        used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law() {
        let xs: Vec<f64> = (2..9).map(|k| 2f64.powi(-k)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powi(4)).collect();
        let fit = fit_log_log(&xs, &ys).unwrap();
        assert!((fit.slope - 4.0).abs() < 1e-12);
        assert!((fit.constant() - 3.0).abs() < 1e-10);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn zeros_are_dropped() {
        let fit = fit_log_log(&[1.0, 2.0, 4.0, 8.0], &[0.0, 2.0, 4.0, 8.0]).unwrap();
        assert_eq!(fit.used, vec![1, 2, 3]);
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!(matches!(
            fit_log_log(&[1.0, 2.0, 4.0], &[0.0, 0.0, 1.0]),
            Err(Error::TooFewRadii { usable: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn recovers_slope_and_constant(slope in -5.0f64..5.0, c in 0.01f64..100.0) {
            let xs: Vec<f64> = (0..6).map(|k| 0.5f64.powi(k)).collect();
            let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(slope)).collect();
            let fit = fit_log_log(&xs, &ys).unwrap();
            prop_assert!((fit.slope - slope).abs() < 1e-9);
            prop_assert!((fit.constant() / c - 1.0).abs() < 1e-9);
        }
    }
}
