use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Ordinary least squares fit of `y = intercept + slope · x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Two-sided p-value of the slope t-statistic with `n - 2` degrees of
    /// freedom.
    pub slope_p_value: f64,
}

/// `None` with fewer than three points or no spread in `x`.
pub fn ols(x: &[f64], y: &[f64]) -> Option<RegressionFit> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>();
    // rounding can leave a residual of a few ulps on exact fits
    let sse = if sse <= 1e-12 * syy.max(f64::MIN_POSITIVE) {
        0.0
    } else {
        sse
    };
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    let df = nf - 2.0;
    let se = (sse / df / sxx).sqrt();
    let slope_p_value = if se == 0.0 {
        if slope == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let t = slope / se;
        let dist = StudentsT::new(0.0, 1.0, df).expect("n >= 3");
        (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
    };
    Some(RegressionFit {
        n,
        slope,
        intercept,
        r_squared,
        slope_p_value,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let fit = ols(&x, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert_eq!(fit.r_squared, 1.0);
        assert_eq!(fit.slope_p_value, 0.0);
    }

    #[test]
    fn three_point_closed_form() {
        // x = 0,1,2; y = 1,2,4: slope = sxy/sxx = 3/2, intercept = 7/3 - 3/2 = 5/6,
        // residuals 1/6, -1/3, 1/6 -> sse = 1/6, syy = 14/3, R² = 1 - 1/28
        let fit = ols(&[0.0, 1.0, 2.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept - 5.0 / 6.0).abs() < 1e-12);
        assert!((fit.r_squared - 27.0 / 28.0).abs() < 1e-12);
        // t = 1.5 / sqrt((1/6) / 2) = 5.196; two-sided p with 1 df = 0.1210
        assert!(
            (fit.slope_p_value - 0.121_037).abs() < 1e-4,
            "{}",
            fit.slope_p_value
        );
    }

    #[test]
    fn degenerate_inputs() {
        assert!(ols(&[1.0, 2.0], &[1.0, 2.0]).is_none());
        assert!(ols(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_none());
    }

    #[test]
    fn null_slope_not_significant() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..50).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|_| 10.0 + noise.sample(&mut rng)).collect();
        let fit = ols(&x, &y).unwrap();
        assert!(fit.slope.abs() < 0.05, "{}", fit.slope);
        assert!(fit.slope_p_value > 0.05, "{}", fit.slope_p_value);
    }
}
