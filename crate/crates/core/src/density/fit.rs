use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
    pub r_squared: f64,
    /// One-sided p-value against `slope >= 0`.
    pub p_negative: f64,
    pub points: usize,
}

impl LinearFit {
    /// Least-squares fit. Needs at least two distinct abscissae.
    pub fn fit(xs: &[f64], ys: &[f64]) -> Option<Self> {
        let k = xs.len();
        if k < 2 || k != ys.len() {
            return None;
        }
        let mx = xs.iter().sum::<f64>() / k as f64;
        let my = ys.iter().sum::<f64>() / k as f64;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        if sxx <= 0.0 {
            return None;
        }
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let sse: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        let r_squared = if syy > 0.0 { (1.0 - sse / syy).max(0.0) } else { 0.0 };
        let df = k as f64 - 2.0;
        let slope_std_error = if df > 0.0 { (sse / df / sxx).sqrt() } else { 0.0 };
        let p_negative = if df <= 0.0 {
            if slope < 0.0 { 0.5 } else { 1.0 }
        } else if slope_std_error == 0.0 {
            if slope < 0.0 { 0.0 } else { 1.0 }
        } else {
            let t = slope / slope_std_error;
            StudentsT::new(0.0, 1.0, df).map(|d| d.cdf(t)).unwrap_or(1.0)
        };
        Some(Self {
            slope,
            intercept,
            slope_std_error,
            r_squared,
            p_negative,
            points: k,
        })
    }

    /// Weights `w` with `intercept = Σ w_i y_i`.
    pub fn intercept_weights(xs: &[f64]) -> Option<Vec<f64>> {
        let k = xs.len();
        if k == 1 {
            return Some(vec![1.0]);
        }
        let mx = xs.iter().sum::<f64>() / k as f64;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        if k == 0 || sxx <= 0.0 {
            return None;
        }
        Some(xs.iter().map(|x| 1.0 / k as f64 - mx * (x - mx) / sxx).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = LinearFit::fit(&xs, &ys).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(f.p_negative, 0.0);
    }

    #[test]
    fn noisy_flat_line_is_not_significant() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [0.1, -0.1, 0.05, -0.02, 0.0];
        let f = LinearFit::fit(&xs, &ys).unwrap();
        assert!(f.p_negative > 0.01);
        assert!(f.r_squared < 0.9);
    }

    #[test]
    fn intercept_weights_reproduce_the_fit() {
        let xs = [0.5, 0.25, 1.0 / 6.0];
        let ys = [0.3, -0.7, 1.1];
        let w = LinearFit::intercept_weights(&xs).unwrap();
        let direct: f64 = w.iter().zip(ys).map(|(a, b)| a * b).sum();
        let f = LinearFit::fit(&xs, &ys).unwrap();
        assert!((direct - f.intercept).abs() < 1e-12);
        assert!(LinearFit::fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }
}
