use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters `(n, x, h, h')` of the spin measure
/// `n^k x^e exp(h r + (h'/2) r')`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Loop / cluster fugacity.
    pub n: f64,
    /// Edge weight.
    pub x: f64,
    /// Field coupled to the spin sum.
    pub h: f64,
    /// Field coupled to the monochromatic-triangle sum.
    pub h_prime: f64,
}

impl ModelParams {
    pub fn new(n: f64, x: f64, h: f64, h_prime: f64) -> Result<Self> {
        let p = Self { n, x, h, h_prime };
        p.validate()?;
        Ok(p)
    }

    /// Zero-field parameters.
    pub fn loop_only(n: f64, x: f64) -> Result<Self> {
        Self::new(n, x, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n.is_finite() && self.n > 0.0) {
            return Err(Error::Parameter(format!("n must be positive, got {}", self.n)));
        }
        if !(self.x.is_finite() && self.x >= 0.0) {
            return Err(Error::Parameter(format!("x must be nonnegative, got {}", self.x)));
        }
        if !self.h.is_finite() || !self.h_prime.is_finite() {
            return Err(Error::Parameter("fields must be finite".into()));
        }
        Ok(())
    }

    /// `n >= 1` and `n x^2 <= exp(-|h'|)`, where positive association and
    /// boundary monotonicity are known to hold.
    pub fn is_fkg_regime(&self) -> bool {
        self.n >= 1.0 && self.n * self.x * self.x <= (-self.h_prime.abs()).exp() * (1.0 + 1e-12)
    }

    /// Whether a global spin flip together with a flipped boundary condition
    /// leaves the measure invariant.
    pub fn is_flip_symmetric(&self) -> bool {
        self.h == 0.0 && self.h_prime == 0.0
    }

    #[inline]
    pub fn ln_n(&self) -> f64 {
        self.n.ln()
    }
}

/// Conjectured critical edge weight `1 / sqrt(2 + sqrt(2 - n))` for `0 <= n <= 2`.
pub fn nienhuis_xc(n: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&n) {
        return Err(Error::Parameter(format!("critical point needs 0 <= n <= 2, got {n}")));
    }
    Ok(1.0 / (2.0 + (2.0 - n).sqrt()).sqrt())
}

/// Increasing affine map `1 - c0^{-c0} + c0^{-c0} v` relating vertical to
/// horizontal crossing probabilities. Not clamped to `[0, 1]`.
pub fn homeomorphism_f(c0: f64, v: f64) -> f64 {
    assert!(c0 > 0.0, "c0 must be positive");
    let s = c0.powf(-c0);
    1.0 - s + s * v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_points() {
        // Reciprocal of the honeycomb connective constant sqrt(2 + sqrt 2).
        assert!((nienhuis_xc(0.0).unwrap() - 0.5411961).abs() < 1e-7);
        assert!((nienhuis_xc(0.0).unwrap() * (2.0 + 2f64.sqrt()).sqrt() - 1.0).abs() < 1e-15);
        assert!((nienhuis_xc(1.0).unwrap() - 0.5773503).abs() < 1e-7);
        assert!((nienhuis_xc(2.0).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(nienhuis_xc(-0.1).is_err());
        assert!(nienhuis_xc(2.1).is_err());
    }

    #[test]
    fn homeomorphism_values() {
        for c0 in [0.1, 0.5, 1.0, 2.0] {
            assert!((homeomorphism_f(c0, 1.0) - 1.0).abs() < 1e-15);
            assert!(homeomorphism_f(c0, 0.3) < homeomorphism_f(c0, 0.4));
        }
        for v in [0.0, 0.25, 0.9] {
            assert_eq!(homeomorphism_f(1.0, v), v);
        }
        assert!((homeomorphism_f(0.5, 0.0) + 0.4142136).abs() < 1e-7);
    }

    #[test]
    fn fkg_regime_predicate() {
        let p = ModelParams::new(2.0, nienhuis_xc(2.0).unwrap(), 0.0, 0.0).unwrap();
        assert!(p.is_fkg_regime());
        let p = ModelParams::new(2.0, 0.6, 0.0, -0.5).unwrap();
        assert!(!p.is_fkg_regime());
        let p = ModelParams::new(0.5, 0.3, 0.0, 0.0).unwrap();
        assert!(!p.is_fkg_regime());
        assert!(ModelParams::new(0.0, 0.3, 0.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, -0.3, 0.0, 0.0).is_err());
    }
}
