use serde::Serialize;

use crate::error::{Error, Result};

/// Fractional order `alpha` in (0,1) together with the similarity exponent
/// `1/(1+alpha)` that governs every scaling law of the fundamental solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracOrder {
    alpha: f64,
    similarity_exponent: f64,
}

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidOrder(alpha));
        }
        Ok(Self {
            alpha,
            similarity_exponent: 1.0 / (1.0 + alpha),
        })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `1/(1+alpha)`.
    #[inline]
    pub fn similarity_exponent(&self) -> f64 {
        self.similarity_exponent
    }

    /// Spatial scale `t^{1/(1+alpha)}` of the self-similar solution at time `t`.
    #[inline]
    pub fn similarity_scale(&self, t: f64) -> f64 {
        t.powf(self.similarity_exponent)
    }
}

impl std::fmt::Display for FracOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_closed_endpoints() {
        assert!(FracOrder::new(0.0).is_err());
        assert!(FracOrder::new(1.0).is_err());
        assert!(FracOrder::new(f64::NAN).is_err());
        assert!(FracOrder::new(-0.5).is_err());
    }

    #[test]
    fn caches_similarity_exponent() {
        for a in [0.01, 0.25, 0.5, 0.75, 0.99] {
            let o = FracOrder::new(a).unwrap();
            assert_eq!(o.similarity_exponent(), 1.0 / (1.0 + a));
        }
    }
}
