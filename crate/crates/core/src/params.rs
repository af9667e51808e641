use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Physical constants of the planar MHD system.
///
/// Pressure is `P = R theta / v`, internal energy `e = c_v theta`, and the
/// heat conductivity is `kappa_tilde * theta^beta`. The adiabatic index is
/// derived once at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub mu: f64,
    pub lambda: f64,
    pub nu: f64,
    pub kappa_tilde: f64,
    pub beta: f64,
    pub r_gas: f64,
    pub c_v: f64,
    gamma: f64,
}

fn positive(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

impl PhysParams {
    pub fn new(
        mu: f64,
        lambda: f64,
        nu: f64,
        kappa_tilde: f64,
        beta: f64,
        r_gas: f64,
        c_v: f64,
    ) -> Result<Self, ModelError> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "must be non-negative and finite",
            });
        }
        let r_gas = positive("R", r_gas)?;
        let c_v = positive("c_v", c_v)?;
        Ok(Self {
            mu: positive("mu", mu)?,
            lambda: positive("lambda", lambda)?,
            nu: positive("nu", nu)?,
            kappa_tilde: positive("kappa_tilde", kappa_tilde)?,
            beta,
            r_gas,
            c_v,
            gamma: 1.0 + r_gas / c_v,
        })
    }

    /// All constants equal to one, conductivity exponent `beta`.
    pub fn normalized(beta: f64) -> Result<Self, ModelError> {
        Self::new(1.0, 1.0, 1.0, 1.0, beta, 1.0, 1.0)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// True when every constant except `beta` is exactly one.
    pub fn is_normalized(&self) -> bool {
        [self.mu, self.lambda, self.nu, self.kappa_tilde, self.r_gas, self.c_v]
            .iter()
            .all(|&c| c == 1.0)
    }

    #[inline]
    pub fn conductivity(&self, theta: f64) -> f64 {
        if self.beta == 0.0 {
            self.kappa_tilde
        } else {
            self.kappa_tilde * theta.powf(self.beta)
        }
    }

    #[inline]
    pub fn pressure(&self, v: f64, theta: f64) -> f64 {
        self.r_gas * theta / v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_is_derived() {
        let p = PhysParams::new(1.0, 1.0, 1.0, 1.0, 0.5, 0.4, 1.0).unwrap();
        assert_eq!(p.gamma(), 1.0 + 0.4 / 1.0);
        assert_eq!(PhysParams::normalized(1.0).unwrap().gamma(), 2.0);
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(PhysParams::new(0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(PhysParams::new(1.0, 1.0, -1.0, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(PhysParams::new(1.0, 1.0, 1.0, 1.0, -0.1, 1.0, 1.0).is_err());
        assert!(PhysParams::new(1.0, 1.0, 1.0, 1.0, 0.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn normalized_detection() {
        assert!(PhysParams::normalized(2.0).unwrap().is_normalized());
        assert!(!PhysParams::new(2.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0)
            .unwrap()
            .is_normalized());
    }
}
