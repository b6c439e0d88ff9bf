use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViscosityKind {
    Newtonian,
    /// μ₀ (1 + s)^((d−2)/2)
    Carreau,
    /// μ₀ s^((d−2)/2)
    PowerLaw,
}

/// Generalized viscosity μ(s) with s = |Du|² and extra stress 𝕋 = μ(s) Du − π I.
/// The Newtonian stress 2ν Du − π I corresponds to μ ≡ μ₀ = 2ν.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscosityModel {
    pub kind: ViscosityKind,
    pub mu0: f64,
    #[serde(default = "newtonian_exponent")]
    pub d: f64,
}

fn newtonian_exponent() -> f64 {
    2.0
}

impl ViscosityModel {
    pub fn newtonian(mu0: f64) -> Self {
        Self {
            kind: ViscosityKind::Newtonian,
            mu0,
            d: 2.0,
        }
    }

    pub fn carreau(mu0: f64, d: f64) -> Self {
        Self {
            kind: ViscosityKind::Carreau,
            mu0,
            d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu0 > 0.0) {
            return Err(Error::Input(format!("mu0 must be positive, got {}", self.mu0)));
        }
        if !(self.d > 1.0) || !self.d.is_finite() {
            return Err(Error::Input(format!("exponent d must lie in (1, inf), got {}", self.d)));
        }
        Ok(())
    }

    /// Newtonian viscosity ν of the linearization at rest (σ = 2ν Du − π I).
    pub fn rest_viscosity(&self) -> f64 {
        0.5 * self.mu0
    }

    pub fn is_newtonian(&self) -> bool {
        self.kind == ViscosityKind::Newtonian || self.d == 2.0
    }

    /// (μ(s), μ′(s)).
    pub fn eval(&self, s: f64) -> Result<(f64, f64)> {
        debug_assert!(s >= 0.0);
        let e = 0.5 * (self.d - 2.0);
        match self.kind {
            ViscosityKind::Newtonian => Ok((self.mu0, 0.0)),
            ViscosityKind::Carreau => {
                let b = 1.0 + s;
                Ok((self.mu0 * b.powf(e), self.mu0 * e * b.powf(e - 1.0)))
            }
            ViscosityKind::PowerLaw => {
                if s == 0.0 && self.d < 2.0 {
                    return Err(Error::SingularViscosity(format!(
                        "power law with d = {} is unbounded at zero shear; use the Carreau form",
                        self.d
                    )));
                }
                if self.d == 2.0 {
                    return Ok((self.mu0, 0.0));
                }
                let mu = self.mu0 * s.powf(e);
                let dmu = if s == 0.0 { 0.0 } else { self.mu0 * e * s.powf(e - 1.0) };
                Ok((mu, dmu))
            }
        }
    }

    /// μ(s) + 2 s μ′(s) > 0.
    pub fn is_elliptic_at(&self, s: f64) -> Result<bool> {
        let (mu, dmu) = self.eval(s)?;
        Ok(mu > 0.0 && mu + 2.0 * s * dmu > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newtonian_reduction_and_hand_values() {
        let m = ViscosityModel::carreau(1.7, 2.0);
        for s in [0.0, 0.3, 10.0] {
            assert_eq!(m.eval(s).unwrap(), (1.7, 0.0));
        }
        let (mu, dmu) = ViscosityModel::carreau(1.0, 4.0).eval(1.0).unwrap();
        assert!((mu - 2.0).abs() < 1e-15 && (dmu - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shear_thinning_stays_elliptic() {
        let m = ViscosityModel::carreau(1.0, 1.5);
        for k in 0..=1000 {
            let s = 0.1 * k as f64;
            assert!(m.is_elliptic_at(s).unwrap());
            // closed form μ + 2sμ′ = μ₀(1+s)^((d−4)/2)(1 + (d−1)s)
            let (mu, dmu) = m.eval(s).unwrap();
            let closed = (1.0 + s).powf(-1.25) * (1.0 + 0.5 * s);
            assert!((mu + 2.0 * s * dmu - closed).abs() < 1e-13);
        }
    }

    #[test]
    fn power_law_guard_and_derivative() {
        let m = ViscosityModel {
            kind: ViscosityKind::PowerLaw,
            mu0: 1.0,
            d: 1.5,
        };
        assert!(matches!(m.eval(0.0), Err(Error::SingularViscosity(_))));
        let h = 1e-6;
        let fd = (m.eval(2.0 + h).unwrap().0 - m.eval(2.0 - h).unwrap().0) / (2.0 * h);
        assert!((fd - m.eval(2.0).unwrap().1).abs() < 1e-8);
    }
}
