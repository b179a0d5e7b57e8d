//! Scalar constitutive responses `E_v = sigma(|T_v|) T_v` for anti-plane stress.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaterialModel {
    /// Linear response `sigma = 1 / (2 mu_L)`.
    Hooke { mu_l: f64 },
    /// `sigma(t) = (1 / 2 mu) * ((tau0^2 + 3 t^2) / tau0^2)^((q' - 2) / 2)`.
    PowerLaw { mu: f64, tau0: f64, q_prime: f64 },
    /// `sigma(t) = tau_mu / (2 mu_l (tau_mu^a + (sqrt(2) t)^a)^(1/a))`.
    StrainLimiting { mu_l: f64, tau_mu: f64, a: f64 },
}

impl MaterialModel {
    pub fn hooke(mu_l: f64) -> Result<Self> {
        let m = MaterialModel::Hooke { mu_l };
        m.validate()?;
        Ok(m)
    }

    pub fn power_law(mu: f64, tau0: f64, q_prime: f64) -> Result<Self> {
        let m = MaterialModel::PowerLaw { mu, tau0, q_prime };
        m.validate()?;
        Ok(m)
    }

    pub fn strain_limiting(mu_l: f64, tau_mu: f64, a: f64) -> Result<Self> {
        let m = MaterialModel::StrainLimiting { mu_l, tau_mu, a };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::ParameterDomain(format!("{name} = {v} must be positive and finite")))
            }
        };
        match *self {
            MaterialModel::Hooke { mu_l } => positive("mu_L", mu_l),
            MaterialModel::PowerLaw { mu, tau0, q_prime } => {
                positive("mu", mu)?;
                positive("tau0", tau0)?;
                if q_prime.is_finite() && q_prime > 1.0 {
                    Ok(())
                } else {
                    Err(Error::ParameterDomain(format!("q' = {q_prime} must exceed 1")))
                }
            }
            MaterialModel::StrainLimiting { mu_l, tau_mu, a } => {
                positive("mu_l", mu_l)?;
                positive("tau_mu", tau_mu)?;
                positive("a", a)
            }
        }
    }

    /// True when `sigma` does not depend on the stress magnitude.
    pub fn is_linear(&self) -> bool {
        match *self {
            MaterialModel::Hooke { .. } => true,
            MaterialModel::PowerLaw { q_prime, .. } => q_prime == 2.0,
            MaterialModel::StrainLimiting { .. } => false,
        }
    }

    /// Compliance `sigma(t)` in 1/Pa for a stress magnitude `t >= 0`.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        check_magnitude(t)?;
        Ok(self.sigma_at(t))
    }

    /// Derivative `d sigma / dt` in 1/Pa^2.
    pub fn sigma_prime(&self, t: f64) -> Result<f64> {
        check_magnitude(t)?;
        Ok(self.sigma_prime_over_t_at(t) * t)
    }

    /// Scalar flux `sigma(t) t`, the magnitude of the strain.
    pub fn flux(&self, t: f64) -> Result<f64> {
        Ok(self.sigma(t)? * t)
    }

    /// Strain vector `(E13, E23)` for the stress vector `(T13, T23)`.
    pub fn strain_from_stress(&self, t_v: [f64; 2]) -> Result<[f64; 2]> {
        if !(t_v[0].is_finite() && t_v[1].is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite stress vector ({}, {})",
                t_v[0], t_v[1]
            )));
        }
        let s = self.sigma_at(t_v[0].hypot(t_v[1]));
        Ok([s * t_v[0], s * t_v[1]])
    }

    /// Unchecked `sigma(t)`; callers guarantee `t` is finite and nonnegative.
    #[inline]
    pub fn sigma_at(&self, t: f64) -> f64 {
        match *self {
            MaterialModel::Hooke { mu_l } => 1.0 / (2.0 * mu_l),
            MaterialModel::PowerLaw { mu, tau0, q_prime } => {
                let base = 1.0 + 3.0 * (t / tau0) * (t / tau0);
                base.powf(0.5 * (q_prime - 2.0)) / (2.0 * mu)
            }
            MaterialModel::StrainLimiting { mu_l, tau_mu, a } => {
                let x = std::f64::consts::SQRT_2 * t / tau_mu;
                1.0 / (2.0 * mu_l * (1.0 + x.powf(a)).powf(1.0 / a))
            }
        }
    }

    /// Unchecked `sigma'(t) / t`, evaluated in closed form so the limit at
    /// `t = 0` is finite. For the power law the limit is
    /// `3 (q' - 2) / (2 mu tau0^2)`.
    #[inline]
    pub fn sigma_prime_over_t_at(&self, t: f64) -> f64 {
        match *self {
            MaterialModel::Hooke { .. } => 0.0,
            MaterialModel::PowerLaw { mu, tau0, q_prime } => {
                if q_prime == 2.0 {
                    return 0.0;
                }
                let base = 1.0 + 3.0 * (t / tau0) * (t / tau0);
                3.0 * (q_prime - 2.0) / (2.0 * mu * tau0 * tau0)
                    * base.powf(0.5 * (q_prime - 4.0))
            }
            MaterialModel::StrainLimiting { mu_l, tau_mu, a } => {
                let x = std::f64::consts::SQRT_2 * t / tau_mu;
                let xa2 = if x == 0.0 {
                    // The Jacobian multiplies this by |grad A|^2 = 0, so only the
                    // a = 2 case is a genuine limit.
                    if a == 2.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    x.powf(a - 2.0)
                };
                let u = 1.0 + x.powf(a);
                -(1.0 / mu_l) * u.powf(-1.0 / a - 1.0) * xa2 / (tau_mu * tau_mu)
            }
        }
    }
}

impl fmt::Display for MaterialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MaterialModel::Hooke { mu_l } => write!(f, "Hooke(mu_L={mu_l:e} Pa)"),
            MaterialModel::PowerLaw { mu, tau0, q_prime } => {
                write!(f, "PowerLaw(mu={mu:e} Pa, tau0={tau0:e} Pa, q'={q_prime})")
            }
            MaterialModel::StrainLimiting { mu_l, tau_mu, a } => {
                write!(f, "StrainLimiting(mu_l={mu_l:e} Pa, tau_mu={tau_mu:e} Pa, a={a})")
            }
        }
    }
}

fn check_magnitude(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "stress magnitude {t} must be finite and nonnegative"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegistryEntry {
    pub name: &'static str,
    pub material: &'static str,
    pub model: MaterialModel,
}

const GPA: f64 = 1e9;

const fn power_law(tau0_gpa: f64, q_prime: f64, mu_gpa: f64) -> MaterialModel {
    MaterialModel::PowerLaw {
        mu: mu_gpa * GPA,
        tau0: tau0_gpa * GPA,
        q_prime,
    }
}

const GUM_METAL: &str = "Gum Metal";
const TI_30NB: &str = "Ti-30Nb-10Ta-5Zr";
const TI_24NB: &str = "Ti-24Nb-4Zr-7.9Sn";

/// Shear moduli and power-law fits for three titanium alloys, in SI units.
pub const REGISTRY: [RegistryEntry; 9] = [
    RegistryEntry { name: "LIN1", material: GUM_METAL, model: MaterialModel::Hooke { mu_l: 23.5 * GPA } },
    RegistryEntry { name: "NLB1", material: GUM_METAL, model: power_law(0.5, 2.23, 20.2) },
    RegistryEntry { name: "NLS1", material: GUM_METAL, model: power_law(0.5, 7.65, 18668.0) },
    RegistryEntry { name: "LIN2", material: TI_30NB, model: MaterialModel::Hooke { mu_l: 21.75 * GPA } },
    RegistryEntry { name: "NLB2", material: TI_30NB, model: power_law(0.5, 2.49, 22.3) },
    RegistryEntry { name: "NLS2", material: TI_30NB, model: power_law(0.5, 9.15, 1001.0) },
    RegistryEntry { name: "LIN3", material: TI_24NB, model: MaterialModel::Hooke { mu_l: 22.05 * GPA } },
    RegistryEntry { name: "NLB3", material: TI_24NB, model: power_law(0.5, 2.99, 16.5) },
    RegistryEntry { name: "NLS3", material: TI_24NB, model: power_law(0.5, 15.68, 3378.0) },
];

/// Named access to [`REGISTRY`].
pub struct MaterialRegistry;

impl MaterialRegistry {
    pub fn get(name: &str) -> Option<MaterialModel> {
        Self::entry(name).map(|e| e.model)
    }

    pub fn entry(name: &str) -> Option<&'static RegistryEntry> {
        REGISTRY.iter().find(|e| e.name.eq_ignore_ascii_case(name))
    }

    pub fn lookup(name: &str) -> Result<MaterialModel> {
        Self::get(name).ok_or_else(|| {
            Error::ParameterDomain(format!(
                "unknown material model `{name}` (expected one of {})",
                Self::names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names() -> impl Iterator<Item = &'static str> {
        REGISTRY.iter().map(|e| e.name)
    }

    pub fn entries() -> &'static [RegistryEntry] {
        &REGISTRY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nlb1() -> MaterialModel {
        MaterialRegistry::get("NLB1").unwrap()
    }

    #[test]
    fn registry_matches_table() {
        assert_eq!(
            nlb1(),
            MaterialModel::PowerLaw { mu: 20.2e9, tau0: 0.5e9, q_prime: 2.23 }
        );
        assert_eq!(MaterialRegistry::get("lin2"), Some(MaterialModel::Hooke { mu_l: 21.75e9 }));
        assert_eq!(
            MaterialRegistry::get("NLS3"),
            Some(MaterialModel::PowerLaw { mu: 3378e9, tau0: 0.5e9, q_prime: 15.68 })
        );
        assert_eq!(MaterialRegistry::names().count(), 9);
        assert!(MaterialRegistry::lookup("NLO1").is_err());
        for e in MaterialRegistry::entries() {
            e.model.validate().unwrap();
        }
    }

    #[test]
    fn hooke_compliance() {
        let lin1 = MaterialRegistry::get("LIN1").unwrap();
        let s = lin1.sigma(1e8).unwrap();
        assert_eq!(s, 1.0 / (2.0 * 23.5e9));
        assert!((s - 2.12766e-11).abs() < 1e-16);
        assert_eq!(lin1.sigma_prime(3e8).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_exponent_is_constant() {
        let m = MaterialModel::power_law(20e9, 0.5e9, 2.0).unwrap();
        assert_eq!(m.sigma(5e8).unwrap(), 2.5e-11);
        assert_eq!(m.sigma_prime(1e8).unwrap(), 0.0);
        let h = MaterialModel::hooke(20e9).unwrap();
        for t in [0.0, 1.0, 1e6, 1e8, 7.3e8, 1e10] {
            assert_eq!(m.sigma(t).unwrap(), h.sigma(t).unwrap());
        }
    }

    #[test]
    fn power_law_value() {
        // ((0.25e18 + 3e16) / 0.25e18)^0.115 / 4.04e10
        let s = nlb1().sigma(1e8).unwrap();
        let expected = 1.12f64.powf(0.115) / 4.04e10;
        assert!((s - expected).abs() / expected < 1e-14);
        assert!((s - 2.5077e-11).abs() < 5e-16);
    }

    #[test]
    fn power_law_small_stress_limit() {
        let m = nlb1();
        if let MaterialModel::PowerLaw { mu, tau0, q_prime } = m {
            let limit = 3.0 * (q_prime - 2.0) / (2.0 * mu * tau0 * tau0);
            assert_eq!(m.sigma_prime_over_t_at(0.0), limit);
            assert!((m.sigma_prime_over_t_at(1.0) - limit).abs() < 1e-12 * limit);
        }
    }

    #[test]
    fn strain_limiting_zero_stress() {
        let m = MaterialModel::strain_limiting(20e9, 1e9, 1.5).unwrap();
        assert!((m.sigma(0.0).unwrap() - 1.0 / 40e9).abs() < 1e-25);
        assert_eq!(m.sigma_prime(0.0).unwrap(), 0.0);
        // Strain stays below tau_mu / (2 sqrt(2) mu_l).
        let cap = 1e9 / (2.0 * std::f64::consts::SQRT_2 * 20e9);
        assert!(m.flux(1e12).unwrap() < cap);
        assert!(m.flux(1e12).unwrap() > 0.99 * cap);
    }

    #[test]
    fn strain_from_stress_examples() {
        let lin2 = MaterialRegistry::get("LIN2").unwrap();
        assert_eq!(lin2.strain_from_stress([0.0, 0.0]).unwrap(), [0.0, 0.0]);
        let e = lin2.strain_from_stress([0.0, 1e8]).unwrap();
        assert_eq!(e[0], 0.0);
        assert!((e[1] - 1e8 / (2.0 * 21.75e9)).abs() < 1e-18);
        assert!((e[1] - 2.2989e-3).abs() < 1e-7);

        let nls1 = MaterialRegistry::get("NLS1").unwrap();
        let e = nls1.strain_from_stress([0.0, 1e8]).unwrap();
        let expected = 1.12f64.powf(2.825) / (2.0 * 1.8668e13) * 1e8;
        assert!((e[1] - expected).abs() / expected < 1e-14);
        assert!((e[1] - 3.689e-6).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let m = nlb1();
        assert!(matches!(m.sigma(-1.0), Err(Error::Domain(_))));
        assert!(matches!(m.sigma(f64::NAN), Err(Error::Domain(_))));
        assert!(m.sigma_prime(f64::INFINITY).is_err());
        assert!(m.strain_from_stress([f64::NAN, 0.0]).is_err());
        assert!(MaterialModel::power_law(1e9, 1e8, 1.0).is_err());
        assert!(MaterialModel::hooke(0.0).is_err());
        assert!(MaterialModel::strain_limiting(1e9, 1e9, 0.0).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let m = nlb1();
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"kind\":\"power_law\""));
        let back: MaterialModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
