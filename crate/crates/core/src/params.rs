//! Model parameters `(gamma, mu, omega, sigma, N)` and regime classification.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Parameters of `i psi_t - gamma Lap^2 psi + mu Lap psi + |psi|^(2 sigma) psi = 0`
/// and of the stationary problem with frequency `omega`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams<T> {
    /// Coefficient of the bilaplacian.
    pub gamma: T,
    /// Coefficient of `-Lap`.
    pub mu: T,
    /// Standing-wave frequency.
    pub omega: T,
    /// Nonlinearity exponent; the potential term is `|u|^(2 sigma + 2)`.
    pub sigma: T,
    /// Spatial dimension `N`.
    pub dim: usize,
}

/// Position of `sigma * N` relative to the mass-critical value 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    MassSubcritical,
    MassCritical,
    MassSupercritical,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::MassSubcritical => "mass-subcritical",
            Regime::MassCritical => "mass-critical",
            Regime::MassSupercritical => "mass-supercritical",
        })
    }
}

/// Which kind of instability is known for radial ground states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstabilityClass {
    /// Radial ground states are unstable by blow-up in finite time.
    FiniteTime,
    /// Radial ground states are unstable by blow-up in finite or infinite time.
    FiniteOrInfiniteTime,
    /// No blow-up instability statement covers these parameters.
    Unclassified,
}

impl fmt::Display for InstabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstabilityClass::FiniteTime => "finite-time blow-up instability regime",
            InstabilityClass::FiniteOrInfiniteTime => {
                "finite-or-infinite-time blow-up instability regime"
            }
            InstabilityClass::Unclassified => "no blow-up instability statement",
        })
    }
}

/// Relative tolerance used when deciding `sigma * N == 4`.
const CRITICAL_TOL: f64 = 1e-12;

impl<T: Real> PhysicalParams<T> {
    /// Validated constructor.
    pub fn new(gamma: T, mu: T, omega: T, sigma: T, dim: usize) -> Result<Self> {
        let p = PhysicalParams {
            gamma,
            mu,
            omega,
            sigma,
            dim,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.gamma, self.mu, self.omega, self.sigma]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Validation("parameters must be finite".into()));
        }
        if self.dim == 0 {
            return Err(Error::Validation("dimension N must be at least 1".into()));
        }
        if !(self.gamma > T::zero()) {
            return Err(Error::Validation(format!(
                "gamma = {} violates the hypothesis gamma > 0",
                self.gamma
            )));
        }
        if self.mu < T::zero() {
            return Err(Error::Validation(format!(
                "mu = {} violates the hypothesis mu >= 0",
                self.mu
            )));
        }
        if !(self.omega > T::zero()) {
            return Err(Error::Validation(format!(
                "omega = {} violates the hypothesis omega > 0",
                self.omega
            )));
        }
        if !(self.sigma > T::zero()) {
            return Err(Error::Validation(format!(
                "sigma = {} violates the hypothesis sigma > 0",
                self.sigma
            )));
        }
        if let Some(crit) = self.sobolev_critical() {
            let sn = self.sigma_n();
            if sn >= crit {
                return Err(Error::Validation(format!(
                    "sigma*N = {} violates sigma*N < 4N/(N-4) = {} (N = {})",
                    sn, crit, self.dim
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> T {
        T::of_usize(self.dim)
    }

    #[inline]
    pub fn sigma_n(&self) -> T {
        self.sigma * self.n()
    }

    /// Exponent `2 sigma + 2` of the potential term.
    #[inline]
    pub fn power(&self) -> T {
        T::lit(2.0) * self.sigma + T::lit(2.0)
    }

    /// `4N/(N-4)` for `N >= 5`; `None` (infinite) for `N <= 4`.
    pub fn sobolev_critical(&self) -> Option<T> {
        if self.dim >= 5 {
            let n = self.n();
            Some(T::lit(4.0) * n / (n - T::lit(4.0)))
        } else {
            None
        }
    }

    /// True when `sigma N` equals 4 up to a relative 1e-12.
    pub fn is_mass_critical(&self) -> bool {
        (self.sigma_n() - T::lit(4.0)).abs() <= T::lit(4.0 * CRITICAL_TOL)
    }

    pub fn regime(&self) -> Regime {
        if self.is_mass_critical() {
            Regime::MassCritical
        } else if self.sigma_n() < T::lit(4.0) {
            Regime::MassSubcritical
        } else {
            Regime::MassSupercritical
        }
    }

    /// Instability statement applicable to radial ground states for these parameters.
    pub fn instability_class(&self) -> InstabilityClass {
        let crit_ok = self.validate().is_ok();
        if !crit_ok || self.dim < 2 {
            return InstabilityClass::Unclassified;
        }
        let regime = self.regime();
        let four = T::lit(4.0);
        let mu_pos = self.mu > T::zero();
        let sigma_le_4 = self.sigma <= four;
        let finite_time = sigma_le_4
            && ((mu_pos && regime != Regime::MassSubcritical)
                || (!mu_pos && regime == Regime::MassSupercritical));
        if finite_time {
            return InstabilityClass::FiniteTime;
        }
        let critical_mu0 = !mu_pos && regime == Regime::MassCritical;
        let large_sigma = (2..=4).contains(&self.dim) && self.sigma > four;
        if critical_mu0 || large_sigma {
            InstabilityClass::FiniteOrInfiniteTime
        } else {
            InstabilityClass::Unclassified
        }
    }

    /// Human readable regime description, e.g.
    /// `"mass-critical, mu=0 (finite-or-infinite-time blow-up instability regime)"`.
    pub fn describe(&self) -> String {
        let mu = if self.mu == T::zero() {
            "mu=0".to_string()
        } else {
            "mu>0".to_string()
        };
        format!("{}, {} ({})", self.regime(), mu, self.instability_class())
    }

    /// `mu >= 2 sqrt(gamma omega)`: every ground state is known to be radial.
    pub fn radial_symmetry_guaranteed(&self) -> bool {
        self.mu >= T::lit(2.0) * (self.gamma * self.omega).sqrt()
    }

    /// Same parameters in another scalar type.
    pub fn cast<U: Real>(&self) -> PhysicalParams<U> {
        PhysicalParams {
            gamma: U::lit(self.gamma.as_f64()),
            mu: U::lit(self.mu.as_f64()),
            omega: U::lit(self.omega.as_f64()),
            sigma: U::lit(self.sigma.as_f64()),
            dim: self.dim,
        }
    }
}
