use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

use crate::{Error, Result};

/// Smallest admissible distance between `|arg z|` and `π/2`.
pub const DEFAULT_SECTOR_MARGIN: f64 = 1e-3;

/// A point of the open right half-plane in polar form.
///
/// Used for complex times `z`, real times `t` (phase zero) and the real
/// spectral parameter `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorPoint {
    modulus: f64,
    phase: f64,
}

impl SectorPoint {
    pub fn new(modulus: f64, phase: f64) -> Result<Self> {
        Self::with_margin(modulus, phase, DEFAULT_SECTOR_MARGIN)
    }

    /// Like [`SectorPoint::new`] but with an explicit margin `ε`, requiring
    /// `|phase| ≤ π/2 − ε`.
    pub fn with_margin(modulus: f64, phase: f64, margin: f64) -> Result<Self> {
        if !(modulus.is_finite() && modulus > 0.0) {
            return Err(Error::Domain(
                format!("|z| = {modulus}"),
                "modulus must be positive and finite".into(),
            ));
        }
        let limit = FRAC_PI_2 - margin;
        if !phase.is_finite() || phase.abs() > limit {
            return Err(Error::Sector { phase: phase.abs(), limit });
        }
        Ok(Self { modulus, phase })
    }

    pub fn real(t: f64) -> Result<Self> {
        Self::new(t, 0.0)
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.norm(), z.arg())
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn is_real(&self) -> bool {
        self.phase == 0.0
    }

    pub fn to_complex(&self) -> Complex64 {
        if self.is_real() {
            Complex64::new(self.modulus, 0.0)
        } else {
            Complex64::from_polar(self.modulus, self.phase)
        }
    }

    /// The same direction with modulus scaled by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::with_margin(self.modulus * factor, self.phase, 0.0)
    }
}
