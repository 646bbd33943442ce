//! Physical constants (CODATA 2018), SI units throughout.

/// Speed of light in vacuum (m/s).
pub const C: f64 = 299_792_458.0;

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;

/// Standard gravitational acceleration (m/s²).
pub const G0: f64 = 9.806_65;

/// Fixed physical constants used by every module.
///
/// These are CODATA values, not configuration: the config loader rejects
/// attempts to override them.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhysicalConstants {
    /// Speed of light (m/s).
    pub c: f64,
    /// Reduced Planck constant (J·s).
    pub hbar: f64,
    /// Boltzmann constant (J/K).
    pub k_b: f64,
    /// Gravitational acceleration (m/s²).
    pub g0: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            c: C,
            hbar: HBAR,
            k_b: K_B,
            g0: G0,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<(), crate::error::Error> {
        for (name, v) in [
            ("constants.c", self.c),
            ("constants.hbar", self.hbar),
            ("constants.k_b", self.k_b),
            ("constants.g0", self.g0),
        ] {
            if !(v > 0.0) {
                return Err(crate::error::Error::validation(
                    name,
                    "physical constants must be strictly positive",
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_positive_and_fixed() {
        let k = PhysicalConstants::default();
        k.validate().unwrap();
        assert_eq!(k.c, 299_792_458.0);
        assert_eq!(k.k_b, 1.380_649e-23);
    }
}
