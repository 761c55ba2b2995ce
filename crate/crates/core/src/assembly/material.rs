use crate::levelset::{dirac, heaviside, SmoothingParams};

/// Conductivities (W/mK) on the positive (`k1`) and negative (`k2`) side of the level set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialPair {
    pub k1: f64,
    pub k2: f64,
}

impl MaterialPair {
    /// Density-mapped conductivity `k1 H + k2 (1 - H)`.
    pub fn kappa_at(&self, phi: f64, sp: SmoothingParams) -> f64 {
        let h = heaviside(phi, sp);
        self.k1 * h + self.k2 * (1.0 - h)
    }

    /// `d kappa / d phi = (k1 - k2) delta(phi)`.
    pub fn dkappa_dphi(&self, phi: f64, sp: SmoothingParams) -> f64 {
        (self.k1 - self.k2) * dirac(phi, sp)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { k1: self.k1 * c, k2: self.k2 * c }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copper_pdms_values() {
        let m = MaterialPair { k1: 398.0, k2: 0.27 };
        let sp = SmoothingParams::new(0.05, 0.0).unwrap();
        assert!((m.kappa_at(0.0, sp) - 199.135).abs() < 1e-12);
        assert!((m.dkappa_dphi(0.0, sp) - 5965.95).abs() < 1e-9);
        assert_eq!(m.kappa_at(0.05, sp), 398.0);
        assert_eq!(m.kappa_at(-0.06, sp), 0.27);
        assert_eq!(m.dkappa_dphi(0.07, sp), 0.0);
        for &phi in &[-0.04, -0.01, 0.003, 0.03] {
            let h = 1e-7;
            let fd = (m.kappa_at(phi + h, sp) - m.kappa_at(phi - h, sp)) / (2.0 * h);
            assert!((fd - m.dkappa_dphi(phi, sp)).abs() <= 1e-6 * m.dkappa_dphi(phi, sp).abs());
        }
    }
}
