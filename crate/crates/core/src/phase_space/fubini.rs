use serde::Serialize;

use crate::error::Result;
use crate::representation::{Moment, WaveFunction};

/// Fubini-Study metric `dσ² = 2[(c₋₄ - c₋₃²) q² dp² + L dq²/q²]` of the ACS family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FubiniStudy {
    /// `∫ψ² x dx`
    pub c_m3: f64,
    /// `∫ψ² x² dx`
    pub c_m4: f64,
    /// `∫x² ψ′² dx - 1/4`
    pub l: f64,
}

impl FubiniStudy {
    /// `[[g_qq, g_qp], [g_pq, g_pp]]` at `(q, p)`.
    pub fn metric(&self, q: f64, _p: f64) -> [[f64; 2]; 2] {
        [[2.0 * self.l / (q * q), 0.0], [0.0, 2.0 * (self.c_m4 - self.c_m3 * self.c_m3) * q * q]]
    }

    pub fn is_positive(&self) -> bool {
        self.l > 0.0 && self.c_m4 - self.c_m3 * self.c_m3 > 0.0
    }
}

pub fn fubini_study(fiducial: &WaveFunction) -> Result<FubiniStudy> {
    let c_m3 = fiducial.moment(1.0, Moment::Density)?.re;
    let c_m4 = fiducial.moment(2.0, Moment::Density)?.re;
    let l = fiducial.moment(2.0, Moment::DerivDensity)?.re - 0.25;
    Ok(FubiniStudy { c_m3, c_m4, l })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representation::BasisSpec;

    #[test]
    fn laguerre_ground_state() {
        let psi = WaveFunction::basis_vector(BasisSpec::new(2.0, 1).unwrap(), 0).unwrap();
        let fs = fubini_study(&psi).unwrap();
        assert!((fs.c_m3 - 3.0).abs() < 1e-12);
        assert!((fs.c_m4 - 12.0).abs() < 1e-12);
        assert!((fs.l - 0.75).abs() < 1e-12);
        assert!(fs.is_positive());
        let g = fs.metric(2.0, 0.3);
        assert!((g[1][1] - 24.0).abs() < 1e-10);
        assert!((g[0][0] - 0.375).abs() < 1e-12);
    }
}
