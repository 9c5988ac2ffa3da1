//! Power units and the piecewise-linear energy-harvester transfer function.

use crate::error::{check_finite, check_non_negative, invalid, Result};

/// Converts a power level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> Result<f64> {
    check_finite("power (dBm)", dbm)?;
    Ok(10f64.powf(dbm / 10.0) * 1e-3)
}

/// Converts a power level in watts to dBm. Zero maps to negative infinity.
pub fn watts_to_dbm(watts: f64) -> Result<f64> {
    check_non_negative("power (W)", watts)?;
    Ok(10.0 * (watts * 1e3).log10())
}

/// Nonlinear RF-to-DC conversion model of an energy-harvesting device.
///
/// Three regions:
///
/// * below the sensitivity level nothing is harvested,
/// * between sensitivity and saturation the DC output is `efficiency * p_in`,
/// * at or above saturation the output stays at `efficiency * P_sat`.
///
/// The output jumps from 0 to `efficiency * P_sens` at the sensitivity level.
/// An input exactly at the sensitivity level harvests; an input exactly at
/// saturation is saturated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarvesterModel {
    sensitivity_dbm: f64,
    saturation_dbm: f64,
    efficiency: f64,
    sensitivity_w: f64,
    saturation_w: f64,
}

impl HarvesterModel {
    pub fn new(sensitivity_dbm: f64, saturation_dbm: f64, efficiency: f64) -> Result<Self> {
        check_finite("sensitivity_dbm", sensitivity_dbm)?;
        check_finite("saturation_dbm", saturation_dbm)?;
        check_finite("efficiency", efficiency)?;
        if sensitivity_dbm >= saturation_dbm {
            return Err(invalid(
                "sensitivity_dbm",
                format!(
                    "sensitivity ({sensitivity_dbm} dBm) must be below saturation ({saturation_dbm} dBm)"
                ),
            ));
        }
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(invalid("efficiency", "efficiency must be in (0,1]"));
        }
        Ok(Self {
            sensitivity_dbm,
            saturation_dbm,
            efficiency,
            sensitivity_w: dbm_to_watts(sensitivity_dbm)?,
            saturation_w: dbm_to_watts(saturation_dbm)?,
        })
    }

    pub fn sensitivity_dbm(&self) -> f64 {
        self.sensitivity_dbm
    }

    pub fn saturation_dbm(&self) -> f64 {
        self.saturation_dbm
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// Sensitivity level in watts.
    pub fn sensitivity_w(&self) -> f64 {
        self.sensitivity_w
    }

    /// Saturation level in watts.
    pub fn saturation_w(&self) -> f64 {
        self.saturation_w
    }

    /// Largest DC power the device can deliver, `efficiency * P_sat`.
    pub fn max_output_w(&self) -> f64 {
        self.efficiency * self.saturation_w
    }

    /// Harvested DC power for an incident RF power `p_in` (watts).
    pub fn harvest(&self, p_in: f64) -> Result<f64> {
        check_non_negative("incident power", p_in)?;
        Ok(self.harvest_unchecked(p_in))
    }

    /// [`harvest`](Self::harvest) without input validation, for inner loops
    /// where `p_in` is a squared magnitude and therefore non-negative.
    #[inline]
    pub fn harvest_unchecked(&self, p_in: f64) -> f64 {
        if p_in < self.sensitivity_w {
            0.0
        } else if p_in < self.saturation_w {
            self.efficiency * p_in
        } else {
            self.efficiency * self.saturation_w
        }
    }

    /// Slope of the transfer function used as a subgradient. The linear slope
    /// is used at both kinks.
    #[inline]
    pub fn slope(&self, p_in: f64) -> f64 {
        if p_in < self.sensitivity_w || p_in > self.saturation_w {
            0.0
        } else {
            self.efficiency
        }
    }
}

impl Default for HarvesterModel {
    /// -22 dBm sensitivity, -8 dBm saturation, 0.35 efficiency.
    fn default() -> Self {
        Self::new(-22.0, -8.0, 0.35).expect("default harvester is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn dbm_conversions() {
        assert_relative_eq!(dbm_to_watts(0.0).unwrap(), 1.0e-3, max_relative = 1e-15);
        assert_relative_eq!(dbm_to_watts(-22.0).unwrap(), 6.3096e-6, max_relative = 1e-4);
        assert_relative_eq!(dbm_to_watts(-8.0).unwrap(), 1.5849e-4, max_relative = 1e-4);
        assert!(dbm_to_watts(f64::NAN).is_err());
        assert!(dbm_to_watts(f64::INFINITY).is_err());
        assert!(watts_to_dbm(-1.0).is_err());
    }

    #[test]
    fn harvest_regions() {
        let m = HarvesterModel::default();
        assert_eq!(m.harvest(1e-7).unwrap(), 0.0);
        assert_relative_eq!(m.harvest(1e-5).unwrap(), 3.5e-6, max_relative = 1e-12);
        assert_relative_eq!(m.harvest(1e-2).unwrap(), 5.5472e-5, max_relative = 1e-4);
        assert!(m.harvest(-1e-9).is_err());
        assert_eq!(m.harvest(0.0).unwrap(), 0.0);
    }

    #[test]
    fn boundary_convention() {
        let m = HarvesterModel::default();
        let ps = m.sensitivity_w();
        assert_eq!(m.harvest(ps).unwrap(), 0.35 * ps);
        assert_eq!(m.harvest(ps * (1.0 - 1e-12)).unwrap(), 0.0);
        assert_eq!(m.harvest(m.saturation_w()).unwrap(), m.max_output_w());
    }

    #[test]
    fn invalid_models() {
        assert!(HarvesterModel::new(-8.0, -22.0, 0.35).is_err());
        assert!(HarvesterModel::new(-10.0, -10.0, 0.35).is_err());
        let err = HarvesterModel::new(-22.0, -8.0, 1.2).unwrap_err();
        assert!(err.to_string().contains("efficiency must be in (0,1]"));
        assert!(HarvesterModel::new(-22.0, -8.0, 0.0).is_err());
        assert!(HarvesterModel::new(-22.0, -8.0, 1.0).is_ok());
    }

    proptest! {
        #[test]
        fn dbm_round_trip(x in -200.0f64..100.0) {
            let back = watts_to_dbm(dbm_to_watts(x).unwrap()).unwrap();
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
        }

        #[test]
        fn harvest_monotone_and_bounded(a in 0.0f64..1e-2, b in 0.0f64..1e-2) {
            let m = HarvesterModel::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(m.harvest(lo).unwrap() <= m.harvest(hi).unwrap());
            if hi > 0.0 {
                prop_assert!(m.harvest(hi).unwrap() / hi <= m.efficiency() + 1e-15);
            }
            if hi >= m.saturation_w() {
                prop_assert_eq!(m.harvest(hi).unwrap(), m.max_output_w());
            }
            if lo < m.sensitivity_w() {
                prop_assert_eq!(m.harvest(lo).unwrap(), 0.0);
            }
        }
    }
}
