//! Antenna gain patterns, pathloss models, and link-budget arithmetic.

use crate::error::{Error, Result};
use crate::geometry::{angular_distance_deg, normalize_deg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Omni,
    Patch,
    MacroSector,
}

/// Parametric azimuth gain pattern. Directional kinds follow the 3GPP-style
/// parabola `peak - min(12 (delta/hpbw)^2, front_to_back)`, which is 3 dB
/// down at `delta = hpbw/2`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AntennaPattern {
    pub kind: PatternKind,
    pub peak_gain_dbi: f64,
    pub hpbw_deg: f64,
    pub front_to_back_db: f64,
    pub boresight_deg: f64,
}

impl AntennaPattern {
    pub fn omni(gain_dbi: f64) -> Self {
        AntennaPattern {
            kind: PatternKind::Omni,
            peak_gain_dbi: gain_dbi,
            hpbw_deg: 360.0,
            front_to_back_db: 0.0,
            boresight_deg: 0.0,
        }
    }

    pub fn directional(
        kind: PatternKind,
        peak_gain_dbi: f64,
        hpbw_deg: f64,
        front_to_back_db: f64,
        boresight_deg: f64,
    ) -> Result<Self> {
        if !(hpbw_deg > 0.0 && hpbw_deg < 360.0) {
            return Err(Error::invalid(format!(
                "hpbw must be in (0, 360) degrees, got {hpbw_deg}"
            )));
        }
        if front_to_back_db < 0.0 {
            return Err(Error::invalid(format!(
                "front-to-back attenuation must be >= 0 dB, got {front_to_back_db}"
            )));
        }
        Ok(AntennaPattern {
            kind,
            peak_gain_dbi,
            hpbw_deg,
            front_to_back_db,
            boresight_deg: normalize_deg(boresight_deg),
        })
    }

    pub fn with_boresight(mut self, boresight_deg: f64) -> Self {
        self.boresight_deg = normalize_deg(boresight_deg);
        self
    }
}

/// Gain of `p` toward the given azimuth, in dB.
pub fn pattern_gain_db(p: &AntennaPattern, azimuth_deg: f64) -> f64 {
    match p.kind {
        PatternKind::Omni => p.peak_gain_dbi,
        PatternKind::Patch | PatternKind::MacroSector => {
            let delta = angular_distance_deg(azimuth_deg, p.boresight_deg);
            let rolloff = 12.0 * (delta / p.hpbw_deg).powi(2);
            p.peak_gain_dbi - rolloff.min(p.front_to_back_db)
        }
    }
}

/// Four orthogonal elements with a one-of-four activation switch.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MeaConfig {
    pub elements: [AntennaPattern; 4],
    pub install_offset_deg: f64,
    pub active_element: usize,
}

impl MeaConfig {
    /// Builds 4 copies of `element` with boresights at
    /// `install_offset + {0, 90, 180, 270}` degrees.
    pub fn new(element: AntennaPattern, install_offset_deg: f64) -> Self {
        let mk = |k: usize| element.with_boresight(install_offset_deg + 90.0 * k as f64);
        MeaConfig {
            elements: [mk(0), mk(1), mk(2), mk(3)],
            install_offset_deg: normalize_deg(install_offset_deg),
            active_element: 0,
        }
    }

    pub fn with_active(mut self, element: usize) -> Self {
        assert!(element < 4, "active element index out of range");
        self.active_element = element;
        self
    }

    pub fn active_pattern(&self) -> &AntennaPattern {
        &self.elements[self.active_element]
    }

    pub fn element_boresight_deg(&self, element: usize) -> f64 {
        self.elements[element].boresight_deg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathlossKind {
    MacroUma,
    SmallcellOutdoor,
}

/// Log-distance pathloss: `intercept + slope * log10(d_km)`, valid from
/// `min_distance_m` outward.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PathlossModel {
    pub kind: PathlossKind,
    pub intercept_db: f64,
    pub slope_db_per_decade: f64,
    pub min_distance_m: f64,
}

impl PathlossModel {
    pub fn macro_uma() -> Self {
        PathlossModel {
            kind: PathlossKind::MacroUma,
            intercept_db: 128.1,
            slope_db_per_decade: 37.6,
            min_distance_m: 10.0,
        }
    }

    pub fn smallcell_outdoor() -> Self {
        PathlossModel {
            kind: PathlossKind::SmallcellOutdoor,
            intercept_db: 140.7,
            slope_db_per_decade: 36.7,
            min_distance_m: 1.0,
        }
    }
}

/// Pathloss in dB at `distance_m` meters.
pub fn pathloss_db(m: &PathlossModel, distance_m: f64) -> Result<f64> {
    if distance_m < m.min_distance_m {
        return Err(Error::invalid(format!(
            "distance {distance_m} m below the {:?} model's minimum {} m",
            m.kind, m.min_distance_m
        )));
    }
    Ok(m.intercept_db + m.slope_db_per_decade * (distance_m / 1000.0).log10())
}

/// Received power for a single link (UE gain handled by the caller).
pub fn rx_power_dbm(tx_power_dbm: f64, tx_gain_db: f64, pathloss_db: f64) -> f64 {
    tx_power_dbm + tx_gain_db - pathloss_db
}

/// Thermal noise power over `bandwidth_hz` with the given receiver noise figure.
pub fn thermal_noise_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    assert!(bandwidth_hz > 0.0, "bandwidth must be positive");
    -174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}
