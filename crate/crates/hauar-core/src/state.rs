//! The appliance state table: (occupancy, temperature level, humidity
//! level) -> fan and light commands.
//!
//! The mapping is data, not code: [`STATE_TABLE`] holds the 13 rows so they
//! can be inspected and diffed cell by cell.

use serde::{Deserialize, Serialize};

use crate::pose::PoseLabel;

/// Fan drive level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FanSpeed {
    Off,
    Low,
    High,
}

/// Incandescent light level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LightLevel {
    Off,
    Dim,
    Bright,
}

/// Commanded appliance state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplianceState {
    pub fan: FanSpeed,
    pub light: LightLevel,
}

impl ApplianceState {
    pub const OFF: ApplianceState =
        ApplianceState { fan: FanSpeed::Off, light: LightLevel::Off };
}

/// A temperature/humidity sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimateReading {
    pub temperature_c: f64,
    pub humidity_pct: f64,
}

/// Binning thresholds; a reading at or above the threshold is High.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimateThresholds {
    pub temp_high_c: f64,
    pub humidity_high_pct: f64,
}

impl Default for ClimateThresholds {
    fn default() -> Self {
        Self { temp_high_c: 25.0, humidity_high_pct: 60.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TempLevel {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HumLevel {
    Low,
    High,
}

/// Bins a reading against the thresholds, boundary inclusive on the High
/// side.
pub fn bin_climate(
    reading: ClimateReading,
    thresholds: &ClimateThresholds,
) -> (TempLevel, HumLevel) {
    let temp = if reading.temperature_c >= thresholds.temp_high_c {
        TempLevel::High
    } else {
        TempLevel::Low
    };
    let hum = if reading.humidity_pct >= thresholds.humidity_high_pct {
        HumLevel::High
    } else {
        HumLevel::Low
    };
    (temp, hum)
}

/// One row of the state table. `None` levels mean "any".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRow {
    pub occupancy: PoseLabel,
    pub temp: Option<TempLevel>,
    pub hum: Option<HumLevel>,
    pub fan: FanSpeed,
    pub light: LightLevel,
}

const fn row(
    occupancy: PoseLabel,
    temp: Option<TempLevel>,
    hum: Option<HumLevel>,
    fan: FanSpeed,
    light: LightLevel,
) -> StateRow {
    StateRow { occupancy, temp, hum, fan, light }
}

const TL: Option<TempLevel> = Some(TempLevel::Low);
const TH: Option<TempLevel> = Some(TempLevel::High);
const HL: Option<HumLevel> = Some(HumLevel::Low);
const HH: Option<HumLevel> = Some(HumLevel::High);

/// The 13 appliance states: one empty-room row plus four climate cells for
/// each occupied pose.
pub const STATE_TABLE: [StateRow; 13] = {
    use {FanSpeed as F, LightLevel as L, PoseLabel as P};
    [
        row(P::Empty, None, None, F::Off, L::Off),
        row(P::Stand, TL, HL, F::Low, L::Bright),
        row(P::Stand, TL, HH, F::High, L::Bright),
        row(P::Stand, TH, HL, F::High, L::Bright),
        row(P::Stand, TH, HH, F::High, L::Dim),
        row(P::Sit, TL, HL, F::Low, L::Bright),
        row(P::Sit, TL, HH, F::High, L::Dim),
        row(P::Sit, TH, HL, F::High, L::Bright),
        row(P::Sit, TH, HH, F::High, L::Dim),
        row(P::Lie, TL, HL, F::Low, L::Dim),
        row(P::Lie, TL, HH, F::Low, L::Dim),
        row(P::Lie, TH, HL, F::High, L::Dim),
        row(P::Lie, TH, HH, F::High, L::Dim),
    ]
};

/// Total lookup over the state table.
pub fn lookup_state(occ: PoseLabel, temp: TempLevel, hum: HumLevel) -> ApplianceState {
    for entry in &STATE_TABLE {
        let temp_matches = entry.temp.map(|t| t == temp).unwrap_or(true);
        let hum_matches = entry.hum.map(|h| h == hum).unwrap_or(true);
        if entry.occupancy == occ && temp_matches && hum_matches {
            return ApplianceState { fan: entry.fan, light: entry.light };
        }
    }
    unreachable!("state table covers every (occupancy, temp, hum) combination")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_is_inclusive_high() {
        let thresholds = ClimateThresholds::default();
        let reading = ClimateReading { temperature_c: 25.0, humidity_pct: 60.0 };
        assert_eq!(bin_climate(reading, &thresholds), (TempLevel::High, HumLevel::High));
    }

    #[test]
    fn below_defaults_is_low_low() {
        let thresholds = ClimateThresholds::default();
        let reading = ClimateReading { temperature_c: 24.9, humidity_pct: 59.9 };
        assert_eq!(bin_climate(reading, &thresholds), (TempLevel::Low, HumLevel::Low));
    }

    #[test]
    fn hot_dry_is_high_low() {
        let thresholds = ClimateThresholds::default();
        let reading = ClimateReading { temperature_c: 30.0, humidity_pct: 40.0 };
        assert_eq!(bin_climate(reading, &thresholds), (TempLevel::High, HumLevel::Low));
    }

    #[test]
    fn empty_room_is_all_off_for_any_climate() {
        for temp in [TempLevel::Low, TempLevel::High] {
            for hum in [HumLevel::Low, HumLevel::High] {
                assert_eq!(lookup_state(PoseLabel::Empty, temp, hum), ApplianceState::OFF);
            }
        }
    }

    #[test]
    fn standing_low_high_is_high_bright() {
        let state = lookup_state(PoseLabel::Stand, TempLevel::Low, HumLevel::High);
        assert_eq!(state, ApplianceState { fan: FanSpeed::High, light: LightLevel::Bright });
    }

    #[test]
    fn lying_low_high_is_low_dim() {
        let state = lookup_state(PoseLabel::Lie, TempLevel::Low, HumLevel::High);
        assert_eq!(state, ApplianceState { fan: FanSpeed::Low, light: LightLevel::Dim });
    }

    #[test]
    fn fan_never_decreases_when_climate_rises() {
        for occ in [PoseLabel::Sit, PoseLabel::Stand, PoseLabel::Lie] {
            for hum in [HumLevel::Low, HumLevel::High] {
                let cold = lookup_state(occ, TempLevel::Low, hum).fan;
                let hot = lookup_state(occ, TempLevel::High, hum).fan;
                assert!(hot >= cold, "{occ:?}/{hum:?}: fan dropped from {cold:?} to {hot:?}");
            }
            for temp in [TempLevel::Low, TempLevel::High] {
                let dry = lookup_state(occ, temp, HumLevel::Low).fan;
                let humid = lookup_state(occ, temp, HumLevel::High).fan;
                assert!(humid >= dry, "{occ:?}/{temp:?}: fan dropped from {dry:?} to {humid:?}");
            }
        }
    }
}
