//! Discrete-event home simulator: scripted occupants and climate drive a
//! PIR sensor model and synthetic frame rendering, the controller reacts,
//! and an energy ledger compares the resulting appliance schedule against
//! an always-on baseline.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{
    step, ApplianceCommand, ClimateSource, ControllerConfig, ControllerState, EventKind,
    FrameSource, SensorEvent,
};
use crate::frame::Frame;
use crate::pipeline::ModelBundle;
use crate::state::{ApplianceState, ClimateReading, FanSpeed, LightLevel};
use crate::synth::{render_scene, FigurePose, FigureSpec, SceneSpec, SCENE_HEIGHT, SCENE_WIDTH};

/// Version tag for scenario files.
pub const SCENARIO_VERSION: &str = "hauar-scenario v1";
/// Version tag for simulation reports.
pub const REPORT_VERSION: &str = "hauar-report v1";

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("scenario file: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported scenario version {0:?}")]
    Version(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("command trace is not sorted by time")]
    UnsortedTrace,
}

/// One scripted presence interval: an occupant in `pose` from `t_start`
/// (inclusive) to `t_end` (exclusive), moving or still.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupantInterval {
    pub t_start: u64,
    pub t_end: u64,
    pub pose: FigurePose,
    pub moving: bool,
}

/// A step point of the climate track; values hold until the next point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClimatePoint {
    pub t: u64,
    pub temperature_c: f64,
    pub humidity_pct: f64,
}

/// A scripted home timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub version: String,
    pub duration_s: u64,
    pub occupant_intervals: Vec<OccupantInterval>,
    pub climate_track: Vec<ClimatePoint>,
    pub seed: u64,
}

impl Scenario {
    pub fn new(
        duration_s: u64,
        occupant_intervals: Vec<OccupantInterval>,
        climate_track: Vec<ClimatePoint>,
        seed: u64,
    ) -> Self {
        Self {
            version: SCENARIO_VERSION.to_string(),
            duration_s,
            occupant_intervals,
            climate_track,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.version != SCENARIO_VERSION {
            return Err(SimError::Version(self.version.clone()));
        }
        if self.duration_s == 0 {
            return Err(SimError::InvalidScenario("duration must be positive".into()));
        }
        if self.climate_track.is_empty() {
            return Err(SimError::InvalidScenario("climate track must be non-empty".into()));
        }
        if !self.climate_track.windows(2).all(|w| w[0].t <= w[1].t) {
            return Err(SimError::InvalidScenario("climate track must be sorted by t".into()));
        }
        for interval in &self.occupant_intervals {
            if interval.t_start >= interval.t_end || interval.t_end > self.duration_s {
                return Err(SimError::InvalidScenario(format!(
                    "occupant interval [{}, {}) outside duration {}",
                    interval.t_start, interval.t_end, self.duration_s
                )));
            }
        }
        Ok(())
    }

    /// Occupants present at time `t`, in interval order.
    pub fn occupants_at(&self, t: u64) -> Vec<&OccupantInterval> {
        self.occupant_intervals
            .iter()
            .filter(|iv| iv.t_start <= t && t < iv.t_end)
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let scenario: Scenario = serde_json::from_slice(&fs::read(path)?)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn save(&self, path: &Path) -> Result<(), SimError> {
        Ok(fs::write(path, serde_json::to_vec_pretty(self)?)?)
    }
}

/// PIR sensor behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PirConfig {
    /// Chance per tick that a moving occupant asserts the sensor.
    pub p_detect: f64,
    /// Poisson rate of spurious assertions per hour in empty or still rooms.
    pub fp_rate_per_hour: f64,
    /// Sensor polling interval in seconds.
    pub tick_s: u64,
}

impl Default for PirConfig {
    fn default() -> Self {
        Self { p_detect: 0.95, fp_rate_per_hour: 0.5, tick_s: 5 }
    }
}

/// Appliance wattages. Off draws nothing by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub fan_low_w: f64,
    pub fan_high_w: f64,
    pub light_dim_w: f64,
    pub light_bright_w: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self { fan_low_w: 40.0, fan_high_w: 75.0, light_dim_w: 25.0, light_bright_w: 60.0 }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.fan_low_w >= 0.0 && self.fan_low_w < self.fan_high_w) {
            return Err(SimError::InvalidScenario("fan wattages must satisfy 0 <= low < high".into()));
        }
        if !(self.light_dim_w >= 0.0 && self.light_dim_w < self.light_bright_w) {
            return Err(SimError::InvalidScenario("light wattages must satisfy 0 <= dim < bright".into()));
        }
        Ok(())
    }

    pub fn watts(&self, state: ApplianceState) -> f64 {
        let fan = match state.fan {
            FanSpeed::Off => 0.0,
            FanSpeed::Low => self.fan_low_w,
            FanSpeed::High => self.fan_high_w,
        };
        let light = match state.light {
            LightLevel::Off => 0.0,
            LightLevel::Dim => self.light_dim_w,
            LightLevel::Bright => self.light_bright_w,
        };
        fan + light
    }

    /// Always-on comparison state: fan High, light Bright.
    pub fn baseline_watts(&self) -> f64 {
        self.fan_high_w + self.light_bright_w
    }
}

/// Result of one simulated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub version: String,
    pub pipeline_runs: u64,
    pub pir_false_positives: u64,
    pub energy_wh: f64,
    pub baseline_wh: f64,
    pub errors: Vec<String>,
    pub command_trace: Vec<ApplianceCommand>,
}

impl SimReport {
    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("report serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), SimError> {
        Ok(fs::write(path, self.to_bytes())?)
    }
}

/// Samples the PIR for one tick: `Bernoulli(p_detect)` when a moving
/// occupant is present, otherwise the chance of at least one Poisson false
/// positive during the tick.
pub fn sample_pir(moving_present: bool, cfg: &PirConfig, rng: &mut ChaCha8Rng) -> bool {
    let p = if moving_present {
        cfg.p_detect
    } else {
        1.0 - (-cfg.fp_rate_per_hour * cfg.tick_s as f64 / 3600.0).exp()
    };
    rng.random_range(0.0..1.0) < p
}

/// Piecewise-constant energy integral of a command trace over
/// `duration_s`, plus the always-on baseline. Appliances start Off at t=0
/// and each command's state holds until the next command.
pub fn energy_of_trace(
    trace: &[ApplianceCommand],
    duration_s: u64,
    power: &PowerModel,
) -> Result<(f64, f64), SimError> {
    if !trace.windows(2).all(|w| w[0].t <= w[1].t) {
        return Err(SimError::UnsortedTrace);
    }
    let mut energy_wh = 0.0;
    let mut current = ApplianceState::OFF;
    let mut t = 0u64;
    for command in trace {
        let until = command.t.min(duration_s);
        if until > t {
            energy_wh += power.watts(current) * (until - t) as f64 / 3600.0;
            t = until;
        }
        current = command.state;
    }
    if duration_s > t {
        energy_wh += power.watts(current) * (duration_s - t) as f64 / 3600.0;
    }
    let baseline_wh = power.baseline_watts() * duration_s as f64 / 3600.0;
    Ok((energy_wh, baseline_wh))
}

/// The scene the camera would capture at time `t`. Pure in (scenario, t),
/// which is what lets tests re-render any frame the simulator saw.
pub fn scene_at(scenario: &Scenario, t: u64) -> SceneSpec {
    let occupants = scenario.occupants_at(t);
    let mut figures = Vec::with_capacity(occupants.len());
    for (i, occupant) in occupants.iter().enumerate() {
        let scale = 1.15f64;
        let (bw, bh): (f64, f64) = match occupant.pose {
            FigurePose::Stand => (16.0, 44.0),
            FigurePose::Sit => (22.0, 26.0),
            FigurePose::Lie => (44.0, 18.0),
        };
        let w = (bw * scale).round() as i32;
        let h = (bh * scale).round() as i32;
        let slot_x = 16 + i as i32 * 56;
        let anchor_x = slot_x.min(SCENE_WIDTH as i32 - w - 2).max(2);
        let anchor_y = (78 - h).max(2).min(SCENE_HEIGHT as i32 - h - 2);
        figures.push(FigureSpec {
            pose: occupant.pose,
            anchor_x,
            anchor_y,
            scale,
            visible_fraction: 1.0,
        });
    }
    SceneSpec { figures, background_level: 64, noise_sigma: 2.0, illumination_gain: 1.0 }
}

/// Seed for the frame rendered at time `t`.
pub fn frame_seed(scenario_seed: u64, t: u64) -> u64 {
    scenario_seed.wrapping_add(t).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

struct ScenarioCamera<'a> {
    scenario: &'a Scenario,
}

impl FrameSource for ScenarioCamera<'_> {
    fn capture(&mut self, t: u64) -> Result<Frame, String> {
        let spec = scene_at(self.scenario, t);
        render_scene(&spec, frame_seed(self.scenario.seed, t))
            .map(|(frame, _)| frame)
            .map_err(|e| e.to_string())
    }
}

struct ScenarioClimate<'a> {
    track: &'a [ClimatePoint],
}

impl ClimateSource for ScenarioClimate<'_> {
    fn read(&mut self, t: u64) -> ClimateReading {
        let point = self
            .track
            .iter()
            .take_while(|p| p.t <= t)
            .last()
            .unwrap_or(&self.track[0]);
        ClimateReading { temperature_c: point.temperature_c, humidity_pct: point.humidity_pct }
    }
}

/// Runs the scenario tick by tick. Every tick samples the PIR and feeds
/// the controller a Motion or Tick event; on a trigger the controller
/// captures a freshly rendered frame and interpolates the climate track.
/// The whole run is deterministic in `scenario.seed`.
pub fn run_scenario(
    scenario: &Scenario,
    bundle: &ModelBundle,
    controller_cfg: &ControllerConfig,
    pir_cfg: &PirConfig,
    power: &PowerModel,
) -> Result<SimReport, SimError> {
    scenario.validate()?;
    power.validate()?;
    if pir_cfg.tick_s == 0 {
        return Err(SimError::InvalidScenario("tick must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut camera = ScenarioCamera { scenario };
    let mut climate = ScenarioClimate { track: &scenario.climate_track };
    let mut controller = ControllerState::new();
    let mut trace = Vec::new();
    let mut errors = Vec::new();
    let mut pir_false_positives = 0u64;

    let mut t = 0u64;
    while t <= scenario.duration_s {
        let moving = scenario.occupants_at(t).iter().any(|o| o.moving);
        let pir = sample_pir(moving, pir_cfg, &mut rng);
        if pir && !moving {
            pir_false_positives += 1;
        }
        let event = SensorEvent { t, kind: if pir { EventKind::Motion } else { EventKind::Tick } };
        match step(&mut controller, &event, &mut camera, &mut climate, bundle, controller_cfg) {
            Ok(Some(command)) => trace.push(command),
            Ok(None) => {}
            Err(e) => errors.push(format!("t={t}: {e}")),
        }
        t += pir_cfg.tick_s;
    }

    let (energy_wh, baseline_wh) = energy_of_trace(&trace, scenario.duration_s, power)?;
    Ok(SimReport {
        version: REPORT_VERSION.to_string(),
        pipeline_runs: trace.len() as u64,
        pir_false_positives,
        energy_wh,
        baseline_wh,
        errors,
        command_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::PoseLabel;

    fn command(t: u64, fan: FanSpeed, light: LightLevel) -> ApplianceCommand {
        ApplianceCommand {
            t,
            state: ApplianceState { fan, light },
            occupancy: PoseLabel::Empty,
            climate: ClimateReading { temperature_c: 22.0, humidity_pct: 50.0 },
        }
    }

    #[test]
    fn certain_detection_with_moving_occupant() {
        let cfg = PirConfig { p_detect: 1.0, ..PirConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            assert!(sample_pir(true, &cfg, &mut rng));
        }
    }

    #[test]
    fn zero_fp_rate_never_fires_in_empty_room() {
        let cfg = PirConfig { fp_rate_per_hour: 0.0, ..PirConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            assert!(!sample_pir(false, &cfg, &mut rng));
        }
    }

    #[test]
    fn false_positive_count_matches_poisson_mean() {
        // 0.5/h over 10,000 empty hours at 5 s ticks: mean 5,000, and the
        // observed count must land within 3 sigma.
        let cfg = PirConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let ticks = 10_000 * 3600 / cfg.tick_s;
        let mut count = 0u64;
        for _ in 0..ticks {
            if sample_pir(false, &cfg, &mut rng) {
                count += 1;
            }
        }
        let mean = 5_000.0f64;
        let sigma = mean.sqrt();
        assert!(
            (count as f64 - mean).abs() <= 3.0 * sigma,
            "false positive count {count} outside 3 sigma of {mean}"
        );
    }

    #[test]
    fn empty_trace_energy_is_zero_baseline_full() {
        let (energy, baseline) = energy_of_trace(&[], 8 * 3600, &PowerModel::default()).unwrap();
        assert_eq!(energy, 0.0);
        assert!((baseline - 1080.0).abs() < 1e-9);
    }

    #[test]
    fn single_command_holds_for_whole_duration() {
        let trace = [command(0, FanSpeed::Low, LightLevel::Bright)];
        let (energy, _) = energy_of_trace(&trace, 4 * 3600, &PowerModel::default()).unwrap();
        assert!((energy - 400.0).abs() < 1e-9);
    }

    #[test]
    fn piecewise_integration_switches_at_command_times() {
        let trace = [
            command(0, FanSpeed::Off, LightLevel::Off),
            command(2 * 3600, FanSpeed::High, LightLevel::Dim),
        ];
        let (energy, _) = energy_of_trace(&trace, 4 * 3600, &PowerModel::default()).unwrap();
        assert!((energy - 200.0).abs() < 1e-9);
    }

    #[test]
    fn unsorted_trace_is_error() {
        let trace = [
            command(100, FanSpeed::Off, LightLevel::Off),
            command(50, FanSpeed::Off, LightLevel::Off),
        ];
        assert!(matches!(
            energy_of_trace(&trace, 200, &PowerModel::default()),
            Err(SimError::UnsortedTrace)
        ));
    }

    #[test]
    fn climate_track_is_step_hold() {
        let track = [
            ClimatePoint { t: 0, temperature_c: 20.0, humidity_pct: 40.0 },
            ClimatePoint { t: 100, temperature_c: 30.0, humidity_pct: 70.0 },
        ];
        let mut source = ScenarioClimate { track: &track };
        assert_eq!(source.read(0).temperature_c, 20.0);
        assert_eq!(source.read(99).temperature_c, 20.0);
        assert_eq!(source.read(100).temperature_c, 30.0);
        assert_eq!(source.read(5000).humidity_pct, 70.0);
    }

    #[test]
    fn scene_reflects_scripted_occupants() {
        let scenario = Scenario::new(
            1000,
            vec![OccupantInterval { t_start: 100, t_end: 500, pose: FigurePose::Lie, moving: false }],
            vec![ClimatePoint { t: 0, temperature_c: 22.0, humidity_pct: 50.0 }],
            7,
        );
        assert!(scene_at(&scenario, 50).figures.is_empty());
        let spec = scene_at(&scenario, 100);
        assert_eq!(spec.figures.len(), 1);
        assert_eq!(spec.figures[0].pose, FigurePose::Lie);
        assert!(scene_at(&scenario, 500).figures.is_empty());
    }

    #[test]
    fn scenario_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.json");
        let scenario = Scenario::new(
            3600,
            vec![OccupantInterval { t_start: 0, t_end: 600, pose: FigurePose::Stand, moving: true }],
            vec![ClimatePoint { t: 0, temperature_c: 22.0, humidity_pct: 50.0 }],
            3,
        );
        scenario.save(&path).unwrap();
        assert_eq!(Scenario::load(&path).unwrap(), scenario);
    }

    #[test]
    fn scenario_validation_catches_bad_intervals() {
        let scenario = Scenario::new(
            100,
            vec![OccupantInterval { t_start: 50, t_end: 200, pose: FigurePose::Sit, moving: true }],
            vec![ClimatePoint { t: 0, temperature_c: 22.0, humidity_pct: 50.0 }],
            0,
        );
        assert!(scenario.validate().is_err());
    }
}
