//! The trigger loop: gate on motion or an elapsed timer, run the vision
//! pipeline, deduce the appliance state, reset the timer.
//!
//! The controller is a deterministic, replayable state machine over an
//! explicit event clock. Captured frames live only for the duration of one
//! pipeline run; commands structurally cannot carry pixel data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::Frame;
use crate::pipeline::{analyze_frame, ModelBundle};
use crate::pose::PoseLabel;
use crate::state::{bin_climate, lookup_state, ApplianceState, ClimateReading, ClimateThresholds};

/// Trigger period and climate binning thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// Timer period in seconds; a run is forced whenever this much time has
    /// passed since the last one.
    pub period_s: u64,
    pub thresholds: ClimateThresholds,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self { period_s: 1800, thresholds: ClimateThresholds::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// The PIR asserted.
    Motion,
    /// Plain clock tick.
    Tick,
}

/// One sensed event at time `t` (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorEvent {
    pub t: u64,
    pub kind: EventKind,
}

/// The command emitted after a pipeline run. Carries classification and
/// climate context, never pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplianceCommand {
    pub t: u64,
    pub state: ApplianceState,
    pub occupancy: PoseLabel,
    pub climate: ClimateReading,
}

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("time regression: event at {event_t}s precedes last processed {last_t}s")]
    TimeRegression { event_t: u64, last_t: u64 },
    #[error("frame capture failed: {0}")]
    Capture(String),
}

/// Produces the room frame for a pipeline run.
pub trait FrameSource {
    fn capture(&mut self, t: u64) -> Result<Frame, String>;
}

/// Produces the climate reading for a pipeline run.
pub trait ClimateSource {
    fn read(&mut self, t: u64) -> ClimateReading;
}

/// Controller state between events. Starts with everything off and no run
/// on record, so the first event always triggers.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    last_run_t: Option<u64>,
    last_event_t: Option<u64>,
    current_appliances: ApplianceState,
}

impl Default for ControllerState {
    fn default() -> Self {
        Self::new()
    }
}

impl ControllerState {
    pub fn new() -> Self {
        Self { last_run_t: None, last_event_t: None, current_appliances: ApplianceState::OFF }
    }

    pub fn last_run_t(&self) -> Option<u64> {
        self.last_run_t
    }

    pub fn current_appliances(&self) -> ApplianceState {
        self.current_appliances
    }
}

/// True when the event must start a pipeline run: any motion, a cold
/// start, or `period_s` elapsed since the last run.
pub fn should_trigger(
    state: &ControllerState,
    event: &SensorEvent,
    cfg: &ControllerConfig,
) -> Result<bool, ControllerError> {
    if let Some(last) = state.last_event_t {
        if event.t < last {
            return Err(ControllerError::TimeRegression { event_t: event.t, last_t: last });
        }
    }
    Ok(match (event.kind, state.last_run_t) {
        (EventKind::Motion, _) => true,
        (EventKind::Tick, None) => true,
        (EventKind::Tick, Some(last_run)) => event.t - last_run >= cfg.period_s,
    })
}

/// One full sensing pass: read climate, capture a frame, classify the
/// room, look the appliance state up in the table. The frame and all
/// intermediate crops are dropped before the command is returned.
pub fn run_pipeline(
    frames: &mut dyn FrameSource,
    climate: &mut dyn ClimateSource,
    bundle: &ModelBundle,
    cfg: &ControllerConfig,
    t: u64,
) -> Result<ApplianceCommand, ControllerError> {
    let reading = climate.read(t);
    let frame = frames.capture(t).map_err(ControllerError::Capture)?;
    let analysis = analyze_frame(&frame, bundle);
    let (temp, hum) = bin_climate(reading, &cfg.thresholds);
    let state = lookup_state(analysis.label, temp, hum);
    Ok(ApplianceCommand { t, state, occupancy: analysis.label, climate: reading })
}

/// Consumes one event. On a trigger the pipeline runs, the timer resets,
/// and the command is emitted; otherwise nothing changes. A pipeline
/// failure keeps the previous appliance state and surfaces the error.
pub fn step(
    state: &mut ControllerState,
    event: &SensorEvent,
    frames: &mut dyn FrameSource,
    climate: &mut dyn ClimateSource,
    bundle: &ModelBundle,
    cfg: &ControllerConfig,
) -> Result<Option<ApplianceCommand>, ControllerError> {
    let trigger = should_trigger(state, event, cfg)?;
    state.last_event_t = Some(event.t);
    if !trigger {
        return Ok(None);
    }
    let command = run_pipeline(frames, climate, bundle, cfg, event.t)?;
    state.last_run_t = Some(event.t);
    state.current_appliances = command.state;
    Ok(Some(command))
}

/// Serializes a command as one JSON line, the controller's wire format.
pub fn command_line(command: &ApplianceCommand) -> String {
    serde_json::to_string(command).expect("command serializes")
}
