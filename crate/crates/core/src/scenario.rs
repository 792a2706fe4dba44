//! Scenario files: the JSON schema a run is configured by, with defaults,
//! validation, and conversion into the runtime parameter structs.
//!
//! Every section and field is optional in the file — omitted parts take the
//! defaults below — but unknown keys are rejected, so typos fail loudly
//! instead of silently running the default.

use crate::controllers::{ControllerKind, ControllerState, DerivEstimator, PiBlock};
use crate::error::SimError;
use crate::frames::PllParams;
use crate::machine::{MechLoad, MotorParams};
use crate::network::{DisturbanceEvent, EventKind, GridParams};
use crate::statcom::StatcomParams;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Metadata {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub v_source_nom: f64,
    pub r_g: f64,
    pub l_g: f64,
    pub c_bus: f64,
    pub r_c_damp: f64,
    pub frequency_hz: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridParams::default();
        GridConfig {
            v_source_nom: g.v_source_nom,
            r_g: g.r_g,
            l_g: g.l_g,
            c_bus: g.c_bus,
            r_c_damp: g.r_c_damp,
            frequency_hz: 60.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatcomConfig {
    pub r_s: f64,
    pub l_s: f64,
    pub c_dc: f64,
    pub r_loss: f64,
    pub v_dc_nom: f64,
    pub v_dc_floor: f64,
    /// DC-link setpoint; `None` tracks `v_dc_nom`.
    pub v_dc_ref: Option<f64>,
    /// Modulation ceiling: command magnitude is limited to m_max·v_dc/2.
    pub m_max: f64,
}

impl Default for StatcomConfig {
    fn default() -> Self {
        let s = StatcomParams::default();
        StatcomConfig {
            r_s: s.r_s,
            l_s: s.l_s,
            c_dc: s.c_dc,
            r_loss: s.r_loss,
            v_dc_nom: s.v_dc_nom,
            v_dc_floor: s.v_dc_floor,
            v_dc_ref: None,
            m_max: 1.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotorConfig {
    /// Number of identical machines; parameters below are per machine.
    pub count: u32,
    pub r_stator: f64,
    pub r_rotor: f64,
    pub l_ls: f64,
    pub l_lr: f64,
    pub l_m: f64,
    pub pole_pairs: f64,
    pub inertia: f64,
    pub torque_const: f64,
    pub torque_quad: f64,
}

impl Default for MotorConfig {
    fn default() -> Self {
        let m = MotorParams::default();
        let l = MechLoad::default();
        MotorConfig {
            count: 1,
            r_stator: m.r_stator,
            r_rotor: m.r_rotor,
            l_ls: m.l_ls,
            l_lr: m.l_lr,
            l_m: m.l_m,
            pole_pairs: m.pole_pairs,
            inertia: m.inertia,
            torque_const: l.torque_const,
            torque_quad: l.torque_quad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
    /// Symmetric output limit: the block saturates at ±limit.
    pub limit: f64,
}

impl Default for PiGains {
    fn default() -> Self {
        PiGains { kp: 1.0, ki: 0.0, limit: 1e9 }
    }
}

impl PiGains {
    pub fn block(&self) -> PiBlock {
        PiBlock::new(self.kp, self.ki, -self.limit, self.limit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PllGains {
    pub kp: f64,
    pub ki: f64,
}

impl Default for PllGains {
    fn default() -> Self {
        let p = PllParams::default();
        PllGains { kp: p.kp, ki: p.ki }
    }
}

/// How the regulators are advanced: as extra continuous states inside the
/// integrator, or sampled once per step with held outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    Continuous,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    pub mode: ControlMode,
    /// Bus voltage magnitude setpoint.
    pub v_ref: f64,
    /// Outer AC (bus-magnitude) loop.
    pub ac: PiGains,
    /// Outer DC-link loop.
    pub dc: PiGains,
    /// Inner current loops (double-loop strategy only).
    pub inner: PiGains,
    /// Filter time constant of the reference-derivative estimator.
    pub deriv_tau: f64,
    pub pll: PllGains,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            kind: ControllerKind::Proposed,
            mode: ControlMode::Continuous,
            v_ref: 1.0,
            ac: PiGains { kp: 2.0, ki: 600.0, limit: 3.0 },
            dc: PiGains { kp: 0.5, ki: 20.0, limit: 1.0 },
            inner: PiGains { kp: 0.3, ki: 60.0, limit: 0.5 },
            deriv_tau: 0.001,
            pll: PllGains::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Log every n-th step.
    pub log_decimation: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { dt: 1e-4, t_end: 2.0, log_decimation: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub metadata: Metadata,
    pub grid: GridConfig,
    pub statcom: StatcomConfig,
    pub motors: MotorConfig,
    pub controller: ControllerConfig,
    pub events: Vec<DisturbanceEvent>,
    pub solver: SolverConfig,
}

impl Scenario {
    pub fn from_json_str(s: &str) -> Result<Scenario, SimError> {
        let scenario: Scenario = serde_json::from_str(s)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: &Path) -> Result<Scenario, SimError> {
        Scenario::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        // Serialization of this schema cannot fail.
        serde_json::to_string_pretty(self).expect("scenario serialization")
    }

    pub fn write_to_path(&self, path: &Path) -> Result<(), SimError> {
        let mut text = self.to_json_string();
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.grid.frequency_hz
    }

    pub fn grid_params(&self) -> GridParams {
        GridParams {
            v_source_nom: self.grid.v_source_nom,
            r_g: self.grid.r_g,
            l_g: self.grid.l_g,
            c_bus: self.grid.c_bus,
            r_c_damp: self.grid.r_c_damp,
            omega: self.omega(),
        }
    }

    pub fn statcom_params(&self) -> StatcomParams {
        StatcomParams {
            r_s: self.statcom.r_s,
            l_s: self.statcom.l_s,
            omega: self.omega(),
            c_dc: self.statcom.c_dc,
            r_loss: self.statcom.r_loss,
            v_dc_nom: self.statcom.v_dc_nom,
            v_dc_floor: self.statcom.v_dc_floor,
        }
    }

    pub fn v_dc_ref(&self) -> f64 {
        self.statcom.v_dc_ref.unwrap_or(self.statcom.v_dc_nom)
    }

    /// Per-machine parameters (the file already stores per-machine values).
    pub fn motor_params(&self) -> MotorParams {
        MotorParams {
            r_stator: self.motors.r_stator,
            r_rotor: self.motors.r_rotor,
            l_ls: self.motors.l_ls,
            l_lr: self.motors.l_lr,
            l_m: self.motors.l_m,
            pole_pairs: self.motors.pole_pairs,
            inertia: self.motors.inertia,
        }
    }

    pub fn mech_load(&self) -> MechLoad {
        MechLoad {
            torque_const: self.motors.torque_const,
            torque_quad: self.motors.torque_quad,
        }
    }

    pub fn pll_params(&self) -> PllParams {
        PllParams {
            kp: self.controller.pll.kp,
            ki: self.controller.pll.ki,
            omega_nom: self.omega(),
        }
    }

    /// Fresh (zero-integrator) regulator state for the configured strategy.
    pub fn controller_state(&self) -> ControllerState {
        self.controller_state_of_kind(self.controller.kind)
    }

    pub fn controller_state_of_kind(&self, kind: ControllerKind) -> ControllerState {
        let c = &self.controller;
        match kind {
            ControllerKind::DoubleLoop => ControllerState::DoubleLoop {
                ac: c.ac.block(),
                dc: c.dc.block(),
                id: c.inner.block(),
                iq: c.inner.block(),
            },
            ControllerKind::Dov => ControllerState::Dov { ac: c.ac.block(), dc: c.dc.block() },
            ControllerKind::Proposed => ControllerState::Proposed {
                ac: c.ac.block(),
                dc: c.dc.block(),
                est: DerivEstimator::new(c.deriv_tau),
            },
        }
    }

    /// Events sorted by start time (the file may list them in any order).
    pub fn sorted_events(&self) -> Vec<DisturbanceEvent> {
        let mut evs = self.events.clone();
        evs.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        evs
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let mut problems = Vec::new();
        let mut need = |ok: bool, path: &str, msg: String| {
            if !ok {
                problems.push(format!("{path}: {msg}"));
            }
        };

        let pos = |v: f64| v.is_finite() && v > 0.0;
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;

        need(pos(self.grid.v_source_nom), "/grid/v_source_nom", "must be > 0".into());
        need(nonneg(self.grid.r_g), "/grid/r_g", "must be >= 0".into());
        need(pos(self.grid.l_g), "/grid/l_g", "must be > 0".into());
        need(pos(self.grid.c_bus), "/grid/c_bus", "must be > 0".into());
        need(nonneg(self.grid.r_c_damp), "/grid/r_c_damp", "must be >= 0".into());
        need(pos(self.grid.frequency_hz), "/grid/frequency_hz", "must be > 0".into());

        need(nonneg(self.statcom.r_s), "/statcom/r_s", "must be >= 0".into());
        need(pos(self.statcom.l_s), "/statcom/l_s", "must be > 0".into());
        need(pos(self.statcom.c_dc), "/statcom/c_dc", "must be > 0".into());
        need(pos(self.statcom.r_loss), "/statcom/r_loss", "must be > 0".into());
        need(pos(self.statcom.v_dc_nom), "/statcom/v_dc_nom", "must be > 0".into());
        need(
            self.statcom.v_dc_floor.is_finite()
                && self.statcom.v_dc_floor > 0.0
                && self.statcom.v_dc_floor < self.statcom.v_dc_nom,
            "/statcom/v_dc_floor",
            "must be in (0, v_dc_nom)".into(),
        );
        if let Some(vref) = self.statcom.v_dc_ref {
            need(pos(vref), "/statcom/v_dc_ref", "must be > 0".into());
        }
        need(
            self.statcom.m_max.is_finite() && self.statcom.m_max > 0.0 && self.statcom.m_max <= 1.2,
            "/statcom/m_max",
            "must be in (0, 1.2]".into(),
        );

        need(self.motors.count >= 1, "/motors/count", "must be >= 1".into());
        need(nonneg(self.motors.r_stator), "/motors/r_stator", "must be >= 0".into());
        need(nonneg(self.motors.r_rotor), "/motors/r_rotor", "must be >= 0".into());
        need(nonneg(self.motors.l_ls), "/motors/l_ls", "must be >= 0".into());
        need(nonneg(self.motors.l_lr), "/motors/l_lr", "must be >= 0".into());
        need(pos(self.motors.l_m), "/motors/l_m", "must be > 0".into());
        need(pos(self.motors.pole_pairs), "/motors/pole_pairs", "must be > 0".into());
        need(pos(self.motors.inertia), "/motors/inertia", "must be > 0".into());
        need(nonneg(self.motors.torque_const), "/motors/torque_const", "must be >= 0".into());
        need(nonneg(self.motors.torque_quad), "/motors/torque_quad", "must be >= 0".into());
        need(
            self.motor_params().inductance_det() > 0.0,
            "/motors",
            "inductance matrix is singular (l_ls·l_lr + l_m·(l_ls + l_lr) must be > 0)".into(),
        );

        let c = &self.controller;
        for (path, g) in [("/controller/ac", &c.ac), ("/controller/dc", &c.dc), ("/controller/inner", &c.inner)] {
            need(nonneg(g.kp), &format!("{path}/kp"), "must be >= 0".into());
            need(nonneg(g.ki), &format!("{path}/ki"), "must be >= 0".into());
            need(pos(g.limit), &format!("{path}/limit"), "must be > 0".into());
        }
        need(pos(c.v_ref), "/controller/v_ref", "must be > 0".into());
        need(pos(c.deriv_tau), "/controller/deriv_tau", "must be > 0".into());
        need(nonneg(c.pll.kp), "/controller/pll/kp", "must be >= 0".into());
        need(nonneg(c.pll.ki), "/controller/pll/ki", "must be >= 0".into());

        let s = &self.solver;
        need(pos(s.dt), "/solver/dt", "must be > 0".into());
        need(pos(s.t_end), "/solver/t_end", "must be > 0".into());
        need(s.log_decimation >= 1, "/solver/log_decimation", "must be >= 1".into());
        if pos(s.dt) && pos(s.t_end) {
            let steps = s.t_end / s.dt;
            need(steps <= 1e8, "/solver", format!("{steps:.0} steps exceeds the 1e8 cap"));
        }

        // Events: ranges first, then overlap on the step grid actually run.
        for (idx, ev) in self.events.iter().enumerate() {
            let path = format!("/events/{idx}");
            need(
                ev.t_start.is_finite() && ev.t_start >= 0.0,
                &format!("{path}/t_start"),
                "must be >= 0".into(),
            );
            need(pos(ev.duration), &format!("{path}/duration"), "must be > 0".into());
            let max_mag = match ev.kind {
                EventKind::Sag => 1.0,
                EventKind::Fault => 1.0,
                EventKind::Swell => 0.5,
            };
            need(
                ev.magnitude.is_finite() && ev.magnitude > 0.0 && ev.magnitude <= max_mag,
                &format!("{path}/magnitude"),
                format!("must be in (0, {max_mag}]"),
            );
            need(
                !(pos(s.t_end) && ev.t_start.is_finite() && ev.t_start >= s.t_end),
                &format!("{path}/t_start"),
                "at or after t_end, event never runs".into(),
            );
        }
        drop(need);
        if problems.is_empty() && pos(s.dt) {
            // Snap to the integration grid: an event occupies whole steps, so
            // overlap (or a zero-step window) is decided there.
            let mut snapped: Vec<(usize, i64, i64)> = self
                .events
                .iter()
                .enumerate()
                .map(|(idx, ev)| {
                    let a = (ev.t_start / s.dt).round() as i64;
                    let b = (ev.t_end() / s.dt).round() as i64;
                    (idx, a, b)
                })
                .collect();
            for &(idx, a, b) in &snapped {
                if b <= a {
                    problems.push(format!("/events/{idx}: collapses to zero steps at dt = {}", s.dt));
                }
            }
            snapped.sort_by_key(|&(_, a, _)| a);
            for pair in snapped.windows(2) {
                let (i, _, end_i) = pair[0];
                let (j, start_j, _) = pair[1];
                if start_j < end_i {
                    problems.push(format!(
                        "/events/{j}: overlaps /events/{i} on the step grid at dt = {}",
                        s.dt
                    ));
                }
            }
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(SimError::invalid(problems))
        }
    }
}
