//! The three compensator control strategies and their shared building blocks.
//!
//! All three share the same pair of outer regulators — an AC loop holding the
//! bus voltage magnitude and a DC loop holding the DC-link voltage — which
//! produce a current reference in the PLL frame. They differ in how that
//! reference becomes a converter voltage command:
//!
//! * **double loop** — per-axis PI current regulators with the standard
//!   decoupling and bus-voltage feedforward (four PI blocks in total);
//! * **dov** — a "desired output voltage" law: the converter voltage that
//!   would hold the commanded current at equilibrium is applied open-loop
//!   (two PI blocks, no current feedback);
//! * **proposed** — the same law completed with an l_s·di*/dt term from a
//!   filtered derivative of the reference, so the command also supplies the
//!   inductor voltage needed *while the reference moves* (still two PIs).
//!
//! Sign conventions: converter current is positive toward the bus. Under the
//! transform in [`crate::frames`], injection that *raises* the bus voltage
//! through the mostly inductive grid branch is q-negative, and d-positive
//! current *discharges* the DC link into the bus. The outer loops therefore
//! act on (measurement − reference): with positive gains, a voltage sag drives
//! the q reference negative (capacitive) and a DC-link dip drives the d
//! reference negative (recharging), giving negative feedback on both loops.

use crate::frames::DqPair;
use crate::statcom::StatcomParams;
use serde::{Deserialize, Serialize};

/// PI regulator with output limiting and conditional anti-windup: the
/// integrator is frozen whenever the output is saturated and the error would
/// push it further out, and released as soon as the error reverses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiBlock {
    pub kp: f64,
    pub ki: f64,
    pub integrator: f64,
    pub out_min: f64,
    pub out_max: f64,
}

impl PiBlock {
    pub fn new(kp: f64, ki: f64, out_min: f64, out_max: f64) -> Self {
        PiBlock {
            kp,
            ki,
            integrator: 0.0,
            out_min,
            out_max,
        }
    }

    /// Sampled update: fold this step's integral increment into the output,
    /// clamp, and commit the increment only if it isn't winding up.
    pub fn step(&mut self, error: f64, dt: f64) -> f64 {
        let delta = self.ki * error * dt;
        let u = self.kp * error + self.integrator + delta;
        let out = u.clamp(self.out_min, self.out_max);
        let winding_up = (u > self.out_max && delta > 0.0) || (u < self.out_min && delta < 0.0);
        if !winding_up {
            self.integrator += delta;
        }
        out
    }

    /// Output at the current state without advancing the integrator — the
    /// algebraic part of the continuous-time formulation.
    pub fn output(&self, error: f64) -> f64 {
        (self.kp * error + self.integrator).clamp(self.out_min, self.out_max)
    }

    /// d(integrator)/dt in the continuous-time formulation, with the same
    /// conditional anti-windup gate as `step`.
    pub fn integrator_derivative(&self, error: f64) -> f64 {
        let u = self.kp * error + self.integrator;
        let slope = self.ki * error;
        if (u >= self.out_max && slope > 0.0) || (u <= self.out_min && slope < 0.0) {
            0.0
        } else {
            slope
        }
    }
}

/// Measurements and references handed to a control strategy each update, all
/// in the PLL frame (so the bus voltage is on the d axis to within PLL error).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerInputs {
    /// Bus voltage magnitude; also used as the d-axis bus voltage feedforward.
    pub v_pcc_mag: f64,
    pub v_dc: f64,
    /// Converter current in the PLL frame (toward the bus).
    pub i_meas: DqPair,
    pub v_ref: f64,
    pub v_dc_ref: f64,
}

/// Shared outer regulators: AC loop → q-axis reference, DC loop → d-axis
/// reference. Errors are (measurement − reference); see the module docs for
/// why that orientation, with positive gains, closes both loops negatively.
pub fn outer_loops_step(
    ac: &mut PiBlock,
    dc: &mut PiBlock,
    inputs: &ControllerInputs,
    dt: f64,
) -> DqPair {
    let i_q = ac.step(inputs.v_pcc_mag - inputs.v_ref, dt);
    let i_d = dc.step(inputs.v_dc - inputs.v_dc_ref, dt);
    DqPair::new(i_d, i_q)
}

/// Converter voltage that holds `i_ref` at equilibrium of the coupling-branch
/// dynamics with the bus at `v_dl` on the d axis:
///
/// ```text
/// v_d = r_s·i_d* − ω·l_s·i_q* + v_dl
/// v_q = r_s·i_q* + ω·l_s·i_d*
/// ```
pub fn dov_feedforward(params: &StatcomParams, i_ref: DqPair, v_dl: f64) -> DqPair {
    let x = params.omega * params.l_s;
    DqPair {
        d: params.r_s * i_ref.d - x * i_ref.q + v_dl,
        q: params.r_s * i_ref.q + x * i_ref.d,
    }
}

/// First-order-filtered derivative of the current reference.
///
/// `prev` is the reference memory — the previous sample in sampled operation,
/// or the lag state of the equivalent washout filter s/(1 + τ_f·s) when the
/// controller is integrated continuously. `filtered` holds the latest
/// derivative estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivEstimator {
    pub prev: DqPair,
    pub filtered: DqPair,
    pub tau_f: f64,
}

impl DerivEstimator {
    pub fn new(tau_f: f64) -> Self {
        DerivEstimator {
            prev: DqPair::ZERO,
            filtered: DqPair::ZERO,
            tau_f,
        }
    }

    /// Start from a settled reference so the first derivative estimate is zero.
    pub fn settled_at(i_ref: DqPair, tau_f: f64) -> Self {
        DerivEstimator {
            prev: i_ref,
            filtered: DqPair::ZERO,
            tau_f,
        }
    }

    /// Sampled update: backward difference smoothed by a one-pole filter with
    /// time constant `tau_f`.
    pub fn step(&mut self, i_ref: DqPair, dt: f64) -> DqPair {
        let raw = (i_ref - self.prev) * (1.0 / dt);
        let alpha = dt / (self.tau_f + dt);
        self.filtered = self.filtered + (raw - self.filtered) * alpha;
        self.prev = i_ref;
        self.filtered
    }

    /// Continuous-time reading of the same filter: the derivative estimate is
    /// (i_ref − prev)/τ_f, which is also d(prev)/dt.
    pub fn washout(&self, i_ref: DqPair) -> DqPair {
        (i_ref - self.prev) * (1.0 / self.tau_f)
    }
}

/// Sampled update of the derivative-completed voltage law. With a zero
/// derivative estimate this reduces exactly to `dov_feedforward`.
pub fn proposed_step(
    params: &StatcomParams,
    est: &mut DerivEstimator,
    i_ref: DqPair,
    v_dl: f64,
    dt: f64,
) -> DqPair {
    let didt = est.step(i_ref, dt);
    dov_feedforward(params, i_ref, v_dl) + didt * params.l_s
}

/// Sampled update of the per-axis current regulators with decoupling and bus
/// feedforward. The decoupling uses measured currents, so the regulated plant
/// seen by each PI is a plain first-order lag.
pub fn double_loop_step(
    params: &StatcomParams,
    id: &mut PiBlock,
    iq: &mut PiBlock,
    i_ref: DqPair,
    i_meas: DqPair,
    v_dl: f64,
    dt: f64,
) -> DqPair {
    let x = params.omega * params.l_s;
    let u_d = id.step(i_ref.d - i_meas.d, dt);
    let u_q = iq.step(i_ref.q - i_meas.q, dt);
    DqPair {
        d: u_d - x * i_meas.q + v_dl,
        q: u_q + x * i_meas.d,
    }
}

/// Scale a voltage command radially onto the converter's reachable disc,
/// radius m_max·v_dc/2. Direction is preserved; commands already inside pass
/// through unchanged.
pub fn saturate_command(cmd: DqPair, v_dc: f64, m_max: f64) -> DqPair {
    let limit = m_max * v_dc / 2.0;
    if limit <= 0.0 {
        return DqPair::ZERO;
    }
    let mag = cmd.magnitude();
    if mag <= limit {
        cmd
    } else {
        cmd * (limit / mag)
    }
}

/// Which control strategy a run uses. The serialized names are part of the
/// scenario-file and CLI contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    DoubleLoop,
    Dov,
    Proposed,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] =
        [ControllerKind::DoubleLoop, ControllerKind::Dov, ControllerKind::Proposed];

    pub fn label(self) -> &'static str {
        match self {
            ControllerKind::DoubleLoop => "double_loop",
            ControllerKind::Dov => "dov",
            ControllerKind::Proposed => "proposed",
        }
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Complete regulator state for one strategy. The variant fixes the PI-block
/// census: four for the double loop, two for the voltage-law strategies.
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerState {
    DoubleLoop {
        ac: PiBlock,
        dc: PiBlock,
        id: PiBlock,
        iq: PiBlock,
    },
    Dov {
        ac: PiBlock,
        dc: PiBlock,
    },
    Proposed {
        ac: PiBlock,
        dc: PiBlock,
        est: DerivEstimator,
    },
}

/// Result of evaluating a strategy at one instant in the continuous-time
/// formulation: the (unsaturated) voltage command, the reference it was built
/// from, and the derivatives of the strategy's integrable states in the same
/// order as `write_states`.
#[derive(Debug, Clone, Copy)]
pub struct ControllerEval {
    pub command: DqPair,
    pub i_ref: DqPair,
    pub derivs: [f64; 4],
}

impl ControllerState {
    pub fn kind(&self) -> ControllerKind {
        match self {
            ControllerState::DoubleLoop { .. } => ControllerKind::DoubleLoop,
            ControllerState::Dov { .. } => ControllerKind::Dov,
            ControllerState::Proposed { .. } => ControllerKind::Proposed,
        }
    }

    /// Number of PI regulators this strategy carries.
    pub fn pi_count(&self) -> usize {
        match self {
            ControllerState::DoubleLoop { .. } => 4,
            ControllerState::Dov { .. } => 2,
            ControllerState::Proposed { .. } => 2,
        }
    }

    /// Number of integrable states (PI integrators plus, for the derivative
    /// estimator, its reference-memory pair).
    pub fn state_len(&self) -> usize {
        match self {
            ControllerState::DoubleLoop { .. } => 4,
            ControllerState::Dov { .. } => 2,
            ControllerState::Proposed { .. } => 4,
        }
    }

    pub fn write_states(&self, out: &mut [f64]) {
        match self {
            ControllerState::DoubleLoop { ac, dc, id, iq } => {
                out[0] = ac.integrator;
                out[1] = dc.integrator;
                out[2] = id.integrator;
                out[3] = iq.integrator;
            }
            ControllerState::Dov { ac, dc } => {
                out[0] = ac.integrator;
                out[1] = dc.integrator;
            }
            ControllerState::Proposed { ac, dc, est } => {
                out[0] = ac.integrator;
                out[1] = dc.integrator;
                out[2] = est.prev.d;
                out[3] = est.prev.q;
            }
        }
    }

    pub fn read_states(&mut self, src: &[f64]) {
        match self {
            ControllerState::DoubleLoop { ac, dc, id, iq } => {
                ac.integrator = src[0];
                dc.integrator = src[1];
                id.integrator = src[2];
                iq.integrator = src[3];
            }
            ControllerState::Dov { ac, dc } => {
                ac.integrator = src[0];
                dc.integrator = src[1];
            }
            ControllerState::Proposed { ac, dc, est } => {
                ac.integrator = src[0];
                dc.integrator = src[1];
                est.prev = DqPair::new(src[2], src[3]);
            }
        }
    }

    /// Sampled (discrete) update: advance all regulator states by one sample
    /// and return the unsaturated voltage command in the PLL frame.
    pub fn step_sampled(
        &mut self,
        params: &StatcomParams,
        inputs: &ControllerInputs,
        dt: f64,
    ) -> DqPair {
        match self {
            ControllerState::DoubleLoop { ac, dc, id, iq } => {
                let i_ref = outer_loops_step(ac, dc, inputs, dt);
                double_loop_step(params, id, iq, i_ref, inputs.i_meas, inputs.v_pcc_mag, dt)
            }
            ControllerState::Dov { ac, dc } => {
                let i_ref = outer_loops_step(ac, dc, inputs, dt);
                dov_feedforward(params, i_ref, inputs.v_pcc_mag)
            }
            ControllerState::Proposed { ac, dc, est } => {
                let i_ref = outer_loops_step(ac, dc, inputs, dt);
                proposed_step(params, est, i_ref, inputs.v_pcc_mag, dt)
            }
        }
    }

    /// Continuous-time evaluation at the current state: no mutation, returns
    /// the command plus state derivatives for the integrator.
    pub fn eval_continuous(&self, params: &StatcomParams, inputs: &ControllerInputs) -> ControllerEval {
        let mut derivs = [0.0; 4];
        match self {
            ControllerState::DoubleLoop { ac, dc, id, iq } => {
                let e_ac = inputs.v_pcc_mag - inputs.v_ref;
                let e_dc = inputs.v_dc - inputs.v_dc_ref;
                let i_ref = DqPair::new(dc.output(e_dc), ac.output(e_ac));
                derivs[0] = ac.integrator_derivative(e_ac);
                derivs[1] = dc.integrator_derivative(e_dc);
                let e_d = i_ref.d - inputs.i_meas.d;
                let e_q = i_ref.q - inputs.i_meas.q;
                derivs[2] = id.integrator_derivative(e_d);
                derivs[3] = iq.integrator_derivative(e_q);
                let x = params.omega * params.l_s;
                let command = DqPair {
                    d: id.output(e_d) - x * inputs.i_meas.q + inputs.v_pcc_mag,
                    q: iq.output(e_q) + x * inputs.i_meas.d,
                };
                ControllerEval { command, i_ref, derivs }
            }
            ControllerState::Dov { ac, dc } => {
                let e_ac = inputs.v_pcc_mag - inputs.v_ref;
                let e_dc = inputs.v_dc - inputs.v_dc_ref;
                let i_ref = DqPair::new(dc.output(e_dc), ac.output(e_ac));
                derivs[0] = ac.integrator_derivative(e_ac);
                derivs[1] = dc.integrator_derivative(e_dc);
                let command = dov_feedforward(params, i_ref, inputs.v_pcc_mag);
                ControllerEval { command, i_ref, derivs }
            }
            ControllerState::Proposed { ac, dc, est } => {
                let e_ac = inputs.v_pcc_mag - inputs.v_ref;
                let e_dc = inputs.v_dc - inputs.v_dc_ref;
                let i_ref = DqPair::new(dc.output(e_dc), ac.output(e_ac));
                derivs[0] = ac.integrator_derivative(e_ac);
                derivs[1] = dc.integrator_derivative(e_dc);
                let didt = est.washout(i_ref);
                derivs[2] = didt.d;
                derivs[3] = didt.q;
                let command = dov_feedforward(params, i_ref, inputs.v_pcc_mag) + didt * params.l_s;
                ControllerEval { command, i_ref, derivs }
            }
        }
    }
}
