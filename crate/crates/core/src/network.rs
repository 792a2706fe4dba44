//! Grid side: stiff source behind an impedance, the shared bus, and the
//! source-magnitude disturbance schedule.
//!
//! The bus is a capacitor with a small series damping resistor. The capacitor
//! keeps the bus voltage a state (so every shunt device sees the same
//! well-defined voltage without an algebraic loop), and the series resistor
//! damps the parasitic L–C mode that capacitor introduces, keeping it well
//! inside the integrator's stable region at the nominal step size.

use crate::frames::DqPair;
use serde::{Deserialize, Serialize};

/// Source and coupling constants. `omega` is the frame/source frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    /// Source magnitude with no disturbance active.
    pub v_source_nom: f64,
    pub r_g: f64,
    pub l_g: f64,
    /// Bus capacitance.
    pub c_bus: f64,
    /// Damping resistor in series with the bus capacitor.
    pub r_c_damp: f64,
    pub omega: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        let omega = crate::OMEGA_NOM;
        GridParams {
            v_source_nom: 1.0,
            r_g: 0.005,
            l_g: 0.10 / omega,
            c_bus: 1.5e-5,
            r_c_damp: 2.0,
            omega,
        }
    }
}

/// What a disturbance does to the source magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Magnitude drops by the event's magnitude fraction.
    Sag,
    /// Magnitude rises by the event's magnitude fraction.
    Swell,
    /// Deep sag; same arithmetic as `Sag`, kept distinct for reporting and
    /// because its magnitude range extends to a dead source.
    Fault,
}

/// One scheduled source-magnitude disturbance, active on the half-open
/// interval `(t_start, t_start + duration]`: a change takes effect strictly
/// after its scheduled instant. With the boundary excluded on the left, an
/// integrator stage or log sample landing exactly on it still reads the
/// regime of the step it closes, so logged samples at the boundary instant
/// are independent of the step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceEvent {
    pub kind: EventKind,
    pub t_start: f64,
    pub duration: f64,
    /// Fractional change: sag/fault multiply the source by (1 − magnitude),
    /// swell by (1 + magnitude).
    pub magnitude: f64,
}

impl DisturbanceEvent {
    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }

    pub fn active_at(&self, t: f64) -> bool {
        t > self.t_start && t <= self.t_end()
    }

    pub fn factor(&self) -> f64 {
        match self.kind {
            EventKind::Sag | EventKind::Fault => 1.0 - self.magnitude,
            EventKind::Swell => 1.0 + self.magnitude,
        }
    }
}

/// Source magnitude at time `t` under the event schedule. A pure function of
/// `t`, so the integrator can evaluate it at stage times without bookkeeping.
pub fn source_magnitude(params: &GridParams, events: &[DisturbanceEvent], t: f64) -> f64 {
    let mut mag = params.v_source_nom;
    for ev in events {
        if ev.active_at(t) {
            mag *= ev.factor();
        }
    }
    mag
}

/// Grid-side states: current through the source impedance and the bus
/// capacitor voltage (behind its damping resistor).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkState {
    pub i_grid: DqPair,
    pub v_cap: DqPair,
}

impl NetworkState {
    pub const STATE_LEN: usize = 4;

    pub fn at_rest() -> Self {
        NetworkState {
            i_grid: DqPair::ZERO,
            v_cap: DqPair::ZERO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkDerivs {
    pub i_grid: DqPair,
    pub v_cap: DqPair,
}

/// Bus voltage given the net shunt injection `i_shunt_net` (compensator
/// current minus load current, positive toward the bus). The capacitor branch
/// carries everything that flows in: `i_c = i_grid + i_shunt_net`.
pub fn pcc_voltage(params: &GridParams, state: &NetworkState, i_shunt_net: DqPair) -> DqPair {
    let i_c = state.i_grid + i_shunt_net;
    state.v_cap + i_c * params.r_c_damp
}

/// Grid state derivatives and the bus voltage they were computed with.
pub fn network_derivatives(
    params: &GridParams,
    state: &NetworkState,
    v_source: DqPair,
    i_shunt_net: DqPair,
) -> (NetworkDerivs, DqPair) {
    let i_c = state.i_grid + i_shunt_net;
    let v_pcc = state.v_cap + i_c * params.r_c_damp;
    let w = params.omega;
    let i_grid_dot = DqPair {
        d: (v_source.d - params.r_g * state.i_grid.d - v_pcc.d) / params.l_g
            + w * state.i_grid.q,
        q: (v_source.q - params.r_g * state.i_grid.q - v_pcc.q) / params.l_g
            - w * state.i_grid.d,
    };
    let v_cap_dot = DqPair {
        d: i_c.d / params.c_bus + w * state.v_cap.q,
        q: i_c.q / params.c_bus - w * state.v_cap.d,
    };
    (
        NetworkDerivs {
            i_grid: i_grid_dot,
            v_cap: v_cap_dot,
        },
        v_pcc,
    )
}
