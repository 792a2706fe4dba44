//! Converter coupling branch and DC link of the shunt compensator, plus the
//! power bookkeeping used by the logs and the balance checks.
//!
//! Sign conventions, fixed once here and relied on everywhere: converter
//! current is positive flowing from the converter toward the bus, and the
//! complex reading of a `DqPair` (d + jq) makes capacitive, bus-voltage-raising
//! injection a negative q current.

use crate::frames::DqPair;

/// Electrical parameters of the converter coupling and DC side.
///
/// Values are normalized: with the default `omega`, `l_s` corresponds to a
/// 0.15 p.u. coupling reactance. `c_dc` is sized for a 40 ms stored-energy time
/// constant at nominal DC voltage against the 1.0 power base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatcomParams {
    /// Series resistance of the coupling branch.
    pub r_s: f64,
    /// Series inductance of the coupling branch (normalized henries).
    pub l_s: f64,
    /// Synchronous speed used in the cross-coupling terms (rad/s); equals the
    /// simulation frame speed.
    pub omega: f64,
    /// DC-link capacitance.
    pub c_dc: f64,
    /// Parallel loss resistance across the DC link.
    pub r_loss: f64,
    /// Nominal DC-link voltage.
    pub v_dc_nom: f64,
    /// Abort threshold: the run is declared collapsed if v_dc falls below this.
    pub v_dc_floor: f64,
}

impl Default for StatcomParams {
    fn default() -> Self {
        let v_dc_nom = 2.0;
        StatcomParams {
            r_s: 0.02,
            l_s: 0.15 / crate::OMEGA_NOM,
            omega: crate::OMEGA_NOM,
            // 1/2·C·v_dc_nom² = 40 ms · P_base with P_base = 1.0.
            c_dc: 0.08 / (v_dc_nom * v_dc_nom),
            r_loss: 100.0,
            v_dc_nom,
            v_dc_floor: 0.1 * v_dc_nom,
        }
    }
}

/// Converter branch current (toward the bus) and DC-link voltage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StatcomState {
    pub i: DqPair,
    pub v_dc: f64,
}

/// Active/reactive pair from the three-phase power formulas below.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerPair {
    pub p: f64,
    pub q: f64,
}

/// Branch current dynamics: with converter terminal voltage `v_conv` and bus
/// voltage `v_pcc`,
///
/// ```text
/// di_d/dt = (−r_s·i_d + ω·l_s·i_q + v_conv.d − v_pcc.d) / l_s
/// di_q/dt = (−r_s·i_q − ω·l_s·i_d + v_conv.q − v_pcc.q) / l_s
/// ```
pub fn current_derivatives(
    params: &StatcomParams,
    i: DqPair,
    v_conv: DqPair,
    v_pcc: DqPair,
) -> DqPair {
    let x = params.omega * params.l_s;
    DqPair {
        d: (-params.r_s * i.d + x * i.q + v_conv.d - v_pcc.d) / params.l_s,
        q: (-params.r_s * i.q - x * i.d + v_conv.q - v_pcc.q) / params.l_s,
    }
}

/// DC-link voltage dynamics. `p_conv` is the power leaving the DC side through
/// the (lossless, averaged) converter toward the AC terminals, so delivering
/// power discharges the capacitor; the parallel resistance models switching
/// and standby losses.
///
/// The caller is responsible for aborting once `v_dc` reaches the configured
/// floor — below it the 1/v_dc term no longer represents the physical device.
pub fn dc_link_derivative(params: &StatcomParams, v_dc: f64, p_conv: f64) -> f64 {
    (-p_conv / v_dc - v_dc / params.r_loss) / params.c_dc
}

/// Three-phase power at the converter terminals (current toward the bus):
/// p = 3/2·(v_d·i_d + v_q·i_q), q = 3/2·(v_d·i_q − v_q·i_d).
pub fn statcom_output_power(v_conv: DqPair, i: DqPair) -> PowerPair {
    PowerPair {
        p: 1.5 * v_conv.dot(i),
        q: 1.5 * v_conv.cross(i),
    }
}

/// Power at the bus end of the coupling branch, same formulas evaluated with
/// the bus voltage.
pub fn load_power(v_pcc: DqPair, i: DqPair) -> PowerPair {
    PowerPair {
        p: 1.5 * v_pcc.dot(i),
        q: 1.5 * v_pcc.cross(i),
    }
}

/// Power attributed to the coupling branch itself at current magnitude²
/// i_d² + i_q²: active 3/2·r_s·|i|², reactive 3/2·ω·l_s·|i|².
///
/// The reactive term is quoted positive by convention. In the branch balance
/// implied by the current dynamics the reactive drop carries the opposite
/// sign, which `power_balance_residual` accounts for — see the note there.
pub fn rl_power(params: &StatcomParams, i: DqPair) -> PowerPair {
    let i_sq = i.dot(i);
    PowerPair {
        p: 1.5 * params.r_s * i_sq,
        q: 1.5 * params.omega * params.l_s * i_sq,
    }
}

/// Steady-state balance residual across the coupling branch:
/// (p_conv − p_rl − p_bus, q_conv + q_rl − q_bus). Zero (to rounding) at any
/// equilibrium of `current_derivatives`.
///
/// The `+ q_rl` term is deliberate: taking the current dynamics as the ground
/// truth, the branch's reactive drop enters the balance as −3/2·ω·l_s·|i|²,
/// i.e. with sign opposite to the conventionally quoted `rl_power().q`. Tests
/// pin both facts so neither can drift silently.
pub fn power_balance_residual(
    params: &StatcomParams,
    v_conv: DqPair,
    v_pcc: DqPair,
    i: DqPair,
) -> (f64, f64) {
    let s = statcom_output_power(v_conv, i);
    let rl = rl_power(params, i);
    let l = load_power(v_pcc, i);
    (s.p - rl.p - l.p, s.q + rl.q - l.q)
}
