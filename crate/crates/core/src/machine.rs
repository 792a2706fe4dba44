//! Induction-motor group model in the synchronous frame.
//!
//! Each machine is a fourth-order flux-linkage model (stator and rotor flux
//! pairs) plus a rotor-speed state. Fluxes are the states; currents are
//! recovered algebraically through the inverse inductance matrix, which keeps
//! the electrical equations linear in the states and the field-energy
//! bookkeeping exact.
//!
//! A group of `n` identical machines on one bus is represented by scaling a
//! single machine's impedances up by `n` (and its inertia and load torque down
//! by `n`): the scaled machines draw `1/n` of the current each and their sum
//! reproduces the original machine exactly, so group size is a modelling
//! choice, not an approximation.

use crate::frames::DqPair;

/// Electrical and mechanical constants of one machine. Speeds are electrical
/// rad/s throughout; `pole_pairs` converts to mechanical only where torque
/// meets inertia.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorParams {
    pub r_stator: f64,
    pub r_rotor: f64,
    /// Stator leakage inductance.
    pub l_ls: f64,
    /// Rotor leakage inductance.
    pub l_lr: f64,
    /// Magnetizing inductance.
    pub l_m: f64,
    pub pole_pairs: f64,
    /// Rotor inertia referred to the shaft.
    pub inertia: f64,
}

impl MotorParams {
    pub fn l_ss(&self) -> f64 {
        self.l_ls + self.l_m
    }

    pub fn l_rr(&self) -> f64 {
        self.l_lr + self.l_m
    }

    /// Determinant of the inductance matrix; must stay positive for the
    /// flux→current inversion to exist.
    pub fn inductance_det(&self) -> f64 {
        self.l_ss() * self.l_rr() - self.l_m * self.l_m
    }

    /// Parameters of one member of an `n`-machine group with the same total
    /// draw as `self`: impedances up by `n`, inertia down by `n`.
    pub fn parallel_member(&self, n: f64) -> MotorParams {
        MotorParams {
            r_stator: self.r_stator * n,
            r_rotor: self.r_rotor * n,
            l_ls: self.l_ls * n,
            l_lr: self.l_lr * n,
            l_m: self.l_m * n,
            pole_pairs: self.pole_pairs,
            inertia: self.inertia / n,
        }
    }
}

impl Default for MotorParams {
    fn default() -> Self {
        let omega = crate::OMEGA_NOM;
        MotorParams {
            r_stator: 0.02,
            r_rotor: 0.03,
            l_ls: 0.08 / omega,
            l_lr: 0.08 / omega,
            l_m: 2.5 / omega,
            pole_pairs: 2.0,
            inertia: 1.3e-5,
        }
    }
}

/// Shaft load torque: constant part plus a fan-law part quadratic in speed.
/// The quadratic coefficient is defined against electrical rotor speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechLoad {
    pub torque_const: f64,
    pub torque_quad: f64,
}

impl MechLoad {
    pub fn torque(&self, omega_r: f64) -> f64 {
        self.torque_const + self.torque_quad * omega_r * omega_r.abs()
    }

    /// Load of one member of an `n`-machine group (each carries `1/n`).
    pub fn parallel_member(&self, n: f64) -> MechLoad {
        MechLoad {
            torque_const: self.torque_const / n,
            torque_quad: self.torque_quad / n,
        }
    }
}

impl Default for MechLoad {
    fn default() -> Self {
        MechLoad {
            torque_const: 0.0,
            torque_quad: 3.52e-8,
        }
    }
}

/// One machine's states: stator flux, rotor flux, electrical rotor speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorState {
    pub lambda_s: DqPair,
    pub lambda_r: DqPair,
    pub omega_r: f64,
}

impl MotorState {
    pub const STATE_LEN: usize = 5;

    pub fn at_rest() -> Self {
        MotorState {
            lambda_s: DqPair::ZERO,
            lambda_r: DqPair::ZERO,
            omega_r: 0.0,
        }
    }
}

/// Time derivatives of one machine's states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorDerivs {
    pub lambda_s: DqPair,
    pub lambda_r: DqPair,
    pub omega_r: f64,
}

/// Recover (stator, rotor) currents from the fluxes.
pub fn motor_currents(params: &MotorParams, lambda_s: DqPair, lambda_r: DqPair) -> (DqPair, DqPair) {
    let det = params.inductance_det();
    let i_s = (lambda_s * params.l_rr() - lambda_r * params.l_m) * (1.0 / det);
    let i_r = (lambda_r * params.l_ss() - lambda_s * params.l_m) * (1.0 / det);
    (i_s, i_r)
}

/// Electromagnetic torque from stator flux and current.
pub fn electromagnetic_torque(params: &MotorParams, lambda_s: DqPair, i_s: DqPair) -> f64 {
    1.5 * params.pole_pairs * lambda_s.cross(i_s)
}

/// State derivatives of one machine fed by `v_stator` in a frame rotating at
/// `omega_frame` (electrical rad/s).
pub fn motor_derivatives(
    params: &MotorParams,
    load: &MechLoad,
    state: &MotorState,
    v_stator: DqPair,
    omega_frame: f64,
) -> MotorDerivs {
    let (i_s, i_r) = motor_currents(params, state.lambda_s, state.lambda_r);
    let slip_omega = omega_frame - state.omega_r;
    let lambda_s_dot = DqPair {
        d: v_stator.d - params.r_stator * i_s.d + omega_frame * state.lambda_s.q,
        q: v_stator.q - params.r_stator * i_s.q - omega_frame * state.lambda_s.d,
    };
    let lambda_r_dot = DqPair {
        d: -params.r_rotor * i_r.d + slip_omega * state.lambda_r.q,
        q: -params.r_rotor * i_r.q - slip_omega * state.lambda_r.d,
    };
    let t_e = electromagnetic_torque(params, state.lambda_s, i_s);
    let omega_r_dot = params.pole_pairs * (t_e - load.torque(state.omega_r)) / params.inertia;
    MotorDerivs {
        lambda_s: lambda_s_dot,
        lambda_r: lambda_r_dot,
        omega_r: omega_r_dot,
    }
}

/// Instantaneous power bookkeeping for one machine, all terms in the same
/// base as the electrical quantities.
#[derive(Debug, Clone, Copy)]
pub struct MotorPower {
    /// Electrical power into the stator terminals.
    pub input: f64,
    /// Total copper loss, stator plus rotor.
    pub copper: f64,
    /// Mechanical power delivered by the air gap to the shaft.
    pub shaft: f64,
    /// Rate of change of stored field energy.
    pub field_rate: f64,
}

/// Evaluate the power balance at a state. The identity
/// `input − copper − shaft == field_rate` holds exactly (to rounding) for
/// every state and input — it is the energy content of the model equations.
pub fn motor_power(
    params: &MotorParams,
    load: &MechLoad,
    state: &MotorState,
    v_stator: DqPair,
    omega_frame: f64,
) -> MotorPower {
    let (i_s, i_r) = motor_currents(params, state.lambda_s, state.lambda_r);
    let d = motor_derivatives(params, load, state, v_stator, omega_frame);
    let (di_s, di_r) = motor_currents(params, d.lambda_s, d.lambda_r);
    let input = 1.5 * v_stator.dot(i_s);
    let copper = 1.5
        * (params.r_stator * i_s.dot(i_s) + params.r_rotor * i_r.dot(i_r));
    let t_e = electromagnetic_torque(params, state.lambda_s, i_s);
    let shaft = t_e * state.omega_r / params.pole_pairs;
    // W = (3/2)·½(λ_s·i_s + λ_r·i_r); with constant inductances the gradient
    // in flux is the current, and the flux→current map is symmetric, so
    // dW/dt = (3/4)(i·dλ + λ·di) with both products equal.
    let field_rate = 0.75
        * (i_s.dot(d.lambda_s) + i_r.dot(d.lambda_r)
            + state.lambda_s.dot(di_s) + state.lambda_r.dot(di_r));
    MotorPower {
        input,
        copper,
        shaft,
        field_rate,
    }
}
