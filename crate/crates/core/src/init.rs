//! Initial conditions.
//!
//! The preferred start is the solved steady state of the whole system at the
//! setpoints: bus magnitude at v_ref, DC link at its reference, motors at the
//! slip that balances their load torque, and every regulator integrator
//! preloaded so the commanded converter voltage is already the equilibrium
//! one. The solve is a damped fixed point over (bus voltage phasor, motor
//! slip, converter current): each pass updates the slip from the torque
//! balance, the active current from the DC-loss balance, the reactive current
//! from a Newton step on the bus magnitude, and the bus phasor from the exact
//! grid equilibrium. The result is accepted only if the full right-hand side
//! evaluates to (numerically) zero.
//!
//! If the solve fails — an uncarryable load, a saturated equilibrium, a
//! hopeless DC loss — the run falls back to a flat start with a short source
//! ramp, which is slower to settle but always defined.

use crate::controllers::ControllerState;
use crate::frames::{DqPair, PllState};
use crate::machine::{MechLoad, MotorParams, MotorState};
use crate::network::{source_magnitude, GridParams, NetworkState};
use crate::sim::{Model, SystemState};
use crate::statcom::StatcomState;

fn cdiv(num: DqPair, den: DqPair) -> DqPair {
    let m2 = den.d * den.d + den.q * den.q;
    DqPair::new(
        (num.d * den.d + num.q * den.q) / m2,
        (num.q * den.d - num.d * den.q) / m2,
    )
}

/// Stator and rotor current phasors of one machine at a given slip and
/// terminal voltage phasor (complex values carried as DqPair: d = Re, q = Im).
fn member_phasors(motor: &MotorParams, w: f64, slip: f64, v: DqPair) -> (DqPair, DqPair) {
    let z_s = DqPair::new(motor.r_stator, w * motor.l_ls);
    let z_m = DqPair::new(0.0, w * motor.l_m);
    let z_r = DqPair::new(motor.r_rotor / slip, w * motor.l_lr);
    let z_par = cdiv(z_m.complex_mul(z_r), z_m + z_r);
    let z_tot = z_s + z_par;
    let i_s = cdiv(v, z_tot);
    let v_gap = v - i_s.complex_mul(z_s);
    let i2 = cdiv(v_gap, z_r);
    // The flux-model rotor current is the negative of the rotor-branch phasor.
    (i_s, -i2)
}

/// Electromagnetic torque of one machine at a slip, from the air-gap power.
fn member_torque(motor: &MotorParams, w: f64, slip: f64, v_mag: f64) -> f64 {
    let (_, i_r) = member_phasors(motor, w, slip, DqPair::new(v_mag, 0.0));
    let i2_sq = i_r.d * i_r.d + i_r.q * i_r.q;
    1.5 * i2_sq * (motor.r_rotor / slip) * motor.pole_pairs / w
}

/// Slip that balances electromagnetic and load torque at this voltage, if one
/// exists in the normal operating range.
fn solve_slip(motor: &MotorParams, load: &MechLoad, w: f64, v_mag: f64) -> Option<f64> {
    let f = |s: f64| member_torque(motor, w, s, v_mag) - load.torque((1.0 - s) * w);
    let (mut lo, mut hi) = (1e-6, 0.45);
    if f(lo) > 0.0 {
        // Load is below the torque at vanishing slip: effectively unloaded.
        return Some(lo);
    }
    if f(hi) < 0.0 {
        // Cannot carry the load anywhere in the stable slip range.
        return None;
    }
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Exact steady state of the grid branch and bus for a fixed shunt injection.
fn grid_equilibrium(grid: &GridParams, v_src: DqPair, i_shunt: DqPair) -> (NetworkState, DqPair) {
    let w = grid.omega;
    let z_series = DqPair::new(grid.r_g, w * grid.l_g);
    let jwc = DqPair::new(0.0, w * grid.c_bus);
    let den = DqPair::new(1.0, 0.0)
        + jwc.complex_mul(DqPair::new(grid.r_g + grid.r_c_damp, w * grid.l_g));
    let v_cap = cdiv(v_src + z_series.complex_mul(i_shunt), den);
    let i_grid = jwc.complex_mul(v_cap) - i_shunt;
    let v_pcc = v_cap + (i_grid + i_shunt) * grid.r_c_damp;
    (NetworkState { i_grid, v_cap }, v_pcc)
}

/// Preload regulator integrators so the commanded voltage at zero error is
/// the equilibrium command. Fails if any preload exceeds its block's limit —
/// the equilibrium would sit in saturation and is not a valid settled start.
fn preload(ctrl: &mut ControllerState, i_ref: DqPair, r_s: f64) -> bool {
    let fits = |val: f64, max: f64| val.abs() <= max;
    match ctrl {
        ControllerState::DoubleLoop { ac, dc, id, iq } => {
            ac.integrator = i_ref.q;
            dc.integrator = i_ref.d;
            id.integrator = r_s * i_ref.d;
            iq.integrator = r_s * i_ref.q;
            fits(i_ref.q, ac.out_max)
                && fits(i_ref.d, dc.out_max)
                && fits(id.integrator, id.out_max)
                && fits(iq.integrator, iq.out_max)
        }
        ControllerState::Dov { ac, dc } => {
            ac.integrator = i_ref.q;
            dc.integrator = i_ref.d;
            fits(i_ref.q, ac.out_max) && fits(i_ref.d, dc.out_max)
        }
        ControllerState::Proposed { ac, dc, est } => {
            ac.integrator = i_ref.q;
            dc.integrator = i_ref.d;
            est.prev = i_ref;
            est.filtered = DqPair::ZERO;
            fits(i_ref.q, ac.out_max) && fits(i_ref.d, dc.out_max)
        }
    }
}

/// Solve the settled operating point at t = 0. `None` means no acceptable
/// equilibrium was found and the caller should fall back to `flat_start`.
pub(crate) fn steady_state(model: &Model) -> Option<SystemState> {
    let w = model.omega();
    let v_src = DqPair::new(source_magnitude(&model.grid, &model.events, 0.0), 0.0);
    let x_g = w * model.grid.l_g;
    let p_dc = model.v_dc_ref * model.v_dc_ref / model.statcom.r_loss;
    let n = model.n_motors as f64;

    let mut v_pcc = DqPair::new(model.v_ref, 0.0);
    let mut i_d = 0.0f64;
    let mut i_q = 0.0f64;
    let mut slip = 0.0f64;
    let mut converged = false;
    for _ in 0..400 {
        let vm = v_pcc.magnitude();
        if !vm.is_finite() || !(1e-3..10.0).contains(&vm) {
            return None;
        }
        slip = solve_slip(&model.motor, &model.load, w, vm)?;
        let (i_s_m, _) = member_phasors(&model.motor, w, slip, v_pcc);
        let i_load = i_s_m * n;
        for _ in 0..4 {
            i_d = -(p_dc + 1.5 * model.statcom.r_s * (i_d * i_d + i_q * i_q)) / (1.5 * vm);
        }
        let phi = v_pcc.q.atan2(v_pcc.d);
        let i_stat = DqPair::new(i_d, i_q).rotated(phi);
        let (_, v_new) = grid_equilibrium(&model.grid, v_src, i_stat - i_load);
        let err = v_new.magnitude() - model.v_ref;
        let dv = (v_new - v_pcc).magnitude().max(err.abs());
        v_pcc = v_new;
        i_q += err / x_g;
        if dv < 1e-11 {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }

    // One consistent final pass at the converged bus phasor.
    let vm = v_pcc.magnitude();
    let phi = v_pcc.q.atan2(v_pcc.d);
    let (i_s_m, i_r_m) = member_phasors(&model.motor, w, slip, v_pcc);
    let i_ref = DqPair::new(i_d, i_q);
    let i_stat = i_ref.rotated(phi);
    let (network, _) = grid_equilibrium(&model.grid, v_src, i_stat - i_s_m * n);

    let lambda_s = i_s_m * model.motor.l_ss() + i_r_m * model.motor.l_m;
    let lambda_r = i_s_m * model.motor.l_m + i_r_m * model.motor.l_rr();
    let motors = vec![
        MotorState { lambda_s, lambda_r, omega_r: (1.0 - slip) * w };
        model.n_motors
    ];

    let mut ctrl = model.ctrl_template.clone();
    if !preload(&mut ctrl, i_ref, model.statcom.r_s) {
        return None;
    }
    let pll = PllState {
        theta: phi,
        omega: w,
        integrator: 0.0,
        freq_clamped: false,
    };
    let state = SystemState {
        network,
        statcom: StatcomState { i: i_stat, v_dc: model.v_dc_ref },
        motors,
        pll,
        ctrl,
    };
    // Trust nothing: the state must actually zero the right-hand side.
    let _ = vm;
    if model.residual_at_start(&state) < 1e-3 {
        Some(state)
    } else {
        None
    }
}

/// All-zero start (DC link precharged, motors at standstill); pair with a
/// source ramp so the flat start doesn't slam the full source onto dead
/// machines in one step.
pub(crate) fn flat_start(model: &Model) -> SystemState {
    SystemState {
        network: NetworkState::at_rest(),
        statcom: StatcomState {
            i: DqPair::ZERO,
            v_dc: model.statcom.v_dc_nom,
        },
        motors: vec![MotorState::at_rest(); model.n_motors],
        pll: PllState::at_angle(0.0, &model.pll),
        ctrl: model.ctrl_template.clone(),
    }
}
