//! Shared fixtures for the acceptance suite: the shipped benchmark scenarios
//! (run once, reused by several criteria) and an independent per-phase
//! phasor equivalent-circuit solution of the induction machine.

use statcom_sim::frames::DqPair;
use statcom_sim::machine::{motor_derivatives, MechLoad, MotorDerivs, MotorParams, MotorState};
use statcom_sim::metrics::{event_report, EventMetrics, DEFAULT_BAND};
use statcom_sim::scenario::Scenario;
use statcom_sim::sim::{compare_controllers, Comparison, RunResult};
use std::path::PathBuf;
use std::sync::OnceLock;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

pub fn load_scenario(name: &str) -> Scenario {
    Scenario::from_path(&scenario_path(name)).expect("shipped scenario must load")
}

/// The sag + swell benchmark, all three controllers, computed once.
pub fn benchmark() -> &'static Comparison {
    static CELL: OnceLock<Comparison> = OnceLock::new();
    CELL.get_or_init(|| {
        compare_controllers(&load_scenario("sag_swell.json")).expect("benchmark comparison")
    })
}

/// The deep-fault scenario, all three controllers, computed once.
pub fn fault() -> &'static Comparison {
    static CELL: OnceLock<Comparison> = OnceLock::new();
    CELL.get_or_init(|| {
        compare_controllers(&load_scenario("deep_fault.json")).expect("fault comparison")
    })
}

/// One pass/fail line per criterion, printed in a stable format.
pub fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// Per-event metrics of one finished run, at the shipped settling band.
pub fn report_for(run: &RunResult, sc: &Scenario) -> Vec<EventMetrics> {
    let log = &run.log;
    let col = |name: &str| log.column(name).expect("logged column");
    event_report(
        col("t"),
        col("v_pcc_mag"),
        col("v_dc"),
        col("motor_speed"),
        col("motor_torque"),
        &sc.sorted_events(),
        sc.solver.t_end,
        sc.controller.v_ref,
        sc.v_dc_ref(),
        DEFAULT_BAND,
    )
}

// ---------------------------------------------------------------------------
// Independent phasor oracle for the induction machine.
//
// Complex arithmetic on (re, im) tuples, deliberately not reusing the
// simulator's DqPair helpers, so the oracle shares no code with the model
// under test.

pub type C = (f64, f64);

pub fn cadd(a: C, b: C) -> C {
    (a.0 + b.0, a.1 + b.1)
}

pub fn cmul(a: C, b: C) -> C {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

pub fn cdiv(a: C, b: C) -> C {
    let m = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / m, (a.1 * b.0 - a.0 * b.1) / m)
}

pub fn cabs(a: C) -> f64 {
    a.0.hypot(a.1)
}

pub struct PhasorPoint {
    /// Stator current amplitude (peak, like the simulator's dq magnitudes).
    pub i_s_mag: f64,
    /// Air-gap electromagnetic torque.
    pub torque: f64,
}

/// Steady-state solution of the standard per-phase equivalent circuit at
/// `slip`, stator voltage amplitude `v_mag`, electrical frequency `omega_e`:
/// series stator impedance, magnetizing branch in parallel with the
/// slip-scaled rotor branch. Torque from air-gap power / synchronous
/// mechanical speed.
pub fn phasor_solution(p: &MotorParams, v_mag: f64, slip: f64, omega_e: f64) -> PhasorPoint {
    let z_s: C = (p.r_stator, omega_e * p.l_ls);
    let z_r: C = (p.r_rotor / slip, omega_e * p.l_lr);
    let z_m: C = (0.0, omega_e * p.l_m);
    let z_gap = cdiv(cmul(z_m, z_r), cadd(z_m, z_r));
    let v: C = (v_mag, 0.0);
    let i_s = cdiv(v, cadd(z_s, z_gap));
    let v_gap = cadd(v, cmul((-1.0, 0.0), cmul(i_s, z_s)));
    let i_r = cdiv(v_gap, z_r);
    // Amplitude-invariant scaling: P = 3/2·Σ re(V·conj(I)) with peak phasors.
    let p_gap = 1.5 * cabs(i_r) * cabs(i_r) * p.r_rotor / slip;
    let torque = p.pole_pairs * p_gap / omega_e;
    PhasorPoint {
        i_s_mag: cabs(i_s),
        torque,
    }
}

/// Integrate the simulator's flux-linkage model at a pinned rotor speed until
/// the fluxes settle, returning the steady state. RK4 with the speed
/// derivative zeroed; 3 s is many rotor time constants.
pub fn settle_fluxes_at_slip(
    params: &MotorParams,
    load: &MechLoad,
    v_stator: DqPair,
    slip: f64,
    omega_e: f64,
) -> MotorState {
    let mut state = MotorState {
        lambda_s: DqPair::ZERO,
        lambda_r: DqPair::ZERO,
        omega_r: (1.0 - slip) * omega_e,
    };
    let deriv = |s: &MotorState| -> MotorDerivs {
        let mut d = motor_derivatives(params, load, s, v_stator, omega_e);
        d.omega_r = 0.0;
        d
    };
    let apply = |s: &MotorState, d: &MotorDerivs, h: f64| MotorState {
        lambda_s: s.lambda_s + d.lambda_s * h,
        lambda_r: s.lambda_r + d.lambda_r * h,
        omega_r: s.omega_r,
    };
    let dt = 1e-4;
    for _ in 0..30_000 {
        let k1 = deriv(&state);
        let k2 = deriv(&apply(&state, &k1, dt / 2.0));
        let k3 = deriv(&apply(&state, &k2, dt / 2.0));
        let k4 = deriv(&apply(&state, &k3, dt));
        state = MotorState {
            lambda_s: state.lambda_s
                + (k1.lambda_s + (k2.lambda_s + k3.lambda_s) * 2.0 + k4.lambda_s) * (dt / 6.0),
            lambda_r: state.lambda_r
                + (k1.lambda_r + (k2.lambda_r + k3.lambda_r) * 2.0 + k4.lambda_r) * (dt / 6.0),
            omega_r: state.omega_r,
        };
    }
    state
}
