//! Run loop: one synchronous-frame state vector for the whole system,
//! fixed-step classical RK4, failure detection, and the sampled log.
//!
//! State layout (continuous-controller mode):
//!
//! ```text
//! [ i_grid.d i_grid.q v_cap.d v_cap.q          network
//!   i_s.d i_s.q v_dc                           converter branch + DC link
//!   (λ_s.d λ_s.q λ_r.d λ_r.q ω_r) × n_motors   machines
//!   θ_pll pll_integrator                       PLL
//!   controller states (0–4) ]                  regulator integrators
//! ```
//!
//! In sampled mode the PLL and controller segments are absent: both are
//! advanced once per step and the converter command is held over the step.

use crate::controllers::{
    saturate_command, ControllerInputs, ControllerKind, ControllerState,
};
use crate::error::SimError;
use crate::frames::{pll_frequency, pll_step, DqPair, PllParams, PllState};
use crate::init;
use crate::machine::{
    electromagnetic_torque, motor_currents, motor_derivatives, MechLoad, MotorParams, MotorState,
};
use crate::network::{
    network_derivatives, pcc_voltage, source_magnitude, DisturbanceEvent, GridParams, NetworkState,
};
use crate::scenario::{ControlMode, Scenario};
use crate::statcom::{
    current_derivatives, dc_link_derivative, load_power, statcom_output_power, StatcomParams,
    StatcomState,
};
use serde::Serialize;
use std::f64::consts::TAU;
use std::io;

const NET0: usize = 0;
const STAT0: usize = 4;
const MOT0: usize = 7;
const MOTOR_LEN: usize = 5;

/// Why a run stopped before its end time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimFailure {
    /// DC-link voltage fell below the configured floor.
    DcLinkCollapse { t: f64 },
    /// A state left the finite / plausible range.
    NumericalBlowUp { t: f64 },
}

impl std::fmt::Display for SimFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimFailure::DcLinkCollapse { t } => write!(f, "DC link collapsed at t = {t:.6} s"),
            SimFailure::NumericalBlowUp { t } => write!(f, "numerical blow-up at t = {t:.6} s"),
        }
    }
}

/// How the initial state was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// Solved steady state: the run starts settled at the setpoints.
    SteadyState,
    /// Steady-state solve failed; flat start with a short source ramp.
    FlatRamp,
}

/// Decimated samples of everything worth plotting. dq components are in the
/// PLL frame (the controller's view); powers and magnitudes are
/// frame-invariant. Motor speed is electrical rad/s of one group member;
/// torque is the group total.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeriesLog {
    pub t: Vec<f64>,
    pub v_pcc_mag: Vec<f64>,
    pub v_pcc_d: Vec<f64>,
    pub v_pcc_q: Vec<f64>,
    pub i_ds: Vec<f64>,
    pub i_qs: Vec<f64>,
    pub v_dc: Vec<f64>,
    pub p_s: Vec<f64>,
    pub q_s: Vec<f64>,
    pub motor_speed: Vec<f64>,
    pub motor_torque: Vec<f64>,
    pub v_conv_d: Vec<f64>,
    pub v_conv_q: Vec<f64>,
}

impl TimeSeriesLog {
    pub const COLUMNS: [&'static str; 13] = [
        "t",
        "v_pcc_mag",
        "v_pcc_d",
        "v_pcc_q",
        "i_ds",
        "i_qs",
        "v_dc",
        "p_s",
        "q_s",
        "motor_speed",
        "motor_torque",
        "v_conv_d",
        "v_conv_q",
    ];

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        let col: &Vec<f64> = match name {
            "t" => &self.t,
            "v_pcc_mag" => &self.v_pcc_mag,
            "v_pcc_d" => &self.v_pcc_d,
            "v_pcc_q" => &self.v_pcc_q,
            "i_ds" => &self.i_ds,
            "i_qs" => &self.i_qs,
            "v_dc" => &self.v_dc,
            "p_s" => &self.p_s,
            "q_s" => &self.q_s,
            "motor_speed" => &self.motor_speed,
            "motor_torque" => &self.motor_torque,
            "v_conv_d" => &self.v_conv_d,
            "v_conv_q" => &self.v_conv_q,
            _ => return None,
        };
        Some(col.as_slice())
    }

    fn reserve(&mut self, n: usize) {
        self.t.reserve(n);
        self.v_pcc_mag.reserve(n);
        self.v_pcc_d.reserve(n);
        self.v_pcc_q.reserve(n);
        self.i_ds.reserve(n);
        self.i_qs.reserve(n);
        self.v_dc.reserve(n);
        self.p_s.reserve(n);
        self.q_s.reserve(n);
        self.motor_speed.reserve(n);
        self.motor_torque.reserve(n);
        self.v_conv_d.reserve(n);
        self.v_conv_q.reserve(n);
    }

    fn push(&mut self, t: f64, out: &StepOutputs, v_dc: f64, speed: f64, i_stat: DqPair) {
        let s = statcom_power_at(out.v_pcc, i_stat);
        self.t.push(t);
        self.v_pcc_mag.push(out.v_pcc.magnitude());
        self.v_pcc_d.push(out.v_pcc_pll.d);
        self.v_pcc_q.push(out.v_pcc_pll.q);
        self.i_ds.push(out.i_stat_pll.d);
        self.i_qs.push(out.i_stat_pll.q);
        self.v_dc.push(v_dc);
        self.p_s.push(s.0);
        self.q_s.push(s.1);
        self.motor_speed.push(speed);
        self.motor_torque.push(out.torque);
        self.v_conv_d.push(out.v_conv_pll.d);
        self.v_conv_q.push(out.v_conv_pll.q);
    }

    /// Write all rows as CSV: header line, LF endings, full-precision values
    /// (shortest decimal that round-trips).
    pub fn write_csv<W: io::Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{}", Self::COLUMNS.join(","))?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.t[i],
                self.v_pcc_mag[i],
                self.v_pcc_d[i],
                self.v_pcc_q[i],
                self.i_ds[i],
                self.i_qs[i],
                self.v_dc[i],
                self.p_s[i],
                self.q_s[i],
                self.motor_speed[i],
                self.motor_torque[i],
                self.v_conv_d[i],
                self.v_conv_q[i],
            )?;
        }
        Ok(())
    }
}

fn statcom_power_at(v_pcc: DqPair, i_stat: DqPair) -> (f64, f64) {
    let s = load_power(v_pcc, i_stat);
    (s.p, s.q)
}

/// One completed (or aborted) simulation.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub kind: ControllerKind,
    pub init: InitKind,
    pub log: TimeSeriesLog,
    pub failure: Option<SimFailure>,
    pub wall_seconds: f64,
}

/// The same scenario run once per control strategy.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub runs: Vec<RunResult>,
}

impl Comparison {
    pub fn run(&self, kind: ControllerKind) -> Option<&RunResult> {
        self.runs.iter().find(|r| r.kind == kind)
    }
}

/// Scratch buffers for `rk4_step`, sized once per run.
pub struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    pub fn new(n: usize) -> Self {
        Rk4Scratch {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

/// One classical fourth-order Runge–Kutta step of `y' = rhs(t, y)` in place.
pub fn rk4_step<F>(mut rhs: F, t: f64, dt: f64, y: &mut [f64], s: &mut Rk4Scratch)
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    rhs(t, y, &mut s.k1);
    for i in 0..n {
        s.tmp[i] = y[i] + 0.5 * dt * s.k1[i];
    }
    rhs(t + 0.5 * dt, &s.tmp, &mut s.k2);
    for i in 0..n {
        s.tmp[i] = y[i] + 0.5 * dt * s.k2[i];
    }
    rhs(t + 0.5 * dt, &s.tmp, &mut s.k3);
    for i in 0..n {
        s.tmp[i] = y[i] + dt * s.k3[i];
    }
    rhs(t + dt, &s.tmp, &mut s.k4);
    let w = dt / 6.0;
    for i in 0..n {
        y[i] += w * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
    }
}

/// Complete initial condition, produced by the steady-state solver (or the
/// flat-start fallback) and packed into the integrator vector.
#[derive(Debug, Clone)]
pub(crate) struct SystemState {
    pub network: NetworkState,
    pub statcom: StatcomState,
    pub motors: Vec<MotorState>,
    pub pll: PllState,
    pub ctrl: ControllerState,
}

/// Algebraic outputs of one evaluation, for logging.
#[derive(Debug, Clone, Copy)]
struct StepOutputs {
    v_pcc: DqPair,
    v_pcc_pll: DqPair,
    i_stat_pll: DqPair,
    v_conv_pll: DqPair,
    torque: f64,
}

/// Everything fixed over one run: parameters, schedule, layout.
pub(crate) struct Model {
    pub grid: GridParams,
    pub statcom: StatcomParams,
    pub motor: MotorParams,
    pub load: MechLoad,
    pub n_motors: usize,
    pub pll: PllParams,
    pub ctrl_template: ControllerState,
    pub mode: ControlMode,
    pub v_ref: f64,
    pub v_dc_ref: f64,
    pub m_max: f64,
    pub events: Vec<DisturbanceEvent>,
    pub dt: f64,
    pub t_end: f64,
    pub decimation: usize,
    /// Source ramp-up duration after a flat start.
    pub ramp: Option<f64>,
}

impl Model {
    pub fn new(scenario: &Scenario, kind: ControllerKind) -> Model {
        Model {
            grid: scenario.grid_params(),
            statcom: scenario.statcom_params(),
            motor: scenario.motor_params(),
            load: scenario.mech_load(),
            n_motors: scenario.motors.count as usize,
            pll: scenario.pll_params(),
            ctrl_template: scenario.controller_state_of_kind(kind),
            mode: scenario.controller.mode,
            v_ref: scenario.controller.v_ref,
            v_dc_ref: scenario.v_dc_ref(),
            m_max: scenario.statcom.m_max,
            events: scenario.sorted_events(),
            dt: scenario.solver.dt,
            t_end: scenario.solver.t_end,
            decimation: scenario.solver.log_decimation as usize,
            ramp: None,
        }
    }

    pub fn omega(&self) -> f64 {
        self.grid.omega
    }

    fn pll0(&self) -> usize {
        MOT0 + MOTOR_LEN * self.n_motors
    }

    fn ctrl0(&self) -> usize {
        self.pll0() + 2
    }

    fn state_len(&self) -> usize {
        match self.mode {
            ControlMode::Continuous => self.ctrl0() + self.ctrl_template.state_len(),
            ControlMode::Sampled => self.pll0(),
        }
    }

    /// Source magnitude at `t`, including the disturbance schedule and, after
    /// a flat start, the ramp-up.
    fn source_mag(&self, t: f64) -> f64 {
        let mut m = source_magnitude(&self.grid, &self.events, t);
        if let Some(ramp) = self.ramp {
            if t < ramp {
                m *= (t / ramp).max(0.0);
            }
        }
        m
    }

    fn pack(&self, s: &SystemState, y: &mut Vec<f64>) {
        y.clear();
        y.resize(self.state_len(), 0.0);
        y[NET0] = s.network.i_grid.d;
        y[NET0 + 1] = s.network.i_grid.q;
        y[NET0 + 2] = s.network.v_cap.d;
        y[NET0 + 3] = s.network.v_cap.q;
        y[STAT0] = s.statcom.i.d;
        y[STAT0 + 1] = s.statcom.i.q;
        y[STAT0 + 2] = s.statcom.v_dc;
        for (k, m) in s.motors.iter().enumerate() {
            let b = MOT0 + MOTOR_LEN * k;
            y[b] = m.lambda_s.d;
            y[b + 1] = m.lambda_s.q;
            y[b + 2] = m.lambda_r.d;
            y[b + 3] = m.lambda_r.q;
            y[b + 4] = m.omega_r;
        }
        if self.mode == ControlMode::Continuous {
            let p = self.pll0();
            y[p] = s.pll.theta;
            y[p + 1] = s.pll.integrator;
            let c = self.ctrl0();
            s.ctrl.write_states(&mut y[c..c + s.ctrl.state_len()]);
        }
    }

    fn motor_at(&self, y: &[f64], k: usize) -> MotorState {
        let b = MOT0 + MOTOR_LEN * k;
        MotorState {
            lambda_s: DqPair::new(y[b], y[b + 1]),
            lambda_r: DqPair::new(y[b + 2], y[b + 3]),
            omega_r: y[b + 4],
        }
    }

    /// Total stator current drawn by the group and total torque.
    fn motor_totals(&self, y: &[f64]) -> (DqPair, f64) {
        let mut i_total = DqPair::ZERO;
        let mut torque = 0.0;
        for k in 0..self.n_motors {
            let m = self.motor_at(y, k);
            let (i_s, _) = motor_currents(&self.motor, m.lambda_s, m.lambda_r);
            i_total = i_total + i_s;
            torque += electromagnetic_torque(&self.motor, m.lambda_s, i_s);
        }
        (i_total, torque)
    }

    /// Full right-hand side. In continuous mode the converter command is
    /// derived from the controller states inside `y`; in sampled mode the
    /// held command (simulation frame) is supplied by the caller.
    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64], held: Option<DqPair>) -> StepOutputs {
        let network = NetworkState {
            i_grid: DqPair::new(y[NET0], y[NET0 + 1]),
            v_cap: DqPair::new(y[NET0 + 2], y[NET0 + 3]),
        };
        let i_stat = DqPair::new(y[STAT0], y[STAT0 + 1]);
        let v_dc = y[STAT0 + 2];

        let (i_load, torque) = self.motor_totals(y);
        let i_shunt = i_stat - i_load;
        let v_src = DqPair::new(self.source_mag(t), 0.0);
        let (net_d, v_pcc) = network_derivatives(&self.grid, &network, v_src, i_shunt);
        dydt[NET0] = net_d.i_grid.d;
        dydt[NET0 + 1] = net_d.i_grid.q;
        dydt[NET0 + 2] = net_d.v_cap.d;
        dydt[NET0 + 3] = net_d.v_cap.q;

        let (v_conv_sim, v_conv_pll, v_pcc_pll, i_stat_pll) = match held {
            Some(v_conv_sim) => (v_conv_sim, v_conv_sim, v_pcc, i_stat),
            None => {
                let p = self.pll0();
                let theta = y[p];
                let integ = y[p + 1];
                let delta = theta - self.omega() * t;
                let v_pcc_pll = v_pcc.rotated(-delta);
                let i_stat_pll = i_stat.rotated(-delta);
                let err = v_pcc_pll.q;
                let (omega_pll, _, clamped) = pll_frequency(&self.pll, integ, err);
                dydt[p] = omega_pll;
                dydt[p + 1] = if clamped { 0.0 } else { self.pll.ki * err };

                let c = self.ctrl0();
                let mut ctrl = self.ctrl_template.clone();
                let n = ctrl.state_len();
                ctrl.read_states(&y[c..c + n]);
                let inputs = ControllerInputs {
                    v_pcc_mag: v_pcc.magnitude(),
                    v_dc,
                    i_meas: i_stat_pll,
                    v_ref: self.v_ref,
                    v_dc_ref: self.v_dc_ref,
                };
                let eval = ctrl.eval_continuous(&self.statcom, &inputs);
                dydt[c..c + n].copy_from_slice(&eval.derivs[..n]);
                let v_conv_pll = saturate_command(eval.command, v_dc, self.m_max);
                (v_conv_pll.rotated(delta), v_conv_pll, v_pcc_pll, i_stat_pll)
            }
        };

        let di = current_derivatives(&self.statcom, i_stat, v_conv_sim, v_pcc);
        dydt[STAT0] = di.d;
        dydt[STAT0 + 1] = di.q;
        let p_conv = statcom_output_power(v_conv_sim, i_stat).p;
        // Guard the 1/v_dc term; runs this deep are aborted at the boundary.
        let v_dc_guarded = v_dc.max(0.25 * self.statcom.v_dc_floor);
        dydt[STAT0 + 2] = dc_link_derivative(&self.statcom, v_dc_guarded, p_conv);

        for k in 0..self.n_motors {
            let m = self.motor_at(y, k);
            let d = motor_derivatives(&self.motor, &self.load, &m, v_pcc, self.omega());
            let b = MOT0 + MOTOR_LEN * k;
            dydt[b] = d.lambda_s.d;
            dydt[b + 1] = d.lambda_s.q;
            dydt[b + 2] = d.lambda_r.d;
            dydt[b + 3] = d.lambda_r.q;
            dydt[b + 4] = d.omega_r;
        }

        StepOutputs {
            v_pcc,
            v_pcc_pll,
            i_stat_pll,
            v_conv_pll,
            torque,
        }
    }

    /// Maximum derivative magnitude at a state, PLL angle slot excluded (its
    /// derivative is the frame frequency by construction). Used to verify a
    /// solved steady state really is one.
    pub(crate) fn residual_at_start(&self, state: &SystemState) -> f64 {
        let mut y = Vec::new();
        self.pack(state, &mut y);
        let mut dydt = vec![0.0; y.len()];
        match self.mode {
            ControlMode::Continuous => {
                self.rhs(0.0, &y, &mut dydt, None);
                dydt[self.pll0()] = 0.0;
            }
            ControlMode::Sampled => {
                let held = self.held_command(0.0, &y, &mut state.pll.clone(), &mut state.ctrl.clone());
                self.rhs(0.0, &y, &mut dydt, Some(held.v_conv_sim));
            }
        }
        dydt.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    fn check_state(&self, t: f64, y: &[f64]) -> Option<SimFailure> {
        let mut max = 0.0f64;
        for &v in y {
            if !v.is_finite() {
                return Some(SimFailure::NumericalBlowUp { t });
            }
            max = max.max(v.abs());
        }
        if max > 1e6 {
            return Some(SimFailure::NumericalBlowUp { t });
        }
        if y[STAT0 + 2] < self.statcom.v_dc_floor {
            return Some(SimFailure::DcLinkCollapse { t });
        }
        None
    }

    /// Sampled-mode controller update at a step boundary: advances the given
    /// PLL/controller copies and returns the command to hold plus log values.
    fn held_command(
        &self,
        t: f64,
        y: &[f64],
        pll: &mut PllState,
        ctrl: &mut ControllerState,
    ) -> HeldUpdate {
        let network = NetworkState {
            i_grid: DqPair::new(y[NET0], y[NET0 + 1]),
            v_cap: DqPair::new(y[NET0 + 2], y[NET0 + 3]),
        };
        let i_stat = DqPair::new(y[STAT0], y[STAT0 + 1]);
        let v_dc = y[STAT0 + 2];
        let (i_load, torque) = self.motor_totals(y);
        let i_shunt = i_stat - i_load;
        let v_pcc = pcc_voltage(&self.grid, &network, i_shunt);
        let delta = pll.theta - (self.omega() * t).rem_euclid(TAU);
        let v_pcc_pll = v_pcc.rotated(-delta);
        let i_stat_pll = i_stat.rotated(-delta);
        let inputs = ControllerInputs {
            v_pcc_mag: v_pcc.magnitude(),
            v_dc,
            i_meas: i_stat_pll,
            v_ref: self.v_ref,
            v_dc_ref: self.v_dc_ref,
        };
        let cmd = ctrl.step_sampled(&self.statcom, &inputs, self.dt);
        let v_conv_pll = saturate_command(cmd, v_dc, self.m_max);
        let v_conv_sim = v_conv_pll.rotated(delta);
        *pll = pll_step(pll, &self.pll, v_pcc_pll, self.dt);
        HeldUpdate {
            v_conv_sim,
            outputs: StepOutputs {
                v_pcc,
                v_pcc_pll,
                i_stat_pll,
                v_conv_pll,
                torque,
            },
        }
    }
}

struct HeldUpdate {
    v_conv_sim: DqPair,
    outputs: StepOutputs,
}

/// Run `scenario` with its configured control strategy.
pub fn run_scenario(scenario: &Scenario) -> Result<RunResult, SimError> {
    run_scenario_with_kind(scenario, scenario.controller.kind)
}

/// Run `scenario` with an explicit strategy, ignoring the configured one.
pub fn run_scenario_with_kind(
    scenario: &Scenario,
    kind: ControllerKind,
) -> Result<RunResult, SimError> {
    scenario.validate()?;
    let mut model = Model::new(scenario, kind);
    let start = std::time::Instant::now();
    let (state, init_kind) = match init::steady_state(&model) {
        Some(s) => (s, InitKind::SteadyState),
        None => {
            model.ramp = Some(0.2);
            (init::flat_start(&model), InitKind::FlatRamp)
        }
    };
    let (log, failure) = integrate(&model, &state);
    Ok(RunResult {
        kind,
        init: init_kind,
        log,
        failure,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Run the scenario once per strategy (same scenario otherwise), in the fixed
/// order double-loop, dov, proposed.
pub fn compare_controllers(scenario: &Scenario) -> Result<Comparison, SimError> {
    scenario.validate()?;
    let runs = std::thread::scope(|scope| {
        let handles: Vec<_> = ControllerKind::ALL
            .iter()
            .map(|&kind| scope.spawn(move || run_scenario_with_kind(scenario, kind)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("comparison run panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(Comparison { runs })
}

fn integrate(model: &Model, state0: &SystemState) -> (TimeSeriesLog, Option<SimFailure>) {
    let n_steps = (model.t_end / model.dt).round() as usize;
    let mut y = Vec::new();
    model.pack(state0, &mut y);
    let mut scratch = Rk4Scratch::new(y.len());
    let mut log = TimeSeriesLog::default();
    log.reserve(n_steps / model.decimation + 2);
    let mut failure = None;

    match model.mode {
        ControlMode::Continuous => {
            let mut out_buf = vec![0.0; y.len()];
            for i in 0..=n_steps {
                let t = i as f64 * model.dt;
                if let Some(f) = model.check_state(t, &y) {
                    failure = Some(f);
                    break;
                }
                if i % model.decimation == 0 || i == n_steps {
                    let out = model.rhs(t, &y, &mut out_buf, None);
                    log.push(t, &out, y[STAT0 + 2], y[MOT0 + 4], DqPair::new(y[STAT0], y[STAT0 + 1]));
                }
                if i == n_steps {
                    break;
                }
                rk4_step(
                    |tt, yy, dd| {
                        model.rhs(tt, yy, dd, None);
                    },
                    t,
                    model.dt,
                    &mut y,
                    &mut scratch,
                );
            }
        }
        ControlMode::Sampled => {
            let mut pll = state0.pll;
            let mut ctrl = state0.ctrl.clone();
            for i in 0..=n_steps {
                let t = i as f64 * model.dt;
                if let Some(f) = model.check_state(t, &y) {
                    failure = Some(f);
                    break;
                }
                let last = i == n_steps;
                // The final boundary still gets a log row, but must not
                // advance the regulators past the run.
                let mut pll_next = pll;
                let mut ctrl_next = ctrl.clone();
                let upd = model.held_command(t, &y, &mut pll_next, &mut ctrl_next);
                if i % model.decimation == 0 || last {
                    log.push(
                        t,
                        &upd.outputs,
                        y[STAT0 + 2],
                        y[MOT0 + 4],
                        DqPair::new(y[STAT0], y[STAT0 + 1]),
                    );
                }
                if last {
                    break;
                }
                pll = pll_next;
                ctrl = ctrl_next;
                rk4_step(
                    |tt, yy, dd| {
                        model.rhs(tt, yy, dd, Some(upd.v_conv_sim));
                    },
                    t,
                    model.dt,
                    &mut y,
                    &mut scratch,
                );
            }
        }
    }
    (log, failure)
}
