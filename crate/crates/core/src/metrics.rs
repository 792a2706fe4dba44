//! Step-response metrics over disturbance windows.
//!
//! Each disturbance gets a window from its onset to the next onset (or the
//! end of the run), so a window covers both the excursion while the event is
//! active and the recovery after it clears.

use crate::network::{DisturbanceEvent, EventKind};
use serde::Serialize;

/// Default settling band: ±5 % of the reference. With ±20 % disturbances the
/// interesting part of the recovery is the bulk transient; a tighter band
/// mostly measures where low-amplitude tail ringing happens to sit relative
/// to the edge, which is noise, not controller quality.
pub const DEFAULT_BAND: f64 = 0.05;

/// Metrics of one signal over one window, relative to a constant reference.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepMetrics {
    /// Largest excursion past the reference on the side *opposite* the
    /// initial excursion, after the signal first crosses back — classic
    /// overshoot — as a percentage of the reference. Zero if the signal never
    /// crosses.
    pub overshoot_pct: f64,
    /// Time from the window start until the signal last leaves the ±band;
    /// zero if it never leaves, the full window if it ends outside.
    pub settling_time: f64,
    /// Signed mean error over the last tenth of the window, as a percentage
    /// of the reference.
    pub steady_error_pct: f64,
    /// Largest absolute deviation anywhere in the window, in signal units.
    pub peak_deviation: f64,
    /// True when the window ends outside the band.
    pub unsettled: bool,
}

impl StepMetrics {
    pub fn flat() -> Self {
        StepMetrics {
            overshoot_pct: 0.0,
            settling_time: 0.0,
            steady_error_pct: 0.0,
            peak_deviation: 0.0,
            unsettled: false,
        }
    }
}

/// Compute metrics of `y` against `reference` over samples at times `t`.
/// `band_frac` sets the settling band as a fraction of the reference.
pub fn step_metrics(t: &[f64], y: &[f64], reference: f64, band_frac: f64) -> StepMetrics {
    assert_eq!(t.len(), y.len());
    if t.is_empty() {
        return StepMetrics::flat();
    }
    let denom = reference.abs().max(1e-12);
    let band = band_frac * denom;
    // Excursions smaller than a tenth of the band don't count as a response.
    let threshold = 0.1 * band;

    let mut peak = 0.0f64;
    for &v in y {
        peak = peak.max((v - reference).abs());
    }

    // Overshoot: direction of the first real excursion, then the largest
    // opposite-side excursion after the first sign change.
    let mut overshoot = 0.0f64;
    if let Some(i0) = y.iter().position(|&v| (v - reference).abs() > threshold) {
        let dir = (y[i0] - reference).signum();
        if let Some(ic) = (i0..y.len()).find(|&i| dir * (y[i] - reference) < 0.0) {
            for &v in &y[ic..] {
                overshoot = overshoot.max(dir * (reference - v));
            }
        }
    }

    // Settling: last sample outside the band, scanned from the end.
    let last_violation = y.iter().rposition(|&v| (v - reference).abs() > band);
    let (settling_time, unsettled) = match last_violation {
        None => (0.0, false),
        Some(i) if i + 1 == y.len() => (t[y.len() - 1] - t[0], true),
        Some(i) => (t[i + 1] - t[0], false),
    };

    let tail = (y.len() as f64 * 0.9).floor() as usize;
    let tail = tail.min(y.len() - 1);
    let tail_slice = &y[tail..];
    let mean = tail_slice.iter().sum::<f64>() / tail_slice.len() as f64;

    StepMetrics {
        overshoot_pct: 100.0 * overshoot / denom,
        settling_time,
        steady_error_pct: 100.0 * (mean - reference) / denom,
        peak_deviation: peak,
        unsettled,
    }
}

/// Index range of samples with `t0 <= t < t1`.
pub fn window(t: &[f64], t0: f64, t1: f64) -> std::ops::Range<usize> {
    let start = t.partition_point(|&x| x < t0);
    let end = t.partition_point(|&x| x < t1);
    start..end.max(start)
}

/// One analysis window per event: onset to next onset (or end of run).
/// `events` must be sorted by start time.
pub fn event_windows(events: &[DisturbanceEvent], t_end: f64) -> Vec<(f64, f64)> {
    events
        .iter()
        .enumerate()
        .map(|(i, ev)| {
            let stop = events.get(i + 1).map_or(t_end, |next| next.t_start).min(t_end);
            (ev.t_start, stop)
        })
        .collect()
}

/// Everything reported for one disturbance window.
#[derive(Debug, Clone, Serialize)]
pub struct EventMetrics {
    pub event_index: usize,
    pub kind: EventKind,
    pub t_start: f64,
    pub duration: f64,
    pub magnitude: f64,
    pub window_end: f64,
    pub v_pcc: StepMetrics,
    pub v_dc: StepMetrics,
    /// Lowest motor speed while the event is active (onset to onset +
    /// duration), not during the recovery afterwards.
    pub speed_min: f64,
    /// Largest motor torque magnitude while the event is active.
    pub torque_peak: f64,
}

/// Per-event metrics from logged columns. `events` must be sorted by start.
#[allow(clippy::too_many_arguments)]
pub fn event_report(
    t: &[f64],
    v_pcc_mag: &[f64],
    v_dc: &[f64],
    motor_speed: &[f64],
    motor_torque: &[f64],
    events: &[DisturbanceEvent],
    t_end: f64,
    v_ref: f64,
    v_dc_ref: f64,
    band_frac: f64,
) -> Vec<EventMetrics> {
    event_windows(events, t_end)
        .into_iter()
        .zip(events.iter().enumerate())
        .map(|((w0, w1), (event_index, ev))| {
            let r = window(t, w0, w1);
            // Speed and torque are read only while the event is active; the
            // post-clear electrical transient belongs to the next comparison,
            // not to the event's own severity.
            let mut active = window(t, w0, (w0 + ev.duration).min(w1));
            if active.is_empty() {
                active = r.clone();
            }
            let speed_min = motor_speed[active.clone()]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            let torque_peak = motor_torque[active]
                .iter()
                .fold(0.0f64, |m, &x| m.max(x.abs()));
            EventMetrics {
                event_index,
                kind: ev.kind,
                t_start: ev.t_start,
                duration: ev.duration,
                magnitude: ev.magnitude,
                window_end: w1,
                v_pcc: step_metrics(&t[r.clone()], &v_pcc_mag[r.clone()], v_ref, band_frac),
                v_dc: step_metrics(&t[r.clone()], &v_dc[r.clone()], v_dc_ref, band_frac),
                speed_min,
                torque_peak,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hand_built_response_with_a_single_undershoot() {
        let t: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = [1.3, 1.1, 0.95, 1.015, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let m = step_metrics(&t, &y, 1.0, 0.02);
        // Initial excursion is upward, first crossing at 0.95, and nothing
        // later dips lower, so overshoot is 5 %.
        assert_abs_diff_eq!(m.overshoot_pct, 5.0, epsilon = 1e-12);
        // 0.95 at t = 2 is the last out-of-band sample (1.015 is inside).
        assert_abs_diff_eq!(m.settling_time, 3.0, epsilon = 1e-12);
        assert!(!m.unsettled);
        assert_abs_diff_eq!(m.peak_deviation, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(m.steady_error_pct, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn monotone_recovery_has_zero_overshoot() {
        let t: Vec<f64> = (0..2000).map(|i| i as f64 * 1e-3).collect();
        let tau = 0.05;
        let y: Vec<f64> = t.iter().map(|&x| 1.0 - 0.3 * (-x / tau).exp()).collect();
        let m = step_metrics(&t, &y, 1.0, 0.02);
        assert_abs_diff_eq!(m.overshoot_pct, 0.0);
        // Crosses into the 2 % band when 0.3·e^{−t/τ} = 0.02.
        let expect = tau * (0.3f64 / 0.02).ln();
        assert_abs_diff_eq!(m.settling_time, expect, epsilon = 2e-3);
        assert!(!m.unsettled);
        assert_abs_diff_eq!(m.peak_deviation, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn persistent_offset_is_flagged_unsettled() {
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        let y = vec![0.9; 100];
        let m = step_metrics(&t, &y, 1.0, DEFAULT_BAND);
        assert!(m.unsettled);
        assert_abs_diff_eq!(m.settling_time, t[99] - t[0], epsilon = 1e-12);
        assert_abs_diff_eq!(m.steady_error_pct, -10.0, epsilon = 1e-9);
    }

    #[test]
    fn flat_signal_reports_all_zeros() {
        let t: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y = vec![2.0; 50];
        let m = step_metrics(&t, &y, 2.0, DEFAULT_BAND);
        assert_abs_diff_eq!(m.overshoot_pct, 0.0);
        assert_abs_diff_eq!(m.settling_time, 0.0);
        assert!(!m.unsettled);
    }

    #[test]
    fn ripple_inside_the_threshold_never_counts_as_overshoot() {
        let t: Vec<f64> = (0..100).map(|i| i as f64).collect();
        // ±0.1 % ripple around the reference: crossings, but no response.
        let y: Vec<f64> = (0..100).map(|i| 1.0 + 1e-3 * if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let m = step_metrics(&t, &y, 1.0, DEFAULT_BAND);
        assert_abs_diff_eq!(m.overshoot_pct, 0.0);
        assert_abs_diff_eq!(m.settling_time, 0.0);
    }

    #[test]
    fn window_bounds_are_half_open() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(window(&t, 1.0, 3.0), 1..3);
        assert_eq!(window(&t, 0.5, 3.5), 1..4);
        assert_eq!(window(&t, 4.0, 9.0), 4..5);
        assert_eq!(window(&t, 5.0, 9.0), 5..5);
    }

    #[test]
    fn windows_run_onset_to_onset() {
        let events = [
            DisturbanceEvent { kind: EventKind::Swell, t_start: 4.0, duration: 2.0, magnitude: 0.2 },
            DisturbanceEvent { kind: EventKind::Sag, t_start: 10.0, duration: 2.0, magnitude: 0.2 },
        ];
        assert_eq!(event_windows(&events, 14.0), vec![(4.0, 10.0), (10.0, 14.0)]);
        assert_eq!(event_windows(&events[..1], 14.0), vec![(4.0, 14.0)]);
    }

    #[test]
    fn speed_and_torque_read_only_the_active_part_of_the_window() {
        let t: Vec<f64> = (0..140).map(|i| i as f64 * 0.1).collect();
        let flat = vec![1.0; 140];
        let mut speed = vec![300.0; 140];
        let mut torque = vec![0.01; 140];
        // Dip and blip while the event is active...
        speed[45] = 250.0;
        torque[45] = 0.05;
        // ...and a deeper dip / bigger blip in the recovery, which must not
        // be attributed to the event.
        speed[75] = 200.0;
        torque[75] = 0.09;
        let events = [DisturbanceEvent {
            kind: EventKind::Sag,
            t_start: 4.0,
            duration: 2.0,
            magnitude: 0.2,
        }];
        let rep = event_report(&t, &flat, &flat, &speed, &torque, &events, 14.0, 1.0, 1.0, DEFAULT_BAND);
        assert_eq!(rep.len(), 1);
        assert_abs_diff_eq!(rep[0].speed_min, 250.0);
        assert_abs_diff_eq!(rep[0].torque_peak, 0.05);
    }

    #[test]
    fn shifting_time_does_not_change_settling() {
        let t: Vec<f64> = (0..100).map(|i| 7.0 + i as f64 * 0.01).collect();
        let mut y = vec![1.0; 100];
        y[0] = 1.5;
        y[1] = 0.9;
        let m = step_metrics(&t, &y, 1.0, DEFAULT_BAND);
        assert_abs_diff_eq!(m.settling_time, 0.02, epsilon = 1e-12);
        assert_abs_diff_eq!(m.overshoot_pct, 10.0, epsilon = 1e-9);
    }
}
