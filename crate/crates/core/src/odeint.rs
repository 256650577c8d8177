//! ODE integration over signed time spans.
//!
//! Two integrators cover the crate's needs:
//!
//! - [`integrate_fixed`]: classical RK4 on an evenly spaced grid. Every
//!   run visits the same grid points in the same order, which makes the
//!   training path exactly differentiable and reproducible.
//! - [`integrate_adaptive`]: Dormand-Prince 5(4) with PI step-size
//!   control and first-same-as-last reuse, used wherever accuracy per
//!   field evaluation matters more than a fixed evaluation pattern.
//!
//! Both handle decreasing spans (`start > end`) by integrating with a
//! negative step.

use crate::error::{Error, Result};

/// Signed integration span. `start > end` integrates backward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeInterval {
    pub start: f64,
    pub end: f64,
}

impl TimeInterval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::config("time interval must be finite"));
        }
        Ok(TimeInterval { start, end })
    }

    #[inline]
    pub fn span(&self) -> f64 {
        self.end - self.start
    }

    /// Same span traversed in the opposite direction.
    #[inline]
    pub fn reversed(&self) -> TimeInterval {
        TimeInterval {
            start: self.end,
            end: self.start,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    Rk4,
    Dopri5,
}

/// Solver selection plus the knobs for both integrators. Fields that do
/// not apply to the chosen method are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Grid steps for the fixed-step path.
    pub rk4_steps: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Attempted-step budget (accepted + rejected) for the adaptive path.
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: SolverMethod::Rk4,
            rk4_steps: 32,
            rtol: 1e-6,
            atol: 1e-6,
            max_steps: 10_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rk4_steps == 0 {
            return Err(Error::config("rk4_steps must be positive"));
        }
        if !(self.rtol > 0.0 && self.rtol.is_finite()) {
            return Err(Error::config("rtol must be positive and finite"));
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return Err(Error::config("atol must be positive and finite"));
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps must be positive"));
        }
        Ok(())
    }
}

/// Work counters reported by the adaptive integrator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AdaptiveStats {
    pub accepted: usize,
    pub rejected: usize,
    pub field_evals: usize,
}

/// One classical RK4 step of size `h` from time `t`, in place.
pub fn rk4_step<F>(field: &mut F, t: f64, h: f64, state: &mut [f64]) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = state.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    field(t, state, &mut k1)?;
    for i in 0..n {
        tmp[i] = state[i] + 0.5 * h * k1[i];
    }
    field(t + 0.5 * h, &tmp, &mut k2)?;
    for i in 0..n {
        tmp[i] = state[i] + 0.5 * h * k2[i];
    }
    field(t + 0.5 * h, &tmp, &mut k3)?;
    for i in 0..n {
        tmp[i] = state[i] + h * k3[i];
    }
    field(t + h, &tmp, &mut k4)?;
    for i in 0..n {
        state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

/// RK4 over `n_steps` equal steps. Step `k` starts at exactly
/// `start + k * h`, so repeated runs touch identical grid times.
pub fn integrate_fixed<F>(
    field: &mut F,
    interval: TimeInterval,
    n_steps: usize,
    state: &mut [f64],
) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if interval.span() == 0.0 {
        return Ok(());
    }
    if n_steps == 0 {
        return Err(Error::config("fixed-step integration needs at least one step"));
    }
    let h = interval.span() / n_steps as f64;
    for k in 0..n_steps {
        let t = interval.start + k as f64 * h;
        rk4_step(field, t, h, state)?;
        if !crate::linalg::all_finite(state) {
            return Err(Error::Integration {
                t,
                step_size: h,
                reason: "state became non-finite".into(),
            });
        }
    }
    Ok(())
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (row 7 of A doubles as the solution weights).
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Embedded 5th-minus-4th order error weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
/// Step-ratio clamps: shrink no further than x0.2, grow no further than x10.
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Dormand-Prince 5(4) over the interval with PI step-size control.
///
/// A step is accepted when the embedded error satisfies
/// `max_i |err_i| / (atol + rtol * max(|y_i|, |y_new_i|)) <= 1`.
/// The first attempted step covers the whole span and is cut back by the
/// controller as needed. Attempted steps (accepted plus rejected) are
/// bounded by `max_steps`.
pub fn integrate_adaptive<F>(
    field: &mut F,
    interval: TimeInterval,
    rtol: f64,
    atol: f64,
    max_steps: usize,
    state: &mut [f64],
) -> Result<AdaptiveStats>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let mut stats = AdaptiveStats::default();
    let span = interval.span();
    if span == 0.0 {
        return Ok(stats);
    }
    let dir = span.signum();
    let n = state.len();

    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut y_stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    let mut t = interval.start;
    let mut h = span;
    let mut fac_old: f64 = 1e-4;
    // First stage; reused across steps via first-same-as-last.
    field(t, state, &mut k[0])?;
    stats.field_evals += 1;

    loop {
        if (t - interval.end) * dir >= 0.0 {
            return Ok(stats);
        }
        if stats.accepted + stats.rejected >= max_steps {
            return Err(Error::StepLimit {
                max_steps,
                t,
            });
        }
        // Land exactly on the endpoint.
        if (t + h - interval.end) * dir > 0.0 {
            h = interval.end - t;
        }
        if h.abs() <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::Integration {
                t,
                step_size: h,
                reason: "step size underflow".into(),
            });
        }

        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s - 1][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                y_stage[i] = state[i] + h * acc;
            }
            let (pre, rest) = k.split_at_mut(s);
            let _ = pre;
            field(t + C[s] * h, &y_stage, &mut rest[0])?;
            stats.field_evals += 1;
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                if B[j] != 0.0 {
                    acc += B[j] * kj[i];
                }
            }
            y_new[i] = state[i] + h * acc;
        }

        // Embedded error, scaled per component, max norm.
        let mut err_norm: f64 = 0.0;
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    acc += E[j] * kj[i];
                }
            }
            let err = h * acc;
            let scale = atol + rtol * state[i].abs().max(y_new[i].abs());
            err_norm = err_norm.max((err / scale).abs());
        }
        if !err_norm.is_finite() {
            // Treat a blown-up trial step as maximally wrong and retry.
            err_norm = 1e10;
        }

        let fac11 = err_norm.powf(EXPO1);
        if err_norm <= 1.0 {
            stats.accepted += 1;
            t += h;
            state.copy_from_slice(&y_new);
            if !crate::linalg::all_finite(state) {
                return Err(Error::Integration {
                    t,
                    step_size: h,
                    reason: "state became non-finite".into(),
                });
            }
            // First-same-as-last: stage 7 was evaluated at (t + h, y_new).
            k.swap(0, 6);
            let fac = (fac11 / fac_old.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            fac_old = err_norm.max(1e-4);
            h /= fac;
        } else {
            stats.rejected += 1;
            let fac = (fac11 / SAFE).min(1.0 / FAC_MIN);
            h /= fac;
        }
    }
}

/// Runs the configured method; adaptive runs report stats.
pub fn integrate<F>(
    field: &mut F,
    interval: TimeInterval,
    config: &SolverConfig,
    state: &mut [f64],
) -> Result<Option<AdaptiveStats>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    config.validate()?;
    match config.method {
        SolverMethod::Rk4 => {
            integrate_fixed(field, interval, config.rk4_steps, state)?;
            Ok(None)
        }
        SolverMethod::Dopri5 => {
            let stats = integrate_adaptive(
                field,
                interval,
                config.rtol,
                config.atol,
                config.max_steps,
                state,
            )?;
            Ok(Some(stats))
        }
    }
}
