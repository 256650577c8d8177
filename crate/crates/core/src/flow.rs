//! The conditional continuous normalizing flow.
//!
//! An embedding `s` lives at the data end of the flow, `t = 1`; the base
//! distribution N(0, I) lives at `t = 0`. Transforming data to base
//! integrates the learned field backward over `[1, 0]` while a single
//! extra state coordinate accumulates the Jacobian trace, so
//!
//! `log p(s | a) = log N(z(0); 0, I) + integral_{1}^{0} tr(df/dz) dt`.
//!
//! Manipulation runs the data-to-base transform at the source attribute
//! `a`, then the base-to-data transform at `a + delta`. The shifted
//! attribute is deliberately not clamped to [0, 1]; sweeps beyond the
//! nominal range are part of the intended use.

use crate::error::{Error, Result};
use crate::nn::{basis_probes, Mlp};
use crate::odeint::{self, SolverConfig, SolverMethod, TimeInterval};
use crate::rng;

/// Data end of the flow; embeddings enter and leave here.
pub const T_DATA: f64 = 1.0;
/// Base end of the flow; `z(T_BASE)` is standard normal.
pub const T_BASE: f64 = 0.0;

const LN_2PI: f64 = 1.8378770664093453;

/// How the Jacobian trace in the likelihood is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMode {
    /// Exact trace via one directional pass per embedding dimension.
    Exact,
    /// Hutchinson estimate with Rademacher probes.
    Hutchinson,
}

/// Trace-evaluation policy. Probes are Rademacher, derived from
/// `(seed, sample_index, step_index)` so serial and batched evaluation
/// agree bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEstimatorConfig {
    pub mode: TraceMode,
    /// Probe count per estimate; ignored in exact mode.
    pub n_probes: usize,
    pub seed: u64,
}

impl Default for TraceEstimatorConfig {
    fn default() -> Self {
        TraceEstimatorConfig {
            mode: TraceMode::Exact,
            n_probes: 1,
            seed: 0,
        }
    }
}

impl TraceEstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mode == TraceMode::Hutchinson && self.n_probes == 0 {
            return Err(Error::config("hutchinson trace needs at least one probe"));
        }
        Ok(())
    }

    /// Probe directions and combination weight for one field evaluation.
    pub(crate) fn probes(
        &self,
        dim: usize,
        sample_index: u64,
        step_index: u64,
    ) -> (Vec<Vec<f64>>, f64) {
        match self.mode {
            TraceMode::Exact => (basis_probes(dim), 1.0),
            TraceMode::Hutchinson => (
                rng::rademacher_probes(self.seed, sample_index, step_index, self.n_probes, dim),
                1.0 / self.n_probes as f64,
            ),
        }
    }
}

/// Augmented ODE state: the transported point plus the running trace
/// integral (zero at the start of every transform).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub z: Vec<f64>,
    pub logdet_integral: f64,
}

/// The learned vector field `f(z, t, a)`.
pub fn vector_field(params: &Mlp, z: &[f64], t: f64, a: f64) -> Result<Vec<f64>> {
    params.forward(z, t, a)
}

/// Exact Jacobian trace of the field at one point.
pub fn divergence_exact(params: &Mlp, z: &[f64], t: f64, a: f64) -> Result<f64> {
    let probes = basis_probes(params.embedding_dim());
    let (_, div) = params.forward_div(z, t, a, &probes, 1.0)?;
    Ok(div)
}

/// Hutchinson trace estimate with `n_probes` Rademacher probes drawn
/// from `seed`. Unbiased; deterministic given the seed.
pub fn divergence_hutchinson(
    params: &Mlp,
    z: &[f64],
    t: f64,
    a: f64,
    n_probes: usize,
    seed: u64,
) -> Result<f64> {
    if n_probes == 0 {
        return Err(Error::config("hutchinson trace needs at least one probe"));
    }
    let probes = rng::rademacher_probes(seed, 0, 0, n_probes, params.embedding_dim());
    let (_, div) = params.forward_div(z, t, a, &probes, 1.0 / n_probes as f64)?;
    Ok(div)
}

/// Trace under the configured policy.
pub fn divergence(params: &Mlp, z: &[f64], t: f64, a: f64, cfg: &TraceEstimatorConfig) -> Result<f64> {
    cfg.validate()?;
    let (probes, weight) = cfg.probes(params.embedding_dim(), 0, 0);
    let (_, div) = params.forward_div(z, t, a, &probes, weight)?;
    Ok(div)
}

fn check_embedding(params: &Mlp, s: &[f64]) -> Result<()> {
    if s.len() != params.embedding_dim() {
        return Err(Error::config(format!(
            "embedding has length {}, model expects {}",
            s.len(),
            params.embedding_dim()
        )));
    }
    if !crate::linalg::all_finite(s) {
        return Err(Error::NonFinite {
            context: "input embedding".into(),
            at: None,
        });
    }
    Ok(())
}

fn check_scalar(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite {
            context: name.into(),
            at: None,
        });
    }
    Ok(())
}

/// Integrates just the point coordinate over `interval` at attribute `a`.
fn integrate_plain(
    params: &Mlp,
    z: &[f64],
    a: f64,
    interval: TimeInterval,
    solver: &SolverConfig,
) -> Result<Vec<f64>> {
    let mut state = z.to_vec();
    let mut field = |t: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
        let f = params.forward(y, t, a)?;
        out.copy_from_slice(&f);
        Ok(())
    };
    odeint::integrate(&mut field, interval, solver, &mut state)?;
    Ok(state)
}

/// Integrates the augmented state (point, trace integral) over
/// `interval`. In Hutchinson mode with the fixed-step solver, probes are
/// re-keyed per grid step; the adaptive solver binds one probe set for
/// the whole solve since its step sequence is data-dependent.
fn integrate_augmented(
    params: &Mlp,
    z: &[f64],
    a: f64,
    interval: TimeInterval,
    solver: &SolverConfig,
    trace_cfg: &TraceEstimatorConfig,
    sample_index: u64,
) -> Result<FlowState> {
    solver.validate()?;
    trace_cfg.validate()?;
    let d = params.embedding_dim();
    let mut state = Vec::with_capacity(d + 1);
    state.extend_from_slice(z);
    state.push(0.0);

    match solver.method {
        SolverMethod::Rk4 => {
            let span = interval.span();
            if span != 0.0 {
                let h = span / solver.rk4_steps as f64;
                for k in 0..solver.rk4_steps {
                    let (probes, weight) = trace_cfg.probes(d, sample_index, k as u64);
                    let mut field = |t: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
                        let (f, div) = params.forward_div(&y[..d], t, a, &probes, weight)?;
                        out[..d].copy_from_slice(&f);
                        out[d] = div;
                        Ok(())
                    };
                    let t = interval.start + k as f64 * h;
                    odeint::rk4_step(&mut field, t, h, &mut state)?;
                    if !crate::linalg::all_finite(&state) {
                        return Err(Error::Integration {
                            t,
                            step_size: h,
                            reason: "state became non-finite".into(),
                        });
                    }
                }
            }
        }
        SolverMethod::Dopri5 => {
            let (probes, weight) = trace_cfg.probes(d, sample_index, 0);
            let mut field = |t: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
                let (f, div) = params.forward_div(&y[..d], t, a, &probes, weight)?;
                out[..d].copy_from_slice(&f);
                out[d] = div;
                Ok(())
            };
            odeint::integrate_adaptive(
                &mut field,
                interval,
                solver.rtol,
                solver.atol,
                solver.max_steps,
                &mut state,
            )?;
        }
    }

    let logdet_integral = state[d];
    state.truncate(d);
    Ok(FlowState {
        z: state,
        logdet_integral,
    })
}

/// Transforms a data-space embedding to the base space at attribute `a`,
/// returning the base point and the accumulated trace integral
/// `integral_{1}^{0} tr(df/dz) dt`.
pub fn transform_to_base(
    params: &Mlp,
    s: &[f64],
    a: f64,
    solver: &SolverConfig,
    trace_cfg: &TraceEstimatorConfig,
) -> Result<(Vec<f64>, f64)> {
    transform_to_base_keyed(params, s, a, solver, trace_cfg, 0)
}

/// [`transform_to_base`] with an explicit sample index for probe keying,
/// so batch evaluation matches one-at-a-time evaluation bit-for-bit.
pub fn transform_to_base_keyed(
    params: &Mlp,
    s: &[f64],
    a: f64,
    solver: &SolverConfig,
    trace_cfg: &TraceEstimatorConfig,
    sample_index: u64,
) -> Result<(Vec<f64>, f64)> {
    check_embedding(params, s)?;
    check_scalar("attribute", a)?;
    let interval = TimeInterval::new(T_DATA, T_BASE)?;
    let state = integrate_augmented(params, s, a, interval, solver, trace_cfg, sample_index)?;
    Ok((state.z, state.logdet_integral))
}

/// Transforms a base-space point back to data space under `a_target`.
/// No trace accumulation; manipulation does not need it.
pub fn transform_from_base(
    params: &Mlp,
    z0: &[f64],
    a_target: f64,
    solver: &SolverConfig,
) -> Result<Vec<f64>> {
    check_embedding(params, z0)?;
    check_scalar("target attribute", a_target)?;
    let interval = TimeInterval::new(T_BASE, T_DATA)?;
    integrate_plain(params, z0, a_target, interval, solver)
}

/// Conditional log-likelihood of an embedding:
/// `log N(z(0); 0, I) + integral_{1}^{0} tr(df/dz) dt`.
pub fn log_likelihood(
    params: &Mlp,
    s: &[f64],
    a: f64,
    solver: &SolverConfig,
    trace_cfg: &TraceEstimatorConfig,
) -> Result<f64> {
    log_likelihood_keyed(params, s, a, solver, trace_cfg, 0)
}

/// [`log_likelihood`] with an explicit probe-keying sample index.
pub fn log_likelihood_keyed(
    params: &Mlp,
    s: &[f64],
    a: f64,
    solver: &SolverConfig,
    trace_cfg: &TraceEstimatorConfig,
    sample_index: u64,
) -> Result<f64> {
    let (z0, logdet) = transform_to_base_keyed(params, s, a, solver, trace_cfg, sample_index)?;
    Ok(gaussian_log_density(&z0) + logdet)
}

/// Log-density of the standard normal in the base space.
pub fn gaussian_log_density(x: &[f64]) -> f64 {
    let sq: f64 = x.iter().map(|v| v * v).sum();
    -0.5 * (x.len() as f64) * LN_2PI - 0.5 * sq
}

/// Manipulates an embedding: to base at `a`, back to data at
/// `a + delta`. `delta = 0` is the identity up to solver tolerance.
pub fn manipulate(
    params: &Mlp,
    s: &[f64],
    a: f64,
    delta: f64,
    solver: &SolverConfig,
) -> Result<Vec<f64>> {
    check_embedding(params, s)?;
    check_scalar("attribute", a)?;
    check_scalar("manipulation delta", delta)?;
    let to_base = TimeInterval::new(T_DATA, T_BASE)?;
    let z0 = integrate_plain(params, s, a, to_base, solver)?;
    transform_from_base(params, &z0, a + delta, solver)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::nn::DenseLayer;
    use rand::Rng;

    const E: f64 = std::f64::consts::E;

    /// Single affine layer realizing f(z, t, a) = -z.
    fn negation_field(d: usize) -> Mlp {
        let mut w = Matrix::zeros(d, d + 2);
        for i in 0..d {
            w.set(i, i, -1.0);
        }
        Mlp::from_layers(d, vec![DenseLayer { weight: w, bias: vec![0.0; d] }]).unwrap()
    }

    /// Mild random tanh net: small enough weights for a tame flow, big
    /// enough that the field actually does something.
    fn mild_net(d: usize, seed: u64) -> Mlp {
        let mut net = Mlp::with_init(d, 8, 2, seed).unwrap();
        let mut rng = crate::rng::keyed_rng(seed, &[0x6d69_6c64]);
        for p in net.params_mut() {
            *p = rng.gen_range(-0.35..0.35);
        }
        net
    }

    fn solver_rk4(steps: usize) -> SolverConfig {
        SolverConfig {
            method: SolverMethod::Rk4,
            rk4_steps: steps,
            ..SolverConfig::default()
        }
    }

    fn solver_dopri(rtol: f64) -> SolverConfig {
        SolverConfig {
            method: SolverMethod::Dopri5,
            rtol,
            atol: rtol,
            ..SolverConfig::default()
        }
    }

    fn exact_cfg() -> TraceEstimatorConfig {
        TraceEstimatorConfig::default()
    }

    #[test]
    fn zero_network_is_the_identity_flow() {
        let net = Mlp::zeros(3, 4, 2);
        let s = [0.3, -0.8, 1.4];
        let (z0, logdet) = transform_to_base(&net, &s, 0.5, &solver_rk4(32), &exact_cfg()).unwrap();
        assert_eq!(z0, s.to_vec());
        assert_eq!(logdet, 0.0);
        let back = transform_from_base(&net, &z0, 0.9, &solver_rk4(32)).unwrap();
        assert_eq!(back, s.to_vec());
        for delta in [-1.5, 0.0, 0.7] {
            let m = manipulate(&net, &s, 0.2, delta, &solver_rk4(32)).unwrap();
            assert_eq!(m, s.to_vec());
        }
    }

    #[test]
    fn gaussian_log_density_fixture() {
        // Standard normal at the origin in two dimensions: -ln(2*pi).
        let net = Mlp::zeros(2, 4, 2);
        let ll = log_likelihood(&net, &[0.0, 0.0], 0.3, &solver_rk4(32), &exact_cfg()).unwrap();
        assert!((ll - (-1.8378770664093453)).abs() < 1e-12, "got {ll}");
        let ll = log_likelihood(&net, &[1.0, 0.0], 0.3, &solver_rk4(32), &exact_cfg()).unwrap();
        assert!((ll - (-1.8378770664093453 - 0.5)).abs() < 1e-12, "got {ll}");
    }

    #[test]
    fn negation_field_expands_by_e_with_logdet_d() {
        // f = -z integrated over [1, 0] multiplies by e; the trace
        // integral of the constant -D over that span is exactly +D.
        let d = 3;
        let net = negation_field(d);
        let s = [0.5, -1.0, 2.0];
        let (z0, logdet) =
            transform_to_base(&net, &s, 0.0, &solver_rk4(64), &exact_cfg()).unwrap();
        for (zi, si) in z0.iter().zip(&s) {
            assert!((zi - si * E).abs() < 1e-6, "z0 {zi} vs {}", si * E);
        }
        assert!((logdet - d as f64).abs() < 1e-12, "logdet {logdet}");
    }

    #[test]
    fn negation_field_likelihood_matches_change_of_variables() {
        // If z0 = e * s is standard normal, then
        // log p(s) = log N(e*s; 0, I) + D.
        let d = 2;
        let net = negation_field(d);
        let s = [0.4, -0.9];
        let ll = log_likelihood(&net, &s, 0.0, &solver_dopri(1e-9), &exact_cfg()).unwrap();
        let scaled: Vec<f64> = s.iter().map(|v| v * E).collect();
        let analytic = gaussian_log_density(&scaled) + d as f64;
        assert!((ll - analytic).abs() < 1e-3, "ll {ll} vs analytic {analytic}");
    }

    #[test]
    fn diagonal_field_divergence_by_hand() {
        // f = (2 z1, 3 z2) has trace 5 everywhere.
        let mut w = Matrix::zeros(2, 4);
        w.set(0, 0, 2.0);
        w.set(1, 1, 3.0);
        let net = Mlp::from_layers(2, vec![DenseLayer { weight: w, bias: vec![0.0; 2] }]).unwrap();
        let div = divergence_exact(&net, &[0.7, -0.2], 0.5, 0.1).unwrap();
        assert_eq!(div, 5.0);
    }

    #[test]
    fn hutchinson_is_exact_on_linear_negation() {
        // eps' (-I) eps = -D for every Rademacher probe, so any probe
        // count gives exactly -D.
        let net = negation_field(4);
        for seed in [1u64, 2, 3] {
            let div = divergence_hutchinson(&net, &[0.1, 0.2, 0.3, 0.4], 0.5, 0.5, 7, seed)
                .unwrap();
            assert!((div + 4.0).abs() < 1e-12, "got {div}");
        }
    }

    #[test]
    fn hutchinson_is_deterministic_and_converges() {
        let net = mild_net(3, 5);
        let (z, t, a) = ([0.4, -0.6, 0.2], 0.7, 0.3);
        let e1 = divergence_hutchinson(&net, &z, t, a, 50, 42).unwrap();
        let e2 = divergence_hutchinson(&net, &z, t, a, 50, 42).unwrap();
        assert_eq!(e1, e2);
        let e3 = divergence_hutchinson(&net, &z, t, a, 50, 43).unwrap();
        assert_ne!(e1, e3);

        let exact = divergence_exact(&net, &z, t, a).unwrap();
        let many = divergence_hutchinson(&net, &z, t, a, 20_000, 7).unwrap();
        assert!(
            (many - exact).abs() < 0.02,
            "estimate {many} vs exact {exact}"
        );
    }

    #[test]
    fn divergence_dispatch_matches_modes() {
        let net = mild_net(3, 9);
        let (z, t, a) = ([0.1, 0.9, -0.4], 0.2, 0.8);
        let exact = divergence_exact(&net, &z, t, a).unwrap();
        let via_cfg = divergence(&net, &z, t, a, &exact_cfg()).unwrap();
        assert_eq!(exact, via_cfg);
        let h_cfg = TraceEstimatorConfig {
            mode: TraceMode::Hutchinson,
            n_probes: 64,
            seed: 11,
        };
        let via_h = divergence(&net, &z, t, a, &h_cfg).unwrap();
        let direct = divergence_hutchinson(&net, &z, t, a, 64, 11).unwrap();
        assert_eq!(via_h, direct);
    }

    #[test]
    fn transform_round_trip_inverts() {
        let net = mild_net(4, 21);
        let s = [0.8, -0.3, 0.1, 1.2];
        let a = 0.6;
        let (z0, _) = transform_to_base(&net, &s, a, &solver_rk4(64), &exact_cfg()).unwrap();
        let back = transform_from_base(&net, &z0, a, &solver_rk4(64)).unwrap();
        for (b, si) in back.iter().zip(&s) {
            assert!((b - si).abs() < 1e-5, "round trip {b} vs {si}");
        }
    }

    #[test]
    fn zero_delta_manipulation_is_identity_up_to_tolerance() {
        let net = mild_net(4, 33);
        let s = [0.2, 0.9, -0.5, 0.05];
        let m = manipulate(&net, &s, 0.35, 0.0, &solver_rk4(32)).unwrap();
        for (mi, si) in m.iter().zip(&s) {
            assert!((mi - si).abs() < 1e-4);
        }
    }

    #[test]
    fn manipulations_compose_additively() {
        let net = mild_net(3, 55);
        let s = [0.4, -0.2, 0.7];
        let (a, d1, d2) = (0.3, 0.5, -0.2);
        let solver = solver_rk4(64);
        let two_step = {
            let first = manipulate(&net, &s, a, d1, &solver).unwrap();
            manipulate(&net, &first, a + d1, d2, &solver).unwrap()
        };
        let one_step = manipulate(&net, &s, a, d1 + d2, &solver).unwrap();
        for (x, y) in two_step.iter().zip(&one_step) {
            assert!((x - y).abs() < 1e-3, "composition {x} vs {y}");
        }
    }

    #[test]
    fn attribute_conditioning_is_live() {
        let net = mild_net(3, 77);
        let z = [0.5, 0.5, 0.5];
        let f0 = vector_field(&net, &z, 0.5, 0.0).unwrap();
        let f1 = vector_field(&net, &z, 0.5, 1.0).unwrap();
        let diff: f64 = f0.iter().zip(&f1).map(|(x, y)| (x - y).abs()).sum();
        assert!(diff > 0.0, "conditioner ignores the attribute");
    }

    #[test]
    fn likelihood_exact_vs_hutchinson_close() {
        let net = mild_net(4, 91);
        let s = [0.3, -0.4, 0.8, -0.1];
        let solver = solver_rk4(32);
        let exact = log_likelihood(&net, &s, 0.4, &solver, &exact_cfg()).unwrap();
        let hutch_cfg = TraceEstimatorConfig {
            mode: TraceMode::Hutchinson,
            n_probes: 1000,
            seed: 3,
        };
        let hutch = log_likelihood(&net, &s, 0.4, &solver, &hutch_cfg).unwrap();
        let rel = (exact - hutch).abs() / exact.abs().max(1.0);
        assert!(rel < 0.01, "exact {exact} vs hutchinson {hutch}");
    }

    #[test]
    fn adaptive_and_fixed_transforms_agree() {
        let net = mild_net(3, 101);
        let s = [0.6, -0.7, 0.2];
        let (fixed, logdet_fixed) =
            transform_to_base(&net, &s, 0.5, &solver_rk4(1024), &exact_cfg()).unwrap();
        let (adaptive, logdet_adaptive) =
            transform_to_base(&net, &s, 0.5, &solver_dopri(1e-9), &exact_cfg()).unwrap();
        for (f, ad) in fixed.iter().zip(&adaptive) {
            assert!((f - ad).abs() < 1e-7);
        }
        assert!((logdet_fixed - logdet_adaptive).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_inputs() {
        let net = Mlp::zeros(3, 4, 2);
        let solver = solver_rk4(8);
        assert!(transform_to_base(&net, &[1.0], 0.5, &solver, &exact_cfg()).is_err());
        assert!(
            transform_to_base(&net, &[1.0, f64::NAN, 0.0], 0.5, &solver, &exact_cfg()).is_err()
        );
        assert!(manipulate(&net, &[1.0, 2.0, 3.0], f64::INFINITY, 0.0, &solver).is_err());
        assert!(manipulate(&net, &[1.0, 2.0, 3.0], 0.5, f64::NAN, &solver).is_err());
        let bad_trace = TraceEstimatorConfig {
            mode: TraceMode::Hutchinson,
            n_probes: 0,
            seed: 0,
        };
        assert!(transform_to_base(&net, &[1.0, 2.0, 3.0], 0.5, &solver, &bad_trace).is_err());
    }
}
