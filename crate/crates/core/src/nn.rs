//! Dense-network substrate for the flow's vector field.
//!
//! The field `f(z, t, a)` is a plain MLP over the concatenated input
//! `[z; t; a]` with tanh hidden activations and an identity output layer.
//! Besides the forward pass the module provides:
//!
//! - exact reverse-mode vector–Jacobian products ([`Mlp::vjp`]),
//! - forward tangent propagation used for divergence (trace) evaluation
//!   ([`Mlp::forward_div`]), and
//! - a reverse pass over the combined primal + tangent computation
//!   ([`Mlp::div_vjp_into`]), which yields the second-order terms needed
//!   to differentiate a trace-augmented objective,
//! - a central finite-difference oracle ([`finite_difference_gradient`]).
//!
//! All reductions run in fixed index order; identical inputs produce
//! bit-identical outputs.

use crate::error::{Error, Result};
use crate::linalg::{all_finite, Matrix};
use crate::rng;
use rand::distributions::{Distribution, Uniform};

/// One dense layer `u = W h + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseLayer {
            weight: Matrix::zeros(rows, cols),
            bias: vec![0.0; rows],
        }
    }
}

/// MLP parameters for the conditional vector field.
///
/// Input dimension is `embedding_dim + 2` (embedding, time scalar,
/// attribute scalar); output dimension equals `embedding_dim`. Hidden
/// layers share one width. A network with zero hidden layers is a single
/// affine map, which is handy for linear-flow fixtures.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    embedding_dim: usize,
    hidden_dim: usize,
    layers: Vec<DenseLayer>,
}

/// Gradients of a scalar with respect to the network inputs.
#[derive(Debug, Clone)]
pub struct InputGrads {
    pub z: Vec<f64>,
    pub t: f64,
    pub a: f64,
}

/// Recorded primal and tangent values of one field + divergence
/// evaluation, sufficient to replay the exact reverse pass.
#[derive(Debug, Clone)]
pub struct DivTape {
    /// acts[0] = input x, acts[i+1] = tanh output of hidden layer i.
    acts: Vec<Vec<f64>>,
    /// taus[k][i] = tangent at level i for probe k.
    taus: Vec<Vec<Vec<f64>>>,
    /// ms[k][i] = pre-gate tangent W_i taus[k][i] for hidden layer i.
    ms: Vec<Vec<Vec<f64>>>,
    /// Probe vectors in embedding space.
    probes: Vec<Vec<f64>>,
    /// Combination weight (1 for a basis sum, 1/K for a probe mean).
    weight: f64,
    pub output: Vec<f64>,
    pub divergence: f64,
}

impl Mlp {
    /// Network with `n_hidden` tanh layers of width `hidden_dim`.
    /// Weights are drawn uniform in `(-1/sqrt(fan_in), +1/sqrt(fan_in))`;
    /// the output layer is scaled by 1e-2 so the initial flow is
    /// near-identity.
    pub fn with_init(
        embedding_dim: usize,
        hidden_dim: usize,
        n_hidden: usize,
        seed: u64,
    ) -> Result<Self> {
        if embedding_dim == 0 {
            return Err(Error::config("embedding_dim must be positive"));
        }
        if n_hidden > 0 && hidden_dim == 0 {
            return Err(Error::config("hidden_dim must be positive"));
        }
        let mut rng = rng::keyed_rng(seed, &[0x6d6c_7069]);
        let dims = layer_dims(embedding_dim, hidden_dim, n_hidden);
        let n_layers = dims.len() - 1;
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (rows, cols) = (dims[l + 1], dims[l]);
            let bound = 1.0 / (cols as f64).sqrt();
            let dist = Uniform::new(-bound, bound);
            let scale = if l == n_layers - 1 { 1e-2 } else { 1.0 };
            let data = (0..rows * cols)
                .map(|_| scale * dist.sample(&mut rng))
                .collect();
            let bias = (0..rows).map(|_| scale * dist.sample(&mut rng)).collect();
            layers.push(DenseLayer {
                weight: Matrix::from_vec(rows, cols, data)?,
                bias,
            });
        }
        Ok(Mlp {
            embedding_dim,
            hidden_dim: if n_hidden > 0 { hidden_dim } else { 0 },
            layers,
        })
    }

    /// All-zero network of the same architecture scheme.
    pub fn zeros(embedding_dim: usize, hidden_dim: usize, n_hidden: usize) -> Self {
        let dims = layer_dims(embedding_dim, hidden_dim, n_hidden);
        let layers = (0..dims.len() - 1)
            .map(|l| DenseLayer::zeros(dims[l + 1], dims[l]))
            .collect();
        Mlp {
            embedding_dim,
            hidden_dim: if n_hidden > 0 { hidden_dim } else { 0 },
            layers,
        }
    }

    /// Builds a network from explicit layers, validating the dimension
    /// chain: input `D + 2`, output `D`, uniform hidden width.
    pub fn from_layers(embedding_dim: usize, layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("network needs at least one layer"));
        }
        let input_dim = embedding_dim + 2;
        if layers[0].weight.cols() != input_dim {
            return Err(Error::config(format!(
                "first layer expects {input_dim} inputs, got {}",
                layers[0].weight.cols()
            )));
        }
        let last = layers.len() - 1;
        if layers[last].weight.rows() != embedding_dim {
            return Err(Error::config(format!(
                "output layer must produce {embedding_dim} values, got {}",
                layers[last].weight.rows()
            )));
        }
        let hidden_dim = if layers.len() == 1 {
            0
        } else {
            layers[0].weight.rows()
        };
        for (i, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.weight.rows() {
                return Err(Error::config(format!("layer {i}: bias/weight row mismatch")));
            }
            if !all_finite(&layer.bias) {
                return Err(Error::config(format!("layer {i}: non-finite bias")));
            }
            if i > 0 && layer.weight.cols() != hidden_dim {
                return Err(Error::config(format!(
                    "layer {i}: expected {hidden_dim} inputs, got {}",
                    layer.weight.cols()
                )));
            }
            if i > 0 && i < last && layer.weight.rows() != hidden_dim {
                return Err(Error::config(format!(
                    "layer {i}: hidden width must be uniform ({hidden_dim})"
                )));
            }
        }
        Ok(Mlp {
            embedding_dim,
            hidden_dim,
            layers,
        })
    }

    #[inline]
    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    #[inline]
    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    #[inline]
    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Parameter count over all layers.
    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.data().len() + l.bias.len())
            .sum()
    }

    /// Same-shape zero buffer, used for gradients and optimizer moments.
    pub fn zeros_like(&self) -> Mlp {
        Mlp {
            embedding_dim: self.embedding_dim,
            hidden_dim: self.hidden_dim,
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.weight.rows(), l.weight.cols()))
                .collect(),
        }
    }

    /// Flat view of all parameters, weights before bias per layer.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.data().iter().chain(l.bias.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.data_mut().iter_mut().chain(l.bias.iter_mut()))
    }

    fn check_input(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.embedding_dim {
            return Err(Error::config(format!(
                "embedding has length {}, network expects {}",
                z.len(),
                self.embedding_dim
            )));
        }
        Ok(())
    }

    fn concat_input(&self, z: &[f64], t: f64, a: f64) -> Vec<f64> {
        let mut x = Vec::with_capacity(z.len() + 2);
        x.extend_from_slice(z);
        x.push(t);
        x.push(a);
        x
    }

    /// Evaluates the vector field `f(z, t, a)`.
    pub fn forward(&self, z: &[f64], t: f64, a: f64) -> Result<Vec<f64>> {
        self.check_input(z)?;
        let mut h = self.concat_input(z, t, a);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut u = layer.bias.clone();
            layer.weight.matvec_into_add(&h, &mut u);
            if i < last {
                for v in &mut u {
                    *v = v.tanh();
                }
            }
            h = u;
        }
        Ok(h)
    }

    /// Reverse-mode gradients of `<cotangent, forward(z, t, a)>` with
    /// respect to all parameters and inputs.
    pub fn vjp(&self, z: &[f64], t: f64, a: f64, cotangent: &[f64]) -> Result<(Mlp, InputGrads)> {
        self.check_input(z)?;
        if cotangent.len() != self.embedding_dim {
            return Err(Error::config(format!(
                "cotangent has length {}, expected {}",
                cotangent.len(),
                self.embedding_dim
            )));
        }
        let tape = self.forward_div_tape(z, t, a, &[], 1.0)?;
        let mut grads = self.zeros_like();
        let inputs = self.div_vjp_into(&tape, cotangent, 0.0, &mut grads);
        Ok((grads, inputs))
    }

    /// Forward pass with divergence accumulation, no tape.
    ///
    /// `probes` are directions in embedding space; the divergence
    /// estimate is `weight * sum_k <probe_k, (df/dz) probe_k>`. With the
    /// canonical basis and weight 1 this is the exact Jacobian trace.
    pub fn forward_div(
        &self,
        z: &[f64],
        t: f64,
        a: f64,
        probes: &[Vec<f64>],
        weight: f64,
    ) -> Result<(Vec<f64>, f64)> {
        self.check_input(z)?;
        let last = self.layers.len() - 1;
        let mut h = self.concat_input(z, t, a);
        let mut taus: Vec<Vec<f64>> = probes.iter().map(|p| self.pad_probe(p)).collect();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut u = layer.bias.clone();
            layer.weight.matvec_into_add(&h, &mut u);
            if i < last {
                for v in &mut u {
                    *v = v.tanh();
                }
                for tau in &mut taus {
                    let mut m = vec![0.0; layer.weight.rows()];
                    layer.weight.matvec(tau, &mut m);
                    for (mv, hv) in m.iter_mut().zip(&u) {
                        *mv *= 1.0 - hv * hv;
                    }
                    *tau = m;
                }
            } else {
                for tau in &mut taus {
                    let mut g = vec![0.0; layer.weight.rows()];
                    layer.weight.matvec(tau, &mut g);
                    *tau = g;
                }
            }
            h = u;
        }
        let mut div = 0.0;
        for (probe, g) in probes.iter().zip(&taus) {
            div += crate::linalg::dot(probe, g);
        }
        Ok((h, weight * div))
    }

    /// Like [`Mlp::forward_div`] but records everything needed for the
    /// exact reverse pass over the combined primal + tangent computation.
    pub fn forward_div_tape(
        &self,
        z: &[f64],
        t: f64,
        a: f64,
        probes: &[Vec<f64>],
        weight: f64,
    ) -> Result<DivTape> {
        self.check_input(z)?;
        for p in probes {
            if p.len() != self.embedding_dim {
                return Err(Error::config("probe dimension mismatch"));
            }
        }
        let last = self.layers.len() - 1;
        let n_probes = probes.len();

        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        acts.push(self.concat_input(z, t, a));
        for (i, layer) in self.layers.iter().enumerate().take(last) {
            let _ = i;
            let mut u = layer.bias.clone();
            layer.weight.matvec_into_add(acts.last().unwrap(), &mut u);
            for v in &mut u {
                *v = v.tanh();
            }
            acts.push(u);
        }
        let out_layer = &self.layers[last];
        let mut output = out_layer.bias.clone();
        out_layer.weight.matvec_into_add(acts.last().unwrap(), &mut output);

        let mut taus: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n_probes);
        let mut ms: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n_probes);
        let mut div = 0.0;
        for probe in probes {
            let mut tau_levels = Vec::with_capacity(self.layers.len());
            let mut m_levels = Vec::with_capacity(last);
            tau_levels.push(self.pad_probe(probe));
            for (i, layer) in self.layers.iter().enumerate().take(last) {
                let mut m = vec![0.0; layer.weight.rows()];
                layer.weight.matvec(&tau_levels[i], &mut m);
                let h = &acts[i + 1];
                let tau_next: Vec<f64> = m
                    .iter()
                    .zip(h)
                    .map(|(mv, hv)| mv * (1.0 - hv * hv))
                    .collect();
                m_levels.push(m);
                tau_levels.push(tau_next);
            }
            let mut g = vec![0.0; self.embedding_dim];
            out_layer.weight.matvec(&tau_levels[last], &mut g);
            div += crate::linalg::dot(probe, &g);
            taus.push(tau_levels);
            ms.push(m_levels);
        }

        Ok(DivTape {
            acts,
            taus,
            ms,
            probes: probes.to_vec(),
            weight,
            output,
            divergence: weight * div,
        })
    }

    /// Reverse pass over the taped evaluation: accumulates gradients of
    /// `<y_bar, output> + div_bar * divergence` into `grads` and returns
    /// the input gradients.
    pub fn div_vjp_into(
        &self,
        tape: &DivTape,
        y_bar: &[f64],
        div_bar: f64,
        grads: &mut Mlp,
    ) -> InputGrads {
        let last = self.layers.len() - 1;
        let n_probes = tape.probes.len();
        let out_layer = &self.layers[last];
        let gl = &mut grads.layers[last];

        // Output layer, primal side.
        gl.weight.add_outer(y_bar, &tape.acts[last]);
        crate::linalg::axpy(1.0, y_bar, &mut gl.bias);
        let mut hbar = vec![0.0; out_layer.weight.cols()];
        out_layer.weight.matvec_transpose_add(y_bar, &mut hbar);

        // Output layer, tangent side.
        let mut taubars: Vec<Vec<f64>> = Vec::with_capacity(n_probes);
        for k in 0..n_probes {
            let gbar: Vec<f64> = tape.probes[k]
                .iter()
                .map(|p| div_bar * tape.weight * p)
                .collect();
            gl.weight.add_outer(&gbar, &tape.taus[k][last]);
            let mut taubar = vec![0.0; out_layer.weight.cols()];
            out_layer.weight.matvec_transpose_add(&gbar, &mut taubar);
            taubars.push(taubar);
        }

        for i in (0..last).rev() {
            let layer = &self.layers[i];
            let h = &tape.acts[i + 1];
            // sigma = 1 - h^2 is the tanh gate at this level.
            let sigma: Vec<f64> = h.iter().map(|hv| 1.0 - hv * hv).collect();

            let mut sigbar = vec![0.0; h.len()];
            for k in 0..n_probes {
                for ((s, tb), m) in sigbar.iter_mut().zip(&taubars[k]).zip(&tape.ms[k][i]) {
                    *s += tb * m;
                }
            }
            let gl = &mut grads.layers[i];
            for k in 0..n_probes {
                let mbar: Vec<f64> = taubars[k]
                    .iter()
                    .zip(&sigma)
                    .map(|(tb, s)| tb * s)
                    .collect();
                gl.weight.add_outer(&mbar, &tape.taus[k][i]);
                let mut next = vec![0.0; layer.weight.cols()];
                layer.weight.matvec_transpose_add(&mbar, &mut next);
                taubars[k] = next;
            }

            // Gate depends on h: sigma = 1 - h^2.
            for ((hb, hv), sb) in hbar.iter_mut().zip(h).zip(&sigbar) {
                *hb += -2.0 * hv * sb;
            }
            // Primal tanh layer.
            let u_bar: Vec<f64> = hbar.iter().zip(&sigma).map(|(hb, s)| hb * s).collect();
            gl.weight.add_outer(&u_bar, &tape.acts[i]);
            crate::linalg::axpy(1.0, &u_bar, &mut gl.bias);
            let mut next = vec![0.0; layer.weight.cols()];
            layer.weight.matvec_transpose_add(&u_bar, &mut next);
            hbar = next;
        }

        let d = self.embedding_dim;
        InputGrads {
            z: hbar[..d].to_vec(),
            t: hbar[d],
            a: hbar[d + 1],
        }
    }

    fn pad_probe(&self, probe: &[f64]) -> Vec<f64> {
        let mut padded = Vec::with_capacity(self.embedding_dim + 2);
        padded.extend_from_slice(probe);
        padded.push(0.0);
        padded.push(0.0);
        padded
    }
}

/// Layer dimension chain for the uniform-width scheme.
fn layer_dims(embedding_dim: usize, hidden_dim: usize, n_hidden: usize) -> Vec<usize> {
    let mut dims = Vec::with_capacity(n_hidden + 2);
    dims.push(embedding_dim + 2);
    for _ in 0..n_hidden {
        dims.push(hidden_dim);
    }
    dims.push(embedding_dim);
    dims
}

/// Canonical basis directions in embedding space.
pub fn basis_probes(dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        })
        .collect()
}

/// Central finite-difference gradient of a scalar loss with respect to
/// every parameter entry. The verification oracle for all analytic
/// gradients in this crate.
pub fn finite_difference_gradient<F>(lossfn: F, params: &Mlp, step: f64) -> Result<Mlp>
where
    F: Fn(&Mlp) -> Result<f64>,
{
    if step <= 0.0 {
        return Err(Error::config("finite-difference step must be positive"));
    }
    let n = params.n_params();
    let mut grads = params.zeros_like();
    for i in 0..n {
        let mut plus = params.clone();
        *plus.params_mut().nth(i).unwrap() += step;
        let loss_plus = lossfn(&plus)?;
        let mut minus = params.clone();
        *minus.params_mut().nth(i).unwrap() -= step;
        let loss_minus = lossfn(&minus)?;
        if !loss_plus.is_finite() || !loss_minus.is_finite() {
            return Err(Error::NonFinite {
                context: "finite-difference loss evaluation".into(),
                at: Some(i),
            });
        }
        *grads.params_mut().nth(i).unwrap() = (loss_plus - loss_minus) / (2.0 * step);
    }
    Ok(grads)
}

impl Matrix {
    /// `out += A x`, with `out` pre-seeded (bias).
    pub(crate) fn matvec_into_add(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols());
        debug_assert_eq!(out.len(), self.rows());
        for (r, out_r) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (w, xi) in self.row(r).iter().zip(x) {
                acc += w * xi;
            }
            *out_r += acc;
        }
    }
}
