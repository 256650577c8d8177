//! Run configuration: one TOML file drives the whole pipeline so an
//! experiment is reproducible from a single artifact. Every section is
//! optional and falls back to desk-scale defaults; `--seed` and `--out`
//! flags override the file.
//!
//! All randomness flows from the top-level seed through named stages
//! (world direction, data draws, parameter init, training, segments,
//! surrogate noise), so two runs with equal config and seed are
//! byte-identical.

use attrflow::flow::TraceMode;
use attrflow::odeint::{SolverConfig, SolverMethod};
use attrflow::attributes::{VadConfig, VadReference};
use attrflow::rng::stage_seed;
use attrflow::synthdata::SyntheticWorldConfig;
use attrflow::training::TrainingConfig;
use attrflow::{Error, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub world: WorldSection,
    pub gen: GenSection,
    pub model: ModelSection,
    pub training: TrainingSection,
    pub trace: TraceSection,
    pub solver: SolverSection,
    pub manipulate: ManipulateSection,
    pub vad: VadSection,
    pub analysis: AnalysisSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out_dir: PathBuf::from("out"),
            world: WorldSection::default(),
            gen: GenSection::default(),
            model: ModelSection::default(),
            training: TrainingSection::default(),
            trace: TraceSection::default(),
            solver: SolverSection::default(),
            manipulate: ManipulateSection::default(),
            vad: VadSection::default(),
            analysis: AnalysisSection::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldSection {
    pub dim: usize,
    pub noise_scale: f64,
}

impl Default for WorldSection {
    fn default() -> Self {
        WorldSection {
            dim: 8,
            noise_scale: 0.05,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenSection {
    pub n_train: usize,
    pub n_eval: usize,
}

impl Default for GenSection {
    fn default() -> Self {
        GenSection {
            n_train: 512,
            n_eval: 64,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub hidden_dim: usize,
    pub n_hidden_layers: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            hidden_dim: 32,
            n_hidden_layers: 2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub n_iterations: usize,
    pub n_steps: usize,
    pub checkpoint_every: usize,
    pub self_test: bool,
    pub resume: bool,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            learning_rate: 1e-3,
            batch_size: 64,
            n_iterations: 200,
            n_steps: 16,
            checkpoint_every: 0,
            self_test: true,
            resume: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceModeName {
    Exact,
    Hutchinson,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSection {
    pub mode: TraceModeName,
    pub n_probes: usize,
}

impl Default for TraceSection {
    fn default() -> Self {
        TraceSection {
            mode: TraceModeName::Hutchinson,
            n_probes: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethodName {
    Rk4,
    Dopri5,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub method: SolverMethodName,
    pub rk4_steps: usize,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            method: SolverMethodName::Rk4,
            rk4_steps: 32,
            rtol: 1e-6,
            atol: 1e-6,
            max_steps: 10_000,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManipulateSection {
    /// Attribute shifts applied during manipulation; one output file
    /// per entry.
    pub deltas: Vec<f64>,
}

impl Default for ManipulateSection {
    fn default() -> Self {
        // The evaluation sweep: -1.5 to 1.5 in increments of 0.25.
        let deltas = (-6..=6).map(|k| k as f64 * 0.25).collect();
        ManipulateSection { deltas }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VadReferenceName {
    Peak,
    Percentile95,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VadSection {
    pub relative_threshold: f64,
    pub reference: VadReferenceName,
}

impl Default for VadSection {
    fn default() -> Self {
        VadSection {
            relative_threshold: 0.05,
            reference: VadReferenceName::Percentile95,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub set_label: String,
    pub combine_signs: bool,
    /// Surrogate sequence length in frames.
    pub frames: usize,
    /// How many held-out embeddings to render for the temporal analysis.
    pub n_sequences: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            set_label: "synthetic".into(),
            combine_signs: true,
            frames: 60,
            n_sequences: 4,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.world.dim == 0 {
            return Err(Error::config("world.dim must be positive"));
        }
        if !(self.world.noise_scale > 0.0 && self.world.noise_scale.is_finite()) {
            return Err(Error::config("world.noise_scale must be positive"));
        }
        if self.gen.n_train == 0 || self.gen.n_eval == 0 {
            return Err(Error::config("gen.n_train and gen.n_eval must be positive"));
        }
        if self.model.n_hidden_layers > 0 && self.model.hidden_dim == 0 {
            return Err(Error::config("model.hidden_dim must be positive with hidden layers"));
        }
        if self.manipulate.deltas.is_empty() {
            return Err(Error::config("manipulate.deltas must not be empty"));
        }
        if !attrflow::linalg::all_finite(&self.manipulate.deltas) {
            return Err(Error::config("manipulate.deltas must be finite"));
        }
        if self.analysis.frames == 0 || self.analysis.n_sequences == 0 {
            return Err(Error::config(
                "analysis.frames and analysis.n_sequences must be positive",
            ));
        }
        self.training_config().validate()?;
        self.solver_config().validate()?;
        self.vad_config().validate()?;
        Ok(())
    }

    /// World with the direction drawn from the seed's "world" stage.
    /// The struct's own seed then keys surrogate biases, so analysis
    /// reconstructs the identical world without storing it.
    pub fn world_config(&self) -> Result<SyntheticWorldConfig> {
        SyntheticWorldConfig::with_random_direction(
            self.world.dim,
            self.world.noise_scale,
            stage_seed(self.seed, "world"),
        )
    }

    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig {
            learning_rate: self.training.learning_rate,
            batch_size: self.training.batch_size,
            n_iterations: self.training.n_iterations,
            n_steps: self.training.n_steps,
            trace_mode: match self.trace.mode {
                TraceModeName::Exact => TraceMode::Exact,
                TraceModeName::Hutchinson => TraceMode::Hutchinson,
            },
            n_probes: self.trace.n_probes,
            seed: stage_seed(self.seed, "train"),
            checkpoint_every: self.training.checkpoint_every,
            self_test: self.training.self_test,
            ..TrainingConfig::default()
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            method: match self.solver.method {
                SolverMethodName::Rk4 => SolverMethod::Rk4,
                SolverMethodName::Dopri5 => SolverMethod::Dopri5,
            },
            rk4_steps: self.solver.rk4_steps,
            rtol: self.solver.rtol,
            atol: self.solver.atol,
            max_steps: self.solver.max_steps,
        }
    }

    pub fn vad_config(&self) -> VadConfig {
        VadConfig {
            relative_threshold: self.vad.relative_threshold,
            reference: match self.vad.reference {
                VadReferenceName::Peak => VadReference::Peak,
                VadReferenceName::Percentile95 => VadReference::Percentile95,
            },
        }
    }

    // Artifact paths inside the output directory.

    pub fn train_embeddings_path(&self) -> PathBuf {
        self.out_dir.join("train.cnfe")
    }

    pub fn train_attrs_path(&self) -> PathBuf {
        self.out_dir.join("train_attrs.csv")
    }

    pub fn eval_embeddings_path(&self) -> PathBuf {
        self.out_dir.join("eval.cnfe")
    }

    pub fn eval_attrs_path(&self) -> PathBuf {
        self.out_dir.join("eval_attrs.csv")
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.out_dir.join("model.cnfp")
    }

    pub fn intermediate_checkpoint_path(&self, iteration: usize) -> PathBuf {
        self.out_dir.join(format!("model_iter{iteration}.cnfp"))
    }

    pub fn loss_curve_path(&self) -> PathBuf {
        self.out_dir.join("loss.csv")
    }

    /// Shortest round-trip float formatting keys manipulation files,
    /// so analyze re-derives the same names from the config.
    pub fn manipulated_path(&self, delta: f64) -> PathBuf {
        self.out_dir.join(format!("manip_{delta}.cnfe"))
    }

    pub fn segments_path(&self) -> PathBuf {
        self.out_dir.join("segments.csv")
    }

    pub fn delta_records_path(&self) -> PathBuf {
        self.out_dir.join("deltas.csv")
    }

    pub fn summary_path(&self) -> PathBuf {
        self.out_dir.join("summary.csv")
    }

    pub fn correlations_path(&self) -> PathBuf {
        self.out_dir.join("correlations.csv")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.manipulate.deltas.len(), 13);
        assert_eq!(cfg.manipulate.deltas[0], -1.5);
        assert_eq!(cfg.manipulate.deltas[12], 1.5);
        assert_eq!(cfg.manipulate.deltas[6], 0.0);
    }

    #[test]
    fn toml_round_trip_overrides_defaults() {
        let text = r#"
            seed = 7
            out_dir = "elsewhere"

            [world]
            dim = 4
            noise_scale = 0.1

            [training]
            n_iterations = 10

            [solver]
            method = "dopri5"

            [trace]
            mode = "exact"
            n_probes = 0
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.world.dim, 4);
        assert_eq!(cfg.training.n_iterations, 10);
        assert_eq!(cfg.solver.method, SolverMethodName::Dopri5);
        assert_eq!(cfg.trace.mode, TraceModeName::Exact);
        // Untouched sections keep defaults.
        assert_eq!(cfg.gen.n_train, 512);
        // Exact trace ignores n_probes, so 0 is fine here.
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sede = 7").is_err());
        assert!(toml::from_str::<RunConfig>("[world]\ndimension = 4").is_err());
    }

    #[test]
    fn invalid_values_fail_validation() {
        let mut cfg = RunConfig::default();
        cfg.manipulate.deltas.clear();
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.world.noise_scale = -1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.trace.n_probes = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn world_is_reconstructed_identically() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.world_config().unwrap(), cfg.world_config().unwrap());
    }

    #[test]
    fn manipulated_paths_are_stable() {
        let cfg = RunConfig::default();
        assert!(cfg.manipulated_path(-1.5).ends_with("manip_-1.5.cnfe"));
        assert!(cfg.manipulated_path(0.0).ends_with("manip_0.cnfe"));
        assert!(cfg.manipulated_path(0.25).ends_with("manip_0.25.cnfe"));
    }
}
