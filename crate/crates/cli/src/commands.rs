//! Pipeline commands. Each reads its inputs from the configured output
//! directory, writes artifacts atomically, and prints a short summary
//! to stdout. Re-running any command with identical config and seed
//! reproduces its outputs byte for byte.

use crate::config::RunConfig;
use attrflow::analysis::{categorize, mae_delta, summarize, CorrelationReport, DeltaRecord};
use attrflow::attributes::{energy_vad, global_attribute};
use attrflow::linalg::Matrix;
use attrflow::nn::Mlp;
use attrflow::rng::{mix, stage_seed};
use attrflow::synthdata::{
    gen_frame_probs, gen_segments, gen_speaker_dataset, max_feasible_attribute,
    recover_attribute, surrogate_synthesize,
};
use attrflow::training::{gradient_self_test, train_with_callback, Dataset};
use attrflow::{flow, io, Error, Result};

fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))
}

/// Generates the training and held-out datasets.
pub fn cmd_gen(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let mut world = cfg.world_config()?;

    world.seed = stage_seed(cfg.seed, "gen-train");
    let train = gen_speaker_dataset(&world, cfg.gen.n_train)?;
    io::write_embeddings(&cfg.train_embeddings_path(), train.embeddings())?;
    io::write_attribute_sidecar(&cfg.train_attrs_path(), train.attributes())?;

    world.seed = stage_seed(cfg.seed, "gen-eval");
    let eval = gen_speaker_dataset(&world, cfg.gen.n_eval)?;
    io::write_embeddings(&cfg.eval_embeddings_path(), eval.embeddings())?;
    io::write_attribute_sidecar(&cfg.eval_attrs_path(), eval.attributes())?;

    println!(
        "generated datasets: train N={} eval N={} D={} seed={}",
        train.len(),
        eval.len(),
        train.dim(),
        cfg.seed
    );
    Ok(())
}

fn load_dataset(cfg: &RunConfig, which: &str) -> Result<Dataset> {
    let (emb_path, attr_path) = match which {
        "train" => (cfg.train_embeddings_path(), cfg.train_attrs_path()),
        _ => (cfg.eval_embeddings_path(), cfg.eval_attrs_path()),
    };
    let embeddings = io::read_embeddings(&emb_path)?;
    let attrs = io::parse_attribute_sidecar(&io::read_text(&attr_path)?)?;
    Dataset::new(embeddings, attrs)
}

/// Trains the flow by maximum likelihood and writes the checkpoint and
/// loss curve. With `training.resume` the existing checkpoint seeds the
/// parameters (optimizer moments start fresh).
pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let dataset = load_dataset(cfg, "train")?;
    let init = if cfg.training.resume {
        let params = io::read_checkpoint(&cfg.checkpoint_path())?;
        if params.embedding_dim() != dataset.dim() {
            return Err(Error::config(format!(
                "checkpoint dimension {} does not match dataset dimension {}",
                params.embedding_dim(),
                dataset.dim()
            )));
        }
        params
    } else {
        Mlp::with_init(
            dataset.dim(),
            cfg.model.hidden_dim,
            cfg.model.n_hidden_layers,
            stage_seed(cfg.seed, "init"),
        )?
    };

    let tc = cfg.training_config();
    let outcome = train_with_callback(init, &dataset, &tc, |iteration, params, _loss| {
        io::write_checkpoint(&cfg.intermediate_checkpoint_path(iteration), params)
    })?;
    io::write_checkpoint(&cfg.checkpoint_path(), &outcome.params)?;
    io::write_loss_curve(&cfg.loss_curve_path(), &outcome.loss_curve)?;

    match outcome.loss_curve.last() {
        Some(loss) => println!(
            "trained {} iterations, final nll {loss:.6}, checkpoint {}",
            outcome.loss_curve.len(),
            cfg.checkpoint_path().display()
        ),
        None => println!(
            "no iterations requested, wrote initial parameters to {}",
            cfg.checkpoint_path().display()
        ),
    }
    Ok(())
}

/// Applies every configured shift to the held-out embeddings, one
/// output file per shift.
pub fn cmd_manipulate(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let params = io::read_checkpoint(&cfg.checkpoint_path())?;
    let eval = load_dataset(cfg, "eval")?;
    if params.embedding_dim() != eval.dim() {
        return Err(Error::config(format!(
            "checkpoint dimension {} does not match embeddings dimension {}",
            params.embedding_dim(),
            eval.dim()
        )));
    }
    let solver = cfg.solver_config();
    for &delta in &cfg.manipulate.deltas {
        let rows: Vec<Vec<f64>> = (0..eval.len())
            .map(|i| flow::manipulate(&params, eval.embedding(i), eval.attribute(i), delta, &solver))
            .collect::<Result<_>>()?;
        io::write_embeddings(&cfg.manipulated_path(delta), &Matrix::from_rows(rows)?)?;
    }
    println!(
        "manipulated {} embeddings across {} shifts into {}",
        eval.len(),
        cfg.manipulate.deltas.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

/// Temporal-delta and correlation analysis over the manipulation sweep.
///
/// Surrogate sequences for original and manipulated embeddings share
/// segments and noise seed, so frame deltas isolate the embedding
/// change. Correlations relate the applied shift and the attribute
/// recovered from manipulated embeddings, plus a VAD closure check on
/// synthetic frame probabilities.
pub fn cmd_analyze(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let world = cfg.world_config()?;
    let eval = load_dataset(cfg, "eval")?;
    if eval.dim() != world.dim {
        return Err(Error::config(format!(
            "embeddings dimension {} does not match world dimension {}",
            eval.dim(),
            world.dim
        )));
    }
    let manipulated: Vec<(f64, Matrix)> = cfg
        .manipulate
        .deltas
        .iter()
        .map(|&delta| {
            let m = io::read_embeddings(&cfg.manipulated_path(delta))?;
            if m.rows() != eval.len() || m.cols() != eval.dim() {
                return Err(Error::config(format!(
                    "manipulated file for shift {delta} has shape {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    eval.len(),
                    eval.dim()
                )));
            }
            Ok((delta, m))
        })
        .collect::<Result<_>>()?;

    let frames = cfg.analysis.frames;
    let segments = gen_segments(frames, stage_seed(cfg.seed, "segments"))?;
    io::write_segments(&cfg.segments_path(), &segments)?;
    let surrogate_seed = stage_seed(cfg.seed, "surrogate");

    let mut records: Vec<DeltaRecord> = Vec::new();
    let n_sequences = cfg.analysis.n_sequences.min(eval.len());
    for i in 0..n_sequences {
        let original =
            surrogate_synthesize(&world, eval.embedding(i), &segments, frames, surrogate_seed)?;
        for (delta, matrix) in &manipulated {
            let manip =
                surrogate_synthesize(&world, matrix.row(i), &segments, frames, surrogate_seed)?;
            let deltas_t = mae_delta(&original, &manip)?;
            records.extend(categorize(&deltas_t, &segments, *delta)?);
        }
    }
    io::write_delta_records(&cfg.delta_records_path(), &records)?;

    let grid: Vec<f64> = {
        let mut g: Vec<f64> = cfg
            .manipulate
            .deltas
            .iter()
            .map(|d| if cfg.analysis.combine_signs { d.abs() } else { *d })
            .collect();
        g.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
        g.dedup();
        g
    };
    let table = summarize(&records, &cfg.analysis.set_label, &grid, cfg.analysis.combine_signs)?;
    io::write_summary(&cfg.summary_path(), &table)?;

    let mut report = CorrelationReport::default();
    let mut shifts = Vec::new();
    let mut targets = Vec::new();
    let mut recovered = Vec::new();
    for (delta, matrix) in &manipulated {
        for i in 0..eval.len() {
            shifts.push(*delta);
            targets.push(eval.attribute(i) + delta);
            recovered.push(recover_attribute(&world, matrix.row(i)));
        }
    }
    // A single-shift sweep leaves the shift constant; skip those
    // entries rather than failing the whole analysis.
    let mut push_if_defined = |name: &str, x: &[f64], y: &[f64]| -> Result<()> {
        match report.push(name, x, y) {
            Ok(()) | Err(Error::UndefinedStatistic(_)) => Ok(()),
            Err(e) => Err(e),
        }
    };
    push_if_defined("shift_vs_recovered", &shifts, &recovered)?;
    push_if_defined("target_vs_recovered", &targets, &recovered)?;

    let unmanipulated: Vec<f64> = (0..eval.len())
        .map(|i| recover_attribute(&world, eval.embedding(i)))
        .collect();
    push_if_defined("attribute_vs_recovered_unmanipulated", eval.attributes(), &unmanipulated)?;

    // Closure through the frame-feature path: requested attribute vs
    // the value read back through VAD masking, scaled into the range
    // this segmentation can express.
    let vad = cfg.vad_config();
    let feasible = max_feasible_attribute(&segments, frames)?;
    let mut requested = Vec::with_capacity(eval.len());
    let mut read_back = Vec::with_capacity(eval.len());
    for i in 0..eval.len() {
        let a = eval.attribute(i) * 0.99 * feasible;
        let features = gen_frame_probs(
            a,
            frames,
            &segments,
            mix(stage_seed(cfg.seed, "probs"), &[i as u64]),
        )?;
        let mask = energy_vad(&features, &vad)?;
        requested.push(a);
        read_back.push(global_attribute(&features, &mask)?);
    }
    push_if_defined("vad_attribute_closure", &requested, &read_back)?;

    io::write_correlations(&cfg.correlations_path(), &report)?;

    print!("{}", table.render_text());
    println!();
    print!("{}", report.render_text());
    println!(
        "analyzed {n_sequences} sequences x {} shifts, reports in {}",
        manipulated.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

/// Standalone finite-difference gate over the analytic gradient.
pub fn cmd_grad_check(tolerance: f64) -> Result<()> {
    let worst = gradient_self_test(tolerance)?;
    println!("gradient check passed: max relative error {worst:.3e} (tolerance {tolerance:.1e})");
    Ok(())
}
