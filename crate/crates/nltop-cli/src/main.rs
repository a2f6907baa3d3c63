//! Command-line driver for the landscape pipeline.
//!
//! Exit codes: 0 on success, 2 for configuration/input problems (bad flags,
//! malformed TOML or sample tables, degenerate inputs detected up front),
//! 3 for runtime failures (linear solves, optimizer subproblems, geometry,
//! file I/O mid-run).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nltop::experiment::{
    analyze_samples, run_experiment, ExperimentConfig, ExperimentOutcome, IndexReport,
    StageTimings,
};
use nltop::io::{ingest_samples, write_artifacts, write_lft_demo_csv, write_json};
use nltop::lft1d::{
    biconjugate_at, default_slope_grid, lower_hull_1d, oscillating_bowl, oscillating_bowl_slope,
    Sampled1D,
};
use nltop::problem::{ObjectiveSpec, DEFAULT_RHO_MIN};
use nltop::sampler::Sample;
use nltop::Error;

#[derive(Parser)]
#[command(
    name = "nltop",
    version,
    about = "Non-linearity index for density-based topology-optimization landscapes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: sampling, embedding, envelope, index, artifacts.
    Run(RunArgs),
    /// Recompute embedding, envelope, and index from an existing sample table.
    Index(IndexArgs),
    /// Re-render the SVG views from an existing sample table.
    Render(RenderArgs),
    /// Tabulate the 1D envelope-vs-biconjugate comparison on a demo function.
    LftDemo(LftDemoArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (TOML). Defaults are used when omitted;
    /// partial files override only the keys they name.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Artifact directory (overrides any `out-dir` in the config file).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for start construction.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of optimizer starts.
    #[arg(long)]
    starts: Option<usize>,
    /// Keep evaluating live gradients after warmup instead of freezing them.
    #[arg(long)]
    no_freeze_gradient: bool,
    /// Skip the uniform-density reference group.
    #[arg(long)]
    no_reference_group: bool,
    /// Step-size cap applied once the gradient is frozen.
    #[arg(long, value_name = "ETA")]
    eta_max_after_fix: Option<f64>,
}

#[derive(Args)]
struct IndexArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Sample table to analyze. Accepts the full export header or the
    /// minimal `groupId,iteration,J,rho...` form (then the objective's clip
    /// bound from the config is reapplied).
    #[arg(long, value_name = "CSV")]
    samples: PathBuf,
    /// Artifact directory; the report is printed to stdout when omitted.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Sample table to render (same formats as `index`).
    #[arg(long, value_name = "CSV")]
    samples: PathBuf,
    /// Directory receiving surface.svg and contour.svg.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct LftDemoArgs {
    /// Number of coarse samples for the envelope/biconjugate comparison.
    #[arg(long, default_value_t = 50)]
    samples: usize,
    /// Output CSV (columns x, phi, biconj_hi, biconj_50, hull).
    #[arg(long, value_name = "FILE", default_value = "lft-demo.csv")]
    out: PathBuf,
}

/// Prints a line to stdout without panicking when the consumer closes the
/// pipe early (e.g. `nltop run | head`): a broken pipe ends the process
/// quietly, any other write failure is a real I/O error.
macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if let Err(e) = writeln!(std::io::stdout(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            eprintln!("error: {e}");
            std::process::exit(3);
        }
    }};
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Index(args) => cmd_index(args),
        Command::Render(args) => cmd_render(args),
        Command::LftDemo(args) => cmd_lft_demo(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for problems with the inputs, 3 for failures while computing.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::Ingest(_)
        | Error::TooFewSamples(_)
        | Error::CollinearEmbedding => 2,
        Error::Solver(_)
        | Error::Residual { .. }
        | Error::MmaSubproblem(_)
        | Error::Degenerate(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_) => 3,
    }
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, Error> {
    match &args.config {
        None => Ok(ExperimentConfig::default()),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Error> {
    let mut config = load_config(&args.config)?;
    if let Some(out) = args.out {
        config.out_dir = Some(out);
    }
    if let Some(seed) = args.seed {
        config.sampling.rng_seed = seed;
    }
    if let Some(starts) = args.starts {
        config.sampling.num_starts = starts;
    }
    if args.no_freeze_gradient {
        config.sampling.freeze_gradient = false;
    }
    if args.no_reference_group {
        config.sampling.include_reference_group = false;
    }
    if let Some(eta) = args.eta_max_after_fix {
        config.sampling.eta_max_after_fix = eta;
    }

    let outcome = run_experiment(&config)?;
    print_summary(&outcome);
    if let Some(dir) = &config.out_dir {
        outln!("artifacts written to {}", dir.display());
    } else {
        outln!("{}", serde_json::to_string_pretty(&outcome.report)?);
    }
    Ok(())
}

fn print_summary(outcome: &ExperimentOutcome) {
    let r = &outcome.report;
    outln!(
        "{} {}x{} {:?}: I_NL = {:.6} over {} samples ({} groups), J in [{:.6e}, {:.6e}], {} envelope faces, {} gap queries",
        r.config.preset,
        r.config.nelx,
        r.config.nely,
        r.config.objective,
        r.nonlinearity_index,
        r.num_samples,
        r.num_groups,
        r.j_min,
        r.j_max,
        r.num_envelope_faces,
        r.num_queries,
    );
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
}

/// Shared ingest-and-analyze path for `index` and `render`.
fn analyze_file(
    config: &ExperimentConfig,
    samples_path: &Path,
    expected_n: Option<usize>,
) -> Result<(ExperimentOutcome, usize), Error> {
    config.validate()?;
    let start = Instant::now();
    let ingested = ingest_samples(samples_path, DEFAULT_RHO_MIN, expected_n)?;
    let mut set = ingested.set;
    if ingested.minimal_header {
        let spec = ObjectiveSpec::new(config.objective, config.aggregation_exponent)?;
        for s in &mut set.samples {
            s.clipped_j = spec.clip(s.raw_j);
        }
    }
    let refs: Vec<&Sample> = set.samples.iter().collect();
    let analysis = analyze_samples(&refs, config.embedding, config.hull_resolution, config.exec_mode)?;
    let analysis_s = start.elapsed().as_secs_f64();

    let mut warnings = Vec::new();
    if ingested.clamped_densities > 0 {
        warnings.push(format!(
            "{} densities clamped into [{:e}, 1]",
            ingested.clamped_densities, DEFAULT_RHO_MIN
        ));
    }
    if ingested.minimal_header {
        warnings.push("minimal sample header: clip bound reapplied from the config".into());
    }
    if analysis.surface.constant_objective {
        warnings.push("all clipped objectives equal; surface flattened to 0".into());
    }
    if analysis.collinear_jitter_applied {
        warnings.push("collinear embedding jittered deterministically".into());
    }

    let report = IndexReport {
        config: config.clone(),
        config_hash: config.hash()?,
        nonlinearity_index: analysis.index.value,
        gap_min: analysis.index.min_gap,
        gap_mean: analysis.index.value,
        gap_max: analysis.index.max_gap,
        num_queries: analysis.index.num_queries,
        num_envelope_faces: analysis.envelope.faces.len(),
        flat_envelope_fallback: analysis.envelope.flat_fallback,
        num_samples: set.samples.len(),
        num_groups: set.num_groups,
        reference_group_id: set.reference_group_id,
        aborted_groups: Vec::new(),
        j_min: analysis.surface.j_min,
        j_max: analysis.surface.j_max,
        constant_objective: analysis.surface.constant_objective,
        merged_duplicate_samples: analysis.surface.merged_duplicates,
        embedding_eigenvalues: analysis.embedding.eigenvalues,
        embedding_stress_residual: analysis.embedding.stress_residual,
        negative_eigenvalue_clamped: analysis.embedding.negative_clamped,
        collinear_jitter_applied: analysis.collinear_jitter_applied,
        warnings,
    };
    let timings = StageTimings {
        sampling_s: 0.0,
        analysis_s,
        total_s: analysis_s,
    };
    let outcome = ExperimentOutcome {
        report,
        timings,
        samples: set,
        analysis,
    };
    Ok((outcome, ingested.clamped_densities))
}

fn cmd_index(args: IndexArgs) -> Result<(), Error> {
    let mut config = load_config(&args.config)?;
    // The table's design-vector length must match the mesh, but only when the
    // user pinned one down explicitly.
    let expected_n = args.config.config.is_some().then(|| config.nelx * config.nely);
    config.out_dir = None;
    let (outcome, _) = analyze_file(&config, &args.samples, expected_n)?;
    match &args.out {
        Some(dir) => {
            write_artifacts(dir, &outcome, config.contour_bands)?;
            print_summary(&outcome);
            outln!("artifacts written to {}", dir.display());
        }
        None => {
            outln!("{}", serde_json::to_string_pretty(&outcome.report)?);
        }
    }
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<(), Error> {
    let mut config = load_config(&args.config)?;
    let expected_n = args.config.config.is_some().then(|| config.nelx * config.nely);
    config.out_dir = None;
    let (outcome, _) = analyze_file(&config, &args.samples, expected_n)?;
    fs::create_dir_all(&args.out)?;
    let svg = nltop::svg::SvgOptions {
        bands: config.contour_bands,
        ..nltop::svg::SvgOptions::default()
    };
    nltop::svg::write_surface_svg(
        &args.out.join("surface.svg"),
        &outcome.analysis.surface,
        &outcome.analysis.envelope,
        &outcome.samples,
        &outcome.analysis.embedding.coords,
        &svg,
    )?;
    nltop::svg::write_contour_svg(
        &args.out.join("contour.svg"),
        &outcome.analysis.surface,
        &outcome.samples,
        &outcome.analysis.embedding.coords,
        &svg,
    )?;
    write_json(&args.out.join("report.json"), &outcome.report)?;
    print_summary(&outcome);
    outln!("views written to {}", args.out.display());
    Ok(())
}

fn cmd_lft_demo(args: LftDemoArgs) -> Result<(), Error> {
    if args.samples < 3 {
        return Err(Error::InvalidParameter(
            "the demo needs at least 3 samples".into(),
        ));
    }
    // Dense reference: the function on 2001 points, biconjugate through a
    // 4001-slope grid.
    let hi = Sampled1D::from_fn(2001, oscillating_bowl)?;
    let slopes_hi = default_slope_grid(&hi, 4001)?;
    let biconj_hi = biconjugate_at(&hi, &slopes_hi, &hi.xs)?;

    // Equal-budget competitors: the same n samples feed both constructions,
    // and the biconjugate additionally gets the exact gradient at each one.
    let coarse = Sampled1D::from_fn(args.samples, oscillating_bowl)?;
    let grad_slopes: Vec<f64> = coarse.xs.iter().map(|&x| oscillating_bowl_slope(x)).collect();
    let biconj_coarse = biconjugate_at(&coarse, &grad_slopes, &hi.xs)?;
    let hull = lower_hull_1d(&coarse)?;
    let hull_values: Vec<f64> = hi.xs.iter().map(|&x| hull.eval(x)).collect();

    write_lft_demo_csv(&args.out, &hi.xs, &hi.values, &biconj_hi, &biconj_coarse, &hull_values)?;

    let sup = |approx: &[f64]| {
        approx
            .iter()
            .zip(&biconj_hi)
            .map(|(a, r)| (a - r).abs())
            .fold(0.0_f64, f64::max)
    };
    outln!(
        "{} samples: sup|hull - reference| = {:.6e}, sup|biconjugate - reference| = {:.6e}",
        args.samples,
        sup(&hull_values),
        sup(&biconj_coarse),
    );
    outln!("table written to {}", args.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn error_classes_map_to_documented_exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Ingest("x".into())), 2);
        assert_eq!(exit_code(&Error::TooFewSamples(2)), 2);
        assert_eq!(exit_code(&Error::Solver("x".into())), 3);
        assert_eq!(exit_code(&Error::Degenerate("x".into())), 3);
    }
}
