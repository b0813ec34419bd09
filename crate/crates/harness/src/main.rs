//! `lsbm`: sampling, inference, and phase-diagram experiments for
//! edge-labeled two-module networks.
//!
//! Every subcommand reads a JSON configuration file, derives all randomness
//! from `--seed`, writes its outputs (plus a `config_echo.json`) into
//! `--out-dir`, and prints a one-line summary. Failures print a JSON error
//! record to stderr and exit with status 1.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lsbm_core::bp::{BpConfig, EstimatedAffinities, InitMode};
use lsbm_core::em::{run_em, trajectory_to_csv as core_trajectory_csv, EmConfig};
use lsbm_core::graph::{parse_edge_list, LabeledGraph};
use lsbm_core::phase;
use lsbm_core::sbm::{
    assignment_to_text, parse_assignment, sample_instance, EnsembleParams, SamplerOptions,
};
use lsbm_core::spectral::{
    build_nb_operator, empirical_spectrum, spectrum_to_csv, summary_to_json, SpectrumMode,
};
use lsbm_harness::experiments::{
    overlap_medians_to_csv, overlap_samples_to_csv, phase_sweep_to_csv, run_overlap_sweep,
    run_phase_sweep, run_trajectory, trajectory_to_csv, OverlapSweepConfig, PhaseSweepConfig,
    TrajectoryConfig,
};
use lsbm_harness::seeding::split_seed;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "lsbm",
    version,
    about = "Sampling, inference, and phase-diagram experiments for edge-labeled two-module networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Base seed; all randomness derives from it deterministically.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Worker thread count (defaults to the logical CPU count).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a planted instance and write it as text files.
    Sample(CommonArgs),
    /// Learn strengths with EM on a sampled or loaded instance.
    Em(CommonArgs),
    /// Evaluate the analytic detectability thresholds over a strength grid.
    Sweep(CommonArgs),
    /// Record one EM learning trajectory with stability diagnostics.
    Trajectory(CommonArgs),
    /// Measure overlap distributions along a swept ensemble parameter.
    Histogram(CommonArgs),
    /// Compute a weighted non-backtracking spectrum.
    Spectrum(CommonArgs),
    /// Print the analytic phase verdict for one parameter set.
    Verdict(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::Em(_) => "em",
            Command::Sweep(_) => "sweep",
            Command::Trajectory(_) => "trajectory",
            Command::Histogram(_) => "histogram",
            Command::Spectrum(_) => "spectrum",
            Command::Verdict(_) => "verdict",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Sample(a)
            | Command::Em(a)
            | Command::Sweep(a)
            | Command::Trajectory(a)
            | Command::Histogram(a)
            | Command::Spectrum(a)
            | Command::Verdict(a) => a,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(summary) => {
            println!("{}", summary);
            ExitCode::SUCCESS
        }
        Err(err) => {
            let record = serde_json::json!({
                "command": cli.command.name(),
                "error": format!("{:#}", err),
            });
            eprintln!("{}", record);
            ExitCode::FAILURE
        }
    }
}

fn run(command: &Command) -> Result<String> {
    let args = command.args();
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("initializing the worker pool")?;
    }
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating output directory {}", args.out_dir.display()))?;
    match command {
        Command::Sample(a) => cmd_sample(a),
        Command::Em(a) => cmd_em(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Trajectory(a) => cmd_trajectory(a),
        Command::Histogram(a) => cmd_histogram(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Verdict(a) => cmd_verdict(a),
    }
}

fn read_config<T: DeserializeOwned + Serialize>(args: &CommonArgs, command: &str) -> Result<T> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let config: T = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", args.config.display()))?;
    let echo = serde_json::json!({
        "command": command,
        "seed": args.seed,
        "config": serde_json::to_value(&config)?,
    });
    write_text(&args.out_dir, "config_echo.json", &pretty(&echo)?)?;
    Ok(config)
}

fn write_text(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn pretty(value: &serde_json::Value) -> Result<String> {
    Ok(format!("{}\n", serde_json::to_string_pretty(value)?))
}

fn default_init_mode() -> InitMode {
    InitMode::UniformRandom
}

/// Instance source shared by `em` and `spectrum`: either ensemble
/// parameters to sample from, or files to load.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct InstanceSource {
    #[serde(default)]
    num_vertices: Option<usize>,
    #[serde(default)]
    degrees: Option<Vec<f64>>,
    #[serde(default)]
    strengths: Option<Vec<f64>>,
    #[serde(default)]
    graph_file: Option<PathBuf>,
    #[serde(default)]
    assignment_file: Option<PathBuf>,
    #[serde(default)]
    sampler: SamplerOptions,
}

struct ResolvedInstance {
    graph: LabeledGraph,
    assignment: Option<Vec<u8>>,
    params: Option<EnsembleParams>,
}

impl InstanceSource {
    fn resolve(&self, graph_seed: u64) -> Result<ResolvedInstance> {
        if let Some(path) = &self.graph_file {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading graph {}", path.display()))?;
            let graph = parse_edge_list(&text)?;
            let assignment = match &self.assignment_file {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading assignment {}", path.display()))?;
                    Some(parse_assignment(&text)?)
                }
                None => None,
            };
            return Ok(ResolvedInstance { graph, assignment, params: None });
        }
        let (Some(n), Some(degrees), Some(strengths)) =
            (self.num_vertices, &self.degrees, &self.strengths)
        else {
            bail!("config needs either graph_file or num_vertices + degrees + strengths");
        };
        let params = EnsembleParams::two_module(degrees.clone(), strengths.clone())?;
        let instance = sample_instance(&params, n, graph_seed, self.sampler)?;
        Ok(ResolvedInstance {
            graph: instance.graph,
            assignment: Some(instance.assignment),
            params: Some(params),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SampleSpec {
    num_vertices: usize,
    degrees: Vec<f64>,
    strengths: Vec<f64>,
    #[serde(default)]
    sampler: SamplerOptions,
}

fn cmd_sample(args: &CommonArgs) -> Result<String> {
    let spec: SampleSpec = read_config(args, "sample")?;
    let params = EnsembleParams::two_module(spec.degrees, spec.strengths)?;
    let graph_seed = split_seed(args.seed, &[10, 0]);
    let instance = sample_instance(&params, spec.num_vertices, graph_seed, spec.sampler)?;
    write_text(&args.out_dir, "graph.tsv", &instance.graph.to_edge_list())?;
    write_text(&args.out_dir, "assignment.tsv", &assignment_to_text(&instance.assignment))?;
    let info = serde_json::json!({
        "num_vertices": instance.graph.num_vertices(),
        "num_edges": instance.graph.num_edges(),
        "edges_per_label": (1..=instance.graph.num_labels() as u32)
            .map(|a| instance.graph.label_edge_count(a))
            .collect::<Vec<_>>(),
        "empirical_degrees": instance.empirical_degrees(),
        "graph_seed": graph_seed,
    });
    write_text(&args.out_dir, "instance.json", &pretty(&info)?)?;
    Ok(format!(
        "sampled {} vertices, {} edges -> graph.tsv, assignment.tsv, instance.json",
        instance.graph.num_vertices(),
        instance.graph.num_edges()
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct EmSpec {
    #[serde(flatten)]
    source: InstanceSource,
    init_strengths: Vec<f64>,
    #[serde(default = "default_init_mode")]
    init_mode: InitMode,
    #[serde(default)]
    em: EmConfig,
    #[serde(default)]
    bp: BpConfig,
}

fn cmd_em(args: &CommonArgs) -> Result<String> {
    let spec: EmSpec = read_config(args, "em")?;
    let resolved = spec.source.resolve(split_seed(args.seed, &[11, 0]))?;
    let init = EstimatedAffinities::from_graph(&resolved.graph, spec.init_strengths.clone())?;
    let planted = match (&spec.init_mode, &resolved.assignment) {
        (InitMode::PlantedBiased { .. }, Some(assignment)) => Some(assignment.as_slice()),
        (InitMode::PlantedBiased { .. }, None) => {
            bail!("planted-biased initialization needs an assignment")
        }
        _ => None,
    };
    let message_seed = split_seed(args.seed, &[11, 1]);
    let trajectory = run_em(
        &resolved.graph,
        &init,
        spec.init_mode,
        planted,
        message_seed,
        &spec.em,
        &spec.bp,
    )?;
    let overlap = resolved
        .assignment
        .as_ref()
        .map(|a| phase::overlap_from_marginals(&trajectory.final_marginals, a))
        .transpose()?;
    write_text(&args.out_dir, "trajectory.csv", &core_trajectory_csv(&trajectory))?;
    let summary = serde_json::json!({
        "final_strengths": trajectory.final_estimates.strengths(),
        "em_steps": trajectory.num_steps(),
        "termination": trajectory.termination,
        "overlap": overlap,
        "frozen_labels": trajectory.frozen_labels,
    });
    write_text(&args.out_dir, "em_summary.json", &pretty(&summary)?)?;
    Ok(format!(
        "EM finished after {} steps ({:?}) -> trajectory.csv, em_summary.json",
        trajectory.num_steps(),
        trajectory.termination
    ))
}

fn cmd_sweep(args: &CommonArgs) -> Result<String> {
    let config: PhaseSweepConfig = read_config(args, "sweep")?;
    let rows = run_phase_sweep(&config)?;
    write_text(&args.out_dir, "phase_sweep.csv", &phase_sweep_to_csv(&rows)?)?;
    let em_detectable = rows.iter().filter(|r| r.verdict.em_symmetric_init.detectable).count();
    let infeasible = rows.iter().filter(|r| r.verdict.algorithmically_infeasible).count();
    let summary = serde_json::json!({
        "points": rows.len(),
        "em_detectable": em_detectable,
        "algorithmically_infeasible": infeasible,
    });
    write_text(&args.out_dir, "sweep_summary.json", &pretty(&summary)?)?;
    Ok(format!(
        "swept {} points ({} detectable, {} infeasible) -> phase_sweep.csv",
        rows.len(),
        em_detectable,
        infeasible
    ))
}

fn cmd_trajectory(args: &CommonArgs) -> Result<String> {
    let config: TrajectoryConfig = read_config(args, "trajectory")?;
    let outcome = run_trajectory(&config, args.seed)?;
    write_text(&args.out_dir, "trajectory.csv", &trajectory_to_csv(&outcome)?)?;
    let mut snapshot_info = Vec::new();
    for snap in &outcome.snapshots {
        let file = format!("spectrum_{}.csv", snap.name);
        write_text(&args.out_dir, &file, &spectrum_to_csv(&snap.summary.eigenvalues))?;
        snapshot_info.push(serde_json::json!({
            "name": snap.name,
            "step": snap.step,
            "file": file,
            "summary": summary_to_json(&snap.summary),
        }));
    }
    let summary = serde_json::json!({
        "final_strengths": outcome.trajectory.final_estimates.strengths(),
        "em_steps": outcome.trajectory.num_steps(),
        "termination": outcome.trajectory.termination,
        "final_overlap": outcome.final_overlap,
        "band_radius_initial": outcome.band_history.first(),
        "band_radius_final": outcome.band_history.last(),
        "snapshots": snapshot_info,
    });
    write_text(&args.out_dir, "trajectory_summary.json", &pretty(&summary)?)?;
    Ok(format!(
        "trajectory of {} EM steps, final overlap {:.3} -> trajectory.csv, trajectory_summary.json",
        outcome.trajectory.num_steps(),
        outcome.final_overlap
    ))
}

fn cmd_histogram(args: &CommonArgs) -> Result<String> {
    let config: OverlapSweepConfig = read_config(args, "histogram")?;
    let points = run_overlap_sweep(&config, args.seed)?;
    write_text(&args.out_dir, "overlap_samples.csv", &overlap_samples_to_csv(&points)?)?;
    write_text(&args.out_dir, "overlap_medians.csv", &overlap_medians_to_csv(&points)?)?;
    let summary = serde_json::json!({
        "points": points
            .iter()
            .map(|p| {
                serde_json::json!({
                    "swept_value": p.swept_value,
                    "median_overlap": p.median_overlap,
                    "samples": p.samples.len(),
                })
            })
            .collect::<Vec<_>>(),
    });
    write_text(&args.out_dir, "histogram_summary.json", &pretty(&summary)?)?;
    Ok(format!(
        "measured {} points x {} samples -> overlap_samples.csv, overlap_medians.csv",
        points.len(),
        config.samples_per_point
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SpectrumModeSpec {
    Dense,
    Krylov { count: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SpectrumSpec {
    #[serde(flatten)]
    source: InstanceSource,
    estimate_strengths: Vec<f64>,
    mode: SpectrumModeSpec,
}

fn cmd_spectrum(args: &CommonArgs) -> Result<String> {
    let spec: SpectrumSpec = read_config(args, "spectrum")?;
    let resolved = spec.source.resolve(split_seed(args.seed, &[12, 0]))?;
    let estimates =
        EstimatedAffinities::from_graph(&resolved.graph, spec.estimate_strengths.clone())?;
    let op = build_nb_operator(&resolved.graph, &estimates, 2)?;
    let planted_deltas = resolved
        .params
        .as_ref()
        .map(|params| {
            let n = resolved.graph.num_vertices() as f64;
            let empirical: Vec<f64> = (1..=resolved.graph.num_labels() as u32)
                .map(|a| 2.0 * resolved.graph.label_edge_count(a) as f64 / n)
                .collect();
            EstimatedAffinities::new(empirical, params.strengths().to_vec())
                .map(|e| e.deltas())
        })
        .transpose()?;
    let mode = match spec.mode {
        SpectrumModeSpec::Dense => SpectrumMode::Dense,
        SpectrumModeSpec::Krylov { count } => SpectrumMode::Krylov { count },
    };
    let summary = empirical_spectrum(&op, mode, planted_deltas.as_deref())?;
    write_text(&args.out_dir, "spectrum.csv", &spectrum_to_csv(&summary.eigenvalues))?;
    write_text(&args.out_dir, "spectrum_summary.json", &pretty(&summary_to_json(&summary))?)?;
    Ok(format!(
        "computed {} eigenvalues (band {:.4}) -> spectrum.csv, spectrum_summary.json",
        summary.eigenvalues.len(),
        summary.band_radius_analytic
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct VerdictSpec {
    degrees: Vec<f64>,
    strengths: Vec<f64>,
}

fn cmd_verdict(args: &CommonArgs) -> Result<String> {
    let spec: VerdictSpec = read_config(args, "verdict")?;
    let params = EnsembleParams::two_module(spec.degrees, spec.strengths)?;
    let verdict = phase::verdict(&params);
    let value = serde_json::to_value(&verdict)?;
    write_text(&args.out_dir, "verdict.json", &pretty(&value)?)?;
    Ok(serde_json::to_string(&value)?)
}
