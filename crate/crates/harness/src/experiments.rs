//! Experiment runners: analytic phase sweeps, overlap measurements over a
//! swept parameter, and single-run learning trajectories with companion
//! spectra.
//!
//! All runners are deterministic functions of their configuration and a
//! base seed; per-cell seeds come from [`crate::seeding::split_seed`], so
//! parallel execution cannot change any result.

use anyhow::{bail, Context, Result};
use lsbm_core::bp::{BpConfig, EstimatedAffinities, InitMode};
use lsbm_core::em::{run_em, EmConfig, EmTrajectory, Termination};
use lsbm_core::phase::{self, PhaseVerdict};
use lsbm_core::sbm::{sample_instance, EnsembleParams, PlantedInstance, SamplerOptions};
use lsbm_core::spectral::{
    band_radius, build_nb_operator, empirical_spectrum, iso_eigenvalue, SpectralSummary,
    SpectrumMode, DENSE_SPECTRUM_LIMIT,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seeding::split_seed;

fn default_init_mode() -> InitMode {
    InitMode::UniformRandom
}

// Disambiguates seed streams of the different runners.
const STREAM_OVERLAP: u64 = 1;
const STREAM_TRAJECTORY: u64 = 2;

/// One swept axis of an analytic phase sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrengthAxis {
    /// 1-based label whose strength is swept.
    pub label: u32,
    pub values: Vec<f64>,
}

/// Configuration of an analytic (closed-form) phase sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhaseSweepConfig {
    pub degrees: Vec<f64>,
    /// Strengths used for labels that are not swept.
    pub base_strengths: Vec<f64>,
    /// One axis per swept label; the sweep is their cartesian product.
    pub axes: Vec<StrengthAxis>,
}

/// One grid point of a phase sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhaseSweepRow {
    pub strengths: Vec<f64>,
    pub verdict: PhaseVerdict,
}

/// Evaluates the analytic thresholds over the strength grid.
pub fn run_phase_sweep(config: &PhaseSweepConfig) -> Result<Vec<PhaseSweepRow>> {
    let p = config.degrees.len();
    if config.base_strengths.len() != p {
        bail!(
            "base strengths ({}) and degrees ({}) disagree",
            config.base_strengths.len(),
            p
        );
    }
    for axis in &config.axes {
        if axis.label == 0 || axis.label as usize > p {
            bail!("swept label {} out of range (1..={})", axis.label, p);
        }
        if axis.values.is_empty() {
            bail!("swept label {} has no values", axis.label);
        }
    }
    let mut rows = Vec::new();
    let mut odometer = vec![0usize; config.axes.len()];
    loop {
        let mut strengths = config.base_strengths.clone();
        for (axis, &idx) in config.axes.iter().zip(&odometer) {
            strengths[axis.label as usize - 1] = axis.values[idx];
        }
        let params = EnsembleParams::two_module(config.degrees.clone(), strengths.clone())?;
        rows.push(PhaseSweepRow { strengths, verdict: phase::verdict(&params) });

        // Advance the odometer, least significant axis last.
        let mut pos = config.axes.len();
        loop {
            if pos == 0 {
                return Ok(rows);
            }
            pos -= 1;
            odometer[pos] += 1;
            if odometer[pos] < config.axes[pos].values.len() {
                break;
            }
            odometer[pos] = 0;
        }
    }
}

/// Renders a phase sweep as CSV.
pub fn phase_sweep_to_csv(rows: &[PhaseSweepRow]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let p = rows.first().map_or(0, |r| r.strengths.len());
    let mut header: Vec<String> = (1..=p).map(|a| format!("x_{}", a)).collect();
    header.extend(
        [
            "known_lhs",
            "known_rhs",
            "known_detectable",
            "em_lhs",
            "em_rhs",
            "em_detectable",
            "infeasible",
        ]
        .map(str::to_string),
    );
    wtr.write_record(&header)?;
    for row in rows {
        let mut rec: Vec<String> = row.strengths.iter().map(|x| x.to_string()).collect();
        let v = &row.verdict;
        rec.push(v.known_param.lhs.to_string());
        rec.push(v.known_param.rhs.to_string());
        rec.push(v.known_param.detectable.to_string());
        rec.push(v.em_symmetric_init.lhs.to_string());
        rec.push(v.em_symmetric_init.rhs.to_string());
        rec.push(v.em_symmetric_init.detectable.to_string());
        rec.push(v.algorithmically_infeasible.to_string());
        wtr.write_record(&rec)?;
    }
    Ok(String::from_utf8(wtr.into_inner()?)?)
}

/// Which ensemble parameter an overlap sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweptParameter {
    Degree,
    Strength,
}

/// The swept axis of an overlap experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweptAxis {
    pub parameter: SweptParameter,
    /// 1-based label whose parameter is swept.
    pub label: u32,
    pub values: Vec<f64>,
}

/// Configuration of an empirical overlap sweep: sample instances along the
/// axis, learn strengths with EM on each, score overlap against the
/// planted assignment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OverlapSweepConfig {
    pub num_vertices: usize,
    pub degrees: Vec<f64>,
    pub strengths: Vec<f64>,
    pub swept: SweptAxis,
    pub samples_per_point: usize,
    /// Strength initialization handed to EM.
    pub init_strengths: Vec<f64>,
    #[serde(default = "default_init_mode")]
    pub init_mode: InitMode,
    #[serde(default)]
    pub em: EmConfig,
    #[serde(default)]
    pub bp: BpConfig,
    #[serde(default)]
    pub sampler: SamplerOptions,
}

/// One EM run inside an overlap sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OverlapSample {
    pub swept_value: f64,
    pub sample_index: usize,
    pub overlap: f64,
    pub final_strengths: Vec<f64>,
    pub em_steps: usize,
    pub termination: Termination,
}

/// All samples of one grid point plus their median overlap.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OverlapPoint {
    pub swept_value: f64,
    pub median_overlap: f64,
    pub samples: Vec<OverlapSample>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs EM on freshly sampled instances along the swept axis.
///
/// Sample `(i, j)` draws its graph from seed `[STREAM, i, j, 0]` and its
/// messages from `[STREAM, i, j, 1]`, both split off `base_seed`.
pub fn run_overlap_sweep(
    config: &OverlapSweepConfig,
    base_seed: u64,
) -> Result<Vec<OverlapPoint>> {
    let p = config.degrees.len();
    if config.strengths.len() != p || config.init_strengths.len() != p {
        bail!("strength vectors must match the {} labels", p);
    }
    if config.swept.label == 0 || config.swept.label as usize > p {
        bail!("swept label {} out of range (1..={})", config.swept.label, p);
    }
    if config.samples_per_point == 0 {
        bail!("samples_per_point must be positive");
    }

    let jobs: Vec<(usize, usize)> = (0..config.swept.values.len())
        .flat_map(|i| (0..config.samples_per_point).map(move |j| (i, j)))
        .collect();
    let samples: Result<Vec<OverlapSample>> = jobs
        .into_par_iter()
        .map(|(i, j)| overlap_one(config, base_seed, i, j))
        .collect();
    let samples = samples?;

    let mut points = Vec::with_capacity(config.swept.values.len());
    for (i, &value) in config.swept.values.iter().enumerate() {
        let chunk: Vec<OverlapSample> = samples
            [i * config.samples_per_point..(i + 1) * config.samples_per_point]
            .to_vec();
        let mut overlaps: Vec<f64> = chunk.iter().map(|s| s.overlap).collect();
        points.push(OverlapPoint {
            swept_value: value,
            median_overlap: median(&mut overlaps),
            samples: chunk,
        });
    }
    Ok(points)
}

fn overlap_one(
    config: &OverlapSweepConfig,
    base_seed: u64,
    point: usize,
    sample: usize,
) -> Result<OverlapSample> {
    let value = config.swept.values[point];
    let mut degrees = config.degrees.clone();
    let mut strengths = config.strengths.clone();
    match config.swept.parameter {
        SweptParameter::Degree => degrees[config.swept.label as usize - 1] = value,
        SweptParameter::Strength => strengths[config.swept.label as usize - 1] = value,
    }
    let params = EnsembleParams::two_module(degrees, strengths)?;
    let graph_seed = split_seed(base_seed, &[STREAM_OVERLAP, point as u64, sample as u64, 0]);
    let message_seed = split_seed(base_seed, &[STREAM_OVERLAP, point as u64, sample as u64, 1]);
    let instance = sample_instance(&params, config.num_vertices, graph_seed, config.sampler)?;
    let (trajectory, overlap) = em_with_overlap(&instance, config, message_seed)?;
    Ok(OverlapSample {
        swept_value: value,
        sample_index: sample,
        overlap,
        final_strengths: trajectory.final_estimates.strengths().to_vec(),
        em_steps: trajectory.num_steps(),
        termination: trajectory.termination,
    })
}

fn em_with_overlap(
    instance: &PlantedInstance,
    config: &OverlapSweepConfig,
    message_seed: u64,
) -> Result<(EmTrajectory, f64)> {
    let init = EstimatedAffinities::from_graph(&instance.graph, config.init_strengths.clone())?;
    let planted = matches!(config.init_mode, InitMode::PlantedBiased { .. })
        .then_some(instance.assignment.as_slice());
    let trajectory = run_em(
        &instance.graph,
        &init,
        config.init_mode,
        planted,
        message_seed,
        &config.em,
        &config.bp,
    )?;
    let overlap = phase::overlap_from_marginals(&trajectory.final_marginals, &instance.assignment)?;
    Ok((trajectory, overlap))
}

/// Renders every sample of an overlap sweep as CSV.
pub fn overlap_samples_to_csv(points: &[OverlapPoint]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let p = points
        .first()
        .and_then(|pt| pt.samples.first())
        .map_or(0, |s| s.final_strengths.len());
    let mut header =
        vec!["swept_value".to_string(), "sample_index".to_string(), "overlap".to_string()];
    header.extend((1..=p).map(|a| format!("x_hat_{}", a)));
    header.push("em_steps".to_string());
    header.push("termination".to_string());
    wtr.write_record(&header)?;
    for point in points {
        for s in &point.samples {
            let mut rec = vec![
                s.swept_value.to_string(),
                s.sample_index.to_string(),
                s.overlap.to_string(),
            ];
            rec.extend(s.final_strengths.iter().map(|x| x.to_string()));
            rec.push(s.em_steps.to_string());
            rec.push(format!("{:?}", s.termination));
            wtr.write_record(&rec)?;
        }
    }
    Ok(String::from_utf8(wtr.into_inner()?)?)
}

/// Renders the per-point medians of an overlap sweep as CSV.
pub fn overlap_medians_to_csv(points: &[OverlapPoint]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["swept_value", "median_overlap"])?;
    for point in points {
        wtr.write_record(&[point.swept_value.to_string(), point.median_overlap.to_string()])?;
    }
    Ok(String::from_utf8(wtr.into_inner()?)?)
}

/// Companion spectra settings for a trajectory run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectraCompanion {
    /// Size of the (separately sampled) companion instance; its operator
    /// dimension `N c` must fit the dense solver.
    pub num_vertices: usize,
}

/// Configuration of a single learning trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub num_vertices: usize,
    pub degrees: Vec<f64>,
    pub strengths: Vec<f64>,
    pub init_strengths: Vec<f64>,
    #[serde(default = "default_init_mode")]
    pub init_mode: InitMode,
    #[serde(default)]
    pub em: EmConfig,
    #[serde(default)]
    pub bp: BpConfig,
    #[serde(default)]
    pub sampler: SamplerOptions,
    #[serde(default)]
    pub spectra: Option<SpectraCompanion>,
}

/// A spectrum snapshot along a trajectory.
#[derive(Clone, Debug)]
pub struct SpectrumSnapshot {
    /// `initial`, `crossing`, or `final`.
    pub name: String,
    /// EM step whose estimates the spectrum uses.
    pub step: usize,
    pub summary: SpectralSummary,
}

/// A full trajectory run: the EM record, per-step analytic stability
/// numbers, the overlap reached, and optional companion spectra.
#[derive(Debug)]
pub struct TrajectoryOutcome {
    pub trajectory: EmTrajectory,
    /// Analytic band radius at each entry of `estimates_history`, using the
    /// instance's empirical degrees.
    pub band_history: Vec<f64>,
    /// Analytic isolated eigenvalue (planted against estimates) per entry.
    pub iso_history: Vec<f64>,
    pub final_overlap: f64,
    pub snapshots: Vec<SpectrumSnapshot>,
}

/// Runs one EM trajectory; graph seed `[STREAM, 0]`, messages
/// `[STREAM, 1]`, companion graph `[STREAM, 2]`.
pub fn run_trajectory(config: &TrajectoryConfig, base_seed: u64) -> Result<TrajectoryOutcome> {
    let p = config.degrees.len();
    if config.strengths.len() != p || config.init_strengths.len() != p {
        bail!("strength vectors must match the {} labels", p);
    }
    let params = EnsembleParams::two_module(config.degrees.clone(), config.strengths.clone())?;
    let graph_seed = split_seed(base_seed, &[STREAM_TRAJECTORY, 0]);
    let message_seed = split_seed(base_seed, &[STREAM_TRAJECTORY, 1]);
    let instance = sample_instance(&params, config.num_vertices, graph_seed, config.sampler)?;
    let init = EstimatedAffinities::from_graph(&instance.graph, config.init_strengths.clone())?;
    let planted = matches!(config.init_mode, InitMode::PlantedBiased { .. })
        .then_some(instance.assignment.as_slice());
    let trajectory = run_em(
        &instance.graph,
        &init,
        config.init_mode,
        planted,
        message_seed,
        &config.em,
        &config.bp,
    )?;
    let final_overlap =
        phase::overlap_from_marginals(&trajectory.final_marginals, &instance.assignment)?;

    let empirical = instance.empirical_degrees();
    let planted_deltas =
        EstimatedAffinities::new(empirical.clone(), config.strengths.clone())?.deltas();
    let mut band_history = Vec::with_capacity(trajectory.estimates_history.len());
    let mut iso_history = Vec::with_capacity(trajectory.estimates_history.len());
    for strengths in &trajectory.estimates_history {
        let est = EstimatedAffinities::new(empirical.clone(), strengths.clone())?;
        band_history.push(band_radius(est.degrees(), &est.deltas())?);
        iso_history.push(iso_eigenvalue(&planted_deltas, &est.deltas(), est.degrees())?);
    }

    let mut snapshots = Vec::new();
    if let Some(companion) = &config.spectra {
        let companion_seed = split_seed(base_seed, &[STREAM_TRAJECTORY, 2]);
        let companion_inst =
            sample_instance(&params, companion.num_vertices, companion_seed, config.sampler)?;
        let companion_planted = EstimatedAffinities::new(
            companion_inst.empirical_degrees(),
            config.strengths.clone(),
        )?
        .deltas();
        for (name, step) in snapshot_steps(&band_history, &trajectory) {
            let est = EstimatedAffinities::from_graph(
                &companion_inst.graph,
                trajectory.estimates_history[step].clone(),
            )?;
            let op = build_nb_operator(&companion_inst.graph, &est, 2)?;
            let mode = if op.dim() <= DENSE_SPECTRUM_LIMIT {
                SpectrumMode::Dense
            } else {
                SpectrumMode::Krylov { count: 16 }
            };
            let summary = empirical_spectrum(&op, mode, Some(&companion_planted))
                .with_context(|| format!("spectrum snapshot {}", name))?;
            snapshots.push(SpectrumSnapshot { name, step, summary });
        }
    }

    Ok(TrajectoryOutcome { trajectory, band_history, iso_history, final_overlap, snapshots })
}

/// Snapshot positions: the initialization, the first step where the band
/// radius crosses `1` (if it does), and the final step.
fn snapshot_steps(band_history: &[f64], trajectory: &EmTrajectory) -> Vec<(String, usize)> {
    let last = trajectory.estimates_history.len() - 1;
    let mut steps = vec![("initial".to_string(), 0)];
    let start_above = band_history[0] > 1.0;
    if let Some(cross) = band_history
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, &b)| (b > 1.0) != start_above)
        .map(|(t, _)| t)
    {
        if cross != last {
            steps.push(("crossing".to_string(), cross));
        }
    }
    if last != 0 {
        steps.push(("final".to_string(), last));
    }
    steps
}

/// Renders a trajectory with its per-step stability numbers as CSV.
pub fn trajectory_to_csv(outcome: &TrajectoryOutcome) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let p = outcome.trajectory.estimates_history[0].len();
    let mut header = vec!["step".to_string()];
    header.extend((1..=p).map(|a| format!("x_hat_{}", a)));
    header.extend(
        ["bp_sweeps", "bp_delta", "band_radius", "iso_eigenvalue"].map(str::to_string),
    );
    wtr.write_record(&header)?;
    for (t, xs) in outcome.trajectory.estimates_history.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(xs.iter().map(|x| x.to_string()));
        if t == 0 {
            rec.push("0".to_string());
            rec.push("0".to_string());
        } else {
            let stats = outcome.trajectory.bp_history[t - 1];
            rec.push(stats.sweeps.to_string());
            rec.push(stats.final_delta.to_string());
        }
        rec.push(outcome.band_history[t].to_string());
        rec.push(outcome.iso_history[t].to_string());
        wtr.write_record(&rec)?;
    }
    Ok(String::from_utf8(wtr.into_inner()?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_overlap_config() -> OverlapSweepConfig {
        OverlapSweepConfig {
            num_vertices: 300,
            degrees: vec![4.0],
            strengths: vec![0.9],
            swept: SweptAxis {
                parameter: SweptParameter::Degree,
                label: 1,
                values: vec![3.0, 4.0],
            },
            samples_per_point: 2,
            init_strengths: vec![0.65],
            init_mode: InitMode::UniformRandom,
            em: EmConfig { max_steps: 20, ..Default::default() },
            bp: BpConfig { max_sweeps: 40, ..Default::default() },
            sampler: SamplerOptions::default(),
        }
    }

    #[test]
    fn phase_sweep_covers_the_grid_in_row_major_order() {
        let config = PhaseSweepConfig {
            degrees: vec![3.0, 2.0],
            base_strengths: vec![0.5, 0.45],
            axes: vec![
                StrengthAxis { label: 1, values: vec![0.6, 0.85] },
                StrengthAxis { label: 2, values: vec![0.3, 0.45, 0.5] },
            ],
        };
        let rows = run_phase_sweep(&config).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].strengths, vec![0.6, 0.3]);
        assert_eq!(rows[1].strengths, vec![0.6, 0.45]);
        assert_eq!(rows[3].strengths, vec![0.85, 0.3]);
        let csv = phase_sweep_to_csv(&rows).unwrap();
        assert!(csv.starts_with(
            "x_1,x_2,known_lhs,known_rhs,known_detectable,em_lhs,em_rhs,em_detectable,infeasible"
        ));
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn phase_sweep_rejects_bad_axes() {
        let mut config = PhaseSweepConfig {
            degrees: vec![3.0],
            base_strengths: vec![0.5],
            axes: vec![StrengthAxis { label: 2, values: vec![0.5] }],
        };
        assert!(run_phase_sweep(&config).is_err());
        config.axes[0].label = 1;
        config.axes[0].values.clear();
        assert!(run_phase_sweep(&config).is_err());
    }

    #[test]
    fn overlap_sweep_is_deterministic_and_grouped() {
        let config = base_overlap_config();
        let a = run_overlap_sweep(&config, 9).unwrap();
        let b = run_overlap_sweep(&config, 9).unwrap();
        assert_eq!(a.len(), 2);
        for (pa, pb) in a.iter().zip(&b) {
            assert_eq!(pa.median_overlap, pb.median_overlap);
            assert_eq!(pa.samples.len(), 2);
            for (sa, sb) in pa.samples.iter().zip(&pb.samples) {
                assert_eq!(sa.overlap, sb.overlap);
                assert_eq!(sa.final_strengths, sb.final_strengths);
            }
        }
        let c = run_overlap_sweep(&config, 10).unwrap();
        let same = a.iter().zip(&c).all(|(x, y)| x.median_overlap == y.median_overlap);
        assert!(!same, "different base seeds produced identical sweeps");
    }

    #[test]
    fn overlap_csv_lists_every_sample() {
        let config = base_overlap_config();
        let points = run_overlap_sweep(&config, 3).unwrap();
        let csv = overlap_samples_to_csv(&points).unwrap();
        assert!(csv.starts_with("swept_value,sample_index,overlap,x_hat_1,em_steps,termination"));
        assert_eq!(csv.lines().count(), 1 + 4);
        let medians = overlap_medians_to_csv(&points).unwrap();
        assert_eq!(medians.lines().count(), 3);
    }

    #[test]
    fn strength_sweeps_move_the_right_label() {
        let mut config = base_overlap_config();
        config.swept =
            SweptAxis { parameter: SweptParameter::Strength, label: 1, values: vec![0.5] };
        config.samples_per_point = 1;
        let points = run_overlap_sweep(&config, 4).unwrap();
        // A structureless graph keeps overlap near zero.
        assert!(points[0].samples[0].overlap < 0.2);
    }

    #[test]
    fn trajectory_records_stability_history_and_snapshots() {
        let config = TrajectoryConfig {
            num_vertices: 400,
            degrees: vec![3.0],
            strengths: vec![0.9],
            init_strengths: vec![0.75],
            init_mode: InitMode::UniformRandom,
            em: EmConfig { max_steps: 25, ..Default::default() },
            bp: BpConfig { max_sweeps: 60, ..Default::default() },
            sampler: SamplerOptions::default(),
            spectra: Some(SpectraCompanion { num_vertices: 200 }),
        };
        let outcome = run_trajectory(&config, 11).unwrap();
        let len = outcome.trajectory.estimates_history.len();
        assert_eq!(outcome.band_history.len(), len);
        assert_eq!(outcome.iso_history.len(), len);
        // Detectable single-label run: strength learned, overlap strong.
        let x = outcome.trajectory.final_estimates.strength(1);
        assert!((x.max(1.0 - x) - 0.9).abs() < 0.05, "final strength {}", x);
        assert!(outcome.final_overlap > 0.4, "overlap {}", outcome.final_overlap);
        assert!(!outcome.snapshots.is_empty());
        assert_eq!(outcome.snapshots[0].name, "initial");
        assert_eq!(outcome.snapshots.last().unwrap().name, "final");
        for snap in &outcome.snapshots {
            assert!(snap.summary.solver_converged);
        }
        let csv = trajectory_to_csv(&outcome).unwrap();
        assert!(csv.starts_with("step,x_hat_1,bp_sweeps,bp_delta,band_radius,iso_eigenvalue"));
        assert_eq!(csv.lines().count(), len + 1);
    }

    #[test]
    fn trajectory_is_reproducible() {
        let config = TrajectoryConfig {
            num_vertices: 200,
            degrees: vec![4.0],
            strengths: vec![0.85],
            init_strengths: vec![0.7],
            init_mode: InitMode::UniformRandom,
            em: EmConfig { max_steps: 10, ..Default::default() },
            bp: BpConfig { max_sweeps: 30, ..Default::default() },
            sampler: SamplerOptions::default(),
            spectra: None,
        };
        let a = run_trajectory(&config, 5).unwrap();
        let b = run_trajectory(&config, 5).unwrap();
        assert_eq!(a.trajectory.estimates_history, b.trajectory.estimates_history);
        assert_eq!(a.final_overlap, b.final_overlap);
    }
}
