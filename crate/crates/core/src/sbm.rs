//! Two-module ensembles of edge-labeled sparse networks.
//!
//! A network on `N` vertices is drawn by splitting the vertices into two
//! modules and then connecting each vertex pair with at most one labeled
//! edge. A pair in modules `(s, t)` receives label `alpha` with probability
//! `c^alpha_{st} / N`, where the per-label affinity is parameterized by a
//! mean degree `c_alpha` and a strength `x_alpha` in `[0, 1]`:
//!
//! ```text
//! c^alpha_in  = 2 c_alpha x_alpha         (same module)
//! c^alpha_out = 2 c_alpha (1 - x_alpha)   (different modules)
//! ```
//!
//! `x_alpha = 1/2` makes a label carry no module information; the signed
//! contrast is `delta_alpha = c^alpha_in - c^alpha_out = 4 c_alpha (x_alpha -
//! 1/2)`. Mean degrees are `O(1)` so sampled networks are sparse.

use crate::error::{Error, Result};
use crate::graph::{build_graph, LabeledGraph};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt::Write as _;

/// Parameters of a two-module labeled ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    num_modules: usize,
    degrees: Vec<f64>,
    strengths: Vec<f64>,
}

impl EnsembleParams {
    /// Validates per-label mean degrees (`> 0`) and strengths (`[0, 1]`).
    /// Only `num_modules == 2` is supported.
    pub fn new(num_modules: usize, degrees: Vec<f64>, strengths: Vec<f64>) -> Result<Self> {
        if num_modules != 2 {
            return Err(Error::UnsupportedModuleCount(num_modules));
        }
        if degrees.is_empty() {
            return Err(Error::NoLabels);
        }
        if degrees.len() != strengths.len() {
            return Err(Error::LengthMismatch {
                left: degrees.len(),
                right: strengths.len(),
                what: "mean degrees vs strengths",
            });
        }
        for (i, &c) in degrees.iter().enumerate() {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::NonPositiveDegree { label: i as u32 + 1, value: c });
            }
        }
        for (i, &x) in strengths.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::StrengthOutOfRange { label: i as u32 + 1, value: x });
            }
        }
        Ok(Self { num_modules, degrees, strengths })
    }

    /// Convenience constructor for the supported two-module case.
    pub fn two_module(degrees: Vec<f64>, strengths: Vec<f64>) -> Result<Self> {
        Self::new(2, degrees, strengths)
    }

    pub fn num_modules(&self) -> usize {
        self.num_modules
    }

    pub fn num_labels(&self) -> usize {
        self.degrees.len()
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    /// Mean degree of label `alpha` (1-based).
    pub fn degree(&self, alpha: u32) -> f64 {
        self.degrees[alpha as usize - 1]
    }

    /// Strength of label `alpha` (1-based).
    pub fn strength(&self, alpha: u32) -> f64 {
        self.strengths[alpha as usize - 1]
    }

    /// Total mean degree `c`, summed over labels.
    pub fn total_degree(&self) -> f64 {
        self.degrees.iter().sum()
    }

    /// Fraction of edges expected to carry label `alpha`.
    pub fn fraction(&self, alpha: u32) -> f64 {
        self.degree(alpha) / self.total_degree()
    }

    /// Signed within/between contrast `4 c_alpha (x_alpha - 1/2)`.
    pub fn delta(&self, alpha: u32) -> f64 {
        4.0 * self.degree(alpha) * (self.strength(alpha) - 0.5)
    }

    pub fn deltas(&self) -> Vec<f64> {
        (1..=self.num_labels() as u32).map(|a| self.delta(a)).collect()
    }

    pub fn c_in(&self, alpha: u32) -> f64 {
        2.0 * self.degree(alpha) * self.strength(alpha)
    }

    pub fn c_out(&self, alpha: u32) -> f64 {
        2.0 * self.degree(alpha) * (1.0 - self.strength(alpha))
    }
}

/// Per-label affinity table derived from [`EnsembleParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Affinities {
    /// `c^alpha_in` per label.
    pub within: Vec<f64>,
    /// `c^alpha_out` per label.
    pub between: Vec<f64>,
    /// Expected label fractions `c_alpha / c`.
    pub fractions: Vec<f64>,
    /// Signed contrasts `c^alpha_in - c^alpha_out`.
    pub deltas: Vec<f64>,
    /// Total mean degree `c`.
    pub total_degree: f64,
}

/// Expands parameters into the per-label affinity table.
pub fn derive_affinities(params: &EnsembleParams) -> Affinities {
    let p = params.num_labels() as u32;
    Affinities {
        within: (1..=p).map(|a| params.c_in(a)).collect(),
        between: (1..=p).map(|a| params.c_out(a)).collect(),
        fractions: (1..=p).map(|a| params.fraction(a)).collect(),
        deltas: (1..=p).map(|a| params.delta(a)).collect(),
        total_degree: params.total_degree(),
    }
}

/// How planted module assignments are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignmentMode {
    /// Random permutation of a fixed half/half split (sizes differ by at
    /// most one).
    #[default]
    ExactBalance,
    /// Independent uniform module choice per vertex.
    IidUniform,
}

/// Sampler switches beyond the ensemble parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SamplerOptions {
    pub assignment: AssignmentMode,
    /// Draw every vertex pair independently instead of using per-block
    /// binomial counts. Costs `O(N^2)`; intended for small validation runs.
    pub exact_pairwise: bool,
}

/// A sampled network together with its hidden module assignment.
#[derive(Clone, Debug)]
pub struct PlantedInstance {
    pub graph: LabeledGraph,
    /// Module index (`0` or `1`) per vertex.
    pub assignment: Vec<u8>,
    pub params: EnsembleParams,
    pub seed: u64,
}

impl PlantedInstance {
    /// Empirical per-label mean degrees `2 L_alpha / N`.
    pub fn empirical_degrees(&self) -> Vec<f64> {
        let n = self.graph.num_vertices() as f64;
        (1..=self.graph.num_labels() as u32)
            .map(|a| 2.0 * self.graph.label_edge_count(a) as f64 / n)
            .collect()
    }
}

/// Draws a planted instance. Identical `(params, num_vertices, seed,
/// options)` always produce the identical instance.
pub fn sample_instance(
    params: &EnsembleParams,
    num_vertices: usize,
    seed: u64,
    options: SamplerOptions,
) -> Result<PlantedInstance> {
    if num_vertices < 2 {
        return Err(Error::TooFewVertices { min: 2, got: num_vertices });
    }
    validate_density(params, num_vertices)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment = draw_assignment(num_vertices, options.assignment, &mut rng);
    let edges = if options.exact_pairwise {
        sample_edges_pairwise(params, &assignment, &mut rng)
    } else {
        sample_edges_blockwise(params, &assignment, &mut rng)?
    };

    let graph = build_graph(num_vertices, params.num_labels(), &edges)?;
    Ok(PlantedInstance { graph, assignment, params:
        params.clone(), seed })
}

fn validate_density(params: &EnsembleParams, num_vertices: usize) -> Result<()> {
    let n = num_vertices as f64;
    let mut total_in = 0.0;
    let mut total_out = 0.0;
    for alpha in 1..=params.num_labels() as u32 {
        let p_in = params.c_in(alpha) / n;
        let p_out = params.c_out(alpha) / n;
        if p_in > 1.0 || p_out > 1.0 {
            return Err(Error::DensityTooHigh { label: alpha, prob: p_in.max(p_out) });
        }
        total_in += p_in;
        total_out += p_out;
    }
    if total_in > 1.0 || total_out > 1.0 {
        return Err(Error::TotalDensityTooHigh { prob: total_in.max(total_out) });
    }
    Ok(())
}

fn draw_assignment(n: usize, mode: AssignmentMode, rng: &mut ChaCha8Rng) -> Vec<u8> {
    match mode {
        AssignmentMode::ExactBalance => {
            let mut assignment = vec![0u8; n];
            for slot in assignment.iter_mut().skip(n / 2) {
                *slot = 1;
            }
            // Fisher-Yates keeps the draw order independent of the layout.
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                assignment.swap(i, j);
            }
            assignment
        }
        AssignmentMode::IidUniform => (0..n).map(|_| rng.random_range(0..2u8)).collect(),
    }
}

/// Pairs are grouped into three blocks per label (within module 0, within
/// module 1, between); a binomial count per block is drawn, then that many
/// distinct pairs are placed uniformly, resampling any collision with an
/// already-occupied pair.
fn sample_edges_blockwise(
    params: &EnsembleParams,
    assignment: &[u8],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize, u32)>> {
    let n = assignment.len() as f64;
    let mut groups: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
    for (v, &m) in assignment.iter().enumerate() {
        groups[m as usize].push(v as u32);
    }
    let (n0, n1) = (groups[0].len() as u64, groups[1].len() as u64);

    let mut edges = Vec::new();
    let mut used: HashSet<(u32, u32)> = HashSet::new();
    for alpha in 1..=params.num_labels() as u32 {
        let blocks = [
            (0usize, 0usize, n0 * n0.saturating_sub(1) / 2, params.c_in(alpha) / n),
            (1, 1, n1 * n1.saturating_sub(1) / 2, params.c_in(alpha) / n),
            (0, 1, n0 * n1, params.c_out(alpha) / n),
        ];
        for (ga, gb, num_pairs, prob) in blocks {
            if num_pairs == 0 || prob <= 0.0 {
                continue;
            }
            let count = Binomial::new(num_pairs, prob)
                .expect("validated probability")
                .sample(rng);
            let mut attempts: u64 = 0;
            let max_attempts = 100 * count + 1000;
            let mut placed = 0;
            while placed < count {
                if attempts > max_attempts {
                    return Err(Error::BlockExhausted {
                        label: alpha,
                        requested: count,
                        available: num_pairs,
                    });
                }
                attempts += 1;
                let (u, v) = if ga == gb {
                    let g = &groups[ga];
                    let i = rng.random_range(0..g.len());
                    let mut j = rng.random_range(0..g.len() - 1);
                    if j >= i {
                        j += 1;
                    }
                    (g[i], g[j])
                } else {
                    (
                        groups[ga][rng.random_range(0..groups[ga].len())],
                        groups[gb][rng.random_range(0..groups[gb].len())],
                    )
                };
                let key = (u.min(v), u.max(v));
                if used.insert(key) {
                    edges.push((u as usize, v as usize, alpha));
                    placed += 1;
                }
            }
        }
    }
    Ok(edges)
}

/// Literal sampler: every vertex pair draws one label (or none) from the
/// categorical distribution given the endpoint modules.
fn sample_edges_pairwise(
    params: &EnsembleParams,
    assignment: &[u8],
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize, u32)> {
    let n = assignment.len();
    let nf = n as f64;
    let p = params.num_labels() as u32;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let same = assignment[i] == assignment[j];
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for alpha in 1..=p {
                let rate = if same { params.c_in(alpha) } else { params.c_out(alpha) };
                acc += rate / nf;
                if u < acc {
                    edges.push((i, j, alpha));
                    break;
                }
            }
        }
    }
    edges
}

/// Serializes a module assignment as tab-separated `vertex module` lines
/// with modules reported as `1` and `2`.
pub fn assignment_to_text(assignment: &[u8]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# vertices: {}", assignment.len());
    for (v, &m) in assignment.iter().enumerate() {
        let _ = writeln!(out, "{}\t{}", v, m as usize + 1);
    }
    out
}

/// Parses the format produced by [`assignment_to_text`].
pub fn parse_assignment(text: &str) -> Result<Vec<u8>> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let vertex: usize = parse_field(fields.next().unwrap_or(""), idx + 1)?;
        let module: usize = parse_field(fields.next().unwrap_or(""), idx + 1)?;
        if !(1..=2).contains(&module) {
            return Err(Error::InvalidModule { vertex, value: module });
        }
        entries.push((vertex, (module - 1) as u8));
    }
    let n = entries.len();
    let mut assignment = vec![u8::MAX; n];
    for (vertex, module) in entries {
        if vertex >= n || assignment[vertex] != u8::MAX {
            return Err(Error::InvalidModule { vertex, value: module as usize + 1 });
        }
        assignment[vertex] = module;
    }
    Ok(assignment)
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid assignment field {:?}", field.trim()),
    })
}
