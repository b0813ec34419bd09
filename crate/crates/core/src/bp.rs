//! Belief-propagation inference of module assignments.
//!
//! Each directed edge `i -> j` carries a cavity message `psi[e]`, the
//! belief about vertex `i`'s module when edge `(i, j)` is removed. One
//! asynchronous sweep revisits every vertex in a fresh random order and
//! recomputes all of its outgoing messages from the incoming ones:
//!
//! ```text
//! psi[i->j][s] ~ exp(-h[s]) * prod_{k in N(i), k != j} f_k[s]
//! f_k[s] = sum_t psi[k->i][t] * chat^{label(ik)}ِ[t][s]
//! ```
//!
//! where `chat^alpha` is the 2x2 affinity table of the current estimates
//! (`chat_in` on the diagonal, `chat_out` off it) and `h` is a global
//! auxiliary field that suppresses the all-vertices-in-one-module solution:
//!
//! ```text
//! h[s] = (1/N) sum_v sum_t marginal[v][t] * sum_alpha chat^alpha[t][s]
//! ```
//!
//! The field is recomputed from the marginals when a sweep starts and
//! maintained incrementally as marginals change within the sweep; the `1/N`
//! convention matches the `c^alpha / N` edge probabilities of the sampler.
//! Messages live in linear space and are renormalized after every update; a
//! vanishing or non-finite normalizer falls back to the uniform message and
//! is tallied in [`MessageState::underflow_count`].

use crate::error::{Error, Result};
use crate::graph::LabeledGraph;
use crate::sbm::EnsembleParams;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Per-label affinity estimates used by inference.
///
/// Shaped like [`EnsembleParams`] but in the estimate role: the mean
/// degrees are pinned (normally to the empirical `2 L_alpha / N` of the
/// graph under study, which zero-edge labels make `0`) and only the
/// strengths are learned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatedAffinities {
    degrees: Vec<f64>,
    strengths: Vec<f64>,
}

impl EstimatedAffinities {
    /// Validates degrees (`>= 0`, finite) and strengths (`[0, 1]`).
    pub fn new(degrees: Vec<f64>, strengths: Vec<f64>) -> Result<Self> {
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
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::NonPositiveDegree { label: i as u32 + 1, value: c });
            }
        }
        for (i, &x) in strengths.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::StrengthOutOfRange { label: i as u32 + 1, value: x });
            }
        }
        Ok(Self { degrees, strengths })
    }

    /// Estimates with the graph's empirical per-label degrees.
    pub fn from_graph(graph: &LabeledGraph, strengths: Vec<f64>) -> Result<Self> {
        let n = graph.num_vertices() as f64;
        let degrees = (1..=graph.num_labels() as u32)
            .map(|a| 2.0 * graph.label_edge_count(a) as f64 / n)
            .collect();
        Self::new(degrees, strengths)
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

    pub fn degree(&self, alpha: u32) -> f64 {
        self.degrees[alpha as usize - 1]
    }

    pub fn strength(&self, alpha: u32) -> f64 {
        self.strengths[alpha as usize - 1]
    }

    pub fn total_degree(&self) -> f64 {
        self.degrees.iter().sum()
    }

    pub fn c_in(&self, alpha: u32) -> f64 {
        2.0 * self.degree(alpha) * self.strength(alpha)
    }

    pub fn c_out(&self, alpha: u32) -> f64 {
        2.0 * self.degree(alpha) * (1.0 - self.strength(alpha))
    }

    /// Signed contrast `chat_in - chat_out = 4 c_alpha (xhat_alpha - 1/2)`.
    pub fn delta(&self, alpha: u32) -> f64 {
        4.0 * self.degree(alpha) * (self.strength(alpha) - 0.5)
    }

    pub fn deltas(&self) -> Vec<f64> {
        (1..=self.num_labels() as u32).map(|a| self.delta(a)).collect()
    }

    pub(crate) fn set_strength(&mut self, alpha: u32, value: f64) {
        self.strengths[alpha as usize - 1] = value;
    }
}

impl From<&EnsembleParams> for EstimatedAffinities {
    fn from(params: &EnsembleParams) -> Self {
        Self {
            degrees: params.degrees().to_vec(),
            strengths: params.strengths().to_vec(),
        }
    }
}

/// How messages and marginals are initialized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// First component uniform on `(0, 1)`, second its complement.
    UniformRandom,
    /// Every message exactly `(1/2, 1/2)`; an exact fixed point of the
    /// sweep for any estimates.
    Factorized,
    /// `(1/2 + epsilon, 1/2 - epsilon)` oriented toward the planted module
    /// of the message's source vertex. Requires an assignment.
    PlantedBiased { epsilon: f64 },
}

/// Stopping parameters for repeated sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct BpConfig {
    /// Sweep-level convergence threshold on the largest message change.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Mixing weight `lambda` kept on the previous message, in `[0, 1)`.
    pub damping: f64,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self { tol: 1e-6, max_sweeps: 200, damping: 0.0 }
    }
}

/// Cavity messages, vertex marginals, and the auxiliary field.
///
/// Construct with [`init_messages`]; evolve with [`bp_sweep`] or [`run_bp`].
/// The embedded generator drives sweep ordering, so a cloned state replays
/// the exact same sweeps.
#[derive(Clone, Debug)]
pub struct MessageState {
    cavity: Vec<[f64; 2]>,
    marginals: Vec<[f64; 2]>,
    field: [f64; 2],
    sweeps: usize,
    last_max_delta: f64,
    underflow_count: u64,
    rng: ChaCha8Rng,
    order: Vec<u32>,
    factors: Vec<[f64; 2]>,
    prefix: Vec<[f64; 2]>,
    suffix: Vec<[f64; 2]>,
}

impl MessageState {
    pub fn message(&self, e: usize) -> [f64; 2] {
        self.cavity[e]
    }

    pub fn messages(&self) -> &[[f64; 2]] {
        &self.cavity
    }

    pub fn marginal(&self, v: usize) -> [f64; 2] {
        self.marginals[v]
    }

    pub fn marginals(&self) -> &[[f64; 2]] {
        &self.marginals
    }

    pub fn field(&self) -> [f64; 2] {
        self.field
    }

    /// Number of sweeps applied so far.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Largest single-message change in the most recent sweep.
    pub fn last_max_delta(&self) -> f64 {
        self.last_max_delta
    }

    /// Times a message update fell back to uniform because its normalizer
    /// vanished or overflowed.
    pub fn underflow_count(&self) -> u64 {
        self.underflow_count
    }

    /// Relabels the two modules in place (swaps both components of every
    /// message, marginal, and the field).
    pub fn swap_modules(&mut self) {
        for m in self.cavity.iter_mut().chain(self.marginals.iter_mut()) {
            m.swap(0, 1);
        }
        self.field.swap(0, 1);
    }

    /// Overwrites one cavity message (normalized by the caller); intended
    /// for constructing exact test states.
    pub fn set_message(&mut self, e: usize, value: [f64; 2]) {
        self.cavity[e] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.field.iter().all(|h| h.is_finite())
            && self.cavity.iter().chain(self.marginals.iter()).all(|m| {
                m[0].is_finite() && m[1].is_finite()
            })
    }
}

/// Builds an initial [`MessageState`] for `graph`.
///
/// `planted` is consulted only by [`InitMode::PlantedBiased`], which fails
/// without it. Identical arguments produce the identical state.
pub fn init_messages(
    graph: &LabeledGraph,
    seed: u64,
    mode: InitMode,
    planted: Option<&[u8]>,
) -> Result<MessageState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = graph.num_vertices();
    let num_dir = graph.num_directed();

    let draw = |rng: &mut ChaCha8Rng, source: usize| -> Result<[f64; 2]> {
        Ok(match mode {
            InitMode::Factorized => [0.5, 0.5],
            InitMode::UniformRandom => {
                let a: f64 = rng.random();
                [a, 1.0 - a]
            }
            InitMode::PlantedBiased { epsilon } => {
                if !(0.0..=0.5).contains(&epsilon) {
                    return Err(Error::StrengthOutOfRange {
                        label: 0,
                        value: epsilon,
                    });
                }
                let assignment = planted.ok_or(Error::MissingPlantedAssignment)?;
                if assignment.len() != n {
                    return Err(Error::LengthMismatch {
                        left: assignment.len(),
                        right: n,
                        what: "assignment vs vertices",
                    });
                }
                match assignment[source] {
                    0 => [0.5 + epsilon, 0.5 - epsilon],
                    1 => [0.5 - epsilon, 0.5 + epsilon],
                    other => {
                        return Err(Error::InvalidModule {
                            vertex: source,
                            value: other as usize,
                        })
                    }
                }
            }
        })
    };

    let mut cavity = Vec::with_capacity(num_dir);
    for e in 0..num_dir {
        cavity.push(draw(&mut rng, graph.dir_source(e))?);
    }
    let mut marginals = Vec::with_capacity(n);
    for v in 0..n {
        marginals.push(draw(&mut rng, v)?);
    }

    Ok(MessageState {
        cavity,
        marginals,
        field: [0.0, 0.0],
        sweeps: 0,
        last_max_delta: f64::INFINITY,
        underflow_count: 0,
        rng,
        order: (0..n as u32).collect(),
        factors: Vec::new(),
        prefix: Vec::new(),
        suffix: Vec::new(),
    })
}

struct AffinityTables {
    c_in: Vec<f64>,
    c_out: Vec<f64>,
    sum_in: f64,
    sum_out: f64,
}

fn tables(estimates: &EstimatedAffinities) -> AffinityTables {
    let p = estimates.num_labels() as u32;
    let c_in: Vec<f64> = (1..=p).map(|a| estimates.c_in(a)).collect();
    let c_out: Vec<f64> = (1..=p).map(|a| estimates.c_out(a)).collect();
    AffinityTables {
        sum_in: c_in.iter().sum(),
        sum_out: c_out.iter().sum(),
        c_in,
        c_out,
    }
}

fn field_from_marginals(t: &AffinityTables, marginals: &[[f64; 2]]) -> [f64; 2] {
    let n = marginals.len().max(1) as f64;
    let m0: f64 = marginals.iter().map(|m| m[0]).sum();
    let m1: f64 = marginals.iter().map(|m| m[1]).sum();
    [(m0 * t.sum_in + m1 * t.sum_out) / n, (m0 * t.sum_out + m1 * t.sum_in) / n]
}

fn normalized(raw: [f64; 2], underflows: &mut u64) -> [f64; 2] {
    let s = raw[0] + raw[1];
    if s > 0.0 && s.is_finite() {
        [raw[0] / s, raw[1] / s]
    } else {
        *underflows += 1;
        [0.5, 0.5]
    }
}

/// Runs one asynchronous sweep and returns the largest message change.
///
/// Vertices are visited in a fresh random order; each visit recomputes all
/// outgoing messages of the vertex from its incoming ones, then refreshes
/// the vertex marginal and the field contribution it carries.
pub fn bp_sweep(graph: &LabeledGraph, estimates: &EstimatedAffinities, state: &mut MessageState) -> f64 {
    bp_sweep_damped(graph, estimates, state, 0.0)
}

/// [`bp_sweep`] with a damping weight kept on the previous message.
pub fn bp_sweep_damped(
    graph: &LabeledGraph,
    estimates: &EstimatedAffinities,
    state: &mut MessageState,
    damping: f64,
) -> f64 {
    let t = tables(estimates);
    let n = graph.num_vertices();
    state.field = field_from_marginals(&t, &state.marginals);

    // Fisher-Yates on the scratch permutation.
    for i in (1..n).rev() {
        let j = state.rng.random_range(0..=i);
        state.order.swap(i, j);
    }

    let mut max_delta: f64 = 0.0;
    for idx in 0..n {
        let v = state.order[idx] as usize;
        let slots = graph.neighbors(v);
        let d = slots.len();
        let base = [(-state.field[0]).exp(), (-state.field[1]).exp()];

        state.factors.clear();
        for slot in slots {
            let m = state.cavity[slot.in_edge() as usize];
            let l = slot.label as usize - 1;
            state.factors.push([
                m[0] * t.c_in[l] + m[1] * t.c_out[l],
                m[0] * t.c_out[l] + m[1] * t.c_in[l],
            ]);
        }

        state.prefix.resize(d + 1, [1.0, 1.0]);
        state.suffix.resize(d + 1, [1.0, 1.0]);
        state.prefix[0] = [1.0, 1.0];
        state.suffix[d] = [1.0, 1.0];
        for m in 0..d {
            state.prefix[m + 1] = [
                state.prefix[m][0] * state.factors[m][0],
                state.prefix[m][1] * state.factors[m][1],
            ];
        }
        for m in (0..d).rev() {
            state.suffix[m] = [
                state.suffix[m + 1][0] * state.factors[m][0],
                state.suffix[m + 1][1] * state.factors[m][1],
            ];
        }

        for (m, slot) in slots.iter().enumerate() {
            let raw = [
                base[0] * state.prefix[m][0] * state.suffix[m + 1][0],
                base[1] * state.prefix[m][1] * state.suffix[m + 1][1],
            ];
            let mut new = normalized(raw, &mut state.underflow_count);
            let e = slot.out_edge as usize;
            let old = state.cavity[e];
            if damping > 0.0 {
                new = [
                    (1.0 - damping) * new[0] + damping * old[0],
                    (1.0 - damping) * new[1] + damping * old[1],
                ];
            }
            max_delta = max_delta.max((new[0] - old[0]).abs()).max((new[1] - old[1]).abs());
            state.cavity[e] = new;
        }

        let raw = [base[0] * state.prefix[d][0], base[1] * state.prefix[d][1]];
        let new_marg = normalized(raw, &mut state.underflow_count);
        let old_marg = state.marginals[v];
        let dm = [new_marg[0] - old_marg[0], new_marg[1] - old_marg[1]];
        state.field[0] += (dm[0] * t.sum_in + dm[1] * t.sum_out) / n as f64;
        state.field[1] += (dm[0] * t.sum_out + dm[1] * t.sum_in) / n as f64;
        state.marginals[v] = new_marg;
    }

    state.sweeps += 1;
    state.last_max_delta = max_delta;
    max_delta
}

fn marginal_from(
    graph: &LabeledGraph,
    t: &AffinityTables,
    field: [f64; 2],
    cavity: &[[f64; 2]],
    v: usize,
) -> [f64; 2] {
    let mut raw = [(-field[0]).exp(), (-field[1]).exp()];
    for slot in graph.neighbors(v) {
        let m = cavity[slot.in_edge() as usize];
        let l = slot.label as usize - 1;
        raw = [
            raw[0] * (m[0] * t.c_in[l] + m[1] * t.c_out[l]),
            raw[1] * (m[0] * t.c_out[l] + m[1] * t.c_in[l]),
        ];
    }
    let mut scratch = 0;
    normalized(raw, &mut scratch)
}

/// Marginal of vertex `v` computed from the current messages and field.
pub fn compute_marginal(
    graph: &LabeledGraph,
    estimates: &EstimatedAffinities,
    state: &MessageState,
    v: usize,
) -> [f64; 2] {
    let t = tables(estimates);
    marginal_from(graph, &t, state.field, &state.cavity, v)
}

/// Sweeps until the largest message change drops below `config.tol` or
/// `config.max_sweeps` is exhausted; returns whether it converged.
///
/// On exit every marginal is recomputed from the final messages, so
/// [`MessageState::marginal`] agrees exactly with [`compute_marginal`];
/// the field is left as the one those marginals were computed under.
pub fn run_bp(
    graph: &LabeledGraph,
    estimates: &EstimatedAffinities,
    state: &mut MessageState,
    config: &BpConfig,
) -> Result<bool> {
    if !(0.0..1.0).contains(&config.damping) {
        return Err(Error::StrengthOutOfRange { label: 0, value: config.damping });
    }
    let mut converged = false;
    for _ in 0..config.max_sweeps {
        let delta = bp_sweep_damped(graph, estimates, state, config.damping);
        if delta < config.tol {
            converged = true;
            break;
        }
    }
    let t = tables(estimates);
    for v in 0..graph.num_vertices() {
        state.marginals[v] = marginal_from(graph, &t, state.field, &state.cavity, v);
    }
    Ok(converged)
}

/// Per-label message agreement correlators.
///
/// For undirected edge `k` with messages `psi = psi[2k]`, `phi = psi[2k+1]`
/// the correlator is `X_k = psi[0] phi[0] + psi[1] phi[1]`; `X_k = 1/2`
/// for independent uniform endpoints. Returned grouped by label, in each
/// label's edge order.
pub fn edge_correlators(graph: &LabeledGraph, state: &MessageState) -> Vec<Vec<f64>> {
    (1..=graph.num_labels() as u32)
        .map(|alpha| {
            graph
                .label_edges(alpha)
                .iter()
                .map(|&k| {
                    let a = state.cavity[2 * k as usize];
                    let b = state.cavity[2 * k as usize + 1];
                    a[0] * b[0] + a[1] * b[1]
                })
                .collect()
        })
        .collect()
}
