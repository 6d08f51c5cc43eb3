//! Probes: controlled corruptions applied to trained weights.
//!
//! Four families operate directly on weight values (magnitude pruning,
//! binarization, uniform noise injection, smallest-magnitude sign
//! flipping); the fifth delegates to the graph randomizations in
//! [`crate::randomize`]. Probes touch weight matrices only, never
//! biases, and zero entries are absent edges: they are not candidates
//! for pruning or flipping and receive no noise.
//!
//! Magnitude order is global across all in-scope matrices, with exact
//! ties broken by matrix index, then row, then column. This keeps every
//! probe deterministic given its inputs.

use std::fmt;
use std::str::FromStr;

use crate::bipartite::{sign_of, SignedBipartiteLayer};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mlp::MlpModel;
use crate::randomize::{self, RandomizationKind, RewireConfig};
use crate::rng::RngStream;

/// Which weight matrices a probe touches. Defaults to both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeScope {
    pub w1: bool,
    pub w2: bool,
}

impl Default for ProbeScope {
    fn default() -> Self {
        ProbeScope { w1: true, w2: true }
    }
}

impl ProbeScope {
    pub fn is_empty(self) -> bool {
        !self.w1 && !self.w2
    }
}

/// One probe family with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeKind {
    /// Zero the smallest-magnitude fraction of edges.
    Prune(f64),
    /// Replace every weight by its sign.
    Binarize,
    /// Add independent uniform noise from `[-amplitude, amplitude]` to
    /// every edge.
    Noise(f64),
    /// Negate the smallest-magnitude fraction of edges.
    SignFlip(f64),
    /// Replace each in-scope matrix by a structure-preserving
    /// randomization of itself.
    Randomize(RandomizationKind),
}

/// A fully specified probe: family, parameter, and scope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSpec {
    pub kind: ProbeKind,
    pub scope: ProbeScope,
}

impl ProbeSpec {
    pub fn new(kind: ProbeKind) -> Self {
        ProbeSpec {
            kind,
            scope: ProbeScope::default(),
        }
    }

    /// Checks parameter ranges; returns the spec unchanged when valid.
    pub fn validated(self) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidProbeSpec {
            spec: self.to_string(),
            reason: reason.to_string(),
        };
        match self.kind {
            ProbeKind::Prune(p) | ProbeKind::SignFlip(p) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(bad("fraction must lie in [0, 1]"));
                }
            }
            ProbeKind::Noise(a) => {
                if !a.is_finite() || a < 0.0 {
                    return Err(bad("amplitude must be finite and nonnegative"));
                }
            }
            ProbeKind::Binarize | ProbeKind::Randomize(_) => {}
        }
        if self.scope.is_empty() {
            return Err(bad("scope selects no matrices"));
        }
        Ok(self)
    }
}

impl fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeKind::Prune(p) => write!(f, "prune:{p}"),
            ProbeKind::Binarize => write!(f, "binarize"),
            ProbeKind::Noise(a) => write!(f, "noise:{a}"),
            ProbeKind::SignFlip(q) => write!(f, "flip:{q}"),
            ProbeKind::Randomize(k) => write!(f, "randomize:{k}"),
        }
    }
}

impl fmt::Display for ProbeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Scope is not part of the textual form; it rides alongside.
        self.kind.fmt(f)
    }
}

impl FromStr for ProbeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidProbeSpec {
            spec: s.to_string(),
            reason,
        };
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let need_param =
            || param.ok_or_else(|| bad(format!("{name} requires a parameter, e.g. {name}:0.3")));
        let parse_f64 = |text: &str| {
            text.parse::<f64>()
                .map_err(|_| bad(format!("cannot parse {text:?} as a number")))
        };
        let kind = match name {
            "prune" => ProbeKind::Prune(parse_f64(need_param()?)?),
            "noise" => ProbeKind::Noise(parse_f64(need_param()?)?),
            "flip" => ProbeKind::SignFlip(parse_f64(need_param()?)?),
            "binarize" => {
                if param.is_some() {
                    return Err(bad("binarize takes no parameter".into()));
                }
                ProbeKind::Binarize
            }
            "randomize" => ProbeKind::Randomize(need_param()?.parse()?),
            other => return Err(bad(format!("unknown probe family {other:?}"))),
        };
        Ok(kind)
    }
}

impl FromStr for ProbeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProbeSpec::new(s.parse::<ProbeKind>()?).validated()
    }
}

/// Indices of the `floor(fraction * n)` smallest-magnitude edges across
/// the given matrices, as `(set_position, row, col)`. `ids` break exact
/// magnitude ties and follow each matrix's fixed position in the model
/// or bundle.
fn smallest_edges(targets: &[(usize, &Matrix)], fraction: f64) -> Vec<(usize, usize, usize)> {
    assert!((0.0..=1.0).contains(&fraction), "fraction outside [0, 1]");
    let mut edges: Vec<(f64, usize, usize, usize, usize)> = Vec::new();
    for (pos, (id, m)) in targets.iter().enumerate() {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let v = m.get(i, j);
                if v != 0.0 {
                    edges.push((v.abs(), *id, i, j, pos));
                }
            }
        }
    }
    edges.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });
    let take = (fraction * edges.len() as f64).floor() as usize;
    edges
        .into_iter()
        .take(take)
        .map(|(_, _, i, j, pos)| (pos, i, j))
        .collect()
}

/// Zeroes the smallest-magnitude fraction of edges, ranked globally
/// across the given `(id, matrix)` set.
pub fn prune_matrices(targets: &mut [(usize, &mut Matrix)], fraction: f64) {
    let view: Vec<(usize, &Matrix)> = targets.iter().map(|(id, m)| (*id, &**m)).collect();
    let victims = smallest_edges(&view, fraction);
    for (pos, i, j) in victims {
        targets[pos].1.set(i, j, 0.0);
    }
}

/// Negates the smallest-magnitude fraction of edges, ranked globally
/// across the given `(id, matrix)` set.
pub fn flip_matrices(targets: &mut [(usize, &mut Matrix)], fraction: f64) {
    let view: Vec<(usize, &Matrix)> = targets.iter().map(|(id, m)| (*id, &**m)).collect();
    let victims = smallest_edges(&view, fraction);
    for (pos, i, j) in victims {
        let v = targets[pos].1.get(i, j);
        targets[pos].1.set(i, j, -v);
    }
}

/// Replaces every entry by its sign in `{-1, 0, 1}`.
pub fn binarize_matrix(target: &mut Matrix) {
    for v in target.values_mut() {
        *v = sign_of(*v) as f64;
    }
}

/// Adds independent uniform noise from `[-amplitude, amplitude]` to
/// every nonzero entry, in row-major order. Zero entries stay absent.
pub fn noise_matrix(target: &mut Matrix, amplitude: f64, rng: &mut RngStream) {
    assert!(amplitude >= 0.0 && amplitude.is_finite());
    for v in target.values_mut() {
        if *v != 0.0 {
            *v += rng.uniform(-amplitude, amplitude);
        }
    }
}

fn scoped(model: &mut MlpModel, scope: ProbeScope) -> Vec<(usize, &mut Matrix)> {
    let MlpModel { w1, w2, .. } = model;
    let mut out: Vec<(usize, &mut Matrix)> = Vec::new();
    if scope.w1 {
        out.push((0, w1));
    }
    if scope.w2 {
        out.push((1, w2));
    }
    out
}

/// Magnitude pruning: returns a copy of the model with the
/// `floor(fraction * edges)` smallest-magnitude in-scope weights zeroed.
pub fn prune(model: &MlpModel, fraction: f64, scope: ProbeScope) -> MlpModel {
    let mut out = model.clone();
    prune_matrices(&mut scoped(&mut out, scope), fraction);
    out
}

/// Sign binarization of the in-scope weight matrices.
pub fn binarize(model: &MlpModel, scope: ProbeScope) -> MlpModel {
    let mut out = model.clone();
    for (_, m) in scoped(&mut out, scope) {
        binarize_matrix(m);
    }
    out
}

/// Uniform noise injection on in-scope edges. Each matrix consumes its
/// own substream (`rng.substream(0)` for the first weight matrix,
/// `rng.substream(1)` for the second) so the draws a matrix receives do
/// not depend on the scope.
pub fn inject_noise(
    model: &MlpModel,
    amplitude: f64,
    scope: ProbeScope,
    rng: &RngStream,
) -> MlpModel {
    let mut out = model.clone();
    for (id, m) in scoped(&mut out, scope) {
        noise_matrix(m, amplitude, &mut rng.substream(id as u64));
    }
    out
}

/// Sign flipping: negates the `floor(fraction * edges)` smallest-
/// magnitude in-scope weights, keeping their magnitudes.
pub fn flip_signs(model: &MlpModel, fraction: f64, scope: ProbeScope) -> MlpModel {
    let mut out = model.clone();
    flip_matrices(&mut scoped(&mut out, scope), fraction);
    out
}

/// Applies any probe to a model. Randomizations draw from a fresh
/// substream per matrix (`rng.substream(0)` for the first weight
/// matrix, `rng.substream(1)` for the second).
pub fn apply_probe(model: &MlpModel, spec: ProbeSpec, rng: &RngStream) -> Result<MlpModel> {
    let spec = spec.validated()?;
    match spec.kind {
        ProbeKind::Prune(p) => Ok(prune(model, p, spec.scope)),
        ProbeKind::Binarize => Ok(binarize(model, spec.scope)),
        ProbeKind::Noise(a) => Ok(inject_noise(model, a, spec.scope, rng)),
        ProbeKind::SignFlip(q) => Ok(flip_signs(model, q, spec.scope)),
        ProbeKind::Randomize(kind) => {
            let config = RewireConfig::default();
            let mut out = model.clone();
            for (id, m) in scoped(&mut out, spec.scope) {
                let layer = SignedBipartiteLayer::new(m.clone());
                let randomized = randomize::randomize_layer(
                    &layer,
                    kind,
                    &config,
                    &mut rng.substream(id as u64),
                )?;
                *m = randomized.into_weights();
            }
            Ok(out)
        }
    }
}

/// Applies a probe to every matrix of a bundle independently: each
/// matrix is its own layer, ranked alone for prune and flip, with its
/// own substream (`rng.substream(i)` for the matrix at position `i`).
/// Names, order, and metadata pass through untouched; only values
/// change. Scope does not apply to bundles and is ignored.
pub fn apply_probe_to_bundle(
    bundle: &crate::bundle::WeightsBundle,
    kind: ProbeKind,
    rng: &RngStream,
) -> Result<crate::bundle::WeightsBundle> {
    ProbeSpec::new(kind).validated()?;
    let mut out = bundle.clone();
    for (idx, (_, matrix)) in out.matrices_mut().enumerate() {
        match kind {
            ProbeKind::Prune(p) => prune_matrices(&mut [(idx, matrix)], p),
            ProbeKind::Binarize => binarize_matrix(matrix),
            ProbeKind::Noise(a) => noise_matrix(matrix, a, &mut rng.substream(idx as u64)),
            ProbeKind::SignFlip(q) => flip_matrices(&mut [(idx, matrix)], q),
            ProbeKind::Randomize(k) => {
                let layer = SignedBipartiteLayer::new(matrix.clone());
                let randomized = randomize::randomize_layer(
                    &layer,
                    k,
                    &RewireConfig::default(),
                    &mut rng.substream(idx as u64),
                )?;
                *matrix = randomized.into_weights();
            }
        }
    }
    Ok(out)
}
