//! Replicated probe sweeps and task-complexity matrices.
//!
//! A sweep trains `n_reps` independent models on one task, applies a
//! probe family across a parameter grid to every model, and records
//! test accuracy per `(variant, grid point, replication)`. Quartile
//! aggregates feed the plots; the raw table feeds the CSVs.
//!
//! Seeds: replication `r` of a sweep (or unit `pair_index *
//! realizations + r` of a complexity matrix) derives its streams from
//! `RngStream::new(base_seed, r)`: the first value of `substream(0)`
//! seeds training, and `substream(1)` is the root for probe draws,
//! which take one further substream per grid slot. Results therefore
//! depend only on `(inputs, base_seed)`, never on thread count or
//! execution order.

use rayon::prelude::*;

use crate::data::{make_pair_task, ImageDataset, PairTask};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mlp::{self, LabeledBatch, TrainConfig};
use crate::probes::{self, ProbeScope};
use crate::randomize::RandomizationKind;
use crate::rng::RngStream;
use crate::stats::{self, QuartileSummary};

/// Options shared by every sweep family.
#[derive(Debug, Clone)]
pub struct SweepOpts {
    /// Root of all seed derivation for this sweep.
    pub base_seed: u64,
    /// Training template; its `seed` field is ignored and replaced by
    /// the per-replication derived seed.
    pub train: TrainConfig,
    /// Base variant name; the binarized companion is `signed-<label>`.
    pub label: String,
}

impl SweepOpts {
    pub fn new(base_seed: u64, label: impl Into<String>) -> Self {
        SweepOpts {
            base_seed,
            train: TrainConfig::default(),
            label: label.into(),
        }
    }
}

/// Per-replication seed derivation; see the module docs.
fn replication_streams(base_seed: u64, unit: u64) -> (u64, RngStream) {
    let root = RngStream::new(base_seed, unit);
    let train_seed = root.substream(0).next_u64();
    (train_seed, root.substream(1))
}

/// Accuracies of one named curve: `accuracies[g][r]` is grid point `g`,
/// replication `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepVariant {
    pub name: String,
    pub accuracies: Vec<Vec<f64>>,
}

/// A completed sweep: raw per-replication accuracies plus quartile
/// aggregates, `aggregates[v][g]` matching `variants[v].accuracies[g]`.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub probe_family: String,
    pub grid: Vec<f64>,
    pub variants: Vec<SweepVariant>,
    pub aggregates: Vec<Vec<QuartileSummary>>,
    /// Values marked with dotted vertical lines in plots, e.g. the mean
    /// weight standard deviation of a noise sweep.
    pub reference_lines: Vec<f64>,
}

impl SweepResult {
    /// Assembles a result and computes the aggregates. All variants
    /// must cover the full grid with the same replication count.
    pub fn from_parts(
        probe_family: impl Into<String>,
        grid: Vec<f64>,
        variants: Vec<SweepVariant>,
        reference_lines: Vec<f64>,
    ) -> Result<Self> {
        if grid.is_empty() || variants.is_empty() {
            return Err(Error::EmptySample);
        }
        let reps = variants
            .first()
            .and_then(|v| v.accuracies.first())
            .map(|r| r.len())
            .unwrap_or(0);
        if reps == 0 {
            return Err(Error::EmptySample);
        }
        let mut aggregates = Vec::with_capacity(variants.len());
        for v in &variants {
            if v.accuracies.len() != grid.len() {
                return Err(Error::LengthMismatch {
                    left: v.accuracies.len(),
                    right: grid.len(),
                });
            }
            let mut per_grid = Vec::with_capacity(grid.len());
            for cell in &v.accuracies {
                if cell.len() != reps {
                    return Err(Error::LengthMismatch {
                        left: cell.len(),
                        right: reps,
                    });
                }
                per_grid.push(stats::quartiles(cell)?);
            }
            aggregates.push(per_grid);
        }
        Ok(SweepResult {
            probe_family: probe_family.into(),
            grid,
            variants,
            aggregates,
            reference_lines,
        })
    }

    pub fn replications(&self) -> usize {
        self.variants[0].accuracies[0].len()
    }

    pub fn variant(&self, name: &str) -> Option<&SweepVariant> {
        self.variants.iter().find(|v| v.name == name)
    }

    /// Median accuracy across replications at every grid point.
    pub fn median_curve(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.variants.iter().position(|v| v.name == name)?;
        Some(self.aggregates[idx].iter().map(|q| q.median).collect())
    }

    /// Combines two sweeps over the same family and grid (e.g. the easy
    /// and hard task runs) into one result holding all variants.
    pub fn merge(mut self, other: SweepResult) -> Result<SweepResult> {
        if self.probe_family != other.probe_family {
            return Err(Error::invalid(format!(
                "cannot merge sweeps of {} with {}",
                self.probe_family, other.probe_family
            )));
        }
        if self.grid != other.grid {
            return Err(Error::invalid("cannot merge sweeps over different grids"));
        }
        for v in &other.variants {
            if self.variants.iter().any(|mine| mine.name == v.name) {
                return Err(Error::DuplicateName(v.name.clone()));
            }
        }
        self.variants.extend(other.variants);
        self.aggregates.extend(other.aggregates);
        self.reference_lines.extend(other.reference_lines);
        Ok(self)
    }

    /// Raw table, one row per `(variant, grid point, replication)` in
    /// that nesting order. Line endings are LF; floats use the shortest
    /// round-trip form, so equal inputs give byte-identical output.
    pub fn raw_csv(&self) -> String {
        let mut out = String::from("probe_family,grid_value,variant,replication,accuracy\n");
        for v in &self.variants {
            for (g, cell) in v.accuracies.iter().enumerate() {
                for (r, acc) in cell.iter().enumerate() {
                    out.push_str(&format!(
                        "{},{},{},{},{}\n",
                        self.probe_family, self.grid[g], v.name, r, acc
                    ));
                }
            }
        }
        out
    }

    /// Quartile table, one row per `(variant, grid point)`.
    pub fn aggregate_csv(&self) -> String {
        let mut out = String::from("probe_family,grid_value,variant,median,q1,q3,n\n");
        for (v, aggs) in self.variants.iter().zip(&self.aggregates) {
            for (g, q) in aggs.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    self.probe_family, self.grid[g], v.name, q.median, q.q1, q.q3, q.n
                ));
            }
        }
        out
    }
}

/// Fractions `0.00, 0.05, ..., 0.95`, the default grid for pruning and
/// sign flipping.
pub fn default_fraction_grid() -> Vec<f64> {
    (0..20).map(|i| i as f64 / 20.0).collect()
}

/// Noise amplitudes: zero, then 25 points log-spaced over
/// `[1e-3, 10]`.
pub fn default_noise_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    let n = 25;
    for k in 0..n {
        let exp = -3.0 + 4.0 * k as f64 / (n - 1) as f64;
        grid.push(10f64.powf(exp));
    }
    grid
}

fn run_replications<T: Send>(
    n_reps: usize,
    f: impl (Fn(usize) -> Result<T>) + Sync + Send,
) -> Result<Vec<T>> {
    if n_reps == 0 {
        return Err(Error::EmptySample);
    }
    (0..n_reps).into_par_iter().map(f).collect()
}

/// Transposes rep-major accuracy rows into a grid-major variant.
fn variant_from_rows(name: impl Into<String>, rows: &[Vec<f64>]) -> SweepVariant {
    let grid_len = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut accuracies = vec![Vec::with_capacity(rows.len()); grid_len];
    for row in rows {
        debug_assert_eq!(row.len(), grid_len);
        for (g, &a) in row.iter().enumerate() {
            accuracies[g].push(a);
        }
    }
    SweepVariant {
        name: name.into(),
        accuracies,
    }
}

fn train_replica(
    task: &PairTask,
    hidden_dim: usize,
    opts: &SweepOpts,
    unit: u64,
) -> Result<(mlp::TrainOutcome, RngStream)> {
    let (train_seed, probe_root) = replication_streams(opts.base_seed, unit);
    let config = TrainConfig {
        seed: train_seed,
        ..opts.train.clone()
    };
    Ok((mlp::train(task, hidden_dim, &config)?, probe_root))
}

fn test_batch(task: &PairTask) -> LabeledBatch<'_> {
    LabeledBatch {
        inputs: &task.test_inputs,
        targets: &task.test_targets,
    }
}

/// Pruning sweep: at every fraction `p`, evaluates the pruned model and
/// the binarized pruned model (prune first, then binarize).
pub fn sweep_prune(
    task: &PairTask,
    hidden_dim: usize,
    n_reps: usize,
    grid: &[f64],
    opts: &SweepOpts,
) -> Result<SweepResult> {
    let scope = ProbeScope::default();
    let rows = run_replications(n_reps, |rep| {
        let (outcome, _) = train_replica(task, hidden_dim, opts, rep as u64)?;
        let mut plain = Vec::with_capacity(grid.len());
        let mut signed = Vec::with_capacity(grid.len());
        for &p in grid {
            let pruned = probes::prune(&outcome.model, p, scope);
            plain.push(mlp::accuracy(&pruned, test_batch(task))?);
            let bin = probes::binarize(&pruned, scope);
            signed.push(mlp::accuracy(&bin, test_batch(task))?);
        }
        Ok((plain, signed))
    })?;
    let plain: Vec<Vec<f64>> = rows.iter().map(|(p, _)| p.clone()).collect();
    let signed: Vec<Vec<f64>> = rows.iter().map(|(_, s)| s.clone()).collect();
    SweepResult::from_parts(
        "prune",
        grid.to_vec(),
        vec![
            variant_from_rows(opts.label.clone(), &plain),
            variant_from_rows(format!("signed-{}", opts.label), &signed),
        ],
        vec![],
    )
}

/// Noise sweep: at every amplitude, perturbs the trained model and the
/// binarized model (noise lands on the signs). The single reference
/// line is the mean weight standard deviation across replications.
pub fn sweep_noise(
    task: &PairTask,
    hidden_dim: usize,
    n_reps: usize,
    grid: &[f64],
    opts: &SweepOpts,
) -> Result<SweepResult> {
    let scope = ProbeScope::default();
    let rows = run_replications(n_reps, |rep| {
        let (outcome, probe_root) = train_replica(task, hidden_dim, opts, rep as u64)?;
        let sigma = mlp::weight_std(&outcome.model, scope)?;
        let bin = probes::binarize(&outcome.model, scope);
        let mut plain = Vec::with_capacity(grid.len());
        let mut signed = Vec::with_capacity(grid.len());
        for (g, &a) in grid.iter().enumerate() {
            let noisy = probes::inject_noise(
                &outcome.model,
                a,
                scope,
                &probe_root.substream(2 * g as u64),
            );
            plain.push(mlp::accuracy(&noisy, test_batch(task))?);
            let noisy_bin =
                probes::inject_noise(&bin, a, scope, &probe_root.substream(2 * g as u64 + 1));
            signed.push(mlp::accuracy(&noisy_bin, test_batch(task))?);
        }
        Ok((plain, signed, sigma))
    })?;
    let plain: Vec<Vec<f64>> = rows.iter().map(|(p, _, _)| p.clone()).collect();
    let signed: Vec<Vec<f64>> = rows.iter().map(|(_, s, _)| s.clone()).collect();
    let sigmas: Vec<f64> = rows.iter().map(|(_, _, s)| *s).collect();
    SweepResult::from_parts(
        "noise",
        grid.to_vec(),
        vec![
            variant_from_rows(opts.label.clone(), &plain),
            variant_from_rows(format!("signed-{}", opts.label), &signed),
        ],
        vec![stats::mean(&sigmas)?],
    )
}

/// Sign-flip sweep: at every fraction `q`, negates the signs of the
/// smallest-magnitude weights of the trained model, evaluated both
/// directly and after binarization. Ranking always uses the trained
/// magnitudes; on an already binarized matrix every magnitude ties.
pub fn sweep_signflip(
    task: &PairTask,
    hidden_dim: usize,
    n_reps: usize,
    grid: &[f64],
    opts: &SweepOpts,
) -> Result<SweepResult> {
    let scope = ProbeScope::default();
    let rows = run_replications(n_reps, |rep| {
        let (outcome, _) = train_replica(task, hidden_dim, opts, rep as u64)?;
        let mut plain = Vec::with_capacity(grid.len());
        let mut signed = Vec::with_capacity(grid.len());
        for &q in grid {
            let flipped = probes::flip_signs(&outcome.model, q, scope);
            plain.push(mlp::accuracy(&flipped, test_batch(task))?);
            let flipped_bin = probes::binarize(&flipped, scope);
            signed.push(mlp::accuracy(&flipped_bin, test_batch(task))?);
        }
        Ok((plain, signed))
    })?;
    let plain: Vec<Vec<f64>> = rows.iter().map(|(p, _)| p.clone()).collect();
    let signed: Vec<Vec<f64>> = rows.iter().map(|(_, s)| s.clone()).collect();
    SweepResult::from_parts(
        "flip",
        grid.to_vec(),
        vec![
            variant_from_rows(opts.label.clone(), &plain),
            variant_from_rows(format!("signed-{}", opts.label), &signed),
        ],
        vec![],
    )
}

/// Grid values identifying randomization kinds in sweep output: the
/// kind's position in `A..G`.
pub fn randomization_grid(kinds: &[RandomizationKind]) -> Vec<f64> {
    kinds
        .iter()
        .map(|k| {
            RandomizationKind::ALL
                .iter()
                .position(|a| a == k)
                .expect("kind is one of A..G") as f64
        })
        .collect()
}

/// Randomization sweep: per replication, applies every requested kind
/// to the trained model. The `original` variant repeats the unprobed
/// accuracy at every kind for reference; `randomized` carries the
/// effect. Each kind uses its own probe substream, indexed by its
/// position in `kinds`.
pub fn sweep_randomization(
    task: &PairTask,
    hidden_dim: usize,
    n_reps: usize,
    kinds: &[RandomizationKind],
    opts: &SweepOpts,
) -> Result<SweepResult> {
    if kinds.is_empty() {
        return Err(Error::EmptySample);
    }
    let rows = run_replications(n_reps, |rep| {
        let (outcome, probe_root) = train_replica(task, hidden_dim, opts, rep as u64)?;
        let base = mlp::accuracy(&outcome.model, test_batch(task))?;
        let mut randomized = Vec::with_capacity(kinds.len());
        for (ki, &kind) in kinds.iter().enumerate() {
            let spec = probes::ProbeSpec::new(probes::ProbeKind::Randomize(kind));
            let probed =
                probes::apply_probe(&outcome.model, spec, &probe_root.substream(ki as u64))?;
            randomized.push(mlp::accuracy(&probed, test_batch(task))?);
        }
        Ok((vec![base; kinds.len()], randomized))
    })?;
    let original: Vec<Vec<f64>> = rows.iter().map(|(o, _)| o.clone()).collect();
    let randomized: Vec<Vec<f64>> = rows.iter().map(|(_, r)| r.clone()).collect();
    SweepResult::from_parts(
        "randomize",
        randomization_grid(kinds),
        vec![
            variant_from_rows("original", &original),
            variant_from_rows("randomized", &randomized),
        ],
        vec![],
    )
}

/// Randomize-then-prune sweep: per replication and kind, randomizes the
/// trained model once, then prunes across the grid. The plain variant
/// prunes the unrandomized model; each kind adds `<label>-rand-<K>`.
pub fn sweep_randomize_then_prune(
    task: &PairTask,
    hidden_dim: usize,
    n_reps: usize,
    kinds: &[RandomizationKind],
    grid: &[f64],
    opts: &SweepOpts,
) -> Result<SweepResult> {
    if kinds.is_empty() {
        return Err(Error::EmptySample);
    }
    let scope = ProbeScope::default();
    let rows = run_replications(n_reps, |rep| {
        let (outcome, probe_root) = train_replica(task, hidden_dim, opts, rep as u64)?;
        let mut curves: Vec<Vec<f64>> = Vec::with_capacity(1 + kinds.len());
        let mut plain = Vec::with_capacity(grid.len());
        for &p in grid {
            let pruned = probes::prune(&outcome.model, p, scope);
            plain.push(mlp::accuracy(&pruned, test_batch(task))?);
        }
        curves.push(plain);
        for (ki, &kind) in kinds.iter().enumerate() {
            let spec = probes::ProbeSpec::new(probes::ProbeKind::Randomize(kind));
            let randomized =
                probes::apply_probe(&outcome.model, spec, &probe_root.substream(ki as u64))?;
            let mut curve = Vec::with_capacity(grid.len());
            for &p in grid {
                let pruned = probes::prune(&randomized, p, scope);
                curve.push(mlp::accuracy(&pruned, test_batch(task))?);
            }
            curves.push(curve);
        }
        Ok(curves)
    })?;
    let mut variants = Vec::with_capacity(1 + kinds.len());
    let plain_rows: Vec<Vec<f64>> = rows.iter().map(|c| c[0].clone()).collect();
    variants.push(variant_from_rows(opts.label.clone(), &plain_rows));
    for (ki, kind) in kinds.iter().enumerate() {
        let kind_rows: Vec<Vec<f64>> = rows.iter().map(|c| c[ki + 1].clone()).collect();
        variants.push(variant_from_rows(
            format!("{}-rand-{}", opts.label, kind),
            &kind_rows,
        ));
    }
    SweepResult::from_parts("randomize-prune", grid.to_vec(), variants, vec![])
}

/// Weight standard deviation of each of `n_reps` trained models.
pub fn weight_std_distribution(
    task: &PairTask,
    hidden_dim: usize,
    n_reps: usize,
    opts: &SweepOpts,
) -> Result<Vec<f64>> {
    run_replications(n_reps, |rep| {
        let (outcome, _) = train_replica(task, hidden_dim, opts, rep as u64)?;
        mlp::weight_std(&outcome.model, ProbeScope::default())
    })
}

/// The probe a complexity matrix applies to every trained model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexityProbe {
    Binarize,
    RandomizeB,
}

impl std::fmt::Display for ComplexityProbe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ComplexityProbe::Binarize => write!(f, "binarize"),
            ComplexityProbe::RandomizeB => write!(f, "randomize-b"),
        }
    }
}

impl std::str::FromStr for ComplexityProbe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binarize" => Ok(ComplexityProbe::Binarize),
            "randomize-b" => Ok(ComplexityProbe::RandomizeB),
            other => Err(Error::invalid(format!(
                "unknown complexity probe {other:?}, expected binarize or randomize-b"
            ))),
        }
    }
}

/// Mean accuracies over all class pairs for one probe. Matrices are
/// `10 x 10`, symmetric, with NaN on the diagonal (a class has no pair
/// with itself).
#[derive(Debug, Clone)]
pub struct ComplexityMatrix {
    pub probe: ComplexityProbe,
    pub realizations: usize,
    /// Mean unprobed test accuracy per pair.
    pub base_accuracy: Matrix,
    /// Mean accuracy drop `base - probed` per pair.
    pub delta_accuracy: Matrix,
}

/// All `(a, b)` class pairs with `a < b`, in row-major order.
pub fn class_pairs() -> Vec<(u8, u8)> {
    let mut pairs = Vec::with_capacity(45);
    for a in 0..10u8 {
        for b in (a + 1)..10 {
            pairs.push((a, b));
        }
    }
    pairs
}

impl ComplexityMatrix {
    /// Upper-triangle deltas in `class_pairs` order, the vector the
    /// rank correlation runs over.
    pub fn upper_triangle_deltas(&self) -> Vec<f64> {
        class_pairs()
            .iter()
            .map(|&(a, b)| self.delta_accuracy.get(a as usize, b as usize))
            .collect()
    }

    /// One row per pair: `class_a,class_b,base_accuracy,probed_accuracy,delta`.
    pub fn csv(&self) -> String {
        let mut out = String::from("class_a,class_b,base_accuracy,probed_accuracy,delta\n");
        for (a, b) in class_pairs() {
            let base = self.base_accuracy.get(a as usize, b as usize);
            let delta = self.delta_accuracy.get(a as usize, b as usize);
            out.push_str(&format!("{a},{b},{base},{},{delta}\n", base - delta));
        }
        out
    }
}

/// Trains `realizations` models per class pair and measures each
/// requested probe on every model, sharing the trainings across probes.
///
/// Unit `pair_index * realizations + r` drives seed derivation, so any
/// single `(pair, realization)` cell can be reproduced in isolation.
pub fn complexity_matrices(
    train_ds: &ImageDataset,
    test_ds: &ImageDataset,
    hidden_dim: usize,
    probe_kinds: &[ComplexityProbe],
    realizations: usize,
    base_seed: u64,
    train_template: &TrainConfig,
) -> Result<Vec<ComplexityMatrix>> {
    if probe_kinds.is_empty() || realizations == 0 {
        return Err(Error::EmptySample);
    }
    let pairs = class_pairs();
    let cells: Vec<(f64, Vec<f64>)> = pairs
        .par_iter()
        .enumerate()
        .map(|(pair_index, &(a, b))| -> Result<(f64, Vec<f64>)> {
            let task = make_pair_task(train_ds, test_ds, a, b)?;
            let batch = LabeledBatch {
                inputs: &task.test_inputs,
                targets: &task.test_targets,
            };
            let mut base_sum = 0.0;
            let mut probed_sums = vec![0.0f64; probe_kinds.len()];
            for r in 0..realizations {
                let unit = (pair_index * realizations + r) as u64;
                let (train_seed, probe_root) = replication_streams(base_seed, unit);
                let config = TrainConfig {
                    seed: train_seed,
                    ..train_template.clone()
                };
                let outcome = mlp::train(&task, hidden_dim, &config)?;
                base_sum += outcome.best_test_accuracy;
                for (pi, probe) in probe_kinds.iter().enumerate() {
                    let probed = match probe {
                        ComplexityProbe::Binarize => {
                            probes::binarize(&outcome.model, ProbeScope::default())
                        }
                        ComplexityProbe::RandomizeB => probes::apply_probe(
                            &outcome.model,
                            probes::ProbeSpec::new(probes::ProbeKind::Randomize(
                                RandomizationKind::B,
                            )),
                            &probe_root.substream(pi as u64),
                        )?,
                    };
                    probed_sums[pi] += mlp::accuracy(&probed, batch)?;
                }
            }
            let n = realizations as f64;
            Ok((base_sum / n, probed_sums.iter().map(|s| s / n).collect()))
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(probe_kinds.len());
    for (pi, &probe) in probe_kinds.iter().enumerate() {
        let mut base = Matrix::from_vec(10, 10, vec![f64::NAN; 100]);
        let mut delta = Matrix::from_vec(10, 10, vec![f64::NAN; 100]);
        for (&(a, b), (mean_base, mean_probed)) in pairs.iter().zip(&cells) {
            let (i, j) = (a as usize, b as usize);
            base.set(i, j, *mean_base);
            base.set(j, i, *mean_base);
            let d = mean_base - mean_probed[pi];
            delta.set(i, j, d);
            delta.set(j, i, d);
        }
        out.push(ComplexityMatrix {
            probe,
            realizations,
            base_accuracy: base,
            delta_accuracy: delta,
        });
    }
    Ok(out)
}

/// Convenience wrapper for a single probe.
pub fn complexity_matrix(
    train_ds: &ImageDataset,
    test_ds: &ImageDataset,
    hidden_dim: usize,
    probe: ComplexityProbe,
    realizations: usize,
    base_seed: u64,
    train_template: &TrainConfig,
) -> Result<ComplexityMatrix> {
    Ok(complexity_matrices(
        train_ds,
        test_ds,
        hidden_dim,
        &[probe],
        realizations,
        base_seed,
        train_template,
    )?
    .remove(0))
}

/// Spearman rank correlation between the upper-triangle deltas of two
/// complexity matrices.
pub fn complexity_correlation(a: &ComplexityMatrix, b: &ComplexityMatrix) -> Result<f64> {
    stats::spearman(&a.upper_triangle_deltas(), &b.upper_triangle_deltas())
}
