//! End-to-end acceptance checks for the probe pipeline on MNIST.
//!
//! Each test pins one quantitative claim about the trained models, so a
//! failure names the exact behavior that regressed. Expensive sweep
//! fixtures are trained once and shared across tests. The MNIST cache
//! must exist (`probekit fetch-data --dataset mnist`); the fixtures
//! panic with that hint when it is missing.

use std::path::PathBuf;
use std::sync::OnceLock;

use probekit::data::{self, DatasetKind, ImageDataset, PairTask, Split};
use probekit::harness::{self, ComplexityProbe, SweepOpts, SweepResult};
use probekit::matrix::Matrix;
use probekit::mlp::{self, LabeledBatch, TrainConfig};
use probekit::probes::{self, ProbeKind};
use probekit::randomize::{self, RandomizationKind, RewireConfig};
use probekit::rng::RngStream;
use probekit::stats;

const HIDDEN_DIM: usize = 64;
const BASE_SEED: u64 = 0;

// ---------------------------------------------------------------------
// Shared fixtures.

fn data_dir() -> PathBuf {
    match std::env::var_os(data::DATA_DIR_ENV) {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"),
    }
}

fn datasets() -> &'static (ImageDataset, ImageDataset) {
    static DATA: OnceLock<(ImageDataset, ImageDataset)> = OnceLock::new();
    DATA.get_or_init(|| {
        let dir = data_dir();
        let load = |split| {
            data::load_dataset(&dir, DatasetKind::Mnist, split).unwrap_or_else(|e| {
                panic!(
                    "MNIST cache missing under {} ({e}); run `probekit fetch-data --dataset mnist` first",
                    dir.display()
                )
            })
        };
        (load(Split::Train), load(Split::Test))
    })
}

fn easy_task() -> &'static PairTask {
    static TASK: OnceLock<PairTask> = OnceLock::new();
    TASK.get_or_init(|| {
        let (train, test) = datasets();
        data::make_pair_task(train, test, 0, 7).unwrap()
    })
}

fn hard_task() -> &'static PairTask {
    static TASK: OnceLock<PairTask> = OnceLock::new();
    TASK.get_or_init(|| {
        let (train, test) = datasets();
        data::make_pair_task(train, test, 7, 9).unwrap()
    })
}

fn opts(label: &str) -> SweepOpts {
    SweepOpts {
        base_seed: BASE_SEED,
        train: TrainConfig::default(),
        label: label.to_string(),
    }
}

/// Pruning sweeps for both tasks, 20 replications over the default
/// fraction grid. Replication seeds depend only on the replication
/// index, so the first ten rows are exactly a ten-replication run.
fn prune_sweeps() -> &'static (SweepResult, SweepResult) {
    static SWEEPS: OnceLock<(SweepResult, SweepResult)> = OnceLock::new();
    SWEEPS.get_or_init(|| {
        let grid = harness::default_fraction_grid();
        let easy = harness::sweep_prune(easy_task(), HIDDEN_DIM, 20, &grid, &opts("easy")).unwrap();
        let hard = harness::sweep_prune(hard_task(), HIDDEN_DIM, 20, &grid, &opts("hard")).unwrap();
        (easy, hard)
    })
}

fn noise_sweep_hard() -> &'static SweepResult {
    static SWEEP: OnceLock<SweepResult> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let grid = harness::default_noise_grid();
        harness::sweep_noise(hard_task(), HIDDEN_DIM, 10, &grid, &opts("hard")).unwrap()
    })
}

fn flip_sweeps() -> &'static (SweepResult, SweepResult) {
    static SWEEPS: OnceLock<(SweepResult, SweepResult)> = OnceLock::new();
    SWEEPS.get_or_init(|| {
        let grid = harness::default_fraction_grid();
        let easy =
            harness::sweep_signflip(easy_task(), HIDDEN_DIM, 10, &grid, &opts("easy")).unwrap();
        let hard =
            harness::sweep_signflip(hard_task(), HIDDEN_DIM, 10, &grid, &opts("hard")).unwrap();
        (easy, hard)
    })
}

fn randomization_sweep_easy() -> &'static SweepResult {
    static SWEEP: OnceLock<SweepResult> = OnceLock::new();
    SWEEP.get_or_init(|| {
        harness::sweep_randomization(
            easy_task(),
            HIDDEN_DIM,
            20,
            &RandomizationKind::ALL,
            &opts("easy"),
        )
        .unwrap()
    })
}

/// Median curve of one variant, indexed like the sweep grid.
fn medians(result: &SweepResult, variant: &str) -> Vec<f64> {
    let idx = result
        .variants
        .iter()
        .position(|v| v.name == variant)
        .unwrap_or_else(|| panic!("variant {variant} missing"));
    result.aggregates[idx].iter().map(|q| q.median).collect()
}

fn median_of(xs: &[f64]) -> f64 {
    stats::quartiles(xs).unwrap().median
}

// ---------------------------------------------------------------------
// Training floor.

#[test]
fn training_reaches_accuracy_floors_on_mnist_pairs() {
    let (easy, hard) = prune_sweeps();
    // Unprobed accuracy is the zero-pruning row; first ten replications.
    let easy_acc = median_of(&easy.variant("easy").unwrap().accuracies[0][..10]);
    let hard_acc = median_of(&hard.variant("hard").unwrap().accuracies[0][..10]);
    assert!(
        easy_acc >= 0.98,
        "median accuracy on the 0-vs-7 pair was {easy_acc:.4}, need >= 0.98"
    );
    assert!(
        hard_acc >= 0.95,
        "median accuracy on the 7-vs-9 pair was {hard_acc:.4}, need >= 0.95"
    );
}

// ---------------------------------------------------------------------
// Binarization at zero pruning.

#[test]
fn binarized_easy_models_stay_accurate() {
    let (easy, _) = prune_sweeps();
    let signed = medians(easy, "signed-easy")[0];
    assert!(
        signed >= 0.90,
        "binarized easy-task median accuracy was {signed:.4}, need >= 0.90"
    );
}

#[test]
fn binarized_hard_models_fall_toward_chance() {
    let (_, hard) = prune_sweeps();
    let signed = medians(hard, "signed-hard")[0];
    assert!(
        signed <= 0.65,
        "binarized hard-task median accuracy was {signed:.4}, need <= 0.65"
    );
}

#[test]
fn binarization_gap_separates_hard_from_easy() {
    let (easy, hard) = prune_sweeps();
    let delta_easy = medians(easy, "easy")[0] - medians(easy, "signed-easy")[0];
    let delta_hard = medians(hard, "hard")[0] - medians(hard, "signed-hard")[0];
    let gap = delta_hard - delta_easy;
    assert!(
        gap >= 0.15,
        "binarization deltas: hard {delta_hard:.4}, easy {delta_easy:.4}, gap {gap:.4}, need >= 0.15"
    );
}

// ---------------------------------------------------------------------
// Pruning curves.

#[test]
fn pruning_reveals_transition_in_binarized_hard_models() {
    let (_, hard) = prune_sweeps();
    let curve = medians(hard, "signed-hard");
    let at_zero = curve[0];
    let peak = curve.iter().cloned().fold(f64::MIN, f64::max);
    assert!(
        peak >= at_zero + 0.05,
        "binarized hard curve peaks at {peak:.4} vs {at_zero:.4} at zero pruning, need +0.05"
    );
    let max_jump = curve
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::MIN, f64::max);
    assert!(
        max_jump >= 0.05,
        "largest adjacent-fraction rise was {max_jump:.4}, need >= 0.05"
    );
}

#[test]
fn binarized_easy_models_tolerate_pruning_to_half() {
    let (easy, _) = prune_sweeps();
    let curve = medians(easy, "signed-easy");
    for (g, m) in easy.grid.iter().zip(&curve) {
        if *g <= 0.5 {
            assert!(
                *m >= 0.80,
                "binarized easy median fell to {m:.4} at pruning fraction {g}, need >= 0.80"
            );
        }
    }
}

// ---------------------------------------------------------------------
// Uniform weight noise.

#[test]
fn noise_exhibits_resonance_on_binarized_hard() {
    let sweep = noise_sweep_hard();
    let curve = medians(sweep, "signed-hard");
    let at_zero = curve[0];
    let best = sweep
        .grid
        .iter()
        .zip(&curve)
        .filter(|(a, _)| **a > 0.0)
        .map(|(_, m)| *m)
        .fold(f64::MIN, f64::max);
    assert!(
        best >= at_zero + 0.03,
        "best noisy accuracy {best:.4} vs noiseless {at_zero:.4}, need +0.03"
    );
}

#[test]
fn heavy_noise_collapses_binarized_hard() {
    let sweep = noise_sweep_hard();
    let sigma = sweep.reference_lines[0];
    let curve = medians(sweep, "signed-hard");
    let heavy: Vec<(f64, f64)> = sweep
        .grid
        .iter()
        .zip(&curve)
        .filter(|(a, _)| **a >= 10.0 * sigma)
        .map(|(a, m)| (*a, *m))
        .collect();
    assert!(
        !heavy.is_empty(),
        "no grid amplitude reaches ten weight standard deviations ({sigma:.3})"
    );
    for (a, m) in heavy {
        assert!(
            m <= 0.65,
            "median accuracy {m:.4} at amplitude {a:.3} (>= 10 sigma), need <= 0.65"
        );
    }
}

// ---------------------------------------------------------------------
// Sign flipping.

fn flip_peak_gain(result: &SweepResult, variant: &str) -> (f64, f64) {
    let curve = medians(result, variant);
    let at_zero = curve[0];
    let best = result
        .grid
        .iter()
        .zip(&curve)
        .filter(|(q, _)| **q > 0.0 && **q <= 0.5)
        .map(|(_, m)| *m)
        .fold(f64::MIN, f64::max);
    (at_zero, best)
}

#[test]
fn sign_flip_peak_on_binarized_hard() {
    let (_, hard) = flip_sweeps();
    let (at_zero, best) = flip_peak_gain(hard, "signed-hard");
    assert!(
        best >= at_zero + 0.02,
        "binarized hard flip curve best {best:.4} vs {at_zero:.4} at zero, need +0.02"
    );
}

#[test]
fn sign_flip_peak_on_binarized_easy() {
    let (easy, _) = flip_sweeps();
    let (at_zero, best) = flip_peak_gain(easy, "signed-easy");
    assert!(
        best >= at_zero + 0.02,
        "binarized easy flip curve best {best:.4} vs {at_zero:.4} at zero, need +0.02"
    );
}

// ---------------------------------------------------------------------
// Degree/strength randomizations of the easy model.

fn randomized_medians() -> (f64, Vec<f64>) {
    let sweep = randomization_sweep_easy();
    let original = medians(sweep, "original")[0];
    (original, medians(sweep, "randomized"))
}

fn kind_index(kind: RandomizationKind) -> usize {
    RandomizationKind::ALL
        .iter()
        .position(|k| *k == kind)
        .unwrap()
}

#[test]
fn structure_preserving_randomizations_keep_easy_accuracy() {
    let (original, by_kind) = randomized_medians();
    for kind in [
        RandomizationKind::B,
        RandomizationKind::E,
        RandomizationKind::F,
    ] {
        let m = by_kind[kind_index(kind)];
        assert!(
            original - m <= 0.05,
            "kind {} median {m:.4} vs original {original:.4}, need within 0.05",
            kind.letter()
        );
    }
}

#[test]
fn structure_breaking_randomizations_collapse_easy_accuracy() {
    let (_, by_kind) = randomized_medians();
    for kind in [
        RandomizationKind::A,
        RandomizationKind::C,
        RandomizationKind::D,
        RandomizationKind::G,
    ] {
        let m = by_kind[kind_index(kind)];
        assert!(
            m <= 0.65,
            "kind {} median {m:.4}, need <= 0.65",
            kind.letter()
        );
    }
}

#[test]
fn randomization_dichotomy_gap() {
    let (_, by_kind) = randomized_medians();
    let b = by_kind[kind_index(RandomizationKind::B)];
    let g = by_kind[kind_index(RandomizationKind::G)];
    assert!(
        b - g >= 0.2,
        "kind B median {b:.4} vs kind G {g:.4}, gap {:.4} needs >= 0.2",
        b - g
    );
}

// ---------------------------------------------------------------------
// Structural invariants of every randomization kind, checked against
// profile computations written out longhand here so a defect in the
// graph module cannot hide itself.

#[derive(PartialEq, Debug, Clone)]
struct Profile {
    alpha: f64,
    row_pos_deg: Vec<usize>,
    row_neg_deg: Vec<usize>,
    col_pos_deg: Vec<usize>,
    col_neg_deg: Vec<usize>,
    row_pos_str: Vec<f64>,
    row_neg_str: Vec<f64>,
    col_pos_str: Vec<f64>,
    col_neg_str: Vec<f64>,
}

fn profile(m: &Matrix) -> Profile {
    let (rows, cols) = (m.rows(), m.cols());
    let mut p = Profile {
        alpha: 0.0,
        row_pos_deg: vec![0; rows],
        row_neg_deg: vec![0; rows],
        col_pos_deg: vec![0; cols],
        col_neg_deg: vec![0; cols],
        row_pos_str: vec![0.0; rows],
        row_neg_str: vec![0.0; rows],
        col_pos_str: vec![0.0; cols],
        col_neg_str: vec![0.0; cols],
    };
    let (mut pos, mut nonzero) = (0usize, 0usize);
    for i in 0..rows {
        for j in 0..cols {
            let v = m.get(i, j);
            if v > 0.0 {
                pos += 1;
                nonzero += 1;
                p.row_pos_deg[i] += 1;
                p.col_pos_deg[j] += 1;
                p.row_pos_str[i] += v;
                p.col_pos_str[j] += v;
            } else if v < 0.0 {
                nonzero += 1;
                p.row_neg_deg[i] += 1;
                p.col_neg_deg[j] += 1;
                p.row_neg_str[i] += -v;
                p.col_neg_str[j] += -v;
            }
        }
    }
    p.alpha = pos as f64 / nonzero as f64;
    p
}

fn strengths_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn strengths_differ(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-9)
}

/// Sorted multiset of the nonzero signed values.
fn signed_values(m: &Matrix) -> Vec<f64> {
    let mut v: Vec<f64> = m.values().iter().copied().filter(|x| *x != 0.0).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Whether the sign pattern contains a 2x2 submatrix with one sign on
/// the diagonal and the other on the antidiagonal, the only situation a
/// checkerboard swap can act on. Checked by brute force over all row
/// and column pairs.
fn admits_checkerboard(m: &Matrix) -> bool {
    let (rows, cols) = (m.rows(), m.cols());
    for i1 in 0..rows {
        for i2 in i1 + 1..rows {
            for j1 in 0..cols {
                for j2 in j1 + 1..cols {
                    let a = m.get(i1, j1);
                    let b = m.get(i1, j2);
                    let c = m.get(i2, j1);
                    let d = m.get(i2, j2);
                    if a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0 {
                        continue;
                    }
                    let same_diag = a.signum() == d.signum() && b.signum() == c.signum();
                    if same_diag && a.signum() != b.signum() {
                        return true;
                    }
                }
            }
        }
    }
    false
}

fn random_signed_matrix(rng: &mut RngStream) -> Matrix {
    loop {
        let values: Vec<f64> = (0..48)
            .map(|_| {
                if rng.uniform(0.0, 1.0) < 0.75 {
                    let v = rng.uniform(-2.0, 2.0);
                    if v == 0.0 {
                        1.0
                    } else {
                        v
                    }
                } else {
                    0.0
                }
            })
            .collect();
        let m = Matrix::from_vec(8, 6, values);
        let p = profile(&m);
        // Need both signs present so alpha and the strength checks are
        // informative.
        if p.row_pos_deg.iter().sum::<usize>() > 0 && p.row_neg_deg.iter().sum::<usize>() > 0 {
            return m;
        }
    }
}

#[test]
fn randomization_kinds_preserve_declared_structure() {
    use RandomizationKind::*;
    let draws = 1000;
    let rng = RngStream::new(1234, 0);
    // Per kind and per strength profile (row+, row-, col+, col-): counts
    // of draws where a non-preserved profile actually changed; per kind,
    // count of draws where the signed value multiset changed.
    let mut strength_changed = vec![[0usize; 4]; RandomizationKind::ALL.len()];
    let mut values_changed = vec![0usize; RandomizationKind::ALL.len()];
    let mut admitting = 0usize;

    for draw in 0..draws {
        let mut draw_rng = rng.substream(draw as u64);
        let m = random_signed_matrix(&mut draw_rng);
        let before = profile(&m);
        let admits = admits_checkerboard(&m);
        if admits {
            admitting += 1;
        }
        let layer = probekit::bipartite::SignedBipartiteLayer::new(m.clone());

        for (ki, &kind) in RandomizationKind::ALL.iter().enumerate() {
            let out = randomize::randomize_layer(
                &layer,
                kind,
                &RewireConfig::default(),
                &mut draw_rng.substream(ki as u64),
            )
            .unwrap();
            let out = out.into_weights();
            let after = profile(&out);

            // Alpha is preserved by every kind.
            assert!(
                (after.alpha - before.alpha).abs() <= 1e-12,
                "kind {} changed alpha on draw {draw}",
                kind.letter()
            );
            // Signed degrees, exactly per declaration: B/E/F fix the sign
            // pattern and G rewires it margin-preservingly, so both sides
            // hold; C and D permute signed values on one side only, which
            // repaints the other side's signs.
            let row_degrees_kept = matches!(kind, B | D | E | F | G);
            let col_degrees_kept = matches!(kind, B | C | E | F | G);
            if row_degrees_kept {
                assert_eq!(
                    (&after.row_pos_deg, &after.row_neg_deg),
                    (&before.row_pos_deg, &before.row_neg_deg),
                    "kind {} changed row degrees on draw {draw}",
                    kind.letter()
                );
            }
            if col_degrees_kept {
                assert_eq!(
                    (&after.col_pos_deg, &after.col_neg_deg),
                    (&before.col_pos_deg, &before.col_neg_deg),
                    "kind {} changed column degrees on draw {draw}",
                    kind.letter()
                );
            }
            // Strength profiles declared invariant per kind. Rows hold
            // the output side of the layer, columns the input side.
            let col_strengths_kept = matches!(kind, C | E);
            let row_strengths_kept = matches!(kind, D | F);
            if col_strengths_kept {
                assert!(
                    strengths_close(&after.col_pos_str, &before.col_pos_str, 1e-12)
                        && strengths_close(&after.col_neg_str, &before.col_neg_str, 1e-12),
                    "kind {} changed column strengths on draw {draw}",
                    kind.letter()
                );
            }
            if row_strengths_kept {
                assert!(
                    strengths_close(&after.row_pos_str, &before.row_pos_str, 1e-12)
                        && strengths_close(&after.row_neg_str, &before.row_neg_str, 1e-12),
                    "kind {} changed row strengths on draw {draw}",
                    kind.letter()
                );
            }
            // Every strength profile NOT declared invariant must move in
            // nearly every draw, otherwise the kind is a partial no-op.
            // Profile order: row+, row-, col+, col-.
            let free = [
                !row_strengths_kept,
                !row_strengths_kept,
                !col_strengths_kept,
                !col_strengths_kept,
            ];
            let moved = [
                strengths_differ(&after.row_pos_str, &before.row_pos_str),
                strengths_differ(&after.row_neg_str, &before.row_neg_str),
                strengths_differ(&after.col_pos_str, &before.col_pos_str),
                strengths_differ(&after.col_neg_str, &before.col_neg_str),
            ];
            for p in 0..4 {
                if free[p] && moved[p] {
                    strength_changed[ki][p] += 1;
                }
            }

            // Sign-value preservation: kinds A-F only move values around
            // (or recompose sign times magnitude exactly), so the signed
            // multiset is bit-identical. Kind G repaints signs after a
            // global magnitude shuffle, which must disturb the multiset
            // whenever the pattern admits a checkerboard.
            let same_values = signed_values(&out) == signed_values(&m);
            if kind != G {
                assert!(
                    same_values,
                    "kind {} altered the signed value multiset on draw {draw}",
                    kind.letter()
                );
            } else if admits && !same_values {
                values_changed[ki] += 1;
            }
        }
    }

    assert!(
        admitting >= 900,
        "only {admitting}/1000 draws admit a checkerboard; the generator is off"
    );
    let profile_names = ["row+", "row-", "col+", "col-"];
    for (ki, &kind) in RandomizationKind::ALL.iter().enumerate() {
        let row_kept = matches!(kind, RandomizationKind::D | RandomizationKind::F);
        let col_kept = matches!(kind, RandomizationKind::C | RandomizationKind::E);
        let free = [!row_kept, !row_kept, !col_kept, !col_kept];
        for p in 0..4 {
            if free[p] {
                assert!(
                    strength_changed[ki][p] >= 990,
                    "kind {} left the free {} strength profile unchanged in {} of {draws} draws",
                    kind.letter(),
                    profile_names[p],
                    draws - strength_changed[ki][p]
                );
            }
        }
    }
    let g = kind_index(RandomizationKind::G);
    assert!(
        values_changed[g] * 100 >= admitting * 99,
        "kind G kept the signed value multiset on {} of {admitting} checkerboard-admitting draws",
        admitting - values_changed[g]
    );
}

// ---------------------------------------------------------------------
// Task-complexity agreement between probes.

#[test]
fn complexity_measures_agree_across_probes() {
    let (train, test) = datasets();
    let matrices = harness::complexity_matrices(
        train,
        test,
        HIDDEN_DIM,
        &[ComplexityProbe::Binarize, ComplexityProbe::RandomizeB],
        10,
        BASE_SEED,
        &TrainConfig::default(),
    )
    .unwrap();
    let rho = harness::complexity_correlation(&matrices[0], &matrices[1]).unwrap();
    assert!(
        rho >= 0.7,
        "rank correlation between binarization and randomization deltas was {rho:.4}, need >= 0.7"
    );
}

// ---------------------------------------------------------------------
// Gradient oracle.

#[test]
fn analytic_gradients_match_finite_differences_on_toy_model() {
    let mut rng = RngStream::new(41, 0);
    let model = mlp::init_model(5, 9, &mut rng);
    let inputs = Matrix::from_vec(12, 9, (0..108).map(|_| rng.uniform(0.0, 1.0)).collect());
    let targets: Vec<u8> = (0..12).map(|i| (i % 2) as u8).collect();
    let err = mlp::gradient_check(
        &model,
        LabeledBatch {
            inputs: &inputs,
            targets: &targets,
        },
        1e-5,
    )
    .unwrap();
    assert!(
        err <= 1e-3,
        "relative gradient error {err:.2e} exceeds 1e-3"
    );
}

// ---------------------------------------------------------------------
// Determinism across worker counts.

#[test]
fn sweeps_are_byte_identical_across_worker_counts() {
    let grid = [0.0, 0.5];
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            harness::sweep_prune(easy_task(), HIDDEN_DIM, 3, &grid, &opts("easy"))
                .unwrap()
                .raw_csv()
        })
    };
    let single = run(1);
    let pooled = run(4);
    assert_eq!(single, pooled, "raw CSV differs between worker counts");
}

// ---------------------------------------------------------------------
// External-layer bundles: transformer-sized matrices round-trip through
// the bundle format and take probes without touching names or metadata.

#[test]
fn bundle_round_trip_preserves_external_layers_under_probes() {
    let mut rng = RngStream::new(7, 0);
    let mut bundle = probekit::bundle::WeightsBundle::new();
    for (name, rows, cols) in [
        ("block0.attention.query", 64usize, 768usize),
        ("block0.ffn.up", 768, 64),
        ("classifier", 2, 768),
    ] {
        // The container stores f32, so draw f32-exact values the way a
        // real exporter would; the round trip is then lossless.
        let m = Matrix::from_vec(
            rows,
            cols,
            (0..rows * cols)
                .map(|_| rng.uniform(-0.1, 0.1) as f32 as f64)
                .collect(),
        );
        bundle.push(name, m).unwrap();
    }
    bundle.set_metadata("source", "external-export").unwrap();

    // Byte round-trip, in memory and through a file.
    let bytes = bundle.to_bytes().unwrap();
    let reread = probekit::bundle::WeightsBundle::from_bytes(&bytes).unwrap();
    assert_eq!(reread.matrices(), bundle.matrices());
    assert_eq!(reread.metadata(), bundle.metadata());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("layers.bundle");
    probekit::bundle::write_bundle(&bundle, &path).unwrap();
    let from_file = probekit::bundle::read_bundle(&path).unwrap();
    assert_eq!(from_file.matrices(), bundle.matrices());

    // Binarization matches the matrix-level probe applied by hand.
    let probe_rng = RngStream::new(8, 0);
    let binarized =
        probes::apply_probe_to_bundle(&bundle, ProbeKind::Binarize, &probe_rng).unwrap();
    for ((name, got), (_, original)) in binarized.matrices().iter().zip(bundle.matrices()) {
        let mut expected = original.clone();
        probes::binarize_matrix(&mut expected);
        assert_eq!(got, &expected, "binarized {name} diverges");
    }
    assert_eq!(binarized.metadata(), bundle.metadata());

    // Pruning ranks each matrix alone: half the weights of every matrix
    // go to zero, not half of the pooled collection.
    let pruned = probes::apply_probe_to_bundle(&bundle, ProbeKind::Prune(0.5), &probe_rng).unwrap();
    for ((name, got), (_, original)) in pruned.matrices().iter().zip(bundle.matrices()) {
        let zeros = got.values().iter().filter(|v| **v == 0.0).count();
        assert_eq!(
            zeros,
            original.values().len() / 2,
            "pruned {name} zeroed {zeros} weights"
        );
    }

    // Degree-preserving randomization holds per matrix: the sign pattern
    // (hence every signed degree) and the signed value multiset survive,
    // while the arrangement really moves.
    let randomized = probes::apply_probe_to_bundle(
        &bundle,
        ProbeKind::Randomize(RandomizationKind::B),
        &probe_rng,
    )
    .unwrap();
    for ((name, got), (_, original)) in randomized.matrices().iter().zip(bundle.matrices()) {
        let same_pattern = got
            .values()
            .iter()
            .zip(original.values())
            .all(|(a, b)| a.signum() == b.signum());
        assert!(same_pattern, "randomized {name} changed the sign pattern");
        assert_eq!(
            signed_values(got),
            signed_values(original),
            "randomized {name} changed the signed value multiset"
        );
        let before = profile(original);
        let after = profile(got);
        assert!(
            strengths_differ(&after.row_pos_str, &before.row_pos_str),
            "randomized {name} left every row strength in place"
        );
    }
}
