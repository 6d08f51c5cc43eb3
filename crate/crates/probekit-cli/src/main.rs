//! `probekit` command-line interface.
//!
//! Subcommands cover the full workflow: fetch and cache datasets,
//! inspect class similarity, train single models, probe exported
//! weight bundles, run replicated sweeps, and build task-complexity
//! matrices. Every subcommand is deterministic given its flags; all
//! randomness flows from explicit seeds. On failure the partial
//! outputs of the failed invocation are removed and the exit status is
//! nonzero.

mod config;
mod fetch;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use probekit::bundle::{read_bundle, write_bundle, WeightsBundle};
use probekit::data::{
    load_dataset, make_pair_task, resolve_cache_dir, ssim::closest_and_farthest_pairs,
    ssim::ssim_distance_matrix, ssim::SsimParams, DatasetKind, ImageDataset, Split,
};
use probekit::harness::{
    self, complexity_matrices, ComplexityMatrix, ComplexityProbe, SweepOpts, SweepResult,
};
use probekit::mlp::{self, TrainConfig};
use probekit::plot::{heatmap_svg, sweep_svg, PlotConfig};
use probekit::probes::ProbeSpec;
use probekit::rng::RngStream;
use probekit::{Error, Matrix, Result};

use config::{parse_class_pair, RunConfig};

#[derive(Parser)]
#[command(
    name = "probekit",
    version,
    about = "Train small classifiers, view their weights as signed bipartite graphs, and probe them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download a dataset into the local cache, verifying checksums.
    FetchData {
        #[arg(long, default_value = "mnist")]
        dataset: DatasetKind,
        /// Cache directory; defaults to $PROBEKIT_DATA_DIR or `data`.
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Emit the 10x10 SSIM-distance matrix between class mean images.
    SsimMatrix {
        #[arg(long, default_value = "mnist")]
        dataset: DatasetKind,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        output_dir: PathBuf,
    },
    /// Train one model on a class pair and report its test accuracy.
    Train {
        #[arg(long, default_value = "mnist")]
        dataset: DatasetKind,
        /// Class pair as `a,b`, e.g. `0,7`.
        #[arg(long)]
        classes: String,
        #[arg(long, default_value_t = 64)]
        hidden_dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Write the trained weight matrices to this bundle file.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Apply one probe to every matrix in a weight bundle.
    Probe {
        /// Input bundle path.
        #[arg(long)]
        bundle: PathBuf,
        /// Probe spec: prune:0.3 | binarize | noise:0.05 | flip:0.2 |
        /// randomize:B
        #[arg(long)]
        probe: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output bundle path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a replicated probe sweep and emit CSV tables and an SVG.
    Sweep {
        #[arg(long, value_enum)]
        family: SweepFamily,
        /// key=value configuration file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Build task-complexity matrices over all class pairs.
    Complexity {
        /// key=value configuration file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<DatasetKind>,
        /// Probe to apply; repeat for several. Defaults to both
        /// binarize and randomize-b, which also reports their rank
        /// correlation.
        #[arg(long = "probe")]
        probes: Vec<String>,
        #[arg(long)]
        realizations: Option<usize>,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SweepFamily {
    Prune,
    Noise,
    Flip,
    Randomize,
    RandomizePrune,
}

impl SweepFamily {
    fn as_str(self) -> &'static str {
        match self {
            SweepFamily::Prune => "prune",
            SweepFamily::Noise => "noise",
            SweepFamily::Flip => "flip",
            SweepFamily::Randomize => "randomize",
            SweepFamily::RandomizePrune => "randomize-prune",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::FetchData { dataset, cache_dir } => {
            let cache = resolve_cache_dir(cache_dir.as_deref());
            fetch::fetch_dataset(dataset, &cache)
        }
        Command::SsimMatrix {
            dataset,
            cache_dir,
            output_dir,
        } => ssim_matrix(dataset, cache_dir.as_deref(), &output_dir),
        Command::Train {
            dataset,
            classes,
            hidden_dim,
            seed,
            epochs,
            cache_dir,
            export,
        } => train(
            dataset,
            &classes,
            hidden_dim,
            seed,
            epochs,
            cache_dir.as_deref(),
            export.as_deref(),
        ),
        Command::Probe {
            bundle,
            probe,
            seed,
            out,
        } => probe_bundle(&bundle, &probe, seed, &out),
        Command::Sweep { family, config } => sweep(family, config.as_deref()),
        Command::Complexity {
            config,
            dataset,
            probes,
            realizations,
        } => complexity(config.as_deref(), dataset, &probes, realizations),
    }
}

/// Files written by one invocation. Dropping the guard without
/// committing removes everything it wrote, so failures leave no
/// partial outputs behind.
struct OutputGuard {
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputGuard {
    fn new() -> Self {
        OutputGuard {
            written: Vec::new(),
            committed: false,
        }
    }

    fn write(&mut self, path: &Path, content: &[u8]) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
        }
        fs::write(path, content).map_err(|e| Error::io(path, e))?;
        self.written.push(path.to_path_buf());
        println!("wrote {}", path.display());
        Ok(())
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if !self.committed {
            for path in &self.written {
                let _ = fs::remove_file(path);
            }
        }
    }
}

fn load_split_pair(
    dataset: DatasetKind,
    cache_dir: Option<&Path>,
) -> Result<(ImageDataset, ImageDataset)> {
    let cache = resolve_cache_dir(cache_dir);
    Ok((
        load_dataset(&cache, dataset, Split::Train)?,
        load_dataset(&cache, dataset, Split::Test)?,
    ))
}

fn ssim_matrix(dataset: DatasetKind, cache_dir: Option<&Path>, output_dir: &Path) -> Result<()> {
    let cache = resolve_cache_dir(cache_dir);
    let train = load_dataset(&cache, dataset, Split::Train)?;
    let dist = ssim_distance_matrix(&train, &SsimParams::default())?;

    let mut csv = String::from("class,0,1,2,3,4,5,6,7,8,9\n");
    for i in 0..10 {
        csv.push_str(&i.to_string());
        for j in 0..10 {
            csv.push_str(&format!(",{}", dist.get(i, j)));
        }
        csv.push('\n');
    }
    let svg = heatmap_svg(
        &dist,
        &format!("SSIM distance between class means ({})", dataset.dir_name()),
    );

    let mut guard = OutputGuard::new();
    guard.write(&output_dir.join("ssim-distance.csv"), csv.as_bytes())?;
    guard.write(&output_dir.join("ssim-distance.svg"), svg.as_bytes())?;
    guard.commit();

    let ((ca, cb), (fa, fb)) = closest_and_farthest_pairs(&dist);
    println!(
        "closest classes:  {{{ca}, {cb}}} (distance {})",
        dist.get(ca, cb)
    );
    println!(
        "farthest classes: {{{fa}, {fb}}} (distance {})",
        dist.get(fa, fb)
    );
    Ok(())
}

fn train(
    dataset: DatasetKind,
    classes: &str,
    hidden_dim: usize,
    seed: u64,
    epochs: usize,
    cache_dir: Option<&Path>,
    export: Option<&Path>,
) -> Result<()> {
    let (a, b) = parse_class_pair(classes)?;
    if a == b || a > 9 || b > 9 {
        return Err(Error::InvalidClassPair { a, b });
    }
    let (train_ds, test_ds) = load_split_pair(dataset, cache_dir)?;
    let task = make_pair_task(&train_ds, &test_ds, a, b)?;
    println!(
        "training {} vs {} on {}: {} train / {} test examples, hidden_dim {hidden_dim}, seed {seed}",
        a,
        b,
        dataset.dir_name(),
        task.train_targets.len(),
        task.test_targets.len()
    );

    let config = TrainConfig {
        seed,
        max_epochs: epochs,
        ..TrainConfig::default()
    };
    let outcome = mlp::train(&task, hidden_dim, &config)?;
    for (epoch, acc) in outcome.test_accuracy_per_epoch.iter().enumerate() {
        println!("epoch {:>2}: test accuracy {acc}", epoch + 1);
    }
    println!(
        "best epoch {} with test accuracy {}",
        outcome.best_epoch + 1,
        outcome.best_test_accuracy
    );

    if let Some(path) = export {
        let mut bundle = WeightsBundle::new();
        bundle.push("W1", outcome.model.w1.clone())?;
        bundle.push("W2", outcome.model.w2.clone())?;
        bundle.set_metadata("dataset", dataset.dir_name())?;
        bundle.set_metadata("class_a", a.to_string())?;
        bundle.set_metadata("class_b", b.to_string())?;
        bundle.set_metadata("hidden_dim", hidden_dim.to_string())?;
        bundle.set_metadata("seed", seed.to_string())?;
        bundle.set_metadata("best_epoch", (outcome.best_epoch + 1).to_string())?;
        bundle.set_metadata("best_test_accuracy", outcome.best_test_accuracy.to_string())?;
        write_bundle(&bundle, path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn count_nonzero(m: &Matrix) -> usize {
    m.values().iter().filter(|v| **v != 0.0).count()
}

fn probe_bundle(bundle_path: &Path, probe: &str, seed: u64, out: &Path) -> Result<()> {
    let spec: ProbeSpec = probe.parse()?;
    let bundle = read_bundle(bundle_path)?;
    let rng = RngStream::new(seed, 0);
    let probed = probekit::probes::apply_probe_to_bundle(&bundle, spec.kind, &rng)?;

    for ((name, before), (_, after)) in bundle.matrices().iter().zip(probed.matrices()) {
        println!(
            "{name}: {}x{}, {} nonzero -> {} nonzero",
            before.rows(),
            before.cols(),
            count_nonzero(before),
            count_nonzero(after)
        );
    }

    let mut guard = OutputGuard::new();
    guard.write(out, &probed.to_bytes()?)?;
    guard.commit();
    Ok(())
}

/// Easy- and hard-task training inputs shared by the sweep families.
struct SweepSetup {
    easy: probekit::data::PairTask,
    hard: probekit::data::PairTask,
    easy_opts: SweepOpts,
    hard_opts: SweepOpts,
}

fn sweep_setup(config: &RunConfig) -> Result<SweepSetup> {
    let (train_ds, test_ds) = load_split_pair(config.dataset, config.data_dir.as_deref())?;
    let easy = make_pair_task(
        &train_ds,
        &test_ds,
        config.easy_classes.0,
        config.easy_classes.1,
    )?;
    let hard = make_pair_task(
        &train_ds,
        &test_ds,
        config.hard_classes.0,
        config.hard_classes.1,
    )?;
    let template = config.train_template();
    Ok(SweepSetup {
        easy,
        hard,
        easy_opts: SweepOpts {
            base_seed: config.base_seed,
            train: template.clone(),
            label: "easy".to_string(),
        },
        hard_opts: SweepOpts {
            base_seed: config.base_seed,
            train: template,
            label: "hard".to_string(),
        },
    })
}

fn sweep(family: SweepFamily, config_path: Option<&Path>) -> Result<()> {
    let config = match config_path {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let setup = sweep_setup(&config)?;
    let d = config.hidden_dim;
    let reps = config.replications;
    println!(
        "sweep {} on {}: easy {{{}, {}}}, hard {{{}, {}}}, {reps} replications",
        family.as_str(),
        config.dataset.dir_name(),
        config.easy_classes.0,
        config.easy_classes.1,
        config.hard_classes.0,
        config.hard_classes.1
    );

    let mut plot = PlotConfig {
        y_label: "test accuracy".to_string(),
        ..PlotConfig::default()
    };
    let result: SweepResult = match family {
        SweepFamily::Prune => {
            plot.title = format!("magnitude pruning ({})", config.dataset.dir_name());
            plot.x_label = "fraction of weights pruned".to_string();
            let easy = harness::sweep_prune(
                &setup.easy,
                d,
                reps,
                &config.fraction_grid,
                &setup.easy_opts,
            )?;
            let hard = harness::sweep_prune(
                &setup.hard,
                d,
                reps,
                &config.fraction_grid,
                &setup.hard_opts,
            )?;
            easy.merge(hard)?
        }
        SweepFamily::Noise => {
            plot.title = format!("uniform weight noise ({})", config.dataset.dir_name());
            plot.x_label = "noise amplitude".to_string();
            plot.log_x = true;
            let easy =
                harness::sweep_noise(&setup.easy, d, reps, &config.noise_grid, &setup.easy_opts)?;
            let hard =
                harness::sweep_noise(&setup.hard, d, reps, &config.noise_grid, &setup.hard_opts)?;
            easy.merge(hard)?
        }
        SweepFamily::Flip => {
            plot.title = format!("sign flipping ({})", config.dataset.dir_name());
            plot.x_label = "fraction of signs flipped".to_string();
            let easy = harness::sweep_signflip(
                &setup.easy,
                d,
                reps,
                &config.fraction_grid,
                &setup.easy_opts,
            )?;
            let hard = harness::sweep_signflip(
                &setup.hard,
                d,
                reps,
                &config.fraction_grid,
                &setup.hard_opts,
            )?;
            easy.merge(hard)?
        }
        SweepFamily::Randomize => {
            plot.title = format!(
                "bipartite randomizations on the easy task ({})",
                config.dataset.dir_name()
            );
            plot.x_label = "randomization kind (A=0 .. G=6)".to_string();
            harness::sweep_randomization(
                &setup.easy,
                d,
                reps,
                &config.randomizations,
                &setup.easy_opts,
            )?
        }
        SweepFamily::RandomizePrune => {
            plot.title = format!(
                "randomize then prune on the easy task ({})",
                config.dataset.dir_name()
            );
            plot.x_label = "fraction of weights pruned".to_string();
            harness::sweep_randomize_then_prune(
                &setup.easy,
                d,
                reps,
                &config.randomizations,
                &config.fraction_grid,
                &setup.easy_opts,
            )?
        }
    };

    let name = family.as_str();
    let mut guard = OutputGuard::new();
    guard.write(
        &config.output_dir.join(format!("{name}-raw.csv")),
        result.raw_csv().as_bytes(),
    )?;
    guard.write(
        &config.output_dir.join(format!("{name}-aggregate.csv")),
        result.aggregate_csv().as_bytes(),
    )?;
    guard.write(
        &config.output_dir.join(format!("{name}.svg")),
        sweep_svg(&result, &plot).as_bytes(),
    )?;
    guard.commit();

    for variant in &result.variants {
        let medians = result.median_curve(&variant.name).unwrap();
        let lo = medians.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = medians.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!("{}: median range [{lo}, {hi}]", variant.name);
    }
    Ok(())
}

fn complexity(
    config_path: Option<&Path>,
    dataset: Option<DatasetKind>,
    probe_names: &[String],
    realizations: Option<usize>,
) -> Result<()> {
    let mut config = match config_path {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dataset) = dataset {
        config.dataset = dataset;
    }
    if let Some(n) = realizations {
        if n == 0 {
            return Err(Error::invalid("realizations must be positive"));
        }
        config.realizations = n;
    }
    let probes: Vec<ComplexityProbe> = if probe_names.is_empty() {
        vec![ComplexityProbe::Binarize, ComplexityProbe::RandomizeB]
    } else {
        probe_names
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_>>()?
    };

    let (train_ds, test_ds) = load_split_pair(config.dataset, config.data_dir.as_deref())?;
    println!(
        "complexity matrices on {}: 45 class pairs x {} realizations, probes: {}",
        config.dataset.dir_name(),
        config.realizations,
        probes
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    let matrices = complexity_matrices(
        &train_ds,
        &test_ds,
        config.hidden_dim,
        &probes,
        config.realizations,
        config.base_seed,
        &config.train_template(),
    )?;

    let mut guard = OutputGuard::new();
    guard.write(
        &config.output_dir.join("complexity-base.svg"),
        heatmap_svg(
            &matrices[0].base_accuracy,
            &format!("unprobed pair accuracy ({})", config.dataset.dir_name()),
        )
        .as_bytes(),
    )?;
    for matrix in &matrices {
        guard.write(
            &config
                .output_dir
                .join(format!("complexity-{}.csv", matrix.probe)),
            matrix.csv().as_bytes(),
        )?;
        guard.write(
            &config
                .output_dir
                .join(format!("complexity-{}-delta.svg", matrix.probe)),
            heatmap_svg(
                &matrix.delta_accuracy,
                &format!(
                    "accuracy drop under {} ({})",
                    matrix.probe,
                    config.dataset.dir_name()
                ),
            )
            .as_bytes(),
        )?;
    }
    let rho = if matrices.len() >= 2 {
        let rho = harness::complexity_correlation(&matrices[0], &matrices[1])?;
        guard.write(
            &config.output_dir.join("complexity-spearman.txt"),
            format!("spearman_rho={rho}\n").as_bytes(),
        )?;
        Some(rho)
    } else {
        None
    };
    guard.commit();

    for matrix in &matrices {
        report_extremes(matrix);
    }
    if let Some(rho) = rho {
        println!(
            "spearman rho between {} and {} deltas: {rho}",
            matrices[0].probe, matrices[1].probe
        );
    }
    Ok(())
}

fn report_extremes(matrix: &ComplexityMatrix) {
    let deltas = matrix.upper_triangle_deltas();
    let pairs = harness::class_pairs();
    let (mut lo, mut hi) = (0, 0);
    for (i, &d) in deltas.iter().enumerate() {
        if d < deltas[lo] {
            lo = i;
        }
        if d > deltas[hi] {
            hi = i;
        }
    }
    println!(
        "{}: easiest pair {{{}, {}}} (delta {}), hardest pair {{{}, {}}} (delta {})",
        matrix.probe, pairs[lo].0, pairs[lo].1, deltas[lo], pairs[hi].0, pairs[hi].1, deltas[hi]
    );
}
