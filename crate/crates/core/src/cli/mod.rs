//! The `bntk` command line: one subcommand per experiment, named presets,
//! `key = value` config files and a manifest written beside every output.

mod config;
mod options;

pub use config::{config_to_args, expand_config, Manifest};
pub use options::{parse_depth_pairs, parse_width_list, DatasetKind, LossScale, Preset, PresetValues, Width};

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::activation::Activation;
use crate::data::{gen_projection_problem, gen_synthetic_gp, load_cifar10_dir, load_mnist_dir, Dataset, Normalization, CIFAR_DEER, CIFAR_DOG};
use crate::dynamics::{run_training_with, Mode, TrainConfig, TrainedState};
use crate::error::{Error, Result};
use crate::finite::{sweep_bottleneck, SweepConfig, SweepResult};
use crate::linear::{acceleration_probe, simulate_linear_pair, write_linear_csv, LinearConfig, LinearRow};
use crate::metrics::{write_metrics_file, MetricsRow};
use crate::verify::{
    finite_residuals, linear_residuals, mc_covariance_deviations, random_input_pairs, write_deviation_csv, write_residual_csv,
    CovKind, LinearMode, ResidualConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const DEFAULT_MNIST_DIR: &str = "data/mnist-5k";

#[derive(Debug, Parser)]
#[command(name = "bntk", version, about = "Function-space training of infinitely wide networks with a finite bottleneck")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Function-space SGD of a bottleneck network, or the infinite NTK baseline.
    TrainFs(TrainFsArgs),
    /// Parameter-space SGD of one finite four-layer network.
    TrainFinite(FiniteArgs),
    /// Parameter-space SGD over a list of bottleneck widths.
    SweepBottleneck(FiniteArgs),
    /// Monte-Carlo covariances of finite two-layer networks against the limit kernels.
    VerifyCov(CovArgs),
    /// Per-step residuals of the limit evolution equations along finite-network training.
    VerifyResiduals(ResidualArgs),
    /// Deep linear bottleneck networks against their collapsed two-layer counterparts.
    VerifyLinear(LinearArgs),
    /// Writes a generated dataset as a CSV pair.
    GenData(GenDataArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat `key = value` file mirroring the long flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to `runs/<subcommand>`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long, value_enum)]
    pub dataset: Option<DatasetKind>,
    /// Directory holding the MNIST IDX files or the CIFAR-10 binary batches.
    #[arg(long, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    /// none, unit_pixels or mean_sq_norm.
    #[arg(long)]
    pub normalization: Option<Normalization>,
    /// Lift the desk-scale subset sizes of the preset.
    #[arg(long)]
    pub full: bool,
    /// Input dimension of generated data.
    #[arg(long, default_value_t = 10)]
    pub input_dim: usize,
    /// Output dimension of generated data.
    #[arg(long, default_value_t = 1)]
    pub output_dim: usize,
    #[arg(long, default_value_t = CIFAR_DOG)]
    pub class_a: u8,
    #[arg(long, default_value_t = CIFAR_DEER)]
    pub class_b: u8,
}

#[derive(Debug, Args)]
pub struct OptimArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Steps between metric rows; defaults to a tenth of the run.
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// sum, mean (divide by batch times output dimension) or a number.
    #[arg(long)]
    pub loss_scale: Option<LossScale>,
    /// relu, linear or softplus:<m>.
    #[arg(long, default_value = "relu")]
    pub activation: Activation,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TrainFsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    /// Bottleneck width or `inf`; `inf` selects the NTK baseline.
    #[arg(long, default_value = "10")]
    pub d: Width,
    /// sgd, euler or baseline.
    #[arg(long, default_value = "sgd")]
    pub mode: Mode,
    /// Hidden width of the initialization snapshot.
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub depth_g: usize,
    /// Also write the final function-space state and the initialization snapshot.
    #[arg(long)]
    pub save_state: bool,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct FiniteArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    /// Bottleneck width of a single run.
    #[arg(long)]
    pub d: Option<Width>,
    /// Comma-separated bottleneck widths of a sweep.
    #[arg(long)]
    pub widths: Option<String>,
    /// Hidden width `n` of both wide stacks.
    #[arg(long)]
    pub width: Option<usize>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct CovArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// ff, Jf, JJ or all.
    #[arg(long, default_value = "all")]
    pub kind: String,
    /// Hidden width of the sampled networks.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: usize,
    /// Number of random input pairs.
    #[arg(long, default_value_t = 10)]
    pub pairs: usize,
    #[arg(long, default_value_t = 3)]
    pub input_dim: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ResidualArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// relu, deep4 (four-layer linear) or effective2 (two-layer linear).
    #[arg(long, default_value = "relu")]
    pub net: String,
    /// Hidden width `n`.
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub input_dim: usize,
    #[arg(long, default_value_t = 2)]
    pub output_dim: usize,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct LinearArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, default_value_t = 2)]
    pub depth_f: usize,
    #[arg(long, default_value_t = 2)]
    pub depth_g: usize,
    /// Comma-separated hidden widths `n`.
    #[arg(long)]
    pub widths: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub input_dim: usize,
    #[arg(long, default_value_t = 2)]
    pub output_dim: usize,
    /// Rate of both stacks.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Multiplier of the end-to-end map at initialization.
    #[arg(long)]
    pub init_scale: Option<f64>,
    /// Comma-separated depth pairs such as `1x1,2x2`; runs the acceleration probe instead of the pair check.
    #[arg(long)]
    pub probe: Option<String>,
    /// Loss fraction reported by the probe.
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// synthetic (deep GP targets) or projection (random-projection targets).
    #[arg(long, default_value = "synthetic")]
    pub kind: String,
    #[arg(long, default_value_t = 2000)]
    pub n_train: usize,
    #[arg(long, default_value_t = 2000)]
    pub n_test: usize,
    #[arg(long, default_value_t = 10)]
    pub input_dim: usize,
    #[arg(long, default_value_t = 1)]
    pub output_dim: usize,
    /// File stem; defaults to the kind.
    #[arg(long)]
    pub stem: Option<String>,
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    match dispatch(&cli.command) {
        Ok(dir) => {
            info!("outputs in {}", dir.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_CONFIG
            }
        }
    }
}

/// Caps the rayon pool at `BNTK_THREADS` workers when the variable is set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("BNTK_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::invalid(format!("BNTK_THREADS must be a positive integer, got {v:?}")))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one subcommand and returns its output directory.
pub fn dispatch(command: &Command) -> Result<PathBuf> {
    match command {
        Command::TrainFs(a) => train_fs(a),
        Command::TrainFinite(a) => train_finite(a, false),
        Command::SweepBottleneck(a) => train_finite(a, true),
        Command::VerifyCov(a) => verify_cov(a),
        Command::VerifyResiduals(a) => verify_residuals(a),
        Command::VerifyLinear(a) => verify_linear(a),
        Command::GenData(a) => gen_data(a),
    }
}

fn out_dir(common: &CommonArgs, name: &str) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| Path::new("runs").join(name));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn finish(dir: PathBuf, manifest: &Manifest) -> Result<PathBuf> {
    manifest.write(&dir, rayon::current_num_threads())?;
    Ok(dir)
}

fn positive(name: &str, v: usize) -> Result<usize> {
    if v == 0 {
        return Err(Error::invalid(format!("{name} must be positive")));
    }
    Ok(v)
}

fn positive_f(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::invalid(format!("{name} must be a positive number")));
    }
    Ok(v)
}

/// The preset in force: the explicit one, else the one matching the
/// dataset, else `fallback`.
fn pick_preset(explicit: Option<Preset>, dataset: Option<DatasetKind>, fallback: Preset) -> Preset {
    explicit.or(dataset.map(Preset::for_dataset)).unwrap_or(fallback)
}

fn load_data(args: &DataArgs, preset: &PresetValues, seed: u64, m: &mut Manifest) -> Result<Dataset> {
    let kind = args
        .dataset
        .or(preset.dataset)
        .ok_or_else(|| Error::invalid("this preset has no dataset; pass --dataset"))?;
    let (n_train, n_test) = match (args.full, preset.full_size) {
        (false, _) => (Some(preset.desk_size.0), Some(preset.desk_size.1)),
        (true, Some((a, b))) => (Some(a), Some(b)),
        (true, None) => (None, None),
    };
    let n_train = args.n_train.or(n_train);
    let n_test = args.n_test.or(n_test);
    let normalization = args.normalization.unwrap_or(preset.normalization);
    m.set("dataset", kind);
    let mut data = match kind {
        DatasetKind::Synthetic => {
            let n_train = positive("n-train", n_train.unwrap_or(2000))?;
            let n_test = n_test.unwrap_or(2000);
            m.set("input-dim", args.input_dim).set("output-dim", args.output_dim);
            m.set("n-train", n_train).set("n-test", n_test);
            gen_synthetic_gp(n_train, n_test, args.input_dim, args.output_dim, seed)?
        }
        DatasetKind::Mnist => {
            let dir = args.data_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_MNIST_DIR));
            m.set("data-dir", dir.display());
            let data = load_mnist_dir(&dir, n_train, n_test)?;
            m.set("n-train", data.n_train()).set("n-test", data.n_test());
            data
        }
        DatasetKind::Cifar => {
            let dir = args
                .data_dir
                .clone()
                .ok_or_else(|| Error::invalid("CIFAR-10 runs need --data-dir"))?;
            m.set("data-dir", dir.display());
            m.set("class-a", args.class_a).set("class-b", args.class_b);
            let data = load_cifar10_dir(&dir, args.class_a, args.class_b)?;
            let (a, b) = (n_train.unwrap_or(data.n_train()), n_test.unwrap_or(data.n_test()));
            let data = data.truncated(a, b);
            m.set("n-train", data.n_train()).set("n-test", data.n_test());
            data
        }
    };
    data.normalize(normalization);
    m.set("normalization", normalization);
    Ok(data)
}

struct Optim {
    lr: f64,
    batch: usize,
    steps: usize,
    eval_every: usize,
    loss_scale: f64,
}

fn resolve_optim(a: &OptimArgs, p: &PresetValues, output_dim: usize, m: &mut Manifest) -> Result<Optim> {
    let lr = a.lr.unwrap_or(p.lr);
    if !(lr >= 0.0) || !lr.is_finite() {
        return Err(Error::invalid("lr must be a finite non-negative number"));
    }
    let batch = positive("batch", a.batch.unwrap_or(p.batch))?;
    let steps = a.steps.unwrap_or(p.steps);
    let eval_every = a.eval_every.unwrap_or((steps / 10).max(1));
    let scale = a.loss_scale.unwrap_or(p.loss_scale);
    let loss_scale = scale.resolve(batch, output_dim);
    m.set("lr", lr)
        .set("batch", batch)
        .set("steps", steps)
        .set("eval-every", eval_every)
        .set("loss-scale", LossScale::Value(loss_scale))
        .set("activation", a.activation);
    Ok(Optim {
        lr,
        batch,
        steps,
        eval_every,
        loss_scale,
    })
}

fn log_row(r: &MetricsRow) {
    let acc = if r.test_acc.is_nan() {
        String::new()
    } else {
        format!("  acc {:.3}/{:.3}", r.train_acc, r.test_acc)
    };
    info!(
        "step {:>6}  d={:<4} train {:.5e}  test {:.5e}{acc}",
        r.step,
        r.width_label(),
        r.train_loss,
        r.test_loss
    );
}

fn train_fs(a: &TrainFsArgs) -> Result<PathBuf> {
    let preset = pick_preset(a.optim.preset, a.data.dataset, Preset::Synthetic);
    let p = preset.values();
    let mut m = Manifest::new("train-fs");
    m.set("preset", preset).set("seed", a.common.seed);
    let data = load_data(&a.data, &p, a.common.seed, &mut m)?;
    let o = resolve_optim(&a.optim, &p, data.output_dim(), &mut m)?;
    let mode = if a.d.0.is_none() { Mode::InfiniteNtkBaseline } else { a.mode };
    let config = TrainConfig {
        mode,
        lr: o.lr,
        batch_size: o.batch,
        steps: o.steps,
        eval_every: o.eval_every,
        seed: a.common.seed,
        loss_scale: o.loss_scale,
        bottleneck: a.d.0,
        oracle_width: positive("width", a.width.unwrap_or(p.width))?,
        depth_g: positive("depth-g", a.depth_g)?,
        activation: a.optim.activation,
    };
    m.set("d", a.d)
        .set("mode", mode)
        .set("width", config.oracle_width)
        .set("depth-g", config.depth_g);
    let dir = out_dir(&a.common, "train-fs")?;
    m.set("save-state", a.save_state);
    let outcome = run_training_with(&config, &data, None, log_row)?;
    write_metrics_file(dir.join("metrics.csv"), &outcome.rows)?;
    if a.save_state {
        match &outcome.state {
            TrainedState::Bottleneck(s) => {
                s.save(dir.join("state.fsd1"))?;
                s.oracle().save(dir.join("init.wns1"))?;
            }
            TrainedState::Baseline(_) => warn!("the infinite baseline has no function-space state to save"),
        }
    }
    finish(dir, &m)
}

fn train_finite(a: &FiniteArgs, sweep: bool) -> Result<PathBuf> {
    let name = if sweep { "sweep-bottleneck" } else { "train-finite" };
    let preset = pick_preset(a.optim.preset, None, Preset::FiniteSweep);
    let p = preset.values();
    let mut m = Manifest::new(name);
    m.set("preset", preset).set("seed", a.common.seed);
    let widths = match (sweep, &a.widths, a.d) {
        (true, Some(list), _) => parse_width_list(list)?,
        (true, None, _) => vec![1, 4, 16, 64, 256],
        (false, _, Some(Width(Some(d)))) => vec![d],
        (false, _, Some(Width(None))) => return Err(Error::invalid("finite networks need a finite --d")),
        (false, _, None) => vec![10],
    };
    let data = load_data(&a.data, &p, a.common.seed, &mut m)?;
    let o = resolve_optim(&a.optim, &p, data.output_dim(), &mut m)?;
    let config = SweepConfig {
        widths,
        hidden: positive("width", a.width.unwrap_or(p.width))?,
        activation: a.optim.activation,
        lr: o.lr,
        batch_size: o.batch,
        steps: o.steps,
        eval_every: o.eval_every,
        loss_scale: o.loss_scale,
        seed: a.common.seed,
    };
    let list = config.widths.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",");
    if sweep {
        m.set("widths", list);
    } else {
        m.set("d", list);
    }
    m.set("width", config.hidden);
    let dir = out_dir(&a.common, name)?;
    let results = sweep_bottleneck(&config, &data)?;
    let rows: Vec<MetricsRow> = results.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    for r in &results {
        log_row(r.final_row());
    }
    write_metrics_file(dir.join("metrics.csv"), &rows)?;
    write_sweep_summary(&dir.join("summary.csv"), &results)?;
    finish(dir, &m)
}

fn write_sweep_summary(path: &Path, results: &[SweepResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bottleneck_width", "train_loss", "test_loss", "train_error", "test_error"])?;
    for r in results {
        let last = r.final_row();
        w.write_record([
            r.width.to_string(),
            last.train_loss.to_string(),
            last.test_loss.to_string(),
            (1.0 - last.train_acc).to_string(),
            (1.0 - last.test_acc).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn verify_cov(a: &CovArgs) -> Result<PathBuf> {
    let kinds: Vec<CovKind> = if a.kind.eq_ignore_ascii_case("all") {
        CovKind::ALL.to_vec()
    } else {
        vec![a.kind.parse()?]
    };
    let mut m = Manifest::new("verify-cov");
    m.set("seed", a.common.seed)
        .set("kind", &a.kind)
        .set("n", a.n)
        .set("replicas", a.replicas)
        .set("pairs", a.pairs)
        .set("input-dim", a.input_dim);
    let pairs = random_input_pairs(positive("pairs", a.pairs)?, positive("input-dim", a.input_dim)?, a.common.seed ^ PAIR_SEED);
    let dir = out_dir(&a.common, "verify-cov")?;
    let reports = mc_covariance_deviations(&kinds, &pairs, a.n, a.replicas, a.common.seed)?;
    for r in &reports {
        info!("{} pair {}: deviation {:.4} ± {:.4}", r.kind, r.pair_id, r.deviation, r.stderr);
    }
    write_deviation_csv(fs::File::create(dir.join("deviation.csv"))?, &reports)?;
    finish(dir, &m)
}

/// Keeps the input-pair stream apart from the replica streams.
pub const PAIR_SEED: u64 = 0x005e_ed0f_9a1f;

fn verify_residuals(a: &ResidualArgs) -> Result<PathBuf> {
    let preset = a.preset.unwrap_or(Preset::VerifyGd);
    let p = preset.values();
    let net = a.net.as_str();
    let mut cfg = ResidualConfig::relu(positive("width", a.width.unwrap_or(p.width))?);
    cfg.n_train = positive("n-train", a.n_train.unwrap_or(p.desk_size.0))?;
    cfg.input_dim = positive("input-dim", a.input_dim)?;
    cfg.output_dim = positive("output-dim", a.output_dim)?;
    cfg.bottleneck = positive("d", a.d)?;
    cfg.lr = positive_f("lr", a.lr.unwrap_or(p.lr))?;
    cfg.steps = a.steps.unwrap_or(p.steps);
    cfg.seed = a.common.seed;
    let mut m = Manifest::new("verify-residuals");
    m.set("preset", preset)
        .set("seed", cfg.seed)
        .set("net", net)
        .set("width", cfg.width)
        .set("n-train", cfg.n_train)
        .set("input-dim", cfg.input_dim)
        .set("output-dim", cfg.output_dim)
        .set("d", cfg.bottleneck)
        .set("lr", cfg.lr)
        .set("steps", cfg.steps);
    let dir = out_dir(&a.common, "verify-residuals")?;
    let series = match net {
        "relu" => finite_residuals(&cfg)?,
        other => linear_residuals(other.parse::<LinearMode>()?, &cfg)?,
    };
    for s in &series {
        info!(
            "{}: median residual {:.4}, max {:.4}",
            s.quantity,
            s.median(cfg.steps).unwrap_or(f64::NAN),
            s.max().unwrap_or(f64::NAN)
        );
    }
    write_residual_csv(fs::File::create(dir.join("residuals.csv"))?, &series)?;
    finish(dir, &m)
}

fn verify_linear(a: &LinearArgs) -> Result<PathBuf> {
    let preset = a.preset.unwrap_or(Preset::VerifyLinear);
    let p = preset.values();
    let widths = match &a.widths {
        Some(list) => parse_width_list(list)?,
        None => vec![p.width],
    };
    let n_train = positive("n-train", a.n_train.unwrap_or(p.desk_size.0))?;
    let lr = positive_f("lr", a.lr.unwrap_or(p.lr))?;
    let probe = a.probe.as_deref().map(parse_depth_pairs).transpose()?;
    let init_scale = positive_f("init-scale", a.init_scale.unwrap_or(if probe.is_some() { 0.1 } else { 1.0 }))?;
    let base = LinearConfig {
        bottleneck: positive("d", a.d)?,
        depth_f: positive("depth-f", a.depth_f)?,
        depth_g: positive("depth-g", a.depth_g)?,
        width: widths[0],
        lr_f: lr,
        lr_g: lr,
        steps: a.steps.unwrap_or(p.steps),
        init_scale,
        seed: a.common.seed,
    };
    let data = gen_projection_problem(n_train, 0, a.input_dim, a.output_dim, a.common.seed)?;
    let (x, y) = (data.train_x.view(), data.train_y.view());
    let mut m = Manifest::new("verify-linear");
    m.set("preset", preset)
        .set("seed", base.seed)
        .set("depth-f", base.depth_f)
        .set("depth-g", base.depth_g)
        .set("widths", widths.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(","))
        .set("d", base.bottleneck)
        .set("n-train", n_train)
        .set("input-dim", a.input_dim)
        .set("output-dim", a.output_dim)
        .set("lr", lr)
        .set("steps", base.steps)
        .set("init-scale", init_scale);
    let dir = out_dir(&a.common, "verify-linear")?;
    let mut rows = Vec::new();
    if let Some(depths) = probe {
        m.set("probe", a.probe.as_deref().unwrap_or_default()).set("threshold", a.threshold);
        for &width in &widths {
            for curve in acceleration_probe(&depths, &LinearConfig { width, ..base.clone() }, x, y)? {
                let hit = curve.steps_to(a.threshold).map_or_else(|| "never".to_string(), |s| s.to_string());
                info!("n={width} depths ({}, {}): loss fraction {} reached at step {hit}", curve.depth_f, curve.depth_g, a.threshold);
                rows.extend(LinearRow::from_curve(&curve));
            }
        }
    } else {
        for &width in &widths {
            let cfg = LinearConfig { width, ..base.clone() };
            let result = simulate_linear_pair(&cfg, x, y)?;
            info!("n={width}: max relative deviation {:.5}", result.max_rel_dev);
            rows.extend(LinearRow::from_pair(&cfg, &result));
        }
    }
    write_linear_csv(fs::File::create(dir.join("linear.csv"))?, &rows)?;
    finish(dir, &m)
}

fn gen_data(a: &GenDataArgs) -> Result<PathBuf> {
    let d0 = positive("input-dim", a.input_dim)?;
    let dr = positive("output-dim", a.output_dim)?;
    let data = match a.kind.as_str() {
        "synthetic" => gen_synthetic_gp(a.n_train, a.n_test, d0, dr, a.common.seed)?,
        "projection" => gen_projection_problem(a.n_train, a.n_test, d0, dr, a.common.seed)?,
        other => return Err(Error::invalid(format!("unknown data kind {other:?}"))),
    };
    let stem = a.stem.clone().unwrap_or_else(|| a.kind.clone());
    let mut m = Manifest::new("gen-data");
    m.set("kind", &a.kind)
        .set("seed", a.common.seed)
        .set("n-train", a.n_train)
        .set("n-test", a.n_test)
        .set("input-dim", d0)
        .set("output-dim", dr)
        .set("stem", &stem);
    let dir = out_dir(&a.common, "gen-data")?;
    data.export_csv(&dir, &stem)?;
    finish(dir, &m)
}
