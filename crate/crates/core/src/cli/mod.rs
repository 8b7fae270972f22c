//! Command-line workflows: `synth`, `train`, `embed`, `evaluate`, `generate`
//! and `sweep`.
//!
//! Every subcommand reads an optional JSON config, applies flag overrides
//! (flags win), writes the resolved config to `<out>/config.json` and exits
//! with 0 on success, 2 on user or configuration errors and 3 on numerical
//! failures.

mod config;
pub mod svg;

pub use config::{ModelConfig, PreprocessConfig, RunConfig, SweepConfig};

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{save_csv, synth_contrastive, DecoderStyle, LabeledDataset, Origin};
use crate::error::{Error, Result};
use crate::eval::{embed, evaluate_model, pca_2d, separation_report, EvalReport};
use crate::kernels::KernelConfig;
use crate::model::{load_checkpoint, save_checkpoint, Keep, Latent, Likelihood, MmcVae};
use crate::tensor::Matrix;
use crate::train::train;

#[derive(Parser, Debug)]
#[command(name = "mmcvae", version, about = "Moment matching contrastive VAE")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic target/background pair with known latents.
    Synth {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        synth: SynthArgs,
    },
    /// Train a model and write a checkpoint plus a per-epoch loss log.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Write posterior-mean embeddings, optionally with PCA columns and plots.
    Embed {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        ckpt: CheckpointArgs,
        /// Append the first two principal components of each latent space.
        #[arg(long)]
        pca: bool,
        #[arg(long)]
        plot: bool,
    },
    /// Compute adherence, separation and sample-quality metrics.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        ckpt: CheckpointArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Reconstruct target rows from both latents, background only and salient only.
    Generate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        ckpt: CheckpointArgs,
        /// Number of leading target rows to reconstruct.
        #[arg(long)]
        n_rows: Option<usize>,
    },
    /// Train one model per (λ1, λ2) grid cell and tabulate salient-class accuracy.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Comma-separated λ1 values.
        #[arg(long, value_delimiter = ',')]
        lambda1_grid: Option<Vec<f64>>,
        /// Comma-separated λ2 values.
        #[arg(long, value_delimiter = ',')]
        lambda2_grid: Option<Vec<f64>>,
        #[arg(long)]
        plot: bool,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if absent).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long)]
    target: Option<PathBuf>,
    #[arg(long)]
    background: Option<PathBuf>,
    /// Header name of the class label column.
    #[arg(long)]
    label_column: Option<String>,
    /// Normalize each row to this total, then apply ln(1 + x).
    #[arg(long)]
    counts_total: Option<f64>,
    /// Keep only this many highest-variance features.
    #[arg(long)]
    top_variance: Option<usize>,
}

#[derive(Args, Debug)]
struct CheckpointArgs {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LikelihoodArg {
    Gaussian,
    Bernoulli,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DecoderArg {
    Linear,
    RandomReluMlp,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long)]
    z_dim: Option<usize>,
    #[arg(long)]
    s_dim: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long, value_enum)]
    likelihood: Option<LikelihoodArg>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    zero_bias_decoder: Option<bool>,
    /// `median`, `fixed:<gamma>` or `multi:<g1>,<g2>,...`
    #[arg(long, value_parser = parse_kernel)]
    kernel: Option<KernelConfig>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    d_z: Option<usize>,
    #[arg(long)]
    d_s: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n_target: Option<usize>,
    #[arg(long)]
    m_background: Option<usize>,
    #[arg(long)]
    n_classes: Option<usize>,
    #[arg(long)]
    class_separation: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long, value_enum)]
    decoder_style: Option<DecoderArg>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Number of evaluation seeds, counted up from `--seed`.
    #[arg(long)]
    n_seeds: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    l2: Option<f64>,
    /// Generated samples for the sample-quality MMD (0 = match the data).
    #[arg(long)]
    n_generated: Option<usize>,
}

fn parse_kernel(s: &str) -> std::result::Result<KernelConfig, String> {
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|e| format!("bad gamma {v:?}: {e}"))
    };
    let cfg = if s == "median" {
        KernelConfig::MedianHeuristic
    } else if let Some(g) = s.strip_prefix("fixed:") {
        KernelConfig::Fixed { gamma: parse(g)? }
    } else if let Some(gs) = s.strip_prefix("multi:") {
        KernelConfig::MultiScale {
            gammas: gs
                .split(',')
                .map(parse)
                .collect::<std::result::Result<_, _>>()?,
        }
    } else {
        return Err(format!(
            "unknown kernel {s:?}; use median, fixed:<g> or multi:<g1>,<g2>"
        ));
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

macro_rules! set {
    ($dst:expr, $src:expr) => {
        if let Some(v) = $src.clone() {
            $dst = v;
        }
    };
}

impl DataArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if self.target.is_some() {
            cfg.target = self.target.clone();
        }
        if self.background.is_some() {
            cfg.background = self.background.clone();
        }
        if self.label_column.is_some() {
            cfg.label_column = self.label_column.clone();
        }
        if self.counts_total.is_some() {
            cfg.preprocess.counts_total = self.counts_total;
        }
        if self.top_variance.is_some() {
            cfg.preprocess.top_variance = self.top_variance;
        }
    }
}

impl CheckpointArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if self.checkpoint.is_some() {
            cfg.checkpoint = self.checkpoint.clone();
        }
    }
}

impl ModelArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set!(cfg.model.z_dim, self.z_dim);
        set!(cfg.model.s_dim, self.s_dim);
        set!(cfg.model.hidden_dim, self.hidden_dim);
        if let Some(l) = self.likelihood {
            cfg.model.likelihood = match l {
                LikelihoodArg::Gaussian => Likelihood::GaussianUnitVariance,
                LikelihoodArg::Bernoulli => Likelihood::Bernoulli,
            };
        }
    }
}

impl TrainArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let t = &mut cfg.train;
        set!(t.lambda1, self.lambda1);
        set!(t.lambda2, self.lambda2);
        set!(t.lr, self.lr);
        set!(t.beta1, self.beta1);
        set!(t.beta2, self.beta2);
        set!(t.eps, self.eps);
        set!(t.batch_size, self.batch_size);
        set!(t.epochs, self.epochs);
        set!(t.zero_bias_decoder, self.zero_bias_decoder);
        set!(t.kernel, self.kernel);
    }
}

impl SynthArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let s = &mut cfg.synth;
        set!(s.d_z, self.d_z);
        set!(s.d_s, self.d_s);
        set!(s.d, self.d);
        set!(s.n_target, self.n_target);
        set!(s.m_background, self.m_background);
        set!(s.n_classes, self.n_classes);
        set!(s.class_separation, self.class_separation);
        set!(s.noise_sigma, self.noise_sigma);
        if let Some(d) = self.decoder_style {
            s.decoder_style = match d {
                DecoderArg::Linear => DecoderStyle::Linear,
                DecoderArg::RandomReluMlp => DecoderStyle::RandomReluMlp,
            };
        }
    }
}

impl EvalArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set!(cfg.n_seeds, self.n_seeds);
        set!(cfg.eval.max_iter, self.max_iter);
        set!(cfg.eval.l2, self.l2);
        set!(cfg.eval.n_generated, self.n_generated);
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

fn resolve(common: &Common) -> Result<RunConfig> {
    match &common.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn prepare_out(out: &Path, cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join("config.json");
    fs::write(&path, cfg.to_json()).map_err(|e| Error::io(&path, e))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Synth { common, synth } => {
            let mut cfg = resolve(&common)?;
            synth.apply(&mut cfg);
            set!(cfg.synth.seed, common.seed);
            cfg.synth.validate()?;
            prepare_out(&common.out, &cfg)?;
            cmd_synth(&cfg, &common.out)
        }
        Command::Train {
            common,
            data,
            model,
            train,
        } => {
            let mut cfg = resolve(&common)?;
            data.apply(&mut cfg);
            model.apply(&mut cfg);
            train.apply(&mut cfg);
            set!(cfg.train.seed, common.seed);
            cfg.train.validate()?;
            prepare_out(&common.out, &cfg)?;
            cmd_train(&cfg, &common.out)
        }
        Command::Embed {
            common,
            data,
            ckpt,
            pca,
            plot,
        } => {
            let mut cfg = resolve(&common)?;
            data.apply(&mut cfg);
            ckpt.apply(&mut cfg);
            cfg.plot |= plot;
            prepare_out(&common.out, &cfg)?;
            cmd_embed(&cfg, &common.out, pca)
        }
        Command::Evaluate {
            common,
            data,
            ckpt,
            eval,
        } => {
            let mut cfg = resolve(&common)?;
            data.apply(&mut cfg);
            ckpt.apply(&mut cfg);
            eval.apply(&mut cfg);
            if let Some(s) = common.seed {
                cfg.eval.split_seed = s;
                cfg.eval.sample_seed = s;
            }
            prepare_out(&common.out, &cfg)?;
            cmd_evaluate(&cfg, &common.out)
        }
        Command::Generate {
            common,
            data,
            ckpt,
            n_rows,
        } => {
            let mut cfg = resolve(&common)?;
            data.apply(&mut cfg);
            ckpt.apply(&mut cfg);
            if n_rows.is_some() {
                cfg.n_rows = n_rows;
            }
            prepare_out(&common.out, &cfg)?;
            cmd_generate(&cfg, &common.out)
        }
        Command::Sweep {
            common,
            data,
            model,
            train,
            eval,
            lambda1_grid,
            lambda2_grid,
            plot,
        } => {
            let mut cfg = resolve(&common)?;
            data.apply(&mut cfg);
            model.apply(&mut cfg);
            train.apply(&mut cfg);
            eval.apply(&mut cfg);
            set!(cfg.train.seed, common.seed);
            set!(cfg.sweep.lambda1_grid, lambda1_grid);
            set!(cfg.sweep.lambda2_grid, lambda2_grid);
            cfg.plot |= plot;
            cfg.train.validate()?;
            prepare_out(&common.out, &cfg)?;
            cmd_sweep(&cfg, &common.out)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn cmd_synth(cfg: &RunConfig, out: &Path) -> Result<()> {
    let data = synth_contrastive(&cfg.synth)?;
    save_csv(&data.target, out.join("target.csv"), Some("class"))?;
    save_csv(&data.background, out.join("background.csv"), None)?;

    let path = out.join("truth.csv");
    let mut w = create(&path)?;
    let t = &data.truth;
    let mut header = vec!["origin".to_owned(), "class".to_owned()];
    header.extend((0..cfg.synth.d_z).map(|i| format!("z{i}")));
    header.extend((0..cfg.synth.d_s).map(|i| format!("s{i}")));
    let mut body = header.join(",") + "\n";
    let mut push = |origin: Origin, class: String, z: &[f64], s: &[f64]| {
        let vals: Vec<String> = z.iter().chain(s).map(|v| format!("{v:?}")).collect();
        body.push_str(&format!("{},{class},{}\n", origin.as_str(), vals.join(",")));
    };
    for r in 0..t.target_z.rows() {
        push(
            Origin::Target,
            t.target_class[r].to_string(),
            t.target_z.row(r),
            t.target_s.row(r),
        );
    }
    for r in 0..t.background_z.rows() {
        push(
            Origin::Background,
            String::new(),
            t.background_z.row(r),
            t.background_s.row(r),
        );
    }
    w.write_all(body.as_bytes())
        .map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    log::info!(
        "wrote {} target and {} background rows to {}",
        data.target.n(),
        data.background.n(),
        out.display()
    );
    Ok(())
}

fn cmd_train(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (target, background) = cfg.load_data(true)?;
    let background = background.expect("background required");
    let arch = cfg
        .model
        .architecture(target.dim(), cfg.train.zero_bias_decoder);
    let (model, log) = train(arch, &target, &background, &cfg.train)?;
    save_checkpoint(&model, out.join("model.ckpt"))?;
    log.save_jsonl(out.join("train_log.jsonl"))?;
    if let Some(last) = log.epochs.last() {
        log::info!(
            "trained {} epochs; final mean total {:.6}",
            log.epochs.len(),
            last.loss.total
        );
    }
    Ok(())
}

fn load_model_for(cfg: &RunConfig, dim: usize) -> Result<MmcVae> {
    let model = load_checkpoint(cfg.checkpoint_path()?)?;
    if model.arch.input_dim != dim {
        return Err(Error::Config(format!(
            "checkpoint expects {} features but the data has {dim}",
            model.arch.input_dim
        )));
    }
    Ok(model)
}

fn label_strings(data: &LabeledDataset) -> Vec<String> {
    match (&data.class_labels, &data.class_names) {
        (Some(l), Some(names)) => l
            .iter()
            .map(|&c| names.get(c).cloned().unwrap_or_else(|| c.to_string()))
            .collect(),
        (Some(l), None) => l.iter().map(|c| c.to_string()).collect(),
        _ => vec![String::new(); data.n()],
    }
}

fn cmd_embed(cfg: &RunConfig, out: &Path, with_pca: bool) -> Result<()> {
    let (target, background) = cfg.load_data(false)?;
    let model = load_model_for(cfg, target.dim())?;
    let sets: Vec<&LabeledDataset> = std::iter::once(&target)
        .chain(background.as_ref())
        .collect();

    let mut z = Matrix::zeros(0, model.arch.z_dim);
    let mut s = Matrix::zeros(0, model.arch.s_dim);
    let mut origin = Vec::new();
    let mut labels = Vec::new();
    for ds in &sets {
        z = z.vconcat(&embed(&model, &ds.features, Latent::Z)?)?;
        s = s.vconcat(&embed(&model, &ds.features, Latent::S)?)?;
        origin.extend(std::iter::repeat_n(ds.origin, ds.n()));
        labels.extend(label_strings(ds));
    }

    let project = |m: &Matrix| -> Result<Option<Matrix>> {
        if m.cols() >= 2 && m.rows() >= 3 {
            Ok(Some(pca_2d(m)?.coords))
        } else {
            Ok(None)
        }
    };
    let (z_pc, s_pc) = if with_pca || cfg.plot {
        (project(&z)?, project(&s)?)
    } else {
        (None, None)
    };

    let path = out.join("embeddings.csv");
    let mut w = create(&path)?;
    let mut header = vec!["origin".to_owned(), "label".to_owned()];
    header.extend((0..z.cols()).map(|i| format!("z{i}")));
    header.extend((0..s.cols()).map(|i| format!("s{i}")));
    if with_pca {
        if z_pc.is_some() {
            header.extend(["z_pc1".to_owned(), "z_pc2".to_owned()]);
        }
        if s_pc.is_some() {
            header.extend(["s_pc1".to_owned(), "s_pc2".to_owned()]);
        }
    }
    let mut body = header.join(",") + "\n";
    for r in 0..z.rows() {
        let mut vals: Vec<String> = z
            .row(r)
            .iter()
            .chain(s.row(r))
            .map(|v| format!("{v:?}"))
            .collect();
        if with_pca {
            for pc in [&z_pc, &s_pc].into_iter().flatten() {
                vals.extend(pc.row(r).iter().map(|v| format!("{v:?}")));
            }
        }
        body.push_str(&format!(
            "{},{},{}\n",
            origin[r].as_str(),
            labels[r],
            vals.join(",")
        ));
    }
    w.write_all(body.as_bytes())
        .map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))?;

    if cfg.plot {
        let mut names: Vec<String> = Vec::new();
        let groups: Vec<usize> = origin
            .iter()
            .zip(&labels)
            .map(|(o, l)| {
                let key = match o {
                    Origin::Background => "background".to_owned(),
                    Origin::Target if l.is_empty() => "target".to_owned(),
                    Origin::Target => format!("target {l}"),
                };
                match names.iter().position(|n| *n == key) {
                    Some(i) => i,
                    None => {
                        names.push(key);
                        names.len() - 1
                    }
                }
            })
            .collect();
        for (name, raw, pc) in [("z", &z, &z_pc), ("s", &s, &s_pc)] {
            let pts: Vec<(f64, f64)> = match pc {
                Some(p) => (0..p.rows()).map(|r| (p.get(r, 0), p.get(r, 1))).collect(),
                None => (0..raw.rows()).map(|r| (raw.get(r, 0), 0.0)).collect(),
            };
            let svg = svg::scatter(&format!("{name} posterior means"), &pts, &groups, &names);
            let path = out.join(format!("{name}_scatter.svg"));
            fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        }
    }
    log::info!("wrote {} embeddings to {}", z.rows(), path.display());
    Ok(())
}

fn cmd_evaluate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (target, background) = cfg.load_data(true)?;
    let background = background.expect("background required");
    let model = load_model_for(cfg, target.dim())?;
    if target.class_labels.is_none() {
        eprintln!("notice: target has no class labels; separation metrics skipped");
    }
    let n_seeds = cfg.n_seeds.max(1);
    let mut runs = Vec::with_capacity(n_seeds);
    for i in 0..n_seeds as u64 {
        let mut ec = cfg.eval.clone();
        ec.split_seed = cfg.eval.split_seed + i;
        ec.sample_seed = cfg.eval.sample_seed + i;
        runs.push((
            ec.split_seed,
            evaluate_model(&model, &target, &background, &ec)?,
        ));
    }
    let report = EvalReport::aggregate(&runs)?;
    let json_path = out.join("report.json");
    fs::write(&json_path, report.to_json()? + "\n").map_err(|e| Error::io(&json_path, e))?;
    let csv_path = out.join("report.csv");
    let mut w = create(&csv_path)?;
    report
        .write_csv(&mut w)
        .map_err(|e| Error::io(&csv_path, e))?;
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    for (name, m) in &report.metrics {
        log::info!("{name}: {:.4} ± {:.4}", m.mean, m.std);
    }
    Ok(())
}

fn cmd_generate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (target, _) = cfg.load_data(false)?;
    let model = load_model_for(cfg, target.dim())?;
    let rows = cfg.n_rows.unwrap_or(target.n()).min(target.n());
    let subset = target.head(rows);
    for (keep, file) in [
        (Keep::Both, "recon_both.csv"),
        (Keep::BackgroundOnly, "recon_background_only.csv"),
        (Keep::SalientOnly, "recon_salient_only.csv"),
    ] {
        let mut recon = subset.clone();
        recon.features = model.reconstruct_partial(&subset.features, keep)?;
        let label = subset
            .class_labels
            .as_ref()
            .map(|_| cfg.label_column.as_deref().unwrap_or("class"));
        save_csv(&recon, out.join(file), label)?;
    }
    log::info!("wrote reconstructions of {rows} rows to {}", out.display());
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (target, background) = cfg.load_data(true)?;
    let background = background.expect("background required");
    if target.class_labels.is_none() {
        return Err(Error::Config(
            "sweep needs class labels on the target data".into(),
        ));
    }
    let (g1, g2) = (&cfg.sweep.lambda1_grid, &cfg.sweep.lambda2_grid);
    if g1.is_empty() || g2.is_empty() {
        return Err(Error::Config("sweep grids must not be empty".into()));
    }
    let path = out.join("sweep.csv");
    let mut w = create(&path)?;
    writeln!(w, "lambda1,lambda2,logistic_s_class").map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))?;

    let mut table = vec![vec![None; g2.len()]; g1.len()];
    for (i, &l1) in g1.iter().enumerate() {
        for (j, &l2) in g2.iter().enumerate() {
            let mut tc = cfg.train.clone();
            tc.lambda1 = l1;
            tc.lambda2 = l2;
            let arch = cfg.model.architecture(target.dim(), tc.zero_bias_decoder);
            let (model, _) = train(arch, &target, &background, &tc)?;
            let acc = separation_report(&model, &target, &cfg.eval)?.logistic_s_class;
            table[i][j] = Some(acc);
            writeln!(w, "{l1:?},{l2:?},{acc:?}").map_err(|e| Error::io(&path, e))?;
            w.flush().map_err(|e| Error::io(&path, e))?;
            log::info!("λ1={l1} λ2={l2}: salient-class accuracy {acc:.4}");
        }
    }
    if cfg.plot {
        let labels = |g: &[f64]| g.iter().map(|v| format!("{v}")).collect::<Vec<_>>();
        let svg = svg::heatmap(
            "salient-class accuracy (rows λ1, columns λ2)",
            &labels(g1),
            &labels(g2),
            &table,
        );
        let p = out.join("sweep.svg");
        fs::write(&p, svg).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}
