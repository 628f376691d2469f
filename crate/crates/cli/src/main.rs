use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use infolab::encoders::EncoderSpec;
use infolab::harness::{
    build_study_models, measure_records, resolve_model, run_expressiveness_sweeps, run_fig2,
    write_fig2_csv, write_measures_csv, ExperimentSpec, RunResult, SweepSpec,
};
use infolab::ib::{budget_grid, ib_curve, write_curves_csv, Solver};
use infolab::infocalc::{
    conditional_entropy, entropy_y, layer_losses, mil, mutual_information, optimal_decoder,
    pushforward, risk_exact, DecoderTable, MeasureRecord,
};
use infolab::io::write_atomic;
use infolab::learner::{train, write_history_csv, MLPArch, TrainConfig};
use infolab::model::HistogramModel;
use infolab::{Encoder, InfoBits, Units};

#[derive(Parser)]
#[command(name = "infolab", version, about = "Information measures and learning experiments on histogram models")]
struct Cli {
    /// Unit for printed values.
    #[arg(long, global = true, default_value = "bits")]
    units: Units,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a model and report its basic measures.
    Validate(ModelArg),
    /// Draw an i.i.d. dataset and write it as CSV.
    Sample {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Information measures of a model and, optionally, an encoder.
    Measure {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        encoder: EncoderArg,
        /// Write the measure records as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-entropy risk decomposition of an encoder and decoder.
    Decompose {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        encoder: RequiredEncoderArg,
        #[arg(long, value_enum, default_value = "optimal")]
        decoder: DecoderKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-layer information losses of a chain encoder.
    Layers {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        encoder: RequiredEncoderArg,
    },
    /// Information-bottleneck curve over cell groupings.
    Ib {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value = "greedy")]
        solver: Solver,
        /// Single budget in bits; otherwise an evenly spaced grid.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long, default_value_t = 16)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Information captured by dyadic quantizers of increasing level.
    Dyadic {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = 4)]
        m_max: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one MLP and write its per-epoch history.
    Train {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_enum, default_value = "mlp32")]
        arch: Arch,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        val_size: usize,
        /// Encoder (JSON or file) applied before the network.
        #[arg(long)]
        pre_encoder: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate experiment outputs into a results directory.
    Reproduce(Reproduce),
}

#[derive(Args)]
struct ModelArg {
    /// Preset name or model JSON file.
    #[arg(long)]
    model: String,
}

#[derive(Args)]
struct EncoderArg {
    /// Encoder as inline JSON or a JSON file.
    #[arg(long)]
    encoder: Option<String>,
}

#[derive(Args)]
struct RequiredEncoderArg {
    /// Encoder as inline JSON or a JSON file.
    #[arg(long)]
    encoder: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderKind {
    Optimal,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum Arch {
    Mlp32,
    Mlp256,
    Mlp1024,
}

impl Arch {
    fn name(self) -> &'static str {
        match self {
            Arch::Mlp32 => "mlp32",
            Arch::Mlp256 => "mlp256",
            Arch::Mlp1024 => "mlp1024",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Fig2,
    Sweeps,
    Measures,
}

#[derive(Args)]
struct Reproduce {
    #[arg(value_enum)]
    target: Target,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Full-size training matrix.
    #[arg(long, conflicts_with = "desk")]
    full: bool,
    /// Reduced training matrix (default).
    #[arg(long)]
    desk: bool,
    /// Experiment or sweep configuration JSON; overrides --full/--desk.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Base seed; runs use base, base+1, ...
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Data lengths (repeatable).
    #[arg(long)]
    n: Vec<usize>,
    /// Architectures (repeatable).
    #[arg(long, value_enum)]
    arch: Vec<Arch>,
    /// Models (repeatable).
    #[arg(long)]
    model: Vec<String>,
    #[arg(long)]
    val_size: Option<usize>,
}

fn fmt(v: InfoBits, units: Units) -> String {
    format!("{:.6} {}", v.in_units(units), units.suffix())
}

fn load(arg: &ModelArg) -> infolab::Result<(String, HistogramModel)> {
    resolve_model(&arg.model)
}

fn encoder(arg: &str, model: &HistogramModel) -> infolab::Result<Encoder> {
    EncoderSpec::from_arg(arg)?.build(Some(model))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> infolab::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn run(cli: Cli) -> infolab::Result<()> {
    let units = cli.units;
    match cli.command {
        Command::Validate(m) => {
            let (id, model) = load(&m)?;
            println!("model {id}: ok");
            println!("dimension        {}", model.dim());
            println!("classes          {}", model.classes());
            println!("grid cells       {}", model.grid().num_cells());
            println!("support cells    {}", model.joint().num_support_cells());
            println!("rotated          {}", model.rotation().is_some());
            println!("I(X;Y)           {}", fmt(mutual_information(&model), units));
            println!("H(Y)             {}", fmt(entropy_y(&model), units));
            println!("H(Y|X)           {}", fmt(conditional_entropy(&model), units));
        }
        Command::Sample { model, n, seed, out } => {
            let (_, model) = load(&model)?;
            let data = model.sample(seed, n)?;
            match out {
                Some(p) => data.write_csv(&p)?,
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&data.to_csv()?)?;
                }
            }
        }
        Command::Measure { model, encoder: enc, out } => {
            let (id, model) = load(&model)?;
            let ix = mutual_information(&model);
            let h = conditional_entropy(&model);
            let mut records = vec![
                MeasureRecord::new("I(X;Y)", ix.bits(), &id, "identity"),
                MeasureRecord::new("H(Y|X)", h.bits(), &id, "identity"),
            ];
            println!("I(X;Y)   {}", fmt(ix, units));
            println!("H(Y|X)   {}", fmt(h, units));
            if let Some(arg) = enc.encoder {
                let e = encoder(&arg, &model)?;
                let iu = pushforward(&model, &e)?.mi();
                let loss = mil(&model, &e)?;
                let name = e.describe();
                println!("encoder  {name}");
                println!("I(U;Y)   {}", fmt(iu, units));
                println!("MIL      {}", fmt(loss, units));
                records.push(MeasureRecord::new("I(U;Y)", iu.bits(), &id, &name));
                records.push(MeasureRecord::new("MIL", loss.bits(), &id, &name));
            }
            if let Some(p) = out {
                write_json(&p, &records)?;
            }
        }
        Command::Decompose { model, encoder: enc, decoder, out } => {
            let (_, model) = load(&model)?;
            let e = encoder(&enc.encoder, &model)?;
            let dec = match decoder {
                DecoderKind::Optimal => optimal_decoder(&model, &e)?,
                DecoderKind::Uniform => {
                    let opt = optimal_decoder(&model, &e)?;
                    let m = model.classes();
                    let rows = opt.rows().map(|(s, _)| (s.clone(), vec![1.0 / m as f64; m])).collect();
                    DecoderTable::new(m, rows)?
                }
            };
            let d = risk_exact(&model, &e, &dec)?;
            println!("total            {}", fmt(d.total, units));
            println!("H(Y|X)           {}", fmt(d.conditional_entropy, units));
            println!("encoder effect   {}", fmt(d.encoder_effect, units));
            println!("decoder effect   {}", fmt(d.decoder_effect, units));
            if let Some(p) = out {
                write_json(&p, &d)?;
            }
        }
        Command::Layers { model, encoder: enc } => {
            let (_, model) = load(&model)?;
            let e = encoder(&enc.encoder, &model)?;
            let layers = e.layers();
            let losses = layer_losses(&model, &layers)?;
            let mut total = 0.0;
            for (k, (l, loss)) in layers.iter().zip(&losses).enumerate() {
                total += loss.bits();
                println!("layer {}  {:<32} {}", k + 1, l.describe(), fmt(*loss, units));
            }
            println!("total    {:<32} {}", "", fmt(InfoBits(total), units));
        }
        Command::Ib { model, solver, budget, points, out } => {
            let (id, model) = load(&model)?;
            let budgets = match budget {
                Some(b) => vec![b],
                None => budget_grid(&model, points),
            };
            let curve = ib_curve(&model, &budgets, solver)?;
            println!("{:>10} {:>10} {:>10} {:>10} {:>6}", "B", "H(U)", "I(U;Y)", "loss", "groups");
            for p in &curve.points {
                println!(
                    "{:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>6}",
                    p.b_bits,
                    p.h_u.in_units(units),
                    p.i_uy.in_units(units),
                    p.loss.in_units(units),
                    p.num_groups()
                );
            }
            if let Some(p) = out {
                write_curves_csv(&p, &[(id, curve)])?;
            }
        }
        Command::Dyadic { model, m_max, out } => {
            let (id, model) = load(&model)?;
            let rows = infolab::harness::dyadic_sweep(&id, &model, m_max)?;
            for r in &rows {
                println!(
                    "m={}  I(U;Y)={}  loss={}  coverage={:.6}",
                    r.m,
                    fmt(InfoBits(r.mi_bits), units),
                    fmt(InfoBits(r.loss_bits), units),
                    r.coverage
                );
            }
            if let Some(p) = out {
                infolab::harness::write_dyadic_csv(&p, &rows)?;
            }
        }
        Command::Train { model, arch, n, epochs, seed, val_size, pre_encoder, out } => {
            let (id, model) = load(&model)?;
            let pre = pre_encoder.map(|a| encoder(&a, &model)).transpose()?;
            let cfg = TrainConfig {
                epochs,
                seed,
                val_size,
                pre_encoder: pre,
                ..TrainConfig::default()
            };
            let arch = MLPArch::preset(arch.name(), cfg.input_dim(&model)?, model.classes())?;
            let hist = train(&model, n, &arch, &cfg)?;
            println!("reference H(Y|X) {}", fmt(conditional_entropy(&model), units));
            for r in &hist.records {
                println!(
                    "epoch {:>3}  train {}  val {} (se {:.4})",
                    r.epoch,
                    fmt(InfoBits(r.train_loss_bits), units),
                    fmt(InfoBits(r.val_risk_bits), units),
                    InfoBits(r.val_se_bits).in_units(units)
                );
            }
            if let Some(p) = out {
                write_history_csv(&p, &[(id, &hist)])?;
            }
        }
        Command::Reproduce(r) => reproduce(r, units)?,
    }
    Ok(())
}

fn reproduce(r: Reproduce, units: Units) -> infolab::Result<()> {
    match r.target {
        Target::Fig2 => {
            let study = build_study_models()?;
            println!("self-checks:");
            for c in &study.checks {
                println!(
                    "  {:<24} expected {:.6}  computed {:.6}  {}",
                    c.quantity,
                    c.expected,
                    c.computed,
                    if c.passed() { "ok" } else { "FAILED" }
                );
            }
            let mut spec = match (&r.config, r.full) {
                (Some(p), _) => ExperimentSpec::load(p)?,
                (None, true) => ExperimentSpec::full(),
                (None, false) => ExperimentSpec::desk(),
            };
            if let Some(w) = r.workers {
                spec.workers = w;
            }
            if r.seed.is_some() || r.seeds.is_some() {
                let base = r.seed.unwrap_or(0);
                let k = r.seeds.unwrap_or(spec.seeds.len()) as u64;
                spec.seeds = (base..base + k).collect();
            }
            if let Some(e) = r.epochs {
                spec.epochs = e;
            }
            if !r.n.is_empty() {
                spec.ns = r.n.clone();
            }
            if !r.arch.is_empty() {
                spec.archs = r.arch.iter().map(|a| a.name().to_string()).collect();
            }
            if !r.model.is_empty() {
                spec.models = r.model.clone();
            }
            if let Some(v) = r.val_size {
                spec.val_size = v;
            }
            spec.validate()?;
            let progress = |run: &RunResult| {
                eprintln!(
                    "done {} {} n={} pre={} seed={} final {:.4} bits",
                    run.model,
                    run.arch,
                    run.n,
                    run.pre_encoder,
                    run.seed,
                    run.history.final_record().val_risk_bits
                );
            };
            let out = run_fig2(&spec, Some(&progress))?;
            write_fig2_csv(&r.out.join("fig2.csv"), &out.rows)?;
            let runs: Vec<(String, &infolab::learner::TrainHistory)> =
                out.runs.iter().map(|x| (x.model.clone(), &x.history)).collect();
            write_history_csv(&r.out.join("runs.csv"), &runs)?;
            write_json(&r.out.join("self_checks.json"), &study.checks)?;
            write_json(&r.out.join("experiment.json"), &spec)?;
            println!("wrote {}", r.out.join("fig2.csv").display());
        }
        Target::Sweeps => {
            let mut spec = match &r.config {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => SweepSpec::default(),
            };
            if let Some(w) = r.workers {
                spec.workers = w;
            }
            if !r.model.is_empty() {
                spec.models = r.model.clone();
            }
            let out = run_expressiveness_sweeps(&spec, &r.out)?;
            println!(
                "wrote {} dyadic rows and {} IB curves to {}",
                out.dyadic.len(),
                out.ib.len(),
                r.out.display()
            );
        }
        Target::Measures => {
            let models = if r.model.is_empty() {
                infolab::model::presets::PRESET_NAMES.iter().map(|s| s.to_string()).collect()
            } else {
                r.model.clone()
            };
            let mut records = Vec::new();
            for name in &models {
                let (id, m) = resolve_model(name)?;
                records.extend(measure_records(&id, &m)?);
            }
            for rec in &records {
                println!(
                    "{:<12} {:<10} {:<24} {}",
                    rec.model_id,
                    rec.measure,
                    rec.encoder_id,
                    fmt(InfoBits(rec.value_bits), units)
                );
            }
            write_measures_csv(&r.out.join("measures.csv"), &records)?;
            write_json(&r.out.join("measures.json"), &records)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.kind());
            ExitCode::from(1)
        }
    }
}
