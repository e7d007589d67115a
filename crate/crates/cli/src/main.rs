//! `afb`: command-line front end for the analog filterbank laboratory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use afb_core::classifier::{evaluate, init_model, read_checkpoint, train, write_checkpoint, Architecture, Example, SmallNet};
use afb_core::config::RunConfigFile;
use afb_core::dataset::{build_splits, LabelMap, Preset, Split, KEYWORDS, N_CLASSES};
use afb_core::experiments::{
    compare_configs, comparison_csv, comparison_text, default_sweeps, extract_features, features_for_split,
    read_results_csv, run_sweep, trial_seed, write_results_csv, HarnessOptions, SweepParam, SweepResult,
};
use afb_core::extractor::{extract_spectrogram, normalize, Normalizer, Spectrogram};
use afb_core::filterbank::{measured_q, FilterbankConfig, FilterbankDesign};
use afb_core::plot::{confusion_svg, line_chart_svg, spectrogram_svg, CurvePoint};
use afb_core::power::{power_ratio, relative_power};
use afb_core::{synth, Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "afb", version, about = "Analog filterbank feature-extraction laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print each channel's center frequency and measured Q.
    Design(DesignArgs),
    /// Turn one WAV clip into a log-power spectrogram (AFBS file and SVG).
    Extract(ExtractArgs),
    /// Relative power of one filterbank, or the ratio of two.
    Power(PowerArgs),
    /// Build the train/validation/test splits and write the manifest CSV.
    Splits(SplitsArgs),
    /// Train one classifier and save its checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint written by `train`.
    Eval(EvalArgs),
    /// Run a one-parameter sweep with repeated trials.
    Sweep(SweepArgs),
    /// Train and test two filterbanks with shared trial seeds.
    Compare(CompareArgs),
    /// Draw SVG accuracy curves from a results CSV.
    Plot(PlotArgs),
    /// Write a synthetic corpus in the Speech Commands directory layout.
    Synth(SynthArgs),
}

#[derive(Args, Clone, Default)]
struct FilterbankArgs {
    /// Run configuration file (TOML); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named filterbank: `typical` (24, 7 kHz, Q 8) or `tiny` (10, 2 kHz, Q 2).
    #[arg(long = "bank")]
    bank: Option<String>,
    /// Number of filters.
    #[arg(long = "n")]
    n_filters: Option<usize>,
    /// Center frequency of the highest filter, Hz.
    #[arg(long = "fmax")]
    f_max_hz: Option<f64>,
    /// Filter quality factor.
    #[arg(long = "q")]
    q: Option<f64>,
    /// Center frequency of the lowest filter, Hz.
    #[arg(long = "fmin")]
    f_min_hz: Option<f64>,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Corpus root with one directory per word.
    #[arg(long, env = "AFB_DATA_ROOT")]
    root: Option<PathBuf>,
    /// Split sizes: small, large or desk.
    #[arg(long)]
    preset: Option<String>,
    /// Base seed for splits and training trials.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct TrainingArgs {
    /// Hyperparameter preset: default, residual or desk.
    #[arg(long = "train-preset")]
    train_preset: Option<String>,
    /// Override the number of epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Override the initial learning rate.
    #[arg(long = "lr")]
    learning_rate: Option<f64>,
    /// Override the minibatch size.
    #[arg(long = "batch-size")]
    batch_size: Option<usize>,
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    fb: FilterbankArgs,
}

#[derive(Args)]
struct ExtractArgs {
    /// Input clip: 16-bit mono PCM WAV at 16 kHz.
    #[arg(long)]
    clip: PathBuf,
    #[command(flatten)]
    fb: FilterbankArgs,
    /// Output directory.
    #[arg(long, default_value = "afb-out")]
    out: PathBuf,
}

#[derive(Args)]
struct PowerArgs {
    /// First filterbank: `typical`, `tiny` or `N,FMAX_HZ,Q`.
    #[arg(long)]
    a: Option<String>,
    /// Second filterbank; prints the power ratio a/b.
    #[arg(long)]
    b: Option<String>,
    #[command(flatten)]
    fb: FilterbankArgs,
}

#[derive(Args)]
struct SplitsArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Run configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "afb-out")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    fb: FilterbankArgs,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    training: TrainingArgs,
    /// Output directory for the checkpoint, normalizer and history.
    #[arg(long, default_value = "afb-out")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Corpus root; defaults to the one recorded at training time.
    #[arg(long, env = "AFB_DATA_ROOT")]
    root: Option<PathBuf>,
    /// Split to evaluate: train, validation or test.
    #[arg(long, default_value = "test")]
    split: String,
    /// Output directory for the confusion matrix.
    #[arg(long, default_value = "afb-out")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Parameter to sweep: n_filters, f_max, q or all.
    #[arg(long, default_value = "n_filters")]
    param: String,
    /// Comma-separated values (f_max in Hz); defaults to the standard list.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Trials per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    #[command(flatten)]
    fb: FilterbankArgs,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    training: TrainingArgs,
    /// Worker threads for the harness.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory for results.csv, SVG curves and the feature cache.
    #[arg(long, default_value = "afb-out")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// First filterbank: `typical`, `tiny` or `N,FMAX_HZ,Q`.
    #[arg(long, default_value = "typical")]
    a: String,
    /// Second filterbank.
    #[arg(long, default_value = "tiny")]
    b: String,
    /// Trials per filterbank.
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Run configuration file (TOML) for dataset and training settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    training: TrainingArgs,
    /// Worker threads for the harness.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory for the comparison report.
    #[arg(long, default_value = "afb-out")]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Results CSV written by `sweep`.
    #[arg(long)]
    results: PathBuf,
    /// Output directory for the SVG files.
    #[arg(long, default_value = "afb-out")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Clip counts sufficient for this split preset: small, large or desk.
    #[arg(long, default_value = "desk")]
    preset: String,
    /// Corpus seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corpus root to create.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Design(a) => design(a),
        Command::Extract(a) => extract(a),
        Command::Power(a) => power(a),
        Command::Splits(a) => splits(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Compare(a) => compare(a),
        Command::Plot(a) => plot(a),
        Command::Synth(a) => synth_cmd(a),
    }
}

fn usage(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_owned(),
        message: message.into(),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfigFile> {
    match path {
        Some(p) => RunConfigFile::load(p),
        None => Ok(RunConfigFile::default()),
    }
}

/// `typical`, `tiny` or `N,FMAX_HZ,Q`.
fn named_bank(spec: &str) -> Result<FilterbankConfig> {
    let c = match spec {
        "typical" => FilterbankConfig::typical(),
        "tiny" => FilterbankConfig::tiny(),
        other => {
            let parts: Vec<&str> = other.split(',').map(str::trim).collect();
            let bad = || usage("bank", format!("`{other}` is not typical, tiny or N,FMAX_HZ,Q"));
            if parts.len() != 3 {
                return Err(bad());
            }
            FilterbankConfig::new(
                parts[0].parse().map_err(|_| bad())?,
                parts[1].parse().map_err(|_| bad())?,
                parts[2].parse().map_err(|_| bad())?,
            )
        }
    };
    c.validate()?;
    Ok(c)
}

impl FilterbankArgs {
    fn apply(&self, doc: &mut RunConfigFile) -> Result<()> {
        if let Some(name) = &self.bank {
            let c = named_bank(name)?;
            doc.filterbank.n_filters = Some(c.n_filters);
            doc.filterbank.f_max_hz = Some(c.f_max_hz);
            doc.filterbank.q = Some(c.q_filter);
        }
        let f = &mut doc.filterbank;
        f.n_filters = self.n_filters.or(f.n_filters);
        f.f_max_hz = self.f_max_hz.or(f.f_max_hz);
        f.q = self.q.or(f.q);
        f.f_min_hz = self.f_min_hz.or(f.f_min_hz);
        Ok(())
    }

    fn document(&self) -> Result<RunConfigFile> {
        let mut doc = load_config(self.config.as_deref())?;
        self.apply(&mut doc)?;
        Ok(doc)
    }
}

impl DataArgs {
    fn apply(&self, doc: &mut RunConfigFile) {
        let d = &mut doc.dataset;
        d.root = self.root.clone().or(d.root.take());
        d.preset = self.preset.clone().or(d.preset.take());
        d.seed = self.seed.or(d.seed);
    }
}

impl TrainingArgs {
    fn apply(&self, doc: &mut RunConfigFile) {
        let t = &mut doc.train;
        t.preset = self.train_preset.clone().or(t.preset.take());
        t.epochs = self.epochs.or(t.epochs);
        t.learning_rate = self.learning_rate.or(t.learning_rate);
        t.batch_size = self.batch_size.or(t.batch_size);
    }
}

fn data_root(doc: &RunConfigFile) -> Result<PathBuf> {
    doc.dataset
        .root
        .clone()
        .ok_or_else(|| usage("dataset.root", "no corpus root: pass --root or set AFB_DATA_ROOT"))
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn open_file(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn design(a: DesignArgs) -> Result<()> {
    let config = a.fb.document()?.filterbank()?;
    let design = FilterbankDesign::<f64>::new(config)?;
    let mut out = std::io::stdout().lock();
    for (k, (fc, ch)) in design.centers_hz.iter().zip(&design.channels).enumerate() {
        let q = if ch.active {
            measured_q(ch, config.sample_rate_hz).map_or_else(|| "n/a".to_owned(), |q| format!("{q:.3}"))
        } else {
            "inactive".to_owned()
        };
        let _ = writeln!(out, "{k:>3} {fc:>10.2} Hz  Q {q}");
    }
    Ok(())
}

fn extract(a: ExtractArgs) -> Result<()> {
    let doc = a.fb.document()?;
    let (config, env) = (doc.filterbank()?, doc.envelope()?);
    let wave = afb_core::dataset::load_waveform::<f64>(&a.clip)?;
    let design = FilterbankDesign::<f64>::new(config)?;
    let s = extract_spectrogram(&design, &env, &wave)?;
    create_out(&a.out)?;
    let stem = a.clip.file_stem().map_or_else(|| "clip".into(), |s| s.to_string_lossy().into_owned());
    let mut bytes = Vec::new();
    s.write_afbs(&mut bytes).expect("writing to memory");
    write_file(&a.out.join(format!("{stem}.afbs")), bytes)?;
    write_file(
        &a.out.join(format!("{stem}.svg")),
        spectrogram_svg(&s, &format!("Spectrogram of {stem}")),
    )?;
    println!("{} x {} spectrogram written to {}", s.n_channels, s.n_frames, a.out.display());
    Ok(())
}

fn power(a: PowerArgs) -> Result<()> {
    let first = match &a.a {
        Some(spec) => named_bank(spec)?,
        None => a.fb.document()?.filterbank()?,
    };
    match &a.b {
        Some(spec) => {
            let second = named_bank(spec)?;
            println!("a: {} relative units", relative_power(&first)?.relative_units);
            println!("b: {} relative units", relative_power(&second)?.relative_units);
            println!("ratio {:.2}", power_ratio(&first, &second)?);
        }
        None => println!("{} relative units", relative_power(&first)?.relative_units),
    }
    Ok(())
}

fn splits(a: SplitsArgs) -> Result<()> {
    let mut doc = load_config(a.config.as_deref())?;
    a.data.apply(&mut doc);
    let ds = build_splits(data_root(&doc)?, doc.preset()?, doc.dataset_seed())?;
    create_out(&a.out)?;
    let mut manifest = Vec::new();
    ds.write_manifest(&mut manifest)?;
    write_file(&a.out.join("manifest.csv"), manifest)?;
    for split in Split::ALL {
        println!("{:<10} {:>6} clips", split.name(), ds.split(split).len());
    }
    println!("manifest digest {}", ds.manifest_digest());
    Ok(())
}

fn training_document(fb: &FilterbankArgs, data: &DataArgs, training: &TrainingArgs) -> Result<RunConfigFile> {
    let mut doc = fb.document()?;
    data.apply(&mut doc);
    training.apply(&mut doc);
    Ok(doc)
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let doc = training_document(&a.fb, &a.data, &a.training)?;
    let (config, env, preset, seed) = (doc.filterbank()?, doc.envelope()?, doc.preset()?, doc.dataset_seed());
    let mut hyper = doc.train()?;
    let root = data_root(&doc)?;
    let ds = build_splits(&root, preset, seed)?;
    let features = extract_features(&config, &env, &ds, None)?;
    hyper.seed = trial_seed(seed, 0, 0);
    let model = init_model::<f32>(hyper.seed, Architecture::default());
    let (model, history) = train(model, &features.train, &hyper)?;
    let val = evaluate(&model, &features.validation);

    create_out(&a.out)?;
    let mut bytes = Vec::new();
    write_checkpoint(&model, &mut bytes).expect("writing to memory");
    write_file(&a.out.join("model.afbm"), bytes)?;
    let mut bytes = Vec::new();
    features.normalizer.to_spectrogram().write_afbs(&mut bytes).expect("writing to memory");
    write_file(&a.out.join("normalizer.afbs"), bytes)?;
    let described = RunConfigFile::describe(&config, &env, Some(&root), preset, seed, &hyper);
    write_file(&a.out.join("run.toml"), described.to_toml_string())?;
    let mut csv = String::from("epoch,learning_rate,loss,accuracy\n");
    for h in &history {
        csv.push_str(&format!("{},{},{},{}\n", h.epoch, h.learning_rate, h.loss, h.accuracy));
    }
    write_file(&a.out.join("history.csv"), csv)?;
    let last = history.last().expect("at least one epoch");
    println!(
        "trained {} epochs: loss {:.4}, train accuracy {:.2}%, validation accuracy {:.2}%",
        history.len(),
        last.loss,
        100.0 * last.accuracy,
        100.0 * val.accuracy
    );
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let doc = RunConfigFile::load(a.model.join("run.toml"))?;
    let (config, env) = (doc.filterbank()?, doc.envelope()?);
    let root = match a.root {
        Some(r) => r,
        None => data_root(&doc)?,
    };
    let split = match a.split.as_str() {
        "train" => Split::Train,
        "validation" => Split::Validation,
        "test" => Split::Test,
        other => return Err(usage("split", format!("unknown split `{other}` (train, validation, test)"))),
    };
    let model: SmallNet<f32> = read_checkpoint(open_file(&a.model.join("model.afbm"))?)?;
    let normalizer = Normalizer::from_spectrogram(&Spectrogram::<f32>::read_afbs(open_file(
        &a.model.join("normalizer.afbs"),
    )?)?)?;
    let ds = build_splits(&root, doc.preset()?, doc.dataset_seed())?;
    let raw = features_for_split(&config, &env, &ds, split, None)?;
    let examples = raw
        .iter()
        .zip(ds.split(split))
        .map(|(s, clip)| {
            Ok(Example {
                features: normalize(s, &normalizer)?,
                label: clip.class_index,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let result = evaluate(&model, &examples);

    create_out(&a.out)?;
    let labels = LabelMap.classes();
    let mut csv = format!("true\\predicted,{}\n", labels.join(","));
    for (i, row) in result.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        csv.push_str(&format!("{},{}\n", labels[i], cells.join(",")));
    }
    write_file(&a.out.join("confusion.csv"), csv)?;
    write_file(
        &a.out.join("confusion.svg"),
        confusion_svg(&result.confusion, &labels, &format!("Confusion matrix ({} split)", split.name())),
    )?;
    println!(
        "{} accuracy {:.2}% over {} clips",
        split.name(),
        100.0 * result.accuracy,
        result.total()
    );
    Ok(())
}

fn harness(doc: &RunConfigFile, workers: usize, cache: PathBuf) -> Result<HarnessOptions> {
    Ok(HarnessOptions {
        envelope: doc.envelope()?,
        train: doc.train()?,
        arch: Architecture::default(),
        workers,
        cache_dir: Some(cache),
    })
}

fn curve_svg(result: &SweepResult) -> String {
    let points: Vec<CurvePoint> = result
        .points
        .iter()
        .filter_map(|p| {
            let (low, high) = p.summary.ci?;
            Some(CurvePoint {
                x: p.value,
                mean: p.summary.mean?,
                low,
                high,
            })
        })
        .collect();
    line_chart_svg(
        &format!("Accuracy vs {}", result.parameter.label()),
        result.parameter.label(),
        &points,
        result.parameter.log_scale(),
    )
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut doc = training_document(&a.fb, &a.data, &a.training)?;
    let params: Vec<SweepParam> = if a.param == "all" {
        SweepParam::ALL.to_vec()
    } else {
        vec![a.param.parse()?]
    };
    if a.values.is_some() && params.len() > 1 {
        return Err(usage("values", "--values needs a single --param"));
    }
    let root = data_root(&doc)?;
    let ds = build_splits(&root, doc.preset()?, doc.dataset_seed())?;
    create_out(&a.out)?;
    let options = harness(&doc, a.workers, a.out.join("cache"))?;
    let mut results = Vec::new();
    for param in params {
        doc.sweep.parameter = Some(param.name().to_owned());
        doc.sweep.values = a.values.clone().or(doc.sweep.values.clone());
        doc.sweep.trials = a.trials.or(doc.sweep.trials);
        let spec = doc.sweep()?;
        let result = run_sweep(&spec, &ds, &options)?;
        write_file(&a.out.join(format!("sweep_{}.svg", param.name())), curve_svg(&result))?;
        for p in &result.points {
            println!(
                "{} = {:>8}: mean accuracy {}{}",
                param.name(),
                p.value,
                p.summary.mean.map_or_else(|| "n/a".to_owned(), |m| format!("{:.2}%", 100.0 * m)),
                if p.summary.incomplete() { " (incomplete)" } else { "" }
            );
        }
        results.push(result);
    }
    let mut csv = Vec::new();
    write_results_csv(&results, &mut csv)?;
    write_file(&a.out.join("results.csv"), csv)?;
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    let mut doc = load_config(a.config.as_deref())?;
    a.data.apply(&mut doc);
    a.training.apply(&mut doc);
    let (ca, cb) = (named_bank(&a.a)?, named_bank(&a.b)?);
    let root = data_root(&doc)?;
    let ds = build_splits(&root, doc.preset()?, doc.dataset_seed())?;
    create_out(&a.out)?;
    let options = harness(&doc, a.workers, a.out.join("cache"))?;
    let result = compare_configs(&ca, &cb, a.trials, doc.dataset_seed(), &ds, &options)?;
    let text = comparison_text(&result, &a.a, &a.b);
    write_file(&a.out.join("comparison.txt"), &text)?;
    let mut csv = Vec::new();
    comparison_csv(&result, &a.a, &a.b, &mut csv)?;
    write_file(&a.out.join("comparison.csv"), csv)?;
    print!("{text}");
    Ok(())
}

fn plot(a: PlotArgs) -> Result<()> {
    let rows = read_results_csv(open_file(&a.results)?).map_err(|e| Error::Parse {
        path: a.results.clone(),
        message: e.to_string(),
    })?;
    create_out(&a.out)?;
    let mut written = 0;
    for spec in default_sweeps() {
        let param = spec.parameter;
        let mut points: Vec<CurvePoint> = Vec::new();
        for r in rows.iter().filter(|r| r.sweep_param == param.name()) {
            if points.last().is_some_and(|p| p.x == r.point_value) {
                continue;
            }
            let accs: Vec<f64> = rows
                .iter()
                .filter(|o| o.sweep_param == r.sweep_param && o.point_value == r.point_value)
                .filter_map(|o| o.accuracy)
                .collect();
            if accs.is_empty() {
                continue;
            }
            let mean = accs.iter().sum::<f64>() / accs.len() as f64;
            points.push(CurvePoint {
                x: r.point_value,
                mean,
                low: r.ci_low.unwrap_or(mean),
                high: r.ci_high.unwrap_or(mean),
            });
        }
        if points.is_empty() {
            continue;
        }
        let svg = line_chart_svg(&format!("Accuracy vs {}", param.label()), param.label(), &points, param.log_scale());
        write_file(&a.out.join(format!("sweep_{}.svg", param.name())), svg)?;
        written += 1;
    }
    if written == 0 {
        return Err(Error::Parse {
            path: a.results,
            message: "no sweep rows with accuracies".into(),
        });
    }
    println!("{written} chart(s) written to {}", a.out.display());
    Ok(())
}

fn synth_cmd(a: SynthArgs) -> Result<()> {
    let preset: Preset = a.preset.parse()?;
    let (keyword, unknown) = synth::clips_needed(&preset.quotas());
    synth::write_corpus(&a.out, |w| if KEYWORDS.contains(&w) { keyword } else { unknown }, a.seed)?;
    println!(
        "{} keyword and {} unknown-word clips per word written to {} ({} classes)",
        keyword,
        unknown,
        a.out.display(),
        N_CLASSES
    );
    Ok(())
}
