//! Command-line front end: `preprocess`, `extract`, `synth` and `run`.
//!
//! Settings resolve in three layers: built-in defaults, then an optional
//! JSON config file, then command-line flags.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sigfuse::evalkit::{
    load_corpus, run_experiment, synth_corpus, write_cmc_csv, write_corpus, Corpus, ExperimentConfig,
    ExperimentReport,
};
use sigfuse::featex::{extract_features, write_features_csv, FeatureVector};
use sigfuse::raster::{preprocess, read_raster, write_binary_pgm, write_gray_pgm, PreprocessConfig};
use sigfuse::svmfuse::{Kernel, MODEL_VERSION};

#[derive(Debug, Parser)]
#[command(name = "sigfuse", about = "Offline signature identification with SVM score fusion")]
#[command(disable_version_flag = true, arg_required_else_help = true)]
pub struct Cli {
    /// Print the model file schema version and exit.
    #[arg(short = 'V', long = "version")]
    pub version: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the four preprocessing stages of every raster in a directory.
    Preprocess(PreprocessArgs),
    /// Extract feature vectors for a corpus manifest into CSV.
    Extract(ExtractArgs),
    /// Generate a synthetic corpus with a manifest.
    Synth(SynthArgs),
    /// Run the identification experiment and write report, CMC and model.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct RasterFlags {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Share of the foreground gray range dropped to leave the high-pressure band.
    #[arg(long)]
    pub hpr_factor: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Directory of PGM or PNG rasters.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for the `{stem}_{gray,binary,thinned,hpr}.pgm` outputs.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub raster: RasterFlags,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Corpus manifest (`sigfuse-corpus/1`) to read.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub raster: RasterFlags,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Genuine subjects.
    pub subjects: usize,
    /// Samples per subject.
    pub samples: usize,
    /// Forger subjects, each imitating one genuine subject.
    #[arg(long, default_value_t = DEFAULT_FORGERS)]
    pub forgers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for rasters and `manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    Linear,
    Rbf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["manifest", "synth"])))]
pub struct RunArgs {
    /// Corpus manifest (`sigfuse-corpus/1`) to load.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Generate a corpus of N subjects with M samples each instead of loading one.
    #[arg(long, num_args = 2, value_names = ["N", "M"])]
    pub synth: Option<Vec<usize>>,
    /// Forger subjects added to a synthetic corpus [default: 8].
    #[arg(long)]
    pub forgers: Option<usize>,
    /// Seed for the split, training and synthesis [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Enrollment samples per subject [default: 6].
    #[arg(long)]
    pub enroll: Option<usize>,
    /// Probe samples per subject [default: 3].
    #[arg(long)]
    pub probe: Option<usize>,
    /// Fusion SVM kernel [default: rbf].
    #[arg(long, value_enum)]
    pub kernel: Option<KernelKind>,
    /// RBF kernel width.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// SVM box constraint.
    #[arg(long = "c")]
    pub c_reg: Option<f64>,
    /// Gaussian-rule band width in standard deviations (1, 2 or 3).
    #[arg(long)]
    pub k: Option<u8>,
    /// Share of the foreground gray range dropped to leave the high-pressure band.
    #[arg(long)]
    pub hpr_factor: Option<f64>,
    /// Covariance shrinkage weight.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// JSON file with experiment settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for `report.json`, `cmc.csv` and `model.json`.
    #[arg(long)]
    pub out: PathBuf,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub forgers: Option<usize>,
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

pub const DEFAULT_FORGERS: usize = 8;

/// Where the experiment corpus came from, recorded in the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CorpusSource {
    Manifest { path: PathBuf },
    Synth { subjects: usize, samples: usize, forgers: usize },
}

#[derive(Debug, Serialize)]
struct RunRecord<'a> {
    source: &'a CorpusSource,
    #[serde(flatten)]
    report: &'a ExperimentReport,
}

/// Fully resolved `run` settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub source: CorpusSource,
    pub seed: u64,
    pub experiment: ExperimentConfig,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunSettings> {
        let file = FileConfig::load(self.config.as_deref())?;
        let mut cfg = file.experiment;
        if let Some(v) = self.enroll {
            cfg.enroll = v;
        }
        if let Some(v) = self.probe {
            cfg.probe = v;
        }
        if let Some(v) = self.c_reg {
            cfg.train.c_reg = v;
        }
        if let Some(v) = self.k {
            cfg.matcher.k = v;
        }
        if let Some(v) = self.hpr_factor {
            cfg.preprocess.hpr_factor = v;
        }
        if let Some(v) = self.lambda {
            cfg.matcher.shrinkage_lambda = v;
        }
        let kind = self.kernel.unwrap_or(match cfg.train.kernel {
            Kernel::Linear => KernelKind::Linear,
            Kernel::Rbf { .. } => KernelKind::Rbf,
        });
        cfg.train.kernel = match kind {
            KernelKind::Linear if self.gamma.is_some() => bail!("--gamma only applies to the rbf kernel"),
            KernelKind::Linear => Kernel::Linear,
            KernelKind::Rbf => {
                let base = match (cfg.train.kernel, Kernel::default()) {
                    (Kernel::Rbf { gamma }, _) | (_, Kernel::Rbf { gamma }) => gamma,
                    _ => unreachable!("default kernel is rbf"),
                };
                Kernel::Rbf {
                    gamma: self.gamma.unwrap_or(base),
                }
            }
        };
        cfg.validate().context("invalid configuration")?;

        let source = match (&self.manifest, &self.synth) {
            (Some(path), _) => CorpusSource::Manifest { path: path.clone() },
            (None, Some(nm)) => CorpusSource::Synth {
                subjects: nm[0],
                samples: nm[1],
                forgers: self.forgers.or(file.forgers).unwrap_or(DEFAULT_FORGERS),
            },
            (None, None) => bail!("either --manifest or --synth is required"),
        };
        Ok(RunSettings {
            source,
            seed: self.seed.or(file.seed).unwrap_or(0),
            experiment: cfg,
        })
    }
}

fn preprocess_config(flags: &RasterFlags) -> Result<PreprocessConfig> {
    let mut cfg = FileConfig::load(flags.config.as_deref())?.experiment.preprocess;
    if let Some(v) = flags.hpr_factor {
        cfg.hpr_factor = v;
    }
    cfg.validate().context("invalid preprocessing configuration")?;
    Ok(cfg)
}

pub fn cmd_preprocess(args: &PreprocessArgs) -> Result<ExitCode> {
    let cfg = preprocess_config(&args.raster)?;
    let mut inputs: Vec<PathBuf> = fs::read_dir(&args.input)
        .with_context(|| format!("reading input directory {}", args.input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    inputs.sort();
    if inputs.is_empty() {
        eprintln!("warning: no input rasters in {}", args.input.display());
        return Ok(ExitCode::SUCCESS);
    }
    fs::create_dir_all(&args.output).with_context(|| format!("creating {}", args.output.display()))?;

    let mut failures = 0usize;
    for path in &inputs {
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let result = read_raster(path).and_then(|raw| preprocess(&raw, &cfg)).and_then(|set| {
            let out = |stage: &str| args.output.join(format!("{stem}_{stage}.pgm"));
            write_gray_pgm(&out("gray"), &set.gray)?;
            write_binary_pgm(&out("binary"), &set.binary)?;
            write_binary_pgm(&out("thinned"), &set.thinned)?;
            write_binary_pgm(&out("hpr"), &set.hpr)
        });
        if let Err(e) = result {
            let msg = format!("{:#}", anyhow::Error::from(e));
            let name = path.display().to_string();
            if msg.contains(&name) {
                eprintln!("error: {msg}");
            } else {
                eprintln!("error: {name}: {msg}");
            }
            failures += 1;
        }
    }
    let done = inputs.len() - failures;
    println!("preprocessed {done} of {} rasters", inputs.len());
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn corpus_features(corpus: &Corpus, cfg: &PreprocessConfig) -> Result<Vec<(u32, u32, FeatureVector)>> {
    let mut rows = Vec::with_capacity(corpus.sample_count());
    for s in &corpus.subjects {
        for sample in &s.samples {
            let fv = preprocess(&sample.raster, cfg)
                .and_then(|set| extract_features(&set))
                .with_context(|| format!("subject {} sample {}", s.subject_id, sample.sample_id))?;
            rows.push((s.subject_id, sample.sample_id, fv));
        }
    }
    Ok(rows)
}

pub fn cmd_extract(args: &ExtractArgs) -> Result<ExitCode> {
    let cfg = preprocess_config(&args.raster)?;
    let corpus = load_corpus(&args.manifest).context("loading corpus")?;
    let rows = corpus_features(&corpus, &cfg).context("extracting features")?;
    let mut buf = Vec::new();
    write_features_csv(&mut buf, rows.iter().map(|(s, k, f)| (*s, *k, f)))?;
    fs::write(&args.out, buf).with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {} feature vectors to {}", rows.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<ExitCode> {
    let corpus = synth_corpus(args.subjects, args.samples, args.forgers, args.seed).context("generating corpus")?;
    let manifest = write_corpus(&corpus, &args.out).context("writing corpus")?;
    println!("wrote {} rasters and {}", corpus.sample_count(), manifest.display());
    Ok(ExitCode::SUCCESS)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
    f.write_all(bytes)?;
    f.flush()?;
    Ok(())
}

pub fn cmd_run(args: &RunArgs) -> Result<ExitCode> {
    let settings = args.resolve()?;
    let corpus = match &settings.source {
        CorpusSource::Manifest { path } => load_corpus(path).context("loading corpus")?,
        CorpusSource::Synth {
            subjects,
            samples,
            forgers,
        } => synth_corpus(*subjects, *samples, *forgers, settings.seed).context("generating corpus")?,
    };
    let report = run_experiment(&corpus, &settings.experiment, settings.seed).context("running experiment")?;

    // Outputs are serialized before anything touches the output directory.
    let record = RunRecord {
        source: &settings.source,
        report: &report,
    };
    let report_json = serde_json::to_string_pretty(&record)? + "\n";
    let mut cmc_csv = Vec::new();
    write_cmc_csv(&mut cmc_csv, &report.cmc)?;
    let model_json = serde_json::to_string_pretty(&report.model)? + "\n";

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_file(&args.out.join("report.json"), report_json.as_bytes())?;
    write_file(&args.out.join("cmc.csv"), &cmc_csv)?;
    write_file(&args.out.join("model.json"), model_json.as_bytes())?;

    let r = report.rank1;
    println!("rank-1  ed {:.4}  md {:.4}  ge {:.4}  fused {:.4}", r.ed, r.md, r.ge, r.fused);
    if let Some(f) = report.forgery_rank1 {
        println!(
            "forgery rank-1 (victim on top)  ed {:.4}  md {:.4}  ge {:.4}  fused {:.4}",
            f.ed, f.md, f.ge, f.fused
        );
    }
    if !report.fusion.converged {
        eprintln!("warning: SVM training stopped at the iteration budget");
    }
    Ok(ExitCode::SUCCESS)
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    if cli.version {
        println!("{MODEL_VERSION}");
        return Ok(ExitCode::SUCCESS);
    }
    match cli.command {
        Some(Command::Preprocess(a)) => cmd_preprocess(&a),
        Some(Command::Extract(a)) => cmd_extract(&a),
        Some(Command::Synth(a)) => cmd_synth(&a),
        Some(Command::Run(a)) => cmd_run(&a),
        None => bail!("no subcommand given; see --help"),
    }
}
