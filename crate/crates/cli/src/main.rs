use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fvpad::dataset::{self, load_manifest, synth_generate, SynthConfig};
use fvpad::decomposition::{decompose, SolverConfig};
use fvpad::descriptors::DescriptorKind;
use fvpad::pipeline::{self, Mode, PipelineConfig, Sample};
use fvpad::{Error, ErrorClass};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_COMPUTE: u8 = 4;

/// Finger-vein presentation attack detection from decomposed normal and
/// diffuse maps.
#[derive(Debug, Parser)]
#[command(name = "fvpad", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic bona fide / print-attack dataset.
    Synth(SynthArgs),
    /// Decompose captures into normal, albedo, shading and diffuse maps.
    Decompose(DecomposeArgs),
    /// Write descriptor histograms for every capture of a manifest.
    Extract(ExtractArgs),
    /// Train the per-map, per-illumination classifiers on the training split.
    Train(TrainArgs),
    /// Score the test split with a trained bundle and report metrics.
    Eval(EvalArgs),
    /// Export DET tables and a combined plot from score files.
    Det(DetArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 78)]
    subjects: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 744)]
    width: usize,
    #[arg(long, default_value_t = 480)]
    height: usize,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long, required_unless_present = "image", conflicts_with = "image")]
    manifest: Option<PathBuf>,
    /// Decompose a single graymap instead of a manifest.
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value = "bsif", value_parser = parse_descriptor)]
    descriptor: DescriptorKind,
    #[arg(long, default_value = "proposed", value_parser = parse_mode)]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output feature table.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Filter bank for BSIF; learned from the manifest's bona fide captures if absent.
    #[arg(long)]
    bank: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Bundle directory (must be absent or empty).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "svm-c", default_value_t = 1.0, value_parser = parse_positive)]
    svm_c: f64,
    #[arg(long, default_value_t = 36)]
    train_subjects: usize,
    #[arg(long, default_value_t = 42)]
    test_subjects: usize,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    bundle: PathBuf,
    /// Directory for score files and the report (must be absent or empty).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DetArgs {
    #[arg(long)]
    out: PathBuf,
    /// Score files (`sample_id,label,score`).
    #[arg(required = true)]
    scores: Vec<PathBuf>,
}

fn parse_descriptor(s: &str) -> Result<DescriptorKind, String> {
    s.parse().map_err(|_| format!("expected one of lbp, lpq, bsif; got {s:?}"))
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|_| format!("expected proposed or baseline; got {s:?}"))
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number; got {s:?}")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Data => EXIT_DATA,
                ErrorClass::Compute => EXIT_COMPUTE,
            })
        }
    }
}

fn run(command: Command) -> fvpad::Result<()> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Decompose(a) => decompose_cmd(a),
        Command::Extract(a) => extract(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => {
            let report = pipeline::run_eval(&a.manifest, &a.bundle, &a.out)?;
            print!("{report}");
            Ok(())
        }
        Command::Det(a) => {
            for path in pipeline::run_det(&a.scores, &a.out)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn synth(a: SynthArgs) -> fvpad::Result<()> {
    let config = SynthConfig {
        n_subjects: a.subjects,
        width: a.width,
        height: a.height,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let manifest = synth_generate(&config, &a.out)?;
    println!(
        "wrote {} images ({} bona fide, {} attack) and {}",
        manifest.len(),
        manifest.count(fvpad::PresentationLabel::BonaFide),
        manifest.count(fvpad::PresentationLabel::Attack),
        a.out.join("manifest.csv").display()
    );
    Ok(())
}

fn decompose_one(image_path: &Path, stem: &str, out: &Path, config: &SolverConfig) -> fvpad::Result<String> {
    let image = dataset::read_image(image_path)?;
    let r = decompose(&image, config)?;
    dataset::write_pfm_normals(&r.normal_map, &out.join(format!("{stem}_normal.pfm")))?;
    dataset::write_image(&r.albedo.to_gray(), &out.join(format!("{stem}_albedo.pgm")))?;
    dataset::write_image(&r.shading.to_gray(), &out.join(format!("{stem}_shading.pgm")))?;
    dataset::write_image(&r.diffuse.to_gray(), &out.join(format!("{stem}_diffuse.pgm")))?;
    Ok(format!(
        "{stem},{:.6},{}\n",
        r.residual_rmse,
        r.objective_trace.len() - 1
    ))
}

fn decompose_cmd(a: DecomposeArgs) -> fvpad::Result<()> {
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    let config = SolverConfig {
        seed: a.seed,
        ..SolverConfig::default()
    };
    let mut table = String::from("name,residual_rmse,iterations\n");
    match (&a.manifest, &a.image) {
        (_, Some(image)) => {
            let stem = image.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
            table.push_str(&decompose_one(image, stem, &a.out, &config)?);
        }
        (Some(manifest), None) => {
            let manifest = load_manifest(manifest)?;
            for entry in manifest.sorted_entries() {
                let stem = format!("{}_i{}", entry.sample_id(), entry.illumination);
                table.push_str(&decompose_one(&manifest.resolve(entry), &stem, &a.out, &config)?);
            }
        }
        (None, None) => unreachable!("clap requires one input"),
    }
    let path = a.out.join("decompose.csv");
    std::fs::write(&path, &table).map_err(|e| Error::Io { path, source: e })?;
    print!("{table}");
    Ok(())
}

fn extract(a: ExtractArgs) -> fvpad::Result<()> {
    let config = PipelineConfig {
        descriptor: a.model.descriptor,
        mode: a.model.mode,
        ..PipelineConfig::default()
    }
    .with_seed(a.model.seed);
    let manifest = load_manifest(&a.manifest)?;
    let samples: Vec<Sample> = pipeline::prepare_samples(&manifest, config.mode, &config.solver)?;
    let bank = match (config.descriptor, &a.bank) {
        (DescriptorKind::Bsif, Some(path)) => Some(fvpad::descriptors::FilterBank::load(path)?),
        (DescriptorKind::Bsif, None) => {
            Some(pipeline::learn_filter_bank(&samples, &config.bsif, config.train.seed)?.bank)
        }
        _ => None,
    };
    let descriptor = match (config.descriptor, bank) {
        (DescriptorKind::Lbp, _) => fvpad::descriptors::Descriptor::Lbp,
        (DescriptorKind::Lpq, _) => fvpad::descriptors::Descriptor::Lpq,
        (DescriptorKind::Bsif, Some(bank)) => fvpad::descriptors::Descriptor::Bsif(bank),
        (DescriptorKind::Bsif, None) => unreachable!("bank resolved above"),
    };
    let features = pipeline::extract_features(&samples, config.mode, &descriptor)?;
    let mut out = String::from("sample_id,illumination,label,source,bins\n");
    for (s, feats) in samples.iter().zip(&features) {
        for f in feats {
            let bins: Vec<String> = f.bins.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.entry.sample_id(),
                s.entry.illumination,
                s.entry.label,
                f.source_kind,
                bins.join(" ")
            ));
        }
    }
    std::fs::write(&a.out, out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    println!("wrote {} feature rows to {}", samples.len() * config.mode.sources().len(), a.out.display());
    Ok(())
}

fn train(a: TrainArgs) -> fvpad::Result<()> {
    let mut config = PipelineConfig {
        descriptor: a.model.descriptor,
        mode: a.model.mode,
        ..PipelineConfig::default()
    }
    .with_seed(a.model.seed);
    config.train.c = a.svm_c;
    config.split.n_train_subjects = a.train_subjects;
    config.split.n_test_subjects = a.test_subjects;
    let summary = pipeline::run_train(&a.manifest, &a.out, &config)?;
    print!("{}", summary.to_text());
    println!("bundle written to {}", a.out.display());
    Ok(())
}
