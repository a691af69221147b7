//! `depthhand` command line: detect, synth, bench and convert.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use depthhand::bench::run_benchmark;
use depthhand::frame_io::{
    read_pgm, read_raw, write_overlay, write_pgm, write_raw, write_report_line,
};
use depthhand::pipeline::{Pipeline, PipelineConfig};
use depthhand::synth::{generate_corpus, render_scene, CorpusParams, SceneSpec};
use depthhand::{DepthFrame, Error};

/// Frames analysed per batch; bounds memory on long sequences.
const BATCH: usize = 64;

#[derive(Parser, Debug)]
#[command(
    name = "depthhand",
    version,
    about = "Fingertip and palm-centre detection on 11-bit depth frames"
)]
struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Detect hands in depth frames and emit JSON-lines reports.
    Detect(DetectArgs),
    /// Render synthetic scenes with ground truth.
    Synth(SynthArgs),
    /// Score the detector on a synthetic corpus.
    Bench(BenchArgs),
    /// Convert between PGM, raw and overlay PPM.
    Convert(ConvertArgs),
}

#[derive(Args, Debug)]
struct DetectArgs {
    /// Depth frame (.pgm, .raw, .r16) or a directory of them, read in name order.
    #[arg(long)]
    input: PathBuf,
    /// Dimensions of raw frames, as WxH.
    #[arg(long, value_parser = parse_dims)]
    raw_dims: Option<(usize, usize)>,
    /// Pipeline configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report file, one JSON document per line (default: stdout).
    #[arg(long)]
    out_report: Option<PathBuf>,
    /// Directory for annotated PPM overlays.
    #[arg(long)]
    out_overlay_dir: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    max_hands: Option<u8>,
}

#[derive(Args, Debug, Clone)]
struct CorpusArgs {
    /// Scene file: a JSON array of scenes.
    #[arg(
        long,
        conflicts_with = "generate",
        required_unless_present = "generate"
    )]
    input: Option<PathBuf>,
    /// Generate this many random single-hand scenes instead.
    #[arg(long)]
    generate: Option<usize>,
    /// Seed for generated scenes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Configuration; only calibration is used to render.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = FrameFormat::Pgm)]
    format: FrameFormat,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Metrics file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    max_hands: Option<u8>,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output path; the extension (.pgm, .raw/.r16, .ppm) picks the format.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_parser = parse_dims)]
    raw_dims: Option<(usize, usize)>,
    /// Configuration; `raw_valid_max` sets the overlay grey scale.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FrameFormat {
    Pgm,
    Raw,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let w: usize = w.trim().parse().map_err(|e| format!("width: {e}"))?;
    let h: usize = h.trim().parse().map_err(|e| format!("height: {e}"))?;
    if w == 0 || h == 0 {
        return Err("dimensions must be positive".into());
    }
    Ok((w, h))
}

/// Failure with its process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

trait ExitClass<T> {
    /// Bad input data or I/O: exit code 1.
    fn format_err(self) -> Result<T, Failure>;
    /// Bad configuration: exit code 2.
    fn config_err(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ExitClass<T> for Result<T, E> {
    fn format_err(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 1,
            error: e.into(),
        })
    }

    fn config_err(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 2,
            error: e.into(),
        })
    }
}

/// Library errors carry their own class.
fn classify(e: Error) -> Failure {
    let code = if matches!(e, Error::Config(_)) { 2 } else { 1 };
    Failure {
        code,
        error: e.into(),
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .config_err()?;
    let cfg: PipelineConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))
        .config_err()?;
    cfg.validate()
        .with_context(|| format!("config {}", path.display()))
        .config_err()?;
    Ok(cfg)
}

fn is_frame_file(p: &Path) -> bool {
    matches!(
        p.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("pgm" | "raw" | "r16")
    )
}

fn frame_paths(input: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if !input.is_dir() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(input)
        .with_context(|| format!("listing {}", input.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    paths.retain(|p| p.is_file() && is_frame_file(p));
    paths.sort();
    if paths.is_empty() {
        bail!("no .pgm, .raw or .r16 files in {}", input.display());
    }
    Ok(paths)
}

fn read_frame(path: &Path, raw_dims: Option<(usize, usize)>) -> Result<DepthFrame, Failure> {
    let bytes = fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .format_err()?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let frame = if ext == "raw" || ext == "r16" {
        let (w, h) = raw_dims
            .ok_or_else(|| anyhow!("{} is a raw frame; pass --raw-dims WxH", path.display()))
            .config_err()?;
        read_raw(&bytes, w, h)
    } else {
        read_pgm(&bytes).map(|d| {
            if d.clamped > 0 {
                log::warn!(
                    "{}: {} samples above 2047 clamped",
                    path.display(),
                    d.clamped
                );
            }
            d.frame
        })
    };
    frame
        .with_context(|| format!("decoding {}", path.display()))
        .format_err()
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .format_err()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes)
        .with_context(|| format!("writing {}", path.display()))
        .format_err()
}

fn detect(args: &DetectArgs) -> Result<(), Failure> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(n) = args.max_hands {
        cfg.max_hands = n as usize;
    }
    cfg.output.overlays &= args.out_overlay_dir.is_some();
    if let Some(dir) = &args.out_overlay_dir {
        create_dir(dir)?;
    }
    let paths = frame_paths(&args.input).format_err()?;
    let mut pipeline = Pipeline::new(cfg).map_err(classify)?;

    let mut out: Box<dyn Write> = match &args.out_report {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p)
                .with_context(|| format!("creating {}", p.display()))
                .format_err()?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    for chunk in paths.chunks(BATCH) {
        let frames = chunk
            .iter()
            .map(|p| read_frame(p, args.raw_dims))
            .collect::<Result<Vec<_>, _>>()?;
        for result in pipeline.process(&frames).map_err(classify)? {
            out.write_all(&write_report_line(&result.report))
                .format_err()?;
            if let (Some(dir), Some(ppm)) = (&args.out_overlay_dir, &result.overlay) {
                let name = format!("frame_{:06}.ppm", result.report.frame_index);
                write_file(&dir.join(name), ppm)?;
            }
        }
    }
    out.flush().format_err()?;
    log::info!("{} frames processed", paths.len());
    Ok(())
}

fn load_scenes(args: &CorpusArgs, cfg: &PipelineConfig) -> Result<Vec<SceneSpec>, Failure> {
    if let Some(path) = &args.input {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .format_err()?;
        return serde_json::from_str(&text)
            .with_context(|| format!("parsing scenes {}", path.display()))
            .format_err();
    }
    let params = CorpusParams {
        scenes: args.generate.unwrap_or(0),
        ..Default::default()
    };
    generate_corpus(&params, args.seed, &cfg.model().map_err(classify)?).map_err(classify)
}

#[derive(serde::Serialize)]
struct TruthRecord<'a> {
    scene: usize,
    frame: String,
    hands: &'a [depthhand::synth::GroundTruth],
}

fn synth(args: &SynthArgs) -> Result<(), Failure> {
    let cfg = load_config(args.corpus.config.as_deref())?;
    let model = cfg.model().map_err(classify)?;
    let scenes = load_scenes(&args.corpus, &cfg)?;
    create_dir(&args.out_dir)?;
    if args.corpus.input.is_none() {
        let text = serde_json::to_string_pretty(&scenes).format_err()?;
        write_file(&args.out_dir.join("scenes.json"), text.as_bytes())?;
    }
    let mut rendered = Vec::with_capacity(scenes.len());
    for (i, scene) in scenes.iter().enumerate() {
        let (frame, hands) = render_scene(scene, &model)
            .with_context(|| format!("scene {i}"))
            .format_err()?;
        let (name, bytes) = match args.format {
            FrameFormat::Pgm => (format!("scene_{i:04}.pgm"), write_pgm(&frame)),
            FrameFormat::Raw => (format!("scene_{i:04}.raw"), write_raw(&frame)),
        };
        write_file(&args.out_dir.join(&name), &bytes)?;
        rendered.push((name, hands));
    }
    let truth: Vec<TruthRecord> = rendered
        .iter()
        .enumerate()
        .map(|(scene, (frame, hands))| TruthRecord {
            scene,
            frame: frame.clone(),
            hands,
        })
        .collect();
    let text = serde_json::to_string_pretty(&truth).format_err()?;
    write_file(&args.out_dir.join("ground_truth.json"), text.as_bytes())?;
    log::info!(
        "{} scenes written to {}",
        scenes.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<(), Failure> {
    let mut cfg = load_config(args.corpus.config.as_deref())?;
    if let Some(n) = args.max_hands {
        cfg.max_hands = n as usize;
    }
    let scenes = load_scenes(&args.corpus, &cfg)?;
    let metrics = run_benchmark(&scenes, &cfg).map_err(classify)?;
    let mut text = serde_json::to_string_pretty(&metrics).format_err()?;
    text.push('\n');
    match &args.out {
        Some(p) => write_file(p, text.as_bytes()),
        None => io::stdout().write_all(text.as_bytes()).format_err(),
    }
}

fn convert(args: &ConvertArgs) -> Result<(), Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let frame = read_frame(&args.input, args.raw_dims)?;
    let ext = args
        .output
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let bytes = match ext.as_str() {
        "pgm" => write_pgm(&frame),
        "raw" | "r16" => write_raw(&frame),
        "ppm" => write_overlay(&frame, &[], cfg.raw_valid_max),
        other => {
            return Err(anyhow!(
                "unknown output extension {other:?}; use .pgm, .raw, .r16 or .ppm"
            ))
            .config_err()
        }
    };
    write_file(&args.output, &bytes)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("starting worker pool")
            .config_err()?;
    }
    match &cli.command {
        Command::Detect(a) => detect(a),
        Command::Synth(a) => synth(a),
        Command::Bench(a) => bench(a),
        Command::Convert(a) => convert(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
