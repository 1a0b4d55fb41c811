//! Command-line front end.
//!
//! Exit codes: 0 success, 1 every batch row failed (or an internal
//! failure), 2 unreadable or malformed input, 3 invalid configuration or
//! side-table schema.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::features::{read_features_csv, write_features_csv, Feature, FeatureVector};
use crate::graph::SpatioSemanticGraph;
use crate::ingest::{SourceFormat, DEFAULT_PARTICIPANT_TIER};
use crate::lexicon::CiuSequence;
use crate::pipeline::{read_manifest, Pipeline, RunConfig};
use crate::render::{render_svg, to_dot, SvgOptions};
use crate::spatial::Point;
use crate::stats::{ancova_table, join_cohort, read_meta_csv, write_ancova_csv};
use crate::synth::{generate_cohort, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ciugraph",
    version,
    about = "Spatio-semantic graphs from Cookie Theft picture descriptions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract the CIU sequence of a transcript as JSON.
    Extract {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Compute graph features of a transcript or a CIU sequence JSON.
    Features {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Emit a CSV row instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Compute features for every transcript listed in a manifest CSV.
    Batch {
        /// CSV with id,path[,group,age,education_years,gender]; relative
        /// paths are resolved against the manifest's directory.
        #[arg(long)]
        manifest: PathBuf,
        /// Feature CSV in manifest order; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Write failed rows as id,error CSV here.
        #[arg(long)]
        error_log: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// ANCOVA of every feature between impaired and unimpaired speakers.
    Stats {
        /// Feature CSV as written by `features --csv` or `batch`.
        #[arg(long)]
        features: PathBuf,
        /// CSV with id,group,age,education_years,gender.
        #[arg(long)]
        meta: PathBuf,
        /// ANCOVA table CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw the graph of a transcript, CIU sequence JSON or graph JSON.
    Render {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Graphviz DOT output.
        #[arg(long, conflicts_with = "svg")]
        dot: bool,
        /// SVG output (the default).
        #[arg(long)]
        svg: bool,
        /// Emit the graph as JSON.
        #[arg(long, conflicts_with_all = ["svg", "dot"])]
        json: bool,
        /// Draw the quadrant split lines.
        #[arg(long)]
        grid: bool,
        /// Picture to draw underneath the graph.
        #[arg(long)]
        background: Option<String>,
    },
    /// Generate a synthetic cohort: manifest.csv plus transcripts/.
    Synth {
        /// SynthSpec JSON; without it a cohort with no group effect is drawn.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Speakers per group (ignored with --spec).
        #[arg(long, default_value_t = 30)]
        n_per_group: usize,
        /// PRNG seed (ignored with --spec).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Double the impaired repeat rate (ignored with --spec).
        #[arg(long)]
        effect: bool,
        /// Directory for manifest.csv and transcripts/.
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Input file; standard input when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Chat,
    Text,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Input format; detected from the extension or a CHAT header if omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Lexicon JSON replacing the bundled dictionary.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// CIU coordinate table JSON replacing the bundled one.
    #[arg(long)]
    pub coords: Option<PathBuf>,
    /// Lemmatizer rule JSON replacing the bundled rules.
    #[arg(long)]
    pub lemma_rules: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_PARTICIPANT_TIER)]
    pub participant_tier: String,
    /// Also match dictionary words flagged as low precision.
    #[arg(long)]
    pub include_low_precision: bool,
}

impl ConfigArgs {
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            lexicon_path: self.lexicon.clone(),
            coords_path: self.coords.clone(),
            lemma_rules_path: self.lemma_rules.clone(),
            input_format: self.format.map(|f| match f {
                FormatArg::Chat => SourceFormat::Chat,
                FormatArg::Text => SourceFormat::PlainText,
            }),
            participant_tier: self.participant_tier.trim_start_matches('*').to_string(),
            include_low_precision: self.include_low_precision,
        }
    }

    fn load(&self) -> Result<Pipeline, Failure> {
        self.run_config().load().map_err(|e| Failure::config(&e))
    }
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn config(err: &Error) -> Self {
        Failure::new(EXIT_CONFIG, err.to_string())
    }

    fn input(err: impl std::fmt::Display) -> Self {
        Failure::new(EXIT_INPUT, err.to_string())
    }

    fn other(err: impl std::fmt::Display) -> Self {
        Failure::new(EXIT_FAILURE, err.to_string())
    }
}

/// Parse arguments, run, and report. Returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Extract { io, config } => {
            let pipeline = config.load()?;
            let (id, bytes, path) = read_input(&io)?;
            let seq = pipeline
                .extract_bytes(&id, &bytes, path.as_deref())
                .map_err(Failure::input)?;
            write_output(&io.out, format!("{}\n", seq.to_json()).as_bytes())
        }
        Command::Features { io, config, csv } => {
            let pipeline = config.load()?;
            let (id, bytes, path) = read_input(&io)?;
            let seq = sequence_from_input(&pipeline, &id, &bytes, path.as_deref())?;
            let fv = pipeline.features(&seq).map_err(Failure::other)?;
            warn_if_empty(&fv);
            let body = if csv {
                let mut buf = Vec::new();
                write_features_csv(std::slice::from_ref(&fv), &mut buf).map_err(Failure::other)?;
                buf
            } else {
                let mut text = serde_json::to_string_pretty(&fv).map_err(Failure::other)?;
                text.push('\n');
                text.into_bytes()
            };
            write_output(&io.out, &body)
        }
        Command::Batch {
            manifest,
            out,
            jobs,
            error_log,
            config,
        } => {
            let pipeline = config.load()?;
            let text = fs::read_to_string(&manifest)
                .map_err(|e| Failure::new(EXIT_CONFIG, format!("cannot read {}: {e}", manifest.display())))?;
            let base = manifest.parent().unwrap_or(Path::new(""));
            let rows = read_manifest(&text, base).map_err(|e| Failure::config(&e))?;
            let results = pipeline.batch(&rows, jobs).map_err(Failure::other)?;

            let mut ok = Vec::new();
            let mut errors = csv::Writer::from_writer(Vec::new());
            errors.write_record(["id", "error"]).map_err(Failure::other)?;
            for (row, result) in rows.iter().zip(results) {
                match result {
                    Ok(fv) => {
                        warn_if_empty(&fv);
                        ok.push(fv);
                    }
                    Err(e) => {
                        eprintln!("error: {}: {e}", row.id);
                        errors
                            .write_record([row.id.as_str(), &e.to_string()])
                            .map_err(Failure::other)?;
                    }
                }
            }
            let failed = rows.len() - ok.len();
            let mut buf = Vec::new();
            write_features_csv(&ok, &mut buf).map_err(Failure::other)?;
            write_output(&out, &buf)?;
            if let Some(path) = error_log {
                let log = errors.into_inner().map_err(Failure::other)?;
                fs::write(&path, log).map_err(Failure::other)?;
            }
            if !rows.is_empty() && failed == rows.len() {
                return Err(Failure::new(EXIT_FAILURE, format!("all {failed} manifest rows failed")));
            }
            Ok(())
        }
        Command::Stats { features, meta, out } => {
            let feature_file = fs::File::open(&features)
                .map_err(|e| Failure::input(format!("cannot read {}: {e}", features.display())))?;
            let rows = read_features_csv(feature_file).map_err(Failure::input)?;
            let meta_file = fs::File::open(&meta)
                .map_err(|e| Failure::new(EXIT_CONFIG, format!("cannot read {}: {e}", meta.display())))?;
            let meta = read_meta_csv(meta_file).map_err(|e| Failure::config(&e))?;
            let (records, warnings) = join_cohort(&rows, &meta);
            for w in warnings {
                log::warn!("{w}");
            }
            let table = ancova_table(&records, &Feature::TABLE_ORDER);
            for row in &table {
                if let Err(e) = &row.outcome {
                    log::warn!("{e}");
                }
            }
            let mut buf = Vec::new();
            write_ancova_csv(&table, &mut buf).map_err(Failure::other)?;
            write_output(&out, &buf)
        }
        Command::Render {
            io,
            config,
            dot,
            svg: _,
            json,
            grid,
            background,
        } => {
            let pipeline = config.load()?;
            let (id, bytes, path) = read_input(&io)?;
            let graph = graph_from_input(&pipeline, &id, &bytes, path.as_deref())?;
            let body = if json {
                format!("{}\n", graph.to_json())
            } else if dot {
                to_dot(&graph)
            } else {
                let center = pipeline.coords.center();
                render_svg(
                    &graph,
                    &SvgOptions {
                        width: pipeline.coords.width(),
                        height: pipeline.coords.height(),
                        grid: grid.then_some(Point::new(center.x, center.y)),
                        background,
                    },
                )
            };
            write_output(&io.out, body.as_bytes())
        }
        Command::Synth {
            spec,
            n_per_group,
            seed,
            effect,
            out_dir,
            config,
        } => {
            let pipeline = config.load()?;
            let spec = match spec {
                Some(path) => {
                    let bytes = fs::read(&path)
                        .map_err(|e| Failure::new(EXIT_CONFIG, format!("cannot read {}: {e}", path.display())))?;
                    SynthSpec::from_json(&bytes).map_err(|e| Failure::config(&e))?
                }
                None if effect => SynthSpec::repeat_effect(n_per_group, seed),
                None => SynthSpec::null(n_per_group, seed),
            };
            let cohort = generate_cohort(&spec, &pipeline).map_err(|e| Failure::config(&e))?;
            let manifest = cohort.write_to(&out_dir).map_err(Failure::other)?;
            log::info!("wrote {} transcripts and {}", cohort.subjects.len(), manifest.display());
            Ok(())
        }
    }
}

fn read_input(io: &IoArgs) -> Result<(String, Vec<u8>, Option<PathBuf>), Failure> {
    match &io.input {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "input".into());
            Ok((id, bytes, Some(path.clone())))
        }
        None => {
            let mut bytes = Vec::new();
            io::stdin().read_to_end(&mut bytes).map_err(Failure::input)?;
            Ok(("stdin".into(), bytes, None))
        }
    }
}

fn looks_like_json(bytes: &[u8]) -> bool {
    bytes
        .iter()
        .find(|b| !b.is_ascii_whitespace())
        .is_some_and(|&b| b == b'{')
}

fn sequence_from_input(
    pipeline: &Pipeline,
    id: &str,
    bytes: &[u8],
    path: Option<&Path>,
) -> Result<CiuSequence, Failure> {
    if looks_like_json(bytes) {
        CiuSequence::from_json(bytes).map_err(Failure::input)
    } else {
        pipeline.extract_bytes(id, bytes, path).map_err(Failure::input)
    }
}

fn graph_from_input(
    pipeline: &Pipeline,
    id: &str,
    bytes: &[u8],
    path: Option<&Path>,
) -> Result<SpatioSemanticGraph, Failure> {
    if looks_like_json(bytes) {
        let value: serde_json::Value = serde_json::from_slice(bytes).map_err(Failure::input)?;
        if value.get("nodes").is_some() {
            let text = std::str::from_utf8(bytes).map_err(Failure::input)?;
            return SpatioSemanticGraph::from_json(text).map_err(Failure::input);
        }
    }
    let seq = sequence_from_input(pipeline, id, bytes, path)?;
    pipeline.graph(&seq).map_err(Failure::other)
}

fn warn_if_empty(fv: &FeatureVector) {
    if fv.is_empty() {
        log::warn!("{}: no CIUs found; features are undefined", fv.transcript_id);
    }
}

fn write_output(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, bytes).map_err(|e| Failure::other(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(Failure::other)
        }
    }
}
