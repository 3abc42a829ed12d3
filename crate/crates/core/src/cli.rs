//! Command-line front end. Flags override values from a `--config` TOML
//! file, which override built-in defaults.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::Error;
use crate::ingest::{
    parse_aoi_map, parse_fixation_log, parse_stage_annotations, write_fixation_csv,
    write_stage_csv, LogFormat,
};
use crate::network::{
    export_dot, export_json, find_motifs, motifs_to_csv, DEFAULT_MOTIF_THRESHOLD,
};
use crate::pipeline::{
    analyze_all, group_samples, metrics_csv, metrics_json, pooled_networks, validate_inputs,
    CompareBy, GroupBy, Inputs, Metric, PipelineConfig,
};
use crate::sequence::DEFAULT_MERGE_GAP_MS;
use crate::stats::compare_groups;
use crate::synth::{demo_corpus, generate, preset_by_name, GeneratorSpec};
use crate::tna::{AnalysisConfig, SmoothingConfig, DEFAULT_ALPHA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "gaze-tna",
    version,
    about = "Transition network analysis of eye-tracking fixation logs"
)]
struct Cli {
    /// TOML file with default settings
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse all inputs and report counts and unmapped objects
    Validate {
        #[command(flatten)]
        input: InputArgs,
        /// Merge threshold in ms [default: 300]
        #[arg(long)]
        gap_ms: Option<u64>,
    },
    /// Per-participant transition metrics
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Median (Q1-Q3) per group and a Kruskal-Wallis test for one metric
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// entropy | self_loop | cross_scan
        #[arg(long, default_value = "entropy")]
        metric: String,
        /// role | stage
        #[arg(long, default_value = "role")]
        by: String,
    },
    /// Pooled transition networks, one DOT/JSON file per group cell
    Network {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Drop edges below this probability [default: 0]
        #[arg(long)]
        min_prob: Option<f64>,
    },
    /// Dyad and triad motifs of the pooled networks
    Motifs {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Drop edges below this probability [default: 0]
        #[arg(long)]
        min_prob: Option<f64>,
        /// Minimum probability of every motif edge
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Generate a synthetic fixation log
    Simulate {
        /// Built-in preset such as `cpr-stage5`
        #[arg(long, conflicts_with_all = ["spec", "demo_corpus"])]
        preset: Option<String>,
        /// Generator spec in JSON
        #[arg(long, conflicts_with = "demo_corpus")]
        spec: Option<PathBuf>,
        /// Write the four-role demo corpus into the `--out` directory
        #[arg(long)]
        demo_corpus: bool,
        /// Override the spec's seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of fixations
        #[arg(long)]
        length: Option<usize>,
        /// Output file (directory with `--demo-corpus`); stdout if absent
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the AOI map matching the generated object ids
        #[arg(long)]
        aoi_map_out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Fixation log (CSV or JSON lines)
    #[arg(long)]
    fixations: Option<PathBuf>,
    /// Object-to-AOI mapping table
    #[arg(long)]
    aoi_map: Option<PathBuf>,
    /// Stage windows per session (CSV)
    #[arg(long)]
    stages: Option<PathBuf>,
    /// csv | jsonl (default: from the file extension)
    #[arg(long)]
    log_format: Option<String>,
}

#[derive(Debug, Args)]
struct AnalysisArgs {
    /// Laplace smoothing constant [default: 0.5]
    #[arg(long)]
    alpha: Option<f64>,
    /// Merge same-object fixations separated by at most this many ms [default: 300]
    #[arg(long)]
    gap_ms: Option<u64>,
    /// Use raw off-diagonal probabilities in the entropy
    #[arg(long)]
    no_entropy_renormalize: bool,
    /// Give rows without outgoing transitions a uniform distribution
    #[arg(long)]
    smooth_empty_rows: bool,
    /// Comma-separated subset of role,stage,participant
    #[arg(long)]
    group_by: Option<String>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output directory; tables go to stdout if absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of csv,json,dot
    #[arg(long)]
    format: Option<String>,
    /// Keep every float digit in JSON output
    #[arg(long)]
    full_precision: bool,
}

/// Keys accepted in the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    fixations: Option<PathBuf>,
    aoi_map: Option<PathBuf>,
    stages: Option<PathBuf>,
    log_format: Option<String>,
    alpha: Option<f64>,
    gap_ms: Option<u64>,
    entropy_renormalize: Option<bool>,
    smooth_empty_rows: Option<bool>,
    group_by: Option<Vec<String>>,
    min_prob: Option<f64>,
    threshold: Option<f64>,
    seed: Option<u64>,
    format: Option<Vec<String>>,
    out: Option<PathBuf>,
    full_precision: Option<bool>,
}

/// An error tagged with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => EXIT_CONFIG,
            Error::Io(_) | Error::Json(_) => EXIT_INTERNAL,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn load_config(path: Option<&Path>) -> CliResult<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::config(format!("config {}: {e}", path.display())))
}

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn load_inputs(args: &InputArgs, cfg: &ConfigFile) -> CliResult<Inputs> {
    let fixations = args
        .fixations
        .clone()
        .or_else(|| cfg.fixations.clone())
        .ok_or_else(|| Failure::config("--fixations is required"))?;
    let aoi_path = args
        .aoi_map
        .clone()
        .or_else(|| cfg.aoi_map.clone())
        .ok_or_else(|| Failure::config("--aoi-map is required"))?;
    let stages_path = args.stages.clone().or_else(|| cfg.stages.clone());
    let format = match args.log_format.as_ref().or(cfg.log_format.as_ref()) {
        Some(f) => f.parse::<LogFormat>()?,
        None => match fixations.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson") => LogFormat::Jsonl,
            _ => LogFormat::Csv,
        },
    };
    let with_path = |p: &Path, e: Error| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", p.display(), f.message);
        f
    };
    let records = parse_fixation_log(&read_input(&fixations)?, format)
        .map_err(|e| with_path(&fixations, e))?;
    let aoi_map = parse_aoi_map(&read_input(&aoi_path)?).map_err(|e| with_path(&aoi_path, e))?;
    let stages = match stages_path {
        Some(p) => parse_stage_annotations(&read_input(&p)?).map_err(|e| with_path(&p, e))?,
        None => Vec::new(),
    };
    Ok(Inputs {
        records,
        aoi_map,
        stages,
    })
}

fn pipeline_config(
    args: &AnalysisArgs,
    cfg: &ConfigFile,
    default_group: GroupBy,
) -> CliResult<PipelineConfig> {
    let alpha = args.alpha.or(cfg.alpha).unwrap_or(DEFAULT_ALPHA);
    let smooth_empty = args.smooth_empty_rows || cfg.smooth_empty_rows.unwrap_or(false);
    let renormalize = !args.no_entropy_renormalize && cfg.entropy_renormalize.unwrap_or(true);
    let group_by = match (&args.group_by, &cfg.group_by) {
        (Some(g), _) => g.parse()?,
        (None, Some(list)) => list.join(",").parse()?,
        (None, None) => default_group,
    };
    Ok(PipelineConfig {
        analysis: AnalysisConfig {
            smoothing: SmoothingConfig::new(alpha, smooth_empty)?,
            entropy_renormalize: renormalize,
        },
        gap_ms: args.gap_ms.or(cfg.gap_ms).unwrap_or(DEFAULT_MERGE_GAP_MS),
        group_by,
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct Formats {
    csv: bool,
    json: bool,
    dot: bool,
}

fn formats(args: &OutputArgs, cfg: &ConfigFile, default: &str) -> CliResult<Formats> {
    let list = match (&args.format, &cfg.format) {
        (Some(f), _) => f.clone(),
        (None, Some(list)) => list.join(","),
        (None, None) => default.to_string(),
    };
    let mut f = Formats::default();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part {
            "csv" => f.csv = true,
            "json" => f.json = true,
            "dot" => f.dot = true,
            other => return Err(Failure::config(format!("unknown output format `{other}`"))),
        }
    }
    Ok(f)
}

fn out_dir(args: &OutputArgs, cfg: &ConfigFile) -> CliResult<Option<PathBuf>> {
    let Some(dir) = args.out.clone().or_else(|| cfg.out.clone()) else {
        return Ok(None);
    };
    fs::create_dir_all(&dir).map_err(|e| {
        Failure::config(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })?;
    Ok(Some(dir))
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents)
        .map_err(|e| Failure::internal(format!("cannot write {}: {e}", path.display())))
}

fn emit(stdout: &mut dyn Write, text: &str) -> CliResult<()> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| Failure::internal(format!("cannot write output: {e}")))
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Validate { input, gap_ms } => {
            let inputs = load_inputs(&input, &cfg)?;
            let report = validate_inputs(
                &inputs,
                gap_ms.or(cfg.gap_ms).unwrap_or(DEFAULT_MERGE_GAP_MS),
            )?;
            emit(stdout, &report.render())
        }
        Command::Analyze {
            input,
            analysis,
            output,
        } => {
            let inputs = load_inputs(&input, &cfg)?;
            let pc = pipeline_config(&analysis, &cfg, GroupBy::role())?;
            let full = output.full_precision || cfg.full_precision.unwrap_or(false);
            let results = analyze_all(&inputs, &pc)?;
            let order = inputs.aoi_map.aoi_order();
            let skipped = results.iter().filter(|r| r.analysis.is_none()).count();
            if skipped > 0 {
                let _ = writeln!(
                    stderr,
                    "warning: {skipped} empty sequence(s) marked skipped"
                );
            }
            let fmt = formats(&output, &cfg, "csv")?;
            match out_dir(&output, &cfg)? {
                Some(dir) => {
                    if fmt.csv {
                        write_file(
                            &dir.join("metrics.csv"),
                            metrics_csv(&results, order, full)?.as_bytes(),
                        )?;
                    }
                    if fmt.json {
                        write_file(
                            &dir.join("metrics.json"),
                            metrics_json(&results, order, full)?.as_bytes(),
                        )?;
                    }
                    Ok(())
                }
                None if fmt.json && !fmt.csv => emit(stdout, &metrics_json(&results, order, full)?),
                None => emit(stdout, &metrics_csv(&results, order, full)?),
            }
        }
        Command::Compare {
            input,
            analysis,
            output,
            metric,
            by,
        } => {
            let metric: Metric = metric.parse()?;
            let by: CompareBy = by.parse()?;
            let inputs = load_inputs(&input, &cfg)?;
            let mut pc = pipeline_config(&analysis, &cfg, GroupBy::role())?;
            if by == CompareBy::Stage {
                if inputs.stages.is_empty() {
                    return Err(Failure::config("comparing by stage needs --stages"));
                }
                pc.group_by.stage = true;
            }
            let full = output.full_precision || cfg.full_precision.unwrap_or(false);
            let results = analyze_all(&inputs, &pc)?;
            let comparison = compare_groups(metric.name(), &group_samples(&results, by, metric))?;
            emit(stdout, &comparison.to_table())?;
            if let Some(dir) = out_dir(&output, &cfg)? {
                let fmt = formats(&output, &cfg, "csv,json")?;
                let stem = format!("compare_{}", metric.name());
                if fmt.csv {
                    write_file(
                        &dir.join(format!("{stem}.csv")),
                        comparison.to_csv(full).as_bytes(),
                    )?;
                }
                if fmt.json {
                    let mut value = serde_json::to_value(&comparison).map_err(Error::from)?;
                    if !full {
                        crate::format::round_json(&mut value);
                    }
                    let text = serde_json::to_string_pretty(&value).map_err(Error::from)? + "\n";
                    write_file(&dir.join(format!("{stem}.json")), text.as_bytes())?;
                }
            }
            Ok(())
        }
        Command::Network {
            input,
            analysis,
            output,
            min_prob,
        } => {
            let inputs = load_inputs(&input, &cfg)?;
            let pc = pipeline_config(&analysis, &cfg, GroupBy::role())?;
            let min_prob = min_prob.or(cfg.min_prob).unwrap_or(0.0);
            let full = output.full_precision || cfg.full_precision.unwrap_or(false);
            let fmt = formats(&output, &cfg, "dot,json")?;
            let dir =
                out_dir(&output, &cfg)?.ok_or_else(|| Failure::config("network needs --out"))?;
            let mut written = 0;
            for cell in pooled_networks(&inputs, &pc, min_prob)? {
                let stem = cell.key.file_stem("tna");
                let Some(net) = cell.network else {
                    let _ = writeln!(stderr, "warning: {stem} has no fixations, no file written");
                    continue;
                };
                if fmt.dot {
                    write_file(
                        &dir.join(format!("{stem}.dot")),
                        export_dot(&net).as_bytes(),
                    )?;
                    written += 1;
                }
                if fmt.json {
                    write_file(
                        &dir.join(format!("{stem}.json")),
                        export_json(&net, full)?.as_bytes(),
                    )?;
                    written += 1;
                }
            }
            let _ = writeln!(stderr, "wrote {written} file(s) to {}", dir.display());
            Ok(())
        }
        Command::Motifs {
            input,
            analysis,
            output,
            min_prob,
            threshold,
        } => {
            let inputs = load_inputs(&input, &cfg)?;
            let pc = pipeline_config(&analysis, &cfg, GroupBy::role())?;
            let min_prob = min_prob.or(cfg.min_prob).unwrap_or(0.0);
            let threshold = threshold
                .or(cfg.threshold)
                .unwrap_or(DEFAULT_MOTIF_THRESHOLD);
            let dir = out_dir(&output, &cfg)?;
            let fmt = formats(&output, &cfg, "csv")?;
            for cell in pooled_networks(&inputs, &pc, min_prob)? {
                let stem = cell.key.file_stem("motifs");
                let Some(net) = cell.network else {
                    let _ = writeln!(stderr, "warning: {stem} has no fixations, skipped");
                    continue;
                };
                let motifs = find_motifs(&net, threshold)?;
                let mut summary = format!("{stem}: {} motif(s)\n", motifs.len());
                for m in &motifs {
                    summary += &format!(
                        "  {} {} {:.3}\n",
                        m.kind.as_str(),
                        m.members.join(" | "),
                        m.min_edge_prob
                    );
                }
                emit(stdout, &summary)?;
                if let Some(dir) = &dir {
                    if fmt.csv {
                        write_file(
                            &dir.join(format!("{stem}.csv")),
                            motifs_to_csv(&motifs).as_bytes(),
                        )?;
                    }
                    if fmt.json {
                        let text =
                            serde_json::to_string_pretty(&motifs).map_err(Error::from)? + "\n";
                        write_file(&dir.join(format!("{stem}.json")), text.as_bytes())?;
                    }
                }
            }
            Ok(())
        }
        Command::Simulate {
            preset,
            spec,
            demo_corpus: demo,
            seed,
            length,
            out,
            aoi_map_out,
        } => {
            let seed = seed.or(cfg.seed);
            if demo {
                let dir = out.ok_or_else(|| Failure::config("--demo-corpus needs --out DIR"))?;
                fs::create_dir_all(&dir).map_err(|e| {
                    Failure::config(format!("cannot create {}: {e}", dir.display()))
                })?;
                let corpus = demo_corpus(seed.unwrap_or(0))?;
                let mut buf = Vec::new();
                write_fixation_csv(&corpus.records, &mut buf)?;
                write_file(&dir.join("fixations.csv"), &buf)?;
                write_file(
                    &dir.join("aoi_map.txt"),
                    corpus.aoi_map.to_text().as_bytes(),
                )?;
                let mut buf = Vec::new();
                write_stage_csv(&corpus.stages, &mut buf)?;
                return write_file(&dir.join("stages.csv"), &buf);
            }
            let mut spec: GeneratorSpec = match (preset, spec) {
                (Some(name), None) => preset_by_name(&name)?,
                (None, Some(path)) => {
                    let text = String::from_utf8(read_input(&path)?)
                        .map_err(|_| Failure::input(format!("{} is not UTF-8", path.display())))?;
                    GeneratorSpec::from_json(&text)
                        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?
                }
                _ => {
                    return Err(Failure::config(
                        "simulate needs --preset, --spec or --demo-corpus",
                    ))
                }
            };
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(n) = length {
                spec.length = n;
            }
            let records = generate(&spec)?;
            let mut buf = Vec::new();
            write_fixation_csv(&records, &mut buf)?;
            match out {
                Some(path) => write_file(&path, &buf)?,
                None => emit(stdout, &String::from_utf8_lossy(&buf))?,
            }
            if let Some(path) = aoi_map_out {
                write_file(&path, spec.aoi_map()?.to_text().as_bytes())?;
            }
            Ok(())
        }
    }
}
