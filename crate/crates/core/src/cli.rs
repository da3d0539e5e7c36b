//! Command-line front end: `track`, `evaluate`, `ablate` and `synth`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::correction::write_merge_events;
use crate::error::{Error, Result};
use crate::ingest::{
    parse_assignments, parse_detections, parse_ground_truth, write_assignments, write_detections,
    write_ground_truth, DetectionRecord, GroundTruth,
};
use crate::metrics::{
    emit_crp, emit_report, evaluate, render_crp_svg, MetricsReport, ReportFile, ReportFormat,
};
use crate::synth::{fixture, generate, ScenarioConfig, FIXTURE_NAMES};
use crate::tracker::{run, Ablation, PredictorKind, TrackerConfig, TrackingOutput};

#[derive(Debug, Parser)]
#[command(
    name = "facetrack",
    version,
    about = "Long-term multi-face tracking over detection streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track a detection stream and write per-detection track IDs.
    Track(TrackArgs),
    /// Score assignments against ground truth.
    Evaluate(EvaluateArgs),
    /// Run the five module combinations on one video and tabulate their metrics.
    Ablate(AblateArgs),
    /// Generate a synthetic detection stream and its ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictorArg {
    Hold,
    Cv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => ReportFormat::Text,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

/// Tracker settings; flags override values from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct TrackerFlags {
    /// TOML file with tracker settings.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Minimum IOU (exclusive) for associating a detection with a tracklet [default: 0.25].
    #[arg(long)]
    pub iou_thresh: Option<f64>,
    /// Minimum face similarity (inclusive) for reconnecting tracklets [default: 0.7].
    #[arg(long)]
    pub fbtr_thresh: Option<f64>,
    /// Frames a tracklet survives without detections [default: 10].
    #[arg(long)]
    pub tmax: Option<u32>,
    /// Motion model for lost tracklets [default: cv].
    #[arg(long, value_enum)]
    pub predictor: Option<PredictorArg>,
    /// Disable face-based tracklet reconnection.
    #[arg(long)]
    pub no_fbtr: bool,
    /// Disable retroactive ID correction.
    #[arg(long)]
    pub no_cm: bool,
}

impl TrackerFlags {
    pub fn resolve(&self) -> Result<TrackerConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = read_text(path)?;
                toml::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?
            }
            None => TrackerConfig::default(),
        };
        if let Some(v) = self.iou_thresh {
            c.iou_threshold = v;
        }
        if let Some(v) = self.fbtr_thresh {
            c.fbtr_threshold = v;
        }
        if let Some(v) = self.tmax {
            c.t_max = v;
        }
        if let Some(p) = self.predictor {
            c.predictor = match p {
                PredictorArg::Hold => PredictorKind::HoldLast,
                PredictorArg::Cv => PredictorKind::ConstantVelocity,
            };
        }
        if self.no_fbtr {
            c.fbtr_enabled = false;
        }
        if self.no_cm {
            c.cm_enabled = false;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Detection stream (TSV).
    #[arg(
        long,
        short,
        value_name = "FILE",
        required_unless_present = "from_manifest"
    )]
    pub detections: Option<PathBuf>,
    /// Assignments output (CSV); stdout when omitted.
    #[arg(long, short, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Merge events output (CSV).
    #[arg(long, value_name = "FILE")]
    pub events_out: Option<PathBuf>,
    /// Run manifest output; defaults to `<out>.manifest.json` when `--out` is given.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Re-run the inputs and settings recorded in a manifest.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["detections", "config", "iou_thresh", "fbtr_thresh", "tmax", "predictor", "no_fbtr", "no_cm"])]
    pub from_manifest: Option<PathBuf>,
    /// Leave wall-clock measurements out of the manifest.
    #[arg(long)]
    pub no_timing: bool,
    #[command(flatten)]
    pub tracker: TrackerFlags,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Assignment files, one per video.
    #[arg(long, short, value_name = "FILE", required = true)]
    pub assignments: Vec<PathBuf>,
    /// Ground-truth files, paired with `--assignments` in order.
    #[arg(long, short, value_name = "FILE", required = true)]
    pub gt: Vec<PathBuf>,
    /// Track manifests whose measured FPS is copied into the report, paired in order.
    #[arg(long, value_name = "FILE")]
    pub manifest: Vec<PathBuf>,
    /// Report output; stdout when omitted.
    #[arg(long, short, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub report_format: FormatArg,
    /// Completion-rate plot table (CSV) for the aggregate.
    #[arg(long, value_name = "FILE")]
    pub crp_out: Option<PathBuf>,
    /// Completion-rate plot (SVG) with one curve per video.
    #[arg(long, value_name = "FILE")]
    pub crp_svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long, short, value_name = "FILE")]
    pub detections: PathBuf,
    #[arg(long, short, value_name = "FILE")]
    pub gt: PathBuf,
    /// Table output; stdout when omitted.
    #[arg(long, short, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub report_format: FormatArg,
    /// Completion-rate plot (SVG) with one curve per configuration.
    #[arg(long, value_name = "FILE")]
    pub crp_svg: Option<PathBuf>,
    /// Report FPS as unknown instead of measuring it.
    #[arg(long)]
    pub no_timing: bool,
    #[command(flatten)]
    pub tracker: TrackerFlags,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Built-in scenario name.
    #[arg(long, value_name = "NAME", conflicts_with = "config", required_unless_present_any = ["config", "list"])]
    pub fixture: Option<String>,
    /// Scenario file (TOML).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "FILE", required_unless_present_any = ["print_config", "list"])]
    pub detections_out: Option<PathBuf>,
    #[arg(long, value_name = "FILE", required_unless_present_any = ["print_config", "list"])]
    pub gt_out: Option<PathBuf>,
    /// Print the resolved scenario as TOML instead of generating it.
    #[arg(long)]
    pub print_config: bool,
    /// List the built-in scenarios.
    #[arg(long)]
    pub list: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestInputs {
    pub detections: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestOutputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignments: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<PathBuf>,
}

/// Engine-only timing: parsing and writing files are excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub frames: u64,
    pub detections: u64,
    pub engine_seconds: f64,
    pub fps: f64,
    pub detections_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub inputs: ManifestInputs,
    pub config: TrackerConfig,
    pub outputs: ManifestOutputs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            message: format!("{}: {e}", path.display()),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::UndefinedMetric(_) => 3,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and runs the command. Returns the exit
/// status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Track(a) => cmd_track(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn read_detections(path: &Path) -> Result<Vec<DetectionRecord>> {
    parse_detections(fs::File::open(path).map_err(|e| with_path(e, path))?)
}

fn read_gt(path: &Path) -> Result<GroundTruth> {
    parse_ground_truth(fs::File::open(path).map_err(|e| with_path(e, path))?)
}

fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| with_path(e, p)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Runs the engine and measures it.
pub fn timed_run(
    stream: &[DetectionRecord],
    config: &TrackerConfig,
) -> Result<(TrackingOutput, Timing)> {
    let start = Instant::now();
    let output = run(stream, config)?;
    let secs = start.elapsed().as_secs_f64();
    let frames = match (stream.first(), stream.last()) {
        (Some(a), Some(b)) => b.frame - a.frame + 1,
        _ => 0,
    };
    let rate = |n: u64| if secs > 0.0 { n as f64 / secs } else { 0.0 };
    let timing = Timing {
        frames,
        detections: stream.len() as u64,
        engine_seconds: secs,
        fps: rate(frames),
        detections_per_second: rate(stream.len() as u64),
    };
    Ok((output, timing))
}

pub fn cmd_track(args: &TrackArgs) -> Result<()> {
    let (detections_path, config, out, events_out) = match &args.from_manifest {
        Some(path) => {
            let m = RunManifest::read(path)?;
            m.config.validate()?;
            let out = args.out.clone().or(m.outputs.assignments);
            let events = args.events_out.clone().or(m.outputs.events);
            (m.inputs.detections, m.config, out, events)
        }
        None => (
            args.detections.clone().expect("clap requires --detections"),
            args.tracker.resolve()?,
            args.out.clone(),
            args.events_out.clone(),
        ),
    };
    let stream = read_detections(&detections_path)?;
    let (output, timing) = timed_run(&stream, &config)?;

    let mut buf = Vec::new();
    write_assignments(&output.log, &mut buf)?;
    write_output(out.as_deref(), &buf)?;
    if let Some(p) = &events_out {
        let mut buf = Vec::new();
        write_merge_events(&output.merges, &mut buf)?;
        write_output(Some(p), &buf)?;
    }

    let manifest_path = args.manifest.clone().or_else(|| {
        out.as_ref().map(|o| {
            let mut s = o.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    if let Some(p) = manifest_path {
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            inputs: ManifestInputs {
                detections: detections_path,
            },
            config,
            outputs: ManifestOutputs {
                assignments: out,
                events: events_out,
            },
            timing: (!args.no_timing).then_some(timing),
        };
        write_output(Some(&p), manifest.to_json().as_bytes())?;
    }
    Ok(())
}

fn video_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "video".into())
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    if args.assignments.len() != args.gt.len() {
        return Err(Error::Config(format!(
            "{} assignment files but {} ground-truth files",
            args.assignments.len(),
            args.gt.len()
        )));
    }
    if !args.manifest.is_empty() && args.manifest.len() != args.gt.len() {
        return Err(Error::Config(format!(
            "{} manifests for {} videos",
            args.manifest.len(),
            args.gt.len()
        )));
    }
    let mut reports = Vec::with_capacity(args.gt.len());
    for (i, (a, g)) in args.assignments.iter().zip(&args.gt).enumerate() {
        let log = parse_assignments(fs::File::open(a).map_err(|e| with_path(e, a))?)?;
        let gt = read_gt(g)?;
        if gt.is_empty() {
            return Err(Error::UndefinedMetric(format!(
                "{} has no ground-truth detections",
                g.display()
            )));
        }
        let mut report = evaluate(&video_name(g), &gt, &log)?;
        if let Some(m) = args.manifest.get(i) {
            report.fps = RunManifest::read(m)?.timing.map(|t| t.fps);
        }
        reports.push(report);
    }
    let file = ReportFile::new(reports)?;
    let mut buf = Vec::new();
    emit_report(&file, args.report_format.into(), &mut buf)?;
    write_output(args.out.as_deref(), &buf)?;
    if let Some(p) = &args.crp_out {
        let mut buf = Vec::new();
        emit_crp(&file.aggregate, &mut buf)?;
        write_output(Some(p), &buf)?;
    }
    if let Some(p) = &args.crp_svg {
        let series: Vec<(&str, &[f64])> = file
            .videos
            .iter()
            .map(|r| (r.video.as_str(), r.cr.as_slice()))
            .collect();
        write_output(Some(p), render_crp_svg(&series).as_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub architecture: String,
    #[serde(flatten)]
    pub report: MetricsReport,
}

/// Runs every module combination over one video. Configurations run one after another
/// so the measured FPS values are comparable.
pub fn run_ablation(
    stream: &[DetectionRecord],
    gt: &GroundTruth,
    base: &TrackerConfig,
    video: &str,
    measure: bool,
) -> Result<Vec<AblationRow>> {
    if gt.is_empty() {
        return Err(Error::UndefinedMetric(
            "ground truth has no detections".into(),
        ));
    }
    Ablation::ALL
        .iter()
        .map(|ab| {
            let (output, timing) = timed_run(stream, &ab.config(base))?;
            let mut report = evaluate(video, gt, &output.log)?;
            report.fps = measure.then_some(timing.fps);
            Ok(AblationRow {
                architecture: ab.label().into(),
                report,
            })
        })
        .collect()
}

pub fn format_ablation_table(rows: &[AblationRow]) -> String {
    let mut s = format!(
        "{:<16} {:>8} {:>11} {:>7} {:>9}\n",
        "Architecture", "Frag", "ID-Switches", "CRS", "FPS"
    );
    for r in rows {
        let fps = r
            .report
            .fps
            .map(|f| format!("{f:.1}"))
            .unwrap_or_else(|| "-".into());
        s.push_str(&format!(
            "{:<16} {:>8.4} {:>11.4} {:>7.3} {:>9}\n",
            r.architecture, r.report.frag, r.report.idsw, r.report.crs, fps
        ));
    }
    s
}

pub fn cmd_ablate(args: &AblateArgs) -> Result<()> {
    let base = args.tracker.resolve()?;
    let stream = read_detections(&args.detections)?;
    let gt = read_gt(&args.gt)?;
    let rows = run_ablation(&stream, &gt, &base, &video_name(&args.gt), !args.no_timing)?;
    let text = match args.report_format {
        FormatArg::Text => format_ablation_table(&rows),
        FormatArg::Json => {
            let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
            s.push('\n');
            s
        }
    };
    write_output(args.out.as_deref(), text.as_bytes())?;
    if let Some(p) = &args.crp_svg {
        let series: Vec<(&str, &[f64])> = rows
            .iter()
            .map(|r| (r.architecture.as_str(), r.report.cr.as_slice()))
            .collect();
        write_output(Some(p), render_crp_svg(&series).as_bytes())?;
    }
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    if args.list {
        write_output(None, format!("{}\n", FIXTURE_NAMES.join("\n")).as_bytes())?;
        return Ok(());
    }
    let mut config: ScenarioConfig = match (&args.fixture, &args.config) {
        (Some(name), _) => fixture(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown fixture `{name}` (expected one of {})",
                FIXTURE_NAMES.join(", ")
            ))
        })?,
        (None, Some(path)) => {
            let text = read_text(path)?;
            toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?
        }
        (None, None) => {
            return Err(Error::Config(
                "a fixture or scenario file is required".into(),
            ))
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.print_config {
        let text = toml::to_string(&config)
            .map_err(|e| Error::Config(format!("cannot serialize scenario: {e}")))?;
        return write_output(None, text.as_bytes());
    }
    let scenario = generate(&config)?;
    let mut det = Vec::new();
    write_detections(&scenario.detections, &mut det)?;
    let mut gt = Vec::new();
    write_ground_truth(&scenario.ground_truth, &mut gt)?;
    write_output(args.detections_out.as_deref(), &det)?;
    write_output(args.gt_out.as_deref(), &gt)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_defaults() {
        let cli = Cli::try_parse_from([
            "facetrack",
            "track",
            "-d",
            "x.tsv",
            "--no-fbtr",
            "--no-cm",
            "--predictor",
            "hold",
            "--tmax",
            "0",
        ])
        .unwrap();
        let Command::Track(args) = cli.command else {
            panic!()
        };
        let c = args.tracker.resolve().unwrap();
        assert_eq!(c, Ablation::Da.config(&TrackerConfig::default()));
    }

    #[test]
    fn defaults_match_tracker_defaults() {
        assert_eq!(
            TrackerFlags::default().resolve().unwrap(),
            TrackerConfig::default()
        );
    }

    #[test]
    fn bad_threshold_is_config_error() {
        let flags = TrackerFlags {
            iou_thresh: Some(1.5),
            ..Default::default()
        };
        assert_eq!(exit_code(&flags.resolve().unwrap_err()), 2);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&Error::Parse {
                line: 1,
                message: String::new()
            }),
            1
        );
        assert_eq!(exit_code(&Error::validation(1, "blur", "x")), 1);
        assert_eq!(exit_code(&Error::Config(String::new())), 2);
        assert_eq!(exit_code(&Error::UndefinedMetric(String::new())), 3);
    }

    #[test]
    fn table_has_header_and_five_rows() {
        let s = generate(&fixture("FIG3").unwrap()).unwrap();
        let rows = run_ablation(
            &s.detections,
            &s.ground_truth,
            &TrackerConfig::default(),
            "fig3",
            false,
        )
        .unwrap();
        let table = format_ablation_table(&rows);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[0].starts_with("Architecture"));
        assert!(lines[5].starts_with("DA+TM+FBTR+CM"));
        assert!(lines[5].trim_end().ends_with('-'));
    }
}
