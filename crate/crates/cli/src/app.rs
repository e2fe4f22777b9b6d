//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use humtrack_core::calibration::{
    default_anchor, run_calibration_experiment, run_scene_calibration, PropWorkspace, RING_HEIGHT,
};
use humtrack_core::camera::preset_table;
use humtrack_core::geometry::{compose, Vec3};
use humtrack_core::motion::synth::vico_duration;
use humtrack_core::motion::SynthKind;
use humtrack_core::rng::derive_seed;
use humtrack_core::scene::{ActorMotion, SceneConfig};
use humtrack_core::teleop::{run_teleop_experiment, teleop_camera, TeleopConfig, TeleopError};
use humtrack_core::tracking::run_tracking_experiment;
use thiserror::Error;

use crate::config::{load_config, ConfigError, LoadedConfig};
use crate::dataset::{export_dataset, DatasetError, SNAPSHOT_FILE};
use crate::manifest::RunRecorder;
use crate::output::{
    calibration_summary_table, calibration_table, format_g9, scene_calibration_table,
    teleop_reference_table, teleop_trace_table, tracking_frames_table, tracking_summary_table,
    Cell, CsvTable, OutputError,
};

pub const DEFAULT_OUT: &str = "results";

#[derive(Debug, Parser)]
#[command(
    name = "humtrack",
    version,
    about = "Multi-camera human tracking simulator"
)]
pub struct Cli {
    /// Scene configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory [default: results].
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibration radius sweep, or the scene's own cameras with `[calibration] scene = true`.
    Calibrate,
    /// Detect, lift and fuse the actor in every camera; score against ground truth.
    Track,
    /// Wrist-driven teleoperation of the writing task at each camera distance.
    Teleop,
    /// Export per-frame annotations.
    Dataset {
        /// Also write a 16-bit PGM depth raster per camera per frame.
        #[arg(long)]
        full_depth: bool,
    },
    /// Print the scene summary and the camera preset table.
    Info,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Calibrate => "calibrate",
            Command::Track => "track",
            Command::Teleop => "teleop",
            Command::Dataset { .. } => "dataset",
            Command::Info => "info",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<OutputError> for CliError {
    fn from(e: OutputError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn runtime(context: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{context}: {e}"))
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

struct Context {
    loaded: Option<LoadedConfig>,
    seed: u64,
}

impl Context {
    fn require(&self, command: &str) -> Result<&LoadedConfig, CliError> {
        self.loaded
            .as_ref()
            .ok_or_else(|| CliError::Usage(format!("`{command}` needs --config <PATH>")))
    }

    fn config_text(&self) -> Option<&str> {
        self.loaded.as_ref().map(|l| l.text.as_str())
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let loaded = cli
        .config
        .as_deref()
        .map(|p| load_config(p, cli.seed))
        .transpose()?;
    let seed = cli
        .seed
        .or(loaded.as_ref().map(|l| l.scene.master_seed))
        .unwrap_or(0);
    let ctx = Context { loaded, seed };
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let name = cli.command.name();

    if let Command::Info = cli.command {
        let text = info_text(ctx.loaded.as_ref().map(|l| &l.scene));
        write_stdout(stdout, &text)?;
        if let Some(dir) = &cli.out {
            let mut rec = start(dir, name, &ctx)?;
            rec.write("info.txt", text.as_bytes())?;
            rec.finish()?;
        }
        return Ok(());
    }

    if matches!(cli.command, Command::Track | Command::Dataset { .. }) {
        ctx.require(name)?;
    }
    let mut rec = start(&out_dir, name, &ctx)?;
    let summary = match &cli.command {
        Command::Calibrate => calibrate(&ctx, &mut rec)?,
        Command::Track => track(&ctx, &mut rec)?,
        Command::Teleop => teleop(&ctx, &mut rec)?,
        Command::Dataset { full_depth } => dataset(&ctx, &mut rec, *full_depth)?,
        Command::Info => unreachable!("handled above"),
    };
    let manifest = rec.finish()?;
    let mut text = summary;
    let _ = writeln!(
        text,
        "wrote {} files and manifest.json to {}",
        manifest.outputs.len(),
        out_dir.display()
    );
    write_stdout(stdout, &text)
}

fn write_stdout(stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| runtime("stdout", e))
}

fn start(dir: &Path, name: &str, ctx: &Context) -> Result<RunRecorder, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| runtime(&dir.display().to_string(), e))?;
    Ok(RunRecorder::start(dir, name, ctx.config_text(), ctx.seed))
}

fn write_table(rec: &mut RunRecorder, rel: &str, table: &CsvTable) -> Result<(), CliError> {
    if table.rows.is_empty() {
        return Err(OutputError::EmptyReport(rec.path(rel)).into());
    }
    rec.write(rel, table.render().as_bytes())?;
    Ok(())
}

fn write_snapshot(ctx: &Context, rec: &mut RunRecorder) -> Result<(), CliError> {
    if let Some(l) = &ctx.loaded {
        rec.write(SNAPSHOT_FILE, l.file.to_toml().as_bytes())?;
    }
    Ok(())
}

fn calibrate(ctx: &Context, rec: &mut RunRecorder) -> Result<String, CliError> {
    let spec = ctx
        .loaded
        .as_ref()
        .map(|l| l.file.calibration_spec())
        .unwrap_or_default();
    let anchor = ctx
        .loaded
        .as_ref()
        .map_or_else(default_anchor, |l| l.scene.anchor.clone());
    let cfg = spec.experiment(ctx.seed, &anchor)?;
    let mut text = String::new();
    if spec.scene {
        let loaded = ctx.require("calibrate")?;
        let workspace = PropWorkspace::around(Vec3::new(0.0, 0.0, RING_HEIGHT));
        let run = run_scene_calibration(&loaded.scene, &workspace, spec.frames, spec.refine)
            .map_err(|e| runtime("scene calibration", e))?;
        write_table(rec, "calibration_scene.csv", &scene_calibration_table(&run))?;
        let mut jsonl = String::new();
        for o in &run.observations {
            jsonl.push_str(&serde_json::to_string(o).expect("observation serializes"));
            jsonl.push('\n');
        }
        rec.write("observations.jsonl", jsonl.as_bytes())?;
        write_snapshot(ctx, rec)?;
        for (id, e) in &run.errors {
            let _ = writeln!(
                text,
                "{id}: {} m, {} rad",
                format_g9(e.translation_error),
                format_g9(e.rotation_error)
            );
        }
    } else {
        let report = run_calibration_experiment(&cfg).map_err(|e| runtime("calibration", e))?;
        write_table(rec, "calibration.csv", &calibration_table(&report))?;
        let summary = calibration_summary_table(&report);
        write_table(rec, "calibration_summary.csv", &summary)?;
        text.push_str(&summary.render());
    }
    Ok(text)
}

fn track(ctx: &Context, rec: &mut RunRecorder) -> Result<String, CliError> {
    let scene = &ctx.require("track")?.scene;
    let run = run_tracking_experiment(scene).map_err(|e| runtime("tracking", e))?;
    write_table(rec, "tracking_frames.csv", &tracking_frames_table(&run))?;
    write_table(
        rec,
        "tracking_summary.csv",
        &tracking_summary_table(&run.metrics),
    )?;
    write_snapshot(ctx, rec)?;
    let mut text = String::from("source,mean_rmse_m,mean_detection_rate\n");
    for s in &run.metrics.sources {
        let rmse: Vec<f64> = s.joints.iter().filter_map(|m| m.rmse).collect();
        let rate: Vec<f64> = s.joints.iter().filter_map(|m| m.detection_rate).collect();
        let mean = |v: &[f64]| {
            if v.is_empty() {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        let _ = writeln!(
            text,
            "{},{},{}",
            s.source,
            format_g9(mean(&rmse)),
            format_g9(mean(&rate))
        );
    }
    Ok(text)
}

/// Base teleop settings from the scene, which must use the writing motion.
fn teleop_base(scene: Option<&SceneConfig>) -> Result<TeleopConfig, CliError> {
    let mut cfg = TeleopConfig::default();
    if let Some(scene) = scene {
        if scene.actor.motion != ActorMotion::Synth(SynthKind::WriteVico) {
            return Err(ConfigError::Invalid {
                field: "actor.synth".into(),
                message: "teleop needs `write_vico` motion".into(),
            }
            .into());
        }
        cfg.world_from_root = scene.actor.world_from_root;
        cfg.detector = scene.detector;
        cfg.capsule_radii = scene.capsule_radii.clone();
        cfg.frame_rate = scene.frame_rate;
    }
    Ok(cfg)
}

fn teleop(ctx: &Context, rec: &mut RunRecorder) -> Result<String, CliError> {
    let spec = ctx
        .loaded
        .as_ref()
        .map(|l| l.file.teleop_spec())
        .unwrap_or_default();
    spec.validate()?;
    let mut base = teleop_base(ctx.loaded.as_ref().map(|l| &l.scene))?;
    base.params = spec.gains;
    base.dropout = spec.dropout;
    base.scale = spec.scale;
    base.ee_initial = Vec3::new(spec.ee_initial[0], spec.ee_initial[1], spec.ee_initial[2]);
    base.control_rate = spec.control_rate;
    base.duration = spec.duration.unwrap_or_else(vico_duration);

    let mut summary = CsvTable::new(&[
        "distance_m",
        "trial",
        "status",
        "path_rmse_m",
        "dropouts",
        "success",
    ]);
    let mut reference_written = false;
    for trial in 0..spec.trials {
        for &distance in &spec.distances {
            let mut cfg = base.clone();
            let cam = teleop_camera(distance, spec.preset);
            let pose = compose(&base.world_from_root, &cam.world_from_camera);
            cfg.camera = cam.with_pose(pose);
            cfg.seed = derive_seed(ctx.seed, "teleop_trial", &[trial as u64]);
            match run_teleop_experiment(&cfg) {
                Ok(result) => {
                    if trial == 0 {
                        write_table(
                            rec,
                            &format!("teleop_trace_{}m.csv", format_g9(distance)),
                            &teleop_trace_table(&result),
                        )?;
                        if !reference_written {
                            write_table(
                                rec,
                                "teleop_reference.csv",
                                &teleop_reference_table(&result),
                            )?;
                            reference_written = true;
                        }
                    }
                    summary.push(vec![
                        distance.into(),
                        trial.into(),
                        "ok".into(),
                        result.path_rmse.into(),
                        result.dropouts.into(),
                        result.success.into(),
                    ]);
                }
                Err(e @ (TeleopError::Framing | TeleopError::WristLost(_))) => {
                    let status = if matches!(e, TeleopError::Framing) {
                        "framing"
                    } else {
                        "wrist_lost"
                    };
                    summary.push(vec![
                        distance.into(),
                        trial.into(),
                        status.into(),
                        f64::NAN.into(),
                        Cell::Int(0),
                        false.into(),
                    ]);
                }
                Err(e) => return Err(runtime("teleop", e)),
            }
        }
    }
    write_table(rec, "teleop_summary.csv", &summary)?;
    write_snapshot(ctx, rec)?;
    Ok(summary.render())
}

fn dataset(ctx: &Context, rec: &mut RunRecorder, full_depth: bool) -> Result<String, CliError> {
    let loaded = ctx.require("dataset")?;
    let n = export_dataset(&loaded.scene, &loaded.file.to_toml(), rec, full_depth)?;
    Ok(format!("exported {n} records\n"))
}

/// Human-readable scene description followed by the preset table.
pub fn info_text(scene: Option<&SceneConfig>) -> String {
    let mut s = String::new();
    if let Some(scene) = scene {
        let motion = match &scene.actor.motion {
            ActorMotion::Synth(kind) => format!("synthetic {}", serde_name(kind)),
            ActorMotion::Clip { path, clip, .. } => {
                format!("bvh {} ({} frames)", path.display(), clip.frame_count())
            }
        };
        let _ = writeln!(s, "seed: {}", scene.master_seed);
        let _ = writeln!(
            s,
            "frames: {} at {} Hz over {} s",
            scene.frame_count(),
            format_g9(scene.frame_rate),
            format_g9(scene.duration)
        );
        let _ = writeln!(s, "actor: {motion}");
        let _ = writeln!(s, "prop: {}", scene.prop.name);
        let _ = writeln!(s, "cameras: {}", scene.cameras.len());
        for c in &scene.cameras {
            let p = c.center();
            let i = c.intrinsics;
            let _ = writeln!(
                s,
                "  {}: {}x{} fx {} at ({}, {}, {})",
                c.id,
                i.width,
                i.height,
                format_g9(i.fx),
                format_g9(p.x),
                format_g9(p.y),
                format_g9(p.z)
            );
        }
        if !scene.appearance.is_empty() {
            let labels: Vec<String> = scene
                .appearance
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            let _ = writeln!(s, "appearance: {}", labels.join(", "));
        }
        s.push('\n');
    }
    s.push_str(&preset_table());
    s
}

fn serde_name<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}
