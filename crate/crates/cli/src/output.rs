//! Comma-separated metric tables with fixed, locale-independent number
//! formatting.

use std::io::Write;
use std::path::{Path, PathBuf};

use humtrack_core::calibration::{ExperimentReport, SceneCalibration};
use humtrack_core::geometry::Vec3;
use humtrack_core::motion::Joint;
use humtrack_core::teleop::TeleopResult;
use humtrack_core::tracking::{TrackingMetrics, TrackingRun, FUSED_SOURCE};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("refusing to write `{0}`: report has no rows")]
    EmptyReport(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl OutputError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        OutputError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Nine significant digits, shortest form, `.` as decimal point.
///
/// Mirrors C's `%.9g`: fixed notation for exponents in [-4, 9), scientific
/// otherwise, trailing zeros removed. Non-finite values print as `NaN`,
/// `Inf` and `-Inf`.
pub fn format_g9(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "Inf".into() } else { "-Inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_g9(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n', '\r']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        Cell::Num(x.unwrap_or(f64::NAN))
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Int(b as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// A header and its data rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(header: &[&'static str]) -> Self {
        CsvTable {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Writes the table; an empty table is an error and leaves no file behind.
pub fn write_metrics_csv(table: &CsvTable, path: &Path) -> Result<(), OutputError> {
    if table.rows.is_empty() {
        return Err(OutputError::EmptyReport(path.to_path_buf()));
    }
    write_bytes(path, table.render().as_bytes())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    let mut f = std::fs::File::create(path).map_err(|e| OutputError::io(path, e))?;
    f.write_all(bytes).map_err(|e| OutputError::io(path, e))
}

fn xyz(p: Option<Vec3>) -> [Cell; 3] {
    match p {
        Some(p) => [p.x.into(), p.y.into(), p.z.into()],
        None => [f64::NAN.into(), f64::NAN.into(), f64::NAN.into()],
    }
}

pub fn calibration_table(report: &ExperimentReport) -> CsvTable {
    let mut t = CsvTable::new(&[
        "radius_m",
        "prop",
        "trial",
        "mean_trans_err_m",
        "mean_rot_err_rad",
    ]);
    for r in &report.rows {
        t.push(vec![
            r.radius.into(),
            r.prop.as_str().into(),
            r.trial.into(),
            r.mean_translation_error.into(),
            r.mean_rotation_error.into(),
        ]);
    }
    t
}

/// Trial means per (radius, prop), in first-appearance order.
pub fn calibration_summary_table(report: &ExperimentReport) -> CsvTable {
    let mut t = CsvTable::new(&[
        "radius_m",
        "prop",
        "trials",
        "mean_trans_err_m",
        "mean_rot_err_rad",
    ]);
    let mut keys: Vec<(f64, &str)> = Vec::new();
    for r in &report.rows {
        if !keys.iter().any(|&(rad, p)| rad == r.radius && p == r.prop) {
            keys.push((r.radius, &r.prop));
        }
    }
    for (radius, prop) in keys {
        let rows: Vec<_> = report
            .rows
            .iter()
            .filter(|r| r.radius == radius && r.prop == prop)
            .collect();
        let n = rows.len() as f64;
        let te = rows.iter().map(|r| r.mean_translation_error).sum::<f64>() / n;
        let re = rows.iter().map(|r| r.mean_rotation_error).sum::<f64>() / n;
        t.push(vec![
            radius.into(),
            prop.into(),
            rows.len().into(),
            te.into(),
            re.into(),
        ]);
    }
    t
}

/// Per-camera result of calibrating a concrete scene.
pub fn scene_calibration_table(run: &SceneCalibration) -> CsvTable {
    let mut t = CsvTable::new(&[
        "camera_id",
        "trans_err_m",
        "rot_err_rad",
        "x",
        "y",
        "z",
        "qw",
        "qx",
        "qy",
        "qz",
    ]);
    let result = run.final_result();
    for (id, err) in &run.errors {
        let pose = result.world_from_camera[id];
        let [qw, qx, qy, qz] = pose.rotation.wxyz();
        let p = pose.translation;
        t.push(vec![
            id.as_str().into(),
            err.translation_error.into(),
            err.rotation_error.into(),
            p.x.into(),
            p.y.into(),
            p.z.into(),
            qw.into(),
            qx.into(),
            qy.into(),
            qz.into(),
        ]);
    }
    t
}

/// One row per frame, source and joint; sources are the cameras in scene
/// order followed by `fused`.
pub fn tracking_frames_table(run: &TrackingRun) -> CsvTable {
    let mut t = CsvTable::new(&[
        "frame", "t_s", "source", "joint", "present", "x", "y", "z", "gt_x", "gt_y", "gt_z", "conf",
    ]);
    for f in &run.frames {
        let mut emit = |source: &str, joint: Joint, est: Option<Vec3>, conf: f64| {
            let mut row: Vec<Cell> = vec![
                f.frame_id.into(),
                f.time.into(),
                source.into(),
                joint.name().into(),
                est.is_some().into(),
            ];
            row.extend(xyz(est));
            row.extend(xyz(f.truth.get(joint)));
            row.push(conf.into());
            t.push(row);
        };
        for (est, det) in f.estimates.iter().zip(&f.detections) {
            for &j in Joint::ALL {
                emit(
                    &est.camera_id,
                    j,
                    est.joints[j.index()].map(|e| e.position),
                    det.confidence(j),
                );
            }
        }
        for &j in Joint::ALL {
            let fj = f.fused.joints[j.index()];
            emit(
                FUSED_SOURCE,
                j,
                fj.map(|e| e.position),
                fj.map_or(0.0, |e| e.confidence),
            );
        }
    }
    t
}

pub fn tracking_summary_table(metrics: &TrackingMetrics) -> CsvTable {
    let mut t = CsvTable::new(&["source", "joint", "rmse_m", "detection_rate", "frames"]);
    for s in &metrics.sources {
        for &j in Joint::ALL {
            let m = s.joints[j.index()];
            t.push(vec![
                s.source.as_str().into(),
                j.name().into(),
                m.rmse.into(),
                m.detection_rate.into(),
                m.frames.into(),
            ]);
        }
    }
    t
}

pub fn teleop_trace_table(result: &TeleopResult) -> CsvTable {
    let mut t = CsvTable::new(&["t_s", "des_x", "des_y", "des_z", "act_x", "act_y", "act_z"]);
    for s in &result.trace.samples {
        let mut row = vec![s.time.into()];
        row.extend(xyz(Some(s.desired)));
        row.extend(xyz(Some(s.actual)));
        t.push(row);
    }
    t
}

/// Reference polyline vertices, `seg` counting from zero.
pub fn teleop_reference_table(result: &TeleopResult) -> CsvTable {
    let mut t = CsvTable::new(&["seg", "x", "y", "z"]);
    for (k, p) in result.trace.reference.points.iter().enumerate() {
        let mut row = vec![k.into()];
        row.extend(xyz(Some(*p)));
        t.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use humtrack_core::calibration::ExperimentRow;

    #[test]
    fn g9_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (2.0 / 3.0 * 1e-7, "6.66666667e-08"),
            (99999999.95, "100000000"),
            (999999999.5, "1e+09"),
            (f64::NAN, "NaN"),
            (f64::NEG_INFINITY, "-Inf"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g9(x), want, "{x}");
        }
    }

    #[test]
    fn nine_digits_round_trip() {
        // Half a unit in the ninth digit bounds the relative error.
        for x in [
            std::f64::consts::PI,
            -1e-12 / 7.0,
            6.02214076e23,
            0.1 + 0.2,
            3.0 / 7.0 * 1e5,
            0.012345678949,
        ] {
            let back: f64 = format_g9(x).parse().unwrap();
            assert!(((back - x) / x).abs() <= 5e-9, "{x} -> {back}");
        }
        for x in [0.0, 0.1, 0.5, 1.0, 2.0, 30.0, 0.25] {
            assert_eq!(format_g9(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn text_cells_are_quoted_when_needed() {
        assert_eq!(Cell::from("a,b").render(), "\"a,b\"");
        assert_eq!(Cell::from("say \"hi\"").render(), "\"say \"\"hi\"\"\"");
        assert_eq!(Cell::from("plain").render(), "plain");
    }

    fn report(n: usize) -> ExperimentReport {
        ExperimentReport {
            rows: (0..n)
                .map(|k| ExperimentRow {
                    radius: 2.0,
                    prop: "cluster8".into(),
                    trial: k,
                    mean_translation_error: 0.01 * (k + 1) as f64 / 3.0,
                    mean_rotation_error: 1e-4 / 7.0,
                })
                .collect(),
        }
    }

    #[test]
    fn calibration_csv_shape_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("calibration.csv");
        let rep = report(2);
        write_metrics_csv(&calibration_table(&rep), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[0],
            "radius_m,prop,trial,mean_trans_err_m,mean_rot_err_rad"
        );
        for (line, row) in lines[1..].iter().zip(&rep.rows) {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f[1], "cluster8");
            let t: f64 = f[3].parse().unwrap();
            let r: f64 = f[4].parse().unwrap();
            assert_eq!(f[0].parse::<f64>().unwrap(), row.radius);
            assert!((t - row.mean_translation_error).abs() <= 1e-9);
            assert!((r - row.mean_rotation_error).abs() <= 1e-9);
        }
        let summary = calibration_summary_table(&rep);
        assert_eq!(summary.rows.len(), 1);
        assert_eq!(summary.rows[0][2], Cell::Int(2));
    }

    #[test]
    fn empty_report_leaves_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("calibration.csv");
        assert!(matches!(
            write_metrics_csv(&calibration_table(&report(0)), &path),
            Err(OutputError::EmptyReport(_))
        ));
        assert!(!path.exists());
    }
}
