//! Biovision Hierarchy (BVH) reader and writer.
//!
//! Offsets and position channels are scaled to meters on read (default scale
//! 0.01, i.e. centimeter files) and scaled back on write, so a clip survives
//! a write/read cycle unchanged.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::Vec3;

pub const DEFAULT_UNIT_SCALE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    pub fn is_position(self) -> bool {
        matches!(
            self,
            Channel::Xposition | Channel::Yposition | Channel::Zposition
        )
    }

    /// Axis index 0..3.
    pub fn axis(self) -> usize {
        match self {
            Channel::Xposition | Channel::Xrotation => 0,
            Channel::Yposition | Channel::Yrotation => 1,
            Channel::Zposition | Channel::Zrotation => 2,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Channel::Xposition => "Xposition",
            Channel::Yposition => "Yposition",
            Channel::Zposition => "Zposition",
            Channel::Xrotation => "Xrotation",
            Channel::Yrotation => "Yrotation",
            Channel::Zrotation => "Zrotation",
        };
        f.write_str(s)
    }
}

impl FromStr for Channel {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "Xposition" => Channel::Xposition,
            "Yposition" => Channel::Yposition,
            "Zposition" => Channel::Zposition,
            "Xrotation" => Channel::Xrotation,
            "Yrotation" => Channel::Yrotation,
            "Zrotation" => Channel::Zrotation,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvhJoint {
    pub name: String,
    /// Meters.
    pub offset: Vec3,
    pub channels: Vec<Channel>,
    pub children: Vec<BvhJoint>,
    pub end_site_offset: Option<Vec3>,
}

impl BvhJoint {
    /// Depth-first (pre-order) traversal, the order channels appear in frame rows.
    pub fn iter(&self) -> impl Iterator<Item = &BvhJoint> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let j = stack.pop()?;
            stack.extend(j.children.iter().rev());
            Some(j)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvhClip {
    pub root: BvhJoint,
    /// Seconds per frame.
    pub frame_time: f64,
    /// One row per frame; position channels in meters, rotations in degrees.
    pub frames: Vec<Vec<f64>>,
    /// File units to meters, used again when writing.
    pub unit_scale: f64,
}

impl BvhClip {
    pub fn channel_count(&self) -> usize {
        self.root.iter().map(|j| j.channels.len()).sum()
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn duration(&self) -> f64 {
        (self.frames.len().saturating_sub(1)) as f64 * self.frame_time
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BvhError {
    #[error("line {line}: missing {section} section")]
    MissingSection { line: usize, section: &'static str },
    #[error("line {line}: expected {expected}, found `{found}`")]
    Unexpected {
        line: usize,
        expected: String,
        found: String,
    },
    #[error("line {line}: unexpected end of input, expected {expected}")]
    UnexpectedEof { line: usize, expected: String },
    #[error("line {line}: `{token}` is not a number")]
    NotANumber { line: usize, token: String },
    #[error("line {line}: unknown channel `{token}`")]
    UnknownChannel { line: usize, token: String },
    #[error("line {line}: joint `{name}` declares {count} channels (expected 0, 3 or 6)")]
    BadChannelCount {
        line: usize,
        name: String,
        count: usize,
    },
    #[error("line {line}: duplicate joint name `{name}`")]
    DuplicateJoint { line: usize, name: String },
    #[error(
        "line {line}: frame row has {found} values but the hierarchy declares {expected} channels"
    )]
    ChannelMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: header declares {expected} frames but {found} rows follow")]
    FrameCountMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: frame time must be positive")]
    BadFrameTime { line: usize },
    #[error("line {line}: clip has no frames")]
    NoFrames { line: usize },
}

struct Tokens<'a> {
    toks: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(lines: &[(usize, &'a str)]) -> Self {
        let toks = lines
            .iter()
            .flat_map(|&(n, l)| l.split_whitespace().map(move |t| (n, t)))
            .collect();
        let last_line = lines.last().map(|l| l.0).unwrap_or(1);
        Tokens {
            toks,
            pos: 0,
            last_line,
        }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.toks.get(self.pos).copied()
    }

    fn next(&mut self, expected: &str) -> Result<(usize, &'a str), BvhError> {
        let t = self.peek().ok_or_else(|| BvhError::UnexpectedEof {
            line: self.last_line,
            expected: expected.into(),
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, keyword: &str) -> Result<usize, BvhError> {
        let (line, t) = self.next(&format!("`{keyword}`"))?;
        if t != keyword {
            return Err(BvhError::Unexpected {
                line,
                expected: format!("`{keyword}`"),
                found: t.into(),
            });
        }
        Ok(line)
    }

    fn number(&mut self) -> Result<f64, BvhError> {
        let (line, t) = self.next("a number")?;
        parse_number(line, t)
    }

    fn vec3(&mut self, scale: f64) -> Result<Vec3, BvhError> {
        Ok(Vec3::new(
            self.number()? * scale,
            self.number()? * scale,
            self.number()? * scale,
        ))
    }
}

fn parse_number(line: usize, t: &str) -> Result<f64, BvhError> {
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(BvhError::NotANumber {
            line,
            token: t.into(),
        }),
    }
}

pub fn parse_bvh(text: &str) -> Result<BvhClip, BvhError> {
    parse_bvh_with_scale(text, DEFAULT_UNIT_SCALE)
}

pub fn parse_bvh_with_scale(text: &str, unit_scale: f64) -> Result<BvhClip, BvhError> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l)).collect();
    let hierarchy_at = lines.iter().position(|(_, l)| l.trim() == "HIERARCHY");
    let motion_at = lines.iter().position(|(_, l)| l.trim() == "MOTION");
    let last = lines.last().map(|l| l.0).unwrap_or(1);
    let h = hierarchy_at.ok_or(BvhError::MissingSection {
        line: 1,
        section: "HIERARCHY",
    })?;
    let m = motion_at.ok_or(BvhError::MissingSection {
        line: last,
        section: "MOTION",
    })?;
    if m < h {
        return Err(BvhError::MissingSection {
            line: lines[m].0,
            section: "HIERARCHY (before MOTION)",
        });
    }

    let mut toks = Tokens::new(&lines[h + 1..m]);
    let mut names = HashSet::new();
    toks.expect("ROOT")?;
    let root = parse_joint(&mut toks, unit_scale, &mut names)?;
    if let Some((line, t)) = toks.peek() {
        return Err(BvhError::Unexpected {
            line,
            expected: "`MOTION`".into(),
            found: t.into(),
        });
    }
    let channel_count: usize = root.iter().map(|j| j.channels.len()).sum();

    let motion = &lines[m + 1..];
    let mut header = Tokens::new(motion);
    let frames_line = header.expect("Frames:")?;
    let declared = header.number()?;
    if declared < 0.0 || declared.fract() != 0.0 {
        return Err(BvhError::NotANumber {
            line: frames_line,
            token: declared.to_string(),
        });
    }
    let declared = declared as usize;
    let ft_line = header.expect("Frame")?;
    header.expect("Time:")?;
    let frame_time = header.number()?;
    if frame_time <= 0.0 {
        return Err(BvhError::BadFrameTime { line: ft_line });
    }

    let position_mask: Vec<bool> = root
        .iter()
        .flat_map(|j| j.channels.iter().map(|c| c.is_position()))
        .collect();
    let rows_start = motion
        .iter()
        .position(|(n, _)| *n == ft_line)
        .map(|i| i + 1)
        .unwrap_or(motion.len());
    let mut frames = Vec::with_capacity(declared);
    for &(line, l) in &motion[rows_start..] {
        if l.trim().is_empty() {
            continue;
        }
        let row = l
            .split_whitespace()
            .map(|t| parse_number(line, t))
            .collect::<Result<Vec<f64>, _>>()?;
        if row.len() != channel_count {
            return Err(BvhError::ChannelMismatch {
                line,
                expected: channel_count,
                found: row.len(),
            });
        }
        let row = row
            .into_iter()
            .zip(&position_mask)
            .map(|(v, &is_pos)| if is_pos { v * unit_scale } else { v })
            .collect();
        frames.push(row);
    }
    if frames.is_empty() {
        return Err(BvhError::NoFrames { line: last });
    }
    if frames.len() != declared {
        return Err(BvhError::FrameCountMismatch {
            line: frames_line,
            expected: declared,
            found: frames.len(),
        });
    }
    Ok(BvhClip {
        root,
        frame_time,
        frames,
        unit_scale,
    })
}

fn parse_joint(
    toks: &mut Tokens<'_>,
    scale: f64,
    names: &mut HashSet<String>,
) -> Result<BvhJoint, BvhError> {
    let (line, name) = toks.next("joint name")?;
    if !names.insert(name.to_string()) {
        return Err(BvhError::DuplicateJoint {
            line,
            name: name.into(),
        });
    }
    toks.expect("{")?;
    toks.expect("OFFSET")?;
    let offset = toks.vec3(scale)?;
    let mut channels = Vec::new();
    let mut children = Vec::new();
    let mut end_site_offset = None;
    loop {
        let (line, t) = toks.next("`}`")?;
        match t {
            "CHANNELS" => {
                let count = toks.number()?;
                let count = count.max(0.0) as usize;
                if !matches!(count, 0 | 3 | 6) {
                    return Err(BvhError::BadChannelCount {
                        line,
                        name: name.into(),
                        count,
                    });
                }
                for _ in 0..count {
                    let (cl, ct) = toks.next("channel name")?;
                    channels.push(ct.parse().map_err(|_| BvhError::UnknownChannel {
                        line: cl,
                        token: ct.into(),
                    })?);
                }
            }
            "JOINT" => children.push(parse_joint(toks, scale, names)?),
            "End" => {
                toks.expect("Site")?;
                toks.expect("{")?;
                toks.expect("OFFSET")?;
                end_site_offset = Some(toks.vec3(scale)?);
                toks.expect("}")?;
            }
            "}" => break,
            other => {
                return Err(BvhError::Unexpected {
                    line,
                    expected: "CHANNELS, JOINT, End Site or `}`".into(),
                    found: other.into(),
                })
            }
        }
    }
    Ok(BvhJoint {
        name: name.into(),
        offset,
        channels,
        children,
        end_site_offset,
    })
}

/// Writes the clip back in file units.
pub fn serialize_bvh(clip: &BvhClip) -> String {
    let scale = clip.unit_scale;
    let mut out = String::from("HIERARCHY\n");
    write_joint(&mut out, &clip.root, 0, true, scale);
    let position_mask: Vec<bool> = clip
        .root
        .iter()
        .flat_map(|j| j.channels.iter().map(|c| c.is_position()))
        .collect();
    let _ = writeln!(
        out,
        "MOTION\nFrames: {}\nFrame Time: {:?}",
        clip.frames.len(),
        clip.frame_time
    );
    for row in &clip.frames {
        let line: Vec<String> = row
            .iter()
            .zip(&position_mask)
            .map(|(&v, &is_pos)| format!("{:?}", if is_pos { v / scale } else { v }))
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn write_joint(out: &mut String, j: &BvhJoint, depth: usize, root: bool, scale: f64) {
    let pad = "\t".repeat(depth);
    let _ = writeln!(
        out,
        "{pad}{} {}",
        if root { "ROOT" } else { "JOINT" },
        j.name
    );
    let _ = writeln!(out, "{pad}{{");
    let _ = writeln!(out, "{pad}\tOFFSET {}", fmt_vec(&j.offset, scale));
    if !j.channels.is_empty() {
        let names: Vec<String> = j.channels.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(
            out,
            "{pad}\tCHANNELS {} {}",
            j.channels.len(),
            names.join(" ")
        );
    }
    for c in &j.children {
        write_joint(out, c, depth + 1, false, scale);
    }
    if let Some(e) = &j.end_site_offset {
        let _ = writeln!(
            out,
            "{pad}\tEnd Site\n{pad}\t{{\n{pad}\t\tOFFSET {}\n{pad}\t}}",
            fmt_vec(e, scale)
        );
    }
    let _ = writeln!(out, "{pad}}}");
}

fn fmt_vec(v: &Vec3, scale: f64) -> String {
    format!("{:?} {:?} {:?}", v.x / scale, v.y / scale, v.z / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "HIERARCHY
ROOT Hips
{
\tOFFSET 0 0 0
\tCHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
}
MOTION
Frames: 1
Frame Time: 0.0333333
0 0 0 0 0 0
";

    const WITH_END_SITE: &str = "HIERARCHY
ROOT Hips
{
  OFFSET 1 2 3
  CHANNELS 3 Zrotation Xrotation Yrotation
  JOINT Spine
  {
    OFFSET 0 10 0
    CHANNELS 3 Zrotation Xrotation Yrotation
    End Site
    {
      OFFSET 0 5 0
    }
  }
}
MOTION
Frames: 2
Frame Time: 0.01
0 0 0 0 0 0
10 20 30 0 0 0
";

    #[test]
    fn parses_minimal_clip() {
        let clip = parse_bvh(MINIMAL).unwrap();
        assert_eq!(clip.frame_time, 0.0333333);
        assert_eq!(clip.root.name, "Hips");
        assert_eq!(clip.root.offset, Vec3::zeros());
        assert_eq!(clip.channel_count(), 6);
        assert_eq!(clip.frames, vec![vec![0.0; 6]]);
    }

    #[test]
    fn end_site_adds_no_channels() {
        let clip = parse_bvh(WITH_END_SITE).unwrap();
        let spine = &clip.root.children[0];
        assert_eq!(spine.end_site_offset, Some(Vec3::new(0.0, 0.05, 0.0)));
        assert_eq!(spine.channels.len(), 3);
        assert_eq!(clip.channel_count(), 6);
        assert!((clip.root.offset - Vec3::new(0.01, 0.02, 0.03)).norm() < 1e-15);
    }

    #[test]
    fn missing_motion_section() {
        let text = MINIMAL.split("MOTION").next().unwrap();
        let err = parse_bvh(text).unwrap_err();
        assert!(matches!(
            err,
            BvhError::MissingSection {
                section: "MOTION",
                ..
            }
        ));
        assert!(err.to_string().contains("MOTION"));
    }

    #[test]
    fn missing_hierarchy_section() {
        let err = parse_bvh(&MINIMAL.replace("HIERARCHY", "")).unwrap_err();
        assert!(matches!(
            err,
            BvhError::MissingSection {
                section: "HIERARCHY",
                ..
            }
        ));
    }

    #[test]
    fn row_width_mismatch_reports_line() {
        let err = parse_bvh(&MINIMAL.replace("0 0 0 0 0 0\n", "0 0 0 0 0\n")).unwrap_err();
        assert_eq!(
            err,
            BvhError::ChannelMismatch {
                line: 10,
                expected: 6,
                found: 5
            }
        );
    }

    #[test]
    fn non_numeric_frame_value() {
        let err = parse_bvh(&MINIMAL.replace("0 0 0 0 0 0\n", "0 0 x 0 0 0\n")).unwrap_err();
        assert_eq!(
            err,
            BvhError::NotANumber {
                line: 10,
                token: "x".into()
            }
        );
    }

    #[test]
    fn duplicate_joint_names() {
        let text = WITH_END_SITE.replace("JOINT Spine", "JOINT Hips");
        let err = parse_bvh(&text).unwrap_err();
        assert_eq!(
            err,
            BvhError::DuplicateJoint {
                line: 6,
                name: "Hips".into()
            }
        );
    }

    #[test]
    fn bad_channel_count() {
        let text = MINIMAL.replace(
            "CHANNELS 6 Xposition Yposition Zposition",
            "CHANNELS 4 Xposition Yposition Zposition",
        );
        assert!(matches!(
            parse_bvh(&text),
            Err(BvhError::BadChannelCount { count: 4, .. })
        ));
    }

    #[test]
    fn frame_count_mismatch() {
        let text = MINIMAL.replace("Frames: 1", "Frames: 2");
        assert!(matches!(
            parse_bvh(&text),
            Err(BvhError::FrameCountMismatch {
                expected: 2,
                found: 1,
                ..
            })
        ));
    }

    #[test]
    fn round_trip_is_fixed_point() {
        for text in [MINIMAL, WITH_END_SITE] {
            let clip = parse_bvh(text).unwrap();
            let again = parse_bvh(&serialize_bvh(&clip)).unwrap();
            assert_eq!(again.frame_time, clip.frame_time);
            assert_eq!(again.root.iter().count(), clip.root.iter().count());
            for (a, b) in clip
                .frames
                .iter()
                .flatten()
                .zip(again.frames.iter().flatten())
            {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn frame_time_keeps_precision() {
        let mut clip = parse_bvh(MINIMAL).unwrap();
        clip.frame_time = 0.008333333;
        let text = serialize_bvh(&clip);
        assert!(text.contains("Frame Time: 0.008333333"));
        assert_eq!(parse_bvh(&text).unwrap().frame_time, 0.008333333);
    }
}
