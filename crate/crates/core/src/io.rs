//! On-disk session formats.
//!
//! JSONL is the canonical format: one header object on line 1, one frame
//! object per following line. CSV is the flat alternative for spreadsheet
//! tooling. Both round-trip: `parse_session(write_session(s)) == s`
//! field for field. Coordinates are written with Rust's shortest-exact
//! float formatting, so every f64 survives the trip bit-identically.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{Label, Session, SkeletonFrame, JOINT_COUNT};

/// Session file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionFormat {
    Jsonl,
    Csv,
}

impl SessionFormat {
    pub fn extension(self) -> &'static str {
        match self {
            SessionFormat::Jsonl => "jsonl",
            SessionFormat::Csv => "csv",
        }
    }

    /// Infer the format from a file extension; defaults to JSONL.
    pub fn from_path(path: &Path) -> SessionFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => SessionFormat::Csv,
            _ => SessionFormat::Jsonl,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonHeader {
    subject: String,
    trial: String,
    label: Option<String>,
    fps_hint: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonFrame {
    t: u64,
    j: Vec<[f64; 3]>,
    trk: Vec<bool>,
}

fn malformed(line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedRecord {
        line,
        reason: reason.into(),
    }
}

/// Parses a session from text in the given format.
///
/// Frames are returned in file order. Out-of-order timestamps and frames
/// with a joint count other than 20 are rejected with the line they occur on.
pub fn parse_session(text: &str, format: SessionFormat) -> Result<Session> {
    match format {
        SessionFormat::Jsonl => parse_jsonl(text),
        SessionFormat::Csv => parse_csv(text),
    }
}

/// Serializes a session to text in the given format.
pub fn write_session(session: &Session, format: SessionFormat) -> String {
    match format {
        SessionFormat::Jsonl => write_jsonl(session),
        SessionFormat::Csv => write_csv(session),
    }
}

pub fn read_session_file(path: &Path) -> Result<Session> {
    let text = fs::read_to_string(path)?;
    parse_session(&text, SessionFormat::from_path(path))
}

pub fn write_session_file(session: &Session, path: &Path, format: SessionFormat) -> Result<()> {
    fs::write(path, write_session(session, format))?;
    Ok(())
}

fn check_frame(line: usize, t: u64, j: &[[f64; 3]], trk: &[bool], prev: Option<u64>) -> Result<()> {
    if j.len() != JOINT_COUNT {
        return Err(Error::WrongJointCount {
            line,
            expected: JOINT_COUNT,
            got: j.len(),
        });
    }
    if trk.len() != JOINT_COUNT {
        return Err(Error::WrongJointCount {
            line,
            expected: JOINT_COUNT,
            got: trk.len(),
        });
    }
    if let Some(prev) = prev {
        if t <= prev {
            return Err(Error::NonMonotonicTimestamp { line, t, prev });
        }
    }
    Ok(())
}

fn parse_jsonl(text: &str) -> Result<Session> {
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines
        .next()
        .ok_or_else(|| malformed(1, "empty file, expected header object"))?;
    let header: JsonHeader = serde_json::from_str(header_line)
        .map_err(|e| malformed(1, format!("invalid header: {}", e)))?;
    let label = Label::from_str_opt(header.label.as_deref())
        .ok_or_else(|| malformed(1, format!("unknown label {:?}", header.label)))?;

    let mut session = Session::new(header.subject, header.trial, label);
    session.fps_hint = header.fps_hint;

    let mut prev_t = None;
    for (idx, raw) in lines {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let frame: JsonFrame = serde_json::from_str(raw)
            .map_err(|e| malformed(line_no, format!("invalid frame: {}", e)))?;
        check_frame(line_no, frame.t, &frame.j, &frame.trk, prev_t)?;
        prev_t = Some(frame.t);
        session
            .frames
            .push(SkeletonFrame::new(frame.t, frame.j, frame.trk));
    }
    Ok(session)
}

fn write_jsonl(session: &Session) -> String {
    let header = JsonHeader {
        subject: session.subject_id.clone(),
        trial: session.trial_id.clone(),
        label: session.label.as_str().map(str::to_owned),
        fps_hint: session.fps_hint,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for f in &session.frames {
        let frame = JsonFrame {
            t: f.t_ms,
            j: f.positions.clone(),
            trk: f.tracked.clone(),
        };
        out.push_str(&serde_json::to_string(&frame).expect("frame serializes"));
        out.push('\n');
    }
    out
}

fn csv_header_row() -> String {
    let mut row = String::from("t");
    for j in 0..JOINT_COUNT {
        let _ = write!(row, ",j{j}x,j{j}y,j{j}z,trk{j}");
    }
    row
}

fn parse_csv(text: &str) -> Result<Session> {
    let mut lines = text.lines().enumerate();

    let (_, meta) = lines
        .next()
        .ok_or_else(|| malformed(1, "empty file, expected '# subject,trial,label' line"))?;
    let meta = meta
        .strip_prefix('#')
        .ok_or_else(|| malformed(1, "metadata line must start with '#'"))?
        .trim();
    // subject,trial,label with an optional fps_hint as a fourth field.
    let fields: Vec<&str> = meta.split(',').collect();
    if fields.len() < 3 || fields.len() > 4 {
        return Err(malformed(1, "expected 'subject,trial,label[,fps_hint]'"));
    }
    let label = Label::from_str_opt(Some(fields[2]))
        .ok_or_else(|| malformed(1, format!("unknown label {:?}", fields[2])))?;
    let fps_hint = match fields.get(3) {
        None => None,
        Some(s) if s.is_empty() => None,
        Some(s) => Some(
            s.parse::<f64>()
                .map_err(|_| malformed(1, format!("invalid fps_hint {:?}", s)))?,
        ),
    };

    let (_, header_row) = lines
        .next()
        .ok_or_else(|| malformed(2, "missing column header row"))?;
    if header_row.trim() != csv_header_row() {
        return Err(malformed(2, "unexpected column header row"));
    }

    let mut session = Session::new(fields[0], fields[1], label);
    session.fps_hint = fps_hint;

    let mut prev_t = None;
    for (idx, raw) in lines {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split(',').collect();
        if cols.len() != 1 + 4 * JOINT_COUNT {
            // A short row almost always means a truncated joint list.
            let got = cols.len().saturating_sub(1) / 4;
            return Err(Error::WrongJointCount {
                line: line_no,
                expected: JOINT_COUNT,
                got,
            });
        }
        let t: u64 = cols[0]
            .parse()
            .map_err(|_| malformed(line_no, format!("invalid timestamp {:?}", cols[0])))?;
        let mut positions = Vec::with_capacity(JOINT_COUNT);
        let mut tracked = Vec::with_capacity(JOINT_COUNT);
        for j in 0..JOINT_COUNT {
            let base = 1 + 4 * j;
            let mut coord = [0.0; 3];
            for (k, c) in coord.iter_mut().enumerate() {
                *c = cols[base + k].parse::<f64>().map_err(|_| {
                    malformed(line_no, format!("invalid coordinate {:?}", cols[base + k]))
                })?;
            }
            positions.push(coord);
            tracked.push(match cols[base + 3] {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(malformed(line_no, format!("invalid flag {:?}", other))),
            });
        }
        check_frame(line_no, t, &positions, &tracked, prev_t)?;
        prev_t = Some(t);
        session.frames.push(SkeletonFrame::new(t, positions, tracked));
    }
    Ok(session)
}

fn write_csv(session: &Session) -> String {
    let mut out = String::new();
    let label = session.label.as_str().unwrap_or("");
    match session.fps_hint {
        Some(fps) => {
            let _ = writeln!(
                out,
                "# {},{},{},{}",
                session.subject_id, session.trial_id, label, fps
            );
        }
        None => {
            let _ = writeln!(out, "# {},{},{}", session.subject_id, session.trial_id, label);
        }
    }
    out.push_str(&csv_header_row());
    out.push('\n');
    for f in &session.frames {
        let _ = write!(out, "{}", f.t_ms);
        for j in 0..JOINT_COUNT {
            let p = f.positions[j];
            let _ = write!(
                out,
                ",{},{},{},{}",
                p[0],
                p[1],
                p[2],
                if f.tracked[j] { 1 } else { 0 }
            );
        }
        out.push('\n');
    }
    out
}
