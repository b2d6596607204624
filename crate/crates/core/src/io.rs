//! Line-delimited JSON formats.
//!
//! Keypoint stream: an optional header line `{"intrinsics": {fx, fy, cx, cy}}`
//! followed by one frame per line,
//! `{"frame_index": 0, "mode": "pixel_depth" | "camera_3d", "points": [[a, b, c], ...]}`.
//! Pixel/depth rows are `[u, v, depth]` and need the header; camera rows are
//! `[x, y, z]` in meters.
//!
//! Contact sets: `{"grasp_id": .., "contacts": [{"p": [..], "n": [..], "mu": 0.5}]}`,
//! where `mu` may be omitted and filled from a default.

use std::io::{BufRead, Write};

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::force_closure::{ClosureError, ClosureVerdict, Contact};
use crate::kinematics::{deproject, CameraIntrinsics, KeypointFrame, KinematicsError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointMode {
    PixelDepth,
    Camera3d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFrame {
    pub frame_index: u64,
    pub mode: PointMode,
    pub points: Vec<[f64; 3]>,
}

impl RawFrame {
    /// Deprojects pixel rows when needed and validates the frame.
    pub fn to_keypoints(
        &self,
        intrinsics: Option<&CameraIntrinsics>,
    ) -> Result<KeypointFrame, KinematicsError> {
        let points = match self.mode {
            PointMode::Camera3d => self
                .points
                .iter()
                .map(|p| Point3::new(p[0], p[1], p[2]))
                .collect(),
            PointMode::PixelDepth => {
                let k = intrinsics.ok_or_else(|| {
                    KinematicsError::InvalidIntrinsics("pixel_depth frame without intrinsics header".into())
                })?;
                self.points
                    .iter()
                    .map(|p| deproject(p[0], p[1], p[2], k))
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        KeypointFrame::new(self.frame_index, points)
    }

    pub fn from_keypoints(frame: &KeypointFrame) -> Self {
        RawFrame {
            frame_index: frame.frame_index,
            mode: PointMode::Camera3d,
            points: frame.points().iter().map(|p| [p.x, p.y, p.z]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamHeader {
    pub intrinsics: CameraIntrinsics,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeypointStream {
    pub intrinsics: Option<CameraIntrinsics>,
    pub frames: Vec<RawFrame>,
}

fn is_blank(line: &str) -> bool {
    line.trim().is_empty()
}

/// Reads a whole keypoint stream. Blank lines are ignored.
pub fn read_keypoint_stream(reader: impl BufRead) -> Result<KeypointStream, FormatError> {
    let mut stream = KeypointStream::default();
    let mut seen_record = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if is_blank(&line) {
            continue;
        }
        if !seen_record && line.contains("\"intrinsics\"") {
            let header: StreamHeader = serde_json::from_str(&line)
                .map_err(|source| FormatError::Json { line: lineno, source })?;
            header.intrinsics.validate().map_err(|e| FormatError::Invalid {
                line: lineno,
                message: e.to_string(),
            })?;
            stream.intrinsics = Some(header.intrinsics);
            seen_record = true;
            continue;
        }
        seen_record = true;
        let frame: RawFrame = serde_json::from_str(&line)
            .map_err(|source| FormatError::Json { line: lineno, source })?;
        stream.frames.push(frame);
    }
    Ok(stream)
}

pub fn write_keypoint_stream(mut w: impl Write, stream: &KeypointStream) -> Result<(), FormatError> {
    if let Some(k) = stream.intrinsics {
        write_json_line(&mut w, &StreamHeader { intrinsics: k })?;
    }
    for f in &stream.frames {
        write_json_line(&mut w, f)?;
    }
    Ok(())
}

/// Grasp identifiers are echoed back exactly as given.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraspId {
    Int(u64),
    Text(String),
}

impl std::fmt::Display for GraspId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraspId::Int(i) => write!(f, "{i}"),
            GraspId::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactRow {
    pub p: [f64; 3],
    pub n: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSetRecord {
    pub grasp_id: GraspId,
    pub contacts: Vec<ContactRow>,
}

impl ContactSetRecord {
    pub fn to_contacts(&self, default_mu: Option<f64>) -> Result<Vec<Contact>, ClosureError> {
        self.contacts
            .iter()
            .map(|c| {
                let mu = c.mu.or(default_mu).ok_or(ClosureError::MissingFriction)?;
                Contact::new(Vector3::from(c.p), Vector3::from(c.n), mu)
            })
            .collect()
    }

    pub fn from_contacts(grasp_id: GraspId, contacts: &[Contact]) -> Self {
        ContactSetRecord {
            grasp_id,
            contacts: contacts
                .iter()
                .map(|c| ContactRow {
                    p: c.p.into(),
                    n: c.n.into(),
                    mu: Some(c.mu),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub grasp_id: GraspId,
    pub closed: bool,
    pub margin: f64,
    pub rank: usize,
}

impl VerdictRecord {
    pub fn new(grasp_id: GraspId, v: &ClosureVerdict) -> Self {
        VerdictRecord {
            grasp_id,
            closed: v.closed,
            margin: v.margin,
            rank: v.rank,
        }
    }
}

/// Parses every non-blank line as `T`.
pub fn read_json_lines<T: serde::de::DeserializeOwned>(
    reader: impl BufRead,
) -> Result<Vec<T>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if is_blank(&line) {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| FormatError::Json { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn write_json_line<T: Serialize>(mut w: impl Write, value: &T) -> Result<(), FormatError> {
    serde_json::to_writer(&mut w, value).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    Ok(())
}
