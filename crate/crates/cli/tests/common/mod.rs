#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use graspmap_core::io::{write_keypoint_stream, KeypointStream, RawFrame};
use rand::Rng;

#[path = "../../../core/tests/support/mod.rs"]
pub mod support;

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn graspmap(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_graspmap"))
        .args(args)
        .output()
        .expect("spawn graspmap");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn profile(name: &str) -> String {
    workspace_root()
        .join(format!("profiles/{name}.toml"))
        .display()
        .to_string()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Synthetic hands placed 0.5 m in front of the camera. Every `broken_every`-th
/// frame (if nonzero) gets two coincident keypoints and cannot be processed.
pub fn synthetic_stream(rng: &mut impl Rng, frames: usize, broken_every: usize) -> KeypointStream {
    let frames = (0..frames)
        .map(|i| {
            let (frame, _) = support::hands::random_hand(rng);
            let mut raw = RawFrame::from_keypoints(&frame);
            raw.frame_index = i as u64;
            for p in &mut raw.points {
                p[2] += 0.5;
            }
            if broken_every > 0 && i % broken_every == broken_every - 1 {
                raw.points[7] = raw.points[6];
            }
            raw
        })
        .collect();
    KeypointStream {
        intrinsics: None,
        frames,
    }
}

pub fn write_stream(path: &Path, stream: &KeypointStream) {
    let mut buf = Vec::new();
    write_keypoint_stream(&mut buf, stream).unwrap();
    std::fs::write(path, buf).unwrap();
}

pub const TETRAHEDRON_CONTACTS: &str = r#"{"grasp_id":1,"contacts":[{"p":[0.5773502691896258,0.5773502691896258,0.5773502691896258],"n":[-0.5773502691896258,-0.5773502691896258,-0.5773502691896258]},{"p":[0.5773502691896258,-0.5773502691896258,-0.5773502691896258],"n":[-0.5773502691896258,0.5773502691896258,0.5773502691896258]},{"p":[-0.5773502691896258,0.5773502691896258,-0.5773502691896258],"n":[0.5773502691896258,-0.5773502691896258,0.5773502691896258]},{"p":[-0.5773502691896258,-0.5773502691896258,0.5773502691896258],"n":[0.5773502691896258,0.5773502691896258,-0.5773502691896258]}]}"#;
