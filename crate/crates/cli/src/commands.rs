use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::Serialize;

use graspmap_core::dataset::{
    annotate_frame, dataset_stats, grasp_l1_error, keypoint_l1, read_records, split_dataset,
    AnnotateOptions, DatasetManifest, L1Weights, ObjectMeta, SplitRatio, SplitWarning,
};
use graspmap_core::force_closure::{contacts_force_closure, Contact};
use graspmap_core::io::{
    read_json_lines, read_keypoint_stream, ContactSetRecord, GraspId, KeypointStream,
    VerdictRecord,
};
use graspmap_core::kinematics::{extract_angles, HandSkeletonLayout, HumanHandAngles};
use graspmap_core::profile::HandProfile;
use graspmap_core::retarget::{fit_mapping, CalibrationSample, CalibrationSet, RetargetError};
use graspmap_core::RobotHandAngles;

use crate::formats::{ActuatorsLine, AnglesLine, FitLine, JointsLine, KeypointEvalLine, SplitLine};
use crate::{
    ActuateArgs, AnglesArgs, AnnotateArgs, Command, EvalArgs, FcCheckArgs, Failure, FitMapArgs,
    IoArgs, ResultExt, RetargetArgs, SplitArgs, StatsArgs,
};

pub(crate) fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Angles(a) => angles(a),
        Command::Retarget(a) => retarget(a),
        Command::FitMap(a) => fit_map(a),
        Command::Actuate(a) => actuate(a),
        Command::FcCheck(a) => fc_check(a),
        Command::Annotate(a) => annotate(a),
        Command::Split(a) => split(a),
        Command::Eval(a) => eval(a),
        Command::Stats(a) => stats(a),
    }
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>, Failure> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .input()?;
    Ok(Box::new(BufReader::new(f)))
}

fn open_output(io: &IoArgs) -> Result<Box<dyn Write>, Failure> {
    match &io.output {
        Some(p) => {
            let f = File::create(p)
                .with_context(|| format!("creating {}", p.display()))
                .input()?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn write_lines<T: Serialize>(io: &IoArgs, lines: &[T]) -> Result<(), Failure> {
    let mut out = open_output(io)?;
    for line in lines {
        serde_json::to_writer(&mut out, line)
            .map_err(io::Error::from)
            .and_then(|_| out.write_all(b"\n"))
            .context("writing output")
            .input()?;
    }
    out.flush().context("writing output").input()
}

fn pool(jobs: u16) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs as usize)
        .build()
        .context("starting worker threads")
        .input()
}

/// Maps `f` over `items` on `jobs` threads, keeping input order.
fn ordered_map<T: Sync, R: Send>(
    jobs: u16,
    items: &[T],
    f: impl Fn(&T) -> R + Sync + Send,
) -> Result<Vec<R>, Failure> {
    if jobs <= 1 {
        return Ok(items.iter().map(f).collect());
    }
    Ok(pool(jobs)?.install(|| items.par_iter().map(f).collect()))
}

fn read_stream(path: &Path) -> Result<KeypointStream, Failure> {
    read_keypoint_stream(open_input(path)?)
        .with_context(|| format!("reading {}", path.display()))
        .input()
}

fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, Failure> {
    read_json_lines(open_input(path)?)
        .with_context(|| format!("reading {}", path.display()))
        .input()
}

fn load_profile(path: &Path) -> Result<HandProfile, Failure> {
    HandProfile::load(path).input()
}

fn angles(a: AnglesArgs) -> Result<(), Failure> {
    let stream = read_stream(&a.io.input)?;
    let layout = HandSkeletonLayout::default();
    let k = stream.intrinsics;
    let results = ordered_map(a.jobs.jobs, &stream.frames, |raw| {
        let frame = raw.to_keypoints(k.as_ref())?;
        extract_angles(&frame, &layout)
    })?;
    let mut lines = Vec::new();
    for (raw, r) in stream.frames.iter().zip(results) {
        match r {
            Ok(h) => lines.push(AnglesLine {
                frame_index: raw.frame_index,
                angles: h.to_vec(),
            }),
            Err(e) => eprintln!("frame {}: skipped: {e}", raw.frame_index),
        }
    }
    write_lines(&a.io, &lines)
}

fn retarget(a: RetargetArgs) -> Result<(), Failure> {
    let profile = load_profile(&a.profile)?;
    let input: Vec<AnglesLine> = read_lines(&a.io.input)?;
    let dims = profile.mapping.human_dims();
    let results = ordered_map(a.jobs.jobs, &input, |line| {
        let h = HumanHandAngles::from_slice(&line.angles, dims).ok_or_else(|| {
            anyhow!(
                "frame {}: {} angles, profile expects {}",
                line.frame_index,
                line.angles.len(),
                dims.iter().sum::<usize>()
            )
        })?;
        let r = profile.retarget(&h)?;
        Ok::<_, anyhow::Error>(JointsLine {
            frame_index: line.frame_index,
            joints: r.clamped.angles.0,
            saturated: r.clamped.saturated,
        })
    })?;
    let lines = results.into_iter().collect::<Result<Vec<_>, _>>().input()?;
    for l in lines.iter().filter(|l| !l.saturated.is_empty()) {
        eprintln!("frame {}: joints {:?} clamped to limits", l.frame_index, l.saturated);
    }
    write_lines(&a.io, &lines)
}

fn fit_map(a: FitMapArgs) -> Result<(), Failure> {
    let samples: Vec<CalibrationSample> = read_lines(&a.io.input)?;
    let set = CalibrationSet::new(samples).input()?;
    let fit = match fit_mapping(&set, a.ridge) {
        Ok(f) => f,
        Err(e @ RetargetError::RankDeficient { .. }) => return Err(e).numerical(),
        Err(e) => return Err(e).input(),
    };
    let gains = (0..fit.gains.nrows())
        .map(|i| fit.gains.row(i).iter().copied().collect())
        .collect();
    eprintln!("fit error {:.6} rad over {} samples", fit.error, set.len());
    write_lines(
        &a.io,
        &[FitLine {
            gains,
            error: fit.error,
            sample_residuals: fit.sample_residuals,
        }],
    )
}

fn actuate(a: ActuateArgs) -> Result<(), Failure> {
    let profile = load_profile(&a.profile)?;
    let input: Vec<JointsLine> = read_lines(&a.io.input)?;
    let results = ordered_map(a.jobs.jobs, &input, |line| {
        let cmd = profile
            .actuate(&RobotHandAngles(line.joints.clone()))
            .with_context(|| format!("frame {}", line.frame_index))?;
        Ok::<_, anyhow::Error>(ActuatorsLine {
            frame_index: line.frame_index,
            u: cmd.u,
            saturated: cmd.saturated,
            residual: cmd.residual,
            inconsistent: cmd.inconsistent,
        })
    })?;
    let lines = results.into_iter().collect::<Result<Vec<_>, _>>().input()?;
    for l in lines.iter().filter(|l| l.inconsistent) {
        eprintln!(
            "frame {}: joint targets outside the coupling range (residual {:.4} rad)",
            l.frame_index, l.residual
        );
    }
    write_lines(&a.io, &lines)
}

fn fc_check(a: FcCheckArgs) -> Result<(), Failure> {
    let input: Vec<ContactSetRecord> = read_lines(&a.io.input)?;
    let c = &a.closure;
    let results = ordered_map(a.jobs.jobs, &input, |rec| {
        let contacts = rec
            .to_contacts(c.mu)
            .with_context(|| format!("grasp {}", rec.grasp_id))?;
        let v = contacts_force_closure(&contacts, c.edges, c.tol)
            .with_context(|| format!("grasp {}", rec.grasp_id))?;
        Ok::<_, anyhow::Error>(VerdictRecord::new(rec.grasp_id.clone(), &v))
    })?;
    let lines = results.into_iter().collect::<Result<Vec<_>, _>>().input()?;
    write_lines(&a.io, &lines)
}

fn frame_key(id: &GraspId) -> Option<u64> {
    match id {
        GraspId::Int(i) => Some(*i),
        GraspId::Text(s) => s.parse().ok(),
    }
}

fn annotate(a: AnnotateArgs) -> Result<(), Failure> {
    let profile = load_profile(&a.profile)?;
    if let Some(path) = &a.manifest {
        let m = DatasetManifest::load(path).input()?;
        match m.category_of(&a.object) {
            Some(c) if c == a.category => {}
            Some(c) => {
                return Err(anyhow!("object '{}' is '{c}' in the manifest, not '{}'", a.object, a.category))
                    .input()
            }
            None => return Err(anyhow!("object '{}' is not in the manifest", a.object)).input(),
        }
    }
    let mut contacts: HashMap<u64, Vec<Contact>> = HashMap::new();
    if let Some(path) = &a.contacts {
        for rec in read_lines::<ContactSetRecord>(path)? {
            let key = frame_key(&rec.grasp_id)
                .ok_or_else(|| anyhow!("grasp_id '{}' is not a frame index", rec.grasp_id))
                .input()?;
            let set = rec
                .to_contacts(a.closure.mu)
                .with_context(|| format!("grasp {}", rec.grasp_id))
                .input()?;
            if contacts.insert(key, set).is_some() {
                return Err(anyhow!("duplicate contact set for frame {key}")).input();
            }
        }
    }
    let stream = read_stream(&a.io.input)?;
    let object = ObjectMeta {
        object_id: a.object.clone(),
        category: a.category.clone(),
    };
    let opts = AnnotateOptions {
        edges: a.closure.edges,
        tol: a.closure.tol,
        ..Default::default()
    };
    let k = stream.intrinsics;
    let results = ordered_map(a.jobs.jobs, &stream.frames, |raw| {
        let c = contacts.get(&raw.frame_index).map(Vec::as_slice);
        annotate_frame(raw, k.as_ref(), &profile, &object, c, &opts)
    })?;

    let mut records = Vec::with_capacity(results.len());
    let mut skipped = 0;
    for (raw, r) in stream.frames.iter().zip(results) {
        match r {
            Ok(f) => {
                if !f.saturated_joints.is_empty() {
                    eprintln!("frame {}: joints {:?} clamped to limits", raw.frame_index, f.saturated_joints);
                }
                if f.actuators.inconsistent {
                    eprintln!(
                        "frame {}: joint targets outside the coupling range (residual {:.4} rad)",
                        raw.frame_index, f.actuators.residual
                    );
                }
                records.push(f.record);
            }
            Err(reason) => {
                skipped += 1;
                eprintln!("frame {}: skipped: {reason}", raw.frame_index);
            }
        }
    }
    eprintln!(
        "annotate: {} frames, {} records, {} skipped",
        stream.frames.len(),
        records.len(),
        skipped
    );
    write_lines(&a.io, &records)
}

fn split(a: SplitArgs) -> Result<(), Failure> {
    let manifest = DatasetManifest::load(&a.io.input).input()?;
    let ratio = match &a.ratio {
        Some(r) => SplitRatio::parse(r).input()?,
        None => manifest.split_ratio().input()?,
    };
    let s = split_dataset(&manifest, a.seed, ratio).input()?;
    for w in &s.warnings {
        let SplitWarning::SmallCategory { category, objects } = w;
        eprintln!("category '{category}' ({objects} objects) has an empty train or test side");
    }
    write_lines(
        &a.io,
        &[SplitLine {
            seed: a.seed,
            train: s.train,
            test: s.test,
        }],
    )
}

fn eval(a: EvalArgs) -> Result<(), Failure> {
    let weights = L1Weights::parse(&a.lambda)
        .ok_or_else(|| anyhow!("--lambda '{}' is not three weights r,t,j >= 0", a.lambda))
        .input()?;
    if a.keypoints {
        return eval_keypoints(&a);
    }
    let read = |path: &Path| -> Result<_, Failure> {
        let set = read_records(open_input(path)?)
            .with_context(|| format!("reading {}", path.display()))
            .input()?;
        if let Some((line, reason)) = set.rejected.first() {
            return Err(anyhow!("{} line {line}: {reason}", path.display())).input();
        }
        for line in &set.renormalized {
            eprintln!("{} line {line}: quaternion renormalized", path.display());
        }
        Ok(set.records)
    };
    let pred = read(&a.io.input)?;
    let truth = read(&a.truth)?;
    if pred.len() != truth.len() {
        return Err(anyhow!("{} predictions but {} references", pred.len(), truth.len())).input();
    }
    let reports = pred
        .iter()
        .zip(&truth)
        .enumerate()
        .map(|(i, (p, t))| grasp_l1_error(p, t, weights).with_context(|| format!("record {}", i + 1)))
        .collect::<Result<Vec<_>, _>>()
        .input()?;
    if !reports.is_empty() {
        let mean = reports.iter().map(|r| r.aggregate).sum::<f64>() / reports.len() as f64;
        eprintln!("eval: {} pairs, mean aggregate {mean:.6}", reports.len());
    }
    write_lines(&a.io, &reports)
}

fn eval_keypoints(a: &EvalArgs) -> Result<(), Failure> {
    let pred = read_stream(&a.io.input)?;
    let truth = read_stream(&a.truth)?;
    if pred.frames.len() != truth.frames.len() {
        return Err(anyhow!(
            "{} predicted frames but {} reference frames",
            pred.frames.len(),
            truth.frames.len()
        ))
        .input();
    }
    let mut lines = Vec::with_capacity(pred.frames.len());
    for (p, t) in pred.frames.iter().zip(&truth.frames) {
        let to_xyz = |s: &KeypointStream, f: &graspmap_core::io::RawFrame| -> Result<Vec<[f64; 3]>, Failure> {
            let frame = f
                .to_keypoints(s.intrinsics.as_ref())
                .with_context(|| format!("frame {}", f.frame_index))
                .input()?;
            Ok(frame.points().iter().map(|q| [q.x, q.y, q.z]).collect())
        };
        let l1 = keypoint_l1(&to_xyz(&pred, p)?, &to_xyz(&truth, t)?)
            .ok_or_else(|| anyhow!("frame {}: point counts differ", p.frame_index))
            .input()?;
        lines.push(KeypointEvalLine {
            frame_index: p.frame_index,
            keypoint_l1: l1,
        });
    }
    write_lines(&a.io, &lines)
}

fn stats(a: StatsArgs) -> Result<(), Failure> {
    let manifest = DatasetManifest::load(&a.manifest).input()?;
    let set = read_records(open_input(&a.io.input)?)
        .with_context(|| format!("reading {}", a.io.input.display()))
        .input()?;
    for (line, reason) in &set.rejected {
        eprintln!("line {line}: {reason}");
    }
    let s = dataset_stats(&set.records, set.rejected.len(), &manifest);
    write_lines(&a.io, &[s])
}
