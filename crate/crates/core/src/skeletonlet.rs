//! Framewise kinematic-guided offset features.
//!
//! Nine feature families are extracted per frame. Families 0..5 stack the
//! τ-interval motion of three joints of one body part (head/neck/spine, the
//! two arms, the two legs). Families 5..9 stack intraframe offsets from a
//! basic joint to joints likely to be far from it. Families 0..8 live in
//! ℝ⁹, the last one in ℝ⁶, so one frame contributes 78 values.

use crate::error::{Error, Result};
use crate::skeleton::{ActionSequence, Joint};

pub const FAMILY_COUNT: usize = 9;
pub const INTERFRAME_FAMILIES: usize = 5;
pub const FAMILY_DIMS: [usize; FAMILY_COUNT] = [9, 9, 9, 9, 9, 9, 9, 9, 6];
/// Sum of all family dimensions.
pub const FEATURE_DIM_TOTAL: usize = 78;
pub const DEFAULT_TAU: usize = 2;

use Joint::*;

const INTERFRAME: [[Joint; 3]; INTERFRAME_FAMILIES] = [
    [Head, Neck, Spine],
    [LeftShoulder, LeftElbow, LeftHand],
    [RightShoulder, RightElbow, RightHand],
    [LeftHip, LeftKnee, LeftFoot],
    [RightHip, RightKnee, RightFoot],
];

const INTRAFRAME: [(Joint, &[Joint]); FAMILY_COUNT - INTERFRAME_FAMILIES] = [
    (Spine, &[Head, LeftHand, RightHand]),
    (RightHip, &[Head, LeftHand, LeftFoot]),
    (LeftHip, &[Head, RightHand, RightFoot]),
    (Head, &[LeftHand, RightHand]),
];

pub fn is_interframe(family: usize) -> bool {
    family < INTERFRAME_FAMILIES
}

/// One feature vector of one family at one frame. `family` and `frame` are
/// zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetFeature {
    pub family: usize,
    pub frame: usize,
    pub values: Vec<f64>,
}

/// All features of one family for one sequence, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFamily {
    dim: usize,
    frames: Vec<usize>,
    values: Vec<f64>,
}

impl FeatureFamily {
    fn new(dim: usize) -> Self {
        FeatureFamily {
            dim,
            frames: Vec::new(),
            values: Vec::new(),
        }
    }

    fn push(&mut self, frame: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.dim);
        self.frames.push(frame);
        self.values.extend_from_slice(values);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn frame(&self, i: usize) -> usize {
        self.frames[i]
    }

    pub fn frames(&self) -> &[usize] {
        &self.frames
    }

    /// Flat row-major storage, `len() * dim()` values.
    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }
}

/// The per-family feature sets of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFeatureSet {
    pub sequence_id: String,
    pub tau: usize,
    families: Vec<FeatureFamily>,
}

impl SequenceFeatureSet {
    pub fn family(&self, family: usize) -> &FeatureFamily {
        &self.families[family]
    }

    pub fn families(&self) -> &[FeatureFamily] {
        &self.families
    }
}

fn check_frame(seq: &ActionSequence, frame: usize) -> Result<()> {
    if frame >= seq.len() {
        return Err(Error::Domain(format!(
            "frame {frame} outside 0..{} of sequence '{}'",
            seq.len(),
            seq.id()
        )));
    }
    Ok(())
}

/// `x(joint, frame) - x(joint, frame - tau)`; `frame` is zero-based.
pub fn interframe_offset(seq: &ActionSequence, joint: Joint, frame: usize, tau: usize) -> Result<[f64; 3]> {
    check_frame(seq, frame)?;
    if tau == 0 || frame < tau {
        return Err(Error::Domain(format!(
            "interframe offset needs frame >= tau >= 1 (frame {frame}, tau {tau})"
        )));
    }
    let frames = seq.frames();
    Ok((frames[frame].joint(joint) - frames[frame - tau].joint(joint)).to_array())
}

/// `x(joint, frame) - x(other, frame)`.
pub fn intraframe_offset(seq: &ActionSequence, joint: Joint, other: Joint, frame: usize) -> Result<[f64; 3]> {
    check_frame(seq, frame)?;
    let f = &seq.frames()[frame];
    Ok((f.joint(joint) - f.joint(other)).to_array())
}

fn family_values(seq: &ActionSequence, family: usize, frame: usize, tau: usize, out: &mut Vec<f64>) {
    out.clear();
    let frames = seq.frames();
    if is_interframe(family) {
        let (now, then) = (&frames[frame], &frames[frame - tau]);
        for joint in INTERFRAME[family] {
            out.extend_from_slice(&(now.joint(joint) - then.joint(joint)).to_array());
        }
    } else {
        let (basic, offsets) = INTRAFRAME[family - INTERFRAME_FAMILIES];
        let f = &frames[frame];
        for &joint in offsets {
            out.extend_from_slice(&(f.joint(basic) - f.joint(joint)).to_array());
        }
    }
}

/// Offset features of one frame. Interframe families are only present when
/// `frame >= tau`, so the result has either nine or four entries.
pub fn frame_offset_features(seq: &ActionSequence, frame: usize, tau: usize) -> Result<Vec<OffsetFeature>> {
    check_frame(seq, frame)?;
    if tau == 0 {
        return Err(Error::Domain("tau must be positive".into()));
    }
    let first = if frame >= tau { 0 } else { INTERFRAME_FAMILIES };
    let mut buf = Vec::with_capacity(9);
    Ok((first..FAMILY_COUNT)
        .map(|family| {
            family_values(seq, family, frame, tau, &mut buf);
            OffsetFeature {
                family,
                frame,
                values: buf.clone(),
            }
        })
        .collect())
}

pub fn sequence_features(seq: &ActionSequence, tau: usize) -> Result<SequenceFeatureSet> {
    if tau == 0 {
        return Err(Error::Config("tau must be positive".into()));
    }
    let mut families: Vec<FeatureFamily> = FAMILY_DIMS.iter().map(|&d| FeatureFamily::new(d)).collect();
    let mut buf = Vec::with_capacity(9);
    for frame in 0..seq.len() {
        let first = if frame >= tau { 0 } else { INTERFRAME_FAMILIES };
        for (family, set) in families.iter_mut().enumerate().skip(first) {
            family_values(seq, family, frame, tau, &mut buf);
            set.push(frame, &buf);
        }
    }
    Ok(SequenceFeatureSet {
        sequence_id: seq.id().to_string(),
        tau,
        families,
    })
}
