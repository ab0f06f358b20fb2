//! Skeleton data model: the fifteen-joint body, frames, sequences and datasets.

mod io;
mod joint_map;

pub use io::{
    load_canonical, load_dataset, load_raw, parse_canonical, render_canonical, save_canonical,
    save_dataset, DatasetFormat, LoadReport, NamingPattern,
};
pub use joint_map::JointMap;

use crate::error::{Error, Result};

pub const JOINT_COUNT: usize = 15;

/// Canonical joints in body-model order. `Joint::Head.number() == 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Joint {
    Head,
    Neck,
    Spine,
    LeftShoulder,
    LeftElbow,
    LeftHand,
    RightShoulder,
    RightElbow,
    RightHand,
    LeftHip,
    LeftKnee,
    LeftFoot,
    RightHip,
    RightKnee,
    RightFoot,
}

impl Joint {
    pub const ALL: [Joint; JOINT_COUNT] = [
        Joint::Head,
        Joint::Neck,
        Joint::Spine,
        Joint::LeftShoulder,
        Joint::LeftElbow,
        Joint::LeftHand,
        Joint::RightShoulder,
        Joint::RightElbow,
        Joint::RightHand,
        Joint::LeftHip,
        Joint::LeftKnee,
        Joint::LeftFoot,
        Joint::RightHip,
        Joint::RightKnee,
        Joint::RightFoot,
    ];

    /// Zero-based position inside a [`SkeletonFrame`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// One-based canonical number (1 = head .. 15 = right foot).
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn from_number(number: usize) -> Result<Joint> {
        if (1..=JOINT_COUNT).contains(&number) {
            Ok(Joint::ALL[number - 1])
        } else {
            Err(Error::Domain(format!(
                "joint number {number} outside 1..={JOINT_COUNT}"
            )))
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Joint::Head => "head",
            Joint::Neck => "neck",
            Joint::Spine => "spine",
            Joint::LeftShoulder => "left_shoulder",
            Joint::LeftElbow => "left_elbow",
            Joint::LeftHand => "left_hand",
            Joint::RightShoulder => "right_shoulder",
            Joint::RightElbow => "right_elbow",
            Joint::RightHand => "right_hand",
            Joint::LeftHip => "left_hip",
            Joint::LeftKnee => "left_knee",
            Joint::LeftFoot => "left_foot",
            Joint::RightHip => "right_hip",
            Joint::RightKnee => "right_knee",
            Joint::RightFoot => "right_foot",
        }
    }

    pub fn from_name(name: &str) -> Option<Joint> {
        Joint::ALL.iter().copied().find(|j| j.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Joint3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Joint3D {
    pub const ORIGIN: Joint3D = Joint3D {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Joint3D { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl std::ops::Sub for Joint3D {
    type Output = Joint3D;

    fn sub(self, rhs: Joint3D) -> Joint3D {
        Joint3D::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl std::ops::Add for Joint3D {
    type Output = Joint3D;

    fn add(self, rhs: Joint3D) -> Joint3D {
        Joint3D::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

/// One captured body pose, joints stored in canonical order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonFrame {
    joints: [Joint3D; JOINT_COUNT],
}

impl SkeletonFrame {
    pub fn new(joints: [Joint3D; JOINT_COUNT]) -> Result<Self> {
        if let Some(pos) = joints.iter().position(|j| !j.is_finite()) {
            return Err(Error::Data(format!(
                "joint {} has a non-finite coordinate",
                pos + 1
            )));
        }
        Ok(SkeletonFrame { joints })
    }

    pub fn joint(&self, joint: Joint) -> Joint3D {
        self.joints[joint.index()]
    }

    pub fn joints(&self) -> &[Joint3D; JOINT_COUNT] {
        &self.joints
    }

    /// Shifts every joint by `offset`.
    pub fn translated(&self, offset: Joint3D) -> SkeletonFrame {
        SkeletonFrame {
            joints: self.joints.map(|j| j + offset),
        }
    }
}

/// An ordered, non-empty run of skeleton frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSequence {
    frames: Vec<SkeletonFrame>,
    label: Option<u32>,
    subject: Option<u32>,
    sequence_id: String,
}

impl ActionSequence {
    pub fn new(sequence_id: impl Into<String>, frames: Vec<SkeletonFrame>) -> Result<Self> {
        let sequence_id = sequence_id.into();
        if frames.is_empty() {
            return Err(Error::Data(format!("sequence '{sequence_id}' has no frames")));
        }
        Ok(ActionSequence {
            frames,
            label: None,
            subject: None,
            sequence_id,
        })
    }

    /// Sets the class label. Labels are one-based.
    pub fn with_label(mut self, label: u32) -> Result<Self> {
        if label == 0 {
            return Err(Error::Data(format!(
                "sequence '{}': class labels start at 1",
                self.sequence_id
            )));
        }
        self.label = Some(label);
        Ok(self)
    }

    pub fn with_subject(mut self, subject: u32) -> Self {
        self.subject = Some(subject);
        self
    }

    pub fn frames(&self) -> &[SkeletonFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self) -> Option<u32> {
        self.label
    }

    pub fn subject(&self) -> Option<u32> {
        self.subject
    }

    pub fn id(&self) -> &str {
        &self.sequence_id
    }

    pub fn translated(&self, offset: Joint3D) -> ActionSequence {
        ActionSequence {
            frames: self.frames.iter().map(|f| f.translated(offset)).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    sequences: Vec<ActionSequence>,
    class_count: usize,
    class_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(sequences: Vec<ActionSequence>, class_count: usize) -> Result<Self> {
        if sequences.is_empty() {
            return Err(Error::Data("dataset contains no sequences".into()));
        }
        for seq in &sequences {
            if let Some(label) = seq.label() {
                if label as usize > class_count {
                    return Err(Error::Data(format!(
                        "sequence '{}' has label {label} but the dataset declares {class_count} classes",
                        seq.id()
                    )));
                }
            }
        }
        Ok(Dataset {
            sequences,
            class_count,
            class_names: None,
        })
    }

    /// Builds a dataset whose class count is the largest label present.
    pub fn from_sequences(sequences: Vec<ActionSequence>) -> Result<Self> {
        let class_count = sequences
            .iter()
            .filter_map(|s| s.label())
            .max()
            .unwrap_or(0) as usize;
        Dataset::new(sequences, class_count)
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.class_count {
            return Err(Error::Config(format!(
                "{} class names given for {} classes",
                names.len(),
                self.class_count
            )));
        }
        self.class_names = Some(names);
        Ok(self)
    }

    pub fn sequences(&self) -> &[ActionSequence] {
        &self.sequences
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    /// Sorted, de-duplicated subject ids present in the dataset.
    pub fn subjects(&self) -> Vec<u32> {
        let mut subjects: Vec<u32> = self.sequences.iter().filter_map(|s| s.subject()).collect();
        subjects.sort_unstable();
        subjects.dedup();
        subjects
    }
}
