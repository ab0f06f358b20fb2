use std::path::Path;

use super::{Joint, JOINT_COUNT};
use crate::error::{Error, Result};
use crate::kv;

const MSR20_DEFAULT: &str = include_str!("../../config/msr20.jointmap");

/// Selects, for every canonical joint, the row of a raw capture frame that
/// holds it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointMap {
    source_joint_count: usize,
    // zero-based source row per canonical joint
    rows: [usize; JOINT_COUNT],
}

impl JointMap {
    /// `entries` pairs canonical joints with one-based source rows. Every
    /// canonical joint must appear exactly once.
    pub fn new(source_joint_count: usize, entries: &[(Joint, usize)]) -> Result<Self> {
        let mut rows: [Option<usize>; JOINT_COUNT] = [None; JOINT_COUNT];
        for &(joint, source) in entries {
            if source == 0 || source > source_joint_count {
                return Err(Error::Config(format!(
                    "joint map: {} -> {source} outside 1..={source_joint_count}",
                    joint.name()
                )));
            }
            if rows[joint.index()].replace(source - 1).is_some() {
                return Err(Error::Config(format!(
                    "joint map: {} mapped more than once",
                    joint.name()
                )));
            }
        }
        let mut out = [0; JOINT_COUNT];
        for joint in Joint::ALL {
            out[joint.index()] = rows[joint.index()].ok_or_else(|| {
                Error::Config(format!(
                    "joint map: canonical joint {} ({}) is unmapped",
                    joint.number(),
                    joint.name()
                ))
            })?;
        }
        Ok(JointMap {
            source_joint_count,
            rows: out,
        })
    }

    pub fn identity() -> Self {
        JointMap {
            source_joint_count: JOINT_COUNT,
            rows: std::array::from_fn(|i| i),
        }
    }

    /// The shipped default for 20-joint MSRAction3D-style captures.
    pub fn msr20() -> Self {
        JointMap::parse(MSR20_DEFAULT, Path::new("<builtin msr20>"))
            .expect("builtin joint map is valid")
    }

    /// Parses `source_joints = N` plus one `<joint> = <row>` line per
    /// canonical joint. Joints may be named or given by canonical number.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut source_joints = None;
        let mut entries = Vec::new();
        for entry in kv::parse(text, path)? {
            let value: usize = entry.value.parse().map_err(|_| {
                Error::parse(path, entry.line, format!("`{}` is not a row index", entry.value))
            })?;
            if entry.key == "source_joints" {
                source_joints = Some(value);
                continue;
            }
            let joint = match entry.key.parse::<usize>() {
                Ok(n) => Joint::from_number(n).map_err(|e| Error::parse(path, entry.line, e.to_string()))?,
                Err(_) => Joint::from_name(&entry.key).ok_or_else(|| {
                    Error::parse(path, entry.line, format!("unknown joint `{}`", entry.key))
                })?,
            };
            entries.push((joint, value));
        }
        let source_joints = source_joints
            .ok_or_else(|| Error::Config(format!("{}: missing `source_joints`", path.display())))?;
        JointMap::new(source_joints, &entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        JointMap::parse(&text, path)
    }

    pub fn source_joint_count(&self) -> usize {
        self.source_joint_count
    }

    /// Zero-based source row holding `joint`.
    pub fn source_row(&self, joint: Joint) -> usize {
        self.rows[joint.index()]
    }

    pub fn is_identity(&self) -> bool {
        self.source_joint_count == JOINT_COUNT && self.rows.iter().enumerate().all(|(i, &r)| i == r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_maps_are_valid() {
        let msr = JointMap::msr20();
        assert_eq!(msr.source_joint_count(), 20);
        assert_eq!(msr.source_row(Joint::Head), 19);
        assert!(JointMap::identity().is_identity());
        let text = include_str!("../../config/identity15.jointmap");
        assert_eq!(JointMap::parse(text, Path::new("id")).unwrap(), JointMap::identity());
    }

    #[test]
    fn unmapped_joint_is_config_error() {
        let entries: Vec<_> = Joint::ALL[..14].iter().map(|&j| (j, j.number())).collect();
        let err = JointMap::new(15, &entries).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("right_foot"));
    }

    #[test]
    fn duplicate_and_out_of_range() {
        let mut entries: Vec<_> = Joint::ALL.iter().map(|&j| (j, j.number())).collect();
        entries.push((Joint::Head, 2));
        assert!(JointMap::new(15, &entries).is_err());
        entries.pop();
        entries[0].1 = 16;
        assert!(JointMap::new(15, &entries).is_err());
    }

    #[test]
    fn numeric_keys_accepted() {
        let mut text = String::from("source_joints = 15\n");
        for n in 1..=15 {
            text.push_str(&format!("{n} = {}\n", 16 - n));
        }
        let map = JointMap::parse(&text, Path::new("rev")).unwrap();
        assert_eq!(map.source_row(Joint::Head), 14);
        assert_eq!(map.source_row(Joint::RightFoot), 0);
    }
}
