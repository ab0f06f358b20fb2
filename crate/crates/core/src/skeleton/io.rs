//! Text formats for skeleton sequences.
//!
//! Canonical files start with `LAKS-SKEL 1 <frame_count>` followed by one line
//! per frame holding 45 reals (joints 1..15, each `x y z`). Raw "msr-like"
//! files hold `source_joints` rows of `x y z [confidence]` per frame with
//! frames concatenated; a [`JointMap`] picks the fifteen canonical rows.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use regex::Regex;

use super::{ActionSequence, Dataset, Joint, Joint3D, JointMap, SkeletonFrame, JOINT_COUNT};
use crate::error::{Error, Result};

const MAGIC: &str = "LAKS-SKEL";
const VERSION: &str = "1";
const MIN_SIGNIFICANT_DIGITS: usize = 6;

/// Renders `value` with the shortest mantissa that round-trips, padded with
/// trailing zeros to at least six significant digits.
pub(crate) fn render_real(value: f64) -> String {
    let sci = format!("{value:e}");
    let (mantissa, exponent) = sci.split_once('e').expect("`{:e}` always has an exponent");
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    let mut frac = frac_part.to_string();
    while int_part.len() + frac.len() < MIN_SIGNIFICANT_DIGITS {
        frac.push('0');
    }
    format!("{sign}{int_part}.{frac}e{exponent}")
}

pub fn render_canonical(seq: &ActionSequence) -> String {
    let mut out = format!("{MAGIC} {VERSION} {}\n", seq.len());
    for frame in seq.frames() {
        let mut first = true;
        for joint in frame.joints() {
            for v in joint.to_array() {
                if !first {
                    out.push(' ');
                }
                first = false;
                out.push_str(&render_real(v));
            }
        }
        out.push('\n');
    }
    out
}

pub fn save_canonical(seq: &ActionSequence, path: &Path) -> Result<()> {
    std::fs::write(path, render_canonical(seq)).map_err(|e| Error::io(path, e))
}

fn parse_reals(line: &str, path: &Path, line_no: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("`{tok}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::parse(path, line_no, format!("non-finite coordinate `{tok}`")))
            }
        })
        .collect()
}

/// Parses canonical text; `path` is used only to label diagnostics.
pub fn parse_canonical(text: &str, path: &Path) -> Result<Vec<SkeletonFrame>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let frame_count: usize = match fields.as_slice() {
        [MAGIC, VERSION, count] => count
            .parse()
            .map_err(|_| Error::parse(path, 1, format!("bad frame count `{count}`")))?,
        _ => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header `{MAGIC} {VERSION} <frame_count>`"),
            ))
        }
    };
    let mut frames = Vec::with_capacity(frame_count);
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let values = parse_reals(line, path, line_no)?;
        if values.len() != 3 * JOINT_COUNT {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {} reals, found {}", 3 * JOINT_COUNT, values.len()),
            ));
        }
        let joints = std::array::from_fn(|i| {
            Joint3D::new(values[3 * i], values[3 * i + 1], values[3 * i + 2])
        });
        frames.push(SkeletonFrame::new(joints).map_err(|e| Error::parse(path, line_no, e.to_string()))?);
    }
    if frames.len() != frame_count {
        return Err(Error::parse(
            path,
            text.lines().count().max(1),
            format!("header declares {frame_count} frames, found {}", frames.len()),
        ));
    }
    if frames.is_empty() {
        return Err(Error::parse(path, 1, "sequence has no frames"));
    }
    Ok(frames)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn load_canonical(path: &Path) -> Result<ActionSequence> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let frames = parse_canonical(&text, path)?;
    ActionSequence::new(file_stem(path), frames)
}

/// Loads a raw multi-joint capture and reduces each frame to the canonical
/// fifteen joints. A fourth (confidence) column is accepted and discarded.
pub fn load_raw(path: &Path, map: &JointMap) -> Result<ActionSequence> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows_per_frame = map.source_joint_count();
    let mut rows: Vec<(usize, Joint3D)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let values = parse_reals(line, path, line_no)?;
        if values.len() != 3 && values.len() != 4 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected `x y z [confidence]`, found {} values", values.len()),
            ));
        }
        rows.push((line_no, Joint3D::new(values[0], values[1], values[2])));
    }
    if rows.is_empty() {
        return Err(Error::parse(path, 1, "empty file"));
    }
    if rows.len() % rows_per_frame != 0 {
        let last_line = rows.last().map(|r| r.0).unwrap_or(1);
        return Err(Error::parse(
            path,
            last_line,
            format!(
                "final frame has {} joint rows, expected {rows_per_frame}",
                rows.len() % rows_per_frame
            ),
        ));
    }
    let frames = rows
        .chunks_exact(rows_per_frame)
        .map(|chunk| {
            let joints = std::array::from_fn(|i| chunk[map.source_row(Joint::ALL[i])].1);
            SkeletonFrame::new(joints).map_err(|e| Error::parse(path, chunk[0].0, e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    ActionSequence::new(file_stem(path), frames)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Canonical,
    MsrLike,
}

impl std::str::FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" => Ok(DatasetFormat::Canonical),
            "msr-like" | "msr" | "raw" => Ok(DatasetFormat::MsrLike),
            other => Err(Error::Config(format!(
                "unknown dataset format `{other}` (expected canonical or msr-like)"
            ))),
        }
    }
}

/// Regular expression extracting `action` and `subject` (and optionally
/// `episode`) from file names.
#[derive(Debug, Clone)]
pub struct NamingPattern {
    regex: Regex,
}

impl NamingPattern {
    pub const DEFAULT: &'static str = r"^a(?P<action>\d+)_s(?P<subject>\d+)_e(?P<episode>\d+)";

    pub fn new(pattern: &str) -> Result<Self> {
        let regex = Regex::new(pattern)
            .map_err(|e| Error::Config(format!("invalid naming pattern: {e}")))?;
        let names: Vec<_> = regex.capture_names().flatten().collect();
        if !names.contains(&"action") {
            return Err(Error::Config(
                "naming pattern must define a named group `action`".into(),
            ));
        }
        Ok(NamingPattern { regex })
    }

    /// Returns `(action, subject)` when the file name matches.
    pub fn parse(&self, file_name: &str) -> Option<(u32, Option<u32>)> {
        let caps = self.regex.captures(file_name)?;
        let action = caps.name("action")?.as_str().parse().ok()?;
        let subject = caps.name("subject").and_then(|m| m.as_str().parse().ok());
        Some((action, subject))
    }
}

impl Default for NamingPattern {
    fn default() -> Self {
        NamingPattern::new(NamingPattern::DEFAULT).expect("default pattern is valid")
    }
}

/// Outcome of a directory scan besides the dataset itself.
#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub loaded: usize,
    /// Files that matched the naming pattern but failed to parse.
    pub skipped: Vec<(PathBuf, String)>,
    /// Files whose names did not match the naming pattern.
    pub ignored: usize,
}

pub fn load_dataset(
    dir: &Path,
    format: DatasetFormat,
    map: &JointMap,
    naming: &NamingPattern,
) -> Result<(Dataset, LoadReport)> {
    let read = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = read
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();

    let mut report = LoadReport::default();
    let mut sequences = Vec::new();
    for path in paths {
        let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let Some((action, subject)) = naming.parse(&name) else {
            report.ignored += 1;
            continue;
        };
        let loaded = match format {
            DatasetFormat::Canonical => load_canonical(&path),
            DatasetFormat::MsrLike => load_raw(&path, map),
        }
        .and_then(|seq| seq.with_label(action));
        match loaded {
            Ok(mut seq) => {
                if let Some(subject) = subject {
                    seq = seq.with_subject(subject);
                }
                sequences.push(seq);
            }
            Err(e) => report.skipped.push((path, e.to_string())),
        }
    }
    report.loaded = sequences.len();
    if sequences.is_empty() {
        return Err(Error::Data(format!(
            "no sequences loaded from {} ({} skipped, {} ignored)",
            dir.display(),
            report.skipped.len(),
            report.ignored
        )));
    }
    Ok((Dataset::from_sequences(sequences)?, report))
}

/// Writes every sequence as `<sequence_id>.txt` in canonical format.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for seq in dataset.sequences() {
        let mut name = String::new();
        let _ = write!(name, "{}.txt", seq.id());
        save_canonical(seq, &dir.join(name))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame_with(f: impl Fn(usize) -> Joint3D) -> SkeletonFrame {
        SkeletonFrame::new(std::array::from_fn(f)).unwrap()
    }

    #[test]
    fn real_rendering() {
        assert_eq!(render_real(0.0), "0.00000e0");
        assert_eq!(render_real(0.5), "5.00000e-1");
        assert_eq!(render_real(-1234.5), "-1.23450e3");
        assert_eq!(render_real(0.1 + 0.2), "3.0000000000000004e-1");
        for v in [0.0, -0.0, 1e-300, 123456789.0, std::f64::consts::PI] {
            let s = render_real(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn zero_frame_file() {
        let text = format!("LAKS-SKEL 1 1\n{}\n", vec!["0"; 45].join(" "));
        let frames = parse_canonical(&text, Path::new("z")).unwrap();
        assert_eq!(frames.len(), 1);
        assert!(frames[0].joints().iter().all(|j| *j == Joint3D::ORIGIN));
    }

    #[test]
    fn hand_written_three_frames() {
        let mut text = String::from("LAKS-SKEL 1 3\n");
        for f in 0..3 {
            let vals: Vec<String> = (0..45).map(|k| format!("{}", f * 100 + k)).collect();
            text.push_str(&vals.join(" "));
            text.push('\n');
        }
        let frames = parse_canonical(&text, Path::new("h")).unwrap();
        for (f, frame) in frames.iter().enumerate() {
            let base = (f * 100) as f64;
            assert_eq!(frame.joint(Joint::Head), Joint3D::new(base, base + 1.0, base + 2.0));
            assert_eq!(
                frame.joint(Joint::RightFoot),
                Joint3D::new(base + 42.0, base + 43.0, base + 44.0)
            );
        }
    }

    #[test]
    fn parse_errors_name_the_line() {
        let p = Path::new("bad.txt");
        assert!(matches!(parse_canonical("", p), Err(Error::Parse { line: 1, .. })));
        let short = format!("LAKS-SKEL 1 2\n{}\n{}\n", vec!["1"; 45].join(" "), vec!["1"; 44].join(" "));
        match parse_canonical(&short, p) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("44"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let junk = format!("LAKS-SKEL 1 1\n{} x\n", vec!["1"; 44].join(" "));
        assert!(matches!(parse_canonical(&junk, p), Err(Error::Parse { line: 2, .. })));
        let nan = format!("LAKS-SKEL 1 1\nnan {}\n", vec!["1"; 44].join(" "));
        assert!(matches!(parse_canonical(&nan, p), Err(Error::Parse { line: 2, .. })));
        assert!(parse_canonical("LAKS-SKEL 1 0\n", p).is_err());
        assert!(parse_canonical("SKEL 1 1\n", p).is_err());
    }

    #[test]
    fn raw_with_selection_map() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.txt");
        let mut text = String::new();
        for r in 0..20 {
            text.push_str(&format!("{} {} {} 0.5\n", r, r * 10, r * 100));
        }
        std::fs::write(&path, &text).unwrap();
        // canonical joint i <- source row 20 - i (one-based)
        let entries: Vec<_> = Joint::ALL.iter().map(|&j| (j, 21 - j.number())).collect();
        let map = JointMap::new(20, &entries).unwrap();
        let seq = load_raw(&path, &map).unwrap();
        assert_eq!(seq.len(), 1);
        for j in Joint::ALL {
            let r = (20 - j.number()) as f64;
            assert_eq!(seq.frames()[0].joint(j), Joint3D::new(r, r * 10.0, r * 100.0));
        }

        let truncated: String = text.lines().take(19).map(|l| format!("{l}\n")).collect();
        std::fs::write(&path, truncated).unwrap();
        assert!(matches!(load_raw(&path, &map), Err(Error::Parse { .. })));
    }

    #[test]
    fn identity_raw_equals_canonical() {
        let dir = tempfile::tempdir().unwrap();
        let frames: Vec<_> = (0..4)
            .map(|f| frame_with(|i| Joint3D::new(i as f64 * 0.25, f as f64 - 1.5, (i * f) as f64 / 3.0)))
            .collect();
        let seq = ActionSequence::new("seq", frames).unwrap();
        let canon = dir.path().join("seq.txt");
        save_canonical(&seq, &canon).unwrap();
        let raw_dir = dir.path().join("raw");
        std::fs::create_dir(&raw_dir).unwrap();
        let raw = raw_dir.join("seq.txt");
        let mut text = String::new();
        for f in seq.frames() {
            for j in f.joints() {
                text.push_str(&format!("{} {} {}\n", render_real(j.x), render_real(j.y), render_real(j.z)));
            }
        }
        std::fs::write(&raw, text).unwrap();
        assert_eq!(load_raw(&raw, &JointMap::identity()).unwrap(), load_canonical(&canon).unwrap());
    }

    #[test]
    fn dataset_directory() {
        let dir = tempfile::tempdir().unwrap();
        let frame = frame_with(|_| Joint3D::ORIGIN);
        for id in ["a01_s01_e01", "a02_s01_e01"] {
            let seq = ActionSequence::new(id, vec![frame]).unwrap();
            save_canonical(&seq, &dir.path().join(format!("{id}.txt"))).unwrap();
        }
        std::fs::write(dir.path().join("README"), "not a sequence").unwrap();
        std::fs::write(dir.path().join("a03_s02_e01.txt"), "garbage").unwrap();
        let (ds, report) = load_dataset(
            dir.path(),
            DatasetFormat::Canonical,
            &JointMap::identity(),
            &NamingPattern::default(),
        )
        .unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.class_count(), 2);
        assert_eq!(ds.sequences()[1].label(), Some(2));
        assert_eq!(ds.sequences()[1].subject(), Some(1));
        assert_eq!(report.loaded, 2);
        assert_eq!(report.skipped.len(), 1);
        assert_eq!(report.ignored, 1);
    }

    #[test]
    fn empty_directory_is_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_dataset(
            dir.path(),
            DatasetFormat::Canonical,
            &JointMap::identity(),
            &NamingPattern::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn custom_naming_pattern() {
        let p = NamingPattern::new(r"^(?P<subject>\d+)-(?P<action>\d+)").unwrap();
        assert_eq!(p.parse("07-3.txt"), Some((3, Some(7))));
        assert!(NamingPattern::new(r"^(?P<subject>\d+)").is_err());
    }

    proptest! {
        #[test]
        fn canonical_text_round_trip(values in proptest::collection::vec(-1e4f64..1e4, 45..=180)) {
            let n = values.len() / 45;
            let frames: Vec<_> = (0..n)
                .map(|f| frame_with(|i| {
                    let b = f * 45 + 3 * i;
                    Joint3D::new(values[b], values[b + 1], values[b + 2])
                }))
                .collect();
            let seq = ActionSequence::new("p", frames).unwrap();
            let text = render_canonical(&seq);
            let parsed = parse_canonical(&text, Path::new("p")).unwrap();
            let again = ActionSequence::new("p", parsed).unwrap();
            prop_assert_eq!(&again, &seq);
            prop_assert_eq!(render_canonical(&again), text);
        }
    }
}
