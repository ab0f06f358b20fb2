//! Procedurally generated skeleton actions for smoke tests and benchmarks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::skeleton::{ActionSequence, Dataset, Joint, Joint3D, SkeletonFrame, JOINT_COUNT};

/// Motion archetypes, in label order.
pub const MOTIONS: [&str; 5] = ["wave", "walk", "squat", "punch", "kick"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub classes: usize,
    pub subjects: usize,
    pub episodes: usize,
    /// Nominal frame count; each episode varies by up to ±20%.
    pub frames: usize,
    /// Standard deviation of the per-joint Gaussian jitter, in meters.
    pub jitter: f64,
    /// Probability that a frame receives a displaced joint.
    pub spike_rate: f64,
    pub spike_magnitude: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: 3,
            subjects: 10,
            episodes: 2,
            frames: 40,
            jitter: 0.01,
            spike_rate: 0.0,
            spike_magnitude: 0.5,
            seed: 0,
        }
    }
}

/// Per-subject body and performance style.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Style {
    pub scale: f64,
    pub amplitude: f64,
    /// Motion cycles per sequence.
    pub cycles: f64,
    pub phase: f64,
    pub origin: Joint3D,
}

impl Style {
    pub fn neutral() -> Self {
        Style {
            scale: 1.0,
            amplitude: 1.0,
            cycles: 2.0,
            phase: 0.0,
            origin: Joint3D::new(0.0, 0.0, 2.5),
        }
    }

    pub fn sample(rng: &mut impl Rng) -> Self {
        Style {
            scale: rng.random_range(0.9..1.1),
            amplitude: rng.random_range(0.8..1.2),
            cycles: rng.random_range(1.5..2.5),
            phase: rng.random_range(0.0..2.0 * PI),
            origin: Joint3D::new(rng.random_range(-0.5..0.5), 0.0, rng.random_range(2.0..3.0)),
        }
    }
}

fn rest_pose() -> [Joint3D; JOINT_COUNT] {
    let p = Joint3D::new;
    [
        p(0.0, 1.70, 0.0),
        p(0.0, 1.50, 0.0),
        p(0.0, 1.20, 0.0),
        p(-0.20, 1.45, 0.0),
        p(-0.25, 1.20, 0.0),
        p(-0.27, 0.95, 0.0),
        p(0.20, 1.45, 0.0),
        p(0.25, 1.20, 0.0),
        p(0.27, 0.95, 0.0),
        p(-0.10, 0.95, 0.0),
        p(-0.10, 0.50, 0.0),
        p(-0.10, 0.05, 0.0),
        p(0.10, 0.95, 0.0),
        p(0.10, 0.50, 0.0),
        p(0.10, 0.05, 0.0),
    ]
}

/// Point at `length` from `from`, rotated by `angle` from straight down in the y-z plane.
fn swing(from: Joint3D, length: f64, angle: f64) -> Joint3D {
    from + Joint3D::new(0.0, -length * angle.cos(), length * angle.sin())
}

fn pose(motion: usize, phase: f64, progress: f64, amp: f64) -> [Joint3D; JOINT_COUNT] {
    let mut j = rest_pose();
    let s = phase.sin();
    match motion {
        // right hand waves side to side above the shoulder
        0 => {
            let sh = j[Joint::RightShoulder.index()];
            let elbow = sh + Joint3D::new(0.15, 0.2, 0.0);
            let a = 0.6 * amp * s;
            j[Joint::RightElbow.index()] = elbow;
            j[Joint::RightHand.index()] = elbow + Joint3D::new(0.25 * a.sin(), 0.25 * a.cos(), 0.0);
        }
        // legs and arms swing in antiphase while the body moves forward
        1 => {
            let a = 0.45 * amp * s;
            for (hip, knee, foot, sign) in [
                (Joint::LeftHip, Joint::LeftKnee, Joint::LeftFoot, 1.0),
                (Joint::RightHip, Joint::RightKnee, Joint::RightFoot, -1.0),
            ] {
                let k = swing(j[hip.index()], 0.45, sign * a);
                j[knee.index()] = k;
                j[foot.index()] = swing(k, 0.45, sign * a - 0.2 * amp * (sign * phase).cos().max(0.0));
            }
            for (sh, el, hand, sign) in [
                (Joint::LeftShoulder, Joint::LeftElbow, Joint::LeftHand, -1.0),
                (Joint::RightShoulder, Joint::RightElbow, Joint::RightHand, 1.0),
            ] {
                let e = swing(j[sh.index()], 0.25, sign * a);
                j[el.index()] = e;
                j[hand.index()] = swing(e, 0.25, sign * a * 1.3);
            }
            let shift = Joint3D::new(0.0, 0.0, 0.8 * progress);
            for p in j.iter_mut() {
                *p = *p + shift;
            }
        }
        // body lowers by bending the knees, arms reach forward
        2 => {
            let depth = 0.5 * amp * (1.0 - phase.cos());
            let drop = 0.25 * depth;
            for joint in [
                Joint::Head,
                Joint::Neck,
                Joint::Spine,
                Joint::LeftShoulder,
                Joint::RightShoulder,
                Joint::LeftHip,
                Joint::RightHip,
            ] {
                j[joint.index()].y -= drop;
            }
            for (hip, knee) in [(Joint::LeftHip, Joint::LeftKnee), (Joint::RightHip, Joint::RightKnee)] {
                let h = j[hip.index()];
                j[knee.index()] = Joint3D::new(h.x, (h.y + 0.05) / 2.0, 0.3 * depth);
            }
            for (sh, el, hand) in [
                (Joint::LeftShoulder, Joint::LeftElbow, Joint::LeftHand),
                (Joint::RightShoulder, Joint::RightElbow, Joint::RightHand),
            ] {
                let e = swing(j[sh.index()], 0.25, 1.3 * depth);
                j[el.index()] = e;
                j[hand.index()] = swing(e, 0.25, 1.4 * depth);
            }
        }
        // left fist extends forward and retracts
        3 => {
            let reach = 0.5 * amp * (1.0 + s);
            let sh = j[Joint::LeftShoulder.index()];
            let e = sh + Joint3D::new(0.0, -0.1 * (1.0 - reach), 0.2 + 0.05 * reach);
            j[Joint::LeftElbow.index()] = e;
            j[Joint::LeftHand.index()] = e + Joint3D::new(0.0, 0.0, 0.05 + 0.25 * reach);
        }
        // right leg kicks forward
        _ => {
            let a = 0.7 * amp * (0.5 + 0.5 * s);
            let k = swing(j[Joint::RightHip.index()], 0.45, a);
            j[Joint::RightKnee.index()] = k;
            j[Joint::RightFoot.index()] = swing(k, 0.45, a * 1.4);
        }
    }
    j
}

/// One sequence of `motion` (0-based) with the given style and exactly `frames` frames.
pub fn synthetic_sequence(
    id: impl Into<String>,
    motion: usize,
    style: &Style,
    frames: usize,
    jitter: f64,
    rng: &mut impl Rng,
) -> Result<ActionSequence> {
    if motion >= MOTIONS.len() {
        return Err(Error::Config(format!("motion {motion} outside 0..{}", MOTIONS.len())));
    }
    let noise = Normal::new(0.0, jitter.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
    let mut out = Vec::with_capacity(frames);
    for f in 0..frames {
        let progress = if frames > 1 { f as f64 / (frames - 1) as f64 } else { 0.0 };
        let phase = 2.0 * PI * style.cycles * progress + style.phase;
        let mut joints = pose(motion, phase, progress, style.amplitude);
        for p in joints.iter_mut() {
            let scaled = Joint3D::new(p.x * style.scale, p.y * style.scale, p.z * style.scale);
            let jit = if jitter > 0.0 {
                Joint3D::new(noise.sample(rng), noise.sample(rng), noise.sample(rng))
            } else {
                Joint3D::ORIGIN
            };
            *p = scaled + style.origin + jit;
        }
        out.push(SkeletonFrame::new(joints)?);
    }
    ActionSequence::new(id, out)
}

/// Full dataset: every class performed by every subject `episodes` times.
pub fn generate(config: &SynthConfig) -> Result<Dataset> {
    if config.classes == 0 || config.classes > MOTIONS.len() {
        return Err(Error::Config(format!("synthetic classes must be in 1..={}", MOTIONS.len())));
    }
    if config.subjects == 0 || config.episodes == 0 || config.frames < 3 {
        return Err(Error::Config("synthetic data needs subjects, episodes and at least 3 frames".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let styles: Vec<Style> = (0..config.subjects).map(|_| Style::sample(&mut rng)).collect();
    let spike = Normal::new(0.0, config.spike_magnitude).map_err(|e| Error::Config(e.to_string()))?;
    let mut sequences = Vec::new();
    for class in 0..config.classes {
        for (s, base) in styles.iter().enumerate() {
            for e in 0..config.episodes {
                let mut style = *base;
                style.phase += rng.random_range(-0.5..0.5);
                style.cycles *= rng.random_range(0.9..1.1);
                let spread = config.frames / 5;
                let frames = config.frames - spread + rng.random_range(0..=2 * spread);
                let id = format!("a{:02}_s{:02}_e{:02}", class + 1, s + 1, e + 1);
                let mut seq = synthetic_sequence(id, class, &style, frames, config.jitter, &mut rng)?;
                if config.spike_rate > 0.0 {
                    seq = inject_spikes(seq, config.spike_rate, &spike, &mut rng)?;
                }
                sequences.push(seq.with_label(class as u32 + 1)?.with_subject(s as u32 + 1));
            }
        }
    }
    let names = MOTIONS[..config.classes].iter().map(|s| s.to_string()).collect();
    Dataset::new(sequences, config.classes)?.with_class_names(names)
}

fn inject_spikes(
    seq: ActionSequence,
    rate: f64,
    spike: &Normal<f64>,
    rng: &mut impl Rng,
) -> Result<ActionSequence> {
    let mut frames = seq.frames().to_vec();
    for frame in frames.iter_mut() {
        if rng.random::<f64>() < rate {
            let mut joints = *frame.joints();
            let j = rng.random_range(0..JOINT_COUNT);
            joints[j] = joints[j] + Joint3D::new(spike.sample(rng), spike.sample(rng), spike.sample(rng));
            *frame = SkeletonFrame::new(joints)?;
        }
    }
    let mut out = ActionSequence::new(seq.id(), frames)?;
    if let Some(l) = seq.label() {
        out = out.with_label(l)?;
    }
    if let Some(s) = seq.subject() {
        out = out.with_subject(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape() {
        let ds = generate(&SynthConfig::default()).unwrap();
        assert_eq!(ds.len(), 60);
        assert_eq!(ds.class_count(), 3);
        assert_eq!(ds.subjects(), (1..=10).collect::<Vec<_>>());
        for seq in ds.sequences() {
            assert!((32..=48).contains(&seq.len()));
        }
    }

    #[test]
    fn deterministic() {
        let cfg = SynthConfig {
            spike_rate: 0.1,
            ..SynthConfig::default()
        };
        assert_eq!(generate(&cfg).unwrap().sequences(), generate(&cfg).unwrap().sequences());
    }

    #[test]
    fn exact_frame_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for motion in 0..MOTIONS.len() {
            let seq = synthetic_sequence("x", motion, &Style::neutral(), 80, 0.0, &mut rng).unwrap();
            assert_eq!(seq.len(), 80);
        }
    }

    #[test]
    fn motions_differ() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let seqs: Vec<_> = (0..MOTIONS.len())
            .map(|m| synthetic_sequence("x", m, &Style::neutral(), 20, 0.0, &mut rng).unwrap())
            .collect();
        for a in 0..seqs.len() {
            for b in a + 1..seqs.len() {
                assert_ne!(seqs[a].frames(), seqs[b].frames());
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(generate(&SynthConfig { classes: 6, ..SynthConfig::default() }).is_err());
        assert!(generate(&SynthConfig { frames: 2, ..SynthConfig::default() }).is_err());
    }
}
