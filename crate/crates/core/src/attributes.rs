//! Global attribute estimation from frame-wise probability tracks:
//! energy-based voice activity detection, then averaging the frame-wise
//! creak probabilities over the active frames.

use crate::error::{Error, Result};

/// Per-frame energy and creak-probability tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatures {
    energy: Vec<f64>,
    creak_probability: Vec<f64>,
    frame_rate: f64,
}

impl FrameFeatures {
    pub fn new(energy: Vec<f64>, creak_probability: Vec<f64>, frame_rate: f64) -> Result<Self> {
        if energy.len() != creak_probability.len() {
            return Err(Error::config(format!(
                "{} energy frames but {} probability frames",
                energy.len(),
                creak_probability.len()
            )));
        }
        if !(frame_rate > 0.0 && frame_rate.is_finite()) {
            return Err(Error::config("frame_rate must be positive"));
        }
        for (i, e) in energy.iter().enumerate() {
            if !(e.is_finite() && *e >= 0.0) {
                return Err(Error::config(format!("frame {i}: energy {e} invalid")));
            }
        }
        for (i, p) in creak_probability.iter().enumerate() {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::config(format!(
                    "frame {i}: creak probability {p} outside [0, 1]"
                )));
            }
        }
        Ok(FrameFeatures {
            energy,
            creak_probability,
            frame_rate,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.energy.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.energy.is_empty()
    }

    pub fn energy(&self) -> &[f64] {
        &self.energy
    }

    pub fn creak_probability(&self) -> &[f64] {
        &self.creak_probability
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }
}

/// Reference energy the VAD threshold is taken relative to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VadReference {
    /// Maximum frame energy.
    Peak,
    /// 95th-percentile frame energy (nearest-rank); robust to a few
    /// outlier frames.
    Percentile95,
}

/// Voice-activity detection settings. A frame is active when its energy
/// reaches `relative_threshold` times the reference energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VadConfig {
    pub relative_threshold: f64,
    pub reference: VadReference,
}

impl Default for VadConfig {
    fn default() -> Self {
        VadConfig {
            relative_threshold: 0.05,
            reference: VadReference::Percentile95,
        }
    }
}

impl VadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.relative_threshold > 0.0 && self.relative_threshold < 1.0) {
            return Err(Error::config("relative_threshold must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Active-frame mask: frame i is active iff
/// `energy_i >= relative_threshold * reference`.
pub fn energy_vad(features: &FrameFeatures, cfg: &VadConfig) -> Result<Vec<bool>> {
    cfg.validate()?;
    if features.is_empty() {
        return Err(Error::config("cannot run VAD on an empty sequence"));
    }
    let reference = match cfg.reference {
        VadReference::Peak => features.energy.iter().cloned().fold(0.0f64, f64::max),
        VadReference::Percentile95 => percentile_nearest_rank(&features.energy, 0.95),
    };
    if reference <= 0.0 {
        return Err(Error::NoActiveFrames(
            "reference energy is zero; the signal is silent".into(),
        ));
    }
    let threshold = cfg.relative_threshold * reference;
    Ok(features.energy.iter().map(|e| *e >= threshold).collect())
}

/// Nearest-rank percentile of a non-empty slice.
fn percentile_nearest_rank(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite energies"));
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Global attribute: arithmetic mean of the creak probability over
/// active frames.
pub fn global_attribute(features: &FrameFeatures, mask: &[bool]) -> Result<f64> {
    if mask.len() != features.len() {
        return Err(Error::config(format!(
            "mask has {} entries for {} frames",
            mask.len(),
            features.len()
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (p, active) in features.creak_probability.iter().zip(mask) {
        if *active {
            sum += p;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NoActiveFrames(
            "mask selects no frames for attribute estimation".into(),
        ));
    }
    Ok(sum / count as f64)
}
