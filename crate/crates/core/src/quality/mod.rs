//! Output equivalence between a reference device (cloud) and a candidate
//! (edge) running the same model: Dice agreement for segmentation masks and
//! probability differences for classification.

mod mask;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats;

pub use mask::{decode_mask, load_mask, load_mask_pairs, parse_pgm, parse_png, write_pgm, BinaryMask};

pub const PROB_HEADER: &str = "image_id,p_glaucoma,p_healthy";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QualityError {
    #[error("mask dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no inputs")]
    EmptyInput,
    #[error("confusion matrix row {0} sums to zero")]
    ZeroRow(usize),
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("malformed mask: {0}")]
    MalformedMask(String),
    #[error("malformed probability file at line {line}: {reason}")]
    MalformedProbabilities { line: usize, reason: String },
    #[error("unmatched input: {0}")]
    UnmatchedFile(String),
    #[error("io error: {0}")]
    Io(String),
}

impl QualityError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DimensionMismatch(..) => "DimensionMismatch",
            Self::LengthMismatch(..) => "LengthMismatch",
            Self::EmptyInput => "EmptyInput",
            Self::ZeroRow(_) => "ZeroRow",
            Self::InvalidProbability(_) => "InvalidProbability",
            Self::MalformedMask(_) => "MalformedMask",
            Self::MalformedProbabilities { .. } => "MalformedProbabilities",
            Self::UnmatchedFile(_) => "UnmatchedFile",
            Self::Io(_) => "Io",
        }
    }
}

/// Mean, population std and count of a per-image metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityStats {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl QualityStats {
    fn from_values(values: &[f64]) -> Result<Self, QualityError> {
        let (mean, std) = stats::mean_and_std(values).ok_or(QualityError::EmptyInput)?;
        Ok(Self {
            mean,
            std,
            count: values.len(),
        })
    }

    /// `mean ± std` with three decimals.
    pub fn display(&self) -> String {
        format!("{} ± {}", stats::fmt_fixed(self.mean, 3), stats::fmt_fixed(self.std, 3))
    }
}

/// Dice coefficient `2|A∩B| / (|A|+|B|)`; two empty masks agree perfectly.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64, QualityError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(QualityError::DimensionMismatch(a.width(), a.height(), b.width(), b.height()));
    }
    let (mut both, mut total) = (0usize, 0usize);
    for (&x, &y) in a.pixels().iter().zip(b.pixels()) {
        both += usize::from(x && y);
        total += usize::from(x) + usize::from(y);
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / total as f64)
}

/// Per-image Dice between paired reference and candidate masks.
pub fn dice_pair_stats(
    reference: &[BinaryMask],
    candidate: &[BinaryMask],
) -> Result<QualityStats, QualityError> {
    if reference.len() != candidate.len() {
        return Err(QualityError::LengthMismatch(reference.len(), candidate.len()));
    }
    let values = reference
        .iter()
        .zip(candidate)
        .map(|(r, c)| dice(r, c))
        .collect::<Result<Vec<_>, _>>()?;
    QualityStats::from_values(&values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Glaucoma,
    Healthy,
}

/// Two-class probability output of the fundus classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbPair {
    pub p_glaucoma: f64,
    pub p_healthy: f64,
}

impl ProbPair {
    pub fn new(p_glaucoma: f64, p_healthy: f64) -> Result<Self, QualityError> {
        for p in [p_glaucoma, p_healthy] {
            if !(0.0..=1.0).contains(&p) {
                return Err(QualityError::InvalidProbability(p));
            }
        }
        Ok(Self {
            p_glaucoma,
            p_healthy,
        })
    }

    /// Predicted class; ties go to glaucoma.
    pub fn label(&self) -> Label {
        if self.p_glaucoma >= self.p_healthy {
            Label::Glaucoma
        } else {
            Label::Healthy
        }
    }
}

/// Larger of the two absolute probability differences.
pub fn classification_error(reference: &ProbPair, candidate: &ProbPair) -> f64 {
    let dg = (reference.p_glaucoma - candidate.p_glaucoma).abs();
    let dh = (reference.p_healthy - candidate.p_healthy).abs();
    dg.max(dh)
}

pub fn mean_classification_error(pairs: &[(ProbPair, ProbPair)]) -> Result<QualityStats, QualityError> {
    let values: Vec<f64> = pairs.iter().map(|(r, c)| classification_error(r, c)).collect();
    QualityStats::from_values(&values)
}

pub fn predicted_label_agrees(reference: &ProbPair, candidate: &ProbPair) -> bool {
    reference.label() == candidate.label()
}

/// 2x2 counts; rows are true labels, columns predicted, both ordered
/// (glaucoma, healthy).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

/// Row-normalized confusion matrix.
pub fn normalize_confusion(m: &ConfusionMatrix) -> Result<[[f64; 2]; 2], QualityError> {
    let mut out = [[0.0; 2]; 2];
    for (i, row) in m.counts.iter().enumerate() {
        let sum = row[0] + row[1];
        if sum == 0 {
            return Err(QualityError::ZeroRow(i));
        }
        out[i] = [row[0] as f64 / sum as f64, row[1] as f64 / sum as f64];
    }
    Ok(out)
}

/// Parses `image_id,p_glaucoma,p_healthy` rows.
pub fn parse_prob_csv(text: &str) -> Result<Vec<(String, ProbPair)>, QualityError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text.lines().enumerate();
    let bad = |line: usize, reason: String| QualityError::MalformedProbabilities { line, reason };
    match lines.next() {
        Some((_, h)) if h.trim() == PROB_HEADER => {}
        other => {
            return Err(bad(1, format!("expected header '{PROB_HEADER}', found {:?}", other.map(|o| o.1))))
        }
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [id, pg, ph] = fields[..] else {
            return Err(bad(line_no, format!("expected 3 fields, found {}", fields.len())));
        };
        if id.is_empty() {
            return Err(bad(line_no, "empty image_id".into()));
        }
        let num = |s: &str| {
            crate::trace::parse_decimal(s).ok_or_else(|| bad(line_no, format!("'{s}' is not a number")))
        };
        let pair = ProbPair::new(num(pg)?, num(ph)?).map_err(|e| bad(line_no, e.to_string()))?;
        if !seen.insert(id.to_string()) {
            return Err(bad(line_no, format!("duplicate image_id '{id}'")));
        }
        out.push((id.to_string(), pair));
    }
    Ok(out)
}

/// Pairs reference and candidate probabilities by image id.
pub fn pair_by_id(
    reference: &[(String, ProbPair)],
    candidate: &[(String, ProbPair)],
) -> Result<Vec<(ProbPair, ProbPair)>, QualityError> {
    let cand: BTreeMap<&str, ProbPair> = candidate.iter().map(|(id, p)| (id.as_str(), *p)).collect();
    if reference.len() != candidate.len() {
        return Err(QualityError::LengthMismatch(reference.len(), candidate.len()));
    }
    reference
        .iter()
        .map(|(id, r)| {
            cand.get(id.as_str())
                .map(|c| (*r, *c))
                .ok_or_else(|| QualityError::UnmatchedFile(format!("image '{id}' missing from candidate")))
        })
        .collect()
}
