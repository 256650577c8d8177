//! Evaluation mathematics: frame-wise manipulation deltas, per-class
//! summaries, and Pearson correlations.
//!
//! The delta between an unmanipulated and a manipulated frame sequence
//! is the per-frame mean absolute difference, `delta_t = (1/D) *
//! ||z_t_orig - z_t_manip||_1`. Deltas are labelled with their frame's
//! phoneme class and pooled into a table of mean and population
//! standard deviation per (set, class, shift) cell, scaled by 100.

use crate::error::{Error, Result};
use crate::synthdata::{validate_segments, FrameEmbeddingSequence, PhonemeClass, PhonemeSegment};
use std::fmt::Write as _;

/// One frame's delta, tagged with the shift that produced it and the
/// frame's phoneme class.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRecord {
    pub frame: usize,
    pub manipulation: f64,
    pub class: PhonemeClass,
    pub value: f64,
}

/// Per-frame mean absolute difference between two sequences of equal
/// shape.
pub fn mae_delta(
    original: &FrameEmbeddingSequence,
    manipulated: &FrameEmbeddingSequence,
) -> Result<Vec<f64>> {
    if original.n_frames() != manipulated.n_frames() || original.dim() != manipulated.dim() {
        return Err(Error::config(format!(
            "shape mismatch: {}x{} vs {}x{}",
            original.n_frames(),
            original.dim(),
            manipulated.n_frames(),
            manipulated.dim()
        )));
    }
    let dim = original.dim() as f64;
    Ok((0..original.n_frames())
        .map(|t| {
            let l1: f64 = original
                .frame(t)
                .iter()
                .zip(manipulated.frame(t))
                .map(|(a, b)| (a - b).abs())
                .sum();
            l1 / dim
        })
        .collect())
}

/// Labels each frame's delta with its segment class and the shift
/// `manipulation` that produced the manipulated sequence.
pub fn categorize(
    deltas: &[f64],
    segments: &[PhonemeSegment],
    manipulation: f64,
) -> Result<Vec<DeltaRecord>> {
    validate_segments(segments, deltas.len())?;
    if !crate::linalg::all_finite(deltas) || deltas.iter().any(|d| *d < 0.0) {
        return Err(Error::NonFinite {
            context: "deltas must be finite and non-negative".into(),
            at: deltas
                .iter()
                .position(|d| !d.is_finite() || *d < 0.0),
        });
    }
    if !manipulation.is_finite() {
        return Err(Error::config("manipulation shift must be finite"));
    }
    let mut records = Vec::with_capacity(deltas.len());
    for seg in segments {
        for frame in seg.start_frame..seg.end_frame {
            records.push(DeltaRecord {
                frame,
                manipulation,
                class: seg.class,
                value: deltas[frame],
            });
        }
    }
    Ok(records)
}

/// One cell of the summary table. `mean` and `std` are statistics of
/// `delta * 100` (population standard deviation).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub set_label: String,
    pub class: PhonemeClass,
    pub delta_mag: f64,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Summary of deltas per (class, shift) cell. Cells without records
/// are absent rather than zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    /// Aligned plain-text rendering; column order is set, class, shift,
    /// mean, std, n.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:<10} {:>6} {:>9} {:>9} {:>6}",
            "set", "class", "shift", "mean", "std", "n"
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:<12} {:<10} {:>6.2} {:>9.2} {:>9.2} {:>6}",
                row.set_label,
                row.class.as_str(),
                row.delta_mag,
                row.mean,
                row.std,
                row.n
            );
        }
        out
    }
}

const GRID_MATCH_TOL: f64 = 1e-12;

/// Pools records into (class, shift) cells over the requested grid.
///
/// With `combine_signs` the grid entries are magnitudes and records
/// for `+shift` and `-shift` share a cell; otherwise grid entries are
/// signed and matched exactly. Records whose shift is not on the grid
/// are ignored. Statistics are of `delta * 100` with population
/// standard deviation.
pub fn summarize(
    records: &[DeltaRecord],
    set_label: &str,
    grid: &[f64],
    combine_signs: bool,
) -> Result<SummaryTable> {
    if grid.is_empty() {
        return Err(Error::config("summary grid must be non-empty"));
    }
    if !crate::linalg::all_finite(grid) {
        return Err(Error::config("summary grid must be finite"));
    }
    let mut rows = Vec::new();
    for class in PhonemeClass::ALL {
        for cell in grid {
            let values: Vec<f64> = records
                .iter()
                .filter(|r| {
                    let key = if combine_signs {
                        r.manipulation.abs()
                    } else {
                        r.manipulation
                    };
                    r.class == class && (key - cell).abs() <= GRID_MATCH_TOL
                })
                .map(|r| r.value * 100.0)
                .collect();
            if values.is_empty() {
                continue;
            }
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            rows.push(SummaryRow {
                set_label: set_label.to_string(),
                class,
                delta_mag: *cell,
                mean,
                std: var.sqrt(),
                n,
            });
        }
    }
    Ok(SummaryTable { rows })
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::config(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedStatistic(
            "correlation needs at least two samples".into(),
        ));
    }
    if !crate::linalg::all_finite(x) || !crate::linalg::all_finite(y) {
        return Err(Error::NonFinite {
            context: "correlation input".into(),
            at: None,
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedStatistic(
            "correlation of a constant sequence is undefined".into(),
        ));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Named correlation result.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEntry {
    pub name: String,
    pub r: f64,
    pub n: usize,
}

/// Collection of named correlations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrelationReport {
    pub entries: Vec<CorrelationEntry>,
}

impl CorrelationReport {
    pub fn push(&mut self, name: impl Into<String>, x: &[f64], y: &[f64]) -> Result<()> {
        let r = pearson(x, y)?;
        self.entries.push(CorrelationEntry {
            name: name.into(),
            r,
            n: x.len(),
        });
        Ok(())
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<24} {:>8} {:>6}", "feature", "R", "n");
        for e in &self.entries {
            let _ = writeln!(out, "{:<24} {:>8.4} {:>6}", e.name, e.r, e.n);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use PhonemeClass::*;

    fn seq(rows: Vec<Vec<f64>>, segments: Vec<PhonemeSegment>) -> FrameEmbeddingSequence {
        FrameEmbeddingSequence::new(Matrix::from_rows(rows).unwrap(), segments).unwrap()
    }

    #[test]
    fn mae_delta_hand_case_and_identity() {
        let segs = vec![PhonemeSegment::new(Voiced, 0, 1)];
        let a = seq(vec![vec![1.0, 2.0]], segs.clone());
        let b = seq(vec![vec![2.0, 4.0]], segs.clone());
        assert_eq!(mae_delta(&a, &b).unwrap(), vec![1.5]);
        assert_eq!(mae_delta(&a, &a).unwrap(), vec![0.0]);
    }

    #[test]
    fn mae_delta_is_homogeneous_and_checks_shape() {
        let segs = vec![PhonemeSegment::new(Voiced, 0, 2)];
        let a = seq(vec![vec![1.0, -2.0, 0.5], vec![0.0, 1.0, 2.0]], segs.clone());
        let b = seq(vec![vec![0.5, 1.0, 0.0], vec![1.0, 1.0, -1.0]], segs.clone());
        let base = mae_delta(&a, &b).unwrap();
        let scale = |s: &FrameEmbeddingSequence, lambda: f64| {
            let rows: Vec<Vec<f64>> = (0..s.n_frames())
                .map(|t| s.frame(t).iter().map(|x| lambda * x).collect())
                .collect();
            seq(rows, s.segments().to_vec())
        };
        let scaled = mae_delta(&scale(&a, -3.0), &scale(&b, -3.0)).unwrap();
        for (d, e) in base.iter().zip(&scaled) {
            assert!((3.0 * d - e).abs() < 1e-12);
        }
        let short = seq(vec![vec![0.0, 0.0, 0.0]], vec![PhonemeSegment::new(Voiced, 0, 1)]);
        assert!(mae_delta(&a, &short).is_err());
    }

    #[test]
    fn categorize_labels_frames_by_segment() {
        let segments = vec![
            PhonemeSegment::new(Voiced, 0, 2),
            PhonemeSegment::new(Unvoiced, 2, 3),
            PhonemeSegment::new(Silence, 3, 5),
        ];
        let deltas = [0.1, 0.2, 0.3, 0.0, 0.0];
        let records = categorize(&deltas, &segments, -0.5).unwrap();
        assert_eq!(records.len(), 5);
        let classes: Vec<PhonemeClass> = records.iter().map(|r| r.class).collect();
        assert_eq!(classes, vec![Voiced, Voiced, Unvoiced, Silence, Silence]);
        assert!(records.iter().all(|r| r.manipulation == -0.5));
        assert_eq!(records[2].value, 0.3);
        assert_eq!(records[2].frame, 2);

        assert!(categorize(&deltas[..4], &segments, 0.5).is_err());
        assert!(categorize(&[0.1, f64::NAN], &segments[..1], 0.5).is_err());
        assert!(categorize(&[0.1, -0.2], &segments[..1], 0.5).is_err());
        assert_eq!(categorize(&[], &[], 0.5).unwrap(), vec![]);
    }

    fn record(class: PhonemeClass, manipulation: f64, value: f64) -> DeltaRecord {
        DeltaRecord {
            frame: 0,
            manipulation,
            class,
            value,
        }
    }

    #[test]
    fn summarize_hand_statistics() {
        let records = vec![record(Voiced, 0.5, 0.1), record(Voiced, 0.5, 0.3)];
        let table = summarize(&records, "seen", &[0.5], true).unwrap();
        assert_eq!(table.rows.len(), 1);
        let row = &table.rows[0];
        assert!((row.mean - 20.0).abs() < 1e-12);
        assert!((row.std - 10.0).abs() < 1e-12);
        assert_eq!(row.n, 2);

        let constant = vec![record(Unvoiced, 1.0, 0.05); 4];
        let table = summarize(&constant, "seen", &[1.0], true).unwrap();
        assert!((table.rows[0].mean - 5.0).abs() < 1e-12);
        assert_eq!(table.rows[0].std, 0.0);
    }

    #[test]
    fn summarize_pools_signs_when_asked() {
        let records = vec![
            record(Voiced, 0.5, 0.1),
            record(Voiced, -0.5, 0.3),
            record(Voiced, 0.5, 0.2),
        ];
        let pooled = summarize(&records, "s", &[0.5], true).unwrap();
        assert_eq!(pooled.rows.len(), 1);
        assert_eq!(pooled.rows[0].n, 3);
        assert!((pooled.rows[0].mean - 20.0).abs() < 1e-12);

        // Pooling equals summarizing the sign-collapsed multiset.
        let collapsed: Vec<DeltaRecord> = records
            .iter()
            .map(|r| record(r.class, r.manipulation.abs(), r.value))
            .collect();
        let direct = summarize(&collapsed, "s", &[0.5], false).unwrap();
        assert_eq!(pooled, direct);

        let signed = summarize(&records, "s", &[-0.5, 0.5], false).unwrap();
        assert_eq!(signed.rows.len(), 2);
        assert_eq!(signed.rows[0].delta_mag, -0.5);
        assert_eq!(signed.rows[0].n, 1);
        assert_eq!(signed.rows[1].n, 2);
    }

    #[test]
    fn summarize_leaves_empty_cells_absent() {
        let records = vec![record(Voiced, 0.25, 0.1)];
        let table = summarize(&records, "s", &[0.25, 0.75], true).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].delta_mag, 0.25);
        assert!(summarize(&records, "s", &[], true).is_err());
    }

    #[test]
    fn render_matches_table_layout() {
        let table = SummaryTable {
            rows: vec![
                SummaryRow {
                    set_label: "seen".into(),
                    class: Voiced,
                    delta_mag: 1.0,
                    mean: 23.0,
                    std: 15.0,
                    n: 420,
                },
                SummaryRow {
                    set_label: "seen".into(),
                    class: Unvoiced,
                    delta_mag: 1.0,
                    mean: 8.0,
                    std: 6.0,
                    n: 130,
                },
            ],
        };
        let text = table.render_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "set          class       shift      mean       std      n"
        );
        assert_eq!(
            lines[1],
            "seen         voiced       1.00     23.00     15.00    420"
        );
        assert_eq!(
            lines[2],
            "seen         unvoiced     1.00      8.00      6.00    130"
        );
    }

    #[test]
    fn pearson_hand_cases() {
        let x = [1.0, 2.0, 3.0];
        assert!((pearson(&x, &[6.0, 4.0, 5.0]).unwrap() - (-0.5)).abs() < 1e-12);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_affine_invariance_and_sign_flip() {
        let x = [0.3, -1.2, 2.5, 0.0, 1.7];
        let y = [1.0, 0.2, -0.4, 2.2, 0.9];
        let r = pearson(&x, &y).unwrap();
        let y_aff: Vec<f64> = y.iter().map(|v| 4.5 * v - 2.0).collect();
        assert!((pearson(&x, &y_aff).unwrap() - r).abs() < 1e-12);
        let y_neg: Vec<f64> = y.iter().map(|v| -v).collect();
        assert!((pearson(&x, &y_neg).unwrap() + r).abs() < 1e-12);
        assert!(r.abs() <= 1.0);
    }

    #[test]
    fn pearson_rejects_degenerate_input() {
        assert!(matches!(
            pearson(&[1.0], &[2.0]),
            Err(Error::UndefinedStatistic(_))
        ));
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedStatistic(_))
        ));
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn correlation_report_collects_and_renders() {
        let mut report = CorrelationReport::default();
        report
            .push("creak", &[0.0, 0.5, 1.0], &[0.1, 0.6, 0.9])
            .unwrap();
        assert_eq!(report.entries.len(), 1);
        assert_eq!(report.entries[0].n, 3);
        assert!(report.entries[0].r > 0.9);
        let text = report.render_text();
        assert!(text.starts_with("feature"));
        assert!(text.contains("creak"));
    }
}
