use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::imaging::Frame;

/// Ground-truth labels, CDNET convention.
pub mod label {
    pub const STATIC: u8 = 0;
    pub const SHADOW: u8 = 50;
    pub const OUTSIDE_ROI: u8 = 85;
    pub const UNKNOWN: u8 = 170;
    pub const MOTION: u8 = 255;
}

/// Pixel-level confusion counts.
///
/// `fn_` counts true foreground pixels classified as background (false
/// negatives); some literature calls this quantity "TN".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn evaluated(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn scaled(&self, factor: u64) -> Self {
        Self {
            tp: self.tp * factor,
            fn_: self.fn_ * factor,
            fp: self.fp * factor,
            tn: self.tn * factor,
        }
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fn_: self.fn_ + o.fn_,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
        }
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub recall: f64,
    pub precision: f64,
    pub f_measure: f64,
    /// Set when some ratio was 0/0 and was reported as 0.
    pub degenerate: bool,
}

/// Compares a binary mask with a ground-truth frame. Pixels labeled
/// outside-ROI or unknown, and pixels where `roi` is zero, are skipped.
/// Shadow counts as background.
pub fn compare(
    mask: &Frame,
    gt: &Frame,
    roi: Option<&Frame>,
) -> Result<ConfusionCounts, EvaluationError> {
    let dims = |f: &Frame| (f.width(), f.height());
    if dims(mask) != dims(gt) {
        return Err(EvaluationError::Dimensions {
            what: "mask vs ground truth".into(),
            left: dims(mask),
            right: dims(gt),
        });
    }
    if let Some(r) = roi {
        if dims(r) != dims(gt) {
            return Err(EvaluationError::Dimensions {
                what: "ROI vs ground truth".into(),
                left: dims(r),
                right: dims(gt),
            });
        }
    }
    let mut c = ConfusionCounts::default();
    for (p, (&m, &g)) in mask.data().iter().zip(gt.data()).enumerate() {
        if g == label::OUTSIDE_ROI || g == label::UNKNOWN {
            continue;
        }
        if roi.is_some_and(|r| r.data()[p] == 0) {
            continue;
        }
        let truth = g > label::UNKNOWN;
        let detected = m > 127;
        match (truth, detected) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Harmonic mean of recall and precision, 0 when both are 0.
pub fn f_measure(recall: f64, precision: f64) -> f64 {
    if recall + precision > 0.0 {
        2.0 * recall * precision / (recall + precision)
    } else {
        0.0
    }
}

pub fn metrics(c: &ConfusionCounts) -> MetricReport {
    let recall = ratio(c.tp, c.tp + c.fn_);
    let precision = ratio(c.tp, c.tp + c.fp);
    let degenerate = recall.is_none() || precision.is_none();
    let (recall, precision) = (recall.unwrap_or(0.0), precision.unwrap_or(0.0));
    let f = f_measure(recall, precision);
    MetricReport {
        recall,
        precision,
        f_measure: f,
        degenerate: degenerate || (recall + precision == 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(data: &[u8]) -> Frame {
        Frame::new(4, 4, data.to_vec()).unwrap()
    }

    /// 10 ground-truth foreground pixels; the mask hits 8 of them plus 2
    /// background pixels.
    pub(crate) fn hand_built() -> (Frame, Frame) {
        let mut gt = [0u8; 16];
        let mut mask = [0u8; 16];
        gt[..10].fill(255);
        mask[..8].fill(255);
        mask[14] = 255;
        mask[15] = 255;
        (frame(&mask), frame(&gt))
    }

    #[test]
    fn perfect_and_empty_masks() {
        let (_, gt) = hand_built();
        let c = compare(&gt, &gt, None).unwrap();
        assert_eq!((c.tp, c.fn_, c.fp), (10, 0, 0));
        let empty = Frame::filled(4, 4, 0).unwrap();
        let c = compare(&empty, &gt, None).unwrap();
        assert_eq!((c.tp, c.fn_, c.fp), (0, 10, 0));
    }

    #[test]
    fn hand_built_case() {
        let (mask, gt) = hand_built();
        let c = compare(&mask, &gt, None).unwrap();
        assert_eq!((c.tp, c.fn_, c.fp, c.tn), (8, 2, 2, 4));
        assert_eq!(c.evaluated(), 16);
        let m = metrics(&c);
        assert!((m.recall - 0.8).abs() < 1e-12);
        assert!((m.precision - 0.8).abs() < 1e-12);
        assert!((m.f_measure - 0.8).abs() < 1e-12);
        assert!(!m.degenerate);
    }

    #[test]
    fn excluded_labels_and_roi() {
        let gt = frame(&[255, 85, 170, 50, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        let mask = Frame::filled(4, 4, 255).unwrap();
        let c = compare(&mask, &gt, None).unwrap();
        assert_eq!((c.tp, c.fp, c.evaluated()), (1, 13, 14));
        let mut roi = [255u8; 16];
        roi[4..].fill(0);
        let c = compare(&mask, &gt, Some(&frame(&roi))).unwrap();
        assert_eq!((c.tp, c.fp, c.evaluated()), (1, 1, 2));
    }

    #[test]
    fn dimension_mismatch() {
        let a = Frame::filled(4, 4, 0).unwrap();
        let b = Frame::filled(4, 3, 0).unwrap();
        assert!(matches!(
            compare(&a, &b, None),
            Err(EvaluationError::Dimensions { .. })
        ));
    }

    #[test]
    fn degenerate_cases_are_flagged() {
        let m = metrics(&ConfusionCounts {
            tn: 5,
            ..Default::default()
        });
        assert_eq!((m.recall, m.precision, m.f_measure), (0.0, 0.0, 0.0));
        assert!(m.degenerate);
    }

    #[test]
    fn additivity_and_scale_freedom() {
        let (mask, gt) = hand_built();
        let c = compare(&mask, &gt, None).unwrap();
        let total: ConfusionCounts = [c, c].into_iter().sum();
        assert_eq!((total.tp, total.fn_, total.fp), (16, 4, 4));
        assert!((metrics(&total).f_measure - 0.8).abs() < 1e-12);
        for k in [2u64, 7, 1000] {
            assert_eq!(metrics(&c.scaled(k)), metrics(&c));
        }
    }

    #[test]
    fn f_measure_is_between_recall_and_precision() {
        for tp in 0..6u64 {
            for fn_ in 0..6u64 {
                for fp in 0..6u64 {
                    let m = metrics(&ConfusionCounts { tp, fn_, fp, tn: 0 });
                    if m.recall + m.precision > 0.0 {
                        let lo = m.recall.min(m.precision);
                        let hi = m.recall.max(m.precision);
                        assert!(lo - 1e-15 <= m.f_measure && m.f_measure <= hi + 1e-15);
                    }
                }
            }
        }
    }
}
