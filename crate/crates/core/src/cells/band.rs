use super::CellError;
use crate::solver::SweepResult;

/// Band-pass response extracted from a DC sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BandResponse {
    pub inputs: Vec<f64>,
    pub samples: Vec<f64>,
    pub theta_low: f64,
    pub theta_high: f64,
    /// Peak output, V.
    pub height: f64,
    pub width: f64,
}

/// Three-point running median; the end points are kept.
pub fn median3(y: &[f64]) -> Vec<f64> {
    let mut out = y.to_vec();
    for k in 1..y.len().saturating_sub(1) {
        let mut w = [y[k - 1], y[k], y[k + 1]];
        w.sort_by(f64::total_cmp);
        out[k] = w[1];
    }
    out
}

/// Linear-interpolated input where `y` crosses `level` between rows `k` and `k + 1`.
fn crossing(x: &[f64], y: &[f64], k: usize, level: f64) -> f64 {
    let (y0, y1) = (y[k], y[k + 1]);
    if y1 == y0 {
        return x[k];
    }
    x[k] + (level - y0) / (y1 - y0) * (x[k + 1] - x[k])
}

fn crosses(y: &[f64], k: usize, level: f64) -> bool {
    (y[k] < level) != (y[k + 1] < level)
}

/// Half-height band of the sweep column `node`.
///
/// The crossing count is taken on the 3-point median of the column; the
/// thresholds are interpolated on the raw samples around the peak.
pub fn extract_band(s: &SweepResult, node: &str) -> Result<BandResponse, CellError> {
    let y = s
        .column(node)
        .ok_or_else(|| CellError::MissingNode(node.to_string()))?;
    band_from_samples(&s.inputs(), &y)
}

pub(crate) fn band_from_samples(x: &[f64], y: &[f64]) -> Result<BandResponse, CellError> {
    let n = y.len();
    if n < 3 || x.len() != n {
        return Err(CellError::NotUnimodal { crossings: 0 });
    }
    let (peak_at, height) =
        y.iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, v)| {
                if v > best.1 {
                    (k, v)
                } else {
                    best
                }
            });
    let smooth = median3(y);
    let baseline = smooth[0].min(smooth[n - 1]).max(0.0);
    if !(height > 0.0) || height < 2.0 * baseline {
        return Err(CellError::NoBand {
            peak: height,
            baseline,
        });
    }
    let half = 0.5 * height;
    let count = (0..n - 1).filter(|&k| crosses(&smooth, k, half)).count();
    if count > 2 {
        return Err(CellError::NotUnimodal { crossings: count });
    }
    let low = (0..peak_at).find(|&k| crosses(y, k, half));
    let high = (peak_at..n - 1).find(|&k| crosses(y, k, half));
    match (low, high) {
        (Some(lo), Some(hi)) => {
            let theta_low = crossing(x, y, lo, half);
            let theta_high = crossing(x, y, hi, half);
            Ok(BandResponse {
                inputs: x.to_vec(),
                samples: y.to_vec(),
                theta_low,
                theta_high,
                height,
                width: theta_high - theta_low,
            })
        }
        _ if count < 2 => Err(CellError::NoBand {
            peak: height,
            baseline,
        }),
        _ => Err(CellError::NotUnimodal { crossings: count }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossValidation {
    pub points: usize,
    pub agree: usize,
}

impl CrossValidation {
    pub fn fraction(&self) -> f64 {
        if self.points == 0 {
            return 1.0;
        }
        self.agree as f64 / self.points as f64
    }
}

fn binarize(y: &[f64]) -> Vec<bool> {
    let half = 0.5 * y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    y.iter().map(|v| *v >= half).collect()
}

/// Agreement between a circuit response and a behavioral response on the
/// same grid, each binarized at half of its own maximum.
pub fn crossvalidate(circuit: &[f64], behavioral: &[f64]) -> CrossValidation {
    let a = binarize(circuit);
    let b = binarize(behavioral);
    let points = a.len().min(b.len());
    CrossValidation {
        points,
        agree: a.iter().zip(&b).filter(|(u, v)| u == v).count(),
    }
}

/// Row-by-row agreement of two truth tables.
pub fn crossvalidate_xor(circuit: &[u8], behavioral: &[u8]) -> CrossValidation {
    CrossValidation {
        points: circuit.len().min(behavioral.len()),
        agree: circuit
            .iter()
            .zip(behavioral)
            .filter(|(u, v)| u == v)
            .count(),
    }
}
