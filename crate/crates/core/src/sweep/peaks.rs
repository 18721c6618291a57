//! Peak detection on `Δ_w(q)` and log-log scaling fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A local maximum must rise this fraction of its own height above the
/// higher of its two flanking minima.
pub const MIN_RELATIVE_PROMINENCE: f64 = 0.25;

/// A local maximum must reach this fraction of the curve's maximum. Weak
/// higher-harmonic resonances (near 6.7 and 13.3 nm⁻¹) stay below it.
pub const MIN_HEIGHT_FRACTION: f64 = 3e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub q: f64,
    /// Unsmoothed value at the peak.
    pub height: f64,
    /// Prominence of the smoothed curve divided by the smoothed height.
    pub relative_prominence: f64,
}

/// Three-point running median; the end points are kept.
pub fn median3(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    for i in 1..values.len().saturating_sub(1) {
        let mut w = [values[i - 1], values[i], values[i + 1]];
        w.sort_by(f64::total_cmp);
        out[i] = w[1];
    }
    out
}

/// Interior local maxima of the median-smoothed curve with `q` inside
/// `window` (inclusive), relative prominence at least
/// [`MIN_RELATIVE_PROMINENCE`] and height at least [`MIN_HEIGHT_FRACTION`]
/// of the whole curve's maximum. Prominence is measured over the whole
/// curve, so a maximum near the window edge is judged by its real flanks.
pub fn detect_peaks(q: &[f64], values: &[f64], window: (f64, f64)) -> Vec<Peak> {
    assert_eq!(q.len(), values.len());
    let s = median3(values);
    let n = s.len();
    let floor = MIN_HEIGHT_FRACTION * s.iter().copied().fold(0.0, f64::max);
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if !(s[i] > s[i - 1]) {
            i += 1;
            continue;
        }
        // the median flattens a sharp top into a plateau; take all of it
        let mut j = i;
        while j + 1 < n && s[j + 1] == s[i] {
            j += 1;
        }
        if j + 1 == n || s[j + 1] > s[i] {
            i = j + 1;
            continue;
        }
        let top = (i..=j).max_by(|&a, &b| values[a].total_cmp(&values[b])).expect("non-empty");
        let level = s[i];
        i = j + 1;
        if q[top] < window.0 || q[top] > window.1 || level < floor {
            continue;
        }
        // lowest point on each side before the curve climbs above the peak
        let left = s[..top].iter().rev().take_while(|&&v| v <= level).fold(level, |m, &v| m.min(v));
        let right = s[top + 1..].iter().take_while(|&&v| v <= level).fold(level, |m, &v| m.min(v));
        let prominence = level - left.max(right);
        let relative = if level > 0.0 { prominence / level } else { 0.0 };
        if relative >= MIN_RELATIVE_PROMINENCE {
            out.push(Peak {
                q: q[top],
                height: values[top],
                relative_prominence: relative,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    /// Mean peak position over the concentrations.
    pub q_peak: f64,
    /// `(n̄_Ge, height in eV)`.
    pub heights: Vec<(f64, f64)>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
}

/// Least-squares line through `(ln n̄_Ge, ln height)`. `points` holds
/// `(n̄_Ge, q_peak, height)`.
pub fn fit_scaling(points: &[(f64, f64, f64)]) -> Result<PeakFit> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    if let Some(&(_, _, h)) = points.iter().find(|p| !(p.2 > 0.0)) {
        return Err(Error::NonPositiveHeight(h));
    }
    if let Some(&(n, _, _)) = points.iter().find(|p| !(p.0 > 0.0)) {
        return Err(Error::Config(format!("scaling fit needs positive concentrations, got {n}")));
    }
    let m = points.len() as f64;
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.2.ln()).collect();
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("scaling fit needs distinct concentrations".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(&y).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_stderr = if points.len() > 2 { (ssr / (m - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(PeakFit {
        q_peak: points.iter().map(|p| p.1).sum::<f64>() / m,
        heights: points.iter().map(|p| (p.0, p.2)).collect(),
        slope,
        slope_stderr,
        intercept,
    })
}
