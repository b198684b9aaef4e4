//! Growth-rate fits and checkpoint schedules.

use serde::Serialize;

/// Least-squares slope of `ln(metric)` against `ln(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Minimum number of checkpoints a fit needs.
pub const MIN_FIT_POINTS: usize = 8;

/// Fits the running maximum of `series` (pairs `(t, metric)`, increasing
/// `t`) over `t in [t_lo, t_hi]`. Non-positive values are skipped; returns
/// `None` with fewer than [`MIN_FIT_POINTS`] usable points.
pub fn slope_fit(series: &[(f64, f64)], t_lo: f64, t_hi: f64) -> Option<SlopeFit> {
    let mut running = f64::NEG_INFINITY;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter_map(|&(t, m)| {
            running = running.max(m);
            (t >= t_lo && t <= t_hi && running > 0.0).then(|| (t.ln(), running.ln()))
        })
        .collect();
    let k = pts.len();
    if k < MIN_FIT_POINTS {
        return None;
    }
    let kf = k as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / kf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / kf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = if k > 2 { (rss / (kf - 2.0) / sxx).sqrt() } else { 0.0 };
    Some(SlopeFit { slope, stderr, intercept, points: k })
}

/// `1, ceil(1 * r), ...` strictly increasing, ending exactly at `horizon`.
pub fn geometric_checkpoints(horizon: usize, ratio: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut t = 1usize;
    while t < horizon {
        out.push(t);
        t = ((t as f64 * ratio).ceil() as usize).max(t + 1);
    }
    if horizon > 0 {
        out.push(horizon);
    }
    out
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        geometric_checkpoints(100_000, 1.25).into_iter().map(|t| (t as f64, f(t as f64))).collect()
    }

    #[test]
    fn square_root_growth() {
        let fit = slope_fit(&synthetic(|t| 3.0 * t.sqrt()), 1e3, 1e5).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-6);
    }

    #[test]
    fn constant_metric() {
        let fit = slope_fit(&synthetic(|_| 2.0), 1e3, 1e5).unwrap();
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn polylog_growth_matches_local_exponent() {
        // d ln((ln t)^4) / d ln t = 4 / ln t; the fit must land between the
        // local exponents at the ends of the window and fall as it widens.
        let series = synthetic(|t| t.ln().powi(4));
        let fit = slope_fit(&series, 1e3, 1e5).unwrap();
        assert!(fit.slope < 4.0 / 1e3f64.ln() && fit.slope > 4.0 / 1e5f64.ln());
        let chord = 4.0 * (1e5f64.ln().ln() - 1e3f64.ln().ln()) / (1e5f64.ln() - 1e3f64.ln());
        assert!((fit.slope - chord).abs() < 0.02);
        let later = slope_fit(&series, 1e4, 1e5).unwrap();
        assert!(later.slope < fit.slope);
    }

    #[test]
    fn too_few_points() {
        assert!(slope_fit(&[(1.0, 1.0), (2.0, 2.0)], 0.0, 10.0).is_none());
    }

    #[test]
    fn checkpoints_are_increasing() {
        let cps = geometric_checkpoints(1000, 1.25);
        assert_eq!(cps[0], 1);
        assert_eq!(*cps.last().unwrap(), 1000);
        assert!(cps.windows(2).all(|w| w[0] < w[1]));
        assert!(geometric_checkpoints(0, 1.25).is_empty());
        assert_eq!(geometric_checkpoints(1, 1.25), vec![1]);
    }
}
