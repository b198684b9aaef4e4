//! Trace and metric writers. Floats are written with 17 significant digits
//! so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::potential::Sign;

/// `{:.16e}` for finite values, `null` otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

/// One arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub sign: i8,
    /// Color and leaf for multi-color runs.
    pub color: Option<(usize, usize)>,
    /// Potential after the step (`NaN` for baselines).
    pub phi: f64,
    pub delta: f64,
    pub good: Option<bool>,
    /// Metric snapshot, only at checkpoints.
    pub metrics: Vec<(String, f64)>,
}

impl StepRecord {
    pub fn new(t: usize, sign: Sign, phi: f64, delta: f64) -> Self {
        Self { t, sign: sign.as_i8(), color: None, phi, delta, good: None, metrics: Vec::new() }
    }

    pub fn colored(t: usize, color: usize, leaf: usize, psi: f64, delta: f64) -> Self {
        Self { t, sign: 0, color: Some((color, leaf)), phi: psi, delta, good: None, metrics: Vec::new() }
    }

    pub fn to_json_line(&self) -> String {
        let mut s = format!("{{\"t\":{}", self.t);
        match self.color {
            Some((c, leaf)) => {
                let _ = write!(s, ",\"color\":{c},\"leaf\":{leaf}");
            }
            None => {
                let _ = write!(s, ",\"sign\":{}", self.sign);
            }
        }
        let _ = write!(s, ",\"phi\":{},\"delta\":{}", fmt_f64(self.phi), fmt_f64(self.delta));
        if let Some(g) = self.good {
            let _ = write!(s, ",\"good\":{g}");
        }
        if !self.metrics.is_empty() {
            s.push_str(",\"metrics\":{");
            for (i, (k, v)) in self.metrics.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "\"{k}\":{}", fmt_f64(*v));
            }
            s.push('}');
        }
        s.push('}');
        s
    }
}

pub fn write_trace(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        writeln!(w, "{}", r.to_json_line())?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with a header row; every value written with [`fmt_f64`] except the
/// leading integer column `t`.
pub fn write_metrics_csv(path: &Path, columns: &[&str], rows: &[(usize, Vec<f64>)]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "t,{}", columns.join(","))?;
    for (t, vals) in rows {
        let cells: Vec<String> = vals.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{t},{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a metrics CSV back as `(columns, rows)`.
pub fn read_metrics_csv(path: &Path) -> Result<(Vec<String>, Vec<(usize, Vec<f64>)>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| crate::Error::Config(format!("{} is empty", path.display())))?;
    let columns: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let mut cells = line.split(',');
        let t = cells
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| crate::Error::Config(format!("bad row `{line}`")))?;
        let vals = cells.map(|c| c.parse::<f64>().unwrap_or(f64::NAN)).collect();
        rows.push((t, vals));
    }
    Ok((columns, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_line_format() {
        let mut r = StepRecord::new(3, Sign::Minus, 1.5, -0.25);
        r.metrics.push(("linf".into(), 2.0));
        let line = r.to_json_line();
        assert_eq!(
            line,
            "{\"t\":3,\"sign\":-1,\"phi\":1.5000000000000000e0,\"delta\":-2.5000000000000000e-1,\"metrics\":{\"linf\":2.0000000000000000e0}}"
        );
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["sign"], -1);
        let nan = StepRecord::new(1, Sign::Plus, f64::NAN, f64::NAN).to_json_line();
        assert!(serde_json::from_str::<serde_json::Value>(&nan).unwrap()["phi"].is_null());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_metrics_csv(&p, &["a", "b"], &[(1, vec![0.5, 2.0]), (4, vec![1.0, f64::NAN])]).unwrap();
        let (cols, rows) = read_metrics_csv(&p).unwrap();
        assert_eq!(cols, vec!["a", "b"]);
        assert_eq!(rows[0], (1, vec![0.5, 2.0]));
        assert!(rows[1].1[1].is_nan());
    }
}
