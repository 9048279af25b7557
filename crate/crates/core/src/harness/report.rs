//! Result rows, CSV output and summary statistics shared by the studies.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LimeadeError, Result};
use crate::metrics::{self, TTest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Baseline,
    Limeade,
}

impl Arm {
    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Baseline => "baseline",
            Arm::Limeade => "limeade",
        }
    }
}

/// One measurement. `group` is the class, feed or session; `arm` doubles as
/// the display policy in the tradeoff study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub study: String,
    pub group: String,
    pub seed: u64,
    pub arm: String,
    pub step: usize,
    pub metric: String,
    pub value: f64,
}

impl ResultRow {
    pub fn new(study: &str, group: impl Into<String>, seed: u64, arm: &str, metric: &str, value: f64) -> Self {
        Self {
            study: study.into(),
            group: group.into(),
            seed,
            arm: arm.into(),
            step: 0,
            metric: metric.into(),
            value,
        }
    }

    pub fn at_step(mut self, step: usize) -> Self {
        self.step = step;
        self
    }
}

pub fn write_csv_to<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        if !r.value.is_finite() {
            return Err(LimeadeError::Numeric(format!(
                "non-finite {} for {}/{}",
                r.metric, r.group, r.arm
            )));
        }
        w.serialize(r).map_err(|e| LimeadeError::Value(e.to_string()))?;
    }
    w.flush().map_err(|e| LimeadeError::Value(e.to_string()))
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| LimeadeError::Value(format!("{}: {e}", path.display())))?;
    write_csv_to(rows, std::io::BufWriter::new(f))
}

pub fn to_csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv_to(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| LimeadeError::Value(e.to_string()))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| LimeadeError::Value(e.to_string()))?;
    r.deserialize()
        .map(|row| row.map_err(|e| LimeadeError::Value(e.to_string())))
        .collect()
}

/// Mean, standard error and count of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            mean: metrics::mean(xs),
            se: metrics::standard_error(xs),
            n: xs.len(),
        }
    }
}

/// Paired comparison of LIMEADE against baseline; `None` fields mark a
/// degenerate test (fewer than two pairs or zero variance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: Stat,
    pub limeade: Stat,
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub adjusted_p: Option<f64>,
}

impl Comparison {
    pub fn paired(baseline: &[f64], limeade: &[f64]) -> Self {
        let test: Option<TTest> = metrics::paired_t_test(limeade, baseline).ok();
        Self {
            baseline: Stat::of(baseline),
            limeade: Stat::of(limeade),
            t: test.map(|t| t.t),
            p: test.map(|t| t.p_two_sided),
            adjusted_p: None,
        }
    }

    pub fn winner(&self) -> &'static str {
        match self.limeade.mean.total_cmp(&self.baseline.mean) {
            std::cmp::Ordering::Greater => "limeade",
            std::cmp::Ordering::Less => "baseline",
            std::cmp::Ordering::Equal => "tie",
        }
    }
}

/// Fills `adjusted_p` across a family of comparisons with Holm's method.
/// Degenerate tests are left out of the family.
pub fn holm_adjust<'a>(family: impl IntoIterator<Item = &'a mut Comparison>) -> Result<()> {
    let mut members: Vec<&mut Comparison> = family.into_iter().filter(|c| c.p.is_some()).collect();
    let ps: Vec<f64> = members.iter().map(|c| c.p.unwrap_or(1.0)).collect();
    let adj = metrics::holm_bonferroni(&ps)?;
    for (c, a) in members.iter_mut().zip(adj) {
        c.adjusted_p = Some(a);
    }
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| LimeadeError::Value(e.to_string()))?;
    std::fs::write(path, s + "\n").map_err(|e| LimeadeError::Value(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            ResultRow::new("image", "class_0", 3, "baseline", "delta_accuracy", 0.125),
            ResultRow::new("image", "class_0", 3, "limeade", "delta_accuracy", -0.1).at_step(2),
        ];
        let s = to_csv_string(&rows).unwrap();
        assert!(s.starts_with("study,group,seed,arm,step,metric,value\n"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_csv(&rows, &p).unwrap();
        assert_eq!(read_csv(&p).unwrap(), rows);
    }

    #[test]
    fn rejects_non_finite() {
        let rows = vec![ResultRow::new("x", "g", 0, "baseline", "m", f64::NAN)];
        assert!(to_csv_string(&rows).is_err());
    }

    #[test]
    fn holm_skips_degenerate() {
        let mut a = Comparison::paired(&[0.0, 1.0, 2.0], &[0.5, 1.0, 3.0]);
        let mut b = Comparison::paired(&[1.0, 1.0], &[2.0, 2.0]);
        holm_adjust([&mut a, &mut b]).unwrap();
        assert_eq!(a.adjusted_p, a.p);
        assert!(b.p.is_none() && b.adjusted_p.is_none());
    }
}
