//! Learning-curve records.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const HEADER: &str = "iteration,split,metric,value";

#[derive(Clone, Debug, PartialEq)]
pub struct RecordRow {
    pub iteration: usize,
    pub split: String,
    pub metric: String,
    pub value: f64,
}

/// Rows of `(iteration, split, metric, value)` in the order they were logged.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<RecordRow>,
}

impl RunRecord {
    pub fn push(&mut self, iteration: usize, split: &str, metric: &str, value: f64) {
        self.rows.push(RecordRow { iteration, split: split.into(), metric: metric.into(), value });
    }

    /// Distinct evaluation iterations in order.
    pub fn iterations(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.iteration) {
                out.push(r.iteration);
            }
        }
        out
    }

    /// The most recent value of `metric` on `split`.
    pub fn last(&self, split: &str, metric: &str) -> Option<f64> {
        self.rows.iter().rev().find(|r| r.split == split && r.metric == metric).map(|r| r.value)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(HEADER);
        s.push('\n');
        for r in &self.rows {
            writeln!(s, "{},{},{},{:?}", r.iteration, r.split, r.metric, r.value).unwrap();
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(Error::InvalidParameter(format!("run record must start with `{HEADER}`")));
        }
        let mut rec = RunRecord::default();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let bad = || Error::InvalidParameter(format!("malformed run record line {}: {line}", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            rec.push(f[0].parse().map_err(|_| bad())?, f[1], f[2], f[3].parse().map_err(|_| bad())?);
        }
        Ok(rec)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_csv())?)
    }
}

/// Concatenates records into one CSV with a leading `variant` column.
pub fn merge_curves(runs: &[(String, RunRecord)]) -> String {
    let mut s = format!("variant,{HEADER}\n");
    for (name, rec) in runs {
        for r in &rec.rows {
            writeln!(s, "{name},{},{},{},{:?}", r.iteration, r.split, r.metric, r.value).unwrap();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut r = RunRecord::default();
        r.push(0, "test", "accuracy", 0.5);
        r.push(50, "train", "loss", 0.1 + 0.2);
        r.push(50, "test", "accuracy", 1.0);
        let text = r.to_csv();
        assert!(text.starts_with("iteration,split,metric,value\n0,test,accuracy,0.5\n"));
        assert_eq!(RunRecord::from_csv(&text).unwrap(), r);
        assert_eq!(r.iterations(), vec![0, 50]);
        assert_eq!(r.last("test", "accuracy"), Some(1.0));
        assert!(RunRecord::from_csv("a,b\n").is_err());
    }

    #[test]
    fn merged_has_variant_column() {
        let mut r = RunRecord::default();
        r.push(0, "test", "f1", 0.25);
        let m = merge_curves(&[("gn".into(), r.clone()), ("ugn".into(), r)]);
        assert_eq!(m, "variant,iteration,split,metric,value\ngn,0,test,f1,0.25\nugn,0,test,f1,0.25\n");
    }
}
