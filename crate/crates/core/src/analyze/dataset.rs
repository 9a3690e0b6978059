use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AnalyzeError;
use crate::solve::Trajectory;

/// Observed time series. Missing values are `None` and are skipped by the
/// loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Dataset {
    pub times: Vec<f64>,
    pub observations: BTreeMap<String, Vec<Option<f64>>>,
}

fn err(msg: impl Into<String>) -> AnalyzeError {
    AnalyzeError::Dataset(msg.into())
}

impl Dataset {
    pub fn validate(&self) -> Result<(), AnalyzeError> {
        if self.times.iter().any(|t| !t.is_finite()) {
            return Err(err("times must be finite"));
        }
        if self.times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(err("times must be strictly increasing"));
        }
        for (name, series) in &self.observations {
            if series.len() != self.times.len() {
                return Err(err(format!(
                    "series '{name}' has {} values for {} times",
                    series.len(),
                    self.times.len()
                )));
            }
            if series.iter().flatten().any(|x| !x.is_finite()) {
                return Err(err(format!("series '{name}' has a non-finite value")));
            }
        }
        Ok(())
    }

    /// Samples selected columns of a trajectory at the given times.
    pub fn from_trajectory(
        traj: &Trajectory,
        times: &[f64],
        vars: &[&str],
    ) -> Result<Self, AnalyzeError> {
        let mut observations = BTreeMap::new();
        for &v in vars {
            let k = traj
                .var_index(v)
                .ok_or_else(|| err(format!("trajectory has no variable '{v}'")))?;
            let series = times
                .iter()
                .map(|&t| {
                    traj.interpolate(t)
                        .map(|s| Some(s[k]))
                        .ok_or_else(|| err(format!("time {t} outside the trajectory")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            observations.insert(v.to_string(), series);
        }
        Ok(Self {
            times: times.to_vec(),
            observations,
        })
    }

    /// Parses `t,<name>,<name>,...` with blank cells as missing.
    pub fn from_csv_str(text: &str) -> Result<Self, AnalyzeError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| err(e.to_string()))?.clone();
        if headers.get(0) != Some("t") {
            return Err(err("first column must be 't'"));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut seen = std::collections::BTreeSet::new();
        for n in &names {
            if n.is_empty() || !seen.insert(n) {
                return Err(err(format!("empty or repeated column name '{n}'")));
            }
        }
        let mut times = Vec::new();
        let mut cols: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| err(e.to_string()))?;
            let line = row + 2;
            let num = |s: &str, what: &str| -> Result<f64, AnalyzeError> {
                s.parse::<f64>()
                    .map_err(|_| err(format!("line {line}: cannot parse {what} '{s}'")))
            };
            times.push(num(rec.get(0).unwrap_or(""), "time")?);
            for (k, col) in cols.iter_mut().enumerate() {
                let cell = rec.get(k + 1).unwrap_or("");
                col.push(if cell.is_empty() {
                    None
                } else {
                    Some(num(cell, &names[k])?)
                });
            }
        }
        let ds = Self {
            times,
            observations: names.into_iter().zip(cols).collect(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, AnalyzeError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for n in self.observations.keys() {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&t.to_string());
            for series in self.observations.values() {
                out.push(',');
                if let Some(x) = series[i] {
                    out.push_str(&x.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_gaps() {
        let ds = Dataset::from_csv_str("t,I,R\n0,0.1,\n1, 0.2 ,0.05\n2,,0.1\n").unwrap();
        assert_eq!(ds.times, [0.0, 1.0, 2.0]);
        assert_eq!(ds.observations["I"], [Some(0.1), Some(0.2), None]);
        assert_eq!(ds.observations["R"], [None, Some(0.05), Some(0.1)]);
        assert_eq!(Dataset::from_csv_str(&ds.to_csv()).unwrap(), ds);
    }

    #[test]
    fn csv_errors() {
        assert!(Dataset::from_csv_str("time,I\n0,1\n").is_err());
        assert!(Dataset::from_csv_str("t,I\n1,1\n0,2\n").is_err());
        assert!(Dataset::from_csv_str("t,I\n0,abc\n").is_err());
        assert!(Dataset::from_csv_str("t,I,I\n0,1,2\n").is_err());
    }
}
