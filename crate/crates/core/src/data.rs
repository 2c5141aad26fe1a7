//! CSV ingestion.
//!
//! Three layouts are accepted:
//!
//! - `freq`: columns `sum_score,count`, one row per sum score.
//! - `individual`: one row per respondent with a `sum_score` column and any
//!   number of predictor columns.
//! - `items`: one row per respondent with 0/1 item columns `y1..yM` (summed
//!   into the sum score) and any number of predictor columns.
//!
//! Predictor cells are kept as text until a model asks for them, so that
//! categorical columns can be dummy-coded with `column=level`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::models::{ModelSpec, Observation};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    Freq,
    Individual,
    Items,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "freq" => Ok(DataFormat::Freq),
            "individual" => Ok(DataFormat::Individual),
            "items" => Ok(DataFormat::Items),
            other => Err(Error::InvalidSpec(format!("unknown data format `{other}`"))),
        }
    }
}

/// A predictor column, optionally dummy-coded against one level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PredictorRef {
    pub column: String,
    pub level: Option<String>,
}

impl FromStr for PredictorRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (column, level) = match s.split_once('=') {
            Some((c, l)) => (c.trim(), Some(l.trim().to_string())),
            None => (s.trim(), None),
        };
        if column.is_empty() {
            return Err(Error::InvalidSpec(format!("empty predictor name in `{s}`")));
        }
        Ok(PredictorRef {
            column: column.to_string(),
            level,
        })
    }
}

impl fmt::Display for PredictorRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.level {
            Some(l) => write!(f, "{}={}", self.column, l),
            None => f.write_str(&self.column),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    /// 1-based line in the source file (header is line 1).
    pub line: u64,
    pub s_star: usize,
    pub weight: f64,
    /// Raw predictor cells, aligned with [`Dataset::columns`].
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub format: DataFormat,
    /// Number of item columns for `items` data.
    pub item_count: Option<usize>,
    pub columns: Vec<String>,
    pub records: Vec<Record>,
}

fn is_item_column(name: &str) -> bool {
    name.strip_prefix('y')
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

fn parse_count(field: &str, line: u64, what: &str) -> Result<u64> {
    field.trim().parse::<u64>().map_err(|_| Error::Malformed {
        line,
        message: format!("{what} `{field}` is not a non-negative integer"),
    })
}

impl Dataset {
    pub fn read(path: impl AsRef<Path>, format: DataFormat) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file, format)
    }

    pub fn from_reader<R: Read>(reader: R, format: DataFormat) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(Error::EmptyInput);
        }
        let find = |name: &str| headers.iter().position(|h| h == name);

        let mut item_idx = Vec::new();
        let (score_idx, count_idx) = match format {
            DataFormat::Freq => {
                let s = find("sum_score").ok_or_else(|| Error::UnknownColumn("sum_score".into()))?;
                let c = find("count").ok_or_else(|| Error::UnknownColumn("count".into()))?;
                (Some(s), Some(c))
            }
            DataFormat::Individual => (
                Some(find("sum_score").ok_or_else(|| Error::UnknownColumn("sum_score".into()))?),
                None,
            ),
            DataFormat::Items => {
                item_idx = headers
                    .iter()
                    .enumerate()
                    .filter(|(_, h)| is_item_column(h))
                    .map(|(i, _)| i)
                    .collect();
                if item_idx.is_empty() {
                    return Err(Error::UnknownColumn("y1".into()));
                }
                (None, None)
            }
        };

        let predictor_idx: Vec<usize> = (0..headers.len())
            .filter(|i| Some(*i) != score_idx && Some(*i) != count_idx && !item_idx.contains(i))
            .collect();
        let columns: Vec<String> = predictor_idx.iter().map(|&i| headers[i].to_string()).collect();

        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::Malformed {
                    line,
                    message: e.to_string(),
                }
            })?;
            let line = row.position().map_or(0, |p| p.line());
            if row.iter().all(str::is_empty) {
                continue;
            }
            let (s_star, weight) = match format {
                DataFormat::Freq => {
                    let s = parse_count(&row[score_idx.unwrap()], line, "sum score")? as usize;
                    let c = parse_count(&row[count_idx.unwrap()], line, "count")?;
                    if c == 0 {
                        continue;
                    }
                    (s, c as f64)
                }
                DataFormat::Individual => {
                    (parse_count(&row[score_idx.unwrap()], line, "sum score")? as usize, 1.0)
                }
                DataFormat::Items => {
                    let mut total = 0;
                    for &i in &item_idx {
                        match row[i].trim() {
                            "0" => {}
                            "1" => total += 1,
                            other => {
                                return Err(Error::Malformed {
                                    line,
                                    message: format!(
                                        "item `{}` must be 0 or 1, got `{other}`",
                                        &headers[i]
                                    ),
                                })
                            }
                        }
                    }
                    (total, 1.0)
                }
            };
            records.push(Record {
                line,
                s_star,
                weight,
                values: predictor_idx.iter().map(|&i| row[i].to_string()).collect(),
            });
        }
        if records.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Dataset {
            format,
            item_count: (format == DataFormat::Items).then_some(item_idx.len()),
            columns,
            records,
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.records.iter().map(|r| r.weight).sum()
    }

    pub fn check_max_score(&self, m_items: usize) -> Result<()> {
        match self.records.iter().find(|r| r.s_star > m_items) {
            Some(r) => Err(Error::Malformed {
                line: r.line,
                message: format!("sum score {} exceeds m_items = {m_items}", r.s_star),
            }),
            None => Ok(()),
        }
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Numeric values of a predictor, one per record.
    pub fn predictor(&self, pred: &PredictorRef) -> Result<Vec<f64>> {
        let idx = self.column_index(&pred.column)?;
        self.records
            .iter()
            .map(|r| {
                let cell = &r.values[idx];
                match &pred.level {
                    Some(level) => Ok(if cell == level { 1.0 } else { 0.0 }),
                    None => cell
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::NonNumeric {
                            line: r.line,
                            column: pred.column.clone(),
                            value: cell.clone(),
                        }),
                }
            })
            .collect()
    }

    /// Sum-score frequency table of length `m_items + 1`.
    pub fn frequencies(&self, m_items: usize) -> Result<Vec<f64>> {
        self.check_max_score(m_items)?;
        let mut out = vec![0.0; m_items + 1];
        for r in &self.records {
            out[r.s_star] += r.weight;
        }
        Ok(out)
    }

    /// Observations for `spec`. Predictor names in the spec are parsed as
    /// [`PredictorRef`]s.
    pub fn observations(&self, spec: &ModelSpec) -> Result<Vec<Observation>> {
        self.check_max_score(spec.m_items())?;
        let load = |names: &[String]| -> Result<Vec<Vec<f64>>> {
            names
                .iter()
                .map(|n| self.predictor(&n.parse()?))
                .collect()
        };
        let xs = load(&spec.lambda_predictors)?;
        let zs = load(&spec.sp_predictors)?;
        Ok(self
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let x = std::iter::once(1.0).chain(xs.iter().map(|c| c[i])).collect();
                let z = std::iter::once(1.0).chain(zs.iter().map(|c| c[i])).collect();
                Observation::new(r.s_star, x, z, r.weight)
            })
            .collect())
    }

    /// Writes `individual` CSV (`sum_score` followed by the predictor
    /// columns). Records with weight other than 1 are repeated.
    pub fn write_individual_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(std::iter::once("sum_score").chain(self.columns.iter().map(String::as_str)))?;
        for r in &self.records {
            if r.weight.fract() != 0.0 {
                return Err(Error::InvalidWeight(r.weight));
            }
            for _ in 0..r.weight as u64 {
                let score = r.s_star.to_string();
                w.write_record(std::iter::once(score.as_str()).chain(r.values.iter().map(String::as_str)))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}
