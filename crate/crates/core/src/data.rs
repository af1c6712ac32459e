//! Synthetic generators for the experiment designs and CSV ingestion/emission.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmodel::{Dataset, GroupedDataset};
use crate::rng::RandomSource;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum XDist {
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { scale: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

impl XDist {
    pub fn mean(&self) -> f64 {
        match *self {
            XDist::Normal { mean, .. } => mean,
            XDist::Uniform { lo, hi } => (lo + hi) / 2.0,
            XDist::Exponential { scale } => scale,
            XDist::LogNormal { mu, sigma } => (mu + sigma * sigma / 2.0).exp(),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            XDist::Normal { sd, .. } => sd * sd,
            XDist::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            XDist::Exponential { scale } => scale * scale,
            XDist::LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                (s2.exp() - 1.0) * (2.0 * mu + s2).exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            XDist::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd >= 0.0,
            XDist::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            XDist::Exponential { scale } => scale.is_finite() && scale > 0.0,
            XDist::LogNormal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!(
                "invalid x distribution {self:?}"
            )))
        }
    }

    pub fn sample(&self, rng: &mut RandomSource) -> f64 {
        match *self {
            XDist::Normal { mean, sd } => rng.normal(mean, sd),
            XDist::Uniform { lo, hi } => rng.uniform(lo, hi),
            XDist::Exponential { scale } => rng.sample(Exp::new(1.0 / scale).expect("validated")),
            XDist::LogNormal { mu, sigma } => {
                rng.sample(LogNormal::new(mu, sigma).expect("validated"))
            }
        }
    }
}

/// Second line of a two-group design. Group 1 holds the first `⌊frac1·n⌋` rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub slope2: f64,
    pub frac1: f64,
}

/// `y = intercept + slope·x + N(0, σₑ²)` for the linear design; for the
/// mixture design both groups pass through the origin with slopes
/// `slope` and `mixture.slope2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub x_dist: XDist,
    pub slope: f64,
    pub intercept: f64,
    pub sigma_e: f64,
    pub n: usize,
    pub mixture: Option<MixtureSpec>,
}

impl GeneratorSpec {
    pub fn linear(x_dist: XDist, slope: f64, intercept: f64, sigma_e: f64, n: usize) -> Self {
        Self {
            x_dist,
            slope,
            intercept,
            sigma_e,
            n,
            mixture: None,
        }
    }

    pub fn mixture(
        x_dist: XDist,
        slope1: f64,
        slope2: f64,
        frac1: f64,
        sigma_e: f64,
        n: usize,
    ) -> Self {
        Self {
            x_dist,
            slope: slope1,
            intercept: 0.0,
            sigma_e,
            n,
            mixture: Some(MixtureSpec { slope2, frac1 }),
        }
    }

    /// Size of group 1 for a mixture spec.
    pub fn n1(&self) -> Option<usize> {
        self.mixture
            .map(|m| (m.frac1 * self.n as f64).floor() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.x_dist.validate()?;
        if self.n < 4 {
            return Err(Error::InvalidSpec(format!(
                "n must be at least 4, got {}",
                self.n
            )));
        }
        if !(self.sigma_e.is_finite() && self.sigma_e >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "sigma_e must be nonnegative, got {}",
                self.sigma_e
            )));
        }
        if !(self.slope.is_finite() && self.intercept.is_finite()) {
            return Err(Error::InvalidSpec(
                "slope and intercept must be finite".into(),
            ));
        }
        if let Some(m) = self.mixture {
            if !(m.frac1 > 0.0 && m.frac1 < 1.0) || !m.slope2.is_finite() {
                return Err(Error::InvalidSpec(format!("invalid mixture {m:?}")));
            }
            let n1 = self.n1().unwrap_or(0);
            if n1 < 2 || self.n - n1 < 2 {
                return Err(Error::InvalidSpec(format!(
                    "mixture groups of {n1} and {} rows; each needs at least 2",
                    self.n - n1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Sample {
    Linear(Dataset),
    Grouped(GroupedDataset),
}

impl Sample {
    pub fn dataset(&self) -> &Dataset {
        match self {
            Sample::Linear(d) => d,
            Sample::Grouped(g) => g.data(),
        }
    }

    pub fn grouped(&self) -> Option<&GroupedDataset> {
        match self {
            Sample::Linear(_) => None,
            Sample::Grouped(g) => Some(g),
        }
    }
}

pub fn generate(spec: &GeneratorSpec, rng: &mut RandomSource) -> Result<Sample> {
    spec.validate()?;
    let x: Vec<f64> = (0..spec.n).map(|_| spec.x_dist.sample(rng)).collect();
    match spec.n1() {
        None => {
            let y = x
                .iter()
                .map(|&v| spec.intercept + spec.slope * v + rng.normal(0.0, spec.sigma_e))
                .collect();
            Ok(Sample::Linear(Dataset::new(x, y)?))
        }
        Some(n1) => {
            let slope2 = spec.mixture.map(|m| m.slope2).unwrap_or_default();
            let y = x
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let b = if i < n1 { spec.slope } else { slope2 };
                    b * v + rng.normal(0.0, spec.sigma_e)
                })
                .collect();
            Ok(Sample::Grouped(GroupedDataset::new(
                Dataset::new(x, y)?,
                n1,
            )?))
        }
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

fn parse_field(record: &csv::StringRecord, idx: usize, row: usize, column: &str) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("");
    let v: f64 = raw.parse().map_err(|_| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("`{raw}` is not a decimal number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("`{raw}` is not finite"),
        });
    }
    Ok(v)
}

/// Reads two numeric columns, and optionally a two-valued group column.
///
/// Row numbers in parse errors count data rows from 1 (the header is row 0).
/// With a group column, rows of the first label seen form group 1; order is
/// otherwise preserved.
pub fn read_csv(path: &Path, x_col: &str, y_col: &str, group_col: Option<&str>) -> Result<Sample> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let xi = column_index(&headers, x_col)?;
    let yi = column_index(&headers, y_col)?;
    let gi = group_col.map(|g| column_index(&headers, g)).transpose()?;

    let mut labels: Vec<String> = Vec::new();
    let mut rows: [(Vec<f64>, Vec<f64>); 2] = Default::default();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let x = parse_field(&record, xi, row, x_col)?;
        let y = parse_field(&record, yi, row, y_col)?;
        let slot = match gi {
            None => 0,
            Some(gi) => {
                let label = record.get(gi).unwrap_or("");
                match labels.iter().position(|l| l == label) {
                    Some(p) => p,
                    None if labels.len() < 2 => {
                        labels.push(label.to_string());
                        labels.len() - 1
                    }
                    None => {
                        return Err(Error::MoreThanTwoGroups {
                            column: group_col.unwrap_or_default().to_string(),
                        })
                    }
                }
            }
        };
        rows[slot].0.push(x);
        rows[slot].1.push(y);
    }
    let [(x1, y1), (x2, y2)] = rows;
    if gi.is_none() {
        return Ok(Sample::Linear(Dataset::new(x1, y1)?));
    }
    if labels.len() < 2 {
        return Err(Error::InvalidDataset(format!(
            "column `{}` has fewer than two group labels",
            group_col.unwrap_or_default()
        )));
    }
    Ok(Sample::Grouped(GroupedDataset::from_groups(
        &x1, &y1, &x2, &y2,
    )?))
}

/// Writes `x,y` (plus `group` with labels 1 and 2 for grouped data) using the
/// shortest representation that parses back to the same value.
pub fn write_dataset_csv(path: &Path, sample: &Sample) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    let d = sample.dataset();
    let n1 = sample.grouped().map(|g| g.n1());
    match n1 {
        None => w.write_record(["x", "y"])?,
        Some(_) => w.write_record(["x", "y", "group"])?,
    }
    for (i, (x, y)) in d.x().iter().zip(d.y()).enumerate() {
        let (x, y) = (x.to_string(), y.to_string());
        match n1 {
            None => w.write_record([x.as_str(), y.as_str()])?,
            Some(n1) => w.write_record([x.as_str(), y.as_str(), if i < n1 { "1" } else { "2" }])?,
        }
    }
    w.flush()?;
    Ok(())
}

pub const RESULTS_HEADER: &str = "tester,n,rho,delta,alpha,K,trials,reject_rate,stderr";

/// One line of a results file. Non-private testers leave `rho`, `delta` and
/// `k` empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub tester: String,
    pub n: usize,
    pub rho: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: f64,
    pub k: Option<usize>,
    pub trials: usize,
    pub reject_rate: f64,
    pub stderr: f64,
}

/// Rounds to 6 significant digits and prints the shortest decimal of the result.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("formatted float parses");
    rounded.to_string()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(RESULTS_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.tester.clone(),
            r.n.to_string(),
            opt(r.rho.map(format_sig6)),
            opt(r.delta.map(format_sig6)),
            format_sig6(r.alpha),
            opt(r.k),
            r.trials.to_string(),
            format_sig6(r.reject_rate),
            format_sig6(r.stderr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_results(File::create(path)?, rows)
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let cols: Vec<&str> = RESULTS_HEADER.split(',').collect();
    for c in &cols {
        column_index(&headers, c)?;
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let get = |c: &str| {
            record
                .get(column_index(&headers, c).expect("checked"))
                .unwrap_or("")
        };
        let num = |c: &str| -> Result<f64> {
            get(c).parse().map_err(|_| Error::Parse {
                row,
                column: c.into(),
                message: format!("`{}` is not a number", get(c)),
            })
        };
        let int = |c: &str| -> Result<usize> {
            get(c).parse().map_err(|_| Error::Parse {
                row,
                column: c.into(),
                message: format!("`{}` is not an integer", get(c)),
            })
        };
        let opt_num = |c: &str| {
            if get(c).is_empty() {
                Ok(None)
            } else {
                num(c).map(Some)
            }
        };
        out.push(ResultRow {
            tester: get("tester").to_string(),
            n: int("n")?,
            rho: opt_num("rho")?,
            delta: opt_num("delta")?,
            alpha: num("alpha")?,
            k: if get("K").is_empty() {
                None
            } else {
                Some(int("K")?)
            },
            trials: int("trials")?,
            reject_rate: num("reject_rate")?,
            stderr: num("stderr")?,
        });
    }
    Ok(out)
}
