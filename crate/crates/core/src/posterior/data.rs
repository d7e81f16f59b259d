use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::log_sum_exp;

/// Right-censored lifetimes. `events[i]` is true for an observed failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredSample {
    times: Vec<f64>,
    events: Vec<bool>,
}

#[derive(Debug, Deserialize, Serialize)]
struct Record {
    time: f64,
    event: u8,
}

impl CensoredSample {
    pub fn new(times: Vec<f64>, events: Vec<bool>) -> Result<Self> {
        if times.len() != events.len() {
            return Err(Error::Parse(format!(
                "{} times but {} event flags",
                times.len(),
                events.len()
            )));
        }
        if let Some(t) = times.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
            return Err(Error::Parse(format!("lifetimes must be positive, got {t}")));
        }
        Ok(Self { times, events })
    }

    pub fn empty() -> Self {
        Self {
            times: Vec::new(),
            events: Vec::new(),
        }
    }

    /// Failures first, then censoring times.
    pub fn from_parts(failures: &[f64], censored: &[f64]) -> Result<Self> {
        let times = failures.iter().chain(censored).copied().collect();
        let events = failures.iter().map(|_| true).chain(censored.iter().map(|_| false)).collect();
        Self::new(times, events)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn r(&self) -> usize {
        self.events.iter().filter(|e| **e).count()
    }

    pub fn failures(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.iter().zip(&self.events).filter(|(_, e)| **e).map(|(t, _)| *t)
    }

    /// Every time multiplied by `c`.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        Self::new(self.times.iter().map(|t| t * c).collect(), self.events.clone())
    }

    /// The sample repeated `f` times.
    pub fn replicated(&self, f: usize) -> Self {
        Self {
            times: self.times.iter().copied().cycle().take(self.n() * f).collect(),
            events: self.events.iter().copied().cycle().take(self.n() * f).collect(),
        }
    }

    pub fn stats(&self) -> SufficientStats {
        let ln_times: Vec<f64> = self.times.iter().map(|t| t.ln()).collect();
        let sum_ln_failures = ln_times.iter().zip(&self.events).filter(|(_, e)| **e).map(|(l, _)| l).sum();
        SufficientStats {
            ln_times,
            r: self.r(),
            sum_ln_failures,
        }
    }

    /// Reads `time,event` records; lines starting with `#` are skipped.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        if headers.len() != 2 || &headers[0] != "time" || &headers[1] != "event" {
            return Err(Error::Parse(format!("expected header `time,event`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut times = Vec::new();
        let mut events = Vec::new();
        for (i, rec) in rdr.deserialize::<Record>().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(format!("record {}: {e}", i + 1)))?;
            let event = match rec.event {
                0 => false,
                1 => true,
                v => return Err(Error::Parse(format!("record {}: event must be 0 or 1, got {v}", i + 1))),
            };
            times.push(rec.time);
            events.push(event);
        }
        Self::new(times, events)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(f)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (&time, &e) in self.times.iter().zip(&self.events) {
            w.serialize(Record { time, event: e as u8 }).map_err(|e| Error::Parse(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Data summaries entering the posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    ln_times: Vec<f64>,
    pub r: usize,
    /// Σ ln t over observed failures.
    pub sum_ln_failures: f64,
}

impl SufficientStats {
    /// ln δ(β) = ln Σ_i t_i^β over all times; −inf for an empty sample.
    pub fn ln_delta(&self, beta: f64) -> f64 {
        match self.ln_times.len() {
            0 => f64::NEG_INFINITY,
            1 => beta * self.ln_times[0],
            _ => {
                let v: Vec<f64> = self.ln_times.iter().map(|l| beta * l).collect();
                log_sum_exp(&v)
            }
        }
    }

    /// r / Σ ln t over failures.
    pub fn beta_hat_log(&self) -> Option<f64> {
        (self.r > 0).then(|| self.r as f64 / self.sum_ln_failures)
    }

    pub fn n(&self) -> usize {
        self.ln_times.len()
    }

    pub fn max_ln_time(&self) -> f64 {
        self.ln_times.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Field returns: ten failures and eight censored lifetimes (months).
pub fn field_returns() -> CensoredSample {
    CensoredSample::from_parts(
        &[134.9, 152.1, 133.7, 114.8, 110.0, 129.0, 78.7, 72.8, 132.2, 91.8],
        &[70.0, 159.5, 98.5, 167.2, 66.8, 95.3, 80.9, 83.2],
    )
    .expect("valid fixture")
}
