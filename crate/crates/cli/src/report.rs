use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: &str = "1";

/// Results of one subcommand; `verified` is false when a checked bound failed.
pub struct Outcome {
    pub results: Value,
    pub verified: bool,
}

impl Outcome {
    pub fn ok(results: impl Serialize) -> Result<Self> {
        Ok(Self { results: serde_json::to_value(results)?, verified: true })
    }

    pub fn checked(results: impl Serialize, verified: bool) -> Result<Self> {
        Ok(Self { results: serde_json::to_value(results)?, verified })
    }
}

/// Wall-clock milliseconds per named phase.
#[derive(Default)]
pub struct Timings(BTreeMap<String, f64>);

impl Timings {
    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.0.entry(phase.to_string()).or_default() += start.elapsed().as_secs_f64() * 1e3;
        out
    }
}

#[derive(Serialize)]
pub struct JsonReport<'a> {
    pub schema_version: &'static str,
    pub subcommand: &'a str,
    pub config: Value,
    pub results: Value,
    pub timings: BTreeMap<String, f64>,
}

impl<'a> JsonReport<'a> {
    pub fn new(subcommand: &'a str, config: Value, results: Value, timings: Timings) -> Self {
        Self { schema_version: SCHEMA_VERSION, subcommand, config, results, timings: timings.0 }
    }

    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        match path {
            Some(p) => std::fs::write(p, text).with_context(|| format!("writing report {}", p.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}
