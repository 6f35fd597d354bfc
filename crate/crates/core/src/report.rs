//! Machine-readable experiment reports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub metrics: BTreeMap<String, Value>,
    pub verdicts: BTreeMap<String, bool>,
    pub pass: bool,
    pub wall_clock_s: f64,
    /// CSV files written next to `report.json`.
    pub tables: Vec<String>,
    #[serde(skip)]
    pub csv: Vec<(String, String)>,
}

impl Report {
    pub fn new(experiment: &str, config: &ExperimentConfig) -> Self {
        Report {
            experiment: experiment.into(),
            config: config.clone(),
            metrics: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            pass: true,
            wall_clock_s: 0.0,
            tables: Vec::new(),
            csv: Vec::new(),
        }
    }

    pub fn metric<T: Serialize>(&mut self, key: &str, value: T) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metrics.insert(key.into(), v);
    }

    pub fn verdict(&mut self, key: &str, ok: bool) {
        self.verdicts.insert(key.into(), ok);
        self.pass = self.verdicts.values().all(|&v| v);
    }

    pub fn table(&mut self, name: &str, content: String) {
        self.tables.push(name.into());
        self.csv.push((name.into(), content));
    }

    /// `report.json` plus every table, in `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.csv {
            std::fs::write(dir.join(name), body)?;
        }
        let f = std::fs::File::create(dir.join("report.json"))?;
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }

    /// Metrics and verdicts only; identical across reruns of one config.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(&(&self.metrics, &self.verdicts)).unwrap_or_default()
    }
}

/// Summary of several reports run together.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub pass: bool,
    pub wall_clock_s: f64,
    pub reports: Vec<Report>,
}

impl Summary {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for r in &self.reports {
            r.write(&dir.join(&r.experiment))?;
        }
        let f = std::fs::File::create(dir.join("report.json"))?;
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }
}
