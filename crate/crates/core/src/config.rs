//! Experiment configuration: a flat `key = value` file, then command-line
//! overrides on top.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::besov::Exponent;
use crate::error::{Error, Result};

/// `a0` is either given or found by bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum A0 {
    Value(f64),
    #[serde(serialize_with = "calibrate_str")]
    Calibrate,
}

fn calibrate_str<S: serde::Serializer>(s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str("calibrate")
}

impl std::str::FromStr for A0 {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("calibrate") {
            return Ok(A0::Calibrate);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Config(format!("a0 must be a number or \"calibrate\", got {s:?}")))?;
        Ok(A0::Value(v))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub lambda_max: f64,
    pub n_lambda: usize,
    pub n_b: usize,
    pub delta: f64,
    pub a0: A0,
    pub j_max: usize,
    pub lambda_pu: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// test fields for the frame-bound check
    pub n_trials: usize,
    /// frame-algorithm iterations
    pub n_iter: usize,
    /// concentration threshold of the reconstruction space
    pub concentration: f64,
    pub alpha: f64,
    pub q: Exponent,
    /// grid refinement factor for the Besov drift check
    pub refine: f64,
    /// Schwartz weight exponent for decay tables
    pub n_weight: i32,
    /// bisection steps when calibrating `a0`
    pub calibration_steps: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            r_max: 7.0,
            n_r: 192,
            n_theta: 256,
            lambda_max: 16.0,
            n_lambda: 192,
            n_b: 256,
            delta: 0.5,
            a0: A0::Calibrate,
            j_max: 3,
            lambda_pu: 1.0,
            seed: 0,
            output_dir: PathBuf::from("out"),
            n_trials: 20,
            n_iter: 30,
            concentration: crate::concentration::DEFAULT_CONCENTRATION,
            alpha: 1.0,
            q: Exponent::Two,
            refine: 1.25,
            n_weight: 2,
            calibration_steps: 6,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value for {key}: {v:?}")))
}

impl ExperimentConfig {
    /// Set one key. Keys are case-insensitive, `-` and `_` interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim().to_ascii_lowercase().replace('-', "_");
        match k.as_str() {
            "r_max" => self.r_max = parse(&k, value)?,
            "n_r" => self.n_r = parse(&k, value)?,
            "n_theta" => self.n_theta = parse(&k, value)?,
            "lambda_max" => self.lambda_max = parse(&k, value)?,
            "n_lambda" => self.n_lambda = parse(&k, value)?,
            "n_b" => self.n_b = parse(&k, value)?,
            "delta" => self.delta = parse(&k, value)?,
            "a0" => self.a0 = value.parse()?,
            "j_max" | "jmax" => self.j_max = parse(&k, value)?,
            "lambda_pu" => self.lambda_pu = parse(&k, value)?,
            "seed" => self.seed = parse(&k, value)?,
            "output_dir" | "out" => self.output_dir = PathBuf::from(value.trim()),
            "n_trials" => self.n_trials = parse(&k, value)?,
            "n_iter" => self.n_iter = parse(&k, value)?,
            "concentration" => self.concentration = parse(&k, value)?,
            "alpha" => self.alpha = parse(&k, value)?,
            "q" => self.q = value.parse()?,
            "refine" => self.refine = parse(&k, value)?,
            "n_weight" => self.n_weight = parse(&k, value)?,
            "calibration_steps" => self.calibration_steps = parse(&k, value)?,
            _ => return Err(Error::Config(format!("unknown key {:?}", key.trim()))),
        }
        Ok(())
    }

    /// Parse `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.r_max > 0.0 && self.lambda_max > 0.0 && self.lambda_pu > 0.0) {
            return bad("R_max, Λ_max and λ_pu must be positive".into());
        }
        if self.n_r == 0 || self.n_theta == 0 || self.n_lambda == 0 || self.n_b == 0 {
            return bad("grid sizes must be positive".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("δ must lie in (0, 1), got {}", self.delta));
        }
        if let A0::Value(a) = self.a0 {
            if !(a > 0.0) {
                return bad(format!("a0 must be positive, got {a}"));
            }
        }
        if self.j_max < 1 {
            return bad("J_max must be at least 1".into());
        }
        if 2f64.powi(self.j_max as i32 + 1) > self.lambda_max * (1.0 + 1e-12) {
            return bad(format!(
                "J_max = {} needs Λ_max ≥ {}, have {}",
                self.j_max,
                2f64.powi(self.j_max as i32 + 1),
                self.lambda_max
            ));
        }
        if self.n_trials < 10 {
            return bad(format!("n_trials must be at least 10, got {}", self.n_trials));
        }
        if !(self.concentration > 0.0 && self.concentration < 1.0) {
            return bad(format!("concentration must lie in (0, 1), got {}", self.concentration));
        }
        if !(self.alpha >= 0.0) {
            return bad(format!("α must be nonnegative, got {}", self.alpha));
        }
        if !(self.refine > 1.0) {
            return bad(format!("refine must exceed 1, got {}", self.refine));
        }
        if !(0..=4).contains(&self.n_weight) {
            return bad(format!("n_weight must lie in 0..=4, got {}", self.n_weight));
        }
        Ok(())
    }

    /// The same configuration on a grid refined by `self.refine`.
    pub fn refined(&self) -> Self {
        let up = |n: usize| ((n as f64) * self.refine).round() as usize;
        ExperimentConfig {
            n_r: up(self.n_r),
            n_theta: up(self.n_theta),
            n_lambda: up(self.n_lambda),
            n_b: up(self.n_b),
            ..self.clone()
        }
    }

    /// Flat `key = value` rendering, readable back by [`apply_text`](Self::apply_text).
    pub fn to_text(&self) -> String {
        let a0 = match self.a0 {
            A0::Value(v) => v.to_string(),
            A0::Calibrate => "calibrate".into(),
        };
        format!(
            "r_max = {}\nn_r = {}\nn_theta = {}\nlambda_max = {}\nn_lambda = {}\nn_b = {}\ndelta = {}\na0 = {a0}\nj_max = {}\nlambda_pu = {}\nseed = {}\noutput_dir = {}\nn_trials = {}\nn_iter = {}\nconcentration = {}\nalpha = {}\nq = {}\nrefine = {}\nn_weight = {}\ncalibration_steps = {}\n",
            self.r_max,
            self.n_r,
            self.n_theta,
            self.lambda_max,
            self.n_lambda,
            self.n_b,
            self.delta,
            self.j_max,
            self.lambda_pu,
            self.seed,
            self.output_dir.display(),
            self.n_trials,
            self.n_iter,
            self.concentration,
            self.alpha,
            self.q,
            self.refine,
            self.n_weight,
            self.calibration_steps
        )
    }
}
