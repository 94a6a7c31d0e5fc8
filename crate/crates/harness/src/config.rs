//! Experiment configuration and its per-experiment completeness checks.

use std::path::PathBuf;

use pgrowth::macroscopic::MacroProfile;
use pgrowth::{GridSpec, Point};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    EstimateC,
    WedgeShape,
    HydroProfile,
    GeneratorCheck,
    Defect,
    HammersleyFlux,
    OracleXcheck,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::EstimateC => "estimate-c",
            Experiment::WedgeShape => "wedge-shape",
            Experiment::HydroProfile => "hydro-profile",
            Experiment::GeneratorCheck => "generator-check",
            Experiment::Defect => "defect",
            Experiment::HammersleyFlux => "hammersley-flux",
            Experiment::OracleXcheck => "oracle-xcheck",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Flat,
    Shock,
    Rarefaction,
}

/// How scaled runs realize `σ_n(·, 0)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    /// `⌊n u₀(y/n)⌋` on the unit lattice.
    #[default]
    Rounded,
    /// Random fields built from Hammersley trajectories (d = 2 only).
    Hammersley,
}

/// `B = {y : normal·y ≥ offset}` in macroscopic coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn contains(&self, y: &[f64], scale: f64) -> bool {
        let dot: f64 = self.normal.iter().zip(y).map(|(a, b)| a * b).sum();
        dot >= self.offset * scale
    }

    pub fn describe(&self) -> String {
        format!("{{y : {:?}·y >= {}}}", self.normal, self.offset)
    }
}

/// A macroscopic evaluation grid. Without `cells`, scaled runs use unit
/// microscopic cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default)]
    pub cells: Option<Vec<usize>>,
}

impl GridConfig {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// The microscopic grid at scale `n`.
    pub fn micro(&self, n: f64) -> Result<GridSpec, HarnessError> {
        let cells = match &self.cells {
            Some(c) => c.clone(),
            None => self
                .lo
                .iter()
                .zip(&self.hi)
                .map(|(l, h)| ((h - l) * n).round().max(1.0) as usize)
                .collect(),
        };
        let scale = |v: &[f64]| Point::from(v.iter().map(|x| x * n).collect::<Vec<_>>());
        GridSpec::new(scale(&self.lo), scale(&self.hi), cells)
            .map_err(|e| HarnessError::Config(format!("grid: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CEstimate {
    #[serde(default = "default_c_n")]
    pub n: f64,
    #[serde(default = "default_c_replicas")]
    pub replicas: usize,
}

impl Default for CEstimate {
    fn default() -> Self {
        CEstimate {
            n: default_c_n(),
            replicas: default_c_replicas(),
        }
    }
}

fn default_c_n() -> f64 {
    30.0
}

fn default_c_replicas() -> usize {
    20
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "one")]
    pub d: usize,
    #[serde(default)]
    pub n_list: Vec<f64>,
    #[serde(default)]
    pub t_list: Vec<f64>,
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub c_override: Option<f64>,
    #[serde(default)]
    pub c_estimate: Option<CEstimate>,
    #[serde(default)]
    pub profile: Option<ProfileKind>,
    #[serde(default)]
    pub rho: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda: Option<Vec<f64>>,
    #[serde(default)]
    pub h: Option<i64>,
    #[serde(default)]
    pub b: Option<HalfSpace>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub init: InitKind,
    /// Box shape `b` for estimate-c; defaults to the unit vector.
    #[serde(default)]
    pub aspect: Option<Vec<f64>>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub k: Option<i64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn require<'a, T>(field: &str, value: &'a Option<T>, exp: Experiment) -> Result<&'a T, HarnessError> {
    value
        .as_ref()
        .ok_or_else(|| bad(format!("{field} is required for {}", exp.as_str())))
}

fn positive_list(field: &str, values: &[f64]) -> Result<(), HarnessError> {
    if values.is_empty() {
        return Err(bad(format!("{field} must be non-empty")));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(bad(format!("{field} entries must be positive, got {v}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| bad(format!("unreadable config: {e}")))
    }

    pub fn h(&self) -> i64 {
        self.h.unwrap_or(1)
    }

    pub fn mu(&self) -> f64 {
        self.mu.unwrap_or(1.0)
    }

    pub fn tau(&self) -> f64 {
        self.tau.unwrap_or(1.0)
    }

    pub fn x0(&self) -> Vec<f64> {
        self.x0.clone().unwrap_or_else(|| vec![1.0; self.d])
    }

    pub fn k(&self) -> i64 {
        self.k.unwrap_or(1)
    }

    pub fn aspect(&self) -> Vec<f64> {
        self.aspect.clone().unwrap_or_else(|| vec![1.0; self.d + 1])
    }

    pub fn max_t(&self) -> f64 {
        self.t_list.iter().copied().fold(0.0, f64::max)
    }

    /// The macroscopic profile named by `profile`, `rho` and `lambda`.
    pub fn macro_profile(&self) -> Result<MacroProfile, HarnessError> {
        let kind = *require("profile", &self.profile, self.experiment)?;
        let rho = require("rho", &self.rho, self.experiment)?.clone();
        if rho.len() != self.d {
            return Err(bad(format!("rho must have length d = {}", self.d)));
        }
        let lambda = || -> Result<Vec<f64>, HarnessError> {
            let l = require("lambda", &self.lambda, self.experiment)?.clone();
            if l.len() != self.d {
                return Err(bad(format!("lambda must have length d = {}", self.d)));
            }
            Ok(l)
        };
        let profile = match kind {
            ProfileKind::Flat => MacroProfile::flat(rho),
            ProfileKind::Shock => MacroProfile::shock(lambda()?, rho),
            ProfileKind::Rarefaction => MacroProfile::rarefaction(lambda()?, rho),
        };
        profile.map_err(|e| bad(format!("profile: {e}")))
    }

    fn check_grid(&self) -> Result<&GridConfig, HarnessError> {
        let grid = require("grid", &self.grid, self.experiment)?;
        if grid.lo.len() != self.d || grid.hi.len() != self.d {
            return Err(bad(format!("grid corners must have length d = {}", self.d)));
        }
        if grid.lo.iter().zip(&grid.hi).any(|(l, h)| !(l < h)) {
            return Err(bad("grid needs lo < hi on every axis"));
        }
        if let Some(cells) = &grid.cells {
            if cells.len() != self.d || cells.contains(&0) {
                return Err(bad("grid cells must be d positive counts"));
            }
        }
        Ok(grid)
    }

    /// Checks that every parameter the experiment needs is present and sane.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let exp = self.experiment;
        if self.d == 0 {
            return Err(bad("d must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(bad("replicas must be at least 1"));
        }
        if let Some(c) = self.c_override {
            if self.d == 1 {
                return Err(bad("c-override applies only for d >= 2 (c_2 = 2 is exact)"));
            }
            if !(c > 0.0 && c.is_finite()) {
                return Err(bad(format!("c-override must be positive, got {c}")));
            }
        }
        if let Some(est) = &self.c_estimate {
            if !(est.n > 0.0) || est.replicas == 0 {
                return Err(bad("c-estimate needs n > 0 and replicas >= 1"));
            }
        }
        if self.init == InitKind::Hammersley {
            let ok_exp = matches!(exp, Experiment::HydroProfile | Experiment::Defect);
            let ok_kind = matches!(self.profile, Some(ProfileKind::Flat | ProfileKind::Shock));
            if !ok_exp || self.d != 2 || !ok_kind {
                return Err(bad(
                    "init = hammersley needs hydro-profile or defect, d = 2 and a flat or shock profile",
                ));
            }
            if let (Some(ProfileKind::Shock), Some(lambda), Some(rho)) = (self.profile, &self.lambda, &self.rho) {
                pgrowth::hammersley::check_shock_params(lambda, rho).map_err(|e| bad(e.to_string()))?;
            }
        }
        match exp {
            Experiment::EstimateC => {
                positive_list("n-list", &self.n_list)?;
                let b = self.aspect();
                if b.len() != self.d + 1 || b.iter().any(|v| !(*v > 0.0)) {
                    return Err(bad(format!("aspect must be {} positive numbers", self.d + 1)));
                }
            }
            Experiment::WedgeShape => {
                positive_list("n-list", &self.n_list)?;
                positive_list("t-list", &self.t_list)?;
                let grid = self.check_grid()?;
                if grid.cells.is_none() {
                    return Err(bad("wedge-shape needs explicit grid cells"));
                }
                if grid.lo.iter().any(|&v| v < 0.0) {
                    return Err(bad("wedge-shape grid must lie in the closed positive orthant"));
                }
            }
            Experiment::HydroProfile => {
                positive_list("n-list", &self.n_list)?;
                positive_list("t-list", &self.t_list)?;
                self.macro_profile()?;
                if self.check_grid()?.cells.is_none() {
                    return Err(bad("hydro-profile needs explicit grid cells"));
                }
            }
            Experiment::GeneratorCheck => {
                positive_list("t-list", &self.t_list)?;
                let x0 = self.x0();
                if x0.len() != self.d || x0.iter().any(|v| !(*v > 0.0)) {
                    return Err(bad(format!("x0 must be {} positive numbers", self.d)));
                }
                if self.k() < 1 {
                    return Err(bad("k must be at least 1"));
                }
            }
            Experiment::Defect => {
                positive_list("n-list", &self.n_list)?;
                positive_list("t-list", &self.t_list)?;
                let profile = self.macro_profile()?;
                self.check_grid()?;
                if self.h() < 1 {
                    return Err(bad("h must be at least 1"));
                }
                let shock_pair = self.init == InitKind::Hammersley
                    && matches!(profile, MacroProfile::Shock { .. });
                if shock_pair {
                    if self.b.is_some() || self.h() != 1 {
                        return Err(bad(
                            "the Hammersley shock pair fixes A(0) and h = 1; omit b and h",
                        ));
                    }
                } else {
                    let b = require("b", &self.b, exp)?;
                    if b.normal.len() != self.d {
                        return Err(bad(format!("b.normal must have length d = {}", self.d)));
                    }
                    if b.normal.iter().any(|v| *v < 0.0) || b.normal.iter().all(|v| *v == 0.0) {
                        return Err(bad(
                            "b.normal must be nonnegative and nonzero so that A(0) is an upper set",
                        ));
                    }
                }
            }
            Experiment::HammersleyFlux => {
                positive_list("t-list", &self.t_list)?;
                if !(self.mu() > 0.0 && self.tau() > 0.0) {
                    return Err(bad("mu and tau must be positive"));
                }
                if self.d != 1 {
                    return Err(bad("hammersley-flux is one-dimensional (d = 1)"));
                }
                if self.grid.is_some() {
                    self.check_grid()?;
                }
            }
            Experiment::OracleXcheck => {
                positive_list("t-list", &self.t_list)?;
                if self.d > 2 {
                    return Err(bad("oracle-xcheck supports d = 1 or 2"));
                }
                if self.profile.is_some() {
                    self.macro_profile()?;
                }
                if self.check_grid()?.cells.is_none() {
                    return Err(bad("oracle-xcheck needs explicit grid cells"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(exp: &str) -> String {
        format!(r#"{{"experiment": "{exp}", "replicas": 2, "n-list": [10], "t-list": [1]}}"#)
    }

    #[test]
    fn parses_kebab_case_fields() {
        let cfg = ExperimentConfig::from_json(&base("estimate-c")).unwrap();
        assert_eq!(cfg.experiment, Experiment::EstimateC);
        assert_eq!(cfg.n_list, vec![10.0]);
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.aspect(), vec![1.0, 1.0]);
    }

    #[test]
    fn unknown_fields_and_missing_parameters_are_config_errors() {
        let err = ExperimentConfig::from_json(r#"{"experiment": "defect", "replicas": 1, "bogus": 3}"#)
            .unwrap_err();
        assert!(matches!(err, HarnessError::Config(_)));
        let cfg = ExperimentConfig::from_json(&base("defect")).unwrap();
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("profile"), "{msg}");
        let cfg = ExperimentConfig::from_json(&base("hydro-profile").replace(
            r#""replicas""#,
            r#""profile": "shock", "rho": [2], "grid": {"lo": [0], "hi": [1], "cells": [4]}, "replicas""#,
        ))
        .unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("lambda"));
    }

    #[test]
    fn c_override_rejected_in_one_dimension() {
        let cfg = ExperimentConfig::from_json(
            &base("estimate-c").replace(r#""replicas""#, r#""c-override": 2.1, "replicas""#),
        )
        .unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("c-override"));
    }

    #[test]
    fn defect_half_space_must_be_an_upper_set() {
        let text = base("defect").replace(
            r#""replicas""#,
            r#""profile": "flat", "rho": [1], "b": {"normal": [-1], "offset": 0},
               "grid": {"lo": [-1], "hi": [2]}, "replicas""#,
        );
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("upper set"));
        let ok = ExperimentConfig::from_json(&text.replace("[-1], \"offset", "[1], \"offset")).unwrap();
        ok.validate().unwrap();
        let g = ok.grid.unwrap().micro(10.0).unwrap();
        assert_eq!(g.cells, vec![30]);
    }
}
