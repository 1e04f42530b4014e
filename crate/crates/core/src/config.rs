//! Flat `key = value` experiment configuration.

use std::path::Path;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeSpec};
use crate::solver::FlowConfig;

/// Initial data for a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Zero,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub spacing: f64,
    pub flow: FlowConfig,
    pub init: InitKind,
    pub amplitude: f64,
    pub epsilon: f64,
    pub c_tol: f64,
    pub c1: f64,
    pub c2: f64,
    pub ladder_r0: f64,
    pub ladder_rungs: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 4,
            spacing: 1.0,
            flow: FlowConfig::default(),
            init: InitKind::Random,
            amplitude: 1e-2,
            epsilon: 0.1,
            c_tol: 5.0,
            c1: 10.0,
            c2: 10.0,
            ladder_r0: 1.0,
            ladder_rungs: 3,
            seed: 0,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("{key}: cannot parse '{v}'"))
}

impl ExperimentConfig {
    pub const KEYS: [&'static str; 20] = [
        "n",
        "spacing",
        "seed",
        "init",
        "amplitude",
        "kappa",
        "flow.step_size",
        "flow.max_steps",
        "flow.grad_tol",
        "flow.residual_tol",
        "flow.backtrack",
        "flow.step_growth",
        "flow.spectral_step",
        "flow.min_step",
        "epsilon",
        "c_tol",
        "eps.c1",
        "eps.c2",
        "ladder.r0",
        "ladder.rungs",
    ];

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "n" => self.n = parse(key, v)?,
            "spacing" => self.spacing = parse(key, v)?,
            "seed" => {
                self.seed = parse(key, v)?;
                self.flow.seed = self.seed;
            }
            "init" => {
                self.init = match v {
                    "zero" => InitKind::Zero,
                    "random" => InitKind::Random,
                    _ => return Err(format!("{key}: expected 'zero' or 'random', got '{v}'")),
                }
            }
            "amplitude" => self.amplitude = parse(key, v)?,
            "kappa" => self.flow.kappa = parse(key, v)?,
            "flow.step_size" => self.flow.step_size = parse(key, v)?,
            "flow.max_steps" => self.flow.max_steps = parse(key, v)?,
            "flow.grad_tol" => self.flow.grad_tol = parse(key, v)?,
            "flow.residual_tol" => self.flow.residual_tol = parse(key, v)?,
            "flow.backtrack" => self.flow.backtrack = parse(key, v)?,
            "flow.step_growth" => self.flow.step_growth = parse(key, v)?,
            "flow.spectral_step" => self.flow.spectral_step = parse(key, v)?,
            "flow.min_step" => self.flow.min_step = parse(key, v)?,
            "epsilon" => self.epsilon = parse(key, v)?,
            "c_tol" => self.c_tol = parse(key, v)?,
            "eps.c1" => self.c1 = parse(key, v)?,
            "eps.c2" => self.c2 = parse(key, v)?,
            "ladder.r0" => self.ladder_r0 = parse(key, v)?,
            "ladder.rungs" => self.ladder_rungs = parse(key, v)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. Every offending
    /// line is reported.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut errors = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = cfg.set(k.trim(), v.trim()) {
                        errors.push(format!("line {}: {e}", lineno + 1));
                    }
                }
                None => errors.push(format!("line {}: expected 'key = value'", lineno + 1)),
            }
        }
        if let Err(e) = cfg.validate() {
            errors.push(e);
        }
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errors))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        LatticeSpec::new(self.n, self.spacing).map_err(|e| e.to_string())?;
        self.flow.validate().map_err(|e| e.to_string())?;
        if !(self.amplitude >= 0.0 && self.epsilon > 0.0 && self.c_tol >= 0.0 && self.ladder_r0 > 0.0) {
            return Err("amplitude, epsilon, c_tol and ladder.r0 must be non-negative (epsilon, r0 positive)".into());
        }
        if self.ladder_rungs == 0 {
            return Err("ladder.rungs must be positive".into());
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Ok(Lattice::new(LatticeSpec::new(self.n, self.spacing)?))
    }

    /// Resolved configuration, one `key = value` per line in a fixed order.
    pub fn to_lines(&self) -> Vec<String> {
        let f = &self.flow;
        let init = match self.init {
            InitKind::Zero => "zero",
            InitKind::Random => "random",
        };
        vec![
            format!("n = {}", self.n),
            format!("spacing = {:e}", self.spacing),
            format!("seed = {}", self.seed),
            format!("init = {init}"),
            format!("amplitude = {:e}", self.amplitude),
            format!("kappa = {:e}", f.kappa),
            format!("flow.step_size = {:e}", f.step_size),
            format!("flow.max_steps = {}", f.max_steps),
            format!("flow.grad_tol = {:e}", f.grad_tol),
            format!("flow.residual_tol = {:e}", f.residual_tol),
            format!("flow.backtrack = {:e}", f.backtrack),
            format!("flow.step_growth = {:e}", f.step_growth),
            format!("flow.spectral_step = {}", f.spectral_step),
            format!("flow.min_step = {:e}", f.min_step),
            format!("epsilon = {:e}", self.epsilon),
            format!("c_tol = {:e}", self.c_tol),
            format!("eps.c1 = {:e}", self.c1),
            format!("eps.c2 = {:e}", self.c2),
            format!("ladder.r0 = {:e}", self.ladder_r0),
            format!("ladder.rungs = {}", self.ladder_rungs),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = "# comment\nn = 6\nspacing = 0.5\nseed = 9 # trailing\nflow.max_steps = 12\ninit = zero\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!((cfg.n, cfg.spacing, cfg.seed, cfg.flow.seed), (6, 0.5, 9, 9));
        assert_eq!(cfg.flow.max_steps, 12);
        assert_eq!(cfg.init, InitKind::Zero);
        let again = ExperimentConfig::parse(&cfg.to_lines().join("\n")).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(cfg.to_lines().len(), ExperimentConfig::KEYS.len());
        for (line, key) in cfg.to_lines().iter().zip(ExperimentConfig::KEYS) {
            assert!(line.starts_with(&format!("{key} = ")));
        }
    }

    #[test]
    fn lists_every_offending_key() {
        let err = ExperimentConfig::parse("bogus = 1\nn = 4\nalso_bad = 2\nspacing = x\n").unwrap_err();
        match err {
            Error::Config(list) => {
                assert_eq!(list.len(), 3, "{list:?}");
                assert!(list[0].contains("bogus"));
                assert!(list[1].contains("also_bad"));
                assert!(list[2].contains("spacing"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ExperimentConfig::parse("n = 3").is_err());
        assert!(ExperimentConfig::parse("flow.backtrack = 1.5").is_err());
        assert!(ExperimentConfig::parse("no equals sign").is_err());
    }
}
