//! Sweep configuration, loadable from a TOML file whose keys are the field
//! names below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bipartite::Averaging;
use crate::error::{Error, Result};
use crate::qkd::Protocol;
use crate::turbulence::{DEFAULT_SUBHARMONIC_LEVELS, MIN_SCREEN_GRID};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// OAM indices; each sweep point uses the qubit `{-l, +l}`.
    pub ells: Vec<i32>,
    /// Scintillation strengths `W = w0 / r0`.
    pub w_values: Vec<f64>,
    /// Screen pairs per sweep point.
    pub realizations: usize,
    pub base_seed: u64,
    /// Grid points per side (power of two).
    pub grid_n: usize,
    /// Side length of the square grid in metres.
    pub window: f64,
    /// Beam waist in metres.
    pub w0: f64,
    /// Wavelength in metres.
    pub wavelength: f64,
    pub subharmonic_levels: usize,
    pub protocols: Vec<Protocol>,
    pub averaging: Averaging,
    pub bootstrap_resamples: usize,
    /// Spread realizations over a thread pool.
    pub parallel: bool,
    /// Worker count; all cores when absent.
    pub threads: Option<usize>,
    /// Sweep CSV path.
    pub output: Option<PathBuf>,
    /// JSON dump of the mean density matrices.
    pub states_output: Option<PathBuf>,
}

/// `0, 0.25, ..., 4`.
pub fn default_w_values() -> Vec<f64> {
    (0..=16).map(|i| i as f64 * 0.25).collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            ells: vec![1, 3, 5, 7],
            w_values: default_w_values(),
            realizations: 30,
            base_seed: 1,
            grid_n: 256,
            window: 0.5,
            w0: 0.05,
            wavelength: 710e-9,
            subharmonic_levels: DEFAULT_SUBHARMONIC_LEVELS,
            protocols: Protocol::ALL.to_vec(),
            averaging: Averaging::CountWeighted,
            bootstrap_resamples: 200,
            parallel: true,
            threads: None,
            output: None,
            states_output: None,
        }
    }
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.ells.is_empty() {
            return bad("ells must not be empty".into());
        }
        if let Some(i) = self.ells.iter().position(|&l| l == 0) {
            return bad(format!("ells[{i}] is 0; the qubit {{-l, +l}} needs l != 0"));
        }
        for (i, a) in self.ells.iter().enumerate() {
            if self.ells[..i].iter().any(|b| b.abs() == a.abs()) {
                return bad(format!("ell {a} appears twice"));
            }
        }
        if self.w_values.is_empty() {
            return bad("w_values must not be empty".into());
        }
        if let Some(w) = self
            .w_values
            .iter()
            .find(|w| !(**w >= 0.0) || !w.is_finite())
        {
            return bad(format!("W = {w} must be finite and >= 0"));
        }
        if self.realizations == 0 {
            return bad("realizations must be >= 1".into());
        }
        if !self.grid_n.is_power_of_two() || self.grid_n < MIN_SCREEN_GRID {
            return bad(format!(
                "grid_n = {} must be a power of two >= {MIN_SCREEN_GRID}",
                self.grid_n
            ));
        }
        for (name, v) in [
            ("window", self.window),
            ("w0", self.w0),
            ("wavelength", self.wavelength),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if self.protocols.is_empty() {
            return bad("protocols must not be empty".into());
        }
        if self.bootstrap_resamples == 1 {
            return bad("bootstrap_resamples must be 0 (off) or >= 2".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be >= 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = SweepConfig::default();
        assert_eq!(c.ells, [1, 3, 5, 7]);
        assert_eq!(c.w_values.len(), 17);
        assert_eq!(c.w_values[16], 4.0);
        assert_eq!(c.realizations, 30);
        assert_eq!(c.protocols.len(), 4);
        assert_eq!(c.bootstrap_resamples, 200);
        c.validate().unwrap();
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let c = SweepConfig::default();
        let text = c.to_toml_string().unwrap();
        assert_eq!(SweepConfig::from_toml_str(&text).unwrap(), c);

        let partial = SweepConfig::from_toml_str(
            "ells = [2]\nw_values = [0.0, 1.0]\naveraging = \"uniform\"\nprotocols = [\"six_state\"]\n",
        )
        .unwrap();
        assert_eq!(partial.ells, [2]);
        assert_eq!(partial.averaging, Averaging::Uniform);
        assert_eq!(partial.protocols, [Protocol::SixState]);
        assert_eq!(partial.realizations, 30);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(SweepConfig::from_toml_str("realisations = 3\n").is_err());
    }

    #[test]
    fn validation() {
        let ok = SweepConfig::default();
        let cases: [fn(&mut SweepConfig); 12] = [
            |c| c.ells = vec![0],
            |c| c.ells = vec![],
            |c| c.ells = vec![3, -3],
            |c| c.w_values = vec![-0.5],
            |c| c.w_values = vec![f64::NAN],
            |c| c.realizations = 0,
            |c| c.grid_n = 100,
            |c| c.grid_n = 8,
            |c| c.w0 = 0.0,
            |c| c.protocols.clear(),
            |c| c.bootstrap_resamples = 1,
            |c| c.threads = Some(0),
        ];
        for (i, f) in cases.iter().enumerate() {
            let mut c = ok.clone();
            f(&mut c);
            let err = c.validate().unwrap_err();
            assert_eq!(err.exit_code(), 2, "case {i}");
        }
    }
}
