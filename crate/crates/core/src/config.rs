//! TOML configuration. Every section is optional and falls back to the
//! documented defaults; unknown keys anywhere are an error.
//!
//! ```
//! let cfg = xpmcap::config::Config::from_toml_str(r#"
//! [link]
//! length_km = 100.0
//!
//! [noise]
//! mode = "explicit"
//! sigma_sq = 2e-3
//!
//! [sweep]
//! powers_dbm = [-10.0, 0.0]
//! "#).unwrap();
//! assert_eq!(cfg.link.length_km, 100.0);
//! assert_eq!(cfg.noise_params().unwrap().sigma_sq, 2e-3);
//! assert!(xpmcap::config::Config::from_toml_str("[link]\nlenght_km = 1.0").is_err());
//! ```

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::{CubicInterference, EffectiveCoefficient, PowerPlan};
use crate::coeffs::{CoeffEngine, PulseShape, QuadratureSettings, TimeFreqGrid};
use crate::error::{Error, Result};
use crate::system::{dbm_to_watts, LinkParams, NoiseParams, PowerPair, DEFAULT_CENTER_FREQ_HZ};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// `2σ² = 2 mW`.
    #[default]
    Calibrated,
    /// Lumped ASE from `nsp` and the carrier frequency.
    Ase,
    /// `sigma_sq` as given.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub mode: NoiseMode,
    /// Per real dimension (W); used by `explicit`.
    pub sigma_sq: Option<f64>,
    /// Spontaneous-emission factor; used by `ase`.
    pub nsp: Option<f64>,
    pub center_freq_hz: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            mode: NoiseMode::Calibrated,
            sigma_sq: None,
            nsp: None,
            center_freq_hz: DEFAULT_CENTER_FREQ_HZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoeffsSection {
    pub pulse: PulseShape,
    pub samples_per_symbol: usize,
    /// Explicit grid; auto-sized from the link when absent.
    pub grid: Option<TimeFreqGrid>,
    pub quadrature: QuadratureSettings,
}

impl Default for CoeffsSection {
    fn default() -> Self {
        Self {
            pulse: PulseShape::default(),
            samples_per_symbol: 8,
            grid: None,
            quadrature: QuadratureSettings::default(),
        }
    }
}

/// Inline effective coefficient `(g_R, |g|²)` in 1/W and 1/W².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineCoefficient {
    pub g_real: f64,
    pub g_abs_sq: f64,
}

impl InlineCoefficient {
    pub fn effective(&self) -> Result<EffectiveCoefficient> {
        EffectiveCoefficient::new(self.g_real, self.g_abs_sq)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub powers_dbm: Vec<f64>,
    /// Hold `P₂` fixed at this launch power instead of `P₂ = P₁`.
    pub interferer_dbm: Option<f64>,
    pub g_x: Option<InlineCoefficient>,
    pub g_w: Option<InlineCoefficient>,
    /// Cubic interference constant (1/W²) for the interference-as-noise rate.
    pub kappa: Option<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            powers_dbm: (-10..=20).map(f64::from).collect(),
            interferer_dbm: None,
            g_x: None,
            g_w: None,
            kappa: None,
        }
    }
}

impl SweepSection {
    pub fn plan(&self) -> Result<PowerPlan> {
        Ok(match self.interferer_dbm {
            None => PowerPlan::Symmetric,
            Some(d) => PowerPlan::FixedInterferer(dbm_to_watts(d)?),
        })
    }

    pub fn cubic(&self) -> Option<CubicInterference> {
        self.kappa.map(|kappa| CubicInterference { kappa })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimModel {
    #[default]
    Memoryless,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub samples: usize,
    pub p1_dbm: f64,
    pub p2_dbm: f64,
    pub model: SimModel,
    /// Memoryless coefficients (1/W); ignored by the full model.
    pub g_x: [f64; 2],
    pub g_w: [f64; 2],
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            samples: 10_000,
            p1_dbm: 0.0,
            p2_dbm: 0.0,
            model: SimModel::Memoryless,
            g_x: [0.0, 0.0],
            g_w: [0.0, 0.0],
        }
    }
}

impl SimulationSection {
    pub fn powers(&self) -> Result<PowerPair> {
        PowerPair::from_dbm(self.p1_dbm, self.p2_dbm)
    }

    pub fn coefficients(&self) -> (Complex64, Complex64) {
        (Complex64::new(self.g_x[0], self.g_x[1]), Complex64::new(self.g_w[0], self.g_w[1]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub samples: usize,
    pub p1_dbm: f64,
    pub p2_dbm: f64,
    /// `[re, im]` of the memoryless coefficients (1/W).
    pub g_x: [f64; 2],
    pub g_w: [f64; 2],
    /// Interferer symbol held fixed by the conditional check.
    pub w: [f64; 2],
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            samples: 200_000,
            p1_dbm: 0.0,
            p2_dbm: 0.0,
            g_x: [35.0, 30.0],
            g_w: [35.0, 30.0],
            w: [0.02, 0.01],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub link: LinkParams,
    pub noise: NoiseSection,
    pub coeffs: CoeffsSection,
    pub sweep: SweepSection,
    pub simulation: SimulationSection,
    pub verify: VerifySection,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Checks everything that can be checked without running a computation.
    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        self.noise_params()?;
        self.coeffs.pulse.validate()?;
        let q = &self.coeffs.quadrature;
        if q.nodes == 0 || q.refinements > q.max_refinements || !(q.tolerance > 0.0) {
            return Err(Error::invalid("coeffs.quadrature", "need nodes >= 1, refinements <= max_refinements, tolerance > 0"));
        }
        if let Some(g) = self.coeffs.grid {
            TimeFreqGrid::new(g.n_samples, g.t_span)?;
        }
        if self.sweep.powers_dbm.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("sweep.powers_dbm"));
        }
        self.sweep.plan()?;
        for c in [self.sweep.g_x, self.sweep.g_w].into_iter().flatten() {
            c.effective()?;
        }
        if let Some(k) = self.sweep.kappa {
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::invalid("sweep.kappa", "must be >= 0"));
            }
        }
        self.simulation.powers()?;
        PowerPair::from_dbm(self.verify.p1_dbm, self.verify.p2_dbm)?;
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(finite(&self.simulation.g_x) && finite(&self.simulation.g_w) && finite(&self.verify.g_x) && finite(&self.verify.g_w) && finite(&self.verify.w)) {
            return Err(Error::NonFinite("coefficient"));
        }
        Ok(())
    }

    pub fn noise_params(&self) -> Result<NoiseParams> {
        match self.noise.mode {
            NoiseMode::Calibrated => Ok(NoiseParams::calibrated()),
            NoiseMode::Explicit => NoiseParams::new(
                self.noise
                    .sigma_sq
                    .ok_or_else(|| Error::invalid("noise.sigma_sq", "required when mode = \"explicit\""))?,
            ),
            NoiseMode::Ase => NoiseParams::from_ase(
                &self.link,
                self.noise.nsp.ok_or_else(|| Error::invalid("noise.nsp", "required when mode = \"ase\""))?,
                self.noise.center_freq_hz,
            ),
        }
    }

    pub fn engine(&self) -> Result<CoeffEngine> {
        let grid = match self.coeffs.grid {
            Some(g) => g,
            None => TimeFreqGrid::for_link(&self.link, &self.coeffs.pulse, self.coeffs.samples_per_symbol)?,
        };
        CoeffEngine::new(self.link, self.coeffs.pulse.clone(), grid, self.coeffs.quadrature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = Config::from_toml_str("").unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.noise_params().unwrap().two_sigma_sq(), 2e-3);
    }

    #[test]
    fn round_trip() {
        let mut cfg = Config::default();
        cfg.sweep.g_x = Some(InlineCoefficient { g_real: 35.0, g_abs_sq: 55.0 });
        cfg.coeffs.pulse = PulseShape::RootRaisedCosine { rolloff: 0.1 };
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(Config::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "[noise]\nmode = \"explicit\"",
            "[noise]\nmode = \"ase\"",
            "[link]\nbaud_rate = -1.0",
            "[sweep]\ninterferer_dbm = nan",
            "[unknown]\nx = 1",
            "seed = \"x\"",
            "[coeffs.grid]\nn_samples = 100\nt_span = 1e-9",
        ] {
            assert!(Config::from_toml_str(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn ase_mode() {
        let cfg = Config::from_toml_str("[noise]\nmode = \"ase\"\nnsp = 1.5").unwrap();
        assert!(cfg.noise_params().unwrap().sigma_sq > 0.0);
    }
}
