//! Physical link description, unit conversions and the ASE noise model.
//!
//! Powers are carried in watts everywhere inside the library. dBm only shows
//! up at the edges (configuration files, CLI flags, sweep tables).

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Planck constant (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Carrier frequency of a 1550 nm channel (Hz).
pub const DEFAULT_CENTER_FREQ_HZ: f64 = 193.414_489e12;

/// Calibrated noise power per complex symbol, 2σ² = 2.0 mW.
pub const CALIBRATED_TWO_SIGMA_SQ: f64 = 2.0e-3;

pub fn dbm_to_watts(p_dbm: f64) -> Result<f64> {
    ensure_finite("p_dbm", p_dbm)?;
    Ok(10f64.powf(p_dbm / 10.0) * 1e-3)
}

/// Inverse of [`dbm_to_watts`]. Zero watts maps to `-inf`.
pub fn watts_to_dbm(p_watts: f64) -> Result<f64> {
    ensure_finite("p_watts", p_watts)?;
    if p_watts < 0.0 {
        return Err(Error::invalid("p_watts", "power must be nonnegative"));
    }
    Ok(10.0 * (p_watts * 1e3).log10())
}

/// Attenuation in nepers per km from a dB/km figure.
pub fn db_to_nepers(alpha_db_per_km: f64) -> f64 {
    alpha_db_per_km * std::f64::consts::LN_10 / 10.0
}

/// `(1 - exp(-αL)) / α` with α in nepers; `L` in the lossless limit.
pub fn effective_length(alpha_db_per_km: f64, length_km: f64) -> f64 {
    let a = db_to_nepers(alpha_db_per_km);
    if a == 0.0 {
        return length_km;
    }
    if length_km.is_infinite() {
        return 1.0 / a;
    }
    // -expm1(-aL) keeps precision for short spans
    -(-a * length_km).exp_m1() / a
}

/// Single-span link. `beta2` is in ps²/km, `gamma` in 1/(W·km).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkParams {
    pub gamma: f64,
    pub alpha_db_per_km: f64,
    pub beta2: f64,
    pub length_km: f64,
    pub baud_rate: f64,
    pub channel_spacing_hz: f64,
    pub memory: usize,
}

impl Default for LinkParams {
    /// The reference link: 250 km of SSMF at 32 Gbaud, memory window 5.
    fn default() -> Self {
        Self {
            gamma: 1.2,
            alpha_db_per_km: 0.2,
            beta2: -21.7,
            length_km: 250.0,
            baud_rate: 32e9,
            channel_spacing_hz: 50e9,
            memory: 5,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("gamma", self.gamma)?;
        ensure_finite("alpha_db_per_km", self.alpha_db_per_km)?;
        ensure_finite("beta2", self.beta2)?;
        ensure_finite("length_km", self.length_km)?;
        ensure_finite("baud_rate", self.baud_rate)?;
        ensure_finite("channel_spacing_hz", self.channel_spacing_hz)?;
        if self.gamma < 0.0 {
            return Err(Error::invalid("gamma", "must be >= 0"));
        }
        if self.alpha_db_per_km < 0.0 {
            return Err(Error::invalid("alpha_db_per_km", "must be >= 0"));
        }
        if self.length_km < 0.0 {
            return Err(Error::invalid("length_km", "must be >= 0"));
        }
        if self.baud_rate <= 0.0 {
            return Err(Error::invalid("baud_rate", "must be > 0"));
        }
        if self.channel_spacing_hz < 0.0 {
            return Err(Error::invalid("channel_spacing_hz", "must be >= 0"));
        }
        Ok(())
    }

    pub fn symbol_period(&self) -> f64 {
        1.0 / self.baud_rate
    }

    pub fn alpha_nepers_per_km(&self) -> f64 {
        db_to_nepers(self.alpha_db_per_km)
    }

    /// β₂ in s²/km.
    pub fn beta2_s2_per_km(&self) -> f64 {
        self.beta2 * 1e-24
    }

    pub fn effective_length_km(&self) -> f64 {
        effective_length(self.alpha_db_per_km, self.length_km)
    }

    /// Group delay of the neighbouring channel relative to the channel of
    /// interest after `z_km` of fiber (s).
    pub fn walkoff_delay(&self, z_km: f64) -> f64 {
        self.beta2_s2_per_km() * 2.0 * std::f64::consts::PI * self.channel_spacing_hz * z_km
    }
}

/// ASE noise: σ² is the variance per real dimension, so a noise sample has
/// `E|N|² = 2σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub sigma_sq: f64,
    pub nsp: Option<f64>,
}

impl NoiseParams {
    pub fn new(sigma_sq: f64) -> Result<Self> {
        ensure_finite("sigma_sq", sigma_sq)?;
        if sigma_sq <= 0.0 {
            return Err(Error::invalid("sigma_sq", "must be > 0"));
        }
        Ok(Self {
            sigma_sq,
            nsp: None,
        })
    }

    /// 2σ² = 2.0 mW.
    pub fn calibrated() -> Self {
        Self {
            sigma_sq: CALIBRATED_TWO_SIGMA_SQ / 2.0,
            nsp: None,
        }
    }

    /// Physical single-amplifier ASE level for `link`; fails when the formula
    /// gives zero noise (lossless or zero-length span).
    pub fn from_ase(link: &LinkParams, nsp: f64, center_freq_hz: f64) -> Result<Self> {
        let sigma_sq = ase_noise_variance(link, nsp, center_freq_hz)?;
        let mut out = Self::new(sigma_sq)?;
        out.nsp = Some(nsp);
        Ok(out)
    }

    pub fn two_sigma_sq(&self) -> f64 {
        2.0 * self.sigma_sq
    }
}

/// σ² = nsp·h·ν·(G − 1)·B with gain G = exp(α L) compensating the span and
/// `B` the symbol rate. Returns watts per real dimension.
pub fn ase_noise_variance(link: &LinkParams, nsp: f64, center_freq_hz: f64) -> Result<f64> {
    link.validate()?;
    ensure_finite("nsp", nsp)?;
    ensure_finite("center_freq_hz", center_freq_hz)?;
    if nsp < 1.0 {
        return Err(Error::invalid("nsp", "must be >= 1"));
    }
    if center_freq_hz <= 0.0 {
        return Err(Error::invalid("center_freq_hz", "must be > 0"));
    }
    let nepers = link.alpha_nepers_per_km() * link.length_km;
    if nepers > 700.0 {
        return Err(Error::GainOverflow { nepers });
    }
    let gain_minus_one = nepers.exp_m1();
    Ok(nsp * PLANCK * center_freq_hz * gain_minus_one * link.baud_rate)
}

/// Mean launch powers of the two users (W).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPair {
    pub p1: f64,
    pub p2: f64,
}

impl PowerPair {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        ensure_finite("p1", p1)?;
        ensure_finite("p2", p2)?;
        if p1 < 0.0 || p2 < 0.0 {
            return Err(Error::invalid("power", "powers must be >= 0"));
        }
        Ok(Self { p1, p2 })
    }

    pub fn symmetric(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    pub fn from_dbm(p1_dbm: f64, p2_dbm: f64) -> Result<Self> {
        Self::new(dbm_to_watts(p1_dbm)?, dbm_to_watts(p2_dbm)?)
    }

    /// The pair seen from the other receiver.
    pub fn swapped(self) -> Self {
        Self {
            p1: self.p2,
            p2: self.p1,
        }
    }
}
