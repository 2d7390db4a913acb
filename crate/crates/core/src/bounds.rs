//! Outer bound on the capacity region of the memoryless two-user model,
//! together with the AWGN reference bound and the interference-as-noise
//! rate. All rates are in bits per symbol.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::cscg_from;
use crate::coeffs::CoeffTensor;
use crate::error::{ensure_finite, Error, Result};
use crate::rng::seeded;
use crate::system::{dbm_to_watts, PowerPair};

/// `(Re g, |g|²)` for one receiver's `c[0,0,0]`.
///
/// The two numbers are independent inputs so that fitted effective values
/// (which need not come from any complex `g`) can be evaluated. Setting
/// `enforce_modulus` restores the physical constraint `|g|² ≥ (Re g)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveCoefficient {
    pub g_real: f64,
    pub g_abs_sq: f64,
    #[serde(default)]
    pub enforce_modulus: bool,
}

impl EffectiveCoefficient {
    pub fn new(g_real: f64, g_abs_sq: f64) -> Result<Self> {
        ensure_finite("g_real", g_real)?;
        ensure_finite("g_abs_sq", g_abs_sq)?;
        if g_abs_sq < 0.0 {
            return Err(Error::invalid("g_abs_sq", "must be >= 0"));
        }
        Ok(Self {
            g_real,
            g_abs_sq,
            enforce_modulus: false,
        })
    }

    pub fn zero() -> Self {
        Self {
            g_real: 0.0,
            g_abs_sq: 0.0,
            enforce_modulus: true,
        }
    }

    pub fn from_complex(g: Complex64) -> Self {
        Self {
            g_real: g.re,
            g_abs_sq: g.norm_sqr(),
            enforce_modulus: true,
        }
    }

    pub fn with_modulus_check(mut self) -> Result<Self> {
        self.enforce_modulus = true;
        self.validate()?;
        Ok(self)
    }

    /// `true` when some complex number has this real part and modulus.
    pub fn is_physical(&self) -> bool {
        self.g_abs_sq >= self.g_real * self.g_real * (1.0 - 1e-12)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("g_real", self.g_real)?;
        ensure_finite("g_abs_sq", self.g_abs_sq)?;
        if self.g_abs_sq < 0.0 {
            return Err(Error::invalid("g_abs_sq", "must be >= 0"));
        }
        if self.enforce_modulus && !self.is_physical() {
            return Err(Error::Modulus {
                g_abs_sq: self.g_abs_sq,
                g_real_sq: self.g_real * self.g_real,
            });
        }
        Ok(())
    }
}

fn check_noise(sigma_sq: f64) -> Result<()> {
    ensure_finite("sigma_sq", sigma_sq)?;
    if sigma_sq <= 0.0 {
        return Err(Error::invalid("sigma_sq", "must be > 0"));
    }
    Ok(())
}

/// `log₂(1 + p / 2σ²)`.
pub fn awgn_capacity(p: f64, sigma_sq: f64) -> f64 {
    (p / (2.0 * sigma_sq)).ln_1p() / std::f64::consts::LN_2
}

fn bracket(g: &EffectiveCoefficient, p_other: f64) -> Result<f64> {
    g.validate()?;
    let b = 1.0 + 2.0 * g.g_real * p_other + 2.0 * g.g_abs_sq * p_other * p_other;
    if b < 0.0 {
        return Err(Error::NegativeBracket { bracket: b });
    }
    Ok(b)
}

fn single_user(p_own: f64, p_other: f64, g: &EffectiveCoefficient, sigma_sq: f64) -> Result<f64> {
    check_noise(sigma_sq)?;
    let b = bracket(g, p_other)?;
    Ok(awgn_capacity(b * p_own, sigma_sq))
}

/// `U₁ = log₂(1 + (1 + 2g_R P₂ + 2|g|² P₂²) P₁ / 2σ²)`.
pub fn outer_bound_u1(pp: PowerPair, g_x: EffectiveCoefficient, sigma_sq: f64) -> Result<f64> {
    single_user(pp.p1, pp.p2, &g_x, sigma_sq)
}

/// `U₂`, the same bound seen from receiver 2.
pub fn outer_bound_u2(pp: PowerPair, g_w: EffectiveCoefficient, sigma_sq: f64) -> Result<f64> {
    single_user(pp.p2, pp.p1, &g_w, sigma_sq)
}

/// `U_sum = 2 log₂((2^{U₁} + 2^{U₂})/2 + (|g_x|² P₂² P₁ + |g_w|² P₁² P₂)/2σ²)`.
pub fn outer_bound_sum(
    pp: PowerPair,
    g_x: EffectiveCoefficient,
    g_w: EffectiveCoefficient,
    sigma_sq: f64,
) -> Result<f64> {
    let u1 = outer_bound_u1(pp, g_x, sigma_sq)?;
    let u2 = outer_bound_u2(pp, g_w, sigma_sq)?;
    Ok(sum_from_parts(pp, u1, u2, &g_x, &g_w, sigma_sq))
}

fn sum_from_parts(
    pp: PowerPair,
    u1: f64,
    u2: f64,
    g_x: &EffectiveCoefficient,
    g_w: &EffectiveCoefficient,
    sigma_sq: f64,
) -> f64 {
    let cross = (g_x.g_abs_sq * pp.p2 * pp.p2 * pp.p1 + g_w.g_abs_sq * pp.p1 * pp.p1 * pp.p2) / (2.0 * sigma_sq);
    2.0 * ((u1.exp2() + u2.exp2()) / 2.0 + cross).log2()
}

/// How the deterministic part of the `m = p` terms is treated when the
/// interference is turned into an equivalent noise power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanHandling {
    /// Subtract `E[· | X] = P₂ Σ c[l,m,m] X_{-l}`: the known rotation and
    /// scaling of the own signal is not noise.
    #[default]
    RemoveConditionalMean,
    /// Count everything as noise.
    Keep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceMode {
    Analytic,
    MonteCarlo { seed: u64, samples: usize },
}

/// Smallest Monte-Carlo sample count accepted by [`interference_variance`].
pub const MIN_VARIANCE_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    /// Interference power (W).
    pub value: f64,
    /// Zero for the analytic mode.
    pub stderr: f64,
}

/// Power of the trilinear interference seen by the receiver owning `coeffs`,
/// for CSCG inputs with `E|X|² = pp.p1` (own) and `E|W|² = pp.p2`
/// (interferer).
///
/// With `V = W_{-m} W*_{-p} − P₂ δ_{mp}`, Isserlis gives
/// `E[V_{mp} V*_{m'p'}] = P₂² δ_{mm'} δ_{pp'}`, so after centring every
/// index has moment multiplier 1 and the power is `P₁ P₂² Σ|c|²`. Keeping
/// the mean adds the coherent `P₁ P₂² Σ_l |Σ_m c[l,m,m]|²`.
pub fn interference_variance(
    coeffs: &CoeffTensor,
    pp: PowerPair,
    mode: VarianceMode,
    mean: MeanHandling,
) -> Result<VarianceEstimate> {
    match mode {
        VarianceMode::Analytic => Ok(VarianceEstimate {
            value: analytic_variance(coeffs, pp, mean),
            stderr: 0.0,
        }),
        VarianceMode::MonteCarlo { seed, samples } => {
            if samples < MIN_VARIANCE_SAMPLES {
                return Err(Error::SampleBudget {
                    requested: samples,
                    minimum: MIN_VARIANCE_SAMPLES,
                });
            }
            Ok(monte_carlo_variance(coeffs, pp, mean, seed, samples))
        }
    }
}

fn analytic_variance(coeffs: &CoeffTensor, pp: PowerPair, mean: MeanHandling) -> f64 {
    let scale = pp.p1 * pp.p2 * pp.p2;
    let incoherent: f64 = coeffs.values().iter().map(|c| c.norm_sqr()).sum();
    let coherent = match mean {
        MeanHandling::RemoveConditionalMean => 0.0,
        MeanHandling::Keep => {
            let mm = coeffs.memory as i32;
            (-mm..=mm)
                .map(|l| (-mm..=mm).map(|m| coeffs.get(l, m, m)).sum::<Complex64>().norm_sqr())
                .sum()
        }
    };
    scale * (incoherent + coherent)
}

fn monte_carlo_variance(
    coeffs: &CoeffTensor,
    pp: PowerPair,
    mean: MeanHandling,
    seed: u64,
    samples: usize,
) -> VarianceEstimate {
    let width = coeffs.width();
    let mm = coeffs.memory as i32;
    let terms: Vec<(usize, usize, usize, Complex64)> = coeffs
        .iter()
        .filter(|t| t.3 != Complex64::new(0.0, 0.0))
        .map(|(l, m, p, c)| ((l + mm) as usize, (m + mm) as usize, (p + mm) as usize, c))
        .collect();
    // E[· | X] weights: P₂ Σ_m c[l,m,m]
    let cond: Vec<Complex64> = (-mm..=mm)
        .map(|l| (-mm..=mm).map(|m| coeffs.get(l, m, m)).sum::<Complex64>() * pp.p2)
        .collect();
    let mut rng = seeded(seed);
    let (sx, sw) = ((pp.p1 / 2.0).sqrt(), (pp.p2 / 2.0).sqrt());
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sum_sq = 0.0;
    let mut sum_4th = 0.0;
    for _ in 0..samples {
        let x = cscg_from(&mut rng, width, sx);
        let w = cscg_from(&mut rng, width, sw);
        let mut s = Complex64::new(0.0, 0.0);
        for &(l, m, p, c) in &terms {
            s += c * w[m] * w[p].conj() * x[l];
        }
        if mean == MeanHandling::RemoveConditionalMean {
            for (l, &k) in cond.iter().enumerate() {
                s -= k * x[l];
            }
        }
        let e = s.norm_sqr();
        sum += s;
        sum_sq += e;
        sum_4th += e * e;
    }
    let n = samples as f64;
    let m = sum / n;
    let second = sum_sq / n;
    let value = (second - m.norm_sqr()) * n / (n - 1.0);
    let var_of_e = (sum_4th / n - second * second).max(0.0);
    VarianceEstimate {
        value,
        stderr: (var_of_e / n).sqrt(),
    }
}

/// `log₂(1 + p / (2σ² + p_int))`.
pub fn ian_rate(p_signal: f64, sigma_sq: f64, p_int: f64) -> Result<f64> {
    check_noise(sigma_sq)?;
    ensure_finite("p_int", p_int)?;
    if p_int < 0.0 {
        return Err(Error::invalid("p_int", "must be >= 0"));
    }
    Ok((p_signal / (2.0 * sigma_sq + p_int)).ln_1p() / std::f64::consts::LN_2)
}

/// Cubic law `p_int = κ P_own P_other²`, the form the analytic variance takes
/// with `κ = Σ|c|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubicInterference {
    /// 1/W².
    pub kappa: f64,
}

impl CubicInterference {
    pub fn power(&self, p_own: f64, p_other: f64) -> f64 {
        self.kappa * p_own * p_other * p_other
    }

    /// κ placing the symmetric interference-as-noise peak at `p_star`: the
    /// SINR `P / (2σ² + κP³)` is stationary at `P* = (2σ² / 2κ)^{1/3}`.
    pub fn from_peak(p_star: f64, sigma_sq: f64) -> Result<Self> {
        check_noise(sigma_sq)?;
        ensure_finite("p_star", p_star)?;
        if p_star <= 0.0 {
            return Err(Error::invalid("p_star", "must be > 0"));
        }
        Ok(Self {
            kappa: sigma_sq / p_star.powi(3),
        })
    }

    pub fn peak_power(&self, sigma_sq: f64) -> f64 {
        (sigma_sq / self.kappa).cbrt()
    }
}

/// Effective `(2g_R, 2|g|²)` that make the symmetric `U₁` pass through two
/// `(P, rate)` points. Solves
/// `a P + b P² = (2^U − 1) 2σ²/P − 1` at both points.
pub fn fit_symmetric_u1(points: [(f64, f64); 2], sigma_sq: f64) -> Result<(f64, f64)> {
    check_noise(sigma_sq)?;
    let rhs = |(p, u): (f64, f64)| (u.exp2() - 1.0) * 2.0 * sigma_sq / p - 1.0;
    let [(p1, _), (p2, _)] = points;
    let (r1, r2) = (rhs(points[0]), rhs(points[1]));
    let det = p1 * p2 * p2 - p2 * p1 * p1;
    if det.abs() < f64::EPSILON * (p1 * p2 * p2).abs() || !det.is_finite() {
        return Err(Error::invalid("points", "powers must be distinct and nonzero"));
    }
    let a = (r1 * p2 * p2 - r2 * p1 * p1) / det;
    let b = (p1 * r2 - p2 * r1) / det;
    Ok((a, b))
}

impl EffectiveCoefficient {
    /// Coefficient from the fitted pair `(2g_R, 2|g|²)`.
    pub fn from_fit((a, b): (f64, f64)) -> Result<Self> {
        Self::new(a / 2.0, b / 2.0)
    }
}

/// Bound triple plus reference rates at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub at: PowerPair,
    pub u1: f64,
    pub u2: f64,
    pub u_sum: f64,
    pub awgn1: f64,
    pub awgn2: f64,
    pub ian1: f64,
    pub ian2: f64,
}

/// Source of the interference power used for the interference-as-noise rates.
#[derive(Debug, Clone)]
pub enum Interference {
    None,
    Cubic { x: CubicInterference, w: CubicInterference },
    Tensors { x: CoeffTensor, w: CoeffTensor, mean: MeanHandling },
}

impl Interference {
    fn powers(&self, pp: PowerPair) -> Result<(f64, f64)> {
        Ok(match self {
            Interference::None => (0.0, 0.0),
            Interference::Cubic { x, w } => (x.power(pp.p1, pp.p2), w.power(pp.p2, pp.p1)),
            Interference::Tensors { x, w, mean } => (
                interference_variance(x, pp, VarianceMode::Analytic, *mean)?.value,
                interference_variance(w, pp.swapped(), VarianceMode::Analytic, *mean)?.value,
            ),
        })
    }
}

pub fn bound_set(
    pp: PowerPair,
    g_x: EffectiveCoefficient,
    g_w: EffectiveCoefficient,
    interference: &Interference,
    sigma_sq: f64,
) -> Result<BoundSet> {
    let u1 = outer_bound_u1(pp, g_x, sigma_sq)?;
    let u2 = outer_bound_u2(pp, g_w, sigma_sq)?;
    let u_sum = sum_from_parts(pp, u1, u2, &g_x, &g_w, sigma_sq);
    let (i1, i2) = interference.powers(pp)?;
    Ok(BoundSet {
        at: pp,
        u1,
        u2,
        u_sum,
        awgn1: awgn_capacity(pp.p1, sigma_sq),
        awgn2: awgn_capacity(pp.p2, sigma_sq),
        ian1: ian_rate(pp.p1, sigma_sq, i1)?,
        ian2: ian_rate(pp.p2, sigma_sq, i2)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerPlan {
    /// `P₂ = P₁` at every point.
    Symmetric,
    /// `P₂` held at this value (W).
    FixedInterferer(f64),
}

/// One [`BoundSet`] per entry of `powers_dbm` (which sets `P₁`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub p_dbm: Vec<f64>,
    pub rows: Vec<BoundSet>,
}

pub fn sweep(
    powers_dbm: &[f64],
    plan: PowerPlan,
    g_x: EffectiveCoefficient,
    g_w: EffectiveCoefficient,
    interference: &Interference,
    sigma_sq: f64,
) -> Result<SweepTable> {
    if powers_dbm.is_empty() {
        return Err(Error::invalid("powers_dbm", "empty power list"));
    }
    let rows = powers_dbm
        .iter()
        .map(|&d| {
            let p1 = dbm_to_watts(d)?;
            let pp = match plan {
                PowerPlan::Symmetric => PowerPair::symmetric(p1)?,
                PowerPlan::FixedInterferer(p2) => PowerPair::new(p1, p2)?,
            };
            bound_set(pp, g_x, g_w, interference, sigma_sq)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        p_dbm: powers_dbm.to_vec(),
        rows,
    })
}

pub const SWEEP_CSV_HEADER: &str = "p_dbm,u1,u2,u_sum,awgn,ian1,ian2";

impl SweepTable {
    /// Six significant digits, '.' decimal separator.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for (d, r) in self.p_dbm.iter().zip(&self.rows) {
            let cols = [*d, r.u1, r.u2, r.u_sum, r.awgn1, r.ian1, r.ian2];
            let line: Vec<String> = cols.iter().map(|&v| format_sig(v, 6)).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Reads the columns of [`SWEEP_CSV_HEADER`] back from a sweep CSV.
    pub fn parse_csv_rows(text: &str) -> Result<Vec<[f64; 7]>> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == SWEEP_CSV_HEADER => {}
            other => return Err(Error::Parse(format!("unexpected sweep header {other:?}"))),
        }
        lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let v: Vec<f64> = l
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Parse(e.to_string()))?;
                <[f64; 7]>::try_from(v.as_slice())
                    .map_err(|_| Error::Parse(format!("expected 7 columns, got {}", v.len())))
            })
            .collect()
    }
}

/// `%g`-style formatting with `sig` significant digits.
pub fn format_sig(v: f64, sig: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    let s = if exp < -5 || exp >= sig as i32 {
        let m = format!("{:.*e}", sig - 1, v);
        let (mant, e) = m.split_once('e').unwrap();
        format!("{}e{}", trim_zeros(mant), e)
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    };
    // rounding can carry into a new digit (9.999995 -> 10.0000); redo once
    if let Ok(parsed) = s.parse::<f64>() {
        let e2 = parsed.abs().log10().floor() as i32;
        if e2 != exp && parsed != 0.0 {
            return format_sig(parsed, sig);
        }
    }
    s
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::User;
    use proptest::prelude::*;

    const S2: f64 = 1e-3;

    #[test]
    fn awgn_points() {
        assert!((awgn_capacity(1e-5, S2) - 0.0071955).abs() < 1e-6);
        let p = dbm_to_watts(-5.0).unwrap();
        assert!((awgn_capacity(p, S2) - 0.2117771).abs() < 1e-6);
        assert_eq!(awgn_capacity(0.0, S2), 0.0);
    }

    #[test]
    fn u1_reductions() {
        let pp = PowerPair::new(2e-3, 3e-3).unwrap();
        assert_eq!(outer_bound_u1(pp, EffectiveCoefficient::zero(), S2).unwrap(), awgn_capacity(2e-3, S2));
        let g = EffectiveCoefficient::new(30.0, 2000.0).unwrap();
        let pp0 = PowerPair::new(2e-3, 0.0).unwrap();
        assert_eq!(outer_bound_u1(pp0, g, S2).unwrap(), awgn_capacity(2e-3, S2));
    }

    #[test]
    fn u1_fitted_point() {
        // per-mW numbers from the two-point fit, converted to W
        let g = EffectiveCoefficient::from_fit((0.0700e3, 1.109e-4 * 1e6)).unwrap();
        let pp = PowerPair::symmetric(3.3113e-3).unwrap();
        let u1 = outer_bound_u1(pp, g, S2).unwrap();
        assert!((u1 - 1.6048).abs() < 5e-4, "{u1}");
        assert!((u1 - 1.60446).abs() < 5e-3);
    }

    #[test]
    fn negative_bracket_is_a_domain_error() {
        let g = EffectiveCoefficient::new(-1000.0, 0.0).unwrap();
        let pp = PowerPair::symmetric(1e-2).unwrap();
        assert!(matches!(outer_bound_u1(pp, g, S2), Err(Error::NegativeBracket { .. })));
    }

    #[test]
    fn modulus_flag() {
        let g = EffectiveCoefficient::new(35.0, 55.0).unwrap();
        assert!(!g.is_physical());
        assert!(g.with_modulus_check().is_err());
        assert!(EffectiveCoefficient::from_complex(Complex64::new(3.0, -4.0)).validate().is_ok());
    }

    #[test]
    fn sum_examples() {
        let pp = PowerPair::symmetric(1e-3).unwrap();
        let z = EffectiveCoefficient::zero();
        let u1 = outer_bound_u1(pp, z, S2).unwrap();
        let us = outer_bound_sum(pp, z, z, S2).unwrap();
        assert!((us - 2.0 * u1).abs() < 1e-14);

        // U₁ = U₂ = 1 with each cross term equal to 0.5: take 2σ² = P = 1,
        // |g|² = 0.5 and g_R = -0.5 so the bracket is exactly 1.
        let p: f64 = 1.0;
        let s2 = 0.5;
        let g_abs_sq = 0.5 * 2.0 * s2 / p.powi(3);
        let g = EffectiveCoefficient::new(-g_abs_sq * p, g_abs_sq).unwrap();
        let pp = PowerPair::symmetric(p).unwrap();
        assert!((outer_bound_u1(pp, g, s2).unwrap() - 1.0).abs() < 1e-14);
        let us = outer_bound_sum(pp, g, g, s2).unwrap();
        assert!((us - 2.0 * 3f64.log2()).abs() < 1e-12);
        assert!((us - 3.1699).abs() < 1e-4);
    }

    #[test]
    fn variance_examples() {
        let pp = PowerPair::new(2e-3, 3e-3).unwrap();
        let zero = CoeffTensor::zeros(User::X, 3);
        for mode in [VarianceMode::Analytic, VarianceMode::MonteCarlo { seed: 1, samples: 5000 }] {
            let v = interference_variance(&zero, pp, mode, MeanHandling::default()).unwrap();
            assert_eq!(v.value, 0.0);
        }
        let mut t = CoeffTensor::zeros(User::X, 3);
        let c = Complex64::new(20.0, -7.0);
        t.set(1, 2, 3, c);
        let v = interference_variance(&t, pp, VarianceMode::Analytic, MeanHandling::Keep).unwrap();
        assert!((v.value - c.norm_sqr() * 2e-3 * 9e-6).abs() < 1e-18);
        assert!(matches!(
            interference_variance(&t, pp, VarianceMode::MonteCarlo { seed: 0, samples: 10 }, MeanHandling::Keep),
            Err(Error::SampleBudget { .. })
        ));
    }

    #[test]
    fn ian_examples() {
        assert_eq!(ian_rate(1e-3, S2, 0.0).unwrap(), awgn_capacity(1e-3, S2));
        let k = CubicInterference { kappa: 12.9e6 };
        let big = 10.0;
        assert!(ian_rate(big, S2, k.power(big, big)).unwrap() < 1e-6);
        assert!(ian_rate(1e-3, S2, -1.0).is_err());
    }

    #[test]
    fn kappa_from_peak_inverts() {
        let k = CubicInterference::from_peak(4e-4, S2).unwrap();
        assert!((k.peak_power(S2) - 4e-4).abs() < 1e-15);
    }

    #[test]
    fn sweep_awgn_column() {
        let t = sweep(
            &[-20.0, -5.0, 10.3],
            PowerPlan::Symmetric,
            EffectiveCoefficient::zero(),
            EffectiveCoefficient::zero(),
            &Interference::None,
            S2,
        )
        .unwrap();
        let want = [0.00720, 0.21178, 2.66848];
        for (r, w) in t.rows.iter().zip(want) {
            assert!((r.awgn1 - w).abs() < 5e-5);
            assert_eq!(r.u1, r.awgn1);
            assert_eq!(r.ian1, r.awgn1);
            assert!((r.u_sum - 2.0 * r.u1).abs() < 1e-12);
        }
        let csv = t.to_csv();
        assert!(csv.starts_with("p_dbm,u1,u2,u_sum,awgn,ian1,ian2\n-20,0.0071955,"));
        let back = SweepTable::parse_csv_rows(&csv).unwrap();
        assert_eq!(back.len(), 3);
        assert!(sweep(&[], PowerPlan::Symmetric, EffectiveCoefficient::zero(), EffectiveCoefficient::zero(), &Interference::None, S2).is_err());
    }

    #[test]
    fn sweep_u1_monotone() {
        let g = EffectiveCoefficient::from_fit((70.0, 110.9)).unwrap();
        let powers: Vec<f64> = (0..60).map(|i| -20.0 + 0.5 * i as f64).collect();
        let t = sweep(&powers, PowerPlan::Symmetric, g, g, &Interference::None, S2).unwrap();
        assert!(t.rows.windows(2).all(|w| w[1].u1 >= w[0].u1));
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(0.0071955014, 6), "0.0071955");
        assert_eq!(format_sig(2.668481461, 6), "2.66848");
        assert_eq!(format_sig(-20.0, 6), "-20");
        assert_eq!(format_sig(10.3, 6), "10.3");
        assert_eq!(format_sig(1.234567e-7, 6), "1.23457e-7");
        assert_eq!(format_sig(9.9999996, 6), "10");
        assert_eq!(format_sig(1234567.0, 6), "1.23457e6");
    }

    proptest! {
        #[test]
        fn sum_dominates_parts(
            p1 in 0.0f64..0.1, p2 in 0.0f64..0.1,
            gr_x in -5.0f64..50.0, ga_x in 0.0f64..5e3,
            gr_w in -5.0f64..50.0, ga_w in 0.0f64..5e3,
            s2 in 1e-5f64..1e-2,
        ) {
            let pp = PowerPair::new(p1, p2).unwrap();
            let gx = EffectiveCoefficient::new(gr_x, ga_x).unwrap();
            let gw = EffectiveCoefficient::new(gr_w, ga_w).unwrap();
            if let (Ok(u1), Ok(u2), Ok(us)) = (outer_bound_u1(pp, gx, s2), outer_bound_u2(pp, gw, s2), outer_bound_sum(pp, gx, gw, s2)) {
                prop_assert!(us >= u1 + u2 - 1e-12 * (u1 + u2).max(1.0));
            }
        }

        #[test]
        fn u1_increases_in_p1(p1 in 0.0f64..0.05, dp in 1e-6f64..0.05, p2 in 0.0f64..0.05, gr in 0.0f64..50.0, ga in 0.0f64..5e3) {
            let g = EffectiveCoefficient::new(gr, ga).unwrap();
            let a = outer_bound_u1(PowerPair::new(p1, p2).unwrap(), g, S2).unwrap();
            let b = outer_bound_u1(PowerPair::new(p1 + dp, p2).unwrap(), g, S2).unwrap();
            prop_assert!(b > a);
            let c = outer_bound_u1(PowerPair::new(p1, p2 + dp).unwrap(), g, S2).unwrap();
            prop_assert!(c >= a);
        }
    }
}
