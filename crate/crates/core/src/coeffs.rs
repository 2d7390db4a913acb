//! First-order XPM perturbation coefficients.
//!
//! For the channel of interest with dispersed pulse `g(z, t)` and the
//! neighbouring channel's dispersed, walked-off pulse `g_w(z, t)`,
//!
//! ```text
//! c[l,m,p] = 2jγ ∫₀ᴸ e^{-αz} T ∫ g*(z,t) g(z,t-lT) g_w(z,t-mT) g_w*(z,t-pT) dt dz
//! ```
//!
//! Pulses are normalised to unit energy, so the extra factor of the symbol
//! period `T` makes the time integral dimensionless and the coefficients
//! come out in 1/W. The time integral is a trapezoid sum on a periodic FFT
//! grid (exact for band-limited integrands sampled above their bandwidth);
//! the z integral is composite Gauss–Legendre with panel doubling until
//! consecutive levels agree.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::LinkParams;

/// Fraction of pulse energy allowed in the two samples either side of the
/// window edge before a grid is declared too small.
pub const EDGE_ENERGY_LIMIT: f64 = 1e-6;

const MAX_AUTO_SYMBOLS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PulseShape {
    NyquistSinc,
    /// Root-raised-cosine with roll-off in `[0, 1]`.
    RootRaisedCosine { rolloff: f64 },
    /// Gaussian amplitude `exp(-t²/(2 w²))` with `w = width · T`.
    Gaussian { width: f64 },
}

impl Default for PulseShape {
    fn default() -> Self {
        PulseShape::NyquistSinc
    }
}

impl PulseShape {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PulseShape::NyquistSinc => Ok(()),
            PulseShape::RootRaisedCosine { rolloff } => {
                if !(0.0..=1.0).contains(&rolloff) {
                    return Err(Error::invalid("rolloff", "must lie in [0, 1]"));
                }
                Ok(())
            }
            PulseShape::Gaussian { width } => {
                if !(width.is_finite() && width > 0.0) {
                    return Err(Error::invalid("width", "must be > 0"));
                }
                Ok(())
            }
        }
    }

    /// One-sided bandwidth in units of the baud rate.
    pub fn half_bandwidth(&self) -> f64 {
        match *self {
            PulseShape::NyquistSinc => 0.5,
            PulseShape::RootRaisedCosine { rolloff } => 0.5 * (1.0 + rolloff),
            // ~1e-9 of the amplitude spectrum left beyond this
            PulseShape::Gaussian { width } => 1.0 / (PI * width),
        }
    }

    /// Continuous-time spectrum at normalised frequency `nu = f·T`, up to a
    /// constant factor.
    fn spectrum(&self, nu: f64) -> f64 {
        let a = nu.abs();
        match *self {
            PulseShape::NyquistSinc => {
                if a < 0.5 - 1e-12 {
                    1.0
                } else if a <= 0.5 + 1e-12 {
                    0.5
                } else {
                    0.0
                }
            }
            PulseShape::RootRaisedCosine { rolloff } => {
                let lo = 0.5 * (1.0 - rolloff);
                let hi = 0.5 * (1.0 + rolloff);
                if a <= lo {
                    1.0
                } else if a <= hi {
                    (0.5 * (1.0 + (PI / rolloff * (a - lo)).cos())).sqrt()
                } else {
                    0.0
                }
            }
            PulseShape::Gaussian { width } => (-2.0 * PI * PI * nu * nu * width * width).exp(),
        }
    }
}

/// Periodic sampling window. Time origin sits at index 0; the window edge is
/// the middle of the sample vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeFreqGrid {
    pub n_samples: usize,
    /// Window length (s).
    pub t_span: f64,
}

impl TimeFreqGrid {
    pub fn new(n_samples: usize, t_span: f64) -> Result<Self> {
        if n_samples < 8 || !n_samples.is_power_of_two() {
            return Err(Error::invalid("n_samples", "must be a power of two >= 8"));
        }
        if !(t_span.is_finite() && t_span > 0.0) {
            return Err(Error::invalid("t_span", "must be > 0"));
        }
        Ok(Self { n_samples, t_span })
    }

    /// Smallest power-of-two window (in symbol periods, at least 64) that
    /// leaves `4(M+1)` periods plus the walk-off and dispersive spread at
    /// `z = L` well clear of the edge.
    pub fn for_link(link: &LinkParams, pulse: &PulseShape, samples_per_symbol: usize) -> Result<Self> {
        link.validate()?;
        if samples_per_symbol == 0 || !samples_per_symbol.is_power_of_two() {
            return Err(Error::invalid(
                "samples_per_symbol",
                "must be a power of two",
            ));
        }
        let t = link.symbol_period();
        let walkoff = link.walkoff_delay(link.length_km).abs() / t;
        let spread = link.beta2_s2_per_km().abs()
            * link.length_km
            * 2.0
            * PI
            * 2.0
            * pulse.half_bandwidth()
            * link.baud_rate
            / t;
        let needed = 4.0 * (link.memory as f64 + 1.0) + walkoff + spread;
        // slow sinc-like tails need room beyond the occupied span
        let symbols = (4.0 * needed).max(64.0).ceil() as usize;
        let mut symbols = symbols.next_power_of_two();
        // widen until both walked-off pulses clear the edge at z = 0 and z = L
        let half = 0.5 * link.walkoff_delay(link.length_km);
        loop {
            let grid = Self::new(symbols * samples_per_symbol, symbols as f64 * t)?;
            let prop = Propagator::new(pulse, grid, t, link.beta2_s2_per_km())?;
            let fits = [(0.0, 0.0), (link.length_km, half), (link.length_km, -half)]
                .iter()
                .all(|&(z, d)| prop.dispersed(z, d).is_ok());
            if fits {
                return Ok(grid);
            }
            if symbols >= MAX_AUTO_SYMBOLS {
                return Err(Error::invalid("grid", "no window up to the size limit keeps the pulse clear of the edge"));
            }
            symbols *= 2;
        }
    }

    pub fn dt(&self) -> f64 {
        self.t_span / self.n_samples as f64
    }

    pub fn d_omega(&self) -> f64 {
        2.0 * PI / self.t_span
    }

    /// Same window, twice the sampling rate.
    pub fn refined(&self) -> Self {
        Self {
            n_samples: 2 * self.n_samples,
            t_span: self.t_span,
        }
    }

    /// Twice the window at the same sampling rate.
    pub fn widened(&self) -> Self {
        Self {
            n_samples: 2 * self.n_samples,
            t_span: 2.0 * self.t_span,
        }
    }

    /// Signed FFT bin index of sample `k`.
    fn bin(&self, k: usize) -> f64 {
        let n = self.n_samples;
        if k < n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        }
    }

    fn samples_per_symbol(&self, symbol_period: f64) -> Result<usize> {
        let s = symbol_period / self.dt();
        let r = s.round();
        if r < 2.0 || (s - r).abs() > 1e-9 * s {
            return Err(Error::invalid(
                "grid",
                format!("symbol period must be an integer number (>= 2) of samples, got {s}"),
            ));
        }
        Ok(r as usize)
    }
}

/// Linear propagation of one pulse shape on a fixed grid.
pub struct Propagator {
    grid: TimeFreqGrid,
    beta2: f64,
    omega: Vec<f64>,
    spectrum: Vec<Complex64>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator")
            .field("grid", &self.grid)
            .field("beta2", &self.beta2)
            .finish_non_exhaustive()
    }
}

impl Propagator {
    /// `beta2` in s²/km, `symbol_period` in s.
    pub fn new(pulse: &PulseShape, grid: TimeFreqGrid, symbol_period: f64, beta2: f64) -> Result<Self> {
        pulse.validate()?;
        let n = grid.n_samples;
        let df = 1.0 / grid.t_span;
        let omega: Vec<f64> = (0..n).map(|k| grid.d_omega() * grid.bin(k)).collect();
        let mut spectrum: Vec<Complex64> = (0..n)
            .map(|k| Complex64::new(pulse.spectrum(grid.bin(k) * df * symbol_period), 0.0))
            .collect();

        let ifft = FftPlanner::new().plan_fft_inverse(n);
        let mut probe = spectrum.clone();
        ifft.process(&mut probe);
        let energy: f64 = probe.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.dt();
        if !(energy > 0.0) {
            return Err(Error::invalid("grid", "pulse spectrum has no support on this grid"));
        }
        let scale = 1.0 / energy.sqrt();
        for s in &mut spectrum {
            *s *= scale;
        }
        Ok(Self {
            grid,
            beta2,
            omega,
            spectrum,
            ifft,
        })
    }

    pub fn grid(&self) -> &TimeFreqGrid {
        &self.grid
    }

    /// Pulse after `z_km` of dispersion, delayed by `delay` seconds. Returned
    /// samples have unit energy (`Σ|g|²·dt = 1`).
    pub fn dispersed(&self, z_km: f64, delay: f64) -> Result<Vec<Complex64>> {
        let mut buf: Vec<Complex64> = self
            .spectrum
            .iter()
            .zip(&self.omega)
            .map(|(s, &w)| s * Complex64::from_polar(1.0, 0.5 * self.beta2 * w * w * z_km - w * delay))
            .collect();
        self.ifft.process(&mut buf);
        let edge = self.edge_energy(&buf);
        if edge > EDGE_ENERGY_LIMIT {
            return Err(Error::GridTooSmall {
                z_km,
                edge_energy: edge,
            });
        }
        Ok(buf)
    }

    fn edge_energy(&self, samples: &[Complex64]) -> f64 {
        let h = samples.len() / 2;
        samples[h - 2..h + 2].iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dt()
    }
}

/// Sampled pulse after `z_km`, delayed by `walkoff_delay` seconds.
pub fn dispersed_pulse(
    link: &LinkParams,
    pulse: &PulseShape,
    grid: TimeFreqGrid,
    z_km: f64,
    walkoff_delay: f64,
) -> Result<Vec<Complex64>> {
    link.validate()?;
    if !(0.0..=link.length_km).contains(&z_km) {
        return Err(Error::invalid("z_km", "must lie within [0, L]"));
    }
    Propagator::new(pulse, grid, link.symbol_period(), link.beta2_s2_per_km())?.dispersed(z_km, walkoff_delay)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSettings {
    /// Gauss–Legendre nodes per panel.
    pub nodes: usize,
    /// Panel-doubling levels always evaluated after the single-panel rule.
    pub refinements: usize,
    /// Hard cap on doubling levels.
    pub max_refinements: usize,
    /// Convergence threshold on `max |Δc| / max |c|` between the last two
    /// levels.
    pub tolerance: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            nodes: 64,
            refinements: 1,
            max_refinements: 4,
            tolerance: 1e-6,
        }
    }
}

/// Which receiver a tensor belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum User {
    X,
    W,
}

impl User {
    fn walkoff_sign(self) -> f64 {
        match self {
            User::X => 1.0,
            User::W => -1.0,
        }
    }
}

/// Dense `(2M+1)³` coefficient window, indices `l, m, p ∈ [-M, M]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TensorDoc", try_from = "TensorDoc")]
pub struct CoeffTensor {
    pub user: User,
    pub memory: usize,
    pub link: Option<LinkParams>,
    values: Vec<Complex64>,
}

impl CoeffTensor {
    pub fn zeros(user: User, memory: usize) -> Self {
        let w = 2 * memory + 1;
        Self {
            user,
            memory,
            link: None,
            values: vec![Complex64::new(0.0, 0.0); w * w * w],
        }
    }

    /// Tensor whose only nonzero entry is `c[0,0,0] = g`.
    pub fn memoryless(user: User, memory: usize, g: Complex64) -> Self {
        let mut t = Self::zeros(user, memory);
        t.set(0, 0, 0, g);
        t
    }

    pub fn width(&self) -> usize {
        2 * self.memory + 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn offset(&self, l: i32, m: i32, p: i32) -> usize {
        let mm = self.memory as i32;
        assert!(
            l.abs() <= mm && m.abs() <= mm && p.abs() <= mm,
            "index ({l},{m},{p}) outside memory {mm}"
        );
        let w = self.width();
        (((l + mm) as usize * w) + (m + mm) as usize) * w + (p + mm) as usize
    }

    pub fn get(&self, l: i32, m: i32, p: i32) -> Complex64 {
        self.values[self.offset(l, m, p)]
    }

    pub fn set(&mut self, l: i32, m: i32, p: i32, c: Complex64) {
        let o = self.offset(l, m, p);
        self.values[o] = c;
    }

    /// `(l, m, p, c)` in storage order (`p` fastest).
    pub fn iter(&self) -> impl Iterator<Item = (i32, i32, i32, Complex64)> + '_ {
        let mm = self.memory as i32;
        let w = self.width();
        self.values.iter().enumerate().map(move |(k, &c)| {
            let p = (k % w) as i32 - mm;
            let m = ((k / w) % w) as i32 - mm;
            let l = (k / (w * w)) as i32 - mm;
            (l, m, p, c)
        })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest `|c|` over the shell `|l| = shell`.
    pub fn max_abs_on_l_shell(&self, shell: i32) -> f64 {
        self.iter()
            .filter(|&(l, ..)| l.abs() == shell)
            .map(|(.., c)| c.norm())
            .fold(0.0, f64::max)
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= factor;
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorDoc {
    user: User,
    memory: usize,
    link: Option<LinkParams>,
    entries: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    l: i32,
    m: i32,
    p: i32,
    re: f64,
    im: f64,
}

impl From<CoeffTensor> for TensorDoc {
    fn from(t: CoeffTensor) -> Self {
        let entries = t
            .iter()
            .map(|(l, m, p, c)| TensorEntry { l, m, p, re: c.re, im: c.im })
            .collect();
        TensorDoc {
            user: t.user,
            memory: t.memory,
            link: t.link,
            entries,
        }
    }
}

impl TryFrom<TensorDoc> for CoeffTensor {
    type Error = String;

    fn try_from(doc: TensorDoc) -> std::result::Result<Self, String> {
        let mut t = CoeffTensor::zeros(doc.user, doc.memory);
        t.link = doc.link;
        let mm = doc.memory as i32;
        let mut seen = vec![false; t.len()];
        for e in doc.entries {
            if e.l.abs() > mm || e.m.abs() > mm || e.p.abs() > mm {
                return Err(format!("entry ({},{},{}) outside memory {mm}", e.l, e.m, e.p));
            }
            if !(e.re.is_finite() && e.im.is_finite()) {
                return Err(format!("entry ({},{},{}) is not finite", e.l, e.m, e.p));
            }
            let o = t.offset(e.l, e.m, e.p);
            if seen[o] {
                return Err(format!("duplicate entry ({},{},{})", e.l, e.m, e.p));
            }
            seen[o] = true;
            t.values[o] = Complex64::new(e.re, e.im);
        }
        Ok(t)
    }
}

/// Outcome of the z-quadrature refinement for one tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub user: User,
    /// `max |Δc| / max |c|` between the last two refinement levels.
    pub residual: f64,
    pub tolerance: f64,
    pub z_nodes: usize,
    pub grid: TimeFreqGrid,
}

#[derive(Debug, Clone)]
pub struct TensorRun {
    pub tensor: CoeffTensor,
    pub report: ConvergenceReport,
}

/// Evaluates coefficients for one link, pulse shape and grid.
#[derive(Debug)]
pub struct CoeffEngine {
    link: LinkParams,
    quad: QuadratureSettings,
    prop: Propagator,
    sps: usize,
}

impl CoeffEngine {
    pub fn new(
        link: LinkParams,
        pulse: PulseShape,
        grid: TimeFreqGrid,
        quad: QuadratureSettings,
    ) -> Result<Self> {
        link.validate()?;
        if quad.nodes == 0 {
            return Err(Error::invalid("nodes", "must be >= 1"));
        }
        if quad.refinements > quad.max_refinements {
            return Err(Error::invalid("refinements", "exceeds max_refinements"));
        }
        if !(quad.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be > 0"));
        }
        let sps = grid.samples_per_symbol(link.symbol_period())?;
        let w = 2 * link.memory + 1;
        if w * sps > grid.n_samples / 2 {
            return Err(Error::invalid("grid", "window shorter than twice the memory span"));
        }
        let prop = Propagator::new(&pulse, grid, link.symbol_period(), link.beta2_s2_per_km())?;
        Ok(Self {
            link,
            quad,
            prop,
            sps,
        })
    }

    /// Engine with the default pulse, quadrature and an auto-sized grid at
    /// 8 samples per symbol.
    pub fn with_defaults(link: LinkParams) -> Result<Self> {
        let pulse = PulseShape::default();
        let grid = TimeFreqGrid::for_link(&link, &pulse, 8)?;
        Self::new(link, pulse, grid, QuadratureSettings::default())
    }

    pub fn link(&self) -> &LinkParams {
        &self.link
    }

    pub fn grid(&self) -> &TimeFreqGrid {
        self.prop.grid()
    }

    pub fn coefficient(&self, user: User, l: i32, m: i32, p: i32) -> Result<Complex64> {
        let mm = self.link.memory as i32;
        if l.abs() > mm || m.abs() > mm || p.abs() > mm {
            return Err(Error::invalid("index", format!("({l},{m},{p}) outside memory {mm}")));
        }
        let (vals, _) = self
            .converge(user, &[(l, m, p)])
            .map_err(|e| with_index(e, (l, m, p)))?;
        Ok(vals[0])
    }

    pub fn tensor(&self, user: User) -> Result<TensorRun> {
        let mm = self.link.memory as i32;
        let mut indices = Vec::new();
        for l in -mm..=mm {
            for m in -mm..=mm {
                for p in -mm..=mm {
                    indices.push((l, m, p));
                }
            }
        }
        let (vals, report) = match self.converge(user, &indices) {
            Ok(v) => v,
            Err(e @ Error::Quadrature { .. }) => {
                return Err(self.locate_failure(user, &indices, e));
            }
            Err(e) => return Err(e),
        };
        let mut tensor = CoeffTensor::zeros(user, self.link.memory);
        tensor.values = vals;
        tensor.link = Some(self.link);
        Ok(TensorRun { tensor, report })
    }

    /// Estimate at a fixed number of panels (`2^level`).
    pub fn integrate_level(&self, user: User, indices: &[(i32, i32, i32)], level: usize) -> Result<Vec<Complex64>> {
        let len = self.link.length_km;
        if len == 0.0 || self.link.gamma == 0.0 {
            return Ok(vec![Complex64::new(0.0, 0.0); indices.len()]);
        }
        let panels = 1usize << level;
        let (x, w) = gauss_legendre(self.quad.nodes);
        let h = len / panels as f64;
        let nodes: Vec<(f64, f64)> = (0..panels)
            .flat_map(|k| {
                let a = k as f64 * h;
                x.iter()
                    .zip(&w)
                    .map(move |(&xi, &wi)| (a + 0.5 * h * (xi + 1.0), 0.5 * h * wi))
            })
            .collect();

        let alpha = self.link.alpha_nepers_per_km();
        let per_node: Vec<Vec<Complex64>> = nodes
            .par_iter()
            .map(|&(z, wz)| {
                let inner = self.time_integrals(user, z, indices)?;
                let s = wz * (-alpha * z).exp();
                Ok(inner.into_iter().map(|v| v * s).collect())
            })
            .collect::<Result<_>>()?;

        let prefactor = Complex64::new(0.0, 2.0 * self.link.gamma);
        let mut acc = vec![Complex64::new(0.0, 0.0); indices.len()];
        for node in &per_node {
            for (a, v) in acc.iter_mut().zip(node) {
                *a += v;
            }
        }
        Ok(acc.into_iter().map(|a| prefactor * a).collect())
    }

    fn converge(&self, user: User, indices: &[(i32, i32, i32)]) -> Result<(Vec<Complex64>, ConvergenceReport)> {
        let mut prev = self.integrate_level(user, indices, 0)?;
        let mut level = 0;
        let mut residual = f64::INFINITY;
        while level < self.quad.max_refinements {
            level += 1;
            let next = self.integrate_level(user, indices, level)?;
            residual = relative_change(&prev, &next);
            prev = next;
            if level >= self.quad.refinements && residual <= self.quad.tolerance {
                break;
            }
        }
        if self.quad.max_refinements == 0 {
            residual = 0.0;
        }
        if residual > self.quad.tolerance {
            return Err(Error::Quadrature {
                index: None,
                residual,
                tolerance: self.quad.tolerance,
            });
        }
        let report = ConvergenceReport {
            user,
            residual,
            tolerance: self.quad.tolerance,
            z_nodes: self.quad.nodes << level,
            grid: *self.grid(),
        };
        Ok((prev, report))
    }

    fn locate_failure(&self, user: User, indices: &[(i32, i32, i32)], err: Error) -> Error {
        let Error::Quadrature { residual, tolerance, .. } = err else {
            return err;
        };
        let top = self.quad.max_refinements;
        let (Ok(a), Ok(b)) = (
            self.integrate_level(user, indices, top.saturating_sub(1)),
            self.integrate_level(user, indices, top),
        ) else {
            return err;
        };
        let worst = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).norm())
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(i, _)| indices[i]);
        Error::Quadrature {
            index: worst,
            residual,
            tolerance,
        }
    }

    /// `T ∫ g* g(t-lT) g_w(t-mT) g_w*(t-pT) dt` at distance `z` for each index.
    fn time_integrals(&self, user: User, z: f64, indices: &[(i32, i32, i32)]) -> Result<Vec<Complex64>> {
        // only the relative delay matters; split it so both pulses stay
        // centred in the window
        let d = user.walkoff_sign() * self.link.walkoff_delay(z);
        let g = self.prop.dispersed(z, -0.5 * d)?;
        let gw = self.prop.dispersed(z, 0.5 * d)?;
        let n = g.len();
        let sps = self.sps as i64;
        let shifted = |v: &[Complex64], k: i32, t: usize| -> Complex64 {
            let idx = (t as i64 - k as i64 * sps).rem_euclid(n as i64) as usize;
            v[idx]
        };

        let mut ls: Vec<i32> = indices.iter().map(|i| i.0).collect();
        ls.sort_unstable();
        ls.dedup();
        let mut mps: Vec<(i32, i32)> = indices.iter().map(|i| (i.1, i.2)).collect();
        mps.sort_unstable();
        mps.dedup();

        let a: Vec<Vec<Complex64>> = ls
            .iter()
            .map(|&l| (0..n).map(|t| g[t].conj() * shifted(&g, l, t)).collect())
            .collect();
        let b: Vec<Vec<Complex64>> = mps
            .iter()
            .map(|&(m, p)| (0..n).map(|t| shifted(&gw, m, t) * shifted(&gw, p, t).conj()).collect())
            .collect();

        let scale = self.prop.grid().dt() * self.link.symbol_period();
        Ok(indices
            .iter()
            .map(|&(l, m, p)| {
                let ai = &a[ls.binary_search(&l).unwrap()];
                let bi = &b[mps.binary_search(&(m, p)).unwrap()];
                let s: Complex64 = ai.iter().zip(bi).map(|(x, y)| x * y).sum();
                s * scale
            })
            .collect())
    }
}

fn with_index(e: Error, index: (i32, i32, i32)) -> Error {
    match e {
        Error::Quadrature { residual, tolerance, .. } => Error::Quadrature {
            index: Some(index),
            residual,
            tolerance,
        },
        other => other,
    }
}

fn relative_change(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

/// Single coefficient with default quadrature settings.
pub fn xpm_coefficient(
    link: &LinkParams,
    pulse: &PulseShape,
    grid: TimeFreqGrid,
    l: i32,
    m: i32,
    p: i32,
) -> Result<Complex64> {
    CoeffEngine::new(*link, *pulse, grid, QuadratureSettings::default())?.coefficient(User::X, l, m, p)
}

/// `(x, w)` tensors with default quadrature settings.
pub fn coefficient_tensor(
    link: &LinkParams,
    pulse: &PulseShape,
    grid: TimeFreqGrid,
) -> Result<(TensorRun, TensorRun)> {
    let engine = CoeffEngine::new(*link, *pulse, grid, QuadratureSettings::default())?;
    Ok((engine.tensor(User::X)?, engine.tensor(User::W)?))
}
