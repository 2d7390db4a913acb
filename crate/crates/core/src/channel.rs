//! Input ensembles and channel simulation.
//!
//! Lagged indices in the full-memory model wrap around the block (cyclic
//! extension), so every output symbol sees a complete `[-M, M]` window.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::coeffs::CoeffTensor;
use crate::error::{ensure_finite, Error, Result};
use crate::rng::{seeded, split_seed, SimRng};

/// i.i.d. circularly symmetric complex Gaussian samples with `E|X|² = power`.
pub fn sample_cscg(n: usize, power: f64, seed: u64) -> Result<Vec<Complex64>> {
    ensure_finite("power", power)?;
    if power < 0.0 {
        return Err(Error::invalid("power", "must be >= 0"));
    }
    let mut rng = seeded(seed);
    Ok(cscg_from(&mut rng, n, (power / 2.0).sqrt()))
}

pub(crate) fn cscg_from(rng: &mut SimRng, n: usize, std_per_dim: f64) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * std_per_dim, im * std_per_dim)
        })
        .collect()
}

/// Constant-modulus inputs with uniform phase, `|W|² = power` exactly.
pub fn sample_constant_modulus(n: usize, power: f64, seed: u64) -> Result<Vec<Complex64>> {
    ensure_finite("power", power)?;
    if power < 0.0 {
        return Err(Error::invalid("power", "must be >= 0"));
    }
    let mut rng = seeded(seed);
    let r = power.sqrt();
    Ok((0..n)
        .map(|_| Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect())
}

fn add_noise(y: &mut [Complex64], sigma_sq: f64, seed: u64) -> Result<()> {
    ensure_finite("sigma_sq", sigma_sq)?;
    if sigma_sq < 0.0 {
        return Err(Error::invalid("sigma_sq", "must be >= 0"));
    }
    if sigma_sq == 0.0 {
        return Ok(());
    }
    let mut rng = seeded(seed);
    let noise = cscg_from(&mut rng, y.len(), sigma_sq.sqrt());
    for (v, n) in y.iter_mut().zip(noise) {
        *v += n;
    }
    Ok(())
}

fn check_len(a: &[Complex64], b: &[Complex64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Output of the memoryless approximation, `y = x + g|w|²x + n`, with noise
/// variance `sigma_sq` per real dimension.
pub fn memoryless_channel(
    x: &[Complex64],
    w: &[Complex64],
    g: Complex64,
    sigma_sq: f64,
    seed: u64,
) -> Result<Vec<Complex64>> {
    check_len(x, w)?;
    let mut y: Vec<Complex64> = x
        .iter()
        .zip(w)
        .map(|(&xk, &wk)| {
            let mut acc = Complex64::new(0.0, 0.0);
            acc += trilinear(g, wk, wk, xk);
            xk + acc
        })
        .collect();
    add_noise(&mut y, sigma_sq, seed)?;
    Ok(y)
}

#[inline]
fn trilinear(c: Complex64, wm: Complex64, wp: Complex64, xl: Complex64) -> Complex64 {
    c * (wm * wp.conj()) * xl
}

/// Full first-order model `y_k = x_k + Σ c[l,m,p] w_{k-m} w*_{k-p} x_{k-l} + n_k`
/// over the tensor's window.
pub fn full_channel(
    x: &[Complex64],
    w: &[Complex64],
    coeffs: &CoeffTensor,
    sigma_sq: f64,
    seed: u64,
) -> Result<Vec<Complex64>> {
    check_len(x, w)?;
    let n = x.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if coeffs.width() > n {
        return Err(Error::InsufficientHistory {
            memory: coeffs.memory,
            len: n,
        });
    }
    let terms: Vec<(i32, i32, i32, Complex64)> = coeffs.iter().filter(|t| t.3 != Complex64::new(0.0, 0.0)).collect();
    let at = |v: &[Complex64], k: usize, lag: i32| v[(k as i64 - lag as i64).rem_euclid(n as i64) as usize];
    let mut y: Vec<Complex64> = (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(l, m, p, c) in &terms {
                acc += trilinear(c, at(w, k, m), at(w, k, p), at(x, k, l));
            }
            x[k] + acc
        })
        .collect();
    add_noise(&mut y, sigma_sq, seed)?;
    Ok(y)
}

/// Noise-free real and imaginary parts of `(1 + g|w|²) x`, written as the
/// linear map on `(Re x, Im x)`.
pub fn real_imag_decompose(x: Complex64, w: Complex64, g: Complex64) -> (f64, f64) {
    let s = w.norm_sqr();
    let a = 1.0 + s * g.re;
    let b = s * g.im;
    (a * x.re - b * x.im, a * x.im + b * x.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Full,
    Memoryless,
}

/// Inputs and outputs of both receivers for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub x: Vec<Complex64>,
    pub w: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub z: Vec<Complex64>,
    pub noise_seed: u64,
    pub model: ModelTag,
}

impl SampleBatch {
    /// CSCG inputs at powers `(p1, p2)` through the full model. Stream 0 and 1
    /// of `seed` drive the inputs, 2 and 3 the two noise sources.
    pub fn simulate_full(
        n: usize,
        p1: f64,
        p2: f64,
        cx: &CoeffTensor,
        cw: &CoeffTensor,
        sigma_sq: f64,
        seed: u64,
    ) -> Result<Self> {
        let (x, w) = Self::inputs(n, p1, p2, seed)?;
        let y = full_channel(&x, &w, cx, sigma_sq, split_seed(seed, 2))?;
        let z = full_channel(&w, &x, cw, sigma_sq, split_seed(seed, 3))?;
        Ok(Self {
            x,
            w,
            y,
            z,
            noise_seed: seed,
            model: ModelTag::Full,
        })
    }

    /// Same streams as [`SampleBatch::simulate_full`], memoryless model.
    pub fn simulate_memoryless(
        n: usize,
        p1: f64,
        p2: f64,
        gx: Complex64,
        gw: Complex64,
        sigma_sq: f64,
        seed: u64,
    ) -> Result<Self> {
        let (x, w) = Self::inputs(n, p1, p2, seed)?;
        let y = memoryless_channel(&x, &w, gx, sigma_sq, split_seed(seed, 2))?;
        let z = memoryless_channel(&w, &x, gw, sigma_sq, split_seed(seed, 3))?;
        Ok(Self {
            x,
            w,
            y,
            z,
            noise_seed: seed,
            model: ModelTag::Memoryless,
        })
    }

    fn inputs(n: usize, p1: f64, p2: f64, seed: u64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        if n == 0 {
            return Err(Error::invalid("n", "must be >= 1"));
        }
        Ok((
            sample_cscg(n, p1, split_seed(seed, 0))?,
            sample_cscg(n, p2, split_seed(seed, 1))?,
        ))
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Receiver-1 view: own input `x`, interferer `w`, output `y`.
    pub fn receiver_x(&self) -> ReceiverView {
        ReceiverView {
            x: self.x.clone(),
            w: self.w.clone(),
            y: self.y.clone(),
        }
    }

    /// Receiver-2 view: own input `w` in the `x` column, interferer `x`,
    /// output `z`.
    pub fn receiver_w(&self) -> ReceiverView {
        ReceiverView {
            x: self.w.clone(),
            w: self.x.clone(),
            y: self.z.clone(),
        }
    }
}

/// One receiver's slice of a batch; the unit of CSV export.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverView {
    pub x: Vec<Complex64>,
    pub w: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

pub const BATCH_CSV_HEADER: &str = "k,x_re,x_im,w_re,w_im,y_re,y_im";

impl ReceiverView {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.x.len());
        out.push_str(BATCH_CSV_HEADER);
        out.push('\n');
        for (k, ((x, w), y)) in self.x.iter().zip(&self.w).zip(&self.y).enumerate() {
            let _ = writeln!(out, "{k},{},{},{},{},{},{}", x.re, x.im, w.re, w.im, y.re, y.im);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == BATCH_CSV_HEADER => {}
            other => return Err(Error::Parse(format!("unexpected batch header {other:?}"))),
        }
        let mut view = ReceiverView {
            x: Vec::new(),
            w: Vec::new(),
            y: Vec::new(),
        };
        for (row, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::Parse(format!("row {row}: expected 7 fields, got {}", f.len())));
            }
            let k: usize = f[0].trim().parse().map_err(|_| Error::Parse(format!("row {row}: bad index")))?;
            if k != row {
                return Err(Error::Parse(format!("row {row}: index {k} out of sequence")));
            }
            let v: Vec<f64> = f[1..]
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("row {row}: {e}")))?;
            view.x.push(Complex64::new(v[0], v[1]));
            view.w.push(Complex64::new(v[2], v[3]));
            view.y.push(Complex64::new(v[4], v[5]));
        }
        Ok(view)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_power_is_all_zero() {
        let v = sample_cscg(100, 0.0, 1).unwrap();
        assert!(v.iter().all(|z| z.norm() == 0.0));
        assert!(sample_cscg(10, -1.0, 1).is_err());
    }

    #[test]
    fn cscg_mean_and_fourth_moment() {
        let n = 1_000_000;
        let p = 2.5e-3;
        let v = sample_cscg(n, p, 11).unwrap();
        let mean: Complex64 = v.iter().sum::<Complex64>() / n as f64;
        assert!(mean.norm_sqr() < 25.0 * p / n as f64);
        let m2: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        // Var|X|² = P², five standard errors
        assert!((m2 - p).abs() < 5.0 * p / (n as f64).sqrt());
        let m4: f64 = v.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / n as f64;
        assert!((m4 / (2.0 * p * p) - 1.0).abs() < 0.01);
    }

    #[test]
    fn seeds_are_reproducible() {
        assert_eq!(sample_cscg(16, 1.0, 5).unwrap(), sample_cscg(16, 1.0, 5).unwrap());
        assert_ne!(sample_cscg(16, 1.0, 5).unwrap(), sample_cscg(16, 1.0, 6).unwrap());
    }

    #[test]
    fn memoryless_examples() {
        let x = vec![c(1.0, 0.0)];
        let w = vec![c(1.0, 1.0)];
        assert_eq!(memoryless_channel(&x, &w, c(0.0, 0.0), 0.0, 0).unwrap(), x);
        let y = memoryless_channel(&x, &w, c(0.0, 0.1), 0.0, 0).unwrap();
        assert!((y[0] - c(1.0, 0.2)).norm() < 1e-15);
        assert!(matches!(
            memoryless_channel(&x, &[], c(0.0, 0.0), 0.0, 0),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn pure_noise_variance() {
        let n = 200_000;
        let zeros = vec![c(0.0, 0.0); n];
        let sigma_sq = 0.7;
        let y = memoryless_channel(&zeros, &zeros, c(0.0, 0.3), sigma_sq, 3).unwrap();
        let v: f64 = y.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        assert!((v - 2.0 * sigma_sq).abs() < 5.0 * 2.0 * sigma_sq / (n as f64).sqrt());
    }

    #[test]
    fn zero_tensor_is_awgn() {
        let x = sample_cscg(64, 1.0, 1).unwrap();
        let w = sample_cscg(64, 1.0, 2).unwrap();
        let t = CoeffTensor::zeros(crate::coeffs::User::X, 3);
        let a = full_channel(&x, &w, &t, 0.2, 9).unwrap();
        let b = memoryless_channel(&x, &w, c(0.0, 0.0), 0.2, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn history_shorter_than_window() {
        let x = vec![c(1.0, 0.0); 4];
        let t = CoeffTensor::zeros(crate::coeffs::User::X, 2);
        assert!(matches!(
            full_channel(&x, &x, &t, 0.0, 0),
            Err(Error::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn decompose_examples() {
        let (r, i) = real_imag_decompose(c(1.0, 0.0), c(1.0, 0.0), c(0.3, 0.4));
        assert!((r - 1.3).abs() < 1e-15 && (i - 0.4).abs() < 1e-15);
        let (r, _) = real_imag_decompose(c(0.7, 0.0), c(0.2, -1.1), c(0.0, 2.5));
        assert_eq!(r, 0.7);
    }

    #[test]
    fn csv_round_trip() {
        let b = SampleBatch::simulate_memoryless(5, 1e-3, 2e-3, c(0.0, 30.0), c(0.0, 30.0), 1e-4, 77).unwrap();
        let v = b.receiver_x();
        let text = v.to_csv();
        assert!(text.starts_with("k,x_re,x_im,w_re,w_im,y_re,y_im\n"));
        assert_eq!(ReceiverView::from_csv(&text).unwrap(), v);
        assert!(ReceiverView::from_csv("k,x\n").is_err());
    }

    proptest! {
        #[test]
        fn decompose_recombines(xr in -3.0f64..3.0, xi in -3.0f64..3.0, wr in -3.0f64..3.0, wi in -3.0f64..3.0, gr in -1.0f64..1.0, gi in -1.0f64..1.0) {
            let (x, w, g) = (c(xr, xi), c(wr, wi), c(gr, gi));
            let (r, i) = real_imag_decompose(x, w, g);
            let want = (1.0 + g * w.norm_sqr()) * x;
            prop_assert!((c(r, i) - want).norm() <= 1e-12 * want.norm().max(1.0));
        }

        #[test]
        fn memory_zero_matches_memoryless(seed in 0u64..1000, gr in -0.5f64..0.5, gi in -0.5f64..0.5, s2 in 0.0f64..0.1) {
            let x = sample_cscg(32, 1.0, seed).unwrap();
            let w = sample_cscg(32, 1.0, seed + 1).unwrap();
            let g = c(gr, gi);
            let t = CoeffTensor::memoryless(crate::coeffs::User::X, 0, g);
            prop_assert_eq!(full_channel(&x, &w, &t, s2, seed).unwrap(), memoryless_channel(&x, &w, g, s2, seed).unwrap());
        }
    }
}
