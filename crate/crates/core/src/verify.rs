//! Numerical checks of the inequalities behind the outer bound.
//!
//! Stochastic checks use a 5-standard-error threshold: one-sided checks pass
//! when `estimate ≤ bound + 5·stderr`, identity checks when
//! `|estimate − bound| ≤ 5·stderr`. For a correct implementation a one-sided
//! check fails with probability below 1e-6.
//!
//! Determinant standard errors come from batch means: the sample is cut into
//! [`BATCHES`] equal batches and the spread of the per-batch determinants
//! gives the standard error of the pooled one.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{outer_bound_u1, EffectiveCoefficient};
use crate::channel::{cscg_from, real_imag_decompose};
use crate::error::{Error, Result};
use crate::rng::{seeded, split_seed};
use crate::system::PowerPair;

pub const Z_THRESHOLD: f64 = 5.0;
pub const MIN_SAMPLES: usize = 100_000;
pub const BATCHES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub samples: usize,
    pub estimate: f64,
    pub bound: f64,
    pub stderr: f64,
    pub verdict: Verdict,
    pub seed: Option<u64>,
}

impl CheckReport {
    fn one_sided(name: &str, samples: usize, estimate: f64, bound: f64, stderr: f64, seed: Option<u64>) -> Self {
        let verdict = if !(estimate.is_finite() && bound.is_finite() && stderr.is_finite()) {
            Verdict::Inconclusive
        } else if estimate <= bound + Z_THRESHOLD * stderr + 1e-12 * bound.abs() {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.to_string(),
            samples,
            estimate,
            bound,
            stderr,
            verdict,
            seed,
        }
    }

    fn identity(name: &str, samples: usize, estimate: f64, target: f64, stderr: f64, seed: Option<u64>) -> Self {
        let verdict = if !(estimate.is_finite() && target.is_finite() && stderr.is_finite()) {
            Verdict::Inconclusive
        } else if (estimate - target).abs() <= Z_THRESHOLD * stderr + 1e-12 * target.abs() {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.to_string(),
            samples,
            estimate,
            bound: target,
            stderr,
            verdict,
            seed,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn check_budget(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::SampleBudget {
            requested: n,
            minimum: MIN_SAMPLES,
        });
    }
    Ok(())
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    det
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        let diag: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).collect()
}

/// `det(A) ≤ (tr(A)/n)^n` for a symmetric PSD matrix; deterministic.
pub fn det_trace_check(matrix: &[Vec<f64>]) -> Result<CheckReport> {
    let n = matrix.len();
    if n == 0 || matrix.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("matrix", "must be square and nonempty"));
    }
    if matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    let scale = matrix.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (matrix[i][j] - matrix[j][i]).abs() > 1e-12 * scale {
                return Err(Error::NotPsd);
            }
        }
    }
    let eig = symmetric_eigenvalues(matrix);
    if eig.iter().any(|&l| l < -1e-12 * scale) {
        return Err(Error::NotPsd);
    }
    let det = determinant(matrix);
    let trace: f64 = (0..n).map(|i| matrix[i][i]).sum();
    let bound = (trace / n as f64).powi(n as i32);
    let verdict = if det <= bound * (1.0 + 1e-12) + 1e-300 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(CheckReport {
        name: "det-trace".into(),
        samples: 0,
        estimate: det,
        bound,
        stderr: 0.0,
        verdict,
        seed: None,
    })
}

/// Unbiased covariance of `D`-dimensional rows, plus the determinant spread
/// over batches.
struct CovAccumulator<const D: usize> {
    n: usize,
    sum: [f64; D],
    prod: [[f64; D]; D],
}

impl<const D: usize> CovAccumulator<D> {
    fn new() -> Self {
        Self {
            n: 0,
            sum: [0.0; D],
            prod: [[0.0; D]; D],
        }
    }

    fn push(&mut self, v: [f64; D]) {
        self.n += 1;
        for i in 0..D {
            self.sum[i] += v[i];
            for j in i..D {
                self.prod[i][j] += v[i] * v[j];
            }
        }
    }

    fn merge(&mut self, o: &Self) {
        self.n += o.n;
        for i in 0..D {
            self.sum[i] += o.sum[i];
            for j in i..D {
                self.prod[i][j] += o.prod[i][j];
            }
        }
    }

    fn covariance(&self) -> Vec<Vec<f64>> {
        let n = self.n as f64;
        let mut c = vec![vec![0.0; D]; D];
        for i in 0..D {
            for j in i..D {
                let v = (self.prod[i][j] - self.sum[i] * self.sum[j] / n) / (n - 1.0);
                c[i][j] = v;
                c[j][i] = v;
            }
        }
        c
    }
}

fn det2(c: &[Vec<f64>]) -> f64 {
    c[0][0] * c[1][1] - c[0][1] * c[1][0]
}

fn det4(c: &[Vec<f64>]) -> f64 {
    // Laplace expansion along the first row
    let minor = |skip: usize| -> f64 {
        let cols: Vec<usize> = (0..4).filter(|&j| j != skip).collect();
        let m = |r: usize, k: usize| c[r][cols[k]];
        m(1, 0) * (m(2, 1) * m(3, 2) - m(2, 2) * m(3, 1)) - m(1, 1) * (m(2, 0) * m(3, 2) - m(2, 2) * m(3, 0))
            + m(1, 2) * (m(2, 0) * m(3, 1) - m(2, 1) * m(3, 0))
    };
    c[0][0] * minor(0) - c[0][1] * minor(1) + c[0][2] * minor(2) - c[0][3] * minor(3)
}

/// Runs `draw` over `n` samples split into batches (each batch on its own
/// stream of `seed`), returning the pooled determinant and its standard
/// error.
fn batched_det<const D: usize, F>(n: usize, seed: u64, det: fn(&[Vec<f64>]) -> f64, draw: F) -> (f64, f64)
where
    F: Fn(&mut crate::rng::SimRng) -> [f64; D] + Sync,
{
    let per = n / BATCHES;
    let extra = n % BATCHES;
    let accs: Vec<CovAccumulator<D>> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut rng = seeded(split_seed(seed, b as u64));
            let mut acc = CovAccumulator::<D>::new();
            let count = per + usize::from(b < extra);
            for _ in 0..count {
                acc.push(draw(&mut rng));
            }
            acc
        })
        .collect();
    let mut pooled = CovAccumulator::<D>::new();
    for a in &accs {
        pooled.merge(a);
    }
    let dets: Vec<f64> = accs.iter().map(|a| det(&a.covariance())).collect();
    let mean = dets.iter().sum::<f64>() / BATCHES as f64;
    let var = dets.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (BATCHES as f64 - 1.0);
    (det(&pooled.covariance()), (var / BATCHES as f64).sqrt())
}

/// Right-hand side of the conditional-covariance bound for receiver 1.
pub fn conv4_bound(g: Complex64, w: Complex64, p1: f64, sigma_sq: f64) -> f64 {
    let s = w.norm_sqr();
    let gain = 1.0 + 2.0 * g.re * s + g.norm_sqr() * s * s;
    (gain * p1 / 2.0 + sigma_sq).powi(2)
}

/// Conditional covariance of `(Ỹ^R, Ỹ^I)` given `W = w` for CSCG `X` of
/// power `p1`.
pub fn conv4_check(g: Complex64, w: Complex64, p1: f64, sigma_sq: f64, n: usize, seed: u64) -> Result<CheckReport> {
    conv4_check_split(g, w, p1, 0.5, sigma_sq, n, seed)
}

/// As [`conv4_check`], with `E[(X^R)²] = share·p1` and
/// `E[(X^I)²] = (1 − share)·p1`.
pub fn conv4_check_split(
    g: Complex64,
    w: Complex64,
    p1: f64,
    share: f64,
    sigma_sq: f64,
    n: usize,
    seed: u64,
) -> Result<CheckReport> {
    check_budget(n)?;
    if !(0.0..=1.0).contains(&share) {
        return Err(Error::invalid("share", "must lie in [0, 1]"));
    }
    if !(p1 >= 0.0 && sigma_sq > 0.0) {
        return Err(Error::invalid("p1/sigma_sq", "need p1 >= 0 and sigma_sq > 0"));
    }
    let (sr, si, sn) = ((share * p1).sqrt(), ((1.0 - share) * p1).sqrt(), sigma_sq.sqrt());
    let (est, se) = batched_det::<2, _>(n, seed, det2, |rng| {
        let xr: f64 = rng.sample::<f64, _>(StandardNormal) * sr;
        let xi: f64 = rng.sample::<f64, _>(StandardNormal) * si;
        let nr: f64 = rng.sample::<f64, _>(StandardNormal) * sn;
        let ni: f64 = rng.sample::<f64, _>(StandardNormal) * sn;
        let (yr, yi) = real_imag_decompose(Complex64::new(xr, xi), w, g);
        [yr + nr, yi + ni]
    });
    Ok(CheckReport::one_sided("conv4", n, est, conv4_bound(g, w, p1, sigma_sq), se, Some(seed)))
}

pub fn conv6_bound(g_x: Complex64, g_w: Complex64, pp: PowerPair, sigma_sq: f64) -> f64 {
    let (p1, p2) = (pp.p1, pp.p2);
    let a = (1.0 + 2.0 * g_x.re * p2 + 4.0 * g_x.norm_sqr() * p2 * p2) * p1;
    let b = (1.0 + 2.0 * g_w.re * p1 + 4.0 * g_w.norm_sqr() * p1 * p1) * p2;
    (sigma_sq + 0.25 * (a + b)).powi(4)
}

/// Joint covariance of `(Ỹ^R, Ỹ^I, Z̃^R, Z̃^I)` over CSCG `(X, W)`.
pub fn conv6_check(g_x: Complex64, g_w: Complex64, pp: PowerPair, sigma_sq: f64, n: usize, seed: u64) -> Result<CheckReport> {
    check_budget(n)?;
    if !(sigma_sq > 0.0) {
        return Err(Error::invalid("sigma_sq", "must be > 0"));
    }
    let (sx, sw, sn) = ((pp.p1 / 2.0).sqrt(), (pp.p2 / 2.0).sqrt(), sigma_sq.sqrt());
    let (est, se) = batched_det::<4, _>(n, seed, det4, |rng| {
        let v = cscg_from(rng, 4, 1.0);
        let x = v[0] * sx;
        let w = v[1] * sw;
        let (ny, nz) = (v[2] * sn, v[3] * sn);
        let (yr, yi) = real_imag_decompose(x, w, g_x);
        let (zr, zi) = real_imag_decompose(w, x, g_w);
        [yr + ny.re, yi + ny.im, zr + nz.re, zi + nz.im]
    });
    Ok(CheckReport::one_sided("conv6", n, est, conv6_bound(g_x, g_w, pp, sigma_sq), se, Some(seed)))
}

/// `E|W|⁴ / (2p²) = 1` for CSCG `W` of power `p`.
pub fn moment_identity_check(p: f64, n: usize, seed: u64) -> Result<CheckReport> {
    check_budget(n)?;
    if p < 0.0 {
        return Err(Error::invalid("p", "must be >= 0"));
    }
    let w = crate::channel::sample_cscg(n, p, seed)?;
    Ok(moment_identity_on(&w, p, Some(seed)))
}

/// Same identity evaluated on caller-supplied samples.
pub fn moment_identity_on(samples: &[Complex64], p: f64, seed: Option<u64>) -> CheckReport {
    let n = samples.len();
    if p == 0.0 {
        let est = samples.iter().map(|w| w.norm_sqr().powi(2)).sum::<f64>();
        return CheckReport::identity("moments", n, est, 0.0, 0.0, seed);
    }
    let norm = 2.0 * p * p;
    let vals: Vec<f64> = samples.iter().map(|w| w.norm_sqr().powi(2) / norm).collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    CheckReport::identity("moments", n, mean, 1.0, (var / n as f64).sqrt(), seed)
}

/// `E[log₂(1 + bracket(|W|²)·P₁/2σ²)] ≤ U₁`: the concavity step that moves
/// the expectation inside the logarithm, sampled with CSCG `W`.
pub fn jensen_check(g: Complex64, pp: PowerPair, sigma_sq: f64, n: usize, seed: u64) -> Result<CheckReport> {
    check_budget(n)?;
    let u1 = outer_bound_u1(pp, EffectiveCoefficient::from_complex(g), sigma_sq)?;
    let w = crate::channel::sample_cscg(n, pp.p2, seed)?;
    let vals: Vec<f64> = w.iter().map(|w| jensen_term(g, w.norm_sqr(), pp.p1, sigma_sq)).collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    Ok(CheckReport::one_sided("jensen", n, mean, u1, (var / n as f64).sqrt(), Some(seed)))
}

/// `log₂(1 + (1 + 2g_R s + |g|² s²) p1 / 2σ²)` at `s = |w|²`.
pub fn jensen_term(g: Complex64, s: f64, p1: f64, sigma_sq: f64) -> f64 {
    let f = 1.0 + 2.0 * g.re * s + g.norm_sqr() * s * s;
    (f * p1 / (2.0 * sigma_sq)).ln_1p() / std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Conv4,
    Conv6,
    Moments,
    Dettrace,
    Jensen,
}

/// Inputs shared by the suite runner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteParams {
    pub g_x: Complex64,
    pub g_w: Complex64,
    /// Fixed interferer symbol for the conditional check.
    pub w: Complex64,
    pub powers: PowerPair,
    pub sigma_sq: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Random symmetric PSD matrices of size 2–4, `count` of them.
pub fn random_psd_matrices(count: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
    let mut rng = seeded(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(2..=4);
            let k = rng.random_range(1..=n);
            let b: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.sample(StandardNormal)).collect()).collect();
            (0..n)
                .map(|i| (0..n).map(|j| (0..k).map(|t| b[i][t] * b[j][t]).sum()).collect())
                .collect()
        })
        .collect()
}

/// Runs the selected checks; each gets its own stream of `params.seed`.
pub fn run_suite(suite: Suite, params: &SuiteParams) -> Result<Vec<CheckReport>> {
    let want = |s: Suite| suite == Suite::All || suite == s;
    let SuiteParams { g_x, g_w, w, powers, sigma_sq, samples, seed } = *params;
    type Job<'a> = Box<dyn Fn() -> Result<Vec<CheckReport>> + Send + Sync + 'a>;
    let mut jobs: Vec<Job> = Vec::new();
    if want(Suite::Dettrace) {
        jobs.push(Box::new(move || {
            let mats = random_psd_matrices(1000, split_seed(seed, 10));
            let mut worst: Option<CheckReport> = None;
            let mut all_pass = true;
            for m in &mats {
                let r = det_trace_check(m)?;
                all_pass &= r.passed();
                let ratio = |r: &CheckReport| if r.bound > 0.0 { r.estimate / r.bound } else { 0.0 };
                if worst.as_ref().is_none_or(|w| ratio(&r) > ratio(w)) {
                    worst = Some(r);
                }
            }
            let mut r = worst.expect("nonempty");
            r.name = "det-trace (worst of 1000 random PSD)".into();
            r.samples = mats.len();
            r.seed = Some(split_seed(seed, 10));
            r.verdict = if all_pass { Verdict::Pass } else { Verdict::Fail };
            Ok(vec![r])
        }));
    }
    if want(Suite::Conv4) {
        jobs.push(Box::new(move || {
            Ok(vec![
                conv4_check(g_x, w, powers.p1, sigma_sq, samples, split_seed(seed, 11))?,
                conv4_check(g_w, w, powers.p2, sigma_sq, samples, split_seed(seed, 12))?,
            ])
        }));
    }
    if want(Suite::Conv6) {
        jobs.push(Box::new(move || Ok(vec![conv6_check(g_x, g_w, powers, sigma_sq, samples, split_seed(seed, 13))?])));
    }
    if want(Suite::Moments) {
        jobs.push(Box::new(move || Ok(vec![moment_identity_check(powers.p2, samples, split_seed(seed, 14))?])));
    }
    if want(Suite::Jensen) {
        jobs.push(Box::new(move || Ok(vec![jensen_check(g_x, powers, sigma_sq, samples, split_seed(seed, 15))?])));
    }
    let out: Vec<Vec<CheckReport>> = jobs.par_iter().map(|j| j()).collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}
