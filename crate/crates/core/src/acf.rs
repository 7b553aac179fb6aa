//! Auto-correlation of transmitted blocks and Monte Carlo sidelobe profiles.
//!
//! Lags follow `r_k = xᴴ J_k x = Σ_i x_i* x_{i+k}`. Aperiodic profiles keep the
//! one-sided lags `0..n−1` (`|r_{−k}| = |r_k|`); periodic profiles keep all `n`
//! cyclic lags.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::UnitaryBasis;
use crate::constellation::SymbolSource;
use crate::dft::Dft;
use crate::stats::{trial_rng, VecStats, BLOCK};
use crate::{Error, Result};

/// Sidelobes at or below this fraction of the mainlobe count as zero when
/// forming the PSLR.
pub const SIDELOBE_FLOOR: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AcfMode {
    Periodic,
    Aperiodic,
    /// Periodic ACF of the spectrum `F x` (zero-delay Doppler slice).
    DopplerPeriodic,
}

impl fmt::Display for AcfMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AcfMode::Periodic => "periodic",
            AcfMode::Aperiodic => "aperiodic",
            AcfMode::DopplerPeriodic => "doppler_periodic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    Empirical,
    ClosedForm,
}

impl fmt::Display for ProfileSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileSource::Empirical => "empirical",
            ProfileSource::ClosedForm => "closed_form",
        })
    }
}

/// Per-lag mean squared ACF, `E|r_k|²` for `k = 0..n−1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfProfile {
    pub n: usize,
    pub mode: AcfMode,
    pub mean_sq: Vec<f64>,
    /// Monte Carlo standard error per lag; zeros for closed-form profiles.
    pub stderr: Vec<f64>,
    pub trials: usize,
    pub source: ProfileSource,
}

impl AcfProfile {
    pub fn mainlobe(&self) -> f64 {
        self.mean_sq[0]
    }

    pub fn peak_sidelobe(&self) -> f64 {
        self.mean_sq[1..].iter().copied().fold(0.0, f64::max)
    }

    /// Profile in dB, `10 log10(mean_sq)`.
    pub fn db(&self) -> Vec<f64> {
        self.mean_sq.iter().map(|v| 10.0 * v.log10()).collect()
    }
}

/// Expected integrated sidelobe level: `Σ_{k=1}^{n−1} mean_sq[k]`.
pub fn eisl_empirical(p: &AcfProfile) -> f64 {
    p.mean_sq[1..].iter().sum()
}

/// Peak-to-sidelobe ratio in dB. `+∞` when every sidelobe is below
/// [`SIDELOBE_FLOOR`] relative to the mainlobe.
pub fn pslr(p: &AcfProfile) -> f64 {
    let main = p.mainlobe();
    let side = p.peak_sidelobe();
    if side <= SIDELOBE_FLOOR * main {
        f64::INFINITY
    } else {
        10.0 * (main / side).log10()
    }
}

/// FFT plans for correlating length-`n` blocks.
#[derive(Debug, Clone)]
pub struct AcfPlan {
    n: usize,
    cyclic: Dft,
    padded: Dft,
}

impl AcfPlan {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            cyclic: Dft::new(n),
            padded: Dft::new(2 * n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `|DFT|²` then inverse DFT, divided by the transform length.
    fn correlate_in_place(dft: &Dft, buf: &mut [Complex64]) {
        dft.forward_raw(buf);
        buf.iter_mut().for_each(|v| *v = Complex64::new(v.norm_sqr(), 0.0));
        dft.inverse_raw(buf);
        let s = 1.0 / buf.len() as f64;
        buf.iter_mut().for_each(|v| *v *= s);
    }

    /// Periodic ACF into `out` (length `n`).
    pub fn periodic_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        out.copy_from_slice(x);
        Self::correlate_in_place(&self.cyclic, out);
    }

    /// Aperiodic ACF lags `0..n−1` into `out`; `scratch` is resized to `2n`.
    pub fn aperiodic_into(&self, x: &[Complex64], scratch: &mut Vec<Complex64>, out: &mut [Complex64]) {
        scratch.clear();
        scratch.extend_from_slice(x);
        scratch.resize(2 * self.n, Complex64::new(0.0, 0.0));
        Self::correlate_in_place(&self.padded, scratch);
        out.copy_from_slice(&scratch[..self.n]);
    }

    /// Periodic ACF of `F x` into `out`.
    pub fn doppler_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        out.copy_from_slice(x);
        self.cyclic.forward_unitary(out);
        Self::correlate_in_place(&self.cyclic, out);
    }

    /// `|acf_k|²` for the requested mode.
    pub fn squared_into(
        &self,
        mode: AcfMode,
        x: &[Complex64],
        scratch: &mut Vec<Complex64>,
        acf: &mut [Complex64],
        out: &mut [f64],
    ) {
        match mode {
            AcfMode::Periodic => self.periodic_into(x, acf),
            AcfMode::Aperiodic => self.aperiodic_into(x, scratch, acf),
            AcfMode::DopplerPeriodic => self.doppler_into(x, acf),
        }
        for (o, r) in out.iter_mut().zip(acf.iter()) {
            *o = r.norm_sqr();
        }
    }
}

fn check_len(x: &[Complex64]) {
    assert!(x.len() >= 2, "ACF needs at least two samples");
}

/// `r_k = Σ_{i=0}^{n−1−k} x_i* x_{i+k}`, `k = 0..n−1`.
pub fn aperiodic_acf(x: &[Complex64]) -> Vec<Complex64> {
    check_len(x);
    let plan = AcfPlan::new(x.len());
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    plan.aperiodic_into(x, &mut Vec::new(), &mut out);
    out
}

/// `r̃_k = Σ_i x_i* x_{(i+k) mod n}`, `k = 0..n−1`.
pub fn periodic_acf(x: &[Complex64]) -> Vec<Complex64> {
    check_len(x);
    let plan = AcfPlan::new(x.len());
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    plan.periodic_into(x, &mut out);
    out
}

/// Zero-delay Doppler slice `g̃_k`: the periodic ACF of the unitary spectrum `F x`.
pub fn doppler_slice(x: &[Complex64]) -> Vec<Complex64> {
    check_len(x);
    let plan = AcfPlan::new(x.len());
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    plan.doppler_into(x, &mut out);
    out
}

/// Per-lag agreement of two profiles: `|a_k − b_k| ≤ σ·√(se_a² + se_b²)`
/// plus an absolute floor of `1e-9` times the larger mainlobe, which covers
/// lags whose variance is exactly zero.
pub fn lags_within(a: &AcfProfile, b: &AcfProfile, sigmas: f64) -> Vec<bool> {
    let floor = 1e-9 * a.mainlobe().abs().max(b.mainlobe().abs());
    (0..a.n.min(b.n))
        .map(|k| {
            let se = a.stderr[k].hypot(b.stderr[k]);
            (a.mean_sq[k] - b.mean_sq[k]).abs() <= sigmas * se + floor
        })
        .collect()
}

/// Fraction of lags for which [`lags_within`] holds.
pub fn lag_agreement(a: &AcfProfile, b: &AcfProfile, sigmas: f64) -> f64 {
    let w = lags_within(a, b, sigmas);
    w.iter().filter(|&&x| x).count() as f64 / w.len().max(1) as f64
}

/// Average `|acf_k|²` over `trials` random blocks `x = U s`.
///
/// Trial `t` draws its symbols from [`trial_rng`]`(seed, t)`, so the result
/// depends only on the arguments, not on the thread count.
pub fn monte_carlo_profile(
    basis: &UnitaryBasis,
    symbols: &SymbolSource,
    mode: AcfMode,
    trials: usize,
    seed: u64,
) -> Result<AcfProfile> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be ≥ 1".into()));
    }
    let n = basis.n();
    let plan = AcfPlan::new(n);
    let blocks: Vec<VecStats> = (0..trials.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let zero = Complex64::new(0.0, 0.0);
            let mut stats = VecStats::new(n);
            let mut s = vec![zero; n];
            let mut x = vec![zero; n];
            let mut acf = vec![zero; n];
            let mut scratch = Vec::with_capacity(2 * n);
            let mut sq = vec![0.0; n];
            for t in b * BLOCK..((b + 1) * BLOCK).min(trials) {
                let mut rng = trial_rng(seed, t as u64);
                symbols.fill(&mut rng, &mut s);
                basis.modulate_into(&s, &mut x);
                plan.squared_into(mode, &x, &mut scratch, &mut acf, &mut sq);
                stats.push(&sq);
            }
            stats
        })
        .collect();
    let mut total = VecStats::new(n);
    blocks.iter().for_each(|b| total.merge(b));
    Ok(AcfProfile {
        n,
        mode,
        mean_sq: total.mean().to_vec(),
        stderr: total.stderr(),
        trials,
        source: ProfileSource::Empirical,
    })
}
