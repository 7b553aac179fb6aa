//! Two-target matched-filter ranging with random ISAC waveforms.
//!
//! Each trial transmits one random block `x = U s`, receives delayed and
//! scaled copies plus complex Gaussian noise of variance `1/ρ`, correlates
//! against `x`, picks peaks greedily and scores per-target range errors.
//! Noise is drawn once per trial at unit variance and scaled to each SNR
//! point, so the noiseless part of the echo is shared across the SNR grid.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::UnitaryBasis;
use crate::constellation::SymbolSource;
use crate::dft::Dft;
use crate::stats::{trial_rng, VecStats, BLOCK};
use crate::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;

/// Default half-width of the suppression zone around a picked peak.
pub const DEFAULT_MIN_SEPARATION: usize = 3;

/// Range resolution `c / (2B)` in meters.
pub fn range_bin_width(bandwidth_hz: f64) -> f64 {
    SPEED_OF_LIGHT / (2.0 * bandwidth_hz)
}

/// Nearest integer delay bin, `round(2 R B / c)`.
pub fn range_to_bin(range_m: f64, bandwidth_hz: f64) -> Result<usize> {
    if !(range_m >= 0.0 && range_m.is_finite()) {
        return Err(Error::InvalidArgument(format!("range {range_m} must be finite and ≥ 0")));
    }
    if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
        return Err(Error::InvalidArgument(format!("bandwidth {bandwidth_hz} must be positive")));
    }
    Ok((range_m / range_bin_width(bandwidth_hz)).round() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Target {
    pub range_m: f64,
    /// Linear power relative to the transmit power.
    pub power: f64,
}

#[derive(Debug, Clone)]
pub struct RangingScenario {
    pub bandwidth_hz: f64,
    pub targets: Vec<Target>,
    pub snr_db: Vec<f64>,
    pub basis: UnitaryBasis,
    pub symbols: SymbolSource,
    /// Cyclic prefix present: delays wrap within the block.
    pub cp: bool,
    pub trials: usize,
    pub seed: u64,
    pub min_separation: usize,
}

impl RangingScenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        basis: UnitaryBasis,
        symbols: SymbolSource,
        bandwidth_hz: f64,
        targets: Vec<Target>,
        snr_db: Vec<f64>,
        cp: bool,
        trials: usize,
        seed: u64,
    ) -> Result<Self> {
        let s = Self {
            bandwidth_hz,
            targets,
            snr_db,
            basis,
            symbols,
            cp,
            trials,
            seed,
            min_separation: DEFAULT_MIN_SEPARATION,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::InvalidArgument("at least one target is required".into()));
        }
        for t in &self.targets {
            if !(t.power > 0.0 && t.power.is_finite()) {
                return Err(Error::InvalidArgument(format!("target power {} must be positive", t.power)));
            }
        }
        let n = self.n();
        for bin in self.bins()? {
            if self.cp && bin >= n {
                return Err(Error::OutOfWindow { bin, n });
            }
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("SNR values must be finite".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn bin_width(&self) -> f64 {
        range_bin_width(self.bandwidth_hz)
    }

    pub fn bins(&self) -> Result<Vec<usize>> {
        self.targets.iter().map(|t| range_to_bin(t.range_m, self.bandwidth_hz)).collect()
    }

    /// Samples per echo: `n` with CP, `n + max_bin` without.
    pub fn echo_len(&self) -> usize {
        if self.cp {
            self.n()
        } else {
            self.n() + self.bins().unwrap_or_default().into_iter().max().unwrap_or(0)
        }
    }

    /// Range covered by the searched lags; the error charged for a missed target.
    pub fn window_span_m(&self) -> f64 {
        self.echo_len() as f64 * self.bin_width()
    }
}

/// Noiseless echo: `Σ_t √p_t · delay(x, bin_t)`.
pub fn clean_echo(x: &[Complex64], scenario: &RangingScenario) -> Result<Vec<Complex64>> {
    let n = x.len();
    if n != scenario.n() {
        return Err(Error::InvalidInput(format!("waveform has {n} samples, scenario expects {}", scenario.n())));
    }
    let mut y = vec![Complex64::new(0.0, 0.0); scenario.echo_len()];
    for (t, bin) in scenario.targets.iter().zip(scenario.bins()?) {
        let a = t.power.sqrt();
        for (i, &xi) in x.iter().enumerate() {
            let j = if scenario.cp { (i + bin) % n } else { i + bin };
            y[j] += a * xi;
        }
    }
    Ok(y)
}

/// Unit-variance circular complex Gaussian samples.
pub fn unit_noise<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * s, im * s)
        })
        .collect()
}

/// Linear SNR to noise standard deviation: `σ = √(1/ρ)`.
pub fn noise_std(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

/// Echo of `x` for trial `trial_seed` at `snr_db`: clean echo plus noise of
/// variance `1/ρ`.
pub fn synthesize_echo(x: &[Complex64], scenario: &RangingScenario, trial_seed: u64, snr_db: f64) -> Result<Vec<Complex64>> {
    let mut y = clean_echo(x, scenario)?;
    let mut rng = trial_rng(trial_seed, 0);
    let sigma = noise_std(snr_db);
    for (v, z) in y.iter_mut().zip(unit_noise(&mut rng, scenario.echo_len())) {
        *v += sigma * z;
    }
    Ok(y)
}

/// FFT-based cross-correlation `c_k = Σ_i x_i* y_{i+k}`.
///
/// With `cp`, `y` has the length of `x` and lags are cyclic. Without, `y`
/// may be longer than `x` and lags `0..y.len()−1` are linear.
#[derive(Debug, Clone)]
pub struct MatchedFilter {
    n: usize,
    echo_len: usize,
    cp: bool,
    dft: Dft,
}

impl MatchedFilter {
    pub fn new(n: usize, echo_len: usize, cp: bool) -> Result<Self> {
        if n == 0 || echo_len < n || (cp && echo_len != n) {
            return Err(Error::InvalidInput(format!(
                "echo of {echo_len} samples does not fit a {n}-sample waveform (cp = {cp})"
            )));
        }
        let size = if cp { n } else { (echo_len + n - 1).next_power_of_two() };
        Ok(Self {
            n,
            echo_len,
            cp,
            dft: Dft::new(size),
        })
    }

    pub fn lags(&self) -> usize {
        self.echo_len
    }

    fn spectrum(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut buf = v.to_vec();
        buf.resize(self.dft.len(), Complex64::new(0.0, 0.0));
        self.dft.forward_raw(&mut buf);
        buf
    }

    /// Complex correlation for every lag.
    pub fn correlate(&self, y: &[Complex64], x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.n || y.len() != self.echo_len {
            return Err(Error::InvalidInput(format!(
                "expected waveform {} / echo {} samples, got {} / {}",
                self.n,
                self.echo_len,
                x.len(),
                y.len()
            )));
        }
        let xs = self.spectrum(x);
        let mut buf = self.spectrum(y);
        buf.iter_mut().zip(&xs).for_each(|(b, a)| *b *= a.conj());
        self.dft.inverse_raw(&mut buf);
        let s = 1.0 / self.dft.len() as f64;
        buf.truncate(self.echo_len);
        buf.iter_mut().for_each(|v| *v *= s);
        Ok(buf)
    }

    pub fn is_cyclic(&self) -> bool {
        self.cp
    }
}

/// `|c_k|²` per lag. See [`MatchedFilter`].
pub fn matched_filter(y: &[Complex64], x: &[Complex64], cp: bool) -> Result<Vec<f64>> {
    if cp && y.len() != x.len() {
        return Err(Error::InvalidInput(format!(
            "cyclic matched filter needs equal lengths, got {} and {}",
            y.len(),
            x.len()
        )));
    }
    let mf = MatchedFilter::new(x.len(), y.len(), cp)?;
    Ok(mf.correlate(y, x)?.iter().map(|c| c.norm_sqr()).collect())
}

/// Greedy peak picking: take the largest bin, blank `±min_separation` around
/// it, repeat. Stops early once nothing positive remains.
pub fn pick_peaks(profile: &[f64], n_targets: usize, min_separation: usize) -> Vec<usize> {
    let mut live = vec![true; profile.len()];
    let mut peaks = Vec::with_capacity(n_targets);
    while peaks.len() < n_targets {
        let best = profile
            .iter()
            .enumerate()
            .filter(|(i, v)| live[*i] && **v > 0.0)
            .fold(None::<(usize, f64)>, |acc, (i, &v)| match acc {
                Some((_, b)) if b >= v => acc,
                _ => Some((i, v)),
            });
        let Some((i, _)) = best else { break };
        peaks.push(i);
        let lo = i.saturating_sub(min_separation);
        let hi = (i + min_separation).min(profile.len() - 1);
        live[lo..=hi].iter_mut().for_each(|l| *l = false);
    }
    peaks
}

/// [`pick_peaks`] converted to meters.
pub fn estimate_ranges(profile: &[f64], n_targets: usize, min_separation: usize, bin_width: f64) -> Result<Vec<f64>> {
    if n_targets == 0 {
        return Err(Error::InvalidArgument("n_targets must be ≥ 1".into()));
    }
    Ok(pick_peaks(profile, n_targets, min_separation)
        .into_iter()
        .map(|b| b as f64 * bin_width)
        .collect())
}

/// Absolute error per true range after greedy nearest-pair matching; targets
/// left without an estimate are charged `miss_penalty`.
pub fn assign_errors(estimates: &[f64], truth: &[f64], miss_penalty: f64) -> Vec<f64> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(estimates.len() * truth.len());
    for (e, &est) in estimates.iter().enumerate() {
        for (t, &tr) in truth.iter().enumerate() {
            pairs.push(((est - tr).abs(), e, t));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut errors = vec![miss_penalty; truth.len()];
    let mut est_used = vec![false; estimates.len()];
    let mut tr_used = vec![false; truth.len()];
    for (d, e, t) in pairs {
        if !est_used[e] && !tr_used[t] {
            est_used[e] = true;
            tr_used[t] = true;
            errors[t] = d;
        }
    }
    errors
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseRow {
    pub snr_db: f64,
    pub target: usize,
    pub range_m: f64,
    pub rmse_m: f64,
    /// Standard error of the mean squared error.
    pub mse_stderr: f64,
    pub trials: usize,
}

impl RmseRow {
    pub fn mse(&self) -> f64 {
        self.rmse_m * self.rmse_m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseTable {
    pub scheme: String,
    pub constellation: String,
    pub cp: bool,
    pub bin_width_m: f64,
    /// SNR-major: all targets of the first SNR point, then the next.
    pub rows: Vec<RmseRow>,
}

impl RmseTable {
    pub fn row(&self, snr_index: usize, target: usize) -> &RmseRow {
        let per = self.rows.len() / self.snr_points().max(1);
        &self.rows[snr_index * per + target]
    }

    pub fn snr_points(&self) -> usize {
        let mut n = 0;
        let mut last = None;
        for r in &self.rows {
            if last != Some(r.snr_db) {
                n += 1;
                last = Some(r.snr_db);
            }
        }
        n
    }
}

/// One-sided z statistic for `MSE(worse) > factor² · MSE(better)`, treating
/// the two rows as independent.
pub fn dominance_z(better: &RmseRow, worse: &RmseRow, factor: f64) -> f64 {
    let f2 = factor * factor;
    let diff = worse.mse() - f2 * better.mse();
    let se = worse.mse_stderr.hypot(f2 * better.mse_stderr);
    if se == 0.0 {
        if diff > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        diff / se
    }
}

/// Squared range errors of one trial, SNR-major then target.
fn trial_errors(scenario: &RangingScenario, mf: &MatchedFilter, trial: usize, out: &mut [f64]) -> Result<()> {
    let n = scenario.n();
    let mut rng = trial_rng(scenario.seed, trial as u64);
    let mut s = vec![Complex64::new(0.0, 0.0); n];
    scenario.symbols.fill(&mut rng, &mut s);
    let x = scenario.basis.modulate(&s);
    let noise = unit_noise(&mut rng, scenario.echo_len());
    let clean = mf.correlate(&clean_echo(&x, scenario)?, &x)?;
    let noisy = mf.correlate(&noise, &x)?;
    let truth: Vec<f64> = scenario.targets.iter().map(|t| t.range_m).collect();
    let n_t = truth.len();
    let mut profile = vec![0.0; mf.lags()];
    for (si, &snr) in scenario.snr_db.iter().enumerate() {
        let sigma = noise_std(snr);
        for ((p, c), z) in profile.iter_mut().zip(&clean).zip(&noisy) {
            *p = (c + sigma * z).norm_sqr();
        }
        let est = estimate_ranges(&profile, n_t, scenario.min_separation, scenario.bin_width())?;
        let err = assign_errors(&est, &truth, scenario.window_span_m());
        for (t, e) in err.iter().enumerate() {
            out[si * n_t + t] = e * e;
        }
    }
    Ok(())
}

/// Per-SNR, per-target RMSE over `scenario.trials` trials.
pub fn rmse_sweep(scenario: &RangingScenario) -> Result<RmseTable> {
    scenario.validate()?;
    let mf = MatchedFilter::new(scenario.n(), scenario.echo_len(), scenario.cp)?;
    let n_t = scenario.targets.len();
    let len = scenario.snr_db.len() * n_t;
    let blocks: Vec<VecStats> = (0..scenario.trials.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut stats = VecStats::new(len);
            let mut sq = vec![0.0; len];
            for t in b * BLOCK..((b + 1) * BLOCK).min(scenario.trials) {
                trial_errors(scenario, &mf, t, &mut sq)?;
                stats.push(&sq);
            }
            Ok(stats)
        })
        .collect::<Result<_>>()?;
    let mut total = VecStats::new(len);
    blocks.iter().for_each(|b| total.merge(b));
    let se = total.stderr();
    let mut rows = Vec::with_capacity(len);
    for (si, &snr) in scenario.snr_db.iter().enumerate() {
        for (t, target) in scenario.targets.iter().enumerate() {
            let i = si * n_t + t;
            rows.push(RmseRow {
                snr_db: snr,
                target: t,
                range_m: target.range_m,
                rmse_m: total.mean()[i].max(0.0).sqrt(),
                mse_stderr: se[i],
                trials: scenario.trials,
            });
        }
    }
    Ok(RmseTable {
        scheme: scenario.basis.scheme().to_string(),
        constellation: scenario.symbols.label().to_string(),
        cp: scenario.cp,
        bin_width_m: scenario.bin_width(),
        rows,
    })
}
