//! Random symbol alphabets: construction, moment checks, kurtosis and sampling.
//!
//! Every alphabet built here is normalized to unit average power and, except
//! BPSK, has zero mean and zero pseudo-variance (`E s = E s² = 0`). Under those
//! conditions the only constellation statistic entering the sidelobe
//! expectations is the kurtosis `μ4 = E|s|⁴`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dft::cis;
use crate::stats::trial_rng;
use crate::{Error, Result};

/// Tolerance on the exact probability-weighted moment sums.
pub const MOMENT_TOL: f64 = 1e-12;

/// Tolerance used when classifying against the Gaussian kurtosis of 2.
pub const CLASSIFY_TOL: f64 = 1e-9;

/// Kurtosis of the standard complex Gaussian.
pub const GAUSSIAN_KURTOSIS: f64 = 2.0;

/// Radii of the super-Gaussian 64-APSK alphabet (four rings of 16 points).
pub const SG64_APSK_RADII: [f64; 4] = [4.54e-5, 0.0067, 0.0815, 1.9983];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KurtosisClass {
    SubGaussian,
    GaussianLike,
    SuperGaussian,
}

impl fmt::Display for KurtosisClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KurtosisClass::SubGaussian => "sub_gaussian",
            KurtosisClass::GaussianLike => "gaussian_like",
            KurtosisClass::SuperGaussian => "super_gaussian",
        })
    }
}

/// Classify a kurtosis value against the Gaussian reference.
pub fn classify_kurtosis(mu4: f64) -> KurtosisClass {
    if mu4 < GAUSSIAN_KURTOSIS - CLASSIFY_TOL {
        KurtosisClass::SubGaussian
    } else if mu4 > GAUSSIAN_KURTOSIS + CLASSIFY_TOL {
        KurtosisClass::SuperGaussian
    } else {
        KurtosisClass::GaussianLike
    }
}

/// Finite complex alphabet with symbol probabilities.
#[derive(Debug, Clone)]
pub struct Constellation {
    points: Vec<Complex64>,
    probabilities: Vec<f64>,
    label: String,
    /// Set for alphabets with `E s² ≠ 0` (BPSK).
    pseudo_variance_nonzero: bool,
    sampler: WeightedIndex<f64>,
}

impl Constellation {
    /// Build and validate an alphabet.
    ///
    /// Fails unless probabilities are a distribution, power is 1 and both the
    /// mean and pseudo-variance vanish (within [`MOMENT_TOL`]).
    pub fn new(points: Vec<Complex64>, probabilities: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        Self::build(points, probabilities, label.into(), false)
    }

    /// Like [`Constellation::new`] but accepts a nonzero pseudo-variance.
    pub fn with_nonzero_pseudo_variance(
        points: Vec<Complex64>,
        probabilities: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        Self::build(points, probabilities, label.into(), true)
    }

    fn build(
        points: Vec<Complex64>,
        probabilities: Vec<f64>,
        label: String,
        pseudo_variance_nonzero: bool,
    ) -> Result<Self> {
        if points.is_empty() || points.len() != probabilities.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} points with {} probabilities",
                points.len(),
                probabilities.len()
            )));
        }
        if let Some(p) = probabilities.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::InvalidConstellation(format!("negative probability {p}")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > MOMENT_TOL {
            return Err(Error::InvalidConstellation(format!("probabilities sum to {total}")));
        }
        let sampler = WeightedIndex::new(&probabilities)
            .map_err(|e| Error::InvalidConstellation(e.to_string()))?;
        let c = Self {
            points,
            probabilities,
            label,
            pseudo_variance_nonzero,
            sampler,
        };
        let power = c.power();
        if (power - 1.0).abs() > MOMENT_TOL {
            return Err(Error::InvalidConstellation(format!("average power {power}, expected 1")));
        }
        if c.mean().norm() > MOMENT_TOL {
            return Err(Error::InvalidConstellation(format!("nonzero mean {}", c.mean())));
        }
        if !pseudo_variance_nonzero && c.pseudo_variance().norm() > MOMENT_TOL {
            return Err(Error::InvalidConstellation(format!(
                "nonzero pseudo-variance {}",
                c.pseudo_variance()
            )));
        }
        Ok(c)
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True when `E s² ≠ 0` was allowed at construction (BPSK).
    pub fn pseudo_variance_nonzero(&self) -> bool {
        self.pseudo_variance_nonzero
    }

    fn weighted_sum(&self, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
        self.points
            .iter()
            .zip(&self.probabilities)
            .map(|(&s, &p)| f(s) * p)
            .sum()
    }

    pub fn mean(&self) -> Complex64 {
        self.weighted_sum(|s| s)
    }

    pub fn pseudo_variance(&self) -> Complex64 {
        self.weighted_sum(|s| s * s)
    }

    pub fn power(&self) -> f64 {
        self.weighted_sum(|s| Complex64::new(s.norm_sqr(), 0.0)).re
    }

    /// `E|s|⁴ / (E|s|²)²`; equals `E|s|⁴` for unit-power alphabets.
    pub fn kurtosis(&self) -> f64 {
        let m4 = self.weighted_sum(|s| Complex64::new(s.norm_sqr() * s.norm_sqr(), 0.0)).re;
        m4 / (self.power() * self.power())
    }

    pub fn classify(&self) -> KurtosisClass {
        classify_kurtosis(self.kurtosis())
    }

    /// Draw one symbol.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        self.points[self.sampler.sample(rng)]
    }
}

fn normalize_power(points: &mut [Complex64], probabilities: &[f64]) -> Result<()> {
    let power: f64 = points.iter().zip(probabilities).map(|(s, p)| s.norm_sqr() * p).sum();
    if !(power > 0.0) {
        return Err(Error::DegenerateConstellation("zero average power".into()));
    }
    let scale = power.sqrt().recip();
    points.iter_mut().for_each(|s| *s *= scale);
    Ok(())
}

/// Equiprobable `order`-PSK.
///
/// Points sit at `2πm/order`, except QPSK which is rotated by `π/4` so that it
/// coincides with 4-QAM. BPSK (`order == 2`) is accepted with the
/// pseudo-variance flag set.
pub fn make_psk(order: usize) -> Result<Constellation> {
    if order < 2 {
        return Err(Error::InvalidOrder(order));
    }
    let offset = if order == 4 { PI / 4.0 } else { 0.0 };
    let points: Vec<Complex64> = (0..order)
        .map(|m| cis(2.0 * PI * m as f64 / order as f64 + offset))
        .collect();
    let probs = vec![1.0 / order as f64; order];
    let label = match order {
        2 => "bpsk".to_string(),
        4 => "qpsk".to_string(),
        _ => format!("{order}-psk"),
    };
    if order == 2 {
        Constellation::with_nonzero_pseudo_variance(points, probs, label)
    } else {
        Constellation::new(points, probs, label)
    }
}

/// Equiprobable square `order`-QAM scaled to unit power.
pub fn make_qam(order: usize) -> Result<Constellation> {
    let side = (order as f64).sqrt().round() as usize;
    if order < 4 || side * side != order || !side.is_multiple_of(2) {
        return Err(Error::UnsupportedOrder(order));
    }
    // odd-integer grid {±1, ±3, …}; its average power is 2(order − 1)/3
    let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt().recip();
    let level = |i: usize| (2 * i) as f64 - (side as f64 - 1.0);
    let mut points = Vec::with_capacity(order);
    for i in 0..side {
        for q in 0..side {
            points.push(Complex64::new(level(i), level(q)) * scale);
        }
    }
    let probs = vec![1.0 / order as f64; order];
    Constellation::new(points, probs, format!("{order}-qam"))
}

/// Equiprobable multi-ring APSK, power-normalized.
///
/// Ring `r` holds `points_per_ring[r]` equally spaced points at radius
/// `radii[r]`; odd rings are rotated by half an angular step.
pub fn make_apsk(radii: &[f64], points_per_ring: &[usize]) -> Result<Constellation> {
    if radii.is_empty() || radii.len() != points_per_ring.len() {
        return Err(Error::InvalidGeometry(format!(
            "{} radii for {} ring sizes",
            radii.len(),
            points_per_ring.len()
        )));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::InvalidGeometry(format!("ring radius {r} must be positive")));
    }
    if points_per_ring.iter().any(|&m| m < 3) {
        // fewer than 3 points on a ring breaks E s² = 0
        return Err(Error::InvalidGeometry("each ring needs at least 3 points".into()));
    }
    let total: usize = points_per_ring.iter().sum();
    let mut points = Vec::with_capacity(total);
    for (ring, (&r, &m)) in radii.iter().zip(points_per_ring).enumerate() {
        let step = 2.0 * PI / m as f64;
        let offset = if ring % 2 == 1 { step / 2.0 } else { 0.0 };
        points.extend((0..m).map(|i| cis(offset + step * i as f64) * r));
    }
    let probs = vec![1.0 / total as f64; total];
    normalize_power(&mut points, &probs)?;
    let label = format!("{total}-apsk");
    Constellation::new(points, probs, label)
}

/// The super-Gaussian 64-APSK alphabet (μ4 ≈ 3.9867).
pub fn sg64_apsk() -> Constellation {
    let mut c = make_apsk(&SG64_APSK_RADII, &[16; 4]).expect("fixed geometry is valid");
    c.label = "sg-64-apsk".into();
    c
}

/// Add the origin with probability `p0` (index modulation) and renormalize.
///
/// The resulting kurtosis is `μ4 / (1 − p0)`.
pub fn apply_index_modulation(base: &Constellation, p0: f64) -> Result<Constellation> {
    if !(0.0..1.0).contains(&p0) {
        return Err(Error::DegenerateConstellation(format!(
            "origin probability {p0} must lie in [0, 1)"
        )));
    }
    let mut points = base.points.clone();
    let mut probs: Vec<f64> = base.probabilities.iter().map(|p| p * (1.0 - p0)).collect();
    if p0 > 0.0 {
        match points.iter().position(|s| s.norm() == 0.0) {
            Some(i) => probs[i] += p0,
            None => {
                points.push(Complex64::new(0.0, 0.0));
                probs.push(p0);
            }
        }
    }
    normalize_power(&mut points, &probs)?;
    let label = format!("im(p0={p0}):{}", base.label);
    Constellation::build(points, probs, label, base.pseudo_variance_nonzero)
}

/// Symbol law used by the Monte Carlo engines: a finite alphabet or the
/// standard complex Gaussian reference.
#[derive(Debug, Clone)]
pub enum SymbolSource {
    Alphabet(Constellation),
    Gaussian,
}

impl SymbolSource {
    pub fn kurtosis(&self) -> f64 {
        match self {
            SymbolSource::Alphabet(c) => c.kurtosis(),
            SymbolSource::Gaussian => GAUSSIAN_KURTOSIS,
        }
    }

    pub fn classify(&self) -> KurtosisClass {
        classify_kurtosis(self.kurtosis())
    }

    pub fn label(&self) -> &str {
        match self {
            SymbolSource::Alphabet(c) => c.label(),
            SymbolSource::Gaussian => "gaussian",
        }
    }

    pub fn pseudo_variance_nonzero(&self) -> bool {
        matches!(self, SymbolSource::Alphabet(c) if c.pseudo_variance_nonzero())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match self {
            SymbolSource::Alphabet(c) => c.sample(rng),
            SymbolSource::Gaussian => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            }
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [Complex64]) {
        out.iter_mut().for_each(|s| *s = self.sample(rng));
    }
}

impl From<Constellation> for SymbolSource {
    fn from(c: Constellation) -> Self {
        SymbolSource::Alphabet(c)
    }
}

/// `count` i.i.d. symbols, reproducible for a fixed seed.
pub fn sample_symbols(c: &Constellation, count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = trial_rng(seed, 0);
    (0..count).map(|_| c.sample(&mut rng)).collect()
}

/// Fourth-moment matrix `E(s̃ s̃ᴴ)` with `s̃ = vec(s sᴴ)` for `n` i.i.d. symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    order: usize,
    entries: DMatrix<f64>,
}

impl MomentMatrix {
    /// Build the matrix for i.i.d. symbols with kurtosis `mu4`, unit power and
    /// zero pseudo-variance.
    ///
    /// With `s̃[i + n·j] = s_i s_j*`, the entry at `(i + n·j, k + n·l)` is
    /// `E[s_i s_j* s_k* s_l]`: `μ4` when all four indices agree, 1 when
    /// `i = j ≠ k = l` or `i = k ≠ j = l`, and 0 otherwise.
    pub fn from_kurtosis(mu4: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("moment matrix order {n} < 2")));
        }
        let dim = n * n;
        let mut entries = DMatrix::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                let a = i + n * j;
                if i == j {
                    for k in 0..n {
                        entries[(a, k * (n + 1))] = if k == i { mu4 } else { 1.0 };
                    }
                } else {
                    entries[(a, a)] = 1.0;
                }
            }
        }
        Ok(Self { order: n, entries })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Moment matrix for `n` symbols drawn from `c`.
pub fn moment_matrix(c: &Constellation, n: usize) -> Result<MomentMatrix> {
    if c.pseudo_variance_nonzero() {
        return Err(Error::UnsupportedMomentStructure(c.label().to_string()));
    }
    MomentMatrix::from_kurtosis(c.kurtosis(), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_kurtosis(c: &Constellation) -> f64 {
        let mut m2 = 0.0;
        let mut m4 = 0.0;
        for (s, p) in c.points().iter().zip(c.probabilities()) {
            m2 += p * s.norm_sqr();
            m4 += p * s.norm_sqr().powi(2);
        }
        m4 / (m2 * m2)
    }

    #[test]
    fn psk_kurtosis_is_one() {
        for order in [3, 4, 8, 16, 32] {
            let c = make_psk(order).unwrap();
            assert_eq!(c.len(), order);
            assert!((c.kurtosis() - 1.0).abs() < 1e-12);
            assert!(!c.pseudo_variance_nonzero());
        }
    }

    #[test]
    fn qpsk_is_the_diagonal_square() {
        let c = make_psk(4).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for s in c.points() {
            assert!((s.re.abs() - h).abs() < 1e-15 && (s.im.abs() - h).abs() < 1e-15);
        }
        let q = make_qam(4).unwrap();
        for s in q.points() {
            assert!(c.points().iter().any(|t| (t - s).norm() < 1e-12));
        }
        assert!((q.kurtosis() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bpsk_is_flagged() {
        let c = make_psk(2).unwrap();
        assert!(c.pseudo_variance_nonzero());
        assert!((c.kurtosis() - 1.0).abs() < 1e-12);
        assert!((c.pseudo_variance() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(matches!(
            moment_matrix(&c, 3),
            Err(Error::UnsupportedMomentStructure(_))
        ));
    }

    #[test]
    fn psk_order_below_two_rejected() {
        assert_eq!(make_psk(1).unwrap_err(), Error::InvalidOrder(1));
        assert_eq!(make_psk(0).unwrap_err(), Error::InvalidOrder(0));
    }

    #[test]
    fn qam_kurtosis_table() {
        // published (rounded) kurtosis values for square QAM
        for (order, mu4, tol) in [(16, 1.32, 1e-12), (64, 1.381, 1e-4), (256, 1.3953, 5e-5), (1024, 1.3988, 5e-5)] {
            let c = make_qam(order).unwrap();
            assert!((c.kurtosis() - mu4).abs() < tol, "{order}-QAM: {}", c.kurtosis());
            assert_eq!(c.classify(), KurtosisClass::SubGaussian);
        }
    }

    #[test]
    fn non_square_qam_rejected() {
        for order in [8, 32, 128, 512, 9, 0, 2] {
            assert_eq!(make_qam(order).unwrap_err(), Error::UnsupportedOrder(order));
        }
    }

    #[test]
    fn sg64_apsk_kurtosis() {
        let c = sg64_apsk();
        assert_eq!(c.len(), 64);
        assert!((c.kurtosis() - 3.9867).abs() < 1e-4, "{}", c.kurtosis());
        assert_eq!(c.classify(), KurtosisClass::SuperGaussian);
    }

    #[test]
    fn apsk_single_ring_is_psk() {
        let c = make_apsk(&[1.0], &[8]).unwrap();
        assert!((c.kurtosis() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn apsk_two_ring_matches_direct_moment_sum() {
        // independent oracle: raw points, no normalization, ratio of moments
        let mut raw = Vec::new();
        for i in 0..4 {
            raw.push(cis(2.0 * PI * i as f64 / 4.0) * 0.5);
        }
        for i in 0..12 {
            raw.push(cis(2.0 * PI * i as f64 / 12.0) * 1.0);
        }
        let m2: f64 = raw.iter().map(|s| s.norm_sqr()).sum::<f64>() / 16.0;
        let m4: f64 = raw.iter().map(|s| s.norm_sqr().powi(2)).sum::<f64>() / 16.0;
        let expected = m4 / (m2 * m2);
        // (4·0.0625 + 12)/16 / ((4·0.25 + 12)/16)² = 0.765625 / 0.66015625
        assert!((expected - 1.159763313609467).abs() < 1e-12);
        let c = make_apsk(&[0.5, 1.0], &[4, 12]).unwrap();
        assert!((c.kurtosis() - expected).abs() < 1e-12);
    }

    #[test]
    fn apsk_geometry_errors() {
        assert!(matches!(make_apsk(&[], &[]), Err(Error::InvalidGeometry(_))));
        assert!(matches!(make_apsk(&[1.0], &[4, 4]), Err(Error::InvalidGeometry(_))));
        assert!(matches!(make_apsk(&[-1.0], &[4]), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn index_modulation_kurtosis() {
        let qpsk = make_psk(4).unwrap();
        let c = apply_index_modulation(&qpsk, 0.5).unwrap();
        assert!((c.kurtosis() - 2.0).abs() < 1e-12);
        assert_eq!(c.classify(), KurtosisClass::GaussianLike);
        let c = apply_index_modulation(&qpsk, 0.75).unwrap();
        assert!((c.kurtosis() - 4.0).abs() < 1e-12);
        let c = apply_index_modulation(&make_qam(16).unwrap(), 0.75).unwrap();
        assert!((c.kurtosis() - 5.28).abs() < 1e-12);
        assert!(matches!(
            apply_index_modulation(&qpsk, 1.0),
            Err(Error::DegenerateConstellation(_))
        ));
    }

    #[test]
    fn index_modulation_grid_matches_closed_form() {
        for base in [make_psk(8).unwrap(), make_qam(64).unwrap(), sg64_apsk()] {
            for i in 1..=9 {
                let p0 = i as f64 / 10.0;
                let c = apply_index_modulation(&base, p0).unwrap();
                let expected = base.kurtosis() / (1.0 - p0);
                assert!((c.kurtosis() - expected).abs() < 1e-10 * expected);
                assert!((brute_kurtosis(&c) - expected).abs() < 1e-10 * expected);
            }
        }
    }

    #[test]
    fn index_modulation_empirical_fourth_moment() {
        let c = apply_index_modulation(&make_qam(16).unwrap(), 0.75).unwrap();
        let draws = sample_symbols(&c, 1_000_000, 11);
        let m4 = draws.iter().map(|s| s.norm_sqr().powi(2)).sum::<f64>() / draws.len() as f64;
        assert!((m4 - 5.28).abs() < 0.05, "{m4}");
    }

    #[test]
    fn classification() {
        assert_eq!(make_qam(64).unwrap().classify(), KurtosisClass::SubGaussian);
        assert_eq!(SymbolSource::Gaussian.classify(), KurtosisClass::GaussianLike);
        assert_eq!(SymbolSource::Gaussian.kurtosis(), 2.0);
        assert_eq!(classify_kurtosis(2.0 + 1e-10), KurtosisClass::GaussianLike);
        assert_eq!(classify_kurtosis(2.0 + 1e-8), KurtosisClass::SuperGaussian);
    }

    #[test]
    fn rejects_invalid_alphabets() {
        let one = Complex64::new(1.0, 0.0);
        // mean-shifted
        assert!(Constellation::new(vec![one], vec![1.0], "dc").is_err());
        // wrong power
        let pts = vec![one * 2.0, -one * 2.0, Complex64::new(0.0, 2.0), Complex64::new(0.0, -2.0)];
        assert!(Constellation::new(pts, vec![0.25; 4], "big").is_err());
        // bad probabilities
        let pts = make_psk(4).unwrap().points().to_vec();
        assert!(Constellation::new(pts.clone(), vec![0.5, 0.5, 0.5, -0.5], "neg").is_err());
        assert!(Constellation::new(pts, vec![0.3; 4], "sum").is_err());
    }

    #[test]
    fn sample_statistics() {
        let qpsk = make_psk(4).unwrap();
        let draws = sample_symbols(&qpsk, 1_000_000, 1);
        let mean: Complex64 = draws.iter().sum::<Complex64>() / draws.len() as f64;
        assert!(mean.norm() < 5e-3);

        let qam = make_qam(64).unwrap();
        let draws = sample_symbols(&qam, 1_000_000, 2);
        let power = draws.iter().map(|s| s.norm_sqr()).sum::<f64>() / draws.len() as f64;
        assert!((power - 1.0).abs() < 0.01);

        let apsk = sg64_apsk();
        let draws = sample_symbols(&apsk, 1_000_000, 3);
        let m2 = draws.iter().map(|s| s.norm_sqr()).sum::<f64>() / draws.len() as f64;
        let m4 = draws.iter().map(|s| s.norm_sqr().powi(2)).sum::<f64>() / draws.len() as f64;
        assert!((m4 / (m2 * m2) - 3.9867).abs() < 0.05);
    }

    #[test]
    fn sampling_is_reproducible() {
        let c = make_qam(16).unwrap();
        assert_eq!(sample_symbols(&c, 100, 5), sample_symbols(&c, 100, 5));
        assert_ne!(sample_symbols(&c, 100, 5), sample_symbols(&c, 100, 6));
    }

    #[test]
    fn gaussian_source_moments() {
        let mut rng = trial_rng(4, 0);
        let n = 400_000;
        let mut m2 = 0.0;
        let mut m4 = 0.0;
        let mut pv = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            let s = SymbolSource::Gaussian.sample(&mut rng);
            m2 += s.norm_sqr();
            m4 += s.norm_sqr().powi(2);
            pv += s * s;
        }
        let n = n as f64;
        assert!((m2 / n - 1.0).abs() < 0.01);
        assert!((m4 / n - 2.0).abs() < 0.05);
        assert!((pv / n).norm() < 0.01);
    }

    #[test]
    fn moment_matrix_qpsk_two() {
        let s = moment_matrix(&make_psk(4).unwrap(), 2).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[1., 0., 0., 1., 0., 1., 0., 0., 0., 0., 1., 0., 1., 0., 0., 1.],
        );
        assert!((s.entries() - expected).abs().max() < 1e-15);
    }

    #[test]
    fn moment_matrix_diagonal_and_symmetry() {
        let mu4 = make_qam(16).unwrap().kurtosis();
        for n in 2..=5 {
            let s = MomentMatrix::from_kurtosis(mu4, n).unwrap();
            let e = s.entries();
            assert_eq!(e, &e.transpose());
            for m in 0..n {
                assert!((e[(m * (n + 1), m * (n + 1))] - mu4).abs() < 1e-15);
            }
            // exactly n² + n(n-1) nonzero entries
            let nnz = e.iter().filter(|v| **v != 0.0).count();
            assert_eq!(nnz, n * n + n * (n - 1));
        }
        assert!(MomentMatrix::from_kurtosis(1.0, 1).is_err());
    }

    proptest! {
        #[test]
        fn generated_alphabets_satisfy_moment_invariants(
            kind in 0usize..3,
            order_exp in 2u32..7,
            p0 in 0.0f64..0.95,
        ) {
            let base = match kind {
                0 => make_psk(1usize << order_exp).unwrap(),
                1 => make_qam(1usize << (2 * (order_exp / 2).max(1))).unwrap(),
                _ => make_apsk(&[0.3, 1.0, 1.7], &[4, 8, 16]).unwrap(),
            };
            let c = apply_index_modulation(&base, p0).unwrap();
            prop_assert!(c.mean().norm() <= MOMENT_TOL);
            prop_assert!(c.pseudo_variance().norm() <= MOMENT_TOL);
            prop_assert!((c.power() - 1.0).abs() <= MOMENT_TOL);
            prop_assert!(c.kurtosis() >= 1.0 - 1e-12);
        }
    }
}
