//! Numerical checks of the optimality structure.
//!
//! - Periodic case: the ℓ4 maximizers are complex permutations, so OFDM is
//!   optimal up to subcarrier permutation and phases, and by duality single
//!   carrier minimizes Doppler sidelobes.
//! - Aperiodic case: `V = I` (OFDM) is a stationary point and local maximum of
//!   `f(V) = ‖F̃_{2N} Fᴴ Vᴴ‖₄⁴` on the unitary group. Checked with finite
//!   differences along geodesics `t ↦ V₀ exp(jtH)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::acf::{lag_agreement, monte_carlo_profile, AcfMode, AcfProfile};
use crate::basis::{basis_afdm, basis_cdma, basis_ofdm, basis_otfs, basis_sc, haar_unitary, UnitaryBasis};
use crate::closed_form::{eisl_aacf, expected_doppler, l4_norm_4};
use crate::constellation::SymbolSource;
use crate::dft::{cis, dft_matrix, max_abs_diff, truncated_dft_matrix, unitarity_residual};
use crate::stats::trial_rng;
use crate::{Error, Result};

/// First-derivative tolerance, relative to `f` at the base point.
pub const FIRST_DERIVATIVE_TOL: f64 = 1e-6;
/// Second-derivative tolerance, relative to `f` at the base point.
pub const SECOND_DERIVATIVE_TOL: f64 = 1e-8;
/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 5e-3;

/// True iff every row and every column holds exactly one entry of modulus
/// `1 ± tol` and all other entries have modulus at most `tol`.
pub fn is_complex_permutation(m: &DMatrix<Complex64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.nrows();
    let mut col_hits = vec![0usize; n];
    for i in 0..n {
        let mut row_hits = 0;
        for j in 0..n {
            let a = m[(i, j)].norm();
            if (a - 1.0).abs() <= tol {
                row_hits += 1;
                col_hits[j] += 1;
            } else if a > tol {
                return false;
            }
        }
        if row_hits != 1 {
            return false;
        }
    }
    col_hits.iter().all(|&c| c == 1)
}

/// Index reversal fixing the first index: `e_0 ↦ e_0`, `e_i ↦ e_{n−i}`.
pub fn reversal_permutation(n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |i, j| {
        if (n - i) % n == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `max |Fᴴ Fᴴ − R|` with `R` the index reversal.
pub fn verify_ff_reversal(n: usize) -> f64 {
    let fh = dft_matrix(n).adjoint();
    max_abs_diff(&(&fh * &fh), &reversal_permutation(n))
}

#[derive(Debug, Clone, Serialize)]
pub struct DopplerDualityReport {
    pub n: usize,
    pub trials: usize,
    pub constellation: String,
    /// Empirical `E|g̃_k|²` under single carrier.
    pub sc_doppler: AcfProfile,
    /// Empirical `E|r̃_k|²` under OFDM, from an independent seed.
    pub ofdm_periodic: AcfProfile,
    /// Fraction of lags where the two agree within three standard errors.
    pub fraction_within: f64,
    /// Empirical Doppler EISL per scheme, single carrier first.
    pub doppler_eisl: Vec<(String, f64)>,
    /// Single carrier has the lowest closed-form Doppler sidelobe at every
    /// lag and the lowest empirical Doppler EISL.
    pub sc_is_lowest: bool,
    pub pass: bool,
}

/// Minimum fraction of lags that must agree within three standard errors.
pub const AGREEMENT_FRACTION: f64 = 0.99;

/// Monte Carlo check that single-carrier Doppler sidelobes mirror the OFDM
/// periodic range sidelobes and are the lowest among the tested schemes.
pub fn doppler_duality_check(n: usize, symbols: &SymbolSource, trials: usize, seed: u64) -> Result<DopplerDualityReport> {
    if trials < 100 {
        return Err(Error::InvalidArgument(format!("duality check needs ≥ 100 trials, got {trials}")));
    }
    let mu4 = symbols.kurtosis();
    let sc = basis_sc(n)?;
    let sc_doppler = monte_carlo_profile(&sc, symbols, AcfMode::DopplerPeriodic, trials, seed)?;
    let ofdm_periodic = monte_carlo_profile(&basis_ofdm(n)?, symbols, AcfMode::Periodic, trials, seed.wrapping_add(1))?;
    let fraction_within = lag_agreement(&sc_doppler, &ofdm_periodic, 3.0);

    let mut others = vec![basis_ofdm(n)?];
    if n.is_power_of_two() {
        others.push(basis_cdma(n)?);
    }
    let sc_cf = expected_doppler(&sc, mu4);
    let sc_eisl: f64 = sc_doppler.mean_sq[1..].iter().sum();
    let mut doppler_eisl = vec![(sc.scheme().to_string(), sc_eisl)];
    let mut sc_is_lowest = true;
    for (i, b) in others.iter().enumerate() {
        let cf = expected_doppler(b, mu4);
        let per_lag_ok = sc_cf.per_lag[1..]
            .iter()
            .zip(&cf.per_lag[1..])
            .all(|(s, o)| *s <= o + 1e-8 * n as f64);
        let p = monte_carlo_profile(b, symbols, AcfMode::DopplerPeriodic, trials, seed.wrapping_add(2 + i as u64))?;
        let e: f64 = p.mean_sq[1..].iter().sum();
        // allow three standard errors of the other scheme's EISL estimate
        let e_se = p.stderr[1..].iter().map(|s| s * s).sum::<f64>().sqrt();
        sc_is_lowest &= per_lag_ok && sc_eisl <= e + 3.0 * e_se;
        doppler_eisl.push((b.scheme().to_string(), e));
    }
    Ok(DopplerDualityReport {
        n,
        trials,
        constellation: symbols.label().to_string(),
        pass: fraction_within >= AGREEMENT_FRACTION && sc_is_lowest,
        sc_doppler,
        ofdm_periodic,
        fraction_within,
        doppler_eisl,
        sc_is_lowest,
    })
}

/// `f(V) = ‖F̃_{2N} Fᴴ Vᴴ‖₄⁴` with the constant factor precomputed.
#[derive(Debug, Clone)]
pub struct AacfObjective {
    a: DMatrix<Complex64>,
}

impl AacfObjective {
    pub fn new(n: usize) -> Self {
        Self {
            a: truncated_dft_matrix(2 * n, n) * dft_matrix(n).adjoint(),
        }
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn value(&self, v: &DMatrix<Complex64>) -> f64 {
        l4_norm_4(&(&self.a * v.adjoint()))
    }
}

/// The aperiodic ℓ4 objective at a unitary `v`.
pub fn aacf_objective(v: &DMatrix<Complex64>) -> Result<f64> {
    if !v.is_square() {
        return Err(Error::InvalidArgument("objective needs a square matrix".into()));
    }
    let r = unitarity_residual(v);
    if !(r <= 1e-8) {
        return Err(Error::InvalidArgument(format!("matrix is not unitary (residual {r:e})")));
    }
    Ok(AacfObjective::new(v.nrows()).value(v))
}

/// `exp(jtH)` for Hermitian `H`, via one eigendecomposition `H = Q Λ Qᴴ`.
#[derive(Debug, Clone)]
pub struct HermitianExp {
    q: DMatrix<Complex64>,
    eigenvalues: Vec<f64>,
}

impl HermitianExp {
    pub fn new(h: &DMatrix<Complex64>) -> Self {
        let eig = h.clone().symmetric_eigen();
        Self {
            q: eig.eigenvectors,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
        }
    }

    pub fn at(&self, t: f64) -> DMatrix<Complex64> {
        let mut scaled = self.q.clone();
        for (mut col, &l) in scaled.column_iter_mut().zip(&self.eigenvalues) {
            col *= cis(t * l);
        }
        scaled * self.q.adjoint()
    }
}

/// Largest entrywise deviation of `h` from `hᴴ`.
pub fn hermitian_residual(h: &DMatrix<Complex64>) -> f64 {
    max_abs_diff(h, &h.adjoint())
}

/// Random Hermitian direction with unit Frobenius norm: real Gaussian
/// diagonal, complex Gaussian off-diagonal.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = Complex64::new(rng.sample(StandardNormal), 0.0);
        for j in i + 1..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    let norm = h.norm();
    h / Complex64::new(norm, 0.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicCheck {
    pub n: usize,
    #[serde(skip)]
    pub direction: DMatrix<Complex64>,
    /// `f` at the base point.
    pub value: f64,
    /// Richardson-extrapolated first derivative.
    pub first_derivative: f64,
    /// Richardson-extrapolated second derivative.
    pub second_derivative: f64,
    /// Plain central difference of the first derivative at `step`.
    pub first_central: f64,
    pub step: f64,
}

/// Derivatives of `t ↦ f(exp(jtH))` at `t = 0`.
pub fn geodesic_derivatives(n: usize, h: &DMatrix<Complex64>, step: f64) -> Result<GeodesicCheck> {
    let objective = AacfObjective::new(n);
    geodesic_derivatives_at(&objective, &DMatrix::identity(n, n), h, step)
}

/// Derivatives of `t ↦ f(V₀ exp(jtH))` at `t = 0`.
///
/// Central differences at steps `δ` and `δ/2` are combined by Richardson
/// extrapolation, cancelling the `O(δ²)` truncation term.
pub fn geodesic_derivatives_at(
    objective: &AacfObjective,
    base: &DMatrix<Complex64>,
    h: &DMatrix<Complex64>,
    step: f64,
) -> Result<GeodesicCheck> {
    let n = objective.n();
    if h.shape() != (n, n) || base.shape() != (n, n) {
        return Err(Error::InvalidArgument(format!("expected {n}×{n} matrices")));
    }
    if !(1e-4..=1e-2).contains(&step) {
        return Err(Error::InvalidArgument(format!("step {step} outside [1e-4, 1e-2]")));
    }
    let asym = hermitian_residual(h);
    if asym > 1e-12 {
        return Err(Error::InvalidDirection(asym));
    }
    let norm = h.norm();
    if norm == 0.0 {
        return Err(Error::InvalidDirection(0.0));
    }
    let h = h / Complex64::new(norm, 0.0);
    let exp = HermitianExp::new(&h);
    let f = |t: f64| objective.value(&(base * exp.at(t)));

    let f0 = f(0.0);
    let (fp, fm) = (f(step), f(-step));
    let (hp, hm) = (f(step / 2.0), f(-step / 2.0));
    let d1 = |a: f64, b: f64, s: f64| (a - b) / (2.0 * s);
    let d2 = |a: f64, b: f64, s: f64| (a - 2.0 * f0 + b) / (s * s);
    let first_coarse = d1(fp, fm, step);
    let first_fine = d1(hp, hm, step / 2.0);
    let second_coarse = d2(fp, fm, step);
    let second_fine = d2(hp, hm, step / 2.0);
    Ok(GeodesicCheck {
        n,
        direction: h,
        value: f0,
        first_derivative: (4.0 * first_fine - first_coarse) / 3.0,
        second_derivative: (4.0 * second_fine - second_coarse) / 3.0,
        first_central: first_coarse,
        step,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalOptimalitySummary {
    pub n: usize,
    pub directions: usize,
    pub step: f64,
    /// `f(I)`.
    pub f_identity: f64,
    pub max_abs_first: f64,
    pub max_second: f64,
    pub pass: bool,
}

/// Finite-difference stationarity and concavity of `f` at `V = I` along
/// `directions` random Hermitian directions.
pub fn verify_local_optimality(n: usize, directions: usize, seed: u64) -> Result<LocalOptimalitySummary> {
    if directions == 0 {
        return Err(Error::InvalidArgument("need at least one direction".into()));
    }
    let objective = AacfObjective::new(n);
    let base = DMatrix::identity(n, n);
    let checks: Vec<GeodesicCheck> = (0..directions)
        .into_par_iter()
        .map(|d| {
            let h = random_hermitian(n, &mut trial_rng(seed, d as u64));
            geodesic_derivatives_at(&objective, &base, &h, DEFAULT_STEP)
        })
        .collect::<Result<_>>()?;
    let f_identity = objective.value(&base);
    let max_abs_first = checks.iter().map(|c| c.first_derivative.abs()).fold(0.0, f64::max);
    let max_second = checks.iter().map(|c| c.second_derivative).fold(f64::NEG_INFINITY, f64::max);
    Ok(LocalOptimalitySummary {
        n,
        directions,
        step: DEFAULT_STEP,
        f_identity,
        max_abs_first,
        max_second,
        pass: max_abs_first <= FIRST_DERIVATIVE_TOL * f_identity && max_second <= SECOND_DERIVATIVE_TOL * f_identity,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ControlSummary {
    pub n: usize,
    pub directions: usize,
    pub f_base: f64,
    /// Directions whose first derivative exceeds the stationarity tolerance.
    pub nonstationary: usize,
}

/// The same first-derivative test at a Haar-random base point, which is
/// generically not stationary.
pub fn control_check(n: usize, directions: usize, seed: u64) -> Result<ControlSummary> {
    let objective = AacfObjective::new(n);
    let base = haar_unitary(n, &mut trial_rng(seed, u64::MAX));
    let f_base = objective.value(&base);
    let checks: Vec<GeodesicCheck> = (0..directions)
        .into_par_iter()
        .map(|d| {
            let h = random_hermitian(n, &mut trial_rng(seed, d as u64));
            geodesic_derivatives_at(&objective, &base, &h, DEFAULT_STEP)
        })
        .collect::<Result<_>>()?;
    Ok(ControlSummary {
        n,
        directions,
        f_base,
        nonstationary: checks
            .iter()
            .filter(|c| c.first_derivative.abs() > FIRST_DERIVATIVE_TOL * f_base)
            .count(),
    })
}

/// Named comparison schemes available at size `n`.
pub fn named_schemes(n: usize) -> Result<Vec<UnitaryBasis>> {
    let mut out = vec![basis_sc(n)?];
    if n.is_power_of_two() {
        out.push(basis_cdma(n)?);
    }
    let (m, l) = otfs_grid(n);
    if m > 1 && l > 1 {
        out.push(basis_otfs(m, l)?);
    }
    out.push(basis_afdm(n, 1.0 / (2.0 * n as f64), 0.0)?);
    Ok(out)
}

/// `(M, L)` with `L` the largest power of two not above `√n` that divides `n`.
pub fn otfs_grid(n: usize) -> (usize, usize) {
    let mut l = 1;
    while (l * 2) * (l * 2) <= n && n.is_multiple_of(l * 2) {
        l *= 2;
    }
    (n / l, l)
}

#[derive(Debug, Clone, Serialize)]
pub struct NeighborhoodScan {
    pub n: usize,
    pub perturbation_scale: f64,
    pub samples: usize,
    /// Aperiodic EISL of OFDM at `μ4 = 1`.
    pub ofdm_eisl: f64,
    pub min_perturbed_eisl: f64,
    pub named_eisl: Vec<(String, f64)>,
    pub ofdm_attains_min: bool,
}

/// Aperiodic EISL (PSK, `μ4 = 1`) of OFDM against random nearby unitaries
/// `exp(jεH) Fᴴ` and the named schemes.
pub fn eisl_neighborhood_scan(n: usize, perturbation_scale: f64, samples: usize, seed: u64) -> Result<NeighborhoodScan> {
    if !(perturbation_scale > 0.0 && perturbation_scale <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "perturbation scale {perturbation_scale} outside (0, 0.5]"
        )));
    }
    let ofdm = basis_ofdm(n)?;
    let ofdm_eisl = eisl_aacf(&ofdm, 1.0);
    let perturbed: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let h = random_hermitian(n, &mut trial_rng(seed, i as u64));
            let u = HermitianExp::new(&h).at(perturbation_scale) * ofdm.u();
            UnitaryBasis::from_matrix("perturbed-ofdm", u).map(|b| eisl_aacf(&b, 1.0))
        })
        .collect::<Result<_>>()?;
    let min_perturbed_eisl = perturbed.iter().copied().fold(f64::INFINITY, f64::min);
    let named_eisl: Vec<(String, f64)> = named_schemes(n)?
        .iter()
        .map(|b| (b.scheme().to_string(), eisl_aacf(b, 1.0)))
        .collect();
    let slack = 1e-9 * ofdm_eisl.max(1.0);
    let ofdm_attains_min = perturbed.iter().chain(named_eisl.iter().map(|(_, e)| e)).all(|e| ofdm_eisl <= e + slack);
    Ok(NeighborhoodScan {
        n,
        perturbation_scale,
        samples,
        ofdm_eisl,
        min_perturbed_eisl,
        named_eisl,
        ofdm_attains_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::random_generalized_ofdm;
    use crate::constellation::{make_psk, make_qam};

    #[test]
    fn complex_permutation_detection() {
        assert!(is_complex_permutation(&DMatrix::identity(5, 5), 1e-9));
        let mut rng = trial_rng(1, 0);
        for _ in 0..10 {
            let b = random_generalized_ofdm(8, &mut rng).unwrap();
            assert!(is_complex_permutation(&b.v(), 1e-9));
        }
        assert!(!is_complex_permutation(&dft_matrix(8), 1e-9));
        let mut m = DMatrix::<Complex64>::identity(3, 3);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(!is_complex_permutation(&m, 1e-9));
        assert!(!is_complex_permutation(&DMatrix::zeros(3, 3), 1e-9));
    }

    #[test]
    fn ff_is_reversal() {
        for n in [2, 4, 7, 16] {
            assert!(verify_ff_reversal(n) < 1e-12, "n={n}");
            let r = reversal_permutation(n);
            assert_eq!(&r * &r, DMatrix::identity(n, n));
            // Fᴴ Fᴴ R = I: picking Π as the reversal turns the Doppler
            // optimum Fᴴ Fᴴ Π into the identity
            let fh = dft_matrix(n).adjoint();
            assert!(max_abs_diff(&(&fh * &fh * &r), &DMatrix::identity(n, n)) < 1e-12);
        }
    }

    #[test]
    fn objective_reference_values() {
        let n = 128;
        let f = aacf_objective(&DMatrix::identity(n, n)).unwrap();
        // inverting the aperiodic EISL at OFDM-PSK: f(I) = (2n² + 1) / (6n)
        let expected = (2.0 * (n * n) as f64 + 1.0) / (6.0 * n as f64);
        assert!((f - expected).abs() < 1e-10 * expected);
        let phased = DMatrix::identity(n, n) * cis(0.7);
        assert!((aacf_objective(&phased).unwrap() - f).abs() < 1e-10);
        assert!(aacf_objective(&DMatrix::from_element(4, 4, Complex64::new(1.0, 0.0))).is_err());
    }

    #[test]
    fn global_phase_direction_is_flat() {
        let n = 8;
        let h = DMatrix::identity(n, n);
        let c = geodesic_derivatives(n, &h, DEFAULT_STEP).unwrap();
        assert!(c.first_derivative.abs() < 1e-9 * c.value);
        assert!(c.second_derivative.abs() < 1e-9 * c.value);
    }

    #[test]
    fn rejects_bad_directions() {
        let mut h = DMatrix::<Complex64>::identity(4, 4);
        h[(0, 1)] = Complex64::new(0.0, 1.0);
        assert!(matches!(geodesic_derivatives(4, &h, 1e-3), Err(Error::InvalidDirection(_))));
        assert!(geodesic_derivatives(4, &DMatrix::identity(4, 4), 0.5).is_err());
    }

    #[test]
    fn hermitian_exp_is_unitary_and_matches_series() {
        let mut rng = trial_rng(5, 0);
        let h = random_hermitian(6, &mut rng);
        let e = HermitianExp::new(&h);
        assert!(unitarity_residual(&e.at(0.9)) < 1e-12);
        let t = 1e-3;
        let j = Complex64::new(0.0, 1.0);
        let series = DMatrix::identity(6, 6) + &h * (j * t) - &h * &h * Complex64::new(t * t / 2.0, 0.0);
        assert!(max_abs_diff(&e.at(t), &series) < 1e-9);
    }

    #[test]
    fn identity_is_stationary_and_concave() {
        for n in [4, 8] {
            let s = verify_local_optimality(n, 30, 1).unwrap();
            assert!(s.pass, "{s:?}");
        }
    }

    #[test]
    fn first_difference_shrinks_quadratically() {
        let n = 8;
        let mut rng = trial_rng(9, 0);
        let h = random_hermitian(n, &mut rng);
        let a = geodesic_derivatives(n, &h, 8e-3).unwrap();
        let b = geodesic_derivatives(n, &h, 4e-3).unwrap();
        let ratio = a.first_central / b.first_central;
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn random_base_point_is_not_stationary() {
        let c = control_check(8, 20, 3).unwrap();
        assert!(c.nonstationary >= 19, "{c:?}");
    }

    #[test]
    fn neighborhood_scan_small() {
        let s = eisl_neighborhood_scan(16, 0.05, 40, 2).unwrap();
        assert!(s.ofdm_attains_min, "{s:?}");
        assert!(eisl_neighborhood_scan(16, 0.0, 10, 2).is_err());
    }

    #[test]
    fn otfs_grid_choices() {
        assert_eq!(otfs_grid(128), (16, 8));
        assert_eq!(otfs_grid(16), (4, 4));
        assert_eq!(otfs_grid(64), (8, 8));
    }

    #[test]
    fn duality_psk_and_qam() {
        let n = 64;
        let psk = SymbolSource::from(make_psk(8).unwrap());
        let r = doppler_duality_check(n, &psk, 200, 4).unwrap();
        assert!(r.sc_doppler.mean_sq[1..].iter().all(|v| *v < 1e-20));
        assert!(r.pass, "{:?}", r.fraction_within);
        let qam = SymbolSource::from(make_qam(16).unwrap());
        let r = doppler_duality_check(n, &qam, 400, 5).unwrap();
        assert!(r.sc_is_lowest);
        assert!(doppler_duality_check(n, &qam, 50, 5).is_err());
    }
}
