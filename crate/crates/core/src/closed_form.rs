//! Closed-form sidelobe expectations for `x = U s` with i.i.d. symbols of
//! kurtosis `μ4`.
//!
//! Periodic (cyclic prefix):
//!
//! ```text
//! E|r̃_k|² = N² δ_k + N + (μ4 − 2) ‖b_k‖²,   b_k[p] = Σ_n |v_{p,n}|² e^{−j2πkn/N},  V = Uᴴ Fᴴ
//! EISL    = N(N − 1) + (μ4 − 2) N (‖F U‖₄⁴ − 1)
//! ```
//!
//! Aperiodic (no cyclic prefix):
//!
//! ```text
//! E|r_k|² = N² δ_k + (N − k) + (μ4 − 2) Σ_m |u_mᴴ J_k u_m|²
//! EISL    = N(N − 1)/2 + (μ4 − 2) N (‖F̃_{2N} U‖₄⁴ − 1/2)
//! ```
//!
//! where `F̃_{2N}` is the first `N` columns of the unitary size-`2N` DFT.
//! Per-lag values and EISL are computed by separate routes so that their
//! agreement is a meaningful check.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::acf::{AcfMode, AcfPlan, AcfProfile, ProfileSource};
use crate::basis::UnitaryBasis;
use crate::dft::Dft;
use crate::{Error, Result};

/// Results below this fraction of the natural scale are floating-point
/// cancellation residue and are reported as exactly zero.
const CANCELLATION_TOL: f64 = 1e-12;

fn snap(v: f64, scale: f64) -> f64 {
    if v.abs() <= CANCELLATION_TOL * scale {
        0.0
    } else {
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormReport {
    pub n: usize,
    pub mode: AcfMode,
    pub mu4: f64,
    /// Expected squared ACF per lag, `k = 0..n−1`.
    pub per_lag: Vec<f64>,
    /// EISL from the ℓ4-norm expression.
    pub eisl: f64,
    pub mainlobe: f64,
    /// `‖F U‖₄⁴` (periodic) or `‖F̃_{2N} U‖₄⁴` (aperiodic).
    pub l4_objective: f64,
}

impl ClosedFormReport {
    pub fn to_profile(&self) -> AcfProfile {
        AcfProfile {
            n: self.n,
            mode: self.mode,
            mean_sq: self.per_lag.clone(),
            stderr: vec![0.0; self.n],
            trials: 0,
            source: ProfileSource::ClosedForm,
        }
    }

    /// `Σ_{k≥1} per_lag[k]`, the EISL by the per-lag route.
    pub fn summed_sidelobes(&self) -> f64 {
        self.per_lag[1..].iter().sum()
    }
}

/// `Σ_ij |m_ij|⁴`.
pub fn l4_norm_4(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm_sqr() * v.norm_sqr()).sum()
}

/// `Σ |(F_size · pad(u_m))_p|⁴` over the columns `u_m` of `u`, with each
/// column zero-padded to `size` and the unitary DFT of that size.
fn padded_spectrum_l4(u: &DMatrix<Complex64>, size: usize) -> f64 {
    let dft = Dft::new(size);
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    u.column_iter()
        .map(|col| {
            buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            buf[..col.len()].copy_from_slice(col.as_slice());
            dft.forward_unitary(&mut buf);
            buf.iter().map(|v| v.norm_sqr() * v.norm_sqr()).sum::<f64>()
        })
        .sum()
}

/// `‖F U‖₄⁴`.
pub fn l4_dft(basis: &UnitaryBasis) -> f64 {
    padded_spectrum_l4(basis.u(), basis.n())
}

/// `‖F̃_{2N} U‖₄⁴`.
pub fn l4_padded_dft(basis: &UnitaryBasis) -> f64 {
    padded_spectrum_l4(basis.u(), 2 * basis.n())
}

/// All `b_k`, indexed `[k][p]`.
///
/// Row `p` of `|V|²` is transformed once, giving entry `p` of every `b_k`.
pub fn b_vectors(basis: &UnitaryBasis) -> Vec<Vec<Complex64>> {
    let n = basis.n();
    let v = basis.v();
    let dft = Dft::new(n);
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let mut row = vec![Complex64::new(0.0, 0.0); n];
    for p in 0..n {
        for (q, r) in row.iter_mut().enumerate() {
            *r = Complex64::new(v[(p, q)].norm_sqr(), 0.0);
        }
        dft.forward_raw(&mut row);
        for (k, val) in row.iter().enumerate() {
            out[k][p] = *val;
        }
    }
    out
}

pub fn b_vector(basis: &UnitaryBasis, k: usize) -> Result<Vec<Complex64>> {
    if k >= basis.n() {
        return Err(Error::InvalidLag { k, n: basis.n() });
    }
    Ok(b_vectors(basis).swap_remove(k))
}

/// `‖b_k‖²` for `k = 0..n−1`.
pub fn b_norms_sq(basis: &UnitaryBasis) -> Vec<f64> {
    b_vectors(basis)
        .iter()
        .map(|b| b.iter().map(|v| v.norm_sqr()).sum())
        .collect()
}

/// `Σ_m |u_mᴴ J_k u_m|²` per lag: the summed squared aperiodic ACFs of the
/// basis columns.
pub fn column_acf_energy(basis: &UnitaryBasis) -> Vec<f64> {
    let n = basis.n();
    let plan = AcfPlan::new(n);
    let mut scratch = Vec::with_capacity(2 * n);
    let mut acf = vec![Complex64::new(0.0, 0.0); n];
    let mut total = vec![0.0; n];
    for col in basis.u().column_iter() {
        plan.aperiodic_into(col.as_slice(), &mut scratch, &mut acf);
        for (t, r) in total.iter_mut().zip(&acf) {
            *t += r.norm_sqr();
        }
    }
    total
}

/// Expected squared periodic ACF per lag and its EISL.
pub fn expected_pacf(basis: &UnitaryBasis, mu4: f64) -> ClosedFormReport {
    pacf_report(basis, mu4, AcfMode::Periodic)
}

fn pacf_report(basis: &UnitaryBasis, mu4: f64, mode: AcfMode) -> ClosedFormReport {
    let n = basis.n() as f64;
    let scale = n * n;
    let per_lag: Vec<f64> = b_norms_sq(basis)
        .into_iter()
        .enumerate()
        .map(|(k, b)| {
            let main = if k == 0 { n * n } else { 0.0 };
            snap(main + n + (mu4 - 2.0) * b, scale)
        })
        .collect();
    let l4 = l4_dft(basis);
    ClosedFormReport {
        n: basis.n(),
        mode,
        mu4,
        eisl: pacf_eisl_from_l4(n, mu4, l4),
        mainlobe: per_lag[0],
        per_lag,
        l4_objective: l4,
    }
}

fn pacf_eisl_from_l4(n: f64, mu4: f64, l4: f64) -> f64 {
    snap(n * (n - 1.0) + (mu4 - 2.0) * n * (l4 - 1.0), n * n * n)
}

/// EISL of the periodic ACF, `N(N−1) + (μ4−2) N (‖F U‖₄⁴ − 1)`.
pub fn eisl_pacf(basis: &UnitaryBasis, mu4: f64) -> f64 {
    pacf_eisl_from_l4(basis.n() as f64, mu4, l4_dft(basis))
}

/// Expected squared zero-delay Doppler slice: the periodic expectation
/// evaluated for the frequency-domain basis `F U`.
pub fn expected_doppler(basis: &UnitaryBasis, mu4: f64) -> ClosedFormReport {
    pacf_report(&basis.frequency_domain(), mu4, AcfMode::DopplerPeriodic)
}

/// Expected squared aperiodic ACF per lag and its EISL.
pub fn expected_aacf(basis: &UnitaryBasis, mu4: f64) -> ClosedFormReport {
    let nn = basis.n();
    let n = nn as f64;
    let per_lag: Vec<f64> = column_acf_energy(basis)
        .into_iter()
        .enumerate()
        .map(|(k, e)| {
            let main = if k == 0 { n * n } else { 0.0 };
            snap(main + (nn - k) as f64 + (mu4 - 2.0) * e, n * n)
        })
        .collect();
    let l4 = l4_padded_dft(basis);
    ClosedFormReport {
        n: nn,
        mode: AcfMode::Aperiodic,
        mu4,
        eisl: aacf_eisl_from_l4(n, mu4, l4),
        mainlobe: per_lag[0],
        per_lag,
        l4_objective: l4,
    }
}

fn aacf_eisl_from_l4(n: f64, mu4: f64, l4: f64) -> f64 {
    snap(n * (n - 1.0) / 2.0 + (mu4 - 2.0) * n * (l4 - 0.5), n * n * n)
}

/// EISL of the aperiodic ACF, `N(N−1)/2 + (μ4−2) N (‖F̃_{2N} U‖₄⁴ − 1/2)`.
pub fn eisl_aacf(basis: &UnitaryBasis, mu4: f64) -> f64 {
    aacf_eisl_from_l4(basis.n() as f64, mu4, l4_padded_dft(basis))
}

/// Closed-form report for the given mode.
pub fn expected_profile(basis: &UnitaryBasis, mu4: f64, mode: AcfMode) -> ClosedFormReport {
    match mode {
        AcfMode::Periodic => expected_pacf(basis, mu4),
        AcfMode::Aperiodic => expected_aacf(basis, mu4),
        AcfMode::DopplerPeriodic => expected_doppler(basis, mu4),
    }
}
