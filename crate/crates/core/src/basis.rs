//! Orthonormal signaling bases and delay shift matrices.
//!
//! A basis is an `N × N` unitary `U`; the transmitted block is `x = U s`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dft::{cis, dft_matrix, max_abs_diff, unitarity_residual};
use crate::{Error, Result};

/// Residual allowed on `Uᴴ U − I` for a matrix to count as unitary.
pub const UNITARY_TOL: f64 = 1e-10;

/// Signaling scheme and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    SingleCarrier,
    /// `symbols` OFDM symbols of `subcarriers` subcarriers each.
    Ofdm { symbols: usize, subcarriers: usize },
    Cdma,
    Otfs { doppler: usize, delay: usize },
    Afdm { c1: f64, c2: f64 },
    GeneralizedOfdm { permutation: Vec<usize>, phases: Vec<Complex64> },
    /// Any other unitary, e.g. Haar draws or perturbations.
    Custom(String),
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::SingleCarrier => f.write_str("sc"),
            Scheme::Ofdm { symbols: 1, .. } => f.write_str("ofdm"),
            Scheme::Ofdm { symbols, subcarriers } => write!(f, "ofdm:L={symbols},M={subcarriers}"),
            Scheme::Cdma => f.write_str("cdma"),
            Scheme::Otfs { doppler, delay } => write!(f, "otfs:M={doppler},L={delay}"),
            Scheme::Afdm { c1, c2 } => write!(f, "afdm:c1={c1},c2={c2}"),
            Scheme::GeneralizedOfdm { .. } => f.write_str("gofdm"),
            Scheme::Custom(name) => f.write_str(name),
        }
    }
}

/// Unitary signaling matrix with its scheme label.
#[derive(Debug, Clone)]
pub struct UnitaryBasis {
    scheme: Scheme,
    u: DMatrix<Complex64>,
}

impl UnitaryBasis {
    /// Wrap an arbitrary matrix, checking it is square and unitary.
    pub fn from_matrix(name: impl Into<String>, u: DMatrix<Complex64>) -> Result<Self> {
        Self::checked(Scheme::Custom(name.into()), u)
    }

    fn checked(scheme: Scheme, u: DMatrix<Complex64>) -> Result<Self> {
        if !u.is_square() || u.nrows() < 2 {
            return Err(Error::InvalidArgument(format!(
                "basis must be square with n ≥ 2, got {}×{}",
                u.nrows(),
                u.ncols()
            )));
        }
        let r = unitarity_residual(&u);
        if !(r <= UNITARY_TOL) {
            return Err(Error::NotUnitary(r));
        }
        Ok(Self { scheme, u })
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn u(&self) -> &DMatrix<Complex64> {
        &self.u
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.u
    }

    /// `V = Uᴴ Fᴴ`, so that `F x = Vᴴ s`.
    pub fn v(&self) -> DMatrix<Complex64> {
        self.u.adjoint() * dft_matrix(self.n()).adjoint()
    }

    /// The basis seen in the frequency domain, `F U`. Its periodic
    /// auto-correlation is the zero-delay Doppler slice of `U`.
    pub fn frequency_domain(&self) -> UnitaryBasis {
        UnitaryBasis {
            scheme: Scheme::Custom(format!("F·{}", self.scheme)),
            u: dft_matrix(self.n()) * &self.u,
        }
    }

    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.u)
    }

    /// `x = U s` written into `out`.
    pub fn modulate_into(&self, s: &[Complex64], out: &mut [Complex64]) {
        let n = self.n();
        assert!(s.len() == n && out.len() == n, "symbol block length must equal n");
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (col, &sym) in self.u.column_iter().zip(s) {
            for (o, &c) in out.iter_mut().zip(col.iter()) {
                *o += c * sym;
            }
        }
    }

    pub fn modulate(&self, s: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n()];
        self.modulate_into(s, &mut out);
        out
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("basis dimension {n} < 2")));
    }
    Ok(())
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// Single carrier: `U = I`.
pub fn basis_sc(n: usize) -> Result<UnitaryBasis> {
    check_n(n)?;
    Ok(UnitaryBasis {
        scheme: Scheme::SingleCarrier,
        u: DMatrix::identity(n, n),
    })
}

/// OFDM: `U = Fᴴ`.
pub fn basis_ofdm(n: usize) -> Result<UnitaryBasis> {
    basis_ofdm_multi(1, n)
}

/// `l` OFDM symbols of `m` subcarriers: `U = I_l ⊗ F_mᴴ`.
pub fn basis_ofdm_multi(l: usize, m: usize) -> Result<UnitaryBasis> {
    if l == 0 || m == 0 {
        return Err(Error::InvalidArgument("OFDM needs L, M ≥ 1".into()));
    }
    check_n(l * m)?;
    let u = kron(&DMatrix::identity(l, l), &dft_matrix(m).adjoint());
    Ok(UnitaryBasis {
        scheme: Scheme::Ofdm { symbols: l, subcarriers: m },
        u,
    })
}

/// Sylvester–Hadamard (Walsh) spreading, scaled to be unitary.
pub fn basis_cdma(n: usize) -> Result<UnitaryBasis> {
    check_n(n)?;
    if !n.is_power_of_two() {
        return Err(Error::UnsupportedSize(n, "CDMA (Sylvester Hadamard) needs a power of two"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    // H[i][j] = (−1)^{popcount(i & j)}
    let u = DMatrix::from_fn(n, n, |i, j| {
        let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        Complex64::new(sign * scale, 0.0)
    });
    Ok(UnitaryBasis { scheme: Scheme::Cdma, u })
}

/// OTFS over `m` Doppler bins and `l` delay bins: `U = F_mᴴ ⊗ I_l`.
pub fn basis_otfs(m: usize, l: usize) -> Result<UnitaryBasis> {
    if m == 0 || l == 0 {
        return Err(Error::InvalidArgument("OTFS needs M, L ≥ 1".into()));
    }
    check_n(m * l)?;
    let u = kron(&dft_matrix(m).adjoint(), &DMatrix::identity(l, l));
    Ok(UnitaryBasis {
        scheme: Scheme::Otfs { doppler: m, delay: l },
        u,
    })
}

/// Chirp diagonal `Λ_c` with entries `exp(−j2π c m²)`, `m = 0..n−1`.
fn chirp(n: usize, c: f64) -> Vec<Complex64> {
    (0..n).map(|m| cis(-2.0 * PI * c * (m * m) as f64)).collect()
}

/// AFDM (inverse discrete affine Fourier transform): `U = Λ_{c1}ᴴ Fᴴ Λ_{c2}ᴴ`.
pub fn basis_afdm(n: usize, c1: f64, c2: f64) -> Result<UnitaryBasis> {
    check_n(n)?;
    let l1 = chirp(n, c1);
    let l2 = chirp(n, c2);
    let fh = dft_matrix(n).adjoint();
    let u = DMatrix::from_fn(n, n, |p, q| l1[p].conj() * fh[(p, q)] * l2[q].conj());
    Ok(UnitaryBasis {
        scheme: Scheme::Afdm { c1, c2 },
        u,
    })
}

/// Permutation matrix `Π` with `Π[perm[j], j] = 1`.
pub fn permutation_matrix(perm: &[usize]) -> Result<DMatrix<Complex64>> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidPermutation(format!("{perm:?} is not a permutation of 0..{n}")));
        }
        seen[p] = true;
    }
    let mut m = DMatrix::zeros(n, n);
    for (j, &p) in perm.iter().enumerate() {
        m[(p, j)] = Complex64::new(1.0, 0.0);
    }
    Ok(m)
}

/// OFDM over permuted subcarriers with initial phases: `U = Fᴴ Π Diag(θ)`.
pub fn basis_generalized_ofdm(perm: &[usize], phases: &[Complex64]) -> Result<UnitaryBasis> {
    let n = perm.len();
    check_n(n)?;
    if phases.len() != n {
        return Err(Error::InvalidArgument(format!("{} phases for n = {n}", phases.len())));
    }
    for (index, p) in phases.iter().enumerate() {
        if (p.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPhase { index, modulus: p.norm() });
        }
    }
    let pi = permutation_matrix(perm)?;
    let mut u = dft_matrix(n).adjoint() * pi;
    for (mut col, th) in u.column_iter_mut().zip(phases) {
        col *= *th;
    }
    Ok(UnitaryBasis {
        scheme: Scheme::GeneralizedOfdm {
            permutation: perm.to_vec(),
            phases: phases.to_vec(),
        },
        u,
    })
}

/// Random permutation and uniform phases.
pub fn random_generalized_ofdm<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<UnitaryBasis> {
    use rand::seq::SliceRandom;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let phases: Vec<Complex64> = (0..n).map(|_| cis(2.0 * PI * rng.random::<f64>())).collect();
    basis_generalized_ofdm(&perm, &phases)
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of `R`'s diagonal folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            col *= d / d.norm();
        }
    }
    q
}

pub fn basis_haar<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<UnitaryBasis> {
    check_n(n)?;
    UnitaryBasis::from_matrix("haar", haar_unitary(n, rng))
}

/// Delay shift matrix `J_k` (aperiodic) or `J̃_k` (periodic).
///
/// Row `i` selects sample `i + k`, so `xᴴ J_k x = Σ_i x_i* x_{i+k}`. The
/// aperiodic form drops indices past the end; the periodic form wraps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftMatrix {
    n: usize,
    k: usize,
    periodic: bool,
}

impl ShiftMatrix {
    pub fn new(n: usize, k: usize, periodic: bool) -> Result<Self> {
        if k >= n {
            return Err(Error::InvalidLag { k, n });
        }
        Ok(Self { n, k, periodic })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lag(&self) -> usize {
        self.k
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    /// `J x` by index slicing.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let j = i + self.k;
                if j < self.n {
                    x[j]
                } else if self.periodic {
                    x[j - self.n]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    }

    /// `xᴴ J y`.
    pub fn bilinear(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        x.iter().zip(self.apply(y)).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let j = i + self.k;
            if j < self.n {
                m[(i, j)] = Complex64::new(1.0, 0.0);
            } else if self.periodic {
                m[(i, j - self.n)] = Complex64::new(1.0, 0.0);
            }
        }
        m
    }
}

/// `max |J̃_k − √n Fᴴ Diag(f_{(n−k) mod n}) F|`, with `f_c` the `c`-th
/// (0-based) column of the unitary DFT.
pub fn verify_shift_diagonalization(n: usize, k: usize) -> Result<f64> {
    let shift = ShiftMatrix::new(n, k, true)?;
    let f = dft_matrix(n);
    let col = (n - k) % n;
    let scale = (n as f64).sqrt();
    let mut diag_f = f.clone();
    for (p, mut row) in diag_f.row_iter_mut().enumerate() {
        row *= f[(p, col)] * scale;
    }
    let rhs = f.adjoint() * diag_f;
    Ok(max_abs_diff(&shift.to_dense(), &rhs))
}
