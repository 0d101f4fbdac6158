//! Seeded random matrices.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::spectral::{c, CMat, Hermitian, Psd, C64, MAX_DIM};

pub type SeedRng = ChaCha8Rng;

/// Independent stream for `(seed, stream, index)`; used to split work across
/// threads without changing results.
pub fn derive_rng(seed: u64, stream: u64, index: u64) -> SeedRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index);
    rng
}

/// Stable 64-bit hash of a label (FNV-1a), for naming RNG streams.
pub fn label_stream(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-random unitary via QR with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    random_isometry(n, n, rng)
}

/// Haar-random isometry `rows x cols` (`rows >= cols`).
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    assert!(rows >= cols);
    let g = gaussian_matrix(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..rows {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Random Hermitian matrix with Gaussian entries, scaled to unit spectral norm.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Hermitian {
    let g = gaussian_matrix(n, n, rng);
    let h = Hermitian::symmetrized(g);
    let norm = h.op_norm().unwrap_or(1.0).max(1e-300);
    h.scale(1.0 / norm)
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Parameter("dimension must be positive".into()));
    }
    if n > MAX_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    Ok(())
}

/// Spectrum in `[1/kappa, 1]` with both endpoints attained (for `n >= 2`),
/// interior points log-uniform.
fn spectrum<R: Rng + ?Sized>(k: usize, kappa: f64, rng: &mut R) -> Vec<f64> {
    let lk = kappa.ln();
    (0..k)
        .map(|i| match i {
            0 => 1.0,
            _ if i == k - 1 => 1.0 / kappa,
            _ => (-rng.random::<f64>() * lk).exp(),
        })
        .collect()
}

/// PSD matrix with unit spectral norm. Without a condition target it is a
/// normalized Wishart sample `G G*`; with one, Haar eigenvectors and a
/// spectrum spanning exactly `[1/kappa, 1]`.
pub fn sample_psd<R: Rng + ?Sized>(n: usize, condition_target: Option<f64>, rng: &mut R) -> Result<Psd> {
    check_dim(n)?;
    match condition_target {
        None => {
            let g = gaussian_matrix(n, n, rng);
            let w = Psd::from_product(&g * g.adjoint())?;
            let s = 1.0 / w.lambda_max();
            Ok(w.scale(s))
        }
        Some(kappa) => {
            if !(kappa >= 1.0) {
                return Err(Error::Parameter(format!("condition target {kappa} < 1")));
            }
            Ok(with_spectrum(&spectrum(n, kappa, rng), n, rng))
        }
    }
}

/// `U diag(values, 0, ..) U*` with `U` Haar on `C^n`.
fn with_spectrum<R: Rng + ?Sized>(values: &[f64], n: usize, rng: &mut R) -> Psd {
    let u = random_unitary(n, rng);
    let mut v = values.to_vec();
    v.resize(n, 0.0);
    v.sort_by(|a, b| b.total_cmp(a));
    Psd::from_spectral(v, u)
}

/// Rank-`k` PSD matrix supported inside the column span of `basis`.
fn supported_on<R: Rng + ?Sized>(basis: &CMat, k: usize, kappa: f64, rng: &mut R) -> Result<Psd> {
    let dim = basis.ncols();
    let w = random_unitary(dim, rng);
    let frame = basis * w.columns(0, k);
    let vals = spectrum(k, kappa, rng);
    let inner = CMat::from_fn(k, k, |i, j| if i == j { c(vals[i]) } else { C64::ZERO });
    Psd::from_product(&frame * inner * frame.adjoint())
}

/// Dominated pair: `A` full rank, `B` of rank `rank_b` (so `s(A) >= s(B)`).
pub fn sample_psd_pair_dominated<R: Rng + ?Sized>(n: usize, rank_b: usize, rng: &mut R) -> Result<(Psd, Psd)> {
    sample_pair(n, PairShape::Dominated { rank_a: n, rank_b }, 10.0, rng)
}

/// Support patterns for random pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairShape {
    FullRank,
    /// `s(A) >= s(B)`, with the given ranks.
    Dominated { rank_a: usize, rank_b: usize },
    /// `s(B) >= s(A)`.
    ReverseDominated { rank_a: usize, rank_b: usize },
}

/// Pair with nonzero eigenvalues in `[1/kappa, 1]`.
pub fn sample_pair<R: Rng + ?Sized>(n: usize, shape: PairShape, kappa: f64, rng: &mut R) -> Result<(Psd, Psd)> {
    check_dim(n)?;
    let nested = |big: usize, small: usize, rng: &mut R| -> Result<(Psd, Psd)> {
        if small > big || big > n || small == 0 {
            return Err(Error::Parameter(format!("ranks {big} >= {small} invalid for n = {n}")));
        }
        let u = random_unitary(n, rng);
        let span = u.columns(0, big).into_owned();
        let a = supported_on(&span, big, kappa, rng)?;
        let sub = span.columns(0, big).into_owned();
        let b = supported_on(&sub, small, kappa, rng)?;
        Ok((a, b))
    };
    match shape {
        PairShape::FullRank => {
            let a = with_spectrum(&spectrum(n, kappa, rng), n, rng);
            let b = with_spectrum(&spectrum(n, kappa, rng), n, rng);
            Ok((a, b))
        }
        PairShape::Dominated { rank_a, rank_b } => nested(rank_a, rank_b, rng),
        PairShape::ReverseDominated { rank_a, rank_b } => {
            let (b, a) = nested(rank_b, rank_a, rng)?;
            Ok((a, b))
        }
    }
}

/// Random density matrix (unit trace) of the given rank.
pub fn random_state<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Result<Psd> {
    check_dim(n)?;
    let g = gaussian_matrix(n, rank.clamp(1, n), rng);
    let w = Psd::from_product(&g * g.adjoint())?;
    let t = w.trace();
    Ok(w.scale(1.0 / t))
}
