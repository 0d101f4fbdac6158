//! Kraus-form quantum channels, pinchings, semi-classical channels and the
//! Weyl–Heisenberg twirl.

use rand::Rng;
use serde::Serialize;

use crate::divergence::Povm;
use crate::error::{Error, Result};
use crate::sample::{gaussian_matrix, random_isometry};
use crate::spectral::{c, kron, max_abs, CMat, Psd, C64, MAX_DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ChannelKind {
    General,
    Pinching,
    QuantumClassical,
    ClassicalQuantum,
    UnitaryConjugation,
    PartialTrace,
    /// A CPTP map followed by the transpose: positive and trace preserving,
    /// not completely positive.
    Transposed,
}

/// `Φ(X) = Σ K_j X K_j^*`, optionally followed by the transpose.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    kraus: Vec<CMat>,
    kind: ChannelKind,
    transpose_output: bool,
}

/// Tolerance on `Σ K_j^* K_j = I`.
pub const TP_TOL: f64 = 1e-10;

impl QuantumChannel {
    pub fn new(kraus: Vec<CMat>, kind: ChannelKind) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::Parameter("a channel needs at least one Kraus operator".into()))?;
        let (m, n) = first.shape();
        if kraus.iter().any(|k| k.shape() != (m, n)) {
            return Err(Error::Parameter("Kraus operators must share one shape".into()));
        }
        let ch = QuantumChannel { kraus, kind, transpose_output: false };
        let dev = ch.tp_deviation();
        if dev > TP_TOL {
            return Err(Error::Parameter(format!("Kraus operators are not trace preserving (deviation {dev:.3e})")));
        }
        Ok(ch)
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn input_dim(&self) -> usize {
        self.kraus[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    pub fn is_completely_positive(&self) -> bool {
        !self.transpose_output
    }

    /// `max |Σ K_j^* K_j − I|`.
    pub fn tp_deviation(&self) -> f64 {
        let n = self.input_dim();
        let s = self.kraus.iter().fold(CMat::zeros(n, n), |acc, k| acc + k.adjoint() * k);
        max_abs(&(s - CMat::identity(n, n)))
    }

    /// The same map followed by the transpose.
    pub fn transposed(mut self) -> Self {
        self.transpose_output = !self.transpose_output;
        self.kind = ChannelKind::Transposed;
        self
    }

    /// `Φ ∘ Ψ`.
    pub fn compose(&self, inner: &QuantumChannel) -> Result<Self> {
        if self.input_dim() != inner.output_dim() {
            return Err(Error::DimensionMismatch(self.input_dim(), inner.output_dim()));
        }
        if inner.transpose_output {
            return Err(Error::Parameter("composition after a transpose is not supported".into()));
        }
        let kraus = self.kraus.iter().flat_map(|k| inner.kraus.iter().map(move |j| k * j)).collect();
        let mut out = QuantumChannel::new(kraus, ChannelKind::General)?;
        if self.transpose_output {
            out = out.transposed();
        }
        Ok(out)
    }

    pub fn apply_matrix(&self, x: &CMat) -> Result<CMat> {
        if x.shape() != (self.input_dim(), self.input_dim()) {
            return Err(Error::DimensionMismatch(x.nrows(), self.input_dim()));
        }
        let m = self.output_dim();
        let y = self.kraus.iter().fold(CMat::zeros(m, m), |acc, k| acc + k * x * k.adjoint());
        Ok(if self.transpose_output { y.transpose() } else { y })
    }

    pub fn apply(&self, x: &Psd) -> Result<Psd> {
        Psd::from_product(self.apply_matrix(x.matrix())?)
    }
}

/// Random channel `M_n → M_m` from a Haar isometry `C^n → C^m ⊗ C^env`
/// followed by the partial trace over the environment.
pub fn random_cptp<R: Rng + ?Sized>(n: usize, m: usize, env_dim: usize, rng: &mut R) -> Result<QuantumChannel> {
    if n == 0 || m == 0 || env_dim == 0 {
        return Err(Error::Parameter("dimensions must be positive".into()));
    }
    if m * env_dim < n {
        return Err(Error::Parameter(format!("no isometry C^{n} -> C^{m} ⊗ C^{env_dim}")));
    }
    let v = random_isometry(m * env_dim, n, rng);
    let kraus = (0..env_dim).map(|j| CMat::from_fn(m, n, |i, k| v[(i * env_dim + j, k)])).collect();
    QuantumChannel::new(kraus, ChannelKind::General)
}

/// Eigenvalues closer than this (relative to the largest) share a pinching block.
pub const BLOCK_GAP: f64 = 1e-10;

/// Spectral projections of `A`, merging eigenvalues within [`BLOCK_GAP`].
pub fn spectral_projections(a: &Psd) -> Vec<CMat> {
    let s = a.spectral();
    let n = s.dim();
    let top = s.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (s.values[start] - s.values[end]).abs() <= BLOCK_GAP * top {
            end += 1;
        }
        let v = s.vectors.columns(start, end - start);
        out.push(&v * v.adjoint());
        start = end;
    }
    out
}

/// `E_A(X) = Σ P_k X P_k` over the spectral projections of `A`.
pub fn pinching_channel(a: &Psd) -> Result<QuantumChannel> {
    QuantumChannel::new(spectral_projections(a), ChannelKind::Pinching)
}

/// `X ↦ Σ_i (Tr M_i X) E_ii`.
pub fn qc_channel(povm: &Povm) -> Result<QuantumChannel> {
    let k = povm.elements().len();
    let n = povm.dim();
    let mut kraus = Vec::new();
    for (i, m) in povm.elements().iter().enumerate() {
        let s = m.spectral();
        for (j, &mu) in s.values.iter().enumerate() {
            if mu <= 0.0 {
                continue;
            }
            let v = s.vectors.column(j);
            kraus.push(CMat::from_fn(k, n, |r, col| if r == i { v[col].conj() * c(mu.sqrt()) } else { C64::ZERO }));
        }
    }
    QuantumChannel::new(kraus, ChannelKind::QuantumClassical)
}

/// `X ↦ Σ_i X_ii ρ_i`; on diagonal inputs this is `a ↦ Σ a_i ρ_i`.
pub fn cq_channel(states: &[Psd]) -> Result<QuantumChannel> {
    let first = states.first().ok_or_else(|| Error::Parameter("no states".into()))?;
    let (n, m) = (states.len(), first.dim());
    let mut kraus = Vec::new();
    for (i, rho) in states.iter().enumerate() {
        if rho.dim() != m {
            return Err(Error::DimensionMismatch(rho.dim(), m));
        }
        if (rho.trace() - 1.0).abs() > 1e-10 {
            return Err(Error::Parameter(format!("state {i} has trace {}", rho.trace())));
        }
        let s = rho.spectral();
        for (j, &r) in s.values.iter().enumerate() {
            if r <= 0.0 {
                continue;
            }
            let w = s.vectors.column(j);
            kraus.push(CMat::from_fn(m, n, |row, col| if col == i { w[row] * c(r.sqrt()) } else { C64::ZERO }));
        }
    }
    QuantumChannel::new(kraus, ChannelKind::ClassicalQuantum)
}

pub fn unitary_channel(u: &CMat) -> Result<QuantumChannel> {
    QuantumChannel::new(vec![u.clone()], ChannelKind::UnitaryConjugation)
}

/// `Tr_2 : M_{n1} ⊗ M_{n2} → M_{n1}`.
pub fn partial_trace_channel(n1: usize, n2: usize) -> Result<QuantumChannel> {
    let kraus = (0..n2)
        .map(|j| CMat::from_fn(n1, n1 * n2, |r, col| if col == r * n2 + j { C64::ONE } else { C64::ZERO }))
        .collect();
    QuantumChannel::new(kraus, ChannelKind::PartialTrace)
}

/// `Tr_1 : M_{n1} ⊗ M_{n2} → M_{n2}`, applied to a matrix.
pub fn trace_out_first(z: &CMat, n1: usize, n2: usize) -> CMat {
    CMat::from_fn(n2, n2, |i, j| (0..n1).map(|k| z[(k * n2 + i, k * n2 + j)]).sum())
}

/// Weyl–Heisenberg shift `S_{jk} = δ_{j+1,k}` and clock `W = diag(ω^j)`,
/// `ω = e^{2πi/d}`, indices mod `d`.
pub fn weyl_heisenberg(d: usize) -> Result<(CMat, CMat)> {
    if d < 2 {
        return Err(Error::Parameter(format!("Weyl–Heisenberg matrices need d >= 2, got {d}")));
    }
    let s = CMat::from_fn(d, d, |j, k| if (j + 1) % d == k { C64::ONE } else { C64::ZERO });
    let w = CMat::from_fn(d, d, |j, k| if j == k { C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / d as f64) } else { C64::ZERO });
    Ok((s, w))
}

fn mat_pow(m: &CMat, k: usize) -> CMat {
    (0..k).fold(CMat::identity(m.nrows(), m.ncols()), |acc, _| acc * m)
}

/// Twirl over `U_{μν} = S^μ W^ν ⊗ I_m`: `d^{-2} Σ U Z U^*` with `d = dim / m`.
pub fn weyl_twirl(z: &CMat, d: usize, m: usize) -> Result<CMat> {
    let (s, w) = weyl_heisenberg(d)?;
    let id = CMat::identity(m, m);
    let mut acc = CMat::zeros(d * m, d * m);
    for mu in 0..d {
        let smu = mat_pow(&s, mu);
        for nu in 0..d {
            let u = kron(&(&smu * mat_pow(&w, nu)), &id);
            acc += &u * z * u.adjoint();
        }
    }
    Ok(acc / c((d * d) as f64))
}

/// `τ_0 ⊗ Tr_d(Z) = d^{-1} I_d ⊗ Tr_d(Z)`.
pub fn trace_expectation(z: &CMat, d: usize, m: usize) -> CMat {
    kron(&(CMat::identity(d, d) / c(d as f64)), &trace_out_first(z, d, m))
}

/// Largest entrywise gap between the twirl and the conditional expectation
/// onto `I_{nl} ⊗ M_m`, over `samples` random complex `Z`.
pub fn twirl_identity_check<R: Rng + ?Sized>(n: usize, l: usize, m: usize, samples: usize, rng: &mut R) -> Result<f64> {
    let d = n * l;
    if d * m > MAX_DIM || d < 2 || m == 0 {
        return Err(Error::DimensionTooLarge(d * m));
    }
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let z = gaussian_matrix(d * m, d * m, rng);
        let lhs = trace_expectation(&z, d, m);
        let rhs = weyl_twirl(&z, d, m)?;
        worst = worst.max(max_abs(&(lhs - rhs)));
    }
    Ok(worst)
}

/// Unitary dilation `Φ(X) = Tr_{nl} V (X ⊗ η) V^*` with `η = |0⟩⟨0|` on
/// `C^l ⊗ C^m`; requires `n·l ≥` number of Kraus operators.
#[derive(Clone, Debug)]
pub struct Dilation {
    pub n: usize,
    pub l: usize,
    pub m: usize,
    pub unitary: CMat,
}

impl Dilation {
    pub fn of(channel: &QuantumChannel, l: usize) -> Result<Self> {
        if !channel.is_completely_positive() {
            return Err(Error::Parameter("only CP maps have a unitary dilation".into()));
        }
        let (n, m) = (channel.input_dim(), channel.output_dim());
        let r = channel.kraus().len();
        let dim = n * l * m;
        if r > n * l || dim > 64 {
            return Err(Error::Parameter(format!("cannot dilate {r} Kraus operators with n = {n}, l = {l}")));
        }
        // isometry on the n-dimensional input subspace x ⊗ |0⟩: x ↦ Σ_j e_j ⊗ K_j x
        let mut iso = CMat::zeros(dim, n);
        for (j, k) in channel.kraus().iter().enumerate() {
            for col in 0..n {
                for row in 0..m {
                    iso[(j * m + row, col)] = k[(row, col)];
                }
            }
        }
        // complete to a unitary: input basis vectors x ⊗ |0⟩ sit at index col·(l·m)
        let completion = complete_isometry(&iso)?;
        let mut unitary = CMat::zeros(dim, dim);
        let lm = l * m;
        let mut spare = completion.columns(n, dim - n).column_iter().map(|c| c.into_owned()).collect::<Vec<_>>().into_iter();
        for idx in 0..dim {
            let col = if idx % lm == 0 { iso.column(idx / lm).into_owned() } else { spare.next().expect("dimension count") };
            unitary.set_column(idx, &col);
        }
        Ok(Dilation { n, l, m, unitary })
    }

    /// `X ⊗ η` embedded in `M_n ⊗ M_l ⊗ M_m`.
    pub fn embed(&self, x: &CMat) -> CMat {
        let lm = self.l * self.m;
        let mut eta = CMat::zeros(lm, lm);
        eta[(0, 0)] = C64::ONE;
        kron(x, &eta)
    }

    /// `V (X ⊗ η) V^*`.
    pub fn lift(&self, x: &CMat) -> CMat {
        &self.unitary * self.embed(x) * self.unitary.adjoint()
    }

    /// `Tr_{nl} V (X ⊗ η) V^*`.
    pub fn apply(&self, x: &CMat) -> CMat {
        trace_out_first(&self.lift(x), self.n * self.l, self.m)
    }

    /// Gap between `τ_0 ⊗ Φ(X)` and the twirl of `V(X ⊗ η)V^*`.
    pub fn twirl_deviation(&self, x: &CMat) -> Result<f64> {
        let d = self.n * self.l;
        let lhs = kron(&(CMat::identity(d, d) / c(d as f64)), &self.apply(x));
        let rhs = weyl_twirl(&self.lift(x), d, self.m)?;
        Ok(max_abs(&(lhs - rhs)))
    }
}

/// Unitary whose first columns are the given orthonormal columns.
fn complete_isometry(iso: &CMat) -> Result<CMat> {
    let (dim, k) = iso.shape();
    // Gram–Schmidt of the standard basis against the given columns
    let mut basis: Vec<nalgebra::DVector<C64>> = Vec::with_capacity(dim);
    for j in 0..k {
        basis.push(iso.column(j).into_owned());
    }
    for e in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = nalgebra::DVector::<C64>::zeros(dim);
        v[e] = C64::ONE;
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / c(norm));
        }
    }
    if basis.len() != dim {
        return Err(Error::Parameter("isometry completion failed".into()));
    }
    Ok(CMat::from_columns(&basis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{derive_rng, random_state, sample_psd};
    use crate::spectral::Hermitian;

    #[test]
    fn pinching_example() {
        let a = Psd::diag(&[1.0, 2.0]).unwrap();
        let x = Psd::from_real(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        let y = pinching_channel(&a).unwrap().apply(&x).unwrap();
        assert!(max_abs(&(y.matrix() - CMat::identity(2, 2))) < 1e-14);
        // degenerate eigenvalues form one block
        let p = pinching_channel(&Psd::identity(3)).unwrap();
        assert_eq!(p.kraus().len(), 1);
    }

    #[test]
    fn trivial_qc_channel_is_trace() {
        let povm = Povm::new(vec![Psd::identity(3)]).unwrap();
        let ch = qc_channel(&povm).unwrap();
        let mut rng = derive_rng(1, 0, 0);
        let x = sample_psd(3, None, &mut rng).unwrap();
        let y = ch.apply(&x).unwrap();
        assert_eq!(y.dim(), 1);
        assert!((y.trace() - x.trace()).abs() < 1e-14);
    }

    #[test]
    fn random_cptp_preserves_trace() {
        let mut rng = derive_rng(2, 0, 0);
        let ch = random_cptp(3, 2, 4, &mut rng).unwrap();
        assert!(ch.tp_deviation() < 1e-12);
        for _ in 0..100 {
            let x = crate::sample::gaussian_matrix(3, 3, &mut rng);
            let t = (ch.apply_matrix(&x).unwrap().trace() - x.trace()).norm();
            assert!(t <= 1e-12);
        }
    }

    #[test]
    fn cq_channel_maps_diagonals() {
        let mut rng = derive_rng(3, 0, 0);
        let rhos: Vec<Psd> = (0..3).map(|_| random_state(2, 2, &mut rng).unwrap()).collect();
        let ch = cq_channel(&rhos).unwrap();
        let a = [0.2, 0.5, 0.3];
        let y = ch.apply(&Psd::diag(&a).unwrap()).unwrap();
        let expect = rhos.iter().zip(a).fold(CMat::zeros(2, 2), |acc, (r, w)| acc + r.matrix() * c(w));
        assert!(max_abs(&(y.matrix() - expect)) < 1e-14);
    }

    #[test]
    fn weyl_relations() {
        let (s, w) = weyl_heisenberg(2).unwrap();
        assert_eq!(s, CMat::from_row_slice(2, 2, &[C64::ZERO, C64::ONE, C64::ONE, C64::ZERO]));
        assert!(max_abs(&(w - CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::ONE, c(-1.0)])))) < 1e-15);
        for d in 2..6 {
            let (s, w) = weyl_heisenberg(d).unwrap();
            let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / d as f64);
            assert!(max_abs(&(&s * &w - (&w * &s) * omega)) < 1e-14);
        }
    }

    #[test]
    fn twirl_is_conditional_expectation() {
        let mut rng = derive_rng(4, 0, 0);
        assert!(twirl_identity_check(2, 2, 2, 5, &mut rng).unwrap() < 1e-10);
        assert!(twirl_identity_check(2, 2, 3, 5, &mut rng).unwrap() < 1e-10);
        assert!(twirl_identity_check(4, 4, 2, 1, &mut rng).is_err());
    }

    #[test]
    fn dilation_reproduces_channel() {
        let mut rng = derive_rng(5, 0, 0);
        let ch = random_cptp(2, 2, 2, &mut rng).unwrap();
        let dil = Dilation::of(&ch, 2).unwrap();
        let u = &dil.unitary;
        assert!(max_abs(&(u.adjoint() * u - CMat::identity(8, 8))) < 1e-12);
        let x = sample_psd(2, None, &mut rng).unwrap();
        let direct = ch.apply_matrix(x.matrix()).unwrap();
        assert!(max_abs(&(dil.apply(x.matrix()) - direct)) < 1e-12);
        assert!(dil.twirl_deviation(x.matrix()).unwrap() < 1e-10);
    }

    #[test]
    fn transpose_is_positive_not_cp() {
        let mut rng = derive_rng(6, 0, 0);
        let ch = random_cptp(2, 2, 2, &mut rng).unwrap().transposed();
        assert!(!ch.is_completely_positive());
        let x = sample_psd(2, None, &mut rng).unwrap();
        let y = ch.apply(&x).unwrap();
        assert!((y.trace() - x.trace()).abs() < 1e-12);
        let h = Hermitian::symmetrized(ch.apply_matrix(x.matrix()).unwrap());
        assert!(h.eig().unwrap().values.iter().all(|&v| v > -1e-12));
    }

    #[test]
    fn partial_trace_matches_helper() {
        let mut rng = derive_rng(7, 0, 0);
        let a = sample_psd(2, None, &mut rng).unwrap();
        let b = sample_psd(3, None, &mut rng).unwrap();
        let ab = a.kron(&b).unwrap();
        let y = partial_trace_channel(2, 3).unwrap().apply(&ab).unwrap();
        assert!(max_abs(&(y.matrix() - a.matrix() * c(b.trace()))) < 1e-13);
    }
}
