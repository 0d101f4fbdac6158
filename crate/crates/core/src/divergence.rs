//! Classical and quantum Rényi-type divergences built from the trace of a
//! quasi-mean, measured lower bounds and the Log-Euclidean variational formula.
//!
//! Argument order follows the divergence convention `D(B‖A)`, the reverse of
//! the mean convention `M(A, B)`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::means::{compute_mean, dominates, trace_mean, MeanKind, MeanSpec};
use crate::sample::{gaussian_matrix, random_hermitian, random_unitary, SeedRng};
use crate::spectral::{c, kron, same_dim, CMat, Hermitian, Psd, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DivergenceStatus {
    InDomain,
    SupportViolation,
}

/// A divergence value; `value` is `+∞` exactly on a support violation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DivergenceValue {
    #[serde(serialize_with = "extended_real")]
    pub value: f64,
    pub status: DivergenceStatus,
}

fn extended_real<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    }
}

impl DivergenceValue {
    fn finite(value: f64) -> Self {
        DivergenceValue { value, status: DivergenceStatus::InDomain }
    }

    fn infinite() -> Self {
        DivergenceValue { value: f64::INFINITY, status: DivergenceStatus::SupportViolation }
    }

    pub fn is_finite(&self) -> bool {
        self.status == DivergenceStatus::InDomain
    }
}

/// Relative cut below which a classical weight counts as zero.
const ZERO_CUT: f64 = 1e-14;

/// Classical Rényi divergence `D_α(b‖a)`; `α = 1` gives the normalized
/// Kullback–Leibler limit `Σ b log(b/a) / Σ b`.
pub fn classical_renyi(b: &[f64], a: &[f64], alpha: f64) -> Result<DivergenceValue> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    if a.iter().chain(b).any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain("weights must be finite and nonnegative".into()));
    }
    let total: f64 = b.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("b must be nonzero".into()));
    }
    let scale = a.iter().chain(b).fold(0.0f64, |m, &v| m.max(v));
    let zero = |v: f64| v <= ZERO_CUT * scale;
    let violation = a.iter().zip(b).any(|(&ai, &bi)| zero(ai) && !zero(bi));
    if alpha >= 1.0 && violation {
        return Ok(DivergenceValue::infinite());
    }
    let pairs = a.iter().zip(b).filter(|(&ai, &bi)| !zero(ai) && !zero(bi));
    if alpha == 1.0 {
        let s: f64 = pairs.map(|(&ai, &bi)| bi * (bi / ai).ln()).sum();
        return Ok(DivergenceValue::finite(s / total));
    }
    let s: f64 = pairs.map(|(&ai, &bi)| bi.powf(alpha) * ai.powf(1.0 - alpha)).sum();
    if s <= 0.0 {
        // disjoint supports with α < 1
        return Ok(DivergenceValue::infinite());
    }
    Ok(DivergenceValue::finite((s / total).ln() / (alpha - 1.0)))
}

fn nonzero(b: &Psd) -> Result<()> {
    if b.rank() == 0 {
        Err(Error::Domain("B must be nonzero".into()))
    } else {
        Ok(())
    }
}

/// `D^{M}(B‖A) = log(Tr M(A,B) / Tr B) / (α − 1)`, or `+∞` outside the domain of `M`.
pub fn divergence_from_mean(spec: &MeanSpec, a: &Psd, b: &Psd) -> Result<DivergenceValue> {
    same_dim(a.dim(), b.dim())?;
    nonzero(b)?;
    if spec.requires_dominance() && !dominates(a, b) {
        return Ok(DivergenceValue::infinite());
    }
    let t = compute_mean(spec, a, b)?.value.trace().max(0.0);
    if t == 0.0 {
        return Ok(DivergenceValue::infinite());
    }
    Ok(DivergenceValue::finite((t / b.trace()).ln() / (spec.alpha - 1.0)))
}

/// Umegaki relative entropy `Tr X(log X − log A)`, `+∞` unless `s(X) ≤ s(A)`.
pub fn umegaki_relative_entropy(x: &Psd, a: &Psd) -> Result<DivergenceValue> {
    same_dim(x.dim(), a.dim())?;
    if !dominates(a, x) {
        return Ok(DivergenceValue::infinite());
    }
    let lx = x.log_support()?;
    let la = a.log_support()?;
    let d = (x.matrix() * (lx.matrix() - la.matrix())).trace().re;
    Ok(DivergenceValue::finite(d))
}

/// α-z divergence, `D^{R_{α,1/z}}`.
pub fn alpha_z(a: &Psd, b: &Psd, alpha: f64, z: f64) -> Result<DivergenceValue> {
    if !(z > 0.0) {
        return Err(Error::Parameter(format!("z must be positive, got {z}")));
    }
    divergence_from_mean(&MeanSpec::new(MeanKind::Renyi, alpha, 1.0 / z)?, a, b)
}

pub fn petz(a: &Psd, b: &Psd, alpha: f64) -> Result<DivergenceValue> {
    alpha_z(a, b, alpha, 1.0)
}

/// Sandwiched divergence; at `α = 1` the Umegaki limit `D(B‖A) / Tr B`.
pub fn sandwiched(a: &Psd, b: &Psd, alpha: f64) -> Result<DivergenceValue> {
    if alpha == 1.0 {
        nonzero(b)?;
        let d = umegaki_relative_entropy(b, a)?;
        return Ok(if d.is_finite() { DivergenceValue::finite(d.value / b.trace()) } else { d });
    }
    alpha_z(a, b, alpha, alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Exactness {
    Exact,
    /// Only an upper bound on the maximal divergence (`α > 2`).
    UpperBoundOnly,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MaximalDivergence {
    pub value: DivergenceValue,
    pub exactness: Exactness,
}

/// Maximal Rényi divergence through `D^{G_{α,1}}`, exact for `α ≤ 2`.
pub fn maximal_divergence(a: &Psd, b: &Psd, alpha: f64) -> Result<MaximalDivergence> {
    let value = divergence_from_mean(&MeanSpec::new(MeanKind::Geometric, alpha, 1.0)?, a, b)?;
    let exactness = if alpha <= 2.0 { Exactness::Exact } else { Exactness::UpperBoundOnly };
    Ok(MaximalDivergence { value, exactness })
}

/// A finite POVM.
#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<Psd>,
}

impl Povm {
    pub fn new(elements: Vec<Psd>) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::Parameter("empty POVM".into()))?;
        let n = first.dim();
        let mut sum = CMat::zeros(n, n);
        for m in &elements {
            same_dim(n, m.dim())?;
            sum += m.matrix();
        }
        let dev = crate::spectral::max_abs(&(sum - CMat::identity(n, n)));
        if dev > 1e-10 {
            return Err(Error::Parameter(format!("POVM elements sum to I only within {dev:.3e}")));
        }
        Ok(Povm { elements })
    }

    /// Rank-one projections onto the columns of a unitary.
    pub fn from_basis(u: &CMat) -> Result<Self> {
        let n = u.nrows();
        let elements = (0..u.ncols())
            .map(|j| {
                let v = u.column(j).into_owned();
                Psd::from_product(&v * v.adjoint())
            })
            .collect::<Result<Vec<_>>>()?;
        debug_assert_eq!(n, u.ncols());
        Povm::new(elements)
    }

    /// Random `k`-outcome POVM `S^{-1/2} G_i G_i^* S^{-1/2}`.
    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parameter("POVM needs at least one outcome".into()));
        }
        let gs: Vec<CMat> = (0..k).map(|_| gaussian_matrix(n, 1, rng)).collect();
        let s = Psd::from_product(gs.iter().fold(CMat::zeros(n, n), |acc, g| acc + g * g.adjoint()))?;
        let root = s.pow(-0.5);
        let elements = gs
            .iter()
            .map(|g| {
                let v = root.matrix() * g;
                Psd::from_product(&v * v.adjoint())
            })
            .collect::<Result<Vec<_>>>()?;
        Povm::new(elements)
    }

    pub fn elements(&self) -> &[Psd] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// Outcome weights `Tr M_i X`.
    pub fn probabilities(&self, x: &Psd) -> Vec<f64> {
        self.elements.iter().map(|m| (m.matrix() * x.matrix()).trace().re.max(0.0)).collect()
    }
}

/// `D_α^cl((Tr M_i B) ‖ (Tr M_i A))`.
pub fn povm_divergence(povm: &Povm, a: &Psd, b: &Psd, alpha: f64) -> Result<DivergenceValue> {
    same_dim(povm.dim(), a.dim())?;
    same_dim(a.dim(), b.dim())?;
    classical_renyi(&povm.probabilities(b), &povm.probabilities(a), alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MeasurementStrategy {
    /// Projective measurements in the eigenbases of `A` and of `B`.
    PinchingBasis,
    /// Projective qubit measurements along `directions` Bloch vectors.
    ProjectiveGrid { directions: usize },
    /// Random `outcomes`-element POVMs and random bases, `trials` of each.
    RandomPovm { outcomes: usize, trials: usize },
}

/// Best classical divergence found over the tried measurements; a lower
/// bound to the measured divergence, never the supremum itself.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeasuredLowerBound {
    pub value: DivergenceValue,
    pub measurements: usize,
}

fn bloch_projectors(directions: usize) -> Result<Vec<Povm>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..directions)
        .map(|i| {
            let z = 1.0 - (i as f64 + 0.5) / directions as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            let (x, y) = (r * phi.cos(), r * phi.sin());
            let half = |s: f64| {
                CMat::from_row_slice(
                    2,
                    2,
                    &[c(0.5 * (1.0 + s * z)), C64::new(0.5 * s * x, -0.5 * s * y), C64::new(0.5 * s * x, 0.5 * s * y), c(0.5 * (1.0 - s * z))],
                )
            };
            Povm::new(vec![Psd::from_product(half(1.0))?, Psd::from_product(half(-1.0))?])
        })
        .collect()
}

pub fn measured_divergence_lb(a: &Psd, b: &Psd, alpha: f64, strategy: MeasurementStrategy, rng: &mut SeedRng) -> Result<MeasuredLowerBound> {
    same_dim(a.dim(), b.dim())?;
    nonzero(b)?;
    let n = a.dim();
    let povms: Vec<Povm> = match strategy {
        MeasurementStrategy::PinchingBasis => vec![Povm::from_basis(&a.spectral().vectors)?, Povm::from_basis(&b.spectral().vectors)?],
        MeasurementStrategy::ProjectiveGrid { directions } => {
            if n != 2 {
                return Err(Error::Parameter(format!("projective grid needs n = 2, got {n}")));
            }
            bloch_projectors(directions.max(1))?
        }
        MeasurementStrategy::RandomPovm { outcomes, trials } => {
            let mut v = Vec::with_capacity(2 * trials);
            for _ in 0..trials {
                v.push(Povm::random(n, outcomes.max(1), rng)?);
                v.push(Povm::from_basis(&random_unitary(n, rng))?);
            }
            v
        }
    };
    let mut best = DivergenceValue::finite(f64::NEG_INFINITY);
    for p in &povms {
        let d = povm_divergence(p, a, b, alpha)?;
        if d.value > best.value {
            best = d;
        }
    }
    Ok(MeasuredLowerBound { value: best, measurements: povms.len() })
}

/// Largest supported dimension `n^m` for the regularized estimate.
pub const TENSOR_DIM_CAP: usize = 16;

/// Eigenvalue blocks closer than this (relative) are merged by the pinching.
const BLOCK_GAP: f64 = 1e-10;

/// `(1/m) D_α^cl(E_{A^{⊗m}}(B^{⊗m}) ‖ A^{⊗m})`, evaluated block by block in
/// the eigenbasis of `A^{⊗m}` (the pinched pair commutes).
pub fn regularized_measured_estimate(a: &Psd, b: &Psd, alpha: f64, m: usize) -> Result<f64> {
    same_dim(a.dim(), b.dim())?;
    nonzero(b)?;
    let n = a.dim();
    if m == 0 || n.checked_pow(m as u32).is_none_or(|d| d > TENSOR_DIM_CAP) {
        return Err(Error::Parameter(format!("n^m = {n}^{m} exceeds the cap {TENSOR_DIM_CAP}")));
    }
    // eigen-decomposition of A^{⊗m} from that of A
    let sa = a.spectral();
    let mut values = vec![1.0];
    let mut vectors = CMat::identity(1, 1);
    let mut bm = CMat::identity(1, 1);
    for _ in 0..m {
        values = values.iter().flat_map(|&v| sa.values.iter().map(move |&w| v * w.max(0.0))).collect();
        vectors = kron(&vectors, &sa.vectors);
        bm = kron(&bm, b.matrix());
    }
    let dim = values.len();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let top = values[order[0]].max(f64::MIN_POSITIVE);
    let mut a_weights = Vec::new();
    let mut b_weights = Vec::new();
    let mut start = 0;
    while start < dim {
        let v0 = values[order[start]];
        let mut end = start + 1;
        while end < dim && (v0 - values[order[end]]).abs() <= BLOCK_GAP * top.max(v0) {
            end += 1;
        }
        let cols: Vec<usize> = order[start..end].to_vec();
        let vk = vectors.select_columns(&cols);
        let block = Hermitian::symmetrized(vk.adjoint() * &bm * &vk);
        let a_val = cols.iter().map(|&i| values[i]).sum::<f64>() / cols.len() as f64;
        for bv in block.eig()?.values {
            a_weights.push(a_val);
            b_weights.push(bv.max(0.0));
        }
        start = end;
    }
    let d = classical_renyi(&b_weights, &a_weights, alpha)?;
    Ok(d.value / m as f64)
}

/// Objective `Tr X − (1−α) D(X‖A) − α D(X‖B)` of the Log-Euclidean variational formula.
pub fn le_objective(x: &Psd, a: &Psd, b: &Psd, alpha: f64) -> Result<f64> {
    let da = umegaki_relative_entropy(x, a)?;
    let db = umegaki_relative_entropy(x, b)?;
    if !(da.is_finite() && db.is_finite()) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(x.trace() - (1.0 - alpha) * da.value - alpha * db.value)
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationalReport {
    pub alpha: f64,
    pub trace_le: f64,
    pub objective_at_le: f64,
    /// `|objective(X*) − Tr LE| / Tr LE`.
    pub identity_error: f64,
    pub perturbations: usize,
    /// Largest `objective(X* + εΔ) − objective(X*)`; should be `≤ 0`.
    pub max_improvement: f64,
}

/// Evaluates the variational formula at `X* = LE_α(A,B)` and at random
/// perturbations `X* + εΔ` (Δ Hermitian, unit norm, ε shrunk until PSD).
pub fn le_variational_check(a: &Psd, b: &Psd, alpha: f64, perturbations: usize, eps: f64, rng: &mut SeedRng) -> Result<VariationalReport> {
    if !(a.is_full_rank() && b.is_full_rank()) {
        return Err(Error::Domain("the variational check needs full-rank A and B".into()));
    }
    let spec = MeanSpec::le(alpha)?;
    let x = compute_mean(&spec, a, b)?.value;
    let trace_le = x.trace();
    let objective_at_le = le_objective(&x, a, b, alpha)?;
    let mut max_improvement = f64::NEG_INFINITY;
    let floor = x.eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    for _ in 0..perturbations {
        let d = random_hermitian(x.dim(), rng);
        let step = eps.min(0.5 * floor);
        let y = Psd::new(Hermitian::symmetrized(x.matrix() + d.matrix() * c(step)))?;
        max_improvement = max_improvement.max(le_objective(&y, a, b, alpha)? - objective_at_le);
    }
    Ok(VariationalReport {
        alpha,
        trace_le,
        objective_at_le,
        identity_error: (objective_at_le - trace_le).abs() / trace_le.abs().max(f64::MIN_POSITIVE),
        perturbations,
        max_improvement,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub spec: MeanSpec,
    pub trace_geometric: f64,
    pub trace_mean: f64,
    pub trace_sandwiched: f64,
    /// For `α < 1`: `Tr G_{α,1} ≤ Tr M`; for `α > 1`: `Tr R_{α,1/α} ≤ Tr M`.
    pub lower_holds: bool,
    /// For `α < 1`: `Tr M ≤ Tr R_{α,1/α}`; for `α > 1`: `Tr M ≤ Tr G_{α,1}`.
    pub upper_holds: bool,
    pub lower_margin: f64,
    pub upper_margin: f64,
}

/// The trace bounds necessary for joint concavity (`α < 1`) or convexity (`α > 1`).
pub fn sandwich_check(spec: &MeanSpec, a: &Psd, b: &Psd, tol: f64) -> Result<SandwichReport> {
    if spec.requires_dominance() && !dominates(a, b) {
        return Err(Error::Domain(format!("(A, B) is outside the domain of {}", spec.label())));
    }
    let alpha = spec.alpha;
    let g = trace_mean(&MeanSpec::new(MeanKind::Geometric, alpha, 1.0)?, a, b)?;
    let m = trace_mean(spec, a, b)?;
    let r = trace_mean(&MeanSpec::new(MeanKind::Renyi, alpha, 1.0 / alpha)?, a, b)?;
    let (lo, hi) = if alpha < 1.0 { (g, r) } else { (r, g) };
    let scale = m.abs().max(f64::MIN_POSITIVE);
    let lower_margin = (m - lo) / scale;
    let upper_margin = (hi - m) / scale;
    Ok(SandwichReport {
        spec: *spec,
        trace_geometric: g,
        trace_mean: m,
        trace_sandwiched: r,
        lower_holds: lower_margin >= -tol,
        upper_holds: upper_margin >= -tol,
        lower_margin,
        upper_margin,
    })
}

/// One pair's position in the chain measured ≤ D ≤ maximal.
#[derive(Clone, Debug, Serialize)]
pub struct OrderingRow {
    pub label: String,
    pub value: f64,
    /// `D − measured_lb`.
    pub lower_slack: f64,
    /// `maximal − D`.
    pub upper_slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderingReport {
    pub alpha: f64,
    pub measured_lb: f64,
    pub maximal: f64,
    pub rows: Vec<OrderingRow>,
}

impl OrderingReport {
    pub fn min_slack(&self) -> f64 {
        self.rows.iter().map(|r| r.lower_slack.min(r.upper_slack)).fold(f64::INFINITY, f64::min)
    }
}

/// Measured lower bound, Petz, sandwiched and α-z (`z` from `zs`) against
/// the maximal divergence on one pair.
pub fn ordering_check(a: &Psd, b: &Psd, alpha: f64, zs: &[f64], strategy: MeasurementStrategy, rng: &mut SeedRng) -> Result<OrderingReport> {
    let mut measured = measured_divergence_lb(a, b, alpha, MeasurementStrategy::PinchingBasis, rng)?.value.value;
    if strategy != MeasurementStrategy::PinchingBasis {
        measured = measured.max(measured_divergence_lb(a, b, alpha, strategy, rng)?.value.value);
    }
    let maximal = maximal_divergence(a, b, alpha)?.value.value;
    let mut entries = vec![("Petz".to_string(), petz(a, b, alpha)?.value), ("sandwiched".to_string(), sandwiched(a, b, alpha)?.value)];
    for &z in zs {
        entries.push((format!("alpha-z(z={z})"), alpha_z(a, b, alpha, z)?.value));
    }
    let rows = entries
        .into_iter()
        .map(|(label, value)| OrderingRow { label, value, lower_slack: value - measured, upper_slack: maximal - value })
        .collect();
    Ok(OrderingReport { alpha, measured_lb: measured, maximal, rows })
}

/// Tensor power `X^{⊗m}`.
pub fn tensor_power(x: &Psd, m: usize) -> Result<Psd> {
    let mut out = CMat::identity(1, 1);
    for _ in 0..m {
        out = kron(&out, x.matrix());
    }
    Psd::from_product(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{derive_rng, random_state, sample_psd};
    use approx::assert_relative_eq;

    #[test]
    fn classical_examples() {
        let d = classical_renyi(&[1.0, 0.0], &[0.5, 0.5], 0.5).unwrap();
        assert_relative_eq!(d.value, 2f64.ln(), epsilon = 1e-15);
        assert_eq!(classical_renyi(&[0.3, 0.7], &[0.3, 0.7], 1.7).unwrap().value, 0.0);
        let inf = classical_renyi(&[1.0, 0.0], &[0.0, 1.0], 2.0).unwrap();
        assert_eq!(inf.status, DivergenceStatus::SupportViolation);
        assert!(classical_renyi(&[0.0, 0.0], &[1.0, 1.0], 0.5).is_err());
    }

    #[test]
    fn commuting_reduces_to_classical() {
        let a = Psd::diag(&[0.2, 0.5, 0.3]).unwrap();
        let b = Psd::diag(&[0.6, 0.1, 0.3]).unwrap();
        for kind in MeanKind::GEOMETRIC_TYPE {
            for alpha in [0.4, 1.7] {
                let spec = MeanSpec::new(kind, alpha, 1.3).unwrap();
                let q = divergence_from_mean(&spec, &a, &b).unwrap().value;
                let cl = classical_renyi(&[0.6, 0.1, 0.3], &[0.2, 0.5, 0.3], alpha).unwrap().value;
                assert_relative_eq!(q, cl, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn equal_arguments_give_zero() {
        let mut rng = derive_rng(3, 0, 0);
        let a = sample_psd(3, Some(10.0), &mut rng).unwrap();
        for kind in MeanKind::GEOMETRIC_TYPE {
            let spec = MeanSpec::new(kind, 1.5, 0.7).unwrap();
            assert!(divergence_from_mean(&spec, &a, &a).unwrap().value.abs() < 1e-12);
        }
        assert!(umegaki_relative_entropy(&a, &a).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn maximal_flags_upper_bound() {
        let a = Psd::identity(2);
        assert_eq!(maximal_divergence(&a, &a, 2.5).unwrap().exactness, Exactness::UpperBoundOnly);
        assert_eq!(maximal_divergence(&a, &a, 0.5).unwrap().exactness, Exactness::Exact);
    }

    #[test]
    fn support_violation_is_infinite() {
        let a = Psd::diag(&[1.0, 0.0]).unwrap();
        let b = Psd::diag(&[0.5, 0.5]).unwrap();
        assert!(!petz(&a, &b, 1.5).unwrap().is_finite());
        assert!(petz(&a, &b, 0.5).unwrap().is_finite());
    }

    #[test]
    fn pinching_exact_on_commuting_pair() {
        let a = Psd::diag(&[0.2, 0.8]).unwrap();
        let b = Psd::diag(&[0.7, 0.3]).unwrap();
        let mut rng = derive_rng(0, 0, 0);
        let lb = measured_divergence_lb(&a, &b, 1.5, MeasurementStrategy::PinchingBasis, &mut rng).unwrap();
        let cl = classical_renyi(&[0.7, 0.3], &[0.2, 0.8], 1.5).unwrap();
        assert_relative_eq!(lb.value.value, cl.value, epsilon = 1e-14);
        assert_relative_eq!(regularized_measured_estimate(&a, &b, 1.5, 1).unwrap(), cl.value, epsilon = 1e-14);
    }

    #[test]
    fn grid_beats_pinching_and_stays_below_maximal() {
        let mut rng = derive_rng(9, 0, 0);
        let a = random_state(2, 2, &mut rng).unwrap();
        let b = random_state(2, 2, &mut rng).unwrap();
        for alpha in [0.6, 1.5] {
            let pin = measured_divergence_lb(&a, &b, alpha, MeasurementStrategy::PinchingBasis, &mut rng).unwrap();
            let grid = measured_divergence_lb(&a, &b, alpha, MeasurementStrategy::ProjectiveGrid { directions: 400 }, &mut rng).unwrap();
            assert!(grid.value.value >= pin.value.value - 1e-3);
            let max = maximal_divergence(&a, &b, alpha).unwrap().value.value;
            assert!(grid.value.value <= max + 1e-8);
        }
        assert!(measured_divergence_lb(&Psd::identity(3), &Psd::identity(3), 0.5, MeasurementStrategy::ProjectiveGrid { directions: 4 }, &mut rng).is_err());
    }

    #[test]
    fn tensor_additivity() {
        let mut rng = derive_rng(11, 0, 0);
        let (a1, b1) = (random_state(2, 2, &mut rng).unwrap(), random_state(2, 2, &mut rng).unwrap());
        let (a2, b2) = (random_state(2, 2, &mut rng).unwrap(), random_state(2, 2, &mut rng).unwrap());
        let a = a1.kron(&a2).unwrap();
        let b = b1.kron(&b2).unwrap();
        for kind in MeanKind::GEOMETRIC_TYPE {
            let spec = MeanSpec::new(kind, 1.4, 0.8).unwrap();
            let joint = divergence_from_mean(&spec, &a, &b).unwrap().value;
            let sum = divergence_from_mean(&spec, &a1, &b1).unwrap().value + divergence_from_mean(&spec, &a2, &b2).unwrap().value;
            assert_relative_eq!(joint, sum, epsilon = 1e-8);
        }
    }

    #[test]
    fn variational_formula() {
        let mut rng = derive_rng(5, 0, 0);
        let a = sample_psd(3, Some(20.0), &mut rng).unwrap();
        let b = sample_psd(3, Some(20.0), &mut rng).unwrap();
        for alpha in [0.4, 1.6] {
            let r = le_variational_check(&a, &b, alpha, 100, 1e-2, &mut rng).unwrap();
            assert!(r.identity_error < 1e-8, "{r:?}");
            assert!(r.max_improvement <= 1e-12, "{r:?}");
        }
    }

    #[test]
    fn sandwich_for_concave_renyi() {
        let mut rng = derive_rng(6, 0, 0);
        let spec = MeanSpec::new(MeanKind::Renyi, 0.5, 2.0).unwrap();
        for _ in 0..20 {
            let a = sample_psd(3, Some(50.0), &mut rng).unwrap();
            let b = sample_psd(3, Some(50.0), &mut rng).unwrap();
            let r = sandwich_check(&spec, &a, &b, 1e-10).unwrap();
            assert!(r.lower_holds && r.upper_holds, "{r:?}");
        }
        let d = Psd::diag(&[0.3, 0.7]).unwrap();
        let e = Psd::diag(&[0.6, 0.4]).unwrap();
        let r = sandwich_check(&spec, &d, &e, 1e-12).unwrap();
        assert_relative_eq!(r.trace_geometric, r.trace_sandwiched, epsilon = 1e-14);
        assert_relative_eq!(r.trace_mean, r.trace_sandwiched, epsilon = 1e-14);
    }

    #[test]
    fn regularized_sequence_on_qubits() {
        let mut rng = derive_rng(8, 0, 0);
        let a = random_state(2, 2, &mut rng).unwrap();
        let b = random_state(2, 2, &mut rng).unwrap();
        let seq: Vec<f64> = (1..=4).map(|m| regularized_measured_estimate(&a, &b, 1.0, m).unwrap()).collect();
        let target = sandwiched(&a, &b, 1.0).unwrap().value;
        assert!(seq.iter().all(|&v| v <= target + 1e-8), "{seq:?} vs {target}");
        assert!(seq[3] >= seq[0] - 1e-12);
        assert!(regularized_measured_estimate(&a, &b, 1.0, 7).is_err());
    }
}
