//! The weighted quasi-means `M_{α,p}(A,B)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{c, same_dim, support_meet, CMat, Hermitian, Psd};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MeanKind {
    Renyi,
    Geometric,
    SpectralGeometric,
    SpectralGeometricTilde,
    LogEuclidean,
    Arithmetic,
    Harmonic,
}

impl MeanKind {
    pub const ALL: [MeanKind; 7] = [
        MeanKind::Renyi,
        MeanKind::Geometric,
        MeanKind::SpectralGeometric,
        MeanKind::SpectralGeometricTilde,
        MeanKind::LogEuclidean,
        MeanKind::Arithmetic,
        MeanKind::Harmonic,
    ];

    /// The five kinds of geometric type.
    pub const GEOMETRIC_TYPE: [MeanKind; 5] = [
        MeanKind::Renyi,
        MeanKind::Geometric,
        MeanKind::SpectralGeometric,
        MeanKind::SpectralGeometricTilde,
        MeanKind::LogEuclidean,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            MeanKind::Renyi => "R",
            MeanKind::Geometric => "G",
            MeanKind::SpectralGeometric => "SG",
            MeanKind::SpectralGeometricTilde => "SGt",
            MeanKind::LogEuclidean => "LE",
            MeanKind::Arithmetic => "Arith",
            MeanKind::Harmonic => "Harm",
        }
    }

    pub fn is_geometric_type(self) -> bool {
        !matches!(self, MeanKind::Arithmetic | MeanKind::Harmonic)
    }

    /// Whether `p` enters the definition.
    pub fn uses_p(self) -> bool {
        self != MeanKind::LogEuclidean
    }
}

impl fmt::Display for MeanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for MeanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let k = match s.to_ascii_lowercase().as_str() {
            "r" | "renyi" => MeanKind::Renyi,
            "g" | "geometric" => MeanKind::Geometric,
            "sg" | "spectral" | "spectral-geometric" => MeanKind::SpectralGeometric,
            "sgt" | "sg~" | "spectral-tilde" | "spectral-geometric-tilde" => MeanKind::SpectralGeometricTilde,
            "le" | "log-euclidean" => MeanKind::LogEuclidean,
            "a" | "arith" | "arithmetic" => MeanKind::Arithmetic,
            "h" | "harm" | "harmonic" => MeanKind::Harmonic,
            other => return Err(Error::Parameter(format!("unknown mean kind '{other}'"))),
        };
        Ok(k)
    }
}

/// One quasi-mean `M_{α,p}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSpec {
    pub kind: MeanKind,
    pub alpha: f64,
    pub p: f64,
}

impl MeanSpec {
    pub fn new(kind: MeanKind, alpha: f64, p: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) || alpha == 1.0 {
            return Err(Error::Parameter(format!("alpha must lie in (0,1) or (1,inf), got {alpha}")));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::Parameter(format!("p must be positive, got {p}")));
        }
        if !kind.is_geometric_type() && alpha > 1.0 {
            return Err(Error::Parameter(format!("the {kind} mean is defined for 0 < alpha < 1 only")));
        }
        Ok(MeanSpec { kind, alpha, p })
    }

    pub fn le(alpha: f64) -> Result<Self> {
        Self::new(MeanKind::LogEuclidean, alpha, 1.0)
    }

    /// Whether this mean needs `s(A) >= s(B)`.
    pub fn requires_dominance(&self) -> bool {
        self.alpha > 1.0 || matches!(self.kind, MeanKind::SpectralGeometric | MeanKind::SpectralGeometricTilde)
    }

    pub fn label(&self) -> String {
        if self.kind.uses_p() {
            format!("{}_{{{},{}}}", self.kind, self.alpha, self.p)
        } else {
            format!("{}_{{{}}}", self.kind, self.alpha)
        }
    }
}

#[derive(Clone, Debug)]
pub struct MeanResult {
    pub value: Psd,
    pub domain_ok: bool,
    pub regularization_used: Option<Vec<f64>>,
    /// `log det M - (1-α) log det A - α log det B` when both inputs are full rank.
    pub log_det_defect: Option<f64>,
}

/// Support dominance `s(A) >= s(B)`, i.e. `(I - s(A)) s(B) = 0`.
pub fn dominates(a: &Psd, b: &Psd) -> bool {
    let pa = a.support().projection;
    let pb = b.support().projection;
    let n = a.dim();
    let rest = (CMat::identity(n, n) - pa.matrix()) * pb.matrix();
    crate::spectral::max_abs(&rest) <= 1e-8
}

/// `A #_α B = A^{1/2}(A^{-1/2} B A^{-1/2})^α A^{1/2}` with generalized
/// inverses; for `0 < α < 1` and non-nested supports the ε-limit is used.
pub fn weighted_geometric(a: &Psd, b: &Psd, alpha: f64) -> Result<Psd> {
    same_dim(a.dim(), b.dim())?;
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    if a.is_full_rank() && b.is_full_rank() {
        // A #_α B = B #_{1−α} A; congruence by the better-conditioned factor.
        return if condition(b) < condition(a) {
            geometric_direct(b, a, 1.0 - alpha, true)
        } else {
            geometric_direct(a, b, alpha, true)
        };
    }
    if dominates(a, b) {
        return geometric_direct(a, b, alpha, false);
    }
    if alpha > 1.0 {
        return Err(Error::Domain("A #_alpha B with alpha > 1 requires s(A) >= s(B)".into()));
    }
    if dominates(b, a) {
        return geometric_direct(b, a, 1.0 - alpha, false);
    }
    let mut last = None;
    for eps in default_eps_sequence() {
        last = Some(geometric_direct(&a.shifted(eps), &b.shifted(eps), alpha, true)?);
    }
    Ok(last.expect("nonempty eps sequence"))
}

fn condition(m: &Psd) -> f64 {
    let e = m.eigenvalues();
    e[0] / e[e.len() - 1]
}

/// Power of an intermediate product. Products of invertible factors are
/// invertible, so no support cut is applied to them.
fn ipow(x: &Psd, r: f64, invertible: bool) -> Psd {
    if invertible {
        x.pow_invertible(r)
    } else {
        x.pow(r)
    }
}

fn geometric_direct(a: &Psd, b: &Psd, alpha: f64, full: bool) -> Result<Psd> {
    let ah = a.pow(0.5);
    let aih = a.pow(-0.5);
    let inner = Psd::from_product(aih.matrix() * b.matrix() * aih.matrix())?;
    let ia = ipow(&inner, alpha, full);
    Psd::from_product(ah.matrix() * ia.matrix() * ah.matrix())
}

/// `A^{-1} #_α B = A^{-1/2}(A^{1/2} B A^{1/2})^α A^{-1/2}` for `s(A) >= s(B)`.
fn inverse_geometric(a: &Psd, b: &Psd, alpha: f64, full: bool) -> Result<Psd> {
    let ah = a.pow(0.5);
    let aih = a.pow(-0.5);
    let inner = Psd::from_product(ah.matrix() * b.matrix() * ah.matrix())?;
    let ia = ipow(&inner, alpha, full);
    Psd::from_product(aih.matrix() * ia.matrix() * aih.matrix())
}

fn renyi(a: &Psd, b: &Psd, alpha: f64, p: f64, full: bool) -> Result<Psd> {
    let ap = a.pow((1.0 - alpha) * p / 2.0);
    let bp = b.pow(alpha * p);
    let x = Psd::from_product(ap.matrix() * bp.matrix() * ap.matrix())?;
    Ok(ipow(&x, 1.0 / p, full))
}

fn spectral_geometric(a: &Psd, b: &Psd, alpha: f64, p: f64, full: bool) -> Result<Psd> {
    let (a, b) = (a.pow(p), b.pow(p));
    let x = ipow(&inverse_geometric(&a, &b, 0.5, full)?, alpha, full);
    let f = Psd::from_product(x.matrix() * a.matrix() * x.matrix())?;
    Ok(ipow(&f, 1.0 / p, full))
}

fn spectral_geometric_tilde(a: &Psd, b: &Psd, alpha: f64, p: f64, full: bool) -> Result<Psd> {
    let (a, b) = (a.pow(p), b.pow(p));
    let x = ipow(&inverse_geometric(&a, &b, alpha, full)?, 0.5, full);
    let mid = a.pow(2.0 * (1.0 - alpha));
    let f = Psd::from_product(x.matrix() * mid.matrix() * x.matrix())?;
    Ok(ipow(&f, 1.0 / p, full))
}

fn log_euclidean(a: &Psd, b: &Psd, alpha: f64) -> Result<Psd> {
    let p0 = support_meet(a, b)?;
    let n = a.dim();
    if p0.trace() < 0.5 {
        return Ok(Psd::from_spectral(vec![0.0; n], CMat::identity(n, n)));
    }
    let la = a.log_support()?;
    let lb = b.log_support()?;
    let pm = p0.matrix();
    let z = (pm * la.matrix() * pm) * c(1.0 - alpha) + (pm * lb.matrix() * pm) * c(alpha);
    let e = Hermitian::symmetrized(z).exp()?;
    Psd::from_product(pm * e.matrix() * pm)
}

fn arithmetic(a: &Psd, b: &Psd, alpha: f64, p: f64, full: bool) -> Result<Psd> {
    let s = a.pow(p).scale(1.0 - alpha).add(&b.pow(p).scale(alpha))?;
    Ok(ipow(&s, 1.0 / p, full))
}

fn harmonic(a: &Psd, b: &Psd, alpha: f64, p: f64) -> Result<Psd> {
    if !(a.is_full_rank() && b.is_full_rank()) {
        let spec = MeanSpec::new(MeanKind::Harmonic, alpha, p)?;
        return Ok(epsilon_limit(&spec, a, b, &default_eps_sequence())?.result.value);
    }
    let s = a.pow(-p).scale(1.0 - alpha).add(&b.pow(-p).scale(alpha))?;
    Ok(s.pow_invertible(-1.0 / p))
}

fn check_domain(spec: &MeanSpec, a: &Psd, b: &Psd) -> Result<()> {
    if spec.requires_dominance() && !dominates(a, b) {
        let why = if spec.alpha > 1.0 { "alpha > 1" } else { "the spectral geometric kinds" };
        return Err(Error::Domain(format!("{} requires s(A) >= s(B) for {why}", spec.label())));
    }
    Ok(())
}

/// Evaluates `M_{α,p}(A,B)`.
pub fn compute_mean(spec: &MeanSpec, a: &Psd, b: &Psd) -> Result<MeanResult> {
    same_dim(a.dim(), b.dim())?;
    let spec = MeanSpec::new(spec.kind, spec.alpha, spec.p)?;
    check_domain(&spec, a, b)?;
    let (alpha, p) = (spec.alpha, spec.p);
    let full = a.is_full_rank() && b.is_full_rank();
    let value = match spec.kind {
        MeanKind::Renyi => renyi(a, b, alpha, p, full)?,
        MeanKind::Geometric => ipow(&weighted_geometric(&a.pow(p), &b.pow(p), alpha)?, 1.0 / p, full),
        MeanKind::SpectralGeometric => spectral_geometric(a, b, alpha, p, full)?,
        MeanKind::SpectralGeometricTilde => spectral_geometric_tilde(a, b, alpha, p, full)?,
        MeanKind::LogEuclidean => log_euclidean(a, b, alpha)?,
        MeanKind::Arithmetic => arithmetic(a, b, alpha, p, full)?,
        MeanKind::Harmonic => harmonic(a, b, alpha, p)?,
    };
    let log_det_defect = if full {
        Some(value.log_det() - (1.0 - alpha) * a.log_det() - alpha * b.log_det())
    } else {
        None
    };
    Ok(MeanResult { value, domain_ok: true, regularization_used: None, log_det_defect })
}

/// `Tr M_{α,p}(A,B)`.
pub fn trace_mean(spec: &MeanSpec, a: &Psd, b: &Psd) -> Result<f64> {
    Ok(compute_mean(spec, a, b)?.value.trace())
}

pub fn default_eps_sequence() -> Vec<f64> {
    (2..=8).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Clone, Debug)]
pub struct EpsilonLimit {
    pub result: MeanResult,
    pub eps: Vec<f64>,
    /// `||M_{eps_{k+1}} - M_{eps_k}||` (spectral norm).
    pub successive_differences: Vec<f64>,
    pub converged: bool,
}

/// `M_{α,p}(A + εI, B + εI)` along a decreasing ε sequence.
pub fn epsilon_limit(spec: &MeanSpec, a: &Psd, b: &Psd, eps_sequence: &[f64]) -> Result<EpsilonLimit> {
    same_dim(a.dim(), b.dim())?;
    if eps_sequence.is_empty() || eps_sequence.windows(2).any(|w| w[1] >= w[0]) || eps_sequence.iter().any(|&e| e <= 0.0) {
        return Err(Error::Parameter("eps sequence must be positive and strictly decreasing".into()));
    }
    check_domain(spec, a, b)?;
    let mut values: Vec<Psd> = Vec::with_capacity(eps_sequence.len());
    for &eps in eps_sequence {
        let r = compute_mean(spec, &a.shifted(eps), &b.shifted(eps))?;
        values.push(r.value);
    }
    let mut diffs = Vec::new();
    for w in values.windows(2) {
        diffs.push(w[1].hermitian().sub(w[0].hermitian())?.op_norm()?);
    }
    let scale = values.last().map(|v| v.lambda_max()).unwrap_or(1.0).max(1e-300);
    let converged = diffs.windows(2).all(|w| w[1] <= w[0] * 1.01 + 1e-12 * scale);
    let value = values.pop().expect("nonempty");
    let log_det_defect = if a.is_full_rank() && b.is_full_rank() {
        Some(value.log_det() - (1.0 - spec.alpha) * a.log_det() - spec.alpha * b.log_det())
    } else {
        None
    };
    Ok(EpsilonLimit {
        result: MeanResult { value, domain_ok: true, regularization_used: Some(eps_sequence.to_vec()), log_det_defect },
        eps: eps_sequence.to_vec(),
        successive_differences: diffs,
        converged,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LieTrotterReport {
    pub ps: Vec<f64>,
    pub distances: Vec<f64>,
    pub final_distance: f64,
    /// Distances decrease over the last five halvings.
    pub decreasing_tail: bool,
}

pub fn default_p_sequence() -> Vec<f64> {
    (0..=10).map(|k| 0.5f64.powi(k)).collect()
}

/// Distances `||M_{α,p}(A,B) - LE_α(A,B)||` along a decreasing `p` sequence.
pub fn lie_trotter_probe(kind: MeanKind, alpha: f64, a: &Psd, b: &Psd, p_sequence: &[f64]) -> Result<LieTrotterReport> {
    if !matches!(
        kind,
        MeanKind::Renyi | MeanKind::Geometric | MeanKind::SpectralGeometric | MeanKind::SpectralGeometricTilde
    ) {
        return Err(Error::Parameter(format!("{kind} is not a quasi-geometric family")));
    }
    let le = compute_mean(&MeanSpec::le(alpha)?, a, b)?.value;
    let mut distances = Vec::with_capacity(p_sequence.len());
    for &p in p_sequence {
        let m = compute_mean(&MeanSpec::new(kind, alpha, p)?, a, b)?.value;
        distances.push(m.hermitian().sub(le.hermitian())?.op_norm()?);
    }
    let final_distance = *distances.last().unwrap_or(&f64::NAN);
    let tail = &distances[distances.len().saturating_sub(6)..];
    let floor = 1e-12 * le.lambda_max().max(1.0);
    let decreasing_tail = tail.windows(2).all(|w| w[1] <= w[0] || w[1] <= floor);
    Ok(LieTrotterReport { ps: p_sequence.to_vec(), distances, final_distance, decreasing_tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{derive_rng, sample_pair, PairShape};
    use crate::spectral::max_abs;
    use approx::assert_relative_eq;

    fn spec(kind: MeanKind, alpha: f64, p: f64) -> MeanSpec {
        MeanSpec::new(kind, alpha, p).unwrap()
    }

    fn close(a: &Psd, b: &Psd, tol: f64) -> bool {
        max_abs(&(a.matrix() - b.matrix())) <= tol * (1.0 + b.lambda_max())
    }

    #[test]
    fn commuting_geometric() {
        let a = Psd::diag(&[1.0, 4.0]).unwrap();
        let b = Psd::diag(&[9.0, 1.0]).unwrap();
        let m = compute_mean(&spec(MeanKind::Geometric, 0.5, 1.0), &a, &b).unwrap();
        assert!(close(&m.value, &Psd::diag(&[3.0, 2.0]).unwrap(), 1e-14));
    }

    #[test]
    fn commuting_log_euclidean() {
        let a = Psd::diag(&[8.0, 1.0]).unwrap();
        let b = Psd::diag(&[1.0, 27.0]).unwrap();
        let m = compute_mean(&spec(MeanKind::LogEuclidean, 1.0 / 3.0, 1.0), &a, &b).unwrap();
        assert!(close(&m.value, &Psd::diag(&[4.0, 3.0]).unwrap(), 1e-13));
    }

    #[test]
    fn equal_arguments_give_the_argument() {
        let mut rng = derive_rng(11, 0, 0);
        let (a, _) = sample_pair(3, PairShape::FullRank, 5.0, &mut rng).unwrap();
        for kind in MeanKind::ALL {
            for alpha in [0.3, 1.7] {
                if !kind.is_geometric_type() && alpha > 1.0 {
                    continue;
                }
                let m = compute_mean(&spec(kind, alpha, 1.5), &a, &a).unwrap();
                assert!(close(&m.value, &a, 1e-11), "{kind} {alpha}");
            }
        }
    }

    #[test]
    fn identity_base() {
        let mut rng = derive_rng(12, 0, 0);
        let (b, _) = sample_pair(3, PairShape::FullRank, 5.0, &mut rng).unwrap();
        let g = weighted_geometric(&Psd::identity(3), &b, 0.5).unwrap();
        assert!(close(&g, &b.sqrt(), 1e-13));
        let g = weighted_geometric(&Psd::diag(&[4.0, 9.0]).unwrap(), &Psd::identity(2), 0.5).unwrap();
        assert!(close(&g, &Psd::diag(&[2.0, 3.0]).unwrap(), 1e-14));
    }

    #[test]
    fn alpha_two_eigenvalues() {
        let mut rng = derive_rng(13, 0, 0);
        let (a, b) = sample_pair(4, PairShape::FullRank, 5.0, &mut rng).unwrap();
        let g = weighted_geometric(&a, &b, 2.0).unwrap();
        let bab = Psd::from_product(b.matrix() * a.inverse().matrix() * b.matrix()).unwrap();
        for (x, y) in g.eigenvalues().iter().zip(bab.eigenvalues()) {
            assert_relative_eq!(x, y, max_relative = 1e-11);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(MeanSpec::new(MeanKind::Renyi, 1.0, 1.0).is_err());
        assert!(MeanSpec::new(MeanKind::Renyi, 0.5, 0.0).is_err());
        assert!(MeanSpec::new(MeanKind::Arithmetic, 1.5, 1.0).is_err());
        let a = Psd::diag(&[1.0, 0.0]).unwrap();
        let b = Psd::identity(2);
        let e = compute_mean(&spec(MeanKind::Renyi, 1.5, 1.0), &a, &b);
        assert!(matches!(e, Err(Error::Domain(_))));
        let e = compute_mean(&spec(MeanKind::SpectralGeometric, 0.5, 1.0), &a, &b);
        assert!(matches!(e, Err(Error::Domain(_))));
        assert!(compute_mean(&spec(MeanKind::Renyi, 0.5, 1.0), &a, &b).is_ok());
    }

    #[test]
    fn epsilon_limit_commuting_singular() {
        let a = Psd::identity(2);
        let b = Psd::diag(&[1.0, 0.0]).unwrap();
        let r = epsilon_limit(&spec(MeanKind::Renyi, 0.5, 1.0), &a, &b, &default_eps_sequence()).unwrap();
        // the kernel entry decays like sqrt(eps)
        assert!(r.converged);
        assert!(close(&r.result.value, &b, 2e-4));
    }

    #[test]
    fn epsilon_limit_full_rank_is_continuous() {
        let mut rng = derive_rng(14, 0, 0);
        let (a, b) = sample_pair(3, PairShape::FullRank, 5.0, &mut rng).unwrap();
        for kind in MeanKind::GEOMETRIC_TYPE {
            let s = spec(kind, 0.6, 1.3);
            let direct = compute_mean(&s, &a, &b).unwrap().value;
            let lim = epsilon_limit(&s, &a, &b, &default_eps_sequence()).unwrap();
            assert!(lim.converged, "{kind}");
            assert!(close(&lim.result.value, &direct, 1e-6), "{kind}");
        }
    }

    #[test]
    fn epsilon_limit_matches_generalized_inverse() {
        let mut rng = derive_rng(15, 0, 0);
        let (a, b) = sample_pair(3, PairShape::Dominated { rank_a: 3, rank_b: 2 }, 4.0, &mut rng).unwrap();
        let s = spec(MeanKind::SpectralGeometricTilde, 1.5, 1.0);
        let direct = compute_mean(&s, &a, &b).unwrap().value;
        let lim = epsilon_limit(&s, &a, &b, &default_eps_sequence()).unwrap();
        assert!(close(&lim.result.value, &direct, 1e-6));
    }

    #[test]
    fn kubo_ando_swap_for_reverse_supports() {
        let mut rng = derive_rng(16, 0, 0);
        let (a, b) = sample_pair(3, PairShape::ReverseDominated { rank_a: 2, rank_b: 3 }, 4.0, &mut rng).unwrap();
        let g = weighted_geometric(&a, &b, 0.3).unwrap();
        let mut last = None;
        for eps in [1e-6, 1e-8, 1e-10] {
            last = Some(geometric_direct(&a.shifted(eps), &b.shifted(eps), 0.3, true).unwrap());
        }
        assert!(close(&g, &last.unwrap(), 1e-4));
    }

    #[test]
    fn lie_trotter_commuting_is_exact() {
        let a = Psd::diag(&[2.0, 0.5, 1.0]).unwrap();
        let b = Psd::diag(&[0.3, 1.0, 4.0]).unwrap();
        for kind in [MeanKind::Renyi, MeanKind::Geometric, MeanKind::SpectralGeometric, MeanKind::SpectralGeometricTilde] {
            let r = lie_trotter_probe(kind, 0.4, &a, &b, &default_p_sequence()).unwrap();
            assert!(r.distances.iter().all(|&d| d < 1e-12), "{kind}: {:?}", r.distances);
        }
    }

    #[test]
    fn lie_trotter_dominated_singular() {
        let mut rng = derive_rng(17, 0, 0);
        let (a, b) = sample_pair(2, PairShape::Dominated { rank_a: 2, rank_b: 1 }, 3.0, &mut rng).unwrap();
        let r = lie_trotter_probe(MeanKind::SpectralGeometricTilde, 2.0, &a, &b, &default_p_sequence()).unwrap();
        assert!(r.final_distance < 1e-2, "{:?}", r.distances);
        assert!(r.decreasing_tail);
    }
}
