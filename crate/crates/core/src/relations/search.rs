use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::majorization::log_majorize;
use crate::means::{compute_mean, MeanKind, MeanSpec};
use crate::sample::{derive_rng, label_stream, random_unitary, sample_pair, PairShape};
use crate::spectral::{CMat, MatrixJson, Psd, C64};

use super::VIOL_BAND;

const REFINE_STARTS: usize = 24;
const NOISE_MARGIN: f64 = 10.0;
const MAX_MISMATCH: f64 = 1e-5;

/// How an `(A0, B_θ)` pair is turned into the inputs of the means.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum Chart {
    /// `(A, B) = (A0, B_θ)`.
    #[default]
    Direct,
    /// `(A^p, B^p) = (A0, B_θ)`.
    Rooted { p: f64 },
    /// `(A^p, B^p) = (B_θ, A0 B_θ A0)`, so that `A^{-p} # B^p = A0`.
    SpectralProduct { p: f64 },
    /// `(A^p, B^p) = (A0, A0^{-1} #_{1/α} B_θ)`, so that `A^{-p} #_α B^p = B_θ`.
    WeightedInverse { alpha: f64, p: f64 },
    /// `(A^p, B^p) = (A0, A0^{1/2} B_θ A0^{1/2})`, so that `A^{-p/2} B^p A^{-p/2} = B_θ`.
    Congruence { p: f64 },
}

/// `A0 = diag(1, x)` and `B_θ = Rot(θ) diag(1, y) Rot(-θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbThetaPoint {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    #[serde(default)]
    pub chart: Chart,
}

impl AbThetaPoint {
    pub fn new(x: f64, y: f64, theta: f64) -> Result<Self> {
        if !(x > 0.0 && x.is_finite()) || x == 1.0 {
            return Err(Error::Parameter(format!("x must lie in (0,1) or (1,inf), got {x}")));
        }
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::Parameter(format!("y must be positive, got {y}")));
        }
        Ok(AbThetaPoint { x, y, theta, chart: Chart::Direct })
    }

    pub fn with_chart(self, chart: Chart) -> Self {
        AbThetaPoint { chart, ..self }
    }

    /// `A0` and `B_θ`, built from their exact eigen-decompositions.
    pub fn base_matrices(&self) -> (Psd, Psd) {
        let c0 = |v: f64| C64::new(v, 0.0);
        let (x, y) = (self.x, self.y);
        let a = if x <= 1.0 {
            Psd::from_spectral(vec![1.0, x], CMat::identity(2, 2))
        } else {
            Psd::from_spectral(vec![x, 1.0], CMat::from_row_slice(2, 2, &[c0(0.0), c0(1.0), c0(1.0), c0(0.0)]))
        };
        let (s, c) = self.theta.sin_cos();
        // columns Rot(θ) e1 = (c, s) and Rot(θ) e2 = (-s, c)
        let (v1, v2) = ([c0(c), c0(s)], [c0(-s), c0(c)]);
        let (vals, cols) = if y <= 1.0 { (vec![1.0, y], [v1, v2]) } else { (vec![y, 1.0], [v2, v1]) };
        let u = CMat::from_fn(2, 2, |i, j| cols[j][i]);
        (a, Psd::from_spectral(vals, u))
    }

    /// The pair `(A, B)` fed to the means.
    pub fn matrices(&self) -> Result<(Psd, Psd)> {
        let (a0, b) = self.base_matrices();
        let root = |m: Psd, p: f64| if p == 1.0 { m } else { m.pow(1.0 / p) };
        match self.chart {
            Chart::Direct => Ok((a0, b)),
            Chart::Rooted { p } => Ok((root(a0, p), root(b, p))),
            Chart::SpectralProduct { p } => {
                let prod = b.congruence(a0.matrix())?;
                Ok((root(b, p), root(prod, p)))
            }
            Chart::Congruence { p } => {
                let bb = b.congruence(a0.pow(0.5).matrix())?;
                Ok((root(a0, p), root(bb, p)))
            }
            Chart::WeightedInverse { alpha, p } => {
                if !(alpha > 0.0 && alpha.is_finite() && p > 0.0) {
                    return Err(Error::Parameter(format!("invalid chart parameters alpha={alpha}, p={p}")));
                }
                let inner = b.congruence(a0.pow(0.5).matrix())?.pow(1.0 / alpha);
                let bb = inner.congruence(a0.pow(-0.5).matrix())?;
                Ok((root(a0, p), root(bb, p)))
            }
        }
    }
}

/// Structured grid over the `A0`/`B_θ` family.
#[derive(Clone, Debug, Serialize)]
pub struct GridSpec {
    pub xs: Vec<f64>,
    /// `y` values tried for every `x`, besides `y = x` and `y = 1/x`.
    pub ys: Vec<f64>,
    pub thetas: Vec<f64>,
}

fn mirrored(lo_exp: f64, hi: f64, n: usize) -> Vec<f64> {
    let below: Vec<f64> = (0..n).map(|i| 10f64.powf(lo_exp + (i as f64) * (hi.log10() - lo_exp) / (n - 1) as f64)).collect();
    below.iter().copied().chain(below.iter().map(|x| 1.0 / x)).collect()
}

impl Default for GridSpec {
    /// Wide enough in `x` and `y` to reach the strongly conditioned pairs
    /// that witness failures close to `α = 1/2`.
    fn default() -> Self {
        GridSpec {
            xs: mirrored(-12.0, 0.99, 44),
            ys: vec![1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.3, 0.6, 1.5, 3.0, 10.0, 100.0, 1e4, 1e6],
            thetas: vec![1.0, 0.5, 0.2, 0.05, 1e-2, 1e-3],
        }
    }
}

impl GridSpec {
    /// A smaller grid for per-cell region scans.
    pub fn coarse() -> Self {
        GridSpec {
            xs: mirrored(-6.0, 0.95, 14),
            ys: vec![1e-6, 1e-3, 0.1, 0.5, 3.0, 100.0, 1e4],
            thetas: vec![0.5, 0.1, 1e-2, 1e-3],
        }
    }

    pub fn points(&self) -> Vec<AbThetaPoint> {
        let mut out = Vec::new();
        for &x in &self.xs {
            let mut ys = vec![x, 1.0 / x];
            ys.extend(self.ys.iter().copied());
            for y in ys {
                if y == 1.0 {
                    continue;
                }
                for &theta in &self.thetas {
                    out.push(AbThetaPoint { x, y, theta, chart: Chart::Direct });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum SearchStrategy {
    Structured(GridSpec),
    Random { trials: usize, n_max: usize, seed: u64 },
    Combined { grid: GridSpec, trials: usize, n_max: usize, seed: u64 },
}

impl Default for SearchStrategy {
    fn default() -> Self {
        SearchStrategy::Combined { grid: GridSpec::default(), trials: 200, n_max: 4, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "type")]
pub enum Witness {
    AbTheta { point: AbThetaPoint },
    Pair { seed: u64, index: u64, a: MatrixJson, b: MatrixJson },
}

/// A pair on which `lhs ≺_log rhs` fails.
#[derive(Clone, Debug, Serialize)]
pub struct FoundWitness {
    pub lhs: MeanSpec,
    pub rhs: MeanSpec,
    pub witness: Witness,
    /// Relative excess of the violated partial product, e.g.
    /// `λ₁(lhs)/λ₁(rhs) - 1` for 2x2 pairs.
    pub violation: f64,
}

impl FoundWitness {
    pub fn matrices(&self) -> Result<(Psd, Psd)> {
        match &self.witness {
            Witness::AbTheta { point } => point.matrices(),
            Witness::Pair { a, b, .. } => Ok((a.to_psd()?, b.to_psd()?)),
        }
    }
}

/// Relative λ₁ excess on a 2x2 pair, provided the determinant identity
/// holds (so that log-majorization reduces to the λ₁ comparison).
///
/// On strongly conditioned pairs the two determinants only agree to the
/// working precision of the means; a violation is then kept when the
/// log-determinant mismatch stays below `MAX_MISMATCH` and the log ratio
/// dominates it by `NOISE_MARGIN`. Larger mismatches signal that λ₁ itself
/// is unreliable.
fn lambda1_excess(lhs: &MeanSpec, rhs: &MeanSpec, a: &Psd, b: &Psd) -> Option<f64> {
    let l = compute_mean(lhs, a, b).ok()?.value;
    let r = compute_mean(rhs, a, b).ok()?.value;
    let (dl, dr) = (l.log_det(), r.log_det());
    if !(dl.is_finite() && dr.is_finite()) {
        return None;
    }
    let mismatch = (dl - dr).abs();
    let log_ratio = (l.lambda_max() / r.lambda_max()).ln();
    let exact = mismatch <= 1e-8 * (1.0 + dl.abs().max(dr.abs()));
    (exact || (mismatch <= MAX_MISMATCH && log_ratio > NOISE_MARGIN * mismatch)).then_some(log_ratio.exp_m1())
}

/// Re-evaluates a 2x2 candidate under a fixed unitary conjugation; genuine
/// violations are invariant, rounding artefacts are not.
fn confirms(lhs: &MeanSpec, rhs: &MeanSpec, a: &Psd, b: &Psd) -> bool {
    let u = random_unitary(a.dim(), &mut derive_rng(0x5eed, 0, a.dim() as u64));
    let (Ok(ua), Ok(ub)) = (a.congruence(&u), b.congruence(&u)) else {
        return false;
    };
    matches!(lambda1_excess(lhs, rhs, &ua, &ub), Some(v) if v >= VIOL_BAND)
}

fn excess_at(lhs: &MeanSpec, rhs: &MeanSpec, pt: &AbThetaPoint) -> Option<f64> {
    let (a, b) = pt.matrices().ok()?;
    lambda1_excess(lhs, rhs, &a, &b)
}

fn point_from(v: [f64; 3], chart: Chart) -> Option<AbThetaPoint> {
    Some(AbThetaPoint::new(v[0].exp(), v[1].exp(), v[2]).ok()?.with_chart(chart))
}

/// Pattern search on `(ln x, ln y, θ)` maximizing the λ₁ excess.
fn refine(lhs: &MeanSpec, rhs: &MeanSpec, start: AbThetaPoint, start_val: f64) -> (AbThetaPoint, f64) {
    let mut v = [start.x.ln(), start.y.ln(), start.theta];
    let (mut best, mut best_pt) = (start_val, start);
    let mut step = 0.5;
    let mut evals = 0;
    while step > 1e-4 && evals < 400 {
        let mut moved = false;
        for i in 0..3 {
            for dir in [1.0, -1.0] {
                let mut w = v;
                w[i] += dir * step * if i == 2 { 0.2 } else { 1.0 };
                if w[0].abs() > 12.0 || w[1].abs() > 12.0 || w[2].abs() > 1.6 {
                    continue;
                }
                evals += 1;
                if let Some(pt) = point_from(w, start.chart) {
                    if let Some(e) = excess_at(lhs, rhs, &pt) {
                        if e > best {
                            (best, best_pt, v, moved) = (e, pt, w, true);
                        }
                    }
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (best_pt, best)
}

fn structured(lhs: &MeanSpec, rhs: &MeanSpec, grid: &GridSpec) -> Option<FoundWitness> {
    let exponent_of = |k: MeanKind| [lhs, rhs].into_iter().find(|s| s.kind == k).map_or(1.0, |s| s.p);
    let smallest = [lhs, rhs].iter().filter(|s| s.kind.uses_p()).map(|s| s.p).fold(1.0, f64::min);
    let charts = [
        Chart::Direct,
        Chart::Rooted { p: smallest },
        Chart::SpectralProduct { p: exponent_of(MeanKind::SpectralGeometric) },
        Chart::WeightedInverse { alpha: lhs.alpha, p: exponent_of(MeanKind::SpectralGeometricTilde) },
        Chart::Congruence { p: exponent_of(MeanKind::Geometric) },
    ];
    let pts: Vec<AbThetaPoint> =
        charts.iter().flat_map(|&c| grid.points().into_iter().map(move |p| p.with_chart(c))).collect();
    let mut vals: Vec<(usize, f64)> =
        pts.par_iter().enumerate().filter_map(|(i, pt)| Some((i, excess_at(lhs, rhs, pt)?))).collect();
    vals.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    let mut hits: Vec<(AbThetaPoint, f64)> =
        vals.iter().take_while(|(_, v)| *v >= VIOL_BAND).map(|&(i, v)| (pts[i], v)).collect();
    if hits.is_empty() {
        // nothing on the grid: climb from the most promising points
        hits = vals
            .iter()
            .take(REFINE_STARTS)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&&(i, v)| refine(lhs, rhs, pts[i], v))
            .filter(|(_, v)| *v >= VIOL_BAND)
            .collect();
        hits.sort_by(|x, y| y.1.total_cmp(&x.1));
    }
    hits.into_iter().find_map(|(pt, v)| {
        let (a, b) = pt.matrices().ok()?;
        confirms(lhs, rhs, &a, &b).then(|| FoundWitness {
            lhs: *lhs,
            rhs: *rhs,
            witness: Witness::AbTheta { point: pt },
            violation: v,
        })
    })
}

fn random_search(lhs: &MeanSpec, rhs: &MeanSpec, trials: usize, n_max: usize, seed: u64) -> Option<FoundWitness> {
    let n_max = n_max.clamp(2, 8);
    let dominated = lhs.requires_dominance() || rhs.requires_dominance();
    let stream = label_stream("counterexample-random");
    let best = (0..trials as u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = derive_rng(seed, stream, i);
            let n = rng.random_range(2..=n_max);
            let kappa = 10f64.powf(rng.random_range(0.2..2.0));
            let shape = if dominated && n > 2 && rng.random::<f64>() < 0.3 {
                PairShape::Dominated { rank_a: n, rank_b: rng.random_range(1..n) }
            } else {
                PairShape::FullRank
            };
            let (a, b) = sample_pair(n, shape, kappa, &mut rng).ok()?;
            let l = compute_mean(lhs, &a, &b).ok()?.value;
            let r = compute_mean(rhs, &a, &b).ok()?.value;
            let (dl, dr) = (l.log_det(), r.log_det());
            if !(dl.is_finite() && dr.is_finite()) || (dl - dr).abs() > 1e-8 * (1.0 + dl.abs().max(dr.abs())) {
                return None;
            }
            let v = log_majorize(&l, &r, 0.0, f64::INFINITY).ok()?;
            let inner = v.per_k[..n - 1].iter().map(|(x, y)| y - x).fold(f64::INFINITY, f64::min);
            let excess = (-inner).exp_m1();
            (excess >= VIOL_BAND && excess.is_finite()).then_some((i, excess, a, b))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)))?;
    let (i, excess, a, b) = best;
    Some(FoundWitness {
        lhs: *lhs,
        rhs: *rhs,
        witness: Witness::Pair { seed, index: i, a: MatrixJson::from_matrix(a.matrix()), b: MatrixJson::from_matrix(b.matrix()) },
        violation: excess,
    })
}

/// Looks for a pair with `lhs ⊀_log rhs`; returns the largest violation found.
pub fn counterexample_search(lhs: &MeanSpec, rhs: &MeanSpec, strategy: &SearchStrategy) -> Result<Option<FoundWitness>> {
    if lhs.alpha != rhs.alpha {
        return Err(Error::Parameter("both sides must share alpha".into()));
    }
    Ok(match strategy {
        SearchStrategy::Structured(grid) => structured(lhs, rhs, grid),
        SearchStrategy::Random { trials, n_max, seed } => random_search(lhs, rhs, *trials, *n_max, *seed),
        SearchStrategy::Combined { grid, trials, n_max, seed } => {
            structured(lhs, rhs, grid).or_else(|| random_search(lhs, rhs, *trials, *n_max, *seed))
        }
    })
}
