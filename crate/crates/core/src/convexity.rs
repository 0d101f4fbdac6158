//! Joint concavity/convexity of `(A, B) ↦ Tr M_{α,p}(A, B)` and monotonicity
//! of the same trace functions under channels.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{cq_channel, pinching_channel, qc_channel, random_cptp, QuantumChannel};
use crate::divergence::{sandwich_check, Povm};
use crate::error::{Error, Result};
use crate::means::{dominates, trace_mean, MeanKind, MeanSpec};
use crate::sample::{derive_rng, label_stream, random_hermitian, random_state, random_unitary, sample_psd, SeedRng};
use crate::spectral::{c, CMat, Hermitian, MatrixJson, Psd, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    Concavity,
    Convexity,
}

impl Mode {
    /// The only mode that can hold for geometric-type means: concavity for
    /// `α < 1`, convexity for `α > 1`.
    pub fn natural(alpha: f64) -> Mode {
        if alpha < 1.0 {
            Mode::Concavity
        } else {
            Mode::Convexity
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RegionTheory {
    Holds,
    Fails,
    /// Not characterized (open problems, partial results).
    Unknown,
}

impl RegionTheory {
    fn from_bool(b: bool) -> Self {
        if b {
            RegionTheory::Holds
        } else {
            RegionTheory::Fails
        }
    }
}

/// Known joint concavity/convexity of `Tr M_{α,p}`.
pub fn convexity_theory(spec: &MeanSpec, mode: Mode) -> RegionTheory {
    let (a, p) = (spec.alpha, spec.p);
    match spec.kind {
        MeanKind::Arithmetic => match mode {
            Mode::Concavity => RegionTheory::from_bool(p <= 1.0),
            Mode::Convexity => RegionTheory::from_bool((1.0..=2.0).contains(&p)),
        },
        MeanKind::Harmonic => match mode {
            Mode::Concavity => RegionTheory::from_bool(p <= 1.0),
            Mode::Convexity => RegionTheory::Fails,
        },
        _ if mode != Mode::natural(a) => RegionTheory::Fails,
        MeanKind::Renyi => {
            let z = 1.0 / p;
            if a < 1.0 {
                RegionTheory::from_bool(z >= a.max(1.0 - a))
            } else {
                RegionTheory::from_bool((a / 2.0).max(a - 1.0) <= z && z <= a)
            }
        }
        MeanKind::LogEuclidean => RegionTheory::from_bool(a < 1.0),
        MeanKind::Geometric => {
            if a < 1.0 {
                RegionTheory::from_bool(p <= 1.0)
            } else if p == 1.0 {
                RegionTheory::from_bool(a <= 2.0)
            } else if a == 2.0 {
                RegionTheory::from_bool((0.5..=1.0).contains(&p))
            } else if p < 0.5f64.max((a - 1.0) / a) || p > 1.0 {
                RegionTheory::Fails
            } else {
                RegionTheory::Unknown
            }
        }
        MeanKind::SpectralGeometric => {
            if a > 1.0 || p > ((1.0 - a) / a).min(a / (1.0 - a)) {
                RegionTheory::Fails
            } else if a == 0.5 {
                RegionTheory::Holds
            } else {
                RegionTheory::Unknown
            }
        }
        MeanKind::SpectralGeometricTilde => {
            if a > 1.0 || p > 1.0 {
                RegionTheory::Fails
            } else if a == 0.5 {
                RegionTheory::Holds
            } else {
                RegionTheory::Unknown
            }
        }
    }
}

/// Condition (i) of the semi-classical characterization: `Tr M ≤ Tr R_{α,1/α}`
/// for `α < 1`, `Tr M ≥ Tr R_{α,1/α}` for `α > 1`, as far as it is known.
pub fn sandwiched_condition(spec: &MeanSpec) -> RegionTheory {
    let (a, p) = (spec.alpha, spec.p);
    match (spec.kind, a < 1.0) {
        (MeanKind::Renyi, true) => RegionTheory::from_bool(p <= 1.0 / a),
        (MeanKind::Renyi, false) => RegionTheory::from_bool(p >= 1.0 / a),
        (MeanKind::Geometric, true) => RegionTheory::from_bool(p <= 1.0),
        (MeanKind::Geometric, false) => {
            if p >= 0.5f64.max((a - 1.0) / a) {
                RegionTheory::Holds
            } else if a <= 2.0 {
                RegionTheory::Fails
            } else {
                RegionTheory::Unknown
            }
        }
        (MeanKind::LogEuclidean, below) => RegionTheory::from_bool(below),
        (MeanKind::SpectralGeometric, true) => {
            if p <= 1f64.min((1.0 - a) / a) {
                RegionTheory::Holds
            } else {
                RegionTheory::Unknown
            }
        }
        (MeanKind::SpectralGeometricTilde, true) => {
            if p > 1.0 {
                RegionTheory::Fails
            } else {
                RegionTheory::Unknown
            }
        }
        (MeanKind::SpectralGeometric | MeanKind::SpectralGeometricTilde, false) => RegionTheory::Fails,
        (MeanKind::Arithmetic | MeanKind::Harmonic, _) => RegionTheory::Unknown,
    }
}

/// Condition of the classical-quantum characterization: `Tr M ≥ Tr G_{α,1}`
/// for `α < 1`, `Tr M ≤ Tr G_{α,1}` for `α > 1`.
pub fn geometric_condition(spec: &MeanSpec) -> RegionTheory {
    let (a, p) = (spec.alpha, spec.p);
    match (spec.kind, a < 1.0) {
        (MeanKind::Renyi, true) | (MeanKind::LogEuclidean, true) => RegionTheory::Holds,
        (MeanKind::Renyi, false) => RegionTheory::from_bool(1.0 / p >= (a / 2.0).max(a - 1.0)),
        (MeanKind::Geometric, true) => RegionTheory::from_bool(p <= 1.0),
        (MeanKind::Geometric, false) if a <= 2.0 => RegionTheory::from_bool(p <= 1.0),
        (MeanKind::SpectralGeometric, true) => RegionTheory::Holds,
        _ => RegionTheory::Unknown,
    }
}

/// Default tolerance on normalized midpoint defects.
pub const CVX_TOL: f64 = 1e-9;

/// Ways of drawing midpoint test instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PairSampler {
    /// Independent Wishart-type matrices with random conditioning.
    Wishart,
    /// Small perturbations of a commuting configuration.
    NearCommuting,
    /// `(A, B)` and `(UAU*, UBU*)` with `U` a diagonal sign matrix and one of
    /// `A, B` diagonal, so that the midpoint is a pinching.
    Structured,
    /// Nearly rank-one pairs `A_i ≈ a v v*`, `B_i ≈ b w w*` with `w` close to
    /// `v`; each pair points in its own direction.
    LowRank,
}

pub const ALL_SAMPLERS: [PairSampler; 4] = [PairSampler::Wishart, PairSampler::NearCommuting, PairSampler::Structured, PairSampler::LowRank];

#[derive(Clone, Debug)]
pub struct MidpointInstance {
    pub a1: Psd,
    pub b1: Psd,
    pub a2: Psd,
    pub b2: Psd,
    pub lambda: f64,
}

fn log_uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    10f64.powf(rng.random_range(lo..hi))
}

fn diag_matrix(d: &[f64]) -> CMat {
    CMat::from_fn(d.len(), d.len(), |i, j| if i == j { c(d[i]) } else { C64::ZERO })
}

fn near_commuting<R: Rng + ?Sized>(u: &CMat, n: usize, rng: &mut R) -> Result<Psd> {
    let logs: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..0.0f64) * std::f64::consts::LN_10).collect();
    let delta = log_uniform(-3.0, -0.3, rng);
    let h = Hermitian::symmetrized(diag_matrix(&logs) + random_hermitian(n, rng).matrix() * c(delta));
    let e = h.exp()?;
    Psd::from_product(u * e.matrix() * u.adjoint())
}

fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> nalgebra::DVector<C64> {
    let v = crate::sample::gaussian_matrix(n, 1, rng).column(0).into_owned();
    let norm = v.norm();
    v / c(norm)
}

fn near_rank_one<R: Rng + ?Sized>(v: &nalgebra::DVector<C64>, rng: &mut R) -> Result<Psd> {
    let n = v.len();
    let scale = rng.random_range(-1.5..1.5f64).exp();
    let ridge = log_uniform(-6.0, -2.0, rng) * scale;
    let proj = v * v.adjoint() * c(scale);
    Psd::from_product(proj + CMat::identity(n, n) * c(ridge))
}

fn rotated_diag<R: Rng + ?Sized>(n: usize, spread: f64, rng: &mut R) -> Result<Psd> {
    let vals: Vec<f64> = (0..n).map(|_| 10f64.powf(-rng.random_range(0.0..spread))).collect();
    let u = random_unitary(n, rng);
    Psd::from_product(&u * diag_matrix(&vals) * u.adjoint())
}

pub fn sample_instance<R: Rng + ?Sized>(sampler: PairSampler, rng: &mut R) -> Result<MidpointInstance> {
    let n = rng.random_range(2..=3usize);
    let lambda = if rng.random_bool(0.5) { 0.5 } else { rng.random_range(0.05..0.95) };
    match sampler {
        PairSampler::Wishart => {
            let draw = |rng: &mut R| sample_psd(n, Some(log_uniform(0.0, 3.0, rng)), rng);
            Ok(MidpointInstance { a1: draw(rng)?, b1: draw(rng)?, a2: draw(rng)?, b2: draw(rng)?, lambda })
        }
        PairSampler::NearCommuting => {
            let u = random_unitary(n, rng);
            Ok(MidpointInstance {
                a1: near_commuting(&u, n, rng)?,
                b1: near_commuting(&u, n, rng)?,
                a2: near_commuting(&u, n, rng)?,
                b2: near_commuting(&u, n, rng)?,
                lambda,
            })
        }
        PairSampler::Structured => {
            let spread = rng.random_range(0.5..4.0);
            let d: Vec<f64> = (0..n).map(|_| 10f64.powf(-rng.random_range(0.0..spread))).collect();
            let diag = Psd::from_product(diag_matrix(&d))?;
            let other = rotated_diag(n, rng.random_range(0.0..spread), rng)?;
            let (a, b) = if rng.random_bool(0.5) { (diag, other) } else { (other, diag) };
            let mut signs: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
            signs[0] = 1.0;
            signs[n - 1] = -1.0;
            let s = diag_matrix(&signs);
            let conj = |x: &Psd| Psd::from_product(&s * x.matrix() * &s);
            Ok(MidpointInstance { a2: conj(&a)?, b2: conj(&b)?, a1: a, b1: b, lambda: 0.5 })
        }
        PairSampler::LowRank => {
            let pair = |rng: &mut R| -> Result<(Psd, Psd)> {
                let v = unit_vector(n, rng);
                let delta = log_uniform(-3.0, 0.0, rng);
                let w = &v + unit_vector(n, rng) * c(delta);
                let w = &w / c(w.norm());
                Ok((near_rank_one(&v, rng)?, near_rank_one(&w, rng)?))
            };
            let (a1, b1) = pair(rng)?;
            let (a2, b2) = pair(rng)?;
            Ok(MidpointInstance { a1, b1, a2, b2, lambda })
        }
    }
}

/// Signed midpoint defect, normalized by the trace at the midpoint;
/// negative means the property fails.
pub fn midpoint_defect(spec: &MeanSpec, mode: Mode, inst: &MidpointInstance) -> Result<f64> {
    let l = inst.lambda;
    let mix = |x: &Psd, y: &Psd| -> Result<Psd> { x.scale(l).add(&y.scale(1.0 - l)) };
    let am = mix(&inst.a1, &inst.a2)?;
    let bm = mix(&inst.b1, &inst.b2)?;
    let qm = trace_mean(spec, &am, &bm)?;
    let q1 = trace_mean(spec, &inst.a1, &inst.b1)?;
    let q2 = trace_mean(spec, &inst.a2, &inst.b2)?;
    let avg = l * q1 + (1.0 - l) * q2;
    let d = match mode {
        Mode::Concavity => qm - avg,
        Mode::Convexity => avg - qm,
    };
    Ok(d / qm.abs().max(avg.abs()).max(f64::MIN_POSITIVE))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexityWitness {
    pub a1: MatrixJson,
    pub b1: MatrixJson,
    pub a2: MatrixJson,
    pub b2: MatrixJson,
    pub lambda: f64,
    pub sampler: PairSampler,
    pub trial: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConvexityOutcome {
    NoViolation,
    ViolationFound,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexityVerdict {
    pub spec: MeanSpec,
    pub mode: Mode,
    pub trials: usize,
    pub errors: usize,
    pub worst_violation: f64,
    pub outcome: ConvexityOutcome,
    pub theory: RegionTheory,
    pub witness: Option<ConvexityWitness>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConvexityConfig {
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for ConvexityConfig {
    fn default() -> Self {
        ConvexityConfig { trials: 2000, seed: 0, tol: CVX_TOL }
    }
}

fn instance_for(spec: &MeanSpec, mode: Mode, seed: u64, trial: usize) -> (PairSampler, Result<MidpointInstance>) {
    let sampler = ALL_SAMPLERS[trial % ALL_SAMPLERS.len()];
    let mut rng = derive_rng(seed, label_stream(&format!("{}:{mode:?}", spec.label())), trial as u64);
    (sampler, sample_instance(sampler, &mut rng))
}

/// Midpoint test over all three samplers, cycling per trial.
pub fn midpoint_convexity_test(spec: &MeanSpec, mode: Mode, cfg: &ConvexityConfig) -> Result<ConvexityVerdict> {
    let spec = MeanSpec::new(spec.kind, spec.alpha, spec.p)?;
    let results: Vec<Option<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let (_, inst) = instance_for(&spec, mode, cfg.seed, t);
            inst.and_then(|i| midpoint_defect(&spec, mode, &i)).ok()
        })
        .collect();
    let errors = results.iter().filter(|r| r.is_none()).count();
    let (worst_trial, worst) = results
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|v| (i, v)))
        .fold((usize::MAX, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best });
    let violated = worst < -cfg.tol;
    let witness = if violated {
        let (sampler, inst) = instance_for(&spec, mode, cfg.seed, worst_trial);
        let inst = inst?;
        Some(ConvexityWitness {
            a1: MatrixJson::from_matrix(inst.a1.matrix()),
            b1: MatrixJson::from_matrix(inst.b1.matrix()),
            a2: MatrixJson::from_matrix(inst.a2.matrix()),
            b2: MatrixJson::from_matrix(inst.b2.matrix()),
            lambda: inst.lambda,
            sampler,
            trial: worst_trial,
        })
    } else {
        None
    };
    Ok(ConvexityVerdict {
        spec,
        mode,
        trials: cfg.trials,
        errors,
        worst_violation: worst.min(0.0),
        outcome: if violated { ConvexityOutcome::ViolationFound } else { ConvexityOutcome::NoViolation },
        theory: convexity_theory(&spec, mode),
        witness,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionCell {
    pub alpha: f64,
    pub p: f64,
    pub theory: RegionTheory,
    pub outcome: ConvexityOutcome,
    pub worst_violation: f64,
    /// `None` where theory is silent.
    pub agree: Option<bool>,
}

/// Midpoint tests over an `α × p` grid in each cell's natural mode.
pub fn region_probe(kind: MeanKind, mode: Option<Mode>, alphas: &[f64], ps: &[f64], cfg: &ConvexityConfig) -> Result<Vec<RegionCell>> {
    let mut out = Vec::with_capacity(alphas.len() * ps.len());
    for &alpha in alphas {
        for &p in ps {
            let spec = MeanSpec::new(kind, alpha, p)?;
            let m = mode.unwrap_or(Mode::natural(alpha));
            let v = midpoint_convexity_test(&spec, m, cfg)?;
            let agree = match v.theory {
                RegionTheory::Holds => Some(v.outcome == ConvexityOutcome::NoViolation),
                RegionTheory::Fails => Some(v.outcome == ConvexityOutcome::ViolationFound),
                RegionTheory::Unknown => None,
            };
            out.push(RegionCell { alpha, p, theory: v.theory, outcome: v.outcome, worst_violation: v.worst_violation, agree });
        }
    }
    Ok(out)
}

pub fn region_csv(cells: &[RegionCell]) -> String {
    let mut s = String::from("alpha,p,theory,empirical,worst_violation,agree\n");
    for c in cells {
        let agree = c.agree.map_or("n/a".to_string(), |b| b.to_string());
        s.push_str(&format!("{},{},{:?},{:?},{:e},{}\n", c.alpha, c.p, c.theory, c.outcome, c.worst_violation, agree));
    }
    s
}

/// Channel families for monotonicity checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ChannelFamily {
    /// Random Stinespring channel into the same dimension.
    Cptp { env_dim: usize },
    /// Measurement channel of a random POVM.
    QuantumClassical { outcomes: usize },
    /// Preparation channel `a ↦ Σ a_i ρ_i`, applied to diagonal inputs.
    ClassicalQuantum,
    /// Pinching with respect to `A`.
    Pinching,
    /// Random channel followed by the transpose.
    TransposedCptp { env_dim: usize },
}

impl std::str::FromStr for ChannelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "cptp" => ChannelFamily::Cptp { env_dim: 2 },
            "qc" => ChannelFamily::QuantumClassical { outcomes: 3 },
            "cq" => ChannelFamily::ClassicalQuantum,
            "pinch" | "pinching" => ChannelFamily::Pinching,
            "transpose" => ChannelFamily::TransposedCptp { env_dim: 2 },
            _ => return Err(Error::Parameter(format!("unknown channel family '{s}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// `Q(Φ(A), Φ(B)) ≥ Q(A, B)`.
    Increase,
    /// `Q(Φ(A), Φ(B)) ≤ Q(A, B)`.
    Decrease,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityReport {
    pub spec: MeanSpec,
    pub family: ChannelFamily,
    pub direction: Direction,
    /// Whether theory predicts monotonicity in `direction` for this family.
    pub expected: RegionTheory,
    pub trials: usize,
    pub evaluated: usize,
    pub errors: usize,
    /// Outputs that lost support dominance and were shifted by `1e-10·I`.
    pub regularized: usize,
    /// Smallest normalized defect in `direction` (negative = violation).
    pub worst_defect: f64,
    pub violations: usize,
}

/// Shift applied when a channel output loses support dominance.
pub const OUTPUT_SHIFT: f64 = 1e-10;

fn family_channel(family: ChannelFamily, a: &Psd, n: usize, rng: &mut SeedRng) -> Result<QuantumChannel> {
    match family {
        ChannelFamily::Cptp { env_dim } => random_cptp(n, n, env_dim, rng),
        ChannelFamily::TransposedCptp { env_dim } => Ok(random_cptp(n, n, env_dim, rng)?.transposed()),
        ChannelFamily::QuantumClassical { outcomes } => qc_channel(&Povm::random(n, outcomes, rng)?),
        ChannelFamily::Pinching => pinching_channel(a),
        ChannelFamily::ClassicalQuantum => {
            let m = rng.random_range(2..=3usize);
            let states = (0..n).map(|_| random_state(m, rng.random_range(1..=m), rng)).collect::<Result<Vec<_>>>()?;
            cq_channel(&states)
        }
    }
}

fn expected_monotone(spec: &MeanSpec, family: ChannelFamily) -> RegionTheory {
    match family {
        ChannelFamily::Cptp { .. } => convexity_theory(spec, Mode::natural(spec.alpha)),
        ChannelFamily::TransposedCptp { .. } => {
            if spec.kind == MeanKind::LogEuclidean && spec.alpha < 1.0 {
                RegionTheory::Holds
            } else if spec.kind == MeanKind::Renyi && spec.alpha < 1.0 {
                convexity_theory(spec, Mode::Concavity)
            } else {
                RegionTheory::Unknown
            }
        }
        ChannelFamily::QuantumClassical { .. } | ChannelFamily::Pinching => {
            let cond = sandwiched_condition(spec);
            if spec.alpha < 1.0 && spec.alpha < 0.5 && cond == RegionTheory::Fails {
                RegionTheory::Unknown
            } else {
                cond
            }
        }
        ChannelFamily::ClassicalQuantum => {
            let cond = geometric_condition(spec);
            if spec.alpha > 2.0 && cond == RegionTheory::Holds {
                RegionTheory::Unknown
            } else {
                cond
            }
        }
    }
}

fn one_monotone_trial(spec: &MeanSpec, family: ChannelFamily, direction: Direction, rng: &mut SeedRng) -> Result<(f64, bool)> {
    let n = rng.random_range(2..=3usize);
    let kappa = log_uniform(0.0, 2.0, rng);
    let (a, b) = if family == ChannelFamily::ClassicalQuantum {
        let da: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let db: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        (Psd::diag(&da)?, Psd::diag(&db)?)
    } else {
        (sample_psd(n, Some(kappa), rng)?, sample_psd(n, Some(kappa), rng)?)
    };
    let ch = family_channel(family, &a, n, rng)?;
    let mut fa = ch.apply(&a)?;
    let fb = ch.apply(&b)?;
    let mut shifted = false;
    if spec.requires_dominance() && !dominates(&fa, &fb) {
        fa = fa.shifted(OUTPUT_SHIFT);
        shifted = true;
    }
    let q_in = trace_mean(spec, &a, &b)?;
    let q_out = trace_mean(spec, &fa, &fb)?;
    let d = match direction {
        Direction::Increase => q_out - q_in,
        Direction::Decrease => q_in - q_out,
    };
    Ok((d / q_in.abs().max(f64::MIN_POSITIVE), shifted))
}

/// Signed change of `Tr M_{α,p}` under random channels of one family.
/// The checked direction is increase for `α < 1` and decrease for `α > 1`.
pub fn monotonicity_check(spec: &MeanSpec, family: ChannelFamily, trials: usize, seed: u64, tol: f64) -> Result<MonotonicityReport> {
    let spec = MeanSpec::new(spec.kind, spec.alpha, spec.p)?;
    let direction = if spec.alpha < 1.0 { Direction::Increase } else { Direction::Decrease };
    let stream = label_stream(&format!("monotone:{}:{family:?}", spec.label()));
    let results: Vec<Result<(f64, bool)>> = (0..trials)
        .into_par_iter()
        .map(|t| one_monotone_trial(&spec, family, direction, &mut derive_rng(seed, stream, t as u64)))
        .collect();
    let mut worst = f64::INFINITY;
    let (mut evaluated, mut errors, mut regularized, mut violations) = (0, 0, 0, 0);
    for r in results {
        match r {
            Ok((d, shifted)) => {
                evaluated += 1;
                regularized += shifted as usize;
                violations += (d < -tol) as usize;
                worst = worst.min(d);
            }
            Err(_) => errors += 1,
        }
    }
    Ok(MonotonicityReport {
        spec,
        family,
        direction,
        expected: expected_monotone(&spec, family),
        trials,
        evaluated,
        errors,
        regularized,
        worst_defect: worst,
        violations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SemiclassicalReport {
    pub spec: MeanSpec,
    pub family: ChannelFamily,
    /// Theory status of the trace bound the family is tied to.
    pub condition_theory: RegionTheory,
    /// Violations of that bound among sampled pairs.
    pub condition_violations: usize,
    pub monotonicity: MonotonicityReport,
    /// A bound without violations must come with monotonicity.
    pub consistent: bool,
}

/// Ties monotonicity under quantum-classical (or pinching) channels to
/// `Tr M ≤ Tr R_{α,1/α}` (`α < 1`, reversed for `α > 1`) and monotonicity
/// under classical-quantum channels to the `Tr G_{α,1}` bound.
pub fn semiclassical_monotonicity_check(spec: &MeanSpec, family: ChannelFamily, trials: usize, seed: u64, tol: f64) -> Result<SemiclassicalReport> {
    let (condition_theory, use_upper) = match family {
        ChannelFamily::QuantumClassical { .. } | ChannelFamily::Pinching => (sandwiched_condition(spec), spec.alpha < 1.0),
        ChannelFamily::ClassicalQuantum => (geometric_condition(spec), spec.alpha > 1.0),
        _ => return Err(Error::Parameter("semi-classical checks take qc, cq or pinching channels".into())),
    };
    let stream = label_stream(&format!("sandwich:{}", spec.label()));
    let condition_violations = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = derive_rng(seed, stream, t as u64);
            let n = rng.random_range(2..=3usize);
            let pair = sample_psd(n, Some(log_uniform(0.0, 2.0, &mut rng)), &mut rng)
                .and_then(|a| Ok((a, sample_psd(n, Some(log_uniform(0.0, 2.0, &mut rng)), &mut rng)?)));
            match pair.and_then(|(a, b)| sandwich_check(spec, &a, &b, tol)) {
                Ok(r) => !(if use_upper { r.upper_holds } else { r.lower_holds }),
                Err(_) => false,
            }
        })
        .count();
    let monotonicity = monotonicity_check(spec, family, trials, seed, tol)?;
    let consistent = condition_violations > 0 || monotonicity.violations == 0;
    Ok(SemiclassicalReport { spec: *spec, family, condition_theory, condition_violations, monotonicity, consistent })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionalConvexityReport {
    pub spec: MeanSpec,
    pub mode: Mode,
    pub trials: usize,
    pub errors: usize,
    pub worst_defect: f64,
    pub violations: usize,
}

/// Pairs whose `λ`-combinations `λA_1 + (1−λ)A_2` and
/// `λB_1 + (1−λ)B_2` are diagonal in a common basis.
pub fn commuting_combination<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<MidpointInstance> {
    let lambda = rng.random_range(0.1..0.9);
    let u = random_unitary(n, rng);
    let split = |rng: &mut R| -> Result<(Psd, Psd)> {
        let d: Vec<f64> = (0..n).map(|_| 10f64.powf(-rng.random_range(0.0..1.5))).collect();
        let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
        // E Hermitian with ‖E‖ small enough that both parts stay positive
        let e = random_hermitian(n, rng).matrix() * c(0.9 * dmin * rng.random_range(0.1..1.0));
        let base = diag_matrix(&d);
        let x1 = &base + &e * c(1.0 - lambda);
        let x2 = &base - &e * c(lambda);
        Ok((Psd::from_product(&u * x1 * u.adjoint())?, Psd::from_product(&u * x2 * u.adjoint())?))
    };
    let (a1, a2) = split(rng)?;
    let (b1, b2) = split(rng)?;
    Ok(MidpointInstance { a1, b1, a2, b2, lambda })
}

/// Midpoint inequality restricted to commuting combinations.
pub fn conditional_convexity_check(spec: &MeanSpec, trials: usize, seed: u64, tol: f64) -> Result<ConditionalConvexityReport> {
    let mode = Mode::natural(spec.alpha);
    let stream = label_stream(&format!("conditional:{}", spec.label()));
    let results: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = derive_rng(seed, stream, t as u64);
            let n = rng.random_range(2..=3usize);
            commuting_combination(n, &mut rng).and_then(|i| midpoint_defect(spec, mode, &i)).ok()
        })
        .collect();
    let errors = results.iter().filter(|r| r.is_none()).count();
    let vals: Vec<f64> = results.into_iter().flatten().collect();
    Ok(ConditionalConvexityReport {
        spec: *spec,
        mode,
        trials,
        errors,
        worst_defect: vals.iter().cloned().fold(f64::INFINITY, f64::min),
        violations: vals.iter().filter(|&&v| v < -tol).count(),
    })
}

/// `X ⊕ Y`.
pub fn direct_sum(x: &Psd, y: &Psd) -> Result<Psd> {
    let (n, m) = (x.dim(), y.dim());
    let mut z = CMat::zeros(n + m, n + m);
    z.view_mut((0, 0), (n, n)).copy_from(x.matrix());
    z.view_mut((n, n), (m, m)).copy_from(y.matrix());
    Psd::from_product(z)
}

/// The channel `[X_ij] ↦ X_11 + X_22` on `2n × 2n` block matrices.
pub fn block_sum_channel(n: usize) -> Result<QuantumChannel> {
    let k = |off: usize| CMat::from_fn(n, 2 * n, |i, j| if j == i + off { C64::ONE } else { C64::ZERO });
    QuantumChannel::new(vec![k(0), k(n)], crate::channels::ChannelKind::PartialTrace)
}

/// Monotonicity and midpoint defects tied by the direct-sum construction:
/// with `Φ = block_sum_channel`, `Φ(λA₁ ⊕ (1−λ)A₂) = λA₁ + (1−λ)A₂` and
/// `Q(λA₁ ⊕ (1−λ)A₂, …) = λQ(A₁,B₁) + (1−λ)Q(A₂,B₂)`. Returns the midpoint
/// defect computed both ways (they must coincide).
pub fn block_construction_defects(spec: &MeanSpec, mode: Mode, inst: &MidpointInstance) -> Result<(f64, f64)> {
    let l = inst.lambda;
    let a = direct_sum(&inst.a1.scale(l), &inst.a2.scale(1.0 - l))?;
    let b = direct_sum(&inst.b1.scale(l), &inst.b2.scale(1.0 - l))?;
    let ch = block_sum_channel(inst.a1.dim())?;
    let q_in = trace_mean(spec, &a, &b)?;
    let q_out = trace_mean(spec, &ch.apply(&a)?, &ch.apply(&b)?)?;
    let d = match mode {
        Mode::Concavity => q_out - q_in,
        Mode::Convexity => q_in - q_out,
    };
    Ok((d / q_out.abs().max(q_in.abs()).max(f64::MIN_POSITIVE), midpoint_defect(spec, mode, inst)?))
}

/// Largest relative defects of the trace-function properties: normalization
/// `Q(A,A) = Tr A`, homogeneity, direct-sum additivity, tensor
/// multiplicativity and unitary invariance.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PropertyDefects {
    pub normalization: f64,
    pub homogeneity: f64,
    pub direct_sum: f64,
    pub tensor: f64,
    pub unitary: f64,
}

impl PropertyDefects {
    pub fn max(&self) -> f64 {
        [self.normalization, self.homogeneity, self.direct_sum, self.tensor, self.unitary].into_iter().fold(0.0, f64::max)
    }
}

pub fn property_defects(spec: &MeanSpec, trials: usize, seed: u64) -> Result<PropertyDefects> {
    let stream = label_stream(&format!("properties:{}", spec.label()));
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<PropertyDefects> {
            let mut rng = derive_rng(seed, stream, t as u64);
            let n = rng.random_range(2..=3usize);
            let draw = |rng: &mut SeedRng| sample_psd(n, Some(log_uniform(0.0, 1.0, rng)), rng);
            let (a1, b1, a2, b2) = (draw(&mut rng)?, draw(&mut rng)?, draw(&mut rng)?, draw(&mut rng)?);
            let q = |a: &Psd, b: &Psd| trace_mean(spec, a, b);
            let q1 = q(&a1, &b1)?;
            let q2 = q(&a2, &b2)?;
            let lambda = log_uniform(-1.0, 1.0, &mut rng);
            let u = random_unitary(n, &mut rng);
            Ok(PropertyDefects {
                normalization: rel(q(&a1, &a1)?, a1.trace()),
                homogeneity: rel(q(&a1.scale(lambda), &b1.scale(lambda))?, lambda * q1),
                direct_sum: rel(q(&direct_sum(&a1, &a2)?, &direct_sum(&b1, &b2)?)?, q1 + q2),
                tensor: rel(q(&a1.kron(&a2)?, &b1.kron(&b2)?)?, q1 * q2),
                unitary: rel(q(&a1.congruence(&u)?, &b1.congruence(&u)?)?, q1),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_trial.into_iter().fold(PropertyDefects::default(), |acc, d| PropertyDefects {
        normalization: acc.normalization.max(d.normalization),
        homogeneity: acc.homogeneity.max(d.homogeneity),
        direct_sum: acc.direct_sum.max(d.direct_sum),
        tensor: acc.tensor.max(d.tensor),
        unitary: acc.unitary.max(d.unitary),
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct PinchingWitness {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    /// `Tr LE_α(A, E_A(B)) − Tr LE_α(A, B)`, positive for a witness.
    pub increase: f64,
}

/// Grid search over `A = diag(a, b)`, `B = ½·[[1,1],[1,1]]` for a pinching
/// that increases `Tr LE_α` (`α > 1`), which rules out joint convexity.
pub fn le_pinching_witness(alpha: f64, grid: &[f64]) -> Result<Option<PinchingWitness>> {
    let spec = MeanSpec::le(alpha)?;
    let half = Psd::from_product(CMat::from_element(2, 2, c(0.5)))?;
    let mut best: Option<PinchingWitness> = None;
    for &a in grid {
        for &b in grid {
            let am = Psd::diag(&[a, b])?;
            let pinched = pinching_channel(&am)?.apply(&half)?;
            let increase = trace_mean(&spec, &am, &pinched)? - trace_mean(&spec, &am, &half)?;
            if increase > best.as_ref().map_or(0.0, |w| w.increase) {
                best = Some(PinchingWitness { alpha, a, b, increase });
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: MeanKind, a: f64, p: f64) -> MeanSpec {
        MeanSpec::new(kind, a, p).unwrap()
    }

    #[test]
    fn theory_table() {
        assert_eq!(convexity_theory(&spec(MeanKind::Renyi, 0.5, 2.0), Mode::Concavity), RegionTheory::Holds);
        assert_eq!(convexity_theory(&spec(MeanKind::Renyi, 0.5, 4.0), Mode::Concavity), RegionTheory::Fails);
        assert_eq!(convexity_theory(&spec(MeanKind::Renyi, 1.5, 1.0), Mode::Convexity), RegionTheory::Holds);
        assert_eq!(convexity_theory(&spec(MeanKind::Renyi, 1.5, 0.25), Mode::Convexity), RegionTheory::Fails);
        assert_eq!(convexity_theory(&spec(MeanKind::Geometric, 1.5, 0.8), Mode::Convexity), RegionTheory::Unknown);
        assert_eq!(convexity_theory(&spec(MeanKind::Geometric, 2.0, 0.4), Mode::Convexity), RegionTheory::Fails);
        assert_eq!(convexity_theory(&spec(MeanKind::Arithmetic, 0.5, 1.5), Mode::Convexity), RegionTheory::Holds);
        assert_eq!(convexity_theory(&spec(MeanKind::Arithmetic, 0.5, 1.5), Mode::Concavity), RegionTheory::Fails);
        assert_eq!(convexity_theory(&spec(MeanKind::SpectralGeometric, 1.5, 0.3), Mode::Convexity), RegionTheory::Fails);
        assert_eq!(convexity_theory(&spec(MeanKind::LogEuclidean, 0.3, 1.0), Mode::Concavity), RegionTheory::Holds);
    }

    #[test]
    fn structured_midpoint_is_a_pinching() {
        let mut rng = derive_rng(1, 0, 0);
        for _ in 0..10 {
            let inst = sample_instance(PairSampler::Structured, &mut rng).unwrap();
            let am = inst.a1.add(&inst.a2).unwrap().scale(0.5);
            let bm = inst.b1.add(&inst.b2).unwrap().scale(0.5);
            // one midpoint is diagonal
            let off = |m: &CMat| (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| m[(i, j)].norm()).fold(0.0, f64::max);
            assert!(off(am.matrix()) < 1e-14 || off(bm.matrix()) < 1e-14);
        }
    }

    #[test]
    fn concave_renyi_has_no_violation() {
        let cfg = ConvexityConfig { trials: 300, seed: 1, tol: CVX_TOL };
        let v = midpoint_convexity_test(&spec(MeanKind::Renyi, 0.5, 2.0), Mode::Concavity, &cfg).unwrap();
        assert_eq!(v.outcome, ConvexityOutcome::NoViolation, "{v:?}");
    }

    #[test]
    fn commuting_combinations_commute() {
        let mut rng = derive_rng(2, 0, 0);
        let inst = commuting_combination(3, &mut rng).unwrap();
        let l = inst.lambda;
        let am = inst.a1.scale(l).add(&inst.a2.scale(1.0 - l)).unwrap();
        let bm = inst.b1.scale(l).add(&inst.b2.scale(1.0 - l)).unwrap();
        let comm = am.matrix() * bm.matrix() - bm.matrix() * am.matrix();
        assert!(crate::spectral::max_abs(&comm) < 1e-13);
    }

    #[test]
    fn le_pinching_increase_above_one() {
        let grid = [1e-2, 0.1, 0.5, 1.0, 2.0];
        let w = le_pinching_witness(2.0, &grid).unwrap().expect("witness");
        assert!(w.increase > 1e-3, "{w:?}");
    }

    #[test]
    fn block_construction_matches_midpoint() {
        let mut rng = derive_rng(5, 0, 0);
        let s = spec(MeanKind::Geometric, 0.5, 1.0);
        for sampler in ALL_SAMPLERS {
            let inst = sample_instance(sampler, &mut rng).unwrap();
            let (via_channel, direct) = block_construction_defects(&s, Mode::Concavity, &inst).unwrap();
            assert!((via_channel - direct).abs() < 1e-9, "{sampler:?}: {via_channel} vs {direct}");
        }
    }

    #[test]
    fn trace_properties_hold() {
        let d = property_defects(&spec(MeanKind::SpectralGeometric, 0.7, 1.5), 20, 0).unwrap();
        assert!(d.max() < 1e-9, "{d:?}");
    }

    #[test]
    fn concave_renyi_is_monotone() {
        let r = monotonicity_check(&spec(MeanKind::Renyi, 0.5, 2.0), ChannelFamily::Cptp { env_dim: 2 }, 100, 3, 1e-8).unwrap();
        assert_eq!(r.violations, 0, "{r:?}");
        assert_eq!(r.expected, RegionTheory::Holds);
    }
}
