use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::majorization::{log_majorize, DET_TOL, MAJ_TOL};
use crate::means::compute_mean;
use crate::sample::{derive_rng, label_stream, sample_pair, PairShape, SeedRng};
use crate::spectral::MatrixJson;

use super::search::{counterexample_search, FoundWitness, GridSpec, SearchStrategy, Witness};
use super::{Assertion, ClaimRecord, Domain, BOUNDARY_BAND, EXPONENT_BOX};

#[derive(Clone, Debug, Serialize)]
pub struct VerifyConfig {
    pub trials: usize,
    pub n_max: usize,
    pub seed: u64,
    /// Partial-product tolerance for the randomized checks.
    pub maj_tol: f64,
    pub det_tol: f64,
    /// Parameter points tried for counterexample claims.
    pub ce_points: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { trials: 500, n_max: 5, seed: 0, maj_tol: MAJ_TOL, det_tol: DET_TOL, ce_points: 5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Confirmed,
    Refuted,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClaimReport {
    pub claim_id: String,
    pub statement: String,
    pub assertion: Assertion,
    pub trials: usize,
    /// Trials that produced both means.
    pub evaluated: usize,
    pub errors: usize,
    pub violations: usize,
    /// Smallest log partial-product gap seen; for counterexample claims,
    /// minus the largest violation.
    pub worst_margin: f64,
    pub witness: Option<FoundWitness>,
    pub verdict: Verdict,
    pub note: Option<String>,
}

/// Exponent ratios used when hunting counterexamples. Beyond this the
/// witnesses need eigenvalue spreads that double precision cannot resolve
/// once raised to the exponents involved.
pub const CE_RATIO_BOX: (f64, f64) = (0.25, 4.0);

/// Draws `(α, p, q)` where the claim applies. With `robust`, the claim must
/// also apply at nearby `α` and exponent ratios, which keeps counterexample
/// hunts away from the sharp boundary.
fn sample_params(claim: &ClaimRecord, robust: bool, rng: &mut SeedRng) -> Option<(f64, f64, f64)> {
    let pieces = claim.alpha.sampling_intervals();
    let total: f64 = pieces.iter().map(|(l, h)| h - l).sum();
    if pieces.is_empty() {
        return None;
    }
    let (elo, ehi) = (EXPONENT_BOX.0.ln(), EXPONENT_BOX.1.ln());
    for _ in 0..20_000 {
        let mut u = rng.random::<f64>() * total;
        let mut alpha = pieces[0].0;
        for &(l, h) in &pieces {
            if u <= h - l {
                alpha = l + u;
                break;
            }
            u -= h - l;
        }
        let p = rng.random_range(elo..ehi).exp();
        let q = rng.random_range(elo..ehi).exp();
        if !claim.applies(alpha, p, q) {
            continue;
        }
        if robust {
            if !(CE_RATIO_BOX.0..=CE_RATIO_BOX.1).contains(&(p / q)) {
                continue;
            }
            let ok = [-0.05, 0.0, 0.05].iter().all(|da| {
                [-0.1f64, 0.0, 0.1].iter().all(|dr| claim.applies(alpha + da, p * dr.exp(), q))
            });
            if !ok {
                continue;
            }
        }
        return Some((alpha, p, q));
    }
    None
}

/// Condition budget so that the largest power applied stays well conditioned.
fn kappa_max(alpha: f64, p: f64, q: f64) -> f64 {
    let e = (2.0 * alpha + 2.0) * p.max(q).max(1.0);
    10f64.powf((6.0 / e).min(2.0))
}

fn sample_shape(claim: &ClaimRecord, n: usize, dominated_only: bool, rng: &mut SeedRng) -> PairShape {
    if claim.domain == Domain::PositiveDefinite2x2 || n < 2 {
        return PairShape::FullRank;
    }
    let u = rng.random::<f64>();
    if u < 0.6 {
        PairShape::FullRank
    } else if u < 0.85 || dominated_only {
        let rank_a = if rng.random::<f64>() < 0.3 { n - 1 } else { n };
        PairShape::Dominated { rank_a, rank_b: rng.random_range(1..=rank_a.max(2) - 1) }
    } else {
        let rank_b = if rng.random::<f64>() < 0.3 { n - 1 } else { n };
        PairShape::ReverseDominated { rank_a: rng.random_range(1..=rank_b.max(2) - 1), rank_b }
    }
}

struct Trial {
    index: u64,
    margin: f64,
    boundary: bool,
    violated: bool,
    params: (f64, f64, f64),
}

fn run_trial(claim: &ClaimRecord, cfg: &VerifyConfig, index: u64) -> Result<Trial> {
    let mut rng = derive_rng(cfg.seed, label_stream(claim.id), index);
    let (alpha, p, q) = sample_params(claim, false, &mut rng)
        .ok_or_else(|| Error::Domain(format!("{}: no admissible parameters in the sampling box", claim.id)))?;
    let (l, r) = claim.specs(alpha, p, q)?;
    let n_max = if claim.domain == Domain::PositiveDefinite2x2 { 2 } else { cfg.n_max.clamp(2, 8) };
    let n = rng.random_range(2..=n_max);
    let dominated_only = claim.domain == Domain::DominatedPsd || l.requires_dominance() || r.requires_dominance();
    let shape = sample_shape(claim, n, dominated_only, &mut rng);
    let kappa = kappa_max(alpha, p, q).powf(rng.random_range(0.3..1.0));
    let (a, b) = sample_pair(n, shape, kappa, &mut rng)?;
    let ml = compute_mean(&l, &a, &b)?.value;
    let mr = compute_mean(&r, &a, &b)?.value;
    let v = log_majorize(&ml, &mr, cfg.maj_tol, cfg.det_tol)?;
    // the full product is an identity for these means; judge the others
    let inner = v.per_k[..n - 1]
        .iter()
        .filter(|(x, y)| x.is_finite() || y.is_finite())
        .map(|&(x, y)| if x.is_finite() && y.is_finite() { y - x } else if y.is_finite() { f64::INFINITY } else { f64::NEG_INFINITY })
        .fold(f64::INFINITY, f64::min);
    let margin = if v.holds { inner.max(-cfg.maj_tol) } else { v.margin.min(inner) };
    Ok(Trial { index, margin, boundary: v.holds && margin.abs() <= BOUNDARY_BAND, violated: !v.holds, params: (alpha, p, q) })
}

/// Rebuilds the pair of a given trial index.
fn trial_witness(claim: &ClaimRecord, cfg: &VerifyConfig, t: &Trial) -> Result<FoundWitness> {
    let mut rng = derive_rng(cfg.seed, label_stream(claim.id), t.index);
    let (alpha, p, q) = sample_params(claim, false, &mut rng).expect("replayed parameters");
    let (l, r) = claim.specs(alpha, p, q)?;
    let n_max = if claim.domain == Domain::PositiveDefinite2x2 { 2 } else { cfg.n_max.clamp(2, 8) };
    let n = rng.random_range(2..=n_max);
    let dominated_only = claim.domain == Domain::DominatedPsd || l.requires_dominance() || r.requires_dominance();
    let shape = sample_shape(claim, n, dominated_only, &mut rng);
    let kappa = kappa_max(alpha, p, q).powf(rng.random_range(0.3..1.0));
    let (a, b) = sample_pair(n, shape, kappa, &mut rng)?;
    Ok(FoundWitness {
        lhs: l,
        rhs: r,
        witness: Witness::Pair {
            seed: cfg.seed,
            index: t.index,
            a: MatrixJson::from_matrix(a.matrix()),
            b: MatrixJson::from_matrix(b.matrix()),
        },
        violation: (-t.margin).exp_m1(),
    })
}

fn randomized(claim: &ClaimRecord, cfg: &VerifyConfig) -> ClaimReport {
    let outcomes: Vec<Result<Trial>> = (0..cfg.trials as u64).into_par_iter().map(|i| run_trial(claim, cfg, i)).collect();
    let mut errors = 0;
    let mut first_error = None;
    let mut evaluated = 0;
    let mut violations = 0;
    let mut boundary = 0;
    let mut worst: Option<&Trial> = None;
    for o in &outcomes {
        match o {
            Ok(t) => {
                evaluated += 1;
                if t.violated {
                    violations += 1;
                } else if t.boundary {
                    boundary += 1;
                }
                if worst.is_none_or(|w| t.margin < w.margin) {
                    worst = Some(t);
                }
            }
            Err(e) => {
                errors += 1;
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let worst_margin = worst.map_or(f64::INFINITY, |t| t.margin);
    let mut witness = None;
    if violations > 0 {
        let t = worst.expect("a violating trial");
        let (alpha, p, q) = t.params;
        // prefer a readable 2x2 witness at the same parameters
        witness = claim
            .specs(alpha, p, q)
            .ok()
            .and_then(|(l, r)| counterexample_search(&l, &r, &SearchStrategy::Structured(GridSpec::default())).ok().flatten())
            .or_else(|| trial_witness(claim, cfg, t).ok());
    }
    let verdict = match claim.assertion {
        Assertion::HoldsForAllPairs if violations > 0 => Verdict::Refuted,
        Assertion::HoldsForAllPairs if evaluated > 0 && errors * 10 <= cfg.trials => Verdict::Confirmed,
        _ => Verdict::Inconclusive,
    };
    let mut notes = Vec::new();
    if claim.assertion == Assertion::Open {
        notes.push(if violations > 0 {
            format!("open question; violations in {violations} of {evaluated} trials")
        } else {
            format!("open question; no violation in {evaluated} trials")
        });
    }
    if boundary > 0 {
        notes.push(format!("{boundary} trials within the equality band"));
    }
    if let Some(e) = first_error {
        notes.push(format!("{errors} trials failed, first: {e}"));
    }
    ClaimReport {
        claim_id: claim.id.to_string(),
        statement: claim.statement(),
        assertion: claim.assertion,
        trials: cfg.trials,
        evaluated,
        errors,
        violations,
        worst_margin,
        witness,
        verdict,
        note: (!notes.is_empty()).then(|| notes.join("; ")),
    }
}

/// Every mean satisfies `M_{α,p}(A, B) = M_{α,1}(A^p, B^p)^{1/p}`, so only
/// `p/q` matters. Rescaling to a smallest exponent of 1 keeps the witnesses
/// inside the conditioning that double precision can represent.
fn normalize_scale(claim: &ClaimRecord, (alpha, p, q): (f64, f64, f64)) -> (f64, f64, f64) {
    use super::Exponent;
    let used: Vec<f64> = [claim.lhs.exponent, claim.rhs.exponent]
        .iter()
        .filter_map(|e| match e {
            Exponent::P => Some(p),
            Exponent::Q => Some(q),
            Exponent::None => None,
        })
        .collect();
    let s = used.iter().copied().fold(f64::INFINITY, f64::min);
    if !s.is_finite() || !claim.applies(alpha, p / s, q / s) {
        return (alpha, p, q);
    }
    (alpha, p / s, q / s)
}

fn counterexample(claim: &ClaimRecord, cfg: &VerifyConfig) -> ClaimReport {
    let mut rng = derive_rng(cfg.seed, label_stream(claim.id), u64::MAX);
    let mut points = Vec::new();
    for _ in 0..cfg.ce_points.max(1) {
        if let Some(pt) = sample_params(claim, true, &mut rng) {
            points.push(normalize_scale(claim, pt));
        }
    }
    let mut found = Vec::new();
    let mut errors = 0;
    let mut missing = Vec::new();
    for &(alpha, p, q) in &points {
        let strategy = SearchStrategy::Combined {
            grid: GridSpec::default(),
            trials: cfg.trials.min(200),
            n_max: 2,
            seed: cfg.seed,
        };
        match claim.specs(alpha, p, q).and_then(|(l, r)| counterexample_search(&l, &r, &strategy)) {
            Ok(Some(w)) => found.push(w),
            Ok(None) => missing.push(format!("(α={alpha:.3}, p={p:.3}, q={q:.3})")),
            Err(_) => errors += 1,
        }
    }
    let best = found.iter().max_by(|a, b| a.violation.total_cmp(&b.violation)).cloned();
    let verdict = if !points.is_empty() && missing.is_empty() && errors == 0 {
        Verdict::Confirmed
    } else {
        Verdict::Inconclusive
    };
    let note = if points.is_empty() {
        Some("no parameter point away from the boundary".to_string())
    } else if !missing.is_empty() {
        Some(format!("no witness found at {}", missing.join(", ")))
    } else {
        None
    };
    ClaimReport {
        claim_id: claim.id.to_string(),
        statement: claim.statement(),
        assertion: claim.assertion,
        trials: points.len(),
        evaluated: points.len() - errors,
        errors,
        violations: found.len(),
        worst_margin: best.as_ref().map_or(f64::INFINITY, |w| -w.violation.ln_1p()),
        witness: best,
        verdict,
        note,
    }
}

/// Checks a catalog claim. Universal claims are tested on random pairs;
/// counterexample claims are confirmed only when every sampled parameter
/// point yields a witness. Open claims are scanned and never decided.
pub fn verify_claim(claim: &ClaimRecord, cfg: &VerifyConfig) -> ClaimReport {
    match claim.assertion {
        Assertion::HoldsForAllPairs | Assertion::Open => randomized(claim, cfg),
        Assertion::CounterexampleExists => counterexample(claim, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::find_claim;

    fn small() -> VerifyConfig {
        VerifyConfig { trials: 60, n_max: 4, seed: 7, ce_points: 2, ..VerifyConfig::default() }
    }

    #[test]
    fn monotone_renyi_confirmed() {
        let r = verify_claim(&find_claim("Thm3.1a").unwrap(), &small());
        assert_eq!(r.verdict, Verdict::Confirmed, "{r:?}");
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn mutated_claim_refuted() {
        let c = find_claim("Thm3.1a").unwrap().with_predicate("p >= 2q", |_, p, q| p >= 2.0 * q);
        let r = verify_claim(&c, &small());
        assert_eq!(r.verdict, Verdict::Refuted);
        assert!(r.witness.is_some());
    }

    #[test]
    fn counterexample_claim_confirmed() {
        let r = verify_claim(&find_claim("Thm3.4.2").unwrap(), &small());
        assert_eq!(r.verdict, Verdict::Confirmed, "{r:?}");
        assert!(r.witness.unwrap().violation > crate::relations::VIOL_BAND);
    }

    #[test]
    fn open_is_inconclusive() {
        let r = verify_claim(&find_claim("Prob3.5").unwrap(), &small());
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }
}
