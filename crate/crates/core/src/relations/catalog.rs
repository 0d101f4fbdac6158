use super::{AlphaRange, Assertion, ClaimRecord, Domain, Side};
use crate::means::MeanKind::{
    Geometric as G, Renyi as R, SpectralGeometric as SG, SpectralGeometricTilde as SGT,
};

use Assertion::{CounterexampleExists as Ce, HoldsForAllPairs as Holds, Open};
use Domain::{AllPsd, DominatedPsd, PositiveDefinite2x2 as Pd2};

const EPS: f64 = 1e-12;

fn le(a: f64, b: f64) -> bool {
    a <= b + EPS
}

fn ge(a: f64, b: f64) -> bool {
    a + EPS >= b
}

const ANY: AlphaRange = AlphaRange::ANY;
const LT1: AlphaRange = AlphaRange::BELOW_ONE;
const GT1: AlphaRange = AlphaRange::ABOVE_ONE;
const LE_HALF: AlphaRange = AlphaRange::new(0.0, 0.5, false, true);
const HALF_TO_ONE: AlphaRange = AlphaRange::new(0.5, 1.0, false, false);
const ONE_TO_TWO: AlphaRange = AlphaRange::new(1.0, 2.0, false, true);
const GE2: AlphaRange = AlphaRange::new(2.0, f64::INFINITY, true, false);

#[allow(clippy::too_many_arguments)]
fn claim(
    id: &'static str,
    lhs: Side,
    rhs: Side,
    alpha: AlphaRange,
    condition: &'static str,
    predicate: fn(f64, f64, f64) -> bool,
    assertion: Assertion,
    domain: Domain,
) -> ClaimRecord {
    ClaimRecord { id, lhs, rhs, alpha, condition, predicate, assertion, domain }
}

fn always(_: f64, _: f64, _: f64) -> bool {
    true
}

/// Every log-majorization relation of the laboratory, including the
/// falsification targets that encode necessary conditions and the cells of
/// the Log-Euclidean comparison table.
pub fn builtin_catalog() -> Vec<ClaimRecord> {
    let le_side = Side::le();
    vec![
        // monotonicity and comparison of R and G
        claim("Thm3.1a", Side::p(R), Side::q(R), ANY, "p <= q", |_, p, q| le(p, q), Holds, AllPsd),
        claim("Thm3.1b", Side::q(G), Side::p(G), LT1, "p <= q", |_, p, q| le(p, q), Holds, AllPsd),
        claim("Thm3.1c", Side::p(G), Side::q(G), ONE_TO_TWO, "p <= q", |_, p, q| le(p, q), Holds, DominatedPsd),
        claim(
            "Thm3.1d",
            Side::p(G),
            Side::q(G),
            GE2,
            "p/q <= α/(2(α-1))",
            |a, p, q| le(p / q, a / (2.0 * (a - 1.0))),
            Holds,
            DominatedPsd,
        ),
        claim(
            "Thm3.1e",
            Side::p(G),
            Side::q(R),
            ANY,
            "α < 1, or α > 1 and p/q <= min(α/2, α-1)",
            |a, p, q| a < 1.0 || le(p / q, (a / 2.0).min(a - 1.0)),
            Holds,
            AllPsd,
        ),
        claim(
            "Thm3.1f",
            Side::q(R),
            Side::p(G),
            GT1,
            "p/q >= max(α/2, α-1)",
            |a, p, q| ge(p / q, (a / 2.0).max(a - 1.0)),
            Holds,
            DominatedPsd,
        ),
        claim(
            "Thm3.1g",
            Side::q(R),
            Side::p(SG),
            LT1,
            "p/q >= max(α, 1-α)",
            |a, p, q| ge(p / q, a.max(1.0 - a)),
            Holds,
            DominatedPsd,
        ),
        // sharp regions for G versus R
        claim(
            "Thm3.2.1",
            Side::p(G),
            Side::q(R),
            ANY,
            "α < 1, or α > 1 and p/q <= min(α/2, α-1)",
            |a, p, q| a < 1.0 || le(p / q, (a / 2.0).min(a - 1.0)),
            Holds,
            AllPsd,
        ),
        claim(
            "Thm3.2.1-nec",
            Side::p(G),
            Side::q(R),
            GT1,
            "p/q > min(α/2, α-1)",
            |a, p, q| p / q > (a / 2.0).min(a - 1.0),
            Ce,
            Pd2,
        ),
        claim(
            "Thm3.2.2",
            Side::q(R),
            Side::p(G),
            GT1,
            "p/q >= max(α/2, α-1)",
            |a, p, q| ge(p / q, (a / 2.0).max(a - 1.0)),
            Holds,
            DominatedPsd,
        ),
        claim(
            "Thm3.2.2-nec",
            Side::q(R),
            Side::p(G),
            ANY,
            "α < 1, or p/q < max(α/2, α-1)",
            |a, p, q| a < 1.0 || p / q < (a / 2.0).max(a - 1.0),
            Ce,
            Pd2,
        ),
        // SG versus R
        claim(
            "Thm3.3.1",
            Side::p(SG),
            Side::q(R),
            LT1,
            "p/q <= min(α, 1-α)",
            |a, p, q| le(p / q, a.min(1.0 - a)),
            Holds,
            DominatedPsd,
        ),
        claim(
            "Thm3.3.1-nec",
            Side::p(SG),
            Side::q(R),
            LT1,
            "p/q > min(α, 1-α)",
            |a, p, q| p / q > a.min(1.0 - a),
            Ce,
            Pd2,
        ),
        claim(
            "Thm3.3.2",
            Side::q(R),
            Side::p(SG),
            LT1,
            "p/q >= max(α, 1-α)",
            |a, p, q| ge(p / q, a.max(1.0 - a)),
            Holds,
            DominatedPsd,
        ),
        claim(
            "Thm3.3.2-nec",
            Side::q(R),
            Side::p(SG),
            LT1,
            "p/q < max(α, 1-α)",
            |a, p, q| p / q < a.max(1.0 - a),
            Ce,
            Pd2,
        ),
        claim("Thm3.4.1", Side::p(SG), Side::q(R), GT1, "p/q <= α", |a, p, q| le(p / q, a), Holds, DominatedPsd),
        claim("Thm3.4.2", Side::q(R), Side::p(SG), GT1, "all p, q", always, Ce, Pd2),
        claim("Prob3.5", Side::p(SG), Side::q(R), GT1, "p/q > α", |a, p, q| p / q > a, Open, DominatedPsd),
        // SGt versus R
        claim("Thm3.6.1", Side::p(SGT), Side::q(R), LT1, "p/q <= α", |a, p, q| le(p / q, a), Holds, DominatedPsd),
        claim("Thm3.6.1-nec", Side::p(SGT), Side::q(R), LT1, "p/q > α", |a, p, q| p / q > a, Ce, Pd2),
        claim("Thm3.6.2", Side::q(R), Side::p(SGT), LE_HALF, "q <= p", |_, p, q| le(q, p), Holds, DominatedPsd),
        claim(
            "Thm3.6.3",
            Side::q(R),
            Side::p(SGT),
            LT1,
            "α > 1/2 or p/q < 1/2",
            |a, p, q| a > 0.5 || p / q < 0.5,
            Ce,
            Pd2,
        ),
        claim("Thm3.7.1", Side::p(SGT), Side::q(R), GT1, "all p, q", always, Ce, Pd2),
        claim("Thm3.7.2", Side::q(R), Side::p(SGT), GT1, "p/q >= α", |a, p, q| ge(p / q, a), Holds, DominatedPsd),
        claim("Thm3.7.3", Side::q(R), Side::p(SGT), GT1, "p/q < 1/2", |_, p, q| p / q < 0.5, Ce, Pd2),
        // self-comparisons of SG and SGt
        claim(
            "Prop3.10.1",
            Side::p(SG),
            Side::q(SG),
            LT1,
            "p/q <= min(α/(1-α), (1-α)/α)",
            |a, p, q| le(p / q, (a / (1.0 - a)).min((1.0 - a) / a)),
            Holds,
            DominatedPsd,
        ),
        claim(
            "Prop3.10.2",
            Side::p(SGT),
            Side::q(SGT),
            LE_HALF,
            "p/q <= α",
            |a, p, q| le(p / q, a),
            Holds,
            DominatedPsd,
        ),
        claim(
            "Prop3.11.1",
            Side::p(G),
            Side::q(G),
            ANY,
            "α < 1 and p < q, or α > 1 and p > q",
            |a, p, q| (a < 1.0 && p < q) || (a > 1.0 && p > q),
            Ce,
            Pd2,
        ),
        claim(
            "Prop3.11.2",
            Side::p(SG),
            Side::q(SG),
            ANY,
            "α < 1 and p > q, or α > 1 and p < q",
            |a, p, q| (a < 1.0 && p > q) || (a > 1.0 && p < q),
            Ce,
            Pd2,
        ),
        claim(
            "Prop3.11.3",
            Side::p(SGT),
            Side::q(SGT),
            ANY,
            "α < 1 and p > q, or α > 1 and p < q",
            |a, p, q| (a < 1.0 && p > q) || (a > 1.0 && p < q),
            Ce,
            Pd2,
        ),
        // G versus SG and SGt
        claim("Prop3.13.1", Side::q(G), Side::p(SG), LT1, "all p, q", always, Holds, DominatedPsd),
        claim("Prop3.13.2", Side::q(G), Side::p(SG), GT1, "all p, q", always, Ce, Pd2),
        claim(
            "Prop3.13.3",
            Side::p(SG),
            Side::q(G),
            GT1,
            "p/q <= min(2, α/(α-1))",
            |a, p, q| le(p / q, 2f64.min(a / (a - 1.0))),
            Holds,
            DominatedPsd,
        ),
        claim("Prop3.14.1", Side::p(SGT), Side::q(G), ANY, "all p, q", always, Ce, Pd2),
        claim("Prop3.14.2", Side::q(G), Side::p(SGT), LE_HALF, "all p, q", always, Holds, DominatedPsd),
        claim(
            "Prop3.14.3",
            Side::q(G),
            Side::p(SGT),
            GT1,
            "q/p <= min(1/2, (α-1)/α)",
            |a, p, q| le(q / p, 0.5f64.min((a - 1.0) / a)),
            Holds,
            DominatedPsd,
        ),
        // SG versus SGt
        claim(
            "Prop3.15.1",
            Side::p(SG),
            Side::q(SGT),
            LT1,
            "α > 1/2 or p/q > 2(1-α)",
            |a, p, q| a > 0.5 || p / q > 2.0 * (1.0 - a),
            Ce,
            Pd2,
        ),
        claim(
            "Prop3.15.2",
            Side::q(SGT),
            Side::p(SG),
            LT1,
            "p/q >= max(1, (1-α)/α)",
            |a, p, q| ge(p / q, 1f64.max((1.0 - a) / a)),
            Holds,
            DominatedPsd,
        ),
        claim(
            "Prop3.15.2-nec",
            Side::q(SGT),
            Side::p(SG),
            LT1,
            "p/q < 2(1-α)",
            |a, p, q| p / q < 2.0 * (1.0 - a),
            Ce,
            Pd2,
        ),
        claim("Prop3.15.3", Side::p(SG), Side::q(SGT), GT1, "p <= q", |_, p, q| le(p, q), Holds, DominatedPsd),
        claim("Prop3.15.4", Side::q(SGT), Side::p(SG), GT1, "all p, q", always, Ce, Pd2),
        // Log-Euclidean comparisons
        claim("Prop3.17a", le_side, Side::p(R), ANY, "all p", always, Holds, AllPsd),
        claim("Prop3.17b", Side::p(G), le_side, LT1, "all p", always, Holds, AllPsd),
        claim("Prop3.17c", le_side, Side::p(G), ONE_TO_TWO, "all p", always, Holds, DominatedPsd),
        claim("Prop3.17d", le_side, Side::p(SG), LT1, "all p", always, Holds, DominatedPsd),
        claim("Cor3.18.1", le_side, Side::p(G), GT1, "all p", always, Holds, DominatedPsd),
        claim("Cor3.18.2", le_side, Side::p(SG), GT1, "all p", always, Ce, Pd2),
        claim("Cor3.18.3", Side::p(SGT), le_side, LT1, "all p", always, Ce, Pd2),
        claim("Cor3.18.4", le_side, Side::p(SGT), LE_HALF, "all p", always, Holds, DominatedPsd),
        claim("Cor3.18.5", le_side, Side::p(SGT), GT1, "all p", always, Holds, DominatedPsd),
        claim("Thm3.19", le_side, Side::p(SGT), HALF_TO_ONE, "all p", always, Ce, Pd2),
        // table cells not covered above
        claim("Table3.4:R<LE:a<1", Side::p(R), le_side, LT1, "all p", always, Ce, Pd2),
        claim("Table3.4:R<LE:a>1", Side::p(R), le_side, GT1, "all p", always, Ce, Pd2),
        claim("Table3.4:G<LE:a>1", Side::p(G), le_side, GT1, "all p", always, Ce, Pd2),
        claim("Table3.4:LE<G:a<1", le_side, Side::p(G), LT1, "all p", always, Ce, Pd2),
        claim("Table3.4:SG<LE:a<1", Side::p(SG), le_side, LT1, "all p", always, Ce, Pd2),
        claim("Table3.4:SG<LE:a>1", Side::p(SG), le_side, GT1, "all p", always, Open, DominatedPsd),
        claim("Table3.4:SGt<LE:a>1", Side::p(SGT), le_side, GT1, "all p", always, Ce, Pd2),
    ]
}

pub fn find_claim(id: &str) -> Option<ClaimRecord> {
    builtin_catalog().into_iter().find(|c| c.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn ids_unique_and_enough() {
        let cat = builtin_catalog();
        assert!(cat.len() >= 40);
        let ids: BTreeSet<_> = cat.iter().map(|c| c.id).collect();
        assert_eq!(ids.len(), cat.len());
    }

    #[test]
    fn documented_entries() {
        let c = find_claim("Thm3.1a").unwrap();
        assert_eq!(c.assertion, Holds);
        assert_eq!(c.domain, AllPsd);
        assert!(c.applies(0.5, 1.0, 2.0) && !c.applies(0.5, 2.0, 1.0));

        let c = find_claim("Thm3.4.2").unwrap();
        assert_eq!(c.assertion, Ce);
        assert_eq!(c.domain, Pd2);
        assert!(c.applies(1.5, 0.3, 3.0) && !c.applies(0.5, 1.0, 1.0));

        // the LE ≺ SGt row splits at α = 1/2
        let lo = find_claim("Cor3.18.4").unwrap();
        let hi = find_claim("Thm3.19").unwrap();
        assert!(lo.applies(0.5, 1.0, 1.0) && !hi.applies(0.5, 1.0, 1.0));
        assert!(!lo.applies(0.51, 1.0, 1.0) && hi.applies(0.51, 1.0, 1.0));
    }

    #[test]
    fn sides_share_alpha() {
        for c in builtin_catalog() {
            let (l, r) = c.specs(if c.alpha.contains(0.3) { 0.3 } else { 1.5 }, 1.0, 2.0).unwrap();
            assert_eq!(l.alpha, r.alpha, "{}", c.id);
        }
    }
}
