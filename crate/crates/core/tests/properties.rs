//! Property tests for the structural invariants of the means, divergences
//! and channels.

use matmean::channels::{pinching_channel, random_cptp, Dilation};
use matmean::convexity::{block_construction_defects, sample_instance, Mode, PairSampler};
use matmean::divergence::{divergence_from_mean, measured_divergence_lb, petz, sandwiched, MeasurementStrategy};
use matmean::equality::trace_order_probe;
use matmean::majorization::{log_majorize, DET_TOL, MAJ_TOL};
use matmean::sample::{derive_rng, label_stream, random_unitary, sample_psd, SeedRng};
use matmean::spectral::{max_abs, CMat};
use matmean::{compute_mean, MeanKind, MeanSpec, Psd};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

const KAPPA: f64 = 10.0;

fn rng(seed: u64, label: &str) -> SeedRng {
    derive_rng(seed, label_stream(label), 0)
}

fn pair(n: usize, rng: &mut SeedRng) -> (Psd, Psd) {
    pair_with(n, KAPPA, rng)
}

fn pair_with(n: usize, kappa: f64, rng: &mut SeedRng) -> (Psd, Psd) {
    (sample_psd(n, Some(kappa), rng).unwrap(), sample_psd(n, Some(kappa), rng).unwrap())
}

fn state(n: usize, rng: &mut SeedRng) -> Psd {
    state_with(n, KAPPA, rng)
}

fn state_with(n: usize, kappa: f64, rng: &mut SeedRng) -> Psd {
    let m = sample_psd(n, Some(kappa), rng).unwrap();
    m.scale(1.0 / m.trace())
}

/// Condition number for inputs of `spec`, capped so that the powered
/// conditioning `κ^{αp}` of `factors`-fold tensor products stays below
/// 1e3. Beyond that, double precision cannot resolve 1e-9 relative errors
/// for `α p ≳ 4`.
fn kappa_for(spec: &MeanSpec, factors: usize) -> f64 {
    10f64.powf((3.0 / (spec.alpha.max(1.0) * spec.p.max(1.0) * factors as f64)).min(1.0))
}

fn kind() -> impl Strategy<Value = MeanKind> {
    prop::sample::select(MeanKind::GEOMETRIC_TYPE.to_vec())
}

/// Valid quasi-geometric specs with α away from 1.
fn spec() -> impl Strategy<Value = MeanSpec> {
    (kind(), prop_oneof![0.1..0.9f64, 1.1..2.5f64], 0.3..2.0f64).prop_map(|(k, a, p)| MeanSpec::new(k, a, p).unwrap())
}

fn trace(spec: &MeanSpec, a: &Psd, b: &Psd) -> f64 {
    compute_mean(spec, a, b).unwrap().value.trace()
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(1e-300)
}

fn direct_sum(x: &Psd, y: &Psd) -> Psd {
    let (n, m) = (x.dim(), y.dim());
    let mut z = CMat::zeros(n + m, n + m);
    z.view_mut((0, 0), (n, n)).copy_from(x.matrix());
    z.view_mut((n, n), (m, m)).copy_from(y.matrix());
    Psd::from_matrix(z).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, rng_seed: RngSeed::Fixed(0x6d61_746d_6561_6e), ..ProptestConfig::default() })]

    #[test]
    fn normalization(spec in spec(), seed in any::<u64>(), n in 2usize..5) {
        let a = sample_psd(n, Some(kappa_for(&spec, 1)), &mut rng(seed, "norm")).unwrap();
        prop_assert!(rel(trace(&spec, &a, &a), a.trace()) < 1e-10);
    }

    #[test]
    fn joint_homogeneity(spec in spec(), seed in any::<u64>(), s in 0.1..10.0f64, t in 0.1..10.0f64) {
        let (a, b) = pair_with(3, kappa_for(&spec, 1), &mut rng(seed, "homog"));
        let lhs = trace(&spec, &a.scale(s), &b.scale(t));
        let rhs = s.powf(1.0 - spec.alpha) * t.powf(spec.alpha) * trace(&spec, &a, &b);
        prop_assert!(rel(lhs, rhs) < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn unitary_covariance(spec in spec(), seed in any::<u64>()) {
        let mut r = rng(seed, "unitary");
        let (a, b) = pair_with(3, kappa_for(&spec, 1), &mut r);
        let u = random_unitary(3, &mut r);
        let m = compute_mean(&spec, &a, &b).unwrap().value;
        let mu = compute_mean(&spec, &a.congruence(&u).unwrap(), &b.congruence(&u).unwrap()).unwrap().value;
        let expected = m.congruence(&u).unwrap();
        let diff = max_abs(&(mu.matrix() - expected.matrix()));
        prop_assert!(diff < 1e-9 * m.lambda_max(), "{diff}");
    }

    #[test]
    fn direct_sum_additivity(spec in spec(), seed in any::<u64>()) {
        let mut r = rng(seed, "dsum");
        let (a1, b1) = pair_with(2, kappa_for(&spec, 1), &mut r);
        let (a2, b2) = pair_with(2, kappa_for(&spec, 1), &mut r);
        let lhs = trace(&spec, &direct_sum(&a1, &a2), &direct_sum(&b1, &b2));
        prop_assert!(rel(lhs, trace(&spec, &a1, &b1) + trace(&spec, &a2, &b2)) < 1e-10);
    }

    #[test]
    fn tensor_multiplicativity(spec in spec(), seed in any::<u64>()) {
        let mut r = rng(seed, "tensor");
        let (a1, b1) = pair_with(2, kappa_for(&spec, 2), &mut r);
        let (a2, b2) = pair_with(2, kappa_for(&spec, 2), &mut r);
        let lhs = trace(&spec, &a1.kron(&a2).unwrap(), &b1.kron(&b2).unwrap());
        let err = rel(lhs, trace(&spec, &a1, &b1) * trace(&spec, &a2, &b2));
        prop_assert!(err < 1e-9, "relative error {err:e}");
    }

    #[test]
    fn commuting_inputs_give_the_classical_mean(spec in spec(), seed in any::<u64>(), n in 2usize..5) {
        let mut r = rng(seed, "commuting");
        let u = random_unitary(n, &mut r);
        let da: Vec<f64> = (0..n).map(|i| 0.2 + i as f64 * 0.7).collect();
        let db: Vec<f64> = (0..n).map(|i| 3.0 - i as f64 * 0.6).collect();
        let a = Psd::diag(&da).unwrap().congruence(&u).unwrap();
        let b = Psd::diag(&db).unwrap().congruence(&u).unwrap();
        let expected: f64 = da.iter().zip(&db).map(|(x, y)| x.powf(1.0 - spec.alpha) * y.powf(spec.alpha)).sum();
        prop_assert!(rel(trace(&spec, &a, &b), expected) < 1e-10);
    }

    #[test]
    fn divergence_additivity(spec in spec(), seed in any::<u64>()) {
        let mut r = rng(seed, "additivity");
        let k = kappa_for(&spec, 2);
        let (a1, b1, a2, b2) = (state_with(2, k, &mut r), state_with(2, k, &mut r), state_with(2, k, &mut r), state_with(2, k, &mut r));
        let d = |a: &Psd, b: &Psd| divergence_from_mean(&spec, a, b).unwrap().value;
        let joint = d(&a1.kron(&a2).unwrap(), &b1.kron(&b2).unwrap());
        prop_assert!((joint - d(&a1, &b1) - d(&a2, &b2)).abs() < 1e-8);
    }

    #[test]
    fn data_processing_sandwiched(seed in any::<u64>(), alpha in prop_oneof![0.5..0.99f64, 1.01..3.0f64], n in 2usize..4) {
        let mut r = rng(seed, "dpi-sandwiched");
        let (a, b) = (state(n, &mut r), state(n, &mut r));
        let ch = random_cptp(n, 2, 2, &mut r).unwrap();
        let before = sandwiched(&a, &b, alpha).unwrap().value;
        let after = sandwiched(&ch.apply(&a).unwrap(), &ch.apply(&b).unwrap(), alpha).unwrap().value;
        prop_assert!(after <= before + 1e-9, "{after} > {before}");
    }

    #[test]
    fn data_processing_petz(seed in any::<u64>(), alpha in prop_oneof![0.05..0.99f64, 1.01..2.0f64], n in 2usize..4) {
        let mut r = rng(seed, "dpi-petz");
        let (a, b) = (state(n, &mut r), state(n, &mut r));
        let ch = pinching_channel(&sample_psd(n, None, &mut r).unwrap()).unwrap();
        let before = petz(&a, &b, alpha).unwrap().value;
        let after = petz(&ch.apply(&a).unwrap(), &ch.apply(&b).unwrap(), alpha).unwrap().value;
        prop_assert!(after <= before + 1e-9, "{after} > {before}");
    }

    #[test]
    fn measured_below_sandwiched(seed in any::<u64>(), alpha in prop_oneof![0.5..0.99f64, 1.01..3.0f64]) {
        let mut r = rng(seed, "measured");
        let (a, b) = (state(2, &mut r), state(2, &mut r));
        let lb = measured_divergence_lb(&a, &b, alpha, MeasurementStrategy::ProjectiveGrid { directions: 32 }, &mut r).unwrap();
        prop_assert!(lb.value.value <= sandwiched(&a, &b, alpha).unwrap().value + 1e-9);
    }

    #[test]
    fn block_construction_is_the_midpoint(spec in spec(), seed in any::<u64>(), structured in any::<bool>()) {
        let mut r = rng(seed, "block");
        let sampler = if structured { PairSampler::Structured } else { PairSampler::NearCommuting };
        let inst = sample_instance(sampler, &mut r).unwrap();
        let (via, direct) = block_construction_defects(&spec, Mode::natural(spec.alpha), &inst).unwrap();
        prop_assert!((via - direct).abs() < 1e-7, "{via} vs {direct}");
    }

    #[test]
    fn dilation_twirl(seed in any::<u64>(), env in 1usize..3) {
        let mut r = rng(seed, "dilation");
        let ch = random_cptp(2, 2, env, &mut r).unwrap();
        let dil = Dilation::of(&ch, 2).unwrap();
        let x = sample_psd(2, Some(KAPPA), &mut r).unwrap();
        prop_assert!(dil.twirl_deviation(x.matrix()).unwrap() < 1e-10);
        let direct = ch.apply(&x).unwrap();
        prop_assert!(max_abs(&(dil.apply(x.matrix()) - direct.matrix())) < 1e-10);
    }

    #[test]
    fn pinching_twirl(seed in any::<u64>()) {
        let mut r = rng(seed, "pinch-dilation");
        let ch = pinching_channel(&sample_psd(2, None, &mut r).unwrap()).unwrap();
        let dil = Dilation::of(&ch, 1).unwrap();
        let x = sample_psd(2, Some(KAPPA), &mut r).unwrap();
        prop_assert!(dil.twirl_deviation(x.matrix()).unwrap() < 1e-10);
    }

    #[test]
    fn trace_order_in_p(seed in any::<u64>(), alpha in prop_oneof![0.2..0.9f64, 1.1..2.0f64]) {
        let (a, b) = pair(3, &mut rng(seed, "trace-order"));
        for k in [MeanKind::Renyi, MeanKind::Geometric] {
            let rep = trace_order_probe(k, alpha, &a, &b, &[0.5, 1.0, 2.0]).unwrap();
            prop_assert!(rep.min_margin > -1e-10, "{k} α={alpha}: {}", rep.min_margin);
        }
    }

    #[test]
    fn geometric_below_renyi(seed in any::<u64>(), alpha in 0.1..0.9f64, p in 0.3..2.0f64) {
        let (a, b) = pair(3, &mut rng(seed, "g-below-r"));
        let g = compute_mean(&MeanSpec::new(MeanKind::Geometric, alpha, p).unwrap(), &a, &b).unwrap().value;
        let rr = compute_mean(&MeanSpec::new(MeanKind::Renyi, alpha, p).unwrap(), &a, &b).unwrap().value;
        prop_assert!(log_majorize(&g, &rr, MAJ_TOL, DET_TOL).unwrap().holds);
    }
}
