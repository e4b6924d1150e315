use bellrmt_core::bell::{maxent_target, BellKernel};
use bellrmt_core::engine::{estimate_moments, run_sweep, SweepConfig};
use bellrmt_core::ensembles::{shuffle_spectrum, EnsembleKind, EnsembleSpec, SchmidtSpectrum};
use bellrmt_core::stream::RandomStream;
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = EnsembleKind> {
    prop_oneof![
        Just(EnsembleKind::Hs),
        Just(EnsembleKind::MaxEntangled),
        (1u32..5).prop_map(|k| EnsembleKind::Structured { k }),
    ]
}

fn sorted_bits(s: &SchmidtSpectrum) -> Vec<u64> {
    let mut v: Vec<u64> = s.lambdas().iter().map(|x| x.to_bits()).collect();
    v.sort_unstable();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectra_lie_on_the_simplex(kind in kind(), n in 2usize..24, seed in any::<u64>()) {
        let spec = EnsembleSpec::new(kind, n).unwrap();
        let s = spec.sample(&mut RandomStream::new(seed, 0).rng()).unwrap();
        prop_assert_eq!(s.n(), n);
        prop_assert!(s.lambdas().iter().all(|&l| l >= 0.0 && l.is_finite()));
        prop_assert!((s.total() - 1.0).abs() < 1e-12);
        prop_assert!(s.lambdas().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn shuffling_keeps_the_multiset(n in 2usize..40, seed in any::<u64>()) {
        let mut rng = RandomStream::new(seed, 1).rng();
        let s = EnsembleSpec::new(EnsembleKind::Hs, n).unwrap().sample(&mut rng).unwrap();
        let t = shuffle_spectrum(&s, &mut rng);
        prop_assert_eq!(sorted_bits(&s), sorted_bits(&t));
    }

    #[test]
    fn target_is_finite_and_bounded(kind in kind(), n in 2usize..24, seed in any::<u64>()) {
        let mut rng = RandomStream::new(seed, 2).rng();
        let s = EnsembleSpec::new(kind, n).unwrap().sample(&mut rng).unwrap();
        let a = BellKernel::new(n).unwrap().target_value(&shuffle_spectrum(&s, &mut rng)).unwrap();
        prop_assert!(a.is_finite());
        prop_assert!(a <= 2.0);
        // The uniform spectrum is the smallest reachable value for N = 2.
        if n == 2 {
            prop_assert!(a >= maxent_target(2).unwrap() - 1e-12);
        }
    }

    #[test]
    fn structured_k1_is_maximally_entangled(n in 2usize..20, seed in any::<u64>()) {
        let spec = EnsembleSpec::new(EnsembleKind::Structured { k: 1 }, n).unwrap();
        let s = spec.sample(&mut RandomStream::new(seed, 3).rng()).unwrap();
        prop_assert_eq!(s, SchmidtSpectrum::uniform(n).unwrap());
    }

    #[test]
    fn constant_moments(c in -3.0f64..3.0, len in 2usize..50, order in 1u32..5) {
        let m = estimate_moments(&vec![c; len], &[order]).unwrap();
        let expected = c.powi(order as i32);
        prop_assert!((m.raw[&order] - expected).abs() <= 1e-15 * expected.abs().max(1.0));
        prop_assert_eq!(m.central_second, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sweep_records_are_consistent(seed in any::<u64>(), samples in 2usize..120, bins in 1usize..30) {
        let cfg = SweepConfig {
            ensembles: vec![EnsembleKind::Hs, EnsembleKind::Structured { k: 2 }, EnsembleKind::MaxEntangled],
            n_grid: vec![2, 7, 13],
            samples_per_point: samples,
            master_seed: seed,
            histogram_bins: bins,
            ..SweepConfig::default()
        };
        let r = run_sweep(&cfg).unwrap();
        prop_assert_eq!(r.points.len(), 9);
        for p in &r.points {
            prop_assert_eq!(p.histogram.total(), samples as u64);
            prop_assert!(p.mean.is_finite() && p.std.is_finite() && p.stderr.is_finite());
            prop_assert!((p.stderr - p.std / (samples as f64).sqrt()).abs() <= 1e-15);
            prop_assert!((0.0..=1.0).contains(&p.violation_fraction));
            let widest = *p.histogram.counts.iter().max().unwrap() as f64 / samples as f64;
            let below = p.histogram.mass_below(1.0);
            prop_assert!(below <= p.violation_fraction + 1e-12);
            prop_assert!(p.violation_fraction - below <= widest + 1e-12);
            if p.kind == EnsembleKind::MaxEntangled {
                prop_assert_eq!(p.mean, maxent_target(p.n).unwrap());
                prop_assert_eq!(p.violation_fraction, 1.0);
            }
        }
    }
}
