use std::sync::Arc;

use cpchain::config::ExperimentConfig;
use cpchain::distance::{box_dim_estimate, cantor_endpoints, distance_set_build, geometric_scales, PointCloud};
use cpchain::metrics::{first_disagreement_by_tables, prokhorov_distance};
use cpchain::phase::{Angle, Frac, PhaseState};
use cpchain::symbolic::{blowup, words_up_to, BernoulliSpec, CylinderMeasure, IWord, JWord, Rational};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SHAPES: [(usize, usize); 4] = [(2, 3), (2, 4), (3, 4), (3, 5)];

fn spec_from_seed(seed: u64) -> Arc<BernoulliSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = SHAPES[rng.gen_range(0..SHAPES.len())];
    Arc::new(BernoulliSpec::random(&mut rng, m, n, 5, 0.25).unwrap())
}

fn random_psi(spec: &Arc<BernoulliSpec>, rng: &mut ChaCha8Rng, generation: usize) -> CylinderMeasure {
    let w = spec.sample_horizontal(rng, generation + 3);
    let k = if rng.gen_bool(0.5) { None } else { Some(rng.gen_range(0..=generation + 3)) };
    CylinderMeasure::psi(spec.clone(), w.digits(), k, generation).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cylinder_mass_is_additive(seed in any::<u64>(), li in 0usize..5, lj in 0usize..5) {
        let spec = spec_from_seed(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let p = spec.sample_point(&mut rng, 6);
        let (i, j) = (&p.i.digits()[..li], &p.j.digits()[..lj]);
        let parent = spec.cylinder_mass_digits(i, j);
        let by_i: Rational = (0..spec.m() as u8).map(|a| spec.cylinder_mass_digits(&[i, &[a]].concat(), j)).sum();
        let by_j: Rational = (0..spec.n() as u8).map(|b| spec.cylinder_mass_digits(i, &[j, &[b]].concat())).sum();
        prop_assert_eq!(&parent, &by_i);
        prop_assert_eq!(&parent, &by_j);
    }

    #[test]
    fn disintegration_recovers_cylinders(seed in any::<u64>(), li in 1usize..4, lj in 0usize..4) {
        let spec = spec_from_seed(seed);
        let lj = lj.min(li);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let p = spec.sample_point(&mut rng, 6);
        let (i, j) = (&p.i.digits()[..li], &p.j.digits()[..lj]);
        // refine the horizontal cylinder to generation |i| and integrate fiber masses
        let integrated: Rational = spec.horizontal_mass(i) * spec.fiber_mass_digits(i, j).unwrap();
        prop_assert_eq!(spec.cylinder_mass_digits(i, j), integrated);
    }

    #[test]
    fn truncated_psi_stabilizes(seed in any::<u64>(), g in 1usize..3) {
        let spec = spec_from_seed(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let w = spec.sample_horizontal(&mut rng, 8);
        let full = CylinderMeasure::psi(spec.clone(), w.digits(), None, g).unwrap();
        for k in g..=6 {
            let trunc = CylinderMeasure::psi(spec.clone(), w.digits(), Some(k), g).unwrap();
            prop_assert!(trunc.agrees_through(&full, g).unwrap());
        }
    }

    #[test]
    fn blowup_composes(seed in any::<u64>(), a in 0usize..3, b in 0usize..3) {
        let spec = spec_from_seed(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
        let p = spec.sample_point(&mut rng, 6);
        let (i, j) = (p.i.digits(), p.j.digits());
        let mu = Arc::new(CylinderMeasure::bernoulli(spec.clone(), 6));
        let once = Arc::new(blowup(&mu, &IWord::from(&i[..a]), &JWord::from(&j[..b])).unwrap());
        let twice = blowup(&once, &IWord::from(&i[a..a + 1]), &JWord::from(&j[b..b + 1])).unwrap();
        let direct = blowup(&mu, &IWord::from(&i[..a + 1]), &JWord::from(&j[..b + 1])).unwrap();
        for iw in words_up_to(spec.m(), 2) {
            for jw in words_up_to(spec.n(), 2) {
                prop_assert_eq!(twice.mass(&iw, &jw).unwrap(), direct.mass(&iw, &jw).unwrap());
            }
        }
    }

    #[test]
    fn prokhorov_is_a_pseudometric(seed in any::<u64>()) {
        let spec = spec_from_seed(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
        let g = 3;
        let (x, y, z) = (random_psi(&spec, &mut rng, g), random_psi(&spec, &mut rng, g), random_psi(&spec, &mut rng, g));
        let dxy = prokhorov_distance(&x, &y).unwrap();
        prop_assert_eq!(dxy, prokhorov_distance(&y, &x).unwrap());
        prop_assert!(dxy <= prokhorov_distance(&x, &z).unwrap() + prokhorov_distance(&z, &y).unwrap());
        prop_assert_eq!(prokhorov_distance(&x, &x).unwrap(), 0.0);
        prop_assert_eq!(dxy == 0.0, first_disagreement_by_tables(&x, &y).unwrap().is_none());
    }

    #[test]
    fn rotation_counters_agree(t in any::<u64>(), k in 0u64..10_000) {
        let angle = Arc::new(Angle::new(2, 3, 256).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(t);
        let state = PhaseState::new(angle, Frac::random(&mut rng, 256)).advanced(k);
        prop_assert_eq!(state.floor_formula().unwrap().1, state.hit_count().unwrap());
    }

    #[test]
    fn distances_survive_isometries(seed in any::<u64>(), theta in 0.0f64..6.3, dx in -2.0f64..2.0, dy in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cloud = PointCloud::new((0..40).map(|_| (rng.gen(), rng.gen())).collect(), 0, None);
        let moved = cloud.isometry(theta, (dx, dy));
        let a = distance_set_build(&cloud, 1 << 20, 0).unwrap();
        let b = distance_set_build(&moved, 1 << 20, 0).unwrap();
        prop_assert_eq!(a.distances().len(), b.distances().len());
        for (x, y) in a.distances().iter().zip(b.distances()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn union_keeps_distances(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c1 = PointCloud::new((0..25).map(|_| (rng.gen(), rng.gen())).collect(), 0, None);
        let c2 = PointCloud::new((0..25).map(|_| (rng.gen(), rng.gen())).collect(), 0, None);
        let all = distance_set_build(&c1.union(&c2), 1 << 20, 0).unwrap();
        for part in [&c1, &c2] {
            for d in distance_set_build(part, 1 << 20, 0).unwrap().distances() {
                let pos = all.distances().partition_point(|x| x < &(d - 1e-12));
                prop_assert!(pos < all.distances().len() && (all.distances()[pos] - d).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn config_roundtrips(seed in any::<u64>(), steps in 1usize..100_000, q in 1u32..12, s in 0.0f64..1.0) {
        let spec = spec_from_seed(seed);
        let mut c = ExperimentConfig::with_spec(&spec);
        c.seed = seed;
        c.scenery.steps = steps;
        c.project.q = q;
        c.project.s_grid = vec![s, 1.0 - s];
        let back = ExperimentConfig::parse(&c.to_ini()).unwrap();
        prop_assert_eq!(back, c);
    }
}

#[test]
fn box_count_is_scale_consistent_on_cantor() {
    let cantor = cantor_endpoints(10);
    let base = box_dim_estimate(&cantor, &geometric_scales(3f64.powi(-8), 3f64.powi(-3), 11)).unwrap();
    let finer = box_dim_estimate(&cantor, &geometric_scales(3f64.powi(-8) / 2.0, 3f64.powi(-3), 11)).unwrap();
    assert!((base - finer).abs() <= 0.05, "{base} vs {finer}");
}
