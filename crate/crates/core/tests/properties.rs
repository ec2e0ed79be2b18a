use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use summlab::decomp::{bruteforce_distance, classify_cube, whitney_decompose, CapSystem, GridMask, MAX_OVERLAP};
use summlab::distance::{make_builtin, DistanceKind};
use summlab::riesz::{riesz_mean_torus, riesz_multiplier, s_mean, RieszSpec};
use summlab::spectral::{
    decode, encode, lp_norm, synthesize, weak_lp_quasinorm, Container, FieldMode, GridFunction, SpectralField,
    TorusGrid,
};
use summlab::Complex64;

fn field(seed: u64, half: Vec<usize>) -> SpectralField {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut c = SpectralField::zeros(FieldMode::Torus, half);
    for v in c.coeffs.iter_mut() {
        *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    c
}

fn kind() -> impl Strategy<Value = DistanceKind> {
    prop_oneof![
        Just(DistanceKind::Euclidean),
        Just(DistanceKind::BochnerRiesz),
        (1u32..4).prop_map(DistanceKind::SmoothPowerMean),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn riesz_means_are_linear(seed in any::<u64>(), t in 0.5f64..9.0, lam in -0.5f64..3.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let spec = RieszSpec::new(lam, make_builtin(DistanceKind::Euclidean, 2).unwrap()).unwrap();
        let f = field(seed, vec![6, 6]);
        let g = field(seed ^ 0x5555, vec![6, 6]);
        let (za, zb) = (Complex64::new(a, 0.3), Complex64::new(b, -1.0));
        let lhs = riesz_mean_torus(&f.linear_combination(za, &g, zb).unwrap(), t, &spec).unwrap();
        let rhs = riesz_mean_torus(&f, t, &spec).unwrap()
            .linear_combination(za, &riesz_mean_torus(&g, t, &spec).unwrap(), zb).unwrap();
        for (x, y) in lhs.coeffs.iter().zip(&rhs.coeffs) {
            prop_assert!((x - y).norm() <= 1e-12 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn hermitian_fields_stay_real(seed in any::<u64>(), t in 0.5f64..9.0, k in kind()) {
        let spec = RieszSpec::new(0.75, make_builtin(k, 2).unwrap()).unwrap();
        let raw = field(seed, vec![5, 5]);
        let c = SpectralField::from_fn(FieldMode::Torus, vec![5, 5], |l| {
            let p = raw.coeffs[raw.index_of(l).unwrap()];
            let m = raw.coeffs[raw.index_of(&[-l[0], -l[1]]).unwrap()];
            0.5 * (p + m.conj())
        });
        let grid = TorusGrid::new(2, 16).unwrap();
        for out in [riesz_mean_torus(&c, t, &spec).unwrap(), s_mean(&c, t, &spec).unwrap()] {
            let g = synthesize(&out, &grid).unwrap();
            prop_assert!(g.values.iter().all(|v| v.im.abs() <= 1e-10));
        }
    }

    #[test]
    fn multiplier_grows_with_t(r in 0.0f64..2.0, lam in 0.0f64..4.0, s in 1.0f64..3.0) {
        let m0 = riesz_multiplier(r, lam);
        let m1 = riesz_multiplier(r / s, lam);
        prop_assert!((0.0..=1.0).contains(&m0));
        prop_assert!(m1 >= m0);
    }

    #[test]
    fn builtin_distances_are_homogeneous(k in kind(), d in 1usize..4, seed in any::<u64>()) {
        let rho = make_builtin(k, d).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..8).map(|_| (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        prop_assert!(rho.homogeneity_residual(&pts, &[0.25, 0.5, 3.0, 17.0]) <= 1e-12);
    }

    #[test]
    fn caps_partition_unity(j in 2u32..9, d in 2usize..4, seed in any::<u64>()) {
        let rho = make_builtin(DistanceKind::Euclidean, d).unwrap();
        let caps = CapSystem::new(j, &rho).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for _ in 0..16 {
            let xi: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w = caps.weights(&xi);
            prop_assert!(!w.is_empty() && w.len() <= MAX_OVERLAP);
            let sum: f64 = w.iter().map(|p| p.1).sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn whitney_cubes_tile_the_mask(cells in proptest::collection::vec(any::<bool>(), 256)) {
        prop_assume!(cells.iter().any(|&b| b) && cells.iter().any(|&b| !b));
        let mask = GridMask::new(2, 16, cells).unwrap();
        let cubes = whitney_decompose(&mask).unwrap();
        // total volume in half-cell units, each mask cell is 4
        let vol: i64 = cubes.iter().map(|w| w.side * w.side).sum();
        prop_assert_eq!(vol, 4 * mask.count() as i64);
        for w in &cubes {
            let dist = bruteforce_distance(&mask, w);
            prop_assert_eq!(dist, w.dist);
            prop_assert!(w.side <= dist && dist <= 4 * w.side);
        }
    }

    #[test]
    fn median_class_counts(values in proptest::collection::vec(0.0f64..1e3, 1..64)) {
        let half = values.len() as f64 / 2.0;
        let above = |mu: i32| values.iter().filter(|&&v| v > 2f64.powi(mu)).count() as f64;
        match classify_cube(&values) {
            Some(mu) => {
                prop_assert!(above(mu) >= half);
                prop_assert!(above(mu + 1) < half);
            }
            None => prop_assert!(above(-1100) < half),
        }
    }

    #[test]
    fn containers_roundtrip(seed in any::<u64>(), h0 in 0usize..5, h1 in 0usize..5) {
        let c = field(seed, vec![h0, h1]);
        prop_assert_eq!(decode(&encode(&Container::Field(c.clone()))).unwrap(), Container::Field(c));
    }

    #[test]
    fn weak_quasinorm_is_below_the_norm(vals in proptest::collection::vec(0.0f64..10.0, 64), p in 0.5f64..3.0) {
        let g = GridFunction::from_real(TorusGrid::new(1, 64).unwrap(), vals).unwrap();
        prop_assert!(weak_lp_quasinorm(&g, p).unwrap() <= lp_norm(&g, p).unwrap() * (1.0 + 1e-12));
    }
}
