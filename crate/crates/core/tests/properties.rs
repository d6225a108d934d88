use std::sync::OnceLock;

use num_traits::Zero;
use proptest::prelude::*;

use domex_core::exchange::{FMap, DEFAULT_EPSILON};
use domex_core::matrix::IntMatrix;
use domex_core::poly::char_poly;
use domex_core::spectral::SpectralProfile;
use domex_core::tower::TowerFrame;
use domex_core::word::abelianization;
use domex_core::*;

fn substitution() -> impl Strategy<Value = Substitution> {
    (2usize..=4)
        .prop_flat_map(|d| {
            let img = proptest::collection::vec(0..d as u32, 1..=4);
            (Just(d), proptest::collection::vec(img, d))
        })
        .prop_filter_map("not a substitution", |(d, mut imgs)| {
            imgs[0][0] = 0;
            if imgs[0].len() < 2 {
                imgs[0].push(1);
            }
            let alpha = std::sync::Arc::new(Alphabet::numbered(d));
            let words = imgs.into_iter().map(|w| w.into_iter().map(Letter).collect()).collect();
            let m = Morphism::new(alpha.clone(), alpha, words).ok()?;
            Substitution::new(m, Letter(0)).ok()
        })
}

fn word_over(d: usize, max: usize) -> impl Strategy<Value = Vec<Letter>> {
    proptest::collection::vec((0..d as u32).prop_map(Letter), 0..max)
}

proptest! {
    #[test]
    fn abelianization_is_a_homomorphism(
        (s, u, v) in substitution().prop_flat_map(|s| {
            let d = s.size();
            (Just(s), word_over(d, 12), word_over(d, 12))
        })
    ) {
        let d = s.size();
        let mut uv = u.clone();
        uv.extend_from_slice(&v);
        let (au, av) = (abelianization(&u, d), abelianization(&v, d));
        let sum: Vec<i64> = au.iter().zip(&av).map(|(a, b)| a + b).collect();
        prop_assert_eq!(abelianization(&uv, d), sum);
        let image = s.apply(&u).unwrap();
        prop_assert_eq!(abelianization(&image, d), s.incidence().checked_mul_vec(&au).unwrap());
    }

    #[test]
    fn dsl_round_trip(s in substitution()) {
        let text = dsl::serialize(&s);
        let back = dsl::parse(&text).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn fixed_point_is_fixed(s in substitution(), len in 1usize..400) {
        let x = s.fixed_point_prefix(len).unwrap();
        let longer = s.fixed_point_prefix(len + 17).unwrap();
        prop_assert!(x.is_prefix_of(&longer));
        let image = s.apply(&x).unwrap();
        prop_assert_eq!(&image[..len], &x[..]);
        prop_assert_eq!(x[0], s.seed());
    }

    #[test]
    fn cayley_hamilton(rows in proptest::collection::vec(proptest::collection::vec(-4i64..5, 4), 4), d in 1usize..=4) {
        let rows: Vec<Vec<i64>> = rows.into_iter().take(d).map(|r| r.into_iter().take(d).collect()).collect();
        let m = IntMatrix::from_rows(&rows).unwrap();
        let p = char_poly(&m);
        prop_assert_eq!(p.degree(), d);
        prop_assert!(p.eval_matrix(&m).iter().flatten().all(Zero::is_zero));
    }

    #[test]
    fn factors_extend_to_the_right(s in substitution(), n in 1usize..5) {
        prop_assume!(s.is_primitive());
        let short = s.language_factors(n).unwrap();
        let long = s.language_factors(n + 1).unwrap();
        for w in &short {
            prop_assert!(long.iter().any(|v| v.starts_with(w)));
        }
    }
}

#[test]
fn incidence_of_powers_is_exact() {
    for name in presets::names() {
        let s = presets::load(name).unwrap();
        let m = s.incidence();
        for n in 1..=10 {
            let sn = s.morphism().power(n).unwrap();
            assert_eq!(sn.incidence(), m.checked_pow(n).unwrap(), "{name} n={n}");
        }
    }
}

#[test]
fn return_words_form_circular_codes() {
    for name in presets::names() {
        let s = presets::load(name).unwrap();
        let rs = ReturnSystem::new(&s, &[s.seed()]).unwrap();
        assert_eq!(rs.circular_code_check(1000, 100_000, 11).unwrap(), 1000, "{name}");
    }
}

struct Tri {
    frame: TowerFrame,
    fmap: FMap,
    max_len: i64,
}

fn tribonacci() -> &'static Tri {
    static CELL: OnceLock<Tri> = OnceLock::new();
    CELL.get_or_init(|| {
        let s = presets::load("tribonacci").unwrap();
        let p = properize(&s).unwrap();
        let sp = SpectralProfile::compute(&s, &p.proper_sub, Some(&p.phi)).unwrap();
        let frame = TowerFrame::new(&p.proper_sub, 1).unwrap();
        let fmap = FMap::new(&frame, &sp, None, DEFAULT_EPSILON).unwrap();
        let max_len = p.proper_sub.morphism().max_image_len() as i64;
        Tri { frame, fmap, max_len }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn entrance_identity_at_random_positions(j in 0u64..1_000_000_000_000, n in 2usize..=8) {
        let t = tribonacci();
        let addr = t.frame.address(j).unwrap();
        prop_assert_eq!(t.frame.entrance_series(&addr, n), t.frame.entrance_time(&addr, n) as i128);
    }

    #[test]
    fn s_vectors_are_bounded(j in 0u64..1_000_000_000_000, k in 1usize..20) {
        let t = tribonacci();
        let addr = t.frame.address(j).unwrap();
        let s = t.frame.s_vector(&addr, k);
        prop_assert!(s.iter().all(|&x| (0..=t.max_len).contains(&x)));
    }

    #[test]
    fn cocycle_at_random_positions(j in 0u64..1_000_000_000_000) {
        let t = tribonacci();
        let a = t.fmap.eval(j).unwrap();
        let b = t.fmap.eval(j + 1).unwrap();
        for r in 0..a.len() {
            let x = b[r] - a[r] - t.fmap.alpha()[r];
            prop_assert!((x - x.round()).abs() < 1e-6);
        }
    }
}
