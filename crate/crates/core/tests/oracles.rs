use domex_core::exchange::{build_cloud_auto, FMap, DEFAULT_EPSILON};
use domex_core::properize::{eigen_preservation_check, properize};
use domex_core::spectral::{classify, frequencies, SpectralProfile};
use domex_core::tower::TowerFrame;
use domex_core::*;

fn load(name: &str) -> Substitution {
    presets::load(name).unwrap()
}

fn word(s: &Substitution, text: &str) -> Word {
    s.alphabet().parse_word(text).unwrap()
}

fn render_rules(s: &Substitution) -> Vec<String> {
    s.rules().into_iter().map(|(a, w)| format!("{a}->{w}")).collect()
}

#[test]
fn apply_and_compose_by_hand() {
    let t = load("tribonacci");
    assert_eq!(t.render(&t.apply(&word(&t, "1")).unwrap()), "12");
    assert_eq!(t.render(&t.apply(&word(&t, "1213")).unwrap()), "1213121");
    assert!(t.apply(&[]).unwrap().is_empty());
    let tt = t.morphism().compose(t.morphism()).unwrap();
    assert_eq!(t.render(tt.image(Letter(0))), "1213");
    assert_eq!(tt.incidence(), t.incidence().checked_mul(t.incidence()).unwrap());
}

#[test]
fn fixed_point_prefixes() {
    let f = load("fibonacci");
    assert_eq!(f.render(&f.fixed_point_prefix(8).unwrap()), "01001010");
    let t = load("tribonacci");
    assert_eq!(t.render(&t.fixed_point_prefix(7).unwrap()), "1213121");
}

#[test]
fn primitivity_witnesses() {
    let k = load("tribonacci").primitivity().unwrap();
    assert!(k <= 5);
    assert_eq!(load("thue-morse").primitivity(), Some(1));
}

#[test]
fn factors_of_length_two() {
    let f = load("fibonacci");
    let got: Vec<String> = f.language_factors(2).unwrap().iter().map(|w| f.render(w)).collect();
    assert_eq!(got, ["00", "01", "10"]);
    let t = load("tribonacci");
    let mut got: Vec<String> = t.language_factors(2).unwrap().iter().map(|w| t.render(w)).collect();
    got.sort();
    assert_eq!(got, ["11", "12", "13", "21", "31"]);
}

#[test]
fn fibonacci_return_words() {
    let f = load("fibonacci");
    let rs = ReturnSystem::new(&f, &word(&f, "0")).unwrap();
    let got: Vec<String> = rs.return_words().iter().map(|w| f.render(w)).collect();
    assert_eq!(got, ["01", "0"]);
}

#[test]
fn tribonacci_derives_itself() {
    let t = load("tribonacci");
    let rs = ReturnSystem::new(&t, &word(&t, "1")).unwrap();
    let tu = rs.return_substitution().unwrap();
    assert_eq!(render_rules(&tu), ["1->12", "2->13", "3->1"]);
}

#[test]
fn return_substitution_on_11_has_zero_eigenvalue() {
    let s = load("paper-1123");
    let rs = ReturnSystem::new(&s, &word(&s, "11")).unwrap();
    let su = rs.return_substitution().unwrap();
    let p = classify(su.incidence());
    assert!(p.zero_multiplicity >= 1);
    assert!(p.eigenvalues.iter().any(|[re, im]| re.hypot(*im) < 1e-9));
}

#[test]
fn longer_prefix_returns_decode_over_shorter() {
    let f = load("fibonacci");
    let short = ReturnSystem::new(&f, &word(&f, "0")).unwrap();
    let long = ReturnSystem::new(&f, &word(&f, "01")).unwrap();
    for w in long.return_words() {
        short.decode(w).unwrap();
    }
}

#[test]
fn return_codings_compose() {
    // Θ_u ∘ Θ_v = Θ_w for w = Θ_u(v)·u, with v a prefix of the derived sequence.
    let t = load("tribonacci");
    let u = word(&t, "1");
    let rs = ReturnSystem::new(&t, &u).unwrap();
    let derived = rs.return_substitution().unwrap();
    let v = derived.fixed_point_prefix(2).unwrap();
    let rs2 = ReturnSystem::new(&derived, &v).unwrap();
    let mut w = rs.theta().apply(&v).unwrap();
    w.extend_from_slice(&u);
    let rs3 = ReturnSystem::new(&t, &w).unwrap();
    let composed = rs.theta().compose(rs2.theta()).unwrap();
    assert_eq!(composed.images(), rs3.theta().images());
}

#[test]
fn non_proper_binary_properizes_on_at_least_three_letters() {
    let p = properize(&load("paper-001")).unwrap();
    assert!(p.proper_sub.size() >= 3);
    assert!(p.proper_sub.is_proper());
}

#[test]
fn eigenvalues_survive_properization() {
    for name in presets::names() {
        let p = properize(&load(name)).unwrap();
        let cmp = eigen_preservation_check(&p).unwrap();
        assert!(cmp.pass, "{name}: {:?}", cmp.unmatched);
    }
}

#[test]
fn thue_morse_keeps_perron_value_two() {
    let p = properize(&load("thue-morse")).unwrap();
    let beta = classify(p.left_proper_sub.incidence()).perron_value.unwrap();
    assert!((beta - 2f64.powi(p.power_l as i32)).abs() < 1e-9);
}

#[test]
fn coding_recovers_source_fixed_point() {
    for name in ["tribonacci", "paper-001"] {
        let s = load(name);
        let p = properize(&s).unwrap();
        assert!(p.phi.is_coding());
        let y = p.left_proper_sub.fixed_point_prefix(100_000).unwrap();
        let x = s.fixed_point_prefix(100_000).unwrap();
        assert_eq!(p.phi.apply(&y).unwrap(), x, "{name}");
    }
}

#[test]
fn tribonacci_letter_frequencies() {
    let f = frequencies(load("tribonacci").incidence()).unwrap();
    for (a, b) in f.iter().zip([0.5436890127, 0.2955977425, 0.1607132448]) {
        assert!((a - b).abs() < 1e-9);
    }
}

fn frame(name: &str, level: usize) -> TowerFrame {
    let p = properize(&load(name)).unwrap();
    TowerFrame::new(&p.proper_sub, level).unwrap()
}

#[test]
fn heights_follow_the_incidence_matrix() {
    let f = frame("tribonacci", 1);
    let mt = f.mt().clone();
    for k in 0..8 {
        let next = mt.mul_vec_u128(f.heights(k)).unwrap();
        assert_eq!(next, f.heights(k + 1));
    }
}

#[test]
fn entrance_time_jumps() {
    for name in ["fibonacci", "tribonacci"] {
        let f = frame(name, 1);
        for n in 2..6 {
            let allowed: Vec<i128> = f.heights(n - 1).iter().map(|&h| h as i128 - 1).collect();
            let mut prev = f.entrance_time(&f.address(0).unwrap(), n) as i128;
            for j in 1..5000u64 {
                let r = f.entrance_time(&f.address(j).unwrap(), n) as i128;
                let step = r - prev;
                assert!(step == -1 || allowed.contains(&step), "{name} n={n} j={j} step {step}");
                prev = r;
            }
        }
    }
}

#[test]
fn orbit_of_origin_visits_every_tower() {
    for name in ["fibonacci", "tribonacci", "paper-001"] {
        let f = frame(name, 3);
        let total: u128 = f.tower_heights().iter().sum();
        let mut seen = vec![false; f.tower_heights().len()];
        for j in 0..2 * total as u64 {
            seen[f.atom(&f.address(j).unwrap()).0.index()] = true;
        }
        assert!(seen.iter().all(|&s| s), "{name}");
    }
}

fn fmap(name: &str, depth: Option<usize>) -> (FMap, Properization) {
    let s = load(name);
    let p = properize(&s).unwrap();
    let sp = SpectralProfile::compute(&s, &p.proper_sub, Some(&p.phi)).unwrap();
    let f = TowerFrame::new(&p.proper_sub, 1).unwrap();
    (FMap::new(&f, &sp, depth, DEFAULT_EPSILON).unwrap(), p)
}

#[test]
fn f_is_stable_past_the_certified_depth() {
    for name in ["fibonacci", "tribonacci"] {
        let (a, _) = fmap(name, None);
        let (b, _) = fmap(name, Some(a.depth() + 8));
        let pa = a.eval_range(20_000).unwrap();
        let pb = b.eval_range(20_000).unwrap();
        let diff = pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 2.0 * a.tail().max(1e-12), "{name}: {diff}");
        assert!(pa.iter().all(|x| x.abs() < 5.0));
    }
}

#[test]
fn piece_translations_are_alpha_plus_integers() {
    for name in ["fibonacci", "tribonacci"] {
        let (f, p) = fmap(name, None);
        let cloud = build_cloud_auto(&f, &p.phi, 50_000).unwrap();
        assert!(cloud.pieces.iter().all(|q| q.shift_error < 1e-6), "{name}");
        assert_eq!(cloud.pieces.iter().map(|q| q.count).sum::<usize>(), 50_000);
    }
}

#[test]
fn fibonacci_self_affinity_is_conjugate_scaling() {
    let (f, p) = fmap("fibonacci", None);
    let conj = -(5f64.sqrt() - 1.0) / 2.0;
    let n = conj.powi(2 * p.power_l as i32);
    assert!((f.nt()[(0, 0)] - n).abs() < 1e-12);
    let frame = f.frame();
    for j in 0..2000u64 {
        let img = frame.xi_image_position(&frame.address(j).unwrap()).unwrap();
        let lhs = f.eval(img).unwrap()[0];
        let rhs = n * f.eval(j).unwrap()[0];
        assert!((lhs - rhs).abs() < 1e-6, "j={j}");
    }
    assert_eq!(f.eval(0).unwrap(), vec![0.0]);
}
