use hodograph::complex2d::{det_from_wirtinger, wirtinger_from_partials, ComplexSystem2D};
use hodograph::expr::{parse, BoxDomain, VectorFunction};
use hodograph::hodograph::HodographSystem;
use hodograph::mappings::{catalog_entry, CATALOG};
use hodograph::potential::PotentialSystem;
use proptest::prelude::*;

const VARS: [&str; 4] = ["u1", "u2", "u3", "u4"];

/// Monomials as (coefficient, exponent per variable), total degree ≤ 4.
fn monomials(n: usize) -> impl Strategy<Value = Vec<(f64, Vec<u32>)>> {
    let mono = (-3.0..3.0f64, prop::collection::vec(0u32..=4, n)).prop_map(|(c, mut e)| {
        // trim exponents until the total degree fits
        while e.iter().sum::<u32>() > 4 {
            let k = e.iter().position(|&d| d > 0).unwrap();
            e[k] -= 1;
        }
        (c, e)
    });
    prop::collection::vec(mono, 1..6)
}

fn poly_text(terms: &[(f64, Vec<u32>)]) -> String {
    let parts: Vec<String> = terms
        .iter()
        .map(|(c, e)| {
            let mut s = format!("({c:?})");
            for (k, d) in e.iter().enumerate() {
                if *d > 0 {
                    s.push_str(&format!("*{}^{}", VARS[k], d));
                }
            }
            s
        })
        .collect();
    parts.join(" + ")
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5..1.5f64, n)
}

fn poly_with_point() -> impl Strategy<Value = (usize, Vec<(f64, Vec<u32>)>, Vec<f64>)> {
    (1usize..=4).prop_flat_map(|n| (Just(n), monomials(n), point(n)))
}

fn map_with_point() -> impl Strategy<Value = (usize, Vec<Vec<(f64, Vec<u32>)>>, Vec<f64>)> {
    (2usize..=3).prop_flat_map(|n| (Just(n), prop::collection::vec(monomials(n), n), point(n)))
}

fn system_of(n: usize, comps: &[Vec<(f64, Vec<u32>)>]) -> HodographSystem {
    let exprs = comps.iter().map(|c| parse(&poly_text(c), &VARS[..n]).unwrap()).collect();
    let f = VectorFunction::from_components(exprs).unwrap();
    HodographSystem::new(f, BoxDomain::cube(n, -2.0, 2.0, 1e-3).unwrap()).unwrap()
}

fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("u".to_string()),
        Just("v".to_string()),
        (0.0..10.0f64).prop_map(|c| format!("{c:?}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "^"]))
                .prop_map(|(a, b, op)| format!("({a}) {op} ({b})")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (inner, prop::sample::select(vec!["sin", "exp", "atanh", "sqrt", "log", "tanh"]))
                .prop_map(|(a, f)| format!("{f}({a})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gradient_matches_central_differences((n, terms, p) in poly_with_point()) {
        let e = parse(&poly_text(&terms), &VARS[..n]).unwrap();
        let g = e.gradient(&p).unwrap();
        let h = 1e-5;
        for k in 0..n {
            let (mut a, mut b) = (p.clone(), p.clone());
            a[k] += h;
            b[k] -= h;
            let fd = (e.eval(&a).unwrap() - e.eval(&b).unwrap()) / (2.0 * h);
            let scale = 1.0 + g[k].abs().max(e.eval(&p).unwrap().abs());
            prop_assert!((g[k] - fd).abs() <= 1e-5 * scale, "d/d{}: {} vs {}", VARS[k], g[k], fd);
        }
    }

    #[test]
    fn hessian_is_bitwise_symmetric((n, terms, p) in poly_with_point()) {
        let e = parse(&poly_text(&terms), &VARS[..n]).unwrap();
        let hm = e.hessian(&p).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(hm[i][j].to_bits(), hm[j][i].to_bits());
            }
        }
    }

    #[test]
    fn print_parse_is_stable(text in expr_text()) {
        let once = parse(&text, &["u", "v"]).unwrap();
        let printed = once.to_string();
        let twice = parse(&printed, &["u", "v"]).unwrap();
        prop_assert_eq!(&printed, &twice.to_string());
        for p in [[0.3, 0.4], [1.7, 0.2]] {
            let (a, b) = (once.eval(&p), twice.eval(&p));
            if let (Ok(a), Ok(b)) = (a, b) {
                prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()), "{} vs {}", a, b);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn charpoly_invariants((n, comps, u) in map_with_point()) {
        let sys = system_of(n, &comps);
        let j = sys.jacobian(&u).unwrap();
        let p = sys.charpoly(&u).unwrap();
        prop_assert_eq!(p.degree(), n);
        let det = j.clone().lu().determinant();
        prop_assert!((p.coeffs[0] - det).abs() <= 1e-10 * (1.0 + det.abs()));
        let tr = j.trace();
        prop_assert!((p.coeffs[n - 1] - tr).abs() <= 1e-10 * (1.0 + tr.abs()));
        for t in [-1.0, 0.25, 2.0] {
            let d = sys.det_m(&u, t).unwrap();
            prop_assert!((p.eval(t) - d).abs() <= 1e-9 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn m_moves_with_unit_speed_in_t((n, comps, u) in map_with_point(), t in -3.0..3.0f64) {
        let sys = system_of(n, &comps);
        let a = sys.build_m(&u, t).unwrap();
        let b = sys.build_m(&u, t + 0.5).unwrap();
        let d = (b - a) / 0.5;
        for i in 0..n {
            for k in 0..n {
                let want = if i == k { 1.0 } else { 0.0 };
                prop_assert!((d[(i, k)] - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn potential_branches_are_real((n, terms, u) in (2usize..=3).prop_flat_map(|n| (Just(n), monomials(n), point(n)))) {
        let w = parse(&poly_text(&terms), &VARS[..n]).unwrap();
        let p = PotentialSystem::from_potential(w, BoxDomain::cube(n, -2.0, 2.0, 1e-3).unwrap()).unwrap();
        let b = p.potential_branches(&u).unwrap();
        prop_assert_eq!(b.count(), n);
    }

    #[test]
    fn complex_factorisation(fu in -5.0..5.0f64, fv in -5.0..5.0f64, gu in -5.0..5.0f64, gv in -5.0..5.0f64, t in -5.0..5.0f64) {
        let (a, b) = wirtinger_from_partials(fu, fv, gu, gv);
        let z = det_from_wirtinger(a, b, t);
        let det = (fu + t) * (gv + t) - fv * gu;
        prop_assert!((z.re - det).abs() <= 1e-10 * (1.0 + det.abs()));
        prop_assert!(z.im.abs() <= 1e-10 * (1.0 + det.abs()));
    }

    #[test]
    fn beltrami_is_unimodular_on_blowup(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, d in -3.0..3.0f64) {
        let text = [format!("({a:?})*u + ({b:?})*v"), format!("({c:?})*u + ({d:?})*v")];
        let exprs = text.iter().map(|s| parse(s, &["u", "v"]).unwrap()).collect();
        let f = VectorFunction::from_components(exprs).unwrap();
        let sys = HodographSystem::new(f, BoxDomain::cube(2, -1.0, 1.0, 1e-3).unwrap()).unwrap();
        let branches = sys.real_branches(&[0.1, -0.2], 1e-9).unwrap();
        let cs = ComplexSystem2D::new(sys).unwrap();
        let (_, fvb) = cs.wirtinger(0.1, -0.2).unwrap();
        prop_assume!(fvb.norm() > 1e-3);
        for t in branches.values() {
            if let Ok(mu) = cs.beltrami_mu(0.1, -0.2, t) {
                prop_assert!((mu.abs_mu - 1.0).abs() <= 1e-8, "|mu| = {}", mu.abs_mu);
            }
        }
    }

    #[test]
    fn catalog_closed_forms(k in 0..CATALOG.len(), s in prop::collection::vec(0.0..1.0f64, 3), t in -3.0..3.0f64) {
        let e = catalog_entry(CATALOG[k]).unwrap();
        let dom = e.system.domain();
        let u: Vec<f64> = (0..dom.dim()).map(|i| dom.lower()[i] + s[i] * (dom.upper()[i] - dom.lower()[i])).collect();
        let a = e.system.det_m(&u, t).unwrap();
        let b = e.closed_form(&u, t).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }
}
