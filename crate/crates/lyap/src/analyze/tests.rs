use super::*;
use crate::catalog;
use crate::enumerate::generate_sequences;
use crate::pq_core::{initial_pair, OdeSystemSpec, OperationId::*};
use crate::symexpr::rat;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair(system: &str, ops: &[crate::pq_core::OperationId]) -> PQPair {
    initial_pair(&catalog::by_name(system).unwrap()).apply_sequence(ops).unwrap()
}

fn e(s: &str) -> Expr {
    s.parse().unwrap()
}

fn lin() -> RateQuery {
    RateQuery::new(GammaForm::Linear, 1.0, 4.0)
}

fn feasible_at_k(p: &PQPair, q: &RateQuery, k: f64) -> bool {
    let c = Conditions::new(psd_conditions(p, &q.gamma, q.curvature).unwrap());
    feasible(&c, k, q, &q.grid_points()[0])
}

#[test]
fn damped_newton_minors() {
    let p = pair("damped-newton", &[A1, E1, F1]);
    let c = psd_conditions(&p, &GammaForm::Linear, Curvature::Strong).unwrap();
    let mm = &c.corners[0];
    assert_eq!((mm.lambda, mm.theta), (Corner::Mu, Corner::Mu));
    assert_eq!(mm.p_minors, vec![e("1/2*k*mu")]);
    assert!(mm.q_minors.contains(&e("1/2*k*mu - 1/2*k^2*mu")));
    assert!(mm.q_minors.contains(&e("mu")));
    let ll = &c.corners[3];
    assert!(ll.q_minors.contains(&e("L")));
}

#[test]
fn sc_nag_pair_matches_display() {
    let p = pair("second-order-hessian", &[A1, B1, B2, B3]).map_entries(|x| x.substitute_param(Param::B, &Expr::zero()));
    let half = |s: &str| &Expr::ratio(1, 2) * &e(s);
    assert_eq!(p.p.get(0, 0), &half("a*gamma1 - gamma1^2 - gamma2"));
    assert_eq!(p.p.get(0, 2), &half("gamma1"));
    assert_eq!(p.p.get(2, 2), &half("1"));
    assert_eq!(
        p.q.get(0, 0),
        &half("-a*gamma1^2 + gamma1^3 - a*gamma2 + lambda*gamma1 + 3*gamma1*gamma2 + gamma3")
    );
    assert_eq!(p.q.get(2, 2), &half("2*a - 3*gamma1"));
    let nz = p.q.entries().filter(|(_, _, x)| !x.is_zero()).count();
    assert_eq!(nz, 2);
}

#[test]
fn sc_nag_two_by_two_minor() {
    let p = pair("second-order-hessian", &[A1, B1, B2, B3]);
    let c = psd_conditions(&p, &GammaForm::Linear, Curvature::Strong).unwrap();
    // μ = 1, a = 2√μ = 2: ¼((2√μk − k²)·1 − k²)
    let want = &Expr::ratio(1, 4) * &e("2*k - k^2 - k^2");
    let got: Vec<Expr> = c.corners[0]
        .p_minors
        .iter()
        .map(|m| m.substitute_params(&[(Param::A, rat(2, 1))].into_iter().collect()))
        .collect();
    assert!(got.contains(&want), "{got:?}");
}

#[test]
fn feasibility_boundaries() {
    let dn = pair("damped-newton", &[A1, E1, F1]);
    let q = lin().convex();
    assert!(feasible_at_k(&dn, &q, 1.0));
    assert!(!feasible_at_k(&dn, &q, 1.01));
    let gf = pair("first-order-hessian", &[A1]);
    let q = lin().param(Param::B, 0.0);
    assert!(feasible_at_k(&gf, &q, 2.0));
    assert!(!feasible_at_k(&gf, &q, 2.01));
    assert!(feasible_at_k(&dn, &lin().convex(), 0.0));
    assert!(feasible_at_k(&gf, &q, 0.0));
}

#[test]
fn catalog_rates_from_single_pairs() {
    let fo = pair("first-order-hessian", &[A1, B3, E1, F1]);
    let r = max_rate(&fo, &lin().param(Param::B, -0.25)).unwrap();
    assert!((r.k_max - 4.0 / 3.0).abs() < 1e-5, "{}", r.k_max);
    let sc = pair("second-order-hessian", &[A1, B1, B2, B3]);
    let r = max_rate(&sc, &lin().param(Param::A, 2.0).param(Param::B, 0.0)).unwrap();
    assert!((r.k_max - 1.0).abs() < 1e-5);
    let nag = pair("nag", &[A1, B1, B2, B3]);
    let r = max_rate(&nag, &RateQuery::new(GammaForm::Log, 1.0, 4.0).convex().param(Param::R, 3.0)).unwrap();
    assert!((r.k_max - 2.0).abs() < 1e-5);
    assert_eq!(r.status, RateStatus::Ok);
}

#[test]
fn window_end_for_fixed_k() {
    let nag = pair("nag", &[A1, B1, B2, B3]);
    let q = lin().param(Param::R, 8.0).domain(TDomain::Window(1e-2, 1e2)).with_k(1.0);
    let r = max_rate(&nag, &q).unwrap();
    let Validity::UpTo(t) = r.validity else { panic!("{:?}", r.validity) };
    let step = 10f64.powf(1.0 / POINTS_PER_DECADE as f64);
    assert!(t <= 4.0 && t * step > 4.0, "{t}");
}

#[test]
fn power_form_supremum_below_two_thirds() {
    let g = pair("generalized-nag", &[A1, B1, B3, B2]);
    let q = RateQuery::new(GammaForm::Power { alpha: Some(rat(1, 2)) }, 1.0, 4.0)
        .param(Param::R, 1.0)
        .domain(TDomain::Eventually);
    let r = max_rate(&g, &q).unwrap();
    assert!(r.k_max < 2.0 / 3.0 && r.k_max > 2.0 / 3.0 - 1e-3, "{}", r.k_max);
}

#[test]
fn rejects_bad_pairs() {
    let fresh = initial_pair(&catalog::nag());
    assert_eq!(
        psd_conditions(&fresh, &GammaForm::Log, Curvature::Strong).unwrap_err(),
        AnalyzeError::MissingObjectiveGap
    );
    let mut bad = fresh.apply(A1).unwrap();
    bad.q.set(0, 1, Expr::param(Param::Lambda));
    assert_eq!(
        psd_conditions(&bad, &GammaForm::Log, Curvature::Strong).unwrap_err(),
        AnalyzeError::OffDiagonalParam
    );
    // Q11 = λγ̇/2 − … with Q12 = −γ̇/2 left over: not PSD at any k > 0 for
    // the plain A1 pair of damped Newton, and Q has a bare cross term.
    let a1 = pair("damped-newton", &[A1]);
    assert!(max_rate(&a1, &lin().convex()).is_err());
}

#[test]
fn bisection_is_monotone_on_catalog_pairs() {
    for (p, q) in [
        (pair("damped-newton", &[A1, E1, F1]), lin().convex()),
        (pair("first-order-hessian", &[A1]), lin().param(Param::B, 0.0)),
        (pair("second-order-hessian", &[A1, B1, B2, B3]), lin().param(Param::A, 2.0).param(Param::B, 0.0)),
    ] {
        let r = max_rate(&p, &q).unwrap();
        for i in 0..=20 {
            assert!(feasible_at_k(&p, &q, r.k_max * i as f64 / 20.0));
        }
    }
}

#[test]
fn rate_is_invariant_under_system_scaling() {
    let cases: [(&str, &[crate::pq_core::OperationId], RateQuery); 3] = [
        ("damped-newton", &[A1, E1, F1], lin().convex()),
        ("second-order-hessian", &[A1, B1, B2, B3], lin().param(Param::A, 2.0).param(Param::B, 0.0)),
        ("nag", &[A1, B1, B2, B3], RateQuery::new(GammaForm::Log, 1.0, 4.0).convex().param(Param::R, 3.0)),
    ];
    for (name, ops, q) in cases {
        let base = catalog::by_name(name).unwrap();
        let k0 = max_rate(&initial_pair(&base).apply_sequence(ops).unwrap(), &q).unwrap().k_max;
        for c in [rat(3, 2), rat(5, 1), rat(1, 7)] {
            let s: OdeSystemSpec = base.scaled(&Expr::constant(c.clone()));
            let k = max_rate(&initial_pair(&s).apply_sequence(ops).unwrap(), &q).unwrap().k_max;
            assert!((k - k0).abs() <= 1e-6 * k0.max(1.0), "{name} c={c}: {k} vs {k0}");
        }
    }
}

#[test]
fn numeric_psd_basics() {
    assert!(numeric_psd(&[vec![1.0, 1.0], vec![1.0, 1.0]], 1e-12));
    assert!(!numeric_psd(&[vec![1.0, 2.0], vec![2.0, 1.0]], 1e-12));
    // Leading minors nonnegative but not PSD.
    assert!(!numeric_psd(&[vec![0.0, 0.0], vec![0.0, -1.0]], 1e-12));
}

/// Dense numeric P or Q of `p` at (t, λ, θ).
fn numeric(m: &crate::pq_core::SymMatrix, t: f64, b: &Bindings, lam: f64, th: f64) -> Vec<Vec<f64>> {
    let b = b.clone().with(Param::Lambda, lam).with(Param::Theta, th);
    let n = m.dim();
    (0..n).map(|i| (0..n).map(|j| m.get(i, j).eval(t, &b).unwrap()).collect()).collect()
}

/// A reachable pair from a random catalog system and sequence, with γ
/// substituted.
pub(crate) fn random_reachable(rng: &mut ChaCha8Rng) -> (PQPair, GammaForm) {
    let names = ["damped-newton", "first-order-hessian", "second-order-hessian", "nag", "hessian-nag"];
    let name = names.choose(rng).unwrap();
    let seq = generate_sequences()[rng.gen_range(0..crate::enumerate::TOTAL)];
    let g = if name.contains("nag") && *name != "second-order-hessian" { GammaForm::Log } else { GammaForm::Linear };
    let p = pair(name, &seq.ops()).map_entries(|x| x.substitute_gamma(&g));
    (p, g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn interior_points_inherit_corner_psd(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, _) = random_reachable(&mut rng);
        let (mu, l) = (1.0, 4.0);
        let b = Bindings::new()
            .with(Param::K, rng.gen_range(0.0..0.5))
            .with(Param::Mu, mu).with(Param::L, l)
            .with(Param::A, rng.gen_range(0.5..3.0))
            .with(Param::B, rng.gen_range(-0.2..0.5))
            .with(Param::R, rng.gen_range(2.0..6.0));
        let t = rng.gen_range(0.5..20.0);
        for m in [&p.p, &p.q] {
            let corners = [(mu, mu), (mu, l), (l, mu), (l, l)];
            if corners.iter().all(|&(a, c)| numeric_psd(&numeric(m, t, &b, a, c), 1e-10)) {
                for _ in 0..20 {
                    let (a, c) = (rng.gen_range(mu..l), rng.gen_range(mu..l));
                    prop_assert!(numeric_psd(&numeric(m, t, &b, a, c), 1e-9));
                }
            }
        }
    }
}

#[test]
fn first_order_sequence_needs_its_b() {
    // The special first-order pair only wins at b = −1/L.
    let fo = pair("first-order-hessian", &[A1, B3, E1, F1]);
    let r0 = max_rate(&fo, &lin().param(Param::B, 0.0)).unwrap().k_max;
    assert!((r0 - 1.0).abs() < 1e-5 || r0 < 4.0 / 3.0 - 1e-3, "{r0}");
}
