use super::*;
use crate::gen::{random_expr, random_term, ExprShape};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn t() -> Expr {
    Expr::t_int(1)
}

fn k() -> Expr {
    Expr::param(Param::K)
}

fn t_alpha(p: i64, q: i64) -> Expr {
    Expr::t_pow(Exponent::new(Q64::from_integer(p), Q64::from_integer(q)))
}

fn e(s: &str) -> Expr {
    s.parse().unwrap()
}

fn binds(t: f64) -> (f64, Bindings) {
    let b = Bindings::new()
        .with(Param::K, 0.7)
        .with(Param::Mu, 1.3)
        .with(Param::L, 3.9)
        .with(Param::A, -0.4)
        .with(Param::B, 0.25)
        .with(Param::R, 2.2)
        .with(Param::Alpha, 0.35)
        .with(Param::Lambda, 1.1)
        .with(Param::Theta, 2.4);
    (t, b)
}

#[test]
fn additive_inverse_cancels() {
    assert!(add(&t(), &neg(&t())).is_zero());
}

#[test]
fn gamma_squared() {
    let g = Expr::gamma(1);
    assert_eq!(mul(&g, &g), Expr::term(rat(1, 1), Exponent::zero(), Monomial::symbol(Symbol::GammaDeriv(1), 2)));
}

#[test]
fn alpha_exponents_add() {
    let a = &k() * &t_alpha(0, -1);
    let prod = &a * &Expr::t_int(-1);
    assert_eq!(prod, &k() * &t_alpha(-1, -1));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let tt: f64 = rng.gen_range(0.1..10.0);
        let kk: f64 = rng.gen_range(-3.0..3.0);
        let al: f64 = rng.gen_range(0.01..0.99);
        let b = Bindings::new().with(Param::K, kk).with(Param::Alpha, al);
        let want = kk * tt.powf(-al) * tt.powi(-1);
        let got = prod.eval(tt, &b).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn derivative_basics() {
    assert_eq!(Expr::gamma(1).differentiate(), Expr::gamma(2));
    assert_eq!((&k() * &Expr::t_int(2)).differentiate(), &Expr::int(2) * &(&k() * &t()));
    let a = &Expr::gamma(1) * &Expr::t_int(-1);
    let want = &(&Expr::gamma(2) * &Expr::t_int(-1)) - &(&Expr::gamma(1) * &Expr::t_int(-2));
    assert_eq!(a.differentiate(), want);
}

#[test]
fn derivative_of_gamma_over_t_matches_finite_difference() {
    let a = (&Expr::gamma(1) * &Expr::t_int(-1)).differentiate();
    for g in [GammaForm::Linear, GammaForm::Log, GammaForm::Power { alpha: Some(rat(1, 3)) }] {
        let base = (&Expr::gamma(1) * &Expr::t_int(-1)).substitute_gamma(&g);
        let d = a.substitute_gamma(&g);
        let b = Bindings::new().with(Param::K, 1.7).with(Param::R, 0.9);
        for tt in [0.5, 1.0, 3.0, 11.0] {
            let h = 1e-5 * tt;
            let fd = (base.eval(tt + h, &b).unwrap() - base.eval(tt - h, &b).unwrap()) / (2.0 * h);
            let an = d.eval(tt, &b).unwrap();
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{g}: {fd} vs {an}");
        }
    }
}

#[test]
fn gamma_substitutions() {
    assert_eq!(Expr::gamma(1).substitute_gamma(&GammaForm::Linear), k());
    assert!(Expr::gamma(2).substitute_gamma(&GammaForm::Linear).is_zero());
    assert_eq!(Expr::gamma(1).substitute_gamma(&GammaForm::Log), &k() * &Expr::t_int(-1));
    assert_eq!(Expr::gamma(3).substitute_gamma(&GammaForm::Log), &Expr::int(2) * &(&k() * &Expr::t_int(-3)));
    let pw = GammaForm::Power { alpha: None };
    let alpha = Expr::param(Param::Alpha);
    let r = Expr::param(Param::R);
    let want = -&(&(&alpha * &k()) * &(&r * &t_alpha(-1, -1)));
    assert_eq!(Expr::gamma(2).substitute_gamma(&pw), want);
    assert_eq!(Expr::gamma(2).substitute_gamma(&pw), Expr::gamma(1).substitute_gamma(&pw).differentiate());
}

#[test]
fn param_substitutions() {
    let lam_k = &Expr::param(Param::Lambda) * &k();
    assert_eq!(lam_k.substitute_param(Param::Lambda, &Expr::param(Param::Mu)), &Expr::param(Param::Mu) * &k());
    // 1 − λ/L scaled by L, since division is not in the ring.
    let x = e("L - lambda").substitute_param(Param::Lambda, &Expr::param(Param::L));
    assert!(x.is_zero());
    let y = e("3*k*t^2 + mu");
    assert_eq!(y.substitute_params(&BTreeMap::new()), y);
    let bound = y.substitute_params(&BTreeMap::from([(Param::K, rat(1, 3)), (Param::Mu, rat(2, 1))]));
    assert_eq!(bound, e("t^2 + 2"));
}

#[test]
fn alpha_binding_folds_exponents() {
    let x = &Expr::param(Param::Alpha) * &t_alpha(1, -2);
    let b = x.substitute_params(&BTreeMap::from([(Param::Alpha, rat(1, 2))]));
    assert_eq!(b, &Expr::ratio(1, 2) * &Expr::t_int(0));
}

#[test]
fn numeric_evaluation() {
    let b = Bindings::new().with(Param::K, 1.0);
    assert_eq!(Expr::t_int(2).eval(3.0, &b).unwrap(), 9.0);
    assert_eq!(e("k - k^2").eval(2.0, &b).unwrap(), 0.0);
    match e("k*r").eval(1.0, &b) {
        Err(EvalError::Unbound(Symbol::Param(Param::R))) => {}
        other => panic!("{other:?}"),
    }
    assert!(Expr::gamma(1).eval(1.0, &b).is_err());
}

#[test]
fn leading_terms() {
    let r = Expr::param(Param::R);
    let lam = Expr::param(Param::Lambda);
    let a = &(&(&r * &r) * &k()) * &t_alpha(0, -2);
    let b = &(&(&lam * &r) * &k()) * &t_alpha(0, -1);
    let (ex, c) = (&a + &b).leading_behavior(None).unwrap();
    assert_eq!(ex, Exponent::new(Q64::from_integer(0), Q64::from_integer(-1)));
    assert_eq!(c, &(&lam * &r) * &k());
    assert_eq!(Expr::int(5).leading_behavior(None).unwrap(), (Exponent::zero(), Expr::int(5)));
    let x = &(&k() * &Expr::t_int(-1)) - &(&(&k() * &k()) * &Expr::t_int(-2));
    let (ex, c) = x.leading_behavior(None).unwrap();
    assert_eq!((ex, c), (Exponent::int(-1), k()));
    let bb = Bindings::new().with(Param::K, 0.8);
    let ratio = x.eval(1e6, &bb).unwrap() / (0.8 * 1e-6);
    assert!((ratio - 1.0).abs() < 1e-5);
    assert_eq!(Expr::zero().leading_behavior(None), Err(LeadingError::Zero));
}

#[test]
fn alpha_order_can_be_ambiguous() {
    // t^{-1/2} against t^{-α}: the winner depends on α.
    let x = &Expr::t_pow(Exponent::new(Q64::new(-1, 2), Q64::from_integer(0))) + &t_alpha(0, -1);
    assert_eq!(x.leading_behavior(None), Err(LeadingError::AlphaAmbiguous));
    let (ex, _) = x.leading_behavior(Some(&rat(1, 4))).unwrap();
    assert_eq!(ex, Exponent::new(Q64::from_integer(0), Q64::from_integer(-1)));
}

#[test]
fn text_form_round_trips() {
    for s in ["0", "k", "-1/2*gamma1^2*t^-1", "3*lambda*r*t^(-1-2*alpha)", "k - k^2"] {
        let x = e(s);
        assert_eq!(e(&x.to_string()), x, "{s}");
    }
    assert!("k +".parse::<Expr>().is_err());
    assert!("zeta".parse::<Expr>().is_err());
}

fn shapes() -> [ExprShape; 2] {
    [ExprShape::default(), ExprShape { alpha_exponents: true, max_gamma: 4, ..Default::default() }]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_under_reordering(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = &shapes()[1];
        let mut terms: Vec<Expr> = (0..6).map(|_| random_term(&mut rng, shape)).collect();
        let a = terms.iter().fold(Expr::zero(), |acc, x| &acc + x);
        terms.shuffle(&mut rng);
        let b = terms.iter().fold(Expr::zero(), |acc, x| &acc + x);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ring_axioms(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = &shapes()[1];
        let (a, b, c) = (random_expr(&mut rng, s), random_expr(&mut rng, s), random_expr(&mut rng, s));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn differentiation_is_linear_and_leibniz(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = &shapes()[1];
        let (a, b) = (random_expr(&mut rng, s), random_expr(&mut rng, s));
        prop_assert_eq!((&a + &b).differentiate(), &a.differentiate() + &b.differentiate());
        prop_assert_eq!((&a * &b).differentiate(), &(&a.differentiate() * &b) + &(&a * &b.differentiate()));
    }

    #[test]
    fn gamma_substitution_commutes_with_d_dt(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = ExprShape { max_gamma: 4, ..Default::default() };
        let a = random_expr(&mut rng, &s);
        for g in [GammaForm::Linear, GammaForm::Log, GammaForm::Power { alpha: None }] {
            prop_assert_eq!(a.differentiate().substitute_gamma(&g), a.substitute_gamma(&g).differentiate());
        }
    }

    #[test]
    fn derivative_matches_central_difference(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = ExprShape { max_gamma: 0, alpha_exponents: true, ..Default::default() };
        let a = random_expr(&mut rng, &s);
        let d = a.differentiate();
        for _ in 0..20 {
            let (tt, b) = binds(rng.gen_range(0.5..5.0));
            let h = 1e-4 * tt;
            let fd = (a.eval(tt + h, &b).unwrap() - a.eval(tt - h, &b).unwrap()) / (2.0 * h);
            let an = d.eval(tt, &b).unwrap();
            let scale = a.terms().map(|(e, m, c)| {
                Expr::term(c.clone(), *e, m.clone()).eval(tt, &b).unwrap().abs()
            }).fold(1.0, f64::max);
            prop_assert!((fd - an).abs() <= 1e-6 * scale.max(an.abs()), "{} {} {}", a, fd, an);
        }
    }

    #[test]
    fn eval_agrees_with_naive_terms(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = ExprShape { max_gamma: 0, alpha_exponents: true, ..Default::default() };
        let a = random_expr(&mut rng, &s);
        let (tt, b) = binds(rng.gen_range(0.1..20.0));
        let mut naive = 0.0;
        for (e, m, c) in a.terms() {
            let mut v = big_f64(c) * tt.powf(e.value(b.get(Param::Alpha).unwrap()));
            for (sym, pw) in m.factors() {
                let Symbol::Param(p) = sym else { unreachable!() };
                v *= b.get(*p).unwrap().powf(*pw as f64);
            }
            naive += v;
        }
        let got = a.eval(tt, &b).unwrap();
        prop_assert!((got - naive).abs() <= 1e-9 * naive.abs().max(1.0));
    }

    #[test]
    fn display_parse_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_expr(&mut rng, &shapes()[1]);
        prop_assert_eq!(a.to_string().parse::<Expr>().unwrap(), a);
    }
}
