use lyap::analyze::*;
use lyap::catalog;
use lyap::enumerate::{enumerate, generate_sequences, REDUCTION_IDENTITIES, TOTAL};
use lyap::gen::random_pair;
use lyap::pq_core::{initial_pair, OperationId::*, PQPair, SymMatrix};
use lyap::simulate::*;
use lyap::symexpr::{Bindings, GammaForm, Param};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::ExitCode;
use std::time::Instant;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1() -> Outcome {
    let n = generate_sequences().len();
    check(n == 23660 && n == TOTAL, format!("{n} sequences"))
}

fn c2() -> Outcome {
    let want = [
        ("damped-newton", 21),
        ("first-order-hessian", 42),
        ("second-order-hessian", 210),
        ("nag", 10),
        ("generalized-nag", 10),
    ];
    let mut ok = true;
    let mut out = Vec::new();
    for (name, n) in want {
        let got = enumerate(&catalog::by_name(name).unwrap()).map_err(|e| e.to_string())?.groups.len();
        ok &= got == n;
        out.push(format!("{name}={got}"));
    }
    check(ok, out.join(" "))
}

fn c3_4(rep: &CatalogReport) -> (Outcome, Outcome) {
    let rows: Vec<String> = rep
        .rows
        .iter()
        .filter(|r| !matches!(r.expected, Expected::WindowEnd(_)))
        .map(|r| format!("{}={}", r.name, r.observed.map_or("none".into(), |k| format!("{k:.6}"))))
        .collect();
    let ok = rep.rows.iter().filter(|r| !matches!(r.expected, Expected::WindowEnd(_))).all(|r| r.pass);
    let gn = rep.rows.iter().find(|r| r.system == "generalized-nag").and_then(|r| r.observed);
    let gn_ok = gn.is_some_and(|k| (0.6657..2.0 / 3.0).contains(&k));
    let s = &rep.split;
    let split = format!(
        "special={} two_mu={} mu={} other={} excluded={}",
        s.at_special, s.at_two_mu, s.at_mu, s.other, s.excluded
    );
    (check(ok && gn_ok, rows.join(", ")), check(rep.split_pass(), split))
}

fn c5() -> Outcome {
    let groups = enumerate(&catalog::nag()).map_err(|e| e.to_string())?.groups;
    let (k, mu) = (1.0, 1.0);
    let r = 4.0 * (k * k + mu) / (k * k);
    let q = RateQuery::new(GammaForm::Linear, mu, 4.0)
        .param(Param::R, r)
        .domain(TDomain::Window(1e-2, 1e2))
        .with_k(k);
    let res = analyze_groups(&groups, &q);
    let best = best_window(&res).ok_or("no group certifies any window")?;
    let Validity::UpTo(t) = best.validity else {
        return Err(format!("validity {:?}", best.validity));
    };
    let step = 10f64.powf(1.0 / POINTS_PER_DECADE as f64);
    check(t <= 4.0 * step && t >= 4.0 / step, format!("T={t:.6} (group {}), grid ratio {step:.5}", best.group_id))
}

fn c6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in 0..100 {
        let p = random_pair(&mut rng);
        for (lhs, rhs) in REDUCTION_IDENTITIES {
            if p.apply_sequence(lhs).unwrap() != p.apply_sequence(rhs).unwrap() {
                return Err(format!("pair {n}: {lhs:?} != {rhs:?}"));
            }
        }
    }
    check(true, format!("{} identities x 100 pairs", REDUCTION_IDENTITIES.len()))
}

fn c7() -> Outcome {
    let systems = [
        (catalog::first_order_hessian(), Bindings::new().with(Param::B, 0.1)),
        (catalog::second_order_hessian(), Bindings::new().with(Param::A, 1.5).with(Param::B, 0.2)),
        (catalog::nag(), Bindings::new().with(Param::R, 3.0)),
    ];
    let seqs = generate_sequences();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let obj = QuadraticObjective::log_spaced(10, 1.0, 4.0);
    let mut worst = [0.0f64; 2];
    for (spec, p) in &systems {
        let params = p.clone().with(Param::K, 0.3).with(Param::Mu, 1.0).with(Param::L, 4.0);
        let picks: Vec<_> = seqs.choose_multiple(&mut rng, 10).cloned().collect();
        for (n, dt) in [1e-2, 5e-3].into_iter().enumerate() {
            let mut s = SimSetup::standard(10, 1.0, 3.0, dt);
            s.v0 = vec![-0.5; 10];
            let tr = integrate(spec, &params, &obj, &s).map_err(|e| e.to_string())?;
            for seq in &picks {
                let pair = initial_pair(spec).apply_sequence(&seq.ops()).unwrap();
                let r = conservation_check(&pair, &GammaForm::Linear, &params, &obj, &tr)
                    .map_err(|e| e.to_string())?;
                worst[n] = worst[n].max(r.max_residual);
            }
        }
    }
    check(
        worst[0] < 1e-4 && worst[1] < 2.5e-5,
        format!("max residual {:.3e} at dt=1e-2, {:.3e} at dt=5e-3", worst[0], worst[1]),
    )
}

fn c8() -> Outcome {
    let mut ok = true;
    let mut out = Vec::new();
    for id in LyapunovId::ALL {
        let r = monotonicity_check(&LyapunovCase::standard(id, 1.0, 4.0)).map_err(|e| e.to_string())?;
        ok &= r.non_increasing(1e-8);
        out.push(format!("{id}={:.1e}", r.max_rise));
    }
    let ctl = monotonicity_check(&LyapunovCase::standard(LyapunovId::ScNag, 1.0, 4.0).with_k(1.2))
        .map_err(|e| e.to_string())?;
    let k2 = monotonicity_check(&LyapunovCase::standard(LyapunovId::ScNag, 1.0, 4.0).with_k(2.0))
        .map_err(|e| e.to_string())?;
    let ctl_ok = ctl.max_rise > 1e-4;
    out.push(format!("control k=1.2 rise={:.3e} (k=2 rise={:.3e})", ctl.max_rise, k2.max_rise));
    check(ok && ctl_ok, out.join(" "))
}

/// Fitted rate at dt and dt/2.
fn fit_pair(
    spec: &lyap::pq_core::OdeSystemSpec,
    p: &Bindings,
    obj: &QuadraticObjective,
    (t0, t1, dt): (f64, f64, f64),
    g: &GammaForm,
    win: Option<(f64, f64)>,
) -> Result<[f64; 2], String> {
    let mut ks = [0.0; 2];
    for (i, dt) in [dt, dt / 2.0].into_iter().enumerate() {
        let s = SimSetup::standard(obj.dim(), t0, t1, dt).every(((1e-2 / dt).round() as usize).max(1));
        let tr = integrate(spec, p, obj, &s).map_err(|e| e.to_string())?;
        let f = match win {
            Some((a, b)) => measure_rate_window(&tr, g, p, a, b),
            None => measure_rate(&tr, g, p),
        }
        .map_err(|e| e.to_string())?;
        ks[i] = f.k;
    }
    Ok(ks)
}

fn c9() -> Outcome {
    let o = QuadraticObjective::log_spaced(10, 1.0, 4.0);
    let gf = fit_pair(
        &catalog::first_order_hessian(),
        &Bindings::new().with(Param::B, 0.0),
        &o,
        (0.0, 10.0, 1e-3),
        &GammaForm::Linear,
        None,
    )?;
    let sc = fit_pair(
        &catalog::second_order_hessian(),
        &Bindings::new().with(Param::A, 2.0).with(Param::B, 0.0),
        &o,
        (0.0, 20.0, 1e-3),
        &GammaForm::Linear,
        None,
    )?;
    let nag = fit_pair(
        &catalog::nag(),
        &Bindings::new().with(Param::R, 3.0),
        &QuadraticObjective::log_spaced(10, 1e-6, 4.0),
        (1.0, 1e3, 1e-2),
        &GammaForm::Log,
        None,
    )?;
    let fits = [("gradient flow", gf, 2.0), ("SC-NAG", sc, 1.0), ("NAG convex", nag, 2.0)];
    let mut ok = true;
    let mut out = Vec::new();
    for (name, k, theory) in fits {
        // Halving dt must not move the fit: discretization is not what we measure.
        ok &= k[0] >= 0.9 * theory && (k[0] - k[1]).abs() < 1e-2 * theory;
        out.push(format!("{name}={:.4} (dt/2 {:.4}, theory {theory})", k[0], k[1]));
    }
    let cand = initial_pair(&catalog::nag()).apply_sequence(&[A1, B1, B3, B2]).unwrap();
    let q = RateQuery::new(GammaForm::Log, 1.0, 4.0).param(Param::R, 4.5);
    let rep = bootstrap_rate_check(&cand, 2.0, &q).map_err(|e| e.to_string())?;
    ok &= rep.passed() && rep.fitted_exponent >= 2.85;
    out.push(format!(
        "bootstrap r=4.5 exponent={:.3} (candidate k={:.4})",
        rep.fitted_exponent, rep.k_candidate
    ));
    check(ok, out.join(", "))
}

fn c10() -> Outcome {
    let l = 1.0 / 2f64.sqrt();
    let k = restart_constants(2.0, l, 1.0).map_err(|e| e.to_string())?;
    let c_want = 3f64.exp() / 2.0;
    let rep = run_restart(&RestartSpec::standard(l, 2.0, 1.0, 4.0, 20)).map_err(|e| e.to_string())?;
    let ok = (k.h - 0.580578).abs() <= 1e-6
        && (k.c_const - c_want).abs() <= 1e-9
        && rep.factors.len() == 20
        && rep.max_factor() <= k.h + 1e-3
        && rep.chained_bound_holds(1e-9);
    check(
        ok,
        format!("h={:.7} C={:.9} rho={:.6} max factor={:.3e}", k.h, k.c_const, k.rho, rep.max_factor()),
    )
}

fn dense(m: &SymMatrix, t: f64, b: &Bindings) -> Vec<Vec<f64>> {
    let n = m.dim();
    (0..n).map(|i| (0..n).map(|j| m.get(i, j).eval(t, b).unwrap()).collect()).collect()
}

fn c11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let names = ["damped-newton", "first-order-hessian", "second-order-hessian", "nag", "hessian-nag"];
    let seqs = generate_sequences();
    let (mu, l) = (1.0, 4.0);
    let (mut checked, mut pairs) = (0, 0);
    while pairs < 20 {
        let name = *names.choose(&mut rng).unwrap();
        let g = if name.contains("nag") && name != "hessian-nag" { GammaForm::Log } else { GammaForm::Linear };
        let seq = seqs.choose(&mut rng).unwrap();
        let p: PQPair = initial_pair(&catalog::by_name(name).unwrap())
            .apply_sequence(&seq.ops())
            .unwrap()
            .map_entries(|e| e.substitute_gamma(&g));
        let b = Bindings::new()
            .with(Param::K, rng.gen_range(0.0..0.5))
            .with(Param::Mu, mu)
            .with(Param::L, l)
            .with(Param::A, rng.gen_range(0.5..3.0))
            .with(Param::B, rng.gen_range(0.0..0.5))
            .with(Param::R, rng.gen_range(2.0..6.0));
        let t = rng.gen_range(0.5..20.0);
        let at = |m: &SymMatrix, lam: f64, th: f64| {
            dense(m, t, &b.clone().with(Param::Lambda, lam).with(Param::Theta, th))
        };
        let corners = [(mu, mu), (mu, l), (l, mu), (l, l)];
        let mut any = false;
        for m in [&p.p, &p.q] {
            if !corners.iter().all(|&(a, c)| numeric_psd(&at(m, a, c), 1e-10)) {
                continue;
            }
            any = true;
            for _ in 0..20 {
                let (a, c) = (rng.gen_range(mu..l), rng.gen_range(mu..l));
                checked += 1;
                if !numeric_psd(&at(m, a, c), 1e-9) {
                    return Err(format!("{name} {seq} at lambda={a:.4} theta={c:.4}"));
                }
            }
        }
        pairs += any as usize;
    }
    check(true, format!("{pairs} pairs, {checked} interior points, no counterexample"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, t: Instant, r: Outcome| {
        let s = t.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("criterion {n}: PASS ({s:.1}s) {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n}: FAIL ({s:.1}s) {d}")
            }
        }
    };
    let t = Instant::now();
    report(1, t, c1());
    let t = Instant::now();
    report(2, t, c2());
    let t = Instant::now();
    let rep = verify_catalog(1.0, 4.0);
    let (r3, r4) = c3_4(&rep);
    report(3, t, r3);
    report(4, t, r4);
    let t = Instant::now();
    report(5, t, c5());
    let t = Instant::now();
    report(6, t, c6());
    let t = Instant::now();
    report(7, t, c7());
    let t = Instant::now();
    report(8, t, c8());
    let t = Instant::now();
    report(9, t, c9());
    let t = Instant::now();
    report(10, t, c10());
    let t = Instant::now();
    report(11, t, c11());
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
