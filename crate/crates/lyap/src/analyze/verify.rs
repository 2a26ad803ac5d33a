//! Reproduces the known rate of every catalog system at given μ, L.

use super::{analyze_groups, best_rate, best_window, Curvature, RateQuery, TDomain, Validity};
use crate::catalog;
use crate::enumerate::{enumerate, PairGroup};
use crate::symexpr::{rat, GammaForm, Param};
use std::collections::HashMap;
use std::fmt::Write as _;

pub const REL_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub enum Expected {
    Rate(f64),
    /// lo ≤ k < hi
    Range(f64, f64),
    /// k is fixed; the certified window should end at this T.
    WindowEnd(f64),
}

#[derive(Clone, Debug)]
pub struct CatalogRow {
    pub name: &'static str,
    pub system: &'static str,
    pub query: RateQuery,
    pub expected: Expected,
    /// Best k, or the certified window end for `WindowEnd` rows.
    pub observed: Option<f64>,
    pub group_id: Option<usize>,
    pub ops: String,
    pub validity: String,
    pub pass: bool,
}

/// Group counts by the k each group reaches on the first-order system over
/// the grid b ∈ {−1/L, 0}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirstOrderSplit {
    pub at_special: usize,
    pub at_two_mu: usize,
    pub at_mu: usize,
    pub other: usize,
    pub excluded: usize,
}

#[derive(Clone, Debug)]
pub struct CatalogReport {
    pub mu: f64,
    pub l: f64,
    pub rows: Vec<CatalogRow>,
    pub split: FirstOrderSplit,
}

impl CatalogReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass) && self.split_pass()
    }

    pub fn split_pass(&self) -> bool {
        let s = &self.split;
        s.at_special == 1 && s.at_two_mu >= 20 && s.other == 0
    }

    pub fn mismatches(&self) -> Vec<&CatalogRow> {
        self.rows.iter().filter(|r| !r.pass).collect()
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Catalog verification (mu = {}, L = {})\n", self.mu, self.l);
        let _ = writeln!(s, "| row | system | gamma | expected | observed | group | ops | validity | result |");
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|");
        for r in &self.rows {
            let exp = match r.expected {
                Expected::Rate(k) => format!("k = {k:.6}"),
                Expected::Range(a, b) => format!("{a:.4} <= k < {b:.6}"),
                Expected::WindowEnd(t) => format!("T = {t:.6}"),
            };
            let obs = r.observed.map_or("-".to_string(), |x| format!("{x:.6}"));
            let gid = r.group_id.map_or("-".to_string(), |g| g.to_string());
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                r.name,
                r.system,
                r.query.gamma,
                exp,
                obs,
                gid,
                r.ops,
                r.validity,
                if r.pass { "ok" } else { "MISMATCH" }
            );
        }
        let sp = &self.split;
        let _ = writeln!(
            s,
            "\nFirst-order split over b in {{-1/L, 0}}: {} at mu/(1-mu/L), {} at 2mu, {} at mu, {} other, {} excluded ({})",
            sp.at_special,
            sp.at_two_mu,
            sp.at_mu,
            sp.other,
            sp.excluded,
            if self.split_pass() { "ok" } else { "MISMATCH" }
        );
        s
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * b.abs().max(1e-12)
}

/// The rows with their queries and expected values.
pub fn catalog_rows(mu: f64, l: f64) -> Vec<(&'static str, &'static str, RateQuery, Expected)> {
    let sm = mu.sqrt();
    let lin = || RateQuery::new(GammaForm::Linear, mu, l);
    let log = || RateQuery::new(GammaForm::Log, mu, l);
    let r5 = 5.0;
    let t7 = (((r5 - 1.0) / 2.0f64).powi(2) - 1.0).sqrt() / sm;
    let k8 = sm;
    let r8 = 4.0 * (k8 * k8 + mu) / (k8 * k8);
    let t8 = 2.0 * (k8 * k8 + mu) / k8.powi(3);
    let b_h = 2.0 * (l / (mu * (2.0 * l - mu))).sqrt();
    vec![
        ("damped Newton", "damped-newton", lin().convex(), Expected::Rate(1.0)),
        ("gradient flow", "first-order-hessian", lin().param(Param::B, 0.0), Expected::Rate(2.0 * mu)),
        (
            "first-order, b = -1/L",
            "first-order-hessian",
            lin().param(Param::B, -1.0 / l),
            Expected::Rate(mu / (1.0 - mu / l)),
        ),
        (
            "SC-NAG",
            "second-order-hessian",
            lin().param(Param::A, 2.0 * sm).param(Param::B, 0.0),
            Expected::Rate(sm),
        ),
        (
            "second-order Hessian",
            "second-order-hessian",
            lin().param(Param::A, sm).param(Param::B, 1.0 / sm),
            Expected::Rate(sm),
        ),
        ("NAG convex", "nag", log().convex().param(Param::R, 3.0), Expected::Rate(2.0)),
        (
            "NAG strong, log",
            "nag",
            log().param(Param::R, r5).domain(TDomain::From(t7)),
            Expected::Rate((r5 + 1.0) / 2.0),
        ),
        (
            "NAG strong, exp window",
            "nag",
            lin().param(Param::R, r8).domain(TDomain::Window(1e-2, 1e2)).with_k(k8),
            Expected::WindowEnd(t8),
        ),
        (
            "generalized NAG",
            "generalized-nag",
            RateQuery::new(GammaForm::Power { alpha: Some(rat(1, 2)) }, mu, l)
                .param(Param::R, 1.0)
                .domain(TDomain::Eventually),
            Expected::Range(2.0 / 3.0 - 1e-3, 2.0 / 3.0),
        ),
        (
            "Hessian-NAG",
            "hessian-nag",
            lin().param(Param::R, 0.0).param(Param::B, b_h),
            Expected::Rate((mu * l / (2.0 * l - mu)).sqrt()),
        ),
    ]
}

fn groups_for<'a>(cache: &'a mut HashMap<&'static str, Vec<PairGroup>>, name: &'static str) -> &'a [PairGroup] {
    cache.entry(name).or_insert_with(|| {
        enumerate(&catalog::by_name(name).expect("catalog name")).expect("enumeration").groups
    })
}

pub fn verify_catalog(mu: f64, l: f64) -> CatalogReport {
    let mut cache = HashMap::new();
    let mut rows = Vec::new();
    for (name, system, query, expected) in catalog_rows(mu, l) {
        let groups = groups_for(&mut cache, system);
        let results = analyze_groups(groups, &query);
        let best = match expected {
            Expected::WindowEnd(_) => best_window(&results),
            _ => best_rate(&results),
        };
        let observed = best.map(|b| match (&expected, &b.validity) {
            (Expected::WindowEnd(_), Validity::UpTo(t)) => *t,
            (Expected::WindowEnd(_), Validity::Window(_, hi)) => *hi,
            _ => b.k_max,
        });
        let pass = match (observed, &expected) {
            (None, _) => false,
            (Some(k), Expected::Rate(e)) => close(k, *e),
            (Some(k), Expected::Range(lo, hi)) => k >= *lo && k < *hi,
            (Some(t), Expected::WindowEnd(e)) => {
                let step = 10f64.powf(1.0 / super::POINTS_PER_DECADE as f64);
                t <= *e * (1.0 + 1e-12) && t * step > *e
            }
        };
        let ops = best.map_or(String::new(), |b| groups[b.group_id].members[0].to_string());
        rows.push(CatalogRow {
            name,
            system,
            expected,
            observed,
            group_id: best.map(|b| b.group_id),
            ops,
            validity: best.map_or(String::new(), |b| b.validity.to_string()),
            pass,
            query,
        });
    }
    let split = first_order_split_with(groups_for(&mut cache, "first-order-hessian"), mu, l);
    CatalogReport { mu, l, rows, split }
}

fn first_order_split_with(groups: &[PairGroup], mu: f64, l: f64) -> FirstOrderSplit {
    let q = RateQuery::new(GammaForm::Linear, mu, l).param_grid(Param::B, vec![-1.0 / l, 0.0]);
    debug_assert_eq!(q.curvature, Curvature::Strong);
    let special = mu / (1.0 - mu / l);
    let mut s = FirstOrderSplit { at_special: 0, at_two_mu: 0, at_mu: 0, other: 0, excluded: 0 };
    for (_, r) in analyze_groups(groups, &q) {
        match r {
            Err(_) => s.excluded += 1,
            Ok(r) if close(r.k_max, special) => s.at_special += 1,
            Ok(r) if close(r.k_max, 2.0 * mu) => s.at_two_mu += 1,
            Ok(r) if close(r.k_max, mu) => s.at_mu += 1,
            Ok(_) => s.other += 1,
        }
    }
    s
}

pub fn first_order_split(mu: f64, l: f64) -> FirstOrderSplit {
    let groups = enumerate(&catalog::first_order_hessian()).expect("enumeration").groups;
    first_order_split_with(&groups, mu, l)
}
