//! PSD conditions of a pair under a γ form and maximisation of the rate
//! parameter `k`.
//!
//! P and Q depend on λ and θ only through their diagonals, so positive
//! semidefiniteness on the square [μ, L]² follows from the four corners. In
//! convex mode the corners are {0, Λ} with Λ → ∞ handled through the sign
//! of the leading coefficient in Λ.

mod bootstrap;
mod minors;
mod verify;

pub use bootstrap::{bootstrap_rate_check, BootstrapError, BootstrapReport};
pub use minors::{numeric_psd, principal_minors, support, CompiledMinor, NumericMinor};
pub use verify::{catalog_rows, first_order_split, verify_catalog, CatalogReport, CatalogRow, Expected, FirstOrderSplit};

use crate::enumerate::PairGroup;
use crate::pq_core::{PQPair, SymMatrix};
use crate::symexpr::{big_f64, Bindings, Expr, GammaForm, Param};
use rayon::prelude::*;
use std::fmt;

/// Which values λ and θ range over.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Curvature {
    /// λ, θ ∈ [μ, L]
    Strong,
    /// λ, θ ∈ [0, ∞)
    Convex,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TDomain {
    AllPositive,
    /// For all sufficiently large t.
    Eventually,
    /// t ≥ T on the grid, plus the asymptotic sign conditions.
    From(f64),
    /// t ∈ (lo, hi]
    Window(f64, f64),
}

impl fmt::Display for TDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TDomain::AllPositive => f.write_str("all"),
            TDomain::Eventually => f.write_str("eventually"),
            TDomain::From(t) => write!(f, "from:{t}"),
            TDomain::Window(a, b) => write!(f, "window:{a}:{b}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RateQuery {
    pub gamma: GammaForm,
    pub mu: f64,
    pub l: f64,
    pub curvature: Curvature,
    /// Candidate values per free parameter; the Cartesian product is searched.
    pub grid: Vec<(Param, Vec<f64>)>,
    pub t_domain: TDomain,
    /// Check this k instead of maximising (used for window certification).
    pub fixed_k: Option<f64>,
}

impl RateQuery {
    pub fn new(gamma: GammaForm, mu: f64, l: f64) -> Self {
        RateQuery {
            gamma,
            mu,
            l,
            curvature: Curvature::Strong,
            grid: Vec::new(),
            t_domain: TDomain::AllPositive,
            fixed_k: None,
        }
    }

    pub fn convex(mut self) -> Self {
        self.curvature = Curvature::Convex;
        self
    }

    pub fn param(mut self, p: Param, v: f64) -> Self {
        self.grid.push((p, vec![v]));
        self
    }

    pub fn param_grid(mut self, p: Param, v: Vec<f64>) -> Self {
        self.grid.push((p, v));
        self
    }

    pub fn domain(mut self, d: TDomain) -> Self {
        self.t_domain = d;
        self
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.fixed_k = Some(k);
        self
    }

    fn base_bindings(&self) -> Bindings {
        let mut b = Bindings::new().with(Param::Mu, self.mu).with(Param::L, self.l);
        if let GammaForm::Power { alpha: Some(a) } = &self.gamma {
            b.set(Param::Alpha, big_f64(a));
        }
        b
    }

    /// Every point of the parameter grid as bindings.
    pub fn grid_points(&self) -> Vec<Bindings> {
        let mut pts = vec![self.base_bindings()];
        for (p, vals) in &self.grid {
            pts = pts
                .into_iter()
                .flat_map(|b| vals.iter().map(move |v| b.clone().with(*p, *v)))
                .collect();
        }
        pts
    }

    /// log-spaced grid with 200 points per decade.
    pub fn t_grid(&self) -> Vec<f64> {
        let (lo, hi) = match self.t_domain {
            TDomain::Window(a, b) => (a, b),
            TDomain::From(a) => (a, 1e6),
            _ => (1e-2, 1e6),
        };
        log_grid(lo, hi, POINTS_PER_DECADE)
    }
}

pub const POINTS_PER_DECADE: usize = 200;
pub const K_CAP: f64 = 65536.0;
pub const K_TOL: f64 = 1e-6;

pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi / lo).log10() * per_decade as f64).round().max(1.0) as usize;
    (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect()
}

/// Value substituted for λ or θ at a corner.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Corner {
    Mu,
    L,
    Zero,
    /// Unbounded; carried as the `lambda` symbol.
    Big,
}

impl Corner {
    fn expr(self) -> Expr {
        match self {
            Corner::Mu => Expr::param(Param::Mu),
            Corner::L => Expr::param(Param::L),
            Corner::Zero => Expr::zero(),
            Corner::Big => Expr::param(Param::Lambda),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CornerConditions {
    pub lambda: Corner,
    pub theta: Corner,
    pub p_minors: Vec<Expr>,
    pub q_minors: Vec<Expr>,
}

#[derive(Clone, Debug)]
pub struct PsdConditionSet {
    pub corners: Vec<CornerConditions>,
}

impl PsdConditionSet {
    pub fn n_minors(&self) -> usize {
        self.corners.iter().map(|c| c.p_minors.len() + c.q_minors.len()).sum()
    }

    pub fn all_minors(&self) -> impl Iterator<Item = &Expr> {
        self.corners.iter().flat_map(|c| c.p_minors.iter().chain(&c.q_minors))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyzeError {
    #[error("lambda or theta appears off the diagonal")]
    OffDiagonalParam,
    #[error("pair is not PSD even at k = 0 for any grid point")]
    NotPsdAtZero,
    #[error("A1 has not been applied")]
    MissingObjectiveGap,
}

fn corner_list(c: Curvature) -> [(Corner, Corner); 4] {
    match c {
        Curvature::Strong => [
            (Corner::Mu, Corner::Mu),
            (Corner::Mu, Corner::L),
            (Corner::L, Corner::Mu),
            (Corner::L, Corner::L),
        ],
        Curvature::Convex => [
            (Corner::Zero, Corner::Zero),
            (Corner::Zero, Corner::Big),
            (Corner::Big, Corner::Zero),
            (Corner::Big, Corner::Big),
        ],
    }
}

fn at_corner(m: &SymMatrix, lam: Corner, th: Corner) -> SymMatrix {
    let (le, te) = (lam.expr(), th.expr());
    // λ first: the Big corner for θ reintroduces the `lambda` symbol.
    m.map(|e| e.substitute_param(Param::Lambda, &le).substitute_param(Param::Theta, &te))
}

/// Principal minors of P and Q at each (λ, θ) corner, with γ substituted.
pub fn psd_conditions(
    pair: &PQPair,
    g: &GammaForm,
    curvature: Curvature,
) -> Result<PsdConditionSet, AnalyzeError> {
    if !pair.objective_gap {
        return Err(AnalyzeError::MissingObjectiveGap);
    }
    if !pair.params_diagonal_only() {
        return Err(AnalyzeError::OffDiagonalParam);
    }
    let sub = pair.map_entries(|e| e.substitute_gamma(g));
    let corners = corner_list(curvature)
        .into_iter()
        .map(|(l, t)| CornerConditions {
            lambda: l,
            theta: t,
            p_minors: principal_minors(&at_corner(&sub.p, l, t)).into_iter().map(|x| x.1).collect(),
            q_minors: principal_minors(&at_corner(&sub.q, l, t)).into_iter().map(|x| x.1).collect(),
        })
        .collect();
    Ok(PsdConditionSet { corners })
}

/// Compiled conditions for repeated numeric checks.
#[derive(Clone, Debug)]
pub struct Conditions {
    pub set: PsdConditionSet,
    compiled: Vec<CompiledMinor>,
}

impl Conditions {
    pub fn new(set: PsdConditionSet) -> Self {
        let mut compiled: Vec<CompiledMinor> = Vec::new();
        let mut seen: Vec<&Expr> = Vec::new();
        for m in set.all_minors() {
            if !seen.contains(&m) {
                seen.push(m);
                compiled.push(CompiledMinor::new(m));
            }
        }
        Conditions { set, compiled }
    }

    pub fn bind(&self, b: &Bindings) -> Vec<NumericMinor> {
        self.compiled.iter().map(|c| c.bind(b)).collect()
    }
}

/// Numeric feasibility context: the t-grid in log form.
struct Grid {
    ln_t: Vec<f64>,
    t: Vec<f64>,
}

impl Grid {
    fn new(q: &RateQuery) -> Self {
        let t = q.t_grid();
        Grid { ln_t: t.iter().map(|x| x.ln()).collect(), t }
    }
}

fn needs_grid(d: TDomain) -> bool {
    !matches!(d, TDomain::Eventually)
}

fn needs_asymptotics(d: TDomain) -> bool {
    !matches!(d, TDomain::Window(..))
}

fn feasible_numeric(ms: &[NumericMinor], domain: TDomain, grid: &Grid) -> bool {
    if needs_asymptotics(domain) && ms.iter().any(|m| m.leading_positive() == Some(false)) {
        return false;
    }
    if needs_grid(domain) {
        for m in ms {
            if !grid.ln_t.iter().all(|&lt| m.ok_at(lt)) {
                return false;
            }
        }
    }
    true
}

/// Feasibility of the conditions at rate `k` and parameter point `b`.
pub fn feasible(conds: &Conditions, k: f64, query: &RateQuery, b: &Bindings) -> bool {
    let grid = Grid::new(query);
    feasible_at(conds, k, query, b, &grid)
}

fn feasible_at(conds: &Conditions, k: f64, query: &RateQuery, b: &Bindings, grid: &Grid) -> bool {
    let mut b = b.clone();
    b.set(Param::K, k);
    feasible_numeric(&conds.bind(&b), query.t_domain, grid)
}

/// Largest grid point where some minor is negative.
fn last_violation(ms: &[NumericMinor], grid: &Grid) -> Option<f64> {
    grid.ln_t
        .iter()
        .zip(&grid.t)
        .rev()
        .find(|(lt, _)| ms.iter().any(|m| !m.ok_at(**lt)))
        .map(|(_, t)| *t)
}

/// End of the initial stretch of the window on which every minor is ≥ 0.
fn first_violation(ms: &[NumericMinor], grid: &Grid) -> Option<usize> {
    grid.ln_t.iter().position(|lt| ms.iter().any(|m| !m.ok_at(*lt)))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Validity {
    AllPositive,
    /// Certified for t ≥ T.
    From(f64),
    /// Certified for t in (lo, T].
    UpTo(f64),
    Window(f64, f64),
}

impl fmt::Display for Validity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Validity::AllPositive => f.write_str("t>0"),
            Validity::From(t) => write!(f, "t>={t:.6}"),
            Validity::UpTo(t) => write!(f, "t<={t:.6}"),
            Validity::Window(a, b) => write!(f, "{a}<t<={b}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateStatus {
    Ok,
    /// k_hi reached the cap while still feasible.
    CapHit,
    /// Some k below k_max failed the check.
    NonMonotone,
}

impl fmt::Display for RateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateStatus::Ok => "ok",
            RateStatus::CapHit => "cap-hit",
            RateStatus::NonMonotone => "non-monotone",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Certificate {
    pub t_grid: (f64, f64, usize),
    pub n_minors: usize,
    /// (exponent, coefficient) of the leading term of each minor at k_max.
    pub leading_terms: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct RateResult {
    pub group_id: usize,
    pub k_max: f64,
    /// The feasible set is open at k_max (strict asymptotic conditions).
    pub supremum: bool,
    pub params: Vec<(Param, f64)>,
    pub validity: Validity,
    pub certificate: Certificate,
    pub status: RateStatus,
    /// Grid points at which the pair failed even at k = 0.
    pub excluded_points: usize,
}

impl RateResult {
    pub fn params_string(&self) -> String {
        let v: Vec<String> = self.params.iter().map(|(p, x)| format!("{p}={x}")).collect();
        v.join(";")
    }
}

fn grid_params(q: &RateQuery, b: &Bindings) -> Vec<(Param, f64)> {
    q.grid.iter().map(|(p, _)| (*p, b.get(*p).unwrap())).collect()
}

/// Bisection for the largest feasible k at one parameter point.
fn bisect(conds: &Conditions, q: &RateQuery, b: &Bindings, grid: &Grid) -> (f64, RateStatus) {
    let f = |k: f64| feasible_at(conds, k, q, b, grid);
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > K_CAP {
            return (lo, RateStatus::CapHit);
        }
    }
    let tol = K_TOL * hi;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let monotone = (1..8).all(|i| f(lo * i as f64 / 8.0));
    (lo, if monotone { RateStatus::Ok } else { RateStatus::NonMonotone })
}

/// Maximise k over the parameter grid.
pub fn max_rate(pair: &PQPair, query: &RateQuery) -> Result<RateResult, AnalyzeError> {
    let conds = Conditions::new(psd_conditions(pair, &query.gamma, query.curvature)?);
    max_rate_conditions(&conds, 0, query)
}

pub fn max_rate_conditions(
    conds: &Conditions,
    group_id: usize,
    query: &RateQuery,
) -> Result<RateResult, AnalyzeError> {
    let grid = Grid::new(query);
    // (score, k, status, bindings); the score is k, or the certified window
    // end when k is fixed.
    let mut best: Option<(f64, f64, RateStatus, Bindings)> = None;
    let mut excluded = 0;
    for b in query.grid_points() {
        let (score, k, status) = match query.fixed_k {
            Some(k) if !matches!(query.t_domain, TDomain::Window(..)) => {
                if !feasible_at(conds, k, query, &b, &grid) {
                    excluded += 1;
                    continue;
                }
                (k, k, RateStatus::Ok)
            }
            Some(k) => {
                let ms = conds.bind(&b.clone().with(Param::K, k));
                match first_violation(&ms, &grid) {
                    Some(0) => {
                        excluded += 1;
                        continue;
                    }
                    Some(i) => (grid.t[i - 1], k, RateStatus::Ok),
                    None => (f64::INFINITY, k, RateStatus::Ok),
                }
            }
            None => {
                if !feasible_at(conds, 0.0, query, &b, &grid) {
                    excluded += 1;
                    continue;
                }
                let (k, st) = bisect(conds, query, &b, &grid);
                (k, k, st)
            }
        };
        if best.as_ref().map_or(true, |x| score > x.0) {
            best = Some((score, k, status, b));
        }
    }
    let (_, k, status, mut b) = best.ok_or(AnalyzeError::NotPsdAtZero)?;
    b.set(Param::K, k);
    let ms = conds.bind(&b);
    let validity = match query.t_domain {
        TDomain::AllPositive => Validity::AllPositive,
        TDomain::From(t) => Validity::From(t),
        TDomain::Eventually => {
            let step = 10f64.powf(1.0 / POINTS_PER_DECADE as f64);
            Validity::From(last_violation(&ms, &grid).map_or(grid.t[0], |t| t * step))
        }
        TDomain::Window(lo, hi) => match (query.fixed_k, first_violation(&ms, &grid)) {
            (Some(_), Some(i)) if i > 0 => Validity::UpTo(grid.t[i - 1]),
            _ => Validity::Window(lo, hi),
        },
    };
    let t_grid = (grid.t[0], *grid.t.last().unwrap(), grid.t.len());
    Ok(RateResult {
        group_id,
        k_max: k,
        supremum: matches!(query.t_domain, TDomain::Eventually),
        params: grid_params(query, &b),
        validity,
        certificate: Certificate {
            t_grid,
            n_minors: conds.set.n_minors(),
            leading_terms: ms.iter().filter_map(|m| m.leading()).collect(),
        },
        status,
        excluded_points: excluded,
    })
}

/// One row per group: the rate result or the reason it was excluded.
pub fn analyze_groups(
    groups: &[PairGroup],
    query: &RateQuery,
) -> Vec<(usize, Result<RateResult, AnalyzeError>)> {
    groups
        .par_iter()
        .map(|g| {
            let r = psd_conditions(&g.representative, &query.gamma, query.curvature)
                .map(Conditions::new)
                .and_then(|c| max_rate_conditions(&c, g.group_id, query));
            (g.group_id, r)
        })
        .collect()
}

/// Best result over all groups.
pub fn best_rate(
    results: &[(usize, Result<RateResult, AnalyzeError>)],
) -> Option<&RateResult> {
    results
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok())
        .fold(None, |acc: Option<&RateResult>, r| match acc {
            Some(a) if a.k_max >= r.k_max => Some(a),
            _ => Some(r),
        })
}

/// For window queries with fixed k: the group certifying the longest window.
pub fn best_window(
    results: &[(usize, Result<RateResult, AnalyzeError>)],
) -> Option<&RateResult> {
    let end = |r: &RateResult| match r.validity {
        Validity::UpTo(t) => t,
        Validity::Window(_, hi) => hi,
        _ => f64::NAN,
    };
    results
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok())
        .fold(None, |acc: Option<&RateResult>, r| match acc {
            Some(a) if end(a) >= end(r) => Some(a),
            _ => Some(r),
        })
}

pub fn write_report_csv<W: std::io::Write>(
    mut w: W,
    header: &str,
    groups: &[PairGroup],
    results: &[(usize, Result<RateResult, AnalyzeError>)],
) -> Result<(), csv::Error> {
    writeln!(w, "# {header}")?;
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["group_id", "ops", "k_max", "params", "t_validity", "n_minors", "status"])?;
    for (g, (id, r)) in groups.iter().zip(results) {
        let ops = g.members[0].to_string();
        match r {
            Ok(r) => w.write_record([
                id.to_string(),
                ops,
                format!("{:.9}", r.k_max),
                r.params_string(),
                r.validity.to_string(),
                r.certificate.n_minors.to_string(),
                r.status.to_string(),
            ])?,
            Err(e) => w.write_record([
                id.to_string(),
                ops,
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                match e {
                    AnalyzeError::NotPsdAtZero => "non-psd".to_string(),
                    other => other.to_string(),
                },
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests;
