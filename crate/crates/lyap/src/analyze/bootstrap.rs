//! One step of the bootstrap argument: a pair whose Q is PSD except for the
//! (1,3) coupling gives a Lyapunov candidate whose growth is controlled by an
//! already known rate.

use super::{max_rate, psd_conditions, AnalyzeError, Conditions, RateQuery, TDomain};
use crate::catalog;
use crate::pq_core::{lyapunov_scalar_forms, PQPair};
use crate::simulate::{
    integrate, lambda_theta, measure_rate_window, QuadraticObjective, SimError, SimSetup,
};
use crate::symexpr::{Expr, GammaForm, Param};

#[derive(Debug, thiserror::Error)]
pub enum BootstrapError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Analyze(#[from] AnalyzeError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Debug)]
pub struct BootstrapReport {
    pub r: f64,
    /// Rate certified by the decoupled pair (Q13 set to zero).
    pub k_candidate: f64,
    pub known_rate_exponent: f64,
    /// k − 2 − known ≤ 0: the boundary term stays O(1).
    pub bounded_in_theory: bool,
    /// max (E(t) − E(t0)), relative to 1 + |E(t0)|.
    pub e_rise: f64,
    /// max E over the second half (in log t) over max E over the first half.
    pub e_growth: f64,
    pub fitted_exponent: f64,
    pub fit_window: (f64, f64),
    /// 2r/3 − 0.15
    pub required_exponent: f64,
}

impl BootstrapReport {
    pub fn passed(&self) -> bool {
        self.bounded_in_theory && self.e_growth <= 1.0 + 1e-9 && self.fitted_exponent >= self.required_exponent
    }
}

/// Largest k for which `pair` with Q13 removed is eventually PSD, after
/// checking that P is PSD there and that Q13 is really present.
fn candidate_rate(pair: &PQPair, query: &RateQuery) -> Result<f64, BootstrapError> {
    let mut decoupled = pair.clone();
    if decoupled.q.get(0, 2).is_zero() {
        return Err(BootstrapError::Precondition("Q13 is already zero".into()));
    }
    decoupled.q.set(0, 2, Expr::zero());
    let q = query.clone().domain(TDomain::Eventually);
    let k = max_rate(&decoupled, &q)?.k_max;
    let mut p_only = decoupled.clone();
    p_only.q = crate::pq_core::SymMatrix::zeros(5);
    let conds = Conditions::new(psd_conditions(&p_only, &query.gamma, query.curvature)?);
    let pq = query.clone().domain(TDomain::AllPositive);
    let b = pq.grid_points()[0].clone();
    if !super::feasible(&conds, k, &pq, &b) {
        return Err(BootstrapError::Precondition(format!("P is not PSD for all t > 0 at k = {k}")));
    }
    Ok(k)
}

/// Simulates NAG (r from `query`) on a dim-10 quadratic over t ∈ [1, 1000]
/// and evaluates the candidate E(t) = e^γ(p + f − f*) along the way.
pub fn bootstrap_rate_check(
    pair: &PQPair,
    known_rate_exponent: f64,
    query: &RateQuery,
) -> Result<BootstrapReport, BootstrapError> {
    if query.gamma != GammaForm::Log {
        return Err(BootstrapError::Precondition("bootstrap is stated for the log form".into()));
    }
    let point = query.grid_points()[0].clone();
    let r = point
        .get(Param::R)
        .ok_or_else(|| BootstrapError::Precondition("query must fix r".into()))?;
    if !(r > 3.0) {
        return Err(BootstrapError::Precondition(format!("needs r > 3, got {r}")));
    }
    let k = candidate_rate(pair, query)?;
    let obj = QuadraticObjective::log_spaced(10, query.mu, query.l);
    let setup = SimSetup::standard(10, 1.0, 1000.0, 1e-2).every(10);
    let traj = integrate(&catalog::nag(), &point, &obj, &setup)?;

    let forms = lyapunov_scalar_forms(pair, &GammaForm::Log);
    let mut e = Vec::with_capacity(traj.len());
    for i in 0..traj.len() {
        let t = traj.times[i];
        let y = obj.offset(&traj.x[i]);
        let v = &traj.v[i];
        let Some((lam, th)) = lambda_theta(&obj, &y, v) else {
            continue;
        };
        let b = point.clone().with(Param::K, k).with(Param::Lambda, lam).with(Param::Theta, th);
        let grad = obj.hess_vec(&y);
        let hv = obj.hess_vec(v);
        let vecs: [&[f64]; 5] = [&y, &grad, v, &hv, &traj.a[i]];
        let p = forms.p_value(t, &vecs, &b).map_err(SimError::from)?;
        e.push((t, t.powf(k) * (p + traj.gaps[i])));
    }
    let e0 = e.first().map_or(f64::NAN, |x| x.1);
    let e_rise = e.iter().map(|x| (x.1 - e0) / (1.0 + e0.abs())).fold(f64::NEG_INFINITY, f64::max);
    let split = (traj.times[0] * traj.times.last().unwrap()).sqrt();
    let max_in = |lo: f64, hi: f64| {
        e.iter().filter(|x| x.0 >= lo && x.0 <= hi).map(|x| x.1).fold(f64::NEG_INFINITY, f64::max)
    };
    let e_growth = max_in(split, f64::INFINITY) / max_in(0.0, split);
    let fit = measure_rate_window(&traj, &GammaForm::Log, &point, 10.0, 1000.0)?;
    Ok(BootstrapReport {
        r,
        k_candidate: k,
        known_rate_exponent,
        bounded_in_theory: k - 2.0 - known_rate_exponent <= 1e-9,
        e_rise,
        e_growth,
        fitted_exponent: fit.k,
        fit_window: (fit.t_lo, fit.t_hi),
        required_exponent: 2.0 * r / 3.0 - 0.15,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pq_core::{initial_pair, OperationId::*};

    fn candidate() -> PQPair {
        initial_pair(&catalog::nag()).apply_sequence(&[A1, B1, B3, B2]).unwrap()
    }

    fn query(r: f64) -> RateQuery {
        RateQuery::new(GammaForm::Log, 1.0, 4.0).param(Param::R, r)
    }

    #[test]
    fn preconditions() {
        let p = candidate();
        let lin = RateQuery::new(GammaForm::Linear, 1.0, 4.0).param(Param::R, 4.5);
        assert!(matches!(bootstrap_rate_check(&p, 2.0, &lin), Err(BootstrapError::Precondition(_))));
        assert!(matches!(bootstrap_rate_check(&p, 2.0, &query(3.0)), Err(BootstrapError::Precondition(_))));
        let no_r = RateQuery::new(GammaForm::Log, 1.0, 4.0);
        assert!(bootstrap_rate_check(&p, 2.0, &no_r).is_err());
        let decoupled = initial_pair(&catalog::nag()).apply_sequence(&[A1, B1, B2, B3]).unwrap();
        assert!(matches!(
            bootstrap_rate_check(&decoupled, 2.0, &query(4.5)),
            Err(BootstrapError::Precondition(_))
        ));
    }

    #[test]
    fn candidate_rate_is_two_thirds_r() {
        for r in [3.5, 4.5, 6.0] {
            let k = candidate_rate(&candidate(), &query(r)).unwrap();
            assert!((k - 2.0 * r / 3.0).abs() < 1e-5, "{r}: {k}");
        }
    }

    #[test]
    fn r45_step_certifies_faster_decay() {
        let rep = bootstrap_rate_check(&candidate(), 2.0, &query(4.5)).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.fitted_exponent >= 2.85);
    }

    #[test]
    fn edge_r6_stays_bounded() {
        let rep = bootstrap_rate_check(&candidate(), 2.0, &query(6.0)).unwrap();
        assert!(rep.bounded_in_theory);
        assert!(rep.e_growth <= 1.0, "{rep:?}");
    }
}
