//! Closed-form Lyapunov functions for the catalog systems, evaluated along
//! simulated trajectories.

use super::{integrate, QuadraticObjective, SimError, SimSetup, Trajectory};
use crate::catalog;
use crate::pq_core::{dot, OdeSystemSpec};
use crate::symexpr::{Bindings, Param};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LyapunovId {
    DampedNewton,
    FirstOrderHessian,
    GradientFlow,
    ScNag,
    SecondOrderHessian,
    NagConvex,
    NagStrongLog,
    NagStrongExp,
    GeneralizedNag,
}

impl LyapunovId {
    pub const ALL: [LyapunovId; 9] = [
        LyapunovId::DampedNewton,
        LyapunovId::FirstOrderHessian,
        LyapunovId::GradientFlow,
        LyapunovId::ScNag,
        LyapunovId::SecondOrderHessian,
        LyapunovId::NagConvex,
        LyapunovId::NagStrongLog,
        LyapunovId::NagStrongExp,
        LyapunovId::GeneralizedNag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LyapunovId::DampedNewton => "damped-newton",
            LyapunovId::FirstOrderHessian => "first-order-hessian",
            LyapunovId::GradientFlow => "gradient-flow",
            LyapunovId::ScNag => "sc-nag",
            LyapunovId::SecondOrderHessian => "second-order-hessian",
            LyapunovId::NagConvex => "nag-convex",
            LyapunovId::NagStrongLog => "nag-strong-log",
            LyapunovId::NagStrongExp => "nag-strong-exp",
            LyapunovId::GeneralizedNag => "generalized-nag",
        }
    }
}

impl fmt::Display for LyapunovId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One function together with the system, rate and time range it is
/// claimed for.
#[derive(Clone, Debug)]
pub struct LyapunovCase {
    pub id: LyapunovId,
    pub k: f64,
    pub mu: f64,
    pub l: f64,
    pub spec: OdeSystemSpec,
    pub params: Bindings,
    pub objective: QuadraticObjective,
    pub setup: SimSetup,
}

impl LyapunovCase {
    /// The catalog-optimal k and a default run for `id`.
    pub fn standard(id: LyapunovId, mu: f64, l: f64) -> LyapunovCase {
        use LyapunovId::*;
        let sm = mu.sqrt();
        let obj = QuadraticObjective::log_spaced(10, mu, l);
        let b = Bindings::new().with(Param::Mu, mu).with(Param::L, l);
        let (k, spec, params, objective, t0, t1, dt) = match id {
            DampedNewton => {
                let o = QuadraticObjective::log_spaced(10, 1e-2 * mu, l);
                (1.0, catalog::damped_newton(), b, o, 0.0, 10.0, 1e-3)
            }
            FirstOrderHessian => {
                // b = −1/L makes I + b∇²f singular at the top eigenvalue.
                let o = QuadraticObjective::log_spaced(10, mu, 0.9 * l);
                let p = b.with(Param::B, -1.0 / l);
                (mu / (1.0 - mu / l), catalog::first_order_hessian(), p, o, 0.0, 5.0, 1e-3)
            }
            GradientFlow => {
                (2.0 * mu, catalog::first_order_hessian(), b.with(Param::B, 0.0), obj, 0.0, 5.0, 1e-3)
            }
            ScNag => {
                let p = b.with(Param::A, 2.0 * sm).with(Param::B, 0.0);
                (sm, catalog::second_order_hessian(), p, obj, 0.0, 10.0, 1e-3)
            }
            SecondOrderHessian => {
                let p = b.with(Param::A, sm).with(Param::B, 1.0 / sm);
                (sm, catalog::second_order_hessian(), p, obj, 0.0, 10.0, 1e-3)
            }
            NagConvex => {
                let o = QuadraticObjective::log_spaced(10, 1e-3 * mu, l);
                (2.0, catalog::nag(), b.with(Param::R, 3.0), o, 1.0, 100.0, 1e-3)
            }
            NagStrongLog => {
                // T = √3/√μ gives r = 1 + 2√(1 + μT²) = 5.
                let t_start = 3f64.sqrt() / sm;
                let r = 1.0 + 2.0 * (1.0 + mu * t_start * t_start).sqrt();
                ((r + 1.0) / 2.0, catalog::nag(), b.with(Param::R, r), obj, t_start, 50.0, 1e-3)
            }
            NagStrongExp => {
                let k: f64 = sm;
                let r = 4.0 * (k * k + mu) / (k * k);
                let t_end = 2.0 * (k * k + mu) / k.powi(3);
                (k, catalog::nag(), b.with(Param::R, r), obj, t_end / 16.0, t_end, 1e-4)
            }
            GeneralizedNag => {
                let p = b.with(Param::R, 1.0).with(Param::Alpha, 0.5);
                (0.6, catalog::generalized_nag(), p, obj, 10.0, 400.0, 1e-3)
            }
        };
        let mut setup = SimSetup::standard(objective.dim(), t0, t1, dt);
        setup.record_every = 10;
        LyapunovCase { id, k, mu, l, spec, params, objective, setup }
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    /// E(t) at the state y = x − x*, v = ẋ.
    pub fn energy(&self, t: f64, y: &[f64], v: &[f64]) -> f64 {
        use LyapunovId::*;
        let o = &self.objective;
        let k = self.k;
        let sm = self.mu.sqrt();
        let gap = o.gap_y(y);
        // f* − f − ⟨∇f, x* − x⟩
        let breg = dot(&o.hess_vec(y), y) - gap;
        let (yy, yv, vv) = (dot(y, y), dot(y, v), dot(v, v));
        let ekt = (k * t).exp();
        let p = |x: Param| self.params.get(x).unwrap();
        match self.id {
            DampedNewton => k * ekt * breg + ekt * gap,
            FirstOrderHessian => {
                ekt * (0.5 * k * yy - k / self.l * breg + gap)
            }
            GradientFlow => ekt * gap,
            ScNag => ekt * ((sm * k - 0.5 * k * k) * yy + k * yv + 0.5 * vv + gap),
            SecondOrderHessian => ekt * (k / sm * breg + k * yv + 0.5 * vv + gap),
            NagConvex | NagStrongLog => {
                let r = p(Param::R);
                let c = if self.id == NagConvex { 4.0 * k - k * k } else { (r + 1.0) * k - k * k };
                t.powf(k) * (c / (2.0 * t * t) * yy + k / t * yv + 0.5 * vv + gap)
            }
            NagStrongExp => {
                let c = 2.0 * (k * k + self.mu) / (k * t) - 0.5 * k * k;
                ekt * (c * yy + k * yv + 0.5 * vv + gap)
            }
            GeneralizedNag => {
                let (r, a) = (p(Param::R), p(Param::Alpha));
                let eg = (k * r / (1.0 - a) * t.powf(1.0 - a)).exp();
                eg * (0.5 * r * r * k * t.powf(-2.0 * a) * yy
                    + r * k * t.powf(-a) * yv
                    + 0.5 * vv
                    + gap)
            }
        }
    }

    pub fn energy_series(&self, traj: &Trajectory) -> Vec<f64> {
        (0..traj.len())
            .map(|i| self.energy(traj.times[i], &self.objective.offset(&traj.x[i]), &traj.v[i]))
            .collect()
    }

    pub fn simulate(&self) -> Result<Trajectory, SimError> {
        integrate(&self.spec, &self.params, &self.objective, &self.setup)
    }
}

#[derive(Clone, Debug)]
pub struct MonotonicityReport {
    pub id: LyapunovId,
    pub k: f64,
    /// max (E_{i+1} − E_i)/(1 + |E_i|)
    pub max_step_increase: f64,
    /// max over j of (E_j − min_{i<j} E_i)/(1 + |min_{i<j} E_i|); catches slow
    /// drifts that no single step reveals.
    pub max_rise: f64,
    pub samples: usize,
}

impl MonotonicityReport {
    pub fn from_series(id: LyapunovId, k: f64, e: &[f64]) -> Self {
        let mut step = f64::NEG_INFINITY;
        let mut rise: f64 = 0.0;
        let mut lo = f64::INFINITY;
        for w in e.windows(2) {
            step = step.max((w[1] - w[0]) / (1.0 + w[0].abs()));
        }
        for &x in e {
            if lo.is_finite() {
                rise = rise.max((x - lo) / (1.0 + lo.abs()));
            }
            lo = lo.min(x);
        }
        MonotonicityReport { id, k, max_step_increase: step, max_rise: rise, samples: e.len() }
    }

    pub fn non_increasing(&self, tol: f64) -> bool {
        self.max_rise <= tol
    }
}

pub fn monotonicity_check(case: &LyapunovCase) -> Result<MonotonicityReport, SimError> {
    let traj = case.simulate()?;
    Ok(MonotonicityReport::from_series(case.id, case.k, &case.energy_series(&traj)))
}
