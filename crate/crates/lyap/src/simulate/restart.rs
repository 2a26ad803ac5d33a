//! Restarted NAG-type flow ẍ + (4(l²+1)/(l²t))ẋ + ∇f = 0 on the clock window
//! [T/c, T].

use super::{integrate_dynamics, Dynamics, QuadraticObjective, SimError, SimSetup};
use crate::catalog;
use crate::pq_core::dot;
use crate::symexpr::{Bindings, Param};

#[derive(Clone, Debug)]
pub struct RestartSpec {
    pub l: f64,
    pub c: f64,
    pub mu: f64,
    pub rounds: usize,
    pub objective: QuadraticObjective,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub dt: f64,
}

impl RestartSpec {
    /// dim-10 log-spaced quadratic on [μ, L], x0 = 1, ẋ0 = 0.
    pub fn standard(l: f64, c: f64, mu: f64, big_l: f64, rounds: usize) -> Self {
        let objective = QuadraticObjective::log_spaced(10, mu, big_l);
        RestartSpec {
            l,
            c,
            mu,
            rounds,
            x0: vec![1.0; 10],
            v0: vec![0.0; 10],
            objective,
            dt: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RestartConstants {
    /// (2(c−1)l² + 1)·e^{(−1+1/c)·2(l²+1)/l²}: the per-round contraction bound.
    pub rho: f64,
    /// ρ^{c l³/(2(c−1)(l²+1))}: the contraction per unit of √μ·t.
    pub h: f64,
    /// Prefactor 1/ρ of the global bound.
    pub c_const: f64,
    /// T = 2(l²+1)/(l³√μ)
    pub t_end: f64,
    pub t_start: f64,
    /// Friction coefficient 4(l²+1)/l².
    pub r: f64,
}

pub fn restart_constants(c: f64, l: f64, mu: f64) -> Result<RestartConstants, SimError> {
    if !(l > 0.0) || !(c > 1.0) || !(mu > 0.0) {
        return Err(SimError::Invalid(format!("restart needs l > 0, c > 1, mu > 0 (got l={l}, c={c}, mu={mu})")));
    }
    let l2 = l * l;
    let rho = (2.0 * (c - 1.0) * l2 + 1.0) * ((-1.0 + 1.0 / c) * 2.0 * (l2 + 1.0) / l2).exp();
    let h = rho.powf(c * l.powi(3) / (2.0 * (c - 1.0) * (l2 + 1.0)));
    let t_end = 2.0 * (l2 + 1.0) / (l.powi(3) * mu.sqrt());
    Ok(RestartConstants {
        rho,
        h,
        c_const: 1.0 / rho,
        t_end,
        t_start: t_end / c,
        r: 4.0 * (l2 + 1.0) / l2,
    })
}

#[derive(Clone, Debug)]
pub struct RestartReport {
    pub constants: RestartConstants,
    /// g_0 … g_rounds
    pub g: Vec<f64>,
    /// g_i / g_{i−1}
    pub factors: Vec<f64>,
    /// ρ ≤ 1 fails: the scheme is not guaranteed to contract.
    pub assumption_violated: bool,
}

impl RestartReport {
    /// g_i ≤ ρ^i g_0 for every round, with relative slack `tol`.
    pub fn chained_bound_holds(&self, tol: f64) -> bool {
        let g0 = self.g[0];
        self.g.iter().enumerate().all(|(i, g)| *g <= self.constants.rho.powi(i as i32) * g0 * (1.0 + tol))
    }

    pub fn max_factor(&self) -> f64 {
        self.factors.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W, header: &str) -> Result<(), csv::Error> {
        writeln!(w, "# {header}")?;
        let k = &self.constants;
        writeln!(w, "# rho={:.9} h={:.9} C={:.9} T={:.9} r={:.9}", k.rho, k.h, k.c_const, k.t_end, k.r)?;
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["round", "elapsed_time", "g", "factor", "bound_rho_pow_i_g0"])?;
        let dur = k.t_end - k.t_start;
        for (i, g) in self.g.iter().enumerate() {
            w.write_record([
                i.to_string(),
                format!("{:.9e}", dur * i as f64),
                format!("{g:.9e}"),
                if i == 0 { String::new() } else { format!("{:.9e}", self.factors[i - 1]) },
                format!("{:.9e}", k.rho.powi(i as i32) * self.g[0]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// f − f* + ½‖ẋ + l√μ (x − x*)‖²
fn g_value(obj: &QuadraticObjective, x: &[f64], v: &[f64], l: f64, mu: f64) -> f64 {
    let y = obj.offset(x);
    let w: Vec<f64> = v.iter().zip(&y).map(|(v, y)| v + l * mu.sqrt() * y).collect();
    obj.gap_y(&y) + 0.5 * dot(&w, &w)
}

pub fn run_restart(spec: &RestartSpec) -> Result<RestartReport, SimError> {
    let k = restart_constants(spec.c, spec.l, spec.mu)?;
    let params = Bindings::new().with(Param::R, k.r);
    let dy = Dynamics::new(&catalog::nag(), &params, &spec.objective)?;
    let (mut x, mut v) = (spec.x0.clone(), spec.v0.clone());
    let mut g = vec![g_value(&spec.objective, &x, &v, spec.l, spec.mu)];
    let steps = ((k.t_end - k.t_start) / spec.dt).round() as usize;
    for _ in 0..spec.rounds {
        let setup = SimSetup {
            x0: x.clone(),
            v0: v.clone(),
            t0: k.t_start,
            t1: k.t_end,
            dt: spec.dt,
            record_every: steps.max(1),
        };
        let tr = integrate_dynamics(&dy, &spec.objective, &setup)?;
        x = tr.x.last().unwrap().clone();
        v = tr.v.last().unwrap().clone();
        g.push(g_value(&spec.objective, &x, &v, spec.l, spec.mu));
    }
    let factors = g.windows(2).map(|w| w[1] / w[0]).collect();
    Ok(RestartReport { constants: k, g, factors, assumption_violated: k.rho > 1.0 })
}
