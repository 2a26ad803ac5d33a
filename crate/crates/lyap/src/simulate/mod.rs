//! Fixed-step RK4 integration of the catalog systems on diagonal quadratics,
//! plus the numeric oracles built on top of it.

mod fit;
mod lyapunov;
mod oracle;
mod restart;

pub use fit::{measure_rate, measure_rate_window, RateFit};
pub use lyapunov::{monotonicity_check, LyapunovCase, LyapunovId, MonotonicityReport};
pub use oracle::{conservation_check, energy_check, lambda_theta, ConservationReport};
pub use restart::{restart_constants, run_restart, RestartConstants, RestartReport, RestartSpec};

use crate::pq_core::OdeSystemSpec;
use crate::symexpr::{big_f64, Bindings, EvalError, Expr, Symbol};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
    #[error("t0 must be positive for a system singular at t = 0")]
    SingularStart,
    #[error("integration interval [{0}, {1}] is empty")]
    EmptyInterval(f64, f64),
    #[error("singular mass matrix at t = {t} (eigenvalue {eig})")]
    SingularMass { t: f64, eig: f64 },
    #[error("dimension mismatch: objective has {0}, initial state {1}")]
    Dimension(usize, usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Invalid(String),
}

/// f(x) = ½ Σ eᵢ (xᵢ − x*ᵢ)²
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticObjective {
    pub eigenvalues: Vec<f64>,
    pub shift: Vec<f64>,
}

impl QuadraticObjective {
    pub fn new(eigenvalues: Vec<f64>) -> Self {
        let n = eigenvalues.len();
        QuadraticObjective { eigenvalues, shift: vec![0.0; n] }
    }

    /// `dim` eigenvalues log-spaced on [mu, l], both ends included.
    pub fn log_spaced(dim: usize, mu: f64, l: f64) -> Self {
        assert!(dim >= 1 && mu > 0.0 && l >= mu);
        let e = if dim == 1 {
            vec![mu]
        } else {
            (0..dim)
                .map(|i| mu * (l / mu).powf(i as f64 / (dim - 1) as f64))
                .collect()
        };
        Self::new(e)
    }

    pub fn with_shift(mut self, shift: Vec<f64>) -> Self {
        assert_eq!(shift.len(), self.dim());
        self.shift = shift;
        self
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.gap_y(&self.offset(x))
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.offset(x).iter().zip(&self.eigenvalues).map(|(y, e)| e * y).collect()
    }

    pub fn hess_vec(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.eigenvalues).map(|(v, e)| e * v).collect()
    }

    pub fn minimizer(&self) -> &[f64] {
        &self.shift
    }

    /// x − x*
    pub fn offset(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.shift).map(|(a, b)| a - b).collect()
    }

    /// f − f* as a function of y = x − x*.
    pub fn gap_y(&self, y: &[f64]) -> f64 {
        0.5 * y.iter().zip(&self.eigenvalues).map(|(y, e)| e * y * y).sum::<f64>()
    }
}

/// Σ c·t^e after all parameters are bound.
#[derive(Clone, Debug, Default)]
struct NumCoeff {
    terms: Vec<(f64, f64)>,
}

impl NumCoeff {
    fn new(e: &Expr, b: &Bindings) -> Result<Self, EvalError> {
        let alpha = b.get(crate::symexpr::Param::Alpha);
        let mut terms = Vec::new();
        for (ex, m, c) in e.terms() {
            let mut v = big_f64(c);
            for &(s, pw) in m.factors() {
                let x = match s {
                    Symbol::Param(p) => b.get(p).ok_or(EvalError::Unbound(s))?,
                    Symbol::GammaDeriv(_) => return Err(EvalError::Unbound(s)),
                };
                v *= x.powi(pw as i32);
            }
            let p = if num_traits::Zero::is_zero(&ex.q) {
                ex.value(0.0)
            } else {
                ex.value(alpha.ok_or(EvalError::Unbound(Symbol::Param(crate::symexpr::Param::Alpha)))?)
            };
            terms.push((v, p));
        }
        Ok(NumCoeff { terms })
    }

    fn at(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, e)| {
                if e == 0.0 {
                    c
                } else if e.fract() == 0.0 {
                    c * t.powi(e as i32)
                } else {
                    c * t.powf(e)
                }
            })
            .sum()
    }

    fn singular_at_zero(&self) -> bool {
        self.terms.iter().any(|&(c, e)| c != 0.0 && e < 0.0)
    }
}

/// The ODE Σ cᵢ(t) vᵢ = 0 specialised to a diagonal quadratic: every
/// coordinate evolves independently.
#[derive(Clone, Debug)]
pub struct Dynamics {
    c: [NumCoeff; 5],
    dc: [NumCoeff; 5],
    first_order: bool,
    eig: Vec<f64>,
}

impl Dynamics {
    pub fn new(spec: &OdeSystemSpec, b: &Bindings, obj: &QuadraticObjective) -> Result<Self, SimError> {
        let mk = |f: &dyn Fn(&Expr) -> Expr| -> Result<[NumCoeff; 5], EvalError> {
            let mut out: [NumCoeff; 5] = Default::default();
            for (o, e) in out.iter_mut().zip(&spec.coeffs) {
                *o = NumCoeff::new(&f(e), b)?;
            }
            Ok(out)
        };
        Ok(Dynamics {
            c: mk(&|e| e.clone())?,
            dc: mk(&|e| e.differentiate())?,
            first_order: spec.is_first_order(),
            eig: obj.eigenvalues.clone(),
        })
    }

    pub fn is_first_order(&self) -> bool {
        self.first_order
    }

    pub fn singular_at_zero(&self) -> bool {
        self.c.iter().any(|c| c.singular_at_zero())
    }

    fn coeffs(&self, t: f64) -> [f64; 5] {
        std::array::from_fn(|i| self.c[i].at(t))
    }

    /// ẋᵢ = ρᵢ yᵢ for a first-order system.
    fn rho(&self, t: f64, c: &[f64; 5], e: f64) -> Result<f64, SimError> {
        let den = c[2] + c[3] * e;
        if den.abs() <= 1e-12 * (c[2].abs() + (c[3] * e).abs()) || den == 0.0 {
            return Err(SimError::SingularMass { t, eig: e });
        }
        Ok(-(c[0] + c[1] * e) / den)
    }

    /// ẋ for a first-order system.
    pub fn velocity(&self, t: f64, y: &[f64]) -> Result<Vec<f64>, SimError> {
        let c = self.coeffs(t);
        y.iter().zip(&self.eig).map(|(y, &e)| Ok(self.rho(t, &c, e)? * y)).collect()
    }

    /// ẍ from the state (y, ẋ).
    pub fn accel(&self, t: f64, y: &[f64], v: &[f64]) -> Result<Vec<f64>, SimError> {
        let c = self.coeffs(t);
        if self.first_order {
            let d: [f64; 5] = std::array::from_fn(|i| self.dc[i].at(t));
            let mut out = Vec::with_capacity(y.len());
            for ((y, v), &e) in y.iter().zip(v).zip(&self.eig) {
                let num = c[0] + c[1] * e;
                let den = c[2] + c[3] * e;
                let rho = self.rho(t, &c, e)?;
                let rho_dot = -((d[0] + d[1] * e) * den - num * (d[2] + d[3] * e)) / (den * den);
                out.push(rho_dot * y + rho * v);
            }
            return Ok(out);
        }
        if c[4] == 0.0 {
            return Err(SimError::SingularMass { t, eig: f64::NAN });
        }
        Ok(y
            .iter()
            .zip(v)
            .zip(&self.eig)
            .map(|((y, v), &e)| -((c[0] + c[1] * e) * y + (c[2] + c[3] * e) * v) / c[4])
            .collect())
    }
}

/// Sampled solution. `x`, `v`, `a` hold x, ẋ, ẍ at each recorded time.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    pub gaps: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_gap(&self) -> f64 {
        *self.gaps.last().unwrap_or(&f64::NAN)
    }

    /// Rows t, gap (and a value column when given) as CSV.
    pub fn write_csv<W: std::io::Write>(
        &self,
        mut w: W,
        header: &str,
        extra: Option<(&str, &[f64])>,
    ) -> Result<(), csv::Error> {
        writeln!(w, "# {header}")?;
        let mut w = csv::Writer::from_writer(w);
        match extra {
            Some((name, _)) => w.write_record(["t", "gap", name])?,
            None => w.write_record(["t", "gap"])?,
        }
        for (i, (t, g)) in self.times.iter().zip(&self.gaps).enumerate() {
            let mut rec = vec![format!("{t:.9e}"), format!("{g:.9e}")];
            if let Some((_, vals)) = extra {
                rec.push(format!("{:.9e}", vals[i]));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Initial data and step control.
#[derive(Clone, Debug)]
pub struct SimSetup {
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    /// Record every n-th step.
    pub record_every: usize,
}

impl SimSetup {
    /// x0 = all ones, ẋ0 = 0.
    pub fn standard(dim: usize, t0: f64, t1: f64, dt: f64) -> Self {
        SimSetup { x0: vec![1.0; dim], v0: vec![0.0; dim], t0, t1, dt, record_every: 1 }
    }

    pub fn every(mut self, n: usize) -> Self {
        self.record_every = n.max(1);
        self
    }
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(x, y)| y + a * x).collect()
}

pub fn integrate(
    spec: &OdeSystemSpec,
    params: &Bindings,
    obj: &QuadraticObjective,
    setup: &SimSetup,
) -> Result<Trajectory, SimError> {
    let dynamics = Dynamics::new(spec, params, obj)?;
    integrate_dynamics(&dynamics, obj, setup)
}

pub fn integrate_dynamics(
    dy: &Dynamics,
    obj: &QuadraticObjective,
    s: &SimSetup,
) -> Result<Trajectory, SimError> {
    if !(s.dt > 0.0) {
        return Err(SimError::BadStep(s.dt));
    }
    if !(s.t1 > s.t0) {
        return Err(SimError::EmptyInterval(s.t0, s.t1));
    }
    if s.t0 <= 0.0 && dy.singular_at_zero() {
        return Err(SimError::SingularStart);
    }
    if s.x0.len() != obj.dim() {
        return Err(SimError::Dimension(obj.dim(), s.x0.len()));
    }
    let steps = ((s.t1 - s.t0) / s.dt).round().max(1.0) as usize;
    let h = s.dt;
    let mut y = obj.offset(&s.x0);
    let mut traj = Trajectory::default();
    let record = |t: f64, y: &[f64], v: &[f64], traj: &mut Trajectory| -> Result<(), SimError> {
        traj.times.push(t);
        traj.gaps.push(obj.gap_y(y));
        traj.x.push(y.iter().zip(&obj.shift).map(|(a, b)| a + b).collect());
        traj.a.push(dy.accel(t, y, v)?);
        traj.v.push(v.to_vec());
        Ok(())
    };
    if dy.is_first_order() {
        let f = |t: f64, y: &[f64]| dy.velocity(t, y);
        for i in 0..steps {
            let t = s.t0 + i as f64 * h;
            let k1 = f(t, &y)?;
            if i % s.record_every == 0 {
                record(t, &y, &k1, &mut traj)?;
            }
            let k2 = f(t + h / 2.0, &axpy(h / 2.0, &k1, &y))?;
            let k3 = f(t + h / 2.0, &axpy(h / 2.0, &k2, &y))?;
            let k4 = f(t + h, &axpy(h, &k3, &y))?;
            for j in 0..y.len() {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        let t = s.t0 + steps as f64 * h;
        let v = f(t, &y)?;
        record(t, &y, &v, &mut traj)?;
    } else {
        if s.v0.len() != obj.dim() {
            return Err(SimError::Dimension(obj.dim(), s.v0.len()));
        }
        let mut v = s.v0.clone();
        for i in 0..steps {
            let t = s.t0 + i as f64 * h;
            if i % s.record_every == 0 {
                record(t, &y, &v, &mut traj)?;
            }
            let a1 = dy.accel(t, &y, &v)?;
            let (y2, v2) = (axpy(h / 2.0, &v, &y), axpy(h / 2.0, &a1, &v));
            let a2 = dy.accel(t + h / 2.0, &y2, &v2)?;
            let (y3, v3) = (axpy(h / 2.0, &v2, &y), axpy(h / 2.0, &a2, &v));
            let a3 = dy.accel(t + h / 2.0, &y3, &v3)?;
            let (y4, v4) = (axpy(h, &v3, &y), axpy(h, &a3, &v));
            let a4 = dy.accel(t + h, &y4, &v4)?;
            for j in 0..y.len() {
                y[j] += h / 6.0 * (v[j] + 2.0 * v2[j] + 2.0 * v3[j] + v4[j]);
                v[j] += h / 6.0 * (a1[j] + 2.0 * a2[j] + 2.0 * a3[j] + a4[j]);
            }
        }
        let t = s.t0 + steps as f64 * h;
        record(t, &y, &v, &mut traj)?;
    }
    Ok(traj)
}
