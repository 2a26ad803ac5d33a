use super::{QuadraticObjective, SimError, Trajectory};
use crate::pq_core::{dot, lyapunov_scalar_forms, PQPair};
use crate::symexpr::{Bindings, GammaForm, Param};

#[derive(Clone, Debug)]
pub struct ConservationReport {
    pub max_residual: f64,
    /// Time of the worst residual.
    pub at_t: f64,
    pub points: usize,
    /// Points where λ or θ is undefined.
    pub skipped: usize,
}

/// Pointwise λ = ⟨y, Hy⟩/‖y‖² and θ = ⟨ẋ, Hẋ⟩/‖ẋ‖²; `None` below 1e−12.
pub fn lambda_theta(obj: &QuadraticObjective, y: &[f64], v: &[f64]) -> Option<(f64, f64)> {
    let (ny, nv) = (dot(y, y), dot(v, v));
    if ny.sqrt() < 1e-12 || nv.sqrt() < 1e-12 {
        return None;
    }
    Some((dot(y, &obj.hess_vec(y)) / ny, dot(v, &obj.hess_vec(v)) / nv))
}

/// max |d/dt[e^γ(p + f − f*)] + e^γ q| / (1 + |e^γ q|) along `traj`, with
/// the derivative from a five-point central difference.
pub fn conservation_check(
    pair: &PQPair,
    g: &GammaForm,
    params: &Bindings,
    obj: &QuadraticObjective,
    traj: &Trajectory,
) -> Result<ConservationReport, SimError> {
    if traj.len() < 5 {
        return Err(SimError::Invalid("need at least 5 samples".into()));
    }
    let h = traj.times[1] - traj.times[0];
    if traj.times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
        return Err(SimError::Invalid("conservation check needs uniform sampling".into()));
    }
    let forms = lyapunov_scalar_forms(pair, g);
    let mut e_vals: Vec<Option<(f64, f64)>> = Vec::with_capacity(traj.len());
    for i in 0..traj.len() {
        let t = traj.times[i];
        let y = obj.offset(&traj.x[i]);
        let (v, a) = (&traj.v[i], &traj.a[i]);
        let Some((lam, th)) = lambda_theta(obj, &y, v) else {
            e_vals.push(None);
            continue;
        };
        let mut b = params.clone();
        b.set(Param::Lambda, lam);
        b.set(Param::Theta, th);
        let grad = obj.hess_vec(&y);
        let hv = obj.hess_vec(v);
        let vecs: [&[f64]; 5] = [&y, &grad, v, &hv, a];
        let eg = forms.gamma_value(t, &b)?.exp();
        let p = forms.p_value(t, &vecs, &b)?;
        let q = forms.q_value(t, &vecs, &b)?;
        let gap = if pair.objective_gap { traj.gaps[i] } else { 0.0 };
        e_vals.push(Some((eg * (p + gap), eg * q)));
    }
    let mut rep = ConservationReport { max_residual: 0.0, at_t: f64::NAN, points: 0, skipped: 0 };
    for i in 2..traj.len() - 2 {
        let w: Option<Vec<(f64, f64)>> = (i - 2..=i + 2).map(|j| e_vals[j]).collect();
        let Some(w) = w else {
            rep.skipped += 1;
            continue;
        };
        let de = (-w[4].0 + 8.0 * w[3].0 - 8.0 * w[1].0 + w[0].0) / (12.0 * h);
        let q = w[2].1;
        let r = (de + q).abs() / (1.0 + q.abs());
        rep.points += 1;
        if r > rep.max_residual || r.is_nan() {
            rep.max_residual = r;
            rep.at_t = traj.times[i];
        }
    }
    Ok(rep)
}

/// Largest step increase of ½‖ẋ‖² + f − f*, relative to 1 + its value.
pub fn energy_check(traj: &Trajectory) -> f64 {
    let en: Vec<f64> = traj.v.iter().zip(&traj.gaps).map(|(v, g)| 0.5 * dot(v, v) + g).collect();
    en.windows(2).map(|w| (w[1] - w[0]) / (1.0 + w[0].abs())).fold(f64::NEG_INFINITY, f64::max)
}
