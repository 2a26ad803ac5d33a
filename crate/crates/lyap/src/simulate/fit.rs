use super::{SimError, Trajectory};
use crate::symexpr::{Bindings, GammaForm, Param};

/// Gaps below this are treated as underflow and excluded from fits.
const GAP_FLOOR: f64 = 1e-280;

#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub k: f64,
    /// RMS deviation of log(envelope) from the fitted line.
    pub residual: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub points: usize,
    /// The window was cut short because the gap underflowed.
    pub truncated: bool,
}

/// −slope of log(gap envelope) against the γ clock over the trailing half
/// (in clock units) of the trajectory.
pub fn measure_rate(traj: &Trajectory, g: &GammaForm, b: &Bindings) -> Result<RateFit, SimError> {
    let c = clock_series(traj, g, b)?;
    let (c0, c1) = (c[0], *c.last().unwrap());
    let mid = 0.5 * (c0 + c1);
    let lo = c.iter().position(|&x| x >= mid).unwrap_or(0);
    fit_range(traj, &c, lo, c.len())
}

/// Same fit restricted to t ∈ [t_lo, t_hi].
pub fn measure_rate_window(
    traj: &Trajectory,
    g: &GammaForm,
    b: &Bindings,
    t_lo: f64,
    t_hi: f64,
) -> Result<RateFit, SimError> {
    let c = clock_series(traj, g, b)?;
    let lo = traj.times.iter().position(|&t| t >= t_lo).unwrap_or(traj.len());
    let hi = traj.times.iter().rposition(|&t| t <= t_hi).map_or(0, |i| i + 1);
    fit_range(traj, &c, lo, hi)
}

fn clock_series(traj: &Trajectory, g: &GammaForm, b: &Bindings) -> Result<Vec<f64>, SimError> {
    if traj.is_empty() {
        return Err(SimError::Invalid("empty trajectory".into()));
    }
    let mut b = b.clone();
    b.set(Param::K, 1.0);
    traj.times.iter().map(|&t| Ok(g.clock(t, &b)?)).collect()
}

fn fit_range(traj: &Trajectory, c: &[f64], lo: usize, hi: usize) -> Result<RateFit, SimError> {
    let mut hi = hi;
    let mut truncated = false;
    if let Some(i) = traj.gaps[lo..hi].iter().position(|&g| !(g > GAP_FLOOR)) {
        hi = lo + i;
        truncated = true;
    }
    if hi < lo + 3 {
        return Err(SimError::Invalid("fewer than 3 usable points in the fit window".into()));
    }
    // Running maximum from the right smooths out oscillation.
    let mut env = vec![0.0; hi - lo];
    let mut m = f64::NEG_INFINITY;
    for i in (lo..hi).rev() {
        m = m.max(traj.gaps[i]);
        env[i - lo] = m.ln();
    }
    let xs = &c[lo..hi];
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = env.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&env).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let residual = (xs
        .iter()
        .zip(&env)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateFit {
        k: -slope,
        residual,
        t_lo: traj.times[lo],
        t_hi: traj.times[hi - 1],
        points: hi - lo,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64, ts: Vec<f64>) -> Trajectory {
        Trajectory { gaps: ts.iter().map(|&t| f(t)).collect(), times: ts, ..Default::default() }
    }

    #[test]
    fn exact_exponential() {
        let ts: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        let tr = synthetic(|t| (-2.0 * t).exp(), ts);
        let fit = measure_rate(&tr, &GammaForm::Linear, &Bindings::new()).unwrap();
        assert!((fit.k - 2.0).abs() < 1e-9, "{fit:?}");
        assert!(!fit.truncated);
    }

    #[test]
    fn power_law_on_log_clock() {
        let ts: Vec<f64> = (0..=2000).map(|i| 10f64.powf(i as f64 / 500.0)).collect();
        let tr = synthetic(|t| 3.0 * t.powf(-2.5), ts);
        let fit = measure_rate(&tr, &GammaForm::Log, &Bindings::new()).unwrap();
        assert!((fit.k - 2.5).abs() < 1e-9);
    }

    #[test]
    fn underflow_truncates() {
        let ts: Vec<f64> = (0..=1000).map(|i| i as f64).collect();
        let tr = synthetic(|t| (-t).exp(), ts);
        let fit = measure_rate(&tr, &GammaForm::Linear, &Bindings::new()).unwrap();
        assert!(fit.truncated);
        assert!((fit.k - 1.0).abs() < 1e-9);
    }

    #[test]
    fn oscillation_follows_envelope() {
        let ts: Vec<f64> = (0..=20000).map(|i| i as f64 * 1e-3).collect();
        let tr = synthetic(|t| (-t).exp() * (1.0 + (10.0 * t).cos()), ts);
        let fit = measure_rate(&tr, &GammaForm::Linear, &Bindings::new()).unwrap();
        assert!((fit.k - 1.0).abs() < 0.05, "{fit:?}");
    }
}
