use super::{big_f64, pow_t, Bindings, EvalError, Exponent, Expr, Param, Symbol, Q64};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Assumed shape of γ(t), written with the symbol `k` (and `r`, `alpha` for
/// the power form).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GammaForm {
    /// γ = k·t
    Linear,
    /// γ = k·log t
    Log,
    /// γ = k·r/(1−α)·t^{1−α}; `alpha` fixes α when given.
    Power { alpha: Option<BigRational> },
}

impl GammaForm {
    /// Closed form of γ^(n), n ≥ 1.
    pub fn derivative(&self, n: u32) -> Expr {
        assert!(n >= 1);
        let k = Expr::param(Param::K);
        match self {
            GammaForm::Linear => {
                if n == 1 {
                    k
                } else {
                    Expr::zero()
                }
            }
            GammaForm::Log => {
                // d^n/dt^n log t = (−1)^{n−1} (n−1)! t^{−n}
                let mut f = BigInt::one();
                for i in 1..n {
                    f *= BigInt::from(i);
                }
                if n % 2 == 0 {
                    f = -f;
                }
                &k * &Expr::term(BigRational::from_integer(f), Exponent::int(-(n as i64)), Default::default())
            }
            GammaForm::Power { alpha } => {
                let first = &(&k * &Expr::param(Param::R))
                    * &Expr::t_pow(Exponent::new(Q64::zero(), Q64::from_integer(-1)));
                let mut d = first;
                for _ in 1..n {
                    d = d.differentiate();
                }
                match alpha {
                    Some(a) => d.substitute_params(&BTreeMap::from([(Param::Alpha, a.clone())])),
                    None => d,
                }
            }
        }
    }

    /// Numeric γ(t); the power form needs 1/(1−α), which is outside the
    /// polynomial ring, so it is evaluated here directly.
    pub fn value(&self, t: f64, b: &Bindings) -> Result<f64, EvalError> {
        let k = b.get(Param::K).ok_or(EvalError::Unbound(Symbol::Param(Param::K)))?;
        Ok(match self {
            GammaForm::Linear => k * t,
            GammaForm::Log => k * t.ln(),
            GammaForm::Power { alpha } => {
                let r = b.get(Param::R).ok_or(EvalError::Unbound(Symbol::Param(Param::R)))?;
                let a = match alpha {
                    Some(a) => big_f64(a),
                    None => b
                        .get(Param::Alpha)
                        .ok_or(EvalError::Unbound(Symbol::Param(Param::Alpha)))?,
                };
                k * r / (1.0 - a) * pow_t(t, 1.0 - a)
            }
        })
    }

    /// The time transform φ with γ = k·φ(t), used for rate fitting.
    pub fn clock(&self, t: f64, b: &Bindings) -> Result<f64, EvalError> {
        let mut unit = b.clone();
        unit.set(Param::K, 1.0);
        self.value(t, &unit)
    }

    pub fn name(&self) -> &'static str {
        match self {
            GammaForm::Linear => "linear",
            GammaForm::Log => "log",
            GammaForm::Power { .. } => "power",
        }
    }
}

impl fmt::Display for GammaForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaForm::Power { alpha: Some(a) } => write!(f, "power(alpha={a})"),
            other => f.write_str(other.name()),
        }
    }
}
