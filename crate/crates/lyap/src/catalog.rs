//! The ODE systems studied, by name.

use crate::pq_core::OdeSystemSpec;
use crate::symexpr::{Exponent, Expr, Param, Q64};
use num_traits::Zero;

pub const NAMES: [&str; 6] = [
    "damped-newton",
    "first-order-hessian",
    "second-order-hessian",
    "nag",
    "generalized-nag",
    "hessian-nag",
];

fn p(x: Param) -> Expr {
    Expr::param(x)
}

/// r·t^{-1}
fn r_over_t() -> Expr {
    &p(Param::R) * &Expr::t_int(-1)
}

/// ∇²f ẋ + ∇f = 0
pub fn damped_newton() -> OdeSystemSpec {
    let z = Expr::zero;
    OdeSystemSpec::new("damped-newton", [z(), Expr::one(), z(), Expr::one(), z()]).unwrap()
}

/// ẋ + b∇²f ẋ + ∇f = 0 (gradient flow at b = 0)
pub fn first_order_hessian() -> OdeSystemSpec {
    let z = Expr::zero;
    OdeSystemSpec::new("first-order-hessian", [z(), Expr::one(), Expr::one(), p(Param::B), z()])
        .unwrap()
}

/// ẍ + aẋ + b∇²f ẋ + ∇f = 0
pub fn second_order_hessian() -> OdeSystemSpec {
    let z = Expr::zero;
    OdeSystemSpec::new(
        "second-order-hessian",
        [z(), Expr::one(), p(Param::A), p(Param::B), Expr::one()],
    )
    .unwrap()
}

/// ẍ + (r/t)ẋ + ∇f = 0
pub fn nag() -> OdeSystemSpec {
    let z = Expr::zero;
    OdeSystemSpec::new("nag", [z(), Expr::one(), r_over_t(), z(), Expr::one()]).unwrap()
}

/// ẍ + r t^{−α} ẋ + ∇f = 0
pub fn generalized_nag() -> OdeSystemSpec {
    let z = Expr::zero;
    let c3 = &p(Param::R) * &Expr::t_pow(Exponent::new(Q64::zero(), Q64::from_integer(-1)));
    OdeSystemSpec::new("generalized-nag", [z(), Expr::one(), c3, z(), Expr::one()]).unwrap()
}

/// ẍ + (r/t)ẋ + b∇²f ẋ + ∇f = 0
pub fn hessian_nag() -> OdeSystemSpec {
    let z = Expr::zero;
    OdeSystemSpec::new("hessian-nag", [z(), Expr::one(), r_over_t(), p(Param::B), Expr::one()])
        .unwrap()
}

pub fn by_name(name: &str) -> Option<OdeSystemSpec> {
    Some(match name {
        "damped-newton" => damped_newton(),
        "first-order-hessian" | "gradient-flow" => first_order_hessian(),
        "second-order-hessian" | "sc-nag" => second_order_hessian(),
        "nag" => nag(),
        "generalized-nag" => generalized_nag(),
        "hessian-nag" => hessian_nag(),
        _ => return None,
    })
}

pub fn all() -> Vec<OdeSystemSpec> {
    NAMES.iter().map(|n| by_name(n).unwrap()).collect()
}
