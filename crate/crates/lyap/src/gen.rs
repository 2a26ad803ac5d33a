//! Seeded random expressions and pairs for property checks.

use crate::pq_core::{PQPair, SymMatrix};
use crate::symexpr::{rat, Exponent, Expr, Monomial, Param, Symbol, Q64};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Clone, Debug)]
pub struct ExprShape {
    pub max_terms: usize,
    /// Highest γ derivative that may appear; 0 for none.
    pub max_gamma: u32,
    /// Allow exponents with an α part.
    pub alpha_exponents: bool,
    pub params: Vec<Param>,
}

impl Default for ExprShape {
    fn default() -> Self {
        ExprShape {
            max_terms: 4,
            max_gamma: 3,
            alpha_exponents: false,
            params: vec![Param::K, Param::Mu, Param::L, Param::A, Param::B, Param::R],
        }
    }
}

impl ExprShape {
    pub fn gamma_free() -> Self {
        ExprShape { max_gamma: 0, ..Default::default() }
    }
}

fn coefficient<R: Rng>(rng: &mut R) -> num_rational::BigRational {
    let mut n = rng.gen_range(-9..=9);
    if n == 0 {
        n = 1;
    }
    rat(n, rng.gen_range(1..=4))
}

pub fn random_term<R: Rng>(rng: &mut R, shape: &ExprShape) -> Expr {
    let q = if shape.alpha_exponents && rng.gen_bool(0.4) {
        Q64::from_integer(rng.gen_range(-2..=0))
    } else {
        Q64::from_integer(0)
    };
    let e = Exponent::new(Q64::new(rng.gen_range(-6..=4), rng.gen_range(1..=2)), q);
    let mut m = Monomial::one();
    for _ in 0..rng.gen_range(0..=2) {
        if let Some(p) = shape.params.choose(rng) {
            m = m.mul(&Monomial::symbol(Symbol::Param(*p), rng.gen_range(1..=2)));
        }
    }
    if shape.max_gamma > 0 && rng.gen_bool(0.5) {
        let n = rng.gen_range(1..=shape.max_gamma);
        m = m.mul(&Monomial::symbol(Symbol::GammaDeriv(n), rng.gen_range(1..=2)));
    }
    Expr::term(coefficient(rng), e, m)
}

pub fn random_expr<R: Rng>(rng: &mut R, shape: &ExprShape) -> Expr {
    let n = rng.gen_range(1..=shape.max_terms.max(1));
    let mut e = Expr::zero();
    for _ in 0..n {
        e += &random_term(rng, shape);
    }
    e
}

/// Symmetric pair with A1 marked as applied. About half the entries are
/// zero; λ and θ only on diagonals.
pub fn random_pair<R: Rng>(rng: &mut R) -> PQPair {
    let shape = ExprShape { max_terms: 3, ..Default::default() };
    let mut diag = shape.clone();
    diag.params.extend([Param::Lambda, Param::Theta]);
    let fill = |n: usize, rng: &mut R| {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                if rng.gen_bool(0.5) {
                    let s = if i == j { &diag } else { &shape };
                    m.set(i, j, random_expr(rng, s));
                }
            }
        }
        m
    };
    let p = fill(3, rng);
    let q = fill(5, rng);
    PQPair { p, q, provenance: Vec::new(), objective_gap: true }
}
