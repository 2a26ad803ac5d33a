//! Canonical generalized polynomials in `t`, scalar parameters and abstract
//! derivatives of the rate function `γ(t)`.
//!
//! An [`Expr`] is a finite map from `(t-exponent, monomial)` to a nonzero
//! exact rational. Exponents are affine forms `p + q·α`. Two expressions are
//! equal iff their maps are equal, which is what deduplication relies on.

mod gamma;
mod parse;

pub use gamma::GammaForm;
pub use parse::ParseError;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Scalar parameters of the alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    K,
    Mu,
    L,
    Lambda,
    Theta,
    A,
    B,
    R,
    Alpha,
    C,
    SmallL,
    T,
}

impl Param {
    pub const ALL: [Param; 12] = [
        Param::K,
        Param::Mu,
        Param::L,
        Param::Lambda,
        Param::Theta,
        Param::A,
        Param::B,
        Param::R,
        Param::Alpha,
        Param::C,
        Param::SmallL,
        Param::T,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::K => "k",
            Param::Mu => "mu",
            Param::L => "L",
            Param::Lambda => "lambda",
            Param::Theta => "theta",
            Param::A => "a",
            Param::B => "b",
            Param::R => "r",
            Param::Alpha => "alpha",
            Param::C => "c",
            Param::SmallL => "l",
            Param::T => "T",
        }
    }

    pub fn from_name(s: &str) -> Option<Param> {
        Param::ALL.iter().copied().find(|p| p.name() == s)
    }

    /// mu, L, lambda and theta are positive by construction.
    pub fn is_positive(self) -> bool {
        matches!(self, Param::Mu | Param::L | Param::Lambda | Param::Theta)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A parameter or the n-th derivative of γ (n ≥ 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Param(Param),
    GammaDeriv(u32),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Param(p) => write!(f, "{p}"),
            Symbol::GammaDeriv(n) => write!(f, "gamma{n}"),
        }
    }
}

pub type Q64 = Ratio<i64>;

/// Exponent `p + q·α` of `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exponent {
    pub p: Q64,
    pub q: Q64,
}

impl Exponent {
    pub fn int(p: i64) -> Self {
        Exponent { p: Q64::from_integer(p), q: Q64::zero() }
    }

    pub fn new(p: Q64, q: Q64) -> Self {
        Exponent { p, q }
    }

    pub fn zero() -> Self {
        Exponent::int(0)
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    pub fn value(&self, alpha: f64) -> f64 {
        q64_f64(self.p) + q64_f64(self.q) * alpha
    }

    /// Order for every α in (0,1), or for the given α. `None` when the order
    /// depends on an unspecified α.
    pub fn cmp_alpha(&self, other: &Exponent, alpha: Option<&BigRational>) -> Option<Ordering> {
        let dp = self.p - other.p;
        let dq = self.q - other.q;
        if let Some(a) = alpha {
            let v = q64_big(dp) + q64_big(dq) * a;
            return Some(v.cmp(&BigRational::zero()));
        }
        if dq.is_zero() {
            return Some(dp.cmp(&Q64::zero()));
        }
        // f(α) = dp + dq·α is affine, so its sign on (0,1) is fixed iff the
        // endpoint values do not have strictly opposite signs.
        let s0 = dp.cmp(&Q64::zero());
        let s1 = (dp + dq).cmp(&Q64::zero());
        match (s0, s1) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => Some(s),
            (a, b) if a == b => Some(a),
            _ => None,
        }
    }
}

impl Add for Exponent {
    type Output = Exponent;
    fn add(self, o: Exponent) -> Exponent {
        Exponent { p: self.p + o.p, q: self.q + o.q }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q.is_zero() {
            write!(f, "{}", self.p)
        } else {
            let sign = if self.q < Q64::zero() { '-' } else { '+' };
            write!(f, "({}{sign}{}*alpha)", self.p, self.q.abs())
        }
    }
}

fn q64_f64(q: Q64) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn q64_big(q: Q64) -> BigRational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

pub fn big_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Very large numerators: fall back through the integer parts.
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Sorted product of symbols with positive powers.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Symbol, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn symbol(s: Symbol, pow: u32) -> Self {
        if pow == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(s, pow)])
        }
    }

    pub fn factors(&self) -> &[(Symbol, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn power_of(&self, s: Symbol) -> u32 {
        self.0.iter().find(|(x, _)| *x == s).map_or(0, |(_, p)| *p)
    }

    pub fn mul(&self, o: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + o.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < o.0.len() {
            match self.0[i].0.cmp(&o.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(o.0[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0, self.0[i].1 + o.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&o.0[j..]);
        Monomial(out)
    }

    /// Power of `s` changed by `delta`; the result must stay nonnegative.
    fn with_power(&self, s: Symbol, delta: i64) -> Monomial {
        let mut v = self.0.clone();
        match v.iter().position(|(x, _)| *x == s) {
            Some(i) => {
                let np = v[i].1 as i64 + delta;
                assert!(np >= 0, "negative symbol power");
                if np == 0 {
                    v.remove(i);
                } else {
                    v[i].1 = np as u32;
                }
            }
            None => {
                assert!(delta >= 0, "negative symbol power");
                if delta > 0 {
                    v.push((s, delta as u32));
                    v.sort();
                }
            }
        }
        Monomial(v)
    }

    fn without(&self, s: Symbol) -> Monomial {
        Monomial(self.0.iter().copied().filter(|(x, _)| *x != s).collect())
    }
}

type Key = (Exponent, Monomial);

/// Canonical expression. Zero coefficients are never stored.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr {
    terms: BTreeMap<Key, BigRational>,
}

/// Numeric values for parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Bindings {
    vals: [Option<f64>; 12],
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, p: Param, v: f64) -> Self {
        self.set(p, v);
        self
    }

    pub fn set(&mut self, p: Param, v: f64) {
        self.vals[p.index()] = Some(v);
    }

    pub fn unset(&mut self, p: Param) {
        self.vals[p.index()] = None;
    }

    pub fn get(&self, p: Param) -> Option<f64> {
        self.vals[p.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Param, f64)> + '_ {
        Param::ALL.iter().filter_map(|p| self.get(*p).map(|v| (*p, v)))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    Unbound(Symbol),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LeadingError {
    #[error("zero expression has no leading term")]
    Zero,
    #[error("leading exponent depends on the value of alpha")]
    AlphaAmbiguous,
}

impl Expr {
    pub fn zero() -> Self {
        Expr::default()
    }

    pub fn one() -> Self {
        Expr::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Expr::term(c, Exponent::zero(), Monomial::one())
    }

    pub fn int(n: i64) -> Self {
        Expr::constant(rat(n, 1))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Expr::constant(rat(n, d))
    }

    pub fn param(p: Param) -> Self {
        Expr::symbol(Symbol::Param(p))
    }

    pub fn symbol(s: Symbol) -> Self {
        Expr::term(BigRational::one(), Exponent::zero(), Monomial::symbol(s, 1))
    }

    /// γ^(n) for n ≥ 1.
    pub fn gamma(n: u32) -> Self {
        assert!(n >= 1, "gamma derivative order starts at 1");
        Expr::symbol(Symbol::GammaDeriv(n))
    }

    pub fn t_pow(e: Exponent) -> Self {
        Expr::term(BigRational::one(), e, Monomial::one())
    }

    pub fn t_int(p: i64) -> Self {
        Expr::t_pow(Exponent::int(p))
    }

    pub fn term(c: BigRational, e: Exponent, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((e, m), c);
        }
        Expr { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Monomial, &BigRational)> {
        self.terms.iter().map(|((e, m), c)| (e, m, c))
    }

    /// The value if the expression is a plain rational constant.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let ((e, m), c) = self.terms.iter().next().unwrap();
                (e.is_zero() && m.is_one()).then(|| c.clone())
            }
            _ => None,
        }
    }

    fn add_term(&mut self, key: Key, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(key) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &BigRational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr { terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> Expr {
        let mut out = Expr::one();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// d/dt with γ^(n) ↦ γ^(n+1); parameters are constant.
    pub fn differentiate(&self) -> Expr {
        let mut out = Expr::zero();
        for ((e, m), c) in &self.terms {
            let de = Exponent { p: e.p - 1, q: e.q };
            if !e.p.is_zero() {
                out.add_term((de, m.clone()), c * q64_big(e.p));
            }
            if !e.q.is_zero() {
                let ma = m.mul(&Monomial::symbol(Symbol::Param(Param::Alpha), 1));
                out.add_term((de, ma), c * q64_big(e.q));
            }
            for &(s, pw) in m.factors() {
                if let Symbol::GammaDeriv(n) = s {
                    let nm = m
                        .with_power(s, -1)
                        .mul(&Monomial::symbol(Symbol::GammaDeriv(n + 1), 1));
                    out.add_term((*e, nm), c * BigRational::from_integer(pw.into()));
                }
            }
        }
        out
    }

    /// Replace every occurrence of `s` by `by`.
    pub fn substitute_symbol(&self, s: Symbol, by: &Expr) -> Expr {
        let mut cache: Vec<Expr> = vec![Expr::one()];
        let mut out = Expr::zero();
        for ((e, m), c) in &self.terms {
            let pw = m.power_of(s) as usize;
            if pw == 0 {
                out.add_term((*e, m.clone()), c.clone());
                continue;
            }
            while cache.len() <= pw {
                let next = cache.last().unwrap() * by;
                cache.push(next);
            }
            let rest = Expr::term(c.clone(), *e, m.without(s));
            out += &(&rest * &cache[pw]);
        }
        out
    }

    pub fn substitute_param(&self, p: Param, by: &Expr) -> Expr {
        self.substitute_symbol(Symbol::Param(p), by)
    }

    /// Replace γ atoms by the closed forms of `g`.
    pub fn substitute_gamma(&self, g: &GammaForm) -> Expr {
        let mut out = self.clone();
        for n in (1..=self.max_gamma_order()).rev() {
            out = out.substitute_symbol(Symbol::GammaDeriv(n), &g.derivative(n));
        }
        out
    }

    /// Bind parameters to exact rationals. Binding `alpha` also folds the
    /// `q·α` part of every exponent.
    pub fn substitute_params(&self, bindings: &BTreeMap<Param, BigRational>) -> Expr {
        let mut out = self.clone();
        for (p, v) in bindings {
            if *p == Param::Alpha {
                out = out.bind_alpha(v);
            } else {
                out = out.substitute_param(*p, &Expr::constant(v.clone()));
            }
        }
        out
    }

    fn bind_alpha(&self, a: &BigRational) -> Expr {
        let alpha = Symbol::Param(Param::Alpha);
        let mut out = Expr::zero();
        for ((e, m), c) in &self.terms {
            let np = q64_big(e.p) + q64_big(e.q) * a;
            let np = Q64::new(
                np.numer().to_i64().expect("exponent overflow"),
                np.denom().to_i64().expect("exponent overflow"),
            );
            let pw = m.power_of(alpha);
            let coef = c * a.pow(pw as i32);
            out.add_term((Exponent::new(np, Q64::zero()), m.without(alpha)), coef);
        }
        out
    }

    pub fn max_gamma_order(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|(_, m)| m.factors().iter())
            .filter_map(|(s, _)| match s {
                Symbol::GammaDeriv(n) => Some(*n),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn contains_symbol(&self, s: Symbol) -> bool {
        self.terms.keys().any(|(_, m)| m.power_of(s) > 0)
    }

    pub fn contains_param(&self, p: Param) -> bool {
        self.contains_symbol(Symbol::Param(p))
    }

    pub fn has_gamma(&self) -> bool {
        self.max_gamma_order() > 0
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        let mut v: Vec<Symbol> =
            self.terms.keys().flat_map(|(_, m)| m.factors().iter().map(|(s, _)| *s)).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn has_t_alpha(&self) -> bool {
        self.terms.keys().any(|(e, _)| !e.q.is_zero())
    }

    /// Highest power of `p` present.
    pub fn degree_in(&self, p: Param) -> u32 {
        let s = Symbol::Param(p);
        self.terms.keys().map(|(_, m)| m.power_of(s)).max().unwrap_or(0)
    }

    /// Coefficient of `p^d`, with `p` removed.
    pub fn coefficient_of(&self, p: Param, d: u32) -> Expr {
        let s = Symbol::Param(p);
        let mut out = Expr::zero();
        for ((e, m), c) in &self.terms {
            if m.power_of(s) == d {
                out.add_term((*e, m.without(s)), c.clone());
            }
        }
        out
    }

    /// IEEE evaluation at `t > 0`.
    pub fn eval(&self, t: f64, b: &Bindings) -> Result<f64, EvalError> {
        let alpha = b.get(Param::Alpha);
        let mut sum = 0.0;
        for ((e, m), c) in &self.terms {
            let mut v = big_f64(c);
            for &(s, pw) in m.factors() {
                let x = match s {
                    Symbol::Param(p) => b.get(p).ok_or(EvalError::Unbound(s))?,
                    Symbol::GammaDeriv(_) => return Err(EvalError::Unbound(s)),
                };
                v *= x.powi(pw as i32);
            }
            if !e.is_zero() {
                let ev = if e.q.is_zero() {
                    q64_f64(e.p)
                } else {
                    let a = alpha.ok_or(EvalError::Unbound(Symbol::Param(Param::Alpha)))?;
                    e.value(a)
                };
                v *= pow_t(t, ev);
            }
            sum += v;
        }
        Ok(sum)
    }

    /// Term with the largest `t` exponent as t→∞, with its parameter
    /// coefficient. With `alpha = None` the order must hold for all α ∈ (0,1).
    pub fn leading_behavior(
        &self,
        alpha: Option<&BigRational>,
    ) -> Result<(Exponent, Expr), LeadingError> {
        let mut exps: Vec<Exponent> = self.terms.keys().map(|(e, _)| *e).collect();
        exps.dedup();
        let first = *exps.first().ok_or(LeadingError::Zero)?;
        let mut best = first;
        for e in &exps[1..] {
            match e.cmp_alpha(&best, alpha) {
                Some(Ordering::Greater) => best = *e,
                Some(_) => {}
                None => return Err(LeadingError::AlphaAmbiguous),
            }
        }
        // The running maximum must dominate every exponent, not only the
        // ones after it.
        for e in &exps {
            if best.cmp_alpha(e, alpha).is_none() {
                return Err(LeadingError::AlphaAmbiguous);
            }
        }
        let mut coef = Expr::zero();
        for ((e, m), c) in &self.terms {
            if best.cmp_alpha(e, alpha) == Some(Ordering::Equal) {
                coef.add_term((Exponent::zero(), m.clone()), c.clone());
            }
        }
        if coef.is_zero() {
            return Err(LeadingError::Zero);
        }
        Ok((best, coef))
    }
}

pub(crate) fn pow_t(t: f64, e: f64) -> f64 {
    if e == e.trunc() && e.abs() < 64.0 {
        t.powi(e as i32)
    } else {
        t.powf(e)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

/// Text form that round-trips through the parser.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, ((e, m), c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            write!(f, "{}", c.abs())?;
            for (s, p) in m.factors() {
                write!(f, "*{s}")?;
                if *p != 1 {
                    write!(f, "^{p}")?;
                }
            }
            if !e.is_zero() {
                write!(f, "*t^{e}")?;
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse::parse_expr(s)
    }
}

impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl AddAssign<&Expr> for Expr {
    fn add_assign(&mut self, o: &Expr) {
        for (k, v) in &o.terms {
            self.add_term(k.clone(), v.clone());
        }
    }
}

impl SubAssign<&Expr> for Expr {
    fn sub_assign(&mut self, o: &Expr) {
        for (k, v) in &o.terms {
            self.add_term(k.clone(), -v.clone());
        }
    }
}

impl Add<&Expr> for &Expr {
    type Output = Expr;
    fn add(self, o: &Expr) -> Expr {
        let mut r = self.clone();
        r += o;
        r
    }
}

impl Sub<&Expr> for &Expr {
    type Output = Expr;
    fn sub(self, o: &Expr) -> Expr {
        let mut r = self.clone();
        r -= o;
        r
    }
}

impl Mul<&Expr> for &Expr {
    type Output = Expr;
    fn mul(self, o: &Expr) -> Expr {
        let mut r = Expr::zero();
        for ((e1, m1), c1) in &self.terms {
            for ((e2, m2), c2) in &o.terms {
                r.add_term((*e1 + *e2, m1.mul(m2)), c1 * c2);
            }
        }
        r
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr { terms: self.terms.iter().map(|(k, v)| (k.clone(), -v.clone())).collect() }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr { (&self).$m(&o) }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, o: &Expr) -> Expr { (&self).$m(o) }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr { self.$m(&o) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

pub fn add(a: &Expr, b: &Expr) -> Expr {
    a + b
}

pub fn mul(a: &Expr, b: &Expr) -> Expr {
    a * b
}

pub fn neg(a: &Expr) -> Expr {
    -a
}

#[cfg(test)]
mod tests;
