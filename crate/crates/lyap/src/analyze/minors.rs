//! Symbolic principal minors and their fast numeric evaluation.

use crate::pq_core::SymMatrix;
use crate::symexpr::{big_f64, Bindings, Exponent, Expr, Param, Symbol};
use std::collections::HashMap;

/// Indices of rows that have at least one nonzero entry.
pub fn support(m: &SymMatrix) -> Vec<usize> {
    (0..m.dim()).filter(|&i| (0..m.dim()).any(|j| !m.get(i, j).is_zero())).collect()
}

/// Determinant of the submatrix `rows × cols` by cofactor expansion along the
/// first row, memoised on (row mask, column mask).
fn det(m: &SymMatrix, rows: u32, cols: u32, memo: &mut HashMap<(u32, u32), Expr>) -> Expr {
    if rows == 0 {
        return Expr::one();
    }
    if let Some(e) = memo.get(&(rows, cols)) {
        return e.clone();
    }
    let r0 = rows.trailing_zeros() as usize;
    let rest = rows & !(1 << r0);
    let mut acc = Expr::zero();
    let mut sign_neg = false;
    for j in 0..m.dim() {
        if cols & (1 << j) == 0 {
            continue;
        }
        let a = m.get(r0, j);
        if !a.is_zero() {
            let sub = det(m, rest, cols & !(1 << j), memo);
            if !sub.is_zero() {
                let term = a * &sub;
                if sign_neg {
                    acc -= &term;
                } else {
                    acc += &term;
                }
            }
        }
        sign_neg = !sign_neg;
    }
    memo.insert((rows, cols), acc.clone());
    acc
}

/// All principal minors of the support submatrix, with identically zero
/// minors dropped. Each entry is (index set, minor).
pub fn principal_minors(m: &SymMatrix) -> Vec<(Vec<usize>, Expr)> {
    let sup = support(m);
    let mut memo = HashMap::new();
    let mut out = Vec::new();
    for mask in 1u32..(1 << sup.len()) {
        let idx: Vec<usize> =
            sup.iter().enumerate().filter(|(b, _)| mask & (1 << b) != 0).map(|(_, &i)| i).collect();
        let bits = idx.iter().fold(0u32, |a, &i| a | (1 << i));
        let d = det(m, bits, bits, &mut memo);
        if !d.is_zero() {
            out.push((idx, d));
        }
    }
    out
}

fn det_f64(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut d = 1.0;
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            a.swap(piv, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    d
}

/// Numeric semidefiniteness of a dense symmetric matrix through all
/// principal minors, each allowed down to −tol·scale^size.
pub fn numeric_psd(m: &[Vec<f64>], tol: f64) -> bool {
    let n = m.len();
    let scale = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
    (1u32..(1 << n)).all(|mask| {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let sub = idx.iter().map(|&i| idx.iter().map(|&j| m[i][j]).collect()).collect();
        det_f64(sub) >= -tol * scale.powi(idx.len() as i32)
    })
}

#[derive(Clone, Debug)]
struct Coef {
    c: f64,
    factors: Vec<(Param, i32)>,
}

/// A minor as Σ_j Λ^j Σ_e c_{j,e}(params) t^e, ready for numeric feasibility
/// checks. Λ is the `lambda` symbol in convex mode and absent otherwise.
#[derive(Clone, Debug)]
pub struct CompiledMinor {
    groups: Vec<(u32, Exponent, Vec<Coef>)>,
}

impl CompiledMinor {
    pub fn new(e: &Expr) -> Self {
        let mut map: std::collections::BTreeMap<(u32, Exponent), Vec<Coef>> = Default::default();
        for (ex, m, c) in e.terms() {
            let mut lam = 0;
            let mut factors = Vec::new();
            for &(s, pw) in m.factors() {
                match s {
                    Symbol::Param(Param::Lambda) => lam = pw,
                    Symbol::Param(p) => factors.push((p, pw as i32)),
                    Symbol::GammaDeriv(_) => panic!("gamma atoms must be substituted first"),
                }
            }
            map.entry((lam, *ex)).or_default().push(Coef { c: big_f64(c), factors });
        }
        CompiledMinor { groups: map.into_iter().map(|((l, e), v)| (l, e, v)).collect() }
    }

    /// Numeric form at fixed parameters. Coefficients that cancel to within
    /// 1e−12 of their contributing magnitude are dropped.
    pub fn bind(&self, b: &Bindings) -> NumericMinor {
        let alpha = b.get(Param::Alpha).unwrap_or(f64::NAN);
        let mut acc: Vec<(u32, f64, f64, f64)> = Vec::new();
        for (lam, ex, coefs) in &self.groups {
            let e = if num_traits::Zero::is_zero(&ex.q) { ex.value(0.0) } else { ex.value(alpha) };
            let (mut v, mut s) = (0.0, 0.0);
            for cf in coefs {
                let mut x = cf.c;
                for &(p, pw) in &cf.factors {
                    x *= b.get(p).unwrap_or_else(|| panic!("unbound parameter {p}")).powi(pw);
                }
                v += x;
                s += x.abs();
            }
            match acc.iter_mut().find(|a| a.0 == *lam && (a.1 - e).abs() < 1e-12) {
                Some(a) => {
                    a.2 += v;
                    a.3 += s;
                }
                None => acc.push((*lam, e, v, s)),
            }
        }
        let mut parts: Vec<(u32, Vec<(f64, f64)>)> = Vec::new();
        for (lam, e, v, s) in acc {
            if v.abs() <= 1e-12 * s || v == 0.0 {
                continue;
            }
            match parts.iter_mut().find(|p| p.0 == lam) {
                Some(p) => p.1.push((e, v)),
                None => parts.push((lam, vec![(e, v)])),
            }
        }
        parts.sort_by(|a, b| b.0.cmp(&a.0));
        for p in &mut parts {
            p.1.sort_by(|a, b| b.0.total_cmp(&a.0));
        }
        NumericMinor { parts }
    }
}

/// Σ_j Λ^j Σ c t^e with exponents sorted descending inside each part and
/// parts sorted by descending Λ power.
#[derive(Clone, Debug)]
pub struct NumericMinor {
    parts: Vec<(u32, Vec<(f64, f64)>)>,
}

pub const REL_TOL: f64 = 1e-12;

impl NumericMinor {
    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    /// Nonnegative at `t` (given as ln t). When Λ is present the sign is
    /// taken as Λ→∞, i.e. from the highest nonvanishing Λ power.
    pub fn ok_at(&self, ln_t: f64) -> bool {
        let n = self.parts.len();
        for (i, (_, terms)) in self.parts.iter().enumerate() {
            let (mut v, mut s) = (0.0, 0.0);
            for &(e, c) in terms {
                let x = c * (e * ln_t).exp();
                v += x;
                s += x.abs();
            }
            if i + 1 == n {
                return v >= -REL_TOL * s;
            }
            if v.abs() > REL_TOL * s {
                return v > 0.0;
            }
        }
        true
    }

    /// Sign of the leading t-term of the leading Λ part as t→∞.
    /// `None` for the zero minor.
    pub fn leading_positive(&self) -> Option<bool> {
        let (_, terms) = self.parts.first()?;
        Some(terms[0].1 > 0.0)
    }

    pub fn leading(&self) -> Option<(f64, f64)> {
        self.parts.first().map(|(_, t)| t[0])
    }
}
