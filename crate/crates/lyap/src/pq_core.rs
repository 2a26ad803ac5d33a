//! Matrix pairs (P, Q) over the basis v1 = x−x*, v2 = ∇f, v3 = ẋ,
//! v4 = ∇²f ẋ, v5 = ẍ and the operations that rewrite them.
//!
//! Along any trajectory of the ODE the pair satisfies
//! d/dt[e^γ (p + f − f*)] + e^γ q = 0 with p = vᵀ(P⊗I)v over (v1, v2, v3) and
//! q = vᵀ(Q⊗I)v over (v1..v5). Every operation preserves that identity.

use crate::symexpr::{Bindings, EvalError, Expr, GammaForm, Param, ParseError, Symbol};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Left-hand-side coefficients of `Σ c_i v_i = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeSystemSpec {
    pub name: String,
    pub coeffs: [Expr; 5],
    pub free_params: BTreeSet<Param>,
}

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("coefficient of v{0} contains gamma atoms or lambda/theta")]
    Forbidden(usize),
    #[error("coefficient of grad f (v2) is zero")]
    NoGradient,
    #[error("bad expression in {field}: {err}")]
    Parse { field: String, err: ParseError },
    #[error("spec file: {0}")]
    Format(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    name: String,
    coeff_v1: String,
    coeff_v2: String,
    coeff_v3: String,
    coeff_v4: String,
    coeff_v5: String,
    #[serde(default)]
    params: Vec<String>,
}

impl OdeSystemSpec {
    pub fn new(name: impl Into<String>, coeffs: [Expr; 5]) -> Result<Self, SpecError> {
        for (i, c) in coeffs.iter().enumerate() {
            if c.has_gamma() || c.contains_param(Param::Lambda) || c.contains_param(Param::Theta) {
                return Err(SpecError::Forbidden(i + 1));
            }
        }
        if coeffs[1].is_zero() {
            return Err(SpecError::NoGradient);
        }
        let free_params = coeffs
            .iter()
            .flat_map(|c| c.symbols())
            .filter_map(|s| match s {
                Symbol::Param(p) => Some(p),
                Symbol::GammaDeriv(_) => None,
            })
            .collect();
        Ok(OdeSystemSpec { name: name.into(), coeffs, free_params })
    }

    /// Parse the TOML spec format (`name`, `coeff_v1`..`coeff_v5`, `params`).
    pub fn from_toml(text: &str) -> Result<Self, SpecError> {
        let f: SpecFile = toml::from_str(text).map_err(|e| SpecError::Format(e.to_string()))?;
        let field = |n: &str, s: &str| -> Result<Expr, SpecError> {
            s.parse().map_err(|err| SpecError::Parse { field: n.to_string(), err })
        };
        let coeffs = [
            field("coeff_v1", &f.coeff_v1)?,
            field("coeff_v2", &f.coeff_v2)?,
            field("coeff_v3", &f.coeff_v3)?,
            field("coeff_v4", &f.coeff_v4)?,
            field("coeff_v5", &f.coeff_v5)?,
        ];
        let mut spec = OdeSystemSpec::new(f.name, coeffs)?;
        for p in &f.params {
            let p = Param::from_name(p).ok_or_else(|| SpecError::UnknownParam(p.clone()))?;
            spec.free_params.insert(p);
        }
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        let f = SpecFile {
            name: self.name.clone(),
            coeff_v1: self.coeffs[0].to_string(),
            coeff_v2: self.coeffs[1].to_string(),
            coeff_v3: self.coeffs[2].to_string(),
            coeff_v4: self.coeffs[3].to_string(),
            coeff_v5: self.coeffs[4].to_string(),
            params: self.free_params.iter().map(|p| p.name().to_string()).collect(),
        };
        toml::to_string(&f).expect("spec serializes")
    }

    /// True when the ODE has no ẍ term.
    pub fn is_first_order(&self) -> bool {
        self.coeffs[4].is_zero()
    }

    /// The same dynamics multiplied through by a constant.
    pub fn scaled(&self, c: &Expr) -> OdeSystemSpec {
        let coeffs = self.coeffs.clone().map(|e| &e * c);
        OdeSystemSpec { name: self.name.clone(), coeffs, free_params: self.free_params.clone() }
    }
}

/// Symmetric N×N matrix of expressions, stored as the upper triangle.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SymMatrix {
    n: usize,
    upper: Vec<Expr>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, upper: vec![Expr::zero(); n * (n + 1) / 2] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        assert!(j < self.n);
        i * self.n - i * (i + 1) / 2 + j
    }

    /// 0-based access.
    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.upper[self.idx(i, j)]
    }

    /// Sets (i,j) and (j,i) together.
    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        let k = self.idx(i, j);
        self.upper[k] = e;
    }

    pub fn add(&mut self, i: usize, j: usize, e: &Expr) {
        let k = self.idx(i, j);
        self.upper[k] += e;
    }

    pub fn sub(&mut self, i: usize, j: usize, e: &Expr) {
        let k = self.idx(i, j);
        self.upper[k] -= e;
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> SymMatrix {
        SymMatrix { n: self.n, upper: self.upper.iter().map(f).collect() }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Expr)> {
        (0..self.n).flat_map(move |i| (i..self.n).map(move |j| (i, j, self.get(i, j))))
    }

    pub fn is_zero(&self) -> bool {
        self.upper.iter().all(Expr::is_zero)
    }

    pub fn rows(&self) -> Vec<Vec<String>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j).to_string()).collect()).collect()
    }

    /// Σ M_ij ⟨v_i, v_j⟩ for numeric entries.
    pub fn quadratic_form(vals: &[Vec<f64>], vecs: &[&[f64]]) -> f64 {
        let n = vals.len();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if vals[i][j] != 0.0 {
                    s += vals[i][j] * dot(vecs[i], vecs[j]);
                }
            }
        }
        s
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperationId {
    A1,
    B1,
    B2,
    B3,
    C1,
    D1,
    D2,
    D3,
    D4,
    E1,
    F1,
}

impl OperationId {
    pub const ALL: [OperationId; 11] = [
        OperationId::A1,
        OperationId::B1,
        OperationId::B2,
        OperationId::B3,
        OperationId::C1,
        OperationId::D1,
        OperationId::D2,
        OperationId::D3,
        OperationId::D4,
        OperationId::E1,
        OperationId::F1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperationId::A1 => "A1",
            OperationId::B1 => "B1",
            OperationId::B2 => "B2",
            OperationId::B3 => "B3",
            OperationId::C1 => "C1",
            OperationId::D1 => "D1",
            OperationId::D2 => "D2",
            OperationId::D3 => "D3",
            OperationId::D4 => "D4",
            OperationId::E1 => "E1",
            OperationId::F1 => "F1",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        OperationId::ALL.iter().copied().find(|o| o.name() == s)
    }
}

impl fmt::Display for OperationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OpError {
    #[error("A1 has already been applied")]
    A1Twice,
    #[error("{0} requires A1 first")]
    MissingA1(OperationId),
}

/// P is 3×3 over (v1, v2, v3); Q is 5×5 over (v1..v5).
#[derive(Clone, Debug)]
pub struct PQPair {
    pub p: SymMatrix,
    pub q: SymMatrix,
    pub provenance: Vec<OperationId>,
    pub objective_gap: bool,
}

impl PartialEq for PQPair {
    /// Structural equality of the matrices; provenance is ignored.
    fn eq(&self, o: &Self) -> bool {
        self.p == o.p && self.q == o.q
    }
}

impl Eq for PQPair {}

impl std::hash::Hash for PQPair {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.p.hash(h);
        self.q.hash(h);
    }
}

/// E(t) = e^γ (p + f − f*), with q its dissipation.
#[derive(Clone, Debug)]
pub struct LyapunovForm {
    pub p_matrix: SymMatrix,
    pub includes_objective_gap: bool,
    pub q_matrix: SymMatrix,
}

/// g(e) = γ̇·e + ė
pub fn g_fn(e: &Expr) -> Expr {
    &(&Expr::gamma(1) * e) + &e.differentiate()
}

/// A1 extracts e^γ(f − f*) with unit weight, so a constant coefficient of
/// ∇f is divided out first; c·F = 0 and F = 0 then give the same pair.
pub fn initial_pair(spec: &OdeSystemSpec) -> PQPair {
    let w = [Expr::gamma(1), Expr::zero(), Expr::one(), Expr::zero(), Expr::zero()];
    let half = Expr::ratio(1, 2);
    let coeffs = match spec.coeffs[1].as_constant() {
        Some(c) if !c.is_zero() && !c.is_one() => {
            let inv = c.recip();
            spec.coeffs.clone().map(|e| e.scale(&inv))
        }
        _ => spec.coeffs.clone(),
    };
    let mut q = SymMatrix::zeros(5);
    for i in 0..5 {
        for j in i..5 {
            let e = &(&coeffs[i] * &w[j]) + &(&coeffs[j] * &w[i]);
            q.set(i, j, &half * &e);
        }
    }
    PQPair { p: SymMatrix::zeros(3), q, provenance: Vec::new(), objective_gap: false }
}

/// Integration by parts of the cross term `src` of Q into entry `dst` of P;
/// `g(src)` is subtracted from Q at `dst`. Returns the moved value.
fn move_into(
    p: &mut SymMatrix,
    q: &mut SymMatrix,
    src: (usize, usize),
    dst: (usize, usize),
) -> Option<Expr> {
    let s = q.get(src.0, src.1).clone();
    if s.is_zero() {
        return None;
    }
    p.add(dst.0, dst.1, &s);
    q.sub(dst.0, dst.1, &g_fn(&s));
    q.set(src.0, src.1, Expr::zero());
    Some(s)
}

// 0-based basis indices
const V1: usize = 0;
const V2: usize = 1;
const V3: usize = 2;
const V4: usize = 3;
const V5: usize = 4;

impl PQPair {
    pub fn apply(&self, op: OperationId) -> Result<PQPair, OpError> {
        let mut n = self.clone();
        n.apply_mut(op)?;
        Ok(n)
    }

    pub fn apply_mut(&mut self, op: OperationId) -> Result<(), OpError> {
        use OperationId::*;
        match (op, self.objective_gap) {
            (A1, true) => return Err(OpError::A1Twice),
            (A1, false) => {}
            (o, false) => return Err(OpError::MissingA1(o)),
            _ => {}
        }
        let (p, q) = (&mut self.p, &mut self.q);
        let half = Expr::ratio(1, 2);
        let gd = Expr::gamma(1);
        match op {
            A1 => {
                q.sub(V2, V3, &half);
                q.sub(V1, V2, &(&half * &gd));
                q.add(V1, V1, &(&(&half * &Expr::param(Param::Lambda)) * &gd));
                self.objective_gap = true;
            }
            B1 => {
                move_into(p, q, (V3, V5), (V3, V3));
            }
            B2 => {
                if let Some(s) = move_into(p, q, (V1, V5), (V1, V3)) {
                    q.sub(V3, V3, &(&Expr::int(2) * &s));
                }
            }
            B3 => {
                move_into(p, q, (V1, V3), (V1, V1));
            }
            C1 => {
                move_into(p, q, (V2, V4), (V2, V2));
            }
            D1 => {
                if let Some(s) = move_into(p, q, (V3, V4), (V2, V3)) {
                    q.sub(V2, V5, &s);
                }
            }
            D2 => {
                if let Some(s) = move_into(p, q, (V2, V5), (V2, V3)) {
                    q.sub(V3, V4, &s);
                }
            }
            D3 => {
                if let Some(s) = move_into(p, q, (V2, V3), (V1, V2)) {
                    q.sub(V1, V4, &s);
                }
            }
            D4 => {
                if let Some(s) = move_into(p, q, (V1, V4), (V1, V2)) {
                    q.sub(V2, V3, &s);
                }
            }
            E1 => {
                let s = q.get(V1, V4).clone();
                if !s.is_zero() {
                    let lam = Expr::param(Param::Lambda);
                    p.add(V1, V1, &(&lam * &s));
                    q.sub(V1, V1, &(&lam * &g_fn(&s)));
                    q.set(V1, V4, Expr::zero());
                }
            }
            F1 => {
                let s = q.get(V3, V4).clone();
                if !s.is_zero() {
                    let th = Expr::param(Param::Theta);
                    q.add(V3, V3, &(&(&Expr::int(2) * &th) * &s));
                    q.set(V3, V4, Expr::zero());
                }
            }
        }
        self.provenance.push(op);
        Ok(())
    }

    pub fn apply_sequence(&self, ops: &[OperationId]) -> Result<PQPair, OpError> {
        let mut n = self.clone();
        for &o in ops {
            n.apply_mut(o)?;
        }
        Ok(n)
    }

    pub fn lyapunov_form(&self) -> LyapunovForm {
        LyapunovForm {
            p_matrix: self.p.clone(),
            includes_objective_gap: self.objective_gap,
            q_matrix: self.q.clone(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        // Storage is triangular, so symmetry holds by construction; this
        // checks the accessor agrees in both orders.
        let ok = |m: &SymMatrix| {
            (0..m.dim()).all(|i| (0..m.dim()).all(|j| m.get(i, j) == m.get(j, i)))
        };
        ok(&self.p) && ok(&self.q)
    }

    /// λ and θ only on diagonals.
    pub fn params_diagonal_only(&self) -> bool {
        let off = |m: &SymMatrix| {
            m.entries().all(|(i, j, e)| {
                i == j || !(e.contains_param(Param::Lambda) || e.contains_param(Param::Theta))
            })
        };
        off(&self.p) && off(&self.q)
    }

    pub fn max_gamma_order(&self) -> u32 {
        self.p
            .entries()
            .chain(self.q.entries())
            .map(|(_, _, e)| e.max_gamma_order())
            .max()
            .unwrap_or(0)
    }

    pub fn map_entries(&self, f: impl Fn(&Expr) -> Expr) -> PQPair {
        PQPair {
            p: self.p.map(&f),
            q: self.q.map(&f),
            provenance: self.provenance.clone(),
            objective_gap: self.objective_gap,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "P": self.p.rows(),
            "Q": self.q.rows(),
            "ops": self.provenance.iter().map(|o| o.name()).collect::<Vec<_>>(),
        })
    }

    /// Short description of nonzero entries, e.g. `P11 P13 | Q11 Q33`.
    pub fn sketch(&self) -> String {
        let nz = |m: &SymMatrix, tag: &str| -> Vec<String> {
            m.entries()
                .filter(|(_, _, e)| !e.is_zero())
                .map(|(i, j, _)| format!("{tag}{}{}", i + 1, j + 1))
                .collect()
        };
        format!("{} | {}", nz(&self.p, "P").join(" "), nz(&self.q, "Q").join(" "))
    }
}

pub fn apply_operation(pair: &PQPair, op: OperationId) -> Result<PQPair, OpError> {
    pair.apply(op)
}

pub fn apply_sequence(pair: &PQPair, ops: &[OperationId]) -> Result<PQPair, OpError> {
    pair.apply_sequence(ops)
}

/// Numeric evaluators for p and q with γ substituted.
#[derive(Clone, Debug)]
pub struct ScalarForms {
    pub gamma: GammaForm,
    pub p: SymMatrix,
    pub q: SymMatrix,
}

pub fn lyapunov_scalar_forms(pair: &PQPair, g: &GammaForm) -> ScalarForms {
    let s = pair.map_entries(|e| e.substitute_gamma(g));
    ScalarForms { gamma: g.clone(), p: s.p, q: s.q }
}

impl ScalarForms {
    fn numeric(m: &SymMatrix, t: f64, b: &Bindings) -> Result<Vec<Vec<f64>>, EvalError> {
        let n = m.dim();
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = m.get(i, j).eval(t, b)?;
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        Ok(out)
    }

    /// vᵀ(P⊗I)v over (v1, v2, v3), without the e^γ factor.
    pub fn p_value(&self, t: f64, v: &[&[f64]], b: &Bindings) -> Result<f64, EvalError> {
        Ok(SymMatrix::quadratic_form(&Self::numeric(&self.p, t, b)?, &v[..3]))
    }

    /// vᵀ(Q⊗I)v over (v1..v5), without the e^γ factor.
    pub fn q_value(&self, t: f64, v: &[&[f64]], b: &Bindings) -> Result<f64, EvalError> {
        Ok(SymMatrix::quadratic_form(&Self::numeric(&self.q, t, b)?, &v[..5]))
    }

    pub fn gamma_value(&self, t: f64, b: &Bindings) -> Result<f64, EvalError> {
        self.gamma.value(t, b)
    }
}
