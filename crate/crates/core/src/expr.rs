//! Closed-form expression trees used for coefficient fields, Neumann data and
//! level sets.
//!
//! Trees are built from six node kinds (`const`, `coord`, `sin`, `cos`, `add`,
//! `mul`) and serialize as externally tagged JSON, e.g.
//! `{"add": [{"const": 1.5}, {"sin": {"mul": [{"const": 6.283185307179586}, {"coord": 0}]}}]}`.
//!
//! A [`PeriodicExpr`] is an expression that has been checked to be exactly
//! ℤ²-periodic: every coordinate occurs only inside a trigonometric argument
//! whose coefficients are integer multiples of 2π. Evaluation reduces the
//! coordinates modulo 1 first, so periodicity holds to rounding for any shift.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Expression tree over the two coordinates `y = (y₀, y₁)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
}

impl Expr {
    pub fn c(v: f64) -> Self {
        Expr::Const(v)
    }

    pub fn coord(i: usize) -> Self {
        Expr::Coord(i)
    }

    pub fn sin(e: Expr) -> Self {
        Expr::Sin(Box::new(e))
    }

    pub fn cos(e: Expr) -> Self {
        Expr::Cos(Box::new(e))
    }

    pub fn add(terms: Vec<Expr>) -> Self {
        Expr::Add(terms)
    }

    pub fn mul(factors: Vec<Expr>) -> Self {
        Expr::Mul(factors)
    }

    /// `2π(k₀y₀ + k₁y₁)` as a tree.
    pub fn phase(k: [i64; 2]) -> Self {
        let mut terms = Vec::new();
        for (i, &ki) in k.iter().enumerate() {
            if ki != 0 {
                terms.push(Expr::mul(vec![Expr::c(TAU * ki as f64), Expr::coord(i)]));
            }
        }
        match terms.len() {
            0 => Expr::c(0.0),
            1 => terms.pop().unwrap(),
            _ => Expr::add(terms),
        }
    }

    /// `amp·sin(2π k·y)`.
    pub fn sin_mode(amp: f64, k: [i64; 2]) -> Self {
        Expr::mul(vec![Expr::c(amp), Expr::sin(Expr::phase(k))])
    }

    /// `amp·cos(2π k·y)`.
    pub fn cos_mode(amp: f64, k: [i64; 2]) -> Self {
        Expr::mul(vec![Expr::c(amp), Expr::cos(Expr::phase(k))])
    }

    /// Checks structural validity (coordinate indices, non-empty sums and
    /// products, finite constants). The error names the offending node path.
    pub fn validate(&self) -> Result<()> {
        self.validate_at("$")
    }

    fn validate_at(&self, path: &str) -> Result<()> {
        match self {
            Expr::Const(v) if !v.is_finite() => Err(Error::InvalidConfig(format!(
                "non-finite constant at {path}"
            ))),
            Expr::Const(_) => Ok(()),
            Expr::Coord(i) if *i > 1 => Err(Error::InvalidConfig(format!(
                "coordinate index {i} out of range at {path}"
            ))),
            Expr::Coord(_) => Ok(()),
            Expr::Sin(e) => e.validate_at(&format!("{path}.sin")),
            Expr::Cos(e) => e.validate_at(&format!("{path}.cos")),
            Expr::Add(v) | Expr::Mul(v) => {
                let tag = if matches!(self, Expr::Add(_)) { "add" } else { "mul" };
                if v.is_empty() {
                    return Err(Error::InvalidConfig(format!("empty {tag} node at {path}")));
                }
                for (i, e) in v.iter().enumerate() {
                    e.validate_at(&format!("{path}.{tag}[{i}]"))?;
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, y: [f64; 2]) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Coord(i) => y[*i],
            Expr::Sin(e) => e.eval(y).sin(),
            Expr::Cos(e) => e.eval(y).cos(),
            Expr::Add(v) => v.iter().map(|e| e.eval(y)).sum(),
            Expr::Mul(v) => v.iter().map(|e| e.eval(y)).product(),
        }
    }

    /// Value, gradient and Hessian by second-order forward differentiation.
    pub fn eval_jet(&self, y: [f64; 2]) -> Jet {
        match self {
            Expr::Const(v) => Jet::constant(*v),
            Expr::Coord(i) => Jet::variable(y[*i], *i),
            Expr::Sin(e) => e.eval_jet(y).sin(),
            Expr::Cos(e) => e.eval_jet(y).cos(),
            Expr::Add(v) => v
                .iter()
                .fold(Jet::constant(0.0), |acc, e| acc.add(&e.eval_jet(y))),
            Expr::Mul(v) => v
                .iter()
                .fold(Jet::constant(1.0), |acc, e| acc.mul(&e.eval_jet(y))),
        }
    }

    /// True when the tree contains no coordinate node.
    /// Replaces coordinate `i` by the constant `value`.
    pub fn substitute(&self, i: usize, value: f64) -> Expr {
        match self {
            Expr::Coord(k) if *k == i => Expr::Const(value),
            Expr::Const(_) | Expr::Coord(_) => self.clone(),
            Expr::Sin(e) => Expr::sin(e.substitute(i, value)),
            Expr::Cos(e) => Expr::cos(e.substitute(i, value)),
            Expr::Add(v) => Expr::Add(v.iter().map(|e| e.substitute(i, value)).collect()),
            Expr::Mul(v) => Expr::Mul(v.iter().map(|e| e.substitute(i, value)).collect()),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Coord(_) => false,
            Expr::Sin(e) | Expr::Cos(e) => e.is_constant(),
            Expr::Add(v) | Expr::Mul(v) => v.iter().all(Expr::is_constant),
        }
    }

    /// Returns `(c, d)` with `self(y) = c·y + d` when the tree is affine.
    fn affine(&self) -> Option<([f64; 2], f64)> {
        match self {
            Expr::Const(v) => Some(([0.0, 0.0], *v)),
            Expr::Coord(i) => {
                let mut c = [0.0, 0.0];
                c[*i] = 1.0;
                Some((c, 0.0))
            }
            Expr::Sin(_) | Expr::Cos(_) => {
                if self.is_constant() {
                    Some(([0.0, 0.0], self.eval([0.0, 0.0])))
                } else {
                    None
                }
            }
            Expr::Add(v) => {
                let mut c = [0.0, 0.0];
                let mut d = 0.0;
                for e in v {
                    let (ce, de) = e.affine()?;
                    c[0] += ce[0];
                    c[1] += ce[1];
                    d += de;
                }
                Some((c, d))
            }
            Expr::Mul(v) => {
                let mut c = [0.0, 0.0];
                let mut d = 1.0;
                let mut linear_seen = false;
                for e in v {
                    let (ce, de) = e.affine()?;
                    let is_lin = ce[0] != 0.0 || ce[1] != 0.0;
                    if is_lin {
                        if linear_seen {
                            return None;
                        }
                        linear_seen = true;
                        c = [ce[0] * d, ce[1] * d];
                        d *= de;
                    } else {
                        c = [c[0] * de, c[1] * de];
                        d *= de;
                    }
                }
                Some((c, d))
            }
        }
    }
}

/// Second-order jet: value, gradient and Hessian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 2],
    pub h: [[f64; 2]; 2],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet { v, g: [0.0; 2], h: [[0.0; 2]; 2] }
    }

    pub fn variable(v: f64, i: usize) -> Self {
        let mut g = [0.0; 2];
        g[i] = 1.0;
        Jet { v, g, h: [[0.0; 2]; 2] }
    }

    fn add(&self, o: &Jet) -> Jet {
        let mut r = *self;
        r.v += o.v;
        for i in 0..2 {
            r.g[i] += o.g[i];
            for j in 0..2 {
                r.h[i][j] += o.h[i][j];
            }
        }
        r
    }

    fn mul(&self, o: &Jet) -> Jet {
        let mut r = Jet::constant(self.v * o.v);
        for i in 0..2 {
            r.g[i] = self.g[i] * o.v + self.v * o.g[i];
            for j in 0..2 {
                r.h[i][j] = self.h[i][j] * o.v
                    + self.v * o.h[i][j]
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i];
            }
        }
        r
    }

    fn chain(&self, f: f64, df: f64, ddf: f64) -> Jet {
        let mut r = Jet::constant(f);
        for i in 0..2 {
            r.g[i] = df * self.g[i];
            for j in 0..2 {
                r.h[i][j] = df * self.h[i][j] + ddf * self.g[i] * self.g[j];
            }
        }
        r
    }

    fn sin(&self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    fn cos(&self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum PNode {
    Const(f64),
    Trig { cos: bool, k: [i64; 2], phase: f64 },
    Sin(Box<PNode>),
    Cos(Box<PNode>),
    Add(Vec<PNode>),
    Mul(Vec<PNode>),
}

impl PNode {
    fn eval(&self, f: [f64; 2]) -> f64 {
        match self {
            PNode::Const(v) => *v,
            PNode::Trig { cos, k, phase } => {
                let t = k[0] as f64 * f[0] + k[1] as f64 * f[1];
                let t = t - t.floor();
                let a = TAU * t + phase;
                if *cos {
                    a.cos()
                } else {
                    a.sin()
                }
            }
            PNode::Sin(e) => e.eval(f).sin(),
            PNode::Cos(e) => e.eval(f).cos(),
            PNode::Add(v) => v.iter().map(|e| e.eval(f)).sum(),
            PNode::Mul(v) => v.iter().map(|e| e.eval(f)).product(),
        }
    }
}

/// An expression certified to be exactly ℤ²-periodic.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicExpr {
    source: Expr,
    node: PNode,
}

const FREQ_TOL: f64 = 1e-9;

impl PeriodicExpr {
    pub fn new(source: Expr) -> Result<Self> {
        source.validate()?;
        let node = compile(&source, "$")?;
        Ok(PeriodicExpr { source, node })
    }

    pub fn constant(v: f64) -> Self {
        PeriodicExpr { source: Expr::c(v), node: PNode::Const(v) }
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }

    pub fn is_constant(&self) -> bool {
        self.source.is_constant()
    }

    pub fn eval(&self, y: [f64; 2]) -> f64 {
        let f = [y[0] - y[0].floor(), y[1] - y[1].floor()];
        self.node.eval(f)
    }
}

fn compile(e: &Expr, path: &str) -> Result<PNode> {
    match e {
        Expr::Const(v) => Ok(PNode::Const(*v)),
        Expr::Coord(_) => Err(Error::InvalidConfig(format!(
            "coordinate outside a trigonometric argument at {path}; periodic fields need 2π-integer frequencies"
        ))),
        Expr::Sin(arg) | Expr::Cos(arg) => {
            let is_cos = matches!(e, Expr::Cos(_));
            let tag = if is_cos { "cos" } else { "sin" };
            if arg.is_constant() {
                return Ok(PNode::Const(e.eval([0.0, 0.0])));
            }
            if let Some((c, d)) = arg.affine() {
                let mut k = [0i64; 2];
                for i in 0..2 {
                    let q = c[i] / TAU;
                    let r = q.round();
                    if (q - r).abs() > FREQ_TOL * r.abs().max(1.0) {
                        return Err(Error::InvalidConfig(format!(
                            "frequency {:.6} of coordinate {i} is not an integer multiple of 2π at {path}.{tag}",
                            c[i]
                        )));
                    }
                    k[i] = r as i64;
                }
                return Ok(PNode::Trig { cos: is_cos, k, phase: d });
            }
            let inner = compile(arg, &format!("{path}.{tag}"))?;
            Ok(if is_cos {
                PNode::Cos(Box::new(inner))
            } else {
                PNode::Sin(Box::new(inner))
            })
        }
        Expr::Add(v) => Ok(PNode::Add(
            v.iter()
                .enumerate()
                .map(|(i, t)| compile(t, &format!("{path}.add[{i}]")))
                .collect::<Result<_>>()?,
        )),
        Expr::Mul(v) => Ok(PNode::Mul(
            v.iter()
                .enumerate()
                .map(|(i, t)| compile(t, &format!("{path}.mul[{i}]")))
                .collect::<Result<_>>()?,
        )),
    }
}

impl Serialize for PeriodicExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.source.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PeriodicExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let e = Expr::deserialize(d)?;
        PeriodicExpr::new(e).map_err(serde::de::Error::custom)
    }
}
