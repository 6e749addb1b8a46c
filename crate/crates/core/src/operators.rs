//! Uniformly elliptic operators `F(M, y)` with ℤ²-periodic dependence on the
//! fast variable, the Pucci extremal operators, and periodic Neumann data.
//!
//! Sign convention: `F` is minus the diffusion, so `F(M) = −tr(M)` for the
//! Laplacian and subsolutions satisfy `F ≤ 0`.
//!
//! Besides the continuum evaluation [`OperatorSpec::eval`], every operator
//! implements [`DirectionalOperator`]: the discrete counterpart acting on the
//! four unit-direction second differences `s = (s_τ, s_ν, s_d₁, s_d₂)` of the
//! wide stencil (frame axes and the two frame diagonals).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, PeriodicExpr};

/// Symmetric 2×2 matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix2 {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

impl SymmetricMatrix2 {
    pub const ZERO: SymmetricMatrix2 = SymmetricMatrix2 { m11: 0.0, m12: 0.0, m22: 0.0 };

    pub fn new(m11: f64, m12: f64, m22: f64) -> Self {
        SymmetricMatrix2 { m11, m12, m22 }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        SymmetricMatrix2 { m11: a, m12: 0.0, m22: b }
    }

    pub fn identity() -> Self {
        Self::diag(1.0, 1.0)
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn scale(&self, t: f64) -> Self {
        SymmetricMatrix2 { m11: t * self.m11, m12: t * self.m12, m22: t * self.m22 }
    }

    pub fn plus(&self, o: &Self) -> Self {
        SymmetricMatrix2 { m11: self.m11 + o.m11, m12: self.m12 + o.m12, m22: self.m22 + o.m22 }
    }

    pub fn minus(&self, o: &Self) -> Self {
        self.plus(&o.scale(-1.0))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.m11 * self.m11 + 2.0 * self.m12 * self.m12 + self.m22 * self.m22).sqrt()
    }

    /// Eigenvalues `e₁ ≥ e₂` and the angle of the eigenvector of `e₁`.
    pub fn eigen(&self) -> ([f64; 2], f64) {
        let mean = 0.5 * (self.m11 + self.m22);
        let half = 0.5 * (self.m11 - self.m22);
        let r = half.hypot(self.m12);
        let theta = 0.5 * self.m12.atan2(half);
        ([mean + r, mean - r], theta)
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        self.eigen().0
    }

    /// `R(θ) diag(e₁, e₂) R(θ)ᵀ`.
    pub fn from_eigen(e: [f64; 2], theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        SymmetricMatrix2 {
            m11: e[0] * c * c + e[1] * s * s,
            m12: (e[0] - e[1]) * c * s,
            m22: e[0] * s * s + e[1] * c * c,
        }
    }

    /// `R(θ) M R(θ)ᵀ`.
    pub fn rotate(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let r = [[c, -s], [s, c]];
        self.congruence(r)
    }

    /// `A M Aᵀ` for a 2×2 matrix `A` given by rows.
    pub fn congruence(&self, a: [[f64; 2]; 2]) -> Self {
        let m = [[self.m11, self.m12], [self.m12, self.m22]];
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        acc += a[i][k] * m[k][l] * a[j][l];
                    }
                }
                out[i][j] = acc;
            }
        }
        SymmetricMatrix2 { m11: out[0][0], m12: 0.5 * (out[0][1] + out[1][0]), m22: out[1][1] }
    }

    /// `vᵀ M v`.
    pub fn quad(&self, v: [f64; 2]) -> f64 {
        self.m11 * v[0] * v[0] + 2.0 * self.m12 * v[0] * v[1] + self.m22 * v[1] * v[1]
    }
}

/// Pucci maximal operator `𝒫⁺(M) = Λ Σ_{eᵢ>0} eᵢ + λ Σ_{eᵢ<0} eᵢ`.
pub fn pucci_plus(m: &SymmetricMatrix2, lambda: f64, big_lambda: f64) -> f64 {
    m.eigenvalues()
        .iter()
        .map(|&e| if e > 0.0 { big_lambda * e } else { lambda * e })
        .sum()
}

/// Pucci minimal operator `𝒫⁻(M) = λ Σ_{eᵢ>0} eᵢ + Λ Σ_{eᵢ<0} eᵢ`.
pub fn pucci_minus(m: &SymmetricMatrix2, lambda: f64, big_lambda: f64) -> f64 {
    m.eigenvalues()
        .iter()
        .map(|&e| if e > 0.0 { lambda * e } else { big_lambda * e })
        .sum()
}

/// Periodic coefficient field `a(y)` of a linear non-divergence operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub a11: PeriodicExpr,
    pub a12: PeriodicExpr,
    pub a22: PeriodicExpr,
}

impl Coefficients {
    pub fn constant(a11: f64, a12: f64, a22: f64) -> Self {
        Coefficients {
            a11: PeriodicExpr::constant(a11),
            a12: PeriodicExpr::constant(a12),
            a22: PeriodicExpr::constant(a22),
        }
    }

    pub fn from_exprs(a11: Expr, a12: Expr, a22: Expr) -> Result<Self> {
        Ok(Coefficients {
            a11: PeriodicExpr::new(a11)?,
            a12: PeriodicExpr::new(a12)?,
            a22: PeriodicExpr::new(a22)?,
        })
    }

    pub fn eval(&self, y: [f64; 2]) -> SymmetricMatrix2 {
        SymmetricMatrix2 { m11: self.a11.eval(y), m12: self.a12.eval(y), m22: self.a22.eval(y) }
    }

    fn is_constant(&self) -> bool {
        self.a11.is_constant() && self.a12.is_constant() && self.a22.is_constant()
    }

    /// True when `a₁₂ ≡ 0` and `a₁₁ ≡ a₂₂` structurally, so every rotated
    /// frame sees a diagonal matrix.
    fn is_isotropic(&self) -> bool {
        self.a12_vanishes() && self.a11.source() == self.a22.source()
    }

    fn a12_vanishes(&self) -> bool {
        self.a12.is_constant() && self.a12.eval([0.0, 0.0]) == 0.0
    }

    /// `−Σ aᵢⱼ Mᵢⱼ`.
    pub fn apply(&self, m: &SymmetricMatrix2, y: [f64; 2]) -> f64 {
        let a = self.eval(y);
        -(a.m11 * m.m11 + 2.0 * a.m12 * m.m12 + a.m22 * m.m22)
    }
}

/// Operator variants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum OperatorKind {
    LinearNondiv(Coefficients),
    PucciPlus,
    PucciMinus,
    /// `F = min_α max_β F_{αβ}` over finite lists of linear members.
    MinMax { members: Vec<Vec<Coefficients>> },
}

/// An operator together with its declared ellipticity constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    #[serde(flatten)]
    pub kind: OperatorKind,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, lambda: f64, big_lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !(big_lambda >= lambda) || !big_lambda.is_finite() {
            return Err(Error::SpecRejected(format!(
                "ellipticity constants must satisfy 0 < λ ≤ Λ < ∞, got λ={lambda}, Λ={big_lambda}"
            )));
        }
        if let OperatorKind::MinMax { members } = &kind {
            if members.is_empty() || members.iter().any(|row| row.is_empty()) {
                return Err(Error::SpecRejected("min-max family needs non-empty member lists".into()));
            }
        }
        Ok(OperatorSpec { kind, lambda, big_lambda })
    }

    pub fn laplacian() -> Self {
        Self::new(OperatorKind::LinearNondiv(Coefficients::constant(1.0, 0.0, 1.0)), 1.0, 1.0)
            .expect("valid")
    }

    pub fn pucci_plus(lambda: f64, big_lambda: f64) -> Result<Self> {
        Self::new(OperatorKind::PucciPlus, lambda, big_lambda)
    }

    pub fn pucci_minus(lambda: f64, big_lambda: f64) -> Result<Self> {
        Self::new(OperatorKind::PucciMinus, lambda, big_lambda)
    }

    pub fn linear(a: Coefficients, lambda: f64, big_lambda: f64) -> Result<Self> {
        Self::new(OperatorKind::LinearNondiv(a), lambda, big_lambda)
    }

    pub fn min_max(members: Vec<Vec<Coefficients>>, lambda: f64, big_lambda: f64) -> Result<Self> {
        Self::new(OperatorKind::MinMax { members }, lambda, big_lambda)
    }

    pub fn variant_name(&self) -> &'static str {
        match self.kind {
            OperatorKind::LinearNondiv(_) => "linear_nondiv",
            OperatorKind::PucciPlus => "pucci_plus",
            OperatorKind::PucciMinus => "pucci_minus",
            OperatorKind::MinMax { .. } => "min_max",
        }
    }

    /// True when the operator has no fast-variable dependence.
    pub fn is_y_independent(&self) -> bool {
        match &self.kind {
            OperatorKind::LinearNondiv(a) => a.is_constant(),
            OperatorKind::PucciPlus | OperatorKind::PucciMinus => true,
            OperatorKind::MinMax { members } => members.iter().flatten().all(Coefficients::is_constant),
        }
    }

    /// Constant isotropic linear operator `−c·tr(M)`, if this is one.
    pub fn isotropic_constant(&self) -> Option<f64> {
        match &self.kind {
            OperatorKind::LinearNondiv(a) if a.is_constant() && a.is_isotropic() => {
                Some(a.a11.eval([0.0, 0.0]))
            }
            _ => None,
        }
    }

    /// Continuum value `F(M, y)`.
    pub fn eval(&self, m: &SymmetricMatrix2, y: [f64; 2]) -> f64 {
        match &self.kind {
            OperatorKind::LinearNondiv(a) => a.apply(m, y),
            OperatorKind::PucciPlus => -pucci_plus(m, self.lambda, self.big_lambda),
            OperatorKind::PucciMinus => -pucci_minus(m, self.lambda, self.big_lambda),
            OperatorKind::MinMax { members } => members
                .iter()
                .map(|row| row.iter().map(|a| a.apply(m, y)).fold(f64::NEG_INFINITY, f64::max))
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn linear_members(&self) -> Vec<&Coefficients> {
        match &self.kind {
            OperatorKind::LinearNondiv(a) => vec![a],
            OperatorKind::MinMax { members } => members.iter().flatten().collect(),
            _ => Vec::new(),
        }
    }
}

/// `F(M, y)`; see [`OperatorSpec::eval`].
pub fn eval_operator(spec: &OperatorSpec, m: &SymmetricMatrix2, y: [f64; 2]) -> f64 {
    spec.eval(m, y)
}

/// Orthonormal frame `(τ, ν)` of a grid, stored as the two column vectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub tau: [f64; 2],
    pub nu: [f64; 2],
}

impl Frame {
    pub const IDENTITY: Frame = Frame { tau: [1.0, 0.0], nu: [0.0, 1.0] };

    pub fn from_normal(nu: [f64; 2]) -> Self {
        Frame { tau: [nu[1], -nu[0]], nu }
    }

    /// Frame coordinates to world vector.
    pub fn to_world(&self, s: f64, t: f64) -> [f64; 2] {
        [s * self.tau[0] + t * self.nu[0], s * self.tau[1] + t * self.nu[1]]
    }

    pub fn is_axis_aligned(&self) -> bool {
        let c = [self.tau[0], self.tau[1], self.nu[0], self.nu[1]];
        c.iter().all(|&v| v == 0.0 || v.abs() == 1.0)
    }

    /// World matrix expressed in frame coordinates, `Rᵀ A R`.
    pub fn pull_back(&self, a: &SymmetricMatrix2) -> SymmetricMatrix2 {
        a.congruence([self.tau, self.nu])
    }

    /// Unit vectors of the four stencil directions in world coordinates:
    /// τ, ν, (τ+ν)/√2, (τ−ν)/√2.
    pub fn stencil_directions(&self) -> [[f64; 2]; 4] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        [
            self.tau,
            self.nu,
            [r * (self.tau[0] + self.nu[0]), r * (self.tau[1] + self.nu[1])],
            [r * (self.tau[0] - self.nu[0]), r * (self.tau[1] - self.nu[1])],
        ]
    }
}

/// Frame-rotated coefficients `(b₁₁, b₁₂, b₂₂)` of one linear member at one node.
pub type NodeCoefficients = [f64; 3];

/// Discrete operator acting on the four directional second differences.
pub trait DirectionalOperator: Sync + Send {
    /// Number of linear members whose coefficients are cached per node.
    fn member_count(&self) -> usize;

    /// Coefficients of all members at fast variable `y`, rotated into `frame`.
    /// Fails when a member breaks the diagonal dominance needed for a
    /// monotone nine-point stencil.
    fn node_coefficients(&self, y: [f64; 2], frame: &Frame, out: &mut Vec<NodeCoefficients>) -> Result<()>;

    /// Residual value, its derivatives with respect to the four directional
    /// second differences, and a policy code identifying the active branch.
    fn apply(&self, s: &[f64; 4], coeffs: &[NodeCoefficients]) -> (f64, [f64; 4], u32);

    /// Whether the diagonal directions can carry nonzero weight in `frame`.
    fn uses_diagonals(&self, frame: &Frame) -> bool;

    /// Ellipticity constants `(λ, Λ)`.
    fn ellipticity(&self) -> (f64, f64);

    /// `Some(c)` when the operator is `−c·Δ` everywhere.
    fn isotropic_constant(&self) -> Option<f64> {
        None
    }
}

const DOMINANCE_TOL: f64 = 1e-12;

fn linear_weights(b: &NodeCoefficients) -> [f64; 4] {
    let (b11, b12, b22) = (b[0], b[1], b[2]);
    if b12 >= 0.0 {
        [-(b11 - b12), -(b22 - b12), -2.0 * b12, 0.0]
    } else {
        [-(b11 + b12), -(b22 + b12), 0.0, 2.0 * b12]
    }
}

fn dot4(w: &[f64; 4], s: &[f64; 4]) -> f64 {
    w[0] * s[0] + w[1] * s[1] + w[2] * s[2] + w[3] * s[3]
}

impl DirectionalOperator for OperatorSpec {
    fn member_count(&self) -> usize {
        self.linear_members().len()
    }

    fn node_coefficients(&self, y: [f64; 2], frame: &Frame, out: &mut Vec<NodeCoefficients>) -> Result<()> {
        out.clear();
        for a in self.linear_members() {
            let b = frame.pull_back(&a.eval(y));
            let b12 = if a.is_isotropic() || (a.a12_vanishes() && frame.is_axis_aligned()) {
                0.0
            } else {
                b.m12
            };
            if b12.abs() > b.m11.min(b.m22) + DOMINANCE_TOL {
                return Err(Error::SpecRejected(format!(
                    "cross term |b12| = {:.6} exceeds min(b11, b22) = {:.6} at y = ({:.6}, {:.6}); nine-point stencil would not be monotone",
                    b12.abs(),
                    b.m11.min(b.m22),
                    y[0],
                    y[1]
                )));
            }
            out.push([b.m11, b12, b.m22]);
        }
        Ok(())
    }

    fn apply(&self, s: &[f64; 4], coeffs: &[NodeCoefficients]) -> (f64, [f64; 4], u32) {
        let (lo, hi) = (self.lambda, self.big_lambda);
        match &self.kind {
            OperatorKind::LinearNondiv(_) => {
                let w = linear_weights(&coeffs[0]);
                (dot4(&w, s), w, 0)
            }
            OperatorKind::PucciPlus | OperatorKind::PucciMinus => {
                let plus = matches!(self.kind, OperatorKind::PucciPlus);
                // Slope of φ on each side of zero.
                let (pos, neg) = if plus { (hi, lo) } else { (lo, hi) };
                let phi = |v: f64| if v > 0.0 { pos * v } else { neg * v };
                let dphi = |v: f64| if v > 0.0 { pos } else { neg };
                let f0 = phi(s[0]) + phi(s[1]);
                let f1 = phi(s[2]) + phi(s[3]);
                let pick_second = if plus { f1 > f0 } else { f1 < f0 };
                let (a, b, val) = if pick_second { (2, 3, f1) } else { (0, 1, f0) };
                let mut w = [0.0; 4];
                w[a] = -dphi(s[a]);
                w[b] = -dphi(s[b]);
                let code = (pick_second as u32) << 2 | ((s[a] > 0.0) as u32) << 1 | (s[b] > 0.0) as u32;
                (-val, w, code)
            }
            OperatorKind::MinMax { members } => {
                let mut best_outer = f64::INFINITY;
                let mut best_w = [0.0; 4];
                let mut best_code = 0u32;
                let mut idx = 0usize;
                for (alpha, row) in members.iter().enumerate() {
                    let mut inner = f64::NEG_INFINITY;
                    let mut inner_w = [0.0; 4];
                    let mut inner_beta = 0usize;
                    for (beta, _) in row.iter().enumerate() {
                        let w = linear_weights(&coeffs[idx]);
                        idx += 1;
                        let v = dot4(&w, s);
                        if v > inner {
                            inner = v;
                            inner_w = w;
                            inner_beta = beta;
                        }
                    }
                    if inner < best_outer {
                        best_outer = inner;
                        best_w = inner_w;
                        best_code = ((alpha as u32) << 16) | inner_beta as u32;
                    }
                }
                (best_outer, best_w, best_code)
            }
        }
    }

    fn uses_diagonals(&self, frame: &Frame) -> bool {
        match &self.kind {
            OperatorKind::PucciPlus | OperatorKind::PucciMinus => true,
            _ => self
                .linear_members()
                .iter()
                .any(|a| !(a.is_isotropic() || (a.a12_vanishes() && frame.is_axis_aligned()))),
        }
    }

    fn ellipticity(&self) -> (f64, f64) {
        (self.lambda, self.big_lambda)
    }

    fn isotropic_constant(&self) -> Option<f64> {
        OperatorSpec::isotropic_constant(self)
    }
}

/// Outcome of [`check_ellipticity`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub max_violation: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

/// Acceptance threshold for [`check_ellipticity`].
pub const ELLIPTICITY_TOL: f64 = 1e-9;

fn random_symmetric(rng: &mut ChaCha8Rng) -> SymmetricMatrix2 {
    let scale = [0.1, 1.0, 10.0][rng.random_range(0..3)];
    SymmetricMatrix2::new(
        scale * rng.random_range(-1.0..1.0),
        scale * rng.random_range(-1.0..1.0),
        scale * rng.random_range(-1.0..1.0),
    )
}

fn random_psd(rng: &mut ChaCha8Rng) -> SymmetricMatrix2 {
    let b: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    SymmetricMatrix2::new(b[0] * b[0] + b[1] * b[1], b[0] * b[2] + b[1] * b[3], b[2] * b[2] + b[3] * b[3])
}

/// Samples random triples `(M, N ≥ 0, y)` and measures violations of the
/// uniform ellipticity bounds `λ tr N ≤ F(M) − F(M+N) ≤ Λ tr N` and of the
/// Pucci sandwich `−𝒫⁺(M−N) ≤ F(M) − F(N) ≤ −𝒫⁻(M−N)`. Linear members are
/// additionally checked for `λI ≤ a(y) ≤ ΛI` on a 64×64 grid of the torus.
pub fn check_ellipticity(spec: &OperatorSpec, sample_count: usize, seed: u64) -> Result<EllipticityReport> {
    if sample_count < 1 {
        return Err(Error::InvalidInput("sample_count must be at least 1".into()));
    }
    let (lo, hi) = (spec.lambda, spec.big_lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut witness = None;
    let mut record = |v: f64, w: &dyn Fn() -> String| {
        if v > worst {
            worst = v;
            witness = Some(w());
        }
    };

    for a in spec.linear_members() {
        for i in 0..64 {
            for j in 0..64 {
                let y = [i as f64 / 64.0, j as f64 / 64.0];
                let e = a.eval(y).eigenvalues();
                let v = (lo - e[1]).max(e[0] - hi).max(0.0);
                record(v, &|| format!("coefficient eigenvalues {e:?} at y = {y:?} outside [{lo}, {hi}]"));
            }
        }
    }

    for _ in 0..sample_count {
        let m = random_symmetric(&mut rng);
        let n = random_psd(&mut rng);
        let p = random_symmetric(&mut rng);
        let y = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let scale = 1.0 + m.norm() + n.norm() + p.norm();

        let gap = spec.eval(&m, y) - spec.eval(&m.plus(&n), y);
        let tr = n.trace();
        let v = ((lo * tr - gap).max(gap - hi * tr)).max(0.0) / scale;
        record(v, &|| format!("(F3) with M={m:?}, N={n:?}, y={y:?}: gap {gap:.3e}, tr N {tr:.3e}"));

        let diff = spec.eval(&m, y) - spec.eval(&p, y);
        let d = m.minus(&p);
        let lower = -pucci_plus(&d, lo, hi);
        let upper = -pucci_minus(&d, lo, hi);
        let v = ((lower - diff).max(diff - upper)).max(0.0) / scale;
        record(v, &|| format!("Pucci sandwich with M={m:?}, N={p:?}, y={y:?}"));
    }

    let report = EllipticityReport { max_violation: worst, samples: sample_count, witness };
    if report.max_violation > ELLIPTICITY_TOL {
        return Err(Error::SpecRejected(format!(
            "ellipticity violation {:.3e}: {}",
            report.max_violation,
            report.witness.clone().unwrap_or_default()
        )));
    }
    Ok(report)
}

/// Periodic Neumann data `g(y)` with its sampled range and Hölder bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannData {
    pub g: PeriodicExpr,
    pub range_low: f64,
    pub range_high: f64,
    pub holder_beta: f64,
    pub holder_constant: f64,
}

const DATA_SAMPLES: usize = 256;

impl NeumannData {
    /// Builds data from an expression, sampling its range and its Lipschitz
    /// constant (so `β = 1`) on a dense grid. Rejects data leaving `[1, 2]`.
    pub fn new(g: Expr) -> Result<Self> {
        let p = PeriodicExpr::new(g)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut lip: f64 = 0.0;
        for i in 0..DATA_SAMPLES {
            for j in 0..DATA_SAMPLES {
                let y = [i as f64 / DATA_SAMPLES as f64, j as f64 / DATA_SAMPLES as f64];
                let v = p.eval(y);
                lo = lo.min(v);
                hi = hi.max(v);
                let jet = p.source().eval_jet(y);
                lip = lip.max(jet.g[0].hypot(jet.g[1]));
            }
        }
        if lo < 1.0 - 1e-12 || hi > 2.0 + 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "Neumann data must take values in [1, 2]; sampled range [{lo:.6}, {hi:.6}]"
            )));
        }
        Ok(NeumannData {
            g: p,
            range_low: lo,
            range_high: hi,
            holder_beta: 1.0,
            holder_constant: lip * (1.0 + 1e-3),
        })
    }

    pub fn constant(v: f64) -> Result<Self> {
        Self::new(Expr::c(v))
    }

    /// `1.5 + 0.25(sin 2πy₁ + cos 2πy₂)`.
    pub fn standard_trig() -> Self {
        Self::new(Expr::add(vec![
            Expr::c(1.5),
            Expr::sin_mode(0.25, [1, 0]),
            Expr::cos_mode(0.25, [0, 1]),
        ]))
        .expect("valid data")
    }

    pub fn eval(&self, y: [f64; 2]) -> f64 {
        self.g.eval(y)
    }

    pub fn min(&self) -> f64 {
        self.range_low
    }

    pub fn max(&self) -> f64 {
        self.range_high
    }
}

/// `g(y)`, exactly ℤ²-periodic.
pub fn sample_g(g: &NeumannData, y: [f64; 2]) -> f64 {
    g.eval(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pucci_formula() {
        let spec = OperatorSpec::pucci_plus(1.0, 2.0).unwrap();
        assert_eq!(spec.eval(&SymmetricMatrix2::diag(1.0, -1.0), [0.0, 0.0]), -1.0);
    }

    #[test]
    fn eigen_reconstruction() {
        let m = SymmetricMatrix2::new(0.3, -1.7, 2.2);
        let (e, th) = m.eigen();
        assert!(e[0] >= e[1]);
        let r = SymmetricMatrix2::from_eigen(e, th);
        assert!(r.minus(&m).norm() < 1e-12);
    }

    #[test]
    fn declared_lambda_too_large_is_rejected() {
        let a = Coefficients::from_exprs(
            Expr::add(vec![Expr::c(2.0), Expr::sin_mode(0.5, [1, 0])]),
            Expr::c(0.0),
            Expr::add(vec![Expr::c(2.0), Expr::sin_mode(0.5, [1, 0])]),
        )
        .unwrap();
        let ok = OperatorSpec::linear(a.clone(), 1.5, 2.5).unwrap();
        assert!(check_ellipticity(&ok, 2000, 1).unwrap().max_violation <= 1e-10);
        let bad = OperatorSpec::linear(a, 3.0, 3.5).unwrap();
        assert!(matches!(check_ellipticity(&bad, 100, 1), Err(Error::SpecRejected(_))));
    }

    #[test]
    fn directional_pucci_matches_axis_quadratic() {
        let spec = OperatorSpec::pucci_plus(1.0, 2.0).unwrap();
        // u = ½(x² − y²): s_τ = 1, s_ν = −1, diagonals 0.
        let (v, w, _) = spec.apply(&[1.0, -1.0, 0.0, 0.0], &[]);
        assert_eq!(v, -1.0);
        assert_eq!(w, [-2.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn sample_g_examples() {
        let g = NeumannData::new(Expr::add(vec![Expr::c(1.5), Expr::sin_mode(0.5, [1, 0])])).unwrap();
        assert!((sample_g(&g, [0.25, 0.0]) - 2.0).abs() < 1e-15);
        let t = NeumannData::standard_trig();
        assert!((sample_g(&t, [0.0, 0.0]) - sample_g(&t, [3.0, -5.0])).abs() < 1e-13);
    }
}
