//! Rational and irrational unit directions in ℝ², lattice translates close to
//! a hyperplane, and equidistribution diagnostics on the unit torus.
//!
//! Irrationality of a floating-point direction cannot be decided, so
//! [`classify_direction`] certifies only that no fraction with denominator at
//! most `Q` reproduces the component ratio. The certificate carries the
//! partial quotients of the exact continued-fraction expansion of the stored
//! ratio as its witness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default denominator bound for rationality certificates.
pub const DEFAULT_DENOMINATOR_BOUND: u64 = 1_000_000;

/// Largest search radius for which the exhaustive lattice scan is run.
pub const EXHAUSTIVE_RADIUS_LIMIT: f64 = 1e4;

/// Two rational approximations closer than this many ulps of the ratio are
/// treated as exact.
const RATIO_ULPS: f64 = 8.0;

/// A unit vector in ℝ² with its polar angle cached.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub components: [f64; 2],
    pub angle: f64,
}

impl Direction {
    pub fn new(v: [f64; 2]) -> Result<Self> {
        let n = v[0].hypot(v[1]);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidInput(format!("cannot normalize vector {v:?}")));
        }
        let c = [v[0] / n, v[1] / n];
        Ok(Direction { components: c, angle: angle_of(c) })
    }

    pub fn from_angle(theta: f64) -> Self {
        let t = theta.rem_euclid(std::f64::consts::TAU);
        let (s, c) = t.sin_cos();
        Direction { components: [c, s], angle: t }
    }

    /// The normalized golden direction (1, φ)/|(1, φ)|.
    pub fn golden() -> Self {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        Direction::new([1.0, phi]).expect("nonzero")
    }

    pub fn e2() -> Self {
        Direction { components: [0.0, 1.0], angle: std::f64::consts::FRAC_PI_2 }
    }

    /// Tangent vector τ = (ν₂, −ν₁); the frame (τ, ν) is a proper rotation.
    pub fn tangent(&self) -> [f64; 2] {
        [self.components[1], -self.components[0]]
    }

    pub fn dot(&self, x: [f64; 2]) -> f64 {
        self.components[0] * x[0] + self.components[1] * x[1]
    }

    /// Euclidean distance between the unit vectors.
    pub fn distance(&self, other: &Direction) -> f64 {
        (self.components[0] - other.components[0])
            .hypot(self.components[1] - other.components[1])
    }
}

fn angle_of(c: [f64; 2]) -> f64 {
    let a = c[1].atan2(c[0]);
    if a < 0.0 {
        a + std::f64::consts::TAU
    } else {
        a
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    Rational,
    IrrationalUpTo,
}

/// Outcome of [`classify_direction`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalityCertificate {
    pub kind: CertificateKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice_vector: Option<[i64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominator_bound: Option<u64>,
    /// Leading partial quotients of the continued fraction of the reduced
    /// component ratio `min(|v₁|,|v₂|)/max(|v₁|,|v₂|)`.
    pub partial_quotients: Vec<u64>,
}

impl RationalityCertificate {
    pub fn is_rational(&self) -> bool {
        self.kind == CertificateKind::Rational
    }
}

/// Continued fraction of a float `t ∈ [0, 1]`, computed exactly from its
/// binary representation. Returns the partial quotients `[a₀; a₁, …]` and the
/// convergents `(p, q)`, stopping once `q` exceeds `q_max`.
fn exact_continued_fraction(t: f64, q_max: u64) -> (Vec<u64>, Vec<(u128, u128)>) {
    debug_assert!((0.0..=1.0).contains(&t));
    if t == 0.0 {
        return (vec![0], vec![(0, 1)]);
    }
    let bits = t.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mant, mut e2) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    while mant & 1 == 0 && e2 < 0 {
        mant >>= 1;
        e2 += 1;
    }
    if e2 >= 0 {
        // t = 1 exactly.
        return (vec![1], vec![(1, 1)]);
    }
    let shift = (-e2) as u32;
    if shift > 120 {
        // 1/t exceeds 2^67 ≫ q_max: only the zeroth convergent matters.
        return (vec![0, u64::MAX], vec![(0, 1)]);
    }
    let (mut num, mut den) = (mant as u128, 1u128 << shift);
    let mut quotients = Vec::new();
    let mut convergents = Vec::new();
    let (mut p_prev, mut q_prev, mut p, mut q) = (1u128, 0u128, 0u128, 1u128);
    let mut first = true;
    while den != 0 {
        let a = num / den;
        let r = num % den;
        if first {
            p = a;
            q = 1;
            p_prev = 1;
            q_prev = 0;
            first = false;
        } else {
            let np = a.saturating_mul(p).saturating_add(p_prev);
            let nq = a.saturating_mul(q).saturating_add(q_prev);
            p_prev = p;
            q_prev = q;
            p = np;
            q = nq;
        }
        quotients.push(a.min(u64::MAX as u128) as u64);
        if q > q_max as u128 {
            break;
        }
        convergents.push((p, q));
        num = den;
        den = r;
    }
    (quotients, convergents)
}

/// Classifies `v` as rational (parallel to an integer vector with
/// denominator at most `q_bound`) or irrational up to that bound.
pub fn classify_direction(v: [f64; 2], q_bound: u64) -> Result<RationalityCertificate> {
    if q_bound < 1 {
        return Err(Error::InvalidInput("denominator bound must be at least 1".into()));
    }
    let (a, b) = (v[0].abs(), v[1].abs());
    if !(a > 0.0 || b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!("zero or non-finite vector {v:?}")));
    }
    let sx = if v[0] < 0.0 { -1 } else { 1 };
    let sy = if v[1] < 0.0 { -1 } else { 1 };
    let swap = b > a;
    let t = if swap { a / b } else { b / a };
    let (quotients, convergents) = exact_continued_fraction(t, q_bound);
    let tol = RATIO_ULPS * f64::EPSILON * t.max(f64::MIN_POSITIVE);
    let hit = convergents
        .iter()
        .find(|&&(p, q)| ((p as f64) / (q as f64) - t).abs() <= tol);
    match hit {
        Some(&(p, q)) => {
            let (p, q) = (p as i64, q as i64);
            let lattice = if swap { [sx * p, sy * q] } else { [sx * q, sy * p] };
            let period = (lattice[0] as f64).hypot(lattice[1] as f64);
            Ok(RationalityCertificate {
                kind: CertificateKind::Rational,
                lattice_vector: Some(lattice),
                period: Some(period),
                denominator_bound: None,
                partial_quotients: quotients,
            })
        }
        None => Ok(RationalityCertificate {
            kind: CertificateKind::IrrationalUpTo,
            lattice_vector: None,
            period: None,
            denominator_bound: Some(q_bound),
            partial_quotients: quotients,
        }),
    }
}

/// Parameters of the lattice search radius `R = M·ε^(−exponent)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSearch {
    pub radius_constant: f64,
    pub radius_exponent: f64,
    pub denominator_bound: u64,
}

impl Default for LatticeSearch {
    fn default() -> Self {
        LatticeSearch {
            radius_constant: 1.0,
            radius_exponent: 0.9,
            denominator_bound: DEFAULT_DENOMINATOR_BOUND,
        }
    }
}

/// A lattice point `y = x₀ + offset` close to the hyperplane `H(x₀)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeTranslate {
    pub y: [f64; 2],
    pub offset: [i64; 2],
    pub distance_to_hyperplane: f64,
    pub search_radius: f64,
    /// Which search produced the answer: "rational", "continued-fraction" or
    /// "exhaustive".
    pub method: String,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    z: [i64; 2],
    dist_h: f64,
    dist_x: f64,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    const TIE: f64 = 1e-12;
    if a.dist_h < b.dist_h - TIE {
        return true;
    }
    if a.dist_h > b.dist_h + TIE {
        return false;
    }
    if a.dist_x < b.dist_x - TIE {
        return true;
    }
    if a.dist_x > b.dist_x + TIE {
        return false;
    }
    (a.z[0], a.z[1]) > (b.z[0], b.z[1])
}

fn candidate(nu: &Direction, d: [f64; 2], z: [i64; 2]) -> Candidate {
    let zf = [z[0] as f64, z[1] as f64];
    Candidate {
        z,
        dist_h: nu.dot(zf).abs(),
        dist_x: (d[0] - zf[0]).hypot(d[1] - zf[1]),
    }
}

/// Finds a nonzero integer offset `z` with `|x − (x₀+z)| ≤ R` minimizing the
/// distance of `x₀+z` to the hyperplane through `x₀` with normal `ν`.
pub fn nearest_lattice_translate(
    nu: &Direction,
    x0: [f64; 2],
    x: [f64; 2],
    eps: f64,
    search: &LatticeSearch,
) -> Result<LatticeTranslate> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("eps must lie in (0,1), got {eps}")));
    }
    let d = [x[0] - x0[0], x[1] - x0[1]];
    if nu.dot(d).abs() > 1e-10 {
        return Err(Error::InvalidInput("x does not lie on the hyperplane H(x0)".into()));
    }
    let radius = search.radius_constant * eps.powf(-search.radius_exponent);
    let cert = classify_direction(nu.components, search.denominator_bound)?;

    if let Some(k) = cert.lattice_vector {
        let w = [k[1], -k[0]];
        let wf = [w[0] as f64, w[1] as f64];
        let ww = wf[0] * wf[0] + wf[1] * wf[1];
        let m0 = ((d[0] * wf[0] + d[1] * wf[1]) / ww).round() as i64;
        let mut best: Option<Candidate> = None;
        for m in [m0 - 1, m0, m0 + 1] {
            if m == 0 {
                continue;
            }
            let c = candidate(nu, d, [m * w[0], m * w[1]]);
            let c = Candidate { dist_h: 0.0, ..c };
            if best.map_or(true, |b| better(&c, &b)) {
                best = Some(c);
            }
        }
        let b = best.expect("at least two nonzero multiples");
        return Ok(finish(x0, b, radius.max(ww.sqrt()), "rational"));
    }

    let mut best: Option<Candidate> = None;
    let consider = |z: [i64; 2], best: &mut Option<Candidate>| {
        if z == [0, 0] {
            return;
        }
        let c = candidate(nu, d, z);
        if c.dist_x <= radius && best.map_or(true, |b| better(&c, &b)) {
            *best = Some(c);
        }
    };

    // Continued-fraction candidates: best approximation vectors v with
    // v·ν small, shifted to the lattice point nearest x.
    let base = [d[0].round() as i64, d[1].round() as i64];
    for v in best_approximation_vectors(nu, radius) {
        consider(v, &mut best);
        consider([-v[0], -v[1]], &mut best);
        for c in -2i64..=2 {
            consider([base[0] + c * v[0], base[1] + c * v[1]], &mut best);
        }
    }
    // Ostrowski-style greedy: repeatedly subtract the largest approximation
    // vector that reduces the hyperplane distance of the base point.
    let mut z = base;
    for v in best_approximation_vectors(nu, radius).iter().rev() {
        for _ in 0..4 {
            let cur = nu.dot([z[0] as f64, z[1] as f64]);
            let step = nu.dot([v[0] as f64, v[1] as f64]);
            let s = if cur * step > 0.0 { -1 } else { 1 };
            let trial = [z[0] + s * v[0], z[1] + s * v[1]];
            let cand = nu.dot([trial[0] as f64, trial[1] as f64]);
            if cand.abs() < cur.abs() {
                z = trial;
                consider(z, &mut best);
            } else {
                break;
            }
        }
    }
    consider(z, &mut best);
    let mut method = "continued-fraction";

    if radius <= EXHAUSTIVE_RADIUS_LIMIT {
        if let Some(c) = exhaustive_scan(nu, d, radius) {
            if best.map_or(true, |b| better(&c, &b)) {
                best = Some(c);
                method = "exhaustive";
            }
        }
    }
    match best {
        Some(b) => Ok(finish(x0, b, radius, method)),
        None => Err(Error::NotFound {
            radius,
            reason: if radius > EXHAUSTIVE_RADIUS_LIMIT {
                "continued-fraction candidates left the window and exhaustive scan is refused above 1e4".into()
            } else {
                "no nonzero lattice point in the window".into()
            },
        }),
    }
}

fn finish(x0: [f64; 2], c: Candidate, radius: f64, method: &str) -> LatticeTranslate {
    LatticeTranslate {
        y: [x0[0] + c.z[0] as f64, x0[1] + c.z[1] as f64],
        offset: c.z,
        distance_to_hyperplane: c.dist_h,
        search_radius: radius,
        method: method.to_string(),
    }
}

/// Integer vectors nearly parallel to the hyperplane (i.e. with `v·ν` small)
/// obtained from convergents of the slope, with `|v| ≤ 2·radius`.
fn best_approximation_vectors(nu: &Direction, radius: f64) -> Vec<[i64; 2]> {
    // Vectors v ⟂ ν satisfy v ∥ τ = (ν₂, −ν₁).
    let tau = nu.tangent();
    let (a, b) = (tau[0].abs(), tau[1].abs());
    let swap = b > a;
    let t = if swap { a / b } else { b / a };
    let (_, conv) = exact_continued_fraction(t, (2.0 * radius).ceil() as u64 + 1);
    let sx = if tau[0] < 0.0 { -1 } else { 1 };
    let sy = if tau[1] < 0.0 { -1 } else { 1 };
    let mut out = Vec::new();
    for (p, q) in conv {
        let (p, q) = (p as i64, q as i64);
        let v = if swap { [sx * p, sy * q] } else { [sx * q, sy * p] };
        if (v[0] as f64).hypot(v[1] as f64) <= 2.0 * radius + 1.0 {
            out.push(v);
        }
    }
    out
}

/// Exact scan over all lattice points in the disk `|z − d| ≤ radius`.
fn exhaustive_scan(nu: &Direction, d: [f64; 2], radius: f64) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    let x_lo = (d[0] - radius).floor() as i64;
    let x_hi = (d[0] + radius).ceil() as i64;
    for z0 in x_lo..=x_hi {
        let dx = z0 as f64 - d[0];
        let rem = radius * radius - dx * dx;
        if rem < 0.0 {
            continue;
        }
        let half = rem.sqrt();
        let lo = (d[1] - half).ceil() as i64;
        let hi = (d[1] + half).floor() as i64;
        if lo > hi {
            continue;
        }
        // Minimizer of |z0 ν₁ + z1 ν₂| over z1 ∈ [lo, hi].
        let mut picks = vec![lo, hi];
        if nu.components[1] != 0.0 {
            let star = -(z0 as f64) * nu.components[0] / nu.components[1];
            let r = star.floor() as i64;
            for c in [r, r + 1] {
                if (lo..=hi).contains(&c) {
                    picks.push(c);
                }
            }
        }
        for z1 in picks {
            let z = [z0, z1];
            if z == [0, 0] {
                continue;
            }
            let c = candidate(nu, d, z);
            if c.dist_x <= radius && best.map_or(true, |b| better(&c, &b)) {
                best = Some(c);
            }
        }
        if nu.components[1] == 0.0 {
            // Every z1 gives the same hyperplane distance; keep the closest.
            let z1 = d[1].round().clamp(lo as f64, hi as f64) as i64;
            for z1c in [z1 - 1, z1, z1 + 1] {
                if (lo..=hi).contains(&z1c) && [z0, z1c] != [0, 0] {
                    let c = candidate(nu, d, [z0, z1c]);
                    if c.dist_x <= radius && best.map_or(true, |b| better(&c, &b)) {
                        best = Some(c);
                    }
                }
            }
        }
    }
    best
}

/// Empirical modulus `ω̂_ν(ε)`: distance of the best nonzero lattice translate
/// of the origin to the hyperplane through the origin.
pub fn omega_hat(nu: &Direction, eps: f64, search: &LatticeSearch) -> Result<f64> {
    Ok(nearest_lattice_translate(nu, [0.0, 0.0], [0.0, 0.0], eps, search)?.distance_to_hyperplane)
}

/// Result of [`equidistribution_discrepancy`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquidistributionReport {
    pub sample_count: usize,
    /// Maximum Kolmogorov–Smirnov distance over all test vectors.
    pub discrepancy: f64,
    pub window: f64,
    /// KS distance of the fractional parts of each coordinate.
    pub per_coordinate: [f64; 2],
    /// KS distance of `frac(m·x)` for each test vector `m`.
    pub per_vector: Vec<([i64; 2], f64)>,
}

/// Largest sup-norm of the integer test vectors used by the discrepancy.
pub const TEST_VECTOR_RANGE: i64 = 3;

fn ks_uniform(mut vals: Vec<f64>) -> f64 {
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = vals.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &u) in vals.iter().enumerate() {
        d = d.max((i as f64 + 1.0) / n - u).max(u - i as f64 / n);
    }
    d.clamp(0.0, 1.0)
}

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Samples `N` points `x₀ + (W·k/N)·τ` on `H(x₀)` and measures how uniformly
/// their projections `m·x mod 1` fill `[0,1)` for small integer vectors `m`.
/// A direction whose hyperplane closes up on the torus has some `m` with
/// constant projection, giving a discrepancy close to 1.
pub fn equidistribution_discrepancy(
    nu: &Direction,
    x0: [f64; 2],
    window: f64,
    n: usize,
) -> Result<EquidistributionReport> {
    if n < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    if !(window > 0.0) {
        return Err(Error::InvalidInput("window must be positive".into()));
    }
    let tau = nu.tangent();
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|k| {
            let s = window * k as f64 / n as f64;
            [x0[0] + s * tau[0], x0[1] + s * tau[1]]
        })
        .collect();
    let mut per_vector = Vec::new();
    for m0 in 0..=TEST_VECTOR_RANGE {
        for m1 in -TEST_VECTOR_RANGE..=TEST_VECTOR_RANGE {
            if m0 == 0 && m1 <= 0 {
                continue;
            }
            let m = [m0, m1];
            let vals = pts
                .iter()
                .map(|p| frac(m0 as f64 * p[0] + m1 as f64 * p[1]))
                .collect();
            per_vector.push((m, ks_uniform(vals)));
        }
    }
    let get = |m: [i64; 2]| per_vector.iter().find(|(v, _)| *v == m).unwrap().1;
    let per_coordinate = [get([1, 0]), get([0, 1])];
    let discrepancy = per_vector.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    Ok(EquidistributionReport { sample_count: n, discrepancy, window, per_coordinate, per_vector })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_and_diagonal_are_rational() {
        let c = classify_direction([0.0, 1.0], DEFAULT_DENOMINATOR_BOUND).unwrap();
        assert_eq!(c.lattice_vector, Some([0, 1]));
        assert_eq!(c.period, Some(1.0));
        let s = 0.5f64.sqrt();
        let c = classify_direction([s, s], DEFAULT_DENOMINATOR_BOUND).unwrap();
        assert_eq!(c.lattice_vector, Some([1, 1]));
        assert!((c.period.unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pythagorean_direction_is_rational() {
        let c = classify_direction([0.6, 0.8], DEFAULT_DENOMINATOR_BOUND).unwrap();
        assert_eq!(c.lattice_vector, Some([3, 4]));
        let c = classify_direction([-0.6, 0.8], DEFAULT_DENOMINATOR_BOUND).unwrap();
        assert_eq!(c.lattice_vector, Some([-3, 4]));
    }

    #[test]
    fn zero_vector_is_rejected() {
        assert!(classify_direction([0.0, 0.0], 10).is_err());
    }

    #[test]
    fn axis_translate() {
        let t = nearest_lattice_translate(
            &Direction::e2(),
            [0.0, 0.0],
            [3.0, 0.0],
            0.1,
            &LatticeSearch::default(),
        )
        .unwrap();
        assert_eq!(t.offset, [3, 0]);
        assert_eq!(t.distance_to_hyperplane, 0.0);
    }

    #[test]
    fn golden_translate_is_fibonacci() {
        let t = nearest_lattice_translate(
            &Direction::golden(),
            [0.0, 0.0],
            [0.0, 0.0],
            0.05,
            &LatticeSearch::default(),
        )
        .unwrap();
        assert_eq!(t.offset, [8, -5]);
    }
}
