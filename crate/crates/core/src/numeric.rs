//! Complex representations as a numerical oracle.
//!
//! The matrix of an arrow `a: s -> t` has shape `dim_t x dim_s` and acts on
//! column vectors, so the path `a_1 a_2 ... a_n` evaluates to
//! `V_{a_n} ... V_{a_1}`.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::necklace::{canonical_necklace, partial_derivative, Necklace, Path, PathPolynomial, Superpotential};
use crate::quiver::{DimensionVector, Quiver, QuiverSetting};

pub type CMatrix = DMatrix<Complex64>;

/// One complex matrix per arrow, indexed like the quiver's arrows.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    setting: QuiverSetting,
    matrices: Vec<CMatrix>,
}

impl Representation {
    pub fn new(setting: QuiverSetting, matrices: Vec<CMatrix>) -> Result<Self> {
        let arrows = setting.quiver.arrows();
        if matrices.len() != arrows.len() {
            return Err(Error::LengthMismatch {
                expected: arrows.len(),
                found: matrices.len(),
            });
        }
        for (a, m) in arrows.iter().zip(&matrices) {
            let shape = (setting.dim.0[a.target] as usize, setting.dim.0[a.source] as usize);
            if m.shape() != shape {
                return Err(Error::schema(
                    a.id.clone(),
                    format!("expected a {}x{} matrix, found {}x{}", shape.0, shape.1, m.nrows(), m.ncols()),
                ));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::schema(a.id.clone(), "entries must be finite"));
            }
        }
        Ok(Representation { setting, matrices })
    }

    pub fn zero(setting: &QuiverSetting) -> Self {
        let matrices = setting
            .quiver
            .arrows()
            .iter()
            .map(|a| CMatrix::zeros(dim(setting, a.target), dim(setting, a.source)))
            .collect();
        Representation {
            setting: setting.clone(),
            matrices,
        }
    }

    pub fn setting(&self) -> &QuiverSetting {
        &self.setting
    }

    pub fn quiver(&self) -> &Quiver {
        &self.setting.quiver
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, arrow: usize) -> &CMatrix {
        &self.matrices[arrow]
    }

    pub fn matrix_mut(&mut self, arrow: usize) -> &mut CMatrix {
        &mut self.matrices[arrow]
    }

    /// `g . V`: every `V_a` becomes `g_t V_a g_s^{-1}`.
    pub fn transform(&self, g: &[CMatrix]) -> Result<Representation> {
        let k = self.setting.vertex_count();
        if g.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                found: g.len(),
            });
        }
        let inverses = g
            .iter()
            .enumerate()
            .map(|(v, m)| {
                if m.shape() != (dim(&self.setting, v), dim(&self.setting, v)) {
                    return Err(Error::precondition(format!("block {} has the wrong shape", v + 1)));
                }
                m.clone()
                    .try_inverse()
                    .ok_or_else(|| Error::precondition(format!("block {} is singular", v + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        let matrices = self
            .quiver()
            .arrows()
            .iter()
            .zip(&self.matrices)
            .map(|(a, m)| &g[a.target] * m * &inverses[a.source])
            .collect();
        Ok(Representation {
            setting: self.setting.clone(),
            matrices,
        })
    }

    /// Sum of squared Frobenius norms of the arrow matrices.
    pub fn norm_squared(&self) -> f64 {
        self.matrices.iter().map(|m| m.norm_squared()).sum()
    }
}

fn dim(s: &QuiverSetting, v: usize) -> usize {
    s.dim.0[v] as usize
}

/// A representation with i.i.d. standard complex Gaussian entries times
/// `scale`, deterministic in `seed`.
pub fn random_representation(s: &QuiverSetting, seed: u64, scale: f64) -> Representation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Representation::zero(s);
    for m in &mut out.matrices {
        for z in m.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z = Complex64::new(re, im) * (scale / std::f64::consts::SQRT_2);
        }
    }
    out
}

/// A random invertible block matrix per vertex.
pub fn random_group_element(s: &QuiverSetting, seed: u64) -> Vec<CMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..s.vertex_count())
        .map(|v| {
            let n = dim(s, v);
            loop {
                let m = CMatrix::from_fn(n, n, |_, _| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                });
                let smallest = if n == 0 {
                    1.0
                } else {
                    m.clone().singular_values().min()
                };
                if smallest > 1e-2 {
                    break m;
                }
            }
        })
        .collect()
}

/// A random unitary block per vertex (QR of a Gaussian matrix).
pub fn random_unitary(s: &QuiverSetting, seed: u64) -> Vec<CMatrix> {
    random_group_element(s, seed)
        .into_iter()
        .map(|m| if m.nrows() == 0 { m } else { m.qr().q() })
        .collect()
}

pub fn evaluate_path(v: &Representation, p: &Path) -> CMatrix {
    let mut acc = CMatrix::identity(dim(&v.setting, p.source()), dim(&v.setting, p.source()));
    for &a in p.arrows() {
        acc = &v.matrices[a] * acc;
    }
    acc
}

pub fn trace_invariant(v: &Representation, n: &Necklace) -> Complex64 {
    evaluate_path(v, &n.to_path(v.quiver())).trace()
}

/// `sum_n c_n tr(V(n))`.
pub fn superpotential_value(v: &Representation, w: &Superpotential) -> Complex64 {
    w.terms()
        .iter()
        .map(|(n, c)| trace_invariant(v, n) * rational_to_f64(c))
        .sum()
}

fn rational_to_f64(c: &BigRational) -> f64 {
    c.to_f64().unwrap_or(f64::NAN)
}

/// The evaluated polynomial, or `None` for the zero polynomial.
pub fn evaluate_polynomial(v: &Representation, p: &PathPolynomial) -> Result<Option<CMatrix>> {
    if p.is_zero() {
        return Ok(None);
    }
    let (s, t) = p
        .endpoints()
        .ok_or_else(|| Error::precondition("relation mixes paths with different endpoints"))?;
    let mut acc = CMatrix::zeros(dim(&v.setting, t), dim(&v.setting, s));
    for (path, c) in p.terms() {
        acc += evaluate_path(v, path) * Complex64::from(rational_to_f64(c));
    }
    Ok(Some(acc))
}

/// Largest Frobenius norm of an evaluated relation.
pub fn check_relations(v: &Representation, rels: &[PathPolynomial]) -> Result<f64> {
    let mut worst = 0.0f64;
    for r in rels {
        if let Some(m) = evaluate_polynomial(v, r)? {
            worst = worst.max(m.norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ExactComplex {
    re: BigRational,
    im: BigRational,
}

impl ExactComplex {
    fn zero() -> Self {
        ExactComplex {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    fn from_f64(z: Complex64) -> Self {
        let convert = |x: f64| BigRational::from_float(x).expect("finite entries");
        ExactComplex {
            re: convert(z.re),
            im: convert(z.im),
        }
    }

    fn mul(&self, other: &ExactComplex) -> ExactComplex {
        ExactComplex {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    fn add_assign(&mut self, other: &ExactComplex) {
        self.re += &other.re;
        self.im += &other.im;
    }

    fn norm_squared(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }
}

type ExactMatrix = Vec<Vec<ExactComplex>>;

fn exact_identity(n: usize) -> ExactMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut z = ExactComplex::zero();
                    if i == j {
                        z.re = BigRational::one();
                    }
                    z
                })
                .collect()
        })
        .collect()
}

fn exact_mul(a: &ExactMatrix, b: &ExactMatrix, inner: usize) -> ExactMatrix {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    let mut acc = ExactComplex::zero();
                    for (k, x) in row.iter().enumerate().take(inner) {
                        acc.add_assign(&x.mul(&b[k][j]));
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Like [`check_relations`], but the floating-point entries are read as the
/// exact dyadic rationals they are and the relations are evaluated without
/// rounding. Returns the largest squared Frobenius norm.
pub fn check_relations_exact(v: &Representation, rels: &[PathPolynomial]) -> Result<BigRational> {
    let exact: Vec<ExactMatrix> = v
        .matrices
        .iter()
        .map(|m| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| ExactComplex::from_f64(m[(i, j)])).collect())
                .collect()
        })
        .collect();
    let mut worst = BigRational::zero();
    for r in rels {
        if r.is_zero() {
            continue;
        }
        let (s, t) = r
            .endpoints()
            .ok_or_else(|| Error::precondition("relation mixes paths with different endpoints"))?;
        let (rows, cols) = (dim(&v.setting, t), dim(&v.setting, s));
        let mut acc: ExactMatrix = vec![vec![ExactComplex::zero(); cols]; rows];
        for (path, c) in r.terms() {
            let mut m = exact_identity(cols);
            let mut inner = cols;
            for &a in path.arrows() {
                m = exact_mul(&exact[a], &m, inner);
                inner = dim(&v.setting, v.quiver().arrow(a).target);
            }
            for (acc_row, m_row) in acc.iter_mut().zip(&m) {
                for (x, y) in acc_row.iter_mut().zip(m_row) {
                    let scaled = ExactComplex {
                        re: &y.re * c,
                        im: &y.im * c,
                    };
                    x.add_assign(&scaled);
                }
            }
        }
        let norm: BigRational = acc.iter().flatten().map(ExactComplex::norm_squared).sum();
        if norm > worst {
            worst = norm;
        }
    }
    Ok(worst)
}

/// Bounds on cycle enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleLimits {
    pub max_len: usize,
    pub max_walks: usize,
}

impl Default for CycleLimits {
    fn default() -> Self {
        CycleLimits {
            max_len: 12,
            max_walks: 2_000_000,
        }
    }
}

/// All necklaces of length at most `max_len`, ordered by length and then
/// lexicographically.
pub fn cycle_basis(q: &Quiver, max_len: usize, limits: &CycleLimits) -> Result<Vec<Necklace>> {
    if max_len > limits.max_len {
        return Err(Error::LimitExceeded(format!(
            "cycle length {max_len} exceeds the limit {}",
            limits.max_len
        )));
    }
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); q.vertex_count()];
    for (i, a) in q.arrows().iter().enumerate() {
        outgoing[a.source].push(i);
    }
    let mut found = BTreeSet::new();
    let mut walks = 0usize;
    for start in 0..q.vertex_count() {
        // walks from `start` whose first arrow is the smallest: every necklace
        // has such a rotation
        let mut stack: Vec<(usize, Vec<usize>)> = outgoing[start].iter().map(|&a| (a, vec![a])).collect();
        while let Some((first, word)) = stack.pop() {
            walks += 1;
            if walks > limits.max_walks {
                return Err(Error::LimitExceeded(format!(
                    "more than {} walks of length at most {max_len}",
                    limits.max_walks
                )));
            }
            let end = q.arrow(*word.last().expect("nonempty")).target;
            if end == start {
                let path = Path::new(q, word.clone()).expect("walks compose");
                found.insert(canonical_necklace(&path).expect("closed"));
            }
            if word.len() < max_len {
                for &a in outgoing[end].iter().filter(|&&a| a >= first) {
                    let mut next = word.clone();
                    next.push(a);
                    stack.push((first, next));
                }
            }
        }
    }
    let mut out: Vec<Necklace> = found.into_iter().collect();
    out.sort_by(|a, b| (a.len(), a.arrows()).cmp(&(b.len(), b.arrows())));
    Ok(out)
}

/// Rank estimate of the quotient map with its audit trail.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientDimensionReport {
    pub dimension: usize,
    pub invariants: usize,
    pub coordinates: usize,
    /// Singular values of the Jacobian at the sample attaining the rank.
    pub singular_values: Vec<f64>,
    pub ranks: Vec<usize>,
}

/// Relative singular-value threshold for numerical rank.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// Number of singular values above `RANK_THRESHOLD` times the largest.
pub fn numerical_rank(m: &CMatrix) -> (usize, Vec<f64>) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0, Vec::new());
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let top = sv.first().copied().unwrap_or(0.0);
    let rank = if top == 0.0 {
        0
    } else {
        sv.iter().filter(|&&x| x > RANK_THRESHOLD * top).count()
    };
    (rank, sv)
}

/// Jacobian of the trace functions of `cycles` at `v`, one row per cycle.
/// The gradient of `tr V(c)` in the entries of `V_a` is the transpose of
/// `V(dc/da)`.
pub fn trace_jacobian(v: &Representation, cycles: &[Necklace]) -> CMatrix {
    let q = v.quiver();
    let offsets: Vec<usize> = v
        .matrices
        .iter()
        .scan(0, |acc, m| {
            let start = *acc;
            *acc += m.len();
            Some(start)
        })
        .collect();
    let coordinates: usize = v.matrices.iter().map(|m| m.len()).sum();
    let mut jac = CMatrix::zeros(cycles.len(), coordinates);
    for (row, n) in cycles.iter().enumerate() {
        let mut w = Superpotential::zero();
        w.add_term(n.clone(), BigRational::one());
        for a in n.arrows().iter().copied().collect::<BTreeSet<_>>() {
            let d = partial_derivative(q, &w, a);
            let g = evaluate_polynomial(v, &d)
                .expect("derivatives of a necklace share endpoints")
                .expect("a occurs in n");
            let m = &v.matrices[a];
            // column-major layout of V_a: entry (i, j) sits at i + j * rows
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    jac[(row, offsets[a] + i + j * m.nrows())] = g[(j, i)];
                }
            }
        }
    }
    jac
}

/// Maximum over `samples` random points of the rank of the trace Jacobian
/// of all necklaces of length at most `max_len`. A lower bound for the
/// dimension of the quotient that is exact once `max_len` is large enough.
pub fn numeric_quotient_dimension(
    s: &QuiverSetting,
    max_len: usize,
    samples: usize,
    seed: u64,
    limits: &CycleLimits,
) -> Result<QuotientDimensionReport> {
    let cycles = cycle_basis(&s.quiver, max_len, limits)?;
    let mut best: Option<(usize, Vec<f64>)> = None;
    let mut ranks = Vec::with_capacity(samples);
    let mut coordinates = 0;
    for i in 0..samples {
        let v = random_representation(s, seed.wrapping_add(i as u64), 1.0);
        let jac = trace_jacobian(&v, &cycles);
        coordinates = jac.ncols();
        let (rank, sv) = numerical_rank(&jac);
        ranks.push(rank);
        if best.as_ref().is_none_or(|(r, _)| rank > *r) {
            best = Some((rank, sv));
        }
    }
    let (dimension, singular_values) = best.unwrap_or_default();
    Ok(QuotientDimensionReport {
        dimension,
        invariants: cycles.len(),
        coordinates,
        singular_values,
        ranks,
    })
}

/// The real moment map, one block per vertex:
/// `(i/2) (sum_{t(a)=v} V_a V_a^* - sum_{s(a)=v} V_a^* V_a)`.
pub fn moment_map(v: &Representation) -> Vec<CMatrix> {
    hermitian_flow(v)
        .into_iter()
        .map(|h| h * Complex64::new(0.0, 0.5))
        .collect()
}

/// `sum_{t(a)=v} V_a V_a^* - sum_{s(a)=v} V_a^* V_a` per vertex.
fn hermitian_flow(v: &Representation) -> Vec<CMatrix> {
    let s = &v.setting;
    let mut blocks: Vec<CMatrix> = (0..s.vertex_count())
        .map(|w| CMatrix::zeros(dim(s, w), dim(s, w)))
        .collect();
    for (a, m) in s.quiver.arrows().iter().zip(&v.matrices) {
        blocks[a.target] += m * m.adjoint();
        blocks[a.source] -= m.adjoint() * m;
    }
    blocks
}

pub fn moment_map_norm(v: &Representation) -> f64 {
    moment_map(v).iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
}

fn hermitian_exp(h: &CMatrix, t: f64) -> CMatrix {
    if h.nrows() == 0 {
        return h.clone();
    }
    let eigen = h.clone().symmetric_eigen();
    let d = CMatrix::from_diagonal(&eigen.eigenvalues.map(|x| Complex64::from((t * x).exp())));
    &eigen.eigenvectors * d * eigen.eigenvectors.adjoint()
}

#[derive(Debug, Clone)]
pub struct BalanceReport {
    pub representation: Representation,
    pub moment_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Moves `v` along its complexified orbit towards the zero level of the
/// moment map by gradient descent of the norm: each step applies
/// `g_w = exp(-eps H_w)` with `H` the Hermitian flow, and `eps` is chosen by
/// backtracking.
pub fn balance(v: &Representation, tol: f64, max_iter: usize) -> BalanceReport {
    let mut current = v.clone();
    let mut eps = 0.1;
    let mut norm = current.norm_squared();
    for iter in 0..max_iter {
        let h = hermitian_flow(&current);
        let slope: f64 = h.iter().map(|b| b.norm_squared()).sum();
        let moment = 0.5 * slope.sqrt();
        if moment <= tol {
            return BalanceReport {
                representation: current,
                moment_norm: moment,
                iterations: iter,
                converged: true,
            };
        }
        loop {
            let g: Vec<CMatrix> = h.iter().map(|b| hermitian_exp(b, -eps)).collect();
            let candidate = current.transform(&g).expect("exponentials are invertible");
            let candidate_norm = candidate.norm_squared();
            // near the zero level the decrease of |V|^2 drops below its
            // round-off, so a smaller moment map also counts as progress
            let candidate_slope: f64 = hermitian_flow(&candidate).iter().map(|b| b.norm_squared()).sum();
            if candidate_norm <= norm - eps * slope * 0.5 || candidate_slope < slope {
                current = candidate;
                norm = candidate_norm;
                eps *= 1.5;
                break;
            }
            eps *= 0.5;
            if eps < 1e-14 {
                let moment = moment_map_norm(&current);
                return BalanceReport {
                    representation: current,
                    moment_norm: moment,
                    iterations: iter,
                    converged: moment <= tol,
                };
            }
        }
    }
    let moment = moment_map_norm(&current);
    BalanceReport {
        representation: current,
        moment_norm: moment,
        iterations: max_iter,
        converged: moment <= tol,
    }
}

/// A rational weight per vertex with `mu . alpha = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilityParameter {
    mu: Vec<BigRational>,
}

impl StabilityParameter {
    pub fn new(mu: Vec<BigRational>, s: &QuiverSetting) -> Result<Self> {
        if mu.len() != s.vertex_count() {
            return Err(Error::LengthMismatch {
                expected: s.vertex_count(),
                found: mu.len(),
            });
        }
        let p = StabilityParameter { mu };
        let pairing = p.pair(&s.dim);
        if !pairing.is_zero() {
            return Err(Error::precondition(format!("mu . alpha = {pairing}, expected 0")));
        }
        Ok(p)
    }

    pub fn from_integers(mu: &[i64], s: &QuiverSetting) -> Result<Self> {
        StabilityParameter::new(
            mu.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect(),
            s,
        )
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.mu
    }

    pub fn pair(&self, beta: &DimensionVector) -> BigRational {
        self.mu
            .iter()
            .zip(&beta.0)
            .map(|(m, &b)| m * BigRational::from_integer(b.into()))
            .sum()
    }
}

/// Whether a verdict is exact or only a one-sided heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityMode {
    Exact,
    /// Searches subrepresentations generated by random vectors; a violation
    /// found is genuine, a clean result is not a proof.
    Heuristic { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilityVerdict {
    pub holds: bool,
    pub exact: bool,
    /// A proper subrepresentation dimension violating the condition.
    pub witness: Option<DimensionVector>,
    pub witness_pairing: Option<BigRational>,
    /// Proper nonzero subrepresentation dimensions that were examined.
    pub examined: Vec<DimensionVector>,
}

fn nonzero_arrows(v: &Representation) -> Vec<(usize, usize)> {
    v.quiver()
        .arrows()
        .iter()
        .zip(&v.matrices)
        .filter(|(_, m)| m.iter().any(|z| !z.is_zero()))
        .map(|(a, _)| (a.source, a.target))
        .collect()
}

fn mask_to_vector(mask: u64, k: usize) -> DimensionVector {
    DimensionVector((0..k).map(|v| u32::from(mask >> v & 1 == 1)).collect())
}

/// Supports of the subrepresentations of a thin representation, as vertex
/// bitmasks: unions of forward closures along nonzero arrows.
pub fn thin_subrepresentations(v: &Representation) -> Result<Vec<u64>> {
    let s = &v.setting;
    if !s.is_thin() {
        return Err(Error::precondition(
            "exact stability needs a thin dimension vector; use the heuristic mode",
        ));
    }
    let k = s.vertex_count();
    if k > 63 {
        return Err(Error::LimitExceeded(format!("{k} vertices")));
    }
    let arrows = nonzero_arrows(v);
    let support: Vec<usize> = s.dim.support();
    let closure = |start: usize| -> u64 {
        let mut mask = 1u64 << start;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &(src, tgt) in &arrows {
                if src == u && mask >> tgt & 1 == 0 {
                    mask |= 1 << tgt;
                    stack.push(tgt);
                }
            }
        }
        mask
    };
    let mut closed: BTreeSet<u64> = BTreeSet::from([0]);
    for &u in &support {
        let c = closure(u);
        let unions: Vec<u64> = closed.iter().map(|m| m | c).collect();
        closed.extend(unions);
    }
    Ok(closed.into_iter().collect())
}

/// The same sets by testing every subset of the support.
pub fn thin_subrepresentations_exhaustive(v: &Representation) -> Result<Vec<u64>> {
    let s = &v.setting;
    if !s.is_thin() {
        return Err(Error::precondition("thin dimension vector required"));
    }
    let support: Vec<usize> = s.dim.support();
    if support.len() > 20 {
        return Err(Error::LimitExceeded(format!("{} support vertices", support.len())));
    }
    let arrows = nonzero_arrows(v);
    let mut out = Vec::new();
    for bits in 0u64..(1 << support.len()) {
        let mask: u64 = support
            .iter()
            .enumerate()
            .filter(|(i, _)| bits >> i & 1 == 1)
            .map(|(_, &u)| 1u64 << u)
            .sum();
        if arrows
            .iter()
            .all(|&(src, tgt)| mask >> src & 1 == 0 || mask >> tgt & 1 == 1)
        {
            out.push(mask);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Orthonormal basis (as columns) of the span of `m`'s columns.
fn column_basis(m: &CMatrix) -> CMatrix {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&x| top > 0.0 && x > 1e-9 * top.max(1.0))
        .count();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    CMatrix::from_fn(m.nrows(), rank, |i, j| u[(i, order[j])])
}

/// Dimension vector of the subrepresentation generated by `x` at vertex `start`.
fn generated_subrepresentation(v: &Representation, start: usize, x: CMatrix) -> DimensionVector {
    let s = &v.setting;
    let mut bases: Vec<CMatrix> = (0..s.vertex_count())
        .map(|w| CMatrix::zeros(dim(s, w), 0))
        .collect();
    bases[start] = column_basis(&x);
    loop {
        let mut changed = false;
        for (a, m) in s.quiver.arrows().iter().zip(&v.matrices) {
            let image = m * &bases[a.source];
            if image.ncols() == 0 {
                continue;
            }
            let target = &bases[a.target];
            let stacked = CMatrix::from_fn(target.nrows(), target.ncols() + image.ncols(), |i, j| {
                if j < target.ncols() {
                    target[(i, j)]
                } else {
                    image[(i, j - target.ncols())]
                }
            });
            let basis = column_basis(&stacked);
            if basis.ncols() > target.ncols() {
                bases[a.target] = basis;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    DimensionVector(bases.iter().map(|b| b.ncols() as u32).collect())
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(n, 1, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Unit vectors spanning the kernel of `m`.
fn null_space(m: &CMatrix) -> Vec<CMatrix> {
    let n = m.ncols();
    if n == 0 {
        return Vec::new();
    }
    // pad with zero rows so the thin SVD exposes the whole kernel
    let rows = m.nrows().max(n);
    let padded = CMatrix::from_fn(rows, n, |i, j| {
        if i < m.nrows() {
            m[(i, j)]
        } else {
            Complex64::zero()
        }
    });
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &x)| x <= 1e-9 * top.max(1.0))
        .map(|(i, _)| CMatrix::from_column_slice(n, 1, v_t.row(i).adjoint().as_slice()))
        .collect()
}

/// All outgoing arrow matrices at `u`, stacked vertically.
fn outgoing_stack(v: &Representation, u: usize) -> CMatrix {
    let blocks: Vec<&CMatrix> = v
        .quiver()
        .arrows()
        .iter()
        .zip(&v.matrices)
        .filter(|(a, _)| a.source == u)
        .map(|(_, m)| m)
        .collect();
    let rows: usize = blocks.iter().map(|m| m.nrows()).sum();
    let mut out = CMatrix::zeros(rows, dim(&v.setting, u));
    let mut r = 0;
    for m in blocks {
        out.rows_mut(r, m.nrows()).copy_from(m);
        r += m.nrows();
    }
    out
}

/// Eigenvectors of a random combination of the closed walks at `u`. Any
/// subrepresentation nonzero at `u` contains one of them when the
/// eigenvalues are distinct.
fn cycle_eigenvectors(v: &Representation, u: usize, rng: &mut ChaCha8Rng) -> Vec<CMatrix> {
    const MAX_WALKS: usize = 256;
    let n = dim(&v.setting, u);
    let q = v.quiver();
    let max_len = (2 * q.vertex_count()).min(6);
    let mut combination = CMatrix::zeros(n, n);
    let mut stack: Vec<Vec<usize>> = (0..q.arrows().len())
        .filter(|&a| q.arrow(a).source == u)
        .map(|a| vec![a])
        .collect();
    let mut walks = 0;
    while let Some(word) = stack.pop() {
        let end = q.arrow(*word.last().expect("nonempty")).target;
        if end == u {
            let path = Path::new(q, word.clone()).expect("walks compose");
            let c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            combination += evaluate_path(v, &path) * c;
            walks += 1;
            if walks >= MAX_WALKS {
                break;
            }
        }
        if word.len() < max_len {
            for a in (0..q.arrows().len()).filter(|&a| q.arrow(a).source == end) {
                let mut next = word.clone();
                next.push(a);
                stack.push(next);
            }
        }
    }
    if n == 0 || walks == 0 {
        return Vec::new();
    }
    let (_, t) = combination.clone().schur().unpack();
    let mut out = Vec::new();
    for i in 0..n {
        let shifted = &combination - CMatrix::identity(n, n) * t[(i, i)];
        let mut kernel = null_space(&shifted);
        if kernel.is_empty() {
            // the eigenvalue is only accurate to round-off: take the
            // smallest singular direction instead
            let svd = shifted.svd(false, true);
            let v_t = svd.v_t.expect("requested");
            let (j, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("n > 0");
            kernel.push(CMatrix::from_column_slice(n, 1, v_t.row(j).adjoint().as_slice()));
        }
        out.push(kernel.swap_remove(0));
    }
    out
}

fn stability_check(
    v: &Representation,
    mu: &StabilityParameter,
    mode: StabilityMode,
    strict: bool,
) -> Result<StabilityVerdict> {
    let s = &v.setting;
    if mu.weights().len() != s.vertex_count() {
        return Err(Error::LengthMismatch {
            expected: s.vertex_count(),
            found: mu.weights().len(),
        });
    }
    let k = s.vertex_count();
    let (dims, exact): (BTreeSet<DimensionVector>, bool) = match mode {
        StabilityMode::Exact => (
            thin_subrepresentations(v)?
                .into_iter()
                .map(|m| mask_to_vector(m, k))
                .collect(),
            true,
        ),
        StabilityMode::Heuristic { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut found = BTreeSet::new();
            for u in s.dim.support() {
                let mut generators = Vec::new();
                for _ in 0..samples {
                    generators.push(random_vector(dim(s, u), &mut rng));
                    generators.extend(cycle_eigenvectors(v, u, &mut rng));
                }
                generators.extend(null_space(&outgoing_stack(v, u)));
                for x in generators {
                    found.insert(generated_subrepresentation(v, u, x));
                }
            }
            (found, false)
        }
    };
    let examined: Vec<DimensionVector> = dims
        .into_iter()
        .filter(|b| !b.is_zero() && *b != s.dim)
        .collect();
    let mut witness: Option<(DimensionVector, BigRational)> = None;
    for b in &examined {
        let p = mu.pair(b);
        let bad = if strict { !p.is_positive() } else { p.is_negative() };
        if bad && witness.as_ref().is_none_or(|(_, w)| p < *w) {
            witness = Some((b.clone(), p));
        }
    }
    Ok(StabilityVerdict {
        holds: witness.is_none(),
        exact,
        witness_pairing: witness.as_ref().map(|(_, p)| p.clone()),
        witness: witness.map(|(b, _)| b),
        examined,
    })
}

/// `mu . beta >= 0` for every proper nonzero subrepresentation dimension.
pub fn is_mu_semistable(
    v: &Representation,
    mu: &StabilityParameter,
    mode: StabilityMode,
) -> Result<StabilityVerdict> {
    stability_check(v, mu, mode, false)
}

/// `mu . beta > 0` for every proper nonzero subrepresentation dimension.
pub fn is_mu_stable(
    v: &Representation,
    mu: &StabilityParameter,
    mode: StabilityMode,
) -> Result<StabilityVerdict> {
    stability_check(v, mu, mode, true)
}

/// Parses a representation document: an object mapping every arrow id to
/// its matrix, given as rows of `[re, im]` pairs.
pub fn parse_representation(s: &QuiverSetting, text: &str) -> Result<Representation> {
    let doc: BTreeMap<String, Vec<Vec<[f64; 2]>>> = serde_json::from_str(text)?;
    let q = &s.quiver;
    if let Some(unknown) = doc.keys().find(|id| q.arrow_index(id).is_none()) {
        return Err(Error::schema(unknown.clone(), "no arrow with this id"));
    }
    let mut matrices = Vec::with_capacity(q.arrows().len());
    for a in q.arrows() {
        let rows = doc
            .get(&a.id)
            .ok_or_else(|| Error::schema(a.id.clone(), "missing matrix"))?;
        let (r, c) = (dim(s, a.target), dim(s, a.source));
        let shape_ok = rows.len() == r && rows.iter().all(|row| row.len() == c);
        // a matrix with zero rows cannot record its column count
        if !shape_ok && !(r == 0 && rows.is_empty()) {
            return Err(Error::schema(
                a.id.clone(),
                format!("expected a {r}x{c} matrix of [re, im] pairs"),
            ));
        }
        matrices.push(CMatrix::from_fn(r, c, |i, j| {
            Complex64::new(rows[i][j][0], rows[i][j][1])
        }));
    }
    Representation::new(s.clone(), matrices)
}

pub fn matrix_to_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn representation_to_json(v: &Representation) -> Value {
    Value::Object(
        v.quiver()
            .arrows()
            .iter()
            .zip(&v.matrices)
            .map(|(a, m)| (a.id.clone(), matrix_to_json(m)))
            .collect(),
    )
}
