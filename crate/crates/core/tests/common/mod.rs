//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DVector;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use quiverkit_core::classify::RepresentationType;
use quiverkit_core::necklace::{Necklace, Superpotential};
use quiverkit_core::numeric::{cycle_basis, random_representation, CMatrix, CycleLimits, Representation, StabilityParameter};
use quiverkit_core::{DimensionVector, Quiver, QuiverSetting};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random quiver; about half the off-diagonal entries and a third of the
/// loop counts are nonzero.
pub fn random_quiver(rng: &mut ChaCha8Rng, max_vertices: usize, max_mult: u32) -> Quiver {
    let k = rng.random_range(1..=max_vertices);
    let adjacency: Vec<Vec<u32>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    let p = if i == j { 0.3 } else { 0.5 };
                    if rng.random_bool(p) {
                        rng.random_range(1..=max_mult)
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    Quiver::from_adjacency(&adjacency).unwrap()
}

pub fn random_dimension(rng: &mut ChaCha8Rng, k: usize, max_dim: u32) -> DimensionVector {
    DimensionVector((0..k).map(|_| rng.random_range(1..=max_dim)).collect())
}

pub fn random_setting(rng: &mut ChaCha8Rng, max_vertices: usize, max_mult: u32, max_dim: u32) -> QuiverSetting {
    let q = random_quiver(rng, max_vertices, max_mult);
    let dim = random_dimension(rng, q.vertex_count(), max_dim);
    QuiverSetting::new(q, dim).unwrap()
}

/// Every sequence in `lo..=hi` of length `l` that equals its smallest rotation.
pub fn canonical_sequences(l: usize, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![lo; l];
    loop {
        let smallest = (0..l)
            .map(|r| [&current[r..], &current[..r]].concat())
            .min()
            .unwrap();
        if smallest == current {
            out.push(current.clone());
        }
        let mut i = l;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] < hi {
                current[i] += 1;
                current[i + 1..].iter_mut().for_each(|x| *x = lo);
                break;
            }
        }
    }
}

/// The type `(a_1, d_1; ...; a_k, d_k)` of vertex simples.
pub fn vertex_simple_type(alpha: &DimensionVector) -> RepresentationType {
    let k = alpha.len();
    RepresentationType::new(
        alpha
            .support()
            .into_iter()
            .map(|v| (alpha.0[v], DimensionVector::unit(k, v))),
    )
    .unwrap()
}

/// Block matrix of an arrow acting on the direct sum of all vertex spaces.
fn block_matrix(v: &Representation, arrow: usize, offsets: &[usize], n: usize) -> CMatrix {
    let a = v.quiver().arrow(arrow);
    let m = v.matrix(arrow);
    let mut out = CMatrix::zeros(n, n);
    out.view_mut((offsets[a.target], offsets[a.source]), m.shape())
        .copy_from(m);
    out
}

/// Orthonormal basis of a growing subspace of matrices.
struct Span {
    basis: Vec<DVector<Complex64>>,
}

impl Span {
    fn add(&mut self, m: &CMatrix) -> bool {
        let original = DVector::from_column_slice(m.as_slice());
        let scale = original.norm();
        if scale == 0.0 {
            return false;
        }
        let mut x = original / Complex64::from(scale);
        for _ in 0..2 {
            for b in &self.basis {
                let c = b.dotc(&x);
                x -= b * c;
            }
        }
        let norm = x.norm();
        if norm > 1e-7 {
            self.basis.push(x / Complex64::from(norm));
            true
        } else {
            false
        }
    }
}

/// Burnside's criterion on a random representation of dimension `b`: it is
/// simple iff the image of the path algebra is all of `End(C^n)`.
pub fn burnside_simple(q: &Quiver, b: &DimensionVector, seed: u64) -> bool {
    let n = b.total() as usize;
    if n == 0 {
        return false;
    }
    let s = QuiverSetting::new(q.clone(), b.clone()).unwrap();
    let v = random_representation(&s, seed, 1.0);
    let offsets: Vec<usize> = b
        .0
        .iter()
        .scan(0usize, |acc, &d| {
            let start = *acc;
            *acc += d as usize;
            Some(start)
        })
        .collect();
    let generators: Vec<CMatrix> = (0..q.arrows().len())
        .map(|a| block_matrix(&v, a, &offsets, n))
        .collect();
    let mut span = Span { basis: Vec::new() };
    let mut queue = Vec::new();
    for u in b.support() {
        let mut e = CMatrix::zeros(n, n);
        for i in 0..b.0[u] as usize {
            e[(offsets[u] + i, offsets[u] + i)] = Complex64::from(1.0);
        }
        if span.add(&e) {
            queue.push(e);
        }
    }
    while let Some(m) = queue.pop() {
        if span.basis.len() == n * n {
            break;
        }
        for g in &generators {
            let p = g * &m;
            let norm = p.norm();
            if norm > 0.0 && span.add(&p) {
                queue.push(p / Complex64::from(norm));
            }
        }
    }
    span.basis.len() == n * n
}

/// A random rational combination of necklaces of length at most `max_len`.
pub fn random_superpotential(rng: &mut ChaCha8Rng, q: &Quiver, max_len: usize, terms: usize) -> Superpotential {
    let cycles: Vec<Necklace> = cycle_basis(q, max_len, &CycleLimits::default()).unwrap();
    let mut w = Superpotential::zero();
    if cycles.is_empty() {
        return w;
    }
    for _ in 0..terms {
        let n = cycles[rng.random_range(0..cycles.len())].clone();
        let num: i64 = rng.random_range(-5..=5);
        let den: i64 = rng.random_range(1..=3);
        w.add_term(n, BigRational::new(num.into(), den.into()));
    }
    w
}

/// Subrepresentation supports of a thin representation found by trying
/// every subset of the support, written independently of the library.
pub fn closed_subsets_by_brute_force(v: &Representation) -> Vec<Vec<usize>> {
    let s = v.setting();
    let support = s.dim.support();
    let live: Vec<(usize, usize)> = v
        .quiver()
        .arrows()
        .iter()
        .enumerate()
        .filter(|(i, _)| v.matrix(*i).iter().any(|z| *z != Complex64::zero()))
        .map(|(_, a)| (a.source, a.target))
        .collect();
    let mut out = Vec::new();
    for bits in 0..(1usize << support.len()) {
        let subset: Vec<usize> = support
            .iter()
            .enumerate()
            .filter(|(i, _)| bits >> i & 1 == 1)
            .map(|(_, &u)| u)
            .collect();
        let closed = live
            .iter()
            .all(|(src, tgt)| !subset.contains(src) || subset.contains(tgt));
        if closed {
            out.push(subset);
        }
    }
    out
}

/// `(semistable, stable)` from the brute-force subsets.
pub fn brute_force_stability(v: &Representation, mu: &StabilityParameter) -> (bool, bool) {
    let s = v.setting();
    let total = s.dim.support().len();
    let mut semistable = true;
    let mut stable = true;
    for subset in closed_subsets_by_brute_force(v) {
        if subset.is_empty() || subset.len() == total {
            continue;
        }
        let p: BigRational = subset.iter().map(|&u| mu.weights()[u].clone()).sum();
        if p.is_negative() {
            semistable = false;
        }
        if !p.is_positive() {
            stable = false;
        }
    }
    (semistable, stable)
}

/// Zeroes each arrow matrix with probability `p`.
pub fn sparsify(v: &mut Representation, rng: &mut ChaCha8Rng, p: f64) {
    for a in 0..v.matrices().len() {
        if rng.random_bool(p) {
            v.matrix_mut(a).fill(Complex64::zero());
        }
    }
}

/// A random integer weight vector with `mu . alpha = 0` (the last support
/// vertex absorbs the balance, scaled to stay integral).
pub fn random_stability(rng: &mut ChaCha8Rng, s: &QuiverSetting) -> StabilityParameter {
    let k = s.vertex_count();
    let support = s.dim.support();
    let mut mu: Vec<i64> = (0..k).map(|_| rng.random_range(-3..=3)).collect();
    let last = *support.last().unwrap();
    let rest: i64 = (0..k)
        .filter(|&v| v != last)
        .map(|v| mu[v] * i64::from(s.dim.0[v]))
        .sum();
    let d = i64::from(s.dim.0[last]);
    mu.iter_mut().for_each(|x| *x *= d);
    mu[last] = -rest;
    StabilityParameter::from_integers(&mu, s).unwrap()
}
