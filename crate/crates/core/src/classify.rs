//! Simple roots, representation types, local quivers and strata.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quiver::{
    euler_form, euler_unit_left, euler_unit_right, DimensionVector, Quiver, QuiverSetting,
};
use crate::reduction::{is_coregular, SingularityKind};

/// Bounds on exhaustive enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationLimits {
    /// Largest entry allowed in a bound for simple-root enumeration.
    pub max_per_vertex: u32,
    /// Largest total dimension for representation-type enumeration.
    pub max_total: u32,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        EnumerationLimits {
            max_per_vertex: 6,
            max_total: 8,
        }
    }
}

fn check_len(q: &Quiver, b: &DimensionVector) -> Result<()> {
    if b.len() != q.vertex_count() {
        return Err(Error::LengthMismatch {
            expected: q.vertex_count(),
            found: b.len(),
        });
    }
    Ok(())
}

/// Whether `b` is the dimension vector of a simple representation of `q`.
///
/// The support of `b` must be strongly connected. A loop-free single vertex
/// admits only `b = 1`; an oriented cycle with single arrows (a single loop
/// included) admits only the all-ones vector; every other support needs
/// `chi(d_v, b) <= 0` and `chi(b, d_v) <= 0` at each support vertex.
pub fn is_simple_root(q: &Quiver, b: &DimensionVector) -> Result<bool> {
    check_len(q, b)?;
    if b.is_zero() {
        return Ok(false);
    }
    let support = b.support();
    let sub = q.induced(&support);
    if !sub.is_strongly_connected() {
        return Ok(false);
    }
    let values: Vec<u32> = support.iter().map(|&v| b.0[v]).collect();
    if sub.vertex_count() == 1 && sub.loops_at(0) == 0 {
        return Ok(values[0] == 1);
    }
    if let Some(cyclic) = sub.cyclic_form() {
        if cyclic.multiplicities.iter().all(|&k| k == 1) {
            return Ok(values.iter().all(|&x| x == 1));
        }
    }
    let signed: Vec<i64> = values.iter().map(|&x| i64::from(x)).collect();
    Ok((0..sub.vertex_count())
        .all(|v| euler_unit_left(&sub, v, &signed) <= 0 && euler_unit_right(&sub, &signed, v) <= 0))
}

/// Every vector below `bound` in lexicographic order, zero excluded.
fn vectors_below(bound: &DimensionVector) -> Vec<DimensionVector> {
    let mut out = Vec::new();
    let mut current = vec![0u32; bound.len()];
    loop {
        if current.iter().any(|&x| x > 0) {
            out.push(DimensionVector(current.clone()));
        }
        // odometer increment, last coordinate fastest
        let mut i = bound.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] < bound.0[i] {
                current[i] += 1;
                for c in current.iter_mut().skip(i + 1) {
                    *c = 0;
                }
                break;
            }
        }
    }
}

/// All simple roots `0 < b <= bound`, lexicographically ordered.
pub fn enumerate_simple_roots(
    q: &Quiver,
    bound: &DimensionVector,
    limits: &EnumerationLimits,
) -> Result<Vec<DimensionVector>> {
    check_len(q, bound)?;
    if let Some(&x) = bound.0.iter().find(|&&x| x > limits.max_per_vertex) {
        return Err(Error::LimitExceeded(format!(
            "bound entry {x} exceeds the per-vertex limit {}",
            limits.max_per_vertex
        )));
    }
    simple_roots_below(q, bound)
}

fn simple_roots_below(q: &Quiver, bound: &DimensionVector) -> Result<Vec<DimensionVector>> {
    let mut out = Vec::new();
    for b in vectors_below(bound) {
        if is_simple_root(q, &b)? {
            out.push(b);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeTerm {
    pub root: DimensionVector,
    pub multiplicity: u32,
}

/// A decomposition `a = e_1 b_1 + ... + e_l b_l` into simple roots.
///
/// Terms with equal roots are allowed and stand for distinct simple
/// representations of the same dimension. Terms are kept sorted by root in
/// decreasing lexicographic order, then by multiplicity, so the vertex
/// simples `d_1, ..., d_k` appear in vertex order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RepresentationType {
    terms: Vec<TypeTerm>,
}

impl RepresentationType {
    pub fn new(terms: impl IntoIterator<Item = (u32, DimensionVector)>) -> Result<Self> {
        let mut terms: Vec<TypeTerm> = terms
            .into_iter()
            .map(|(multiplicity, root)| TypeTerm { root, multiplicity })
            .collect();
        if terms.is_empty() {
            return Err(Error::schema("type", "a representation type needs a term"));
        }
        let k = terms[0].root.len();
        for t in &terms {
            if t.multiplicity == 0 {
                return Err(Error::schema("type", "multiplicities must be positive"));
            }
            if t.root.len() != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    found: t.root.len(),
                });
            }
        }
        terms.sort_by(|a, b| {
            b.root
                .cmp(&a.root)
                .then(a.multiplicity.cmp(&b.multiplicity))
        });
        Ok(RepresentationType { terms })
    }

    pub fn terms(&self) -> &[TypeTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `sum e_i b_i`.
    pub fn total(&self) -> DimensionVector {
        let k = self.terms[0].root.len();
        let mut acc = vec![0u32; k];
        for t in &self.terms {
            for (a, &b) in acc.iter_mut().zip(&t.root.0) {
                *a += t.multiplicity * b;
            }
        }
        DimensionVector(acc)
    }

    /// Checks that every root is simple, rigid roots are not repeated and the
    /// type decomposes `a`.
    pub fn validate(&self, q: &Quiver, a: &DimensionVector) -> Result<()> {
        check_len(q, a)?;
        for t in &self.terms {
            check_len(q, &t.root)?;
            if !is_simple_root(q, &t.root)? {
                return Err(Error::precondition(format!("{} is not a simple root", t.root)));
            }
        }
        for w in self.terms.windows(2) {
            if w[0].root == w[1].root && moduli_dimension(q, &w[0].root) == 0 {
                return Err(Error::precondition(format!(
                    "{} has a unique simple representation and cannot repeat",
                    w[0].root
                )));
            }
        }
        let total = self.total();
        if &total != a {
            return Err(Error::precondition(format!("type sums to {total}, not {a}")));
        }
        Ok(())
    }
}

impl fmt::Display for RepresentationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| format!("({},{})", t.multiplicity, t.root))
            .collect();
        write!(f, "[{}]", parts.join(";"))
    }
}

impl FromStr for RepresentationType {
    type Err = Error;

    /// Parses `[(e_1,[b...]);(e_2,[b...]);...]`.
    fn from_str(text: &str) -> Result<Self> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = |message: &str| Error::Parse {
            line: 1,
            column: 1,
            message: format!("representation type `{text}`: {message}"),
        };
        let inner = compact
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| bad("expected surrounding brackets"))?;
        let mut terms = Vec::new();
        for part in inner.split(';') {
            let body = part
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| bad("each term must look like (e,[b...])"))?;
            let (e, root) = body.split_once(',').ok_or_else(|| bad("missing comma"))?;
            let e: u32 = e.parse().map_err(|_| bad("multiplicity is not an integer"))?;
            let root = root
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| bad("root must be bracketed"))?;
            let entries = root
                .split(',')
                .map(|x| x.parse::<u32>().map_err(|_| bad("root entry is not an integer")))
                .collect::<Result<Vec<_>>>()?;
            terms.push((e, DimensionVector(entries)));
        }
        RepresentationType::new(terms)
    }
}

/// `1 - chi(b, b)`: the dimension of the family of simples of dimension `b`.
fn moduli_dimension(q: &Quiver, b: &DimensionVector) -> i64 {
    let s = b.to_signed();
    1 - euler_form(q, &s, &s).expect("length checked")
}

/// All representation types of `a`, in a deterministic order.
pub fn enumerate_rep_types(
    q: &Quiver,
    a: &DimensionVector,
    limits: &EnumerationLimits,
) -> Result<Vec<RepresentationType>> {
    check_len(q, a)?;
    if a.total() > limits.max_total {
        return Err(Error::LimitExceeded(format!(
            "total dimension {} exceeds the limit {}",
            a.total(),
            limits.max_total
        )));
    }
    if a.is_zero() {
        return Ok(Vec::new());
    }
    let roots = simple_roots_below(q, a)?;
    let rigid: Vec<bool> = roots.iter().map(|b| moduli_dimension(q, b) == 0).collect();
    // (root index, multiplicity) pairs in (root, multiplicity) order
    let mut options = Vec::new();
    for (i, b) in roots.iter().enumerate() {
        let max_e = (0..b.len())
            .filter(|&v| b.0[v] > 0)
            .map(|v| a.0[v] / b.0[v])
            .min()
            .unwrap_or(0);
        options.extend((1..=max_e).map(|e| (i, e)));
    }

    struct Search<'a> {
        roots: &'a [DimensionVector],
        rigid: &'a [bool],
        options: &'a [(usize, u32)],
        found: Vec<RepresentationType>,
    }

    impl Search<'_> {
        fn run(&mut self, start: usize, remaining: &mut [u32], terms: &mut Vec<(u32, usize)>) {
            if remaining.iter().all(|&x| x == 0) {
                let ty = RepresentationType::new(
                    terms.iter().map(|&(e, i)| (e, self.roots[i].clone())),
                )
                .expect("non-empty, equal lengths");
                self.found.push(ty);
                return;
            }
            for pos in start..self.options.len() {
                let (i, e) = self.options[pos];
                let root = &self.roots[i].0;
                if root.iter().zip(remaining.iter()).any(|(&b, &r)| e * b > r) {
                    continue;
                }
                let next = if self.rigid[i] {
                    // a rigid root contributes at most one term
                    (pos..self.options.len())
                        .find(|&p| self.options[p].0 != i)
                        .unwrap_or(self.options.len())
                } else {
                    pos
                };
                for (r, &b) in remaining.iter_mut().zip(root) {
                    *r -= e * b;
                }
                terms.push((e, i));
                self.run(next, remaining, terms);
                terms.pop();
                for (r, &b) in remaining.iter_mut().zip(root) {
                    *r += e * b;
                }
            }
        }
    }

    let mut search = Search {
        roots: &roots,
        rigid: &rigid,
        options: &options,
        found: Vec::new(),
    };
    search.run(0, &mut a.0.clone(), &mut Vec::new());
    Ok(search.found)
}

/// The local quiver setting of a representation type: `delta_ij -
/// chi(b_i, b_j)` arrows from vertex `i` to vertex `j`, dimension vector the
/// multiplicities.
pub fn local_quiver(q: &Quiver, tau: &RepresentationType) -> Result<QuiverSetting> {
    let l = tau.len();
    let roots: Vec<Vec<i64>> = tau.terms().iter().map(|t| t.root.to_signed()).collect();
    let mut adjacency = vec![vec![0u32; l]; l];
    for i in 0..l {
        for j in 0..l {
            let count = i64::from(i == j) - euler_form(q, &roots[i], &roots[j])?;
            adjacency[i][j] = u32::try_from(count).map_err(|_| {
                Error::Internal(format!(
                    "negative arrow count {count} between {} and {}: roots are not simple",
                    tau.terms()[i].root,
                    tau.terms()[j].root
                ))
            })?;
        }
    }
    QuiverSetting::new(
        Quiver::from_adjacency(&adjacency)?,
        DimensionVector(tau.terms().iter().map(|t| t.multiplicity).collect()),
    )
}

/// Dimension of the stratum of type `tau`: the number of loops of its local
/// quiver, `sum_i (1 - chi(b_i, b_i))`.
pub fn stratum_dimension(q: &Quiver, tau: &RepresentationType) -> Result<u64> {
    let mut total = 0i64;
    for t in tau.terms() {
        check_len(q, &t.root)?;
        total += moduli_dimension(q, &t.root);
    }
    u64::try_from(total).map_err(|_| Error::Internal(format!("negative stratum dimension {total}")))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratumReport {
    pub rep_type: RepresentationType,
    pub local_setting: QuiverSetting,
    pub stratum_dim: u64,
    pub smooth_point: bool,
}

/// One report per representation type of `a`.
pub fn strata(
    q: &Quiver,
    a: &DimensionVector,
    limits: &EnumerationLimits,
) -> Result<Vec<StratumReport>> {
    enumerate_rep_types(q, a, limits)?
        .into_iter()
        .map(|rep_type| {
            let local_setting = local_quiver(q, &rep_type)?;
            let stratum_dim = stratum_dimension(q, &rep_type)?;
            let smooth_point = is_coregular(&local_setting);
            Ok(StratumReport {
                rep_type,
                local_setting,
                stratum_dim,
                smooth_point,
            })
        })
        .collect()
}

/// Reads the singularity type off the strata: smooth iff every stratum is
/// smooth, an isolated singularity iff every singular stratum is a point.
pub fn classify_by_strata(s: &QuiverSetting, limits: &EnumerationLimits) -> Result<SingularityKind> {
    let reports = strata(&s.quiver, &s.dim, limits)?;
    let singular: Vec<&StratumReport> = reports.iter().filter(|r| !r.smooth_point).collect();
    Ok(if singular.is_empty() {
        SingularityKind::Smooth
    } else if singular.iter().all(|r| r.stratum_dim == 0) {
        SingularityKind::IsolatedSingularity
    } else {
        SingularityKind::NonIsolated
    })
}
