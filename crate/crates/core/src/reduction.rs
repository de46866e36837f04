//! Reduction moves on quiver settings and everything built on top of them:
//! the coregularity test, the isolated-singularity classifier, étale
//! invariants of reduced cyclic settings and the terminal hereditary model.
//!
//! Three moves are available at a vertex `v` of a setting `(Q, a)`:
//!
//! * **I**: `v` has no loops and `chi(d_v, a) >= 0` or `chi(a, d_v) >= 0`.
//!   The vertex is deleted and every 2-path `u -> v -> w` becomes an arrow
//!   `u -> w`.
//! * **II**: `a_v = 1` and `v` carries loops. The loops are deleted.
//! * **III**: `a_v = k >= 2`, exactly one loop at `v`, and exactly one
//!   non-loop arrow enters `v` (resp. leaves `v`), attached to a vertex of
//!   dimension one. The loop is deleted and that arrow is replaced by `k`
//!   parallel copies.
//!
//! Every move lowers `(vertex count, loop count)` lexicographically, so
//! reduction always terminates.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quiver::{
    euler_unit_left, euler_unit_right, fresh_id, Arrow, CyclicData, DimensionVector, Quiver,
    QuiverSetting,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StepKind {
    I,
    II,
    III,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StepKind::I => "I",
            StepKind::II => "II",
            StepKind::III => "III",
        };
        f.write_str(s)
    }
}

/// Which of the two neighbourhood shapes a move of kind III matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThirdPattern {
    /// A single non-loop arrow enters `v` from a dimension-one vertex.
    Incoming,
    /// A single non-loop arrow leaves `v` towards a dimension-one vertex.
    Outgoing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepDetail {
    /// `out_condition` is `chi(d_v, a) >= 0`, `in_condition` is
    /// `chi(a, d_v) >= 0`. A step where only one of them holds is flagged
    /// as one-sided.
    I {
        out_condition: bool,
        in_condition: bool,
    },
    II {
        loops_removed: u32,
    },
    III {
        pattern: ThirdPattern,
        replaced_arrow: String,
    },
}

impl StepDetail {
    pub fn is_one_sided(&self) -> bool {
        matches!(self, StepDetail::I { out_condition, in_condition } if out_condition != in_condition)
    }
}

/// One applied move. `vertex` uses the numbering of `before`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionStep {
    pub kind: StepKind,
    pub vertex: usize,
    pub detail: StepDetail,
    pub before: QuiverSetting,
    pub after: QuiverSetting,
}

/// The full record of a reduction.
///
/// `normalized` is the input restricted to its support with the arrows
/// between distinct strongly connected components removed; those arrows carry
/// no invariants, so the quotient variety is unchanged. The steps start from
/// `normalized`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionTrace {
    pub initial: QuiverSetting,
    pub normalized: QuiverSetting,
    pub steps: Vec<ReductionStep>,
    pub final_setting: QuiverSetting,
    pub used_kinds: BTreeSet<StepKind>,
}

impl ReductionTrace {
    pub fn only_kind_i(&self) -> bool {
        self.used_kinds.iter().all(|&k| k == StepKind::I)
    }

    pub fn one_sided_steps(&self) -> Vec<usize> {
        (0..self.steps.len())
            .filter(|&i| self.steps[i].detail.is_one_sided())
            .collect()
    }

    /// Checks the chaining invariant `steps[i].after == steps[i+1].before`.
    pub fn is_chained(&self) -> bool {
        let mut current = &self.normalized;
        for step in &self.steps {
            if &step.before != current {
                return false;
            }
            current = &step.after;
        }
        current == &self.final_setting
    }
}

fn signed_dim(s: &QuiverSetting) -> Vec<i64> {
    s.dim.to_signed()
}

fn check_vertex(s: &QuiverSetting, v: usize) -> Result<()> {
    if v >= s.vertex_count() {
        return Err(Error::precondition(format!(
            "vertex {} out of range 1..={}",
            v + 1,
            s.vertex_count()
        )));
    }
    Ok(())
}

/// Returns `(chi(d_v, a) >= 0, chi(a, d_v) >= 0)` if `v` has no loops.
fn first_move_conditions(s: &QuiverSetting, v: usize) -> Option<(bool, bool)> {
    if s.quiver.loops_at(v) > 0 {
        return None;
    }
    let a = signed_dim(s);
    let out_condition = euler_unit_left(&s.quiver, v, &a) >= 0;
    let in_condition = euler_unit_right(&s.quiver, &a, v) >= 0;
    (out_condition || in_condition).then_some((out_condition, in_condition))
}

pub fn can_reduce_i(s: &QuiverSetting, v: usize) -> bool {
    v < s.vertex_count() && first_move_conditions(s, v).is_some()
}

/// Deletes `v`, replacing every 2-path through it by an arrow. New arrows are
/// named `p*q` after the path they replace.
pub fn apply_i(s: &QuiverSetting, v: usize) -> Result<QuiverSetting> {
    check_vertex(s, v)?;
    if s.quiver.loops_at(v) > 0 {
        return Err(Error::precondition(format!("move I at vertex {}: vertex has loops", v + 1)));
    }
    if first_move_conditions(s, v).is_none() {
        return Err(Error::precondition(format!(
            "move I at vertex {}: chi(d_v, a) < 0 and chi(a, d_v) < 0",
            v + 1
        )));
    }
    let renumber = |w: usize| if w > v { w - 1 } else { w };
    let arrows = s.quiver.arrows();
    let mut taken: BTreeSet<String> = arrows.iter().map(|a| a.id.clone()).collect();
    let mut out: Vec<Arrow> = arrows
        .iter()
        .filter(|a| a.source != v && a.target != v)
        .map(|a| Arrow::new(a.id.clone(), renumber(a.source), renumber(a.target)))
        .collect();
    for p in arrows.iter().filter(|a| a.target == v) {
        for q in arrows.iter().filter(|a| a.source == v) {
            let id = fresh_id(format!("{}*{}", p.id, q.id), &taken);
            taken.insert(id.clone());
            out.push(Arrow::new(id, renumber(p.source), renumber(q.target)));
        }
    }
    let keep: Vec<usize> = (0..s.vertex_count()).filter(|&w| w != v).collect();
    let dim = DimensionVector(keep.iter().map(|&w| s.dim.0[w]).collect());
    QuiverSetting::new(Quiver::new(keep.len(), out)?, dim)
}

pub fn can_reduce_ii(s: &QuiverSetting, v: usize) -> bool {
    v < s.vertex_count() && s.dim.0[v] == 1 && s.quiver.loops_at(v) > 0
}

/// Removes every loop at a dimension-one vertex.
pub fn apply_ii(s: &QuiverSetting, v: usize) -> Result<QuiverSetting> {
    check_vertex(s, v)?;
    if s.dim.0[v] != 1 {
        return Err(Error::precondition(format!(
            "move II at vertex {}: dimension is {}, not 1",
            v + 1,
            s.dim.0[v]
        )));
    }
    if s.quiver.loops_at(v) == 0 {
        return Err(Error::precondition(format!("move II at vertex {}: no loops", v + 1)));
    }
    let arrows = s
        .quiver
        .arrows()
        .iter()
        .filter(|a| !(a.is_loop() && a.source == v))
        .cloned()
        .collect();
    QuiverSetting::new(Quiver::new(s.vertex_count(), arrows)?, s.dim.clone())
}

/// Matches the neighbourhood of `v` against the two shapes of move III.
/// On mismatch the error names the failing clause.
pub fn third_move_pattern(s: &QuiverSetting, v: usize) -> Result<(ThirdPattern, usize)> {
    check_vertex(s, v)?;
    let k = s.dim.0[v];
    if k < 2 {
        return Err(Error::precondition(format!(
            "move III at vertex {}: dimension {k} is not > 1",
            v + 1
        )));
    }
    let loops = s.quiver.loops_at(v);
    if loops != 1 {
        return Err(Error::precondition(format!(
            "move III at vertex {}: needs exactly one loop, found {loops}",
            v + 1
        )));
    }
    let arrows = s.quiver.arrows();
    let incoming: Vec<usize> = (0..arrows.len())
        .filter(|&i| arrows[i].target == v && !arrows[i].is_loop())
        .collect();
    let outgoing: Vec<usize> = (0..arrows.len())
        .filter(|&i| arrows[i].source == v && !arrows[i].is_loop())
        .collect();
    if let [only] = incoming[..] {
        if s.dim.0[arrows[only].source] == 1 {
            return Ok((ThirdPattern::Incoming, only));
        }
    }
    if let [only] = outgoing[..] {
        if s.dim.0[arrows[only].target] == 1 {
            return Ok((ThirdPattern::Outgoing, only));
        }
    }
    Err(Error::precondition(format!(
        "move III at vertex {}: neither a single incoming arrow from a dimension-1 vertex \
         ({} incoming) nor a single outgoing arrow to a dimension-1 vertex ({} outgoing)",
        v + 1,
        incoming.len(),
        outgoing.len()
    )))
}

pub fn can_reduce_iii(s: &QuiverSetting, v: usize) -> bool {
    third_move_pattern(s, v).is_ok()
}

pub fn apply_iii(s: &QuiverSetting, v: usize) -> Result<QuiverSetting> {
    let (_, arrow) = third_move_pattern(s, v)?;
    Ok(apply_iii_at(s, v, arrow))
}

fn apply_iii_at(s: &QuiverSetting, v: usize, replaced: usize) -> QuiverSetting {
    let k = s.dim.0[v];
    let arrows = s.quiver.arrows();
    let mut taken: BTreeSet<String> = arrows.iter().map(|a| a.id.clone()).collect();
    let mut out: Vec<Arrow> = arrows
        .iter()
        .enumerate()
        .filter(|(i, a)| *i != replaced && !(a.is_loop() && a.source == v))
        .map(|(_, a)| a.clone())
        .collect();
    let old = &arrows[replaced];
    for n in 1..=k {
        let id = fresh_id(format!("{}_{n}", old.id), &taken);
        taken.insert(id.clone());
        out.push(Arrow::new(id, old.source, old.target));
    }
    QuiverSetting::new(
        Quiver::new(s.vertex_count(), out).expect("move III keeps endpoints valid"),
        s.dim.clone(),
    )
    .expect("dimension unchanged")
}

/// A move that could be applied to the current setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move {
    pub kind: StepKind,
    pub vertex: usize,
}

/// All applicable moves, ordered by kind then vertex.
pub fn applicable_moves(s: &QuiverSetting) -> Vec<Move> {
    let n = s.vertex_count();
    let mut moves = Vec::new();
    for (kind, test) in [
        (StepKind::I, can_reduce_i as fn(&QuiverSetting, usize) -> bool),
        (StepKind::II, can_reduce_ii),
        (StepKind::III, can_reduce_iii),
    ] {
        moves.extend((0..n).filter(|&v| test(s, v)).map(|vertex| Move { kind, vertex }));
    }
    moves
}

/// Applies a single move and records it.
pub fn apply_move(s: &QuiverSetting, m: Move) -> Result<ReductionStep> {
    let (after, detail) = match m.kind {
        StepKind::I => {
            check_vertex(s, m.vertex)?;
            let (out_condition, in_condition) = first_move_conditions(s, m.vertex)
                .ok_or_else(|| Error::precondition(format!("move I not applicable at vertex {}", m.vertex + 1)))?;
            (
                apply_i(s, m.vertex)?,
                StepDetail::I {
                    out_condition,
                    in_condition,
                },
            )
        }
        StepKind::II => {
            let after = apply_ii(s, m.vertex)?;
            let loops_removed = s.quiver.loops_at(m.vertex);
            (after, StepDetail::II { loops_removed })
        }
        StepKind::III => {
            let (pattern, arrow) = third_move_pattern(s, m.vertex)?;
            (
                apply_iii_at(s, m.vertex, arrow),
                StepDetail::III {
                    pattern,
                    replaced_arrow: s.quiver.arrow(arrow).id.clone(),
                },
            )
        }
    };
    Ok(ReductionStep {
        kind: m.kind,
        vertex: m.vertex,
        detail,
        before: s.clone(),
        after,
    })
}

/// Restricts to the support and drops arrows joining different strongly
/// connected components.
pub fn normalize(s: &QuiverSetting) -> QuiverSetting {
    let support = s.restrict_to_support();
    let components = support.quiver.strongly_connected_components();
    let mut label = vec![0; support.vertex_count()];
    for (c, members) in components.iter().enumerate() {
        for &v in members {
            label[v] = c;
        }
    }
    let arrows = support
        .quiver
        .arrows()
        .iter()
        .filter(|a| label[a.source] == label[a.target])
        .cloned()
        .collect();
    QuiverSetting::new(
        Quiver::new(support.vertex_count(), arrows).expect("subset of valid arrows"),
        support.dim,
    )
    .expect("same dimension")
}

/// Reduces until no move applies, letting `choose` pick among the
/// applicable moves (it receives a non-empty list and returns an index).
pub fn reduce_with<F>(s: &QuiverSetting, mut choose: F) -> ReductionTrace
where
    F: FnMut(&[Move]) -> usize,
{
    let normalized = normalize(s);
    let mut current = normalized.clone();
    let mut steps = Vec::new();
    let mut used_kinds = BTreeSet::new();
    loop {
        let moves = applicable_moves(&current);
        if moves.is_empty() {
            break;
        }
        let pick = moves[choose(&moves).min(moves.len() - 1)];
        let step = apply_move(&current, pick).expect("applicable move succeeds");
        used_kinds.insert(step.kind);
        current = step.after.clone();
        steps.push(step);
    }
    ReductionTrace {
        initial: s.clone(),
        normalized,
        steps,
        final_setting: current,
        used_kinds,
    }
}

/// Deterministic reduction: kind I before II before III, lowest vertex first.
pub fn reduce_fully(s: &QuiverSetting) -> ReductionTrace {
    reduce_with(s, |_| 0)
}

/// True iff the connected setting is one of the three terminal shapes: a
/// vertex without loops, a vertex with one loop, or a dimension-2 vertex
/// with two loops.
pub fn is_terminal(s: &QuiverSetting) -> bool {
    if s.vertex_count() != 1 {
        return false;
    }
    match s.quiver.loops_at(0) {
        0 | 1 => true,
        2 => s.dim.0[0] == 2,
        _ => false,
    }
}

fn final_is_terminal(trace: &ReductionTrace) -> bool {
    let fin = &trace.final_setting;
    fin.quiver
        .weak_components()
        .iter()
        .all(|c| is_terminal(&fin.induced(c)))
}

/// Coregularity test: reduce and compare every component with the terminal
/// shapes.
pub fn coregularity(s: &QuiverSetting) -> (bool, ReductionTrace) {
    let trace = reduce_fully(s);
    (final_is_terminal(&trace), trace)
}

pub fn is_coregular(s: &QuiverSetting) -> bool {
    coregularity(s).0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SingularityKind {
    Smooth,
    IsolatedSingularity,
    NonIsolated,
}

impl fmt::Display for SingularityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SingularityKind::Smooth => "Smooth",
            SingularityKind::IsolatedSingularity => "IsolatedSingularity",
            SingularityKind::NonIsolated => "NonIsolated",
        };
        f.write_str(s)
    }
}

/// Verdict for one strongly connected component of the support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentVerdict {
    /// Vertices of the component, in the numbering of the input setting.
    pub vertices: Vec<usize>,
    pub kind: SingularityKind,
    /// The quotient of this component is a single point.
    pub is_point: bool,
    pub cyclic_data: Option<CyclicData>,
    pub trace: ReductionTrace,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingularityVerdict {
    pub kind: SingularityKind,
    pub cyclic_data: Option<CyclicData>,
    pub central_dim: Option<i64>,
    pub auslander_regular: Option<bool>,
    pub trace: ReductionTrace,
    pub components: Vec<ComponentVerdict>,
}

fn classify_component<F>(s: &QuiverSetting, choose: &mut F) -> (SingularityKind, Option<CyclicData>, ReductionTrace)
where
    F: FnMut(&[Move]) -> usize,
{
    let trace = reduce_with(s, &mut *choose);
    if final_is_terminal(&trace) {
        return (SingularityKind::Smooth, None, trace);
    }
    let fin = &trace.final_setting;
    let all_ones = fin.dim.0.iter().all(|&x| x == 1);
    if trace.only_kind_i() && all_ones {
        if let Some(cyclic) = fin.quiver.cyclic_form() {
            if cyclic.is_reduced() {
                return (SingularityKind::IsolatedSingularity, Some(cyclic), trace);
            }
        }
    }
    (SingularityKind::NonIsolated, None, trace)
}

/// Classifies the quotient variety of a setting as smooth, an isolated
/// singularity or a singularity with positive-dimensional singular locus.
///
/// Each strongly connected component of the support is reduced on its own.
/// The quotient is the product of the component quotients, so the setting is
/// smooth iff every component is, and has an isolated singularity iff exactly
/// one component does and every other component's quotient is a point.
pub fn classify_singularity(s: &QuiverSetting) -> SingularityVerdict {
    classify_with(s, |_| 0)
}

/// [`classify_singularity`] with a caller-chosen move order.
pub fn classify_with<F>(s: &QuiverSetting, mut choose: F) -> SingularityVerdict
where
    F: FnMut(&[Move]) -> usize,
{
    let support_vertices = s.dim.support();
    let support = s.restrict_to_support();
    let mut components = Vec::new();
    for members in support.quiver.strongly_connected_components() {
        let sub = support.induced(&members);
        let is_point = sub.vertex_count() == 1 && sub.quiver.loops_at(0) == 0;
        let (kind, cyclic_data, trace) = classify_component(&sub, &mut choose);
        components.push(ComponentVerdict {
            vertices: members.iter().map(|&v| support_vertices[v]).collect(),
            kind,
            is_point,
            cyclic_data,
            trace,
        });
    }

    let isolated: Vec<&ComponentVerdict> = components
        .iter()
        .filter(|c| c.kind == SingularityKind::IsolatedSingularity)
        .collect();
    let kind = if components.iter().all(|c| c.kind == SingularityKind::Smooth) {
        SingularityKind::Smooth
    } else if isolated.len() == 1
        && components
            .iter()
            .all(|c| c.kind == SingularityKind::IsolatedSingularity || c.is_point)
    {
        SingularityKind::IsolatedSingularity
    } else {
        SingularityKind::NonIsolated
    };
    let cyclic_data = match kind {
        SingularityKind::IsolatedSingularity => isolated[0].cyclic_data.clone(),
        _ => None,
    };
    let central_dim = cyclic_data.as_ref().map(central_dimension);
    let auslander_regular = match kind {
        SingularityKind::NonIsolated => None,
        _ => Some(true),
    };
    SingularityVerdict {
        kind,
        cyclic_data,
        central_dim,
        auslander_regular,
        trace: reduce_with(s, &mut choose),
        components,
    }
}

/// Dimension of the quotient of a cyclic setting with all-ones dimension
/// vector: `sum k_i - l + 1`.
pub fn central_dimension(cyclic: &CyclicData) -> i64 {
    cyclic.multiplicities.iter().map(|&k| i64::from(k)).sum::<i64>() - cyclic.len() as i64 + 1
}

fn binomial(n: u64, k: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `M_i = prod_j C(k_j + i - 1, i)`: the dimension of the degree-`i` piece
/// of the invariant ring of a cyclic setting. Returns `M_0, ..., M_{i_max}`.
pub fn hilbert_sequence(cyclic: &CyclicData, i_max: usize) -> Vec<BigUint> {
    (0..=i_max as u64)
        .map(|i| {
            cyclic
                .multiplicities
                .iter()
                .map(|&k| match i {
                    0 => BigUint::one(),
                    _ => binomial(u64::from(k) + i - 1, i),
                })
                .product()
        })
        .collect()
}

fn require_reduced(c: &CyclicData) -> Result<()> {
    if c.len() < 2 {
        return Err(Error::precondition(format!("cyclic data {c} has fewer than two vertices")));
    }
    if let Some(k) = c.multiplicities.iter().find(|&&k| k < 2) {
        return Err(Error::precondition(format!(
            "cyclic data {c} is not reduced: multiplicity {k} < 2"
        )));
    }
    Ok(())
}

fn sorted(c: &CyclicData) -> Vec<u32> {
    let mut ks = c.multiplicities.clone();
    ks.sort_unstable();
    ks
}

/// Étale equivalence of the isolated singularities of two reduced cyclic
/// settings: same vertex count and the same multiset of multiplicities.
pub fn etale_equivalent(a: &CyclicData, b: &CyclicData) -> Result<bool> {
    require_reduced(a)?;
    require_reduced(b)?;
    Ok(a.len() == b.len() && sorted(a) == sorted(b))
}

/// The first `i` in `1..=i_max` where the two sequences `M_i` differ.
pub fn first_separating_index(
    a: &CyclicData,
    b: &CyclicData,
    i_max: usize,
) -> Option<(usize, BigUint, BigUint)> {
    let sa = hilbert_sequence(a, i_max);
    let sb = hilbert_sequence(b, i_max);
    (1..=i_max)
        .find(|&i| sa[i] != sb[i])
        .map(|i| (i, sa[i].clone(), sb[i].clone()))
}

/// `f(x) = prod (x + k_i) / (x + 1)^n`, stored by its roots and exponent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalHilbert {
    /// The `k_i`, sorted ascending (the numerator vanishes at `-k_i`).
    pub roots: Vec<u32>,
    pub exponent: usize,
}

impl RationalHilbert {
    pub fn eval(&self, x: u64) -> BigRational {
        let num: BigUint = self.roots.iter().map(|&k| BigUint::from(x + u64::from(k))).product();
        let den = BigUint::from(x + 1).pow(self.exponent as u32);
        BigRational::new(num.into(), den.into())
    }
}

pub fn rational_hilbert(cyclic: &CyclicData) -> Result<RationalHilbert> {
    require_reduced(cyclic)?;
    Ok(RationalHilbert {
        roots: sorted(cyclic),
        exponent: cyclic.len(),
    })
}

/// Valuation pattern of the terminal hereditary order: block `(i, j)` sits in
/// `x^v C[[x]]` with `v = 1` strictly below the diagonal and `v = 0`
/// elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HereditaryModel {
    pub cyclic: CyclicData,
    pub block_sizes: Vec<u32>,
    pub valuations: Vec<Vec<u8>>,
}

pub fn hereditary_model(cyclic: &CyclicData, dims: &[u32]) -> Result<HereditaryModel> {
    if dims.is_empty() {
        return Err(Error::precondition("hereditary model needs at least one block"));
    }
    if dims.contains(&0) {
        return Err(Error::precondition("block sizes must be positive"));
    }
    let m = dims.len();
    let valuations = (0..m)
        .map(|i| (0..m).map(|j| u8::from(i > j)).collect())
        .collect();
    Ok(HereditaryModel {
        cyclic: cyclic.clone(),
        block_sizes: dims.to_vec(),
        valuations,
    })
}
