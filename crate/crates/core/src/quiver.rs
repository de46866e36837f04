//! Quivers, dimension vectors and the Euler form.
//!
//! Vertices are 0-indexed in the API and 1-indexed in every document and
//! report. The arrow list is the authoritative description of a quiver; the
//! adjacency matrix is derived from it on construction. Arrows are kept
//! sorted by id, so arrow indices follow the lexicographic order of ids.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Arrow {
    pub id: String,
    pub source: usize,
    pub target: usize,
}

impl Arrow {
    pub fn new(id: impl Into<String>, source: usize, target: usize) -> Self {
        Arrow {
            id: id.into(),
            source,
            target,
        }
    }

    pub fn is_loop(&self) -> bool {
        self.source == self.target
    }
}

/// A finite quiver, loops and multiple arrows allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Quiver {
    vertex_count: usize,
    arrows: Vec<Arrow>,
    adjacency: Vec<Vec<u32>>,
}

impl Quiver {
    /// Builds a quiver from an arrow list. Ids must be unique and non-empty,
    /// endpoints must lie in `0..vertex_count`.
    pub fn new(vertex_count: usize, mut arrows: Vec<Arrow>) -> Result<Self> {
        for (i, arrow) in arrows.iter().enumerate() {
            if arrow.id.is_empty() {
                return Err(Error::schema(format!("arrows[{i}].id"), "empty arrow id"));
            }
            for (name, v) in [("source", arrow.source), ("target", arrow.target)] {
                if v >= vertex_count {
                    return Err(Error::schema(
                        format!("arrows[{i}].{name}"),
                        format!(
                            "vertex {} out of range 1..={vertex_count} (arrow `{}`)",
                            v + 1,
                            arrow.id
                        ),
                    ));
                }
            }
        }
        arrows.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = arrows.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::schema("arrows", format!("duplicate arrow id `{}`", w[0].id)));
        }
        let mut adjacency = vec![vec![0u32; vertex_count]; vertex_count];
        for arrow in &arrows {
            adjacency[arrow.source][arrow.target] += 1;
        }
        Ok(Quiver {
            vertex_count,
            arrows,
            adjacency,
        })
    }

    /// Builds a quiver from an adjacency matrix, naming the `n`-th arrow from
    /// `i` to `j` as `a{i}_{j}_{n}` (all 1-indexed).
    pub fn from_adjacency(adjacency: &[Vec<u32>]) -> Result<Self> {
        let k = adjacency.len();
        let mut arrows = Vec::new();
        for (i, row) in adjacency.iter().enumerate() {
            if row.len() != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    found: row.len(),
                });
            }
            for (j, &count) in row.iter().enumerate() {
                for n in 0..count {
                    arrows.push(Arrow::new(format!("a{}_{}_{}", i + 1, j + 1, n + 1), i, j));
                }
            }
        }
        Quiver::new(k, arrows)
    }

    /// The oriented cycle `v_1 -> v_2 -> ... -> v_l -> v_1` where the arrow
    /// out of `v_i` has multiplicity `multiplicities[i]`.
    pub fn cyclic(multiplicities: &[u32]) -> Result<Self> {
        let l = multiplicities.len();
        let mut adjacency = vec![vec![0u32; l]; l];
        for (i, &k) in multiplicities.iter().enumerate() {
            adjacency[i][(i + 1) % l] += k;
        }
        Quiver::from_adjacency(&adjacency)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn arrow(&self, index: usize) -> &Arrow {
        &self.arrows[index]
    }

    pub fn arrow_index(&self, id: &str) -> Option<usize> {
        self.arrows.binary_search_by(|a| a.id.as_str().cmp(id)).ok()
    }

    pub fn adjacency(&self) -> &[Vec<u32>] {
        &self.adjacency
    }

    pub fn arrow_count(&self, from: usize, to: usize) -> u32 {
        self.adjacency[from][to]
    }

    pub fn loops_at(&self, v: usize) -> u32 {
        self.adjacency[v][v]
    }

    pub fn has_loops(&self) -> bool {
        (0..self.vertex_count).any(|v| self.loops_at(v) > 0)
    }

    /// Number of arrows leaving `v`, loops excluded.
    pub fn out_degree(&self, v: usize) -> u32 {
        (0..self.vertex_count)
            .filter(|&w| w != v)
            .map(|w| self.adjacency[v][w])
            .sum()
    }

    /// Number of arrows entering `v`, loops excluded.
    pub fn in_degree(&self, v: usize) -> u32 {
        (0..self.vertex_count)
            .filter(|&u| u != v)
            .map(|u| self.adjacency[u][v])
            .sum()
    }

    /// The subquiver on `vertices` (in the given order) keeping every arrow
    /// with both endpoints inside. Arrow ids are preserved.
    pub fn induced(&self, vertices: &[usize]) -> Quiver {
        let mut position = vec![None; self.vertex_count];
        for (new, &old) in vertices.iter().enumerate() {
            position[old] = Some(new);
        }
        let arrows = self
            .arrows
            .iter()
            .filter_map(|a| match (position[a.source], position[a.target]) {
                (Some(s), Some(t)) => Some(Arrow::new(a.id.clone(), s, t)),
                _ => None,
            })
            .collect();
        Quiver::new(vertices.len(), arrows).expect("induced subquiver of a valid quiver")
    }

    /// Vertices reachable from `start` along oriented paths (including `start`).
    pub fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for w in 0..self.vertex_count {
                if self.adjacency[u][w] > 0 && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Strongly connected components, each sorted, ordered by smallest vertex.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        let reach: Vec<Vec<bool>> = (0..self.vertex_count)
            .map(|v| self.reachable_from(v))
            .collect();
        let mut assigned = vec![false; self.vertex_count];
        let mut components = Vec::new();
        for v in 0..self.vertex_count {
            if assigned[v] {
                continue;
            }
            let component: Vec<usize> = (0..self.vertex_count)
                .filter(|&w| reach[v][w] && reach[w][v])
                .collect();
            for &w in &component {
                assigned[w] = true;
            }
            components.push(component);
        }
        components
    }

    /// Connected components of the underlying undirected graph.
    pub fn weak_components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.vertex_count];
        let mut components = Vec::new();
        for start in 0..self.vertex_count {
            if label[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut stack = vec![start];
            label[start] = id;
            let mut members = vec![];
            while let Some(u) = stack.pop() {
                members.push(u);
                for w in 0..self.vertex_count {
                    let linked = self.adjacency[u][w] > 0 || self.adjacency[w][u] > 0;
                    if linked && label[w] == usize::MAX {
                        label[w] = id;
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        components
    }

    /// True iff every ordered pair of vertices is joined by an oriented path.
    pub fn is_strongly_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return true;
        }
        self.strongly_connected_components().len() == 1
    }

    /// Recognises an oriented cycle `v_1 => v_2 => ... => v_l => v_1` with
    /// every multiplicity at least one and no other arrows. Returns the
    /// rotation of the multiplicity tuple that is lexicographically minimal.
    /// A single vertex carrying only loops is the cycle with `l = 1`.
    pub fn cyclic_form(&self) -> Option<CyclicData> {
        let l = self.vertex_count;
        if l == 0 {
            return None;
        }
        if l == 1 {
            let k = self.loops_at(0);
            return (k >= 1).then(|| CyclicData::new(vec![k]));
        }
        let mut successor = vec![usize::MAX; l];
        for (v, row) in self.adjacency.iter().enumerate() {
            if row[v] > 0 {
                return None;
            }
            let mut targets = (0..l).filter(|&w| row[w] > 0);
            let w = targets.next()?;
            if targets.next().is_some() {
                return None;
            }
            successor[v] = w;
        }
        let mut multiplicities = Vec::with_capacity(l);
        let mut v = 0;
        for _ in 0..l {
            multiplicities.push(self.adjacency[v][successor[v]]);
            v = successor[v];
            if v == 0 && multiplicities.len() < l {
                return None;
            }
        }
        (v == 0).then(|| CyclicData::new(canonical_rotation(&multiplicities)))
    }
}

fn canonical_rotation(values: &[u32]) -> Vec<u32> {
    (0..values.len())
        .map(|r| {
            values[r..]
                .iter()
                .chain(&values[..r])
                .copied()
                .collect::<Vec<_>>()
        })
        .min()
        .unwrap_or_default()
}

/// The shape of a cyclic quiver: `l` vertices and the multiplicities
/// `(k_1, ..., k_l)` along the cycle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CyclicData {
    pub multiplicities: Vec<u32>,
}

impl CyclicData {
    pub fn new(multiplicities: Vec<u32>) -> Self {
        CyclicData { multiplicities }
    }

    pub fn len(&self) -> usize {
        self.multiplicities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multiplicities.is_empty()
    }

    /// Reduced cyclic data: at least two vertices and every multiplicity >= 2.
    pub fn is_reduced(&self) -> bool {
        self.len() >= 2 && self.multiplicities.iter().all(|&k| k >= 2)
    }

    pub fn quiver(&self) -> Quiver {
        Quiver::cyclic(&self.multiplicities).expect("cyclic quiver is always valid")
    }

    /// The setting with the all-ones dimension vector on the cyclic quiver.
    pub fn setting(&self) -> QuiverSetting {
        QuiverSetting::new(self.quiver(), DimensionVector::ones(self.len()))
            .expect("dimension length matches")
    }
}

impl fmt::Display for CyclicData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ks: Vec<String> = self.multiplicities.iter().map(u32::to_string).collect();
        write!(f, "({};[{}])", self.len(), ks.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DimensionVector(pub Vec<u32>);

impl DimensionVector {
    pub fn new(entries: Vec<u32>) -> Self {
        DimensionVector(entries)
    }

    pub fn zeros(k: usize) -> Self {
        DimensionVector(vec![0; k])
    }

    pub fn ones(k: usize) -> Self {
        DimensionVector(vec![1; k])
    }

    /// The unit vector concentrated in vertex `v`.
    pub fn unit(k: usize, v: usize) -> Self {
        let mut entries = vec![0; k];
        entries[v] = 1;
        DimensionVector(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.0[v] > 0).collect()
    }

    pub fn to_signed(&self) -> Vec<i64> {
        self.0.iter().map(|&x| i64::from(x)).collect()
    }

    /// True iff `self <= other` componentwise.
    pub fn le(&self, other: &DimensionVector) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl fmt::Display for DimensionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// A quiver together with a dimension vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuiverSetting {
    pub quiver: Quiver,
    pub dim: DimensionVector,
}

impl QuiverSetting {
    pub fn new(quiver: Quiver, dim: DimensionVector) -> Result<Self> {
        if dim.len() != quiver.vertex_count() {
            return Err(Error::LengthMismatch {
                expected: quiver.vertex_count(),
                found: dim.len(),
            });
        }
        Ok(QuiverSetting { quiver, dim })
    }

    pub fn vertex_count(&self) -> usize {
        self.quiver.vertex_count()
    }

    /// The sub-setting on `vertices`, keeping arrows with both ends inside.
    pub fn induced(&self, vertices: &[usize]) -> QuiverSetting {
        QuiverSetting {
            quiver: self.quiver.induced(vertices),
            dim: DimensionVector(vertices.iter().map(|&v| self.dim.0[v]).collect()),
        }
    }

    /// Drops every vertex of dimension zero together with its arrows.
    pub fn restrict_to_support(&self) -> QuiverSetting {
        self.induced(&self.dim.support())
    }

    pub fn is_thin(&self) -> bool {
        self.dim.0.iter().all(|&x| x <= 1)
    }
}

/// The Euler matrix: entry `(i, j)` is `delta_ij - #arrows(i -> j)`.
pub fn euler_matrix(q: &Quiver) -> Vec<Vec<i64>> {
    let k = q.vertex_count();
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| i64::from(i == j) - i64::from(q.arrow_count(i, j)))
                .collect()
        })
        .collect()
}

/// The Euler form on arbitrary integer vectors.
pub fn euler_form(q: &Quiver, a: &[i64], b: &[i64]) -> Result<i64> {
    let k = q.vertex_count();
    for v in [a, b] {
        if v.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                found: v.len(),
            });
        }
    }
    let diagonal: i64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let arrows: i64 = q
        .arrows()
        .iter()
        .map(|arrow| a[arrow.source] * b[arrow.target])
        .sum();
    Ok(diagonal - arrows)
}

pub fn euler_pairing(q: &Quiver, a: &DimensionVector, b: &DimensionVector) -> Result<i64> {
    euler_form(q, &a.to_signed(), &b.to_signed())
}

/// `chi(delta_v, b)` for a unit vector at `v`.
pub(crate) fn euler_unit_left(q: &Quiver, v: usize, b: &[i64]) -> i64 {
    b[v] - (0..q.vertex_count())
        .map(|w| i64::from(q.arrow_count(v, w)) * b[w])
        .sum::<i64>()
}

/// `chi(b, delta_v)` for a unit vector at `v`.
pub(crate) fn euler_unit_right(q: &Quiver, b: &[i64], v: usize) -> i64 {
    b[v] - (0..q.vertex_count())
        .map(|u| i64::from(q.arrow_count(u, v)) * b[u])
        .sum::<i64>()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SettingDocument {
    vertices: usize,
    arrows: Vec<ArrowDocument>,
    dimension: Vec<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrowDocument {
    id: String,
    source: usize,
    target: usize,
}

/// Parses a setting document:
///
/// ```json
/// {
///   "vertices": 2,
///   "arrows": [{"id": "x1", "source": 1, "target": 2}],
///   "dimension": [1, 1]
/// }
/// ```
///
/// Vertex indices in the document are 1-based.
pub fn parse_setting(text: &str) -> Result<QuiverSetting> {
    let doc: SettingDocument = serde_json::from_str(text)?;
    if doc.vertices == 0 {
        return Err(Error::schema("vertices", "a quiver needs at least one vertex"));
    }
    let mut arrows = Vec::with_capacity(doc.arrows.len());
    for (i, a) in doc.arrows.into_iter().enumerate() {
        for (name, v) in [("source", a.source), ("target", a.target)] {
            if v == 0 || v > doc.vertices {
                return Err(Error::schema(
                    format!("arrows[{i}].{name}"),
                    format!("vertex {v} out of range 1..={} (arrow `{}`)", doc.vertices, a.id),
                ));
            }
        }
        arrows.push(Arrow::new(a.id, a.source - 1, a.target - 1));
    }
    let quiver = Quiver::new(doc.vertices, arrows)?;
    if doc.dimension.len() != doc.vertices {
        return Err(Error::schema(
            "dimension",
            format!(
                "expected {} entries, found {}",
                doc.vertices,
                doc.dimension.len()
            ),
        ));
    }
    let dim = DimensionVector(doc.dimension);
    if dim.is_zero() {
        return Err(Error::schema("dimension", "dimension vector is zero"));
    }
    QuiverSetting::new(quiver, dim)
}

/// Canonical text of a setting: arrows sorted by id, one per line.
pub fn serialize_setting(s: &QuiverSetting) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"vertices\": {},\n", s.vertex_count()));
    out.push_str("  \"arrows\": [");
    let arrows = s.quiver.arrows();
    for (i, a) in arrows.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str(&format!(
            "    {{\"id\": {}, \"source\": {}, \"target\": {}}}",
            serde_json::to_string(&a.id).expect("string serialization"),
            a.source + 1,
            a.target + 1
        ));
    }
    if !arrows.is_empty() {
        out.push_str("\n  ");
    }
    out.push_str("],\n");
    let dims: Vec<String> = s.dim.0.iter().map(u32::to_string).collect();
    out.push_str(&format!("  \"dimension\": [{}]\n", dims.join(", ")));
    out.push_str("}\n");
    out
}

/// Structured JSON value of a setting (used inside reports).
pub fn setting_to_json(s: &QuiverSetting) -> serde_json::Value {
    serde_json::json!({
        "vertices": s.vertex_count(),
        "arrows": s.quiver.arrows().iter().map(|a| serde_json::json!({
            "id": a.id,
            "source": a.source + 1,
            "target": a.target + 1,
        })).collect::<Vec<_>>(),
        "dimension": s.dim.0,
    })
}

/// Finds a fresh id starting from `base`, priming it until unused.
pub(crate) fn fresh_id(base: String, taken: &BTreeSet<String>) -> String {
    let mut id = base;
    while taken.contains(&id) {
        id.push('\'');
    }
    id
}

/// The conifold quiver: arrows `x1, x2: 1 -> 2` and `y1, y2: 2 -> 1`.
pub fn conifold_quiver() -> Quiver {
    Quiver::new(
        2,
        vec![
            Arrow::new("x1", 0, 1),
            Arrow::new("x2", 0, 1),
            Arrow::new("y1", 1, 0),
            Arrow::new("y2", 1, 0),
        ],
    )
    .expect("conifold quiver is valid")
}

/// The conifold setting with dimension vector `(1, 1)`.
pub fn conifold_setting() -> QuiverSetting {
    QuiverSetting::new(conifold_quiver(), DimensionVector::ones(2)).expect("valid")
}
