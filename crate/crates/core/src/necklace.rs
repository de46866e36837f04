//! Paths, necklaces, superpotentials and cyclic derivatives.
//!
//! Composition is read left to right: the path `pq` traverses `p` first.
//! Arrows are referred to by their index in the quiver, and since arrows are
//! sorted by id, comparing index sequences is the same as comparing id
//! sequences.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::quiver::Quiver;

/// An oriented path. The empty path at `v` is the idempotent `e_v`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    arrows: Vec<usize>,
    source: usize,
    target: usize,
}

impl Path {
    /// A nonempty path; consecutive arrows must compose.
    pub fn new(q: &Quiver, arrows: Vec<usize>) -> Result<Self> {
        let (Some(&first), Some(&last)) = (arrows.first(), arrows.last()) else {
            return Err(Error::precondition("a path needs an arrow or an explicit vertex"));
        };
        if let Some(&bad) = arrows.iter().find(|&&a| a >= q.arrows().len()) {
            return Err(Error::precondition(format!("arrow index {bad} out of range")));
        }
        for w in arrows.windows(2) {
            let (a, b) = (q.arrow(w[0]), q.arrow(w[1]));
            if a.target != b.source {
                return Err(Error::precondition(format!(
                    "`{}` ends at vertex {} but `{}` starts at vertex {}",
                    a.id,
                    a.target + 1,
                    b.id,
                    b.source + 1
                )));
            }
        }
        let source = q.arrow(first).source;
        let target = q.arrow(last).target;
        Ok(Path {
            arrows,
            source,
            target,
        })
    }

    pub fn idempotent(v: usize) -> Self {
        Path {
            arrows: Vec::new(),
            source: v,
            target: v,
        }
    }

    /// Builds a path from arrow ids.
    pub fn from_ids<S: AsRef<str>>(q: &Quiver, ids: &[S]) -> Result<Self> {
        let arrows = ids
            .iter()
            .map(|id| {
                q.arrow_index(id.as_ref())
                    .ok_or_else(|| Error::precondition(format!("unknown arrow `{}`", id.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Path::new(q, arrows)
    }

    pub fn arrows(&self) -> &[usize] {
        &self.arrows
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn len(&self) -> usize {
        self.arrows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrows.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.source == self.target
    }

    /// `self` followed by `other`, if they compose.
    pub fn compose(&self, other: &Path) -> Option<Path> {
        if self.target != other.source {
            return None;
        }
        let mut arrows = self.arrows.clone();
        arrows.extend_from_slice(&other.arrows);
        Some(Path {
            arrows,
            source: self.source,
            target: other.target,
        })
    }

    pub fn ids<'q>(&self, q: &'q Quiver) -> Vec<&'q str> {
        self.arrows.iter().map(|&a| q.arrow(a).id.as_str()).collect()
    }

    /// Arrow ids separated by spaces; `e{v}` (1-based) for an idempotent.
    pub fn render(&self, q: &Quiver) -> String {
        if self.arrows.is_empty() {
            format!("e{}", self.source + 1)
        } else {
            self.ids(q).join(" ")
        }
    }
}

fn minimal_rotation(word: &[usize]) -> Vec<usize> {
    (0..word.len())
        .map(|r| [&word[r..], &word[..r]].concat())
        .min()
        .unwrap_or_default()
}

/// A closed path up to rotation, stored as its lexicographically minimal
/// rotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Necklace {
    arrows: Vec<usize>,
}

impl Necklace {
    pub fn arrows(&self) -> &[usize] {
        &self.arrows
    }

    pub fn len(&self) -> usize {
        self.arrows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrows.is_empty()
    }

    /// The stored rotation as a path.
    pub fn to_path(&self, q: &Quiver) -> Path {
        Path::new(q, self.arrows.clone()).expect("necklaces are composable")
    }

    /// Every rotation, starting with the stored one.
    pub fn rotations(&self) -> Vec<Vec<usize>> {
        let w = &self.arrows;
        (0..w.len()).map(|r| [&w[r..], &w[..r]].concat()).collect()
    }

    pub fn from_ids<S: AsRef<str>>(q: &Quiver, ids: &[S]) -> Result<Self> {
        canonical_necklace(&Path::from_ids(q, ids)?)
    }

    pub fn render(&self, q: &Quiver) -> String {
        self.to_path(q).render(q)
    }
}

/// The necklace of a closed nonempty path.
pub fn canonical_necklace(p: &Path) -> Result<Necklace> {
    if p.is_empty() {
        return Err(Error::precondition("a necklace needs at least one arrow"));
    }
    if !p.is_closed() {
        return Err(Error::precondition(format!(
            "path from vertex {} to vertex {} is not closed",
            p.source + 1,
            p.target + 1
        )));
    }
    Ok(Necklace {
        arrows: minimal_rotation(&p.arrows),
    })
}

/// A rational combination of necklaces with no zero coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Superpotential {
    terms: BTreeMap<Necklace, BigRational>,
}

impl Superpotential {
    pub fn zero() -> Self {
        Superpotential::default()
    }

    pub fn add_term(&mut self, necklace: Necklace, coefficient: BigRational) {
        add_coefficient(&mut self.terms, necklace, coefficient);
    }

    pub fn terms(&self) -> &BTreeMap<Necklace, BigRational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn render(&self, q: &Quiver) -> String {
        render_terms(self.terms.iter().map(|(n, c)| (format!("[{}]", n.render(q)), c)))
    }
}

fn add_coefficient<K: Ord>(terms: &mut BTreeMap<K, BigRational>, key: K, c: BigRational) {
    match terms.entry(key) {
        Entry::Occupied(mut e) => {
            *e.get_mut() += c;
            if e.get().is_zero() {
                e.remove();
            }
        }
        Entry::Vacant(e) => {
            if !c.is_zero() {
                e.insert(c);
            }
        }
    }
}

fn render_terms<'a>(terms: impl Iterator<Item = (String, &'a BigRational)>) -> String {
    let mut out = String::new();
    for (i, (word, c)) in terms.enumerate() {
        let sign = if c.is_negative() { "-" } else { "+" };
        if i == 0 {
            if c.is_negative() {
                out.push('-');
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        let magnitude = c.abs();
        if magnitude.is_one() {
            out.push_str(&word);
        } else {
            let _ = write!(out, "{magnitude}*{word}");
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// A rational combination of paths.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathPolynomial {
    terms: BTreeMap<Path, BigRational>,
}

impl PathPolynomial {
    pub fn zero() -> Self {
        PathPolynomial::default()
    }

    pub fn add_term(&mut self, path: Path, coefficient: BigRational) {
        add_coefficient(&mut self.terms, path, coefficient);
    }

    pub fn terms(&self) -> &BTreeMap<Path, BigRational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The common `(source, target)` of all terms, if there is one.
    pub fn endpoints(&self) -> Option<(usize, usize)> {
        let mut ends = self.terms.keys().map(|p| (p.source, p.target));
        let first = ends.next()?;
        ends.all(|e| e == first).then_some(first)
    }

    pub fn scale(&self, c: &BigRational) -> PathPolynomial {
        let mut out = PathPolynomial::zero();
        for (p, x) in &self.terms {
            out.add_term(p.clone(), x * c);
        }
        out
    }

    /// Divides by the coefficient of the first term, so that two
    /// proportional polynomials normalize to the same value.
    pub fn normalized(&self) -> PathPolynomial {
        match self.terms.values().next() {
            Some(lead) => self.scale(&lead.recip()),
            None => self.clone(),
        }
    }

    /// The scalar `c` with `self = c * other`, if one exists.
    pub fn ratio_to(&self, other: &PathPolynomial) -> Option<BigRational> {
        let (p, x) = self.terms.iter().next()?;
        let c = x / other.terms.get(p)?;
        (other.scale(&c) == *self).then_some(c)
    }

    pub fn render(&self, q: &Quiver) -> String {
        render_terms(self.terms.iter().map(|(p, c)| (p.render(q), c)))
    }
}

/// The cyclic derivative: every occurrence of `a` in every necklace is
/// removed and the necklace is read from the letter after it, giving paths
/// from the target of `a` to its source.
pub fn partial_derivative(q: &Quiver, w: &Superpotential, a: usize) -> PathPolynomial {
    let mut out = PathPolynomial::zero();
    for (necklace, c) in w.terms() {
        let word = necklace.arrows();
        for (i, _) in word.iter().enumerate().filter(|(_, &b)| b == a) {
            let opened: Vec<usize> = word[i + 1..].iter().chain(&word[..i]).copied().collect();
            let path = if opened.is_empty() {
                Path::idempotent(q.arrow(a).target)
            } else {
                Path::new(q, opened).expect("an opened necklace composes")
            };
            out.add_term(path, c.clone());
        }
    }
    out
}

/// One relation `dW/da`, kept even when zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub arrow: usize,
    /// Target of the arrow: every path of the relation starts here.
    pub source: usize,
    /// Source of the arrow: every path of the relation ends here.
    pub target: usize,
    pub polynomial: PathPolynomial,
}

impl Relation {
    pub fn is_zero(&self) -> bool {
        self.polynomial.is_zero()
    }
}

/// `dW/da` for every arrow, in arrow-id order.
pub fn vacualgebra_relations(q: &Quiver, w: &Superpotential) -> Vec<Relation> {
    (0..q.arrows().len())
        .map(|a| Relation {
            arrow: a,
            source: q.arrow(a).target,
            target: q.arrow(a).source,
            polynomial: partial_derivative(q, w, a),
        })
        .collect()
}

/// Whether every arrow lies on an oriented cycle of length at most three.
pub fn is_cubic(q: &Quiver) -> bool {
    let adj = q.adjacency();
    let n = q.vertex_count();
    q.arrows().iter().all(|a| {
        let (s, t) = (a.source, a.target);
        s == t || adj[t][s] > 0 || (0..n).any(|w| adj[t][w] > 0 && adj[w][s] > 0)
    })
}

/// Noncommutative polynomial in arrows, with scalars central; non-composable
/// products vanish.
type Poly = BTreeMap<Vec<usize>, BigRational>;

fn poly_constant(c: BigRational) -> Poly {
    let mut p = Poly::new();
    add_coefficient(&mut p, Vec::new(), c);
    p
}

fn poly_add(mut a: Poly, b: Poly, sign: i32) -> Poly {
    for (w, c) in b {
        let c = if sign < 0 { -c } else { c };
        add_coefficient(&mut a, w, c);
    }
    a
}

fn poly_mul(q: &Quiver, a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (u, x) in a {
        for (v, y) in b {
            if let (Some(&last), Some(&first)) = (u.last(), v.first()) {
                if q.arrow(last).target != q.arrow(first).source {
                    continue;
                }
            }
            add_coefficient(&mut out, [u.as_slice(), v].concat(), x * y);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(BigRational),
    Arrow(usize),
    Param(String),
    Plus,
    Minus,
    Star,
    Caret,
    Open,
    Close,
}

struct Lexer<'a> {
    text: &'a str,
    names: Vec<(String, Option<usize>)>,
}

impl Lexer<'_> {
    fn error(&self, offset: usize, message: impl Into<String>) -> Error {
        let before = &self.text[..offset];
        let line = before.matches('\n').count() + 1;
        let column = before.chars().rev().take_while(|&c| c != '\n').count() + 1;
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    fn tokens(&self) -> Result<Vec<(usize, Token)>> {
        let mut out = Vec::new();
        let mut i = 0;
        let bytes = self.text.as_bytes();
        while i < self.text.len() {
            let rest = &self.text[i..];
            let c = rest.chars().next().expect("in range");
            if c.is_whitespace() {
                i += c.len_utf8();
                continue;
            }
            let simple = match c {
                '+' => Some(Token::Plus),
                '-' => Some(Token::Minus),
                '*' => Some(Token::Star),
                '^' => Some(Token::Caret),
                '(' => Some(Token::Open),
                ')' => Some(Token::Close),
                _ => None,
            };
            if let Some(t) = simple {
                out.push((i, t));
                i += 1;
                continue;
            }
            if c.is_ascii_digit() {
                let mut end = i;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
                if end < bytes.len() && bytes[end] == b'/' {
                    end += 1;
                    let start = end;
                    while end < bytes.len() && bytes[end].is_ascii_digit() {
                        end += 1;
                    }
                    if start == end {
                        return Err(self.error(i, "denominator expected after `/`"));
                    }
                }
                let value = parse_rational(&self.text[i..end])
                    .map_err(|_| self.error(i, format!("bad number `{}`", &self.text[i..end])))?;
                out.push((i, Token::Number(value)));
                i = end;
                continue;
            }
            let matched = self
                .names
                .iter()
                .filter(|(name, _)| rest.starts_with(name.as_str()))
                .max_by_key(|(name, _)| name.len());
            match matched {
                Some((name, Some(arrow))) => {
                    out.push((i, Token::Arrow(*arrow)));
                    i += name.len();
                }
                Some((name, None)) => {
                    out.push((i, Token::Param(name.clone())));
                    i += name.len();
                }
                None => {
                    let word: String = rest.chars().take_while(|c| c.is_alphanumeric()).collect();
                    let shown = if word.is_empty() { c.to_string() } else { word };
                    return Err(self.error(i, format!("unknown symbol `{shown}`")));
                }
            }
        }
        Ok(out)
    }
}

struct Parser<'a> {
    q: &'a Quiver,
    lexer: &'a Lexer<'a>,
    tokens: Vec<(usize, Token)>,
    pos: usize,
    params: &'a BTreeMap<String, BigRational>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map_or(self.lexer.text.len(), |(o, _)| *o)
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut sign = 1;
        match self.peek() {
            Some(Token::Minus) => {
                sign = -1;
                self.pos += 1;
            }
            Some(Token::Plus) => self.pos += 1,
            _ => {}
        }
        let mut acc = poly_add(Poly::new(), self.term()?, sign);
        loop {
            let sign = match self.peek() {
                Some(Token::Plus) => 1,
                Some(Token::Minus) => -1,
                _ => return Ok(acc),
            };
            self.pos += 1;
            let t = self.term()?;
            acc = poly_add(acc, t, sign);
        }
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => self.pos += 1,
                Some(Token::Number(_) | Token::Arrow(_) | Token::Param(_) | Token::Open) => {}
                _ => return Ok(acc),
            }
            let f = self.factor()?;
            acc = poly_mul(self.q, &acc, &f);
        }
    }

    fn factor(&mut self) -> Result<Poly> {
        let base = self.primary()?;
        if self.peek() != Some(&Token::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let offset = self.offset();
        let exponent = match self.tokens.get(self.pos) {
            Some((_, Token::Number(n))) if n.is_integer() && !n.is_negative() => n.to_integer(),
            _ => return Err(self.lexer.error(offset, "exponent must be a nonnegative integer")),
        };
        self.pos += 1;
        let exponent: u32 = exponent
            .try_into()
            .ok()
            .filter(|&e| e <= 64)
            .ok_or_else(|| self.lexer.error(offset, "exponent too large"))?;
        let mut out = poly_constant(BigRational::one());
        for _ in 0..exponent {
            out = poly_mul(self.q, &out, &base);
        }
        Ok(out)
    }

    fn primary(&mut self) -> Result<Poly> {
        let offset = self.offset();
        let token = self.tokens.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        match token {
            Some(Token::Number(n)) => Ok(poly_constant(n)),
            Some(Token::Arrow(a)) => Ok(Poly::from([(vec![a], BigRational::one())])),
            Some(Token::Param(name)) => Ok(poly_constant(self.params[&name].clone())),
            Some(Token::Open) => {
                let inner = self.expr()?;
                if self.peek() != Some(&Token::Close) {
                    return Err(self.lexer.error(self.offset(), "expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(_) => Err(self.lexer.error(offset, "expected a number, arrow or `(`")),
            None => Err(self.lexer.error(offset, "unexpected end of expression")),
        }
    }
}

fn parse_rational(text: &str) -> std::result::Result<BigRational, ()> {
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let num = BigInt::from_str(num.trim()).map_err(|_| ())?;
    let den = BigInt::from_str(den.trim()).map_err(|_| ())?;
    if den.is_zero() {
        return Err(());
    }
    Ok(BigRational::new(num, den))
}

/// Parameters that default to one when the caller does not bind them.
const DEFAULT_PARAMETERS: [&str; 2] = ["lambda", "λ"];

/// Expands a polynomial expression in arrows into a superpotential.
///
/// Tokens are numbers (`3`, `2/5`), arrow ids, parameter names, `+ - * ^`
/// and parentheses; juxtaposition multiplies and identifiers are matched
/// greedily, so `x1y1` reads as `x1 y1`. Products that do not compose vanish.
/// Every surviving word must be a nonempty cycle.
pub fn expand_superpotential(
    q: &Quiver,
    expr: &str,
    params: &BTreeMap<String, BigRational>,
) -> Result<Superpotential> {
    let mut params = params.clone();
    for name in DEFAULT_PARAMETERS {
        params.entry(name.to_string()).or_insert_with(BigRational::one);
    }
    let mut names: Vec<(String, Option<usize>)> = Vec::new();
    for (i, a) in q.arrows().iter().enumerate() {
        names.push((a.id.clone(), Some(i)));
    }
    for name in params.keys() {
        if q.arrow_index(name).is_some() {
            return Err(Error::schema(
                format!("parameters.{name}"),
                "parameter name collides with an arrow id",
            ));
        }
        names.push((name.clone(), None));
    }
    let lexer = Lexer { text: expr, names };
    let tokens = lexer.tokens()?;
    let mut parser = Parser {
        q,
        lexer: &lexer,
        tokens,
        pos: 0,
        params: &params,
    };
    let poly = parser.expr()?;
    if parser.pos < parser.tokens.len() {
        return Err(lexer.error(parser.offset(), "unexpected token"));
    }
    let mut w = Superpotential::zero();
    for (word, c) in poly {
        if word.is_empty() {
            return Err(Error::precondition(format!(
                "expansion leaves the constant term {c}"
            )));
        }
        let path = Path::new(q, word)?;
        if !path.is_closed() {
            return Err(Error::precondition(format!(
                "term `{}` is not a cycle",
                path.render(q)
            )));
        }
        w.add_term(canonical_necklace(&path)?, c);
    }
    Ok(w)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDocument {
    coefficient: String,
    cycle: Vec<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SuperpotentialDocument {
    Terms {
        terms: Vec<TermDocument>,
    },
    Expression {
        expression: String,
        #[serde(default)]
        parameters: BTreeMap<String, String>,
    },
}

/// Parses a superpotential document, either explicit terms
/// `{"terms": [{"coefficient": "p/q", "cycle": ["a", ...]}]}` or an
/// expression `{"expression": "...", "parameters": {"lambda": "1"}}`.
pub fn parse_superpotential(q: &Quiver, text: &str) -> Result<Superpotential> {
    let value: Value = serde_json::from_str(text)?;
    let doc: SuperpotentialDocument = serde_json::from_value(value).map_err(|_| {
        Error::schema(
            "superpotential",
            "expected {\"terms\": [...]} or {\"expression\": \"...\"}",
        )
    })?;
    match doc {
        SuperpotentialDocument::Terms { terms } => {
            let mut w = Superpotential::zero();
            for (i, t) in terms.iter().enumerate() {
                let c = parse_rational(&t.coefficient).map_err(|_| {
                    Error::schema(
                        format!("terms[{i}].coefficient"),
                        format!("`{}` is not a rational p/q", t.coefficient),
                    )
                })?;
                let necklace = Necklace::from_ids(q, &t.cycle).map_err(|e| {
                    Error::schema(format!("terms[{i}].cycle"), e.to_string())
                })?;
                w.add_term(necklace, c);
            }
            Ok(w)
        }
        SuperpotentialDocument::Expression {
            expression,
            parameters,
        } => {
            let mut params = BTreeMap::new();
            for (name, value) in parameters {
                let c = parse_rational(&value).map_err(|_| {
                    Error::schema(
                        format!("parameters.{name}"),
                        format!("`{value}` is not a rational p/q"),
                    )
                })?;
                params.insert(name, c);
            }
            expand_superpotential(q, &expression, &params)
        }
    }
}

pub fn superpotential_to_json(q: &Quiver, w: &Superpotential) -> Value {
    json!({
        "terms": w.terms().iter().map(|(n, c)| json!({
            "coefficient": c.to_string(),
            "cycle": n.to_path(q).ids(q),
        })).collect::<Vec<_>>(),
    })
}

pub fn relation_to_json(q: &Quiver, r: &Relation) -> Value {
    json!({
        "arrow": q.arrow(r.arrow).id,
        "source": r.source + 1,
        "target": r.target + 1,
        "zero": r.is_zero(),
        "terms": r.polynomial.terms().iter().map(|(p, c)| json!({
            "coefficient": c.to_string(),
            "path": p.ids(q),
        })).collect::<Vec<_>>(),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationTermDocument {
    coefficient: String,
    path: Vec<String>,
}

#[derive(Deserialize)]
struct RelationDocument {
    source: usize,
    target: usize,
    terms: Vec<RelationTermDocument>,
}

/// Parses relations in the format written by [`relation_to_json`], either a
/// bare list or `{"relations": [...]}`. Extra fields are ignored.
pub fn parse_relations(q: &Quiver, text: &str) -> Result<Vec<PathPolynomial>> {
    let value: Value = serde_json::from_str(text)?;
    let list = match value {
        Value::Object(mut map) => map
            .remove("relations")
            .ok_or_else(|| Error::schema("relations", "missing"))?,
        other => other,
    };
    let docs: Vec<RelationDocument> = serde_json::from_value(list)?;
    let mut out = Vec::with_capacity(docs.len());
    for (i, doc) in docs.into_iter().enumerate() {
        for (name, v) in [("source", doc.source), ("target", doc.target)] {
            if v == 0 || v > q.vertex_count() {
                return Err(Error::schema(
                    format!("relations[{i}].{name}"),
                    format!("vertex {v} out of range"),
                ));
            }
        }
        let mut poly = PathPolynomial::zero();
        for (j, t) in doc.terms.iter().enumerate() {
            let field = format!("relations[{i}].terms[{j}]");
            let c = parse_rational(&t.coefficient).map_err(|_| {
                Error::schema(format!("{field}.coefficient"), "not a rational p/q")
            })?;
            let path = if t.path.is_empty() {
                if doc.source != doc.target {
                    return Err(Error::schema(
                        format!("{field}.path"),
                        "an empty path needs equal endpoints",
                    ));
                }
                Path::idempotent(doc.source - 1)
            } else {
                Path::from_ids(q, &t.path)
                    .map_err(|e| Error::schema(format!("{field}.path"), e.to_string()))?
            };
            if (path.source + 1, path.target + 1) != (doc.source, doc.target) {
                return Err(Error::schema(
                    format!("{field}.path"),
                    "path endpoints differ from the relation's",
                ));
            }
            poly.add_term(path, c);
        }
        out.push(poly);
    }
    Ok(out)
}

/// Arrows appearing in `w`.
pub fn support_arrows(w: &Superpotential) -> BTreeSet<usize> {
    w.terms()
        .keys()
        .flat_map(|n| n.arrows().iter().copied())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiver::conifold_quiver;
    use proptest::prelude::*;

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn path(q: &Quiver, ids: &[&str]) -> Path {
        Path::from_ids(q, ids).unwrap()
    }

    fn necklace(q: &Quiver, ids: &[&str]) -> Necklace {
        Necklace::from_ids(q, ids).unwrap()
    }

    fn loop_quiver(loops: u32) -> Quiver {
        Quiver::from_adjacency(&[vec![loops]]).unwrap()
    }

    fn conifold_w(q: &Quiver) -> Superpotential {
        expand_superpotential(
            q,
            "lambda*((x1y2 - x2y1)^2 - (y1x2 - y2x1)^2)",
            &BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn paths_compose_left_to_right() {
        let q = conifold_quiver();
        let p = path(&q, &["x1", "y1"]);
        assert_eq!((p.source(), p.target()), (0, 0));
        assert!(Path::from_ids(&q, &["x1", "x2"]).is_err());
        let xy = path(&q, &["x1"]).compose(&path(&q, &["y2"])).unwrap();
        assert_eq!(xy, path(&q, &["x1", "y2"]));
        assert!(path(&q, &["x1"]).compose(&path(&q, &["x2"])).is_none());
        assert_eq!(Path::idempotent(1).render(&q), "e2");
    }

    #[test]
    fn necklace_examples() {
        let q = conifold_quiver();
        assert_eq!(necklace(&q, &["x1", "y1"]), necklace(&q, &["y1", "x1"]));
        assert_eq!(
            necklace(&q, &["x1", "y2", "x2", "y1"]),
            necklace(&q, &["x2", "y1", "x1", "y2"])
        );
        assert_ne!(
            necklace(&q, &["x1", "y1", "x2", "y2"]),
            necklace(&q, &["x1", "y2", "x2", "y1"])
        );
        let l = loop_quiver(1);
        assert_eq!(necklace(&l, &["a1_1_1"]).arrows(), &[0]);
        assert!(canonical_necklace(&path(&q, &["x1"])).is_err());
        assert!(canonical_necklace(&Path::idempotent(0)).is_err());
    }

    #[test]
    fn derivative_examples() {
        let q = conifold_quiver();
        let mut w = Superpotential::zero();
        w.add_term(necklace(&q, &["x1", "y1", "x2", "y2"]), r(1));
        let d = partial_derivative(&q, &w, q.arrow_index("x1").unwrap());
        let mut expected = PathPolynomial::zero();
        expected.add_term(path(&q, &["y1", "x2", "y2"]), r(1));
        assert_eq!(d, expected);
        assert!(partial_derivative(&q, &Superpotential::zero(), 0).is_zero());

        let mut w = Superpotential::zero();
        w.add_term(necklace(&q, &["x1", "y1"]), r(1));
        assert!(partial_derivative(&q, &w, q.arrow_index("x2").unwrap()).is_zero());
    }

    #[test]
    fn conifold_expansion_and_relations() {
        let q = conifold_quiver();
        let w = conifold_w(&q);
        let mut expected = Superpotential::zero();
        expected.add_term(necklace(&q, &["x1", "y1", "x2", "y2"]), r(2));
        expected.add_term(necklace(&q, &["x1", "y2", "x2", "y1"]), r(-2));
        assert_eq!(w, expected);

        let rels = vacualgebra_relations(&q, &w);
        let shown: Vec<String> = rels.iter().map(|r| r.polynomial.render(&q)).collect();
        assert_eq!(
            shown,
            vec![
                "2*y1 x2 y2 - 2*y2 x2 y1",
                "-2*y1 x1 y2 + 2*y2 x1 y1",
                "-2*x1 y2 x2 + 2*x2 y2 x1",
                "2*x1 y1 x2 - 2*x2 y1 x1",
            ]
        );
        for rel in &rels {
            assert_eq!(
                rel.polynomial.endpoints(),
                Some((rel.source, rel.target))
            );
        }
    }

    #[test]
    fn three_cycle_relations() {
        let q = Quiver::new(
            3,
            vec![
                crate::quiver::Arrow::new("a", 0, 1),
                crate::quiver::Arrow::new("b", 1, 2),
                crate::quiver::Arrow::new("c", 2, 0),
            ],
        )
        .unwrap();
        let w = expand_superpotential(&q, "abc", &BTreeMap::new()).unwrap();
        let shown: Vec<String> = vacualgebra_relations(&q, &w)
            .iter()
            .map(|r| r.polynomial.render(&q))
            .collect();
        assert_eq!(shown, vec!["b c", "c a", "a b"]);
        assert!(is_cubic(&q));
        assert!(vacualgebra_relations(&q, &Superpotential::zero())
            .iter()
            .all(Relation::is_zero));
    }

    #[test]
    fn expansion_edge_cases() {
        let q = conifold_quiver();
        let none = BTreeMap::new();
        assert!(expand_superpotential(&q, "x1 x2", &none).unwrap().is_zero());
        assert!(expand_superpotential(&q, "x1 * y1 - y1 x1", &none).unwrap().is_zero());
        assert!(matches!(
            expand_superpotential(&q, "x1 y1 x2", &none),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            expand_superpotential(&q, "3 + x1y1", &none),
            Err(Error::Precondition(_))
        ));
        match expand_superpotential(&q, "x1 y1 + z", &none) {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 9),
            other => panic!("unexpected {other:?}"),
        }
        assert!(expand_superpotential(&q, "(x1 y1", &none).is_err());
        let params = BTreeMap::from([("t".to_string(), BigRational::new(3.into(), 2.into()))]);
        let w = expand_superpotential(&q, "t x1y1 + 1/2 y1x1", &params).unwrap();
        assert_eq!(w.terms().values().next(), Some(&r(2)));

        let l = loop_quiver(1);
        let w = expand_superpotential(&l, "a1_1_1^2", &none).unwrap();
        assert_eq!(w.terms().len(), 1);
        assert_eq!(w.terms()[&necklace(&l, &["a1_1_1", "a1_1_1"])], r(1));
    }

    #[test]
    fn cubic_examples() {
        assert!(is_cubic(&conifold_quiver()));
        let path = Quiver::from_adjacency(&[vec![0, 1], vec![0, 0]]).unwrap();
        assert!(!is_cubic(&path));
        assert!(!is_cubic(&Quiver::cyclic(&[1, 1, 1, 1]).unwrap()));
        assert!(is_cubic(&Quiver::cyclic(&[1, 1, 1]).unwrap()));
        assert!(is_cubic(&loop_quiver(2)));
    }

    #[test]
    fn documents_round_trip() {
        let q = conifold_quiver();
        let w = conifold_w(&q);
        let text = superpotential_to_json(&q, &w).to_string();
        assert_eq!(parse_superpotential(&q, &text).unwrap(), w);
        let doc = r#"{"expression": "l*(x1y1x2y2 - x1y2x2y1)", "parameters": {"l": "2"}}"#;
        assert_eq!(parse_superpotential(&q, doc).unwrap(), w);

        let rels = vacualgebra_relations(&q, &w);
        let text = Value::Array(rels.iter().map(|r| relation_to_json(&q, r)).collect()).to_string();
        let parsed = parse_relations(&q, &text).unwrap();
        let originals: Vec<PathPolynomial> = rels.into_iter().map(|r| r.polynomial).collect();
        assert_eq!(parsed, originals);

        let bad = r#"{"terms": [{"coefficient": "1/0", "cycle": ["x1", "y1"]}]}"#;
        assert!(matches!(parse_superpotential(&q, bad), Err(Error::Schema { .. })));
        let open = r#"{"terms": [{"coefficient": "1", "cycle": ["x1"]}]}"#;
        assert!(matches!(parse_superpotential(&q, open), Err(Error::Schema { .. })));
    }

    #[test]
    fn proportionality() {
        let q = conifold_quiver();
        let rels = vacualgebra_relations(&q, &conifold_w(&q));
        let p = &rels[0].polynomial;
        let half = p.scale(&BigRational::new(1.into(), 2.into()));
        assert_eq!(p.ratio_to(&half), Some(r(2)));
        assert_eq!(p.normalized(), half.normalized());
        assert_eq!(p.ratio_to(&rels[1].polynomial), None);
    }

    #[test]
    fn leibniz_on_powers() {
        for loops in 1..=2u32 {
            let q = loop_quiver(loops);
            for k in 1..=5usize {
                let mut w = Superpotential::zero();
                w.add_term(canonical_necklace(&Path::new(&q, vec![0; k]).unwrap()).unwrap(), r(1));
                let d = partial_derivative(&q, &w, 0);
                let expected_path = if k == 1 {
                    Path::idempotent(0)
                } else {
                    Path::new(&q, vec![0; k - 1]).unwrap()
                };
                let mut expected = PathPolynomial::zero();
                expected.add_term(expected_path, r(k as i64));
                assert_eq!(d, expected);
            }
        }
    }

    /// A random cycle in the complete quiver on `n` vertices with doubled
    /// arrows, from a sequence of choices.
    fn random_cycle(q: &Quiver, choices: &[usize]) -> Option<Vec<usize>> {
        let start = choices[0] % q.vertex_count();
        let mut v = start;
        let mut word = Vec::new();
        for &c in &choices[1..] {
            let out: Vec<usize> = (0..q.arrows().len()).filter(|&a| q.arrow(a).source == v).collect();
            let a = out[c % out.len()];
            word.push(a);
            v = q.arrow(a).target;
            if v == start && word.len() > 1 && c % 3 == 0 {
                return Some(word);
            }
        }
        (v == start && !word.is_empty()).then_some(word)
    }

    proptest! {
        #[test]
        fn derivative_ignores_stored_rotation(
            words in prop::collection::vec(prop::collection::vec(0usize..50, 2..8), 1..5),
            shifts in prop::collection::vec(0usize..8, 5),
            coefficients in prop::collection::vec(-3i64..4, 5),
        ) {
            let q = Quiver::from_adjacency(&[vec![1, 2, 1], vec![1, 0, 2], vec![2, 1, 1]]).unwrap();
            let mut canonical = Superpotential::zero();
            let mut rotated: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
            for (i, choices) in words.iter().enumerate() {
                let Some(word) = random_cycle(&q, choices) else { continue };
                let c = r(coefficients[i]);
                canonical.add_term(canonical_necklace(&Path::new(&q, word.clone()).unwrap()).unwrap(), c.clone());
                let s = shifts[i] % word.len();
                let rot = [&word[s..], &word[..s]].concat();
                add_coefficient(&mut rotated, rot, c);
            }
            // differentiate the rotated words directly, without canonicalizing
            for a in 0..q.arrows().len() {
                let mut direct = PathPolynomial::zero();
                for (word, c) in &rotated {
                    for i in (0..word.len()).filter(|&i| word[i] == a) {
                        let opened: Vec<usize> = word[i + 1..].iter().chain(&word[..i]).copied().collect();
                        let p = if opened.is_empty() { Path::idempotent(q.arrow(a).target) } else { Path::new(&q, opened).unwrap() };
                        direct.add_term(p, c.clone());
                    }
                }
                let d = partial_derivative(&q, &canonical, a);
                prop_assert_eq!(&d, &direct);
                if let Some(ends) = d.endpoints() {
                    prop_assert_eq!(ends, (q.arrow(a).target, q.arrow(a).source));
                } else {
                    prop_assert!(d.is_zero());
                }
            }
        }
    }
}
