//! Finite D-graphs, metric spaces, type functions, orbits and one-point
//! extensions.
//!
//! Points are enumeration indices `0..n`. Distances are stored as
//! [`DistIdx`] values in a lower-triangular table that grows by one row per
//! added point.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distset::{Dist, DistIdx, DistanceSet};
use crate::error::{Error, Result};

/// Symmetric edge-labelled complete graph with labels in `D`, zero exactly on
/// the diagonal. Not necessarily metric.
#[derive(Clone, PartialEq, Eq)]
pub struct DGraph {
    dset: Arc<DistanceSet>,
    // rows[i][j] = δ(i, j) for j < i
    rows: Vec<Vec<DistIdx>>,
}

impl std::fmt::Debug for DGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DGraph(n={}, D={{{}}})", self.len(), self.dset)
    }
}

impl DGraph {
    pub fn empty(dset: Arc<DistanceSet>) -> Self {
        DGraph { dset, rows: Vec::new() }
    }

    /// From a full symmetric matrix of distance values.
    pub fn from_matrix(dset: Arc<DistanceSet>, m: &[Vec<Dist>]) -> Result<Self> {
        let n = m.len();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            if m[i].len() != n {
                return Err(Error::Parse(format!("row {i} has {} entries, expected {n}", m[i].len())));
            }
            let mut row = Vec::with_capacity(i);
            for j in 0..n {
                if m[i][j] != m[j][i] {
                    return Err(Error::Parse(format!("asymmetric entry ({i},{j})")));
                }
                let idx = dset
                    .index_of(m[i][j])
                    .ok_or_else(|| Error::Parse(format!("distance {} at ({i},{j}) not in D", m[i][j])))?;
                if (idx == 0) != (i == j) {
                    return Err(Error::Parse(format!("zero distance must occur exactly on the diagonal ({i},{j})")));
                }
                if j < i {
                    row.push(idx);
                }
            }
            rows.push(row);
        }
        Ok(DGraph { dset, rows })
    }

    /// From index rows, `rows[i]` holding `δ(i, j)` for `j < i`.
    pub fn from_rows(dset: Arc<DistanceSet>, rows: Vec<Vec<DistIdx>>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if r.len() != i {
                return Err(Error::Parse(format!("row {i} has wrong length")));
            }
            if r.iter().any(|&v| v == 0 || v as usize >= dset.len()) {
                return Err(Error::Parse(format!("row {i} holds an invalid distance index")));
            }
        }
        Ok(DGraph { dset, rows })
    }

    pub fn dset(&self) -> &DistanceSet {
        &self.dset
    }

    pub fn dset_arc(&self) -> &Arc<DistanceSet> {
        &self.dset
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn points(&self) -> std::ops::Range<usize> {
        0..self.rows.len()
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> DistIdx {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Equal => 0,
            Less => self.rows[b][a],
            Greater => self.rows[a][b],
        }
    }

    pub fn dist_value(&self, a: usize, b: usize) -> Dist {
        self.dset.value(self.dist(a, b))
    }

    pub fn matrix(&self) -> Vec<Vec<Dist>> {
        let n = self.len();
        (0..n).map(|i| (0..n).map(|j| self.dist_value(i, j)).collect()).collect()
    }

    /// Exhaustive triangle check.
    pub fn is_metric(&self) -> bool {
        self.first_bad_triangle().is_none()
    }

    pub fn first_bad_triangle(&self) -> Option<(usize, usize, usize)> {
        let n = self.len();
        for i in 0..n {
            for j in 0..i {
                let dij = self.rows[i][j];
                for k in 0..j {
                    if !self.dset.triangle(dij, self.rows[i][k], self.rows[j][k]) {
                        return Some((k, j, i));
                    }
                }
            }
        }
        None
    }

    /// Distinct distance indices used.
    pub fn used_distances(&self) -> BTreeSet<DistIdx> {
        self.rows.iter().flatten().copied().collect()
    }

    pub(crate) fn push_row(&mut self, row: Vec<DistIdx>) {
        debug_assert_eq!(row.len(), self.rows.len());
        self.rows.push(row);
    }

    /// Induced sub-D-graph on `points` (in the given order).
    pub fn induced(&self, points: &[usize]) -> DGraph {
        let rows = (0..points.len())
            .map(|i| (0..i).map(|j| self.dist(points[i], points[j])).collect())
            .collect();
        DGraph { dset: self.dset.clone(), rows }
    }
}

/// A metric D-graph. The enumeration order is the index order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Space(DGraph);

impl std::ops::Deref for Space {
    type Target = DGraph;
    fn deref(&self) -> &DGraph {
        &self.0
    }
}

impl Space {
    pub fn empty(dset: Arc<DistanceSet>) -> Self {
        Space(DGraph::empty(dset))
    }

    pub fn single(dset: Arc<DistanceSet>) -> Self {
        let mut g = DGraph::empty(dset);
        g.push_row(Vec::new());
        Space(g)
    }

    pub fn from_dgraph(g: DGraph) -> Result<Self> {
        if let Some((a, b, c)) = g.first_bad_triangle() {
            return Err(Error::Precondition(format!("triangle ({a},{b},{c}) violates the triangle inequality")));
        }
        Ok(Space(g))
    }

    pub fn from_matrix(dset: Arc<DistanceSet>, m: &[Vec<Dist>]) -> Result<Self> {
        Space::from_dgraph(DGraph::from_matrix(dset, m)?)
    }

    pub fn from_ints(dset: &DistanceSet, m: &[&[i64]]) -> Result<Self> {
        let mm: Vec<Vec<Dist>> = m.iter().map(|r| r.iter().map(|&x| Dist::int(x)).collect()).collect();
        Space::from_matrix(Arc::new(dset.clone()), &mm)
    }

    pub fn graph(&self) -> &DGraph {
        &self.0
    }

    /// The type realized by `y` over `over` (points equal to `y` are skipped).
    pub fn type_of(&self, y: usize, over: &[usize]) -> TypeFn {
        let entries = over.iter().filter(|&&x| x != y).map(|&x| (x, self.dist(x, y))).collect();
        TypeFn::from_sorted_unchecked(entries)
    }

    /// Adds one point realizing `t`, completing `t` over the remaining points
    /// by `policy`.
    pub fn extend_in_place(&mut self, t: &TypeFn, policy: &mut Completion) -> Result<usize> {
        if !is_katetov(t, self) {
            return Err(Error::Precondition(format!("{t:?} is not a Katětov function")));
        }
        let n = self.len();
        let ds = self.0.dset.clone();
        let mut row: Vec<DistIdx> = vec![0; n];
        let mut assigned: Vec<usize> = Vec::with_capacity(n);
        for &(x, v) in t.entries() {
            row[x] = v;
            assigned.push(x);
        }
        for z in 0..n {
            if row[z] != 0 {
                continue;
            }
            let mut lo: DistIdx = 1;
            let mut hi: DistIdx = ds.max_idx();
            for &x in &assigned {
                let dxz = self.0.dist(x, z);
                let vx = row[x];
                lo = lo.max(ds.lower(vx, dxz));
                hi = hi.min(ds.upper(vx, dxz));
            }
            if lo > hi {
                return Err(Error::NoCompletion(format!("no distance from the new point to point {z} keeps the space metric")));
            }
            row[z] = policy.choose(lo, hi);
            assigned.push(z);
        }
        self.0.push_row(row);
        Ok(n)
    }

    /// Appends a point with the given distances to all existing points,
    /// checking metricity.
    pub fn push_checked(&mut self, row: Vec<DistIdx>) -> Result<usize> {
        if row.len() != self.len() {
            return Err(Error::Precondition("row length must equal the point count".into()));
        }
        let t = TypeFn::new(row.iter().copied().enumerate().collect())?;
        if !is_katetov(&t, self) {
            return Err(Error::Precondition("row is not a Katětov function".into()));
        }
        let n = self.len();
        self.0.push_row(row);
        Ok(n)
    }

    pub fn to_json(&self) -> SpaceJson {
        SpaceJson { d: (*self.0.dset).clone(), n: self.len(), dist: self.matrix() }
    }

    pub fn from_json(j: &SpaceJson) -> Result<Self> {
        if j.dist.len() != j.n {
            return Err(Error::Parse(format!("n = {} but {} rows", j.n, j.dist.len())));
        }
        Space::from_matrix(Arc::new(j.d.clone()), &j.dist)
    }

    /// Graphviz rendering with distance labels.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph space {\n");
        for i in self.points() {
            let _ = writeln!(s, "  v{i};");
        }
        for i in self.points() {
            for j in 0..i {
                let _ = writeln!(s, "  v{j} -- v{i} [label=\"{}\"];", self.dist_value(i, j));
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Space JSON: `{"D": [...], "n": k, "dist": [[...]]}` with rationals as strings.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SpaceJson {
    #[serde(rename = "D")]
    pub d: DistanceSet,
    pub n: usize,
    pub dist: Vec<Vec<Dist>>,
}

/// How `extend` picks distances to points outside the domain of the type.
pub enum Completion<'a> {
    /// Least admissible distance.
    Least,
    /// Uniform among admissible distances.
    Seeded(&'a mut ChaCha8Rng),
}

impl Completion<'_> {
    fn choose(&mut self, lo: DistIdx, hi: DistIdx) -> DistIdx {
        match self {
            Completion::Least => lo,
            Completion::Seeded(rng) => rng.gen_range(lo..=hi),
        }
    }
}

/// Partial map from finitely many points to positive distances.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TypeFn {
    entries: Vec<(usize, DistIdx)>,
}

impl std::fmt::Debug for TypeFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("(")?;
        for (i, (p, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "v{p}↦#{v}")?;
        }
        f.write_str(")")
    }
}

impl TypeFn {
    pub fn new(mut entries: Vec<(usize, DistIdx)>) -> Result<Self> {
        entries.sort_unstable();
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Precondition("type function assigns a point twice".into()));
        }
        if entries.iter().any(|&(_, v)| v == 0) {
            return Err(Error::Precondition("type function values must be positive".into()));
        }
        Ok(TypeFn { entries })
    }

    /// From distance values in `ds`.
    pub fn from_values(ds: &DistanceSet, entries: &[(usize, Dist)]) -> Result<Self> {
        let e = entries
            .iter()
            .map(|&(p, d)| ds.index_of(d).map(|i| (p, i)).ok_or_else(|| Error::Precondition(format!("{d} not in D"))))
            .collect::<Result<Vec<_>>>()?;
        TypeFn::new(e)
    }

    pub(crate) fn from_sorted_unchecked(entries: Vec<(usize, DistIdx)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        TypeFn { entries }
    }

    pub fn empty() -> Self {
        TypeFn { entries: Vec::new() }
    }

    pub fn entries(&self) -> &[(usize, DistIdx)] {
        &self.entries
    }

    pub fn domain(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, p: usize) -> Option<DistIdx> {
        self.entries.binary_search_by_key(&p, |e| e.0).ok().map(|i| self.entries[i].1)
    }

    pub fn contains(&self, p: usize) -> bool {
        self.get(p).is_some()
    }

    /// Adds or overwrites one value.
    pub fn with(&self, p: usize, v: DistIdx) -> TypeFn {
        assert!(v > 0, "type function values must be positive");
        let mut e = self.entries.clone();
        match e.binary_search_by_key(&p, |x| x.0) {
            Ok(i) => e[i].1 = v,
            Err(i) => e.insert(i, (p, v)),
        }
        TypeFn { entries: e }
    }

    /// Union of two functions agreeing on their common domain.
    pub fn union(&self, other: &TypeFn) -> Result<TypeFn> {
        let mut out = self.clone();
        for &(p, v) in &other.entries {
            match self.get(p) {
                Some(w) if w != v => return Err(Error::Precondition(format!("functions disagree at v{p}"))),
                _ => out = out.with(p, v),
            }
        }
        Ok(out)
    }

    pub fn restrict(&self, dom: &[usize]) -> TypeFn {
        TypeFn { entries: self.entries.iter().copied().filter(|e| dom.contains(&e.0)).collect() }
    }

    /// `self ⊆ other` as sets of pairs.
    pub fn is_sub(&self, other: &TypeFn) -> bool {
        self.entries.iter().all(|&(p, v)| other.get(p) == Some(v))
    }

    /// Minimum value index.
    pub fn rank(&self) -> Result<DistIdx> {
        self.entries
            .iter()
            .map(|e| e.1)
            .min()
            .ok_or_else(|| Error::Precondition("rank of the empty type function is undefined".into()))
    }

    pub fn map_points(&self, f: impl Fn(usize) -> usize) -> TypeFn {
        let mut e: Vec<_> = self.entries.iter().map(|&(p, v)| (f(p), v)).collect();
        e.sort_unstable();
        TypeFn { entries: e }
    }

    pub fn values_in(&self, ds: &DistanceSet) -> Vec<(usize, Dist)> {
        self.entries.iter().map(|&(p, v)| (p, ds.value(v))).collect()
    }
}

/// Injective map between point sets of two spaces.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Embedding {
    pairs: Vec<(usize, usize)>,
}

impl Embedding {
    pub fn new(mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        Embedding { pairs }
    }

    pub fn identity(points: impl IntoIterator<Item = usize>) -> Self {
        Embedding::new(points.into_iter().map(|p| (p, p)).collect())
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, src: usize) -> Option<usize> {
        self.pairs.binary_search_by_key(&src, |p| p.0).ok().map(|i| self.pairs[i].1)
    }

    pub fn insert(&mut self, src: usize, tgt: usize) {
        match self.pairs.binary_search_by_key(&src, |p| p.0) {
            Ok(i) => self.pairs[i].1 = tgt,
            Err(i) => self.pairs.insert(i, (src, tgt)),
        }
    }

    pub fn sources(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn images(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    pub fn is_injective(&self) -> bool {
        let set: BTreeSet<usize> = self.pairs.iter().map(|p| p.1).collect();
        set.len() == self.pairs.len()
    }

    /// Injective and `δ_target(α(x), α(y)) = δ_source(x, y)` for all pairs.
    pub fn preserves(&self, source: &DGraph, target: &DGraph) -> bool {
        if !self.is_injective() {
            return false;
        }
        if self.pairs.iter().any(|&(s, t)| s >= source.len() || t >= target.len()) {
            return false;
        }
        let (sd, td) = (source.dset(), target.dset());
        self.pairs.iter().enumerate().all(|(i, &(s1, t1))| {
            self.pairs[..i].iter().all(|&(s2, t2)| sd.value(source.dist(s1, s2)) == td.value(target.dist(t1, t2)))
        })
    }

    /// `then ∘ self`, defined where both are.
    pub fn then(&self, then: &Embedding) -> Embedding {
        Embedding::new(self.pairs.iter().filter_map(|&(s, m)| then.get(m).map(|t| (s, t))).collect())
    }

    pub fn restrict(&self, sources: &[usize]) -> Embedding {
        Embedding::new(self.pairs.iter().copied().filter(|p| sources.contains(&p.0)).collect())
    }
}

/// Result of [`restrict`]: the induced subspace plus original ids.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub space: Space,
    pub original: Vec<usize>,
}

pub fn is_metric(g: &DGraph) -> bool {
    g.is_metric()
}

/// Induced subspace on `a`, re-indexed in enumeration order.
pub fn restrict(s: &Space, a: &[usize]) -> Result<Restriction> {
    let mut pts: Vec<usize> = a.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if let Some(&p) = pts.iter().find(|&&p| p >= s.len()) {
        return Err(Error::Precondition(format!("point {p} outside the space")));
    }
    Ok(Restriction { space: Space(s.induced(&pts)), original: pts })
}

/// Pairwise check `|t(x) − t(y)| ≤ δ(x,y) ≤ t(x) + t(y)` over the domain.
pub fn is_katetov(t: &TypeFn, s: &Space) -> bool {
    let ds = s.dset();
    let e = t.entries();
    if e.iter().any(|&(p, v)| p >= s.len() || v == 0 || v as usize >= ds.len()) {
        return false;
    }
    e.iter()
        .enumerate()
        .all(|(i, &(x, tx))| e[..i].iter().all(|&(y, ty)| ds.between(s.dist(x, y), tx, ty)))
}

pub fn rank(t: &TypeFn) -> Result<DistIdx> {
    t.rank()
}

/// Points outside `dom(t)` realizing `t`.
pub fn orbit(t: &TypeFn, s: &Space) -> Vec<usize> {
    s.points().filter(|&y| realizes(s, y, t)).collect()
}

#[inline]
pub fn realizes(s: &Space, y: usize, t: &TypeFn) -> bool {
    t.entries().iter().all(|&(x, v)| x != y && s.dist(x, y) == v)
}

/// All Katětov functions with domain exactly `a`, lexicographic in the values
/// (points taken in increasing order).
pub fn enumerate_katetov(s: &Space, a: &[usize]) -> Vec<TypeFn> {
    let vals: Vec<DistIdx> = s.dset().positive().collect();
    enumerate_katetov_with(s, a, &vals)
}

/// As [`enumerate_katetov`], with values drawn from `values` only.
pub fn enumerate_katetov_with(s: &Space, a: &[usize], values: &[DistIdx]) -> Vec<TypeFn> {
    let mut pts: Vec<usize> = a.to_vec();
    pts.sort_unstable();
    pts.dedup();
    let ds = s.dset();
    let mut out = Vec::new();
    let mut vals: Vec<DistIdx> = Vec::with_capacity(pts.len());
    fn rec(s: &Space, ds: &DistanceSet, allowed: &[DistIdx], pts: &[usize], vals: &mut Vec<DistIdx>, out: &mut Vec<TypeFn>) {
        let k = vals.len();
        if k == pts.len() {
            out.push(TypeFn::from_sorted_unchecked(pts.iter().copied().zip(vals.iter().copied()).collect()));
            return;
        }
        for &v in allowed {
            if (0..k).all(|j| ds.between(s.dist(pts[k], pts[j]), v, vals[j])) {
                vals.push(v);
                rec(s, ds, allowed, pts, vals, out);
                vals.pop();
            }
        }
    }
    rec(s, ds, values, &pts, &mut vals, &mut out);
    out
}

/// One-point extension realizing `t`, with the least admissible completion.
pub fn extend(s: &Space, t: &TypeFn) -> Result<(Space, usize)> {
    let mut out = s.clone();
    let p = out.extend_in_place(t, &mut Completion::Least)?;
    Ok((out, p))
}
