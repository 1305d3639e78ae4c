//! Distances between orbits of Katětov functions, orbit amalgamation,
//! orbit shrinking and r-levelling.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::builder::{embed_greedy, Approximant, Budget};
use crate::distset::{Dist, DistIdx, DistanceSet};
use crate::error::{Error, Result};
use crate::space::{is_katetov, realizes, DGraph, Embedding, Space, TypeFn};

/// The set of distances realized between two orbits with a common domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RangeResult {
    pub set: Vec<Dist>,
    pub min: Dist,
    pub max: Dist,
    #[serde(skip)]
    pub min_idx: DistIdx,
    #[serde(skip)]
    pub max_idx: DistIdx,
}

impl RangeResult {
    pub fn contains_idx(&self, v: DistIdx) -> bool {
        self.min_idx <= v && v <= self.max_idx
    }
}

/// `{m ∈ D : max |s(x)−t(x)| ≤ m ≤ min (s(x)+t(x))}` for `dom(s) = dom(t)`.
pub fn distance_range(ds: &DistanceSet, s: &TypeFn, t: &TypeFn) -> Result<RangeResult> {
    if s.domain() != t.domain() {
        return Err(Error::Precondition("distance_range needs equal domains".into()));
    }
    if s.is_empty() {
        return Err(Error::Precondition("distance_range needs a nonempty domain".into()));
    }
    let mut lo: DistIdx = 0;
    let mut hi: DistIdx = ds.max_idx();
    for (&(_, a), &(_, b)) in s.entries().iter().zip(t.entries()) {
        lo = lo.max(ds.lower(a, b));
        hi = hi.min(ds.upper(a, b));
    }
    if lo > hi {
        return Err(Error::NoCompletion(format!("orbits of {s:?} and {t:?} admit no common distance")));
    }
    Ok(RangeResult {
        set: (lo..=hi).map(|i| ds.value(i)).collect(),
        min: ds.value(lo),
        max: ds.value(hi),
        min_idx: lo,
        max_idx: hi,
    })
}

// an empty domain has the whole space as orbit
fn range_or_all(ds: &DistanceSet, s: &TypeFn, t: &TypeFn) -> Result<RangeResult> {
    if s.is_empty() && t.is_empty() {
        let hi = ds.max_idx();
        return Ok(RangeResult { set: ds.members().to_vec(), min: ds.value(0), max: ds.value(hi), min_idx: 0, max_idx: hi });
    }
    distance_range(ds, s, t)
}

/// Symmetric distance table on an index set, as indices into `D`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexMetric {
    m: Vec<Vec<DistIdx>>,
}

impl IndexMetric {
    pub fn from_table(m: Vec<Vec<DistIdx>>) -> Result<Self> {
        let n = m.len();
        for i in 0..n {
            if m[i].len() != n {
                return Err(Error::Precondition(format!("row {i} has the wrong length")));
            }
            for j in 0..n {
                if m[i][j] != m[j][i] || (m[i][j] == 0) != (i == j) {
                    return Err(Error::Precondition(format!("entry ({i},{j}) breaks symmetry or the zero diagonal")));
                }
            }
        }
        Ok(IndexMetric { m })
    }

    pub fn from_values(ds: &DistanceSet, m: &[Vec<Dist>]) -> Result<Self> {
        let t = m
            .iter()
            .map(|r| r.iter().map(|&d| ds.index_of(d).ok_or_else(|| Error::Precondition(format!("{d} not in D")))).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        IndexMetric::from_table(t)
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> DistIdx {
        self.m[i][j]
    }

    pub fn table(&self) -> &[Vec<DistIdx>] {
        &self.m
    }

    pub fn is_metric(&self, ds: &DistanceSet) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..i).all(|j| (0..j).all(|k| ds.triangle(self.m[i][j], self.m[i][k], self.m[j][k]))))
    }

    /// JSON-ready matrix of distance values.
    pub fn to_values(&self, ds: &DistanceSet) -> Vec<Vec<Dist>> {
        self.m.iter().map(|r| r.iter().map(|&v| ds.value(v)).collect()).collect()
    }
}

fn common_domain(family: &[TypeFn]) -> Result<Vec<usize>> {
    let first = family.first().ok_or_else(|| Error::Precondition("empty family".into()))?;
    let dom = first.domain();
    if family.iter().any(|t| t.domain() != dom) {
        return Err(Error::Precondition("family members must share one domain".into()));
    }
    Ok(dom)
}

/// The D-graph on `A ∪ indices` with `δ'(x, i) = t_i(x)`. Points of `A` come
/// first, in increasing order, followed by the indices.
pub fn amalgamate(base: &Space, family: &[TypeFn], idx: &IndexMetric) -> Result<DGraph> {
    let dom = common_domain(family)?;
    if idx.len() != family.len() {
        return Err(Error::Precondition("index metric size differs from the family size".into()));
    }
    let ds = base.dset();
    for (i, t) in family.iter().enumerate() {
        if !is_katetov(t, base) {
            return Err(Error::Precondition(format!("family member {i} is not Katětov")));
        }
    }
    if !idx.is_metric(ds) {
        return Err(Error::Precondition("index table is not metric".into()));
    }
    for i in 0..family.len() {
        for j in 0..i {
            let r = distance_range(ds, &family[i], &family[j])?;
            if !r.contains_idx(idx.get(i, j)) {
                return Err(Error::Precondition(format!(
                    "pair ({j},{i}): {} outside the orbit range [{}, {}]",
                    ds.value(idx.get(i, j)),
                    r.min,
                    r.max
                )));
            }
        }
    }
    let a = dom.len();
    let mut rows: Vec<Vec<DistIdx>> = (0..a).map(|i| (0..i).map(|j| base.dist(dom[i], dom[j])).collect()).collect();
    for i in 0..family.len() {
        let mut row: Vec<DistIdx> = family[i].entries().iter().map(|e| e.1).collect();
        row.extend((0..i).map(|j| idx.get(i, j)));
        rows.push(row);
    }
    let g = DGraph::from_rows(base.dset_arc().clone(), rows)?;
    if let Some(bad) = g.first_bad_triangle() {
        return Err(Error::Internal(format!("amalgam is not metric at {bad:?}")));
    }
    Ok(g)
}

/// Points `w_i ∈ orbit(t_i)` with `w_k = v` and `δ(w_i, w_j) = idx(i, j)`.
pub fn realize_family(
    a: &mut Approximant,
    family: &[TypeFn],
    idx: &IndexMetric,
    anchor: (usize, usize),
    budget: &mut Budget,
) -> Result<Vec<usize>> {
    let (k, v) = anchor;
    if k >= family.len() {
        return Err(Error::Precondition("anchor index out of range".into()));
    }
    if !realizes(a.space(), v, &family[k]) {
        return Err(Error::Precondition(format!("anchor v{v} is not in the orbit of member {k}")));
    }
    let dom = common_domain(family)?;
    let g = amalgamate(a.space(), family, idx)?;
    let na = dom.len();
    let mut pairs: Vec<(usize, usize)> = dom.iter().enumerate().map(|(i, &p)| (i, p)).collect();
    pairs.push((na + k, v));
    let order: Vec<usize> = (0..family.len()).filter(|&i| i != k).map(|i| na + i).collect();
    let emb = embed_greedy(&g, a, &Embedding::new(pairs), &order, &mut |_, _, _| true, budget)?;
    Ok((0..family.len()).map(|i| emb.get(na + i).expect("all indices mapped")).collect())
}

fn disjoint(sets: &[&[usize]]) -> bool {
    let mut seen = BTreeSet::new();
    sets.iter().all(|s| s.iter().all(|&p| seen.insert(p)))
}

/// Embedding of `A ∪ R` fixing `A` that sends every `y ∈ orbit(t) ∩ R` into
/// `orbit(ext(t))`. Images avoid `B`.
pub fn shrink_step(
    a: &mut Approximant,
    fixed: &[usize],
    extra: &[usize],
    rest: &[usize],
    family: &[TypeFn],
    ext: &[TypeFn],
    budget: &mut Budget,
) -> Result<Embedding> {
    let mut av: Vec<usize> = fixed.to_vec();
    av.sort_unstable();
    av.dedup();
    let mut bv: Vec<usize> = extra.to_vec();
    bv.sort_unstable();
    bv.dedup();
    let mut rv: Vec<usize> = rest.to_vec();
    rv.sort_unstable();
    rv.dedup();
    if !disjoint(&[&av, &bv, &rv]) {
        return Err(Error::Precondition("A, B and R must be disjoint".into()));
    }
    if family.len() != ext.len() {
        return Err(Error::Precondition("every function needs exactly one extension".into()));
    }
    if family.iter().collect::<BTreeSet<_>>().len() != family.len() {
        return Err(Error::Precondition("family members must be distinct".into()));
    }
    let s = a.space();
    let ds = s.dset();
    let ab: Vec<usize> = av.iter().chain(&bv).copied().collect::<BTreeSet<_>>().into_iter().collect();
    for (i, (t, e)) in family.iter().zip(ext).enumerate() {
        if t.domain() != av || e.domain() != ab || !t.is_sub(e) {
            return Err(Error::Precondition(format!("member {i}: need dom(t) = A, dom(t') = A ∪ B and t ⊆ t'")));
        }
        if !is_katetov(t, s) || !is_katetov(e, s) {
            return Err(Error::Precondition(format!("member {i} is not Katětov")));
        }
    }
    for i in 0..family.len() {
        for j in 0..=i {
            if range_or_all(ds, &family[i], &family[j])? != range_or_all(ds, &ext[i], &ext[j])? {
                return Err(Error::Precondition(format!("orbit ranges of members {j},{i} change under extension")));
            }
        }
    }

    // orbit points of R, and which member each realizes
    let owners: Vec<(usize, usize)> = rv
        .iter()
        .filter_map(|&y| family.iter().position(|t| realizes(s, y, t)).map(|i| (y, i)))
        .collect();
    let orbit_pts: BTreeSet<usize> = owners.iter().map(|o| o.0).collect();

    // template: A ∪ B ∪ S with δ(s, b) = t'(b)
    let pts: Vec<usize> = ab.iter().copied().chain(owners.iter().map(|o| o.0)).collect();
    let nab = ab.len();
    let mut rows: Vec<Vec<DistIdx>> = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        let row = (0..i)
            .map(|j| {
                if i >= nab && j < nab && bv.binary_search(&pts[j]).is_ok() {
                    ext[owners[i - nab].1].get(pts[j]).expect("t' is defined on B")
                } else {
                    s.dist(pts[i], pts[j])
                }
            })
            .collect();
        rows.push(row);
    }
    let template = DGraph::from_rows(s.dset_arc().clone(), rows)?;
    if let Some(bad) = template.first_bad_triangle() {
        return Err(Error::Internal(format!("shrink template is not metric at {bad:?}")));
    }
    let snapshot = s.graph().clone();
    let banned: BTreeSet<usize> = bv.iter().copied().collect();

    let partial = Embedding::new((0..nab).map(|i| (i, pts[i])).collect());
    let order: Vec<usize> = (nab..pts.len()).collect();
    let gamma = embed_greedy(&template, a, &partial, &order, &mut |_, _, _| true, budget)?;

    let mut pairs: Vec<(usize, usize)> = av.iter().map(|&p| (p, p)).collect();
    for (i, &(y, _)) in owners.iter().enumerate() {
        pairs.push((y, gamma.get(nab + i).expect("template fully mapped")));
    }
    let free: Vec<usize> = rv.iter().copied().filter(|y| !orbit_pts.contains(y)).collect();
    embed_greedy(&snapshot, a, &Embedding::new(pairs), &free, &mut |_, _, y| !banned.contains(&y), budget)
}

/// Bounded-prefix form of the orbit reduction: an embedding of
/// `A ∪ ({v_0..v_{prefix−1}} \ B)` fixing `A` with `orbit(t_i)` mapped into
/// `orbit(s_i)`, where `A = dom(t_i)` and `B = dom(s_i) \ A`.
pub fn reduce(a: &mut Approximant, pairs: &[(TypeFn, TypeFn)], prefix: usize, budget: &mut Budget) -> Result<Embedding> {
    let (t0, s0) = pairs.first().ok_or_else(|| Error::Precondition("reduce needs at least one pair".into()))?;
    let av = t0.domain();
    let bv: Vec<usize> = s0.domain().into_iter().filter(|p| !av.contains(p)).collect();
    let ds = a.dset().clone();
    for (t, s) in pairs {
        if t.rank()? != s.rank()? {
            return Err(Error::Precondition(format!("rank of {t:?} differs from rank of its extension")));
        }
    }
    for (i, (ti, si)) in pairs.iter().enumerate() {
        for (tj, sj) in &pairs[..i] {
            if range_or_all(&ds, ti, tj)? != range_or_all(&ds, si, sj)? {
                return Err(Error::Precondition("orbit ranges differ between the t and s families".into()));
            }
        }
    }
    let ab: BTreeSet<usize> = av.iter().chain(&bv).copied().collect();
    let rest: Vec<usize> = (0..prefix.min(a.len())).filter(|p| !ab.contains(p)).collect();
    let family: Vec<TypeFn> = pairs.iter().map(|p| p.0.clone()).collect();
    let ext: Vec<TypeFn> = pairs.iter().map(|p| p.1.clone()).collect();
    // duplicates in the family carry identical extensions or are inconsistent
    let mut uniq_t: Vec<TypeFn> = Vec::new();
    let mut uniq_s: Vec<TypeFn> = Vec::new();
    for (t, s) in family.into_iter().zip(ext) {
        match uniq_t.iter().position(|u| *u == t) {
            Some(i) if uniq_s[i] != s => {
                return Err(Error::Precondition(format!("{t:?} has two different extensions")));
            }
            Some(_) => {}
            None => {
                uniq_t.push(t);
                uniq_s.push(s);
            }
        }
    }
    shrink_step(a, &av, &bv, &rest, &uniq_t, &uniq_s, budget)
}

/// `δ_min(p_i, p_j)` for a family with a common nonempty domain.
pub fn min_distance_matrix(ds: &DistanceSet, family: &[TypeFn]) -> Result<IndexMetric> {
    common_domain(family)?;
    let n = family.len();
    let mut m = vec![vec![0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let v = distance_range(ds, &family[i], &family[j])?.min_idx;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    // equal members have δ_min = 0 off the diagonal, so no zero-diagonal check
    let im = IndexMetric { m };
    if !im.is_metric(ds) {
        return Err(Error::Internal("δ_min table is not metric".into()));
    }
    Ok(im)
}

/// The `{r⁻, r}` choice for index pairs with `δ_min < r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevellingPolicy {
    Lower,
    Upper,
    Seeded(u64),
    /// `r⁻` on the listed pairs, `r` elsewhere.
    UpperExcept(Vec<(usize, usize)>),
}

impl LevellingPolicy {
    fn lower(&self, i: usize, j: usize) -> bool {
        let (i, j) = (i.min(j), i.max(j));
        match self {
            LevellingPolicy::Lower => true,
            LevellingPolicy::Upper => false,
            LevellingPolicy::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(((i as u64) << 32) | j as u64);
                rng.gen()
            }
            LevellingPolicy::UpperExcept(ps) => ps.iter().any(|&(a, b)| (a.min(b), a.max(b)) == (i, j)),
        }
    }
}

/// r-levelling of the index set of `family`.
pub fn r_levelling(ds: &DistanceSet, family: &[TypeFn], r: Dist, policy: &LevellingPolicy) -> Result<IndexMetric> {
    let first = ds.first_block()?;
    let ri = ds.index_of(r).ok_or_else(|| Error::Precondition(format!("{r} not in D")))?;
    if !first.contains(r) || ds.predecessor(r)? < first.min() {
        return Err(Error::Precondition(format!("{r} must lie in the first block strictly above its minimum")));
    }
    let rm = ri - 1;
    let dmin = min_distance_matrix(ds, family)?;
    let n = family.len();
    let mut m = vec![vec![0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let v = if dmin.get(i, j) >= ri { dmin.get(i, j) } else if policy.lower(i, j) { rm } else { ri };
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    let im = IndexMetric { m };
    if !im.is_metric(ds) {
        return Err(Error::Internal("r-levelling is not metric".into()));
    }
    let unit = first.min();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if i == k || j == k || i == j {
                    continue;
                }
                let diff = ds.value(im.get(k, i)).abs_diff(ds.value(im.get(k, j)));
                let bound = if family[i] == family[j] { unit } else { ds.value(dmin.get(i, j)) };
                if diff > bound {
                    return Err(Error::Internal(format!("levelling inequality fails at k={k}, i={i}, j={j}")));
                }
            }
        }
    }
    Ok(im)
}

/// Points `w_i ∈ orbit(p_i)` at r-levelled distances with `w_s = v`, where
/// `p_s` duplicates an earlier member.
pub fn levelled_realization(
    a: &mut Approximant,
    family: &[TypeFn],
    r: Dist,
    policy: &LevellingPolicy,
    anchor: usize,
    budget: &mut Budget,
) -> Result<Vec<usize>> {
    let ds = a.dset().clone();
    let s = family.len().checked_sub(1).ok_or_else(|| Error::Precondition("empty family".into()))?;
    if s > 0 && !family[..s].contains(&family[s]) {
        return Err(Error::Precondition("the last member must duplicate an earlier one".into()));
    }
    let ri = ds.index_of(r).ok_or_else(|| Error::Precondition(format!("{r} not in D")))?;
    for (i, p) in family.iter().enumerate().skip(1) {
        let rk = p.rank()?;
        if rk != ri && rk + 1 != ri {
            return Err(Error::Precondition(format!("rank of member {i} is {}, not r or its predecessor", ds.value(rk))));
        }
    }
    if s == 0 {
        if !realizes(a.space(), anchor, &family[0]) {
            return Err(Error::Precondition("anchor not in the orbit".into()));
        }
        return Ok(vec![anchor]);
    }
    let lev = r_levelling(&ds, family, r, policy)?;
    let w = realize_family(a, family, &lev, (s, anchor), budget)?;
    let dmin = min_distance_matrix(&ds, family)?;
    let sp = a.space();
    for k in 0..s {
        for i in 0..s {
            for j in 0..s {
                if i == j || j == k || k == i {
                    continue;
                }
                let diff = sp.dist_value(w[k], w[i]).abs_diff(sp.dist_value(w[k], w[j]));
                if diff > ds.value(dmin.get(i, j)) {
                    return Err(Error::Internal(format!("realized distances break the levelling bound at {k},{i},{j}")));
                }
            }
        }
    }
    Ok(w)
}
