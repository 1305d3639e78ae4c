//! The equivalence `x ∼ʳ y ⇔ δ(x,y) ≤ r` for a block maximum `r`, the
//! quotient metric `δ_min` on its classes, and the passage of copies between
//! a space and its quotient.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::builder::{copy_check_with, Approximant, Budget};
use crate::distset::{Dist, DistIdx, DistanceSet};
use crate::error::{Error, Result};
use crate::space::{is_katetov, realizes, DGraph, Embedding, Space, SpaceJson, TypeFn};

/// The `∼ʳ` classes of a space, ordered by least member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub r: Dist,
    r_idx: DistIdx,
    pub classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
}

impl Partition {
    pub fn class_of(&self, p: usize) -> usize {
        self.class_of[p]
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

/// Classes as points, metrized by `δ_min`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientSpace {
    pub space: Space,
    pub classes: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct QuotientJson {
    #[serde(flatten)]
    space: SpaceJson,
    classes: Vec<Vec<usize>>,
}

impl QuotientSpace {
    pub fn to_json_string(&self) -> String {
        let j = QuotientJson { space: self.space.to_json(), classes: self.classes.clone() };
        serde_json::to_string_pretty(&j).expect("quotient serializes")
    }
}

/// `δ_min` and `δ_max` between two classes, with notes on limit properties
/// that a finite space may not yet show.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassStats {
    pub min: Dist,
    pub max: Dist,
    pub warnings: Vec<String>,
}

/// The `∼ʳ` partition. Fails with a witness triple when the relation is not
/// transitive on `s`.
pub fn classes(s: &Space, r: Dist) -> Result<Partition> {
    let ds = s.dset();
    let ri = ds.index_of(r).ok_or_else(|| Error::Precondition(format!("{r} not in D")))?;
    let n = s.len();
    let mut class_of = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut cls: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if class_of[start] != usize::MAX {
            continue;
        }
        let id = cls.len();
        let mut members = vec![start];
        class_of[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if class_of[v] == usize::MAX && s.dist(u, v) <= ri {
                    class_of[v] = id;
                    parent[v] = u;
                    members.push(v);
                    queue.push_back(v);
                }
            }
        }
        members.sort_unstable();
        // every pair in a component must be within r
        for (i, &x) in members.iter().enumerate() {
            for &z in &members[..i] {
                if s.dist(x, z) > ri {
                    let (a, b, c) = witness(s, ri, &parent, start, z, x);
                    return Err(Error::NotTransitive { r: r.to_string(), a, b, c });
                }
            }
        }
        cls.push(members);
    }
    let p = Partition { r, r_idx: ri, classes: cls, class_of };
    for (i, a) in p.classes.iter().enumerate() {
        for b in &p.classes[..i] {
            for &x in a {
                for &y in b {
                    if s.dist_value(x, y) <= r + r {
                        return Err(Error::Precondition(format!(
                            "δ(v{x},v{y}) = {} ≤ 2·{r}: {r} is not a block maximum",
                            s.dist_value(x, y)
                        )));
                    }
                }
            }
        }
    }
    Ok(p)
}

// walks the BFS tree path from z to x until the distance from its first point
// exceeds r
fn witness(s: &Space, ri: DistIdx, parent: &[usize], root: usize, z: usize, x: usize) -> (usize, usize, usize) {
    let up = |mut v: usize| {
        let mut p = vec![v];
        while v != root {
            v = parent[v];
            p.push(v);
        }
        p
    };
    let pz = up(z);
    let px = up(x);
    // path z → root → x
    let mut path = pz.clone();
    path.extend(px.iter().rev().skip(1));
    let a = path[0];
    for i in 1..path.len() {
        if s.dist(a, path[i]) > ri {
            return (a, path[i - 1], path[i]);
        }
    }
    unreachable!("z and x are farther than r apart")
}

fn dmin_table(s: &Space, p: &Partition) -> Vec<Vec<DistIdx>> {
    let k = p.classes.len();
    let mut m = vec![vec![0; k]; k];
    for i in 0..k {
        for j in 0..i {
            let v = p.classes[i]
                .iter()
                .flat_map(|&x| p.classes[j].iter().map(move |&y| (x, y)))
                .map(|(x, y)| s.dist(x, y))
                .min()
                .expect("classes are nonempty");
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

/// Classes as points with `δ_min`; the distance set is `{0}` plus the
/// realized minima.
pub fn quotient_space(s: &Space, p: &Partition) -> Result<QuotientSpace> {
    let ds = s.dset();
    let m = dmin_table(s, p);
    let mut vals: BTreeSet<Dist> = [Dist::ZERO].into_iter().collect();
    vals.extend(m.iter().flatten().map(|&v| ds.value(v)));
    let qd = Arc::new(DistanceSet::new(vals.into_iter().collect())?);
    let matrix: Vec<Vec<Dist>> = m.iter().map(|r| r.iter().map(|&v| ds.value(v)).collect()).collect();
    let g = DGraph::from_matrix(qd, &matrix)?;
    let space = Space::from_dgraph(g).map_err(|e| Error::Internal(format!("quotient is not metric: {e}")))?;
    Ok(QuotientSpace { space, classes: p.classes.clone() })
}

/// `(δ_min, δ_max)` between classes `a ≠ b`.
pub fn class_stats(s: &Space, p: &Partition, a: usize, b: usize) -> Result<ClassStats> {
    if a == b {
        return Err(Error::Precondition("class_stats needs two different classes".into()));
    }
    let (ca, cb) = (&p.classes[a], &p.classes[b]);
    let mut lo = DistIdx::MAX;
    let mut hi = 0;
    for &x in ca {
        for &y in cb {
            lo = lo.min(s.dist(x, y));
            hi = hi.max(s.dist(x, y));
        }
    }
    let ds = s.dset();
    let (min, max) = (ds.value(lo), ds.value(hi));
    if min <= p.r + p.r {
        return Err(Error::Internal(format!("cross distance {min} ≤ 2r")));
    }
    let mut warnings = Vec::new();
    if max.abs_diff(min) > p.r {
        warnings.push(format!("spread {} exceeds r = {}", max.abs_diff(min), p.r));
    }
    for &x in ca {
        let seen: BTreeSet<DistIdx> = cb.iter().map(|&y| s.dist(x, y)).collect();
        if let Some(v) = (lo..=hi).find(|v| !seen.contains(v) && cross_realized(s, ca, cb, *v)) {
            warnings.push(format!("v{x} has no class-mate of the other class at distance {}", ds.value(v)));
            break;
        }
    }
    Ok(ClassStats { min, max, warnings })
}

fn cross_realized(s: &Space, ca: &[usize], cb: &[usize], v: DistIdx) -> bool {
    ca.iter().any(|&x| cb.iter().any(|&y| s.dist(x, y) == v))
}

/// Representatives `a_i ∈ A_i` with `δ(a_i, a_j) = δ_min(A_i, A_j)`; may grow
/// the approximant. Minima are read from the partition's snapshot.
pub fn lift_representatives(a: &mut Approximant, p: &Partition, chosen: &[usize], budget: &mut Budget) -> Result<Vec<usize>> {
    if chosen.iter().collect::<BTreeSet<_>>().len() != chosen.len() {
        return Err(Error::Precondition("chosen classes must be distinct".into()));
    }
    let snap = a.space().clone();
    let m = dmin_table(&snap, p);
    let mut reps: Vec<usize> = Vec::new();
    for (i, &c) in chosen.iter().enumerate() {
        let b = p.classes[c][0];
        if i == 0 {
            reps.push(b);
            continue;
        }
        let mut entries: Vec<(usize, DistIdx)> = chosen[..i].iter().zip(&reps).map(|(&cj, &aj)| (aj, m[cj][c])).collect();
        if !entries.iter().any(|e| e.0 == b) {
            entries.push((b, p.r_idx));
        }
        let t = TypeFn::new(entries)?;
        if !is_katetov(&t, a.space()) {
            return Err(Error::Precondition(format!(
                "class minima of the snapshot are not jointly realizable ({t:?}); saturate further"
            )));
        }
        let y = a.find_or_grow(&t, &mut |_, _| true, budget)?;
        reps.push(y);
    }
    Ok(reps)
}

/// Embedding of the first `prefix` points into the complement of the open
/// `m`-ball around `x`.
pub fn drop_near_ball(a: &mut Approximant, x: usize, m: Dist, prefix: usize, budget: &mut Budget) -> Result<Embedding> {
    let ds = a.dset().clone();
    let first = ds.first_block()?;
    if m != first.max() {
        return Err(Error::Precondition(format!("{m} is not the maximum of the first block")));
    }
    if x >= a.len() {
        return Err(Error::Precondition(format!("point {x} outside the space")));
    }
    let mi = ds.index_of(m).expect("block members are in D");
    let snap = a.space().graph().clone();
    let mut emb = Embedding::default();
    for src in 0..prefix.min(snap.len()) {
        let t = TypeFn::new(emb.pairs().iter().map(|&(s, y)| (y, snap.dist(src, s))).collect())?;
        let outside = |sp: &Space, y: usize| sp.dist(x, y) >= mi;
        let found = a.space().points().find(|&y| realizes(a.space(), y, &t) && outside(a.space(), y));
        let y = match found {
            Some(y) => y,
            None => {
                // t ∪ (x ↦ v) with the least admissible v ≥ m
                let g = (mi..=ds.max_idx())
                    .map(|v| t.with(x, v))
                    .find(|g| is_katetov(g, a.space()))
                    .ok_or_else(|| Error::Internal(format!("{t:?} has no extension outside the ball")))?;
                a.find_or_grow(&g, &mut |_, _| true, budget)?
            }
        };
        emb.insert(src, y);
    }
    Ok(emb)
}

/// `D_min` of the quotient of `U_D` by the first-block equivalence, measured
/// on an approximant.
///
/// For each `d` above the first block a pair at distance `d` is grown and every
/// Katětov function over the pair is realized; the least distance from the
/// first point to the second point's class is then the exact class minimum.
pub fn quotient_distance_set(d: &DistanceSet, seed: u64) -> Result<DistanceSet> {
    let blocks = d.blocks()?;
    if blocks.len() < 2 {
        return Err(Error::Precondition("quotient needs at least two blocks".into()));
    }
    let mi = d.index_of(blocks[0].max()).expect("block members are in D");
    let mut a = crate::builder::build(d, 1, seed)?;
    let mut out: BTreeSet<Dist> = [Dist::ZERO].into_iter().collect();
    let mut budget = Budget::unlimited();
    for di in mi + 1..=d.max_idx() {
        let y = a.find_or_grow(&TypeFn::new(vec![(0, di)])?, &mut |_, _| true, &mut budget)?;
        let pair = a.space().clone();
        for t in crate::space::enumerate_katetov(&pair, &[0, y]) {
            a.find_or_grow(&t, &mut |_, _| true, &mut budget)?;
        }
        let s = a.space();
        let dmin = s.points().filter(|&b| s.dist(b, y) <= mi).map(|b| s.dist(0, b)).min().expect("y is in its class");
        out.insert(d.value(dmin));
    }
    let q = DistanceSet::new(out.into_iter().collect())?;
    if !q.is_universal().0 {
        return Err(Error::Internal(format!("quotient distance set {{{q}}} is not universal")));
    }
    Ok(q)
}

/// Union of the classes in `q_copy`, provided they pass the copy check in the
/// quotient at `depth`.
pub fn lift_copy(a: &Approximant, p: &Partition, q_copy: &[usize], depth: usize) -> Result<Vec<usize>> {
    let q = quotient_space(a.space(), p)?;
    let vals: Vec<DistIdx> = q.space.dset().positive().collect();
    if !copy_check_with(&q.space, q_copy, depth, &vals) {
        return Err(Error::Precondition(format!("chosen classes fail the quotient copy check at depth {depth}")));
    }
    let mut pts: Vec<usize> = q_copy.iter().flat_map(|&c| p.classes[c].iter().copied()).collect();
    pts.sort_unstable();
    pts.dedup();
    Ok(pts)
}
