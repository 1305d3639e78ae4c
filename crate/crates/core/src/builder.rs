//! Finite approximants of the Urysohn space `U_D`.
//!
//! An [`Approximant`] grows by a fair schedule: level `k` realizes every
//! Katětov function whose domain is exactly the first `k` points, in a seeded
//! order. For universal `D` every Katětov function on a subset of a prefix
//! extends to one on the whole prefix, so finishing level `k` saturates the
//! prefix of length `k`.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distset::{DistIdx, DistanceSet};
use crate::error::{Error, Result};
use crate::space::{enumerate_katetov, enumerate_katetov_with, realizes, Completion, DGraph, Embedding, Space, TypeFn};

const LEVEL_STREAM: u64 = 1 << 63;

/// Caps the number of points an operation may add.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub remaining: usize,
}

impl Budget {
    pub fn new(points: usize) -> Self {
        Budget { remaining: points }
    }

    pub fn unlimited() -> Self {
        Budget { remaining: usize::MAX }
    }

    pub fn charge(&mut self, what: impl FnOnce() -> String) -> Result<()> {
        if self.remaining == 0 {
            return Err(Error::Budget(what()));
        }
        self.remaining -= 1;
        Ok(())
    }
}

/// A finite metric space over `D` with its realization schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Approximant {
    space: Space,
    seed: u64,
    level: usize,
    cursor: usize,
    queue: Vec<TypeFn>,
}

/// Level `k` together with the realizations that justify it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaturationCertificate {
    pub level: usize,
    /// `(domain, values as indices, realizing point)`.
    pub checks: Vec<(Vec<usize>, Vec<DistIdx>, usize)>,
}

impl Approximant {
    /// Wraps an existing space; the schedule starts at level 0.
    pub fn from_space(space: Space, seed: u64) -> Self {
        Approximant { space, seed, level: 0, cursor: 0, queue: Vec::new() }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dset(&self) -> &DistanceSet {
        self.space.dset()
    }

    pub fn dset_arc(&self) -> Arc<DistanceSet> {
        self.space.dset_arc().clone()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// `(level, cursor)` of the fair scheduler.
    pub fn schedule(&self) -> (usize, usize) {
        (self.level, self.cursor)
    }

    /// Adds a fresh realization of `t`; distances to points outside `dom(t)`
    /// are drawn from a stream keyed by the new point's index.
    pub fn realize(&mut self, t: &TypeFn) -> Result<usize> {
        let mut rng = point_rng(self.seed, self.space.len());
        self.space.extend_in_place(t, &mut Completion::Seeded(&mut rng))
    }

    /// Least point of `orbit(t)` accepted by `accept`, growing fresh
    /// realizations of `t` until one is accepted.
    pub fn find_or_grow(
        &mut self,
        t: &TypeFn,
        accept: &mut dyn FnMut(&Space, usize) -> bool,
        budget: &mut Budget,
    ) -> Result<usize> {
        for y in self.space.points() {
            if realizes(&self.space, y, t) && accept(&self.space, y) {
                return Ok(y);
            }
        }
        loop {
            budget.charge(|| format!("no acceptable realization of {t:?}"))?;
            let y = self.realize(t)?;
            if accept(&self.space, y) {
                return Ok(y);
            }
        }
    }

    fn load_level(&mut self) {
        let prefix: Vec<usize> = (0..self.level).collect();
        let mut q = enumerate_katetov(&self.space, &prefix);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(LEVEL_STREAM | self.level as u64);
        q.shuffle(&mut rng);
        self.queue = q;
    }

    /// Advances the schedule by one realization. Returns the added point,
    /// or `None` if the step only moved the cursor.
    pub fn step(&mut self) -> Result<Option<usize>> {
        if self.space.is_empty() {
            self.space = Space::single(self.space.dset_arc().clone());
            return Ok(Some(0));
        }
        if self.cursor == 0 && self.queue.is_empty() {
            self.load_level();
        }
        if self.cursor >= self.queue.len() {
            self.level += 1;
            self.cursor = 0;
            self.queue.clear();
            return Ok(None);
        }
        let t = self.queue[self.cursor].clone();
        self.cursor += 1;
        if orbit_nonempty(&self.space, &t).is_none() {
            Ok(Some(self.realize(&t)?))
        } else {
            Ok(None)
        }
    }

    /// Runs the schedule until the space has `n` points.
    pub fn grow_to(&mut self, n: usize) -> Result<()> {
        while self.space.len() < n {
            self.step()?;
        }
        Ok(())
    }
}

fn orbit_nonempty(s: &Space, t: &TypeFn) -> Option<usize> {
    s.points().find(|&y| realizes(s, y, t))
}

fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `n`-point approximant grown by the fair schedule.
pub fn build(d: &DistanceSet, n: usize, seed: u64) -> Result<Approximant> {
    let (u, w) = d.is_universal();
    if !u {
        let w = w.expect("non-universal sets carry a witness");
        return Err(Error::NotUniversal(format!(
            "δ(b,c)={}, a0=({},{}), a1=({},{})",
            w.bc, w.a0.0, w.a0.1, w.a1.0, w.a1.1
        )));
    }
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    let mut a = Approximant::from_space(Space::empty(Arc::new(d.clone())), seed);
    a.grow_to(n)?;
    Ok(a)
}

/// Largest `k` such that every Katětov function with domain inside the first
/// `k` points is realized.
///
/// Checks domains equal to a full prefix; for universal `D` a function on a
/// subset extends to the whole prefix, so this is equivalent.
pub fn saturation_level(a: &Approximant) -> (usize, SaturationCertificate) {
    let s = a.space();
    let mut checks = Vec::new();
    let mut k = 0;
    while k < s.len() {
        let dom: Vec<usize> = (0..=k).collect();
        let mut level_checks = Vec::new();
        let mut ok = true;
        for t in enumerate_katetov(s, &dom) {
            match orbit_nonempty(s, &t) {
                Some(y) => level_checks.push((dom.clone(), t.entries().iter().map(|e| e.1).collect(), y)),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            break;
        }
        checks.extend(level_checks);
        k += 1;
    }
    (k, SaturationCertificate { level: k, checks })
}

/// Grows `a` until its saturation level is at least `k`.
pub fn saturate(a: &mut Approximant, k: usize, budget: &mut Budget) -> Result<()> {
    if !a.dset().is_universal().0 {
        return Err(Error::NotUniversal("saturation needs a universal distance set".into()));
    }
    while saturation_level(a).0 < k {
        // finish the current level of the schedule
        let level = a.level;
        while a.level == level {
            if a.step()?.is_some() {
                budget.charge(|| format!("saturation to level {k}"))?;
            }
        }
    }
    Ok(())
}

/// Extends `partial` to the first `upto` source points by orbit search in
/// `target`, growing it when an orbit is empty.
pub fn extend_isometry(
    source: &DGraph,
    target: &mut Approximant,
    partial: &Embedding,
    upto: usize,
    budget: &mut Budget,
) -> Result<Embedding> {
    let order: Vec<usize> = (0..upto.min(source.len())).collect();
    embed_greedy(source, target, partial, &order, &mut |_, _, _| true, budget)
}

/// Greedy constrained embedding: maps `order` (skipping points already in
/// `partial`) one by one to the least accepted point of the orbit of its type
/// over the images so far. `accept(space, source_point, candidate)` filters.
pub fn embed_greedy(
    source: &DGraph,
    target: &mut Approximant,
    partial: &Embedding,
    order: &[usize],
    accept: &mut dyn FnMut(&Space, usize, usize) -> bool,
    budget: &mut Budget,
) -> Result<Embedding> {
    if !partial.preserves(source, target.space()) {
        return Err(Error::Precondition("partial map is not distance-preserving".into()));
    }
    if source.dset() != target.dset() {
        return Err(Error::Precondition("source and target use different distance sets".into()));
    }
    let mut emb = partial.clone();
    for &x in order {
        if emb.get(x).is_some() {
            continue;
        }
        let entries: Vec<(usize, DistIdx)> = emb.pairs().iter().map(|&(s, t)| (t, source.dist(x, s))).collect();
        let t = TypeFn::new(entries)?;
        let y = target.find_or_grow(&t, &mut |sp, y| accept(sp, x, y), budget)?;
        emb.insert(x, y);
    }
    Ok(emb)
}

/// Embeds `A ∪ {v_0..v_{upto−1}}` into the space minus `B`, fixing `A`.
pub fn avoid(a: &mut Approximant, fixed: &[usize], banned: &[usize], upto: usize, budget: &mut Budget) -> Result<Embedding> {
    let fa: BTreeSet<usize> = fixed.iter().copied().collect();
    let fb: BTreeSet<usize> = banned.iter().copied().collect();
    if !fa.is_disjoint(&fb) {
        return Err(Error::Precondition("A and B must be disjoint".into()));
    }
    let upto = upto.min(a.len());
    let source: Vec<usize> = fa.iter().copied().chain(0..upto).collect::<BTreeSet<_>>().into_iter().collect();
    let snapshot = a.space().graph().clone();
    let partial = Embedding::identity(fa.iter().copied());
    let order: Vec<usize> = (0..upto).filter(|p| !fa.contains(p)).collect();
    let emb = embed_greedy(&snapshot, a, &partial, &order, &mut |_, _, y| !fb.contains(&y), budget)?;
    debug_assert_eq!(emb.sources(), source);
    Ok(emb)
}

/// Every Katětov function with domain inside the first `depth` elements of
/// `c` (enumeration order) is realized inside `c`.
pub fn copy_check(a: &Approximant, c: &[usize], depth: usize) -> bool {
    let vals: Vec<DistIdx> = a.dset().positive().collect();
    copy_check_with(a.space(), c, depth, &vals)
}

/// As [`copy_check`], with function values restricted to `values`.
pub fn copy_check_with(s: &Space, c: &[usize], depth: usize, values: &[DistIdx]) -> bool {
    let mut pts: Vec<usize> = c.to_vec();
    pts.sort_unstable();
    pts.dedup();
    let prefix: Vec<usize> = pts.iter().copied().take(depth).collect();
    for mask in 0u64..(1u64 << prefix.len()) {
        let dom: Vec<usize> = prefix.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
        for t in enumerate_katetov_with(s, &dom, values) {
            if !pts.iter().any(|&y| realizes(s, y, &t)) {
                return false;
            }
        }
    }
    true
}
