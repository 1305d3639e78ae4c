//! The indivisibility game against deterministic 2-colourings.
//!
//! Every operation works on a lazily grown approximant (the game space) and
//! embeds a snapshot or a template into it, choosing images of constrained
//! points among existing or freshly grown realizations of the right colour.
//! Results come with a [`Certificate`] that [`verify_certificate`] replays
//! from the serialized data alone.

pub mod certificate;
pub mod colouring;
pub mod template;

use std::collections::{BTreeMap, BTreeSet};

use crate::builder::{build, copy_check_with, Approximant, Budget};
use crate::distset::{Dist, DistIdx, DistanceSet};
use crate::error::{Error, Result};
use crate::orbits::reduce;
use crate::quotient::classes;
use crate::space::{is_katetov, orbit, realizes, DGraph, Embedding, Space, TypeFn};

pub use certificate::{verify_certificate, verify_json, verify_report, BudgetRecord, Certificate, Check, Kind};
pub use colouring::{Colouring, Strategy};

/// Limits for one game operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GameBudget {
    /// Points the game space may grow by.
    pub max_points: usize,
    /// Deepest quotient recursion.
    pub max_depth: usize,
    /// Fresh realizations tried for a single constrained point.
    pub search_cap: usize,
}

impl Default for GameBudget {
    fn default() -> Self {
        GameBudget { max_points: 2000, max_depth: 8, search_cap: 64 }
    }
}

impl GameBudget {
    pub fn points(max_points: usize) -> Self {
        GameBudget { max_points, ..Default::default() }
    }
}

// points grown so far against the budget
struct Meter {
    budget: GameBudget,
    grown: usize,
}

impl Meter {
    fn new(budget: GameBudget) -> Result<Self> {
        if budget.max_points == 0 {
            return Err(Error::Budget("no points to grow".into()));
        }
        Ok(Meter { budget, grown: 0 })
    }

    fn remaining(&self) -> usize {
        self.budget.max_points - self.grown
    }

    fn exhausted(&self) -> bool {
        self.remaining() == 0
    }

    // runs `f` with a builder budget of at most `cap` points and books the use
    fn with<T>(&mut self, cap: usize, f: impl FnOnce(&mut Budget) -> Result<T>) -> Result<T> {
        let allowed = cap.min(self.remaining());
        let mut b = Budget::new(allowed);
        let r = f(&mut b);
        self.grown += allowed - b.remaining;
        r
    }

    fn record(&self) -> BudgetRecord {
        BudgetRecord { max_points: self.budget.max_points, search_cap: self.budget.search_cap, grown: self.grown }
    }
}

// `hint` if it realizes `t` in the wanted colour, else the least existing or
// fresh realization of `t`, of colour `want` if given
fn place(a: &mut Approximant, chi: &mut Colouring, t: &TypeFn, want: Option<u8>, hint: Option<usize>, meter: &mut Meter) -> Result<usize> {
    if let Some(h) = hint.filter(|&h| h < a.len() && realizes(a.space(), h, t)) {
        if want.map_or(true, |c| chi.colour(a.space(), h) == c) {
            return Ok(h);
        }
    }
    let cap = if want.is_some() { meter.budget.search_cap } else { usize::MAX };
    meter.with(cap, |b| a.find_or_grow(t, &mut |sp, y| want.map_or(true, |c| chi.colour(sp, y) == c), b))
}

fn type_over(source: &DGraph, x: usize, emb: &Embedding) -> Result<TypeFn> {
    TypeFn::new(emb.pairs().iter().map(|&(s, y)| (y, source.dist(x, s))).collect())
}

// embeds `order` one point at a time; `want(src)` names the required colour
fn embed_coloured(
    source: &DGraph,
    a: &mut Approximant,
    chi: &mut Colouring,
    partial: Embedding,
    order: &[usize],
    want: &mut dyn FnMut(usize) -> Option<u8>,
    meter: &mut Meter,
) -> Result<Embedding> {
    let mut emb = partial;
    for &x in order {
        if emb.get(x).is_some() {
            continue;
        }
        let t = type_over(source, x, &emb)?;
        let y = place(a, chi, &t, want(x), Some(x), meter)?;
        emb.insert(x, y);
    }
    Ok(emb)
}

fn certificate(kind: Kind, a: &Approximant, chi: &mut Colouring, meter: &Meter) -> Certificate {
    Certificate {
        kind,
        strategy: chi.strategy().to_string(),
        space: a.space().to_json(),
        colours: chi.colours(a.space()),
        colour: None,
        points: Vec::new(),
        source: None,
        embedding: Vec::new(),
        fixed: Vec::new(),
        function: None,
        rank: None,
        from: 0,
        depth: 0,
        min_points: 0,
        budget: meter.record(),
        branch: String::new(),
        checks: Vec::new(),
        timestamp: None,
        digest: String::new(),
    }
}

fn sorted_images(e: &Embedding) -> Vec<usize> {
    let mut v = e.images();
    v.sort_unstable();
    v
}

// a colour-constrained embedding of the whole snapshot that fixes `fixed`
// and sends the points of `constrained` to colour `c`
fn embed_snapshot(
    snap: &Space,
    a: &mut Approximant,
    chi: &mut Colouring,
    fixed: &[usize],
    constrained: &BTreeSet<usize>,
    c: u8,
    meter: &mut Meter,
) -> Result<Embedding> {
    let order: Vec<usize> = snap.points().collect();
    embed_coloured(
        snap.graph(),
        a,
        chi,
        Embedding::identity(fixed.iter().copied()),
        &order,
        &mut |x| constrained.contains(&x).then_some(c),
        meter,
    )
}

fn mono_orbit_certificate(
    a: &Approximant,
    chi: &mut Colouring,
    meter: &Meter,
    snap: &Space,
    emb: &Embedding,
    p: &TypeFn,
    colour: u8,
    branch: &str,
) -> Certificate {
    let mut c = certificate(Kind::MonoOrbit, a, chi, meter);
    c.colour = Some(colour);
    c.points = sorted_images(emb);
    c.source = Some(snap.to_json());
    c.embedding = emb.pairs().to_vec();
    c.fixed = p.domain();
    c.function = Some(p.values_in(a.dset()));
    c.min_points = 1;
    c.branch = branch.into();
    c.checks = vec![Check::Metric, Check::Colours, Check::Embedding, Check::Fixed, Check::Orbit];
    c.seal();
    c
}

/// Makes the rank-1 function `p` (domain a prefix) monochromatic on the image
/// of an embedding of the current space that fixes `dom(p)`.
///
/// Case 1 looks for an extension `s ⊇ p` whose orbit is colour 0 and maps
/// `orbit(p)` into it with [`reduce`]; if the grown points spoil the colour or
/// no such `s` exists, Case 2 embeds greedily with colour-1 images for the
/// orbit of `p`.
pub fn monochromatize_rank1(a: &mut Approximant, chi: &mut Colouring, p: &TypeFn, budget: GameBudget) -> Result<(Embedding, u8, Certificate)> {
    let mut meter = Meter::new(budget)?;
    if p.rank()? != 1 {
        return Err(Error::Precondition("p must have rank min(D \\ {0})".into()));
    }
    if p.domain() != (0..p.len()).collect::<Vec<_>>() {
        return Err(Error::Precondition("dom(p) must be a prefix".into()));
    }
    place(a, chi, p, None, None, &mut meter)?;
    let snap = a.space().clone();
    let orb = orbit(p, &snap);
    let colours: BTreeSet<u8> = orb.iter().map(|&y| chi.colour(&snap, y)).collect();
    if colours.len() == 1 {
        let c = *colours.iter().next().expect("one colour");
        let emb = Embedding::identity(snap.points());
        let cert = mono_orbit_certificate(a, chi, &meter, &snap, &emb, p, c, "monochromatic");
        return Ok((emb, c, cert));
    }
    // Case 1: the least extension whose orbit is colour 0
    let dom = p.domain();
    let s1 = snap
        .points()
        .filter(|x| !dom.contains(x))
        .flat_map(|x| snap.dset().positive().map(move |v| p.with(x, v)))
        .find(|s| {
            let so = orbit(s, &snap);
            is_katetov(s, &snap) && !so.is_empty() && so.iter().all(|&y| chi.colour(&snap, y) == 0)
        });
    if let Some(s) = s1 {
        let prefix = snap.len();
        let half = meter.remaining() / 2;
        if let Ok(emb) = meter.with(half, |b| reduce(a, &[(p.clone(), s.clone())], prefix, b)) {
            let img: BTreeSet<usize> = emb.images().into_iter().collect();
            let orb_img: Vec<usize> = orbit(p, a.space()).into_iter().filter(|y| img.contains(y)).collect();
            if !orb_img.is_empty() && orb_img.iter().all(|&y| chi.colour(a.space(), y) == 0) {
                let cert = mono_orbit_certificate(a, chi, &meter, &snap, &emb, p, 0, "case-1");
                return Ok((emb, 0, cert));
            }
        }
    }
    // Case 2, with the other colour as a fallback at finite horizon
    let orb: BTreeSet<usize> = orb.into_iter().collect();
    let mut last = None;
    for c in [1u8, 0] {
        match embed_snapshot(&snap, a, chi, &dom, &orb, c, &mut meter) {
            Ok(emb) => {
                let cert = mono_orbit_certificate(a, chi, &meter, &snap, &emb, p, c, &format!("case-2-colour-{c}"));
                return Ok((emb, c, cert));
            }
            Err(e @ Error::Budget(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("both colours tried"))
}

/// Embeds the current space, fixing its first `from` points, so that the
/// image enumeration is `r`-uniform from `from`: every Katětov function of
/// rank `r` over an enumeration prefix has a monochromatic orbit among the
/// later points.
pub fn uniformize(a: &mut Approximant, chi: &mut Colouring, r: Dist, from: usize, budget: GameBudget) -> Result<(Embedding, Certificate)> {
    let mut meter = Meter::new(budget)?;
    let ds = a.dset().clone();
    let ri = ds.index_of(r).ok_or_else(|| Error::Precondition(format!("{r} not in D")))?;
    if !ds.first_block()?.contains(r) {
        return Err(Error::Precondition(format!("{r} is not in the first block")));
    }
    let snap = a.space().clone();
    if from > snap.len() {
        return Err(Error::Precondition("from exceeds the space".into()));
    }
    let mut emb = Embedding::identity(0..from);
    let mut assigned: BTreeMap<(usize, Vec<DistIdx>), u8> = BTreeMap::new();
    for x in from..snap.len() {
        // the function over the shortest enumeration prefix on which x has rank r
        let mut rank = DistIdx::MAX;
        let mut key = None;
        for j in 1..=x {
            rank = rank.min(snap.dist(x, j - 1));
            if j >= from && rank == ri {
                key = Some((j, (0..j).map(|i| snap.dist(x, i)).collect::<Vec<_>>()));
                break;
            }
        }
        let want = key.as_ref().and_then(|k| assigned.get(k).copied());
        let y = place(a, chi, &type_over(snap.graph(), x, &emb)?, want, Some(x), &mut meter)?;
        if let Some(k) = key {
            assigned.entry(k).or_insert(chi.colour(a.space(), y));
        }
        emb.insert(x, y);
    }
    let mut cert = certificate(Kind::UniformEnum, a, chi, &meter);
    cert.points = (0..snap.len()).map(|x| emb.get(x).expect("total")).collect();
    cert.source = Some(snap.to_json());
    cert.embedding = emb.pairs().to_vec();
    cert.fixed = (0..from).collect();
    cert.rank = Some(r);
    cert.from = from;
    cert.branch = "greedy".into();
    cert.checks = vec![Check::Metric, Check::Colours, Check::Embedding, Check::Fixed, Check::Uniform];
    cert.seal();
    Ok((emb, cert))
}

/// Outcome of [`extendibility_probe`]. Only `Witness` is conclusive; the
/// predicate quantifies over all copies and is semi-decided here.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// An embedding fixing `dom(g)` whose image meets `orbit(g)` only in the
    /// requested colour, with the orbit points found.
    Witness { embedding: Embedding, g: TypeFn, sample: Vec<usize> },
    /// Every candidate extension hit the other colour within the search cap.
    RefutedAtBudget { tried: usize, search_cap: usize },
    /// The point budget ran out before all candidates were tried.
    Exhausted { tried: usize },
}

/// Looks for a rank-`r⁻` extension `g ⊇ p` and an embedding after which the
/// orbit of `g` lies in colour `i`. Candidates are `p ∪ {x ↦ r⁻}` for points
/// `x` outside `dom(p)` in increasing order; the identity is tried for all of
/// them before any growth.
pub fn extendibility_probe(a: &mut Approximant, chi: &mut Colouring, p: &TypeFn, i: u8, budget: GameBudget) -> Result<Verdict> {
    let ds = a.dset().clone();
    let r = p.rank()?;
    let block = ds.first_block()?;
    if !block.contains(ds.value(r)) || r <= 1 {
        return Err(Error::Precondition("rank(p) must lie in the first block above its minimum".into()));
    }
    let mut meter = Meter { budget, grown: 0 };
    let snap = a.space().clone();
    let dom = p.domain();
    let cands: Vec<TypeFn> = snap
        .points()
        .filter(|x| !dom.contains(x))
        .map(|x| p.with(x, r - 1))
        .filter(|g| is_katetov(g, &snap))
        .collect();
    for g in &cands {
        let orb = orbit(g, &snap);
        if !orb.is_empty() && orb.iter().all(|&y| chi.colour(&snap, y) == i) {
            return Ok(Verdict::Witness { embedding: Embedding::identity(snap.points()), g: g.clone(), sample: orb });
        }
    }
    for (tried, g) in cands.iter().enumerate() {
        if meter.exhausted() {
            return Ok(Verdict::Exhausted { tried });
        }
        let attempt = (|| {
            if orbit(g, a.space()).is_empty() {
                place(a, chi, g, Some(i), None, &mut meter)?;
            }
            let s = a.space().clone();
            let orb: BTreeSet<usize> = orbit(g, &s).into_iter().collect();
            embed_snapshot(&s, a, chi, &g.domain(), &orb, i, &mut meter)
        })();
        match attempt {
            Ok(embedding) => {
                let img: BTreeSet<usize> = embedding.images().into_iter().collect();
                let sample = orbit(g, a.space()).into_iter().filter(|y| img.contains(y)).collect();
                return Ok(Verdict::Witness { embedding, g: g.clone(), sample });
            }
            Err(Error::Budget(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if meter.exhausted() {
        return Ok(Verdict::Exhausted { tried: cands.len() });
    }
    Ok(Verdict::RefutedAtBudget { tried: cands.len(), search_cap: budget.search_cap })
}

fn positive_values(ds: &DistanceSet) -> Vec<DistIdx> {
    ds.positive().collect()
}

/// A copy of the current space (its image under an embedding fixing
/// `dom(q)`) on which the orbit of `q` has colour `i`.
pub fn central_extension(a: &mut Approximant, chi: &mut Colouring, q: &TypeFn, i: u8, budget: GameBudget) -> Result<(Vec<usize>, Certificate)> {
    let mut meter = Meter::new(budget)?;
    if q.is_empty() {
        return Err(Error::Precondition("q must have a nonempty domain".into()));
    }
    let snap = a.space().clone();
    let orb: BTreeSet<usize> = orbit(q, &snap).into_iter().collect();
    let emb = embed_snapshot(&snap, a, chi, &q.domain(), &orb, i, &mut meter)?;
    let pts = sorted_images(&emb);
    let depth = usize::from(copy_check_with(a.space(), &pts, 1, &positive_values(a.dset())));
    let mut c = certificate(Kind::CentralExt, a, chi, &meter);
    c.colour = Some(i);
    c.points = pts.clone();
    c.source = Some(snap.to_json());
    c.embedding = emb.pairs().to_vec();
    c.fixed = q.domain();
    c.function = Some(q.values_in(a.dset()));
    c.min_points = orb.len();
    c.depth = depth;
    c.branch = format!("colour-{i}");
    c.checks = vec![Check::Metric, Check::Colours, Check::Embedding, Check::Fixed, Check::Orbit];
    if depth > 0 {
        c.checks.push(Check::Copy);
    }
    c.seal();
    Ok((pts, c))
}

/// The function `v_0 ↦ max B` (`B` the first block) together with an
/// embedding fixing `v_0` on whose image its orbit is monochromatic. The
/// colour of the least orbit point is tried first, then the other one.
pub fn monochromatic_orbit(a: &mut Approximant, chi: &mut Colouring, budget: GameBudget) -> Result<(TypeFn, u8, Certificate)> {
    let mut meter = Meter::new(budget)?;
    if a.is_empty() {
        a.grow_to(1)?;
    }
    let ds = a.dset().clone();
    let m = ds.index_of(ds.first_block()?.max()).expect("block members are in D");
    let p = TypeFn::new(vec![(0, m)])?;
    place(a, chi, &p, None, None, &mut meter)?;
    let snap = a.space().clone();
    let orb: BTreeSet<usize> = orbit(&p, &snap).into_iter().collect();
    let first = chi.colour(&snap, *orb.iter().next().expect("orbit is nonempty"));
    let mut last = None;
    for c in [first, 1 - first] {
        match embed_snapshot(&snap, a, chi, &[0], &orb, c, &mut meter) {
            Ok(emb) => {
                let mut cert = mono_orbit_certificate(a, chi, &meter, &snap, &emb, &p, c, &format!("orbit-in-S{c}"));
                cert.min_points = orb.len();
                cert.seal();
                return Ok((p, c, cert));
            }
            Err(e @ Error::Budget(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("both colours tried"))
}

/// An embedding of the current space after which, for every `∼ᵐ` class, the
/// points at distance exactly `m` from the class's first point (what is left
/// once its open `m`-ball is removed) have one colour. Returns the colour of
/// each such class in order of first points.
pub fn monochromatic_classes(a: &mut Approximant, chi: &mut Colouring, budget: GameBudget) -> Result<(Embedding, Vec<u8>, Certificate)> {
    let mut meter = Meter::new(budget)?;
    let ds = a.dset().clone();
    let blocks = ds.blocks()?;
    if blocks.len() < 2 {
        return Err(Error::Precondition("D needs at least two blocks".into()));
    }
    let m = blocks[0].max();
    let mi = ds.index_of(m).expect("block members are in D");
    let snap = a.space().clone();
    let part = classes(&snap, m)?;
    // class index of every remainder point
    let mut rem: BTreeMap<usize, usize> = BTreeMap::new();
    for (k, c) in part.classes.iter().enumerate() {
        for &x in c.iter().filter(|&&x| snap.dist(c[0], x) == mi) {
            rem.insert(x, k);
        }
    }
    let mut colour_of: BTreeMap<usize, u8> = BTreeMap::new();
    let mut emb = Embedding::default();
    for x in snap.points() {
        let class = rem.get(&x).copied();
        let want = class.and_then(|k| colour_of.get(&k).copied());
        let y = place(a, chi, &type_over(snap.graph(), x, &emb)?, want, Some(x), &mut meter)?;
        if let Some(k) = class {
            colour_of.entry(k).or_insert(chi.colour(a.space(), y));
        }
        emb.insert(x, y);
    }
    let mut kept: Vec<usize> = rem.keys().map(|&x| emb.get(x).expect("total")).collect();
    kept.sort_unstable();
    let mut c = certificate(Kind::MonoClasses, a, chi, &meter);
    c.points = kept;
    c.source = Some(snap.to_json());
    c.embedding = emb.pairs().to_vec();
    c.rank = Some(m);
    c.branch = "remainders".into();
    c.checks = vec![Check::Metric, Check::Colours, Check::Embedding, Check::Classes];
    c.seal();
    Ok((emb, colour_of.into_values().collect(), c))
}

/// Result of [`find_monochromatic_copy`].
#[derive(Clone, Debug)]
pub struct GameOutcome {
    pub colour: u8,
    pub points: Vec<usize>,
    pub certificate: Certificate,
    pub game: Approximant,
}

/// Plays the game on a fresh approximant of `D` coloured by `strategy`.
///
/// A template approximant is grown until its kept set (see [`template`]) has
/// `target` points and passes the copy check at `depth`. The template is then
/// embedded into the game space with every kept point sent to one colour:
/// first the colour of the game's first point, then the other one.
pub fn find_monochromatic_copy(
    d: &DistanceSet,
    strategy: &Strategy,
    target: usize,
    depth: usize,
    seed: u64,
    budget: GameBudget,
) -> Result<GameOutcome> {
    let (ok, _) = d.is_universal();
    if !ok {
        return Err(Error::NotUniversal(format!("{{{d}}}")));
    }
    let mut meter = Meter::new(budget)?;
    let chain = template::quotient_chain(d, seed)?;
    if chain.len() > budget.max_depth {
        return Err(Error::Budget(format!("{} quotient levels exceed the depth limit", chain.len())));
    }
    let (tpl, kept) = template::grow_template(d, &chain, target, depth, seed, budget.max_points)?;
    let kept: BTreeSet<usize> = kept.into_iter().collect();
    let mut game = build(d, 1, seed)?;
    let mut chi = Colouring::new(strategy.clone());
    let first = chi.colour(game.space(), 0);
    let order: Vec<usize> = tpl.space().points().collect();
    let mut last = None;
    for (attempt, c) in [first, 1 - first].into_iter().enumerate() {
        let r = embed_coloured(
            tpl.space().graph(),
            &mut game,
            &mut chi,
            Embedding::default(),
            &order,
            &mut |x| kept.contains(&x).then_some(c),
            &mut meter,
        );
        let emb = match r {
            Ok(e) => e,
            Err(e @ Error::Budget(_)) => {
                last = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut points: Vec<usize> = kept.iter().map(|&x| emb.get(x).expect("total")).collect();
        points.sort_unstable();
        let mut cert = certificate(Kind::MonoCopy, &game, &mut chi, &meter);
        cert.colour = Some(c);
        cert.points = points.clone();
        cert.source = Some(tpl.space().to_json());
        cert.embedding = emb.pairs().to_vec();
        cert.depth = depth;
        cert.min_points = target;
        cert.branch = format!("colour-{c}-attempt-{}", attempt + 1);
        cert.checks = vec![Check::Metric, Check::Colours, Check::Embedding, Check::Monochromatic, Check::Copy, Check::Size];
        cert.seal();
        return Ok(GameOutcome { colour: c, points, certificate: cert, game });
    }
    Err(last.expect("both colours tried"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{copy_check, saturate};

    fn ds(v: &[i64]) -> DistanceSet {
        DistanceSet::from_ints(v).unwrap()
    }

    fn planted(colours: Vec<u8>) -> Colouring {
        Colouring::new(Strategy::File { path: "planted".into(), colours })
    }

    fn space_of(c: &Certificate) -> Space {
        Space::from_json(&c.space).unwrap()
    }

    #[test]
    fn rank1_trivial_colourings() {
        let d = ds(&[0, 1, 2]);
        let mut a = build(&d, 12, 0).unwrap();
        let p = TypeFn::new(vec![(0, 1)]).unwrap();
        let (e, c, cert) = monochromatize_rank1(&mut a, &mut Colouring::new(Strategy::Const(0)), &p, GameBudget::points(50)).unwrap();
        assert_eq!((c, e.pairs().iter().all(|&(s, t)| s == t)), (0, true));
        assert!(verify_certificate(&cert));

        let orb = orbit(&p, a.space());
        let colours: Vec<u8> = a.space().points().map(|y| u8::from(orb.contains(&y))).collect();
        let (e, c, cert) = monochromatize_rank1(&mut a, &mut planted(colours), &p, GameBudget::points(50)).unwrap();
        assert_eq!((c, e.pairs().iter().all(|&(s, t)| s == t)), (1, true));
        assert!(verify_certificate(&cert));
    }

    #[test]
    fn rank1_random_colourings_verify() {
        let d = ds(&[0, 1, 2]);
        for seed in 0..5 {
            let mut a = build(&d, 10, seed).unwrap();
            for p in [vec![(0, 1)], vec![(0, 1), (1, 2)], vec![(0, 2), (1, 1)]] {
                let p = TypeFn::new(p).unwrap();
                if !is_katetov(&p, a.space()) {
                    continue;
                }
                let mut chi = Colouring::new(Strategy::Random(seed));
                let (_, c, cert) = monochromatize_rank1(&mut a, &mut chi, &p, GameBudget::points(200)).unwrap();
                assert_eq!(cert.colour, Some(c));
                assert!(verify_report(&cert).is_ok(), "{:?}", verify_report(&cert));
            }
        }
        let mut a = build(&d, 10, 0).unwrap();
        let bad = TypeFn::new(vec![(0, 2)]).unwrap();
        assert!(monochromatize_rank1(&mut a, &mut Colouring::new(Strategy::Parity), &bad, GameBudget::default()).is_err());
    }

    #[test]
    fn uniformize_verifies() {
        let d = ds(&[0, 1, 2]);
        for (r, seed) in [(1, 0), (2, 1), (2, 2)] {
            let mut a = build(&d, 14, seed).unwrap();
            let mut chi = Colouring::new(Strategy::ProfileHash(seed));
            let (e, cert) = uniformize(&mut a, &mut chi, Dist::int(r), 2, GameBudget::points(400)).unwrap();
            assert_eq!(e.len(), 14);
            assert!(verify_report(&cert).is_ok(), "{:?}", verify_report(&cert));
            // exhaustive oracle over all prefixes of the image enumeration
            let s = a.space();
            let en = &cert.points;
            for k in 2..en.len() {
                let mut colour: BTreeMap<Vec<DistIdx>, u8> = BTreeMap::new();
                for &y in &en[k..] {
                    let ty: Vec<DistIdx> = en[..k].iter().map(|&x| s.dist(x, y)).collect();
                    if *ty.iter().min().unwrap() as i64 == r {
                        assert_eq!(*colour.entry(ty).or_insert(chi.colour(s, y)), chi.colour(s, y));
                    }
                }
            }
        }
        let d1 = ds(&[0, 1]);
        let mut a = build(&d1, 8, 0).unwrap();
        let (_, cert) = uniformize(&mut a, &mut Colouring::new(Strategy::Random(3)), Dist::int(1), 1, GameBudget::default()).unwrap();
        assert!(verify_certificate(&cert));
    }

    #[test]
    fn probe_trivial_and_oracle() {
        let d = ds(&[0, 1, 2]);
        let p = TypeFn::new(vec![(0, 2)]).unwrap();
        for i in [0u8, 1] {
            let mut a = build(&d, 12, 0).unwrap();
            match extendibility_probe(&mut a, &mut Colouring::new(Strategy::Const(i)), &p, i, GameBudget::default()).unwrap() {
                Verdict::Witness { g, sample, .. } => {
                    assert_eq!(g.rank().unwrap(), 1);
                    assert!(p.is_sub(&g) && !sample.is_empty());
                }
                v => panic!("{v:?}"),
            }
            let v = extendibility_probe(&mut a, &mut Colouring::new(Strategy::Const(1 - i)), &p, i, GameBudget::points(2000)).unwrap();
            assert!(matches!(v, Verdict::RefutedAtBudget { .. }), "{v:?}");
        }
        // budget 0: a witness exists iff some candidate orbit is nonempty and one-coloured
        for seed in 0..6 {
            let mut a = build(&d, 8, seed).unwrap();
            let snap = a.space().clone();
            let mut chi = Colouring::new(Strategy::Random(seed));
            let cols = chi.colours(&snap);
            let oracle = snap.points().filter(|&x| x != 0).any(|x| {
                let g = p.with(x, 1);
                let o = orbit(&g, &snap);
                is_katetov(&g, &snap) && !o.is_empty() && o.iter().all(|&y| cols[y] == 0)
            });
            let v = extendibility_probe(&mut a, &mut chi, &p, 0, GameBudget::points(0)).unwrap();
            assert_eq!(matches!(v, Verdict::Witness { .. }), oracle);
        }
        let mut a = build(&d, 12, 0).unwrap();
        assert!(extendibility_probe(&mut a, &mut Colouring::new(Strategy::Parity), &TypeFn::new(vec![(0, 1)]).unwrap(), 0, GameBudget::default()).is_err());
    }

    #[test]
    fn central_extension_examples() {
        let d = ds(&[0, 1, 2]);
        let mut a = build(&d, 10, 0).unwrap();
        saturate(&mut a, 2, &mut Budget::unlimited()).unwrap();
        let q = TypeFn::new(vec![(0, 2), (1, 2)]).unwrap();
        let (c, cert) = central_extension(&mut a, &mut Colouring::new(Strategy::Const(1)), &q, 1, GameBudget::default()).unwrap();
        assert_eq!(c, a.space().points().take(c.len()).collect::<Vec<_>>());
        assert!(verify_certificate(&cert));

        let n = a.len();
        let colours: Vec<u8> = (0..4 * n).map(|i| u8::from(i >= n)).collect();
        let mut chi = planted(colours);
        let (c, cert) = central_extension(&mut a, &mut chi, &q, 1, GameBudget::default()).unwrap();
        assert!(verify_report(&cert).is_ok(), "{:?}", verify_report(&cert));
        assert!(cert.depth >= 1 && copy_check(&a, &c, 1));
        let sp = a.space();
        assert!(orbit(&q, sp).iter().filter(|y| c.contains(y)).all(|&y| chi.colour(sp, y) == 1));

        assert!(matches!(central_extension(&mut a, &mut chi, &q, 1, GameBudget::points(0)), Err(Error::Budget(_))));
    }

    #[test]
    fn monochromatic_orbit_examples() {
        for (v, n) in [(&[0, 1][..], 8), (&[0, 1, 2][..], 20)] {
            let d = ds(v);
            for st in Strategy::battery() {
                let mut a = build(&d, n, 1).unwrap();
                let (p, c, cert) = monochromatic_orbit(&mut a, &mut Colouring::new(st.clone()), GameBudget::points(500)).unwrap();
                assert_eq!(d.value(p.rank().unwrap()), d.first_block().unwrap().max());
                if let Strategy::Const(k) = st {
                    assert_eq!(c, k);
                }
                assert!(verify_report(&cert).is_ok(), "{st}: {:?}", verify_report(&cert));
            }
        }
    }

    #[test]
    fn monochromatic_classes_examples() {
        let d = ds(&[0, 1, 3]);
        let mut a = build(&d, 20, 0).unwrap();
        let (e, _, cert) = monochromatic_classes(&mut a, &mut Colouring::new(Strategy::Const(0)), GameBudget::default()).unwrap();
        assert!(e.pairs().iter().all(|&(s, t)| s == t));
        assert!(verify_certificate(&cert));

        let part = classes(a.space(), Dist::int(1)).unwrap();
        let colours: Vec<u8> = a.space().points().map(|x| (part.class_of(x) % 2) as u8).collect();
        let (e, cols, cert) = monochromatic_classes(&mut a, &mut planted(colours), GameBudget::default()).unwrap();
        assert!(e.pairs().iter().all(|&(s, t)| s == t));
        assert!(!cols.is_empty() && verify_certificate(&cert));

        for seed in 0..4 {
            let mut a = build(&d, 25, seed).unwrap();
            let (_, _, cert) = monochromatic_classes(&mut a, &mut Colouring::new(Strategy::Random(seed)), GameBudget::default()).unwrap();
            assert!(verify_report(&cert).is_ok(), "{:?}", verify_report(&cert));
        }
        assert!(monochromatic_classes(&mut build(&ds(&[0, 1, 2]), 5, 0).unwrap(), &mut Colouring::new(Strategy::Parity), GameBudget::default()).is_err());
    }

    #[test]
    fn game_examples() {
        let d = ds(&[0, 1]);
        for st in Strategy::battery() {
            let out = find_monochromatic_copy(&d, &st, 10, 1, 0, GameBudget::default()).unwrap();
            assert!(out.points.len() >= 10);
            let s = space_of(&out.certificate);
            let mut chi = Colouring::new(st.clone());
            assert!(out.points.iter().all(|&y| chi.colour(&s, y) == out.colour));
            assert!(verify_certificate(&out.certificate));
        }
        let out = find_monochromatic_copy(&ds(&[0, 1, 3]), &Strategy::Parity, 6, 1, 0, GameBudget::default()).unwrap();
        assert!(verify_certificate(&out.certificate));
        assert!(copy_check(&out.game, &out.points, 1));
        let out = find_monochromatic_copy(&ds(&[0, 1, 2]), &Strategy::Const(1), 10, 1, 0, GameBudget::default()).unwrap();
        assert_eq!(out.colour, 1);
        assert!(matches!(find_monochromatic_copy(&d, &Strategy::Parity, 10, 1, 0, GameBudget::points(0)), Err(Error::Budget(_))));
        assert!(matches!(find_monochromatic_copy(&ds(&[0, 1, 2, 4]), &Strategy::Parity, 10, 1, 0, GameBudget::default()), Err(Error::NotUniversal(_))));
    }

    #[test]
    fn tampering_is_rejected() {
        let out = find_monochromatic_copy(&ds(&[0, 1, 2]), &Strategy::Random(2), 10, 1, 0, GameBudget::default()).unwrap();
        let good = out.certificate;
        assert!(verify_certificate(&good));

        let mut t = good.clone();
        let p = t.points[0];
        t.colours[p] ^= 1;
        assert!(!verify_certificate(&t));
        t.seal();
        assert!(!verify_certificate(&t));

        let mut t = good.clone();
        let (a, b) = (t.points[0], t.points[1]);
        let other = if t.space.dist[a][b] == Dist::int(1) { Dist::int(2) } else { Dist::int(1) };
        t.space.dist[a][b] = other;
        t.space.dist[b][a] = other;
        assert!(!verify_certificate(&t));
        t.seal();
        assert!(!verify_certificate(&t));

        let mut t = good.clone();
        t.min_points += 100;
        t.seal();
        assert!(!verify_certificate(&t));
    }

    #[test]
    fn games_are_deterministic() {
        let d = ds(&[0, 1, 2, 5, 6]);
        let a = find_monochromatic_copy(&d, &Strategy::ProfileHash(0), 10, 1, 3, GameBudget::default()).unwrap();
        let b = find_monochromatic_copy(&d, &Strategy::ProfileHash(0), 10, 1, 3, GameBudget::default()).unwrap();
        assert_eq!(a.certificate.to_json(), b.certificate.to_json());
    }
}
