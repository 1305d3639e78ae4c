//! Acceptance battery. Every criterion prints one `PASS` or `FAIL` line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use urforge::builder::{build, copy_check_with, saturate, Budget};
use urforge::engine::{
    central_extension, find_monochromatic_copy, monochromatic_classes, monochromatic_orbit, monochromatize_rank1,
    uniformize, verify_certificate, Certificate, Colouring, GameBudget, Strategy,
};
use urforge::orbits::{amalgamate, distance_range, min_distance_matrix, r_levelling, reduce, shrink_step, LevellingPolicy};
use urforge::quotient::{classes, quotient_space};
use urforge::space::{enumerate_katetov, extend, orbit, realizes};
use urforge::{Dist, DistIdx, DistanceSet, Embedding, Space, TypeFn};

fn report(n: usize, what: &str, start: Instant, r: Result<String, String>) {
    let secs = start.elapsed().as_secs_f64();
    match r {
        Ok(detail) => println!("criterion {n}: PASS  {what}: {detail} ({secs:.1}s)"),
        Err(why) => {
            println!("criterion {n}: FAIL  {what}: {why} ({secs:.1}s)");
            panic!("criterion {n} failed: {why}");
        }
    }
}

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn q(d: Dist) -> Rational64 {
    d.ratio()
}

fn tri(a: Rational64, b: Rational64, c: Rational64) -> bool {
    a <= b + c && b <= a + c && c <= a + b
}

fn ds(v: &[i64]) -> DistanceSet {
    DistanceSet::from_ints(v).unwrap()
}

// ---------------------------------------------------------------------------
// independent oracles

/// Four-point amalgamation scan over plain rationals; `vals` is sorted and
/// starts with zero.
fn oracle_universal(vals: &[Rational64]) -> bool {
    let pos = &vals[1..];
    for &e in vals {
        let mut pairs = Vec::new();
        for &x in pos {
            for &y in pos {
                let ok = if e == Rational64::from(0) { x == y } else { tri(e, x, y) };
                if ok {
                    pairs.push((x, y));
                }
            }
        }
        for &(x0, y0) in &pairs {
            for &(x1, y1) in &pairs {
                if !pos.iter().any(|&t| tri(t, x0, x1) && tri(t, y0, y1)) {
                    return false;
                }
            }
        }
    }
    true
}

/// Symmetric, zero exactly on the diagonal, every triangle metric, every
/// entry in `allowed`.
fn metric_ok(m: &[Vec<Dist>], allowed: &DistanceSet) -> Result<(), String> {
    let n = m.len();
    let vals: BTreeSet<Rational64> = allowed.members().iter().map(|&d| q(d)).collect();
    for i in 0..n {
        ensure(m[i].len() == n, || format!("row {i} has length {}", m[i].len()))?;
        for j in 0..n {
            let v = q(m[i][j]);
            ensure(v == q(m[j][i]), || format!("asymmetric at ({i},{j})"))?;
            ensure((v == Rational64::from(0)) == (i == j), || format!("zero pattern broken at ({i},{j})"))?;
            ensure(vals.contains(&v), || format!("{v} at ({i},{j}) outside D"))?;
        }
    }
    for i in 0..n {
        for j in 0..i {
            for k in 0..j {
                ensure(tri(q(m[i][j]), q(m[j][k]), q(m[i][k])), || format!("triangle ({k},{j},{i}) fails"))?;
            }
        }
    }
    Ok(())
}

fn range_oracle(d: &DistanceSet, s: &TypeFn, t: &TypeFn) -> Vec<Rational64> {
    let sv: Vec<Rational64> = s.entries().iter().map(|e| q(d.value(e.1))).collect();
    let tv: Vec<Rational64> = t.entries().iter().map(|e| q(d.value(e.1))).collect();
    let lo = sv.iter().zip(&tv).map(|(a, b)| if a > b { a - b } else { b - a }).max().unwrap();
    let hi = sv.iter().zip(&tv).map(|(a, b)| a + b).min().unwrap();
    d.members().iter().map(|&m| q(m)).filter(|&m| lo <= m && m <= hi).collect()
}

/// Integer sets `{0} ∪ S` with `S ⊆ {1..=max}`, `1 ≤ |S| ≤ k` and gcd 1.
fn canonical_sets(k: usize, max: i64) -> Vec<Vec<i64>> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let mut out = Vec::new();
    for mask in 1u32..(1 << max) {
        if mask.count_ones() as usize > k {
            continue;
        }
        let s: Vec<i64> = (1..=max).filter(|i| mask >> (i - 1) & 1 == 1).collect();
        if s.iter().fold(0, |g, &x| gcd(g, x)) != 1 {
            continue;
        }
        out.push(std::iter::once(0).chain(s).collect());
    }
    out
}

fn universal_sets(k: usize, max: i64) -> Vec<DistanceSet> {
    canonical_sets(k, max).iter().map(|v| ds(v)).filter(|d| d.is_universal().0).collect()
}

// ---------------------------------------------------------------------------
// the game battery, shared by several criteria

const GAME_SETS: [&[i64]; 4] = [&[0, 1], &[0, 1, 2], &[0, 1, 3], &[0, 1, 2, 5, 6]];

struct Played {
    d: DistanceSet,
    strategy: Strategy,
    cert: Certificate,
    points: Vec<usize>,
    colour: u8,
}

fn play_battery() -> Result<Vec<Played>, String> {
    let mut out = Vec::new();
    for v in GAME_SETS {
        let d = ds(v);
        for st in Strategy::battery() {
            let g = find_monochromatic_copy(&d, &st, 10, 1, 0, GameBudget::default())
                .map_err(|e| format!("D={{{d}}} {st}: {e}"))?;
            out.push(Played { d: d.clone(), strategy: st, cert: g.certificate, points: g.points, colour: g.colour });
        }
    }
    Ok(out)
}

fn battery() -> &'static Result<Vec<Played>, String> {
    static B: OnceLock<Result<Vec<Played>, String>> = OnceLock::new();
    B.get_or_init(play_battery)
}

/// Certificates from every engine operation, not only the game.
fn operation_certificates() -> Vec<Certificate> {
    let mut out = Vec::new();
    let d = ds(&[0, 1, 2]);
    let mut a = build(&d, 10, 1).unwrap();
    let p = TypeFn::new(vec![(0, 1)]).unwrap();
    out.push(monochromatize_rank1(&mut a, &mut Colouring::new(Strategy::Random(2)), &p, GameBudget::points(200)).unwrap().2);
    let mut a = build(&d, 14, 1).unwrap();
    out.push(uniformize(&mut a, &mut Colouring::new(Strategy::ProfileHash(1)), Dist::int(2), 2, GameBudget::points(400)).unwrap().1);
    let mut a = build(&d, 10, 0).unwrap();
    saturate(&mut a, 2, &mut Budget::unlimited()).unwrap();
    let qf = TypeFn::new(vec![(0, 2), (1, 2)]).unwrap();
    out.push(central_extension(&mut a, &mut Colouring::new(Strategy::Parity), &qf, 1, GameBudget::default()).unwrap().1);
    let mut a = build(&d, 20, 1).unwrap();
    out.push(monochromatic_orbit(&mut a, &mut Colouring::new(Strategy::Random(4)), GameBudget::points(500)).unwrap().2);
    let d3 = ds(&[0, 1, 3]);
    let mut a = build(&d3, 30, 2).unwrap();
    out.push(monochromatic_classes(&mut a, &mut Colouring::new(Strategy::Random(1)), GameBudget::points(1000)).unwrap().2);
    out
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_1_universality() {
    let start = Instant::now();
    let r = (|| -> Result<String, String> {
        let sets = canonical_sets(5, 12);
        let scales = [Rational64::from(1), Rational64::new(3, 2), Rational64::new(2, 5), Rational64::new(7, 3)];
        let mut checked = 0;
        let mut universal = 0;
        for v in &sets {
            for &sc in &scales {
                let vals: Vec<Rational64> = v.iter().map(|&x| Rational64::from(x) * sc).collect();
                let members: Vec<Dist> = vals.iter().map(|r| Dist::new(*r.numer(), *r.denom()).unwrap()).collect();
                let d = DistanceSet::new(members).unwrap();
                let (u, w) = d.is_universal();
                let want = oracle_universal(&vals);
                ensure(u == want, || format!("{{{d}}}: is_universal {u}, oracle {want}"))?;
                ensure(w.is_some() != u, || format!("{{{d}}}: witness presence disagrees with the verdict"))?;
                checked += 1;
                universal += usize::from(u);
            }
        }
        for m in 1..=6 {
            let v: Vec<i64> = (0..=m).collect();
            ensure(ds(&v).is_universal().0, || format!("{{0..{m}}} reported non-universal"))?;
        }
        let d = ds(&[0, 1, 2, 4]);
        let (u, w) = d.is_universal();
        let w = w.ok_or("no witness for {0,1,2,4}")?;
        ensure(!u, || "{0,1,2,4} reported universal".into())?;
        let (bc, (x0, y0), (x1, y1)) = (q(w.bc), (q(w.a0.0), q(w.a0.1)), (q(w.a1.0), q(w.a1.1)));
        let zero = Rational64::from(0);
        let face = |x: Rational64, y: Rational64| if bc == zero { x == y } else { tri(bc, x, y) };
        ensure(face(x0, y0) && face(x1, y1), || "witness triangles are not metric".into())?;
        let any_t = d.members()[1..].iter().any(|&t| tri(q(t), x0, x1) && tri(q(t), y0, y1));
        ensure(!any_t && w.admissible.is_empty(), || "witness admits a fourth distance".into())?;
        let secs = start.elapsed().as_secs();
        ensure(secs < 60, || format!("took {secs}s"))?;
        Ok(format!("{checked} sets ({} canonical × {} scales), {universal} universal", sets.len(), scales.len()))
    })();
    report(1, "universality battery", start, r);
}

#[test]
fn criterion_2_blocks() {
    let start = Instant::now();
    let r = (|| -> Result<String, String> {
        let mut count = 0;
        let mut pairs_with_s = 0;
        for d in universal_sets(5, 12) {
            let vals: Vec<Rational64> = d.members().iter().map(|&x| q(x)).collect();
            let n = vals.len();
            let pos_of = |x: Rational64| vals.iter().position(|&v| v == x).unwrap();
            let pred = |x: Rational64| vals[pos_of(x) - 1];
            let succ = |x: Rational64| vals[(pos_of(x) + 1).min(n - 1)];
            let blocks = d.blocks().map_err(|e| format!("{{{d}}}: {e}"))?;
            let bs: Vec<Vec<Rational64>> = blocks.iter().map(|b| b.members.iter().map(|&x| q(x)).collect()).collect();
            let flat: Vec<Rational64> = bs.iter().flatten().copied().collect();
            ensure(flat == vals[1..], || format!("{{{d}}}: blocks do not partition D \\ {{0}}"))?;
            for (i, b) in bs.iter().enumerate() {
                let b0 = b[0];
                ensure(!b.is_empty() && b0 > Rational64::from(0), || format!("{{{d}}}: empty or zero block"))?;
                ensure(b0 > pred(b0) + pred(b0), || format!("{{{d}}}: block {i} starts below twice its predecessor"))?;
                for w in b.windows(2) {
                    ensure(w[0] < w[1], || format!("{{{d}}}: block {i} not increasing"))?;
                    ensure(w[1] == succ(w[0]), || format!("{{{d}}}: block {i} skips a member"))?;
                    ensure(w[0] + b0 >= w[1], || format!("{{{d}}}: block {i} step {} → {} exceeds {b0}", w[0], w[1]))?;
                }
                let last_block = i + 1 == bs.len();
                for (k, &x) in b.iter().enumerate() {
                    if k + 1 < b.len() || last_block {
                        ensure(x + b0 >= succ(x), || format!("{{{d}}}: {x} + {b0} < successor"))?;
                    }
                }
                if let Some(next) = bs.get(i + 1) {
                    ensure(b.iter().all(|x| next.iter().all(|y| x < y)), || format!("{{{d}}}: blocks {i}, {} overlap", i + 1))?;
                    ensure(Rational64::from(2) * b[b.len() - 1] < next[0], || format!("{{{d}}}: gap after block {i} too small"))?;
                }
                ensure(d.is_block(&blocks[i].members), || format!("{{{d}}}: is_block rejects block {i}"))?;
            }
            for &m in &vals[1..] {
                let s: Vec<Rational64> = vals.iter().copied().filter(|&r| succ(r) > m + r).collect();
                if let Some(&r) = s.first() {
                    ensure(succ(r) > r + r, || format!("{{{d}}}, m={m}: min S = {r} is not a jump"))?;
                    let rd = d.members()[pos_of(r)];
                    ensure(matches!(d.is_jump(rd), Ok(true)), || format!("{{{d}}}: is_jump({r}) disagrees"))?;
                    pairs_with_s += 1;
                }
            }
            count += 1;
        }
        Ok(format!("{count} universal sets, {pairs_with_s} (D, m) pairs with nonempty S"))
    })();
    report(2, "block decomposition", start, r);
}

#[test]
fn criterion_3_metric_soundness() {
    let start = Instant::now();
    let r = (|| -> Result<String, String> {
        let mut n_build = 0;
        let mut n_extend = 0;
        let mut n_amalg = 0;
        let mut n_level = 0;
        let mut n_quot = 0;
        for (i, d) in universal_sets(4, 10).iter().enumerate() {
            let seed = i as u64 % 3;
            let a = build(d, 12, seed).map_err(|e| format!("build {{{d}}}: {e}"))?;
            metric_ok(&a.space().matrix(), d).map_err(|e| format!("build {{{d}}} seed {seed}: {e}"))?;
            n_build += 1;
            let s = a.space();
            for dom in [vec![0], vec![0, 1], vec![1, 3, 5]] {
                for t in enumerate_katetov(s, &dom) {
                    let (e, p) = extend(s, &t).map_err(|e| format!("extend {{{d}}}: {e}"))?;
                    metric_ok(&e.matrix(), d).map_err(|e| format!("extend {{{d}}} {t:?}: {e}"))?;
                    ensure(realizes(&e, p, &t), || format!("extend {{{d}}}: new point misses {t:?}"))?;
                    n_extend += 1;
                }
            }
            let fam: Vec<TypeFn> = enumerate_katetov(s, &[0, 1]).into_iter().take(8).collect();
            if fam.len() >= 2 {
                let idx = min_distance_matrix(d, &fam).map_err(|e| e.to_string())?;
                let g = amalgamate(s, &fam, &idx).map_err(|e| format!("amalgamate {{{d}}}: {e}"))?;
                metric_ok(&g.matrix(), d).map_err(|e| format!("amalgamate {{{d}}}: {e}"))?;
                n_amalg += 1;
            }
            let first = d.first_block().unwrap();
            for &r in &first.members[1..] {
                // levelling is defined for families of rank r or r⁻
                let ri = d.index_of(r).unwrap();
                let lfam: Vec<TypeFn> = enumerate_katetov(s, &[0, 1])
                    .into_iter()
                    .filter(|t| matches!(t.rank(), Ok(k) if k == ri || k + 1 == ri))
                    .take(8)
                    .collect();
                if lfam.len() < 2 {
                    continue;
                }
                for policy in [LevellingPolicy::Lower, LevellingPolicy::Upper, LevellingPolicy::Seeded(seed)] {
                    let lev = match r_levelling(d, &lfam, r, &policy) {
                        Ok(l) => l,
                        Err(e) => return Err(format!("r_levelling {{{d}}} r={r}: {e}")),
                    };
                    metric_ok(&lev.to_values(d), d).map_err(|e| format!("r_levelling {{{d}}} r={r}: {e}"))?;
                    let g = amalgamate(s, &lfam, &lev).map_err(|e| format!("levelled amalgam {{{d}}}: {e}"))?;
                    metric_ok(&g.matrix(), d).map_err(|e| format!("levelled amalgam {{{d}}}: {e}"))?;
                    n_level += 1;
                }
            }
            if d.blocks().unwrap().len() >= 2 {
                let big = build(d, 40, seed).unwrap();
                let p = classes(big.space(), first.max()).map_err(|e| format!("classes {{{d}}}: {e}"))?;
                let qs = quotient_space(big.space(), &p).map_err(|e| format!("quotient {{{d}}}: {e}"))?;
                metric_ok(&qs.space.matrix(), qs.space.dset()).map_err(|e| format!("quotient {{{d}}}: {e}"))?;
                n_quot += 1;
            }
        }
        let games = battery().as_ref().map_err(|e| e.clone())?;
        for g in games {
            let s = Space::from_json(&g.cert.space).map_err(|e| e.to_string())?;
            metric_ok(&s.matrix(), &g.d).map_err(|e| format!("game space {{{}}} {}: {e}", g.d, g.strategy))?;
        }
        Ok(format!(
            "{n_build} builds, {n_extend} extensions, {n_amalg} amalgams, {n_level} levellings, {n_quot} quotients, {} game spaces",
            games.len()
        ))
    })();
    report(3, "metric soundness", start, r);
}

#[test]
fn criterion_4_range_vs_realization() {
    let start = Instant::now();
    let r = (|| -> Result<String, String> {
        let sets: Vec<DistanceSet> = universal_sets(4, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut instances = 0;
        while instances < 240 {
            let d = sets.choose(&mut rng).unwrap().clone();
            let k = rng.gen_range(1..=3usize);
            let n = rng.gen_range(k + 1..=30);
            let seed = rng.gen::<u64>() % 1000;
            let mut a = build(&d, n, seed).unwrap();
            let dom: Vec<usize> = (0..k).collect();
            let s = a.space().type_of(k, &dom);
            let t = enumerate_katetov(a.space(), &dom).choose(&mut rng).unwrap().clone();
            let want = range_oracle(&d, &s, &t);
            let got: Vec<Rational64> = distance_range(&d, &s, &t).map_err(|e| e.to_string())?.set.iter().map(|&x| q(x)).collect();
            ensure(got == want, || format!("{{{d}}} {s:?} {t:?}: formula {got:?}, oracle {want:?}"))?;
            let realized = |a: &urforge::builder::Approximant| -> BTreeSet<Rational64> {
                let sp = a.space();
                let os = orbit(&s, sp);
                let ot = orbit(&t, sp);
                os.iter().flat_map(|&x| ot.iter().map(move |&y| q(sp.dist_value(x, y)))).collect()
            };
            let before = realized(&a);
            ensure(before.iter().all(|m| want.contains(m)), || format!("{{{d}}} {s:?} {t:?}: realized {before:?} ⊄ {want:?}"))?;
            saturate(&mut a, k + 1, &mut Budget::unlimited()).map_err(|e| e.to_string())?;
            let after = realized(&a);
            ensure(after.iter().all(|m| want.contains(m)), || format!("{{{d}}}: after saturation {after:?} ⊄ {want:?}"))?;
            let (lo, hi) = (want[0], want[want.len() - 1]);
            ensure(after.contains(&lo) && after.contains(&hi), || {
                format!("{{{d}}} n={n} seed={seed} {s:?} {t:?}: min {lo} or max {hi} not realized in {after:?}")
            })?;
            instances += 1;
        }
        Ok(format!("{instances} instances"))
    })();
    report(4, "orbit distance range vs realization", start, r);
}

#[test]
fn criterion_5_orbit_structure() {
    let start = Instant::now();
    let r = (|| -> Result<String, String> {
        let sets: Vec<DistanceSet> = universal_sets(4, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut done = 0;
        while done < 60 {
            let d = sets.choose(&mut rng).unwrap().clone();
            let seed = rng.gen::<u64>() % 1000;
            let mut a = build(&d, 10, seed).unwrap();
            saturate(&mut a, 2, &mut Budget::unlimited()).map_err(|e| e.to_string())?;
            let k = rng.gen_range(1..=2usize);
            let dom: Vec<usize> = (0..k).collect();
            let t = enumerate_katetov(a.space(), &dom).choose(&mut rng).unwrap().clone();
            let rank = q(d.value(t.rank().map_err(|e| e.to_string())?));
            let dt: Vec<DistIdx> = d.positive().filter(|&i| q(d.value(i)) <= rank * 2).collect();
            let within = |a: &urforge::builder::Approximant| {
                let o = orbit(&t, a.space());
                o.iter().all(|&x| o.iter().all(|&y| x == y || dt.contains(&a.space().dist(x, y))))
            };
            ensure(within(&a), || format!("{{{d}}} {t:?}: orbit distances leave D_t"))?;
            let o0 = *orbit(&t, a.space()).first().ok_or_else(|| format!("{{{d}}} {t:?}: empty orbit after saturation"))?;
            for &v in &dt {
                a.find_or_grow(&t.with(o0, v), &mut |_, _| true, &mut Budget::unlimited())
                    .map_err(|e| format!("{{{d}}} {t:?}: value {} at the first orbit point: {e}", d.value(v)))?;
            }
            ensure(within(&a), || format!("{{{d}}} {t:?}: orbit distances leave D_t after growth"))?;
            let o = orbit(&t, a.space());
            ensure(copy_check_with(a.space(), &o, 1, &dt), || format!("{{{d}}} {t:?}: orbit fails the depth-1 copy check"))?;
            done += 1;
        }
        Ok(format!("{done} functions"))
    })();
    report(5, "orbit structure", start, r);
}

fn check_embedding(
    before: &Space,
    after: &Space,
    e: &Embedding,
    fixed: &[usize],
    banned: &[usize],
    pairs: &[(TypeFn, TypeFn)],
) -> Result<(), String> {
    for &x in fixed {
        ensure(e.get(x) == Some(x), || format!("A point {x} moved"))?;
    }
    ensure(e.is_injective(), || "not injective".into())?;
    for &(x, fx) in e.pairs() {
        for &(y, fy) in e.pairs() {
            ensure(before.dist(x, y) == after.dist(fx, fy), || format!("distance ({x},{y}) not preserved"))?;
        }
        ensure(fixed.contains(&x) || !banned.contains(&fx), || format!("{x} ↦ {fx} lands in B"))?;
        for (t, s) in pairs {
            if !fixed.contains(&x) && realizes(before, x, t) {
                ensure(realizes(after, fx, s), || format!("{x} ∈ orb({t:?}) but {fx} ∉ orb({s:?})"))?;
            }
        }
    }
    Ok(())
}

#[test]
fn criterion_6_reduce_postconditions() {
    let start = Instant::now();
    let r = (|| -> Result<String, String> {
        let mut emitted = 0;
        let mut refused = 0;
        for v in [&[0, 1, 2][..], &[0, 1, 3]] {
            let d = ds(v);
            for seed in 0..3 {
                let base = build(&d, 8, seed).unwrap();
                let s0 = base.space().clone();
                let singles: Vec<(TypeFn, TypeFn)> = enumerate_katetov(&s0, &[0])
                    .into_iter()
                    .flat_map(|t| {
                        let mut out = vec![(t.clone(), t.clone())];
                        for e in enumerate_katetov(&s0, &[0, 1]) {
                            if t.is_sub(&e) && e.rank().ok() == t.rank().ok() {
                                out.push((t.clone(), e));
                            }
                        }
                        out
                    })
                    .collect();
                let mut families: Vec<Vec<(TypeFn, TypeFn)>> = singles.iter().map(|p| vec![p.clone()]).collect();
                for i in 0..singles.len() {
                    for j in 0..i {
                        let same_b = singles[i].1.domain() == singles[j].1.domain();
                        if same_b && singles[i].0 != singles[j].0 {
                            families.push(vec![singles[i].clone(), singles[j].clone()]);
                        }
                    }
                }
                for fam in &families {
                    let av = fam[0].0.domain();
                    let bv: Vec<usize> = fam[0].1.domain().into_iter().filter(|p| !av.contains(p)).collect();
                    for prefix in 1..=6 {
                        let mut a = base.clone();
                        match reduce(&mut a, fam, prefix, &mut Budget::unlimited()) {
                            Ok(e) => {
                                let want: BTreeSet<usize> = av.iter().copied().chain((0..prefix).filter(|p| !bv.contains(p))).collect();
                                ensure(e.sources().into_iter().collect::<BTreeSet<_>>() == want, || {
                                    format!("{{{d}}} reduce prefix {prefix}: domain {:?}", e.sources())
                                })?;
                                check_embedding(&s0, a.space(), &e, &av, &bv, fam)
                                    .map_err(|w| format!("{{{d}}} reduce {fam:?} prefix {prefix}: {w}"))?;
                                emitted += 1;
                            }
                            Err(_) => refused += 1,
                        }
                    }
                }
                // shrink_step with B elsewhere than v_1
                for t in enumerate_katetov(&s0, &[0]) {
                    for b in 1..=3 {
                        for e in enumerate_katetov(&s0, &[0, b]) {
                            if !t.is_sub(&e) || e.rank().ok() != t.rank().ok() {
                                continue;
                            }
                            for prefix in 1..=6 {
                                let rest: Vec<usize> = (1..prefix).filter(|&p| p != b).collect();
                                let mut a = base.clone();
                                match shrink_step(&mut a, &[0], &[b], &rest, &[t.clone()], &[e.clone()], &mut Budget::unlimited()) {
                                    Ok(emb) => {
                                        check_embedding(&s0, a.space(), &emb, &[0], &[b], &[(t.clone(), e.clone())])
                                            .map_err(|w| format!("{{{d}}} shrink_step {t:?} → {e:?}: {w}"))?;
                                        emitted += 1;
                                    }
                                    Err(_) => refused += 1,
                                }
                            }
                        }
                    }
                }
            }
        }
        ensure(emitted > 0, || "no embedding emitted".into())?;
        Ok(format!("{emitted} embeddings checked, {refused} calls refused on preconditions"))
    })();
    report(6, "reduce and shrink_step postconditions", start, r);
}

#[test]
fn criterion_7_indivisibility_game() {
    let start = Instant::now();
    let r = (|| -> Result<String, String> {
        let games = battery().as_ref().map_err(|e| e.clone())?;
        let mut grown = 0;
        for g in games {
            let tag = format!("D={{{}}} {}", g.d, g.strategy);
            ensure(verify_certificate(&g.cert), || format!("{tag}: certificate rejected"))?;
            ensure(g.points.len() >= 10, || format!("{tag}: only {} points", g.points.len()))?;
            ensure(g.cert.budget.grown <= 2000, || format!("{tag}: grew {} points", g.cert.budget.grown))?;
            ensure(g.cert.depth >= 1, || format!("{tag}: depth {}", g.cert.depth))?;
            let s = Space::from_json(&g.cert.space).map_err(|e| e.to_string())?;
            let mut chi = Colouring::new(g.strategy.clone());
            ensure(g.points.iter().all(|&p| chi.colour(&s, p) == g.colour), || format!("{tag}: copy is not monochromatic"))?;
            let vals: Vec<DistIdx> = g.d.positive().collect();
            ensure(copy_check_with(&s, &g.points, 1, &vals), || format!("{tag}: depth-1 copy check fails"))?;
            grown = grown.max(g.cert.budget.grown);
        }
        let secs = start.elapsed().as_secs();
        ensure(secs < 600, || format!("took {secs}s"))?;
        Ok(format!("{} games verified, at most {grown} points grown", games.len()))
    })();
    report(7, "indivisibility game", start, r);
}

fn verify_file(path: &Path) -> i32 {
    let st = Command::new(env!("CARGO_BIN_EXE_urforge")).arg("verify").arg(path).output().expect("verifier runs");
    st.status.code().unwrap_or(-1)
}

fn tamper(v: &Value) -> Value {
    match v {
        Value::Null => json!(0),
        Value::Bool(b) => json!(!b),
        Value::Number(n) => match n.as_u64() {
            Some(u) => json!(u + 1),
            None => json!(n.as_f64().unwrap_or(0.0) + 1.0),
        },
        Value::String(s) => json!(format!("{s}1")),
        Value::Array(a) if a.is_empty() => json!([0]),
        Value::Array(a) => {
            let mut a = a.clone();
            a[0] = tamper(&a[0]);
            Value::Array(a)
        }
        Value::Object(o) => {
            let mut o = o.clone();
            match o.keys().next().cloned() {
                Some(k) => {
                    let x = tamper(&o[&k]);
                    o.insert(k, x);
                }
                None => {
                    o.insert("x".into(), json!(0));
                }
            }
            Value::Object(o)
        }
    }
}

#[test]
fn criterion_8_certificate_independence() {
    let start = Instant::now();
    let r = (|| -> Result<String, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let games = battery().as_ref().map_err(|e| e.clone())?;
        let mut certs: Vec<String> = games.iter().map(|g| g.cert.to_json()).collect();
        certs.extend(operation_certificates().iter().map(|c| c.to_json()));
        // two certificates written by the command-line front end, with timestamps
        for (dv, st) in [("0,1,3", "parity"), ("0,1,2", "random:3")] {
            let path = dir.path().join(format!("cli-{st}.json").replace(':', "-"));
            let out = Command::new(env!("CARGO_BIN_EXE_urforge"))
                .args(["game", "-D", dv, "--strategy", st, "--target", "6", "-o"])
                .arg(&path)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(out.status.success(), || format!("game {dv} {st} exited with {:?}", out.status.code()))?;
            certs.push(std::fs::read_to_string(&path).map_err(|e| e.to_string())?);
        }
        let file = dir.path().join("cert.json");
        let mut tampers = 0;
        for (i, text) in certs.iter().enumerate() {
            std::fs::write(&file, text).map_err(|e| e.to_string())?;
            ensure(verify_file(&file) == 0, || format!("certificate {i} rejected by the verifier process"))?;
            let v: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
            let obj = v.as_object().ok_or("certificate is not an object")?;
            for key in obj.keys() {
                let mut t = obj.clone();
                t.insert(key.clone(), tamper(&obj[key]));
                std::fs::write(&file, serde_json::to_string(&t).unwrap()).map_err(|e| e.to_string())?;
                ensure(verify_file(&file) != 0, || format!("certificate {i}: tampered field {key:?} accepted"))?;
                tampers += 1;
            }
            // semantic tampers with a recomputed digest
            let c = Certificate::from_json(text).map_err(|e| e.to_string())?;
            if let Some(&p) = c.points.first() {
                let mut bad = c.clone();
                bad.colours[p] ^= 1;
                bad.seal();
                std::fs::write(&file, bad.to_json()).map_err(|e| e.to_string())?;
                ensure(verify_file(&file) != 0, || format!("certificate {i}: recoloured point accepted"))?;
                tampers += 1;
            }
            if c.points.len() >= 2 && !c.embedding.is_empty() {
                let (x, y) = (c.points[0], c.points[1]);
                let mut bad = c.clone();
                let old = bad.space.dist[x][y];
                let Some(&new) = bad.space.d.members().iter().rev().find(|&&m| m != old && !m.is_zero()) else { continue };
                bad.space.dist[x][y] = new;
                bad.space.dist[y][x] = new;
                bad.seal();
                std::fs::write(&file, bad.to_json()).map_err(|e| e.to_string())?;
                ensure(verify_file(&file) != 0, || format!("certificate {i}: altered distance accepted"))?;
                tampers += 1;
            }
        }
        Ok(format!("{} certificates verified out of process, {tampers} tampers rejected", certs.len()))
    })();
    report(8, "certificate independence", start, r);
}

#[test]
fn criterion_9_determinism() {
    let start = Instant::now();
    let r = (|| -> Result<String, String> {
        let mut compared = 0;
        for v in GAME_SETS {
            let d = ds(v);
            for seed in [0, 7, 99] {
                let a = build(&d, 40, seed).unwrap().space().to_json();
                let b = build(&d, 40, seed).unwrap().space().to_json();
                ensure(serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap(), || {
                    format!("build {{{d}}} seed {seed} differs")
                })?;
                compared += 1;
            }
        }
        let first = battery().as_ref().map_err(|e| e.clone())?;
        let again = play_battery()?;
        for (x, y) in first.iter().zip(&again) {
            ensure(x.cert.to_json() == y.cert.to_json(), || format!("game {{{}}} {} differs between runs", x.d, x.strategy))?;
            compared += 1;
        }
        let a: Vec<String> = operation_certificates().iter().map(|c| c.to_json()).collect();
        let b: Vec<String> = operation_certificates().iter().map(|c| c.to_json()).collect();
        ensure(a == b, || "operation certificates differ between runs".into())?;
        compared += a.len();
        let run = |args: &[&str]| -> Result<Vec<u8>, String> {
            let out = Command::new(env!("CARGO_BIN_EXE_urforge")).args(args).output().map_err(|e| e.to_string())?;
            ensure(out.status.success(), || format!("{args:?} exited with {:?}", out.status.code()))?;
            Ok(out.stdout)
        };
        for args in [
            &["gen", "-D", "0,1,3", "-n", "25", "--seed", "5"][..],
            &["game", "-D", "0,1,2,5,6", "--strategy", "profile-hash", "--no-timestamp"],
            &["game", "-D", "0,1,2", "--strategy", "random:2", "--seed", "3", "--no-timestamp"],
        ] {
            ensure(run(args)? == run(args)?, || format!("{args:?} output differs between runs"))?;
            compared += 1;
        }
        Ok(format!("{compared} artefacts byte-identical across runs"))
    })();
    report(9, "determinism", start, r);
}
