//! Game certificates and their verifier.
//!
//! The verifier reads only the serialized data. It re-derives every claim
//! with its own exact arithmetic and does not call the construction code.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::colouring::Strategy;
use crate::distset::Dist;
use crate::error::{Error, Result};
use crate::space::SpaceJson;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    MonoOrbit,
    UniformEnum,
    CentralExt,
    MonoClasses,
    MonoCopy,
}

/// One replayable claim.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// `space` is a metric space over `D`.
    Metric,
    /// `colours` are the strategy's colours of the points of `space`.
    Colours,
    /// `embedding` preserves distances from `source` into `space`.
    Embedding,
    /// `embedding` fixes every point of `fixed`.
    Fixed,
    /// Every point of `points` has colour `colour`.
    Monochromatic,
    /// Every point of `points` realizing `function` has colour `colour`, and
    /// there are at least `min_points` of them.
    Orbit,
    /// `points`, read as an enumeration, is `rank`-uniform from `from`.
    Uniform,
    /// Every `∼` class of `points` at threshold `rank` is monochromatic.
    Classes,
    /// `points` passes the copy check at `depth`.
    Copy,
    /// `points` has at least `min_points` elements.
    Size,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetRecord {
    pub max_points: usize,
    pub search_cap: usize,
    pub grown: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: Kind,
    pub strategy: String,
    pub space: SpaceJson,
    pub colours: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colour: Option<u8>,
    pub points: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SpaceJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embedding: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fixed: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<Vec<(usize, Dist)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<Dist>,
    #[serde(default)]
    pub from: usize,
    #[serde(default)]
    pub depth: usize,
    #[serde(default)]
    pub min_points: usize,
    pub budget: BudgetRecord,
    pub branch: String,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default)]
    pub digest: String,
}

impl Certificate {
    /// SHA-256 of the canonical JSON of every field except `digest`.
    pub fn compute_digest(&self) -> String {
        let mut v = serde_json::to_value(self).expect("certificate serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("digest");
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }

    pub fn seal(&mut self) {
        self.digest = self.compute_digest();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::Parse("empty certificate".into()));
        }
        Ok(serde_json::from_str(text)?)
    }
}

/// Replays every claim; `Err` names the first failing check.
pub fn verify_report(c: &Certificate) -> std::result::Result<(), String> {
    if c.digest != c.compute_digest() {
        return Err("digest: does not match contents".into());
    }
    let g = Graph::load(&c.space).map_err(|e| format!("metric: {e}"))?;
    let mut checks: BTreeSet<Check> = c.checks.iter().copied().collect();
    checks.extend([Check::Metric, Check::Colours]);
    for ch in checks {
        run(ch, c, &g).map_err(|e| format!("{}: {e}", serde_json::to_value(ch).unwrap().as_str().unwrap()))?;
    }
    Ok(())
}

pub fn verify_certificate(c: &Certificate) -> bool {
    verify_report(c).is_ok()
}

/// Parses and verifies. Parse failures are errors; failed checks are `Ok(Err)`.
pub fn verify_json(text: &str) -> Result<std::result::Result<(), String>> {
    Ok(verify_report(&Certificate::from_json(text)?))
}

// the space as a matrix of indices into the sorted member list
struct Graph {
    dists: Vec<Dist>,
    vals: Vec<Rational64>,
    m: Vec<Vec<usize>>,
}

impl Graph {
    fn load(j: &SpaceJson) -> std::result::Result<Graph, String> {
        let vals: Vec<Rational64> = j.d.members().iter().map(|d| d.ratio()).collect();
        if vals.first() != Some(&Rational64::from_integer(0)) || vals.windows(2).any(|w| w[0] >= w[1]) {
            return Err("D must be increasing and start at 0".into());
        }
        if j.dist.len() != j.n {
            return Err(format!("n = {} but {} rows", j.n, j.dist.len()));
        }
        let mut m = Vec::with_capacity(j.n);
        for row in &j.dist {
            if row.len() != j.n {
                return Err("ragged matrix".into());
            }
            let r: std::result::Result<Vec<usize>, String> = row
                .iter()
                .map(|d| vals.binary_search(&d.ratio()).map_err(|_| format!("{d} not in D")))
                .collect();
            m.push(r?);
        }
        Ok(Graph { dists: j.d.members().to_vec(), vals, m })
    }

    fn len(&self) -> usize {
        self.m.len()
    }

    fn value(&self, a: usize, b: usize) -> Rational64 {
        self.vals[self.m[a][b]]
    }

    fn check_metric(&self) -> std::result::Result<(), String> {
        let n = self.len();
        let k = self.vals.len();
        // le[i][j][l]: vals[l] ≤ vals[i] + vals[j]
        let le: Vec<Vec<Vec<bool>>> =
            (0..k).map(|i| (0..k).map(|j| (0..k).map(|l| self.vals[l] <= self.vals[i] + self.vals[j]).collect()).collect()).collect();
        for a in 0..n {
            if self.m[a][a] != 0 {
                return Err(format!("δ(v{a},v{a}) ≠ 0"));
            }
            for b in 0..a {
                if self.m[a][b] != self.m[b][a] {
                    return Err(format!("asymmetric at v{a},v{b}"));
                }
                if self.m[a][b] == 0 {
                    return Err(format!("δ(v{a},v{b}) = 0"));
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                let ab = &le[self.m[a][b]];
                for c in 0..n {
                    if !ab[self.m[b][c]][self.m[a][c]] {
                        return Err(format!("triangle v{a},v{b},v{c}"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn in_range(g: &Graph, pts: &[usize]) -> std::result::Result<(), String> {
    match pts.iter().find(|&&p| p >= g.len()) {
        Some(p) => Err(format!("point {p} outside the space")),
        None => Ok(()),
    }
}

fn run(ch: Check, c: &Certificate, g: &Graph) -> std::result::Result<(), String> {
    in_range(g, &c.points)?;
    let colour = || c.colour.ok_or_else(|| "no colour claimed".to_string());
    match ch {
        Check::Metric => g.check_metric(),
        Check::Colours => {
            if c.colours.len() != g.len() || c.colours.iter().any(|&x| x > 1) {
                return Err("colour list does not cover the space".into());
            }
            if c.strategy.starts_with("file:") {
                return Ok(());
            }
            let st: Strategy = c.strategy.parse().map_err(|e| format!("{e}"))?;
            for id in 0..g.len() {
                let profile: Vec<Dist> = (0..id).map(|q| g.dists[g.m[id][q]]).collect();
                if st.colour_of(id, &profile) != c.colours[id] {
                    return Err(format!("v{id} is not coloured {}", c.colours[id]));
                }
            }
            Ok(())
        }
        Check::Embedding => {
            let src = c.source.as_ref().ok_or("no source space")?;
            let sg = Graph::load(src)?;
            if sg.vals != g.vals {
                return Err("source and target distance sets differ".into());
            }
            let srcs: BTreeSet<usize> = c.embedding.iter().map(|e| e.0).collect();
            let imgs: BTreeSet<usize> = c.embedding.iter().map(|e| e.1).collect();
            if srcs.len() != c.embedding.len() || imgs.len() != c.embedding.len() {
                return Err("not injective or not a function".into());
            }
            if srcs.iter().any(|&s| s >= sg.len()) || imgs.iter().any(|&t| t >= g.len()) {
                return Err("point out of range".into());
            }
            for &(s1, t1) in &c.embedding {
                for &(s2, t2) in &c.embedding {
                    if sg.m[s1][s2] != g.m[t1][t2] {
                        return Err(format!("δ(v{s1},v{s2}) is not preserved"));
                    }
                }
            }
            Ok(())
        }
        Check::Fixed => {
            let map: BTreeMap<usize, usize> = c.embedding.iter().copied().collect();
            match c.fixed.iter().find(|&&x| map.get(&x) != Some(&x)) {
                Some(x) => Err(format!("v{x} is moved")),
                None => Ok(()),
            }
        }
        Check::Monochromatic => {
            let col = colour()?;
            match c.points.iter().find(|&&p| c.colours[p] != col) {
                Some(&p) => Err(format!("v{p} has colour {}", c.colours[p])),
                None => Ok(()),
            }
        }
        Check::Orbit => {
            let col = colour()?;
            let f = c.function.as_ref().ok_or("no function")?;
            let dom: Vec<usize> = f.iter().map(|e| e.0).collect();
            in_range(g, &dom)?;
            let mut count = 0;
            for &y in &c.points {
                if f.iter().all(|&(x, v)| x != y && g.value(x, y) == v.ratio()) {
                    if c.colours[y] != col {
                        return Err(format!("orbit point v{y} has colour {}", c.colours[y]));
                    }
                    count += 1;
                }
            }
            if count < c.min_points {
                return Err(format!("{count} orbit points, {} claimed", c.min_points));
            }
            Ok(())
        }
        Check::Uniform => {
            let r = c.rank.ok_or("no rank")?.ratio();
            let e = &c.points;
            for k in c.from.max(1)..e.len() {
                let mut seen: BTreeMap<Vec<usize>, u8> = BTreeMap::new();
                for &y in &e[k..] {
                    let ty: Vec<usize> = e[..k].iter().map(|&x| g.m[x][y]).collect();
                    let rank = ty.iter().map(|&i| g.vals[i]).min().expect("k ≥ 1");
                    if rank != r {
                        continue;
                    }
                    let col = *seen.entry(ty).or_insert(c.colours[y]);
                    if col != c.colours[y] {
                        return Err(format!("function over the first {k} points has both colours"));
                    }
                }
            }
            Ok(())
        }
        Check::Classes => {
            let m = c.rank.ok_or("no threshold")?.ratio();
            let pts = &c.points;
            let mut done = vec![false; pts.len()];
            for i in 0..pts.len() {
                if done[i] {
                    continue;
                }
                let class: Vec<usize> = (0..pts.len()).filter(|&j| g.value(pts[i], pts[j]) <= m).collect();
                for &j in &class {
                    for &l in &class {
                        if g.value(pts[j], pts[l]) > m {
                            return Err(format!("relation is not transitive at v{}", pts[i]));
                        }
                    }
                    if c.colours[pts[j]] != c.colours[pts[i]] {
                        return Err(format!("class of v{} has both colours", pts[i]));
                    }
                    done[j] = true;
                }
            }
            Ok(())
        }
        Check::Copy => copy_replay(g, &c.points, c.depth),
        Check::Size => {
            if c.points.len() < c.min_points {
                Err(format!("{} points, {} claimed", c.points.len(), c.min_points))
            } else {
                Ok(())
            }
        }
    }
}

// every one-point extension type over a subset of the first `depth` points
// has a realization in the set
fn copy_replay(g: &Graph, pts: &[usize], depth: usize) -> std::result::Result<(), String> {
    let set: Vec<usize> = pts.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if set.is_empty() {
        return Err("empty set".into());
    }
    let prefix: Vec<usize> = set.iter().copied().take(depth).collect();
    for mask in 0u32..(1 << prefix.len()) {
        let dom: Vec<usize> = prefix.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
        let mut f = Vec::with_capacity(dom.len());
        if let Some(bad) = extend_values(g, &dom, &set, &mut f) {
            return Err(format!("type {:?} over {dom:?} is not realized", bad.iter().map(|&i| g.vals[i].to_string()).collect::<Vec<_>>()));
        }
    }
    Ok(())
}

fn extend_values(g: &Graph, dom: &[usize], set: &[usize], f: &mut Vec<usize>) -> Option<Vec<usize>> {
    let i = f.len();
    if i == dom.len() {
        let hit = set.iter().any(|&y| dom.iter().zip(f.iter()).all(|(&x, &v)| x != y && g.m[x][y] == v));
        return if hit { None } else { Some(f.clone()) };
    }
    for v in 1..g.vals.len() {
        let ok = (0..i).all(|j| {
            let (a, b, d) = (g.vals[v], g.vals[f[j]], g.value(dom[i], dom[j]));
            (a - b).abs() <= d && d <= a + b
        });
        if ok {
            f.push(v);
            let r = extend_values(g, dom, set, f);
            f.pop();
            if r.is_some() {
                return r;
            }
        }
    }
    None
}
