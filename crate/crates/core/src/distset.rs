//! Finite distance sets with exact rational arithmetic.
//!
//! A [`DistanceSet`] is the sorted list of admissible distances, always
//! containing `0`. Every finite space in this crate stores its distances as
//! indices into its distance set ([`DistIdx`]); the set precomputes the two
//! lookup tables needed to decide triangle inequalities on indices alone, so
//! the hot loops never touch rational arithmetic.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Index of a distance inside its [`DistanceSet`]; index `0` is the distance `0`.
pub type DistIdx = u8;

/// An exact non-negative rational distance.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dist(Rational64);

impl Dist {
    pub const ZERO: Dist = Dist(Rational64::new_raw(0, 1));

    pub fn new(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        let r = Rational64::new(numer, denom);
        if r.is_negative() {
            return Err(Error::Parse(format!("negative distance {r}")));
        }
        Ok(Dist(r))
    }

    pub fn int(v: i64) -> Self {
        assert!(v >= 0, "negative distance");
        Dist(Rational64::from_integer(v))
    }

    pub fn ratio(&self) -> Rational64 {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// `|a - b|`.
    pub fn abs_diff(self, other: Dist) -> Dist {
        Dist((self.0 - other.0).abs())
    }
}

impl Add for Dist {
    type Output = Dist;
    fn add(self, rhs: Dist) -> Dist {
        Dist(self.0 + rhs.0)
    }
}

impl Sub for Dist {
    type Output = Dist;
    /// Saturating at zero; distances never go negative.
    fn sub(self, rhs: Dist) -> Dist {
        if rhs.0 >= self.0 {
            Dist::ZERO
        } else {
            Dist(self.0 - rhs.0)
        }
    }
}

impl Mul<i64> for Dist {
    type Output = Dist;
    fn mul(self, rhs: i64) -> Dist {
        Dist(self.0 * rhs)
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Dist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a rational distance: {s:?}"));
        match s.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().map_err(|_| bad())?;
                let d: i64 = d.trim().parse().map_err(|_| bad())?;
                Dist::new(n, d)
            }
            None => {
                let n: i64 = s.parse().map_err(|_| bad())?;
                Dist::new(n, 1)
            }
        }
    }
}

impl Serialize for Dist {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dist {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
        }
        match Raw::deserialize(d)? {
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Int(i) => Dist::new(i, 1).map_err(serde::de::Error::custom),
        }
    }
}

/// Two triangles `(a0,b,c)` and `(a1,b,c)` sharing the edge `(b,c)` for which no
/// positive distance between `a0` and `a1` yields a metric four-point space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniversalityWitness {
    /// `δ(b,c)`; zero encodes the degenerate case `b = c`.
    pub bc: Dist,
    /// `(δ(a0,b), δ(a0,c))`.
    pub a0: (Dist, Dist),
    /// `(δ(a1,b), δ(a1,c))`.
    pub a1: (Dist, Dist),
    /// Positive `t` making the four-point graph metric; empty by construction.
    pub admissible: Vec<Dist>,
}

/// A contiguous run of a distance set forming one block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub members: Vec<Dist>,
}

impl Block {
    pub fn min(&self) -> Dist {
        self.members[0]
    }

    pub fn max(&self) -> Dist {
        *self.members.last().expect("blocks are nonempty")
    }

    pub fn contains(&self, d: Dist) -> bool {
        self.members.binary_search(&d).is_ok()
    }
}

/// Finite sorted set of distances containing zero.
#[derive(Clone, PartialEq, Eq)]
pub struct DistanceSet {
    members: Vec<Dist>,
    // n×n: index of the least member ≥ |a-b|
    lge_diff: Vec<DistIdx>,
    // n×n: index of the greatest member ≤ a+b
    gle_sum: Vec<DistIdx>,
}

impl fmt::Debug for DistanceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DistanceSet{{{self}}}")
    }
}

impl fmt::Display for DistanceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl Serialize for DistanceSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.members.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DistanceSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<Dist>::deserialize(d)?;
        DistanceSet::new(v).map_err(serde::de::Error::custom)
    }
}

impl FromStr for DistanceSet {
    type Err = Error;

    /// Accepts `"0,1,5/2,4"` or a JSON array (`[0,1,"5/2"]`).
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.starts_with('[') {
            return serde_json::from_str(t).map_err(|e| Error::Parse(e.to_string()));
        }
        if t.is_empty() {
            return Err(Error::Parse("empty distance set".into()));
        }
        let members = t.split(',').map(str::parse).collect::<Result<Vec<Dist>>>()?;
        DistanceSet::new(members)
    }
}

impl DistanceSet {
    /// Sorts and deduplicates; `0` must be present.
    pub fn new(mut members: Vec<Dist>) -> Result<Self> {
        members.sort();
        members.dedup();
        if members.first() != Some(&Dist::ZERO) {
            return Err(Error::Parse("distance set must contain 0".into()));
        }
        if members.len() > DistIdx::MAX as usize {
            return Err(Error::Parse("distance set too large".into()));
        }
        let n = members.len();
        let mut lge_diff = vec![0; n * n];
        let mut gle_sum = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                let diff = members[i].abs_diff(members[j]);
                let sum = members[i] + members[j];
                // |a-b| ≤ max, so a least member ≥ diff always exists
                lge_diff[i * n + j] = members.partition_point(|m| *m < diff) as DistIdx;
                gle_sum[i * n + j] = (members.partition_point(|m| *m <= sum) - 1) as DistIdx;
            }
        }
        Ok(DistanceSet { members, lge_diff, gle_sum })
    }

    pub fn from_ints(v: &[i64]) -> Result<Self> {
        Self::new(v.iter().map(|&x| Dist::int(x)).collect())
    }

    pub fn members(&self) -> &[Dist] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn value(&self, i: DistIdx) -> Dist {
        self.members[i as usize]
    }

    pub fn index_of(&self, d: Dist) -> Option<DistIdx> {
        self.members.binary_search(&d).ok().map(|i| i as DistIdx)
    }

    pub fn contains(&self, d: Dist) -> bool {
        self.index_of(d).is_some()
    }

    pub fn max(&self) -> Dist {
        *self.members.last().unwrap()
    }

    pub fn max_idx(&self) -> DistIdx {
        (self.members.len() - 1) as DistIdx
    }

    /// Positive indices `1..len`.
    pub fn positive(&self) -> impl Iterator<Item = DistIdx> + '_ {
        1..self.members.len() as DistIdx
    }

    pub fn min_positive(&self) -> Option<Dist> {
        self.members.get(1).copied()
    }

    /// Index of the least member `≥ |a - b|`.
    #[inline]
    pub fn lower(&self, a: DistIdx, b: DistIdx) -> DistIdx {
        self.lge_diff[a as usize * self.members.len() + b as usize]
    }

    /// Index of the greatest member `≤ a + b`.
    #[inline]
    pub fn upper(&self, a: DistIdx, b: DistIdx) -> DistIdx {
        self.gle_sum[a as usize * self.members.len() + b as usize]
    }

    /// `c ≤ a + b` on indices.
    #[inline]
    pub fn le_sum(&self, c: DistIdx, a: DistIdx, b: DistIdx) -> bool {
        c <= self.upper(a, b)
    }

    /// All three triangle inequalities for edge lengths `a, b, c`.
    #[inline]
    pub fn triangle(&self, a: DistIdx, b: DistIdx, c: DistIdx) -> bool {
        self.le_sum(a, b, c) && self.le_sum(b, a, c) && self.le_sum(c, a, b)
    }

    /// `|a - b| ≤ d ≤ a + b`: the pairwise Katětov condition.
    #[inline]
    pub fn between(&self, d: DistIdx, a: DistIdx, b: DistIdx) -> bool {
        self.lower(a, b) <= d && d <= self.upper(a, b)
    }

    /// Largest member strictly below `r`; `0` when nothing positive is below.
    pub fn predecessor(&self, r: Dist) -> Result<Dist> {
        if r.is_zero() {
            return Err(Error::Precondition("predecessor needs r > 0".into()));
        }
        let k = self.members.partition_point(|m| *m < r);
        Ok(self.members[k - 1])
    }

    /// Least member strictly above `r`, or `r` itself when `r = max D`.
    pub fn successor(&self, r: Dist) -> Result<Dist> {
        let max = self.max();
        if r > max {
            return Err(Error::Precondition(format!("{r} exceeds max D = {max}")));
        }
        if r == max {
            return Ok(r);
        }
        let k = self.members.partition_point(|m| *m <= r);
        Ok(self.members[k])
    }

    /// Literal arithmetic predicate `successor(r) > 2r`.
    pub fn is_jump(&self, r: Dist) -> Result<bool> {
        if r.is_zero() || !self.contains(r) {
            return Err(Error::Precondition(format!("{r} is not a positive member")));
        }
        Ok(self.successor(r)? > r * 2)
    }

    /// Rescales to integers with minimum positive member `1`.
    ///
    /// Returns the canonical set and the scale `s` with `D = s · canonical`.
    pub fn canonicalize(&self) -> Result<(DistanceSet, Dist)> {
        let min = self.min_positive().ok_or_else(|| Error::Precondition("no positive distances".into()))?;
        // divide by min, then clear denominators
        let scaled: Vec<Rational64> = self.members.iter().map(|d| d.0 / min.0).collect();
        let lcm = scaled.iter().fold(1i64, |acc, r| acc.lcm(r.denom()));
        let ints: Vec<i64> = scaled.iter().map(|r| (r * lcm).to_integer()).collect();
        let g = ints.iter().skip(1).fold(0i64, |acc, &x| acc.gcd(&x));
        let canon: Vec<Dist> = ints.iter().map(|&x| Dist::int(x / g)).collect();
        let scale = Dist(min.0 * Rational64::new(g, lcm));
        Ok((DistanceSet::new(canon)?, scale))
    }

    /// The four-values test.
    ///
    /// Scans every pair of metric triangles `(a0,b,c)`, `(a1,b,c)` with a shared
    /// edge (including `b = c`) and asks for a positive `t` between `a0` and `a1`.
    /// On failure returns the first failing pair in the order
    /// `(δ(b,c), δ(a0,c), δ(a0,b), δ(a1,c), δ(a1,b))`.
    pub fn is_universal(&self) -> (bool, Option<UniversalityWitness>) {
        let n = self.members.len() as DistIdx;
        for e in 0..n {
            let tris = self.triangles_on(e);
            for &(x0, y0) in &tris {
                for &(x1, y1) in &tris {
                    // t ∈ [max(lo_b, lo_c), min(hi_b, hi_c)], t > 0
                    let lo = self.lower(x0, x1).max(self.lower(y0, y1)).max(1);
                    let hi = self.upper(x0, x1).min(self.upper(y0, y1));
                    if lo > hi {
                        let w = UniversalityWitness {
                            bc: self.value(e),
                            a0: (self.value(x0), self.value(y0)),
                            a1: (self.value(x1), self.value(y1)),
                            admissible: Vec::new(),
                        };
                        return (false, Some(w));
                    }
                }
            }
        }
        (true, None)
    }

    /// Triangles `(δ(a,b), δ(a,c))` over the edge `δ(b,c) = e`, ordered by `(δ(a,c), δ(a,b))`.
    fn triangles_on(&self, e: DistIdx) -> Vec<(DistIdx, DistIdx)> {
        let n = self.members.len() as DistIdx;
        let mut out = Vec::new();
        for y in 1..n {
            for x in 1..n {
                let ok = if e == 0 { x == y } else { self.triangle(x, y, e) };
                if ok {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Block decomposition of `D \ {0}`.
    pub fn blocks(&self) -> Result<Vec<Block>> {
        if !self.is_universal().0 {
            return Err(Error::NotUniversal("blocks undefined for non-universal sets".into()));
        }
        let pos = &self.members[1..];
        let mut blocks: Vec<Block> = Vec::new();
        let mut i = 0;
        while i < pos.len() {
            let b0 = pos[i];
            let mut members = vec![b0];
            while i + 1 < pos.len() && pos[i] + b0 >= pos[i + 1] {
                i += 1;
                members.push(pos[i]);
            }
            i += 1;
            blocks.push(Block { members });
        }
        for b in &blocks {
            if !self.is_block(&b.members) {
                return Err(Error::Internal(format!("block {:?} fails the block conditions", b.members)));
            }
        }
        Ok(blocks)
    }

    /// The four block conditions for a strictly increasing run.
    pub fn is_block(&self, run: &[Dist]) -> bool {
        let Some(&b0) = run.first() else { return false };
        if b0.is_zero() || !run.iter().all(|d| self.contains(*d)) {
            return false;
        }
        let Ok(pred) = self.predecessor(b0) else { return false };
        if b0 <= pred + pred {
            return false;
        }
        run.windows(2).all(|w| {
            w[0] < w[1] && self.successor(w[0]).map(|s| s == w[1]).unwrap_or(false) && w[0] + b0 >= w[1]
        })
    }

    pub fn first_block(&self) -> Result<Block> {
        Ok(self.blocks()?.remove(0))
    }

    /// Members `≤ bound`, as a new distance set.
    pub fn truncate(&self, bound: Dist) -> DistanceSet {
        let v: Vec<Dist> = self.members.iter().copied().filter(|d| *d <= bound).collect();
        DistanceSet::new(v).expect("contains zero")
    }
}
