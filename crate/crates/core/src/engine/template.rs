//! Where the monochromatic copy sits inside a grown approximant.
//!
//! Single block: the orbit of `v_0 ↦ max D`, which is itself a copy of the
//! space. Several blocks: within every `∼ᵐ` class drop the open `m`-ball
//! around the class's first point, pass to the quotient of what is left
//! (distance set `D_min`) and recurse; the copy is the union of the kept
//! classes.

use std::sync::Arc;

use crate::builder::{build, copy_check_with, Approximant};
use crate::distset::{DistIdx, DistanceSet};
use crate::error::{Error, Result};
use crate::quotient::{classes, quotient_distance_set};
use crate::space::{orbit, Space, TypeFn};

/// `D, D_min, (D_min)_min, …` down to a single block.
pub fn quotient_chain(d: &DistanceSet, seed: u64) -> Result<Vec<Arc<DistanceSet>>> {
    let mut out = vec![Arc::new(d.clone())];
    loop {
        let last = out.last().expect("chain is nonempty").clone();
        if last.blocks()?.len() == 1 {
            return Ok(out);
        }
        out.push(Arc::new(quotient_distance_set(&last, seed)?));
    }
}

/// The kept points of `s`, whose distance set must be `chain[0]`. Empty when
/// the space is still too small to show the quotient structure.
pub fn kept(s: &Space, chain: &[Arc<DistanceSet>]) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let d = s.dset();
    if chain.len() == 1 {
        let p = TypeFn::new(vec![(0, d.max_idx())])?;
        return Ok(orbit(&p, s));
    }
    let m = d.first_block()?.max();
    let mi = d.index_of(m).expect("block members are in D");
    let part = classes(s, m)?;
    let rem: Vec<Vec<usize>> = part
        .classes
        .iter()
        .map(|c| c.iter().copied().filter(|&x| s.dist(c[0], x) == mi).collect::<Vec<_>>())
        .filter(|r| !r.is_empty())
        .collect();
    let q = chain[1].clone();
    let mut matrix = vec![vec![q.value(0); rem.len()]; rem.len()];
    for i in 0..rem.len() {
        for j in 0..i {
            let v: DistIdx = rem[i].iter().flat_map(|&x| rem[j].iter().map(move |&y| s.dist(x, y))).min().expect("nonempty");
            let v = d.value(v);
            matrix[i][j] = v;
            matrix[j][i] = v;
        }
    }
    let qs = match Space::from_matrix(q, &matrix) {
        Ok(qs) => qs,
        Err(Error::Parse(_)) | Err(Error::Precondition(_)) => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut out: Vec<usize> = kept(&qs, &chain[1..])?.into_iter().flat_map(|c| rem[c].iter().copied()).collect();
    out.sort_unstable();
    Ok(out)
}

/// Grows an approximant one schedule step at a time until its kept set has at
/// least `target` points and passes the copy check at `depth`.
pub fn grow_template(
    d: &DistanceSet,
    chain: &[Arc<DistanceSet>],
    target: usize,
    depth: usize,
    seed: u64,
    cap: usize,
) -> Result<(Approximant, Vec<usize>)> {
    let mut t = build(d, 1, seed)?;
    let vals: Vec<DistIdx> = d.positive().collect();
    loop {
        let k = kept(t.space(), chain)?;
        if k.len() >= target && copy_check_with(t.space(), &k, depth, &vals) {
            return Ok((t, k));
        }
        if t.len() >= cap {
            return Err(Error::Budget(format!("template needs more than {cap} points")));
        }
        while t.step()?.is_none() {}
    }
}
