//! Deterministic 2-colourings of grown points.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::distset::Dist;
use crate::error::{Error, Result};
use crate::space::Space;

/// A colouring rule: `(point id, distances to earlier points, seed) ↦ {0,1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Strategy {
    Const(u8),
    Random(u64),
    Parity,
    ProfileHash(u64),
    /// Colours by id from a file; ids past its end get colour 0.
    File { path: String, colours: Vec<u8> },
}

impl Strategy {
    pub fn colour_of(&self, id: usize, profile: &[Dist]) -> u8 {
        match self {
            Strategy::Const(c) => *c,
            Strategy::Random(seed) => random_bit(*seed, id),
            Strategy::Parity => (id % 2) as u8,
            Strategy::ProfileHash(seed) => profile_bit(*seed, profile),
            Strategy::File { colours, .. } => colours.get(id).copied().unwrap_or(0),
        }
    }

    /// Whether colours can be recomputed from the name alone.
    pub fn is_replayable(&self) -> bool {
        !matches!(self, Strategy::File { .. })
    }

    /// The battery used by the indivisibility game tests.
    pub fn battery() -> Vec<Strategy> {
        vec![
            Strategy::Const(0),
            Strategy::Const(1),
            Strategy::Random(1),
            Strategy::Random(2),
            Strategy::Random(3),
            Strategy::Random(4),
            Strategy::Parity,
            Strategy::ProfileHash(0),
        ]
    }
}

pub(crate) fn random_bit(seed: u64, id: usize) -> u8 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    (rng.next_u32() & 1) as u8
}

pub(crate) fn profile_bit(seed: u64, profile: &[Dist]) -> u8 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for d in profile {
        h.update(d.to_string().as_bytes());
        h.update(b";");
    }
    h.finalize()[0] & 1
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Const(c) => write!(f, "const:{c}"),
            Strategy::Random(s) => write!(f, "random:{s}"),
            Strategy::Parity => write!(f, "parity"),
            Strategy::ProfileHash(0) => write!(f, "profile-hash"),
            Strategy::ProfileHash(s) => write!(f, "profile-hash:{s}"),
            Strategy::File { path, .. } => write!(f, "file:{path}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<u64> {
            a.ok_or_else(|| Error::Parse(format!("strategy {name} needs an argument")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad argument in strategy {s:?}")))
        };
        match name {
            "const" => match num(arg)? {
                c @ (0 | 1) => Ok(Strategy::Const(c as u8)),
                _ => Err(Error::Parse("const colour must be 0 or 1".into())),
            },
            "random" => Ok(Strategy::Random(num(arg)?)),
            "parity" if arg.is_none() => Ok(Strategy::Parity),
            "profile-hash" => Ok(Strategy::ProfileHash(if arg.is_some() { num(arg)? } else { 0 })),
            "file" => {
                let path = arg.ok_or_else(|| Error::Parse("file strategy needs a path".into()))?;
                let text = std::fs::read_to_string(path)?;
                Ok(Strategy::File { path: path.to_string(), colours: parse_colour_file(&text)? })
            }
            _ => Err(Error::Parse(format!("unknown strategy {s:?}"))),
        }
    }
}

/// A JSON array of colours indexed by id, or an object `{"id": colour}`.
pub fn parse_colour_file(text: &str) -> Result<Vec<u8>> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    let bit = |x: &serde_json::Value| match x.as_u64() {
        Some(c @ (0 | 1)) => Ok(c as u8),
        _ => Err(Error::Parse(format!("colour must be 0 or 1, got {x}"))),
    };
    match v {
        serde_json::Value::Array(a) => a.iter().map(bit).collect(),
        serde_json::Value::Object(o) => {
            let mut out = Vec::new();
            for (k, x) in &o {
                let id: usize = k.parse().map_err(|_| Error::Parse(format!("bad point id {k:?}")))?;
                if out.len() <= id {
                    out.resize(id + 1, 0);
                }
                out[id] = bit(x)?;
            }
            Ok(out)
        }
        _ => Err(Error::Parse("colour file must be an array or an object".into())),
    }
}

/// A strategy with the colours it has assigned so far. Tied to one growing
/// space: colours of existing points never change.
#[derive(Clone, Debug)]
pub struct Colouring {
    strategy: Strategy,
    memo: Vec<u8>,
}

impl Colouring {
    pub fn new(strategy: Strategy) -> Self {
        Colouring { strategy, memo: Vec::new() }
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    pub fn colour(&mut self, s: &Space, p: usize) -> u8 {
        while self.memo.len() <= p {
            let id = self.memo.len();
            let profile: Vec<Dist> = (0..id).map(|q| s.dist_value(id, q)).collect();
            self.memo.push(self.strategy.colour_of(id, &profile));
        }
        self.memo[p]
    }

    /// Colours of every point of `s`.
    pub fn colours(&mut self, s: &Space) -> Vec<u8> {
        if !s.is_empty() {
            self.colour(s, s.len() - 1);
        }
        self.memo[..s.len()].to_vec()
    }
}
