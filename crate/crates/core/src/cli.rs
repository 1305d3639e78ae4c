//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 non-universal distance set, 4 budget exhausted.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::builder::{build, saturation_level, Approximant};
use crate::distset::{Dist, DistanceSet};
use crate::engine::{find_monochromatic_copy, verify_json, GameBudget, Strategy};
use crate::error::{Error, Result};
use crate::quotient::{classes, quotient_space};
use crate::space::{Space, SpaceJson};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_UNIVERSAL: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "urforge", version, about = "Finite Urysohn spaces over finite distance sets and the indivisibility game")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Analyse a distance set.
    #[command(subcommand)]
    Dist(DistCmd),
    /// Grow an approximant and write it with its saturation certificate.
    Gen(GenArgs),
    /// Measure the saturation level of a space file.
    Sat(InputArgs),
    /// Quotient of a space file by a jump number.
    Quotient(QuotientArgs),
    /// Play the indivisibility game and write a certificate.
    Game(GameArgs),
    /// Verify a certificate file.
    Verify { file: PathBuf },
    /// Export a space file.
    #[command(subcommand)]
    Export(ExportCmd),
}

#[derive(Subcommand, Debug)]
pub enum DistCmd {
    /// Universality, witness, blocks, jump numbers, canonical form.
    Check { d: String },
    /// Block decomposition.
    Blocks { d: String },
}

#[derive(Subcommand, Debug)]
pub enum ExportCmd {
    /// Graphviz rendering.
    Dot(InputArgs),
}

#[derive(Args, Debug)]
pub struct Output {
    /// Output file (stdout if absent).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Space JSON file.
    #[arg(short, long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(short = 'D', long = "dset")]
    pub d: String,
    #[arg(short, long)]
    pub n: usize,
    #[arg(long, env = "URFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
pub struct QuotientArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// Threshold; defaults to the maximum of the first block.
    #[arg(short, long)]
    pub r: Option<String>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
pub struct GameArgs {
    #[arg(short = 'D', long = "dset")]
    pub d: String,
    /// const:C, random:SEED, parity, profile-hash[:SEED] or file:PATH.
    #[arg(long, default_value = "random:0")]
    pub strategy: String,
    #[arg(long, default_value_t = 10)]
    pub target: usize,
    #[arg(long, default_value_t = 1)]
    pub depth: usize,
    #[arg(long, env = "URFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = GameBudget::default().max_points)]
    pub budget_points: usize,
    #[arg(long, default_value_t = GameBudget::default().max_depth)]
    pub budget_depth: usize,
    #[arg(long, default_value_t = GameBudget::default().search_cap)]
    pub search_cap: usize,
    /// Leave the timestamp out of the certificate.
    #[arg(long)]
    pub no_timestamp: bool,
    #[command(flatten)]
    pub out: Output,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotUniversal(_) => EXIT_NOT_UNIVERSAL,
        Error::Budget(_) => EXIT_BUDGET,
        Error::Internal(_) => EXIT_VERIFY,
        _ => EXIT_USAGE,
    }
}

fn emit(out: &mut dyn Write, target: &Output, text: &str) -> Result<()> {
    match &target.output {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn read_space(p: &PathBuf) -> Result<Space> {
    let text = std::fs::read_to_string(p)?;
    let j: SpaceJson = serde_json::from_str(&text)?;
    Space::from_json(&j)
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Dist(DistCmd::Check { d }) => {
            let d: DistanceSet = d.parse()?;
            let (universal, witness) = d.is_universal();
            let mut report = json!({ "D": d, "universal": universal });
            if let Some(w) = witness {
                report["witness"] = serde_json::to_value(w)?;
            }
            if universal {
                report["blocks"] = serde_json::to_value(d.blocks()?.into_iter().map(|b| b.members).collect::<Vec<_>>())?;
            }
            let jumps: Vec<Dist> = d.positive().map(|i| d.value(i)).filter(|&r| d.is_jump(r).unwrap_or(false)).collect();
            report["jumps"] = serde_json::to_value(jumps)?;
            if d.len() > 1 {
                let (canon, scale) = d.canonicalize()?;
                report["canonical"] = serde_json::to_value(canon)?;
                report["scale"] = serde_json::to_value(scale)?;
            }
            out.write_all(pretty(&report).as_bytes())?;
            Ok(if universal { EXIT_OK } else { EXIT_NOT_UNIVERSAL })
        }
        Command::Dist(DistCmd::Blocks { d }) => {
            let d: DistanceSet = d.parse()?;
            let blocks: Vec<Vec<Dist>> = d.blocks()?.into_iter().map(|b| b.members).collect();
            out.write_all(pretty(&json!({ "D": d, "blocks": blocks })).as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Gen(g) => {
            let d: DistanceSet = g.d.parse()?;
            if g.n == 0 {
                return Err(Error::Precondition("n must be positive".into()));
            }
            let a = build(&d, g.n, g.seed)?;
            emit(out, &g.out, &pretty(&approximant_json(&a)?))?;
            Ok(EXIT_OK)
        }
        Command::Sat(i) => {
            let a = Approximant::from_space(read_space(&i.input)?, 0);
            let (level, cert) = saturation_level(&a);
            emit(out, &i.out, &pretty(&json!({ "saturation": level, "certificate": cert })))?;
            Ok(EXIT_OK)
        }
        Command::Quotient(q) => {
            let s = read_space(&q.input)?;
            let r = match &q.r {
                Some(r) => r.parse()?,
                None => s.dset().first_block()?.max(),
            };
            let p = classes(&s, r)?;
            emit(out, &q.out, &quotient_space(&s, &p)?.to_json_string())?;
            Ok(EXIT_OK)
        }
        Command::Game(g) => {
            let d: DistanceSet = g.d.parse()?;
            let st: Strategy = g.strategy.parse()?;
            let budget = GameBudget { max_points: g.budget_points, max_depth: g.budget_depth, search_cap: g.search_cap };
            let res = find_monochromatic_copy(&d, &st, g.target, g.depth, g.seed, budget)?;
            let mut cert = res.certificate;
            if !g.no_timestamp {
                let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|t| t.as_secs()).unwrap_or(0);
                cert.timestamp = Some(secs.to_string());
                cert.seal();
            }
            let text = cert.to_json() + "\n";
            emit(out, &g.out, &text)?;
            match verify_json(&text)? {
                Ok(()) => {
                    let _ = writeln!(err, "colour {}: {} points, copy check depth {}, verified", res.colour, res.points.len(), g.depth);
                    Ok(EXIT_OK)
                }
                Err(why) => {
                    let _ = writeln!(err, "verification failed: {why}");
                    Ok(EXIT_VERIFY)
                }
            }
        }
        Command::Verify { file } => {
            let text = std::fs::read_to_string(&file)?;
            match verify_json(&text)? {
                Ok(()) => {
                    writeln!(out, "ok")?;
                    Ok(EXIT_OK)
                }
                Err(why) => {
                    writeln!(err, "rejected: {why}")?;
                    Ok(EXIT_VERIFY)
                }
            }
        }
        Command::Export(ExportCmd::Dot(i)) => {
            emit(out, &i.out, &read_space(&i.input)?.to_dot())?;
            Ok(EXIT_OK)
        }
    }
}

fn approximant_json(a: &Approximant) -> Result<Value> {
    let (level, cert) = saturation_level(a);
    let mut v = serde_json::to_value(a.space().to_json())?;
    v["seed"] = json!(a.seed());
    v["saturation"] = json!(level);
    v["certificate"] = serde_json::to_value(cert)?;
    Ok(v)
}
