//! `apdecay`: chamber recovery, spherical functions, compact multipliers,
//! witnesses, decay certificates and verification campaigns from the command line.
//!
//! Exit codes: 0 success, 1 a checked inequality failed (a reproducer is written),
//! 2 usage or input error.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use apdecay::certify::{
    build_ledger_with, default_grid, quick_grid, run_campaign, sl3_decay_bound, sp2_decay_bound, ConstantsLedger,
    LEMMA_IDS,
};
use apdecay::coupling::{circle_witness, hyperbola_witness, sl3_witness};
use apdecay::gelfand::{eval_multiplier, holder_certify_su2so2, holder_certify_u2u1, CompactMultiplier, CosetPoint};
use apdecay::groups::{hs_invariants, sl3_chamber, sp2_chamber, GroupMatrix, GroupTag};
use apdecay::orthopoly::{hs_constant_estimate, PairId, SphericalIndex};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

use output::{Emitter, Format};

/// Default seed when neither the flag nor the config file gives one.
const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Parser, Debug)]
#[command(name = "apdecay", version, about = "Decay certificates and numerical checks for Sp(2,R) and SL(3,R)")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct GlobalArgs {
    /// Output format; CSV flattens documents to `path,value` rows and campaigns to margin rows.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the document here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for every random draw; echoed in the output.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file with defaults for these flags (`seed`, `format`, `output`, `jobs`,
    /// `no_timestamp`, `reproducer`, `quick`, `grid`, `c_hat`); flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Omit the timestamp and every wall-time field, making output byte-reproducible.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Worker threads (defaults to RAYON_NUM_THREADS, else the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Where to write the reproducer when a check fails.
    #[arg(long, global = true)]
    reproducer: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Chamber point of an Sp(2,R) or SL(3,R) matrix.
    Kak(KakArgs),
    /// A spherical function of a compact Gelfand pair at one point.
    Spherical(SphericalArgs),
    /// Finite spherical expansions on compact Gelfand pairs.
    #[command(subcommand)]
    Multiplier(MultiplierCmd),
    /// Explicit group elements realising the coupling links.
    #[command(subcommand)]
    Witness(WitnessCmd),
    /// Decay certificate at a chamber point.
    #[command(subcommand)]
    Certify(CertifyCmd),
    /// Run a verification campaign (`all` runs every one).
    Verify(VerifyArgs),
    /// The constants ledger, with every entry recomputed.
    Constants(CHatArg),
}

#[derive(Args, Debug)]
struct KakArgs {
    /// File holding the matrix: JSON (flat list, list of rows, or {dim, group_tag, entries}) or whitespace/comma separated numbers.
    #[arg(long, conflicts_with = "entries")]
    matrix_file: Option<PathBuf>,
    /// Row-major entries, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    entries: Option<String>,
    /// Group; inferred from the size (16 entries: sp2, 9 entries: sl3) when omitted.
    #[arg(long, value_enum)]
    group: Option<GroupArg>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum GroupArg {
    Sp2,
    Sl3,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum PairArg {
    U2u1,
    Su2so2,
    So3so2,
}

impl From<PairArg> for PairId {
    fn from(p: PairArg) -> Self {
        match p {
            PairArg::U2u1 => PairId::U2U1,
            PairArg::Su2so2 => PairId::SU2SO2,
            PairArg::So3so2 => PairId::SO3SO2,
        }
    }
}

#[derive(Args, Debug)]
struct PointArgs {
    /// Real part of the disc point, or the interval coordinate on the Legendre pairs.
    #[arg(long, allow_hyphen_values = true)]
    re: f64,
    /// Imaginary part of the disc point (U(2)/U(1) only).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    im: f64,
}

impl PointArgs {
    fn point(&self, pair: PairId) -> CosetPoint {
        match pair {
            PairId::U2U1 => CosetPoint::Disc(Complex64::new(self.re, self.im)),
            _ if self.im != 0.0 => CosetPoint::Disc(Complex64::new(self.re, self.im)),
            _ => CosetPoint::Interval(self.re),
        }
    }
}

#[derive(Args, Debug)]
struct SphericalArgs {
    #[arg(long, value_enum)]
    pair: PairArg,
    /// Index `p` (U(2)/U(1)).
    #[arg(long)]
    p: Option<u32>,
    /// Index `q` (U(2)/U(1)).
    #[arg(long)]
    q: Option<u32>,
    /// Degree `n` (Legendre pairs).
    #[arg(long)]
    n: Option<u32>,
    #[command(flatten)]
    point: PointArgs,
}

#[derive(Subcommand, Debug)]
enum MultiplierCmd {
    /// Random expansion with Gaussian coefficients, normalised to unit l1 norm.
    Synth {
        #[arg(long, value_enum)]
        pair: PairArg,
        /// Largest `p + q` (or `n`).
        #[arg(long)]
        degree: u32,
    },
    /// Evaluate an expansion read from a JSON file.
    Eval {
        #[arg(long)]
        multiplier: PathBuf,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Check the uniform Hoelder bound for an expansion between two points.
    Holder(HolderArgs),
}

#[derive(Args, Debug)]
struct HolderArgs {
    #[arg(long)]
    multiplier: PathBuf,
    /// Angles on the circle of radius 1/sqrt2 (U(2)/U(1)).
    #[arg(long, allow_hyphen_values = true)]
    theta1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta2: Option<f64>,
    /// Interval coordinates in [-1/2, 1/2] (Legendre pairs).
    #[arg(long, allow_hyphen_values = true)]
    r1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    r2: Option<f64>,
    #[command(flatten)]
    c_hat: CHatArg,
}

#[derive(Args, Debug, Clone)]
struct CHatArg {
    /// The weighted-Jacobi constant; estimated on the default grid when omitted.
    #[arg(long)]
    c_hat: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum WitnessCmd {
    Circle {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
    },
    Hyperbola {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
    },
    Sl3 {
        #[arg(long)]
        r: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
    },
}

#[derive(Subcommand, Debug)]
enum CertifyCmd {
    Sp2 {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
        /// Assumed upper bound on the multiplier norm.
        #[arg(long)]
        norm: f64,
        #[command(flatten)]
        c_hat: CHatArg,
    },
    Sl3 {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        /// Assumed upper bound on the multiplier norm.
        #[arg(long)]
        norm: f64,
    },
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// One of the campaign ids, or `all`.
    lemma_id: String,
    /// Use the reduced grid.
    #[arg(long)]
    quick: bool,
    /// JSON object overriding fields of the grid.
    #[arg(long, conflicts_with = "grid_file")]
    grid: Option<String>,
    /// File holding the same JSON object as `--grid`.
    #[arg(long)]
    grid_file: Option<PathBuf>,
    /// Print the grid that would be used and exit.
    #[arg(long)]
    show_grid: bool,
}

/// Settings that may come from the config file.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    format: Option<Format>,
    output: Option<PathBuf>,
    jobs: Option<usize>,
    no_timestamp: Option<bool>,
    reproducer: Option<PathBuf>,
    quick: Option<bool>,
    grid: Option<Value>,
    c_hat: Option<f64>,
}

/// Flags merged over the config file.
struct Settings {
    seed: u64,
    quick: bool,
    grid: Option<Value>,
    c_hat: Option<f64>,
    emitter: Emitter,
}

/// Failure of a command: a usage/input error (exit 2) or a failed check (exit 1).
enum Failure {
    Input(String),
    Violation { message: String, reproducer: Value },
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let settings = match settings(&cli.global, &cli.command) {
        Ok(s) => s,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(2);
        }
    };
    match run(&cli.command, &settings) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Violation { message, reproducer }) => {
            eprintln!("violation: {message}");
            match settings.emitter.write_reproducer(&reproducer) {
                Ok(path) => eprintln!("reproducer written to {}", path.display()),
                Err(e) => eprintln!("error: could not write the reproducer: {e}"),
            }
            ExitCode::from(1)
        }
    }
}

fn settings(g: &GlobalArgs, command: &Command) -> Result<Settings, String> {
    let file: ConfigFile = match &g.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))?
        }
        None => ConfigFile::default(),
    };
    let jobs = g.jobs.or(file.jobs);
    if let Some(n) = jobs {
        if n == 0 {
            return Err("--jobs must be at least 1".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    let (quick, grid) = match command {
        Command::Verify(v) => {
            let grid = match (&v.grid, &v.grid_file) {
                (Some(text), _) => Some(serde_json::from_str(text).map_err(|e| format!("invalid --grid: {e}"))?),
                (None, Some(path)) => {
                    let text =
                        std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                    Some(serde_json::from_str(&text).map_err(|e| format!("invalid grid file: {e}"))?)
                }
                (None, None) => file.grid,
            };
            (v.quick || file.quick.unwrap_or(false), grid)
        }
        _ => (false, None),
    };
    let c_hat = match command {
        Command::Constants(c) | Command::Certify(CertifyCmd::Sp2 { c_hat: c, .. }) => c.c_hat,
        Command::Multiplier(MultiplierCmd::Holder(h)) => h.c_hat.c_hat,
        _ => None,
    }
    .or(file.c_hat);
    Ok(Settings {
        seed: g.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        quick,
        grid,
        c_hat,
        emitter: Emitter {
            format: g.format.or(file.format).unwrap_or(Format::Json),
            output: g.output.clone().or(file.output),
            reproducer: g.reproducer.clone().or(file.reproducer),
            timestamp: !(g.no_timestamp || file.no_timestamp.unwrap_or(false)),
            seed: g.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        },
    })
}

fn run(command: &Command, s: &Settings) -> Outcome {
    match command {
        Command::Kak(a) => cmd_kak(a, s),
        Command::Spherical(a) => cmd_spherical(a, s),
        Command::Multiplier(m) => cmd_multiplier(m, s),
        Command::Witness(w) => cmd_witness(w, s),
        Command::Certify(c) => cmd_certify(c, s),
        Command::Verify(v) => cmd_verify(v, s),
        Command::Constants(_) => {
            let ledger = ledger(s.c_hat)?;
            let report = ledger.verify();
            let doc = json!({ "ledger": ledger, "verification": report });
            s.emitter.emit("constants", &doc, None)?;
            if report.passed() {
                Ok(())
            } else {
                Err(violation("constants", "ledger entries do not recompute", &doc, s))
            }
        }
    }
}

fn violation(command: &str, message: &str, detail: &Value, s: &Settings) -> Failure {
    Failure::Violation {
        message: message.into(),
        reproducer: json!({
            "command": command,
            "argv": std::env::args().collect::<Vec<_>>(),
            "seed": s.seed,
            "detail": output::strip_wall_time(detail.clone()),
        }),
    }
}

fn ledger(c_hat: Option<f64>) -> Result<ConstantsLedger, Failure> {
    let (c, prov) = match c_hat {
        Some(c) => (c, "supplied on the command line".to_string()),
        None => {
            let est = hs_constant_estimate(200, 200, 4096);
            (est.c_hat, format!("estimated on n <= 200, beta <= 200, 4096 angle nodes; max at n = {}, beta = {}", est.argmax_n, est.argmax_beta))
        }
    };
    Ok(build_ledger_with(c, prov)?)
}

fn parse_numbers(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(|c: char| c.is_whitespace() || c == ',' || c == ';')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| Failure::Input(format!("bad number `{t}`: {e}"))))
        .collect()
}

fn read_matrix(a: &KakArgs) -> Result<GroupMatrix, Failure> {
    let text = match (&a.matrix_file, &a.entries) {
        (Some(p), _) => std::fs::read_to_string(p).map_err(|e| Failure::Input(format!("cannot read {}: {e}", p.display())))?,
        (None, Some(e)) => e.clone(),
        (None, None) => return Err(Failure::Input("give --matrix-file or --entries".into())),
    };
    let numbers = match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(_)) => {
            let m: GroupMatrix = serde_json::from_str(&text)?;
            m.entries().to_vec()
        }
        Ok(Value::Array(rows)) => {
            let mut flat = Vec::new();
            for r in rows {
                match r {
                    Value::Array(xs) => flat.extend(xs.into_iter().map(|x| x.as_f64())),
                    x => flat.push(x.as_f64()),
                }
            }
            flat.into_iter().collect::<Option<Vec<f64>>>().ok_or_else(|| Failure::Input("matrix entries must be numbers".into()))?
        }
        _ => parse_numbers(&text)?,
    };
    let group = match (a.group, numbers.len()) {
        (Some(g), _) => g,
        (None, 16) => GroupArg::Sp2,
        (None, 9) => GroupArg::Sl3,
        (None, n) => return Err(Failure::Input(format!("{n} entries: expected 16 (Sp(2,R)) or 9 (SL(3,R))"))),
    };
    let (dim, tag) = match group {
        GroupArg::Sp2 => (4, GroupTag::Sp2),
        GroupArg::Sl3 => (3, GroupTag::SL3),
    };
    Ok(GroupMatrix::new(dim, tag, numbers)?)
}

fn cmd_kak(a: &KakArgs, s: &Settings) -> Outcome {
    let g = read_matrix(a)?;
    let doc = match g.group_tag() {
        GroupTag::Sp2 => {
            let chamber = sp2_chamber(&g)?;
            json!({
                "group": GroupTag::Sp2,
                "chamber": chamber,
                "invariants": hs_invariants(&g)?,
                "membership_residual": g.membership_residual(),
            })
        }
        _ => json!({ "group": GroupTag::SL3, "chamber": sl3_chamber(&g)?, "membership_residual": g.membership_residual() }),
    };
    Ok(s.emitter.emit("kak", &doc, None)?)
}

fn cmd_spherical(a: &SphericalArgs, s: &Settings) -> Outcome {
    let pair = PairId::from(a.pair);
    let index = match (pair, a.p, a.q, a.n) {
        (PairId::U2U1, Some(p), Some(q), None) => SphericalIndex::PQ { p, q },
        (PairId::U2U1, ..) => return Err(Failure::Input("the U(2)/U(1) pair takes --p and --q".into())),
        (_, None, None, Some(n)) => SphericalIndex::N { n },
        _ => return Err(Failure::Input("the Legendre pairs take --n".into())),
    };
    let point = a.point.point(pair);
    let value = eval_multiplier(&CompactMultiplier::single(pair, index)?, point)?;
    Ok(s.emitter.emit("spherical", &json!({ "pair": pair, "index": index, "point": point, "value": value }), None)?)
}

fn read_multiplier(path: &PathBuf) -> Result<CompactMultiplier, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    // accept either the multiplier itself or a `multiplier synth` document
    let v: Value = serde_json::from_str(&text)?;
    let inner = v.get("result").and_then(|r| r.get("multiplier")).cloned().unwrap_or(v);
    Ok(serde_json::from_value(inner)?)
}

fn cmd_multiplier(m: &MultiplierCmd, s: &Settings) -> Outcome {
    match m {
        MultiplierCmd::Synth { pair, degree } => {
            let mult = CompactMultiplier::random((*pair).into(), *degree, s.seed);
            Ok(s.emitter.emit("multiplier synth", &json!({ "multiplier": mult }), None)?)
        }
        MultiplierCmd::Eval { multiplier, point } => {
            let mult = read_multiplier(multiplier)?;
            let p = point.point(mult.pair_id());
            let value = eval_multiplier(&mult, p)?;
            Ok(s.emitter.emit("multiplier eval", &json!({ "point": p, "value": value, "l1_norm": mult.l1_norm() }), None)?)
        }
        MultiplierCmd::Holder(h) => {
            let mult = read_multiplier(&h.multiplier)?;
            let line = match (mult.pair_id(), h.theta1, h.theta2, h.r1, h.r2) {
                (PairId::U2U1, Some(t1), Some(t2), None, None) => {
                    let c_tilde = ledger(s.c_hat)?.c_tilde;
                    holder_certify_u2u1(&mult, t1, t2, c_tilde)?
                }
                (PairId::U2U1, ..) => return Err(Failure::Input("U(2)/U(1) expansions take --theta1 and --theta2".into())),
                (_, None, None, Some(r1), Some(r2)) => holder_certify_su2so2(&mult, r1, r2)?,
                _ => return Err(Failure::Input("Legendre expansions take --r1 and --r2".into())),
            };
            let doc = json!({ "certificate": line, "holds": line.holds() });
            s.emitter.emit("multiplier holder", &doc, None)?;
            if line.holds() {
                Ok(())
            } else {
                Err(violation("multiplier holder", "the Hoelder bound fails", &json!({ "multiplier": mult, "certificate": line }), s))
            }
        }
    }
}

fn cmd_witness(w: &WitnessCmd, s: &Settings) -> Outcome {
    let (name, built) = match *w {
        WitnessCmd::Circle { beta, gamma } => ("witness circle", circle_witness(beta, gamma)),
        WitnessCmd::Hyperbola { beta, gamma } => ("witness hyperbola", hyperbola_witness(beta, gamma)),
        WitnessCmd::Sl3 { r, theta } => ("witness sl3", sl3_witness(r, theta)),
    };
    Ok(s.emitter.emit(name, &serde_json::to_value(built?)?, None)?)
}

fn cmd_certify(c: &CertifyCmd, s: &Settings) -> Outcome {
    let (name, mut cert) = match *c {
        CertifyCmd::Sp2 { beta, gamma, norm, .. } => ("certify sp2", sp2_decay_bound(beta, gamma, norm, &ledger(s.c_hat)?)?),
        CertifyCmd::Sl3 { s: ss, t, norm } => ("certify sl3", sl3_decay_bound(ss, t, norm)?),
    };
    cert.seed = Some(s.seed);
    let doc = serde_json::to_value(&cert)?;
    s.emitter.emit(name, &doc, None)?;
    if cert.holds() {
        Ok(())
    } else {
        Err(violation(name, "a certificate assertion fails", &doc, s))
    }
}

fn cmd_verify(v: &VerifyArgs, s: &Settings) -> Outcome {
    if !LEMMA_IDS.contains(&v.lemma_id.as_str()) {
        return Err(Failure::Input(format!("unknown lemma id `{}`; expected one of {}", v.lemma_id, LEMMA_IDS.join(", "))));
    }
    let base = if s.quick { quick_grid(&v.lemma_id)? } else { default_grid(&v.lemma_id)? };
    let grid = match &s.grid {
        Some(over) => merge(base, over.clone()),
        None => base,
    };
    if v.show_grid {
        return Ok(s.emitter.emit("verify", &json!({ "lemma_id": v.lemma_id, "grid": grid }), None)?);
    }
    let report = run_campaign(&v.lemma_id, Some(&grid), s.seed)?;
    let doc = json!({ "lemma_id": v.lemma_id, "quick": s.quick, "grid": grid, "report": report });
    s.emitter.emit("verify", &doc, Some(&report))?;
    if report.passed() {
        Ok(())
    } else {
        let message = format!("{} violation(s) in `{}`", report.violation_count, v.lemma_id);
        Err(violation("verify", &message, &doc, s))
    }
}

/// Recursive object merge; `over` wins on conflicts.
fn merge(base: Value, over: Value) -> Value {
    match (base, over) {
        (Value::Object(mut b), Value::Object(o)) => {
            for (k, v) in o {
                let merged = match b.remove(&k) {
                    Some(old) => merge(old, v),
                    None => v,
                };
                b.insert(k, merged);
            }
            Value::Object(b)
        }
        (_, o) => o,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_overrides_nested_fields() {
        let merged = merge(json!({ "a": 1, "b": { "c": 2, "d": 3 } }), json!({ "b": { "d": 4 }, "e": 5 }));
        assert_eq!(merged, json!({ "a": 1, "b": { "c": 2, "d": 4 }, "e": 5 }));
    }

    #[test]
    fn numbers_parse_from_mixed_separators() {
        assert!(matches!(parse_numbers("1, 2;3\n4").ok(), Some(v) if v == vec![1.0, 2.0, 3.0, 4.0]));
        assert!(parse_numbers("1 x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
