//! Command-line surface. `run` parses argv, writes to the given streams and
//! returns the process exit status: 0 success, 2 usage, 3 hypothesis
//! violation, 4 search cap, 1 anything else.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::adversary::{default_determinacy, serve, ServeEnd, Session};
use crate::catalog::{self, check_largeness};
use crate::density::{core_extend, DensityContext};
use crate::determinacy::{determinacy_report, weakness_report, Method, SearchOptions};
use crate::dtrees::{build_c, TreeFamily};
use crate::encoding::PartialOracle;
use crate::error::{Error, Result};
use crate::partial::{find_witness, verifies, PartialStructure, Witness};
use crate::reduce::{
    apply_interpretation, builtin_interpretation, builtin_names, check_validity, falsification_transport,
    pullback_solution, CheckMode, Interpretation,
};
use crate::syntax::{parse_principle, BasicSentence};
use crate::translate::{export_cnf, metrics, simplify_constants, to_dnf, translation, Coding, CnfMode};

/// Term cap for `translate --dnf`.
const DNF_TERMS: usize = 1 << 20;

#[derive(Parser, Debug)]
#[command(name = "finprin", version, about = "Finitary combinatorial principles: determinacy, translations, adversaries, reductions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Browse the principle catalog.
    Principle {
        #[command(subcommand)]
        action: PrincipleCmd,
    },
    /// Determinacy d(n) by exhaustive search over partial structures.
    Determinacy(DeterminacyArgs),
    /// Overflow sets of the registered model's canonical slices.
    Largeness(LargenessArgs),
    /// Unary or binary propositional translation on [n].
    Translate(TranslateArgs),
    /// Query adversary speaking the line protocol on stdin/stdout.
    Adversary {
        #[command(subcommand)]
        action: AdversaryCmd,
    },
    /// Worked demonstrations.
    Demo {
        #[command(subcommand)]
        action: DemoCmd,
    },
    /// Interpretations between principles.
    Reduce {
        #[command(subcommand)]
        action: ReduceCmd,
    },
    /// Find a verifying witness in a total structure given as JSON.
    Solve {
        principle: String,
        #[arg(long)]
        structure: String,
    },
}

#[derive(Subcommand, Debug)]
enum PrincipleCmd {
    List,
    Show {
        name: String,
        /// Print the sentence as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Args, Debug)]
struct DeterminacyArgs {
    /// Catalog name or a principle DSL file.
    principle: String,
    /// Universe sizes: `4`, `2..5` (inclusive) or `2,3,7`.
    #[arg(long)]
    n: String,
    /// Plain exhaustive enumeration instead of branch and bound.
    #[arg(long)]
    exhaustive: bool,
    /// Report the ratio s_L(n)/d(n) instead.
    #[arg(long)]
    weakness: bool,
    #[arg(long, value_enum, default_value = "tsv")]
    format: Format,
}

#[derive(Args, Debug)]
struct LargenessArgs {
    principle: String,
    #[arg(long, default_value = "1..64")]
    n: String,
    /// Random induced substructures checked per n.
    #[arg(long, default_value_t = 0)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "tsv")]
    format: Format,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CnfArg {
    Direct,
    Tseitin,
}

#[derive(Args, Debug)]
struct TranslateArgs {
    principle: String,
    #[arg(long)]
    n: u32,
    #[arg(long, conflicts_with = "binary", required_unless_present = "binary")]
    unary: bool,
    #[arg(long)]
    binary: bool,
    /// Eliminate Boolean constants.
    #[arg(long)]
    simplify: bool,
    /// Expand to a disjunction of conjunctions first (needed for `--cnf direct` on binary translations).
    #[arg(long)]
    dnf: bool,
    /// Emit DIMACS of the negation.
    #[arg(long, value_enum)]
    cnf: Option<CnfArg>,
    /// Print depth and size only.
    #[arg(long, conflicts_with = "cnf")]
    metrics: bool,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand, Debug)]
enum AdversaryCmd {
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct ServeArgs {
    principle: String,
    #[arg(long)]
    n: u32,
    /// Answered-cell budget; defaults to ⌊n/r_L⌋ − 1.
    #[arg(long)]
    budget: Option<usize>,
    /// Register a random tree family for this weak principle first.
    #[arg(long)]
    family: Option<String>,
    #[arg(long, default_value_t = 16)]
    m: u32,
    #[arg(long, default_value_t = 4)]
    b0: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum DemoCmd {
    /// One run of the core extension on random trees; prints the trace as JSON lines.
    CoreLemma(CoreArgs),
}

#[derive(Args, Debug)]
struct CoreArgs {
    #[arg(long, default_value = "HOP")]
    principle: String,
    #[arg(long, default_value = "WPHP")]
    target: String,
    #[arg(long, default_value_t = 256)]
    n: u32,
    #[arg(long, default_value_t = 16)]
    m: u32,
    #[arg(long, default_value_t = 4)]
    b0: usize,
    /// Determinacy of the target at m; computed when absent.
    #[arg(long)]
    d_tilde: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum ReduceCmd {
    List,
    /// Print an interpretation in the DSL.
    Show { interpretation: String },
    /// Functionality and Herbrand coverage on [n].
    Check {
        interpretation: String,
        #[arg(long, default_value_t = 3)]
        n: u32,
        /// Sample this many random structures instead of enumerating.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// I(B) for a source structure given as JSON.
    Apply {
        interpretation: String,
        #[arg(long)]
        structure: String,
    },
    /// Pull a target witness on I(B) back to a source witness on B.
    Pullback {
        interpretation: String,
        #[arg(long)]
        structure: String,
        /// `DISJUNCT A0 A1 ...`; found by search when absent.
        #[arg(long)]
        witness: Option<String>,
    },
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Hypothesis(_) => 3,
        Error::CapExceeded(_) => 4,
        Error::Syntax { .. } | Error::UnknownSymbol(_) | Error::NotFound(_) => 2,
        _ => 1,
    }
}

pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, input, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Protocol(e.to_string())
}

fn read_file(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::NotFound(format!("{path}: {e}")))
}

fn load_principle(arg: &str) -> Result<BasicSentence> {
    if Path::new(arg).is_file() {
        parse_principle(&read_file(arg)?)
    } else {
        Ok(catalog::builtin(arg)?.sentence)
    }
}

fn load_interpretation(arg: &str) -> Result<Interpretation> {
    if Path::new(arg).is_file() {
        Interpretation::parse(&read_file(arg)?)
    } else {
        builtin_interpretation(arg)
    }
}

fn load_structure(phi_lang: &crate::syntax::Language, path: &str) -> Result<PartialStructure> {
    PartialStructure::from_json(phi_lang, &read_file(path)?)
}

/// `4`, `2..5` (inclusive), `2..=5` or `2,3,7`.
pub fn parse_range(text: &str) -> Result<Vec<u32>> {
    let bad = || Error::Syntax { line: 1, col: 1, msg: format!("bad range `{text}`") };
    let num = |s: &str| s.trim().parse::<u32>().map_err(|_| bad());
    let out: Vec<u32> = if let Some((a, b)) = text.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        (num(a)?..=num(b)?).collect()
    } else {
        text.split(',').map(num).collect::<Result<_>>()?
    };
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

fn json_line(out: &mut dyn Write, v: &impl serde::Serialize) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string(v).map_err(|e| Error::Json(e.to_string()))?).map_err(io)
}

fn dispatch(cmd: Command, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Principle { action: PrincipleCmd::List } => {
            for e in catalog::entries() {
                writeln!(out, "{}\t{}", e.name, e.notes).map_err(io)?;
            }
        }
        Command::Principle { action: PrincipleCmd::Show { name, json } } => {
            let e = catalog::builtin(&name)?;
            if json {
                writeln!(out, "{}", e.sentence.to_json()).map_err(io)?;
            } else {
                write!(out, "{}", catalog::show(&e)).map_err(io)?;
            }
        }
        Command::Determinacy(a) => {
            let phi = load_principle(&a.principle)?;
            let ns = parse_range(&a.n)?;
            let method = if a.exhaustive { Method::Exhaustive } else { Method::BranchAndBound };
            let opts = SearchOptions::with_method(method);
            if a.weakness {
                let r = weakness_report(&phi, &ns, opts)?;
                match a.format {
                    Format::Json => json_line(out, &r)?,
                    Format::Tsv => {
                        writeln!(out, "n\td\ts_l\tratio").map_err(io)?;
                        for row in &r.rows {
                            writeln!(out, "{}\t{}\t{}\t{:.6}", row.n, row.d, row.s_l, row.ratio).map_err(io)?;
                        }
                    }
                }
            } else {
                let r = determinacy_report(&phi, &ns, opts)?;
                match a.format {
                    Format::Json => json_line(out, &r)?,
                    Format::Tsv => {
                        writeln!(out, "n\td\ts_l\tdegenerate\tvalid_on_n\tnodes").map_err(io)?;
                        for row in &r.rows {
                            writeln!(
                                out,
                                "{}\t{}\t{}\t{}\t{}\t{}",
                                row.n, row.d, row.s_l, row.degenerate, row.valid_on_n, row.nodes
                            )
                            .map_err(io)?;
                        }
                    }
                }
            }
        }
        Command::Largeness(a) => {
            let e = catalog::builtin(&a.principle)?;
            let model = e.model.ok_or_else(|| Error::NotFound(format!("no registered model for {}", e.name)))?;
            let ns = parse_range(&a.n)?;
            if let Format::Tsv = a.format {
                writeln!(out, "n\toverflow\tg\tok").map_err(io)?;
            }
            for n in ns {
                let r = check_largeness(&model, n as usize, a.samples, a.seed)?;
                match a.format {
                    Format::Json => json_line(out, &r)?,
                    Format::Tsv => {
                        let ok = r.overflow.len() <= r.g;
                        writeln!(out, "{}\t{}\t{}\t{ok}", r.n, r.overflow.len(), r.g).map_err(io)?;
                    }
                }
            }
        }
        Command::Translate(a) => {
            let phi = load_principle(&a.principle)?;
            let coding = if a.unary { Coding::Unary } else { Coding::Binary };
            let mut f = translation(&phi, a.n, coding)?;
            if a.simplify {
                f = simplify_constants(&f);
            }
            if a.dnf {
                f = to_dnf(&f, DNF_TERMS)?;
            }
            let text = match (a.cnf, a.metrics) {
                (Some(mode), _) => {
                    let mode = match mode {
                        CnfArg::Direct => CnfMode::Direct,
                        CnfArg::Tseitin => CnfMode::Tseitin,
                    };
                    export_cnf(&f, &phi.language, a.n, mode)?.to_dimacs()
                }
                (None, true) => {
                    let m = metrics(&f);
                    format!("depth\t{}\nsize\t{}\nvariables\t{}\n", m.depth, m.size, f.vars().len())
                }
                (None, false) => f.render(&phi.language) + "\n",
            };
            match a.out {
                Some(path) => std::fs::write(&path, text).map_err(io)?,
                None => out.write_all(text.as_bytes()).map_err(io)?,
            }
        }
        Command::Adversary { action: AdversaryCmd::Serve(a) } => {
            let mut session = Session::for_principle(&a.principle, a.n, a.budget)?;
            if let Some(target) = &a.family {
                let phi_t = load_principle(target)?;
                let lang = session.phi().language.clone();
                let fam = TreeFamily::random(&phi_t.language, a.m, a.b0, &lang, a.n, a.seed)?;
                let d_t = default_determinacy(&phi_t, a.m)?;
                let receipt = session.register_tree_family(fam, &phi_t, a.b0, d_t)?;
                json_line(err, &json!({ "registered": phi_t.name, "receipt": receipt }))?;
            }
            let end = serve(&mut session, input, &mut *out)?;
            let word = match end {
                ServeEnd::Refuted => "refuted",
                ServeEnd::Budget => "budget",
                ServeEnd::Closed => "closed",
            };
            json_line(err, &json!({ "end": word, "answered": session.answered(), "budget": session.budget() }))?;
        }
        Command::Demo { action: DemoCmd::CoreLemma(a) } => {
            let e = catalog::builtin(&a.principle)?;
            let model = e.model.ok_or_else(|| Error::NotFound(format!("no registered model for {}", e.name)))?;
            let phi_t = load_principle(&a.target)?;
            let mut ctx = DensityContext::new(&e.sentence, &model, a.n)?;
            let fam = TreeFamily::random(&phi_t.language, a.m, a.b0, &e.sentence.language, a.n, a.seed)?;
            let d_t = match a.d_tilde {
                Some(d) => d,
                None => default_determinacy(&phi_t, a.m)?,
            };
            let p = PartialOracle::empty(&e.sentence.language, a.n);
            let res = core_extend(&mut ctx, &p, &fam, a.b0, &phi_t, d_t)?;
            out.write_all(res.trace_jsonl().as_bytes()).map_err(io)?;
            let c = build_c(&fam, &res.q)?;
            json_line(
                out,
                &json!({
                    "q_size": res.q.size(),
                    "unpruned_size": res.unpruned_size,
                    "iterations": res.iterations,
                    "size_bound": p.size() + a.b0 * phi_t.size(),
                    "c_verifies": verifies(&c, &phi_t),
                    "fragment_embeds": ctx.fragment_embeds(&res.q)?,
                }),
            )?;
        }
        Command::Reduce { action } => reduce_cmd(action, out)?,
        Command::Solve { principle, structure } => {
            let phi = load_principle(&principle)?;
            let b = load_structure(&phi.language, &structure)?;
            let w = find_witness(&b, &phi);
            json_line(out, &json!({ "principle": phi.name, "witness": w.map(|w| json!({ "disjunct": w.disjunct, "tuple": w.tuple })) }))?;
        }
    }
    Ok(())
}

fn parse_witness(text: &str) -> Result<Witness> {
    let nums: Vec<u32> = text
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Syntax { line: 1, col: 1, msg: format!("bad witness `{text}`") }))
        .collect::<Result<_>>()?;
    let (&d, tuple) = nums.split_first().ok_or_else(|| Error::Syntax { line: 1, col: 1, msg: "empty witness".into() })?;
    Ok(Witness { disjunct: d as usize, tuple: tuple.to_vec() })
}

fn reduce_cmd(action: ReduceCmd, out: &mut dyn Write) -> Result<()> {
    match action {
        ReduceCmd::List => {
            for name in builtin_names() {
                writeln!(out, "{name}").map_err(io)?;
            }
        }
        ReduceCmd::Show { interpretation } => {
            write!(out, "{}", load_interpretation(&interpretation)?.render()).map_err(io)?;
        }
        ReduceCmd::Check { interpretation, n, samples, seed } => {
            let i = load_interpretation(&interpretation)?;
            let mode = match samples {
                Some(samples) => CheckMode::Sampled { samples, seed },
                None => CheckMode::Exhaustive,
            };
            let r = check_validity(&i, n, mode)?;
            json_line(out, &r)?;
            if !r.is_valid() {
                return Err(Error::Contract(format!("{} fails its validity check on [{n}]", i.name)));
            }
        }
        ReduceCmd::Apply { interpretation, structure } => {
            let i = load_interpretation(&interpretation)?;
            let b = load_structure(i.source_language(), &structure)?;
            let ib = apply_interpretation(&i, &b)?;
            let t = falsification_transport(&i, &b)?;
            json_line(out, &json!({ "structure": ib.to_json_value(), "transport": t }))?;
        }
        ReduceCmd::Pullback { interpretation, structure, witness } => {
            let i = load_interpretation(&interpretation)?;
            let b = load_structure(i.source_language(), &structure)?;
            let w = match witness {
                Some(text) => parse_witness(&text)?,
                None => {
                    let ib = apply_interpretation(&i, &b)?;
                    find_witness(&ib, &i.target)
                        .ok_or_else(|| Error::NotFound(format!("I(B) has no {} witness", i.target.name)))?
                }
            };
            let p = pullback_solution(&i, &b, &w)?;
            json_line(out, &json!({ "target_witness": { "disjunct": w.disjunct, "tuple": w.tuple }, "pullback": p }))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        call_with(args, "")
    }

    fn call_with(args: &[&str], stdin: &str) -> (i32, String, String) {
        let mut input = std::io::Cursor::new(stdin.as_bytes().to_vec());
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let argv = std::iter::once("finprin").chain(args.iter().copied());
        let code = run(argv, &mut input, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2..4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_range("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_range("5,7").unwrap(), vec![5, 7]);
        assert!(parse_range("0..2").is_err());
        assert!(parse_range("x").is_err());
    }

    #[test]
    fn determinacy_tsv() {
        let (code, out, _) = call(&["determinacy", "WPHP", "--n", "2..3"]);
        assert_eq!(code, 0);
        let rows: Vec<Vec<&str>> = out.lines().skip(1).map(|l| l.split('\t').take(3).collect()).collect();
        assert_eq!(rows, vec![vec!["2", "3", "4"], vec!["3", "4", "9"]]);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(call(&["determinacy"]).0, 2);
        assert_eq!(call(&["determinacy", "NOPE", "--n", "2"]).0, 2);
        assert_eq!(call(&["translate", "PHP", "--n", "2"]).0, 2);
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("determinacy"));
    }

    #[test]
    fn hypothesis_exit_code() {
        let (code, _, err) = call(&["demo", "core-lemma", "--n", "64"]);
        assert_eq!(code, 3);
        assert!(err.contains("(ii)"), "{err}");
    }

    #[test]
    fn dimacs_is_deterministic_and_unsat() {
        let args = ["translate", "WPHP", "--n", "2", "--unary", "--simplify", "--cnf", "direct"];
        let (code, a, _) = call(&args);
        assert_eq!(code, 0);
        assert_eq!(call(&args).1, a);
        let cnf = crate::translate::Cnf::parse_dimacs(&a).unwrap();
        assert_eq!(cnf.brute_force(8).unwrap(), None);
    }

    #[test]
    fn adversary_session() {
        let (code, out, err) = call_with(&["adversary", "serve", "PHP", "--n", "8", "--budget", "2"], "Q f(0)#0\nQ f(1)#0\nQ f(2)#0\n");
        assert_eq!(code, 0);
        assert_eq!(out.lines().last(), Some("BUDGET"));
        assert!(err.contains("\"budget\""));
    }

    #[test]
    fn reduce_commands() {
        assert_eq!(call(&["reduce", "list"]).1.lines().count(), 4);
        let (code, out, _) = call(&["reduce", "check", "IND->PHP", "--n", "2"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("\"violations\":[]"));
        let (code, out, _) = call(&["reduce", "show", "IND->HOP"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("interpretation IND->HOP {"));
    }
}
