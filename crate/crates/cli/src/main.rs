//! `opda`: parse, simulate, decide and transform oracle pushdown automata.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input (arguments, files,
//! words), 3 resource bounds exceeded, 4 precondition failure, 5 a zoo
//! crosscheck found a disagreement.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use opda::format::{parse_machines, print_machine};
use opda::hierarchy::build_query_circuit;
use opda::machine::{validate, Machine, MachineSpec};
use opda::oracle::{self, load_expr, print_expr, table_csv, write_expr_bundle, Decider, LanguageExpr};
use opda::ppda::{exact_acceptance_probability, parse_ppda, print_ppda, Ppda};
use opda::sim::{BoundsPolicy, Verdict, DEFAULT_COEFF};
use opda::symbol::{format_word, parse_token, parse_word, Symbol, Word};
use opda::transforms;
use opda::{zoo, Error};

#[derive(Parser)]
#[command(name = "opda", version, about = "Oracle pushdown automata toolkit")]
struct Cli {
    #[command(flatten)]
    bounds: BoundsArgs,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct BoundsArgs {
    /// step limit for every run, overriding the linear bound
    #[arg(long, global = true)]
    max_steps: Option<usize>,
    /// coefficient c of the bound c·(n+2)+64 (default from OPDA_MAX_STEPS, else 64)
    #[arg(long, global = true)]
    bounds_coeff: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a machine, expression (.expr) or probabilistic machine (.ppda) and print it canonically
    Parse { file: PathBuf },
    /// Run a machine on a word and report the verdict with path statistics
    Run { machine: PathBuf, word: String },
    /// Print the valid outputs of a reducer on a word, one per line
    Outputs { machine: PathBuf, word: String },
    /// Decide membership of a word in an expression or machine language
    Decide { language: PathBuf, word: String },
    /// Membership CSV of every word up to --max-len in length-lexicographic order
    Table {
        language: PathBuf,
        #[arg(long)]
        max_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replace the stack of a normalized npda by a Dyck oracle
    Dyckify {
        machine: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a machine construction
    Transform {
        #[arg(value_enum)]
        op: Op,
        machines: Vec<PathBuf>,
        /// homomorphism images as SYMBOL=WORD, repeatable
        #[arg(long = "map")]
        maps: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Example languages
    Zoo {
        #[command(subcommand)]
        cmd: ZooCmd,
    },
    /// Exact acceptance probability of a probabilistic machine
    Prob { machine: PathBuf, word: String },
    /// Query circuit of a reducer chain (one or two Turing reducers) on a word
    Circuit {
        #[arg(required = true, num_args = 1..=2)]
        chain: Vec<PathBuf>,
        #[arg(long)]
        word: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Op {
    Normalize,
    Reverse,
    Star,
    Union,
    Concat,
    Homomorphism,
    InvHomomorphism,
    FlipAnswers,
    CopyInput,
    Product,
}

#[derive(Subcommand)]
enum ZooCmd {
    List,
    Crosscheck {
        name: Option<String>,
        #[arg(long)]
        max_len: Option<usize>,
    },
    Export {
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 1,
        Error::Symbol(_)
        | Error::Parse { .. }
        | Error::Invalid { .. }
        | Error::InputAlphabet(_)
        | Error::QueryAlphabet(_)
        | Error::UnknownName(_) => 2,
        Error::ResourceExceeded(_) => 3,
        Error::Precondition(_) | Error::NotNormalized { .. } | Error::Budget(_) => 4,
    }
}

/// Bounds from flags and `OPDA_MAX_STEPS`; errors are invalid arguments.
fn policy(args: &BoundsArgs) -> Result<BoundsPolicy, String> {
    let env = match std::env::var("OPDA_MAX_STEPS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("OPDA_MAX_STEPS must be a positive integer, got `{v}`"))?,
        ),
        Err(_) => None,
    };
    let coeff = args.bounds_coeff.or(env).unwrap_or(DEFAULT_COEFF);
    if coeff == 0 || args.max_steps == Some(0) {
        return Err("bounds must be strictly positive".into());
    }
    Ok(BoundsPolicy { coeff, max_steps: args.max_steps })
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn is_ext(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e == ext)
}

fn load_spec(path: &Path) -> Result<MachineSpec, Error> {
    opda::format::parse_machine(&read(path)?)
}

fn load_machine(path: &Path) -> Result<Arc<Machine>, Error> {
    Machine::new(load_spec(path)?)
}

/// An expression file, or a machine file read as its language.
fn load_language(path: &Path) -> Result<LanguageExpr, Error> {
    if is_ext(path, "expr") {
        load_expr(path)
    } else {
        Ok(oracle::machine(&load_machine(path)?))
    }
}

fn render(w: &[Symbol]) -> String {
    if w.is_empty() {
        "λ".into()
    } else {
        format_word(w)
    }
}

fn parse_map(maps: &[String]) -> Result<BTreeMap<Symbol, Word>, Error> {
    maps.iter()
        .map(|m| {
            let (a, w) = m
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: 1, msg: format!("expected SYMBOL=WORD, got `{m}`") })?;
            let image: Word = if w.chars().any(char::is_whitespace) {
                w.split_whitespace().map(parse_token).collect::<Result<_, _>>()?
            } else {
                w.chars().map(|c| parse_token(&c.to_string())).collect::<Result<_, _>>()?
            };
            Ok((parse_token(a.trim())?, image))
        })
        .collect()
}

fn arity(op: &str, want: &str, got: usize) -> Error {
    Error::Precondition(format!("`{op}` takes {want} machine(s), got {got}"))
}

fn transform(op: Op, specs: &[MachineSpec], maps: &[String], out: &Path) -> Result<Vec<PathBuf>, Error> {
    let one = |name: &str| match specs {
        [m] => Ok(m),
        _ => Err(arity(name, "one", specs.len())),
    };
    let two = |name: &str| match specs {
        [a, b] => Ok((a, b)),
        _ => Err(arity(name, "two", specs.len())),
    };
    let result = match op {
        Op::Normalize => transforms::normalize_end(one("normalize")?)?,
        Op::Reverse => transforms::reverse_m(one("reverse")?)?,
        Op::Star => transforms::star_m(one("star")?)?,
        Op::Union => {
            let (a, b) = two("union")?;
            transforms::union_m(a, b)?
        }
        Op::Concat => {
            let (a, b) = two("concat")?;
            transforms::concat_m(a, b)?
        }
        Op::Homomorphism => {
            let h = parse_map(maps)?;
            let mut target: Vec<Symbol> = h.values().flatten().cloned().collect();
            target.sort();
            target.dedup();
            transforms::homomorphism_m(one("homomorphism")?, &h, &target)?
        }
        Op::InvHomomorphism => transforms::inv_homomorphism_m(one("inv-homomorphism")?, &parse_map(maps)?)?,
        Op::FlipAnswers => transforms::flip_answers(one("flip-answers")?)?,
        Op::CopyInput => transforms::copy_input_reducer(one("copy-input")?)?,
        Op::Product => {
            let d = transforms::product_reducer(specs)?;
            let name = d.reducer.name.clone();
            let e = oracle::many_one(&Machine::new(d.reducer)?, d.oracle);
            return Ok(vec![write_expr_bundle(out, &name, &e)?]);
        }
    };
    Machine::new(result.clone())?;
    let path = out.join(format!("{}.m", result.name));
    write(&path, &print_machine(&result))?;
    Ok(vec![path])
}

fn execute(cli: Cli, policy: BoundsPolicy) -> Result<u8, Error> {
    let dec = Decider::new(policy);
    match cli.cmd {
        Cmd::Parse { file } => {
            if is_ext(&file, "expr") {
                print!("{}", print_expr(&load_expr(&file)?));
                println!();
            } else if is_ext(&file, "ppda") {
                let p = Ppda::new(parse_ppda(&read(&file)?)?)?;
                print!("{}", print_ppda(&p.spec()));
            } else {
                for m in parse_machines(&read(&file)?)? {
                    let v = validate(&m);
                    if !v.is_empty() {
                        return Err(Error::Invalid { name: m.name, violations: v });
                    }
                    print!("{}", print_machine(&m));
                }
            }
        }
        Cmd::Run { machine, word } => {
            let m = load_machine(&machine)?;
            let w = parse_word(&word, &m.spec().input)?;
            let r = m.run(&w, policy.bounds(w.len()))?;
            let s = &r.stats;
            println!(
                "{}",
                match r.verdict {
                    Verdict::Accept => "accept",
                    Verdict::Reject => "reject",
                    Verdict::ResourceExceeded => "resource_exceeded",
                }
            );
            println!("paths explored: {}", s.paths_explored);
            println!("accepting paths: {}", s.accepting_paths);
            println!("paths over bounds: {}", s.exceeded_paths);
            println!("paths cut at a repeated configuration: {}", s.repeated_paths);
            if r.verdict == Verdict::ResourceExceeded {
                return Ok(3);
            }
        }
        Cmd::Outputs { machine, word } => {
            let m = load_machine(&machine)?;
            let w = parse_word(&word, &m.spec().input)?;
            for tapes in m.valid_outputs(&w, policy.bounds(w.len()))? {
                println!("{}", tapes.iter().map(|t| render(t)).collect::<Vec<_>>().join(" | "));
            }
        }
        Cmd::Decide { language, word } => {
            let e = load_language(&language)?;
            let w = parse_word(&word, &e.alphabet())?;
            println!("{}", dec.member(&e, &w)?);
        }
        Cmd::Table { language, max_len, out } => {
            let e = load_language(&language)?;
            let alphabet = e.alphabet();
            let csv = table_csv(&dec.table(&e, &alphabet, max_len)?, &alphabet);
            match out {
                Some(p) => write(&p, &csv)?,
                None => print!("{csv}"),
            }
        }
        Cmd::Dyckify { machine, out } => {
            let spec = load_spec(&machine)?;
            Machine::new(spec.clone())?;
            let d = transforms::dyckify(&spec)?;
            let name = d.reducer.name.clone();
            let e = oracle::many_one(&Machine::new(d.reducer)?, d.oracle);
            println!("{}", write_expr_bundle(&out, &name, &e)?.display());
        }
        Cmd::Transform { op, machines, maps, out } => {
            let specs = machines.iter().map(|p| load_spec(p)).collect::<Result<Vec<_>, _>>()?;
            for s in &specs {
                Machine::new(s.clone())?;
            }
            for p in transform(op, &specs, &maps, &out)? {
                println!("{}", p.display());
            }
        }
        Cmd::Zoo { cmd } => return zoo_cmd(cmd, &dec),
        Cmd::Prob { machine, word } => {
            let p = Ppda::new(parse_ppda(&read(&machine)?)?)?;
            let w = parse_word(&word, &p.machine().spec().input)?;
            let o = exact_acceptance_probability(&p, &w, policy.bounds(w.len()))?;
            println!("{}/{}", o.accept.numer(), o.accept.denom());
        }
        Cmd::Circuit { chain, word, out } => {
            let chain = chain.iter().map(|p| load_machine(p)).collect::<Result<Vec<_>, _>>()?;
            let w = parse_word(&word, &chain[0].spec().input)?;
            let text = build_query_circuit(&chain, &w)?.to_text();
            match out {
                Some(p) => write(&p, &text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(0)
}

fn zoo_cmd(cmd: ZooCmd, dec: &Decider) -> Result<u8, Error> {
    match cmd {
        ZooCmd::List => {
            for e in zoo::entries() {
                println!("{}\t{}", e.name, e.description);
            }
        }
        ZooCmd::Crosscheck { name, max_len } => {
            let names: Vec<String> = match name {
                Some(n) => vec![zoo::entry(&n)?.name.to_owned()],
                None => zoo::NAMES.iter().map(|n| n.to_string()).collect(),
            };
            let mut code = 0;
            for n in names {
                let len = max_len.unwrap_or(zoo::entry(&n)?.test_max_len);
                let r = zoo::crosscheck(&n, len, dec)?;
                println!("{}: {}/{} agree up to length {}", r.name, r.agreed, r.checked, r.max_len);
                if let Some((w, reference, built)) = &r.first_disagreement {
                    println!("  first disagreement: {} reference={reference} construction={built}", render(w));
                    code = code.max(5);
                }
                if !r.exceeded.is_empty() {
                    println!("  over bounds: {} word(s)", r.exceeded.len());
                    code = code.max(3);
                }
            }
            return Ok(code);
        }
        ZooCmd::Export { out } => {
            for p in zoo::export(&out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let policy = match policy(&cli.bounds) {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    match execute(cli, policy) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
