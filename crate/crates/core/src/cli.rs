//! The `ucq` command line tool.
//!
//! Every command builds one JSON report. `--json` prints it as is; the
//! default output renders the same report as text, except for `count`
//! (just the number) and `complex reduce` (a query file, or `EULER v`).

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::analysis::{classify_cq, is_acyclic, CoreSummary};
use crate::caps::Caps;
use crate::counting::{
    count_cq, count_cq_acyclic, count_cq_backtracking, count_cq_bruteforce, count_ucq_direct,
    count_ucq_expansion, AnswerCount,
};
use crate::error::{Error, Result};
use crate::expansion::{
    cq_expansion, meta_decide, wl_dimension, ExpansionMode, ExpansionOptions, ExpansionTable,
};
use crate::generate;
use crate::io::{parse_complex_with_warnings, parse_database, parse_query, write_query};
use crate::simplicial::{
    reduce_complex_to_ucq, reduced_euler_by_facets, reduced_euler_characteristic, verify_reduction, Complex,
    Reduction,
};
use crate::structure::{Structure, Ucq};

/// Version of the JSON report layout; see `schemas/report.json`.
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "ucq",
    version,
    about = "Analyse and count unions of conjunctive queries"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Print the JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[arg(long, global = true, default_value_t = 20)]
    pub max_disjuncts: usize,
    /// Limit for the treewidth DP and, when given, for core searches too.
    #[arg(long, global = true)]
    pub max_universe: Option<usize>,
    #[arg(long, global = true, default_value_t = 24)]
    pub max_ground: usize,
    /// Worker threads for subset enumeration and per-entry counting.
    #[arg(long, global = true, env = "UCQ_JOBS", default_value_t = 1)]
    pub jobs: usize,
}

impl Global {
    pub fn caps(&self) -> Caps {
        let mut caps = Caps {
            max_disjuncts: self.max_disjuncts,
            max_ground: self.max_ground,
            ..Caps::default()
        };
        if let Some(u) = self.max_universe {
            caps.max_universe = u;
            caps.max_core_universe = u;
        }
        caps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Iso,
    Core,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Auto,
    Brute,
    Backtrack,
    Yannakakis,
    Expansion,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structural report for every disjunct.
    Analyze {
        query: PathBuf,
        /// Classify against this treewidth bound.
        #[arg(long)]
        bound: Option<usize>,
    },
    /// Inclusion-exclusion expansion with coefficients.
    Expand {
        query: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Iso)]
        mode: Mode,
        #[arg(long)]
        keep_zeros: bool,
    },
    /// Linear-time verdict; exit code 0 linear, 1 not linear, 2 error.
    Meta { query: PathBuf },
    /// Number of answers in a database.
    Count {
        query: PathBuf,
        database: PathBuf,
        #[arg(long, value_enum, default_value_t = Engine::Auto)]
        engine: Engine,
    },
    /// Simplicial complex tools.
    Complex {
        #[command(subcommand)]
        command: ComplexCommand,
    },
    /// WL-dimension of a quantifier-free UCQ over labelled graphs.
    WlDim { query: PathBuf },
    /// Write fixture files.
    Generate {
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(subcommand)]
        family: Family,
    },
}

#[derive(Debug, Subcommand)]
pub enum ComplexCommand {
    /// Reduced Euler characteristic.
    Euler { complex: PathBuf },
    /// Reduce to a UCQ (or report the Euler characteristic directly).
    Reduce {
        complex: PathBuf,
        #[arg(long, default_value_t = 3)]
        t: usize,
    },
    /// Check the reduction guarantees on a reduce output.
    Verify {
        complex: PathBuf,
        #[arg(long, default_value_t = 3)]
        t: usize,
        /// Reduce output to check (`-` for stdin); computed when omitted.
        #[arg(long)]
        ucq: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Family {
    /// The two example complexes `delta1.cx` and `delta2.cx`
    Figure1,
    /// Substructures S_A of K_3^4, the database K_3^4, and the UCQs psi1 and psi2
    Figure2,
    /// The union of phi_k^{i,j} over i < j, or one member with --i and --j
    AppendixPhi {
        #[arg(long)]
        k: usize,
        #[arg(long, requires = "j")]
        i: Option<usize>,
        #[arg(long, requires = "i")]
        j: Option<usize>,
    },
    /// psi_k with free x1..xk, xb and one quantified y
    AppendixPsi {
        #[arg(long)]
        k: usize,
    },
    /// K_t^k as a quantifier-free CQ and as a database
    StretchedClique {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        k: usize,
    },
    /// A random complex on ground 1..n
    RandomComplex {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
    },
}

/// What a command produced: the report, its text form and the exit code.
struct Outcome {
    report: Value,
    text: Option<String>,
    code: i32,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Outcome {
            report,
            text: None,
            code: 0,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    let res = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map(|_| s)
    } else {
        std::fs::read_to_string(path)
    };
    res.map_err(|e| Error::precondition(format!("cannot read {}: {e}", path.display())))
}

fn with_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse {
            line,
            column,
            message,
        } => Error::Parse {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn load_query(path: &Path) -> Result<Ucq> {
    with_file(path, parse_query(&read(path)?))
}

fn load_complex(path: &Path) -> Result<(Complex, Vec<String>)> {
    with_file(path, parse_complex_with_warnings(&read(path)?))
}

/// Adds the query's symbols missing from the database as empty relations.
fn lift_database(d: Structure, psi: &Ucq) -> Result<Structure> {
    let sig = d.signature().union(psi.signature())?;
    if &sig == d.signature() {
        Ok(d)
    } else {
        d.extend_signature(&sig)
    }
}

fn entry_json(e: &crate::expansion::ExpansionEntry) -> Value {
    let s = CoreSummary::of(&e.query);
    json!({
        "code": e.code.short_hex(),
        "coefficient": e.coefficient.to_string(),
        "universe": e.query.body().universe_size(),
        "free": s.free,
        "atoms": s.atoms,
        "acyclic": is_acyclic(e.query.body()),
        "witnesses": e.witnesses.iter()
            .map(|w| w.iter().map(|i| i + 1).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    })
}

/// The `expand` report for a table.
pub fn expansion_report(table: &ExpansionTable) -> Value {
    json!({
        "command": "expand",
        "version": REPORT_VERSION,
        "mode": table.mode,
        "disjuncts": table.source.len(),
        "entries": table.entries.iter().map(entry_json).collect::<Vec<_>>(),
    })
}

fn expansion_mode(m: Mode) -> ExpansionMode {
    match m {
        Mode::Iso => ExpansionMode::IsomorphismOnly,
        Mode::Core => ExpansionMode::CoreAndIsomorphism,
    }
}

fn auto_table(psi: &Ucq, caps: &Caps, jobs: usize) -> Result<ExpansionTable> {
    let mode = if psi.is_quantifier_free() {
        ExpansionMode::IsomorphismOnly
    } else {
        ExpansionMode::CoreAndIsomorphism
    };
    cq_expansion(
        psi,
        ExpansionOptions {
            mode,
            keep_zeros: false,
            jobs,
        },
        caps,
    )
}

/// Counts answers of `psi` in `d` with the chosen engine. Query symbols
/// missing from `d` are treated as empty relations.
pub fn count_answers(
    psi: &Ucq,
    d: &Structure,
    engine: Engine,
    caps: &Caps,
    jobs: usize,
) -> Result<AnswerCount> {
    let lifted = lift_database(d.clone(), psi)?;
    let d = &lifted;
    let single = psi.len() == 1;
    let only_single = |name: &str| {
        Error::precondition(format!(
            "engine `{name}` counts single CQs; use `expansion` or `brute` for {} disjuncts",
            psi.len()
        ))
    };
    match engine {
        Engine::Auto if single => count_cq(&psi.disjunct_query(0), d),
        Engine::Auto | Engine::Expansion => count_ucq_expansion(psi, d, &auto_table(psi, caps, jobs)?, jobs),
        Engine::Brute if single => count_cq_bruteforce(&psi.disjunct_query(0), d, caps),
        Engine::Brute => count_ucq_direct(psi, d, caps),
        Engine::Backtrack if single => count_cq_backtracking(&psi.disjunct_query(0), d),
        Engine::Backtrack => Err(only_single("backtrack")),
        Engine::Yannakakis if single => count_cq_acyclic(&psi.disjunct_query(0), d),
        Engine::Yannakakis => Err(only_single("yannakakis")),
    }
}

fn engine_name(e: Engine) -> &'static str {
    match e {
        Engine::Auto => "auto",
        Engine::Brute => "brute",
        Engine::Backtrack => "backtrack",
        Engine::Yannakakis => "yannakakis",
        Engine::Expansion => "expansion",
    }
}

fn verify_outcome(c: &Complex, t: usize, source: Option<&Path>, caps: &Caps) -> Result<Outcome> {
    let text = match source {
        Some(p) => Some(read(p)?),
        None => None,
    };
    let euler_line = text.as_deref().and_then(|s| {
        s.lines()
            .map(str::trim)
            .find(|l| !l.is_empty() && !l.starts_with('#'))
            .and_then(|l| l.strip_prefix("EULER "))
            .map(|v| v.trim().to_string())
    });
    let psi = match (&text, euler_line) {
        (_, Some(v)) => {
            let claimed: i64 = v
                .parse()
                .map_err(|_| Error::precondition(format!("bad EULER value `{v}`")))?;
            let euler = reduced_euler_characteristic(c, caps)?;
            let passed = claimed == euler;
            return Ok(Outcome {
                report: json!({
                    "command": "complex-verify",
                    "version": REPORT_VERSION,
                    "branch": "euler",
                    "t": t,
                    "euler": euler,
                    "passed": passed,
                    "items": [{
                        "item": 0,
                        "name": "euler branch value",
                        "passed": passed,
                        "detail": format!("claimed {claimed}, computed {euler}"),
                    }],
                }),
                text: None,
                code: if passed { 0 } else { 1 },
            });
        }
        (Some(s), None) => parse_query(s)?,
        (None, None) => match reduce_complex_to_ucq(c, t, caps)? {
            Reduction::Ucq { ucq, .. } => ucq,
            Reduction::Euler(v) => {
                return Ok(Outcome::ok(json!({
                    "command": "complex-verify",
                    "version": REPORT_VERSION,
                    "branch": "euler",
                    "t": t,
                    "euler": v,
                    "passed": true,
                    "items": [],
                })))
            }
        },
    };
    let r = verify_reduction(c, t, &psi, caps)?;
    let passed = r.passed();
    let mut report = serde_json::to_value(&r).expect("serializable");
    let obj = report.as_object_mut().expect("object");
    obj.insert("command".into(), json!("complex-verify"));
    obj.insert("version".into(), json!(REPORT_VERSION));
    obj.insert("branch".into(), json!("ucq"));
    obj.insert("passed".into(), json!(passed));
    Ok(Outcome {
        report,
        text: None,
        code: if passed { 0 } else { 1 },
    })
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let caps = cli.global.caps();
    let jobs = cli.global.jobs.max(1);
    match &cli.command {
        Command::Analyze { query, bound } => {
            let psi = load_query(query)?;
            let reports: Vec<Value> = (0..psi.len())
                .map(|i| {
                    let mut v = serde_json::to_value(classify_cq(&psi.disjunct_query(i), &caps, *bound))
                        .expect("serializable");
                    v.as_object_mut()
                        .expect("object")
                        .insert("index".into(), json!(i + 1));
                    v
                })
                .collect();
            Ok(Outcome::ok(json!({
                "command": "analyze",
                "version": REPORT_VERSION,
                "free": psi.free(),
                "disjuncts": reports,
            })))
        }
        Command::Expand {
            query,
            mode,
            keep_zeros,
        } => {
            let psi = load_query(query)?;
            let table = cq_expansion(
                &psi,
                ExpansionOptions {
                    mode: expansion_mode(*mode),
                    keep_zeros: *keep_zeros,
                    jobs,
                },
                &caps,
            )?;
            Ok(Outcome::ok(expansion_report(&table)))
        }
        Command::Meta { query } => {
            let psi = load_query(query)?;
            let v = meta_decide(&psi, &caps, jobs)?;
            Ok(Outcome {
                report: json!({
                    "command": "meta",
                    "version": REPORT_VERSION,
                    "linear_time": v.linear_time,
                    "assumption": v.assumption,
                    "caveat": v.caveat,
                    "blocking_terms": v.blocking_terms.iter().map(entry_json).collect::<Vec<_>>(),
                }),
                text: None,
                code: if v.linear_time { 0 } else { 1 },
            })
        }
        Command::Count {
            query,
            database,
            engine,
        } => {
            let psi = load_query(query)?;
            let d = with_file(database, parse_database(&read(database)?))?;
            let c = count_answers(&psi, &d, *engine, &caps, jobs)?;
            Ok(Outcome {
                report: json!({
                    "command": "count",
                    "version": REPORT_VERSION,
                    "engine": engine_name(*engine),
                    "method": c.method,
                    "value": c.value.to_string(),
                }),
                text: Some(format!("{}\n", c.value)),
                code: 0,
            })
        }
        Command::Complex { command } => match command {
            ComplexCommand::Euler { complex } => {
                let (c, warnings) = load_complex(complex)?;
                let euler = reduced_euler_characteristic(&c, &caps)?;
                let by_facets = reduced_euler_by_facets(&c, &caps).ok();
                if let Some(b) = by_facets {
                    if b != euler {
                        return Err(Error::InvalidComplex(format!(
                            "face enumeration gives {euler}, facet inclusion-exclusion {b}"
                        )));
                    }
                }
                Ok(Outcome {
                    report: json!({
                        "command": "complex-euler",
                        "version": REPORT_VERSION,
                        "euler": euler,
                        "euler_by_facets": by_facets,
                        "warnings": warnings,
                    }),
                    text: Some(format!("{euler}\n")),
                    code: 0,
                })
            }
            ComplexCommand::Reduce { complex, t } => {
                let (c, warnings) = load_complex(complex)?;
                match reduce_complex_to_ucq(&c, *t, &caps)? {
                    Reduction::Euler(v) => Ok(Outcome {
                        report: json!({
                            "command": "complex-reduce",
                            "version": REPORT_VERSION,
                            "branch": "euler",
                            "t": t,
                            "euler": v,
                            "warnings": warnings,
                        }),
                        text: Some(format!("EULER {v}\n")),
                        code: 0,
                    }),
                    Reduction::Ucq { ucq, reduced, power } => {
                        let file = write_query(&ucq);
                        Ok(Outcome {
                            report: json!({
                                "command": "complex-reduce",
                                "version": REPORT_VERSION,
                                "branch": "ucq",
                                "t": t,
                                "k": power.universe.len(),
                                "disjuncts": ucq.len(),
                                "reduced_ground": reduced.ground(),
                                "mapping": power.mapping,
                                "ucq": file,
                                "warnings": warnings,
                            }),
                            text: Some(file),
                            code: 0,
                        })
                    }
                }
            }
            ComplexCommand::Verify { complex, t, ucq } => {
                let (c, _) = load_complex(complex)?;
                verify_outcome(&c, *t, ucq.as_deref(), &caps)
            }
        },
        Command::WlDim { query } => {
            let psi = load_query(query)?;
            let w = wl_dimension(&psi, &caps, jobs)?;
            Ok(Outcome {
                report: json!({
                    "command": "wl-dim",
                    "version": REPORT_VERSION,
                    "wl_dimension": w,
                }),
                text: Some(format!("{w}\n")),
                code: 0,
            })
        }
        Command::Generate { out, family } => {
            let files = match family {
                Family::Figure1 => generate::figure1_files(),
                Family::Figure2 => generate::figure2_files()?,
                Family::AppendixPhi { k, i, j } => generate::appendix_phi_files(*k, i.zip(*j))?,
                Family::AppendixPsi { k } => generate::appendix_psi_files(*k)?,
                Family::StretchedClique { t, k } => generate::stretched_clique_files(*t, *k)?,
                Family::RandomComplex { n, seed } => generate::random_complex_files(*n, *seed)?,
            };
            std::fs::create_dir_all(out)
                .map_err(|e| Error::precondition(format!("cannot create {}: {e}", out.display())))?;
            let mut written = Vec::new();
            for (name, text) in files {
                let p = out.join(&name);
                std::fs::write(&p, text)
                    .map_err(|e| Error::precondition(format!("cannot write {}: {e}", p.display())))?;
                written.push(p.display().to_string());
            }
            Ok(Outcome {
                report: json!({
                    "command": "generate",
                    "version": REPORT_VERSION,
                    "files": written,
                }),
                text: Some(written.iter().map(|w| format!("{w}\n")).collect()),
                code: 0,
            })
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            a.iter().map(cell).collect::<Vec<_>>().join(" ")
        }
        Value::Array(a) => a
            .iter()
            .map(|x| format!("[{}]", cell(x)))
            .collect::<Vec<_>>()
            .join(" "),
        Value::Object(_) => serde_json::to_string(v).expect("serializable"),
        other => other.to_string(),
    }
}

/// Renders a report as `key: value` lines; arrays of objects become one
/// block per element.
pub fn render_text(report: &Value) -> String {
    let mut out = String::new();
    render_into(report, 0, &mut out);
    out
}

fn render_into(v: &Value, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    let Value::Object(map) = v else {
        out.push_str(&format!("{pad}{}\n", cell(v)));
        return;
    };
    for (k, val) in map {
        if indent == 0 && (k == "command" || k == "version") {
            continue;
        }
        match val {
            Value::Array(items) if items.iter().any(Value::is_object) => {
                out.push_str(&format!("{pad}{k}: {}\n", items.len()));
                for (i, it) in items.iter().enumerate() {
                    out.push_str(&format!("{pad}  [{}]\n", i + 1));
                    render_into(it, indent + 4, out);
                }
            }
            Value::Object(_) => {
                out.push_str(&format!("{pad}{k}:\n"));
                render_into(val, indent + 2, out);
            }
            Value::String(s) if s.contains('\n') => {
                out.push_str(&format!("{pad}{k}: |\n"));
                for line in s.lines() {
                    out.push_str(&format!("{pad}  {line}\n"));
                }
            }
            _ => out.push_str(&format!("{pad}{k}: {}\n", cell(val))),
        }
    }
}

/// Runs the tool on `args` (program name first); returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok(o) => {
            let body = if cli.global.json {
                format!(
                    "{}\n",
                    serde_json::to_string_pretty(&o.report).expect("serializable")
                )
            } else {
                let mut s = String::new();
                if matches!(cli.command, Command::Meta { .. }) {
                    s.push_str(&format!(
                        "Verdict {}.\n",
                        o.report["assumption"].as_str().unwrap_or_default()
                    ));
                }
                s.push_str(&o.text.clone().unwrap_or_else(|| render_text(&o.report)));
                s
            };
            let _ = out.write_all(body.as_bytes());
            o.code
        }
        Err(e) => {
            if cli.global.json {
                let v = json!({ "error": e.to_string() });
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("serializable"));
            }
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}
