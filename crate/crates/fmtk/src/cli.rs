//! Command-line front end.
//!
//! Exit codes: 0 = success / property holds / pass; 1 = property false,
//! counterexample found, or nothing found; 2 = usage or input error;
//! 3 = resource cap hit. All diagnostics go to stderr; machine-readable
//! output (`--output json`) is deterministic for identical inputs and caps,
//! independent of the worker count.

use crate::constructions::{self, ConstructionError, RunOpts};
use crate::formula::{parse_open, Formula};
use crate::hf::HfCaps;
use crate::logic::Structure;
use crate::projection::{in_sigma_projection, ProjectionError, SearchOpts};
use crate::semantics::{eval, upward_extension_probe, Assignment, SemanticsError};
use crate::textio;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

/// Environment variable overriding the default candidate cap for searches.
pub const SEARCH_CAP_ENV: &str = "FMTK_SEARCH_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Human,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "fmtk",
    about = "Finite model theory workbench: evaluate, search, project, collapse, verify",
    version
)]
pub struct Cli {
    /// Output format for results on stdout.
    #[arg(long, global = true, value_enum, default_value = "human")]
    pub output: OutputFormat,
    /// Worker threads for parallel sweeps (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Candidate cap for searches (also FMTK_SEARCH_CAP).
    #[arg(long, global = true)]
    pub search_cap: Option<u64>,
    /// Node cap for hereditarily finite set computations.
    #[arg(long, global = true)]
    pub node_cap: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct FormulaArg {
    /// Formula text in the concrete grammar.
    #[arg(long, conflicts_with = "formula_file")]
    pub formula: Option<String>,
    /// Path to a file holding the formula.
    #[arg(long)]
    pub formula_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a formula in a structure (exit 1 when it is false).
    Eval {
        /// Structure document.
        #[arg(long)]
        structure: PathBuf,
        #[command(flatten)]
        formula: FormulaArg,
        /// Assignments `var=element` for free first-order variables.
        #[arg(long = "assign", value_name = "VAR=ELEM")]
        assignments: Vec<String>,
    },
    /// List all models of a sentence within size bounds (exit 1 when none).
    Search {
        /// Vocabulary document.
        #[arg(long)]
        vocab: PathBuf,
        #[command(flatten)]
        formula: FormulaArg,
        /// Largest per-sort domain size.
        #[arg(long)]
        max_size: usize,
        /// Smallest per-sort domain size.
        #[arg(long, default_value_t = 0)]
        min_size: usize,
        /// One representative per isomorphism class.
        #[arg(long)]
        up_to_iso: bool,
        /// Stop after this many models.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Search for a witness expansion placing the structure in the spec's
    /// projective class (exit 1 when there is none).
    Project {
        /// Projection-spec document.
        #[arg(long)]
        spec: PathBuf,
        /// Structure document over the spec's base vocabulary.
        #[arg(long)]
        structure: PathBuf,
        /// Hard cap on witness size, required for unbounded specs.
        #[arg(long)]
        hard_cap: Option<u64>,
    },
    /// Run a registered construction's exhaustive verifier.
    Verify {
        /// Construction name (see `catalog`).
        name: String,
        /// Exhaustive sweep bound (default: the entry's declared scale).
        #[arg(long)]
        max_size: Option<usize>,
    },
    /// Mostowski-collapse a membership structure (exit 1 when the relation
    /// is not well-founded and extensional).
    Collapse {
        /// Structure document with one sort and one binary relation.
        #[arg(long)]
        structure: PathBuf,
    },
    /// Probe for a superstructure of a given total size satisfying the
    /// sentence (exit 1 when none exists).
    ProbeUlst {
        #[arg(long)]
        structure: PathBuf,
        #[command(flatten)]
        formula: FormulaArg,
        /// Total size of the wanted superstructure.
        #[arg(long)]
        target: usize,
        /// Upper bound on the target (refuses silent blowup).
        #[arg(long, default_value_t = 12)]
        cap: usize,
    },
    /// List the registered constructions.
    Catalog,
}

// ---------------------------------------------------------------------------
// machine-readable reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub formula: String,
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchReport {
    pub count: usize,
    pub truncated: bool,
    /// Structure documents, in canonical enumeration order.
    pub models: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectReport {
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapseReport {
    /// Atom name paired with the set it collapses to, in brace notation.
    pub mapping: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub target: usize,
    pub witness: Option<String>,
}

struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

impl From<SemanticsError> for Failure {
    fn from(e: SemanticsError) -> Self {
        let code = match &e {
            SemanticsError::ResourceCap(_) => EXIT_RESOURCE,
            _ => EXIT_USAGE,
        };
        fail(code, e.to_string())
    }
}

impl From<ProjectionError> for Failure {
    fn from(e: ProjectionError) -> Self {
        let code = match &e {
            ProjectionError::ResourceCap(_) => EXIT_RESOURCE,
            _ => EXIT_USAGE,
        };
        fail(code, e.to_string())
    }
}

impl From<ConstructionError> for Failure {
    fn from(e: ConstructionError) -> Self {
        let code = match &e {
            ConstructionError::ResourceCap(_) => EXIT_RESOURCE,
            _ => EXIT_USAGE,
        };
        fail(code, e.to_string())
    }
}

impl From<textio::TextError> for Failure {
    fn from(e: textio::TextError) -> Self {
        fail(EXIT_USAGE, e.to_string())
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))
}

fn load_structure(path: &Path) -> Result<Structure, Failure> {
    Ok(textio::parse_structure(&read_file(path)?)?)
}

fn formula_text(arg: &FormulaArg) -> Result<String, Failure> {
    match (&arg.formula, &arg.formula_file) {
        (Some(t), None) => Ok(t.clone()),
        (None, Some(p)) => Ok(read_file(p)?.trim().to_string()),
        _ => Err(fail(
            EXIT_USAGE,
            "supply exactly one of --formula / --formula-file",
        )),
    }
}

fn parse_against(
    text: &str,
    vocab: &crate::logic::Vocabulary,
) -> Result<(Formula, BTreeMap<String, usize>), Failure> {
    parse_open(text, vocab).map_err(|e| fail(EXIT_USAGE, e.to_string()))
}

fn emit<T: Serialize>(output: OutputFormat, report: &T, human: String) {
    match output {
        OutputFormat::Human => println!("{human}"),
        OutputFormat::Json => {
            println!(
                "{}",
                serde_json::to_string(report).expect("serializable report")
            )
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be positive");
            return EXIT_USAGE;
        }
        // ignore the error when a global pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let caps = {
        let mut caps = HfCaps::default();
        if let Some(n) = cli.node_cap {
            if n == 0 {
                eprintln!("error: --node-cap must be positive");
                return EXIT_USAGE;
            }
            caps.max_nodes = n;
        }
        caps
    };
    let search_cap = cli
        .search_cap
        .or_else(|| {
            std::env::var(SEARCH_CAP_ENV)
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(SearchOpts::default().candidate_cap);
    if search_cap == 0 {
        eprintln!("error: the search cap must be positive");
        return EXIT_USAGE;
    }
    let opts = RunOpts {
        hf_caps: caps,
        search: SearchOpts {
            hard_cap: None,
            candidate_cap: search_cap,
        },
    };
    match dispatch(cli.command, cli.output, &opts) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, output: OutputFormat, opts: &RunOpts) -> Result<i32, Failure> {
    match command {
        Command::Eval {
            structure,
            formula,
            assignments,
        } => {
            let s = load_structure(&structure)?;
            let text = formula_text(&formula)?;
            let (phi, free) = parse_against(&text, s.vocabulary())?;
            let mut alpha = Assignment::new();
            let mut assigned: BTreeMap<String, String> = BTreeMap::new();
            for a in &assignments {
                let (var, elem) = a.split_once('=').ok_or_else(|| {
                    fail(EXIT_USAGE, format!("bad --assign `{a}` (use var=element)"))
                })?;
                assigned.insert(var.trim().to_string(), elem.trim().to_string());
            }
            for (var, sort) in &free {
                let elem_name = assigned.remove(var).ok_or_else(|| {
                    fail(
                        EXIT_USAGE,
                        format!("free variable `{var}` needs --assign {var}=ELEM"),
                    )
                })?;
                let elem = s.element_index(*sort, &elem_name).ok_or_else(|| {
                    fail(
                        EXIT_USAGE,
                        format!(
                            "`{elem_name}` is not an element of sort {}",
                            s.vocabulary().sorts[*sort]
                        ),
                    )
                })?;
                alpha = alpha.bind_elem(var, *sort, elem);
            }
            if let Some(extra) = assigned.keys().next() {
                return Err(fail(
                    EXIT_USAGE,
                    format!("`{extra}` is not a free variable"),
                ));
            }
            let value = eval(&phi, &s, &alpha)?;
            let report = EvalReport {
                formula: text,
                value,
            };
            emit(output, &report, format!("{value}"));
            Ok(if value { EXIT_PASS } else { EXIT_FALSE })
        }
        Command::Search {
            vocab,
            formula,
            max_size,
            min_size,
            up_to_iso,
            limit,
        } => {
            let v = Arc::new(textio::parse_vocabulary(&read_file(&vocab)?)?);
            let text = formula_text(&formula)?;
            let (phi, free) = parse_against(&text, &v)?;
            if !free.is_empty() {
                return Err(fail(
                    EXIT_USAGE,
                    "search needs a sentence (no free variables)",
                ));
            }
            if min_size > max_size {
                return Err(fail(EXIT_USAGE, "--min-size exceeds --max-size"));
            }
            let ranges: Vec<(usize, usize)> = vec![(min_size, max_size); v.sorts.len()];
            let models = crate::semantics::find_models(
                &phi,
                &v,
                &ranges,
                up_to_iso,
                opts.search.candidate_cap as usize,
            )?;
            let total = models.len();
            let kept: Vec<String> = models
                .iter()
                .take(limit.unwrap_or(usize::MAX))
                .map(|m| m.to_string())
                .collect();
            let report = SearchReport {
                count: total,
                truncated: kept.len() < total,
                models: kept,
            };
            let mut human = format!("{total} model(s)");
            for m in &report.models {
                human.push_str("\n---\n");
                human.push_str(m.trim_end());
            }
            emit(output, &report, human);
            Ok(if total > 0 { EXIT_PASS } else { EXIT_FALSE })
        }
        Command::Project {
            spec,
            structure,
            hard_cap,
        } => {
            let text = read_file(&spec)?;
            let dir = spec.parent().unwrap_or(Path::new(".")).to_path_buf();
            let spec = textio::parse_projection_spec(&text, &dir)?;
            let s = load_structure(&structure)?;
            let search = SearchOpts {
                hard_cap,
                ..opts.search
            };
            let witness = in_sigma_projection(&s, &spec, &search)?;
            let report = ProjectReport {
                witness: witness.as_ref().map(|w| w.to_string()),
            };
            let human = match &report.witness {
                Some(w) => format!("witness found:\n{}", w.trim_end()),
                None => "no witness within the bound".to_string(),
            };
            emit(output, &report, human);
            Ok(if report.witness.is_some() {
                EXIT_PASS
            } else {
                EXIT_FALSE
            })
        }
        Command::Verify { name, max_size } => {
            let scale = match max_size {
                Some(n) => n,
                None => constructions::registry()
                    .iter()
                    .find(|c| c.name == name)
                    .map(|c| c.default_scale)
                    .ok_or_else(|| fail(EXIT_USAGE, format!("unknown construction `{name}`")))?,
            };
            let report = constructions::verify(&name, scale, opts)?;
            let human = match &report.outcome {
                constructions::Outcome::Pass => {
                    format!("{}: checked {}, pass", report.name, report.checked)
                }
                constructions::Outcome::Counterexample { description } => format!(
                    "{}: checked {}, counterexample: {}",
                    report.name, report.checked, description
                ),
            };
            let mut human = human;
            for note in &report.notes {
                human.push_str(&format!("\nnote: {note}"));
            }
            emit(output, &report, human);
            Ok(if report.passed() {
                EXIT_PASS
            } else {
                EXIT_FALSE
            })
        }
        Command::Collapse { structure } => {
            let s = load_structure(&structure)?;
            let v = s.vocabulary();
            let rel = match (v.sorts.len(), v.relations.len()) {
                (1, 1) if v.relations[0].args.len() == 2 => 0,
                _ => {
                    return Err(fail(
                        EXIT_USAGE,
                        "collapse expects one sort and one binary relation",
                    ))
                }
            };
            let n = s.sort_size(0);
            let edges: Vec<(usize, usize)> = s
                .rel(rel)
                .tuples()
                .into_iter()
                .map(|t| (t[0], t[1]))
                .collect();
            match crate::hf::mostowski_collapse(n, &edges) {
                Ok(images) => {
                    let mapping: Vec<(String, String)> = images
                        .iter()
                        .enumerate()
                        .map(|(i, set)| (s.element_names(0)[i].clone(), set.to_string()))
                        .collect();
                    let report = CollapseReport { mapping };
                    let human = report
                        .mapping
                        .iter()
                        .map(|(a, t)| format!("{a} -> {t}"))
                        .collect::<Vec<_>>()
                        .join("\n");
                    emit(output, &report, human);
                    Ok(EXIT_PASS)
                }
                Err(e) => {
                    eprintln!("not collapsible: {e}");
                    Ok(EXIT_FALSE)
                }
            }
        }
        Command::ProbeUlst {
            structure,
            formula,
            target,
            cap,
        } => {
            let s = load_structure(&structure)?;
            let text = formula_text(&formula)?;
            let (phi, free) = parse_against(&text, s.vocabulary())?;
            if !free.is_empty() {
                return Err(fail(
                    EXIT_USAGE,
                    "the probe needs a sentence (no free variables)",
                ));
            }
            if target < s.total_size() {
                return Err(fail(
                    EXIT_USAGE,
                    format!(
                        "target {target} is smaller than the structure ({})",
                        s.total_size()
                    ),
                ));
            }
            let witness = upward_extension_probe(&phi, &s, target, cap)?;
            let report = ProbeReport {
                target,
                witness: witness.as_ref().map(|w| w.to_string()),
            };
            let human = match &report.witness {
                Some(w) => format!("superstructure of size {target} found:\n{}", w.trim_end()),
                None => format!("no superstructure of size {target} satisfies the sentence"),
            };
            emit(output, &report, human);
            Ok(if report.witness.is_some() {
                EXIT_PASS
            } else {
                EXIT_FALSE
            })
        }
        Command::Catalog => {
            let catalog = constructions::list_constructions();
            let human = catalog
                .iter()
                .map(|c| {
                    format!(
                        "{:<18} scale {:<2} {} — {}",
                        c.name, c.default_scale, c.origin, c.claim
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
            emit(output, &catalog, human);
            Ok(EXIT_PASS)
        }
    }
}
