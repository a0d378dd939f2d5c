use std::fmt::Write as _;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mvl_core::chain_algebra::{enumerate_conj, validate_conj, DEFAULT_ENUMERATION_CAP};
use mvl_core::entailment::{entails_with, Closure, EngineConfig, KnowledgeModule, MpRule};
use mvl_core::generator::{gen_both, gen_renamings, gen_tables, Candidate, Session};
use mvl_core::morphism::{is_morphism, is_quasi_morphism};
use mvl_core::translation::{check_premise_set, premise_sets, verify_bridge, Checks, SamplingConfig};
use mvl_core::{Algebra, Chain, ConjTable, Renaming};
use serde::de::DeserializeOwned;
use serde_json::{json, Value as Json};

use crate::docs::{self, from_json, AlgebraDoc, BridgeDoc, ChainDoc, ModuleDoc, RenamingDoc, SchemaError, SessionDoc};
use crate::views;
use crate::workspace::{bridge_parts, session_input, Files, Kind, Workspace, WorkspaceError};

#[derive(Debug, Parser)]
#[command(name = "mvl", version, about = "Finite many-valued logics: algebras, entailment and translations")]
pub struct Cli {
    /// Emit JSON instead of human-readable text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Workspace directory; references may name its entities.
    #[arg(long, global = true, env = "MVL_WORKSPACE")]
    pub workspace: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an algebra's conjunction table against T1-T5.
    Validate { algebra: PathBuf },
    /// List every conjunction table on an n-element chain.
    EnumerateTnorms {
        #[arg(short)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
    },
    /// Interval algebra of a chain: carrier, operations, sign classes, Hasse edges.
    Intervals { algebra: PathBuf },
    /// Ranked quasi-morphisms between two algebras.
    GenRenamings {
        source: PathBuf,
        target: PathBuf,
        #[arg(long)]
        initial: Option<PathBuf>,
        #[command(flatten)]
        list: ListArgs,
    },
    /// Ranked target tables making a renaming a quasi-morphism.
    GenTables {
        source: PathBuf,
        chain: PathBuf,
        renaming: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
        #[command(flatten)]
        list: ListArgs,
    },
    /// Ranked pairs of a target table and a renaming into it.
    GenBoth {
        source: PathBuf,
        chain: PathBuf,
        #[arg(long)]
        initial: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
        #[command(flatten)]
        list: ListArgs,
    },
    /// Check whether a renaming is a quasi-morphism.
    CheckQm { source: PathBuf, target: PathBuf, renaming: PathBuf },
    /// Closure of a knowledge module, or a derivation of one goal.
    Derive {
        module: PathBuf,
        /// Sentence such as "(p & !q -> r, [a1, 1])".
        #[arg(long)]
        goal: Option<String>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Translate a source sentence along a bridge.
    Translate { bridge: PathBuf, sentence: String },
    /// Check the map and weak conservative properties of a bridge.
    VerifyBridge {
        bridge: PathBuf,
        /// Enumerate every weight assignment instead of sampling large skeletons.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long, value_enum)]
        check: Option<CheckArg>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    #[command(subcommand)]
    Session(SessionCommand),
    #[command(subcommand)]
    Workspace(WorkspaceCommand),
    /// Serve the workspace over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Debug, Args)]
pub struct ListArgs {
    #[arg(long, default_value_t = 0)]
    pub offset: usize,
    #[arg(long, default_value_t = 20)]
    pub limit: usize,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// Use exact modus ponens instead of the interval product.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub max_arity: Option<usize>,
}

impl EngineArgs {
    fn config(&self) -> EngineConfig {
        EngineConfig { mp: if self.strict { MpRule::Strict } else { MpRule::Modified }, max_arity: self.max_arity }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CheckArg {
    Map,
    WeakConservative,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum SessionCommand {
    /// Create a session in the workspace.
    Start { request: PathBuf },
    /// A page of the current phase's candidates.
    Candidates {
        id: String,
        #[command(flatten)]
        list: ListArgs,
    },
    /// Pick a candidate by id, or `none` to decline them all.
    Select { id: String, candidate: String },
    /// Outcome of a closed session.
    Result { id: String },
    /// Run a whole session in memory.
    Run {
        request: PathBuf,
        /// Take choices from --pick instead of prompting.
        #[arg(long)]
        non_interactive: bool,
        /// `first`, `none`, or a candidate id; one per phase, the last repeating.
        #[arg(long, default_values_t = vec!["first".to_string()])]
        pick: Vec<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum WorkspaceCommand {
    /// Store a document; prints its id.
    Add {
        kind: String,
        file: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    List { kind: Option<String> },
    Get { reference: String },
    Rm { reference: String },
}

/// What a command produced: JSON for machines, text for people, and
/// whether the checked property held.
pub struct Outcome {
    pub json: Json,
    pub text: String,
    pub ok: bool,
}

impl Outcome {
    fn new(json: Json, text: String, ok: bool) -> Self {
        Outcome { json, text, ok }
    }

    fn json_only(json: Json, ok: bool) -> Self {
        let text = views::to_text(&json);
        Outcome { json, text, ok }
    }
}

/// Exit status: 0 when the property holds, 1 when it fails, 2 on a
/// structural error.
pub fn run(cli: Cli) -> i32 {
    let json = cli.json;
    match execute(cli) {
        Ok(o) => {
            if json {
                print!("{}", views::to_text(&o.json));
            } else {
                print!("{}", o.text);
                if !o.text.ends_with('\n') {
                    println!();
                }
            }
            if o.ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            if json {
                print!("{}", views::to_text(&error_json(&e)));
            }
            eprintln!("error: {e:#}");
            2
        }
    }
}

pub fn error_json(e: &anyhow::Error) -> Json {
    match e.downcast_ref::<SchemaError>() {
        Some(s) => json!({"error": {"kind": "schema", "pointer": s.pointer, "message": s.message}}),
        None => match e.downcast_ref::<WorkspaceError>() {
            Some(WorkspaceError::Schema(s)) => {
                json!({"error": {"kind": "schema", "pointer": s.pointer, "message": s.message}})
            }
            _ => json!({"error": {"kind": "error", "message": format!("{e:#}")}}),
        },
    }
}

struct Ctx {
    workspace: Option<Workspace>,
}

impl Ctx {
    fn files<'a>(&'a self, base: Option<&'a Path>) -> Files<'a> {
        Files { base, workspace: self.workspace.as_ref() }
    }

    fn workspace(&self) -> Result<&Workspace> {
        self.workspace.as_ref().context("this command needs --workspace")
    }

    /// Reads a document from a file, or from the workspace when `path` is an
    /// id or name there.
    fn load<T: DeserializeOwned>(&self, path: &Path) -> Result<(T, Option<PathBuf>)> {
        let (json, base) = match (&self.workspace, path.to_str()) {
            (Some(ws), Some(r)) if !path.exists() => (ws.get(r)?, None),
            _ => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                (docs::parse_text(&text)?, path.parent().map(Path::to_path_buf))
            }
        };
        let doc = from_json(&json).with_context(|| format!("in {}", path.display()))?;
        Ok((doc, base))
    }

    fn algebra(&self, path: &Path) -> Result<Algebra> {
        let (doc, _): (AlgebraDoc, _) = self.load(path)?;
        Ok(doc.algebra().with_context(|| format!("in {}", path.display()))?)
    }

    fn chain(&self, path: &Path) -> Result<(Chain, Option<ConjTable>)> {
        let (doc, _): (ChainDoc, _) = self.load(path)?;
        Ok(doc.parts().with_context(|| format!("in {}", path.display()))?)
    }

    fn renaming(&self, path: &Path, source: &Chain, target: &Chain) -> Result<Renaming> {
        let (doc, _): (RenamingDoc, _) = self.load(path)?;
        let f = doc.renaming(source, target).with_context(|| format!("in {}", path.display()))?;
        f.check_shape(source.len(), target.len())?;
        Ok(f)
    }

    fn module(&self, path: &Path) -> Result<KnowledgeModule> {
        let (doc, base): (ModuleDoc, _) = self.load(path)?;
        Ok(doc.module(&self.files(base.as_deref())).with_context(|| format!("in {}", path.display()))?)
    }
}

fn execute(cli: Cli) -> Result<Outcome> {
    let workspace = match (&cli.workspace, &cli.command) {
        (Some(p), _) => Some(Workspace::open(p)?),
        (None, Command::Session(SessionCommand::Run { .. })) => None,
        (None, Command::Session(_) | Command::Workspace(_) | Command::Serve { .. }) => {
            Some(Workspace::open(".mvl")?)
        }
        (None, _) => None,
    };
    let ctx = Ctx { workspace };
    match cli.command {
        Command::Validate { algebra } => validate(&ctx, &algebra),
        Command::EnumerateTnorms { n, cap } => enumerate(n, cap),
        Command::Intervals { algebra } => {
            let alg = ctx.algebra(&algebra)?;
            Ok(intervals_outcome(&alg))
        }
        Command::GenRenamings { source, target, initial, list } => {
            let (a, b) = (ctx.algebra(&source)?, ctx.algebra(&target)?);
            let initial = match initial {
                Some(p) => ctx.renaming(&p, a.chain(), b.chain())?,
                None => proportional(a.len(), b.len()),
            };
            Ok(candidates_outcome(&gen_renamings(&a, &b, &initial), &a, b.chain(), &list))
        }
        Command::GenTables { source, chain, renaming, cap, list } => {
            let a = ctx.algebra(&source)?;
            let (c, table) = ctx.chain(&chain)?;
            let f = ctx.renaming(&renaming, a.chain(), &c)?;
            let cands = gen_tables(&a, &c, &f, table.as_ref(), cap)?;
            Ok(candidates_outcome(&cands, &a, &c, &list))
        }
        Command::GenBoth { source, chain, initial, cap, list } => {
            let a = ctx.algebra(&source)?;
            let (c, table) = ctx.chain(&chain)?;
            let initial = match initial {
                Some(p) => ctx.renaming(&p, a.chain(), &c)?,
                None => proportional(a.len(), c.len()),
            };
            let cands = gen_both(&a, &c, &initial, table.as_ref(), cap)?;
            Ok(candidates_outcome(&cands, &a, &c, &list))
        }
        Command::CheckQm { source, target, renaming } => {
            let (a, b) = (ctx.algebra(&source)?, ctx.algebra(&target)?);
            let f = ctx.renaming(&renaming, a.chain(), b.chain())?;
            check_qm(&a, &b, &f)
        }
        Command::Derive { module, goal, engine } => {
            let km = ctx.module(&module)?;
            derive(&km, goal.as_deref(), engine.config())
        }
        Command::Translate { bridge, sentence } => {
            let (doc, base): (BridgeDoc, _) = ctx.load(&bridge)?;
            let parts = bridge_parts(&doc, &ctx.files(base.as_deref()))?;
            let s = docs::parse_sentence(&sentence, &parts.source.atoms, parts.source.algebra.chain())?;
            parts.source.check_sentence(&s)?;
            let t = parts.bridge.translate(&s)?;
            let json = json!({"source": views::sentence(&s, &parts.source), "translated": views::sentence(&t, &parts.target)});
            let text = format!(
                "{}\n  => {}\n",
                s.render(&parts.source.algebra, &parts.source.atoms),
                t.render(&parts.target.algebra, &parts.target.atoms)
            );
            Ok(Outcome::new(json, text, true))
        }
        Command::VerifyBridge { bridge, exhaustive, seed, samples, budget, check, engine } => {
            let (doc, base): (BridgeDoc, _) = ctx.load(&bridge)?;
            let parts = bridge_parts(&doc, &ctx.files(base.as_deref()))?;
            let budget = if exhaustive { usize::MAX } else { budget };
            let sampling = SamplingConfig { exhaustive_budget: budget, samples, seed };
            verify(&parts, sampling, check, engine.config())
        }
        Command::Session(cmd) => session(&ctx, cmd),
        Command::Workspace(cmd) => workspace_cmd(&ctx, cmd),
        Command::Serve { host, port } => {
            let ws = ctx.workspace.expect("opened above");
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::server::serve(ws, &host, port))?;
            Ok(Outcome::new(json!({}), String::new(), true))
        }
    }
}

/// Baseline for ranking when no initial renaming is given: the point map
/// spreading the source evenly over the target.
pub fn proportional(n: usize, m: usize) -> Renaming {
    let img = |i: usize| if n <= 1 { 0 } else { (2 * i * (m - 1) + (n - 1)) / (2 * (n - 1)) };
    Renaming::from_points(&(0..n).map(img).collect::<Vec<_>>())
}

fn validate(ctx: &Ctx, path: &Path) -> Result<Outcome> {
    let (doc, _): (AlgebraDoc, _) = ctx.load(path)?;
    let (chain, table) = doc.parts()?;
    let report = validate_conj(&chain, &table)?;
    let mut json = json!({"valid": report.passes(), "violations": report.violations});
    let mut text = String::new();
    if report.passes() {
        let alg = Algebra::new(chain.clone(), table)?;
        let neg: Vec<usize> = (0..alg.len()).map(|x| alg.neg(x)).collect();
        let partition = alg.sign_partition();
        let labels = |xs: &[usize]| xs.iter().map(|&x| chain.label(x)).collect::<Vec<_>>().join(", ");
        json["negation"] = json!(neg);
        json["sign_partition"] = serde_json::to_value(&partition)?;
        let _ = writeln!(text, "valid: T1-T5 hold");
        let pairs: Vec<String> = (0..alg.len()).filter(|&x| x <= neg[x]).map(|x| format!("{} <-> {}", chain.label(x), chain.label(neg[x]))).collect();
        let _ = writeln!(text, "negation: {}", pairs.join(", "));
        let _ = writeln!(text, "negative: {{{}}}", labels(&partition.negatives));
        let _ = writeln!(text, "fixed:    {{{}}}", labels(&partition.fixed));
        let _ = writeln!(text, "positive: {{{}}}", labels(&partition.positives));
    } else {
        for v in &report.violations {
            let w: Vec<&str> = v.witness.iter().map(|&x| chain.label(x)).collect();
            let _ = writeln!(text, "violates {} at ({})", v.axiom, w.join(", "));
        }
    }
    Ok(Outcome::new(json, text, report.passes()))
}

fn grid(chain: &Chain, t: &ConjTable) -> String {
    let width = chain.labels().iter().map(String::len).max().unwrap_or(1);
    let mut out = String::new();
    let _ = write!(out, "{:>width$} |", "T");
    for l in chain.labels() {
        let _ = write!(out, " {l:>width$}");
    }
    out.push('\n');
    for (i, row) in t.rows().iter().enumerate() {
        let _ = write!(out, "{:>width$} |", chain.label(i));
        for &v in row {
            let _ = write!(out, " {:>width$}", chain.label(v));
        }
        out.push('\n');
    }
    out
}

fn enumerate(n: usize, cap: usize) -> Result<Outcome> {
    if n < 2 {
        bail!("a chain needs at least two elements");
    }
    let tables: Vec<ConjTable> = enumerate_conj(n, cap)?.collect();
    let chain = Chain::standard(n, "a");
    let mut text = format!("{} conjunction tables on a {n}-element chain\n", tables.len());
    for (i, t) in tables.iter().enumerate() {
        let _ = write!(text, "\n#{i}\n{}", grid(&chain, t));
    }
    Ok(Outcome::new(json!({"n": n, "count": tables.len(), "tables": tables}), text, true))
}

fn intervals_outcome(alg: &Algebra) -> Outcome {
    let json = views::intervals(alg);
    let labels: Vec<String> = json["labels"].as_array().unwrap().iter().map(|l| l.as_str().unwrap().to_string()).collect();
    let class_of = |i: usize| {
        ["negative", "fixed", "positive", "indefinite"]
            .into_iter()
            .find(|c| json["sign_classes"][c].as_array().unwrap().iter().any(|x| x.as_u64() == Some(i as u64)))
            .unwrap_or("-")
    };
    let mut text = format!("{} intervals\n", labels.len());
    for (i, l) in labels.iter().enumerate() {
        let neg = json["neg"][i].as_u64().unwrap() as usize;
        let _ = writeln!(text, "  {l:<12} N* = {:<12} {}", labels[neg], class_of(i));
    }
    let _ = writeln!(text, "Hasse edges (lower < upper):");
    for e in json["hasse"].as_array().unwrap() {
        let (a, b) = (e[0].as_u64().unwrap() as usize, e[1].as_u64().unwrap() as usize);
        let _ = writeln!(text, "  {} < {}", labels[a], labels[b]);
    }
    Outcome::new(json, text, true)
}

fn render_images(f: &Renaming, target: &Chain) -> String {
    f.images()
        .iter()
        .map(|i| {
            if i.is_point() {
                target.label(i.lo()).to_string()
            } else {
                format!("[{},{}]", target.label(i.lo()), target.label(i.hi()))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn candidates_outcome(cands: &[Candidate], source: &Algebra, target: &Chain, list: &ListArgs) -> Outcome {
    let morphisms = cands.iter().filter(|c| c.metrics.morphism).count();
    let items: Vec<&Candidate> = cands.iter().skip(list.offset).take(list.limit).collect();
    let json = json!({"total": cands.len(), "morphism_count": morphisms, "offset": list.offset, "items": items});
    let mut text = format!("{} candidates, {morphisms} morphisms\n", cands.len());
    let header: Vec<&str> = source.chain().labels().iter().map(String::as_str).collect();
    let _ = writeln!(text, "{:>4} {:>5} {:>5} {:>5} {:>5}  images of {}", "id", "morph", "impr", "disp", "table", header.join(" "));
    for c in items {
        let m = &c.metrics;
        let td = m.table_distance.map_or("-".to_string(), |d| d.to_string());
        let flag = if m.morphism { "yes" } else { "no" };
        let _ = writeln!(
            text,
            "{:>4} {flag:>5} {:>5} {:>5} {td:>5}  {}",
            c.id,
            m.imprecision,
            m.displacement,
            render_images(&c.renaming, target)
        );
    }
    Outcome::new(json, text, !cands.is_empty())
}

fn check_qm(a: &Algebra, b: &Algebra, f: &Renaming) -> Result<Outcome> {
    let report = is_quasi_morphism(a, b, f)?;
    let morphism = is_morphism(a, b, f)?;
    let json = json!({"quasi_morphism": report.passes(), "morphism": morphism, "report": report});
    let mut text = String::new();
    let _ = writeln!(text, "quasi-morphism: {}", if report.passes() { "yes" } else { "no" });
    let _ = writeln!(text, "morphism:       {}", if morphism { "yes" } else { "no" });
    for v in &report.violations {
        let _ = writeln!(text, "  condition {}: {}", v.condition(), serde_json::to_string(v)?);
    }
    Ok(Outcome::new(json, text, report.passes()))
}

fn derive(km: &KnowledgeModule, goal: Option<&str>, cfg: EngineConfig) -> Result<Outcome> {
    match goal {
        Some(g) => {
            let s = docs::parse_sentence(g, &km.atoms, km.algebra.chain())?;
            let trace = entails_with(km, &s, cfg)?;
            let mut text = format!("{}: ", s.render(&km.algebra, &km.atoms));
            let json = match &trace {
                Some(t) => {
                    let _ = writeln!(text, "derivable");
                    for (i, st) in t.steps.iter().enumerate() {
                        let from = st.premises.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
                        let _ = writeln!(text, "  {i:>3}. {:<40} {} {from}", st.sentence.render(&km.algebra, &km.atoms), st.rule);
                    }
                    json!({"goal": views::sentence(&s, km), "derivable": true, "trace": views::trace(t, km)})
                }
                None => {
                    let _ = writeln!(text, "not derivable");
                    json!({"goal": views::sentence(&s, km), "derivable": false})
                }
            };
            Ok(Outcome::new(json, text, trace.is_some()))
        }
        None => {
            let closure = Closure::derive(&km.algebra, &km.sentences, cfg);
            let sentences = closure.sentences();
            let mut text = format!("{} minimal sentences\n", sentences.len());
            for s in &sentences {
                let _ = writeln!(text, "  {}", s.render(&km.algebra, &km.atoms));
            }
            if closure.mp_inconsistent() {
                let _ = writeln!(text, "warning: some modus ponens premises admit no consistent conclusion");
            }
            let json = json!({
                "sentences": sentences.iter().map(|s| views::sentence(s, km)).collect::<Vec<_>>(),
                "max_arity": closure.max_arity(),
                "arity_bound_hit": closure.arity_bound_hit(),
                "mp_inconsistent": closure.mp_inconsistent(),
            });
            Ok(Outcome::new(json, text, true))
        }
    }
}

fn verify(
    parts: &crate::workspace::BridgeParts,
    sampling: SamplingConfig,
    check: Option<CheckArg>,
    cfg: EngineConfig,
) -> Result<Outcome> {
    let checks = match check {
        Some(CheckArg::Map) => Checks::MAP,
        Some(CheckArg::WeakConservative) => Checks::WEAK_CONSERVATIVE,
        Some(CheckArg::Both) => Checks::BOTH,
        // The map property is only claimed for morphisms.
        None if parts.bridge.is_morphism() => Checks::BOTH,
        None => Checks::WEAK_CONSERVATIVE,
    };
    let gammas = premise_sets(parts.bridge.source().len(), sampling);
    let mut report = verify_bridge(&parts.bridge, &gammas, checks, cfg);
    if !parts.source.sentences.is_empty() {
        let own = check_premise_set(&parts.bridge, &parts.source.sentences, checks, cfg);
        report.premise_sets += own.premise_sets;
        report.sentences_checked += own.sentences_checked;
        report.failures.extend(own.failures);
    }
    // Generated premise sets use atoms 0..3 whatever the module declares.
    let mut atoms = parts.source.atoms.clone();
    for i in atoms.len()..3 {
        atoms.push(format!("x{i}"));
    }
    let failures: Vec<Json> = report
        .failures
        .iter()
        .take(20)
        .map(|f| {
            json!({
                "property": f.property,
                "gamma": f.gamma,
                "sentence": f.sentence,
                "detail": f.detail,
            })
        })
        .collect();
    let json = json!({
        "checks": {"map": checks.map, "weak_conservative": checks.weak_conservative},
        "morphism": parts.bridge.is_morphism(),
        "premise_sets": report.premise_sets,
        "sentences_checked": report.sentences_checked,
        "failure_count": report.failures.len(),
        "failures": failures,
    });
    let mut text = format!(
        "{} premise sets, {} sentences checked, {} failures\n",
        report.premise_sets,
        report.sentences_checked,
        report.failures.len()
    );
    for f in report.failures.iter().take(5) {
        let gamma: Vec<String> = f.gamma.iter().map(|s| s.render(parts.bridge.source(), &atoms)).collect();
        let e = f.sentence.render(parts.bridge.target(), &atoms);
        let _ = writeln!(text, "  {:?}: {e} from {{{}}}: {}", f.property, gamma.join(", "), f.detail);
    }
    Ok(Outcome::new(json, text, report.passes()))
}

fn parse_choice(s: &str) -> Result<Option<usize>> {
    match s {
        "none" | "nil" => Ok(None),
        _ => Ok(Some(s.parse().with_context(|| format!("`{s}` is not a candidate id or `none`"))?)),
    }
}

fn state_text(s: &Session) -> String {
    let mut text = format!("phase: {}\n", s.phase.name());
    if !s.phase.is_closed() {
        let m = s.candidates.iter().filter(|c| c.metrics.morphism).count();
        let _ = writeln!(text, "{} candidates, {m} morphisms", s.candidates.len());
    }
    text
}

fn result_outcome(s: &Session) -> Result<Outcome> {
    let Some(json) = views::session_result(s) else {
        bail!("session is still open in phase {}", s.phase.name());
    };
    let mut text = format!("phase: {}\n", s.phase.name());
    match &s.result {
        Some(a) => {
            let _ = writeln!(text, "shape: {}", serde_json::to_value(a.shape)?.as_str().unwrap_or("?"));
            let _ = writeln!(text, "renaming: {}", render_images(&a.renaming, a.target.chain()));
            let _ = write!(text, "target table:\n{}", grid(a.target.chain(), a.target.conj_table()));
        }
        None => {
            let _ = writeln!(text, "no result: every phase was declined");
        }
    }
    let ok = s.result.is_some();
    Ok(Outcome { json, text, ok })
}

fn session(ctx: &Ctx, cmd: SessionCommand) -> Result<Outcome> {
    match cmd {
        SessionCommand::Start { request } => {
            let (doc, base): (SessionDoc, _) = ctx.load(&request)?;
            let (id, s) = ctx.workspace()?.create_session(&doc, base.as_deref())?;
            Ok(Outcome::new(views::session_state(&id, &s), format!("session {id}\n{}", state_text(&s)), true))
        }
        SessionCommand::Candidates { id, list } => {
            let s = ctx.workspace()?.session(&id)?;
            let target = s.input.target_chain.clone();
            let mut o = candidates_outcome(&s.candidates, &s.input.source, &target, &list);
            o.json = views::page(&s.page(list.offset, list.limit));
            o.text = format!("phase: {}\n{}", s.phase.name(), o.text);
            Ok(o)
        }
        SessionCommand::Select { id, candidate } => {
            let s = ctx.workspace()?.select(&id, parse_choice(&candidate)?)?;
            Ok(Outcome::new(views::session_state(&id, &s), state_text(&s), true))
        }
        SessionCommand::Result { id } => result_outcome(&ctx.workspace()?.session(&id)?),
        SessionCommand::Run { request, non_interactive, pick } => {
            let (doc, base): (SessionDoc, _) = ctx.load(&request)?;
            let input = session_input(&doc, &ctx.files(base.as_deref()))?;
            let mut s = Session::start(input).map_err(|e| SchemaError::at("", e.to_string()))?;
            let mut step = 0;
            let stdin = std::io::stdin();
            let mut lines = stdin.lock().lines();
            while !s.phase.is_closed() {
                let choice = if non_interactive {
                    let p = pick.get(step).or(pick.last()).map(String::as_str).unwrap_or("first");
                    match p {
                        "first" => s.candidates.first().map(|c| c.id),
                        other => parse_choice(other)?,
                    }
                } else {
                    let target = s.input.target_chain.clone();
                    let list = ListArgs { offset: 0, limit: 20 };
                    eprint!("phase: {}\n{}", s.phase.name(), candidates_outcome(&s.candidates, &s.input.source, &target, &list).text);
                    eprint!("choose a candidate id or `none`: ");
                    let line = lines.next().context("input ended before the session closed")??;
                    parse_choice(line.trim())?
                };
                s.select(choice)?;
                step += 1;
            }
            result_outcome(&s)
        }
    }
}

fn workspace_cmd(ctx: &Ctx, cmd: WorkspaceCommand) -> Result<Outcome> {
    let ws = ctx.workspace()?;
    let kind = |k: &str| Kind::from_plural(k).with_context(|| format!("unknown kind `{k}`"));
    match cmd {
        WorkspaceCommand::Add { kind: k, file, name } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let doc = docs::parse_text(&text)?;
            let id = ws.add(kind(&k)?, &doc, name.as_deref(), file.parent())?;
            Ok(Outcome::new(json!({"id": id}), format!("{id}\n"), true))
        }
        WorkspaceCommand::List { kind: k } => {
            let kinds = match k {
                Some(k) => vec![kind(&k)?],
                None => Kind::ALL.to_vec(),
            };
            let names = ws.names()?;
            let mut items = vec![];
            let mut text = String::new();
            for k in kinds {
                for id in ws.list(k)? {
                    let name = names.iter().find(|(_, v)| **v == id).map(|(n, _)| n.clone());
                    let _ = writeln!(text, "{id} {}", name.as_deref().unwrap_or(""));
                    items.push(json!({"id": id, "name": name}));
                }
            }
            Ok(Outcome::new(json!({"items": items}), text, true))
        }
        WorkspaceCommand::Get { reference } => Ok(Outcome::json_only(ws.get(&reference)?, true)),
        WorkspaceCommand::Rm { reference } => {
            ws.delete(&reference)?;
            Ok(Outcome::new(json!({"deleted": reference}), format!("deleted {reference}\n"), true))
        }
    }
}
