//! Command-line surface: evaluation, translation, bounded satisfiability,
//! the ∃*∀* decision procedure, validity refutation, atom property probes,
//! and the tiling-reduction generators.
//!
//! Exit codes: 0 success / semantically true; 1 semantically false, UNSAT or
//! UNKNOWN; 2 usage error; 3 resource limit exceeded.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use teamlog::atoms::{parse_atom_def, probe_properties, AtomRegistry};
use teamlog::model::{enumerate_structures, enumerate_teams, Structure, Team};
use teamlog::semantics::{team_satisfies, EvalError, Limits};
use teamlog::solve::{decide_ea, refute_validity, sat_bounded, Refutation, SolveError, Verdict};
use teamlog::syntax::{parse_formula, render_formula, Formula, Layer, Variable, Vocabulary};
use teamlog::tiling::{
    brute_force_tilable, is_gridlike, is_striped_gridlike, phi_non_grid, phi_non_t_tiling, phi_t,
    TileSet, TilingResult,
};
use teamlog::translate::{holds_via_translation, translate_formula, translate_sentence};

#[derive(Parser)]
#[command(name = "teamlog", version, about = "Workbench for logics with team semantics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Emit exactly one JSON document on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for enumeration sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Evaluator resource ceiling (total team cells visited per query).
    #[arg(long, global = true)]
    limit_cells: Option<u64>,
    /// Seed for sampled sweeps (reserved; sweeps are exhaustive by default).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Register a user-defined generalized atom from a JSON file (repeatable).
    #[arg(long, global = true)]
    atom_def: Vec<PathBuf>,
}

#[derive(Args)]
struct VocabArg {
    /// Relation symbols as `Name:arity,...`, e.g. `H:2,P:1`.
    #[arg(long, default_value = "")]
    vocab: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a team-layer formula on a structure and team.
    Check {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        team: PathBuf,
        formula: String,
        /// Print the satisfying splits and choice functions found.
        #[arg(long)]
        trace: bool,
    },
    /// Translate a team-layer formula into Σ¹₁(FOC^k).
    Translate {
        formula: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Differentially verify the translation on all structures/teams up
        /// to this domain size.
        #[arg(long)]
        verify: Option<usize>,
        #[command(flatten)]
        vocab: VocabArg,
    },
    /// Bounded satisfiability search.
    Sat {
        formula: String,
        #[arg(long, default_value_t = 3)]
        max_size: usize,
        #[command(flatten)]
        vocab: VocabArg,
    },
    /// Complete decision procedure for ∃*∀* sentences over closed atoms.
    DecideEa {
        formula: String,
        #[command(flatten)]
        vocab: VocabArg,
    },
    /// Search for a countermodel up to a size bound (never claims validity).
    RefuteValidity {
        formula: String,
        #[arg(long, default_value_t = 3)]
        max_size: usize,
        #[command(flatten)]
        vocab: VocabArg,
    },
    /// Probe closure properties of a registered or user-defined atom.
    AtomProps {
        /// Name of a registered atom (e.g. `dep`, `inc`).
        name: Option<String>,
        /// JSON definition file of a user atom to probe instead.
        #[arg(long)]
        def: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        max_size: usize,
    },
    /// Tiling-reduction generators and oracles.
    Tiling {
        #[command(subcommand)]
        sub: TilingCmd,
    },
}

#[derive(Subcommand)]
enum TilingCmd {
    /// Emit the tiling-violation sentence φ_T for a tile set.
    GenPhiT {
        #[arg(long)]
        tiles: PathBuf,
    },
    /// Emit φ_non-grid (or one named component).
    GenPhiNonGrid {
        #[arg(long)]
        component: Option<String>,
    },
    /// Emit the reduction sentence φ_non-T-tiling = φ_non-grid ∨ φ_T.
    GenReduction {
        #[arg(long)]
        tiles: PathBuf,
    },
    /// Check the gridlike / striped-gridlike conditions of a structure.
    CheckGridlike {
        #[arg(long)]
        structure: PathBuf,
    },
    /// Decide T-tilability of a structure by brute force.
    Tilable {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        tiles: PathBuf,
    },
}

/// A finished command: exit code plus JSON and plain renderings.
struct Outcome {
    code: u8,
    payload: serde_json::Value,
    plain: String,
}

impl Outcome {
    fn new(code: u8, payload: serde_json::Value, plain: impl Into<String>) -> Outcome {
        Outcome { code, payload, plain: plain.into() }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Resource(String),
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> CliError {
        match e {
            EvalError::ResourceLimit => CliError::Resource(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> CliError {
        match e {
            SolveError::Eval(inner) => inner.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let limits = Limits { max_cells: cli.limit_cells };
    let mut registry = AtomRegistry::with_builtins();
    for path in &cli.atom_def {
        match load_atom_def(path) {
            Ok(def) => {
                if let Err(e) = registry.register(def) {
                    return usage_exit(cli.json, &e.to_string());
                }
            }
            Err(e) => return usage_exit(cli.json, &e),
        }
    }
    match run(&cli, &registry, limits) {
        Ok(out) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&out.payload).unwrap());
            } else {
                println!("{}", out.plain);
            }
            ExitCode::from(out.code)
        }
        Err(CliError::Usage(msg)) => usage_exit(cli.json, &msg),
        Err(CliError::Resource(msg)) => {
            if cli.json {
                println!("{}", json!({"error": msg, "kind": "resource-limit"}));
            } else {
                eprintln!("resource limit: {msg}");
            }
            ExitCode::from(3)
        }
    }
}

fn usage_exit(json: bool, msg: &str) -> ExitCode {
    if json {
        println!("{}", json!({"error": msg, "kind": "usage"}));
    } else {
        eprintln!("error: {msg}");
    }
    ExitCode::from(2)
}

fn load_json(path: &Path) -> Result<serde_json::Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid JSON in {}: {e}", path.display())))
}

fn load_atom_def(path: &Path) -> Result<teamlog::atoms::GeneralizedAtomDef, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("invalid JSON in {}: {e}", path.display()))?;
    parse_atom_def(&value).map_err(|e| e.to_string())
}

fn parse_vocab(spec: &str) -> Result<Vocabulary, CliError> {
    let mut vocab = Vocabulary::new();
    for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
        let (name, arity) = part
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("bad vocabulary entry `{part}`")))?;
        let arity: usize = arity
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad arity in `{part}`")))?;
        vocab
            .add(name.trim(), arity)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(vocab)
}

fn parse_team_formula(
    text: &str,
    vocab: &Vocabulary,
    registry: &AtomRegistry,
) -> Result<Formula, CliError> {
    parse_formula(text, vocab, Layer::Team, &registry.signatures())
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: &Cli, registry: &AtomRegistry, limits: Limits) -> Result<Outcome, CliError> {
    match &cli.cmd {
        Cmd::Check { structure, team, formula, trace } => {
            let s = Structure::from_json(&load_json(structure)?)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let t = Team::from_json(&load_json(team)?, &s)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let f = parse_team_formula(formula, s.vocab(), registry)?;
            let sat = team_satisfies(&s, &t, &f, registry, limits)?;
            let mut plain = format!("satisfied: {sat}");
            let mut trace_lines = Vec::new();
            if *trace && sat {
                trace_witnesses(&s, &t, &f, registry, limits, 0, &mut trace_lines)?;
                plain.push('\n');
                plain.push_str(&trace_lines.join("\n"));
            }
            Ok(Outcome::new(
                u8::from(!sat),
                json!({"satisfied": sat, "trace": trace_lines}),
                plain,
            ))
        }
        Cmd::Translate { formula, k, verify, vocab } => {
            let vocab = parse_vocab(&vocab.vocab)?;
            let f = parse_team_formula(formula, &vocab, registry)?;
            let out = translate_formula(&f, *k, registry)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let sentence = if teamlog::syntax::free_variables(&f).is_empty() {
                Some(
                    translate_sentence(&f, &vocab, *k, registry)
                        .map_err(|e| CliError::Usage(e.to_string()))?,
                )
            } else {
                None
            };
            if let Some(n) = verify {
                if let Some((s, team)) = verify_translation(&f, &vocab, &out, registry, limits, *n)? {
                    let msg = "translation differs from direct evaluation";
                    return Ok(Outcome::new(
                        1,
                        json!({
                            "verified": false,
                            "counterexample": {
                                "structure": s.to_json(),
                                "team": team.to_json(&s),
                            },
                        }),
                        format!("{msg}\nstructure: {}\nteam: {}", s.to_json(), team.to_json(&s)),
                    ));
                }
            }
            let rendered = render_formula(&out.formula());
            let mut payload = json!({
                "formula": rendered,
                "team_rel": out.team_rel,
                "k": out.k,
                "vars": out.vars.iter().map(|v| v.0.clone()).collect::<Vec<_>>(),
            });
            let mut plain = rendered.clone();
            if let Some(sentence) = sentence {
                let st = render_formula(&sentence);
                payload["sentence"] = json!(st);
                plain.push_str("\nsentence: ");
                plain.push_str(&st);
            }
            if verify.is_some() {
                payload["verified"] = json!(true);
            }
            Ok(Outcome::new(0, payload, plain))
        }
        Cmd::Sat { formula, max_size, vocab } => {
            let vocab = parse_vocab(&vocab.vocab)?;
            let f = parse_team_formula(formula, &vocab, registry)?;
            let r = sat_bounded(&f, &vocab, registry, *max_size, limits, cli.jobs)?;
            let code = u8::from(!r.is_sat());
            let plain = match &r.verdict {
                Verdict::Sat(m) => format!("SAT\n{}", m.to_json()),
                Verdict::UnsatUpTo(b) => format!("UNSAT up to size {b}"),
                Verdict::Unsat => "UNSAT".to_string(),
                Verdict::Unknown(reason) => format!("UNKNOWN: {reason}"),
            };
            Ok(Outcome::new(code, r.to_json(), plain))
        }
        Cmd::DecideEa { formula, vocab } => {
            let vocab = parse_vocab(&vocab.vocab)?;
            let f = parse_team_formula(formula, &vocab, registry)?;
            let d = decide_ea(&f, &vocab, registry, limits, cli.jobs)?;
            let code = u8::from(!d.result.is_sat());
            let plain = match &d.result.verdict {
                Verdict::Sat(m) => format!("SAT (bound {})\n{}", d.bound, m.to_json()),
                Verdict::Unsat => format!("UNSAT (complete, bound {})", d.bound),
                Verdict::Unknown(reason) => format!("UNKNOWN: {reason}"),
                Verdict::UnsatUpTo(b) => format!("UNSAT up to size {b}"),
            };
            Ok(Outcome::new(code, d.to_json(), plain))
        }
        Cmd::RefuteValidity { formula, max_size, vocab } => {
            let vocab = parse_vocab(&vocab.vocab)?;
            let f = parse_team_formula(formula, &vocab, registry)?;
            let r = refute_validity(&f, &vocab, registry, *max_size, limits, cli.jobs)?;
            match r {
                Refutation::Counterexample(ref m) => Ok(Outcome::new(
                    1,
                    r.to_json(),
                    format!("COUNTEREXAMPLE\n{}", m.to_json()),
                )),
                Refutation::NoCounterexampleUpTo(b) => Ok(Outcome::new(
                    0,
                    r.to_json(),
                    format!("no counterexample up to size {b}"),
                )),
            }
        }
        Cmd::AtomProps { name, def, max_size } => {
            let def = match (name, def) {
                (Some(n), None) => registry
                    .get(n)
                    .cloned()
                    .ok_or_else(|| CliError::Usage(format!("unknown atom `{n}`")))?,
                (None, Some(path)) => load_atom_def(path).map_err(CliError::Usage)?,
                _ => {
                    return Err(CliError::Usage(
                        "give exactly one of an atom name or --def FILE".into(),
                    ))
                }
            };
            let report = probe_properties(&def, *max_size)?;
            let payload = serde_json::to_value(&report).unwrap();
            let plain = format!(
                "atom {} (max size {}):\n  downward closed: {:?}\n  substructure closed: {:?}\n  universe independent: {:?}",
                report.atom,
                report.max_size,
                report.downward_closed,
                report.substructure_closed,
                report.universe_independent
            );
            Ok(Outcome::new(0, payload, plain))
        }
        Cmd::Tiling { sub } => run_tiling(sub, registry, limits),
    }
}

fn run_tiling(sub: &TilingCmd, _registry: &AtomRegistry, _limits: Limits) -> Result<Outcome, CliError> {
    match sub {
        TilingCmd::GenPhiT { tiles } => {
            let ts = TileSet::from_json(&load_json(tiles)?)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let rendered = render_formula(&phi_t(&ts));
            Ok(Outcome::new(0, json!({"formula": rendered}), rendered))
        }
        TilingCmd::GenPhiNonGrid { component } => {
            let f = match component {
                None => phi_non_grid(),
                Some(name) => teamlog::tiling::phi_components()
                    .remove(name)
                    .ok_or_else(|| CliError::Usage(format!("unknown component `{name}`")))?,
            };
            let rendered = render_formula(&f);
            Ok(Outcome::new(0, json!({"formula": rendered}), rendered))
        }
        TilingCmd::GenReduction { tiles } => {
            let ts = TileSet::from_json(&load_json(tiles)?)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let rendered = render_formula(&phi_non_t_tiling(&ts));
            Ok(Outcome::new(0, json!({"formula": rendered}), rendered))
        }
        TilingCmd::CheckGridlike { structure } => {
            let s = Structure::from_json(&load_json(structure)?)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let grid = is_gridlike(&s);
            let striped_mode =
                ["C", "U", "P", "Q"].iter().all(|r| s.vocab().arity(r) == Some(1));
            let striped = striped_mode.then(|| is_striped_gridlike(&s));
            let holds = match &striped {
                Some(r) => r.is_ok(),
                None => grid.is_ok(),
            };
            let payload = json!({
                "gridlike": grid.is_ok(),
                "grid_violation": grid.as_ref().err().map(|w| serde_json::to_value(w).unwrap()),
                "striped_gridlike": striped.as_ref().map(|r| r.is_ok()),
                "striped_violation": striped
                    .as_ref()
                    .and_then(|r| r.as_ref().err())
                    .map(|w| serde_json::to_value(w).unwrap()),
            });
            let plain = format!(
                "gridlike: {:?}\nstriped-gridlike: {}",
                grid.is_ok(),
                striped.as_ref().map_or("n/a".to_string(), |r| format!("{:?}", r.is_ok()))
            );
            Ok(Outcome::new(u8::from(!holds), payload, plain))
        }
        TilingCmd::Tilable { structure, tiles } => {
            let s = Structure::from_json(&load_json(structure)?)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let ts = TileSet::from_json(&load_json(tiles)?)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            match brute_force_tilable(&s, &ts).map_err(|e| CliError::Usage(e.to_string()))? {
                TilingResult::Tilable(e) => Ok(Outcome::new(
                    0,
                    json!({"tilable": true, "expansion": e.to_json()}),
                    format!("TILABLE\n{}", e.to_json()),
                )),
                TilingResult::NotTilable => {
                    Ok(Outcome::new(1, json!({"tilable": false}), "NOT TILABLE"))
                }
            }
        }
    }
}

/// Differential check of the translation on every structure over the
/// formula's vocabulary and every team over its variables, up to `max_size`
/// elements; returns the first disagreeing pair.
fn verify_translation(
    f: &Formula,
    vocab: &Vocabulary,
    out: &teamlog::translate::TranslationOutput,
    registry: &AtomRegistry,
    limits: Limits,
    max_size: usize,
) -> Result<Option<(Structure, Team)>, CliError> {
    let reduct = vocab.restrict_to(&f.relation_symbols());
    let team_vars: Vec<Variable> = f.all_variables().into_iter().collect();
    for size in 1..=max_size {
        for s in enumerate_structures(&reduct, size) {
            for team in enumerate_teams(&s, &team_vars) {
                let direct = team_satisfies(&s, &team, f, registry, limits)?;
                let via = holds_via_translation(&s, &team, out)?;
                if direct != via {
                    return Ok(Some((s, team)));
                }
            }
        }
    }
    Ok(None)
}

/// Prints, for a satisfied formula, one witnessing lax split per disjunction
/// and one witnessing extension per quantifier, recursively.
fn trace_witnesses(
    s: &Structure,
    team: &Team,
    f: &Formula,
    registry: &AtomRegistry,
    limits: Limits,
    depth: usize,
    out: &mut Vec<String>,
) -> Result<(), CliError> {
    let pad = "  ".repeat(depth);
    let rows = |t: &Team| serde_json::to_string(&t.to_json(s)["rows"]).unwrap();
    match f {
        Formula::And(a, b) => {
            out.push(format!("{pad}& both conjuncts on rows {}", rows(team)));
            trace_witnesses(s, team, a, registry, limits, depth + 1, out)?;
            trace_witnesses(s, team, b, registry, limits, depth + 1, out)?;
        }
        Formula::Or(a, b) => {
            // First satisfying cover in trit order (0 → left, 1 → right,
            // 2 → both).
            let all: Vec<_> = team.rows().cloned().collect();
            let n = all.len();
            let mut trits = vec![0u8; n];
            loop {
                let mut left = Team::empty(team.vars().to_vec());
                let mut right = Team::empty(team.vars().to_vec());
                for (row, &t) in all.iter().zip(&trits) {
                    if t != 1 {
                        left.insert_row(row.clone());
                    }
                    if t != 0 {
                        right.insert_row(row.clone());
                    }
                }
                if team_satisfies(s, &left, a, registry, limits)?
                    && team_satisfies(s, &right, b, registry, limits)?
                {
                    out.push(format!(
                        "{pad}| split: left {} right {}",
                        rows(&left),
                        rows(&right)
                    ));
                    trace_witnesses(s, &left, a, registry, limits, depth + 1, out)?;
                    trace_witnesses(s, &right, b, registry, limits, depth + 1, out)?;
                    return Ok(());
                }
                let mut i = 0;
                while i < n && trits[i] == 2 {
                    trits[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
                trits[i] += 1;
            }
            out.push(format!("{pad}| no satisfying split (unexpected)"));
        }
        Formula::Exists(x, body) => {
            // First satisfying choice of per-row value sets, smallest sets
            // first.
            let all: Vec<_> = team.rows().cloned().collect();
            let size = s.size();
            let masks: Vec<u64> = (1..(1u64 << size)).collect();
            let n = all.len();
            let mut pick = vec![0usize; n];
            loop {
                let mut choice: BTreeMap<_, _> = BTreeMap::new();
                for (row, &p) in all.iter().zip(&pick) {
                    let mut assignment = BTreeMap::new();
                    for (var, &val) in team.vars().iter().zip(row) {
                        assignment.insert(var.clone(), val);
                    }
                    let values: std::collections::BTreeSet<usize> =
                        (0..size).filter(|&e| masks[p] >> e & 1 == 1).collect();
                    choice.insert(assignment, values);
                }
                let ext = team
                    .extend_function(&choice, x)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                if team_satisfies(s, &ext, body, registry, limits)? {
                    out.push(format!("{pad}E {}: extension {}", x.0, rows(&ext)));
                    trace_witnesses(s, &ext, body, registry, limits, depth + 1, out)?;
                    return Ok(());
                }
                let mut i = 0;
                while i < n && pick[i] + 1 == masks.len() {
                    pick[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
                pick[i] += 1;
                if team.is_empty() {
                    break;
                }
            }
            if team.is_empty() {
                out.push(format!("{pad}E {}: empty team, trivial", x.0));
                trace_witnesses(s, team, body, registry, limits, depth + 1, out)?;
            } else {
                out.push(format!("{pad}E {}: no satisfying choice (unexpected)", x.0));
            }
        }
        Formula::Forall(x, body) => {
            let ext = team.extend_universal(s, x);
            out.push(format!("{pad}A {}: extension {}", x.0, rows(&ext)));
            trace_witnesses(s, &ext, body, registry, limits, depth + 1, out)?;
        }
        leaf => {
            out.push(format!("{pad}{} holds on rows {}", render_formula(leaf), rows(team)));
        }
    }
    Ok(())
}
