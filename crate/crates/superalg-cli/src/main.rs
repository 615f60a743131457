//! `superalg` — batch verification of the superalgebra classification.
//!
//! Every subcommand prints one `ITEM <id> PASS|FAIL <detail>` line per check
//! on standard output, sorted by id, and a summary on standard error. The
//! exit code is 0 when every item passes, 1 when some item fails and 2 on
//! usage, parse or resolution errors.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use superalg_core::algebra::SuperAlgebra;
use superalg_core::cocycle::{act, check_decomposition, extend, z2_check};
use superalg_core::degeneration::{check_certificate, degeneration_dot, inconclusive_targets, verify_arrow};
use superalg_core::identity::IdentityLibrary;
use superalg_core::morphism::{fingerprint, orbit_dim};
use superalg_core::registry::{default_sample_values, ParamSampler, Registry, SamplePoint};
use superalg_core::scalar::{Env, FieldContext, QuadExt, Rational, ScalarExpr};
use superalg_core::Verdict;

#[derive(Parser, Debug)]
#[command(name = "superalg", version, about = "Exact checks for 3-dimensional right alternative superalgebras")]
struct Cli {
    /// Seed for every sampling command.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Worker threads for independent items (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check an algebra against an identity set.
    Check(CheckArgs),
    /// Membership matrix of every right alternative algebra of one type,
    /// compared with the stated variety lists.
    Classify(ClassifyArgs),
    /// Verify displayed degeneration arrows.
    Degen(DegenArgs),
    /// Non-degeneration certificates: the quoted property holds at the
    /// source and survives Borel sampling.
    Certify(CertifyArgs),
    /// Orbit-closure dimensions against the dimension tables.
    Orbitdim(OrbitArgs),
    /// Cocycle condition, extension and automorphism action for a cocycle family.
    Z2(Z2Args),
    /// The symmetrized algebra and its supercommutator cocycle.
    Symmetrize(AlgebraArgs),
    /// Basis-independent invariants.
    Fingerprint(AlgebraArgs),
    /// Write the degeneration graph in DOT form.
    Graph(GraphArgs),
}

/// An algebra selected by name, parameter bindings and field context.
#[derive(Args, Debug)]
struct AlgebraArgs {
    #[arg(long)]
    algebra: String,
    /// Parameter binding `k=v`; values are scalar expressions (`r` is √d).
    #[arg(long = "param", value_parser = parse_binding)]
    params: Vec<(String, String)>,
    /// The field ℚ(√d) in which parameters live.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    context: i64,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    algebra: AlgebraArgs,
    /// Identity set name (builtin or from `--file`).
    #[arg(long)]
    identity: Option<String>,
    /// Identity definition file; without `--identity` every set in it is checked.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// `1,2` or `2,1`.
    #[arg(long = "type", value_parser = parse_kind)]
    kind: (usize, usize),
    /// Comma-separated parameter values (default −2, −1/2, 1/2, 1, 2, 5, 0).
    #[arg(long)]
    samples: Option<String>,
}

#[derive(Args, Debug)]
struct DegenArgs {
    #[arg(long, conflicts_with = "arrow")]
    all: bool,
    #[arg(long)]
    arrow: Option<String>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long, conflicts_with = "id")]
    all: bool,
    #[arg(long)]
    id: Option<String>,
    /// Borel samples per linear certificate.
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

#[derive(Args, Debug)]
struct OrbitArgs {
    #[arg(long, conflicts_with = "algebra")]
    all: bool,
    #[arg(long)]
    algebra: Option<String>,
    #[arg(long = "param", value_parser = parse_binding)]
    params: Vec<(String, String)>,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    context: i64,
}

#[derive(Args, Debug)]
struct Z2Args {
    #[arg(long)]
    jordan: String,
    #[arg(long)]
    eta: String,
    /// Cocycle parameters; unbound ones are sampled from `--seed`.
    #[arg(long = "param", value_parser = parse_binding)]
    params: Vec<(String, String)>,
    /// An automorphism shape followed by its bindings: `--act SHAPE k=v ...`.
    #[arg(long, num_args = 1..)]
    act: Vec<String>,
}

#[derive(Args, Debug)]
struct GraphArgs {
    #[arg(long)]
    dot: PathBuf,
}

fn parse_binding(text: &str) -> Result<(String, String), String> {
    let (k, v) = text.split_once('=').ok_or_else(|| format!("expected k=v, got `{text}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn parse_kind(text: &str) -> Result<(usize, usize), String> {
    match text.trim() {
        "1,2" => Ok((1, 2)),
        "2,1" => Ok((2, 1)),
        other => Err(format!("type must be 1,2 or 2,1, got `{other}`")),
    }
}

fn parse_rational(text: &str) -> Result<Rational> {
    let v = ScalarExpr::parse(text)
        .and_then(|e| e.eval_const(&FieldContext::RATIONAL, &Env::new()))
        .map_err(|e| anyhow!("sample `{text}`: {e}"))?;
    v.as_rational().cloned().ok_or_else(|| anyhow!("sample `{text}` is not rational"))
}

/// One line of output.
struct Item {
    id: String,
    verdict: Verdict,
    detail: String,
}

impl Item {
    fn new(id: impl Into<String>, verdict: Verdict, detail: impl Into<String>) -> Self {
        Self { id: id.into(), verdict, detail: detail.into() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(items) => report(&cli, items),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Prints the items in id order and the summary; returns the exit code.
fn report(cli: &Cli, mut items: Vec<Item>) -> ExitCode {
    items.sort_by(|a, b| a.id.cmp(&b.id));
    let mut failed = 0;
    for item in &items {
        let mut line = format!("ITEM {} {}", item.id, item.verdict.label());
        if !item.detail.is_empty() {
            line.push(' ');
            line.push_str(&item.detail);
        }
        if !item.verdict.details().is_empty() {
            line.push_str(if item.detail.is_empty() { " " } else { " : " });
            line.push_str(&item.verdict.details().join("; "));
        }
        println!("{line}");
        failed += usize::from(!item.verdict.is_pass());
    }
    eprintln!(
        "{}: {} items, {} passed, {} failed (seed {})",
        cli.command_name(),
        items.len(),
        items.len() - failed,
        failed,
        cli.seed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

impl Cli {
    fn command_name(&self) -> &'static str {
        match self.command {
            Command::Check(_) => "check",
            Command::Classify(_) => "classify",
            Command::Degen(_) => "degen",
            Command::Certify(_) => "certify",
            Command::Orbitdim(_) => "orbitdim",
            Command::Z2(_) => "z2",
            Command::Symmetrize(_) => "symmetrize",
            Command::Fingerprint(_) => "fingerprint",
            Command::Graph(_) => "graph",
        }
    }
}

fn run(cli: &Cli) -> Result<Vec<Item>> {
    rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global().ok();
    let registry = Registry::load_default().context("loading the registry")?;
    match &cli.command {
        Command::Check(args) => cmd_check(&registry, args),
        Command::Classify(args) => cmd_classify(&registry, args),
        Command::Degen(args) => cmd_degen(&registry, args),
        Command::Certify(args) => cmd_certify(&registry, args),
        Command::Orbitdim(args) => cmd_orbitdim(&registry, args),
        Command::Z2(args) => cmd_z2(&registry, args, cli.seed),
        Command::Symmetrize(args) => cmd_symmetrize(&registry, args),
        Command::Fingerprint(args) => cmd_fingerprint(&registry, args),
        Command::Graph(args) => cmd_graph(&registry, args),
    }
}

fn resolve(registry: &Registry, name: &str, params: &[(String, String)], d: i64) -> Result<SuperAlgebra<QuadExt>> {
    Ok(registry.resolve_text(name, params, d)?)
}

fn cmd_check(registry: &Registry, args: &CheckArgs) -> Result<Vec<Item>> {
    let a = &args.algebra;
    let algebra = resolve(registry, &a.algebra, &a.params, a.context)?;
    let library = match &args.file {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            IdentityLibrary::parse(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => IdentityLibrary::builtin(),
    };
    let names: Vec<String> = match &args.identity {
        Some(n) => vec![n.clone()],
        None if args.file.is_some() => library.names().map(str::to_string).collect(),
        None => bail!("give --identity or --file"),
    };
    let label = algebra.name().unwrap_or(&a.algebra).to_string();
    names.iter().map(|n| Ok(Item::new(format!("{label}:{n}"), library.check(&algebra, n)?, ""))).collect()
}

fn cmd_classify(registry: &Registry, args: &ClassifyArgs) -> Result<Vec<Item>> {
    let values = match &args.samples {
        Some(list) => {
            list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(parse_rational).collect::<Result<Vec<_>>>()?
        }
        None => default_sample_values(),
    };
    let library = IdentityLibrary::builtin();
    let report = registry.classify(&library, args.kind, &values)?;
    let tags: Vec<&str> = report.tags.iter().map(|t| t.name()).collect();
    eprintln!("varieties with stated lists: {}", tags.join(", "));
    let (m, n) = args.kind;
    Ok(report
        .rows
        .iter()
        .map(|row| {
            let mut failures: Vec<String> = report
                .tags
                .iter()
                .filter(|&&t| row.stated.contains(t) != row.computed.contains(t))
                .map(|&t| {
                    format!("{}: stated {}, computed {}", t.name(), row.stated.contains(t), row.computed.contains(t))
                })
                .collect();
            if let Some((sub, sup)) = row.computed.chain_violation() {
                failures.push(format!("chain violation: {} without {}", sub.name(), sup.name()));
            }
            Item::new(format!("{m},{n}:{}", row.name), Verdict::from_failures(failures), row.computed.to_string())
        })
        .collect())
}

fn cmd_degen(registry: &Registry, args: &DegenArgs) -> Result<Vec<Item>> {
    let arrows: Vec<_> = match (&args.arrow, args.all) {
        (Some(id), _) => vec![registry
            .arrows
            .iter()
            .chain(&registry.errata)
            .find(|a| &a.id == id)
            .ok_or_else(|| anyhow!("unknown arrow `{id}`"))?],
        (None, true) => registry.arrows.iter().chain(&registry.errata).collect(),
        (None, false) => bail!("give --all or --arrow ID"),
    };
    Ok(arrows
        .par_iter()
        .map(|arrow| {
            let report = verify_arrow(registry, arrow);
            let kind = if arrow.corrects.is_some() { " (corrected)" } else { "" };
            Item::new(&arrow.id, report.verdict, format!("{} -> {}{kind}", report.source, report.target))
        })
        .collect())
}

fn cmd_certify(registry: &Registry, args: &CertifyArgs) -> Result<Vec<Item>> {
    let certs: Vec<_> = match (&args.id, args.all) {
        (Some(id), _) => vec![registry
            .conditions
            .iter()
            .find(|c| &c.id == id)
            .ok_or_else(|| anyhow!("unknown certificate `{id}`"))?],
        (None, true) => registry.conditions.iter().collect(),
        (None, false) => bail!("give --all or --id ID"),
    };
    certs
        .par_iter()
        .map(|cert| {
            let verdict = check_certificate(registry, cert, args.trials, cert.seed);
            let open = inconclusive_targets(registry, cert).map_err(|e| anyhow!("{}: {e}", cert.id))?;
            let mut detail = format!("{} excludes {}", cert.source, cert.targets.len());
            if !open.is_empty() {
                detail.push_str(&format!(" (inconclusive for {})", open.join(", ")));
            }
            if let Some(flag) = &cert.flag {
                detail.push_str(&format!(" [flag: {flag}]"));
            }
            Ok(Item::new(&cert.id, verdict, detail))
        })
        .collect()
}

fn cmd_orbitdim(registry: &Registry, args: &OrbitArgs) -> Result<Vec<Item>> {
    if let Some(name) = &args.algebra {
        let a = resolve(registry, name, &args.params, args.context)?;
        let label = a.name().unwrap_or(name).to_string();
        return Ok(vec![Item::new(label, Verdict::pass(), format!("orbit_dim={}", orbit_dim(&a)))]);
    }
    if !args.all {
        bail!("give --all or --algebra NAME");
    }
    let rows =
        registry.dimtables.par_iter().map(|t| registry.orbit_rows(t)).collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(rows
        .into_iter()
        .flatten()
        .map(|row| {
            let verdict = if row.is_match() {
                Verdict::pass()
            } else {
                Verdict::fail(format!("tabulated {}, computed {}", row.tabulated, row.computed))
            };
            Item::new(format!("{}:{}", row.table, row.member), verdict, format!("dim={}", row.computed))
        })
        .collect())
}

fn cmd_z2(registry: &Registry, args: &Z2Args, seed: u64) -> Result<Vec<Item>> {
    let eta = registry.eta(&args.eta)?;
    if eta.jordan != args.jordan {
        bail!("cocycle family {} lives on {}, not {}", eta.id, eta.jordan, args.jordan);
    }
    let jordan = registry.resolve(&args.jordan, &BTreeMap::new())?;
    let point = bind_point(&eta.params, &args.params, &eta.exclude, seed)?;
    let theta = registry.eta_theta(eta, &point)?;
    let at = if point.values.is_empty() { String::new() } else { format!("[{point}]") };
    let id = format!("{}{at}", eta.id);
    let mut items = vec![Item::new(format!("{id}:z2"), z2_check(&jordan, &theta), theta.to_string())];
    let ext = extend(&jordan, &theta)?;
    items.push(Item::new(format!("{id}:extension"), Verdict::pass(), ext.product_lines().join(", ")));
    if let Some((shape_id, bindings)) = args.act.split_first() {
        let shape = registry.autshape(shape_id)?;
        let bindings = bindings.iter().map(|b| parse_binding(b).map_err(|e| anyhow!(e))).collect::<Result<Vec<_>>>()?;
        let phi_point =
            bind_point(&shape.params.iter().chain(&shape.signs).cloned().collect::<Vec<_>>(), &bindings, &[], seed)?;
        let phi = registry.autshape_map(shape, &phi_point)?;
        let (verdict, detail) = match act(&theta, &phi, &jordan) {
            Ok(moved) => (z2_check(&jordan, &moved), moved.to_string()),
            Err(e) => (Verdict::fail(e.to_string()), String::new()),
        };
        items.push(Item::new(format!("{id}:act:{shape_id}[{phi_point}]"), verdict, detail));
    }
    Ok(items)
}

/// Binds `params` from `given`, sampling the rest from `seed`.
fn bind_point(
    params: &[String],
    given: &[(String, String)],
    exclude: &[(String, ScalarExpr)],
    seed: u64,
) -> Result<SamplePoint> {
    if let Some((k, _)) = given.iter().find(|(k, _)| !params.contains(k)) {
        bail!("unknown parameter `{k}`");
    }
    let free: Vec<String> = params.iter().filter(|p| !given.iter().any(|(k, _)| k == *p)).cloned().collect();
    let mut point = ParamSampler::new(seed).draw(&free, &[], exclude);
    for (k, v) in given {
        let value = ScalarExpr::parse(v)
            .and_then(|e| e.eval_const(&FieldContext::RATIONAL, &Env::new()))
            .map_err(|e| anyhow!("parameter {k}: {e}"))?;
        point.values.insert(k.clone(), value);
    }
    point.label = String::new();
    Ok(point)
}

fn cmd_symmetrize(registry: &Registry, args: &AlgebraArgs) -> Result<Vec<Item>> {
    let a = resolve(registry, &args.algebra, &args.params, args.context)?;
    let label = a.name().unwrap_or(&args.algebra).to_string();
    let plus = a.symmetrize();
    let theta = a.supercommutator_map();
    Ok(vec![
        Item::new(format!("{label}:plus"), Verdict::pass(), plus.product_lines().join(", ")),
        Item::new(format!("{label}:theta"), check_decomposition(&a), theta.to_string()),
    ])
}

fn cmd_fingerprint(registry: &Registry, args: &AlgebraArgs) -> Result<Vec<Item>> {
    let a = resolve(registry, &args.algebra, &args.params, args.context)?;
    let label = a.name().unwrap_or(&args.algebra).to_string();
    let record = fingerprint(&a, &IdentityLibrary::builtin());
    let verdict = match record.varieties.chain_violation() {
        Some((sub, sup)) => Verdict::fail(format!("chain violation: {} without {}", sub.name(), sup.name())),
        None => Verdict::pass(),
    };
    Ok(vec![Item::new(label, verdict, record.to_string())])
}

fn cmd_graph(registry: &Registry, args: &GraphArgs) -> Result<Vec<Item>> {
    let arrows: Vec<_> = registry.arrows.iter().chain(&registry.errata).cloned().collect();
    std::fs::write(&args.dot, degeneration_dot(&arrows)).with_context(|| format!("writing {}", args.dot.display()))?;
    Ok(vec![Item::new("graph", Verdict::pass(), format!("{} edges -> {}", arrows.len(), args.dot.display()))])
}
