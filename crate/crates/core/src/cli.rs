//! The `coarsekit` command-line front end.
//!
//! Every subcommand produces a [`CommandResult`]: a status, a JSON payload
//! tagged with the schema version, and a one-line summary. The binary prints the
//! payload with `--json` (the summary otherwise), writes it to `--out`, and
//! exits with [`Status::exit_code`].

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::amenability::{
    folner_search, growth_profile, matching_certificate, paradox_free_group, verify_doubling, verify_paradox, FolnerBudget,
    MatchingOutcome, ParadoxicalDecomposition,
};
use crate::asdim::{greedy_cover, verify_decomposition, witness_grid2, witness_line, witness_tree, ColoredCover};
use crate::error::{Error, Result};
use crate::json;
use crate::maps::{classify, CoarseMap};
use crate::roe::{af_approximate, mv_split, op_norm, omega_membership, random_operator, BandedOperator, OmegaDecomposition, OmegaPart};
use crate::scale::{class_size_profile, components_at_scale, extract_segments, profile_trend, verify_segments};
use crate::space::{Space, SpaceSpec, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Infeasible,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Infeasible => 2,
            Status::Error => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Infeasible => "infeasible",
            Status::Error => "error",
        }
    }

    fn from_bool(passed: bool) -> Status {
        if passed {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandResult {
    pub status: Status,
    pub payload: Value,
    pub summary: String,
    /// Whether `--json` was given.
    pub json: bool,
}

impl CommandResult {
    fn new(status: Status, payload: Value, summary: impl Into<String>) -> CommandResult {
        CommandResult { status, payload, summary: summary.into(), json: false }
    }

    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    /// The payload as written to `--out` and printed with `--json`.
    pub fn payload_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.payload).expect("payloads serialize");
        s.push('\n');
        s
    }
}

/// Exit status for a library error.
pub fn error_status(e: &Error) -> Status {
    match e {
        Error::NoSegments { .. }
        | Error::NoProbe { .. }
        | Error::Infeasible(_)
        | Error::SearchExhausted
        | Error::EnumerationOverflow { .. }
        | Error::CapExceeded { .. }
        | Error::ClassTooLarge { .. } => Status::Infeasible,
        _ => Status::Error,
    }
}

#[derive(Debug, Parser)]
#[command(name = "coarsekit", version, about = "Coarse geometry on finite windows of metric spaces")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Space specification (bare, or a document with a `space` field).
    #[arg(long, global = true)]
    space: Option<PathBuf>,
    /// Window: the ball of this radius around the base point.
    #[arg(long, global = true)]
    window_radius: Option<u64>,
    /// Scale.
    #[arg(long, global = true)]
    r: Option<u64>,
    /// Tolerance, as a decimal or a fraction such as `1/10`.
    #[arg(long, global = true)]
    eps: Option<String>,
    /// Write the JSON payload to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the JSON payload instead of the summary.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel window computations.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Describe a space and a window of it.
    Space,
    /// Scale-r components of a window, with the class-size profile over radii.
    Components,
    /// Extract coarse line segments and verify them.
    Segments {
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Colored covers witnessing asymptotic dimension bounds.
    Asdim {
        #[command(subcommand)]
        action: AsdimAction,
    },
    /// Search for a Følner set.
    Folner {
        /// `balls:N` or `subsets-of-ball:R`.
        #[arg(long, default_value = "balls:100000")]
        budget: String,
    },
    /// The free-group paradoxical decomposition, verified on the window.
    Paradox {
        /// Emit the decomposition restricted to the window as explicit translations.
        #[arg(long)]
        explicit: bool,
    },
    /// Max-flow search for a windowed doubling, or a Hall cut.
    Matching,
    /// Propagation and norm of an operator (random with `--seed` unless `--op` is given).
    Op {
        #[command(flatten)]
        op: OpSource,
    },
    /// Block-constant approximation of an operator.
    AfApprox {
        #[command(flatten)]
        op: OpSource,
        #[arg(long, default_value_t = 64)]
        class_cap: usize,
    },
    /// Split an operator along a two-colored cover.
    MvSplit {
        #[command(flatten)]
        op: OpSource,
        /// Two-colored cover document; defaults to the witness cover at scale `--r`.
        #[arg(long)]
        cover: Option<PathBuf>,
    },
    /// Classify a coarse map at window scale.
    Classify {
        /// `{"pairs": [[x, f(x)], ...]}` over points of `--space`.
        #[arg(long)]
        map: PathBuf,
        /// Target space; defaults to `--space`.
        #[arg(long)]
        target: Option<PathBuf>,
        /// Target window radius for the density check.
        #[arg(long)]
        target_radius: Option<u64>,
        #[arg(long, default_value_t = 1)]
        c: u64,
        #[arg(long)]
        threshold: Option<u64>,
    },
    /// Re-verify a serialized certificate from scratch.
    Verify {
        #[arg(long)]
        cert: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum AsdimAction {
    /// The closed-form witness for lines, planes, trees and free groups.
    Witness,
    /// Heuristic search for a (d+1)-colored cover.
    Greedy {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        bound: u64,
    },
    /// Verify a cover document.
    Verify {
        #[arg(long)]
        cover: PathBuf,
    },
}

#[derive(Debug, Args)]
struct OpSource {
    /// Operator document; otherwise a random operator is drawn.
    #[arg(long)]
    op: Option<PathBuf>,
    /// Propagation of the random operator; defaults to `--r`.
    #[arg(long)]
    prop: Option<u64>,
    /// Entry bound of the random operator.
    #[arg(long, default_value_t = 1.0)]
    bound: f64,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let status = if e.use_stderr() { Status::Error } else { Status::Pass };
            return CommandResult::new(status, Value::Null, e.to_string());
        }
    };
    let json_flag = cli.global.json;
    let outcome = match cli.global.jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Error::Invalid(format!("cannot start {n} workers: {e}"))),
        },
        None => dispatch(&cli),
    };
    let mut result = match outcome {
        Ok(r) => r,
        Err(e) => {
            let status = error_status(&e);
            CommandResult::new(status, json!({ "schema": json::SCHEMA, "type": "error", "status": status.label(), "error": e.to_string() }), e.to_string())
        }
    };
    result.json = json_flag;
    if let Some(path) = &cli.global.out {
        if let Err(e) = std::fs::write(path, result.payload_text()) {
            result.status = Status::Error;
            result.summary = format!("cannot write {}: {e}", path.display());
        }
    }
    result
}

fn load(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

impl Global {
    fn space(&self) -> Result<Arc<Space>> {
        let path = self.space.as_ref().ok_or_else(|| Error::Invalid("this command needs --space".into()))?;
        json::read_space(&load(path)?)
    }

    fn window(&self, space: &Arc<Space>) -> Result<Arc<Window>> {
        let w = match self.window_radius {
            Some(radius) => Window::ball(space.clone(), &space.base_point(), radius)?,
            None if space.is_finite() => Window::whole(space.clone())?,
            None => return Err(Error::Invalid("infinite space: give --window-radius".into())),
        };
        Ok(Arc::new(w))
    }

    fn r(&self) -> Result<u64> {
        self.r.ok_or_else(|| Error::Invalid("this command needs --r".into()))
    }

    fn eps(&self) -> Result<num_rational::Ratio<u64>> {
        let text = self.eps.as_deref().ok_or_else(|| Error::Invalid("this command needs --eps".into()))?;
        json::parse_ratio_text(text).ok_or_else(|| Error::Invalid(format!("cannot read --eps {text}")))
    }

    fn eps_f64(&self) -> Result<f64> {
        let e = self.eps()?;
        Ok(*e.numer() as f64 / *e.denom() as f64)
    }
}

fn dispatch(cli: &Cli) -> Result<CommandResult> {
    let g = &cli.global;
    match &cli.command {
        Command::Space => space_cmd(g),
        Command::Components => components_cmd(g),
        Command::Segments { count } => segments_cmd(g, *count),
        Command::Asdim { action } => asdim_cmd(g, action),
        Command::Folner { budget } => folner_cmd(g, budget),
        Command::Paradox { explicit } => paradox_cmd(g, *explicit),
        Command::Matching => matching_cmd(g),
        Command::Op { op } => op_cmd(g, op),
        Command::AfApprox { op, class_cap } => af_cmd(g, op, *class_cap),
        Command::MvSplit { op, cover } => mv_cmd(g, op, cover.as_deref()),
        Command::Classify { map, target, target_radius, c, threshold } => {
            classify_cmd(g, map, target.as_deref(), *target_radius, *c, *threshold)
        }
        Command::Verify { cert } => verify_cmd(cert),
    }
}

fn space_cmd(g: &Global) -> Result<CommandResult> {
    let space = g.space()?;
    let mut body = json!({
        "kind": space.kind_name(),
        "finite": space.is_finite(),
        "base_point": space.point_to_json(&space.base_point()),
        "diameter": space.diameter(),
    });
    let mut summary = format!("{} space", space.kind_name());
    if g.window_radius.is_some() || space.is_finite() {
        let w = g.window(&space)?;
        body["window_size"] = json!(w.len());
        summary += &format!(", window of {} points", w.len());
        if let Some(r) = g.r {
            body["max_r_ball"] = json!(w.bounded_geometry_profile(r));
        }
    }
    if let Some(n) = g.window_radius.filter(|&n| n >= 1) {
        let growth = growth_profile(&space, &space.base_point(), n)?;
        summary += &format!(", growth {}", growth.tag.label());
        body["growth"] = json!({ "sizes": growth.sizes, "slope": growth.slope, "tag": growth.tag.label() });
    }
    Ok(CommandResult::new(Status::Pass, json::tagged("space_summary", &space, body), summary))
}

fn components_cmd(g: &Global) -> Result<CommandResult> {
    let space = g.space()?;
    let w = g.window(&space)?;
    let r = g.r()?;
    let part = components_at_scale(&w, r);
    let mut body = json!({
        "window": w.to_json(),
        "r": r,
        "classes": part.classes.iter().map(|c| json::points_json(&w, c)).collect::<Vec<_>>(),
        "max_class_size": part.max_class_size(),
    });
    let mut summary = format!("{} classes at scale {r}, largest {}", part.classes.len(), part.max_class_size());
    if let Some(radius) = g.window_radius {
        let windows = (0..=radius)
            .map(|k| Window::ball(space.clone(), &space.base_point(), k))
            .collect::<Result<Vec<_>>>()?;
        let profile = class_size_profile(r, &windows);
        let trend = profile_trend(&profile);
        body["profile"] = json!(profile);
        body["trend"] = json!(trend.label());
        summary += &format!(" ({})", trend.label());
    }
    Ok(CommandResult::new(Status::Pass, json::tagged("components", &space, body), summary))
}

fn segments_cmd(g: &Global, count: usize) -> Result<CommandResult> {
    let space = g.space()?;
    let w = g.window(&space)?;
    let family = extract_segments(&w, g.r()?, count)?;
    let report = verify_segments(&space, &family)?;
    let status = Status::from_bool(report.all_pass());
    let summary = format!("{} segments of lengths {:?}: {}", family.segments.len(), family.lengths(), status.label());
    Ok(CommandResult::new(status, json::segments_to_json(&space, &family), summary))
}

/// The closed-form witness cover for the space of `w`.
fn witness_for(w: &Window, r: u64) -> Result<ColoredCover> {
    let space = w.space();
    match space.spec() {
        SpaceSpec::Grid { dim: 1 } => witness_line(r, w),
        SpaceSpec::Grid { dim: 2 } => witness_grid2(r, w),
        _ if space.is_treelike() => witness_tree(&space.base_point(), r, w),
        _ => Err(Error::WrongSpace { expected: "a line, plane, tree or free group", got: space.kind_name().into() }),
    }
}

fn cover_result(w: &Window, cover: &ColoredCover) -> CommandResult {
    let report = verify_decomposition(w, cover);
    let status = Status::from_bool(report.passed());
    let mut summary = format!(
        "{} colors, separation {} and bound {} (max diameter {}): {}",
        cover.num_colors(),
        cover.r,
        cover.bound,
        report.max_diameter,
        status.label()
    );
    if let Some(c) = &report.counterexample {
        summary += &format!("; {c}");
    }
    CommandResult::new(status, json::cover_to_json(w, cover), summary)
}

fn asdim_cmd(g: &Global, action: &AsdimAction) -> Result<CommandResult> {
    match action {
        AsdimAction::Witness => {
            let w = g.window(&g.space()?)?;
            Ok(cover_result(&w, &witness_for(&w, g.r()?)?))
        }
        AsdimAction::Greedy { d, bound } => {
            let w = g.window(&g.space()?)?;
            Ok(cover_result(&w, &greedy_cover(&w, g.r()?, *d, *bound)?))
        }
        AsdimAction::Verify { cover } => {
            let (w, cover) = json::cover_from_json(&load(cover)?)?;
            let mut result = cover_result(&w, &cover);
            let report = verify_decomposition(&w, &cover);
            result.payload = json!({
                "schema": json::SCHEMA,
                "type": "verification",
                "document": "cover",
                "passed": report.passed(),
                "partition": report.partition,
                "separation": report.separation,
                "bound": report.bound,
                "max_diameter": report.max_diameter,
            });
            Ok(result)
        }
    }
}

fn parse_budget(text: &str) -> Result<FolnerBudget> {
    let bad = || Error::Invalid(format!("budget is `balls:N` or `subsets-of-ball:R`, got `{text}`"));
    let (kind, n) = text.split_once(':').ok_or_else(bad)?;
    let n: u64 = n.parse().map_err(|_| bad())?;
    match kind {
        "balls" => Ok(FolnerBudget::Balls(n as usize)),
        "subsets-of-ball" => Ok(FolnerBudget::SubsetsOfBall(n)),
        _ => Err(bad()),
    }
}

fn folner_cmd(g: &Global, budget: &str) -> Result<CommandResult> {
    let space = g.space()?;
    let (r, eps) = (g.r()?, g.eps()?);
    let budget = parse_budget(budget)?;
    Ok(match folner_search(&space, r, eps, budget)? {
        Some(cert) => {
            let status = Status::from_bool(cert.verify()?);
            let summary = format!("Følner set of {} points, |N_{r}(F)|/|F| = {}", cert.set.len(), cert.ratio());
            CommandResult::new(status, json::folner_to_json(&cert), summary)
        }
        None => CommandResult::new(
            Status::Infeasible,
            json::tagged("folner_search", &space, json!({ "r": r, "eps": format!("{}/{}", eps.numer(), eps.denom()), "found": false })),
            format!("no Følner set with ratio at most 1 + {eps} within the budget"),
        ),
    })
}

fn paradox_cmd(g: &Global, explicit: bool) -> Result<CommandResult> {
    let space = g.space()?;
    let rank = space
        .free_group_rank()
        .ok_or_else(|| Error::WrongSpace { expected: "a free group", got: space.kind_name().into() })?;
    let w = g.window(&space)?;
    let rule = paradox_free_group(rank)?;
    let p = if explicit { ParadoxicalDecomposition::Explicit(rule.restrict(&w)?) } else { rule };
    let report = verify_paradox(&p, &w)?;
    let status = Status::from_bool(report.passed());
    let summary = format!(
        "paradoxical decomposition on {} points, displacement {}: {}",
        report.carrier_points,
        report.observed_displacement,
        status.label()
    );
    Ok(CommandResult::new(status, json::paradox_to_json(&p, &w), summary))
}

fn matching_cmd(g: &Global) -> Result<CommandResult> {
    let space = g.space()?;
    let w = g.window(&space)?;
    let r = g.r()?;
    Ok(match matching_certificate(&w, r) {
        MatchingOutcome::Certificate(d) => {
            let status = Status::from_bool(verify_doubling(&w, &d).passed());
            let summary = format!("doubling of {} interior points, flow {}", d.interior.len(), 2 * d.interior.len());
            CommandResult::new(status, json::doubling_to_json(&w, &d), summary)
        }
        MatchingOutcome::Infeasible { flow, needed, cut, cut_neighborhood } => {
            let summary = format!("no doubling: flow {flow} < {needed}; cut of {} points has |N_{r}| = {cut_neighborhood}", cut.len());
            let mut payload = json::hall_cut_to_json(&w, r, &cut, cut_neighborhood);
            payload["flow"] = json!(flow);
            payload["needed"] = json!(needed);
            CommandResult::new(Status::Infeasible, payload, summary)
        }
    })
}

fn operator(g: &Global, src: &OpSource, window: &Arc<Window>) -> Result<BandedOperator> {
    match &src.op {
        Some(path) => {
            let a = json::operator_from_json(&load(path)?)?;
            if **a.window() != **window {
                return Err(Error::WindowMismatch);
            }
            BandedOperator::new(window.clone(), a.entries())
        }
        None => {
            let prop = src.prop.or(g.r).ok_or_else(|| Error::Invalid("give --prop or --r for a random operator".into()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            Ok(random_operator(window.clone(), prop, src.bound, &mut rng))
        }
    }
}

/// The operator's window: from `--op` when given, otherwise from `--space`.
fn operator_window(g: &Global, src: &OpSource) -> Result<Arc<Window>> {
    match &src.op {
        Some(path) => Ok(json::operator_from_json(&load(path)?)?.window().clone()),
        None => g.window(&g.space()?),
    }
}

fn op_cmd(g: &Global, src: &OpSource) -> Result<CommandResult> {
    let w = operator_window(g, src)?;
    let a = operator(g, src, &w)?;
    let norm = op_norm(&a);
    let mut payload = json::operator_to_json(&a);
    payload["norm"] = json!({ "value": norm.value, "converged": norm.converged, "iterations": norm.iterations });
    payload["exact"] = json!(a.is_exact());
    let summary = format!("{} nonzero entries, propagation {}, norm {:.6}", a.nnz(), a.propagation(), norm.value);
    Ok(CommandResult::new(Status::Pass, payload, summary))
}

fn af_cmd(g: &Global, src: &OpSource, class_cap: usize) -> Result<CommandResult> {
    let w = operator_window(g, src)?;
    let a = operator(g, src, &w)?;
    let r = g.r.unwrap_or(a.propagation()).max(a.propagation());
    let eps = g.eps_f64()?;
    let af = af_approximate(&a, r, eps, class_cap)?;
    let payload = json::af_to_json(&a, eps, &af);
    let verdict = json::verify_document(&payload)?;
    let summary = format!(
        "{} classes in {} colors, error {:.3e} < {eps}",
        af.coloring.classes.len(),
        af.coloring.num_colors(),
        af.error
    );
    Ok(CommandResult::new(Status::from_bool(verdict.passed), payload, summary))
}

fn mv_cmd(g: &Global, src: &OpSource, cover: Option<&Path>) -> Result<CommandResult> {
    let (w, cover) = match cover {
        Some(path) => {
            let (w, c) = json::cover_from_json(&load(path)?)?;
            (w, c)
        }
        None => {
            let w = g.window(&g.space()?)?;
            let c = witness_for(&w, g.r()?)?;
            (w, c)
        }
    };
    let omega = OmegaDecomposition::new(w.clone(), cover)?;
    let a = operator(g, src, &w)?;
    let (b, c) = mv_split(&a, &omega)?;
    let prop = a.propagation();
    let in_u = omega_membership(&b, &omega, prop, OmegaPart::U)?.passed();
    let in_v = omega_membership(&c, &omega, prop, OmegaPart::V)?.passed();
    let exact = b.add(&c)? == a;
    let status = Status::from_bool(exact && in_u && in_v);
    let summary = format!("split at r = {prop}: b + c = a {exact}, b in U {in_u}, c in V {in_v}");
    Ok(CommandResult::new(status, json::mv_split_to_json(&a, &omega, &b, &c), summary))
}

fn classify_cmd(
    g: &Global,
    map: &Path,
    target: Option<&Path>,
    target_radius: Option<u64>,
    c: u64,
    threshold: Option<u64>,
) -> Result<CommandResult> {
    let source = g.space()?;
    let target = match target {
        Some(path) => json::read_space(&load(path)?)?,
        None => source.clone(),
    };
    let f = CoarseMap::from_json(source.clone(), target.clone(), &load(map)?)?;
    let tw = target_radius.map(|k| Window::ball(target.clone(), &target.base_point(), k)).transpose()?;
    let cl = classify(&f, tw.as_ref(), c, threshold);
    let body = json!({
        "map": f.to_json(),
        "lower": cl.envelopes.lower,
        "upper": cl.envelopes.upper,
        "uniformly_expansive": cl.uniformly_expansive,
        "embedding_threshold": cl.embedding_threshold,
        "coarse_embedding_evidence": cl.coarse_embedding_evidence,
        "density": cl.density,
        "coarse_equivalence": cl.coarse_equivalence,
        "bi_lipschitz": cl.bi_lipschitz,
        "injective": f.is_injective(),
        "target": serde_json::to_value(target.spec())?,
    });
    let summary = format!(
        "diameter {}: embedding evidence {}, bi-Lipschitz constant {}",
        cl.envelopes.diameter(),
        cl.coarse_embedding_evidence,
        cl.bi_lipschitz.map_or("none".to_string(), |l| l.to_string())
    );
    Ok(CommandResult::new(Status::Pass, json::tagged("classification", &source, body), summary))
}

fn verify_cmd(cert: &Path) -> Result<CommandResult> {
    let doc = load(cert)?;
    let kind = json::document_type(&doc)?.to_string();
    let verdict = json::verify_document(&doc)?;
    let status = Status::from_bool(verdict.passed);
    let payload = json!({
        "schema": json::SCHEMA,
        "type": "verification",
        "document": kind,
        "passed": verdict.passed,
        "report": verdict.report,
    });
    Ok(CommandResult::new(status, payload, format!("{kind}: {}", status.label())))
}
