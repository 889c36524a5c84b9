//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::blowup::{catastrophe_search_by, CatastropheReport};
use crate::characteristics::InitialField;
use crate::complex2d::{CaseLabel, ComplexSystem2D};
use crate::demos::{demo_names, load_demo, Action, DEMOS};
use crate::error::{Error, SetupError};
use crate::export::{
    csv_string, fmt_text, fmt_tuple, indexed, json_document, polyline_table, segments_json, sidecar_path, Cell,
    Format, Table,
};
use crate::hodograph::{BranchSelector, BranchSet, HodographSystem};
use crate::mappings::{domain_lattice, singular_locus, singularity_timeline, TIMELINE_SAMPLES};
use crate::problem::{parse_problem, Problem, SearchSettings};
use crate::validate::{demo_suite, problem_checks, Check};

#[derive(Parser, Debug)]
#[command(name = "hodograph", version, about = "Hodograph analysis of the homogeneous Euler equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the hodograph relations for u at (x, t).
    Solve(Common),
    /// Real roots of det M = 0 at a velocity point (eigentimes for initial data).
    Branches(Common),
    /// Minimise a branch surface: the first gradient catastrophe.
    Catastrophe(Common),
    /// Characteristics analyses of initial data.
    Characteristics(Common),
    /// Singular locus det M = 0 at fixed t.
    MapScan(Common),
    /// Times at which the singular locus is (non)empty.
    Timeline(Common),
    /// Two-dimensional blow-up classification.
    Classify2d(Common),
    /// Run a built-in example; without a name, list them.
    Demo {
        name: Option<String>,
        action: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Cross-method consistency suite.
    Validate(Common),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Problem-definition file (TOML).
    #[arg(long)]
    pub file: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Lattice nodes per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Multistart count.
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Time range `a:b`.
    #[arg(long = "t-range", allow_hyphen_values = true)]
    pub t_range: Option<String>,
    /// Comma-separated point.
    #[arg(long, allow_hyphen_values = true)]
    pub at: Option<String>,
    /// Newton start for `solve` (comma-separated).
    #[arg(long, allow_hyphen_values = true)]
    pub guess: Option<String>,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Parameter override `name=value` (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE", allow_hyphen_values = true)]
    pub params: Vec<String>,
    /// Which branch `catastrophe` minimises.
    #[arg(long, value_enum, default_value_t = BranchArg::Positive)]
    pub branch: BranchArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FormatArg {
    #[default]
    Text,
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BranchArg {
    /// Smallest positive root (gradient catastrophe).
    #[default]
    Positive,
    /// Largest negative root.
    Negative,
    Both,
    /// Every root in ascending order, separately.
    Sorted,
}

#[derive(Debug)]
pub enum CliError {
    Setup(String),
    Numeric(Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Setup(_) | CliError::Io(_) => 1,
            CliError::Numeric(Error::Unsupported(_)) => 1,
            CliError::Numeric(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Setup(m) | CliError::Io(m) => f.write_str(m),
            CliError::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        CliError::Numeric(e)
    }
}

impl From<SetupError> for CliError {
    fn from(e: SetupError) -> CliError {
        CliError::Setup(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// A rendered result.
pub struct Output {
    pub kind: &'static str,
    pub text: String,
    pub table: Table,
    pub json: Value,
    pub sidecar: Option<Value>,
    /// Exit code after a successful render (validate reports failures as 2).
    pub code: i32,
}

impl Output {
    fn new(kind: &'static str, text: String, table: Table, json: Value) -> Output {
        Output {
            kind,
            text,
            table,
            json,
            sidecar: None,
            code: 0,
        }
    }
}

/// Run with `args` (including the program name); returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    match execute(&cli.command).and_then(|(out, common)| emit(&out, &common, stdout).map(|_| out.code)) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: &Output, common: &Common, stdout: &mut dyn Write) -> CliResult<()> {
    let format = match common.format {
        FormatArg::Text => Format::Text,
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let body = match format {
        Format::Text => out.text.clone(),
        Format::Csv => csv_string(&out.table),
        Format::Json => {
            let doc = json_document(out.kind, out.json.clone());
            serde_json::to_string_pretty(&doc).expect("serialisable") + "\n"
        }
    };
    let io = |e: std::io::Error, what: &str| CliError::Io(format!("{what}: {e}"));
    match &common.out {
        Some(path) => {
            fs::write(path, &body).map_err(|e| io(e, &path.display().to_string()))?;
            if let (Format::Csv, Some(side)) = (format, &out.sidecar) {
                let sp = sidecar_path(path);
                let text = serde_json::to_string_pretty(side).expect("serialisable") + "\n";
                fs::write(&sp, text).map_err(|e| io(e, &sp.display().to_string()))?;
            }
        }
        None => stdout.write_all(body.as_bytes()).map_err(|e| io(e, "stdout"))?,
    }
    Ok(())
}

struct Ctx<'a> {
    problem: &'a Problem,
    search: SearchSettings,
    common: &'a Common,
    t: Option<f64>,
}

fn execute(cmd: &Command) -> CliResult<(Output, Common)> {
    let (action, common) = match cmd {
        Command::Solve(c) => (Action::Solve, c),
        Command::Branches(c) => (Action::Branches, c),
        Command::Catastrophe(c) => (Action::Catastrophe, c),
        Command::Characteristics(c) => (Action::Characteristics, c),
        Command::MapScan(c) => (Action::MapScan, c),
        Command::Timeline(c) => (Action::Timeline, c),
        Command::Classify2d(c) => (Action::Classify2d, c),
        Command::Demo { name, action, common } => return run_demo(name.as_deref(), action.as_deref(), common),
        Command::Validate(c) => return Ok((validate(c)?, c.clone())),
    };
    let problem = load_file(common)?;
    let ctx = Ctx {
        search: overrides(&problem.search, common)?,
        problem: &problem,
        common,
        t: common.t,
    };
    Ok((dispatch(action, &ctx)?, common.clone()))
}

fn load_file(common: &Common) -> CliResult<Problem> {
    let path = common
        .file
        .as_ref()
        .ok_or_else(|| CliError::Setup("--file is required".into()))?;
    let src = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_problem(&src, &parse_params(&common.params)?)
        .map_err(|e| CliError::Setup(format!("{}: {e}", path.display())))
}

fn parse_params(raw: &[String]) -> CliResult<Vec<(String, f64)>> {
    raw.iter()
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| CliError::Setup(format!("--param `{p}` is not NAME=VALUE")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Setup(format!("--param `{p}`: bad number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn parse_point(s: &str, n: usize, flag: &str) -> CliResult<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Setup(format!("{flag} `{s}`: expected comma-separated numbers")))?;
    if v.len() != n {
        return Err(CliError::Setup(format!("{flag} has {} coordinates, expected {n}", v.len())));
    }
    Ok(v)
}

fn overrides(base: &SearchSettings, c: &Common) -> CliResult<SearchSettings> {
    let mut s = base.clone();
    if let Some(v) = c.seed {
        s.seed = v;
    }
    if let Some(v) = c.starts {
        if v == 0 {
            return Err(CliError::Setup("--starts must be positive".into()));
        }
        s.starts = v;
    }
    if let Some(v) = c.grid {
        if v < 2 {
            return Err(CliError::Setup("--grid must be at least 2".into()));
        }
        s.grid = v;
    }
    if let Some(r) = &c.t_range {
        let (a, b) = r
            .split_once(':')
            .ok_or_else(|| CliError::Setup(format!("--t-range `{r}` is not a:b")))?;
        let parse = |x: &str| x.trim().parse::<f64>().map_err(|_| CliError::Setup(format!("--t-range `{r}`: bad number")));
        let (a, b) = (parse(a)?, parse(b)?);
        if !(a < b) {
            return Err(CliError::Setup("--t-range must be increasing".into()));
        }
        s.t_range = Some((a, b));
    }
    Ok(s)
}

fn run_demo(name: Option<&str>, action: Option<&str>, common: &Common) -> CliResult<(Output, Common)> {
    let Some(name) = name else {
        let mut text = String::new();
        let mut table = Table::new(["name", "summary"]);
        for d in DEMOS {
            text.push_str(&format!("{:<12} {}\n", d.name, d.summary));
            table.push(vec![d.name.into(), d.summary.into()]);
        }
        for name in crate::mappings::CATALOG {
            text.push_str(&format!("{name:<12} stable singularity of mappings\n"));
            table.push(vec![name.into(), "stable singularity of mappings".into()]);
        }
        let json = json!({"demos": demo_names()});
        return Ok((Output::new("demos", text, table, json), common.clone()));
    };
    let demo = load_demo(name, &parse_params(&common.params)?)?
        .ok_or_else(|| CliError::Setup(format!("unknown demo `{name}` (known: {})", demo_names().join(", "))))?;
    let action = match action {
        None => demo.action,
        Some(a) => Action::from_name(a).ok_or_else(|| CliError::Setup(format!("unknown action `{a}`")))?,
    };
    let problem = demo
        .problem_for(action)
        .ok_or_else(|| CliError::Setup(format!("demo {name} has no data for this action")))?;
    let ctx = Ctx {
        search: overrides(&problem.search, common)?,
        problem,
        common,
        t: common.t.or(demo.t),
    };
    Ok((dispatch(action, &ctx)?, common.clone()))
}

fn dispatch(action: Action, ctx: &Ctx) -> CliResult<Output> {
    match action {
        Action::Solve => solve(ctx),
        Action::Branches => branches(ctx),
        Action::Catastrophe => catastrophe(ctx),
        Action::Characteristics => characteristics(ctx),
        Action::MapScan => map_scan(ctx),
        Action::Timeline => timeline(ctx),
        Action::Classify2d => classify2d(ctx),
    }
}

fn need_system<'a>(ctx: &'a Ctx) -> CliResult<&'a HodographSystem> {
    ctx.problem.system().ok_or_else(|| {
        CliError::Setup("this analysis needs hodograph data (the problem gives initial data only)".into())
    })
}

fn need_field<'a>(ctx: &'a Ctx) -> CliResult<&'a InitialField> {
    ctx.problem
        .field()
        .ok_or_else(|| CliError::Setup("this analysis needs initial data".into()))
}

fn need_t(ctx: &Ctx) -> CliResult<f64> {
    ctx.t.ok_or_else(|| CliError::Setup("--t is required".into()))
}

fn solve(ctx: &Ctx) -> CliResult<Output> {
    let n = ctx.problem.dim();
    let t = need_t(ctx)?;
    let x = parse_point(
        ctx.common.at.as_deref().ok_or_else(|| CliError::Setup("--at is required".into()))?,
        n,
        "--at",
    )?;
    let guess = ctx.common.guess.as_deref().map(|g| parse_point(g, n, "--guess")).transpose()?;
    if let Some(field) = ctx.problem.field() {
        let (x0, u) = field.solve_x0(&x, t, guess.as_deref().unwrap_or(&x))?;
        let text = format!("x = {}\nt = {}\nx0 = {}\nu = {}\n", fmt_tuple(&x), fmt_text(t), fmt_tuple(&x0), fmt_tuple(&u));
        let mut table = Table::new(
            ["t".to_string()]
                .into_iter()
                .chain(indexed("x", n))
                .chain(indexed("x0_", n))
                .chain(indexed("u", n)),
        );
        table.push(std::iter::once(t).chain(x.clone()).chain(x0.clone()).chain(u.clone()).map(Cell::Num).collect());
        return Ok(Output::new("solution", text, table, json!({"x": x, "t": t, "x0": x0, "u": u})));
    }
    let sys = need_system(ctx)?;
    let s = match guess {
        Some(g) => sys.solve_u(&x, t, &g)?,
        None => continuation(sys, &x, t)?,
    };
    let pde = sys.pde_residual(&x, t, crate::validate::PDE_STEP, &s.u).ok();
    let mut text = format!("x = {}\nt = {}\nu = {}\n", fmt_tuple(&x), fmt_text(t), fmt_tuple(&s.u));
    for (i, row) in s.dudx.iter().enumerate() {
        text.push_str(&format!("du{}/dx = {}\n", i + 1, fmt_tuple(row)));
    }
    text.push_str(&format!("du/dt = {}\n", fmt_tuple(&s.dudt)));
    text.push_str(&format!("newton iterations = {}\nresidual = {:e}\n", s.newton_iters, s.residual));
    if let Some(r) = pde {
        text.push_str(&format!("pde residual = {r:e}\n"));
    }
    let mut headers = vec!["t".to_string()];
    headers.extend(indexed("x", n));
    headers.extend(indexed("u", n));
    headers.extend(indexed("dudt", n));
    headers.push("residual".into());
    let mut table = Table::new(headers);
    let mut row: Vec<Cell> = vec![t.into()];
    row.extend(x.iter().chain(&s.u).chain(&s.dudt).map(|v| Cell::Num(*v)));
    row.push(s.residual.into());
    table.push(row);
    let mut js = serde_json::to_value(&s).expect("serialisable");
    js["pde_residual"] = json!(pde);
    Ok(Output::new("solution", text, table, js))
}

/// Newton from the box centre at t = 0, then continued in t.
fn continuation(sys: &HodographSystem, x: &[f64], t: f64) -> Result<crate::hodograph::SolutionSample, Error> {
    let mut s = sys.solve_u(x, 0.0, &sys.domain().center())?;
    let steps = ((t.abs() / 0.05).ceil() as usize).max(1);
    for k in 1..=steps {
        let tk = t * k as f64 / steps as f64;
        s = sys.solve_u(x, tk, &s.u)?;
    }
    Ok(s)
}

fn branch_text(set: &BranchSet) -> String {
    let parts: Vec<String> = set
        .roots
        .iter()
        .map(|b| {
            if b.multiplicity > 1 {
                format!("{} (x{})", fmt_text(b.t), b.multiplicity)
            } else {
                fmt_text(b.t)
            }
        })
        .collect();
    if parts.is_empty() {
        "none".into()
    } else {
        parts.join(", ")
    }
}

fn opt_text(v: Option<f64>) -> String {
    v.map_or("none".into(), fmt_text)
}

fn branches(ctx: &Ctx) -> CliResult<Output> {
    let n = ctx.problem.dim();
    if let Some(field) = ctx.problem.field() {
        let x0 = match &ctx.common.at {
            Some(s) => parse_point(s, n, "--at")?,
            None => field.sample_box().center(),
        };
        return eigentime_output(field, &x0);
    }
    let sys = need_system(ctx)?;
    let u = match &ctx.common.at {
        Some(s) => parse_point(s, n, "--at")?,
        None => sys.domain().center(),
    };
    let poly = sys.charpoly(&u)?;
    let set = match ctx.problem.potential() {
        Some(p) => p.potential_branches(&u)?,
        None => sys.real_branches(&u, ctx.search.tol_real)?,
    };
    let text = format!(
        "u = {}\nblow-up polynomial coefficients a0..a{} = {}\nbranches = {}\nsmallest positive = {}\nlargest negative = {}\n",
        fmt_tuple(&u),
        n - 1,
        fmt_tuple(&poly.coeffs),
        branch_text(&set),
        opt_text(set.smallest_positive()),
        opt_text(set.largest_negative()),
    );
    let mut table = Table::new(["t", "multiplicity"]);
    for b in &set.roots {
        table.push(vec![b.t.into(), Cell::Num(b.multiplicity as f64)]);
    }
    let js = json!({
        "u": u,
        "coefficients": poly.coeffs,
        "branches": set.roots,
        "smallest_positive": set.smallest_positive(),
        "largest_negative": set.largest_negative(),
    });
    Ok(Output::new("branches", text, table, js))
}

fn eigentime_output(field: &InitialField, x0: &[f64]) -> CliResult<Output> {
    let n = field.dim();
    let et = field.eigentimes(x0)?;
    let mut text = format!("x0 = {}\n", fmt_tuple(x0));
    if et.is_empty() {
        text.push_str("eigentimes = none\n");
    }
    for e in &et {
        text.push_str(&format!("eigentime {}  h0 = {}\n", fmt_text(e.t), fmt_tuple(&e.h0)));
    }
    let mut headers = vec!["t".to_string()];
    headers.extend(indexed("h", n));
    let mut table = Table::new(headers);
    for e in &et {
        table.push(std::iter::once(e.t).chain(e.h0.iter().copied()).map(Cell::Num).collect());
    }
    Ok(Output::new("eigentimes", text, table, json!({"x0": x0, "eigentimes": et})))
}

fn report_text(r: &CatastropheReport) -> String {
    let mut s = format!(
        "t_c = {}\nu_c = {}\nx_c = {}\nbranch = {}\n",
        fmt_text(r.t_c),
        fmt_tuple(&r.u_c),
        fmt_tuple(&r.x_c),
        match r.branch_kind {
            crate::blowup::BranchKind::Gc => "GC",
            crate::blowup::BranchKind::Blowup => "blowup",
        }
    );
    if let Some(x0) = &r.x0_c {
        s.push_str(&format!("x0_c = {}\n", fmt_tuple(x0)));
    }
    s.push_str(&format!(
        "starts = {}, converged = {:.3}, boundary = {}, relative det = {:.3e}\n",
        r.n_starts, r.converged_fraction, r.boundary, r.relative_det
    ));
    s
}

fn catastrophe(ctx: &Ctx) -> CliResult<Output> {
    let n = ctx.problem.dim();
    let (starts, seed) = (ctx.search.starts, ctx.search.seed);
    let mut runs: Vec<(String, Result<CatastropheReport, Error>)> = Vec::new();
    if let Some(field) = ctx.problem.field() {
        runs.push(("characteristics".into(), field.direct_catastrophe(starts, seed)));
    } else {
        let sys = need_system(ctx)?;
        let mut sels: Vec<(String, BranchSelector)> = Vec::new();
        match ctx.common.branch {
            BranchArg::Positive => sels.push(("positive".into(), BranchSelector::SmallestPositive)),
            BranchArg::Negative => sels.push(("negative".into(), BranchSelector::LargestNegative)),
            BranchArg::Both => {
                sels.push(("positive".into(), BranchSelector::SmallestPositive));
                sels.push(("negative".into(), BranchSelector::LargestNegative));
            }
            BranchArg::Sorted => {}
        }
        if ctx.search.per_branch || ctx.common.branch == BranchArg::Sorted {
            for k in 0..n {
                sels.push((format!("sorted{k}"), BranchSelector::Sorted(k)));
            }
        }
        for (label, sel) in sels {
            runs.push((label, catastrophe_search_by(sys, sel, starts, seed)));
        }
    }
    if runs.iter().all(|(_, r)| r.is_err()) {
        let (_, r) = runs.swap_remove(0);
        return Err(CliError::Numeric(r.expect_err("all failed")));
    }
    let many = runs.len() > 1;
    let mut text = String::new();
    let mut headers = vec!["branch".to_string(), "t_c".into()];
    headers.extend(indexed("u_c", n));
    headers.extend(indexed("x_c", n));
    headers.extend(["branch_kind", "converged_fraction", "boundary", "relative_det"].map(String::from));
    let mut table = Table::new(headers);
    let mut searches = Vec::new();
    let mut primary: Option<Value> = None;
    for (label, r) in &runs {
        if many {
            text.push_str(&format!("[{label}]\n"));
        }
        match r {
            Ok(rep) => {
                text.push_str(&report_text(rep));
                let mut row: Vec<Cell> = vec![label.as_str().into(), rep.t_c.into()];
                row.extend(rep.u_c.iter().chain(&rep.x_c).map(|v| Cell::Num(*v)));
                row.push(serde_json::to_value(rep.branch_kind).expect("kind").as_str().unwrap_or("").into());
                row.push(rep.converged_fraction.into());
                row.push(rep.boundary.into());
                row.push(rep.relative_det.into());
                table.push(row);
                let mut v = serde_json::to_value(rep).expect("serialisable");
                v["branch"] = json!(label);
                if primary.is_none() {
                    primary = Some(v.clone());
                }
                searches.push(v);
            }
            Err(e) => {
                text.push_str(&format!("none: {e}\n"));
                searches.push(json!({"branch": label, "error": e.to_string()}));
            }
        }
    }
    let mut js = primary.expect("at least one success");
    js["searches"] = Value::Array(searches);
    Ok(Output::new("catastrophe", text, table, js))
}

fn characteristics(ctx: &Ctx) -> CliResult<Output> {
    let field = need_field(ctx)?;
    if let Some(t) = ctx.common.t {
        return fold_output(field, t, ctx.search.grid);
    }
    if let Some(at) = &ctx.common.at {
        return eigentime_output(field, &parse_point(at, field.dim(), "--at")?);
    }
    let rep = field.direct_catastrophe(ctx.search.starts, ctx.search.seed)?;
    let n = field.dim();
    let mut text = report_text(&rep);
    let x0 = rep.x0_c.clone().unwrap_or_default();
    let et = field.eigentimes(&x0)?;
    for e in &et {
        text.push_str(&format!("eigentime {}  h0 = {}\n", fmt_text(e.t), fmt_tuple(&e.h0)));
    }
    let mut headers = vec!["t_c".to_string()];
    headers.extend(indexed("x0_c", n));
    headers.extend(indexed("u_c", n));
    headers.extend(indexed("x_c", n));
    let mut table = Table::new(headers);
    table.push(
        std::iter::once(rep.t_c)
            .chain(x0.iter().copied())
            .chain(rep.u_c.iter().copied())
            .chain(rep.x_c.iter().copied())
            .map(Cell::Num)
            .collect(),
    );
    let mut js = serde_json::to_value(&rep).expect("serialisable");
    js["eigentimes"] = serde_json::to_value(&et).expect("serialisable");
    Ok(Output::new("catastrophe", text, table, js))
}

fn fold_output(field: &InitialField, t: f64, grid: usize) -> CliResult<Output> {
    let n = field.dim();
    let lat = domain_lattice(field.sample_box(), grid);
    let region = match field.fold_region(&lat, t) {
        Ok(r) => Some(r),
        Err(Error::EmptyRegion) => None,
        Err(e) => return Err(e.into()),
    };
    let Some(region) = region else {
        let names: Vec<String> = if n == 2 { vec!["x".into(), "y".into()] } else { indexed("x", n) };
        let table = Table::new(std::iter::once("t".to_string()).chain(names));
        let mut out = Output::new(
            "fold_region",
            format!("fold region at t = {}: empty\n", fmt_text(t)),
            table,
            json!({"t": t, "empty": true, "lagrangian": [], "eulerian": [], "points": []}),
        );
        if n == 2 {
            out.sidecar = Some(segments_json(t, &[]));
        }
        return Ok(out);
    };
    let closed = region.lagrangian.iter().filter(|p| p.closed).count();
    let text = format!(
        "fold region at t = {}: {} boundary curves ({} closed), {} boundary points, whole lattice = {}\n",
        fmt_text(t),
        region.lagrangian.len(),
        closed,
        region.points.len(),
        region.whole_lattice
    );
    let js = json!({
        "t": t,
        "empty": false,
        "whole_lattice": region.whole_lattice,
        "lagrangian": region.lagrangian.iter().map(|p| json!({"closed": p.closed, "points": p.points})).collect::<Vec<_>>(),
        "eulerian": region.eulerian.iter().map(|p| json!({"closed": p.closed, "points": p.points})).collect::<Vec<_>>(),
        "points": region.points,
    });
    let mut out = if n == 2 {
        let mut o = Output::new("fold_region", text, polyline_table(t, &region.eulerian, ["x", "y"]), js);
        o.sidecar = Some(segments_json(t, &region.eulerian));
        o
    } else {
        let mut table = Table::new(std::iter::once("t".to_string()).chain(indexed("x", n)));
        for p in &region.points {
            if let Some(x) = field.push(p, t) {
                table.push(std::iter::once(t).chain(x).map(Cell::Num).collect());
            }
        }
        Output::new("fold_region", text, table, js)
    };
    out.kind = "fold_region";
    Ok(out)
}

fn map_scan(ctx: &Ctx) -> CliResult<Output> {
    let t = need_t(ctx)?;
    if let Some(field) = ctx.problem.field() {
        return fold_output(field, t, ctx.search.grid);
    }
    let sys = need_system(ctx)?;
    let n = sys.dim();
    let lat = domain_lattice(sys.domain(), ctx.search.grid);
    let locus = singular_locus(sys, t, &lat)?;
    let mut table = Table::new(std::iter::once("t".to_string()).chain(indexed("u", n)));
    for p in &locus.points {
        table.push(std::iter::once(t).chain(p.iter().copied()).map(Cell::Num).collect());
    }
    let text = if locus.empty {
        format!("singular locus at t = {}: empty\n", fmt_text(t))
    } else {
        format!(
            "singular locus at t = {}: {} curves, {} points\n",
            fmt_text(t),
            locus.polylines.len(),
            locus.points.len()
        )
    };
    let js = json!({
        "t": t,
        "empty": locus.empty,
        "points": locus.points,
        "segments": locus.polylines.iter().map(|p| json!({"closed": p.closed, "points": p.points})).collect::<Vec<_>>(),
    });
    let mut out = Output::new("singular_locus", text, table, js);
    if n == 2 {
        out.sidecar = Some(segments_json(t, &locus.polylines));
    }
    Ok(out)
}

fn timeline(ctx: &Ctx) -> CliResult<Output> {
    let sys = need_system(ctx)?;
    let (a, b) = ctx
        .search
        .t_range
        .ok_or_else(|| CliError::Setup("--t-range is required".into()))?;
    let lat = domain_lattice(sys.domain(), ctx.search.grid);
    let tl = singularity_timeline(sys, a, b, TIMELINE_SAMPLES, &lat)?;
    let mut text = String::new();
    let mut table = Table::new(["lo", "hi", "singular"]);
    for iv in &tl.intervals {
        text.push_str(&format!(
            "[{}, {}]  {}\n",
            fmt_text(iv.lo),
            fmt_text(iv.hi),
            if iv.nonempty { "singular" } else { "empty" }
        ));
        table.push(vec![iv.lo.into(), iv.hi.into(), iv.nonempty.into()]);
    }
    Ok(Output::new("timeline", text, table, json!({"intervals": tl.intervals, "samples": tl.samples})))
}

fn classify2d(ctx: &Ctx) -> CliResult<Output> {
    let sys = need_system(ctx)?;
    let cs = ComplexSystem2D::new(sys.clone())?;
    let points: Vec<Vec<f64>> = match &ctx.common.at {
        Some(s) => vec![parse_point(s, 2, "--at")?],
        None => {
            let lat = domain_lattice(sys.domain(), ctx.search.grid);
            (0..lat.len()).map(|i| lat.node(i)).collect()
        }
    };
    let mut table = Table::new(["u", "v", "Delta", "t_minus", "t_plus", "label", "abs_mu_at_tplus"]);
    let mut rows = Vec::new();
    let mut counts: Vec<(CaseLabel, usize)> = Vec::new();
    for p in &points {
        let c = match cs.classify(p[0], p[1]) {
            Ok(c) => c,
            Err(Error::Eval(_)) if points.len() > 1 => continue,
            Err(e) => return Err(e.into()),
        };
        let mu = c.t_plus.and_then(|t| cs.beltrami_mu(p[0], p[1], t).ok()).map(|m| m.abs_mu);
        table.push(vec![
            p[0].into(),
            p[1].into(),
            c.delta.into(),
            c.t_minus.into(),
            c.t_plus.into(),
            c.label.as_str().into(),
            mu.into(),
        ]);
        match counts.iter_mut().find(|(l, _)| *l == c.label) {
            Some(e) => e.1 += 1,
            None => counts.push((c.label, 1)),
        }
        rows.push(json!({
            "u": p[0], "v": p[1], "Delta": c.delta, "t_minus": c.t_minus, "t_plus": c.t_plus,
            "label": c.label, "abs_mu_at_tplus": mu,
        }));
    }
    let text = if points.len() == 1 && table.rows.len() == 1 {
        let r = &rows[0];
        let f = |k: &str| r[k].as_f64().map_or("none".to_string(), fmt_text);
        format!(
            "u = {}\nDelta = {}\nt_minus = {}\nt_plus = {}\nlabel = {}\n|mu| at t_plus = {}\n",
            fmt_tuple(&points[0]),
            f("Delta"),
            f("t_minus"),
            f("t_plus"),
            r["label"].as_str().unwrap_or(""),
            f("abs_mu_at_tplus"),
        )
    } else {
        counts.sort_by_key(|(l, _)| l.as_str());
        let mut s = format!("{} points classified\n", table.rows.len());
        for (l, k) in &counts {
            s.push_str(&format!("{:<14} {k}\n", l.as_str()));
        }
        s
    };
    Ok(Output::new("classify2d", text, table, json!({"points": rows})))
}

fn validate(common: &Common) -> CliResult<Output> {
    let seed = common.seed.unwrap_or(0);
    let checks: Vec<Check> = match &common.file {
        Some(path) => {
            let p = load_file(common)?;
            problem_checks(&path.display().to_string(), &p, seed)
        }
        None => demo_suite(seed),
    };
    let mut text = String::new();
    let mut table = Table::new(["check", "passed", "value", "tolerance", "detail"]);
    for c in &checks {
        text.push_str(&format!(
            "{} {}  (value {:.3e}, tolerance {:.1e}; {})\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance,
            c.detail
        ));
        table.push(vec![
            c.name.as_str().into(),
            c.passed.into(),
            c.value.into(),
            c.tolerance.into(),
            c.detail.as_str().into(),
        ]);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    text.push_str(&format!("{} checks, {} failed\n", checks.len(), failed));
    let mut out = Output::new("validate", text, table, json!({"checks": checks, "failed": failed}));
    out.code = if failed == 0 { 0 } else { 2 };
    Ok(out)
}
