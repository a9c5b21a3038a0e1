use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use ivgibbs::findings;
use ivgibbs::lattice::FiniteTree;
use ivgibbs::oracle::{Oracle, SignConvention};
use ivgibbs::recursion::{ti_field_from_scalar_root, EdgeField, FieldAssignment};
use ivgibbs::scan::{self, AxisSpec, OutputFormat, ScanGrid};
use ivgibbs::solver::{self, SolutionSet};
use ivgibbs::thermo;
use ivgibbs::{Error, ModelParams};

const EXIT_USAGE: u8 = 2;
const EXIT_DOMAIN: u8 = 3;
const EXIT_IO: u8 = 4;

/// Translation-invariant Gibbs measures of the Ising-Vannimenus model on Cayley trees.
#[derive(Debug, Parser)]
#[command(name = "ivgibbs", version, allow_negative_numbers = true)]
struct Cli {
    #[command(flatten)]
    params: ParamArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Nearest-neighbour coupling.
    #[arg(long = "J", global = true, allow_hyphen_values = true)]
    j: Option<f64>,
    /// Prolonged next-nearest-neighbour coupling.
    #[arg(long = "Jp", global = true, allow_hyphen_values = true)]
    jp: Option<f64>,
    /// Temperature.
    #[arg(long = "T", global = true, conflicts_with = "beta", allow_hyphen_values = true)]
    t: Option<f64>,
    /// Inverse temperature (alternative to --T).
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Branching number of the tree [default: 2].
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Significant digits in numeric output [default: 9].
    #[arg(long, global = true)]
    precision: Option<usize>,
    /// File of `key = value` lines (J, Jp, T, beta, k, precision); flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Symmetric translation-invariant solutions.
    Solve {
        #[arg(long)]
        json: bool,
    },
    /// Non-symmetric solutions of the reduced k = 2 system.
    Nonsym {
        #[arg(long)]
        json: bool,
    },
    /// Exact-enumeration checks for the boundary field of every symmetric root.
    Verify {
        #[arg(long)]
        n: usize,
    },
    /// Closed-form free energy as CSV.
    FreeEnergy(CurveArgs),
    /// Entropy at fixed field as CSV.
    Entropy(CurveArgs),
    /// Parameter sweep.
    Scan {
        /// `NAME=min:max:steps` with NAME one of J, Jp, T; repeatable.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        /// Output file; stdout when omitted or `-`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Exact finite-volume report.
    Oracle {
        #[arg(long)]
        n: usize,
        /// `zero` or `ti-root=<i>`.
        #[arg(long, default_value = "zero")]
        field: String,
    },
    /// Closed-form versus enumeration cross-checks as JSON.
    Findings {
        /// Output file; stdout when omitted or `-`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct CurveArgs {
    /// 1-based index of the symmetric root (ascending); all roots when omitted.
    #[arg(long)]
    root: Option<usize>,
    /// `a:b:steps` temperature grid; the field stays at the root found at --T.
    #[arg(long = "T-range")]
    t_range: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Lib(Error::Io {
            path: "<stdout>".into(),
            source: e,
        })
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parameters after merging flags over the config file.
struct Resolved {
    j: Option<f64>,
    jp: Option<f64>,
    t: Option<f64>,
    beta: Option<f64>,
    k: usize,
    precision: usize,
}

fn read_config(path: &Path) -> CliResult<HashMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut map = HashMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("{}:{}: expected key = value", path.display(), no + 1))
        })?;
        let key = key.trim();
        if !["J", "Jp", "T", "beta", "k", "precision"].contains(&key) {
            return Err(CliError::Usage(format!("{}:{}: unknown key `{key}`", path.display(), no + 1)));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("cannot parse {key} = `{value}`")))
}

impl Resolved {
    fn new(args: &ParamArgs) -> CliResult<Self> {
        let cfg = match &args.config {
            Some(p) => read_config(p)?,
            None => HashMap::new(),
        };
        let from_cfg = |key: &str| -> CliResult<Option<f64>> { cfg.get(key).map(|v| parse_value(key, v)).transpose() };
        let (t, beta) = if args.t.is_some() || args.beta.is_some() {
            (args.t, args.beta)
        } else {
            let (t, beta) = (from_cfg("T")?, from_cfg("beta")?);
            if t.is_some() && beta.is_some() {
                return Err(CliError::Usage("config sets both T and beta".into()));
            }
            (t, beta)
        };
        let k = match args.k {
            Some(k) => k,
            None => cfg.get("k").map(|v| parse_value("k", v)).transpose()?.unwrap_or(2),
        };
        let precision = match args.precision {
            Some(p) => p,
            None => cfg.get("precision").map(|v| parse_value("precision", v)).transpose()?.unwrap_or(9),
        };
        if precision == 0 || precision > 17 {
            return Err(CliError::Usage("--precision must be between 1 and 17".into()));
        }
        Ok(Resolved {
            j: args.j.or(from_cfg("J")?),
            jp: args.jp.or(from_cfg("Jp")?),
            t,
            beta,
            k,
            precision,
        })
    }

    fn temperature(&self) -> Option<f64> {
        self.t.or(self.beta.map(|b| 1.0 / b))
    }

    fn params(&self) -> CliResult<ModelParams> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| CliError::Usage(format!("missing --{name}")));
        let j = need(self.j, "J")?;
        let jp = need(self.jp, "Jp")?;
        let p = match (self.t, self.beta) {
            (Some(t), _) => ModelParams::new(j, jp, t, self.k)?,
            (None, Some(b)) => ModelParams::from_beta(j, jp, b, self.k)?,
            (None, None) => return Err(CliError::Usage("missing --T (or --beta)".into())),
        };
        Ok(p)
    }

    fn num(&self, x: f64) -> String {
        scan::format_number(x, self.precision)
    }

    /// Rounds every floating-point number in a JSON value.
    fn round_json(&self, v: Value) -> Value {
        match v {
            Value::Number(n) if n.is_f64() => {
                let x = scan::round_sig(n.as_f64().unwrap_or(f64::NAN), self.precision);
                serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
            }
            Value::Array(a) => Value::Array(a.into_iter().map(|x| self.round_json(x)).collect()),
            Value::Object(o) => Value::Object(o.into_iter().map(|(k, x)| (k, self.round_json(x))).collect()),
            other => other,
        }
    }

    fn print_json<T: Serialize>(&self, value: &T) -> CliResult<()> {
        let v = serde_json::to_value(value).map_err(|e| Error::Numerical(e.to_string()))?;
        let mut out = io::stdout().lock();
        serde_json::to_writer_pretty(&mut out, &self.round_json(v)).map_err(io::Error::from)?;
        writeln!(out)?;
        Ok(())
    }
}

const CONVENTION_NOTE: &str = "u = e^h is a positive root of u = (c d u^2 + 1)/(c u^2 + d) (k = 2) with \
c = exp(2 beta J), d = exp(2 beta Jp); U = A u^2 = exp(2 beta J) u^2 solves U = A((B U + 1)/(U + B))^k; \
the boundary field is h_{++} = h_{+-} = h_{-+} = h_{--} = h; roots are listed in ascending order";

fn cmd_solve(r: &Resolved, json: bool) -> CliResult<()> {
    let params = r.params()?;
    let set = solver::solve_ti_symmetric(&params)?;
    let report = solver::count_solutions(&params)?;
    let nonsym = if params.k == 2 {
        solver::solve_nonsymmetric_k2(&params)?
    } else {
        Vec::new()
    };
    if json {
        let roots: Vec<Value> = set
            .roots
            .iter()
            .map(|x| json!({"u": x.u, "h": x.h, "residual": x.residual, "stability": x.stability}))
            .collect();
        let nonsym: Vec<Value> = nonsym
            .iter()
            .map(|s| json!({"x": s.x, "m": s.m, "t": s.t, "residual": s.residual}))
            .collect();
        return r.print_json(&json!({
            "params": params,
            "convention_note": CONVENTION_NOTE,
            "roots": roots,
            "nonsym": nonsym,
            "prop51": report,
        }));
    }
    print_solution_text(r, &set)?;
    let mut out = io::stdout().lock();
    for s in &nonsym {
        writeln!(
            out,
            "non-symmetric: x={} m={} t={} residual={}",
            r.num(s.x),
            r.num(s.m),
            r.num(s.t),
            r.num(s.residual)
        )?;
    }
    if let (Some(pred), Some(agree)) = (report.prediction, report.agree) {
        let pred = match pred {
            solver::CountPrediction::One => "1",
            solver::CountPrediction::OneToThree => "1..3",
        };
        writeln!(out, "criterion (c <= 1 or d < 3 => 1): predicted {pred}, found {}, agree={agree}", report.empirical)?;
    }
    Ok(())
}

fn print_solution_text(r: &Resolved, set: &SolutionSet) -> CliResult<()> {
    let w = set.params.weights();
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "J={} Jp={} T={} k={} beta={} c={} d={}",
        r.num(set.params.j),
        r.num(set.params.jp),
        r.num(set.params.t),
        set.params.k,
        r.num(w.beta),
        r.num(w.c),
        r.num(w.d)
    )?;
    writeln!(out, "{} root(s)", set.count())?;
    for (i, x) in set.roots.iter().enumerate() {
        writeln!(
            out,
            "root {}: u={} h={} residual={} stability={}",
            i + 1,
            r.num(x.u),
            r.num(x.h),
            r.num(x.residual),
            serde_json::to_value(x.stability).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
        )?;
    }
    Ok(())
}

fn cmd_nonsym(r: &Resolved, json: bool) -> CliResult<()> {
    let params = r.params()?;
    let sols = solver::solve_nonsymmetric_k2(&params)?;
    if json {
        return r.print_json(&sols);
    }
    let mut out = io::stdout().lock();
    writeln!(out, "{} solution(s)", sols.len())?;
    for s in &sols {
        writeln!(out, "x={} m={} t={} residual={}", r.num(s.x), r.num(s.m), r.num(s.t), r.num(s.residual))?;
    }
    Ok(())
}

fn root_field(params: &ModelParams, root: usize) -> CliResult<(f64, EdgeField)> {
    let set = solver::solve_ti_symmetric(params)?;
    let x = set.roots.get(root.wrapping_sub(1)).ok_or_else(|| {
        CliError::Lib(Error::InvalidParams(format!(
            "root {root} requested but only {} exist",
            set.count()
        )))
    })?;
    Ok((x.u, ti_field_from_scalar_root(x.u, &params.weights(), 0.0)?))
}

fn cmd_verify(r: &Resolved, n: usize) -> CliResult<()> {
    let params = r.params()?;
    if n < 2 {
        return Err(Error::DomainMismatch("verify needs --n >= 2".into()).into());
    }
    let set = solver::solve_ti_symmetric(&params)?;
    let tree = FiniteTree::new(params.k, n)?;
    let mut rows = Vec::new();
    for i in 1..=set.count() {
        let (u, edge) = root_field(&params, i)?;
        let field = FieldAssignment::uniform(&tree, edge);
        let oracle = Oracle::new(&tree, params, &field);
        let tel = oracle.telescoping(n)?;
        rows.push(json!({
            "root": i,
            "u": u,
            "compat_max_error": oracle.compatibility_error(n)?,
            "telescoping_gap": tel.relative_gap,
            "sector_spread": tel.sector_spread,
        }));
    }
    r.print_json(&json!({"params": params, "n": n, "roots": rows}))
}

fn cmd_curve(r: &Resolved, args: &CurveArgs) -> CliResult<()> {
    let params = r.params()?;
    let set = solver::solve_ti_symmetric(&params)?;
    let roots: Vec<f64> = match args.root {
        Some(i) => vec![root_field(&params, i)?.0.ln()],
        None => set.roots.iter().map(|x| x.h).collect(),
    };
    let temps = match &args.t_range {
        Some(spec) => {
            let parts: Vec<&str> = spec.split(':').collect();
            if parts.len() != 3 {
                return Err(CliError::Usage(format!("--T-range `{spec}` must look like a:b:steps")));
            }
            thermo::temperature_grid(
                parse_value("T-range", parts[0])?,
                parse_value("T-range", parts[1])?,
                parse_value("T-range", parts[2])?,
            )?
        }
        None => vec![params.t],
    };
    let mut out = io::stdout().lock();
    writeln!(out, "T,beta,h,F,S_numeric,S_paper_formula")?;
    for h in roots {
        for p in thermo::curve(&params, h, &temps)? {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.num(p.t),
                r.num(p.beta),
                r.num(p.h),
                r.num(p.f),
                r.num(p.s_numeric),
                r.num(p.s_paper_formula)
            )?;
        }
    }
    Ok(())
}

fn cmd_scan(r: &Resolved, axes: &[String], out: Option<&Path>, format: FormatArg) -> CliResult<()> {
    let specs = axes
        .iter()
        .map(|a| a.parse::<AxisSpec>())
        .collect::<ivgibbs::Result<Vec<_>>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let swept = |axis: scan::Axis| specs.iter().any(|s| s.axis == axis);
    let fixed = |v: Option<f64>, axis: scan::Axis| -> CliResult<f64> {
        match (v, swept(axis)) {
            (Some(v), _) => Ok(v),
            (None, true) => Ok(if axis == scan::Axis::T { 1.0 } else { 0.0 }),
            (None, false) => Err(CliError::Usage(format!("--{axis} is needed when it is not swept"))),
        }
    };
    let base = ModelParams::new(
        fixed(r.j, scan::Axis::J)?,
        fixed(r.jp, scan::Axis::Jp)?,
        fixed(r.temperature(), scan::Axis::T)?,
        r.k,
    )?;
    let grid = ScanGrid::new(specs)?;
    let points = scan::run_scan(&grid, &base)?;
    let format = match format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Json => OutputFormat::Json,
    };
    scan::emit(&points, format, out, r.precision)?;
    Ok(())
}

fn cmd_oracle(r: &Resolved, n: usize, field: &str) -> CliResult<()> {
    let params = r.params()?;
    let edge = match field {
        "zero" => EdgeField::default(),
        other => {
            let i = other
                .strip_prefix("ti-root=")
                .and_then(|i| i.parse::<usize>().ok())
                .ok_or_else(|| CliError::Usage(format!("--field `{other}` must be zero or ti-root=<i>")))?;
            root_field(&params, i)?.1
        }
    };
    let tree = FiniteTree::new(params.k, n)?;
    let field = FieldAssignment::uniform(&tree, edge);
    let oracle = Oracle::new(&tree, params, &field);
    let ln_z = oracle.ln_partition(n)?;
    let (compat, gap) = if n >= 2 {
        (Some(oracle.compatibility_error(n)?), Some(oracle.telescoping(n)?.relative_gap))
    } else {
        (None, None)
    };
    r.print_json(&json!({
        "n": n,
        "Z_n": ln_z.exp(),
        "ln_Z_n": ln_z,
        "compat_max_error": compat,
        "telescoping_gap": gap,
        "free_energy_paper": oracle.free_energy(n, SignConvention::Plus)?,
        "free_energy_physics": oracle.free_energy(n, SignConvention::Minus)?,
    }))
}

fn cmd_findings(r: &Resolved, out: Option<&Path>) -> CliResult<()> {
    let params = if r.j.is_none() && r.jp.is_none() && r.temperature().is_none() {
        findings::reference_params()
    } else {
        r.params()?
    };
    let report = findings::generate(&params)?;
    match out {
        Some(p) if p != Path::new("-") => findings::write_report(&report, p)?,
        _ => r.print_json(&report)?,
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let r = Resolved::new(&cli.params)?;
    match &cli.command {
        Command::Solve { json } => cmd_solve(&r, *json),
        Command::Nonsym { json } => cmd_nonsym(&r, *json),
        Command::Verify { n } => cmd_verify(&r, *n),
        Command::FreeEnergy(args) | Command::Entropy(args) => cmd_curve(&r, args),
        Command::Scan { axes, out, format } => cmd_scan(&r, axes, out.as_deref(), *format),
        Command::Oracle { n, field } => cmd_oracle(&r, *n, field),
        Command::Findings { out } => cmd_findings(&r, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io { .. } => EXIT_IO,
                _ => EXIT_DOMAIN,
            })
        }
    }
}
