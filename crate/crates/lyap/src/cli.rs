//! Command-line front end. `main` returns the process exit code: 0 on
//! success, 1 on usage or input errors, 2 when catalog verification finds a
//! mismatch.

use crate::analyze::{
    analyze_groups, best_rate, best_window, verify_catalog, write_report_csv, RateQuery, TDomain,
};
use crate::catalog;
use crate::enumerate::{enumerate, write_groups_csv};
use crate::pq_core::OdeSystemSpec;
use crate::simulate::{
    integrate, measure_rate, run_restart, LyapunovCase, LyapunovId, MonotonicityReport,
    QuadraticObjective,
    RestartSpec, SimSetup,
};
use crate::symexpr::{Bindings, GammaForm, Param};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "lyap", version, about = "Lyapunov function search for optimization flows")]
pub struct Cli {
    /// Worker threads for the analysis pool.
    #[arg(long, env = "LYAP_JOBS", global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Enumerate all pairs of a system and maximise k for each group.
    Search(SearchArgs),
    /// Reproduce the catalog of known rates.
    VerifyCatalog(VerifyArgs),
    /// Integrate a system on a quadratic and fit its rate.
    Simulate(SimulateArgs),
    /// Run the restart scheme.
    Restart(RestartArgs),
    /// Write the deduplicated groups of a system.
    DumpGroups(DumpArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GammaArg {
    Linear,
    Log,
    Power,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    /// Catalog name or path to a TOML spec.
    #[arg(long)]
    pub spec: String,
    #[arg(long, value_enum)]
    pub gamma: GammaArg,
    /// α for the power form, e.g. 1/2.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long = "L", default_value_t = 4.0)]
    pub big_l: f64,
    /// name=value
    #[arg(long = "param")]
    pub params: Vec<String>,
    /// name=lo:step:hi or name=v1,v2,...
    #[arg(long = "param-grid")]
    pub grids: Vec<String>,
    /// all | eventually | from:T | window:LO:HI
    #[arg(long, default_value = "all")]
    pub t_domain: String,
    /// λ, θ ∈ [0, ∞) instead of [μ, L].
    #[arg(long)]
    pub convex: bool,
    /// Check this k instead of maximising.
    #[arg(long)]
    pub k: Option<f64>,
    /// CSV report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long = "L", default_value_t = 4.0)]
    pub big_l: f64,
    /// Markdown summary path (also printed).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub spec: String,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long = "L", default_value_t = 4.0)]
    pub big_l: f64,
    #[arg(long, default_value_t = 10)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 100.0)]
    pub t1: f64,
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    pub dt: f64,
    /// Clock for the rate fit.
    #[arg(long, value_enum, default_value = "linear")]
    pub gamma: GammaArg,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long = "param")]
    pub params: Vec<String>,
    /// Record every n-th step.
    #[arg(long, default_value_t = 10)]
    pub every: usize,
    /// Random x0 in [-1, 1]^dim instead of all-ones.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Add the closed-form Lyapunov function with this id as a column.
    #[arg(long)]
    pub lyapunov: Option<String>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RestartArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub l: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long = "L", default_value_t = 4.0)]
    pub big_l: f64,
    #[arg(long, default_value_t = 20)]
    pub rounds: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DumpFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct DumpArgs {
    #[arg(long)]
    pub spec: String,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: DumpFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Mismatch,
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Usage(e.to_string())
    }
}

type Res = Result<(), CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn load_spec(s: &str) -> Result<OdeSystemSpec, CliError> {
    if let Some(spec) = catalog::by_name(s) {
        return Ok(spec);
    }
    let path = std::path::Path::new(s);
    if !path.exists() {
        let names: Vec<String> = catalog::all().into_iter().map(|s| s.name).collect();
        return Err(usage(format!("unknown system `{s}` (catalog: {})", names.join(", "))));
    }
    let text = std::fs::read_to_string(path)?;
    OdeSystemSpec::from_toml(&text).map_err(|e| usage(format!("{s}: {e}")))
}

fn parse_gamma(g: GammaArg, alpha: Option<&str>) -> Result<GammaForm, CliError> {
    Ok(match g {
        GammaArg::Linear => GammaForm::Linear,
        GammaArg::Log => GammaForm::Log,
        GammaArg::Power => {
            let alpha = match alpha {
                None => None,
                Some(a) => {
                    let e: crate::symexpr::Expr = a.parse().map_err(|e| usage(format!("alpha: {e}")))?;
                    Some(e.as_constant().ok_or_else(|| usage("alpha must be a number"))?)
                }
            };
            GammaForm::Power { alpha }
        }
    })
}

fn split_kv(s: &str) -> Result<(Param, &str), CliError> {
    let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("expected name=value, got `{s}`")))?;
    let p = Param::from_name(k.trim()).ok_or_else(|| usage(format!("unknown parameter `{k}`")))?;
    Ok((p, v.trim()))
}

fn num(s: &str) -> Result<f64, CliError> {
    s.parse::<f64>().map_err(|_| usage(format!("not a number: `{s}`")))
}

pub fn parse_param(s: &str) -> Result<(Param, f64), CliError> {
    let (p, v) = split_kv(s)?;
    Ok((p, num(v)?))
}

/// `a=0:0.1:4` (inclusive) or `a=1,2,3`.
pub fn parse_grid(s: &str) -> Result<(Param, Vec<f64>), CliError> {
    let (p, v) = split_kv(s)?;
    let parts: Vec<&str> = v.split(':').collect();
    let vals = match parts.as_slice() {
        [lo, step, hi] => {
            let (lo, step, hi) = (num(lo)?, num(step)?, num(hi)?);
            if !(step > 0.0) || hi < lo {
                return Err(usage(format!("bad range `{v}`")));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| lo + step * i as f64).collect()
        }
        [list] => list.split(',').map(num).collect::<Result<_, _>>()?,
        _ => return Err(usage(format!("bad grid `{v}`"))),
    };
    Ok((p, vals))
}

pub fn parse_domain(s: &str) -> Result<TDomain, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let d = match parts.as_slice() {
        ["all"] => TDomain::AllPositive,
        ["eventually"] => TDomain::Eventually,
        ["from", t] => TDomain::From(num(t)?),
        ["window", a, b] => TDomain::Window(num(a)?, num(b)?),
        _ => return Err(usage(format!("bad t-domain `{s}`"))),
    };
    match d {
        TDomain::From(t) if !(t > 0.0) => Err(usage("from:T needs T > 0")),
        TDomain::Window(a, b) if !(a > 0.0 && b > a) => Err(usage("window needs 0 < LO < HI")),
        d => Ok(d),
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn search(a: SearchArgs) -> Res {
    let spec = load_spec(&a.spec)?;
    let gamma = parse_gamma(a.gamma, a.alpha.as_deref())?;
    let mut q = RateQuery::new(gamma, a.mu, a.big_l).domain(parse_domain(&a.t_domain)?);
    if a.convex {
        q = q.convex();
    }
    for p in &a.params {
        let (p, v) = parse_param(p)?;
        q = q.param(p, v);
    }
    for g in &a.grids {
        let (p, v) = parse_grid(g)?;
        q = q.param_grid(p, v);
    }
    if let Some(k) = a.k {
        q = q.with_k(k);
    }
    let e = enumerate(&spec)?;
    let results = analyze_groups(&e.groups, &q);
    let header = format!(
        "system={} gamma={} mu={} L={} curvature={:?} t_domain={} k=dimensionless rate parameter",
        spec.name, q.gamma, q.mu, q.l, q.curvature, q.t_domain
    );
    if let Some(p) = &a.out {
        write_report_csv(BufWriter::new(File::create(p)?), &header, &e.groups, &results)?;
    }
    let best = if matches!(q.t_domain, TDomain::Window(..)) && q.fixed_k.is_some() {
        best_window(&results)
    } else {
        best_rate(&results)
    };
    let mut hist: BTreeMap<String, usize> = BTreeMap::new();
    for (_, r) in &results {
        let key = r.as_ref().map_or("excluded".to_string(), |r| format!("{:.6}", r.k_max));
        *hist.entry(key).or_default() += 1;
    }
    let mut out = io::stdout().lock();
    writeln!(out, "# search: {}\n", spec.name)?;
    writeln!(out, "- query: {header}")?;
    writeln!(out, "- sequences: {}", e.raw_count)?;
    writeln!(out, "- groups: {}", e.groups.len())?;
    match best {
        Some(b) => {
            writeln!(out, "- best k: {:.6} (group {}, {})", b.k_max, b.group_id, e.groups[b.group_id].members[0])?;
            writeln!(out, "- params: {}", b.params_string())?;
            writeln!(out, "- validity: {}", b.validity)?;
            writeln!(out, "- status: {}", b.status)?;
        }
        None => writeln!(out, "- no group is feasible")?,
    }
    writeln!(out, "\n| k | groups |\n|---|---|")?;
    for (k, n) in hist {
        writeln!(out, "| {k} | {n} |")?;
    }
    if best.is_none() && matches!(q.t_domain, TDomain::Window(..)) {
        return Err(usage("infeasible window"));
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Res {
    let rep = verify_catalog(a.mu, a.big_l);
    let md = rep.to_markdown();
    print!("{md}");
    if let Some(p) = &a.out {
        std::fs::write(p, &md)?;
    }
    if rep.all_pass() {
        Ok(())
    } else {
        Err(CliError::Mismatch)
    }
}

fn lyapunov_id(s: &str) -> Result<LyapunovId, CliError> {
    LyapunovId::ALL
        .into_iter()
        .find(|i| i.name() == s)
        .ok_or_else(|| usage(format!("unknown Lyapunov function `{s}`")))
}

fn simulate(a: SimulateArgs) -> Res {
    if !(a.dt > 0.0) {
        return Err(usage("dt must be positive"));
    }
    if a.dim == 0 || a.every == 0 {
        return Err(usage("dim and every must be positive"));
    }
    let spec = load_spec(&a.spec)?;
    let gamma = parse_gamma(a.gamma, a.alpha.as_deref())?;
    let mut params = Bindings::new().with(Param::Mu, a.mu).with(Param::L, a.big_l);
    if let GammaForm::Power { alpha: Some(al) } = &gamma {
        params.set(Param::Alpha, crate::symexpr::big_f64(al));
    }
    for p in &a.params {
        let (p, v) = parse_param(p)?;
        params.set(p, v);
    }
    let obj = QuadraticObjective::log_spaced(a.dim, a.mu, a.big_l);
    let mut setup = SimSetup::standard(a.dim, a.t0, a.t1, a.dt).every(a.every);
    if let Some(seed) = a.seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        setup.x0 = (0..a.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    }
    let traj = integrate(&spec, &params, &obj, &setup)?;
    let energy = match &a.lyapunov {
        Some(id) => {
            let mut case = LyapunovCase::standard(lyapunov_id(id)?, a.mu, a.big_l);
            if let Some(k) = a.k {
                case = case.with_k(k);
            }
            case.objective = obj.clone();
            case.params = params.clone();
            Some((case.id, case.k, case.energy_series(&traj)))
        }
        None => None,
    };
    let fit = measure_rate(&traj, &gamma, &params);
    let header = format!(
        "system={} mu={} L={} dim={} t0={} t1={} dt={} gamma={} t=time gap=f(x)-f* E=Lyapunov value",
        spec.name, a.mu, a.big_l, a.dim, a.t0, a.t1, a.dt, gamma
    );
    if let Some(p) = &a.csv {
        traj.write_csv(BufWriter::new(File::create(p)?), &header, energy.as_ref().map(|(_, _, e)| ("E_value", e.as_slice())))?;
    }
    let mut out = io::stdout().lock();
    writeln!(out, "# simulate: {}\n", spec.name)?;
    writeln!(out, "- samples: {}", traj.len())?;
    writeln!(out, "- final gap: {:.6e}", traj.final_gap())?;
    match fit {
        Ok(fit) => writeln!(
            out,
            "- fitted k ({} clock): {:.6} on [{:.4}, {:.4}], residual {:.3e}{}",
            gamma,
            fit.k,
            fit.t_lo,
            fit.t_hi,
            fit.residual,
            if fit.truncated { ", truncated by underflow" } else { "" }
        )?,
        Err(e) => writeln!(out, "- fitted k: unavailable ({e})")?,
    }
    if let Some((id, k, e)) = &energy {
        let rep = MonotonicityReport::from_series(*id, *k, e);
        writeln!(out, "- {id} at k={k}: max relative rise {:.3e} over {} samples", rep.max_rise, rep.samples)?;
    }
    Ok(())
}

fn restart(a: RestartArgs) -> Res {
    if !(a.dt > 0.0) {
        return Err(usage("dt must be positive"));
    }
    let mut spec = RestartSpec::standard(a.l, a.c, a.mu, a.big_l, a.rounds);
    spec.dt = a.dt;
    let rep = run_restart(&spec)?;
    if rep.assumption_violated {
        eprintln!("warning: rho = {:.6} > 1, contraction is not guaranteed", rep.constants.rho);
    }
    let header = format!(
        "restart l={} c={} mu={} L={} rounds={} dt={} g=f-f*+|v+l*sqrt(mu)(x-x*)|^2/2",
        a.l, a.c, a.mu, a.big_l, a.rounds, a.dt
    );
    if let Some(p) = &a.csv {
        rep.write_csv(BufWriter::new(File::create(p)?), &header)?;
    }
    let k = rep.constants;
    let mut out = io::stdout().lock();
    writeln!(out, "# restart\n")?;
    writeln!(out, "- T = {:.6}, T/c = {:.6}, r = {:.6}", k.t_end, k.t_start, k.r)?;
    writeln!(out, "- rho = {:.6}, h = {:.6}, C = {:.6}", k.rho, k.h, k.c_const)?;
    writeln!(out, "- max factor g_i/g_(i-1): {:.6e}", rep.max_factor())?;
    writeln!(out, "- chained bound: {}", if rep.chained_bound_holds(1e-9) { "holds" } else { "VIOLATED" })?;
    Ok(())
}

fn dump(a: DumpArgs) -> Res {
    let spec = load_spec(&a.spec)?;
    let e = enumerate(&spec)?;
    let mut w = output(&a.out)?;
    match a.format {
        DumpFormat::Csv => write_groups_csv(&mut w, &e)?,
        DumpFormat::Json => {
            let groups: Vec<serde_json::Value> = e
                .groups
                .iter()
                .map(|g| {
                    serde_json::json!({
                        "group_id": g.group_id,
                        "members": g.members.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
                        "pair": g.representative.to_json(),
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "system": e.system,
                "sequences": e.raw_count,
                "max_gamma_order": e.max_gamma_order,
                "groups": groups,
            });
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs with explicit arguments (argv[0] included) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.jobs {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let r = match cli.command {
        Command::Search(a) => search(a),
        Command::VerifyCatalog(a) => verify(a),
        Command::Simulate(a) => simulate(a),
        Command::Restart(a) => restart(a),
        Command::DumpGroups(a) => dump(a),
    };
    match r {
        Ok(()) => 0,
        Err(CliError::Mismatch) => 2,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}

pub fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(run(std::env::args_os()) as u8)
}
