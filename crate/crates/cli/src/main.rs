use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use hardy_core::barriers::{
    choose_origin_params, default_t_grid, log_radii, InfinityBarrier, OriginBarrier, StrongForm,
};
use hardy_core::config::RunConfig;
use hardy_core::expansion::default_order;
use hardy_core::io::{read_solution, to_json, write_solution};
use hardy_core::verify::{
    bounds_check, comparison_check, expansion_check, infinity_limit, origin_limit, rate_fit, RateQuantity,
    LIMIT_THRESHOLD,
};
use hardy_core::{build_series, find_ground_state, solve_exponents, Error, Nonlinearity, RadialSolution};
use rayon::prelude::*;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "hardy",
    version,
    about = "Ground states and asymptotics for the p-Laplacian with a Hardy potential"
)]
struct Cli {
    #[command(flatten)]
    opts: Overrides,
    #[command(subcommand)]
    cmd: Command,
}

/// Command-line values take precedence over the config file.
#[derive(Args)]
struct Overrides {
    /// Run configuration file (`[section]` headers, `key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long = "N", global = true)]
    dim: Option<f64>,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    m: Option<f64>,
    /// Nonlinearity as `coeff:exponent` pairs separated by `;`.
    #[arg(long, global = true)]
    terms: Option<String>,
    #[arg(long, global = true)]
    r0: Option<f64>,
    #[arg(long, global = true)]
    r_max: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    tol_c: Option<f64>,
    /// Expansion order; defaults to the integer `k` with `k <= p < k+1`.
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "HARDY_OUTPUT_ROOT")]
    out: Option<PathBuf>,
    /// File-name stem for every output.
    #[arg(long, global = true)]
    stem: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Critical exponents γ₁ < (N-p)/p < γ₂.
    Exponents,
    /// Expansion coefficients c₀ … c_k at infinity.
    Coeffs,
    /// Shoot for the ground state and store both chart trajectories.
    Solve,
    /// Run the limit, rate, expansion, bound and comparison checks.
    Verify {
        /// Origin-chart CSV; defaults to `<out>/<stem>_origin.csv`.
        #[arg(long)]
        origin: Option<PathBuf>,
        /// Infinity-chart CSV; defaults to `<out>/<stem>_infinity.csv`.
        #[arg(long)]
        infinity: Option<PathBuf>,
    },
    /// Tabulate the barrier functions with their sources and residuals.
    Barriers {
        #[arg(long, default_value_t = 0.3)]
        delta: f64,
    },
    /// Solve and verify every point of the `[sweep]` grid in parallel.
    Sweep,
}

/// Exit status: 0 pass, 1 verification failed, 2 invalid input, 3 no convergence.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::NoConvergence(_)
            | Error::StepSizeUnderflow { .. }
            | Error::SameClassification(_)
            | Error::NoGroundState(_),
        ) => 3,
        Some(Error::DegenerateFit(_) | Error::Domain(_) | Error::BoundaryOrdering(_)) => 1,
        _ => 2,
    }
}

fn load_config(o: &Overrides) -> anyhow::Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(Error::from)
                .with_context(|| format!("reading {}", path.display()))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    let set = |dst: &mut f64, src: Option<f64>| {
        if let Some(v) = src {
            *dst = v;
        }
    };
    set(&mut cfg.params.dim, o.dim);
    set(&mut cfg.params.p, o.p);
    set(&mut cfg.params.mu, o.mu);
    set(&mut cfg.params.m, o.m);
    set(&mut cfg.solver.r0, o.r0);
    set(&mut cfg.solver.r_max, o.r_max);
    set(&mut cfg.solver.tol, o.tol);
    set(&mut cfg.solver.tol_c, o.tol_c);
    if let Some(t) = &o.terms {
        cfg.f = Nonlinearity::from_terms(Nonlinearity::decode_terms(t)?);
    }
    if o.order.is_some() {
        cfg.expansion_order = o.order;
    }
    if let Some(d) = &o.out {
        cfg.output.dir = d.clone();
    }
    if let Some(s) = &o.stem {
        cfg.output.stem = s.clone();
    }
    Ok(cfg)
}

fn out_path(cfg: &RunConfig, suffix: &str) -> PathBuf {
    cfg.output.dir.join(format!("{}_{suffix}", cfg.output.stem))
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(Error::from)?;
    }
    fs::write(path, text)
        .map_err(Error::from)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_exponents(cfg: &RunConfig) -> anyhow::Result<bool> {
    let e = solve_exponents(&cfg.params, hardy_core::exponents::DEFAULT_TOL)?;
    println!("gamma1  {:.16}", e.gamma1);
    println!("gamma2  {:.16}", e.gamma2);
    println!("mu_bar  {:.16}", e.mu_bar);
    write(
        &out_path(cfg, "exponents.json"),
        &to_json(&json!({ "params": cfg.params, "exponents": e }))?,
    )?;
    Ok(true)
}

fn cmd_coeffs(cfg: &RunConfig) -> anyhow::Result<bool> {
    let k = cfg.expansion_order.unwrap_or_else(|| default_order(cfg.params.p));
    let s = build_series(&cfg.params, k)?;
    let mut csv = String::from("i,c_i\n");
    for (i, c) in s.c.iter().enumerate() {
        csv.push_str(&format!("{i},{c:.16e}\n"));
        println!("c_{i}  {c:.16e}");
    }
    println!("hardy coefficient of r^-p  {:.16e}", s.hardy_coeff);
    if s.extrapolated {
        eprintln!(
            "note: k = {k} exceeds floor(p) for p = {}; higher coefficients are formal",
            cfg.params.p
        );
    }
    write(&out_path(cfg, "coeffs.csv"), &csv)?;
    write(&out_path(cfg, "coeffs.json"), &to_json(&s)?)?;
    Ok(true)
}

/// Solves and writes `<stem>_origin.csv`, `<stem>_infinity.csv` and `<stem>_amplitude.json`.
fn solve_into(cfg: &RunConfig) -> anyhow::Result<(RadialSolution, RadialSolution)> {
    cfg.validate()?;
    let gs = find_ground_state(&cfg.params, &cfg.f, cfg.guess, &cfg.solver)?;
    fs::create_dir_all(&cfg.output.dir).map_err(Error::from)?;
    write_solution(&out_path(cfg, "origin.csv"), &gs.origin)?;
    write_solution(&out_path(cfg, "infinity.csv"), &gs.infinity)?;
    let summary = json!({
        "params": cfg.params,
        "amplitude": gs.amplitude,
        "bracket": gs.bracket,
        "exponents": gs.exponents,
        "large_amplitude_class": gs.large_amplitude_class,
        "splice_radius": gs.splice_radius,
        "splice_defect": gs.splice_defect,
        "history": gs.history,
    });
    write(&out_path(cfg, "amplitude.json"), &to_json(&summary)?)?;
    Ok((gs.origin, gs.infinity))
}

fn cmd_solve(cfg: &RunConfig) -> anyhow::Result<bool> {
    let (origin, _) = solve_into(cfg)?;
    println!("C* = {:.16e}", origin.amplitude);
    println!(
        "wrote {} and {}",
        out_path(cfg, "origin.csv").display(),
        out_path(cfg, "infinity.csv").display()
    );
    Ok(true)
}

/// A check that could not be evaluated counts as failed and keeps its message.
fn entry<T: serde::Serialize>(res: hardy_core::Result<T>, passed: impl Fn(&T) -> bool) -> (Value, bool) {
    match res {
        Ok(r) => {
            let ok = passed(&r);
            (serde_json::to_value(&r).unwrap_or(Value::Null), ok)
        }
        Err(e) => (json!({ "error": e.to_string() }), false),
    }
}

/// Largest multiple `l` of the subsolution `v₋₁` lying below `u` at both ends of
/// `[max(R₂, 1), infinity_hi]`, then checked against `u` on every grid point between.
fn barrier_comparison(sol: &RadialSolution, hi: f64) -> hardy_core::Result<Value> {
    let b = InfinityBarrier::new(&sol.params, -1.0, 0.3)?;
    let r2 = b
        .nonpositive_from(1.0, 1e6, 20)?
        .ok_or_else(|| Error::Domain("subsolution source never becomes nonpositive".into()))?;
    let r = &sol.r;
    let u: Vec<f64> = (0..sol.len()).map(|i| sol.u(i)).collect();
    let lo_i = r.iter().position(|&x| x >= r2.max(1.0));
    let hi_i = r.iter().rposition(|&x| x <= hi);
    let (lo_i, hi_i) = match (lo_i, hi_i) {
        (Some(a), Some(b)) if a < b => (a, b),
        _ => return Err(Error::Domain(format!("no annulus between R2 = {r2:e} and {hi:e}"))),
    };
    let ratio = |i: usize| u[i] / b.value(r[i]);
    let l = ratio(lo_i).min(ratio(hi_i)) * (1.0 - 1e-12);
    let v: Vec<f64> = r.iter().map(|&x| l * b.value(x)).collect();
    let holds = comparison_check(r, &u, &v, (r[lo_i], r[hi_i]), 0.0)?;
    Ok(json!({ "R2": r2, "annulus": (r[lo_i], r[hi_i]), "scale": l, "passed": holds }))
}

fn verify_report(cfg: &RunConfig, origin: &RadialSolution, infinity: &RadialSolution) -> (Value, bool) {
    let (ow, iw) = (cfg.windows.origin, cfg.windows.infinity);
    let k = cfg.expansion_order.unwrap_or_else(|| default_order(infinity.params.p));
    let checks = [
        (
            "origin_limit",
            entry(origin_limit(origin, origin.gamma1, ow, LIMIT_THRESHOLD), |r| r.passed),
        ),
        (
            "infinity_limit",
            entry(infinity_limit(infinity, iw, LIMIT_THRESHOLD), |r| r.passed),
        ),
        (
            "w_rate",
            entry(rate_fit(origin, RateQuantity::WMinusLimit, ow), |r| r.passed),
        ),
        (
            "phi1_rate",
            entry(rate_fit(infinity, RateQuantity::Phi1, iw), |r| r.passed),
        ),
        (
            "expansion",
            entry(
                build_series(&infinity.params, k).and_then(|s| expansion_check(infinity, &s, iw)),
                |r| r.passed,
            ),
        ),
        ("bounds", entry(bounds_check(origin, infinity, ow, iw), |r| r.passed)),
        (
            "comparison",
            entry(barrier_comparison(infinity, iw.1), |v| v["passed"] == json!(true)),
        ),
    ];
    let passed = checks.iter().all(|(_, (_, ok))| *ok);
    let mut obj = serde_json::Map::new();
    for (name, (v, _)) in checks {
        obj.insert(name.to_string(), v);
    }
    obj.insert("params".into(), json!(infinity.params));
    obj.insert("amplitude".into(), json!(origin.amplitude));
    obj.insert("passed".into(), json!(passed));
    (Value::Object(obj), passed)
}

fn cmd_verify(cfg: &RunConfig, origin: Option<&Path>, infinity: Option<&Path>) -> anyhow::Result<bool> {
    let op = origin.map_or_else(|| out_path(cfg, "origin.csv"), Path::to_path_buf);
    let ip = infinity.map_or_else(|| out_path(cfg, "infinity.csv"), Path::to_path_buf);
    let o = read_solution(&op).with_context(|| format!("reading {}", op.display()))?;
    let i = read_solution(&ip).with_context(|| format!("reading {}", ip.display()))?;
    if o.params != i.params {
        bail!(Error::InvalidParams(
            "origin and infinity files were computed for different parameters".into()
        ));
    }
    let (report, passed) = verify_report(cfg, &o, &i);
    if let Value::Object(map) = &report {
        for (name, v) in map {
            if let Some(ok) = v.get("passed").and_then(Value::as_bool) {
                println!("{:<15} {}", name, if ok { "pass" } else { "FAIL" });
            } else if let Some(e) = v.get("error") {
                println!("{:<15} FAIL ({})", name, e.as_str().unwrap_or_default());
            }
        }
    }
    write(&out_path(cfg, "verify.json"), &to_json(&report)?)?;
    Ok(passed)
}

fn barrier_csv(radii: &[f64], row: impl Fn(f64) -> hardy_core::Result<(f64, f64, f64)>) -> hardy_core::Result<String> {
    let mut csv = String::from("r,value,source,residual\n");
    for &r in radii {
        let (v, s, res) = row(r)?;
        csv.push_str(&format!("{r:.16e},{v:.16e},{s:.16e},{res:.16e}\n"));
    }
    Ok(csv)
}

fn cmd_barriers(cfg: &RunConfig, delta: f64) -> anyhow::Result<bool> {
    let params = &cfg.params;
    params.validate()?;
    let p = params.p;
    // residual = L[v]/v^{p-1} - source, with L applied to the analytic derivatives
    if params.mu > 0.0 {
        let radii = log_radii(cfg.solver.r0, cfg.solver.r_switch, 20);
        let choice = choose_origin_params(params, &default_t_grid(40), &radii)?;
        let b = OriginBarrier::new(params, choice.delta_h, choice.eps)?;
        let form = StrongForm::operator(params, params.mu, 0.0);
        let csv = barrier_csv(&radii, |r| {
            let (u, du, d2u) = b.profile(r);
            let s = b.source(r);
            Ok((u, s, form.apply(r, u, du, d2u) / u.powf(p - 1.0) - s))
        })?;
        write(&out_path(cfg, "barrier_origin.csv"), &csv)?;
        println!(
            "origin barrier: delta_h = {}, eps = {}, r2 = {:e}",
            choice.delta_h, choice.eps, choice.r2
        );
    } else {
        println!("origin barrier skipped: it needs mu > 0");
    }
    params.validate_for_infinity()?;
    let form = StrongForm::operator(params, 0.0, params.m);
    for (gamma, name) in [(-1.0, "barrier_sub.csv"), (1.0, "barrier_super.csv")] {
        let b = InfinityBarrier::new(params, gamma, delta)?;
        // v_γ has a pole at r = γ^{1/δ} when γ > 0
        let lo = if gamma > 0.0 {
            2.0 * gamma.powf(1.0 / delta)
        } else {
            1.0
        };
        let radii = log_radii(lo, cfg.solver.r_max.max(2.0 * lo), 20);
        let csv = barrier_csv(&radii, |r| {
            let (u, du, d2u) = b.profile(r)?;
            let q = b.q_func(r)?;
            Ok((u, q, form.apply(r, u, du, d2u) / u.powf(p - 1.0) - q))
        })?;
        write(&out_path(cfg, name), &csv)?;
        let from = b.nonpositive_from(lo, 1e6, 20)?;
        println!("gamma = {gamma:+}: Q0 = {:.6e}, Q <= 0 from r = {from:?}", b.q0());
    }
    Ok(true)
}

fn cmd_sweep(cfg: &RunConfig) -> anyhow::Result<bool> {
    let points = cfg.sweep_points();
    let root = out_path(cfg, "sweep");
    let runs: Vec<Value> = points
        .par_iter()
        .map(|&params| {
            let name = format!("N{}_p{}_mu{}_m{}", params.dim, params.p, params.mu, params.m);
            let mut run = cfg.clone();
            run.params = params;
            run.output.dir = root.join(&name);
            let outcome = solve_into(&run).and_then(|(o, i)| {
                let (report, passed) = verify_report(&run, &o, &i);
                write(&out_path(&run, "verify.json"), &to_json(&report)?)?;
                Ok((o.amplitude, passed))
            });
            match outcome {
                Ok((c, passed)) => json!({ "dir": name, "params": params, "amplitude": c, "passed": passed }),
                Err(e) => json!({ "dir": name, "params": params, "passed": false, "error": format!("{e:#}"),
                                  "exit_code": exit_code(&e) }),
            }
        })
        .collect();
    let passed = runs.iter().filter(|r| r["passed"] == json!(true)).count();
    println!(
        "{passed} of {} runs passed; index at {}",
        runs.len(),
        root.join("index.json").display()
    );
    write(
        &root.join("index.json"),
        &to_json(&json!({ "runs": runs, "passed": passed == runs.len() }))?,
    )?;
    Ok(passed == runs.len())
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let cfg = load_config(&cli.opts)?;
    match &cli.cmd {
        Command::Exponents => cmd_exponents(&cfg),
        Command::Coeffs => cmd_coeffs(&cfg),
        Command::Solve => cmd_solve(&cfg),
        Command::Verify { origin, infinity } => cmd_verify(&cfg, origin.as_deref(), infinity.as_deref()),
        Command::Barriers { delta } => cmd_barriers(&cfg, *delta),
        Command::Sweep => {
            cfg.validate()?;
            cmd_sweep(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
