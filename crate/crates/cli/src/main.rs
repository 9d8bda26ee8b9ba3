use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use nlslab::diagnostics::{
    lemma2_bound, lemma_psi_check, relative_spread, CutoffSpec, PsiSampleGrid,
};
use nlslab::exponents::{
    phase_table, phase_table_row, regime_report, RegimeParams, PHASE_TABLE_HEADER,
};
use nlslab::harness::{
    persist, run_plan, sweep_csv, ExperimentConfig, ExperimentResult, Outcome, Plan,
};
use nlslab::nonlinearity::{
    decompose, verify_a1, verify_a2, NonlinearitySpec, DEFAULT_RADIUS, DEFAULT_SAMPLES,
};
use nlslab::{par, C64};

/// Exit status for a run stopped by a guard (blow-up, boundary mass, NaN).
const EXIT_ABORTED: u8 = 3;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "nlslab",
    version,
    about = "Split-step NLS laboratory: exponents, sweeps, scattering diagnostics"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write manifest.json, sweep.csv, residuals.csv and fields/ here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Regime report: Strauss exponent, critical weight, exponent gap.
    Exponents {
        #[arg(long)]
        d: u32,
        /// One power, or a comma list with --table.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// CSV phase table over the given powers (default 1.1, 1.2, ..., 5.0).
        #[arg(long)]
        table: bool,
    },
    /// Integrate and persist the trajectory.
    Simulate,
    /// Integrate, then sweep I(R), the lemma checks and the slab mass over R.
    Isweep,
    /// Integrate, then scattering residuals and Cauchy differences.
    ScatterDiag,
    /// Uniformity constants of the cutoff estimates across R.
    LemmaCheck {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long = "R", value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Sampling certificates for (A1)/(A2) and the circle decomposition.
    VerifyNl {
        /// Used when no --config is given.
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        #[arg(long)]
        p: Option<f64>,
        /// `re` or `re,im`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        eta: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        radius: f64,
        #[arg(long, default_value_t = 8)]
        window: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Psi,
    Lemma1,
    Lemma2,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    PurePower,
    GaugeInvariant,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<nlslab::Error>() {
                Some(nlslab::Error::Config { .. }) => ExitCode::from(EXIT_CONFIG),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        par::configure_threads(n);
    }
    match &cli.command {
        Command::Exponents {
            d,
            p,
            alpha,
            beta,
            table,
        } => exponents(g, *d, p, *alpha, *beta, *table),
        Command::Simulate => experiment(g, Plan::SIMULATE),
        Command::Isweep => experiment(g, Plan::SWEEP),
        Command::ScatterDiag => experiment(g, Plan::SCATTER),
        Command::LemmaCheck { which, radii, d, p } => lemma_check(g, *which, radii, *d, *p),
        Command::VerifyNl {
            kind,
            p,
            eta,
            samples,
            radius,
            window,
        } => verify_nl(g, *kind, *p, eta, *samples, *radius, *window),
    }
}

fn print_json(v: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn exponents(
    g: &Global,
    d: u32,
    p: &[f64],
    alpha: f64,
    beta: f64,
    table: bool,
) -> Result<ExitCode> {
    if table {
        let grid: Vec<f64> = if p.is_empty() {
            (11..=50).map(|k| k as f64 / 10.0).collect()
        } else {
            p.to_vec()
        };
        let rows = phase_table(d, alpha, &grid)?;
        if g.json {
            print_json(&serde_json::to_value(&rows)?)?;
        } else {
            println!("{PHASE_TABLE_HEADER}");
            for r in &rows {
                println!("{}", phase_table_row(r));
            }
        }
        return Ok(ExitCode::SUCCESS);
    }
    let &[p] = p else {
        bail!("give exactly one --p (or use --table)")
    };
    let r = regime_report(&RegimeParams::new(d, p, alpha, beta)?)?;
    if g.json {
        print_json(&serde_json::to_value(&r)?)?;
        return Ok(ExitCode::SUCCESS);
    }
    let class = serde_json::to_value(r.classification)?;
    println!(
        "d = {}, p = {}, alpha = {}, beta = {}",
        r.d, r.p, r.alpha, r.beta
    );
    println!("p_st = {}", r.p_strauss);
    println!("gap = {}", r.theorem_gap);
    println!("lower_exponent = {}", r.lower_exponent);
    println!("upper_exponent = {}", r.upper_exponent);
    println!("s_c = {}", r.s_c);
    println!("p' = {}", r.holder_conjugate);
    println!("1 + 2/d = {}, 1 + 4/d = {}", r.p_short_range, r.p_mass_crit);
    println!("(q0, r0) = ({}, {})", r.q0_r0.0, r.q0_r0.1);
    println!(
        "lemma2_exponent = {} ({})",
        r.lemma2_exponent,
        serde_json::to_value(r.lemma2_case)?.as_str().unwrap_or("")
    );
    match r.decay_rate {
        Some(v) => println!("decay_rate = {v}"),
        None => println!("decay_rate = undefined (p <= 2)"),
    }
    println!("classification = {}", class.as_str().unwrap_or(""));
    Ok(ExitCode::SUCCESS)
}

fn load(g: &Global) -> Result<ExperimentConfig> {
    let path = g
        .config
        .as_deref()
        .ok_or_else(|| anyhow!("this command needs --config"))?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = g.seed {
        config.seed = seed;
        config.validate()?;
    }
    Ok(config)
}

fn finish(g: &Global, result: &ExperimentResult, report: Value) -> Result<ExitCode> {
    if let Some(dir) = &g.out {
        persist(result, dir).with_context(|| format!("writing {}", dir.display()))?;
    }
    if g.json {
        print_json(&report)?;
    }
    if let Outcome::Aborted { step, time, reason } = result.outcome {
        eprintln!("aborted at step {step} (t = {time}): {reason}");
        return Ok(ExitCode::from(EXIT_ABORTED));
    }
    Ok(ExitCode::SUCCESS)
}

fn experiment(g: &Global, plan: Plan) -> Result<ExitCode> {
    let config = load(g)?;
    let result = run_plan(&config, plan)?;
    let traj = &result.integration.trajectory;
    let v = &result.verdicts;
    let mut report = json!({
        "outcome": result.outcome,
        "snapshots": traj.len(),
        "t_end": traj.end(),
        "mass_ratio": v.mass_ratio,
    });
    if !g.json {
        println!(
            "snapshots = {}, t_end = {}, mass ratio = {}",
            traj.len(),
            traj.end(),
            v.mass_ratio
        );
    }
    if plan.sweep {
        report["records"] = serde_json::to_value(&result.records)?;
        report["r0"] = json!(result.r0);
        report["i_slope"] = serde_json::to_value(v.i_slope)?;
        report["fit_radii"] = json!(v.fit_radii);
        report["slab_slope"] = serde_json::to_value(v.slab_slope)?;
        report["exponent_margin"] = json!(v.exponent_margin);
        if !g.json {
            print!("{}", sweep_csv(&result));
            if let Some(r0) = result.r0 {
                println!("r0 = {r0}");
            }
            match v.i_slope {
                Some(f) => println!(
                    "I(R) slope = {} (r^2 = {}) over R = {:?}",
                    f.slope, f.r_squared, v.fit_radii
                ),
                None => println!("I(R) slope: fewer than 3 eligible rows"),
            }
            if let Some(f) = v.slab_slope {
                println!(
                    "slab slope = {} (lower exponent {})",
                    f.slope, v.lower_exponent
                );
            }
            if let Some(m) = v.exponent_margin {
                println!("slope - upper exponent ({}) = {m}", v.upper_exponent);
            }
        }
    }
    if plan.scattering {
        report["cauchy"] = serde_json::to_value(&result.cauchy)?;
        report["cauchy_exponent"] = json!(v.cauchy_exponent);
        report["cauchy_trend"] = serde_json::to_value(v.cauchy_trend)?;
        report["final_l2_residual"] = json!(result.residuals.first().and_then(|r| r.l2_residual));
        if !g.json {
            println!("s,t,cauchy_difference");
            for c in &result.cauchy {
                println!("{},{},{}", c.s, c.t, c.difference);
            }
            if let (Some(e), Some(t)) = (v.cauchy_exponent, v.cauchy_trend) {
                println!(
                    "late Cauchy exponent = {e} ({})",
                    serde_json::to_value(t)?.as_str().unwrap_or("")
                );
            }
        }
    }
    finish(g, &result, report)
}

fn lemma_check(g: &Global, which: Which, radii: &[f64], d: usize, p: f64) -> Result<ExitCode> {
    match which {
        Which::Psi => {
            let grid = PsiSampleGrid {
                dim: d,
                ..PsiSampleGrid::default()
            };
            let rows: Vec<(f64, f64, f64)> = radii
                .iter()
                .map(|&r| {
                    let (ct, cl) = lemma_psi_check(&CutoffSpec::for_power(r, p)?, &grid);
                    Ok((r, ct, cl))
                })
                .collect::<nlslab::Result<_>>()?;
            let spread_t = relative_spread(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
            let spread_l = relative_spread(&rows.iter().map(|r| r.2).collect::<Vec<_>>());
            if g.json {
                let rows: Vec<Value> = rows
                    .iter()
                    .map(|r| json!({"R": r.0, "dt_constant": r.1, "lap_constant": r.2}))
                    .collect();
                print_json(&json!({"rows": rows, "dt_spread": spread_t, "lap_spread": spread_l}))?;
            } else {
                println!("R,dt_constant,lap_constant");
                for r in &rows {
                    println!("{},{},{}", r.0, r.1, r.2);
                }
                println!("spread: dt {spread_t}, lap {spread_l}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Which::Lemma2 => {
            let config = load(g)?;
            let u0 = config.initial_field()?;
            let alpha = config.regime.alpha;
            let rows: Vec<(f64, f64, f64)> = radii
                .iter()
                .map(|&r| {
                    let l = lemma2_bound(&u0, &CutoffSpec::for_power(r, config.power())?, alpha)?;
                    Ok((r, l.lhs, l.majorant))
                })
                .collect::<nlslab::Result<_>>()?;
            let spread = relative_spread(&rows.iter().map(|r| r.1 / r.2).collect::<Vec<_>>());
            if g.json {
                let rows: Vec<Value> = rows
                    .iter()
                    .map(|r| json!({"R": r.0, "data_term": r.1, "data_majorant": r.2}))
                    .collect();
                print_json(&json!({"alpha": alpha, "rows": rows, "ratio_spread": spread}))?;
            } else {
                println!("R,data_term,data_majorant,ratio");
                for r in &rows {
                    println!("{},{},{},{}", r.0, r.1, r.2, r.1 / r.2);
                }
                println!("ratio spread = {spread}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Which::Lemma1 => {
            let mut config = load(g)?;
            config.sweep.radii = radii.to_vec();
            config.validate()?;
            let result = run_plan(&config, Plan::SWEEP)?;
            let report = json!({
                "rows": result.records.iter().map(|r| json!({"R": r.r, "lemma1_ratio": r.lemma1_ratio})).collect::<Vec<_>>(),
                "spread": result.verdicts.lemma1_spread,
            });
            if !g.json {
                println!("R,lemma1_ratio");
                for r in &result.records {
                    println!("{},{}", r.r, r.lemma1_ratio);
                }
                if let Some(s) = result.verdicts.lemma1_spread {
                    println!("spread = {s}");
                }
            }
            finish(g, &result, report)
        }
    }
}

fn nonlinearity_from(
    g: &Global,
    kind: Option<Kind>,
    p: Option<f64>,
    eta: &[f64],
) -> Result<NonlinearitySpec> {
    if let Some(path) = g.config.as_deref() {
        return Ok(ExperimentConfig::load(Path::new(path))?.nonlinearity);
    }
    let kind = kind.ok_or_else(|| anyhow!("give --config or --kind"))?;
    let p = p.ok_or_else(|| anyhow!("--p is required with --kind"))?;
    let spec = match (kind, eta) {
        (Kind::PurePower, [re]) => NonlinearitySpec::pure_power(p, C64::new(*re, 0.0)),
        (Kind::PurePower, [re, im]) => NonlinearitySpec::pure_power(p, C64::new(*re, *im)),
        (Kind::GaugeInvariant, [re]) => NonlinearitySpec::gauge_invariant(p, *re),
        _ => bail!("--eta takes `re` (or `re,im` for pure-power)"),
    };
    spec.validate()?;
    Ok(spec)
}

fn verify_nl(
    g: &Global,
    kind: Option<Kind>,
    p: Option<f64>,
    eta: &[f64],
    samples: usize,
    radius: f64,
    window: usize,
) -> Result<ExitCode> {
    let spec = nonlinearity_from(g, kind, p, eta)?;
    let seed = g.seed.unwrap_or(0);
    let a1 = verify_a1(&spec, samples, radius, seed)?;
    let a2 = verify_a2(&spec, samples, seed);
    let circle = spec.clone();
    let dec = decompose(move |theta| circle_value(&circle, theta), spec.p, window)?;
    if g.json {
        print_json(&json!({
            "spec": spec,
            "a1": a1,
            "a2": match &a2 { Ok(c) => serde_json::to_value(c)?, Err(e) => json!({"error": e.to_string()}) },
            "decomposition": dec.spec,
            "reconstruction_error": dec.reconstruction_error,
            "ell1_margin": dec.spec.ell1_margin(),
        }))?;
    } else {
        println!(
            "(A1) empirical C = {:?} over {} samples",
            a1.lipschitz_constant, a1.sample_count
        );
        match &a2 {
            Ok(c) => println!("(A2) c0 = {:?}, theta = {:?}", c.c0, c.theta),
            Err(e) => println!("{e}"),
        }
        println!("n,re,im");
        for c in spec_coefficients(&dec.spec) {
            if c.re.abs() > 1e-12 || c.im.abs() > 1e-12 {
                println!("{},{},{}", c.n, c.re, c.im);
            }
        }
        println!("reconstruction error = {}", dec.reconstruction_error);
        println!("|g0| - sum |gn| = {}", dec.spec.ell1_margin());
    }
    Ok(ExitCode::SUCCESS)
}

fn circle_value(spec: &NonlinearitySpec, theta: f64) -> C64 {
    use nlslab::nonlinearity::PointwiseNonlinearity;
    spec.value(C64::from_polar(1.0, theta))
}

fn spec_coefficients(spec: &NonlinearitySpec) -> Vec<nlslab::nonlinearity::FourierCoefficient> {
    spec.circle_coefficients()
}
