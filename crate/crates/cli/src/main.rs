use clap::{Args, Parser, Subcommand, ValueEnum};
use spk_core::bounds::{NashConstants, Norm, TimeMode};
use spk_core::exact::{default_time_grid, distance_curve, exact_tau};
use spk_core::io::{
    chain_from_str, chain_to_json, curve_to_csv, fmt_sig, profile_to_csv, profile_to_json,
    reports_to_json,
};
use spk_core::report::{
    evaluate_all, evaluate_bounds, profile_bundle, reports_to_csv, ProfileMode, ReportContext,
};
use spk_core::verify::{run_suite, Suite, SuiteConfig};
use spk_core::{zoo, Chain, Error};
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "spk",
    version,
    about = "Spectral profiles and mixing-time bounds for finite Markov chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a zoo chain as JSON.
    Gen {
        #[command(subcommand)]
        family: Family,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Spectral or conductance profile as CSV (or JSON).
    Profile {
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Edge::Lower)]
        edge: Edge,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        opts: BoundOpts,
    },
    /// Every applicable bound, as JSON.
    Bound {
        input: Option<PathBuf>,
        #[command(flatten)]
        opts: BoundOpts,
    },
    /// Exact mixing time, or the distance curve with --curve.
    Exact {
        input: Option<PathBuf>,
        #[arg(long, default_value = "inf")]
        p: String,
        #[arg(long, default_value = "1/e", value_parser = parse_eps)]
        eps: f64,
        #[arg(long, default_value = "continuous")]
        mode: String,
        #[arg(long)]
        curve: bool,
    },
    /// Run the seeded invariant suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        chains: usize,
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
    /// Bounds against exact values for one or more chains.
    Report {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        opts: BoundOpts,
    },
}

#[derive(Subcommand)]
enum Family {
    Complete {
        #[arg(long)]
        n: usize,
    },
    Cycle {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        lazy: f64,
    },
    Viscek {
        #[arg(long = "N")]
        branching: usize,
        #[arg(long)]
        gen: usize,
        #[arg(long, default_value_t = zoo::SIZE_CAP)]
        cap: usize,
    },
    Torus {
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Edge {
    Lower,
    Dirichlet,
    Upper,
    AntiFk,
    Conductance,
    PhiStar,
}

#[derive(Args, Clone)]
struct BoundOpts {
    #[arg(long, default_value = "1/e", value_parser = parse_eps)]
    eps: f64,
    #[arg(long, default_value = "auto")]
    profile_mode: String,
    #[arg(long, default_value_t = 20)]
    cap: usize,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    estimate_rho: bool,
    /// Local Poincare constant.
    #[arg(long = "a")]
    poincare_a: Option<f64>,
    /// Moderate growth constant.
    #[arg(long = "A", requires = "d")]
    growth_a: Option<f64>,
    #[arg(long = "d", requires = "growth_a")]
    d: Option<f64>,
    /// Nash constants.
    #[arg(long = "C", requires_all = ["nash_d", "nash_t"])]
    nash_c: Option<f64>,
    #[arg(long = "D")]
    nash_d: Option<f64>,
    #[arg(long = "T")]
    nash_t: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    no_discrete: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl BoundOpts {
    fn context(&self) -> Result<ReportContext, Error> {
        let mut ctx = ReportContext {
            eps: self.eps,
            mode: self.profile_mode.parse::<ProfileMode>()?,
            poincare_a: self.poincare_a,
            rho: self.rho,
            estimate_rho: self.estimate_rho,
            moderate_growth: self.growth_a.zip(self.d),
            alpha: self.alpha,
            discrete: !self.no_discrete,
            delta: self.delta,
            window: self.window,
            ..ReportContext::default()
        };
        if let (Some(c), Some(d), Some(t)) = (self.nash_c, self.nash_d, self.nash_t) {
            ctx.nash = Some(NashConstants { c, d, t });
        }
        ctx.profile.cap = self.cap;
        ctx.profile.variational.seed = self.seed;
        Ok(ctx)
    }
}

fn parse_eps(s: &str) -> Result<f64, String> {
    let v = match s.trim() {
        "1/e" => (-1.0f64).exp(),
        other => other.parse::<f64>().map_err(|e| e.to_string())?,
    };
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("epsilon must be positive, got {s}"))
    }
}

enum Failure {
    Lib(Error),
    Io(std::io::Error),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Lib(Error::SizeCap { .. } | Error::TooLarge { .. }) => 3,
            Failure::Lib(Error::Parse(_)) | Failure::Io(_) => 4,
            _ => 2,
        }
    }
}

fn read_input(path: Option<&PathBuf>) -> Result<String, Failure> {
    let mut text = String::new();
    match path {
        Some(p) if p.as_os_str() != "-" => text = std::fs::read_to_string(p)?,
        _ => {
            std::io::stdin().read_to_string(&mut text)?;
        }
    }
    Ok(text)
}

fn load(path: Option<&PathBuf>) -> Result<Chain, Failure> {
    Ok(chain_from_str(&read_input(path)?)?)
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn gen(family: &Family) -> Result<Chain, Error> {
    match *family {
        Family::Complete { n } => zoo::complete_graph(n),
        Family::Cycle { n, lazy } => zoo::cycle(n, lazy),
        Family::Viscek {
            branching,
            gen,
            cap,
        } => zoo::viscek(branching, gen, cap).map(|(_, c)| c),
        Family::Torus { a, b } => zoo::torus_product(a, b),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { family, out } => emit(out.as_ref(), &chain_to_json(&gen(&family)?)),
        Command::Profile {
            input,
            edge,
            json,
            opts,
        } => {
            let chain = load(input.as_ref())?;
            let bundle = profile_bundle(&chain, &opts.context()?)?;
            let missing = || Failure::Invalid("edge requires an exhaustive profile".into());
            let profile = match edge {
                Edge::Lower => bundle.lambda_lower.clone(),
                Edge::Dirichlet => bundle.band.as_ref().ok_or_else(missing)?.dirichlet.clone(),
                Edge::Upper => bundle.band.as_ref().ok_or_else(missing)?.upper.clone(),
                Edge::AntiFk => bundle.anti_fk.clone(),
                Edge::Conductance => bundle.conductance.phi.clone(),
                Edge::PhiStar => bundle.conductance.phi_star.clone(),
            };
            let text = if json {
                profile_to_json(&profile)
            } else {
                profile_to_csv(&profile)?
            };
            emit(None, &text)
        }
        Command::Bound { input, opts } => {
            let chain = load(input.as_ref())?;
            let ctx = opts.context()?;
            let bundle = profile_bundle(&chain, &ctx)?;
            emit(
                None,
                &reports_to_json(&evaluate_bounds(&chain, &bundle, &ctx)?),
            )
        }
        Command::Exact {
            input,
            p,
            eps,
            mode,
            curve,
        } => {
            let chain = load(input.as_ref())?;
            let p: Norm = p.parse()?;
            if curve {
                let grid = default_time_grid(chain.spectral_gap()?);
                return emit(None, &curve_to_csv(&distance_curve(&chain, p, &grid)?)?);
            }
            let tau = exact_tau(&chain, p, eps, mode.parse::<TimeMode>()?)?;
            if let Some(w) = &tau.warning {
                eprintln!("warning: {w}");
            }
            emit(None, &fmt_sig(tau.value, 9))
        }
        Command::Verify {
            suite,
            seed,
            chains,
            samples,
        } => {
            let suites: Vec<Suite> = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![suite.parse()?]
            };
            let cfg = SuiteConfig {
                seed,
                chains,
                samples,
                ..SuiteConfig::default()
            };
            let mut failed = Vec::new();
            for s in suites {
                let out = run_suite(s, &cfg)?;
                let status = if out.passed() { "ok" } else { "FAILED" };
                println!(
                    "{s}: {} checks, min slack {}, {status}",
                    out.checks,
                    fmt_sig(out.min_slack, 3)
                );
                for v in &out.violations {
                    eprintln!(
                        "violation [{s}] {}: {} ({})",
                        v.invariant, v.chain, v.detail
                    );
                }
                if !out.passed() {
                    failed.push(format!("{s}: {}", out.violations[0].invariant));
                }
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Invalid(format!(
                    "invariant violated in {}",
                    failed.join(", ")
                )))
            }
        }
        Command::Report {
            inputs,
            csv,
            json,
            opts,
        } => {
            let ctx = opts.context()?;
            let mut reports = Vec::new();
            if inputs.is_empty() {
                reports.push(evaluate_all("stdin", &load(None)?, &ctx)?);
            }
            for path in &inputs {
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                reports.push(evaluate_all(&name, &load(Some(path))?, &ctx)?);
            }
            let table = reports_to_csv(&reports)?;
            if let Some(path) = &json {
                let text = serde_json::to_string_pretty(&reports)
                    .map_err(|e| Error::Parse(e.to_string()))?;
                emit(Some(path), &text)?;
            }
            emit(csv.as_ref(), &table)?;
            let bad: Vec<String> = reports
                .iter()
                .flat_map(|r| {
                    r.violations()
                        .into_iter()
                        .map(move |v| format!("{}: {}", r.name, v.name))
                })
                .collect();
            if bad.is_empty() {
                Ok(())
            } else {
                Err(Failure::Invalid(format!(
                    "bound dominance violated by {}",
                    bad.join(", ")
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("SPK_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            match f {
                Failure::Lib(e) => eprintln!("error: {e}"),
                Failure::Io(e) => eprintln!("error: {e}"),
                Failure::Invalid(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(code)
        }
    }
}
