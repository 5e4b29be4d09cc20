use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use nqground_core::global::{find_c1_star, find_c2_transition, mass_energy_curve, Status};
use nqground_core::manifold::{asymptotic_sweep, gamma_curve};
use nqground_core::verify::verify_profile;
use nqground_core::weinstein::{critical_mass_c2, critical_mass_from};
use nqground_core::{io, minimize_weinstein, Error, RadialField, RadialGrid, RegimeTag};
use serde::Serialize;
use serde_json::{json, Value};

mod config;

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "nqground", version, about = "Normalized ground states of the (2,q)-Laplacian with a singular weight")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Every flag overrides the matching key of `--config` (or the default).
#[derive(Args, Debug)]
struct Overrides {
    /// JSON run configuration; flags below override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Space dimension.
    #[arg(long = "N", global = true)]
    n: Option<i64>,
    /// Exponent of the q-Laplacian.
    #[arg(long, global = true)]
    q: Option<f64>,
    /// Nonlinearity exponent.
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Singular weight exponent |x|^-b.
    #[arg(long, global = true)]
    b: Option<f64>,
    /// Domain radius.
    #[arg(long = "R", global = true)]
    radius: Option<f64>,
    /// Number of grid nodes.
    #[arg(long = "n", global = true)]
    nodes: Option<usize>,
    /// Geometric grading (default: first node at 1e-5·R).
    #[arg(long, global = true)]
    grading: Option<f64>,
    /// Seed of every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, env = "NQ_OUT_DIR", global = true)]
    out: Option<PathBuf>,
    /// Initial time step of the flows.
    #[arg(long, global = true)]
    tau0: Option<f64>,
    /// Iteration cap of the flows.
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Symmetric-decreasing rearrangement period (0 disables).
    #[arg(long, global = true)]
    rearrange_every: Option<usize>,
    /// Relative Euler–Lagrange residual for convergence.
    #[arg(long, global = true)]
    tol_grad: Option<f64>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Print the regime classification and the critical exponents.
    Regime,
    /// Sharp GN constant: optimizer Q, K, identity residuals.
    Gn,
    /// Mass-critical threshold c2* in both closed forms.
    C2star {
        /// Also locate the transition by the ray test and confirm it by flows.
        #[arg(long)]
        transition: bool,
    },
    /// Global minimization m(c) over a list of masses.
    MassCurve {
        #[arg(long, value_delimiter = ',', required = true)]
        masses: Vec<f64>,
    },
    /// Bisection for the threshold mass c1*.
    C1star {
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Pohozaev-manifold level γ(c) over a list of masses.
    GammaCurve {
        #[arg(long, value_delimiter = ',', required = true)]
        masses: Vec<f64>,
        /// Persist every converged profile.
        #[arg(long)]
        save_profiles: bool,
    },
    /// Decade sweep c = 10^k, k in [lo, hi].
    Asymptotics {
        #[arg(long, default_value_t = -3, allow_hyphen_values = true)]
        lo: i32,
        #[arg(long, default_value_t = 3, allow_hyphen_values = true)]
        hi: i32,
    },
    /// Verification suite on a saved profile.
    Verify {
        profile: PathBuf,
        /// Multiplier; defaults to the energy-identity value of the profile.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        /// GN constant; the GN check is skipped without it.
        #[arg(long)]
        k: Option<f64>,
    },
}

#[derive(Debug)]
enum Failure {
    Validation(String, String),
    Solver(String, String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(..) => 2,
            Failure::Solver(..) => 3,
        }
    }

    fn to_json(&self) -> Value {
        let (kind, message) = match self {
            Failure::Validation(k, m) | Failure::Solver(k, m) => (k, m),
        };
        json!({"error": kind, "message": message, "exit_code": self.code()})
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = format!("{e:?}");
        let kind = kind.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string();
        let message = e.to_string();
        match e {
            Error::InvalidDimension(_)
            | Error::BOutOfRange { .. }
            | Error::QTooSmall { .. }
            | Error::POutOfRange { .. }
            | Error::InvalidGrid(_)
            | Error::InvalidRegime(_)
            | Error::RegimeMismatch(_)
            | Error::BracketInvalid(_)
            | Error::HypothesisNotMet(_)
            | Error::Parse(_) => Failure::Validation(kind, message),
            _ => Failure::Solver(kind, message),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Solver("Io".into(), e.to_string())
    }
}

fn resolve(o: &Overrides) -> Result<RunConfig, Failure> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| Failure::Validation("Parse".into(), e.to_string()))?
        }
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($src:expr, $dst:expr) => {
            if let Some(v) = $src.clone() {
                $dst = v;
            }
        };
    }
    set!(o.n, cfg.params.n);
    set!(o.q, cfg.params.q);
    set!(o.p, cfg.params.p);
    set!(o.b, cfg.params.b);
    set!(o.radius, cfg.grid.radius);
    set!(o.nodes, cfg.grid.n);
    if o.grading.is_some() {
        cfg.grid.grading = o.grading;
    }
    set!(o.seed, cfg.seed);
    set!(o.workers, cfg.workers);
    set!(o.out, cfg.out);
    if o.tau0.is_some() {
        cfg.flow.tau0 = o.tau0;
        cfg.gamma.tau0 = o.tau0;
    }
    if let Some(m) = o.max_iters {
        cfg.flow.max_iters = m;
        cfg.gamma.max_iters = m;
    }
    set!(o.rearrange_every, cfg.flow.rearrange_every);
    if let Some(t) = o.tol_grad {
        cfg.flow.tol_grad = t;
        cfg.gamma.tol_grad = t;
    }
    cfg.weinstein.seed = cfg.seed;
    if cfg.workers == 0 {
        return Err(Failure::Validation("InvalidConfig".into(), "workers must be at least 1".into()));
    }
    Ok(cfg)
}

struct Run {
    cfg: RunConfig,
    hash: String,
}

impl Run {
    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, Failure> {
        fs::create_dir_all(&self.cfg.out)?;
        let path = self.cfg.out.join(name);
        fs::write(&path, contents)?;
        Ok(path)
    }

    fn grid(&self, dim: usize) -> Result<Arc<RadialGrid>, Failure> {
        Ok(Arc::new(self.cfg.grid.build(dim)?))
    }
}

/// Exit status of a successful command: 0, or 4 when a sweep lost rows.
type Outcome = Result<u8, Failure>;

fn regime(run: &Run) -> Outcome {
    let ps = run.cfg.params()?;
    let r = ps.classify();
    let summary = json!({
        "config_hash": run.hash,
        "regime": r.tag,
        "compactness_ok": r.compactness_ok,
        "sigma": ps.sigma(),
        "p2_star": ps.p2_star(),
        "pq_star": ps.pq_star(),
        "two_b_star": ps.two_b_star(),
    });
    println!("{}", r.tag);
    println!("{summary}");
    Ok(0)
}

fn gn(run: &Run) -> Outcome {
    let ps = run.cfg.params()?;
    let g = run.grid(ps.dim())?;
    let gn = minimize_weinstein(&ps, &g, &run.cfg.weinstein)?;
    let cm = (ps.classify().tag == RegimeTag::MassCritical)
        .then(|| critical_mass_from(&ps, gn.omega_norm, gn.k))
        .transpose()?;
    let doc = io::gn_json(&gn, cm.as_ref(), &run.hash);
    run.write("gnresult.json", &io::to_pretty(&doc))?;
    run.write("q_profile.csv", &io::profile_csv(&gn.q, &ps, &run.hash))?;
    println!("{doc}");
    Ok(0)
}

fn c2star(run: &Run, transition: bool) -> Outcome {
    let ps = run.cfg.params()?;
    let g = run.grid(ps.dim())?;
    let (cm, gn) = critical_mass_c2(&ps, &g, &run.cfg.weinstein)?;
    let mut doc = io::gn_json(&gn, Some(&cm), &run.hash);
    if transition {
        let tr = find_c2_transition(&ps, &gn.v_star, None, 1e-3, &run.cfg.flow)?;
        doc["transition"] = json!({
            "estimate": tr.estimate,
            "bracket": [tr.bracket.0, tr.bracket.1],
            "flow_below": {"m": tr.flow_below.0, "status": tr.flow_below.1},
            "flow_above": {"m": tr.flow_above.0, "status": tr.flow_above.1},
            "flows_confirm": tr.flows_confirm(),
        });
    }
    run.write("c2star.json", &io::to_pretty(&doc))?;
    println!("{doc}");
    Ok(0)
}

fn mass_curve(run: &Run, masses: &[f64]) -> Outcome {
    let ps = run.cfg.params()?;
    let g = run.grid(ps.dim())?;
    let (curve, reports) = mass_energy_curve(&ps, masses, &g, &run.cfg.flow)?;
    let path = run.write("mass_curve.csv", &io::mass_curve_csv(&curve, &run.hash))?;
    let failed = reports.iter().filter(|r| r.is_err()).count();
    for (c, r) in masses.iter().zip(&reports) {
        if let Err(e) = r {
            eprintln!("{}", json!({"c": c, "error": Failure::from(e.clone()).to_json()}));
        }
    }
    println!("{} rows ({failed} failed) -> {}", curve.rows.len(), path.display());
    Ok(if failed > 0 { 4 } else { 0 })
}

fn c1star(run: &Run, lo: Option<f64>, hi: Option<f64>, tol: f64) -> Outcome {
    let ps = run.cfg.params()?;
    let g = run.grid(ps.dim())?;
    let bracket = match (lo, hi) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        (None, None) => None,
        _ => return Err(Failure::Validation("InvalidConfig".into(), "give both --lo and --hi".into())),
    };
    let c1 = find_c1_star(&ps, bracket, tol, &g, &run.cfg.flow)?;
    let doc = json!({
        "config_hash": run.hash,
        "c1_star": c1.c1_star,
        "bracket": [c1.bracket.0, c1.bracket.1],
        "log": c1.log,
    });
    run.write("c1star.json", &io::to_pretty(&doc))?;
    println!("c1* = {:?} in [{:?}, {:?}]", c1.c1_star, c1.bracket.0, c1.bracket.1);
    Ok(0)
}

fn gamma_sweep(run: &Run, masses: &[f64], save_profiles: bool) -> Outcome {
    let ps = run.cfg.params()?;
    let g = run.grid(ps.dim())?;
    let (curve, reports) = gamma_curve(&ps, masses, &g, &run.cfg.gamma)?;
    let path = run.write("gamma_curve.csv", &io::gamma_curve_csv(&curve, &run.hash))?;
    let mut failed = 0;
    for (i, (c, r)) in masses.iter().zip(&reports).enumerate() {
        match r {
            Ok(rep) if save_profiles && rep.report.status == Status::Converged => {
                let u = rep.report.u.clone().with_metadata(format!("c={c:?}, lambda={:?}", rep.report.lambda));
                run.write(&format!("profile_{i:03}.csv"), &io::profile_csv(&u, &ps, &run.hash))?;
            }
            Ok(_) => {}
            Err(e) => {
                failed += 1;
                eprintln!("{}", json!({"c": c, "error": Failure::from(e.clone()).to_json()}));
            }
        }
    }
    println!("{} rows ({failed} failed) -> {}", curve.rows.len(), path.display());
    Ok(if failed > 0 { 4 } else { 0 })
}

fn asymptotics(run: &Run, lo: i32, hi: i32) -> Outcome {
    let ps = run.cfg.params()?;
    let g = run.grid(ps.dim())?;
    let rep = asymptotic_sweep(&ps, (lo, hi), &g, &run.cfg.gamma)?;
    run.write("asymptotics.csv", &io::asymptotics_csv(&rep, &run.hash))?;
    let doc = json!({
        "config_hash": run.hash,
        "trends": rep.trends,
        "all_hold": rep.all_hold(),
        "gamma_ratio": rep.gamma_ratio,
    });
    run.write("asymptotics.json", &io::to_pretty(&doc))?;
    println!("{doc}");
    let expected = (hi - lo + 1) as usize;
    Ok(if rep.rows.len() < expected { 4 } else { 0 })
}

fn verify(run: &Run, profile: &Path, lambda: Option<f64>, k: Option<f64>) -> Outcome {
    let text = fs::read_to_string(profile)?;
    let (ps, u): (_, RadialField) = RadialField::from_profile_csv(&text)?;
    let lambda = match lambda {
        Some(l) => l,
        None => nqground_core::functional::multiplier_of(&u, &ps)?.0,
    };
    let report = verify_profile(&u, lambda, &ps, k, run.cfg.seed)?;
    run.write("verify.json", &(report.to_json() + "\n"))?;
    for c in report.checks() {
        let verdict = match c.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "n/a",
        };
        println!("{:<18} {verdict:<4} value={:e} threshold={:e} {}", c.name, c.value, c.threshold, c.notes);
    }
    Ok(0)
}

fn dispatch(cli: &Cli) -> Outcome {
    let cfg = resolve(&cli.overrides)?;
    let hash = cfg.hash(&cli.command);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Failure::Solver("ThreadPool".into(), e.to_string()))?;
    let run = Run { cfg, hash };
    if !matches!(cli.command, Command::Regime | Command::Verify { .. }) {
        let mut record = serde_json::to_value(&run.cfg).expect("config serializes");
        record["task"] = serde_json::to_value(&cli.command).expect("task serializes");
        record["config_hash"] = json!(run.hash);
        run.write("config.json", &io::to_pretty(&record))?;
    }
    pool.install(|| match &cli.command {
        Command::Regime => regime(&run),
        Command::Gn => gn(&run),
        Command::C2star { transition } => c2star(&run, *transition),
        Command::MassCurve { masses } => mass_curve(&run, masses),
        Command::C1star { lo, hi, tol } => c1star(&run, *lo, *hi, *tol),
        Command::GammaCurve { masses, save_profiles } => gamma_sweep(&run, masses, *save_profiles),
        Command::Asymptotics { lo, hi } => asymptotics(&run, *lo, *hi),
        Command::Verify { profile, lambda, k } => verify(&run, profile, *lambda, *k),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.code())
        }
    }
}
