//! Command-line front end for the `halfline` binary.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::absorption::{evolve_absorbed, general_absorbed, Potential};
use crate::bessel::{bessel_i, bessel_k, wronskian, BesselOrder};
use crate::kernel::{apply_semigroup, apply_semigroup_real, heat_kernel, KernelParams};
use crate::reduce::{default_plan, OperatorSpec};
use crate::resolvent::apply_resolvent;
use crate::spaces::{make_geometric_grid, read_csv, write_csv, Grid, GridFunction};
use crate::verify::{run_suite, suite_by_name};
use crate::{Error, Result, SectorPoint, VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

const DEFAULT_GRID: &str = "1e-6,50,100,10";
const DEFAULT_INIT: &str = "bump:1.5,0.5";

#[derive(Parser, Debug)]
#[command(name = "halfline", version, about = "Bessel heat kernels, resolvents and reductions on the half-line")]
pub struct Cli {
    /// TOML file with default values for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Geometric grid `xmin,xmax,panels,order`.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// I_ν(x + i·im), K_ν(x) and the Wronskian.
    Bessel(BesselArgs),
    /// Kernel value k_κ(z,x,r), or S(z)f on the grid.
    Kernel(KernelArgs),
    /// (λ − G_κ)^{-1} g on the grid.
    Resolvent(ResolventArgs),
    /// Reduction plan and domain case of A_α(a,b) on X_n.
    Classify(ClassifyArgs),
    /// Evolution with an absorption potential.
    Evolve(EvolveArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Default)]
pub struct BesselArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub im: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct KernelArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phase: Option<f64>,
    /// With `--r`, print the single value k(z,x,r).
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Initial datum: `bump:c,w` or `csv:PATH`.
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct ResolventArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct ClassifyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub n: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct EvolveArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// `zero`, `const:c`, `linear:c` or `power:c,p`.
    #[arg(long)]
    pub omega: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
    /// With `--a`, `--b`, `--n`: evolve under A_α(a,b) − ω on X_n instead.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub n: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct VerifyArgs {
    /// `default`, `full`, or comma-separated check names.
    #[arg(long)]
    pub suite: Option<String>,
}

const FILE_KEYS: &[&str] = &[
    "grid", "out", "tol", "seed", "jobs", "nu", "x", "im", "r", "kappa", "t", "phase", "init", "m", "lambda", "alpha", "a", "b",
    "n", "omega", "steps", "suite",
];

/// Fully resolved invocation: flags merged over the config file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub parameters: BTreeMap<String, Value>,
    pub grid: String,
    pub output_path: Option<String>,
    pub seed: u64,
    #[serde(skip)]
    pub grid_explicit: bool,
    /// Keys where a flag overrode a different value from the config file.
    pub overrides: Vec<String>,
}

impl RunConfig {
    fn get<T: DeserializeOwned>(&self, key: &str) -> Result<T> {
        let v = self.parameters.get(key).ok_or_else(|| Error::Config(format!("missing required parameter `--{key}`")))?;
        serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("parameter `{key}`: {e}")))
    }

    fn opt<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        if self.parameters.contains_key(key) { self.get(key).map(Some) } else { Ok(None) }
    }

    fn metadata(&self) -> Value {
        json!({ "version": VERSION, "config": self })
    }
}

struct Resolver {
    file: toml::Table,
    params: BTreeMap<String, Value>,
    overrides: Vec<String>,
}

impl Resolver {
    fn new(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                if let Some(k) = table.keys().find(|k| !FILE_KEYS.contains(&k.as_str())) {
                    return Err(Error::Config(format!("unknown key `{k}` in {}", p.display())));
                }
                table
            }
            None => toml::Table::new(),
        };
        Ok(Self { file, params: BTreeMap::new(), overrides: Vec::new() })
    }

    fn value<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Result<Option<T>>
    where
        T: DeserializeOwned + Serialize + PartialEq,
    {
        let from_file = match self.file.get(key) {
            Some(v) => Some(v.clone().try_into::<T>().map_err(|e| Error::Config(format!("config key `{key}`: {e}")))?),
            None => None,
        };
        if let (Some(f), Some(c)) = (&flag, &from_file) {
            if f != c {
                self.overrides.push(key.to_string());
            }
        }
        Ok(flag.or(from_file).or(default))
    }

    fn param<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Result<()>
    where
        T: DeserializeOwned + Serialize + PartialEq,
    {
        if let Some(v) = self.value(key, flag, default)? {
            self.params.insert(key.to_string(), serde_json::to_value(v).map_err(|e| Error::Config(e.to_string()))?);
        }
        Ok(())
    }
}

/// Parses the arguments (including the program name) and merges the config file.
pub fn parse_config<I, T>(argv: I) -> Result<(RunConfig, Option<usize>)>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Config(e.to_string()))?;
    resolve(cli)
}

fn resolve(cli: Cli) -> Result<(RunConfig, Option<usize>)> {
    let mut r = Resolver::new(cli.config.as_deref())?;
    let grid_explicit = cli.grid.is_some() || r.file.contains_key("grid");
    let grid = r.value("grid", cli.grid, Some(DEFAULT_GRID.to_string()))?.expect("defaulted");
    let out = r.value("out", cli.out.map(|p| p.display().to_string()), None)?;
    let seed = r.value("seed", cli.seed, Some(0))?.expect("defaulted");
    let jobs = r.value("jobs", cli.jobs, None)?;
    r.param("tol", cli.tol, None)?;
    let name = match cli.command {
        Command::Bessel(a) => {
            r.param("nu", a.nu, None)?;
            r.param("x", a.x, None)?;
            r.param("im", a.im, Some(0.0))?;
            "bessel"
        }
        Command::Kernel(a) => {
            r.param("kappa", a.kappa, Some(0.0))?;
            r.param("t", a.t, None)?;
            r.param("phase", a.phase, Some(0.0))?;
            r.param("x", a.x, None)?;
            r.param("r", a.r, None)?;
            r.param("init", a.init, Some(DEFAULT_INIT.to_string()))?;
            r.param("m", a.m, Some(0.5))?;
            "kernel"
        }
        Command::Resolvent(a) => {
            r.param("kappa", a.kappa, Some(0.0))?;
            r.param("lambda", a.lambda, Some(1.0))?;
            r.param("init", a.init, Some(DEFAULT_INIT.to_string()))?;
            r.param("m", a.m, Some(0.5))?;
            "resolvent"
        }
        Command::Classify(a) => {
            r.param("alpha", a.alpha, None)?;
            r.param("a", a.a, None)?;
            r.param("b", a.b, None)?;
            r.param("n", a.n, None)?;
            "classify"
        }
        Command::Evolve(a) => {
            r.param("kappa", a.kappa, Some(0.0))?;
            r.param("t", a.t, None)?;
            r.param("omega", a.omega, Some("zero".to_string()))?;
            r.param("steps", a.steps, Some(16))?;
            r.param("init", a.init, Some(DEFAULT_INIT.to_string()))?;
            r.param("m", a.m, Some(0.5))?;
            r.param("alpha", a.alpha, None)?;
            r.param("a", a.a, None)?;
            r.param("b", a.b, None)?;
            r.param("n", a.n, None)?;
            "evolve"
        }
        Command::Verify(a) => {
            r.param("suite", a.suite, Some("default".to_string()))?;
            "verify"
        }
    };
    let config = RunConfig { subcommand: name.to_string(), parameters: r.params, grid, output_path: out, seed, grid_explicit, overrides: r.overrides };
    Ok((config, jobs))
}

fn parse_grid(spec: &str) -> Result<Arc<Grid>> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let bad = || Error::Config(format!("--grid expects xmin,xmax,panels,order, got `{spec}`"));
    if parts.len() != 4 {
        return Err(bad());
    }
    let x_min: f64 = parts[0].parse().map_err(|_| bad())?;
    let x_max: f64 = parts[1].parse().map_err(|_| bad())?;
    let panels: usize = parts[2].parse().map_err(|_| bad())?;
    let order: usize = parts[3].parse().map_err(|_| bad())?;
    Ok(Arc::new(make_geometric_grid(x_min, x_max, panels, order)?))
}

fn initial_datum(spec: &str, grid: &Arc<Grid>, m: f64) -> Result<GridFunction<f64>> {
    let bad = || Error::Config(format!("--init expects bump:c,w or csv:PATH, got `{spec}`"));
    match spec.split_once(':') {
        Some(("bump", rest)) => {
            let (c, w) = rest.split_once(',').ok_or_else(bad)?;
            let c: f64 = c.trim().parse().map_err(|_| bad())?;
            let w: f64 = w.trim().parse().map_err(|_| bad())?;
            if !(w > 0.0) {
                return Err(bad());
            }
            Ok(GridFunction::sample(grid.clone(), m, move |x: f64| (-((x - c) / w).powi(2)).exp()))
        }
        Some(("csv", path)) => {
            let file = fs::File::open(path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
            Ok(read_csv::<f64, _>(BufReader::new(file))?.with_weight(m))
        }
        _ => Err(bad()),
    }
}

enum Output {
    Json(Value),
    Csv(GridFunction<Complex64>),
}

fn scaled_json(v: &crate::bessel::ScaledValue) -> Value {
    let z = v.value();
    json!({ "re": z.re, "im": z.im, "mantissa_re": v.mantissa().re, "mantissa_im": v.mantissa().im, "log_scale": v.log_scale() })
}

fn compute(cfg: &RunConfig) -> Result<(Output, bool)> {
    let grid = || parse_grid(&cfg.grid);
    match cfg.subcommand.as_str() {
        "bessel" => {
            let order = BesselOrder::new(cfg.get("nu")?)?;
            let x: f64 = cfg.get("x")?;
            let im: f64 = cfg.get("im")?;
            let mut v = json!({ "I": scaled_json(&bessel_i(order, Complex64::new(x, im))?) });
            if im == 0.0 && x > 0.0 {
                v["K"] = scaled_json(&bessel_k(order, x)?);
                v["wronskian"] = json!(wronskian(order, x)?);
            }
            Ok((Output::Json(v), true))
        }
        "kernel" => {
            let p = KernelParams::new(cfg.get("kappa")?)?;
            let z = SectorPoint::new(cfg.get("t")?, cfg.get("phase")?)?;
            match (cfg.opt::<f64>("x")?, cfg.opt::<f64>("r")?) {
                (Some(x), Some(r)) => {
                    let k = heat_kernel(&p, z, x, r)?;
                    Ok((Output::Json(json!({ "re": k.re, "im": k.im })), true))
                }
                (None, None) => {
                    let g = grid()?;
                    let f = initial_datum(&cfg.get::<String>("init")?, &g, cfg.get("m")?)?;
                    let u = if z.is_real() { apply_semigroup_real(&p, z.modulus(), &f, &g)?.to_complex() } else { apply_semigroup(&p, z, &f, &g)? };
                    Ok((Output::Csv(u), true))
                }
                _ => Err(Error::Config("--x and --r must be given together".into())),
            }
        }
        "resolvent" => {
            let p = KernelParams::new(cfg.get("kappa")?)?;
            let g = grid()?;
            let f = initial_datum(&cfg.get::<String>("init")?, &g, cfg.get("m")?)?;
            Ok((Output::Csv(apply_resolvent(&p, cfg.get("lambda")?, &f, &g)?.to_complex()), true))
        }
        "classify" => {
            let spec = OperatorSpec::new(cfg.get("alpha")?, cfg.get("a")?, cfg.get("b")?)?;
            let plan = default_plan(&spec)?;
            let c = plan.classify(cfg.get("n")?);
            let mut v = serde_json::to_value(plan).map_err(|e| Error::Config(e.to_string()))?;
            v["case"] = serde_json::to_value(c.case).map_err(|e| Error::Config(e.to_string()))?;
            if let Some(b) = c.boundary {
                v["boundary_exponent"] = json!(b.exponent);
                v["boundary_at"] = serde_json::to_value(b.at).map_err(|e| Error::Config(e.to_string()))?;
            }
            Ok((Output::Json(v), true))
        }
        "evolve" => {
            let omega: Potential = cfg.get::<String>("omega")?.parse()?;
            let t: f64 = cfg.get("t")?;
            let steps: usize = cfg.get("steps")?;
            let g = grid()?;
            let general = [cfg.opt::<f64>("alpha")?, cfg.opt("a")?, cfg.opt("b")?, cfg.opt("n")?];
            let u = match general {
                [None, None, None, None] => {
                    let f = initial_datum(&cfg.get::<String>("init")?, &g, cfg.get("m")?)?;
                    evolve_absorbed(&KernelParams::new(cfg.get("kappa")?)?, &omega, t, steps, &f)?.to_complex()
                }
                [Some(alpha), Some(a), Some(b), Some(n)] => {
                    let f = initial_datum(&cfg.get::<String>("init")?, &g, n)?;
                    general_absorbed(&OperatorSpec::new(alpha, a, b)?, n, &omega, t, steps, &f)?.to_complex()
                }
                _ => return Err(Error::Config("--alpha, --a, --b and --n must be given together".into())),
            };
            Ok((Output::Csv(u), true))
        }
        "verify" => {
            let mut suite = suite_by_name(&cfg.get::<String>("suite")?)?;
            let tol = cfg.opt::<f64>("tol")?;
            let grid = if cfg.grid_explicit { Some(parse_grid(&cfg.grid)?) } else { None };
            for spec in &mut suite {
                if let Some(t) = tol {
                    spec.tolerance = t;
                }
                if let Some(g) = &grid {
                    let (lo, hi) = g.span();
                    spec.parameters.insert("grid_xmin".into(), lo);
                    spec.parameters.insert("grid_xmax".into(), hi);
                    spec.parameters.insert("grid_panels".into(), g.panel_count() as f64);
                    spec.parameters.insert("grid_order".into(), g.order() as f64);
                }
            }
            let mut report = run_suite(&suite, cfg.seed)?;
            report.note("run", cfg.metadata());
            let pass = report.pass;
            Ok((Output::Json(serde_json::to_value(&report).map_err(|e| Error::Config(e.to_string()))?), pass))
        }
        other => Err(Error::Config(format!("unknown subcommand `{other}`"))),
    }
}

fn emit(cfg: &RunConfig, output: Output) -> Result<()> {
    let mut buf = Vec::new();
    match output {
        Output::Json(mut v) => {
            if cfg.subcommand != "verify" {
                v = json!({ "metadata": cfg.metadata(), "result": v });
            }
            buf.extend(serde_json::to_string_pretty(&v).map_err(|e| Error::Config(e.to_string()))?.bytes());
            buf.push(b'\n');
        }
        Output::Csv(f) => {
            let meta = vec![format!("version={VERSION}"), format!("config={}", serde_json::to_string(cfg).map_err(|e| Error::Config(e.to_string()))?)];
            write_csv(&f, &meta, &mut buf)?;
        }
    }
    match &cfg.output_path {
        Some(path) => fs::write(path, &buf).map_err(|e| Error::Io(format!("{path}: {e}"))),
        None => std::io::stdout().write_all(&buf).map_err(|e| Error::Io(e.to_string())),
    }
}

/// Maps an error to the exit-code contract.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Config(_)
        | Error::Parameter(_)
        | Error::Domain(..)
        | Error::InvalidOrder(_)
        | Error::InvalidGrid(_)
        | Error::Sector { .. }
        | Error::OutOfRange(_)
        | Error::UnknownCheck(_) => EXIT_USAGE,
        _ => EXIT_CHECK_FAILED,
    }
}

/// Runs the subcommand and returns the exit code.
pub fn dispatch(cfg: &RunConfig) -> i32 {
    let result = compute(cfg).and_then(|(out, pass)| emit(cfg, out).map(|_| pass));
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("halfline: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point used by the binary.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (cfg, jobs) = match resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("halfline: {e}");
            return exit_code(&e);
        }
    };
    if let Some(n) = jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("halfline: {e}");
        }
    }
    dispatch(&cfg)
}
