//! Command-line front end. Exit codes: 0 success, 1 configuration error, 2 numeric failure,
//! 3 failed verification.

pub mod verify;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::asymptotics::{adjudicate, predict_expansion, DensityVariant};
use crate::complex::{BoundarySpec, CellComplex, Side};
use crate::config::{check_levels, ExperimentConfig};
use crate::dimerft::{dimer_weights_wr, duality_check, kasteleyn_check_and_z};
use crate::error::{Error, Result};
use crate::fmt17;
use crate::latticefn::{lattice_log_csv, lattice_log_table, neumann_series_check, residual_series, LatticeLogParams, ParametrixConfig};
use crate::metric::{consistency_error, parse_metric_expr, weights_from_metric, Form};
use crate::operators::{consistency_residual, laplacian0};
use crate::spectral::{logdet_laplacian, parse_sweep_csv, sweep, SweepOptions, SweepSample, SweepSeries};

use verify::{run_suite, Suite};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "lapdet", version, about = "Log-determinants of discrete Laplacians on rectangles and related lattice checks")]
pub struct Cli {
    /// Metric and experiment config (JSON or TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct LevelArgs {
    /// Comma-separated subdivision levels, strictly ascending.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<u32>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Log-determinant of the Dirichlet/Neumann Laplacian at each level.
    Logdet {
        #[command(flatten)]
        levels: LevelArgs,
        /// Add the eigenvalue-product value for constant metrics.
        #[arg(long)]
        oracle: bool,
        /// Write the finest-level operator as sorted COO triplets to this file.
        #[arg(long)]
        operator: Option<PathBuf>,
    },
    /// Log-determinant series; the JSON report adds the expansion fit.
    Sweep {
        #[command(flatten)]
        levels: LevelArgs,
        #[arg(long)]
        oracle: bool,
    },
    /// Fit a sweep series and compare with each density variant.
    Fit {
        /// Sweep CSV; computed from the config when absent.
        #[arg(long)]
        series: Option<PathBuf>,
        #[arg(long)]
        variant: Option<String>,
        #[command(flatten)]
        levels: LevelArgs,
    },
    /// Predicted expansion coefficients for the configured metric.
    Predict {
        #[arg(long)]
        variant: Option<String>,
    },
    /// Lattice logarithm table on a square around the origin.
    Latticelog {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 10)]
        radius: i64,
    },
    /// Dimer model of the doubled complex against the fermionic determinant.
    DimerCheck {
        /// Cells along x and y; defaults to the config's base cells.
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
        /// Comma-separated Dirichlet sides overriding the config.
        #[arg(long, value_delimiter = ',')]
        sides: Option<Vec<String>>,
        /// Also sum all perfect matchings directly.
        #[arg(long)]
        brute: bool,
    },
    /// Convergence orders of the Laplacian and the Riemannian structure, and the scaling identity.
    Consistency {
        #[command(flatten)]
        levels: LevelArgs,
        /// Test function for the Laplacian residual.
        #[arg(long, default_value = "sin(2*x + 0.3) * cos(3*y - 0.2)")]
        function: String,
        /// Metric scale factor for the scaling identity.
        #[arg(long, default_value_t = 2.0)]
        scale: f64,
    },
    /// Residual norms of the lattice-logarithm parametrix (constant metrics).
    Parametrix {
        #[command(flatten)]
        levels: LevelArgs,
        /// Collar width; 1/8 of the shorter side by default.
        #[arg(long)]
        delta: Option<f64>,
        /// Compare truncated Neumann series with a direct solve.
        #[arg(long)]
        neumann: bool,
    },
    /// Run an invariant suite and print one PASS/FAIL line per check.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
}

/// Rendered command output and its exit code.
struct Output {
    text: String,
    code: i32,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: 0 }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_NUMERIC
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let out = dispatch(cli, cfg)?;
    write_output(cli.out.as_deref(), &out.text)?;
    Ok(out.code)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    let res = match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| format!("stdout: {e}")),
    };
    res.map_err(Error::Config)
}

fn resolve_levels(arg: &LevelArgs, cfg: &ExperimentConfig, default: &[u32]) -> Result<Vec<u32>> {
    let levels = arg.levels.clone().or_else(|| cfg.levels.clone()).unwrap_or_else(|| default.to_vec());
    check_levels(&levels)?;
    Ok(levels)
}

fn variant_arg(arg: &Option<String>, cfg: &ExperimentConfig) -> Result<Option<DensityVariant>> {
    match arg {
        Some(s) => DensityVariant::parse(s).map(Some),
        None => Ok(cfg.variant),
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

/// JSON report carrying the resolved config and seed.
fn report(cli: &Cli, cfg: &ExperimentConfig, body: Value) -> String {
    let mut v = json!({ "config": cfg, "seed": cli.seed });
    if let (Value::Object(top), Value::Object(b)) = (&mut v, body) {
        top.extend(b);
    }
    pretty(&v)
}

const SWEEP_DEFAULT: [u32; 3] = [3, 4, 5];
const FIT_DEFAULT: [u32; 6] = [3, 4, 5, 6, 7, 8];

fn run_sweep(cfg: &ExperimentConfig, levels: &[u32], oracle: bool) -> Result<SweepSeries> {
    sweep(&cfg.metric()?, &cfg.base_complex()?, &cfg.dirichlet_sides, levels, SweepOptions { with_oracle: oracle, ..Default::default() })
}

fn samples(s: &SweepSeries) -> Vec<SweepSample> {
    s.entries.iter().map(|e| SweepSample { epsilon: e.epsilon, logdet: e.logdet }).collect()
}

fn max_oracle_diff(s: &SweepSeries) -> Option<f64> {
    s.entries.iter().filter_map(|e| e.oracle.map(|o| (o - e.logdet).abs())).reduce(f64::max)
}

fn dispatch(cli: &Cli, mut cfg: ExperimentConfig) -> Result<Output> {
    match &cli.command {
        Command::Logdet { levels, oracle, operator } => {
            let lv = resolve_levels(levels, &cfg, &SWEEP_DEFAULT)?;
            cfg.levels = Some(lv.clone());
            let s = run_sweep(&cfg, &lv, *oracle)?;
            if let Some(path) = operator {
                let x = cfg.base_complex()?.at_level(*lv.last().expect("levels are non-empty"));
                let w = weights_from_metric(&x, &cfg.metric()?)?;
                let b = laplacian0(&x, &w, &cfg.dirichlet_sides)?;
                let file = std::fs::File::create(path).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
                b.delta0_hat
                    .write_coo(std::io::BufWriter::new(file))
                    .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
            }
            if let Some(d) = max_oracle_diff(&s) {
                eprintln!("max |logdet - oracle| = {d:.3e}");
            }
            Ok(Output::ok(match cli.format {
                Format::Csv => s.to_csv(),
                Format::Json => report(cli, &cfg, json!({ "series": s, "max_oracle_diff": max_oracle_diff(&s) })),
            }))
        }
        Command::Sweep { levels, oracle } => {
            let lv = resolve_levels(levels, &cfg, &FIT_DEFAULT)?;
            cfg.levels = Some(lv.clone());
            let s = run_sweep(&cfg, &lv, *oracle)?;
            Ok(Output::ok(match cli.format {
                Format::Csv => s.to_csv(),
                Format::Json => {
                    let adj = if lv.len() >= crate::asymptotics::MIN_LEVELS {
                        Some(adjudicate(&samples(&s), &cfg.metric()?, &cfg.dirichlet_sides)?)
                    } else {
                        None
                    };
                    report(cli, &cfg, json!({ "series": s, "max_oracle_diff": max_oracle_diff(&s), "fit": adj }))
                }
            }))
        }
        Command::Fit { series, variant, levels } => {
            let data = match series {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                    parse_sweep_csv(&text)?
                }
                None => {
                    let lv = resolve_levels(levels, &cfg, &FIT_DEFAULT)?;
                    cfg.levels = Some(lv.clone());
                    samples(&run_sweep(&cfg, &lv, false)?)
                }
            };
            let chosen = variant_arg(variant, &cfg)?;
            cfg.variant = chosen;
            let adj = adjudicate(&data, &cfg.metric()?, &cfg.dirichlet_sides)?;
            Ok(Output::ok(match cli.format {
                Format::Csv => {
                    let mut s = String::from("variant,I_F,I_B,c_log_predicted,c_bulk,c_boundary,c_log,c_const,residual,selected\n");
                    for r in adj.variants.iter().filter(|r| chosen.is_none_or(|c| c == r.variant)) {
                        let f = &r.fitted;
                        let _ = writeln!(
                            s,
                            "{},{},{},{},{},{},{},{},{},{}",
                            r.variant.name(),
                            fmt17(r.I_F),
                            fmt17(r.I_B),
                            fmt17(r.c_log_predicted),
                            fmt17(f.c_bulk),
                            fmt17(f.c_boundary),
                            fmt17(f.c_log),
                            fmt17(f.c_const),
                            fmt17(r.residual),
                            r.variant == adj.selected_variant
                        );
                    }
                    s
                }
                Format::Json => {
                    let chosen_report = chosen.and_then(|c| adj.variants.iter().find(|r| r.variant == c));
                    let mut body = serde_json::to_value(&adj).expect("reports serialize");
                    if let (Value::Object(m), Some(r)) = (&mut body, chosen_report) {
                        m.insert("report".into(), serde_json::to_value(r).expect("reports serialize"));
                    }
                    report(cli, &cfg, body)
                }
            }))
        }
        Command::Predict { variant } => {
            let chosen = variant_arg(variant, &cfg)?;
            cfg.variant = chosen;
            let g = cfg.metric()?;
            let preds = DensityVariant::ALL
                .into_iter()
                .filter(|v| chosen.is_none_or(|c| c == *v))
                .map(|v| predict_expansion(&g, g.domain, &cfg.dirichlet_sides, v))
                .collect::<Result<Vec<_>>>()?;
            Ok(Output::ok(match cli.format {
                Format::Csv => {
                    let mut s = String::from("variant,I_F,I_B,c_log\n");
                    for p in &preds {
                        let _ = writeln!(s, "{},{},{},{}", p.variant.name(), fmt17(p.I_F), fmt17(p.I_B), fmt17(p.c_log));
                    }
                    s
                }
                Format::Json => report(cli, &cfg, json!({ "predictions": preds })),
            }))
        }
        Command::Latticelog { a, b, radius } => {
            if *radius < 0 {
                return Err(Error::Config(format!("radius must be non-negative, got {radius}")));
            }
            let rows = lattice_log_table(LatticeLogParams::new(*a, *b)?, *radius)?;
            Ok(Output::ok(match cli.format {
                Format::Csv => lattice_log_csv(&rows),
                Format::Json => pretty(&json!({ "a": a, "b": b, "radius": radius, "seed": cli.seed, "rows": rows })),
            }))
        }
        Command::DimerCheck { nx, ny, sides, brute } => {
            if let Some(names) = sides {
                let parsed = names.iter().map(|n| Side::parse(n)).collect::<Result<Vec<_>>>()?;
                cfg.dirichlet_sides = BoundarySpec::new(&parsed)?;
            }
            let nx = nx.unwrap_or(cfg.base_cells[0]);
            let ny = ny.unwrap_or(cfg.base_cells[1]);
            cfg.base_cells = [nx, ny];
            let x = CellComplex::new(cfg.rect()?, nx, ny)?;
            let w = weights_from_metric(&x, &cfg.metric()?)?;
            let l = cfg.dirichlet_sides;
            if !l.is_proper_arc() {
                return Err(Error::Config(format!(
                    "dimer-check needs Dirichlet sides forming a connected proper arc, got {:?} (try --sides bottom)",
                    l.sides()
                )));
            }
            let check = kasteleyn_check_and_z(&x, &w, &l, *brute)?;
            eprintln!("max relative |Z_dimer - Z_f| / Z_f = {:.3e}", check.max_relative_error());
            let graph = dimer_weights_wr(&x, &w, &l);
            Ok(Output::ok(match cli.format {
                Format::Csv => graph.to_csv(),
                Format::Json => {
                    let duality = duality_check(&x, &w, &l)?;
                    report(
                        cli,
                        &cfg,
                        json!({
                            "n_vertices": graph.n_vertices,
                            "n_edges": graph.edges.len(),
                            "correspondence": check,
                            "max_relative_error": check.max_relative_error(),
                            "duality": duality,
                        }),
                    )
                }
            }))
        }
        Command::Consistency { levels, function, scale } => {
            let lv = resolve_levels(levels, &cfg, &[4, 5, 6, 7])?;
            if lv.len() < 3 {
                return Err(Error::Config("consistency needs at least 3 levels".into()));
            }
            cfg.levels = Some(lv.clone());
            let g = cfg.metric()?;
            let base = cfg.base_complex()?;
            let f = parse_metric_expr(function)?;
            let lap = consistency_residual(&base, &lv, &g, &cfg.dirichlet_sides, &f.expr)?;
            let f0 = |x: f64, y: f64| (x + 0.5 * y).exp();
            let (u, v) = (|x: f64, y: f64| (x * y).cos(), |x: f64, y: f64| x - y * y);
            let f2 = |x: f64, y: f64| 1.0 + x * y;
            let forms = [Form::Zero(&f0), Form::One(&u, &v), Form::Two(&f2)];
            let riem = forms.iter().map(|f| consistency_error(&base, &lv, &g, f)).collect::<Result<Vec<_>>>()?;
            if !(*scale > 0.0) {
                return Err(Error::Config(format!("scale must be positive, got {scale}")));
            }
            let x = base.at_level(*lv.last().expect("levels are non-empty"));
            let r0 = logdet_laplacian(&x, &g, &cfg.dirichlet_sides)?;
            let r1 = logdet_laplacian(&x, &g.scaled(*scale)?, &cfg.dirichlet_sides)?;
            let n = r0.n as f64;
            let scaling_error = (r1.logdet - r0.logdet + n * scale.ln()).abs();
            Ok(Output::ok(match cli.format {
                Format::Csv => {
                    let mut s = String::from("kind,level,epsilon,error,slope\n");
                    let mut rows = |kind: &str, c: &crate::metric::ConvergenceSeries| {
                        for k in 0..c.levels.len() {
                            let _ = writeln!(s, "{kind},{},{},{},{}", c.levels[k], fmt17(c.epsilon[k]), fmt17(c.error[k]), fmt17(c.slope));
                        }
                    };
                    rows("laplacian", &lap);
                    for (q, c) in riem.iter().enumerate() {
                        rows(&format!("riemannian_{q}form"), c);
                    }
                    let _ = writeln!(s, "scaling,{},{},{},", lv.last().expect("levels are non-empty"), fmt17(x.mesh()), fmt17(scaling_error));
                    s
                }
                Format::Json => report(
                    cli,
                    &cfg,
                    json!({
                        "function": function,
                        "laplacian": lap,
                        "riemannian": riem,
                        "scaling": { "c": scale, "n": r0.n, "logdet": r0.logdet, "logdet_scaled": r1.logdet, "error": scaling_error },
                    }),
                ),
            }))
        }
        Command::Parametrix { levels, delta, neumann } => {
            let lv = resolve_levels(levels, &cfg, &[4, 5, 6])?;
            cfg.levels = Some(lv.clone());
            let pc = ParametrixConfig {
                metric: cfg.metric()?,
                boundary: cfg.dirichlet_sides,
                base: cfg.base_complex()?,
                level: lv[0],
                delta: *delta,
            };
            let r = residual_series(&pc, &lv)?;
            let ns = if *neumann { Some(neumann_series_check(&pc, &lv)?) } else { None };
            Ok(Output::ok(match cli.format {
                Format::Csv => {
                    let mut s = String::from("level,epsilon,column_l1,bulk_row_l1");
                    if ns.is_some() {
                        s.push_str(",neumann1,neumann2,neumann3");
                    }
                    s.push('\n');
                    for k in 0..lv.len() {
                        let _ = write!(s, "{},{},{},{}", lv[k], fmt17(r.epsilon[k]), fmt17(r.column_l1[k]), fmt17(r.bulk_row_l1[k]));
                        if let Some(n) = &ns {
                            let _ = write!(s, ",{},{},{}", fmt17(n.error_terms1[k]), fmt17(n.error_terms2[k]), fmt17(n.error_terms3[k]));
                        }
                        s.push('\n');
                    }
                    s
                }
                Format::Json => report(cli, &cfg, json!({ "delta": delta, "residual": r, "neumann": ns })),
            }))
        }
        Command::Verify { suite } => {
            let checks = run_suite(*suite, cli.seed)?;
            for c in &checks {
                eprintln!("{}", c.line());
            }
            let passed = checks.iter().all(|c| c.passed);
            let text = match cli.format {
                Format::Csv => {
                    let mut s = String::from("status,check,value,relation,limit\n");
                    for c in &checks {
                        let status = if c.passed { "PASS" } else { "FAIL" };
                        let _ = writeln!(s, "{status},{},{},{},{}", c.name, fmt17(c.value), c.relation, fmt17(c.limit));
                    }
                    s
                }
                Format::Json => pretty(&json!({ "seed": cli.seed, "passed": passed, "checks": checks })),
            };
            Ok(Output { text, code: if passed { 0 } else { EXIT_VERIFY } })
        }
    }
}
