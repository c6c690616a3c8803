//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid arguments or input, 3 numeric failure.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    self, cross_polytope, equatorial_polygon, from_spherical, orthogonal_simplexes, pyramid_config, random_config,
    regular_simplex, square_pyramid_fp, Conf35Coords, PartitionType, SphericalConfig,
};
use crate::morse::{self, MorseReport};
use crate::optimize::{self, OptimizeOptions};
use crate::perturbation;
use crate::potentials::{self, PotentialKind};
use crate::stationarity::{self, StationaryClass};
use crate::sweep;

#[derive(Parser, Debug)]
#[command(name = "logsphere", version, about = "Point configurations on spheres: energies, stationarity, saddles and minima")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Pair potential: log | riesz:S | gauss:A | biquad:A,B,C
    #[arg(long, global = true, default_value = "log")]
    pub potential: String,
    /// Tolerance for stationarity decisions (command-specific default)
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Worker threads for parallel commands (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Significant digits in text and CSV output
    #[arg(long, global = true, default_value_t = 12)]
    pub digits: usize,
    /// Accepted deviation of input rows from unit norm
    #[arg(long, global = true, default_value_t = geometry::DEFAULT_READ_UNIT_TOL)]
    pub unit_tol: f64,
    /// Write the primary output (or the resulting configuration) to this file
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Critical {
    #[value(name = "C0", alias = "c0")]
    C0,
    #[value(name = "C1", alias = "c1")]
    C1,
    #[value(name = "C2", alias = "c2")]
    C2,
}

impl Critical {
    pub fn coords(self) -> Conf35Coords {
        match self {
            Critical::C0 => Conf35Coords::c0(),
            Critical::C1 => Conf35Coords::c1(),
            Critical::C2 => Conf35Coords::c2(),
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a named configuration
    #[command(group(ArgGroup::new("shape").required(true).args(["partition", "critical", "simplex", "cross", "polygon", "fp", "random"])))]
    Construct {
        /// Block sizes, e.g. 3,2 (two simplexes) or 1,2,2 (pyramid)
        #[arg(long)]
        partition: Option<String>,
        #[arg(long, value_enum)]
        critical: Option<Critical>,
        /// Regular simplex with this many vertices
        #[arg(long)]
        simplex: Option<usize>,
        /// Cross-polytope in this dimension
        #[arg(long)]
        cross: Option<usize>,
        /// Regular polygon with this many vertices (in --dim)
        #[arg(long)]
        polygon: Option<usize>,
        /// Square pyramid with base at this height
        #[arg(long, allow_hyphen_values = true)]
        fp: Option<f64>,
        /// Uniform random points (--dim, --n, --seed)
        #[arg(long)]
        random: bool,
        /// Ambient dimension (padding for --partition, plane host for --polygon)
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Energy and tangential gradient norm
    Energy { input: PathBuf },
    /// Force-equation residuals and classification
    Verify { input: PathBuf },
    /// Stationary class with rank-one diagnostics
    Classify { input: PathBuf },
    /// Energy along the one-parameter path through a {1,k,m} pyramid
    Path {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        /// Grid points across the admissible interval
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Energy-lowering rotation of a pair in a degenerate configuration
    Escape {
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
    },
    /// Riemannian gradient descent from a file or a random start
    Optimize {
        input: Option<PathBuf>,
        /// Random start dimension when no input is given
        #[arg(long)]
        dim: Option<usize>,
        /// Random start size (default dim + 2)
        #[arg(long)]
        n: Option<usize>,
        /// Tangent noise added to the start
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-11)]
        grad_tol: f64,
        #[arg(long)]
        step0: Option<f64>,
        /// CSV trace (iter, energy, grad_norm)
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Minimize from many random starts of d + 2 points
    Basin {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1e-11)]
        grad_tol: f64,
    },
    /// Hessian spectrum and Morse index
    Morse {
        /// General method on this configuration (otherwise --critical)
        input: Option<PathBuf>,
        #[arg(long, value_enum, conflicts_with = "input")]
        critical: Option<Critical>,
        #[arg(long, default_value_t = morse::DEFAULT_FD_STEP)]
        fd_step: f64,
        /// Absolute zero threshold (default relative to the spectrum)
        #[arg(long)]
        zero_tol: Option<f64>,
        /// Use the general method for a named critical point
        #[arg(long)]
        general: bool,
    },
    /// Riesz energy comparison of bi-pyramid and optimized square pyramid
    Sweep {
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        step: f64,
    },
    /// Riesz exponent where the square pyramid overtakes the bi-pyramid
    Crossover {
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
    },
}

/// Runs the CLI with the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI writing to the given streams; returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.global.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let mut log = String::new();
    let result = pool.install(|| execute(&cli, &mut log));
    let _ = err.write_all(log.as_bytes());
    match result {
        Ok(text) => {
            if out.write_all(text.as_bytes()).is_err() {
                return 2;
            }
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numeric() {
                3
            } else {
                2
            }
        }
    }
}

struct Ctx<'a> {
    g: &'a GlobalOpts,
}

impl Ctx<'_> {
    fn num(&self, x: f64) -> String {
        fmt_num(x, self.g.digits)
    }

    fn read(&self, path: &Path) -> Result<SphericalConfig> {
        let text = if path.as_os_str() == "-" {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            s
        } else {
            std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?
        };
        let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
            || (path.as_os_str() == "-" && !text.trim_start().starts_with('{'));
        if is_csv {
            geometry::from_csv(&text, self.g.unit_tol)
        } else {
            geometry::from_json(&text, self.g.unit_tol)
        }
    }

    fn write_file(&self, path: &Path, text: &str) -> Result<()> {
        std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    /// Serializes a configuration for a file (format by extension) or stdout (by --format).
    fn config_text(&self, config: &SphericalConfig, path: Option<&Path>) -> String {
        let csv = match path {
            Some(p) => p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")),
            None => self.g.format == Format::Csv,
        };
        if csv {
            geometry::to_csv(config)
        } else {
            geometry::to_json(config) + "\n"
        }
    }

    /// Routes primary output to --out when given.
    fn emit(&self, text: String) -> Result<String> {
        match &self.g.out {
            Some(p) => {
                self.write_file(p, &text)?;
                Ok(String::new())
            }
            None => Ok(text),
        }
    }

    fn json<T: Serialize>(&self, v: &T) -> String {
        serde_json::to_string_pretty(v).expect("report serializes") + "\n"
    }
}

/// Fixed notation for moderate magnitudes, scientific otherwise.
pub fn fmt_num(x: f64, digits: usize) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e6).contains(&a) {
        format!("{x:.digits$}")
    } else {
        format!("{x:.digits$e}")
    }
}

fn execute(cli: &Cli, log: &mut String) -> Result<String> {
    let kind: PotentialKind = cli.global.potential.parse().map_err(|e| match e {
        Error::Parse(m) => Error::InvalidArgument(m),
        other => other,
    })?;
    let ctx = Ctx { g: &cli.global };
    match &cli.command {
        Command::Construct { partition, critical, simplex, cross, polygon, fp, random, dim, n } => {
            let config = if let Some(p) = partition {
                let part = PartitionType::parse(p)?;
                let base = if part.has_apex() { pyramid_config(&part)? } else { orthogonal_simplexes(&part)? };
                match dim {
                    Some(d) => base.padded(*d)?,
                    None => base,
                }
            } else if let Some(c) = critical {
                from_spherical(&c.coords())?.with_label(format!("{c:?}"))
            } else if let Some(m) = simplex {
                regular_simplex(*m)?
            } else if let Some(d) = cross {
                cross_polytope(*d)?
            } else if let Some(k) = polygon {
                equatorial_polygon(*k, dim.unwrap_or(2))?
            } else if let Some(t) = fp {
                square_pyramid_fp(*t)?
            } else if *random {
                let d = dim.ok_or_else(|| Error::InvalidArgument("--random needs --dim".into()))?;
                random_config(d, n.unwrap_or(d + 2), cli.global.seed)?
            } else {
                unreachable!("clap requires one shape")
            };
            let text = ctx.config_text(&config, cli.global.out.as_deref());
            ctx.emit(text)
        }
        Command::Energy { input } => {
            let config = ctx.read(input)?;
            let e = potentials::energy(&config, kind)?;
            let g = potentials::riemannian_grad_norm(&config, kind)?;
            let text = match ctx.g.format {
                Format::Json => ctx.json(&serde_json::json!({ "potential": kind.to_string(), "energy": e, "grad_norm": g })),
                Format::Csv => format!("potential,energy,grad_norm\n{kind},{},{}\n", ctx.num(e), ctx.num(g)),
                Format::Text => format!("potential={kind} energy={} grad_norm={}\n", ctx.num(e), ctx.num(g)),
            };
            ctx.emit(text)
        }
        Command::Verify { input } => verify(&ctx, &ctx.read(input)?),
        Command::Classify { input } => classify_cmd(&ctx, &ctx.read(input)?),
        Command::Path { k, m, points } => {
            if *points < 2 {
                return Err(Error::InvalidArgument("--points must be at least 2".into()));
            }
            let (lo, hi) = perturbation::pyramid_bracket(*k, *m);
            let samples = (0..*points)
                .map(|i| perturbation::pyramid_energy(*k, *m, lo + (hi - lo) * i as f64 / (*points - 1) as f64))
                .collect::<Result<Vec<_>>>()?;
            let text = match ctx.g.format {
                Format::Json => ctx.json(&samples),
                _ => {
                    let mut s = String::from("t,energy,energy_direct,derivative_sign\n");
                    for p in &samples {
                        let _ = writeln!(
                            s,
                            "{},{},{},{}",
                            ctx.num(p.t),
                            ctx.num(p.energy),
                            ctx.num(p.energy_direct),
                            p.derivative_sign
                        );
                    }
                    s
                }
            };
            ctx.emit(text)
        }
        Command::Escape { input, theta } => {
            let config = ctx.read(input)?;
            let r = perturbation::degenerate_escape(&config, kind, *theta)?;
            if let Some(p) = &cli.global.out {
                ctx.write_file(p, &ctx.config_text(&r.config, Some(p)))?;
            }
            Ok(match ctx.g.format {
                Format::Json => ctx.json(&serde_json::json!({
                    "energy_delta": r.energy_delta,
                    "pair": [r.pair.0, r.pair.1],
                    "witness": r.witness,
                    "points": r.config.points().iter().map(|p| p.iter().cloned().collect::<Vec<f64>>()).collect::<Vec<_>>(),
                })),
                Format::Csv => format!("pair_i,pair_j,witness,energy_delta\n{},{},{},{}\n", r.pair.0, r.pair.1, r.witness, ctx.num(r.energy_delta)),
                Format::Text => format!(
                    "rotated pair=({},{}) witness={} energy_delta={}\n",
                    r.pair.0,
                    r.pair.1,
                    r.witness,
                    ctx.num(r.energy_delta)
                ),
            })
        }
        Command::Optimize { input, dim, n, noise, max_iters, grad_tol, step0, trace } => {
            let start = match (input, dim) {
                (Some(p), _) => ctx.read(p)?,
                (None, Some(d)) => random_config(*d, n.unwrap_or(d + 2), cli.global.seed)?,
                (None, None) => return Err(Error::InvalidArgument("give an input file or --dim".into())),
            };
            let start = if *noise > 0.0 {
                perturbation::PerturbationBundle::random_tangent(&start, cli.global.seed, *noise).apply(&start)?
            } else {
                start
            };
            let opts = OptimizeOptions {
                max_iters: *max_iters,
                grad_tol: *grad_tol,
                step0: *step0,
                seed: cli.global.seed,
                ..Default::default()
            };
            let (config, tr) = optimize::minimize(&start, kind, &opts)?;
            if let Some(p) = trace {
                ctx.write_file(p, &tr.to_csv(ctx.g.digits))?;
            }
            if let Some(p) = &cli.global.out {
                ctx.write_file(p, &ctx.config_text(&config, Some(p)))?;
            }
            let class = tr.final_class.as_ref().map_or_else(|| "Unclassified".to_string(), |c| c.to_string());
            let _ = writeln!(log, "{:?} after {} iterations", tr.stop, tr.iterations);
            Ok(match ctx.g.format {
                Format::Json => ctx.json(&serde_json::json!({
                    "iterations": tr.iterations,
                    "stop": tr.stop,
                    "energy": tr.final_energy(),
                    "grad_norm": tr.final_grad_norm,
                    "class": class,
                })),
                Format::Csv => format!(
                    "iterations,energy,grad_norm,class\n{},{},{},{class}\n",
                    tr.iterations,
                    ctx.num(tr.final_energy()),
                    ctx.num(tr.final_grad_norm)
                ),
                Format::Text => format!(
                    "energy={} grad_norm={} iterations={} class={class}\n",
                    ctx.num(tr.final_energy()),
                    ctx.num(tr.final_grad_norm),
                    tr.iterations
                ),
            })
        }
        Command::Basin { dim, trials, grad_tol } => {
            let opts = OptimizeOptions { grad_tol: *grad_tol, seed: cli.global.seed, ..Default::default() };
            let r = optimize::basin_experiment(*dim, *trials, kind, &opts)?;
            let text = match ctx.g.format {
                Format::Json => ctx.json(&r),
                Format::Csv => {
                    let mut s = String::from("trial,start_seed,class,energy,grad_norm,iterations,converged\n");
                    for t in &r.trials {
                        let _ = writeln!(
                            s,
                            "{},{},{},{},{},{},{}",
                            t.trial,
                            t.start_seed,
                            t.class,
                            ctx.num(t.energy),
                            ctx.num(t.grad_norm),
                            t.iterations,
                            t.converged
                        );
                    }
                    s
                }
                Format::Text => {
                    let mins = r.min_energy_by_class();
                    let mut s = format!("d={} trials={}\n", r.dim, r.trials.len());
                    for (class, count) in &r.histogram {
                        let _ = writeln!(s, "{class} count={count} min_energy={}", ctx.num(mins[class]));
                    }
                    if let Some((class, e)) = r.best() {
                        let _ = writeln!(s, "best={class} energy={}", ctx.num(e));
                    }
                    s
                }
            };
            ctx.emit(text)
        }
        Command::Morse { input, critical, fd_step, zero_tol, general } => {
            let report = match (input, critical) {
                (Some(p), _) => morse::morse_index_general(&ctx.read(p)?, kind, *fd_step, *zero_tol)?,
                (None, Some(c)) if *general => {
                    morse::morse_index_general(&from_spherical(&c.coords())?, kind, *fd_step, *zero_tol)?
                }
                (None, Some(c)) => {
                    if kind != PotentialKind::Log {
                        return Err(Error::InvalidArgument("the chart method is for the log potential".into()));
                    }
                    morse::morse_index_conf35(&c.coords(), *fd_step, *zero_tol)?
                }
                (None, None) => return Err(Error::InvalidArgument("give an input file or --critical".into())),
            };
            ctx.emit(morse_text(&ctx, &report))
        }
        Command::Sweep { from, to, step } => {
            let r = sweep::sweep(*from, *to, *step)?;
            let text = match ctx.g.format {
                Format::Json => ctx.json(&r),
                _ => {
                    if let Some(c) = r.crossover {
                        let _ = writeln!(log, "crossover s*={}", ctx.num(c));
                    }
                    r.to_csv(ctx.g.digits)
                }
            };
            ctx.emit(text)
        }
        Command::Crossover { lo, hi } => {
            let s = sweep::find_crossover(*lo, *hi)?;
            let text = match ctx.g.format {
                Format::Json => ctx.json(&serde_json::json!({ "s_star": s, "tol": sweep::CROSSOVER_TOL })),
                Format::Csv => format!("s_star\n{}\n", ctx.num(s)),
                Format::Text => format!("s*={}\n", ctx.num(s)),
            };
            ctx.emit(text)
        }
    }
}

fn verify(ctx: &Ctx, config: &SphericalConfig) -> Result<String> {
    let tol = ctx.g.tol.unwrap_or(1e-10);
    let report = potentials::log_force_report(config)?;
    let class = match stationarity::classify(config, tol) {
        Ok(c) => c.class.to_string(),
        Err(Error::Unsupported(_)) => "Unclassified".into(),
        Err(e) => return Err(e),
    };
    let lambda_dev = report
        .lambda_estimates
        .iter()
        .map(|l| (l - (config.len() as f64 - 1.0)).abs())
        .fold(0.0, f64::max);
    let defect = report.distance_sum_defect.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let text = match ctx.g.format {
        Format::Json => ctx.json(&serde_json::json!({ "report": report, "class": class, "tol": tol })),
        Format::Csv => {
            let mut s = String::from("point,residual,lambda,distance_sum_defect\n");
            for i in 0..config.len() {
                let _ = writeln!(
                    s,
                    "{i},{},{},{}",
                    ctx.num(report.per_point_residual[i]),
                    ctx.num(report.lambda_estimates[i]),
                    ctx.num(report.distance_sum_defect[i])
                );
            }
            s
        }
        Format::Text => {
            let cmp = if report.max_residual < tol { "<" } else { ">=" };
            format!(
                "max_residual={} {cmp} {tol:e}, class={class}\nmax |lambda - (N-1)|={}\nmax distance_sum_defect={}\n",
                fmt_num(report.max_residual, 3),
                fmt_num(lambda_dev, 3),
                fmt_num(defect, 3)
            )
        }
    };
    ctx.emit(text)
}

fn classify_cmd(ctx: &Ctx, config: &SphericalConfig) -> Result<String> {
    let tol = ctx.g.tol.unwrap_or(stationarity::DEFAULT_CLASSIFY_TOL);
    let c = stationarity::classify(config, tol)?;
    let identities = c.diagnostics.as_ref().and_then(|d| stationarity::lemma_identities(d).ok());
    let text = match ctx.g.format {
        Format::Json => ctx.json(&serde_json::json!({
            "class": c.class.to_string(),
            "rank_a": c.diagnostics.as_ref().map(|d| d.rank_a),
            "a": c.diagnostics.as_ref().map(|d| d.a.clone()),
            "identities": identities,
        })),
        Format::Csv => {
            let mut s = String::from("point,a\n");
            if let Some(d) = &c.diagnostics {
                for (i, a) in d.a.iter().enumerate() {
                    let _ = writeln!(s, "{i},{}", ctx.num(*a));
                }
            }
            s
        }
        Format::Text => {
            let mut s = format!("class={}\n", c.class);
            if let Some(d) = &c.diagnostics {
                let a: Vec<String> = d.a.iter().map(|x| ctx.num(*x)).collect();
                let _ = writeln!(s, "rank_a={} a=[{}]", d.rank_a, a.join(", "));
            }
            if let Some(id) = &identities {
                let _ = writeln!(s, "identity_defect={} min_slack={}", fmt_num(id.max_defect(), 3), ctx.num(id.min_slack));
            }
            if let StationaryClass::NonStationary { .. } = c.class {
                let _ = writeln!(s, "(tolerance {tol:e})");
            }
            s
        }
    };
    ctx.emit(text)
}

fn morse_text(ctx: &Ctx, r: &MorseReport) -> String {
    match ctx.g.format {
        Format::Json => ctx.json(r),
        Format::Csv => {
            let mut s = String::from("k,eigenvalue\n");
            for (k, e) in r.eigenvalues.iter().enumerate() {
                let _ = writeln!(s, "{k},{}", ctx.num(*e));
            }
            s
        }
        Format::Text => {
            let eig: Vec<String> = r.eigenvalues.iter().map(|e| fmt_num(*e, 6)).collect();
            format!(
                "index={} nullity={} orbit_dim={}\neigenvalues=[{}]\nzero_tol={}\n",
                r.index,
                r.nullity,
                r.orbit_dim,
                eig.join(", "),
                fmt_num(r.zero_tol, 3)
            )
        }
    }
}
