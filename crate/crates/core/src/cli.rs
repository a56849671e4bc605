//! Command-line front end. [`run`] parses arguments, dispatches and maps
//! failures to exit codes.

use crate::catalog::{build, CodeDefinition, CodeJson, CodeName};
use crate::error::Error;
use crate::gain::{self, SearchScope};
use crate::gclt::{self, apply_cr, apply_gclt, CrSpec, GcltSpec};
use crate::modem::{Constellation, Modulation};
use crate::qo::{self, QO_TOLERANCE};
use crate::sim::{self, SimConfig};
use crate::verify;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qostbc", version, about = "Quasi-orthogonal STBC construction, analysis and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CodeArg {
    /// Catalog code name (Q4, Q4_CR, Q4_LT, Q8, Q8_CR, Q8_LT, T8, T8_CR, T8_LT, G4C).
    #[arg(long)]
    code: Option<String>,
    /// Code in catalog JSON form, as written by `catalog` or `transform`.
    #[arg(long, conflicts_with = "code")]
    code_file: Option<PathBuf>,
    /// Tolerance used when rediscovering the grouping of a code file.
    #[arg(long, default_value_t = QO_TOLERANCE)]
    tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List catalog codes, or dump one code as JSON.
    Catalog {
        #[arg(long)]
        code: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pairwise QO table and grouping of a code.
    Analyze {
        #[command(flatten)]
        code: CodeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a GCLT or constellation rotation and print the new code.
    Transform {
        #[command(flatten)]
        code: CodeArg,
        /// 2D rotation angle (degrees) applied to every two-symbol group.
        #[arg(long, group = "kind")]
        gclt_theta: Option<f64>,
        /// Six comma-separated Givens angles (degrees) for four-symbol groups.
        #[arg(long, group = "kind", value_delimiter = ',', num_args = 6)]
        givens: Option<Vec<f64>>,
        /// Givens factor order: `canonical` or `t8`.
        #[arg(long, default_value = "canonical", requires = "givens")]
        order: String,
        /// Rail rotation angle in degrees.
        #[arg(long, group = "kind", requires = "cr_symbols")]
        cr_angle: Option<f64>,
        /// 1-based symbols to rotate, comma separated.
        #[arg(long, value_delimiter = ',', requires = "cr_angle")]
        cr_symbols: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum determinant over difference patterns.
    Mindet {
        #[command(flatten)]
        code: CodeArg,
        #[arg(long = "mod", default_value = "4qam")]
        modulation: Modulation,
        /// `within_group` or `full`.
        #[arg(long, default_value = "within_group")]
        scope: SearchScope,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diversity product of one code, or of every catalog code.
    Divprod {
        #[command(flatten)]
        code: CodeArg,
        #[arg(long = "mod", default_value = "4qam")]
        modulation: Modulation,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Q4 min-det as a function of the pair rotation angle (CSV).
    SweepTheta {
        #[arg(long = "mod", default_value = "4qam")]
        modulation: Modulation,
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        #[arg(long, default_value_t = 45.0)]
        stop: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multi-start search over the six T8 Givens angles.
    SearchT8 {
        #[arg(long, default_value_t = 16)]
        starts: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long = "mod", default_value = "4qam")]
        modulation: Modulation,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid search over rail-rotation angles.
    SearchCr {
        #[arg(long)]
        code: String,
        /// Comma-separated 1-based symbols sharing one angle; repeat for more angles.
        #[arg(long, required = true)]
        symbols: Vec<String>,
        /// Angle grid in degrees, `start:step:stop`.
        #[arg(long, default_value = "1:1:89")]
        grid: String,
        #[arg(long = "mod", default_value = "4qam")]
        modulation: Modulation,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo BER over a Rayleigh block-fading channel (CSV).
    Simulate {
        /// `NAME` or `NAME:MOD`; repeat for several curves.
        #[arg(long, required = true)]
        code: Vec<String>,
        #[arg(long = "mod", default_value = "4qam")]
        modulation: Modulation,
        #[arg(long, default_value_t = 1)]
        nr: usize,
        /// SNR grid in dB, `start:step:stop`, inclusive.
        #[arg(long, default_value = "0:2:24")]
        snr: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        min_errors: u64,
        #[arg(long, default_value_t = 2_000_000)]
        max_frames: u64,
        /// Stop a curve once a point's BER drops below this value.
        #[arg(long)]
        stop_below_ber: Option<f64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run the built-in invariant suite.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
    Io(String),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code. Output goes to stdout or the `--out` file.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (EXIT_USAGE, m),
                Failure::Io(m) => (EXIT_USAGE, m),
                Failure::Verify(m) => (EXIT_VERIFY, m),
                Failure::Lib(e @ Error::Budget { .. }) => (EXIT_BUDGET, e.to_string()),
                Failure::Lib(e) => (EXIT_USAGE, e.to_string()),
            };
            eprintln!("error: {msg}");
            code
        }
    }
}

fn dispatch(cmd: Command) -> Outcome<()> {
    match cmd {
        Command::Catalog { code, out } => {
            let v = match code {
                Some(name) => serde_json::to_value(build(name.parse()?)?.to_json()).expect("json"),
                None => {
                    let mut list = Vec::new();
                    for name in CodeName::ALL {
                        let c = build(name)?;
                        let (num, den) = name.rate();
                        list.push(json!({
                            "name": name.as_str(),
                            "T": c.t(),
                            "Nt": c.nt(),
                            "K": c.k(),
                            "rate": format!("{num}/{den}"),
                            "symbols_per_group": c.grouping().max_group_size(),
                        }));
                    }
                    Value::Array(list)
                }
            };
            emit_json(out.as_deref(), &v)
        }
        Command::Analyze { code, out } => {
            let c = load_code(&code)?;
            let table = qo::qo_table(&c, code.tol)?;
            let v = json!({
                "code": c.name(),
                "grouping": c.grouping().one_based(),
                "qo_table": table,
                "symbols_per_group": c.grouping().max_group_size(),
                "max_cross_group_violation": qo::max_cross_group_violation(&c)?,
            });
            emit_json(out.as_deref(), &v)
        }
        Command::Transform {
            code,
            gclt_theta,
            givens,
            order,
            cr_angle,
            cr_symbols,
            out,
        } => {
            let c = load_code(&code)?;
            let (new, meta) = if let Some(deg) = gclt_theta {
                let spec = GcltSpec::uniform(&c, &gclt::rotation_2d(deg.to_radians()))?;
                let meta = json!({"kind": "gclt_2d", "theta_deg": deg, "theta_rad": deg.to_radians()});
                (apply_gclt(&c, &spec)?.renamed(format!("{}+GCLT", c.name())), meta)
            } else if let Some(g) = givens {
                let ord = match order.as_str() {
                    "canonical" => gclt::CANONICAL_ORDER,
                    "t8" => gclt::T8_GIVENS_ORDER,
                    other => return Err(Failure::Usage(format!("unknown Givens order `{other}`; valid: canonical, t8"))),
                };
                let deg: [f64; 6] = g.try_into().map_err(|_| Failure::Usage("--givens takes six angles".into()))?;
                let rad = deg.map(f64::to_radians);
                let spec = GcltSpec::uniform(&c, &gclt::givens_4d_ordered(&rad, &ord))?;
                let meta = json!({"kind": "givens_4d", "order": order, "angles_deg": deg, "angles_rad": rad});
                (apply_gclt(&c, &spec)?.renamed(format!("{}+GCLT", c.name())), meta)
            } else if let (Some(deg), Some(syms)) = (cr_angle, cr_symbols) {
                let spec = CrSpec::uniform(&syms, deg.to_radians())?;
                let meta = json!({"kind": "cr", "symbols": syms, "angle_deg": deg, "angle_rad": deg.to_radians()});
                (apply_cr(&c, &spec)?.renamed(format!("{}+CR", c.name())), meta)
            } else {
                return Err(Failure::Usage(
                    "one of --gclt-theta, --givens or --cr-angle/--cr-symbols is required".into(),
                ));
            };
            let mut v = serde_json::to_value(new.to_json()).expect("json");
            v["transform"] = meta;
            emit_json(out.as_deref(), &v)
        }
        Command::Mindet {
            code,
            modulation,
            scope,
            out,
        } => {
            let c = load_code(&code)?;
            let con = modulation.constellation()?;
            let r = gain::min_det_search(&c, &con, scope)?;
            let mut v = serde_json::to_value(&r).expect("json");
            v["code"] = json!(c.name());
            v["mod"] = json!(modulation.to_string());
            emit_json(out.as_deref(), &v)
        }
        Command::Divprod { code, modulation, out } => {
            let con = modulation.constellation()?;
            let v = if code.code.is_some() || code.code_file.is_some() {
                divprod_entry(&load_code(&code)?, &con)?
            } else {
                let mut list = Vec::new();
                for name in CodeName::ALL {
                    list.push(divprod_entry(&build(name)?, &con)?);
                }
                Value::Array(list)
            };
            emit_json(out.as_deref(), &v)
        }
        Command::SweepTheta {
            modulation,
            start,
            stop,
            step,
            out,
        } => {
            let con = modulation.constellation()?;
            let grid = gain::inclusive_grid(start, stop, step)?;
            emit(out.as_deref(), &sweep_csv(&con, &grid)?)
        }
        Command::SearchT8 {
            starts,
            seed,
            workers,
            modulation,
            out,
        } => {
            let con = modulation.constellation()?;
            let t8 = build(CodeName::T8)?;
            let r = in_pool(workers, || gain::search_t8_angles(&t8, &con, starts, seed))??;
            let mut v = serde_json::to_value(&r).expect("json");
            v["order"] = json!("t8");
            v["mod"] = json!(modulation.to_string());
            emit_json(out.as_deref(), &v)
        }
        Command::SearchCr {
            code,
            symbols,
            grid,
            modulation,
            out,
        } => {
            let base = build(code.parse()?)?;
            let con = modulation.constellation()?;
            let sets = symbols
                .iter()
                .map(|s| parse_list(s))
                .collect::<Outcome<Vec<_>>>()?;
            let grid = parse_range(&grid)?;
            let r = gain::cr_angle_search(&base, &con, &sets, &grid)?;
            let mut v = serde_json::to_value(&r).expect("json");
            v["angles_rad"] = json!(r.angles_deg.iter().map(|d| d.to_radians()).collect::<Vec<_>>());
            v["code"] = json!(base.name());
            emit_json(out.as_deref(), &v)
        }
        Command::Simulate {
            code,
            modulation,
            nr,
            snr,
            seed,
            min_errors,
            max_frames,
            stop_below_ber,
            workers,
            out,
            svg,
        } => {
            let grid = parse_range(&snr)?;
            let workers = workers.unwrap_or_else(default_workers);
            let mut curves = Vec::new();
            for spec in &code {
                let (name, m) = match spec.split_once(':') {
                    Some((n, m)) => (n, m.parse::<Modulation>()?),
                    None => (spec.as_str(), modulation),
                };
                let c = build(name.parse()?)?;
                let con = m.constellation()?;
                let mut cfg = SimConfig::new(c.name(), m.0, nr, grid.clone(), seed);
                cfg.min_bit_errors = min_errors;
                cfg.max_frames = max_frames;
                cfg.stop_below_ber = stop_below_ber;
                cfg.workers = workers;
                curves.push(sim::run_ber(&c, &con, &cfg)?);
            }
            let csv = sim::curves_to_csv(&curves);
            let plot = svg.as_ref().map(|_| {
                let named: Vec<(String, &[sim::BerPoint])> = curves
                    .iter()
                    .map(|c| (format!("{} {}qam", c.config.code, c.config.modulation), c.points.as_slice()))
                    .collect();
                let refs: Vec<(&str, &[sim::BerPoint])> = named.iter().map(|(n, p)| (n.as_str(), *p)).collect();
                sim::svg_plot(&refs)
            });
            emit(out.as_deref(), &csv)?;
            if let (Some(p), Some(s)) = (svg, plot) {
                write_atomic(&p, &s)?;
            }
            Ok(())
        }
        Command::Verify { seed, out } => {
            let results = verify::run_checks(seed);
            let mut text = String::new();
            for r in &results {
                let _ = writeln!(text, "{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            emit(out.as_deref(), &text)?;
            let failed = results.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(Failure::Verify(format!("{failed} check(s) failed")));
            }
            Ok(())
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn in_pool<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Outcome<R> {
    let n = workers.unwrap_or_else(default_workers);
    if n == 0 {
        return Err(Failure::Usage("--workers must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Failure::Io(e.to_string()))?;
    Ok(pool.install(f))
}

fn load_code(arg: &CodeArg) -> Outcome<CodeDefinition> {
    match (&arg.code, &arg.code_file) {
        (Some(name), _) => Ok(build(name.parse()?)?),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            let json: CodeJson =
                serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            Ok(CodeDefinition::from_json(&json, arg.tol)?)
        }
        (None, None) => Err(Failure::Usage("--code or --code-file is required".into())),
    }
}

fn divprod_entry(code: &CodeDefinition, c: &Constellation) -> Outcome<Value> {
    let r = gain::diversity_product(code, c)?;
    Ok(json!({
        "code": code.name(),
        "mod": c.name(),
        "zeta": r.zeta,
        "min_det": r.min_det,
        "full_diversity": r.full_diversity,
        "symbols_per_group": code.grouping().max_group_size(),
    }))
}

fn sweep_csv(c: &Constellation, grid_deg: &[f64]) -> Outcome<String> {
    let q4 = build(CodeName::Q4)?;
    let rad: Vec<f64> = grid_deg.iter().map(|d| d.to_radians()).collect();
    let dets = gain::theta_sweep(&q4, c, &rad)?;
    let norm = c.d_min().powi(8);
    let max_mult = (c.pam_levels().len() - 1) as u32;
    let pairs: Vec<(u32, u32)> = (1..=max_mult).flat_map(|m| (1..=max_mult).map(move |n| (m, n))).collect();
    let mut s = String::from("theta_deg,min_det,min_det_norm");
    for (m, n) in &pairs {
        let _ = write!(s, ",case_m{m}_n{n}");
    }
    s.push('\n');
    for ((deg, th), det) in grid_deg.iter().zip(&rad).zip(&dets) {
        let _ = write!(s, "{deg:.4},{det:.10e},{:.10e}", det / norm);
        for &(m, n) in &pairs {
            let v = gain::case_dets(m, n, *th).into_iter().fold(f64::INFINITY, f64::min);
            let _ = write!(s, ",{v:.10e}");
        }
        s.push('\n');
    }
    Ok(s)
}

fn parse_list(s: &str) -> Outcome<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("bad symbol list `{s}`")))
        })
        .collect()
}

/// `start:step:stop`, inclusive; a bare number is a one-point grid.
fn parse_range(s: &str) -> Outcome<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("bad range `{s}`; expected start:step:stop")))?;
    match parts[..] {
        [v] => Ok(vec![v]),
        [start, step, stop] => Ok(gain::inclusive_grid(start, stop, step)?),
        _ => Err(Failure::Usage(format!("bad range `{s}`; expected start:step:stop"))),
    }
}

fn emit_json(out: Option<&Path>, v: &Value) -> Outcome<()> {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    emit(out, &s)
}

fn emit(out: Option<&Path>, text: &str) -> Outcome<()> {
    match out {
        Some(p) => write_atomic(p, text),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string()))
        }
    }
}

/// Writes through a sibling temp file so a failed write leaves nothing behind.
fn write_atomic(path: &Path, text: &str) -> Outcome<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let res = std::fs::write(&tmp, text).and_then(|_| std::fs::rename(&tmp, path));
    res.map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Failure::Io(format!("{}: {e}", path.display()))
    })
}
