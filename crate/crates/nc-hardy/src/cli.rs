//! Argument parsing and command handlers for the `nc-hardy` binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nc_hardy_core::haar::{self, FreeFactor, McPlan, SeededStream};
use nc_hardy_core::hardy::{self, Engine, Evaluated, GridCell, SpaceKind, UpsilonStatus};
use nc_hardy_core::linalg::{c, Complex64};
use nc_hardy_core::perm;
use nc_hardy_core::weingarten::{BoundaryKind, WeingartenTable};
use nc_hardy_core::words::{NcSeries, Word};
use nc_hardy_core::Error as CoreError;
use serde::Serialize;
use serde_json::{json, Value};

use crate::acceptance::{self, Settings};
use crate::format::{self, EstimateJson, FormatError};
use crate::parallel::{self, Rayon};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Format(#[from] FormatError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Numeric(CoreError),
    #[error("acceptance suite failed: {0} criteria did not pass")]
    Acceptance(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Format(_) | CliError::Io { .. } => 1,
            CliError::Numeric(_) => 2,
            CliError::Acceptance(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::AlphabetMismatch { .. }
            | CoreError::LetterOutOfRange { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::IndexOutOfRange { .. }
            | CoreError::Structure(_) => CliError::Usage(e.to_string()),
            CoreError::UnsupportedMultiplicity { .. } => {
                CliError::Numeric(CoreError::Domain(format!("{e}; the Monte Carlo engine (--engine mc) has no such limit")))
            }
            e => CliError::Numeric(e),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "nc-hardy", version, about = "Exact and sampled boundary integrals for nc Hardy spaces")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Space {
    Polydisc,
    Ball,
    BallRow,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Exact,
    Mc,
    Both,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, value_enum, default_value = "polydisc", global = true)]
    pub space: Space,
    /// Alphabet size; taken from the input files when omitted.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Matrix level N (repeatable or comma separated).
    #[arg(long = "N", value_delimiter = ',', global = true)]
    pub levels: Vec<usize>,
    /// Radius r (repeatable or comma separated).
    #[arg(long = "r", value_delimiter = ',', global = true)]
    pub radii: Vec<f64>,
    #[arg(long, default_value_t = 100_000, global = true)]
    pub samples: usize,
    /// Overrides NC_HARDY_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "exact", global = true)]
    pub engine: EngineKind,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json", global = true)]
    pub format: OutputFormat,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Weingarten values by cycle type.
    Wg {
        #[arg(long)]
        n: usize,
    },
    /// Haar entry moment E[u_{i1 j1} ⋯ conj(u_{i'1 j'1}) ⋯].
    Moment {
        /// Index pairs of the plain entries, e.g. "1,1;2,2".
        #[arg(long, default_value = "")]
        ups: String,
        /// Index pairs of the conjugated entries.
        #[arg(long, default_value = "")]
        conjs: String,
    },
    /// Boundary pairing ∫ (1/N) Tr(g(rX)^* f(rX)).
    Pairing {
        #[arg(long)]
        f: PathBuf,
        /// Defaults to f.
        #[arg(long)]
        g: Option<PathBuf>,
    },
    /// Recover a Taylor-Taylor coefficient from boundary integrals.
    Recover {
        #[arg(long)]
        f: PathBuf,
        /// Letters of the word, e.g. "1,2"; empty for the empty word.
        #[arg(long, default_value = "")]
        word: String,
        /// Also report the 1/N² Richardson extrapolation.
        #[arg(long)]
        richardson: bool,
    },
    /// Hardy-space inner product ⟨f, g⟩.
    Inner {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: Option<PathBuf>,
    },
    /// Membership of a matrix tuple in Υ_p.
    Upsilon {
        #[arg(long)]
        tuple: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = hardy::DEFAULT_UPSILON_DEGREE)]
        max_degree: usize,
        #[arg(long, default_value_t = hardy::DEFAULT_DIVERGENCE_THRESHOLD)]
        threshold: f64,
    },
    /// Truncated kernel K_p(X, Y).
    Kernel {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 32)]
        max_degree: usize,
    },
    /// Boundary norms over the (r, N) grid, or Φ/Ψ with --radial.
    Profile {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        radial: bool,
    },
    /// Alternating products of centered Laurent polynomials in Haar unitaries.
    Freeness {
        /// One factor "ENSEMBLE:TERM[+TERM…]", TERM = POWER or POWERxCOEFF,
        /// e.g. "1:1" or "2:2+-1x0.5". Repeat in product order.
        #[arg(long = "factor", required = true)]
        factors: Vec<String>,
    },
    /// Run the acceptance suite.
    Selftest {
        /// Run only these criteria (repeatable or comma separated).
        #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u8).range(1..=10))]
        criterion: Vec<u8>,
        #[arg(long, hide = true)]
        corrupt_wg: bool,
    },
}

/// Rendered output plus the exit status it implies.
pub struct Output {
    pub body: String,
    pub failure: Option<CliError>,
}

pub fn run(cli: &Cli) -> Result<Output> {
    let ctx = Context::new(&cli.common)?;
    let (body, failure) = match &cli.command {
        Command::Wg { n } => (ctx.wg(*n)?, None),
        Command::Moment { ups, conjs } => (ctx.moment(ups, conjs)?, None),
        Command::Pairing { f, g } => (ctx.pairing(f, g.as_deref())?, None),
        Command::Recover { f, word, richardson } => (ctx.recover(f, word, *richardson)?, None),
        Command::Inner { f, g } => (ctx.inner(f, g.as_deref())?, None),
        Command::Upsilon { tuple, p, max_degree, threshold } => (ctx.upsilon(tuple, *p, *max_degree, *threshold)?, None),
        Command::Kernel { x, y, p, max_degree } => (ctx.kernel(x, y, *p, *max_degree)?, None),
        Command::Profile { f, radial } => (ctx.profile(f, *radial)?, None),
        Command::Freeness { factors } => (ctx.freeness(factors)?, None),
        Command::Selftest { criterion, corrupt_wg } => ctx.selftest(criterion, *corrupt_wg)?,
    };
    Ok(Output { body, failure })
}

pub fn write_output(common: &Common, body: &str) -> Result<()> {
    match &common.out {
        Some(path) => std::fs::write(path, body).map_err(|source| CliError::Io { path: path.clone(), source }),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

struct Context<'a> {
    common: &'a Common,
    seed: u64,
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    command: &'a str,
    space: Space,
    m: Option<usize>,
    #[serde(rename = "N")]
    levels: &'a [usize],
    r: &'a [f64],
    engine: EngineKind,
    samples: Option<usize>,
    seed: u64,
}

#[derive(Serialize)]
struct ValueJson {
    re: f64,
    im: f64,
    exact: bool,
}

impl From<Complex64> for ValueJson {
    fn from(z: Complex64) -> Self {
        ValueJson { re: z.re, im: z.im, exact: true }
    }
}

#[derive(Serialize)]
struct GridRow {
    param_r: Option<f64>,
    #[serde(rename = "param_N")]
    param_n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<ValueJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc: Option<EstimateJson>,
    /// `|exact - mc|` in standard errors.
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_se: Option<f64>,
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load_series(path: &Path) -> Result<NcSeries> {
    format::parse_series(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn parse_word(text: &str) -> Result<Word> {
    let letters: std::result::Result<Vec<usize>, _> =
        text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect();
    let letters = letters.map_err(|_| CliError::Usage(format!("cannot read word {text:?}")))?;
    Ok(Word::new(&letters)?)
}

fn parse_pairs(text: &str) -> Result<Vec<(usize, usize)>> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
            match parts.as_slice() {
                [i, j] => match (i.parse(), j.parse()) {
                    (Ok(i), Ok(j)) => Ok((i, j)),
                    _ => Err(CliError::Usage(format!("cannot read index pair {pair:?}"))),
                },
                _ => Err(CliError::Usage(format!("index pair {pair:?} must look like i,j"))),
            }
        })
        .collect()
}

/// `ENSEMBLE:TERM[+TERM…]` with `TERM = POWER` or `POWERxCOEFF`.
fn parse_factor(text: &str) -> Result<FreeFactor> {
    let bad = || CliError::Usage(format!("cannot read factor {text:?}; expected e.g. 1:1 or 2:2+-1x0.5"));
    let (ensemble, terms) = text.split_once(':').ok_or_else(bad)?;
    let ensemble = ensemble.trim().parse().map_err(|_| bad())?;
    let mut parsed = Vec::new();
    for term in terms.split('+') {
        let (power, coeff) = match term.split_once('x') {
            Some((p, c)) => (p, c.trim().parse::<f64>().map_err(|_| bad())?),
            None => (term, 1.0),
        };
        parsed.push((power.trim().parse::<i32>().map_err(|_| bad())?, c(coeff, 0.0)));
    }
    Ok(FreeFactor { ensemble, terms: parsed })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

impl<'a> Context<'a> {
    fn new(common: &'a Common) -> Result<Self> {
        let seed = parallel::resolve_seed(common.seed).map_err(CliError::Usage)?;
        if common.engine != EngineKind::Exact && common.samples < 2 {
            return Err(CliError::Usage("--samples must be at least 2 for Monte Carlo".into()));
        }
        if common.levels.contains(&0) {
            return Err(CliError::Usage("--N values must be positive".into()));
        }
        Ok(Context { common, seed })
    }

    fn levels(&self, default: &[usize]) -> Vec<usize> {
        if self.common.levels.is_empty() {
            default.to_vec()
        } else {
            self.common.levels.clone()
        }
    }

    fn radii(&self) -> Vec<f64> {
        if self.common.radii.is_empty() {
            vec![1.0]
        } else {
            self.common.radii.clone()
        }
    }

    fn plan(&self) -> McPlan {
        McPlan::new(self.common.samples, SeededStream::new(self.seed))
    }

    fn uses_mc(&self) -> bool {
        self.common.engine != EngineKind::Exact
    }

    fn echo<'b>(&'b self, command: &'b str, m: Option<usize>, levels: &'b [usize], r: &'b [f64]) -> ConfigEcho<'b> {
        ConfigEcho {
            command,
            space: self.common.space,
            m,
            levels,
            r,
            engine: self.common.engine,
            samples: self.uses_mc().then_some(self.common.samples),
            seed: self.seed,
        }
    }

    fn check_m(&self, found: usize) -> Result<usize> {
        match self.common.m {
            Some(m) if m != found => Err(CliError::Usage(format!("--m {m} does not match the input alphabet size {found}"))),
            _ => Ok(found),
        }
    }

    fn boundary(&self, m: usize) -> BoundaryKind {
        match self.common.space {
            Space::Polydisc => BoundaryKind::Polydisc(m),
            Space::Ball => BoundaryKind::BallColumn(m),
            Space::BallRow => BoundaryKind::BallRow(m),
        }
    }

    fn hardy_space(&self, m: usize) -> Result<SpaceKind> {
        match self.common.space {
            Space::Polydisc => Ok(SpaceKind::Polydisc(m)),
            Space::Ball => Ok(SpaceKind::Ball(m)),
            Space::BallRow => Err(CliError::Usage("ball-row is only a sampling boundary; use it with pairing".into())),
        }
    }

    fn engines(&self) -> Vec<Engine<'static>> {
        let mc = Engine::MonteCarlo { plan: self.plan(), exec: &Rayon };
        match self.common.engine {
            EngineKind::Exact => vec![Engine::exact()],
            EngineKind::Mc => vec![mc],
            EngineKind::Both => vec![Engine::exact(), mc],
        }
    }

    fn csv_only_grid(&self) -> Result<()> {
        if self.common.format == OutputFormat::Csv {
            return Err(CliError::Usage("this command only writes JSON".into()));
        }
        Ok(())
    }

    /// Pairs exact and sampled values cell by cell.
    fn grid_rows(&self, runs: &[Vec<(Option<f64>, usize, Evaluated)>]) -> (Vec<GridRow>, Vec<Check>) {
        let mut rows: Vec<GridRow> = Vec::new();
        for (k, &(r, n, _)) in runs[0].iter().enumerate() {
            let mut row = GridRow { param_r: r, param_n: n, exact: None, mc: None, delta_se: None };
            for run in runs {
                match &run[k].2 {
                    Evaluated::Exact(z) => row.exact = Some((*z).into()),
                    Evaluated::Sampled(e) => row.mc = Some(e.into()),
                }
            }
            if let (Some(x), Some(e)) = (&row.exact, &row.mc) {
                let est = nc_hardy_core::haar::MCEstimate {
                    mean: c(e.re, e.im),
                    std_error: e.std_error,
                    samples: e.samples,
                    seed: e.seed,
                };
                row.delta_se = Some(est.deviation(c(x.re, x.im)));
            }
            rows.push(row);
        }
        let mut checks = Vec::new();
        let deltas: Vec<f64> = rows.iter().filter_map(|r| r.delta_se).collect();
        if !deltas.is_empty() {
            let within = deltas.iter().filter(|&&d| d <= 3.0).count();
            checks.push(Check {
                name: "exact_vs_mc_within_3se",
                passed: within as f64 >= 0.99 * deltas.len() as f64,
                detail: format!("{within} of {} cells within 3 standard errors", deltas.len()),
            });
        }
        (rows, checks)
    }

    fn grid_csv(rows: &[GridRow]) -> String {
        let mut out = String::from(format::CSV_HEADER);
        out.push('\n');
        for row in rows {
            if let Some(x) = &row.exact {
                format::csv_line(&mut out, row.param_r, Some(row.param_n), x.re, x.im, None);
            }
            if let Some(e) = &row.mc {
                format::csv_line(&mut out, row.param_r, Some(row.param_n), e.re, e.im, Some(e.std_error));
            }
        }
        out
    }

    fn grid_report(&self, command: &str, m: usize, levels: &[usize], radii: &[f64], grid: (Vec<GridRow>, Vec<Check>), extra: Value) -> String {
        let (rows, checks) = grid;
        match self.common.format {
            OutputFormat::Csv => Self::grid_csv(&rows),
            OutputFormat::Json => to_json(&json!({
                "config": self.echo(command, Some(m), levels, radii),
                "rows": rows,
                "summary": extra,
                "checks": checks,
            })),
        }
    }

    fn wg(&self, n: usize) -> Result<String> {
        let levels = self.levels(&[]);
        if levels.is_empty() {
            return Err(CliError::Usage("wg needs at least one --N".into()));
        }
        let table = WeingartenTable::global();
        let mut rows = Vec::new();
        for &dim in &levels {
            let values = table.class_values(n, dim)?;
            for (k, ct) in values.classes.iter().enumerate() {
                rows.push((ct.parts().to_vec(), dim, values.values[k], values.exact[k].to_string()));
            }
        }
        Ok(match self.common.format {
            OutputFormat::Csv => {
                let mut out = String::from("cycle_type,param_N,value,exact\n");
                for (ct, dim, v, exact) in &rows {
                    let ct: Vec<String> = ct.iter().map(usize::to_string).collect();
                    out.push_str(&format!("{},{dim},{},{exact}\n", ct.join(" "), format::num(*v)));
                }
                out
            }
            OutputFormat::Json => {
                let rows: Vec<Value> = rows
                    .into_iter()
                    .map(|(ct, dim, v, exact)| json!({"cycle_type": ct, "N": dim, "value": v, "exact": exact}))
                    .collect();
                to_json(&json!({"n": n, "classes": perm::partitions(n).len(), "rows": rows}))
            }
        })
    }

    fn moment(&self, ups: &str, conjs: &str) -> Result<String> {
        self.csv_only_grid()?;
        let (ups, conjs) = (parse_pairs(ups)?, parse_pairs(conjs)?);
        let levels = self.levels(&[]);
        if levels.is_empty() {
            return Err(CliError::Usage("moment needs at least one --N".into()));
        }
        let table = WeingartenTable::global();
        let mut rows = Vec::new();
        for &dim in &levels {
            let exact = table.haar_entry_moment_exact(&ups, &conjs, dim)?;
            let value = table.haar_entry_moment(&ups, &conjs, dim)?;
            rows.push(json!({"N": dim, "value": value, "exact": exact.to_string()}));
        }
        Ok(to_json(&json!({"ups": ups, "conjs": conjs, "rows": rows})))
    }

    fn pairing(&self, f: &Path, g: Option<&Path>) -> Result<String> {
        let f = load_series(f)?;
        let g = match g {
            Some(path) => load_series(path)?,
            None => f.clone(),
        };
        let m = self.check_m(f.alphabet())?;
        if g.alphabet() != m {
            return Err(CliError::Usage(format!("f has alphabet {m} but g has {}", g.alphabet())));
        }
        let kind = self.boundary(m);
        let (levels, radii) = (self.levels(&[2, 4, 8]), self.radii());
        let mut runs = Vec::new();
        for engine in self.engines() {
            let mut cells = Vec::new();
            for (i, &r) in radii.iter().enumerate() {
                for &n in &levels {
                    let engine = match engine {
                        Engine::MonteCarlo { plan, exec } => Engine::MonteCarlo { plan: plan.derive(((n as u64) << 24) ^ i as u64), exec },
                        e => e,
                    };
                    cells.push((Some(r), n, hardy::boundary_pairing(&f, &g, r, kind, n, &engine)?));
                }
            }
            runs.push(cells);
        }
        Ok(self.grid_report("pairing", m, &levels, &radii, self.grid_rows(&runs), Value::Null))
    }

    fn recover(&self, f: &Path, word: &str, richardson: bool) -> Result<String> {
        let f = load_series(f)?;
        let m = self.check_m(f.alphabet())?;
        let kind = self.hardy_space(m)?;
        let w = parse_word(word)?;
        let (levels, radii) = (self.levels(&[2, 4, 8]), self.radii());
        let mut runs = Vec::new();
        let mut summary = Vec::new();
        for engine in self.engines() {
            let mut cells = Vec::new();
            for &r in &radii {
                let table = hardy::coeff_recover(&f, &w, r, kind, &levels, &engine)?;
                let recovered = table.recovered();
                let trend: Vec<[f64; 2]> = table.trend().iter().map(|z| [z.re, z.im]).collect();
                let mut entry = json!({
                    "r": r,
                    "engine": if recovered.is_exact() { "exact" } else { "mc" },
                    "recovered": [recovered.value().re, recovered.value().im],
                    "std_error": recovered.std_error(),
                    "trend": trend,
                });
                if richardson {
                    entry["richardson"] = json!(table.richardson().map(|z| [z.re, z.im]));
                }
                summary.push(entry);
                cells.extend(table.rows.iter().map(|row| (Some(r), row.level, row.value)));
            }
            runs.push(cells);
        }
        let extra = json!({"word": w.letters().collect::<Vec<_>>(), "true_coefficient": [f.coeff(&w).re, f.coeff(&w).im], "recovered": summary});
        Ok(self.grid_report("recover", m, &levels, &radii, self.grid_rows(&runs), extra))
    }

    fn inner(&self, f: &Path, g: Option<&Path>) -> Result<String> {
        self.csv_only_grid()?;
        let f = load_series(f)?;
        let g = match g {
            Some(path) => load_series(path)?,
            None => f.clone(),
        };
        let m = self.check_m(f.alphabet())?;
        let z = hardy::inner_product(&f, &g, self.hardy_space(m)?)?;
        Ok(to_json(&json!({"space": self.common.space, "m": m, "value": ValueJson::from(z)})))
    }

    fn upsilon(&self, tuple: &Path, p: f64, max_degree: usize, threshold: f64) -> Result<String> {
        self.csv_only_grid()?;
        let x = format::parse_tuple(&read(tuple)?)?;
        self.check_m(x.alphabet())?;
        let v = hardy::upsilon_membership(&x, p, max_degree, threshold)?;
        let (status, bound, degree) = match v.status {
            UpsilonStatus::ConvergedWithBound(b) => ("ConvergedWithBound", Some(b), None),
            UpsilonStatus::DivergedAtDegree(d) => ("DivergedAtDegree", None, Some(d)),
            UpsilonStatus::Inconclusive => ("Inconclusive", None, None),
        };
        Ok(to_json(&json!({
            "status": status,
            "bound": bound,
            "diverged_at_degree": degree,
            "theta": v.theta,
            "p": p,
            "checked_degree": v.checked_degree,
            "partial_sum_norms": v.partial_sum_norms,
        })))
    }

    fn kernel(&self, x: &Path, y: &Path, p: f64, max_degree: usize) -> Result<String> {
        self.csv_only_grid()?;
        let x = format::parse_tuple(&read(x)?)?;
        let y = format::parse_tuple(&read(y)?)?;
        let k = hardy::kernel_eval(&x, &y, p, max_degree)?;
        Ok(to_json(&json!({
            "dim_x": x.dim(),
            "dim_y": y.dim(),
            "p": p,
            "truncation_degree": k.truncation_degree,
            "tail_bound": k.tail_bound,
            "value": format::matrix_rows(&k.value),
        })))
    }

    fn cells_of(cells: &[GridCell]) -> Vec<(Option<f64>, usize, Evaluated)> {
        cells.iter().map(|c| (Some(c.r), c.level, c.value)).collect()
    }

    fn profile(&self, f: &Path, radial: bool) -> Result<String> {
        let f = load_series(f)?;
        let m = self.check_m(f.alphabet())?;
        let (levels, radii) = (self.levels(&[1, 2, 4, 8]), self.radii());
        if radial {
            self.csv_only_grid()?;
            let mut phi = Vec::new();
            let mut psi = Vec::new();
            let mut series = Value::Null;
            for engine in self.engines() {
                let prof = hardy::radial_boundary_profiles(&f, &radii, &levels, &engine)?;
                phi.push(Self::cells_of(&prof.phi));
                psi.push(Self::cells_of(&prof.psi));
                series = json!({"phi": prof.phi_series, "psi": prof.psi_series});
            }
            let (phi_rows, mut checks) = self.grid_rows(&phi);
            let (psi_rows, psi_checks) = self.grid_rows(&psi);
            checks.extend(psi_checks);
            return Ok(to_json(&json!({
                "config": self.echo("profile", Some(m), &levels, &radii),
                "phi": phi_rows,
                "psi": psi_rows,
                "series_prediction": series,
                "checks": checks,
            })));
        }
        let kind = self.hardy_space(m)?;
        let mut runs = Vec::new();
        let mut summary = Vec::new();
        for engine in self.engines() {
            let prof = hardy::boundary_norm_profile(&f, kind, &radii, &levels, &engine)?;
            summary.push(json!({
                "engine": if prof.corner.value.is_exact() { "exact" } else { "mc" },
                "sup_estimate": prof.sup_estimate,
                "corner": {"r": prof.corner.r, "N": prof.corner.level, "value": prof.corner.value.value().re},
                "norm_sq": prof.norm_sq,
            }));
            runs.push(Self::cells_of(&prof.cells));
        }
        Ok(self.grid_report("profile", m, &levels, &radii, self.grid_rows(&runs), json!(summary)))
    }

    fn freeness(&self, factors: &[String]) -> Result<String> {
        let factors: Vec<FreeFactor> = factors.iter().map(|f| parse_factor(f)).collect::<Result<_>>()?;
        let levels = self.levels(&[4, 8, 16, 32]);
        let report = haar::freeness_diagnostic(&factors, &levels, self.common.samples, SeededStream::new(self.seed), &Rayon)?;
        Ok(match self.common.format {
            OutputFormat::Csv => {
                let mut out = String::from(format::CSV_HEADER);
                out.push('\n');
                for row in &report.rows {
                    let e = &row.estimate;
                    format::csv_line(&mut out, None, Some(row.level), e.mean.re, e.mean.im, Some(e.std_error));
                }
                out
            }
            OutputFormat::Json => {
                let rows: Vec<Value> = report
                    .rows
                    .iter()
                    .map(|row| json!({"N": row.level, "estimate": EstimateJson::from(&row.estimate), "upper_bound": row.upper_bound}))
                    .collect();
                to_json(&json!({
                    "config": ConfigEcho { samples: Some(self.common.samples), ..self.echo("freeness", None, &levels, &[]) },
                    "rows": rows,
                    "bound_monotone": report.bound_monotone,
                    "decreasing_pairs": report.decreasing_pairs,
                    "log_slope": report.log_slope,
                }))
            }
        })
    }

    fn selftest(&self, only: &[u8], corrupt: bool) -> Result<(String, Option<CliError>)> {
        self.csv_only_grid()?;
        let fresh;
        let table = if corrupt {
            fresh = WeingartenTable::new(WeingartenTable::global().max_n());
            let honest = fresh.class_values(2, 3)?;
            let bogus = honest.values.iter().map(|v| v * 1.01).collect();
            fresh.override_values(2, 3, bogus)?;
            &fresh
        } else {
            WeingartenTable::global()
        };
        let settings = Settings::standard(table, &Rayon, self.seed);
        let outcomes: Vec<_> = if only.is_empty() {
            acceptance::run_all(&settings)
        } else {
            only.iter().map(|&id| acceptance::run_criterion(id, &settings)).collect()
        };
        for o in &outcomes {
            eprintln!("{}", o.line());
        }
        let failed = outcomes.iter().filter(|o| !o.passed).count();
        let body = to_json(&json!({"seed": self.seed, "passed": failed == 0, "criteria": outcomes}));
        Ok((body, (failed > 0).then_some(CliError::Acceptance(failed))))
    }
}
