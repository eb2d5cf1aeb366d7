//! Batch experiment runner: every analysis is a subcommand writing one
//! deterministic table (CSV or JSON) with the full configuration echoed in
//! the metadata, so a run can be reproduced from its own output.

mod descriptor;
mod report;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use longrun::counterexample::{check_param_restriction, divergence_exponent};
use longrun::incentives::{carr_madan_legs, grant_value_curve_with_nodes, replicate,
    square_contract_price};
use longrun::market::{cp_wealth_law, merton_weight, MarketParams};
use longrun::numerics::{mc_expect, McConfig};
use longrun::solver::{
    ce_ratio_with_nodes, certainty_equivalent, solve_terminal_with_nodes,
};
use longrun::utility::{concave_envelope, validate_assumptions, InterpolationSpec, UtilitySpec};
use report::{fmt_f, Report};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Quadrature,
    Montecarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(
    name = "longrun",
    version,
    about = "Long-horizon portfolio robustness experiments in a Black-Scholes market"
)]
struct Cli {
    /// Key-value configuration file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Excess drift of the risky asset per year.
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Volatility per square-root year.
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Safe rate per year (must be positive).
    #[arg(long, global = true)]
    r: Option<f64>,
    /// Reference power exponent (defaults to the utility's own).
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Comma-separated, strictly increasing horizons in years.
    #[arg(long, global = true)]
    horizons: Option<String>,
    /// Utility descriptor, e.g. 'shifted:p=-1,a=1' (see README).
    #[arg(long, global = true)]
    utility: Option<String>,
    /// Estimator for benchmark expectations (robustness command).
    #[arg(long, global = true, value_enum)]
    method: Option<Method>,
    /// Quadrature resolution, at least 21.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Monte Carlo path count.
    #[arg(long, global = true)]
    paths: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo chunk size (reduction granularity).
    #[arg(long, global = true)]
    chunk: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Certainty-equivalent ratio of the isoelastic benchmark strategy
    /// against the optimum, over a horizon grid.
    Robustness,
    /// Certainty-equivalent collapse of the benchmark under the two-piece
    /// utility, with the closed-form divergence diagnostics.
    Counterexample {
        /// Low-wealth exponent override.
        #[arg(long)]
        pstar: Option<f64>,
        /// Upper bridge knot override.
        #[arg(long)]
        xhi: Option<f64>,
    },
    /// Private value of an option grant over a horizon grid.
    Incentives,
    /// Static replication of a power payoff from an option strip.
    Replicate {
        /// Payoff exponent of x^alpha.
        #[arg(long)]
        alpha: Option<f64>,
        /// Put/call threshold (cash and forward anchor).
        #[arg(long)]
        kbar: Option<f64>,
        #[arg(long)]
        strike_lo: Option<f64>,
        #[arg(long)]
        strike_hi: Option<f64>,
        /// Number of strike grid points.
        #[arg(long)]
        strikes: Option<usize>,
        /// Uniform instead of log-spaced strikes.
        #[arg(long)]
        uniform_strikes: bool,
        #[arg(long)]
        eval_lo: Option<f64>,
        #[arg(long)]
        eval_hi: Option<f64>,
        /// Number of evaluation points.
        #[arg(long)]
        evals: Option<usize>,
    },
    /// Similarity-assumption report and the utility/envelope table.
    Validate {
        /// Reference exponent for the report (defaults to the utility's).
        #[arg(long)]
        p_ref: Option<f64>,
    },
    /// Arbitrage price of the squared-stock contract under a zero rate.
    PriceSquare {
        #[arg(long)]
        s0: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
    },
}

enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 74,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

impl From<longrun::Error> for CliError {
    fn from(e: longrun::Error) -> Self {
        match e {
            longrun::Error::Parameter(_)
            | longrun::Error::Domain(_)
            | longrun::Error::NotConcave(_)
            | longrun::Error::Coverage { .. } => CliError::Validation(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

type RunResult = Result<(), CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let informational =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if informational { ExitCode::SUCCESS } else { ExitCode::from(64) };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

const FILE_KEYS: &[&str] = &[
    "mu", "sigma", "r", "p", "horizons", "utility", "method", "nodes", "paths", "seed", "chunk",
    "out", "format", "pstar", "xhi", "alpha", "kbar", "strike_lo", "strike_hi", "strikes",
    "uniform_strikes", "eval_lo", "eval_hi", "evals", "p_ref", "s0", "t",
];

fn load_file(path: &PathBuf) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Validation(format!(
                "{}:{}: expected 'key = value'",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = k.trim().to_string();
        if !FILE_KEYS.contains(&key.as_str()) {
            return Err(CliError::Validation(format!(
                "{}:{}: unknown configuration key '{key}'",
                path.display(),
                lineno + 1
            )));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

struct Resolver {
    file: BTreeMap<String, String>,
}

impl Resolver {
    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::Validation(format!("configuration key '{key}': bad value '{raw}'"))
            }),
        }
    }

    fn f64(&self, flag: Option<f64>, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(flag.or(self.parse(key)?).unwrap_or(default))
    }

    fn f64_opt(&self, flag: Option<f64>, key: &str) -> Result<Option<f64>, CliError> {
        Ok(flag.or(self.parse(key)?))
    }

    fn string(&self, flag: Option<String>, key: &str, default: &str) -> Result<String, CliError> {
        Ok(flag
            .or_else(|| self.file.get(key).cloned())
            .unwrap_or_else(|| default.to_string()))
    }
}

struct Common {
    mkt: MarketParams,
    utility_desc: String,
    p_override: Option<f64>,
    horizons: Vec<f64>,
    method: Method,
    nodes: usize,
    mc: McConfig,
    out: Option<PathBuf>,
    json: bool,
    echo: Vec<(String, String)>,
}

fn resolve_common(
    cli: &Cli,
    default_utility: &str,
    default_horizons: &[f64],
) -> Result<Common, CliError> {
    let file = match &cli.config {
        Some(path) => load_file(path)?,
        None => BTreeMap::new(),
    };
    let res = Resolver { file };

    let mu = res.f64(cli.mu, "mu", 0.08)?;
    let sigma = res.f64(cli.sigma, "sigma", 0.2)?;
    let r = res.f64(cli.r, "r", 0.01)?;
    let mkt = MarketParams::new(mu, sigma, r).map_err(|e| CliError::Validation(e.to_string()))?;

    let horizons_raw = res.string(cli.horizons.clone(), "horizons", "")?;
    let horizons = if horizons_raw.is_empty() {
        default_horizons.to_vec()
    } else {
        let parsed: Result<Vec<f64>, _> =
            horizons_raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
        parsed.map_err(|_| CliError::Validation(format!("bad horizons '{horizons_raw}'")))?
    };
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Validation(
            "horizons must be a non-empty, strictly increasing list".into(),
        ));
    }
    if horizons.iter().any(|&t| !(t.is_finite() && t > 0.0)) {
        return Err(CliError::Validation("horizons must be positive".into()));
    }

    let utility_desc = res.string(cli.utility.clone(), "utility", default_utility)?;
    let p_override = res.f64_opt(cli.p, "p")?;

    let method_raw = res.string(
        cli.method.map(|m| format!("{m:?}").to_lowercase()),
        "method",
        "quadrature",
    )?;
    let method = match method_raw.as_str() {
        "quadrature" => Method::Quadrature,
        "montecarlo" => Method::Montecarlo,
        other => {
            return Err(CliError::Validation(format!(
                "method must be quadrature or montecarlo, got '{other}'"
            )))
        }
    };

    let nodes = cli
        .nodes
        .or(res.parse::<usize>("nodes")?)
        .unwrap_or(longrun::solver::DEFAULT_NODES);
    if nodes < 21 {
        return Err(CliError::Validation(format!("nodes must be >= 21, got {nodes}")));
    }
    let paths = cli.paths.or(res.parse("paths")?).unwrap_or(100_000);
    let seed = cli.seed.or(res.parse("seed")?).unwrap_or(42);
    let chunk = cli.chunk.or(res.parse("chunk")?).unwrap_or(4096);
    let mc = McConfig::new(paths.max(2), seed, chunk)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    let out = cli
        .out
        .clone()
        .or_else(|| res.file.get("out").map(PathBuf::from));
    let format_raw = res.string(
        cli.format.map(|f| format!("{f:?}").to_lowercase()),
        "format",
        "csv",
    )?;
    let json = match format_raw.as_str() {
        "csv" => false,
        "json" => true,
        other => {
            return Err(CliError::Validation(format!(
                "format must be csv or json, got '{other}'"
            )))
        }
    };

    let mut echo = vec![
        ("mu".to_string(), fmt_f(mu)),
        ("sigma".to_string(), fmt_f(sigma)),
        ("r".to_string(), fmt_f(r)),
        ("utility".to_string(), utility_desc.clone()),
        (
            "horizons".to_string(),
            horizons.iter().map(|&t| fmt_f(t)).collect::<Vec<_>>().join(","),
        ),
        ("method".to_string(), method_raw),
        ("nodes".to_string(), nodes.to_string()),
        ("paths".to_string(), mc.n_paths.to_string()),
        ("seed".to_string(), mc.seed.to_string()),
        ("chunk".to_string(), mc.chunk_size.to_string()),
        ("format".to_string(), if json { "json".into() } else { "csv".into() }),
    ];
    if let Some(p) = p_override {
        echo.push(("p".to_string(), fmt_f(p)));
    }

    Ok(Common { mkt, utility_desc, p_override, horizons, method, nodes, mc, out, json, echo })
}

fn reject_montecarlo(common: &Common, command: &str) -> RunResult {
    if common.method == Method::Montecarlo {
        return Err(CliError::Validation(format!(
            "method=montecarlo is only supported by the robustness command, not {command}"
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> RunResult {
    match &cli.command {
        Cmd::Robustness => robustness(&cli),
        Cmd::Counterexample { pstar, xhi } => counterexample(&cli, *pstar, *xhi),
        Cmd::Incentives => incentives(&cli),
        Cmd::Replicate {
            alpha,
            kbar,
            strike_lo,
            strike_hi,
            strikes,
            uniform_strikes,
            eval_lo,
            eval_hi,
            evals,
        } => replicate_cmd(
            &cli,
            *alpha,
            *kbar,
            *strike_lo,
            *strike_hi,
            *strikes,
            *uniform_strikes,
            *eval_lo,
            *eval_hi,
            *evals,
        ),
        Cmd::Validate { p_ref } => validate_cmd(&cli, *p_ref),
        Cmd::PriceSquare { s0, t } => price_square(&cli, *s0, *t),
    }
}

fn robustness(cli: &Cli) -> RunResult {
    let common = resolve_common(cli, "shifted:p=-1,a=1", &[5.0, 20.0, 50.0])?;
    let u = descriptor::parse_utility(&common.utility_desc).map_err(CliError::Validation)?;
    let p_ref = common.p_override.unwrap_or_else(|| u.p_high());

    let mut report = Report::new("robustness");
    report.meta = common.echo.clone();
    report.meta_f("p_ref", p_ref);
    report.columns = ["T", "ce_opt", "ce_iso", "ratio", "quad_err"]
        .iter()
        .map(|s| s.to_string())
        .collect();

    let mut worst = 0.0f64;
    for &t in &common.horizons {
        let row = match common.method {
            Method::Quadrature => {
                let point = ce_ratio_with_nodes(&u, &common.mkt, p_ref, t, common.nodes)?;
                worst = worst.max(point.quad_error);
                vec![t, point.ce_optimal, point.ce_isoelastic, point.ratio, point.quad_error]
            }
            Method::Montecarlo => {
                let sol = solve_terminal_with_nodes(&u, &common.mkt, t, 1.0, common.nodes)?;
                let weight = merton_weight(&common.mkt, 1.0 - p_ref)?;
                let law = cp_wealth_law(&common.mkt, weight, t)?;
                let (eu, se) =
                    mc_expect(|x| u.evaluate(x).unwrap_or(f64::NAN), &law, &common.mc)?;
                let ce_iso = certainty_equivalent(&u, eu)?;
                worst = worst.max(se);
                vec![t, sol.certainty_equivalent, ce_iso, ce_iso / sol.certainty_equivalent, se]
            }
        };
        report.rows.push(row);
    }
    report.meta_f("error_estimate_max", worst);
    report.write(common.out.as_deref(), common.json).map_err(CliError::Io)
}

fn counterexample(cli: &Cli, pstar: Option<f64>, xhi: Option<f64>) -> RunResult {
    let common = resolve_common(
        cli,
        "twopiece:p=-1,pstar=-3,xhi=6",
        &[10.0, 25.0, 50.0, 100.0],
    )?;
    reject_montecarlo(&common, "counterexample")?;
    let file = match &cli.config {
        Some(path) => load_file(path)?,
        None => BTreeMap::new(),
    };
    let res = Resolver { file };

    let base = descriptor::parse_utility(&common.utility_desc).map_err(CliError::Validation)?;
    let UtilitySpec::TwoPiecePower(two) = &base else {
        return Err(CliError::Validation(
            "the counterexample command needs a twopiece utility descriptor".into(),
        ));
    };
    let p = common.p_override.unwrap_or(two.p);
    let p_star = res.f64(pstar, "pstar", two.p_star)?;
    let x_hi = res.f64(xhi, "xhi", two.interpolation.x_hi)?;
    let interp = InterpolationSpec::concave_power(x_hi);

    let mut report = Report::new("counterexample");
    report.meta = common.echo.clone();
    report.meta_f("p", p);
    report.meta_f("pstar", p_star);
    report.meta_f("xhi", x_hi);

    let counterexample_regime = p_star < p - 1.0;
    let exponent = if counterexample_regime {
        let restriction = check_param_restriction(&common.mkt, p, p_star)?;
        report.meta_f("restriction_lhs", restriction.lhs);
        report.meta_f("restriction_rhs", restriction.rhs);
        report.meta_f("restriction_margin", restriction.margin);
        report.meta_str("restriction_satisfied", restriction.satisfied.to_string());
        divergence_exponent(&common.mkt, p, p_star)?
    } else {
        f64::NAN
    };

    let points = longrun::counterexample::ce_collapse_curve_with_nodes(
        &common.mkt,
        p,
        p_star,
        interp,
        &common.horizons,
        common.nodes,
    )?;
    report.columns = [
        "T",
        "ratio",
        "lowwealth_ratio_closed_form",
        "exponent",
        "ce_opt",
        "ce_iso",
        "eu_ratio",
        "quad_err",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut worst = 0.0f64;
    for point in &points {
        worst = worst.max(point.quad_error);
        report.rows.push(vec![
            point.horizon,
            point.ratio,
            point.lowwealth_ratio,
            exponent,
            point.ce_optimal,
            point.ce_isoelastic,
            point.eu_ratio,
            point.quad_error,
        ]);
    }
    report.meta_f("error_estimate_max", worst);
    report.write(common.out.as_deref(), common.json).map_err(CliError::Io)
}

fn incentives(cli: &Cli) -> RunResult {
    let common = resolve_common(
        cli,
        "incentive:p=0.5,c1=1,c2=2,legs=3@4",
        &[5.0, 10.0, 20.0, 40.0],
    )?;
    reject_montecarlo(&common, "incentives")?;
    let u = descriptor::parse_utility(&common.utility_desc).map_err(CliError::Validation)?;
    let UtilitySpec::Incentivized(inc) = &u else {
        return Err(CliError::Validation(
            "the incentives command needs an incentive utility descriptor".into(),
        ));
    };

    let curve = grant_value_curve_with_nodes(
        inc.p,
        &inc.contract,
        &common.mkt,
        &common.horizons,
        common.nodes,
    )?;
    let mut report = Report::new("incentives");
    report.meta = common.echo.clone();
    report.columns = ["T", "ce_plain", "ce_incentivized", "premium", "quad_err"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut worst = 0.0f64;
    for point in &curve {
        worst = worst.max(point.quad_error);
        report.rows.push(vec![
            point.horizon,
            point.ce_plain,
            point.ce_incentivized,
            point.premium,
            point.quad_error,
        ]);
    }
    report.meta_f("error_estimate_max", worst);
    report.write(common.out.as_deref(), common.json).map_err(CliError::Io)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[allow(clippy::too_many_arguments)]
fn replicate_cmd(
    cli: &Cli,
    alpha: Option<f64>,
    kbar: Option<f64>,
    strike_lo: Option<f64>,
    strike_hi: Option<f64>,
    strikes: Option<usize>,
    uniform_strikes: bool,
    eval_lo: Option<f64>,
    eval_hi: Option<f64>,
    evals: Option<usize>,
) -> RunResult {
    let common = resolve_common(cli, "isoelastic:p=-1", &[1.0])?;
    reject_montecarlo(&common, "replicate")?;
    let file = match &cli.config {
        Some(path) => load_file(path)?,
        None => BTreeMap::new(),
    };
    let res = Resolver { file };
    let alpha = res.f64(alpha, "alpha", 2.0)?;
    let kbar = res.f64(kbar, "kbar", 0.0)?;
    let k_lo = res.f64(strike_lo, "strike_lo", 1e-4)?;
    let k_hi = res.f64(strike_hi, "strike_hi", 80.0)?;
    let n_strikes = strikes.or(res.parse("strikes")?).unwrap_or(10_000);
    let uniform = uniform_strikes
        || res.parse::<bool>("uniform_strikes")?.unwrap_or(false);
    let x_lo = res.f64(eval_lo, "eval_lo", 0.5)?;
    let x_hi = res.f64(eval_hi, "eval_hi", 20.0)?;
    let n_evals = evals.or(res.parse("evals")?).unwrap_or(301);
    if !(k_lo > 0.0 && k_hi > k_lo && n_strikes >= 2 && n_evals >= 1 && x_lo > 0.0 && x_hi >= x_lo)
    {
        return Err(CliError::Validation("bad strike or evaluation grid".into()));
    }

    let grid = if uniform {
        uniform_grid(k_lo, k_hi, n_strikes)
    } else {
        log_grid(k_lo, k_hi, n_strikes)
    };
    let portfolio = carr_madan_legs(alpha, kbar, &grid)?;
    let xs = log_grid(x_lo, x_hi, n_evals.max(1));
    let result = replicate(&portfolio, &xs)?;

    let mut report = Report::new("replicate");
    report.meta = common.echo.clone();
    report.meta_f("alpha", alpha);
    report.meta_f("kbar", kbar);
    report.meta_f("strike_lo", k_lo);
    report.meta_f("strike_hi", k_hi);
    report.meta_str("strikes", n_strikes.to_string());
    report.meta_str("uniform_strikes", uniform.to_string());
    report.meta_str("put_legs", portfolio.put_legs.len().to_string());
    report.meta_str("call_legs", portfolio.call_legs.len().to_string());
    report.meta_f("cash", portfolio.cash);
    report.meta_f("forward_qty", portfolio.forward_qty);
    report.meta_f("max_rel_error", result.max_rel_error);
    report.columns = ["x", "replicated", "target", "rel_error"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for (&x, &v) in xs.iter().zip(result.values.iter()) {
        let target = x.powf(alpha);
        report.rows.push(vec![x, v, target, (v - target).abs() / target.abs()]);
    }
    report.write(common.out.as_deref(), common.json).map_err(CliError::Io)
}

fn validate_cmd(cli: &Cli, p_ref: Option<f64>) -> RunResult {
    let common = resolve_common(cli, "twopiece:p=-1,pstar=-3,xhi=6", &[1.0])?;
    reject_montecarlo(&common, "validate")?;
    let file = match &cli.config {
        Some(path) => load_file(path)?,
        None => BTreeMap::new(),
    };
    let res = Resolver { file };
    let u = descriptor::parse_utility(&common.utility_desc).map_err(CliError::Validation)?;
    let p_ref = res.f64(p_ref, "p_ref", u.p_high())?;
    let assumptions = validate_assumptions(&u, p_ref)?;
    let envelope = concave_envelope(&u)?;

    let mut report = Report::new("validate");
    report.meta = common.echo.clone();
    report.meta_f("p_ref", p_ref);
    report.meta_str("marginal_ok", assumptions.marginal_ok.to_string());
    report.meta_str("lowwealth_ok", assumptions.lowwealth_ok.to_string());
    report.meta_str(
        "lowwealth_analytic",
        match assumptions.lowwealth_analytic {
            Some(flag) => flag.to_string(),
            None => "n/a".to_string(),
        },
    );
    report.meta_str("bridges", envelope.bridges().len().to_string());
    for (i, b) in envelope.bridges().iter().enumerate() {
        report.meta_str(
            &format!("bridge_{i}"),
            format!("{},{},{}", fmt_f(b.x_lo), fmt_f(b.x_hi), fmt_f(b.slope)),
        );
    }

    report.columns = ["x", "utility", "envelope"].iter().map(|s| s.to_string()).collect();
    for x in log_grid(1e-2, 1e2, 601) {
        report
            .rows
            .push(vec![x, u.evaluate(x)?, envelope.evaluate(x)?]);
    }
    report.extra = Some((
        "report".to_string(),
        serde_json::to_value(&assumptions)
            .map_err(|e| CliError::Io(format!("serializing report: {e}")))?,
    ));
    report.write(common.out.as_deref(), common.json).map_err(CliError::Io)
}

fn price_square(cli: &Cli, s0: Option<f64>, t: Option<f64>) -> RunResult {
    let common = resolve_common(cli, "isoelastic:p=-1", &[1.0])?;
    reject_montecarlo(&common, "price-square")?;
    let file = match &cli.config {
        Some(path) => load_file(path)?,
        None => BTreeMap::new(),
    };
    let res = Resolver { file };
    let s0 = res.f64(s0, "s0", 10.0)?;
    let t = res.f64(t, "t", 1.0)?;
    let price = square_contract_price(s0, common.mkt.sigma, t)?;

    let mut report = Report::new("price-square");
    report.meta = common.echo.clone();
    report.meta_f("s0", s0);
    report.meta_f("t", t);
    report.columns = ["s0", "sigma", "T", "price"].iter().map(|s| s.to_string()).collect();
    report.rows.push(vec![s0, common.mkt.sigma, t, price]);
    report.write(common.out.as_deref(), common.json).map_err(CliError::Io)
}
