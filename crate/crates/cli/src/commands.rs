use std::path::{Path, PathBuf};

use raodp::accountant::{
    compose as compose_budgets, convert as convert_budget, load_ledger, to_exact_json, Budget,
    BudgetKind, ConversionTarget, Ledger, LedgerEntry, LedgerStore,
};
use raodp::geometry::{rao_distance_location, rao_distance_with, Formula};
use raodp::mechanism::{calibrate_with, sanitize_release, sensitivity};
use raodp::oracle::{
    divergence_mc, geodesic_distance_numeric, privacy_loss_sweep_family, Divergence,
};
use raodp::{Error, Family, MechanismKind, MechanismSpec, ParamPoint, QueryKind, QuerySpec};
use serde::Serialize;

use crate::output::{Output, OutputFormat};
use crate::{FamilyArg, FamilyOpts, QueryArg};

pub const EXIT_NUMERIC: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_PERSIST: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }

    fn data(message: impl Into<String>) -> Self {
        Self::new(EXIT_DATA, message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::QuadratureNonConvergence { .. } => EXIT_NUMERIC,
            Error::OutOfBounds { .. } => EXIT_DATA,
            Error::LedgerLocked { .. } | Error::LedgerIo { .. } | Error::LedgerFormat { .. } => {
                EXIT_PERSIST
            }
            _ => EXIT_USAGE,
        };
        CliError::new(code, e.to_string())
    }
}

type CliResult = Result<Output, CliError>;

fn mechanism_kind(opts: FamilyOpts) -> Result<MechanismKind, CliError> {
    if opts.shape.is_some() && opts.family != FamilyArg::Gengauss {
        return Err(CliError::usage("--shape only applies to --family gengauss"));
    }
    match opts.family {
        FamilyArg::Laplace => Ok(MechanismKind::Laplace),
        FamilyArg::Gaussian => Ok(MechanismKind::Gaussian),
        FamilyArg::Gengauss => {
            let n = opts
                .shape
                .ok_or_else(|| CliError::usage("--family gengauss needs --shape"))?;
            Ok(MechanismKind::gen_gaussian(n)?)
        }
        FamilyArg::GaussianFull => Err(CliError::usage(
            "gaussian-full is not a noise mechanism; use laplace, gaussian or gengauss",
        )),
    }
}

fn shape_of(kind: MechanismKind) -> Option<f64> {
    match kind {
        MechanismKind::GenGaussian(n) => Some(n.get()),
        _ => None,
    }
}

fn formula(literal: bool) -> Formula {
    if literal {
        Formula::Literal
    } else {
        Formula::Corrected
    }
}

fn parse_numbers(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("not a number: {s:?}")))
        })
        .collect()
}

fn parse_kind(text: &str) -> Result<BudgetKind, CliError> {
    text.parse::<BudgetKind>().map_err(CliError::from)
}

fn parse_budget(kind: BudgetKind, text: &str) -> Result<Budget, CliError> {
    Ok(Budget::from_params(kind, &parse_numbers(text)?)?)
}

#[derive(Serialize)]
struct CalibrateReport {
    family: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    shape: Option<f64>,
    delta: f64,
    theta: f64,
    scale: f64,
    formula: &'static str,
}

pub fn calibrate(family: FamilyOpts, delta: f64, theta: f64, literal: bool) -> CliResult {
    let kind = mechanism_kind(family)?;
    let scale = calibrate_with(kind, delta, theta, formula(literal))?;
    Ok(Output::record(&CalibrateReport {
        family: kind.name(),
        shape: shape_of(kind),
        delta,
        theta,
        scale,
        formula: if literal { "literal" } else { "corrected" },
    }))
}

pub struct SanitizeArgs {
    pub csv: PathBuf,
    pub column: String,
    pub query: QueryArg,
    pub lower: f64,
    pub upper: f64,
    pub theta: f64,
    pub family: FamilyOpts,
    pub ledger: PathBuf,
    pub allowance: Option<f64>,
    pub seed: u64,
    pub release_id: Option<String>,
    pub timestamp: Option<String>,
}

#[derive(Serialize)]
struct SanitizeReport {
    release_id: String,
    private_value: f64,
    theta: f64,
    sensitivity: f64,
    scale: f64,
    running_total: Budget,
    remaining: Budget,
    overspent: bool,
}

fn read_column(path: &Path, column: &str) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::data(format!("cannot read CSV header: {e}")))?
        .clone();
    let index = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| CliError::data(format!("column {column:?} not found in header")))?;
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        // header is line 1
        let line = row + 2;
        let record = record.map_err(|e| CliError::data(format!("CSV line {line}: {e}")))?;
        let field = record
            .get(index)
            .ok_or_else(|| CliError::data(format!("CSV line {line}: missing column {column:?}")))?;
        let value = field
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                CliError::data(format!("CSV line {line}: {field:?} is not a finite number"))
            })?;
        values.push(value);
    }
    if values.is_empty() {
        return Err(CliError::data("CSV has no records"));
    }
    Ok(values)
}

fn resolve_timestamp(explicit: Option<String>) -> Result<String, CliError> {
    use chrono::{DateTime, SecondsFormat, Utc};
    if let Some(ts) = explicit {
        DateTime::parse_from_rfc3339(&ts)
            .map_err(|e| CliError::usage(format!("--timestamp {ts:?}: {e}")))?;
        return Ok(ts);
    }
    let secs = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse::<i64>()
            .map_err(|_| CliError::usage(format!("SOURCE_DATE_EPOCH={v:?} is not an integer")))?,
        Err(_) => 0,
    };
    let dt = DateTime::<Utc>::from_timestamp(secs, 0)
        .ok_or_else(|| CliError::usage(format!("SOURCE_DATE_EPOCH={secs} is out of range")))?;
    Ok(dt.to_rfc3339_opts(SecondsFormat::Secs, true))
}

pub fn sanitize(args: SanitizeArgs) -> CliResult {
    let kind = mechanism_kind(args.family)?;
    let timestamp = resolve_timestamp(args.timestamp)?;
    if !(args.theta.is_finite() && args.theta > 0.0) {
        return Err(CliError::usage("theta must be positive"));
    }
    let values = read_column(&args.csv, &args.column)?;
    let (query_kind, n_records) = match args.query {
        QueryArg::Count => (QueryKind::CountWithPredicate, None),
        QueryArg::Sum => (QueryKind::Sum, None),
        QueryArg::Mean => (QueryKind::Mean, Some(values.len())),
    };
    let query = QuerySpec::new(query_kind, args.lower, args.upper, n_records)?;
    let true_value = query.evaluate(&values)?;
    let delta = sensitivity(&query);
    let mech = MechanismSpec::calibrated(kind, delta, args.theta)?;

    let mut store = if args.ledger.exists() {
        LedgerStore::open(&args.ledger)?
    } else if let Some(total) = args.allowance {
        LedgerStore::create(&args.ledger, Budget::Rao { theta: total })?
    } else {
        return Err(CliError::usage(format!(
            "ledger {} does not exist; create it with `raodp ledger init` or pass --allowance",
            args.ledger.display()
        )));
    };
    if store.ledger().definition_kind() != BudgetKind::Rao {
        return Err(CliError::usage(format!(
            "sanitize charges rao budgets, but {} tracks {} budgets",
            args.ledger.display(),
            store.ledger().definition_kind()
        )));
    }
    let index = store.ledger().entries().len();
    let release_id = args
        .release_id
        .unwrap_or_else(|| format!("release-{}", index + 1));
    let private_value = sanitize_release(true_value, &mech, args.seed, index as u64)?;
    let query_name = match args.query {
        QueryArg::Count => "count",
        QueryArg::Sum => "sum",
        QueryArg::Mean => "mean",
    };
    let entry = LedgerEntry {
        release_id: release_id.clone(),
        timestamp,
        budget: Budget::Rao { theta: args.theta },
        mechanism_summary: format!("{kind} scale={} sensitivity={delta}", mech.scale()),
        query_summary: format!(
            "{query_name} of {:?} over [{}, {}], n={}",
            args.column,
            args.lower,
            args.upper,
            values.len()
        ),
    };
    // Nothing is printed unless the entry is on disk.
    let overspent = store.record(entry)?;
    let ledger = store.ledger();
    Ok(Output::record(&SanitizeReport {
        release_id,
        private_value,
        theta: args.theta,
        sensitivity: delta,
        scale: mech.scale(),
        running_total: ledger.spent().expect("just recorded"),
        remaining: ledger.remaining().budget,
        overspent,
    }))
}

#[derive(Serialize)]
struct OracleReport {
    value: f64,
    abs_diff: f64,
    error_estimate: f64,
    converged: bool,
    euler_lagrange_residual: f64,
}

#[derive(Serialize)]
struct DistanceOutput {
    family: String,
    value: f64,
    method: raodp::Method,
    formula: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleReport>,
}

fn parse_point(family: Family, text: &str, flag: &str) -> Result<ParamPoint, CliError> {
    let coords = parse_numbers(text)?;
    family
        .point(&coords)
        .map_err(|e| CliError::usage(format!("--{flag}: {e}")))
}

pub fn distance(
    opts: FamilyOpts,
    sigma: Option<f64>,
    p1: &str,
    p2: &str,
    with_oracle: bool,
    literal: bool,
) -> CliResult {
    let family = if opts.family == FamilyArg::GaussianFull {
        if sigma.is_some() || opts.shape.is_some() {
            return Err(CliError::usage(
                "gaussian-full takes the scale inside each point",
            ));
        }
        Family::gaussian_loc_scale()
    } else {
        let sigma = sigma.ok_or_else(|| CliError::usage("location families need --sigma"))?;
        mechanism_kind(opts)?.family(sigma)?
    };
    let (a, b) = (
        parse_point(family, p1, "p1")?,
        parse_point(family, p2, "p2")?,
    );
    let closed = rao_distance_with(&a, &b, formula(literal))?;
    let oracle = if with_oracle {
        let r = geodesic_distance_numeric(&a, &b)?;
        Some(OracleReport {
            value: r.distance.value,
            abs_diff: (closed.value - r.distance.value).abs(),
            error_estimate: r.distance.oracle_error,
            converged: r.converged,
            euler_lagrange_residual: r.euler_lagrange_residual,
        })
    } else {
        None
    };
    Ok(Output::record(&DistanceOutput {
        family: family.to_string(),
        value: closed.value,
        method: closed.method,
        formula: if literal { "literal" } else { "corrected" },
        oracle,
    }))
}

#[derive(Serialize)]
struct BudgetOutput {
    budget: Budget,
}

pub fn compose(definition: &str, budgets: &[String]) -> CliResult {
    let kind = parse_kind(definition)?;
    let list = budgets
        .iter()
        .map(|b| parse_budget(kind, b))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Output::record(&BudgetOutput {
        budget: compose_budgets(&list)?,
    }))
}

pub fn convert(
    from: &str,
    params: &str,
    to: &str,
    context: FamilyOpts,
    target_delta: Option<f64>,
) -> CliResult {
    let budget = parse_budget(parse_kind(from)?, params)?;
    let context = mechanism_kind(context)?;
    let to_kind = parse_kind(to)?;
    let target = match to_kind {
        BudgetKind::Rao => ConversionTarget::Rao,
        BudgetKind::Pure => ConversionTarget::Pure,
        BudgetKind::Gdp => ConversionTarget::Gdp,
        BudgetKind::Approx => ConversionTarget::Approx {
            delta: target_delta
                .ok_or_else(|| CliError::usage("converting to approx needs --target-delta"))?,
        },
        other => {
            return Err(Error::UnsupportedConversion {
                from: budget.kind().tag(),
                to: other.tag(),
                context: context.name(),
            }
            .into())
        }
    };
    if target_delta.is_some() && to_kind != BudgetKind::Approx {
        return Err(CliError::usage(
            "--target-delta only applies to --to approx",
        ));
    }
    Ok(Output::record(&BudgetOutput {
        budget: convert_budget(&budget, target, context)?,
    }))
}

#[derive(Serialize)]
struct StdErrors {
    kl: f64,
    renyi2: f64,
}

#[derive(Serialize)]
struct Flags {
    unbounded_suspected: bool,
}

#[derive(Serialize)]
struct AuditReport {
    family: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    shape: Option<f64>,
    scale: f64,
    delta: f64,
    empirical_epsilon: f64,
    epsilon_argmax: f64,
    rao_theta: f64,
    kl_estimate: f64,
    renyi2_estimate: f64,
    std_errors: StdErrors,
    flags: Flags,
    samples: usize,
    seed: u64,
}

pub fn audit(
    opts: FamilyOpts,
    scale: f64,
    delta: f64,
    seed: u64,
    samples: usize,
    grid_points: usize,
    report_path: Option<&Path>,
) -> CliResult {
    let kind = mechanism_kind(opts)?;
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(CliError::usage("delta must be non-negative"));
    }
    let family = kind.family(scale)?;
    let (a, b) = (family.at(0.0)?, family.at(delta)?);
    let halfwidth = 40.0 * a.spread() + delta;
    let sweep = privacy_loss_sweep_family(family, 0.0, delta, halfwidth, grid_points)?;
    let rao = rao_distance_location(family, 0.0, delta)?;
    let kl = divergence_mc(Divergence::KullbackLeibler, &a, &b, samples, seed)?;
    let renyi = divergence_mc(Divergence::Renyi(2.0), &a, &b, samples, seed)?;
    let report = AuditReport {
        family: kind.name(),
        shape: shape_of(kind),
        scale,
        delta,
        empirical_epsilon: sweep.epsilon,
        epsilon_argmax: sweep.argmax,
        rao_theta: rao.value,
        kl_estimate: kl.value,
        renyi2_estimate: renyi.value,
        std_errors: StdErrors {
            kl: kl.std_error,
            renyi2: renyi.std_error,
        },
        flags: Flags {
            unbounded_suspected: sweep.unbounded_suspected,
        },
        samples,
        seed,
    };
    if let Some(path) = report_path {
        let text = to_exact_json(&report).expect("finite report values");
        std::fs::write(path, text).map_err(|e| {
            CliError::new(
                EXIT_PERSIST,
                format!("cannot write {}: {e}", path.display()),
            )
        })?;
    }
    Ok(Output::record(&report))
}

pub fn ledger_init(path: &Path, definition: &str, allowance: &str) -> CliResult {
    let total = parse_budget(parse_kind(definition)?, allowance)?;
    let store = LedgerStore::create(path, total)?;
    Ok(Output::record(&LedgerSummary::of(store.ledger())))
}

#[derive(Serialize)]
struct LedgerSummary {
    definition_kind: BudgetKind,
    total_allowance: Budget,
    releases: usize,
    spent: Option<Budget>,
    remaining: Budget,
    overspent: bool,
}

impl LedgerSummary {
    fn of(ledger: &Ledger) -> Self {
        let remaining = ledger.remaining();
        Self {
            definition_kind: ledger.definition_kind(),
            total_allowance: ledger.total_allowance(),
            releases: ledger.entries().len(),
            spent: ledger.spent(),
            remaining: remaining.budget,
            overspent: remaining.overspent,
        }
    }
}

pub fn ledger_show(path: &Path, format: OutputFormat) -> CliResult {
    let ledger = load_ledger(path)?;
    Ok(match format {
        OutputFormat::Json => Output::Raw(ledger.to_json()),
        OutputFormat::Table => Output::record(&LedgerSummary::of(&ledger)),
    })
}
