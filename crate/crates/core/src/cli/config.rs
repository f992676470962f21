//! Experiment configuration files.
//!
//! Validation reports every violated field at once, so a config is either
//! fully usable or rejected before anything runs.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::distributions::{CostDistribution, PriceDistribution};
use crate::effort::Regime;
use crate::market::{Market, MAX_ORACLE_SOLVERS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Figure2,
    EntryScaling,
    EffortWelfare,
    ClosedFormAudit,
    DutchAuction,
    Congestion,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Figure2,
        Experiment::EntryScaling,
        Experiment::EffortWelfare,
        Experiment::ClosedFormAudit,
        Experiment::DutchAuction,
        Experiment::Congestion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Figure2 => "figure2",
            Experiment::EntryScaling => "entry-scaling",
            Experiment::EffortWelfare => "effort-welfare",
            Experiment::ClosedFormAudit => "closed-form-audit",
            Experiment::DutchAuction => "dutch-auction",
            Experiment::Congestion => "congestion",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    /// The model result the experiment reproduces.
    pub fn reproduces(self) -> &'static str {
        match self {
            Experiment::Figure2 => "heavy-tailed revenue ratio E[p(n-1:n)]/E[p(n:n)] versus n",
            Experiment::EntryScaling => "costly-entry threshold and growth of expected entrants",
            Experiment::EffortWelfare => "costly congestive effort and revenue versus entry",
            Experiment::ClosedFormAudit => "closed-form ex-ante profits and binomial entry sums",
            Experiment::DutchAuction => "welfare program solved by the descending-price dual mechanism",
            Experiment::Congestion => "clearing price with and without cross-solver congestion",
        }
    }

    pub fn parameters(self) -> &'static str {
        match self {
            Experiment::Figure2 => "price_dist?, n_grid?, trials?, replicates?",
            Experiment::EntryScaling => "price_dist?, cost_dist?, reserve?, n_grid?",
            Experiment::EffortWelfare => "regimes?, scale?, k_grid?, entry? {price_dist?, cost_dist?, n_grid}",
            Experiment::ClosedFormAudit => "k_max?, rates?, n_max?, entry_probabilities?",
            Experiment::DutchAuction => "market, oracle_step?",
            Experiment::Congestion => "market, beta?",
        }
    }
}

/// One violated field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure2Params {
    pub price_dist: PriceDistribution<f64>,
    pub n_grid: Vec<u32>,
    pub trials: u64,
    pub replicates: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryScalingParams {
    pub price_dist: PriceDistribution<f64>,
    pub cost_dist: CostDistribution<f64>,
    pub reserve: f64,
    pub n_grid: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryPipeline {
    pub price_dist: PriceDistribution<f64>,
    pub cost_dist: CostDistribution<f64>,
    pub n_grid: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffortWelfareParams {
    pub regimes: Vec<Regime>,
    pub scale: f64,
    pub k_grid: Vec<u32>,
    pub entry: Option<EntryPipeline>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormAuditParams {
    pub k_max: u32,
    pub rates: Vec<f64>,
    pub n_max: u64,
    pub entry_probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DutchAuctionParams {
    pub market: Market<f64>,
    pub oracle_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CongestionParams {
    pub market: Market<f64>,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Figure2(Figure2Params),
    EntryScaling(EntryScalingParams),
    EffortWelfare(EffortWelfareParams),
    ClosedFormAudit(ClosedFormAuditParams),
    DutchAuction(DutchAuctionParams),
    Congestion(CongestionParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output: PathBuf,
    pub params: Params,
    /// The config as run, after command-line overrides.
    pub echo: Value,
}

struct Section<'a> {
    prefix: String,
    map: Map<String, Value>,
    errors: &'a mut Vec<Violation>,
}

impl<'a> Section<'a> {
    fn new(prefix: &str, value: Value, errors: &'a mut Vec<Violation>) -> Self {
        let map = match value {
            Value::Object(m) => m,
            Value::Null => Map::new(),
            _ => {
                errors.push(Violation {
                    field: prefix.trim_end_matches('.').to_string(),
                    reason: "must be an object".into(),
                });
                Map::new()
            }
        };
        Self {
            prefix: prefix.to_string(),
            map,
            errors,
        }
    }

    fn fail(&mut self, key: &str, reason: impl Into<String>) {
        self.errors.push(Violation {
            field: format!("{}{}", self.prefix, key),
            reason: reason.into(),
        });
    }

    fn take<T: DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        let v = self.map.remove(key)?;
        match serde_json::from_value(v) {
            Ok(t) => Some(t),
            Err(e) => {
                self.fail(key, e.to_string());
                None
            }
        }
    }

    fn required<T: DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        if !self.map.contains_key(key) {
            self.fail(key, "is required");
            return None;
        }
        self.take(key)
    }

    fn take_raw(&mut self, key: &str) -> Option<Value> {
        self.map.remove(key)
    }

    fn positive_integer(&mut self, key: &str, default: i64, min: i64) -> Option<i64> {
        let v = self.take::<i64>(key).unwrap_or(default);
        if v < min {
            self.fail(key, format!("must be an integer >= {min}, got {v}"));
            return None;
        }
        Some(v)
    }

    fn integer_grid(&mut self, key: &str, default: Vec<i64>, min: i64, max: i64, increasing: bool) -> Option<Vec<i64>> {
        let grid = self.take::<Vec<i64>>(key).unwrap_or(default);
        let mut ok = true;
        if grid.is_empty() {
            self.fail(key, "must not be empty");
            ok = false;
        }
        if let Some(bad) = grid.iter().find(|&&v| v < min || v > max) {
            self.fail(key, format!("entries must lie in [{min}, {max}], got {bad}"));
            ok = false;
        }
        if increasing && grid.windows(2).any(|w| w[1] <= w[0]) {
            self.fail(key, "must be strictly increasing");
            ok = false;
        }
        ok.then_some(grid)
    }

    fn finish(self) {
        for key in self.map.keys() {
            self.errors.push(Violation {
                field: format!("{}{}", self.prefix, key),
                reason: "unknown field".into(),
            });
        }
    }
}

fn figure2(s: &mut Section) -> Option<Params> {
    let price_dist = s.take("price_dist").unwrap_or_else(PriceDistribution::pareto_reference);
    let n_grid = s.integer_grid("n_grid", vec![2, 10, 50, 250, 1000], 2, u32::MAX as i64, false);
    let trials = s.positive_integer("trials", 10_000, 1);
    let replicates = s.positive_integer("replicates", 1, 1);
    Some(Params::Figure2(Figure2Params {
        price_dist,
        n_grid: n_grid?.into_iter().map(|n| n as u32).collect(),
        trials: trials? as u64,
        replicates: replicates?.min(u32::MAX as i64) as u32,
    }))
}

fn entry_scaling(s: &mut Section) -> Option<Params> {
    let price_dist = s.take("price_dist").unwrap_or_else(|| PriceDistribution::exponential(1.0).unwrap());
    let cost_dist = s.take("cost_dist").unwrap_or_else(CostDistribution::uniform_unit);
    let reserve = s.take::<f64>("reserve").unwrap_or(0.0);
    if !(reserve >= 0.0 && reserve.is_finite()) {
        s.fail("reserve", "must be finite and nonnegative");
    }
    let n_grid = s.integer_grid(
        "n_grid",
        vec![1_000, 3_000, 10_000, 30_000, 100_000, 300_000, 1_000_000],
        0,
        i64::MAX,
        true,
    );
    Some(Params::EntryScaling(EntryScalingParams {
        price_dist,
        cost_dist,
        reserve,
        n_grid: n_grid?.into_iter().map(|n| n as u64).collect(),
    }))
}

fn effort_welfare(s: &mut Section) -> Option<Params> {
    let regimes = s
        .take::<Vec<Regime>>("regimes")
        .unwrap_or_else(|| vec![Regime::Sublinear, Regime::Linear, Regime::Superlinear]);
    if regimes.is_empty() {
        s.fail("regimes", "must not be empty");
    }
    let scale = s.take::<f64>("scale").unwrap_or(1.0);
    if !(scale > 0.0 && scale.is_finite()) {
        s.fail("scale", "must be positive and finite");
    }
    let k_grid = s.integer_grid("k_grid", (2..=64).collect(), 2, u32::MAX as i64, true);
    let entry = match s.take_raw("entry") {
        None => Some(None),
        Some(v) => {
            let prefix = format!("{}entry.", s.prefix);
            let mut sub = Section::new(&prefix, v, &mut *s.errors);
            let price_dist = sub.take("price_dist").unwrap_or_else(|| PriceDistribution::exponential(1.0).unwrap());
            let cost_dist = sub.take("cost_dist").unwrap_or_else(CostDistribution::uniform_unit);
            let n_grid = sub.integer_grid("n_grid", vec![], 1, i64::MAX, true);
            sub.finish();
            n_grid.map(|g| {
                Some(EntryPipeline {
                    price_dist,
                    cost_dist,
                    n_grid: g.into_iter().map(|n| n as u64).collect(),
                })
            })
        }
    };
    if regimes.is_empty() || !(scale > 0.0 && scale.is_finite()) {
        return None;
    }
    Some(Params::EffortWelfare(EffortWelfareParams {
        regimes,
        scale,
        k_grid: k_grid?.into_iter().map(|k| k as u32).collect(),
        entry: entry?,
    }))
}

fn closed_form_audit(s: &mut Section) -> Option<Params> {
    let k_max = s.positive_integer("k_max", 20, 0);
    let rates = s.take::<Vec<f64>>("rates").unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let rates_ok = !rates.is_empty() && rates.iter().all(|&r| r > 0.0 && r.is_finite());
    if !rates_ok {
        s.fail("rates", "must be a nonempty list of positive rates");
    }
    let n_max = s.positive_integer("n_max", 50, 1);
    let probs = s
        .take::<Vec<f64>>("entry_probabilities")
        .unwrap_or_else(|| vec![0.01, 0.1, 0.3, 0.6, 0.9]);
    let probs_ok = !probs.is_empty() && probs.iter().all(|&q| q > 0.0 && q <= 1.0);
    if !probs_ok {
        s.fail("entry_probabilities", "must be a nonempty list of values in (0, 1]");
    }
    let (k_max, n_max) = (k_max?, n_max?);
    if !(rates_ok && probs_ok) {
        return None;
    }
    Some(Params::ClosedFormAudit(ClosedFormAuditParams {
        k_max: k_max.min(u32::MAX as i64) as u32,
        rates,
        n_max: n_max as u64,
        entry_probabilities: probs,
    }))
}

fn dutch_auction(s: &mut Section) -> Option<Params> {
    let market: Option<Market<f64>> = s.required("market");
    let oracle_step = s.take::<f64>("oracle_step");
    if let Some(h) = oracle_step {
        if !(h > 0.0 && h.is_finite()) {
            s.fail("oracle_step", "must be positive and finite");
            return None;
        }
        let solvers = market.as_ref().map_or(0, |m| m.solvers().len());
        if solvers > MAX_ORACLE_SOLVERS {
            s.fail(
                "oracle_step",
                format!("the grid oracle handles at most {MAX_ORACLE_SOLVERS} solvers, the market has {solvers}"),
            );
            return None;
        }
    }
    Some(Params::DutchAuction(DutchAuctionParams {
        market: market?,
        oracle_step,
    }))
}

fn congestion(s: &mut Section) -> Option<Params> {
    let market = s.required("market");
    let beta = s.take::<f64>("beta").unwrap_or(0.5);
    if !(beta >= 0.0 && beta.is_finite()) {
        s.fail("beta", "must be nonnegative and finite");
        return None;
    }
    Some(Params::Congestion(CongestionParams { market: market?, beta }))
}

/// Parses and validates a config document, applying command-line overrides.
pub fn parse(text: &str, output: Option<PathBuf>, seed: Option<u64>) -> Result<RunConfig, Vec<Violation>> {
    let mut errors = Vec::new();
    let root: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            return Err(vec![Violation {
                field: "<document>".into(),
                reason: e.to_string(),
            }])
        }
    };
    let mut top = Section::new("", root, &mut errors);
    let name: Option<String> = top.required("experiment");
    let experiment = name.as_deref().and_then(|n| {
        let e = Experiment::from_name(n);
        if e.is_none() {
            top.fail("experiment", format!("unknown experiment `{n}`"));
        }
        e
    });
    let file_seed = top.take::<u64>("seed");
    let file_output = top.take::<PathBuf>("output");
    let params_value = top.take_raw("parameters").unwrap_or(Value::Null);
    top.finish();

    let output = output.or(file_output);
    if output.is_none() {
        errors.push(Violation {
            field: "output".into(),
            reason: "is required (in the config or via --out)".into(),
        });
    }
    let seed = seed.or(file_seed).unwrap_or(0);

    let params = experiment.and_then(|e| {
        let mut s = Section::new("parameters.", params_value.clone(), &mut errors);
        let p = match e {
            Experiment::Figure2 => figure2(&mut s),
            Experiment::EntryScaling => entry_scaling(&mut s),
            Experiment::EffortWelfare => effort_welfare(&mut s),
            Experiment::ClosedFormAudit => closed_form_audit(&mut s),
            Experiment::DutchAuction => dutch_auction(&mut s),
            Experiment::Congestion => congestion(&mut s),
        };
        s.finish();
        p
    });

    match (experiment, output, params) {
        (Some(experiment), Some(output), Some(params)) if errors.is_empty() => {
            let echo = serde_json::json!({
                "experiment": experiment.name(),
                "seed": seed,
                "output": output,
                "parameters": params_value,
            });
            Ok(RunConfig {
                experiment,
                seed,
                output,
                params,
                echo,
            })
        }
        _ => Err(errors),
    }
}
