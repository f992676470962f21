//! Experiment runners. Each returns its output files as bytes; nothing here
//! touches the filesystem.

use serde::Serialize;
use serde_json::json;

use super::config::{
    ClosedFormAuditParams, CongestionParams, DutchAuctionParams, EffortWelfareParams, EntryScalingParams, Figure2Params,
    Params, RunConfig,
};
use crate::auction;
use crate::distributions::PriceDistribution;
use crate::effort::{self, Congestion, EffortModel};
use crate::entry::{self, MarketConfig, ProfitCurve};
use crate::error::Result;
use crate::market::{self, CrossCongestion};
use crate::montecarlo::{self, RatioExperimentConfig};
use crate::scalar::Extended;

/// Audit deltas at or below this pass.
pub const AUDIT_TOLERANCE: f64 = 1e-9;

/// A named output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

fn json_artifact(name: &str, value: &impl Serialize) -> Artifact {
    let mut bytes = serde_json::to_vec_pretty(value).expect("experiment results serialize");
    bytes.push(b'\n');
    Artifact {
        name: name.into(),
        bytes,
    }
}

struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        self.writer
            .write_record(fields.into_iter().collect::<Vec<_>>())
            .expect("in-memory write");
    }

    fn finish(self, name: &str) -> Artifact {
        Artifact {
            name: name.into(),
            bytes: self.writer.into_inner().expect("in-memory flush"),
        }
    }
}

fn extended(v: Extended<f64>) -> String {
    v.to_string()
}

pub fn run(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    match &cfg.params {
        Params::Figure2(p) => figure2(p, cfg.seed),
        Params::EntryScaling(p) => entry_scaling(p),
        Params::EffortWelfare(p) => effort_welfare(p),
        Params::ClosedFormAudit(p) => closed_form_audit(p),
        Params::DutchAuction(p) => dutch_auction(p),
        Params::Congestion(p) => congestion(p),
    }
}

fn figure2(p: &Figure2Params, seed: u64) -> Result<Vec<Artifact>> {
    let runs = (0..p.replicates as u64)
        .map(|r| {
            montecarlo::run_ratio_experiment(&RatioExperimentConfig {
                price_dist: p.price_dist,
                n_grid: p.n_grid.clone(),
                trials: p.trials,
                seed: seed.wrapping_add(r),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let reps = p.replicates as f64;
    let mut table = Table::new(&["n", "mean_ratio", "median_ratio", "se"]);
    let mut rows = Vec::new();
    for (i, &n) in p.n_grid.iter().enumerate() {
        let mean = runs.iter().map(|r| r.rows[i].mean_ratio).sum::<f64>() / reps;
        let median = runs.iter().map(|r| r.rows[i].median_ratio).sum::<f64>() / reps;
        let se = runs.iter().map(|r| r.rows[i].std_error.powi(2)).sum::<f64>().sqrt() / reps;
        table.row([n.to_string(), mean.to_string(), median.to_string(), se.to_string()]);
        rows.push(json!({"n": n, "mean_ratio": mean, "median_ratio": median, "se": se}));
    }
    let summary = json!({
        "price_dist": p.price_dist,
        "trials": p.trials,
        "replicates": p.replicates,
        "heavy_tailed": p.price_dist.is_heavy_tailed(),
        "rows": rows,
    });
    Ok(vec![table.finish("figure2.csv"), json_artifact("figure2.json", &summary)])
}

fn entry_scaling(p: &EntryScalingParams) -> Result<Vec<Artifact>> {
    let result = entry::scaling_experiment(&p.price_dist, &p.cost_dist, p.reserve, &p.n_grid)?;
    let mut table = Table::new(&["n", "threshold", "expected_entrants", "error"]);
    for r in &result.rows {
        table.row([
            r.n.to_string(),
            r.threshold.map(extended).unwrap_or_default(),
            r.expected_entrants.map(|k| k.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    Ok(vec![
        table.finish("entry_scaling.csv"),
        json_artifact("entry_scaling.json", &result),
    ])
}

fn effort_welfare(p: &EffortWelfareParams) -> Result<Vec<Artifact>> {
    let mut table = Table::new(&["regime", "k", "effort", "revenue"]);
    let mut out = Vec::new();
    for &regime in &p.regimes {
        let congestion = Congestion::new(regime, p.scale)?;
        for row in effort::welfare_vs_entry(&congestion, &p.k_grid)? {
            table.row([
                regime.name().to_string(),
                row.k.to_string(),
                row.effort.to_string(),
                row.revenue.to_string(),
            ]);
        }
    }
    out.push(table.finish("effort_welfare.csv"));

    if let Some(pipeline) = &p.entry {
        let mut table = Table::new(&["regime", "n", "expected_entrants", "k", "effort", "revenue", "error"]);
        for &n in &pipeline.n_grid {
            let cfg = MarketConfig::new(n, pipeline.price_dist, pipeline.cost_dist.clone());
            let eq = entry::solve_entry_threshold(&cfg);
            for &regime in &p.regimes {
                let congestion = Congestion::new(regime, p.scale)?;
                let fields = match &eq {
                    Ok(eq) => {
                        let k = eq.expected_entrants.round().clamp(1.0, u32::MAX as f64) as u32;
                        let sol = effort::solve_effort(&EffortModel::new(congestion, k)?)?;
                        [
                            eq.expected_entrants.to_string(),
                            k.to_string(),
                            sol.effort.to_string(),
                            sol.revenue.to_string(),
                            String::new(),
                        ]
                    }
                    Err(e) => [String::new(), String::new(), String::new(), String::new(), e.to_string()],
                };
                table.row([regime.name().to_string(), n.to_string()].into_iter().chain(fields));
            }
        }
        out.push(table.finish("effort_entry.csv"));
    }
    Ok(out)
}

fn closed_form_audit(p: &ClosedFormAuditParams) -> Result<Vec<Artifact>> {
    let mut laws: Vec<(String, String, PriceDistribution<f64>)> = p
        .rates
        .iter()
        .map(|&r| ("exponential".to_string(), r.to_string(), PriceDistribution::exponential(r)))
        .map(|(f, r, d)| d.map(|d| (f, r, d)))
        .collect::<Result<_>>()?;
    laws.push(("uniform_unit".into(), String::new(), PriceDistribution::uniform_unit()));

    let mut profit = Table::new(&["family", "rate", "k", "closed_form", "quadrature", "abs_delta"]);
    let mut max_profit = 0.0f64;
    for (family, rate, d) in &laws {
        for k in 0..=p.k_max {
            let closed = auction::exante_profit_closed_form(d, 0.0, k).expect("closed form exists for these laws");
            let quad = auction::exante_profit_quadrature(d, 0.0, k)?.to_float();
            let delta = (closed - quad).abs();
            max_profit = max_profit.max(delta);
            profit.row([
                family.clone(),
                rate.clone(),
                k.to_string(),
                closed.to_string(),
                quad.to_string(),
                delta.to_string(),
            ]);
        }
    }

    let mut binomial = Table::new(&["family", "rate", "n", "entry_probability", "closed_form", "direct_sum", "abs_delta"]);
    let mut max_binomial = 0.0f64;
    for (family, rate, d) in &laws {
        let mut curve = ProfitCurve::new(d, 0.0);
        for n in 1..=p.n_max {
            for &q in &p.entry_probabilities {
                let closed = match *d.family() {
                    crate::distributions::PriceFamily::Exponential { rate } => entry::binomial_sum_exponential(n, rate, q),
                    _ => entry::binomial_sum_uniform(n, q),
                };
                let direct = entry::binomial_sum_direct(n, q, &mut curve)?.to_float();
                let delta = (closed - direct).abs();
                max_binomial = max_binomial.max(delta);
                binomial.row([
                    family.clone(),
                    rate.clone(),
                    n.to_string(),
                    q.to_string(),
                    closed.to_string(),
                    direct.to_string(),
                    delta.to_string(),
                ]);
            }
        }
    }
    let summary = json!({
        "tolerance": AUDIT_TOLERANCE,
        "max_profit_delta": max_profit,
        "max_binomial_delta": max_binomial,
        "pass": max_profit <= AUDIT_TOLERANCE && max_binomial <= AUDIT_TOLERANCE,
    });
    Ok(vec![
        profit.finish("profit_audit.csv"),
        binomial.finish("binomial_audit.csv"),
        json_artifact("closed_form_audit.json", &summary),
    ])
}

fn dutch_auction(p: &DutchAuctionParams) -> Result<Vec<Artifact>> {
    let outcome = market::run_dutch_auction(&p.market)?;
    let stationarity = outcome.solution.stationarity_residual(&p.market);
    let oracle = match p.oracle_step {
        Some(step) => {
            let o = market::direct_welfare_oracle(&p.market, step)?;
            let gap = (o.welfare - outcome.solution.welfare).abs() / o.welfare.abs().max(1.0);
            Some(json!({"grid_step": step, "solution": o, "relative_welfare_gap": gap}))
        }
        None => None,
    };
    let mut transcript = Table::new(&["step", "lower", "upper", "price", "gradient"]);
    for (i, b) in outcome.transcript.iter().enumerate() {
        transcript.row([
            i.to_string(),
            b.lower.to_string(),
            b.upper.to_string(),
            b.price.to_string(),
            b.gradient.to_string(),
        ]);
    }
    let report = json!({
        "market": p.market,
        "outcome": outcome.outcome,
        "solution": outcome.solution,
        "dual_value": outcome.dual_value,
        "duality_gap": outcome.duality_gap,
        "stationarity_residual": stationarity,
        "oracle": oracle,
        "transcript": outcome.transcript,
    });
    Ok(vec![
        json_artifact("dutch_auction.json", &report),
        transcript.finish("dutch_auction_transcript.csv"),
    ])
}

fn congestion(p: &CongestionParams) -> Result<Vec<Artifact>> {
    let c = CrossCongestion::new(p.beta)?;
    let cmp = market::congestion_comparison(&p.market, &c)?;
    let report = json!({
        "market": p.market,
        "beta": p.beta,
        "converged": cmp.converged(),
        "comparison": cmp,
    });
    Ok(vec![json_artifact("congestion.json", &report)])
}
