//! Costly entry: the threshold cost at which entering is zero-profit in
//! expectation, and the resulting expected number of entrants.
//!
//! A solver with cost `c` enters iff `c <= c̄`, where `c̄` solves
//!
//! ```text
//! Σ_{k=0}^{n} C(n,k) F_C(c̄)^k (1 - F_C(c̄))^(n-k) S(k) = c̄
//! ```
//!
//! and the expected market size is `k* = n F_C(c̄)`. The sum runs to `n` as
//! written in the model even though an entrant has at most `n - 1` rivals.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auction;
use crate::distributions::{CostDistribution, PriceDistribution, PriceFamily};
use crate::error::{invalid, Result};
use crate::roots;
use crate::scalar::{CompensatedSum, Extended, Real};
use crate::stats;

/// Above this universe size generic price laws use a normal approximation of
/// the binomial mixture.
pub const EXACT_SUM_LIMIT: u64 = 1_000;

/// A costly-entry market instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct MarketConfig<T: Real> {
    /// Universe of potential solvers.
    pub n: u64,
    pub price_dist: PriceDistribution<T>,
    pub cost_dist: CostDistribution<T>,
    /// Public price p*.
    #[serde(default)]
    pub reserve: T,
}

impl<T: Real> MarketConfig<T> {
    pub fn new(n: u64, price_dist: PriceDistribution<T>, cost_dist: CostDistribution<T>) -> Self {
        Self {
            n,
            price_dist,
            cost_dist,
            reserve: T::zero(),
        }
    }

    pub fn with_reserve(mut self, reserve: T) -> Result<Self> {
        if !(reserve.is_finite() && reserve >= T::zero()) {
            return Err(invalid("reserve", "must be finite and nonnegative"));
        }
        self.reserve = reserve;
        Ok(self)
    }
}

/// Equilibrium of the entry game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryEquilibrium<T> {
    /// Threshold cost `c̄`.
    pub threshold: Extended<T>,
    /// `F_C(c̄)`.
    pub entry_probability: T,
    /// `k* = n F_C(c̄)`.
    pub expected_entrants: T,
    /// `LHS(c̄) - c̄`; zero when the threshold is infinite.
    pub residual: T,
    /// Set when even a lone entrant expects no profit.
    pub empty_market: bool,
}

/// Lazily evaluated `k ↦ S(k)` for one price law and reserve.
pub struct ProfitCurve<'a, T: Real> {
    dist: &'a PriceDistribution<T>,
    reserve: T,
    cache: HashMap<u32, Extended<T>>,
}

impl<'a, T: Real> ProfitCurve<'a, T> {
    pub fn new(dist: &'a PriceDistribution<T>, reserve: T) -> Self {
        Self {
            dist,
            reserve,
            cache: HashMap::new(),
        }
    }

    pub fn at(&mut self, k: u32) -> Result<Extended<T>> {
        if let Some(v) = self.cache.get(&k) {
            return Ok(*v);
        }
        let v = auction::exante_profit(self.dist, self.reserve, k)?;
        self.cache.insert(k, v);
        Ok(v)
    }

    /// Linear interpolation between integer competitor counts.
    pub fn at_real(&mut self, k: T) -> Result<Extended<T>> {
        let lo = k.floor().max(T::zero());
        let frac = k - lo;
        let i = lo.to_u32().unwrap_or(u32::MAX);
        let a = self.at(i)?;
        if frac <= T::zero() {
            return Ok(a);
        }
        let b = self.at(i.saturating_add(1))?;
        Ok(match (a, b) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + frac * (b - a)),
            _ => Extended::Infinite,
        })
    }
}

/// Closed form of the binomial mixture for exponential prices (zero reserve):
/// `(1 - (1-q)^(n+1)) / ((n+1) λ q)`.
pub fn binomial_sum_exponential<T: Real>(n: u64, rate: T, q: T) -> T {
    let n1 = T::from_count(n + 1);
    if q <= T::zero() {
        return rate.recip();
    }
    // 1 - (1-q)^(n+1), without cancellation for small q
    let mass = -(n1 * (-q).ln_1p()).exp_m1();
    mass / (n1 * rate * q)
}

/// Closed form of the binomial mixture for uniform prices (zero reserve):
/// `(1 - (1-q)^(n+2) - (n+2) q (1-q)^(n+1)) / ((n+1)(n+2) q²)`.
pub fn binomial_sum_uniform<T: Real>(n: u64, q: T) -> T {
    let n1 = T::from_count(n + 1);
    let n2 = T::from_count(n + 2);
    if q <= T::zero() {
        return T::lit(0.5);
    }
    // The numerator is P[Binomial(n+2, q) >= 2]. When that probability is
    // small, sum its terms directly instead of cancelling O(1) quantities.
    let numerator = if n2 * q < T::lit(0.5) {
        let ratio = q / (T::one() - q);
        let mut term = n2 * n1 / T::lit(2.0) * q * q * (n1 * (-q).ln_1p()).exp() / (T::one() - q);
        let mut acc = CompensatedSum::new();
        let mut j = 2u64;
        while j <= n + 2 {
            acc.add(term);
            if term <= acc.value() * T::epsilon() * T::lit(1e-3) {
                break;
            }
            term = term * T::from_count(n + 2 - j) / T::from_count(j + 1) * ratio;
            j += 1;
        }
        acc.value()
    } else {
        let p1 = (n1 * (-q).ln_1p()).exp();
        T::one() - p1 * (T::one() - q) - n2 * q * p1
    };
    numerator / (n1 * n2 * q * q)
}

/// Direct binomial-weighted sum `Σ_k C(n,k) q^k (1-q)^(n-k) S(k)` with
/// log-space weights and compensated accumulation.
pub fn binomial_sum_direct<T: Real>(n: u64, q: T, curve: &mut ProfitCurve<'_, T>) -> Result<Extended<T>> {
    if q <= T::zero() || n == 0 {
        return curve.at(0);
    }
    if q >= T::one() {
        return curve.at(n.min(u32::MAX as u64) as u32);
    }
    let (lq, lp) = (q.ln(), (-q).ln_1p());
    let log_ratio = lq - lp;
    let mut log_w = T::from_count(n) * lp;
    let mut acc = CompensatedSum::new();
    // Contributions below this weight cannot move the sum at double precision.
    let cutoff = T::lit(-60.0);
    for k in 0..=n {
        if k > 0 {
            log_w = log_w + (T::from_count(n - k + 1) / T::from_count(k)).ln() + log_ratio;
        }
        if log_w < cutoff {
            continue;
        }
        let kk = u32::try_from(k).map_err(|_| invalid("n", "too large for direct summation"))?;
        match curve.at(kk)? {
            Extended::Finite(s) => acc.add(log_w.exp() * s),
            Extended::Infinite => return Ok(Extended::Infinite),
        }
    }
    Ok(Extended::Finite(acc.value()))
}

/// Normal approximation of the binomial mixture: `E[S(K)]` with
/// `K ~ N(nq, nq(1-q))` truncated to `[0, n]`, integrated by a trapezoid rule
/// over ±8 standard deviations.
fn binomial_sum_normal<T: Real>(n: u64, q: T, curve: &mut ProfitCurve<'_, T>) -> Result<Extended<T>> {
    let nf = T::from_count(n);
    let mean = nf * q;
    let sd = (nf * q * (T::one() - q)).sqrt();
    let h = T::lit(0.25);
    let mut acc = CompensatedSum::new();
    let mut wsum = CompensatedSum::new();
    for i in -32i32..=32 {
        let z = h * T::from_i32(i).unwrap();
        let w = (-z * z / T::lit(2.0)).exp();
        let k = (mean + sd * z).max(T::zero()).min(nf);
        match curve.at_real(k)? {
            Extended::Finite(s) => acc.add(w * s),
            Extended::Infinite => return Ok(Extended::Infinite),
        }
        wsum.add(w);
    }
    Ok(Extended::Finite(acc.value() / wsum.value()))
}

fn mixture<T: Real>(cfg: &MarketConfig<T>, q: T, curve: &mut ProfitCurve<'_, T>) -> Result<Extended<T>> {
    if cfg.reserve == T::zero() {
        match *cfg.price_dist.family() {
            PriceFamily::Exponential { rate } => {
                return Ok(Extended::Finite(binomial_sum_exponential(cfg.n, rate, q)))
            }
            PriceFamily::UniformUnit => return Ok(Extended::Finite(binomial_sum_uniform(cfg.n, q))),
            _ => {}
        }
    }
    if curve.at(0)? == Extended::Infinite {
        // S(k) shares the tail of S(0) for every k.
        return Ok(Extended::Infinite);
    }
    let nf = T::from_count(cfg.n);
    if cfg.n > EXACT_SUM_LIMIT && nf * q * (T::one() - q) >= T::lit(25.0) {
        binomial_sum_normal(cfg.n, q, curve)
    } else {
        binomial_sum_direct(cfg.n, q, curve)
    }
}

/// Left-hand side of the threshold equation at cost `c_bar`.
pub fn binomial_expected_profit<T: Real>(cfg: &MarketConfig<T>, c_bar: T) -> Result<Extended<T>> {
    if !(c_bar >= T::zero()) {
        return Err(invalid("c_bar", "must be nonnegative"));
    }
    let mut curve = ProfitCurve::new(&cfg.price_dist, cfg.reserve);
    mixture(cfg, cfg.cost_dist.cdf(c_bar), &mut curve)
}

/// Solves the threshold equation by bisection on `[0, S(0)]`.
pub fn solve_entry_threshold<T: Real>(cfg: &MarketConfig<T>) -> Result<EntryEquilibrium<T>> {
    let mut curve = ProfitCurve::new(&cfg.price_dist, cfg.reserve);
    let nf = T::from_count(cfg.n);
    let s0 = match curve.at(0)? {
        Extended::Infinite => {
            let q = cfg.cost_dist.total_mass();
            return Ok(EntryEquilibrium {
                threshold: Extended::Infinite,
                entry_probability: q,
                expected_entrants: nf * q,
                residual: T::zero(),
                empty_market: false,
            });
        }
        Extended::Finite(s0) => s0,
    };
    if !(s0 > T::zero()) {
        return Ok(EntryEquilibrium {
            threshold: Extended::Finite(T::zero()),
            entry_probability: T::zero(),
            expected_entrants: T::zero(),
            residual: s0,
            empty_market: true,
        });
    }

    let mut failure = None;
    let gap = |c: T| -> T {
        let q = cfg.cost_dist.cdf(c);
        match mixture(cfg, q, &mut curve) {
            Ok(v) => v.to_float() - c,
            Err(e) => {
                failure.get_or_insert(e);
                T::nan()
            }
        }
    };
    let root = roots::bisect(gap, T::zero(), s0, T::zero(), 200);
    if let Some(e) = failure {
        return Err(e);
    }
    let root = root?;
    let q = cfg.cost_dist.cdf(root.x);
    Ok(EntryEquilibrium {
        threshold: Extended::Finite(root.x),
        entry_probability: q,
        expected_entrants: nf * q,
        residual: root.residual,
        empty_market: false,
    })
}

/// One row of an entry-scaling table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow<T> {
    pub n: u64,
    pub threshold: Option<Extended<T>>,
    pub expected_entrants: Option<T>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable<T> {
    pub rows: Vec<ScalingRow<T>>,
    /// Log-log slope of `k*` against `n` over the upper half of the grid.
    pub slope: Option<T>,
}

/// Solves the entry equilibrium along `n_grid` (strictly increasing) and
/// fits the growth exponent of `k*`.
pub fn scaling_experiment<T: Real>(
    price_dist: &PriceDistribution<T>,
    cost_dist: &CostDistribution<T>,
    reserve: T,
    n_grid: &[u64],
) -> Result<ScalingTable<T>> {
    if n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("n_grid", "must be strictly increasing"));
    }
    let rows: Vec<ScalingRow<T>> = n_grid
        .par_iter()
        .map(|&n| {
            let cfg = MarketConfig {
                n,
                price_dist: *price_dist,
                cost_dist: cost_dist.clone(),
                reserve,
            };
            match solve_entry_threshold(&cfg) {
                Ok(eq) => ScalingRow {
                    n,
                    threshold: Some(eq.threshold),
                    expected_entrants: Some(eq.expected_entrants),
                    error: None,
                },
                Err(e) => ScalingRow {
                    n,
                    threshold: None,
                    expected_entrants: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let slope = fit_growth_exponent(&rows);
    Ok(ScalingTable { rows, slope })
}

fn fit_growth_exponent<T: Real>(rows: &[ScalingRow<T>]) -> Option<T> {
    if rows.len() < 2 {
        return None;
    }
    let start = (rows.len() / 2).min(rows.len() - 2);
    let (xs, ys): (Vec<T>, Vec<T>) = rows[start..]
        .iter()
        .filter_map(|r| match r.expected_entrants {
            Some(k) if k > T::zero() && k.is_finite() => Some((T::from_count(r.n).ln(), k.ln())),
            _ => None,
        })
        .unzip();
    stats::ols_slope(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exp_market(n: u64) -> MarketConfig<f64> {
        MarketConfig::new(n, PriceDistribution::exponential(1.0).unwrap(), CostDistribution::uniform_unit())
    }

    #[test]
    fn hand_evaluated_single_solver() {
        // (1 - 2/3) S(0) + (2/3) S(1) = 1/3 + 1/3
        let v = binomial_expected_profit(&exp_market(1), 2.0 / 3.0).unwrap().finite().unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        let eq = solve_entry_threshold(&exp_market(1)).unwrap();
        let c = eq.threshold.finite().unwrap();
        assert!((c - 2.0 / 3.0).abs() < 1e-12);
        assert!((eq.expected_entrants - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_entry_probability_gives_lone_profit() {
        let cfg = MarketConfig::new(
            10,
            PriceDistribution::<f64>::uniform_unit(),
            CostDistribution::uniform_unit(),
        );
        assert_eq!(binomial_expected_profit(&cfg, 0.0).unwrap(), Extended::Finite(0.5));
        let gp = MarketConfig::new(
            10,
            PriceDistribution::generalized_pareto(0.0, 1.0, 1.0, 3.0).unwrap(),
            CostDistribution::uniform_unit(),
        );
        let s0 = auction::exante_profit(&gp.price_dist, 0.0, 0).unwrap();
        assert_eq!(binomial_expected_profit(&gp, 0.0).unwrap(), s0);
    }

    #[test]
    fn exponential_closed_form_matches_direct_sum() {
        let cfg = exp_market(50);
        let mut curve = ProfitCurve::new(&cfg.price_dist, 0.0);
        let direct = binomial_sum_direct(50, 0.3, &mut curve).unwrap().finite().unwrap();
        let closed = binomial_sum_exponential(50, 1.0, 0.3);
        assert!((direct - closed).abs() < 1e-12);
    }

    #[test]
    fn uniform_series_branch_is_continuous() {
        // (n + 2) q = 0.5 switches between the series and the closed form
        for n in [10u64, 100, 1000] {
            let q = 0.5 / (n as f64 + 2.0);
            let below = binomial_sum_uniform(n, q * (1.0 - 1e-9));
            let above = binomial_sum_uniform(n, q * (1.0 + 1e-9));
            assert!((below - above).abs() < 1e-9 * below, "n={n}");
        }
    }

    #[test]
    fn heavy_tails_admit_everyone() {
        for n in [10u64, 100, 1000] {
            let cfg = MarketConfig::new(
                n,
                PriceDistribution::<f64>::pareto_reference(),
                CostDistribution::uniform_unit(),
            );
            let eq = solve_entry_threshold(&cfg).unwrap();
            assert_eq!(eq.threshold, Extended::Infinite);
            assert_eq!(eq.expected_entrants, n as f64);
        }
    }

    #[test]
    fn empty_and_degenerate_markets() {
        let cfg = MarketConfig::new(5, PriceDistribution::<f64>::uniform_unit(), CostDistribution::uniform_unit())
            .with_reserve(2.0)
            .unwrap();
        let eq = solve_entry_threshold(&cfg).unwrap();
        assert!(eq.empty_market);
        assert_eq!(eq.expected_entrants, 0.0);

        let eq = solve_entry_threshold(&exp_market(0)).unwrap();
        assert_eq!(eq.expected_entrants, 0.0);
        assert!((eq.threshold.finite().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residual_small_for_generic_law() {
        let cfg = MarketConfig::new(
            40,
            PriceDistribution::generalized_pareto(0.0, 1.0, 1.0, 3.0).unwrap(),
            CostDistribution::exponential(2.0).unwrap(),
        );
        let eq = solve_entry_threshold(&cfg).unwrap();
        let c: f64 = eq.threshold.finite().unwrap();
        assert!(eq.residual.abs() < 1e-10 * c.max(1.0));
        let lhs: f64 = binomial_expected_profit(&cfg, c).unwrap().finite().unwrap();
        assert!((lhs - c).abs() < 1e-10 * c.max(1.0));
    }

    #[test]
    fn normal_approximation_close_to_exact_sum() {
        // Exponential prices but forced down the generic path via a reserve
        // that leaves S(k) unchanged in shape: compare the two generic paths.
        let d = PriceDistribution::<f64>::exponential(1.0).unwrap();
        let mut curve = ProfitCurve::new(&d, 0.0);
        let n = 4_000;
        let q = 0.05;
        let exact = binomial_sum_direct(n, q, &mut curve).unwrap().finite().unwrap();
        let approx = binomial_sum_normal(n, q, &mut curve).unwrap().finite().unwrap();
        let closed = binomial_sum_exponential(n, 1.0, q);
        assert!((exact - closed).abs() < 1e-12);
        assert!((approx - exact).abs() < 1e-3 * exact, "{approx} vs {exact}");
    }

    #[test]
    fn tabulated_costs() {
        let cost = CostDistribution::tabulated(vec![(0.0, 0.0), (0.1, 0.5), (1.0, 1.0)]).unwrap();
        let cfg = MarketConfig::new(20, PriceDistribution::<f64>::uniform_unit(), cost);
        let eq = solve_entry_threshold(&cfg).unwrap();
        assert!(eq.residual.abs() < 1e-12);
        assert!(eq.expected_entrants > 0.0 && eq.expected_entrants < 20.0);
    }

    #[test]
    fn scaling_singleton_and_validation() {
        let t = scaling_experiment(
            &PriceDistribution::<f64>::uniform_unit(),
            &CostDistribution::uniform_unit(),
            0.0,
            &[100],
        )
        .unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.slope.is_none());
        assert!(scaling_experiment(
            &PriceDistribution::<f64>::uniform_unit(),
            &CostDistribution::uniform_unit(),
            0.0,
            &[100, 10]
        )
        .is_err());
    }

    #[test]
    fn single_precision_solve() {
        let cfg = MarketConfig::new(
            100,
            PriceDistribution::<f32>::exponential(1.0).unwrap(),
            CostDistribution::uniform_unit(),
        );
        let eq = solve_entry_threshold(&cfg).unwrap();
        let c64 = solve_entry_threshold(&exp_market(100)).unwrap().threshold.finite().unwrap();
        assert!((eq.threshold.finite().unwrap() as f64 - c64).abs() < 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn comparative_statics(n in 1u64..400, dn in 1u64..400, uniform_prices: bool) {
            let price = if uniform_prices {
                PriceDistribution::uniform_unit()
            } else {
                PriceDistribution::exponential(1.0).unwrap()
            };
            let small = MarketConfig::new(n, price, CostDistribution::uniform_unit());
            let large = MarketConfig::new(n + dn, price, CostDistribution::uniform_unit());
            let a = solve_entry_threshold(&small).unwrap();
            let b = solve_entry_threshold(&large).unwrap();
            prop_assert!(b.expected_entrants >= a.expected_entrants - 1e-9);
            prop_assert!(b.threshold.finite().unwrap() <= a.threshold.finite().unwrap() + 1e-12);
            prop_assert!(a.expected_entrants <= n as f64);
        }

        #[test]
        fn lhs_nonincreasing_in_threshold(c in 0.0f64..1.0, dc in 0.0f64..0.5, n in 1u64..60) {
            let cfg = MarketConfig::new(
                n,
                PriceDistribution::generalized_pareto(0.0, 1.0, 0.5, 2.0).unwrap(),
                CostDistribution::uniform_unit(),
            );
            let a = binomial_expected_profit(&cfg, c).unwrap().finite().unwrap();
            let b = binomial_expected_profit(&cfg, c + dc).unwrap().finite().unwrap();
            prop_assert!(b <= a + 1e-12);
        }
    }
}
