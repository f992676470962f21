//! Costly, congestive effort.
//!
//! Each of `k` entrants picks an effort `e`, draws its price from
//! `F(p, e) = p^e` on `[0, 1]` and pays `α(k) e² / 2`. In the symmetric
//! equilibrium `α(k) e (1 + e k)² = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::Quadrature;
use crate::roots;
use crate::scalar::Real;
use crate::stats::{self, Estimate, RunningStats, TopTwo};

const LABEL_REVENUE: u64 = 0x4546_0000;

/// Growth class of the congestion function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `α(k) = s √k`
    Sublinear,
    /// `α(k) = s k`
    Linear,
    /// `α(k) = s k²`
    Superlinear,
}

impl Regime {
    pub fn exponent<T: Real>(self) -> T {
        match self {
            Regime::Sublinear => T::lit(0.5),
            Regime::Linear => T::one(),
            Regime::Superlinear => T::lit(2.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Sublinear => "sublinear",
            Regime::Linear => "linear",
            Regime::Superlinear => "superlinear",
        }
    }
}

/// Congestion function `α(k) = scale · k^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Congestion<T: Real> {
    pub regime: Regime,
    pub scale: T,
}

impl<T: Real> Congestion<T> {
    pub fn new(regime: Regime, scale: T) -> Result<Self> {
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(invalid("scale", "must be positive and finite"));
        }
        Ok(Self { regime, scale })
    }

    pub fn unit(regime: Regime) -> Self {
        Self {
            regime,
            scale: T::one(),
        }
    }

    pub fn alpha(&self, k: u32) -> T {
        self.scale * T::from_count(k as u64).powf(self.regime.exponent())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct EffortModel<T: Real> {
    pub congestion: Congestion<T>,
    pub entrants: u32,
}

impl<T: Real> EffortModel<T> {
    pub fn new(congestion: Congestion<T>, entrants: u32) -> Result<Self> {
        if entrants == 0 {
            return Err(invalid("entrants", "must be at least 1"));
        }
        Ok(Self {
            congestion,
            entrants,
        })
    }

    pub fn alpha(&self) -> T {
        self.congestion.alpha(self.entrants)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffortEquilibrium<T> {
    pub effort: T,
    pub revenue: T,
    /// `α(k) e (1 + e k)² - 1`
    pub residual: T,
}

fn foc<T: Real>(alpha: T, k: T, e: T) -> T {
    let g = T::one() + e * k;
    alpha * e * g * g - T::one()
}

pub fn solve_effort<T: Real>(model: &EffortModel<T>) -> Result<EffortEquilibrium<T>> {
    let alpha = model.alpha();
    if !(alpha > T::zero() && alpha.is_finite()) {
        return Err(invalid("alpha", "must be positive and finite"));
    }
    let k = T::from_count(model.entrants as u64);
    let root = roots::bisect(|e| foc(alpha, k, e), T::zero(), alpha.recip(), T::zero(), 200)?;
    Ok(EffortEquilibrium {
        effort: root.x,
        revenue: equilibrium_revenue(root.x, model.entrants),
        residual: root.residual,
    })
}

/// Interim profit of a bidder holding price `p` against `k - 1` rivals at
/// effort `e`: `p^m / m` with `m = (k - 1) e + 1`.
pub fn interim_revenue_term<T: Real>(p: T, k: u32, effort: T) -> Result<T> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(invalid("p", "must lie in [0, 1]"));
    }
    if !(effort > T::zero() && effort.is_finite()) {
        return Err(invalid("effort", "must be positive and finite"));
    }
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    let m = T::from_count(k as u64 - 1) * effort + T::one();
    Ok(p.powf(m) / m)
}

/// Expected second-highest of `k` draws from `p^e`.
pub fn equilibrium_revenue<T: Real>(effort: T, k: u32) -> T {
    if k < 2 || effort <= T::zero() {
        return T::zero();
    }
    let a = effort * T::from_count(k as u64 - 1);
    let b = effort * T::from_count(k as u64);
    a / (T::one() + a) * (b / (T::one() + b))
}

/// Expected profit of one solver choosing effort `e` while the other `k - 1`
/// choose `e_star`, by quadrature over its own price.
pub fn deviation_profit<T: Real>(e: T, e_star: T, k: u32, alpha: T) -> Result<T> {
    if e <= T::zero() {
        return Ok(T::zero());
    }
    let m = T::from_count(k as u64 - 1) * e_star + T::one();
    // density e p^(e-1) times p^m / m
    let integrand = |p: T| e * p.powf(e - T::one() + m) / m;
    let gross = Quadrature::with_tolerance(T::lit(1e-13)).integrate(integrand, T::zero(), T::one())?;
    Ok(gross.value - alpha * e * e / T::lit(2.0))
}

/// Largest gain a single solver can obtain by deviating from `e_star` to any
/// effort on a uniform grid over `[0, 3 e_star]`.
pub fn best_response_gain<T: Real>(model: &EffortModel<T>, e_star: T, grid: usize) -> Result<T> {
    let alpha = model.alpha();
    let k = model.entrants;
    let base = deviation_profit(e_star, e_star, k, alpha)?;
    let mut best = T::neg_infinity();
    for i in 0..=grid {
        let e = T::lit(3.0) * e_star * T::from_count(i as u64) / T::from_count(grid.max(1) as u64);
        best = best.max(deviation_profit(e, e_star, k, alpha)? - base);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelfareRow<T> {
    pub k: u32,
    pub effort: T,
    pub revenue: T,
}

pub fn welfare_vs_entry<T: Real>(congestion: &Congestion<T>, k_grid: &[u32]) -> Result<Vec<WelfareRow<T>>> {
    if k_grid.iter().any(|&k| k < 2) {
        return Err(invalid("k_grid", "entries must be at least 2"));
    }
    if k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("k_grid", "must be strictly increasing"));
    }
    k_grid
        .par_iter()
        .map(|&k| {
            let eq = solve_effort(&EffortModel::new(*congestion, k)?)?;
            Ok(WelfareRow {
                k,
                effort: eq.effort,
                revenue: eq.revenue,
            })
        })
        .collect()
}

/// Monte Carlo mean of the second-highest of `k` draws from `p^e`.
pub fn simulate_revenue<T: Real>(effort: T, k: u32, trials: u64, seed: u64) -> Result<Estimate<T>> {
    if k < 2 {
        return Err(invalid("k", "must be at least 2"));
    }
    if !(effort > T::zero()) {
        return Err(invalid("effort", "must be positive"));
    }
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let inv = effort.recip();
    let parts = stats::run_chunked(trials, seed, LABEL_REVENUE | k as u64, |rng, n| {
        let mut acc = RunningStats::new();
        for _ in 0..n {
            let mut top = TopTwo::new();
            for _ in 0..k {
                top.push(T::open01(rng).powf(inv));
            }
            acc.push(top.second);
        }
        acc
    });
    Ok(stats::merge_all(&parts).estimate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(regime: Regime, k: u32) -> EffortModel<f64> {
        EffortModel::new(Congestion::unit(regime), k).unwrap()
    }

    #[test]
    fn single_entrant_root() {
        let eq = solve_effort(&model(Regime::Linear, 1)).unwrap();
        // real root of e³ + 2e² + e - 1
        assert!((eq.effort - 0.465_571_231_876_768).abs() < 1e-12, "{}", eq.effort);
        let e = eq.effort;
        assert!((e * e * e + 2.0 * e * e + e - 1.0).abs() < 1e-12);
        assert_eq!(eq.revenue, 0.0);
    }

    #[test]
    fn linear_congestion_keeps_total_effort_constant() {
        let ek: Vec<f64> = [2u32, 4, 8, 16]
            .iter()
            .map(|&k| solve_effort(&model(Regime::Linear, k)).unwrap().effort * k as f64)
            .collect();
        for w in ek.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-9, "{ek:?}");
        }
    }

    #[test]
    fn heavy_congestion_drives_effort_to_zero() {
        let m = EffortModel::new(Congestion::new(Regime::Linear, 1e12).unwrap(), 3).unwrap();
        assert!(solve_effort(&m).unwrap().effort < 1e-11);
    }

    #[test]
    fn interim_term_examples() {
        assert_eq!(interim_revenue_term(0.7, 1, 2.5).unwrap(), 0.7);
        assert!((interim_revenue_term::<f64>(0.5, 2, 1.0).unwrap() - 0.125).abs() < 1e-15);
        assert!((interim_revenue_term::<f64>(1.0, 3, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(interim_revenue_term(1.5, 3, 0.5).is_err());
        assert!(interim_revenue_term(0.5, 3, 0.0).is_err());
    }

    #[test]
    fn interim_term_matches_quadrature() {
        let q = Quadrature::<f64>::with_tolerance(1e-14);
        for &p in &[0.1, 0.3, 0.5, 0.8, 1.0] {
            for &k in &[1u32, 2, 3, 5, 9] {
                for &e in &[0.2, 0.5, 1.0, 2.0, 4.0] {
                    let exponent = (k - 1) as f64 * e;
                    let direct = q.integrate(|x: f64| x.powf(exponent), 0.0, p).unwrap().value;
                    let closed = interim_revenue_term(p, k, e).unwrap();
                    assert!((direct - closed).abs() < 1e-12, "p={p} k={k} e={e}");
                }
            }
        }
    }

    #[test]
    fn revenue_examples() {
        assert!((equilibrium_revenue::<f64>(1.0, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert!(equilibrium_revenue(1e9, 5) > 1.0 - 1e-8);
        assert_eq!(equilibrium_revenue(0.0, 5), 0.0);
        assert_eq!(equilibrium_revenue(2.0, 1), 0.0);
    }

    #[test]
    fn revenue_matches_simulation() {
        let mut seed = 100;
        for &e in &[0.3, 1.0, 3.0] {
            for &k in &[2u32, 3, 5] {
                seed += 1;
                let est = simulate_revenue(e, k, 1_000_000, seed).unwrap();
                assert!(est.within(equilibrium_revenue(e, k), 3.0), "e={e} k={k} {est:?}");
            }
        }
    }

    #[test]
    fn equilibrium_is_a_best_response() {
        for regime in [Regime::Sublinear, Regime::Linear, Regime::Superlinear] {
            for k in [2u32, 5, 20] {
                let m = model(regime, k);
                let eq = solve_effort(&m).unwrap();
                let gain = best_response_gain(&m, eq.effort, 300).unwrap();
                assert!(gain <= 1e-6, "{regime:?} k={k} gain={gain}");
            }
        }
    }

    #[test]
    fn welfare_claims() {
        let grid: Vec<u32> = (2..=64).collect();
        let sup = welfare_vs_entry(&Congestion::<f64>::unit(Regime::Superlinear), &grid).unwrap();
        assert!(sup.windows(2).all(|w| w[1].revenue < w[0].revenue));
        let sub = welfare_vs_entry(&Congestion::<f64>::unit(Regime::Sublinear), &grid).unwrap();
        assert!(sub.windows(2).all(|w| w[1].revenue > w[0].revenue));
        let single = welfare_vs_entry(&Congestion::<f64>::unit(Regime::Linear), &[7]).unwrap();
        assert_eq!(single.len(), 1);
        assert!(welfare_vs_entry(&Congestion::<f64>::unit(Regime::Linear), &[1, 2]).is_err());
    }

    #[test]
    fn linear_revenue_flattens() {
        let rows = welfare_vs_entry(&Congestion::<f64>::unit(Regime::Linear), &[256, 512, 1024]).unwrap();
        assert!((rows[2].revenue - rows[1].revenue).abs() < (rows[1].revenue - rows[0].revenue).abs());
        assert!((rows[2].revenue - rows[1].revenue).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn effort_properties(k in 1u32..200, regime_ix in 0usize..3, scale in 0.05f64..20.0) {
            let regime = [Regime::Sublinear, Regime::Linear, Regime::Superlinear][regime_ix];
            let c = Congestion::new(regime, scale).unwrap();
            let a = solve_effort(&EffortModel::new(c, k).unwrap()).unwrap();
            let b = solve_effort(&EffortModel::new(c, k + 1).unwrap()).unwrap();
            prop_assert!(a.residual.abs() < 1e-10);
            prop_assert!(b.effort < a.effort);
            prop_assert!((0.0..=1.0).contains(&a.revenue));
            let (ta, tb) = (a.effort * k as f64, b.effort * (k + 1) as f64);
            match regime {
                Regime::Superlinear => prop_assert!(tb < ta),
                Regime::Sublinear => prop_assert!(tb > ta),
                Regime::Linear => prop_assert!((tb - ta).abs() < 1e-9 * ta.max(1.0)),
            }
        }
    }
}
