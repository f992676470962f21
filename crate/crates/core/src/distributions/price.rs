use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::Quadrature;
use crate::scalar::{Extended, Real};

/// Survival level at which unbounded supports are truncated for quadrature.
pub const TAIL_TRUNCATION: f64 = 1e-12;

/// Parameterization of a price law, as written in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PriceFamily<T> {
    /// `F(p) = 1 - exp(-rate * p)` on `p >= 0`.
    Exponential { rate: T },
    /// `F(p) = p` on `[0, 1]`.
    UniformUnit,
    /// `F(x) = 1 - [1 + ((x - location) / scale)^(1/shape)]^(-tail)` on `x > location`.
    GeneralizedPareto {
        location: T,
        scale: T,
        shape: T,
        tail: T,
    },
    /// `F(x) = 1 - (scale / x)^tail` on `x >= scale`.
    StandardPareto { scale: T, tail: T },
}

/// A validated price distribution.
///
/// Construction rejects invalid parameters, so the per-call methods never fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "PriceFamily<T>",
    into = "PriceFamily<T>",
    bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>")
)]
pub struct PriceDistribution<T: Real> {
    family: PriceFamily<T>,
}

fn positive<T: Real>(name: &'static str, v: T) -> Result<()> {
    if v.is_finite() && v > T::zero() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and positive, got {v}")))
    }
}

impl<T: Real> TryFrom<PriceFamily<T>> for PriceDistribution<T> {
    type Error = Error;

    fn try_from(family: PriceFamily<T>) -> Result<Self> {
        match family {
            PriceFamily::Exponential { rate } => positive("rate", rate)?,
            PriceFamily::UniformUnit => {}
            PriceFamily::GeneralizedPareto {
                location,
                scale,
                shape,
                tail,
            } => {
                if !(location.is_finite() && location >= T::zero()) {
                    return Err(invalid("location", format!("must be finite and nonnegative, got {location}")));
                }
                positive("scale", scale)?;
                positive("shape", shape)?;
                positive("tail", tail)?;
            }
            PriceFamily::StandardPareto { scale, tail } => {
                positive("scale", scale)?;
                positive("tail", tail)?;
            }
        }
        Ok(Self { family })
    }
}

impl<T: Real> From<PriceDistribution<T>> for PriceFamily<T> {
    fn from(d: PriceDistribution<T>) -> Self {
        d.family
    }
}

impl<T: Real> PriceDistribution<T> {
    pub fn exponential(rate: T) -> Result<Self> {
        PriceFamily::Exponential { rate }.try_into()
    }

    pub fn uniform_unit() -> Self {
        Self {
            family: PriceFamily::UniformUnit,
        }
    }

    pub fn generalized_pareto(location: T, scale: T, shape: T, tail: T) -> Result<Self> {
        PriceFamily::GeneralizedPareto {
            location,
            scale,
            shape,
            tail,
        }
        .try_into()
    }

    pub fn standard_pareto(scale: T, tail: T) -> Result<Self> {
        PriceFamily::StandardPareto { scale, tail }.try_into()
    }

    /// Heavy-tailed setting used for the revenue-ratio experiment:
    /// location 0, scale 100, shape 1, tail 0.95.
    pub fn pareto_reference() -> Self {
        Self {
            family: PriceFamily::GeneralizedPareto {
                location: T::zero(),
                scale: T::lit(100.0),
                shape: T::one(),
                tail: T::lit(0.95),
            },
        }
    }

    /// Classical Pareto counterpart of [`Self::pareto_reference`]: scale 100, tail 0.95.
    pub fn standard_pareto_reference() -> Self {
        Self {
            family: PriceFamily::StandardPareto {
                scale: T::lit(100.0),
                tail: T::lit(0.95),
            },
        }
    }

    pub fn family(&self) -> &PriceFamily<T> {
        &self.family
    }

    /// Short machine-friendly name.
    pub fn name(&self) -> &'static str {
        match self.family {
            PriceFamily::Exponential { .. } => "exponential",
            PriceFamily::UniformUnit => "uniform_unit",
            PriceFamily::GeneralizedPareto { .. } => "generalized_pareto",
            PriceFamily::StandardPareto { .. } => "standard_pareto",
        }
    }

    /// Closure of the support, `(lower, upper)`; `upper` may be infinite.
    pub fn support(&self) -> (T, T) {
        match self.family {
            PriceFamily::Exponential { .. } => (T::zero(), T::infinity()),
            PriceFamily::UniformUnit => (T::zero(), T::one()),
            PriceFamily::GeneralizedPareto { location, .. } => (location, T::infinity()),
            PriceFamily::StandardPareto { scale, .. } => (scale, T::infinity()),
        }
    }

    pub fn cdf(&self, p: T) -> T {
        match self.family {
            PriceFamily::Exponential { rate } => {
                if p <= T::zero() {
                    T::zero()
                } else {
                    -(-rate * p).exp_m1()
                }
            }
            PriceFamily::UniformUnit => p.max(T::zero()).min(T::one()),
            PriceFamily::GeneralizedPareto {
                location,
                scale,
                shape,
                tail,
            } => {
                if p <= location {
                    return T::zero();
                }
                let w = ((p - location) / scale).powf(shape.recip());
                -(-tail * w.ln_1p()).exp_m1()
            }
            PriceFamily::StandardPareto { scale, tail } => {
                if p <= scale {
                    T::zero()
                } else {
                    -(tail * (scale / p).ln()).exp_m1()
                }
            }
        }
    }

    /// `1 - F(p)`, computed without cancellation in the upper tail.
    pub fn survival(&self, p: T) -> T {
        match self.family {
            PriceFamily::Exponential { rate } => {
                if p <= T::zero() {
                    T::one()
                } else {
                    (-rate * p).exp()
                }
            }
            PriceFamily::UniformUnit => T::one() - self.cdf(p),
            PriceFamily::GeneralizedPareto {
                location,
                scale,
                shape,
                tail,
            } => {
                if p <= location {
                    return T::one();
                }
                let w = ((p - location) / scale).powf(shape.recip());
                (-tail * w.ln_1p()).exp()
            }
            PriceFamily::StandardPareto { scale, tail } => {
                if p <= scale {
                    T::one()
                } else {
                    (scale / p).powf(tail)
                }
            }
        }
    }

    pub fn pdf(&self, p: T) -> T {
        match self.family {
            PriceFamily::Exponential { rate } => {
                if p < T::zero() {
                    T::zero()
                } else {
                    rate * (-rate * p).exp()
                }
            }
            PriceFamily::UniformUnit => {
                if p >= T::zero() && p <= T::one() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            PriceFamily::GeneralizedPareto {
                location,
                scale,
                shape,
                tail,
            } => {
                if p <= location {
                    return T::zero();
                }
                let z = (p - location) / scale;
                let inv = shape.recip();
                let w = z.powf(inv);
                tail * (-(tail + T::one()) * w.ln_1p()).exp() * inv * z.powf(inv - T::one()) / scale
            }
            PriceFamily::StandardPareto { scale, tail } => {
                if p < scale {
                    T::zero()
                } else {
                    tail * (scale / p).powf(tail) / p
                }
            }
        }
    }

    /// Inverse CDF on `[0, 1]`.
    pub fn quantile(&self, u: T) -> T {
        let u = u.max(T::zero()).min(T::one());
        match self.family {
            PriceFamily::Exponential { rate } => -(-u).ln_1p() / rate,
            PriceFamily::UniformUnit => u,
            PriceFamily::GeneralizedPareto {
                location,
                scale,
                shape,
                tail,
            } => {
                // (1 - u)^(-1/tail) - 1, accurate for small u
                let w = (-(-u).ln_1p() / tail).exp_m1();
                location + scale * w.powf(shape)
            }
            PriceFamily::StandardPareto { scale, tail } => scale * (-(-u).ln_1p() / tail).exp(),
        }
    }

    /// The point whose survival probability is `s`; accurate for tiny `s`.
    pub fn inverse_survival(&self, s: T) -> T {
        let s = s.max(T::zero()).min(T::one());
        match self.family {
            PriceFamily::Exponential { rate } => -s.ln() / rate,
            PriceFamily::UniformUnit => T::one() - s,
            PriceFamily::GeneralizedPareto {
                location,
                scale,
                shape,
                tail,
            } => location + scale * (-s.ln() / tail).exp_m1().powf(shape),
            PriceFamily::StandardPareto { scale, tail } => scale * (-s.ln() / tail).exp(),
        }
    }

    /// Inverse-transform draw.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.quantile(T::open01(rng))
    }

    /// Tail index of a regularly varying upper tail, `None` for light tails.
    pub fn tail_index(&self) -> Option<T> {
        match self.family {
            PriceFamily::Exponential { .. } | PriceFamily::UniformUnit => None,
            PriceFamily::GeneralizedPareto { shape, tail, .. } => Some(tail / shape),
            PriceFamily::StandardPareto { tail, .. } => Some(tail),
        }
    }

    /// True when the mean is infinite (tail index at most one).
    pub fn is_heavy_tailed(&self) -> bool {
        self.tail_index().is_some_and(|a| a <= T::one())
    }

    pub fn mean(&self) -> Extended<T> {
        match self.family {
            PriceFamily::Exponential { rate } => Extended::Finite(rate.recip()),
            PriceFamily::UniformUnit => Extended::Finite(T::lit(0.5)),
            PriceFamily::GeneralizedPareto {
                location,
                scale,
                shape,
                tail,
            } => {
                if tail <= shape {
                    return Extended::Infinite;
                }
                // Lomax moment: E[Z^shape] = Γ(shape + 1) Γ(tail - shape) / Γ(tail).
                let (g, a) = (shape.to_f64_lossy(), tail.to_f64_lossy());
                let moment = libm::tgamma(g + 1.0) * libm::tgamma(a - g) / libm::tgamma(a);
                Extended::Finite(location + scale * T::lit(moment))
            }
            PriceFamily::StandardPareto { scale, tail } => {
                if tail <= T::one() {
                    Extended::Infinite
                } else {
                    Extended::Finite(tail * scale / (tail - T::one()))
                }
            }
        }
    }

    /// Upper integration limit for unbounded supports: the point with survival
    /// `TAIL_TRUNCATION` (or a few ulps in single precision).
    pub fn truncation_point(&self) -> T {
        let (_, hi) = self.support();
        if hi.is_finite() {
            return hi;
        }
        let s = T::lit(TAIL_TRUNCATION).max(T::lit(16.0) * T::epsilon());
        self.inverse_survival(s)
    }

    /// Breakpoints for quadrature over `[from, truncation_point]`, placed at
    /// quantiles so each panel carries comparable probability mass.
    pub(crate) fn integration_breaks(&self, from: T) -> Vec<T> {
        let (lo, _) = self.support();
        let start = from.max(lo);
        let end = self.truncation_point();
        let mut pts = vec![start];
        if end <= start {
            pts.push(start);
            return pts;
        }
        let levels = [0.25, 0.5, 0.75];
        for u in levels {
            let x = self.quantile(T::lit(u));
            if x > start && x < end {
                pts.push(x);
            }
        }
        let mut s = 0.1;
        while s > TAIL_TRUNCATION * 1.5 {
            let x = self.inverse_survival(T::lit(s));
            if x > *pts.last().unwrap() && x < end {
                pts.push(x);
            }
            s *= 0.1;
        }
        pts.push(end);
        pts
    }

    /// `∫_a^b F(x)^m dx` for finite `a <= b`.
    ///
    /// Closed forms for the exponential and uniform laws, adaptive quadrature otherwise.
    pub fn cdf_power_integral(&self, a: T, b: T, m: u32) -> Result<T> {
        if b <= a {
            return Ok(T::zero());
        }
        if m == 0 {
            return Ok(b - a);
        }
        match self.family {
            PriceFamily::UniformUnit => {
                // F = x on [0, 1], 1 above.
                let lo = a.max(T::zero()).min(T::one());
                let hi = b.max(T::zero()).min(T::one());
                let e = T::from_count(m as u64 + 1);
                let inside = (hi.powi(m as i32 + 1) - lo.powi(m as i32 + 1)) / e;
                let above = (b - a.max(T::one())).max(T::zero());
                Ok(inside + above)
            }
            PriceFamily::Exponential { rate } => {
                // u = F(x): ∫ u^m / (rate (1-u)) du = [-ln(1-u) - Σ_{j<=m} u^j / j] / rate
                let a = a.max(T::zero());
                if b <= a {
                    return Ok(T::zero());
                }
                let (ua, ub) = (self.cdf(a), self.cdf(b));
                let mut series = T::zero();
                let (mut pa, mut pb) = (T::one(), T::one());
                for j in 1..=m {
                    pa = pa * ua;
                    pb = pb * ub;
                    series = series + (pb - pa) / T::from_count(j as u64);
                }
                Ok(((b - a) * rate - series) / rate)
            }
            _ => {
                let (lo, _) = self.support();
                let start = a.max(lo);
                if b <= start {
                    return Ok(T::zero());
                }
                let mut pts = vec![start];
                for u in [0.25, 0.5, 0.75, 0.9, 0.99, 0.999] {
                    let x = self.quantile(T::lit(u));
                    if x > start && x < b {
                        pts.push(x);
                    }
                }
                pts.push(b);
                let q = Quadrature::default();
                let r = q.integrate_with_breaks(|x| self.cdf(x).powi(m as i32), &pts)?;
                Ok(r.value)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn families() -> Vec<PriceDistribution<f64>> {
        vec![
            PriceDistribution::exponential(1.0).unwrap(),
            PriceDistribution::exponential(2.5).unwrap(),
            PriceDistribution::uniform_unit(),
            PriceDistribution::pareto_reference(),
            PriceDistribution::generalized_pareto(1.0, 2.0, 0.5, 3.0).unwrap(),
            PriceDistribution::standard_pareto_reference(),
        ]
    }

    #[test]
    fn cdf_examples() {
        let e = PriceDistribution::exponential(1.0).unwrap();
        assert_eq!(e.cdf(0.0), 0.0);
        assert_eq!(PriceDistribution::<f64>::uniform_unit().cdf(0.5), 0.5);
        let gp = PriceDistribution::<f64>::pareto_reference();
        let expected = 1.0 - 2f64.powf(-0.95);
        assert!((gp.cdf(100.0) - expected).abs() < 1e-15);
        assert!((expected - 0.482_367_5).abs() < 1e-7);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(PriceDistribution::exponential(0.0).is_err());
        assert!(PriceDistribution::exponential(-1.0).is_err());
        assert!(PriceDistribution::generalized_pareto(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(PriceDistribution::generalized_pareto(-1.0, 1.0, 1.0, 1.0).is_err());
        assert!(PriceDistribution::standard_pareto(1.0, f64::NAN).is_err());
        let bad: std::result::Result<PriceDistribution<f64>, _> =
            serde_json::from_str(r#"{"family":"exponential","rate":-2}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn serde_shape() {
        let d = PriceDistribution::<f64>::exponential(2.0).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"family":"exponential","rate":2.0}"#);
        let back: PriceDistribution<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn pdf_is_cdf_derivative() {
        for d in families() {
            for u in [0.1, 0.3, 0.6, 0.9] {
                let x = d.quantile(u);
                let h = 1e-6 * x.abs().max(1e-3);
                let fd = (d.cdf(x + h) - d.cdf(x - h)) / (2.0 * h);
                assert!((fd - d.pdf(x)).abs() < 1e-5 * d.pdf(x).max(1.0), "{}", d.name());
            }
        }
    }

    #[test]
    fn survival_and_inverse_survival_agree() {
        for d in families() {
            for s in [0.5, 1e-3, 1e-9, 1e-12] {
                let x = d.inverse_survival(s);
                if d.support().1.is_finite() {
                    continue;
                }
                assert!((d.survival(x) / s - 1.0).abs() < 1e-9, "{} s={s}", d.name());
            }
        }
    }

    #[test]
    fn means() {
        assert_eq!(PriceDistribution::exponential(2.0).unwrap().mean(), Extended::Finite(0.5));
        assert_eq!(PriceDistribution::<f64>::pareto_reference().mean(), Extended::Infinite);
        assert!(PriceDistribution::<f64>::pareto_reference().is_heavy_tailed());
        let lomax = PriceDistribution::<f64>::generalized_pareto(0.0, 2.0, 1.0, 3.0).unwrap();
        assert!((lomax.mean().finite().unwrap() - 1.0).abs() < 1e-12);
        let sp = PriceDistribution::<f64>::standard_pareto(1.0, 3.0).unwrap();
        assert!((sp.mean().finite().unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn general_shape_mean_matches_quadrature() {
        let d = PriceDistribution::<f64>::generalized_pareto(0.5, 2.0, 0.5, 3.0).unwrap();
        let pts = d.integration_breaks(0.0);
        let q = Quadrature::default();
        let tail = q.integrate_with_breaks(|x| d.survival(x), &pts).unwrap().value;
        let mean = 0.5 + tail;
        assert!((d.mean().finite().unwrap() - mean).abs() < 1e-8);
    }

    #[test]
    fn cdf_power_integral_closed_forms_match_quadrature() {
        let q = Quadrature::with_tolerance(1e-13);
        for d in [PriceDistribution::<f64>::exponential(1.5).unwrap(), PriceDistribution::uniform_unit()] {
            for m in [1u32, 2, 5, 12] {
                for (a, b) in [(0.0f64, 0.4f64), (0.2, 0.9), (0.3, 1.7)] {
                    let closed = d.cdf_power_integral(a, b, m).unwrap();
                    let numeric = q.integrate_with_breaks(|x| d.cdf(x).powi(m as i32), &[a, a.max(1.0).min(b), b]).unwrap().value;
                    assert!((closed - numeric).abs() < 1e-11, "{} m={m} [{a},{b}]", d.name());
                }
            }
        }
    }

    #[test]
    fn single_precision_roundtrip() {
        let d = PriceDistribution::<f32>::exponential(1.0).unwrap();
        let x = d.quantile(0.3);
        assert!((d.cdf(x) - 0.3).abs() < 1e-6);
        assert!(d.truncation_point().is_finite());
    }

    proptest! {
        #[test]
        fn inverse_transform_roundtrip(u in 1e-6f64..(1.0 - 1e-6)) {
            for d in families() {
                let x = d.quantile(u);
                prop_assert!((d.cdf(x) - u).abs() < 1e-9, "{} u={}", d.name(), u);
            }
        }

        #[test]
        fn quantile_of_cdf(u in 0.01f64..0.99) {
            for d in families() {
                let p = d.quantile(u);
                let back = d.quantile(d.cdf(p));
                prop_assert!((back - p).abs() < 1e-9 * p.abs().max(1.0), "{}", d.name());
            }
        }

        #[test]
        fn cdf_monotone(a in 0.0f64..500.0, b in 0.0f64..500.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            for d in families() {
                prop_assert!(d.cdf(lo) <= d.cdf(hi));
                prop_assert!(d.cdf(hi) <= 1.0 && d.cdf(lo) >= 0.0);
            }
        }
    }
}
