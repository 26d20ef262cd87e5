//! Goodness-of-fit and moment estimators used by the experiments.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::checked_gamma_ur;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Probability mass function over an ordered support.
pub type Pmf<K> = BTreeMap<K, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// Sup distance `D` between empirical and reference CDF.
    pub statistic: f64,
    pub p_value: f64,
    /// Set when `n < 35`, where the asymptotic law is only indicative.
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub n: u64,
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<KsResult>,
    pub extra: BTreeMap<String, f64>,
}

impl StatSummary {
    /// Mean and unbiased variance with standard errors, accumulated in slice
    /// order.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("cannot summarize an empty sample"));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let (m2, m4) = samples.iter().fold((0.0, 0.0), |(a, b), &x| {
            let d = x - mean;
            let d2 = d * d;
            (a + d2, b + d2 * d2)
        });
        let variance = if samples.len() > 1 {
            m2 / (n - 1.0)
        } else {
            0.0
        };
        let pop_var = m2 / n;
        let fourth = m4 / n;
        let variance_se = ((fourth - pop_var * pop_var).max(0.0) / n).sqrt();
        Ok(StatSummary {
            n: samples.len() as u64,
            mean,
            mean_se: (variance / n).sqrt(),
            variance,
            variance_se,
            ks: None,
            extra: BTreeMap::new(),
        })
    }
}

/// One-sample Kolmogorov-Smirnov test against a continuous reference CDF.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::domain("KS test needs at least one sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::domain("KS test sample contains NaN"));
    }
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let statistic = xs.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        acc.max(above.abs()).max(below.abs())
    });
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_survival(n.sqrt() * statistic),
        approximate: xs.len() < 35,
    })
}

/// `P(K > lambda)` for the Kolmogorov distribution.
///
/// Alternating series for `lambda >= 1.18`, the Jacobi-theta form below it;
/// both truncated at 100 terms.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        let a = PI * PI / (8.0 * lambda * lambda);
        let cdf = (2.0 * PI).sqrt() / lambda
            * (1..=100)
                .map(|j| {
                    let odd = (2 * j - 1) as f64;
                    (-odd * odd * a).exp()
                })
                .sum::<f64>();
        1.0 - cdf
    } else {
        let a = -2.0 * lambda * lambda;
        2.0 * (1..=100)
            .map(|j| {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (a * (j * j) as f64).exp()
            })
            .sum::<f64>()
    };
    p.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    /// Number of bins after merging.
    pub bins: usize,
}

/// Pearson chi-square goodness of fit.
///
/// Adjacent bins are merged left to right until each merged bin has an
/// expected count of at least 5; an underfilled remainder joins the last bin.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != expected.len() {
        return Err(Error::domain(format!(
            "observed has {} bins, expected has {}",
            observed.len(),
            expected.len()
        )));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::domain(
            "chi-square test needs at least one observation",
        ));
    }
    if expected.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::domain("expected probabilities must be nonnegative"));
    }
    let mass: f64 = expected.iter().sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!(
            "expected probabilities sum to {mass}, not 1"
        )));
    }
    let n = total as f64;

    let mut merged: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected) {
        o_acc += o as f64;
        e_acc += p * n;
        if e_acc >= 5.0 {
            merged.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if o_acc > 0.0 || e_acc > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => merged.push((o_acc, e_acc)),
        }
    }

    let statistic: f64 = merged
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e) * (o - e) / e } else { 0.0 })
        .sum();
    let dof = merged.len().saturating_sub(1) as u64;
    let p_value = if dof == 0 || statistic <= 0.0 {
        1.0
    } else {
        checked_gamma_ur(dof as f64 / 2.0, statistic / 2.0).unwrap_or(0.0)
    };
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value,
        bins: merged.len(),
    })
}

fn check_normalized<K>(p: &Pmf<K>, name: &str) -> Result<()> {
    if p.values().any(|&v| !(v >= 0.0)) {
        return Err(Error::domain(format!(
            "pmf {name} has a negative or NaN mass"
        )));
    }
    let total: f64 = p.values().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("pmf {name} sums to {total}, not 1")));
    }
    Ok(())
}

/// Total variation distance `(1/2) * sum |p - q|` over the union support.
pub fn tv_distance<K: Ord>(p: &Pmf<K>, q: &Pmf<K>) -> Result<f64> {
    check_normalized(p, "p")?;
    check_normalized(q, "q")?;
    let mut sum = 0.0;
    for (key, &pv) in p {
        sum += (pv - q.get(key).copied().unwrap_or(0.0)).abs();
    }
    for (key, &qv) in q {
        if !p.contains_key(key) {
            sum += qv;
        }
    }
    Ok((0.5 * sum).min(1.0))
}

/// Empirical pmf of a sample.
pub fn empirical_pmf<K: Ord, I: IntoIterator<Item = K>>(samples: I) -> Pmf<K> {
    let mut counts: BTreeMap<K, u64> = BTreeMap::new();
    let mut n = 0u64;
    for s in samples {
        *counts.entry(s).or_insert(0) += 1;
        n += 1;
    }
    counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / n as f64))
        .collect()
}

/// `e^{-lambda} lambda^j / j!`, evaluated in log space.
pub fn poisson_pmf(lambda: f64, j: u64) -> f64 {
    if lambda == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    (-lambda + j as f64 * lambda.ln() - ln_factorial(j)).exp()
}

/// Pearson correlation coefficient; 0 when either side is constant.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n == 0 {
        return 0.0;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Exp(1) CDF, clamped at zero for negative arguments.
pub fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

/// Uniform(0, 1) CDF.
pub fn unit_uniform_cdf(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}
