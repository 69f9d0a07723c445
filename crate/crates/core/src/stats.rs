//! Goodness-of-fit and homogeneity tests used by the simulation checks.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
}

fn chi_square_p(statistic: f64, dof: f64) -> f64 {
    if dof <= 0.0 {
        return 1.0;
    }
    let chi = ChiSquared::new(dof).expect("positive degrees of freedom");
    chi.sf(statistic)
}

/// Pearson test of `counts` against the uniform distribution over its cells.
pub fn chi_square_uniform(counts: &[u64]) -> Result<TestResult> {
    if counts.len() < 2 {
        return Err(Error::arg("counts", "need at least two cells"));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InsufficientSamples("no observations".into()));
    }
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dof = (counts.len() - 1) as f64;
    Ok(TestResult {
        statistic,
        dof,
        p_value: chi_square_p(statistic, dof),
    })
}

/// Pearson test of independence for a contingency table. All-zero rows and
/// columns are dropped.
pub fn contingency_test(table: &[Vec<u64>]) -> Result<TestResult> {
    let cols = table.first().map_or(0, Vec::len);
    if table.iter().any(|r| r.len() != cols) {
        return Err(Error::arg("table", "rows must be equally long"));
    }
    let rows: Vec<&Vec<u64>> = table.iter().filter(|r| r.iter().any(|&c| c > 0)).collect();
    let keep: Vec<usize> = (0..cols).filter(|&j| rows.iter().any(|r| r[j] > 0)).collect();
    if rows.len() < 2 || keep.len() < 2 {
        return Err(Error::InsufficientSamples("table needs two nonempty rows and columns".into()));
    }
    let row_tot: Vec<f64> = rows.iter().map(|r| keep.iter().map(|&j| r[j] as f64).sum()).collect();
    let col_tot: Vec<f64> = keep.iter().map(|&j| rows.iter().map(|r| r[j] as f64).sum()).collect();
    let total: f64 = row_tot.iter().sum();
    let mut statistic = 0.0;
    for (r, rt) in rows.iter().zip(&row_tot) {
        for (&j, ct) in keep.iter().zip(&col_tot) {
            let e = rt * ct / total;
            statistic += (r[j] as f64 - e).powi(2) / e;
        }
    }
    let dof = ((rows.len() - 1) * (keep.len() - 1)) as f64;
    Ok(TestResult {
        statistic,
        dof,
        p_value: chi_square_p(statistic, dof),
    })
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientSamples("both samples must be nonempty".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / x.len() as f64 - j as f64 / y.len() as f64).abs());
    }
    let ne = (x.len() * y.len()) as f64 / (x.len() + y.len()) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(TestResult {
        statistic: d,
        dof: ne,
        p_value: kolmogorov_sf(lambda),
    })
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Standard error of a Bernoulli rate estimate.
pub fn binomial_stderr(rate: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    (rate * (1.0 - rate) / trials as f64).sqrt()
}
