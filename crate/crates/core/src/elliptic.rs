//! Grid diagnostics for the condition `||D_f||^2 <= K J_f + K'`.
//!
//! A finite grid can only falsify the condition (growth of the smallest
//! admissible `K'` as the grid approaches the circle) or fail to falsify it.

use rayon::prelude::*;
use serde::Serialize;

use crate::derivs::DerivField;
use crate::error::{domain, Error, Result};
use crate::norms::dfield_norms;

/// Ratio of consecutive `K'` values read as growth.
pub const GROWTH_RATIO: f64 = 1.5;

/// Relative change below which `K'` counts as stable.
pub const STABLE_CHANGE: f64 = 0.05;

fn check_k(k: f64) -> Result<()> {
    if !(k >= 1.0) || !k.is_finite() {
        return domain(format!("K must be finite and >= 1, got {k}"));
    }
    Ok(())
}

/// Smallest `K'` for which the condition holds at every grid point.
pub fn min_kprime(field: &DerivField, k: f64) -> Result<f64> {
    check_k(k)?;
    if field.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(field
        .dz
        .par_iter()
        .zip(&field.dzbar)
        .map(|(&a, &b)| {
            let d = dfield_norms(a, b);
            (d.norm * d.norm - k * d.jac).max(0.0)
        })
        .reduce(|| 0.0, f64::max))
}

/// Share of grid points with `J_f <= 0`.
pub fn nonpositive_jacobian_fraction(field: &DerivField) -> Result<f64> {
    if field.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let bad = field
        .dz
        .iter()
        .zip(&field.dzbar)
        .filter(|(a, b)| dfield_norms(**a, **b).jac <= 0.0)
        .count();
    Ok(bad as f64 / field.len() as f64)
}

/// Largest `|z|` on the grid.
pub fn grid_radius(field: &DerivField) -> f64 {
    field.points.iter().map(|p| p.r()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    EllipticCandidate,
    NonEllipticTrend,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KPrimeEntry {
    #[serde(rename = "K")]
    pub k: f64,
    pub r_max: f64,
    pub min_kprime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipticReport {
    pub k_values: Vec<f64>,
    pub entries: Vec<KPrimeEntry>,
    pub nonpositive_jacobian_fraction: f64,
    pub verdict: Verdict,
}

impl EllipticReport {
    /// `min_kprime` values for one `K`, in increasing `r_max`.
    pub fn series(&self, k: f64) -> Vec<f64> {
        self.entries.iter().filter(|e| e.k == k).map(|e| e.min_kprime).collect()
    }
}

fn grows(s: &[f64]) -> bool {
    let m = s.len();
    let monotone = s.windows(2).all(|w| w[1] >= w[0]);
    let (prev, last) = (s[m - 2], s[m - 1]);
    monotone && last > 0.0 && (prev == 0.0 || last / prev >= GROWTH_RATIO)
}

fn stable(s: &[f64]) -> bool {
    let m = s.len();
    let (prev, last) = (s[m - 2], s[m - 1]);
    let scale = prev.abs().max(last.abs());
    scale == 0.0 || (last - prev).abs() < STABLE_CHANGE * scale
}

/// Trend of `min_kprime` across fields sampled out to increasing radii.
pub fn ellipticity_report(fields: &[DerivField], k_list: &[f64]) -> Result<EllipticReport> {
    if fields.len() < 3 {
        return Err(Error::InsufficientCutoffs {
            needed: 3,
            got: fields.len(),
        });
    }
    if k_list.is_empty() {
        return domain("K list is empty");
    }
    for &k in k_list {
        check_k(k)?;
    }
    let radii: Vec<f64> = fields.iter().map(grid_radius).collect();
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return domain("fields must reach strictly increasing radii");
    }
    let mut entries = Vec::new();
    let mut series = Vec::new();
    for &k in k_list {
        let s = fields.iter().map(|f| min_kprime(f, k)).collect::<Result<Vec<_>>>()?;
        for (&r_max, &v) in radii.iter().zip(&s) {
            entries.push(KPrimeEntry {
                k,
                r_max,
                min_kprime: v,
            });
        }
        series.push(s);
    }
    let verdict = if series.iter().all(|s| grows(s)) {
        Verdict::NonEllipticTrend
    } else if series.iter().any(|s| stable(s)) {
        Verdict::EllipticCandidate
    } else {
        Verdict::Inconclusive
    };
    let last = fields.last().expect("at least three fields");
    Ok(EllipticReport {
        k_values: k_list.to_vec(),
        entries,
        nonpositive_jacobian_fraction: nonpositive_jacobian_fraction(last)?,
        verdict,
    })
}

/// Checks `l(D)^p >= ||D||^p / (2^{p-1} K^p) - (sqrt(K') / K)^p` at every point
/// where `||D||^2 <= K J + K'` holds; returns the worst margin.
pub fn lower_distortion_margin(field: &DerivField, k: f64, kprime: f64, p: f64) -> Result<f64> {
    check_k(k)?;
    if field.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut worst = f64::INFINITY;
    for (&a, &b) in field.dz.iter().zip(&field.dzbar) {
        let d = dfield_norms(a, b);
        if d.norm * d.norm > k * d.jac + kprime {
            continue;
        }
        let rhs = d.norm.powf(p) / (2f64.powf(p - 1.0) * k.powf(p)) - (kprime.sqrt() / k).powf(p);
        worst = worst.min(d.l.powf(p) - rhs);
    }
    Ok(worst)
}
