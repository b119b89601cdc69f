//! Circle norms, integral means, Hardy and Bergman type norms, and growth probes.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::derivs::derivs_circle;
use crate::derivs::{dtheta_f, dz_dzbar_f, j1, j2};
use crate::error::{domain, Error, Result};
use crate::kernel::{
    node_angle, poisson_circle, poisson_integral, AlphaParam, BoundaryData, ComplexPoint, QuadSpec, C64,
};

/// Exponent `p` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PNorm {
    Finite(f64),
    Infinity,
}

impl PNorm {
    pub fn finite(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return domain(format!("p must be a finite number >= 1, got {p}"));
        }
        Ok(PNorm::Finite(p))
    }

    pub fn value(&self) -> f64 {
        match self {
            PNorm::Finite(p) => *p,
            PNorm::Infinity => f64::INFINITY,
        }
    }
}

impl fmt::Display for PNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PNorm::Finite(p) => write!(f, "{p}"),
            PNorm::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for PNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "Inf" | "infinity" | "∞" => Ok(PNorm::Infinity),
            t => {
                let p: f64 = t
                    .parse()
                    .map_err(|_| Error::Domain(format!("cannot parse p = {t:?}")))?;
                PNorm::finite(p)
            }
        }
    }
}

impl Serialize for PNorm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PNorm::Finite(p) => s.serialize_f64(*p),
            PNorm::Infinity => s.serialize_str("inf"),
        }
    }
}

/// Confidence attached to a truncated norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormStatus {
    Converged,
    LowerBoundOnly,
    Diverging,
}

/// A norm value with the grid it was computed on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub p: PNorm,
    pub r_max: f64,
    pub n_nodes: usize,
    pub status: NormStatus,
}

/// Anything that can be evaluated in the open disk.
pub trait DiskField: Sync {
    fn eval(&self, z: C64) -> Result<C64>;

    /// Values at `r e^{2 pi i k / n}`, `k = 0..n`.
    fn circle(&self, r: f64, n: usize) -> Result<Vec<C64>> {
        (0..n)
            .into_par_iter()
            .map(|k| self.eval(C64::from_polar(r, node_angle(k, n))))
            .collect()
    }
}

/// A closure as a disk field.
pub struct FnField<F>(pub F);

impl<F> DiskField for FnField<F>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    fn eval(&self, z: C64) -> Result<C64> {
        (self.0)(z)
    }
}

/// Which function of a mapping is being measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    F,
    Dtheta,
    Dr,
    Dz,
    Dzbar,
}

impl Quantity {
    pub const ALL: [Quantity; 5] = [
        Quantity::F,
        Quantity::Dtheta,
        Quantity::Dr,
        Quantity::Dz,
        Quantity::Dzbar,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::F => "f",
            Quantity::Dtheta => "dtheta",
            Quantity::Dr => "dr",
            Quantity::Dz => "dz",
            Quantity::Dzbar => "dzbar",
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .iter()
            .copied()
            .find(|q| q.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown quantity {s:?}")))
    }
}

/// `K_alpha[F]` or one of its derivatives, evaluated by quadrature.
pub struct KernelField<'a> {
    pub alpha: AlphaParam,
    pub boundary: &'a BoundaryData,
    pub quad: QuadSpec,
    pub quantity: Quantity,
}

impl DiskField for KernelField<'_> {
    fn eval(&self, z: C64) -> Result<C64> {
        let (a, f, q) = (&self.alpha, self.boundary, &self.quad);
        let p = ComplexPoint::from_complex(z)?;
        match self.quantity {
            Quantity::F => Ok(poisson_integral(a, f, p, q)?.value),
            Quantity::Dtheta => dtheta_f(a, f, p, q),
            Quantity::Dr if p.r() == 0.0 => {
                let (dz, dzbar, _) = dz_dzbar_f(a, f, p, q)?;
                Ok(dz + dzbar)
            }
            Quantity::Dr => Ok((j1(a, f, p, q)? + j2(a, f, p, q)?) / p.r()),
            Quantity::Dz => Ok(dz_dzbar_f(a, f, p, q)?.0),
            Quantity::Dzbar => Ok(dz_dzbar_f(a, f, p, q)?.1),
        }
    }

    fn circle(&self, r: f64, n: usize) -> Result<Vec<C64>> {
        if r == 0.0 {
            return Ok(vec![self.eval(C64::new(0.0, 0.0))?; n]);
        }
        if self.quantity == Quantity::F && n == self.boundary.len() {
            return poisson_circle(&self.alpha, self.boundary, r, &self.quad);
        }
        if n != self.boundary.len() {
            return (0..n)
                .into_par_iter()
                .map(|k| self.eval(C64::from_polar(r, node_angle(k, n))))
                .collect();
        }
        let c = derivs_circle(&self.alpha, self.boundary, r, &self.quad)?;
        Ok(match self.quantity {
            Quantity::F => c.f,
            Quantity::Dtheta => c.dtheta,
            Quantity::Dr => c.dr(),
            Quantity::Dz => c.dz(),
            Quantity::Dzbar => c.dzbar(),
        })
    }
}

/// `((1/N) sum |v_j|^p)^(1/p)`, or `max |v_j|` for `p = inf`.
pub fn integral_mean(values: &[C64], p: PNorm) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    match p {
        PNorm::Infinity => values.iter().map(|v| v.norm()).fold(0.0, f64::max),
        PNorm::Finite(p) => {
            let s: f64 = values.iter().map(|v| v.norm().powf(p)).sum();
            (s / values.len() as f64).powf(1.0 / p)
        }
    }
}

/// `L^p` norm on the circle with normalized measure.
pub fn lp_norm_circle(g: &BoundaryData, p: PNorm) -> f64 {
    integral_mean(g.samples(), p)
}

/// `(|dz| + |dzbar|, ||dz| - |dzbar||, |dz|^2 - |dzbar|^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DNorms {
    pub norm: f64,
    pub l: f64,
    pub jac: f64,
}

pub fn dfield_norms(dz: C64, dzbar: C64) -> DNorms {
    let (a, b) = (dz.norm(), dzbar.norm());
    DNorms {
        norm: a + b,
        l: (a - b).abs(),
        jac: (a - b) * (a + b),
    }
}

fn means_on(f: &dyn DiskField, radii: &[f64], n: usize, p: PNorm) -> Result<Vec<f64>> {
    radii
        .par_iter()
        .map(|&r| Ok(integral_mean(&f.circle(r, n)?, p)))
        .collect()
}

/// Sup of the integral means over the radial grid of `q`.
pub fn hardy_norm(f: &dyn DiskField, p: PNorm, q: &QuadSpec) -> Result<NormEstimate> {
    let means = means_on(f, &q.radial_grid, q.angular_nodes, p)?;
    let value = means.iter().copied().fold(0.0, f64::max);
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    let status = if hardy_growth_fires(&q.radial_grid, &means) {
        NormStatus::Diverging
    } else if value - lo <= 1e-12 * value.max(f64::MIN_POSITIVE) {
        NormStatus::Converged
    } else {
        NormStatus::LowerBoundOnly
    };
    Ok(NormEstimate {
        value,
        p,
        r_max: q.r_max,
        n_nodes: q.angular_nodes * q.radial_grid.len(),
        status,
    })
}

/// Monotone growth of the last three means at a rate of at least 1.5 per decade of `1 - r`.
fn hardy_growth_fires(radii: &[f64], means: &[f64]) -> bool {
    let m = means.len();
    if m < 3 {
        return false;
    }
    let (v1, v2, v3) = (means[m - 3], means[m - 2], means[m - 1]);
    if !(v1 > 0.0 && v1 < v2 && v2 < v3) {
        return false;
    }
    let decades = ((1.0 - radii[m - 3]) / (1.0 - radii[m - 1])).log10();
    decades > 0.0 && (v3 / v1).powf(1.0 / decades) >= DIVERGENCE_RATIO
}

/// Truncated Bergman integral `int_{|z| <= R} |f|^p d sigma` on the given radii
/// (which must start at 0 and end at `R`), by trapezoid in `s = -ln(1 - r)`.
fn bergman_power(f: &dyn DiskField, radii: &[f64], n: usize, p: f64) -> Result<f64> {
    let means = means_on(f, radii, n, PNorm::Finite(p))?;
    let s: Vec<f64> = radii.iter().map(|r| -(-r).ln_1p()).collect();
    let g: Vec<f64> = radii
        .iter()
        .zip(&means)
        .map(|(r, m)| 2.0 * r * (1.0 - r) * m.powf(p))
        .collect();
    Ok((1..radii.len())
        .map(|j| 0.5 * (s[j] - s[j - 1]) * (g[j] + g[j - 1]))
        .sum())
}

fn bergman_radii(q: &QuadSpec) -> Vec<f64> {
    let mut r = q.radial_grid.clone();
    if r[0] > 0.0 {
        r.insert(0, 0.0);
    }
    r
}

fn bergman_at(f: &dyn DiskField, p: PNorm, q: &QuadSpec) -> Result<f64> {
    let radii = bergman_radii(q);
    match p {
        PNorm::Infinity => Ok(means_on(f, &radii, q.angular_nodes, p)?.into_iter().fold(0.0, f64::max)),
        PNorm::Finite(p) => Ok(bergman_power(f, &radii, q.angular_nodes, p)?.powf(1.0 / p)),
    }
}

/// Cutoffs `{1 - 100 e, 1 - 10 e, r_max}` with `e = 1 - r_max`, or evenly spaced
/// fractions of `r_max` when those would not be positive.
pub fn nested_cutoffs(r_max: f64) -> Vec<f64> {
    let e = 1.0 - r_max;
    if 1.0 - 100.0 * e > 0.0 {
        vec![1.0 - 100.0 * e, 1.0 - 10.0 * e, r_max]
    } else {
        vec![r_max / 3.0, 2.0 * r_max / 3.0, r_max]
    }
}

/// Truncated Bergman norm on `|z| <= r_max`, with status from nested cutoffs.
pub fn bergman_norm(f: &dyn DiskField, p: PNorm, q: &QuadSpec) -> Result<NormEstimate> {
    let probe = divergence_probe(f, p, &nested_cutoffs(q.r_max), NormKind::Bergman, q)?;
    let value = *probe.values.last().expect("three cutoffs");
    let status = probe.status();
    Ok(NormEstimate {
        value,
        p,
        r_max: q.r_max,
        n_nodes: q.angular_nodes * bergman_radii(q).len(),
        status,
    })
}

/// Ratio across the last cutoff pair that signals divergence.
pub const DIVERGENCE_RATIO: f64 = 1.5;

/// Which truncated norm a probe tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Hardy,
    Bergman,
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hardy" => Ok(NormKind::Hardy),
            "bergman" => Ok(NormKind::Bergman),
            _ => domain(format!("unknown norm kind {s:?}")),
        }
    }
}

/// Truncated norms at increasing cutoffs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub kind: NormKind,
    pub p: PNorm,
    pub cutoffs: Vec<f64>,
    pub values: Vec<f64>,
    /// `beta` in `value ~ A (1 - r)^beta + B` fitted on the last three cutoffs.
    pub exponent: Option<f64>,
    pub diverging: bool,
}

impl GrowthReport {
    pub fn status(&self) -> NormStatus {
        let m = self.values.len();
        let (v1, v2, v3) = (self.values[m - 3], self.values[m - 2], self.values[m - 1]);
        if self.diverging {
            NormStatus::Diverging
        } else if (v3 - v2).abs() <= 1e-2 * v3.abs() && (v3 - v2).abs() <= (v2 - v1).abs() {
            NormStatus::Converged
        } else {
            NormStatus::LowerBoundOnly
        }
    }
}

/// Truncated norm of `f` at each cutoff.
pub fn truncated_norm(f: &dyn DiskField, p: PNorm, cutoff: f64, kind: NormKind, q: &QuadSpec) -> Result<f64> {
    let qc = QuadSpec::new(q.angular_nodes, cutoff, q.radial_grid.len())?;
    match kind {
        NormKind::Hardy => Ok(hardy_norm(f, p, &qc)?.value),
        NormKind::Bergman => bergman_at(f, p, &qc),
    }
}

/// Growth of truncated norms over `cutoffs`; uses the node counts of `q`.
pub fn divergence_probe(
    f: &dyn DiskField,
    p: PNorm,
    cutoffs: &[f64],
    kind: NormKind,
    q: &QuadSpec,
) -> Result<GrowthReport> {
    if cutoffs.len() < 3 {
        return Err(Error::InsufficientCutoffs {
            needed: 3,
            got: cutoffs.len(),
        });
    }
    if cutoffs.windows(2).any(|w| w[1] <= w[0]) || cutoffs[0] <= 0.0 {
        return domain("cutoffs must be positive and strictly increasing");
    }
    let values = cutoffs
        .iter()
        .map(|&c| truncated_norm(f, p, c, kind, q))
        .collect::<Result<Vec<_>>>()?;
    let m = values.len();
    let monotone = values.windows(2).all(|w| w[1] > w[0]);
    let diverging = monotone && values[m - 2] > 0.0 && values[m - 1] / values[m - 2] >= DIVERGENCE_RATIO;
    let eps: Vec<f64> = cutoffs[m - 3..].iter().map(|c| 1.0 - c).collect();
    let exponent = fit_offset_power(&eps, &values[m - 3..]);
    Ok(GrowthReport {
        kind,
        p,
        cutoffs: cutoffs.to_vec(),
        values,
        exponent,
        diverging,
    })
}

/// Fit `v = A e^beta + B` through three points; `None` when the increments
/// change sign or vanish.
pub fn fit_offset_power(eps: &[f64], v: &[f64]) -> Option<f64> {
    let (d1, d2) = (v[1] - v[0], v[2] - v[1]);
    let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if d1.abs() <= 1e-12 * scale || d2.abs() <= 1e-12 * scale {
        return if d1.abs() <= 1e-12 * scale && d2.abs() <= 1e-12 * scale {
            Some(0.0)
        } else {
            None
        };
    }
    let rho = d2 / d1;
    if rho <= 0.0 {
        return None;
    }
    let (l1, l2, l3) = (eps[0].ln(), eps[1].ln(), eps[2].ln());
    // g(beta) = (e3^b - e2^b) / (e2^b - e1^b), decreasing in beta for e1 > e2 > e3
    let g = |b: f64| -> f64 {
        if b.abs() < 1e-9 {
            (l3 - l2) / (l2 - l1)
        } else {
            ((b * l3).exp() - (b * l2).exp()) / ((b * l2).exp() - (b * l1).exp())
        }
    };
    let (mut lo, mut hi) = (-20.0, 20.0);
    if !(g(lo) >= rho && g(hi) <= rho) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Norm report for export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub quantity: String,
    pub alpha: Option<f64>,
    pub p: PNorm,
    pub kind: NormKind,
    pub cutoffs: Vec<f64>,
    pub values: Vec<f64>,
    pub exponent: Option<f64>,
    pub status: NormStatus,
}

impl NormReport {
    pub fn from_probe(quantity: impl Into<String>, alpha: Option<f64>, g: &GrowthReport) -> Self {
        Self {
            quantity: quantity.into(),
            alpha,
            p: g.p,
            kind: g.kind,
            cutoffs: g.cutoffs.clone(),
            values: g.values.clone(),
            exponent: g.exponent,
            status: g.status(),
        }
    }
}
