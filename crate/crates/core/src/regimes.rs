//! Parameter-regime classification and explicit-constant inequality checks.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::derivs::derivs_circle;
use crate::error::{domain, Result};
use crate::examples::bundled_boundaries;
use crate::kernel::{dist2, AlphaParam, BoundaryData, QuadSpec};
use crate::norms::{integral_mean, PNorm};
use crate::specfun::gamma;

/// Additive slack on certified inequalities.
pub const CERT_SLACK: f64 = 1e-8;

/// Slack on the derivative Hardy bound.
pub const EQ37_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeLabel {
    Pi1,
    Pi2,
    Pi3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    HardyAllPartialsBounded,
    BergmanBounded,
    CounterexampleExistsHardy,
    CounterexampleExistsBergman,
    EllipticHypothesisRescues,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeClass {
    pub label: RegimeLabel,
    pub alpha: f64,
    pub p: PNorm,
    pub predictions: Vec<Prediction>,
}

/// Which of the three regions `(alpha, p)` falls in.
pub fn classify(alpha: f64, p: PNorm) -> Result<RegimeClass> {
    if !(alpha > -1.0) || !alpha.is_finite() {
        return domain(format!("alpha must be finite and > -1, got {alpha}"));
    }
    if let PNorm::Finite(v) = p {
        PNorm::finite(v)?;
    }
    use Prediction::*;
    let label = if alpha > 0.0 {
        RegimeLabel::Pi1
    } else if alpha == 0.0 {
        match p {
            PNorm::Infinity => RegimeLabel::Pi3,
            PNorm::Finite(1.0) => RegimeLabel::Pi2,
            PNorm::Finite(_) => RegimeLabel::Pi1,
        }
    } else {
        match p {
            PNorm::Infinity => RegimeLabel::Pi3,
            PNorm::Finite(v) if v < -1.0 / alpha => RegimeLabel::Pi2,
            PNorm::Finite(_) => RegimeLabel::Pi3,
        }
    };
    let predictions = match label {
        RegimeLabel::Pi1 => vec![HardyAllPartialsBounded],
        RegimeLabel::Pi2 => vec![BergmanBounded, CounterexampleExistsHardy, EllipticHypothesisRescues],
        RegimeLabel::Pi3 => vec![
            CounterexampleExistsHardy,
            CounterexampleExistsBergman,
            EllipticHypothesisRescues,
        ],
    };
    Ok(RegimeClass {
        label,
        alpha,
        p,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Param {
    Num(f64),
    Text(String),
}

/// One checked inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub check: String,
    pub params: BTreeMap<String, Param>,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn cert(check: &str, params: &[(&str, Param)], lhs: f64, rhs: f64, slack: f64) -> Certificate {
    Certificate {
        check: check.to_string(),
        params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        lhs,
        rhs,
        holds: lhs <= rhs + slack,
    }
}

fn circle_mean<W: Fn(f64) -> f64>(n: usize, w: W) -> f64 {
    (0..n).map(|j| w(2.0 * PI * j as f64 / n as f64)).sum::<f64>() / n as f64
}

fn check_r(r: f64, lo: f64) -> Result<()> {
    if !(lo..1.0).contains(&r) {
        return domain(format!("r must lie in [{lo}, 1), got {r}"));
    }
    Ok(())
}

/// Mean of `(1-r^2)^alpha / |1 - r e^{it}|^{alpha+1}` against `Gamma(alpha)/Gamma((alpha+1)/2)^2`.
pub fn check_lemma_i(alpha: f64, r: f64, q: &QuadSpec) -> Result<Certificate> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return domain(format!("alpha must be finite and > 0, got {alpha}"));
    }
    check_r(r, 0.0)?;
    let c = (1.0 - r * r).powf(alpha);
    let lhs = circle_mean(q.angular_nodes, |t| c * dist2(r, t).powf(-(alpha + 1.0) / 2.0));
    let rhs = gamma(alpha)? / gamma((alpha + 1.0) / 2.0)?.powi(2);
    Ok(cert(
        "kernel_mean_bound",
        &[("alpha", Param::Num(alpha)), ("r", Param::Num(r))],
        lhs,
        rhs,
        CERT_SLACK,
    ))
}

/// `int_0^{2pi} |1 - r e^{it}|^{-(alpha+1)} dt` for `alpha in (-1, 0)`, `r in [1/2, 1)`.
pub fn check_lemma_32(alpha: f64, r: f64, q: &QuadSpec) -> Result<Certificate> {
    if !(alpha > -1.0 && alpha < 0.0) {
        return domain(format!("alpha must lie in (-1, 0), got {alpha}"));
    }
    check_r(r, 0.5)?;
    let lhs = 2.0 * PI * circle_mean(q.angular_nodes, |t| dist2(r, t).powf(-(alpha + 1.0) / 2.0));
    let rhs =
        3f64.powf((alpha + 1.0) / 2.0) / 2f64.powf(alpha - 1.0) * gamma(-alpha)? * gamma(0.5)? / gamma(0.5 - alpha)?;
    Ok(cert(
        "negative_alpha_circle_bound",
        &[("alpha", Param::Num(alpha)), ("r", Param::Num(r))],
        lhs,
        rhs,
        CERT_SLACK,
    ))
}

/// `sup_r M_p(r, d_theta f) / ||F'||_p <= 1` over the radial grid of `q`.
pub fn check_eq_3_7(a: &AlphaParam, f: &BoundaryData, p: f64, q: &QuadSpec) -> Result<Certificate> {
    let pn = PNorm::finite(p)?;
    let fdot = &f.derivative_samples(q.spectral_fallback)?.samples;
    let denom = integral_mean(fdot, pn);
    let ratios = q
        .radial_grid
        .par_iter()
        .map(|&r| Ok(integral_mean(&derivs_circle(a, f, r, q)?.dtheta, pn)))
        .collect::<Result<Vec<_>>>()?;
    let num = ratios.into_iter().fold(0.0, f64::max);
    let ratio = if denom == 0.0 { 0.0 } else { num / denom };
    Ok(cert(
        "dtheta_hardy_bound",
        &[("alpha", Param::Num(a.alpha())), ("p", Param::Num(p))],
        ratio,
        1.0,
        EQ37_SLACK,
    ))
}

/// `(1-r^2)^alpha int_0^{2pi} r |sin t| / |1 - r e^{it}|^{alpha+2} dt` in closed form.
pub fn b_alpha_1(alpha: f64, r: f64) -> Result<f64> {
    if !(alpha > -1.0) {
        return domain(format!("alpha must be > -1, got {alpha}"));
    }
    check_r(r, 0.0)?;
    Ok(if alpha == 0.0 {
        2.0 * ((1.0 + r) / (1.0 - r)).ln()
    } else {
        2.0 / alpha * ((1.0 + r).powf(alpha) - (1.0 - r).powf(alpha))
    })
}

/// The same quantity by composite Simpson on `[0, pi]` with `panels` (even) panels,
/// using the symmetry `t -> -t`.
pub fn b_alpha_1_quadrature(alpha: f64, r: f64, panels: usize) -> Result<f64> {
    if !(alpha > -1.0) {
        return domain(format!("alpha must be > -1, got {alpha}"));
    }
    check_r(r, 0.0)?;
    if panels < 2 || !panels.is_multiple_of(2) {
        return domain(format!("Simpson needs an even panel count, got {panels}"));
    }
    let h = PI / panels as f64;
    let g = |t: f64| r * t.sin() * dist2(r, t).powf(-(alpha + 2.0) / 2.0);
    let inner: f64 = (1..panels)
        .map(|j| if j % 2 == 1 { 4.0 } else { 2.0 } * g(j as f64 * h))
        .sum();
    let half = h / 3.0 * (g(0.0) + inner + g(PI));
    Ok((1.0 - r * r).powf(alpha) * 2.0 * half)
}

/// Closed form against quadrature at `r in {0.25, 0.5, 0.9}`.
pub fn certify_b_alpha_1(alphas: &[f64], panels: usize) -> Result<Vec<Certificate>> {
    let mut out = Vec::new();
    for &a in alphas {
        for r in [0.25, 0.5, 0.9] {
            let exact = b_alpha_1(a, r)?;
            let quad = b_alpha_1_quadrature(a, r, panels)?;
            out.push(cert(
                "radial_weight_closed_form",
                &[("alpha", Param::Num(a)), ("r", Param::Num(r))],
                ((quad - exact) / exact).abs(),
                1e-6,
                0.0,
            ));
        }
    }
    Ok(out)
}

/// Kernel-mean bound over `alpha in {0.25, 0.5, 1, 2, 5}`, `r in {0, 0.1, ..., 0.9, 0.99}`.
pub fn certify_lemma_i_grid(q: &QuadSpec) -> Result<Vec<Certificate>> {
    let mut radii: Vec<f64> = (0..10).map(|k| k as f64 / 10.0).collect();
    radii.push(0.99);
    let cases: Vec<(f64, f64)> = [0.25, 0.5, 1.0, 2.0, 5.0]
        .iter()
        .flat_map(|&a| radii.iter().map(move |&r| (a, r)))
        .collect();
    cases.par_iter().map(|&(a, r)| check_lemma_i(a, r, q)).collect()
}

/// Negative-alpha bound over `alpha in {-0.9, -0.5, -0.1}`, `r in {0.5, 0.75, 0.9, 0.99}`.
pub fn certify_lemma_32_grid(q: &QuadSpec) -> Result<Vec<Certificate>> {
    let cases: Vec<(f64, f64)> = [-0.9, -0.5, -0.1]
        .iter()
        .flat_map(|&a| [0.5, 0.75, 0.9, 0.99].into_iter().map(move |r| (a, r)))
        .collect();
    cases.par_iter().map(|&(a, r)| check_lemma_32(a, r, q)).collect()
}

/// Derivative Hardy bound for every bundled boundary, `p in {1, 2, 4}`, `alpha in {-0.5, 0, 1}`.
pub fn certify_eq_3_7_grid(q: &QuadSpec) -> Result<Vec<Certificate>> {
    let bundle = bundled_boundaries(q.angular_nodes)?;
    let mut cases = Vec::new();
    for (name, f) in &bundle {
        for alpha in [-0.5, 0.0, 1.0] {
            for p in [1.0, 2.0, 4.0] {
                cases.push((name.as_str(), f, alpha, p));
            }
        }
    }
    cases
        .par_iter()
        .map(|&(name, f, alpha, p)| {
            let mut c = check_eq_3_7(&AlphaParam::new(alpha)?, f, p, q)?;
            c.params.insert("boundary".into(), Param::Text(name.to_string()));
            Ok(c)
        })
        .collect()
}

/// Angular nodes used by the default certification run.
pub const CERT_NODES: usize = 16384;

/// All certification grids at `CERT_NODES` angular nodes.
pub fn certify_all() -> Result<Vec<Certificate>> {
    let q = QuadSpec::new(CERT_NODES, 0.999, 64)?;
    let mut out = certify_lemma_i_grid(&q)?;
    out.extend(certify_lemma_32_grid(&q)?);
    out.extend(certify_eq_3_7_grid(&q)?);
    Ok(out)
}
