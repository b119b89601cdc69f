//! Closed-form witness mappings and their boundary data.
//!
//! * The hypergeometric family `f = 2F1(-a/2, n-a/2; n+1; |z|^2) z^n`.
//! * The harmonic extension of a piecewise-linear phase `e^{i phi(theta)}`.
//! * The harmonic lacunary-log series `Im sum z^n / (n log n)`.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::kernel::{node_angle, BoundaryData, C64};
use crate::norms::{DiskField, Quantity};
use crate::specfun::{gamma, gauss_value, hyp2f1, pochhammer, HypParams};

const HYP_TOL: f64 = 1e-15;

/// Default truncation of the log series.
pub const EX43_DEFAULT_TRUNC: usize = 4096;

/// Parameters of the hypergeometric family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ex41Params {
    pub alpha: f64,
    pub n: u32,
}

impl Ex41Params {
    /// Requires `alpha` in `(-1, 0)` and `n >= 1`.
    pub fn new(alpha: f64, n: u32) -> Result<Self> {
        if !(alpha > -1.0 && alpha < 0.0) {
            return domain(format!("alpha must lie in (-1, 0), got {alpha}"));
        }
        Self::family(alpha, n)
    }

    /// Same formulas for any `alpha > -1`; used as a quadrature oracle.
    pub fn family(alpha: f64, n: u32) -> Result<Self> {
        if !(alpha > -1.0) {
            return domain(format!("alpha must exceed -1, got {alpha}"));
        }
        if n == 0 {
            return domain("n must be a positive integer");
        }
        Ok(Self { alpha, n })
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Series coefficient `a_{n,k}` of `|z|^{2k} z^n`.
    pub fn coefficient(&self, k: u32) -> f64 {
        let (a, n) = (self.alpha, self.nf());
        if k <= 20 {
            let kfact: f64 = (1..=k).map(|j| j as f64).product();
            return pochhammer(-a / 2.0, k) * pochhammer(n - a / 2.0, k) / (pochhammer(n + 1.0, k) * kfact);
        }
        // ratio form avoids overflow of the separate factors
        (0..k).fold(1.0, |acc, j| {
            let j = j as f64;
            acc * (-a / 2.0 + j) * (n - a / 2.0 + j) / ((n + 1.0 + j) * (j + 1.0))
        })
    }

    /// `E_2(r) = 2F1(-a/2, n-a/2; n+1; r^2)`.
    pub fn e2(&self, r: f64) -> Result<f64> {
        let (a, n) = (self.alpha, self.nf());
        hyp2f1(HypParams::new(-a / 2.0, n - a / 2.0, n + 1.0, r * r), HYP_TOL)
    }

    /// `E_1(r) = 2F1(1-a/2, n+1-a/2; n+2; r^2)`.
    pub fn e1(&self, r: f64) -> Result<f64> {
        let (a, n) = (self.alpha, self.nf());
        hyp2f1(
            HypParams::new(1.0 - a / 2.0, n + 1.0 - a / 2.0, n + 2.0, r * r),
            HYP_TOL,
        )
    }

    /// Limit of `E_1(r) (1-r^2)^{-alpha}` as `r -> 1` (negative alpha).
    pub fn e1_boundary_limit(&self) -> Result<f64> {
        let (a, n) = (self.alpha, self.nf());
        Ok(gamma(n + 2.0)? * gamma(-a)? / (gamma(1.0 - a / 2.0)? * gamma(n + 1.0 - a / 2.0)?))
    }

    /// Boundary amplitude `G = 2F1(-a/2, n-a/2; n+1; 1)`.
    pub fn boundary_amplitude(&self) -> Result<f64> {
        let (a, n) = (self.alpha, self.nf());
        gauss_value(-a / 2.0, n - a / 2.0, n + 1.0)
    }

    /// `alpha (alpha - 2n) / (2 (n+1))`.
    fn big_a(&self) -> f64 {
        let (a, n) = (self.alpha, self.nf());
        a * (a - 2.0 * n) / (2.0 * (n + 1.0))
    }
}

/// `f(z) = E_2(|z|) z^n` for `|z| <= 1`.
pub fn ex41_f(p: &Ex41Params, z: C64) -> Result<C64> {
    let r = z.norm();
    if r > 1.0 {
        return domain(format!("|z| = {r} exceeds 1"));
    }
    Ok(z.powu(p.n) * p.e2(r)?)
}

/// Exact derivatives of the hypergeometric family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ex41Derivs {
    pub dz: C64,
    pub dzbar: C64,
    pub dr: C64,
}

/// `(dz, dzbar, dr)` at `z`; at the origin the radial direction is taken as `xi = 1`.
pub fn ex41_derivs(p: &Ex41Params, z: C64) -> Result<Ex41Derivs> {
    let r = z.norm();
    if r >= 1.0 {
        return domain(format!("|z| = {r} is not inside the disk"));
    }
    let xi = if r == 0.0 { C64::new(1.0, 0.0) } else { z / r };
    let n = p.n as i32;
    let nf = p.nf();
    let (e1, e2) = (p.e1(r)?, p.e2(r)?);
    let a = p.big_a();
    let rn1 = r.powi(n + 1);
    let rnm1 = r.powi(n - 1);
    Ok(Ex41Derivs {
        dz: xi.powi(n - 1) * (a / 2.0 * rn1 * e1 + nf * rnm1 * e2),
        dzbar: xi.powi(n + 1) * (a / 2.0 * rn1 * e1),
        dr: xi.powi(n) * (a * rn1 * e1 + nf * rnm1 * e2),
    })
}

/// One component of the hypergeometric family as a disk field.
#[derive(Debug, Clone, Copy)]
pub struct Ex41Field {
    pub params: Ex41Params,
    pub quantity: Quantity,
}

impl Ex41Field {
    pub fn new(params: Ex41Params, quantity: Quantity) -> Self {
        Self { params, quantity }
    }

    fn pick(&self, z: C64, d: &Ex41Derivs, f: C64) -> C64 {
        match self.quantity {
            Quantity::F => f,
            Quantity::Dz => d.dz,
            Quantity::Dzbar => d.dzbar,
            Quantity::Dr => d.dr,
            Quantity::Dtheta => C64::new(0.0, 1.0) * (z * d.dz - z.conj() * d.dzbar),
        }
    }
}

impl DiskField for Ex41Field {
    fn eval(&self, z: C64) -> Result<C64> {
        let d = ex41_derivs(&self.params, z)?;
        Ok(self.pick(z, &d, ex41_f(&self.params, z)?))
    }

    /// The radial profile is computed once; only the phases vary.
    fn circle(&self, r: f64, n: usize) -> Result<Vec<C64>> {
        let base = C64::new(r, 0.0);
        let d0 = ex41_derivs(&self.params, base)?;
        let f0 = ex41_f(&self.params, base)?;
        let m = self.params.n as i32;
        let k = match self.quantity {
            Quantity::F | Quantity::Dr | Quantity::Dtheta => m,
            Quantity::Dz => m - 1,
            Quantity::Dzbar => m + 1,
        };
        let v0 = self.pick(base, &d0, f0);
        Ok((0..n)
            .map(|j| v0 * C64::from_polar(1.0, k as f64 * node_angle(j, n)))
            .collect())
    }
}

/// Boundary data `G xi^n` with exact derivative `i n G xi^n`.
pub fn ex41_boundary(p: &Ex41Params, nodes: usize) -> Result<BoundaryData> {
    let g = p.boundary_amplitude()?;
    let n = p.n as f64;
    Ok(
        BoundaryData::from_closed_form(nodes, move |t| C64::from_polar(g, n * t))?
            .with_derivative(move |t| C64::new(0.0, n) * C64::from_polar(g, n * t)),
    )
}

/// Wrap an angle into `[-pi, pi]`.
fn wrap(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// The piecewise-linear phase on `[-pi, pi]`.
pub fn ex42_phi(theta: f64) -> f64 {
    let t = wrap(theta);
    if t < 0.0 {
        1.0 + t * (PI + 1.0) / PI
    } else {
        1.0 + t * (PI - 1.0) / PI
    }
}

/// `phi'`, one-sided from the right at the corners `0` and `pi`.
pub fn ex42_phi_prime(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    // [0, pi) is the right branch, [pi, 2 pi) the left one
    if t < PI {
        (PI - 1.0) / PI
    } else {
        (PI + 1.0) / PI
    }
}

/// `F = e^{i phi(theta)}` with its derivative channel and corner flags.
pub fn ex42_boundary(nodes: usize) -> Result<BoundaryData> {
    Ok(
        BoundaryData::from_closed_form(nodes, |t| C64::from_polar(1.0, ex42_phi(t)))?
            .with_derivative(|t| C64::new(0.0, ex42_phi_prime(t)) * C64::from_polar(1.0, ex42_phi(t)))
            .with_kinks(vec![0.0, PI]),
    )
}

/// A truncated series value with its tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncated<T> {
    pub value: T,
    pub tail_bound: f64,
    /// Tail bound above `1e-8`.
    pub truncation_warning: bool,
}

impl<T> Truncated<T> {
    fn new(value: T, tail_bound: f64) -> Self {
        Self {
            value,
            tail_bound,
            truncation_warning: tail_bound > 1e-8,
        }
    }
}

fn check_ex43(z: C64, n_trunc: usize) -> Result<f64> {
    let r = z.norm();
    if r >= 1.0 {
        return domain(format!("|z| = {r} is not inside the disk"));
    }
    if n_trunc < 2 {
        return domain("truncation must be at least 2");
    }
    Ok(r)
}

/// `Im sum_{n=2}^{N} z^n / (n log n)`.
pub fn ex43_f(z: C64, n_trunc: usize) -> Result<Truncated<f64>> {
    let r = check_ex43(z, n_trunc)?;
    let mut pow = z;
    let mut acc = C64::new(0.0, 0.0);
    for n in 2..=n_trunc {
        pow *= z;
        let nf = n as f64;
        acc += pow / (nf * nf.ln());
    }
    let m = (n_trunc + 1) as f64;
    let tail = r.powf(m) / (m * m.ln() * (1.0 - r));
    Ok(Truncated::new(acc.im, tail))
}

/// Derivatives of the log series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ex43Derivs {
    pub dz: C64,
    pub dzbar: C64,
    pub dr: C64,
    pub dtheta: C64,
}

/// `dz = h'(z)/(2i)` and `dzbar = -conj(h'(z))/(2i)` with `h' = sum z^{n-1}/log n`.
pub fn ex43_derivs(z: C64, n_trunc: usize) -> Result<Truncated<Ex43Derivs>> {
    let r = check_ex43(z, n_trunc)?;
    let mut pow = C64::new(1.0, 0.0);
    let mut hp = C64::new(0.0, 0.0);
    for n in 2..=n_trunc {
        pow *= z;
        hp += pow / (n as f64).ln();
    }
    let two_i = C64::new(0.0, 2.0);
    let dz = hp / two_i;
    let dzbar = -hp.conj() / two_i;
    // r dr = z dz + zbar dzbar, dtheta = i (z dz - zbar dzbar)
    let xi = if r == 0.0 { C64::new(1.0, 0.0) } else { z / r };
    let dr = xi * dz + xi.conj() * dzbar;
    let dtheta = C64::new(0.0, 1.0) * (z * dz - z.conj() * dzbar);
    let m = (n_trunc + 1) as f64;
    let tail = r.powf(m - 1.0) / (2.0 * m.ln() * (1.0 - r));
    Ok(Truncated::new(Ex43Derivs { dz, dzbar, dr, dtheta }, tail))
}

/// Boundary values `sum_{n=2}^{T} sin(n t)/(n log n)` and exact derivative
/// `sum cos(n t)/log n`; requires `T < nodes/2` so the samples are exact.
pub fn ex43_boundary(nodes: usize, n_trunc: usize) -> Result<BoundaryData> {
    if n_trunc < 2 || 2 * n_trunc >= nodes {
        return domain(format!(
            "truncation {n_trunc} must lie in [2, nodes/2) for {nodes} nodes"
        ));
    }
    let mut f = vec![C64::new(0.0, 0.0); nodes];
    let mut d = vec![C64::new(0.0, 0.0); nodes];
    for n in 2..=n_trunc {
        let l = (n as f64).ln();
        f[n] = C64::new(1.0 / (n as f64 * l), 0.0);
        d[n] = C64::new(1.0 / l, 0.0);
    }
    // inverse transform gives sum_n c_n e^{i n theta_j}
    let inv = FftPlanner::new().plan_fft_inverse(nodes);
    inv.process(&mut f);
    inv.process(&mut d);
    let samples = f.iter().map(|c| C64::new(c.im, 0.0)).collect();
    let deriv = d.iter().map(|c| C64::new(c.re, 0.0)).collect();
    BoundaryData::from_samples(samples)?.with_derivative_samples(deriv)
}

/// Boundary functions used by the inequality certification.
pub fn bundled_boundaries(nodes: usize) -> Result<Vec<(String, BoundaryData)>> {
    let mode = |k: i32| {
        BoundaryData::from_closed_form(nodes, move |t| C64::from_polar(1.0, k as f64 * t))
            .map(|b| b.with_derivative(move |t| C64::new(0.0, k as f64) * C64::from_polar(1.0, k as f64 * t)))
    };
    let ex41 = Ex41Params::new(-0.5, 1)?;
    Ok(vec![
        (
            "constant".to_string(),
            BoundaryData::from_closed_form(nodes, |_| C64::new(1.0, 0.0))?.with_derivative(|_| C64::new(0.0, 0.0)),
        ),
        ("mode1".to_string(), mode(1)?),
        ("mode3".to_string(), mode(3)?),
        ("hypergeometric".to_string(), ex41_boundary(&ex41, nodes)?),
        ("piecewise_phase".to_string(), ex42_boundary(nodes)?),
        (
            "log_series".to_string(),
            ex43_boundary(nodes, (nodes / 2 - 1).min(EX43_DEFAULT_TRUNC))?,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(C64) -> C64>(f: F, z: C64, h: f64) -> (C64, C64) {
        let dx = (f(z + h) - f(z - h)) / (2.0 * h);
        let dy = (f(z + C64::new(0.0, h)) - f(z - C64::new(0.0, h))) / (2.0 * h);
        let i = C64::new(0.0, 1.0);
        ((dx - i * dy) / 2.0, (dx + i * dy) / 2.0)
    }

    #[test]
    fn params_validation() {
        assert!(Ex41Params::new(-0.5, 1).is_ok());
        assert!(Ex41Params::new(0.5, 1).is_err());
        assert!(Ex41Params::new(-1.0, 1).is_err());
        assert!(Ex41Params::new(-0.5, 0).is_err());
        assert!(Ex41Params::family(0.5, 2).is_ok());
    }

    #[test]
    fn coefficients_and_partial_sums() {
        let p = Ex41Params::new(-0.5, 1).unwrap();
        assert_eq!(p.coefficient(0), 1.0);
        assert!((p.coefficient(1) - 0.15625).abs() < 1e-15);
        let r: f64 = 0.7;
        let s: f64 = (0..400).map(|k| p.coefficient(k) * r.powi(2 * k as i32)).sum();
        assert!((s - p.e2(r).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn f_at_origin_and_boundary() {
        let p = Ex41Params::new(-0.5, 2).unwrap();
        assert_eq!(ex41_f(&p, C64::new(0.0, 0.0)).unwrap(), C64::new(0.0, 0.0));
        let xi = C64::from_polar(1.0, 0.8);
        let g = p.boundary_amplitude().unwrap();
        assert!((ex41_f(&p, xi).unwrap() - g * xi * xi).norm() < 1e-12);
    }

    #[test]
    fn derivs_at_origin() {
        let p = Ex41Params::new(-0.5, 1).unwrap();
        let d = ex41_derivs(&p, C64::new(0.0, 0.0)).unwrap();
        assert_eq!(d.dzbar, C64::new(0.0, 0.0));
        assert!((d.dz - 1.0).norm() < 1e-15);
    }

    #[test]
    fn derivs_match_finite_differences() {
        for &(al, n) in &[(-0.5, 1), (-0.9, 2), (-0.1, 3)] {
            let p = Ex41Params::new(al, n).unwrap();
            for &z in &[
                C64::new(0.5, 0.0),
                C64::from_polar(0.5, 2.0),
                C64::from_polar(0.8, -1.1),
            ] {
                let f = |w: C64| ex41_f(&p, w).unwrap();
                let (fz, fzb) = fd(f, z, 1e-5);
                let d = ex41_derivs(&p, z).unwrap();
                assert!((d.dz - fz).norm() < 1e-7, "dz {al} {n}");
                assert!((d.dzbar - fzb).norm() < 1e-7, "dzbar {al} {n}");
                let r = z.norm();
                let xi = z / r;
                let h = 1e-5;
                let dr = (f(xi * (r + h)) - f(xi * (r - h))) / (2.0 * h);
                assert!((d.dr - dr).norm() < 1e-7, "dr {al} {n}");
            }
        }
    }

    #[test]
    fn e1_scaled_limit() {
        let p = Ex41Params::new(-0.5, 1).unwrap();
        let lim = p.e1_boundary_limit().unwrap();
        let mut prev = f64::INFINITY;
        for k in 3..=7 {
            let r = 1.0 - 10f64.powi(-k);
            let scaled = p.e1(r).unwrap() * (1.0 - r * r).powf(-p.alpha);
            let err = (scaled - lim).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev / lim < 1e-3);
    }

    #[test]
    fn e2_bounded_by_boundary_amplitude() {
        for &(al, n) in &[(-0.9, 1), (-0.5, 2), (-0.1, 3)] {
            let p = Ex41Params::new(al, n).unwrap();
            let g = p.boundary_amplitude().unwrap();
            for k in 0..=200 {
                let r = 1.0 - (1e-7f64).powf(k as f64 / 200.0);
                let e = p.e2(r).unwrap();
                assert!(e > 0.0 && e <= g * (1.0 + 1e-12), "r {r}: {e} > {g}");
            }
        }
    }

    #[test]
    fn ex42_phase() {
        assert!((ex42_phi(0.0) - 1.0).abs() < 1e-15);
        assert!((ex42_phi(PI) - PI).abs() < 1e-15);
        assert!((ex42_phi(-PI + 1e-15) + PI).abs() < 1e-12);
        let b = ex42_boundary(1024).unwrap();
        assert!(b.samples().iter().all(|s| (s.norm() - 1.0).abs() < 1e-15));
        let d = b.derivative_samples(false).unwrap();
        assert_eq!(d.flagged_nodes, vec![0, 512]);
        let sup = d.samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((sup - (PI + 1.0) / PI).abs() < 1e-14);
        let l1 = d.samples.iter().map(|v| v.norm()).sum::<f64>() / 1024.0;
        assert!((l1 - 1.0).abs() < 1e-12);
        for (j, v) in d.samples.iter().enumerate() {
            let m = v.norm();
            if d.flagged_nodes.contains(&j) {
                // mean of the one-sided slopes
                assert!((m - 1.0).abs() < 1e-9);
            } else {
                assert!((m - (PI + 1.0) / PI).abs() < 1e-14 || (m - (PI - 1.0) / PI).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ex42_closed_form_continuity() {
        let f = |t: f64| C64::from_polar(1.0, ex42_phi(t));
        assert!((f(PI) - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((f(-PI) - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((f(1e-12) - f(-1e-12)).norm() < 1e-11);
    }

    #[test]
    fn ex43_basics() {
        let zero = C64::new(0.0, 0.0);
        assert_eq!(ex43_f(zero, 50).unwrap().value, 0.0);
        let d = ex43_derivs(zero, 50).unwrap().value;
        assert_eq!(d.dz, zero);
        assert_eq!(d.dzbar, zero);
        let z = C64::new(0.5, 0.0);
        let a = ex43_f(z, 200).unwrap().value;
        let b = ex43_f(z, 400).unwrap().value;
        assert!((a - b).abs() < 1e-10);
        let z = C64::from_polar(0.99, 0.3);
        let t = ex43_f(z, 100).unwrap();
        assert!(t.truncation_warning);
    }

    #[test]
    fn ex43_derivatives() {
        for &z in &[
            C64::from_polar(0.5, 0.4),
            C64::from_polar(0.9, -2.0),
            C64::from_polar(0.97, 0.0),
        ] {
            let d = ex43_derivs(z, 4000).unwrap().value;
            assert!((d.dz.norm() - d.dzbar.norm()).abs() < 1e-12);
            let f = |w: C64| C64::new(ex43_f(w, 4000).unwrap().value, 0.0);
            let (fz, fzb) = fd(f, z, 1e-6);
            assert!((fz - d.dz).norm() < 1e-6 * (1.0 + d.dz.norm()));
            assert!((fzb - d.dzbar).norm() < 1e-6 * (1.0 + d.dz.norm()));
        }
        // |dz| grows towards the boundary along the positive axis
        let g: Vec<f64> = [0.9, 0.99, 0.999]
            .iter()
            .map(|&r| ex43_derivs(C64::new(r, 0.0), 65536).unwrap().value.dz.norm())
            .collect();
        assert!(g[0] < g[1] && g[1] < g[2]);
    }

    #[test]
    fn ex43_boundary_matches_direct_sum() {
        let b = ex43_boundary(256, 100).unwrap();
        let d = b.derivative_samples(false).unwrap();
        for j in [0usize, 7, 100, 255] {
            let t = b.theta(j);
            let f: f64 = (2..=100)
                .map(|n| (n as f64 * t).sin() / (n as f64 * (n as f64).ln()))
                .sum();
            let fd: f64 = (2..=100).map(|n| (n as f64 * t).cos() / (n as f64).ln()).sum();
            assert!((b.samples()[j].re - f).abs() < 1e-12);
            assert!((d.samples[j].re - fd).abs() < 1e-11);
        }
        assert!(ex43_boundary(256, 128).is_err());
    }

    #[test]
    fn bundle_is_complete() {
        let b = bundled_boundaries(1024).unwrap();
        assert_eq!(b.len(), 6);
        assert!(b.iter().all(|(_, f)| f.has_derivative()));
    }

    #[test]
    fn ex41_field_circle_matches_pointwise() {
        let p = Ex41Params::new(-0.5, 2).unwrap();
        for q in Quantity::ALL {
            let f = Ex41Field::new(p, q);
            let fast = f.circle(0.8, 32).unwrap();
            for (j, v) in fast.iter().enumerate() {
                let z = C64::from_polar(0.8, node_angle(j, 32));
                assert!((v - f.eval(z).unwrap()).norm() < 1e-13, "{q:?} {j}");
            }
        }
    }
}
