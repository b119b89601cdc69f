//! Real-valued special functions: Gamma, Pochhammer symbols and the Gauss
//! hypergeometric function.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

/// Default term cap for hypergeometric series.
pub const HYP_MAX_TERMS: usize = 10_000;

/// Above this argument the Euler transformation is used when `c - a - b < 0`.
pub const EULER_THRESHOLD: f64 = 0.95;

/// Above this argument the `1 - x` connection formula replaces the plain series
/// when `c - a - b` is far enough from an integer.
const CONNECTION_THRESHOLD: f64 = 0.8;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_P: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// `sin(pi x)` with exact argument reduction.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    if r.abs() == 0.5 {
        return r.signum();
    }
    (PI * r).sin()
}

fn lanczos(x: f64) -> f64 {
    // valid for x >= 0.5
    let x = x - 1.0;
    let mut acc = LANCZOS_P[0];
    for (i, p) in LANCZOS_P.iter().enumerate().skip(1) {
        acc += p / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * acc * ((x + 0.5) * t.ln() - t).exp()
}

/// Gamma function. Fails with [`Error::Pole`] at nonpositive integers.
pub fn gamma(x: f64) -> Result<f64> {
    if x.is_nan() {
        return domain("gamma of NaN");
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    if x == x.round() && (1.0..=25.0).contains(&x) {
        let mut f = 1.0;
        for k in 2..(x as u32) {
            f *= k as f64;
        }
        return Ok(f);
    }
    if x < 0.5 {
        Ok(PI / (sin_pi(x) * lanczos(1.0 - x)))
    } else {
        Ok(lanczos(x))
    }
}

/// Reciprocal Gamma function, equal to zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    match gamma(x) {
        Ok(g) => 1.0 / g,
        Err(_) => 0.0,
    }
}

/// Rising factorial `(a)_k = a (a+1) ... (a+k-1)`.
pub fn pochhammer(a: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (a + j as f64))
}

/// Parameters of `2F1(a, b; c; x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x: f64,
}

impl HypParams {
    pub fn new(a: f64, b: f64, c: f64, x: f64) -> Self {
        Self { a, b, c, x }
    }

    fn check(&self) -> Result<()> {
        let HypParams { a, b, c, x } = *self;
        if [a, b, c, x].iter().any(|v| !v.is_finite()) {
            return domain("hypergeometric parameters must be finite");
        }
        if is_nonpositive_integer(c) {
            return domain(format!("c = {c} is a nonpositive integer"));
        }
        if x.abs() > 1.0 {
            return domain(format!("|x| = {} exceeds 1", x.abs()));
        }
        if x.abs() == 1.0 && c - a - b <= 0.0 && !self.terminates() {
            return domain(format!("series diverges at |x| = 1 with c - a - b = {}", c - a - b));
        }
        Ok(())
    }

    fn terminates(&self) -> bool {
        is_nonpositive_integer(self.a) || is_nonpositive_integer(self.b)
    }
}

/// Direct summation of the hypergeometric series, no transformations.
///
/// Stops once three consecutive terms fall below `tol` relative to the partial
/// sum, or when the series terminates.
pub fn hyp2f1_series(p: HypParams, tol: f64) -> Result<f64> {
    hyp2f1_series_capped(p, tol, HYP_MAX_TERMS)
}

/// [`hyp2f1_series`] with an explicit term cap.
pub fn hyp2f1_series_capped(p: HypParams, tol: f64, max_terms: usize) -> Result<f64> {
    p.check()?;
    let HypParams { a, b, c, x } = p;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut small = 0;
    for k in 0..max_terms {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * x;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        if term.abs() < tol * sum.abs() {
            small += 1;
            if small == 3 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::NonConvergence {
        terms: max_terms,
        last: (term / sum).abs(),
    })
}

/// Euler transformation: `(1-x)^(c-a-b) 2F1(c-a, c-b; c; x)`.
pub fn hyp2f1_euler(p: HypParams, tol: f64) -> Result<f64> {
    p.check()?;
    let HypParams { a, b, c, x } = p;
    if x >= 1.0 {
        return domain("Euler transformation needs x < 1");
    }
    let inner = eval(HypParams::new(c - a, c - b, c, x), tol)?;
    Ok((1.0 - x).powf(c - a - b) * inner)
}

/// Gauss hypergeometric function `2F1(a, b; c; x)` for `x` in `[-1, 1]`.
///
/// Uses the Euler transformation when `c - a - b < 0` and `x > 0.95`, and the
/// `1 - x` connection formula close to `x = 1` when it is well conditioned.
pub fn hyp2f1(p: HypParams, tol: f64) -> Result<f64> {
    p.check()?;
    let HypParams { a, b, c, x } = p;
    if x == 1.0 && !p.terminates() {
        return gauss_value(a, b, c);
    }
    if c - a - b < 0.0 && x > EULER_THRESHOLD && !p.terminates() {
        return hyp2f1_euler(p, tol);
    }
    eval(p, tol)
}

fn eval(p: HypParams, tol: f64) -> Result<f64> {
    let HypParams { a, b, c, x } = p;
    if p.terminates() {
        return hyp2f1_series(p, tol);
    }
    if x < -0.5 {
        // Pfaff: (1-x)^(-a) 2F1(a, c-b; c; x/(x-1))
        let y = x / (x - 1.0);
        return Ok((1.0 - x).powf(-a) * hyp2f1_series(HypParams::new(a, c - b, c, y), tol)?);
    }
    let s = c - a - b;
    if x > CONNECTION_THRESHOLD && (s - s.round()).abs() > 1e-3 {
        return connection(p, tol);
    }
    hyp2f1_series(p, tol)
}

fn connection(p: HypParams, tol: f64) -> Result<f64> {
    let HypParams { a, b, c, x } = p;
    let s = c - a - b;
    let y = 1.0 - x;
    let gc = gamma(c)?;
    let w1 = gc * gamma(s)? * rgamma(c - a) * rgamma(c - b);
    let w2 = gc * gamma(-s)? * rgamma(a) * rgamma(b);
    let mut out = 0.0;
    if w1 != 0.0 {
        out += w1 * hyp2f1_series(HypParams::new(a, b, 1.0 - s, y), tol)?;
    }
    if w2 != 0.0 && y > 0.0 {
        out += w2 * y.powf(s) * hyp2f1_series(HypParams::new(c - a, c - b, 1.0 + s, y), tol)?;
    }
    Ok(out)
}

/// Derivative in `x`: `(ab/c) 2F1(a+1, b+1; c+1; x)`.
pub fn hyp2f1_deriv(p: HypParams, tol: f64) -> Result<f64> {
    let HypParams { a, b, c, x } = p;
    Ok(a * b / c * hyp2f1(HypParams::new(a + 1.0, b + 1.0, c + 1.0, x), tol)?)
}

/// Gauss summation `2F1(a, b; c; 1) = G(c) G(c-a-b) / (G(c-a) G(c-b))`.
pub fn gauss_value(a: f64, b: f64, c: f64) -> Result<f64> {
    let s = c - a - b;
    if s.is_nan() || s <= 0.0 {
        return domain(format!("Gauss summation needs c - a - b > 0, got {s}"));
    }
    if is_nonpositive_integer(c) {
        return domain(format!("c = {c} is a nonpositive integer"));
    }
    Ok(gamma(c)? * gamma(s)? * rgamma(c - a) * rgamma(c - b))
}

/// `int_0^1 (1-r)^s r^t dr = G(s+1) G(t+1) / G(s+t+2)`.
pub fn beta_integral(s: f64, t: f64) -> Result<f64> {
    if !(s > -1.0 && t > -1.0) {
        return domain(format!("beta integral needs s, t > -1, got ({s}, {t})"));
    }
    Ok(gamma(s + 1.0)? * gamma(t + 1.0)? / gamma(s + t + 2.0)?)
}
