//! The weighted Poisson kernel, boundary data and the quadrature `F -> K_alpha[F]`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::specfun::gamma;

pub type C64 = Complex64;

/// Evaluator `theta -> value` on the unit circle.
pub type BoundaryFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// Largest admissible truncation radius.
pub const R_MAX_LIMIT: f64 = 1.0 - 1e-6;

/// A point of the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexPoint {
    pub re: f64,
    pub im: f64,
}

impl ComplexPoint {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        let p = Self { re, im };
        if !(re.is_finite() && im.is_finite()) || p.r() >= 1.0 {
            return domain(format!("point ({re}, {im}) is not in the open unit disk"));
        }
        Ok(p)
    }

    pub fn from_polar(r: f64, theta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return domain(format!("radius {r} is not in [0, 1)"));
        }
        Ok(Self {
            re: r * theta.cos(),
            im: r * theta.sin(),
        })
    }

    pub fn from_complex(z: C64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn z(&self) -> C64 {
        C64::new(self.re, self.im)
    }

    pub fn r(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn theta(&self) -> f64 {
        self.im.atan2(self.re)
    }
}

/// `C_alpha = Gamma(1 + alpha/2)^2 / Gamma(1 + alpha)`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > -1.0) || !alpha.is_finite() {
        return domain(format!("alpha must exceed -1, got {alpha}"));
    }
    let g = gamma(1.0 + alpha / 2.0)?;
    Ok(g * g / gamma(1.0 + alpha)?)
}

/// The weight parameter with its cached normalizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaParam {
    alpha: f64,
    c_alpha: f64,
}

impl AlphaParam {
    pub fn new(alpha: f64) -> Result<Self> {
        Ok(Self {
            alpha,
            c_alpha: c_alpha(alpha)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c_alpha(&self) -> f64 {
        self.c_alpha
    }
}

/// `|1 - r e^{i phi}|^2`, written to avoid cancellation near `phi = 0`.
pub(crate) fn dist2(r: f64, phi: f64) -> f64 {
    let s = (phi / 2.0).sin();
    (1.0 - r) * (1.0 - r) + 4.0 * r * s * s
}

/// `K_alpha(r e^{i phi})`.
pub fn kernel_polar(a: &AlphaParam, r: f64, phi: f64) -> f64 {
    let al = a.alpha;
    a.c_alpha * (1.0 - r * r).powf(al + 1.0) / dist2(r, phi).powf((al + 2.0) / 2.0)
}

/// `K_alpha(z) = C_alpha (1-|z|^2)^(alpha+1) / |1-z|^(alpha+2)`.
pub fn kernel_k(a: &AlphaParam, z: ComplexPoint) -> f64 {
    kernel_polar(a, z.r(), z.theta())
}

/// Sampled boundary function on the uniform grid `theta_j = 2 pi j / N`.
#[derive(Clone)]
pub struct BoundaryData {
    samples: Vec<C64>,
    closed_form: Option<BoundaryFn>,
    closed_form_deriv: Option<BoundaryFn>,
    exact_deriv_samples: Option<Arc<Vec<C64>>>,
    kinks: Vec<f64>,
    deriv: OnceLock<BoundaryDerivative>,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryData")
            .field("n", &self.samples.len())
            .field("closed_form", &self.closed_form.is_some())
            .field("exact_derivative", &self.has_derivative())
            .field("kinks", &self.kinks)
            .finish()
    }
}

/// How derivative samples were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMethod {
    ClosedForm,
    Spectral,
}

/// Output of [`boundary_derivative`].
#[derive(Debug, Clone)]
pub struct BoundaryDerivative {
    pub samples: Vec<C64>,
    pub method: DerivativeMethod,
    /// Top-band energy of `F` exceeded `1e-8` of the total.
    pub aliasing_warning: bool,
    /// Nodes where the derivative is one-sided.
    pub flagged_nodes: Vec<usize>,
}

pub fn node_angle(j: usize, n: usize) -> f64 {
    2.0 * PI * j as f64 / n as f64
}

fn check_len(n: usize) -> Result<()> {
    if n < 16 || !n.is_multiple_of(2) {
        return Err(Error::InvalidBoundary(format!(
            "need an even number of samples >= 16, got {n}"
        )));
    }
    Ok(())
}

impl BoundaryData {
    pub fn from_samples(samples: Vec<C64>) -> Result<Self> {
        check_len(samples.len())?;
        if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::InvalidBoundary("non-finite sample".into()));
        }
        Ok(Self {
            samples,
            closed_form: None,
            closed_form_deriv: None,
            exact_deriv_samples: None,
            kinks: Vec::new(),
            deriv: OnceLock::new(),
        })
    }

    pub fn from_closed_form<F>(n: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        check_len(n)?;
        let f: BoundaryFn = Arc::new(f);
        let samples = (0..n).map(|j| f(node_angle(j, n))).collect();
        let mut b = Self::from_samples(samples)?;
        b.closed_form = Some(f);
        Ok(b)
    }

    /// Attach an exact derivative `theta -> dF/dtheta`.
    pub fn with_derivative<F>(mut self, fdot: F) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        self.closed_form_deriv = Some(Arc::new(fdot));
        self.deriv = OnceLock::new();
        self
    }

    /// Attach exact derivative values at the nodes.
    pub fn with_derivative_samples(mut self, fdot: Vec<C64>) -> Result<Self> {
        if fdot.len() != self.len() {
            return Err(Error::InvalidBoundary(format!(
                "{} derivative samples for {} nodes",
                fdot.len(),
                self.len()
            )));
        }
        self.exact_deriv_samples = Some(Arc::new(fdot));
        self.deriv = OnceLock::new();
        Ok(self)
    }

    /// Angles where the derivative channel is one-sided.
    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self.deriv = OnceLock::new();
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn theta(&self, j: usize) -> f64 {
        node_angle(j, self.len())
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn closed_form(&self) -> Option<&BoundaryFn> {
        self.closed_form.as_ref()
    }

    pub fn closed_form_deriv(&self) -> Option<&BoundaryFn> {
        self.closed_form_deriv.as_ref()
    }

    pub fn has_derivative(&self) -> bool {
        self.closed_form_deriv.is_some() || self.exact_deriv_samples.is_some()
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    /// Pointwise conjugate; exact derivative channels are conjugated too.
    pub fn conj(&self) -> Self {
        let mut out =
            Self::from_samples(self.samples.iter().map(|s| s.conj()).collect()).expect("length already validated");
        if let Some(f) = self.closed_form.clone() {
            out.closed_form = Some(Arc::new(move |t| f(t).conj()));
        }
        if let Some(f) = self.closed_form_deriv.clone() {
            out.closed_form_deriv = Some(Arc::new(move |t| f(t).conj()));
        }
        if let Some(d) = &self.exact_deriv_samples {
            out.exact_deriv_samples = Some(Arc::new(d.iter().map(|v| v.conj()).collect()));
        }
        out.kinks = self.kinks.clone();
        out
    }

    /// Derivative samples. Spectral differentiation is used only when allowed
    /// and no exact derivative is attached.
    pub fn derivative_samples(&self, allow_spectral: bool) -> Result<&BoundaryDerivative> {
        if !self.has_derivative() && !allow_spectral {
            return Err(Error::MissingDerivative);
        }
        Ok(self.deriv.get_or_init(|| self.compute_derivative()))
    }

    fn compute_derivative(&self) -> BoundaryDerivative {
        let n = self.len();
        let flagged_nodes = self.kink_nodes();
        if let Some(d) = &self.exact_deriv_samples {
            return BoundaryDerivative {
                samples: d.to_vec(),
                method: DerivativeMethod::ClosedForm,
                aliasing_warning: false,
                flagged_nodes,
            };
        }
        match &self.closed_form_deriv {
            Some(fd) => {
                let mut samples: Vec<C64> = (0..n).map(|j| fd(node_angle(j, n))).collect();
                // mean of the one-sided limits keeps the trapezoid rule second order across a jump
                for &j in &flagged_nodes {
                    let t = node_angle(j, n);
                    samples[j] = 0.5 * (fd(t - KINK_OFFSET) + fd(t + KINK_OFFSET));
                }
                BoundaryDerivative {
                    samples,
                    method: DerivativeMethod::ClosedForm,
                    aliasing_warning: false,
                    flagged_nodes,
                }
            }
            None => {
                let (samples, aliasing_warning) = spectral_derivative(&self.samples);
                BoundaryDerivative {
                    samples,
                    method: DerivativeMethod::Spectral,
                    aliasing_warning,
                    flagged_nodes,
                }
            }
        }
    }

    fn kink_nodes(&self) -> Vec<usize> {
        let n = self.len();
        let h = 2.0 * PI / n as f64;
        let mut out: Vec<usize> = self
            .kinks
            .iter()
            .filter_map(|&k| {
                let t = k.rem_euclid(2.0 * PI) / h;
                let j = t.round();
                ((t - j).abs() < 1e-9).then_some(j as usize % n)
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Write `theta,re,im` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["theta", "re", "im"])?;
        for (j, s) in self.samples.iter().enumerate() {
            wr.write_record([self.theta(j).to_string(), s.re.to_string(), s.im.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Read `theta,re,im` rows; the angles must form the uniform grid starting at 0.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["theta", "re", "im"] {
            return Err(Error::InvalidBoundary(format!(
                "expected header theta,re,im, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut thetas = Vec::new();
        let mut samples = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::InvalidBoundary("short row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidBoundary(e.to_string()))
            };
            thetas.push(field(0)?);
            samples.push(C64::new(field(1)?, field(2)?));
        }
        let n = samples.len();
        check_len(n)?;
        for (j, t) in thetas.iter().enumerate() {
            if (t - node_angle(j, n)).abs() > 1e-12 {
                return Err(Error::InvalidBoundary(format!(
                    "row {j}: theta {t} is off the uniform grid"
                )));
            }
        }
        Self::from_samples(samples)
    }
}

/// Offset used to take one-sided limits of a closed-form derivative at a kink.
const KINK_OFFSET: f64 = 1e-10;

/// Derivative of `F`: exact when attached, spectral otherwise.
pub fn boundary_derivative(f: &BoundaryData) -> Result<BoundaryDerivative> {
    f.derivative_samples(true).cloned()
}

fn signed_freq(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Differentiate the trigonometric interpolant. Returns the samples and an
/// aliasing flag (energy with `|k| >= 3N/8` above `1e-8` of the total).
pub fn spectral_derivative(samples: &[C64]) -> (Vec<C64>, bool) {
    let n = samples.len();
    let mut planner = FftPlanner::new();
    let mut buf = samples.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    let total: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
    let top: f64 = buf
        .iter()
        .enumerate()
        .filter(|(k, _)| signed_freq(*k, n).abs() >= 3.0 * n as f64 / 8.0)
        .map(|(_, c)| c.norm_sqr())
        .sum();
    for (k, c) in buf.iter_mut().enumerate() {
        *c *= if k == n / 2 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(0.0, signed_freq(k, n) / n as f64)
        };
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    (buf, total > 0.0 && top > 1e-8 * total)
}

/// Circular convolution `out_k = sum_j w_{(k-j) mod N} x_j`.
pub(crate) fn circular_convolve(w: &[f64], x: &[C64]) -> Vec<C64> {
    let n = x.len();
    debug_assert_eq!(w.len(), n);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let mut a: Vec<C64> = w.iter().map(|&v| C64::new(v, 0.0)).collect();
    let mut b = x.to_vec();
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (u, v) in a.iter_mut().zip(&b) {
        *u *= v / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut a);
    a
}

/// Quadrature settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadSpec {
    pub angular_nodes: usize,
    pub radial_grid: Vec<f64>,
    pub r_max: f64,
    pub tol: f64,
    /// Allow spectral differentiation of sampled boundary data.
    pub spectral_fallback: bool,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self::new(2048, 0.999, 64).expect("default quadrature settings are valid")
    }
}

impl QuadSpec {
    /// `radial_nodes` radii uniform in `-ln(1 - r)` from 0 to `r_max`.
    pub fn new(angular_nodes: usize, r_max: f64, radial_nodes: usize) -> Result<Self> {
        if radial_nodes < 2 {
            return domain("radial grid needs at least 2 nodes");
        }
        let s_max = -(1.0 - r_max).ln();
        let grid = (0..radial_nodes)
            .map(|j| -(-(s_max * j as f64 / (radial_nodes - 1) as f64)).exp_m1())
            .collect::<Vec<_>>();
        Self::with_grid(angular_nodes, r_max, grid)
    }

    pub fn with_grid(angular_nodes: usize, r_max: f64, mut radial_grid: Vec<f64>) -> Result<Self> {
        if angular_nodes < 16 || !angular_nodes.is_multiple_of(2) {
            return domain(format!("angular nodes must be even and >= 16, got {angular_nodes}"));
        }
        if !(r_max > 0.0 && r_max <= R_MAX_LIMIT) {
            return domain(format!("r_max must lie in (0, 1 - 1e-6], got {r_max}"));
        }
        if let Some(last) = radial_grid.last_mut() {
            // absorb rounding in the geometric construction
            if (*last - r_max).abs() < 1e-15 {
                *last = r_max;
            }
        }
        if radial_grid.is_empty()
            || radial_grid[0] < 0.0
            || radial_grid.windows(2).any(|w| w[1] <= w[0])
            || *radial_grid.last().unwrap() > r_max
        {
            return domain("radial grid must be strictly increasing within [0, r_max]");
        }
        Ok(Self {
            angular_nodes,
            radial_grid,
            r_max,
            tol: 1e-12,
            spectral_fallback: true,
        })
    }

    pub fn with_spectral_fallback(mut self, on: bool) -> Self {
        self.spectral_fallback = on;
        self
    }
}

/// A quadrature value with its resolution flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quad {
    pub value: C64,
    /// `N < 8 / (1 - |z|)`: the kernel peak is under-resolved.
    pub under_resolved: bool,
}

pub(crate) fn under_resolved(n: usize, r: f64) -> bool {
    (n as f64) < 8.0 / (1.0 - r)
}

pub(crate) fn check_radius(r: f64, q: &QuadSpec) -> Result<()> {
    if r > q.r_max * (1.0 + 1e-15) {
        return domain(format!("|z| = {r} exceeds r_max = {}", q.r_max));
    }
    Ok(())
}

/// Trapezoid sum `(1/N) sum_j w(theta - theta_j) x_j` for a real weight `w(phi)`.
pub(crate) fn weighted_sum<W: Fn(f64) -> f64>(x: &[C64], theta: f64, w: W) -> C64 {
    let n = x.len();
    let mut acc = C64::new(0.0, 0.0);
    for (j, v) in x.iter().enumerate() {
        acc += v * w(theta - node_angle(j, n));
    }
    acc / n as f64
}

/// `K_alpha[F](z)` by the periodic trapezoid rule on the samples of `F`.
pub fn poisson_integral(a: &AlphaParam, f: &BoundaryData, z: ComplexPoint, q: &QuadSpec) -> Result<Quad> {
    let r = z.r();
    check_radius(r, q)?;
    let theta = z.theta();
    let value = weighted_sum(f.samples(), theta, |phi| kernel_polar(a, r, phi));
    Ok(Quad {
        value,
        under_resolved: under_resolved(f.len(), r),
    })
}

/// [`poisson_integral`] at many points, in parallel.
pub fn poisson_integral_many(a: &AlphaParam, f: &BoundaryData, zs: &[ComplexPoint], q: &QuadSpec) -> Result<Vec<Quad>> {
    zs.par_iter().map(|&z| poisson_integral(a, f, z, q)).collect()
}

/// Kernel weights `K_alpha(r e^{i theta_m}) / N` for `m = 0..N`.
pub(crate) fn circle_weights<W: Fn(f64) -> f64>(n: usize, w: W) -> Vec<f64> {
    (0..n).map(|m| w(node_angle(m, n)) / n as f64).collect()
}

/// `K_alpha[F]` on the circle of radius `r` at the boundary nodes, by FFT.
pub fn poisson_circle(a: &AlphaParam, f: &BoundaryData, r: f64, q: &QuadSpec) -> Result<Vec<C64>> {
    check_radius(r, q)?;
    let w = circle_weights(f.len(), |phi| kernel_polar(a, r, phi));
    Ok(circular_convolve(&w, f.samples()))
}
