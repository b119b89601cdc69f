//! Partial derivatives of `f = K_alpha[F]`.
//!
//! `d_theta f` is the kernel applied to `F'`. The radial derivative comes from
//! the split `r d_r f = J1 + J2`, and `d_z f`, `d_zbar f` from the polar pair.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::kernel::{
    check_radius, circle_weights, circular_convolve, dist2, kernel_polar, node_angle, poisson_integral, under_resolved,
    weighted_sum, AlphaParam, BoundaryData, ComplexPoint, QuadSpec, C64,
};

/// Step of the finite-difference fallback at the origin.
pub const ORIGIN_STEP: f64 = 1e-5;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Quadrature weight of the `F'` term of `J2` at angle `phi = theta - t`.
fn j2_weight_fdot(a: &AlphaParam, r: f64, phi: f64) -> f64 {
    let al = a.alpha();
    2.0 * a.c_alpha() * (1.0 - r * r).powf(al) * r * phi.sin() / dist2(r, phi).powf((al + 2.0) / 2.0)
}

/// Quadrature weight of the `F` term of `J2`.
fn j2_weight_f(a: &AlphaParam, r: f64, phi: f64) -> f64 {
    let al = a.alpha();
    if al == 0.0 {
        return 0.0;
    }
    let s = (phi / 2.0).sin();
    // 1 - r cos(phi) without cancellation
    let num = (1.0 - r) + 2.0 * r * s * s;
    -al * a.c_alpha() * (1.0 - r * r).powf(al) * num / dist2(r, phi).powf((al + 2.0) / 2.0)
}

fn fdot<'a>(f: &'a BoundaryData, q: &QuadSpec) -> Result<&'a [C64]> {
    Ok(&f.derivative_samples(q.spectral_fallback)?.samples)
}

/// `d_theta f(z)`: the kernel applied to `F'`.
pub fn dtheta_f(a: &AlphaParam, f: &BoundaryData, z: ComplexPoint, q: &QuadSpec) -> Result<C64> {
    let r = z.r();
    check_radius(r, q)?;
    let d = fdot(f, q)?;
    Ok(weighted_sum(d, z.theta(), |phi| kernel_polar(a, r, phi)))
}

/// `J1(z) = alpha K_alpha[F](z)`.
pub fn j1(a: &AlphaParam, f: &BoundaryData, z: ComplexPoint, q: &QuadSpec) -> Result<C64> {
    Ok(a.alpha() * poisson_integral(a, f, z, q)?.value)
}

/// `J2(z)` in the real-kernel form.
pub fn j2(a: &AlphaParam, f: &BoundaryData, z: ComplexPoint, q: &QuadSpec) -> Result<C64> {
    let r = z.r();
    check_radius(r, q)?;
    let d = fdot(f, q)?;
    let theta = z.theta();
    let mut out = weighted_sum(d, theta, |phi| j2_weight_fdot(a, r, phi));
    if a.alpha() != 0.0 {
        out += weighted_sum(f.samples(), theta, |phi| j2_weight_f(a, r, phi));
    }
    Ok(out)
}

/// `d_r f = (J1 + J2) / r`; undefined at the origin.
pub fn dr_f(a: &AlphaParam, f: &BoundaryData, z: ComplexPoint, q: &QuadSpec) -> Result<C64> {
    let r = z.r();
    if r == 0.0 {
        return Err(Error::Origin);
    }
    Ok((j1(a, f, z, q)? + j2(a, f, z, q)?) / r)
}

/// `(d_z f, d_zbar f)` and whether the origin fallback was used.
pub fn dz_dzbar_f(a: &AlphaParam, f: &BoundaryData, z: ComplexPoint, q: &QuadSpec) -> Result<(C64, C64, bool)> {
    if z.r() == 0.0 {
        let (dz, dzbar) = origin_fd(a, f, q)?;
        return Ok((dz, dzbar, true));
    }
    let rdr = j1(a, f, z, q)? + j2(a, f, z, q)?;
    let dt = dtheta_f(a, f, z, q)?;
    let (dz, dzbar) = polar_to_wirtinger(z.z(), rdr, dt);
    Ok((dz, dzbar, false))
}

/// `dz = (r d_r - i d_theta)/(2z)`, `dzbar = (r d_r + i d_theta)/(2 zbar)`.
pub fn polar_to_wirtinger(z: C64, rdr: C64, dtheta: C64) -> (C64, C64) {
    ((rdr - I * dtheta) / (2.0 * z), (rdr + I * dtheta) / (2.0 * z.conj()))
}

/// `d_theta = i (z dz - zbar dzbar)`, `r d_r = z dz + zbar dzbar`.
pub fn wirtinger_to_polar(z: C64, dz: C64, dzbar: C64) -> (C64, C64) {
    (I * (z * dz - z.conj() * dzbar), z * dz + z.conj() * dzbar)
}

fn origin_fd(a: &AlphaParam, f: &BoundaryData, q: &QuadSpec) -> Result<(C64, C64)> {
    let h = ORIGIN_STEP;
    let ev = |x: f64, y: f64| -> Result<C64> { Ok(poisson_integral(a, f, ComplexPoint::new(x, y)?, q)?.value) };
    let fx = (ev(h, 0.0)? - ev(-h, 0.0)?) / (2.0 * h);
    let fy = (ev(0.0, h)? - ev(0.0, -h)?) / (2.0 * h);
    Ok(((fx - I * fy) / 2.0, (fx + I * fy) / 2.0))
}

/// Derivatives on the circle of radius `r` at the `N` boundary nodes.
#[derive(Debug, Clone)]
pub struct CircleDerivs {
    pub r: f64,
    pub f: Vec<C64>,
    pub dtheta: Vec<C64>,
    /// `r d_r f = J1 + J2`.
    pub rdr: Vec<C64>,
}

impl CircleDerivs {
    pub fn theta(&self, k: usize) -> f64 {
        node_angle(k, self.f.len())
    }

    pub fn dr(&self) -> Vec<C64> {
        self.rdr.iter().map(|v| v / self.r).collect()
    }

    pub fn dz(&self) -> Vec<C64> {
        (0..self.f.len())
            .map(|k| polar_to_wirtinger(C64::from_polar(self.r, self.theta(k)), self.rdr[k], self.dtheta[k]).0)
            .collect()
    }

    pub fn dzbar(&self) -> Vec<C64> {
        (0..self.f.len())
            .map(|k| polar_to_wirtinger(C64::from_polar(self.r, self.theta(k)), self.rdr[k], self.dtheta[k]).1)
            .collect()
    }
}

/// `f`, `d_theta f` and `r d_r f` on a whole circle by FFT convolution.
pub fn derivs_circle(a: &AlphaParam, f: &BoundaryData, r: f64, q: &QuadSpec) -> Result<CircleDerivs> {
    check_radius(r, q)?;
    let d = fdot(f, q)?;
    let n = f.len();
    let k = circle_weights(n, |phi| kernel_polar(a, r, phi));
    let fv = circular_convolve(&k, f.samples());
    let dtheta = circular_convolve(&k, d);
    let u = circle_weights(n, |phi| j2_weight_fdot(a, r, phi));
    let mut rdr = circular_convolve(&u, d);
    if a.alpha() != 0.0 {
        let v = circle_weights(n, |phi| j2_weight_f(a, r, phi));
        let extra = circular_convolve(&v, f.samples());
        for ((x, e), fv) in rdr.iter_mut().zip(&extra).zip(&fv) {
            *x += e + a.alpha() * fv;
        }
    }
    Ok(CircleDerivs { r, f: fv, dtheta, rdr })
}

/// Per-point status of a derivative field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFlag {
    Ok,
    UnderResolved,
    OriginFallback,
}

impl PointFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointFlag::Ok => "ok",
            PointFlag::UnderResolved => "under_resolved",
            PointFlag::OriginFallback => "origin_fallback",
        }
    }
}

/// Derivatives of a mapping sampled on a grid of disk points.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DerivField {
    pub points: Vec<ComplexPoint>,
    pub dtheta: Vec<C64>,
    pub dr: Vec<C64>,
    pub dz: Vec<C64>,
    pub dzbar: Vec<C64>,
    pub flags: Vec<PointFlag>,
}

impl DerivField {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn push(&mut self, z: ComplexPoint, dz: C64, dzbar: C64, flag: PointFlag) {
        let w = z.z();
        let (dtheta, rdr) = wirtinger_to_polar(w, dz, dzbar);
        let r = z.r();
        let dr = if r == 0.0 { dz + dzbar } else { rdr / r };
        self.points.push(z);
        self.dtheta.push(dtheta);
        self.dr.push(dr);
        self.dz.push(dz);
        self.dzbar.push(dzbar);
        self.flags.push(flag);
    }

    fn push_polar(&mut self, z: ComplexPoint, dtheta: C64, rdr: C64, flag: PointFlag) {
        let (dz, dzbar) = polar_to_wirtinger(z.z(), rdr, dtheta);
        self.points.push(z);
        self.dtheta.push(dtheta);
        self.dr.push(rdr / z.r());
        self.dz.push(dz);
        self.dzbar.push(dzbar);
        self.flags.push(flag);
    }

    /// Build from a closed-form `z -> (dz, dzbar)`.
    pub fn from_wirtinger<G>(points: &[ComplexPoint], g: G) -> Result<Self>
    where
        G: Fn(C64) -> Result<(C64, C64)> + Sync,
    {
        let vals: Vec<(C64, C64)> = points.par_iter().map(|z| g(z.z())).collect::<Result<_>>()?;
        let mut out = Self::default();
        for (z, (dz, dzbar)) in points.iter().zip(vals) {
            out.push(*z, dz, dzbar, PointFlag::Ok);
        }
        Ok(out)
    }

    /// Pointwise kernel quadrature at arbitrary points.
    pub fn from_kernel(a: &AlphaParam, f: &BoundaryData, points: &[ComplexPoint], q: &QuadSpec) -> Result<Self> {
        fdot(f, q)?;
        let vals: Vec<(C64, C64)> = points
            .par_iter()
            .map(|&z| {
                if z.r() == 0.0 {
                    let (dz, dzbar) = origin_fd(a, f, q)?;
                    Ok((dz, dzbar))
                } else {
                    Ok((dtheta_f(a, f, z, q)?, j1(a, f, z, q)? + j2(a, f, z, q)?))
                }
            })
            .collect::<Result<_>>()?;
        let mut out = Self::default();
        for (z, (u, v)) in points.iter().zip(vals) {
            if z.r() == 0.0 {
                out.push(*z, u, v, PointFlag::OriginFallback);
                continue;
            }
            let flag = if under_resolved(f.len(), z.r()) {
                PointFlag::UnderResolved
            } else {
                PointFlag::Ok
            };
            out.push_polar(*z, u, v, flag);
        }
        Ok(out)
    }

    /// Full circles at the given radii, all boundary nodes per circle.
    pub fn from_kernel_rings(a: &AlphaParam, f: &BoundaryData, radii: &[f64], q: &QuadSpec) -> Result<Self> {
        let rings: Vec<CircleDerivs> = radii
            .par_iter()
            .filter(|&&r| r > 0.0)
            .map(|&r| derivs_circle(a, f, r, q))
            .collect::<Result<_>>()?;
        let mut out = Self::default();
        if radii.contains(&0.0) {
            let z = ComplexPoint::new(0.0, 0.0)?;
            let (dz, dzbar, _) = dz_dzbar_f(a, f, z, q)?;
            out.push(z, dz, dzbar, PointFlag::OriginFallback);
        }
        for ring in rings {
            let flag = if under_resolved(f.len(), ring.r) {
                PointFlag::UnderResolved
            } else {
                PointFlag::Ok
            };
            for k in 0..ring.f.len() {
                let z = ComplexPoint::from_polar(ring.r, ring.theta(k))?;
                out.push_polar(z, ring.dtheta[k], ring.rdr[k], flag);
            }
        }
        Ok(out)
    }

    /// Largest violation of the polar identities over points with `r > 0`.
    pub fn polar_residual(&self) -> f64 {
        (0..self.len())
            .filter(|&k| self.points[k].r() > 0.0)
            .map(|k| {
                let z = self.points[k].z();
                let (dt, rdr) = wirtinger_to_polar(z, self.dz[k], self.dzbar[k]);
                let r = z.norm();
                let scale = 1.0 + self.dz[k].norm() + self.dzbar[k].norm();
                ((dt - self.dtheta[k]).norm().max((rdr - r * self.dr[k]).norm())) / scale
            })
            .fold(0.0, f64::max)
    }

    /// CSV with header `r,theta,re_dtheta,...,flag`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "r",
            "theta",
            "re_dtheta",
            "im_dtheta",
            "re_dr",
            "im_dr",
            "re_dz",
            "im_dz",
            "re_dzbar",
            "im_dzbar",
            "flag",
        ])?;
        for k in 0..self.len() {
            let p = self.points[k];
            let mut row: Vec<String> = vec![p.r().to_string(), p.theta().to_string()];
            for v in [self.dtheta[k], self.dr[k], self.dz[k], self.dzbar[k]] {
                row.push(v.re.to_string());
                row.push(v.im.to_string());
            }
            row.push(self.flags[k].as_str().to_string());
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Largest relative discrepancy between the quadrature derivatives and central
/// differences of `poisson_integral` with step `h`.
pub fn fd_check(a: &AlphaParam, f: &BoundaryData, z: ComplexPoint, h: f64, q: &QuadSpec) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&h) {
        return domain(format!("finite-difference step {h} outside [1e-7, 1e-3]"));
    }
    let r = z.r();
    if r + h > q.r_max {
        return domain(format!("|z| + h = {} exceeds r_max", r + h));
    }
    let w = z.z();
    let ev = |p: C64| -> Result<C64> { Ok(poisson_integral(a, f, ComplexPoint::from_complex(p)?, q)?.value) };
    let fx = (ev(w + h)? - ev(w - h)?) / (2.0 * h);
    let fy = (ev(w + I * h)? - ev(w - I * h)?) / (2.0 * h);
    let (fz, fzb) = ((fx - I * fy) / 2.0, (fx + I * fy) / 2.0);
    let (dz, dzbar, _) = dz_dzbar_f(a, f, z, q)?;
    let mut pairs = vec![(dz, fz), (dzbar, fzb)];
    if r > 0.0 {
        let xi = w / r;
        let fr = (ev(w + xi * h)? - ev(w - xi * h)?) / (2.0 * h);
        let d = h / r;
        let rot = C64::from_polar(1.0, d);
        let ft = (ev(w * rot)? - ev(w / rot)?) / (2.0 * d);
        pairs.push((dr_f(a, f, z, q)?, fr));
        pairs.push((dtheta_f(a, f, z, q)?, ft));
    }
    let scale = 1.0 + pairs.iter().map(|(v, _)| v.norm()).fold(0.0, f64::max);
    Ok(pairs.iter().map(|(v, w)| (v - w).norm()).fold(0.0, f64::max) / scale)
}
