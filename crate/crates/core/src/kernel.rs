//! The heat kernel
//!
//! `k_κ(z,x,r) = (1/2z) r^κ (xr)^ν exp(−(x²+r²)/4z) I_ν(xr/2z)`, `ν = (1−κ)/2`,
//!
//! of the Bessel operator `G_κ = ∂² + (κ/x)∂` and the semigroup
//! `(S(z)f)(x) = ∫₀^∞ k_κ(z,x,r) f(r) dr` for `z` in the open right half-plane.
//!
//! With `w = xr/2z` the exponent `−(x²+r²)/4z + w` collapses to `−(x−r)²/4z`,
//! so the kernel is assembled from `e^{−w} I_ν(w)` and a single exponential.

use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

use crate::bessel::{i_exp_scaled, i_exp_scaled_real};
use crate::sector::SectorPoint;
use crate::spaces::{integrate_against, Grid, GridFunction, Sample};
use crate::{Error, Result};

/// `κ < 1` together with the Bessel order `ν = (1−κ)/2 > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    kappa: f64,
    nu: f64,
}

impl KernelParams {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa < 1.0) {
            return Err(Error::Parameter(format!("κ = {kappa} must be a finite number below 1")));
        }
        Ok(Self { kappa, nu: (1.0 - kappa) / 2.0 })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Whether `κ − 2 < m ≤ 1`, the range in which `S` acts on `X_m`.
    pub fn generates_on(&self, m: f64) -> bool {
        self.kappa - 2.0 < m && m <= 1.0
    }
}

fn check_points(x: f64, r: f64) -> Result<()> {
    for (name, v) in [("x", x), ("r", r)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("{name} = {v}"), "kernel arguments must be positive".into()));
        }
    }
    Ok(())
}

/// `k_κ(t,x,r)` for real `t > 0` (no validation).
pub fn heat_kernel_real(p: &KernelParams, t: f64, x: f64, r: f64) -> f64 {
    let w = x * r / (2.0 * t);
    let e = i_exp_scaled_real(p.nu, w);
    if e == 0.0 {
        return 0.0;
    }
    let log = p.kappa * r.ln() + p.nu * (x * r).ln() - (2.0 * t).ln() - (x - r) * (x - r) / (4.0 * t) + e.ln();
    log.exp()
}

fn heat_kernel_unchecked(p: &KernelParams, z: Complex64, x: f64, r: f64) -> Result<Complex64> {
    if z.im == 0.0 {
        return Ok(Complex64::new(heat_kernel_real(p, z.re, x, r), 0.0));
    }
    let w = Complex64::new(x * r, 0.0) / (2.0 * z);
    let e = i_exp_scaled(p.nu, w);
    if e == Complex64::new(0.0, 0.0) {
        return Ok(e);
    }
    let log = p.kappa * r.ln() + p.nu * (x * r).ln() - (2.0 * z).ln() - (x - r) * (x - r) / (4.0 * z) + e.ln();
    if log.re > 709.0 {
        return Err(Error::Overflow("heat kernel"));
    }
    Ok(log.exp())
}

/// `k_κ(z,x,r)`; real and non-negative when `z` is real.
pub fn heat_kernel(p: &KernelParams, z: SectorPoint, x: f64, r: f64) -> Result<Complex64> {
    check_points(x, r)?;
    heat_kernel_unchecked(p, z.to_complex(), x, r)
}

/// Right-hand side of the Gaussian bound without the constant `C`:
/// `|z|^{−1/2} (x/√|z| ∧ 1)^{1−κ} (r/√|z| ∧ 1) exp(−|x−r|²/(s|z|))`.
pub fn gaussian_envelope(p: &KernelParams, z: SectorPoint, x: f64, r: f64, s: f64) -> f64 {
    let m = z.modulus();
    let sq = m.sqrt();
    (x / sq).min(1.0).powf(1.0 - p.kappa) * (r / sq).min(1.0) * (-(x - r) * (x - r) / (s * m)).exp() / sq
}

/// Whether `|k_κ(z,x,r)| ≤ C · gaussian_envelope(z,x,r,s)`.
pub fn gaussian_bound_check(p: &KernelParams, z: SectorPoint, x: f64, r: f64, c: f64, s: f64) -> Result<bool> {
    let k = heat_kernel(p, z, x, r)?;
    Ok(k.norm() <= c * gaussian_envelope(p, z, x, r, s))
}

/// Empirical constants of the Gaussian bound for one `κ` and phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBoundFit {
    pub c: f64,
    pub s: f64,
    /// Largest ratio `|k| / (C·envelope)` on an independent validation set.
    pub validation_ratio: f64,
}

fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Fits `C` (with `s = 8/cos φ`) by maximising `|k|/envelope` over a
/// 50×50×20 lattice of `(x, r, |z|)`, inflates it by 5 % and checks it on a
/// staggered validation lattice.
pub fn fit_gaussian_bound(p: &KernelParams, phase: f64) -> Result<GaussianBoundFit> {
    let s = 8.0 / phase.cos();
    let ratio_max = |xs: &[f64], ts: &[f64]| -> Result<f64> {
        let mut best = 0.0f64;
        for &t in ts {
            let z = SectorPoint::new(t, phase)?;
            for &x in xs {
                for &r in xs {
                    let env = gaussian_envelope(p, z, x, r, s);
                    if env > 1e-280 {
                        best = best.max(heat_kernel(p, z, x, r)?.norm() / env);
                    }
                }
            }
        }
        Ok(best)
    };
    let c = 1.05 * ratio_max(&log_points(1e-3, 20.0, 50), &log_points(1e-3, 10.0, 20))?;
    let v = ratio_max(&log_points(1.3e-3, 17.0, 37), &log_points(1.7e-3, 7.0, 11))?;
    Ok(GaussianBoundFit { c, s, validation_ratio: v / c })
}

/// Quadrature settings for [`apply_semigroup`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApplyOptions {
    /// `ln(1/tol)` for the Gaussian window half-width `√(4|z| ln(1/tol)/cos φ)`.
    pub log_inv_tol: f64,
    /// Largest sub-panel width as a multiple of `√|z|`.
    pub h_factor: f64,
}

impl Default for ApplyOptions {
    fn default() -> Self {
        Self { log_inv_tol: 40.0, h_factor: 0.5 }
    }
}

fn window(z: SectorPoint, opts: &ApplyOptions) -> (f64, f64) {
    let m = z.modulus();
    let w = (4.0 * m * opts.log_inv_tol / z.phase().cos()).sqrt();
    (w, opts.h_factor * m.sqrt())
}

/// `S(z)f` on the nodes of `out`, for real or complex samples.
pub fn apply_semigroup<T: Sample>(
    p: &KernelParams,
    z: SectorPoint,
    f: &GridFunction<T>,
    out: &Arc<Grid>,
) -> Result<GridFunction<Complex64>> {
    apply_semigroup_with(p, z, f, out, &ApplyOptions::default())
}

pub fn apply_semigroup_with<T: Sample>(
    p: &KernelParams,
    z: SectorPoint,
    f: &GridFunction<T>,
    out: &Arc<Grid>,
    opts: &ApplyOptions,
) -> Result<GridFunction<Complex64>> {
    let (w, h) = window(z, opts);
    let zc = z.to_complex();
    let values = out
        .nodes()
        .par_iter()
        .map(|&x| {
            let mut err = None;
            let v = integrate_against(f, x - w, x + w, &[x], h, |r, fr: T| {
                match heat_kernel_unchecked(p, zc, x, r) {
                    Ok(k) => k * Complex64::new(fr.re(), fr.im()),
                    Err(e) => {
                        err = Some(e);
                        Complex64::new(0.0, 0.0)
                    }
                }
            });
            match err {
                Some(e) => Err(e),
                None => Ok(v),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    GridFunction::new(out.clone(), values, f.weight_m())
}

/// `S(t)f` for real `t` and real samples.
pub fn apply_semigroup_real(p: &KernelParams, t: f64, f: &GridFunction<f64>, out: &Arc<Grid>) -> Result<GridFunction<f64>> {
    let values = semigroup_at_real(p, t, f, out.nodes())?;
    GridFunction::new(out.clone(), values, f.weight_m())
}

/// `(S(t)f)(x)` at arbitrary points `xs`.
pub fn semigroup_at_real(p: &KernelParams, t: f64, f: &GridFunction<f64>, xs: &[f64]) -> Result<Vec<f64>> {
    let z = SectorPoint::real(t)?;
    let (w, h) = window(z, &ApplyOptions::default());
    Ok(xs
        .par_iter()
        .map(|&x| integrate_against(f, x - w, x + w, &[x], h, |r, fr: f64| heat_kernel_real(p, t, x, r) * fr))
        .collect())
}

/// `∂_z k_κ(z,x,r)` from
/// `z ∂_z k = k [(x−r)²/4z − (3−κ)/2 + w(1 − I_{ν+1}(w)/I_ν(w))]`, `w = xr/2z`.
pub fn kernel_z_derivative(p: &KernelParams, z: SectorPoint, x: f64, r: f64) -> Result<Complex64> {
    check_points(x, r)?;
    let zc = z.to_complex();
    let k = heat_kernel_unchecked(p, zc, x, r)?;
    let w = Complex64::new(x * r, 0.0) / (2.0 * zc);
    let lo = i_exp_scaled(p.nu, w);
    let ratio = if lo == Complex64::new(0.0, 0.0) { Complex64::new(0.0, 0.0) } else { i_exp_scaled(p.nu + 1.0, w) / lo };
    let bracket = (x - r) * (x - r) / (4.0 * zc) - (3.0 - p.kappa) / 2.0 + w * (1.0 - ratio);
    Ok(k * bracket / zc)
}
