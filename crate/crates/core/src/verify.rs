//! Named numerical checks and their aggregation into a report.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::absorption::{evolve_absorbed, truncated_convergence, Potential};
use crate::bessel::{bessel_i, bessel_k, wronskian, BesselOrder};
use crate::kernel::{
    apply_semigroup, apply_semigroup_real, fit_gaussian_bound, heat_kernel, heat_kernel_real, kernel_z_derivative,
    semigroup_at_real, KernelParams,
};
use crate::reduce::{
    conjugated_semigroup, default_plan, multiply, remap, Case, OperatorSpec, Thresholds,
};
use crate::resolvent::{apply_resolvent, boundary_trace, dissipativity_check, green, resolvent_at};
use crate::spaces::{integrate_against, make_geometric_grid, weighted_norm, weighted_norm_with, GaussLegendre, Grid, GridFunction};
use crate::{Error, Result, SectorPoint};

/// One named check: a measured quantity compared against a target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub measured: f64,
    pub target: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CheckEntry {
    /// Passes iff `measured ≤ bound + tol`.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64, tol: f64) -> Self {
        Self { name: name.into(), measured, target: bound, tol, pass: measured <= bound + tol }
    }

    /// Passes iff `measured ≥ bound − tol`.
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64, tol: f64) -> Self {
        Self { name: name.into(), measured, target: bound, tol, pass: measured >= bound - tol }
    }

    /// Passes iff `|measured − target| ≤ tol`.
    pub fn close(name: impl Into<String>, measured: f64, target: f64, tol: f64) -> Self {
        Self { name: name.into(), measured, target, tol, pass: (measured - target).abs() <= tol }
    }

    fn failing_unless(mut self, ok: bool) -> Self {
        self.pass &= ok;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    Exact,
    SlopeFit,
    Ordering,
}

/// A registered check with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub name: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub mode: CheckMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub pass: bool,
    pub entries: Vec<CheckEntry>,
    pub metadata: BTreeMap<String, Value>,
}

impl Default for VerificationReport {
    fn default() -> Self {
        Self::new()
    }
}

impl VerificationReport {
    pub fn new() -> Self {
        Self { pass: true, entries: Vec::new(), metadata: BTreeMap::new() }
    }

    pub fn push(&mut self, e: CheckEntry) {
        self.pass &= e.pass;
        self.entries.push(e);
    }

    pub fn note(&mut self, key: impl Into<String>, v: impl Into<Value>) {
        self.metadata.insert(key.into(), v.into());
    }

    pub fn merge(&mut self, prefix: &str, other: VerificationReport) {
        for e in other.entries {
            self.push(e);
        }
        for (k, v) in other.metadata {
            self.metadata.insert(format!("{prefix}.{k}"), v);
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

// ---------------------------------------------------------------------------
// Integral operators Q_{s,α,β}

/// `q(t,x,r) = t^{−1/2} (x/√t ∧ 1)^{−α} (r/√t ∧ 1)^{−β} exp(−|x−r|²/(st))`.
pub fn q_kernel(s: f64, alpha: f64, beta: f64, t: f64, x: f64, r: f64) -> f64 {
    let st = t.sqrt();
    (x / st).min(1.0).powf(-alpha) * (r / st).min(1.0).powf(-beta) * (-(x - r) * (x - r) / (s * t)).exp() / st
}

/// `Q_{s,α,β}(t) f` on the nodes of `out`.
pub fn q_apply(s: f64, alpha: f64, beta: f64, t: f64, f: &GridFunction<f64>, out: &Arc<Grid>) -> Result<GridFunction<f64>> {
    if !(s > 0.0 && t > 0.0 && s.is_finite() && t.is_finite()) {
        return Err(Error::Parameter(format!("q_apply needs s, t > 0, got s = {s}, t = {t}")));
    }
    let w = (40.0 * s * t).sqrt();
    let h = 0.5 * (s * t).sqrt();
    let corner = t.sqrt();
    let values: Vec<f64> = out
        .nodes()
        .par_iter()
        .map(|&x| integrate_against(f, x - w, x + w, &[x, corner], h, |r, fr: f64| q_kernel(s, alpha, beta, t, x, r) * fr))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite Q f at x = {}", out.nodes()[i])));
    }
    GridFunction::new(out.clone(), values, f.weight_m())
}

// ---------------------------------------------------------------------------
// Slope fits

/// Least-squares fit of `ln y = ln C + slope · ln t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub constant: f64,
    /// Largest change of the slope when one sample is left out.
    pub loo_max_change: f64,
    pub ts: Vec<f64>,
    pub values: Vec<f64>,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn fit_loglog(ts: &[f64], values: &[f64]) -> Result<SlopeFit> {
    if ts.len() < 3 || ts.len() != values.len() {
        return Err(Error::Parameter("slope fit needs at least three samples".into()));
    }
    if ts.iter().chain(values).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Parameter("slope fit needs positive finite samples".into()));
    }
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (slope, icept) = least_squares(&lx, &ly);
    let mut loo = 0.0f64;
    for i in 0..lx.len() {
        let (x, y): (Vec<f64>, Vec<f64>) = lx.iter().zip(&ly).enumerate().filter(|(j, _)| *j != i).map(|(_, (a, b))| (*a, *b)).unzip();
        loo = loo.max((least_squares(&x, &y).0 - slope).abs());
    }
    Ok(SlopeFit { slope, constant: icept.exp(), loo_max_change: loo, ts: ts.to_vec(), values: values.to_vec() })
}

/// Gaussian bumps dilated by `√t`: centres `{0.5, 1, 1.5, 2.5, 4}·√t`, widths `{0.2, 0.5}·√t`.
pub fn dilated_family(grid: &Arc<Grid>, t: f64, m: f64) -> Vec<GridFunction<f64>> {
    let st = t.sqrt();
    let mut out = Vec::new();
    for c in [0.5, 1.0, 1.5, 2.5, 4.0] {
        for w in [0.2, 0.5] {
            out.push(GridFunction::sample(grid.clone(), m, move |x: f64| (-((x / st - c) / w).powi(2)).exp()));
        }
    }
    out
}

/// Largest `‖op(f)‖_{X_{m−θ}} / ‖f‖_{X_m}` over the dilated family, for each `θ`.
fn family_ratios<F>(grid: &Arc<Grid>, t: f64, m: f64, thetas: &[f64], op: F) -> Result<Vec<f64>>
where
    F: Fn(&GridFunction<f64>) -> Result<Vec<(f64, f64)>>,
{
    let mut best = vec![0.0f64; thetas.len()];
    for f in dilated_family(grid, t, m) {
        let n0 = weighted_norm(&f)?.value;
        let norms = op(&f)?;
        for (b, (_, n)) in best.iter_mut().zip(norms) {
            *b = b.max(n / n0);
        }
    }
    Ok(best)
}

/// Whether `θ + α < m + 1 ≤ 1 − β` and `m ≤ 1`, under which `‖Q(t)‖ ≤ c t^{−θ/2}`.
pub fn q_hypothesis(alpha: f64, beta: f64, m: f64, theta: f64) -> bool {
    m <= 1.0 && theta + alpha < m + 1.0 && m + 1.0 <= 1.0 - beta
}

/// Slope of the lower bound for `‖Q_{s,α,β}(t)‖_{X_m → X_{m−θ}}` over `ts`.
/// Outside [`q_hypothesis`] this is only the slope over the dilated family.
pub fn q_slope(s: f64, alpha: f64, beta: f64, m: f64, theta: f64, ts: &[f64], grid: &Arc<Grid>) -> Result<SlopeFit> {
    if !(theta >= 0.0) {
        return Err(Error::Parameter(format!("θ = {theta} must be non-negative")));
    }
    let values = ts
        .iter()
        .map(|&t| {
            let r = family_ratios(grid, t, m, &[theta], |f| {
                let q = q_apply(s, alpha, beta, t, f, grid)?;
                Ok(vec![(theta, weighted_norm_with(&q, m - theta)?.total())])
            })?;
            Ok(r[0])
        })
        .collect::<Result<Vec<f64>>>()?;
    fit_loglog(ts, &values)
}

/// Slopes of the lower bounds for `‖S(z)‖_{X_m → X_{m−θ}}` along the ray
/// `z = t e^{iφ}`, one per `θ`.
pub fn smoothing_slopes(p: &KernelParams, m: f64, thetas: &[f64], phase: f64, ts: &[f64], grid: &Arc<Grid>) -> Result<Vec<SlopeFit>> {
    if thetas.is_empty() {
        return Err(Error::Parameter("empty θ list".into()));
    }
    for &theta in thetas {
        if !(theta >= 0.0 && theta + p.kappa() - 2.0 < m && m <= 1.0) {
            return Err(Error::Parameter(format!("need θ+κ−2 < m ≤ 1, got θ = {theta}, κ = {}, m = {m}", p.kappa())));
        }
    }
    let mut per_t = Vec::new();
    for &t in ts {
        let z = SectorPoint::new(t, phase)?;
        per_t.push(family_ratios(grid, t, m, thetas, |f| {
            let norms: Vec<(f64, f64)> = if phase == 0.0 {
                let u = apply_semigroup_real(p, t, f, grid)?;
                thetas.iter().map(|&th| Ok((th, weighted_norm_with(&u, m - th)?.total()))).collect::<Result<_>>()?
            } else {
                let u = apply_semigroup(p, z, f, grid)?;
                thetas.iter().map(|&th| Ok((th, weighted_norm_with(&u, m - th)?.total()))).collect::<Result<_>>()?
            };
            Ok(norms)
        })?);
    }
    (0..thetas.len()).map(|i| fit_loglog(ts, &per_t.iter().map(|v| v[i]).collect::<Vec<_>>())).collect()
}

fn slope_entries(report: &mut VerificationReport, label: &str, fit: &SlopeFit, target: f64, tol: f64) {
    report.push(CheckEntry::close(label.to_string(), fit.slope, target, tol));
    let allowed = 0.01 * target.abs().max(0.5);
    report.push(CheckEntry::at_most(format!("{label}.leave_one_out"), fit.loo_max_change, allowed, 0.0));
    report.note(format!("{label}.constant"), fit.constant);
}

fn slope_grid() -> Arc<Grid> {
    Arc::new(make_geometric_grid(1e-6, 40.0, 80, 8).expect("valid grid"))
}

/// Smoothing-rate fits over `t ∈ [1e−3, 1]`: slope `−θ/2` within 5 % for
/// `θ > 0`, `0 ± 0.03` for `θ = 0`, plus the complex ray `t e^{iπ/4}` at `θ = 0`.
pub fn smoothing_suite(p: &KernelParams, m: f64, thetas: &[f64]) -> Result<VerificationReport> {
    let grid = slope_grid();
    let ts = log_space(1e-3, 1.0, 7);
    let fits = smoothing_slopes(p, m, thetas, 0.0, &ts, &grid)?;
    let mut report = VerificationReport::new();
    for (&theta, fit) in thetas.iter().zip(&fits) {
        let target = -theta / 2.0;
        let tol = if theta == 0.0 { 0.03 } else { 0.05 * theta / 2.0 };
        slope_entries(&mut report, &format!("smoothing_slope(kappa={}, m={m}, theta={theta})", p.kappa()), fit, target, tol);
    }
    let ray = smoothing_slopes(p, m, &[0.0], FRAC_PI_4, &log_space(1e-3, 1.0, 4), &grid)?;
    report.push(CheckEntry::close(format!("smoothing_complex_ray(kappa={}, m={m})", p.kappa()), ray[0].slope, 0.0, 0.03));
    report.note("grid", "geometric [1e-6, 40], 80 panels, order 8");
    Ok(report)
}

// ---------------------------------------------------------------------------
// Kernel derivative bound

/// Fits `C` in `|z ∂_z k(z,x,r)| ≤ C [q_{2s,κ−1,−1} + q_{2s,κ−2,−2}](|z|,x,r)` with
/// `s = 8/cos φ` on a lattice and validates it on a staggered one; `measured`
/// is the validation ratio to `C`.
pub fn z_derivative_bound(p: &KernelParams, phase: f64, tol: f64) -> Result<(CheckEntry, f64)> {
    let s = 8.0 / phase.cos();
    let k = p.kappa();
    let ratio_max = |xs: &[f64], ts: &[f64]| -> Result<f64> {
        let mut best = 0.0f64;
        for &t in ts {
            let z = SectorPoint::new(t, phase)?;
            for &x in xs {
                for &r in xs {
                    let dom = q_kernel(2.0 * s, k - 1.0, -1.0, t, x, r) + q_kernel(2.0 * s, k - 2.0, -2.0, t, x, r);
                    if dom > 1e-280 {
                        best = best.max(t * kernel_z_derivative(p, z, x, r)?.norm() / dom);
                    }
                }
            }
        }
        Ok(best)
    };
    let c = 1.05 * ratio_max(&log_space(1e-3, 20.0, 30), &log_space(1e-3, 10.0, 10))?;
    let v = ratio_max(&log_space(1.3e-3, 17.0, 23), &log_space(1.7e-3, 7.0, 7))?;
    Ok((CheckEntry::at_most(format!("z_derivative_bound(kappa={k}, phase={phase})"), v / c, 1.0, tol), c))
}

// ---------------------------------------------------------------------------
// Behaviour of resolvent outputs

fn tail_integral(h: &GridFunction<f64>, kappa: f64, x: f64, weight: impl Fn(f64) -> f64) -> f64 {
    let (_, hi) = h.grid().span();
    integrate_against(h, x, hi, &[x], f64::INFINITY, |z, v: f64| z.powf(kappa) * v * weight(z))
}

/// For `f = (1 − G_κ)^{−1} g`, so that `G_κ f = f − g`:
/// (i) `f′ = −x^{−κ}∫ₓ^∞ z^κ G_κf dz` against central differences on `[0.1, 5]`;
/// (ii) `x^{m−1}f` and `x^m f′` decay to 0 at `x ∈ {20, 30, 40}` and `x^m f′ → 0` at 0;
/// (iii) the reconstruction `f(x) = ∫ₓ^∞ z^κ G_κf (z^{1−κ}−x^{1−κ})/(1−κ) dz` on `[0.2, 2]`;
/// (iv) `x^{m−1}f(x) = −∫ₓ^∞ (z^{m−1}f)′ dz` on `[0.1, 5]` and `lim_{x→0} x^{m−1}f` exists.
pub fn appendix_b_suite(p: &KernelParams, m: f64, g: &GridFunction<f64>) -> Result<VerificationReport> {
    let kappa = p.kappa();
    if !(m > kappa) {
        return Err(Error::Parameter(format!("need m > κ, got m = {m}, κ = {kappa}")));
    }
    let grid = g.grid().clone();
    let (_, hi) = grid.span();
    if hi < 45.0 {
        return Err(Error::Resolution(format!("grid must reach beyond 45, ends at {hi}")));
    }
    let tol = 1e-4;
    let label = |s: &str| format!("appendix_b.{s}(kappa={kappa}, m={m})");
    let f = apply_resolvent(p, 1.0, g, &grid)?.with_weight(m);
    let gf = f.zip_with(g, |a, b| a - b)?;
    let deriv = |x: f64| -x.powf(-kappa) * tail_integral(&gf, kappa, x, |_| 1.0);
    let mut report = VerificationReport::new();

    // (i)
    let xs = log_space(0.1, 5.0, 40);
    let mut fd_pts = Vec::new();
    let hs: Vec<f64> = xs.iter().map(|x| 1e-4 * x).collect();
    for (x, h) in xs.iter().zip(&hs) {
        fd_pts.push(x - h);
        fd_pts.push(x + h);
    }
    let fv = resolvent_at(p, 1.0, g, &fd_pts)?;
    let fd: Vec<f64> = hs.iter().enumerate().map(|(i, h)| (fv[2 * i + 1] - fv[2 * i]) / (2.0 * h)).collect();
    let formula: Vec<f64> = xs.iter().map(|&x| deriv(x)).collect();
    report.push(CheckEntry::at_most(label("derivative_identity"), sup_diff(&fd, &formula) / sup(&fd), 0.0, tol));

    // (ii)
    let far = [20.0, 30.0, 40.0];
    let fvals = resolvent_at(p, 1.0, g, &far)?;
    let y: Vec<f64> = far.iter().zip(&fvals).map(|(x, v)| (x.powf(m - 1.0) * v).abs()).collect();
    let dy: Vec<f64> = far.iter().map(|&x| (x.powf(m) * deriv(x)).abs()).collect();
    let near = [1e-3f64, 1e-4, 1e-5];
    let dn: Vec<f64> = near.iter().map(|&x| (x.powf(m) * deriv(x)).abs()).collect();
    let scale_f = f.grid().nodes().iter().zip(f.values()).fold(0.0f64, |a, (x, v)| a.max((x.powf(m - 1.0) * v).abs()));
    let scale_d = xs.iter().zip(&formula).fold(0.0f64, |a, (x, v)| a.max((x.powf(m) * v).abs()));
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    let limit = |v: &[f64]| {
        let (d1, d2) = (v[1] - v[0], v[2] - v[1]);
        if d2 == d1 { v[2] } else { (v[0] - d1 * d1 / (d2 - d1)).abs().min(v[2]) }
    };
    let measured = (limit(&y) / scale_f).max(limit(&dy) / scale_d).max(limit(&dn) / scale_d);
    let monotone = decreasing(&y) && decreasing(&dy) && decreasing(&dn);
    report.push(CheckEntry::at_most(label("tail_limits"), measured, 0.0, tol).failing_unless(monotone));

    // (iii)
    let xs3 = log_space(0.2, 2.0, 30);
    let c = 1.0 - kappa;
    let mut worst = 0.0f64;
    for &x in &xs3 {
        let xc = x.powf(c);
        let rec = tail_integral(&gf, kappa, x, |z| (z.powf(c) - xc) / c);
        let fx = f.at(x);
        worst = worst.max((rec - fx).abs() / fx.abs().max(f64::MIN_POSITIVE));
    }
    report.push(CheckEntry::at_most(label("reconstruction"), worst, 0.0, tol));

    // (iv)
    let nodes = grid.nodes();
    let dvals: Vec<f64> = nodes
        .par_iter()
        .zip(f.values())
        .map(|(&z, &fz)| z.powf(m - 1.0) * deriv(z) + (m - 1.0) * z.powf(m - 2.0) * fz)
        .collect();
    let dfun = GridFunction::new(grid.clone(), dvals, m)?;
    let mut worst = 0.0f64;
    for &x in &xs {
        let rhs = -integrate_against(&dfun, x, hi, &[x], f64::INFINITY, |_, v: f64| v);
        let lhs = x.powf(m - 1.0) * f.at(x);
        worst = worst.max((rhs - lhs).abs() / lhs.abs().max(f64::MIN_POSITIVE));
    }
    let trace = if m <= 1.0 { boundary_trace(p, m, &f)?.converged } else { true };
    report.push(CheckEntry::at_most(label("weighted_primitive"), worst, 0.0, tol).failing_unless(trace));
    Ok(report)
}

// ---------------------------------------------------------------------------
// Reusable property checks

/// Seeded test functions: sums of one to three positive Gaussian bumps with
/// centres in `[0.3, 4]` and widths in `[0.2, 1]`.
pub fn random_test_functions(rng: &mut ChaCha8Rng, grid: &Arc<Grid>, m: f64, count: usize) -> Vec<GridFunction<f64>> {
    (0..count)
        .map(|_| {
            let k = rng.gen_range(1..=3);
            let bumps: Vec<(f64, f64, f64)> =
                (0..k).map(|_| (rng.gen_range(0.2..1.0), rng.gen_range(0.3..4.0), rng.gen_range(0.2..1.0))).collect();
            GridFunction::sample(grid.clone(), m, move |x: f64| bumps.iter().map(|(a, c, w)| a * (-((x - c) / w).powi(2)).exp()).sum())
        })
        .collect()
}

/// `‖S(t)f‖_{X_m} ≤ (1+tol)‖f‖_{X_m}` and non-increasing along the increasing times `ts`.
/// `measured` is the largest relative increase between consecutive times (starting at `t = 0`).
pub fn contraction_check(p: &KernelParams, m: f64, fns: &[GridFunction<f64>], ts: &[f64], tol: f64) -> Result<CheckEntry> {
    let mut worst = f64::NEG_INFINITY;
    for f in fns {
        let f = f.clone().with_weight(m);
        let mut prev = weighted_norm(&f)?.value;
        for &t in ts {
            let n = weighted_norm(&apply_semigroup_real(p, t, &f, f.grid())?)?.total();
            worst = worst.max(n / prev - 1.0);
            prev = n;
        }
    }
    Ok(CheckEntry::at_most(format!("contraction(kappa={}, m={m})", p.kappa()), worst, 0.0, tol))
}

/// `‖S(0.3)f − S(0.1)S(0.2)f‖_{X_m} / ‖f‖_{X_m}`.
pub fn semigroup_law_defect(p: &KernelParams, f: &GridFunction<f64>) -> Result<f64> {
    let grid = f.grid();
    let a = apply_semigroup_real(p, 0.3, f, grid)?;
    let b = apply_semigroup_real(p, 0.1, &apply_semigroup_real(p, 0.2, f, grid)?, grid)?;
    Ok(weighted_norm(&a.zip_with(&b, |u, v| u - v)?)?.value / weighted_norm(f)?.value)
}

/// Largest relative defect of `∫₀^∞ e^{−λt} k(t,x,r) dt = G(λ,x,r) r^κ` on `pts × pts`.
pub fn laplace_kernel_defect(p: &KernelParams, lambda: f64, pts: &[f64]) -> Result<f64> {
    let rule = GaussLegendre::new(20)?;
    let breaks: Vec<f64> = std::iter::once(0.0).chain(log_space(1e-4, 10.0, 40)).collect();
    let mut worst = 0.0f64;
    for &x in pts {
        for &r in pts {
            let lt: f64 = breaks
                .windows(2)
                .map(|w| {
                    rule.integrate(w[0], w[1], |u: f64| {
                        if u == 0.0 { 0.0 } else { 2.0 * u * (-lambda * u * u).exp() * heat_kernel_real(p, u * u, x, r) }
                    })
                })
                .sum();
            let g = green(p, lambda, x, r)? * r.powf(p.kappa());
            worst = worst.max((lt - g).abs() / g);
        }
    }
    Ok(worst)
}

/// `max_x |∫₀^{T} e^{−λt} (S(t)g)(x) dt − (R(λ)g)(x)| / max_x |R(λ)g|` at the points `xs`.
pub fn laplace_function_defect(p: &KernelParams, lambda: f64, g: &GridFunction<f64>, xs: &[f64], horizon: f64) -> Result<f64> {
    let rule = GaussLegendre::new(20)?;
    let breaks: Vec<f64> = std::iter::once(0.0).chain(log_space(1e-3, horizon.sqrt(), 24)).collect();
    let mut acc = vec![0.0; xs.len()];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        for (&node, &weight) in rule.nodes().iter().zip(rule.weights()) {
            let u = a + half * (node + 1.0);
            let t = u * u;
            let vals = semigroup_at_real(p, t, g, xs)?;
            let c = half * weight * 2.0 * u * (-lambda * t).exp();
            for (s, v) in acc.iter_mut().zip(vals) {
                *s += c * v;
            }
        }
    }
    let r = resolvent_at(p, lambda, g, xs)?;
    Ok(sup_diff(&acc, &r) / sup(&r))
}

/// Observed order of `(e^{hA}f − f)/h → A f` in `X_n` from `h ∈ {4e−3, 2e−3, 1e−3}`.
pub fn generator_residual_order(spec: &OperatorSpec, n: f64, grid: &Arc<Grid>) -> Result<f64> {
    let (c, w) = (1.0, 0.3);
    let f = move |x: f64| (-(x - c) * (x - c) / (w * w)).exp();
    let df = move |x: f64| -2.0 * (x - c) / (w * w) * f(x);
    let d2f = move |x: f64| (4.0 * (x - c) * (x - c) / w.powi(4) - 2.0 / (w * w)) * f(x);
    let fg = GridFunction::sample(grid.clone(), n, f);
    let af = GridFunction::sample(grid.clone(), n, |x| spec.apply(x, f(x), df(x), d2f(x)));
    let err = |h: f64| -> Result<f64> {
        let e = conjugated_semigroup(spec, n, h, &fg)?;
        let q = e.zip_with(&fg, |a, b| (a - b) / h)?;
        Ok(weighted_norm(&q.zip_with(&af, |a, b| a - b)?)?.value)
    };
    let (e1, e2, e3) = (err(4e-3)?, err(2e-3)?, err(1e-3)?);
    Ok(((e1 / e2).log2() + (e2 / e3).log2()) / 2.0)
}

/// Observed order of the Strang splitting from self-differences at `steps`, `2·steps`, `4·steps`, `8·steps`.
pub fn strang_order(p: &KernelParams, omega: &Potential, t: f64, steps: usize, f: &GridFunction<f64>) -> Result<f64> {
    let runs = [1, 2, 4, 8].iter().map(|k| evolve_absorbed(p, omega, t, steps * k, f)).collect::<Result<Vec<_>>>()?;
    let d = runs
        .windows(2)
        .map(|r| Ok(weighted_norm(&r[0].zip_with(&r[1], |a, b| a - b)?)?.value))
        .collect::<Result<Vec<f64>>>()?;
    Ok(((d[0] / d[1]).log2() + (d[1] / d[2]).log2()) / 2.0)
}

/// `0 ≤ u^ω ≤ u^0` pointwise up to twice the splitting error `‖u_N − u_{2N}‖_∞`.
/// `measured` is the worst violation in units of that allowance.
pub fn domination_check(p: &KernelParams, omega: &Potential, t: f64, steps: usize, f: &GridFunction<f64>) -> Result<CheckEntry> {
    let u0 = evolve_absorbed(p, &Potential::zero(), t, 1, f)?;
    let un = evolve_absorbed(p, omega, t, steps, f)?;
    let u2 = evolve_absorbed(p, omega, t, 2 * steps, f)?;
    let allowance = 2.0 * sup_diff(un.values(), u2.values()) + 1e-14 * u0.max_abs();
    let worst = u2
        .values()
        .iter()
        .zip(u0.values())
        .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(-a).max(a - b));
    Ok(CheckEntry::at_most(format!("absorption_domination({omega})"), worst / allowance, 1.0, 0.0))
}

// ---------------------------------------------------------------------------
// Registry

struct Ctx<'a> {
    params: &'a BTreeMap<String, f64>,
    tol: f64,
    rng: ChaCha8Rng,
}

impl Ctx<'_> {
    fn get(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn count(&self, key: &str, default: usize) -> usize {
        self.params.get(key).map_or(default, |v| v.max(1.0) as usize)
    }

    fn grid(&self, x_max: f64, panels: usize, order: usize) -> Result<Arc<Grid>> {
        Ok(Arc::new(make_geometric_grid(
            self.get("grid_xmin", 1e-6),
            self.get("grid_xmax", x_max),
            self.count("grid_panels", panels),
            self.count("grid_order", order),
        )?))
    }
}

type CheckFn = fn(&mut Ctx) -> Result<VerificationReport>;

struct Registered {
    name: &'static str,
    mode: CheckMode,
    tolerance: f64,
    default: bool,
    run: CheckFn,
}

fn bump(grid: &Arc<Grid>, m: f64, c: f64, w: f64) -> GridFunction<f64> {
    GridFunction::sample(grid.clone(), m, move |x: f64| (-((x - c) / w).powi(2)).exp())
}

fn single(e: CheckEntry) -> VerificationReport {
    let mut r = VerificationReport::new();
    r.push(e);
    r
}

fn chk_bessel_golden(c: &mut Ctx) -> Result<VerificationReport> {
    let mut r = VerificationReport::new();
    let half = BesselOrder::new(0.5)?;
    let i = bessel_i(half, Complex64::new(1.0, 0.0))?.re();
    let i_exact = (2.0 / PI).sqrt() * 1f64.sinh();
    let k = bessel_k(half, 1.0)?.re();
    let k_exact = (PI / 2.0).sqrt() * (-1f64).exp();
    r.push(CheckEntry::at_most("bessel_golden.I_half(1)", ((i - i_exact) / i_exact).abs(), 0.0, c.tol));
    r.push(CheckEntry::at_most("bessel_golden.K_half(1)", ((k - k_exact) / k_exact).abs(), 0.0, c.tol));
    Ok(r)
}

fn chk_bessel_wronskian(c: &mut Ctx) -> Result<VerificationReport> {
    let mut r = VerificationReport::new();
    for nu in [0.1, 0.25, 0.5, 1.3] {
        let order = BesselOrder::new(nu)?;
        let mut worst = 0.0f64;
        for x in log_space(1e-2, 1e2, 100) {
            worst = worst.max((wronskian(order, x)? * x + 1.0).abs());
        }
        r.push(CheckEntry::at_most(format!("bessel_wronskian(nu={nu})"), worst, 0.0, c.tol));
    }
    Ok(r)
}

fn dirichlet(t: f64, x: f64, r: f64) -> f64 {
    (-(x - r) * (x - r) / (4.0 * t)).exp() * (-(-x * r / t).exp_m1()) / (4.0 * PI * t).sqrt()
}

/// Largest relative error of `k_0` against the Dirichlet half-line kernel on a 30×30 lattice.
pub fn dirichlet_defect(t: f64) -> f64 {
    let p = KernelParams::new(0.0).expect("κ = 0 is valid");
    let pts = log_space(0.02, 6.0, 30);
    let mut worst = 0.0f64;
    for &x in &pts {
        for &r in &pts {
            let o = dirichlet(t, x, r);
            if o >= f64::MIN_POSITIVE {
                worst = worst.max((heat_kernel_real(&p, t, x, r) - o).abs() / o);
            }
        }
    }
    worst
}

fn chk_kernel_dirichlet(c: &mut Ctx) -> Result<VerificationReport> {
    let mut r = VerificationReport::new();
    for t in [0.01, 0.1, 1.0] {
        r.push(CheckEntry::at_most(format!("kernel_dirichlet(t={t})"), dirichlet_defect(t), 0.0, c.tol));
    }
    Ok(r)
}

/// Largest relative defect of `x^κ k(z,x,r) = r^κ k(z,r,x)` at `|z| = 0.5` and the given phase.
pub fn symmetry_defect(kappas: &[f64], phase: f64) -> Result<f64> {
    let pts = log_space(0.03, 4.0, 12);
    let mut worst = 0.0f64;
    for &kappa in kappas {
        let p = KernelParams::new(kappa)?;
        let z = SectorPoint::new(0.5, phase)?;
        for &x in &pts {
            for &r in &pts {
                let a = heat_kernel(&p, z, x, r)? * x.powf(kappa);
                let b = heat_kernel(&p, z, r, x)? * r.powf(kappa);
                if a.norm() >= f64::MIN_POSITIVE {
                    worst = worst.max((a - b).norm() / a.norm());
                }
            }
        }
    }
    Ok(worst)
}

fn chk_kernel_symmetry(c: &mut Ctx) -> Result<VerificationReport> {
    let mut r = VerificationReport::new();
    for phase in [0.0, FRAC_PI_4] {
        r.push(CheckEntry::at_most(format!("kernel_symmetry(phase={phase})"), symmetry_defect(&[-1.0, 0.0, 0.5], phase)?, 0.0, c.tol));
    }
    Ok(r)
}

fn chk_kernel_scaling(c: &mut Ctx) -> Result<VerificationReport> {
    let mut worst = 0.0f64;
    for kappa in [-1.0, 0.0, 0.5] {
        let p = KernelParams::new(kappa)?;
        for t in [1e-3, 0.2, 30.0] {
            for (x, r) in [(0.7, 1.9), (0.05, 0.3), (2.0, 2.5)] {
                let lhs = heat_kernel_real(&p, t, t.sqrt() * x, t.sqrt() * r);
                let rhs = heat_kernel_real(&p, 1.0, x, r) / t.sqrt();
                worst = worst.max((lhs - rhs).abs() / rhs);
            }
        }
    }
    Ok(single(CheckEntry::at_most("kernel_scaling", worst, 0.0, c.tol)))
}

fn chk_gaussian_bound(c: &mut Ctx) -> Result<VerificationReport> {
    let p = KernelParams::new(c.get("kappa", 0.0))?;
    let mut r = VerificationReport::new();
    for phase in [0.0, FRAC_PI_4] {
        let fit = fit_gaussian_bound(&p, phase)?;
        r.push(CheckEntry::at_most(format!("gaussian_bound(kappa={}, phase={phase})", p.kappa()), fit.validation_ratio, 1.0, c.tol));
        r.note(format!("phase={phase}.C"), fit.c);
        r.note(format!("phase={phase}.s"), fit.s);
    }
    Ok(r)
}

fn chk_z_derivative(c: &mut Ctx) -> Result<VerificationReport> {
    let p = KernelParams::new(c.get("kappa", 0.0))?;
    let mut r = VerificationReport::new();
    for phase in [0.0, FRAC_PI_4] {
        let (e, cfit) = z_derivative_bound(&p, phase, c.tol)?;
        r.push(e);
        r.note(format!("phase={phase}.C"), cfit);
    }
    Ok(r)
}

fn chk_q_diagonal(c: &mut Ctx) -> Result<VerificationReport> {
    let mut worst = 0.0f64;
    for (s, a, b) in [(2.0, -0.5, -1.0), (1.0, 0.3, 0.2), (4.0, -2.0, -2.0)] {
        for t in [1e-2, 1.0] {
            for x in [0.01, 0.1, 0.5, 3.0] {
                let v = q_kernel(s, a, b, t, x, x);
                let e = (x / t.sqrt()).min(1.0).powf(-a - b) / t.sqrt();
                worst = worst.max((v - e).abs() / e);
            }
        }
    }
    Ok(single(CheckEntry::at_most("q_diagonal", worst, 0.0, c.tol)))
}

fn chk_q_mass(c: &mut Ctx) -> Result<VerificationReport> {
    let s = c.get("s", 2.0);
    let grid = c.grid(40.0, 80, 8)?;
    let n = c.count("count", 3);
    let fns = random_test_functions(&mut c.rng, &grid, 0.0, n);
    let mut worst = 0.0f64;
    for f in &fns {
        let n0 = weighted_norm(f)?.value;
        for t in [0.01, 0.1, 1.0] {
            let q = q_apply(s, 0.0, 0.0, t, f, &grid)?;
            worst = worst.max(weighted_norm(&q)?.total() / (n0 * (PI * s).sqrt()));
        }
    }
    Ok(single(CheckEntry::at_most(format!("q_gaussian_mass(s={s})"), worst, 1.0, c.tol)))
}

fn chk_q_slope(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = slope_grid();
    let ts = log_space(1e-3, 1.0, 7);
    let mut r = VerificationReport::new();
    for (s, a, b, m, theta) in [(2.0, -0.5, -1.0, 0.0, 0.5), (2.0, 0.0, 0.0, 0.5, 1.0)] {
        let fit = q_slope(s, a, b, m, theta, &ts, &grid)?;
        let label = format!("q_slope(s={s}, alpha={a}, beta={b}, m={m}, theta={theta})");
        slope_entries(&mut r, &label, &fit, -theta / 2.0, c.tol * theta / 2.0);
        r.note(format!("{label}.within_hypothesis"), q_hypothesis(a, b, m, theta));
    }
    Ok(r)
}

fn chk_smoothing(c: &mut Ctx) -> Result<VerificationReport> {
    let p = KernelParams::new(c.get("kappa", 0.0))?;
    smoothing_suite(&p, c.get("m", 1.0), &[0.0, 0.5, 1.0])
}

fn chk_semigroup_law(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = c.grid(40.0, 100, 10)?;
    let mut r = VerificationReport::new();
    for kappa in [-1.0, 0.0, 0.5] {
        let p = KernelParams::new(kappa)?;
        for m in [0.0, 1.0] {
            let d = semigroup_law_defect(&p, &bump(&grid, m, 1.5, 0.5))?;
            r.push(CheckEntry::at_most(format!("semigroup_law(kappa={kappa}, m={m})"), d, 0.0, c.tol));
        }
    }
    Ok(r)
}

fn chk_contraction(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = c.grid(80.0, 120, 12)?;
    let n = c.count("count", 1);
    let mut r = VerificationReport::new();
    for (kappa, m) in [(0.0, 0.5), (0.0, 1.0), (-1.0, 0.0)] {
        let fns = random_test_functions(&mut c.rng, &grid, m, n);
        r.push(contraction_check(&KernelParams::new(kappa)?, m, &fns, &[0.1, 1.0, 10.0], c.tol)?);
    }
    Ok(r)
}

fn resolvent_grid(c: &Ctx) -> Result<Arc<Grid>> {
    c.grid(60.0, 100, 10)
}

fn chk_resolvent_identity(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = resolvent_grid(c)?;
    let p = KernelParams::new(c.get("kappa", 0.3))?;
    let g = random_test_functions(&mut c.rng, &grid, 0.6, 1).remove(0);
    let (l, mu) = (1.0, 2.0);
    let rl = apply_resolvent(&p, l, &g, &grid)?;
    let rm = apply_resolvent(&p, mu, &g, &grid)?;
    let rlm = apply_resolvent(&p, l, &rm, &grid)?;
    let lhs: Vec<f64> = rl.values().iter().zip(rm.values()).map(|(a, b)| a - b).collect();
    let rhs: Vec<f64> = rlm.values().iter().map(|v| (mu - l) * v).collect();
    Ok(single(CheckEntry::at_most(format!("resolvent_identity(kappa={})", p.kappa()), sup_diff(&lhs, &rhs) / sup(&rhs), 0.0, c.tol)))
}

fn chk_resolvent_positivity(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = resolvent_grid(c)?;
    let (kappa, m) = (c.get("kappa", 0.1), c.get("m", 0.6));
    let p = KernelParams::new(kappa)?;
    let mut r = VerificationReport::new();
    let mut neg = 0.0f64;
    let mut growth = f64::NEG_INFINITY;
    let n = c.count("count", 3);
    for g in random_test_functions(&mut c.rng, &grid, m, n) {
        for lambda in [0.5, 1.0, 4.0] {
            let f = apply_resolvent(&p, lambda, &g, &grid)?;
            neg = neg.max(f.values().iter().fold(0.0f64, |a, &v| a.max(-v)) / f.max_abs());
            growth = growth.max(lambda * weighted_norm(&f)?.value / weighted_norm(&g)?.value - 1.0);
        }
    }
    r.push(CheckEntry::at_most(format!("resolvent_positivity(kappa={kappa})"), neg, 0.0, 1e-14));
    r.push(CheckEntry::at_most(format!("resolvent_contraction(kappa={kappa}, m={m})"), growth, 0.0, c.tol));
    Ok(r)
}

fn chk_laplace_kernel(c: &mut Ctx) -> Result<VerificationReport> {
    let mut r = VerificationReport::new();
    let pts = log_space(0.2, 3.0, 8);
    for kappa in [0.0, -1.0, 0.5] {
        let d = laplace_kernel_defect(&KernelParams::new(kappa)?, 1.0, &pts)?;
        r.push(CheckEntry::at_most(format!("laplace_kernel(kappa={kappa})"), d, 0.0, c.tol));
    }
    Ok(r)
}

fn chk_laplace_function(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = resolvent_grid(c)?;
    let p = KernelParams::new(c.get("kappa", 0.0))?;
    let g = bump(&grid, 0.5, 1.5, 0.5);
    let d = laplace_function_defect(&p, 1.0, &g, &log_space(0.1, 5.0, 20), 40.0)?;
    Ok(single(CheckEntry::at_most(format!("laplace_function(kappa={})", p.kappa()), d, 0.0, c.tol)))
}

fn trace_entry(name: String, p: &KernelParams, m: f64, grid: &Arc<Grid>, tol: f64) -> Result<CheckEntry> {
    let g = bump(grid, m, 1.2, 0.4);
    let f = apply_resolvent(p, 1.0, &g, grid)?;
    let tr = boundary_trace(p, m, &f)?;
    let measured = if tr.converged { tr.limit.abs() / f.max_abs() } else { f64::INFINITY };
    Ok(CheckEntry::at_most(name, measured, 0.0, tol).failing_unless(tr.converged))
}

fn chk_boundary_traces(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = resolvent_grid(c)?;
    let mut r = VerificationReport::new();
    r.push(trace_entry("boundary_trace(kappa=0, m=1)".into(), &KernelParams::new(0.0)?, 1.0, &grid, c.tol)?);
    r.push(trace_entry("boundary_trace(kappa=0.2, m=0.7)".into(), &KernelParams::new(0.2)?, 0.7, &grid, c.tol)?);
    Ok(r)
}

fn chk_dissipativity(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = resolvent_grid(c)?;
    let n = c.count("count", 2);
    let mut r = VerificationReport::new();
    for (kappa, m, lambda) in [(0.1, 0.6, 1.0), (0.0, 1.0, 2.0)] {
        let p = KernelParams::new(kappa)?;
        let mut worst: Option<CheckEntry> = None;
        for g in random_test_functions(&mut c.rng, &grid, m, n) {
            let e = dissipativity_check(&p, m, lambda, &g, &grid, c.tol)?;
            if worst.as_ref().map_or(true, |w| e.measured < w.measured) {
                worst = Some(e);
            }
        }
        r.push(worst.expect("count ≥ 1"));
    }
    Ok(r)
}

fn chk_remark_thresholds(c: &mut Ctx) -> Result<VerificationReport> {
    let mut worst = 0.0f64;
    for alpha in [0.0, 1.0, 1.5, -2.0] {
        let plan = default_plan(&OperatorSpec::new(alpha, 2.0 * alpha, alpha * (alpha - 1.0))?)?;
        let Thresholds::Singular { n_star, n_star_minus, n_star_plus } = plan.thresholds else {
            return Err(Error::Parameter("expected singular thresholds".into()));
        };
        worst = worst.max((n_star - (alpha - 2.0)).abs()).max(n_star_minus.abs()).max((n_star_plus - 1.0).abs());
    }
    Ok(single(CheckEntry::at_most("remark_thresholds", worst, 0.0, c.tol)))
}

fn chk_identity_reduction(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = c.grid(50.0, 90, 10)?;
    let f = bump(&grid, 0.5, 1.0, 0.6);
    let a = conjugated_semigroup(&OperatorSpec::new(0.0, 0.0, 0.0)?, 0.5, 0.3, &f)?;
    let b = apply_semigroup_real(&KernelParams::new(0.0)?, 0.3, &f, &grid)?;
    Ok(single(CheckEntry::at_most("identity_reduction", sup_diff(a.values(), b.values()) / b.max_abs(), 0.0, c.tol)))
}

fn chk_isometry(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = c.grid(50.0, 90, 10)?;
    let f = GridFunction::sample(grid.clone(), 0.4, |x: f64| x.sqrt() * (-(x - 1.5).powi(2)).exp());
    let n0 = weighted_norm(&f)?.value;
    let mut t_worst = 0.0f64;
    for beta in [0.5, -0.4, 2.0] {
        t_worst = t_worst.max((weighted_norm(&remap(&f, beta)?)?.value - n0).abs() / n0);
    }
    let mut m_worst = 0.0f64;
    for l in [-0.7, 0.3, 1.5] {
        m_worst = m_worst.max((weighted_norm(&multiply(&f, l))?.value - n0).abs() / n0);
    }
    let mut r = VerificationReport::new();
    r.push(CheckEntry::at_most("isometry.T_beta", t_worst, 0.0, c.tol));
    r.push(CheckEntry::at_most("isometry.M_l", m_worst, 0.0, c.tol));
    Ok(r)
}

fn chk_generator_residual(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = c.grid(50.0, 90, 10)?;
    let mut r = VerificationReport::new();
    for (a, b, bb, n) in [(1.0, 0.5, -0.3, 0.0), (-1.0, 2.0, 0.1, 2.5)] {
        let spec = OperatorSpec::new(a, b, bb)?;
        if classify_case(&spec, n)? != Case::C2 {
            return Err(Error::OutOfRange(format!("{spec:?} at n = {n} is not in case c2")));
        }
        let order = generator_residual_order(&spec, n, &grid)?;
        r.push(CheckEntry::at_least(format!("generator_residual(alpha={a}, a={b}, b={bb}, n={n})"), order, 0.9, c.tol));
    }
    Ok(r)
}

fn classify_case(spec: &OperatorSpec, n: f64) -> Result<Case> {
    Ok(default_plan(spec)?.classify(n).case)
}

fn absorption_grid(c: &Ctx) -> Result<Arc<Grid>> {
    c.grid(30.0, 60, 8)
}

fn chk_absorption_constant(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = absorption_grid(c)?;
    let p = KernelParams::new(0.0)?;
    let f = bump(&grid, 0.5, 1.5, 0.5);
    let k = c.get("c", 1.7);
    let t = 0.5;
    let u = evolve_absorbed(&p, &format!("const:{k}").parse()?, t, c.count("steps", 4), &f)?;
    let s = apply_semigroup_real(&p, t, &f, &grid)?;
    let e: Vec<f64> = s.values().iter().map(|v| (-k * t).exp() * v).collect();
    Ok(single(CheckEntry::at_most(format!("absorption_constant(c={k})"), sup_diff(u.values(), &e) / sup(&e), 0.0, c.tol)))
}

fn chk_absorption_domination(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = absorption_grid(c)?;
    let f = bump(&grid, 0.5, 1.5, 0.5);
    Ok(single(domination_check(&KernelParams::new(0.0)?, &"linear:1".parse()?, 0.5, 8, &f)?))
}

fn chk_strang_order(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = absorption_grid(c)?;
    let f = bump(&grid, 0.5, 1.5, 0.5);
    let order = strang_order(&KernelParams::new(0.0)?, &"linear:1".parse()?, 0.5, 2, &f)?;
    Ok(single(CheckEntry::close("strang_order(linear:1)", order, 2.0, c.tol)))
}

fn chk_truncation(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = absorption_grid(c)?;
    let f = bump(&grid, 0.5, 1.5, 0.5);
    let study = truncated_convergence(&KernelParams::new(0.0)?, &"linear:1".parse()?, 0.5, 4, &f, &[1.0, 2.0, 4.0, 8.0, 16.0], 64.0, c.tol)?;
    let mut r = single(study.entry);
    r.note("defects", json!(study.defects));
    Ok(r)
}

fn chk_appendix_b(c: &mut Ctx) -> Result<VerificationReport> {
    let grid = resolvent_grid(c)?;
    let g = GridFunction::sample(grid.clone(), 1.0, |x: f64| {
        let u = x - 1.5;
        if u.abs() < 1.0 { (-1.0 / (1.0 - u * u)).exp() } else { 0.0 }
    });
    let mut r = VerificationReport::new();
    for (kappa, m) in [(0.0, 1.0), (0.2, 0.8)] {
        r.merge(&format!("kappa={kappa},m={m}"), appendix_b_suite(&KernelParams::new(kappa)?, m, &g.clone().with_weight(m))?);
    }
    Ok(r)
}

const REGISTRY: &[Registered] = &[
    Registered { name: "bessel_golden", mode: CheckMode::Exact, tolerance: 1e-12, default: true, run: chk_bessel_golden },
    Registered { name: "bessel_wronskian", mode: CheckMode::Exact, tolerance: 1e-10, default: true, run: chk_bessel_wronskian },
    Registered { name: "kernel_dirichlet", mode: CheckMode::Exact, tolerance: 1e-10, default: true, run: chk_kernel_dirichlet },
    Registered { name: "kernel_symmetry", mode: CheckMode::Exact, tolerance: 1e-12, default: true, run: chk_kernel_symmetry },
    Registered { name: "kernel_scaling", mode: CheckMode::Exact, tolerance: 1e-12, default: true, run: chk_kernel_scaling },
    Registered { name: "gaussian_bound", mode: CheckMode::Ordering, tolerance: 1e-12, default: true, run: chk_gaussian_bound },
    Registered { name: "z_derivative_bound", mode: CheckMode::Ordering, tolerance: 1e-12, default: true, run: chk_z_derivative },
    Registered { name: "q_diagonal", mode: CheckMode::Exact, tolerance: 1e-14, default: true, run: chk_q_diagonal },
    Registered { name: "q_gaussian_mass", mode: CheckMode::Ordering, tolerance: 1e-8, default: true, run: chk_q_mass },
    Registered { name: "semigroup_law", mode: CheckMode::Exact, tolerance: 1e-6, default: true, run: chk_semigroup_law },
    Registered { name: "contraction", mode: CheckMode::Ordering, tolerance: 1e-8, default: true, run: chk_contraction },
    Registered { name: "resolvent_identity", mode: CheckMode::Exact, tolerance: 1e-8, default: true, run: chk_resolvent_identity },
    Registered { name: "resolvent_positivity", mode: CheckMode::Ordering, tolerance: 1e-8, default: true, run: chk_resolvent_positivity },
    Registered { name: "laplace_kernel", mode: CheckMode::Exact, tolerance: 1e-5, default: true, run: chk_laplace_kernel },
    Registered { name: "boundary_traces", mode: CheckMode::Exact, tolerance: 1e-4, default: true, run: chk_boundary_traces },
    Registered { name: "dissipativity", mode: CheckMode::Ordering, tolerance: 1e-6, default: true, run: chk_dissipativity },
    Registered { name: "remark_thresholds", mode: CheckMode::Exact, tolerance: 1e-14, default: true, run: chk_remark_thresholds },
    Registered { name: "identity_reduction", mode: CheckMode::Exact, tolerance: 1e-10, default: true, run: chk_identity_reduction },
    Registered { name: "isometry", mode: CheckMode::Exact, tolerance: 1e-10, default: true, run: chk_isometry },
    Registered { name: "absorption_constant", mode: CheckMode::Exact, tolerance: 1e-10, default: true, run: chk_absorption_constant },
    Registered { name: "absorption_domination", mode: CheckMode::Ordering, tolerance: 1e-12, default: true, run: chk_absorption_domination },
    Registered { name: "truncation", mode: CheckMode::Ordering, tolerance: 1e-12, default: true, run: chk_truncation },
    Registered { name: "generator_residual", mode: CheckMode::SlopeFit, tolerance: 1e-12, default: false, run: chk_generator_residual },
    Registered { name: "strang_order", mode: CheckMode::SlopeFit, tolerance: 0.2, default: false, run: chk_strang_order },
    Registered { name: "laplace_function", mode: CheckMode::Exact, tolerance: 1e-4, default: false, run: chk_laplace_function },
    Registered { name: "appendix_b", mode: CheckMode::Exact, tolerance: 1e-4, default: false, run: chk_appendix_b },
    Registered { name: "q_slope", mode: CheckMode::SlopeFit, tolerance: 0.05, default: false, run: chk_q_slope },
    Registered { name: "smoothing", mode: CheckMode::SlopeFit, tolerance: 0.05, default: false, run: chk_smoothing },
];

/// Names of all registered checks.
pub fn registered_checks() -> Vec<&'static str> {
    REGISTRY.iter().map(|r| r.name).collect()
}

fn spec_for(r: &Registered) -> CheckSpec {
    CheckSpec { name: r.name.to_string(), parameters: BTreeMap::new(), tolerance: r.tolerance, mode: r.mode }
}

/// Checks that run in the default suite.
pub fn default_suite() -> Vec<CheckSpec> {
    REGISTRY.iter().filter(|r| r.default).map(spec_for).collect()
}

/// Every registered check, including the slow ones.
pub fn full_suite() -> Vec<CheckSpec> {
    REGISTRY.iter().map(spec_for).collect()
}

/// `default`, `full`, or a comma-separated list of check names.
pub fn suite_by_name(name: &str) -> Result<Vec<CheckSpec>> {
    match name {
        "default" => Ok(default_suite()),
        "full" => Ok(full_suite()),
        "" => Ok(Vec::new()),
        list => list
            .split(',')
            .map(|n| {
                let n = n.trim();
                REGISTRY.iter().find(|r| r.name == n).map(spec_for).ok_or_else(|| Error::UnknownCheck(n.to_string()))
            })
            .collect(),
    }
}

/// Runs the checks in parallel; each check draws from its own ChaCha8 stream
/// of `seed`, so the report does not depend on scheduling.
pub fn run_suite(suite: &[CheckSpec], seed: u64) -> Result<VerificationReport> {
    let mut seen = BTreeSet::new();
    let mut jobs = Vec::new();
    for spec in suite {
        let idx = REGISTRY.iter().position(|r| r.name == spec.name).ok_or_else(|| Error::UnknownCheck(spec.name.clone()))?;
        if !seen.insert(spec.name.as_str()) {
            return Err(Error::Config(format!("check `{}` listed twice", spec.name)));
        }
        if !(spec.tolerance > 0.0 && spec.tolerance.is_finite()) {
            return Err(Error::Config(format!("check `{}` needs a positive tolerance", spec.name)));
        }
        jobs.push((idx, spec));
    }
    let results = jobs
        .par_iter()
        .map(|&(idx, spec)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            let mut ctx = Ctx { params: &spec.parameters, tol: spec.tolerance, rng };
            (REGISTRY[idx].run)(&mut ctx)
        })
        .collect::<Vec<_>>();
    let mut report = VerificationReport::new();
    for ((_, spec), res) in jobs.iter().zip(results) {
        report.merge(&spec.name, res?);
    }
    report.note("seed", seed);
    report.note("version", crate::VERSION);
    report.note("checks", json!(suite.iter().map(|s| s.name.clone()).collect::<Vec<_>>()));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_suite_passes_and_unknown_check_errors() {
        let r = run_suite(&[], 7).unwrap();
        assert!(r.pass && r.entries.is_empty());
        assert!(matches!(suite_by_name("nope"), Err(Error::UnknownCheck(_))));
        let bad = CheckSpec { name: "nope".into(), parameters: BTreeMap::new(), tolerance: 1.0, mode: CheckMode::Exact };
        assert!(matches!(run_suite(&[bad], 7), Err(Error::UnknownCheck(_))));
        let dup = suite_by_name("q_diagonal,q_diagonal").unwrap();
        assert!(run_suite(&dup, 7).is_err());
    }

    #[test]
    fn failing_entry_fails_report() {
        let mut r = VerificationReport::new();
        r.push(CheckEntry::at_most("a", 0.0, 1.0, 0.0));
        assert!(r.pass);
        r.push(CheckEntry::at_least("b", 0.0, 1.0, 0.0));
        assert!(!r.pass);
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["pass"], false);
        assert_eq!(v["entries"][1]["name"], "b");
    }

    #[test]
    fn q_kernel_diagonal_and_mass() {
        let mut spec = suite_by_name("q_diagonal,q_gaussian_mass,bessel_golden").unwrap();
        spec[1].parameters.insert("count".into(), 2.0);
        let r = run_suite(&spec, 3).unwrap();
        assert!(r.pass, "{}", r.to_json());
        assert_eq!(q_kernel(2.0, 0.0, 0.0, 1.0, 1.0, 1.0), 1.0);
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let ts = log_space(1e-3, 1.0, 7);
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * t.powf(-0.25)).collect();
        let fit = fit_loglog(&ts, &ys).unwrap();
        assert!((fit.slope + 0.25).abs() < 1e-12 && (fit.constant - 3.0).abs() < 1e-12 && fit.loo_max_change < 1e-12);
        assert!(fit_loglog(&ts[..2], &ys[..2]).is_err());
    }

    #[test]
    fn preconditions_are_enforced() {
        let g = slope_grid();
        assert!(q_slope(2.0, 0.0, 0.0, 0.0, -0.5, &[0.1, 0.2, 0.3], &g).is_err());
        assert!(q_hypothesis(-0.5, -1.0, 0.0, 0.5) && !q_hypothesis(0.0, 0.0, 0.5, 1.0));
        let p = KernelParams::new(0.0).unwrap();
        assert!(smoothing_slopes(&p, 1.0, &[], 0.0, &[0.1], &g).is_err());
        let f = GridFunction::sample(g.clone(), 1.0, |_| 0.0);
        assert!(appendix_b_suite(&p, 0.0, &f).is_err());
    }

    #[test]
    fn z_derivative_is_dominated() {
        let (e, c) = z_derivative_bound(&KernelParams::new(0.3).unwrap(), FRAC_PI_4, 1e-12).unwrap();
        assert!(e.pass && c.is_finite(), "{e:?}");
    }

    #[test]
    fn reports_are_deterministic() {
        let suite = suite_by_name("contraction,dissipativity").unwrap();
        let a = run_suite(&suite, 11).unwrap().to_json();
        let b = run_suite(&suite, 11).unwrap().to_json();
        assert_eq!(a, b);
        assert!(a.contains("\"seed\": 11"));
    }
}
