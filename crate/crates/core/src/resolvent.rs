//! The Green function
//!
//! `G_κ(λ,x,r) = (xr)^ν I_ν(√λ (x∧r)) K_ν(√λ (x∨r))`, `ν = (1−κ)/2`,
//!
//! and the resolvent `(λ − G_κ)^{−1} g (x) = ∫₀^∞ G_κ(λ,x,r) g(r) r^κ dr` for real `λ > 0`.

use rayon::prelude::*;
use std::sync::Arc;

use crate::bessel::{i_exp_scaled_real, k_exp_scaled};
use crate::kernel::KernelParams;
use crate::spaces::{integrate_against, sub_rule, weighted_norm_with, Grid, GridFunction};
use crate::verify::CheckEntry;
use crate::{Error, Result};

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain(format!("λ = {lambda}"), "only real λ > 0 is supported".into()));
    }
    Ok(())
}

fn green_unchecked(p: &KernelParams, sqrt_lambda: f64, x: f64, r: f64) -> f64 {
    let (lo, hi) = if x <= r { (x, r) } else { (r, x) };
    let i = i_exp_scaled_real(p.nu(), sqrt_lambda * lo);
    if i == 0.0 {
        return 0.0;
    }
    let k = k_exp_scaled(p.nu(), sqrt_lambda * hi);
    let log = p.nu() * (x * r).ln() + i.ln() + k.ln_abs() - sqrt_lambda * (hi - lo);
    log.exp()
}

/// `G_κ(λ,x,r)`, symmetric in `(x, r)` and continuous across the diagonal.
pub fn green(p: &KernelParams, lambda: f64, x: f64, r: f64) -> Result<f64> {
    check_lambda(lambda)?;
    for (name, v) in [("x", x), ("r", r)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("{name} = {v}"), "Green function arguments must be positive".into()));
        }
    }
    Ok(green_unchecked(p, lambda.sqrt(), x, r))
}

/// `(λ − G_κ)^{−1} g` evaluated at arbitrary points.
///
/// `G` factorises as `A(x∧r) B(x∨r)` with `A(y) = y^ν I_ν(√λ y)` and
/// `B(y) = y^ν K_ν(√λ y)`, so the integral splits into prefix sums of `A g r^κ`
/// and suffix sums of `B g r^κ` over whole panels plus a partial panel
/// around `x`. Falls back to direct quadrature when `e^{±√λ x}` would leave
/// the floating-point range.
pub fn resolvent_at(p: &KernelParams, lambda: f64, g: &GridFunction<f64>, xs: &[f64]) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let s = lambda.sqrt();
    let (_, hi) = g.grid().span();
    let x_top = xs.iter().fold(hi, |a, &x| a.max(x));
    if s * x_top > 600.0 {
        return Ok(resolvent_direct(p, s, g, xs));
    }
    Ok(Factorised::new(p, s, g).eval_many(xs))
}

fn resolvent_direct(p: &KernelParams, s: f64, g: &GridFunction<f64>, xs: &[f64]) -> Vec<f64> {
    let reach = 40.0 / s;
    let h = 0.5 / s;
    xs.par_iter()
        .map(|&x| integrate_against(g, x - reach, x + reach, &[x], h, |r, gr: f64| green_unchecked(p, s, x, r) * gr * r.powf(p.kappa())))
        .collect()
}

struct Factorised<'a> {
    p: KernelParams,
    s: f64,
    g: &'a GridFunction<f64>,
    h: f64,
    /// Panels in x-order: (lo, hi, reference index).
    panels: Vec<(f64, f64, usize)>,
    /// `∫ A g r^κ` over all panels strictly before panel `i`.
    prefix: Vec<f64>,
    /// `∫ B g r^κ` over all panels strictly after panel `i`.
    suffix: Vec<f64>,
}

impl<'a> Factorised<'a> {
    fn a(&self, y: f64) -> f64 {
        let nu = self.p.nu();
        y.powf(nu) * i_exp_scaled_real(nu, self.s * y) * (self.s * y).exp()
    }

    fn b(&self, y: f64) -> f64 {
        let nu = self.p.nu();
        let k = k_exp_scaled(nu, self.s * y);
        (nu * y.ln() + k.ln_abs() - self.s * y).exp()
    }

    fn piece(&self, panel: usize, lo: f64, hi: f64, weight: impl Fn(&Self, f64) -> f64) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        let (_, _, p_ref) = self.panels[panel];
        let grid = self.g.grid();
        let kappa = self.p.kappa();
        let k = ((hi - lo) / self.h).ceil().max(1.0) as usize;
        let step = (hi - lo) / k as f64;
        (0..k)
            .map(|q| {
                let a = lo + step * q as f64;
                let b = if q + 1 == k { hi } else { a + step };
                sub_rule().integrate(a, b, |r| weight(self, r) * grid.interpolate_in_panel(self.g.values(), p_ref, r) * r.powf(kappa))
            })
            .sum()
    }

    fn new(p: &KernelParams, s: f64, g: &'a GridFunction<f64>) -> Self {
        let panels = g.grid().panels_x();
        let mut me = Self { p: *p, s, g, h: 0.5 / s, panels, prefix: Vec::new(), suffix: Vec::new() };
        let whole: Vec<(f64, f64)> = (0..me.panels.len())
            .into_par_iter()
            .map(|i| {
                let (lo, hi, _) = me.panels[i];
                (me.piece(i, lo, hi, Self::a), me.piece(i, lo, hi, Self::b))
            })
            .collect();
        let n = whole.len();
        let mut prefix = vec![0.0; n];
        let mut suffix = vec![0.0; n];
        for i in 1..n {
            prefix[i] = prefix[i - 1] + whole[i - 1].0;
        }
        for i in (0..n - 1).rev() {
            suffix[i] = suffix[i + 1] + whole[i + 1].1;
        }
        me.prefix = prefix;
        me.suffix = suffix;
        me
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.panels.len();
        let (lo, _, _) = self.panels[0];
        let (_, hi, _) = self.panels[n - 1];
        if x <= lo {
            return self.a(x) * (self.suffix[0] + self.piece(0, lo, self.panels[0].1, Self::b));
        }
        if x >= hi {
            return self.b(x) * (self.prefix[n - 1] + self.piece(n - 1, self.panels[n - 1].0, hi, Self::a));
        }
        let i = self.panels.partition_point(|&(_, b, _)| b < x).min(n - 1);
        let (a, b, _) = self.panels[i];
        let below = self.prefix[i] + self.piece(i, a, x, Self::a);
        let above = self.suffix[i] + self.piece(i, x, b, Self::b);
        self.a(x) * above + self.b(x) * below
    }

    fn eval_many(&self, xs: &[f64]) -> Vec<f64> {
        xs.par_iter().map(|&x| self.eval(x)).collect()
    }
}

/// `(λ − G_κ)^{−1} g` on the nodes of `out`, in the same space `X_m` as `g`.
pub fn apply_resolvent(p: &KernelParams, lambda: f64, g: &GridFunction<f64>, out: &Arc<Grid>) -> Result<GridFunction<f64>> {
    let values = resolvent_at(p, lambda, g, out.nodes())?;
    GridFunction::new(out.clone(), values, g.weight_m())
}

/// Extrapolated `lim_{x→0} x^{m−1} f(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceResult {
    pub limit: f64,
    /// Magnitude of the last extrapolation correction.
    pub uncertainty: f64,
    /// Fitted exponent `p` of the model `L + B x^p`.
    pub exponent: f64,
    pub converged: bool,
}

/// Fits `L + B x^p` to `x^{m−1} f(x)` at the first node of each of the three
/// innermost panels (geometrically spaced) and returns `L` by Aitken's Δ².
/// A non-positive fitted exponent reports a divergent trace.
pub fn boundary_trace(p: &KernelParams, m: f64, f: &GridFunction<f64>) -> Result<TraceResult> {
    if !(m > p.kappa() && m <= 1.0) {
        return Err(Error::Parameter(format!("boundary trace needs κ < m ≤ 1, got m = {m}, κ = {}", p.kappa())));
    }
    let grid = f.grid();
    let (lo, _) = grid.span();
    if lo > 1e-5 {
        return Err(Error::Resolution(format!("grid starts at {lo}, need x_min ≤ 1e-5")));
    }
    let panels = grid.panels_x();
    if panels.len() < 3 {
        return Err(Error::Resolution("need at least three panels".into()));
    }
    let order = grid.order();
    let xs: Vec<f64> = (0..3).map(|k| grid.nodes()[k * order]).collect();
    let q1 = xs[1] / xs[0];
    let q2 = xs[2] / xs[1];
    if ((q1 - q2) / q1).abs() > 1e-9 {
        return Err(Error::Resolution("innermost panels are not geometrically spaced".into()));
    }
    let y: Vec<f64> = (0..3).map(|k| xs[k].powf(m - 1.0) * f.values()[k * order]).collect();
    let d1 = y[1] - y[0];
    let d2 = y[2] - y[1];
    let scale = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if d1.abs() <= 1e-15 * scale {
        return Ok(TraceResult { limit: y[0], uncertainty: d1.abs(), exponent: f64::INFINITY, converged: true });
    }
    let ratio = d2 / d1;
    let exponent = if ratio > 0.0 { ratio.ln() / q1.ln() } else { f64::NAN };
    if !(exponent > 0.0) {
        let limit = if y[0].abs() > y[2].abs() { y[0].signum() * f64::INFINITY } else { f64::NAN };
        return Ok(TraceResult { limit, uncertainty: f64::INFINITY, exponent, converged: false });
    }
    let correction = d1 * d1 / (d2 - d1);
    Ok(TraceResult { limit: y[0] - correction, uncertainty: correction.abs(), exponent, converged: true })
}

/// Checks `‖g‖_{X_m} ≥ λ‖f‖_{X_m} + (1−m)(m−κ)‖f‖_{X_{m−2}}` for `f = (λ − G_κ)^{−1} g`.
/// The `f` norms include their truncation estimates. `measured` is the margin
/// `(lhs − rhs)/‖g‖_{X_m}`, which must be at least `−tol`.
pub fn dissipativity_check(
    p: &KernelParams,
    m: f64,
    lambda: f64,
    g: &GridFunction<f64>,
    out: &Arc<Grid>,
    tol: f64,
) -> Result<CheckEntry> {
    if !(m > p.kappa() && m <= 1.0) {
        return Err(Error::Parameter(format!("dissipativity needs κ < m ≤ 1, got m = {m}, κ = {}", p.kappa())));
    }
    let name = format!("dissipativity(kappa={}, m={m}, lambda={lambda})", p.kappa());
    let f = apply_resolvent(p, lambda, g, out)?;
    let lhs = weighted_norm_with(g, m)?.value;
    let mut rhs = lambda * weighted_norm_with(&f, m)?.total();
    let factor = (1.0 - m) * (m - p.kappa());
    if factor != 0.0 {
        rhs += factor * weighted_norm_with(&f, m - 2.0)?.total();
    }
    let margin = if lhs > 0.0 { (lhs - rhs) / lhs } else { -rhs };
    Ok(CheckEntry::at_least(name, margin, 0.0, tol))
}
