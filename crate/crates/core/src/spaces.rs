//! Composite Gauss–Legendre grids on `(0, ∞)`, grid functions and the
//! weighted norms `‖f‖_{X_m} = ∫₀^∞ |f(x)| x^m dx`.
//!
//! A [`Grid`] is a set of panels in a reference coordinate `ξ` with a
//! Gauss–Legendre rule on each panel, pushed forward by the power map
//! `x = ξ^p`. Plain grids have `p = 1`; the change of variables performed by
//! [`crate::reduce::transform`] produces grids with `p ≠ 1` so that node
//! remapping stays exact, quadrature weights included.

use num_complex::Complex64;
use std::fmt::Debug;
use std::io::{BufRead, Write};
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, OnceLock};

use crate::{Error, Result};

/// Scalar sample type of a grid function (`f64` or `Complex64`).
pub trait Sample:
    Copy + Send + Sync + Debug + PartialEq + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn modulus(self) -> f64;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn from_parts(re: f64, im: f64) -> Self;
    fn is_finite(self) -> bool {
        self.re().is_finite() && self.im().is_finite()
    }
}

impl Sample for f64 {
    fn zero() -> Self {
        0.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }
}

impl Sample for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
}

/// Gauss–Legendre rule on `[−1, 1]` with barycentric interpolation weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Result<Self> {
        if !(1..=128).contains(&order) {
            return Err(Error::InvalidGrid(format!("Gauss–Legendre order {order} not in [1, 128]")));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let mut bary: Vec<f64> = (0..n)
            .map(|i| {
                let prod: f64 = (0..n).filter(|&j| j != i).map(|j| nodes[i] - nodes[j]).product();
                1.0 / prod
            })
            .collect();
        let scale = bary.iter().fold(0.0f64, |m, b| m.max(b.abs()));
        bary.iter_mut().for_each(|b| *b /= scale);
        Ok(Self { nodes, weights, bary })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<R: Sample>(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> R) -> R {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = R::zero();
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(mid + half * t) * (w * half);
        }
        acc
    }

    /// Barycentric interpolation at `t ∈ [−1, 1]` of samples at the nodes.
    fn interpolate<T: Sample>(&self, t: f64, sample: impl Fn(usize) -> T) -> T {
        let mut num = T::zero();
        let mut den = 0.0;
        for (i, (&ti, &bi)) in self.nodes.iter().zip(&self.bary).enumerate() {
            let d = t - ti;
            if d == 0.0 {
                return sample(i);
            }
            let c = bi / d;
            num = num + sample(i) * c;
            den += c;
        }
        num * (1.0 / den)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// 16-point rule used for sub-panel quadrature of kernel integrals.
pub fn sub_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16).expect("valid order"))
}

/// Composite Gauss–Legendre grid on a positive interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    breaks: Vec<f64>,
    power: f64,
    rule: GaussLegendre,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Panels `[breaks[i], breaks[i+1]]` with a Gauss–Legendre rule of `order` on each.
    pub fn from_breaks(breaks: Vec<f64>, order: usize) -> Result<Self> {
        Self::mapped(breaks, order, 1.0)
    }

    /// Panels in the reference coordinate `ξ` pushed forward by `x = ξ^power`.
    pub fn mapped(breaks: Vec<f64>, order: usize, power: f64) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::InvalidGrid("need at least one panel".into()));
        }
        if !(breaks[0] > 0.0) || breaks.windows(2).any(|w| !(w[1] > w[0])) || breaks.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidGrid("panel breaks must be positive, finite and strictly increasing".into()));
        }
        if !(2..=64).contains(&order) {
            return Err(Error::InvalidGrid(format!("order {order} not in [2, 64]")));
        }
        if !(power.is_finite() && power != 0.0) {
            return Err(Error::InvalidGrid(format!("invalid map exponent {power}")));
        }
        let rule = GaussLegendre::new(order)?;
        let mut nodes = Vec::with_capacity((breaks.len() - 1) * order);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                let xi = 0.5 * (a + b) + half * t;
                let jac = if power == 1.0 { 1.0 } else { (power * xi.powf(power - 1.0)).abs() };
                nodes.push(map_forward(xi, power));
                weights.push(wt * half * jac);
            }
        }
        if power < 0.0 {
            nodes.reverse();
            weights.reverse();
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || !(nodes[0] > 0.0) {
            return Err(Error::InvalidGrid("mapped nodes are not strictly increasing".into()));
        }
        Ok(Self { breaks, power, rule, nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.rule.order()
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Panel boundaries in the reference coordinate.
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn panel_count(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Closed interval covered by the panels, in `x`.
    pub fn span(&self) -> (f64, f64) {
        let a = map_forward(self.breaks[0], self.power);
        let b = map_forward(*self.breaks.last().unwrap(), self.power);
        (a.min(b), a.max(b))
    }

    fn node_index(&self, panel: usize, local: usize) -> usize {
        let j = panel * self.order() + local;
        if self.power > 0.0 {
            j
        } else {
            self.len() - 1 - j
        }
    }

    /// Panels as `(x_lo, x_hi, reference panel index)` sorted by `x`.
    pub fn panels_x(&self) -> Vec<(f64, f64, usize)> {
        let mut out: Vec<_> = self
            .breaks
            .windows(2)
            .enumerate()
            .map(|(p, w)| {
                let a = map_forward(w[0], self.power);
                let b = map_forward(w[1], self.power);
                (a.min(b), a.max(b), p)
            })
            .collect();
        if self.power < 0.0 {
            out.reverse();
        }
        out
    }

    /// Reference panel containing `x`, if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.span();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let xi = map_backward(x, self.power);
        let k = self.breaks.partition_point(|&b| b <= xi);
        Some(k.saturating_sub(1).min(self.panel_count() - 1))
    }

    /// Interpolates samples `values` (aligned with the nodes) at `x` inside
    /// reference panel `panel`, using the panel's Gauss–Legendre polynomial.
    pub fn interpolate_in_panel<T: Sample>(&self, values: &[T], panel: usize, x: f64) -> T {
        let (a, b) = (self.breaks[panel], self.breaks[panel + 1]);
        let xi = map_backward(x, self.power);
        let t = (2.0 * xi - (a + b)) / (b - a);
        self.rule.interpolate(t, |i| values[self.node_index(panel, i)])
    }

    /// Interpolates at `x`; zero outside the span.
    pub fn interpolate<T: Sample>(&self, values: &[T], x: f64) -> T {
        match self.locate(x) {
            Some(p) => self.interpolate_in_panel(values, p, x),
            None => T::zero(),
        }
    }

    /// `Σ w_j v_j`.
    pub fn integrate<T: Sample>(&self, values: &[T]) -> T {
        self.weights.iter().zip(values).fold(T::zero(), |acc, (w, v)| acc + *v * *w)
    }

    /// Same panels viewed through the additional map `x ↦ x^q`.
    pub fn remapped(&self, q: f64) -> Result<Self> {
        Self::mapped(self.breaks.clone(), self.order(), self.power * q)
    }
}

fn map_forward(xi: f64, power: f64) -> f64 {
    if power == 1.0 {
        xi
    } else {
        xi.powf(power)
    }
}

fn map_backward(x: f64, power: f64) -> f64 {
    if power == 1.0 {
        x
    } else {
        x.powf(1.0 / power)
    }
}

/// Geometric panels `x_min (x_max/x_min)^{i/panels}` with `order` Gauss nodes each.
pub fn make_geometric_grid(x_min: f64, x_max: f64, panels: usize, order: usize) -> Result<Grid> {
    if !(x_min > 0.0 && x_max > x_min && x_max.is_finite()) {
        return Err(Error::InvalidGrid(format!("need 0 < x_min < x_max, got [{x_min}, {x_max}]")));
    }
    if panels == 0 {
        return Err(Error::InvalidGrid("need at least one panel".into()));
    }
    if !(2..=64).contains(&order) {
        return Err(Error::InvalidGrid(format!("order {order} not in [2, 64]")));
    }
    let ratio = (x_max / x_min).ln();
    let mut breaks: Vec<f64> = (0..=panels).map(|i| x_min * (ratio * i as f64 / panels as f64).exp()).collect();
    breaks[0] = x_min;
    breaks[panels] = x_max;
    Grid::from_breaks(breaks, order)
}

/// Samples aligned with a grid, regarded as an element of `X_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T: Sample = f64> {
    grid: Arc<Grid>,
    values: Vec<T>,
    weight_m: f64,
}

impl<T: Sample> GridFunction<T> {
    pub fn new(grid: Arc<Grid>, values: Vec<T>, weight_m: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, weight_m })
    }

    /// Samples `f` at the nodes of `grid`.
    pub fn sample(grid: Arc<Grid>, weight_m: f64, f: impl Fn(f64) -> T) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self { grid, values, weight_m }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn weight_m(&self) -> f64 {
        self.weight_m
    }

    pub fn with_weight(mut self, m: f64) -> Self {
        self.weight_m = m;
        self
    }

    pub fn map(&self, f: impl Fn(f64, T) -> T) -> Self {
        let values = self.grid.nodes().iter().zip(&self.values).map(|(&x, &v)| f(x, v)).collect();
        Self { grid: self.grid.clone(), values, weight_m: self.weight_m }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|_, v| v * c)
    }

    /// Pointwise combination with another function on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && *self.grid != *other.grid {
            return Err(Error::InvalidGrid("functions live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid.clone(), values, weight_m: self.weight_m })
    }

    pub fn at(&self, x: f64) -> T {
        self.grid.interpolate(&self.values, x)
    }

    /// `max_j |f_j|`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    fn check_finite(&self) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index: i, x: self.grid.nodes()[i] });
            }
        }
        Ok(())
    }
}

impl GridFunction<f64> {
    pub fn to_complex(&self) -> GridFunction<Complex64> {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            weight_m: self.weight_m,
        }
    }
}

impl GridFunction<Complex64> {
    pub fn real_part(&self) -> GridFunction<f64> {
        GridFunction { grid: self.grid.clone(), values: self.values.iter().map(|v| v.re).collect(), weight_m: self.weight_m }
    }
}

/// Weighted norm with an estimate of the mass outside the grid span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormResult {
    pub value: f64,
    pub truncation_estimate: f64,
}

impl NormResult {
    /// Quadrature value plus truncation estimate.
    pub fn total(&self) -> f64 {
        self.value + self.truncation_estimate
    }
}

/// `‖f‖_{X_m}` with `m = f.weight_m()`.
pub fn weighted_norm<T: Sample>(f: &GridFunction<T>) -> Result<NormResult> {
    weighted_norm_with(f, f.weight_m)
}

/// `∫ |f(x)| x^m dx` over the grid span for an explicit exponent `m`, plus an
/// estimate of the mass in `(0, x_lo)` (power-law fit on the two smallest
/// nodes) and `(x_hi, ∞)` (exponential fit on the two largest nodes).
pub fn weighted_norm_with<T: Sample>(f: &GridFunction<T>, m: f64) -> Result<NormResult> {
    f.check_finite()?;
    let nodes = f.grid.nodes();
    let density: Vec<f64> = nodes.iter().zip(&f.values).map(|(&x, v)| v.modulus() * x.powf(m)).collect();
    let value = f.grid.weights().iter().zip(&density).map(|(w, d)| w * d).sum::<f64>();
    let (lo, hi) = f.grid.span();
    let n = nodes.len();
    let mut estimate = 0.0;
    if n >= 2 {
        let (x0, x1, h0, h1) = (nodes[0], nodes[1], density[0], density[1]);
        if h0 > 0.0 && h1 > 0.0 {
            let p = (h1 / h0).ln() / (x1 / x0).ln();
            estimate += if p > -1.0 { h0 * x0 * (lo / x0).powf(p + 1.0) / (p + 1.0) } else { f64::INFINITY };
        } else if h0 > 0.0 {
            estimate += h0 * lo;
        }
        let (x0, x1, h0, h1) = (nodes[n - 2], nodes[n - 1], density[n - 2], density[n - 1]);
        if h1 > 0.0 {
            if h0 > h1 {
                let beta = (h0 / h1).ln() / (x1 - x0);
                estimate += h1 * (-beta * (hi - x1)).exp() / beta;
            } else {
                estimate += f64::INFINITY;
            }
        }
    }
    Ok(NormResult { value, truncation_estimate: estimate })
}

/// Integral of `integrand(r, f(r))` over `[lo, hi]`, with `f` interpolated on
/// its grid (zero outside the span). Panels longer than `h_max`, or containing
/// one of `cuts`, are split and integrated with a 16-point rule; other panels
/// use their native nodes.
pub fn integrate_against<T: Sample, R: Sample>(
    f: &GridFunction<T>,
    lo: f64,
    hi: f64,
    cuts: &[f64],
    h_max: f64,
    mut integrand: impl FnMut(f64, T) -> R,
) -> R {
    let grid = &f.grid;
    let mut acc = R::zero();
    if !(hi > lo) {
        return acc;
    }
    let order = grid.order();
    let sub = sub_rule();
    for (a, b, p) in grid.panels_x() {
        if b <= lo || a >= hi {
            continue;
        }
        let s = a.max(lo);
        let e = b.min(hi);
        let has_cut = cuts.iter().any(|&c| c > s && c < e);
        if s == a && e == b && !has_cut && (b - a) <= h_max {
            for i in 0..order {
                let j = grid.node_index(p, i);
                acc = acc + integrand(grid.nodes[j], f.values[j]) * grid.weights[j];
            }
            continue;
        }
        let mut pieces = vec![s];
        let mut inner: Vec<f64> = cuts.iter().copied().filter(|&c| c > s && c < e).collect();
        inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pieces.extend(inner);
        pieces.push(e);
        for w in pieces.windows(2) {
            let (u, v) = (w[0], w[1]);
            let k = ((v - u) / h_max).ceil().max(1.0) as usize;
            let h = (v - u) / k as f64;
            for q in 0..k {
                let a0 = u + h * q as f64;
                let b0 = if q + 1 == k { v } else { a0 + h };
                acc = acc + sub.integrate(a0, b0, |r| integrand(r, grid.interpolate_in_panel(&f.values, p, r)));
            }
        }
    }
    acc
}

/// Monotone cubic (Fritsch–Carlson) interpolation in `log x` onto `target`.
pub fn resample(f: &GridFunction<f64>, target: Arc<Grid>) -> Result<GridFunction<f64>> {
    let src = f.grid.nodes();
    let (slo, shi) = f.grid.span();
    let (tlo, thi) = target.span();
    if tlo < slo / 1.05 || thi > shi * 1.05 {
        return Err(Error::Extrapolation { x: if tlo < slo / 1.05 { tlo } else { thi }, lo: slo / 1.05, hi: shi * 1.05 });
    }
    f.check_finite()?;
    let lx: Vec<f64> = src.iter().map(|x| x.ln()).collect();
    let y = &f.values;
    let n = lx.len();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (lx[i + 1] - lx[i])).collect();
    let mut slope = vec![0.0; n];
    slope[0] = delta[0];
    slope[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        slope[i] = if delta[i - 1] * delta[i] <= 0.0 { 0.0 } else { 0.5 * (delta[i - 1] + delta[i]) };
    }
    for i in 0..n - 1 {
        if delta[i] == 0.0 {
            slope[i] = 0.0;
            slope[i + 1] = 0.0;
            continue;
        }
        let a = slope[i] / delta[i];
        let b = slope[i + 1] / delta[i];
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            slope[i] = tau * a * delta[i];
            slope[i + 1] = tau * b * delta[i];
        }
    }
    let values = target
        .nodes()
        .iter()
        .map(|&x| {
            let u = x.ln();
            if u <= lx[0] {
                return y[0];
            }
            if u >= lx[n - 1] {
                return y[n - 1];
            }
            let i = lx.partition_point(|&v| v <= u).saturating_sub(1).min(n - 2);
            let h = lx[i + 1] - lx[i];
            let t = (u - lx[i]) / h;
            let (t2, t3) = (t * t, t * t * t);
            (2.0 * t3 - 3.0 * t2 + 1.0) * y[i]
                + (t3 - 2.0 * t2 + t) * h * slope[i]
                + (-2.0 * t3 + 3.0 * t2) * y[i + 1]
                + (t3 - t2) * h * slope[i + 1]
        })
        .collect();
    GridFunction::new(target, values, f.weight_m)
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `f` as CSV: comment lines (`# weight_m=`, grid description, then
/// `metadata` verbatim), the header `x,value_re[,value_im]` and one row per node.
pub fn write_csv<T: Sample, W: Write>(f: &GridFunction<T>, metadata: &[String], mut out: W) -> Result<()> {
    let complex = f.values.iter().any(|v| v.im() != 0.0);
    writeln!(out, "# weight_m={}", fmt17(f.weight_m))?;
    writeln!(out, "# grid_order={}", f.grid.order())?;
    writeln!(out, "# grid_power={}", fmt17(f.grid.power()))?;
    let breaks: Vec<String> = f.grid.breaks().iter().map(|b| fmt17(*b)).collect();
    writeln!(out, "# grid_breaks={}", breaks.join(";"))?;
    for line in metadata {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{}", if complex { "x,value_re,value_im" } else { "x,value_re" })?;
    for (x, v) in f.grid.nodes().iter().zip(&f.values) {
        if complex {
            writeln!(out, "{},{},{}", fmt17(*x), fmt17(v.re()), fmt17(v.im()))?;
        } else {
            writeln!(out, "{},{}", fmt17(*x), fmt17(v.re()))?;
        }
    }
    Ok(())
}

/// Reads a grid function written by [`write_csv`].
pub fn read_csv<T: Sample, R: BufRead>(input: R) -> Result<GridFunction<T>> {
    let mut weight_m = None;
    let mut order = None;
    let mut power = 1.0;
    let mut breaks = None;
    let mut body = String::new();
    for line in input.lines() {
        let line = line?;
        if let Some(c) = line.strip_prefix('#') {
            let c = c.trim();
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number `{s}`: {e}")));
            if let Some(v) = c.strip_prefix("weight_m=") {
                weight_m = Some(parse(v)?);
            } else if let Some(v) = c.strip_prefix("grid_order=") {
                order = Some(v.trim().parse::<usize>().map_err(|e| Error::Config(e.to_string()))?);
            } else if let Some(v) = c.strip_prefix("grid_power=") {
                power = parse(v)?;
            } else if let Some(v) = c.strip_prefix("grid_breaks=") {
                breaks = Some(v.split(';').map(parse).collect::<Result<Vec<f64>>>()?);
            }
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let weight_m = weight_m.ok_or_else(|| Error::Config("missing `# weight_m=` line".into()))?;
    let order = order.ok_or_else(|| Error::Config("missing `# grid_order=` line".into()))?;
    let breaks = breaks.ok_or_else(|| Error::Config("missing `# grid_breaks=` line".into()))?;
    let grid = Arc::new(Grid::mapped(breaks, order, power)?);
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Config(e.to_string()))?.clone();
    let complex = headers.len() == 3;
    if headers.get(0) != Some("x") || headers.get(1) != Some("value_re") || (complex && headers.get(2) != Some("value_im")) {
        return Err(Error::Config(format!("unexpected CSV header {headers:?}")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Config(e.to_string()))?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| Error::Config(format!("row {i}: missing column {k}")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("row {i}: {e}")))
        };
        let x = num(0)?;
        if let Some(&gx) = grid.nodes().get(i) {
            if (x - gx).abs() > 1e-12 * gx {
                return Err(Error::Config(format!("row {i}: node {x} does not match grid node {gx}")));
            }
        }
        values.push(T::from_parts(num(1)?, if complex { num(2)? } else { 0.0 }));
    }
    GridFunction::new(grid, values, weight_m)
}
