//! Modified Bessel functions `I_ν` and `K_ν` of real order `ν > −1`.
//!
//! Values are returned as [`ScaledValue`]s, `mantissa · exp(log_scale)`, so
//! that `I_ν(x) ~ eˣ/√(2πx)` and `K_ν(x) ~ √(π/2x) e⁻ˣ` stay representable on
//! the whole working range. The kernel and resolvent modules consume the
//! exponentially scaled forms `e^{−w} I_ν(w)` and `eˣ K_ν(x)` directly.
//!
//! Regimes:
//!
//! * `I_ν`: ascending series (Neumaier-compensated) for `|z| < 35 + ν²`,
//!   Hankel-type asymptotic expansion beyond, including the subdominant
//!   `e^{−z}` contribution off the real axis.
//! * `K_ν`: Temme's series for `x ≤ 2`, Steed's continued fraction for
//!   `2 < x < 35 + ν²`, both at the reduced order `|μ| ≤ 1/2` followed by
//!   upward recurrence; asymptotic expansion beyond.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use crate::sector::{SectorPoint, DEFAULT_SECTOR_MARGIN};
use crate::{Error, Result};

const EPS: f64 = 1e-17;
const RESCALE_AT: f64 = 1e250;
const MAX_TERMS: usize = 100_000;

/// Taylor coefficients of `1/Γ(1+μ)` about `μ = 0`.
const RECIP_GAMMA_1P: [f64; 25] = [
    1.0,
    0.577_215_664_901_532_860_61,
    -0.655_878_071_520_253_881_08,
    -0.042_002_635_034_095_235_529,
    0.166_538_611_382_291_489_5,
    -0.042_197_734_555_544_336_748,
    -0.009_621_971_527_876_973_562_1,
    0.007_218_943_246_663_099_542_4,
    -0.001_165_167_591_859_065_112_1,
    -0.000_215_241_674_114_950_972_82,
    0.000_128_050_282_388_116_186_15,
    -0.000_020_134_854_780_788_238_656,
    -1.250_493_482_142_670_657_3e-6,
    1.133_027_231_981_695_882_4e-6,
    -2.056_338_416_977_607_103_5e-7,
    6.116_095_104_481_415_817_9e-9,
    5.002_007_644_469_222_930_1e-9,
    -1.181_274_570_487_020_144_6e-9,
    1.043_426_711_691_100_510_5e-10,
    7.782_263_439_905_071_254e-12,
    -3.696_805_618_642_205_708_2e-12,
    5.100_370_287_454_475_979e-13,
    -2.058_326_053_566_506_783_2e-14,
    -5.348_122_539_423_017_982_4e-15,
    1.226_778_628_238_260_790_2e-15,
];

/// Real order `ν > −1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu > -1.0 {
            Ok(Self(nu))
        } else {
            Err(Error::InvalidOrder(nu))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The order `ν + 1` used by the derivative recurrences.
    pub fn next(self) -> Self {
        Self(self.0 + 1.0)
    }
}

/// A complex number stored as `mantissa · exp(log_scale)` with
/// `0.5 ≤ |mantissa| < 2` (or `mantissa = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledValue {
    mantissa: Complex64,
    log_scale: f64,
}

impl ScaledValue {
    pub fn zero() -> Self {
        Self { mantissa: Complex64::new(0.0, 0.0), log_scale: 0.0 }
    }

    /// `factor · exp(log)` for a complex logarithm `log`.
    pub fn from_log(log: Complex64, factor: Complex64) -> Self {
        let phase = if log.im == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, log.im)
        };
        Self::normalized(factor * phase, log.re)
    }

    pub fn from_real(value: f64, log_scale: f64) -> Self {
        Self::normalized(Complex64::new(value, 0.0), log_scale)
    }

    fn normalized(mantissa: Complex64, log_scale: f64) -> Self {
        let modulus = mantissa.norm();
        if modulus == 0.0 {
            return Self::zero();
        }
        let k = modulus.log2().round();
        Self { mantissa: mantissa * (-k).exp2(), log_scale: log_scale + k * LN_2 }
    }

    pub fn mantissa(&self) -> Complex64 {
        self.mantissa
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.norm() == 0.0
    }

    /// The represented value; overflows to infinity when not representable.
    pub fn value(&self) -> Complex64 {
        self.mantissa * self.log_scale.exp()
    }

    /// Real part of [`ScaledValue::value`].
    pub fn re(&self) -> f64 {
        self.mantissa.re * self.log_scale.exp()
    }

    /// `ln |value|`, `−∞` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.norm().ln() + self.log_scale
        }
    }

    pub fn mul(self, other: Self) -> Self {
        Self::normalized(self.mantissa * other.mantissa, self.log_scale + other.log_scale)
    }

    /// Multiplies by `exp(shift)`.
    pub fn shift_log(self, shift: f64) -> Self {
        Self::normalized(self.mantissa, self.log_scale + shift)
    }
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }

    fn scale(&mut self, s: f64) {
        self.sum *= s;
        self.carry *= s;
    }
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Argument above which the large-argument expansions are used.
fn asymptotic_cutoff(nu: f64) -> f64 {
    35.0 + nu * nu
}

/// `(log prefactor, series sum)` of `I_ν(x) = exp(log) · sum` for real `x > 0`.
fn i_series_real(nu: f64, x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut acc = CompensatedSum { sum: 1.0, carry: 0.0 };
    let mut extra = 0.0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        acc.add(term);
        if term <= EPS * acc.sum {
            break;
        }
        if acc.sum > RESCALE_AT {
            acc.scale(1.0 / RESCALE_AT);
            term /= RESCALE_AT;
            extra += RESCALE_AT.ln();
        }
    }
    (nu * (0.5 * x).ln() - ln_gamma(nu + 1.0) + extra, acc.value())
}

fn i_series_complex(nu: f64, z: Complex64) -> (Complex64, Complex64) {
    let q = 0.25 * z * z;
    let mut term = Complex64::new(1.0, 0.0);
    let mut re = CompensatedSum { sum: 1.0, carry: 0.0 };
    let mut im = CompensatedSum::default();
    let mut extra = 0.0;
    let mut peak = 1.0f64;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        re.add(term.re);
        im.add(term.im);
        // Terms grow until k ≈ |z|/2; stop once they are negligible
        // against the largest one seen.
        let tn = term.norm();
        peak = peak.max(tn);
        if tn <= EPS * peak {
            break;
        }
        if peak > RESCALE_AT {
            re.scale(1.0 / RESCALE_AT);
            im.scale(1.0 / RESCALE_AT);
            term /= RESCALE_AT;
            peak /= RESCALE_AT;
            extra += RESCALE_AT.ln();
        }
    }
    let log = nu * (0.5 * z).ln() - ln_gamma(nu + 1.0) + extra;
    (log, Complex64::new(re.value(), im.value()))
}

/// Hankel sum `Σ_k (±1)^k a_k(ν) x^{−k}` with `a_k = Π_{j≤k} (4ν² − (2j−1)²) / (k! 8^k)`;
/// `alternate` selects the `(−1)^k` signs. Truncated at the smallest term.
fn hankel_sum_real(nu: f64, x: f64, alternate: bool) -> f64 {
    let mu4 = 4.0 * nu * nu;
    let sign = if alternate { -1.0 } else { 1.0 };
    let mut term = 1.0;
    let mut acc = CompensatedSum { sum: 1.0, carry: 0.0 };
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= sign * (mu4 - odd * odd) / (8.0 * kf * x);
        let t = term.abs();
        if t == 0.0 || t >= prev {
            break;
        }
        acc.add(term);
        if t <= EPS * acc.sum.abs() {
            break;
        }
        prev = t;
    }
    acc.value()
}

fn hankel_sum_complex(nu: f64, z: Complex64, alternate: bool) -> Complex64 {
    let mu4 = 4.0 * nu * nu;
    let sign = if alternate { -1.0 } else { 1.0 };
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(1.0, 0.0);
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= sign * (mu4 - odd * odd) / (8.0 * kf * z);
        let t = term.norm();
        if t == 0.0 || t >= prev {
            break;
        }
        sum += term;
        if t <= EPS * sum.norm() {
            break;
        }
        prev = t;
    }
    sum
}

/// `e^{−x} I_ν(x)` for real `x ≥ 0` and `ν > −1` (no validation).
pub fn i_exp_scaled_real(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else if nu > 0.0 { 0.0 } else { f64::INFINITY };
    }
    if x < asymptotic_cutoff(nu) {
        let (log, sum) = i_series_real(nu, x);
        (log - x).exp() * sum
    } else {
        let lead = hankel_sum_real(nu, x, true);
        let sub = -(nu * PI).sin() * (-2.0 * x).exp() * hankel_sum_real(nu, x, false);
        (lead + sub) / (2.0 * PI * x).sqrt()
    }
}

/// `e^{−w} I_ν(w)` for `Re w ≥ 0` (no validation).
pub fn i_exp_scaled(nu: f64, w: Complex64) -> Complex64 {
    if w.im == 0.0 && w.re >= 0.0 {
        return Complex64::new(i_exp_scaled_real(nu, w.re), 0.0);
    }
    if w.norm() < asymptotic_cutoff(nu) {
        let (log, sum) = i_series_complex(nu, w);
        (log - w).exp() * sum
    } else {
        let lead = hankel_sum_complex(nu, w, true);
        let sigma = w.im.signum();
        let coeff = Complex64::new(0.0, sigma) * Complex64::from_polar(1.0, sigma * nu * PI);
        let sub = coeff * (-2.0 * w).exp() * hankel_sum_complex(nu, w, false);
        (lead + sub) / (2.0 * PI * w).sqrt()
    }
}

/// `I_ν(z)` on the closed right half-plane minus a margin around `±iℝ`.
pub fn bessel_i(order: BesselOrder, z: Complex64) -> Result<ScaledValue> {
    bessel_i_with_margin(order, z, DEFAULT_SECTOR_MARGIN)
}

/// [`bessel_i`] with an explicit sector margin `ε`: requires `|arg z| ≤ π/2 − ε`.
pub fn bessel_i_with_margin(order: BesselOrder, z: Complex64, margin: f64) -> Result<ScaledValue> {
    let nu = order.value();
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("z = {z}"), "non-finite argument".into()));
    }
    if z.norm() == 0.0 {
        return if nu == 0.0 {
            Ok(ScaledValue::from_real(1.0, 0.0))
        } else if nu > 0.0 {
            Ok(ScaledValue::zero())
        } else {
            Err(Error::Domain("z = 0".into(), format!("I_ν(0) is infinite for ν = {nu} < 0")))
        };
    }
    let limit = FRAC_PI_2 - margin;
    if z.arg().abs() > limit {
        return Err(Error::Sector { phase: z.arg().abs(), limit });
    }
    if z.im == 0.0 {
        let x = z.re;
        return Ok(if x < asymptotic_cutoff(nu) {
            let (log, sum) = i_series_real(nu, x);
            ScaledValue::from_real(sum, log)
        } else {
            ScaledValue::from_real(i_exp_scaled_real(nu, x), x)
        });
    }
    Ok(if z.norm() < asymptotic_cutoff(nu) {
        let (log, sum) = i_series_complex(nu, z);
        ScaledValue::from_log(log, sum)
    } else {
        ScaledValue::from_log(z, i_exp_scaled(nu, z))
    })
}

/// `I_ν(z)` for a sector point `z`.
pub fn bessel_i_sector(order: BesselOrder, z: SectorPoint) -> Result<ScaledValue> {
    bessel_i(order, z.to_complex())
}

/// Coefficients `(gam1, gam2, 1/Γ(1+μ), 1/Γ(1−μ))` for Temme's series, `|μ| ≤ 1/2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mut gampl = 0.0;
    let mut gammi = 0.0;
    for c in RECIP_GAMMA_1P.iter().rev() {
        gampl = gampl * mu + c;
        gammi = gammi * (-mu) + c;
    }
    // gam1 = −Σ_{k odd} c_k μ^{k−1}, gam2 = Σ_{k even} c_k μ^k
    let mu2 = mu * mu;
    let mut g1 = 0.0;
    let mut g2 = 0.0;
    let mut p = 1.0;
    for (k, c) in RECIP_GAMMA_1P.iter().enumerate() {
        if k % 2 == 0 {
            g2 += c * p;
        } else {
            g1 -= c * p;
            p *= mu2;
        }
    }
    (g1, g2, gampl, gammi)
}

/// `(eˣ K_μ(x), eˣ K_{μ+1}(x))` for `|μ| ≤ 1/2` and `x > 0`.
fn temme_k_scaled(mu: f64, x: f64) -> (f64, f64) {
    let xmu2 = mu * mu;
    if x <= 2.0 {
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < 1e-16 { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < 1e-16 { 1.0 } else { e.sinh() / e };
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = CompensatedSum { sum: ff, carry: 0.0 };
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = CompensatedSum { sum: p, carry: 0.0 };
        for i in 1..MAX_TERMS {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum.add(del);
            sum1.add(c * (p - fi * ff));
            if del.abs() < sum.sum.abs() * 1e-17 {
                break;
            }
        }
        let scale = x.exp();
        (sum.value() * scale, sum1.value() * (2.0 / x) * scale)
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - xmu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..MAX_TERMS {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < 1e-17 {
                break;
            }
        }
        h *= a1;
        let kmu = (PI / (2.0 * x)).sqrt() / s;
        (kmu, kmu * (mu + x + 0.5 - h) / x)
    }
}

/// `eˣ K_ν(x)` in scaled form, `x > 0` (no validation).
pub fn k_exp_scaled(nu: f64, x: f64) -> ScaledValue {
    let nu = nu.abs();
    if x >= asymptotic_cutoff(nu) {
        let s = hankel_sum_real(nu, x, false);
        return ScaledValue::from_real((PI / (2.0 * x)).sqrt() * s, 0.0);
    }
    let n = nu.round();
    let mu = nu - n;
    let (mut k0, mut k1) = temme_k_scaled(mu, x);
    let mut log = 0.0;
    for j in 0..(n as usize) {
        let k2 = k0 + 2.0 * (mu + j as f64 + 1.0) / x * k1;
        k0 = k1;
        k1 = k2;
        if k1.abs() > RESCALE_AT {
            k0 /= RESCALE_AT;
            k1 /= RESCALE_AT;
            log += RESCALE_AT.ln();
        }
    }
    ScaledValue::from_real(k0, log)
}

/// `K_ν(x)` for real `x > 0`.
pub fn bessel_k(order: BesselOrder, x: f64) -> Result<ScaledValue> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("x = {x}"), "K_ν needs a positive argument".into()));
    }
    Ok(k_exp_scaled(order.value(), x).shift_log(-x))
}

/// `I_ν(x)K_ν'(x) − I_ν'(x)K_ν(x)` assembled from `I_ν' = I_{ν+1} + (ν/x) I_ν`
/// and `K_ν' = −K_{ν+1} + (ν/x) K_ν`; equals `−1/x`.
pub fn wronskian(order: BesselOrder, x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("x = {x}"), "Wronskian needs a positive argument".into()));
    }
    // The (ν/x) I_ν K_ν contributions of the two products cancel exactly,
    // leaving −(I_ν K_{ν+1} + I_{ν+1} K_ν); products are formed in scaled
    // form so the factors never overflow.
    let i0 = bessel_i(order, Complex64::new(x, 0.0))?;
    let i1 = bessel_i(order.next(), Complex64::new(x, 0.0))?;
    let k0 = bessel_k(order, x)?;
    let k1 = bessel_k(order.next(), x)?;
    Ok(-(i0.mul(k1).re() + i1.mul(k0).re()))
}
