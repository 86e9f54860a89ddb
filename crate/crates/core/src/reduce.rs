//! Reduction of `A_α(a,b) f = x^α (f'' + a f'/x + b f/x²)` to the Bessel operator.
//!
//! With `D = (a−1)² − 4b ≥ 0`, `l± = (−(a−1) ± √D)/(2−α)` and
//! `κ± = 1 ± 2√D/(2−α)`,
//!
//! `A_α(a,b) = ((2−α)²/4) U G_κ± U^{−1}`, `U = T_{−α/2} M_l±`,
//!
//! where `(T_β u)(x) = |1+β| u(x^{1+β})` maps `X_n` onto `X_{n(1+β)+β}` and
//! `(M_l u)(x) = x^l u(x)` maps `X_n` onto `X_{n−l}`.

use serde::Serialize;
use std::sync::Arc;

use crate::kernel::{apply_semigroup_real, KernelParams};
use crate::spaces::GridFunction;
use crate::{Error, Result};

/// Relative tolerance for deciding `n` equals a threshold.
const EQ_TOL: f64 = 1e-12;

/// Coefficients `(α, a, b)` of `A_α(a,b)`, `α ≠ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorSpec {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
}

impl OperatorSpec {
    pub fn new(alpha: f64, a: f64, b: f64) -> Result<Self> {
        if ![alpha, a, b].iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter("α, a and b must be finite".into()));
        }
        if alpha == 2.0 {
            return Err(Error::Parameter("α = 2 is excluded: the reduction requires α ≠ 2".into()));
        }
        Ok(Self { alpha, a, b })
    }

    pub fn discriminant(&self) -> f64 {
        discriminant(self)
    }

    /// `x^α (f'' + a f'/x + b f/x²)` from values of `f, f', f''` at `x`.
    pub fn apply(&self, x: f64, f: f64, df: f64, d2f: f64) -> f64 {
        x.powf(self.alpha) * (d2f + self.a * df / x + self.b * f / (x * x))
    }
}

/// `D = (a−1)² − 4b`.
pub fn discriminant(spec: &OperatorSpec) -> f64 {
    (spec.a - 1.0) * (spec.a - 1.0) - 4.0 * spec.b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "+")]
    Plus,
}

impl Branch {
    /// `−` in the singular case `α < 2`, `+` in the degenerate case `α > 2`.
    pub fn for_alpha(alpha: f64) -> Self {
        if alpha < 2.0 {
            Branch::Minus
        } else {
            Branch::Plus
        }
    }

    fn sign(self) -> f64 {
        match self {
            Branch::Minus => -1.0,
            Branch::Plus => 1.0,
        }
    }
}

/// Threshold exponents of the generation theorems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime")]
pub enum Thresholds {
    /// `α < 2`: `n_* = (a−3−√D)/2`, `n_*^± = (1−2α+a±√D)/2`.
    #[serde(rename = "singular")]
    Singular { n_star: f64, n_star_minus: f64, n_star_plus: f64 },
    /// `α > 2`: `n^* = (a−3+√D)/2`, `n_±^* = (1−2α+a±√D)/2`.
    #[serde(rename = "degenerate")]
    Degenerate { n_upper: f64, n_minus: f64, n_plus: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    #[serde(rename = "c1")]
    C1,
    #[serde(rename = "c2")]
    C2,
    #[serde(rename = "c3")]
    C3,
    #[serde(rename = "out_of_range")]
    OutOfRange,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Case::C1 => "c1",
            Case::C2 => "c2",
            Case::C3 => "c3",
            Case::OutOfRange => "out_of_range",
        }
    }
}

/// Where the extra condition of case (c3) is imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryPoint {
    #[serde(rename = "zero")]
    Zero,
    #[serde(rename = "infinity")]
    Infinity,
}

/// `lim x^{exponent} f(x) = 0` as `x` tends to `at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryCondition {
    pub at: BoundaryPoint,
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub case: Case,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryCondition>,
}

/// All derived parameters of the reduction for one branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionPlan {
    pub spec: OperatorSpec,
    #[serde(rename = "D")]
    pub d: f64,
    pub branch: Branch,
    pub l: f64,
    pub kappa: f64,
    pub scale: f64,
    pub thresholds: Thresholds,
}

/// Builds the plan for `branch`.
pub fn reduction_plan(spec: &OperatorSpec, branch: Branch) -> Result<ReductionPlan> {
    let d = discriminant(spec);
    if d < 0.0 {
        return Err(Error::Parameter(format!("D = (a−1)² − 4b = {d} < 0")));
    }
    let alpha = spec.alpha;
    let sq = d.sqrt();
    let sgn = branch.sign();
    let l = (-(spec.a - 1.0) + sgn * sq) / (2.0 - alpha);
    let kappa = 1.0 + sgn * 2.0 * sq / (2.0 - alpha);
    let scale = (2.0 - alpha) * (2.0 - alpha) / 4.0;
    let lo = (1.0 - 2.0 * alpha + spec.a - sq) / 2.0;
    let hi = (1.0 - 2.0 * alpha + spec.a + sq) / 2.0;
    let thresholds = if alpha < 2.0 {
        Thresholds::Singular { n_star: (spec.a - 3.0 - sq) / 2.0, n_star_minus: lo, n_star_plus: hi }
    } else {
        Thresholds::Degenerate { n_upper: (spec.a - 3.0 + sq) / 2.0, n_minus: lo, n_plus: hi }
    };
    Ok(ReductionPlan { spec: *spec, d, branch, l, kappa, scale, thresholds })
}

/// The plan with the branch used by the generation theorems.
pub fn default_plan(spec: &OperatorSpec) -> Result<ReductionPlan> {
    reduction_plan(spec, Branch::for_alpha(spec.alpha))
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= EQ_TOL * (1.0 + a.abs().max(b.abs()))
}

impl ReductionPlan {
    pub fn kernel_params(&self) -> Result<KernelParams> {
        KernelParams::new(self.kappa)
    }

    /// `m±(n) = (2n+α−a+1 ± √D)/(2−α)`: `U^{−1}` maps `X_n` onto `X_{m±(n)}`.
    pub fn weight_map(&self, n: f64) -> f64 {
        let s = &self.spec;
        (2.0 * n + s.alpha - s.a + 1.0 + self.branch.sign() * self.d.sqrt()) / (2.0 - s.alpha)
    }

    /// Inverse of [`Self::weight_map`].
    pub fn weight_preimage(&self, m: f64) -> f64 {
        ((m - self.l) * (2.0 - self.spec.alpha) - self.spec.alpha) / 2.0
    }

    /// Domain case of `n` per the generation theorem for this regime.
    pub fn classify(&self, n: f64) -> Classification {
        let s = &self.spec;
        let sq = self.d.sqrt();
        let positive_d = self.d > 0.0;
        let (case, boundary) = match self.thresholds {
            Thresholds::Singular { n_star, n_star_minus, n_star_plus } => {
                if same(n, n_star_plus) {
                    (Case::C3, Some(BoundaryCondition { at: BoundaryPoint::Zero, exponent: (s.a + sq - 1.0) / 2.0 }))
                } else if n > n_star && !same(n, n_star) && (n <= n_star_minus || same(n, n_star_minus)) {
                    (Case::C1, None)
                } else if positive_d && n > n_star_minus && n < n_star_plus {
                    (Case::C2, None)
                } else {
                    (Case::OutOfRange, None)
                }
            }
            Thresholds::Degenerate { n_upper, n_minus, n_plus } => {
                if same(n, n_minus) {
                    (Case::C3, Some(BoundaryCondition { at: BoundaryPoint::Infinity, exponent: (s.a - sq - 1.0) / 2.0 }))
                } else if (n >= n_plus || same(n, n_plus)) && n < n_upper && !same(n, n_upper) {
                    (Case::C1, None)
                } else if positive_d && n > n_minus && n < n_plus {
                    (Case::C2, None)
                } else {
                    (Case::OutOfRange, None)
                }
            }
        };
        Classification { case, boundary }
    }
}

/// Domain case of `n` for `spec` with the theorem's branch.
pub fn classify(spec: &OperatorSpec, n: f64) -> Result<Classification> {
    Ok(default_plan(spec)?.classify(n))
}

/// `(M_l u)(x) = x^l u(x)`, moving `u` from `X_n` to `X_{n−l}`.
pub fn multiply(f: &GridFunction<f64>, l: f64) -> GridFunction<f64> {
    if l == 0.0 {
        return f.clone();
    }
    f.map(|x, v| x.powf(l) * v).with_weight(f.weight_m() - l)
}

/// `(T_β u)(x) = |1+β| u(x^{1+β})`, moving `u` from `X_n` to `X_{n(1+β)+β}`.
/// The grid is carried along: node `x_j` becomes `x_j^{1/(1+β)}`, so no
/// interpolation takes place.
pub fn remap(f: &GridFunction<f64>, beta: f64) -> Result<GridFunction<f64>> {
    if !(beta.is_finite() && beta != -1.0) {
        return Err(Error::Parameter(format!("β = {beta}: T_β needs β ≠ −1")));
    }
    if beta == 0.0 {
        return Ok(f.clone());
    }
    let q = 1.0 / (1.0 + beta);
    let grid = Arc::new(f.grid().remapped(q)?);
    let c = (1.0 + beta).abs();
    let mut values: Vec<f64> = f.values().iter().map(|v| c * v).collect();
    if q < 0.0 {
        values.reverse();
    }
    GridFunction::new(grid, values, f.weight_m() * (1.0 + beta) + beta)
}

/// `T_β M_l u`.
pub fn transform(f: &GridFunction<f64>, beta: f64, l: f64) -> Result<GridFunction<f64>> {
    remap(&multiply(f, l), beta)
}

/// `U = T_{−α/2} M_l`, from the Bessel side `X_m` to `X_n`.
pub fn to_original(plan: &ReductionPlan, u: &GridFunction<f64>) -> Result<GridFunction<f64>> {
    transform(u, -plan.spec.alpha / 2.0, plan.l)
}

/// `U^{−1} f (x) = (2/|2−α|) x^{−l} f(x^{2/(2−α)})`, from `X_n` to `X_m`.
pub fn to_bessel(plan: &ReductionPlan, f: &GridFunction<f64>) -> Result<GridFunction<f64>> {
    let alpha = plan.spec.alpha;
    Ok(multiply(&remap(f, alpha / (2.0 - alpha))?, -plan.l))
}

/// `e^{t A_α(a,b)} f = U S_κ(scale·t) U^{−1} f` on the grid of `f`, for `f ∈ X_n`.
pub fn conjugated_semigroup(spec: &OperatorSpec, n: f64, t: f64, f: &GridFunction<f64>) -> Result<GridFunction<f64>> {
    let plan = default_plan(spec)?;
    let class = plan.classify(n);
    if class.case == Case::OutOfRange {
        return Err(Error::OutOfRange(format!("n = {n} is outside every domain case for {spec:?}")));
    }
    let g = to_bessel(&plan, &f.clone().with_weight(n))?;
    let p = plan.kernel_params()?;
    let evolved = apply_semigroup_real(&p, plan.scale * t, &g, g.grid())?;
    let back = to_original(&plan, &evolved)?;
    let grid = f.grid().clone();
    GridFunction::new(grid, back.values().to_vec(), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{make_geometric_grid, weighted_norm, Grid};
    use proptest::prelude::*;

    fn spec(alpha: f64, a: f64, b: f64) -> OperatorSpec {
        OperatorSpec::new(alpha, a, b).unwrap()
    }

    fn singular(plan: &ReductionPlan) -> (f64, f64, f64) {
        match plan.thresholds {
            Thresholds::Singular { n_star, n_star_minus, n_star_plus } => (n_star, n_star_minus, n_star_plus),
            _ => panic!("expected singular thresholds"),
        }
    }

    #[test]
    fn discriminant_examples() {
        assert_eq!(discriminant(&spec(0.0, 1.0, 0.0)), 0.0);
        for alpha in [0.0, 1.0, 1.5, -2.0, 3.0] {
            assert_eq!(discriminant(&spec(alpha, 2.0 * alpha, alpha * (alpha - 1.0))), 1.0);
            assert_eq!(discriminant(&spec(alpha, alpha, 0.0)).sqrt(), (alpha - 1.0f64).abs());
        }
        assert!(OperatorSpec::new(2.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn identity_reduction() {
        let plan = reduction_plan(&spec(0.0, 0.0, 0.0), Branch::Minus).unwrap();
        assert_eq!((plan.l, plan.kappa, plan.scale), (0.0, 0.0, 1.0));
        assert_eq!(singular(&plan), (-2.0, 0.0, 1.0));
        for n in [-1.5, 0.0, 0.3, 1.0] {
            assert!((plan.weight_map(n) - n).abs() < 1e-15);
        }
    }

    #[test]
    fn remark_thresholds() {
        for alpha in [0.0, 1.0, 1.5, -2.0] {
            let plan = default_plan(&spec(alpha, 2.0 * alpha, alpha * (alpha - 1.0))).unwrap();
            assert_eq!(singular(&plan), (alpha - 2.0, 0.0, 1.0));
        }
        for (alpha, expected) in [(1.5, (-1.0, -0.5, 0.0)), (0.5, (-1.5, 0.0, 0.5)), (-1.0, (-3.0, 0.0, 2.0))] {
            let plan = default_plan(&spec(alpha, alpha, 0.0)).unwrap();
            assert_eq!(singular(&plan), expected);
        }
    }

    #[test]
    fn classification_examples() {
        let s = spec(0.0, 0.0, 0.0);
        let c = classify(&s, 1.0).unwrap();
        assert_eq!(c.case, Case::C3);
        assert_eq!(c.boundary, Some(BoundaryCondition { at: BoundaryPoint::Zero, exponent: 0.0 }));
        assert_eq!(classify(&s, 0.5).unwrap().case, Case::C2);
        assert_eq!(classify(&s, -1.0).unwrap().case, Case::C1);
        assert_eq!(classify(&s, 0.0).unwrap().case, Case::C1);
        assert_eq!(classify(&s, -3.0).unwrap().case, Case::OutOfRange);
        assert_eq!(classify(&s, 1.2).unwrap().case, Case::OutOfRange);
        // D = 0 leaves no room for (c2).
        let s = spec(0.0, 1.0, 0.0);
        let plan = default_plan(&s).unwrap();
        let (_, lo, hi) = singular(&plan);
        assert_eq!(lo, hi);
        assert_eq!(plan.classify(hi).case, Case::C3);
        // Degenerate case: (c3) sits at n_-^* with a condition at infinity.
        let s = spec(3.0, 1.0, -2.0);
        let plan = default_plan(&s).unwrap();
        assert!(plan.kappa < 1.0);
        let Thresholds::Degenerate { n_upper, n_minus, n_plus } = plan.thresholds else { panic!() };
        let c = plan.classify(n_minus);
        assert_eq!(c.case, Case::C3);
        assert_eq!(c.boundary.unwrap().at, BoundaryPoint::Infinity);
        assert_eq!(plan.classify(0.5 * (n_minus + n_plus)).case, Case::C2);
        assert_eq!(plan.classify(n_plus).case, Case::C1);
        assert_eq!(plan.classify(n_upper).case, Case::OutOfRange);
    }

    fn grid() -> Arc<Grid> {
        Arc::new(make_geometric_grid(1e-6, 50.0, 90, 10).unwrap())
    }

    #[test]
    fn isometries_and_commutation() {
        let f = GridFunction::sample(grid(), 0.4, |x: f64| x.sqrt() * (-(x - 1.5).powi(2)).exp());
        let n0 = weighted_norm(&f).unwrap().value;
        assert_eq!(transform(&f, 0.0, 0.0).unwrap(), f);
        for beta in [0.5, -0.4, -3.0, 2.0] {
            let g = remap(&f, beta).unwrap();
            assert!((g.weight_m() - (0.4 * (1.0 + beta) + beta)).abs() < 1e-14);
            assert!((weighted_norm(&g).unwrap().value - n0).abs() < 1e-10 * n0, "β={beta}");
            // M_l T_β = T_β M_{l/(1+β)}
            let l = 0.7;
            let lhs = multiply(&g, l);
            let rhs = transform(&f, beta, l / (1.0 + beta)).unwrap();
            for (a, b) in lhs.values().iter().zip(rhs.values()) {
                assert!((a - b).abs() <= 1e-13 * a.abs().max(1e-300));
            }
            assert!((lhs.weight_m() - rhs.weight_m()).abs() < 1e-14);
        }
        assert!(remap(&f, -1.0).is_err());
    }

    #[test]
    fn conjugation_round_trip() {
        for s in [spec(1.0, 0.5, -0.3), spec(-1.0, 2.0, 0.1), spec(3.0, 1.0, -2.0)] {
            let plan = default_plan(&s).unwrap();
            let f = GridFunction::sample(grid(), 0.2, |x: f64| (-(x - 1.0).powi(2)).exp());
            let g = to_bessel(&plan, &f).unwrap();
            assert!((g.weight_m() - plan.weight_map(0.2)).abs() < 1e-14);
            let back = to_original(&plan, &g).unwrap();
            assert!((back.weight_m() - 0.2).abs() < 1e-13);
            for ((a, b), (x, y)) in back.values().iter().zip(f.values()).zip(back.grid().nodes().iter().zip(f.grid().nodes())) {
                assert!((a - b).abs() <= 1e-13 * b.abs().max(1e-300));
                assert!((x - y).abs() <= 1e-13 * y);
            }
        }
    }

    #[test]
    fn identity_reduction_matches_bessel_semigroup() {
        let s = spec(0.0, 0.0, 0.0);
        let f = GridFunction::sample(grid(), 0.5, |x: f64| (-(x - 1.0).powi(2) * 3.0).exp());
        let a = conjugated_semigroup(&s, 0.5, 0.3, &f).unwrap();
        let b = apply_semigroup_real(&KernelParams::new(0.0).unwrap(), 0.3, &f, f.grid()).unwrap();
        for (u, v) in a.values().iter().zip(b.values()) {
            assert!((u - v).abs() <= 1e-10 * v.abs().max(1e-12));
        }
        assert!(matches!(conjugated_semigroup(&s, -3.0, 0.3, &f), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn generator_residual_is_first_order() {
        let (c, w) = (1.0, 0.3);
        let f = |x: f64| (-(x - c) * (x - c) / (w * w)).exp();
        let df = |x: f64| -2.0 * (x - c) / (w * w) * f(x);
        let d2f = |x: f64| (4.0 * (x - c) * (x - c) / w.powi(4) - 2.0 / (w * w)) * f(x);
        for (s, n) in [(spec(1.0, 0.5, -0.3), 0.0), (spec(-1.0, 2.0, 0.1), 2.5)] {
            assert_eq!(classify(&s, n).unwrap().case, Case::C2);
            let fg = GridFunction::sample(grid(), n, f);
            let af = GridFunction::sample(grid(), n, |x| s.apply(x, f(x), df(x), d2f(x)));
            let err = |h: f64| {
                let e = conjugated_semigroup(&s, n, h, &fg).unwrap();
                let q = e.zip_with(&fg, |a, b| (a - b) / h).unwrap();
                weighted_norm(&q.zip_with(&af, |a, b| a - b).unwrap()).unwrap().value
            };
            let (e1, e2, e3) = (err(4e-3), err(2e-3), err(1e-3));
            let order = ((e1 / e2).log2() + (e2 / e3).log2()) / 2.0;
            assert!(order > 0.9, "{s:?}: errors {e1} {e2} {e3}, order {order}");
        }
    }

    #[test]
    fn serialized_plan_has_expected_keys() {
        let plan = default_plan(&spec(0.0, 0.0, 0.0)).unwrap();
        let v = serde_json::to_value(plan).unwrap();
        for key in ["D", "branch", "l", "kappa", "scale", "thresholds"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["branch"], "-");
        let c = serde_json::to_string(&plan.classify(1.0)).unwrap();
        assert!(c.contains("\"case\":\"c3\""));
    }

    proptest! {
        #[test]
        fn singular_thresholds_map_to_bessel_range(alpha in -3.0f64..1.9, a in -3.0f64..3.0, b in -2.0f64..0.5, u in 0.01f64..0.99) {
            let s = spec(alpha, a, b);
            prop_assume!(discriminant(&s) > 1e-6);
            let plan = default_plan(&s).unwrap();
            prop_assert!(plan.kappa < 1.0);
            let (n_star, lo, hi) = singular(&plan);
            prop_assert_eq!(plan.classify(hi).case, Case::C3);
            prop_assert!((plan.weight_map(hi) - 1.0).abs() < 1e-12);
            prop_assert!((plan.weight_map(n_star) - (plan.kappa - 2.0)).abs() < 1e-12);
            let n = lo + u * (hi - lo);
            let m = plan.weight_map(n);
            prop_assert_eq!(plan.classify(n).case, Case::C2);
            prop_assert!(m > plan.kappa && m < 1.0);
            prop_assert!((plan.weight_preimage(m) - n).abs() < 1e-10 * (1.0 + n.abs()));
        }

        #[test]
        fn degenerate_cases_mirror_singular_ones(a in -3.0f64..3.0, b in -2.0f64..0.2, u in -1.5f64..2.5) {
            prop_assume!(discriminant(&spec(3.0, a, b)) > 1e-6);
            let deg = default_plan(&spec(3.0, a, b)).unwrap();
            let sing = default_plan(&spec(1.0, a, b)).unwrap();
            prop_assert!(deg.kappa < 1.0 && (deg.kappa - sing.kappa).abs() < 1e-12);
            let Thresholds::Degenerate { n_upper, n_minus, .. } = deg.thresholds else { unreachable!() };
            let n = n_minus + u * (n_upper - n_minus);
            let n_mirror = sing.weight_preimage(deg.weight_map(n));
            prop_assert_eq!(deg.classify(n).case, sing.classify(n_mirror).case);
        }
    }
}
