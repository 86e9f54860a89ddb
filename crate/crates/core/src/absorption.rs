//! Evolution under `G_κ − ω` for a potential `ω ≥ 0` by Strang splitting,
//! `[e^{−ωΔt/2} S(Δt) e^{−ωΔt/2}]^N`, and its conjugate for `A_α(a,b) − ω`.

use std::fmt;
use std::str::FromStr;

use crate::kernel::{apply_semigroup_real, KernelParams};
use crate::reduce::{default_plan, to_bessel, to_original, Case, OperatorSpec};
use crate::spaces::{weighted_norm, GridFunction};
use crate::verify::CheckEntry;
use crate::{Error, Result};

/// Closed vocabulary of potentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    Zero,
    Const(f64),
    /// `c x`
    Linear(f64),
    /// `c x^p`
    Power(f64, f64),
}

/// `ω(x)`, optionally pulled back through the reduction for a given `α` and
/// optionally truncated at level `n` (`ω ∧ n`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    kind: PotentialKind,
    truncation: Option<f64>,
    pullback_alpha: Option<f64>,
}

impl Potential {
    pub fn new(kind: PotentialKind) -> Result<Self> {
        let ok = match kind {
            PotentialKind::Zero => true,
            PotentialKind::Const(c) | PotentialKind::Linear(c) => c.is_finite() && c >= 0.0,
            PotentialKind::Power(c, p) => c.is_finite() && c >= 0.0 && p.is_finite(),
        };
        if !ok {
            return Err(Error::Parameter(format!("potential {kind:?} must be finite and non-negative")));
        }
        Ok(Self { kind, truncation: None, pullback_alpha: None })
    }

    pub fn zero() -> Self {
        Self { kind: PotentialKind::Zero, truncation: None, pullback_alpha: None }
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    /// `ω ∧ n`.
    pub fn truncated(mut self, n: f64) -> Result<Self> {
        if !(n > 0.0) {
            return Err(Error::Parameter(format!("truncation level {n} must be positive")));
        }
        self.truncation = Some(self.truncation.map_or(n, |m| m.min(n)));
        Ok(self)
    }

    /// `ω̃(x) = (4/(2−α)²) ω(x^{2/(2−α)})`.
    pub fn pulled_back(mut self, alpha: f64) -> Result<Self> {
        if alpha == 2.0 || !alpha.is_finite() || self.pullback_alpha.is_some() || self.truncation.is_some() {
            return Err(Error::Parameter("pullback needs α ≠ 2 on an untruncated, not yet pulled back potential".into()));
        }
        self.pullback_alpha = Some(alpha);
        Ok(self)
    }

    pub fn is_zero(&self) -> bool {
        match self.kind {
            PotentialKind::Zero => true,
            PotentialKind::Const(c) | PotentialKind::Linear(c) | PotentialKind::Power(c, _) => c == 0.0,
        }
    }

    fn base(&self, x: f64) -> f64 {
        match self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Const(c) => c,
            PotentialKind::Linear(c) => c * x,
            PotentialKind::Power(c, p) => c * x.powf(p),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let v = match self.pullback_alpha {
            Some(alpha) => 4.0 / ((2.0 - alpha) * (2.0 - alpha)) * self.base(x.powf(2.0 / (2.0 - alpha))),
            None => self.base(x),
        };
        match self.truncation {
            Some(n) => v.min(n),
            None => v,
        }
    }
}

impl FromStr for Potential {
    type Err = Error;

    /// `zero`, `const:c`, `linear:c` or `power:c,p`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("unknown potential `{s}`; expected zero, const:c, linear:c or power:c,p"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let kind = match s.trim().split_once(':') {
            None if s.trim() == "zero" => PotentialKind::Zero,
            Some(("const", v)) => PotentialKind::Const(num(v)?),
            Some(("linear", v)) => PotentialKind::Linear(num(v)?),
            Some(("power", v)) => {
                let (c, p) = v.split_once(',').ok_or_else(bad)?;
                PotentialKind::Power(num(c)?, num(p)?)
            }
            _ => return Err(bad()),
        };
        Potential::new(kind)
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PotentialKind::Zero => write!(f, "zero")?,
            PotentialKind::Const(c) => write!(f, "const:{c}")?,
            PotentialKind::Linear(c) => write!(f, "linear:{c}")?,
            PotentialKind::Power(c, p) => write!(f, "power:{c},{p}")?,
        }
        if let Some(a) = self.pullback_alpha {
            write!(f, " pulled back (alpha={a})")?;
        }
        if let Some(n) = self.truncation {
            write!(f, " capped at {n}")?;
        }
        Ok(())
    }
}

/// Samples of `ω` on the nodes of `f`, rejecting negative or non-finite values.
fn sample_potential(omega: &Potential, f: &GridFunction<f64>) -> Result<Vec<f64>> {
    f.grid()
        .nodes()
        .iter()
        .map(|&x| {
            let w = omega.eval(x);
            if w.is_finite() && w >= 0.0 {
                Ok(w)
            } else {
                Err(Error::Parameter(format!("potential takes the value {w} at x = {x}")))
            }
        })
        .collect()
}

/// Strang-split evolution of `f` under `G_κ − ω` up to time `t` with `steps`
/// equal steps. A zero potential reduces to one application of `S(t)`.
pub fn evolve_absorbed(p: &KernelParams, omega: &Potential, t: f64, steps: usize, f: &GridFunction<f64>) -> Result<GridFunction<f64>> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Parameter(format!("t = {t} must be positive")));
    }
    if steps == 0 {
        return Err(Error::Parameter("steps must be at least 1".into()));
    }
    let grid = f.grid().clone();
    if omega.is_zero() {
        return apply_semigroup_real(p, t, f, &grid);
    }
    let dt = t / steps as f64;
    let w = sample_potential(omega, f)?;
    let half: Vec<f64> = w.iter().map(|v| (-0.5 * dt * v).exp()).collect();
    let damp = |u: &GridFunction<f64>| -> Result<GridFunction<f64>> {
        GridFunction::new(grid.clone(), u.values().iter().zip(&half).map(|(a, b)| a * b).collect(), u.weight_m())
    };
    let mut u = f.clone();
    for _ in 0..steps {
        u = damp(&u)?;
        u = apply_semigroup_real(p, dt, &u, &grid)?;
        u = damp(&u)?;
    }
    Ok(u)
}

/// Defects `‖u_n(t) − u_ref(t)‖_{X_m}` of the evolutions with `ω ∧ n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationStudy {
    pub levels: Vec<f64>,
    pub reference_level: f64,
    pub defects: Vec<f64>,
    /// Passes iff the defects are non-increasing in `n` (up to `tol` relative to the first).
    pub entry: CheckEntry,
}

pub fn truncated_convergence(
    p: &KernelParams,
    omega: &Potential,
    t: f64,
    steps: usize,
    f: &GridFunction<f64>,
    levels: &[f64],
    reference_level: f64,
    tol: f64,
) -> Result<TruncationStudy> {
    if levels.is_empty() || levels.windows(2).any(|w| !(w[1] > w[0])) || !(reference_level >= *levels.last().unwrap()) {
        return Err(Error::Parameter("levels must be increasing and not exceed the reference level".into()));
    }
    let reference = evolve_absorbed(p, &omega.truncated(reference_level)?, t, steps, f)?;
    let defects = levels
        .iter()
        .map(|&n| {
            let u = evolve_absorbed(p, &omega.truncated(n)?, t, steps, f)?;
            Ok(weighted_norm(&u.zip_with(&reference, |a, b| a - b)?)?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let scale = defects[0].max(f64::MIN_POSITIVE);
    let worst_increase = defects.windows(2).map(|w| (w[1] - w[0]) / scale).fold(f64::NEG_INFINITY, f64::max);
    let measured = if defects.len() < 2 { 0.0 } else if defects[0] == 0.0 && defects.iter().all(|&d| d == 0.0) { 0.0 } else { worst_increase };
    let entry = CheckEntry::at_most(format!("truncated_convergence({omega})"), measured, 0.0, tol);
    Ok(TruncationStudy { levels: levels.to_vec(), reference_level, defects, entry })
}

/// `e^{t(A_α(a,b) − ω)} f` for `f ∈ X_n` in case (c2): conjugates to
/// `G_κ − ω̃` at time `scale·t` and back.
pub fn general_absorbed(
    spec: &OperatorSpec,
    n: f64,
    omega: &Potential,
    t: f64,
    steps: usize,
    f: &GridFunction<f64>,
) -> Result<GridFunction<f64>> {
    let plan = default_plan(spec)?;
    let case = plan.classify(n).case;
    if case != Case::C2 {
        return Err(Error::OutOfRange(format!("absorption needs case c2, n = {n} is in case {}", case.label())));
    }
    let g = to_bessel(&plan, &f.clone().with_weight(n))?;
    let pulled = omega.pulled_back(spec.alpha)?;
    let evolved = evolve_absorbed(&plan.kernel_params()?, &pulled, plan.scale * t, steps, &g)?;
    let back = to_original(&plan, &evolved)?;
    GridFunction::new(f.grid().clone(), back.values().to_vec(), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{make_geometric_grid, Grid};
    use std::sync::Arc;

    fn grid() -> Arc<Grid> {
        Arc::new(make_geometric_grid(1e-6, 30.0, 60, 8).unwrap())
    }

    fn bump() -> GridFunction<f64> {
        GridFunction::sample(grid(), 0.5, |x: f64| (-(x - 1.5) * (x - 1.5) * 2.0).exp())
    }

    #[test]
    fn parses_the_closed_vocabulary() {
        assert_eq!("zero".parse::<Potential>().unwrap().kind(), PotentialKind::Zero);
        assert_eq!("const:2.5".parse::<Potential>().unwrap().kind(), PotentialKind::Const(2.5));
        assert_eq!("linear:1".parse::<Potential>().unwrap().kind(), PotentialKind::Linear(1.0));
        assert_eq!("power:2,0.5".parse::<Potential>().unwrap().kind(), PotentialKind::Power(2.0, 0.5));
        for bad in ["sin", "const:-1", "power:1", "linear:x", "const:"] {
            assert!(bad.parse::<Potential>().is_err(), "{bad}");
        }
        assert_eq!("power:2,0.5".parse::<Potential>().unwrap().to_string(), "power:2,0.5");
    }

    #[test]
    fn pullback_formula() {
        let w = Potential::new(PotentialKind::Linear(1.0)).unwrap().pulled_back(1.0).unwrap();
        for x in [0.1, 1.0, 3.0] {
            assert!((w.eval(x) - 4.0 * x * x).abs() < 1e-14 * x * x);
        }
        let capped = Potential::new(PotentialKind::Linear(1.0)).unwrap().truncated(2.0).unwrap();
        assert_eq!(capped.eval(5.0), 2.0);
        assert_eq!(capped.eval(1.5), 1.5);
    }

    #[test]
    fn zero_and_constant_potentials() {
        let p = KernelParams::new(0.0).unwrap();
        let f = bump();
        let u0 = evolve_absorbed(&p, &Potential::zero(), 0.5, 7, &f).unwrap();
        let s = apply_semigroup_real(&p, 0.5, &f, f.grid()).unwrap();
        assert_eq!(u0.values(), s.values());
        let c = 1.7;
        let uc = evolve_absorbed(&p, &"const:1.7".parse().unwrap(), 0.5, 4, &f).unwrap();
        for (a, b) in uc.values().iter().zip(s.values()) {
            assert!((a - (-c * 0.5f64).exp() * b).abs() <= 1e-10 * s.max_abs());
        }
        let zero = f.scale(0.0);
        let uz = evolve_absorbed(&p, &"linear:1".parse().unwrap(), 0.5, 4, &zero).unwrap();
        assert!(uz.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn domination_positivity_and_contraction() {
        let p = KernelParams::new(0.0).unwrap();
        let f = bump();
        let lin: Potential = "linear:1".parse().unwrap();
        let u0 = evolve_absorbed(&p, &Potential::zero(), 0.5, 1, &f).unwrap();
        let u8 = evolve_absorbed(&p, &lin, 0.5, 8, &f).unwrap();
        let u16 = evolve_absorbed(&p, &lin, 0.5, 16, &f).unwrap();
        let split = u8.values().iter().zip(u16.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let floor = 1e-14 * u0.max_abs();
        for (a, b) in u16.values().iter().zip(u0.values()) {
            assert!(*a >= -2.0 * split - floor && *a <= b + 2.0 * split + floor);
        }
        let stronger = evolve_absorbed(&p, &"linear:2".parse().unwrap(), 0.5, 16, &f).unwrap();
        for (a, b) in stronger.values().iter().zip(u16.values()) {
            assert!(*a <= b + 2.0 * split + floor);
        }
        assert!(weighted_norm(&u16).unwrap().value <= weighted_norm(&f).unwrap().value * (1.0 + 1e-8));
    }

    #[test]
    fn strang_splitting_is_second_order() {
        let p = KernelParams::new(0.0).unwrap();
        let f = bump();
        let w: Potential = "linear:1".parse().unwrap();
        let runs: Vec<_> = [2, 4, 8, 16].iter().map(|&n| evolve_absorbed(&p, &w, 0.5, n, &f).unwrap()).collect();
        let d: Vec<f64> = runs.windows(2).map(|r| weighted_norm(&r[0].zip_with(&r[1], |a, b| a - b).unwrap()).unwrap().value).collect();
        let o1 = (d[0] / d[1]).log2();
        let o2 = (d[1] / d[2]).log2();
        assert!((o1 - 2.0).abs() < 0.2 && (o2 - 2.0).abs() < 0.2, "{d:?}");
    }

    #[test]
    fn truncation_defects_decrease() {
        let p = KernelParams::new(0.0).unwrap();
        let f = bump();
        let w: Potential = "linear:1".parse().unwrap();
        let study = truncated_convergence(&p, &w, 0.5, 4, &f, &[1.0, 2.0, 4.0, 8.0, 16.0], 64.0, 1e-12).unwrap();
        assert!(study.entry.pass, "{study:?}");
        assert!(study.defects.last().unwrap() < &study.defects[0]);
        let bounded: Potential = "const:0.5".parse().unwrap();
        let study = truncated_convergence(&p, &bounded, 0.5, 4, &f, &[1.0, 2.0], 4.0, 1e-12).unwrap();
        assert!(study.defects.iter().all(|&d| d == 0.0));
        let study = truncated_convergence(&p, &w, 0.5, 4, &f.scale(0.0), &[1.0, 2.0], 4.0, 1e-12).unwrap();
        assert!(study.defects.iter().all(|&d| d == 0.0) && study.entry.pass);
    }

    #[test]
    fn general_absorbed_reduces_to_bessel_case() {
        let spec = OperatorSpec::new(0.0, 0.0, 0.0).unwrap();
        let f = bump();
        let w: Potential = "const:0.8".parse().unwrap();
        let a = general_absorbed(&spec, 0.5, &w, 0.4, 4, &f).unwrap();
        let b = evolve_absorbed(&KernelParams::new(0.0).unwrap(), &w, 0.4, 4, &f).unwrap();
        for (u, v) in a.values().iter().zip(b.values()) {
            assert!((u - v).abs() <= 1e-12 * b.max_abs());
        }
        assert!(matches!(general_absorbed(&spec, 1.0, &w, 0.4, 4, &f), Err(Error::OutOfRange(_))));
        let spec = OperatorSpec::new(1.0, 0.5, -0.3).unwrap();
        let lin: Potential = "linear:1".parse().unwrap();
        let u = general_absorbed(&spec, 0.0, &lin, 0.4, 8, &f.clone().with_weight(0.0)).unwrap();
        let n0 = weighted_norm(&f.clone().with_weight(0.0)).unwrap().value;
        assert!(weighted_norm(&u).unwrap().value <= n0 * (1.0 + 1e-8));
    }
}
