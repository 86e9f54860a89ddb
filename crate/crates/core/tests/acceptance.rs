//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::{FRAC_PI_4, PI};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use halfline::absorption::{evolve_absorbed, truncated_convergence, Potential};
use halfline::bessel::{bessel_i, bessel_k, wronskian, BesselOrder};
use halfline::kernel::{apply_semigroup_real, KernelParams};
use halfline::reduce::{conjugated_semigroup, default_plan, multiply, remap, OperatorSpec, Thresholds};
use halfline::resolvent::{apply_resolvent, boundary_trace, dissipativity_check};
use halfline::spaces::{make_geometric_grid, weighted_norm, Grid, GridFunction};
use halfline::verify::{
    appendix_b_suite, contraction_check, dirichlet_defect, domination_check, generator_residual_order, laplace_function_defect,
    laplace_kernel_defect, q_slope, random_test_functions, semigroup_law_defect, smoothing_slopes, strang_order, symmetry_defect,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn grid(x_max: f64, panels: usize, order: usize) -> Arc<Grid> {
    Arc::new(make_geometric_grid(1e-6, x_max, panels, order).unwrap())
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn bump(g: &Arc<Grid>, m: f64, c: f64, w: f64) -> GridFunction<f64> {
    GridFunction::sample(g.clone(), m, move |x: f64| (-((x - c) / w).powi(2)).exp())
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn c01_bessel() -> Outcome {
    let half = BesselOrder::new(0.5).map_err(e)?;
    let i = bessel_i(half, Complex64::new(1.0, 0.0)).map_err(e)?.re();
    let k = bessel_k(half, 1.0).map_err(e)?.re();
    let ri = ((i - (2.0 / PI).sqrt() * 1f64.sinh()) / i).abs();
    let rk = ((k - (PI / 2.0).sqrt() * (-1f64).exp()) / k).abs();
    let mut w = 0.0f64;
    for nu in [0.1, 0.25, 0.5, 1.3] {
        let order = BesselOrder::new(nu).map_err(e)?;
        for x in log_space(1e-2, 1e2, 100) {
            w = w.max((wronskian(order, x).map_err(e)? * x + 1.0).abs());
        }
    }
    Ok((ri <= 1e-12 && rk <= 1e-12 && w <= 1e-10, format!("I rel {ri:.2e}, K rel {rk:.2e} (≤1e-12); Wronskian rel {w:.2e} (≤1e-10)")))
}

fn c02_dirichlet() -> Outcome {
    let worst = [0.01, 0.1, 1.0].iter().map(|&t| dirichlet_defect(t)).fold(0.0f64, f64::max);
    Ok((worst <= 1e-10, format!("max rel error {worst:.2e} (≤1e-10)")))
}

fn c03_symmetry() -> Outcome {
    let real = symmetry_defect(&[-1.0, 0.0, 0.5], 0.0).map_err(e)?;
    let cplx = symmetry_defect(&[-1.0, 0.0, 0.5], FRAC_PI_4).map_err(e)?;
    Ok((real <= 1e-12 && cplx <= 1e-12, format!("real {real:.2e}, phase π/4 {cplx:.2e} (≤1e-12)")))
}

fn c04_semigroup_law() -> Outcome {
    let g = grid(40.0, 100, 10);
    let mut worst = 0.0f64;
    for kappa in [-1.0, 0.0, 0.5] {
        let p = KernelParams::new(kappa).map_err(e)?;
        for m in [0.0, 1.0] {
            worst = worst.max(semigroup_law_defect(&p, &bump(&g, m, 1.5, 0.5)).map_err(e)?);
        }
    }
    Ok((worst <= 1e-6, format!("max relative defect {worst:.2e} (≤1e-6)")))
}

fn c05_contraction() -> Outcome {
    let g = grid(80.0, 120, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for (kappa, m) in [(0.0, 0.5), (0.0, 1.0), (-1.0, 0.0)] {
        let fns = random_test_functions(&mut rng, &g, m, 10);
        let entry = contraction_check(&KernelParams::new(kappa).map_err(e)?, m, &fns, &[0.1, 1.0, 10.0], 1e-8).map_err(e)?;
        ok &= entry.pass;
        worst = worst.max(entry.measured);
    }
    Ok((ok, format!("largest relative norm increase {worst:.2e} (≤1e-8), 10 seeded functions × 3 (κ,m)")))
}

fn c06_smoothing() -> Outcome {
    let g = grid(40.0, 80, 8);
    let fits = smoothing_slopes(&KernelParams::new(0.0).map_err(e)?, 1.0, &[0.5, 1.0], 0.0, &log_space(1e-3, 1.0, 7), &g).map_err(e)?;
    let ok = fits.iter().zip([0.5, 1.0]).all(|(f, th)| (f.slope + th / 2.0).abs() <= 0.05 * th / 2.0);
    Ok((ok, format!("slopes θ=0.5: {:.5}, θ=1: {:.5} (−θ/2 ± 5%)", fits[0].slope, fits[1].slope)))
}

fn c07_laplace() -> Outcome {
    let pts = log_space(0.2, 3.0, 10);
    let mut kernel = 0.0f64;
    for kappa in [0.0, -1.0, 0.5] {
        kernel = kernel.max(laplace_kernel_defect(&KernelParams::new(kappa).map_err(e)?, 1.0, &pts).map_err(e)?);
    }
    let g = grid(60.0, 100, 10);
    let p = KernelParams::new(0.0).map_err(e)?;
    let func = laplace_function_defect(&p, 1.0, &bump(&g, 0.5, 1.5, 0.5), &log_space(0.1, 5.0, 20), 40.0).map_err(e)?;
    Ok((kernel <= 1e-5 && func <= 1e-4, format!("kernel-level rel {kernel:.2e} (≤1e-5), function-level {func:.2e} (≤1e-4)")))
}

fn c08_boundary() -> Outcome {
    let g = grid(60.0, 100, 10);
    let p = KernelParams::new(0.0).map_err(e)?;
    let f = apply_resolvent(&p, 1.0, &bump(&g, 1.0, 1.2, 0.4), &g).map_err(e)?;
    let a = boundary_trace(&p, 1.0, &f).map_err(e)?;
    let p = KernelParams::new(0.2).map_err(e)?;
    let f = apply_resolvent(&p, 1.0, &bump(&g, 0.7, 1.2, 0.4), &g).map_err(e)?;
    let b = boundary_trace(&p, 0.7, &f).map_err(e)?;
    let ok = a.converged && b.converged && a.limit.abs() <= 1e-4 && b.limit.abs() <= 1e-4;
    Ok((ok, format!("f(0) = {:.2e} (m=1), lim x^(m−1) f = {:.2e} (m=0.7, κ=0.2), tolerance 1e-4", a.limit, b.limit)))
}

fn c09_dissipativity() -> Outcome {
    let g = grid(60.0, 100, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for (kappa, m, lambda) in [(0.1, 0.6, 1.0), (0.0, 1.0, 2.0)] {
        let p = KernelParams::new(kappa).map_err(e)?;
        for gf in random_test_functions(&mut rng, &g, m, 10) {
            let entry = dissipativity_check(&p, m, lambda, &gf, &g, 1e-8).map_err(e)?;
            ok &= entry.pass;
            worst = worst.min(entry.measured);
        }
    }
    Ok((ok, format!("smallest relative margin {worst:.2e} (≥ −1e-8), 10 seeded g × 2 triples")))
}

fn c10_reduction() -> Outcome {
    let mut exact = true;
    for alpha in [0.0, 1.0, 1.5, -2.0] {
        let spec = OperatorSpec::new(alpha, 2.0 * alpha, alpha * (alpha - 1.0)).map_err(e)?;
        match default_plan(&spec).map_err(e)?.thresholds {
            Thresholds::Singular { n_star, n_star_minus, n_star_plus } => {
                exact &= n_star == alpha - 2.0 && n_star_minus == 0.0 && n_star_plus == 1.0;
            }
            _ => exact = false,
        }
    }
    let g = grid(50.0, 90, 10);
    let f = bump(&g, 0.5, 1.0, 0.6);
    let a = conjugated_semigroup(&OperatorSpec::new(0.0, 0.0, 0.0).map_err(e)?, 0.5, 0.3, &f).map_err(e)?;
    let b = apply_semigroup_real(&KernelParams::new(0.0).map_err(e)?, 0.3, &f, &g).map_err(e)?;
    let ident = a.values().iter().zip(b.values()).fold(0.0f64, |m, (u, v)| m.max((u - v).abs())) / b.max_abs();
    let h = GridFunction::sample(g.clone(), 0.4, |x: f64| x.sqrt() * (-(x - 1.5).powi(2)).exp());
    let n0 = weighted_norm(&h).map_err(e)?.value;
    let mut iso = 0.0f64;
    for beta in [0.5, -0.4, -3.0, 2.0] {
        iso = iso.max((weighted_norm(&remap(&h, beta).map_err(e)?).map_err(e)?.value - n0).abs() / n0);
    }
    for l in [-0.7, 0.3, 1.5] {
        iso = iso.max((weighted_norm(&multiply(&h, l)).map_err(e)?.value - n0).abs() / n0);
    }
    Ok((exact && ident <= 1e-10 && iso <= 1e-10, format!("thresholds exact: {exact}; identity reduction {ident:.2e}, isometry {iso:.2e} (≤1e-10)")))
}

fn c11_generator() -> Outcome {
    let g = grid(50.0, 90, 10);
    let o1 = generator_residual_order(&OperatorSpec::new(1.0, 0.5, -0.3).map_err(e)?, 0.0, &g).map_err(e)?;
    let o2 = generator_residual_order(&OperatorSpec::new(-1.0, 2.0, 0.1).map_err(e)?, 2.5, &g).map_err(e)?;
    Ok((o1 >= 0.9 && o2 >= 0.9, format!("observed orders {o1:.3}, {o2:.3} (≥0.9)")))
}

fn c12_appendix_a() -> Outcome {
    let g = grid(40.0, 80, 8);
    let ts = log_space(1e-3, 1.0, 7);
    let a = q_slope(2.0, -0.5, -1.0, 0.0, 0.5, &ts, &g).map_err(e)?;
    let b = q_slope(2.0, 0.0, 0.0, 0.5, 1.0, &ts, &g).map_err(e)?;
    let ok = (a.slope + 0.25).abs() <= 0.05 * 0.25 && (b.slope + 0.5).abs() <= 0.05 * 0.5;
    Ok((ok, format!("slopes {:.5} (−0.25 ± 5%), {:.5} (−0.5 ± 5%)", a.slope, b.slope)))
}

fn c13_appendix_b() -> Outcome {
    let g = grid(60.0, 100, 10);
    let mut ok = true;
    let mut worst = Vec::new();
    for (kappa, m) in [(0.0, 1.0), (0.2, 0.8)] {
        let gf = GridFunction::sample(g.clone(), m, |x: f64| {
            let u = x - 1.5;
            if u.abs() < 1.0 { (-1.0 / (1.0 - u * u)).exp() } else { 0.0 }
        });
        let r = appendix_b_suite(&KernelParams::new(kappa).map_err(e)?, m, &gf).map_err(e)?;
        ok &= r.pass && r.entries.len() == 4;
        worst.push(r.entries.iter().map(|x| x.measured).fold(0.0f64, f64::max));
    }
    Ok((ok, format!("4 checks × 2 (κ,m); worst defects {:.2e}, {:.2e} (≤1e-4)", worst[0], worst[1])))
}

fn c14_absorption() -> Outcome {
    let g = grid(30.0, 60, 8);
    let p = KernelParams::new(0.0).map_err(e)?;
    let f = bump(&g, 0.5, 1.5, 0.5);
    let c = 1.7;
    let uc = evolve_absorbed(&p, &"const:1.7".parse::<Potential>().map_err(e)?, 0.5, 4, &f).map_err(e)?;
    let s = apply_semigroup_real(&p, 0.5, &f, &g).map_err(e)?;
    let exact = uc.values().iter().zip(s.values()).fold(0.0f64, |m, (u, v)| m.max((u - (-c * 0.5f64).exp() * v).abs()))
        / ((-c * 0.5f64).exp() * s.max_abs());
    let lin: Potential = "linear:1".parse().map_err(e)?;
    let dom = domination_check(&p, &lin, 0.5, 8, &f).map_err(e)?;
    let order = strang_order(&p, &lin, 0.5, 2, &f).map_err(e)?;
    let trunc = truncated_convergence(&p, &lin, 0.5, 4, &f, &[1.0, 2.0, 4.0, 8.0, 16.0], 64.0, 1e-12).map_err(e)?;
    let strictly = trunc.defects.windows(2).all(|w| w[1] < w[0]);
    let ok = exact <= 1e-10 && dom.pass && (order - 2.0).abs() <= 0.2 && trunc.entry.pass && strictly;
    Ok((
        ok,
        format!(
            "ω≡c rel {exact:.2e} (≤1e-10); domination {:.2e} of allowance (≤1); Strang order {order:.3} (2 ± 0.2); truncation defects {:?}",
            dom.measured,
            trunc.defects.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>()
        ),
    ))
}

fn c15_determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_halfline"))
            .args(["verify", "--suite", "default", "--seed", "7"])
            .output()
            .map_err(e)
    };
    let a = run()?;
    let b = run()?;
    let ok = a.status.code() == Some(0) && b.status.code() == Some(0) && a.stdout == b.stdout && !a.stdout.is_empty();
    Ok((ok, format!("exit codes {:?}/{:?}, {} bytes, identical: {}", a.status.code(), b.status.code(), a.stdout.len(), a.stdout == b.stdout)))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 15] = [
        ("Bessel golden values and Wronskian", c01_bessel),
        ("kernel vs Dirichlet half-line oracle", c02_dirichlet),
        ("kernel symmetry", c03_symmetry),
        ("semigroup law", c04_semigroup_law),
        ("contraction", c05_contraction),
        ("smoothing slope", c06_smoothing),
        ("resolvent-Laplace consistency", c07_laplace),
        ("domain boundary traces", c08_boundary),
        ("dissipativity", c09_dissipativity),
        ("reduction algebra", c10_reduction),
        ("generator residual", c11_generator),
        ("integral operator slopes", c12_appendix_a),
        ("weighted derivative identities", c13_appendix_b),
        ("absorption", c14_absorption),
        ("determinism of verify", c15_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(msg) => (false, format!("error: {msg}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
