//! Acceptance gate. One test per criterion; each prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::time::{Duration, Instant};

use perckit::gap_process::{rho_exact, rho_log_lower_bound, rho_sandwich, GapProcess};
use perckit::growth_events::verify_growth_guarantee;
use perckit::harness::{sweep_pak_bounds, trend_check, LRule};
use perckit::lattice::{
    naive_step, rectangle_gap_bound, rectangle_gap_free_mc, run_to_fixpoint, step, CellState, Lattice, ModelSpec,
    Variant,
};
use perckit::qseries::{check_andrews_identity, check_chi_identity};
use perckit::special_fn::{integrate_gk, lambda_k, FkEvaluator, DEFAULT_INTEGRAL_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, pass: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n}: {detail}");
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn sorted_uniforms(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn criterion_01_fk_residuals() {
    let start = Instant::now();
    let mut worst_short = 0f64;
    let mut worst_long = 0f64;
    let mut worst_closed = 0f64;
    for k in 1..=8u32 {
        let e = FkEvaluator::new(k).unwrap();
        let ki = k as i32;
        for i in 0..=10_000 {
            let x = i as f64 / 10_000.0;
            let f = e.fk(x).unwrap();
            worst_short = worst_short.max((e.h(f) - e.h(x)).abs());
            let rhs: f64 = (1.0 - x) * (0..ki).map(|j| f.powi(ki - 1 - j) * x.powi(j)).sum::<f64>();
            worst_long = worst_long.max((f.powi(ki) - rhs).abs());
            let closed = match k {
                1 => Some(1.0 - x),
                2 => Some(0.5 * ((1.0 - x) + ((1.0 - x) * (1.0 + 3.0 * x)).sqrt())),
                _ => None,
            };
            if let Some(c) = closed {
                worst_closed = worst_closed.max((f - c).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_short <= 1e-12 && worst_long <= 1e-10 && worst_closed <= 1e-12 && secs(elapsed) < 5.0;
    report(
        1,
        pass,
        format!(
            "short residual {worst_short:.2e}, long form {worst_long:.2e}, closed forms {worst_closed:.2e}, {:.2}s",
            secs(elapsed)
        ),
    );
}

#[test]
fn criterion_02_gk_integral() {
    let start = Instant::now();
    let mut worst = 0f64;
    for k in 1..=6 {
        let r = integrate_gk(k, DEFAULT_INTEGRAL_TOL).unwrap();
        let exact = std::f64::consts::PI.powi(2) / (3.0 * k as f64 * (k as f64 + 1.0));
        worst = worst.max((r.value - exact).abs());
    }
    let elapsed = start.elapsed();
    report(
        2,
        worst <= 1e-8 && secs(elapsed) < 10.0,
        format!("max |integral - lambda_k| {worst:.2e}, {:.2}s", secs(elapsed)),
    );
}

#[test]
fn criterion_03_gk_asymptotics() {
    let mut failures = Vec::new();
    let mut details = Vec::new();
    for k in 1..=6u32 {
        let e = FkEvaluator::new(k).unwrap();
        let kf = k as f64;
        let z = 8.0 / kf;
        let large = (e.gk(z).unwrap() / (-kf * z).exp() - 1.0).abs();
        let z0 = 1e-6;
        let small = (kf * e.gk(z0).unwrap() / (1.0 / z0).ln() - 1.0).abs();
        let deriv = (kf * z0 * e.gk_derivative(z0).unwrap() + 1.0).abs();
        details.push(format!("k={k}: {large:.3}/{small:.4}/{deriv:.4}"));
        for (name, v) in [("e^-kz", large), ("log", small), ("derivative", deriv)] {
            if v > 0.05 {
                failures.push(format!("k={k} {name} {v:.3}"));
            }
        }
    }
    report(
        3,
        failures.is_empty(),
        format!("deviations (large z/small z/derivative) {}; over 0.05: {failures:?}", details.join(", ")),
    );
}

/// Sums the probability of every outcome in {0,1}^n without k consecutive zeros.
fn brute_force_rho(u: &[f64], k: usize) -> f64 {
    let mut total = 0.0;
    'mask: for mask in 0u32..(1 << u.len()) {
        let mut p = 1.0;
        let mut run = 0;
        for (i, &ui) in u.iter().enumerate() {
            if mask >> i & 1 == 1 {
                p *= ui;
                run = 0;
            } else {
                p *= 1.0 - ui;
                run += 1;
                if run >= k {
                    continue 'mask;
                }
            }
        }
        total += p;
    }
    total
}

#[test]
fn criterion_04_rho_brute_force() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0f64;
    for k in 1..=4u32 {
        for _ in 0..100 {
            let u: Vec<f64> = (0..16).map(|_| rng.gen()).collect();
            let trace = rho_exact(&GapProcess::explicit(k, u.clone()).unwrap(), 16).unwrap();
            for n in 0..=16 {
                worst = worst.max((trace.values[n] - brute_force_rho(&u[..n], k as usize)).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        4,
        worst <= 1e-12 && secs(elapsed) < 60.0,
        format!("max deviation {worst:.2e} over 400 vectors, n <= 16, {:.2}s", secs(elapsed)),
    );
}

#[test]
fn criterion_05_sandwich_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = Vec::new();
    let mut checked = 0;
    for k in 1..=5u32 {
        for _ in 0..200 {
            let n = rng.gen_range(1..=1000);
            let mut u = sorted_uniforms(&mut rng, n);
            let p = GapProcess::explicit(k, u.clone()).unwrap();
            let rho = rho_exact(&p, n).unwrap().last();
            let sw = rho_sandwich(&p, n).unwrap();
            if !(sw.lower <= rho + 1e-10 && rho <= sw.upper + 1e-10) {
                violations.push(format!("k={k} n={n} increasing"));
            }
            u.reverse();
            let p = GapProcess::explicit(k, u).unwrap();
            let rho = rho_exact(&p, n).unwrap().last();
            if rho_log_lower_bound(&p, n).unwrap().exp() > rho + 1e-10 {
                violations.push(format!("k={k} n={n} decreasing"));
            }
            checked += 1;
        }
    }
    report(5, violations.is_empty(), format!("{checked} vector pairs, violations {violations:?}"));
}

#[test]
fn criterion_06_hk_and_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut min_h = f64::INFINITY;
    let mut max_ht = f64::NEG_INFINITY;
    let mut shape = Vec::new();
    for k in 1..=6u32 {
        let e = FkEvaluator::new(k).unwrap();
        for _ in 0..10_000 {
            min_h = min_h.min(e.hk(&sorted_uniforms(&mut rng, k as usize)).unwrap());
            max_ht = max_ht.max(e.hk_tilde(&sorted_uniforms(&mut rng, 2 * k as usize - 1)).unwrap());
        }
        let ys: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        for w in ys.windows(2) {
            let (a, b) = (w[0], w[1]);
            if e.tj(1, b).unwrap() > e.tj(1, a).unwrap() + 1e-12 {
                shape.push(format!("T_1 k={k} y={b}"));
            }
            if e.tj(k, b).unwrap() < e.tj(k, a).unwrap() - 1e-12 {
                shape.push(format!("T_k k={k} y={b}"));
            }
            for j in 1..=k {
                if e.dj(j, b).unwrap() > e.dj(j, a).unwrap() + 1e-12 {
                    shape.push(format!("D_{j} k={k} y={b}"));
                }
            }
        }
    }
    let pass = min_h >= -1e-10 && max_ht <= 1e-10 && shape.is_empty();
    report(
        6,
        pass,
        format!("min H_k {min_h:.3e}, max H~_k {max_ht:.3e}, monotonicity breaks {:?}", &shape[..shape.len().min(5)]),
    );
}

#[test]
fn criterion_07_pak_bounds() {
    let rows = sweep_pak_bounds(&[1, 2, 3, 4], &[0.1, 0.05, 0.02], 1e-12).unwrap();
    let below: Vec<String> = rows
        .iter()
        .filter(|r| !r.above_lower)
        .map(|r| format!("k={} s={}", r.k, r.s))
        .collect();
    let ratios: Vec<String> = rows
        .iter()
        .map(|r| format!("k={} s={}: {:.4}", r.k, r.s, r.ratio_to_upper))
        .collect();
    let over: Vec<String> = rows
        .iter()
        .filter(|r| r.s == 0.02 && r.ratio_to_upper >= 1.0)
        .map(|r| format!("k={}", r.k))
        .collect();
    report(
        7,
        below.is_empty() && over.is_empty(),
        format!(
            "lower bound failures {below:?}; ratio to upper >= 1 at s=0.02 for {over:?}; ratios {}",
            ratios.join(", ")
        ),
    );
}

#[test]
fn criterion_08_integer_identities() {
    let start = Instant::now();
    let mut bad = Vec::new();
    for k in 1..=4 {
        let r = check_andrews_identity(k, 200).unwrap();
        if !r.holds() {
            bad.push(format!("andrews k={k} at {:?}", r.mismatches));
        }
    }
    let chi = check_chi_identity(200).unwrap();
    if !chi.holds() {
        bad.push(format!("chi at {:?}", chi.mismatches));
    }
    let elapsed = start.elapsed();
    report(
        8,
        bad.is_empty() && secs(elapsed) < 30.0,
        format!("mismatches {bad:?}, {:.2}s", secs(elapsed)),
    );
}

fn lattice_from(w: usize, h: usize, active: &[(usize, usize)], occupied: &[(usize, usize)]) -> Lattice {
    let mut l = Lattice::with_origin(w, h, (0, 0)).unwrap();
    for &(x, y) in occupied {
        l.set(x, y, CellState::Occupied);
    }
    for &(x, y) in active {
        l.set(x, y, CellState::Active);
    }
    l
}

fn active_set(l: &Lattice) -> Vec<(usize, usize)> {
    (0..l.height())
        .flat_map(|y| (0..l.width()).map(move |x| (x, y)))
        .filter(|&(x, y)| l.is_active(x, y))
        .collect()
}

fn hand_fixpoints() -> Vec<String> {
    let mut bad = Vec::new();
    let block = vec![(0, 0), (1, 0), (0, 1), (1, 1)];

    let s = ModelSpec::new(Variant::GlobalK, 2, 0.5).unwrap();
    let mut l = lattice_from(4, 4, &[(0, 0), (1, 1)], &[]);
    run_to_fixpoint(&mut l, &s, 100);
    if active_set(&l) != block {
        bad.push("bootstrap 2x2".to_string());
    }

    let s = ModelSpec::new(Variant::LocalFrobose, 1, 0.5).unwrap();
    let mut l = lattice_from(3, 3, &[(1, 0), (0, 1), (0, 0)], &[]);
    run_to_fixpoint(&mut l, &s, 100);
    let mut open = lattice_from(3, 3, &[(1, 0), (0, 1)], &[]);
    run_to_fixpoint(&mut open, &s, 100);
    if active_set(&l) != block || active_set(&open) != vec![(1, 0), (0, 1)] {
        bad.push("frobose corner".to_string());
    }

    let m = ModelSpec::new(Variant::LocalModified, 1, 0.5).unwrap();
    let mut l = lattice_from(3, 3, &[(0, 0)], &[(1, 1)]);
    run_to_fixpoint(&mut l, &m, 100);
    let mut straddle = lattice_from(3, 3, &[(0, 1), (2, 1)], &[]);
    run_to_fixpoint(&mut straddle, &m, 100);
    if active_set(&l) != block || active_set(&straddle) != vec![(0, 1), (2, 1)] {
        bad.push("modified linf".to_string());
    }
    bad
}

fn random_lattice(rng: &mut ChaCha8Rng, w: usize, h: usize, s: &ModelSpec) -> Lattice {
    let mut l = Lattice::with_origin(w, h, (w / 2, h / 2)).unwrap();
    let pa = rng.gen_range(0.02..0.4);
    let po = if s.variant.is_local() { rng.gen_range(0.0..0.7) } else { 0.0 };
    for y in 0..h {
        for x in 0..w {
            let u: f64 = rng.gen();
            if u < pa {
                l.set(x, y, CellState::Active);
            } else if u < pa + po {
                l.set(x, y, CellState::Occupied);
            }
        }
    }
    l
}

#[test]
fn criterion_09_lattice_rules() {
    let mut bad = hand_fixpoints();
    let models = [
        ModelSpec::new(Variant::GlobalK, 2, 0.5).unwrap(),
        ModelSpec::new(Variant::GlobalK, 3, 0.5).unwrap(),
        ModelSpec::new(Variant::LocalK, 2, 0.5).unwrap(),
        ModelSpec::new(Variant::LocalK, 3, 0.5).unwrap(),
        ModelSpec::new(Variant::LocalModified, 1, 0.5).unwrap(),
        ModelSpec::new(Variant::LocalFrobose, 1, 0.5).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for s in &models {
        let mut mismatches = 0;
        for _ in 0..10_000 {
            let mut a = random_lattice(&mut rng, 32, 32, s);
            let mut b = a.clone();
            loop {
                let ca = step(&mut a, s);
                let cb = naive_step(&mut b, s);
                if ca != cb || a != b {
                    mismatches += 1;
                    break;
                }
                if !ca {
                    break;
                }
            }
        }
        if mismatches > 0 {
            bad.push(format!("{} k={}: {mismatches} packed/naive mismatches", s.variant.name(), s.k));
        }
    }
    report(9, bad.is_empty(), format!("6 models x 10^4 32x32 lattices, failures {bad:?}"));
}

#[test]
fn criterion_10_growth_guarantees() {
    let start = Instant::now();
    let mut total = 0;
    let mut points = 0;
    for k in 1..=3 {
        let r = verify_growth_guarantee(k, 500, 10 + k as u64).unwrap();
        total += r.violations;
        points += r.cases.len();
    }
    let elapsed = start.elapsed();
    report(
        10,
        total == 0 && secs(elapsed) < 300.0,
        format!("{points} grid points x 500 trials, {total} violations, {:.1}s", secs(elapsed)),
    );
}

#[test]
fn criterion_11_rectangle_bound() {
    let mut point = 0;
    let mut bad = Vec::new();
    for k in 1..=3 {
        for q in [0.3, 0.6, 0.85] {
            for a in 1..=12 {
                for b in 1..=12 {
                    let mc = rectangle_gap_free_mc(k, a, b, q, 2000, 1100 + point);
                    let bound = rectangle_gap_bound(k, a, b, q).unwrap();
                    if !mc.within_upper(bound, 4.0) {
                        bad.push(format!("k={k} q={q} {a}x{b}: {} > {bound}", mc.estimate));
                    }
                    point += 1;
                }
            }
        }
    }
    report(11, bad.is_empty(), format!("{point} rectangles x 2000 trials, above bound + 4 stderr: {bad:?}"));
}

#[test]
fn criterion_12_trend() {
    let start = Instant::now();
    let s = [0.25, 0.2, 0.167, 0.143];
    let r = trend_check(2, Variant::LocalK, &s, LRule::Scaled(8.0), 100_000, 12).unwrap();
    let elapsed = start.elapsed();
    let estimates: Vec<String> = r.points.iter().map(|p| format!("L={} P={:.5}", p.l, p.estimate)).collect();
    report(
        12,
        r.slope_in_window && r.residuals_within_envelope && secs(elapsed) < 1800.0,
        format!(
            "slope {:.4} vs window [{:.4}, {:.4}], residuals within envelope {}, lambda_2 {:.4}, {}, {:.1}s",
            r.slope,
            r.slope_window.0,
            r.slope_window.1,
            r.residuals_within_envelope,
            lambda_k(2).unwrap(),
            estimates.join(", "),
            secs(elapsed)
        ),
    );
}
