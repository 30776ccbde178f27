use perckit::growth_events::{
    dk_lower_bound, jk_product_bound, prob_dk, prob_ek, prob_jk, sample_conditioned, sample_conditioned_trial,
    verify_case, verify_growth_guarantee, Background, Cell, EventChain, GrowthCase, SkewGeometry, StairGeometry,
};
use perckit::lattice::{run_to_fixpoint, ModelSpec, Variant};
use perckit::rng::trial_rng;
use rand::Rng;

fn rect_cells(x0: usize, x1: usize, y0: usize, y1: usize) -> Vec<Cell> {
    (y0..=y1).flat_map(|y| (x0..=x1).map(move |x| (x, y))).collect()
}

fn sorted(mut v: Vec<Cell>) -> Vec<Cell> {
    v.sort_unstable();
    v
}

/// |estimate - p| within `sigmas` standard errors, taking the larger of the
/// plug-in and the model stderr.
fn agrees(mc: &perckit::gap_process::McEstimate, p: f64, sigmas: f64) -> bool {
    (mc.estimate - p).abs() <= sigmas * mc.stderr.max(mc.stderr_at(p))
}

#[test]
fn stair_golden_cells() {
    let g = StairGeometry::new(2, 4, 9).unwrap();
    let cols = g.columns();
    assert_eq!(cols.len(), 5);
    assert_eq!(cols[0], vec![(5, 1), (5, 2), (5, 3)]);
    assert_eq!(cols[4], (1..=7).map(|y| (9, y)).collect::<Vec<_>>());
    let rows = g.rows();
    assert_eq!(rows[0], vec![(1, 5), (2, 5), (3, 5)]);
    assert_eq!(rows[4], (1..=7).map(|x| (x, 9)).collect::<Vec<_>>());
    let mut want = Vec::new();
    for i in 5..=9 {
        for j in 1..=i - 2 {
            want.push((i, j));
            want.push((j, i));
        }
    }
    assert_eq!(g.cells(), sorted(want));
    assert_eq!(g.cells().len(), 50);
    assert!(StairGeometry::new(2, 1, 5).is_err());
    assert!(StairGeometry::new(2, 4, 4).is_err());
}

#[test]
fn skew_golden_cells() {
    let g = SkewGeometry::new(2, 4, 9).unwrap();
    let ev = g.event();
    assert_eq!(g.marked_cell(), (9, 7));
    assert_eq!(ev.forced, vec![(9, 7)]);
    assert_eq!(sorted(ev.empty.clone()), sorted(rect_cells(1, 8, 6, 7)));
    assert_eq!(ev.nonempty[0], rect_cells(1, 3, 5, 5));
    assert_eq!(ev.nonempty[1], rect_cells(5, 5, 1, 3));
    assert_eq!(ev.nonempty[2], rect_cells(1, 9, 9, 9));
    assert_eq!(ev.nonempty[3], rect_cells(9, 9, 1, 5));
    assert_eq!(
        ev.families[0],
        vec![rect_cells(6, 6, 1, 4), rect_cells(7, 7, 1, 5), rect_cells(8, 8, 1, 5)]
    );
    assert_eq!(ev.families[1], vec![rect_cells(1, 9, 8, 8)]);
    ev.check_disjoint().unwrap();
    assert_eq!(g.cells().len(), 3 + 3 + 16 + 9 + 5 + 4 + 5 + 5 + 9 + 1);
    assert!(SkewGeometry::new(2, 4, 7).is_err());
    assert!(SkewGeometry::new(2, 4, 8).is_ok());
}

#[test]
fn skew_sets_are_disjoint() {
    for k in 1..=4 {
        for a in k..k + 6 {
            for b in a + k + 2..a + k + 9 {
                SkewGeometry::new(k, a, b).unwrap().event().check_disjoint().unwrap();
                StairGeometry::new(k, a, b).unwrap().event().check_disjoint().unwrap();
            }
        }
    }
}

#[test]
fn single_line_stair_probability() {
    for q in [0.2, 0.5, 0.9] {
        for a in 1..6 {
            let p = prob_dk(&StairGeometry::new(1, a, a + 1).unwrap(), q).unwrap();
            let want = (1.0 - q.powi(a as i32)).powi(2);
            assert!((p - want).abs() < 1e-14, "a={a} q={q}");
            for k in 2..=a.min(4) {
                assert_eq!(prob_dk(&StairGeometry::new(k, a, a + 1).unwrap(), q).unwrap(), 1.0);
            }
        }
    }
}

#[test]
fn probability_limits() {
    let d = StairGeometry::new(2, 3, 15).unwrap();
    let j = SkewGeometry::new(2, 3, 10).unwrap();
    assert!((prob_dk(&d, 1e-9).unwrap() - 1.0).abs() < 1e-12);
    assert!((prob_dk(&d, 0.0).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(prob_jk(&j, 1.0).unwrap(), 0.0);
    assert!(prob_jk(&j, 1.0 - 1e-9).unwrap() < 1e-8);
    assert_eq!(prob_jk(&j, 0.0).unwrap(), 0.0);
    assert!(prob_dk(&d, 1.5).is_err());
}

#[test]
fn stair_probability_above_lower_bound() {
    for k in 1..=4 {
        for q in [0.05, 0.3, 0.5, 0.7, 0.9, 0.99] {
            for a in k..k + 8 {
                for b in a + 1..a + 30 {
                    let g = StairGeometry::new(k, a, b).unwrap();
                    let p = prob_dk(&g, q).unwrap();
                    let lb = dk_lower_bound(&g, q).unwrap();
                    assert!(p >= lb * (1.0 - 1e-12), "k={k} a={a} b={b} q={q}: {p} < {lb}");
                }
            }
        }
    }
}

#[test]
fn skew_probability_above_product_bound() {
    for k in 1..=4 {
        for q in [0.05, 0.3, 0.5, 0.7, 0.9] {
            for a in k..k + 8 {
                for b in a + k + 2..a + k + 20 {
                    let g = SkewGeometry::new(k, a, b).unwrap();
                    let p = prob_jk(&g, q).unwrap();
                    let lb = jk_product_bound(&g, q).unwrap();
                    assert!(p >= lb * (1.0 - 1e-12), "k={k} a={a} b={b} q={q}: {p} < {lb}");
                }
            }
        }
    }
}

#[test]
fn exact_probabilities_match_montecarlo() {
    let mut point = 0;
    for k in 1..=3 {
        for q in [0.3, 0.5, 0.7] {
            for (a, b) in [(k, k + 3), (k + 2, 12), (k + 5, 20)] {
                let g = StairGeometry::new(k, a, b).unwrap();
                let p = prob_dk(&g, q).unwrap();
                let mc = g.event().montecarlo(q, 4000, point).unwrap();
                assert!(agrees(&mc, p, 4.0), "D k={k} a={a} b={b} q={q}: {p} vs {mc:?}");
                point += 1;
            }
            for (a, b) in [(k, 2 * k + 2), (k + 3, 2 * k + 9), (k + 6, 20)] {
                let g = SkewGeometry::new(k, a, b).unwrap();
                let p = prob_jk(&g, q).unwrap();
                let mc = g.event().montecarlo(q, 20_000, point).unwrap();
                assert!(agrees(&mc, p, 4.0), "J k={k} a={a} b={b} q={q}: {p} vs {mc:?}");
                point += 1;
            }
        }
    }
}

#[test]
fn chain_probability_matches_montecarlo() {
    for (k, l, pairs, q) in [
        (1, 7, vec![], 0.2),
        (1, 8, vec![(1, 4)], 0.3),
        (2, 8, vec![], 0.3),
        (2, 8, vec![], 0.1),
    ] {
        let chain = EventChain::new(k, l, pairs).unwrap();
        let p = prob_ek(&chain, q).unwrap();
        let mc = chain.event().montecarlo(q, 200_000, 9).unwrap();
        assert!(mc.successes > 20, "{chain:?}: {mc:?}");
        assert!(agrees(&mc, p, 4.0), "{chain:?}: {p} vs {mc:?}");
    }
}

#[test]
fn conditioned_samples_satisfy_event() {
    for k in 1..=3 {
        let l = 4 * k + 12;
        for chain in EventChain::enumerate(k, l, 2).into_iter().step_by(37) {
            let ev = chain.event();
            for (t, q) in [0.1, 0.5, 0.9].into_iter().enumerate() {
                let lat = sample_conditioned_trial(&chain, q, 4, t as u64).unwrap();
                assert!(ev.holds(&lat), "{chain:?} q={q}");
                assert_eq!((lat.width(), lat.height()), (l, l));
            }
        }
    }
    let chain = EventChain::new(2, 12, vec![(2, 6)]).unwrap();
    assert_eq!(
        sample_conditioned(&chain, 0.4, 1).unwrap(),
        sample_conditioned(&chain, 0.4, 1).unwrap()
    );
}

/// Line occupation frequencies of the conditioned sampler against plain
/// rejection sampling.
#[test]
fn conditioned_law_matches_rejection() {
    let chain = EventChain::new(2, 9, vec![]).unwrap();
    let ev = chain.event();
    let q = 0.45;
    let lines: Vec<Vec<Cell>> = ev.families.iter().flatten().cloned().collect();
    let nonempty = |lat: &perckit::lattice::Lattice, line: &[Cell]| {
        line.iter().any(|&(x, y)| lat.is_nonempty(x - 1, y - 1))
    };
    let n = 20_000u64;
    let mut cond = vec![0u64; lines.len()];
    for t in 0..n {
        let lat = sample_conditioned_trial(&chain, q, 11, t).unwrap();
        for (c, line) in cond.iter_mut().zip(&lines) {
            *c += nonempty(&lat, line) as u64;
        }
    }
    let mut rej = vec![0u64; lines.len()];
    let mut accepted = 0u64;
    let mut t = 0;
    while accepted < n {
        let mut rng = trial_rng(12, t);
        t += 1;
        let mut lat = perckit::lattice::Lattice::with_origin(9, 9, (0, 0)).unwrap();
        for y in 0..9 {
            for x in 0..9 {
                if rng.gen::<f64>() >= q {
                    lat.set(x, y, perckit::lattice::CellState::Occupied);
                }
            }
        }
        if !ev.holds(&lat) {
            continue;
        }
        accepted += 1;
        for (c, line) in rej.iter_mut().zip(&lines) {
            *c += nonempty(&lat, line) as u64;
        }
    }
    for (i, (&a, &b)) in cond.iter().zip(&rej).enumerate() {
        let (pa, pb) = (a as f64 / n as f64, b as f64 / n as f64);
        let se = ((pa * (1.0 - pa) + pb * (1.0 - pb)) / n as f64).sqrt().max(1e-4);
        assert!((pa - pb).abs() <= 5.0 * se, "line {i}: {pa} vs {pb}");
    }
}

#[test]
fn chain_events_are_disjoint() {
    for (k, l) in [(1, 9), (2, 12)] {
        let chains = EventChain::enumerate(k, l, 2);
        let events: Vec<_> = chains.iter().map(|c| c.event()).collect();
        let mut rng = trial_rng(77, 0);
        for _ in 0..1000 {
            let x = rng.gen_range(0..chains.len());
            let q = rng.gen_range(0.1..0.9);
            let lat = sample_conditioned_trial(&chains[x], q, 78, rng.gen()).unwrap();
            let accepting: Vec<usize> = (0..chains.len()).filter(|&y| events[y].holds(&lat)).collect();
            assert_eq!(accepting, vec![x], "{:?}", chains[x]);
        }
    }
}

#[test]
fn documented_growth_examples() {
    let cases = [
        (2, GrowthCase::Diagonal { a: 4, b: 9 }),
        (2, GrowthCase::Skew { a: 6, b: 12 }),
        (2, GrowthCase::Skew { a: 3, b: 7 }),
        (3, GrowthCase::Skew { a: 4, b: 9 }),
        (1, GrowthCase::Skew { a: 2, b: 5 }),
    ];
    for (i, (k, case)) in cases.iter().enumerate() {
        for variant in perckit::growth_events::models_for(*k) {
            for bg in [Background::Unconditional, Background::Empty] {
                let r = verify_case(*k, case, variant, 0.5, bg, 500, i as u64).unwrap();
                assert_eq!(r.violations, 0, "{r:?}");
            }
        }
    }
}

#[test]
fn growth_guarantees_hold() {
    for k in 1..=3 {
        let r = verify_growth_guarantee(k, 100, 5).unwrap();
        assert_eq!(r.violations, 0, "{:#?}", r.cases.iter().filter(|c| c.violations > 0).collect::<Vec<_>>());
        assert_eq!(r.cases.len(), 10 * perckit::growth_events::models_for(k).len() * 4);
    }
}

#[test]
fn seed_cells_remove_final_lag() {
    use perckit::lattice::{CellState, Lattice};
    let spec = ModelSpec::new(Variant::LocalK, 2, 0.5).unwrap();
    let chain = EventChain::new(2, 8, vec![]).unwrap();
    let mut lat = Lattice::with_origin(8, 8, (0, 0)).unwrap();
    lat.set(0, 0, CellState::Active);
    for c in [(1, 0), (0, 1), (1, 1)] {
        lat.set(c.0, c.1, CellState::Occupied);
    }
    // one cell at the foot of C_3..C_6 and R_3..R_6, C_7 and R_7 empty
    for i in 2..6 {
        lat.set(i, 0, CellState::Occupied);
        lat.set(0, i, CellState::Occupied);
    }
    let mut lagged = lat.clone();
    run_to_fixpoint(&mut lagged, &spec, u32::MAX);
    let active = |l: &Lattice, n: usize| (0..n).all(|y| (0..n).all(|x| l.is_active(x, y)));
    assert!(active(&lagged, 6) && !active(&lagged, 7));
    assert!(!chain.event().holds(&lat));

    lat.set(6, 0, CellState::Occupied);
    lat.set(0, 6, CellState::Occupied);
    assert!(chain.event().holds(&lat));
    run_to_fixpoint(&mut lat, &spec, u32::MAX);
    assert!(active(&lat, 7));
}
