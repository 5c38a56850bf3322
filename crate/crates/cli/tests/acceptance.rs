//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Run with `cargo test -p screening-cli --test acceptance`
//! (`-- --nocapture` to see the lines for passing criteria too).

use std::fs;
use std::process::Command;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use screening::{
    benchmark_profits, build_mechanism, build_mechanism_endo, check_s3,
    disclosure_improvement_test, dp_grid, eta_thresholds, oracle, oracle_exo, pointwise_profit,
    solve_endogenous, solve_exogenous, structure_profit, CellMode, Dist, QuantilePartition,
    SolveOptions,
};

fn pass(criterion: &str) {
    println!("[acceptance] {criterion}: PASS");
}

fn random_dist(rng: &mut ChaCha8Rng) -> Dist {
    let lo = rng.gen_range(0.0..2.0);
    let width = rng.gen_range(0.5..3.0);
    match rng.gen_range(0..3) {
        0 => Dist::power_cdf(rng.gen_range(0.3..3.0), lo, lo + width).unwrap(),
        1 => Dist::uniform(lo, lo + width).unwrap(),
        _ => {
            let k = rng.gen_range(2..8);
            let mut atoms: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..4.0)).collect();
            if rng.gen_bool(0.25) && k >= 3 {
                atoms[1] = atoms[0]; // repeated atoms stress the merge rule
            }
            atoms.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Dist::discrete(atoms).unwrap()
        }
    }
}

fn random_continuous(rng: &mut ChaCha8Rng) -> Dist {
    let lo = rng.gen_range(0.0..2.0);
    let width = rng.gen_range(0.5..3.0);
    match rng.gen_range(0..3) {
        0 => Dist::power_cdf(rng.gen_range(0.3..3.0), lo, lo + width).unwrap(),
        1 => Dist::uniform(lo, lo + width).unwrap(),
        _ => {
            let mid = lo + width * rng.gen_range(0.2..0.8);
            let cdf_mid = rng.gen_range(0.1..0.9);
            Dist::piecewise_linear(vec![(lo, 0.0), (mid, cdf_mid), (lo + width, 1.0)]).unwrap()
        }
    }
}

/// Criterion 1: on >= 200 randomized instances with n <= 12, the DP profit
/// equals the exhaustive oracle profit exactly (same arithmetic path) and
/// the argmax partitions agree up to profit ties <= 1e-9. Total runtime
/// under 60 s.
#[test]
fn criterion_1_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut count = 0;

    for _ in 0..120 {
        let n = rng.gen_range(2..=12);
        let f = random_dist(&mut rng);
        let q = random_dist(&mut rng);
        let fg = f.discretize(n).unwrap();
        let qg = q.discretize(n).unwrap();
        let ex_grid: Vec<usize> = (0..=n).collect();
        let dp = dp_grid(&fg, &qg, &ex_grid).unwrap();
        let oracle_res = oracle_exo(&fg, &qg, false).unwrap();
        assert_eq!(dp.value, oracle_res.profit, "exogenous profit mismatch at n={n}");
        let dp_eval = oracle::eval_exo(&fg, &qg, &dp.breakpoints, dp.exclusion_index).unwrap();
        assert_eq!(dp_eval, dp.value, "dp argmax does not reproduce its value");
        if dp.breakpoints != oracle_res.breakpoints
            || dp.exclusion_index != oracle_res.exclusion_index
        {
            // argmax differs: acceptable only as a profit tie
            assert!((dp_eval - oracle_res.profit).abs() <= 1e-9);
        }
        count += 1;
    }

    for _ in 0..100 {
        let n = rng.gen_range(2..=12);
        let f = random_dist(&mut rng);
        let eta = rng.gen_range(1.0f64..=5.0).max(1.01);
        let fg = f.discretize(n).unwrap();
        let dp = screening::solver::endogenous::dp_grid(&fg, eta).unwrap();
        let oracle_res = screening::oracle_endo(&fg, eta, false).unwrap();
        assert_eq!(dp.value, oracle_res.profit, "endogenous profit mismatch at n={n}");
        let dp_eval = oracle::eval_endo(&fg, eta, &dp.breakpoints).unwrap();
        assert_eq!(dp_eval, dp.value);
        if dp.breakpoints != oracle_res.breakpoints {
            assert!((dp_eval - oracle_res.profit).abs() <= 1e-9);
        }
        count += 1;
    }

    let elapsed = start.elapsed();
    assert!(count >= 200);
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    pass(&format!(
        "criterion 1 (oracle equivalence, {count} instances in {elapsed:.2?})"
    ));
}

/// Criterion 2: every solved instance is monotone pooling with common
/// quantile support passing both majorization checks at 1e-9, has weakly
/// increasing quality increments, respects the menu-size bound when the
/// quality floor is positive, and has at most n cells.
#[test]
fn criterion_2_structural_properties_of_solver_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for case in 0..20 {
        let f = random_dist(&mut rng);
        let q = random_dist(&mut rng);
        let opts = SolveOptions { grid_n: 48, seed: case, ..Default::default() };
        let rep = solve_exogenous(&f, &q, &opts).unwrap();
        let m = &rep.mechanism;
        // (a) feasibility of both sides at 1e-9 (hard checks value_mpc and
        // quality_weak_majorization inside the report)
        assert!(rep.verify.hard_passed, "case {case}: {:#?}", rep.verify.checks);
        // (b) increasing increments flag
        assert!(
            rep.verify.check("quality_increments_increasing").unwrap().passed,
            "case {case}"
        );
        // (c) menu-size bound
        let (qlo, qhi) = q.support();
        if qlo > 0.0 {
            assert!(
                m.k_positive <= (qhi / qlo).floor() as usize,
                "case {case}: {} items vs bound {}",
                m.k_positive,
                (qhi / qlo).floor()
            );
        }
        // (d) finitely many cells, at most one per grid atom
        assert!(m.cells.len() <= opts.grid_n);
    }
    for case in 0..8 {
        let f = random_dist(&mut rng);
        let eta = rng.gen_range(1.05f64..4.0);
        let opts = SolveOptions { grid_n: 48, seed: 50 + case, ..Default::default() };
        let rep = solve_endogenous(&f, eta, &opts).unwrap();
        assert!(rep.verify.hard_passed, "endo case {case}: {:#?}", rep.verify.checks);
        assert!(rep.verify.check("quality_increments_increasing").unwrap().passed);
        assert!(rep.mechanism.cells.len() <= opts.grid_n);
    }
    pass("criterion 2 (structural properties on 28 solved instances)");
}

/// Criterion 3: single item under non-decreasing supply density across 50
/// random value distributions, and the uniform/uniform instance solved at
/// n = 300 lands on exclusion 1/3 and profit 8/27.
#[test]
fn criterion_3_single_item_under_increasing_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let supplies = [
        Dist::uniform(0.0, 1.0).unwrap(),
        Dist::uniform(0.3, 1.2).unwrap(),
        Dist::piecewise_linear(vec![(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)]).unwrap(),
        Dist::piecewise_linear(vec![(0.2, 0.0), (1.0, 0.3), (1.4, 1.0)]).unwrap(),
    ];
    for case in 0..50 {
        let f = random_continuous(&mut rng);
        let q = &supplies[case % supplies.len()];
        let opts = SolveOptions { grid_n: 64, seed: case as u64, ..Default::default() };
        let rep = solve_exogenous(&f, q, &opts).unwrap();
        assert_eq!(
            rep.mechanism.k_positive, 1,
            "case {case}: {:?} exclusion {}",
            rep.mechanism.partition.breakpoints(),
            rep.mechanism.partition.exclusion()
        );
    }

    let f = Dist::uniform(0.0, 1.0).unwrap();
    let q = Dist::uniform(0.0, 1.0).unwrap();
    let opts = SolveOptions { grid_n: 300, ..Default::default() };
    let rep = solve_exogenous(&f, &q, &opts).unwrap();
    assert_eq!(rep.mechanism.k_positive, 1);
    let exclusion_breakpoint = rep.mechanism.partition.breakpoints()[1];
    assert!(
        (exclusion_breakpoint - 1.0 / 3.0).abs() <= 0.01,
        "exclusion breakpoint {exclusion_breakpoint}"
    );
    assert!(
        (rep.mechanism.profit - 8.0 / 27.0).abs() <= 1e-3,
        "profit {}",
        rep.mechanism.profit
    );
    pass("criterion 3 (single item under increasing density, 50 instances + n=300 benchmark)");
}

/// Criterion 4: the separate-vs-pool winner in the binary family flips
/// exactly once as the quality-increment ratio crosses 2, and the
/// benchmark instance reproduces 6.5 / 6.25 / 6.0.
#[test]
fn criterion_4_binary_cutoff() {
    let fg = Dist::discrete(vec![2.0, 3.0]).unwrap().discretize(2).unwrap();
    let mut winners = Vec::new();
    let step = 0.05;
    let steps = ((3.0 - 1.2) / step) as usize;
    for i in 0..=steps {
        let ratio = 1.2 + step * i as f64;
        let qg = Dist::discrete(vec![1.0, 1.0 + ratio]).unwrap().discretize(2).unwrap();
        let res = oracle_exo(&fg, &qg, false).unwrap();
        assert_eq!(res.exclusion_index, 0, "exclusion must stay dominated");
        winners.push((ratio, res.breakpoints.len() == 3));
    }
    let flips: Vec<f64> = winners
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| 0.5 * (w[0].0 + w[1].0))
        .collect();
    assert_eq!(flips.len(), 1, "{winners:?}");
    assert!((flips[0] - 2.0).abs() <= step, "flip at {}", flips[0]);

    let qg = Dist::discrete(vec![1.0, 4.0]).unwrap().discretize(2).unwrap();
    let res = oracle_exo(&fg, &qg, true).unwrap();
    assert_eq!(res.profit, 6.5);
    let table = res.table.unwrap();
    let profit_of = |mask: u64, ex: usize| {
        table
            .iter()
            .find(|r| r.mask == mask && r.exclusion_index == ex)
            .unwrap()
            .profit
    };
    assert_eq!(profit_of(1, 0), 6.5);
    assert_eq!(profit_of(0, 0), 6.25);
    assert_eq!(profit_of(1, 1), 6.0);
    pass("criterion 4 (binary cutoff flips at ratio 2; 6.5 / 6.25 / 6.0)");
}

/// Criterion 5: the variational test on F(v) = v^2, Q(q) = q^{1/4} around
/// v = 0.6: pooling values strictly improves at every half-width and the
/// loss-to-gain ratio halves (within 30%) per halving, confirming the
/// third-vs-second-order separation. Under 5 s.
#[test]
fn criterion_5_variational_orders() {
    let start = Instant::now();
    let f = Dist::power_cdf(2.0, 0.0, 1.0).unwrap();
    let q = Dist::power_cdf(0.25, 0.0, 1.0).unwrap();
    let full_disclosure =
        QuantilePartition::new(vec![0.0, 1.0], 0.0, vec![CellMode::Disclose]).unwrap();
    let pts =
        disclosure_improvement_test(&f, &q, &full_disclosure, 0.6, &[0.1, 0.05, 0.025]).unwrap();
    for pt in &pts {
        assert!(pt.split_gain > 0.0, "delta {}", pt.delta);
    }
    for pair in pts.windows(2) {
        let shrink = pair[1].ratio / pair[0].ratio;
        assert!(
            (shrink - 0.5).abs() <= 0.15,
            "ratio shrink {shrink} outside 0.5 +- 30%"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 5, "took {elapsed:?}");
    pass(&format!("criterion 5 (variational orders in {elapsed:.2?})"));
}

/// Criterion 6: endogenous benchmarks on uniform [1,2] at eta = 2 and the
/// pooling threshold of the two-equal-cell structure.
#[test]
fn criterion_6_endogenous_benchmarks() {
    let f = Dist::uniform(1.0, 2.0).unwrap();
    let (pi_pool, pi_hat) = benchmark_profits(&f, 2.0).unwrap();
    assert!((pi_pool - 1.125).abs() <= 1e-9, "pool {pi_pool}");
    assert!((pi_hat - 2.0 / 3.0).abs() <= 1e-8, "disclosure {pi_hat}");

    let cells = [(0.5, 1.25), (0.5, 1.75)];
    let th = eta_thresholds(&cells, &f).unwrap();
    assert!(
        th.eta_upper > 1.25 && th.eta_upper < 1.35,
        "threshold {}",
        th.eta_upper
    );
    let gap = structure_profit(&cells, th.eta_upper).unwrap()
        - pointwise_profit(1.5, th.eta_upper).1;
    assert!(gap.abs() <= 1e-8, "profit gap at the threshold: {gap}");
    pass("criterion 6 (endogenous benchmarks and pooling threshold)");
}

/// Criterion 7: whenever the support-ratio condition holds, the endogenous
/// solver pools completely, on 30 random instances.
#[test]
fn criterion_7_narrow_support_pooling() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for case in 0..30 {
        let lo = rng.gen_range(0.4..2.0);
        let hi = lo * rng.gen_range(1.15..2.6);
        let f = match case % 3 {
            0 => Dist::uniform(lo, hi).unwrap(),
            1 => Dist::power_cdf(rng.gen_range(0.4..2.5), lo, hi).unwrap(),
            _ => {
                let k = rng.gen_range(2..7);
                let mut atoms: Vec<f64> = (0..k).map(|_| rng.gen_range(lo..hi)).collect();
                atoms.sort_by(|a, b| a.partial_cmp(b).unwrap());
                Dist::discrete(atoms).unwrap()
            }
        };
        let (flo, fhi) = f.support();
        let eta = (fhi / flo) * rng.gen_range(1.05..1.8);
        assert!(check_s3(&f, eta).holds, "case {case}");
        let opts = SolveOptions { grid_n: 48, seed: case as u64, ..Default::default() };
        let rep = solve_endogenous(&f, eta, &opts).unwrap();
        assert_eq!(
            rep.mechanism.k_positive, 1,
            "case {case}: eta {eta}, partition {:?}",
            rep.mechanism.partition.breakpoints()
        );
        assert_eq!(rep.mechanism.cells.len(), 1, "case {case}");
    }
    pass("criterion 7 (support-ratio condition pools, 30 instances)");
}

/// Criterion 8: the three profit routes agree to 1e-9 and the
/// virtual-value identities hold to 1e-12 for every constructed mechanism.
#[test]
fn criterion_8_accounting_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut checked = 0;
    while checked < 60 {
        let f = random_dist(&mut rng);
        let q = random_dist(&mut rng);
        let k = rng.gen_range(1..6);
        let mut breaks: Vec<f64> = vec![0.0, 1.0];
        for _ in 0..k {
            breaks.push(rng.gen_range(0.02..0.98));
        }
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        if breaks.len() < 2 || breaks[breaks.len() - 1] != 1.0 {
            continue;
        }
        let xhat = rng.gen_range(0.0..0.8);
        let p = QuantilePartition::all_pooled(breaks.clone(), xhat).unwrap();
        let mechanism = if checked % 3 == 2 {
            let eta = rng.gen_range(1.1..4.0);
            match build_mechanism_endo(&f, eta, &breaks) {
                Ok(m) => m,
                Err(_) => continue, // atom ties or non-monotone qualities
            }
        } else {
            match build_mechanism(&f, &q, &p) {
                Ok(m) => m,
                Err(_) => continue, // atom ties make w non-increasing
            }
        };
        let price_form: f64 = mechanism.cells.iter().map(|c| c.mass * c.price).sum();
        let virtual_form: f64 = mechanism
            .cells
            .iter()
            .map(|c| c.mass * c.virtual_value * c.expected_quality)
            .sum();
        let threshold_form = screening::profit(&mechanism).unwrap() + mechanism.cost;
        assert!((price_form - threshold_form).abs() <= 1e-9);
        assert!((virtual_form - threshold_form).abs() <= 1e-9);
        let mean_phi: f64 = mechanism.cells.iter().map(|c| c.mass * c.virtual_value).sum();
        assert!(
            (mean_phi - mechanism.cells[0].expected_value).abs() <= 1e-12,
            "sum g phi = {mean_phi} vs w_1 = {}",
            mechanism.cells[0].expected_value
        );
        let top = &mechanism.cells[mechanism.cells.len() - 1];
        assert!((top.virtual_value - top.expected_value).abs() <= 1e-12);
        checked += 1;
    }
    pass("criterion 8 (accounting identities on 60 mechanisms)");
}

/// Criterion 9: solve -> serialize -> verify exits 0, and identical seeds
/// give byte-identical reports, through the real binary.
#[test]
fn criterion_9_determinism_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let write_cfg = |name: &str, body: &str| {
        let path = dir.path().join(name);
        fs::write(&path, body).unwrap();
        path
    };
    let exo_cfg = write_cfg(
        "exo.json",
        r#"{
  "schema_version": 1,
  "value_dist": { "family": "power_cdf", "exponent": 2.0, "support": [0.0, 1.0] },
  "cost": { "kind": "exogenous",
            "quality_dist": { "family": "power_cdf", "exponent": 0.25, "support": [0.0, 1.0] } },
  "solver": { "grid": 60 },
  "seed": 11
}"#,
    );
    let endo_cfg = write_cfg(
        "endo.json",
        r#"{
  "schema_version": 1,
  "value_dist": { "family": "uniform", "support": [1.0, 2.0] },
  "cost": { "kind": "elasticity", "eta": 1.4 },
  "solver": { "grid": 60 },
  "seed": 11
}"#,
    );

    for (cfg, command) in [(&exo_cfg, "solve-exogenous"), (&endo_cfg, "solve-endogenous")] {
        let (a, b) = (
            dir.path().join(format!("{command}-a")),
            dir.path().join(format!("{command}-b")),
        );
        for out in [&a, &b] {
            let status = Command::new(env!("CARGO_BIN_EXE_screening"))
                .args([command, "--config"])
                .arg(cfg)
                .arg("--out")
                .arg(out)
                .status()
                .unwrap();
            assert_eq!(status.code(), Some(0), "{command} failed");
        }
        for name in ["report.json", "mechanism.json", "trace.tsv", "recommendations.tsv"] {
            assert_eq!(
                fs::read(a.join(name)).unwrap(),
                fs::read(b.join(name)).unwrap(),
                "{command}/{name} not byte-identical"
            );
        }
        let verify = Command::new(env!("CARGO_BIN_EXE_screening"))
            .args(["verify", "--config"])
            .arg(cfg)
            .arg("--mechanism")
            .arg(a.join("mechanism.json"))
            .status()
            .unwrap();
        assert_eq!(verify.code(), Some(0), "{command} round trip failed verification");
    }
    pass("criterion 9 (byte-identical reports and verified round trips)");
}
