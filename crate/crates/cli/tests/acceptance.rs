//! The acceptance gate: eight end-to-end checks covering fairness,
//! efficiency, solver agreement, chain-vs-simulation consistency,
//! structural verifiers, equivalence-class fairness, and determinism.
//!
//! Each criterion is one test named `acceptance_N_*`, so the harness
//! emits one pass/fail line per criterion; on success the test also
//! prints `acceptance N: PASS — …` (visible with `--nocapture`).
//! Criteria 1–3 and 8 drive the `aspire` binary with the shipped
//! configs; 4–7 exercise the library directly. Runtime budgets are
//! asserted alongside the numeric tolerances.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use aspire_core::game::verify::{
    equivalent_states, is_coordination_game, is_symmetric_game, CheckStatus,
};
use aspire_core::games::{common_pool, stag_hunt, successful_set, CommonPoolSpec};
use aspire_core::learning::{run, stream_rng, LearnerState};
use aspire_core::markov::{
    estimate_phat, estimate_phat_batches, fw_invariant, invariant_distribution, pure_states,
    PhatMatrix,
};
use aspire_core::metrics::OccupancyCounter;
use aspire_core::{DesirableSet, Game, Observer, Params, TremblePolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

// ---------------------------------------------------------------------------
// shared plumbing

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

/// Runs the binary and asserts it exited 0.
fn run_bin(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_aspire"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "aspire {args:?} failed (code {:?})\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_summary(dir: &Path) -> Value {
    let text = fs::read_to_string(dir.join("summary.json")).expect("summary.json exists");
    serde_json::from_str(&text).expect("summary.json parses")
}

fn as_f64(v: &Value) -> f64 {
    v.as_f64()
        .unwrap_or_else(|| panic!("expected number, got {v}"))
}

fn f64_slice(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap_or_else(|| panic!("expected array, got {v}"))
        .iter()
        .map(as_f64)
        .collect()
}

fn check_budget(criterion: u32, t0: Instant, limit_s: f64) -> f64 {
    let secs = t0.elapsed().as_secs_f64();
    assert!(
        secs <= limit_s,
        "criterion {criterion} exceeded its runtime budget: {secs:.1}s > {limit_s}s"
    );
    secs
}

fn announce(criterion: u32, detail: String) {
    println!("acceptance {criterion}: PASS — {detail}");
}

/// Parameters with aspiration bounds bracketing the payoff range by 1,
/// matching what the CLI derives when the config omits them.
fn params_for(game: &Game, epsilon: f64, lambda: f64, zeta: f64, c_phi: f64, h: f64) -> Params {
    let (lo, hi) = game.payoff_bounds();
    Params {
        epsilon,
        lambda,
        zeta,
        c_phi,
        h,
        rho_lo: lo - 1.0,
        rho_hi: hi + 1.0,
    }
}

/// The two-agent, four-level resource game used by criteria 1 and 7:
/// costs (0, 0.1, 0.2, 0.3), win bonus 0.8 at every level.
fn reference_common_pool() -> Game {
    let spec = CommonPoolSpec::new(
        2,
        vec![0.0, 1.0, 2.0, 3.0],
        vec![0.0, 0.1, 0.2, 0.3],
        vec![0.8, 0.8, 0.8, 0.8],
    )
    .expect("reference spec is valid");
    common_pool(&spec)
}

// ---------------------------------------------------------------------------
// criterion 1: per-agent success frequencies near 1/2, rare collisions

#[test]
fn acceptance_1_common_pool_fairness() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path("common_pool_fairness.toml");
    run_bin(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let summary = read_summary(dir.path());
    let success = f64_slice(&summary["common_pool"]["success_freq"]);
    let collision = as_f64(&summary["common_pool"]["collision_freq"]);
    assert_eq!(success.len(), 2);
    for (agent, freq) in success.iter().enumerate() {
        assert!(
            (freq - 0.5).abs() <= 0.1,
            "agent {agent} success frequency {freq:.4} is not within 0.1 of 0.5"
        );
    }
    assert!(
        collision <= 0.05,
        "collision frequency {collision:.4} exceeds 0.05"
    );
    let secs = check_budget(1, t0, 60.0);
    announce(
        1,
        format!(
            "success frequencies {:.3}/{:.3}, collisions {:.4}, {secs:.1}s",
            success[0], success[1], collision
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 2: ring network reaches the efficient wheel

#[test]
fn acceptance_2_network_efficiency() {
    let t0 = Instant::now();
    let cfg = config_path("network_ring6.toml");
    let wheel_payoff = 5.0 - 0.125; // (n-1) - c_link
    let wheel_itd = 1.0 / 15.0;
    let mut passing = 0usize;
    let mut details = Vec::new();
    for seed in [3017u64, 3018, 3019] {
        let dir = tempfile::tempdir().unwrap();
        run_bin(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            &seed.to_string(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        let summary = read_summary(dir.path());
        let rho = f64_slice(&summary["final"]["rho"]);
        let itd = f64_slice(&summary["network"]["running_avg_itd"]);
        let window_mass = as_f64(&summary["window"]["desirable_mass"]);
        let rho_dev = rho
            .iter()
            .map(|r| (r - wheel_payoff).abs())
            .fold(0.0f64, f64::max);
        let itd_dev = itd
            .iter()
            .map(|v| (v - wheel_itd).abs())
            .fold(0.0f64, f64::max);
        let ok = rho_dev <= 0.1 && itd_dev <= 0.01 && window_mass >= 0.9;
        if ok {
            passing += 1;
        }
        details.push(format!(
            "seed {seed}: rho_dev {rho_dev:.3}, itd_dev {itd_dev:.4}, window {window_mass:.3}{}",
            if ok { "" } else { " (miss)" }
        ));
    }
    assert!(
        passing >= 2,
        "only {passing} of 3 seeds met the efficiency targets: {details:?}"
    );
    let secs = check_budget(2, t0, 600.0);
    announce(
        2,
        format!("{passing}/3 seeds [{}], {secs:.1}s", details.join("; ")),
    );
}

// ---------------------------------------------------------------------------
// criteria 3 and 8 share one sweep invocation

struct SweepRun {
    dir: tempfile::TempDir,
    secs: f64,
}

static SWEEP: OnceLock<SweepRun> = OnceLock::new();

fn shared_sweep() -> &'static SweepRun {
    SWEEP.get_or_init(|| {
        let t0 = Instant::now();
        let dir = tempfile::tempdir().unwrap();
        run_sweep_into(dir.path());
        SweepRun {
            dir,
            secs: t0.elapsed().as_secs_f64(),
        }
    })
}

fn run_sweep_into(out: &Path) {
    let cfg = config_path("stag_hunt_sweep.toml");
    run_bin(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
}

/// Parses sweep.csv into (parameter value, metric value, metric stderr)
/// rows for the off-desirable-mass metric.
fn sweep_mass_rows(dir: &Path) -> Vec<(f64, f64, f64)> {
    let text = fs::read_to_string(dir.join("sweep.csv")).expect("sweep.csv exists");
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().expect("header row");
    assert_eq!(
        header, "parameter,value,seed,metric,metric_value,metric_stderr",
        "unexpected sweep.csv header"
    );
    lines
        .filter_map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields[3] != "off_desirable_mass" {
                return None;
            }
            let value: f64 = fields[1].parse().unwrap();
            let mass: f64 = fields[4].parse().unwrap();
            let se: f64 = fields[5].parse().unwrap_or(0.0);
            Some((value, mass, se))
        })
        .collect()
}

// criterion 3: off-target invariant mass vanishes as the step size drops

#[test]
fn acceptance_3_efficiency_trend() {
    let sweep = shared_sweep();
    let rows = sweep_mass_rows(sweep.dir.path());
    assert_eq!(rows.len(), 3, "expected one row per swept value: {rows:?}");
    let expected = [1e-2, 1e-3, 1e-4];
    for (row, want) in rows.iter().zip(expected) {
        assert!(
            (row.0 - want).abs() < 1e-12,
            "swept values out of order: {rows:?}"
        );
    }
    for k in 0..rows.len() - 1 {
        let (_, m0, s0) = rows[k];
        let (_, m1, s1) = rows[k + 1];
        let slack = 2.0 * (s0 * s0 + s1 * s1).sqrt();
        assert!(
            m1 <= m0 + slack,
            "off-desirable mass increased beyond noise: {m0:.4} -> {m1:.4} (slack {slack:.4})"
        );
    }
    let final_mass = rows[2].1;
    assert!(
        final_mass <= 0.1,
        "off-desirable mass {final_mass:.4} at the smallest step size exceeds 0.1"
    );
    assert!(
        sweep.secs <= 300.0,
        "criterion 3 exceeded its runtime budget: {:.1}s > 300s",
        sweep.secs
    );
    announce(
        3,
        format!(
            "masses {:.4} -> {:.4} -> {:.4}, {:.1}s",
            rows[0].1, rows[1].1, rows[2].1, sweep.secs
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 4: spanning-graph formula agrees with the linear solver

#[test]
fn acceptance_4_fw_oracle_equivalence() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = 2 + (i % 5); // sizes 2..=6, 20 matrices each
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / sum).collect()
            })
            .collect();
        let matrix = PhatMatrix::from_rows(rows).unwrap();
        let via_graphs = fw_invariant(&matrix).unwrap();
        let via_solve = invariant_distribution(&matrix).unwrap();
        let gap = via_graphs
            .pi
            .iter()
            .zip(&via_solve.pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(
            gap <= 1e-10,
            "matrix {i} (n={n}): solver disagreement {gap:.3e} exceeds 1e-10"
        );
        worst = worst.max(gap);
    }
    let secs = check_budget(4, t0, 60.0);
    announce(
        4,
        format!("100 chains, worst disagreement {worst:.2e}, {secs:.1}s"),
    );
}

// ---------------------------------------------------------------------------
// criterion 5: long-run occupancy matches the embedded chain's invariant

#[test]
fn acceptance_5_chain_vs_simulation() {
    let t0 = Instant::now();
    let game = stag_hunt();
    let params = params_for(&game, 1e-3, 1e-3, 0.05, 0.05, 0.01);
    let seed = 2024u64;
    let init = stream_rng(seed, u64::MAX).random_range(0..game.num_profiles());
    let x0 = LearnerState::pure(&game, &params, init);
    let mut occupancy = OccupancyCounter::new();
    {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut occupancy];
        run(
            &game,
            &params,
            TremblePolicy::Spontaneous,
            x0,
            10_000_000,
            seed,
            &mut observers,
        )
        .unwrap();
    }
    let index = pure_states(&game);
    let phat = estimate_phat(&game, &params, &index, 1000, seed, 10_000_000).unwrap();
    let pi = invariant_distribution(&phat).unwrap();
    let tv = occupancy.report().tv_distance(&pi.pi);
    assert!(
        tv <= 0.05,
        "total-variation distance {tv:.4} between occupancy and invariant exceeds 0.05"
    );
    let secs = check_budget(5, t0, 120.0);
    announce(5, format!("TV distance {tv:.4}, {secs:.1}s"));
}

// ---------------------------------------------------------------------------
// criterion 6: structural verifiers and the pure-equilibrium oracle

/// Chain-correct random resource-game spec: costs strictly increasing,
/// winner payoffs strictly decreasing in the level and above every
/// failure payoff, so the construction is valid for any draw.
fn random_cp_spec(rng: &mut ChaCha8Rng, n: usize, m: usize) -> CommonPoolSpec {
    let mut costs = vec![rng.random_range(0.0..0.1)];
    for _ in 1..m {
        let next = costs.last().unwrap() + rng.random_range(0.01..0.15);
        costs.push(next);
    }
    let mut levels = vec![rng.random_range(0.0..1.0)];
    for _ in 1..m {
        let next = levels.last().unwrap() + rng.random_range(0.1..1.0);
        levels.push(next);
    }
    let lo = -costs[0];
    let hi = 1.0 - costs[m - 1];
    let mut fraction = rng.random_range(0.6..0.95);
    let mut bonuses = Vec::with_capacity(m);
    for (j, &cost) in costs.iter().enumerate() {
        if j > 0 {
            fraction -= rng.random_range(0.05..0.13);
        }
        bonuses.push(lo + fraction * (hi - lo) + cost);
    }
    CommonPoolSpec::new(n, levels, costs, bonuses).expect("chain-correct spec is valid")
}

/// Independent brute-force pure-equilibrium oracle over a raw payoff
/// table in profile-major layout (last player's action fastest).
/// Returns profile index -> strictness.
fn oracle_pure_nash(counts: &[usize], payoffs: &[f64]) -> BTreeMap<usize, bool> {
    let n = counts.len();
    let mut strides = vec![1usize; n];
    for i in (0..n - 1).rev() {
        strides[i] = strides[i + 1] * counts[i + 1];
    }
    let profiles: usize = counts.iter().product();
    let mut out = BTreeMap::new();
    for p in 0..profiles {
        let mut rem = p;
        let mut actions = vec![0usize; n];
        for i in 0..n {
            actions[i] = rem / strides[i];
            rem %= strides[i];
        }
        let mut nash = true;
        let mut strict = true;
        for i in 0..n {
            let here = payoffs[p * n + i];
            for a in 0..counts[i] {
                if a == actions[i] {
                    continue;
                }
                let q = (p as isize + (a as isize - actions[i] as isize) * strides[i] as isize)
                    as usize;
                let dev = payoffs[q * n + i];
                if dev > here {
                    nash = false;
                }
                if dev >= here {
                    strict = false;
                }
            }
        }
        if nash {
            out.insert(p, strict);
        }
    }
    out
}

#[test]
fn acceptance_6_structural_verifiers() {
    let t0 = Instant::now();

    // (a) The stag hunt is a coordination game for both admissible
    // desirable sets: the payoff-dominant profile alone (the escape
    // condition then covers the remaining equilibrium) and the union
    // of both pure equilibria (the escape condition is vacuous).
    let hunt = stag_hunt();
    for target in [vec![0usize], vec![0, 3]] {
        let desirable = DesirableSet::from_indices(&hunt, target.iter().copied()).unwrap();
        let report = is_coordination_game(&hunt, &desirable).unwrap();
        assert!(
            report.passes(),
            "stag hunt with desirable profiles {target:?} failed: {report:?}"
        );
    }

    // (b) 20 randomized valid resource games (n <= 3, m <= 4) are
    // strict coordination games and symmetric.
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0);
    for case in 0..20 {
        let n = rng.random_range(2..=3usize);
        let m = rng.random_range(2..=4usize);
        let spec = random_cp_spec(&mut rng, n, m);
        let game = common_pool(&spec);
        let desirable = successful_set(&game);
        assert!(!desirable.is_empty(), "case {case}: empty desirable set");
        let report = is_coordination_game(&game, &desirable).unwrap();
        assert!(
            report.is_strict(),
            "case {case} (n={n}, m={m}) is not a strict coordination game: {report:?}"
        );
        let symmetry = is_symmetric_game(&game);
        assert!(
            symmetry.symmetric,
            "case {case} (n={n}, m={m}) is not symmetric: {symmetry:?}"
        );
    }

    // (c) A zero-sum matching game has no aligned better replies, so
    // the aligned-reply condition must fail.
    let pennies = Game::from_table(
        "pennies",
        vec![2, 2],
        vec![1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0],
        None,
    )
    .unwrap();
    let desirable = DesirableSet::from_indices(&pennies, [0]).unwrap();
    let report = is_coordination_game(&pennies, &desirable).unwrap();
    assert_eq!(
        report.aligned_replies.status,
        CheckStatus::Fail,
        "matching game unexpectedly passed the aligned-reply condition: {report:?}"
    );
    assert!(!report.passes());

    // (d) Equilibrium enumeration agrees with an independent
    // brute-force oracle on every game shape up to 4x4x4, with
    // payoffs snapped to a coarse grid so ties are exercised.
    let mut shapes: Vec<Vec<usize>> = Vec::new();
    for a in 1..=4usize {
        for b in 1..=4usize {
            shapes.push(vec![a, b]);
            for c in 1..=4usize {
                shapes.push(vec![a, b, c]);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1);
    let mut games_checked = 0usize;
    for counts in &shapes {
        let n = counts.len();
        let profiles: usize = counts.iter().product();
        for _ in 0..3 {
            let payoffs: Vec<f64> = (0..profiles * n)
                .map(|_| rng.random_range(-10i32..=10) as f64 * 0.5)
                .collect();
            let game = Game::from_table("random", counts.clone(), payoffs.clone(), None).unwrap();
            let got: BTreeMap<usize, bool> = game
                .pure_nash_set()
                .into_iter()
                .map(|e| (e.profile, e.strict))
                .collect();
            let want = oracle_pure_nash(counts, &payoffs);
            assert_eq!(
                got, want,
                "equilibrium mismatch on shape {counts:?} with payoffs {payoffs:?}"
            );
            games_checked += 1;
        }
    }

    let secs = check_budget(6, t0, 60.0);
    announce(
        6,
        format!(
            "coordination/symmetry verifiers OK, equilibrium oracle agreed on {games_checked} games, {secs:.1}s"
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 7: equivalent pure states carry equal invariant mass

#[test]
fn acceptance_7_equivalence_class_fairness() {
    let t0 = Instant::now();
    let game = reference_common_pool();
    let params = params_for(&game, 1e-3, 1e-3, 0.05, 0.05, 0.01);
    let index = pure_states(&game);
    let batched = estimate_phat_batches(&game, &params, &index, 10_000, 1, 10_000_000, 10).unwrap();
    let pooled = invariant_distribution(&batched.pooled).unwrap();
    let batch_pis: Vec<Vec<f64>> = batched
        .batches
        .iter()
        .map(|b| invariant_distribution(b).unwrap().pi)
        .collect();
    let nb = batch_pis.len() as f64;
    let n = index.num_states();

    // Per-state standard error of the pooled mass, from the spread of
    // the independent batch estimates.
    let stderr: Vec<f64> = (0..n)
        .map(|s| {
            let mean = batch_pis.iter().map(|p| p[s]).sum::<f64>() / nb;
            let var = batch_pis.iter().map(|p| (p[s] - mean).powi(2)).sum::<f64>() / (nb - 1.0);
            (var / nb).sqrt()
        })
        .collect();

    // Every transposition-equivalent pair of pure states (same
    // unordered action multiset, mirrored payoffs) must carry equal
    // mass up to estimation noise.
    let mut pairs = Vec::new();
    for s in 0..n {
        for t in s + 1..n {
            if equivalent_states(&game, &game.profile_at(s), &game.profile_at(t)).unwrap() {
                pairs.push((s, t));
            }
        }
    }
    assert_eq!(
        pairs.len(),
        6,
        "expected the 6 mirrored-profile pairs of the 2-agent game, got {pairs:?}"
    );
    let mut worst_ratio = 0.0f64;
    for &(s, t) in &pairs {
        let gap = (pooled.pi[s] - pooled.pi[t]).abs();
        let combined = (stderr[s] * stderr[s] + stderr[t] * stderr[t]).sqrt();
        assert!(
            gap <= 3.0 * combined,
            "states {s} and {t}: |pi_s - pi_t| = {gap:.5} exceeds 3 x combined SE {:.5}",
            3.0 * combined
        );
        if combined > 0.0 {
            worst_ratio = worst_ratio.max(gap / (3.0 * combined));
        }
    }
    let secs = check_budget(7, t0, 120.0);
    announce(
        7,
        format!(
            "6 mirrored pairs within noise (worst gap at {:.0}% of the 3-sigma bound), {secs:.1}s",
            100.0 * worst_ratio
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 8: identical configs and seeds give byte-identical CSVs

#[test]
fn acceptance_8_determinism() {
    // Criterion 1's run, twice.
    let cfg = config_path("common_pool_fairness.toml");
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    for dir in [&first, &second] {
        run_bin(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
    }
    let mut compared = 0usize;
    for file in ["occupancy.csv", "common_pool.csv", "summary.json"] {
        let a = fs::read(first.path().join(file)).unwrap();
        let b = fs::read(second.path().join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical simulate runs");
        compared += 1;
    }

    // Criterion 3's sweep: the shared run plus one fresh rerun.
    let baseline = shared_sweep();
    let rerun = tempfile::tempdir().unwrap();
    run_sweep_into(rerun.path());
    let mut sweep_files = vec!["sweep.csv".to_string()];
    for point in 0..3 {
        sweep_files.push(format!("point_{point}/phat.csv"));
        sweep_files.push(format!("point_{point}/pi.csv"));
        sweep_files.push(format!("point_{point}/summary.json"));
    }
    for file in &sweep_files {
        let a = fs::read(baseline.dir.path().join(file)).unwrap();
        let b = fs::read(rerun.path().join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical sweep runs");
        compared += 1;
    }
    announce(
        8,
        format!("{compared} output files byte-identical across repeated runs"),
    );
}
