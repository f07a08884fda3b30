//! The four subcommands: structural verification, long-run
//! simulation, pure-state chain estimation with its invariant
//! distribution, and parameter sweeps over either of the latter two.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde_json::json;

use aspire_core::game::verify::{
    is_coordination_game_with_budget, is_symmetric_game, payoff_constants, CheckStatus,
    CoordinationReport, PayoffConstants,
};
use aspire_core::learning::{absorption_check_with_tol, run, stream_rng, LearnerState};
use aspire_core::markov::{
    estimate_phat_batches, fairness_report, fw_invariant, invariant_distribution, pure_states,
    FairnessReport, PhatMatrix, StationaryDistribution, DEFAULT_ABSORB_TOL,
};
use aspire_core::metrics::{
    CommonPoolCounter, CommonPoolReport, NetworkReport, NetworkSeries, OccupancyCounter,
    OccupancyReport, PureStateCounter,
};
use aspire_core::{CoreError, Game, Observer, Params, TremblePolicy};

use crate::config::{
    build_game, derive_sweep_point, parse_init, BuiltGame, Effective, GameKind, InitSpec,
    SweepCommand, UsageError,
};
use crate::csvio::{fmt_f64, json_f64, json_f64_slice, write_csv, write_json, Meta};

/// Largest state space for which per-batch transition matrices are
/// kept to derive standard errors (memory: batches × states²).
const BATCHING_STATE_CAP: usize = 256;

/// A command failure, split by exit code: usage problems exit 64,
/// runtime failures exit 1.
#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Run(String),
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Usage(m) | CmdError::Run(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CmdError {}

impl From<UsageError> for CmdError {
    fn from(e: UsageError) -> Self {
        CmdError::Usage(e.0)
    }
}

impl From<anyhow::Error> for CmdError {
    fn from(e: anyhow::Error) -> Self {
        CmdError::Run(format!("{e:#}"))
    }
}

fn run_err(e: CoreError) -> CmdError {
    CmdError::Run(e.to_string())
}

/// A loaded config with its game and validated learning parameters.
pub struct Prepared {
    pub eff: Effective,
    pub built: BuiltGame,
    pub params: Params,
}

/// Build the game and resolve the learning parameters for a loaded
/// config.
pub fn prepare(eff: Effective) -> Result<Prepared, CmdError> {
    let built = build_game(&eff.config)?;
    let params = eff.config.params.to_core(&built.game)?;
    Ok(Prepared { eff, built, params })
}

impl Prepared {
    fn out_dir(&self) -> PathBuf {
        self.eff.config.output.dir.clone()
    }

    fn meta(&self, command: &str) -> Meta {
        Meta::new(command, &self.eff.hash, self.eff.config.run.seed)
    }

    /// The initial profile: explicit, or drawn uniformly from a
    /// dedicated stream of the run seed.
    fn initial_profile(&self) -> Result<usize, CmdError> {
        match parse_init(&self.eff.config.run.init)? {
            InitSpec::Random => {
                let mut rng = stream_rng(self.eff.config.run.seed, u64::MAX);
                Ok(rng.random_range(0..self.built.game.num_profiles()))
            }
            InitSpec::Pure(actions) => self
                .built
                .game
                .index_of(&actions)
                .map_err(|e| CmdError::Usage(format!("run.init: {e}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// verify

fn status_exit(status: CheckStatus) -> i32 {
    match status {
        CheckStatus::Pass => 0,
        CheckStatus::Fail => 1,
        CheckStatus::Inconclusive => 2,
    }
}

fn worst(a: CheckStatus, b: CheckStatus) -> CheckStatus {
    use CheckStatus::*;
    match (a, b) {
        (Fail, _) | (_, Fail) => Fail,
        (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
        _ => Pass,
    }
}

fn list_profiles(game: &Game, profiles: impl Iterator<Item = usize>, cap: usize) -> String {
    let all: Vec<usize> = profiles.collect();
    let mut parts: Vec<String> = all
        .iter()
        .take(cap)
        .map(|&p| game.format_profile(p))
        .collect();
    if all.len() > cap {
        parts.push(format!("… {} more", all.len() - cap));
    }
    parts.join(" ")
}

fn print_coordination(game: &Game, report: &CoordinationReport) {
    println!("coordination: {}", report.status().as_str());
    let d = &report.dominance;
    let strictness = if d.strict { " (strict)" } else { " (weak)" };
    match &d.violation {
        None => println!("  desirable-dominance: {}{}", d.status.as_str(), strictness),
        Some(v) => println!(
            "  desirable-dominance: {} — player {} prefers {} to desirable {}",
            d.status.as_str(),
            v.player,
            game.format_profile(v.other),
            game.format_profile(v.desirable),
        ),
    }
    let a = &report.aligned_replies;
    match a.violation {
        None => println!(
            "  aligned better replies: {} ({} profiles needed a witness)",
            a.status.as_str(),
            a.witnesses.len()
        ),
        Some(p) => println!(
            "  aligned better replies: {} — no aligned improvement from {}",
            a.status.as_str(),
            game.format_profile(p)
        ),
    }
    let e = &report.escapes;
    match (e.violation, e.unresolved) {
        (Some(p), _) => println!(
            "  equilibrium escapes: {} — no escape chain from equilibrium {}",
            e.status.as_str(),
            game.format_profile(p)
        ),
        (None, Some(p)) => println!(
            "  equilibrium escapes: {} — search budget exhausted at {} ({} nodes)",
            e.status.as_str(),
            game.format_profile(p),
            e.nodes_expanded
        ),
        (None, None) => println!(
            "  equilibrium escapes: {} ({} undesirable equilibria, all escapable)",
            e.status.as_str(),
            e.chains.len()
        ),
    }
    let nash: Vec<String> = report
        .nash
        .iter()
        .map(|n| {
            format!(
                "{}{}",
                game.format_profile(n.profile),
                if n.strict { "" } else { " (weak)" }
            )
        })
        .collect();
    println!("  pure equilibria: {}", nash.join(" "));
}

fn print_constants(constants: &PayoffConstants, zeta: f64) {
    println!(
        "separation: delta_min={} delta_max={} delta_star={}",
        fmt_f64(constants.delta_min),
        fmt_f64(constants.delta_max),
        fmt_f64(constants.delta_star)
    );
    match constants.zeta_bound_h1 {
        Some(b) => println!(
            "  within-profile separation condition holds; tremble bound {}",
            fmt_f64(b)
        ),
        None => println!("  within-profile separation condition does not hold"),
    }
    match constants.zeta_bound_h2 {
        Some(b) => println!(
            "  simultaneous-maximizer condition holds; tremble bound {}",
            fmt_f64(b)
        ),
        None => println!("  simultaneous-maximizer condition does not hold"),
    }
    let bounds: Vec<f64> = [constants.zeta_bound_h1, constants.zeta_bound_h2]
        .into_iter()
        .flatten()
        .collect();
    if bounds.is_empty() {
        println!("  note: no admissible tremble bound is available for this desirable set");
    } else if bounds.iter().any(|&b| zeta < b) {
        println!("  zeta={} is within an admissible bound", fmt_f64(zeta));
    } else {
        println!(
            "  warning: zeta={} exceeds every available tremble bound",
            fmt_f64(zeta)
        );
    }
}

/// Structural verification of the configured game. Exit code is the
/// worst outcome over the enabled checks: pass 0, fail 1,
/// inconclusive 2.
pub fn cmd_verify(p: &Prepared) -> Result<i32, CmdError> {
    let game = &p.built.game;
    let desirable = &p.built.desirable;
    println!(
        "game: {} (kind={}, players={}, profiles={})",
        game.name(),
        p.built.kind.as_str(),
        game.num_players(),
        game.num_profiles()
    );
    println!("config_hash: {}", p.eff.hash);
    println!(
        "desirable set: {} profile(s): {}",
        desirable.len(),
        list_profiles(game, desirable.iter(), 12)
    );

    let mut overall = CheckStatus::Pass;
    let mut checked = false;

    if p.eff.config.analysis.check_coordination {
        let report =
            is_coordination_game_with_budget(game, desirable, p.eff.config.analysis.escape_budget)
                .map_err(run_err)?;
        print_coordination(game, &report);
        overall = worst(overall, report.status());
        checked = true;
    }

    let check_symmetry = p
        .eff
        .config
        .analysis
        .check_symmetry
        .unwrap_or_else(|| p.built.symmetric_by_default());
    if check_symmetry {
        let report = is_symmetric_game(game);
        match &report.counterexample {
            None => println!("symmetry: pass"),
            Some(v) => println!(
                "symmetry: fail — players {} and {} at {}: {}",
                v.players.0,
                v.players.1,
                game.format_profile(v.profile),
                v.reason
            ),
        }
        overall = worst(
            overall,
            if report.symmetric {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
        );
        checked = true;
    }

    match payoff_constants(game, desirable) {
        Ok(constants) => print_constants(&constants, p.params.zeta),
        Err(e) => println!("separation: not computed ({e})"),
    }

    if let Some(spec) = &p.built.cp_spec {
        if let Some(msg) = spec.ordering_chain_violation() {
            println!("warning: {msg}");
        }
    }

    if !checked {
        println!("note: all checks disabled by the config");
    }
    println!("verdict: {}", overall.as_str());
    Ok(status_exit(overall))
}

// ---------------------------------------------------------------------------
// simulate

/// Everything a simulation run produced, for reporting and sweeps.
pub struct SimOutcome {
    pub occupancy: OccupancyReport,
    pub window: Option<OccupancyReport>,
    pub desirable_mass: f64,
    pub final_actions: Vec<usize>,
    pub final_rho: Vec<f64>,
    pub absorbed: bool,
    pub pure_state_fraction: f64,
    pub common_pool: Option<CommonPoolReport>,
    pub network: Option<NetworkReport>,
}

/// Run the learning dynamics for the configured horizon and write
/// occupancy (plus per-family) reports.
pub fn cmd_simulate(p: &Prepared, out_dir: &Path, verbose: bool) -> Result<SimOutcome, CmdError> {
    let game = &p.built.game;
    let rc = &p.eff.config.run;
    let init = p.initial_profile()?;
    let x0 = LearnerState::pure(game, &p.params, init);

    let mut occupancy = OccupancyCounter::new();
    let mut window_counter = rc
        .window_start
        .map(|start| OccupancyCounter::with_window(start, None));
    let mut pure_counter = PureStateCounter::new(game, DEFAULT_ABSORB_TOL);
    let mut cp_counter =
        (p.built.kind == GameKind::CommonPool).then(|| CommonPoolCounter::new(game.num_players()));
    let mut net_series = match &p.built.net_spec {
        Some(spec) => Some(
            NetworkSeries::new(spec.clone(), p.built.desirable.clone(), rc.trace_stride)
                .map_err(run_err)?,
        ),
        None => None,
    };

    let mut observers: Vec<&mut dyn Observer> = Vec::new();
    observers.push(&mut occupancy);
    if let Some(w) = window_counter.as_mut() {
        observers.push(w);
    }
    observers.push(&mut pure_counter);
    if let Some(c) = cp_counter.as_mut() {
        observers.push(c);
    }
    if let Some(s) = net_series.as_mut() {
        observers.push(s);
    }

    if verbose {
        println!(
            "simulate: {} — horizon {}, seed {}, init {} (hash {})",
            game.name(),
            rc.horizon,
            rc.seed,
            game.format_profile(init),
            p.eff.hash
        );
    }

    let final_state = run(
        game,
        &p.params,
        TremblePolicy::Spontaneous,
        x0,
        rc.horizon,
        rc.seed,
        &mut observers,
    )
    .map_err(run_err)?;

    let report = occupancy.report();
    let window_report = window_counter.map(|w| w.report());
    let desirable_mass = report.mass_of(&p.built.desirable);
    let absorbed = absorption_check_with_tol(&final_state, game, DEFAULT_ABSORB_TOL).is_some();
    let outcome = SimOutcome {
        desirable_mass,
        final_actions: final_state.actions().to_vec(),
        final_rho: final_state.rho().to_vec(),
        absorbed,
        pure_state_fraction: pure_counter.fraction(),
        common_pool: cp_counter.map(|c| c.report()),
        network: net_series.map(|s| s.report()),
        occupancy: report,
        window: window_report,
    };

    write_simulate_outputs(p, out_dir, init, &outcome)?;

    if verbose {
        println!(
            "final: {} rho=[{}] absorbed={}",
            game.format_profile(game.index_of(&outcome.final_actions).map_err(run_err)?),
            outcome
                .final_rho
                .iter()
                .map(|&v| fmt_f64(v))
                .collect::<Vec<_>>()
                .join(" "),
            outcome.absorbed
        );
        println!(
            "desirable mass: {} (pure-state fraction {})",
            fmt_f64(outcome.desirable_mass),
            fmt_f64(outcome.pure_state_fraction)
        );
        if let Some(cp) = &outcome.common_pool {
            println!(
                "success: [{}] collisions: {} gap: {}",
                cp.success_freq
                    .iter()
                    .map(|&v| fmt_f64(v))
                    .collect::<Vec<_>>()
                    .join(" "),
                fmt_f64(cp.collision_freq),
                fmt_f64(cp.fairness_gap)
            );
        }
        if let Some(net) = &outcome.network {
            println!(
                "avg inverse total distance: [{}] dominant-network fraction: {}",
                net.running_avg_itd
                    .iter()
                    .map(|&v| fmt_f64(v))
                    .collect::<Vec<_>>()
                    .join(" "),
                fmt_f64(net.wheel_freq)
            );
        }
        println!("wrote {}", out_dir.display());
    }
    Ok(outcome)
}

fn occupancy_rows(game: &Game, report: &OccupancyReport) -> Vec<Vec<String>> {
    report
        .freq
        .iter()
        .map(|&(p, f)| vec![p.to_string(), game.format_profile(p), fmt_f64(f)])
        .collect()
}

fn write_simulate_outputs(
    p: &Prepared,
    out_dir: &Path,
    init: usize,
    outcome: &SimOutcome,
) -> Result<(), CmdError> {
    let game = &p.built.game;
    let meta = p.meta("simulate");
    let output = &p.eff.config.output;

    if output.writes_csv() {
        write_csv(
            &out_dir.join("occupancy.csv"),
            &meta,
            &["profile", "label", "fraction"],
            &occupancy_rows(game, &outcome.occupancy),
        )?;
        if let Some(window) = &outcome.window {
            let (start, _) = window.window.unwrap_or((0, None));
            let meta_w = meta.clone().with("window_start", start.to_string());
            write_csv(
                &out_dir.join("occupancy_window.csv"),
                &meta_w,
                &["profile", "label", "fraction"],
                &occupancy_rows(game, window),
            )?;
        }
        if let Some(cp) = &outcome.common_pool {
            let mut rows: Vec<Vec<String>> = cp
                .success_freq
                .iter()
                .enumerate()
                .map(|(i, &f)| vec![format!("agent_{i}"), fmt_f64(f)])
                .collect();
            rows.push(vec!["collision".into(), fmt_f64(cp.collision_freq)]);
            write_csv(
                &out_dir.join("common_pool.csv"),
                &meta,
                &["class", "frequency"],
                &rows,
            )?;
        }
        if let Some(net) = &outcome.network {
            let mut rows = Vec::new();
            for tr in &net.trace {
                for node in 0..tr.itd.len() {
                    rows.push(vec![
                        tr.t.to_string(),
                        node.to_string(),
                        fmt_f64(tr.itd[node]),
                        fmt_f64(tr.avg_itd[node]),
                        fmt_f64(tr.rho[node]),
                    ]);
                }
            }
            write_csv(
                &out_dir.join("network_series.csv"),
                &meta,
                &["t", "node", "inv_total_dist", "avg_inv_total_dist", "rho"],
                &rows,
            )?;
        }
    }

    if output.writes_json() {
        let top = |report: &OccupancyReport| {
            serde_json::Value::Array(
                report
                    .top(10)
                    .into_iter()
                    .map(|(profile, fraction)| {
                        json!({
                            "profile": profile,
                            "label": game.format_profile(profile),
                            "fraction": json_f64(fraction),
                        })
                    })
                    .collect(),
            )
        };
        let mut body = json!({
            "game": {
                "name": game.name(),
                "kind": p.built.kind.as_str(),
                "players": game.num_players(),
                "profiles": game.num_profiles(),
            },
            "run": {
                "horizon": p.eff.config.run.horizon,
                "init_profile": init,
                "init_label": game.format_profile(init),
            },
            "final": {
                "actions": &outcome.final_actions,
                "label": game.format_profile(
                    game.index_of(&outcome.final_actions).map_err(run_err)?
                ),
                "rho": json_f64_slice(&outcome.final_rho),
                "absorbed": outcome.absorbed,
            },
            "occupancy": {
                "total_steps": outcome.occupancy.total_steps,
                "desirable_mass": json_f64(outcome.desirable_mass),
                "pure_state_fraction": json_f64(outcome.pure_state_fraction),
                "top": top(&outcome.occupancy),
            },
        });
        let obj = body.as_object_mut().expect("body is an object");
        if let Some(window) = &outcome.window {
            let (start, _) = window.window.unwrap_or((0, None));
            obj.insert(
                "window".into(),
                json!({
                    "start": start,
                    "total_steps": window.total_steps,
                    "desirable_mass": json_f64(window.mass_of(&p.built.desirable)),
                    "top": top(window),
                }),
            );
        }
        if let Some(cp) = &outcome.common_pool {
            obj.insert(
                "common_pool".into(),
                json!({
                    "success_freq": json_f64_slice(&cp.success_freq),
                    "collision_freq": json_f64(cp.collision_freq),
                    "fairness_gap": json_f64(cp.fairness_gap),
                }),
            );
        }
        if let Some(net) = &outcome.network {
            obj.insert(
                "network".into(),
                json!({
                    "running_avg_itd": json_f64_slice(&net.running_avg_itd),
                    "dominant_freq": json_f64(net.wheel_freq),
                    "trace_rows": net.trace.len(),
                }),
            );
        }
        write_json(&out_dir.join("summary.json"), &meta, body)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// phat

/// Everything a chain-estimation run produced, for reporting and
/// sweeps.
pub struct PhatOutcome {
    pub n_states: usize,
    pub batches_used: usize,
    pub pi: StationaryDistribution,
    pub pi_stderr: Option<Vec<f64>>,
    pub off_desirable_mass: f64,
    pub off_desirable_mass_se: Option<f64>,
    pub fairness: Option<FairnessReport>,
    pub fw_max_gap: Option<f64>,
    pub unresolved_total: u64,
}

fn off_mass(pi: &[f64], desirable: &aspire_core::DesirableSet) -> f64 {
    pi.iter()
        .enumerate()
        .filter(|(s, _)| !desirable.contains(*s))
        .map(|(_, &m)| m)
        .sum()
}

/// Standard error of the mean of `values` (the batch-mean route: the
/// pooled statistic's spread estimated from independent batches).
fn batch_se(values: &[f64]) -> f64 {
    let b = values.len() as f64;
    let mean = values.iter().sum::<f64>() / b;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (var / b).sqrt()
}

/// Estimate the pure-state transition matrix, solve for its invariant
/// distribution, and write both.
pub fn cmd_phat(p: &Prepared, out_dir: &Path, verbose: bool) -> Result<PhatOutcome, CmdError> {
    let game = &p.built.game;
    let analysis = &p.eff.config.analysis;
    let index = pure_states(game);
    let n = index.num_states();

    let mut batches = analysis.batches;
    if batches > 1 && n > BATCHING_STATE_CAP {
        eprintln!(
            "note: {n} states exceed the per-batch storage cap of {BATCHING_STATE_CAP}; \
             standard errors disabled"
        );
        batches = 1;
    }
    if analysis.samples_per_row % batches != 0 {
        return Err(CmdError::Usage(format!(
            "analysis.samples_per_row ({}) must be a multiple of analysis.batches ({})",
            analysis.samples_per_row, analysis.batches
        )));
    }

    if verbose {
        println!(
            "phat: {} — {} states, {} samples/row ({} batch(es)), seed {} (hash {})",
            game.name(),
            n,
            analysis.samples_per_row,
            batches,
            p.eff.config.run.seed,
            p.eff.hash
        );
    }

    let estimate = estimate_phat_batches(
        game,
        &p.params,
        &index,
        analysis.samples_per_row,
        p.eff.config.run.seed,
        analysis.max_steps,
        batches,
    )
    .map_err(run_err)?;
    let pooled = &estimate.pooled;
    let pi = invariant_distribution(pooled).map_err(run_err)?;
    if pi.classes.len() > 1 {
        eprintln!(
            "warning: estimated chain is reducible ({} communicating classes); \
             the invariant distribution describes the sampled chain as-is",
            pi.classes.len()
        );
    }

    // Per-batch invariant distributions give honest spreads for any
    // functional of the distribution.
    let batch_pis: Option<Vec<StationaryDistribution>> = if estimate.batches.len() > 1 {
        let mut all = Vec::with_capacity(estimate.batches.len());
        for b in &estimate.batches {
            all.push(invariant_distribution(b).map_err(run_err)?);
        }
        Some(all)
    } else {
        None
    };
    let off = off_mass(&pi.pi, &p.built.desirable);
    let off_se = batch_pis.as_ref().map(|pis| {
        batch_se(
            &pis.iter()
                .map(|d| off_mass(&d.pi, &p.built.desirable))
                .collect::<Vec<_>>(),
        )
    });
    let pi_stderr = batch_pis.as_ref().map(|pis| {
        (0..n)
            .map(|s| batch_se(&pis.iter().map(|d| d.pi[s]).collect::<Vec<_>>()))
            .collect()
    });

    let fairness = if p.built.kind == GameKind::CommonPool {
        Some(fairness_report(&pi, game, &index).map_err(run_err)?)
    } else {
        None
    };

    let fw_max_gap = if analysis.fw_check {
        let fw = fw_invariant(pooled).map_err(run_err)?;
        Some(
            fw.pi
                .iter()
                .zip(&pi.pi)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max),
        )
    } else {
        None
    };

    let outcome = PhatOutcome {
        n_states: n,
        batches_used: batches,
        off_desirable_mass: off,
        off_desirable_mass_se: off_se,
        fairness,
        fw_max_gap,
        unresolved_total: pooled.unresolved().iter().sum(),
        pi_stderr,
        pi,
    };

    write_phat_outputs(p, out_dir, pooled, &outcome)?;

    if verbose {
        println!(
            "solver: {} residual {} ({} communicating class(es))",
            outcome.pi.method.as_str(),
            fmt_f64(outcome.pi.residual),
            outcome.pi.classes.len()
        );
        let se_text = outcome
            .off_desirable_mass_se
            .map(|se| format!(" ± {}", fmt_f64(se)))
            .unwrap_or_default();
        println!(
            "off-desirable invariant mass: {}{}",
            fmt_f64(outcome.off_desirable_mass),
            se_text
        );
        if let Some(f) = &outcome.fairness {
            println!(
                "per-agent invariant mass: [{}] collisions {} gap {}",
                f.per_agent_mass
                    .iter()
                    .map(|&v| fmt_f64(v))
                    .collect::<Vec<_>>()
                    .join(" "),
                fmt_f64(f.collision_mass),
                fmt_f64(f.max_pairwise_gap)
            );
        }
        if let Some(gap) = outcome.fw_max_gap {
            println!("spanning-graph cross-check max gap: {}", fmt_f64(gap));
        }
        println!("wrote {}", out_dir.display());
    }
    Ok(outcome)
}

fn write_phat_outputs(
    p: &Prepared,
    out_dir: &Path,
    pooled: &PhatMatrix,
    outcome: &PhatOutcome,
) -> Result<(), CmdError> {
    let game = &p.built.game;
    let n = outcome.n_states;
    let meta = p
        .meta("phat")
        .with("states", n.to_string())
        .with("samples_per_row", pooled.samples_per_row().to_string());
    let output = &p.eff.config.output;

    if output.writes_csv() {
        let mut rows = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let prob = pooled.entry(r, c);
                if prob > 0.0 {
                    rows.push(vec![
                        r.to_string(),
                        game.format_profile(r),
                        c.to_string(),
                        game.format_profile(c),
                        fmt_f64(prob),
                        fmt_f64(pooled.stderr(r, c)),
                    ]);
                }
            }
        }
        write_csv(
            &out_dir.join("phat.csv"),
            &meta,
            &[
                "from",
                "from_label",
                "to",
                "to_label",
                "probability",
                "stderr",
            ],
            &rows,
        )?;

        let pi_rows: Vec<Vec<String>> = (0..n)
            .map(|s| {
                vec![
                    s.to_string(),
                    game.format_profile(s),
                    fmt_f64(outcome.pi.pi[s]),
                    outcome
                        .pi_stderr
                        .as_ref()
                        .map(|se| fmt_f64(se[s]))
                        .unwrap_or_default(),
                    if p.built.desirable.contains(s) {
                        "1"
                    } else {
                        "0"
                    }
                    .into(),
                ]
            })
            .collect();
        write_csv(
            &out_dir.join("pi.csv"),
            &meta,
            &["state", "label", "pi", "pi_stderr", "desirable"],
            &pi_rows,
        )?;
    }

    if output.writes_json() {
        let mut body = json!({
            "states": n,
            "samples_per_row": pooled.samples_per_row(),
            "batches": outcome.batches_used,
            "unresolved_samples": outcome.unresolved_total,
            "solver": outcome.pi.method.as_str(),
            "residual": json_f64(outcome.pi.residual),
            "communicating_classes": outcome.pi.classes.len(),
            "off_desirable_mass": json_f64(outcome.off_desirable_mass),
            "desirable_mass": json_f64(1.0 - outcome.off_desirable_mass),
        });
        let obj = body.as_object_mut().expect("body is an object");
        if let Some(se) = outcome.off_desirable_mass_se {
            obj.insert("off_desirable_mass_se".into(), json_f64(se));
        }
        if let Some(f) = &outcome.fairness {
            obj.insert(
                "fairness".into(),
                json!({
                    "per_agent_mass": json_f64_slice(&f.per_agent_mass),
                    "collision_mass": json_f64(f.collision_mass),
                    "max_pairwise_gap": json_f64(f.max_pairwise_gap),
                }),
            );
        }
        if let Some(gap) = outcome.fw_max_gap {
            obj.insert("fw_max_gap".into(), json_f64(gap));
        }
        write_json(&out_dir.join("summary.json"), &meta, body)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep

fn sweep_metric_rows(
    param_key: &str,
    value: f64,
    seed: u64,
    metrics: &[(&str, f64, Option<f64>)],
) -> Vec<Vec<String>> {
    metrics
        .iter()
        .map(|&(name, v, se)| {
            vec![
                param_key.to_owned(),
                fmt_f64(value),
                seed.to_string(),
                name.to_owned(),
                fmt_f64(v),
                se.map(fmt_f64).unwrap_or_default(),
            ]
        })
        .collect()
}

/// Run the configured command once per parameter value, each point in
/// its own output directory with a derived seed, and collect the
/// headline metrics into one table.
pub fn cmd_sweep(p: &Prepared) -> Result<i32, CmdError> {
    let Some(sweep) = p.eff.config.sweep.clone() else {
        return Err(CmdError::Usage(
            "the sweep command needs a [sweep] section in the config".into(),
        ));
    };
    let base_out = p.out_dir();
    let mut rows: Vec<Vec<String>> = Vec::new();
    println!(
        "sweep: {} over {} ({} points, hash {})",
        match sweep.command {
            SweepCommand::Phat => "phat",
            SweepCommand::Simulate => "simulate",
        },
        sweep.parameter.key(),
        sweep.values.len(),
        p.eff.hash
    );
    for (k, &value) in sweep.values.iter().enumerate() {
        let eff = derive_sweep_point(&p.eff, sweep.parameter, value, k as u64)?;
        let point = prepare(eff)?;
        let point_dir = base_out.join(format!("point_{k}"));
        let seed = point.eff.config.run.seed;
        println!(
            "point {k}: {}={} seed={}",
            sweep.parameter.key(),
            fmt_f64(value),
            seed
        );
        match sweep.command {
            SweepCommand::Phat => {
                let outcome = cmd_phat(&point, &point_dir, false)?;
                rows.extend(sweep_metric_rows(
                    sweep.parameter.key(),
                    value,
                    seed,
                    &[(
                        "off_desirable_mass",
                        outcome.off_desirable_mass,
                        outcome.off_desirable_mass_se,
                    )],
                ));
            }
            SweepCommand::Simulate => {
                let outcome = cmd_simulate(&point, &point_dir, false)?;
                let mut metrics: Vec<(&str, f64, Option<f64>)> =
                    vec![("desirable_mass", outcome.desirable_mass, None)];
                if let Some(cp) = &outcome.common_pool {
                    metrics.push(("collision_freq", cp.collision_freq, None));
                    metrics.push(("fairness_gap", cp.fairness_gap, None));
                }
                if let Some(net) = &outcome.network {
                    metrics.push(("dominant_freq", net.wheel_freq, None));
                }
                rows.extend(sweep_metric_rows(
                    sweep.parameter.key(),
                    value,
                    seed,
                    &metrics,
                ));
            }
        }
    }
    let meta = p.meta("sweep");
    write_csv(
        &base_out.join("sweep.csv"),
        &meta,
        &[
            "parameter",
            "value",
            "seed",
            "metric",
            "metric_value",
            "metric_stderr",
        ],
        &rows,
    )?;
    println!("wrote {}", base_out.join("sweep.csv").display());
    Ok(0)
}
