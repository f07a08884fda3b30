//! Experiment configuration: a single TOML document drives every
//! subcommand. Unknown keys are hard errors, command-line overrides
//! rewrite the document before it is parsed, and the effective
//! document (minus the sweep and output sections) is hashed so outputs
//! can be traced back to the exact configuration that produced them.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use aspire_core::game::{DesirableSet, Game};
use aspire_core::games::network::NetworkSpec;
use aspire_core::games::{
    common_pool, network_formation, payoff_dominant_networks, stag_hunt, successful_set,
    CommonPoolSpec,
};
use aspire_core::Params;

/// A configuration or usage problem (exit code 64), as opposed to a
/// runtime failure (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Config format version; must be 1.
    pub version: u32,
    pub game: GameConfig,
    pub params: ParamsConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    StagHunt,
    CommonPool,
    Network,
    Table,
    File,
}

impl GameKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GameKind::StagHunt => "stag_hunt",
            GameKind::CommonPool => "common_pool",
            GameKind::Network => "network",
            GameKind::Table => "table",
            GameKind::File => "file",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Ring,
    Complete,
    Adjacency,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub kind: GameKind,

    // common_pool
    #[serde(default)]
    pub players: Option<usize>,
    #[serde(default)]
    pub levels: Option<Vec<f64>>,
    #[serde(default)]
    pub costs: Option<Vec<f64>>,
    #[serde(default)]
    pub bonuses: Option<Vec<f64>>,

    // network
    #[serde(default)]
    pub topology: Option<Topology>,
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub c_link: Option<f64>,
    /// Inline adjacency text ("node: neighbor neighbor …" lines) for
    /// `topology = "adjacency"`.
    #[serde(default)]
    pub adjacency: Option<String>,

    // table
    #[serde(default)]
    pub action_counts: Option<Vec<usize>>,
    #[serde(default)]
    pub payoffs: Option<Vec<f64>>,
    #[serde(default)]
    pub labels: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub name: Option<String>,

    // file
    #[serde(default)]
    pub path: Option<PathBuf>,

    /// Explicit desirable set (list of joint actions). Optional for
    /// the built-in families (which derive it), required for `table`
    /// and `file` games.
    #[serde(default)]
    pub desirable: Option<Vec<Vec<usize>>>,
}

impl GameConfig {
    /// Rejects fields that belong to a different game kind, so typos
    /// and leftovers cannot silently change an experiment.
    fn check_field_ownership(&self) -> Result<(), UsageError> {
        let mut foreign: Vec<&str> = Vec::new();
        let cp = self.kind == GameKind::CommonPool;
        let net = self.kind == GameKind::Network;
        let table = self.kind == GameKind::Table;
        let file = self.kind == GameKind::File;
        if !cp && self.levels.is_some() {
            foreign.push("levels");
        }
        if !cp && self.costs.is_some() {
            foreign.push("costs");
        }
        if !cp && self.bonuses.is_some() {
            foreign.push("bonuses");
        }
        if !(cp || table) && self.players.is_some() {
            foreign.push("players");
        }
        if !net && self.topology.is_some() {
            foreign.push("topology");
        }
        if !net && self.nodes.is_some() {
            foreign.push("nodes");
        }
        if !net && self.c_link.is_some() {
            foreign.push("c_link");
        }
        if !net && self.adjacency.is_some() {
            foreign.push("adjacency");
        }
        if !table && self.action_counts.is_some() {
            foreign.push("action_counts");
        }
        if !table && self.payoffs.is_some() {
            foreign.push("payoffs");
        }
        if !table && self.labels.is_some() {
            foreign.push("labels");
        }
        if !table && self.name.is_some() {
            foreign.push("name");
        }
        if !file && self.path.is_some() {
            foreign.push("path");
        }
        if foreign.is_empty() {
            Ok(())
        } else {
            usage(format!(
                "game kind '{}' does not accept the field(s): {}",
                self.kind.as_str(),
                foreign.join(", ")
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub epsilon: f64,
    pub lambda: f64,
    pub zeta: f64,
    pub c_phi: f64,
    pub h: f64,
    /// Aspiration floor; defaults to (min payoff − 1).
    #[serde(default)]
    pub rho_lo: Option<f64>,
    /// Aspiration ceiling; defaults to (max payoff + 1).
    #[serde(default)]
    pub rho_hi: Option<f64>,
}

impl ParamsConfig {
    /// Resolves the optional aspiration bounds against the game's
    /// payoff range and validates the result.
    pub fn to_core(&self, game: &Game) -> Result<Params, UsageError> {
        let (lo, hi) = game.payoff_bounds();
        let params = Params {
            epsilon: self.epsilon,
            lambda: self.lambda,
            zeta: self.zeta,
            c_phi: self.c_phi,
            h: self.h,
            rho_lo: self.rho_lo.unwrap_or(lo - 1.0),
            rho_hi: self.rho_hi.unwrap_or(hi + 1.0),
        };
        params
            .validate(game)
            .map_err(|e| UsageError(format!("invalid params: {e}")))?;
        Ok(params)
    }
}

fn default_init() -> String {
    "random".to_owned()
}

fn default_trace_stride() -> u64 {
    aspire_core::metrics::DEFAULT_TRACE_STRIDE
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: u64,
    pub seed: u64,
    /// `"random"` (a seed-derived uniformly random joint action) or
    /// `"pure:<a,b,…>"` (an explicit joint action). Either way the
    /// trajectory starts at the pure state of that action.
    #[serde(default = "default_init")]
    pub init: String,
    /// When set, occupancy is additionally reported over steps
    /// `t ≥ window_start`.
    #[serde(default)]
    pub window_start: Option<u64>,
    /// Trace subsampling stride for network series.
    #[serde(default = "default_trace_stride")]
    pub trace_stride: u64,
}

fn default_samples_per_row() -> usize {
    1000
}

fn default_max_steps() -> u64 {
    10_000_000
}

fn default_batches() -> usize {
    10
}

fn default_true() -> bool {
    true
}

fn default_escape_budget() -> u64 {
    aspire_core::game::verify::DEFAULT_ESCAPE_BUDGET
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Monte-Carlo samples per transition-matrix row.
    #[serde(default = "default_samples_per_row")]
    pub samples_per_row: usize,
    /// Per-sample cap on unperturbed steps until absorption.
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    /// Sample batches per row for standard errors on invariant-mass
    /// statistics (requires `samples_per_row` divisible by this; 1
    /// disables batching).
    #[serde(default = "default_batches")]
    pub batches: usize,
    /// Cross-check the linear solve against the spanning-graph
    /// formula (small state spaces only).
    #[serde(default)]
    pub fw_check: bool,
    /// Run the coordination-structure verifier in `verify`.
    #[serde(default = "default_true")]
    pub check_coordination: bool,
    /// Run the symmetry verifier in `verify`; defaults per game kind
    /// (on for the symmetric families, off for networks and tables).
    #[serde(default)]
    pub check_symmetry: Option<bool>,
    /// Node budget for the equilibrium-escape search.
    #[serde(default = "default_escape_budget")]
    pub escape_budget: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            samples_per_row: default_samples_per_row(),
            max_steps: default_max_steps(),
            batches: default_batches(),
            fw_check: false,
            check_coordination: true,
            check_symmetry: None,
            escape_budget: default_escape_budget(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Epsilon,
    Lambda,
    Zeta,
}

impl SweepParam {
    pub fn key(&self) -> &'static str {
        match self {
            SweepParam::Epsilon => "epsilon",
            SweepParam::Lambda => "lambda",
            SweepParam::Zeta => "zeta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepCommand {
    Phat,
    Simulate,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
    pub command: SweepCommand,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<String> {
    vec!["csv".to_owned(), "json".to_owned()]
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    /// Which output families to write: "csv", "json".
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_out_dir(),
            formats: default_formats(),
        }
    }
}

impl OutputConfig {
    pub fn writes_csv(&self) -> bool {
        self.formats.iter().any(|f| f == "csv")
    }

    pub fn writes_json(&self) -> bool {
        self.formats.iter().any(|f| f == "json")
    }
}

/// How the trajectory is initialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitSpec {
    /// Uniformly random joint action drawn from a dedicated stream of
    /// the run seed.
    Random,
    /// An explicit joint action.
    Pure(Vec<usize>),
}

pub fn parse_init(text: &str) -> Result<InitSpec, UsageError> {
    if text == "random" {
        return Ok(InitSpec::Random);
    }
    if let Some(rest) = text.strip_prefix("pure:") {
        let actions: Result<Vec<usize>, _> =
            rest.split(',').map(|t| t.trim().parse::<usize>()).collect();
        return match actions {
            Ok(a) if !a.is_empty() => Ok(InitSpec::Pure(a)),
            _ => usage(format!("invalid pure initial state '{text}'")),
        };
    }
    usage(format!(
        "invalid run.init '{text}': expected \"random\" or \"pure:<a,b,…>\""
    ))
}

/// The parsed config together with the post-override document and its
/// hash.
#[derive(Debug, Clone)]
pub struct Effective {
    pub config: ExperimentConfig,
    /// The effective TOML document (after overrides and flags).
    pub table: toml::Table,
    /// SHA-256 (first 16 hex chars) of the canonical JSON rendering of
    /// the document minus its `sweep` and `output` sections.
    pub hash: String,
}

/// Parses `key=value` override strings into (dotted path, raw value).
fn split_override(raw: &str) -> Result<(Vec<String>, String), UsageError> {
    let Some((path, value)) = raw.split_once('=') else {
        return usage(format!("override '{raw}' is not of the form key=value"));
    };
    let segments: Vec<String> = path.split('.').map(|s| s.trim().to_owned()).collect();
    if segments.iter().any(|s| s.is_empty()) {
        return usage(format!("override '{raw}' has an empty path segment"));
    }
    Ok((segments, value.to_owned()))
}

/// Parses an override value as TOML (so numbers, booleans, and arrays
/// work), falling back to a plain string.
fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key v was just parsed"),
        Err(_) => toml::Value::String(raw.to_owned()),
    }
}

fn apply_override(table: &mut toml::Table, raw: &str) -> Result<(), UsageError> {
    let (segments, value) = split_override(raw)?;
    let mut cursor = table;
    for seg in &segments[..segments.len() - 1] {
        let entry = cursor
            .entry(seg.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = match entry.as_table_mut() {
            Some(t) => t,
            None => {
                return usage(format!(
                    "override '{raw}': '{seg}' is not a table in the config"
                ))
            }
        };
    }
    cursor.insert(
        segments.last().expect("nonempty path").clone(),
        parse_override_value(&value),
    );
    Ok(())
}

/// Canonical hash of a config document: JSON rendering with sorted
/// keys, minus the sections that do not affect a single run's
/// numerical results' identity tracking.
fn hash_table(table: &toml::Table) -> Result<String, UsageError> {
    let mut hashed = table.clone();
    hashed.remove("sweep");
    hashed.remove("output");
    let json = serde_json::to_value(&hashed)
        .map_err(|e| UsageError(format!("cannot canonicalize config: {e}")))?;
    let text = serde_json::to_string(&json)
        .map_err(|e| UsageError(format!("cannot canonicalize config: {e}")))?;
    let digest = Sha256::digest(text.as_bytes());
    Ok(hex::encode(digest)[..16].to_owned())
}

fn effective_from_table(table: toml::Table) -> Result<Effective, UsageError> {
    let hash = hash_table(&table)?;
    let config: ExperimentConfig = toml::Value::Table(table.clone())
        .try_into()
        .map_err(|e| UsageError(format!("invalid config: {e}")))?;
    if config.version != 1 {
        return usage(format!(
            "unsupported config version {} (expected 1)",
            config.version
        ));
    }
    config.game.check_field_ownership()?;
    parse_init(&config.run.init)?;
    if config.run.trace_stride == 0 {
        return usage("run.trace_stride must be ≥ 1");
    }
    if config.analysis.samples_per_row == 0 {
        return usage("analysis.samples_per_row must be ≥ 1");
    }
    if config.analysis.batches == 0 {
        return usage("analysis.batches must be ≥ 1");
    }
    if let Some(sweep) = &config.sweep {
        if sweep.values.is_empty() {
            return usage("sweep.values must not be empty");
        }
        if sweep.values.iter().any(|v| !v.is_finite()) {
            return usage("sweep.values must be finite");
        }
    }
    Ok(Effective {
        config,
        table,
        hash,
    })
}

/// Loads a config file and applies overrides and flags. Flags win over
/// `--override`, which wins over the file.
pub fn load_config(
    path: &Path,
    overrides: &[String],
    seed_flag: Option<u64>,
    out_flag: Option<&Path>,
) -> Result<Effective, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| UsageError(format!("cannot parse config {}: {e}", path.display())))?;
    for raw in overrides {
        apply_override(&mut table, raw)?;
    }
    if let Some(seed) = seed_flag {
        let run = table
            .entry("run".to_owned())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        match run.as_table_mut() {
            Some(t) => {
                let seed_i64 = i64::try_from(seed)
                    .map_err(|_| UsageError(format!("--seed {seed} is too large")))?;
                t.insert("seed".to_owned(), toml::Value::Integer(seed_i64));
            }
            None => return usage("config key 'run' is not a table"),
        }
    }
    if let Some(out) = out_flag {
        let output = table
            .entry("output".to_owned())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        match output.as_table_mut() {
            Some(t) => {
                t.insert(
                    "dir".to_owned(),
                    toml::Value::String(out.to_string_lossy().into_owned()),
                );
            }
            None => return usage("config key 'output' is not a table"),
        }
    }
    let mut effective = effective_from_table(table)?;
    // Game files resolve relative to the config file's directory.
    if effective.config.game.kind == GameKind::File {
        if let Some(game_path) = &effective.config.game.path {
            if game_path.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                effective.config.game.path = Some(base.join(game_path));
            }
        }
    }
    Ok(effective)
}

/// Derives the configuration of one sweep point: the swept parameter
/// set to `value`, the seed advanced by the point index, and the sweep
/// section removed — so a single-value sweep is the same document as
/// the plain command.
pub fn derive_sweep_point(
    base: &Effective,
    param: SweepParam,
    value: f64,
    point: u64,
) -> Result<Effective, UsageError> {
    let mut table = base.table.clone();
    table.remove("sweep");
    {
        let params = table
            .get_mut("params")
            .and_then(|v| v.as_table_mut())
            .ok_or_else(|| UsageError("config has no [params] table".into()))?;
        params.insert(param.key().to_owned(), toml::Value::Float(value));
    }
    {
        let run = table
            .get_mut("run")
            .and_then(|v| v.as_table_mut())
            .ok_or_else(|| UsageError("config has no [run] table".into()))?;
        let base_seed = base.config.run.seed;
        let seed = base_seed
            .checked_add(point)
            .and_then(|s| i64::try_from(s).ok())
            .ok_or_else(|| UsageError(format!("sweep seed {base_seed}+{point} overflows")))?;
        run.insert("seed".to_owned(), toml::Value::Integer(seed));
    }
    let mut eff = effective_from_table(table)?;
    // Preserve the already-resolved game file path.
    if eff.config.game.kind == GameKind::File {
        eff.config.game.path = base.config.game.path.clone();
    }
    Ok(eff)
}

/// A constructed game with the derived analysis context.
pub struct BuiltGame {
    pub game: Game,
    pub desirable: DesirableSet,
    pub kind: GameKind,
    pub cp_spec: Option<CommonPoolSpec>,
    pub net_spec: Option<NetworkSpec>,
}

impl BuiltGame {
    /// Whether the symmetry verifier runs by default for this kind.
    pub fn symmetric_by_default(&self) -> bool {
        matches!(self.kind, GameKind::StagHunt | GameKind::CommonPool)
    }
}

fn require<T: Clone>(field: &Option<T>, name: &str, kind: &str) -> Result<T, UsageError> {
    field
        .clone()
        .ok_or_else(|| UsageError(format!("game kind '{kind}' requires the field '{name}'")))
}

/// Builds the game and its desirable set from the config.
pub fn build_game(config: &ExperimentConfig) -> Result<BuiltGame, UsageError> {
    let gc = &config.game;
    let wrap = |e: aspire_core::CoreError| UsageError(format!("invalid game: {e}"));
    let (game, default_desirable, cp_spec, net_spec) = match gc.kind {
        GameKind::StagHunt => {
            let game = stag_hunt();
            // The payoff-dominant equilibrium (both play the first
            // action).
            let desirable = DesirableSet::from_indices(&game, [0usize]).map_err(wrap)?;
            (game, Some(desirable), None, None)
        }
        GameKind::CommonPool => {
            let spec = CommonPoolSpec::new(
                require(&gc.players, "players", "common_pool")?,
                require(&gc.levels, "levels", "common_pool")?,
                require(&gc.costs, "costs", "common_pool")?,
                require(&gc.bonuses, "bonuses", "common_pool")?,
            )
            .map_err(wrap)?;
            let game = common_pool(&spec);
            let desirable = successful_set(&game);
            (game, Some(desirable), Some(spec), None)
        }
        GameKind::Network => {
            let c_link = require(&gc.c_link, "c_link", "network")?;
            let spec = match require(&gc.topology, "topology", "network")? {
                Topology::Ring => {
                    NetworkSpec::ring(require(&gc.nodes, "nodes", "network")?, c_link)
                }
                Topology::Complete => {
                    NetworkSpec::complete(require(&gc.nodes, "nodes", "network")?, c_link)
                }
                Topology::Adjacency => NetworkSpec::parse_adjacency(
                    &require(&gc.adjacency, "adjacency", "network")?,
                    c_link,
                ),
            }
            .map_err(wrap)?;
            let game = network_formation(&spec).map_err(wrap)?;
            let desirable = payoff_dominant_networks(&game);
            (game, Some(desirable), None, Some(spec))
        }
        GameKind::Table => {
            let game = Game::from_table(
                gc.name.clone().unwrap_or_else(|| "table".to_owned()),
                require(&gc.action_counts, "action_counts", "table")?,
                require(&gc.payoffs, "payoffs", "table")?,
                gc.labels.clone(),
            )
            .map_err(wrap)?;
            (game, None, None, None)
        }
        GameKind::File => {
            let path = require(&gc.path, "path", "file")?;
            let text = std::fs::read_to_string(&path).map_err(|e| {
                UsageError(format!("cannot read game file {}: {e}", path.display()))
            })?;
            let game = aspire_core::game::game_from_toml_str(&text).map_err(wrap)?;
            (game, None, None, None)
        }
    };

    let desirable = match (&gc.desirable, default_desirable) {
        (Some(profiles), _) => DesirableSet::from_profiles(&game, profiles).map_err(wrap)?,
        (None, Some(derived)) => derived,
        (None, None) => {
            return usage(format!(
                "game kind '{}' requires an explicit 'desirable' set",
                gc.kind.as_str()
            ))
        }
    };

    Ok(BuiltGame {
        game,
        desirable,
        kind: gc.kind,
        cp_spec,
        net_spec,
    })
}
