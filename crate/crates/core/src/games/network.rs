//! Network formation on directed graphs (connections model).
//!
//! Each player chooses a subset of permitted neighbors to buy links
//! from; a bought link `(s, i)` points *into* the buyer `i`. A player's
//! utility is the number of nodes with a directed path into it minus a
//! per-link cost — a connectivity payoff net of maintenance.

use std::collections::BTreeSet;

use crate::error::{CoreError, Result};
use crate::game::{DesirableSet, Game};

/// Default ceiling on the joint-action space of a network game
/// (`Π_i 2^{|N_i|}`).
pub const DEFAULT_NETWORK_BUDGET: usize = 1 << 20;

/// Topology and cost parameters of a network formation game.
#[derive(Clone, Debug)]
pub struct NetworkSpec {
    n: usize,
    /// Per-node permitted neighbors, each sorted and self-free.
    neighborhoods: Vec<Vec<usize>>,
    c_link: f64,
}

impl NetworkSpec {
    /// Build a spec from explicit neighborhoods (player count is the
    /// outer length). Link cost must lie strictly between 0 and 1.
    pub fn new(neighborhoods: Vec<Vec<usize>>, c_link: f64) -> Result<Self> {
        let n = neighborhoods.len();
        if n < 2 {
            return Err(CoreError::InvalidInput(format!(
                "network game needs at least 2 nodes, got {n}"
            )));
        }
        if !(c_link > 0.0 && c_link < 1.0) {
            return Err(CoreError::InvalidInput(format!(
                "link cost must lie in (0, 1), got {c_link}"
            )));
        }
        let mut sorted = Vec::with_capacity(n);
        for (i, mut nbrs) in neighborhoods.into_iter().enumerate() {
            nbrs.sort_unstable();
            if let Some(&s) = nbrs.iter().find(|&&s| s >= n) {
                return Err(CoreError::InvalidInput(format!(
                    "node {i} lists neighbor {s}, but there are only {n} nodes"
                )));
            }
            if nbrs.contains(&i) {
                return Err(CoreError::InvalidInput(format!(
                    "node {i} lists itself as a neighbor"
                )));
            }
            if nbrs.windows(2).any(|w| w[0] == w[1]) {
                return Err(CoreError::InvalidInput(format!(
                    "node {i} lists a neighbor twice"
                )));
            }
            sorted.push(nbrs);
        }
        Ok(NetworkSpec {
            n,
            neighborhoods: sorted,
            c_link,
        })
    }

    /// Ring topology: each node may link to its two cyclic neighbors.
    pub fn ring(n: usize, c_link: f64) -> Result<Self> {
        if n < 2 {
            return Err(CoreError::InvalidInput(format!(
                "ring needs at least 2 nodes, got {n}"
            )));
        }
        let neighborhoods = (0..n)
            .map(|i| {
                let mut nbrs = vec![(i + n - 1) % n, (i + 1) % n];
                nbrs.sort_unstable();
                nbrs.dedup();
                nbrs
            })
            .collect();
        NetworkSpec::new(neighborhoods, c_link)
    }

    /// Unconstrained topology: every other node is a permitted neighbor.
    pub fn complete(n: usize, c_link: f64) -> Result<Self> {
        let neighborhoods = (0..n)
            .map(|i| (0..n).filter(|&s| s != i).collect())
            .collect();
        NetworkSpec::new(neighborhoods, c_link)
    }

    /// Parse neighborhoods from adjacency-list text: one `node: nbr nbr …`
    /// line per node, `#` comments and blank lines ignored. The nodes
    /// must be exactly `0..n−1`, each appearing once.
    pub fn parse_adjacency(text: &str, c_link: f64) -> Result<Self> {
        let mut rows: Vec<(usize, Vec<usize>)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (head, tail) = line.split_once(':').ok_or_else(|| {
                CoreError::Parse(format!("adjacency line {}: missing ':'", lineno + 1))
            })?;
            let node: usize = head.trim().parse().map_err(|_| {
                CoreError::Parse(format!(
                    "adjacency line {}: bad node index {:?}",
                    lineno + 1,
                    head.trim()
                ))
            })?;
            let nbrs = tail
                .split_whitespace()
                .map(|tok| {
                    tok.parse().map_err(|_| {
                        CoreError::Parse(format!(
                            "adjacency line {}: bad neighbor index {tok:?}",
                            lineno + 1
                        ))
                    })
                })
                .collect::<Result<Vec<usize>>>()?;
            rows.push((node, nbrs));
        }
        let n = rows.len();
        let mut neighborhoods = vec![None; n];
        for (node, nbrs) in rows {
            if node >= n {
                return Err(CoreError::Parse(format!(
                    "adjacency lists {n} nodes but names node {node}"
                )));
            }
            if neighborhoods[node].replace(nbrs).is_some() {
                return Err(CoreError::Parse(format!(
                    "adjacency names node {node} more than once"
                )));
            }
        }
        let neighborhoods = neighborhoods
            .into_iter()
            .enumerate()
            .map(|(i, nbrs)| {
                nbrs.ok_or_else(|| CoreError::Parse(format!("adjacency is missing node {i}")))
            })
            .collect::<Result<Vec<_>>>()?;
        NetworkSpec::new(neighborhoods, c_link)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighborhoods(&self) -> &[Vec<usize>] {
        &self.neighborhoods
    }

    pub fn c_link(&self) -> f64 {
        self.c_link
    }

    /// The action index by which `node` buys links from exactly the
    /// given neighbors (bit `k` of an action selects the `k`-th
    /// permitted neighbor in sorted order).
    pub fn action_for_links(&self, node: usize, from: &[usize]) -> Result<usize> {
        if node >= self.n {
            return Err(CoreError::InvalidInput(format!(
                "node {node} out of range (network has {} nodes)",
                self.n
            )));
        }
        let mut action = 0usize;
        for &s in from {
            let k = self.neighborhoods[node]
                .iter()
                .position(|&x| x == s)
                .ok_or_else(|| {
                    CoreError::InvalidInput(format!(
                        "node {node} cannot buy a link from {s}: not a permitted neighbor"
                    ))
                })?;
            action |= 1 << k;
        }
        Ok(action)
    }

    /// The directed graph induced by a joint action: bit `k` of node
    /// `i`'s action buys the edge from its `k`-th permitted neighbor
    /// into `i`.
    pub fn graph_of(&self, actions: &[usize]) -> Result<Digraph> {
        if actions.len() != self.n {
            return Err(CoreError::InvalidInput(format!(
                "joint action has {} coordinates, network has {} nodes",
                actions.len(),
                self.n
            )));
        }
        let mut edges = Vec::new();
        for (i, &a) in actions.iter().enumerate() {
            if a >= 1usize << self.neighborhoods[i].len() {
                return Err(CoreError::InvalidInput(format!(
                    "action {a} out of range for node {i} ({} permitted neighbors)",
                    self.neighborhoods[i].len()
                )));
            }
            for (k, &s) in self.neighborhoods[i].iter().enumerate() {
                if a & (1 << k) != 0 {
                    edges.push((s, i));
                }
            }
        }
        Digraph::new(self.n, edges)
    }
}

/// A directed graph on nodes `0..n`, with adjacency lists both ways.
#[derive(Clone, Debug)]
pub struct Digraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    /// `out[s]` = nodes `i` with an edge `s → i`.
    out: Vec<Vec<usize>>,
    /// `into[i]` = nodes `s` with an edge `s → i`.
    into: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (s, i) in edges {
            if s >= n || i >= n {
                return Err(CoreError::InvalidInput(format!(
                    "edge ({s}, {i}) out of range for {n} nodes"
                )));
            }
            if s == i {
                return Err(CoreError::InvalidInput(format!("self-loop at node {s}")));
            }
            set.insert((s, i));
        }
        let mut out = vec![Vec::new(); n];
        let mut into = vec![Vec::new(); n];
        for &(s, i) in &set {
            out[s].push(i);
            into[i].push(s);
        }
        Ok(Digraph {
            n,
            edges: set,
            out,
            into,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, s: usize, i: usize) -> bool {
        self.edges.contains(&(s, i))
    }

    /// Hop distances from every node *into* `target` (following edge
    /// orientation), `usize::MAX` when unreachable, 0 at the target.
    fn distances_into(&self, target: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        dist[target] = 0;
        let mut queue = std::collections::VecDeque::from([target]);
        while let Some(u) = queue.pop_front() {
            for &s in &self.into[u] {
                if dist[s] == usize::MAX {
                    dist[s] = dist[u] + 1;
                    queue.push_back(s);
                }
            }
        }
        dist
    }

    /// Number of nodes other than `target` with a directed path into it.
    fn reach_into(&self, target: usize) -> usize {
        self.distances_into(target)
            .iter()
            .filter(|&&d| d != usize::MAX)
            .count()
            - 1
    }
}

/// Build the network formation game for a spec with the default
/// joint-action budget.
pub fn network_formation(spec: &NetworkSpec) -> Result<Game> {
    network_formation_with_budget(spec, DEFAULT_NETWORK_BUDGET)
}

/// Build the network formation game, erroring when the joint-action
/// space exceeds `budget` profiles. Utilities are computed on demand
/// (one reverse reachability sweep per node) and memoized per profile.
pub fn network_formation_with_budget(spec: &NetworkSpec, budget: usize) -> Result<Game> {
    let mut size = 1usize;
    let mut counts = Vec::with_capacity(spec.n);
    for (i, nbrs) in spec.neighborhoods.iter().enumerate() {
        if nbrs.len() >= usize::BITS as usize {
            return Err(CoreError::Budget(format!(
                "node {i} has {} permitted neighbors; action set size overflows",
                nbrs.len()
            )));
        }
        let m = 1usize << nbrs.len();
        counts.push(m);
        size = size.checked_mul(m).ok_or_else(|| {
            CoreError::Budget("network joint-action space overflows usize".into())
        })?;
    }
    if size > budget {
        return Err(CoreError::Budget(format!(
            "network joint-action space has {size} profiles, budget is {budget}"
        )));
    }
    let n = spec.n;
    let bounds = (0.0, (n - 1) as f64);
    let closure_spec = spec.clone();
    Game::from_fn(
        format!("network formation n={n}"),
        counts,
        bounds,
        move |actions| {
            let g = closure_spec
                .graph_of(actions)
                .expect("profile decoded from a validated game index");
            (0..n)
                .map(|i| {
                    let links = actions[i].count_ones() as f64;
                    g.reach_into(i) as f64 - closure_spec.c_link * links
                })
                .collect()
        },
    )
}

/// Why a graph fails to be critically connected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriticalityViolation {
    /// No directed path from `from` to `to`.
    Unreachable { from: usize, to: usize },
    /// The edge coexists with a second path between its endpoints.
    DuplicatePath { edge: (usize, usize) },
}

/// Result of the critical-connectivity test.
#[derive(Clone, Copy, Debug)]
pub struct Criticality {
    pub critically_connected: bool,
    pub violation: Option<CriticalityViolation>,
}

/// A graph is critically connected when every node reaches every other
/// node and each edge is the *only* path between its endpoints — the
/// exact shape of the game's equilibrium networks.
pub fn is_critically_connected(g: &Digraph) -> Criticality {
    for target in 0..g.n {
        let dist = g.distances_into(target);
        if let Some(from) = (0..g.n).find(|&s| dist[s] == usize::MAX) {
            return Criticality {
                critically_connected: false,
                violation: Some(CriticalityViolation::Unreachable { from, to: target }),
            };
        }
    }
    for (s, i) in g.edges() {
        if count_simple_paths(g, s, i, 2) > 1 {
            return Criticality {
                critically_connected: false,
                violation: Some(CriticalityViolation::DuplicatePath { edge: (s, i) }),
            };
        }
    }
    Criticality {
        critically_connected: true,
        violation: None,
    }
}

/// Count directed simple paths from `s` to `t`, giving up at `cap`.
fn count_simple_paths(g: &Digraph, s: usize, t: usize, cap: usize) -> usize {
    fn dfs(g: &Digraph, u: usize, t: usize, visited: &mut [bool], cap: usize, count: &mut usize) {
        if *count >= cap {
            return;
        }
        if u == t {
            *count += 1;
            return;
        }
        visited[u] = true;
        for &v in &g.out[u] {
            if !visited[v] {
                dfs(g, v, t, visited, cap, count);
            }
        }
        visited[u] = false;
    }
    let mut count = 0;
    let mut visited = vec![false; g.n];
    dfs(g, s, t, &mut visited, cap, &mut count);
    count
}

/// Profiles at which every player simultaneously attains her maximal
/// utility. May be empty (reported by the caller); for network games
/// these are the efficient networks the dynamics should select.
pub fn payoff_dominant_networks(game: &Game) -> DesirableSet {
    let n = game.num_players();
    let mut max = vec![f64::NEG_INFINITY; n];
    for s in 0..game.num_profiles() {
        let u = game.utilities(s);
        for i in 0..n {
            max[i] = max[i].max(u[i]);
        }
    }
    let members = (0..game.num_profiles()).filter(|&s| {
        let u = game.utilities(s);
        (0..n).all(|i| u[i] == max[i])
    });
    DesirableSet::from_indices(game, members).expect("indices in range by construction")
}

/// Per-node inverse total distance: `1 / Σ_j dist(j → i)` with hop
/// distances into each node, and 0 whenever some node cannot reach it
/// (the infinite-distance convention). A connectivity score in
/// `[0, 1]`, maximal on a star into the node.
pub fn inverse_total_distance(g: &Digraph) -> Vec<f64> {
    (0..g.n)
        .map(|i| {
            let dist = g.distances_into(i);
            if dist.contains(&usize::MAX) {
                return 0.0;
            }
            let total: usize = dist.iter().sum();
            if total == 0 {
                0.0
            } else {
                1.0 / total as f64
            }
        })
        .collect()
}
