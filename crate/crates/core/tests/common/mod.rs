//! Oracles and generators shared by the integration tests and the
//! acceptance runner. Each oracle is written independently of the library
//! code it checks.

#![allow(dead_code)]

pub mod checks;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use agent_core::environments::acrobot::{Acrobot, AcrobotState};
use agent_core::environments::mountain_car::{MountainCar, MountainCarState};
use agent_core::environments::{Action, Environment};
use agent_core::genome::{init_population, InitConfig, InnovationTracker};
use agent_core::variation::{mutate, MutationRates};
use agent_core::{Genome, Role};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Genomes

/// A valid genome of random shape: 1-4 inputs, 1-3 outputs, then up to
/// `max_mutations` rounds of heavy structural mutation.
pub fn random_genome(rng: &mut ChaCha8Rng, max_mutations: usize) -> Genome<f64> {
    let n_in = rng.random_range(1..=4);
    let n_out = rng.random_range(1..=3);
    random_genome_with_shape(rng, n_in, n_out, max_mutations)
}

pub fn random_genome_with_shape(
    rng: &mut ChaCha8Rng,
    n_in: usize,
    n_out: usize,
    max_mutations: usize,
) -> Genome<f64> {
    let cfg = InitConfig::new(n_in, n_out, 4);
    let mut tracker = InnovationTracker::new(cfg.first_hidden_id());
    let pop: Vec<Genome<f64>> = init_population(&cfg, &mut tracker, rng).expect("valid init config");
    let mut g = pop[rng.random_range(0..pop.len())].clone();
    let rates = MutationRates { structural: 0.9, p_prop: 0.3, ..MutationRates::default() };
    for _ in 0..rng.random_range(0..=max_mutations) {
        tracker.start_generation();
        g = mutate(&g, &rates, &mut tracker, rng).0;
    }
    g
}

// ---------------------------------------------------------------------------
// Distance and minimum spanning tree

fn type_key(g: &Genome<f64>, id: agent_core::NodeId) -> (u8, usize, usize) {
    let n = g.node(id).expect("edge endpoint exists");
    let class = match n.role {
        Role::Input | Role::Bias => 0,
        Role::Hidden => 1,
        Role::Output => 2,
    };
    let act = n.activation.map_or(usize::MAX, |a| a.index());
    (class, act, n.memory.order())
}

/// Half the L1 difference of node-type counts plus half the L1 difference
/// of edge counts keyed by endpoint types, using hash maps.
pub fn oracle_distance(a: &Genome<f64>, b: &Genome<f64>) -> f64 {
    type Key = (u8, usize, usize);
    let profile = |g: &Genome<f64>| {
        let mut nodes: HashMap<Key, i64> = HashMap::new();
        let mut edges: HashMap<(Key, Key), i64> = HashMap::new();
        for n in g.nodes() {
            *nodes.entry(type_key(g, n.id)).or_default() += 1;
        }
        for e in g.edges() {
            *edges.entry((type_key(g, e.source), type_key(g, e.target))).or_default() += 1;
        }
        (nodes, edges)
    };
    fn l1<K: std::hash::Hash + Eq + Copy>(x: &HashMap<K, i64>, y: &HashMap<K, i64>) -> i64 {
        let mut keys: Vec<K> = x.keys().copied().collect();
        keys.extend(y.keys().copied().filter(|k| !x.contains_key(k)));
        keys.iter().map(|k| (x.get(k).unwrap_or(&0) - y.get(k).unwrap_or(&0)).abs()).sum()
    }
    let (na, ea) = profile(a);
    let (nb, eb) = profile(b);
    0.5 * l1(&na, &nb) as f64 + 0.5 * l1(&ea, &eb) as f64
}

/// Minimum total weight over every labelled spanning tree of the complete
/// graph, enumerated as Prüfer sequences.
pub fn brute_force_mst(n: usize, w: impl Fn(usize, usize) -> f64) -> f64 {
    match n {
        0 | 1 => return 0.0,
        2 => return w(0, 1),
        _ => {}
    }
    let len = n - 2;
    let mut seq = vec![0usize; len];
    let mut best = f64::INFINITY;
    loop {
        best = best.min(prufer_tree(&seq, n).iter().map(|&(a, b)| w(a, b)).sum());
        let mut i = 0;
        loop {
            if i == len {
                return best;
            }
            seq[i] += 1;
            if seq[i] < n {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
    }
}

fn prufer_tree(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &v in seq {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &v in seq {
        let leaf = (0..n).find(|&u| degree[u] == 1).expect("a leaf always exists");
        edges.push((leaf, v));
        degree[leaf] -= 1;
        degree[v] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&u| degree[u] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

// ---------------------------------------------------------------------------
// Selection

/// Share of mating-pool slots taken by each rank (0 = best) when `n_w`
/// winners are kept from `n_t` entrants drawn with replacement from a pool
/// of `pool` distinct fitness values, simulated `tournaments` times.
pub fn monte_carlo_slot_shares(pool: usize, n_t: usize, n_w: usize, tournaments: usize, seed: u64) -> Vec<f64> {
    let mut r = rand::rngs::StdRng::seed_from_u64(seed);
    let mut counts = vec![0u64; pool];
    let mut draw = vec![0usize; n_t];
    for _ in 0..tournaments {
        for d in draw.iter_mut() {
            *d = r.random_range(0..pool);
        }
        // rank 0 is the best, so the winners are the smallest ranks drawn
        draw.sort_unstable();
        for &w in &draw[..n_w] {
            counts[w] += 1;
        }
    }
    let total = (tournaments * n_w) as f64;
    counts.iter().map(|&c| c as f64 / total).collect()
}

/// `(1 - C(n_t, n_w) * ((n - k) / n)^n_w)^(2n / n_w)` in exact rational
/// arithmetic; `2n / n_w` must be an integer.
pub fn selection_probability_exact(k: usize, n: usize, n_t: usize, n_w: usize) -> BigRational {
    assert_eq!((2 * n) % n_w, 0, "exponent must be integral");
    let big = |x: usize| BigRational::from_integer(BigInt::from(x));
    let mut binom = big(1);
    for i in 0..n_w {
        binom = binom * big(n_t - i) / big(i + 1);
    }
    let ratio = big(n - k) / big(n);
    let mut tail = big(1);
    for _ in 0..n_w {
        tail *= ratio.clone();
    }
    let base = big(1) - binom * tail;
    let mut value = big(1);
    for _ in 0..(2 * n / n_w) {
        value *= base.clone();
    }
    value
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().expect("finite rational")
}

// ---------------------------------------------------------------------------
// Physics reference traces

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

#[derive(Clone, Debug)]
pub struct TraceCheck {
    pub file: String,
    pub rows: usize,
    /// Largest absolute difference over state components and rewards.
    pub max_error: f64,
    /// Rows whose terminal flag disagreed.
    pub flag_mismatches: usize,
}

fn parse_row(record: &csv::StringRecord) -> Vec<f64> {
    record.iter().map(|s| s.parse::<f64>().expect("numeric fixture field")).collect()
}

/// Replays every row of a Mountain Car reference trace from the recorded
/// pre-step state.
pub fn check_mountain_car_trace(path: &Path) -> TraceCheck {
    let mut reader = csv::Reader::from_path(path).expect("fixture exists");
    let (mut rows, mut max_error, mut flag_mismatches) = (0, 0.0f64, 0);
    for rec in reader.records() {
        let v = parse_row(&rec.expect("well-formed fixture"));
        let (before, action, after, reward, terminal) = ([v[1], v[2]], v[3], [v[4], v[5]], v[6], v[7] == 1.0);
        let mut env = MountainCar::with_state(MountainCarState { position: before[0], velocity: before[1] });
        let (r, done) = env.advance(Action::Continuous(action)).expect("step");
        let s = env.current().expect("state");
        for (x, y) in [(s.position, after[0]), (s.velocity, after[1]), (r, reward)] {
            max_error = max_error.max((x - y).abs());
        }
        flag_mismatches += usize::from(done != terminal);
        rows += 1;
    }
    TraceCheck { file: file_name(path), rows, max_error, flag_mismatches }
}

/// Replays every row of an Acrobot reference trace. The reference pays 0 on
/// the terminal step where this implementation pays -1, so rewards are only
/// compared on non-terminal rows.
pub fn check_acrobot_trace(path: &Path) -> TraceCheck {
    let mut reader = csv::Reader::from_path(path).expect("fixture exists");
    let (mut rows, mut max_error, mut flag_mismatches) = (0, 0.0f64, 0);
    for rec in reader.records() {
        let v = parse_row(&rec.expect("well-formed fixture"));
        let before = [v[1], v[2], v[3], v[4]];
        let action = v[5] as usize;
        let after = [v[6], v[7], v[8], v[9]];
        let (reward, terminal) = (v[10], v[11] == 1.0);
        let mut env = Acrobot::with_state(AcrobotState(before));
        let (r, done) = env.advance(Action::Discrete(action)).expect("step");
        let s = env.current().expect("state");
        for (x, y) in s.0.iter().zip(after) {
            max_error = max_error.max((x - y).abs());
        }
        if !terminal {
            max_error = max_error.max((r - reward).abs());
        }
        flag_mismatches += usize::from(done != terminal);
        rows += 1;
    }
    TraceCheck { file: file_name(path), rows, max_error, flag_mismatches }
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Checks every reference trace in the fixtures directory.
pub fn check_all_traces() -> Vec<TraceCheck> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixtures_dir())
        .expect("fixtures directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            if file_name(p).starts_with("mountain_car") {
                check_mountain_car_trace(p)
            } else {
                check_acrobot_trace(p)
            }
        })
        .collect()
}
