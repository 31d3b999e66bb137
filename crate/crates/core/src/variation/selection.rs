use rand::Rng;

use super::VariationError;
use crate::genome::Genome;
use crate::scalar::Scalar;

/// Tournament of `n_tournament` entrants drawn with replacement, of which the
/// `n_winners` fittest enter the mating pool. A larger winner share means
/// weaker selection pressure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TournamentConfig {
    n_tournament: usize,
    n_winners: usize,
}

impl TournamentConfig {
    pub fn new(n_tournament: usize, n_winners: usize) -> Result<Self, VariationError> {
        if n_tournament < 2 || n_winners < 1 || n_winners > n_tournament {
            return Err(VariationError::Tournament { n_tournament, n_winners });
        }
        Ok(Self { n_tournament, n_winners })
    }

    /// Integer realization of a winner ratio: `N_W = clamp(round(ratio * N_T), 1, N_T)`.
    pub fn from_ratio(n_tournament: usize, ratio: f64) -> Result<Self, VariationError> {
        let n_winners = ((ratio * n_tournament as f64).round() as usize).clamp(1, n_tournament.max(1));
        Self::new(n_tournament, n_winners)
    }

    pub fn n_tournament(&self) -> usize {
        self.n_tournament
    }

    pub fn n_winners(&self) -> usize {
        self.n_winners
    }

    pub fn ratio(&self) -> f64 {
        self.n_winners as f64 / self.n_tournament as f64
    }
}

/// Indices into `fitness` forming a mating pool of `count` entries.
///
/// Repeats: draw `N_T` indices uniformly with replacement, emit the `N_W`
/// fittest of the draw (ties to the lower index), until `count` are emitted.
pub fn tournament_indices<T: Scalar, R: Rng + ?Sized>(
    fitness: &[T],
    cfg: TournamentConfig,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>, VariationError> {
    if fitness.is_empty() {
        return Err(VariationError::EmptyPool);
    }
    let mut pool = Vec::with_capacity(count);
    let mut draw = Vec::with_capacity(cfg.n_tournament);
    while pool.len() < count {
        draw.clear();
        draw.extend((0..cfg.n_tournament).map(|_| rng.random_range(0..fitness.len())));
        draw.sort_by(|&a, &b| {
            fitness[b]
                .partial_cmp(&fitness[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let take = cfg.n_winners.min(count - pool.len());
        pool.extend_from_slice(&draw[..take]);
    }
    Ok(pool)
}

/// [`tournament_indices`] over evaluated genomes.
pub fn tournament_select<T: Scalar, R: Rng + ?Sized>(
    pool: &[Genome<T>],
    cfg: TournamentConfig,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>, VariationError> {
    let fitness = pool
        .iter()
        .enumerate()
        .map(|(i, g)| g.fitness.ok_or(VariationError::MissingFitness(i)))
        .collect::<Result<Vec<T>, _>>()?;
    tournament_indices(&fitness, cfg, count, rng)
}

/// Closed-form approximation of the chance that the `k`-th ranked genome
/// (1 = best) reaches the mating pool:
/// `(1 - C(N_T, N_W) * ((N - k) / N)^N_W)^(2N / N_W)`.
///
/// Diagnostic only; selection itself is [`tournament_indices`]. The
/// approximation can leave `[0, 1]` or be NaN, which `in_unit_interval`
/// flags.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectionProbability<T> {
    pub value: T,
    pub in_unit_interval: bool,
}

pub fn selection_probability<T: Scalar>(
    k: usize,
    population: usize,
    n_tournament: usize,
    n_winners: usize,
) -> SelectionProbability<T> {
    let n = T::cast(population as f64);
    let binom = binomial::<T>(n_tournament, n_winners);
    let tail = ((n - T::cast(k as f64)) / n).powi(n_winners as i32);
    let exponent = T::cast(2.0) * n / T::cast(n_winners as f64);
    let base = T::one() - binom * tail;
    let value = if exponent.fract() == T::zero() && exponent.abs() < T::cast(i32::MAX as f64) {
        base.powi(exponent.to_i32().expect("integral exponent fits i32"))
    } else {
        base.powf(exponent)
    };
    SelectionProbability { value, in_unit_interval: value >= T::zero() && value <= T::one() }
}

fn binomial<T: Scalar>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(T::one(), |acc, i| acc * T::cast((n - i) as f64) / T::cast((i + 1) as f64))
}
