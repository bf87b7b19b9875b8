//! Layout recovery as a quadratic assignment problem.
//!
//! A [`Layout`] assigns one word label to every grid place. Feasible layouts
//! are exactly those that pool back to the input histogram; since instances
//! of the same word are interchangeable, the label grid is the canonical
//! representation of an assignment.

mod anneal;
mod exact;
mod genetic;
mod instance;
mod local;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

pub use anneal::simulated_annealing;
pub use exact::{arrangement_count, brute_force_solve, BRUTE_FORCE_LIMIT};
pub use genetic::{crossover, ga_hc_solve, similarity, GaOutcome};
pub use instance::QapInstance;

use crate::costs::{AdjacencyCost, PositionCost};
use crate::pipeline::{BovwHistogram, SamplingSpec, WordGrid};
use crate::rng::{self, StreamRng};
use crate::{Error, Result};

/// Word labels per grid place; same representation as a quantized image.
pub type Layout = WordGrid;

pub const DEFAULT_LAMBDA: f64 = 0.8;
pub const DEFAULT_POPULATION: usize = 100;
pub const DEFAULT_REPLACE_PROB: f64 = 0.2;
pub const DEFAULT_MAX_GENERATIONS: usize = 10_000;
pub const DEFAULT_CONVERGENCE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealingSchedule {
    pub initial_temperature: f64,
    /// Geometric cooling factor applied after every proposal.
    pub decay: f64,
    pub iterations: usize,
}

impl Default for AnnealingSchedule {
    fn default() -> Self {
        Self {
            initial_temperature: 1.0,
            decay: 0.999,
            iterations: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Weight of the position cost; the adjacency cost gets `1 - lambda`.
    pub lambda: f64,
    pub population: usize,
    pub replace_prob: f64,
    pub seed: u64,
    pub max_generations: usize,
    pub convergence_eps: f64,
    pub annealing: AnnealingSchedule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            population: DEFAULT_POPULATION,
            replace_prob: DEFAULT_REPLACE_PROB,
            seed: 0,
            max_generations: DEFAULT_MAX_GENERATIONS,
            convergence_eps: DEFAULT_CONVERGENCE_EPS,
            annealing: AnnealingSchedule::default(),
        }
    }
}

impl SolverConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!(
                "lambda {} outside [0, 1]",
                self.lambda
            )));
        }
        if !(self.replace_prob > 0.0 && self.replace_prob < 1.0) {
            return Err(Error::invalid(format!(
                "replacement probability {} outside (0, 1)",
                self.replace_prob
            )));
        }
        if self.population < 2 {
            return Err(Error::invalid("population must have at least 2 members"));
        }
        // Written so that NaN fails every check.
        if !(self.convergence_eps >= 0.0) {
            return Err(Error::invalid("convergence epsilon must be non-negative"));
        }
        let s = &self.annealing;
        if !(s.initial_temperature >= 0.0) || !(s.decay > 0.0 && s.decay <= 1.0) {
            return Err(Error::invalid(
                "annealing needs temperature >= 0 and decay in (0, 1]",
            ));
        }
        Ok(())
    }
}

/// Layout solvers selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Solver {
    Random,
    HillClimb,
    Annealing,
    GaHc,
    BruteForce,
}

impl Solver {
    pub const ALL: [Solver; 5] = [
        Solver::Random,
        Solver::HillClimb,
        Solver::Annealing,
        Solver::GaHc,
        Solver::BruteForce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Random => "rand",
            Solver::HillClimb => "hc",
            Solver::Annealing => "sa",
            Solver::GaHc => "gahc",
            Solver::BruteForce => "brute",
        }
    }

    pub fn solve(
        self,
        inst: &QapInstance<'_>,
        hist: &BovwHistogram,
        config: &SolverConfig,
    ) -> Result<Layout> {
        config.validate()?;
        check_histogram(inst, hist)?;
        match self {
            Solver::Random => random_layout(hist, *inst.sampling(), config.seed),
            Solver::HillClimb => {
                let start = random_layout(hist, *inst.sampling(), config.seed)?;
                hill_climb_eps(inst, &start, config.convergence_eps)
            }
            Solver::Annealing => simulated_annealing(inst, hist, &config.annealing, config.seed),
            Solver::GaHc => ga_hc_solve(inst, hist, config).map(|o| o.layout),
            Solver::BruteForce => brute_force_solve(inst, hist),
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Solver::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown solver {:?} (rand | hc | sa | gahc | brute)",
                    s
                ))
            })
    }
}

pub(crate) fn check_histogram(inst: &QapInstance<'_>, hist: &BovwHistogram) -> Result<()> {
    if hist.k() != inst.k() {
        return Err(Error::invalid(format!(
            "histogram has {} words, cost tables have {}",
            hist.k(),
            inst.k()
        )));
    }
    if hist.total() != inst.n() {
        return Err(Error::invalid(format!(
            "histogram holds {} words but the grid has {} places",
            hist.total(),
            inst.n()
        )));
    }
    Ok(())
}

pub(crate) fn random_layout_with(hist: &BovwHistogram, rng: &mut StreamRng) -> Vec<usize> {
    let mut labels = hist.instances();
    labels.shuffle(rng);
    labels
}

/// Uniformly random arrangement of the histogram's word instances
/// (seeded Fisher-Yates shuffle).
pub fn random_layout(hist: &BovwHistogram, sampling: SamplingSpec, seed: u64) -> Result<Layout> {
    if hist.total() != sampling.cells() {
        return Err(Error::invalid(format!(
            "histogram holds {} words but the grid has {} places",
            hist.total(),
            sampling.cells()
        )));
    }
    let mut rng = rng::stream(seed, rng::LAYOUT_STREAM);
    Layout::new(sampling, random_layout_with(hist, &mut rng))
}

/// Best-improvement 2-swap descent to a local optimum, using the default
/// convergence threshold.
pub fn hill_climb(inst: &QapInstance<'_>, layout: &Layout) -> Result<Layout> {
    hill_climb_eps(inst, layout, DEFAULT_CONVERGENCE_EPS)
}

/// [`hill_climb`] stopping once no swap improves by more than `eps`.
pub fn hill_climb_eps(inst: &QapInstance<'_>, layout: &Layout, eps: f64) -> Result<Layout> {
    inst.check_layout(layout)?;
    let mut labels = layout.labels().to_vec();
    local::climb(inst, &mut labels, eps, None);
    Layout::new(*layout.sampling(), labels)
}

/// Runs at most `max_moves` hill-climbing moves; returns the layout and the
/// number of moves made. `full_recompute` selects the reference climber that
/// re-evaluates the whole objective for each candidate swap.
pub fn hill_climb_moves(
    inst: &QapInstance<'_>,
    layout: &Layout,
    eps: f64,
    max_moves: Option<usize>,
    full_recompute: bool,
) -> Result<(Layout, usize)> {
    inst.check_layout(layout)?;
    let mut labels = layout.labels().to_vec();
    let moves = if full_recompute {
        local::climb_full_recompute(inst, &mut labels, eps, max_moves)
    } else {
        local::climb(inst, &mut labels, eps, max_moves)
    };
    Ok((Layout::new(*layout.sampling(), labels)?, moves))
}

/// Objective of `layout` under the given cost tables and weighting.
pub fn objective(
    layout: &Layout,
    ca: &AdjacencyCost,
    cp: &PositionCost,
    lambda: f64,
) -> Result<f64> {
    QapInstance::new(ca, cp, lambda, *layout.sampling())?.objective(layout)
}

/// Objective change of exchanging the labels of two cells.
pub fn swap_delta(
    layout: &Layout,
    cell_a: usize,
    cell_b: usize,
    ca: &AdjacencyCost,
    cp: &PositionCost,
    lambda: f64,
) -> Result<f64> {
    let inst = QapInstance::new(ca, cp, lambda, *layout.sampling())?;
    inst.check_layout(layout)?;
    if cell_a >= layout.len() || cell_b >= layout.len() {
        return Err(Error::invalid("swap cell out of range"));
    }
    Ok(inst.swap_delta(layout.labels(), cell_a, cell_b))
}
