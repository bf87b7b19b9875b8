//! Hybrid genetic algorithm with hill-climbed offspring.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{local, random_layout_with, Layout, QapInstance, SolverConfig};
use crate::pipeline::{pool, BovwHistogram};
use crate::rng::{self, StreamRng};
use crate::{Error, Result};

/// Number of cells on which two layouts hold the same word.
pub fn similarity(a: &Layout, b: &Layout) -> usize {
    debug_assert_eq!(a.len(), b.len());
    a.labels()
        .iter()
        .zip(b.labels())
        .filter(|(x, y)| x == y)
        .count()
}

/// Builds a child from two parents with the same histogram.
///
/// Cells where the parents agree are inherited. The remaining word instances
/// are then placed greedily: unfilled cells are visited in random order and
/// each receives the still-available word with the smallest weighted cost
/// against its already-filled neighbors plus its position cost (lowest word
/// index on ties). The child always pools to the parents' histogram.
pub fn crossover(
    inst: &QapInstance<'_>,
    a: &Layout,
    b: &Layout,
    rng: &mut StreamRng,
) -> Result<Layout> {
    inst.check_layout(a)?;
    inst.check_layout(b)?;
    let k = inst.k();
    let hist_a = pool(a, k)?;
    if hist_a != pool(b, k)? {
        return Err(Error::invalid(
            "crossover parents have different histograms",
        ));
    }

    let n = a.len();
    let mut child: Vec<Option<usize>> = vec![None; n];
    let mut available: Vec<u32> = hist_a.counts().to_vec();
    let mut open = Vec::new();
    for cell in 0..n {
        if a.label(cell) == b.label(cell) {
            child[cell] = Some(a.label(cell));
            available[a.label(cell)] -= 1;
        } else {
            open.push(cell);
        }
    }
    open.shuffle(rng);

    let rows = inst.rows();
    let m = inst.adjacency().offsets().m();
    let mut score = vec![0f64; k];
    for &cell in &open {
        score.copy_from_slice(&rows.position[cell * k..(cell + 1) * k]);
        for &(l, d) in inst.out_neighbors(cell) {
            if let Some(j) = child[l] {
                let row = &rows.by_target[(j * m + d) * k..][..k];
                score.iter_mut().zip(row).for_each(|(s, r)| *s += r);
            }
        }
        for &(src, d) in inst.in_neighbors(cell) {
            if let Some(i) = child[src] {
                let row = &rows.by_source[(i * m + d) * k..][..k];
                score.iter_mut().zip(row).for_each(|(s, r)| *s += r);
            }
        }
        let word = (0..k)
            .filter(|&x| available[x] > 0)
            .min_by(|&x, &y| score[x].total_cmp(&score[y]).then(x.cmp(&y)))
            .expect("open cells and remaining instances are equinumerous");
        available[word] -= 1;
        child[cell] = Some(word);
    }

    Layout::new(
        *a.sampling(),
        child
            .into_iter()
            .map(|c| c.expect("every cell filled"))
            .collect(),
    )
}

/// Outcome of [`ga_hc_solve`].
#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub layout: Layout,
    pub objective: f64,
    /// Best objective in the initial (hill-climbed) population.
    pub initial_best: f64,
    pub generations: usize,
    /// Whether the population collapsed to a single objective value before
    /// the generation cap.
    pub converged: bool,
}

struct Member {
    labels: Vec<usize>,
    value: f64,
}

fn agreement(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x == y).count()
}

/// Genetic algorithm with hill-climbing offspring.
///
/// `population` random layouts are hill-climbed to form the initial
/// population. Each generation picks two distinct members at random, crosses
/// them over and hill-climbs the child. A child better than the current worst
/// member joins the population, and one member leaves: with probability
/// `replace_prob` the worse member of the most similar pair, otherwise the
/// worst member. The run stops once the best and worst objectives differ by
/// less than `convergence_eps`, or after `max_generations`.
pub fn ga_hc_solve(
    inst: &QapInstance<'_>,
    hist: &BovwHistogram,
    config: &SolverConfig,
) -> Result<GaOutcome> {
    config.validate()?;
    super::check_histogram(inst, hist)?;
    let eps = config.convergence_eps;
    let seed = config.seed;

    let mut pop: Vec<Member> = (0..config.population)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, rng::MEMBER_STREAM_BASE + i as u64);
            let mut labels = random_layout_with(hist, &mut rng);
            local::climb(inst, &mut labels, eps, None);
            let value = inst.objective_of(&labels);
            Member { labels, value }
        })
        .collect();

    let mut sim: Vec<Vec<usize>> = pop
        .iter()
        .map(|a| {
            pop.iter()
                .map(|b| agreement(&a.labels, &b.labels))
                .collect()
        })
        .collect();
    let initial_best = pop.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);

    let mut rng = rng::stream(seed, rng::GENERATION_STREAM);
    let mut generations = 0;
    let mut converged = false;
    let sampling = *inst.sampling();
    while generations < config.max_generations {
        let (worst, worst_value) = argmax(&pop);
        let best_value = pop.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
        if worst_value - best_value < eps {
            converged = true;
            break;
        }
        generations += 1;

        let i = rng.gen_range(0..pop.len());
        let mut j = rng.gen_range(0..pop.len() - 1);
        if j >= i {
            j += 1;
        }
        let pa = Layout::new(sampling, pop[i].labels.clone())?;
        let pb = Layout::new(sampling, pop[j].labels.clone())?;
        let mut child = crossover(inst, &pa, &pb, &mut rng)?.into_labels();
        local::climb(inst, &mut child, eps, None);
        let value = inst.objective_of(&child);
        if value >= worst_value {
            continue;
        }

        let row: Vec<usize> = pop.iter().map(|p| agreement(&p.labels, &child)).collect();
        for (s, &r) in sim.iter_mut().zip(&row) {
            s.push(r);
        }
        let mut last = row;
        last.push(child.len());
        sim.push(last);
        pop.push(Member {
            labels: child,
            value,
        });

        let remove = if rng.gen::<f64>() < config.replace_prob {
            let (u, v) = most_similar_pair(&sim);
            if pop[u].value > pop[v].value {
                u
            } else {
                v
            }
        } else {
            worst
        };
        pop.remove(remove);
        sim.remove(remove);
        for s in sim.iter_mut() {
            s.remove(remove);
        }
    }

    let best = pop
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.value.total_cmp(&b.value).then(ia.cmp(ib)))
        .map(|(i, _)| i)
        .expect("population is non-empty");
    let member = pop.swap_remove(best);
    Ok(GaOutcome {
        layout: Layout::new(sampling, member.labels)?,
        objective: member.value,
        initial_best,
        generations,
        converged,
    })
}

/// Worst member, lowest index on ties.
fn argmax(pop: &[Member]) -> (usize, f64) {
    let mut best = (0, pop[0].value);
    for (i, p) in pop.iter().enumerate().skip(1) {
        if p.value > best.1 {
            best = (i, p.value);
        }
    }
    best
}

/// Pair `(u, v)`, `u < v`, with the highest agreement; first in lexicographic
/// order on ties.
fn most_similar_pair(sim: &[Vec<usize>]) -> (usize, usize) {
    let mut best = (0, 1);
    let mut best_sim = None;
    for (u, row) in sim.iter().enumerate() {
        for (v, &s) in row.iter().enumerate().skip(u + 1) {
            if best_sim.is_none_or(|b| s > b) {
                best_sim = Some(s);
                best = (u, v);
            }
        }
    }
    best
}
