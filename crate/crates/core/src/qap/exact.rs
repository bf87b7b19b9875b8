use super::{Layout, QapInstance};
use crate::pipeline::BovwHistogram;
use crate::{Error, Result};

/// Largest number of distinct arrangements the exhaustive solver accepts.
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

/// Number of distinct label arrangements of `hist`, i.e. the multinomial
/// `N! / prod(c_i!)`, saturating at `u128::MAX`.
pub fn arrangement_count(hist: &BovwHistogram) -> u128 {
    let mut total: u128 = 1;
    let mut placed: u128 = 0;
    for &c in hist.counts() {
        // multiply by C(placed + c, c) one factor at a time; stays integral
        for t in 1..=u128::from(c) {
            placed += 1;
            total = match total.checked_mul(placed) {
                Some(v) => v / t,
                None => return u128::MAX,
            };
        }
    }
    total
}

/// Lexicographic successor of a multiset permutation; false at the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v
        .iter()
        .rposition(|&x| x > v[i])
        .expect("pivot has a successor");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Exhaustive global minimizer over every distinct arrangement of the word
/// instances. Ties resolve to the lexicographically smallest label grid.
pub fn brute_force_solve(inst: &QapInstance<'_>, hist: &BovwHistogram) -> Result<Layout> {
    super::check_histogram(inst, hist)?;
    let count = arrangement_count(hist);
    if count > u128::from(BRUTE_FORCE_LIMIT) {
        return Err(Error::TooLarge {
            arrangements: count as f64,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut labels = hist.instances();
    let mut best = labels.clone();
    let mut best_value = inst.objective_of(&labels);
    while next_permutation(&mut labels) {
        let v = inst.objective_of(&labels);
        if v < best_value {
            best_value = v;
            best.copy_from_slice(&labels);
        }
    }
    Layout::new(*inst.sampling(), best)
}
