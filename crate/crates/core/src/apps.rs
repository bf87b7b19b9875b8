//! Feature-space applications: histogram morphing, linear classifier
//! inversion and caption-word to histogram conversion.

use std::collections::BTreeMap;

use rand::Rng;

use crate::pipeline::BovwHistogram;
use crate::rng;
use crate::{Error, Result};

/// Histogram sequence from `source` to `target`, both endpoints included.
///
/// Each step adds one word instance drawn uniformly from `target - current`
/// and removes one drawn uniformly from `current - target` (multiset
/// differences), so consecutive histograms are at L1 distance 2 and the
/// sequence has `|target - source| + 1` entries.
pub fn morph_sequence(
    source: &BovwHistogram,
    target: &BovwHistogram,
    seed: u64,
) -> Result<Vec<BovwHistogram>> {
    if source.k() != target.k() {
        return Err(Error::invalid(format!(
            "histograms have {} and {} words",
            source.k(),
            target.k()
        )));
    }
    if source.total() != target.total() {
        return Err(Error::invalid(format!(
            "histograms hold {} and {} words",
            source.total(),
            target.total()
        )));
    }
    let mut rng = rng::stream(seed, 0);
    let t = target.counts();
    let mut current = source.clone();
    let mut out = vec![current.clone()];

    // draws an instance uniformly from the multiset `max(0, a - b)`
    let draw = |a: &[u32], b: &[u32], rng: &mut rng::StreamRng| {
        let excess = |w: usize| a[w].saturating_sub(b[w]);
        let total: u32 = (0..a.len()).map(excess).sum();
        let mut r = rng.gen_range(0..total);
        (0..a.len())
            .find(|&w| {
                if r < excess(w) {
                    true
                } else {
                    r -= excess(w);
                    false
                }
            })
            .expect("draw index below the multiset size")
    };

    while current.counts() != t {
        let add = draw(t, current.counts(), &mut rng);
        let remove = draw(current.counts(), t, &mut rng);
        current.counts_mut()[add] += 1;
        current.counts_mut()[remove] -= 1;
        out.push(current.clone());
    }
    Ok(out)
}

/// Linear scorer `y = w·x + b` over histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn rounded(x: &[f64], alpha: f64) -> (Vec<u32>, u64) {
    let counts: Vec<u32> = x.iter().map(|&v| (alpha * v).round() as u32).collect();
    let l1 = counts.iter().map(|&c| u64::from(c)).sum();
    (counts, l1)
}

/// Integer histogram along `direction` holding about `n` words.
///
/// The direction is scaled to unit length and negative entries are clipped
/// to zero. The result is `round(alpha * x)` for the `alpha` whose L1 norm is
/// closest to `n`; as rounding can jump past `n`, ties go to the smaller
/// `alpha`. The threshold where the L1 norm first reaches `n` is found by
/// bisection.
pub fn round_direction(direction: &[f64], n: usize) -> Result<BovwHistogram> {
    if n == 0 {
        return Err(Error::invalid("target word count must be at least 1"));
    }
    if direction.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("direction has non-finite entries"));
    }
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !direction.iter().any(|&v| v > 0.0) {
        return Err(Error::invalid("direction has no positive entry"));
    }
    let x: Vec<f64> = direction.iter().map(|&v| (v / norm).max(0.0)).collect();
    let target = n as u64;
    let top = x.iter().cloned().fold(0.0, f64::max);

    // invariant: L1(lo) < n <= L1(hi)
    let (mut lo, mut hi) = (0.0f64, (n as f64 + 0.5) / top);
    while rounded(&x, hi).1 < target {
        hi *= 2.0;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rounded(&x, mid).1 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (below, below_l1) = rounded(&x, lo);
    let (above, above_l1) = rounded(&x, hi);
    let counts = if target - below_l1 <= above_l1 - target {
        below
    } else {
        above
    };
    Ok(BovwHistogram::new(counts))
}

/// Histogram of `n` words that maximizes the classifier score direction.
/// The bias does not change the maximizing direction and is ignored.
pub fn classifier_to_bovw(clf: &LinearClassifier, n: usize) -> Result<BovwHistogram> {
    if !clf.weights.iter().any(|&w| w > 0.0) {
        return Err(Error::invalid(
            "classifier needs at least one positive weight",
        ));
    }
    round_direction(&clf.weights, n)
}

/// Captioned histograms: per entry, visual word counts and caption word
/// counts.
#[derive(Debug, Clone, Default)]
pub struct CaptionCorpus {
    entries: Vec<(BovwHistogram, BTreeMap<String, u32>)>,
}

impl CaptionCorpus {
    pub fn new(entries: Vec<(BovwHistogram, BTreeMap<String, u32>)>) -> Result<Self> {
        if let Some((first, _)) = entries.first() {
            if let Some((h, _)) = entries.iter().find(|(h, _)| h.k() != first.k()) {
                return Err(Error::invalid(format!(
                    "caption corpus mixes {} and {} word histograms",
                    first.k(),
                    h.k()
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Builds an entry's word counts from caption tokens.
    pub fn count_tokens<'t>(tokens: impl IntoIterator<Item = &'t str>) -> BTreeMap<String, u32> {
        let mut counts = BTreeMap::new();
        for t in tokens {
            *counts.entry(t.to_string()).or_insert(0) += 1;
        }
        counts
    }

    pub fn entries(&self) -> &[(BovwHistogram, BTreeMap<String, u32>)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn k(&self) -> Option<usize> {
        self.entries.first().map(|(h, _)| h.k())
    }

    /// Distinct caption words, sorted.
    pub fn vocabulary(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self
            .entries
            .iter()
            .flat_map(|(_, c)| c.keys().map(String::as_str))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    (va > 0.0 && vb > 0.0).then(|| (cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation, across corpus entries, between the caption count of `word`
/// and the count of each visual word. Visual words with a constant count get
/// 0.
pub fn word_to_bovw_direction(word: &str, corpus: &CaptionCorpus) -> Result<Vec<f64>> {
    if !corpus.entries.iter().any(|(_, c)| c.contains_key(word)) {
        return Err(Error::NotFound(format!(
            "word {:?} not in caption corpus",
            word
        )));
    }
    let s: Vec<f64> = corpus
        .entries
        .iter()
        .map(|(_, c)| f64::from(c.get(word).copied().unwrap_or(0)))
        .collect();
    if s.iter().all(|&v| v == s[0]) {
        return Err(Error::invalid(format!(
            "word {:?} has the same count in every caption; correlation undefined",
            word
        )));
    }
    let k = corpus.k().expect("non-empty corpus");
    Ok((0..k)
        .map(|j| {
            let t: Vec<f64> = corpus
                .entries
                .iter()
                .map(|(h, _)| f64::from(h.counts()[j]))
                .collect();
            pearson(&s, &t).unwrap_or(0.0)
        })
        .collect())
}

/// Histogram of `n` words for a sentence: the directions of its known words
/// are averaged, then rounded like [`classifier_to_bovw`]. Unknown words and
/// words without a defined direction are skipped with a warning.
pub fn sentence_to_bovw(
    sentence: &[&str],
    corpus: &CaptionCorpus,
    n: usize,
) -> Result<BovwHistogram> {
    let mut sum: Option<Vec<f64>> = None;
    let mut found = 0usize;
    for &word in sentence {
        match word_to_bovw_direction(word, corpus) {
            Ok(u) => {
                found += 1;
                match &mut sum {
                    Some(s) => s.iter_mut().zip(&u).for_each(|(a, b)| *a += b),
                    None => sum = Some(u),
                }
            }
            Err(e @ (Error::NotFound(_) | Error::InvalidInput(_))) => {
                log::warn!("skipping {:?}: {}", word, e)
            }
            Err(e) => return Err(e),
        }
    }
    let Some(sum) = sum else {
        return Err(Error::invalid(
            "no sentence word has a direction in the caption corpus",
        ));
    };
    let mean: Vec<f64> = sum.iter().map(|v| v / found as f64).collect();
    round_direction(&mean, n)
}
