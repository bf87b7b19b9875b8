//! Plain-text histograms, classifier weights and caption corpora.

use std::path::Path;

use crate::apps::{CaptionCorpus, LinearClassifier};
use crate::pipeline::{BovwHistogram, SamplingSpec, WordGrid};
use crate::{Error, Result};

fn lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty())
}

/// First line `K`, second line `K` non-negative counts.
pub fn parse_histogram(text: &str) -> Result<BovwHistogram> {
    let mut it = lines(text);
    let k: usize = it
        .next()
        .and_then(|l| l.parse().ok())
        .ok_or_else(|| Error::format("histogram", "first line must be the word count K"))?;
    let counts = it
        .next()
        .unwrap_or("")
        .split_whitespace()
        .map(|t| t.parse::<u32>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::format("histogram", format!("bad count: {}", e)))?;
    if counts.len() != k {
        return Err(Error::format(
            "histogram",
            format!("expected {} counts, got {}", k, counts.len()),
        ));
    }
    if it.next().is_some() {
        return Err(Error::format("histogram", "unexpected trailing lines"));
    }
    Ok(BovwHistogram::new(counts))
}

pub fn format_histogram(hist: &BovwHistogram) -> String {
    let counts: Vec<String> = hist.counts().iter().map(u32::to_string).collect();
    format!("{}\n{}\n", hist.k(), counts.join(" "))
}

/// One line of weights, optionally followed by a line holding the bias.
pub fn parse_weights(text: &str) -> Result<LinearClassifier> {
    let parse = |line: &str| {
        line.split_whitespace()
            .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| Error::format("weights", format!("bad number in {:?}", line)))
    };
    let mut it = lines(text);
    let weights = parse(it.next().unwrap_or(""))?;
    if weights.is_empty() {
        return Err(Error::format("weights", "no weights"));
    }
    let bias = match it.next() {
        None => 0.0,
        Some(line) => match parse(line)?.as_slice() {
            [b] => *b,
            _ => return Err(Error::format("weights", "bias line must hold one number")),
        },
    };
    if it.next().is_some() {
        return Err(Error::format("weights", "unexpected trailing lines"));
    }
    Ok(LinearClassifier { weights, bias })
}

/// Word grid: a header line `grid_w grid_h patch_size stride`, then one line
/// of labels per grid row.
pub fn parse_word_grid(text: &str) -> Result<WordGrid> {
    let bad = |r: String| Error::format("word grid", r);
    let mut it = lines(text);
    let header: Vec<usize> = it
        .next()
        .unwrap_or("")
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| bad(format!("bad header: {}", e)))?;
    let [w, h, p, s] = header[..] else {
        return Err(bad(
            "header must be `grid_w grid_h patch_size stride`".into()
        ));
    };
    let sampling = SamplingSpec::from_grid(w, h, p, s).map_err(|e| bad(e.to_string()))?;
    let mut labels = Vec::with_capacity(w * h);
    for (row, line) in it.by_ref().take(h).enumerate() {
        let before = labels.len();
        for t in line.split_whitespace() {
            labels.push(
                t.parse::<usize>()
                    .map_err(|e| bad(format!("row {}: {}", row, e)))?,
            );
        }
        if labels.len() - before != w {
            return Err(bad(format!(
                "row {} has {} labels, expected {}",
                row,
                labels.len() - before,
                w
            )));
        }
    }
    if labels.len() != w * h || it.next().is_some() {
        return Err(bad(format!("expected exactly {} rows", h)));
    }
    WordGrid::new(sampling, labels)
}

pub fn format_word_grid(grid: &WordGrid) -> String {
    let s = grid.sampling();
    let mut out = format!(
        "{} {} {} {}\n",
        s.grid_w(),
        s.grid_h(),
        s.patch_size(),
        s.stride()
    );
    for row in grid.labels().chunks(s.grid_w()) {
        let row: Vec<String> = row.iter().map(usize::to_string).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_word_grid(path: &Path) -> Result<WordGrid> {
    parse_word_grid(&std::fs::read_to_string(path)?)
}

pub fn read_histogram(path: &Path) -> Result<BovwHistogram> {
    parse_histogram(&std::fs::read_to_string(path)?)
}

pub fn write_histogram(hist: &BovwHistogram, path: &Path) -> Result<()> {
    Ok(std::fs::write(path, format_histogram(hist))?)
}

pub fn read_weights(path: &Path) -> Result<LinearClassifier> {
    parse_weights(&std::fs::read_to_string(path)?)
}

/// Caption corpus listing: one record per line, a histogram file path, a
/// tab, then space-separated caption tokens. Relative paths are resolved
/// against the listing's directory.
pub fn read_caption_corpus(path: &Path) -> Result<CaptionCorpus> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut entries = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (file, caption) = line.split_once('\t').ok_or_else(|| {
            Error::format(
                "caption corpus",
                format!("line {}: expected <histogram path>\\t<caption>", no + 1),
            )
        })?;
        let hist = read_histogram(&base.join(file.trim()))?;
        entries.push((
            hist,
            CaptionCorpus::count_tokens(caption.split_whitespace()),
        ));
    }
    CaptionCorpus::new(entries)
}
