use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use rayon::prelude::*;
use serde_json::{json, Value};

use bovw_recon::apps::{classifier_to_bovw, morph_sequence, sentence_to_bovw};
use bovw_recon::costs::{
    learn_adjacency_cost, learn_position_cost, AdjacencyCost, OffsetSet, PositionCost,
};
use bovw_recon::metrics::{MetricReport, CSV_HEADER};
use bovw_recon::pipeline::{
    extract_dense_descriptors, extract_dense_features, pool, train_codebook,
};
use bovw_recon::render::render_layout;
use bovw_recon::{
    io, BovwHistogram, Codebook, GrayImage, Layout, QapInstance, SamplingSpec, WordGrid,
};

use crate::manifest::{self, Manifest};
use crate::*;

/// Everything a command produced, held in memory until all inputs have been
/// validated, then written in one go.
#[derive(Default)]
struct Run {
    manifest_path: PathBuf,
    inputs: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
    files: Vec<(PathBuf, Vec<u8>)>,
    notes: BTreeMap<String, Value>,
}

impl Run {
    fn new(manifest_path: PathBuf) -> Self {
        Run {
            manifest_path,
            ..Default::default()
        }
    }

    fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    fn file(&mut self, path: PathBuf, bytes: impl Into<Vec<u8>>) {
        self.files.push((path, bytes.into()));
    }

    fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.notes.insert(key.to_string(), value.into());
    }
}

pub fn dispatch(cli: &Cli, argv: &[String]) -> Result<(), CliError> {
    let start = Instant::now();
    let (name, run) = match &cli.command {
        Command::Replay(a) => return replay(a),
        Command::BuildCodebook(a) => ("build-codebook", build_codebook(a)?),
        Command::LearnCosts(a) => ("learn-costs", learn_costs(a)?),
        Command::Extract(a) => ("extract", extract(a)?),
        Command::Reconstruct(a) => ("reconstruct", reconstruct(a)?),
        Command::Evaluate(a) => ("evaluate", evaluate(a)?),
        Command::Morph(a) => ("morph", morph(a)?),
        Command::InvertClassifier(a) => ("invert-classifier", invert_classifier(a)?),
        Command::Sentence(a) => ("sentence", sentence(a)?),
    };
    commit(run, name, cli, argv, start)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn input_err(path: &Path) -> impl FnOnce(bovw_recon::Error) -> CliError + '_ {
    move |source| CliError::Input {
        path: path.to_path_buf(),
        source,
    }
}

fn commit(
    run: Run,
    name: &str,
    cli: &Cli,
    argv: &[String],
    start: Instant,
) -> Result<(), CliError> {
    for dir in &run.dirs {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut outputs = BTreeMap::new();
    for (path, bytes) in &run.files {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        std::fs::write(path, bytes).map_err(io_err(path))?;
        outputs.insert(path.display().to_string(), manifest::digest(path, bytes));
    }
    let mut inputs = BTreeMap::new();
    for path in &run.inputs {
        inputs.insert(path.display().to_string(), manifest::digest_file(path)?);
    }
    let m = Manifest {
        tool: "bovwrec".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name.into(),
        cwd: std::env::current_dir().map_err(io_err(Path::new(".")))?,
        argv: argv.to_vec(),
        params: json!({ "threads": cli.threads, "args": &cli.command }),
        inputs,
        outputs,
        notes: run.notes,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    std::fs::write(&run.manifest_path, manifest::to_json(&m))
        .map_err(io_err(&run.manifest_path))?;
    log::info!(
        "wrote {} files; manifest {}",
        run.files.len(),
        run.manifest_path.display()
    );
    Ok(())
}

fn replay(a: &ReplayArgs) -> Result<(), CliError> {
    let old = manifest::read(&a.manifest)?;
    std::env::set_current_dir(&old.cwd).map_err(io_err(&old.cwd))?;
    for (path, digest) in &old.inputs {
        if manifest::digest_file(Path::new(path))? != *digest {
            return Err(CliError::Mismatch(format!(
                "input {} changed since the recorded run",
                path
            )));
        }
    }
    let argv =
        std::iter::once(OsString::from("bovwrec")).chain(old.argv.iter().map(OsString::from));
    let cli = Cli::try_parse_from(argv)
        .map_err(|e| CliError::Invalid(format!("manifest arguments: {}", e)))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::Invalid(
            "a manifest cannot record a replay".into(),
        ));
    }
    dispatch(&cli, &old.argv)?;
    let mut changed = Vec::new();
    for (path, digest) in &old.outputs {
        if manifest::digest_file(Path::new(path))? != *digest {
            changed.push(path.as_str());
        }
    }
    if !changed.is_empty() {
        return Err(CliError::Mismatch(format!(
            "outputs differ from the recorded run: {}",
            changed.join(", ")
        )));
    }
    println!(
        "{}: {} outputs reproduced bit-identically",
        old.command,
        old.outputs.len()
    );
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if path.is_file() && matches!(ext.as_deref(), Some("pgm" | "ppm" | "pnm")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn read_image(path: &Path) -> Result<GrayImage, CliError> {
    io::read_image(path).map_err(input_err(path))
}

fn read_codebook(path: &Path) -> Result<Codebook, CliError> {
    io::read_codebook(path).map_err(input_err(path))
}

fn quantize(
    image: &GrayImage,
    cb: &Codebook,
    stride: usize,
    path: &Path,
) -> Result<WordGrid, CliError> {
    let sampling = SamplingSpec::for_image(image.width(), image.height(), cb.patch_size(), stride)
        .map_err(input_err(path))?;
    let descriptors = extract_dense_descriptors(image, &sampling)?;
    Ok(cb.quantize_grid(&sampling, &descriptors)?)
}

fn build_codebook(a: &BuildCodebookArgs) -> Result<Run, CliError> {
    let files = list_images(&a.image_dir)?;
    if files.is_empty() {
        return Err(CliError::Invalid(format!(
            "{}: no .pgm/.ppm images",
            a.image_dir.display()
        )));
    }
    let images = files
        .iter()
        .map(|p| read_image(p))
        .collect::<Result<Vec<_>, _>>()?;
    let sets = files
        .iter()
        .zip(&images)
        .map(|(path, img)| {
            let s = SamplingSpec::for_image(img.width(), img.height(), a.patch_size, a.stride)
                .map_err(input_err(path))?;
            Ok(extract_dense_features(img, &s)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let cb = train_codebook(&sets, a.k, a.iters, a.seed)?;

    let mut run = Run::new(with_suffix(&a.out, ".manifest.json"));
    files.iter().for_each(|f| run.input(f));
    run.note("images", files.len());
    run.note(
        "descriptors",
        sets.iter().map(|s| s.descriptors.len()).sum::<usize>(),
    );
    run.note(
        "empty_words",
        cb.train_counts().iter().filter(|&&c| c == 0).count(),
    );
    run.file(a.out.clone(), io::encode_codebook(&cb));
    Ok(run)
}

fn learn_costs(a: &LearnCostsArgs) -> Result<Run, CliError> {
    let cb = read_codebook(&a.codebook)?;
    let offsets = OffsetSet::square(a.m)?;
    let files = list_images(&a.image_dir)?;
    if files.is_empty() && !a.allow_empty {
        return Err(CliError::Invalid(format!(
            "{}: no .pgm/.ppm images (pass --allow-empty for uniform tables)",
            a.image_dir.display()
        )));
    }
    let images = files
        .iter()
        .map(|p| read_image(p))
        .collect::<Result<Vec<_>, _>>()?;
    let grids = files
        .par_iter()
        .zip(&images)
        .map(|(path, img)| quantize(img, &cb, a.stride, path))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let sampling = match grids.first() {
        Some(g) => *g.sampling(),
        None => sampling_from_size(&a.size, cb.patch_size(), a.stride)?,
    };
    if let Some((path, _)) = files
        .iter()
        .zip(&grids)
        .find(|(_, g)| !g.sampling().same_grid(&sampling))
    {
        return Err(CliError::Invalid(format!(
            "{}: grid differs from the first corpus image; all images must have the same size",
            path.display()
        )));
    }
    let ca = learn_adjacency_cost(&grids, cb.k(), &offsets)?;
    let cp = learn_position_cost(&grids, cb.k(), sampling.cells())?;

    let mut run = Run::new(with_suffix(&a.out, ".manifest.json"));
    run.input(&a.codebook);
    files.iter().for_each(|f| run.input(f));
    run.note("images", files.len());
    run.note("grid", json!([sampling.grid_w(), sampling.grid_h()]));
    run.file(with_suffix(&a.out, ".bvwa"), io::encode_adjacency(&ca));
    run.file(with_suffix(&a.out, ".bvwp"), io::encode_position(&cp));
    Ok(run)
}

fn extract(a: &ExtractArgs) -> Result<Run, CliError> {
    let cb = read_codebook(&a.codebook)?;
    let image = read_image(&a.image)?;
    let grid = quantize(&image, &cb, a.stride, &a.image)?;
    let hist = pool(&grid, cb.k())?;

    let mut run = Run::new(with_suffix(&a.out, ".manifest.json"));
    run.input(&a.codebook);
    run.input(&a.image);
    run.note(
        "grid",
        json!([grid.sampling().grid_w(), grid.sampling().grid_h()]),
    );
    run.file(a.out.clone(), io::format_histogram(&hist));
    if let Some(p) = &a.grid_out {
        run.file(p.clone(), io::format_word_grid(&grid));
    }
    Ok(run)
}

fn sampling_from_size(
    size: &SizeArgs,
    patch: usize,
    stride: usize,
) -> Result<SamplingSpec, CliError> {
    match (size.width, size.height) {
        (Some(w), Some(h)) => Ok(SamplingSpec::for_image(w, h, patch, stride)?),
        _ => Err(CliError::Invalid(
            "--width and --height are required to define the grid for a histogram".into(),
        )),
    }
}

struct Model {
    cb: Codebook,
    ca: AdjacencyCost,
    cp: PositionCost,
    stride: usize,
}

impl Model {
    fn load(a: &ModelArgs, run: &mut Run) -> Result<Self, CliError> {
        let cb = read_codebook(&a.codebook)?;
        let ca = io::read_adjacency(&a.adjacency).map_err(input_err(&a.adjacency))?;
        let cp = io::read_position(&a.position).map_err(input_err(&a.position))?;
        if ca.k() != cb.k() || cp.k() != cb.k() {
            return Err(CliError::Invalid(format!(
                "codebook has {} words but cost tables have {} and {}",
                cb.k(),
                ca.k(),
                cp.k()
            )));
        }
        for p in [&a.codebook, &a.adjacency, &a.position] {
            run.input(p);
        }
        Ok(Model {
            cb,
            ca,
            cp,
            stride: a.stride,
        })
    }

    fn check(&self, hist: &BovwHistogram, sampling: &SamplingSpec) -> Result<(), CliError> {
        if hist.k() != self.cb.k() {
            return Err(CliError::Invalid(format!(
                "histogram has {} words, codebook has {}",
                hist.k(),
                self.cb.k()
            )));
        }
        if hist.total() != sampling.cells() {
            return Err(CliError::Invalid(format!(
                "histogram holds {} words but the {}x{} grid has {} places",
                hist.total(),
                sampling.grid_w(),
                sampling.grid_h(),
                sampling.cells()
            )));
        }
        if self.cp.places() != sampling.cells() {
            return Err(CliError::Invalid(format!(
                "position cost covers {} places but the grid has {}",
                self.cp.places(),
                sampling.cells()
            )));
        }
        Ok(())
    }

    fn solve(
        &self,
        hist: &BovwHistogram,
        sampling: SamplingSpec,
        a: &SolveArgs,
        seed: u64,
    ) -> Result<Solved, CliError> {
        self.check(hist, &sampling)?;
        let config = SolverConfig { seed, ..a.config() };
        let inst = QapInstance::new(&self.ca, &self.cp, a.lambda, sampling)?;
        let start = Instant::now();
        let layout = a.solver.solve(&inst, hist, &config)?;
        let secs = start.elapsed().as_secs_f64();
        let objective = inst.objective(&layout)?;
        let image = render_layout(&layout, &self.cb)?;
        log::info!("{} objective {:.4} in {:.2}s", a.solver, objective, secs);
        Ok(Solved {
            layout,
            objective,
            image,
            secs,
        })
    }
}

struct Solved {
    layout: Layout,
    objective: f64,
    image: GrayImage,
    secs: f64,
}

/// An image or histogram file to reconstruct.
struct Target {
    hist: BovwHistogram,
    sampling: SamplingSpec,
    image: Option<GrayImage>,
    truth: Option<WordGrid>,
}

fn load_target(
    path: &Path,
    model: &Model,
    size: &SizeArgs,
    run: &mut Run,
) -> Result<Target, CliError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    run.input(path);
    let target = if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        let image = io::decode_pnm(&bytes).map_err(input_err(path))?;
        let truth = quantize(&image, &model.cb, model.stride, path)?;
        Target {
            hist: pool(&truth, model.cb.k())?,
            sampling: *truth.sampling(),
            image: Some(image),
            truth: Some(truth),
        }
    } else {
        let text = String::from_utf8(bytes).map_err(|_| {
            CliError::Invalid(format!(
                "{}: neither a PGM/PPM image nor a histogram",
                path.display()
            ))
        })?;
        Target {
            hist: io::parse_histogram(&text).map_err(input_err(path))?,
            sampling: sampling_from_size(size, model.cb.patch_size(), model.stride)?,
            image: None,
            truth: None,
        }
    };
    model
        .check(&target.hist, &target.sampling)
        .map_err(|e| CliError::Invalid(format!("{}: {}", path.display(), e)))?;
    Ok(target)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Crops `original` to the rendered size; rendering covers whole strides
/// only, so it can be a few pixels smaller.
fn align(original: &GrayImage, rendered: &GrayImage, path: &Path) -> Result<GrayImage, CliError> {
    if original.width() < rendered.width() || original.height() < rendered.height() {
        return Err(CliError::Invalid(format!(
            "{}: original is {}x{}, smaller than the {}x{} reconstruction",
            path.display(),
            original.width(),
            original.height(),
            rendered.width(),
            rendered.height()
        )));
    }
    Ok(original.crop(0, 0, rendered.width(), rendered.height())?)
}

fn csv(report: &MetricReport) -> String {
    format!("{}\n{}\n", CSV_HEADER, report.to_csv_row())
}

fn reconstruct(a: &ReconstructArgs) -> Result<Run, CliError> {
    a.solve.config().validate()?;
    let mut run = Run::new(with_suffix(&a.out, ".manifest.json"));
    let model = Model::load(&a.model, &mut run)?;
    let t = load_target(&a.input, &model, &a.size, &mut run)?;
    let s = model.solve(&t.hist, t.sampling, &a.solve, a.solve.seed)?;

    run.note("objective", s.objective);
    run.note("grid", json!([t.sampling.grid_w(), t.sampling.grid_h()]));
    if let Some(path) = &a.csv {
        let original = t
            .image
            .as_ref()
            .map(|img| align(img, &s.image, &a.input))
            .transpose()?;
        let report = MetricReport::evaluate(
            file_stem(&a.input),
            &s.image,
            original.as_ref(),
            t.truth.as_ref().map(|truth| (&s.layout, truth)),
            Some(s.objective),
            s.secs,
        )?;
        run.file(path.clone(), csv(&report));
    }
    if let Some(path) = &a.layout_out {
        run.file(path.clone(), io::format_word_grid(&s.layout));
    }
    run.file(a.out.clone(), io::encode_pgm(&s.image));
    Ok(run)
}

fn evaluate(a: &EvaluateArgs) -> Result<Run, CliError> {
    let mut run = Run::new(with_suffix(&a.csv, ".manifest.json"));
    let rendered = read_image(&a.reconstruction)?;
    let original = align(&read_image(&a.original)?, &rendered, &a.original)?;
    run.input(&a.reconstruction);
    run.input(&a.original);
    let grids = match (&a.layout, &a.truth) {
        (Some(l), Some(t)) => {
            run.input(l);
            run.input(t);
            Some((
                io::read_word_grid(l).map_err(input_err(l))?,
                io::read_word_grid(t).map_err(input_err(t))?,
            ))
        }
        _ => None,
    };
    let report = MetricReport::evaluate(
        file_stem(&a.reconstruction),
        &rendered,
        Some(&original),
        grids.as_ref().map(|(l, t)| (l, t)),
        None,
        0.0,
    )?;
    run.file(a.csv.clone(), csv(&report));
    Ok(run)
}

fn morph(a: &MorphArgs) -> Result<Run, CliError> {
    a.solve.config().validate()?;
    let mut run = Run::new(a.out.join("manifest.json"));
    let model = Model::load(&a.model, &mut run)?;
    let src = load_target(&a.source, &model, &a.size, &mut run)?;
    let dst = load_target(&a.target, &model, &a.size, &mut run)?;
    if !src.sampling.same_grid(&dst.sampling) {
        return Err(CliError::Invalid(
            "source and target have different grids".into(),
        ));
    }
    let seq = morph_sequence(&src.hist, &dst.hist, a.morph_seed)?;
    let mut objectives = Vec::new();
    run.dirs.push(a.out.clone());
    for (i, hist) in seq.iter().enumerate() {
        let s = model.solve(hist, src.sampling, &a.solve, a.solve.seed)?;
        objectives.push(s.objective);
        run.file(
            a.out.join(format!("frame_{:03}.pgm", i)),
            io::encode_pgm(&s.image),
        );
        run.file(
            a.out.join(format!("frame_{:03}.txt", i)),
            io::format_histogram(hist),
        );
    }
    run.note("frames", seq.len());
    run.note("objectives", objectives);
    Ok(run)
}

/// Histograms built by rounding a direction may miss the grid's word count;
/// those cannot be laid out.
fn check_total(hist: &BovwHistogram, sampling: &SamplingSpec) -> Result<(), CliError> {
    if hist.total() != sampling.cells() {
        return Err(CliError::Invalid(format!(
            "rounding the direction gives {} words but the grid has {} places; try another image size",
            hist.total(),
            sampling.cells()
        )));
    }
    Ok(())
}

fn invert_classifier(a: &InvertArgs) -> Result<Run, CliError> {
    a.solve.config().validate()?;
    if a.runs == 0 {
        return Err(CliError::Invalid("--runs must be at least 1".into()));
    }
    let mut run = Run::new(a.out.join("manifest.json"));
    let clf = io::read_weights(&a.weights).map_err(input_err(&a.weights))?;
    run.input(&a.weights);
    let model = Model::load(&a.model, &mut run)?;
    if clf.weights.len() != model.cb.k() {
        return Err(CliError::Invalid(format!(
            "{}: {} weights for a codebook of {} words",
            a.weights.display(),
            clf.weights.len(),
            model.cb.k()
        )));
    }
    let sampling = sampling_from_size(&a.size, model.cb.patch_size(), model.stride)?;
    let hist = classifier_to_bovw(&clf, sampling.cells())?;
    check_total(&hist, &sampling)?;
    run.note("histogram", hist.counts().to_vec());
    run.dirs.push(a.out.clone());
    run.file(a.out.join("histogram.txt"), io::format_histogram(&hist));
    let mut objectives = Vec::new();
    for r in 0..a.runs {
        let s = model.solve(
            &hist,
            sampling,
            &a.solve,
            a.solve.seed.wrapping_add(r as u64),
        )?;
        objectives.push(s.objective);
        run.file(
            a.out.join(format!("candidate_{:02}.pgm", r)),
            io::encode_pgm(&s.image),
        );
    }
    run.note("objectives", objectives);
    Ok(run)
}

fn sentence(a: &SentenceArgs) -> Result<Run, CliError> {
    a.solve.config().validate()?;
    let mut run = Run::new(with_suffix(&a.out, ".manifest.json"));
    let corpus = io::read_caption_corpus(&a.corpus).map_err(input_err(&a.corpus))?;
    run.input(&a.corpus);
    let model = Model::load(&a.model, &mut run)?;
    if corpus.k().is_some_and(|k| k != model.cb.k()) {
        return Err(CliError::Invalid(format!(
            "{}: caption histograms have {} words, codebook has {}",
            a.corpus.display(),
            corpus.k().unwrap_or(0),
            model.cb.k()
        )));
    }
    let sampling = sampling_from_size(&a.size, model.cb.patch_size(), model.stride)?;
    let words: Vec<&str> = a.words.iter().map(String::as_str).collect();
    let hist = sentence_to_bovw(&words, &corpus, sampling.cells())?;
    check_total(&hist, &sampling)?;
    let s = model.solve(&hist, sampling, &a.solve, a.solve.seed)?;
    run.note("histogram", hist.counts().to_vec());
    run.note("objective", s.objective);
    run.file(a.out.clone(), io::encode_pgm(&s.image));
    Ok(run)
}
