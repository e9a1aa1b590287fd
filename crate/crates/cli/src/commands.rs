use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pcl_core::corpus::{
    self, attach_categories, class_counts, load_categories, load_corpus, parse_id_list,
    split_by_ids, split_corpus, CorpusFormat, Paragraph, NUM_CATEGORIES,
};
use pcl_core::ensemble::{run_ensemble, TieRule};
use pcl_core::metrics::{self, binary_report, threshold_sweep, Report, Task};
use pcl_core::models::{
    build, load_model, predict_labels, save_model, train, ModelKind, ModelSpec, TrainedModel,
};
use pcl_core::synth;
use pcl_core::textprep::{build_vocab, load_embeddings, tokenize, EmbeddingTable};
use sha2::{Digest, Sha256};

use crate::config::{hex, LoadedConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cli: cannot create {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cli: cannot write {}", path.display()))
}

/// TSV artifact whose first line records the config hash.
fn write_tsv(path: &Path, hash: &str, body: &str) -> Result<()> {
    write(path, format!("# config-hash: {hash}\n{body}"))
}

fn file_sha(path: &Path) -> Result<String> {
    let raw = fs::read(path).with_context(|| format!("cli: cannot read {}", path.display()))?;
    Ok(hex(&Sha256::digest(raw)))
}

/// `key=value` run manifest. Artifact checksums are appended for each
/// listed file.
fn write_manifest(
    dir: &Path,
    mut entries: Vec<(String, String)>,
    artifacts: &[&Path],
) -> Result<()> {
    for a in artifacts {
        let name = a
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        entries.push((format!("sha256.{name}"), file_sha(a)?));
    }
    let mut s = String::new();
    for (k, v) in entries {
        let _ = writeln!(s, "{k}={v}");
    }
    write(&dir.join("manifest.txt"), s)
}

fn base_entries(command: &str, hash: &str) -> Vec<(String, String)> {
    vec![
        ("command".into(), command.into()),
        ("config_hash".into(), hash.into()),
        ("pcl_version".into(), VERSION.into()),
    ]
}

pub struct Datasets {
    pub train: Vec<Paragraph>,
    pub dev: Vec<Paragraph>,
}

pub fn load_datasets(cfg: &LoadedConfig) -> Result<Datasets> {
    let c = &cfg.config.corpus;
    let format = cfg.corpus_format()?;
    let load = |p: &Path| -> Result<Vec<Paragraph>> { Ok(load_corpus(&cfg.input(p), format)?) };
    let categories = match &c.categories {
        Some(p) => Some(load_categories(&cfg.input(p))?),
        None => None,
    };
    let (mut train, mut dev) = match (&c.path, &c.train, &c.dev) {
        (Some(path), _, _) => {
            let mut all = load(path)?;
            if let Some(rows) = &categories {
                attach_categories(&mut all, rows)?;
            }
            let split = match &c.dev_ids {
                Some(ids) => {
                    let p = cfg.input(ids);
                    let raw = fs::read_to_string(&p)
                        .with_context(|| format!("cli: cannot read {}", p.display()))?;
                    split_by_ids(&all, &parse_id_list(&raw))?
                }
                None => split_corpus(&all, c.split_ratio, c.split_seed)?,
            };
            return Ok(Datasets {
                train: split.train,
                dev: split.dev,
            });
        }
        (None, Some(t), Some(d)) => (load(t)?, load(d)?),
        _ => bail!("cli: [corpus] needs either `path`, or both `train` and `dev`"),
    };
    if let Some(rows) = &categories {
        let train_ids: std::collections::HashSet<&str> =
            train.iter().map(|p| p.id.as_str()).collect();
        let (tr, dv): (Vec<_>, Vec<_>) = rows
            .iter()
            .cloned()
            .partition(|(id, _)| train_ids.contains(id.as_str()));
        attach_categories(&mut train, &tr)?;
        attach_categories(&mut dev, &dv)?;
    }
    Ok(Datasets { train, dev })
}

/// Vocabulary from the training split and its embedding table.
pub fn embeddings_for(cfg: &LoadedConfig, train: &[Paragraph]) -> Result<EmbeddingTable> {
    let t = &cfg.config.textprep;
    let Some(path) = &t.embeddings else {
        bail!("cli: [textprep] embeddings is required for training");
    };
    let tokens: Vec<Vec<String>> = train
        .iter()
        .map(|p| tokenize(&p.text, t.remove_stopwords))
        .collect();
    let vocab = build_vocab(&tokens, t.min_count)?;
    Ok(load_embeddings(&cfg.input(path), &vocab, t.embedding_seed)?)
}

pub fn cmd_ingest(
    input: &Path,
    format: CorpusFormat,
    categories: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let mut corpus = load_corpus(input, format)?;
    if let Some(c) = categories {
        attach_categories(&mut corpus, &load_categories(c)?)?;
    }
    let source = file_sha(input)?;
    write(
        out,
        format!(
            "# source-sha256: {source}\n{}",
            corpus::to_canonical_tsv(&corpus)
        ),
    )?;
    if corpus.iter().any(|p| p.categories.is_some()) {
        let cat_path = out.with_extension("categories.tsv");
        write(&cat_path, corpus::categories_tsv(&category_rows(&corpus)))?;
        println!("wrote {}", cat_path.display());
    }
    let counts = class_counts(&corpus);
    println!(
        "wrote {} ({} paragraphs: {} PCL, {} non-PCL)",
        out.display(),
        corpus.len(),
        counts.positives,
        counts.negatives
    );
    Ok(())
}

/// Category rows for every paragraph; rows without annotations are zeros.
fn category_rows(corpus: &[Paragraph]) -> Vec<(String, corpus::Categories)> {
    corpus
        .iter()
        .map(|p| {
            (
                p.id.clone(),
                p.categories.unwrap_or([false; NUM_CATEGORIES]),
            )
        })
        .collect()
}

pub fn cmd_split(cfg: &LoadedConfig) -> Result<()> {
    let hash = cfg.hash()?;
    let data = load_datasets(cfg)?;
    let dir = cfg.output_dir();
    let mut artifacts = Vec::new();
    for (name, set) in [("train", &data.train), ("dev", &data.dev)] {
        let p = dir.join(format!("{name}.tsv"));
        write_tsv(&p, &hash, &corpus::to_canonical_tsv(set))?;
        artifacts.push(p);
        if cfg.config.corpus.categories.is_some() {
            let p = dir.join(format!("{name}_categories.tsv"));
            write_tsv(&p, &hash, &corpus::categories_tsv(&category_rows(set)))?;
            artifacts.push(p);
        }
    }
    let (tc, dc) = (class_counts(&data.train), class_counts(&data.dev));
    let mut entries = base_entries("split", &hash);
    entries.extend([
        (
            "split_seed".into(),
            cfg.config.corpus.split_seed.to_string(),
        ),
        ("train_positives".into(), tc.positives.to_string()),
        ("train_negatives".into(), tc.negatives.to_string()),
        ("dev_positives".into(), dc.positives.to_string()),
        ("dev_negatives".into(), dc.negatives.to_string()),
    ]);
    let refs: Vec<&Path> = artifacts.iter().map(PathBuf::as_path).collect();
    write_manifest(&dir, entries, &refs)?;
    println!(
        "train {} ({} PCL), dev {} ({} PCL) -> {}",
        data.train.len(),
        tc.positives,
        data.dev.len(),
        dc.positives,
        dir.display()
    );
    Ok(())
}

#[derive(Clone, Debug, Default)]
pub struct TrainOverrides {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
}

fn history_tsv(model: &TrainedModel) -> String {
    let mut s = String::from("epoch\ttrain_loss\tval_loss\n");
    for h in &model.history {
        let val = h
            .val_loss
            .map(|v| format!("{v:?}"))
            .unwrap_or_else(|| "NA".into());
        let _ = writeln!(s, "{}\t{:?}\t{val}", h.epoch, h.train_loss);
    }
    s
}

fn predictions_tsv(ids: &[String], scores: &[f64], width: usize, threshold: f64) -> String {
    let labels = predict_labels(scores, threshold);
    let mut s = if width == 1 {
        String::from("id\tscore\tlabel\n")
    } else {
        let sc: Vec<String> = (1..=width).map(|i| format!("s{i}")).collect();
        let cc: Vec<String> = (1..=width).map(|i| format!("c{i}")).collect();
        format!("id\t{}\t{}\n", sc.join("\t"), cc.join("\t"))
    };
    for (r, id) in ids.iter().enumerate() {
        let row = r * width..(r + 1) * width;
        let sc: Vec<String> = scores[row.clone()]
            .iter()
            .map(|v| format!("{v:?}"))
            .collect();
        let lc: Vec<&str> = labels[row]
            .iter()
            .map(|&l| if l { "1" } else { "0" })
            .collect();
        let _ = writeln!(s, "{id}\t{}\t{}", sc.join("\t"), lc.join("\t"));
    }
    s
}

/// Dev-set report in the model's own task.
fn dev_report(model: &TrainedModel, dev: &[Paragraph], scores: &[f64]) -> Result<Report> {
    let k = model.spec.output_dim;
    let labels = predict_labels(scores, model.spec.threshold);
    if k == 1 {
        let gold: Vec<bool> = dev.iter().map(|p| p.label).collect();
        return Ok(Report::Binary(binary_report(&gold, &labels)?));
    }
    let gold: Vec<corpus::Categories> = dev
        .iter()
        .map(|p| p.categories.unwrap_or([false; NUM_CATEGORIES]))
        .collect();
    let pred: Vec<corpus::Categories> = labels
        .chunks(k)
        .map(|c| {
            let mut a = [false; NUM_CATEGORIES];
            a.copy_from_slice(c);
            a
        })
        .collect();
    Ok(Report::Multilabel(metrics::multilabel_report(
        &gold, &pred,
    )?))
}

fn headline(report: &Report) -> String {
    match report {
        Report::Binary(r) => r.to_string(),
        Report::Multilabel(m) => format!("average F1={:.2}", m.average_f1),
    }
}

struct RunOutcome {
    dir: PathBuf,
    spec: ModelSpec,
    model: TrainedModel,
    report: Report,
}

fn train_one(
    cfg: &LoadedConfig,
    hash: &str,
    spec: &ModelSpec,
    data: &Datasets,
    table: &EmbeddingTable,
    dir: &Path,
) -> Result<RunOutcome> {
    if data.dev.is_empty() {
        bail!("cli: the dev split is empty");
    }
    let balance = cfg.balance()?;
    let mut model = build(spec, table)?;
    model.metadata.insert("config_hash".into(), hash.into());
    let model = train(model, &data.train, &balance)
        .with_context(|| format!("training {} failed", spec.kind))?;
    let model_path = dir.join("model.bin");
    let history_path = dir.join("history.tsv");
    let pred_path = dir.join("dev_predictions.tsv");
    fs::create_dir_all(dir).with_context(|| format!("cli: cannot create {}", dir.display()))?;
    save_model(&model, &model_path)?;
    write_tsv(&history_path, hash, &history_tsv(&model))?;
    let mut artifacts = vec![model_path.as_path(), history_path.as_path()];
    let scores = model.predict(&data.dev)?.into_data();
    let ids: Vec<String> = data.dev.iter().map(|p| p.id.clone()).collect();
    write_tsv(
        &pred_path,
        hash,
        &predictions_tsv(&ids, &scores, spec.output_dim, spec.threshold),
    )?;
    artifacts.push(pred_path.as_path());
    let report = dev_report(&model, &data.dev, &scores)?;
    let mut entries = base_entries("train", hash);
    for (k, v) in spec.to_kv() {
        entries.push((format!("model.{k}"), v));
    }
    entries.extend([
        ("balance.strategy".into(), balance.strategy.to_string()),
        ("balance.seed".into(), balance.seed.to_string()),
        (
            "split_seed".into(),
            cfg.config.corpus.split_seed.to_string(),
        ),
        (
            "embedding_seed".into(),
            cfg.config.textprep.embedding_seed.to_string(),
        ),
        ("vocab_size".into(), model.vocab.len().to_string()),
        ("vocab_fingerprint".into(), model.vocab_fingerprint.clone()),
        ("embeddings_found".into(), table.found.to_string()),
        ("epochs_run".into(), model.history.len().to_string()),
    ]);
    for line in report.to_kv().lines() {
        if let Some((k, v)) = line.split_once('=') {
            entries.push((format!("dev.{k}"), v.to_string()));
        }
    }
    write_manifest(dir, entries, &artifacts)?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        spec: spec.clone(),
        model,
        report,
    })
}

pub fn cmd_train(cfg: &mut LoadedConfig, overrides: &TrainOverrides) -> Result<()> {
    let Some(section) = cfg.config.model.as_mut() else {
        bail!("cli: config has no [model] section");
    };
    if let Some(v) = overrides.epochs {
        section.epochs = Some(v);
    }
    if let Some(v) = overrides.batch_size {
        section.batch_size = Some(v);
    }
    if let Some(v) = overrides.seed {
        section.seed = Some(v);
    }
    let section = section.clone();
    let hash = cfg.hash()?;
    let data = load_datasets(cfg)?;
    let table = embeddings_for(cfg, &data.train)?;
    let spec = cfg.model_spec(&section, None, table.dim)?;
    let out = cfg.output_dir();

    let grid = cfg.config.grid.clone().unwrap_or_default();
    if grid.epochs.is_empty() && grid.batch_sizes.is_empty() {
        let run = train_one(cfg, &hash, &spec, &data, &table, &out)?;
        println!(
            "{} trained for {} epochs -> {} (dev {})",
            run.spec.kind,
            run.model.history.len(),
            run.dir.display(),
            headline(&run.report)
        );
        return Ok(());
    }
    let epochs = if grid.epochs.is_empty() {
        vec![spec.epochs]
    } else {
        grid.epochs.clone()
    };
    let batches = if grid.batch_sizes.is_empty() {
        vec![spec.batch_size]
    } else {
        grid.batch_sizes.clone()
    };
    let mut summary =
        String::from("run\tepochs\tbatch_size\tfinal_train_loss\tfinal_val_loss\tdev_f1\n");
    let mut run_dirs = Vec::new();
    for &e in &epochs {
        for &b in &batches {
            let s = ModelSpec {
                epochs: e,
                batch_size: b,
                ..spec.clone()
            };
            s.validate()?;
            let name = format!("{}_e{e}_b{b}", s.kind);
            let run = train_one(cfg, &hash, &s, &data, &table, &out.join(&name))?;
            let last = run.model.history.last();
            let f1 = match &run.report {
                Report::Binary(r) => r.f1,
                Report::Multilabel(m) => m.average_f1,
            };
            let _ = writeln!(
                summary,
                "{name}\t{e}\t{b}\t{:?}\t{}\t{f1:?}",
                last.map(|h| h.train_loss).unwrap_or(f64::NAN),
                last.and_then(|h| h.val_loss)
                    .map(|v| format!("{v:?}"))
                    .unwrap_or_else(|| "NA".into())
            );
            println!("{name}: dev {}", headline(&run.report));
            run_dirs.push(run.dir);
        }
    }
    let grid_path = out.join("grid.tsv");
    write_tsv(&grid_path, &hash, &summary)?;
    let models: Vec<PathBuf> = run_dirs.iter().map(|d| d.join("model.bin")).collect();
    let mut entries = base_entries("train-grid", &hash);
    entries.push(("runs".into(), run_dirs.len().to_string()));
    let mut refs: Vec<&Path> = vec![grid_path.as_path()];
    refs.extend(models.iter().map(PathBuf::as_path));
    write_manifest(&out, entries, &refs)?;
    println!("grid of {} runs -> {}", run_dirs.len(), grid_path.display());
    Ok(())
}

pub fn cmd_predict(
    model_path: &Path,
    corpus_path: &Path,
    format: CorpusFormat,
    out: &Path,
    threshold: Option<f64>,
) -> Result<()> {
    let model = load_model(model_path)?;
    let threshold = threshold.unwrap_or(model.spec.threshold);
    if !(threshold > 0.0 && threshold < 1.0) {
        bail!("cli: --threshold must lie in (0, 1), got {threshold}");
    }
    let corpus = load_corpus(corpus_path, format)?;
    let scores = model.predict(&corpus)?.into_data();
    let ids: Vec<String> = corpus.iter().map(|p| p.id.clone()).collect();
    let hash = model
        .metadata
        .get("config_hash")
        .cloned()
        .unwrap_or_else(|| "none".into());
    write_tsv(
        out,
        &hash,
        &predictions_tsv(&ids, &scores, model.spec.output_dim, threshold),
    )?;
    println!("wrote {} predictions -> {}", ids.len(), out.display());
    Ok(())
}

pub fn cmd_ensemble(cfg: &LoadedConfig) -> Result<()> {
    let Some(ens) = cfg.config.ensemble.clone() else {
        bail!("cli: config has no [ensemble] section");
    };
    let hash = cfg.hash()?;
    let data = load_datasets(cfg)?;
    let table = embeddings_for(cfg, &data.train)?;
    let ann = cfg.model_spec(&ens.ann, Some(ModelKind::AnnBaseline), table.dim)?;
    let lstm = cfg.model_spec(&ens.lstm, Some(ModelKind::Lstm), table.dim)?;
    let tie_rule: TieRule = ens.tie_rule.parse()?;
    let balance = cfg.balance()?;
    let out = run_ensemble(
        &ann,
        &lstm,
        &data.train,
        &data.dev,
        &balance,
        &table,
        ens.seeds,
        tie_rule,
    )?;

    let dir = cfg.output_dir();
    let votes_path = dir.join("votes.tsv");
    let pred_path = dir.join("predictions.tsv");
    write_tsv(&votes_path, &hash, &out.votes_tsv())?;
    let mut preds = String::from("id\tlabel\n");
    for (p, l) in data.dev.iter().zip(&out.labels) {
        let _ = writeln!(preds, "{}\t{}", p.id, *l as u8);
    }
    write_tsv(&pred_path, &hash, &preds)?;
    let mut model_paths = Vec::new();
    for m in &out.members {
        let mut model = m.model.clone();
        model.metadata.insert("config_hash".into(), hash.clone());
        let p = dir.join(format!("{}.model", m.name));
        save_model(&model, &p)?;
        model_paths.push(p);
    }

    let gold: Vec<bool> = data.dev.iter().map(|p| p.label).collect();
    let ens_report = binary_report(&gold, &out.labels)?;
    let mut entries = base_entries("ensemble", &hash);
    entries.push(("tie_rule".into(), tie_rule.to_string()));
    entries.push(("ties".into(), out.ties().to_string()));
    for (name, seed) in pcl_core::ensemble::VOTE_COLUMNS.iter().zip(ens.seeds) {
        entries.push((format!("seed.{name}"), seed.to_string()));
    }
    let mut table_rows = Vec::new();
    for m in &out.members {
        let r = binary_report(&gold, &m.labels)?;
        entries.push((format!("dev.{}.f1", m.name), format!("{:?}", r.f1)));
        table_rows.push((m.name.to_string(), r));
    }
    entries.push((
        "dev.voting.precision".into(),
        format!("{:?}", ens_report.precision),
    ));
    entries.push((
        "dev.voting.recall".into(),
        format!("{:?}", ens_report.recall),
    ));
    entries.push(("dev.voting.f1".into(), format!("{:?}", ens_report.f1)));
    table_rows.push(("voting".into(), ens_report));
    let mut refs: Vec<&Path> = vec![votes_path.as_path(), pred_path.as_path()];
    refs.extend(model_paths.iter().map(PathBuf::as_path));
    write_manifest(&dir, entries, &refs)?;
    print!("{}", metrics::render_table(&table_rows));
    println!(
        "{} ties resolved {} -> {}",
        out.ties(),
        tie_rule,
        dir.display()
    );
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Kv,
}

pub fn cmd_evaluate(
    gold: &Path,
    pred: &Path,
    task: Task,
    format: ReportFormat,
    out: Option<&Path>,
) -> Result<()> {
    let report = metrics::score_external(gold, pred, task)?;
    let text = match format {
        ReportFormat::Table => report.render_table(),
        ReportFormat::Kv => report.to_kv(),
    };
    print!("{text}");
    if let Some(o) = out {
        let hash = first_config_hash(pred).unwrap_or_else(|| "none".into());
        write(o, format!("# config-hash: {hash}\n{}", report.to_kv()))?;
    }
    Ok(())
}

fn first_config_hash(path: &Path) -> Option<String> {
    let raw = fs::read_to_string(path).ok()?;
    raw.lines()
        .next()?
        .strip_prefix("# config-hash: ")
        .map(str::to_string)
}

/// `id -> score` from a prediction file's `score` column.
pub fn read_scores(path: &Path) -> Result<Vec<(String, f64)>> {
    let raw =
        fs::read_to_string(path).with_context(|| format!("cli: cannot read {}", path.display()))?;
    let mut lines = raw
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .context("cli: score file is empty")?
        .split('\t')
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|c| *c == name)
            .with_context(|| format!("cli: {} has no `{name}` column", path.display()))
    };
    let (id_col, score_col) = (col("id")?, col("score")?);
    lines
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            let (Some(id), Some(s)) = (f.get(id_col), f.get(score_col)) else {
                bail!("cli: short row in {}: `{l}`", path.display());
            };
            let s: f64 = s
                .parse()
                .with_context(|| format!("cli: bad score `{s}` in {}", path.display()))?;
            Ok((id.to_string(), s))
        })
        .collect()
}

pub const DEFAULT_SWEEP_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

pub fn cmd_sweep(gold: &Path, scores: &Path, grid: &[f64], format: ReportFormat) -> Result<()> {
    let raw =
        fs::read_to_string(gold).with_context(|| format!("cli: cannot read {}", gold.display()))?;
    let gold_rows = metrics::parse_label_file(&raw, gold, Task::Binary)?;
    let score_rows = read_scores(scores)?;
    let as_labels: Vec<(String, Vec<bool>)> = score_rows
        .iter()
        .map(|(id, _)| (id.clone(), vec![false]))
        .collect();
    metrics::align(&gold_rows, &as_labels)?;
    let by_id: std::collections::HashMap<&str, f64> =
        score_rows.iter().map(|(id, s)| (id.as_str(), *s)).collect();
    let g: Vec<bool> = gold_rows.iter().map(|(_, l)| l[0]).collect();
    let s: Vec<f64> = gold_rows.iter().map(|(id, _)| by_id[id.as_str()]).collect();
    let points = threshold_sweep(&s, &g, grid)?;
    match format {
        ReportFormat::Table => {
            let rows: Vec<(String, metrics::EvalReport)> = points
                .iter()
                .map(|(t, r)| (format!("threshold {t}"), *r))
                .collect();
            print!("{}", metrics::render_table(&rows));
        }
        ReportFormat::Kv => {
            for (t, r) in &points {
                println!(
                    "threshold={t:?}\tprecision={:?}\trecall={:?}\tf1={:?}",
                    r.precision, r.recall, r.f1
                );
            }
        }
    }
    Ok(())
}

pub fn cmd_synth(out: &Path, n: usize, seed: u64, dim: usize) -> Result<()> {
    let corpus = synth::synthetic_corpus(n, seed);
    let tag = format!("# synthetic: n={n} seed={seed} dim={dim}\n");
    write(
        &out.join("corpus.tsv"),
        format!("{tag}{}", corpus::to_canonical_tsv(&corpus)),
    )?;
    let cats: Vec<(String, corpus::Categories)> = corpus
        .iter()
        .filter_map(|p| p.categories.map(|c| (p.id.clone(), c)))
        .collect();
    write(&out.join("categories.tsv"), corpus::categories_tsv(&cats))?;
    write(
        &out.join("embeddings.txt"),
        synth::synthetic_embeddings(&synth::synthetic_words(), dim, seed),
    )?;
    write(&out.join("experiment.toml"), example_config())?;
    let c = class_counts(&corpus);
    println!(
        "wrote {n} paragraphs ({} PCL) and {dim}-d embeddings -> {}",
        c.positives,
        out.display()
    );
    Ok(())
}

pub fn example_config() -> String {
    "\
[corpus]
path = \"corpus.tsv\"
categories = \"categories.tsv\"
split_ratio = 0.8
split_seed = 0

[textprep]
embeddings = \"embeddings.txt\"
max_len = 500

[balance]
strategy = \"class_weights\"
pos_weight = 10.0
neg_weight = 1.0

[model]
kind = \"lstm\"
epochs = 50

[ensemble]
seeds = [1, 2, 3, 4]
tie_rule = \"positive\"

[ensemble.ann]
kind = \"ann_baseline\"

[ensemble.lstm]
kind = \"lstm\"

[output]
dir = \"runs\"
"
    .to_string()
}
