//! Acceptance gate: one PASS / FAIL / SKIP line per criterion.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use pcl_core::corpus::{Categories, Paragraph};
use pcl_core::ensemble::{vote, TieRule};
use pcl_core::imbalance::{oversample, undersample, BalanceConfig, Ratio};
use pcl_core::metrics::{
    average, binary_report, f1_from_rates, multilabel_report, threshold_sweep,
};
use pcl_core::models::{build, train, train_with_observer, ModelKind, ModelSpec, TrainedModel};
use pcl_core::nncore::{gradient_check, GradCheck, Graph, Mask, ParamStore, Tensor, Var};
use pcl_core::seed::{self, Stream};
use pcl_core::synth;
use pcl_core::textprep::{
    build_vocab, parse_embeddings, tokenize, ClassWeights, EmbeddingTable, Encoder, Target,
};
use rand::Rng;

const KINDS: [ModelKind; 3] = [ModelKind::AnnBaseline, ModelKind::AnnDeep, ModelKind::Lstm];

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn outcome(r: Result<String, String>) -> Outcome {
    match r {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}

// ---------------------------------------------------------------- fixtures

fn random(shape: &[usize], scale: f64, stream_index: u64) -> Tensor {
    let mut rng = seed::rng(17, Stream::Synthetic, stream_index);
    let n = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| rng.gen_range(-scale..scale)).collect(),
    )
    .unwrap()
}

fn project(g: &mut Graph<'_>, y: Var, index: u64) -> pcl_core::Result<Var> {
    let shape = g.value(y).shape().to_vec();
    let r = g.leaf(random(&shape, 1.0, 1000 + index));
    let prod = g.mul(y, r)?;
    Ok(g.sum(prod))
}

fn store(entries: Vec<(&str, Tensor)>) -> ParamStore {
    let mut s = ParamStore::new();
    for (n, t) in entries {
        s.insert(n, t, true).unwrap();
    }
    s
}

fn table_for(corpus: &[Paragraph], dim: usize) -> EmbeddingTable {
    let tokens: Vec<Vec<String>> = corpus.iter().map(|p| tokenize(&p.text, false)).collect();
    let vocab = build_vocab(&tokens, 1).unwrap();
    let raw = synth::synthetic_embeddings(&synth::synthetic_words(), dim, 3);
    parse_embeddings(&raw, Path::new("synthetic"), &vocab, 3).unwrap()
}

fn training_f1(model: &TrainedModel, data: &[Paragraph]) -> f64 {
    let scores = model.predict(data).unwrap();
    let gold: Vec<bool> = data.iter().map(|p| p.label).collect();
    binary_report(&gold, &model.predict_labels(&scores))
        .unwrap()
        .f1
}

fn pcl(args: &[&str], root: Option<&Path>) -> Result<String, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pcl"));
    cmd.args(args).env_remove("PCL_OUTPUT_ROOT");
    if let Some(r) = root {
        cmd.env("PCL_OUTPUT_ROOT", r);
    }
    let out = cmd.output().map_err(|e| format!("spawn pcl: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "pcl {args:?}: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn manifest(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let raw = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(raw
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

// ---------------------------------------------------------------- 1

const EPS: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn record(
    worst: &mut (f64, String),
    what: &str,
    r: pcl_core::Result<GradCheck>,
) -> Result<(), String> {
    let r = r.map_err(|e| format!("{what}: {e}"))?;
    ensure(r.checked > 0, || format!("{what}: nothing checked"))?;
    ensure(r.max_rel_error < TOL, || {
        format!(
            "{what}: relative error {:e} at {}[{}]",
            r.max_rel_error, r.worst_param, r.worst_index
        )
    })?;
    if r.max_rel_error >= worst.0 {
        *worst = (r.max_rel_error, what.to_string());
    }
    Ok(())
}

fn gradient_fidelity() -> Outcome {
    let start = Instant::now();
    let mut worst = (0.0_f64, String::new());
    let mut result = || {
        let mut s = store(vec![
            ("x", random(&[3, 4], 1.0, 1)),
            ("w", random(&[4, 5], 1.0, 2)),
            ("b", random(&[5], 0.5, 3)),
        ]);
        record(
            &mut worst,
            "dense",
            gradient_check(&mut s, EPS, 100, |g| {
                let (x, w, b) = (
                    g.param_named("x")?,
                    g.param_named("w")?,
                    g.param_named("b")?,
                );
                let y = g.dense(x, w, b, pcl_core::nncore::Activation::Relu)?;
                project(g, y, 1)
            }),
        )?;

        let mask = Mask::from_lengths(&[3, 5, 1], 5);
        for max in [false, true] {
            let mut s = store(vec![("x", random(&[3, 5, 4], 1.0, 4))]);
            record(
                &mut worst,
                if max { "max pool" } else { "average pool" },
                gradient_check(&mut s, EPS, 100, |g| {
                    let x = g.param_named("x")?;
                    let y = if max {
                        g.global_max_pool(x, &mask)?
                    } else {
                        g.global_average_pool(x, &mask)?
                    };
                    project(g, y, 2)
                }),
            )?;
        }

        let mut s = store(vec![("x", random(&[4, 6], 1.0, 5))]);
        record(
            &mut worst,
            "dropout off",
            gradient_check(&mut s, EPS, 100, |g| {
                let x = g.param_named("x")?;
                let y = g.dropout(x, 0.1, false, 0)?;
                let t = g.activation(y, pcl_core::nncore::Activation::Tanh);
                project(g, t, 3)
            }),
        )?;

        let (d, h) = (3, 4);
        let mask = Mask::from_lengths(&[2, 5, 4], 5);
        let mut s = store(vec![
            ("x", random(&[3, 5, d], 1.0, 6)),
            ("kernel", random(&[d, 4 * h], 0.8, 7)),
            ("recurrent", random(&[h, 4 * h], 0.8, 8)),
            ("bias", random(&[4 * h], 0.5, 9)),
        ]);
        record(
            &mut worst,
            "lstm",
            gradient_check(&mut s, EPS, 200, |g| {
                let x = g.param_named("x")?;
                let (k, u, b) = (
                    g.param_named("kernel")?,
                    g.param_named("recurrent")?,
                    g.param_named("bias")?,
                );
                let y = g.lstm(x, &mask, k, u, b)?;
                project(g, y, 4)
            }),
        )?;

        let data = synth::synthetic_corpus(22, 9);
        let table = table_for(&data, 5);
        for kind in KINDS {
            let spec = ModelSpec {
                hidden_size: 6,
                lstm_hidden: 4,
                seed: 21,
                ..ModelSpec::new(kind, 5)
            };
            let mut model = build(&spec, &table).map_err(|e| e.to_string())?;
            let batch = Encoder::new(&model.vocab, 12)
                .target(Target::Binary)
                .encode(&data[..6], ClassWeights::new(10.0, 1.0).unwrap())
                .map_err(|e| e.to_string())?;
            record(
                &mut worst,
                &format!("{kind} model"),
                model.check_gradients(&batch, EPS, 300, None),
            )?;
        }
        let elapsed = start.elapsed();
        ensure(elapsed < Duration::from_secs(60), || {
            format!("took {elapsed:?}")
        })?;
        Ok(format!(
            "worst relative error {:.1e} ({}), {:.1?}",
            worst.0, worst.1, elapsed
        ))
    };
    outcome(result())
}

// ---------------------------------------------------------------- 2

fn oracle_f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        0.0
    } else {
        200.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

fn oracle_counts(gold: &[bool], pred: &[bool]) -> [usize; 4] {
    let mut c = [0; 4];
    for (&g, &p) in gold.iter().zip(pred) {
        c[match (g, p) {
            (true, true) => 0,
            (false, true) => 1,
            (true, false) => 2,
            (false, false) => 3,
        }] += 1;
    }
    c
}

fn metric_oracle() -> Outcome {
    let result = (|| {
        let mut rng = seed::rng(2, Stream::Synthetic, 0);
        for trial in 0..1000 {
            let n = rng.gen_range(1..300);
            let rate = rng.gen_range(0.0..1.0);
            let gold: Vec<bool> = (0..n).map(|_| rng.gen_bool(rate)).collect();
            let pred: Vec<bool> = (0..n).map(|_| rng.gen_bool(rate)).collect();
            let r = binary_report(&gold, &pred).map_err(|e| e.to_string())?;
            let [tp, fp, fn_, tn] = oracle_counts(&gold, &pred);
            let counts = [
                r.true_positives,
                r.false_positives,
                r.false_negatives,
                r.true_negatives,
            ];
            ensure(counts == [tp, fp, fn_, tn], || {
                format!("binary trial {trial}: counts {counts:?}")
            })?;
            ensure((r.f1 - oracle_f1(tp, fp, fn_)).abs() < 1e-9, || {
                format!("binary trial {trial}: f1 {}", r.f1)
            })?;
        }
        for trial in 0..1000 {
            let n = rng.gen_range(1..150);
            let gold: Vec<Categories> = (0..n)
                .map(|_| std::array::from_fn(|_| rng.gen_bool(0.3)))
                .collect();
            let pred: Vec<Categories> = (0..n)
                .map(|_| std::array::from_fn(|_| rng.gen_bool(0.3)))
                .collect();
            let m = multilabel_report(&gold, &pred).map_err(|e| e.to_string())?;
            let mut f1s = [0.0; 7];
            for (k, f1) in f1s.iter_mut().enumerate() {
                let g: Vec<bool> = gold.iter().map(|c| c[k]).collect();
                let p: Vec<bool> = pred.iter().map(|c| c[k]).collect();
                let [tp, fp, fn_, tn] = oracle_counts(&g, &p);
                let r = &m.per_class[k];
                let counts = [
                    r.true_positives,
                    r.false_positives,
                    r.false_negatives,
                    r.true_negatives,
                ];
                ensure(counts == [tp, fp, fn_, tn], || {
                    format!("multilabel trial {trial} class {k}")
                })?;
                *f1 = oracle_f1(tp, fp, fn_);
            }
            let mean = f1s.iter().sum::<f64>() / 7.0;
            ensure((m.average_f1 - mean).abs() < 1e-9, || {
                format!("multilabel trial {trial}: average")
            })?;
        }

        // (P, R, F) cells of the two system comparison tables.
        let cells = [
            (32.63, 39.19, 35.61),
            (36.50, 46.23, 40.79),
            (41.44, 46.23, 43.70),
            (46.29, 40.70, 43.32),
            (40.98, 50.25, 45.14),
            (51.15, 66.83, 57.95),
            (35.93, 41.7, 38.6),
            (37.5, 66.33, 47.91),
            (28.34, 48.90, 35.88),
            (26.62, 67.19, 38.14),
            (38.31, 50.16, 43.44),
            (48.50, 40.69, 44.25),
            (39.02, 62.78, 48.13),
            (46.19, 66.88, 54.64),
            (36.54, 35.96, 36.25),
            (25.19, 84.54, 38.81),
        ];
        let mut widest = 0.0_f64;
        for (p, r, f) in cells {
            let got = f1_from_rates(p, r);
            widest = widest.max((got - f).abs());
            ensure((got - f).abs() <= 0.01 + 1e-9, || {
                format!("F1({p}, {r}) = {got:.4}, table says {f}")
            })?;
        }
        Ok(format!(
            "2000 random sets match; 16 table cells within {widest:.4}"
        ))
    })();
    outcome(result)
}

// ---------------------------------------------------------------- 3

fn multilabel_average() -> Outcome {
    let column = [55.94, 31.74, 24.44, 19.35, 23.88, 45.83, 15.38];
    let got = average(&column);
    outcome(
        ensure((got - 30.94).abs() <= 0.01, || format!("average {got:.4}"))
            .map(|_| format!("average {got:.4}")),
    )
}

// ---------------------------------------------------------------- 4

fn corpus_of(pos: usize, neg: usize) -> Vec<Paragraph> {
    (0..pos + neg)
        .map(|i| Paragraph::new(format!("r{i}"), "migrant", "gb", "text", i < pos).unwrap())
        .collect()
}

fn resampling() -> Outcome {
    let result = (|| {
        let positives = |c: &[Paragraph]| c.iter().filter(|p| p.label).count();
        let big = oversample(&corpus_of(993, 9930), 9, 1).map_err(|e| e.to_string())?;
        ensure(positives(&big) == 8937, || {
            format!("993 x 9 gave {}", positives(&big))
        })?;
        let small = oversample(&corpus_of(794, 6352), 9, 1).map_err(|e| e.to_string())?;
        ensure(positives(&small) == 7146, || {
            format!("794 x 9 gave {}", positives(&small))
        })?;
        let under = undersample(&corpus_of(794, 5000), Ratio::new(2, 1).unwrap(), 1)
            .map_err(|e| e.to_string())?;
        let (p, n) = (under.achieved.positives, under.achieved.negatives);
        ensure(p == 794 && n == 397, || {
            format!("undersample gave {p} / {n}")
        })?;
        Ok("8937, 7146, 794 + 397".to_string())
    })();
    outcome(result)
}

// ---------------------------------------------------------------- 5

fn permutations(v: [bool; 4]) -> Vec<[bool; 4]> {
    let idx = [0, 1, 2, 3];
    let mut out = Vec::new();
    for a in idx {
        for b in idx {
            for c in idx {
                for d in idx {
                    let p = [a, b, c, d];
                    if (0..4).all(|i| p.contains(&i)) {
                        out.push([v[a], v[b], v[c], v[d]]);
                    }
                }
            }
        }
    }
    out
}

fn voting() -> Outcome {
    let result = (|| {
        for rule in [TieRule::Positive, TieRule::Negative] {
            for bits in 0u8..16 {
                let row: [bool; 4] = std::array::from_fn(|i| bits >> i & 1 == 1);
                let yes = row.iter().filter(|&&b| b).count();
                let expected = match yes {
                    0 | 1 => false,
                    2 => rule == TieRule::Positive,
                    _ => true,
                };
                ensure(vote(&row, rule) == expected, || {
                    format!("{row:?} under {rule}")
                })?;
                for p in permutations(row) {
                    ensure(vote(&p, rule) == expected, || {
                        format!("permutation {p:?} under {rule}")
                    })?;
                }
                for i in 0..4 {
                    let mut up = row;
                    up[i] = true;
                    ensure(vote(&up, rule) >= vote(&row, rule), || {
                        format!("raising {row:?}[{i}] under {rule}")
                    })?;
                }
            }
        }
        Ok("16 rows x 2 tie rules, 24 permutations each, monotone".to_string())
    })();
    outcome(result)
}

// ---------------------------------------------------------------- 6

fn training_sanity() -> Outcome {
    let start = Instant::now();
    let result = (|| {
        let data = synth::separable_set(0);
        let table = table_for(&data, 8);
        let mut reached = Vec::new();
        for kind in KINDS {
            let spec = ModelSpec {
                epochs: 200,
                batch_size: 4,
                validation_fraction: 0.0,
                seed: 5,
                ..ModelSpec::new(kind, 8)
            };
            let model = build(&spec, &table).map_err(|e| e.to_string())?;
            let mut at = None;
            train_with_observer(model, &data, &BalanceConfig::none(), |stats, m| {
                if training_f1(m, &data) == 100.0 {
                    at = Some(stats.epoch);
                    return false;
                }
                true
            })
            .map_err(|e| e.to_string())?;
            let at = at.ok_or_else(|| format!("{kind} never reached training F1 1.0"))?;
            reached.push(format!("{kind}@{at}"));
        }

        let data = synth::synthetic_corpus(200, 1);
        let table = table_for(&data, 16);
        let balance = BalanceConfig {
            weights: ClassWeights::new(10.0, 1.0).unwrap(),
            ..BalanceConfig::default()
        };
        for kind in KINDS {
            let spec = ModelSpec {
                seed: 2,
                ..ModelSpec::new(kind, 16)
            };
            let model =
                train(build(&spec, &table).unwrap(), &data, &balance).map_err(|e| e.to_string())?;
            let (first, last) = (model.history[0].train_loss, model.history[49].train_loss);
            ensure(last < first, || format!("{kind}: loss {first} -> {last}"))?;
        }
        let elapsed = start.elapsed();
        ensure(elapsed < Duration::from_secs(300), || {
            format!("took {elapsed:?}")
        })?;
        Ok(format!(
            "separable fit {}; loss descends for all three, {:.1?}",
            reached.join(" "),
            elapsed
        ))
    })();
    outcome(result)
}

// ---------------------------------------------------------------- 7

fn synth_workspace(dir: &Path) -> Result<PathBuf, String> {
    let data = dir.join("data");
    pcl(
        &["synth", "--out", data.to_str().unwrap(), "--dim", "8"],
        None,
    )?;
    let cfg = "[corpus]\npath = \"corpus.tsv\"\ncategories = \"categories.tsv\"\n\n[textprep]\nembeddings = \"embeddings.txt\"\n\n[model]\nkind = \"lstm\"\nepochs = 4\n\n[ensemble]\nseeds = [1, 2, 3, 4]\n[ensemble.ann]\nepochs = 4\n[ensemble.lstm]\nepochs = 2\n\n[output]\ndir = \"runs\"\n";
    let path = data.join("exp.toml");
    fs::write(&path, cfg).map_err(|e| e.to_string())?;
    Ok(path)
}

fn determinism() -> Outcome {
    let result = (|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = synth_workspace(dir.path())?;
        let cfg = cfg.to_str().unwrap();
        let corpus = dir.path().join("data/corpus.tsv");
        let mut files = Vec::new();
        for run in ["a", "b"] {
            let root = dir.path().join(run);
            pcl(&["train", "--config", cfg], Some(&root))?;
            pcl(&["ensemble", "--config", cfg], Some(&root.join("ens")))?;
            let pred = root.join("pred.tsv");
            let model = root.join("runs/model.bin");
            pcl(
                &[
                    "predict",
                    "--model",
                    model.to_str().unwrap(),
                    "--corpus",
                    corpus.to_str().unwrap(),
                    "--out",
                    pred.to_str().unwrap(),
                ],
                None,
            )?;
            files.push(root);
        }
        let compared = [
            "runs/model.bin",
            "runs/history.tsv",
            "runs/dev_predictions.tsv",
            "runs/manifest.txt",
            "pred.tsv",
            "ens/runs/votes.tsv",
            "ens/runs/predictions.tsv",
            "ens/runs/ann1.model",
            "ens/runs/lstm2.model",
            "ens/runs/manifest.txt",
        ];
        for f in compared {
            let a = fs::read(files[0].join(f)).map_err(|e| format!("{f}: {e}"))?;
            let b = fs::read(files[1].join(f)).map_err(|e| format!("{f}: {e}"))?;
            ensure(a == b, || format!("{f} differs between runs"))?;
        }
        Ok(format!(
            "{} artifacts byte-identical across two runs",
            compared.len()
        ))
    })();
    outcome(result)
}

// ---------------------------------------------------------------- 8

fn padding_invariance() -> Outcome {
    let result = (|| {
        let data = synth::synthetic_corpus(40, 6);
        let table = table_for(&data, 6);
        let longest = data
            .iter()
            .map(|p| tokenize(&p.text, false).len())
            .max()
            .unwrap();
        let mut scores = 0;
        for kind in KINDS {
            for output_dim in [1, 7] {
                let spec = ModelSpec {
                    epochs: 1,
                    output_dim,
                    ..ModelSpec::new(kind, 6)
                };
                let model = train(build(&spec, &table).unwrap(), &data, &BalanceConfig::none())
                    .map_err(|e| e.to_string())?;
                let enc = |max_len| {
                    Encoder::new(&model.vocab, max_len)
                        .encode(&data, ClassWeights::UNIT)
                        .unwrap()
                };
                let base = model
                    .predict_encoded(&enc(longest))
                    .map_err(|e| e.to_string())?;
                for wider in [longest + 1, 2 * longest, 500] {
                    let other = model
                        .predict_encoded(&enc(wider))
                        .map_err(|e| e.to_string())?;
                    let same = base
                        .data()
                        .iter()
                        .zip(other.data())
                        .all(|(a, b)| a.to_bits() == b.to_bits());
                    ensure(same, || {
                        format!("{kind} width {output_dim}: max_len {wider} changed a score")
                    })?;
                }
                scores += base.len();
            }
        }
        Ok(format!(
            "{scores} scores bitwise equal at three wider max_len values"
        ))
    })();
    outcome(result)
}

// ---------------------------------------------------------------- 9

fn threshold_behavior() -> Outcome {
    let result = (|| {
        let mut rng = seed::rng(4, Stream::Synthetic, 0);
        let grid: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        for trial in 0..200 {
            let n = rng.gen_range(5..200);
            let gold: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
            let scores: Vec<f64> = gold
                .iter()
                .map(|&g| (rng.gen_range(0.0..1.0) + if g { 0.3 } else { 0.0 }) / 1.3)
                .collect();
            let points = threshold_sweep(&scores, &gold, &grid).map_err(|e| e.to_string())?;
            for w in points.windows(2) {
                ensure(w[1].1.recall <= w[0].1.recall, || {
                    format!("trial {trial}: recall rose at {}", w[1].0)
                })?;
            }
        }

        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let gold = dir.path().join("gold.tsv");
        let scores = dir.path().join("scores.tsv");
        let mut g = String::from("id\tlabel\n");
        let mut s = String::from("id\tscore\n");
        for i in 0..50 {
            let label = i % 3 == 0;
            g.push_str(&format!("p{i}\t{}\n", label as u8));
            s.push_str(&format!("p{i}\t{:?}\n", ((i * 37) % 100) as f64 / 100.0));
        }
        fs::write(&gold, g).map_err(|e| e.to_string())?;
        fs::write(&scores, s).map_err(|e| e.to_string())?;
        let out = pcl(
            &[
                "sweep",
                "--gold",
                gold.to_str().unwrap(),
                "--scores",
                scores.to_str().unwrap(),
                "--report",
                "kv",
            ],
            None,
        )?;
        let recall = |t: &str| -> Result<f64, String> {
            out.lines()
                .find(|l| l.starts_with(&format!("threshold={t}\t")))
                .and_then(|l| l.split('\t').find_map(|c| c.strip_prefix("recall=")))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| format!("sweep did not emit threshold {t}"))
        };
        let (r5, r7) = (recall("0.5")?, recall("0.7")?);
        ensure(r7 <= r5, || format!("recall {r5} at 0.5 but {r7} at 0.7"))?;
        Ok(format!(
            "200 random sweeps monotone; CLI emits 0.5 (R={r5:.2}) and 0.7 (R={r7:.2})"
        ))
    })();
    outcome(result)
}

// ---------------------------------------------------------------- 10

fn official_data() -> Outcome {
    let (Ok(dpm), Ok(glove)) = (
        std::env::var("PCL_DPM_PATH"),
        std::env::var("PCL_GLOVE_PATH"),
    ) else {
        return Outcome::Skip(
            "set PCL_DPM_PATH and PCL_GLOVE_PATH to run on the official corpus".into(),
        );
    };
    let result = (|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let split = match std::env::var("PCL_DPM_DEV_IDS") {
            Ok(ids) => format!("dev_ids = {ids:?}\n"),
            Err(_) => String::new(),
        };
        let cfg = format!(
            "[corpus]\npath = {dpm:?}\nformat = \"official-dpm\"\n{split}\n[textprep]\nembeddings = {glove:?}\n\n[balance]\nstrategy = \"class_weights\"\npos_weight = 10.0\nneg_weight = 1.0\n\n[model]\nkind = \"lstm\"\n\n[ensemble]\nseeds = [1, 2, 3, 4]\n[ensemble.ann]\nkind = \"ann_baseline\"\n[ensemble.lstm]\nkind = \"lstm\"\n\n[output]\ndir = \"runs\"\n"
        );
        let path = dir.path().join("official.toml");
        fs::write(&path, cfg).map_err(|e| e.to_string())?;
        let p = path.to_str().unwrap();
        pcl(&["train", "--config", p], Some(&dir.path().join("single")))?;
        pcl(&["ensemble", "--config", p], Some(&dir.path().join("vote")))?;
        let single = manifest(&dir.path().join("single/runs/manifest.txt"))?;
        let vote = manifest(&dir.path().join("vote/runs/manifest.txt"))?;
        let f1 = |m: &BTreeMap<String, String>, key: &str| -> Result<f64, String> {
            m.get(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| format!("manifest lacks {key}"))
        };
        let (lstm, voting) = (f1(&single, "dev.f1")?, f1(&vote, "dev.voting.f1")?);
        for (name, v) in [("lstm", lstm), ("voting", voting)] {
            ensure((30.0..=55.0).contains(&v), || {
                format!("{name} dev F1 {v:.2} outside 30-55")
            })?;
        }
        Ok(format!("lstm dev F1 {lstm:.2}, voting dev F1 {voting:.2}"))
    })();
    outcome(result)
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("gradient fidelity", gradient_fidelity),
        ("metric oracle equivalence", metric_oracle),
        ("multi-label average", multilabel_average),
        ("resampling arithmetic", resampling),
        ("voting correctness", voting),
        ("training sanity", training_sanity),
        ("determinism", determinism),
        ("padding invariance", padding_invariance),
        ("threshold behavior", threshold_behavior),
        ("official data end to end", official_data),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Outcome::Fail("panicked".into()));
        let (tag, detail) = match o {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("{tag} {:>2} {name}: {detail}", i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
