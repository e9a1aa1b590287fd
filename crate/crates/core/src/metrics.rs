//! Positive-class precision, recall and F1, per-category scores, threshold
//! sweeps and scoring of prediction files.
//!
//! Rates are percentages. Any zero denominator scores 0.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{Categories, NUM_CATEGORIES};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// Harmonic mean of two percentages, 0 when both are 0.
pub fn f1_from_rates(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        EvalReport {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            true_negatives: tn,
            precision,
            recall,
            f1: f1_from_rates(precision, recall),
        }
    }

    pub fn support(&self) -> usize {
        self.true_positives + self.false_negatives
    }

    /// Machine-readable lines with full-precision values.
    pub fn to_kv(&self) -> String {
        format!(
            "tp={}\nfp={}\nfn={}\ntn={}\nprecision={:?}\nrecall={:?}\nf1={:?}\n",
            self.true_positives,
            self.false_positives,
            self.false_negatives,
            self.true_negatives,
            self.precision,
            self.recall,
            self.f1
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P={:.2} R={:.2} F1={:.2}",
            self.precision, self.recall, self.f1
        )
    }
}

pub fn binary_report(gold: &[bool], pred: &[bool]) -> Result<EvalReport> {
    if gold.len() != pred.len() {
        return Err(Error::Metrics(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&g, &p) in gold.iter().zip(pred) {
        match (g, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(EvalReport::from_counts(tp, fp, fn_, tn))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiLabelReport {
    pub per_class: Vec<EvalReport>,
    pub per_class_f1: [f64; NUM_CATEGORIES],
    pub average_f1: f64,
}

impl MultiLabelReport {
    pub fn from_per_class(per_class: Vec<EvalReport>) -> Result<Self> {
        if per_class.len() != NUM_CATEGORIES {
            return Err(Error::Metrics(format!(
                "expected {NUM_CATEGORIES} per-class reports, got {}",
                per_class.len()
            )));
        }
        let mut f1 = [0.0; NUM_CATEGORIES];
        for (slot, r) in f1.iter_mut().zip(&per_class) {
            *slot = r.f1;
        }
        Ok(MultiLabelReport {
            average_f1: average(&f1),
            per_class_f1: f1,
            per_class,
        })
    }
}

pub fn average(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn multilabel_report(gold: &[Categories], pred: &[Categories]) -> Result<MultiLabelReport> {
    if gold.len() != pred.len() {
        return Err(Error::Metrics(format!(
            "{} gold rows but {} prediction rows",
            gold.len(),
            pred.len()
        )));
    }
    let per_class = (0..NUM_CATEGORIES)
        .map(|c| {
            let g: Vec<bool> = gold.iter().map(|r| r[c]).collect();
            let p: Vec<bool> = pred.iter().map(|r| r[c]).collect();
            binary_report(&g, &p)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiLabelReport::from_per_class(per_class)
}

/// One report per threshold, labelling `score >= threshold` as positive.
pub fn threshold_sweep(
    scores: &[f64],
    gold: &[bool],
    grid: &[f64],
) -> Result<Vec<(f64, EvalReport)>> {
    if grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::Metrics("sweep thresholds must lie in (0, 1)".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Metrics(
            "sweep thresholds must be strictly ascending".into(),
        ));
    }
    grid.iter()
        .map(|&t| {
            let pred: Vec<bool> = scores.iter().map(|&s| s >= t).collect();
            Ok((t, binary_report(gold, &pred)?))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Binary,
    Multilabel,
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Task::Binary),
            "multilabel" => Ok(Task::Multilabel),
            other => Err(Error::InvalidArgument(format!(
                "unknown task `{other}` (binary, multilabel)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Report {
    Binary(EvalReport),
    Multilabel(MultiLabelReport),
}

impl Report {
    pub fn to_kv(&self) -> String {
        match self {
            Report::Binary(r) => r.to_kv(),
            Report::Multilabel(m) => {
                let mut s = String::new();
                for (i, f) in m.per_class_f1.iter().enumerate() {
                    let _ = writeln!(s, "c{}_f1={f:?}", i + 1);
                }
                let _ = writeln!(s, "average_f1={:?}", m.average_f1);
                s
            }
        }
    }

    pub fn render_table(&self) -> String {
        match self {
            Report::Binary(r) => render_table(&[("positive".to_string(), *r)]),
            Report::Multilabel(m) => {
                let rows: Vec<(String, EvalReport)> = crate::corpus::CATEGORY_NAMES
                    .iter()
                    .zip(&m.per_class)
                    .map(|(n, r)| (n.to_string(), *r))
                    .collect();
                let mut s = render_table(&rows);
                let _ = writeln!(
                    s,
                    "{:<28} {:>9} {:>9} {:>9.2}",
                    "average", "", "", m.average_f1
                );
                s
            }
        }
    }
}

/// Two-decimal `name precision recall f1` table.
pub fn render_table(rows: &[(String, EvalReport)]) -> String {
    let mut s = format!(
        "{:<28} {:>9} {:>9} {:>9}\n",
        "", "precision", "recall", "f1"
    );
    for (name, r) in rows {
        let _ = writeln!(
            s,
            "{:<28} {:>9.2} {:>9.2} {:>9.2}",
            name, r.precision, r.recall, r.f1
        );
    }
    s
}

/// Rows of a header-driven label file: `id` plus either `label` or
/// `c1..c7`. Other columns (scores, text, ...) are ignored and `#` lines
/// are comments.
pub fn parse_label_file(raw: &str, path: &Path, task: Task) -> Result<Vec<(String, Vec<bool>)>> {
    let mut lines = raw
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::malformed(path, 1, "file has no header"))?;
    let cols: Vec<&str> = header.split('\t').collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::malformed(path, hline, format!("header has no `{name}` column")))
    };
    let id_col = find("id")?;
    let label_cols: Vec<usize> = match task {
        Task::Binary => vec![find("label")?],
        Task::Multilabel => (1..=NUM_CATEGORIES)
            .map(|i| find(&format!("c{i}")))
            .collect::<Result<_>>()?,
    };
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != cols.len() {
            return Err(Error::malformed(
                path,
                lineno,
                format!("expected {} columns, found {}", cols.len(), fields.len()),
            ));
        }
        let id = fields[id_col].to_string();
        if seen.insert(id.clone(), lineno).is_some() {
            return Err(Error::DuplicateId(id));
        }
        let labels = label_cols
            .iter()
            .map(|&c| match fields[c] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::malformed(
                    path,
                    lineno,
                    format!("label must be 0 or 1, got `{other}`"),
                )),
            })
            .collect::<Result<_>>()?;
        out.push((id, labels));
    }
    Ok(out)
}

fn read_label_file(path: &Path, task: Task) -> Result<Vec<(String, Vec<bool>)>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_label_file(&raw, path, task)
}

/// Joins gold and predicted rows on id, in gold order.
pub fn align(
    gold: &[(String, Vec<bool>)],
    pred: &[(String, Vec<bool>)],
) -> Result<Vec<(Vec<bool>, Vec<bool>)>> {
    let by_id: HashMap<&str, &Vec<bool>> = pred.iter().map(|(id, l)| (id.as_str(), l)).collect();
    let gold_ids: HashMap<&str, ()> = gold.iter().map(|(id, _)| (id.as_str(), ())).collect();
    let missing: Vec<String> = gold
        .iter()
        .filter(|(id, _)| !by_id.contains_key(id.as_str()))
        .map(|(id, _)| id.clone())
        .collect();
    let extra: Vec<String> = pred
        .iter()
        .filter(|(id, _)| !gold_ids.contains_key(id.as_str()))
        .map(|(id, _)| id.clone())
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::IdMismatch { missing, extra });
    }
    Ok(gold
        .iter()
        .map(|(id, g)| (g.clone(), by_id[id.as_str()].clone()))
        .collect())
}

pub fn score_rows(
    gold: &[(String, Vec<bool>)],
    pred: &[(String, Vec<bool>)],
    task: Task,
) -> Result<Report> {
    let pairs = align(gold, pred)?;
    match task {
        Task::Binary => {
            let g: Vec<bool> = pairs.iter().map(|(g, _)| g[0]).collect();
            let p: Vec<bool> = pairs.iter().map(|(_, p)| p[0]).collect();
            Ok(Report::Binary(binary_report(&g, &p)?))
        }
        Task::Multilabel => {
            let to_cats = |v: &Vec<bool>| {
                let mut c = [false; NUM_CATEGORIES];
                c.copy_from_slice(v);
                c
            };
            let g: Vec<Categories> = pairs.iter().map(|(g, _)| to_cats(g)).collect();
            let p: Vec<Categories> = pairs.iter().map(|(_, p)| to_cats(p)).collect();
            Ok(Report::Multilabel(multilabel_report(&g, &p)?))
        }
    }
}

pub fn score_external(gold_file: &Path, pred_file: &Path, task: Task) -> Result<Report> {
    score_rows(
        &read_label_file(gold_file, task)?,
        &read_label_file(pred_file, task)?,
        task,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lstm_dev_row() {
        // 199 dev positives; 92 found with 130 false alarms.
        let r = EvalReport::from_counts(92, 130, 107, 1_765);
        assert!((r.precision - 41.44).abs() < 0.005, "{}", r.precision);
        assert!((r.recall - 46.23).abs() < 0.005, "{}", r.recall);
        assert!((r.f1 - 43.70).abs() < 0.01, "{}", r.f1);
        assert!((f1_from_rates(41.44, 46.23) - 43.70).abs() < 0.01);
    }

    #[test]
    fn perfect_and_degenerate() {
        let all = vec![true; 5];
        let r = binary_report(&all, &all).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (100.0, 100.0, 100.0));
        let none = vec![false; 5];
        let r = binary_report(&none, &none).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        assert!(binary_report(&all, &none[..3]).is_err());
    }

    #[test]
    fn average_of_category_column() {
        let f1 = [55.94, 31.74, 24.44, 19.35, 23.88, 45.83, 15.38];
        assert!((average(&f1) - 30.94).abs() < 0.005);
    }

    #[test]
    fn multilabel_zero_class() {
        let gold = vec![[true, false, false, false, false, false, false]; 3];
        let r = multilabel_report(&gold, &gold).unwrap();
        assert_eq!(r.per_class_f1[0], 100.0);
        assert_eq!(r.per_class_f1[1], 0.0);
        assert_eq!(r.average_f1, r.per_class_f1.iter().sum::<f64>() / 7.0);
    }

    #[test]
    fn sweep_reproduces_operating_points() {
        let scores = [0.55, 0.75, 0.65, 0.9, 0.3];
        let gold = [true, true, false, false, true];
        let out = threshold_sweep(&scores, &gold, &[0.5, 0.7]).unwrap();
        assert_eq!(
            out[0].1,
            binary_report(&gold, &[true, true, true, true, false]).unwrap()
        );
        assert_eq!(
            out[1].1,
            binary_report(&gold, &[false, true, false, true, false]).unwrap()
        );
        assert!(threshold_sweep(&scores, &gold, &[0.7, 0.5]).is_err());
        assert!(threshold_sweep(&scores, &gold, &[0.0]).is_err());
        let low = threshold_sweep(&scores, &gold, &[1e-9]).unwrap();
        assert_eq!(low[0].1.recall, 100.0);
    }

    #[test]
    fn label_file_parsing_and_join() {
        let p = Path::new("x");
        let gold = parse_label_file("id\tlabel\na\t1\nb\t0\n", p, Task::Binary).unwrap();
        let pred = parse_label_file(
            "# config-hash: 00\nid\tscore\tlabel\nb\t0.1\t1\na\t0.9\t1\n",
            p,
            Task::Binary,
        )
        .unwrap();
        match score_rows(&gold, &pred, Task::Binary).unwrap() {
            Report::Binary(r) => assert_eq!(
                (
                    r.true_positives,
                    r.false_positives,
                    r.false_negatives,
                    r.true_negatives
                ),
                (1, 1, 0, 0)
            ),
            other => panic!("{other:?}"),
        }
        let short = parse_label_file("id\tlabel\na\t1\nc\t0\n", p, Task::Binary).unwrap();
        match score_rows(&gold, &short, Task::Binary) {
            Err(Error::IdMismatch { missing, extra }) => {
                assert_eq!(missing, vec!["b"]);
                assert_eq!(extra, vec!["c"]);
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_label_file("id\tlabel\na\t2\n", p, Task::Binary).is_err());
        assert!(parse_label_file("id\tc1\na\t1\n", p, Task::Multilabel).is_err());
    }

    fn oracle(gold: &[bool], pred: &[bool]) -> (usize, usize, usize, usize) {
        let count = |g: bool, p: bool| {
            gold.iter()
                .zip(pred)
                .filter(|(a, b)| **a == g && **b == p)
                .count()
        };
        (
            count(true, true),
            count(false, true),
            count(true, false),
            count(false, false),
        )
    }

    proptest! {
        #[test]
        fn counts_match_oracle(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 0..200)) {
            let (g, p): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
            let r = binary_report(&g, &p).unwrap();
            prop_assert_eq!(
                (r.true_positives, r.false_positives, r.false_negatives, r.true_negatives),
                oracle(&g, &p)
            );
            let (tp, fp, fn_, _) = oracle(&g, &p);
            let pr = if tp + fp == 0 { 0.0 } else { 100.0 * tp as f64 / (tp + fp) as f64 };
            let rc = if tp + fn_ == 0 { 0.0 } else { 100.0 * tp as f64 / (tp + fn_) as f64 };
            let f = if tp == 0 { 0.0 } else { 200.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
            prop_assert!((r.precision - pr).abs() < 1e-9 && (r.recall - rc).abs() < 1e-9);
            prop_assert!((r.f1 - f).abs() < 1e-9);
        }

        #[test]
        fn multilabel_matches_per_column(rows in proptest::collection::vec(
            (proptest::array::uniform7(any::<bool>()), proptest::array::uniform7(any::<bool>())), 1..60)) {
            let (g, p): (Vec<Categories>, Vec<Categories>) = rows.into_iter().unzip();
            let r = multilabel_report(&g, &p).unwrap();
            for c in 0..NUM_CATEGORIES {
                let gc: Vec<bool> = g.iter().map(|x| x[c]).collect();
                let pc: Vec<bool> = p.iter().map(|x| x[c]).collect();
                let (tp, fp, fn_, _) = oracle(&gc, &pc);
                let f = if tp == 0 { 0.0 } else { 200.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
                prop_assert!((r.per_class_f1[c] - f).abs() < 1e-9);
            }
            prop_assert_eq!(r.average_f1, r.per_class_f1.iter().sum::<f64>() / 7.0);
        }

        #[test]
        fn recall_non_increasing(scores in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 1..80)) {
            let (s, g): (Vec<f64>, Vec<bool>) = scores.into_iter().unzip();
            let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
            let out = threshold_sweep(&s, &g, &grid).unwrap();
            for w in out.windows(2) {
                prop_assert!(w[1].1.recall <= w[0].1.recall);
                prop_assert_eq!(w[1].1.support(), w[0].1.support());
            }
        }
    }
}
