//! Paragraph corpus: loading, validation, splitting and persistence.
//!
//! Two input layouts are understood. The canonical TSV is owned by this
//! crate (`id keyword country text label`, header row, binary labels,
//! backslash escapes for tab/newline inside text). The official layout is
//! the dataset's own `par_id art_id keyword country_code text label` file
//! with graded 0-4 labels and a short free-text preamble.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed::{self, Stream};

pub const NUM_CATEGORIES: usize = 7;

/// Taxonomy order used by every category vector in the crate.
pub const CATEGORY_NAMES: [&str; NUM_CATEGORIES] = [
    "unbalanced_power_relations",
    "shallow_solution",
    "presupposition",
    "authority_voice",
    "metaphor",
    "compassion",
    "the_poorer_the_merrier",
];

pub const CANONICAL_HEADER: [&str; 5] = ["id", "keyword", "country", "text", "label"];

pub type Categories = [bool; NUM_CATEGORIES];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Paragraph {
    pub id: String,
    pub keyword: String,
    pub country: String,
    pub text: String,
    /// `true` when the paragraph contains PCL.
    pub label: bool,
    pub categories: Option<Categories>,
}

impl Paragraph {
    pub fn new(
        id: impl Into<String>,
        keyword: impl Into<String>,
        country: impl Into<String>,
        text: impl Into<String>,
        label: bool,
    ) -> Result<Self> {
        let p = Paragraph {
            id: id.into(),
            keyword: keyword.into(),
            country: country.into(),
            text: text.into(),
            label,
            categories: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_categories(mut self, categories: Categories) -> Result<Self> {
        self.categories = Some(categories);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidParagraph("empty paragraph id".into()));
        }
        if self.text.trim().is_empty() {
            return Err(Error::InvalidParagraph(format!(
                "paragraph `{}` has empty text",
                self.id
            )));
        }
        if self.categories.is_some() && !self.label {
            return Err(Error::InvalidParagraph(format!(
                "paragraph `{}` carries categories but is labelled non-PCL",
                self.id
            )));
        }
        Ok(())
    }

    /// Category flags as training targets; non-PCL paragraphs are all zero.
    pub fn category_targets(&self) -> Option<Categories> {
        match (self.label, self.categories) {
            (_, Some(c)) => Some(c),
            (false, None) => Some([false; NUM_CATEGORIES]),
            (true, None) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    CanonicalTsv,
    OfficialDpm,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical-tsv" => Ok(CorpusFormat::CanonicalTsv),
            "official-dpm" => Ok(CorpusFormat::OfficialDpm),
            other => Err(Error::InvalidArgument(format!(
                "unknown corpus format `{other}` (expected canonical-tsv or official-dpm)"
            ))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::CanonicalTsv => "canonical-tsv",
            CorpusFormat::OfficialDpm => "official-dpm",
        })
    }
}

/// Official graded labels 0 and 1 are non-PCL; 2, 3 and 4 are PCL.
pub fn binarize_official(label: u8) -> bool {
    label >= 2
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<Paragraph>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        CorpusFormat::CanonicalTsv => parse_canonical(&raw, path),
        CorpusFormat::OfficialDpm => parse_official(&raw, path),
    }
}

pub fn parse_canonical(raw: &str, path: &Path) -> Result<Vec<Paragraph>> {
    let mut lines = raw.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.starts_with('#') || l.is_empty() => continue,
            Some((n, l)) => break (n + 1, l),
            None => return Err(Error::malformed(path, 1, "missing header row")),
        }
    };
    let columns: Vec<&str> = header.1.split('\t').collect();
    if columns != CANONICAL_HEADER {
        return Err(Error::malformed(
            path,
            header.0,
            format!("expected header `{}`", CANONICAL_HEADER.join("\\t")),
        ));
    }

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (n, line) in lines {
        let lineno = n + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != CANONICAL_HEADER.len() {
            return Err(Error::malformed(
                path,
                lineno,
                format!("expected 5 columns, found {}", fields.len()),
            ));
        }
        let label = match fields[4].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::malformed(
                    path,
                    lineno,
                    format!("label must be 0 or 1, found `{other}`"),
                ))
            }
        };
        let p = Paragraph::new(
            unescape(fields[0]),
            unescape(fields[1]),
            unescape(fields[2]),
            unescape(fields[3]),
            label,
        )
        .map_err(|e| Error::malformed(path, lineno, e.to_string()))?;
        if !seen.insert(p.id.clone()) {
            return Err(Error::DuplicateId(p.id));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn parse_official(raw: &str, path: &Path) -> Result<Vec<Paragraph>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut in_preamble = true;
    for (n, line) in raw.lines().enumerate() {
        let lineno = n + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if in_preamble {
            // The preamble is free text; data starts at the first 6-column
            // row whose last column is a grade.
            let looks_like_row = fields.len() == 6 && fields[5].trim().parse::<u8>().is_ok();
            if !looks_like_row {
                continue;
            }
            in_preamble = false;
        }
        if line.trim().is_empty() {
            continue;
        }
        if fields.len() != 6 {
            return Err(Error::malformed(
                path,
                lineno,
                format!("expected 6 columns, found {}", fields.len()),
            ));
        }
        let grade: u8 = fields[5].trim().parse().map_err(|_| {
            Error::malformed(path, lineno, format!("non-numeric label `{}`", fields[5]))
        })?;
        if grade > 4 {
            return Err(Error::malformed(
                path,
                lineno,
                format!("label {grade} outside the 0-4 scale"),
            ));
        }
        let p = Paragraph::new(
            fields[0].trim(),
            fields[2].trim(),
            fields[3].trim(),
            fields[4],
            binarize_official(grade),
        )
        .map_err(|e| Error::malformed(path, lineno, e.to_string()))?;
        if !seen.insert(p.id.clone()) {
            return Err(Error::DuplicateId(p.id));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn to_canonical_tsv(corpus: &[Paragraph]) -> String {
    let mut s = CANONICAL_HEADER.join("\t");
    s.push('\n');
    for p in corpus {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            escape(&p.id),
            escape(&p.keyword),
            escape(&p.country),
            escape(&p.text),
            p.label as u8
        ));
    }
    s
}

pub fn write_canonical(path: &Path, corpus: &[Paragraph]) -> Result<()> {
    fs::write(path, to_canonical_tsv(corpus)).map_err(|e| Error::io(path, e))
}

/// Reads `id c1 .. c7` rows (header required).
pub fn load_categories(path: &Path) -> Result<Vec<(String, Categories)>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_categories(&raw, path)
}

pub fn parse_categories(raw: &str, path: &Path) -> Result<Vec<(String, Categories)>> {
    let mut out = Vec::new();
    let mut header_seen = false;
    let mut seen = HashSet::new();
    for (n, line) in raw.lines().enumerate() {
        let lineno = n + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != NUM_CATEGORIES + 1 {
            return Err(Error::malformed(
                path,
                lineno,
                format!("expected 8 columns, found {}", fields.len()),
            ));
        }
        if !header_seen {
            header_seen = true;
            if fields[0] == "id" {
                continue;
            }
        }
        let mut cats = [false; NUM_CATEGORIES];
        for (k, f) in fields[1..].iter().enumerate() {
            cats[k] = match f.trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::malformed(
                        path,
                        lineno,
                        format!("category flag must be 0 or 1, found `{other}`"),
                    ))
                }
            };
        }
        let id = fields[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        out.push((id, cats));
    }
    Ok(out)
}

pub fn categories_tsv(rows: &[(String, Categories)]) -> String {
    let mut s = String::from("id");
    for k in 1..=NUM_CATEGORIES {
        s.push_str(&format!("\tc{k}"));
    }
    s.push('\n');
    for (id, cats) in rows {
        s.push_str(id);
        for &c in cats {
            s.push('\t');
            s.push(if c { '1' } else { '0' });
        }
        s.push('\n');
    }
    s
}

/// Attaches category vectors by id. Unknown ids and categories on
/// non-PCL paragraphs are errors.
pub fn attach_categories(corpus: &mut [Paragraph], rows: &[(String, Categories)]) -> Result<()> {
    let index: std::collections::HashMap<String, usize> = corpus
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id.clone(), i))
        .collect();
    for (id, cats) in rows {
        let &i = index.get(id.as_str()).ok_or_else(|| {
            Error::InvalidParagraph(format!("category row for unknown paragraph `{id}`"))
        })?;
        let p = &mut corpus[i];
        p.categories = Some(*cats);
        p.validate()?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSplit {
    pub train: Vec<Paragraph>,
    pub dev: Vec<Paragraph>,
    pub split_ratio: f64,
    pub seed: u64,
}

/// Number of training paragraphs a split of `n` at `ratio` produces.
pub fn train_size(n: usize, ratio: f64) -> usize {
    (ratio * n as f64).round() as usize
}

pub fn split_corpus(corpus: &[Paragraph], ratio: f64, seed: u64) -> Result<CorpusSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    if corpus.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "cannot split a corpus of {} paragraph(s)",
            corpus.len()
        )));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut seed::rng(seed, Stream::Split, 0));
    let cut = train_size(corpus.len(), ratio);
    let pick = |idx: &[usize]| idx.iter().map(|&i| corpus[i].clone()).collect::<Vec<_>>();
    Ok(CorpusSplit {
        train: pick(&order[..cut]),
        dev: pick(&order[cut..]),
        split_ratio: ratio,
        seed,
    })
}

/// Splits by an explicit list of dev ids (the official dev file).
pub fn split_by_ids(corpus: &[Paragraph], dev_ids: &[String]) -> Result<CorpusSplit> {
    let wanted: HashSet<&str> = dev_ids.iter().map(String::as_str).collect();
    let known: HashSet<&str> = corpus.iter().map(|p| p.id.as_str()).collect();
    let unknown: Vec<String> = dev_ids
        .iter()
        .filter(|id| !known.contains(id.as_str()))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "dev id list names {} unknown paragraph(s), first `{}`",
            unknown.len(),
            unknown[0]
        )));
    }
    let (dev, train): (Vec<_>, Vec<_>) = corpus
        .iter()
        .cloned()
        .partition(|p| wanted.contains(p.id.as_str()));
    let ratio = train.len() as f64 / corpus.len().max(1) as f64;
    Ok(CorpusSplit {
        train,
        dev,
        split_ratio: ratio,
        seed: 0,
    })
}

/// One id per line; a CSV row contributes its first column. A header line
/// starting with `par_id` or `id` is skipped.
pub fn parse_id_list(raw: &str) -> Vec<String> {
    raw.lines()
        .map(|l| l.split([',', '\t']).next().unwrap_or("").trim())
        .filter(|id| !id.is_empty() && *id != "par_id" && *id != "id" && !id.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub positives: usize,
    pub negatives: usize,
}

pub fn class_counts(corpus: &[Paragraph]) -> ClassCounts {
    let positives = corpus.iter().filter(|p| p.label).count();
    ClassCounts {
        positives,
        negatives: corpus.len() - positives,
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(id: &str, label: bool) -> Paragraph {
        Paragraph::new(id, "homeless", "us", format!("text of {id}"), label).unwrap()
    }

    #[test]
    fn canonical_row_maps_fields() {
        let raw = "id\tkeyword\tcountry\ttext\tlabel\np1\thomeless\tus\tSome text\t1\n";
        let c = parse_canonical(raw, Path::new("x.tsv")).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].id, "p1");
        assert_eq!(c[0].keyword, "homeless");
        assert_eq!(c[0].country, "us");
        assert_eq!(c[0].text, "Some text");
        assert!(c[0].label);
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let raw = "id\tkeyword\tcountry\ttext\tlabel\np1\tk\tus\tok\t1\np2\tk\tus\tbad\n";
        let err = parse_canonical(raw, Path::new("x.tsv")).unwrap_err();
        assert!(err.to_string().contains("x.tsv:3"), "{err}");

        let raw = "id\tkeyword\tcountry\ttext\tlabel\np1\tk\tus\tok\tyes\n";
        let err = parse_canonical(raw, Path::new("x.tsv")).unwrap_err();
        assert!(err.to_string().contains(":2"), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let raw = "id\tkeyword\tcountry\ttext\tlabel\np1\tk\tus\ta\t1\np1\tk\tus\tb\t0\n";
        assert!(matches!(
            parse_canonical(raw, Path::new("x")),
            Err(Error::DuplicateId(id)) if id == "p1"
        ));
    }

    #[test]
    fn empty_text_rejected() {
        assert!(Paragraph::new("a", "k", "us", "   ", false).is_err());
    }

    #[test]
    fn categories_require_positive_label() {
        let neg = p("a", false);
        assert!(neg.with_categories([true; 7]).is_err());
        assert!(p("b", true)
            .with_categories([false, true, false, false, false, false, false])
            .is_ok());
    }

    #[test]
    fn official_layout_binarizes_grades() {
        let raw = "Disclaimer line one\n\nsecond line of preamble\n-----\n\
                   1\t@@24942188\thopeless\tph\tWe're living in times of absolute insanity\t0\n\
                   2\t@@21968160\tmigrant\tgh\tIn Libya today\t1\n\
                   3\t@@16584954\timmigrant\tie\tWhite House press secretary\t2\n\
                   4\t@@7811231\tdisabled\tnz\tGreat news for the blind\t4\n";
        let c = parse_official(raw, Path::new("dpm.tsv")).unwrap();
        let labels: Vec<bool> = c.iter().map(|p| p.label).collect();
        assert_eq!(labels, vec![false, false, true, true]);
        assert_eq!(c[2].keyword, "immigrant");
        assert_eq!(c[2].country, "ie");
    }

    #[test]
    fn official_non_numeric_label_after_data_start() {
        let raw = "1\ta\tk\tus\ttext\t0\n2\tb\tk\tus\ttext\tx\n";
        let err = parse_official(raw, Path::new("dpm.tsv")).unwrap_err();
        assert!(err.to_string().contains("dpm.tsv:2"), "{err}");
    }

    #[test]
    fn binarization_threshold() {
        assert!(binarize_official(2));
        assert!(!binarize_official(1));
        for a in 0..=4u8 {
            for b in 0..=a {
                assert!(binarize_official(a) >= binarize_official(b));
            }
        }
    }

    #[test]
    fn split_counts_and_determinism() {
        let corpus: Vec<_> = (0..10).map(|i| p(&format!("p{i}"), i % 3 == 0)).collect();
        let a = split_corpus(&corpus, 0.8, 7).unwrap();
        assert_eq!((a.train.len(), a.dev.len()), (8, 2));
        let b = split_corpus(&corpus, 0.8, 7).unwrap();
        let ids = |v: &[Paragraph]| v.iter().map(|p| p.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&a.train), ids(&b.train));
        assert_eq!(ids(&a.dev), ids(&b.dev));
    }

    #[test]
    fn full_dataset_split_sizes() {
        // 0.8 * 10637 = 8509.6
        assert_eq!(train_size(10_637, 0.8), 8_510);
        assert_eq!(10_637 - train_size(10_637, 0.8), 2_127);
    }

    #[test]
    fn split_rejects_bad_ratio() {
        let corpus: Vec<_> = (0..4).map(|i| p(&format!("p{i}"), false)).collect();
        assert!(split_corpus(&corpus, 0.0, 1).is_err());
        assert!(split_corpus(&corpus, 1.0, 1).is_err());
        assert!(split_corpus(&corpus[..1], 0.5, 1).is_err());
    }

    #[test]
    fn class_count_tallies() {
        assert_eq!(
            class_counts(&[p("a", true), p("b", false), p("c", false)]),
            ClassCounts {
                positives: 1,
                negatives: 2
            }
        );
        assert_eq!(class_counts(&[]), ClassCounts::default());
    }

    #[test]
    fn split_by_ids_uses_list() {
        let corpus: Vec<_> = (0..5).map(|i| p(&format!("p{i}"), false)).collect();
        let s = split_by_ids(&corpus, &parse_id_list("par_id,label\np1,\"[0]\"\np3,x\n")).unwrap();
        assert_eq!(
            s.dev.iter().map(|p| p.id.as_str()).collect::<Vec<_>>(),
            ["p1", "p3"]
        );
        assert_eq!(s.train.len(), 3);
        assert!(split_by_ids(&corpus, &["nope".to_string()]).is_err());
    }

    #[test]
    fn category_file_round_trip() {
        let rows = vec![
            (
                "a".to_string(),
                [true, false, false, true, false, false, false],
            ),
            ("b".to_string(), [false; 7]),
        ];
        let back = parse_categories(&categories_tsv(&rows), Path::new("c")).unwrap();
        assert_eq!(back, rows);
        let mut corpus = vec![p("a", true), p("b", false)];
        assert!(attach_categories(&mut corpus, &rows).is_err());
        attach_categories(&mut corpus[..1], &rows[..1]).unwrap();
        assert!(corpus[0].categories.is_some());
    }

    fn arb_paragraph() -> impl Strategy<Value = Paragraph> {
        (
            "[a-z0-9_]{1,8}",
            "[a-z ]{0,10}",
            "[a-z]{0,3}",
            "[ -~\t\n\\\\é]{0,40}[a-z]",
            any::<bool>(),
        )
            .prop_map(|(id, k, c, t, l)| Paragraph::new(id, k, c, t, l).unwrap())
    }

    proptest! {
        #[test]
        fn canonical_round_trip(mut corpus in proptest::collection::vec(arb_paragraph(), 0..12)) {
            let mut seen = HashSet::new();
            corpus.retain(|p| seen.insert(p.id.clone()));
            let back = parse_canonical(&to_canonical_tsv(&corpus), Path::new("rt")).unwrap();
            prop_assert_eq!(back, corpus);
        }

        #[test]
        fn split_partitions(n in 2usize..60, ratio in 0.05f64..0.95, seed in any::<u64>()) {
            let corpus: Vec<_> = (0..n).map(|i| p(&format!("p{i}"), i % 4 == 0)).collect();
            let s = split_corpus(&corpus, ratio, seed).unwrap();
            prop_assert_eq!(s.train.len(), train_size(n, ratio));
            prop_assert_eq!(s.train.len() + s.dev.len(), n);
            let train: HashSet<_> = s.train.iter().map(|p| &p.id).collect();
            prop_assert!(s.dev.iter().all(|p| !train.contains(&p.id)));
        }
    }
}
