//! Seeded synthetic corpora and embeddings shaped like the real data:
//! short news-style paragraphs, roughly one positive per ten negatives,
//! positives leaning on a patronizing vocabulary.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{Categories, Paragraph, NUM_CATEGORIES};
use crate::seed::{self, Stream};

pub const KEYWORDS: [&str; 10] = [
    "disabled",
    "homeless",
    "hopeless",
    "immigrant",
    "in-need",
    "migrant",
    "poor-families",
    "refugee",
    "vulnerable",
    "women",
];

pub const COUNTRIES: [&str; 8] = ["au", "ca", "gb", "ie", "in", "ng", "us", "za"];

/// Words that mark positives in the synthetic data.
pub const PCL_WORDS: [&str; 24] = [
    "unfortunate",
    "helpless",
    "hearts",
    "charity",
    "deserve",
    "blessed",
    "giving",
    "kindness",
    "rescue",
    "saviour",
    "plight",
    "suffering",
    "brighter",
    "hope",
    "generous",
    "donate",
    "smile",
    "touching",
    "struggle",
    "less",
    "fortunate",
    "lend",
    "hand",
    "poor",
];

pub const NEUTRAL_WORDS: [&str; 40] = [
    "council",
    "report",
    "minister",
    "housing",
    "policy",
    "budget",
    "city",
    "court",
    "police",
    "school",
    "data",
    "official",
    "said",
    "week",
    "year",
    "region",
    "figures",
    "programme",
    "services",
    "local",
    "government",
    "statement",
    "survey",
    "rate",
    "percent",
    "agency",
    "health",
    "staff",
    "workers",
    "plan",
    "meeting",
    "board",
    "public",
    "funding",
    "project",
    "office",
    "new",
    "state",
    "national",
    "group",
];

/// `n` paragraphs with `n / 11` positives (200 gives 18). Positives carry
/// category annotations with at least one category set.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<Paragraph> {
    let mut rng = seed::rng(seed, Stream::Synthetic, 0);
    let positives = n / 11;
    let mut labels: Vec<bool> = (0..n).map(|i| i < positives).collect();
    labels.shuffle(&mut rng);
    labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let len = rng.gen_range(8..=30);
            let pcl_share = if label { 0.4 } else { 0.03 };
            let words: Vec<&str> = (0..len)
                .map(|_| {
                    if rng.gen_bool(pcl_share) {
                        *PCL_WORDS.choose(&mut rng).expect("non-empty")
                    } else {
                        *NEUTRAL_WORDS.choose(&mut rng).expect("non-empty")
                    }
                })
                .collect();
            let keyword = KEYWORDS[rng.gen_range(0..KEYWORDS.len())];
            let country = COUNTRIES[rng.gen_range(0..COUNTRIES.len())];
            let mut text = words.join(" ");
            if let Some(first) = text.get_mut(0..1) {
                first.make_ascii_uppercase();
            }
            text.push('.');
            let p = Paragraph::new(format!("syn{:05}", i + 1), keyword, country, text, label)
                .expect("valid paragraph");
            if label {
                let mut cats: Categories = [false; NUM_CATEGORIES];
                for c in cats.iter_mut() {
                    *c = rng.gen_bool(0.3);
                }
                cats[rng.gen_range(0..NUM_CATEGORIES)] = true;
                p.with_categories(cats).expect("positive with categories")
            } else {
                p
            }
        })
        .collect()
}

/// 32 short paragraphs, 16 per class, where one marker word decides the
/// label.
pub fn separable_set(seed: u64) -> Vec<Paragraph> {
    let mut rng = seed::rng(seed, Stream::Synthetic, 1);
    (0..32)
        .map(|i| {
            let label = i % 2 == 0;
            let marker = if label { "charity" } else { "council" };
            let mut words: Vec<&str> = (0..rng.gen_range(3..=8))
                .map(|_| {
                    *["report", "city", "week", "local", "plan"]
                        .choose(&mut rng)
                        .expect("non-empty")
                })
                .collect();
            let at = rng.gen_range(0..=words.len());
            words.insert(at, marker);
            Paragraph::new(
                format!("sep{:02}", i + 1),
                "poor-families",
                "gb",
                words.join(" "),
                label,
            )
            .expect("valid paragraph")
        })
        .collect()
}

/// Every synthetic word, patronizing words first.
pub fn synthetic_words() -> Vec<&'static str> {
    PCL_WORDS
        .iter()
        .chain(NEUTRAL_WORDS.iter())
        .copied()
        .collect()
}

/// GloVe-format text (`token v1 .. vd` per line) for `tokens`. The first
/// coordinate separates patronizing from neutral words; the rest is noise.
pub fn synthetic_embeddings(tokens: &[&str], dim: usize, seed: u64) -> String {
    let mut rng = seed::rng(seed, Stream::Synthetic, 2);
    let mut out = String::new();
    for t in tokens {
        let sign = if PCL_WORDS.contains(t) { 1.0 } else { -1.0 };
        let values: Vec<String> = (0..dim)
            .map(|j| {
                let noise: f64 = rng.gen_range(-0.3..0.3);
                let v = if j == 0 { 0.5 * sign + noise } else { noise };
                format!("{v:.6}")
            })
            .collect();
        out.push_str(t);
        out.push(' ');
        out.push_str(&values.join(" "));
        out.push('\n');
    }
    out
}
