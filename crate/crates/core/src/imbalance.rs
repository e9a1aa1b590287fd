//! Class-imbalance handling: repetition oversampling, negative
//! undersampling and class-weight derivation.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::corpus::{class_counts, ClassCounts, Paragraph};
use crate::error::{Error, Result};
use crate::seed::{self, Stream};
use crate::textprep::ClassWeights;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    None,
    Oversample,
    Undersample,
    ClassWeights,
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Strategy::None),
            "oversample" => Ok(Strategy::Oversample),
            "undersample" => Ok(Strategy::Undersample),
            "class_weights" => Ok(Strategy::ClassWeights),
            other => Err(Error::InvalidArgument(format!(
                "unknown balance strategy `{other}` (none, oversample, undersample, class_weights)"
            ))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::None => "none",
            Strategy::Oversample => "oversample",
            Strategy::Undersample => "undersample",
            Strategy::ClassWeights => "class_weights",
        })
    }
}

/// A `POS:NEG` ratio such as `2:1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio {
    pub positive: u64,
    pub negative: u64,
}

impl Ratio {
    pub fn new(positive: u64, negative: u64) -> Result<Self> {
        if positive == 0 || negative == 0 {
            return Err(Error::InvalidArgument(format!(
                "ratio parts must be positive, got {positive}:{negative}"
            )));
        }
        Ok(Ratio { positive, negative })
    }

    /// Negatives needed alongside `positives`, rounded down.
    pub fn negatives_for(&self, positives: usize) -> usize {
        (positives as u64 * self.negative / self.positive) as usize
    }
}

impl FromStr for Ratio {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("ratio must look like `2:1`, got `{s}`"));
        let (p, n) = s.split_once(':').ok_or_else(bad)?;
        Ratio::new(
            p.trim().parse().map_err(|_| bad())?,
            n.trim().parse().map_err(|_| bad())?,
        )
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.positive, self.negative)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BalanceConfig {
    pub strategy: Strategy,
    /// Final multiplicity of each positive under oversampling.
    pub pos_repeat_factor: usize,
    pub target_ratio: Ratio,
    pub weights: ClassWeights,
    pub seed: u64,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        BalanceConfig {
            strategy: Strategy::ClassWeights,
            pos_repeat_factor: 9,
            target_ratio: Ratio {
                positive: 2,
                negative: 1,
            },
            weights: ClassWeights {
                positive: 10.0,
                negative: 1.0,
            },
            seed: 0,
        }
    }
}

impl BalanceConfig {
    pub fn none() -> Self {
        BalanceConfig {
            strategy: Strategy::None,
            weights: ClassWeights::UNIT,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pos_repeat_factor == 0 {
            return Err(Error::Imbalance(
                "pos_repeat_factor must be at least 1".into(),
            ));
        }
        ClassWeights::new(self.weights.positive, self.weights.negative)?;
        Ok(())
    }

    /// Training data and per-class loss weights under this strategy.
    /// Weights other than (1, 1) apply only to `class_weights`.
    pub fn apply(&self, corpus: &[Paragraph]) -> Result<(Vec<Paragraph>, ClassWeights)> {
        self.validate()?;
        Ok(match self.strategy {
            Strategy::None => (corpus.to_vec(), ClassWeights::UNIT),
            Strategy::Oversample => (
                oversample(corpus, self.pos_repeat_factor, self.seed)?,
                ClassWeights::UNIT,
            ),
            Strategy::Undersample => (
                undersample(corpus, self.target_ratio, self.seed)?.paragraphs,
                ClassWeights::UNIT,
            ),
            Strategy::ClassWeights => (corpus.to_vec(), self.weights),
        })
    }
}

/// Every positive appears `factor` times in total, negatives once, and the
/// result is shuffled under `seed`.
pub fn oversample(corpus: &[Paragraph], factor: usize, seed: u64) -> Result<Vec<Paragraph>> {
    if factor == 0 {
        return Err(Error::Imbalance(
            "oversampling factor must be at least 1".into(),
        ));
    }
    let mut out =
        Vec::with_capacity(corpus.len() + corpus.iter().filter(|p| p.label).count() * (factor - 1));
    for p in corpus {
        let copies = if p.label { factor } else { 1 };
        out.extend(std::iter::repeat(p).take(copies).cloned());
    }
    out.shuffle(&mut seed::rng(seed, Stream::Oversample, 0));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Undersampled {
    pub paragraphs: Vec<Paragraph>,
    pub requested_negatives: usize,
    pub achieved: ClassCounts,
}

impl Undersampled {
    /// False when the corpus had fewer negatives than the ratio asked for.
    pub fn met_target(&self) -> bool {
        self.achieved.negatives == self.requested_negatives
    }
}

/// Keeps all positives and draws `floor(pos · neg/pos)` negatives without
/// replacement. Original relative order is kept, then the result is
/// shuffled under `seed`.
pub fn undersample(corpus: &[Paragraph], target_ratio: Ratio, seed: u64) -> Result<Undersampled> {
    let counts = class_counts(corpus);
    if counts.positives == 0 || counts.negatives == 0 {
        return Err(Error::Imbalance(format!(
            "undersampling needs both classes, got {} positive / {} negative",
            counts.positives, counts.negatives
        )));
    }
    let requested = target_ratio.negatives_for(counts.positives);
    let mut rng = seed::rng(seed, Stream::Undersample, 0);
    let mut negatives: Vec<usize> = corpus
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.label)
        .map(|(i, _)| i)
        .collect();
    negatives.shuffle(&mut rng);
    negatives.truncate(requested);
    let mut keep = vec![false; corpus.len()];
    negatives.iter().for_each(|&i| keep[i] = true);
    let mut out: Vec<Paragraph> = corpus
        .iter()
        .enumerate()
        .filter(|(i, p)| p.label || keep[*i])
        .map(|(_, p)| p.clone())
        .collect();
    out.shuffle(&mut rng);
    let achieved = class_counts(&out);
    Ok(Undersampled {
        paragraphs: out,
        requested_negatives: requested,
        achieved,
    })
}

/// `(round(neg / pos), 1)`, with the positive weight floored at 1.
pub fn derive_class_weights(corpus: &[Paragraph]) -> Result<ClassWeights> {
    let c = class_counts(corpus);
    if c.positives == 0 || c.negatives == 0 {
        return Err(Error::Imbalance(format!(
            "class weights need both classes, got {} positive / {} negative",
            c.positives, c.negatives
        )));
    }
    let ratio = (c.negatives as f64 / c.positives as f64).round().max(1.0);
    ClassWeights::new(ratio, 1.0)
}
