//! Four-vote majority ensemble: two ANN runs and two LSTM runs.

use std::collections::HashSet;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::thread;

use crate::corpus::Paragraph;
use crate::error::{Error, Result};
use crate::imbalance::BalanceConfig;
use crate::models::{self, ModelSpec, TrainedModel};
use crate::textprep::EmbeddingTable;

pub const VOTE_COLUMNS: [&str; 4] = ["ann1", "ann2", "lstm1", "lstm2"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieRule {
    #[default]
    Positive,
    Negative,
}

impl FromStr for TieRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(TieRule::Positive),
            "negative" => Ok(TieRule::Negative),
            other => Err(Error::InvalidArgument(format!(
                "unknown tie rule `{other}` (positive, negative)"
            ))),
        }
    }
}

impl fmt::Display for TieRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieRule::Positive => "positive",
            TieRule::Negative => "negative",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoteMatrix {
    ids: Vec<String>,
    votes: Vec<[bool; 4]>,
}

impl VoteMatrix {
    /// Rows of exactly four votes, one per paragraph id.
    pub fn new(ids: Vec<String>, rows: &[Vec<bool>]) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::Ensemble(format!(
                "{} ids for {} vote rows",
                ids.len(),
                rows.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::DuplicateId(dup.clone()));
        }
        let votes = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                <[bool; 4]>::try_from(r.as_slice()).map_err(|_| {
                    Error::Ensemble(format!("row {} has {} votes, expected 4", ids[i], r.len()))
                })
            })
            .collect::<Result<_>>()?;
        Ok(VoteMatrix { ids, votes })
    }

    /// Builds the matrix from one label vector per voter.
    pub fn from_columns(ids: Vec<String>, columns: &[Vec<bool>]) -> Result<Self> {
        if columns.len() != 4 {
            return Err(Error::Ensemble(format!(
                "expected 4 vote columns, got {}",
                columns.len()
            )));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != ids.len()) {
            return Err(Error::Ensemble(format!(
                "vote column has {} rows for {} ids",
                c.len(),
                ids.len()
            )));
        }
        let rows: Vec<Vec<bool>> = (0..ids.len())
            .map(|i| columns.iter().map(|c| c[i]).collect())
            .collect();
        VoteMatrix::new(ids, &rows)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn votes(&self) -> &[[bool; 4]] {
        &self.votes
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Rows split 2-2.
    pub fn ties(&self) -> usize {
        self.votes.iter().filter(|r| positives(r) == 2).count()
    }

    /// `id ann1 ann2 lstm1 lstm2 final` with 0/1 cells.
    pub fn to_tsv(&self, final_labels: &[bool]) -> String {
        let mut s = format!("id\t{}\tfinal\n", VOTE_COLUMNS.join("\t"));
        for ((id, r), f) in self.ids.iter().zip(&self.votes).zip(final_labels) {
            let cells: Vec<&str> = r.iter().map(|&v| if v { "1" } else { "0" }).collect();
            let _ = writeln!(s, "{id}\t{}\t{}", cells.join("\t"), *f as u8);
        }
        s
    }
}

fn positives(row: &[bool; 4]) -> usize {
    row.iter().filter(|&&v| v).count()
}

/// 1 with at least three positive votes, 0 with at most one; a 2-2 split
/// follows `tie_rule`.
pub fn vote(row: &[bool; 4], tie_rule: TieRule) -> bool {
    match positives(row) {
        0 | 1 => false,
        2 => tie_rule == TieRule::Positive,
        _ => true,
    }
}

pub fn majority_vote(votes: &VoteMatrix, tie_rule: TieRule) -> Vec<bool> {
    votes.votes.iter().map(|r| vote(r, tie_rule)).collect()
}

#[derive(Clone, Debug)]
pub struct MemberRun {
    pub name: &'static str,
    pub model: TrainedModel,
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct EnsembleOutput {
    pub members: Vec<MemberRun>,
    pub votes: VoteMatrix,
    pub labels: Vec<bool>,
    pub tie_rule: TieRule,
}

impl EnsembleOutput {
    pub fn ties(&self) -> usize {
        self.votes.ties()
    }

    pub fn votes_tsv(&self) -> String {
        self.votes.to_tsv(&self.labels)
    }
}

/// Trains the four members concurrently, thresholds each one's scores on
/// `eval` with its own cutoff and votes. Each member's spec seed also
/// seeds its balancing draw. Seeds need not differ.
pub fn run_members(
    specs: [ModelSpec; 4],
    train: &[Paragraph],
    eval: &[Paragraph],
    balance: &BalanceConfig,
    embeddings: &EmbeddingTable,
    tie_rule: TieRule,
) -> Result<EnsembleOutput> {
    if let Some(s) = specs.iter().find(|s| s.output_dim != 1) {
        return Err(Error::Ensemble(format!(
            "voting needs binary members, {} has output_dim {}",
            s.kind, s.output_dim
        )));
    }
    let results: Vec<Result<MemberRun>> = thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .zip(VOTE_COLUMNS)
            .map(|(spec, name)| {
                scope.spawn(move || -> Result<MemberRun> {
                    let run_balance = BalanceConfig {
                        seed: spec.seed,
                        ..*balance
                    };
                    let model = models::build(spec, embeddings)?;
                    let model = models::train(model, train, &run_balance)?;
                    let scores = model.predict(eval)?.into_data();
                    let labels = models::predict_labels(&scores, model.spec.threshold);
                    Ok(MemberRun {
                        name,
                        model,
                        scores,
                        labels,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Ensemble("training thread panicked".into())))
            })
            .collect()
    });
    let mut members = Vec::with_capacity(4);
    for (r, name) in results.into_iter().zip(VOTE_COLUMNS) {
        members.push(r.map_err(|e| Error::Ensemble(format!("run {name} failed: {e}")))?);
    }
    let columns: Vec<Vec<bool>> = members.iter().map(|m| m.labels.clone()).collect();
    let votes = VoteMatrix::from_columns(eval.iter().map(|p| p.id.clone()).collect(), &columns)?;
    let labels = majority_vote(&votes, tie_rule);
    Ok(EnsembleOutput {
        members,
        votes,
        labels,
        tie_rule,
    })
}

/// Two runs of `spec_ann` and two of `spec_lstm`, with the four seeds in
/// column order. The seeds must be distinct.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble(
    spec_ann: &ModelSpec,
    spec_lstm: &ModelSpec,
    train: &[Paragraph],
    eval: &[Paragraph],
    balance: &BalanceConfig,
    embeddings: &EmbeddingTable,
    seeds: [u64; 4],
    tie_rule: TieRule,
) -> Result<EnsembleOutput> {
    let distinct: HashSet<u64> = seeds.iter().copied().collect();
    if distinct.len() != 4 {
        return Err(Error::Ensemble(format!(
            "the four run seeds must be distinct, got {seeds:?}"
        )));
    }
    if spec_ann.kind == models::ModelKind::Lstm || spec_lstm.kind != models::ModelKind::Lstm {
        return Err(Error::Ensemble(format!(
            "expected an ANN spec and an LSTM spec, got {} and {}",
            spec_ann.kind, spec_lstm.kind
        )));
    }
    let with_seed = |s: &ModelSpec, seed| ModelSpec { seed, ..s.clone() };
    run_members(
        [
            with_seed(spec_ann, seeds[0]),
            with_seed(spec_ann, seeds[1]),
            with_seed(spec_lstm, seeds[2]),
            with_seed(spec_lstm, seeds[3]),
        ],
        train,
        eval,
        balance,
        embeddings,
        tie_rule,
    )
}
