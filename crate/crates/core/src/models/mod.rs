//! The three classifier architectures, their training loop, thresholded
//! prediction and the model file format.
//!
//! Every architecture is described as a flat list of [`Layer`]s and the
//! forward pass walks that list, so [`ModelSpec::architecture`] is the
//! single source of truth for wiring.

mod io;
mod spec;
mod train;

use std::collections::BTreeMap;

pub use io::{load_model, save_model, MODEL_FORMAT_VERSION, MODEL_MAGIC};
pub use spec::{Layer, ModelKind, ModelSpec, PROTOCOL_GRID_BATCH_SIZES, PROTOCOL_GRID_EPOCHS};
pub use train::{train, train_with_observer, validation_size};

use crate::corpus::Paragraph;
use crate::error::{Error, Result};
use crate::nncore::{
    gradient_check, init, GradCheck, Graph, LstmCellParams, ParamStore, Tensor, Var,
};
use crate::seed::{self, Stream};
use crate::textprep::{ClassWeights, EmbeddingTable, EncodedBatch, Encoder, Target, Vocabulary};

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub params: ParamStore,
    pub vocab: Vocabulary,
    pub vocab_fingerprint: String,
    pub history: Vec<EpochStats>,
    /// Free-form provenance written into the model file (config hash, ...).
    pub metadata: BTreeMap<String, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    Train { dropout_seed: u64 },
    Infer,
}

pub(crate) fn embedding_param() -> &'static str {
    "embedding.table"
}

fn dense_names(k: usize) -> (String, String) {
    (format!("dense{k}.kernel"), format!("dense{k}.bias"))
}

const LSTM_KERNEL: &str = "lstm.kernel";
const LSTM_RECURRENT: &str = "lstm.recurrent";
const LSTM_BIAS: &str = "lstm.bias";

/// Wires an untrained model for `spec`, with embedding rows copied from
/// `embeddings`.
pub fn build(spec: &ModelSpec, embeddings: &EmbeddingTable) -> Result<TrainedModel> {
    spec.validate()?;
    if spec.embedding_dim != embeddings.dim {
        return Err(Error::Model(format!(
            "spec embedding_dim {} does not match the {}-d embedding table",
            spec.embedding_dim, embeddings.dim
        )));
    }
    let mut rng = seed::rng(spec.seed, Stream::Init, 0);
    let mut params = ParamStore::new();
    let mut width = 0;
    let mut dense_k = 0;
    for layer in spec.architecture() {
        match layer {
            Layer::Embedding { dim, trainable } => {
                params.insert(embedding_param(), embeddings.vectors.clone(), trainable)?;
                width = dim;
            }
            Layer::GlobalAveragePool | Layer::GlobalMaxPool | Layer::Dropout { .. } => {}
            Layer::Lstm { units } => {
                let cell = LstmCellParams::init(width, units, &mut rng);
                params.insert(LSTM_KERNEL, cell.kernel, true)?;
                params.insert(LSTM_RECURRENT, cell.recurrent, true)?;
                params.insert(LSTM_BIAS, cell.bias, true)?;
                width = units;
            }
            Layer::Dense { units, .. } => {
                let (kn, bn) = dense_names(dense_k);
                params.insert(kn, init::glorot_uniform(width, units, &mut rng), true)?;
                params.insert(bn, Tensor::zeros(vec![units]), true)?;
                width = units;
                dense_k += 1;
            }
        }
    }
    Ok(TrainedModel {
        spec: spec.clone(),
        params,
        vocab: embeddings.vocab.clone(),
        vocab_fingerprint: embeddings.vocab.fingerprint(),
        history: Vec::new(),
        metadata: BTreeMap::new(),
    })
}

impl TrainedModel {
    pub fn target(&self) -> Target {
        if self.spec.output_dim == 1 {
            Target::Binary
        } else {
            Target::Categories
        }
    }

    pub fn encoder(&self) -> Encoder<'_> {
        Encoder::new(&self.vocab, self.spec.max_len)
            .remove_stopwords(self.spec.remove_stopwords)
            .target(self.target())
    }

    pub fn num_parameters(&self) -> usize {
        self.params.num_elements()
    }

    /// Records the forward pass for `batch` and returns the probability node `[B, output_dim]`.
    pub(crate) fn forward(
        &self,
        g: &mut Graph<'_>,
        batch: &EncodedBatch,
        mode: Mode,
    ) -> Result<Var> {
        forward_spec(&self.spec, g, batch, mode)
    }

    /// Finite-difference check of the weighted loss on `batch`. Dropout is
    /// off unless `dropout_seed` fixes a mask.
    pub fn check_gradients(
        &mut self,
        batch: &EncodedBatch,
        eps: f64,
        max_per_param: usize,
        dropout_seed: Option<u64>,
    ) -> Result<GradCheck> {
        let spec = self.spec.clone();
        let mode = match dropout_seed {
            Some(dropout_seed) => Mode::Train { dropout_seed },
            None => Mode::Infer,
        };
        gradient_check(&mut self.params, eps, max_per_param, |g| {
            let p = forward_spec(&spec, g, batch, mode)?;
            g.weighted_bce(p, &batch.labels, &batch.weights)
        })
    }

    /// Mean weighted BCE of `batch` in inference mode.
    pub fn loss(&self, batch: &EncodedBatch) -> Result<f64> {
        let mut g = Graph::new(&self.params);
        let p = self.forward(&mut g, &batch.trimmed(), Mode::Infer)?;
        let l = g.weighted_bce(p, &batch.labels, &batch.weights)?;
        Ok(g.value(l).item())
    }

    /// Probabilities `[N, output_dim]` in inference mode (dropout off).
    /// `vocab` must be the vocabulary the model was built with.
    pub fn predict_scores(&self, paragraphs: &[Paragraph], vocab: &Vocabulary) -> Result<Tensor> {
        let found = vocab.fingerprint();
        if found != self.vocab_fingerprint {
            return Err(Error::VocabMismatch {
                expected: self.vocab_fingerprint.clone(),
                found,
            });
        }
        // Labels are irrelevant here, so encode against the binary target.
        let encoded = self
            .encoder()
            .target(Target::Binary)
            .encode(paragraphs, ClassWeights::UNIT)?;
        self.predict_encoded(&encoded)
    }

    /// [`TrainedModel::predict_scores`] with the model's own vocabulary.
    pub fn predict(&self, paragraphs: &[Paragraph]) -> Result<Tensor> {
        self.predict_scores(paragraphs, &self.vocab)
    }

    pub fn predict_encoded(&self, encoded: &EncodedBatch) -> Result<Tensor> {
        let k = self.spec.output_dim;
        let mut out = Vec::with_capacity(encoded.len() * k);
        let rows: Vec<usize> = (0..encoded.len()).collect();
        for chunk in rows.chunks(self.spec.batch_size.max(1)) {
            let batch = encoded.select(chunk).trimmed();
            let mut g = Graph::new(&self.params);
            let p = self.forward(&mut g, &batch, Mode::Infer)?;
            out.extend_from_slice(g.value(p).data());
        }
        Tensor::new(vec![encoded.len(), k], out)
    }

    /// Thresholds scores with the spec's cutoff.
    pub fn predict_labels(&self, scores: &Tensor) -> Vec<bool> {
        predict_labels(scores.data(), self.spec.threshold)
    }
}

fn forward_spec(
    spec: &ModelSpec,
    g: &mut Graph<'_>,
    batch: &EncodedBatch,
    mode: Mode,
) -> Result<Var> {
    let mask = &batch.mask;
    let mut cur: Option<Var> = None;
    let mut dense_k = 0;
    let training = matches!(mode, Mode::Train { .. });
    let dropout_seed = match mode {
        Mode::Train { dropout_seed } => dropout_seed,
        Mode::Infer => 0,
    };
    let input = |cur: Option<Var>| {
        cur.ok_or_else(|| Error::Model("architecture must start with an embedding".into()))
    };
    for layer in spec.architecture() {
        cur = Some(match layer {
            Layer::Embedding { .. } => {
                let table = g.param_named(embedding_param())?;
                g.embedding(table, &batch.token_ids, mask)?
            }
            Layer::GlobalAveragePool => g.global_average_pool(input(cur)?, mask)?,
            Layer::GlobalMaxPool => g.global_max_pool(input(cur)?, mask)?,
            Layer::Lstm { .. } => {
                let (k, u, b) = (
                    g.param_named(LSTM_KERNEL)?,
                    g.param_named(LSTM_RECURRENT)?,
                    g.param_named(LSTM_BIAS)?,
                );
                g.lstm(input(cur)?, mask, k, u, b)?
            }
            Layer::Dropout { rate } => g.dropout(input(cur)?, rate, training, dropout_seed)?,
            Layer::Dense { activation, .. } => {
                let (kn, bn) = dense_names(dense_k);
                dense_k += 1;
                let (w, b) = (g.param_named(&kn)?, g.param_named(&bn)?);
                g.dense(input(cur)?, w, b, activation)?
            }
        });
    }
    input(cur)
}

/// `score >= threshold`, element-wise (so column-wise for multi-label rows).
pub fn predict_labels(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|&s| s >= threshold).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::Activation;
    use crate::textprep::{parse_embeddings, Vocabulary};
    use std::path::Path;

    pub(crate) fn table(dim: usize) -> EmbeddingTable {
        let vocab = Vocabulary::from_tokens(["good", "bad", "poor", "help"]).unwrap();
        let raw: String = ["good", "bad", "poor"]
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let v: Vec<String> = (0..dim)
                    .map(|j| format!("{}", 0.1 * (i as f64 + 1.0) - 0.05 * j as f64))
                    .collect();
                format!("{t} {}\n", v.join(" "))
            })
            .collect();
        parse_embeddings(&raw, Path::new("t"), &vocab, 1).unwrap()
    }

    #[test]
    fn architecture_fidelity() {
        use Activation::*;
        let ann = ModelSpec::new(ModelKind::AnnBaseline, 8).architecture();
        assert_eq!(
            ann,
            vec![
                Layer::Embedding {
                    dim: 8,
                    trainable: true
                },
                Layer::GlobalAveragePool,
                Layer::Dense {
                    units: 64,
                    activation: Relu
                },
                Layer::Dense {
                    units: 1,
                    activation: Sigmoid
                },
            ]
        );
        let deep = ModelSpec::new(ModelKind::AnnDeep, 8).architecture();
        let acts: Vec<_> = deep
            .iter()
            .filter_map(|l| match l {
                Layer::Dense { activation, .. } => Some(*activation),
                _ => Option::None,
            })
            .collect();
        assert_eq!(acts, vec![Relu, Tanh, Relu, Tanh, Sigmoid]);
        assert_eq!(deep[1], Layer::GlobalAveragePool);
        let lstm = ModelSpec::new(ModelKind::Lstm, 8).architecture();
        assert_eq!(
            lstm,
            vec![
                Layer::Embedding {
                    dim: 8,
                    trainable: true
                },
                Layer::Lstm { units: 60 },
                Layer::GlobalMaxPool,
                Layer::Dropout { rate: 0.1 },
                Layer::Dense {
                    units: 64,
                    activation: Relu
                },
                Layer::Dense {
                    units: 1,
                    activation: Sigmoid
                },
            ]
        );
    }

    #[test]
    fn parameter_counts() {
        let t = table(100);
        let v = t.vocab.len();
        let m = build(&ModelSpec::new(ModelKind::AnnBaseline, 100), &t).unwrap();
        assert_eq!(m.num_parameters(), v * 100 + 100 * 64 + 64 + 64 + 1);

        let m = build(&ModelSpec::new(ModelKind::Lstm, 100), &t).unwrap();
        let lstm: usize = ["lstm.kernel", "lstm.recurrent", "lstm.bias"]
            .iter()
            .map(|n| m.params.get(n).unwrap().len())
            .sum();
        assert_eq!(lstm, 4 * (100 * 60 + 60 * 60 + 60));

        let mut frozen = ModelSpec::new(ModelKind::AnnBaseline, 100);
        frozen.trainable_embeddings = false;
        let m = build(&frozen, &t).unwrap();
        assert_eq!(m.params.num_trainable_elements(), 100 * 64 + 64 + 64 + 1);
    }

    #[test]
    fn build_is_seed_deterministic() {
        let t = table(6);
        let spec = ModelSpec::new(ModelKind::AnnDeep, 6);
        assert_eq!(
            build(&spec, &t).unwrap().params,
            build(&spec, &t).unwrap().params
        );
        let mut other = spec.clone();
        other.seed = 1;
        assert_ne!(
            build(&spec, &t).unwrap().params,
            build(&other, &t).unwrap().params
        );
    }

    #[test]
    fn build_rejects_dim_mismatch() {
        assert!(build(&ModelSpec::new(ModelKind::Lstm, 5), &table(6)).is_err());
    }

    fn paras() -> Vec<Paragraph> {
        [
            "good help",
            "poor poor bad",
            "help the poor",
            "unknown words here",
        ]
        .iter()
        .enumerate()
        .map(|(i, t)| Paragraph::new(format!("p{i}"), "k", "us", *t, i % 2 == 0).unwrap())
        .collect()
    }

    #[test]
    fn zeroed_head_scores_one_half() {
        let t = table(4);
        for kind in [ModelKind::AnnBaseline, ModelKind::AnnDeep, ModelKind::Lstm] {
            let mut m = build(&ModelSpec::new(kind, 4), &t).unwrap();
            let last = m.params.len() - 2;
            m.params.tensor_mut(last).data_mut().fill(0.0);
            let s = m.predict(&paras()).unwrap();
            assert!(
                s.data().iter().all(|&v| (v - 0.5).abs() < 1e-12),
                "{kind:?}"
            );
        }
    }

    #[test]
    fn inference_is_repeatable_and_in_range() {
        let t = table(4);
        let m = build(&ModelSpec::new(ModelKind::Lstm, 4), &t).unwrap();
        let a = m.predict(&paras()).unwrap();
        let b = m.predict(&paras()).unwrap();
        assert_eq!(a, b);
        assert!(a.data().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn multilabel_head_has_seven_columns() {
        let t = table(4);
        let mut spec = ModelSpec::new(ModelKind::AnnBaseline, 4);
        spec.output_dim = 7;
        let m = build(&spec, &t).unwrap();
        let s = m.predict(&paras()).unwrap();
        assert_eq!(s.shape(), &[4, 7]);
        assert!(s.data().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn vocab_mismatch_detected() {
        let t = table(4);
        let m = build(&ModelSpec::new(ModelKind::AnnBaseline, 4), &t).unwrap();
        let other = Vocabulary::from_tokens(["x"]).unwrap();
        assert!(matches!(
            m.predict_scores(&paras(), &other),
            Err(Error::VocabMismatch { .. })
        ));
    }

    #[test]
    fn batch_composition_does_not_change_scores() {
        let t = table(4);
        let mut spec = ModelSpec::new(ModelKind::Lstm, 4);
        spec.batch_size = 1;
        let one = build(&spec, &t).unwrap().predict(&paras()).unwrap();
        spec.batch_size = 3;
        let three = build(&spec, &t).unwrap().predict(&paras()).unwrap();
        assert_eq!(one.data(), three.data());
    }

    #[test]
    fn threshold_rule() {
        assert_eq!(predict_labels(&[0.71], 0.7), vec![true]);
        assert_eq!(predict_labels(&[0.5], 0.5), vec![true]);
        assert_eq!(predict_labels(&[0.2, 0.9], 0.5), vec![false, true]);
    }

    proptest::proptest! {
        #[test]
        fn raising_threshold_never_adds_positives(
            scores in proptest::collection::vec(0.0f64..1.0, 0..50),
            lo in 0.01f64..0.99, delta in 0.0f64..0.5,
        ) {
            let hi = (lo + delta).min(0.99);
            let a = predict_labels(&scores, lo);
            let b = predict_labels(&scores, hi);
            proptest::prop_assert!(a.iter().zip(&b).all(|(x, y)| *x || !*y));
        }
    }
}
