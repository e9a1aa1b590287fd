use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nncore::Activation;
use crate::textprep::DEFAULT_MAX_LEN;

pub const PROTOCOL_GRID_BATCH_SIZES: [usize; 4] = [16, 32, 64, 128];
pub const PROTOCOL_GRID_EPOCHS: [usize; 3] = [10, 50, 100];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    AnnBaseline,
    AnnDeep,
    Lstm,
}

impl ModelKind {
    pub fn is_ann(self) -> bool {
        !matches!(self, ModelKind::Lstm)
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ann_baseline" => Ok(ModelKind::AnnBaseline),
            "ann_deep" => Ok(ModelKind::AnnDeep),
            "lstm" => Ok(ModelKind::Lstm),
            other => Err(Error::InvalidArgument(format!(
                "unknown model kind `{other}` (ann_baseline, ann_deep, lstm)"
            ))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::AnnBaseline => "ann_baseline",
            ModelKind::AnnDeep => "ann_deep",
            ModelKind::Lstm => "lstm",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Layer {
    Embedding {
        dim: usize,
        trainable: bool,
    },
    GlobalAveragePool,
    GlobalMaxPool,
    Lstm {
        units: usize,
    },
    Dropout {
        rate: f64,
    },
    Dense {
        units: usize,
        activation: Activation,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub embedding_dim: usize,
    pub hidden_size: usize,
    pub lstm_hidden: usize,
    pub dropout_rate: f64,
    pub threshold: f64,
    pub max_len: usize,
    pub output_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub learning_rate: f64,
    pub trainable_embeddings: bool,
    pub remove_stopwords: bool,
    pub seed: u64,
}

impl ModelSpec {
    /// Defaults for `kind`: 0.7 cutoff and batch 32 for the ANNs, 0.5 and
    /// batch 128 for the LSTM.
    pub fn new(kind: ModelKind, embedding_dim: usize) -> Self {
        let ann = kind.is_ann();
        ModelSpec {
            kind,
            embedding_dim,
            hidden_size: 64,
            lstm_hidden: 60,
            dropout_rate: 0.1,
            threshold: if ann { 0.7 } else { 0.5 },
            max_len: DEFAULT_MAX_LEN,
            output_dim: 1,
            epochs: 50,
            batch_size: if ann { 32 } else { 128 },
            validation_fraction: 0.1,
            learning_rate: 1e-3,
            trainable_embeddings: true,
            remove_stopwords: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Model(m));
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            ));
        }
        if self.output_dim != 1 && self.output_dim != 7 {
            return bad(format!(
                "output_dim must be 1 or 7, got {}",
                self.output_dim
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            ));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad(format!(
                "validation_fraction must lie in [0, 1), got {}",
                self.validation_fraction
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        for (name, v) in [
            ("embedding_dim", self.embedding_dim),
            ("hidden_size", self.hidden_size),
            ("lstm_hidden", self.lstm_hidden),
            ("max_len", self.max_len),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        Ok(())
    }

    /// True when batch size and epoch count are both on the reference tuning grid.
    pub fn is_protocol_grid(&self) -> bool {
        PROTOCOL_GRID_BATCH_SIZES.contains(&self.batch_size)
            && PROTOCOL_GRID_EPOCHS.contains(&self.epochs)
    }

    pub fn architecture(&self) -> Vec<Layer> {
        use Activation::*;
        let h = self.hidden_size;
        let dense = |units, activation| Layer::Dense { units, activation };
        let mut layers = vec![Layer::Embedding {
            dim: self.embedding_dim,
            trainable: self.trainable_embeddings,
        }];
        match self.kind {
            ModelKind::AnnBaseline => {
                layers.extend([Layer::GlobalAveragePool, dense(h, Relu)]);
            }
            ModelKind::AnnDeep => {
                layers.extend([
                    Layer::GlobalAveragePool,
                    dense(h, Relu),
                    dense(h, Tanh),
                    dense(h, Relu),
                    dense(h, Tanh),
                ]);
            }
            ModelKind::Lstm => {
                layers.extend([
                    Layer::Lstm {
                        units: self.lstm_hidden,
                    },
                    Layer::GlobalMaxPool,
                    Layer::Dropout {
                        rate: self.dropout_rate,
                    },
                    dense(h, Relu),
                ]);
            }
        }
        layers.push(dense(self.output_dim, Sigmoid));
        layers
    }

    /// Flat `key = value` form used by model files and run manifests.
    /// Floats use the shortest round-tripping representation.
    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        vec![
            ("kind", self.kind.to_string()),
            ("embedding_dim", self.embedding_dim.to_string()),
            ("hidden_size", self.hidden_size.to_string()),
            ("lstm_hidden", self.lstm_hidden.to_string()),
            ("dropout_rate", format!("{:?}", self.dropout_rate)),
            ("threshold", format!("{:?}", self.threshold)),
            ("max_len", self.max_len.to_string()),
            ("output_dim", self.output_dim.to_string()),
            ("epochs", self.epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            (
                "validation_fraction",
                format!("{:?}", self.validation_fraction),
            ),
            ("learning_rate", format!("{:?}", self.learning_rate)),
            (
                "trainable_embeddings",
                self.trainable_embeddings.to_string(),
            ),
            ("remove_stopwords", self.remove_stopwords.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    pub fn from_kv(map: &BTreeMap<String, String>) -> Result<Self> {
        fn field<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
            let raw = map
                .get(key)
                .ok_or_else(|| Error::Model(format!("model spec is missing `{key}`")))?;
            raw.parse().map_err(|_| {
                Error::Model(format!("model spec field `{key}` has bad value `{raw}`"))
            })
        }
        let spec = ModelSpec {
            kind: field(map, "kind")?,
            embedding_dim: field(map, "embedding_dim")?,
            hidden_size: field(map, "hidden_size")?,
            lstm_hidden: field(map, "lstm_hidden")?,
            dropout_rate: field(map, "dropout_rate")?,
            threshold: field(map, "threshold")?,
            max_len: field(map, "max_len")?,
            output_dim: field(map, "output_dim")?,
            epochs: field(map, "epochs")?,
            batch_size: field(map, "batch_size")?,
            validation_fraction: field(map, "validation_fraction")?,
            learning_rate: field(map, "learning_rate")?,
            trainable_embeddings: field(map, "trainable_embeddings")?,
            remove_stopwords: field(map, "remove_stopwords")?,
            seed: field(map, "seed")?,
        };
        spec.validate()?;
        Ok(spec)
    }
}
