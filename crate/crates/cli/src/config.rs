//! Experiment configuration: one TOML file with a section per module.
//!
//! Relative input paths resolve against the config file's directory. A
//! relative output directory resolves against `PCL_OUTPUT_ROOT` when set.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pcl_core::corpus::CorpusFormat;
use pcl_core::ensemble::TieRule;
use pcl_core::imbalance::{BalanceConfig, Ratio, Strategy};
use pcl_core::models::{ModelKind, ModelSpec};
use pcl_core::textprep::{ClassWeights, DEFAULT_MAX_LEN};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const OUTPUT_ROOT_ENV: &str = "PCL_OUTPUT_ROOT";

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub textprep: TextprepSection,
    #[serde(default)]
    pub balance: BalanceSection,
    pub model: Option<ModelSection>,
    pub ensemble: Option<EnsembleSection>,
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    /// Whole corpus, split by `split_ratio` / `split_seed` or `dev_ids`.
    pub path: Option<PathBuf>,
    /// Pre-split files, used instead of `path`.
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub dev_ids: Option<PathBuf>,
    pub categories: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub format: String,
    #[serde(default = "default_split_ratio")]
    pub split_ratio: f64,
    #[serde(default)]
    pub split_seed: u64,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            path: None,
            train: None,
            dev: None,
            dev_ids: None,
            categories: None,
            format: default_format(),
            split_ratio: default_split_ratio(),
            split_seed: 0,
        }
    }
}

fn default_format() -> String {
    "canonical-tsv".into()
}

fn default_split_ratio() -> f64 {
    0.8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextprepSection {
    pub embeddings: Option<PathBuf>,
    #[serde(default)]
    pub embedding_seed: u64,
    #[serde(default = "one")]
    pub min_count: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default)]
    pub remove_stopwords: bool,
}

impl Default for TextprepSection {
    fn default() -> Self {
        TextprepSection {
            embeddings: None,
            embedding_seed: 0,
            min_count: 1,
            max_len: DEFAULT_MAX_LEN,
            remove_stopwords: false,
        }
    }
}

fn one() -> usize {
    1
}

fn default_max_len() -> usize {
    DEFAULT_MAX_LEN
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceSection {
    #[serde(default = "default_strategy")]
    pub strategy: String,
    #[serde(default = "default_factor")]
    pub pos_repeat_factor: usize,
    #[serde(default = "default_ratio")]
    pub target_ratio: String,
    #[serde(default = "default_pos_weight")]
    pub pos_weight: f64,
    #[serde(default = "default_neg_weight")]
    pub neg_weight: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for BalanceSection {
    fn default() -> Self {
        BalanceSection {
            strategy: default_strategy(),
            pos_repeat_factor: default_factor(),
            target_ratio: default_ratio(),
            pos_weight: default_pos_weight(),
            neg_weight: default_neg_weight(),
            seed: 0,
        }
    }
}

fn default_strategy() -> String {
    "class_weights".into()
}
fn default_factor() -> usize {
    9
}
fn default_ratio() -> String {
    "2:1".into()
}
fn default_pos_weight() -> f64 {
    10.0
}
fn default_neg_weight() -> f64 {
    1.0
}

/// Architecture and training settings. Unset fields take the per-kind
/// defaults.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: Option<String>,
    /// `binary` (default) or `multilabel`.
    pub task: Option<String>,
    pub hidden_size: Option<usize>,
    pub lstm_hidden: Option<usize>,
    pub dropout_rate: Option<f64>,
    pub threshold: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub validation_fraction: Option<f64>,
    pub learning_rate: Option<f64>,
    pub trainable_embeddings: Option<bool>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "default_seeds")]
    pub seeds: [u64; 4],
    #[serde(default = "default_tie_rule")]
    pub tie_rule: String,
    #[serde(default)]
    pub ann: ModelSection,
    #[serde(default)]
    pub lstm: ModelSection,
}

fn default_seeds() -> [u64; 4] {
    [1, 2, 3, 4]
}

fn default_tie_rule() -> String {
    "positive".into()
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default)]
    pub epochs: Vec<usize>,
    #[serde(default)]
    pub batch_sizes: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_output_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_output_dir(),
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// A parsed config plus the directory its relative paths hang off.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    pub output_root: Option<PathBuf>,
}

impl LoadedConfig {
    pub fn load(path: &Path, output_root: Option<PathBuf>) -> Result<Self> {
        let raw = fs::read_to_string(path)
            .with_context(|| format!("cli: cannot read config {}", path.display()))?;
        let config: ExperimentConfig = toml::from_str(&raw)
            .with_context(|| format!("cli: invalid config {}", path.display()))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let loaded = LoadedConfig {
            config,
            base_dir,
            output_root,
        };
        loaded
            .validate()
            .with_context(|| format!("cli: invalid config {}", path.display()))?;
        Ok(loaded)
    }

    /// Checks enums and that every referenced input file exists.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        self.corpus_format()?;
        self.balance()?;
        let corpus = &c.corpus;
        match (&corpus.path, &corpus.train, &corpus.dev) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            _ => bail!("[corpus] needs either `path`, or both `train` and `dev`"),
        }
        let inputs = [
            ("corpus.path", &corpus.path),
            ("corpus.train", &corpus.train),
            ("corpus.dev", &corpus.dev),
            ("corpus.dev_ids", &corpus.dev_ids),
            ("corpus.categories", &corpus.categories),
            ("textprep.embeddings", &c.textprep.embeddings),
        ];
        for (key, p) in inputs {
            if let Some(p) = p {
                let full = self.input(p);
                if !full.is_file() {
                    bail!("{key} = {} does not exist", full.display());
                }
            }
        }
        if let Some(m) = &c.model {
            self.model_spec(m, None, 1)?;
        }
        if let Some(e) = &c.ensemble {
            e.tie_rule.parse::<TieRule>()?;
            self.model_spec(&e.ann, Some(ModelKind::AnnBaseline), 1)?;
            self.model_spec(&e.lstm, Some(ModelKind::Lstm), 1)?;
        }
        Ok(())
    }

    pub fn input(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        let d = &self.config.output.dir;
        if d.is_absolute() {
            d.clone()
        } else if let Some(root) = &self.output_root {
            root.join(d)
        } else {
            self.base_dir.join(d)
        }
    }

    /// SHA-256 of the canonical serialization of the effective config
    /// (after command-line overrides), hex encoded. The output location is
    /// left out so that moving a run does not change its artifacts.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.config.clone();
        c.output = OutputSection::default();
        let canonical = toml::to_string(&c).context("cli: cannot serialize config")?;
        Ok(hex(&Sha256::digest(canonical.as_bytes())))
    }

    pub fn corpus_format(&self) -> Result<CorpusFormat> {
        Ok(self.config.corpus.format.parse()?)
    }

    pub fn balance(&self) -> Result<BalanceConfig> {
        let b = &self.config.balance;
        let cfg = BalanceConfig {
            strategy: b.strategy.parse::<Strategy>()?,
            pos_repeat_factor: b.pos_repeat_factor,
            target_ratio: b.target_ratio.parse::<Ratio>()?,
            weights: ClassWeights::new(b.pos_weight, b.neg_weight)?,
            seed: b.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The spec for `section`, with `kind` as fallback when the section
    /// leaves it out.
    pub fn model_spec(
        &self,
        section: &ModelSection,
        kind: Option<ModelKind>,
        embedding_dim: usize,
    ) -> Result<ModelSpec> {
        let kind = match (&section.kind, kind) {
            (Some(k), _) => k.parse::<ModelKind>()?,
            (None, Some(k)) => k,
            (None, None) => bail!("[model] needs `kind` (ann_baseline, ann_deep, lstm)"),
        };
        let mut s = ModelSpec::new(kind, embedding_dim);
        s.output_dim = match section.task.as_deref() {
            None | Some("binary") => 1,
            Some("multilabel") => 7,
            Some(other) => bail!("unknown task `{other}` (binary, multilabel)"),
        };
        s.max_len = self.config.textprep.max_len;
        s.remove_stopwords = self.config.textprep.remove_stopwords;
        if let Some(v) = section.hidden_size {
            s.hidden_size = v;
        }
        if let Some(v) = section.lstm_hidden {
            s.lstm_hidden = v;
        }
        if let Some(v) = section.dropout_rate {
            s.dropout_rate = v;
        }
        if let Some(v) = section.threshold {
            s.threshold = v;
        }
        if let Some(v) = section.epochs {
            s.epochs = v;
        }
        if let Some(v) = section.batch_size {
            s.batch_size = v;
        }
        if let Some(v) = section.validation_fraction {
            s.validation_fraction = v;
        }
        if let Some(v) = section.learning_rate {
            s.learning_rate = v;
        }
        if let Some(v) = section.trainable_embeddings {
            s.trainable_embeddings = v;
        }
        if let Some(v) = section.seed {
            s.seed = v;
        }
        s.validate()?;
        Ok(s)
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
