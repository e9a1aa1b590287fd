use rand::seq::SliceRandom;

use super::{EpochStats, Mode, TrainedModel};
use crate::corpus::{class_counts, Paragraph};
use crate::error::{Error, Result};
use crate::imbalance::BalanceConfig;
use crate::nncore::{AdamConfig, Graph, OptimizerState};
use crate::seed::{self, Stream};
use crate::textprep::EncodedBatch;

/// Rows held out for validation: `round(n · fraction)`, always leaving at
/// least one training row.
pub fn validation_size(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).min(n.saturating_sub(1))
}

/// Trains for `spec.epochs` epochs. See [`train_with_observer`].
pub fn train(
    model: TrainedModel,
    data: &[Paragraph],
    balance: &BalanceConfig,
) -> Result<TrainedModel> {
    train_with_observer(model, data, balance, |_, _| true)
}

/// Applies `balance`, holds out the last `validation_fraction` of the
/// balanced rows (as Keras does) and runs minibatch Adam on the weighted
/// loss. The training rows are reshuffled every epoch from the run seed
/// and epoch index.
///
/// `observer` runs after every epoch; returning `false` stops training
/// early, and the history then records only the epochs that ran.
pub fn train_with_observer<F>(
    mut model: TrainedModel,
    data: &[Paragraph],
    balance: &BalanceConfig,
    mut observer: F,
) -> Result<TrainedModel>
where
    F: FnMut(&EpochStats, &TrainedModel) -> bool,
{
    let counts = class_counts(data);
    if counts.positives == 0 || counts.negatives == 0 {
        return Err(Error::Model(format!(
            "training data needs both classes, got {} positive / {} negative",
            counts.positives, counts.negatives
        )));
    }
    model.spec.validate()?;
    let (balanced, weights) = balance.apply(data)?;
    let encoded = model.encoder().encode(&balanced, weights)?;
    let n = encoded.len();
    let n_val = validation_size(n, model.spec.validation_fraction);
    let n_train = n - n_val;
    let val = (n_val > 0).then(|| encoded.select(&(n_train..n).collect::<Vec<_>>()));

    let spec = model.spec.clone();
    let mut optim = OptimizerState::new(
        AdamConfig {
            learning_rate: spec.learning_rate,
            ..AdamConfig::default()
        },
        &model.params,
    );
    let mut order: Vec<usize> = (0..n_train).collect();
    for epoch in 0..spec.epochs {
        order.sort_unstable();
        order.shuffle(&mut seed::rng(
            spec.seed,
            Stream::EpochShuffle,
            epoch as u64,
        ));
        let mut total = 0.0;
        for (b, rows) in order.chunks(spec.batch_size).enumerate() {
            let batch = encoded.select(rows).trimmed();
            let dropout_seed = seed::derive(
                spec.seed,
                Stream::Dropout,
                ((epoch as u64) << 32) | b as u64,
            );
            let (loss, grads) = {
                let mut g = Graph::new(&model.params);
                let p = model.forward(&mut g, &batch, Mode::Train { dropout_seed })?;
                let l = g.weighted_bce(p, &batch.labels, &batch.weights)?;
                let loss = g.value(l).item();
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch: epoch + 1,
                        batch: b + 1,
                    });
                }
                (loss, g.backward(l)?)
            };
            model.params.zero_grad();
            model.params.accumulate(&grads);
            optim.step(&mut model.params)?;
            total += loss * rows.len() as f64;
        }
        model.params.zero_grad();
        let stats = EpochStats {
            epoch: epoch + 1,
            train_loss: total / n_train as f64,
            val_loss: match &val {
                Some(v) => Some(batched_loss(&model, v)?),
                None => None,
            },
        };
        model.history.push(stats.clone());
        if !observer(&stats, &model) {
            break;
        }
    }
    Ok(model)
}

fn batched_loss(model: &TrainedModel, data: &EncodedBatch) -> Result<f64> {
    let rows: Vec<usize> = (0..data.len()).collect();
    let mut total = 0.0;
    for chunk in rows.chunks(model.spec.batch_size) {
        total += model.loss(&data.select(chunk))? * chunk.len() as f64;
    }
    Ok(total / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build, ModelKind, ModelSpec};

    #[test]
    fn validation_sizes() {
        assert_eq!(validation_size(100, 0.1), 10);
        assert_eq!(validation_size(8510, 0.1), 851);
        assert_eq!(validation_size(1, 0.1), 0);
        assert_eq!(validation_size(5, 0.0), 0);
    }

    #[test]
    fn single_class_rejected() {
        let t = crate::models::tests::table(4);
        let m = build(&ModelSpec::new(ModelKind::AnnBaseline, 4), &t).unwrap();
        let data: Vec<_> = (0..4)
            .map(|i| Paragraph::new(format!("p{i}"), "k", "us", "good", false).unwrap())
            .collect();
        assert!(train(m, &data, &BalanceConfig::none()).is_err());
    }
}
