//! Full-batch training with early stopping on validation accuracy.

use serde::{Deserialize, Serialize};

use super::{
    accuracy, adam_step, backward, forward, init_params_with, loss_ce, project_theta_grad, AdamState, ConvKind, Mode,
    ModelParams, TrainConfig,
};
use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::graph::{normalized_laplacian, shifted_laplacian, Graph, SparseSym};

/// Disjoint train / validation / test node masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<bool>,
    pub valid: Vec<bool>,
    pub test: Vec<bool>,
}

impl Splits {
    /// Builds masks from index lists, rejecting out-of-range indices and
    /// nodes listed in more than one split.
    pub fn from_indices(n: usize, train: &[usize], valid: &[usize], test: &[usize]) -> Result<Self> {
        let mut owner: Vec<Option<&'static str>> = vec![None; n];
        let mut masks = [vec![false; n], vec![false; n], vec![false; n]];
        for ((name, idx), mask) in [("train", train), ("valid", valid), ("test", test)]
            .into_iter()
            .zip(masks.iter_mut())
        {
            for &i in idx {
                if i >= n {
                    return Err(Error::InvalidInput(format!(
                        "{name} split lists node {i}, outside [0, {n})"
                    )));
                }
                if let Some(prev) = owner[i] {
                    if prev != name {
                        return Err(Error::InvalidInput(format!(
                            "node {i} appears in both the {prev} and {name} splits"
                        )));
                    }
                }
                owner[i] = Some(name);
                mask[i] = true;
            }
        }
        let [train, valid, test] = masks;
        Ok(Splits { train, valid, test })
    }

    /// Indices selected by a mask.
    pub fn indices(mask: &[bool]) -> Vec<usize> {
        mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
    }

    fn validate(&self, n: usize) -> Result<()> {
        for (name, m) in [("train", &self.train), ("valid", &self.valid), ("test", &self.test)] {
            if m.len() != n {
                return Err(Error::dims("Splits", format!("{n} mask entries"), m.len()));
            }
            if !m.iter().any(|&b| b) {
                return Err(Error::InvalidInput(format!("{name} split is empty")));
            }
        }
        for i in 0..n {
            let k = [self.train[i], self.valid[i], self.test[i]]
                .iter()
                .filter(|&&b| b)
                .count();
            if k > 1 {
                return Err(Error::InvalidInput(format!("node {i} belongs to more than one split")));
            }
        }
        Ok(())
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub train_loss: Vec<f64>,
    pub valid_acc: Vec<f64>,
    pub valid_loss: Vec<f64>,
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation accuracy.
    pub params: ModelParams,
    pub history: History,
    pub best_epoch: usize,
    pub best_valid_acc: f64,
    pub test_acc: f64,
}

/// Holds everything one epoch needs; [`Trainer::epoch`] performs one
/// gradient step.
pub struct Trainer<'a> {
    pub config: &'a TrainConfig,
    pub lhat: SparseSym,
    pub x: &'a DenseMat,
    pub labels: &'a [usize],
    pub splits: &'a Splits,
    pub params: ModelParams,
    pub adam: AdamState,
}

impl<'a> Trainer<'a> {
    pub fn new(
        config: &'a TrainConfig,
        graph: &Graph,
        x: &'a DenseMat,
        labels: &'a [usize],
        splits: &'a Splits,
    ) -> Result<Self> {
        config.validate()?;
        let n = graph.n_nodes();
        if x.rows() != n || labels.len() != n {
            return Err(Error::dims(
                "train",
                format!("{n} feature rows and labels"),
                format!("{} rows, {} labels", x.rows(), labels.len()),
            ));
        }
        splits.validate(n)?;
        let c = labels.iter().copied().max().map_or(1, |m| m + 1).max(2);
        let lhat = shifted_laplacian(&normalized_laplacian(graph));
        let params = init_params_with(
            x.cols(),
            config.hidden,
            c,
            config.degree,
            config.seed,
            config.theta_init,
            config.conv,
        )?;
        let adam = AdamState::new(&params);
        Ok(Trainer {
            config,
            lhat,
            x,
            labels,
            splits,
            params,
            adam,
        })
    }

    /// One full-batch step; returns the training loss before the update.
    pub fn epoch(&mut self, epoch: usize) -> Result<f64> {
        let mode = Mode::Train {
            seed: self.config.seed,
            epoch: epoch as u64,
            dropout: self.config.dropout,
        };
        let (loss, mut grads) = backward(&self.params, &self.lhat, self.x, self.labels, &self.splits.train, mode)?;
        if self.config.conv == ConvKind::SharedDiagonal {
            project_theta_grad(&mut grads.theta);
        }
        adam_step(&mut self.adam, &mut self.params, &grads, self.config);
        if !self.params.is_finite() {
            return Err(Error::NonFinite("parameters after Adam step"));
        }
        Ok(loss)
    }

    /// Eval-mode `(accuracy, loss)` on a mask.
    pub fn score(&self, params: &ModelParams, mask: &[bool]) -> Result<(f64, f64)> {
        let logits = forward(params, &self.lhat, self.x, Mode::Eval)?;
        Ok((
            accuracy(&logits, self.labels, mask)?,
            loss_ce(&logits, self.labels, mask)?,
        ))
    }
}

/// Trains ChebNet2D and restores the parameters of the best validation
/// epoch. Improvement means strictly higher validation accuracy, or equal
/// accuracy with strictly lower validation loss. Training stops after
/// `patience` epochs without improvement or at `max_epochs`.
///
/// The number of classes is one more than the largest label (at least 2).
pub fn train(
    config: &TrainConfig,
    graph: &Graph,
    x: &DenseMat,
    labels: &[usize],
    splits: &Splits,
) -> Result<TrainOutcome> {
    let mut tr = Trainer::new(config, graph, x, labels, splits)?;
    let mut history = History::default();
    let mut best = tr.params.clone();
    let mut best_epoch = 0;
    let mut best_acc = f64::NEG_INFINITY;
    let mut best_loss = f64::INFINITY;
    let mut since_best = 0;
    for epoch in 0..config.max_epochs {
        let loss = tr.epoch(epoch)?;
        let (acc, vloss) = tr.score(&tr.params, &splits.valid)?;
        history.train_loss.push(loss);
        history.valid_acc.push(acc);
        history.valid_loss.push(vloss);
        if acc > best_acc || (acc == best_acc && vloss < best_loss) {
            best_acc = acc;
            best_loss = vloss;
            best_epoch = epoch;
            best.clone_from(&tr.params);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                log::debug!("early stop at epoch {epoch}, best epoch {best_epoch}");
                break;
            }
        }
    }
    let (test_acc, _) = tr.score(&best, &splits.test)?;
    Ok(TrainOutcome {
        params: best,
        history,
        best_epoch,
        best_valid_acc: best_acc,
        test_acc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlapping_splits_rejected() {
        let err = Splits::from_indices(4, &[0, 1], &[2], &[1, 3]).unwrap_err();
        assert!(err.to_string().contains("node 1"));
        assert!(Splits::from_indices(4, &[0], &[5], &[1]).is_err());
        let s = Splits::from_indices(4, &[0, 1], &[2], &[3]).unwrap();
        assert_eq!(Splits::indices(&s.train), vec![0, 1]);
    }

    #[test]
    fn empty_split_rejected_by_train() {
        let g = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let x = DenseMat::identity(3);
        let s = Splits {
            train: vec![true, true, false],
            valid: vec![false, false, true],
            test: vec![false; 3],
        };
        let cfg = TrainConfig {
            max_epochs: 5,
            patience: 2,
            ..TrainConfig::default()
        };
        assert!(train(&cfg, &g, &x, &[0, 1, 0], &s).is_err());
    }
}
