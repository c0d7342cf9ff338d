use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{softmax, supervision, PolicyModel, Supervision, TrainError};
use crate::dataset::MixedDataset;

fn default_lr_initial() -> f64 {
    5e-5
}

fn default_lr_final() -> f64 {
    5e-6
}

fn default_epochs() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_lr_initial")]
    pub lr_initial: f64,
    #[serde(default = "default_lr_final")]
    pub lr_final: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_initial: default_lr_initial(),
            lr_final: default_lr_final(),
            epochs: default_epochs(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.lr_final > 0.0 && self.lr_initial > self.lr_final) {
            return Err(format!(
                "need lr_initial > lr_final > 0, got {} and {}",
                self.lr_initial, self.lr_final
            ));
        }
        if self.epochs == 0 {
            return Err("epochs must be positive".into());
        }
        Ok(())
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule {
            initial: self.lr_initial,
            final_: self.lr_final,
            total_steps: self.epochs,
        }
    }
}

/// Cosine annealing from `initial` to `final_` over `total_steps`, no warm-up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub initial: f64,
    pub final_: f64,
    pub total_steps: usize,
}

impl LrSchedule {
    /// `final + ½(initial − final)(1 + cos(π t / T))`, clamped at `T`.
    /// The endpoints are returned exactly.
    pub fn lr(&self, step: usize) -> f64 {
        if step == 0 {
            return self.initial;
        }
        if step >= self.total_steps {
            return self.final_;
        }
        let progress = step as f64 / self.total_steps as f64;
        self.final_ + 0.5 * (self.initial - self.final_) * (1.0 + (PI * progress).cos())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: PolicyModel,
    /// Loss after each epoch's update.
    pub loss_curve: Vec<f64>,
    pub initial_loss: f64,
    pub supervised_actions: usize,
    pub skipped_unknown: usize,
    /// Nothing to learn from; the model is returned unchanged.
    pub no_op: bool,
}

/// Per-context template counts.
fn tally(model: &PolicyModel, sup: &Supervision) -> BTreeMap<String, Vec<f64>> {
    let mut counts: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for item in &sup.items {
        counts
            .entry(item.context.clone())
            .or_insert_with(|| vec![0.0; model.vocab_size()])[item.template] += 1.0;
    }
    counts
}

/// Analytic gradient of the summed NLL: for each touched context,
/// `n_c · softmax(w_c) − counts_c`.
pub fn gradient(model: &PolicyModel, sup: &Supervision) -> BTreeMap<String, Vec<f64>> {
    tally(model, sup)
        .into_iter()
        .map(|(key, counts)| {
            let total: f64 = counts.iter().sum();
            let p = softmax(&model.weights(&key), 1.0);
            let g = p
                .iter()
                .zip(&counts)
                .map(|(p, c)| total * p - c)
                .collect();
            (key, g)
        })
        .collect()
}

/// Full-batch gradient descent on the masked NLL. Each step moves along the
/// gradient of the mean per-action loss (same minimizer as the sum) with the
/// cosine learning rate for that step.
pub fn train(
    model: &PolicyModel,
    dataset: &MixedDataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate().map_err(TrainError::Config)?;
    let sup = supervision(model, &dataset.examples);
    let initial_loss = model.nll_of(&sup);
    if sup.items.is_empty() {
        return Ok(TrainOutcome {
            model: model.clone(),
            loss_curve: Vec::new(),
            initial_loss,
            supervised_actions: 0,
            skipped_unknown: sup.skipped_unknown,
            no_op: true,
        });
    }
    let schedule = cfg.schedule();
    let n = sup.items.len() as f64;
    let mut next = model.clone();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for step in 0..cfg.epochs {
        let lr = schedule.lr(step);
        for (key, g) in gradient(&next, &sup) {
            let w = next
                .contexts
                .entry(key)
                .or_insert_with(|| vec![0.0; model.vocab_size()]);
            for (wi, gi) in w.iter_mut().zip(g) {
                *wi -= lr * gi / n;
            }
        }
        curve.push(next.nll_of(&sup));
    }
    next.version = model.version + 1;
    Ok(TrainOutcome {
        model: next,
        loss_curve: curve,
        initial_loss,
        supervised_actions: sup.items.len(),
        skipped_unknown: sup.skipped_unknown,
        no_op: false,
    })
}

/// Largest relative disagreement between the analytic gradient and central
/// finite differences of the NLL, over every weight of every touched context.
/// Entries where both values are below 1e-10 compare absolutely.
pub fn grad_check(
    model: &PolicyModel,
    dataset: &MixedDataset,
    epsilon: f64,
) -> Result<f64, TrainError> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(TrainError::Epsilon(epsilon));
    }
    let sup = supervision(model, &dataset.examples);
    let analytic = gradient(model, &sup);
    let mut worst: f64 = 0.0;
    for (key, g) in &analytic {
        for (j, a) in g.iter().enumerate() {
            let eval = |delta: f64| {
                let mut m = model.clone();
                let w = m
                    .contexts
                    .entry(key.clone())
                    .or_insert_with(|| vec![0.0; model.vocab_size()]);
                w[j] += delta;
                m.nll_of(&sup)
            };
            let numeric = (eval(epsilon) - eval(-epsilon)) / (2.0 * epsilon);
            let scale = a.abs().max(numeric.abs());
            let err = if scale < 1e-10 {
                (a - numeric).abs()
            } else {
                (a - numeric).abs() / scale
            };
            worst = worst.max(err);
        }
    }
    Ok(worst)
}
