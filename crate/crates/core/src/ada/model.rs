use serde::{Deserialize, Serialize};

use crate::ada::domains::LabelledBatch;
use crate::error::{reject, Result};
use crate::nnet::{Activation, DenseNet, NetSnapshot};
use crate::rng::RunRng;

/// All synthetic domains here are binary.
pub const N_CLASSES: usize = 2;

/// Feature trunk plus the two heads of a domain-adversarial classifier.
///
/// `feature_net` embeds 2-D points, `label_head` produces class logits,
/// `domain_head` a sigmoid probability that the embedding came from the
/// target domain (source = 0, target = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct AdaModel {
    pub feature_net: DenseNet,
    pub label_head: DenseNet,
    pub domain_head: DenseNet,
}

impl AdaModel {
    /// `feature_hidden` lists the trunk's hidden widths (the last entry
    /// is the embedding dimension) and `head_hidden` the hidden widths of
    /// both heads, e.g. `[32, 32]` each. Hidden activations are tanh.
    pub fn new(feature_hidden: &[usize], head_hidden: &[usize], rng: &mut RunRng) -> Self {
        assert!(!feature_hidden.is_empty(), "need at least one hidden layer");
        let mut dims = vec![2];
        dims.extend_from_slice(feature_hidden);
        let embed = *feature_hidden.last().unwrap();
        let feature_net = DenseNet::new(&dims, Activation::Tanh, Activation::Tanh, rng);

        let mut label_dims = vec![embed];
        label_dims.extend_from_slice(head_hidden);
        label_dims.push(N_CLASSES);
        let label_head = DenseNet::new(
            &label_dims,
            Activation::Tanh,
            Activation::Identity,
            rng,
        );

        let mut domain_dims = vec![embed];
        domain_dims.extend_from_slice(head_hidden);
        domain_dims.push(1);
        let domain_head =
            DenseNet::new(&domain_dims, Activation::Tanh, Activation::Sigmoid, rng);
        AdaModel {
            feature_net,
            label_head,
            domain_head,
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.feature_net.output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.feature_net.param_count() + self.label_head.param_count() + self.domain_head.param_count()
    }

    /// Flat parameters, ordered feature / label / domain.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = self.feature_net.flatten_params();
        out.extend(self.label_head.flatten_params());
        out.extend(self.domain_head.flatten_params());
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        let (nf, nl) = (self.feature_net.param_count(), self.label_head.param_count());
        self.feature_net.set_params(&flat[..nf]);
        self.label_head.set_params(&flat[nf..nf + nl]);
        self.domain_head.set_params(&flat[nf + nl..]);
    }

    /// Class predictions (argmax of label logits) for a batch of points.
    pub fn predict(&self, batch: &LabelledBatch) -> Result<Vec<usize>> {
        let embedded = self.feature_net.forward(&batch.points)?;
        let logits = self.label_head.forward(embedded.output())?;
        let out = logits.output();
        Ok((0..out.rows())
            .map(|i| {
                let row = out.row(i);
                let mut best = 0;
                for (c, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect())
    }

    /// Label accuracy against the batch's own labels.
    pub fn accuracy(&self, batch: &LabelledBatch) -> Result<f64> {
        let labels = batch
            .labels
            .as_ref()
            .ok_or_else(|| crate::Error::RejectedInput("accuracy needs labels".into()))?;
        let preds = self.predict(batch)?;
        if preds.is_empty() {
            return reject("empty batch");
        }
        let correct = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
        Ok(correct as f64 / preds.len() as f64)
    }

    pub fn to_snapshot(&self) -> AdaSnapshot {
        AdaSnapshot {
            feature_net: self.feature_net.to_snapshot(),
            label_head: self.label_head.to_snapshot(),
            domain_head: self.domain_head.to_snapshot(),
        }
    }

    pub fn from_snapshot(snap: &AdaSnapshot) -> Result<Self> {
        Ok(AdaModel {
            feature_net: DenseNet::from_snapshot(&snap.feature_net)?,
            label_head: DenseNet::from_snapshot(&snap.label_head)?,
            domain_head: DenseNet::from_snapshot(&snap.domain_head)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaSnapshot {
    pub feature_net: NetSnapshot,
    pub label_head: NetSnapshot,
    pub domain_head: NetSnapshot,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ada::domains::{sample_domain, BaseShape, DomainSpec};
    use crate::rng::seed_rng;

    #[test]
    fn dimensions_chain() {
        let mut rng = seed_rng(1);
        let m = AdaModel::new(&[16, 8], &[8], &mut rng);
        assert_eq!(m.feature_net.input_dim(), 2);
        assert_eq!(m.embed_dim(), 8);
        assert_eq!(m.label_head.output_dim(), N_CLASSES);
        assert_eq!(m.domain_head.output_dim(), 1);
    }

    #[test]
    fn params_roundtrip_through_flat_vector() {
        let mut rng = seed_rng(2);
        let m = AdaModel::new(&[8], &[], &mut rng);
        let flat = m.params_flat();
        assert_eq!(flat.len(), m.param_count());
        let mut m2 = AdaModel::new(&[8], &[], &mut rng);
        m2.set_params_flat(&flat);
        assert_eq!(m, m2);
    }

    #[test]
    fn untrained_accuracy_is_near_chance() {
        let mut rng = seed_rng(3);
        let m = AdaModel::new(&[32, 32], &[32, 32], &mut rng);
        let spec = DomainSpec {
            base_shape: BaseShape::TwoMoons,
            rotation_deg: 0.0,
            noise_std: 0.1,
            n_per_class: 500,
        };
        let batch = sample_domain(&spec, 0, &mut rng).unwrap();
        let acc = m.accuracy(&batch).unwrap();
        assert!((0.2..=0.8).contains(&acc), "chance-level check, got {acc}");
    }
}
