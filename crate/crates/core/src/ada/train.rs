use crate::ada::domains::{sample_domain, DomainSpec, LabelledBatch};
use crate::ada::model::AdaModel;
use crate::error::{diverged, reject, Result};
use crate::nnet::{grad_reverse, softmax_ce_mean, Matrix, OptimMethod, OptimState};
use crate::rng::seed_rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaStepLosses {
    pub label_loss: f64,
    pub domain_loss: f64,
}

struct StepGradients {
    flat: Vec<f64>,
    losses: AdaStepLosses,
}

/// Gradients of one adversarial step, ordered like
/// [`AdaModel::params_flat`].
///
/// The label head sees source cross-entropy; the domain head sees binary
/// cross-entropy over the union (source = 0, target = 1); the feature
/// trunk sees the label gradient plus the domain gradient through the
/// reversal point scaled by `-lambda`. At `lambda = 0` the domain branch
/// contributes nothing to the trunk, bit-exactly.
fn compute_gradients(
    model: &AdaModel,
    src: &LabelledBatch,
    tgt: &LabelledBatch,
    lambda: f64,
) -> Result<StepGradients> {
    let labels = src
        .labels
        .as_ref()
        .ok_or_else(|| crate::Error::RejectedInput("source batch must carry labels".into()))?;
    if src.is_empty() || tgt.is_empty() {
        return reject("batches must be nonempty");
    }
    if !(lambda >= 0.0) {
        return reject(format!("lambda must be nonnegative, got {lambda}"));
    }

    let trace_fs = model.feature_net.forward(&src.points)?;
    let trace_ft = model.feature_net.forward(&tgt.points)?;

    // Source label loss.
    let trace_ls = model.label_head.forward(trace_fs.output())?;
    let (label_loss, d_logits) = softmax_ce_mean(trace_ls.output(), labels)?;
    let (grads_label, d_fs_label) = model.label_head.backward(&trace_ls, &d_logits)?;

    // Domain loss over the union, mean-normalized across both batches.
    let trace_ds = model.domain_head.forward(trace_fs.output())?;
    let trace_dt = model.domain_head.forward(trace_ft.output())?;
    let n_total = (src.len() + tgt.len()) as f64;
    let mut domain_loss = 0.0;
    let mut d_ps = Matrix::zeros(src.len(), 1);
    for i in 0..src.len() {
        let p = trace_ds.output().get(i, 0);
        domain_loss -= (1.0 - p).ln();
        d_ps.set(i, 0, 1.0 / (1.0 - p) / n_total);
    }
    let mut d_pt = Matrix::zeros(tgt.len(), 1);
    for i in 0..tgt.len() {
        let p = trace_dt.output().get(i, 0);
        domain_loss -= p.ln();
        d_pt.set(i, 0, -1.0 / p / n_total);
    }
    domain_loss /= n_total;
    if !label_loss.is_finite() || !domain_loss.is_finite() {
        return diverged(format!(
            "non-finite losses: label {label_loss}, domain {domain_loss}"
        ));
    }

    let (grads_dom_s, d_fs_dom) = model.domain_head.backward(&trace_ds, &d_ps)?;
    let (grads_dom_t, d_ft_dom) = model.domain_head.backward(&trace_dt, &d_pt)?;
    let mut grads_domain = grads_dom_s;
    grads_domain.add_assign(&grads_dom_t);

    // Feature trunk: label path plus reversed domain path.
    let mut grads_feature = {
        let (g, _) = model.feature_net.backward(&trace_fs, &d_fs_label)?;
        g
    };
    if lambda > 0.0 {
        let mut d_fs = d_fs_label;
        d_fs.add_assign(&grad_reverse(&d_fs_dom, lambda));
        let (g_src, _) = model.feature_net.backward(&trace_fs, &d_fs)?;
        let (g_tgt, _) = model
            .feature_net
            .backward(&trace_ft, &grad_reverse(&d_ft_dom, lambda))?;
        grads_feature = g_src;
        grads_feature.add_assign(&g_tgt);
    }

    let mut flat = grads_feature.flatten();
    flat.extend(grads_label.flatten());
    flat.extend(grads_domain.flatten());
    Ok(StepGradients {
        flat,
        losses: AdaStepLosses {
            label_loss,
            domain_loss,
        },
    })
}

/// One adversarial training step on all three networks.
pub fn ada_step(
    model: &mut AdaModel,
    optim: &mut OptimState,
    src: &LabelledBatch,
    tgt: &LabelledBatch,
    lambda: f64,
) -> Result<AdaStepLosses> {
    let grads = compute_gradients(model, src, tgt, lambda)?;
    let mut params = model.params_flat();
    optim.step_flat(&mut params, &grads.flat)?;
    model.set_params_flat(&params);
    Ok(grads.losses)
}

/// Per-stage report: accuracies of the adversarial model next to the
/// source-only (`lambda = 0`) baseline trained under the same seed.
#[derive(Debug, Clone, PartialEq)]
pub struct StageMetrics {
    pub stage: usize,
    pub rotation_deg: f64,
    pub src_acc: f64,
    pub tgt_acc: f64,
    pub baseline_tgt_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaTrainConfig {
    pub steps_per_stage: usize,
    pub batch_per_class: usize,
    pub lambda_max: f64,
    pub method: OptimMethod,
    pub learning_rate: f64,
    pub eval_per_class: usize,
    /// Trunk hidden widths; the last entry is the embedding dimension.
    pub feature_hidden: Vec<usize>,
    /// Hidden widths of the label and domain heads.
    pub head_hidden: Vec<usize>,
}

impl Default for AdaTrainConfig {
    fn default() -> Self {
        AdaTrainConfig {
            steps_per_stage: 1500,
            batch_per_class: 32,
            lambda_max: 1.0,
            method: OptimMethod::Adam,
            learning_rate: 5e-3,
            eval_per_class: 500,
            feature_hidden: vec![32, 32],
            head_hidden: vec![32, 32],
        }
    }
}

/// Lambda warm-up: ramps 0 -> lambda_max over the first half of the
/// FIRST stage, then holds. Later stages start adversarially balanced;
/// re-ramping would let the label loss unwind the alignment already won.
fn lambda_at(stage: usize, step: usize, total_steps: usize, lambda_max: f64) -> f64 {
    if stage > 0 {
        return lambda_max;
    }
    let half = (total_steps / 2).max(1);
    if step >= half {
        lambda_max
    } else {
        lambda_max * step as f64 / half as f64
    }
}

struct RawStage {
    rotation_deg: f64,
    src_acc: f64,
    tgt_acc: f64,
}

/// One pass over the target stream. With `adversarial = false` the lambda
/// schedule is identically zero, giving the source-only baseline on the
/// same draw sequence.
fn run_stages(
    src_spec: &DomainSpec,
    stream: &[DomainSpec],
    cfg: &AdaTrainConfig,
    seed: u64,
    adversarial: bool,
) -> Result<(AdaModel, Vec<RawStage>)> {
    if stream.is_empty() {
        return reject("target stream must be nonempty");
    }
    let mut rng = seed_rng(seed);
    let mut model = AdaModel::new(&cfg.feature_hidden, &cfg.head_hidden, &mut rng);
    let mut optim = OptimState::new(cfg.method, cfg.learning_rate)?;
    let src_eval = sample_domain(&src_spec.with_n_per_class(cfg.eval_per_class), 0, &mut rng)?;

    let mut stages = Vec::with_capacity(stream.len());
    for (stage, tgt_spec) in stream.iter().enumerate() {
        let tgt_eval = sample_domain(&tgt_spec.with_n_per_class(cfg.eval_per_class), 1, &mut rng)?;
        for step in 0..cfg.steps_per_stage {
            let lambda = if adversarial {
                lambda_at(stage, step, cfg.steps_per_stage, cfg.lambda_max)
            } else {
                0.0
            };
            let src_batch =
                sample_domain(&src_spec.with_n_per_class(cfg.batch_per_class), 0, &mut rng)?;
            let tgt_batch =
                sample_domain(&tgt_spec.with_n_per_class(cfg.batch_per_class), 1, &mut rng)?
                    .without_labels();
            ada_step(&mut model, &mut optim, &src_batch, &tgt_batch, lambda)?;
        }
        stages.push(RawStage {
            rotation_deg: tgt_spec.rotation_deg,
            src_acc: model.accuracy(&src_eval)?,
            tgt_acc: model.accuracy(&tgt_eval)?,
        });
    }
    Ok((model, stages))
}

/// Incremental adversarial domain adaptation over an ordered stream of
/// targets. Stage `k` adapts the model produced by stage `k - 1` with
/// domain `k` as target; labelled source data stays available throughout.
/// A source-only baseline (`lambda = 0`) runs under the same seed and its
/// per-stage target accuracy is reported alongside.
pub fn train_iada(
    src_spec: &DomainSpec,
    stream: &[DomainSpec],
    cfg: &AdaTrainConfig,
    seed: u64,
) -> Result<(AdaModel, Vec<StageMetrics>)> {
    let (model, adapted) = run_stages(src_spec, stream, cfg, seed, true)?;
    let (_, baseline) = run_stages(src_spec, stream, cfg, seed, false)?;
    let metrics = adapted
        .into_iter()
        .zip(baseline)
        .enumerate()
        .map(|(stage, (a, b))| StageMetrics {
            stage,
            rotation_deg: a.rotation_deg,
            src_acc: a.src_acc,
            tgt_acc: a.tgt_acc,
            baseline_tgt_acc: b.tgt_acc,
        })
        .collect();
    Ok((model, metrics))
}

/// One-shot adversarial domain adaptation: a singleton-stream IADA run.
pub fn train_ada(
    src_spec: &DomainSpec,
    tgt_spec: &DomainSpec,
    cfg: &AdaTrainConfig,
    seed: u64,
) -> Result<(AdaModel, Vec<StageMetrics>)> {
    train_iada(src_spec, &[*tgt_spec], cfg, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ada::domains::BaseShape;
    use crate::nnet::{finite_diff_flat, max_relative_error};

    fn moons(rotation_deg: f64, n: usize) -> DomainSpec {
        DomainSpec {
            base_shape: BaseShape::TwoMoons,
            rotation_deg,
            noise_std: 0.1,
            n_per_class: n,
        }
    }

    fn small_batches(seed: u64) -> (LabelledBatch, LabelledBatch) {
        let mut rng = seed_rng(seed);
        let src = sample_domain(&moons(0.0, 6), 0, &mut rng).unwrap();
        let tgt = sample_domain(&moons(45.0, 6), 1, &mut rng)
            .unwrap()
            .without_labels();
        (src, tgt)
    }

    #[test]
    fn zero_lambda_leaves_feature_gradient_pure_label_loss() {
        let mut rng = seed_rng(10);
        let model = AdaModel::new(&[6], &[], &mut rng);
        let (src, tgt) = small_batches(11);

        let with_domain = compute_gradients(&model, &src, &tgt, 0.0).unwrap();
        // Pure label-loss gradient through trunk and head.
        let trace_fs = model.feature_net.forward(&src.points).unwrap();
        let trace_ls = model.label_head.forward(trace_fs.output()).unwrap();
        let (_, d_logits) =
            softmax_ce_mean(trace_ls.output(), src.labels.as_ref().unwrap()).unwrap();
        let (_, d_fs) = model.label_head.backward(&trace_ls, &d_logits).unwrap();
        let (pure, _) = model.feature_net.backward(&trace_fs, &d_fs).unwrap();

        let n_feat = model.feature_net.param_count();
        for (a, b) in with_domain.flat[..n_feat].iter().zip(pure.flatten()) {
            assert_eq!(a.to_bits(), b.to_bits(), "feature gradient must be bit-exact");
        }
    }

    #[test]
    fn source_as_target_drives_domain_head_to_half() {
        // Same batch in both roles: after training, the domain head cannot
        // do better than 0.5 on those points.
        let mut rng = seed_rng(20);
        let mut model = AdaModel::new(&[16], &[], &mut rng);
        let mut optim = OptimState::adam(5e-3).unwrap();
        for _ in 0..500 {
            let batch = sample_domain(&moons(0.0, 16), 0, &mut rng).unwrap();
            let tgt = batch.clone().without_labels();
            ada_step(&mut model, &mut optim, &batch, &tgt, 0.5).unwrap();
        }
        let probe = sample_domain(&moons(0.0, 200), 0, &mut rng).unwrap();
        let trace = model.feature_net.forward(&probe.points).unwrap();
        let d = model.domain_head.forward(trace.output()).unwrap();
        let mean: f64 = d.output().data().iter().sum::<f64>() / d.output().rows() as f64;
        assert!((mean - 0.5).abs() < 0.05, "mean domain output {mean}");
    }

    #[test]
    fn composed_objective_gradient_matches_finite_differences() {
        // d(label_loss - lambda * domain_loss)/d(theta_feature).
        let mut rng = seed_rng(30);
        let model = AdaModel::new(&[5], &[], &mut rng); // well under 200 params
        assert!(model.param_count() <= 200);
        let (src, tgt) = small_batches(31);
        let lambda = 0.7;

        let analytic = compute_gradients(&model, &src, &tgt, lambda).unwrap();
        let n_feat = model.feature_net.param_count();

        let mut probe = model.clone();
        let feature_params = model.feature_net.flatten_params();
        let numeric = finite_diff_flat(
            |p| {
                probe.feature_net.set_params(p);
                let g = compute_gradients(&probe, &src, &tgt, lambda).unwrap();
                g.losses.label_loss - lambda * g.losses.domain_loss
            },
            &feature_params,
            1e-5,
        );
        let err = max_relative_error(&analytic.flat[..n_feat], &numeric);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn head_gradients_match_their_own_losses() {
        // Label head follows d(label_loss); domain head follows
        // d(domain_loss) un-reversed.
        let mut rng = seed_rng(40);
        let model = AdaModel::new(&[5], &[], &mut rng);
        let (src, tgt) = small_batches(41);
        let lambda = 0.9;
        let analytic = compute_gradients(&model, &src, &tgt, lambda).unwrap();
        let n_feat = model.feature_net.param_count();
        let n_label = model.label_head.param_count();

        let mut probe = model.clone();
        let numeric_label = finite_diff_flat(
            |p| {
                probe.label_head.set_params(p);
                compute_gradients(&probe, &src, &tgt, lambda)
                    .unwrap()
                    .losses
                    .label_loss
            },
            &model.label_head.flatten_params(),
            1e-5,
        );
        let err = max_relative_error(&analytic.flat[n_feat..n_feat + n_label], &numeric_label);
        assert!(err < 1e-4, "label head error {err}");

        let mut probe2 = model.clone();
        let numeric_domain = finite_diff_flat(
            |p| {
                probe2.domain_head.set_params(p);
                compute_gradients(&probe2, &src, &tgt, lambda)
                    .unwrap()
                    .losses
                    .domain_loss
            },
            &model.domain_head.flatten_params(),
            1e-5,
        );
        let err = max_relative_error(&analytic.flat[n_feat + n_label..], &numeric_domain);
        assert!(err < 1e-4, "domain head error {err}");
    }

    #[test]
    fn singleton_iada_is_byte_identical_to_ada() {
        let cfg = AdaTrainConfig {
            steps_per_stage: 40,
            eval_per_class: 50,
            ..AdaTrainConfig::default()
        };
        let src = moons(0.0, 0);
        let tgt = moons(30.0, 0);
        let (m1, s1) = train_ada(&src, &tgt, &cfg, 7).unwrap();
        let (m2, s2) = train_iada(&src, &[tgt], &cfg, 7).unwrap();
        let p1 = m1.params_flat();
        let p2 = m2.params_flat();
        assert_eq!(p1.len(), p2.len());
        for (a, b) in p1.iter().zip(&p2) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(s1, s2);
    }

    #[test]
    fn identical_stream_keeps_accuracy_flat() {
        // Three identical stages: per-seed spread across stages stays small.
        let cfg = AdaTrainConfig {
            steps_per_stage: 300,
            eval_per_class: 400,
            ..AdaTrainConfig::default()
        };
        let src = moons(0.0, 0);
        let stream = [moons(0.0, 0), moons(0.0, 0), moons(0.0, 0)];
        let mut spreads = Vec::new();
        for seed in [1, 2, 3] {
            let (_, stages) = train_iada(&src, &stream, &cfg, seed).unwrap();
            let accs: Vec<f64> = stages.iter().map(|s| s.tgt_acc).collect();
            let max = accs.iter().cloned().fold(f64::MIN, f64::max);
            let min = accs.iter().cloned().fold(f64::MAX, f64::min);
            spreads.push(max - min);
        }
        let mean_spread = spreads.iter().sum::<f64>() / spreads.len() as f64;
        assert!(mean_spread < 0.03, "mean spread {mean_spread}");
    }

    #[test]
    fn identical_domains_do_not_hurt_target_accuracy() {
        // tgt == src: adaptation must not cost more than 2 points.
        let cfg = AdaTrainConfig {
            steps_per_stage: 600,
            ..AdaTrainConfig::default()
        };
        let src = moons(0.0, 0);
        let (_, stages) = train_ada(&src, &src.clone(), &cfg, 5).unwrap();
        let s = &stages[0];
        assert!(
            s.tgt_acc >= s.baseline_tgt_acc - 0.02,
            "ada {} vs baseline {}",
            s.tgt_acc,
            s.baseline_tgt_acc
        );
    }
}
