use ndarray::Array2;

use super::{encode_offsets, AnchorGrid, LabelAssignment, Minibatch};
use crate::error::{MggError, Result};
use crate::seqgrad::{Graph, Real, Var};

/// Weight of the regression term relative to classification.
pub const SPP_REGRESSION_WEIGHT: f64 = 0.001;

#[derive(Clone, Copy, Debug)]
pub struct SppLoss {
    pub total: Var,
    pub classification: Var,
    pub regression: Option<Var>,
}

/// `2N x 1` column of `(t_c*, t_l*)` pairs; zeros where no target exists.
pub fn regression_targets(grid: &AnchorGrid, labels: &LabelAssignment) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((2 * grid.len(), 1));
    for (i, (anchor, label)) in grid.anchors.iter().zip(&labels.labels).enumerate() {
        if let Some(gt) = &label.matched_gt {
            let o = encode_offsets(anchor, gt)?;
            out[[2 * i, 0]] = o.t_c;
            out[[2 * i + 1, 0]] = o.t_l;
        }
    }
    Ok(out)
}

/// `(1/N_cls) sum CE(p_i, p_i*) + gamma (1/N_reg) sum_{positives} smoothL1(t_i - t_i*)`
/// over the sampled anchors. `scores` is `N x 1`, `offsets` is `2N x 1`.
pub fn spp_loss<F: Real>(
    graph: &mut Graph<F>,
    scores: Var,
    offsets: Var,
    targets: &Array2<f64>,
    batch: &Minibatch,
    gamma: f64,
) -> Result<SppLoss> {
    let n = graph.value(scores).nrows();
    if graph.value(offsets).nrows() != 2 * n || targets.nrows() != 2 * n {
        return Err(MggError::shape(
            "spp_loss",
            format!("{n} scores, {} offsets, {} targets", graph.value(offsets).nrows(), targets.nrows()),
        ));
    }
    if batch.is_empty() {
        return Err(MggError::Invalid("spp_loss: empty minibatch".into()));
    }
    let mut cls_target = Array2::<F>::zeros((n, 1));
    let mut cls_weight = Array2::<F>::zeros((n, 1));
    for &i in &batch.positives {
        cls_target[[i, 0]] = F::one();
        cls_weight[[i, 0]] = F::one();
    }
    for &i in &batch.negatives {
        cls_weight[[i, 0]] = F::one();
    }
    let classification = graph.bce(scores, cls_target, cls_weight, F::from_f64(batch.len() as f64))?;

    if batch.positives.is_empty() {
        return Ok(SppLoss { total: classification, classification, regression: None });
    }
    let mut reg_weight = Array2::<F>::zeros((2 * n, 1));
    for &i in &batch.positives {
        reg_weight[[2 * i, 0]] = F::one();
        reg_weight[[2 * i + 1, 0]] = F::one();
    }
    let reg_target = targets.mapv(F::from_f64);
    let regression =
        graph.smooth_l1(offsets, reg_target, reg_weight, F::from_f64(batch.positives.len() as f64))?;
    let scaled = graph.scale(regression, F::from_f64(gamma))?;
    let total = graph.add(classification, scaled)?;
    Ok(SppLoss { total, classification, regression: Some(regression) })
}
