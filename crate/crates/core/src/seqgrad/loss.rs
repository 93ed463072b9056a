use ndarray::{Array2, Zip};

use super::graph::{Graph, Op, Var};
use super::Real;
use crate::error::{MggError, Result};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before taking logs.
pub const PROB_EPS: f64 = 1e-7;

/// `0.5 x^2` for `|x| < 1`, `|x| - 0.5` otherwise.
pub fn smooth_l1_value(x: f64) -> f64 {
    if x.abs() < 1.0 {
        0.5 * x * x
    } else {
        x.abs() - 0.5
    }
}

/// Inverse class frequency weights `(w_pos, w_neg)` over the entries with
/// `mask = true`: `w = N / (2 * N_class)`, so a 50/50 split gives unit
/// weights. An absent class gets weight 0.
pub fn inverse_frequency_weights(labels: &[bool], mask: &[bool]) -> (f64, f64) {
    debug_assert_eq!(labels.len(), mask.len());
    let (mut n, mut pos) = (0usize, 0usize);
    for (&l, &m) in labels.iter().zip(mask) {
        if m {
            n += 1;
            pos += l as usize;
        }
    }
    let neg = n - pos;
    let w = |k: usize| if k == 0 { 0.0 } else { n as f64 / (2.0 * k as f64) };
    (w(pos), w(neg))
}

impl<F: Real> Graph<F> {
    fn check_loss_inputs(
        &self,
        op: &'static str,
        pred: Var,
        target: &Array2<F>,
        weight: &Array2<F>,
        norm: F,
    ) -> Result<()> {
        let dim = self.value(pred).dim();
        if target.dim() != dim || weight.dim() != dim {
            return Err(MggError::shape(
                op,
                format!("pred {:?}, target {:?}, weight {:?}", dim, target.dim(), weight.dim()),
            ));
        }
        if !(norm > F::zero()) {
            return Err(MggError::Invalid(format!("{op}: normaliser must be positive, got {norm}")));
        }
        Ok(())
    }

    /// `-(1/norm) * sum w * (t ln p + (1 - t) ln(1 - p))` with clamped `p`.
    pub fn bce(&mut self, pred: Var, target: Array2<F>, weight: Array2<F>, norm: F) -> Result<Var> {
        self.check_loss_inputs("bce", pred, &target, &weight, norm)?;
        let eps = F::from_f64(PROB_EPS);
        let one = F::one();
        let mut total = F::zero();
        Zip::from(self.value(pred)).and(&target).and(&weight).for_each(|&p, &t, &w| {
            if w != F::zero() {
                let p = p.max(eps).min(one - eps);
                total += w * (t * p.ln() + (one - t) * (one - p).ln());
            }
        });
        let out = Array2::from_elem((1, 1), -total / norm);
        self.push(out, Op::Bce { pred, target, weight, norm, eps }, &[pred])
    }

    /// Class-weighted binary cross-entropy averaged over the valid entries
    /// (`mask` nonzero; all entries when `mask` is `None`).
    pub fn weighted_bce(
        &mut self,
        pred: Var,
        target: &Array2<F>,
        pos_weight: F,
        neg_weight: F,
        mask: Option<&Array2<F>>,
    ) -> Result<Var> {
        let dim = self.value(pred).dim();
        if target.dim() != dim || mask.is_some_and(|m| m.dim() != dim) {
            return Err(MggError::shape("weighted_bce", format!("pred {dim:?}, target {:?}", target.dim())));
        }
        let mut weight = target.mapv(|t| if t > F::from_f64(0.5) { pos_weight } else { neg_weight });
        let mut count = target.len();
        if let Some(m) = mask {
            Zip::from(&mut weight).and(m).for_each(|w, &mv| {
                if mv == F::zero() {
                    *w = F::zero();
                }
            });
            count = m.iter().filter(|v| **v != F::zero()).count();
        }
        let norm = F::from_f64(count.max(1) as f64);
        self.bce(pred, target.clone(), weight, norm)
    }

    /// `(1/norm) * sum w * smooth_l1(pred - target)`.
    pub fn smooth_l1(&mut self, pred: Var, target: Array2<F>, weight: Array2<F>, norm: F) -> Result<Var> {
        self.check_loss_inputs("smooth_l1", pred, &target, &weight, norm)?;
        if target.iter().chain(self.value(pred).iter()).any(|v| !v.is_finite()) {
            return Err(MggError::Invalid("smooth_l1: non-finite input".into()));
        }
        let mut total = F::zero();
        Zip::from(self.value(pred)).and(&target).and(&weight).for_each(|&p, &t, &w| {
            total += w * F::from_f64(smooth_l1_value((p - t).as_f64()));
        });
        let out = Array2::from_elem((1, 1), total / norm);
        self.push(out, Op::SmoothL1 { pred, target, weight, norm }, &[pred])
    }
}
