//! Sinusoidal position embeddings and their fusion with frame features.

use ndarray::{s, Array2, ArrayView2};

use crate::error::{MggError, Result};
use crate::seqgrad::Real;

/// Fixed `l_s x d_p` table. Row `r` embeds frame index `n = r + 1`:
/// even columns `2i` hold `sin(n / 10000^(2i/d_p))`, odd columns the cosine.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionEmbedding {
    table: Array2<f64>,
}

impl PositionEmbedding {
    pub fn dim(&self) -> usize {
        self.table.ncols()
    }

    pub fn len(&self) -> usize {
        self.table.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.table.nrows() == 0
    }

    pub fn table(&self) -> &Array2<f64> {
        &self.table
    }
}

pub fn build_embedding(l_s: usize, d_p: usize) -> Result<PositionEmbedding> {
    if d_p == 0 || d_p % 2 != 0 {
        return Err(MggError::Invalid(format!("embedding dimension must be even and positive, got {d_p}")));
    }
    if l_s == 0 {
        return Err(MggError::Invalid("embedding length must be >= 1".into()));
    }
    let mut table = Array2::<f64>::zeros((l_s, d_p));
    for r in 0..l_s {
        let n = (r + 1) as f64;
        for i in 0..d_p / 2 {
            let angle = n / 10000f64.powf((2 * i) as f64 / d_p as f64);
            table[[r, 2 * i]] = angle.sin();
            table[[r, 2 * i + 1]] = angle.cos();
        }
    }
    Ok(PositionEmbedding { table })
}

/// Fused `l_s x (d_f + d_p)` representation: features first, then embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct FusedRepresentation<F> {
    pub data: Array2<F>,
    pub feature_dim: usize,
}

pub fn fuse<F: Real>(features: ArrayView2<'_, F>, emb: &PositionEmbedding) -> Result<FusedRepresentation<F>> {
    let (l_s, d_f) = features.dim();
    if l_s != emb.len() {
        return Err(MggError::shape("fuse", format!("{l_s} feature frames vs {} embedding rows", emb.len())));
    }
    let mut data = Array2::<F>::zeros((l_s, d_f + emb.dim()));
    data.slice_mut(s![.., ..d_f]).assign(&features);
    data.slice_mut(s![.., d_f..]).assign(&emb.table().mapv(F::from_f64));
    Ok(FusedRepresentation { data, feature_dim: d_f })
}

/// Builds the trunk input, skipping the embedding when `use_position` is off.
pub fn representation<F: Real>(
    features: ArrayView2<'_, F>,
    d_p: usize,
    use_position: bool,
) -> Result<FusedRepresentation<F>> {
    if use_position {
        fuse(features, &build_embedding(features.nrows(), d_p)?)
    } else {
        Ok(FusedRepresentation { data: features.to_owned(), feature_dim: features.ncols() })
    }
}
