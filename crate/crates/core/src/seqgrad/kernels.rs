use ndarray::{s, Array2, ArrayView2};

use super::{Padding, Real};
use crate::error::{MggError, Result};

/// Index mapping between a long sequence and the short sequence produced by
/// a strided convolution over it. Transposed convolution uses the same
/// mapping in the opposite direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeometry {
    pub long_len: usize,
    pub short_len: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad_left: usize,
}

impl ConvGeometry {
    /// Geometry of a convolution reading `input_len` frames.
    pub fn conv(input_len: usize, kernel: usize, stride: usize, padding: Padding) -> Result<Self> {
        if stride == 0 || kernel == 0 {
            return Err(MggError::Invalid("kernel and stride must be >= 1".into()));
        }
        match padding {
            Padding::Same => {
                let short_len = input_len.div_ceil(stride);
                let total = ((short_len - 1) * stride + kernel).saturating_sub(input_len);
                Ok(ConvGeometry { long_len: input_len, short_len, kernel, stride, pad_left: total / 2 })
            }
            Padding::Valid => {
                if input_len < kernel {
                    return Err(MggError::shape(
                        "conv1d",
                        format!("valid padding needs time >= kernel, got {input_len} < {kernel}"),
                    ));
                }
                let short_len = (input_len - kernel) / stride + 1;
                Ok(ConvGeometry { long_len: input_len, short_len, kernel, stride, pad_left: 0 })
            }
        }
    }

    /// Geometry of a transposed convolution upscaling `input_len` frames by
    /// `factor`; it is the adjoint of the `same` convolution from
    /// `factor * input_len` frames down to `input_len`.
    pub fn deconv(input_len: usize, kernel: usize, factor: usize) -> Result<Self> {
        let g = Self::conv(input_len * factor, kernel, factor, Padding::Same)?;
        debug_assert_eq!(g.short_len, input_len);
        Ok(g)
    }

    #[inline]
    fn source(&self, t: usize, j: usize) -> Option<usize> {
        let pos = (t * self.stride + j) as isize - self.pad_left as isize;
        (pos >= 0 && (pos as usize) < self.long_len).then_some(pos as usize)
    }
}

/// Unfold `long` (`long_len x c`) into `short_len x (kernel * c)`, tap-major.
pub(crate) fn im2col<F: Real>(long: ArrayView2<'_, F>, geom: &ConvGeometry) -> Array2<F> {
    let c = long.ncols();
    let mut cols = Array2::<F>::zeros((geom.short_len, geom.kernel * c));
    for t in 0..geom.short_len {
        for j in 0..geom.kernel {
            if let Some(src) = geom.source(t, j) {
                cols.slice_mut(s![t, j * c..(j + 1) * c]).assign(&long.row(src));
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatter-add columns back onto a `long_len x c` matrix.
pub(crate) fn col2im<F: Real>(cols: ArrayView2<'_, F>, geom: &ConvGeometry, c: usize) -> Array2<F> {
    debug_assert_eq!(cols.ncols(), geom.kernel * c);
    let mut long = Array2::<F>::zeros((geom.long_len, c));
    for t in 0..geom.short_len {
        for j in 0..geom.kernel {
            if let Some(dst) = geom.source(t, j) {
                let mut row = long.row_mut(dst);
                row += &cols.slice(s![t, j * c..(j + 1) * c]);
            }
        }
    }
    long
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn same_padding_lengths() {
        let g = ConvGeometry::conv(8, 3, 2, Padding::Same).unwrap();
        assert_eq!(g.short_len, 4);
        let g = ConvGeometry::conv(7, 5, 1, Padding::Same).unwrap();
        assert_eq!((g.short_len, g.pad_left), (7, 2));
        let g = ConvGeometry::conv(9, 3, 2, Padding::Same).unwrap();
        assert_eq!(g.short_len, 5);
    }

    #[test]
    fn col2im_is_adjoint_of_im2col() {
        let x = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0], [9.0, 10.0]];
        let g = ConvGeometry::conv(5, 3, 2, Padding::Same).unwrap();
        let cols = im2col(x.view(), &g);
        let y = Array2::from_shape_fn(cols.dim(), |(i, j)| (i * 7 + j * 3) as f64 * 0.1 - 1.0);
        let lhs = (&cols * &y).sum();
        let rhs = (&x * &col2im(y.view(), &g, 2)).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
