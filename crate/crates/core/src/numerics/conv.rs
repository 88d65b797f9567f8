//! Two-dimensional cross-correlation with zero padding, its adjoint with
//! respect to the input, and its gradient with respect to the kernels.
//!
//! All three kernels work on the input unfolded into one row per kernel tap,
//! so every inner loop runs over all output positions contiguously.

use alloc::vec;
use alloc::vec::Vec;

use super::gemm::gemm_acc;
use super::tensor::Tensor;
use crate::error::{shape_err, Error, Result};

/// Static geometry of a convolution: channels, spatial sizes, kernel, stride
/// and padding. Output sizes are derived and validated at construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conv2dShape {
    pub in_channels: usize,
    pub in_height: usize,
    pub in_width: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    out_height: usize,
    out_width: usize,
}

fn out_extent(size: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    let padded = size + 2 * padding;
    if stride == 0 || kernel == 0 || padded < kernel || (padded - kernel) % stride != 0 {
        return Err(Error::Shape {
            op: "conv2d",
            expected: alloc::format!(
                "integral output size for extent {size}, kernel {kernel}, stride {stride}, padding {padding}"
            ),
            actual: alloc::format!("({padded} - {kernel}) / {stride}"),
        });
    }
    Ok((padded - kernel) / stride + 1)
}

/// Output index range `[lo, hi)` whose taps at kernel offset `k` land inside
/// an input of extent `size`.
#[inline]
fn valid_range(k: usize, size: usize, out: usize, stride: usize, padding: usize) -> (usize, usize) {
    let lo = if k >= padding {
        0
    } else {
        (padding - k).div_ceil(stride)
    };
    if size + padding <= k {
        return (0, 0);
    }
    let hi = ((size - 1 + padding - k) / stride + 1).min(out);
    (lo.min(hi), hi)
}

impl Conv2dShape {
    pub fn new(
        in_channels: usize,
        in_height: usize,
        in_width: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Result<Self> {
        let out_height = out_extent(in_height, kernel, stride, padding)?;
        let out_width = out_extent(in_width, kernel, stride, padding)?;
        Ok(Self {
            in_channels,
            in_height,
            in_width,
            out_channels,
            kernel,
            stride,
            padding,
            out_height,
            out_width,
        })
    }

    pub fn out_height(&self) -> usize {
        self.out_height
    }

    pub fn out_width(&self) -> usize {
        self.out_width
    }

    pub fn input_len(&self) -> usize {
        self.in_channels * self.in_height * self.in_width
    }

    pub fn output_len(&self) -> usize {
        self.out_channels * self.out_height * self.out_width
    }

    pub fn kernel_len(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel * self.kernel
    }

    pub fn input_shape(&self) -> [usize; 3] {
        [self.in_channels, self.in_height, self.in_width]
    }

    pub fn output_shape(&self) -> [usize; 3] {
        [self.out_channels, self.out_height, self.out_width]
    }

    pub fn kernel_shape(&self) -> [usize; 4] {
        [
            self.out_channels,
            self.in_channels,
            self.kernel,
            self.kernel,
        ]
    }

    /// Taps per kernel: `Cin·k·k`.
    pub fn patch_len(&self) -> usize {
        self.in_channels * self.kernel * self.kernel
    }

    /// Unfolds `input` into the values each kernel tap `(ci, ky, kx)` reads at
    /// each output position, zero where it falls in the padding. Tap-major
    /// stores one row per tap, otherwise one row per position.
    fn unfold(&self, input: &[f64], cols: &mut Vec<f64>, tap_major: bool) {
        let (h, w, k, s, p) = (
            self.in_height,
            self.in_width,
            self.kernel,
            self.stride,
            self.padding,
        );
        let (oh, ow) = (self.out_height, self.out_width);
        let (positions, taps) = (oh * ow, self.patch_len());
        cols.clear();
        cols.resize(taps * positions, 0.0);
        for ci in 0..self.in_channels {
            let plane = &input[ci * h * w..(ci + 1) * h * w];
            for ky in 0..k {
                let (oy0, oy1) = valid_range(ky, h, oh, s, p);
                for kx in 0..k {
                    let (ox0, ox1) = valid_range(kx, w, ow, s, p);
                    if ox0 >= ox1 {
                        continue;
                    }
                    let tap = (ci * k + ky) * k + kx;
                    for oy in oy0..oy1 {
                        let irow = &plane[(oy * s + ky - p) * w..][..w];
                        if tap_major {
                            let orow = &mut cols[tap * positions + oy * ow..][ox0..ox1];
                            if s == 1 {
                                orow.copy_from_slice(&irow[ox0 + kx - p..ox1 + kx - p]);
                            } else {
                                for (n, o) in orow.iter_mut().enumerate() {
                                    *o = irow[(ox0 + n) * s + kx - p];
                                }
                            }
                        } else {
                            for ox in ox0..ox1 {
                                cols[(oy * ow + ox) * taps + tap] = irow[ox * s + kx - p];
                            }
                        }
                    }
                }
            }
        }
    }

    /// Adds unfolded rows back onto the input positions they were read from.
    fn fold_acc(&self, cols: &[f64], out: &mut [f64]) {
        let (h, w, k, s, p) = (
            self.in_height,
            self.in_width,
            self.kernel,
            self.stride,
            self.padding,
        );
        let (oh, ow) = (self.out_height, self.out_width);
        let positions = oh * ow;
        for ci in 0..self.in_channels {
            let plane = &mut out[ci * h * w..(ci + 1) * h * w];
            for ky in 0..k {
                let (oy0, oy1) = valid_range(ky, h, oh, s, p);
                for kx in 0..k {
                    let (ox0, ox1) = valid_range(kx, w, ow, s, p);
                    if ox0 >= ox1 {
                        continue;
                    }
                    let row = &cols[((ci * k + ky) * k + kx) * positions..][..positions];
                    for oy in oy0..oy1 {
                        let irow = &mut plane[(oy * s + ky - p) * w..][..w];
                        let grow = &row[oy * ow + ox0..oy * ow + ox1];
                        if s == 1 {
                            for (i, g) in irow[ox0 + kx - p..ox1 + kx - p].iter_mut().zip(grow) {
                                *i += g;
                            }
                        } else {
                            for (n, g) in grow.iter().enumerate() {
                                irow[(ox0 + n) * s + kx - p] += g;
                            }
                        }
                    }
                }
            }
        }
    }

    /// `out += conv(input, kernels)`. `cols` is scratch space.
    pub fn forward_acc(
        &self,
        input: &[f64],
        kernels: &[f64],
        out: &mut [f64],
        cols: &mut Vec<f64>,
    ) {
        debug_assert_eq!(input.len(), self.input_len());
        debug_assert_eq!(kernels.len(), self.kernel_len());
        debug_assert_eq!(out.len(), self.output_len());
        self.unfold(input, cols, true);
        let positions = self.out_height * self.out_width;
        gemm_acc(
            self.out_channels,
            positions,
            self.patch_len(),
            kernels,
            cols,
            out,
        );
    }

    /// `grad_in += convᵀ(deltas)`, the exact adjoint of [`forward_acc`](Self::forward_acc).
    pub fn adjoint_acc(
        &self,
        deltas: &[f64],
        kernels: &[f64],
        grad_in: &mut [f64],
        cols: &mut Vec<f64>,
    ) {
        debug_assert_eq!(deltas.len(), self.output_len());
        debug_assert_eq!(kernels.len(), self.kernel_len());
        debug_assert_eq!(grad_in.len(), self.input_len());
        let positions = self.out_height * self.out_width;
        let r = self.patch_len();
        let co = self.out_channels;
        cols.clear();
        cols.resize(r * positions + r * co, 0.0);
        let (unfolded, kt) = cols.split_at_mut(r * positions);
        for (tap, row) in kt.chunks_exact_mut(co).enumerate() {
            for (o, v) in row.iter_mut().enumerate() {
                *v = kernels[o * r + tap];
            }
        }
        gemm_acc(r, positions, co, kt, deltas, unfolded);
        self.fold_acc(unfolded, grad_in);
    }

    /// `grad_k += ∂⟨conv(input, k), deltas⟩ / ∂k`. `cols` is scratch space.
    pub fn weight_grad_acc(
        &self,
        input: &[f64],
        deltas: &[f64],
        grad_k: &mut [f64],
        cols: &mut Vec<f64>,
    ) {
        debug_assert_eq!(input.len(), self.input_len());
        debug_assert_eq!(deltas.len(), self.output_len());
        debug_assert_eq!(grad_k.len(), self.kernel_len());
        self.unfold(input, cols, false);
        let positions = self.out_height * self.out_width;
        gemm_acc(
            self.out_channels,
            self.patch_len(),
            positions,
            deltas,
            cols,
            grad_k,
        );
    }
}

fn chw(t: &Tensor, op: &'static str) -> Result<[usize; 3]> {
    match t.shape() {
        [c, h, w] => Ok([*c, *h, *w]),
        s => Err(shape_err(op, "C×H×W", s)),
    }
}

fn kernel_dims(k: &Tensor, op: &'static str) -> Result<[usize; 4]> {
    match k.shape() {
        [co, ci, kh, kw] if kh == kw => Ok([*co, *ci, *kh, *kw]),
        s => Err(shape_err(op, "Cout×Cin×k×k", s)),
    }
}

/// Cross-correlation of a `Cin×H×W` input with `Cout×Cin×k×k` kernels.
pub fn conv2d(input: &Tensor, kernels: &Tensor, stride: usize, padding: usize) -> Result<Tensor> {
    let [c, h, w] = chw(input, "conv2d")?;
    let [co, ci, k, _] = kernel_dims(kernels, "conv2d")?;
    if ci != c {
        return Err(shape_err("conv2d", ci, c));
    }
    let geom = Conv2dShape::new(c, h, w, co, k, stride, padding)?;
    let mut out = vec![0.0; geom.output_len()];
    geom.forward_acc(input.data(), kernels.data(), &mut out, &mut Vec::new());
    Tensor::new(geom.output_shape().to_vec(), out)
}

/// Adjoint of [`conv2d`] with respect to its input. `input_hw` is the
/// spatial size of the forward input.
pub fn conv2d_adjoint_input(
    deltas: &Tensor,
    kernels: &Tensor,
    stride: usize,
    padding: usize,
    input_hw: (usize, usize),
) -> Result<Tensor> {
    let [dc, dh, dw] = chw(deltas, "conv2d_adjoint_input")?;
    let [co, ci, k, _] = kernel_dims(kernels, "conv2d_adjoint_input")?;
    let geom = Conv2dShape::new(ci, input_hw.0, input_hw.1, co, k, stride, padding)?;
    if [dc, dh, dw] != geom.output_shape() {
        return Err(shape_err(
            "conv2d_adjoint_input",
            geom.output_shape(),
            [dc, dh, dw],
        ));
    }
    let mut out = vec![0.0; geom.input_len()];
    geom.adjoint_acc(deltas.data(), kernels.data(), &mut out, &mut Vec::new());
    Tensor::new(geom.input_shape().to_vec(), out)
}

/// Gradient of `⟨conv2d(input, k), deltas⟩` with respect to `k`.
pub fn conv2d_weight_grad(
    input: &Tensor,
    deltas: &Tensor,
    stride: usize,
    padding: usize,
    kernel: usize,
) -> Result<Tensor> {
    let [c, h, w] = chw(input, "conv2d_weight_grad")?;
    let [dc, dh, dw] = chw(deltas, "conv2d_weight_grad")?;
    let geom = Conv2dShape::new(c, h, w, dc, kernel, stride, padding)?;
    if [dc, dh, dw] != geom.output_shape() {
        return Err(shape_err(
            "conv2d_weight_grad",
            geom.output_shape(),
            [dc, dh, dw],
        ));
    }
    let mut out = vec![0.0; geom.kernel_len()];
    geom.weight_grad_acc(input.data(), deltas.data(), &mut out, &mut Vec::new());
    Tensor::new(geom.kernel_shape().to_vec(), out)
}
