use alloc::vec;

use super::tensor::Tensor;
use crate::error::{shape_err, Result};

/// Geometry of non-overlapping average pooling over `C×H×W` maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AvgPoolShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub window: usize,
}

impl AvgPoolShape {
    pub fn new(channels: usize, height: usize, width: usize, window: usize) -> Result<Self> {
        if window == 0 || height % window != 0 || width % window != 0 {
            return Err(shape_err(
                "avgpool2d",
                alloc::format!("spatial dims divisible by window {window}"),
                [height, width],
            ));
        }
        Ok(Self {
            channels,
            height,
            width,
            window,
        })
    }

    pub fn output_shape(&self) -> [usize; 3] {
        [
            self.channels,
            self.height / self.window,
            self.width / self.window,
        ]
    }

    pub fn input_len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn output_len(&self) -> usize {
        self.output_shape().iter().product()
    }

    /// Overwrites `out` with window means of `input`.
    pub fn forward(&self, input: &[f64], out: &mut [f64]) {
        let (h, w, k) = (self.height, self.width, self.window);
        let (oh, ow) = (h / k, w / k);
        let inv = 1.0 / (k * k) as f64;
        for c in 0..self.channels {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut sum = 0.0;
                    for dy in 0..k {
                        let row = (c * h + oy * k + dy) * w + ox * k;
                        sum += input[row..row + k].iter().sum::<f64>();
                    }
                    out[(c * oh + oy) * ow + ox] = sum * inv;
                }
            }
        }
    }

    /// Overwrites `grad_in` with `deltas` spread uniformly over each window.
    pub fn adjoint(&self, deltas: &[f64], grad_in: &mut [f64]) {
        let (h, w, k) = (self.height, self.width, self.window);
        let (oh, ow) = (h / k, w / k);
        let inv = 1.0 / (k * k) as f64;
        for c in 0..self.channels {
            for y in 0..h {
                let drow = &deltas[(c * oh + y / k) * ow..(c * oh + y / k + 1) * ow];
                let grow = &mut grad_in[(c * h + y) * w..(c * h + y + 1) * w];
                for (x, g) in grow.iter_mut().enumerate() {
                    *g = drow[x / k] * inv;
                }
            }
        }
    }
}

fn geometry(t: &Tensor, window: usize) -> Result<AvgPoolShape> {
    match t.shape() {
        [c, h, w] => AvgPoolShape::new(*c, *h, *w, window),
        s => Err(shape_err("avgpool2d", "C×H×W", s)),
    }
}

pub fn avgpool2d(input: &Tensor, window: usize) -> Result<Tensor> {
    let geom = geometry(input, window)?;
    let mut out = vec![0.0; geom.output_len()];
    geom.forward(input.data(), &mut out);
    Tensor::new(geom.output_shape().to_vec(), out)
}

/// Adjoint of [`avgpool2d`]; `input_shape` is the forward input's `C×H×W`.
pub fn avgpool2d_adjoint(
    deltas: &Tensor,
    window: usize,
    input_shape: [usize; 3],
) -> Result<Tensor> {
    let geom = AvgPoolShape::new(input_shape[0], input_shape[1], input_shape[2], window)?;
    if deltas.shape() != geom.output_shape() {
        return Err(shape_err(
            "avgpool2d_adjoint",
            geom.output_shape(),
            deltas.shape(),
        ));
    }
    let mut out = vec![0.0; geom.input_len()];
    geom.adjoint(deltas.data(), &mut out);
    Tensor::new(input_shape.to_vec(), out)
}
