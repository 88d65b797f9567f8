//! Dense 64-bit kernels: matrix products, convolution and its adjoints,
//! average pooling.

mod conv;
mod dense;
mod gemm;
mod pool;
mod tensor;

pub use conv::{conv2d, conv2d_adjoint_input, conv2d_weight_grad, Conv2dShape};
pub use dense::{matmul, matvec_acc, matvec_transpose_acc, outer_acc};
pub use pool::{avgpool2d, avgpool2d_adjoint, AvgPoolShape};
pub use tensor::{axpy, dot, Tensor};
