use super::tape::{loss, UnrolledTape};
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::gradients::ParamCoord;
use crate::learn::LossKind;
use crate::lif::SpikeMode;
use crate::topology::{NetworkParams, NetworkSpec};

/// Default step for parameter perturbations.
pub const DEFAULT_STEP: f64 = 1e-5;

/// `(f(x+h) − f(x−h)) / 2h`.
pub fn central_difference(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Total loss `Σ_t E[t]` of one sample under the relaxed dynamics.
pub fn relaxed_loss(
    spec: &NetworkSpec,
    params: &NetworkParams,
    sample: &Sample,
    kind: LossKind,
) -> f64 {
    let tape = UnrolledTape::record(spec, params, &sample.frames, SpikeMode::Soft);
    let top = spec.layers.len() - 1;
    tape.steps
        .iter()
        .map(|step| loss(&step[top].output, sample.label, kind).0)
        .sum()
}

/// Central-difference estimate of `∂E*/∂v` for one stored parameter.
pub fn finite_diff_gradient(
    spec: &NetworkSpec,
    params: &NetworkParams,
    sample: &Sample,
    coord: ParamCoord,
    h: f64,
    spike_mode: SpikeMode,
    kind: LossKind,
) -> Result<f64> {
    if spike_mode != SpikeMode::Soft {
        return Err(Error::UnsupportedMode(
            "finite differences need soft spikes; the hard step is piecewise constant".into(),
        ));
    }
    if !(h > 0.0) {
        return Err(Error::Parameter(alloc::format!(
            "step must be positive, got {h}"
        )));
    }
    let mut p = params.clone();
    let v = coord.get(params);
    Ok(central_difference(
        |x| {
            coord.set(&mut p, x);
            relaxed_loss(spec, &p, sample, kind)
        },
        v,
        h,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let d = central_difference(|x| x * x, 1.0, 1e-5);
        assert!((d - 2.0).abs() < 1e-8);
    }

    #[test]
    fn symmetric() {
        assert!(central_difference(|x| libm::cos(x), 0.0, 1e-5).abs() < 1e-12);
    }

    #[test]
    fn second_order() {
        let f = |x: f64| libm::exp(x) * libm::sin(3.0 * x);
        let exact = libm::exp(0.4) * (libm::sin(1.2) + 3.0 * libm::cos(1.2));
        let e1 = (central_difference(f, 0.4, 1e-2) - exact).abs();
        let e2 = (central_difference(f, 0.4, 5e-3) - exact).abs();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
    }
}
