//! Leaky integrate-and-fire dynamics with reset by subtraction, surrogate
//! derivatives of the firing step, direct input coding and spike-count
//! decoding.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{shape_err, Error, Result};
use crate::numerics::Tensor;

/// Smooth stand-in for the derivative of the Heaviside firing step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SurrogateKind {
    /// `e^(−|x|)`
    #[default]
    ExpAbs,
    /// `1 / (1 + π²x²)`
    InvQuad,
}

impl SurrogateKind {
    #[inline]
    pub fn grad(self, x: f64) -> f64 {
        match self {
            SurrogateKind::ExpAbs => libm::exp(-x.abs()),
            SurrogateKind::InvQuad => 1.0 / (1.0 + PI * PI * x * x),
        }
    }

    /// Antiderivative of [`grad`](Self::grad) vanishing at `−∞`; the smooth
    /// firing function used in soft mode. Its range is `(0, 2)` for
    /// `ExpAbs` (the surrogate integrates to 2) and `(0, 1)` for `InvQuad`.
    #[inline]
    pub fn soft_step(self, x: f64) -> f64 {
        match self {
            SurrogateKind::ExpAbs => {
                if x < 0.0 {
                    libm::exp(x)
                } else {
                    2.0 - libm::exp(-x)
                }
            }
            SurrogateKind::InvQuad => 0.5 + libm::atan(PI * x) / PI,
        }
    }
}

/// How spikes are emitted from the membrane potential.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SpikeMode {
    /// Heaviside step, `H(0) = 1`.
    #[default]
    Hard,
    /// Smooth relaxation whose derivative is exactly the surrogate. Used by
    /// finite-difference checks; outputs lie strictly inside `(0, 1)`.
    Soft,
}

impl SpikeMode {
    #[inline]
    pub fn fire(self, x: f64, surrogate: SurrogateKind) -> f64 {
        match self {
            SpikeMode::Hard => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SpikeMode::Soft => surrogate.soft_step(x),
        }
    }
}

pub fn surrogate_eval(x: &Tensor, kind: SurrogateKind) -> Tensor {
    let data = x.data().iter().map(|v| kind.grad(*v)).collect();
    Tensor::new(x.shape().to_vec(), data).expect("shape preserved")
}

/// Membrane potentials and most recent spikes of one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LifState {
    pub potentials: Tensor,
    pub spikes: Tensor,
}

impl LifState {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            potentials: Tensor::zeros(shape),
            spikes: Tensor::zeros(shape),
        }
    }

    pub fn reset(&mut self) {
        self.potentials.fill(0.0);
        self.spikes.fill(0.0);
    }
}

/// Neurons sharing one threshold. Thresholds are stored per channel for
/// convolutional maps (`neurons / thresholds` consecutive neurons each) and
/// per neuron otherwise.
#[inline]
pub(crate) fn threshold_group(neurons: usize, thresholds: usize) -> Result<usize> {
    if thresholds == 0 || neurons % thresholds != 0 {
        return Err(shape_err(
            "thresholds",
            alloc::format!("divisor of {neurons}"),
            thresholds,
        ));
    }
    Ok(neurons / thresholds)
}

pub(crate) fn check_params(thresholds: &[f64], leakage: f64) -> Result<()> {
    if let Some(bad) = thresholds.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Parameter(alloc::format!(
            "threshold must be positive, got {bad}"
        )));
    }
    if !(0.0..=1.0).contains(&leakage) {
        return Err(Error::Parameter(alloc::format!(
            "leakage must lie in [0, 1], got {leakage}"
        )));
    }
    Ok(())
}

/// Advances one layer by one time-step:
/// `U[t] = α(U[t−1] − θ·s[t−1]) + input`, `s[t] = H(U[t] − θ)`.
pub fn lif_step(
    state: &mut LifState,
    synaptic_input: &[f64],
    thresholds: &[f64],
    leakage: f64,
    surrogate: SurrogateKind,
    mode: SpikeMode,
) -> Result<()> {
    let n = state.potentials.len();
    if synaptic_input.len() != n || state.spikes.len() != n {
        return Err(shape_err("lif_step", n, synaptic_input.len()));
    }
    let group = threshold_group(n, thresholds.len())?;
    check_params(thresholds, leakage)?;
    let u = state.potentials.data_mut();
    let s = state.spikes.data_mut();
    for (g, &theta) in thresholds.iter().enumerate() {
        let range = g * group..(g + 1) * group;
        for ((uj, sj), inp) in u[range.clone()]
            .iter_mut()
            .zip(&mut s[range.clone()])
            .zip(&synaptic_input[range])
        {
            *uj = leakage * (*uj - theta * *sj) + inp;
            *sj = mode.fire(*uj - theta, surrogate);
        }
    }
    Ok(())
}

/// Input frames for one sample.
#[derive(Clone, Debug, PartialEq)]
pub enum Frames {
    /// One frame presented at every one of `steps` time-steps (direct coding).
    Repeated { frame: Tensor, steps: usize },
    /// A distinct frame per time-step (event pseudo-frames).
    Sequence(Vec<Tensor>),
}

impl Frames {
    pub fn len(&self) -> usize {
        match self {
            Frames::Repeated { steps, .. } => *steps,
            Frames::Sequence(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, t: usize) -> Option<&Tensor> {
        match self {
            Frames::Repeated { frame, steps } => (t < *steps).then_some(frame),
            Frames::Sequence(f) => f.get(t),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tensor> {
        (0..self.len()).map(move |t| self.get(t).expect("in range"))
    }

    pub fn frame_shape(&self) -> Option<&[usize]> {
        self.get(0).map(|f| f.shape())
    }
}

/// Direct coding: pixels rescaled to `[0, 1]` and presented unchanged at every
/// time-step as fractional spikes.
pub fn encode_direct(raw: &Tensor, max_value: f64, steps: usize) -> Result<Frames> {
    if steps == 0 {
        return Err(Error::Encoding("time-step count must be at least 1".into()));
    }
    if !(max_value > 0.0) {
        return Err(Error::Encoding(alloc::format!(
            "max value must be positive, got {max_value}"
        )));
    }
    if let Some(bad) = raw
        .data()
        .iter()
        .find(|v| !(**v >= 0.0 && **v <= max_value))
    {
        return Err(Error::Encoding(alloc::format!(
            "pixel {bad} outside [0, {max_value}]"
        )));
    }
    Ok(Frames::Repeated {
        frame: raw.scaled(1.0 / max_value),
        steps,
    })
}

/// Index of the largest count; ties go to the lowest index.
pub fn argmax_count(counts: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &c) in counts.iter().enumerate() {
        match best {
            Some((_, b)) if c <= b => {}
            _ => best = Some((i, c)),
        }
    }
    best.map(|(i, _)| i)
}

/// Class whose output neuron fired the most spikes over the presentation.
pub fn decode_prediction(output_spikes: &[Tensor]) -> Result<usize> {
    let first = output_spikes
        .first()
        .ok_or_else(|| Error::Decoding("empty output spike sequence".into()))?;
    if first.is_empty() {
        return Err(Error::Decoding("output layer has no neurons".into()));
    }
    let mut counts = alloc::vec![0.0; first.len()];
    for frame in output_spikes {
        if frame.len() != counts.len() {
            return Err(shape_err("decode_prediction", counts.len(), frame.len()));
        }
        for (c, s) in counts.iter_mut().zip(frame.data()) {
            *c += s;
        }
    }
    Ok(argmax_count(&counts).expect("nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn run(inputs: &[f64], theta: f64, alpha: f64) -> Vec<(f64, f64)> {
        let mut st = LifState::zeros(&[1]);
        inputs
            .iter()
            .map(|x| {
                lif_step(
                    &mut st,
                    &[*x],
                    &[theta],
                    alpha,
                    SurrogateKind::ExpAbs,
                    SpikeMode::Hard,
                )
                .unwrap();
                (st.potentials.data()[0], st.spikes.data()[0])
            })
            .collect()
    }

    #[test]
    fn soft_derivative_is_surrogate() {
        let h = 1e-5;
        for kind in [SurrogateKind::ExpAbs, SurrogateKind::InvQuad] {
            for i in 0..=600 {
                let x = -3.0 + i as f64 * 0.01;
                if kind == SurrogateKind::ExpAbs && x.abs() < 2.0 * h {
                    // e^(−|x|) has a kink at 0; the central difference there is off by h/2
                    continue;
                }
                let d = (SpikeMode::Soft.fire(x + h, kind) - SpikeMode::Soft.fire(x - h, kind))
                    / (2.0 * h);
                assert!((d - kind.grad(x)).abs() < 1e-6, "{kind:?} at {x}");
            }
        }
    }

    #[test]
    fn soft_step_bounds() {
        for x in [-40.0, -1.0, 0.0, 1.0, 30.0] {
            let e = SurrogateKind::ExpAbs.soft_step(x);
            let q = SurrogateKind::InvQuad.soft_step(x);
            assert!(e > 0.0 && e < 2.0 && q > 0.0 && q < 1.0);
        }
        assert_eq!(SurrogateKind::ExpAbs.soft_step(0.0), 1.0);
    }

    #[test]
    fn silent_without_input() {
        assert!(run(&[0.0; 8], 1.0, 0.5)
            .iter()
            .all(|&(u, s)| u == 0.0 && s == 0.0));
    }

    #[test]
    fn steady_firing_under_unit_drive() {
        assert_eq!(
            run(&[1.0; 3], 1.0, 0.5),
            vec![(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)]
        );
    }

    #[test]
    fn single_pulse_decays() {
        assert_eq!(
            run(&[1.5, 0.0, 0.0], 1.0, 0.5),
            vec![(1.5, 1.0), (0.25, 0.0), (0.125, 0.0)]
        );
    }

    #[test]
    fn fires_at_exact_threshold() {
        assert_eq!(run(&[1.0], 1.0, 0.0), vec![(1.0, 1.0)]);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut st = LifState::zeros(&[2]);
        let sg = SurrogateKind::ExpAbs;
        assert!(lif_step(&mut st, &[0.0, 0.0], &[0.0, 1.0], 0.5, sg, SpikeMode::Hard).is_err());
        assert!(lif_step(&mut st, &[0.0, 0.0], &[1.0, 1.0], 1.5, sg, SpikeMode::Hard).is_err());
        assert!(lif_step(&mut st, &[0.0], &[1.0, 1.0], 0.5, sg, SpikeMode::Hard).is_err());
    }

    #[test]
    fn shared_threshold_groups() {
        let mut st = LifState::zeros(&[2, 1, 2]);
        lif_step(
            &mut st,
            &[0.5, 0.6, 0.5, 0.6],
            &[0.55, 0.45],
            1.0,
            SurrogateKind::ExpAbs,
            SpikeMode::Hard,
        )
        .unwrap();
        assert_eq!(st.spikes.data(), &[0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn surrogate_values() {
        assert_eq!(SurrogateKind::ExpAbs.grad(0.0), 1.0);
        assert!((SurrogateKind::ExpAbs.grad(0.5) - 0.606531).abs() < 1e-6);
        assert!((SurrogateKind::InvQuad.grad(1.0) - 0.091999).abs() < 1e-6);
        assert_eq!(SurrogateKind::InvQuad.grad(0.0), 1.0);
        let t = surrogate_eval(&Tensor::from_vec(vec![0.0, 0.5]), SurrogateKind::ExpAbs);
        assert_eq!(t.data()[0], 1.0);
    }

    #[test]
    fn direct_coding() {
        let raw = Tensor::from_vec(vec![255.0, 0.0, 128.0]);
        let frames = encode_direct(&raw, 255.0, 4).unwrap();
        assert_eq!(frames.len(), 4);
        for f in frames.iter() {
            assert_eq!(f.data()[0], 1.0);
            assert_eq!(f.data()[1], 0.0);
            assert!((f.data()[2] - 0.501961).abs() < 1e-6);
        }
        assert!(encode_direct(&Tensor::from_vec(vec![-1.0]), 255.0, 1).is_err());
        assert!(encode_direct(&Tensor::from_vec(vec![256.0]), 255.0, 1).is_err());
        assert!(encode_direct(&raw, 255.0, 0).is_err());
    }

    #[test]
    fn decoding() {
        let counts = |c: &[f64]| vec![Tensor::from_vec(c.to_vec())];
        assert_eq!(decode_prediction(&counts(&[3., 5., 2.])).unwrap(), 1);
        assert_eq!(decode_prediction(&counts(&[4., 4., 1.])).unwrap(), 0);
        assert_eq!(decode_prediction(&counts(&[7.])).unwrap(), 0);
        assert!(decode_prediction(&[]).is_err());
    }
}
