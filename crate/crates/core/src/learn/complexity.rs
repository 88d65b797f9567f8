//! Analytic memory and multiply counts of the learning rules for a
//! fully-connected network of `L` layers, `N` neurons per layer and `T`
//! time-steps.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LearningRule {
    /// Unrolled backpropagation through space and time.
    Stbp,
    /// Trace-based rule, weights only.
    StopW,
    /// Trace-based rule, weights, thresholds and leakages.
    StopWtl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Complexity {
    /// Stored scalars.
    pub memory: u128,
    pub multiplies: u128,
}

pub fn complexity_estimate(
    layers: u64,
    neurons: u64,
    time_steps: u64,
    rule: LearningRule,
) -> Complexity {
    let (l, n, t) = (layers as u128, neurons as u128, time_steps as u128);
    let (memory, per_neuron_step) = match rule {
        LearningRule::Stbp => (2 * t * l * n, 2 * n + 7),
        LearningRule::StopW => (3 * l * n, 2 * n + 2),
        LearningRule::StopWtl => (5 * l * n, 2 * n + 6),
    };
    Complexity {
        memory,
        multiplies: t * l * n * per_neuron_step,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memory_ratio_at_six_steps() {
        let stbp = complexity_estimate(4, 100, 6, LearningRule::Stbp);
        let stop = complexity_estimate(4, 100, 6, LearningRule::StopW);
        assert_eq!(stbp.memory, 4 * stop.memory);
    }

    #[test]
    fn synergistic_memory_ratio() {
        for t in [1, 6, 20] {
            let w = complexity_estimate(3, 50, t, LearningRule::StopW);
            let wtl = complexity_estimate(3, 50, t, LearningRule::StopWtl);
            assert_eq!(wtl.memory * 3, w.memory * 5);
        }
    }

    #[test]
    fn multiply_ratio_wide_layers() {
        let stbp = complexity_estimate(2, 1000, 6, LearningRule::Stbp);
        let stop = complexity_estimate(2, 1000, 6, LearningRule::StopW);
        let ratio = stbp.multiplies as f64 / stop.multiplies as f64;
        assert!((ratio - 2007.0 / 2002.0).abs() < 1e-15);
    }
}
