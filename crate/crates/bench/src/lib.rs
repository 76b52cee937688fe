//! Fixtures shared by the benchmarks.

use pnn_core::{Complex64, Mode, MultiIndex, NeuronSet};

/// Frequency-mode energy `3 sin(πx₁) + cos(πx₂) + 2 cos(2πx₂)`.
pub fn trigonometric_energy() -> NeuronSet {
    NeuronSet::from_neurons(
        Mode::Frequency,
        2,
        0.0,
        [
            (vec![1, 0], Complex64::new(0.0, 1.5)),
            (vec![-1, 0], Complex64::new(0.0, -1.5)),
            (vec![0, 1], Complex64::new(0.5, 0.0)),
            (vec![0, -1], Complex64::new(0.5, 0.0)),
            (vec![0, 2], Complex64::new(1.0, 0.0)),
            (vec![0, -2], Complex64::new(1.0, 0.0)),
        ]
        .map(|(a, v)| (MultiIndex::new(a), v)),
    )
    .expect("valid neurons")
}
