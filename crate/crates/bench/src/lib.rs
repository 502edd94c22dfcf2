//! Fixtures shared by the benchmarks under `benches/`.

use vpt_core::singularity::{ratio_model, DeltaSequence, Provenance};
use vpt_core::BigReal;

/// Noise-free deviations `exp(la - a cos(theta) t) cos(a sin(theta) t + phase)`, `t = N^(1/3)`.
pub fn synthetic_deltas(orders: std::ops::RangeInclusive<usize>) -> DeltaSequence {
    let (la, a, theta, phase) = (2.0_f64, 10.4_f64, -0.467_f64, 1.0_f64);
    let data: Vec<(usize, f64)> = orders
        .map(|n| {
            let t = (n as f64).cbrt();
            (
                n,
                (la - a * theta.cos() * t).exp() * (a * theta.sin() * t + phase).cos(),
            )
        })
        .collect();
    DeltaSequence::from_signed(&data, Provenance::Oracle).expect("finite data")
}

/// Ratios `R_0 .. R_{count-1}` of the conjugate-pair model.
pub fn synthetic_ratios(count: usize) -> Vec<BigReal> {
    (0..count)
        .map(|n| BigReal::from_f64(ratio_model(n, 1.0 / 0.117, -0.467, -0.6).expect("no pole"), 30))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_requested_sizes() {
        assert_eq!(synthetic_deltas(38..=122).len(), 85);
        assert_eq!(synthetic_ratios(22).len(), 22);
    }
}
