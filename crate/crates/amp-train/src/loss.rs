//! Amplitude-space objectives.

use cc_engine::AmplitudeSet;

use crate::train::TrainError;

/// Sum of squared deviations over all singles and doubles:
/// `Σ (t1 - t1')² + Σ (t2 - t2')²`. Zero iff the sets are equal.
pub fn loss(pred: &AmplitudeSet, target: &AmplitudeSet) -> Result<f64, TrainError> {
    if pred.n_occ() != target.n_occ() || pred.n_virt() != target.n_virt() {
        return Err(TrainError::Shape(format!(
            "prediction ({}, {}) vs target ({}, {})",
            pred.n_occ(),
            pred.n_virt(),
            target.n_occ(),
            target.n_virt()
        )));
    }
    let mut acc = 0.0;
    for (a, b) in pred.t1.iter().zip(target.t1.iter()) {
        acc += (a - b) * (a - b);
    }
    for (a, b) in pred.t2.iter().zip(target.t2.iter()) {
        acc += (a - b) * (a - b);
    }
    Ok(acc)
}

/// Mean absolute error over all amplitudes; reported as a metric, never
/// used as the training objective.
pub fn amplitude_mae(pred: &AmplitudeSet, target: &AmplitudeSet) -> Result<f64, TrainError> {
    if pred.n_occ() != target.n_occ() || pred.n_virt() != target.n_virt() {
        return Err(TrainError::Shape("mae shape mismatch".into()));
    }
    let mut acc = 0.0;
    let mut count = 0usize;
    for (a, b) in pred.t1.iter().zip(target.t1.iter()) {
        acc += (a - b).abs();
        count += 1;
    }
    for (a, b) in pred.t2.iter().zip(target.t2.iter()) {
        acc += (a - b).abs();
        count += 1;
    }
    Ok(acc / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_trivia() {
        let mut a = AmplitudeSet::zeros(2, 2);
        let b = AmplitudeSet::zeros(2, 2);
        assert_eq!(loss(&a, &b).unwrap(), 0.0);
        a.t2[(1, 0, 1, 1)] = 0.3;
        assert!((loss(&a, &b).unwrap() - 0.09).abs() < 1e-15);
        // symmetric in argument order
        assert_eq!(loss(&a, &b).unwrap(), loss(&b, &a).unwrap());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = AmplitudeSet::zeros(2, 2);
        let b = AmplitudeSet::zeros(2, 3);
        assert!(loss(&a, &b).is_err());
    }
}
