use super::{LearningError, ModelParams};

/// In-network partial aggregate: `D_k · own + Σ incoming`.
///
/// `incoming` is summed in the order given; callers pass children sorted by id.
pub fn partial_aggregate(
    own: &ModelParams,
    own_samples: usize,
    incoming: &[ModelParams],
) -> Result<ModelParams, LearningError> {
    let mut out = own.scaled(own_samples as f64);
    for w in incoming {
        out.add_assign(w)?;
    }
    Ok(out)
}

/// Sums per-plane partial aggregates and divides by the total sample count.
pub fn global_aggregate(partials: &[ModelParams], total_samples: usize) -> Result<ModelParams, LearningError> {
    if total_samples == 0 {
        return Err(LearningError::ZeroTotalSamples);
    }
    let Some(first) = partials.first() else {
        return Err(LearningError::EmptyDataset);
    };
    let mut sum = first.clone();
    for p in &partials[1..] {
        sum.add_assign(p)?;
    }
    Ok(sum.scaled(1.0 / total_samples as f64))
}

/// Reference FedAvg, `Σ_k (D_k / D) w_k`, evaluated directly.
pub fn centralized_fedavg(updates: &[(ModelParams, usize)]) -> Result<ModelParams, LearningError> {
    let total: usize = updates.iter().map(|(_, d)| d).sum();
    if total == 0 {
        return Err(LearningError::ZeroTotalSamples);
    }
    let dim = updates[0].0.dimension();
    let mut out = ModelParams::zeros(dim);
    for (w, d) in updates {
        out.check_dim(w.dimension())?;
        let weight = *d as f64 / total as f64;
        for (o, v) in out.as_mut_slice().iter_mut().zip(w.as_slice()) {
            *o += weight * v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaf_and_simple_cases() {
        let own = ModelParams::new(vec![0.25, -3.0]);
        assert_eq!(partial_aggregate(&own, 1, &[]).unwrap(), own);
        let out = partial_aggregate(&ModelParams::new(vec![1.0, 0.0]), 1, &[ModelParams::new(vec![0.0, 1.0])]).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 1.0]);
        assert!(matches!(
            partial_aggregate(&own, 1, &[ModelParams::zeros(3)]),
            Err(LearningError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn global_cases() {
        let w = ModelParams::new(vec![0.5, 2.0]);
        let single = global_aggregate(&[partial_aggregate(&w, 7, &[]).unwrap()], 7).unwrap();
        assert!(single.max_relative_diff(&w) < 1e-15);
        let two = global_aggregate(&[ModelParams::new(vec![1.0, 0.0]), ModelParams::new(vec![0.0, 1.0])], 2).unwrap();
        assert_eq!(two.as_slice(), &[0.5, 0.5]);
        assert_eq!(global_aggregate(&[w], 0), Err(LearningError::ZeroTotalSamples));
    }
}
