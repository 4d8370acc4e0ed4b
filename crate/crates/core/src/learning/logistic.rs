use super::{model_dimension, Dataset, LearningError, ModelParams};

/// Local training and compute-time parameters of one satellite.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub learning_rate: f64,
    pub local_iterations: usize,
    pub cycles_per_sample: f64,
    pub cpu_hz: f64,
    /// Scales the modelled computation time; 1 charges one `c_k S(D_k)/ν_k`
    /// per computation phase regardless of the iteration count.
    pub compute_time_multiplier: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            local_iterations: 1,
            cycles_per_sample: 1e3,
            cpu_hz: 1e9,
            compute_time_multiplier: 1.0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), LearningError> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(LearningError::InvalidConfig(format!("learning_rate = {}", self.learning_rate)));
        }
        if self.local_iterations == 0 {
            return Err(LearningError::InvalidConfig("local_iterations must be >= 1".into()));
        }
        for (name, v) in [
            ("cycles_per_sample", self.cycles_per_sample),
            ("cpu_hz", self.cpu_hz),
            ("compute_time_multiplier", self.compute_time_multiplier),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(LearningError::InvalidConfig(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

fn check_shapes(params: &ModelParams, data: &Dataset) -> Result<(), LearningError> {
    params.check_dim(model_dimension(data.num_features(), data.num_classes()))
}

// Per-class affine scores of one sample.
fn scores(w: &[f64], x: &[f64], num_classes: usize, out: &mut [f64]) {
    let stride = x.len() + 1;
    for (c, s) in out.iter_mut().enumerate().take(num_classes) {
        let row = &w[c * stride..(c + 1) * stride];
        *s = row[..x.len()].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + row[x.len()];
    }
}

// Overwrites `s` with softmax probabilities and returns log-sum-exp.
fn softmax_in_place(s: &mut [f64]) -> f64 {
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in s.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in s.iter_mut() {
        *v /= sum;
    }
    max + sum.ln()
}

/// Mean softmax cross-entropy over the local dataset.
pub fn local_loss(params: &ModelParams, data: &Dataset) -> Result<f64, LearningError> {
    check_shapes(params, data)?;
    if data.is_empty() {
        return Err(LearningError::EmptyDataset);
    }
    let c = data.num_classes();
    let mut buf = vec![0.0; c];
    let mut total = 0.0;
    for (x, y) in data.samples() {
        scores(params.as_slice(), x, c, &mut buf);
        let correct = buf[y];
        let lse = softmax_in_place(&mut buf);
        total += lse - correct;
    }
    Ok(total / data.len() as f64)
}

/// Analytic gradient of [`local_loss`].
pub fn local_gradient(params: &ModelParams, data: &Dataset) -> Result<ModelParams, LearningError> {
    check_shapes(params, data)?;
    if data.is_empty() {
        return Err(LearningError::EmptyDataset);
    }
    let c = data.num_classes();
    let f = data.num_features();
    let stride = f + 1;
    let mut grad = vec![0.0; params.dimension()];
    let mut buf = vec![0.0; c];
    for (x, y) in data.samples() {
        scores(params.as_slice(), x, c, &mut buf);
        softmax_in_place(&mut buf);
        buf[y] -= 1.0;
        for (class, &delta) in buf.iter().enumerate() {
            let row = &mut grad[class * stride..(class + 1) * stride];
            for (g, xj) in row[..f].iter_mut().zip(x) {
                *g += delta * xj;
            }
            row[f] += delta;
        }
    }
    let inv = 1.0 / data.len() as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    Ok(ModelParams::new(grad))
}

/// `I` full-batch gradient-descent steps starting from `params`.
pub fn local_gd(params: &ModelParams, data: &Dataset, config: &LearnerConfig) -> Result<ModelParams, LearningError> {
    config.validate()?;
    let mut w = params.clone();
    for iteration in 1..=config.local_iterations {
        let g = local_gradient(&w, data)?;
        for (wi, gi) in w.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *wi -= config.learning_rate * gi;
        }
        if !w.is_finite() {
            return Err(LearningError::NumericDivergence { iteration });
        }
    }
    Ok(w)
}

/// Modelled duration of one computation phase, `c_k S(D_k) / ν_k`.
pub fn compute_time(data: &Dataset, config: &LearnerConfig) -> f64 {
    config.cycles_per_sample * data.size_bits() as f64 / config.cpu_hz * config.compute_time_multiplier
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
}

/// Argmax accuracy (ties go to the lowest class index) and mean cross-entropy.
pub fn evaluate(params: &ModelParams, test: &Dataset) -> Result<Evaluation, LearningError> {
    check_shapes(params, test)?;
    if test.is_empty() {
        return Err(LearningError::EmptyDataset);
    }
    let c = test.num_classes();
    let mut buf = vec![0.0; c];
    let mut correct = 0usize;
    let mut loss = 0.0;
    for (x, y) in test.samples() {
        scores(params.as_slice(), x, c, &mut buf);
        let mut best = 0;
        for k in 1..c {
            if buf[k] > buf[best] {
                best = k;
            }
        }
        if best == y {
            correct += 1;
        }
        let truth = buf[y];
        loss += softmax_in_place(&mut buf) - truth;
    }
    let n = test.len() as f64;
    Ok(Evaluation { accuracy: correct as f64 / n, loss: loss / n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(seed: u64, n: usize, f: usize, c: usize) -> (ModelParams, Dataset) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let feats = (0..n * f).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels = (0..n).map(|_| rng.random_range(0..c)).collect();
        let data = Dataset::new(f, c, feats, labels).unwrap();
        let w = ModelParams::new((0..model_dimension(f, c)).map(|_| rng.random_range(-0.5..0.5)).collect());
        (w, data)
    }

    // Direct transcription of the mean per-sample cross-entropy, no shared helpers.
    fn naive_loss(w: &ModelParams, d: &Dataset) -> f64 {
        let f = d.num_features();
        let c = d.num_classes();
        let mut total = 0.0;
        for i in 0..d.len() {
            let x = d.features_of(i);
            let y = d.labels()[i];
            let s: Vec<f64> = (0..c)
                .map(|k| {
                    let mut acc = w.as_slice()[k * (f + 1) + f];
                    for (j, xj) in x.iter().enumerate() {
                        acc += w.as_slice()[k * (f + 1) + j] * xj;
                    }
                    acc
                })
                .collect();
            let z: f64 = s.iter().map(|v| v.exp()).sum();
            total += -(s[y].exp() / z).ln();
        }
        total / d.len() as f64
    }

    #[test]
    fn zero_params_give_log_c() {
        let data = Dataset::new(2, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6], vec![0, 1, 2]).unwrap();
        let l = local_loss(&ModelParams::zeros(9), &data).unwrap();
        assert!((l - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn saturated_score_gives_near_zero_loss() {
        let data = Dataset::new(1, 2, vec![1.0], vec![1]).unwrap();
        // class 1 bias huge
        let w = ModelParams::new(vec![0.0, 0.0, 0.0, 50.0]);
        assert!(local_loss(&w, &data).unwrap() < 1e-20);
    }

    #[test]
    fn loss_matches_naive_oracle() {
        let (w, d) = random_instance(7, 5, 4, 3);
        let a = local_loss(&w, &d).unwrap();
        let b = naive_loss(&w, &d);
        assert!((a - b).abs() < 1e-12, "{a} {b}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..20 {
            let (w, d) = random_instance(seed, 6, 3, 4);
            let g = local_gradient(&w, &d).unwrap();
            let eps = 1e-6;
            let mut max_rel = 0.0f64;
            for i in 0..w.dimension() {
                let mut plus = w.clone();
                plus.as_mut_slice()[i] += eps;
                let mut minus = w.clone();
                minus.as_mut_slice()[i] -= eps;
                let fd = (naive_loss(&plus, &d) - naive_loss(&minus, &d)) / (2.0 * eps);
                let rel = (fd - g.as_slice()[i]).abs() / fd.abs().max(g.as_slice()[i].abs()).max(1e-8);
                max_rel = max_rel.max(rel);
            }
            assert!(max_rel <= 1e-5, "seed {seed}: {max_rel}");
        }
    }

    #[test]
    fn duplicating_samples_keeps_gradient() {
        let (w, d) = random_instance(3, 5, 3, 3);
        let mut feats = d.features().to_vec();
        feats.extend_from_slice(d.features());
        let mut labels = d.labels().to_vec();
        labels.extend_from_slice(d.labels());
        let dd = Dataset::new(3, 3, feats, labels).unwrap();
        let g1 = local_gradient(&w, &d).unwrap();
        let g2 = local_gradient(&w, &dd).unwrap();
        assert!(g1.max_relative_diff(&g2) < 1e-12);
    }

    #[test]
    fn gradient_vanishes_at_toy_minimiser() {
        // symmetric two-point data: zero weights are the unique minimiser up to the bias
        let d = Dataset::new(1, 2, vec![1.0, -1.0, 1.0, -1.0], vec![0, 0, 1, 1]).unwrap();
        let g = local_gradient(&ModelParams::zeros(4), &d).unwrap();
        assert!(g.as_slice().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn gd_composition_and_descent() {
        let (w, d) = random_instance(11, 20, 4, 3);
        let cfg = LearnerConfig { learning_rate: 0.0, ..Default::default() };
        assert_eq!(local_gd(&w, &d, &cfg).unwrap(), w);
        let one = LearnerConfig { learning_rate: 1e-3, ..Default::default() };
        let three = LearnerConfig { local_iterations: 3, ..one.clone() };
        let chained = local_gd(&local_gd(&local_gd(&w, &d, &one).unwrap(), &d, &one).unwrap(), &d, &one).unwrap();
        assert_eq!(local_gd(&w, &d, &three).unwrap(), chained);
        let after = local_gd(&w, &d, &one).unwrap();
        assert!(local_loss(&after, &d).unwrap() <= local_loss(&w, &d).unwrap());
    }

    #[test]
    fn gd_divergence_detected() {
        let d = Dataset::new(1, 2, vec![1e200], vec![1]).unwrap();
        let cfg = LearnerConfig { learning_rate: 1e200, ..Default::default() };
        let err = local_gd(&ModelParams::new(vec![1.0, 0.0, 0.0, 0.0]), &d, &cfg).unwrap_err();
        assert_eq!(err, LearningError::NumericDivergence { iteration: 1 });
    }

    #[test]
    fn compute_time_values() {
        let d = Dataset::new(784, 10, vec![0.0; 1500 * 784], vec![0; 1500]).unwrap();
        let cfg = LearnerConfig::default();
        assert!((compute_time(&d, &cfg) - 9.408).abs() < 1e-9);
        let d2 = Dataset::new(784, 10, vec![0.0; 3000 * 784], vec![0; 3000]).unwrap();
        assert_eq!(compute_time(&d2, &cfg), 2.0 * compute_time(&d, &cfg));
        let empty = Dataset::new(784, 10, vec![], vec![]).unwrap();
        assert_eq!(compute_time(&empty, &cfg), 0.0);
    }

    #[test]
    fn evaluation_contracts() {
        let d = Dataset::new(1, 3, vec![1.0, 2.0, 3.0], vec![0, 1, 2]).unwrap();
        let e = evaluate(&ModelParams::zeros(6), &d).unwrap();
        assert!((e.accuracy - 1.0 / 3.0).abs() < 1e-15);
        assert!((e.loss - 3f64.ln()).abs() < 1e-15);
        // scores for x = 1, 2, 3 peak at classes 0, 1, 2
        let w = ModelParams::new(vec![-10.0, 15.0, 0.0, 0.0, 10.0, -25.0]);
        assert_eq!(evaluate(&w, &d).unwrap().accuracy, 1.0);
        let (w, d) = random_instance(5, 30, 3, 4);
        assert!((evaluate(&w, &d).unwrap().loss - naive_loss(&w, &d)).abs() < 1e-12);
        let empty = Dataset::new(1, 3, vec![], vec![]).unwrap();
        assert_eq!(evaluate(&ModelParams::zeros(6), &empty), Err(LearningError::EmptyDataset));
    }

    #[test]
    fn dimension_mismatch_reported() {
        let d = Dataset::new(2, 2, vec![0.0, 0.0], vec![0]).unwrap();
        assert!(matches!(
            local_loss(&ModelParams::zeros(5), &d),
            Err(LearningError::DimensionMismatch { expected: 5, found: 6 })
        ));
    }
}
