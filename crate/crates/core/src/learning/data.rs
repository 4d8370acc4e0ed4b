use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::LearningError;

/// Labelled samples, row-major features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    num_features: usize,
    num_classes: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(
        num_features: usize,
        num_classes: usize,
        features: Vec<f64>,
        labels: Vec<usize>,
    ) -> Result<Self, LearningError> {
        if features.len() != labels.len() * num_features {
            return Err(LearningError::DimensionMismatch {
                expected: labels.len() * num_features,
                found: features.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(LearningError::LabelOutOfRange { label, num_classes });
        }
        Ok(Self { num_features, num_classes, features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features_of(&self, i: usize) -> &[f64] {
        &self.features[i * self.num_features..(i + 1) * self.num_features]
    }

    pub fn samples(&self) -> impl Iterator<Item = (&[f64], usize)> {
        self.features.chunks_exact(self.num_features.max(1)).zip(self.labels.iter().copied())
    }

    /// Stored size in bits: one byte per feature, labels excluded.
    pub fn size_bits(&self) -> u64 {
        self.len() as u64 * self.num_features as u64 * 8
    }

    /// New dataset holding the samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.num_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.features_of(i));
            labels.push(self.labels[i]);
        }
        Dataset { num_features: self.num_features, num_classes: self.num_classes, features, labels }
    }

    /// First `n` samples (or all, if fewer).
    pub fn truncated(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            num_features: self.num_features,
            num_classes: self.num_classes,
            features: self.features[..n * self.num_features].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }

    /// Per-class sample counts.
    pub fn label_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.num_classes];
        for &l in &self.labels {
            h[l] += 1;
        }
        h
    }
}

/// Labels routed exclusively to a contiguous block of workers.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGroup {
    pub labels: Vec<usize>,
    pub workers: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartitionScheme {
    Iid,
    LabelSplit(Vec<LabelGroup>),
}

impl PartitionScheme {
    /// Classes and workers each cut into `groups` contiguous blocks; block g of
    /// the classes goes to block g of the workers.
    pub fn contiguous_label_split(num_classes: usize, num_workers: usize, groups: usize) -> Self {
        let cut = |n: usize, g: usize| g * n / groups;
        PartitionScheme::LabelSplit(
            (0..groups)
                .map(|g| LabelGroup {
                    labels: (cut(num_classes, g)..cut(num_classes, g + 1)).collect(),
                    workers: cut(num_workers, g)..cut(num_workers, g + 1),
                })
                .collect(),
        )
    }
}

fn deal(indices: &[usize], workers: Range<usize>, out: &mut [Vec<usize>]) {
    let n = workers.len();
    for (i, &idx) in indices.iter().enumerate() {
        out[workers.start + i % n].push(idx);
    }
}

/// Splits `pool` across `num_workers` local datasets.
pub fn partition_dataset(
    pool: &Dataset,
    num_workers: usize,
    scheme: &PartitionScheme,
    seed: u64,
) -> Result<Vec<Dataset>, LearningError> {
    if pool.is_empty() {
        return Err(LearningError::EmptyDataset);
    }
    if num_workers == 0 {
        return Err(LearningError::Partition("at least one worker required".into()));
    }
    let mut assignment = vec![Vec::new(); num_workers];
    match scheme {
        PartitionScheme::Iid => {
            let mut order: Vec<usize> = (0..pool.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            deal(&order, 0..num_workers, &mut assignment);
        }
        PartitionScheme::LabelSplit(groups) => {
            let mut owner = vec![None; pool.num_classes()];
            for (g, group) in groups.iter().enumerate() {
                if group.workers.is_empty() || group.workers.end > num_workers {
                    return Err(LearningError::Partition(format!(
                        "group {g} worker range {:?} invalid for {num_workers} workers",
                        group.workers
                    )));
                }
                for &l in &group.labels {
                    if l >= pool.num_classes() {
                        return Err(LearningError::LabelOutOfRange { label: l, num_classes: pool.num_classes() });
                    }
                    if owner[l].replace(g).is_some() {
                        return Err(LearningError::Partition(format!("label {l} assigned to two groups")));
                    }
                }
            }
            let mut per_group = vec![Vec::new(); groups.len()];
            for (i, &l) in pool.labels().iter().enumerate() {
                match owner[l] {
                    Some(g) => per_group[g].push(i),
                    None => {
                        return Err(LearningError::Partition(format!("label {l} not assigned to any worker group")))
                    }
                }
            }
            for (group, indices) in groups.iter().zip(&per_group) {
                deal(indices, group.workers.clone(), &mut assignment);
            }
        }
    }
    if let Some(w) = assignment.iter().position(|a| a.is_empty()) {
        return Err(LearningError::Partition(format!("worker {w} would receive no samples")));
    }
    Ok(assignment.iter().map(|idx| pool.select(idx)).collect())
}

/// Gaussian class-conditional clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_samples: usize,
    pub num_features: usize,
    pub num_classes: usize,
    pub seed: u64,
    /// Expected distance between two class means, in units of `noise_std`.
    pub separation: f64,
    pub noise_std: f64,
    /// Ratio of the largest to the smallest per-feature scale. Rescaling
    /// features leaves the Bayes accuracy unchanged but slows gradient
    /// descent, the way uneven pixel statistics do on real images.
    pub scale_spread: f64,
}

impl SyntheticSpec {
    pub fn new(num_samples: usize, num_features: usize, num_classes: usize, seed: u64) -> Self {
        Self { num_samples, num_features, num_classes, seed, separation: 6.0, noise_std: 1.0, scale_spread: 1.0 }
    }
}

/// Seeded Gaussian cluster pool with an exactly balanced label histogram.
pub fn synthetic_pool(num_samples: usize, num_features: usize, num_classes: usize, seed: u64) -> Dataset {
    synthetic_pool_with(&SyntheticSpec::new(num_samples, num_features, num_classes, seed))
}

pub fn synthetic_pool_with(spec: &SyntheticSpec) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    // iid N(0, s²/(2F)) mean entries put two means ~s apart
    let mean_scale = spec.separation * spec.noise_std / (2.0 * spec.num_features.max(1) as f64).sqrt();
    let means: Vec<Vec<f64>> = (0..spec.num_classes)
        .map(|_| (0..spec.num_features).map(|_| unit.sample(&mut rng) * mean_scale).collect())
        .collect();
    let mut labels: Vec<usize> = (0..spec.num_samples).map(|i| i % spec.num_classes).collect();
    labels.shuffle(&mut rng);
    // separate stream so that spread 1 reproduces the isotropic pool exactly
    let scales: Vec<f64> = if spec.scale_spread == 1.0 {
        vec![1.0; spec.num_features]
    } else {
        let mut srng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5ca1_e5ca_1e5c_a1e5);
        (0..spec.num_features).map(|_| spec.scale_spread.powf(srng.random::<f64>() - 0.5)).collect()
    };
    let mut features = Vec::with_capacity(spec.num_samples * spec.num_features);
    for &l in &labels {
        for (m, s) in means[l].iter().zip(&scales) {
            features.push(s * (m + spec.noise_std * unit.sample(&mut rng)));
        }
    }
    Dataset { num_features: spec.num_features, num_classes: spec.num_classes, features, labels }
}
