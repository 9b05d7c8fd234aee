//! Two-domain synthetic benchmarks built from Gaussian blobs and noisy arcs.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::DomainDataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Generator description for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassShape {
    /// Multivariate normal.
    Blob { mean: Vec<f64>, covariance: Vec<Vec<f64>> },
    /// Points on a circular arc with isotropic Gaussian jitter. Angles in degrees.
    Moon {
        center: [f64; 2],
        radius: f64,
        start_angle: f64,
        end_angle: f64,
        noise: f64,
    },
}

impl ClassShape {
    fn dim(&self) -> usize {
        match self {
            ClassShape::Blob { mean, .. } => mean.len(),
            ClassShape::Moon { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub shape: ClassShape,
    /// Translation applied to this class in the source domain.
    #[serde(default)]
    pub source_offset: Vec<f64>,
    /// Translation applied to this class in the target domain.
    #[serde(default)]
    pub target_offset: Vec<f64>,
    /// Overrides `samples_per_class` for this class.
    #[serde(default)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    /// Samples drawn per class in each domain.
    pub samples_per_class: usize,
    pub classes: Vec<ClassSpec>,
}

impl SyntheticSpec {
    /// The four-class benchmark: two blobs with a slight domain shift, a blob
    /// with a wide shift, and an arc-shaped class that is also widely shifted.
    pub fn four_class() -> Self {
        fn blob(mean: [f64; 2], var: f64, src: [f64; 2], tgt: [f64; 2]) -> ClassSpec {
            ClassSpec {
                shape: ClassShape::Blob {
                    mean: mean.to_vec(),
                    covariance: vec![vec![var, 0.0], vec![0.0, var]],
                },
                source_offset: src.to_vec(),
                target_offset: tgt.to_vec(),
                samples: None,
            }
        }
        SyntheticSpec {
            samples_per_class: 50,
            classes: vec![
                blob([-5.0, 3.0], 0.3, [0.0, 0.0], [0.5, -0.5]),
                blob([5.0, 3.0], 0.3, [0.0, 0.0], [-0.5, -0.5]),
                blob([0.0, -5.0], 0.3, [0.0, 0.0], [3.5, 1.0]),
                ClassSpec {
                    shape: ClassShape::Moon {
                        center: [0.0, 0.0],
                        radius: 3.0,
                        start_angle: 20.0,
                        end_angle: 160.0,
                        noise: 0.2,
                    },
                    source_offset: vec![0.0, 0.0],
                    target_offset: vec![0.0, -3.0],
                    samples: None,
                },
            ],
        }
    }

    pub fn dim(&self) -> usize {
        self.classes.first().map_or(0, |c| c.shape.dim())
    }

    fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::validation("synthetic spec declares no classes"));
        }
        let dim = self.dim();
        if dim == 0 {
            return Err(Error::validation("synthetic spec has zero-dimensional classes"));
        }
        for (c, class) in self.classes.iter().enumerate() {
            let count = class.samples.unwrap_or(self.samples_per_class);
            if count == 0 {
                return Err(Error::validation(format!("class {}: sample count must be positive", c + 1)));
            }
            if class.shape.dim() != dim {
                return Err(Error::validation(format!("class {}: dimension differs from class 1", c + 1)));
            }
            for offset in [&class.source_offset, &class.target_offset] {
                if !offset.is_empty() && offset.len() != dim {
                    return Err(Error::validation(format!("class {}: offset length must be {dim}", c + 1)));
                }
            }
            match &class.shape {
                ClassShape::Blob { covariance, .. } => {
                    if covariance.len() != dim || covariance.iter().any(|r| r.len() != dim) {
                        return Err(Error::validation(format!("class {}: covariance must be {dim}x{dim}", c + 1)));
                    }
                }
                ClassShape::Moon { radius, noise, .. } => {
                    if *radius <= 0.0 || *noise < 0.0 {
                        return Err(Error::validation(format!("class {}: invalid arc parameters", c + 1)));
                    }
                }
            }
        }
        Ok(())
    }
}

enum Sampler {
    Gaussian { mean: DVector<f64>, factor: DMatrix<f64> },
    Arc { center: [f64; 2], radius: f64, start: f64, end: f64, noise: f64 },
}

impl Sampler {
    fn new(shape: &ClassShape, class: usize) -> Result<Self> {
        Ok(match shape {
            ClassShape::Blob { mean, covariance } => {
                let d = mean.len();
                let cov = DMatrix::from_fn(d, d, |i, j| covariance[i][j]);
                let factor = cov
                    .cholesky()
                    .ok_or_else(|| Error::validation(format!("class {}: covariance is not positive definite", class + 1)))?
                    .unpack();
                Sampler::Gaussian {
                    mean: DVector::from_column_slice(mean),
                    factor,
                }
            }
            ClassShape::Moon {
                center,
                radius,
                start_angle,
                end_angle,
                noise,
            } => Sampler::Arc {
                center: *center,
                radius: *radius,
                start: start_angle.to_radians(),
                end: end_angle.to_radians(),
                noise: *noise,
            },
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        match self {
            Sampler::Gaussian { mean, factor } => {
                let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let x = mean + factor * z;
                out.copy_from_slice(x.as_slice());
            }
            Sampler::Arc {
                center,
                radius,
                start,
                end,
                noise,
            } => {
                let theta = start + (end - start) * rng.random::<f64>();
                let nx: f64 = rng.sample(StandardNormal);
                let ny: f64 = rng.sample(StandardNormal);
                out[0] = center[0] + radius * theta.cos() + noise * nx;
                out[1] = center[1] + radius * theta.sin() + noise * ny;
            }
        }
    }
}

/// Draws a labeled source domain and a target domain (ground truth kept for
/// evaluation) from `spec`. Deterministic for a fixed seed.
pub fn make_synthetic_pair<T: Scalar>(
    spec: &SyntheticSpec,
    seed: u64,
) -> Result<(DomainDataset<T>, DomainDataset<T>)> {
    spec.validate()?;
    let samplers = spec
        .classes
        .iter()
        .enumerate()
        .map(|(c, class)| Sampler::new(&class.shape, c))
        .collect::<Result<Vec<_>>>()?;
    let dim = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut draw_domain = |target: bool| {
        let mut values = Vec::new();
        let mut labels = Vec::new();
        let mut point = vec![0.0; dim];
        for (c, (class, sampler)) in spec.classes.iter().zip(&samplers).enumerate() {
            let offset = if target { &class.target_offset } else { &class.source_offset };
            for _ in 0..class.samples.unwrap_or(spec.samples_per_class) {
                sampler.draw(&mut rng, &mut point);
                for (d, v) in point.iter().enumerate() {
                    values.push(T::lit(v + offset.get(d).copied().unwrap_or(0.0)));
                }
                labels.push(c);
            }
        }
        let n = labels.len();
        (DMatrix::from_vec(dim, n, values), labels)
    };
    let (xs, ys) = draw_domain(false);
    let (xt, yt) = draw_domain(true);
    let num_classes = spec.classes.len();
    let source = DomainDataset::source("synthetic_source", xs, ys)?.with_num_classes(num_classes)?;
    let target = DomainDataset::target("synthetic_target", xt, Some(yt))?.with_num_classes(num_classes)?;
    Ok((source, target))
}
