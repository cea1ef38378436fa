//! Random small problems for the property suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataio::{Dataset, Label, SparseVector};
use crate::error::Result;
use crate::kernels::{build_blocks, KernelBlocks, KernelSpec};
use crate::qp::S3vmConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKernel {
    Linear,
    Rbf,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    /// Points in `[0,1]^dim`; the first `n_labeled` samples form `L`.
    pub data: Dataset,
    pub kernel: KernelSpec,
    pub blocks: KernelBlocks,
    pub cfg: S3vmConfig,
}

#[derive(Debug, Clone, Copy)]
pub struct FixtureShape {
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub n_features: usize,
    pub kernel: FixtureKernel,
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Uniform points, labeled samples alternating `+1, −1, ...` so both classes
/// appear, ground truth of `U` random. `C` and `C*` are log-uniform on
/// `[0.1, 10]`, `r` uniform on `[0.2, 0.8]`, rbf width uniform on `[0.1, 2]`.
pub fn random_fixture(seed: u64, shape: FixtureShape) -> Result<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.n_labeled + shape.n_unlabeled;
    let samples: Vec<SparseVector> = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..shape.n_features).map(|_| rng.gen::<f64>()).collect();
            SparseVector::from_dense(&x)
        })
        .collect();
    let labels: Vec<Label> = (0..n)
        .map(|i| {
            if i < shape.n_labeled {
                if i % 2 == 0 {
                    Label::Positive
                } else {
                    Label::Negative
                }
            } else if rng.gen_bool(0.5) {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect();
    let data = Dataset::new(samples, labels)?.with_labeled((0..shape.n_labeled).collect())?;
    let kernel = match shape.kernel {
        FixtureKernel::Linear => KernelSpec::linear().with_d_override(shape.n_features as f64)?,
        FixtureKernel::Rbf => KernelSpec::rbf(rng.gen_range(0.1..2.0))?,
    };
    let blocks = build_blocks(&data, &kernel)?;
    let mut cfg = S3vmConfig::new(
        log_uniform(&mut rng, 0.1, 10.0),
        log_uniform(&mut rng, 0.1, 10.0),
        rng.gen_range(0.2..0.8),
    )?;
    cfg.seed = seed;
    Ok(Fixture {
        data,
        kernel,
        blocks,
        cfg,
    })
}

/// A family of fixtures with sizes drawn from the given ranges; kernels
/// alternate rbf / linear.
pub fn fixture_family(
    seed: u64,
    count: usize,
    labeled: (usize, usize),
    unlabeled: (usize, usize),
) -> Result<Vec<Fixture>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let shape = FixtureShape {
                n_labeled: rng.gen_range(labeled.0..=labeled.1),
                n_unlabeled: rng.gen_range(unlabeled.0..=unlabeled.1),
                n_features: rng.gen_range(2..=5),
                kernel: if i % 2 == 0 {
                    FixtureKernel::Rbf
                } else {
                    FixtureKernel::Linear
                },
            };
            random_fixture(rng.gen(), shape)
        })
        .collect()
}

/// Two tight groups of unlabeled points around opposite corners of the unit
/// square with one labeled point in each; `r` matches the group sizes.
pub fn two_cluster_fixture(seed: u64, per_cluster: (usize, usize), gamma: f64) -> Result<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = [[0.15, 0.15], [0.85, 0.85]];
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for (c, label) in centers.iter().zip([Label::Positive, Label::Negative]) {
        samples.push(SparseVector::from_dense(c));
        labels.push(label);
    }
    for (c, (count, label)) in centers
        .iter()
        .zip([(per_cluster.0, Label::Positive), (per_cluster.1, Label::Negative)])
    {
        for _ in 0..count {
            let x = [c[0] + rng.gen_range(-0.1..0.1), c[1] + rng.gen_range(-0.1..0.1)];
            samples.push(SparseVector::from_dense(&x));
            labels.push(label);
        }
    }
    let data = Dataset::new(samples, labels)?.with_labeled(vec![0, 1])?;
    let kernel = KernelSpec::rbf(gamma)?;
    let blocks = build_blocks(&data, &kernel)?;
    let total = (per_cluster.0 + per_cluster.1) as f64;
    let mut cfg = S3vmConfig::new(1.0, 1.0, per_cluster.0 as f64 / total)?;
    cfg.seed = seed;
    Ok(Fixture {
        data,
        kernel,
        blocks,
        cfg,
    })
}
