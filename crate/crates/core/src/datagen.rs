//! Seeded generation of Gaussian features, noise and responses.
//!
//! Every random block is drawn from its own ChaCha8 stream. The key is
//! expanded from the 64-bit master seed (`SeedableRng::seed_from_u64`) and the
//! 64-bit stream number is a SplitMix64 hash of the [`StreamId`] coordinates,
//! so a block depends only on *what* it is, never on when it was drawn.
//! Standard normals come from the ziggurat sampler of `rand_distr`.
//! Matrices are filled column by column (nalgebra's column-major layout).

use std::fs::File;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, GroundTruth, ProblemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
}

/// Which random object a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    Fake,
    Included,
    Missing,
    Noise,
    /// Streams that are not part of a dataset (diagnostic simulations).
    Aux,
}

/// Semantic coordinates of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    /// Experiment cell key (for sweeps, the fake-feature count).
    pub cell: u64,
    /// Feature realization index.
    pub realization: u64,
    /// Noise draw index within a realization.
    pub noise: u64,
    pub split: Split,
    pub block: Block,
}

impl StreamId {
    pub fn new(cell: u64, realization: u64, noise: u64, split: Split) -> Self {
        StreamId { cell, realization, noise, split, block: Block::Aux }
    }

    pub fn with_block(self, block: Block) -> Self {
        StreamId { block, ..self }
    }

    fn stream_number(&self) -> u64 {
        let split = match self.split {
            Split::Train => 0,
            Split::Test => 1,
        };
        let block = match self.block {
            Block::Fake => 0,
            Block::Included => 1,
            Block::Missing => 2,
            Block::Noise => 3,
            Block::Aux => 4,
        };
        [self.cell, self.realization, self.noise, split, block]
            .iter()
            .fold(0x243f_6a88_85a3_08d3, |acc, &word| splitmix64(acc ^ splitmix64(word)))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream: StreamId,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream: StreamId) -> Self {
        SeedSpec { master_seed, stream }
    }

    pub fn with_block(self, block: Block) -> Self {
        SeedSpec { stream: self.stream.with_block(block), ..self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream.stream_number());
        rng
    }
}

pub(crate) fn standard_normals(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `rows × cols` matrix of i.i.d. N(0, 1) entries.
pub fn gen_features(rows: usize, cols: usize, seed: &SeedSpec) -> DMatrix<f64> {
    let mut rng = seed.rng();
    DMatrix::from_vec(rows, cols, standard_normals(&mut rng, rows * cols))
}

/// Length-`rows` vector of i.i.d. N(0, σ²) entries.
pub fn gen_noise(rows: usize, sigma_v: f64, seed: &SeedSpec) -> DVector<f64> {
    if sigma_v == 0.0 {
        return DVector::zeros(rows);
    }
    let mut rng = seed.rng();
    DVector::from_vec(standard_normals(&mut rng, rows)) * sigma_v
}

/// `y = A_S·x_S + A_C·x_C + v`.
pub fn gen_response(
    a_included: &DMatrix<f64>,
    a_missing: &DMatrix<f64>,
    truth: &GroundTruth,
    noise: &DVector<f64>,
) -> Result<DVector<f64>> {
    let rows = noise.len();
    if a_included.nrows() != rows || a_missing.nrows() != rows {
        return Err(Error::Dimension(format!(
            "feature blocks have {} and {} rows, noise has {rows}",
            a_included.nrows(),
            a_missing.nrows()
        )));
    }
    if a_included.ncols() != truth.x_included.len() || a_missing.ncols() != truth.x_missing.len() {
        return Err(Error::Dimension(format!(
            "feature widths ({}, {}) do not match ground truth lengths ({}, {})",
            a_included.ncols(),
            a_missing.ncols(),
            truth.x_included.len(),
            truth.x_missing.len()
        )));
    }
    let mut y = noise.clone();
    y.gemv(1.0, a_included, &truth.x_included, 1.0);
    y.gemv(1.0, a_missing, &truth.x_missing, 1.0);
    Ok(y)
}

/// Draws a full dataset. The four random blocks use the `Fake`, `Included`,
/// `Missing` and `Noise` sub-streams of `seed`.
pub fn gen_dataset(
    cfg: &ProblemConfig,
    truth: &GroundTruth,
    rows: usize,
    seed: &SeedSpec,
) -> Result<Dataset> {
    cfg.validate()?;
    if rows == 0 {
        return Err(Error::Dimension("dataset must have at least one row".into()));
    }
    let a_fake = gen_features(rows, cfg.p_fake, &seed.with_block(Block::Fake));
    let a_included = gen_features(rows, cfg.p_included, &seed.with_block(Block::Included));
    let a_missing = gen_features(rows, cfg.p_missing, &seed.with_block(Block::Missing));
    let noise = gen_noise(rows, cfg.sigma_v, &seed.with_block(Block::Noise));
    let response = gen_response(&a_included, &a_missing, truth, &noise)?;
    Ok(Dataset { a_fake, a_included, a_missing, noise, response })
}

/// Debug dump: one headerless CSV file per block inside `dir`.
pub fn write_dataset_csv(dataset: &Dataset, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let write = |name: &str, m: &DMatrix<f64>| -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(File::create(dir.join(name))?);
        for row in m.row_iter() {
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        w.flush()
    };
    write("a_fake.csv", &dataset.a_fake)?;
    write("a_included.csv", &dataset.a_included)?;
    write("a_missing.csv", &dataset.a_missing)?;
    write("noise.csv", &DMatrix::from_column_slice(dataset.rows(), 1, dataset.noise.as_slice()))?;
    write(
        "response.csv",
        &DMatrix::from_column_slice(dataset.rows(), 1, dataset.response.as_slice()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_ground_truth;

    fn seed(master: u64) -> SeedSpec {
        SeedSpec::new(master, StreamId::new(0, 0, 0, Split::Train))
    }

    fn mean_and_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn zero_width_features() {
        let m = gen_features(4, 0, &seed(1));
        assert_eq!(m.shape(), (4, 0));
    }

    #[test]
    fn feature_moments() {
        let m = gen_features(10_000, 1, &seed(7));
        let (mean, var) = mean_and_var(m.as_slice());
        assert!(mean.abs() <= 4.0 / 100.0, "mean {mean}");
        assert!((0.9..=1.1).contains(&var), "var {var}");
    }

    #[test]
    fn features_are_deterministic() {
        assert_eq!(gen_features(13, 5, &seed(3)), gen_features(13, 5, &seed(3)));
        assert_ne!(gen_features(13, 5, &seed(3)), gen_features(13, 5, &seed(4)));
    }

    #[test]
    fn distinct_streams_differ() {
        let base = seed(3);
        let a = gen_features(8, 2, &base.with_block(Block::Fake));
        let b = gen_features(8, 2, &base.with_block(Block::Included));
        let c = gen_features(
            8,
            2,
            &SeedSpec::new(3, StreamId::new(0, 1, 0, Split::Train).with_block(Block::Fake)),
        );
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_moments_and_zero_sigma() {
        assert_eq!(gen_noise(5, 0.0, &seed(1)), DVector::zeros(5));
        let v = gen_noise(10_000, 10.0, &seed(11));
        let (_, var) = mean_and_var(v.as_slice());
        assert!((9.5..=10.5).contains(&var.sqrt()), "std {}", var.sqrt());
        assert_eq!(v, gen_noise(10_000, 10.0, &seed(11)));
    }

    #[test]
    fn response_arithmetic() {
        let a_s = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let a_c = DMatrix::zeros(2, 0);
        let truth = GroundTruth {
            x_included: DVector::from_vec(vec![3.0]),
            x_missing: DVector::zeros(0),
        };
        let v = DVector::from_vec(vec![0.5, -0.5]);
        let y = gen_response(&a_s, &a_c, &truth, &v).unwrap();
        assert_eq!(y.as_slice(), &[3.5, 5.5]);
    }

    #[test]
    fn response_with_zero_features_is_noise() {
        let truth = GroundTruth {
            x_included: DVector::from_element(3, 2.0),
            x_missing: DVector::from_element(2, 1.0),
        };
        let v = DVector::from_vec(vec![1.0, -2.0, 3.0, 0.25]);
        let y = gen_response(&DMatrix::zeros(4, 3), &DMatrix::zeros(4, 2), &truth, &v).unwrap();
        assert_eq!(y, v);
    }

    #[test]
    fn response_dimension_errors() {
        let truth = GroundTruth {
            x_included: DVector::from_element(3, 2.0),
            x_missing: DVector::zeros(0),
        };
        let v = DVector::zeros(4);
        assert!(matches!(
            gen_response(&DMatrix::zeros(3, 3), &DMatrix::zeros(4, 0), &truth, &v),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            gen_response(&DMatrix::zeros(4, 2), &DMatrix::zeros(4, 0), &truth, &v),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn dataset_is_deterministic_and_consistent() {
        let cfg = ProblemConfig {
            n: 30,
            p_fake: 4,
            p_included: 5,
            p_missing: 6,
            sigma_v: 1.5,
            power: 10.0,
            r_s: 0.7,
            lambda: 1.0,
        };
        let truth = make_ground_truth(&cfg).unwrap();
        let d1 = gen_dataset(&cfg, &truth, 30, &seed(99)).unwrap();
        let d2 = gen_dataset(&cfg, &truth, 30, &seed(99)).unwrap();
        assert_eq!(d1, d2);
        assert_eq!(d1.a_fake.shape(), (30, 4));
        assert_eq!(d1.a_bar().shape(), (30, 9));
        let rebuilt = &d1.a_included * &truth.x_included + &d1.a_missing * &truth.x_missing + &d1.noise;
        assert!((rebuilt - &d1.response).norm() <= 1e-12 * d1.response.norm());
    }

    #[test]
    fn noiseless_response_lies_in_included_span() {
        let cfg = ProblemConfig {
            n: 12,
            p_fake: 2,
            p_included: 3,
            p_missing: 0,
            sigma_v: 0.0,
            power: 3.0,
            r_s: 1.0,
            lambda: 0.0,
        };
        let truth = make_ground_truth(&cfg).unwrap();
        let d = gen_dataset(&cfg, &truth, 12, &seed(5)).unwrap();
        let expected = &d.a_included * &truth.x_included;
        assert_eq!(d.response, expected);
    }

    #[test]
    fn csv_dump_writes_one_file_per_block() {
        let cfg = ProblemConfig {
            n: 3,
            p_fake: 1,
            p_included: 1,
            p_missing: 1,
            sigma_v: 1.0,
            power: 1.0,
            r_s: 0.5,
            lambda: 1.0,
        };
        let truth = make_ground_truth(&cfg).unwrap();
        let d = gen_dataset(&cfg, &truth, 3, &seed(5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset_csv(&d, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("response.csv")).unwrap();
        assert_eq!(text.lines().count(), 3);
        for f in ["a_fake.csv", "a_included.csv", "a_missing.csv", "noise.csv"] {
            assert!(dir.path().join(f).exists());
        }
    }
}
