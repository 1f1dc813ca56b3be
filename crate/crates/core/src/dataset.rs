//! Labeled `(received vector, bits)` sets for training and testing.
//!
//! Each message index contributes exactly `per_index` noisy samples. Shards
//! are generated per label on their own stream, concatenated in label order,
//! then shuffled once with a seeded permutation. Train and test splits draw
//! from disjoint stream families of the same master seed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::{write_index_bits, Bit};
use crate::channel::SnrSpec;
use crate::codebook::GaussianCodebook;
use crate::error::{check_capacity, Error, Result};
use crate::gam::GamConstellation;
use crate::link::{Link, Task};
use crate::rng::{GaussianRng, Purpose, GENERATOR_NAME, GENERATOR_VERSION};

/// Default memory cap for an in-memory dataset (2 GiB).
pub const DEFAULT_DATASET_CAP: u64 = 2 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn purpose(self) -> Purpose {
        match self {
            Split::Train => Purpose::TrainData,
            Split::Test => Purpose::TestData,
        }
    }

    fn shuffle_major(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Test => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub task: Task,
    pub split: Split,
    pub input_dim: usize,
    pub bits: usize,
    /// `None` for a noise-free set.
    pub eb_n0_db: Option<f64>,
    pub seed: u64,
    pub per_index: usize,
    /// Row-major `rows x input_dim`.
    pub features: Vec<f64>,
    /// Row-major `rows x bits`.
    pub labels: Vec<Bit>,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.labels.len() / self.bits
    }

    pub fn feature_row(&self, r: usize) -> &[f64] {
        &self.features[r * self.input_dim..(r + 1) * self.input_dim]
    }

    pub fn label_row(&self, r: usize) -> &[Bit] {
        &self.labels[r * self.bits..(r + 1) * self.bits]
    }
}

pub fn generate_demod_dataset(
    c: &GamConstellation,
    n1: usize,
    snr: SnrSpec,
    per_index: usize,
    seed: u64,
    split: Split,
) -> Result<Dataset> {
    generate(&Link::demod(c, n1)?, snr, per_index, seed, split, DEFAULT_DATASET_CAP)
}

pub fn generate_decode_dataset(
    cb: &GaussianCodebook,
    snr: SnrSpec,
    per_index: usize,
    seed: u64,
    split: Split,
) -> Result<Dataset> {
    generate(&Link::decode(cb), snr, per_index, seed, split, DEFAULT_DATASET_CAP)
}

/// Generates a balanced dataset for any link, refusing sets above `cap_bytes`.
pub fn generate(
    link: &Link,
    snr: SnrSpec,
    per_index: usize,
    seed: u64,
    split: Split,
    cap_bytes: u64,
) -> Result<Dataset> {
    if per_index == 0 {
        return Err(Error::domain("samples per index must be at least 1"));
    }
    let dim = link.feature_dim();
    let bits = link.k();
    let messages = link.messages();
    let rows = messages as u128 * per_index as u128;
    check_capacity("dataset", rows * (dim as u128 * 8 + bits as u128), cap_bytes)?;
    let rows = rows as usize;
    let sigma2 = link.sigma2(snr)?;

    let shards: Vec<Vec<f64>> = (0..messages)
        .into_par_iter()
        .map(|label| {
            let mut rng = GaussianRng::for_purpose(seed, split.purpose(), label as u64, 0);
            let clean = link.clean(label);
            let mut shard = Vec::with_capacity(per_index * dim);
            for _ in 0..per_index {
                let start = shard.len();
                shard.extend_from_slice(clean);
                link.add_noise(&mut shard[start..], sigma2, &mut rng);
            }
            shard
        })
        .collect();

    let mut order: Vec<usize> = (0..rows).collect();
    GaussianRng::for_purpose(seed, Purpose::Shuffle, split.shuffle_major(), 0).shuffle(&mut order);

    let mut features = vec![0.0; rows * dim];
    let mut labels = vec![0; rows * bits];
    for (dst, &src) in order.iter().enumerate() {
        let (label, j) = (src / per_index, src % per_index);
        features[dst * dim..(dst + 1) * dim].copy_from_slice(&shards[label][j * dim..(j + 1) * dim]);
        write_index_bits(label, &mut labels[dst * bits..(dst + 1) * bits]);
    }

    Ok(Dataset {
        task: link.task(),
        split,
        input_dim: dim,
        bits,
        eb_n0_db: (!snr.is_noiseless()).then(|| snr.db()),
        seed,
        per_index,
        features,
        labels,
    })
}

/// JSON sidecar describing a binary dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub task: String,
    pub split: Split,
    pub input_dim: usize,
    pub bits: usize,
    pub rows: usize,
    pub eb_n0_db: Option<f64>,
    pub seed: u64,
    pub per_index: usize,
    pub generator: String,
    pub generator_version: u32,
    /// Row layout: `input_dim` little-endian f64 features, then `bits` bytes of 0/1.
    pub row_bytes: usize,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

impl Dataset {
    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            task: self.task.name().to_string(),
            split: self.split,
            input_dim: self.input_dim,
            bits: self.bits,
            rows: self.rows(),
            eb_n0_db: self.eb_n0_db,
            seed: self.seed,
            per_index: self.per_index,
            generator: GENERATOR_NAME.to_string(),
            generator_version: GENERATOR_VERSION,
            row_bytes: self.input_dim * 8 + self.bits,
        }
    }

    /// Writes binary rows to `path` and the manifest to `path.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for r in 0..self.rows() {
            for v in self.feature_row(r) {
                out.write_all(&v.to_le_bytes())?;
            }
            out.write_all(self.label_row(r))?;
        }
        out.flush()?;
        let manifest = serde_json::to_string_pretty(&self.manifest())
            .map_err(|e| Error::format(e.to_string()))?;
        std::fs::write(sidecar_path(path), manifest)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(sidecar_path(path))?;
        let m: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| Error::format(format!("dataset manifest: {e}")))?;
        if m.row_bytes != m.input_dim * 8 + m.bits {
            return Err(Error::format("dataset manifest row size is inconsistent"));
        }
        let mut raw = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut raw)?;
        if raw.len() != m.rows * m.row_bytes {
            return Err(Error::format(format!(
                "dataset file has {} bytes, manifest implies {}",
                raw.len(),
                m.rows * m.row_bytes
            )));
        }
        let mut features = Vec::with_capacity(m.rows * m.input_dim);
        let mut labels = Vec::with_capacity(m.rows * m.bits);
        for row in raw.chunks_exact(m.row_bytes) {
            let (f, l) = row.split_at(m.input_dim * 8);
            features.extend(f.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())));
            if l.iter().any(|&b| b > 1) {
                return Err(Error::format("label byte is not 0 or 1"));
            }
            labels.extend_from_slice(l);
        }
        Ok(Self {
            task: Task::from_name(&m.task).map_err(|_| Error::format("bad task in manifest"))?,
            split: m.split,
            input_dim: m.input_dim,
            bits: m.bits,
            eb_n0_db: m.eb_n0_db,
            seed: m.seed,
            per_index: m.per_index,
            features,
            labels,
        })
    }
}
