//! Deterministic stand-in images for live runs without real datasets.

use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::HarnessError;

pub const DEFAULT_SEED: u64 = 0x00ed_6eb0;

/// Pseudo-random 8-bit images of a fixed shape. Image `i` depends only on
/// the seed and `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticDataset {
    pub shape: [u32; 3],
    pub seed: u64,
}

impl SyntheticDataset {
    pub fn new(shape: [u32; 3], seed: u64) -> Self {
        Self { shape, seed }
    }

    pub fn image_len(&self) -> usize {
        self.shape.iter().map(|&d| d as usize).product()
    }

    /// Interleaved (height, width, channels) bytes of image `index`.
    pub fn image(&self, index: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let mut buf = vec![0u8; self.image_len()];
        rng.fill_bytes(&mut buf);
        buf
    }

    /// Writes `count` images as binary PPM (3 channels) or PGM (1 channel)
    /// files named `img_00000.ppm`, ... into `dir`.
    pub fn write_dir(&self, dir: &Path, count: u32) -> Result<Vec<PathBuf>, HarnessError> {
        let [h, w, c] = self.shape;
        let (magic, ext) = match c {
            1 => ("P5", "pgm"),
            3 => ("P6", "ppm"),
            _ => {
                return Err(HarnessError::InvalidPlan(format!(
                    "synthetic images need 1 or 3 channels, not {c}"
                )))
            }
        };
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
        (0..count)
            .map(|i| {
                let path = dir.join(format!("img_{i:05}.{ext}"));
                let mut bytes = format!("{magic}\n{w} {h}\n255\n").into_bytes();
                bytes.extend(self.image(u64::from(i)));
                std::fs::write(&path, bytes).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
                Ok(path)
            })
            .collect()
    }
}
