//! Binary masks and their on-disk forms (PGM P2/P5, PNG).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::QualityError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    pixels: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, pixels: Vec<bool>) -> Result<Self, QualityError> {
        if width == 0 || height == 0 {
            return Err(QualityError::MalformedMask("mask dimensions must be positive".into()));
        }
        if width.checked_mul(height) != Some(pixels.len()) {
            return Err(QualityError::MalformedMask(format!(
                "{} pixels do not fill a {width}x{height} mask",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self, QualityError> {
        Self::new(width, height, vec![false; width * height])
    }

    /// Mask from active `(row, col)` coordinates.
    pub fn from_active(width: usize, height: usize, active: &[(usize, usize)]) -> Result<Self, QualityError> {
        let mut m = Self::empty(width, height)?;
        for &(r, c) in active {
            if r >= height || c >= width {
                return Err(QualityError::MalformedMask(format!("pixel ({r}, {c}) outside mask")));
            }
            m.pixels[r * width + c] = true;
        }
        Ok(m)
    }

    /// Thresholds a probability map: a pixel is active when its value
    /// exceeds `threshold` (0.5 for sigmoid outputs).
    pub fn from_probabilities(
        width: usize,
        height: usize,
        probs: &[f32],
        threshold: f32,
    ) -> Result<Self, QualityError> {
        Self::new(width, height, probs.iter().map(|&p| p > threshold).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    pub fn active_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }
}

fn malformed(msg: impl Into<String>) -> QualityError {
    QualityError::MalformedMask(msg.into())
}

/// Cursor over PGM header tokens, skipping whitespace and `#` comments.
struct PgmHeader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PgmHeader<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, QualityError> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed(format!("bad PGM {what}")))
    }
}

/// Parses a binary (P5) or ASCII (P2) PGM; nonzero samples are active.
pub fn parse_pgm(bytes: &[u8]) -> Result<BinaryMask, QualityError> {
    let ascii = match bytes.get(..2) {
        Some(b"P5") => false,
        Some(b"P2") => true,
        _ => return Err(malformed("not a P2/P5 PGM file")),
    };
    let mut h = PgmHeader { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if !(1..=65535).contains(&maxval) {
        return Err(malformed(format!("PGM maxval {maxval} out of range")));
    }
    let count = width
        .checked_mul(height)
        .filter(|&c| c > 0 && c <= 1 << 28)
        .ok_or_else(|| malformed("PGM dimensions out of range"))?;

    let pixels = if ascii {
        let mut pixels = Vec::with_capacity(count);
        for _ in 0..count {
            let v = h.number("sample")?;
            if v > maxval {
                return Err(malformed(format!("PGM sample {v} exceeds maxval {maxval}")));
            }
            pixels.push(v != 0);
        }
        pixels
    } else {
        // exactly one whitespace byte separates the header from the raster
        if !bytes.get(h.pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(malformed("missing separator before PGM raster"));
        }
        let raster = &bytes[h.pos + 1..];
        let depth = if maxval < 256 { 1 } else { 2 };
        if raster.len() < count * depth {
            return Err(malformed(format!(
                "PGM raster has {} bytes, need {}",
                raster.len(),
                count * depth
            )));
        }
        raster[..count * depth]
            .chunks(depth)
            .map(|c| c.iter().any(|&b| b != 0))
            .collect()
    };
    BinaryMask::new(width, height, pixels)
}

/// Writes a mask as binary PGM with values 0/255.
pub fn write_pgm(mask: &BinaryMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width, mask.height).into_bytes();
    out.extend(mask.pixels.iter().map(|&p| if p { 255u8 } else { 0 }));
    out
}

/// Decodes a PNG; any nonzero luminance is active.
pub fn parse_png(bytes: &[u8]) -> Result<BinaryMask, QualityError> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| malformed(format!("PNG decode failed: {e}")))?
        .into_luma16();
    let (w, h) = img.dimensions();
    BinaryMask::new(w as usize, h as usize, img.pixels().map(|p| p.0[0] != 0).collect())
}

/// Decodes a mask from PGM or PNG bytes, detected by magic number.
pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask, QualityError> {
    if bytes.starts_with(b"\x89PNG") {
        parse_png(bytes)
    } else {
        parse_pgm(bytes)
    }
}

pub fn load_mask(path: &Path) -> Result<BinaryMask, QualityError> {
    let bytes = std::fs::read(path).map_err(|e| QualityError::Io(format!("{}: {e}", path.display())))?;
    decode_mask(&bytes).map_err(|e| match e {
        QualityError::MalformedMask(m) => QualityError::MalformedMask(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn mask_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>, QualityError> {
    let entries = std::fs::read_dir(dir).map_err(|e| QualityError::Io(format!("{}: {e}", dir.display())))?;
    let mut files = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| QualityError::Io(e.to_string()))?.path();
        let is_mask = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "png"));
        if is_mask && path.is_file() {
            let name = path.file_name().expect("file has a name").to_string_lossy().into_owned();
            files.insert(name, path);
        }
    }
    Ok(files)
}

/// Loads masks from two directories, paired by file name in sorted order.
pub fn load_mask_pairs(
    reference_dir: &Path,
    candidate_dir: &Path,
) -> Result<Vec<(String, BinaryMask, BinaryMask)>, QualityError> {
    let refs = mask_files(reference_dir)?;
    let cands = mask_files(candidate_dir)?;
    if let Some(name) = refs.keys().find(|k| !cands.contains_key(*k)) {
        return Err(QualityError::UnmatchedFile(format!("{name} has no candidate")));
    }
    if let Some(name) = cands.keys().find(|k| !refs.contains_key(*k)) {
        return Err(QualityError::UnmatchedFile(format!("{name} has no reference")));
    }
    refs.iter()
        .map(|(name, path)| Ok((name.clone(), load_mask(path)?, load_mask(&cands[name])?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_pgm_with_comments() {
        let m = parse_pgm(b"P2\n# mask\n3 2\n# max\n255\n0 255 0\n1 0 0\n").unwrap();
        assert_eq!((m.width(), m.height()), (3, 2));
        assert_eq!(m.pixels(), &[false, true, false, true, false, false]);
    }

    #[test]
    fn binary_pgm_round_trip() {
        let m = BinaryMask::from_active(4, 3, &[(0, 0), (2, 3), (1, 1)]).unwrap();
        assert_eq!(parse_pgm(&write_pgm(&m)).unwrap(), m);
    }

    #[test]
    fn sixteen_bit_pgm() {
        let mut bytes = b"P5 2 1 65535\n".to_vec();
        bytes.extend([0x00, 0x00, 0x01, 0x00]);
        assert_eq!(parse_pgm(&bytes).unwrap().pixels(), &[false, true]);
    }

    #[test]
    fn pgm_errors() {
        for bad in [
            &b"P6\n1 1\n255\n\x00"[..],
            b"P5\n2 2\n255\n\x00",
            b"P5\n0 2\n255\n",
            b"P2\n1 1\n255\n300\n",
            b"P2\n2 1\n0\n0 0\n",
            b"P5\nx 1\n255\n\x00",
            b"",
        ] {
            assert_eq!(parse_pgm(bad).unwrap_err().name(), "MalformedMask", "{bad:?}");
        }
    }

    #[test]
    fn png_round_trip() {
        let img = image::GrayImage::from_fn(3, 2, |x, y| image::Luma([if x == y { 255 } else { 0 }]));
        let mut bytes = Vec::new();
        img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png).unwrap();
        let m = decode_mask(&bytes).unwrap();
        assert_eq!(m, BinaryMask::from_active(3, 2, &[(0, 0), (1, 1)]).unwrap());
    }

    #[test]
    fn probability_threshold() {
        let m = BinaryMask::from_probabilities(2, 2, &[0.1, 0.5, 0.51, 0.9], 0.5).unwrap();
        assert_eq!(m.pixels(), &[false, false, true, true]);
    }

    #[test]
    fn directory_pairing() {
        let r = tempfile::tempdir().unwrap();
        let c = tempfile::tempdir().unwrap();
        let m = BinaryMask::from_active(2, 2, &[(0, 0)]).unwrap();
        for d in [r.path(), c.path()] {
            std::fs::write(d.join("a.pgm"), write_pgm(&m)).unwrap();
        }
        std::fs::write(r.path().join("notes.txt"), "ignored").unwrap();
        let pairs = load_mask_pairs(r.path(), c.path()).unwrap();
        assert_eq!(pairs.len(), 1);
        std::fs::write(r.path().join("b.pgm"), write_pgm(&m)).unwrap();
        assert_eq!(load_mask_pairs(r.path(), c.path()).unwrap_err().name(), "UnmatchedFile");
    }
}
