//! IDX (MNIST) file decoding.

use std::path::Path;

use thiserror::Error;

use super::Dataset;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum IdxError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad magic 0x{found:08x}, expected 0x{expected:08x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("truncated IDX data: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: u8, num_classes: usize },
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32, IdxError> {
    let slice = bytes.get(at..at + 4).ok_or(IdxError::Truncated { needed: at + 4, available: bytes.len() })?;
    Ok(u32::from_be_bytes(slice.try_into().expect("4 bytes")))
}

fn expect_magic(bytes: &[u8], expected: u32) -> Result<(), IdxError> {
    let found = be_u32(bytes, 0)?;
    if found != expected {
        return Err(IdxError::BadMagic { expected, found });
    }
    Ok(())
}

/// Decodes an image file into (count, pixels-per-image, pixels scaled to [0, 1]).
pub fn parse_images(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>), IdxError> {
    expect_magic(bytes, IMAGES_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let pixels = rows * cols;
    let needed = 16 + count * pixels;
    if bytes.len() < needed {
        return Err(IdxError::Truncated { needed, available: bytes.len() });
    }
    let data = bytes[16..needed].iter().map(|&b| b as f64 / 255.0).collect();
    Ok((count, pixels, data))
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>, IdxError> {
    expect_magic(bytes, LABELS_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let needed = 8 + count;
    if bytes.len() < needed {
        return Err(IdxError::Truncated { needed, available: bytes.len() });
    }
    Ok(bytes[8..needed].to_vec())
}

/// Builds a dataset from raw image and label file contents.
pub fn parse_idx(images: &[u8], labels: &[u8], num_classes: usize) -> Result<Dataset, IdxError> {
    let (count, pixels, features) = parse_images(images)?;
    let labels = parse_labels(labels)?;
    if labels.len() != count {
        return Err(IdxError::CountMismatch { images: count, labels: labels.len() });
    }
    if let Some(&label) = labels.iter().find(|&&l| l as usize >= num_classes) {
        return Err(IdxError::LabelOutOfRange { label, num_classes });
    }
    Ok(Dataset::new(pixels, num_classes, features, labels.into_iter().map(usize::from).collect())
        .expect("shape checked above"))
}

fn read(path: &Path) -> Result<Vec<u8>, IdxError> {
    std::fs::read(path).map_err(|source| IdxError::Io { path: path.display().to_string(), source })
}

/// Loads an MNIST-style image/label file pair (10 classes).
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset, IdxError> {
    parse_idx(&read(images_path.as_ref())?, &read(labels_path.as_ref())?, 10)
}

/// Serialises a dataset back to IDX bytes; features are rounded to bytes.
pub fn encode_idx(data: &Dataset, rows: u32, cols: u32) -> (Vec<u8>, Vec<u8>) {
    let mut images = Vec::with_capacity(16 + data.features().len());
    images.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    images.extend_from_slice(&(data.len() as u32).to_be_bytes());
    images.extend_from_slice(&rows.to_be_bytes());
    images.extend_from_slice(&cols.to_be_bytes());
    images.extend(data.features().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    let mut labels = Vec::with_capacity(8 + data.len());
    labels.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    labels.extend_from_slice(&(data.len() as u32).to_be_bytes());
    labels.extend(data.labels().iter().map(|&l| l as u8));
    (images, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (Vec<u8>, Vec<u8>) {
        let mut images = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 28, 0, 0, 0, 28];
        for i in 0..2 * 784 {
            images.push((i % 256) as u8);
        }
        let labels = vec![0, 0, 8, 1, 0, 0, 0, 2, 7, 3];
        (images, labels)
    }

    #[test]
    fn decodes_hand_built_fixture() {
        let (img, lab) = fixture();
        let d = parse_idx(&img, &lab, 10).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.num_features(), 784);
        assert_eq!(d.labels(), &[7, 3]);
        assert_eq!(d.features_of(0)[0], 0.0);
        assert_eq!(d.features_of(0)[255], 1.0);
        assert_eq!(d.features_of(1)[0], (784 % 256) as f64 / 255.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (mut img, lab) = fixture();
        assert!(matches!(parse_idx(&lab, &lab, 10), Err(IdxError::BadMagic { .. })));
        let short_labels = vec![0, 0, 8, 1, 0, 0, 0, 1, 7];
        assert!(matches!(
            parse_idx(&img, &short_labels, 10),
            Err(IdxError::CountMismatch { images: 2, labels: 1 })
        ));
        img.truncate(100);
        assert!(matches!(parse_idx(&img, &lab, 10), Err(IdxError::Truncated { .. })));
        assert!(matches!(parse_labels(&[0, 0]), Err(IdxError::Truncated { .. })));
    }
}
