//! IDX image and label files, optionally gzip-compressed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use stop_core::data::{Dataset, Sample};
use stop_core::lif::encode_direct;
use stop_core::Tensor;

use crate::error::{Failure, Result};

const UBYTE: u8 = 0x08;

/// A decoded IDX file of unsigned bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(Failure::io(path))?;
    let mut buf = Vec::new();
    if is_gzip(path) {
        GzDecoder::new(BufReader::new(file)).read_to_end(&mut buf)
    } else {
        BufReader::new(file).read_to_end(&mut buf)
    }
    .map_err(Failure::io(path))?;
    Ok(buf)
}

/// Parses the in-memory contents of an IDX file.
pub fn parse_idx(bytes: &[u8]) -> std::result::Result<IdxArray, String> {
    if bytes.len() < 4 || bytes[0] != 0 || bytes[1] != 0 {
        return Err("bad magic number".into());
    }
    if bytes[2] != UBYTE {
        return Err(format!("unsupported element type 0x{:02x}", bytes[2]));
    }
    let rank = bytes[3] as usize;
    let header = 4 + 4 * rank;
    if rank == 0 || bytes.len() < header {
        return Err("truncated header".into());
    }
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let len: usize = dims.iter().product();
    if bytes.len() - header != len {
        return Err(format!(
            "expected {len} data bytes, found {}",
            bytes.len() - header
        ));
    }
    Ok(IdxArray {
        dims,
        data: bytes[header..].to_vec(),
    })
}

pub fn read_idx(path: &Path) -> Result<IdxArray> {
    parse_idx(&read_all(path)?).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Writes an unsigned-byte IDX file, gzip-compressed when the path ends in `.gz`.
pub fn write_idx(path: &Path, array: &IdxArray) -> Result<()> {
    let mut bytes = vec![0, 0, UBYTE, array.dims.len() as u8];
    for d in &array.dims {
        bytes.extend_from_slice(&(*d as u32).to_be_bytes());
    }
    bytes.extend_from_slice(&array.data);
    let file = File::create(path).map_err(Failure::io(path))?;
    let mut w = BufWriter::new(file);
    if is_gzip(path) {
        let mut gz = GzEncoder::new(w, Compression::default());
        gz.write_all(&bytes).and_then(|_| gz.finish()?.flush())
    } else {
        w.write_all(&bytes).and_then(|_| w.flush())
    }
    .map_err(Failure::io(path))
}

/// Labelled images directly coded over `steps` time-steps. `limit` keeps
/// only the first samples.
pub fn load_images(
    images: &Path,
    labels: &Path,
    steps: usize,
    limit: Option<usize>,
) -> Result<(Dataset, Vec<usize>)> {
    let img = read_idx(images)?;
    let lab = read_idx(labels)?;
    if img.dims.len() != 3 {
        return Err(Failure::Data(format!(
            "{}: expected rank 3, got {:?}",
            images.display(),
            img.dims
        )));
    }
    if lab.dims.len() != 1 || lab.dims[0] != img.dims[0] {
        return Err(Failure::Data(format!(
            "{} images but labels have shape {:?}",
            img.dims[0], lab.dims
        )));
    }
    let (h, w) = (img.dims[1], img.dims[2]);
    let n = limit.map_or(img.dims[0], |l| l.min(img.dims[0]));
    let mut samples = Vec::with_capacity(n);
    for (i, px) in img.data.chunks_exact(h * w).take(n).enumerate() {
        let raw = Tensor::new(vec![1, h, w], px.iter().map(|v| *v as f64).collect())?;
        samples.push(Sample {
            frames: encode_direct(&raw, 255.0, steps)?,
            label: lab.data[i] as usize,
        });
    }
    Ok((Dataset::new(samples), vec![1, h, w]))
}

/// Label file next to an image file: `*-images-idx3-*` becomes `*-labels-idx1-*`.
pub fn sibling_labels(images: &Path) -> Option<std::path::PathBuf> {
    let name = images.file_name()?.to_str()?;
    name.contains("images-idx3")
        .then(|| images.with_file_name(name.replace("images-idx3", "labels-idx1")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_plain_and_gzip() {
        let dir = tempfile::tempdir().unwrap();
        let a = IdxArray {
            dims: vec![2, 2, 3],
            data: (0..12).collect(),
        };
        for name in ["x.idx", "x.idx.gz"] {
            let p = dir.path().join(name);
            write_idx(&p, &a).unwrap();
            assert_eq!(read_idx(&p).unwrap(), a);
        }
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse_idx(&[0, 0, 8]).is_err());
        assert!(parse_idx(&[1, 0, 8, 1, 0, 0, 0, 1, 5]).is_err());
        assert!(parse_idx(&[0, 0, 0x0d, 1, 0, 0, 0, 1, 5]).is_err());
        assert!(parse_idx(&[0, 0, 8, 1, 0, 0, 0, 2, 5]).is_err());
        assert_eq!(parse_idx(&[0, 0, 8, 1, 0, 0, 0, 1, 5]).unwrap().data, [5]);
    }

    #[test]
    fn images_become_direct_frames() {
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("t-images-idx3-ubyte");
        write_idx(
            &ip,
            &IdxArray {
                dims: vec![3, 1, 2],
                data: vec![0, 255, 51, 0, 255, 255],
            },
        )
        .unwrap();
        let lp = sibling_labels(&ip).unwrap();
        write_idx(
            &lp,
            &IdxArray {
                dims: vec![3],
                data: vec![4, 0, 9],
            },
        )
        .unwrap();
        let (d, shape) = load_images(&ip, &lp, 3, Some(2)).unwrap();
        assert_eq!(shape, [1, 1, 2]);
        assert_eq!(d.len(), 2);
        assert_eq!(d.samples[1].label, 0);
        assert_eq!(d.samples[1].frames.len(), 3);
        assert_eq!(d.samples[1].frames.get(2).unwrap().data(), [0.2, 0.0]);
    }

    #[test]
    fn label_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("a-images-idx3-ubyte");
        let lp = dir.path().join("a-labels-idx1-ubyte");
        write_idx(
            &ip,
            &IdxArray {
                dims: vec![2, 1, 1],
                data: vec![0, 1],
            },
        )
        .unwrap();
        write_idx(
            &lp,
            &IdxArray {
                dims: vec![3],
                data: vec![0, 1, 2],
            },
        )
        .unwrap();
        assert!(matches!(
            load_images(&ip, &lp, 1, None),
            Err(Failure::Data(_))
        ));
    }
}
