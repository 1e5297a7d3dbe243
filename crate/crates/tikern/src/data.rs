//! Dataset ingestion and synthesis: IDX files, translated/rotated variants,
//! seeded subsampling, and a binary cache format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::derive_rng;
use crate::transforms::{Interp, TransformDesc};

const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
const IDX_LABEL_MAGIC: u32 = 0x0000_0801;
const CACHE_MAGIC: &[u8; 4] = b"TKDC";
const CACHE_VERSION: u32 = 1;

/// Images with class labels and a record of how they were produced.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub images: Vec<Image>,
    pub labels: Vec<u32>,
    /// Free-form provenance: source path or "translated(seed=...)" etc.
    pub provenance: String,
}

impl LabeledDataset {
    pub fn new(images: Vec<Image>, labels: Vec<u32>, provenance: String) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::CountMismatch {
                images: images.len(),
                labels: labels.len(),
            });
        }
        if images.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let (r, c) = (images[0].rows(), images[0].cols());
        if images.iter().any(|im| im.rows() != r || im.cols() != c) {
            return Err(Error::DimensionMismatch(
                format!("{r}x{c}"),
                "mixed image dimensions".into(),
            ));
        }
        Ok(LabeledDataset { images, labels, provenance })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.images[0].rows()
    }

    pub fn cols(&self) -> usize {
        self.images[0].cols()
    }

    /// Sorted distinct class ids.
    pub fn classes(&self) -> Vec<u32> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }
}

fn read_be_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| Error::Truncated(what.into()))?;
    Ok(u32::from_be_bytes(b))
}

/// Parses a big-endian IDX image/label file pair; bytes scale to [0, 1].
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledDataset> {
    let mut ir = BufReader::new(File::open(images_path)?);
    let magic = read_be_u32(&mut ir, &images_path.display().to_string())?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::BadMagic { expected: IDX_IMAGE_MAGIC, found: magic });
    }
    let count = read_be_u32(&mut ir, "image count")? as usize;
    let rows = read_be_u32(&mut ir, "image rows")? as usize;
    let cols = read_be_u32(&mut ir, "image cols")? as usize;
    let mut pixel_bytes = vec![0u8; count * rows * cols];
    ir.read_exact(&mut pixel_bytes)
        .map_err(|_| Error::Truncated(images_path.display().to_string()))?;

    let mut lr = BufReader::new(File::open(labels_path)?);
    let magic = read_be_u32(&mut lr, &labels_path.display().to_string())?;
    if magic != IDX_LABEL_MAGIC {
        return Err(Error::BadMagic { expected: IDX_LABEL_MAGIC, found: magic });
    }
    let label_count = read_be_u32(&mut lr, "label count")? as usize;
    if label_count != count {
        return Err(Error::CountMismatch { images: count, labels: label_count });
    }
    let mut label_bytes = vec![0u8; count];
    lr.read_exact(&mut label_bytes)
        .map_err(|_| Error::Truncated(labels_path.display().to_string()))?;

    let images = pixel_bytes
        .chunks(rows * cols)
        .map(|chunk| {
            Image::new(rows, cols, chunk.iter().map(|&b| b as f64 / 255.0).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = label_bytes.iter().map(|&b| b as u32).collect();
    LabeledDataset::new(images, labels, images_path.display().to_string())
}

/// Writes the dataset back as an IDX pair. Pixels are scaled by 255 and
/// rounded; a dataset loaded by `load_idx` round-trips byte-identically.
pub fn save_idx(dataset: &LabeledDataset, images_path: &Path, labels_path: &Path) -> Result<()> {
    let mut iw = BufWriter::new(File::create(images_path)?);
    iw.write_all(&IDX_IMAGE_MAGIC.to_be_bytes())?;
    iw.write_all(&(dataset.len() as u32).to_be_bytes())?;
    iw.write_all(&(dataset.rows() as u32).to_be_bytes())?;
    iw.write_all(&(dataset.cols() as u32).to_be_bytes())?;
    for img in &dataset.images {
        for &px in img.pixels() {
            iw.write_all(&[(px * 255.0).round().clamp(0.0, 255.0) as u8])?;
        }
    }
    let mut lw = BufWriter::new(File::create(labels_path)?);
    lw.write_all(&IDX_LABEL_MAGIC.to_be_bytes())?;
    lw.write_all(&(dataset.len() as u32).to_be_bytes())?;
    for &l in &dataset.labels {
        lw.write_all(&[l as u8])?;
    }
    Ok(())
}

/// Pastes each image at a uniformly random offset inside a larger canvas,
/// then adds per-pixel Gaussian noise (unclipped).
pub fn make_translated(
    dataset: &LabeledDataset,
    canvas: (usize, usize),
    noise_sigma: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    let (cr, cc) = canvas;
    let (sr, sc) = (dataset.rows(), dataset.cols());
    if sr > cr || sc > cc {
        return Err(Error::CanvasOverflow(sr, sc, cr, cc));
    }
    let noise = noise_dist(noise_sigma)?;
    let images = dataset
        .images
        .iter()
        .enumerate()
        .map(|(i, src)| {
            let mut rng = derive_rng(seed, i as u64);
            let dr = rng.random_range(0..=cr - sr);
            let dc = rng.random_range(0..=cc - sc);
            let mut px = vec![0.0f64; cr * cc];
            for p in 0..sr {
                for q in 0..sc {
                    px[(dr + p) * cc + (dc + q)] = src.get(p, q);
                }
            }
            if let Some(n) = &noise {
                for v in &mut px {
                    *v += n.sample(&mut rng);
                }
            }
            Image::new(cr, cc, px)
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(
        images,
        dataset.labels.clone(),
        format!("translated(canvas={cr}x{cc},sigma={noise_sigma},seed={seed})"),
    )
}

/// Drops classes 6 and 9, rotates each remaining image by a uniform random
/// angle in (-pi, pi] with bilinear interpolation, then adds Gaussian noise.
pub fn make_rotated(dataset: &LabeledDataset, noise_sigma: f64, seed: u64) -> Result<LabeledDataset> {
    let noise = noise_dist(noise_sigma)?;
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for (i, (src, &label)) in dataset.images.iter().zip(&dataset.labels).enumerate() {
        if label == 6 || label == 9 {
            continue;
        }
        // stream keyed by source index so the filter does not shift draws
        let mut rng = derive_rng(seed, i as u64);
        // uniform over (-pi, pi]
        let theta = std::f64::consts::PI - rng.random_range(0.0..2.0 * std::f64::consts::PI);
        let desc = TransformDesc::Rotate { theta, interp: Interp::Bilinear };
        let mut img = desc.apply(src);
        if let Some(n) = &noise {
            let mut px = img.pixels().to_vec();
            for v in &mut px {
                *v += n.sample(&mut rng);
            }
            img = Image::new(img.rows(), img.cols(), px)?;
        }
        images.push(img);
        labels.push(label);
    }
    LabeledDataset::new(
        images,
        labels,
        format!("rotated(sigma={noise_sigma},seed={seed})"),
    )
}

fn noise_dist(sigma: f64) -> Result<Option<Normal<f64>>> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidConfig(format!("noise sigma {sigma} must be >= 0")));
    }
    if sigma == 0.0 {
        Ok(None)
    } else {
        Ok(Some(Normal::new(0.0, sigma).expect("finite sigma")))
    }
}

/// Sample without replacement; stratified mode balances class counts,
/// giving the remainder to the classes with the smallest ids.
pub fn subsample(
    dataset: &LabeledDataset,
    n: usize,
    seed: u64,
    stratified: bool,
) -> Result<LabeledDataset> {
    if n > dataset.len() {
        return Err(Error::SubsampleTooLarge { requested: n, available: dataset.len() });
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = derive_rng(seed, 0);
    let chosen: Vec<usize> = if stratified {
        let classes = dataset.classes();
        let per = n / classes.len();
        let extra = n % classes.len();
        let mut chosen = Vec::with_capacity(n);
        for (ci, &class) in classes.iter().enumerate() {
            let mut pool: Vec<usize> = dataset
                .labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == class)
                .map(|(i, _)| i)
                .collect();
            let want = per + usize::from(ci < extra);
            if want > pool.len() {
                return Err(Error::SubsampleTooLarge { requested: want, available: pool.len() });
            }
            pool.shuffle(&mut rng);
            chosen.extend_from_slice(&pool[..want]);
        }
        chosen
    } else {
        let mut pool: Vec<usize> = (0..dataset.len()).collect();
        pool.shuffle(&mut rng);
        pool.truncate(n);
        pool
    };
    LabeledDataset::new(
        chosen.iter().map(|&i| dataset.images[i].clone()).collect(),
        chosen.iter().map(|&i| dataset.labels[i]).collect(),
        format!("subsample(n={n},seed={seed},stratified={stratified}) of {}", dataset.provenance),
    )
}

/// Binary cache: faster to reload than IDX and lossless for synthetic
/// datasets whose pixels leave [0, 1].
pub fn save_cache(dataset: &LabeledDataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&(dataset.len() as u32).to_le_bytes())?;
    w.write_all(&(dataset.rows() as u32).to_le_bytes())?;
    w.write_all(&(dataset.cols() as u32).to_le_bytes())?;
    let prov = dataset.provenance.as_bytes();
    w.write_all(&(prov.len() as u32).to_le_bytes())?;
    w.write_all(prov)?;
    for &l in &dataset.labels {
        w.write_all(&l.to_le_bytes())?;
    }
    for img in &dataset.images {
        for &px in img.pixels() {
            w.write_all(&(px as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_cache(path: &Path) -> Result<LabeledDataset> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::Truncated(path.display().to_string()))?;
    if &magic != CACHE_MAGIC {
        return Err(Error::BadMagic {
            expected: u32::from_be_bytes(*CACHE_MAGIC),
            found: u32::from_be_bytes(magic),
        });
    }
    let mut le = [0u8; 4];
    let mut read_le = |r: &mut BufReader<File>, what: &str| -> Result<u32> {
        r.read_exact(&mut le).map_err(|_| Error::Truncated(what.into()))?;
        Ok(u32::from_le_bytes(le))
    };
    let version = read_le(&mut r, "version")?;
    if version != CACHE_VERSION {
        return Err(Error::BadFormat(format!("unsupported cache version {version}")));
    }
    let count = read_le(&mut r, "count")? as usize;
    let rows = read_le(&mut r, "rows")? as usize;
    let cols = read_le(&mut r, "cols")? as usize;
    let prov_len = read_le(&mut r, "provenance length")? as usize;
    let mut prov = vec![0u8; prov_len];
    r.read_exact(&mut prov).map_err(|_| Error::Truncated("provenance".into()))?;
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        labels.push(read_le(&mut r, "label")?);
    }
    let mut images = Vec::with_capacity(count);
    let mut buf = vec![0u8; rows * cols * 4];
    for _ in 0..count {
        r.read_exact(&mut buf).map_err(|_| Error::Truncated("pixels".into()))?;
        let px = buf
            .chunks(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        images.push(Image::new(rows, cols, px)?);
    }
    LabeledDataset::new(
        images,
        labels,
        String::from_utf8(prov).map_err(|e| Error::BadFormat(e.to_string()))?,
    )
}
