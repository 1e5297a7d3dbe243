//! Gram matrix assembly and serialization.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::kernels::{KernelFunction, KernelSpec};

const GRAM_MAGIC: &[u8; 4] = b"TKGM";
const GRAM_VERSION: u32 = 1;

/// Symmetric n x n matrix of kernel evaluations with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    /// Full row-major storage; entry (i,j) computed once and mirrored.
    data: Vec<f64>,
    spec_digest: String,
    dataset_fingerprint: String,
}

impl GramMatrix {
    pub fn from_entries(
        n: usize,
        data: Vec<f64>,
        spec_digest: String,
        dataset_fingerprint: String,
    ) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(
                format!("{} entries", data.len()),
                format!("{n}x{n}"),
            ));
        }
        Ok(Self {
            n,
            data,
            spec_digest,
            dataset_fingerprint,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn spec_digest(&self) -> &str {
        &self.spec_digest
    }

    pub fn dataset_fingerprint(&self) -> &str {
        &self.dataset_fingerprint
    }

    /// Principal submatrix on the given indices (provenance carried over).
    pub fn submatrix(&self, indices: &[usize]) -> GramMatrix {
        let k = indices.len();
        let mut data = Vec::with_capacity(k * k);
        for &i in indices {
            for &j in indices {
                data.push(self.get(i, j));
            }
        }
        GramMatrix {
            n: k,
            data,
            spec_digest: self.spec_digest.clone(),
            dataset_fingerprint: self.dataset_fingerprint.clone(),
        }
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(GRAM_MAGIC)?;
        w.write_all(&GRAM_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        write_string(&mut w, &self.spec_digest)?;
        write_string(&mut w, &self.dataset_fingerprint)?;
        // row-major lower triangle
        for i in 0..self.n {
            for j in 0..=i {
                w.write_all(&self.get(i, j).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load_binary(path: &Path) -> Result<GramMatrix> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Truncated(path.display().to_string()))?;
        if &magic != GRAM_MAGIC {
            return Err(Error::BadMagic {
                expected: u32::from_be_bytes(*GRAM_MAGIC),
                found: u32::from_be_bytes(magic),
            });
        }
        let version = read_u32(&mut r)?;
        if version != GRAM_VERSION {
            return Err(Error::BadFormat(format!("unsupported gram version {version}")));
        }
        let n = read_u64(&mut r)? as usize;
        let spec_digest = read_string(&mut r)?;
        let dataset_fingerprint = read_string(&mut r)?;
        let mut data = vec![0.0; n * n];
        let mut buf = [0u8; 8];
        for i in 0..n {
            for j in 0..=i {
                r.read_exact(&mut buf)
                    .map_err(|_| Error::Truncated(path.display().to_string()))?;
                let v = f64::from_le_bytes(buf);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        GramMatrix::from_entries(n, data, spec_digest, dataset_fingerprint)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format!("{:.17e}", self.get(i, j))).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn write_string(w: &mut impl Write, s: &str) -> Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| Error::Truncated("u32".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| Error::Truncated("u64".into()))?;
    Ok(u64::from_le_bytes(b))
}

fn read_string(r: &mut impl Read) -> Result<String> {
    let len = read_u32(r)? as usize;
    let mut b = vec![0u8; len];
    r.read_exact(&mut b).map_err(|_| Error::Truncated("string".into()))?;
    String::from_utf8(b).map_err(|e| Error::BadFormat(e.to_string()))
}

/// Content fingerprint of a dataset's images.
pub fn dataset_fingerprint(images: &[Image]) -> String {
    let mut hasher = Sha256::new();
    for img in images {
        hasher.update((img.rows() as u64).to_le_bytes());
        hasher.update((img.cols() as u64).to_le_bytes());
        for &v in img.pixels() {
            hasher.update(v.to_le_bytes());
        }
    }
    let hash = hasher.finalize();
    hash.iter().take(16).map(|b| format!("{b:02x}")).collect()
}

fn check_uniform_dims(images: &[Image]) -> Result<(usize, usize)> {
    let first = images.first().ok_or(Error::EmptyDataset)?;
    let dims = (first.rows(), first.cols());
    for img in images {
        if (img.rows(), img.cols()) != dims {
            return Err(Error::DimensionMismatch(
                format!("{}x{}", img.rows(), img.cols()),
                format!("{}x{}", dims.0, dims.1),
            ));
        }
    }
    Ok(dims)
}

fn run_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(job)
}

/// Assembles the Gram matrix for a dataset. Pairs (i, j) with i <= j are
/// computed once and mirrored; the result is independent of `workers`.
pub fn assemble(images: &[Image], spec: &KernelSpec, workers: usize) -> Result<GramMatrix> {
    let (rows, cols) = check_uniform_dims(images)?;
    let f = KernelFunction::new(spec.clone(), rows, cols)?;
    assemble_with(&f, images, workers, spec.digest())
}

/// Assembly against an existing kernel function (e.g. the no-FFT path).
pub fn assemble_with(
    f: &KernelFunction,
    images: &[Image],
    workers: usize,
    spec_digest: String,
) -> Result<GramMatrix> {
    check_uniform_dims(images)?;
    let n = images.len();
    run_pool(workers, || {
        let prepared = images
            .par_iter()
            .map(|img| f.prepare(img))
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .collect();
        let values = pairs
            .par_iter()
            .map(|&(i, j)| f.eval_prepared(&prepared[i], &prepared[j]))
            .collect::<Result<Vec<_>>>()?;
        let mut data = vec![0.0; n * n];
        for (&(i, j), &v) in pairs.iter().zip(&values) {
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
        GramMatrix::from_entries(n, data, spec_digest, dataset_fingerprint(images))
    })
}

/// Kernel values between a training set (rows) and a query set (columns).
pub fn assemble_cross(
    train: &[Image],
    queries: &[Image],
    spec: &KernelSpec,
    workers: usize,
) -> Result<Vec<f64>> {
    let (rows, cols) = check_uniform_dims(train)?;
    check_uniform_dims(queries)?;
    let f = KernelFunction::new(spec.clone(), rows, cols)?;
    let n = train.len();
    let q = queries.len();
    run_pool(workers, || {
        let prep_train = train
            .par_iter()
            .map(|img| f.prepare(img))
            .collect::<Result<Vec<_>>>()?;
        let prep_q = queries
            .par_iter()
            .map(|img| f.prepare(img))
            .collect::<Result<Vec<_>>>()?;
        let mut out = vec![0.0; n * q];
        out.par_chunks_mut(q)
            .enumerate()
            .try_for_each(|(i, row)| -> Result<()> {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell = f.eval_prepared(&prep_train[i], &prep_q[j])?;
                }
                Ok(())
            })?;
        Ok(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{BaseKernel, Invariance};
    use crate::transforms::TransformGroup;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    fn random_images(count: usize, rows: usize, cols: usize, seed: u64) -> Vec<Image> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let px = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
                Image::new(rows, cols, px).unwrap()
            })
            .collect()
    }

    #[test]
    fn single_sample_normalized_linear() {
        let imgs = vec![Image::new(1, 2, vec![1.0, 2.0]).unwrap()];
        let spec = KernelSpec::new(BaseKernel::normalized_linear());
        let g = assemble(&imgs, &spec, 1).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.get(0, 0), 2.5);
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let imgs = random_images(12, 6, 6, 1);
        let spec = KernelSpec::new(BaseKernel::poly(0.1, 4))
            .with_invariance(Invariance::best(TransformGroup::CyclicTranslations));
        let g1 = assemble(&imgs, &spec, 1).unwrap();
        let g4 = assemble(&imgs, &spec, 4).unwrap();
        assert_eq!(g1.entries(), g4.entries());
    }

    #[test]
    fn matches_direct_kernel_calls() {
        let imgs = random_images(3, 4, 4, 2);
        let spec = KernelSpec::new(BaseKernel::poly(0.5, 3));
        let g = assemble(&imgs, &spec, 2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let direct = spec.base.eval(&imgs[i], &imgs[j]).unwrap();
                assert_eq!(g.get(i, j), direct);
            }
        }
    }

    #[test]
    fn exactly_symmetric() {
        let imgs = random_images(10, 5, 5, 3);
        let spec = KernelSpec::new(BaseKernel::normalized_linear())
            .with_invariance(Invariance::best(TransformGroup::CyclicTranslations));
        let g = assemble(&imgs, &spec, 4).unwrap();
        for i in 0..g.n() {
            for j in 0..g.n() {
                assert_eq!(g.get(i, j), g.get(j, i));
            }
        }
    }

    #[test]
    fn best_fit_diagonal_dominates_base_diagonal() {
        let imgs = random_images(6, 5, 5, 4);
        let base_spec = KernelSpec::new(BaseKernel::normalized_linear());
        let ti_spec = base_spec
            .clone()
            .with_invariance(Invariance::best(TransformGroup::CyclicTranslations));
        let gb = assemble(&imgs, &base_spec, 1).unwrap();
        let gt = assemble(&imgs, &ti_spec, 1).unwrap();
        for i in 0..6 {
            assert!(gt.get(i, i) >= gb.get(i, i) - 1e-12);
        }
    }

    #[test]
    fn binary_roundtrip() {
        let imgs = random_images(5, 3, 3, 5);
        let spec = KernelSpec::new(BaseKernel::poly(1.0, 2));
        let g = assemble(&imgs, &spec, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gram.bin");
        g.save_binary(&path).unwrap();
        let loaded = GramMatrix::load_binary(&path).unwrap();
        assert_eq!(g, loaded);
    }

    #[test]
    fn cross_matrix_matches_eval() {
        let train = random_images(4, 4, 4, 6);
        let queries = random_images(3, 4, 4, 7);
        let spec = KernelSpec::new(BaseKernel::normalized_linear())
            .with_invariance(Invariance::best(TransformGroup::CyclicTranslations));
        let cross = assemble_cross(&train, &queries, &spec, 2).unwrap();
        let f = KernelFunction::new(spec, 4, 4).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                let direct = f.eval(&train[i], &queries[j]).unwrap();
                assert!((cross[i * 3 + j] - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn empty_dataset_rejected() {
        let spec = KernelSpec::new(BaseKernel::normalized_linear());
        assert!(matches!(assemble(&[], &spec, 1), Err(Error::EmptyDataset)));
    }

    #[test]
    fn mixed_dims_rejected() {
        let imgs = vec![Image::zeros(2, 2), Image::zeros(3, 3)];
        let spec = KernelSpec::new(BaseKernel::normalized_linear());
        assert!(assemble(&imgs, &spec, 1).is_err());
    }
}
