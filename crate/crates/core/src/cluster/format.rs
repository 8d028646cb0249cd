//! Binary formats for embeddings and fitted models. All integers and floats
//! are little-endian.
//!
//! Embeddings: `b"LXEMB\0\0\x01"`, `u64` count, `u64` dim, then
//! `count * dim` `f32` values row by row. Document ids live in a text
//! sidecar, one decimal id per line, in row order.
//!
//! Model: `b"LXKMEANS"`, `u32` version, `u32` source scalar width in bytes,
//! `u64` k, `u64` dim, `u64` seed, `u64` max_iter, `f64` tol, `u64` n_init,
//! `u64` iterations, `f64` inertia, then `k * dim` `f64` centroid values.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ClusterModel, EmbeddingMatrix, KMeansParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const EMBEDDING_MAGIC: &[u8; 8] = b"LXEMB\0\0\x01";
const MODEL_MAGIC: &[u8; 8] = b"LXKMEANS";
const MODEL_VERSION: u32 = 1;

fn read_array<const N: usize>(r: &mut impl Read, path: &Path) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64> {
    read_array::<8>(r, path).map(u64::from_le_bytes)
}

fn read_f64(r: &mut impl Read, path: &Path) -> Result<f64> {
    read_array::<8>(r, path).map(f64::from_le_bytes)
}

pub fn read_ids(path: impl AsRef<Path>) -> Result<Vec<u64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ids = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        ids.push(line.parse().map_err(|_| {
            Error::Validation(format!("{}:{}: invalid document id {line:?}", path.display(), i + 1))
        })?);
    }
    Ok(ids)
}

pub fn read_embeddings<T: Scalar>(path: impl AsRef<Path>, ids_path: impl AsRef<Path>) -> Result<EmbeddingMatrix<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    if &read_array::<8>(&mut r, path)? != EMBEDDING_MAGIC {
        return Err(Error::Validation(format!("{}: not an embedding file", path.display())));
    }
    let count = read_u64(&mut r, path)? as usize;
    let dim = read_u64(&mut r, path)? as usize;
    let ids = read_ids(ids_path.as_ref())?;
    if ids.len() != count {
        return Err(Error::Validation(format!(
            "{}: header declares {count} rows but id sidecar has {}",
            path.display(),
            ids.len()
        )));
    }
    let mut data = Vec::with_capacity(count * dim);
    for _ in 0..count * dim {
        data.push(T::widen_f32(f32::from_le_bytes(read_array::<4>(&mut r, path)?)));
    }
    if r.read(&mut [0u8; 1]).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::Validation(format!("{}: trailing bytes after body", path.display())));
    }
    EmbeddingMatrix::new(ids, dim, data)
}

/// Writes the matrix as `f32` values plus its id sidecar.
pub fn write_embeddings<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    path: impl AsRef<Path>,
    ids_path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(EMBEDDING_MAGIC).map_err(io)?;
    w.write_all(&(emb.len() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&(emb.dim() as u64).to_le_bytes()).map_err(io)?;
    for v in emb.as_slice() {
        let v = v.to_f32().unwrap_or(f32::NAN);
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)?;

    let ids_path = ids_path.as_ref();
    let io = |e| Error::io(ids_path, e);
    let mut w = BufWriter::new(File::create(ids_path).map_err(io)?);
    for id in emb.ids() {
        writeln!(w, "{id}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_model<T: Scalar>(model: &ClusterModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let p = &model.params;
    let mut header = Vec::with_capacity(88);
    header.extend_from_slice(MODEL_MAGIC);
    header.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    header.extend_from_slice(&(std::mem::size_of::<T>() as u32).to_le_bytes());
    for v in [p.k as u64, model.dim as u64, p.seed, p.max_iter as u64] {
        header.extend_from_slice(&v.to_le_bytes());
    }
    header.extend_from_slice(&p.tol.to_le_bytes());
    header.extend_from_slice(&(p.n_init as u64).to_le_bytes());
    header.extend_from_slice(&(model.iterations as u64).to_le_bytes());
    header.extend_from_slice(&model.inertia.to_f64().unwrap_or(f64::NAN).to_le_bytes());
    w.write_all(&header).map_err(io)?;
    for c in &model.centroids {
        w.write_all(&c.to_f64().unwrap_or(f64::NAN).to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_model<T: Scalar>(path: impl AsRef<Path>) -> Result<ClusterModel<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    if &read_array::<8>(&mut r, path)? != MODEL_MAGIC {
        return Err(Error::Validation(format!("{}: not a k-means model file", path.display())));
    }
    let version = u32::from_le_bytes(read_array::<4>(&mut r, path)?);
    if version != MODEL_VERSION {
        return Err(Error::Validation(format!(
            "{}: unsupported model version {version}",
            path.display()
        )));
    }
    let _width = u32::from_le_bytes(read_array::<4>(&mut r, path)?);
    let k = read_u64(&mut r, path)? as usize;
    let dim = read_u64(&mut r, path)? as usize;
    let seed = read_u64(&mut r, path)?;
    let max_iter = read_u64(&mut r, path)? as usize;
    let tol = read_f64(&mut r, path)?;
    let n_init = read_u64(&mut r, path)? as usize;
    let iterations = read_u64(&mut r, path)? as usize;
    let inertia = read_f64(&mut r, path)?;
    let mut centroids = Vec::with_capacity(k * dim);
    for _ in 0..k * dim {
        let v = read_f64(&mut r, path)?;
        if !v.is_finite() {
            return Err(Error::Validation(format!("{}: non-finite centroid", path.display())));
        }
        centroids.push(T::from_f64(v).expect("finite value converts"));
    }
    Ok(ClusterModel {
        params: KMeansParams {
            k,
            seed,
            max_iter,
            tol,
            n_init,
        },
        dim,
        centroids,
        inertia: T::from_f64(inertia).unwrap_or_else(T::nan),
        iterations,
        inertia_history: Vec::new(),
    })
}
