//! Gram matrices `G_{mm'} = <phi_m, phi_m'>` and their cache.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::dictionary::{Block, Dictionary, DictionaryKind, Member};
use crate::error::{Error, Result};
use crate::{quad, wavelet};

const MAGIC: [u8; 8] = *b"DDGRAM\0\0";
const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 1 + 3 + 8 + 8;
const QUAD_TOL: f64 = 1e-12;

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl GramMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        Ok(Self { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let dim = m.nrows();
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            data.extend(m.row(i).iter().copied());
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// `G x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim).map(|i| dot(self.row(i), x)).collect()
    }

    /// `x' G x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                acc += xi * dot(self.row(i), x);
            }
        }
        acc
    }

    /// Principal submatrix on `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    /// Rectangular block with rows `rows` and columns `cols`.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |a, b| self.get(rows[a], cols[b]))
    }

    /// `max |G - I|`
    pub fn identity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for (j, &v) in self.row(i).iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    /// `max |G - G'|`
    pub fn symmetry_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.to_dmatrix().symmetric_eigenvalues().min()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn is_trig(m: &Member) -> bool {
    matches!(m, Member::Cos(_) | Member::Sin(_))
}

/// `int_a^b phi(x) dx` for a trigonometric member.
fn trig_integral(m: &Member, a: f64, b: f64) -> f64 {
    match *m {
        Member::Cos(k) => {
            let w = 2.0 * PI * k as f64;
            SQRT_2 * ((w * b).sin() - (w * a).sin()) / w
        }
        Member::Sin(k) => {
            let w = 2.0 * PI * k as f64;
            SQRT_2 * ((w * a).cos() - (w * b).cos()) / w
        }
        _ => unreachable!("not a trigonometric member"),
    }
}

/// Closed-form inner product, if one is available for the pair.
fn closed_form(p: &Member, q: &Member) -> Option<f64> {
    if is_trig(p) && is_trig(q) {
        return Some(if p == q { 1.0 } else { 0.0 });
    }
    if (is_trig(p) && *q == Member::Constant) || (is_trig(q) && *p == Member::Constant) {
        return Some(0.0);
    }
    match (p.steps(), q.steps()) {
        (Some(sp), Some(sq)) => {
            let mut acc = 0.0;
            for &(a1, b1, v1) in sp.pieces() {
                for &(a2, b2, v2) in sq.pieces() {
                    let w = b1.min(b2) - a1.max(a2);
                    if w > 0.0 {
                        acc += v1 * v2 * w;
                    }
                }
            }
            Some(acc)
        }
        (Some(s), None) if is_trig(q) => Some(s.pieces().iter().map(|&(a, b, v)| v * trig_integral(q, a, b)).sum()),
        (None, Some(s)) if is_trig(p) => Some(s.pieces().iter().map(|&(a, b, v)| v * trig_integral(p, a, b)).sum()),
        _ => None,
    }
}

fn numeric_pair(p: &Member, q: &Member, i: usize, j: usize) -> Result<f64> {
    let mut breaks = p.breakpoints();
    breaks.extend(q.breakpoints());
    let level = |m: &Member| match *m {
        Member::Daubechies { level, .. } | Member::Bin { level, .. } | Member::Haar { level, .. } => level,
        _ => 0,
    };
    let resolution = level(p).max(level(q));
    let panels = (1usize << (resolution + 3)).max(4 * (p.frequency().max(q.frequency()) as usize + 1));
    quad::integrate(|x| p.eval(x) * q.eval(x), 0.0, 1.0, &breaks, panels, QUAD_TOL).map_err(|e| match e {
        Error::Quadrature(est) => Error::QuadraturePair(i, j, est),
        other => other,
    })
}

/// Coefficient rows at the finest scaling level for every member of a
/// wavelet block; the Gram block is `C C'` because the periodic scaling
/// functions at one level are orthonormal.
fn wavelet_coefficients(members: &[Member], levels: u32) -> DMatrix<f64> {
    let width = 1usize << levels;
    let mut c = DMatrix::zeros(members.len(), width);
    for (r, m) in members.iter().enumerate() {
        let row = match *m {
            Member::Constant => wavelet::constant_coefficients(levels),
            Member::Daubechies { level, k } => wavelet::detail_coefficients(level, k, levels),
            _ => unreachable!("wavelet block holds only wavelet members"),
        };
        for (col, v) in row.into_iter().enumerate() {
            c[(r, col)] = v;
        }
    }
    c
}

/// Computes the Gram matrix of `dict`.
pub fn compute_gram(dict: &Dictionary) -> Result<GramMatrix> {
    let m = dict.len();
    let members = dict.members();
    // index ranges covered by the coefficient route
    let mut wavelet_range = None;
    let mut data = vec![0.0; m * m];
    for block in dict.blocks() {
        if let Block::Daubechies { offset, levels } = *block {
            let size = 1usize << levels;
            let c = wavelet_coefficients(&members[offset..offset + size], levels);
            let g = &c * c.transpose();
            for a in 0..size {
                for b in 0..size {
                    data[(offset + a) * m + offset + b] = g[(a, b)];
                }
            }
            wavelet_range = Some(offset..offset + size);
        }
    }
    let in_wavelet = |i: usize| wavelet_range.as_ref().is_some_and(|r| r.contains(&i));

    let rows: Vec<Result<Vec<(usize, f64)>>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::with_capacity(m - i);
            for j in i..m {
                if in_wavelet(i) && in_wavelet(j) {
                    continue;
                }
                let v = match closed_form(&members[i], &members[j]) {
                    Some(v) => v,
                    None => numeric_pair(&members[i], &members[j], i, j)?,
                };
                out.push((j, v));
            }
            Ok(out)
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row? {
            data[i * m + j] = v;
            data[j * m + i] = v;
        }
    }
    // symmetrise the coefficient block exactly
    for i in 0..m {
        for j in i + 1..m {
            let v = 0.5 * (data[i * m + j] + data[j * m + i]);
            data[i * m + j] = v;
            data[j * m + i] = v;
        }
    }
    GramMatrix::new(m, data)
}

type CacheKey = (DictionaryKind, usize, usize);

/// Memoises Gram matrices by `(kind, n, M)`, optionally persisting them to a
/// directory of checksummed binary files.
#[derive(Debug, Default)]
pub struct GramCache {
    dir: Option<PathBuf>,
    memo: Mutex<HashMap<CacheKey, Arc<GramMatrix>>>,
}

impl GramCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()), memo: Mutex::default() }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn file_name(kind: DictionaryKind, n: usize, m: usize) -> String {
        format!("gram-{kind}-n{n}-m{m}.bin")
    }

    pub fn get(&self, dict: &Dictionary) -> Result<Arc<GramMatrix>> {
        let key = (dict.kind(), dict.n(), dict.len());
        if let Some(g) = self.memo.lock().expect("gram cache poisoned").get(&key) {
            return Ok(Arc::clone(g));
        }
        let gram = match &self.dir {
            Some(dir) => {
                let path = dir.join(Self::file_name(key.0, key.1, key.2));
                match read_cache_file(&path, key) {
                    Ok(g) => g,
                    Err(_) => {
                        let g = compute_gram(dict)?;
                        write_cache_file(&path, key, &g)?;
                        g
                    }
                }
            }
            None => compute_gram(dict)?,
        };
        let gram = Arc::new(gram);
        self.memo.lock().expect("gram cache poisoned").insert(key, Arc::clone(&gram));
        Ok(gram)
    }
}

fn encode(key: CacheKey, gram: &GramMatrix) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * gram.data.len() + 32);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.push(key.0.tag());
    buf.extend_from_slice(&[0u8; 3]);
    buf.extend_from_slice(&(key.1 as u64).to_le_bytes());
    buf.extend_from_slice(&(key.2 as u64).to_le_bytes());
    for v in &gram.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    buf
}

/// Writes a cache file (via a temporary file and rename).
pub fn write_cache_file(path: &Path, key: (DictionaryKind, usize, usize), gram: &GramMatrix) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("bin.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&encode(key, gram))?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads and validates a cache file against the expected key.
pub fn read_cache_file(path: &Path, key: (DictionaryKind, usize, usize)) -> Result<GramMatrix> {
    let bytes = fs::read(path)?;
    let m = key.2;
    let expected_len = HEADER_LEN + 8 * m * m + 32;
    if bytes.len() != expected_len {
        return Err(Error::Cache(format!("{}: length {} != {}", path.display(), bytes.len(), expected_len)));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != checksum {
        return Err(Error::Cache(format!("{}: checksum mismatch", path.display())));
    }
    if body[..8] != MAGIC {
        return Err(Error::Cache(format!("{}: bad magic", path.display())));
    }
    let u64_at = |o: usize| u64::from_le_bytes(body[o..o + 8].try_into().expect("8 bytes"));
    let version = u32::from_le_bytes(body[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Cache(format!("{}: version {version}", path.display())));
    }
    if body[12] != key.0.tag() || u64_at(16) != key.1 as u64 || u64_at(24) != m as u64 {
        return Err(Error::Cache(format!("{}: header does not match request", path.display())));
    }
    let data = body[HEADER_LEN..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    GramMatrix::new(m, data)
}
