//! Dictionaries of unit-norm functions on [0, 1].
//!
//! Six families are available: the trigonometric basis (`Fou`), normalised
//! histogram bins (`Hist`), the Haar basis (`Haar`), periodized Daubechies
//! wavelets with six taps (`Wav`), and the two redundant unions `Mix`
//! (Fourier and bins) and `Mix2` (Fourier, bins and the Haar levels finer than
//! the bins).

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet;

/// Smallest sample size for which every sizing rule is satisfiable.
pub const MIN_SAMPLE_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DictionaryKind {
    Fou,
    Hist,
    Haar,
    Wav,
    Mix,
    Mix2,
}

impl DictionaryKind {
    pub const ALL: [DictionaryKind; 6] = [
        DictionaryKind::Fou,
        DictionaryKind::Hist,
        DictionaryKind::Haar,
        DictionaryKind::Wav,
        DictionaryKind::Mix,
        DictionaryKind::Mix2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DictionaryKind::Fou => "fou",
            DictionaryKind::Hist => "hist",
            DictionaryKind::Haar => "haar",
            DictionaryKind::Wav => "wav",
            DictionaryKind::Mix => "mix",
            DictionaryKind::Mix2 => "mix2",
        }
    }

    /// Tag stored in the Gram cache file header.
    pub fn tag(self) -> u8 {
        match self {
            DictionaryKind::Fou => 1,
            DictionaryKind::Hist => 2,
            DictionaryKind::Haar => 3,
            DictionaryKind::Wav => 4,
            DictionaryKind::Mix => 5,
            DictionaryKind::Mix2 => 6,
        }
    }

    pub fn is_orthonormal(self) -> bool {
        !matches!(self, DictionaryKind::Mix | DictionaryKind::Mix2)
    }
}

impl fmt::Display for DictionaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DictionaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DictionaryKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unknown { what: "dictionary kind", name: s.to_string() })
    }
}

/// One dictionary function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Member {
    /// The constant 1 on [0, 1].
    Constant,
    /// `sqrt(2) cos(2 pi k x)`
    Cos(u32),
    /// `sqrt(2) sin(2 pi k x)`
    Sin(u32),
    /// `2^{level/2}` on `[k 2^-level, (k+1) 2^-level)`.
    Bin { level: u32, k: u32 },
    /// `2^{level/2}` on the left half of the dyadic cell, minus that on the right half.
    Haar { level: u32, k: u32 },
    /// Periodized Daubechies wavelet.
    Daubechies { level: u32, k: u32 },
}

/// A piecewise constant function with at most two pieces.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Steps {
    pieces: [(f64, f64, f64); 2],
    len: usize,
}

impl Steps {
    pub(crate) fn pieces(&self) -> &[(f64, f64, f64)] {
        &self.pieces[..self.len]
    }
}

impl Member {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Member::Constant => 1.0,
            Member::Cos(k) => SQRT_2 * (2.0 * PI * k as f64 * x).cos(),
            Member::Sin(k) => SQRT_2 * (2.0 * PI * k as f64 * x).sin(),
            Member::Bin { level, k } => {
                let count = 1u32 << level;
                if cell(x, count) == k {
                    scale(level)
                } else {
                    0.0
                }
            }
            Member::Haar { level, k } => {
                let count = 1u32 << level;
                if cell(x, count) == k {
                    haar_sign(x, count) * scale(level)
                } else {
                    0.0
                }
            }
            Member::Daubechies { level, k } => wavelet::periodized_psi(level, k, x),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match *self {
            Member::Constant => 1.0,
            Member::Cos(_) | Member::Sin(_) => SQRT_2,
            Member::Bin { level, .. } | Member::Haar { level, .. } => scale(level),
            Member::Daubechies { level, .. } => wavelet::periodized_sup(level),
        }
    }

    pub(crate) fn steps(&self) -> Option<Steps> {
        let empty = (0.0, 0.0, 0.0);
        match *self {
            Member::Constant => Some(Steps { pieces: [(0.0, 1.0, 1.0), empty], len: 1 }),
            Member::Bin { level, k } => {
                let w = 1.0 / (1u64 << level) as f64;
                let a = k as f64 * w;
                Some(Steps { pieces: [(a, a + w, scale(level)), empty], len: 1 })
            }
            Member::Haar { level, k } => {
                let w = 1.0 / (1u64 << level) as f64;
                let a = k as f64 * w;
                let s = scale(level);
                Some(Steps { pieces: [(a, a + 0.5 * w, s), (a + 0.5 * w, a + w, -s)], len: 2 })
            }
            _ => None,
        }
    }

    /// Points where the member or its derivative is discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.steps() {
            Some(st) => st.pieces().iter().flat_map(|p| [p.0, p.1]).collect(),
            None => Vec::new(),
        }
    }

    /// Frequency of a trigonometric member, 0 otherwise.
    pub fn frequency(&self) -> u32 {
        match *self {
            Member::Cos(k) | Member::Sin(k) => k,
            _ => 0,
        }
    }
}

impl fmt::Display for Member {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Member::Constant => write!(f, "const"),
            Member::Cos(k) => write!(f, "cos({k})"),
            Member::Sin(k) => write!(f, "sin({k})"),
            Member::Bin { level, k } => write!(f, "bin({level},{k})"),
            Member::Haar { level, k } => write!(f, "haar({level},{k})"),
            Member::Daubechies { level, k } => write!(f, "db6({level},{k})"),
        }
    }
}

#[inline]
fn scale(level: u32) -> f64 {
    ((1u64 << level) as f64).sqrt()
}

/// Dyadic cell containing `x`; the right end point belongs to the last cell.
#[inline]
fn cell(x: f64, count: u32) -> u32 {
    ((x * count as f64).floor() as u32).min(count - 1)
}

#[inline]
fn haar_sign(x: f64, count: u32) -> f64 {
    let pos = x * count as f64;
    let frac = pos - cell(x, count) as f64;
    if frac < 0.5 {
        1.0
    } else {
        -1.0
    }
}

/// Contiguous family of members inside a dictionary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Block {
    Fourier { offset: usize, cos: u32, sin: u32 },
    Bins { offset: usize, level: u32 },
    Haar { offset: usize, constant: bool, lo: u32, hi: u32 },
    Daubechies { offset: usize, levels: u32 },
}

impl Block {
    fn members(&self) -> Vec<Member> {
        match *self {
            Block::Fourier { cos, sin, .. } => {
                let mut out = vec![Member::Constant];
                for k in 1..=cos.max(sin) {
                    if k <= cos {
                        out.push(Member::Cos(k));
                    }
                    if k <= sin {
                        out.push(Member::Sin(k));
                    }
                }
                out
            }
            Block::Bins { level, .. } => (0..1u32 << level).map(|k| Member::Bin { level, k }).collect(),
            Block::Haar { constant, lo, hi, .. } => {
                let mut out = Vec::new();
                if constant {
                    out.push(Member::Constant);
                }
                for level in lo..hi {
                    out.extend((0..1u32 << level).map(|k| Member::Haar { level, k }));
                }
                out
            }
            Block::Daubechies { levels, .. } => {
                let mut out = vec![Member::Constant];
                for level in 0..levels {
                    out.extend((0..1u32 << level).map(|k| Member::Daubechies { level, k }));
                }
                out
            }
        }
    }

    fn with_offset(self, offset: usize) -> Block {
        match self {
            Block::Fourier { cos, sin, .. } => Block::Fourier { offset, cos, sin },
            Block::Bins { level, .. } => Block::Bins { offset, level },
            Block::Haar { constant, lo, hi, .. } => Block::Haar { offset, constant, lo, hi },
            Block::Daubechies { levels, .. } => Block::Daubechies { offset, levels },
        }
    }

    /// Calls `f(index, value)` for every member of the block that may be
    /// nonzero at `x`.
    #[inline]
    fn visit<F: FnMut(usize, f64)>(&self, x: f64, f: &mut F) {
        match *self {
            Block::Fourier { offset, cos, sin } => {
                f(offset, 1.0);
                let mut idx = offset + 1;
                for k in 1..=cos.max(sin) {
                    let (s, c) = (2.0 * PI * k as f64 * x).sin_cos();
                    if k <= cos {
                        f(idx, SQRT_2 * c);
                        idx += 1;
                    }
                    if k <= sin {
                        f(idx, SQRT_2 * s);
                        idx += 1;
                    }
                }
            }
            Block::Bins { offset, level } => {
                let count = 1u32 << level;
                f(offset + cell(x, count) as usize, scale(level));
            }
            Block::Haar { offset, constant, lo, hi } => {
                let mut base = offset;
                if constant {
                    f(offset, 1.0);
                    base += 1;
                }
                for level in lo..hi {
                    let count = 1u32 << level;
                    let k = cell(x, count);
                    let idx = base + (count - (1u32 << lo)) as usize + k as usize;
                    f(idx, haar_sign(x, count) * scale(level));
                }
            }
            Block::Daubechies { offset, levels } => {
                f(offset, 1.0);
                for level in 0..levels {
                    let first = offset + (1usize << level);
                    for k in wavelet::active_translations(level, x) {
                        let v = wavelet::periodized_psi(level, k, x);
                        if v != 0.0 {
                            f(first + k as usize, v);
                        }
                    }
                }
            }
        }
    }
}

/// Largest `j` with `sqrt(n)/2 <= 2^j < sqrt(n)`.
pub fn histogram_level(n: usize) -> u32 {
    let mut j = 0u32;
    while 4usize.pow(j + 1) < n {
        j += 1;
    }
    j
}

/// The unique `j` with `n/2 <= 2^j < n`.
pub fn finest_level(n: usize) -> u32 {
    let mut j = 0u32;
    while (1usize << (j + 1)) < n {
        j += 1;
    }
    j
}

/// Number of cosine and sine members so that the trigonometric basis has
/// `n + 1` elements.
pub fn fourier_counts(n: usize) -> (u32, u32) {
    let cos = (n as u32).div_ceil(2);
    let sin = n as u32 / 2;
    (cos, sin)
}

#[derive(Debug, Clone)]
pub struct Dictionary {
    kind: DictionaryKind,
    n: usize,
    members: Vec<Member>,
    sup_norms: Vec<f64>,
    blocks: Vec<Block>,
}

impl Dictionary {
    /// Builds the dictionary of `kind` sized for a sample of `n` points.
    pub fn build(kind: DictionaryKind, n: usize) -> Result<Self> {
        if n < MIN_SAMPLE_SIZE {
            return Err(Error::SampleTooSmall(n));
        }
        let (cos, sin) = fourier_counts(n);
        let fourier = Block::Fourier { offset: 0, cos, sin };
        let j0 = histogram_level(n);
        let j1 = finest_level(n);
        let bins = Block::Bins { offset: 0, level: j0 };
        let blocks = match kind {
            DictionaryKind::Fou => vec![fourier],
            DictionaryKind::Hist => vec![bins],
            DictionaryKind::Haar => vec![Block::Haar { offset: 0, constant: true, lo: 0, hi: j1 }],
            DictionaryKind::Wav => vec![Block::Daubechies { offset: 0, levels: j1 }],
            DictionaryKind::Mix => vec![fourier, bins],
            DictionaryKind::Mix2 => {
                vec![fourier, bins, Block::Haar { offset: 0, constant: false, lo: j0, hi: j1 }]
            }
        };
        Ok(Self::from_blocks(kind, n, blocks))
    }

    /// Haar basis with the constant and the levels `0..levels`, i.e.
    /// `M = 2^levels` members (with `levels = log2 n` this is the sizing
    /// `2^{j0+1} = n` used for the calibration study).
    pub fn haar_with_levels(n: usize, levels: u32) -> Self {
        Self::from_blocks(DictionaryKind::Haar, n, vec![Block::Haar { offset: 0, constant: true, lo: 0, hi: levels }])
    }

    fn from_blocks(kind: DictionaryKind, n: usize, blocks: Vec<Block>) -> Self {
        let mut members = Vec::new();
        let mut placed = Vec::with_capacity(blocks.len());
        for block in blocks {
            let block = block.with_offset(members.len());
            members.extend(block.members());
            placed.push(block);
        }
        let sup_norms = members.iter().map(Member::sup_norm).collect();
        Self { kind, n, members, sup_norms, blocks: placed }
    }

    pub fn kind(&self) -> DictionaryKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of members `M`.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn member(&self, m: usize) -> Result<Member> {
        self.members.get(m).copied().ok_or(Error::MemberOutOfRange { index: m, size: self.len() })
    }

    pub fn sup_norms(&self) -> &[f64] {
        &self.sup_norms
    }

    pub(crate) fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Per-member L2 norms, computed from closed forms (step functions and
    /// trigonometric members) or from scaling coefficients (wavelets).
    pub fn l2_norms(&self) -> Vec<f64> {
        self.members
            .iter()
            .map(|m| match m {
                Member::Constant => 1.0,
                Member::Cos(_) | Member::Sin(_) => 1.0,
                Member::Daubechies { level, k } => {
                    let c = wavelet::detail_coefficients(*level, *k, level + 1);
                    c.iter().map(|v| v * v).sum::<f64>().sqrt()
                }
                other => {
                    let st = other.steps().expect("step member");
                    st.pieces().iter().map(|(a, b, v)| v * v * (b - a)).sum::<f64>().sqrt()
                }
            })
            .collect()
    }

    /// Value of member `m` at `x`.
    pub fn evaluate(&self, m: usize, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(self.member(m)?.eval(x))
    }

    /// Calls `f(m, phi_m(x))` for the members that can be nonzero at `x`.
    /// Members not visited are zero at `x`.
    #[inline]
    pub fn visit_nonzero<F: FnMut(usize, f64)>(&self, x: f64, mut f: F) {
        for block in &self.blocks {
            block.visit(x, &mut f);
        }
    }

    /// Values of `f_lambda = sum_m lambda_m phi_m` at each of `xs`.
    pub fn synthesize(&self, lambda: &[f64], xs: &[f64]) -> Result<Vec<f64>> {
        if lambda.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: lambda.len() });
        }
        xs.iter()
            .map(|&x| {
                check_domain(x)?;
                let mut acc = 0.0;
                self.visit_nonzero(x, |m, v| acc += lambda[m] * v);
                Ok(acc)
            })
            .collect()
    }
}

pub(crate) fn check_domain(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutOfDomain(x))
    }
}
