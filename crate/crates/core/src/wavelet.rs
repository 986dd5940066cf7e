//! Daubechies wavelet with six filter taps (three vanishing moments),
//! periodized on [0, 1].
//!
//! Point values come from the cascade algorithm: the scaling function is
//! solved exactly at the integers and refined on dyadic grids down to
//! `2^-CASCADE_LEVELS`, then linearly interpolated. Inner products between
//! periodized members are computed separately, from their scaling
//! coefficients at a fine level, which is exact up to rounding.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

pub const TAPS: usize = 6;

/// Support of the mother scaling function and wavelet is `[0, SUPPORT]`.
pub const SUPPORT: usize = TAPS - 1;

pub const CASCADE_LEVELS: u32 = 16;

/// Low-pass filter, normalised so that the taps sum to `sqrt(2)`.
pub fn lowpass() -> [f64; TAPS] {
    let a = 10f64.sqrt();
    let b = (5.0 + 2.0 * a).sqrt();
    let s = 16.0 * std::f64::consts::SQRT_2;
    [
        (1.0 + a + b) / s,
        (5.0 + a + 3.0 * b) / s,
        (10.0 - 2.0 * a + 2.0 * b) / s,
        (10.0 - 2.0 * a - 2.0 * b) / s,
        (5.0 + a - 3.0 * b) / s,
        (1.0 + a - b) / s,
    ]
}

/// Quadrature mirror of [`lowpass`]: `g[k] = (-1)^k h[TAPS - 1 - k]`.
pub fn highpass() -> [f64; TAPS] {
    let h = lowpass();
    let mut g = [0.0; TAPS];
    for (k, gk) in g.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *gk = sign * h[TAPS - 1 - k];
    }
    g
}

/// Scaling function and wavelet sampled on `[0, SUPPORT]` at step `2^-levels`.
#[derive(Debug, Clone)]
pub struct CascadeTable {
    levels: u32,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

impl CascadeTable {
    pub fn new(levels: u32) -> Self {
        let h = lowpass();
        let g = highpass();
        let res = 1usize << levels;
        let len = SUPPORT * res + 1;
        let mut phi = vec![0.0; len];

        for (i, v) in integer_values(&h).into_iter().enumerate() {
            phi[(i + 1) * res] = v;
        }

        let s2 = std::f64::consts::SQRT_2;
        for level in 1..=levels {
            let step = 1usize << (levels - level);
            let count = SUPPORT << level;
            for i in (1..count).step_by(2) {
                let idx = i * step;
                let mut acc = 0.0;
                for (k, hk) in h.iter().enumerate() {
                    if let Some(src) = (2 * idx).checked_sub(k * res) {
                        if src < len {
                            acc += hk * phi[src];
                        }
                    }
                }
                phi[idx] = s2 * acc;
            }
        }

        let mut psi = vec![0.0; len];
        for (idx, out) in psi.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, gk) in g.iter().enumerate() {
                if let Some(src) = (2 * idx).checked_sub(k * res) {
                    if src < len {
                        acc += gk * phi[src];
                    }
                }
            }
            *out = s2 * acc;
        }

        Self { levels, phi, psi }
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn phi_samples(&self) -> &[f64] {
        &self.phi
    }

    pub fn psi_samples(&self) -> &[f64] {
        &self.psi
    }

    /// Mother wavelet at `t`, zero outside its support.
    pub fn psi(&self, t: f64) -> f64 {
        interpolate(&self.psi, self.levels, t)
    }

    /// Scaling function at `t`, zero outside its support.
    pub fn phi(&self, t: f64) -> f64 {
        interpolate(&self.phi, self.levels, t)
    }

    pub fn psi_sup(&self) -> f64 {
        self.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

fn interpolate(samples: &[f64], levels: u32, t: f64) -> f64 {
    if !(t > 0.0 && t < SUPPORT as f64) {
        return 0.0;
    }
    let pos = t * (1u64 << levels) as f64;
    let i = pos.floor() as usize;
    if i + 1 >= samples.len() {
        return samples[samples.len() - 1];
    }
    let frac = pos - i as f64;
    samples[i] + frac * (samples[i + 1] - samples[i])
}

/// Values of the scaling function at 1..=SUPPORT-1: the eigenvector of the
/// refinement operator for eigenvalue 1, normalised to sum to one.
fn integer_values(h: &[f64; TAPS]) -> Vec<f64> {
    let n = SUPPORT - 1;
    let s2 = std::f64::consts::SQRT_2;
    let mut a = DMatrix::<f64>::zeros(n + 1, n);
    for i in 0..n {
        for m in 0..n {
            let k = 2 * (i + 1) as isize - (m + 1) as isize;
            let hk = if (0..TAPS as isize).contains(&k) { h[k as usize] } else { 0.0 };
            a[(i, m)] = s2 * hk - if i == m { 1.0 } else { 0.0 };
        }
    }
    for m in 0..n {
        a[(n, m)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;
    let svd = a.svd(true, true);
    let sol = svd.solve(&rhs, 1e-14).expect("refinement system has full column rank");
    sol.iter().copied().collect()
}

/// Shared table at [`CASCADE_LEVELS`] resolution.
pub fn table() -> &'static CascadeTable {
    static TABLE: OnceLock<CascadeTable> = OnceLock::new();
    TABLE.get_or_init(|| CascadeTable::new(CASCADE_LEVELS))
}

/// Periodized wavelet `psi_{jk}` on [0, 1].
pub fn periodized_psi(level: u32, k: u32, x: f64) -> f64 {
    let table = table();
    let scale = (1u64 << level) as f64;
    let t0 = scale * x - k as f64;
    let lo = (-t0 / scale).floor() as i64;
    let hi = ((SUPPORT as f64 - t0) / scale).ceil() as i64;
    let mut acc = 0.0;
    for l in lo..=hi {
        acc += table.psi(t0 + scale * l as f64);
    }
    scale.sqrt() * acc
}

/// Indices `k` at `level` whose periodized wavelet may be nonzero at `x`.
pub fn active_translations(level: u32, x: f64) -> impl Iterator<Item = u32> {
    let count = 1u32 << level;
    let (start, len) = if count as usize <= SUPPORT {
        (0, count)
    } else {
        let cell = ((x * count as f64).floor() as i64).min(count as i64 - 1);
        (cell - (SUPPORT as i64 - 1), SUPPORT as u32)
    };
    (0..len).map(move |i| (start + i as i64).rem_euclid(count as i64) as u32)
}

/// `sup |psi_{jk}|` over [0, 1], taken as the maximum over the interpolation
/// nodes (exact for the interpolant).
pub fn periodized_sup(level: u32) -> f64 {
    static CACHE: OnceLock<Vec<f64>> = OnceLock::new();
    let small = CACHE.get_or_init(|| {
        (0..3u32)
            .map(|j| {
                let nodes = 1usize << (CASCADE_LEVELS + j);
                (0..nodes).map(|i| periodized_psi(j, 0, i as f64 / nodes as f64).abs()).fold(0.0, f64::max)
            })
            .collect()
    });
    match small.get(level as usize) {
        Some(v) => *v,
        None => ((1u64 << level) as f64).sqrt() * table().psi_sup(),
    }
}

/// One step of the periodic inverse transform: coarse approximation and
/// detail vectors of length `N` to an approximation of length `2N`.
fn synthesize_step(approx: &[f64], detail: &[f64]) -> Vec<f64> {
    let h = lowpass();
    let g = highpass();
    let n2 = 2 * approx.len();
    let mut out = vec![0.0; n2];
    for k in 0..approx.len() {
        for m in 0..TAPS {
            let idx = (2 * k + m) % n2;
            out[idx] += approx[k] * h[m] + detail[k] * g[m];
        }
    }
    out
}

/// Scaling coefficients at level `finest` of the periodized wavelet `psi_{jk}`.
pub fn detail_coefficients(level: u32, k: u32, finest: u32) -> Vec<f64> {
    assert!(level < finest, "finest level must exceed the wavelet level");
    let count = 1usize << level;
    let approx = vec![0.0; count];
    let mut detail = vec![0.0; count];
    detail[k as usize] = 1.0;
    let mut cur = synthesize_step(&approx, &detail);
    for _ in level + 1..finest {
        let zeros = vec![0.0; cur.len()];
        cur = synthesize_step(&cur, &zeros);
    }
    cur
}

/// Scaling coefficients at level `finest` of the constant function 1.
pub fn constant_coefficients(finest: u32) -> Vec<f64> {
    let mut cur = vec![1.0];
    for _ in 0..finest {
        let zeros = vec![0.0; cur.len()];
        cur = synthesize_step(&cur, &zeros);
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn filter_normalisation() {
        let h = lowpass();
        let sum: f64 = h.iter().sum();
        let sq: f64 = h.iter().map(|v| v * v).sum();
        assert_abs_diff_eq!(sum, std::f64::consts::SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(sq, 1.0, epsilon = 1e-14);
        // double-shift orthogonality
        let shifted: f64 = (0..TAPS - 2).map(|k| h[k] * h[k + 2]).sum();
        assert_abs_diff_eq!(shifted, 0.0, epsilon = 1e-14);
        let g: f64 = highpass().iter().sum();
        assert_abs_diff_eq!(g, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn cascade_partition_of_unity_and_norm() {
        let t = CascadeTable::new(10);
        // sum_l phi(x - l) = 1
        for x in [0.1, 0.37, 0.5, 0.93] {
            let s: f64 = (0..SUPPORT).map(|l| t.phi(x + l as f64)).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-9);
        }
        let h = 1.0 / (1u64 << 10) as f64;
        let psi_sq: f64 = t.psi_samples().iter().map(|v| v * v).sum::<f64>() * h;
        assert_abs_diff_eq!(psi_sq, 1.0, epsilon = 1e-3);
        let psi_int: f64 = t.psi_samples().iter().sum::<f64>() * h;
        assert_abs_diff_eq!(psi_int, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn coefficient_route_is_orthonormal() {
        let finest = 6;
        let mut rows = vec![constant_coefficients(finest)];
        for j in 0..finest {
            for k in 0..(1u32 << j) {
                rows.push(detail_coefficients(j, k, finest));
            }
        }
        assert_eq!(rows.len(), 1 << finest);
        for (a, ra) in rows.iter().enumerate() {
            for (b, rb) in rows.iter().enumerate() {
                let dot: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn periodized_matches_coefficient_expansion() {
        // psi_{jk} = sum_n c_n phi_{J,n}, checked pointwise
        let (j, k, finest) = (2u32, 1u32, 5u32);
        let c = detail_coefficients(j, k, finest);
        let t = table();
        let scale = (1u64 << finest) as f64;
        for x in [0.05, 0.31, 0.62, 0.88] {
            let mut synth = 0.0;
            for (n, cn) in c.iter().enumerate() {
                for l in -1i64..=1 {
                    synth += cn * scale.sqrt() * t.phi(scale * (x + l as f64) - n as f64);
                }
            }
            assert_abs_diff_eq!(periodized_psi(j, k, x), synth, epsilon = 1e-6);
        }
    }

    #[test]
    fn active_translations_cover_support() {
        for level in 0..6u32 {
            for &x in &[0.0, 0.013, 0.5, 0.77, 0.999] {
                let active: Vec<u32> = active_translations(level, x).collect();
                for k in 0..(1u32 << level) {
                    if periodized_psi(level, k, x) != 0.0 {
                        assert!(active.contains(&k), "level {level} k {k} x {x}");
                    }
                }
            }
        }
    }
}
