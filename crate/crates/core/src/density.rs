//! Known test densities on [0, 1]: the uniform density and the four mixtures
//! `f1`..`f4`, with exact samplers, coefficients and L2 geometry.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dictionary::{check_domain, Block, Dictionary, Member};
use crate::empirical::Sample;
use crate::error::{Error, Result};
use crate::gram::GramMatrix;
use crate::wavelet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityId {
    Uniform,
    F1,
    F2,
    F3,
    F4,
}

impl DensityId {
    pub const ALL: [DensityId; 5] = [DensityId::Uniform, DensityId::F1, DensityId::F2, DensityId::F3, DensityId::F4];
    /// The four benchmark mixtures.
    pub const BENCHMARK: [DensityId; 4] = [DensityId::F1, DensityId::F2, DensityId::F3, DensityId::F4];

    pub fn name(self) -> &'static str {
        match self {
            DensityId::Uniform => "uniform",
            DensityId::F1 => "f1",
            DensityId::F2 => "f2",
            DensityId::F3 => "f3",
            DensityId::F4 => "f4",
        }
    }
}

impl fmt::Display for DensityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DensityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DensityId::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unknown { what: "density", name: s.to_string() })
    }
}

/// One mixture component, a probability density on [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Component {
    Uniform {
        a: f64,
        b: f64,
    },
    /// `4t` on `[0, 1/2]`, `4(1 - t)` on `(1/2, 1]`.
    Triangular,
    TruncatedNormal {
        mean: f64,
        sd: f64,
    },
    /// Proportional to `exp(-rate |t - mode|)`.
    TruncatedLaplace {
        mode: f64,
        rate: f64,
    },
    /// `1 + amplitude cos(2 pi t)`.
    Cosine {
        amplitude: f64,
    },
}

const NEWTON_STEPS: usize = 64;
const NEWTON_TOL: f64 = 1e-12;

fn std_normal() -> &'static Normal {
    static N: OnceLock<Normal> = OnceLock::new();
    N.get_or_init(|| Normal::new(0.0, 1.0).expect("standard normal"))
}

impl Component {
    fn normal_mass(mean: f64, sd: f64) -> (f64, f64) {
        let n = std_normal();
        let lo = n.cdf((0.0 - mean) / sd);
        (lo, n.cdf((1.0 - mean) / sd) - lo)
    }

    fn laplace_mass(mode: f64, rate: f64) -> f64 {
        ((1.0 - (-rate * mode).exp()) + (1.0 - (-rate * (1.0 - mode)).exp())) / rate
    }

    pub fn pdf(&self, t: f64) -> f64 {
        if !(0.0..=1.0).contains(&t) {
            return 0.0;
        }
        match *self {
            Component::Uniform { a, b } => {
                if (a..=b).contains(&t) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Component::Triangular => {
                if t <= 0.5 {
                    4.0 * t
                } else {
                    4.0 * (1.0 - t)
                }
            }
            Component::TruncatedNormal { mean, sd } => {
                let (_, mass) = Self::normal_mass(mean, sd);
                let z = (t - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt() * mass)
            }
            Component::TruncatedLaplace { mode, rate } => {
                (-rate * (t - mode).abs()).exp() / Self::laplace_mass(mode, rate)
            }
            Component::Cosine { amplitude } => 1.0 + amplitude * (2.0 * PI * t).cos(),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match *self {
            Component::Uniform { a, b } => ((t - a) / (b - a)).clamp(0.0, 1.0),
            Component::Triangular => {
                if t <= 0.5 {
                    2.0 * t * t
                } else {
                    1.0 - 2.0 * (1.0 - t) * (1.0 - t)
                }
            }
            Component::TruncatedNormal { mean, sd } => {
                let (lo, mass) = Self::normal_mass(mean, sd);
                (std_normal().cdf((t - mean) / sd) - lo) / mass
            }
            Component::TruncatedLaplace { mode, rate } => {
                let z = Self::laplace_mass(mode, rate);
                if t <= mode {
                    ((-rate * (mode - t)).exp() - (-rate * mode).exp()) / (rate * z)
                } else {
                    let left = (1.0 - (-rate * mode).exp()) / (rate * z);
                    left + (1.0 - (-rate * (t - mode)).exp()) / (rate * z)
                }
            }
            Component::Cosine { amplitude } => t + amplitude * (2.0 * PI * t).sin() / (2.0 * PI),
        }
    }

    /// Inverse distribution function.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let t = match *self {
            Component::Uniform { a, b } => a + u * (b - a),
            Component::Triangular => {
                if u <= 0.5 {
                    (u / 2.0).sqrt()
                } else {
                    1.0 - ((1.0 - u) / 2.0).sqrt()
                }
            }
            Component::TruncatedNormal { mean, sd } => {
                let (lo, mass) = Self::normal_mass(mean, sd);
                mean + sd * std_normal().inverse_cdf(lo + u * mass)
            }
            Component::TruncatedLaplace { mode, rate } => {
                let z = Self::laplace_mass(mode, rate);
                let left = (1.0 - (-rate * mode).exp()) / (rate * z);
                if u <= left {
                    mode + (u * rate * z + (-rate * mode).exp()).ln() / rate
                } else {
                    mode - (1.0 - (u - left) * rate * z).ln() / rate
                }
            }
            Component::Cosine { .. } => self.newton_quantile(u),
        };
        t.clamp(0.0, 1.0)
    }

    /// Newton on the distribution function, safeguarded by a bracket.
    fn newton_quantile(&self, u: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut t = u;
        for _ in 0..NEWTON_STEPS {
            let r = self.cdf(t) - u;
            if r.abs() <= NEWTON_TOL {
                return t;
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = self.pdf(t);
            let next = t - r / d;
            t = if d > 0.0 && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        }
        t
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Component::Uniform { a, b } => vec![a, b],
            Component::Triangular => vec![0.5],
            Component::TruncatedNormal { .. } => vec![],
            Component::TruncatedLaplace { mode, .. } => vec![mode],
            Component::Cosine { .. } => vec![],
        }
    }

    fn mode(&self) -> Option<f64> {
        match *self {
            Component::TruncatedNormal { mean, .. } => Some(mean),
            Component::TruncatedLaplace { mode, .. } => Some(mode),
            _ => None,
        }
    }
}

/// An analytically known density with its sampler.
#[derive(Debug, Clone, Serialize)]
pub struct TrueDensity {
    pub id: DensityId,
    pub weights: Vec<f64>,
    pub components: Vec<Component>,
    pub sup_norm: f64,
    pub l2_norm_sq: f64,
}

const GL_DEGREE: usize = 20;

fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(GL_DEGREE).expect("degree >= 2")).as_node_weight_pairs()
}

impl TrueDensity {
    pub fn new(id: DensityId) -> Self {
        let band = Component::Uniform { a: 0.64, b: 0.80 };
        let (weights, components) = match id {
            DensityId::Uniform => (vec![1.0], vec![Component::Uniform { a: 0.0, b: 1.0 }]),
            DensityId::F1 => {
                (vec![0.47, 0.53], vec![Component::Triangular, Component::Uniform { a: 0.5, b: 0.5 + 1.0 / 75.0 }])
            }
            // the second component decays away from its mode
            DensityId::F2 => (
                vec![0.45, 0.55],
                vec![
                    Component::TruncatedNormal { mean: 0.45, sd: 0.125 },
                    Component::TruncatedLaplace { mode: 0.67, rate: 20.0 },
                ],
            ),
            DensityId::F3 => (vec![0.25, 0.75], vec![Component::Uniform { a: 0.33, b: 0.47 }, band]),
            DensityId::F4 => (vec![0.45, 0.55], vec![Component::Cosine { amplitude: 0.9 }, band]),
        };
        let mut d = Self { id, weights, components, sup_norm: 0.0, l2_norm_sq: 0.0 };
        d.sup_norm = d.compute_sup();
        d.l2_norm_sq = d.integrate_smooth(|x| d.pdf(x).powi(2), 64);
        d
    }

    /// Density value, zero outside [0, 1].
    pub fn pdf(&self, x: f64) -> f64 {
        self.weights.iter().zip(&self.components).map(|(w, c)| w * c.pdf(x)).sum()
    }

    /// Density value with a domain check.
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(self.pdf(x))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.weights.iter().zip(&self.components).map(|(w, c)| w * c.cdf(x)).sum()
    }

    /// Interior points where the density or its derivative jumps, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> =
            self.components.iter().flat_map(Component::breakpoints).filter(|&x| x > 0.0 && x < 1.0).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// `[0, b_1, ..., b_k, 1]`
    fn pieces(&self) -> Vec<f64> {
        let mut p = vec![0.0];
        p.extend(self.breakpoints());
        p.push(1.0);
        p
    }

    fn compute_sup(&self) -> f64 {
        let grid = 100_000;
        let mut best = (0..=grid).map(|i| self.pdf(i as f64 / grid as f64)).fold(0.0, f64::max);
        for x in self.breakpoints().into_iter().chain(self.components.iter().filter_map(Component::mode)) {
            best = best.max(self.pdf(x));
        }
        best
    }

    /// Composite Gauss-Legendre over the smooth pieces of the density with
    /// `panels` panels per unit length (at least one per piece).
    fn integrate_smooth<F: Fn(f64) -> f64>(&self, f: F, panels: usize) -> f64 {
        let rule = gauss_legendre();
        let mut total = 0.0;
        for w in self.pieces().windows(2) {
            let (a, b) = (w[0], w[1]);
            let count = ((b - a) * panels as f64).ceil().max(1.0) as usize;
            let h = (b - a) / count as f64;
            for p in 0..count {
                let lo = a + h * p as f64;
                let mid = lo + 0.5 * h;
                let acc: f64 = rule.iter().map(|&(x, wt)| wt * f(mid + 0.5 * h * x)).sum();
                total += 0.5 * h * acc;
            }
        }
        total
    }

    /// `n` i.i.d. draws: a component is picked by weight, then sampled by its
    /// inverse distribution function. Deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n)
            .map(|_| {
                let pick: f64 = rng.gen();
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut chosen = self.components.len() - 1;
                for (i, w) in self.weights.iter().enumerate() {
                    acc += w;
                    if pick < acc {
                        chosen = i;
                        break;
                    }
                }
                self.components[chosen].quantile(u)
            })
            .collect();
        Sample::with_seed(values, seed)
    }

    /// `beta_0m = int phi_m f_0` for every member of `dict`.
    pub fn true_coefficients(&self, dict: &Dictionary) -> Result<Vec<f64>> {
        let members = dict.members();
        let mut out = vec![0.0; members.len()];
        // step members from distribution-function differences
        for (m, member) in members.iter().enumerate() {
            if let Some(st) = member.steps() {
                out[m] = st.pieces().iter().map(|&(a, b, v)| v * (self.cdf(b) - self.cdf(a))).sum();
            }
        }
        // trigonometric members all at once on a shared node set
        let kmax = members.iter().map(Member::frequency).max().unwrap_or(0);
        if kmax > 0 {
            let (cos, sin) = self.fourier_coefficients(kmax);
            for (m, member) in members.iter().enumerate() {
                match *member {
                    Member::Cos(k) => out[m] = cos[k as usize - 1],
                    Member::Sin(k) => out[m] = sin[k as usize - 1],
                    _ => {}
                }
            }
        }
        for block in dict.blocks() {
            if let Block::Daubechies { offset, levels } = *block {
                for level in 0..levels {
                    for k in 0..1u32 << level {
                        out[offset + (1usize << level) + k as usize] = self.wavelet_coefficient(level, k);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `int sqrt(2) cos(2 pi k x) f_0(x) dx` and the sine analogue, `k = 1..=kmax`.
    fn fourier_coefficients(&self, kmax: u32) -> (Vec<f64>, Vec<f64>) {
        let rule = gauss_legendre();
        let mut cos = vec![0.0; kmax as usize];
        let mut sin = vec![0.0; kmax as usize];
        let per_unit = kmax as usize + 8;
        for w in self.pieces().windows(2) {
            let (a, b) = (w[0], w[1]);
            let count = ((b - a) * per_unit as f64).ceil().max(1.0) as usize;
            let h = (b - a) / count as f64;
            for p in 0..count {
                let mid = a + h * (p as f64 + 0.5);
                for &(x, wt) in rule {
                    let t = mid + 0.5 * h * x;
                    let fw = 0.5 * h * wt * self.pdf(t) * std::f64::consts::SQRT_2;
                    for k in 1..=kmax as usize {
                        let (s, c) = (2.0 * PI * k as f64 * t).sin_cos();
                        cos[k - 1] += fw * c;
                        sin[k - 1] += fw * s;
                    }
                }
            }
        }
        (cos, sin)
    }

    /// `int psi_jk^per f_0 = 2^{-j/2} int_0^5 psi(t) f_0(((t + k) / 2^j) mod 1) dt`,
    /// integrated cell by cell on the wavelet table (on which `psi` is
    /// linear) with a 2-point Gauss rule, cells being cut at the images of the
    /// density breakpoints.
    fn wavelet_coefficient(&self, level: u32, k: u32) -> f64 {
        let table = wavelet::table();
        let psi = table.psi_samples();
        let res = (1u64 << table.levels()) as f64;
        let h = 1.0 / res;
        let scale = (1u64 << level) as f64;
        let g = |t: f64| self.pdf(((t + k as f64) / scale).rem_euclid(1.0));

        let mut cuts = Vec::new();
        let mut bps = self.breakpoints();
        bps.push(0.0);
        for b in bps {
            // t = scale (b + l) - k inside (0, SUPPORT)
            let mut l = ((k as f64) / scale - b).floor() as i64;
            loop {
                let t = scale * (b + l as f64) - k as f64;
                if t >= wavelet::SUPPORT as f64 {
                    break;
                }
                if t > 0.0 {
                    cuts.push(t);
                }
                l += 1;
            }
        }
        cuts.sort_by(f64::total_cmp);

        let gauss = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
        let mut next_cut = 0;
        let mut total = 0.0;
        for c in 0..psi.len() - 1 {
            let (lo, hi) = (c as f64 * h, (c + 1) as f64 * h);
            let (p0, p1) = (psi[c], psi[c + 1]);
            while next_cut < cuts.len() && cuts[next_cut] <= lo {
                next_cut += 1;
            }
            if p0 == 0.0 && p1 == 0.0 {
                continue;
            }
            let mut edges = vec![lo];
            while next_cut < cuts.len() && cuts[next_cut] < hi {
                edges.push(cuts[next_cut]);
                next_cut += 1;
            }
            edges.push(hi);
            for e in edges.windows(2) {
                let width = e[1] - e[0];
                for gp in gauss {
                    let t = e[0] + gp * width;
                    let s = (t - lo) / h;
                    total += 0.5 * width * (p0 + s * (p1 - p0)) * g(t);
                }
            }
        }
        total / scale.sqrt()
    }
}

/// `|f_lambda - f_0|_2^2 = lambda' G lambda - 2 lambda' beta_0 + |f_0|_2^2`.
pub fn l2_risk(gram: &GramMatrix, beta0: &[f64], f0_l2_sq: f64, lambda: &[f64]) -> Result<f64> {
    let m = gram.dim();
    for len in [beta0.len(), lambda.len()] {
        if len != m {
            return Err(Error::DimensionMismatch { expected: m, got: len });
        }
    }
    let cross: f64 = lambda.iter().zip(beta0).map(|(l, b)| l * b).sum();
    Ok((gram.quad_form(lambda) - 2.0 * cross + f0_l2_sq).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::DictionaryKind;
    use crate::quad;
    use approx::assert_abs_diff_eq;

    #[test]
    fn point_values() {
        let f3 = TrueDensity::new(DensityId::F3);
        assert_abs_diff_eq!(f3.pdf(0.4), 0.25 / 0.14, epsilon = 1e-14);
        assert_eq!(f3.pdf(0.1), 0.0);
        assert!(f3.eval(1.5).is_err());
        let f1 = TrueDensity::new(DensityId::F1);
        assert_abs_diff_eq!(f1.sup_norm, 0.47 * 2.0 + 0.53 * 75.0, epsilon = 1e-12);
        assert_abs_diff_eq!(TrueDensity::new(DensityId::Uniform).l2_norm_sq, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn densities_integrate_to_one() {
        for id in DensityId::ALL {
            let d = TrueDensity::new(id);
            let total = quad::integrate(|x| d.pdf(x), 0.0, 1.0, &d.breakpoints(), 8, 1e-11).unwrap();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(d.cdf(1.0), 1.0, epsilon = 1e-14);
            assert_eq!(d.cdf(0.0), 0.0);
            let sq = quad::integrate(|x| d.pdf(x).powi(2), 0.0, 1.0, &d.breakpoints(), 8, 1e-10).unwrap();
            assert_abs_diff_eq!(d.l2_norm_sq, sq, epsilon = 1e-8 * sq);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for id in DensityId::ALL {
            let d = TrueDensity::new(id);
            for c in &d.components {
                for i in 1..100 {
                    let u = i as f64 / 100.0;
                    assert_abs_diff_eq!(c.cdf(c.quantile(u)), u, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn cdf_matches_integrated_pdf() {
        for id in DensityId::ALL {
            let d = TrueDensity::new(id);
            for x in [0.2, 0.46, 0.5, 0.505, 0.67, 0.7, 0.9] {
                let v = quad::integrate(|t| d.pdf(t), 0.0, x, &d.breakpoints(), 4, 1e-11).unwrap();
                assert_abs_diff_eq!(d.cdf(x), v, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn f3_support_and_determinism() {
        let d = TrueDensity::new(DensityId::F3);
        let s = d.sample(5000, 11).unwrap();
        assert!(s.values().iter().all(|&x| (0.33..=0.47).contains(&x) || (0.64..=0.80).contains(&x)));
        assert_eq!(s, d.sample(5000, 11).unwrap());
        assert_ne!(s, d.sample(5000, 12).unwrap());
    }

    #[test]
    fn coefficients_against_quadrature() {
        for id in [DensityId::F2, DensityId::F3, DensityId::F4] {
            let d = TrueDensity::new(id);
            let dict = Dictionary::build(DictionaryKind::Mix2, 64).unwrap();
            let beta0 = d.true_coefficients(&dict).unwrap();
            for m in (0..dict.len()).step_by(5) {
                let member = dict.members()[m];
                let mut breaks = d.breakpoints();
                breaks.extend(member.breakpoints());
                let panels = 64 * (member.frequency() as usize + 1);
                let q = quad::integrate(|x| member.eval(x) * d.pdf(x), 0.0, 1.0, &breaks, panels, 1e-9).unwrap();
                assert_abs_diff_eq!(beta0[m], q, epsilon = 1e-9);
            }
        }
    }

    /// The tabulated wavelet is linear between nodes `2^-(16+j)` apart in `x`;
    /// a 3-point Gauss rule per node cell, cut at the density breakpoints, is
    /// exact up to the smoothness of the density inside a cell.
    fn wavelet_oracle(d: &TrueDensity, member: Member, level: u32) -> f64 {
        let cells = 1usize << (wavelet::CASCADE_LEVELS + level);
        let h = 1.0 / cells as f64;
        let rule = GaussLegendre::new(3).unwrap();
        let bps = d.breakpoints();
        let mut total = 0.0;
        for c in 0..cells {
            let (lo, hi) = (c as f64 * h, (c + 1) as f64 * h);
            let mut edges = vec![lo];
            edges.extend(bps.iter().copied().filter(|&b| b > lo && b < hi));
            edges.push(hi);
            for e in edges.windows(2) {
                total += rule.integrate(e[0], e[1], |x| member.eval(x) * d.pdf(x));
            }
        }
        total
    }

    #[test]
    fn wavelet_coefficients_against_cellwise_oracle() {
        let dict = Dictionary::build(DictionaryKind::Wav, 64).unwrap();
        for id in [DensityId::F1, DensityId::F2, DensityId::F4] {
            let d = TrueDensity::new(id);
            let beta0 = d.true_coefficients(&dict).unwrap();
            assert_abs_diff_eq!(beta0[0], 1.0, epsilon = 1e-14);
            for m in [1usize, 2, 3, 6, 13, 20, 27, 31] {
                let member = dict.members()[m];
                let Member::Daubechies { level, .. } = member else { unreachable!() };
                let oracle = wavelet_oracle(&d, member, level);
                assert!((beta0[m] - oracle).abs() < 1e-9, "{id} {member}: {} vs {oracle}", beta0[m]);
            }
        }
    }

    #[test]
    fn risk_identity_trivial_cases() {
        let d = TrueDensity::new(DensityId::Uniform);
        let dict = Dictionary::build(DictionaryKind::Haar, 64).unwrap();
        let g = GramMatrix::identity(dict.len());
        let beta0 = d.true_coefficients(&dict).unwrap();
        assert_abs_diff_eq!(beta0[0], 1.0, epsilon = 1e-15);
        assert!(beta0[1..].iter().all(|b| b.abs() < 1e-15));
        let zero = vec![0.0; dict.len()];
        assert_abs_diff_eq!(l2_risk(&g, &beta0, d.l2_norm_sq, &zero).unwrap(), 1.0, epsilon = 1e-14);
        let mut e1 = zero.clone();
        e1[0] = 1.0;
        assert_abs_diff_eq!(l2_risk(&g, &beta0, d.l2_norm_sq, &e1).unwrap(), 0.0, epsilon = 1e-14);
    }
}
