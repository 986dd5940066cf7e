//! Adaptive quadrature over [a, b] with user supplied breakpoints.
//!
//! Each smooth piece is handed to a double-exponential rule; pieces whose
//! error estimate misses the target are bisected up to a fixed depth.

use quadrature::double_exponential;

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 18;

/// Integrates `f` over `[a, b]`.
///
/// `breaks` are points where `f` (or a derivative) jumps; they are sorted and
/// clipped to `[a, b]`. Every piece between consecutive breakpoints is further
/// cut into `panels` equal sub-intervals, which helps oscillatory integrands.
pub fn integrate<F>(f: F, a: f64, b: f64, breaks: &[f64], panels: usize, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if b <= a {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let panels = panels.max(1);
    let pieces = (cuts.len() - 1) * panels;
    let piece_tol = tol / pieces as f64;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let h = (w[1] - w[0]) / panels as f64;
        for p in 0..panels {
            let lo = w[0] + h * p as f64;
            let hi = if p + 1 == panels { w[1] } else { lo + h };
            total += adaptive(&f, lo, hi, piece_tol, 0)?;
        }
    }
    Ok(total)
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
    let out = double_exponential::integrate(f, a, b, tol);
    if out.error_estimate <= tol {
        return Ok(out.integral);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature(out.error_estimate));
    }
    let mid = 0.5 * (a + b);
    Ok(adaptive(f, a, mid, 0.5 * tol, depth + 1)? + adaptive(f, mid, b, 0.5 * tol, depth + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_with_kink() {
        // |x - 0.3| on [0, 1] = (0.09 + 0.49) / 2
        let v = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], 1, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 0.29, epsilon = 1e-12);
    }

    #[test]
    fn oscillatory_needs_panels() {
        let k = 137.0;
        let v =
            integrate(|x: f64| (2.0 * std::f64::consts::PI * k * x).cos().powi(2), 0.0, 1.0, &[], 64, 1e-11).unwrap();
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(integrate(|_| 1.0, 1.0, 1.0, &[], 1, 1e-9).unwrap(), 0.0);
    }
}
