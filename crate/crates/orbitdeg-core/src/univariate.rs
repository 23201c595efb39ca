//! Univariate complex polynomial roots (Durand-Kerner with Newton polish).
//!
//! Used for start-pair construction, where each equation reduces to one
//! univariate polynomial, and by test oracles (resultant elimination).

use crate::error::{Error, Result};
use crate::scalar::C64;

/// Evaluate a polynomial given ascending coefficients.
pub fn eval_poly(coeffs: &[C64], z: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Derivative evaluation.
pub fn eval_poly_deriv(coeffs: &[C64], z: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (k, &c) in coeffs.iter().enumerate().rev().take_while(|&(k, _)| k >= 1) {
        acc = acc * z + c * (k as f64);
    }
    acc
}

/// All complex roots of `sum coeffs[k] z^k`, with multiplicity.
///
/// The effective degree is determined by trimming trailing coefficients
/// that are tiny relative to the largest one; an effectively-constant
/// polynomial yields an error.
pub fn all_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::DegenerateInput("zero polynomial".into()));
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].norm() < 1e-13 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Err(Error::DegenerateInput(
            "constant polynomial has no roots".into(),
        ));
    }
    let p = &coeffs[..=deg];
    let lead = p[deg];

    // Cauchy bound for the root radius.
    let radius = 1.0
        + p[..deg]
            .iter()
            .map(|c| (c / lead).norm())
            .fold(0.0, f64::max);

    // Durand-Kerner from staggered points on a circle.
    let mut w: Vec<C64> = (0..deg)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * (k as f64) / (deg as f64) + 0.4;
            C64::from_polar(0.5 * radius.min(4.0).max(0.5), ang)
        })
        .collect();
    for _ in 0..400 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let mut denom = lead;
            for j in 0..deg {
                if j != i {
                    denom *= w[i] - w[j];
                }
            }
            if denom.norm() < 1e-300 {
                // coincident iterates; nudge
                w[i] += C64::new(1e-6, 1e-6);
                continue;
            }
            let delta = eval_poly(p, w[i]) / denom;
            w[i] -= delta;
            moved = moved.max(delta.norm());
        }
        if moved < 1e-14 * radius.max(1.0) {
            break;
        }
    }
    // Newton polish each root (helps clustered configurations).
    for r in w.iter_mut() {
        for _ in 0..8 {
            let d = eval_poly_deriv(p, *r);
            if d.norm() < 1e-300 {
                break;
            }
            let step = eval_poly(p, *r) / d;
            *r -= step;
            if step.norm() < 1e-15 * r.norm().max(1.0) {
                break;
            }
        }
    }
    Ok(w)
}

/// Interpolate the polynomial of degree < nodes.len() through (node, value)
/// pairs; Lagrange form, ascending coefficients. Test-oracle quality.
pub fn interpolate(nodes: &[C64], values: &[C64]) -> Vec<C64> {
    let n = nodes.len();
    let mut coeffs = vec![C64::new(0.0, 0.0); n];
    let mut basis = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        // numerator polynomial prod_{j != i} (z - node_j)
        basis.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
        basis[0] = C64::new(1.0, 0.0);
        let mut deg = 0;
        for j in 0..n {
            if j == i {
                continue;
            }
            // multiply by (z - node_j)
            for k in (0..=deg).rev() {
                let c = basis[k];
                basis[k + 1] += c;
                basis[k] = -nodes[j] * c;
            }
            deg += 1;
        }
        let mut denom = C64::new(1.0, 0.0);
        for j in 0..n {
            if j != i {
                denom *= nodes[i] - nodes[j];
            }
        }
        let w = values[i] / denom;
        for k in 0..n {
            coeffs[k] += w * basis[k];
        }
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn roots_of_known_cubic() {
        // (z - 1)(z - 2)(z + 3i) = z^3 + (-3+3i) z^2 + (2-9i) z + 6i
        let coeffs = vec![c(0.0, 6.0), c(2.0, -9.0), c(-3.0, 3.0), c(1.0, 0.0)];
        let mut roots = all_roots(&coeffs).unwrap();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        let expect = [c(0.0, -3.0), c(1.0, 0.0), c(2.0, 0.0)];
        for (r, e) in roots.iter().zip(expect.iter()) {
            assert!((r - e).norm() < 1e-10, "{r} vs {e}");
        }
    }

    #[test]
    fn roots_reconstruct_polynomial() {
        let coeffs = vec![c(1.0, -0.5), c(-2.0, 0.3), c(0.7, 1.1), c(0.9, -0.2)];
        let roots = all_roots(&coeffs).unwrap();
        assert_eq!(roots.len(), 3);
        // lead * prod (z - r) should match at a probe point
        let z = c(0.37, -1.21);
        let mut prod = coeffs[3];
        for r in &roots {
            prod *= z - r;
        }
        assert!((prod - eval_poly(&coeffs, z)).norm() < 1e-9);
    }

    #[test]
    fn interpolation_roundtrip() {
        let coeffs = vec![c(1.0, 1.0), c(0.0, -2.0), c(3.0, 0.5)];
        let nodes: Vec<C64> = (0..3)
            .map(|k| C64::from_polar(1.3, 2.1 * k as f64 + 0.2))
            .collect();
        let values: Vec<C64> = nodes.iter().map(|&z| eval_poly(&coeffs, z)).collect();
        let rec = interpolate(&nodes, &values);
        for (a, b) in rec.iter().zip(&coeffs) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_polynomial_rejected() {
        assert!(all_roots(&[c(0.0, 0.0), c(0.0, 0.0)]).is_err());
    }
}
