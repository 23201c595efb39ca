//! Certification of numerical solutions as approximate zeros.
//!
//! A point is an approximate zero when Newton's method converges
//! quadratically from it; the alpha test certifies this from data at the
//! point alone: `alpha = beta * gamma < 0.03`, with `beta` the Newton step
//! norm and `gamma` replaced by a computable upper bound built from the
//! system's Weyl norm, its degrees, and the Jacobian at the point. Two
//! certified points are distinct when their inclusion balls separate, and
//! identical when one lies within the other's `(20 gamma)^-1` ball.
//!
//! Certificates computed in floating point are "soft": correct modulo
//! rounding in the certificate computation itself.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{bits_for_digits, lift_vec, lower_vec, vec_norm, BigC, CScalar, C64};
use crate::systems::{SquareSystem, SysScratch};

/// Smale's alpha threshold for certifying an approximate zero.
pub const ALPHA_THRESHOLD: f64 = 0.03;
/// Same-zero inclusion radius factor: points within `(20 gamma)^-1` of a
/// certified point share its associated zero.
pub const SAME_ZERO_FACTOR: f64 = 20.0;

/// A square certification instance: the system, its degrees, and the Weyl
/// norm of its homogenization (computed once; shared by all points).
pub struct SquareInstance {
    pub system: SquareSystem,
    pub degrees: Vec<usize>,
    pub weyl_norm: f64,
    pub n: usize,
}

impl SquareInstance {
    pub fn new(system: SquareSystem) -> Result<Self> {
        let n = system.n();
        let degrees = system.degrees();
        if degrees.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "certification needs a square system; got {} equations in {} unknowns",
                degrees.len(),
                n
            )));
        }
        let weyl_norm = system.weyl_norm();
        Ok(SquareInstance {
            system,
            degrees,
            weyl_norm,
            n,
        })
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(1)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AlphaCertificate {
    #[serde(rename = "coords")]
    pub point: Vec<[f64; 2]>,
    pub beta: f64,
    pub gamma_bound: f64,
    pub alpha: f64,
    pub precision_bits: u32,
    #[serde(rename = "verdict", serialize_with = "verdict_str")]
    pub certified: bool,
    /// Floating-point certificate (always true here; exact arithmetic is out
    /// of scope).
    pub soft: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

fn verdict_str<S: serde::Serializer>(v: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(if *v { "certified" } else { "uncertified" })
}

/// Newton step norm `|J^-1 F(x)|` at binary64.
pub fn beta(inst: &SquareInstance, x: &[C64]) -> Result<f64> {
    beta_at(inst, x)
}

/// Newton step norm at the precision of the scalar.
pub fn beta_at<T: CScalar>(inst: &SquareInstance, x: &[T]) -> Result<f64> {
    let n = inst.n;
    let mut scratch = SysScratch::new();
    let (mut vals, mut jac) = (Vec::new(), Vec::new());
    inst.system.eval_jac(x, &mut scratch, &mut vals, Some(&mut jac));
    let cond = linalg::lu_factor(&mut jac, n, &mut scratch.piv)?;
    if cond > 1e15 {
        return Err(Error::SingularJacobian { cond });
    }
    linalg::lu_solve(&jac, n, &scratch.piv, &vals, &mut scratch.sol);
    Ok(vec_norm(&scratch.sol))
}

/// Upper bound for the gamma number: `D^{3/2} / (2 |x^|) * mu(F, x)` with
/// `mu = max(1, |F|_W * |J^-1 Delta|_F)` and `Delta` the diagonal of
/// `sqrt(d_i) |x^|^{d_i - 1}`, where `x^` appends the homogenizing 1.
/// The Frobenius norm dominates the operator norm, so the bound stays valid.
pub fn gamma_bound(inst: &SquareInstance, x: &[C64]) -> Result<f64> {
    let n = inst.n;
    let mut scratch = SysScratch::new();
    let (mut vals, mut jac) = (Vec::new(), Vec::new());
    inst.system.eval_jac(x, &mut scratch, &mut vals, Some(&mut jac));
    let cond = linalg::lu_factor(&mut jac, n, &mut scratch.piv)?;
    if cond > 1e15 {
        return Err(Error::SingularJacobian { cond });
    }
    let xhat_norm = (x.iter().map(|z| z.norm_sqr()).sum::<f64>() + 1.0).sqrt();
    // columns of J^-1 Delta, via one solve per unit vector
    let mut frob2 = 0.0;
    let mut e = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        let dj = inst.degrees[j] as f64;
        let delta = dj.sqrt() * xhat_norm.powi(inst.degrees[j] as i32 - 1);
        e.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        e[j] = C64::new(delta, 0.0);
        linalg::lu_solve(&jac, n, &scratch.piv, &e, &mut scratch.sol);
        frob2 += scratch.sol.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    let mu = (inst.weyl_norm * frob2.sqrt()).max(1.0);
    let dmax = inst.max_degree() as f64;
    Ok(dmax.powf(1.5) / (2.0 * xhat_norm) * mu)
}

/// Certify a point as an approximate zero (soft, binary64 data).
pub fn certify_zero(inst: &SquareInstance, x: &[C64]) -> AlphaCertificate {
    certify_zero_at_precision(inst, x, 53)
}

/// Certify with `beta` computed at the given mantissa width; the gamma bound
/// varies continuously and is evaluated at binary64.
pub fn certify_zero_at_precision(
    inst: &SquareInstance,
    x: &[C64],
    precision_bits: u32,
) -> AlphaCertificate {
    let point = x.iter().map(|z| [z.re, z.im]).collect();
    let beta_res = if precision_bits <= 53 {
        beta_at(inst, x)
    } else {
        let xb: Vec<BigC> = lift_vec(x, precision_bits);
        beta_at(inst, &xb)
    };
    let gamma_res = gamma_bound(inst, x);
    match (beta_res, gamma_res) {
        (Ok(b), Ok(g)) => {
            let alpha = b * g;
            AlphaCertificate {
                point,
                beta: b,
                gamma_bound: g,
                alpha,
                precision_bits,
                certified: alpha < ALPHA_THRESHOLD,
                soft: true,
                reason: None,
            }
        }
        (b, g) => {
            let err = b.err().or(g.err()).expect("one side failed");
            AlphaCertificate {
                point,
                beta: f64::NAN,
                gamma_bound: f64::NAN,
                alpha: f64::NAN,
                precision_bits,
                certified: false,
                soft: true,
                reason: Some(err.to_string()),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Refinement
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Refined {
    pub point: Vec<BigC>,
    /// Final Newton step norm (the error proxy).
    pub beta: f64,
    pub precision_bits: u32,
    /// Newton step norms per iteration (for contraction diagnostics).
    pub beta_log: Vec<f64>,
}

/// Newton-refine an approximate zero to `target_digits` decimal digits,
/// working at a mantissa of at least 3.4 bits per digit.
pub fn refine(inst: &SquareInstance, x: &[C64], target_digits: u32) -> Result<Refined> {
    let prec = bits_for_digits(target_digits);
    let xb: Vec<BigC> = lift_vec(x, prec);
    refine_from(inst, xb, target_digits, prec)
}

/// Refinement continuing from an already-lifted point.
///
/// Precision is adaptive: iteration starts at `prec` and the mantissa grows
/// whenever Newton stagnates above the target (the rounding floor of the
/// step sits near cond * 2^-prec, which can exceed a tight target).
pub fn refine_from(
    inst: &SquareInstance,
    xb: Vec<BigC>,
    target_digits: u32,
    prec: u32,
) -> Result<Refined> {
    let n = inst.n;
    let target = 10f64.powi(-(target_digits as i32));
    let mut scratch: SysScratch<BigC> = SysScratch::new();
    let (mut vals, mut jac) = (Vec::new(), Vec::new());
    let mut beta_log: Vec<f64> = Vec::new();
    let mut grew = 0u32;
    let mut stalls = 0u32;
    let mut cur_prec = prec;
    let mut xb = xb;
    for iter in 0..64 {
        inst.system.eval_jac(&xb, &mut scratch, &mut vals, Some(&mut jac));
        linalg::lu_factor(&mut jac, n, &mut scratch.piv)?;
        linalg::lu_solve(&jac, n, &scratch.piv, &vals, &mut scratch.sol);
        let step = vec_norm(&scratch.sol);
        for (xi, si) in xb.iter_mut().zip(&scratch.sol) {
            *xi = xi.clone() - si.clone();
        }
        beta_log.push(step);
        if step <= target {
            return Ok(Refined {
                point: xb,
                beta: step,
                precision_bits: cur_prec,
                beta_log,
            });
        }
        if iter > 0 {
            let prev = beta_log[iter - 1];
            // strong growth is divergence; hovering near the previous step
            // is the rounding floor, cured by widening the mantissa
            if step > 4.0 * prev {
                grew += 1;
                if grew >= 3 {
                    return Err(Error::RefineDiverged {
                        iters: iter as u32 + 1,
                        last_beta: step,
                    });
                }
            } else {
                grew = 0;
            }
            if step > 0.25 * prev {
                stalls += 1;
                if stalls >= 2 {
                    if cur_prec >= prec + 160 {
                        return Err(Error::RefineDiverged {
                            iters: iter as u32 + 1,
                            last_beta: step,
                        });
                    }
                    cur_prec += 32;
                    for z in xb.iter_mut() {
                        *z = z.at_precision(cur_prec);
                    }
                    stalls = 0;
                    grew = 0;
                }
            } else {
                stalls = 0;
            }
        }
    }
    Err(Error::RefineDiverged {
        iters: 64,
        last_beta: *beta_log.last().unwrap_or(&f64::NAN),
    })
}

// ---------------------------------------------------------------------------
// Distinctness
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairVerdict {
    Distinct,
    SameZero,
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistinctnessReport {
    pub n_points: usize,
    pub all_distinct: bool,
    /// Pairs that were not distinct (everything absent is distinct).
    pub same_zero_pairs: Vec<(usize, usize)>,
    pub undecided_pairs: Vec<(usize, usize)>,
    /// Pairs close enough to need the exact test (diagnostic).
    pub pairs_tested: usize,
}

/// Pairwise distinctness of certified points.
///
/// A pair is distinct when the separation exceeds the inclusion balls
/// (`|x - y| > 2(beta_x + beta_y)`), same-zero when it is inside the
/// `(20 gamma)^-1` ball; in between, both points are refined at doubled
/// precision and retried (up to 3 rounds). Only near pairs are tested
/// exactly: a conservative spatial grid prunes pairs further apart than the
/// largest test radius.
pub fn certify_distinct(
    inst: &SquareInstance,
    points: &[Vec<C64>],
    certs: &[AlphaCertificate],
) -> DistinctnessReport {
    assert_eq!(points.len(), certs.len());
    let n_points = points.len();
    let mut same_zero_pairs = Vec::new();
    let mut undecided_pairs = Vec::new();

    // conservative prune radius from the worst certificate
    let max_beta = certs.iter().map(|c| c.beta).fold(0.0, f64::max);
    let min_gamma = certs
        .iter()
        .map(|c| c.gamma_bound)
        .fold(f64::INFINITY, f64::min);
    let radius = (4.0 * max_beta)
        .max(1.0 / (SAME_ZERO_FACTOR * min_gamma))
        .max(1e-12);
    let cell = radius * 2.0;

    // spatial hash on the first two complex coordinates
    use std::collections::HashMap;
    let mut grid: HashMap<[i64; 4], Vec<usize>> = HashMap::new();
    let key_of = |p: &[C64]| -> [i64; 4] {
        let q = |v: f64| (v / cell).floor() as i64;
        let second = if p.len() > 1 { p[1] } else { C64::new(0.0, 0.0) };
        [q(p[0].re), q(p[0].im), q(second.re), q(second.im)]
    };
    for (i, p) in points.iter().enumerate() {
        grid.entry(key_of(p)).or_default().push(i);
    }

    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let key = key_of(p);
        for d0 in -1..=1 {
            for d1 in -1..=1 {
                for d2 in -1..=1 {
                    for d3 in -1..=1 {
                        let probe = [key[0] + d0, key[1] + d1, key[2] + d2, key[3] + d3];
                        if let Some(bucket) = grid.get(&probe) {
                            for &j in bucket {
                                if j > i {
                                    candidates.push((i, j));
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    let verdicts: Vec<(usize, usize, PairVerdict)> = candidates
        .par_iter()
        .map(|&(i, j)| {
            let v = decide_pair(inst, &points[i], &points[j], &certs[i], &certs[j]);
            (i, j, v)
        })
        .collect();
    let pairs_tested = verdicts.len();
    for (i, j, v) in verdicts {
        match v {
            PairVerdict::Distinct => {}
            PairVerdict::SameZero => same_zero_pairs.push((i, j)),
            PairVerdict::Undecided => undecided_pairs.push((i, j)),
        }
    }
    DistinctnessReport {
        n_points,
        all_distinct: same_zero_pairs.is_empty() && undecided_pairs.is_empty(),
        same_zero_pairs,
        undecided_pairs,
        pairs_tested,
    }
}

fn decide_pair(
    inst: &SquareInstance,
    x: &[C64],
    y: &[C64],
    cx: &AlphaCertificate,
    cy: &AlphaCertificate,
) -> PairVerdict {
    let mut d = crate::monodromy::dist(x, y);
    let mut bx = cx.beta;
    let mut by = cy.beta;
    let gx = cx.gamma_bound;
    let mut digits = 20u32;
    for _round in 0..3 {
        if d > 2.0 * (bx + by) {
            return PairVerdict::Distinct;
        }
        if d < 1.0 / (SAME_ZERO_FACTOR * gx) {
            return PairVerdict::SameZero;
        }
        // refine both at doubled precision and retry
        digits *= 2;
        match (refine(inst, x, digits), refine(inst, y, digits)) {
            (Ok(rx), Ok(ry)) => {
                d = crate::monodromy::dist(&lower_vec(&rx.point), &lower_vec(&ry.point));
                bx = rx.beta;
                by = ry.beta;
            }
            _ => return PairVerdict::Undecided,
        }
    }
    if d > 2.0 * (bx + by) {
        PairVerdict::Distinct
    } else if d < 1.0 / (SAME_ZERO_FACTOR * gx) {
        PairVerdict::SameZero
    } else {
        PairVerdict::Undecided
    }
}

/// Certify every point in parallel.
pub fn certify_set(
    inst: &SquareInstance,
    points: &[Vec<C64>],
    precision_bits: u32,
) -> Vec<AlphaCertificate> {
    points
        .par_iter()
        .map(|p| certify_zero_at_precision(inst, p, precision_bits))
        .collect()
}
