//! Completeness verification by the trace test.
//!
//! Move one defining hyperplane of the slice along a pencil; the sum of the
//! sliced image points, dehomogenized in a fixed affine chart, is an affine
//! linear function of the pencil parameter exactly when the point set is the
//! whole intersection. Sampling the sum at t in {-t1, 0, +t1} and taking the
//! second difference exposes any missing point: no proper subset moves
//! affinely.
//!
//! The pencil direction row and the dehomogenization functional are the same
//! vector `u`: on the chart `u . z = 1` the moving condition
//! `(row + t u) . z = 0` reads `row . z = -t`, a parallel translation of a
//! fixed hyperplane. Only for that coupling is the motion of each chart
//! point algebraic with affine trace; a generic direction row would move
//! the points by Mobius transformations and break linearity.

use rayon::prelude::*;
use serde::Serialize;

use crate::alpha::{refine_from, SquareInstance};
use crate::error::{Error, Result};
use crate::error::C64Display;
use crate::homotopy::{track_with, Homotopy, TrackOptions, TrackWork};
use crate::orbit::{complex_gaussian, Hypersurface, LinearSlice};
use crate::scalar::{bits_for_digits, lift_vec, vec_norm, BigC, CScalar, C64};
use crate::systems::{HomogSystem, OrbitSliceSystem, SquareSystem, SysScratch};

/// A pencil of slices: the base matrix with one row moving linearly.
///
/// The direction row doubles as the dehomogenization functional of the
/// trace sums (see the module docs).
#[derive(Clone, Debug)]
pub struct Pencil {
    pub base: LinearSlice,
    pub moving_row: usize,
    pub direction: Vec<C64>,
    pub seed: u64,
}

/// Pencil with a fresh random direction on the default (last) row; the
/// direction is resampled until the slice keeps full rank at t = +-1.
pub fn build_pencil(slice: &LinearSlice, seed: u64) -> Result<Pencil> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let row = slice.rows - 1;
    for _ in 0..5 {
        let mut dir: Vec<C64> = (0..slice.cols).map(|_| complex_gaussian(&mut rng)).collect();
        let norm = dir.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|z| *z /= norm);
        let ok = [C64::new(1.0, 0.0), C64::new(-1.0, 0.0)].iter().all(|&t| {
            let mut m = slice.entries();
            for (k, d) in dir.iter().enumerate() {
                m[row * slice.cols + k] += t * d;
            }
            crate::linalg::rank_c64(&m, slice.rows, slice.cols, 1e-10) == slice.rows
        });
        if ok {
            return Ok(Pencil {
                base: slice.clone(),
                moving_row: row,
                direction: dir,
                seed,
            });
        }
    }
    Err(Error::RankDeficient {
        rank: slice.rows - 1,
        expected: slice.rows,
    })
}

impl Pencil {
    /// Slice matrix entries at pencil value `t`.
    pub fn slice_at(&self, t: C64) -> Vec<C64> {
        let mut m = self.base.entries();
        for (k, d) in self.direction.iter().enumerate() {
            m[self.moving_row * self.base.cols + k] += t * d;
        }
        m
    }
}

/// Declared acceptance rule: the trace norm must fall below
/// `scale * 10^(6 - digits)`; the margin absorbs summation over <= 1e5
/// points.
pub fn threshold(digits: u32, scale: f64) -> f64 {
    scale * 10f64.powi(6 - digits as i32)
}

/// Second difference `(wp - w0) - (w0 - wm)` of chart-vector sums.
pub fn second_difference(wp: &[BigC], w0: &[BigC], wm: &[BigC]) -> Vec<BigC> {
    wp.iter()
        .zip(w0)
        .zip(wm)
        .map(|((p, z), m)| {
            (p.clone() - z.clone()) - (z.clone() - m.clone())
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceReport {
    pub t1: [f64; 2],
    pub n_solutions: usize,
    pub solution_digits: u32,
    /// Trace vector, decimal strings (magnitudes exceed binary64 precision).
    pub trace: Vec<[String; 2]>,
    pub trace_norm: f64,
    pub scale: f64,
    pub threshold: f64,
    pub pass: bool,
    pub w_norms: [f64; 3],
    pub chart_redraws: u32,
}

/// Per-point chart contributions (for subset re-verdicts).
pub struct TraceData {
    /// For each solution: chart vectors at t = 0, +t1, -t1.
    pub contributions: Vec<[Vec<BigC>; 3]>,
    pub digits: u32,
    pub scale: f64,
}

impl TraceData {
    /// Trace norm of the subset excluding one solution.
    pub fn norm_excluding(&self, skip: usize) -> f64 {
        let width = self.contributions[0][0].len();
        let prec = self.contributions[0][0][0].precision_bits();
        let mut sums: [Vec<BigC>; 3] =
            std::array::from_fn(|_| vec![BigC::zero(prec); width]);
        for (i, c) in self.contributions.iter().enumerate() {
            if i == skip {
                continue;
            }
            for k in 0..3 {
                for (s, v) in sums[k].iter_mut().zip(&c[k]) {
                    *s = s.clone() + v.clone();
                }
            }
        }
        let tr = second_difference(&sums[1], &sums[0], &sums[2]);
        vec_norm(&tr)
    }

    pub fn verdict_excluding(&self, skip: usize) -> bool {
        self.norm_excluding(skip) <= threshold(self.digits, self.scale)
    }
}

/// Full trace test context: problem, slice, patch, pencil, tolerances.
pub struct TraceSetup<'a> {
    pub hypersurface: &'a Hypersurface,
    pub pencil: &'a Pencil,
    pub patch: &'a [C64],
    pub digits: u32,
    pub track_opts: TrackOptions,
    pub chart_seed: u64,
}

impl TraceSetup<'_> {
    fn system_for(&self, pencil: &Pencil) -> Result<OrbitSliceSystem> {
        Ok(OrbitSliceSystem::new(
            &self.hypersurface.form,
            pencil.base.entries(),
        )?
        .with_pencil(
            pencil.moving_row,
            pencil.direction.clone(),
            C64::new(0.0, 0.0),
        ))
    }

    /// Track every solution to pencil value `t`, refine there, and return
    /// the refined matrix points.
    pub fn refined_points_at(
        &self,
        pencil: &Pencil,
        solutions: &[Vec<C64>],
        t: C64,
    ) -> Result<Vec<Vec<BigC>>> {
        let sys = self.system_for(pencil)?;
        let prec = bits_for_digits(self.digits);
        let needs_tracking = t.norm() > 0.0;
        let endpoints: Vec<Result<Vec<C64>>> = if needs_tracking {
            solutions
                .par_iter()
                .enumerate()
                .map_init(TrackWork::new, |w, (idx, x0)| {
                    let h = Homotopy::PencilSegment {
                        sys: &sys,
                        from: C64::new(0.0, 0.0),
                        to: t,
                    };
                    let r = track_with(&h, x0, Some(self.patch), &self.track_opts, w);
                    if r.converged() {
                        Ok(r.endpoint)
                    } else {
                        Err(Error::TracePathFailure {
                            index: idx,
                            t: C64Display(t),
                        })
                    }
                })
                .collect()
        } else {
            solutions.par_iter().map(|x| Ok(x.clone())).collect()
        };
        let mut tracked = Vec::with_capacity(solutions.len());
        for e in endpoints {
            tracked.push(e?);
        }
        // refine on the slice system pinned at t; the moved row is folded in
        // at working precision during evaluation, not pre-rounded in binary64
        let pinned = self
            .system_for(pencil)?
            .with_pencil(pencil.moving_row, pencil.direction.clone(), t);
        let square = SquareSystem::patched(HomogSystem::OrbitSlice(pinned), self.patch.to_vec())?;
        let inst = SquareInstance::new(square)?;
        let refined: Vec<Result<Vec<BigC>>> = tracked
            .par_iter()
            .map(|x| {
                let xb: Vec<BigC> = lift_vec(x, prec);
                refine_from(&inst, xb, self.digits, prec).map(|r| {
                    // summation runs at the nominal precision for the digits
                    r.point.iter().map(|z| z.at_precision(prec)).collect()
                })
            })
            .collect();
        refined.into_iter().collect()
    }

    /// Chart vectors of the image points of refined matrices.
    fn chart_vectors(
        &self,
        sys: &OrbitSliceSystem,
        refined: &[Vec<BigC>],
        chart: &[C64],
    ) -> Result<Vec<Vec<BigC>>> {
        let prec = bits_for_digits(self.digits);
        let chart_big: Vec<BigC> = lift_vec(chart, prec);
        let out: Vec<Result<Vec<BigC>>> = refined
            .par_iter()
            .map_init(SysScratch::<BigC>::new, |scratch, phi| {
                let mut c = Vec::new();
                sys.theta_coeffs(phi, scratch, &mut c);
                let den = crate::linalg::dot(&chart_big, &c);
                let cnorm = vec_norm(&c);
                if den.abs() < 1e-8 * cnorm {
                    return Err(Error::ChartDegenerate { retries: 0 });
                }
                Ok(c.into_iter().map(|z| z / den.clone()).collect())
            })
            .collect();
        out.into_iter().collect()
    }
}

/// Run the trace test on a solution set.
///
/// Tracks all solutions of the patched slice system from t=0 to +-t1, maps
/// the refined endpoints through the orbit map, dehomogenizes in the chart
/// given by the pencil direction, and tests the second difference of the
/// sums against the threshold. Any path failure aborts. A near-degenerate
/// chart denominator re-randomizes the pencil (direction and chart are one
/// vector) and restarts. `keep_contributions` retains per-point data for
/// subset re-verdicts.
pub fn trace_test(
    setup: &TraceSetup<'_>,
    solutions: &[Vec<C64>],
    t1: C64,
    keep_contributions: bool,
) -> Result<(TraceReport, Option<TraceData>)> {
    if solutions.is_empty() {
        return Err(Error::DegenerateInput("empty solution set".into()));
    }
    let mut pencil = setup.pencil.clone();
    for attempt in 0..5u32 {
        match trace_once(setup, &pencil, solutions, t1, keep_contributions, attempt) {
            Err(Error::ChartDegenerate { .. }) => {
                pencil = build_pencil(
                    &setup.pencil.base,
                    crate::orbit::stage_seed(setup.chart_seed, 0x7AC3 + attempt as u64),
                )?;
            }
            other => return other,
        }
    }
    Err(Error::ChartDegenerate { retries: 5 })
}

fn trace_once(
    setup: &TraceSetup<'_>,
    pencil: &Pencil,
    solutions: &[Vec<C64>],
    t1: C64,
    keep_contributions: bool,
    attempt: u32,
) -> Result<(TraceReport, Option<TraceData>)> {
    let sys = setup.system_for(pencil)?;
    let width = sys.width;
    let prec = bits_for_digits(setup.digits);

    // refined matrix points at the three pencil values
    let at0 = setup.refined_points_at(pencil, solutions, C64::new(0.0, 0.0))?;
    let atp = setup.refined_points_at(pencil, solutions, t1)?;
    let atm = setup.refined_points_at(pencil, solutions, -t1)?;

    // the chart functional is the pencil direction
    let c0 = setup.chart_vectors(&sys, &at0, &pencil.direction)?;
    let cp = setup.chart_vectors(&sys, &atp, &pencil.direction)?;
    let cm = setup.chart_vectors(&sys, &atm, &pencil.direction)?;

    let mut w0 = vec![BigC::zero(prec); width];
    let mut wp = vec![BigC::zero(prec); width];
    let mut wm = vec![BigC::zero(prec); width];
    let mut scale = 0.0f64;
    for ((a, b), c) in c0.iter().zip(&cp).zip(&cm) {
        for k in 0..width {
            w0[k] = w0[k].clone() + a[k].clone();
            wp[k] = wp[k].clone() + b[k].clone();
            wm[k] = wm[k].clone() + c[k].clone();
        }
        scale += vec_norm(a) + vec_norm(b) + vec_norm(c);
    }
    let trace = second_difference(&wp, &w0, &wm);
    let trace_norm = vec_norm(&trace);
    let thr = threshold(setup.digits, scale);
    let report = TraceReport {
        t1: [t1.re, t1.im],
        n_solutions: solutions.len(),
        solution_digits: setup.digits,
        trace: trace
            .iter()
            .map(|z| {
                let (re, im) = z.to_decimal_strings();
                [re, im]
            })
            .collect(),
        trace_norm,
        scale,
        threshold: thr,
        pass: trace_norm <= thr,
        w_norms: [vec_norm(&w0), vec_norm(&wp), vec_norm(&wm)],
        chart_redraws: attempt,
    };
    let data = keep_contributions.then(|| TraceData {
        contributions: c0
            .into_iter()
            .zip(cp)
            .zip(cm)
            .map(|((a, b), c)| [a, b, c])
            .collect(),
        digits: setup.digits,
        scale,
    });
    Ok((report, data))
}

/// Chart-vector sum at an arbitrary pencil value (affine-linearity probes).
pub fn chart_sum_at(
    setup: &TraceSetup<'_>,
    solutions: &[Vec<C64>],
    t: C64,
) -> Result<Vec<BigC>> {
    let pencil = setup.pencil;
    let sys = setup.system_for(pencil)?;
    let width = sys.width;
    let prec = bits_for_digits(setup.digits);
    let refined = setup.refined_points_at(pencil, solutions, t)?;
    let vecs = setup.chart_vectors(&sys, &refined, &pencil.direction)?;
    let mut sum = vec![BigC::zero(prec); width];
    for v in &vecs {
        for k in 0..width {
            sum[k] = sum[k].clone() + v[k].clone();
        }
    }
    Ok(sum)
}
