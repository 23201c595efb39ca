//! Numerical path tracking for polynomial homotopies.
//!
//! The tracker follows the implicit curve `H(x(t), t) = 0` from t=0 to t=1
//! with fourth-order Runge-Kutta prediction on `dx/dt = -(dH/dx)^-1 dH/dt`
//! and Newton correction, halving the step on corrector failure and growing
//! it after three consecutive successes.
//!
//! Projective families are tracked in a moving affine patch: the homotopy
//! supplies the homogeneous rows and the tracker appends a patch row,
//! swapping it for a patch orthogonal to the current point whenever the
//! representative grows past a threshold, and mapping the endpoint back to
//! the family patch.

use rand::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::monodromy::{InsertOutcome, RegistryOptions, SolutionRegistry};
use crate::scalar::{vec_max_abs, vec_norm, C64};
use crate::systems::{OrbitPointSystem, OrbitSliceSystem, SquareSystem, SysScratch};

/// Representative magnitude beyond which an affine path is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e14;
/// Representative magnitude that triggers a patch swap in projective mode.
pub const REPATCH_THRESHOLD: f64 = 1e4;

#[derive(Clone, Copy, Debug)]
pub struct TrackOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub corrector_tolerance: f64,
    pub max_corrector_iters: usize,
    pub max_steps: usize,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions {
            initial_step: 0.1,
            min_step: 1e-7,
            max_step: 0.25,
            corrector_tolerance: 1e-10,
            max_corrector_iters: 3,
            max_steps: 10_000,
        }
    }
}

impl TrackOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.min_step > 0.0
            && self.min_step <= self.initial_step
            && self.initial_step <= self.max_step
            && self.max_step <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(
                "need 0 < min_step <= initial_step <= max_step <= 1".into(),
            ))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathStatus {
    Converged,
    Diverged,
    StepLimit,
    CorrectorFailure,
}

#[derive(Clone, Debug)]
pub struct PathResult {
    pub status: PathStatus,
    pub endpoint: Vec<C64>,
    pub t_reached: f64,
    pub final_residual: f64,
    pub steps_taken: usize,
}

impl PathResult {
    pub fn converged(&self) -> bool {
        self.status == PathStatus::Converged
    }
}

/// A uniformly drawn unit-modulus complex number (the gamma trick).
pub fn random_unit_complex(rng: &mut impl Rng) -> C64 {
    C64::from_polar(1.0, rng.gen::<f64>() * 2.0 * std::f64::consts::PI)
}

// ---------------------------------------------------------------------------
// Total-degree start systems
// ---------------------------------------------------------------------------

/// Start system `G_i = x_i^{d_i} - r_i` with unit-modulus radii.
#[derive(Clone, Debug)]
pub struct StartSystem {
    pub degrees: Vec<usize>,
    pub radii: Vec<C64>,
    roots: Vec<Vec<C64>>,
}

impl StartSystem {
    pub fn new(degrees: Vec<usize>, radii: Vec<C64>) -> Self {
        let roots = degrees
            .iter()
            .zip(&radii)
            .map(|(&d, &r)| {
                let base = r.powf(1.0 / d as f64);
                (0..d)
                    .map(|k| {
                        base * C64::from_polar(
                            1.0,
                            2.0 * std::f64::consts::PI * k as f64 / d as f64,
                        )
                    })
                    .collect()
            })
            .collect();
        StartSystem {
            degrees,
            radii,
            roots,
        }
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// Bezout count of start solutions.
    pub fn path_count(&self) -> u64 {
        self.degrees.iter().map(|&d| d as u64).product()
    }

    fn eval_jac(&self, x: &[C64], out: &mut Vec<C64>, jac: Option<&mut Vec<C64>>) {
        let n = self.n();
        out.clear();
        if let Some(j) = &jac {
            debug_assert!(j.is_empty() || j.len() == n * n);
        }
        let mut jbuf = jac;
        if let Some(j) = jbuf.as_deref_mut() {
            j.clear();
            j.resize(n * n, C64::new(0.0, 0.0));
        }
        for i in 0..n {
            let d = self.degrees[i];
            let mut p = C64::new(1.0, 0.0);
            for _ in 0..d - 1 {
                p *= x[i];
            }
            out.push(p * x[i] - self.radii[i]);
            if let Some(j) = jbuf.as_deref_mut() {
                j[i * n + i] = p * C64::new(d as f64, 0.0);
            }
        }
    }

    /// Lazy enumeration of all start solutions (tensor products of roots).
    pub fn starts(&self) -> StartIter<'_> {
        StartIter {
            sys: self,
            odometer: vec![0; self.n()],
            done: false,
        }
    }
}

pub struct StartIter<'a> {
    sys: &'a StartSystem,
    odometer: Vec<usize>,
    done: bool,
}

impl Iterator for StartIter<'_> {
    type Item = Vec<C64>;

    fn next(&mut self) -> Option<Vec<C64>> {
        if self.done {
            return None;
        }
        let item: Vec<C64> = self
            .odometer
            .iter()
            .enumerate()
            .map(|(i, &k)| self.sys.roots[i][k])
            .collect();
        // advance
        let mut i = self.sys.n();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.odometer[i] += 1;
            if self.odometer[i] < self.sys.degrees[i] {
                break;
            }
            self.odometer[i] = 0;
        }
        Some(item)
    }
}

/// Total-degree start for a square system (random unit radii from `rng`).
pub fn total_degree_start(f: &SquareSystem, rng: &mut impl Rng) -> StartSystem {
    let radii = f
        .degrees()
        .iter()
        .map(|_| random_unit_complex(rng))
        .collect();
    StartSystem::new(f.degrees(), radii)
}

// ---------------------------------------------------------------------------
// Homotopies
// ---------------------------------------------------------------------------

pub enum Homotopy<'a> {
    /// `H = (1 - t) gamma G + t F` on affine square systems.
    StraightLine {
        start: &'a StartSystem,
        target: &'a SquareSystem,
        gamma: C64,
    },
    /// Point-condition family along a linear parameter segment (projective).
    PointSegment {
        sys: &'a OrbitPointSystem,
        from: Vec<C64>,
        to: Vec<C64>,
    },
    /// Slice pencil swept from one pencil value to another (projective).
    PencilSegment {
        sys: &'a OrbitSliceSystem,
        from: C64,
        to: C64,
    },
}

impl Homotopy<'_> {
    pub fn n_unknowns(&self) -> usize {
        match self {
            Homotopy::StraightLine { target, .. } => target.n(),
            Homotopy::PointSegment { sys, .. } => sys.n_unknowns(),
            Homotopy::PencilSegment { sys, .. } => sys.n_unknowns(),
        }
    }

    /// Projective homotopies supply one fewer equation than unknowns.
    pub fn is_projective(&self) -> bool {
        !matches!(self, Homotopy::StraightLine { .. })
    }

    fn max_degree(&self) -> usize {
        match self {
            Homotopy::StraightLine { target, .. } => {
                target.degrees().into_iter().max().unwrap_or(1)
            }
            Homotopy::PointSegment { sys, .. } => sys.degree,
            Homotopy::PencilSegment { sys, .. } => sys.degree,
        }
    }

    /// Magnitude of equation values at a representative of size `x`:
    /// residual tolerances are meaningful relative to this.
    fn value_scale(&self, x: &[C64]) -> f64 {
        vec_max_abs(x).max(1.0).powi(self.max_degree() as i32)
    }
}

// ---------------------------------------------------------------------------
// The tracker
// ---------------------------------------------------------------------------

/// Per-thread tracking buffers.
pub struct TrackWork {
    scratch: SysScratch<C64>,
    hv: Vec<C64>,
    jx: Vec<C64>,
    jt: Vec<C64>,
    fv: Vec<C64>,
    fj: Vec<C64>,
    gv: Vec<C64>,
    gj: Vec<C64>,
    pts: Vec<C64>,
    dpts: Vec<C64>,
    k: [Vec<C64>; 4],
    xs: Vec<C64>,
    xsave: Vec<C64>,
    piv: Vec<usize>,
    sol: Vec<C64>,
}

impl TrackWork {
    pub fn new() -> Self {
        TrackWork {
            scratch: SysScratch::new(),
            hv: Vec::new(),
            jx: Vec::new(),
            jt: Vec::new(),
            fv: Vec::new(),
            fj: Vec::new(),
            gv: Vec::new(),
            gj: Vec::new(),
            pts: Vec::new(),
            dpts: Vec::new(),
            k: [Vec::new(), Vec::new(), Vec::new(), Vec::new()],
            xs: Vec::new(),
            xsave: Vec::new(),
            piv: Vec::new(),
            sol: Vec::new(),
        }
    }
}

/// Evaluate H (and optionally Jx, Jt) at (x, t); the patch row, when given,
/// is appended as the last equation.
fn eval_homotopy(
    h: &Homotopy<'_>,
    x: &[C64],
    t: f64,
    patch: Option<&[C64]>,
    w: &mut TrackWork,
    want_jac: bool,
    want_jt: bool,
) {
    let n = h.n_unknowns();
    match h {
        Homotopy::StraightLine {
            start,
            target,
            gamma,
        } => {
            if want_jac {
                target.eval_jac(x, &mut w.scratch, &mut w.fv, Some(&mut w.fj));
                start.eval_jac(x, &mut w.gv, Some(&mut w.gj));
            } else {
                target.eval_jac(x, &mut w.scratch, &mut w.fv, None);
                start.eval_jac(x, &mut w.gv, None);
            }
            let wg = *gamma * C64::new(1.0 - t, 0.0);
            let wt = C64::new(t, 0.0);
            w.hv.clear();
            w.jt.clear();
            for i in 0..n {
                w.hv.push(wg * w.gv[i] + wt * w.fv[i]);
                if want_jt {
                    w.jt.push(w.fv[i] - *gamma * w.gv[i]);
                }
            }
            if want_jac {
                w.jx.clear();
                for i in 0..n * n {
                    w.jx.push(wg * w.gj[i] + wt * w.fj[i]);
                }
            }
        }
        Homotopy::PointSegment { sys, from, to } => {
            w.pts.clear();
            w.dpts.clear();
            for (a, b) in from.iter().zip(to) {
                w.pts.push(C64::new(1.0 - t, 0.0) * a + C64::new(t, 0.0) * b);
                w.dpts.push(b - a);
            }
            if want_jac && want_jt {
                let (mut hv, mut jx, mut jt) =
                    (std::mem::take(&mut w.hv), std::mem::take(&mut w.jx), std::mem::take(&mut w.jt));
                sys.eval_full_segment(x, &w.pts, &w.dpts, &mut w.scratch, &mut hv, &mut jx, &mut jt);
                w.hv = hv;
                w.jx = jx;
                w.jt = jt;
            } else if want_jac {
                let (mut hv, mut jx) = (std::mem::take(&mut w.hv), std::mem::take(&mut w.jx));
                sys.eval_jac_at_points(x, &w.pts, &mut w.scratch, &mut hv, Some(&mut jx));
                w.hv = hv;
                w.jx = jx;
            } else {
                let mut hv = std::mem::take(&mut w.hv);
                sys.eval_jac_at_points(x, &w.pts, &mut w.scratch, &mut hv, None);
                w.hv = hv;
            }
        }
        Homotopy::PencilSegment { sys, from, to } => {
            let s = C64::new(1.0 - t, 0.0) * from + C64::new(t, 0.0) * to;
            let (mut hv, mut jx) = (std::mem::take(&mut w.hv), std::mem::take(&mut w.jx));
            sys.eval_jac_at_pencil(
                x,
                Some(s),
                &mut w.scratch,
                &mut hv,
                if want_jac { Some(&mut jx) } else { None },
            );
            w.hv = hv;
            w.jx = jx;
            if want_jt {
                let mut jt = std::mem::take(&mut w.jt);
                sys.pencil_tangent(x, &mut w.scratch, &mut jt);
                let ds = to - from;
                jt.iter_mut().for_each(|v| *v *= ds);
                w.jt = jt;
            }
        }
    }
    if let Some(l) = patch {
        let dot: C64 = l.iter().zip(x).map(|(a, b)| a * b).sum();
        w.hv.push(dot - C64::new(1.0, 0.0));
        if want_jac {
            w.jx.extend_from_slice(l);
        }
        if want_jt {
            w.jt.push(C64::new(0.0, 0.0));
        }
    }
}

/// Track one path of `H` from `x0` (a solution at t=0) to t=1.
pub fn track(
    h: &Homotopy<'_>,
    x0: &[C64],
    family_patch: Option<&[C64]>,
    opts: &TrackOptions,
) -> PathResult {
    let mut work = TrackWork::new();
    track_with(h, x0, family_patch, opts, &mut work)
}

/// Tracking with caller-owned buffers (for tight loops over many paths).
///
/// For projective homotopies, `family_patch` fixes the affine patch the path
/// starts in and the representative scale of the endpoint; when absent, the
/// patch orthogonal to the start point is used instead.
pub fn track_with(
    h: &Homotopy<'_>,
    x0: &[C64],
    family_patch: Option<&[C64]>,
    opts: &TrackOptions,
    w: &mut TrackWork,
) -> PathResult {
    debug_assert!(opts.validate().is_ok());
    let n = h.n_unknowns();
    assert_eq!(x0.len(), n, "start point dimension mismatch");
    let projective = h.is_projective();
    let mut x = x0.to_vec();
    let orig_patch: Option<Vec<C64>> = if projective {
        match family_patch {
            Some(l0) => {
                let dot: C64 = l0.iter().zip(&x). map(|(a, b)| a * b).sum();
                if dot.norm() < 1e-12 * vec_max_abs(&x).max(1e-30) {
                    return PathResult {
                        status: PathStatus::CorrectorFailure,
                        endpoint: x,
                        t_reached: 0.0,
                        final_residual: f64::NAN,
                        steps_taken: 0,
                    };
                }
                x.iter_mut().for_each(|z| *z /= dot);
                Some(l0.to_vec())
            }
            None => {
                let nrm2: f64 = x.iter().map(|z| z.norm_sqr()).sum();
                Some(x.iter().map(|z| z.conj() / nrm2).collect())
            }
        }
    } else {
        None
    };
    let mut patch = orig_patch.clone();
    let mut t = 0.0f64;
    let mut hstep = opts.initial_step;
    let mut steps = 0usize;
    let mut streak = 0usize;

    let fail = |status: PathStatus, x: &[C64], t: f64, res: f64, steps: usize| PathResult {
        status,
        endpoint: x.to_vec(),
        t_reached: t,
        final_residual: res,
        steps_taken: steps,
    };

    // settle the start point at t=0
    match correct(h, &mut x, 0.0, patch.as_deref(), opts, w, 4) {
        Some(_) => {}
        None => {
            return fail(PathStatus::CorrectorFailure, &x, 0.0, f64::NAN, 0);
        }
    }

    while t < 1.0 {
        if steps >= opts.max_steps {
            return fail(PathStatus::StepLimit, &x, t, f64::NAN, steps);
        }
        let hh = hstep.min(1.0 - t);
        // RK4 prediction on the Davidenko field
        w.xsave.clear();
        w.xsave.extend_from_slice(&x);
        let ok = rk4_predict(h, &mut x, t, hh, patch.as_deref(), w);
        let corrected = if ok {
            correct(h, &mut x, t + hh, patch.as_deref(), opts, w, opts.max_corrector_iters)
        } else {
            None
        };
        steps += 1;
        match corrected {
            Some(_) => {
                t += hh;
                streak += 1;
                if streak >= 3 {
                    hstep = (hstep * 1.5).min(opts.max_step);
                }
                let mag = vec_max_abs(&x);
                if projective {
                    if mag > REPATCH_THRESHOLD {
                        // swap to the orthogonal patch at the current point
                        let nrm = vec_norm(&x);
                        x.iter_mut().for_each(|z| *z /= nrm);
                        patch = Some(x.iter().map(|z| z.conj()).collect());
                    }
                } else if mag > DIVERGENCE_THRESHOLD {
                    return fail(PathStatus::Diverged, &x, t, f64::NAN, steps);
                }
            }
            None => {
                x.clear();
                x.extend_from_slice(&w.xsave);
                streak = 0;
                hstep *= 0.5;
                if hstep < opts.min_step {
                    let mag = vec_max_abs(&x);
                    let status = if !projective && mag > 1e8 {
                        PathStatus::Diverged
                    } else {
                        PathStatus::CorrectorFailure
                    };
                    return fail(status, &x, t, f64::NAN, steps);
                }
            }
        }
    }

    // final polish at t = 1
    let res = match polish(h, &mut x, 1.0, patch.as_deref(), opts, w) {
        Some(r) => r,
        None => return fail(PathStatus::CorrectorFailure, &x, 1.0, f64::NAN, steps),
    };
    // map back to the caller's representative scale
    if let Some(l0) = &orig_patch {
        let dot: C64 = l0.iter().zip(&x).map(|(a, b)| a * b).sum();
        let mag = vec_max_abs(&x);
        if dot.norm() < 1e-10 * mag.max(1.0) {
            return fail(PathStatus::Diverged, &x, 1.0, res, steps);
        }
        x.iter_mut().for_each(|z| *z /= dot);
    }
    PathResult {
        status: PathStatus::Converged,
        endpoint: x,
        t_reached: 1.0,
        final_residual: res,
        steps_taken: steps,
    }
}

fn rk4_predict(
    h: &Homotopy<'_>,
    x: &mut Vec<C64>,
    t: f64,
    hh: f64,
    patch: Option<&[C64]>,
    w: &mut TrackWork,
) -> bool {
    let n = x.len();
    let mut xs = std::mem::take(&mut w.xs);
    let stages = [(0.0, 0usize), (0.5, 0), (0.5, 1), (1.0, 2)];
    for (si, &(frac, prev)) in stages.iter().enumerate() {
        xs.clear();
        if si == 0 {
            xs.extend_from_slice(x);
        } else {
            for i in 0..n {
                xs.push(x[i] + C64::new(hh * frac, 0.0) * w.k[prev][i]);
            }
        }
        eval_homotopy(h, &xs, t + hh * frac, patch, w, true, true);
        // solve Jx k = -Jt
        if linalg::lu_factor(&mut w.jx, n, &mut w.piv).is_err() {
            w.xs = xs;
            return false;
        }
        linalg::lu_solve(&w.jx, n, &w.piv, &w.jt, &mut w.sol);
        w.k[si].clear();
        for v in &w.sol {
            w.k[si].push(-v);
        }
    }
    w.xs = xs;
    for i in 0..n {
        let incr = w.k[0][i] + C64::new(2.0, 0.0) * (w.k[1][i] + w.k[2][i]) + w.k[3][i];
        x[i] += C64::new(hh / 6.0, 0.0) * incr;
    }
    true
}

/// Newton correction at fixed t; `Some(step_norm)` on success.
fn correct(
    h: &Homotopy<'_>,
    x: &mut Vec<C64>,
    t: f64,
    patch: Option<&[C64]>,
    opts: &TrackOptions,
    w: &mut TrackWork,
    max_iters: usize,
) -> Option<f64> {
    let n = x.len();
    let scale = vec_max_abs(x).max(1.0);
    let tol = opts.corrector_tolerance * scale;
    let mut last_step = f64::INFINITY;
    for _ in 0..max_iters {
        eval_homotopy(h, x, t, patch, w, true, false);
        // already on the curve to tolerance: the Newton step would only
        // report the rounding noise floor
        if vec_norm(&w.hv) <= opts.corrector_tolerance * h.value_scale(x) {
            return Some(0.0);
        }
        if linalg::lu_factor(&mut w.jx, n, &mut w.piv).is_err() {
            return None;
        }
        linalg::lu_solve(&w.jx, n, &w.piv, &w.hv, &mut w.sol);
        for i in 0..n {
            x[i] -= w.sol[i];
        }
        last_step = vec_norm(&w.sol);
        if !last_step.is_finite() {
            return None;
        }
        if last_step <= tol {
            return Some(last_step);
        }
    }
    if last_step <= tol {
        Some(last_step)
    } else {
        None
    }
}

/// Newton at t=1 until the scale-normalized residual passes the tolerance;
/// returns the normalized residual.
fn polish(
    h: &Homotopy<'_>,
    x: &mut Vec<C64>,
    t: f64,
    patch: Option<&[C64]>,
    opts: &TrackOptions,
    w: &mut TrackWork,
) -> Option<f64> {
    let n = x.len();
    for _ in 0..8 {
        eval_homotopy(h, x, t, patch, w, false, false);
        let res = vec_norm(&w.hv) / h.value_scale(x);
        if res <= opts.corrector_tolerance {
            return Some(res);
        }
        eval_homotopy(h, x, t, patch, w, true, false);
        if linalg::lu_factor(&mut w.jx, n, &mut w.piv).is_err() {
            return None;
        }
        linalg::lu_solve(&w.jx, n, &w.piv, &w.hv, &mut w.sol);
        for i in 0..n {
            x[i] -= w.sol[i];
        }
    }
    eval_homotopy(h, x, t, patch, w, false, false);
    let res = vec_norm(&w.hv) / h.value_scale(x);
    (res <= opts.corrector_tolerance).then_some(res)
}

// ---------------------------------------------------------------------------
// Total-degree solving (the small-instance oracle)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct SolveStats {
    pub paths_tracked: u64,
    pub converged: u64,
    pub diverged: u64,
    pub failed: u64,
    pub rejected: u64,
}

/// Track every Bezout path of the gamma-weighted straight-line homotopy and
/// register the converged, deduplicated endpoints.
pub fn solve_total_degree(
    target: &SquareSystem,
    opts: &TrackOptions,
    budget: u64,
    registry_opts: RegistryOptions,
    rng: &mut impl Rng,
) -> Result<(SolutionRegistry, SolveStats)> {
    opts.validate()?;
    let start = total_degree_start(target, rng);
    let total = start.path_count();
    if total > budget {
        return Err(Error::BudgetExceeded {
            paths: total,
            budget,
        });
    }
    let gamma = random_unit_complex(rng);
    let homotopy = Homotopy::StraightLine {
        start: &start,
        target,
        gamma,
    };
    let mut registry = SolutionRegistry::new(target.n(), registry_opts)
        .with_system(target.clone());
    let mut stats = SolveStats::default();
    let mut scratch = SysScratch::new();

    let chunk_size = 512usize;
    let mut starts = start.starts();
    loop {
        let chunk: Vec<Vec<C64>> = starts.by_ref().take(chunk_size).collect();
        if chunk.is_empty() {
            break;
        }
        let results: Vec<PathResult> = if rayon::current_num_threads() > 1 {
            use rayon::prelude::*;
            chunk
                .par_iter()
                .map_init(TrackWork::new, |w, x0| track_with(&homotopy, x0, None, opts, w))
                .collect()
        } else {
            let mut w = TrackWork::new();
            chunk.iter().map(|x0| track_with(&homotopy, x0, None, opts, &mut w)).collect()
        };
        for r in results {
            stats.paths_tracked += 1;
            match r.status {
                PathStatus::Converged => {
                    // residual check independent of the tracker state
                    let res = target.scaled_residual(&r.endpoint, &mut scratch);
                    if res <= 10.0 * opts.corrector_tolerance {
                        stats.converged += 1;
                        match registry.insert(&r.endpoint, res, 0) {
                            InsertOutcome::New | InsertOutcome::Duplicate => {}
                            _ => stats.rejected += 1,
                        }
                    } else {
                        stats.rejected += 1;
                    }
                }
                PathStatus::Diverged => stats.diverged += 1,
                _ => stats.failed += 1,
            }
        }
    }
    Ok((registry, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monodromy::sets_equal;
    use crate::polysys::{AffinePoly, CompiledSystem};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn univariate_target(coeffs: &[(f64, u32)]) -> SquareSystem {
        // sum c * x^e in one variable
        let terms: Vec<(C64, Vec<u32>)> = coeffs
            .iter()
            .map(|&(v, e)| (c(v, 0.0), vec![e]))
            .collect();
        let d = coeffs.iter().map(|&(_, e)| e).max().unwrap() as usize;
        SquareSystem::Dense(
            CompiledSystem::compile(vec![AffinePoly::from_terms(1, d, &terms).unwrap()]).unwrap(),
        )
    }

    #[test]
    fn start_system_roots_and_count() {
        // forced radius 1: x^2 - 1 has starts {1, -1}
        let g = StartSystem::new(vec![2], vec![c(1.0, 0.0)]);
        let starts: Vec<Vec<C64>> = g.starts().collect();
        assert_eq!(starts.len(), 2);
        assert!((starts[0][0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((starts[1][0] + c(1.0, 0.0)).norm() < 1e-12);
        // mixed degrees
        let g2 = StartSystem::new(vec![3, 2, 1], vec![c(1.0, 0.0); 3]);
        assert_eq!(g2.path_count(), 6);
        assert_eq!(g2.starts().count(), 6);
    }

    #[test]
    fn constant_homotopy_returns_start() {
        let target = univariate_target(&[(1.0, 2), (-2.0, 0)]); // x^2 - 2
        let start = StartSystem::new(vec![2], vec![c(2.0, 0.0)]); // x^2 - 2 exactly
        let h = Homotopy::StraightLine {
            start: &start,
            target: &target,
            gamma: c(1.0, 0.0),
        };
        let x0 = vec![c(2.0f64.sqrt(), 0.0)];
        let r = track(&h, &x0, None, &TrackOptions::default());
        assert!(r.converged());
        assert!((r.endpoint[0] - x0[0]).norm() < 1e-9);
    }

    #[test]
    fn tracks_square_root_of_two() {
        // x^2 - 1 deformed into x^2 - 2, start at 1
        let target = univariate_target(&[(1.0, 2), (-2.0, 0)]);
        let start = StartSystem::new(vec![2], vec![c(1.0, 0.0)]);
        let h = Homotopy::StraightLine {
            start: &start,
            target: &target,
            gamma: c(1.0, 0.0),
        };
        let r = track(&h, &[c(1.0, 0.0)], None, &TrackOptions::default());
        assert!(r.converged());
        assert!(
            (r.endpoint[0] - c(2.0f64.sqrt(), 0.0)).norm() < 1e-10,
            "endpoint {}",
            r.endpoint[0]
        );
        assert!(r.final_residual <= 1e-10);
    }

    #[test]
    fn gamma_draws_agree_on_solution_set() {
        // 2x2 quadric system solved with 20 different gamma draws
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let eqs = vec![
            AffinePoly::from_terms(
                2,
                2,
                &[
                    (c(1.0, 0.2), vec![2, 0]),
                    (c(0.5, -1.0), vec![0, 2]),
                    (c(0.3, 0.4), vec![1, 1]),
                    (c(-1.0, 0.1), vec![0, 0]),
                ],
            )
            .unwrap(),
            AffinePoly::from_terms(
                2,
                2,
                &[
                    (c(-0.7, 1.1), vec![2, 0]),
                    (c(1.2, 0.3), vec![0, 2]),
                    (c(0.1, 0.0), vec![1, 0]),
                    (c(0.9, -0.5), vec![0, 0]),
                ],
            )
            .unwrap(),
        ];
        let target = SquareSystem::Dense(CompiledSystem::compile(eqs).unwrap());
        let mut reference: Option<Vec<Vec<C64>>> = None;
        for _ in 0..20 {
            let (reg, stats) = solve_total_degree(
                &target,
                &TrackOptions::default(),
                1_000,
                RegistryOptions::default(),
                &mut rng,
            )
            .unwrap();
            assert_eq!(stats.paths_tracked, 4);
            let sols: Vec<Vec<C64>> =
                reg.solutions().iter().map(|s| s.coords.clone()).collect();
            assert_eq!(sols.len(), 4);
            match &reference {
                None => reference = Some(sols),
                Some(r) => assert!(sets_equal(r, &sols, 1e-6)),
            }
        }
    }

    #[test]
    fn linear_square_system_has_one_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eqs = vec![
            AffinePoly::from_terms(
                2,
                1,
                &[
                    (c(1.0, 0.3), vec![1, 0]),
                    (c(0.2, -0.4), vec![0, 1]),
                    (c(-0.8, 0.0), vec![0, 0]),
                ],
            )
            .unwrap(),
            AffinePoly::from_terms(
                2,
                1,
                &[
                    (c(0.1, 0.9), vec![1, 0]),
                    (c(1.4, 0.2), vec![0, 1]),
                    (c(0.5, -0.6), vec![0, 0]),
                ],
            )
            .unwrap(),
        ];
        let target = SquareSystem::Dense(CompiledSystem::compile(eqs).unwrap());
        let (reg, _) = solve_total_degree(
            &target,
            &TrackOptions::default(),
            100,
            RegistryOptions::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(reg.len(), 1);
    }

    #[test]
    fn budget_is_enforced() {
        let target = univariate_target(&[(1.0, 9), (-1.0, 0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let err = solve_total_degree(
            &target,
            &TrackOptions::default(),
            8,
            RegistryOptions::default(),
            &mut rng,
        );
        assert!(matches!(err, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn track_options_validation() {
        let mut o = TrackOptions::default();
        o.min_step = 0.5;
        o.initial_step = 0.1;
        assert!(o.validate().is_err());
    }
}
