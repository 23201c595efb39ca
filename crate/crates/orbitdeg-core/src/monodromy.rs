//! Monodromy solving over the parameterized point-condition family.
//!
//! Solutions over a base configuration are discovered by tracking every known
//! solution around random triangular loops in parameter space; endpoints land
//! back in the fiber and either coincide with known solutions or are new.
//! A loop is re-used until it stops producing new points (the endpoints of a
//! loop are a permutation of the fiber), then a fresh loop is drawn, until a
//! stall rule fires.

use std::collections::HashMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::homotopy::{track_with, Homotopy, PathStatus, TrackOptions, TrackWork};
use crate::orbit::{normalize_projective, Hypersurface, PointConfig, StartPair};
use crate::scalar::{vec_max_abs, C64};
use crate::systems::{newton_polish, HomogSystem, OrbitPointSystem, SquareSystem, SysScratch};

// ---------------------------------------------------------------------------
// Solution registry
// ---------------------------------------------------------------------------

/// Reject solutions whose matrix representative is numerically singular.
#[derive(Clone, Copy, Debug)]
pub struct DetFilter {
    /// Matrix side length (the registry dimension must be n^2).
    pub n: usize,
    pub threshold: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct RegistryOptions {
    /// Dedup tolerance on stored representatives.
    pub tolerance: f64,
    pub det_filter: Option<DetFilter>,
    /// Solutions are rays: store max-abs normalized, phase-anchored
    /// representatives. Affine registries store points as they come.
    pub projective: bool,
}

impl Default for RegistryOptions {
    fn default() -> Self {
        RegistryOptions {
            tolerance: 1e-6,
            det_filter: None,
            projective: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InsertOutcome {
    New,
    Duplicate,
    RejectedDet,
    RejectedNonFinite,
}

#[derive(Clone, Debug)]
pub struct RegisteredSolution {
    /// Max-abs normalized, phase-anchored representative.
    pub coords: Vec<C64>,
    pub residual: f64,
    pub abs_det: f64,
    pub found_in_loop: usize,
}

/// Deduplicated set of projective solutions with spatial-hash lookup.
pub struct SolutionRegistry {
    dim: usize,
    opts: RegistryOptions,
    system: Option<SquareSystem>,
    solutions: Vec<RegisteredSolution>,
    grid: HashMap<[i64; 4], Vec<usize>>,
    cell: f64,
    /// Count of accepted solutions whose |det| sat within 10x of the filter
    /// threshold (flagged, not dropped).
    pub near_det_flags: usize,
}

impl SolutionRegistry {
    pub fn new(dim: usize, opts: RegistryOptions) -> Self {
        let cell = (opts.tolerance * 8.0).max(1e-3);
        SolutionRegistry {
            dim,
            opts,
            system: None,
            solutions: Vec::new(),
            grid: HashMap::new(),
            cell,
            near_det_flags: 0,
        }
    }

    /// Attach the square system used to arbitrate near-ties by refinement.
    pub fn with_system(mut self, system: SquareSystem) -> Self {
        self.system = Some(system);
        self
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn solutions(&self) -> &[RegisteredSolution] {
        &self.solutions
    }

    pub fn tolerance(&self) -> f64 {
        self.opts.tolerance
    }

    fn key_of(&self, rep: &[C64]) -> [i64; 4] {
        let q = |v: f64| (v / self.cell).floor() as i64;
        let second = if rep.len() > 1 { rep[1] } else { C64::new(0.0, 0.0) };
        [q(rep[0].re), q(rep[0].im), q(second.re), q(second.im)]
    }

    /// Minimum distance to a stored representative near `rep`, if any.
    fn nearest(&self, rep: &[C64]) -> Option<(usize, f64)> {
        let key = self.key_of(rep);
        let mut best: Option<(usize, f64)> = None;
        let mut probe = [0i64; 4];
        for d0 in -1..=1 {
            for d1 in -1..=1 {
                for d2 in -1..=1 {
                    for d3 in -1..=1 {
                        probe[0] = key[0] + d0;
                        probe[1] = key[1] + d1;
                        probe[2] = key[2] + d2;
                        probe[3] = key[3] + d3;
                        if let Some(bucket) = self.grid.get(&probe) {
                            for &idx in bucket {
                                let d = dist(&self.solutions[idx].coords, rep);
                                if best.map(|(_, b)| d < b).unwrap_or(true) {
                                    best = Some((idx, d));
                                }
                            }
                        }
                    }
                }
            }
        }
        best
    }

    /// Insert a solution candidate; the point is projectively normalized and
    /// compared against stored representatives.
    pub fn insert(&mut self, point: &[C64], residual: f64, loop_idx: usize) -> InsertOutcome {
        assert_eq!(point.len(), self.dim);
        if point.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return InsertOutcome::RejectedNonFinite;
        }
        let rep = if self.opts.projective {
            normalize_projective(point)
        } else {
            point.to_vec()
        };
        let mut abs_det = f64::NAN;
        if let Some(filter) = &self.opts.det_filter {
            debug_assert_eq!(filter.n * filter.n, self.dim);
            abs_det = crate::linalg::det_c64(&rep, filter.n).norm();
            if abs_det <= filter.threshold {
                return InsertOutcome::RejectedDet;
            }
            if abs_det <= 10.0 * filter.threshold {
                self.near_det_flags += 1;
                log::warn!(
                    "solution accepted with |det| = {abs_det:.3e}, near threshold {:.1e}",
                    filter.threshold
                );
            }
        }
        if let Some((idx, d)) = self.nearest(&rep) {
            if d <= self.opts.tolerance {
                return InsertOutcome::Duplicate;
            }
            // near-tie band: separate tracking noise from true neighbors by
            // refining both candidates before deciding
            if d <= 1e-4 {
                if let Some(sys) = &self.system {
                    let a = self.refined_copy(sys, &rep);
                    let b = self.refined_copy(sys, &self.solutions[idx].coords.clone());
                    if let (Some(a), Some(b)) = (a, b) {
                        if dist(&a, &b) <= self.opts.tolerance {
                            return InsertOutcome::Duplicate;
                        }
                    }
                }
            }
        }
        let key = self.key_of(&rep);
        let idx = self.solutions.len();
        self.solutions.push(RegisteredSolution {
            coords: rep,
            residual,
            abs_det,
            found_in_loop: loop_idx,
        });
        self.grid.entry(key).or_default().push(idx);
        InsertOutcome::New
    }

    fn refined_copy(&self, sys: &SquareSystem, rep: &[C64]) -> Option<Vec<C64>> {
        let mut x = rescale_to_patch(sys, rep)?;
        newton_polish(sys, &mut x, 6, 1e-13).ok()?;
        Some(if self.opts.projective {
            normalize_projective(&x)
        } else {
            x
        })
    }

    /// Smallest pairwise distance among stored representatives (quadratic in
    /// size; post-run statistics on small registries only).
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.solutions.len() {
            for j in i + 1..self.solutions.len() {
                best = best.min(dist(&self.solutions[i].coords, &self.solutions[j].coords));
            }
        }
        best
    }
}

/// Euclidean distance between representatives.
pub fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Set equality of two solution lists at a tolerance (greedy matching; the
/// sets we compare are well separated relative to it).
pub fn sets_equal(a: &[Vec<C64>], b: &[Vec<C64>], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    for x in a {
        let xn = normalize_projective(x);
        let mut hit = None;
        for (j, y) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            if dist(&xn, &normalize_projective(y)) <= tol {
                hit = Some(j);
                break;
            }
        }
        match hit {
            Some(j) => used[j] = true,
            None => return false,
        }
    }
    true
}

/// Rescale a projective representative onto the patch of a patched system.
pub fn rescale_to_patch(sys: &SquareSystem, rep: &[C64]) -> Option<Vec<C64>> {
    match sys {
        SquareSystem::Patched { patch, .. } => {
            let dot: C64 = patch.iter().zip(rep).map(|(l, x)| l * x).sum();
            if dot.norm() < 1e-10 * vec_max_abs(rep).max(1e-30) {
                return None;
            }
            Some(rep.iter().map(|&z| z / dot).collect())
        }
        SquareSystem::Dense(_) => Some(rep.to_vec()),
    }
}

// ---------------------------------------------------------------------------
// Parameter family and loops
// ---------------------------------------------------------------------------

/// The point-condition family with its base configuration and family patch.
pub struct ParameterFamily {
    pub hypersurface: Hypersurface,
    pub base: PointConfig,
    pub patch: Vec<C64>,
    pub system: OrbitPointSystem,
}

impl ParameterFamily {
    pub fn new(hypersurface: Hypersurface, base: PointConfig, patch: Vec<C64>) -> Result<Self> {
        let system = OrbitPointSystem::new(&hypersurface.form, base.flat())?;
        Ok(ParameterFamily {
            hypersurface,
            base,
            patch,
            system,
        })
    }

    /// The square certification system at the base parameters.
    pub fn square_system(&self) -> Result<SquareSystem> {
        SquareSystem::patched(
            HomogSystem::OrbitPoint(self.system.clone()),
            self.patch.clone(),
        )
    }
}

/// One triangular loop through two fresh random configurations.
#[derive(Clone, Debug)]
pub struct LoopSchedule {
    pub index: usize,
    pub q1: PointConfig,
    pub q2: PointConfig,
}

impl LoopSchedule {
    pub fn random(index: usize, n: usize, rng: &mut impl Rng) -> Self {
        LoopSchedule {
            index,
            q1: PointConfig::random(n, rng),
            q2: PointConfig::random(n, rng),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StoppingRule {
    /// Stop after this many consecutive loops with no new solution.
    pub stall_loops: usize,
    pub max_loops: usize,
    pub target_count: Option<u64>,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            stall_loops: 5,
            max_loops: 200,
            target_count: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Stalled,
    MaxLoops,
    TargetReached,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonodromyReport {
    pub count: u64,
    pub loops: usize,
    pub stop_reason: StopReason,
    pub path_failures: u64,
    pub paths_tracked: u64,
    pub seed: u64,
    /// True when a requested target count was not reached before stalling.
    pub incomplete: bool,
}

// ---------------------------------------------------------------------------
// Loop tracking
// ---------------------------------------------------------------------------

fn track_triangle(
    family: &ParameterFamily,
    loop_: &LoopSchedule,
    x0: &[C64],
    opts: &TrackOptions,
    w: &mut TrackWork,
) -> Option<Vec<C64>> {
    let q0 = family.base.flat();
    let legs = [
        (q0.clone(), loop_.q1.flat()),
        (loop_.q1.flat(), loop_.q2.flat()),
        (loop_.q2.flat(), q0),
    ];
    let mut x = x0.to_vec();
    for (from, to) in legs {
        let h = Homotopy::PointSegment {
            sys: &family.system,
            from,
            to,
        };
        let r = track_with(&h, &x, Some(&family.patch), opts, w);
        if r.status != PathStatus::Converged {
            return None;
        }
        x = r.endpoint;
    }
    Some(x)
}

/// Track every registered solution (and, transitively, every newly found
/// one) around one loop; returns the number of genuinely new solutions.
pub fn run_loop(
    registry: &mut SolutionRegistry,
    family: &ParameterFamily,
    loop_: &LoopSchedule,
    opts: &TrackOptions,
    failures: &mut u64,
    tracked: &mut u64,
) -> Result<usize> {
    use rayon::prelude::*;
    if registry.is_empty() {
        return Err(Error::DegenerateInput("registry is empty".into()));
    }
    let square = family.square_system()?;
    let mut scratch = SysScratch::new();
    let mut frontier: Vec<Vec<C64>> = registry
        .solutions()
        .iter()
        .map(|s| s.coords.clone())
        .collect();
    let mut new_found = 0usize;
    let mut loop_tracked = 0u64;
    let mut loop_failed = 0u64;
    while !frontier.is_empty() {
        let starts: Vec<Vec<C64>> = frontier
            .iter()
            .filter_map(|rep| rescale_to_patch(&square, rep))
            .collect();
        let results: Vec<Option<Vec<C64>>> = starts
            .par_iter()
            .map_init(TrackWork::new, |w, x0| {
                track_triangle(family, loop_, x0, opts, w)
            })
            .collect();
        loop_tracked += results.len() as u64;
        frontier = Vec::new();
        for r in results {
            match r {
                Some(endpoint) => {
                    let res = square.scaled_residual(&endpoint, &mut scratch);
                    if res > 100.0 * opts.corrector_tolerance {
                        loop_failed += 1;
                        continue;
                    }
                    if registry.insert(&endpoint, res, loop_.index) == InsertOutcome::New {
                        new_found += 1;
                        frontier.push(normalize_projective(&endpoint));
                    }
                }
                None => loop_failed += 1,
            }
        }
    }
    *failures += loop_failed;
    *tracked += loop_tracked;
    // systemic failure guard; tiny loops tolerate transient failures
    if loop_tracked >= 200 && loop_failed * 100 > loop_tracked {
        return Err(Error::ExcessiveFailures {
            failed: loop_failed as usize,
            tracked: loop_tracked as usize,
        });
    }
    Ok(new_found)
}

/// Run monodromy from a start pair until the stopping rule fires.
pub fn monodromy_solve(
    family: &ParameterFamily,
    start: &StartPair,
    rule: &StoppingRule,
    opts: &TrackOptions,
    seed: u64,
) -> Result<(SolutionRegistry, MonodromyReport)> {
    opts.validate()?;
    let n = family.hypersurface.n();
    let square = family.square_system()?;
    let det_filter = DetFilter {
        n,
        threshold: 1e-8,
    };
    let mut registry = SolutionRegistry::new(
        n * n,
        RegistryOptions {
            tolerance: 1e-6,
            det_filter: Some(det_filter),
            projective: true,
        },
    )
    .with_system(square.clone());

    // seed solution: settle the start point onto the patch and polish
    let mut x0 = rescale_to_patch(&square, &start.phi0.entries)
        .ok_or_else(|| Error::DegenerateInput("start matrix lies on the patch hyperplane".into()))?;
    let res0 = newton_polish(&square, &mut x0, 8, 1e-12)?;
    if res0 > 1e-10 {
        return Err(Error::DegenerateInput(format!(
            "start pair residual {res0:.3e} exceeds 1e-10"
        )));
    }
    registry.insert(&x0, res0, 0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0u64;
    let mut tracked = 0u64;
    let mut stall = 0usize;
    let mut loops = 0usize;
    let mut stop_reason = StopReason::MaxLoops;
    for index in 1..=rule.max_loops {
        let loop_ = LoopSchedule::random(index, n, &mut rng);
        let new_found = run_loop(&mut registry, family, &loop_, opts, &mut failures, &mut tracked)?;
        loops = index;
        if new_found == 0 {
            stall += 1;
        } else {
            stall = 0;
        }
        log::info!(
            "loop {index}: +{new_found} solutions (total {}, stall {stall})",
            registry.len()
        );
        if let Some(target) = rule.target_count {
            if registry.len() as u64 >= target {
                stop_reason = StopReason::TargetReached;
                break;
            }
        }
        if stall >= rule.stall_loops {
            stop_reason = StopReason::Stalled;
            break;
        }
    }
    let incomplete = rule
        .target_count
        .map(|t| (registry.len() as u64) < t)
        .unwrap_or(false);
    let report = MonodromyReport {
        count: registry.len() as u64,
        loops,
        stop_reason,
        path_failures: failures,
        paths_tracked: tracked,
        seed,
        incomplete,
    };
    Ok((registry, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::complex_gaussian;

    fn random_vec(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
        (0..dim).map(|_| complex_gaussian(rng)).collect()
    }

    fn projective_opts() -> RegistryOptions {
        RegistryOptions {
            projective: true,
            ..RegistryOptions::default()
        }
    }

    #[test]
    fn insert_rescaled_point_is_duplicate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut reg = SolutionRegistry::new(9, projective_opts());
        let p = random_vec(9, &mut rng);
        assert_eq!(reg.insert(&p, 1e-12, 0), InsertOutcome::New);
        let lam = C64::new(-0.3, 2.2);
        let q: Vec<C64> = p.iter().map(|&z| lam * z).collect();
        assert_eq!(reg.insert(&q, 1e-12, 1), InsertOutcome::Duplicate);
        assert_eq!(reg.len(), 1);
    }

    #[test]
    fn insert_well_separated_point_is_new() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut reg = SolutionRegistry::new(9, projective_opts());
        let p = random_vec(9, &mut rng);
        reg.insert(&p, 1e-12, 0);
        // perturb by 10x tolerance in normalized coordinates
        let mut q = normalize_projective(&p);
        q[3] += C64::new(10.0 * reg.tolerance(), 0.0);
        assert_eq!(reg.insert(&q, 1e-12, 0), InsertOutcome::New);
        assert_eq!(reg.len(), 2);
    }

    #[test]
    fn insert_is_idempotent_under_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut reg = SolutionRegistry::new(16, projective_opts());
        let p = random_vec(16, &mut rng);
        reg.insert(&p, 1e-12, 0);
        for _ in 0..50 {
            let mut q = p.clone();
            for z in q.iter_mut() {
                *z += C64::new(1e-9, -1e-9) * complex_gaussian(&mut rng);
            }
            assert_eq!(reg.insert(&q, 1e-12, 0), InsertOutcome::Duplicate);
        }
        assert_eq!(reg.len(), 1);
    }

    #[test]
    fn det_filter_rejects_singular_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut reg = SolutionRegistry::new(
            9,
            RegistryOptions {
                tolerance: 1e-6,
                det_filter: Some(DetFilter {
                    n: 3,
                    threshold: 1e-8,
                }),
                projective: true,
            },
        );
        // rank-1 matrix v w^T has zero determinant
        let v = random_vec(3, &mut rng);
        let w = random_vec(3, &mut rng);
        let m: Vec<C64> = (0..9).map(|i| v[i / 3] * w[i % 3]).collect();
        assert_eq!(reg.insert(&m, 1e-14, 0), InsertOutcome::RejectedDet);
        let good = random_vec(9, &mut rng);
        assert_eq!(reg.insert(&good, 1e-14, 0), InsertOutcome::New);
    }

    #[test]
    fn non_finite_rejected() {
        let mut reg = SolutionRegistry::new(2, RegistryOptions::default());
        let p = vec![C64::new(f64::NAN, 0.0), C64::new(1.0, 0.0)];
        assert_eq!(reg.insert(&p, 0.0, 0), InsertOutcome::RejectedNonFinite);
    }

    #[test]
    fn sets_equality_matcher() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<Vec<C64>> = (0..8).map(|_| random_vec(4, &mut rng)).collect();
        let mut b: Vec<Vec<C64>> = a
            .iter()
            .map(|p| {
                let lam = complex_gaussian(&mut rng);
                p.iter().map(|&z| lam * z).collect()
            })
            .collect();
        b.reverse();
        assert!(sets_equal(&a, &b, 1e-9));
        b.pop();
        assert!(!sets_equal(&a, &b, 1e-9));
    }
}
