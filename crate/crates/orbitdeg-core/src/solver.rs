//! Solve strategies behind a common interface.
//!
//! Both solvers consume the same prepared instance and produce the same
//! outcome shape, so the pipeline and CLI select one by name: `monodromy`
//! walks loops in parameter space from a start pair; `total-degree` tracks
//! every Bezout path of a straight-line homotopy and serves as the oracle
//! on small instances.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::homotopy::{solve_total_degree, SolveStats, TrackOptions};
use crate::monodromy::{
    monodromy_solve, DetFilter, MonodromyReport, ParameterFamily, RegistryOptions,
    SolutionRegistry, StoppingRule,
};
use crate::orbit::{
    random_patch, start_pair, veronese_slice, Hypersurface, StartPair,
};
use crate::scalar::C64;
use crate::systems::{HomogSystem, OrbitSliceSystem, SquareSystem};

/// A prepared orbit-degree instance: hypersurface, start pair (with its
/// point configuration), and the affine patch squaring the systems.
pub struct OrbitInstance {
    pub hypersurface: Hypersurface,
    pub start: StartPair,
    pub patch: Vec<C64>,
}

impl OrbitInstance {
    /// Build from a hypersurface with seeded start pair and patch.
    pub fn prepare(hypersurface: Hypersurface, seed: u64) -> Result<Self> {
        use rand::SeedableRng;
        let start = start_pair(&hypersurface, seed)?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(crate::orbit::stage_seed(seed, 0xBA7C4));
        let patch = random_patch(hypersurface.matrix_dim(), &mut rng);
        Ok(OrbitInstance {
            hypersurface,
            start,
            patch: patch.coeffs,
        })
    }

    pub fn family(&self) -> Result<ParameterFamily> {
        ParameterFamily::new(
            self.hypersurface.clone(),
            self.start.config.clone(),
            self.patch.clone(),
        )
    }

    /// The square point-condition system (certification target).
    pub fn point_square(&self) -> Result<SquareSystem> {
        self.family()?.square_system()
    }

    /// The square slice system built from the configuration's monomial rows.
    pub fn slice_square(&self) -> Result<SquareSystem> {
        let slice = veronese_slice(&self.start.config, self.hypersurface.d())?;
        let sys = OrbitSliceSystem::new(&self.hypersurface.form, slice.entries())?;
        SquareSystem::patched(HomogSystem::OrbitSlice(sys), self.patch.clone())
    }

    fn registry_options(&self) -> RegistryOptions {
        RegistryOptions {
            tolerance: 1e-6,
            det_filter: Some(DetFilter {
                n: self.hypersurface.n(),
                threshold: 1e-8,
            }),
            projective: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Point conditions `f(phi p_i) = 0`.
    Points,
    /// Linear slice rows applied to the translate's coefficients.
    Slice,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub seed: u64,
    pub tracker: TrackOptions,
    pub stopping: StoppingRule,
    pub budget: u64,
    pub formulation: Formulation,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            seed: 0,
            tracker: TrackOptions::default(),
            stopping: StoppingRule::default(),
            budget: 1_000_000,
            formulation: Formulation::Points,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodReport {
    Monodromy(MonodromyReport),
    TotalDegree(SolveStats),
}

pub struct SolveOutcome {
    pub registry: SolutionRegistry,
    pub report: MethodReport,
}

/// One solving algorithm; implementations are registered by name.
pub trait SolveStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn solve(&self, inst: &OrbitInstance, opts: &SolveOptions) -> Result<SolveOutcome>;
}

pub struct MonodromyStrategy;

impl SolveStrategy for MonodromyStrategy {
    fn name(&self) -> &'static str {
        "monodromy"
    }

    fn description(&self) -> &'static str {
        "track known solutions around random parameter loops until no new ones appear"
    }

    fn solve(&self, inst: &OrbitInstance, opts: &SolveOptions) -> Result<SolveOutcome> {
        if opts.formulation != Formulation::Points {
            return Err(Error::Config(
                "monodromy runs on the point-condition formulation".into(),
            ));
        }
        let family = inst.family()?;
        let (registry, report) =
            monodromy_solve(&family, &inst.start, &opts.stopping, &opts.tracker, opts.seed)?;
        Ok(SolveOutcome {
            registry,
            report: MethodReport::Monodromy(report),
        })
    }
}

pub struct TotalDegreeStrategy;

impl SolveStrategy for TotalDegreeStrategy {
    fn name(&self) -> &'static str {
        "total-degree"
    }

    fn description(&self) -> &'static str {
        "track every Bezout path of a straight-line homotopy (small instances)"
    }

    fn solve(&self, inst: &OrbitInstance, opts: &SolveOptions) -> Result<SolveOutcome> {
        use rand::SeedableRng;
        let target = match opts.formulation {
            Formulation::Points => inst.point_square()?,
            Formulation::Slice => inst.slice_square()?,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
        let (registry, stats) = solve_total_degree(
            &target,
            &opts.tracker,
            opts.budget,
            inst.registry_options(),
            &mut rng,
        )?;
        Ok(SolveOutcome {
            registry,
            report: MethodReport::TotalDegree(stats),
        })
    }
}

static STRATEGIES: &[&dyn SolveStrategy] = &[&MonodromyStrategy, &TotalDegreeStrategy];

/// All registered strategies.
pub fn strategies() -> &'static [&'static dyn SolveStrategy] {
    STRATEGIES
}

/// Look a strategy up by name.
pub fn strategy(name: &str) -> Result<&'static dyn SolveStrategy> {
    STRATEGIES
        .iter()
        .find(|s| s.name() == name)
        .copied()
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown solve method '{name}' (available: {})",
                STRATEGIES
                    .iter()
                    .map(|s| s.name())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })
}

/// The point system build for the 4x4 cubic case has the Bezout count the
/// total-degree oracle would need; exposed for accounting without tracking.
pub fn bezout_path_count(inst: &OrbitInstance) -> Result<u64> {
    let sq = inst.point_square()?;
    Ok(sq.degrees().iter().map(|&d| d as u64).product())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lists_both_methods() {
        let names: Vec<&str> = strategies().iter().map(|s| s.name()).collect();
        assert_eq!(names, vec!["monodromy", "total-degree"]);
        assert!(strategy("monodromy").is_ok());
        assert!(strategy("total-degree").is_ok());
        assert!(strategy("newton").is_err());
    }

    #[test]
    fn bezout_count_for_cubic_surface_instance() {
        let f = crate::orbit::sample_hypersurface(4, 3, 1);
        let inst = OrbitInstance::prepare(f, 2).unwrap();
        assert_eq!(bezout_path_count(&inst).unwrap(), 3u64.pow(15));
    }
}
