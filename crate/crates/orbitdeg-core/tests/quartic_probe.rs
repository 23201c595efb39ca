use orbitdeg_core::homotopy::TrackOptions;
use orbitdeg_core::monodromy::{monodromy_solve, ParameterFamily, StoppingRule};
use orbitdeg_core::orbit::{random_patch, sample_hypersurface, start_pair};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
#[ignore]
fn quartic_count_probe() {
    let t0 = std::time::Instant::now();
    let f = sample_hypersurface(3, 4, 777);
    let sp = start_pair(&f, 778).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(779);
    let patch = random_patch(9, &mut rng);
    let family = ParameterFamily::new(f, sp.config.clone(), patch.coeffs).unwrap();
    let (reg, report) = monodromy_solve(&family, &sp, &StoppingRule::default(), &TrackOptions::default(), 780).unwrap();
    println!("quartic: {} solutions, {} loops, {} paths, {} failures, {:.1}s",
        reg.len(), report.loops, report.paths_tracked, report.path_failures, t0.elapsed().as_secs_f64());
}
