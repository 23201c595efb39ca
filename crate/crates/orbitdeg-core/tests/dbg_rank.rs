use orbitdeg_core::orbit::{sample_hypersurface, start_pair, PointConfig};
use orbitdeg_core::polysys::{basis_len, monomial_basis};
use orbitdeg_core::C64;
use rand::SeedableRng;

fn veronese_sv(points: &[Vec<C64>]) -> Vec<f64> {
    let n = 3; let d = 3;
    let width = basis_len(n, d);
    let basis = monomial_basis(n, d);
    let mut m: Vec<C64> = Vec::new();
    for p in points {
        for expo in &basis {
            let mut v = C64::new(1.0, 0.0);
            for (x, &e) in p.iter().zip(expo) { for _ in 0..e { v *= x; } }
            m.push(v);
        }
    }
    let dm = nalgebra::DMatrix::from_fn(points.len(), width, |r, c| m[r * width + c]);
    let svd = dm.svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

#[test]
fn probe_conditioning() {
    for seed in [301u64, 304, 400, 500, 20240901] {
        let f = sample_hypersurface(3, 3, seed);
        let sp = start_pair(&f, seed + 1).unwrap();
        let sv = veronese_sv(&sp.config.all_points());
        println!("start-pair seed {seed}: sigma_min {:.3e}, sigma_7 {:.3e}", sv[7], sv[6]);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for trial in 0..5 {
        let cfg = PointConfig::random(3, &mut rng);
        let sv = veronese_sv(&cfg.all_points());
        println!("random config {trial}: sigma_min {:.3e}", sv[7]);
    }
}
