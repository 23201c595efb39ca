//! Total-degree tracking checked against elimination: the endpoints of a
//! 2x2 quadric system must match the roots obtained from the Sylvester
//! resultant, an algebraic route independent of path tracking.

use orbitdeg_core::homotopy::{solve_total_degree, TrackOptions};
use orbitdeg_core::monodromy::RegistryOptions;
use orbitdeg_core::polysys::{AffinePoly, CompiledSystem};
use orbitdeg_core::systems::SquareSystem;
use orbitdeg_core::univariate;
use orbitdeg_core::C64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Coefficients of a bivariate quadric as functions of y for fixed powers of
/// x: returns (a, b(y) coeffs, c(y) coeffs) with p = a x^2 + b(y) x + c(y).
struct XPoly {
    a: C64,
    b: [C64; 2],
    c: [C64; 3],
}

impl XPoly {
    fn of(terms: &[(C64, [u32; 2])]) -> Self {
        let mut out = XPoly {
            a: c(0.0, 0.0),
            b: [c(0.0, 0.0); 2],
            c: [c(0.0, 0.0); 3],
        };
        for &(v, [ex, ey]) in terms {
            match ex {
                2 => out.a += v,
                1 => out.b[ey as usize] += v,
                0 => out.c[ey as usize] += v,
                _ => unreachable!(),
            }
        }
        out
    }

    fn b_at(&self, y: C64) -> C64 {
        self.b[0] + self.b[1] * y
    }

    fn c_at(&self, y: C64) -> C64 {
        self.c[0] + self.c[1] * y + self.c[2] * y * y
    }
}

/// det of the 4x4 Sylvester matrix of two quadratics in x at a fixed y.
fn sylvester_det(p: &XPoly, q: &XPoly, y: C64) -> C64 {
    let (a1, b1, c1) = (p.a, p.b_at(y), p.c_at(y));
    let (a2, b2, c2) = (q.a, q.b_at(y), q.c_at(y));
    let m = vec![
        a1, b1, c1, c(0.0, 0.0),
        c(0.0, 0.0), a1, b1, c1,
        a2, b2, c2, c(0.0, 0.0),
        c(0.0, 0.0), a2, b2, c2,
    ];
    orbitdeg_core::linalg::det_c64(&m, 4)
}

#[test]
fn quadric_pair_endpoints_match_resultant_roots() {
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    for trial in 0..3 {
        // random dense affine quadrics in (x, y)
        let mut terms1 = Vec::new();
        let mut terms2 = Vec::new();
        for ex in 0..=2u32 {
            for ey in 0..=(2 - ex) {
                let g1 = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let g2 = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                terms1.push((g1, [ex, ey]));
                terms2.push((g2, [ex, ey]));
            }
        }
        let to_poly = |terms: &[(C64, [u32; 2])]| {
            AffinePoly::from_terms(
                2,
                2,
                &terms
                    .iter()
                    .map(|&(v, [ex, ey])| (v, vec![ex, ey]))
                    .collect::<Vec<_>>(),
            )
            .unwrap()
        };
        let target = SquareSystem::Dense(
            CompiledSystem::compile(vec![to_poly(&terms1), to_poly(&terms2)]).unwrap(),
        );

        // homotopy route: 4 Bezout paths
        let (reg, stats) = solve_total_degree(
            &target,
            &TrackOptions::default(),
            100,
            RegistryOptions::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(stats.paths_tracked, 4, "trial {trial}");
        assert_eq!(reg.len(), 4, "trial {trial}: expected 4 isolated solutions");

        // elimination route: resultant in x as a degree-4 polynomial in y,
        // recovered by interpolation, then x from the paired quadratic
        let p = XPoly::of(&terms1);
        let q = XPoly::of(&terms2);
        let nodes: Vec<C64> = (0..9)
            .map(|k| C64::from_polar(1.2, 0.7 * k as f64 + 0.13))
            .collect();
        let values: Vec<C64> = nodes.iter().map(|&y| sylvester_det(&p, &q, y)).collect();
        let res_poly = univariate::interpolate(&nodes, &values);
        let y_roots = univariate::all_roots(&res_poly).unwrap();
        assert_eq!(y_roots.len(), 4, "resultant should have degree 4");

        let mut oracle_solutions: Vec<Vec<C64>> = Vec::new();
        for &y in &y_roots {
            // x-roots of p(., y); keep the one that also solves q
            let xr = univariate::all_roots(&[p.c_at(y), p.b_at(y), p.a]).unwrap();
            let qv = |x: C64| q.a * x * x + q.b_at(y) * x + q.c_at(y);
            let best = xr
                .into_iter()
                .min_by(|&u, &v| qv(u).norm().partial_cmp(&qv(v).norm()).unwrap())
                .unwrap();
            assert!(qv(best).norm() < 1e-6, "resultant root inconsistent");
            oracle_solutions.push(vec![best, y]);
        }

        // match endpoint sets at 1e-8 on affine coordinates
        let endpoints: Vec<Vec<C64>> = reg
            .solutions()
            .iter()
            .map(|s| s.coords.clone())
            .collect();
        for sol in &oracle_solutions {
            let found = endpoints
                .iter()
                .any(|e| orbitdeg_core::monodromy::dist(sol, e) < 1e-8);
            assert!(found, "oracle solution {sol:?} not among endpoints");
        }
    }
}
