//! Orbit-degree problem construction.
//!
//! A hypersurface `f` (degree-d form in n variables) is translated by an
//! n x n matrix acting on coordinates. Two equivalent polynomial systems in
//! the n^2 matrix entries describe the translates meeting generic conditions:
//! point conditions `f(phi(p_i)) = 0` for n^2 - 1 points, or a linear slice
//! of the image coefficient vector. Both are built here; start pairs for the
//! monodromy solver come from exchanging the roles of variables and
//! parameters so each equation becomes univariate.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polysys::{
    basis_len, compose_linear, monomial_basis, ComposePlan, Form, HomogeneousForm, PatchRow,
    PolySystem,
};
use crate::scalar::{CScalar, C64};
use crate::univariate;

/// Draw one standard complex Gaussian (independent N(0,1) real and imaginary
/// parts).
pub fn complex_gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Deterministic per-stage seed derivation (splitmix64 over seed and tag).
pub fn stage_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A hypersurface with provenance and its (user-supplied) stabilizer order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Hypersurface {
    pub form: HomogeneousForm,
    pub provenance: Provenance,
    pub stabilizer_order: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Sampled { seed: u64 },
    UserSupplied,
}

impl Hypersurface {
    pub fn n(&self) -> usize {
        self.form.num_vars
    }
    pub fn d(&self) -> usize {
        self.form.degree
    }
    /// Number of matrix entries (the unknowns of the orbit problems).
    pub fn matrix_dim(&self) -> usize {
        self.n() * self.n()
    }
}

/// An n x n complex matrix as a projective point.
#[derive(Clone, Debug)]
pub struct MatrixPoint {
    pub n: usize,
    pub entries: Vec<C64>,
}

impl MatrixPoint {
    pub fn new(n: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        Ok(MatrixPoint { n, entries })
    }

    pub fn abs_det(&self) -> f64 {
        crate::linalg::det_c64(&self.entries, self.n).norm()
    }

    /// Canonical projective representative: rescale so the largest modulus is
    /// one, then rotate the phase so the first entry of modulus >= 0.5 is
    /// real and positive.
    pub fn normalized(&self) -> MatrixPoint {
        MatrixPoint {
            n: self.n,
            entries: normalize_projective(&self.entries),
        }
    }
}

/// Projective normalization used for dedup and I/O (see [`MatrixPoint`]).
pub fn normalize_projective(v: &[C64]) -> Vec<C64> {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return v.to_vec();
    }
    let mut out: Vec<C64> = v.iter().map(|z| z / max).collect();
    if let Some(anchor) = out.iter().find(|z| z.norm() >= 0.5) {
        let phase = anchor / anchor.norm();
        let rot = phase.conj();
        out.iter_mut().for_each(|z| *z *= rot);
    }
    out
}

/// Point conditions: n^2 - 1 points of P^(n-1), each stored as n coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointConfig {
    pub n: usize,
    pub points: Vec<Vec<[f64; 2]>>,
}

impl PointConfig {
    pub fn from_points(n: usize, points: Vec<Vec<C64>>) -> Result<Self> {
        if points.len() != n * n - 1 {
            return Err(Error::DimensionMismatch {
                expected: n * n - 1,
                got: points.len(),
            });
        }
        for p in &points {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: p.len(),
                });
            }
            if p.iter().all(|z| z.norm_sqr() == 0.0) {
                return Err(Error::DegenerateInput("zero point in configuration".into()));
            }
        }
        Ok(PointConfig {
            n,
            points: points
                .iter()
                .map(|p| p.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        })
    }

    pub fn point(&self, i: usize) -> Vec<C64> {
        self.points[i].iter().map(|p| C64::new(p[0], p[1])).collect()
    }

    pub fn all_points(&self) -> Vec<Vec<C64>> {
        (0..self.points.len()).map(|i| self.point(i)).collect()
    }

    /// Flat parameter vector (all coordinates of all points).
    pub fn flat(&self) -> Vec<C64> {
        self.points
            .iter()
            .flat_map(|p| p.iter().map(|q| C64::new(q[0], q[1])))
            .collect()
    }

    pub fn from_flat(n: usize, flat: &[C64]) -> Result<Self> {
        let m = n * n - 1;
        if flat.len() != m * n {
            return Err(Error::DimensionMismatch {
                expected: m * n,
                got: flat.len(),
            });
        }
        let points = flat.chunks(n).map(|c| c.to_vec()).collect();
        PointConfig::from_points(n, points)
    }

    /// Fresh random configuration: standard complex normal coordinates,
    /// each point rescaled to the unit sphere (a choice of representative).
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let m = n * n - 1;
        let points = (0..m)
            .map(|_| {
                let mut p: Vec<C64> = (0..n).map(|_| complex_gaussian(rng)).collect();
                let norm = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                p.iter_mut().for_each(|z| *z /= norm);
                p
            })
            .collect();
        PointConfig::from_points(n, points).expect("random configuration is well formed")
    }
}

/// Linear slice of the coefficient projective space: an (n^2 - 1) x width
/// matrix of full row rank.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearSlice {
    pub rows: usize,
    pub cols: usize,
    pub matrix: Vec<[f64; 2]>,
}

impl LinearSlice {
    pub fn entries(&self) -> Vec<C64> {
        self.matrix.iter().map(|p| C64::new(p[0], p[1])).collect()
    }

    pub fn row(&self, r: usize) -> Vec<C64> {
        self.matrix[r * self.cols..(r + 1) * self.cols]
            .iter()
            .map(|p| C64::new(p[0], p[1]))
            .collect()
    }
}

/// Start pair: a matrix solution together with the point configuration it
/// solves.
#[derive(Clone, Debug)]
pub struct StartPair {
    pub phi0: MatrixPoint,
    pub config: PointConfig,
    pub residual_norm: f64,
}

// ---------------------------------------------------------------------------
// Sampling and the orbit map
// ---------------------------------------------------------------------------

/// Sample a hypersurface with i.i.d. standard complex Gaussian coefficients.
pub fn sample_hypersurface(n: usize, d: usize, seed: u64) -> Hypersurface {
    assert!(n >= 2 && d >= 1, "need n >= 2, d >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..basis_len(n, d))
        .map(|_| complex_gaussian(&mut rng))
        .collect();
    Hypersurface {
        form: HomogeneousForm::from_coeffs(n, d, coeffs).expect("sampled form is well formed"),
        provenance: Provenance::Sampled { seed },
        stabilizer_order: 1,
    }
}

/// The Cayley cubic `yzw + xzw + xyw + xyz` (n = 4, d = 3); its coordinate
/// permutations give a stabilizer of order 24.
pub fn cayley_cubic() -> Hypersurface {
    let mut form = HomogeneousForm::zero(4, 3, 53);
    for expo in [[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]] {
        let r = crate::polysys::monomial_rank(&expo);
        form.coeffs[r] = C64::new(1.0, 0.0);
    }
    Hypersurface {
        form,
        provenance: Provenance::UserSupplied,
        stabilizer_order: 24,
    }
}

/// Image of a matrix under the orbit map: the coefficient vector of the
/// translate, i.e. of `x -> f(phi x)`.
pub fn theta(f: &Hypersurface, phi: &MatrixPoint) -> Result<HomogeneousForm> {
    if phi.n != f.n() {
        return Err(Error::ShapeMismatch(format!(
            "matrix is {}x{}, form has {} variables",
            phi.n,
            phi.n,
            f.n()
        )));
    }
    let g = compose_linear(&f.form, &phi.entries)?;
    if g.is_zero() {
        return Err(Error::DegenerateImage);
    }
    Ok(g)
}

/// Generic version of [`theta`] for high-precision trace summation.
pub fn theta_generic<T: CScalar>(f: &Form<T>, phi: &[T], plan: &ComposePlan) -> Form<T> {
    crate::polysys::compose_with_plan(f, phi, plan)
}

// ---------------------------------------------------------------------------
// Symbolic expansion in the matrix entries
// ---------------------------------------------------------------------------

/// Expand `f(phi p)` as a dense degree-d form in the n^2 entries of `phi`
/// (row-major flattening), for a fixed point `p`.
pub fn expand_point_equation(f: &HomogeneousForm, p: &[C64]) -> HomogeneousForm {
    let n = f.num_vars;
    let nn = n * n;
    let d = f.degree;
    let plan = ComposePlan::new(nn, d);
    expand_point_equation_with(f, p, &plan)
}

fn expand_point_equation_with(
    f: &HomogeneousForm,
    p: &[C64],
    plan: &ComposePlan,
) -> HomogeneousForm {
    let n = f.num_vars;
    let nn = n * n;
    let d = f.degree;
    let basis = monomial_basis(n, d);
    let mut out = vec![C64::new(0.0, 0.0); basis_len(nn, d)];
    let mut cur: Vec<C64> = Vec::new();
    let mut next: Vec<C64> = Vec::new();
    // (phi p)_j is the linear form over phi variables with coefficients p_k
    // placed at positions j*n + k.
    let mut linear = vec![C64::new(0.0, 0.0); nn];
    for (c, expo) in f.coeffs.iter().zip(&basis) {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        cur.clear();
        cur.push(C64::new(1.0, 0.0));
        let mut deg = 0usize;
        for (j, &e) in expo.iter().enumerate() {
            if e == 0 {
                continue;
            }
            linear.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            for (k, &pk) in p.iter().enumerate() {
                linear[j * n + k] = pk;
            }
            for _ in 0..e {
                plan.mul_linear(deg, &cur, &linear, &mut next);
                std::mem::swap(&mut cur, &mut next);
                deg += 1;
            }
        }
        for (o, v) in out.iter_mut().zip(&cur) {
            *o += c * v;
        }
    }
    HomogeneousForm::from_coeffs(nn, d, out).expect("expansion has canonical length")
}

/// Expand the orbit map symbolically: entry `a` of the result is the dense
/// degree-d form in the n^2 matrix entries giving coefficient `a` of the
/// translate.
pub fn expand_theta_symbolic(f: &HomogeneousForm) -> Vec<HomogeneousForm> {
    let n = f.num_vars;
    let nn = n * n;
    let d = f.degree;
    let phi_plan = ComposePlan::new(nn, d);
    let x_plan = ComposePlan::new(n, d);
    let width = basis_len(n, d);
    let mut out: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); basis_len(nn, d)]; width];
    let x_basis = monomial_basis(n, d);
    // state: x-monomial index (degree k) -> dense phi-form of degree k
    for (fc, expo) in f.coeffs.iter().zip(&x_basis) {
        if fc.norm_sqr() == 0.0 {
            continue;
        }
        let mut state: Vec<Vec<C64>> = vec![vec![C64::new(1.0, 0.0)]];
        let mut deg = 0usize;
        for (i, &e) in expo.iter().enumerate() {
            for _ in 0..e {
                // multiply by (phi x)_i = sum_j phi_{ij} x_j
                let xlen = x_plan.bases[deg + 1].len();
                let flen = basis_len(nn, deg + 1);
                let mut new_state: Vec<Vec<C64>> =
                    vec![vec![C64::new(0.0, 0.0); flen]; xlen];
                for (xm, phiform) in state.iter().enumerate() {
                    for (fi, &coeff) in phiform.iter().enumerate() {
                        if coeff.norm_sqr() == 0.0 {
                            continue;
                        }
                        for j in 0..n {
                            let xtarget = x_plan.shifts[deg][xm][j];
                            let var = i * n + j;
                            let ftarget = phi_plan.shifts[deg][fi][var];
                            new_state[xtarget][ftarget] += coeff;
                        }
                    }
                }
                state = new_state;
                deg += 1;
            }
        }
        for (xm, phiform) in state.iter().enumerate() {
            for (fi, &coeff) in phiform.iter().enumerate() {
                out[xm][fi] += fc * coeff;
            }
        }
    }
    out.into_iter()
        .map(|coeffs| {
            HomogeneousForm::from_coeffs(nn, d, coeffs).expect("expansion has canonical length")
        })
        .collect()
}

// ---------------------------------------------------------------------------
// System builders
// ---------------------------------------------------------------------------

/// Point-condition system: one degree-d equation per point, dense in the
/// matrix entries. No patch row (callers square it with a generic patch).
pub fn build_point_system(f: &Hypersurface, config: &PointConfig) -> Result<PolySystem> {
    let n = f.n();
    if config.n != n || config.points.len() != n * n - 1 {
        return Err(Error::DimensionMismatch {
            expected: n * n - 1,
            got: config.points.len(),
        });
    }
    let plan = ComposePlan::new(n * n, f.d());
    let mut forms = Vec::with_capacity(config.points.len());
    for i in 0..config.points.len() {
        let p = config.point(i);
        if p.iter().all(|z| z.norm_sqr() == 0.0) {
            return Err(Error::DegenerateInput(format!("point {i} is zero")));
        }
        forms.push(expand_point_equation_with(&f.form, &p, &plan));
    }
    PolySystem::new(n * n, forms)
}

/// Slice system: rows of `L` applied to the translate's coefficient vector,
/// plus the supplied patch row making it square.
pub fn build_slice_system(
    f: &Hypersurface,
    slice: &LinearSlice,
    patch: PatchRow,
) -> Result<PolySystem> {
    let n = f.n();
    let nn = n * n;
    let width = basis_len(n, f.d());
    if slice.rows != nn - 1 || slice.cols != width {
        return Err(Error::ShapeMismatch(format!(
            "slice must be {}x{width}, got {}x{}",
            nn - 1,
            slice.rows,
            slice.cols
        )));
    }
    let rank = crate::linalg::rank_c64(&slice.entries(), slice.rows, slice.cols, 1e-10);
    if rank != slice.rows {
        return Err(Error::RankDeficient {
            rank,
            expected: slice.rows,
        });
    }
    let theta_forms = expand_theta_symbolic(&f.form);
    let mut forms = Vec::with_capacity(slice.rows);
    for r in 0..slice.rows {
        let row = slice.row(r);
        let mut acc = vec![C64::new(0.0, 0.0); basis_len(nn, f.d())];
        for (l, tf) in row.iter().zip(&theta_forms) {
            if l.norm_sqr() == 0.0 {
                continue;
            }
            for (a, c) in acc.iter_mut().zip(&tf.coeffs) {
                *a += l * c;
            }
        }
        forms.push(
            HomogeneousForm::from_coeffs(nn, f.d(), acc).expect("row combination is well formed"),
        );
    }
    Ok(PolySystem::new(nn, forms)?.with_patch(patch))
}

/// Slice whose rows are the degree-d monomial vectors of the configuration
/// points, so that the slice system vanishes exactly on translates through
/// the points.
pub fn veronese_slice(config: &PointConfig, d: usize) -> Result<LinearSlice> {
    let n = config.n;
    let width = basis_len(n, d);
    let basis = monomial_basis(n, d);
    let rows = config.points.len();
    let mut matrix = Vec::with_capacity(rows * width);
    for i in 0..rows {
        let p = config.point(i);
        for expo in &basis {
            let mut m = C64::new(1.0, 0.0);
            for (x, &e) in p.iter().zip(expo) {
                for _ in 0..e {
                    m *= x;
                }
            }
            matrix.push([m.re, m.im]);
        }
    }
    let entries: Vec<C64> = matrix.iter().map(|p| C64::new(p[0], p[1])).collect();
    let rank = crate::linalg::rank_c64(&entries, rows, width, 1e-10);
    if rank != rows {
        return Err(Error::RankDeficient {
            rank,
            expected: rows,
        });
    }
    Ok(LinearSlice {
        rows,
        cols: width,
        matrix,
    })
}

/// Random unit-norm patch row `l . x = 1`.
pub fn random_patch(dim: usize, rng: &mut impl Rng) -> PatchRow {
    let mut coeffs: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
    let norm = coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    coeffs.iter_mut().for_each(|z| *z /= norm);
    PatchRow {
        coeffs,
        rhs: C64::new(1.0, 0.0),
    }
}

// ---------------------------------------------------------------------------
// Start pair
// ---------------------------------------------------------------------------

/// Residual of the point-condition equations at `(phi, config)`.
pub fn point_system_residual(f: &Hypersurface, phi: &[C64], config: &PointConfig) -> f64 {
    let n = f.n();
    let mut sum = 0.0;
    for i in 0..config.points.len() {
        let p = config.point(i);
        let v: Vec<C64> = (0..n)
            .map(|r| (0..n).map(|c| phi[r * n + c] * p[c]).sum())
            .collect();
        sum += f.form.eval(&v).norm_sqr();
    }
    sum.sqrt()
}

/// Build a start pair by exchanging variables and parameters: sample the
/// matrix and all but the last coordinate of each point, then solve the
/// resulting univariate equation for each point's last coordinate.
pub fn start_pair(f: &Hypersurface, seed: u64) -> Result<StartPair> {
    let n = f.n();
    let d = f.d();
    let m = n * n - 1;
    let mut attempt_seed = seed;
    for _attempt in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed);
        let phi: Vec<C64> = (0..n * n).map(|_| complex_gaussian(&mut rng)).collect();
        let mut points: Vec<Vec<C64>> = Vec::with_capacity(m);
        let mut ok = true;
        for _ in 0..m {
            let mut p: Vec<C64> = (0..n - 1).map(|_| complex_gaussian(&mut rng)).collect();
            p.push(C64::new(0.0, 0.0));
            match solve_last_coordinate(f, &phi, &p, &mut rng) {
                Some(s) => {
                    let mut full = p;
                    full[n - 1] = s;
                    let norm = full.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    full.iter_mut().for_each(|z| *z /= norm);
                    points.push(full);
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let config = PointConfig::from_points(n, points)?;
            let residual = point_system_residual(f, &phi, &config);
            let scale = phi.iter().map(|z| z.norm()).fold(0.0, f64::max).powi(d as i32);
            if residual <= 1e-10 * scale.max(1.0) {
                return Ok(StartPair {
                    phi0: MatrixPoint::new(n, phi)?,
                    config,
                    residual_norm: residual,
                });
            }
        }
        attempt_seed = stage_seed(attempt_seed, 0xA11CE);
    }
    Err(Error::StartPairFailed { attempts: 5 })
}

/// The univariate polynomial `s -> f(phi (p + s e_last))` and one of its
/// roots, polished by Newton on the exact evaluation.
///
/// The root is chosen uniformly at random: a deterministic rule (say the
/// best-conditioned root) would bias all points toward the same region of
/// projective space and degrade the conditioning of everything built from
/// the configuration.
fn solve_last_coordinate(
    f: &Hypersurface,
    phi: &[C64],
    p_partial: &[C64],
    rng: &mut impl Rng,
) -> Option<C64> {
    let n = f.n();
    let d = f.d();
    // a = phi p_partial (last coordinate zero), b = phi e_last
    let a: Vec<C64> = (0..n)
        .map(|r| (0..n).map(|c| phi[r * n + c] * p_partial[c]).sum())
        .collect();
    let b: Vec<C64> = (0..n).map(|r| phi[r * n + (n - 1)]).collect();
    let g = |s: C64| {
        let v: Vec<C64> = a.iter().zip(&b).map(|(ai, bi)| ai + s * bi).collect();
        f.form.eval(&v)
    };
    // coefficients by interpolation at d+1 nodes on a circle
    let nodes: Vec<C64> = (0..=d)
        .map(|k| C64::from_polar(1.1, 2.0 * std::f64::consts::PI * k as f64 / (d + 1) as f64 + 0.3))
        .collect();
    let values: Vec<C64> = nodes.iter().map(|&z| g(z)).collect();
    let coeffs = univariate::interpolate(&nodes, &values);
    let lead_scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if lead_scale == 0.0 || coeffs[d].norm() < 1e-10 * lead_scale {
        return None; // degenerate direction; caller resamples
    }
    let roots = univariate::all_roots(&coeffs).ok()?;
    if roots.len() != d {
        return None;
    }
    let dg = |s: C64| {
        let v: Vec<C64> = a.iter().zip(&b).map(|(ai, bi)| ai + s * bi).collect();
        let grad = gradient_of_form(&f.form, &v);
        grad.iter().zip(&b).map(|(gi, bi)| gi * bi).sum::<C64>()
    };
    let mut root = roots[rng.gen_range(0..roots.len())];
    if dg(root).norm() < 1e-8 * lead_scale {
        return None; // near-multiple root; caller resamples
    }
    // Newton polish on the exact univariate evaluation
    for _ in 0..6 {
        let der = dg(root);
        if der.norm() < 1e-250 {
            return None;
        }
        let step = g(root) / der;
        root -= step;
        if step.norm() < 1e-15 * root.norm().max(1.0) {
            break;
        }
    }
    if g(root).norm() > 1e-11 * lead_scale.max(1.0) {
        return None;
    }
    Some(root)
}

/// Gradient of a form by direct term differentiation (cold paths only).
pub fn gradient_of_form(f: &HomogeneousForm, x: &[C64]) -> Vec<C64> {
    let n = f.num_vars;
    let basis = monomial_basis(n, f.degree);
    let mut grad = vec![C64::new(0.0, 0.0); n];
    for (c, expo) in f.coeffs.iter().zip(&basis) {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        for j in 0..n {
            if expo[j] == 0 {
                continue;
            }
            let mut m = c * C64::new(expo[j] as f64, 0.0);
            for (k, &e) in expo.iter().enumerate() {
                let pow = if k == j { e - 1 } else { e };
                for _ in 0..pow {
                    m *= x[k];
                }
            }
            grad[j] += m;
        }
    }
    grad
}

// ---------------------------------------------------------------------------
// Degree report
// ---------------------------------------------------------------------------

/// Orbit-closure degree from a raw solution count: the count must be an exact
/// multiple of the stabilizer order.
pub fn degree_report(count: u64, stabilizer_order: u64) -> Result<u64> {
    if stabilizer_order == 0 {
        return Err(Error::Config("stabilizer order must be positive".into()));
    }
    if count % stabilizer_order != 0 {
        return Err(Error::NotDivisible {
            count,
            stabilizer: stabilizer_order,
        });
    }
    Ok(count / stabilizer_order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polysys::weyl_norm;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn sampling_is_deterministic_and_sized() {
        let f1 = sample_hypersurface(4, 3, 42);
        let f2 = sample_hypersurface(4, 3, 42);
        assert_eq!(f1.form.coeffs.len(), 20);
        for (a, b) in f1.form.coeffs.iter().zip(&f2.form.coeffs) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        let f3 = sample_hypersurface(4, 3, 43);
        assert!(f1.form.coeffs.iter().zip(&f3.form.coeffs).any(|(a, b)| a != b));
    }

    #[test]
    fn sampling_statistics() {
        // mean ~ 0, variance ~ 1 per real component over 10^4 draws
        let draws = 10_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut count = 0usize;
        for seed in 0..(draws / 20) {
            let f = sample_hypersurface(4, 3, 90_000 + seed);
            for z in &f.form.coeffs {
                for part in [z.re, z.im] {
                    sum += part;
                    sumsq += part * part;
                    count += 1;
                }
            }
        }
        let mean = sum / count as f64;
        let var = sumsq / count as f64 - mean * mean;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn theta_identity_and_scaling() {
        let f = sample_hypersurface(4, 3, 5);
        let mut eye = vec![c(0.0, 0.0); 16];
        for i in 0..4 {
            eye[i * 4 + i] = c(1.0, 0.0);
        }
        let phi = MatrixPoint::new(4, eye.clone()).unwrap();
        let img = theta(&f, &phi).unwrap();
        for (a, b) in img.coeffs.iter().zip(&f.form.coeffs) {
            assert!((a - b).norm() < 1e-14);
        }
        let lam = c(0.7, -0.4);
        let scaled = MatrixPoint::new(4, eye.iter().map(|&z| lam * z).collect()).unwrap();
        let img2 = theta(&f, &scaled).unwrap();
        let lam3 = lam * lam * lam;
        for (a, b) in img2.coeffs.iter().zip(&f.form.coeffs) {
            assert!((a - lam3 * b).norm() < 1e-12 * b.norm().max(1.0));
        }
    }

    #[test]
    fn point_system_shape_and_membership() {
        let f = sample_hypersurface(4, 3, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let config = PointConfig::random(4, &mut rng);
        let sys = build_point_system(&f, &config).unwrap();
        assert_eq!(sys.forms.len(), 15);
        assert_eq!(sys.num_vars, 16);
        for form in &sys.forms {
            assert_eq!(form.degree, 3);
        }
        // If f(p_i) = 0 then the identity matrix satisfies equation i.
        let p = config.point(0);
        let fp = f.form.eval(&p);
        // g = f - fp * x0^3 / p0^3 vanishes at p (p0 generically nonzero)
        let mut g = f.clone();
        let p0cubed = p[0] * p[0] * p[0];
        g.form.coeffs[0] -= fp / p0cubed;
        assert!(g.form.eval(&p).norm() < 1e-10);
        let sys2 = build_point_system(&g, &config).unwrap();
        let mut eye = vec![c(0.0, 0.0); 16];
        for i in 0..4 {
            eye[i * 4 + i] = c(1.0, 0.0);
        }
        let eq0_at_identity = sys2.forms[0].eval(&eye);
        assert!(eq0_at_identity.norm() < 1e-10);
    }

    #[test]
    fn expanded_equation_matches_direct_composition() {
        let f = sample_hypersurface(3, 3, 17);
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let p: Vec<C64> = (0..3).map(|_| complex_gaussian(&mut rng)).collect();
        let eq = expand_point_equation(&f.form, &p);
        for _ in 0..20 {
            let phi: Vec<C64> = (0..9).map(|_| complex_gaussian(&mut rng)).collect();
            let v: Vec<C64> = (0..3)
                .map(|r| (0..3).map(|c_| phi[r * 3 + c_] * p[c_]).sum())
                .collect();
            let direct = f.form.eval(&v);
            let expanded = eq.eval(&phi);
            assert!((direct - expanded).norm() <= 1e-11 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn theta_symbolic_matches_compose() {
        let f = sample_hypersurface(3, 2, 23);
        let forms = expand_theta_symbolic(&f.form);
        assert_eq!(forms.len(), 6);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..10 {
            let phi: Vec<C64> = (0..9).map(|_| complex_gaussian(&mut rng)).collect();
            let direct = compose_linear(&f.form, &phi).unwrap();
            for (sym, dc) in forms.iter().zip(&direct.coeffs) {
                let v = sym.eval(&phi);
                assert!((v - dc).norm() <= 1e-11 * dc.norm().max(1.0));
            }
        }
    }

    #[test]
    fn veronese_rows_are_monomial_vectors() {
        // n=2 chart point (1, t): row (1, t, t^2)
        let t = c(0.3, 0.8);
        let points = vec![
            vec![c(1.0, 0.0), t],
            vec![c(1.0, 0.0), c(-0.7, 0.2)],
            vec![c(0.4, 0.1), c(1.0, 0.0)],
        ];
        let config = PointConfig::from_points(2, points).unwrap();
        let slice = veronese_slice(&config, 2).unwrap();
        let row = slice.row(0);
        assert!((row[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((row[1] - t).norm() < 1e-15);
        assert!((row[2] - t * t).norm() < 1e-15);
    }

    #[test]
    fn veronese_slice_full_rank_against_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..100 {
            let config = PointConfig::random(3, &mut rng);
            let slice = veronese_slice(&config, 3).unwrap();
            // SVD oracle
            let entries = slice.entries();
            let m = nalgebra::DMatrix::from_fn(slice.rows, slice.cols, |r, cc| {
                entries[r * slice.cols + cc]
            });
            let svd = m.svd(false, false);
            let smax = svd.singular_values.max();
            let rank = svd
                .singular_values
                .iter()
                .filter(|&&s| s > 1e-10 * smax)
                .count();
            assert_eq!(rank, 8, "trial {trial}");
        }
    }

    #[test]
    fn slice_system_square_and_consistent_with_points()
    {
        let f = sample_hypersurface(3, 3, 31);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let config = PointConfig::random(3, &mut rng);
        let slice = veronese_slice(&config, 3).unwrap();
        let patch = random_patch(9, &mut rng);
        let sys = build_slice_system(&f, &slice, patch).unwrap();
        assert_eq!(sys.n_equations(), 9);
        assert_eq!(sys.num_vars, 9);
        // The homogeneous rows of the slice system agree with the point
        // equations (identical polynomials, two construction routes).
        let point_sys = build_point_system(&f, &config).unwrap();
        for _ in 0..10 {
            let phi: Vec<C64> = (0..9).map(|_| complex_gaussian(&mut rng)).collect();
            for (a, b) in sys.forms.iter().zip(&point_sys.forms) {
                let (va, vb) = (a.eval(&phi), b.eval(&phi));
                assert!((va - vb).norm() <= 1e-10 * vb.norm().max(1.0));
            }
        }
        // A random matrix is not a solution.
        let phi: Vec<C64> = (0..9).map(|_| complex_gaussian(&mut rng)).collect();
        let residual: f64 = sys
            .forms
            .iter()
            .map(|g| g.eval(&phi).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale: f64 = phi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(residual / scale.powi(3) > 0.1);
    }

    #[test]
    fn start_pair_residual_and_structure() {
        let f = sample_hypersurface(4, 3, 11);
        let sp = start_pair(&f, 77).unwrap();
        assert!(sp.residual_norm <= 1e-10 * 100.0); // generous absolute scale
        assert_eq!(sp.config.points.len(), 15);
        // equation i depends only on point i's last coordinate: perturbing
        // point j's last coordinate leaves equation i untouched
        let phi = &sp.phi0.entries;
        let n = 4;
        let eval_eq = |config: &PointConfig, i: usize| {
            let p = config.point(i);
            let v: Vec<C64> = (0..n)
                .map(|r| (0..n).map(|cc| phi[r * n + cc] * p[cc]).sum())
                .collect();
            f.form.eval(&v)
        };
        let base = eval_eq(&sp.config, 3);
        let mut perturbed = sp.config.clone();
        perturbed.points[5][3] = [9.9, -1.1];
        assert!((eval_eq(&perturbed, 3) - base).norm() < 1e-14);
        assert!((eval_eq(&perturbed, 5) - eval_eq(&sp.config, 5)).norm() > 1e-6);
    }

    #[test]
    fn univariate_start_equations_have_d_roots() {
        let f = sample_hypersurface(4, 3, 13);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let phi: Vec<C64> = (0..16).map(|_| complex_gaussian(&mut rng)).collect();
        let mut p: Vec<C64> = (0..3).map(|_| complex_gaussian(&mut rng)).collect();
        p.push(c(0.0, 0.0));
        let a: Vec<C64> = (0..4)
            .map(|r| (0..4).map(|cc| phi[r * 4 + cc] * p[cc]).sum())
            .collect();
        let b: Vec<C64> = (0..4).map(|r| phi[r * 4 + 3]).collect();
        let nodes: Vec<C64> = (0..4)
            .map(|k| C64::from_polar(1.0, 1.9 * k as f64 + 0.1))
            .collect();
        let values: Vec<C64> = nodes
            .iter()
            .map(|&s| {
                let v: Vec<C64> = a.iter().zip(&b).map(|(ai, bi)| ai + s * bi).collect();
                f.form.eval(&v)
            })
            .collect();
        let coeffs = univariate::interpolate(&nodes, &values);
        let roots = univariate::all_roots(&coeffs).unwrap();
        assert_eq!(roots.len(), 3);
        for r in roots {
            let v: Vec<C64> = a.iter().zip(&b).map(|(ai, bi)| ai + r * bi).collect();
            assert!(f.form.eval(&v).norm() < 1e-8);
        }
    }

    #[test]
    fn degree_report_divisibility() {
        assert_eq!(degree_report(96120, 1).unwrap(), 96120);
        assert_eq!(degree_report(7320, 24).unwrap(), 305);
        assert!(matches!(
            degree_report(7321, 24),
            Err(Error::NotDivisible { .. })
        ));
    }

    #[test]
    fn normalization_canonicalizes_rescaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let v: Vec<C64> = (0..16).map(|_| complex_gaussian(&mut rng)).collect();
        let lam = c(-2.3, 1.7);
        let w: Vec<C64> = v.iter().map(|&z| lam * z).collect();
        let nv = normalize_projective(&v);
        let nw = normalize_projective(&w);
        let dist: f64 = nv
            .iter()
            .zip(&nw)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(dist < 1e-12);
        let max = nv.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cayley_form_is_symmetric() {
        let f = cayley_cubic();
        assert_eq!(f.stabilizer_order, 24);
        // invariant under a transposition of variables
        let mut perm = vec![c(0.0, 0.0); 16];
        // swap x and y, fix z, w
        perm[0 * 4 + 1] = c(1.0, 0.0);
        perm[1 * 4 + 0] = c(1.0, 0.0);
        perm[2 * 4 + 2] = c(1.0, 0.0);
        perm[3 * 4 + 3] = c(1.0, 0.0);
        let g = compose_linear(&f.form, &perm).unwrap();
        for (a, b) in g.coeffs.iter().zip(&f.form.coeffs) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!(weyl_norm(&f.form) > 0.0);
    }
}
