//! Dense homogeneous polynomial forms and systems.
//!
//! A degree-d form in n variables is stored as the dense coefficient vector
//! over the graded-lexicographic monomial basis (descending lex within one
//! degree: x0^d first, xn^d last). That order is the single canonical order
//! used everywhere, including file formats.
//!
//! Affine (inhomogeneous) equations are carried as homogenizations: a degree-d
//! polynomial in n variables becomes a degree-d form in n+1 variables whose
//! variable 0 is the homogenizer, and is evaluated at (1, x).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CScalar, C64};

/// Binomial coefficient as u64; sizes here stay tiny.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of degree-d monomials in n variables.
pub fn basis_len(n: usize, d: usize) -> usize {
    binomial((n + d - 1) as u64, d as u64) as usize
}

/// All exponent vectors of total degree `d` in `n` variables, graded-lex.
pub fn monomial_basis(n: usize, d: usize) -> Vec<Vec<u32>> {
    assert!(n >= 1, "need at least one variable");
    let mut out = Vec::with_capacity(basis_len(n, d));
    let mut cur = vec![0u32; n];
    fn rec(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, var: usize, rem: u32, n: usize) {
        if var == n - 1 {
            cur[var] = rem;
            out.push(cur.clone());
            return;
        }
        for e in (0..=rem).rev() {
            cur[var] = e;
            rec(out, cur, var + 1, rem - e, n);
        }
    }
    rec(&mut out, &mut cur, 0, d as u32, n);
    out
}

/// Position of an exponent vector in `monomial_basis(n, d)`.
pub fn monomial_rank(expo: &[u32]) -> usize {
    let n = expo.len();
    let d: u32 = expo.iter().sum();
    let mut rank = 0usize;
    let mut rem = d;
    for (var, &e) in expo.iter().enumerate() {
        if var == n - 1 {
            break;
        }
        let tail_vars = (n - var - 1) as u64;
        // monomials with a larger exponent at this position come first
        for larger in (e + 1)..=rem {
            rank += binomial(tail_vars + (rem - larger) as u64 - 1, (rem - larger) as u64)
                as usize;
        }
        rem -= e;
    }
    rank
}

/// Multinomial coefficient d! / (a_1! ... a_n!) as f64 (exact for our sizes).
pub fn multinomial(expo: &[u32]) -> f64 {
    let d: u32 = expo.iter().sum();
    let mut acc = 1.0f64;
    let mut seen = 0u32;
    for &e in expo {
        for i in 1..=e {
            acc *= (seen + i) as f64 / i as f64;
        }
        seen += e;
    }
    let _ = d;
    acc.round()
}

/// Cached bases and index-shift tables for one ambient (n, max degree).
///
/// `shifts[k][idx][var]` is the rank, in the degree-(k+1) basis, of the
/// degree-k monomial `idx` multiplied by variable `var`.
pub struct ComposePlan {
    pub n: usize,
    pub max_degree: usize,
    pub bases: Vec<Vec<Vec<u32>>>,
    pub shifts: Vec<Vec<Vec<usize>>>,
}

impl ComposePlan {
    pub fn new(n: usize, max_degree: usize) -> Self {
        let bases: Vec<_> = (0..=max_degree).map(|k| monomial_basis(n, k)).collect();
        let mut shifts = Vec::with_capacity(max_degree);
        for k in 0..max_degree {
            let table: Vec<Vec<usize>> = bases[k]
                .iter()
                .map(|expo| {
                    (0..n)
                        .map(|var| {
                            let mut e = expo.clone();
                            e[var] += 1;
                            monomial_rank(&e)
                        })
                        .collect()
                })
                .collect();
            shifts.push(table);
        }
        ComposePlan {
            n,
            max_degree,
            bases,
            shifts,
        }
    }

    /// Multiply a dense degree-k coefficient vector by a linear form.
    pub fn mul_linear<T: CScalar>(&self, k: usize, cur: &[T], linear: &[T], out: &mut Vec<T>) {
        let prec = linear
            .first()
            .map(|v| v.precision_bits())
            .unwrap_or(crate::scalar::F64_PRECISION_BITS);
        out.clear();
        out.resize(self.bases[k + 1].len(), T::zero(prec));
        for (idx, c) in cur.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (var, l) in linear.iter().enumerate() {
                if l.is_zero() {
                    continue;
                }
                let target = self.shifts[k][idx][var];
                out[target] = out[target].clone() + c.clone() * l.clone();
            }
        }
    }
}

/// Dense homogeneous form of fixed degree, generic over the scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct Form<T> {
    pub num_vars: usize,
    pub degree: usize,
    pub coeffs: Vec<T>,
}

/// Binary64 form; the type every interface speaks.
pub type HomogeneousForm = Form<C64>;

impl<T: CScalar> Form<T> {
    pub fn zero(n: usize, d: usize, prec: u32) -> Self {
        Form {
            num_vars: n,
            degree: d,
            coeffs: vec![T::zero(prec); basis_len(n, d)],
        }
    }

    pub fn from_coeffs(n: usize, d: usize, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != basis_len(n, d) {
            return Err(Error::DimensionMismatch {
                expected: basis_len(n, d),
                got: coeffs.len(),
            });
        }
        Ok(Form {
            num_vars: n,
            degree: d,
            coeffs,
        })
    }

    pub fn precision(&self) -> u32 {
        self.coeffs
            .first()
            .map(|c| c.precision_bits())
            .unwrap_or(crate::scalar::F64_PRECISION_BITS)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Evaluate at a point (|x| = num_vars).
    pub fn eval(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.num_vars);
        let prec = self.precision();
        let basis = monomial_basis(self.num_vars, self.degree);
        let mut acc = T::zero(prec);
        for (c, expo) in self.coeffs.iter().zip(&basis) {
            if c.is_zero() {
                continue;
            }
            let mut m = c.clone();
            for (xi, &e) in x.iter().zip(expo) {
                for _ in 0..e {
                    m = m * xi.clone();
                }
            }
            acc = acc + m;
        }
        acc
    }

    /// Scale every coefficient.
    pub fn scaled(&self, s: &T) -> Self {
        Form {
            num_vars: self.num_vars,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect(),
        }
    }
}

impl HomogeneousForm {
    pub fn to_c64_vec(&self) -> Vec<C64> {
        self.coeffs.clone()
    }

    /// Lift to another scalar precision (exact embedding from binary64).
    pub fn lift<T: CScalar>(&self, prec: u32) -> Form<T> {
        Form {
            num_vars: self.num_vars,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|&c| T::from_c64(c, prec)).collect(),
        }
    }
}

/// Coefficient vector of `g(x) = f(A x)` by exact expansion: each monomial of
/// `f` becomes a product of the linear forms given by the rows of `A`.
pub fn compose_linear<T: CScalar>(f: &Form<T>, a: &[T]) -> Result<Form<T>> {
    let n = f.num_vars;
    if a.len() != n * n {
        return Err(Error::ShapeMismatch(format!(
            "matrix must be {n}x{n} to act on a form in {n} variables"
        )));
    }
    let plan = ComposePlan::new(n, f.degree);
    Ok(compose_with_plan(f, a, &plan))
}

/// Expansion core; callers on hot paths hold their own [`ComposePlan`].
pub fn compose_with_plan<T: CScalar>(f: &Form<T>, a: &[T], plan: &ComposePlan) -> Form<T> {
    let n = f.num_vars;
    let d = f.degree;
    let prec = a
        .first()
        .map(|v| v.precision_bits())
        .unwrap_or(crate::scalar::F64_PRECISION_BITS);
    let mut out = vec![T::zero(prec); basis_len(n, d)];
    let basis = &plan.bases[d];
    let mut cur: Vec<T> = Vec::new();
    let mut next: Vec<T> = Vec::new();
    for (c, expo) in f.coeffs.iter().zip(basis) {
        if c.is_zero() {
            continue;
        }
        cur.clear();
        cur.push(T::one(prec));
        let mut deg = 0usize;
        for (row, &e) in expo.iter().enumerate() {
            let linear = &a[row * n..(row + 1) * n];
            for _ in 0..e {
                plan.mul_linear(deg, &cur, linear, &mut next);
                std::mem::swap(&mut cur, &mut next);
                deg += 1;
            }
        }
        for (o, v) in out.iter_mut().zip(&cur) {
            *o = o.clone() + c.clone() * v.clone();
        }
    }
    Form {
        num_vars: n,
        degree: d,
        coeffs: out,
    }
}

/// Bombieri-Weyl norm: sqrt( sum |c_a|^2 / multinomial(d; a) ).
pub fn weyl_norm(f: &HomogeneousForm) -> f64 {
    let basis = monomial_basis(f.num_vars, f.degree);
    f.coeffs
        .iter()
        .zip(&basis)
        .map(|(c, expo)| c.norm_sqr() / multinomial(expo))
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------------------
// Affine polynomials via homogenization
// ---------------------------------------------------------------------------

/// A polynomial of declared degree `d` in `n` affine variables, stored as its
/// degree-d homogenization in n+1 variables (variable 0 is the homogenizer).
#[derive(Clone, Debug)]
pub struct AffinePoly {
    pub n_affine: usize,
    pub degree: usize,
    pub form: HomogeneousForm,
}

impl AffinePoly {
    /// Embed a form that is already homogeneous in the affine variables.
    pub fn from_homogeneous(f: &HomogeneousForm) -> Self {
        let n = f.num_vars;
        let d = f.degree;
        let mut form = HomogeneousForm::zero(n + 1, d, 53);
        let basis = monomial_basis(n, d);
        for (c, expo) in f.coeffs.iter().zip(&basis) {
            let mut e = Vec::with_capacity(n + 1);
            e.push(0u32);
            e.extend_from_slice(expo);
            form.coeffs[monomial_rank(&e)] = *c;
        }
        AffinePoly {
            n_affine: n,
            degree: d,
            form,
        }
    }

    /// Build from sparse affine terms `(coeff, exponents over n variables)`;
    /// each term's total degree must be at most `d`.
    pub fn from_terms(n: usize, d: usize, terms: &[(C64, Vec<u32>)]) -> Result<Self> {
        let mut form = HomogeneousForm::zero(n + 1, d, 53);
        for (c, expo) in terms {
            if expo.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: expo.len(),
                });
            }
            let total: u32 = expo.iter().sum();
            if total as usize > d {
                return Err(Error::ShapeMismatch(format!(
                    "term degree {total} exceeds declared degree {d}"
                )));
            }
            let mut e = Vec::with_capacity(n + 1);
            e.push(d as u32 - total);
            e.extend_from_slice(expo);
            let r = monomial_rank(&e);
            form.coeffs[r] += *c;
        }
        Ok(AffinePoly {
            n_affine: n,
            degree: d,
            form,
        })
    }

    /// Patch row `l . x = rhs` as the degree-1 polynomial `l . x - rhs`.
    pub fn patch_row(coeffs: &[C64], rhs: C64) -> Self {
        let n = coeffs.len();
        let mut terms: Vec<(C64, Vec<u32>)> = Vec::with_capacity(n + 1);
        for (j, &c) in coeffs.iter().enumerate() {
            let mut e = vec![0u32; n];
            e[j] = 1;
            terms.push((c, e));
        }
        terms.push((-rhs, vec![0u32; n]));
        AffinePoly::from_terms(n, 1, &terms).expect("patch row construction cannot fail")
    }

    /// Weyl norm of the homogenization (what the certification bound wants).
    pub fn weyl_norm(&self) -> f64 {
        weyl_norm(&self.form)
    }
}

// ---------------------------------------------------------------------------
// Systems and the compiled evaluator
// ---------------------------------------------------------------------------

/// A list of homogeneous forms sharing an ambient variable count, with an
/// optional affine patch row that squares the system.
#[derive(Clone, Debug)]
pub struct PolySystem {
    pub num_vars: usize,
    pub forms: Vec<HomogeneousForm>,
    pub patch: Option<PatchRow>,
}

/// Inhomogeneous linear equation `coeffs . x = rhs`.
#[derive(Clone, Debug)]
pub struct PatchRow {
    pub coeffs: Vec<C64>,
    pub rhs: C64,
}

impl PolySystem {
    pub fn new(num_vars: usize, forms: Vec<HomogeneousForm>) -> Result<Self> {
        for f in &forms {
            if f.num_vars != num_vars {
                return Err(Error::DimensionMismatch {
                    expected: num_vars,
                    got: f.num_vars,
                });
            }
        }
        Ok(PolySystem {
            num_vars,
            forms,
            patch: None,
        })
    }

    pub fn with_patch(mut self, patch: PatchRow) -> Self {
        self.patch = Some(patch);
        self
    }

    pub fn n_equations(&self) -> usize {
        self.forms.len() + usize::from(self.patch.is_some())
    }

    pub fn is_square(&self) -> bool {
        self.n_equations() == self.num_vars
    }

    pub fn to_affine_polys(&self) -> Vec<AffinePoly> {
        let mut eqs: Vec<AffinePoly> = self.forms.iter().map(AffinePoly::from_homogeneous).collect();
        if let Some(p) = &self.patch {
            eqs.push(AffinePoly::patch_row(&p.coeffs, p.rhs));
        }
        eqs
    }
}

/// One compiled term: coefficient and the sparse support of its monomial in
/// the affine variables (the homogenizer contributes a factor 1).
#[derive(Clone, Debug)]
struct Term {
    coeff: C64,
    support: Vec<(u16, u8)>, // (affine var index, exponent)
}

#[derive(Clone, Debug)]
struct CompiledPoly {
    terms: Vec<Term>,
}

/// Evaluation program computing values and the Jacobian jointly.
#[derive(Clone, Debug)]
pub struct CompiledSystem {
    pub n: usize,
    degrees: Vec<usize>,
    eqs: Vec<CompiledPoly>,
    max_degree: usize,
    /// Homogenized source equations (kept for norms and expansion).
    pub sources: Vec<AffinePoly>,
}

/// Reusable buffers for [`CompiledSystem`] evaluation.
pub struct EvalScratch<T> {
    powers: Vec<T>, // (n) x (max_degree+1), affine variables only
    partial: Vec<T>,
}

impl<T: CScalar> EvalScratch<T> {
    pub fn new() -> Self {
        EvalScratch {
            powers: Vec::new(),
            partial: Vec::new(),
        }
    }
}

impl<T: CScalar> Default for EvalScratch<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl CompiledSystem {
    pub fn compile(eqs: Vec<AffinePoly>) -> Result<Self> {
        let n = eqs
            .first()
            .map(|e| e.n_affine)
            .ok_or_else(|| Error::DegenerateInput("empty system".into()))?;
        let mut compiled = Vec::with_capacity(eqs.len());
        let mut degrees = Vec::with_capacity(eqs.len());
        let mut max_degree = 0usize;
        for eq in &eqs {
            if eq.n_affine != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: eq.n_affine,
                });
            }
            let basis = monomial_basis(n + 1, eq.degree);
            let mut terms = Vec::new();
            for (c, expo) in eq.form.coeffs.iter().zip(&basis) {
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let support: Vec<(u16, u8)> = expo
                    .iter()
                    .enumerate()
                    .skip(1)
                    .filter(|(_, &e)| e > 0)
                    .map(|(j, &e)| ((j - 1) as u16, e as u8))
                    .collect();
                terms.push(Term { coeff: *c, support });
            }
            degrees.push(eq.degree);
            max_degree = max_degree.max(eq.degree);
            compiled.push(CompiledPoly { terms });
        }
        Ok(CompiledSystem {
            n,
            degrees,
            eqs: compiled,
            max_degree,
            sources: eqs,
        })
    }

    pub fn n_equations(&self) -> usize {
        self.eqs.len()
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Weyl norm of the homogenized system (root sum of squares over rows).
    pub fn weyl_norm(&self) -> f64 {
        self.sources
            .iter()
            .map(|e| e.weyl_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn fill_powers<T: CScalar>(&self, x: &[T], scratch: &mut EvalScratch<T>, prec: u32) {
        let cols = self.max_degree + 1;
        scratch.powers.clear();
        scratch.powers.resize(self.n * cols, T::zero(prec));
        for j in 0..self.n {
            scratch.powers[j * cols] = T::one(prec);
            for e in 1..cols {
                scratch.powers[j * cols + e] =
                    scratch.powers[j * cols + e - 1].clone() * x[j].clone();
            }
        }
    }

    /// Values only.
    pub fn eval_into<T: CScalar>(&self, x: &[T], scratch: &mut EvalScratch<T>, out: &mut Vec<T>) {
        self.eval_jac_impl(x, scratch, out, None);
    }

    /// Values and Jacobian (row-major, eqs x n) in one pass.
    pub fn eval_jac_into<T: CScalar>(
        &self,
        x: &[T],
        scratch: &mut EvalScratch<T>,
        vals: &mut Vec<T>,
        jac: &mut Vec<T>,
    ) {
        self.eval_jac_impl(x, scratch, vals, Some(jac));
    }

    fn eval_jac_impl<T: CScalar>(
        &self,
        x: &[T],
        scratch: &mut EvalScratch<T>,
        vals: &mut Vec<T>,
        mut jac: Option<&mut Vec<T>>,
    ) {
        assert_eq!(x.len(), self.n, "point dimension mismatch");
        let prec = x
            .first()
            .map(|v| v.precision_bits())
            .unwrap_or(crate::scalar::F64_PRECISION_BITS);
        self.fill_powers(x, scratch, prec);
        let cols = self.max_degree + 1;
        vals.clear();
        vals.resize(self.eqs.len(), T::zero(prec));
        if let Some(j) = jac.as_deref_mut() {
            j.clear();
            j.resize(self.eqs.len() * self.n, T::zero(prec));
        }
        for (row, eq) in self.eqs.iter().enumerate() {
            let mut acc = T::zero(prec);
            for term in &eq.terms {
                let c = T::from_c64(term.coeff, prec);
                let mut m = c.clone();
                for &(j, e) in &term.support {
                    m = m * scratch.powers[j as usize * cols + e as usize].clone();
                }
                acc = acc + m;
                if let Some(jmat) = jac.as_deref_mut() {
                    // partial wrt each support variable
                    for (si, &(j, e)) in term.support.iter().enumerate() {
                        let mut p = c.clone() * T::from_f64(e as f64, prec);
                        for (sk, &(jk, ek)) in term.support.iter().enumerate() {
                            let pow = if sk == si { ek - 1 } else { ek };
                            p = p * scratch.powers[jk as usize * cols + pow as usize].clone();
                        }
                        let idx = row * self.n + j as usize;
                        jmat[idx] = jmat[idx].clone() + p;
                    }
                }
            }
            vals[row] = acc;
        }
        let _ = scratch.partial.len();
    }
}

// ---------------------------------------------------------------------------
// Serialization: {"n", "d", "coeffs": [[re, im], ...]} in graded-lex order
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct FormRepr {
    n: usize,
    d: usize,
    coeffs: Vec<[f64; 2]>,
}

impl Serialize for HomogeneousForm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FormRepr {
            n: self.num_vars,
            d: self.degree,
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HomogeneousForm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FormRepr::deserialize(d)?;
        let coeffs: Vec<C64> = repr.coeffs.iter().map(|p| C64::new(p[0], p[1])).collect();
        HomogeneousForm::from_coeffs(repr.n, repr.d, coeffs)
            .map_err(|e| serde::de::Error::custom(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_c64(rng: &mut impl Rng) -> C64 {
        use rand_distr::StandardNormal;
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    fn random_form(n: usize, d: usize, rng: &mut impl Rng) -> HomogeneousForm {
        let coeffs = (0..basis_len(n, d)).map(|_| random_c64(rng)).collect();
        HomogeneousForm::from_coeffs(n, d, coeffs).unwrap()
    }

    #[test]
    fn basis_small_cases() {
        // n=2, d=2: x^2, xy, y^2
        assert_eq!(
            monomial_basis(2, 2),
            vec![vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        // n=4, d=3 has 20 monomials
        assert_eq!(monomial_basis(4, 3).len(), 20);
        // n=3, d=1: x, y, z
        assert_eq!(
            monomial_basis(3, 1),
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]
        );
    }

    #[test]
    fn rank_is_inverse_of_basis() {
        for (n, d) in [(2, 2), (3, 3), (4, 3), (3, 4), (5, 2)] {
            for (i, expo) in monomial_basis(n, d).iter().enumerate() {
                assert_eq!(monomial_rank(expo), i, "n={n} d={d} expo={expo:?}");
            }
        }
    }

    #[test]
    fn multinomial_values() {
        assert_eq!(multinomial(&[2, 0]), 1.0);
        assert_eq!(multinomial(&[1, 1]), 2.0);
        assert_eq!(multinomial(&[1, 1, 1]), 6.0);
        assert_eq!(multinomial(&[2, 1, 0]), 3.0);
    }

    #[test]
    fn compose_reproduces_binary_quadric_expansion() {
        // f = b0 x^2 + b1 xy + b2 y^2 composed with [[a11,a12],[a21,a22]]
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let b: Vec<C64> = (0..3).map(|_| random_c64(&mut rng)).collect();
            let a: Vec<C64> = (0..4).map(|_| random_c64(&mut rng)).collect();
            let f = HomogeneousForm::from_coeffs(2, 2, b.clone()).unwrap();
            let g = compose_linear(&f, &a).unwrap();
            let (a11, a12, a21, a22) = (a[0], a[1], a[2], a[3]);
            let expect = [
                b[0] * a11 * a11 + b[1] * a11 * a21 + b[2] * a21 * a21,
                c(2.0, 0.0) * b[0] * a11 * a12
                    + b[1] * (a11 * a22 + a12 * a21)
                    + c(2.0, 0.0) * b[2] * a21 * a22,
                b[0] * a12 * a12 + b[1] * a12 * a22 + b[2] * a22 * a22,
            ];
            for (g, e) in g.coeffs.iter().zip(expect.iter()) {
                assert!((g - e).norm() <= 1e-12 * e.norm().max(1.0));
            }
        }
    }

    #[test]
    fn compose_identity_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_form(4, 3, &mut rng);
        let mut eye = vec![c(0.0, 0.0); 16];
        for i in 0..4 {
            eye[i * 4 + i] = c(1.0, 0.0);
        }
        let g = compose_linear(&f, &eye).unwrap();
        for (a, b) in f.coeffs.iter().zip(&g.coeffs) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn compose_matches_pointwise_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_form(3, 3, &mut rng);
        let a: Vec<C64> = (0..9).map(|_| random_c64(&mut rng)).collect();
        let g = compose_linear(&f, &a).unwrap();
        for _ in 0..100 {
            let x: Vec<C64> = (0..3).map(|_| random_c64(&mut rng)).collect();
            let ax: Vec<C64> = (0..3)
                .map(|i| (0..3).map(|j| a[i * 3 + j] * x[j]).sum())
                .collect();
            let lhs = g.eval(&x);
            let rhs = f.eval(&ax);
            assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn compose_action_property() {
        // (B then A) composed equals compose with A*B:
        // compose(compose(f, A), B)(x) = f(A (B x)) = compose(f, A*B)(x)
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let f = random_form(3, 2, &mut rng);
        let a: Vec<C64> = (0..9).map(|_| random_c64(&mut rng)).collect();
        let b: Vec<C64> = (0..9).map(|_| random_c64(&mut rng)).collect();
        let mut ab = vec![c(0.0, 0.0); 9];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    ab[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
                }
            }
        }
        let lhs = compose_linear(&compose_linear(&f, &a).unwrap(), &b).unwrap();
        let rhs = compose_linear(&f, &ab).unwrap();
        for (x, y) in lhs.coeffs.iter().zip(&rhs.coeffs) {
            assert!((x - y).norm() <= 1e-12 * y.norm().max(1.0));
        }
    }

    #[test]
    fn compose_scaling_homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let f = random_form(4, 3, &mut rng);
        let a: Vec<C64> = (0..16).map(|_| random_c64(&mut rng)).collect();
        let lam = c(0.3, -1.2);
        let la: Vec<C64> = a.iter().map(|&z| lam * z).collect();
        let lhs = compose_linear(&f, &la).unwrap();
        let rhs = compose_linear(&f, &a).unwrap();
        let lam_d = lam * lam * lam;
        for (x, y) in lhs.coeffs.iter().zip(&rhs.coeffs) {
            assert!((x - lam_d * y).norm() <= 1e-12 * (lam_d * y).norm().max(1.0));
        }
    }

    #[test]
    fn weyl_norm_basics() {
        // single monomial x^2 in 2 vars: norm 1
        let f = HomogeneousForm::from_coeffs(2, 2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        assert!((weyl_norm(&f) - 1.0).abs() < 1e-15);
        // xy: multinomial 2 -> norm 1/sqrt(2)
        let g = HomogeneousForm::from_coeffs(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        assert!((weyl_norm(&g) - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn weyl_norm_unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let f = random_form(3, 3, &mut rng);
            // unitary via QR of a random complex matrix (oracle route)
            let m = nalgebra::DMatrix::from_fn(3, 3, |_, _| random_c64(&mut rng));
            let qr = m.qr();
            let q = qr.q();
            let mut u = Vec::with_capacity(9);
            for i in 0..3 {
                for j in 0..3 {
                    u.push(q[(i, j)]);
                }
            }
            let g = compose_linear(&f, &u).unwrap();
            let (nf, ng) = (weyl_norm(&f), weyl_norm(&g));
            assert!(
                (nf - ng).abs() <= 1e-10 * nf.max(1.0),
                "unitary invariance violated: {nf} vs {ng}"
            );
        }
    }

    #[test]
    fn compiled_matches_naive_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f1 = random_form(3, 3, &mut rng);
        let f2 = random_form(3, 2, &mut rng);
        let sys = PolySystem::new(3, vec![f1.clone(), f2.clone()]).unwrap();
        let compiled = CompiledSystem::compile(sys.to_affine_polys()).unwrap();
        let mut scratch = EvalScratch::new();
        let mut vals = Vec::new();
        for _ in 0..100 {
            let mut x: Vec<C64> = (0..3).map(|_| random_c64(&mut rng)).collect();
            let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            x.iter_mut().for_each(|z| *z /= norm);
            compiled.eval_into(&x, &mut scratch, &mut vals);
            let naive = [f1.eval(&x), f2.eval(&x)];
            for (v, e) in vals.iter().zip(naive.iter()) {
                assert!((v - e).norm() <= 1e-12 * e.norm().max(1e-6));
            }
        }
    }

    #[test]
    fn compiled_evaluates_inhomogeneous_terms() {
        // x^2 - 1 at 1 and at 2
        let p = AffinePoly::from_terms(
            1,
            2,
            &[(c(1.0, 0.0), vec![2]), (c(-1.0, 0.0), vec![0])],
        )
        .unwrap();
        let sys = CompiledSystem::compile(vec![p]).unwrap();
        let mut scratch = EvalScratch::new();
        let mut vals = Vec::new();
        sys.eval_into(&[c(1.0, 0.0)], &mut scratch, &mut vals);
        assert!(vals[0].norm() < 1e-15);
        sys.eval_into(&[c(2.0, 0.0)], &mut scratch, &mut vals);
        assert!((vals[0] - c(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn jacobian_simple_case_and_euler_relation() {
        // F = {x^2 - y^2} at (2, 1): gradient (4, -2)
        let f = HomogeneousForm::from_coeffs(
            2,
            2,
            vec![c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        )
        .unwrap();
        let sys = CompiledSystem::compile(vec![AffinePoly::from_homogeneous(&f)]).unwrap();
        let mut scratch = EvalScratch::new();
        let (mut vals, mut jac) = (Vec::new(), Vec::new());
        sys.eval_jac_into(&[c(2.0, 0.0), c(1.0, 0.0)], &mut scratch, &mut vals, &mut jac);
        assert!((vals[0] - c(3.0, 0.0)).norm() < 1e-14);
        assert!((jac[0] - c(4.0, 0.0)).norm() < 1e-14);
        assert!((jac[1] - c(-2.0, 0.0)).norm() < 1e-14);

        // Euler: J_F(x) . x = d * F(x) for homogeneous F
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let g = random_form(4, 3, &mut rng);
            let s = CompiledSystem::compile(vec![AffinePoly::from_homogeneous(&g)]).unwrap();
            let x: Vec<C64> = (0..4).map(|_| random_c64(&mut rng)).collect();
            s.eval_jac_into(&x, &mut scratch, &mut vals, &mut jac);
            let dot: C64 = (0..4).map(|j| jac[j] * x[j]).sum();
            let rhs = vals[0] * c(3.0, 0.0);
            assert!((dot - rhs).norm() <= 1e-10 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let f1 = random_form(3, 3, &mut rng);
        let f2 = random_form(3, 2, &mut rng);
        let sys =
            CompiledSystem::compile(PolySystem::new(3, vec![f1, f2]).unwrap().to_affine_polys())
                .unwrap();
        let mut scratch = EvalScratch::new();
        let (mut vals, mut jac) = (Vec::new(), Vec::new());
        let (mut vp, mut vm) = (Vec::new(), Vec::new());
        let h = 1e-5;
        for _ in 0..20 {
            let x: Vec<C64> = (0..3).map(|_| random_c64(&mut rng)).collect();
            sys.eval_jac_into(&x, &mut scratch, &mut vals, &mut jac);
            for j in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += c(h, 0.0);
                xm[j] -= c(h, 0.0);
                sys.eval_into(&xp, &mut scratch, &mut vp);
                sys.eval_into(&xm, &mut scratch, &mut vm);
                for r in 0..2 {
                    let fd = (vp[r] - vm[r]) / c(2.0 * h, 0.0);
                    let an = jac[r * 3 + j];
                    assert!(
                        (fd - an).norm() <= 1e-6 * an.norm().max(1.0),
                        "fd {fd} vs {an}"
                    );
                }
            }
        }
    }

    #[test]
    fn form_serialization_roundtrip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let f = random_form(4, 3, &mut rng);
        let json = serde_json::to_string(&f).unwrap();
        let g: HomogeneousForm = serde_json::from_str(&json).unwrap();
        assert_eq!(f.num_vars, g.num_vars);
        assert_eq!(f.degree, g.degree);
        for (a, b) in f.coeffs.iter().zip(&g.coeffs) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn compose_rejects_bad_shape() {
        let f = HomogeneousForm::zero(3, 2, 53);
        assert!(compose_linear(&f, &vec![c(1.0, 0.0); 4]).is_err());
    }
}
