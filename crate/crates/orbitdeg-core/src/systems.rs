//! Realized systems with fast structured evaluators.
//!
//! The orbit problems admit much cheaper evaluation than their dense
//! expansions: a point equation `f(phi p)` needs one matrix-vector product,
//! one form evaluation with gradient, and a rank-one Jacobian update; a slice
//! row needs the translate's coefficient vector, built as products of linear
//! forms. Dense expansions are kept for norms and oracle cross-checks.

use crate::error::{Error, Result};
use crate::linalg;
use crate::orbit::{expand_point_equation, expand_theta_symbolic};
use crate::polysys::{
    basis_len, AffinePoly, CompiledSystem, ComposePlan, EvalScratch, HomogeneousForm,
};
use crate::scalar::{CScalar, C64};

/// Reusable evaluation buffers; one per worker thread.
pub struct SysScratch<T> {
    pub es: EvalScratch<T>,
    v: Vec<T>,
    vals1: Vec<T>,
    grad1: Vec<T>,
    cur: Vec<T>,
    next: Vec<T>,
    loo: Vec<T>,
    theta_c: Vec<T>,
    theta_j: Vec<T>,
    pub lu: Vec<T>,
    pub piv: Vec<usize>,
    pub rhs: Vec<T>,
    pub sol: Vec<T>,
    pub vals: Vec<T>,
    pub jac: Vec<T>,
}

impl<T: CScalar> SysScratch<T> {
    pub fn new() -> Self {
        SysScratch {
            es: EvalScratch::new(),
            v: Vec::new(),
            vals1: Vec::new(),
            grad1: Vec::new(),
            cur: Vec::new(),
            next: Vec::new(),
            loo: Vec::new(),
            theta_c: Vec::new(),
            theta_j: Vec::new(),
            lu: Vec::new(),
            piv: Vec::new(),
            rhs: Vec::new(),
            sol: Vec::new(),
            vals: Vec::new(),
            jac: Vec::new(),
        }
    }
}

impl<T: CScalar> Default for SysScratch<T> {
    fn default() -> Self {
        Self::new()
    }
}

// ---------------------------------------------------------------------------
// Point-condition system
// ---------------------------------------------------------------------------

/// Rescale a form to unit coefficient 2-norm.
fn unit_coeff_form(form: &HomogeneousForm) -> Result<HomogeneousForm> {
    let norm = form
        .coeffs
        .iter()
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateInput("zero form".into()));
    }
    Ok(form.scaled(&C64::new(1.0 / norm, 0.0)))
}

/// `m = n^2 - 1` homogeneous equations `f(phi p_i)` in the `n^2` entries of
/// `phi`, evaluated by the chain rule.
#[derive(Clone)]
pub struct OrbitPointSystem {
    pub n: usize,
    pub degree: usize,
    pub form: HomogeneousForm,
    form_eval: CompiledSystem,
    /// Flat point coordinates, (n^2 - 1) groups of n.
    pub points: Vec<C64>,
}

impl OrbitPointSystem {
    /// The form is rescaled to unit coefficient norm (a projective no-op)
    /// so equation values stay O(1) and corrector tolerances are meaningful.
    pub fn new(form: &HomogeneousForm, points_flat: Vec<C64>) -> Result<Self> {
        let n = form.num_vars;
        let m = n * n - 1;
        if points_flat.len() != m * n {
            return Err(Error::DimensionMismatch {
                expected: m * n,
                got: points_flat.len(),
            });
        }
        let form = unit_coeff_form(form)?;
        let form_eval = CompiledSystem::compile(vec![AffinePoly::from_homogeneous(&form)])?;
        Ok(OrbitPointSystem {
            n,
            degree: form.degree,
            form,
            form_eval,
            points: points_flat,
        })
    }

    pub fn n_unknowns(&self) -> usize {
        self.n * self.n
    }

    pub fn n_equations(&self) -> usize {
        self.n * self.n - 1
    }

    /// Values (and optionally the Jacobian) at `x`, with the stored points.
    pub fn eval_jac<T: CScalar>(
        &self,
        x: &[T],
        scratch: &mut SysScratch<T>,
        out: &mut Vec<T>,
        jac: Option<&mut Vec<T>>,
    ) {
        let pts: Vec<T> = self
            .points
            .iter()
            .map(|&p| T::from_c64(p, x.first().map(|v| v.precision_bits()).unwrap_or(53)))
            .collect();
        self.eval_jac_at_points(x, &pts, scratch, out, jac);
    }

    /// Same, with caller-supplied point coordinates (parameter homotopies).
    pub fn eval_jac_at_points<T: CScalar>(
        &self,
        x: &[T],
        pts: &[T],
        scratch: &mut SysScratch<T>,
        out: &mut Vec<T>,
        mut jac: Option<&mut Vec<T>>,
    ) {
        let n = self.n;
        let nn = n * n;
        let m = nn - 1;
        debug_assert_eq!(x.len(), nn);
        debug_assert_eq!(pts.len(), m * n);
        let prec = x[0].precision_bits();
        out.clear();
        out.resize(m, T::zero(prec));
        if let Some(j) = jac.as_deref_mut() {
            j.clear();
            j.resize(m * nn, T::zero(prec));
        }
        for i in 0..m {
            let p = &pts[i * n..(i + 1) * n];
            // v = phi p
            scratch.v.clear();
            for r in 0..n {
                let mut acc = T::zero(prec);
                for c in 0..n {
                    acc = acc + x[r * n + c].clone() * p[c].clone();
                }
                scratch.v.push(acc);
            }
            if jac.is_some() {
                self.form_eval.eval_jac_into(
                    &scratch.v,
                    &mut scratch.es,
                    &mut scratch.vals1,
                    &mut scratch.grad1,
                );
            } else {
                self.form_eval
                    .eval_into(&scratch.v, &mut scratch.es, &mut scratch.vals1);
            }
            out[i] = scratch.vals1[0].clone();
            if let Some(j) = jac.as_deref_mut() {
                // d/d phi_{rc} f(phi p) = grad_r(v) * p_c
                for r in 0..n {
                    for c in 0..n {
                        j[i * nn + r * n + c] =
                            scratch.grad1[r].clone() * p[c].clone();
                    }
                }
            }
        }
    }

    /// Values, Jacobian and parameter tangent in one pass: the tangent row is
    /// `grad f(phi p_i) . (phi dp_i)` for point velocity `dp_i`.
    pub fn eval_full_segment(
        &self,
        x: &[C64],
        pts: &[C64],
        dpts: &[C64],
        scratch: &mut SysScratch<C64>,
        out: &mut Vec<C64>,
        jac: &mut Vec<C64>,
        jt: &mut Vec<C64>,
    ) {
        let n = self.n;
        let nn = n * n;
        let m = nn - 1;
        out.clear();
        out.resize(m, C64::new(0.0, 0.0));
        jac.clear();
        jac.resize(m * nn, C64::new(0.0, 0.0));
        jt.clear();
        jt.resize(m, C64::new(0.0, 0.0));
        for i in 0..m {
            let p = &pts[i * n..(i + 1) * n];
            let dp = &dpts[i * n..(i + 1) * n];
            scratch.v.clear();
            for r in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..n {
                    acc += x[r * n + c] * p[c];
                }
                scratch.v.push(acc);
            }
            self.form_eval.eval_jac_into(
                &scratch.v,
                &mut scratch.es,
                &mut scratch.vals1,
                &mut scratch.grad1,
            );
            out[i] = scratch.vals1[0];
            let mut tang = C64::new(0.0, 0.0);
            for r in 0..n {
                let g = scratch.grad1[r];
                for c in 0..n {
                    jac[i * nn + r * n + c] = g * p[c];
                }
                let mut w = C64::new(0.0, 0.0);
                for c in 0..n {
                    w += x[r * n + c] * dp[c];
                }
                tang += g * w;
            }
            jt[i] = tang;
        }
    }

    /// Tangent contribution of moving points: row i is `grad f(phi p_i) . (phi dp_i)`.
    pub fn param_tangent(
        &self,
        x: &[C64],
        pts: &[C64],
        dpts: &[C64],
        scratch: &mut SysScratch<C64>,
        out: &mut Vec<C64>,
    ) {
        let n = self.n;
        let m = n * n - 1;
        out.clear();
        out.resize(m, C64::new(0.0, 0.0));
        for i in 0..m {
            let p = &pts[i * n..(i + 1) * n];
            let dp = &dpts[i * n..(i + 1) * n];
            scratch.v.clear();
            for r in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..n {
                    acc += x[r * n + c] * p[c];
                }
                scratch.v.push(acc);
            }
            self.form_eval.eval_jac_into(
                &scratch.v,
                &mut scratch.es,
                &mut scratch.vals1,
                &mut scratch.grad1,
            );
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..n {
                let mut w = C64::new(0.0, 0.0);
                for c in 0..n {
                    w += x[r * n + c] * dp[c];
                }
                acc += scratch.grad1[r] * w;
            }
            out[i] = acc;
        }
    }

    /// Dense expansion of every equation (for norms and oracles).
    pub fn expand_dense(&self) -> Vec<AffinePoly> {
        let n = self.n;
        (0..self.n_equations())
            .map(|i| {
                let p = self.points[i * n..(i + 1) * n].to_vec();
                AffinePoly::from_homogeneous(&expand_point_equation(&self.form, &p))
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Slice system
// ---------------------------------------------------------------------------

/// `m = n^2 - 1` rows of a linear slice applied to the translate's
/// coefficient vector; optionally one row moves along a pencil direction.
#[derive(Clone)]
pub struct OrbitSliceSystem {
    pub n: usize,
    pub degree: usize,
    pub form: HomogeneousForm,
    /// Row-major (n^2 - 1) x width slice matrix.
    pub ltilde: Vec<C64>,
    pub width: usize,
    /// Pencil: (row index, direction, t); the effective row is
    /// `ltilde[row] + t * direction`.
    pub moving: Option<(usize, Vec<C64>, C64)>,
    plan: std::sync::Arc<ComposePlan>,
}

impl OrbitSliceSystem {
    /// The form is rescaled to unit coefficient norm, as in
    /// [`OrbitPointSystem::new`].
    pub fn new(form: &HomogeneousForm, ltilde: Vec<C64>) -> Result<Self> {
        let n = form.num_vars;
        let width = basis_len(n, form.degree);
        let m = n * n - 1;
        if ltilde.len() != m * width {
            return Err(Error::ShapeMismatch(format!(
                "slice matrix must be {m}x{width}"
            )));
        }
        let form = unit_coeff_form(form)?;
        Ok(OrbitSliceSystem {
            n,
            degree: form.degree,
            form: form.clone(),
            ltilde,
            width,
            moving: None,
            plan: std::sync::Arc::new(ComposePlan::new(n, form.degree)),
        })
    }

    pub fn with_pencil(mut self, row: usize, direction: Vec<C64>, t: C64) -> Self {
        self.moving = Some((row, direction, t));
        self
    }

    /// Pin the pencil at a fixed `t`, folding the moved row into the matrix.
    pub fn at_pencil_value(&self, t: C64) -> Self {
        let mut out = self.clone();
        if let Some((row, dir, _)) = &self.moving {
            for (k, d) in dir.iter().enumerate() {
                out.ltilde[row * self.width + k] += t * d;
            }
            out.moving = None;
        }
        out
    }

    pub fn n_unknowns(&self) -> usize {
        self.n * self.n
    }

    pub fn n_equations(&self) -> usize {
        self.n * self.n - 1
    }

    /// Coefficient vector of the translate at `phi` (length `width`).
    pub fn theta_coeffs<T: CScalar>(&self, phi: &[T], scratch: &mut SysScratch<T>, out: &mut Vec<T>) {
        let n = self.n;
        let prec = phi[0].precision_bits();
        out.clear();
        out.resize(self.width, T::zero(prec));
        let basis = &self.plan.bases[self.degree];
        for (idx, fc) in self.form.coeffs.iter().enumerate() {
            if fc.norm_sqr() == 0.0 {
                continue;
            }
            let expo = &basis[idx];
            scratch.cur.clear();
            scratch.cur.push(T::one(prec));
            let mut deg = 0usize;
            for (row, &e) in expo.iter().enumerate() {
                for _ in 0..e {
                    self.plan.mul_linear(
                        deg,
                        &scratch.cur,
                        &phi[row * n..(row + 1) * n],
                        &mut scratch.next,
                    );
                    std::mem::swap(&mut scratch.cur, &mut scratch.next);
                    deg += 1;
                }
            }
            let c = T::from_c64(*fc, prec);
            for (o, v) in out.iter_mut().zip(&scratch.cur) {
                *o = o.clone() + c.clone() * v.clone();
            }
        }
    }

    /// Derivative of the translate's coefficients in the matrix entries
    /// (row-major `width x n^2`), by the product rule.
    pub fn theta_jac<T: CScalar>(&self, phi: &[T], scratch: &mut SysScratch<T>, out: &mut Vec<T>) {
        let n = self.n;
        let nn = n * n;
        let prec = phi[0].precision_bits();
        out.clear();
        out.resize(self.width * nn, T::zero(prec));
        let basis = &self.plan.bases[self.degree];
        for (idx, fc) in self.form.coeffs.iter().enumerate() {
            if fc.norm_sqr() == 0.0 {
                continue;
            }
            let expo = &basis[idx];
            for j in 0..n {
                if expo[j] == 0 {
                    continue;
                }
                // leave-one-out product: degree d-1
                scratch.loo.clear();
                scratch.loo.push(T::one(prec));
                let mut deg = 0usize;
                for (row, &e) in expo.iter().enumerate() {
                    let reps = if row == j { e - 1 } else { e };
                    for _ in 0..reps {
                        self.plan.mul_linear(
                            deg,
                            &scratch.loo,
                            &phi[row * n..(row + 1) * n],
                            &mut scratch.next,
                        );
                        std::mem::swap(&mut scratch.loo, &mut scratch.next);
                        deg += 1;
                    }
                }
                let c = T::from_c64(*fc, prec);
                let mult = T::from_f64(expo[j] as f64, prec);
                // d/d phi_{jk}: shift the leave-one-out product by x_k
                for (mi, v) in scratch.loo.iter().enumerate() {
                    if v.is_zero() {
                        continue;
                    }
                    let w = c.clone() * mult.clone() * v.clone();
                    for k in 0..n {
                        let target = self.plan.shifts[self.degree - 1][mi][k];
                        let col = j * n + k;
                        out[target * nn + col] = out[target * nn + col].clone() + w.clone();
                    }
                }
            }
        }
    }

    fn effective_row_into<T: CScalar>(
        &self,
        r: usize,
        prec: u32,
        t_override: Option<C64>,
        row: &mut Vec<T>,
    ) {
        row.clear();
        row.extend(
            self.ltilde[r * self.width..(r + 1) * self.width]
                .iter()
                .map(|&z| T::from_c64(z, prec)),
        );
        if let Some((mrow, dir, t_default)) = &self.moving {
            if *mrow == r {
                let t = t_override.unwrap_or(*t_default);
                let tt = T::from_c64(t, prec);
                for (rw, d) in row.iter_mut().zip(dir) {
                    *rw = rw.clone() + tt.clone() * T::from_c64(*d, prec);
                }
            }
        }
    }

    pub fn eval_jac<T: CScalar>(
        &self,
        x: &[T],
        scratch: &mut SysScratch<T>,
        out: &mut Vec<T>,
        jac: Option<&mut Vec<T>>,
    ) {
        self.eval_jac_at_pencil(x, None, scratch, out, jac)
    }

    /// Values/Jacobian with the pencil parameter overridden (used by the
    /// trace-test homotopy, which sweeps `t` continuously).
    pub fn eval_jac_at_pencil<T: CScalar>(
        &self,
        x: &[T],
        t_override: Option<C64>,
        scratch: &mut SysScratch<T>,
        out: &mut Vec<T>,
        mut jac: Option<&mut Vec<T>>,
    ) {
        let nn = self.n * self.n;
        let m = nn - 1;
        let prec = x[0].precision_bits();
        let mut theta = std::mem::take(&mut scratch.theta_c);
        self.theta_coeffs(x, scratch, &mut theta);
        let mut dtheta = std::mem::take(&mut scratch.theta_j);
        if jac.is_some() {
            self.theta_jac(x, scratch, &mut dtheta);
        }
        out.clear();
        out.resize(m, T::zero(prec));
        if let Some(j) = jac.as_deref_mut() {
            j.clear();
            j.resize(m * nn, T::zero(prec));
        }
        let mut row: Vec<T> = Vec::with_capacity(self.width);
        for r in 0..m {
            self.effective_row_into(r, prec, t_override, &mut row);
            let mut acc = T::zero(prec);
            for (l, c) in row.iter().zip(&theta) {
                if l.is_zero() {
                    continue;
                }
                acc = acc + l.clone() * c.clone();
            }
            out[r] = acc;
            if let Some(j) = jac.as_deref_mut() {
                for col in 0..nn {
                    let mut acc = T::zero(prec);
                    for (a, l) in row.iter().enumerate() {
                        if l.is_zero() {
                            continue;
                        }
                        acc = acc + l.clone() * dtheta[a * nn + col].clone();
                    }
                    j[r * nn + col] = acc;
                }
            }
        }
        scratch.theta_c = theta;
        scratch.theta_j = dtheta;
    }

    /// Tangent of the pencil motion: only the moving row contributes,
    /// with value `direction . theta(phi)`.
    pub fn pencil_tangent(&self, x: &[C64], scratch: &mut SysScratch<C64>, out: &mut Vec<C64>) {
        let m = self.n * self.n - 1;
        out.clear();
        out.resize(m, C64::new(0.0, 0.0));
        if let Some((row, dir, _)) = &self.moving {
            let mut theta = Vec::new();
            self.theta_coeffs(x, scratch, &mut theta);
            out[*row] = dir.iter().zip(&theta).map(|(d, c)| d * c).sum();
        }
    }

    pub fn expand_dense(&self) -> Vec<AffinePoly> {
        let nn = self.n * self.n;
        let theta_forms = expand_theta_symbolic(&self.form);
        let mut row: Vec<C64> = Vec::new();
        (0..self.n_equations())
            .map(|r| {
                self.effective_row_into::<C64>(r, 53, None, &mut row);
                let mut acc = vec![C64::new(0.0, 0.0); basis_len(nn, self.degree)];
                for (l, tf) in row.iter().zip(&theta_forms) {
                    if l.norm_sqr() == 0.0 {
                        continue;
                    }
                    for (a, c) in acc.iter_mut().zip(&tf.coeffs) {
                        *a += l * c;
                    }
                }
                AffinePoly::from_homogeneous(
                    &HomogeneousForm::from_coeffs(nn, self.degree, acc)
                        .expect("expansion has canonical length"),
                )
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// System enums
// ---------------------------------------------------------------------------

/// A homogeneous system with one fewer equation than unknowns.
#[derive(Clone)]
pub enum HomogSystem {
    OrbitPoint(OrbitPointSystem),
    OrbitSlice(OrbitSliceSystem),
}

impl HomogSystem {
    pub fn n_unknowns(&self) -> usize {
        match self {
            HomogSystem::OrbitPoint(s) => s.n_unknowns(),
            HomogSystem::OrbitSlice(s) => s.n_unknowns(),
        }
    }

    pub fn n_equations(&self) -> usize {
        match self {
            HomogSystem::OrbitPoint(s) => s.n_equations(),
            HomogSystem::OrbitSlice(s) => s.n_equations(),
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            HomogSystem::OrbitPoint(s) => s.degree,
            HomogSystem::OrbitSlice(s) => s.degree,
        }
    }

    pub fn eval_jac<T: CScalar>(
        &self,
        x: &[T],
        scratch: &mut SysScratch<T>,
        out: &mut Vec<T>,
        jac: Option<&mut Vec<T>>,
    ) {
        match self {
            HomogSystem::OrbitPoint(s) => s.eval_jac(x, scratch, out, jac),
            HomogSystem::OrbitSlice(s) => s.eval_jac(x, scratch, out, jac),
        }
    }

    pub fn expand_dense(&self) -> Vec<AffinePoly> {
        match self {
            HomogSystem::OrbitPoint(s) => s.expand_dense(),
            HomogSystem::OrbitSlice(s) => s.expand_dense(),
        }
    }
}

/// Square system: either an arbitrary compiled affine system or a homogeneous
/// system squared by a fixed patch row `l . x = 1`.
#[derive(Clone)]
pub enum SquareSystem {
    Dense(CompiledSystem),
    Patched {
        homog: HomogSystem,
        patch: Vec<C64>,
    },
}

impl SquareSystem {
    pub fn patched(homog: HomogSystem, patch: Vec<C64>) -> Result<Self> {
        if patch.len() != homog.n_unknowns() {
            return Err(Error::DimensionMismatch {
                expected: homog.n_unknowns(),
                got: patch.len(),
            });
        }
        Ok(SquareSystem::Patched { homog, patch })
    }

    pub fn n(&self) -> usize {
        match self {
            SquareSystem::Dense(c) => c.n,
            SquareSystem::Patched { homog, .. } => homog.n_unknowns(),
        }
    }

    pub fn degrees(&self) -> Vec<usize> {
        match self {
            SquareSystem::Dense(c) => c.degrees().to_vec(),
            SquareSystem::Patched { homog, .. } => {
                let mut d = vec![homog.degree(); homog.n_equations()];
                d.push(1);
                d
            }
        }
    }

    /// Values (and optionally the row-major Jacobian).
    pub fn eval_jac<T: CScalar>(
        &self,
        x: &[T],
        scratch: &mut SysScratch<T>,
        out: &mut Vec<T>,
        mut jac: Option<&mut Vec<T>>,
    ) {
        let n = self.n();
        let prec = x[0].precision_bits();
        match self {
            SquareSystem::Dense(c) => match jac {
                Some(j) => c.eval_jac_into(x, &mut scratch.es, out, j),
                None => c.eval_into(x, &mut scratch.es, out),
            },
            SquareSystem::Patched { homog, patch } => {
                homog.eval_jac(x, scratch, out, jac.as_deref_mut());
                // patch row: l . x - 1
                let mut acc = T::zero(prec);
                for (l, xi) in patch.iter().zip(x) {
                    acc = acc + T::from_c64(*l, prec) * xi.clone();
                }
                out.push(acc - T::one(prec));
                if let Some(j) = jac {
                    for l in patch.iter() {
                        j.push(T::from_c64(*l, prec));
                    }
                    debug_assert_eq!(j.len(), n * n);
                }
            }
        }
    }

    pub fn residual(&self, x: &[C64], scratch: &mut SysScratch<C64>) -> f64 {
        let mut vals = Vec::new();
        self.eval_jac(x, scratch, &mut vals, None);
        crate::scalar::vec_norm(&vals)
    }

    /// Characteristic magnitude of equation values at `x`: solutions with
    /// large chart representatives have residual floors scaled by this.
    pub fn value_scale(&self, x: &[C64]) -> f64 {
        let dmax = self.degrees().into_iter().max().unwrap_or(1);
        crate::scalar::vec_max_abs(x).max(1.0).powi(dmax as i32)
    }

    /// Residual normalized by the value scale at `x`.
    pub fn scaled_residual(&self, x: &[C64], scratch: &mut SysScratch<C64>) -> f64 {
        self.residual(x, scratch) / self.value_scale(x)
    }

    /// Dense homogenized equations (patch row included), for norms/oracles.
    pub fn expand_dense(&self) -> Vec<AffinePoly> {
        match self {
            SquareSystem::Dense(c) => c.sources.clone(),
            SquareSystem::Patched { homog, patch } => {
                let mut eqs = homog.expand_dense();
                eqs.push(AffinePoly::patch_row(patch, C64::new(1.0, 0.0)));
                eqs
            }
        }
    }

    /// Weyl norm of the homogenized square system.
    pub fn weyl_norm(&self) -> f64 {
        self.expand_dense()
            .iter()
            .map(|e| e.weyl_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// One full Newton step `x <- x - J^-1 F(x)`; returns the step norm.
pub fn newton_step<T: CScalar>(
    sys: &SquareSystem,
    x: &mut [T],
    scratch: &mut SysScratch<T>,
) -> Result<f64> {
    let n = sys.n();
    let mut vals = std::mem::take(&mut scratch.vals);
    let mut jac = std::mem::take(&mut scratch.jac);
    sys.eval_jac(x, scratch, &mut vals, Some(&mut jac));
    let res = linalg::lu_factor(&mut jac, n, &mut scratch.piv);
    let out = match res {
        Ok(_cond) => {
            linalg::lu_solve(&jac, n, &scratch.piv, &vals, &mut scratch.sol);
            let norm = crate::scalar::vec_norm(&scratch.sol);
            for (xi, si) in x.iter_mut().zip(&scratch.sol) {
                *xi = xi.clone() - si.clone();
            }
            Ok(norm)
        }
        Err(e) => Err(e),
    };
    scratch.vals = vals;
    scratch.jac = jac;
    out
}

/// Newton until the residual drops below `tol` (or `iters` runs out);
/// returns the final residual.
pub fn newton_polish(
    sys: &SquareSystem,
    x: &mut [C64],
    iters: usize,
    tol: f64,
) -> Result<f64> {
    let mut scratch = SysScratch::new();
    let mut res = sys.residual(x, &mut scratch);
    for _ in 0..iters {
        if res <= tol {
            break;
        }
        newton_step(sys, x, &mut scratch)?;
        res = sys.residual(x, &mut scratch);
    }
    Ok(res)
}
