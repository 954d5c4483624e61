//! Correlated projection superoperators `P = I_S ⊗ Λ` with
//! `Λ(X) = Σ_i tr{A_i X} B_i`, so that `Pρ = Σ_i tr_E{A_i ρ} ⊗ B_i`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::operator::{
    eigenvalues_hermitian, ensure_dim, ensure_square, hermitian_basis, hermiticity_defect, identity,
    kron, max_diff, max_norm, partial_trace_env_weighted, unit, unvectorize, vectorize,
    ComplexMatrix, DimPair, TOL_HERM, TOL_PSD, ZERO,
};

/// Tolerance for the biorthogonality and trace conditions.
pub const TOL_COND: f64 = 1e-10;
/// Tolerance on `‖P² − P‖` over a complete operator basis.
pub const TOL_IDEMPOTENT: f64 = 1e-10;
/// Band weights `tr{Π_i ρ_0}` below this are rejected.
pub const MIN_BAND_WEIGHT: f64 = 1e-12;
/// Relative singular-value cutoff for the numerical rank of `Λ`.
pub const RANK_CUTOFF: f64 = 1e-8;
/// Tolerance on the idempotence, Hermiticity and trace preservation of an
/// input map matrix.
pub const TOL_MAP: f64 = 1e-9;

/// A projection given by two lists of environment operators `{A_i}`, `{B_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedProjection {
    dims: DimPair,
    a_ops: Vec<ComplexMatrix>,
    b_ops: Vec<ComplexMatrix>,
}

/// Condition defects of a [`CorrelatedProjection`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    /// `max |tr{B_i A_j} − δ_ij|`
    pub biorthogonality_defect: f64,
    /// `‖Σ_i tr{B_i} A_i − I_E‖_max`
    pub trace_defect: f64,
    /// Smallest eigenvalue of `Σ_i A_iᵀ ⊗ B_i`.
    pub cp_min_eigenvalue: f64,
    pub hermiticity_defect: f64,
    /// `max_k ‖P²E_k − PE_k‖_max` over the matrix units `E_k` of the full space.
    pub idempotence_defect: f64,
    pub passed: bool,
}

impl CorrelatedProjection {
    /// Wrap operator lists after checking that shapes agree. Conditions are
    /// checked separately by [`validate`](Self::validate).
    pub fn new(dims: DimPair, a_ops: Vec<ComplexMatrix>, b_ops: Vec<ComplexMatrix>) -> Result<Self> {
        if a_ops.is_empty() {
            return Err(Error::Precondition("projection needs at least one operator pair".into()));
        }
        if a_ops.len() != b_ops.len() {
            return Err(Error::Dimension { expected: a_ops.len(), found: b_ops.len() });
        }
        for op in a_ops.iter().chain(b_ops.iter()) {
            ensure_dim(op, dims.dim_env)?;
        }
        Ok(Self { dims, a_ops, b_ops })
    }

    /// Standard product projection `Pρ = tr_E{ρ} ⊗ ρ_0`.
    pub fn product(dim_sys: usize, rho0: &ComplexMatrix) -> Result<Self> {
        let d = ensure_square(rho0)?;
        check_density_matrix(rho0)?;
        Self::new(DimPair::new(dim_sys, d)?, alloc::vec![identity(d)], alloc::vec![rho0.clone()])
    }

    pub fn dims(&self) -> DimPair {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.a_ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_ops.is_empty()
    }

    pub fn a_ops(&self) -> &[ComplexMatrix] {
        &self.a_ops
    }

    pub fn b_ops(&self) -> &[ComplexMatrix] {
        &self.b_ops
    }

    /// Evaluate all projection conditions.
    pub fn validate(&self) -> ValidationReport {
        let n = self.len();
        let de = self.dims.dim_env;

        let hermiticity = self
            .a_ops
            .iter()
            .chain(self.b_ops.iter())
            .map(hermiticity_defect)
            .fold(0.0, f64::max);

        let mut biorthogonality: f64 = 0.0;
        for (i, b) in self.b_ops.iter().enumerate() {
            for (j, a) in self.a_ops.iter().enumerate() {
                let delta = if i == j { 1.0 } else { 0.0 };
                let overlap = (b * a).trace();
                biorthogonality = biorthogonality.max((overlap - Complex64::new(delta, 0.0)).norm());
            }
        }

        let mut weighted = ComplexMatrix::zeros(de, de);
        for (a, b) in self.a_ops.iter().zip(&self.b_ops) {
            weighted += a * b.trace();
        }
        let trace_defect = max_diff(&weighted, &identity(de));

        let mut choi_like = ComplexMatrix::zeros(de * de, de * de);
        for (a, b) in self.a_ops.iter().zip(&self.b_ops) {
            choi_like += a.transpose().kronecker(b);
        }
        let cp_min_eigenvalue = eigenvalues_hermitian(&choi_like)
            .map(|v| v.iter().copied().fold(f64::INFINITY, f64::min))
            .unwrap_or(f64::NAN);

        let idempotence_defect = self.idempotence_defect();

        let passed = n > 0
            && hermiticity <= TOL_HERM
            && biorthogonality <= TOL_COND
            && trace_defect <= TOL_COND
            && idempotence_defect <= TOL_IDEMPOTENT
            && cp_min_eigenvalue >= -TOL_PSD;

        ValidationReport {
            biorthogonality_defect: biorthogonality,
            trace_defect,
            cp_min_eigenvalue,
            hermiticity_defect: hermiticity,
            idempotence_defect,
            passed,
        }
    }

    /// `max_k ‖P(P E_k) − P E_k‖_max` over the matrix units of the full space.
    pub fn idempotence_defect(&self) -> f64 {
        let d = self.dims.total();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in 0..d {
                let e = unit(d, r, c);
                let once = self.apply_unchecked(&e);
                let twice = self.apply_unchecked(&once);
                worst = worst.max(max_diff(&once, &twice));
            }
        }
        worst
    }

    /// The dynamical variables `ρ_i = tr_E{(I_S ⊗ A_i) ρ}`.
    pub fn components(&self, rho: &ComplexMatrix) -> Result<Vec<ComplexMatrix>> {
        ensure_dim(rho, self.dims.total())?;
        Ok(self.components_unchecked(rho))
    }

    fn components_unchecked(&self, rho: &ComplexMatrix) -> Vec<ComplexMatrix> {
        self.a_ops
            .iter()
            .map(|a| partial_trace_env_weighted(rho, a, self.dims).expect("shapes checked"))
            .collect()
    }

    /// `Pρ = Σ_i ρ_i ⊗ B_i`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        ensure_dim(rho, self.dims.total())?;
        Ok(self.apply_unchecked(rho))
    }

    fn apply_unchecked(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let comps = self.components_unchecked(rho);
        assemble(&comps, &self.b_ops, self.dims)
    }

    /// Hilbert–Schmidt adjoint `P†O = Σ_i tr_E{(I_S ⊗ B_i) O} ⊗ A_i`.
    pub fn apply_adjoint(&self, obs: &ComplexMatrix) -> Result<ComplexMatrix> {
        ensure_dim(obs, self.dims.total())?;
        let parts: Vec<ComplexMatrix> = self
            .b_ops
            .iter()
            .map(|b| partial_trace_env_weighted(obs, b, self.dims).expect("shapes checked"))
            .collect();
        Ok(assemble(&parts, &self.a_ops, self.dims))
    }

    /// Whether `P†O = O` within `tol` (max-norm).
    pub fn is_relevant_observable(&self, obs: &ComplexMatrix, tol: f64) -> Result<bool> {
        let projected = self.apply_adjoint(obs)?;
        Ok(max_diff(&projected, obs) <= tol)
    }

    /// Re-express the same projection with `A'_i = Σ_j u_ij A_j` and
    /// `B'_i = Σ_j v_ij B_j`, where `v = (uᵀ)⁻¹`.
    pub fn gauge_transform(&self, u: &DMatrix<f64>) -> Result<Self> {
        let n = self.len();
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::Dimension { expected: n, found: u.nrows().max(u.ncols()) });
        }
        // squared singular values; nalgebra's SVD is unreliable on
        // rank-deficient input, the symmetric eigensolver is not
        let sq = SymmetricEigen::new(u.transpose() * u).eigenvalues;
        let (smax, smin) = (sq.max().max(0.0).sqrt(), sq.min().max(0.0).sqrt());
        if !(smin > smax * 1e-12) {
            return Err(Error::Singular);
        }
        let v = u.transpose().try_inverse().ok_or(Error::Singular)?;
        let combine = |coeffs: &DMatrix<f64>, ops: &[ComplexMatrix]| -> Vec<ComplexMatrix> {
            (0..n)
                .map(|i| {
                    let mut acc = ComplexMatrix::zeros(self.dims.dim_env, self.dims.dim_env);
                    for (j, op) in ops.iter().enumerate() {
                        acc += op.scale(coeffs[(i, j)]);
                    }
                    acc
                })
                .collect()
        };
        Ok(Self { dims: self.dims, a_ops: combine(u, &self.a_ops), b_ops: combine(&v, &self.b_ops) })
    }

    /// Rescale each pair so that `tr B_i = 1` wherever `|tr B_i|` is not
    /// negligible. The projection itself is unchanged.
    pub fn canonicalized(&self) -> Self {
        let mut a_ops = self.a_ops.clone();
        let mut b_ops = self.b_ops.clone();
        for (a, b) in a_ops.iter_mut().zip(b_ops.iter_mut()) {
            let t = b.trace().re;
            if t.abs() > 1e-12 {
                *b = b.unscale(t);
                *a = a.scale(t);
            }
        }
        Self { dims: self.dims, a_ops, b_ops }
    }

    /// The `d² × d²` matrix of `Λ` acting on column-stacked environment
    /// operators: `Λ = Σ_i vec(B_i) vec(A_iᵀ)ᵀ`.
    pub fn map_matrix(&self) -> ComplexMatrix {
        let d = self.dims.dim_env;
        let mut out = ComplexMatrix::zeros(d * d, d * d);
        for (a, b) in self.a_ops.iter().zip(&self.b_ops) {
            out += vectorize(b) * vectorize(&a.transpose()).transpose();
        }
        out
    }
}

fn assemble(parts: &[ComplexMatrix], env_ops: &[ComplexMatrix], dims: DimPair) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(dims.total(), dims.total());
    for (part, env) in parts.iter().zip(env_ops) {
        out += part.kronecker(env);
    }
    out
}

fn check_density_matrix(rho: &ComplexMatrix) -> Result<()> {
    let defect = hermiticity_defect(rho);
    if defect > TOL_HERM {
        return Err(Error::NotHermitian { defect });
    }
    let tr = rho.trace();
    if (tr - Complex64::new(1.0, 0.0)).norm() > TOL_COND {
        return Err(Error::Precondition(format!("density matrix has trace {}", tr.re)));
    }
    let min = eigenvalues_hermitian(rho)?.min();
    if min < -TOL_PSD {
        return Err(Error::Precondition(format!("density matrix has eigenvalue {min:e}")));
    }
    Ok(())
}

/// Projection onto states `Σ_i ρ_i ⊗ Π_i ρ_0 Π_i / tr{Π_i ρ_0}` for an
/// orthogonal decomposition `Σ_i Π_i = I_E` of the environment.
pub fn band_projection(
    dim_sys: usize,
    projectors: &[ComplexMatrix],
    rho0: &ComplexMatrix,
) -> Result<CorrelatedProjection> {
    if projectors.is_empty() {
        return Err(Error::Precondition("no band projectors given".into()));
    }
    let d = ensure_square(rho0)?;
    check_density_matrix(rho0)?;
    let mut total = ComplexMatrix::zeros(d, d);
    for (i, p) in projectors.iter().enumerate() {
        ensure_dim(p, d)?;
        if hermiticity_defect(p) > TOL_HERM || max_diff(&(p * p), p) > TOL_COND {
            return Err(Error::Precondition(format!("band operator {i} is not an orthogonal projector")));
        }
        for (j, q) in projectors.iter().enumerate().skip(i + 1) {
            if max_norm(&(p * q)) > TOL_COND {
                return Err(Error::Precondition(format!("band projectors {i} and {j} overlap")));
            }
        }
        total += p;
    }
    if max_diff(&total, &identity(d)) > TOL_COND {
        return Err(Error::Precondition("band projectors do not sum to the identity".into()));
    }

    let mut b_ops = Vec::with_capacity(projectors.len());
    for (index, p) in projectors.iter().enumerate() {
        let weight = (p * rho0).trace().re;
        if weight < MIN_BAND_WEIGHT {
            return Err(Error::DegenerateWeight { index, weight });
        }
        b_ops.push((p * rho0 * p).unscale(weight));
    }
    CorrelatedProjection::new(DimPair::new(dim_sys, d)?, projectors.to_vec(), b_ops)
}

/// Recover `{A_i}`, `{B_i}` from the column-stacked matrix of an idempotent,
/// Hermiticity- and trace-preserving map `Λ` on `d × d` environment operators.
///
/// The returned projection has `dim_sys = 1`; use
/// [`with_dim_sys`](CorrelatedProjection::with_dim_sys) to attach a system.
pub fn decompose_idempotent(lambda: &ComplexMatrix) -> Result<CorrelatedProjection> {
    let dd = ensure_square(lambda)?;
    let d = (dd as f64).sqrt().round() as usize;
    if d == 0 || d * d != dd {
        return Err(Error::Precondition(format!("map matrix dimension {dd} is not a square")));
    }
    let scale = max_norm(lambda).max(1.0);
    let idem = max_diff(&(lambda * lambda), lambda);
    if idem > TOL_MAP * scale {
        return Err(Error::NotAProjection { defect: idem });
    }

    let apply = |x: &ComplexMatrix| unvectorize(&(lambda * vectorize(x)), d).expect("square");

    // Hermiticity preservation: Λ(E_rc)† = Λ(E_cr).
    let mut hp_defect: f64 = 0.0;
    let mut tp_defect: f64 = 0.0;
    for r in 0..d {
        for c in 0..d {
            let img = apply(&unit(d, r, c));
            let img_t = apply(&unit(d, c, r));
            hp_defect = hp_defect.max(max_diff(&img.adjoint(), &img_t));
            let expected = if r == c { 1.0 } else { 0.0 };
            tp_defect = tp_defect.max((img.trace() - Complex64::new(expected, 0.0)).norm());
        }
    }
    if hp_defect > TOL_MAP * scale {
        return Err(Error::Contract(format!("map is not Hermiticity preserving (defect {hp_defect:e})")));
    }
    if tp_defect > TOL_MAP * scale {
        return Err(Error::Contract(format!("map is not trace preserving (defect {tp_defect:e})")));
    }

    // Real representation on the orthonormal Hermitian basis G_m:
    // M_mn = tr{G_m Λ(G_n)}.
    let basis = hermitian_basis(d);
    let images: Vec<ComplexMatrix> = basis.iter().map(apply).collect();
    let m = DMatrix::<f64>::from_fn(dd, dd, |row, col| (&basis[row] * &images[col]).trace().re);

    // Orthonormal range basis from the eigenvectors of M Mᵀ. Nonzero singular
    // values of an idempotent are ≥ 1, so the cutoff separates them cleanly
    // from roundoff; the rank must also equal tr M.
    let eig = SymmetricEigen::new(&m * m.transpose());
    let u = &eig.eigenvectors;
    let lmax = eig.eigenvalues.max();
    let mut order: Vec<usize> = (0..dd).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let kept: Vec<usize> = order.into_iter().filter(|&k| eig.eigenvalues[k] > RANK_CUTOFF * lmax).collect();
    let rank = kept.len();
    if rank == 0 || (m.trace() - rank as f64).abs() > 1e-6 {
        return Err(Error::NotAProjection { defect: idem });
    }

    // Range basis U_r gives B_i; since M U_r = U_r for an idempotent M,
    // the rows of U_rᵀ M give biorthogonal A_i.
    let u_r = DMatrix::<f64>::from_fn(dd, rank, |row, col| u[(row, kept[col])]);
    let coeff_a = u_r.transpose() * &m;
    let expand = |coeffs: DVector<f64>| -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(d, d);
        for (g, &w) in basis.iter().zip(coeffs.iter()) {
            if w != 0.0 {
                acc += g.scale(w);
            }
        }
        acc
    };
    let b_ops: Vec<ComplexMatrix> = (0..rank).map(|i| expand(u_r.column(i).into_owned())).collect();
    let a_raw: Vec<ComplexMatrix> =
        (0..rank).map(|i| expand(coeff_a.row(i).transpose().into_owned())).collect();

    // Clean residual roundoff in tr{B_i A_j} = δ_ij with the inverse Gram matrix.
    let gram = DMatrix::<f64>::from_fn(rank, rank, |i, j| (&b_ops[i] * &a_raw[j]).trace().re);
    let gram_inv = gram.try_inverse().ok_or(Error::Singular)?;
    let a_ops: Vec<ComplexMatrix> = (0..rank)
        .map(|j| {
            let mut acc = ComplexMatrix::zeros(d, d);
            for (k, a) in a_raw.iter().enumerate() {
                acc += a.scale(gram_inv[(k, j)]);
            }
            acc
        })
        .collect();

    Ok(CorrelatedProjection::new(DimPair::new(1, d)?, a_ops, b_ops)?.canonicalized())
}

impl CorrelatedProjection {
    /// Same environment map attached to a system of dimension `dim_sys`.
    pub fn with_dim_sys(&self, dim_sys: usize) -> Result<Self> {
        Ok(Self { dims: DimPair::new(dim_sys, self.dims.dim_env)?, ..self.clone() })
    }

    /// `Λ(X)` for a single environment operator.
    pub fn apply_env(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        ensure_dim(x, self.dims.dim_env)?;
        let d = self.dims.dim_env;
        let mut out = ComplexMatrix::zeros(d, d);
        for (a, b) in self.a_ops.iter().zip(&self.b_ops) {
            let w = (a * x).trace();
            if w != ZERO {
                out += b * w;
            }
        }
        Ok(out)
    }
}

/// Convenience for the common case: the relevant state `Σ_i ρ_i ⊗ B_i`.
pub fn relevant_state(p: &CorrelatedProjection, components: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    if components.len() != p.len() {
        return Err(Error::Dimension { expected: p.len(), found: components.len() });
    }
    let mut out = ComplexMatrix::zeros(p.dims.total(), p.dims.total());
    for (rho_i, b) in components.iter().zip(&p.b_ops) {
        ensure_dim(rho_i, p.dims.dim_sys)?;
        out += kron(rho_i, b)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{from_real_diagonal, partial_trace_env};
    use alloc::vec;

    fn band_projectors(sizes: &[usize]) -> Vec<ComplexMatrix> {
        let d: usize = sizes.iter().sum();
        let mut start = 0;
        sizes
            .iter()
            .map(|&s| {
                let diag: Vec<f64> =
                    (0..d).map(|k| if k >= start && k < start + s { 1.0 } else { 0.0 }).collect();
                start += s;
                from_real_diagonal(&diag)
            })
            .collect()
    }

    fn mixed(d: usize) -> ComplexMatrix {
        identity(d).unscale(d as f64)
    }

    #[test]
    fn product_projection_passes() {
        let rho0 = from_real_diagonal(&[0.7, 0.2, 0.1]);
        let p = CorrelatedProjection::product(2, &rho0).unwrap();
        let report = p.validate();
        assert!(report.passed, "{report:?}");
        assert!(report.idempotence_defect < 1e-14);
    }

    #[test]
    fn non_positive_b_fails_only_cp() {
        let dims = DimPair::new(2, 2).unwrap();
        let p = CorrelatedProjection::new(dims, vec![identity(2)], vec![from_real_diagonal(&[1.5, -0.5])])
            .unwrap();
        let r = p.validate();
        assert!(r.biorthogonality_defect < 1e-15);
        assert!(r.trace_defect < 1e-15);
        assert!((r.cp_min_eigenvalue + 0.5).abs() < 1e-12);
        assert!(!r.passed);
    }

    #[test]
    fn band_projection_two_band_b_ops() {
        let proj = band_projectors(&[3, 2]);
        let p = band_projection(2, &proj, &mixed(5)).unwrap();
        assert!(max_diff(&p.b_ops()[0], &proj[0].unscale(3.0)) < 1e-15);
        assert!(max_diff(&p.b_ops()[1], &proj[1].unscale(2.0)) < 1e-15);
        let r = p.validate();
        assert!(r.passed);
        assert!(r.biorthogonality_defect <= 1e-12 && r.trace_defect <= 1e-12 && r.idempotence_defect <= 1e-12);
    }

    #[test]
    fn single_band_is_product_projection() {
        let rho0 = from_real_diagonal(&[0.5, 0.3, 0.2]);
        let p = band_projection(2, &[identity(3)], &rho0).unwrap();
        assert!(max_diff(&p.b_ops()[0], &rho0) < 1e-15);
        assert_eq!(p.a_ops()[0], identity(3));
    }

    #[test]
    fn rank_one_bands_give_basis_projectors() {
        let proj = band_projectors(&[1, 1, 1, 1]);
        let p = band_projection(1, &proj, &mixed(4)).unwrap();
        for (b, pi) in p.b_ops().iter().zip(&proj) {
            assert!(max_diff(b, pi) < 1e-15);
        }
        assert!(p.validate().passed);
    }

    #[test]
    fn band_projection_errors() {
        // zero weight in the second band
        let rho0 = from_real_diagonal(&[1.0, 0.0]);
        let proj = band_projectors(&[1, 1]);
        assert!(matches!(band_projection(1, &proj, &rho0), Err(Error::DegenerateWeight { index: 1, .. })));
        // overlapping projectors
        let overlapping = vec![identity(2), from_real_diagonal(&[1.0, 0.0])];
        assert!(matches!(band_projection(1, &overlapping, &mixed(2)), Err(Error::Precondition(_))));
        // not summing to the identity
        let partial = vec![from_real_diagonal(&[1.0, 0.0])];
        assert!(matches!(band_projection(1, &partial, &mixed(2)), Err(Error::Precondition(_))));
    }

    #[test]
    fn components_of_band_product_state() {
        let proj = band_projectors(&[2, 2]);
        let p = band_projection(2, &proj, &mixed(4)).unwrap();
        let rho_s = ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.6, 0.0),
                Complex64::new(0.1, 0.2),
                Complex64::new(0.1, -0.2),
                Complex64::new(0.4, 0.0),
            ],
        );
        let rho = kron(&rho_s, &proj[0].unscale(2.0)).unwrap();
        let comps = p.components(&rho).unwrap();
        assert!(max_diff(&comps[0], &rho_s) < 1e-15);
        assert!(max_norm(&comps[1]) < 1e-15);
        let sum = &comps[0] + &comps[1];
        assert!(max_diff(&sum, &partial_trace_env(&rho, p.dims()).unwrap()) < 1e-15);
    }

    #[test]
    fn components_of_totally_mixed_state() {
        let proj = band_projectors(&[1, 3]);
        let p = band_projection(2, &proj, &mixed(4)).unwrap();
        let comps = p.components(&mixed(8)).unwrap();
        assert!(max_diff(&comps[0], &identity(2).scale(1.0 / 8.0)) < 1e-15);
        assert!(max_diff(&comps[1], &identity(2).scale(3.0 / 8.0)) < 1e-15);
    }

    #[test]
    fn apply_dimension_mismatch() {
        let p = CorrelatedProjection::product(2, &mixed(2)).unwrap();
        assert!(p.apply(&identity(3)).is_err());
        assert!(p.apply_adjoint(&identity(5)).is_err());
        assert!(p.components(&identity(2)).is_err());
    }

    #[test]
    fn product_projection_adjoint() {
        let rho0 = from_real_diagonal(&[0.25, 0.75]);
        let p = CorrelatedProjection::product(2, &rho0).unwrap();
        let obs = ComplexMatrix::from_fn(4, 4, |r, c| Complex64::new((r + c) as f64, r as f64 - c as f64));
        let got = p.apply_adjoint(&obs).unwrap();
        let rhs = kron(&partial_trace_env_weighted(&obs, &rho0, p.dims()).unwrap(), &identity(2)).unwrap();
        assert!(max_diff(&got, &rhs) < 1e-14);
    }

    #[test]
    fn identity_is_relevant() {
        let p = band_projection(3, &band_projectors(&[2, 1]), &from_real_diagonal(&[0.2, 0.3, 0.5])).unwrap();
        assert!(p.is_relevant_observable(&identity(9), 1e-12).unwrap());
    }

    #[test]
    fn single_level_observable_is_not_relevant() {
        let p = band_projection(2, &band_projectors(&[2, 2]), &mixed(4)).unwrap();
        let y = from_real_diagonal(&[1.0, 0.0, 0.0, 0.0]);
        let obs = kron(&crate::operator::qubit::sigma_x(), &y).unwrap();
        assert!(!p.is_relevant_observable(&obs, 1e-9).unwrap());
    }

    #[test]
    fn gauge_identity_and_scaling() {
        let p = band_projection(2, &band_projectors(&[2, 2]), &mixed(4)).unwrap();
        let same = p.gauge_transform(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(same, p);
        let scaled = p.gauge_transform(&DMatrix::from_diagonal_element(2, 2, 2.0)).unwrap();
        for i in 0..2 {
            assert!(max_diff(&scaled.a_ops()[i], &p.a_ops()[i].scale(2.0)) < 1e-15);
            assert!(max_diff(&scaled.b_ops()[i], &p.b_ops()[i].scale(0.5)) < 1e-15);
        }
        let rho = ComplexMatrix::from_fn(8, 8, |r, c| Complex64::new(1.0 / (1.0 + (r + c) as f64), 0.0));
        assert!(max_diff(&scaled.apply(&rho).unwrap(), &p.apply(&rho).unwrap()) < 1e-14);
    }

    #[test]
    fn gauge_rejects_singular() {
        let p = band_projection(1, &band_projectors(&[1, 1]), &mixed(2)).unwrap();
        let u = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(p.gauge_transform(&u), Err(Error::Singular)));
        assert!(p.gauge_transform(&DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn decompose_standard_projection() {
        let rho0 = from_real_diagonal(&[0.6, 0.3, 0.1]);
        let p = CorrelatedProjection::product(1, &rho0).unwrap();
        let q = decompose_idempotent(&p.map_matrix()).unwrap();
        assert_eq!(q.len(), 1);
        assert!(max_diff(&q.b_ops()[0], &rho0) < 1e-12);
        assert!(max_diff(&q.a_ops()[0], &identity(3)) < 1e-12);
    }

    #[test]
    fn decompose_identity_map() {
        let d = 3;
        let q = decompose_idempotent(&identity(d * d)).unwrap();
        assert_eq!(q.len(), d * d);
        for r in 0..d {
            for c in 0..d {
                let x = unit(d, r, c);
                assert!(max_diff(&q.apply_env(&x).unwrap(), &x) < 1e-12);
            }
        }
    }

    #[test]
    fn decompose_rejects_non_idempotent() {
        let m = identity(4).scale(2.0);
        assert!(matches!(decompose_idempotent(&m), Err(Error::NotAProjection { .. })));
        assert!(decompose_idempotent(&identity(3)).is_err());
    }

    #[test]
    fn decompose_rejects_non_hermiticity_preserving() {
        // Λ(X) = tr(X) ρ with non-Hermitian ρ of unit trace is idempotent and TP
        let mut rho = mixed(2);
        rho[(0, 1)] = Complex64::new(0.3, 0.0);
        let p = CorrelatedProjection::new(DimPair::new(1, 2).unwrap(), vec![identity(2)], vec![rho]).unwrap();
        assert!(matches!(decompose_idempotent(&p.map_matrix()), Err(Error::Contract(_))));
    }

    #[test]
    fn canonicalization_normalizes_traces() {
        let p = band_projection(1, &band_projectors(&[2, 1]), &mixed(3)).unwrap();
        let u = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -0.5]);
        let q = p.gauge_transform(&u).unwrap().canonicalized();
        for (b, b_ref) in q.b_ops().iter().zip(p.b_ops()) {
            assert!(max_diff(b, b_ref) < 1e-15);
        }
    }
}
