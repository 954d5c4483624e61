//! Dense complex operator algebra.
//!
//! Every bipartite operator uses the system-first tensor ordering: the basis
//! state `(s, e)` of `H_S ⊗ H_E` sits at row `s * dim_env + e`. Operator
//! vectorization is column stacking, `vec(X)[c * d + r] = X[(r, c)]`, so
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Max-norm tolerance for Hermiticity checks.
pub const TOL_HERM: f64 = 1e-10;
/// Eigenvalues down to `-TOL_PSD` count as nonnegative.
pub const TOL_PSD: f64 = 1e-9;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dimensions of a bipartite space `H_S ⊗ H_E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DimPair {
    pub dim_sys: usize,
    pub dim_env: usize,
}

impl DimPair {
    pub fn new(dim_sys: usize, dim_env: usize) -> Result<Self> {
        if dim_sys == 0 || dim_env == 0 {
            return Err(Error::Precondition("dimensions must be positive".into()));
        }
        Ok(Self { dim_sys, dim_env })
    }

    pub fn total(&self) -> usize {
        self.dim_sys * self.dim_env
    }

    /// Row index of the product basis state `(s, e)`.
    #[inline]
    pub fn index(&self, s: usize, e: usize) -> usize {
        s * self.dim_env + e
    }
}

pub fn ensure_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

pub fn ensure_dim(m: &ComplexMatrix, dim: usize) -> Result<()> {
    let d = ensure_square(m)?;
    if d != dim {
        return Err(Error::Dimension { expected: dim, found: d });
    }
    Ok(())
}

/// Kronecker product `a ⊗ b` of two square matrices.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_square(a)?;
    ensure_square(b)?;
    Ok(a.kronecker(b))
}

/// `tr_E m` for `m` on `H_S ⊗ H_E`.
pub fn partial_trace_env(m: &ComplexMatrix, dims: DimPair) -> Result<ComplexMatrix> {
    ensure_dim(m, dims.total())?;
    Ok(ComplexMatrix::from_fn(dims.dim_sys, dims.dim_sys, |s, t| {
        (0..dims.dim_env).map(|e| m[(dims.index(s, e), dims.index(t, e))]).sum()
    }))
}

/// `tr_S m` for `m` on `H_S ⊗ H_E`.
pub fn partial_trace_sys(m: &ComplexMatrix, dims: DimPair) -> Result<ComplexMatrix> {
    ensure_dim(m, dims.total())?;
    Ok(ComplexMatrix::from_fn(dims.dim_env, dims.dim_env, |e, f| {
        (0..dims.dim_sys).map(|s| m[(dims.index(s, e), dims.index(s, f))]).sum()
    }))
}

/// `tr_E{(I_S ⊗ a) m}` without forming the Kronecker product.
pub fn partial_trace_env_weighted(
    m: &ComplexMatrix,
    a: &ComplexMatrix,
    dims: DimPair,
) -> Result<ComplexMatrix> {
    ensure_dim(m, dims.total())?;
    ensure_dim(a, dims.dim_env)?;
    let de = dims.dim_env;
    Ok(ComplexMatrix::from_fn(dims.dim_sys, dims.dim_sys, |s, t| {
        let mut acc = ZERO;
        for e in 0..de {
            for f in 0..de {
                let w = a[(e, f)];
                if w != ZERO {
                    acc += w * m[(dims.index(s, f), dims.index(t, e))];
                }
            }
        }
        acc
    }))
}

/// Largest absolute entry.
pub fn max_norm(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `‖m − m†‖_max`.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn eigenvalues_hermitian(m: &ComplexMatrix) -> Result<DVector<f64>> {
    ensure_square(m)?;
    let mut vals = SymmetricEigen::new(hermitian_part(m)).eigenvalues;
    vals.as_mut_slice().sort_by(|a, b| a.total_cmp(b));
    Ok(vals)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue_hermitian(m: &ComplexMatrix) -> Result<f64> {
    ensure_square(m)?;
    let defect = hermiticity_defect(m);
    if defect > TOL_HERM {
        return Err(Error::NotHermitian { defect });
    }
    let vals = eigenvalues_hermitian(m)?;
    Ok(vals.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Hermitian eigendecomposition `m = V diag(w) V†`.
pub fn eigh(m: &ComplexMatrix) -> Result<(DVector<f64>, ComplexMatrix)> {
    ensure_square(m)?;
    let defect = hermiticity_defect(m);
    if defect > TOL_HERM {
        return Err(Error::NotHermitian { defect });
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    Ok((eig.eigenvalues, eig.eigenvectors))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const PADE13_THETA: f64 = 5.371920351148152;

fn one_norm(m: &ComplexMatrix) -> f64 {
    m.column_iter().map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with the degree-13 Padé
/// approximant (Higham 2005).
pub fn expm(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = ensure_square(m)?;
    if d == 0 {
        return Ok(m.clone());
    }
    let norm = one_norm(m);
    let squarings = if norm > PADE13_THETA {
        (norm / PADE13_THETA).log2().ceil() as i32
    } else {
        0
    };
    let a = m.scale(2f64.powi(-squarings));
    let id = identity(d);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| Complex64::new(PADE13[k], 0.0);
    let u_inner = &a6 * (a6.map(|z| z * b(13)) + a4.map(|z| z * b(11)) + a2.map(|z| z * b(9)))
        + a6.map(|z| z * b(7))
        + a4.map(|z| z * b(5))
        + a2.map(|z| z * b(3))
        + id.map(|z| z * b(1));
    let u = &a * u_inner;
    let v = &a6 * (a6.map(|z| z * b(12)) + a4.map(|z| z * b(10)) + a2.map(|z| z * b(8)))
        + a6.map(|z| z * b(6))
        + a4.map(|z| z * b(4))
        + a2.map(|z| z * b(2))
        + id.map(|z| z * b(0));
    let numer = &v + &u;
    let denom = v - u;
    let mut r = denom.lu().solve(&numer).ok_or(Error::Singular)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if !is_finite(&r) {
        return Err(Error::Contract("matrix exponential overflowed".into()));
    }
    Ok(r)
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b + b * a
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

/// Matrix unit `|r⟩⟨c|` of dimension `d`.
pub fn unit(d: usize, r: usize, c: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(r, c)] = ONE;
    m
}

pub fn from_real_diagonal(diag: &[f64]) -> ComplexMatrix {
    let d = diag.len();
    ComplexMatrix::from_fn(d, d, |r, c| if r == c { Complex64::new(diag[r], 0.0) } else { ZERO })
}

/// Column-stacking vectorization.
pub fn vectorize(m: &ComplexMatrix) -> DVector<Complex64> {
    // nalgebra storage is already column-major
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &DVector<Complex64>, d: usize) -> Result<ComplexMatrix> {
    if v.len() != d * d {
        return Err(Error::Dimension { expected: d * d, found: v.len() });
    }
    Ok(ComplexMatrix::from_column_slice(d, d, v.as_slice()))
}

/// Build a matrix from row-major entries.
pub fn from_row_major(rows: usize, cols: usize, entries: &[Complex64]) -> Result<ComplexMatrix> {
    if entries.len() != rows * cols {
        return Err(Error::Dimension { expected: rows * cols, found: entries.len() });
    }
    Ok(ComplexMatrix::from_row_slice(rows, cols, entries))
}

/// Orthonormal Hermitian basis of `d × d` operators under `tr(A B)`.
///
/// Ordering: diagonal units, then for each `r < c` the symmetric and the
/// antisymmetric combination.
pub fn hermitian_basis(d: usize) -> alloc::vec::Vec<ComplexMatrix> {
    let mut out = alloc::vec::Vec::with_capacity(d * d);
    for k in 0..d {
        out.push(unit(d, k, k));
    }
    let s = core::f64::consts::FRAC_1_SQRT_2;
    for r in 0..d {
        for c in (r + 1)..d {
            let mut sym = ComplexMatrix::zeros(d, d);
            sym[(r, c)] = Complex64::new(s, 0.0);
            sym[(c, r)] = Complex64::new(s, 0.0);
            out.push(sym);
            let mut anti = ComplexMatrix::zeros(d, d);
            anti[(r, c)] = Complex64::new(0.0, -s);
            anti[(c, r)] = Complex64::new(0.0, s);
            out.push(anti);
        }
    }
    out
}

/// Two-level operators in the excited-first basis `(|1⟩, |0⟩)`.
pub mod qubit {
    use super::*;

    /// `σ₊ = |1⟩⟨0|`.
    pub fn sigma_plus() -> ComplexMatrix {
        unit(2, 0, 1)
    }

    /// `σ₋ = |0⟩⟨1|`.
    pub fn sigma_minus() -> ComplexMatrix {
        unit(2, 1, 0)
    }

    /// `σ₊σ₋ = |1⟩⟨1|`.
    pub fn excited() -> ComplexMatrix {
        unit(2, 0, 0)
    }

    /// `σ₋σ₊ = |0⟩⟨0|`.
    pub fn ground() -> ComplexMatrix {
        unit(2, 1, 1)
    }

    pub fn sigma_x() -> ComplexMatrix {
        sigma_plus() + sigma_minus()
    }

    pub fn sigma_y() -> ComplexMatrix {
        (sigma_minus() - sigma_plus()) * I
    }

    /// `σ_z = |1⟩⟨1| − |0⟩⟨0|`.
    pub fn sigma_z() -> ComplexMatrix {
        excited() - ground()
    }
}
