//! Component states `(ρ_1, …, ρ_n)` and their block-diagonal embedding in
//! the extended space `H_S ⊗ C^n`.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::operator::{eigenvalues_hermitian, ensure_dim, ensure_square, hermiticity_defect, ComplexMatrix};

/// Ordered list of unnormalized system density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentState {
    dim_sys: usize,
    components: Vec<ComplexMatrix>,
}

/// Physicality diagnostics of a [`ComponentState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDiagnostics {
    /// Smallest eigenvalue over all components (of their Hermitian parts).
    pub min_eigenvalue: f64,
    pub hermiticity_defect: f64,
    pub total_trace: f64,
    /// Set when any check exceeds the tolerance passed to [`ComponentState::check`].
    pub violation: bool,
}

impl ComponentState {
    pub fn new(components: Vec<ComplexMatrix>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Precondition("a state needs at least one component".into()))?;
        let dim_sys = ensure_square(first)?;
        if dim_sys == 0 {
            return Err(Error::Precondition("components must be nonempty matrices".into()));
        }
        for c in &components {
            ensure_dim(c, dim_sys)?;
        }
        Ok(Self { dim_sys, components })
    }

    pub fn zeros(n: usize, dim_sys: usize) -> Self {
        Self { dim_sys, components: (0..n).map(|_| ComplexMatrix::zeros(dim_sys, dim_sys)).collect() }
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn dim_sys(&self) -> usize {
        self.dim_sys
    }

    pub fn components(&self) -> &[ComplexMatrix] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ComplexMatrix {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<ComplexMatrix> {
        self.components
    }

    /// `ρ_S = Σ_i ρ_i`.
    pub fn reduced_density(&self) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.dim_sys, self.dim_sys);
        for c in &self.components {
            acc += c;
        }
        acc
    }

    /// Real parts of `tr ρ_i`.
    pub fn traces(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.trace().re).collect()
    }

    pub fn total_trace(&self) -> f64 {
        self.reduced_density().trace().re
    }

    /// `self + h · other`, componentwise.
    pub fn add_scaled(&self, other: &Self, h: f64) -> Self {
        debug_assert_eq!(self.n(), other.n());
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a + b.scale(h))
            .collect();
        Self { dim_sys: self.dim_sys, components }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim_sys: self.dim_sys, components: self.components.iter().map(|c| c.scale(s)).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(crate::operator::is_finite)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| crate::operator::max_diff(a, b))
            .fold(0.0, f64::max)
    }

    /// `ϱ = Σ_i ρ_i ⊗ |i⟩⟨i|` on `H_S ⊗ C^n`.
    pub fn to_extended(&self) -> ComplexMatrix {
        let n = self.n();
        let d = self.dim_sys * n;
        let mut out = ComplexMatrix::zeros(d, d);
        for (i, c) in self.components.iter().enumerate() {
            for s in 0..self.dim_sys {
                for t in 0..self.dim_sys {
                    out[(s * n + i, t * n + i)] = c[(s, t)];
                }
            }
        }
        out
    }

    /// Diagonal auxiliary blocks of an extended-space operator.
    pub fn from_extended(varrho: &ComplexMatrix, dim_sys: usize, n: usize) -> Result<Self> {
        ensure_dim(varrho, dim_sys * n)?;
        let components = (0..n).map(|i| aux_block(varrho, dim_sys, n, i, i)).collect();
        Self::new(components)
    }

    /// Minimum eigenvalue, Hermiticity defect and total trace; `violation`
    /// is raised when the eigenvalue falls below `-tol`, the Hermiticity
    /// defect exceeds `tol`, or the total trace departs from 1 by more than `tol`.
    pub fn check(&self, tol: f64) -> StateDiagnostics {
        let hermiticity = self.components.iter().map(hermiticity_defect).fold(0.0, f64::max);
        let min_eigenvalue = self
            .components
            .iter()
            .map(|c| eigenvalues_hermitian(c).map(|v| v.min()).unwrap_or(f64::NAN))
            .fold(f64::INFINITY, f64::min);
        let total_trace = self.total_trace();
        let violation = !(min_eigenvalue >= -tol) || hermiticity > tol || (total_trace - 1.0).abs() > tol;
        StateDiagnostics { min_eigenvalue, hermiticity_defect: hermiticity, total_trace, violation }
    }

    /// `Σ_i tr{C_i ρ_i}` (real part).
    pub fn expectation(&self, ops: &[ComplexMatrix]) -> Result<f64> {
        if ops.len() != self.n() {
            return Err(Error::Dimension { expected: self.n(), found: ops.len() });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, rho) in ops.iter().zip(&self.components) {
            ensure_dim(c, self.dim_sys)?;
            acc += (c * rho).trace();
        }
        Ok(acc.re)
    }
}

/// Block `(i, k)` of an operator on `H_S ⊗ C^n`: `⟨s, i| M |t, k⟩`.
pub fn aux_block(m: &ComplexMatrix, dim_sys: usize, n: usize, i: usize, k: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim_sys, dim_sys, |s, t| m[(s * n + i, t * n + k)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{identity, max_diff, qubit, unit};
    use alloc::vec;

    #[test]
    fn reduced_density_of_single_nonzero_component() {
        let rho = qubit::excited();
        let s = ComponentState::new(vec![rho.clone(), ComplexMatrix::zeros(2, 2)]).unwrap();
        assert_eq!(s.reduced_density(), rho);
    }

    #[test]
    fn reduced_density_half_split() {
        let s = ComponentState::new(vec![qubit::excited().scale(0.5), qubit::ground().scale(0.5)]).unwrap();
        assert!(max_diff(&s.reduced_density(), &identity(2).scale(0.5)) < 1e-16);
        assert!((s.total_trace() - 1.0).abs() < 1e-16);
    }

    #[test]
    fn new_rejects_mixed_dims() {
        assert!(ComponentState::new(vec![identity(2), identity(3)]).is_err());
        assert!(ComponentState::new(vec![]).is_err());
    }

    #[test]
    fn extended_roundtrip() {
        let s = ComponentState::new(vec![unit(2, 0, 1), unit(2, 1, 1).scale(2.0), unit(2, 1, 0)]).unwrap();
        let ext = s.to_extended();
        assert_eq!(ext.nrows(), 6);
        assert_eq!(ComponentState::from_extended(&ext, 2, 3).unwrap(), s);
        assert_eq!(aux_block(&ext, 2, 3, 0, 1), ComplexMatrix::zeros(2, 2));
    }

    #[test]
    fn check_physical_and_unphysical() {
        let good = ComponentState::new(vec![qubit::excited()]).unwrap();
        assert!(!good.check(1e-9).violation);
        let bad = ComponentState::new(vec![
            crate::operator::from_real_diagonal(&[1.1, -0.1]),
            ComplexMatrix::zeros(2, 2),
        ])
        .unwrap();
        let d = bad.check(1e-9);
        assert!(d.violation);
        assert!((d.min_eigenvalue + 0.1).abs() < 1e-14);
    }
}
