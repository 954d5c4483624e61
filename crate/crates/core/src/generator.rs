//! Generalized Lindblad generators for coupled component equations
//!
//! ```text
//! dρ_i/dt = −i[H^i, ρ_i] + Σ_{jλ} ( R^{ij}_λ ρ_j R^{ij†}_λ − ½{R^{ji†}_λ R^{ji}_λ, ρ_i} )
//! ```
//!
//! and their embedding into an ordinary Lindblad generator on `H_S ⊗ C^n`
//! with `H = Σ_i H^i ⊗ |i⟩⟨i|` and `S^{ij}_λ = R^{ij}_λ ⊗ |i⟩⟨j|`.
//!
//! Component indices are zero-based. Sums run over `j` ascending, then `λ`
//! ascending.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::operator::{
    anticommutator, commutator, ensure_dim, ensure_square, hermiticity_defect, identity, max_norm,
    qubit, unit, ComplexMatrix, I, TOL_HERM,
};
use crate::state::{aux_block, ComponentState};

/// Key `(i, j, λ)` of a jump operator `R^{ij}_λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JumpIndex {
    pub i: usize,
    pub j: usize,
    pub lambda: usize,
}

impl JumpIndex {
    pub fn new(i: usize, j: usize, lambda: usize) -> Self {
        Self { i, j, lambda }
    }
}

/// Hermitian `H^i` and jump operators `R^{ij}_λ`; absent keys are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedLindblad {
    dim_sys: usize,
    h_ops: Vec<ComplexMatrix>,
    jumps: BTreeMap<JumpIndex, ComplexMatrix>,
    /// `Γ_i = Σ_{jλ} R^{ji†}_λ R^{ji}_λ`
    loss: Vec<ComplexMatrix>,
}

/// Per-component data for an uncoupled generator.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalLindblad {
    pub h: ComplexMatrix,
    pub jumps: Vec<ComplexMatrix>,
}

/// Operators `C^i_S` of a relevant observable `C = Σ_i C^i_S ⊗ A_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevantConservedSet {
    c_ops: Vec<ComplexMatrix>,
}

impl RelevantConservedSet {
    pub fn new(c_ops: Vec<ComplexMatrix>) -> Result<Self> {
        for c in &c_ops {
            ensure_square(c)?;
            let defect = hermiticity_defect(c);
            if defect > TOL_HERM {
                return Err(Error::NotHermitian { defect });
            }
        }
        Ok(Self { c_ops })
    }

    pub fn c_ops(&self) -> &[ComplexMatrix] {
        &self.c_ops
    }

    /// `Σ_i tr{C^i_S ρ_i}`.
    pub fn value(&self, state: &ComponentState) -> Result<f64> {
        state.expectation(&self.c_ops)
    }
}

impl GeneralizedLindblad {
    pub fn new(
        dim_sys: usize,
        h_ops: Vec<ComplexMatrix>,
        jumps: impl IntoIterator<Item = (JumpIndex, ComplexMatrix)>,
    ) -> Result<Self> {
        let n = h_ops.len();
        if n == 0 || dim_sys == 0 {
            return Err(Error::Precondition("generator needs n ≥ 1 and dim_sys ≥ 1".into()));
        }
        for h in &h_ops {
            ensure_dim(h, dim_sys)?;
            let defect = hermiticity_defect(h);
            if defect > TOL_HERM {
                return Err(Error::NotHermitian { defect });
            }
        }
        let mut map = BTreeMap::new();
        for (key, op) in jumps {
            if key.i >= n || key.j >= n {
                return Err(Error::IndexOutOfRange { index: key.i.max(key.j), len: n });
            }
            ensure_dim(&op, dim_sys)?;
            if map.insert(key, op).is_some() {
                return Err(Error::Precondition(format!(
                    "duplicate jump operator ({}, {}, {})",
                    key.i, key.j, key.lambda
                )));
            }
        }
        let mut loss: Vec<ComplexMatrix> = (0..n).map(|_| ComplexMatrix::zeros(dim_sys, dim_sys)).collect();
        for (key, r) in &map {
            // R^{ji} contributes to the loss of component i = key.j
            loss[key.j] += r.adjoint() * r;
        }
        Ok(Self { dim_sys, h_ops, jumps: map, loss })
    }

    /// Generator with `R^{ij}_λ = δ_ij R^i_λ`: every component follows its
    /// own Lindblad equation.
    pub fn uncoupled(locals: &[LocalLindblad]) -> Result<Self> {
        let first = locals.first().ok_or_else(|| Error::Precondition("no local generators".into()))?;
        let dim_sys = ensure_square(&first.h)?;
        let h_ops = locals.iter().map(|l| l.h.clone()).collect();
        let jumps = locals.iter().enumerate().flat_map(|(i, l)| {
            l.jumps.iter().enumerate().map(move |(lambda, r)| (JumpIndex::new(i, i, lambda), r.clone()))
        });
        Self::new(dim_sys, h_ops, jumps)
    }

    /// Two-level energy-resolved generator with `R^{εε'}_0 = √γ₁(ε,ε') σ₊`
    /// and `R^{εε'}_1 = √γ₂(ε,ε') σ₋`. Zero rates produce no operator.
    pub fn energy_resolved(gamma1: &DMatrix<f64>, gamma2: &DMatrix<f64>, h_eps: Vec<ComplexMatrix>) -> Result<Self> {
        let n = h_eps.len();
        for table in [gamma1, gamma2] {
            if table.nrows() != n || table.ncols() != n {
                return Err(Error::Dimension { expected: n, found: table.nrows().max(table.ncols()) });
            }
            if let Some(bad) = table.iter().find(|&&g| !(g >= 0.0)) {
                return Err(Error::Precondition(format!("negative or undefined rate {bad}")));
            }
        }
        let mut jumps = Vec::new();
        for e in 0..n {
            for e2 in 0..n {
                if gamma1[(e, e2)] > 0.0 {
                    jumps.push((JumpIndex::new(e, e2, 0), qubit::sigma_plus().scale(gamma1[(e, e2)].sqrt())));
                }
                if gamma2[(e, e2)] > 0.0 {
                    jumps.push((JumpIndex::new(e, e2, 1), qubit::sigma_minus().scale(gamma2[(e, e2)].sqrt())));
                }
            }
        }
        Self::new(2, h_eps, jumps)
    }

    pub fn n(&self) -> usize {
        self.h_ops.len()
    }

    pub fn dim_sys(&self) -> usize {
        self.dim_sys
    }

    pub fn h_ops(&self) -> &[ComplexMatrix] {
        &self.h_ops
    }

    pub fn jumps(&self) -> impl Iterator<Item = (&JumpIndex, &ComplexMatrix)> {
        self.jumps.iter()
    }

    pub fn jump(&self, i: usize, j: usize, lambda: usize) -> Option<&ComplexMatrix> {
        self.jumps.get(&JumpIndex::new(i, j, lambda))
    }

    /// Gain operators `R^{ij}_λ` for fixed `i`, ordered by `(j, λ)`.
    fn gains(&self, i: usize) -> impl Iterator<Item = (&JumpIndex, &ComplexMatrix)> {
        self.jumps.range(JumpIndex::new(i, 0, 0)..JumpIndex::new(i + 1, 0, 0))
    }

    fn check_state(&self, state: &ComponentState) -> Result<()> {
        if state.n() != self.n() {
            return Err(Error::Dimension { expected: self.n(), found: state.n() });
        }
        if state.dim_sys() != self.dim_sys {
            return Err(Error::Dimension { expected: self.dim_sys, found: state.dim_sys() });
        }
        Ok(())
    }

    /// `K_i(ρ_1, …, ρ_n)`.
    pub fn apply_k(&self, i: usize, state: &ComponentState) -> Result<ComplexMatrix> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, len: self.n() });
        }
        self.check_state(state)?;
        Ok(self.apply_k_unchecked(i, state))
    }

    fn apply_k_unchecked(&self, i: usize, state: &ComponentState) -> ComplexMatrix {
        let rho_i = state.component(i);
        let mut out = commutator(&self.h_ops[i], rho_i) * (-I);
        for (key, r) in self.gains(i) {
            out += r * state.component(key.j) * r.adjoint();
        }
        out -= anticommutator(&self.loss[i], rho_i).scale(0.5);
        out
    }

    /// Right-hand side of the coupled master equation.
    pub fn rhs(&self, state: &ComponentState) -> Result<ComponentState> {
        self.check_state(state)?;
        ComponentState::new((0..self.n()).map(|i| self.apply_k_unchecked(i, state)).collect())
    }

    /// Coarse rate bound `Σ‖H^i‖ + Σ‖R‖²` (Frobenius norms).
    pub fn norm_bound(&self) -> f64 {
        let h: f64 = self.h_ops.iter().map(|h| h.norm()).sum();
        let r: f64 = self.jumps.values().map(|r| r.norm_squared()).sum();
        h + r
    }

    /// Step count satisfying `dt ≤ 0.1 / norm_bound`.
    pub fn suggested_steps(&self, t_max: f64) -> usize {
        let bound = self.norm_bound();
        if bound == 0.0 || t_max <= 0.0 {
            return 1;
        }
        (t_max * bound / 0.1).ceil().max(1.0) as usize
    }

    /// Ordinary Lindblad generator on the extended space.
    pub fn embed(&self) -> ExtendedLindblad {
        let n = self.n();
        let mut h_total = ComplexMatrix::zeros(self.dim_sys * n, self.dim_sys * n);
        for (i, h) in self.h_ops.iter().enumerate() {
            h_total += h.kronecker(&unit(n, i, i));
        }
        let ops = self.jumps.iter().map(|(key, r)| r.kronecker(&unit(n, key.i, key.j))).collect();
        ExtendedLindblad::new(self.dim_sys, n, h_total, ops).expect("embedding is well formed")
    }

    /// Largest max-norm over `i` of the constraint
    /// `i[H^i, C^i] + Σ_{jλ}(R^{ji†} C^j R^{ji} − ½{R^{ji†}R^{ji}, C^i})`.
    /// Zero means `Σ_i tr{C^i ρ_i}` is a constant of motion.
    pub fn conservation_defect(&self, cs: &RelevantConservedSet) -> Result<f64> {
        let c = cs.c_ops();
        if c.len() != self.n() {
            return Err(Error::Dimension { expected: self.n(), found: c.len() });
        }
        for op in c {
            ensure_dim(op, self.dim_sys)?;
        }
        let mut rows: Vec<ComplexMatrix> =
            (0..self.n()).map(|i| commutator(&self.h_ops[i], &c[i]) * I).collect();
        for (key, r) in &self.jumps {
            // R^{ji} with j = key.i feeds row i = key.j
            rows[key.j] += r.adjoint() * &c[key.i] * r;
        }
        let mut worst: f64 = 0.0;
        for (i, mut row) in rows.into_iter().enumerate() {
            row -= anticommutator(&self.loss[i], &c[i]).scale(0.5);
            worst = worst.max(max_norm(&row));
        }
        Ok(worst)
    }
}

/// Lindblad generator `L(ϱ) = −i[H, ϱ] + Σ_λ(S_λ ϱ S_λ† − ½{S_λ†S_λ, ϱ})` on
/// `H_S ⊗ C^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedLindblad {
    dim_sys: usize,
    n: usize,
    h_total: ComplexMatrix,
    lindblad_ops: Vec<ComplexMatrix>,
    loss: ComplexMatrix,
}

/// Zero threshold for auxiliary blocks when recovering component generators.
const BLOCK_ZERO: f64 = 1e-14;

impl ExtendedLindblad {
    pub fn new(dim_sys: usize, n: usize, h_total: ComplexMatrix, lindblad_ops: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = dim_sys * n;
        ensure_dim(&h_total, dim)?;
        let defect = hermiticity_defect(&h_total);
        if defect > TOL_HERM {
            return Err(Error::NotHermitian { defect });
        }
        let mut loss = ComplexMatrix::zeros(dim, dim);
        for s in &lindblad_ops {
            ensure_dim(s, dim)?;
            loss += s.adjoint() * s;
        }
        Ok(Self { dim_sys, n, h_total, lindblad_ops, loss })
    }

    pub fn dim(&self) -> usize {
        self.dim_sys * self.n
    }

    pub fn dim_sys(&self) -> usize {
        self.dim_sys
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h_total(&self) -> &ComplexMatrix {
        &self.h_total
    }

    pub fn lindblad_ops(&self) -> &[ComplexMatrix] {
        &self.lindblad_ops
    }

    /// `L(ϱ)`.
    pub fn apply(&self, varrho: &ComplexMatrix) -> Result<ComplexMatrix> {
        ensure_dim(varrho, self.dim())?;
        let mut out = commutator(&self.h_total, varrho) * (-I);
        for s in &self.lindblad_ops {
            out += s * varrho * s.adjoint();
        }
        out -= anticommutator(&self.loss, varrho).scale(0.5);
        Ok(out)
    }

    /// Matrix of `L` on column-stacked operators (dimension `dim²`).
    pub fn liouvillian(&self) -> ComplexMatrix {
        let id = identity(self.dim());
        let h = &self.h_total;
        let mut out = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-I);
        for s in &self.lindblad_ops {
            out += s.conjugate().kronecker(s);
        }
        out -= (id.kronecker(&self.loss) + self.loss.transpose().kronecker(&id)).scale(0.5);
        out
    }

    /// Largest max-norm of the off-diagonal auxiliary blocks `D^{ik}`, `i ≠ k`,
    /// of `L(ϱ)` with `ϱ` the block-diagonal embedding of `state`.
    pub fn block_defect(&self, state: &ComponentState) -> Result<f64> {
        if state.n() != self.n || state.dim_sys() != self.dim_sys {
            return Err(Error::Dimension { expected: self.dim(), found: state.n() * state.dim_sys() });
        }
        let out = self.apply(&state.to_extended())?;
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for k in 0..self.n {
                if i != k {
                    worst = worst.max(max_norm(&aux_block(&out, self.dim_sys, self.n, i, k)));
                }
            }
        }
        Ok(worst)
    }

    /// Recover the component generator when `H` is block diagonal and every
    /// Lindblad operator occupies a single auxiliary block `|i⟩⟨j|`.
    pub fn to_generalized(&self) -> Result<GeneralizedLindblad> {
        let (d, n) = (self.dim_sys, self.n);
        let mut h_ops = Vec::with_capacity(n);
        for i in 0..n {
            for k in 0..n {
                if i != k && max_norm(&aux_block(&self.h_total, d, n, i, k)) > BLOCK_ZERO {
                    return Err(Error::Contract(format!("Hamiltonian couples auxiliary levels {i} and {k}")));
                }
            }
            h_ops.push(aux_block(&self.h_total, d, n, i, i));
        }
        let mut counters: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut jumps = Vec::new();
        for (idx, s) in self.lindblad_ops.iter().enumerate() {
            let mut found = None;
            for i in 0..n {
                for j in 0..n {
                    let block = aux_block(s, d, n, i, j);
                    if max_norm(&block) > BLOCK_ZERO {
                        if found.is_some() {
                            return Err(Error::Contract(format!(
                                "Lindblad operator {idx} spans several auxiliary blocks"
                            )));
                        }
                        found = Some((i, j, block));
                    }
                }
            }
            if let Some((i, j, block)) = found {
                let lambda = counters.entry((i, j)).or_insert(0);
                jumps.push((JumpIndex::new(i, j, *lambda), block));
                *lambda += 1;
            }
        }
        GeneralizedLindblad::new(d, h_ops, jumps)
    }
}
