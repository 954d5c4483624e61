//! Two-level system coupled to an environment of two energy bands.
//!
//! The total Hamiltonian is `H = ΔE σ₊σ₋ + H_E + V` with lower-band levels at
//! `(δε/N₁)·n₁`, upper-band levels at `ΔE + (δε/N₂)·n₂` (`n = 1…N`) and
//! `V = λ Σ c(n₁,n₂) σ₊ ⊗ |n₁⟩⟨n₂| + h.c.` with complex Gaussian couplings.
//!
//! Environment basis: lower band first (indices `0..N₁`), then the upper band.
//! The system basis is excited-first, as everywhere in this crate.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::generator::{GeneralizedLindblad, JumpIndex, RelevantConservedSet};
use crate::operator::{
    eigenvalues_hermitian, eigh, ensure_dim, from_real_diagonal, hermiticity_defect, identity, kron, qubit,
    ComplexMatrix, DimPair, TOL_HERM, TOL_PSD,
};
use crate::projection::{band_projection, CorrelatedProjection};

/// Default cap on the total Hilbert-space dimension `2(N₁+N₂)`.
pub const DEFAULT_HILBERT_CAP: usize = 4096;

/// Model parameters; couplings are derived from `seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBandParams {
    pub delta_e: f64,
    pub delta_eps: f64,
    pub n1: usize,
    pub n2: usize,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for TwoBandParams {
    fn default() -> Self {
        Self { delta_e: 1.0, delta_eps: 0.5, n1: 60, n2: 60, lambda: 5e-4, seed: 0 }
    }
}

impl TwoBandParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_e > 0.0) || !self.delta_e.is_finite() {
            return Err(Error::Precondition("delta_e must be positive".into()));
        }
        if !(self.delta_eps > 0.0) || !self.delta_eps.is_finite() {
            return Err(Error::Precondition("delta_eps must be positive".into()));
        }
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::Precondition("bands need at least one level".into()));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Precondition("lambda must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn dim_env(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn dim_total(&self) -> usize {
        2 * self.dim_env()
    }

    /// `γ_{1,2} = 2πλ² N_{1,2} / δε`.
    pub fn rates(&self) -> Rates {
        let pref = 2.0 * core::f64::consts::PI * self.lambda * self.lambda / self.delta_eps;
        Rates { gamma1: pref * self.n1 as f64, gamma2: pref * self.n2 as f64 }
    }
}

/// Relaxation rates of the second-order effective equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl Rates {
    pub fn total(&self) -> f64 {
        self.gamma1 + self.gamma2
    }
}

/// A model realization: parameters plus sampled couplings `c(n₁, n₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBandModel {
    params: TwoBandParams,
    couplings: DMatrix<Complex64>,
}

/// i.i.d. complex Gaussian `n1 × n2` matrix with zero mean and `E|c|² = 1`
/// (real and imaginary parts independent with variance ½).
pub fn sample_couplings(n1: usize, n2: usize, seed: u64) -> DMatrix<Complex64> {
    sample_couplings_stream(n1, n2, seed, 0)
}

/// Couplings drawn from ChaCha stream `stream` of `seed`; realization `k`
/// of an ensemble uses stream `k`.
pub fn sample_couplings_stream(n1: usize, n2: usize, seed: u64, stream: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    // row-major fill so the layout does not depend on storage order
    let mut entries = Vec::with_capacity(n1 * n2);
    for _ in 0..n1 * n2 {
        let re = draw();
        let im = draw();
        entries.push(Complex64::new(re * s, im * s));
    }
    DMatrix::from_row_slice(n1, n2, &entries)
}

impl TwoBandModel {
    /// Realization 0 of `params`.
    pub fn new(params: TwoBandParams) -> Result<Self> {
        Self::realization(params, 0)
    }

    pub fn realization(params: TwoBandParams, k: u64) -> Result<Self> {
        params.validate()?;
        let couplings = sample_couplings_stream(params.n1, params.n2, params.seed, k);
        Ok(Self { params, couplings })
    }

    pub fn with_couplings(params: TwoBandParams, couplings: DMatrix<Complex64>) -> Result<Self> {
        params.validate()?;
        if couplings.shape() != (params.n1, params.n2) {
            return Err(Error::Dimension { expected: params.n1 * params.n2, found: couplings.len() });
        }
        Ok(Self { params, couplings })
    }

    pub fn params(&self) -> &TwoBandParams {
        &self.params
    }

    pub fn couplings(&self) -> &DMatrix<Complex64> {
        &self.couplings
    }

    pub fn dims(&self) -> DimPair {
        DimPair { dim_sys: 2, dim_env: self.params.dim_env() }
    }

    /// Band projectors `Π₁`, `Π₂` on the environment.
    pub fn band_projectors(&self) -> [ComplexMatrix; 2] {
        band_projectors(&self.params)
    }

    /// Environment level energies (lower band first).
    pub fn level_energies(&self) -> Vec<f64> {
        let p = &self.params;
        let lower = (1..=p.n1).map(|n| p.delta_eps / p.n1 as f64 * n as f64);
        let upper = (1..=p.n2).map(|n| p.delta_e + p.delta_eps / p.n2 as f64 * n as f64);
        lower.chain(upper).collect()
    }

    /// Total Hamiltonian on `C² ⊗ C^{N₁+N₂}`.
    pub fn hamiltonian(&self) -> ComplexMatrix {
        let p = &self.params;
        let dims = self.dims();
        let mut h = ComplexMatrix::zeros(dims.total(), dims.total());
        let energies = self.level_energies();
        for s in 0..2 {
            let sys = if s == 0 { p.delta_e } else { 0.0 };
            for (e, en) in energies.iter().enumerate() {
                let k = dims.index(s, e);
                h[(k, k)] = Complex64::new(sys + en, 0.0);
            }
        }
        // σ₊ ⊗ |n₁⟩⟨n₂| maps |0, n₂⟩ to |1, n₁⟩
        for n1 in 0..p.n1 {
            for n2 in 0..p.n2 {
                let v = self.couplings[(n1, n2)] * p.lambda;
                let row = dims.index(0, n1);
                let col = dims.index(1, p.n1 + n2);
                h[(row, col)] += v;
                h[(col, row)] += v.conj();
            }
        }
        h
    }

    /// `C = σ₊σ₋ ⊗ I_E + I_S ⊗ Π₂`.
    pub fn excitation_operator(&self) -> ComplexMatrix {
        excitation_operator(&self.params)
    }

    /// Basis states grouped by excitation number 0, 1, 2.
    pub fn excitation_sectors(&self) -> Sectors {
        let dims = self.dims();
        let mut sectors = [Vec::new(), Vec::new(), Vec::new()];
        for s in 0..2 {
            for e in 0..dims.dim_env {
                let c = usize::from(s == 0) + usize::from(e >= self.params.n1);
                sectors[c].push(dims.index(s, e));
            }
        }
        for sector in sectors.iter_mut() {
            sector.sort_unstable();
        }
        Sectors { sectors }
    }
}

fn band_projectors(p: &TwoBandParams) -> [ComplexMatrix; 2] {
    let de = p.dim_env();
    let lower: Vec<f64> = (0..de).map(|e| if e < p.n1 { 1.0 } else { 0.0 }).collect();
    let upper: Vec<f64> = lower.iter().map(|x| 1.0 - x).collect();
    [from_real_diagonal(&lower), from_real_diagonal(&upper)]
}

fn excitation_operator(p: &TwoBandParams) -> ComplexMatrix {
    let [_, pi2] = band_projectors(p);
    let de = p.dim_env();
    kron(&qubit::excited(), &identity(de)).expect("square") + kron(&identity(2), &pi2).expect("square")
}

/// Partition of the product basis by eigenvalue of `C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sectors {
    sectors: [Vec<usize>; 3],
}

impl Sectors {
    /// Basis indices with excitation number `c`.
    pub fn indices(&self, c: usize) -> &[usize] {
        &self.sectors[c]
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.sectors[0].len(), self.sectors[1].len(), self.sectors[2].len()]
    }

    /// Orthogonal projector onto sector `c` in the full space.
    pub fn projector(&self, c: usize, dim: usize) -> ComplexMatrix {
        let mut diag = vec![0.0; dim];
        for &k in &self.sectors[c] {
            diag[k] = 1.0;
        }
        from_real_diagonal(&diag)
    }
}

/// Observables recorded by the exact propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTrajectory {
    pub times: Vec<f64>,
    /// `⟨1|ρ_S(t)|1⟩`
    pub p_e: Vec<f64>,
    /// `tr{Π₁ ρ(t)}`
    pub tr_rho1: Vec<f64>,
    /// `tr{Π₂ ρ(t)}`
    pub tr_rho2: Vec<f64>,
    /// `tr{C ρ(t)}`
    pub excitation: Vec<f64>,
}

impl ExactTrajectory {
    pub fn total_trace(&self) -> Vec<f64> {
        self.tr_rho1.iter().zip(&self.tr_rho2).map(|(a, b)| a + b).collect()
    }
}

fn check_initial_components(rho1: &ComplexMatrix, rho2: &ComplexMatrix) -> Result<()> {
    for rho in [rho1, rho2] {
        ensure_dim(rho, 2)?;
        let defect = hermiticity_defect(rho);
        if defect > TOL_HERM {
            return Err(Error::NotHermitian { defect });
        }
        if eigenvalues_hermitian(rho)?.min() < -TOL_PSD {
            return Err(Error::Precondition("initial component is not positive".into()));
        }
    }
    let tr = rho1.trace().re + rho2.trace().re;
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(alloc::format!("initial components have total trace {tr}")));
    }
    Ok(())
}

/// `ρ(0) = ρ₁ ⊗ Π₁/N₁ + ρ₂ ⊗ Π₂/N₂`.
pub fn initial_state(params: &TwoBandParams, rho1: &ComplexMatrix, rho2: &ComplexMatrix) -> Result<ComplexMatrix> {
    let [pi1, pi2] = band_projectors(params);
    Ok(kron(rho1, &pi1.unscale(params.n1 as f64))? + kron(rho2, &pi2.unscale(params.n2 as f64))?)
}

/// Time traces of diagonal observables under `ρ(t) = e^{-iHt} ρ₀ e^{iHt}`.
///
/// With `H = V diag(w) V†`, `tr{O ρ(t)} = Σ_{kl} Õ_{lk} ρ̃_{kl} e^{-i(w_k − w_l)t}`.
fn propagate_diagonal_observables(
    h: &ComplexMatrix,
    rho0: &ComplexMatrix,
    observables: &[DVector<f64>],
    times: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let (w, v) = eigh(h)?;
    let dim = w.len();
    let v_adj = v.adjoint();
    let rho_t = &v_adj * rho0 * &v;
    let obs_t: Vec<ComplexMatrix> = observables
        .iter()
        .map(|o| {
            let scaled = ComplexMatrix::from_fn(dim, dim, |r, c| v[(r, c)] * o[r]);
            // transpose so both factors are indexed (k, l)
            (&v_adj * scaled).transpose()
        })
        .collect();
    let mut out = vec![Vec::with_capacity(times.len()); observables.len()];
    let mut phase = vec![Complex64::new(0.0, 0.0); dim];
    let mut weighted = ComplexMatrix::zeros(dim, dim);
    for &t in times {
        for (p, &wk) in phase.iter_mut().zip(w.iter()) {
            let (s, c) = (wk * t).sin_cos();
            *p = Complex64::new(c, -s);
        }
        for l in 0..dim {
            let pl = phase[l].conj();
            for k in 0..dim {
                weighted[(k, l)] = rho_t[(k, l)] * phase[k] * pl;
            }
        }
        for (series, o) in out.iter_mut().zip(&obs_t) {
            let val: Complex64 = o.iter().zip(weighted.iter()).map(|(a, b)| a * b).sum();
            series.push(val.re);
        }
    }
    Ok(out)
}

fn diagonal_observables(params: &TwoBandParams, indices: &[usize]) -> Vec<DVector<f64>> {
    let de = params.dim_env();
    let excited = |k: usize| k / de == 0;
    let lower = |k: usize| k % de < params.n1;
    let p_e = DVector::from_iterator(indices.len(), indices.iter().map(|&k| f64::from(u8::from(excited(k)))));
    let tr1 = DVector::from_iterator(indices.len(), indices.iter().map(|&k| f64::from(u8::from(lower(k)))));
    let tr2 = DVector::from_iterator(indices.len(), indices.iter().map(|&k| f64::from(u8::from(!lower(k)))));
    let c = DVector::from_iterator(
        indices.len(),
        indices.iter().map(|&k| f64::from(u8::from(excited(k)) + u8::from(!lower(k)))),
    );
    vec![p_e, tr1, tr2, c]
}

fn collect(times: &[f64], series: Vec<Vec<f64>>, rho1: &ComplexMatrix, rho2: &ComplexMatrix) -> ExactTrajectory {
    let mut it = series.into_iter();
    let mut traj = ExactTrajectory {
        times: times.to_vec(),
        p_e: it.next().unwrap_or_default(),
        tr_rho1: it.next().unwrap_or_default(),
        tr_rho2: it.next().unwrap_or_default(),
        excitation: it.next().unwrap_or_default(),
    };
    // At t = 0 the observables follow from the components without summing
    // N copies of 1/N, so e.g. p_e(0) = 1 holds exactly for (|1⟩⟨1|, 0).
    let p_e = rho1[(0, 0)].re + rho2[(0, 0)].re;
    let (tr1, tr2) = (rho1.trace().re, rho2.trace().re);
    for (k, _) in times.iter().enumerate().filter(|(_, &t)| t == 0.0) {
        traj.p_e[k] = p_e;
        traj.tr_rho1[k] = tr1;
        traj.tr_rho2[k] = tr2;
        traj.excitation[k] = p_e + tr2;
    }
    traj
}

fn sub_matrix(m: &ComplexMatrix, idx: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Exact unitary dynamics from the band-correlated initial state, propagated
/// sector by sector of the excitation number.
pub fn exact_evolve(
    model: &TwoBandModel,
    rho1_0: &ComplexMatrix,
    rho2_0: &ComplexMatrix,
    times: &[f64],
    size_cap: usize,
) -> Result<ExactTrajectory> {
    let params = model.params();
    if params.dim_total() > size_cap {
        return Err(Error::SizeCap { size: params.dim_total(), cap: size_cap });
    }
    check_initial_components(rho1_0, rho2_0)?;
    let h = model.hamiltonian();
    let rho0 = initial_state(params, rho1_0, rho2_0)?;
    let sectors = model.excitation_sectors();
    let mut totals = vec![vec![0.0; times.len()]; 4];
    for c in 0..3 {
        let idx = sectors.indices(c);
        if idx.is_empty() {
            continue;
        }
        let series = propagate_diagonal_observables(
            &sub_matrix(&h, idx),
            &sub_matrix(&rho0, idx),
            &diagonal_observables(params, idx),
            times,
        )?;
        for (acc, s) in totals.iter_mut().zip(series) {
            for (a, x) in acc.iter_mut().zip(s) {
                *a += x;
            }
        }
    }
    Ok(collect(times, totals, rho1_0, rho2_0))
}

/// Same observables as [`exact_evolve`] from one eigendecomposition of the
/// full Hamiltonian, ignoring the sector structure.
pub fn exact_evolve_dense(
    model: &TwoBandModel,
    rho1_0: &ComplexMatrix,
    rho2_0: &ComplexMatrix,
    times: &[f64],
    size_cap: usize,
) -> Result<ExactTrajectory> {
    let params = model.params();
    if params.dim_total() > size_cap {
        return Err(Error::SizeCap { size: params.dim_total(), cap: size_cap });
    }
    check_initial_components(rho1_0, rho2_0)?;
    let all: Vec<usize> = (0..params.dim_total()).collect();
    let series = propagate_diagonal_observables(
        &model.hamiltonian(),
        &initial_state(params, rho1_0, rho2_0)?,
        &diagonal_observables(params, &all),
        times,
    )?;
    Ok(collect(times, series, rho1_0, rho2_0))
}

/// Mean and standard error (`s / √n`, sample standard deviation `s`).
/// A single sample has infinite standard error.
pub fn mean_and_std_err(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::INFINITY);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::INFINITY);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Ensemble statistics of the exact dynamics over coupling realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAverage {
    pub times: Vec<f64>,
    pub realizations: usize,
    pub p_e_mean: Vec<f64>,
    pub p_e_std_err: Vec<f64>,
    pub tr_rho1_mean: Vec<f64>,
    pub tr_rho2_mean: Vec<f64>,
}

impl EnsembleAverage {
    /// Reduce per-realization trajectories, given in realization order.
    pub fn from_realizations(runs: &[ExactTrajectory]) -> Result<Self> {
        let first = runs.first().ok_or_else(|| Error::Precondition("no realizations".into()))?;
        let nt = first.times.len();
        if runs.iter().any(|r| r.times != first.times) {
            return Err(Error::Precondition("realizations use different time grids".into()));
        }
        let column = |f: &dyn Fn(&ExactTrajectory) -> &Vec<f64>, t: usize| -> Vec<f64> {
            runs.iter().map(|r| f(r)[t]).collect()
        };
        let mut p_e_mean = Vec::with_capacity(nt);
        let mut p_e_std_err = Vec::with_capacity(nt);
        let mut tr_rho1_mean = Vec::with_capacity(nt);
        let mut tr_rho2_mean = Vec::with_capacity(nt);
        for t in 0..nt {
            let (m, se) = mean_and_std_err(&column(&|r| &r.p_e, t));
            p_e_mean.push(m);
            p_e_std_err.push(se);
            tr_rho1_mean.push(mean_and_std_err(&column(&|r| &r.tr_rho1, t)).0);
            tr_rho2_mean.push(mean_and_std_err(&column(&|r| &r.tr_rho2, t)).0);
        }
        Ok(Self { times: first.times.clone(), realizations: runs.len(), p_e_mean, p_e_std_err, tr_rho1_mean, tr_rho2_mean })
    }
}

/// Exact dynamics of realization `k`.
pub fn exact_realization(
    params: &TwoBandParams,
    k: u64,
    rho1_0: &ComplexMatrix,
    rho2_0: &ComplexMatrix,
    times: &[f64],
    size_cap: usize,
) -> Result<ExactTrajectory> {
    let model = TwoBandModel::realization(*params, k)?;
    exact_evolve(&model, rho1_0, rho2_0, times, size_cap)
}

/// Sequential ensemble average over realizations `0..n_realizations`.
pub fn ensemble_average(
    params: &TwoBandParams,
    n_realizations: usize,
    rho1_0: &ComplexMatrix,
    rho2_0: &ComplexMatrix,
    times: &[f64],
    size_cap: usize,
) -> Result<EnsembleAverage> {
    if n_realizations == 0 {
        return Err(Error::Precondition("need at least one realization".into()));
    }
    let runs = (0..n_realizations as u64)
        .map(|k| exact_realization(params, k, rho1_0, rho2_0, times, size_cap))
        .collect::<Result<Vec<_>>>()?;
    EnsembleAverage::from_realizations(&runs)
}

/// Effective two-component generator: `H^i = 0`, `R^{12} = √γ₁ σ₊`,
/// `R^{21} = √γ₂ σ₋` (components 0 and 1 here).
pub fn tcl2_generator(params: &TwoBandParams) -> Result<(GeneralizedLindblad, Rates)> {
    params.validate()?;
    let rates = params.rates();
    let gen = rates_generator(rates)?;
    Ok((gen, rates))
}

/// The effective generator for given rates.
pub fn rates_generator(rates: Rates) -> Result<GeneralizedLindblad> {
    if !(rates.gamma1 >= 0.0) || !(rates.gamma2 >= 0.0) {
        return Err(Error::Precondition("rates must be nonnegative".into()));
    }
    GeneralizedLindblad::new(
        2,
        vec![ComplexMatrix::zeros(2, 2), ComplexMatrix::zeros(2, 2)],
        vec![
            (JumpIndex::new(0, 1, 0), qubit::sigma_plus().scale(rates.gamma1.sqrt())),
            (JumpIndex::new(1, 0, 0), qubit::sigma_minus().scale(rates.gamma2.sqrt())),
        ],
    )
}

/// Closed-form excited population of the effective equations:
/// `p_e(t) = p_∞ + (p_e(0) − p_∞) e^{−(γ₁+γ₂)t}` with
/// `p_∞ = [γ₁ p_e(0) + γ₂⟨1|ρ₂(0)|1⟩ + γ₁⟨0|ρ₂(0)|0⟩] / (γ₁+γ₂)`.
pub fn pe_analytic(rates: Rates, rho1_0: &ComplexMatrix, rho2_0: &ComplexMatrix, t: f64) -> f64 {
    let p0 = rho1_0[(0, 0)].re + rho2_0[(0, 0)].re;
    let total = rates.total();
    if total == 0.0 {
        return p0;
    }
    let source = rates.gamma1 * p0 + rates.gamma2 * rho2_0[(0, 0)].re + rates.gamma1 * rho2_0[(1, 1)].re;
    let asymptote = source / total;
    asymptote + (p0 - asymptote) * (-total * t).exp()
}

/// Band projection with `ρ₀ = I_E / (N₁+N₂)`, i.e. `B_i = Π_i / N_i`.
pub fn two_band_projection(params: &TwoBandParams) -> Result<CorrelatedProjection> {
    params.validate()?;
    let de = params.dim_env();
    band_projection(2, &band_projectors(params), &identity(de).unscale(de as f64))
}

/// `{σ₊σ₋, σ₊σ₋ + I}`: excitation number in component form.
pub fn excitation_conserved_set() -> RelevantConservedSet {
    RelevantConservedSet::new(vec![qubit::excited(), qubit::excited() + identity(2)]).expect("Hermitian")
}

/// The excitation number operator for `params`.
pub fn excitation_observable(params: &TwoBandParams) -> ComplexMatrix {
    excitation_operator(params)
}
