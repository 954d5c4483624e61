//! Subcommand implementations. Each returns `Ok(true)` on pass, `Ok(false)`
//! on a quantitative failure and `Err` for usage or configuration errors.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use corrproj::evolution::{evolve_expm_grid, evolve_rk, Trajectory};
use corrproj::operator::ComplexMatrix;
use corrproj::state::ComponentState;
use corrproj::twoband::{
    exact_realization, excitation_conserved_set, pe_analytic, tcl2_generator, EnsembleAverage, ExactTrajectory,
    Rates, TwoBandParams,
};
use corrproj::Error;
use rayon::prelude::*;

use crate::config::{read_json, Method, ModelConfig, ProjectionConfig, RunConfig};
use crate::table::{column_deviation, trajectory_table, Table};

/// Size guard shared by the exact two-band oracle (total Hilbert-space
/// dimension) and the exponential propagator (vectorized extended dimension).
pub const SIZE_CAP_VAR: &str = "CORRPROJ_SIZE_CAP";

pub fn size_cap() -> Result<usize> {
    match std::env::var(SIZE_CAP_VAR) {
        Ok(v) => v.trim().parse().with_context(|| format!("{SIZE_CAP_VAR}={v:?} is not a nonnegative integer")),
        Err(_) => Ok(corrproj::evolution::DEFAULT_SIZE_CAP),
    }
}

pub fn validate(config: &Path, tol: Option<f64>) -> Result<bool> {
    let cfg: ProjectionConfig = read_json(config)?;
    let p = cfg.build()?;
    let r = p.validate();
    println!("pairs                  {}", p.len());
    println!("dims                   {} x {}", p.dims().dim_sys, p.dims().dim_env);
    println!("biorthogonality_defect {:e}", r.biorthogonality_defect);
    println!("trace_defect           {:e}", r.trace_defect);
    println!("cp_min_eigenvalue      {:e}", r.cp_min_eigenvalue);
    println!("hermiticity_defect     {:e}", r.hermiticity_defect);
    println!("idempotence_defect     {:e}", r.idempotence_defect);
    let passed = match tol {
        None => r.passed,
        Some(tol) => {
            r.biorthogonality_defect <= tol
                && r.trace_defect <= tol
                && r.hermiticity_defect <= tol
                && r.idempotence_defect <= tol
                && r.cp_min_eigenvalue >= -tol
        }
    };
    println!("passed                 {passed}");
    Ok(passed)
}

pub struct EvolveArgs<'a> {
    pub config: &'a Path,
    pub out: Option<&'a Path>,
    pub t_max: Option<f64>,
    pub steps: Option<usize>,
    pub method: Option<Method>,
}

fn summarize(traj: &Trajectory) {
    let last = traj.diagnostics().last().expect("nonempty trajectory");
    eprintln!(
        "points {}  final t {}  min eigenvalue {:e}  total trace drift {:e}  flagged points {}",
        traj.len(),
        traj.times().last().unwrap(),
        traj.min_eigenvalue(),
        traj.trace_drift(),
        traj.diagnostics().iter().filter(|d| d.flagged).count()
    );
    for (k, c) in last.conserved.iter().enumerate() {
        let drift = traj.diagnostics().iter().map(|d| (d.conserved[k] - c).abs()).fold(0.0, f64::max);
        eprintln!("conserved_{} final {c:e}  drift {drift:e}", k + 1);
    }
}

fn propagate(
    method: Method,
    run_gen: &corrproj::generator::GeneralizedLindblad,
    init: &ComponentState,
    t_max: f64,
    steps: usize,
    conserved: &[corrproj::generator::RelevantConservedSet],
) -> Result<Option<Trajectory>> {
    let res = match method {
        Method::Rk => evolve_rk(run_gen, init, t_max, steps, conserved),
        Method::Expm => evolve_expm_grid(run_gen, init, t_max, steps, conserved, size_cap()?),
    };
    match res {
        Ok(traj) => Ok(Some(traj)),
        Err(Error::Divergence { step }) => {
            eprintln!("integration diverged at step {step}");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn evolve(args: EvolveArgs<'_>) -> Result<bool> {
    let cfg: RunConfig = read_json(args.config)?;
    let run = cfg.build()?;
    let t_max = args.t_max.unwrap_or(run.t_max);
    let steps = args.steps.unwrap_or(run.steps);
    let method = args.method.unwrap_or(run.method);
    let Some(traj) = propagate(method, &run.generator, &run.initial, t_max, steps, &run.conserved)? else {
        return Ok(false);
    };
    trajectory_table(&traj).emit(args.out)?;
    summarize(&traj);
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TwoBandMode {
    Exact,
    Tcl2,
    Compare,
}

pub struct TwoBandArgs<'a> {
    pub mode: TwoBandMode,
    pub config: &'a Path,
    pub out: Option<&'a Path>,
    pub t_max: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub realizations: Option<usize>,
    pub tol: Option<f64>,
}

/// Default maximum deviation accepted by `twoband compare`.
pub const TWOBAND_TOL: f64 = 0.02;

struct Experiment {
    params: TwoBandParams,
    rates: Rates,
    realizations: usize,
    rho1: ComplexMatrix,
    rho2: ComplexMatrix,
    times: Vec<f64>,
}

impl Experiment {
    fn load(args: &TwoBandArgs<'_>) -> Result<Self> {
        let mut cfg: ModelConfig = read_json(args.config)?;
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        if let Some(n) = args.realizations {
            cfg.realizations = n;
        }
        ensure!(cfg.realizations >= 1, "realizations must be at least 1");
        let params = cfg.params()?;
        let rates = params.rates();
        let (rho1, rho2) = cfg.initial_components()?;
        ComponentState::new(vec![rho1.clone(), rho2.clone()])?;
        let t_max = match args.t_max {
            Some(t) => t,
            None if rates.total() > 0.0 => 5.0 / rates.total(),
            None => bail!("--t-max is required when both rates vanish"),
        };
        ensure!(t_max.is_finite() && t_max >= 0.0, "t_max must be finite and nonnegative");
        let steps = args.steps.unwrap_or(100);
        let times = if steps == 0 {
            vec![0.0]
        } else {
            (0..=steps).map(|k| t_max * k as f64 / steps as f64).collect()
        };
        Ok(Self { params, rates, realizations: cfg.realizations, rho1, rho2, times })
    }

    /// Exact ensemble; realizations run in parallel and are reduced in index order.
    fn exact(&self) -> Result<EnsembleAverage> {
        let cap = size_cap()?;
        if self.params.dim_total() > cap {
            bail!(
                "Hilbert-space dimension {} exceeds the size cap {cap} (set {SIZE_CAP_VAR} to raise it)",
                self.params.dim_total()
            );
        }
        let runs: Vec<ExactTrajectory> = (0..self.realizations as u64)
            .into_par_iter()
            .map(|k| exact_realization(&self.params, k, &self.rho1, &self.rho2, &self.times, cap))
            .collect::<Result<_, _>>()?;
        Ok(EnsembleAverage::from_realizations(&runs)?)
    }

    fn tcl2(&self) -> Result<Option<Trajectory>> {
        let (gen, _) = tcl2_generator(&self.params)?;
        let init = ComponentState::new(vec![self.rho1.clone(), self.rho2.clone()])?;
        let steps = self.times.len() - 1;
        let t_max = *self.times.last().unwrap();
        propagate(Method::Expm, &gen, &init, t_max, steps, &[excitation_conserved_set()])
    }
}

fn ensemble_table(avg: &EnsembleAverage) -> Table {
    let header = ["t", "p_e", "p_e_std_err", "tr_rho_1", "tr_rho_2"].map(String::from).to_vec();
    let mut table = Table::new(header);
    for k in 0..avg.times.len() {
        table.push(vec![avg.times[k], avg.p_e_mean[k], avg.p_e_std_err[k], avg.tr_rho1_mean[k], avg.tr_rho2_mean[k]]);
    }
    table
}

pub fn twoband(args: TwoBandArgs<'_>) -> Result<bool> {
    let exp = Experiment::load(&args)?;
    match args.mode {
        TwoBandMode::Exact => {
            let avg = exp.exact()?;
            ensemble_table(&avg).emit(args.out)?;
            eprintln!("realizations {}  gamma1 {:e}  gamma2 {:e}", avg.realizations, exp.rates.gamma1, exp.rates.gamma2);
            Ok(true)
        }
        TwoBandMode::Tcl2 => {
            let Some(traj) = exp.tcl2()? else { return Ok(false) };
            trajectory_table(&traj).emit(args.out)?;
            summarize(&traj);
            Ok(true)
        }
        TwoBandMode::Compare => {
            let tol = args.tol.unwrap_or(TWOBAND_TOL);
            let avg = exp.exact()?;
            let header = ["t", "p_e_exact", "p_e_std_err", "p_e_tcl2", "deviation"].map(String::from).to_vec();
            let mut table = Table::new(header);
            let (mut max_dev, mut outside) = (0.0f64, 0usize);
            for (k, &t) in exp.times.iter().enumerate() {
                let tcl2 = pe_analytic(exp.rates, &exp.rho1, &exp.rho2, t);
                let dev = (avg.p_e_mean[k] - tcl2).abs();
                max_dev = max_dev.max(dev);
                if !(dev <= 3.0 * avg.p_e_std_err[k] + 1e-12) {
                    outside += 1;
                }
                table.push(vec![t, avg.p_e_mean[k], avg.p_e_std_err[k], tcl2, dev]);
            }
            if let Some(out) = args.out {
                table.emit(Some(out))?;
            }
            let passed = max_dev <= tol && outside == 0;
            println!("realizations           {}", avg.realizations);
            println!("gamma1                 {:e}", exp.rates.gamma1);
            println!("gamma2                 {:e}", exp.rates.gamma2);
            println!("max_deviation          {max_dev:e}");
            println!("tolerance              {tol:e}");
            println!("beyond_3_std_err       {outside} of {}", exp.times.len());
            println!("passed                 {passed}");
            Ok(passed)
        }
    }
}

pub fn compare(a: &Path, b: &Path, column: &str, tol: f64) -> Result<bool> {
    let (ta, tb) = (Table::read(a)?, Table::read(b)?);
    let dev = column_deviation(&ta, &tb, column)?;
    let passed = dev <= tol;
    println!("column {column}  max deviation {dev:e}  tolerance {tol:e}  passed {passed}");
    Ok(passed)
}
