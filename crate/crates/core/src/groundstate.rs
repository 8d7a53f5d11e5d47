//! Ground states of `gamma Lap^2 u - mu Lap u + omega u = |u|^(2 sigma) u`
//! by a stabilized spectral fixed-point (Petviashvili) iteration, and their
//! certification against the Nehari/Pohozaev/virial identities.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, SpectralField};
use crate::functionals::{evaluate_all, FunctionalReport};
use crate::grid::Grid;
use crate::num::{norm_sq, Real};
use crate::params::PhysicalParams;

/// Initial iterate of the solver.
#[derive(Clone, Debug)]
pub enum InitialGuess<T: Real> {
    /// `amplitude * exp(-|x|^2 / (2 width^2))`
    Gaussian { width: T, amplitude: T },
    Provided(Field<T>),
}

#[derive(Clone, Debug)]
pub struct SolverConfig<T: Real> {
    pub max_iters: usize,
    /// Target for `||L u - |u|^(2 sigma) u||_2 / ||L u||_2`.
    pub residual_tol: T,
    /// Exponent of the stabilizing factor; `None` uses `(2 sigma + 1) / (2 sigma)`.
    pub stabilizer_exponent: Option<T>,
    pub initial_guess: InitialGuess<T>,
    pub grid: Grid<T>,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(grid: Grid<T>) -> Self {
        SolverConfig {
            max_iters: 5000,
            residual_tol: T::lit(1e-10),
            stabilizer_exponent: None,
            initial_guess: InitialGuess::Gaussian {
                width: T::one(),
                amplitude: T::one(),
            },
            grid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > T::zero()) {
            return Err(Error::Config("residual_tol must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if let InitialGuess::Gaussian { width, .. } = &self.initial_guess {
            if !(*width > T::zero()) {
                return Err(Error::Config("initial Gaussian width must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct GroundStateResult<T: Real> {
    /// Real radial profile, positive at the origin.
    pub profile: Field<T>,
    pub residual: T,
    pub report: FunctionalReport<T>,
    /// `(|I|, |P|, |Q|)` over `gamma ||Lap u||^2 + omega ||u||^2`.
    pub identity_defects: [T; 3],
    pub iterations: usize,
    pub converged: bool,
}

/// Plateau length after which the iteration is declared stagnant.
const STAGNATION_WINDOW: usize = 50;

/// Linear symbol `gamma |k|^4 + mu |k|^2 + omega`.
fn symbol<T: Real>(p: &PhysicalParams<T>, k2: T) -> T {
    p.gamma * k2 * k2 + p.mu * k2 + p.omega
}

fn nonlinearity<T: Real>(u: &Field<T>, sigma: T) -> Field<T> {
    u.map(|z| z * norm_sq(z).powf(sigma))
}

/// Relative residual of the stationary equation, computed spectrally.
pub fn stationary_residual<T: Real>(u: &Field<T>, p: &PhysicalParams<T>) -> T {
    let spec = u.forward();
    let nl = nonlinearity(u, p.sigma).forward();
    residual_from_spectra(&spec, &nl, p)
}

fn residual_from_spectra<T: Real>(u: &SpectralField<T>, nl: &SpectralField<T>, p: &PhysicalParams<T>) -> T {
    let k2 = u.grid().k_sq();
    let mut num = T::zero();
    let mut den = T::zero();
    for ((c, n), &k) in u.coeffs().iter().zip(nl.coeffs()).zip(k2) {
        let lu = c * symbol(p, k);
        num = num + norm_sq(lu - n);
        den = den + norm_sq(lu);
    }
    (num / den.max(T::min_positive_value())).sqrt()
}

/// One application of the stabilized fixed-point map; returns the new iterate.
pub fn fixed_point_map<T: Real>(u: &Field<T>, p: &PhysicalParams<T>, exponent: T) -> Field<T> {
    let spec = u.forward();
    let nl = nonlinearity(u, p.sigma).forward();
    fixed_point_from_spectra(&spec, &nl, p, exponent).0.into_field()
}

/// Returns the next spectrum and the stabilizing factor `<L u, u> / <N(u), u>`.
fn fixed_point_from_spectra<T: Real>(
    u: &SpectralField<T>,
    nl: &SpectralField<T>,
    p: &PhysicalParams<T>,
    exponent: T,
) -> (SpectralField<T>, T) {
    let k2 = u.grid().k_sq();
    let mut lin = T::zero();
    let mut non = T::zero();
    for ((c, n), &k) in u.coeffs().iter().zip(nl.coeffs()).zip(k2) {
        lin = lin + symbol(p, k) * norm_sq(*c);
        non = non + (n * c.conj()).re;
    }
    let m = lin / non;
    let factor = m.abs().powf(exponent);
    let coeffs: Vec<Complex<T>> = nl
        .coeffs()
        .iter()
        .zip(k2)
        .map(|(n, &k)| n * (factor / symbol(p, k)))
        .collect();
    (
        SpectralField::from_coeffs(u.grid(), coeffs).expect("same grid"),
        m,
    )
}

fn real_field<T: Real>(f: Field<T>) -> Field<T> {
    f.map(|z| Complex::new(z.re, T::zero()))
}

/// Runs the stabilized fixed-point iteration from `cfg.initial_guess`.
pub fn solve<T: Real>(p: &PhysicalParams<T>, cfg: &SolverConfig<T>) -> Result<GroundStateResult<T>> {
    p.validate()?;
    cfg.validate()?;
    if cfg.grid.dim() != p.dim {
        return Err(Error::Structural(format!(
            "grid dimension {} differs from N = {}",
            cfg.grid.dim(),
            p.dim
        )));
    }
    if p.radial_symmetry_guaranteed() {
        log::info!("mu >= 2 sqrt(gamma omega): every ground state is radially symmetric for these parameters");
    }
    let exponent = cfg.stabilizer_exponent.unwrap_or_else(|| {
        (T::lit(2.0) * p.sigma + T::one()) / (T::lit(2.0) * p.sigma)
    });
    let mut u = match &cfg.initial_guess {
        InitialGuess::Gaussian { width, amplitude } => {
            let c = T::one() / (T::lit(2.0) * *width * *width);
            let a = *amplitude;
            Field::from_radial(&cfg.grid, |r| a * (-c * r * r).exp())
        }
        InitialGuess::Provided(f) => {
            f.check_grid(&cfg.grid)?;
            real_field(f.clone())
        }
    };
    u.check_finite()?;
    let initial_norm = u.norm_sq().sqrt();
    if !(initial_norm > T::zero()) {
        return Err(Error::Degenerate("initial guess is identically zero".into()));
    }

    let mut best = T::infinity();
    let mut best_at = 0usize;
    let mut residual;
    let mut iterations = 0usize;
    let mut converged = false;
    // The iterate is carried as a spectrum so that the residual is not
    // polluted by transform round-off amplified by the |k|^4 symbol.
    let mut spec = u.forward();
    loop {
        let nl = nonlinearity(&u, p.sigma).forward();
        residual = residual_from_spectra(&spec, &nl, p);
        if !residual.is_finite() {
            return Err(Error::Poisoned(format!("residual became {residual} at iteration {iterations}")));
        }
        if residual <= cfg.residual_tol {
            converged = true;
            break;
        }
        if residual < best * T::lit(0.99) {
            best = residual;
            best_at = iterations;
        } else if iterations - best_at >= STAGNATION_WINDOW {
            log::warn!(
                "fixed-point iteration stagnated at residual {:.3e} after {iterations} iterations",
                residual.as_f64()
            );
            break;
        }
        if iterations >= cfg.max_iters {
            break;
        }
        spec = fixed_point_from_spectra(&spec, &nl, p, exponent).0;
        u = real_field(spec.inverse());
        iterations += 1;
        let norm = u.norm_sq().sqrt();
        if !(norm >= T::lit(1e-12) * initial_norm) {
            return Err(Error::Degenerate(format!(
                "iterate collapsed to zero (||u|| = {:.3e}) at iteration {iterations}",
                norm.as_f64()
            )));
        }
    }
    // global phase: positive at the origin
    let center = cfg.grid.ravel(&vec![cfg.grid.points_per_axis() / 2; cfg.grid.dim()]);
    if u.values()[center].re < T::zero() {
        u = u.scale(-T::one());
    }
    let report = evaluate_all(&u, p)?;
    let identity_defects = report.identity_defects(p);
    Ok(GroundStateResult {
        profile: u,
        residual,
        report,
        identity_defects,
        iterations,
        converged,
    })
}

/// Solves from several initial guesses concurrently and keeps the converged
/// output with the smallest action. Returns every run's outcome alongside.
pub fn solve_multistart<T: Real>(
    p: &PhysicalParams<T>,
    cfg: &SolverConfig<T>,
    guesses: &[InitialGuess<T>],
) -> Result<(GroundStateResult<T>, Vec<Result<GroundStateResult<T>>>)> {
    let runs: Vec<Result<GroundStateResult<T>>> = guesses
        .par_iter()
        .map(|g| {
            let mut c = cfg.clone();
            c.initial_guess = g.clone();
            solve(p, &c)
        })
        .collect();
    let best = runs
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .filter(|r| r.converged)
        .min_by(|a, b| {
            a.report
                .action
                .partial_cmp(&b.report.action)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .cloned();
    match best {
        Some(b) => Ok((b, runs)),
        None => Err(Error::Precondition("no multi-start run converged".into())),
    }
}

/// Default multi-start family: Gaussians with widths and amplitudes spread around 1.
pub fn default_starts<T: Real>(count: usize) -> Vec<InitialGuess<T>> {
    (0..count.max(1))
        .map(|i| {
            let t = i as f64;
            InitialGuess::Gaussian {
                width: T::lit(0.7 + 0.35 * t),
                amplitude: T::lit(1.0 + 0.25 * t),
            }
        })
        .collect()
}

/// Thresholds used by [`certify`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CertifyTolerances<T> {
    pub identity: T,
    pub decomposition: T,
    /// `|E_0| <= critical_energy0 * gamma ||Lap u||^2` when `sigma N = 4, mu = 0`.
    pub critical_energy0: T,
    /// Relative max deviation over the grid's symmetry orbit.
    pub symmetry: T,
}

impl<T: Real> Default for CertifyTolerances<T> {
    fn default() -> Self {
        CertifyTolerances {
            identity: T::lit(1e-7),
            decomposition: T::lit(1e-7),
            critical_energy0: T::lit(1e-6),
            symmetry: T::lit(1e-10),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate<T> {
    pub report: FunctionalReport<T>,
    pub identity_defects: [T; 3],
    /// `E_0` predicted from `Q = 0`.
    pub energy0_on_solutions: T,
    /// Relative gap between `E_0` and its decomposition.
    pub decomposition_residual: T,
    /// `sigma N = 4` and `mu = 0`, where `E_0 = 0` on solutions.
    pub exceptional_case: bool,
    pub energy0_sign_ok: bool,
    pub symmetry_defect: T,
    pub tolerances: CertifyTolerances<T>,
    pub accepted: bool,
    /// `E_omega` of the profile, reported as an estimate of the ground-state level.
    pub ground_state_energy_estimate: T,
    pub failures: Vec<String>,
}

/// Maximum relative deviation of `u` over the reflections and axis
/// permutations of the grid.
pub fn symmetry_defect<T: Real>(u: &Field<T>) -> T {
    let d = u.grid().dim();
    let peak = u.max_abs().max(T::min_positive_value());
    let perms: Vec<Vec<usize>> = match d {
        1 => vec![vec![0]],
        2 => vec![vec![0, 1], vec![1, 0]],
        _ => vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ],
    };
    let mut worst = T::zero();
    for perm in &perms {
        for mask in 0..(1usize << d) {
            let flip: Vec<bool> = (0..d).map(|a| mask & (1 << a) != 0).collect();
            let img = u.transform_axes(perm, &flip);
            worst = worst.max(img.max_diff(u) / peak);
        }
    }
    worst
}

/// Checks the identities `I = P = Q = 0`, the `E_0` decomposition and sign,
/// and radial symmetry for an arbitrary profile.
pub fn certify_profile<T: Real>(
    u: &Field<T>,
    p: &PhysicalParams<T>,
    tol: &CertifyTolerances<T>,
) -> Result<Certificate<T>> {
    let report = evaluate_all(u, p)?;
    let identity_defects = report.identity_defects(p);
    let predicted = report.energy0_on_solutions(p);
    let exceptional = p.is_mass_critical() && p.mu == T::zero();
    let dec_scale = report
        .energy0
        .abs()
        .max(p.gamma * report.lap_norm_sq * T::lit(1e-300))
        .max(T::min_positive_value());
    let decomposition_residual = if exceptional {
        (report.energy0 - predicted).abs() / (p.gamma * report.lap_norm_sq).max(T::min_positive_value())
    } else {
        (report.energy0 - predicted).abs() / dec_scale
    };
    let energy0_sign_ok = if exceptional {
        report.energy0.abs() <= tol.critical_energy0 * p.gamma * report.lap_norm_sq
    } else {
        report.energy0 > T::zero()
    };
    let symmetry = symmetry_defect(u);
    let mut failures = Vec::new();
    let names = ["Nehari", "Pohozaev", "virial"];
    for (name, &d) in names.iter().zip(&identity_defects) {
        if !(d <= tol.identity) {
            failures.push(format!("{name} defect {:.3e} > {:.1e}", d.as_f64(), tol.identity.as_f64()));
        }
    }
    if !(decomposition_residual <= tol.decomposition) {
        failures.push(format!(
            "E_0 decomposition residual {:.3e} > {:.1e}",
            decomposition_residual.as_f64(),
            tol.decomposition.as_f64()
        ));
    }
    if !energy0_sign_ok {
        failures.push(format!("E_0 = {:.6e} fails the sign check", report.energy0.as_f64()));
    }
    if !(symmetry <= tol.symmetry) {
        failures.push(format!("symmetry defect {:.3e} > {:.1e}", symmetry.as_f64(), tol.symmetry.as_f64()));
    }
    Ok(Certificate {
        report,
        identity_defects,
        energy0_on_solutions: predicted,
        decomposition_residual,
        exceptional_case: exceptional,
        energy0_sign_ok,
        symmetry_defect: symmetry,
        tolerances: *tol,
        accepted: failures.is_empty(),
        ground_state_energy_estimate: report.action,
        failures,
    })
}

/// Certifies a converged solver result with default tolerances.
pub fn certify<T: Real>(r: &GroundStateResult<T>, p: &PhysicalParams<T>) -> Result<Certificate<T>> {
    if !r.converged {
        return Err(Error::Precondition(format!(
            "cannot certify an unconverged result (residual {:.3e})",
            r.residual.as_f64()
        )));
    }
    certify_profile(&r.profile, p, &CertifyTolerances::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_guess_is_degenerate() {
        let g = Grid::new(2, 32, 8.0).unwrap();
        let p = PhysicalParams::new(1.0, 1.0, 1.0, 2.0, 2).unwrap();
        let mut cfg = SolverConfig::new(g.clone());
        cfg.initial_guess = InitialGuess::Provided(Field::zeros(&g));
        assert!(matches!(solve(&p, &cfg), Err(Error::Degenerate(_))));
    }

    #[test]
    fn config_validation() {
        let g = Grid::new(2, 32, 8.0).unwrap();
        let p = PhysicalParams::new(1.0, 1.0, 1.0, 2.0, 2).unwrap();
        let mut cfg = SolverConfig::new(g);
        cfg.residual_tol = 0.0;
        assert!(matches!(solve(&p, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn one_dimensional_solve_converges() {
        let g = Grid::new(1, 256, 24.0).unwrap();
        let p = PhysicalParams::new(1.0, 1.0, 1.0, 2.0, 1).unwrap();
        let mut cfg = SolverConfig::new(g);
        cfg.residual_tol = 1e-11;
        let r = solve(&p, &cfg).unwrap();
        assert!(r.converged, "residual {}", r.residual);
        assert!(r.identity_defects.iter().all(|&d| d < 1e-8), "{:?}", r.identity_defects);
        assert!(symmetry_defect(&r.profile) < 1e-10);
    }

    #[test]
    fn unconverged_result_cannot_be_certified() {
        let g = Grid::new(1, 64, 16.0).unwrap();
        let p = PhysicalParams::new(1.0, 1.0, 1.0, 2.0, 1).unwrap();
        let mut cfg = SolverConfig::new(g);
        cfg.max_iters = 2;
        let r = solve(&p, &cfg).unwrap();
        assert!(!r.converged);
        assert!(matches!(certify(&r, &p), Err(Error::Precondition(_))));
    }

    #[test]
    fn gaussian_is_refused() {
        let g = Grid::new(2, 64, 12.0).unwrap();
        let p = PhysicalParams::new(1.0, 1.0, 1.0, 2.0, 2).unwrap();
        let u = Field::from_radial(&g, |r: f64| 1.5 * (-r * r / 2.0).exp());
        let c = certify_profile(&u, &p, &CertifyTolerances::default()).unwrap();
        assert!(!c.accepted);
        assert!(c.identity_defects.iter().any(|&d| d > 1e-2));
    }
}
