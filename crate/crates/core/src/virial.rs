//! Localized virial `M_R[u] = 2 Im int conj(u) grad(phi_R) . grad(u) dx` with
//! the cutoff `phi_R(r) = R^2 phi(r / R)`, its instantaneous time derivative
//! along the flow, and the comparison of that rate against `8 Q`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::TrajectoryOutcome;
use crate::field::Field;
use crate::grid::Grid;
use crate::num::{norm_sq, Real};
use crate::params::PhysicalParams;

/// `phi` is quadratic on `[0, TRANSITION_START]` and constant beyond `TRANSITION_END`.
pub const TRANSITION_START: f64 = 1.0;
pub const TRANSITION_END: f64 = 10.0;
/// Points of the `phi''` audit on `[0, 12]`.
pub const AUDIT_POINTS: usize = 100_000;
/// Allowed excess of the audited `phi''` over 1.
pub const PHI_SECOND_TOL: f64 = 1e-12;
/// `phi` is `C^6`: the taper on `phi'` has five vanishing derivatives at both joints.
pub const SMOOTHNESS_ORDER: usize = 6;

const SMOOTHSTEP: [f64; 6] = [462.0, -1980.0, 3465.0, -3080.0, 1386.0, -252.0];

/// Degree-11 smoothstep `S(x) = x^6 (462 - 1980 x + ... - 252 x^5)`, clamped to `[0, 1]`.
pub fn smoothstep<T: Real>(x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    let inner = SMOOTHSTEP
        .iter()
        .rev()
        .fold(T::zero(), |acc, &c| acc * x + T::lit(c));
    x.powi(6) * inner
}

/// `S'(x) = 2772 x^5 (1 - x)^5` on `[0, 1]`, zero outside.
pub fn smoothstep_derivative<T: Real>(x: T) -> T {
    if x <= T::zero() || x >= T::one() {
        return T::zero();
    }
    T::lit(2772.0) * (x * (T::one() - x)).powi(5)
}

fn transition_coordinate<T: Real>(s: T) -> T {
    (s - T::lit(TRANSITION_START)) / T::lit(TRANSITION_END - TRANSITION_START)
}

/// `phi'(s) / s` of the unit cutoff: 1 inside, `1 - S` across the taper, 0 outside.
pub fn unit_weight<T: Real>(s: T) -> T {
    T::one() - smoothstep(transition_coordinate(s))
}

/// Unit cutoff `phi(s)`: `s^2 / 2` for `s <= 1`, exact antiderivative of
/// `s (1 - S((s - 1) / 9))` on the taper, constant for `s >= 10`.
pub fn unit_phi<T: Real>(s: T) -> T {
    let s = s.abs();
    let half = T::lit(0.5);
    if s <= T::lit(TRANSITION_START) {
        return half * s * s;
    }
    let width = T::lit(TRANSITION_END - TRANSITION_START);
    let x = transition_coordinate(s).min(T::one());
    // int_0^x (1 + 9y)(1 - S(y)) dy
    let mut poly = x + width * x * x / T::lit(2.0);
    let mut xp = x.powi(7);
    for (j, &c) in SMOOTHSTEP.iter().enumerate() {
        let k = 6 + j;
        poly = poly - T::lit(c) * xp / T::of_usize(k + 1) - width * T::lit(c) * xp * x / T::of_usize(k + 2);
        xp = xp * x;
    }
    half + width * poly
}

pub fn unit_phi_prime<T: Real>(s: T) -> T {
    s * unit_weight(s)
}

/// `phi''(s) = (1 - S) - (s / 9) S'`.
pub fn unit_phi_second<T: Real>(s: T) -> T {
    let width = T::lit(TRANSITION_END - TRANSITION_START);
    unit_weight(s) - s / width * smoothstep_derivative(transition_coordinate(s))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CutoffCertificate {
    pub max_phi_second: f64,
    pub audit_points: usize,
    pub smoothness_order: usize,
    /// `max |phi(s) - s^2/2|` over audited `s <= 1`.
    pub inner_defect: f64,
    /// `max |phi'(s)|` over audited `s >= 10`.
    pub outer_slope: f64,
}

impl CutoffCertificate {
    fn audit() -> Self {
        let mut cert = CutoffCertificate {
            max_phi_second: f64::NEG_INFINITY,
            audit_points: AUDIT_POINTS,
            smoothness_order: SMOOTHNESS_ORDER,
            inner_defect: 0.0,
            outer_slope: 0.0,
        };
        for i in 0..AUDIT_POINTS {
            let s = 12.0 * i as f64 / (AUDIT_POINTS - 1) as f64;
            cert.max_phi_second = cert.max_phi_second.max(unit_phi_second(s));
            if s <= TRANSITION_START {
                cert.inner_defect = cert.inner_defect.max((unit_phi(s) - 0.5 * s * s).abs());
            }
            if s >= TRANSITION_END {
                cert.outer_slope = cert.outer_slope.max(unit_phi_prime(s).abs());
            }
        }
        cert
    }

    pub fn holds(&self) -> bool {
        self.max_phi_second <= 1.0 + PHI_SECOND_TOL && self.inner_defect == 0.0 && self.outer_slope == 0.0
    }
}

/// Cutoff of radius `R` sampled on a grid: `grad phi_R(x) = (phi_R'(r)/r) x`.
#[derive(Clone, Debug)]
pub struct VirialCutoff<T: Real> {
    radius: T,
    grid: Grid<T>,
    table_step: T,
    phi_values: Vec<T>,
    phi_prime: Vec<T>,
    /// `phi_R'(r) / r` at every grid point.
    weight: Vec<T>,
    certificate: CutoffCertificate,
}

impl<T: Real> VirialCutoff<T> {
    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn certificate(&self) -> &CutoffCertificate {
        &self.certificate
    }

    /// Radial spacing of [`Self::phi_values`] and [`Self::phi_prime`].
    pub fn table_step(&self) -> T {
        self.table_step
    }

    /// `phi_R` at `r = j * table_step`, covering the grid diagonal.
    pub fn phi_values(&self) -> &[T] {
        &self.phi_values
    }

    pub fn phi_prime(&self) -> &[T] {
        &self.phi_prime
    }

    /// `phi_R(r) = R^2 phi(r / R)`.
    pub fn phi(&self, r: T) -> T {
        self.radius * self.radius * unit_phi(r / self.radius)
    }

    /// `phi_R'(r) = R phi'(r / R)`.
    pub fn phi_r(&self, r: T) -> T {
        self.radius * unit_phi_prime(r / self.radius)
    }

    /// `phi_R''(r) = phi''(r / R)`.
    pub fn phi_rr(&self, r: T) -> T {
        unit_phi_second(r / self.radius)
    }

    pub fn weight(&self) -> &[T] {
        &self.weight
    }

    pub(crate) fn check_grid(&self, grid: &Grid<T>) -> Result<()> {
        if self.grid.same_as(grid) {
            Ok(())
        } else {
            Err(Error::Structural(format!(
                "cutoff R = {} was built on {:?}, field lives on {:?}",
                self.radius, self.grid, grid
            )))
        }
    }
}

/// Builds `phi_R` on `grid` and audits its invariants.
pub fn build_cutoff<T: Real>(radius: T, grid: &Grid<T>) -> Result<VirialCutoff<T>> {
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(Error::Domain(format!("cutoff radius must be positive, got {radius}")));
    }
    let l = grid.half_width();
    if T::lit(TRANSITION_END) * radius > T::lit(0.9) * l {
        log::warn!(
            "cutoff R = {radius}: flat region starts at 10R = {} beyond 0.9 L = {}",
            T::lit(TRANSITION_END) * radius,
            T::lit(0.9) * l
        );
    }
    let certificate = CutoffCertificate::audit();
    if !certificate.holds() {
        return Err(Error::Precondition(format!(
            "cutoff audit failed: max phi'' = {:e}, inner defect {:e}, outer slope {:e}",
            certificate.max_phi_second, certificate.inner_defect, certificate.outer_slope
        )));
    }
    let table_step = grid.spacing() / T::lit(4.0);
    let r_max = l * T::of_usize(grid.dim()).sqrt();
    let rows = (r_max / table_step).ceil().to_usize().unwrap_or(0) + 2;
    let mut phi_values = Vec::with_capacity(rows);
    let mut phi_prime = Vec::with_capacity(rows);
    for j in 0..rows {
        let s = T::of_usize(j) * table_step / radius;
        phi_values.push(radius * radius * unit_phi(s));
        phi_prime.push(radius * unit_phi_prime(s));
    }
    let weight = (0..grid.cells())
        .map(|idx| unit_weight(grid.radius(idx) / radius))
        .collect();
    Ok(VirialCutoff {
        radius,
        grid: grid.clone(),
        table_step,
        phi_values,
        phi_prime,
        weight,
        certificate,
    })
}

/// `sum_j w x_j a_j`, with `w = phi_R'(r)/r`.
fn radial_dot<T: Real>(grid: &Grid<T>, weight: T, idx: usize, a: &[Vec<Complex<T>>]) -> Complex<T> {
    let x = grid.point(idx);
    let mut acc = Complex::new(T::zero(), T::zero());
    for (j, aj) in a.iter().enumerate() {
        acc = acc + aj[idx] * x[j];
    }
    acc * weight
}

/// The derivative of a real field is real (the Nyquist mode is dropped), so
/// transform round-off in the imaginary part is discarded and `M_R = 0` exactly.
fn spectral_gradient<T: Real>(u: &Field<T>) -> Vec<Vec<Complex<T>>> {
    let spec = u.forward();
    let real = u.values().iter().all(|z| z.im == T::zero());
    (0..u.grid().dim())
        .map(|axis| {
            let mut d = spec.derivative(axis).into_field().into_values();
            if real {
                d.iter_mut().for_each(|z| z.im = T::zero());
            }
            d
        })
        .collect()
}

/// `M_R[u] = 2 Im int conj(u) (phi_R'(r)/r) x . grad u dx`, gradient spectral.
pub fn virial<T: Real>(u: &Field<T>, c: &VirialCutoff<T>) -> Result<T> {
    c.check_grid(u.grid())?;
    u.check_finite()?;
    let grad = spectral_gradient(u);
    Ok(virial_from_gradient(u, c, &grad))
}

fn virial_from_gradient<T: Real>(u: &Field<T>, c: &VirialCutoff<T>, grad: &[Vec<Complex<T>>]) -> T {
    let g = u.grid();
    let mut s = T::zero();
    for (idx, z) in u.values().iter().enumerate() {
        let w = c.weight[idx];
        if w == T::zero() {
            continue;
        }
        s = s + (z.conj() * radial_dot(g, w, idx, grad)).im;
    }
    T::lit(2.0) * s * g.cell_volume()
}

/// `H u = gamma Lap^2 u - mu Lap u - |u|^(2 sigma) u`, so that `u_t = -i H u`.
pub fn hamiltonian_action<T: Real>(u: &Field<T>, p: &PhysicalParams<T>) -> Field<T> {
    let mut spec = u.forward();
    for (c, &k2) in spec.coeffs_mut().iter_mut().zip(u.grid().k_sq()) {
        *c = *c * (p.gamma * k2 * k2 + p.mu * k2);
    }
    let mut h = spec.into_field();
    for (hz, z) in h.values_mut().iter_mut().zip(u.values()) {
        *hz = *hz - *z * norm_sq(*z).powf(p.sigma);
    }
    h
}

/// Evaluates `M_R` and `dM_R/dt` for a fixed set of cutoffs, sharing the
/// spectral derivatives between radii.
pub struct VirialProbe<'a, T: Real> {
    params: PhysicalParams<T>,
    cutoffs: &'a [VirialCutoff<T>],
}

impl<'a, T: Real> VirialProbe<'a, T> {
    pub fn new(p: &PhysicalParams<T>, cutoffs: &'a [VirialCutoff<T>]) -> Self {
        VirialProbe {
            params: *p,
            cutoffs,
        }
    }

    /// `(M_R, dM_R/dt)` per cutoff. The rate is the exact time derivative of
    /// the discrete `M_R` along `u_t = -i H u`:
    /// `2 Re int [conj(Hu) w.grad u - conj(u) w.grad(Hu)]`.
    pub fn evaluate(&self, u: &Field<T>) -> Result<(Vec<T>, Vec<T>)> {
        u.check_finite()?;
        for c in self.cutoffs {
            c.check_grid(u.grid())?;
        }
        let g = u.grid();
        let grad = spectral_gradient(u);
        let h = hamiltonian_action(u, &self.params);
        let grad_h = spectral_gradient(&h);
        let two = T::lit(2.0);
        let pairs: Vec<(T, T)> = self
            .cutoffs
            .par_iter()
            .map(|c| {
                let m = virial_from_gradient(u, c, &grad);
                let mut rate = T::zero();
                for idx in 0..g.cells() {
                    let w = c.weight[idx];
                    if w == T::zero() {
                        continue;
                    }
                    let a = h.values()[idx].conj() * radial_dot(g, w, idx, &grad);
                    let b = u.values()[idx].conj() * radial_dot(g, w, idx, &grad_h);
                    rate = rate + (a - b).re;
                }
                (m, two * rate * g.cell_volume())
            })
            .collect();
        Ok(pairs.into_iter().unzip())
    }
}

/// `dM_R/dt` at one state.
pub fn virial_rate<T: Real>(u: &Field<T>, p: &PhysicalParams<T>, c: &VirialCutoff<T>) -> Result<T> {
    let cutoffs = std::slice::from_ref(c);
    Ok(VirialProbe::new(p, cutoffs).evaluate(u)?.1[0])
}

/// Error shape of the localized virial identity:
/// `R^-4 + ||grad u||^2 R^-2 + ||grad u||^sigma R^(-sigma (N-1)) + mu R^-2`.
pub fn slack_shape<T: Real>(radius: T, grad_norm_sq: T, p: &PhysicalParams<T>) -> T {
    let r2 = radius * radius;
    let grad = grad_norm_sq.sqrt();
    T::one() / (r2 * r2)
        + grad_norm_sq / r2
        + grad.powf(p.sigma) * radius.powf(-p.sigma * (p.n() - T::one()))
        + p.mu / r2
}

/// Error shape `1/(eta R^2) + eta^(1/2)` of the mass-critical, `mu = 0` identity.
pub fn critical_slack_shape<T: Real>(radius: T, eta: T) -> T {
    T::one() / (eta * radius * radius) + eta.sqrt()
}

/// Values of `eta` swept by the mass-critical, `mu = 0` monitor.
pub const CRITICAL_ETAS: [f64; 2] = [1e-2, 1e-4];
/// Multiplier applied to the fitted slack constants.
pub const SLACK_SAFETY: f64 = 10.0;

/// Frozen slack model `slack(R, t) = C shape(R, t) + floor * scale(t)`,
/// where `scale = gamma ||Lap u||^2 + omega ||u||^2` absorbs the discretization
/// floor of the discrete identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlackModel<T> {
    pub constant: T,
    pub floor: T,
    pub safety: T,
    pub calibration_samples: usize,
}

impl<T: Real> SlackModel<T> {
    /// Fits `C` and the floor on a standing-wave trajectory, where the true
    /// rate and `Q` both vanish.
    pub fn calibrate(traj: &TrajectoryOutcome<T>, p: &PhysicalParams<T>) -> Result<Self> {
        if traj.virial_radii.is_empty() {
            return Err(Error::Precondition("calibration trajectory carries no virial columns".into()));
        }
        let eight = T::lit(8.0);
        let mut constant = T::zero();
        let mut floor = T::zero();
        for s in &traj.samples {
            let scale = s.report.scale(p);
            for (col, &radius) in traj.virial_radii.iter().enumerate() {
                let dev = (s.virial_rate[col] - eight * s.report.virial).abs();
                constant = constant.max(dev / slack_shape(radius, s.report.grad_norm_sq, p));
                floor = floor.max(dev / scale);
            }
        }
        let safety = T::lit(SLACK_SAFETY);
        Ok(SlackModel {
            constant: safety * constant,
            floor: safety * floor,
            safety,
            calibration_samples: traj.samples.len(),
        })
    }

    pub fn slack(&self, radius: T, report: &crate::functionals::FunctionalReport<T>, p: &PhysicalParams<T>) -> T {
        self.constant * slack_shape(radius, report.grad_norm_sq, p) + self.floor * report.scale(p)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateSample<T> {
    pub t: T,
    pub rate: T,
    pub rate_fd: T,
    pub eight_q: T,
    pub slack: T,
}

/// `dM_R/dt` against `8 Q` along one trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateComparison<T> {
    pub radius: T,
    pub samples: Vec<RateSample<T>>,
    /// `max_t |dM/dt - 8Q|` with the instantaneous rate.
    pub max_abs_deviation: T,
    /// Same with the finite-difference rate.
    pub max_abs_deviation_fd: T,
    /// `max_t (dM/dt - 8Q)`.
    pub max_excess: T,
    /// Samples with `dM/dt > 8Q + slack`.
    pub violations: usize,
}

impl<T: Real> RateComparison<T> {
    pub fn inequality_holds(&self) -> bool {
        self.violations == 0
    }
}

/// Samples must be spaced at most this fraction of `2 pi / omega` apart.
pub const MAX_SAMPLE_SPACING: f64 = 0.01;

/// Compares the sampled rate for cutoff `c` against `8 Q` plus the slack.
pub fn virial_rate_check<T: Real>(
    traj: &TrajectoryOutcome<T>,
    c: &VirialCutoff<T>,
    p: &PhysicalParams<T>,
    slack: &SlackModel<T>,
) -> Result<RateComparison<T>> {
    let col = traj
        .virial_radii
        .iter()
        .position(|&r| r == c.radius())
        .ok_or_else(|| Error::Precondition(format!("trajectory has no virial column for R = {}", c.radius())))?;
    if traj.samples.len() < 3 {
        return Err(Error::Precondition(format!(
            "{} samples are too few for central differences",
            traj.samples.len()
        )));
    }
    let limit = T::lit(MAX_SAMPLE_SPACING) * T::lit(2.0) * T::PI() / p.omega;
    let widest = traj
        .samples
        .windows(2)
        .map(|w| w[1].t - w[0].t)
        .fold(T::zero(), T::max);
    if widest > limit {
        return Err(Error::Precondition(format!(
            "sample spacing {widest} exceeds {limit}; lower sample_every"
        )));
    }
    let eight = T::lit(8.0);
    let mut out = RateComparison {
        radius: c.radius(),
        samples: Vec::with_capacity(traj.samples.len()),
        max_abs_deviation: T::zero(),
        max_abs_deviation_fd: T::zero(),
        max_excess: T::neg_infinity(),
        violations: 0,
    };
    for s in &traj.samples {
        let eight_q = eight * s.report.virial;
        let rate = s.virial_rate[col];
        let rate_fd = s.virial_rate_fd[col];
        let budget = slack.slack(c.radius(), &s.report, p);
        out.max_abs_deviation = out.max_abs_deviation.max((rate - eight_q).abs());
        out.max_abs_deviation_fd = out.max_abs_deviation_fd.max((rate_fd - eight_q).abs());
        out.max_excess = out.max_excess.max(rate - eight_q);
        if rate > eight_q + budget {
            out.violations += 1;
        }
        out.samples.push(RateSample {
            t: s.t,
            rate,
            rate_fd,
            eight_q,
            slack: budget,
        });
    }
    Ok(out)
}

/// Whether `max_t |dM/dt - 8Q|` does not increase along increasing radii,
/// beyond `tolerance`.
pub fn deviation_decreasing<T: Real>(comparisons: &[RateComparison<T>], tolerance: T) -> bool {
    let mut sorted: Vec<&RateComparison<T>> = comparisons.iter().collect();
    sorted.sort_by(|a, b| a.radius.partial_cmp(&b.radius).unwrap_or(std::cmp::Ordering::Equal));
    sorted
        .windows(2)
        .all(|w| w[1].max_abs_deviation <= w[0].max_abs_deviation + tolerance)
}

/// Slack of the mass-critical, `mu = 0` identity at one radius, minimized over [`CRITICAL_ETAS`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalSlack<T> {
    pub radius: T,
    pub best_eta: T,
    pub shape: T,
    pub measured_deviation: T,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalMonitor<T> {
    pub per_radius: Vec<CriticalSlack<T>>,
    pub slack_decreasing: bool,
}

pub fn critical_monitor<T: Real>(comparisons: &[RateComparison<T>]) -> CriticalMonitor<T> {
    let mut per_radius: Vec<CriticalSlack<T>> = comparisons
        .iter()
        .map(|c| {
            let (best_eta, shape) = CRITICAL_ETAS
                .iter()
                .map(|&e| (T::lit(e), critical_slack_shape(c.radius, T::lit(e))))
                .fold((T::nan(), T::infinity()), |best, cur| if cur.1 < best.1 { cur } else { best });
            CriticalSlack {
                radius: c.radius,
                best_eta,
                shape,
                measured_deviation: c.max_abs_deviation,
            }
        })
        .collect();
    per_radius.sort_by(|a, b| a.radius.partial_cmp(&b.radius).unwrap_or(std::cmp::Ordering::Equal));
    let slack_decreasing = per_radius.windows(2).all(|w| w[1].shape < w[0].shape);
    CriticalMonitor {
        per_radius,
        slack_decreasing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_endpoints_and_derivative() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert!((smoothstep(1.0_f64) - 1.0).abs() < 1e-15);
        assert!((smoothstep(0.5_f64) - 0.5).abs() < 1e-13);
        let h = 1e-6;
        for &x in &[0.1, 0.3, 0.7, 0.95] {
            let fd: f64 = (smoothstep(x + h) - smoothstep(x - h)) / (2.0 * h);
            assert!((fd - smoothstep_derivative(x)).abs() < 1e-7);
        }
    }

    #[test]
    fn phi_is_antiderivative_of_phi_prime() {
        let h = 1e-5;
        for &s in &[0.5, 1.5, 3.0, 6.0, 9.9, 11.0] {
            let fd: f64 = (unit_phi(s + h) - unit_phi(s - h)) / (2.0 * h);
            assert!((fd - unit_phi_prime(s)).abs() < 1e-7, "s = {s}");
            let fd2: f64 = (unit_phi_prime(s + h) - unit_phi_prime(s - h)) / (2.0 * h);
            assert!((fd2 - unit_phi_second(s)).abs() < 1e-7, "s = {s}");
        }
        assert!((unit_phi(10.0) - unit_phi(14.0_f64)).abs() == 0.0);
    }

    #[test]
    fn cutoff_regions() {
        let g = Grid::new(2, 16, 8.0).unwrap();
        let c = build_cutoff(2.0, &g).unwrap();
        assert_eq!(c.phi(1.0), 0.5);
        assert_eq!(c.phi_r(1.0), 1.0);
        assert_eq!(c.phi_r(24.0), 0.0);
        assert_eq!(c.phi(24.0), c.phi(40.0));
        assert!(c.certificate().max_phi_second <= 1.0 + PHI_SECOND_TOL);
        assert!(matches!(build_cutoff(0.0, &g), Err(Error::Domain(_))));
        assert!(matches!(build_cutoff(-1.0, &g), Err(Error::Domain(_))));
    }

    #[test]
    fn quadratic_weight_rate_is_eight_q() {
        let g = Grid::<f64>::new(2, 128, 12.0).unwrap();
        let c = build_cutoff(40.0, &g).unwrap();
        for &(sigma, mu) in &[(2.0, 1.0), (3.0, 0.0), (1.0, 0.5)] {
            let p = PhysicalParams::new(1.0, mu, 1.0, sigma, 2).unwrap();
            let u = Field::from_fn(&g, |x| {
                let r2: f64 = x[0] * x[0] + x[1] * x[1];
                Complex::from_polar(1.3 * (-r2 / 2.0).exp(), 0.2 * r2 + 0.3 * x[0])
            });
            let rate: f64 = virial_rate(&u, &p, &c).unwrap();
            let q: f64 = crate::functionals::evaluate_all(&u, &p).unwrap().virial;
            assert!((rate - 8.0 * q).abs() < 1e-9 * (1.0 + q.abs()), "sigma {sigma}: {rate} vs {}", 8.0 * q);
        }
    }

    #[test]
    fn slack_shapes_decrease_in_radius() {
        let p = PhysicalParams::new(1.0, 1.0, 1.0, 2.0, 2).unwrap();
        assert!(slack_shape(16.0, 3.0, &p) < slack_shape(8.0, 3.0, &p));
        assert!(critical_slack_shape(16.0, 1e-2) < critical_slack_shape(8.0, 1e-2));
    }
}
