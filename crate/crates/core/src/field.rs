//! Complex fields on a [`Grid`], their spectra, and Fourier-multiplier operators.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{frequency_index, reflect_index, Grid};
use crate::num::{norm_sq, Real};

/// Complex samples on a grid, row-major.
#[derive(Clone, Debug)]
pub struct Field<T: Real> {
    grid: Grid<T>,
    values: Vec<Complex<T>>,
}

/// Unnormalized DFT coefficients of a [`Field`].
#[derive(Clone, Debug)]
pub struct SpectralField<T: Real> {
    grid: Grid<T>,
    coeffs: Vec<Complex<T>>,
}

/// Diagonal operator in Fourier space: `F[Af](k) = w(k) F[f](k)`.
#[derive(Clone, Debug)]
pub struct SpectralMultiplier<T: Real> {
    grid: Grid<T>,
    weights: Vec<Complex<T>>,
}

#[inline]
fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

impl<T: Real> Field<T> {
    pub fn zeros(grid: &Grid<T>) -> Self {
        Field {
            grid: grid.clone(),
            values: vec![czero(); grid.cells()],
        }
    }

    pub fn from_values(grid: &Grid<T>, values: Vec<Complex<T>>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Field {
            grid: grid.clone(),
            values,
        })
    }

    /// Real samples promoted to complex.
    pub fn from_real(grid: &Grid<T>, values: &[T]) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Field {
            grid: grid.clone(),
            values: values.iter().map(|&v| Complex::new(v, T::zero())).collect(),
        })
    }

    /// Samples `f(x)` at every node; `x` has `grid.dim()` entries.
    pub fn from_fn(grid: &Grid<T>, mut f: impl FnMut(&[T]) -> Complex<T>) -> Self {
        let d = grid.dim();
        let values = (0..grid.cells())
            .map(|idx| {
                let x = grid.point(idx);
                f(&x[..d])
            })
            .collect();
        Field {
            grid: grid.clone(),
            values,
        }
    }

    /// Samples a real radial profile `f(|x|)`.
    pub fn from_radial(grid: &Grid<T>, mut f: impl FnMut(T) -> T) -> Self {
        let values = (0..grid.cells())
            .map(|idx| Complex::new(f(grid.radius(idx)), T::zero()))
            .collect();
        Field {
            grid: grid.clone(),
            values,
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `Err(Poisoned)` if any entry is NaN or infinite.
    pub fn check_finite(&self) -> Result<()> {
        match self
            .values
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            None => Ok(()),
            Some(idx) => Err(Error::Poisoned(format!(
                "non-finite value at flat index {idx}"
            ))),
        }
    }

    pub(crate) fn check_grid(&self, other: &Grid<T>) -> Result<()> {
        if self.grid.same_as(other) {
            Ok(())
        } else {
            Err(Error::Structural(format!(
                "field lives on {:?}, operation expects {:?}",
                self.grid, other
            )))
        }
    }

    pub fn map(&self, mut f: impl FnMut(Complex<T>) -> Complex<T>) -> Self {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    /// Multiplies by `e^{i theta}`.
    pub fn rotate_phase(&self, theta: T) -> Self {
        let r = Complex::from_polar(T::one(), theta);
        self.map(|z| z * r)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn real_part(&self) -> Vec<T> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn modulus(&self) -> Vec<T> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// `sum |f|^2 h^d`.
    pub fn norm_sq(&self) -> T {
        self.grid.cell_volume()
            * self
                .values
                .iter()
                .fold(T::zero(), |acc, &z| acc + norm_sq(z))
    }

    /// `int |f|^q dx`.
    pub fn lq_norm_pow(&self, q: T) -> T {
        self.grid.cell_volume()
            * self
                .values
                .iter()
                .fold(T::zero(), |acc, &z| acc + norm_sq(z).powf(q / T::lit(2.0)))
    }

    /// `int conj(self) other dx`.
    pub fn inner(&self, other: &Field<T>) -> Result<Complex<T>> {
        other.check_grid(&self.grid)?;
        let s = self
            .values
            .iter()
            .zip(&other.values)
            .fold(czero(), |acc, (a, b)| acc + a.conj() * b);
        Ok(s * self.grid.cell_volume())
    }

    /// Quadrature of `g(f(x))` for a real-valued integrand.
    pub fn integrate_with(&self, mut g: impl FnMut(Complex<T>) -> T) -> T {
        self.grid.cell_volume() * self.values.iter().fold(T::zero(), |acc, &z| acc + g(z))
    }

    /// Max norm of `self - other`.
    pub fn max_diff(&self, other: &Field<T>) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }

    /// Relative L2 distance `||self - other|| / ||other||`.
    pub fn rel_l2_diff(&self, other: &Field<T>) -> T {
        let num = self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |acc, (a, b)| acc + norm_sq(a - b));
        let den = other.values.iter().fold(T::zero(), |acc, &b| acc + norm_sq(b));
        (num / den.max(T::min_positive_value())).sqrt()
    }

    /// Largest modulus on the box faces `x_a = -L` (where the periodic
    /// extension wraps); a proxy for how well the box contains the field.
    pub fn boundary_amplitude(&self) -> T {
        let g = &self.grid;
        let d = g.dim();
        let mut m = T::zero();
        for (idx, z) in self.values.iter().enumerate() {
            let mi = g.unravel(idx);
            if mi[..d].iter().any(|&i| i == 0) {
                m = m.max(z.norm());
            }
        }
        m
    }

    /// Logs a warning when the boundary amplitude exceeds `1e-10 ||f||_inf`.
    /// Returns whether the field is well contained.
    pub fn warn_if_boundary_large(&self, what: &str) -> bool {
        let b = self.boundary_amplitude();
        let m = self.max_abs();
        let ok = b <= T::lit(1e-10) * m;
        if !ok {
            log::warn!(
                "{what}: boundary amplitude {:.3e} exceeds 1e-10 of the peak {:.3e}; enlarge the box",
                b.as_f64(),
                m.as_f64()
            );
        }
        ok
    }

    pub fn forward(&self) -> SpectralField<T> {
        let mut coeffs = self.values.clone();
        self.grid.fft_forward(&mut coeffs);
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    pub fn laplacian(&self) -> Field<T> {
        SpectralMultiplier::laplacian(&self.grid).apply_unchecked(self)
    }

    pub fn bilaplacian(&self) -> Field<T> {
        SpectralMultiplier::bilaplacian(&self.grid).apply_unchecked(self)
    }

    /// Spectral partial derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> Result<Field<T>> {
        if axis >= self.grid.dim() {
            return Err(Error::Domain(format!(
                "axis {axis} out of range for a {}-dimensional grid",
                self.grid.dim()
            )));
        }
        Ok(self.forward().derivative(axis).inverse())
    }

    pub fn gradient(&self) -> Vec<Field<T>> {
        let spec = self.forward();
        (0..self.grid.dim())
            .map(|a| spec.derivative(a).inverse())
            .collect()
    }

    /// Image under the reflections/permutations of the grid's symmetry group.
    /// `perm[a]` is the source axis for output axis `a`; `flip[a]` mirrors it.
    pub fn transform_axes(&self, perm: &[usize], flip: &[bool]) -> Field<T> {
        let g = &self.grid;
        let d = g.dim();
        let n = g.points_per_axis();
        let mut out = vec![czero(); g.cells()];
        for (idx, slot) in out.iter_mut().enumerate() {
            let mi = g.unravel(idx);
            let mut src = [0usize; 3];
            for a in 0..d {
                let j = mi[a];
                src[perm[a]] = if flip[a] { reflect_index(j, n) } else { j };
            }
            *slot = self.values[g.ravel(&src[..d])];
        }
        Field {
            grid: g.clone(),
            values: out,
        }
    }

    /// Spectral interpolation onto a grid with the same dimension and box
    /// but a different point count: modes representable on both grids are
    /// copied, all others (including the Nyquist planes) dropped.
    pub fn resample(&self, target: &Grid<T>) -> Result<Field<T>> {
        let g = &self.grid;
        if target.dim() != g.dim() || target.half_width() != g.half_width() {
            return Err(Error::Structural(format!(
                "cannot resample {g:?} onto {target:?}: dimension and box must agree"
            )));
        }
        let (n_src, n_tgt) = (g.points_per_axis(), target.points_per_axis());
        let limit = (n_src.min(n_tgt) / 2) as i64;
        let scale = T::of_usize(target.cells()) / T::of_usize(g.cells());
        let spec = self.forward();
        let mut out = vec![czero(); target.cells()];
        let mut index = [0usize; 3];
        'modes: for (idx, &c) in spec.coeffs.iter().enumerate() {
            let src = g.unravel(idx);
            for axis in 0..g.dim() {
                let m = frequency_index(src[axis], n_src);
                if m.abs() >= limit {
                    continue 'modes;
                }
                index[axis] = m.rem_euclid(n_tgt as i64) as usize;
            }
            out[target.ravel(&index[..g.dim()])] = c * scale;
        }
        Ok(SpectralField::from_coeffs(target, out)?.into_field())
    }

    /// Band-limited (trigonometric) interpolant of the field evaluated at
    /// `s x` for every node `x`. Points leaving the box wrap periodically.
    pub fn sample_dilated(&self, s: T) -> Field<T> {
        let g = &self.grid;
        let n = g.points_per_axis();
        let spec = self.forward();
        let base = T::PI() / g.half_width();
        let inv_n = T::one() / T::of_usize(n);
        let mut mat = vec![czero(); n * n];
        // DFT phases are measured from the left edge `-L`.
        for (j, &x) in g.coords().iter().enumerate() {
            let y = s * x + g.half_width();
            for m in 0..n {
                let k = base * T::lit(frequency_index(m, n) as f64);
                mat[j * n + m] = if m == n / 2 {
                    Complex::new((k * y).cos() * inv_n, T::zero())
                } else {
                    Complex::from_polar(inv_n, k * y)
                };
            }
        }
        let mut data = spec.coeffs;
        g.apply_axis_matrix(&mut data, &mat);
        Field {
            grid: g.clone(),
            values: data,
        }
    }
}

impl<T: Real> SpectralField<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn from_coeffs(grid: &Grid<T>, coeffs: Vec<Complex<T>>) -> Result<Self> {
        grid.check_len(coeffs.len())?;
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn inverse(&self) -> Field<T> {
        let mut values = self.coeffs.clone();
        self.grid.fft_inverse(&mut values);
        Field {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn into_field(self) -> Field<T> {
        let mut values = self.coeffs;
        self.grid.fft_inverse(&mut values);
        Field {
            grid: self.grid,
            values,
        }
    }

    /// `sum_k w(|k|^2) |F(k)|^2`, times `h^d / cells`: the integral
    /// `int conj(f) W(-Lap) f dx` by Parseval.
    pub fn weighted_energy(&self, mut w: impl FnMut(T) -> T) -> T {
        let g = &self.grid;
        let s = self
            .coeffs
            .iter()
            .zip(g.k_sq())
            .fold(T::zero(), |acc, (&c, &k2)| acc + w(k2) * norm_sq(c));
        s * g.cell_volume() / T::of_usize(g.cells())
    }

    /// Multiplies by `i k_axis`.
    pub fn derivative(&self, axis: usize) -> SpectralField<T> {
        let g = &self.grid;
        let k = g.wavenumbers();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| {
                let ka = k[g.unravel(idx)[axis]];
                Complex::new(-c.im * ka, c.re * ka)
            })
            .collect();
        SpectralField {
            grid: g.clone(),
            coeffs,
        }
    }
}

impl<T: Real> SpectralMultiplier<T> {
    pub fn from_weights(grid: &Grid<T>, weights: Vec<Complex<T>>) -> Result<Self> {
        grid.check_len(weights.len())?;
        Ok(SpectralMultiplier {
            grid: grid.clone(),
            weights,
        })
    }

    /// Weights given as a real function of `|k|^2`.
    pub fn radial(grid: &Grid<T>, mut w: impl FnMut(T) -> T) -> Self {
        let weights = grid
            .k_sq()
            .iter()
            .map(|&k2| Complex::new(w(k2), T::zero()))
            .collect();
        SpectralMultiplier {
            grid: grid.clone(),
            weights,
        }
    }

    /// Weights given as a complex function of `|k|^2`.
    pub fn radial_complex(grid: &Grid<T>, mut w: impl FnMut(T) -> Complex<T>) -> Self {
        let weights = grid.k_sq().iter().map(|&k2| w(k2)).collect();
        SpectralMultiplier {
            grid: grid.clone(),
            weights,
        }
    }

    pub fn identity(grid: &Grid<T>) -> Self {
        Self::radial(grid, |_| T::one())
    }

    /// `-|k|^2`.
    pub fn laplacian(grid: &Grid<T>) -> Self {
        Self::radial(grid, |k2| -k2)
    }

    /// `|k|^4`.
    pub fn bilaplacian(grid: &Grid<T>) -> Self {
        Self::radial(grid, |k2| k2 * k2)
    }

    /// 2/3-rule mask: keeps modes with `|m| <= n/3` on every axis.
    pub fn dealias(grid: &Grid<T>) -> Self {
        let n = grid.points_per_axis();
        let cut = (n / 3) as i64;
        let d = grid.dim();
        let weights = (0..grid.cells())
            .map(|idx| {
                let mi = grid.unravel(idx);
                let keep = mi[..d]
                    .iter()
                    .all(|&j| frequency_index(j, n).abs() <= cut);
                Complex::new(if keep { T::one() } else { T::zero() }, T::zero())
            })
            .collect();
        SpectralMultiplier {
            grid: grid.clone(),
            weights,
        }
    }

    pub fn weights(&self) -> &[Complex<T>] {
        &self.weights
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn apply(&self, f: &Field<T>) -> Result<Field<T>> {
        f.check_grid(&self.grid)?;
        Ok(self.apply_unchecked(f))
    }

    fn apply_unchecked(&self, f: &Field<T>) -> Field<T> {
        let mut spec = f.forward();
        self.apply_spectral(&mut spec);
        spec.into_field()
    }

    pub fn apply_spectral(&self, spec: &mut SpectralField<T>) {
        for (c, w) in spec.coeffs.iter_mut().zip(&self.weights) {
            *c = *c * w;
        }
    }

    /// Pointwise product of two multipliers.
    pub fn compose(&self, other: &SpectralMultiplier<T>) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::Structural("multipliers on different grids".into()));
        }
        Ok(SpectralMultiplier {
            grid: self.grid.clone(),
            weights: self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Complex<f64>;

    fn random_field(g: &Grid<f64>, seed: u64) -> Field<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..g.cells())
            .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Field::from_values(g, values).unwrap()
    }

    #[test]
    fn constant_field_has_only_zero_mode() {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let f = Field::from_fn(&g, |_| C::new(2.5, -1.0));
        let s = f.forward();
        let cells = g.cells() as f64;
        assert!((s.coeffs()[0] - C::new(2.5 * cells, -cells)).norm() < 1e-10);
        for c in &s.coeffs()[1..] {
            assert!(c.norm() < 1e-10);
        }
    }

    #[test]
    fn plane_wave_is_a_delta() {
        let g = Grid::new(2, 16, 3.0).unwrap();
        // m = (2, -3)
        let k = [2.0 * std::f64::consts::PI / 3.0, -3.0 * std::f64::consts::PI / 3.0];
        let f = Field::from_fn(&g, |x| C::from_polar(1.0, k[0] * x[0] + k[1] * x[1]));
        let s = f.forward();
        let target = g.ravel(&[2, 16 - 3]);
        for (idx, c) in s.coeffs().iter().enumerate() {
            if idx == target {
                assert!((c.norm() - g.cells() as f64).abs() < 1e-9);
            } else {
                assert!(c.norm() < 1e-9, "idx {idx}: {c}");
            }
        }
    }

    #[test]
    fn roundtrip_random_1d_2d_3d() {
        for (d, n) in [(1usize, 64usize), (2, 32), (3, 16)] {
            let g = Grid::new(d, n, 2.0).unwrap();
            let f = random_field(&g, 11 + d as u64);
            let back = f.forward().inverse();
            assert!(back.max_diff(&f) <= 1e-13 * f.max_abs(), "dim {d}");
        }
    }

    #[test]
    fn parseval() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let f = random_field(&g, 5);
        let direct = f.norm_sq();
        let spectral = f.forward().weighted_energy(|_| 1.0);
        assert!((direct - spectral).abs() <= 1e-12 * direct);
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let f = Field::from_fn(&g, |_| C::new(1.0, 0.0));
        assert!(f.laplacian().max_abs() < 1e-12);
    }

    #[test]
    fn bilaplacian_eigenvalue() {
        // |k|^2 = 2 with k = (1, 1) requires pi m / L = 1: L = pi.
        let g = Grid::new(2, 16, std::f64::consts::PI).unwrap();
        let f = Field::from_fn(&g, |x| C::from_polar(1.0, x[0] + x[1]));
        let b = f.bilaplacian();
        let expect = f.scale(4.0);
        assert!(b.max_diff(&expect) <= 1e-12 * 4.0);
        let l = f.laplacian();
        assert!(l.max_diff(&f.scale(-2.0)) <= 1e-12 * 2.0);
    }

    #[test]
    fn gaussian_laplacian_matches_closed_form() {
        let g = Grid::new(2, 256, 16.0).unwrap();
        let f = Field::from_radial(&g, |r: f64| (-r * r / 2.0).exp());
        let lap = f.laplacian();
        let exact = Field::from_radial(&g, |r: f64| (r * r - 2.0) * (-r * r / 2.0).exp());
        assert!(lap.max_diff(&exact) < 1e-8);
    }

    #[test]
    fn derivative_of_real_field_is_real() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let f = Field::from_real(&g, &random_field(&g, 3).real_part()).unwrap();
        for d in f.gradient() {
            assert!(d.values().iter().all(|z| z.im.abs() < 1e-12));
        }
    }

    #[test]
    fn dilation_by_one_is_identity() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let f = Field::from_radial(&g, |r: f64| (-r * r).exp());
        let h = f.sample_dilated(1.0);
        assert!(h.max_diff(&f) < 1e-12);
    }

    #[test]
    fn resample_reproduces_smooth_profiles() {
        let coarse = Grid::new(2, 64, 10.0).unwrap();
        let fine = Grid::new(2, 128, 10.0).unwrap();
        let f = |r: f64| (-r * r / 2.0).exp();
        let up = Field::from_radial(&coarse, f).resample(&fine).unwrap();
        assert!(up.max_diff(&Field::from_radial(&fine, f)) < 1e-12);
        let down = up.resample(&coarse).unwrap();
        assert!(down.max_diff(&Field::from_radial(&coarse, f)) < 1e-12);
        let other = Grid::new(2, 128, 9.0).unwrap();
        assert!(matches!(up.resample(&other), Err(Error::Structural(_))));
    }

    #[test]
    fn dilation_matches_resampled_profile() {
        let g = Grid::new(2, 128, 12.0).unwrap();
        let f = Field::from_radial(&g, |r: f64| (-r * r / 2.0).exp());
        let s = 1.3f64;
        let h = f.sample_dilated(s);
        let exact = Field::from_radial(&g, |r| (-(s * r) * (s * r) / 2.0).exp());
        assert!(h.max_diff(&exact) < 1e-11, "{}", h.max_diff(&exact));
    }

    #[test]
    fn size_mismatch_is_structural() {
        let g = Grid::new(2, 16, 1.0f64).unwrap();
        assert!(matches!(
            Field::from_values(&g, vec![C::new(0.0, 0.0); 10]),
            Err(Error::Structural(_))
        ));
        let g2 = Grid::new(2, 32, 1.0f64).unwrap();
        let f = Field::zeros(&g);
        assert!(SpectralMultiplier::identity(&g2).apply(&f).is_err());
    }

    #[test]
    fn single_precision_roundtrip() {
        let g = Grid::<f32>::new(2, 32, 4.0).unwrap();
        let f = Field::from_radial(&g, |r: f32| (-r * r).exp());
        let back = f.forward().inverse();
        assert!(back.max_diff(&f) < 1e-5);
    }
}
