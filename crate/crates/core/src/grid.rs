//! Periodic Cartesian grid on `[-L, L)^d` with its FFT plans and wavenumber tables.

use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::num::Real;

/// Periodic box `[-L, L)^dim` sampled with `points_per_axis` nodes per axis.
///
/// Cloning is cheap: the tables and FFT plans are shared. Plans carry no
/// mutable state (scratch is allocated per call), so a grid can be used from
/// several threads.
#[derive(Clone)]
pub struct Grid<T: Real> {
    inner: Arc<GridInner<T>>,
}

struct GridInner<T: Real> {
    dim: usize,
    n: usize,
    half_width: T,
    spacing: T,
    coords: Vec<T>,
    // First-derivative wavenumbers; the Nyquist entry is zero so odd
    // derivatives of real data stay real.
    k: Vec<T>,
    // k^2 per axis, Nyquist kept.
    k_sq_axis: Vec<T>,
    // |k|^2 over the whole lattice, row-major.
    k_sq: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    // Recycled transpose buffers.
    pool: Mutex<Vec<Vec<Complex<T>>>>,
}

impl<T: Real> Grid<T> {
    /// `dim` in 1..=3, `points_per_axis` a power of two (at least 4), `half_width > 0`.
    pub fn new(dim: usize, points_per_axis: usize, half_width: T) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Domain(format!("grid dimension {dim} not in 1..=3")));
        }
        if points_per_axis < 4 || !points_per_axis.is_power_of_two() {
            return Err(Error::Domain(format!(
                "points per axis must be a power of two >= 4, got {points_per_axis}"
            )));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::Domain(format!("half width must be positive, got {half_width}")));
        }
        let n = points_per_axis;
        let spacing = T::lit(2.0) * half_width / T::of_usize(n);
        let coords = (0..n)
            .map(|j| -half_width + T::of_usize(j) * spacing)
            .collect();
        let base = T::PI() / half_width;
        let mut k = Vec::with_capacity(n);
        let mut k_sq_axis = Vec::with_capacity(n);
        for j in 0..n {
            let m = frequency_index(j, n);
            let km = base * T::lit(m as f64);
            k_sq_axis.push(km * km);
            k.push(if j == n / 2 { T::zero() } else { km });
        }
        let cells = n.pow(dim as u32);
        let mut k_sq = vec![T::zero(); cells];
        for (idx, slot) in k_sq.iter_mut().enumerate() {
            let mut rest = idx;
            let mut acc = T::zero();
            for _ in 0..dim {
                acc = acc + k_sq_axis[rest % n];
                rest /= n;
            }
            *slot = acc;
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Grid {
            inner: Arc::new(GridInner {
                dim,
                n,
                half_width,
                spacing,
                coords,
                k,
                k_sq_axis,
                k_sq,
                forward,
                inverse,
                pool: Mutex::new(Vec::new()),
            }),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.inner.n
    }

    #[inline]
    pub fn half_width(&self) -> T {
        self.inner.half_width
    }

    #[inline]
    pub fn spacing(&self) -> T {
        self.inner.spacing
    }

    /// Total number of lattice cells, `points_per_axis^dim`.
    #[inline]
    pub fn cells(&self) -> usize {
        self.inner.k_sq.len()
    }

    /// Node coordinates along one axis, `-L + j h`.
    pub fn coords(&self) -> &[T] {
        &self.inner.coords
    }

    /// First-derivative wavenumbers `pi m / L` in FFT order (Nyquist entry zeroed).
    pub fn wavenumbers(&self) -> &[T] {
        &self.inner.k
    }

    /// `k^2` per axis in FFT order, Nyquist included.
    pub fn wavenumbers_sq(&self) -> &[T] {
        &self.inner.k_sq_axis
    }

    /// `|k|^2` over the full lattice.
    pub fn k_sq(&self) -> &[T] {
        &self.inner.k_sq
    }

    /// Cell volume `h^dim`.
    pub fn cell_volume(&self) -> T {
        self.inner.spacing.powi(self.inner.dim as i32)
    }

    /// Same discretization (dimension, resolution and box).
    pub fn same_as(&self, other: &Grid<T>) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.dim() == other.dim()
                && self.points_per_axis() == other.points_per_axis()
                && self.half_width() == other.half_width())
    }

    /// Multi-index of a flat row-major index; the last axis varies fastest.
    #[inline]
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let n = self.inner.n;
        let d = self.inner.dim;
        let mut out = [0usize; 3];
        for a in (0..d).rev() {
            out[a] = idx % n;
            idx /= n;
        }
        out
    }

    #[inline]
    pub fn ravel(&self, index: &[usize]) -> usize {
        let n = self.inner.n;
        index.iter().fold(0, |acc, &i| acc * n + i)
    }

    /// Physical coordinates of a flat index.
    #[inline]
    pub fn point(&self, idx: usize) -> [T; 3] {
        let mi = self.unravel(idx);
        let mut x = [T::zero(); 3];
        for a in 0..self.inner.dim {
            x[a] = self.inner.coords[mi[a]];
        }
        x
    }

    /// Euclidean distance of a node to the origin.
    #[inline]
    pub fn radius(&self, idx: usize) -> T {
        let x = self.point(idx);
        x.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
    }

    /// Trapezoid (plain lattice sum) quadrature of real samples.
    pub fn integrate(&self, values: &[T]) -> Result<T> {
        self.check_len(values.len())?;
        Ok(self.cell_volume() * values.iter().fold(T::zero(), |acc, &v| acc + v))
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.cells() {
            return Err(Error::Structural(format!(
                "expected {} values for a {}-dimensional grid with {} points per axis, got {len}",
                self.cells(),
                self.dim(),
                self.points_per_axis()
            )));
        }
        Ok(())
    }

    /// Unnormalized forward DFT in place.
    pub(crate) fn fft_forward(&self, data: &mut Vec<Complex<T>>) {
        self.fft_nd(data, &self.inner.forward);
    }

    /// Inverse DFT in place, divided by the cell count.
    pub(crate) fn fft_inverse(&self, data: &mut Vec<Complex<T>>) {
        self.fft_nd(data, &self.inner.inverse);
        let scale = T::one() / T::of_usize(self.cells());
        for z in data.iter_mut() {
            *z = *z * scale;
        }
    }

    /// Applies a 1-D operation to every line of the last axis, then rotates the
    /// axes so that the previous last axis comes first. After `dim` rounds
    /// every axis has been processed and the original layout is restored
    /// (all axes share one length).
    fn fft_nd(&self, data: &mut Vec<Complex<T>>, plan: &Arc<dyn Fft<T>>) {
        let n = self.inner.n;
        let d = self.inner.dim;
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
        if d == 1 {
            plan.process_with_scratch(data, &mut scratch);
            return;
        }
        let mut tmp = self.take_buffer(data.len());
        let rows = data.len() / n;
        for _ in 0..d {
            plan.process_with_scratch(data, &mut scratch);
            transpose::transpose(data, &mut tmp, n, rows);
            std::mem::swap(data, &mut tmp);
        }
        self.return_buffer(tmp);
    }

    fn take_buffer(&self, len: usize) -> Vec<Complex<T>> {
        let recycled = self.inner.pool.lock().ok().and_then(|mut p| p.pop());
        match recycled {
            Some(b) if b.len() == len => b,
            _ => vec![Complex::new(T::zero(), T::zero()); len],
        }
    }

    fn return_buffer(&self, buf: Vec<Complex<T>>) {
        if let Ok(mut p) = self.inner.pool.lock() {
            if p.len() < 4 {
                p.push(buf);
            }
        }
    }

    /// Applies a dense `n x n` matrix along every axis (`out_j = sum_m mat[j][m] in_m`).
    pub(crate) fn apply_axis_matrix(&self, data: &mut Vec<Complex<T>>, mat: &[Complex<T>]) {
        let n = self.inner.n;
        let d = self.inner.dim;
        let rows = data.len() / n;
        let mut tmp = vec![Complex::new(T::zero(), T::zero()); data.len()];
        let mut line = vec![Complex::new(T::zero(), T::zero()); n];
        for _ in 0..d {
            for r in 0..rows {
                let src = &mut data[r * n..(r + 1) * n];
                for (j, out) in line.iter_mut().enumerate() {
                    let row = &mat[j * n..(j + 1) * n];
                    *out = row
                        .iter()
                        .zip(src.iter())
                        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b);
                }
                src.copy_from_slice(&line);
            }
            transpose::transpose(data, &mut tmp, n, rows);
            std::mem::swap(data, &mut tmp);
        }
    }
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim())
            .field("points_per_axis", &self.points_per_axis())
            .field("half_width", &self.half_width())
            .finish()
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

/// Signed integer frequency of FFT slot `j` (`0, 1, .., n/2 - 1, -n/2, .., -1`).
#[inline]
pub fn frequency_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Reflection `x -> -x` of a node index on the symmetric periodic grid.
#[inline]
pub fn reflect_index(j: usize, n: usize) -> usize {
    (n - j) % n
}
