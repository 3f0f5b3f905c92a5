//! Uniform cell-centred grid on the truncated half-plane `[-L, L] x [0, H]`.

use crate::error::{Error, Result};
use crate::real::Real;

/// Minimum number of cells along each axis.
pub const MIN_CELLS: usize = 8;

/// Uniform grid of `nx * ny` square cells covering `[-L, L] x [0, H]`.
///
/// Cell `(i, j)` is centred at `x1 = (i + 1/2) h - L`, `x2 = (j + 1/2) h`, so
/// no sample ever sits on the boundary `x2 = 0`. Storage order everywhere in
/// the crate is row-major with rows of constant `x2`: index `j * nx + i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<T> {
    half_width: T,
    height: T,
    nx: usize,
    ny: usize,
    h: T,
}

impl<T: Real> Grid<T> {
    /// Builds a grid, requiring `2L/nx == H/ny` (square cells).
    pub fn new(half_width: T, height: T, nx: usize, ny: usize) -> Result<Self> {
        if !(half_width > T::zero() && height > T::zero())
            || !half_width.is_finite()
            || !height.is_finite()
        {
            return Err(Error::Config(format!(
                "grid extents must be positive and finite (L = {}, H = {})",
                half_width, height
            )));
        }
        if nx < MIN_CELLS || ny < MIN_CELLS {
            return Err(Error::Config(format!(
                "grid needs at least {MIN_CELLS} cells per axis (nx = {nx}, ny = {ny})"
            )));
        }
        let hx = (half_width + half_width) / T::of_usize(nx);
        let hy = height / T::of_usize(ny);
        let tol = T::lit(64.0) * T::epsilon() * hx.max(hy);
        if (hx - hy).abs() > tol {
            return Err(Error::Config(format!(
                "non-square cells: 2L/nx = {hx} but H/ny = {hy}"
            )));
        }
        Ok(Self { half_width, height, nx, ny, h: hx })
    }

    /// Grid `[-L, L] x [0, L]` with `nx` cells across and `nx / 2` up.
    pub fn square_half(half_width: T, nx: usize) -> Result<Self> {
        Self::new(half_width, half_width, nx, nx / 2)
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn height(&self) -> T {
        self.height
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Cell spacing.
    pub fn h(&self) -> T {
        self.h
    }

    /// Cell area `h^2`.
    pub fn cell_area(&self) -> T {
        self.h * self.h
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    /// `x1` coordinate of column `i`.
    #[inline]
    pub fn x1(&self, i: usize) -> T {
        (T::of_usize(i) + T::lit(0.5)) * self.h - self.half_width
    }

    /// `x2` coordinate of row `j`.
    #[inline]
    pub fn x2(&self, j: usize) -> T {
        (T::of_usize(j) + T::lit(0.5)) * self.h
    }

    /// Same cell counts with every length multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::new(self.half_width * factor, self.height * factor, self.nx, self.ny)
    }

    /// Structural equality up to rounding in the extents.
    pub fn matches(&self, other: &Self) -> bool {
        let tol = T::lit(1e3) * T::epsilon();
        self.nx == other.nx
            && self.ny == other.ny
            && ((self.h - other.h).abs() <= tol * self.h)
            && ((self.half_width - other.half_width).abs() <= tol * self.half_width)
    }

    /// Column whose centre is nearest to `x1`, if inside the grid.
    pub fn column_of(&self, x1: T) -> Option<usize> {
        let t = ((x1 + self.half_width) / self.h - T::lit(0.5)).round();
        let i = t.to_isize()?;
        (0..self.nx as isize).contains(&i).then_some(i as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_rule() {
        let g = Grid::<f64>::new(2.0, 2.0, 64, 32).unwrap();
        assert_eq!(g.h(), 0.0625);
        let g = Grid::<f64>::new(4.0, 2.0, 256, 64).unwrap();
        assert_eq!(g.h(), 0.03125);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(Grid::<f64>::new(1.0, 1.0, 16, 16), Err(Error::Config(_))));
        assert!(matches!(Grid::<f64>::new(0.0, 1.0, 16, 8), Err(Error::Config(_))));
        assert!(matches!(Grid::<f64>::new(1.0, -1.0, 16, 8), Err(Error::Config(_))));
        assert!(matches!(Grid::<f64>::new(1.0, 0.25, 16, 4), Err(Error::Config(_))));
    }

    #[test]
    fn centres_are_interior_and_symmetric() {
        let g = Grid::<f64>::new(2.0, 2.0, 64, 32).unwrap();
        assert!((0..g.ny()).all(|j| g.x2(j) > 0.0 && g.x2(j) < g.height()));
        for i in 0..g.nx() {
            assert_eq!(g.x1(i), -g.x1(g.nx() - 1 - i));
        }
        assert_eq!(g.column_of(g.x1(17)), Some(17));
        assert_eq!(g.column_of(5.0), None);
    }

    #[test]
    fn works_in_single_precision() {
        let g = Grid::<f32>::new(2.0, 2.0, 64, 32).unwrap();
        assert_eq!(g.h(), 0.0625f32);
    }
}
