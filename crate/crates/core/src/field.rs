//! Sampled scalar fields and the midpoint-rule quadratures over them.
//!
//! Every reduction sums each row left to right, then the row totals bottom to
//! top, so results do not depend on how callers schedule the work.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::real::Real;

/// What a field's samples represent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldKind {
    /// Half-plane vorticity profile, elementwise nonnegative.
    Vorticity,
    /// Stream function.
    Stream,
    /// Signed vorticity increment (perturbations, differences).
    Increment,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Vorticity => "vorticity",
            FieldKind::Stream => "stream",
            FieldKind::Increment => "increment",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "vorticity" => Some(FieldKind::Vorticity),
            "stream" => Some(FieldKind::Stream),
            "increment" => Some(FieldKind::Increment),
            _ => None,
        }
    }
}

/// Cell samples of a scalar on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: Grid<T>,
    kind: FieldKind,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn zeros(grid: Grid<T>, kind: FieldKind) -> Self {
        Self { grid, kind, values: vec![T::zero(); grid.len()] }
    }

    /// Wraps raw samples, checking length, finiteness and (for vorticity) sign.
    pub fn from_values(grid: Grid<T>, kind: FieldKind, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite sample at index {k}")));
        }
        if kind == FieldKind::Vorticity {
            if let Some(k) = values.iter().position(|v| *v < T::zero()) {
                return Err(Error::InvalidField(format!(
                    "negative vorticity {} at index {k}",
                    values[k]
                )));
            }
        }
        Ok(Self { grid, kind, values })
    }

    /// Samples `f(x1, x2)` at cell centres. Vorticity samples are clipped at 0.
    pub fn from_fn(grid: Grid<T>, kind: FieldKind, f: impl Fn(T, T) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            let x2 = grid.x2(j);
            for i in 0..grid.nx() {
                let v = f(grid.x1(i), x2);
                values.push(if kind == FieldKind::Vorticity { v.max(T::zero()) } else { v });
            }
        }
        Self { grid, kind, values }
    }

    /// Builds a field without validation; callers guarantee the invariants.
    pub(crate) fn from_raw(grid: Grid<T>, kind: FieldKind, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, kind, values }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[cfg(test)]
    pub(crate) fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[self.grid.index(i, j)]
    }

    /// Row `j` (constant `x2`) as a slice ordered by increasing `x1`.
    pub fn row(&self, j: usize) -> &[T] {
        let nx = self.grid.nx();
        &self.values[j * nx..(j + 1) * nx]
    }

    /// Same samples relabelled with another kind (re-validated).
    pub fn with_kind(self, kind: FieldKind) -> Result<Self> {
        Self::from_values(self.grid, kind, self.values)
    }

    /// `h^2 * sum_j sum_i w_j * f_ij` with the fixed reduction order.
    fn weighted_sum(&self, weight: impl Fn(usize) -> T, map: impl Fn(T) -> T) -> T {
        let mut total = T::zero();
        for j in 0..self.grid.ny() {
            let mut row = T::zero();
            for &v in self.row(j) {
                row = row + map(v);
            }
            total = total + weight(j) * row;
        }
        total * self.grid.cell_area()
    }

    /// Midpoint-rule integral `sum f h^2`.
    pub fn integrate(&self) -> T {
        self.weighted_sum(|_| T::one(), |v| v)
    }

    /// Half-plane impulse `sum x2 f h^2`.
    pub fn impulse(&self) -> T {
        self.weighted_sum(|j| self.grid.x2(j), |v| v)
    }

    pub fn l1_norm(&self) -> T {
        self.weighted_sum(|_| T::one(), |v| v.abs())
    }

    /// `|| x2 f ||_1`.
    pub fn weighted_l1_norm(&self) -> T {
        self.weighted_sum(|j| self.grid.x2(j), |v| v.abs())
    }

    pub fn l2_norm(&self) -> T {
        self.weighted_sum(|_| T::one(), |v| v * v).sqrt()
    }

    /// `|| f ||_p` for finite `p >= 1`, or the max norm when `p` is infinite.
    pub fn lp_norm(&self, p: T) -> T {
        if p.is_infinite() {
            return self.max_abs();
        }
        self.weighted_sum(|_| T::one(), |v| v.abs().powf(p)).powf(p.recip())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }

    /// Mass centroid `sum x1 f / sum f`; `None` for a field of zero mass.
    pub fn centroid_x1(&self) -> Option<T> {
        let mut num = T::zero();
        let mut den = T::zero();
        for j in 0..self.grid.ny() {
            let mut rn = T::zero();
            let mut rd = T::zero();
            for (i, &v) in self.row(j).iter().enumerate() {
                rn = rn + self.grid.x1(i) * v;
                rd = rd + v;
            }
            num = num + rn;
            den = den + rd;
        }
        (den != T::zero()).then(|| num / den)
    }

    /// `g(x) = f(x + c h e1)`: samples move `c` cells towards `-x1`, zero-filled.
    pub fn shifted_x1(&self, cells: isize) -> Self {
        let nx = self.grid.nx() as isize;
        let mut out = vec![T::zero(); self.values.len()];
        for j in 0..self.grid.ny() {
            let base = j * self.grid.nx();
            for i in 0..nx {
                let src = i + cells;
                if (0..nx).contains(&src) {
                    out[base + i as usize] = self.values[base + src as usize];
                }
            }
        }
        Self::from_raw(self.grid, self.kind, out)
    }

    /// `g(x1, x2) = f(-x1, x2)`.
    pub fn mirrored_x1(&self) -> Self {
        let nx = self.grid.nx();
        let values = self.values.chunks(nx).flat_map(|row| row.iter().rev().copied()).collect();
        Self::from_raw(self.grid, self.kind, values)
    }

    /// Pointwise `a * self + b * other` on the same grid.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if !self.grid.matches(&other.grid) {
            return Err(Error::Config("fields live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(&u, &v)| a * u + b * v).collect();
        let kind = if self.kind == other.kind { self.kind } else { FieldKind::Increment };
        let mut out = Self::from_raw(self.grid, kind, values);
        if out.kind == FieldKind::Vorticity && out.values.iter().any(|v| *v < T::zero()) {
            out.kind = FieldKind::Increment;
        }
        Ok(out)
    }

    pub fn scale(&self, a: T) -> Self {
        let kind = if self.kind == FieldKind::Vorticity && a < T::zero() {
            FieldKind::Increment
        } else {
            self.kind
        };
        Self::from_raw(self.grid, kind, self.values.iter().map(|&v| a * v).collect())
    }

    /// Number of cells with a strictly positive sample.
    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|v| **v > T::zero()).count()
    }

    /// Bounding box `(max |x1|, max x2)` of the support, using cell centres.
    pub fn support_extent(&self) -> Option<(T, T)> {
        let mut ext: Option<(T, T)> = None;
        for j in 0..self.grid.ny() {
            for (i, v) in self.row(j).iter().enumerate() {
                if *v != T::zero() {
                    let (a, b) = ext.unwrap_or((T::zero(), T::zero()));
                    ext = Some((a.max(self.grid.x1(i).abs()), b.max(self.grid.x2(j))));
                }
            }
        }
        ext
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid<f64> {
        Grid::new(2.0, 2.0, 64, 32).unwrap()
    }

    fn block() -> Field<f64> {
        Field::from_fn(grid(), FieldKind::Vorticity, |x1: f64, x2: f64| {
            if x1.abs() < 1.0 && x2 < 1.0 { 1.0 } else { 0.0 }
        })
    }

    #[test]
    fn block_area_and_impulse() {
        let f = block();
        assert!((f.integrate() - 2.0).abs() < 1e-14);
        assert!((f.impulse() - 1.0).abs() < 1e-14);
        assert_eq!(Field::zeros(grid(), FieldKind::Vorticity).integrate(), 0.0);
    }

    #[test]
    fn linear_profile_impulse_is_second_order() {
        // exact value 2 * int_0^1 x2^2 = 2/3
        let err = |n: usize| {
            let g = Grid::new(2.0, 2.0, n, n / 2).unwrap();
            let f = Field::from_fn(g, FieldKind::Vorticity, |x1: f64, x2: f64| {
                if x1.abs() < 1.0 && x2 < 1.0 { x2 } else { 0.0 }
            });
            (f.impulse() - 2.0 / 3.0).abs()
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e1 < 3e-3);
        assert!(e2 < e1 / 3.5, "{e1} {e2}");
    }

    #[test]
    fn half_disk_area_converges() {
        let err = |n: usize| {
            let g = Grid::new(2.0, 2.0, n, n / 2).unwrap();
            let f = Field::from_fn(g, FieldKind::Vorticity, |x1: f64, x2: f64| {
                if x1 * x1 + x2 * x2 < 1.0 { 1.0 } else { 0.0 }
            });
            (f.integrate() - std::f64::consts::FRAC_PI_2).abs()
        };
        let errs: Vec<f64> = [64, 128, 256, 512].iter().map(|&n| err(n)).collect();
        assert!(errs[3] < 0.01);
        // errors decrease on average under refinement
        assert!(errs[2] + errs[3] < errs[0] + errs[1]);
    }

    #[test]
    fn vertical_translation_adds_tau_mass() {
        let g = grid();
        let tau = 0.25;
        let base = |x1: f64, x2: f64| if x1.abs() < 0.5 && x2 < 0.5 { 1.0 + x1 } else { 0.0 };
        let f = Field::from_fn(g, FieldKind::Vorticity, base);
        let shifted = Field::from_fn(g, FieldKind::Vorticity, |x1: f64, x2: f64| {
            if x2 > tau { base(x1, x2 - tau) } else { 0.0 }
        });
        let expected = f.impulse() + tau * f.integrate();
        assert!((shifted.impulse() - expected).abs() < 1e-13);
    }

    #[test]
    fn rejects_negative_vorticity() {
        let mut v = vec![0.0; grid().len()];
        v[3] = -1e-3;
        assert!(matches!(
            Field::from_values(grid(), FieldKind::Vorticity, v.clone()),
            Err(Error::InvalidField(_))
        ));
        assert!(Field::from_values(grid(), FieldKind::Increment, v).is_ok());
    }

    #[test]
    fn impulse_bounded_by_height_times_mass() {
        let f = block();
        assert!(f.impulse() <= f.grid().height() * f.integrate());
    }

    #[test]
    fn integer_shift_moves_support() {
        let f = block();
        let g = f.shifted_x1(-10);
        assert!((g.integrate() - f.integrate()).abs() < 1e-14);
        let c = g.centroid_x1().unwrap();
        assert!((c - 10.0 * f.grid().h()).abs() < 1e-12);
    }

    #[test]
    fn mirror_matches_reflected_sampling() {
        for (l, nx) in [(2.0, 64usize), (1.96875, 63)] {
            let g = Grid::new(l, 2.0, nx, 32).unwrap();
            let f = |x1: f64, x2: f64| (x1 + 0.3).max(0.0) * x2;
            let m = Field::from_fn(g, FieldKind::Vorticity, f).mirrored_x1();
            let direct = Field::from_fn(g, FieldKind::Vorticity, |x1: f64, x2: f64| f(-x1, x2));
            assert!(m.combine(1.0, &direct, -1.0).unwrap().max_abs() < 1e-14);
        }
    }
}
