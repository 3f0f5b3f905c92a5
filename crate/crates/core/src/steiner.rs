//! Steiner symmetrization in `x1`.
//!
//! Each row is replaced by its symmetric-decreasing rearrangement about
//! `x1 = 0`: values are sorted in decreasing order and laid out from the
//! centre outwards. With an even number of columns the two central cells sit
//! at `x1 = +h/2` and `x1 = -h/2`; the larger value goes to `+h/2`.

use crate::field::Field;
use crate::real::Real;

/// Column indices in the order they are filled, centre first.
pub fn center_out_order(nx: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(nx);
    if nx.is_multiple_of(2) {
        let c = nx / 2;
        for k in 0..c {
            order.push(c + k);
            order.push(c - 1 - k);
        }
    } else {
        let c = nx / 2;
        order.push(c);
        for k in 1..=c {
            order.push(c + k);
            order.push(c - k);
        }
    }
    order
}

fn sorted_desc<T: Real>(row: &[T]) -> Vec<T> {
    let mut v = row.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).expect("finite samples"));
    v
}

/// Row-wise symmetric-decreasing rearrangement.
pub fn steiner_symmetrize<T: Real>(omega: &Field<T>) -> Field<T> {
    let grid = *omega.grid();
    let order = center_out_order(grid.nx());
    let mut out = vec![T::zero(); grid.len()];
    for j in 0..grid.ny() {
        let base = j * grid.nx();
        for (&col, v) in order.iter().zip(sorted_desc(omega.row(j))) {
            out[base + col] = v;
        }
    }
    Field::from_raw(grid, omega.kind(), out)
}

/// True when every row is non-increasing along the centre-out order, up to `tol`.
pub fn is_steiner<T: Real>(omega: &Field<T>, tol: T) -> bool {
    let order = center_out_order(omega.grid().nx());
    (0..omega.grid().ny()).all(|j| {
        let row = omega.row(j);
        order.windows(2).all(|w| row[w[1]] <= row[w[0]] + tol)
    })
}

/// Rearrangement-invariant quantities computed from sorted rows:
/// `(L1, L2^2, Linf, impulse)`.
///
/// Summing each row in sorted order makes the result independent of how the
/// row is permuted, so a field and its symmetrization give identical bits.
pub fn sorted_invariants<T: Real>(omega: &Field<T>) -> (T, T, T, T) {
    let g = omega.grid();
    let (mut l1, mut l2, mut linf, mut imp) = (T::zero(), T::zero(), T::zero(), T::zero());
    for j in 0..g.ny() {
        let row = sorted_desc(omega.row(j));
        let (mut r1, mut r2) = (T::zero(), T::zero());
        for &v in &row {
            r1 = r1 + v.abs();
            r2 = r2 + v * v;
            linf = linf.max(v.abs());
        }
        l1 = l1 + r1;
        l2 = l2 + r2;
        imp = imp + g.x2(j) * r1;
    }
    let a = g.cell_area();
    (l1 * a, l2 * a, linf, imp * a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldKind;
    use crate::grid::Grid;

    #[test]
    fn order_covers_all_columns() {
        for nx in [8usize, 9, 16, 33] {
            let mut o = center_out_order(nx);
            assert_eq!(o.len(), nx);
            o.sort_unstable();
            assert_eq!(o, (0..nx).collect::<Vec<_>>());
        }
        assert_eq!(center_out_order(8)[..4], [4, 3, 5, 2]);
        assert_eq!(center_out_order(9)[..3], [4, 5, 3]);
    }

    #[test]
    fn offset_block_is_centred() {
        let g = Grid::new(4.0, 2.0, 32, 8).unwrap();
        let w = Field::from_fn(g, FieldKind::Vorticity, |x1: f64, x2: f64| {
            if (1.0..3.0).contains(&x1) && x2 < 1.0 { 1.0 } else { 0.0 }
        });
        assert!(!is_steiner(&w, 0.0));
        let s = steiner_symmetrize(&w);
        let expect = Field::from_fn(g, FieldKind::Vorticity, |x1: f64, x2: f64| {
            if x1.abs() < 1.0 && x2 < 1.0 { 1.0 } else { 0.0 }
        });
        assert_eq!(s, expect);
        assert!(is_steiner(&s, 0.0));
    }

    #[test]
    fn fixed_points() {
        let g = Grid::new(2.0, 2.0, 16, 8).unwrap();
        let z = Field::zeros(g, FieldKind::Vorticity);
        assert!(is_steiner(&z, 0.0));
        assert_eq!(steiner_symmetrize(&z), z);
        // odd column count: exactly even profiles are fixed points
        let g = Grid::new(2.25, 4.0, 9, 8).unwrap();
        let w = Field::from_fn(g, FieldKind::Vorticity, |x1: f64, x2: f64| (-x1 * x1 - x2).exp());
        assert!(is_steiner(&w, 0.0));
        assert_eq!(steiner_symmetrize(&w), w);
    }

    #[test]
    fn two_bumps_merge() {
        let g = Grid::new(1.0, 1.0, 16, 8).unwrap();
        let mut v = vec![0.0; g.len()];
        v[g.index(2, 3)] = 1.0;
        v[g.index(13, 3)] = 1.0;
        let w = Field::from_values(g, FieldKind::Vorticity, v).unwrap();
        let s = steiner_symmetrize(&w);
        assert_eq!(s.get(8, 3), 1.0);
        assert_eq!(s.get(7, 3), 1.0);
        assert_eq!(s.support_size(), 2);
        assert_eq!(s.row(3).iter().sum::<f64>(), 2.0);
    }
}
