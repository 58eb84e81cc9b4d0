//! Normalized-coordinate rectangles, overlap math, and the rectangular
//! closure of a set of activated grid cells.
//!
//! Every rect lives in the unit square: `(0, 0)` is the top-left corner of
//! the image and `(1, 1)` the bottom-right. Pixel sizes only appear at the
//! heatmap grid boundary, through [`grid_box_to_rect`].

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Axis-aligned rectangle in normalized image coordinates with strictly
/// positive area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<T> {
    x0: T,
    y0: T,
    x1: T,
    y1: T,
}

impl<T: Scalar> Rect<T> {
    pub fn new(x0: T, y0: T, x1: T, y1: T) -> Result<Self> {
        let zero = T::zero();
        let one = T::one();
        let ok = [x0, y0, x1, y1].iter().all(|v| v.is_finite())
            && zero <= x0
            && x0 < x1
            && x1 <= one
            && zero <= y0
            && y0 < y1
            && y1 <= one;
        if ok {
            Ok(Self { x0, y0, x1, y1 })
        } else {
            Err(Error::InvalidRect {
                x0: x0.as_f64(),
                y0: y0.as_f64(),
                x1: x1.as_f64(),
                y1: y1.as_f64(),
            })
        }
    }

    /// The whole image.
    pub fn unit() -> Self {
        Self {
            x0: T::zero(),
            y0: T::zero(),
            x1: T::one(),
            y1: T::one(),
        }
    }

    pub fn x0(&self) -> T {
        self.x0
    }

    pub fn y0(&self) -> T {
        self.y0
    }

    pub fn x1(&self) -> T {
        self.x1
    }

    pub fn y1(&self) -> T {
        self.y1
    }

    pub fn width(&self) -> T {
        self.x1 - self.x0
    }

    pub fn height(&self) -> T {
        self.y1 - self.y0
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn center(&self) -> (T, T) {
        (
            (self.x0 + self.x1) * T::half(),
            (self.y0 + self.y1) * T::half(),
        )
    }

    /// Closed containment test.
    pub fn contains_point(&self, x: T, y: T) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }

    pub fn contains_rect(&self, other: &Rect<T>) -> bool {
        self.x0 <= other.x0 && other.x1 <= self.x1 && self.y0 <= other.y0 && other.y1 <= self.y1
    }

    pub fn intersection_area(&self, other: &Rect<T>) -> T {
        intersection_area(self, other)
    }

    pub fn iou(&self, other: &Rect<T>) -> T {
        iou(self, other)
    }

    /// Corners as `[x0, y0, x1, y1]`.
    pub fn to_array(&self) -> [T; 4] {
        [self.x0, self.y0, self.x1, self.y1]
    }

    pub fn cast<U: Scalar>(&self) -> Rect<U> {
        Rect {
            x0: U::lit(self.x0.as_f64()),
            y0: U::lit(self.y0.as_f64()),
            x1: U::lit(self.x1.as_f64()),
            y1: U::lit(self.y1.as_f64()),
        }
    }
}

/// Overlap area of two rects. Touching or disjoint rects give zero.
pub fn intersection_area<T: Scalar>(a: &Rect<T>, b: &Rect<T>) -> T {
    let zero = T::zero();
    let overlap_x = a.x1.min(b.x1) - a.x0.max(b.x0);
    let overlap_y = a.y1.min(b.y1) - a.y0.max(b.y0);
    overlap_x.max(zero) * overlap_y.max(zero)
}

/// Intersection over union.
pub fn iou<T: Scalar>(a: &Rect<T>, b: &Rect<T>) -> T {
    let inter = intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    // both areas are positive, so union > 0
    (inter / union).min(T::one())
}

/// Cell-index box on a heatmap grid, rows and columns half-open:
/// `row0..row1` by `col0..col1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridIndexBox {
    pub row0: usize,
    pub col0: usize,
    pub row1: usize,
    pub col1: usize,
}

impl GridIndexBox {
    pub fn new(
        row0: usize,
        col0: usize,
        row1: usize,
        col1: usize,
        rows: usize,
        cols: usize,
    ) -> Result<Self> {
        let b = Self {
            row0,
            col0,
            row1,
            col1,
        };
        b.validate(rows, cols)?;
        Ok(b)
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        if self.row0 < self.row1 && self.row1 <= rows && self.col0 < self.col1 && self.col1 <= cols
        {
            Ok(())
        } else {
            Err(Error::InvalidGridBox {
                row0: self.row0,
                col0: self.col0,
                row1: self.row1,
                col1: self.col1,
                rows,
                cols,
            })
        }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            row0: 0,
            col0: 0,
            row1: rows,
            col1: cols,
        }
    }
}

/// Smallest grid box containing every active `(row, col)` cell.
pub fn rectangular_closure<I>(active: I, rows: usize, cols: usize) -> Result<GridIndexBox>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut bounds: Option<(usize, usize, usize, usize)> = None;
    for (row, col) in active {
        if row >= rows || col >= cols {
            return Err(Error::CellOutOfBounds {
                row,
                col,
                rows,
                cols,
            });
        }
        bounds = Some(match bounds {
            None => (row, col, row, col),
            Some((r0, c0, r1, c1)) => (r0.min(row), c0.min(col), r1.max(row), c1.max(col)),
        });
    }
    let (row0, col0, row_max, col_max) = bounds.ok_or(Error::EmptyActivation)?;
    Ok(GridIndexBox {
        row0,
        col0,
        row1: row_max + 1,
        col1: col_max + 1,
    })
}

/// Maps a grid box to the full normalized extent of its cells.
pub fn grid_box_to_rect<T: Scalar>(b: &GridIndexBox, rows: usize, cols: usize) -> Result<Rect<T>> {
    b.validate(rows, cols)?;
    let r = T::lit(rows as f64);
    let c = T::lit(cols as f64);
    Rect::new(
        T::lit(b.col0 as f64) / c,
        T::lit(b.row0 as f64) / r,
        T::lit(b.col1 as f64) / c,
        T::lit(b.row1 as f64) / r,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Rect<f64> {
        Rect::new(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn rejects_degenerate_and_out_of_range() {
        assert!(Rect::new(0.5, 0.0, 0.5, 1.0).is_err());
        assert!(Rect::new(0.0, 0.0, 1.1, 1.0).is_err());
        assert!(Rect::new(-0.1, 0.0, 0.5, 1.0).is_err());
        assert!(Rect::new(0.0, f64::NAN, 0.5, 1.0).is_err());
        assert!(Rect::new(0.0, 0.6, 1.0, 0.5).is_err());
    }

    #[test]
    fn intersection_examples() {
        let unit = Rect::<f64>::unit();
        assert_eq!(intersection_area(&unit, &unit), 1.0);
        let left = rect(0.0, 0.0, 0.5, 1.0);
        let right = rect(0.5, 0.0, 1.0, 1.0);
        assert_eq!(intersection_area(&left, &right), 0.0);
        let a = rect(0.0, 0.0, 0.5, 0.5);
        let b = rect(0.25, 0.25, 0.75, 0.75);
        assert!((intersection_area(&a, &b) - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn iou_examples() {
        let unit = Rect::<f64>::unit();
        assert_eq!(iou(&unit, &unit), 1.0);
        let a = rect(0.0, 0.0, 0.2, 0.2);
        let b = rect(0.5, 0.5, 0.9, 0.9);
        assert_eq!(iou(&a, &b), 0.0);
        let a = rect(0.0, 0.0, 0.5, 0.5);
        let b = rect(0.25, 0.25, 0.75, 0.75);
        assert!((iou(&a, &b) - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn iou_works_for_f32() {
        let a = Rect::<f32>::new(0.0, 0.0, 0.5, 0.5).unwrap();
        let b = Rect::<f32>::new(0.25, 0.25, 0.75, 0.75).unwrap();
        assert!((a.iou(&b) - 1.0 / 7.0).abs() < 1e-6);
    }

    #[test]
    fn closure_examples() {
        assert_eq!(
            rectangular_closure([(1, 1)], 3, 3).unwrap(),
            GridIndexBox::new(1, 1, 2, 2, 3, 3).unwrap()
        );
        assert_eq!(
            rectangular_closure([(0, 0), (2, 2)], 3, 3).unwrap(),
            GridIndexBox::full(3, 3)
        );
        assert_eq!(
            rectangular_closure([(0, 2), (1, 1)], 4, 4).unwrap(),
            GridIndexBox::new(0, 1, 2, 3, 4, 4).unwrap()
        );
    }

    #[test]
    fn closure_errors() {
        assert_eq!(
            rectangular_closure(std::iter::empty(), 3, 3),
            Err(Error::EmptyActivation)
        );
        assert!(matches!(
            rectangular_closure([(3, 0)], 3, 3),
            Err(Error::CellOutOfBounds { .. })
        ));
    }

    #[test]
    fn grid_box_examples() {
        let full: Rect<f64> = grid_box_to_rect(&GridIndexBox::full(3, 3), 3, 3).unwrap();
        assert_eq!(full, Rect::unit());
        let mid: Rect<f64> =
            grid_box_to_rect(&GridIndexBox::new(1, 1, 2, 2, 3, 3).unwrap(), 3, 3).unwrap();
        assert_eq!(mid.to_array(), [1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]);
        let b: Rect<f64> =
            grid_box_to_rect(&GridIndexBox::new(0, 1, 2, 3, 4, 4).unwrap(), 4, 4).unwrap();
        assert_eq!(b.to_array(), [0.25, 0.0, 0.75, 0.5]);
    }

    #[test]
    fn grid_box_rejects_out_of_grid() {
        let b = GridIndexBox {
            row0: 0,
            col0: 0,
            row1: 4,
            col1: 2,
        };
        assert!(grid_box_to_rect::<f64>(&b, 3, 3).is_err());
    }

    /// Min/max scan written independently of `rectangular_closure`.
    fn brute_closure(
        mask: &[bool],
        rows: usize,
        cols: usize,
    ) -> Option<(usize, usize, usize, usize)> {
        let rows_hit: Vec<usize> = (0..rows)
            .filter(|r| (0..cols).any(|c| mask[r * cols + c]))
            .collect();
        let cols_hit: Vec<usize> = (0..cols)
            .filter(|c| (0..rows).any(|r| mask[r * cols + c]))
            .collect();
        Some((
            *rows_hit.first()?,
            *cols_hit.first()?,
            rows_hit.last()? + 1,
            cols_hit.last()? + 1,
        ))
    }

    fn closure_of_mask(mask: &[bool], rows: usize, cols: usize) -> Result<GridIndexBox> {
        let active = (0..rows * cols)
            .filter(|&i| mask[i])
            .map(|i| (i / cols, i % cols));
        rectangular_closure(active, rows, cols)
    }

    #[test]
    fn closure_matches_brute_force_exhaustively_on_small_grids() {
        for rows in 1..=4 {
            for cols in 1..=4 {
                let n = rows * cols;
                for bits in 0u32..(1 << n) {
                    let mask: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
                    let got = closure_of_mask(&mask, rows, cols).ok();
                    let want =
                        brute_closure(&mask, rows, cols).map(|(r0, c0, r1, c1)| GridIndexBox {
                            row0: r0,
                            col0: c0,
                            row1: r1,
                            col1: c1,
                        });
                    assert_eq!(got, want, "rows={rows} cols={cols} bits={bits:b}");
                }
            }
        }
    }

    fn arb_rect() -> impl Strategy<Value = Rect<f64>> {
        (0.0..0.99f64, 0.0..0.99f64, 0.001..1.0f64, 0.001..1.0f64).prop_map(|(x0, y0, fw, fh)| {
            let x1 = (x0 + fw * (1.0 - x0)).max(x0 + 1e-6).min(1.0);
            let y1 = (y0 + fh * (1.0 - y0)).max(y0 + 1e-6).min(1.0);
            Rect::new(x0, y0, x1, y1).unwrap()
        })
    }

    proptest! {
        #[test]
        fn iou_is_symmetric(a in arb_rect(), b in arb_rect()) {
            prop_assert_eq!(iou(&a, &b), iou(&b, &a));
            prop_assert_eq!(intersection_area(&a, &b), intersection_area(&b, &a));
            let v = iou(&a, &b);
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn shared_point_forces_overlap(a in arb_rect(), b in arb_rect(), tx in 0.01..0.99f64, ty in 0.01..0.99f64) {
            // an interior point of `a` that lies in `b` implies positive overlap
            let x = a.x0() + tx * a.width();
            let y = a.y0() + ty * a.height();
            if b.contains_point(x, y) {
                prop_assert!(intersection_area(&a, &b) > 0.0);
            }
        }

        #[test]
        fn full_grid_maps_to_unit(rows in 1usize..64, cols in 1usize..64) {
            let r: Rect<f64> = grid_box_to_rect(&GridIndexBox::full(rows, cols), rows, cols).unwrap();
            prop_assert_eq!(r, Rect::unit());
        }

        #[test]
        fn closure_matches_brute_force(rows in 1usize..=8, cols in 1usize..=8, seed in any::<u64>()) {
            let mut state = seed;
            let mask: Vec<bool> = (0..rows * cols)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (state >> 61) == 0
                })
                .collect();
            let got = closure_of_mask(&mask, rows, cols).ok();
            let want = brute_closure(&mask, rows, cols)
                .map(|(r0, c0, r1, c1)| GridIndexBox { row0: r0, col0: c0, row1: r1, col1: c1 });
            prop_assert_eq!(got, want);
        }
    }
}
