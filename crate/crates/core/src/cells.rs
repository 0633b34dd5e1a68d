//! K4 tensegrity cells: typology and the closed-form self-stress.
//!
//! A cell is given by four points `A, B, C, D`. Its six members are always
//! ordered `(A,B), (C,B), (C,D), (A,D), (A,C), (B,D)`; node `A` balances
//! members 1, 4 and 5, `B` members 1, 2 and 6, `C` members 2, 3 and 5 and `D`
//! members 3, 4 and 6.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{affine_area_f, find_collinear_triple, strictly_inside_triangle, Point, Tolerance};

/// Index pairs into `[A, B, C, D]` for the six cell members.
pub const CELL_MEMBER_PAIRS: [(usize, usize); 6] = [(0, 1), (2, 1), (2, 3), (0, 3), (0, 2), (1, 3)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellType {
    /// Convex position: four hull members and two diagonals.
    TypeI,
    /// One point inside the triangle of the others: three envelope members
    /// and three spokes.
    TypeII,
}

/// Typology group of a member inside its cell. Members of one group share a
/// sign in the cell self-stress, the two groups have opposite signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MemberGroup {
    Envelope,
    Spoke,
    #[default]
    Unset,
}

/// Force densities `w1..w6` in cell member order. Positive is tension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStress {
    pub w: [f64; 6],
}

impl CellStress {
    pub fn scaled(&self, factor: f64) -> Self {
        Self { w: self.w.map(|v| v * factor) }
    }

    /// Largest nodal force imbalance divided by `max|w| * longest member`.
    pub fn relative_residual(&self, pts: &[Point; 4]) -> f64 {
        let mut forces = [Point { x: 0.0, y: 0.0 }; 4];
        let mut longest: f64 = 0.0;
        for (k, &(i, j)) in CELL_MEMBER_PAIRS.iter().enumerate() {
            let d = pts[j] - pts[i];
            longest = longest.max(d.norm());
            forces[i] = forces[i] + d * self.w[k];
            forces[j] = forces[j] - d * self.w[k];
        }
        let wmax = self.w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = forces.iter().fold(0.0f64, |m, f| m.max(f.norm()));
        if wmax == 0.0 || longest == 0.0 {
            return worst;
        }
        worst / (wmax * longest)
    }
}

fn ensure_general_position(pts: &[Point; 4], tol: Tolerance) -> Result<()> {
    match find_collinear_triple(pts, tol) {
        Some(triple) => Err(Error::DegeneratePosition(triple)),
        None => Ok(()),
    }
}

/// Index of the point lying strictly inside the triangle of the other three.
fn interior_point(pts: &[Point; 4], tol: Tolerance) -> Option<usize> {
    (0..4).find(|&k| {
        let others: Vec<Point> = (0..4).filter(|&i| i != k).map(|i| pts[i]).collect();
        strictly_inside_triangle(pts[k], others[0], others[1], others[2], tol)
    })
}

pub fn classify_cell(a: Point, b: Point, c: Point, d: Point, tol: Tolerance) -> Result<CellType> {
    let pts = [a, b, c, d];
    ensure_general_position(&pts, tol)?;
    Ok(match interior_point(&pts, tol) {
        Some(_) => CellType::TypeII,
        None => CellType::TypeI,
    })
}

/// Typology group of each of the six members, in cell member order.
pub fn member_groups(pts: &[Point; 4], tol: Tolerance) -> Result<[MemberGroup; 6]> {
    ensure_general_position(pts, tol)?;
    let mut groups = [MemberGroup::Envelope; 6];
    match interior_point(pts, tol) {
        Some(center) => {
            for (k, &(i, j)) in CELL_MEMBER_PAIRS.iter().enumerate() {
                if i == center || j == center {
                    groups[k] = MemberGroup::Spoke;
                }
            }
        }
        None => {
            // A pair is a diagonal when the remaining two points lie on
            // opposite sides of its line.
            for (k, &(i, j)) in CELL_MEMBER_PAIRS.iter().enumerate() {
                let rest: Vec<usize> = (0..4).filter(|&m| m != i && m != j).collect();
                let s1 = affine_area_f(pts[i], pts[j], pts[rest[0]]);
                let s2 = affine_area_f(pts[i], pts[j], pts[rest[1]]);
                if s1 * s2 < 0.0 {
                    groups[k] = MemberGroup::Spoke;
                }
            }
        }
    }
    Ok(groups)
}

/// The self-stress of cell `ABCD` whose first component (member `AB`) is `w1`.
///
/// Every component follows from crossing a nodal equilibrium equation with
/// one of its member vectors, which leaves a ratio of affine areas:
///
/// ```text
/// w2 =  w1 f(A,B,D) / f(B,C,D)
/// w3 =  w1 f(A,B,C) f(A,B,D) / (f(A,C,D) f(B,C,D))
/// w4 =  w1 f(A,B,C) / f(A,C,D)
/// w5 = -w1 f(A,B,D) / f(A,C,D)
/// w6 = -w1 f(A,B,C) / f(B,C,D)
/// ```
pub fn cell_selfstress(a: Point, b: Point, c: Point, d: Point, w1: f64) -> Result<CellStress> {
    cell_selfstress_with(a, b, c, d, w1, Tolerance::default())
}

pub fn cell_selfstress_with(
    a: Point,
    b: Point,
    c: Point,
    d: Point,
    w1: f64,
    tol: Tolerance,
) -> Result<CellStress> {
    let pts = [a, b, c, d];
    ensure_general_position(&pts, tol)?;
    let f_abc = affine_area_f(a, b, c);
    let f_abd = affine_area_f(a, b, d);
    let f_acd = affine_area_f(a, c, d);
    let f_bcd = affine_area_f(b, c, d);
    let r4 = f_abc / f_acd;
    let ratios = [
        1.0,
        f_abd / f_bcd,
        r4 * (f_abd / f_bcd),
        r4,
        -(f_abd / f_acd),
        -(f_abc / f_bcd),
    ];
    Ok(CellStress { w: ratios.map(|r| w1 * r) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn square() -> [Point; 4] {
        [p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]
    }

    fn triangle_with_centroid() -> [Point; 4] {
        let h = 3f64.sqrt() / 2.0;
        let (a, b, c) = (p(0., 0.), p(1., 0.), p(0.5, h));
        [a, b, c, p(0.5, h / 3.0)]
    }

    #[test]
    fn classify_examples() {
        let tol = Tolerance::default();
        let [a, b, c, d] = square();
        assert_eq!(classify_cell(a, b, c, d, tol).unwrap(), CellType::TypeI);
        let [a, b, c, d] = triangle_with_centroid();
        assert_eq!(classify_cell(a, b, c, d, tol).unwrap(), CellType::TypeII);
        assert!(matches!(
            classify_cell(p(0., 0.), p(1., 0.), p(2., 0.), p(0., 1.), tol),
            Err(Error::DegeneratePosition(_))
        ));
    }

    #[test]
    fn unit_square_state() {
        let [a, b, c, d] = square();
        let s = cell_selfstress(a, b, c, d, 1.0).unwrap();
        let expected = [1.0, 1.0, 1.0, 1.0, -1.0, -1.0];
        for k in 0..6 {
            assert!((s.w[k] - expected[k]).abs() < 1e-15, "w{} = {}", k + 1, s.w[k]);
        }
        assert!(s.relative_residual(&square()) < 1e-15);
    }

    #[test]
    fn centroid_cell_spokes_are_minus_three() {
        let pts = triangle_with_centroid();
        let s = cell_selfstress(pts[0], pts[1], pts[2], pts[3], 1.0).unwrap();
        let groups = member_groups(&pts, Tolerance::default()).unwrap();
        for k in 0..6 {
            let expected = if groups[k] == MemberGroup::Spoke { -3.0 } else { 1.0 };
            assert!((s.w[k] - expected).abs() < 1e-12, "w{} = {}", k + 1, s.w[k]);
        }
    }

    #[test]
    fn square_groups() {
        let g = member_groups(&square(), Tolerance::default()).unwrap();
        use MemberGroup::*;
        assert_eq!(g, [Envelope, Envelope, Envelope, Envelope, Spoke, Spoke]);
    }

    #[test]
    fn w4_ratio() {
        let (a, b, c, d) = (p(0.1, 0.2), p(2.3, -0.4), p(1.7, 1.9), p(-0.6, 1.1));
        let s = cell_selfstress(a, b, c, d, 2.5).unwrap();
        let expected = 2.5 * affine_area_f(a, b, c) / affine_area_f(a, c, d);
        assert!((s.w[3] - expected).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cell_rejected() {
        assert!(cell_selfstress(p(0., 0.), p(1., 1.), p(2., 2.), p(0., 1.), 1.0).is_err());
    }

    #[test]
    fn scale_equivariance_is_exact() {
        let (a, b, c, d) = (p(0.1, 0.2), p(2.3, -0.4), p(1.7, 1.9), p(-0.6, 1.1));
        let s = cell_selfstress(a, b, c, d, 1.0).unwrap();
        for lambda in [4.0, -0.37, 1e3 / 7.0] {
            let t = cell_selfstress(a, b, c, d, lambda).unwrap();
            for k in 0..6 {
                assert_eq!(t.w[k], lambda * s.w[k]);
            }
        }
    }
}
