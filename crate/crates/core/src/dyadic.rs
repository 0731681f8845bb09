//! Exact dyadic and axis-aligned square geometry.
//!
//! Dyadic squares are integer triples; general squares carry exact rational
//! centers and sides. Distances are ℓ∞ Hausdorff distances between the closed
//! boxes, so every predicate here is bit-exact.

use std::fmt;

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result};

/// Exact rational used throughout the geometry.
pub type Rational = Ratio<i128>;

/// `2^e` as an exact rational, for any sign of `e`.
pub fn pow2(e: i32) -> Rational {
    assert!(e.abs() < 126, "dyadic exponent {e} out of range");
    if e >= 0 {
        Rational::from_integer(1i128 << e)
    } else {
        Rational::new(1, 1i128 << (-e))
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Half-open dyadic square `[m 2^-k, (m+1) 2^-k) x [n 2^-k, (n+1) 2^-k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicSquare {
    pub depth: i32,
    pub col: i64,
    pub row: i64,
}

/// Outcome of comparing two dyadic squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equal,
    AInsideB,
    BInsideA,
    Disjoint,
}

impl DyadicSquare {
    pub const fn new(depth: i32, col: i64, row: i64) -> Self {
        Self { depth, col, row }
    }

    pub fn side(&self) -> Rational {
        pow2(-self.depth)
    }

    pub fn side_f64(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    pub fn center(&self) -> (Rational, Rational) {
        let h = pow2(-self.depth - 1);
        (
            h * Rational::from_integer(2 * self.col as i128 + 1),
            h * Rational::from_integer(2 * self.row as i128 + 1),
        )
    }

    pub fn center_f64(&self) -> (f64, f64) {
        let s = self.side_f64();
        ((self.col as f64 + 0.5) * s, (self.row as f64 + 0.5) * s)
    }

    /// Lower-left corner and side in units of `2^-res`; requires `res >= depth`.
    pub fn at_resolution(&self, res: i32) -> (i128, i128, i128) {
        debug_assert!(res >= self.depth);
        let shift = (res - self.depth) as u32;
        let s = 1i128 << shift;
        (self.col as i128 * s, self.row as i128 * s, s)
    }

    pub fn parent(&self) -> DyadicSquare {
        DyadicSquare::new(self.depth - 1, self.col >> 1, self.row >> 1)
    }

    pub fn children(&self) -> [DyadicSquare; 4] {
        let (d, c, r) = (self.depth + 1, self.col * 2, self.row * 2);
        [
            DyadicSquare::new(d, c, r),
            DyadicSquare::new(d, c + 1, r),
            DyadicSquare::new(d, c, r + 1),
            DyadicSquare::new(d, c + 1, r + 1),
        ]
    }

    /// Ancestor at a shallower (or equal) depth.
    pub fn ancestor(&self, depth: i32) -> DyadicSquare {
        debug_assert!(depth <= self.depth);
        let sh = (self.depth - depth) as u32;
        if sh >= 63 {
            let (c, r) = (self.col.signum().min(0), self.row.signum().min(0));
            return DyadicSquare::new(depth, c, r);
        }
        DyadicSquare::new(depth, self.col >> sh, self.row >> sh)
    }

    /// True when `self` is contained in `other` (not necessarily strictly).
    pub fn is_inside(&self, other: &DyadicSquare) -> bool {
        self.depth >= other.depth && self.ancestor(other.depth) == *other
    }

    pub fn to_square(&self) -> Square {
        Square {
            center: self.center(),
            side: self.side(),
        }
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        let s = self.side_f64();
        let (x0, y0) = (self.col as f64 * s, self.row as f64 * s);
        x >= x0 && x < x0 + s && y >= y0 && y < y0 + s
    }
}

impl fmt::Display for DyadicSquare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.depth, self.col, self.row)
    }
}

impl Serialize for DyadicSquare {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.depth, self.col, self.row).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DyadicSquare {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (depth, col, row) = <(i32, i64, i64)>::deserialize(d)?;
        Ok(DyadicSquare { depth, col, row })
    }
}

/// Exact classification of two dyadic squares.
pub fn relation(a: &DyadicSquare, b: &DyadicSquare) -> Relation {
    if a == b {
        Relation::Equal
    } else if a.depth > b.depth && a.is_inside(b) {
        Relation::AInsideB
    } else if b.depth > a.depth && b.is_inside(a) {
        Relation::BInsideA
    } else {
        Relation::Disjoint
    }
}

/// Axis-aligned square with exact rational center and side.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Square {
    pub center: (Rational, Rational),
    pub side: Rational,
}

impl Square {
    pub fn new(center: (Rational, Rational), side: Rational) -> Result<Self> {
        if side <= Rational::zero() {
            return Err(invalid(format!("square side must be positive, got {side}")));
        }
        Ok(Self { center, side })
    }

    /// `[x0, x0 + side) x [y0, y0 + side)` from its lower-left corner.
    pub fn from_corner(x0: Rational, y0: Rational, side: Rational) -> Result<Self> {
        let h = side / Rational::from_integer(2);
        Self::new((x0 + h, y0 + h), side)
    }

    pub fn half(&self) -> Rational {
        self.side / Rational::from_integer(2)
    }

    pub fn x_range(&self) -> (Rational, Rational) {
        let h = self.half();
        (self.center.0 - h, self.center.0 + h)
    }

    pub fn y_range(&self) -> (Rational, Rational) {
        let h = self.half();
        (self.center.1 - h, self.center.1 + h)
    }

    pub fn corner(&self) -> (Rational, Rational) {
        (self.x_range().0, self.y_range().0)
    }

    pub fn center_f64(&self) -> (f64, f64) {
        (rational_to_f64(&self.center.0), rational_to_f64(&self.center.1))
    }

    pub fn side_f64(&self) -> f64 {
        rational_to_f64(&self.side)
    }

    /// Lower-left corner and side as floats.
    pub fn bounds_f64(&self) -> (f64, f64, f64) {
        let (x0, y0) = self.corner();
        (rational_to_f64(&x0), rational_to_f64(&y0), self.side_f64())
    }

    /// Half-open membership.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        let (x0, y0, s) = self.bounds_f64();
        x >= x0 && x < x0 + s && y >= y0 && y < y0 + s
    }

    /// Closed containment of another square.
    pub fn contains_square(&self, other: &Square) -> bool {
        let (a0, a1) = self.x_range();
        let (b0, b1) = self.y_range();
        let (c0, c1) = other.x_range();
        let (d0, d1) = other.y_range();
        a0 <= c0 && c1 <= a1 && b0 <= d0 && d1 <= b1
    }

    /// Half-open boxes share a point iff their interiors overlap.
    pub fn overlaps(&self, other: &Square) -> bool {
        let (a0, a1) = self.x_range();
        let (b0, b1) = self.y_range();
        let (c0, c1) = other.x_range();
        let (d0, d1) = other.y_range();
        a0 < c1 && c0 < a1 && b0 < d1 && d0 < b1
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[c=({}, {}), l={}]", self.center.0, self.center.1, self.side)
    }
}

pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parse = |t: &str| {
        t.trim()
            .parse::<i128>()
            .map_err(|e| invalid(format!("bad rational {s:?}: {e}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse(d)?;
            if d == 0 {
                return Err(invalid(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(parse(n)?, d))
        }
        None => {
            if let Ok(v) = parse(s) {
                return Ok(Rational::from_integer(v));
            }
            // decimal literal such as 2.5
            let (int, frac) = s
                .split_once('.')
                .ok_or_else(|| invalid(format!("bad rational {s:?}")))?;
            let neg = int.trim_start().starts_with('-');
            let den = 10i128.pow(frac.len() as u32);
            let ip = if int.is_empty() || int == "-" { 0 } else { parse(int)?.abs() };
            let value = Rational::new(ip * den + parse(frac)?, den);
            Ok(if neg { -value } else { value })
        }
    }
}

/// Serde adapter writing a rational as `"n/d"`.
pub mod rational_string {
    use super::{fmt_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        parse_rational(&String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Square {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [
            fmt_rational(&self.center.0),
            fmt_rational(&self.center.1),
            fmt_rational(&self.side),
        ]
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Square {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [cx, cy, side] = <[String; 3]>::deserialize(d)?;
        let p = |t: &str| parse_rational(t).map_err(serde::de::Error::custom);
        Square::new((p(&cx)?, p(&cy)?), p(&side)?).map_err(serde::de::Error::custom)
    }
}

/// Same center, side multiplied by `alpha`.
pub fn dilate(a: &Square, alpha: Rational) -> Result<Square> {
    if alpha <= Rational::zero() {
        return Err(invalid(format!("dilation factor must be positive, got {alpha}")));
    }
    Square::new(a.center, a.side * alpha)
}

fn interval_point_dist<T>(x: T, lo: T, hi: T) -> T
where
    T: Copy + PartialOrd + std::ops::Sub<Output = T> + Zero,
{
    if x < lo {
        lo - x
    } else if x > hi {
        x - hi
    } else {
        T::zero()
    }
}

fn max<T: PartialOrd>(a: T, b: T) -> T {
    if a >= b {
        a
    } else {
        b
    }
}

/// Directed distance from closed interval `i` into closed interval `j`.
pub fn directed_interval<T>(i: (T, T), j: (T, T)) -> T
where
    T: Copy + PartialOrd + std::ops::Sub<Output = T> + Zero,
{
    max(interval_point_dist(i.0, j.0, j.1), interval_point_dist(i.1, j.0, j.1))
}

/// ℓ∞ Hausdorff distance between closed boxes given as `(x-range, y-range)`.
pub fn hausdorff_boxes<T>(a: ((T, T), (T, T)), b: ((T, T), (T, T))) -> T
where
    T: Copy + PartialOrd + std::ops::Sub<Output = T> + Zero,
{
    let ab = max(directed_interval(a.0, b.0), directed_interval(a.1, b.1));
    let ba = max(directed_interval(b.0, a.0), directed_interval(b.1, a.1));
    max(ab, ba)
}

/// Exact ℓ∞ Hausdorff distance between the closures of two squares.
pub fn hausdorff_linf(a: &Square, b: &Square) -> Rational {
    hausdorff_boxes((a.x_range(), a.y_range()), (b.x_range(), b.y_range()))
}

/// ℓ∞ gap between closed boxes (zero when they touch or overlap).
pub fn gap_boxes<T>(a: ((T, T), (T, T)), b: ((T, T), (T, T))) -> T
where
    T: Copy + PartialOrd + std::ops::Sub<Output = T> + Zero,
{
    let axis = |i: (T, T), j: (T, T)| {
        if i.1 < j.0 {
            j.0 - i.1
        } else if j.1 < i.0 {
            i.0 - j.1
        } else {
            T::zero()
        }
    };
    max(axis(a.0, b.0), axis(a.1, b.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    fn q(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    fn unit() -> Square {
        Square::from_corner(q(0, 1), q(0, 1), q(1, 1)).unwrap()
    }

    #[test]
    fn dilate_examples() {
        let d = dilate(&unit(), q(2, 1)).unwrap();
        assert_eq!(d.center, (q(1, 2), q(1, 2)));
        assert_eq!(d.side, q(2, 1));
        assert_eq!(d.x_range(), (q(-1, 2), q(3, 2)));
        assert_eq!(dilate(&unit(), q(1, 1)).unwrap(), unit());
        let small = Square::from_corner(q(0, 1), q(0, 1), q(1, 2)).unwrap();
        let d3 = dilate(&small, q(3, 1)).unwrap();
        assert_eq!(d3.center, (q(1, 4), q(1, 4)));
        assert_eq!(d3.side, q(3, 2));
    }

    #[test]
    fn dilate_rejects_nonpositive() {
        assert!(dilate(&unit(), q(0, 1)).is_err());
        assert!(dilate(&unit(), q(-1, 2)).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let a = unit();
        assert_eq!(hausdorff_linf(&a, &a), q(0, 1));
        assert_eq!(hausdorff_linf(&a, &dilate(&a, q(2, 1)).unwrap()), q(1, 2));
        let far = Square::from_corner(q(5, 1), q(0, 1), q(1, 1)).unwrap();
        assert_eq!(hausdorff_linf(&a, &far), q(5, 1));
    }

    /// Max-min over grids of both boxes; grid contains the extreme points of these boxes.
    fn brute_hausdorff(a: &Square, b: &Square, n: i128) -> Rational {
        let pts = |s: &Square| {
            let (x0, y0) = s.corner();
            let mut v = Vec::new();
            for i in 0..=n {
                for j in 0..=n {
                    v.push((x0 + s.side * q(i, n), y0 + s.side * q(j, n)));
                }
            }
            v
        };
        let d = |p: &(Rational, Rational), r: &(Rational, Rational)| {
            let dx = (p.0 - r.0).abs();
            let dy = (p.1 - r.1).abs();
            if dx > dy {
                dx
            } else {
                dy
            }
        };
        let (pa, pb) = (pts(a), pts(b));
        let directed = |x: &[(Rational, Rational)], y: &[(Rational, Rational)]| {
            x.iter()
                .map(|p| y.iter().map(|r| d(p, r)).min().unwrap())
                .max()
                .unwrap()
        };
        std::cmp::max(directed(&pa, &pb), directed(&pb, &pa))
    }

    #[test]
    fn hausdorff_matches_grid_oracle() {
        let a = unit();
        let far = Square::from_corner(q(5, 1), q(0, 1), q(1, 1)).unwrap();
        assert_eq!(brute_hausdorff(&a, &far, 8), q(5, 1));
        let b = Square::from_corner(q(1, 4), q(-3, 8), q(5, 4)).unwrap();
        assert_eq!(hausdorff_linf(&a, &b), brute_hausdorff(&a, &b, 40));
    }

    #[test]
    fn relation_examples() {
        let a = DyadicSquare::new(0, 0, 0);
        assert_eq!(relation(&a, &DyadicSquare::new(1, 0, 0)), Relation::BInsideA);
        assert_eq!(relation(&a, &DyadicSquare::new(0, 1, 0)), Relation::Disjoint);
        assert_eq!(relation(&DyadicSquare::new(2, 3, 1), &a), Relation::AInsideB);
        assert_eq!(relation(&a, &a), Relation::Equal);
    }

    #[test]
    fn relation_handles_negative_indices() {
        let big = DyadicSquare::new(0, -1, -1);
        let small = DyadicSquare::new(3, -1, -8);
        assert_eq!(relation(&small, &big), Relation::AInsideB);
        assert_eq!(relation(&small, &DyadicSquare::new(0, 0, -1)), Relation::Disjoint);
    }

    #[test]
    fn exhaustive_trichotomy_up_to_depth_three() {
        let mut all = Vec::new();
        for k in 0..=3 {
            let n = 1i64 << k;
            for m in 0..n {
                for r in 0..n {
                    all.push(DyadicSquare::new(k, m, r));
                }
            }
        }
        for a in &all {
            for b in &all {
                let rel = relation(a, b);
                // interval arithmetic on the half-open boxes
                let (sa, sb) = (a.to_square(), b.to_square());
                let overlap = sa.overlaps(&sb);
                let a_in_b = sb.contains_square(&sa);
                let b_in_a = sa.contains_square(&sb);
                match rel {
                    Relation::Equal => assert!(a_in_b && b_in_a),
                    Relation::AInsideB => assert!(a_in_b && !b_in_a),
                    Relation::BInsideA => assert!(b_in_a && !a_in_b),
                    Relation::Disjoint => assert!(!overlap),
                }
                if overlap {
                    assert_ne!(rel, Relation::Disjoint);
                }
            }
        }
    }

    #[test]
    fn square_serializes_as_rational_strings() {
        let s = Square::new((q(1, 2), q(-3, 4)), q(3, 2)).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert_eq!(js, r#"["1/2","-3/4","3/2"]"#);
        let back: Square = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        let d = DyadicSquare::new(3, -2, 5);
        assert_eq!(serde_json::to_string(&d).unwrap(), "[3,-2,5]");
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("5/2").unwrap(), q(5, 2));
        assert_eq!(parse_rational("2.5").unwrap(), q(5, 2));
        assert_eq!(parse_rational("-0.25").unwrap(), q(-1, 4));
        assert_eq!(parse_rational("3").unwrap(), q(3, 1));
        assert!(parse_rational("1/0").is_err());
    }
}
