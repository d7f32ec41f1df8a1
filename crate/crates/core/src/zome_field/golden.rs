//! Exact arithmetic in the half-integer golden ring `{(a + b·γ)/2 : a, b ∈ ℤ}`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// The golden ratio γ = (1 + √5) / 2.
pub const GAMMA: f64 = 1.618_033_988_749_895;

/// Components must stay below this magnitude.
const COMPONENT_LIMIT: i64 = 1 << 31;

/// A number `(a + b·γ) / 2`.
///
/// The integer pair is the canonical form, so equality and hashing are exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoldenNumber {
    pub a: i64,
    pub b: i64,
}

fn bounded(a: i64, b: i64) -> GoldenNumber {
    assert!(
        a.abs() < COMPONENT_LIMIT && b.abs() < COMPONENT_LIMIT,
        "golden component overflow: ({a}, {b})"
    );
    GoldenNumber { a, b }
}

impl GoldenNumber {
    pub const ZERO: GoldenNumber = GoldenNumber { a: 0, b: 0 };
    pub const ONE: GoldenNumber = GoldenNumber { a: 2, b: 0 };
    pub const HALF: GoldenNumber = GoldenNumber { a: 1, b: 0 };
    pub const GAMMA: GoldenNumber = GoldenNumber { a: 0, b: 2 };
    /// γ² = 1 + γ.
    pub const GAMMA_SQ: GoldenNumber = GoldenNumber { a: 2, b: 2 };

    pub fn new(a: i64, b: i64) -> Self {
        bounded(a, b)
    }

    /// An integer `n`.
    pub fn int(n: i64) -> Self {
        bounded(2 * n, 0)
    }

    pub fn eval(self) -> f64 {
        (self.a as f64 + self.b as f64 * GAMMA) / 2.0
    }

    /// True when the value lies in ℤ[γ], i.e. both halves are even.
    pub fn is_ring_integer(self) -> bool {
        self.a % 2 == 0 && self.b % 2 == 0
    }

    /// Exact product, if it is representable with half-integer components.
    ///
    /// `(a₁+b₁γ)(a₂+b₂γ)/4 = (a₁a₂+b₁b₂ + (a₁b₂+a₂b₁+b₁b₂)γ)/4`; the result
    /// needs both numerators to be even. Any product with a factor in ℤ[γ]
    /// qualifies.
    pub fn checked_mul(self, rhs: Self) -> Option<Self> {
        let p = self.a.checked_mul(rhs.a)?.checked_add(self.b.checked_mul(rhs.b)?)?;
        let q = self
            .a
            .checked_mul(rhs.b)?
            .checked_add(rhs.a.checked_mul(self.b)?)?
            .checked_add(self.b.checked_mul(rhs.b)?)?;
        if p % 2 != 0 || q % 2 != 0 {
            return None;
        }
        Some(bounded(p / 2, q / 2))
    }

    /// Product with a ring integer (`1`, `γ`, `1+γ`, ...). Always exact.
    pub fn scale(self, factor: Self) -> Self {
        assert!(factor.is_ring_integer(), "scale factor must lie in Z[γ]");
        self.checked_mul(factor).expect("product with a ring integer is representable")
    }

    /// Sign of the exact value: -1, 0 or 1.
    pub fn signum(self) -> i32 {
        // 2·value = a + bγ, and 2(a + bγ) = (2a + b) + b√5.
        let p = 2 * self.a as i128 + self.b as i128;
        let q = self.b as i128;
        let sp = p.signum();
        let sq = q.signum();
        if sp == sq || sq == 0 {
            return sp as i32;
        }
        if sp == 0 {
            return sq as i32;
        }
        match (p * p).cmp(&(5 * q * q)) {
            Ordering::Greater => sp as i32,
            Ordering::Less => sq as i32,
            Ordering::Equal => 0,
        }
    }
}

impl Ord for GoldenNumber {
    fn cmp(&self, other: &Self) -> Ordering {
        (*self - *other).signum().cmp(&0)
    }
}

impl PartialOrd for GoldenNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for GoldenNumber {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        bounded(self.a + rhs.a, self.b + rhs.b)
    }
}

impl Sub for GoldenNumber {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        bounded(self.a - rhs.a, self.b - rhs.b)
    }
}

impl Neg for GoldenNumber {
    type Output = Self;
    fn neg(self) -> Self {
        GoldenNumber { a: -self.a, b: -self.b }
    }
}

impl AddAssign for GoldenNumber {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for GoldenNumber {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl fmt::Display for GoldenNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}γ)/2", self.a, self.b)
    }
}

/// A point or displacement on the Zometool lattice, in units of the short
/// blue strut length.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GoldenVector {
    pub x: GoldenNumber,
    pub y: GoldenNumber,
    pub z: GoldenNumber,
}

impl GoldenVector {
    pub const ZERO: GoldenVector =
        GoldenVector { x: GoldenNumber::ZERO, y: GoldenNumber::ZERO, z: GoldenNumber::ZERO };

    pub fn new(x: GoldenNumber, y: GoldenNumber, z: GoldenNumber) -> Self {
        GoldenVector { x, y, z }
    }

    /// Integer lattice point.
    pub fn int(x: i64, y: i64, z: i64) -> Self {
        GoldenVector::new(GoldenNumber::int(x), GoldenNumber::int(y), GoldenNumber::int(z))
    }

    /// From raw `(a, b)` pairs, one per axis.
    pub fn from_pairs(p: [(i64, i64); 3]) -> Self {
        GoldenVector::new(
            GoldenNumber::new(p[0].0, p[0].1),
            GoldenNumber::new(p[1].0, p[1].1),
            GoldenNumber::new(p[2].0, p[2].1),
        )
    }

    pub fn to_pairs(self) -> [(i64, i64); 3] {
        [(self.x.a, self.x.b), (self.y.a, self.y.b), (self.z.a, self.z.b)]
    }

    pub fn components(self) -> [GoldenNumber; 3] {
        [self.x, self.y, self.z]
    }

    pub fn scale(self, factor: GoldenNumber) -> Self {
        GoldenVector::new(self.x.scale(factor), self.y.scale(factor), self.z.scale(factor))
    }

    pub fn eval(self) -> Vector3<f64> {
        Vector3::new(self.x.eval(), self.y.eval(), self.z.eval())
    }
}

impl Add for GoldenVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        GoldenVector::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for GoldenVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        GoldenVector::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for GoldenVector {
    type Output = Self;
    fn neg(self) -> Self {
        GoldenVector::new(-self.x, -self.y, -self.z)
    }
}

impl AddAssign for GoldenVector {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

/// Evaluate `(a + b·γ)/2`.
pub fn golden_eval(g: GoldenNumber) -> f64 {
    g.eval()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eval_fixtures() {
        assert_eq!(golden_eval(GoldenNumber::new(2, 0)), 1.0);
        assert!((golden_eval(GoldenNumber::new(0, 2)) - 1.618_033_988_7).abs() < 1e-10);
        let g2 = golden_eval(GoldenNumber::new(2, 2));
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        // γ² − γ − 1 = 0
        assert!((g * g - g - 1.0).abs() < 1e-12);
        assert!((g2 - g * g).abs() < 1e-12);
    }

    #[test]
    fn gamma_squared_identity() {
        assert_eq!(GoldenNumber::GAMMA.checked_mul(GoldenNumber::GAMMA), Some(GoldenNumber::GAMMA_SQ));
        // (γ − 1)² = 2 − γ
        let gm1 = GoldenNumber::GAMMA - GoldenNumber::ONE;
        assert_eq!(gm1.checked_mul(gm1), Some(GoldenNumber::int(2) - GoldenNumber::GAMMA));
    }

    #[test]
    fn half_times_half_is_not_representable() {
        assert_eq!(GoldenNumber::HALF.checked_mul(GoldenNumber::HALF), None);
    }

    #[test]
    fn signum_near_zero_combinations() {
        // 2·(−1 + γ)/2 > 0, (1 − γ)/2 < 0
        assert_eq!(GoldenNumber::new(-1, 1).signum(), 1);
        assert_eq!(GoldenNumber::new(1, -1).signum(), -1);
        // γ ≈ 1.618 > 1.6 → (0,10) vs (16,0)
        assert!(GoldenNumber::new(0, 10) > GoldenNumber::new(16, 0));
        assert!(GoldenNumber::new(0, 10) < GoldenNumber::new(17, 0));
        assert_eq!(GoldenNumber::ZERO.signum(), 0);
    }

    fn small() -> impl Strategy<Value = GoldenNumber> {
        (-1000i64..1000, -1000i64..1000).prop_map(|(a, b)| GoldenNumber::new(a, b))
    }

    proptest! {
        #[test]
        fn ring_ops_agree_with_floats(x in small(), y in small()) {
            let tol = 1e-9 * (1.0 + x.eval().abs() + y.eval().abs());
            prop_assert!(((x + y).eval() - (x.eval() + y.eval())).abs() < tol);
            prop_assert!(((x - y).eval() - (x.eval() - y.eval())).abs() < tol);
            if let Some(p) = x.checked_mul(y) {
                prop_assert!((p.eval() - x.eval() * y.eval()).abs() < 1e-9 * (1.0 + (x.eval() * y.eval()).abs()));
            }
        }

        #[test]
        fn ring_integers_closed_under_product(a in -500i64..500, b in -500i64..500, c in -500i64..500, d in -500i64..500) {
            let x = GoldenNumber::new(2 * a, 2 * b);
            let y = GoldenNumber::new(2 * c, 2 * d);
            let p = x.checked_mul(y).expect("closed");
            prop_assert!(p.is_ring_integer());
        }

        #[test]
        fn ordering_matches_float(x in small(), y in small()) {
            let (fx, fy) = (x.eval(), y.eval());
            if (fx - fy).abs() > 1e-9 {
                prop_assert_eq!(x < y, fx < fy);
            } else {
                prop_assert_eq!(x == y, x.cmp(&y) == Ordering::Equal);
            }
        }
    }
}
