//! Bidegrees and computation windows.
//!
//! A class has a first (topological) degree `f` and a second (weight)
//! degree `s`. Derived quantities: the weight `w = 2s - f` and the
//! diagonal distance `d = f - s`. Every construction lives inside an
//! explicit rectangular window; anything outside is not materialized.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Neg, Sub};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct BiDegree {
    pub f: i64,
    pub s: i64,
}

impl BiDegree {
    pub const ZERO: BiDegree = BiDegree { f: 0, s: 0 };

    pub fn new(f: i64, s: i64) -> Self {
        BiDegree { f, s }
    }

    /// Weight w(x) = 2 s.deg(x) - f.deg(x).
    pub fn w(&self) -> i64 {
        2 * self.s - self.f
    }

    /// Diagonal d(x) = f.deg(x) - s.deg(x).
    pub fn d(&self) -> i64 {
        self.f - self.s
    }

    pub fn scaled(&self, k: i64) -> Self {
        BiDegree::new(self.f * k, self.s * k)
    }
}

impl Add for BiDegree {
    type Output = BiDegree;
    fn add(self, rhs: BiDegree) -> BiDegree {
        BiDegree::new(self.f + rhs.f, self.s + rhs.s)
    }
}

impl Sub for BiDegree {
    type Output = BiDegree;
    fn sub(self, rhs: BiDegree) -> BiDegree {
        BiDegree::new(self.f - rhs.f, self.s - rhs.s)
    }
}

impl Neg for BiDegree {
    type Output = BiDegree;
    fn neg(self) -> BiDegree {
        BiDegree::new(-self.f, -self.s)
    }
}

impl std::fmt::Display for BiDegree {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(fm, "({},{})", self.f, self.s)
    }
}

/// Materialization region: a rectangle in (f, s) with an optional weight
/// floor w >= w_min cutting off the low-weight corner. A module with
/// window `W` is complete at every bidegree inside `W`: its basis there is
/// the full basis of the modeled object. Outside the window nothing is
/// stored. The weight floor exists because iterated constructions only
/// ever move along the diagonal: their honest working region is a band,
/// and the low-weight corner of the enclosing rectangle would need
/// unboundedly deep periodicity classes to be complete.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Window {
    pub f_min: i64,
    pub f_max: i64,
    pub s_min: i64,
    pub s_max: i64,
    #[serde(default)]
    pub w_min: Option<i64>,
}

impl Window {
    /// Window starting at f = 0 (the common case for cohomology of a
    /// geometric object).
    pub fn new(f_max: i64, s_min: i64, s_max: i64) -> Self {
        Window { f_min: 0, f_max, s_min, s_max, w_min: None }
    }

    pub fn with_f_min(mut self, f_min: i64) -> Self {
        self.f_min = f_min;
        self
    }

    pub fn with_w_min(mut self, w_min: Option<i64>) -> Self {
        self.w_min = w_min;
        self
    }

    /// The weight of every point of the window is at least this.
    pub fn effective_w_min(&self) -> i64 {
        let corner = 2 * self.s_min - self.f_max;
        match self.w_min {
            Some(w) => w.max(corner),
            None => corner,
        }
    }

    pub fn contains(&self, d: BiDegree) -> bool {
        self.f_min <= d.f
            && d.f <= self.f_max
            && self.s_min <= d.s
            && d.s <= self.s_max
            && self.w_min.map_or(true, |w| d.w() >= w)
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        self.f_min <= other.f_min
            && other.f_max <= self.f_max
            && self.s_min <= other.s_min
            && other.s_max <= self.s_max
            && self.w_min.map_or(true, |w| w <= other.effective_w_min())
    }

    /// Translate the window by a degree shift.
    pub fn shifted(&self, by: BiDegree) -> Self {
        Window {
            f_min: self.f_min + by.f,
            f_max: self.f_max + by.f,
            s_min: self.s_min + by.s,
            s_max: self.s_max + by.s,
            w_min: self.w_min.map(|w| w + by.w()),
        }
    }

    /// Grow the rectangle by the given margins (all nonnegative); the
    /// weight floor is kept.
    pub fn padded(&self, f_lo: i64, f_hi: i64, s_lo: i64, s_hi: i64) -> Self {
        Window {
            f_min: self.f_min - f_lo,
            f_max: self.f_max + f_hi,
            s_min: self.s_min - s_lo,
            s_max: self.s_max + s_hi,
            w_min: self.w_min,
        }
    }

    pub fn intersect(&self, other: &Window) -> Self {
        Window {
            f_min: self.f_min.max(other.f_min),
            f_max: self.f_max.min(other.f_max),
            s_min: self.s_min.max(other.s_min),
            s_max: self.s_max.min(other.s_max),
            w_min: match (self.w_min, other.w_min) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
        }
    }

    pub fn is_empty(&self) -> bool {
        self.f_min > self.f_max || self.s_min > self.s_max
    }

    pub fn iter(&self) -> impl Iterator<Item = BiDegree> + '_ {
        let w = *self;
        (w.f_min..=w.f_max)
            .flat_map(move |f| (w.s_min..=w.s_max).map(move |s| BiDegree::new(f, s)))
            .filter(move |d| w.contains(*d))
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            fm,
            "f:[{},{}] s:[{},{}]",
            self.f_min, self.f_max, self.s_min, self.s_max
        )
    }
}

pub fn ipow(base: i64, exp: u32) -> i64 {
    base.pow(exp)
}

/// b_n = (p^n - 1)/(p - 1) = 1 + p + ... + p^{n-1}.
pub fn b_number(p: u32, n: u32) -> i64 {
    (ipow(p as i64, n) - 1) / (p as i64 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_and_diagonal() {
        let d = BiDegree::new(3, 2);
        assert_eq!(d.w(), 1);
        assert_eq!(d.d(), 1);
        // tau lives at (0,1): weight 2, diagonal -1
        let tau = BiDegree::new(0, 1);
        assert_eq!(tau.w(), 2);
        assert_eq!(tau.d(), -1);
    }

    #[test]
    fn b_number_values() {
        assert_eq!(b_number(2, 2), 3);
        assert_eq!(b_number(2, 3), 7);
        assert_eq!(b_number(3, 2), 4);
        assert_eq!(b_number(3, 3), 13);
        assert_eq!(b_number(5, 2), 6);
    }

    #[test]
    fn window_ops() {
        let w = Window::new(10, -2, 12);
        assert!(w.contains(BiDegree::new(0, 0)));
        assert!(!w.contains(BiDegree::new(-1, 0)));
        let ws = w.shifted(BiDegree::new(2, 1));
        assert_eq!(ws.f_min, 2);
        assert_eq!(ws.s_max, 13);
        assert!(w.padded(1, 0, 0, 0).contains(BiDegree::new(-1, 0)));
    }
}
