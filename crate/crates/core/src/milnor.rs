//! Milnor operations Q_i, the motivic Sq^2 over the reals, and the
//! exterior-algebra bookkeeping used by the Margolis towers.
//!
//! Q_i has bidegree shift (2p^i - 1, p^i - 1). The second coordinate is
//! pinned by three independent consistency checks rather than taken from
//! any single displayed formula: the closed-form values of Q^eps(a') over
//! the reals, the degree (2b_n + 1, b_n) of the composite
//! Q_{n-1}...Q_0(a'), and the first degree 2b_{n+1} of xi. See the tests.

use crate::bidegree::{ipow, BiDegree};
use crate::errors::{EngineError, Result};
use std::collections::BTreeSet;

/// Bidegree shift of Q_i.
pub fn q_degree(i: u32, p: u32) -> BiDegree {
    let pi = ipow(p as i64, i);
    BiDegree::new(2 * pi - 1, pi - 1)
}

/// Multi-index eps = (eps_0, ..., eps_{n-1}) with entries 0/1, for
/// Q^eps = Q_0^{eps_0} ... Q_{n-1}^{eps_{n-1}} at p = 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsilonIndex(pub Vec<u8>);

impl EpsilonIndex {
    pub fn all(n: u32) -> Vec<EpsilonIndex> {
        (0u32..(1 << n))
            .map(|mask| EpsilonIndex((0..n).map(|i| ((mask >> i) & 1) as u8).collect()))
            .collect()
    }

    /// d(eps) = sum eps_i 2^i.
    pub fn d(&self) -> i64 {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &e)| e as i64 * ipow(2, i as u32))
            .sum()
    }

    /// f(eps) = sum eps_i (2^{i+1} - 1).
    pub fn f_exp(&self) -> i64 {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &e)| e as i64 * (ipow(2, i as u32 + 1) - 1))
            .sum()
    }

    pub fn support(&self) -> Vec<u32> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e == 1)
            .map(|(i, _)| i as u32)
            .collect()
    }
}

/// A Laurent monomial tau^t rho^r over F_2.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct LaurentMono {
    pub tau: i64,
    pub rho: i64,
}

impl LaurentMono {
    pub fn new(tau: i64, rho: i64) -> Self {
        LaurentMono { tau, rho }
    }

    pub fn deg(&self) -> BiDegree {
        BiDegree::new(self.rho, self.tau + self.rho)
    }

    pub fn mul(&self, other: &LaurentMono) -> LaurentMono {
        LaurentMono::new(self.tau + other.tau, self.rho + other.rho)
    }
}

/// An F_2 sum of Laurent monomials (cancellation built in).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LaurentElt(pub BTreeSet<LaurentMono>);

impl LaurentElt {
    pub fn zero() -> Self {
        LaurentElt(BTreeSet::new())
    }

    pub fn mono(m: LaurentMono) -> Self {
        let mut s = BTreeSet::new();
        s.insert(m);
        LaurentElt(s)
    }

    pub fn toggle(&mut self, m: LaurentMono) {
        if !self.0.remove(&m) {
            self.0.insert(m);
        }
    }

    pub fn xor(&self, other: &LaurentElt) -> LaurentElt {
        let mut out = self.clone();
        for m in &other.0 {
            out.toggle(*m);
        }
        out
    }
}

/// Closed form: Q^eps(a') = tau^{-d(eps)-1} rho^{f(eps)+n+1} over the reals.
pub fn q_monomial(eps: &EpsilonIndex, n: u32) -> LaurentMono {
    LaurentMono::new(-eps.d() - 1, eps.f_exp() + n as i64 + 1)
}

/// Does Q_1(tau^b) = rho^3 tau^{b-2} carry coefficient 1? Pure coproduct
/// recursion from the declared values Q_1(tau) = 0, Q_1(tau^{-1}) =
/// rho^3 tau^{-3} and psi(Q_1) = Q_1 x 1 + 1 x Q_1 + rho Q_0 x Q_0.
fn q1_tau(b: i64) -> bool {
    match b {
        0 | 1 => false,
        -1 => true,
        _ if b > 1 => q1_tau(b - 1) ^ ((b - 1).rem_euclid(2) == 1),
        _ => q1_tau(b + 1) ^ true ^ ((b + 1).rem_euclid(2) == 1),
    }
}

/// Does Sq^2(tau^b) = rho^2 tau^{b-1} carry coefficient 1? Recursion from
/// Sq^2(tau) = 0, Sq^1(tau) = rho and the weighted Cartan expansion
/// Sq^2(xy) = Sq^2(x) y + tau Sq^1(x) Sq^1(y) + x Sq^2(y).
fn sq2_tau(b: i64) -> bool {
    match b {
        0 | 1 => false,
        -1 => true,
        _ if b > 1 => sq2_tau(b - 1) ^ ((b - 1).rem_euclid(2) == 1),
        _ => sq2_tau(b + 1) ^ true ^ ((b + 1).rem_euclid(2) == 1),
    }
}

fn q0_mono(m: &LaurentMono) -> LaurentElt {
    if m.tau.rem_euclid(2) == 1 {
        LaurentElt::mono(LaurentMono::new(m.tau - 1, m.rho + 1))
    } else {
        LaurentElt::zero()
    }
}

fn q1_mono(m: &LaurentMono) -> LaurentElt {
    if q1_tau(m.tau) {
        LaurentElt::mono(LaurentMono::new(m.tau - 2, m.rho + 3))
    } else {
        LaurentElt::zero()
    }
}

/// Sq^2 on a Laurent monomial over the reals.
pub fn sq2_real(m: &LaurentMono) -> LaurentElt {
    if sq2_tau(m.tau) {
        LaurentElt::mono(LaurentMono::new(m.tau - 1, m.rho + 2))
    } else {
        LaurentElt::zero()
    }
}

/// Sq^1 = Q_0 on a Laurent monomial over the reals.
pub fn sq1_real(m: &LaurentMono) -> LaurentElt {
    q0_mono(m)
}

/// Derivation/coproduct evaluation of Q_i on the real Laurent model.
/// Only i = 0, 1 carry coproduct data; higher i need the closed form.
pub fn q_on_real_laurent(i: u32, x: &LaurentElt) -> Result<LaurentElt> {
    let mut out = LaurentElt::zero();
    for m in &x.0 {
        let part = match i {
            0 => q0_mono(m),
            1 => q1_mono(m),
            _ => return Err(EngineError::UnsupportedCoproduct(i)),
        };
        out = out.xor(&part);
    }
    Ok(out)
}

/// Insert index r into a strictly decreasing Q-index set. Returns the new
/// set and the sign (-1)^{#{e in E : e > r}} from moving Q_r past the
/// larger operations into canonical position. None if r is already there.
pub fn q_insert(r: u8, eps: &[u8]) -> Option<(Vec<u8>, i64)> {
    if eps.contains(&r) {
        return None;
    }
    let larger = eps.iter().filter(|&&e| e > r).count();
    let mut out = eps.to_vec();
    out.push(r);
    out.sort_unstable_by(|a, b| b.cmp(a));
    let sign = if larger % 2 == 0 { 1 } else { -1 };
    Some((out, sign))
}

/// One summand of the decomposition of the reduced exterior algebra
/// Q~(n-1) (the basis of Q(n-1) minus its top class):
///
///   Q~(n-1) = Q(n-1)' + sum_{i=1}^{n-1} Q(i-1)' Q_{n-1}...Q_{i+1} Q_0
///
/// where Q(i)' = Lambda(Q_i, ..., Q_1). Each summand's Margolis tower
/// collapses onto BP^*/I_{ideal_index} on the class with indices
/// `margolis_class`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Summand {
    /// Free exterior indices (the Q(i-1)' part).
    pub free: Vec<u8>,
    /// Fixed indices present in every basis element of the summand.
    pub tag: Vec<u8>,
    /// I_{ideal_index} = (p, v_1, ..., v_{ideal_index - 1}).
    pub ideal_index: u32,
    /// Index set of the surviving class c_i = Q_0...^Q_i...Q_{n-1}(a').
    pub margolis_class: Vec<u8>,
}

impl Summand {
    /// All index sets E belonging to this summand.
    pub fn members(&self) -> Vec<Vec<u8>> {
        let k = self.free.len();
        (0u32..(1 << k))
            .map(|mask| {
                let mut e: Vec<u8> = self.tag.clone();
                for (j, &idx) in self.free.iter().enumerate() {
                    if mask & (1 << j) != 0 {
                        e.push(idx);
                    }
                }
                e.sort_unstable_by(|a, b| b.cmp(a));
                e
            })
            .collect()
    }
}

/// Decompose the 2^n - 1 element basis of Q~(n-1).
pub fn reduced_exterior_decomposition(n: u32) -> Vec<Summand> {
    assert!(n >= 1);
    let mut out = Vec::new();
    // Q(n-1)' = Lambda(Q_{n-1}, ..., Q_1): everything without Q_0
    out.push(Summand {
        free: (1..n).map(|i| i as u8).collect(),
        tag: Vec::new(),
        ideal_index: n,
        margolis_class: (1..n).rev().map(|i| i as u8).collect(),
    });
    // summand i: contains Q_0 and Q_{i+1..n-1}, omits Q_i, free below i
    for i in 1..n {
        let mut tag: Vec<u8> = ((i + 1)..n).rev().map(|j| j as u8).collect();
        tag.push(0);
        let mut class: Vec<u8> = (0..n).filter(|&j| j != i).map(|j| j as u8).collect();
        class.sort_unstable_by(|a, b| b.cmp(a));
        out.push(Summand {
            free: (1..i).map(|j| j as u8).collect(),
            tag,
            ideal_index: i,
            margolis_class: class,
        });
    }
    out
}

/// Which summand does the index set E (a proper subset of 0..n-1) lie in?
pub fn summand_of(e: &[u8], n: u32) -> usize {
    if !e.contains(&0) {
        return 0;
    }
    // largest index in 1..n-1 missing from E
    for i in (1..n).rev() {
        if !e.contains(&(i as u8)) {
            return i as usize;
        }
    }
    unreachable!("E = full set is not in the reduced algebra")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bidegree::b_number;

    #[test]
    fn q_degree_pinned_by_three_checks() {
        // Bockstein
        assert_eq!(q_degree(0, 2), BiDegree::new(1, 0));
        assert_eq!(q_degree(0, 5), BiDegree::new(1, 0));
        // closed-form values over the reals: a' at (3,2), Q_0 a' at (4,2),
        // Q_1 a' at (6,3)
        assert_eq!(q_degree(1, 2), BiDegree::new(3, 1));
        assert_eq!(BiDegree::new(3, 2) + q_degree(1, 2), BiDegree::new(6, 3));
        // deg(Q_{n-1}...Q_0(a')) = (2 b_n + 1, b_n) for p=2, n=2
        let delta = BiDegree::new(3, 2) + q_degree(0, 2) + q_degree(1, 2);
        assert_eq!(delta, BiDegree::new(2 * b_number(2, 2) + 1, b_number(2, 2)));
        // |xi| = 2 b_{n+1}: one more Q_2
        let xi = delta + q_degree(2, 2);
        assert_eq!(xi.f, 2 * b_number(2, 3));
        assert_eq!(q_degree(2, 2), BiDegree::new(7, 3));
    }

    #[test]
    fn q_monomial_table() {
        // the n = 2 closed-form values
        let cases = [
            (vec![0, 0], -1, 3),
            (vec![1, 0], -2, 4),
            (vec![0, 1], -3, 6),
            (vec![1, 1], -4, 7),
        ];
        for (eps, tau, rho) in cases {
            let m = q_monomial(&EpsilonIndex(eps.clone()), 2);
            assert_eq!((m.tau, m.rho), (tau, rho), "eps={eps:?}");
        }
    }

    #[test]
    fn q0_and_q1_base_cases() {
        let tau = LaurentMono::new(1, 0);
        let tau_inv = LaurentMono::new(-1, 0);
        assert_eq!(
            q_on_real_laurent(0, &LaurentElt::mono(tau)).unwrap(),
            LaurentElt::mono(LaurentMono::new(0, 1))
        );
        assert_eq!(
            q_on_real_laurent(0, &LaurentElt::mono(tau_inv)).unwrap(),
            LaurentElt::mono(LaurentMono::new(-2, 1))
        );
        // Q_0(1) = 0
        assert_eq!(
            q_on_real_laurent(0, &LaurentElt::mono(LaurentMono::new(0, 0))).unwrap(),
            LaurentElt::zero()
        );
        // Q_1(tau^-1) = rho^3 tau^-3
        assert_eq!(
            q_on_real_laurent(1, &LaurentElt::mono(tau_inv)).unwrap(),
            LaurentElt::mono(LaurentMono::new(-3, 3))
        );
        // Q_1(tau^2) = rho^3 tau^0 (nonzero over R)
        assert_eq!(
            q_on_real_laurent(1, &LaurentElt::mono(LaurentMono::new(2, 0))).unwrap(),
            LaurentElt::mono(LaurentMono::new(0, 3))
        );
        assert!(q_on_real_laurent(2, &LaurentElt::mono(tau)).is_err());
    }

    #[test]
    fn two_route_check_small() {
        // iterated derivation route vs closed form, eps supported in {0,1}
        for n in [2u32, 3] {
            let aprime = LaurentElt::mono(q_monomial(&EpsilonIndex(vec![0; n as usize]), n));
            for e0 in 0..=1u8 {
                for e1 in 0..=1u8 {
                    let mut eps = vec![0u8; n as usize];
                    eps[0] = e0;
                    eps[1] = e1;
                    let mut x = aprime.clone();
                    if e1 == 1 {
                        x = q_on_real_laurent(1, &x).unwrap();
                    }
                    if e0 == 1 {
                        x = q_on_real_laurent(0, &x).unwrap();
                    }
                    let closed = LaurentElt::mono(q_monomial(&EpsilonIndex(eps.clone()), n));
                    assert_eq!(x, closed, "n={n} eps={eps:?}");
                }
            }
        }
    }

    #[test]
    fn sq2_satisfies_the_derived_identities() {
        // Sq2(a') = rho Q0(a'), Sq2(Q0 a') = Q1(a') over the reals (n=2)
        let aprime = LaurentMono::new(-1, 3);
        let q0a = LaurentMono::new(-2, 4);
        let q1a = LaurentMono::new(-3, 6);
        assert_eq!(sq2_real(&aprime), LaurentElt::mono(LaurentMono::new(-2, 5)));
        assert_eq!(sq2_real(&q0a), LaurentElt::mono(q1a));
        // Sq2 Sq2 is tau-divisible relative to its source: the composite
        // lands one tau step above the straight-line target, so it dies on
        // every mod-tau page (where it is the d_2 of a spectral sequence).
        // Concretely Sq2 Sq2 (tau^b rho^c) is either zero or the single
        // monomial tau^{b-2} rho^{c+4}, nonzero exactly when b = 3 mod 4.
        for t in -8..8i64 {
            for r in 0..4 {
                let m = LaurentMono::new(t, r);
                let once = sq2_real(&m);
                let mut twice = LaurentElt::zero();
                for x in &once.0 {
                    twice = twice.xor(&sq2_real(x));
                }
                let expect = if t.rem_euclid(4) == 3 {
                    LaurentElt::mono(LaurentMono::new(t - 2, r + 4))
                } else {
                    LaurentElt::zero()
                };
                assert_eq!(twice, expect, "Sq2 Sq2 at {m:?}");
            }
        }
        // Q_1 = Q_0 Sq^2 + Sq^2 Q_0 on monomials
        for t in -6..6 {
            for r in 0..4 {
                let m = LaurentMono::new(t, r);
                let mut lhs = LaurentElt::zero();
                for x in &sq2_real(&m).0 {
                    lhs = lhs.xor(&q0_mono(x));
                }
                for x in &q0_mono(&m).0 {
                    lhs = lhs.xor(&sq2_real(x));
                }
                let rhs = q1_mono(&m);
                assert_eq!(lhs, rhs, "Q1 != [Q0, Sq2] at {m:?}");
            }
        }
    }

    #[test]
    fn decomposition_partitions_the_reduced_basis() {
        for n in [1u32, 2, 3, 4] {
            let summands = reduced_exterior_decomposition(n);
            let mut seen = BTreeSet::new();
            let mut total = 0usize;
            for s in &summands {
                for e in s.members() {
                    assert!(e.len() < n as usize || e.iter().max().copied().unwrap_or(0) < n as u8);
                    assert!(seen.insert(e.clone()), "duplicate member {e:?} (n={n})");
                    total += 1;
                }
            }
            assert_eq!(total, (1usize << n) - 1, "n={n}");
            // full set must be absent
            let full: Vec<u8> = (0..n).rev().map(|i| i as u8).collect();
            assert!(!seen.contains(&full));
            // membership classifier agrees
            for (idx, s) in summands.iter().enumerate() {
                for e in s.members() {
                    assert_eq!(summand_of(&e, n), idx);
                }
            }
        }
        // n=2 explicitly: {1, Q1} + {Q0}
        let s = reduced_exterior_decomposition(2);
        assert_eq!(s[0].members().len(), 2);
        assert_eq!(s[1].members(), vec![vec![0u8]]);
        // n=3: cardinalities 4 + 2 + 1 = 7
        let s = reduced_exterior_decomposition(3);
        let mut sizes: Vec<usize> = s.iter().map(|x| x.members().len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 2, 4]);
    }

    #[test]
    fn q_insert_signs() {
        assert_eq!(q_insert(1, &[2, 0]), Some((vec![2, 1, 0], -1)));
        assert_eq!(q_insert(3, &[2, 0]), Some((vec![3, 2, 0], 1)));
        assert_eq!(q_insert(2, &[2, 0]), None);
    }
}
