//! Structured basis-vector labels.
//!
//! A label is a commutative monomial in named symbols (`tau`, `rho`, `xi`,
//! `t`, `pi1`, `v2`, base-ring classes, ...) possibly together with one
//! iterated-Milnor-operation class `Q^E(a')`. Labels are kept in a canonical
//! sorted form so that lexicographic ordering on labels is a total,
//! deterministic basis order.

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// One generator symbol inside a label. QA sorts first so that operation
/// classes lead the printed monomial.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Gen {
    /// Q^E(a'): the Milnor-operation monomial applied to the distinguished
    /// class a'. Indices are stored strictly decreasing; the empty set is
    /// a' itself.
    QA(Vec<u8>),
    /// Plain named symbol.
    Sym(String),
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gen::Sym(s) => write!(f, "{s}"),
            Gen::QA(eps) => {
                for i in eps {
                    write!(f, "Q{i}")?;
                }
                write!(f, "(a')")
            }
        }
    }
}

/// Canonical commutative monomial. Invariants: factors sorted by generator,
/// no zero exponents, at most one QA factor and its exponent is 1.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Label {
    factors: Vec<(Gen, i64)>,
}

impl Label {
    pub fn one() -> Self {
        Label { factors: Vec::new() }
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn sym(name: &str, exp: i64) -> Self {
        let mut l = Label::one();
        if exp != 0 {
            l.factors.push((Gen::Sym(name.to_string()), exp));
        }
        l
    }

    /// Q^E(a') with the index set given in any order.
    pub fn qa(eps: &[u8]) -> Self {
        let mut e: Vec<u8> = eps.to_vec();
        e.sort_unstable_by(|a, b| b.cmp(a));
        e.dedup();
        Label { factors: vec![(Gen::QA(e), 1)] }
    }

    pub fn factors(&self) -> &[(Gen, i64)] {
        &self.factors
    }

    pub fn mul(&self, other: &Label) -> Label {
        let mut factors = self.factors.clone();
        for (g, e) in &other.factors {
            match factors.binary_search_by(|(h, _)| h.cmp(g)) {
                Ok(i) => {
                    factors[i].1 += e;
                    if factors[i].1 == 0 {
                        factors.remove(i);
                    }
                }
                Err(i) => factors.insert(i, (g.clone(), *e)),
            }
        }
        Label { factors }
    }

    pub fn times_sym(&self, name: &str, exp: i64) -> Label {
        self.mul(&Label::sym(name, exp))
    }

    pub fn exp_of(&self, name: &str) -> i64 {
        for (g, e) in &self.factors {
            if let Gen::Sym(s) = g {
                if s == name {
                    return *e;
                }
            }
        }
        0
    }

    /// The QA part, if present.
    pub fn qa_part(&self) -> Option<&[u8]> {
        for (g, e) in &self.factors {
            if let Gen::QA(eps) = g {
                debug_assert_eq!(*e, 1);
                return Some(eps);
            }
        }
        None
    }

    /// Label with the QA factor removed (if any).
    pub fn without_qa(&self) -> Label {
        Label {
            factors: self
                .factors
                .iter()
                .filter(|(g, _)| !matches!(g, Gen::QA(_)))
                .cloned()
                .collect(),
        }
    }

    /// Label with the named symbol removed entirely.
    pub fn without_sym(&self, name: &str) -> Label {
        Label {
            factors: self
                .factors
                .iter()
                .filter(|(g, _)| !matches!(g, Gen::Sym(s) if s == name))
                .cloned()
                .collect(),
        }
    }

    /// All Sym factors whose name starts with the prefix, as (suffix-index parsed, exp).
    pub fn syms_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, i64)> {
        self.factors.iter().filter_map(move |(g, e)| match g {
            Gen::Sym(s) if s.starts_with(prefix) => Some((s.as_str(), *e)),
            _ => None,
        })
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for (g, e) in &self.factors {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "{g}")?;
            } else {
                write!(f, "{g}^{e}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "1" {
            return Ok(Label::one());
        }
        let mut out = Label::one();
        for part in s.split('*') {
            let (head, exp) = match part.rsplit_once('^') {
                Some((h, e)) => (h, e.parse::<i64>().map_err(|e| e.to_string())?),
                None => (part, 1),
            };
            if let Some(qs) = head.strip_suffix("(a')") {
                if exp != 1 {
                    return Err(format!("QA factor with exponent {exp} in {s}"));
                }
                let mut eps = Vec::new();
                if !qs.is_empty() {
                    for piece in qs.split('Q') {
                        if piece.is_empty() {
                            continue;
                        }
                        eps.push(piece.parse::<u8>().map_err(|e| e.to_string())?);
                    }
                }
                out = out.mul(&Label::qa(&eps));
            } else {
                out = out.mul(&Label::sym(head, exp));
            }
        }
        Ok(out)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        Label::from_str(&s).map_err(de::Error::custom)
    }
}

/// Basis-vector annotations.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Ann {
    /// Came out of a kernel computation.
    Ker,
    /// Carries a vertical symbol (exists only in products, never alone).
    Vertical,
    /// Reduction of a free integral class.
    ZFree,
    /// Reduction of a p-torsion integral class.
    PTorsion,
    /// Has a distinguished integral lift recorded in the lift ledger.
    IntegralLift,
    /// Only valid when the extended-differential assumption is switched on.
    Conditional,
}

impl fmt::Display for Ann {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Ann::Ker => "ker",
            Ann::Vertical => "vertical",
            Ann::ZFree => "Z-free",
            Ann::PTorsion => "p-torsion",
            Ann::IntegralLift => "integral-lift",
            Ann::Conditional => "conditional",
        };
        write!(f, "{s}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_products() {
        let a = Label::sym("tau", -2).mul(&Label::sym("rho", 4));
        let b = Label::sym("rho", 4).mul(&Label::sym("tau", -2));
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "rho^4*tau^-2");
        let c = a.mul(&Label::sym("tau", 2));
        assert_eq!(c.to_string(), "rho^4");
        assert_eq!(c.mul(&Label::sym("rho", -4)), Label::one());
    }

    #[test]
    fn qa_display_and_order() {
        let q = Label::qa(&[0, 2]);
        assert_eq!(q.to_string(), "Q2Q0(a')");
        assert_eq!(Label::qa(&[]).to_string(), "(a')");
        let with_xi = q.mul(&Label::sym("xi", 2));
        assert_eq!(with_xi.qa_part(), Some(&[2u8, 0][..]));
        assert_eq!(with_xi.exp_of("xi"), 2);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["1", "rho^4*tau^-2", "Q2Q0(a')*t^2*xi", "(a')*t", "pi1*pi2*tau^3"] {
            let l: Label = s.parse().unwrap();
            assert_eq!(l.to_string(), s, "round trip of {s}");
        }
    }
}
