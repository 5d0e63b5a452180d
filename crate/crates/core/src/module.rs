//! Bigraded F_p-modules with named bases, and plain rank tables for
//! outputs too large to materialize vector-by-vector.

use crate::bidegree::{BiDegree, Window};
use crate::errors::{EngineError, Result};
use crate::label::{Ann, Label};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::collections::BTreeSet;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BasisVector {
    pub label: Label,
    pub deg: BiDegree,
    pub ann: BTreeSet<Ann>,
}

impl BasisVector {
    pub fn new(label: Label, deg: BiDegree) -> Self {
        BasisVector { label, deg, ann: BTreeSet::new() }
    }

    pub fn with_ann(mut self, a: Ann) -> Self {
        self.ann.insert(a);
        self
    }
}

/// Finite list of named basis vectors per bidegree, complete inside the
/// window and empty outside it. Basis order within a bidegree is
/// lexicographic on labels, which makes every downstream computation
/// deterministic.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BigradedModule {
    pub prime: u32,
    pub window: Window,
    basis: BTreeMap<BiDegree, Vec<BasisVector>>,
}

impl BigradedModule {
    pub fn new(prime: u32, window: Window) -> Self {
        BigradedModule { prime, window, basis: BTreeMap::new() }
    }

    /// Insert a vector, keeping the per-bidegree basis sorted by label.
    pub fn push(&mut self, v: BasisVector) -> Result<()> {
        if !self.window.contains(v.deg) {
            return Err(EngineError::Truncation {
                deg: v.deg,
                what: format!("basis vector `{}` outside window {}", v.label, self.window),
            });
        }
        let list = self.basis.entry(v.deg).or_default();
        match list.binary_search_by(|x| x.label.cmp(&v.label)) {
            Ok(_) => Err(EngineError::DuplicateLabel { label: v.label.to_string(), deg: v.deg }),
            Err(i) => {
                list.insert(i, v);
                Ok(())
            }
        }
    }

    /// Insert, dropping the vector silently when it falls outside the window.
    pub fn push_windowed(&mut self, v: BasisVector) -> Result<()> {
        if self.window.contains(v.deg) {
            self.push(v)
        } else {
            Ok(())
        }
    }

    pub fn at(&self, deg: BiDegree) -> &[BasisVector] {
        self.basis.get(&deg).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn rank_at(&self, deg: BiDegree) -> usize {
        self.at(deg).len()
    }

    pub fn position(&self, deg: BiDegree, label: &Label) -> Option<usize> {
        let list = self.basis.get(&deg)?;
        list.binary_search_by(|x| x.label.cmp(label)).ok()
    }

    pub fn total_rank(&self) -> usize {
        self.basis.values().map(|v| v.len()).sum()
    }

    pub fn degrees(&self) -> impl Iterator<Item = BiDegree> + '_ {
        self.basis.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BasisVector> + '_ {
        self.basis.values().flat_map(|v| v.iter())
    }

    /// Restrict to a smaller window.
    pub fn crop(&self, window: Window) -> Self {
        let w = self.window.intersect(&window);
        let mut out = BigradedModule::new(self.prime, w);
        for (deg, list) in &self.basis {
            if w.contains(*deg) {
                out.basis.insert(*deg, list.clone());
            }
        }
        out
    }

    /// Disjoint union; the result window is the intersection (completeness
    /// is only guaranteed where both summands are complete).
    pub fn direct_sum(&self, other: &BigradedModule) -> Result<Self> {
        assert_eq!(self.prime, other.prime);
        let w = self.window.intersect(&other.window);
        let mut out = BigradedModule::new(self.prime, w);
        for v in self.iter().chain(other.iter()) {
            if w.contains(v.deg) {
                out.push(v.clone())?;
            }
        }
        Ok(out)
    }

    pub fn rank_table(&self) -> RankTable {
        RankTable(
            self.basis
                .iter()
                .filter(|(_, l)| !l.is_empty())
                .map(|(d, l)| (*d, l.len() as u64))
                .collect(),
        )
    }

    /// First bidegree (in lexicographic order) inside `window` where the two
    /// modules have different ranks.
    pub fn first_rank_mismatch(&self, other: &BigradedModule, window: &Window) -> Option<BiDegree> {
        let mut degs: BTreeSet<BiDegree> = BTreeSet::new();
        degs.extend(self.degrees().filter(|d| window.contains(*d)));
        degs.extend(other.degrees().filter(|d| window.contains(*d)));
        degs.into_iter()
            .find(|d| self.rank_at(*d) != other.rank_at(*d))
    }

    pub fn to_serializable(&self) -> SerializableModule {
        let mut basis = Vec::new();
        for (deg, list) in &self.basis {
            for v in list {
                basis.push(SerializableVector {
                    name: v.label.clone(),
                    f: deg.f,
                    s: deg.s,
                    annotations: v.ann.iter().map(|a| a.to_string()).collect(),
                });
            }
        }
        SerializableModule { prime: self.prime, window: self.window, basis }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_serializable()).expect("module serialization")
    }

    pub fn from_serializable(m: &SerializableModule) -> Result<Self> {
        let mut out = BigradedModule::new(m.prime, m.window);
        for v in &m.basis {
            let mut bv = BasisVector::new(v.name.clone(), BiDegree::new(v.f, v.s));
            for a in &v.annotations {
                let ann = match a.as_str() {
                    "ker" => Ann::Ker,
                    "vertical" => Ann::Vertical,
                    "Z-free" => Ann::ZFree,
                    "p-torsion" => Ann::PTorsion,
                    "integral-lift" => Ann::IntegralLift,
                    "conditional" => Ann::Conditional,
                    other => return Err(EngineError::Config(format!("unknown annotation {other}"))),
                };
                bv.ann.insert(ann);
            }
            out.push(bv)?;
        }
        Ok(out)
    }
}

/// Canonical JSON shape: {prime, window, basis: [{name, f, s, annotations}]}.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
pub struct SerializableModule {
    pub prime: u32,
    pub window: Window,
    pub basis: Vec<SerializableVector>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
pub struct SerializableVector {
    pub name: Label,
    pub f: i64,
    pub s: i64,
    pub annotations: Vec<String>,
}

/// Per-bidegree ranks without names; the representation of additive
/// results too large to list basis-by-basis.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct RankTable(pub BTreeMap<BiDegree, u64>);

impl RankTable {
    pub fn get(&self, d: BiDegree) -> u64 {
        self.0.get(&d).copied().unwrap_or(0)
    }

    pub fn add(&mut self, d: BiDegree, r: u64) {
        if r > 0 {
            *self.0.entry(d).or_insert(0) += r;
        }
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    /// Rank convolution: (a * b)(d) = sum over d1 + d2 = d of a(d1) b(d2),
    /// restricted to the window. Rank generating functions multiply.
    pub fn convolve(&self, other: &RankTable, window: &Window) -> RankTable {
        let mut out = RankTable::default();
        for (d1, r1) in &self.0 {
            for (d2, r2) in &other.0 {
                let d = *d1 + *d2;
                if window.contains(d) {
                    out.add(d, r1 * r2);
                }
            }
        }
        out
    }

    pub fn first_mismatch(&self, other: &RankTable, window: &Window) -> Option<(BiDegree, u64, u64)> {
        let mut degs: BTreeSet<BiDegree> = BTreeSet::new();
        degs.extend(self.0.keys().copied().filter(|d| window.contains(*d)));
        degs.extend(other.0.keys().copied().filter(|d| window.contains(*d)));
        for d in degs {
            let (a, b) = (self.get(d), other.get(d));
            if a != b {
                return Some((d, a, b));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w() -> Window {
        Window::new(10, -5, 10)
    }

    #[test]
    fn push_keeps_sorted_and_rejects_duplicates() {
        let mut m = BigradedModule::new(2, w());
        let d = BiDegree::new(1, 1);
        m.push(BasisVector::new(Label::sym("rho", 1), d)).unwrap();
        m.push(BasisVector::new(Label::sym("pi1", 1), d)).unwrap();
        assert_eq!(m.at(d)[0].label.to_string(), "pi1");
        assert!(m.push(BasisVector::new(Label::sym("rho", 1), d)).is_err());
        assert_eq!(m.rank_at(d), 2);
    }

    #[test]
    fn json_round_trip() {
        let mut m = BigradedModule::new(3, w());
        m.push(BasisVector::new(Label::qa(&[1, 0]).times_sym("t", 1), BiDegree::new(2, 1)))
            .unwrap();
        m.push(BasisVector::new(Label::sym("tau", 3), BiDegree::new(0, 3)).with_ann(Ann::ZFree))
            .unwrap();
        let json = m.to_json();
        let parsed: SerializableModule = serde_json::from_str(&json).unwrap();
        let back = BigradedModule::from_serializable(&parsed).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn convolution_multiplies_rank_series() {
        let mut a = RankTable::default();
        a.add(BiDegree::new(0, 0), 1);
        a.add(BiDegree::new(2, 1), 3);
        let mut b = RankTable::default();
        b.add(BiDegree::new(0, 0), 2);
        b.add(BiDegree::new(2, 1), 1);
        let c = a.convolve(&b, &w());
        assert_eq!(c.get(BiDegree::new(0, 0)), 2);
        assert_eq!(c.get(BiDegree::new(2, 1)), 7);
        assert_eq!(c.get(BiDegree::new(4, 2)), 3);
    }
}
