//! Models of mod-p Milnor K-theory of the base field, and the motivic
//! coefficient ring H^{*,*'}(point) = K^M_*(k)/p [tau].
//!
//! Two regimes are built in:
//! - the real numbers at p = 2, where K^M_*(R)/2 = Z/2[rho];
//! - "truncated" fields: an exterior algebra on n+1 degree-one classes
//!   with rho = 0 and a primitive p^2-th root of unity present, so that
//!   K_* vanishes above degree n+1 and Q_0(tau) = 0.
//!
//! Arbitrary finite presentations can be ingested from a JSON config and
//! are validated exhaustively at load (associativity, graded commutativity,
//! nonvanishing of the pure symbol, truncation consistency).

use crate::bidegree::{BiDegree, Window};
use crate::errors::{EngineError, Result};
use crate::fp;
use crate::label::Label;
use crate::module::{BasisVector, BigradedModule};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FieldKind {
    Real,
    ExteriorLocal { n: u32 },
    Custom,
}

#[derive(Clone, Debug)]
pub struct MilnorKModel {
    pub prime: u32,
    pub kind: FieldKind,
    /// Basis per degree, 0..=max_degree. Degree 0 is always [1].
    basis: Vec<Vec<Label>>,
    /// Full multiplication table for Custom models; built-ins use closed
    /// forms. Missing pair = zero product.
    table: BTreeMap<(Label, Label), Vec<(Label, i64)>>,
    name_degree: BTreeMap<Label, u32>,
    /// Class of -1; None means rho = 0 in K_1.
    pub rho: Option<Label>,
    /// The distinguished pure symbol (None for the real model, where the
    /// symbol rho^{n+1} depends on the chosen n).
    symbol_a: Option<Label>,
    pub truncate_above: Option<u32>,
    /// Primitive p^2-th root of unity present (forces Q_0(tau) = 0).
    pub zeta_p2: bool,
}

impl MilnorKModel {
    pub fn max_degree(&self) -> u32 {
        self.basis.len() as u32 - 1
    }

    pub fn k_basis(&self, degree: i64) -> &[Label] {
        if degree < 0 || degree as usize >= self.basis.len() {
            &[]
        } else {
            &self.basis[degree as usize]
        }
    }

    pub fn dim_k(&self, degree: i64) -> usize {
        self.k_basis(degree).len()
    }

    pub fn degree_of(&self, l: &Label) -> Option<u32> {
        if l.is_one() {
            return Some(0);
        }
        match self.kind {
            FieldKind::Real => {
                let e = l.exp_of("rho");
                (e >= 0 && l.without_sym("rho").is_one()).then_some(e as u32)
            }
            FieldKind::ExteriorLocal { .. } => {
                let mut d = 0u32;
                for (_, e) in l.syms_with_prefix("pi") {
                    if e != 1 {
                        return None;
                    }
                    d += 1;
                }
                (l.factors().len() as u32 == d).then_some(d)
            }
            FieldKind::Custom => self.name_degree.get(l).copied(),
        }
    }

    /// The pure symbol a in K_{n+1}. For the real model this is rho^{n+1}.
    pub fn symbol_a_for(&self, n: u32) -> Result<Label> {
        match self.kind {
            FieldKind::Real => Ok(Label::sym("rho", (n + 1) as i64)),
            _ => {
                let a = self
                    .symbol_a
                    .clone()
                    .ok_or_else(|| EngineError::Validation("model has no pure symbol".into()))?;
                let d = self.degree_of(&a).ok_or_else(|| {
                    EngineError::Validation(format!("pure symbol `{a}` is not a basis class"))
                })?;
                if d != n + 1 {
                    return Err(EngineError::Validation(format!(
                        "pure symbol `{a}` has degree {d}, expected n+1 = {}",
                        n + 1
                    )));
                }
                Ok(a)
            }
        }
    }

    /// Product of two basis classes as an F_p combination of basis classes.
    pub fn mult(&self, l1: &Label, l2: &Label) -> Vec<(Label, i64)> {
        if l1.is_one() {
            return vec![(l2.clone(), 1)];
        }
        if l2.is_one() {
            return vec![(l1.clone(), 1)];
        }
        match self.kind {
            FieldKind::Real => vec![(l1.mul(l2), 1)],
            FieldKind::ExteriorLocal { .. } => {
                // merge pi-index sets; zero on overlap; sign = parity of the
                // merge permutation (p odd), trivial for p = 2
                let idx = |l: &Label| -> Vec<u32> {
                    l.syms_with_prefix("pi")
                        .map(|(s, _)| s[2..].parse::<u32>().unwrap())
                        .collect()
                };
                let a = idx(l1);
                let b = idx(l2);
                for i in &b {
                    if a.contains(i) {
                        return Vec::new();
                    }
                }
                let mut inv = 0i64;
                for x in &a {
                    for y in &b {
                        if y < x {
                            inv += 1;
                        }
                    }
                }
                let sign = if self.prime == 2 || inv % 2 == 0 { 1 } else { -1 };
                vec![(l1.mul(l2), sign)]
            }
            FieldKind::Custom => self
                .table
                .get(&(l1.clone(), l2.clone()))
                .cloned()
                .unwrap_or_default(),
        }
    }

    /// Is the class in the augmentation ideal K_+?
    pub fn is_positive(&self, l: &Label) -> bool {
        !l.is_one()
    }

    /// Z/2[rho], materialized up to the window's top degree.
    pub fn real_model(window: &Window) -> MilnorKModel {
        let max = window.f_max.max(0) as u32;
        let basis = (0..=max)
            .map(|d| vec![Label::sym("rho", d as i64)])
            .collect();
        MilnorKModel {
            prime: 2,
            kind: FieldKind::Real,
            basis,
            table: BTreeMap::new(),
            name_degree: BTreeMap::new(),
            rho: Some(Label::sym("rho", 1)),
            symbol_a: None,
            truncate_above: None,
            zeta_p2: false,
        }
    }

    /// Exterior algebra on n+1 degree-one generators pi_1..pi_{n+1},
    /// a = pi_1 ... pi_{n+1}, rho = 0, truncated above n+1, zeta_{p^2}
    /// present. The simplest model with K_* = 0 for * > n+1 and
    /// K/Ker(a) = Z/p.
    pub fn exterior_local_model(n: u32, p: u32) -> Result<MilnorKModel> {
        if n < 1 {
            return Err(EngineError::Validation("need n >= 1".into()));
        }
        let gens = n + 1;
        let mut basis: Vec<Vec<Label>> = vec![Vec::new(); gens as usize + 1];
        for mask in 0u32..(1 << gens) {
            let mut l = Label::one();
            let mut d = 0u32;
            for i in 0..gens {
                if mask & (1 << i) != 0 {
                    l = l.mul(&Label::sym(&format!("pi{}", i + 1), 1));
                    d += 1;
                }
            }
            basis[d as usize].push(l);
        }
        for list in basis.iter_mut() {
            list.sort();
        }
        let symbol_a = basis[gens as usize][0].clone();
        let m = MilnorKModel {
            prime: p,
            kind: FieldKind::ExteriorLocal { n },
            basis,
            table: BTreeMap::new(),
            name_degree: BTreeMap::new(),
            rho: None,
            symbol_a: Some(symbol_a),
            truncate_above: Some(gens),
            zeta_p2: true,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn custom_model(config: &FieldConfig) -> Result<MilnorKModel> {
        let mut basis: Vec<Vec<Label>> = Vec::new();
        let mut name_degree = BTreeMap::new();
        let mut max = 0u32;
        for b in &config.basis {
            max = max.max(b.degree);
        }
        basis.resize(max as usize + 1, Vec::new());
        basis[0].push(Label::one());
        name_degree.insert(Label::one(), 0);
        for b in &config.basis {
            if b.degree == 0 {
                return Err(EngineError::Config(
                    "degree-0 basis is implicit (the unit); do not list it".into(),
                ));
            }
            let l: Label = b
                .name
                .parse()
                .map_err(|e| EngineError::Config(format!("bad label `{}`: {e}", b.name)))?;
            if name_degree.insert(l.clone(), b.degree).is_some() {
                return Err(EngineError::Config(format!("duplicate basis name `{}`", b.name)));
            }
            basis[b.degree as usize].push(l);
        }
        for list in basis.iter_mut() {
            list.sort();
        }
        let mut table = BTreeMap::new();
        let parse = |s: &str| -> Result<Label> {
            s.parse()
                .map_err(|e| EngineError::Config(format!("bad label `{s}`: {e}")))
        };
        for m in &config.multiplication {
            let l = parse(&m.left)?;
            let r = parse(&m.right)?;
            let dl = *name_degree
                .get(&l)
                .ok_or_else(|| EngineError::Config(format!("unknown class `{}`", m.left)))?;
            let dr = *name_degree
                .get(&r)
                .ok_or_else(|| EngineError::Config(format!("unknown class `{}`", m.right)))?;
            let mut val = Vec::new();
            for (name, c) in &m.value {
                val.push((parse(name)?, *c));
            }
            // graded-commutative partner
            let sign = if config.prime == 2 || (dl * dr) % 2 == 0 { 1 } else { -1 };
            let swapped: Vec<(Label, i64)> =
                val.iter().map(|(n, c)| (n.clone(), c * sign)).collect();
            table.insert((l.clone(), r.clone()), val);
            table.entry((r, l)).or_insert(swapped);
        }
        let rho = match &config.rho {
            Some(s) => Some(parse(s)?),
            None => None,
        };
        let model = MilnorKModel {
            prime: config.prime,
            kind: FieldKind::Custom,
            basis,
            table,
            name_degree,
            rho,
            symbol_a: Some(parse(&config.symbol_a)?),
            truncate_above: config.truncate_above,
            zeta_p2: config.zeta_p2,
        };
        model.validate()?;
        Ok(model)
    }

    /// Export a presentation that `custom_model` reloads to an equivalent
    /// model. The real model's symbol depends on n, hence the parameter.
    pub fn to_config(&self, n: u32) -> Result<FieldConfig> {
        let bound = self.max_degree().min(24);
        let mut basis = Vec::new();
        for d in 1..=bound {
            for l in self.k_basis(d as i64) {
                basis.push(BasisDecl { name: l.to_string(), degree: d });
            }
        }
        let mut multiplication = Vec::new();
        for d1 in 1..=bound {
            for d2 in d1..=bound {
                if d1 + d2 > bound {
                    continue;
                }
                for l1 in self.k_basis(d1 as i64) {
                    for l2 in self.k_basis(d2 as i64) {
                        if d1 == d2 && l1 > l2 {
                            continue;
                        }
                        let v = self.mult(l1, l2);
                        if !v.is_empty() {
                            multiplication.push(MultDecl {
                                left: l1.to_string(),
                                right: l2.to_string(),
                                value: v.into_iter().map(|(l, c)| (l.to_string(), c)).collect(),
                            });
                        }
                    }
                }
            }
        }
        Ok(FieldConfig {
            prime: self.prime,
            basis,
            multiplication,
            rho: self.rho.as_ref().map(|l| l.to_string()),
            symbol_a: self.symbol_a_for(n)?.to_string(),
            truncate_above: self.truncate_above,
            zeta_p2: self.zeta_p2,
        })
    }

    /// Full load-time validation of the invariants the rest of the engine
    /// relies on.
    pub fn validate(&self) -> Result<()> {
        let p = self.prime;
        let bound = self.max_degree().min(16);
        let classes: Vec<(u32, Label)> = (0..=bound)
            .flat_map(|d| self.k_basis(d as i64).iter().map(move |l| (d, l.clone())))
            .collect();

        let mul_vec = |v: &[(Label, i64)], l: &Label| -> BTreeMap<Label, u32> {
            let mut acc: BTreeMap<Label, u32> = BTreeMap::new();
            for (x, c) in v {
                for (y, c2) in self.mult(x, l) {
                    let e = acc.entry(y).or_insert(0);
                    *e = fp::add(p, *e, fp::mul(p, fp::norm(p, *c), fp::norm(p, c2)));
                }
            }
            acc.retain(|_, c| *c != 0);
            acc
        };

        // degree consistency + graded commutativity + associativity
        for (d1, l1) in &classes {
            for (d2, l2) in &classes {
                if d1 + d2 > bound {
                    continue;
                }
                let prod = self.mult(l1, l2);
                for (x, _) in &prod {
                    let dx = self.degree_of(x).ok_or_else(|| {
                        EngineError::Validation(format!("product term `{x}` not in basis"))
                    })?;
                    if dx != d1 + d2 {
                        return Err(EngineError::Validation(format!(
                            "product `{l1}`*`{l2}` violates grading"
                        )));
                    }
                }
                // graded commutativity
                let sign: i64 = if p == 2 || (d1 * d2) % 2 == 0 { 1 } else { -1 };
                let lhs = mul_vec(&[(l1.clone(), 1)], l2);
                let rhs = mul_vec(&[(l2.clone(), sign)], l1);
                if lhs != rhs {
                    return Err(EngineError::Validation(format!(
                        "graded commutativity fails on `{l1}`, `{l2}`"
                    )));
                }
                // odd-degree squares vanish for p odd
                if p != 2 && l1 == l2 && d1 % 2 == 1 && !prod.is_empty() {
                    return Err(EngineError::Validation(format!(
                        "odd-degree square `{l1}`^2 nonzero at odd p"
                    )));
                }
                for (d3, l3) in &classes {
                    if d1 + d2 + d3 > bound {
                        continue;
                    }
                    let ab_c = mul_vec(&self.mult(l1, l2), l3);
                    let bc = self.mult(l2, l3);
                    let mut a_bc: BTreeMap<Label, u32> = BTreeMap::new();
                    for (x, c) in &bc {
                        for (y, c2) in self.mult(l1, x) {
                            let e = a_bc.entry(y).or_insert(0);
                            *e = fp::add(p, *e, fp::mul(p, fp::norm(p, *c), fp::norm(p, c2)));
                        }
                    }
                    a_bc.retain(|_, c| *c != 0);
                    if ab_c != a_bc {
                        return Err(EngineError::Validation(format!(
                            "associativity fails on `{l1}`, `{l2}`, `{l3}`"
                        )));
                    }
                }
            }
        }

        // truncation flag consistent with the table
        if let Some(top) = self.truncate_above {
            for d in (top + 1)..=self.max_degree() {
                if !self.k_basis(d as i64).is_empty() {
                    return Err(EngineError::Validation(format!(
                        "truncation above {top} inconsistent: basis in degree {d}"
                    )));
                }
            }
        }

        // the pure symbol
        if let Some(a) = &self.symbol_a {
            let da = self
                .degree_of(a)
                .ok_or_else(|| EngineError::Validation("pure symbol vanishes".into()))?;
            if self.truncate_above.is_some() {
                // K_+ . a = 0 and K/Ker(a) = Z/p: multiplication by a kills
                // every positive-degree class, so the pairing against a has
                // total rank exactly 1 (from the unit).
                let mut pairing_rank = 0usize;
                for (d, l) in &classes {
                    let prod = self.mult(l, a);
                    if *d > 0 && !prod.is_empty() {
                        return Err(EngineError::Validation(format!(
                            "K_+ . a != 0: `{l}` * a = {:?}",
                            prod.iter().map(|(x, c)| format!("{c}*{x}")).collect::<Vec<_>>()
                        )));
                    }
                    if !prod.is_empty() {
                        pairing_rank += 1;
                    }
                }
                if pairing_rank != 1 {
                    return Err(EngineError::Validation(format!(
                        "K/Ker(a) has rank {pairing_rank}, expected Z/p"
                    )));
                }
                let _ = da;
            }
        }
        Ok(())
    }
}

/// JSON presentation of a field model.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct FieldConfig {
    pub prime: u32,
    pub basis: Vec<BasisDecl>,
    pub multiplication: Vec<MultDecl>,
    pub rho: Option<String>,
    pub symbol_a: String,
    pub truncate_above: Option<u32>,
    pub zeta_p2: bool,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct BasisDecl {
    pub name: String,
    pub degree: u32,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct MultDecl {
    pub left: String,
    pub right: String,
    pub value: Vec<(String, i64)>,
}

/// The bigraded coefficient ring H^{*,*'} = K^M_*(k)/p [tau], tau in
/// bidegree (0,1); Laurent mode adjoins tau^{-1}.
#[derive(Clone, Debug)]
pub struct CoefficientRing {
    pub laurent: bool,
    pub module: BigradedModule,
}

pub fn coefficient_ring(m: &MilnorKModel, window: &Window, laurent: bool) -> CoefficientRing {
    let mut module = BigradedModule::new(m.prime, *window);
    let f_top = window.f_max.min(m.max_degree() as i64);
    for f in window.f_min.max(0)..=f_top {
        for kappa in m.k_basis(f) {
            for s in window.s_min..=window.s_max {
                let t = s - f;
                if t < 0 && !laurent {
                    continue;
                }
                let label = kappa.times_sym("tau", t);
                module
                    .push(BasisVector::new(label, BiDegree::new(f, s)))
                    .expect("coefficient ring basis is collision-free");
            }
        }
    }
    CoefficientRing { laurent, module }
}

/// Is the label a monomial of the *reduced* coefficient ring (a nonunit)?
pub fn is_reduced_coefficient(l: &Label) -> bool {
    !l.is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_model_basis_is_rho_powers() {
        let w = Window::new(10, 0, 10);
        let m = MilnorKModel::real_model(&w);
        assert_eq!(m.k_basis(0), &[Label::one()][..]);
        assert_eq!(m.k_basis(3), &[Label::sym("rho", 3)][..]);
        for d in 0..=10 {
            assert_eq!(m.dim_k(d), 1);
        }
        assert_eq!(m.symbol_a_for(2).unwrap().to_string(), "rho^3");
    }

    #[test]
    fn exterior_model_dimensions_and_pairing() {
        // n=2, p=3: dims of Lambda(pi1,pi2,pi3) are binomials 1,3,3,1
        let m = MilnorKModel::exterior_local_model(2, 3).unwrap();
        assert_eq!(m.dim_k(0), 1);
        assert_eq!(m.dim_k(1), 3);
        assert_eq!(m.dim_k(2), 3);
        assert_eq!(m.dim_k(3), 1);
        assert_eq!(m.dim_k(4), 0);
        // a * pi1 = 0 by truncation
        let a = m.symbol_a_for(2).unwrap();
        assert!(m.mult(&a, &Label::sym("pi1", 1)).is_empty());
        // anticommutativity at p odd
        let p12 = m.mult(&Label::sym("pi1", 1), &Label::sym("pi2", 1));
        let p21 = m.mult(&Label::sym("pi2", 1), &Label::sym("pi1", 1));
        assert_eq!(p12[0].1, 1);
        assert_eq!(p21[0].1, -1);
    }

    #[test]
    fn exterior_model_p2_is_sign_free() {
        let m = MilnorKModel::exterior_local_model(2, 2).unwrap();
        let p12 = m.mult(&Label::sym("pi1", 1), &Label::sym("pi2", 1));
        let p21 = m.mult(&Label::sym("pi2", 1), &Label::sym("pi1", 1));
        assert_eq!(p12, p21);
    }

    #[test]
    fn coefficient_ring_bases() {
        let w = Window::new(8, 0, 8);
        let real = MilnorKModel::real_model(&w);
        let ring = coefficient_ring(&real, &w, false);
        // (1,1) is rho; (0,2) is tau^2
        assert_eq!(ring.module.at(BiDegree::new(1, 1))[0].label.to_string(), "rho");
        assert_eq!(ring.module.at(BiDegree::new(0, 2))[0].label.to_string(), "tau^2");
        // polynomial mode: nothing below the diagonal
        assert_eq!(ring.module.rank_at(BiDegree::new(3, 2)), 0);
        // Laurent mode: (3,2) is tau^-1 rho^3
        let lw = Window::new(8, -8, 8);
        let lring = coefficient_ring(&real, &lw, true);
        assert_eq!(
            lring.module.at(BiDegree::new(3, 2))[0].label.to_string(),
            "rho^3*tau^-1"
        );
    }

    #[test]
    fn custom_round_trips() {
        let w = Window::new(8, 0, 8);
        let real = MilnorKModel::real_model(&w);
        let cfg = real.to_config(2).unwrap();
        let back = MilnorKModel::custom_model(&cfg).unwrap();
        for d in 0..=8i64 {
            assert_eq!(back.k_basis(d), real.k_basis(d), "degree {d}");
        }
        assert_eq!(back.rho, real.rho);

        let ext = MilnorKModel::exterior_local_model(2, 3).unwrap();
        let cfg = ext.to_config(2).unwrap();
        let back = MilnorKModel::custom_model(&cfg).unwrap();
        for d in 0..=4i64 {
            assert_eq!(back.k_basis(d), ext.k_basis(d), "degree {d}");
        }
        // spot-check a product with its sign
        let x = Label::sym("pi2", 1);
        let y = Label::sym("pi1", 1);
        assert_eq!(back.mult(&x, &y), ext.mult(&x, &y));
    }

    #[test]
    fn custom_rejects_vanishing_symbol() {
        let ext = MilnorKModel::exterior_local_model(2, 3).unwrap();
        let mut cfg = ext.to_config(2).unwrap();
        cfg.symbol_a = "pi9".into(); // not a basis class
        let err = MilnorKModel::custom_model(&cfg).unwrap_err();
        assert!(err.to_string().contains("pure symbol vanishes"), "{err}");
    }
}
