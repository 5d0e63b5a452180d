//! Cohomology of the Cech object attached to a pure symbol a in
//! K^M_{n+1}(k)/p, with its named generators and the multiplication-by-
//! delta endomorphism.
//!
//! Basis conventions. The coefficient part consists of monomials
//! kappa * tau^b. The reduced part is free on classes Q^E(a') xi^j where
//! E runs over proper subsets of {0,...,n}; the full set is folded into
//! the xi-power (xi = Q_n...Q_0(a') by definition), so pure powers xi^m
//! are their own labels. In the real regime every class also carries a
//! rho-power and embeds into Z/2[rho, tau, tau^{-1}] as a single Laurent
//! monomial (no tau-torsion), which makes all structure maps exact
//! exponent arithmetic.

use crate::bidegree::{b_number, BiDegree, Window};
use crate::errors::{EngineError, Result};
use crate::fieldmodel::{FieldKind, MilnorKModel};
use crate::label::Label;
use crate::linmap::LinearMap;
use crate::milnor::{q_degree, q_insert, LaurentMono};
use crate::module::{BasisVector, BigradedModule};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Regime {
    Truncated,
    Real,
}

#[derive(Clone, Debug)]
pub struct ChiAlgebra {
    pub regime: Regime,
    pub model: MilnorKModel,
    pub prime: u32,
    pub n: u32,
    pub b_n: i64,
    pub module: BigradedModule,
    /// Laurent exponents of every basis label (real regime only).
    laurent_of: BTreeMap<Label, LaurentMono>,
    /// Reverse lookup from Laurent exponents (real regime only).
    laurent_to: BTreeMap<(i64, i64), Label>,
}

/// How a basis label participates in the delta / restriction rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelKind {
    /// The unit coefficient monomial.
    Unit,
    /// A nonunit coefficient monomial (tau / K_+ / v-polynomial part).
    Coeff,
    /// rest * Q^E(a') xi^j; pure xi-powers are E = full with j = m - 1.
    Qa { eps: Vec<u8>, xi: i64, rest: Label },
}

/// Classify a label relative to the Q-module structure with top index n
/// (so the "full" set is {0,...,n}).
pub fn classify(label: &Label, n: u32) -> LabelKind {
    if let Some(eps) = label.qa_part() {
        let xi = label.exp_of("xi");
        let rest = label.without_qa().without_sym("xi");
        return LabelKind::Qa { eps: eps.to_vec(), xi, rest };
    }
    let m = label.exp_of("xi");
    if m >= 1 {
        let full: Vec<u8> = (0..=n).rev().map(|i| i as u8).collect();
        let rest = label.without_sym("xi");
        return LabelKind::Qa { eps: full, xi: m - 1, rest };
    }
    if label.is_one() {
        LabelKind::Unit
    } else {
        LabelKind::Coeff
    }
}

/// Reassemble a Qa-kind label, folding the full index set back into the
/// xi-power.
pub fn qa_label(eps: &[u8], xi: i64, rest: &Label, n: u32) -> Label {
    let is_full = eps.len() == (n + 1) as usize;
    if is_full {
        rest.times_sym("xi", xi + 1)
    } else {
        rest.mul(&Label::qa(eps)).times_sym("xi", xi)
    }
}

/// Formal bidegree of Q^E(a') xi^j (coefficient factors excluded).
pub fn qa_degree(eps: &[u8], xi: i64, n: u32, p: u32) -> BiDegree {
    let mut d = BiDegree::new(n as i64 + 1, n as i64);
    for &i in eps {
        d = d + q_degree(i as u32, p);
    }
    let b_next = b_number(p, n + 1);
    let xi_deg = BiDegree::new(2 * b_next, b_next - 1);
    d + xi_deg.scaled(xi)
}

pub fn chi_cohomology(model: &MilnorKModel, n: u32, window: &Window) -> Result<ChiAlgebra> {
    let p = model.prime;
    let b_n = b_number(p, n);
    let regime = match model.kind {
        FieldKind::Real => Regime::Real,
        _ => Regime::Truncated,
    };
    if regime == Regime::Truncated && !model.zeta_p2 {
        return Err(EngineError::Regime(
            "truncated regime requires a primitive p^2-th root of unity (Q_0(tau) = 0 is assumed downstream)"
                .into(),
        ));
    }
    // validate that the model carries a pure symbol in degree n+1
    let _a = model.symbol_a_for(n)?;

    let mut module = BigradedModule::new(p, *window);
    let mut laurent_of = BTreeMap::new();
    let mut laurent_to = BTreeMap::new();

    match regime {
        Regime::Truncated => {
            // coefficient part: kappa tau^b, polynomial in tau
            let f_top = window.f_max.min(model.max_degree() as i64);
            for f in 0..=f_top {
                for kappa in model.k_basis(f) {
                    for s in f.max(window.s_min)..=window.s_max {
                        let label = kappa.times_sym("tau", s - f);
                        module.push_windowed(BasisVector::new(label, BiDegree::new(f, s)))?;
                    }
                }
            }
            // reduced part: Q^E(a') xi^j over all subsets of {0..n}
            // (full set folded into pure xi-powers by qa_label)
            let nn = n + 1;
            for mask in 0u32..(1 << nn) {
                let eps: Vec<u8> = (0..nn)
                    .rev()
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| i as u8)
                    .collect();
                for j in 0i64.. {
                    let deg = qa_degree(&eps, j, n, p);
                    if deg.f > window.f_max {
                        break;
                    }
                    let label = qa_label(&eps, j, &Label::one(), n);
                    module.push_windowed(BasisVector::new(label, deg))?;
                }
            }
        }
        Regime::Real => {
            // coefficient part rho^a tau^b with a, b >= 0
            for a in 0..=window.f_max.max(0) {
                for b in 0.. {
                    let deg = BiDegree::new(a, a + b);
                    if deg.s > window.s_max {
                        break;
                    }
                    let label = Label::sym("rho", a).times_sym("tau", b);
                    let mono = LaurentMono::new(b, a);
                    if window.contains(deg) {
                        module.push(BasisVector::new(label.clone(), deg))?;
                        laurent_of.insert(label.clone(), mono);
                        laurent_to.insert((mono.tau, mono.rho), label);
                    }
                }
            }
            // rho^i Q^E(a') xi^j; Laurent exponents determine the bidegree
            let nn = n + 1;
            let two_bn = 2 * b_n;
            for mask in 0u32..(1 << nn) {
                let eps: Vec<u8> = (0..nn)
                    .rev()
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| i as u8)
                    .collect();
                let d2: i64 = eps.iter().map(|&e| 1i64 << e).sum();
                let f2: i64 = eps.iter().map(|&e| (1i64 << (e + 1)) - 1).sum();
                for j in 0i64.. {
                    let tau0 = -d2 - 1 - j * (two_bn + 2);
                    let rho0 = f2 + n as i64 + 1 + j * (2 * two_bn + 2);
                    if rho0 > window.f_max {
                        break;
                    }
                    for i in 0i64.. {
                        let mono = LaurentMono::new(tau0, rho0 + i);
                        let deg = mono.deg();
                        if deg.f > window.f_max {
                            break;
                        }
                        if window.contains(deg) {
                            let label = qa_label(&eps, j, &Label::sym("rho", i), n);
                            module.push(BasisVector::new(label.clone(), deg))?;
                            laurent_of.insert(label.clone(), mono);
                            laurent_to.insert((mono.tau, mono.rho), label);
                        }
                    }
                }
            }
        }
    }

    Ok(ChiAlgebra {
        regime,
        model: model.clone(),
        prime: p,
        n,
        b_n,
        module,
        laurent_of,
        laurent_to,
    })
}

impl ChiAlgebra {
    /// deg(delta) = (2 b_n + 1, b_n).
    pub fn delta_shift(&self) -> BiDegree {
        BiDegree::new(2 * self.b_n + 1, self.b_n)
    }

    /// The label of delta = Q_{n-1}...Q_0(a').
    pub fn delta_label(&self) -> Label {
        let eps: Vec<u8> = (0..self.n).rev().map(|i| i as u8).collect();
        Label::qa(&eps)
    }

    pub fn laurent_exponents(&self, l: &Label) -> Option<LaurentMono> {
        self.laurent_of.get(l).copied()
    }

    pub fn label_at_laurent(&self, m: LaurentMono) -> Option<&Label> {
        self.laurent_to.get(&(m.tau, m.rho))
    }

    /// Filtration block index: D_i = { x : 2 b_n i + n < f <= 2 b_n (i+1) + n }.
    pub fn d_index(&self, f: i64) -> i64 {
        let num = f - self.n as i64;
        let den = 2 * self.b_n;
        num.div_euclid(den) - if num.rem_euclid(den) == 0 { 1 } else { 0 }
    }

    /// Schematic block tag of a basis vector. Reduced classes are tagged by
    /// the block of their xi-free part plus p per xi-power: multiplication
    /// by xi advances the pattern by p blocks (its f-degree 2 b_{n+1}
    /// slightly overshoots p strict blocks of width 2 b_n, so the strict
    /// index is not translation invariant, but the tag is).
    pub fn d_tag(&self, v: &BasisVector) -> i64 {
        match classify(&v.label, self.n) {
            LabelKind::Qa { eps, xi, .. } => {
                let base = qa_degree(&eps, 0, self.n, self.prime);
                self.d_index(base.f) + self.prime as i64 * xi
            }
            _ => self.d_index(v.deg.f),
        }
    }
}

/// Certificate for an audited zero of the delta rules.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ZeroCert {
    /// The target bidegree group vanishes inside the window.
    ZeroGroup,
    /// The source is a K_+-multiple and K_+ annihilates the reduced part.
    KPlusAnnihilation,
    /// The source is a positive tau-power; tau kills Q^E(a') for E nonempty.
    TauAnnihilation,
    /// The source carries cobordism coefficients acting as zero on the
    /// reduced part.
    VCoefficient,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DeltaAudit {
    pub entries: Vec<(String, BiDegree, ZeroCert)>,
}

impl DeltaAudit {
    pub fn count(&self, cert: &ZeroCert) -> usize {
        self.entries.iter().filter(|(_, _, c)| c == cert).count()
    }
}

/// Certify that a declared-zero product of a coefficient monomial with
/// delta is honest: either the target group vanishes, or an annihilation
/// rule applies.
pub(crate) fn coeff_zero_cert(
    module: &BigradedModule,
    label: &Label,
    target: BiDegree,
) -> Result<ZeroCert> {
    if module.window.contains(target) && module.rank_at(target) == 0 {
        return Ok(ZeroCert::ZeroGroup);
    }
    if label.syms_with_prefix("v").next().is_some() {
        return Ok(ZeroCert::VCoefficient);
    }
    let tau_free = label.without_sym("tau");
    if !tau_free.is_one() {
        return Ok(ZeroCert::KPlusAnnihilation);
    }
    if label.exp_of("tau") >= 1 {
        return Ok(ZeroCert::TauAnnihilation);
    }
    Err(EngineError::Validation(format!(
        "cannot certify delta * {label} = 0 at {target}"
    )))
}

/// Truncated-regime multiplication-by-delta rules on any chi-shaped
/// module. delta sends the unit to delta, kills reduced-part classes
/// without Q_n when p is odd (each such zero lands in a vanishing block,
/// checked strictly), toggles Q_n on at p = 2 (where delta^2 = xi), strips
/// Q_n into a xi-power, and kills the coefficient part (each zero
/// certified).
pub fn delta_map_on(
    module: &BigradedModule,
    p: u32,
    n: u32,
    b_n: i64,
) -> Result<(LinearMap, DeltaAudit)> {
    let shift = BiDegree::new(2 * b_n + 1, b_n);
    let full_top: u8 = n as u8; // index of Q_n
    let delta_eps: Vec<u8> = (0..n).rev().map(|i| i as u8).collect();
    let delta_label = Label::qa(&delta_eps);
    let toggle = p == 2;
    let mut entries: Vec<(String, BiDegree, ZeroCert)> = Vec::new();
    let map = LinearMap::from_rule(module, module, shift, &mut |v| {
        match classify(&v.label, n) {
            LabelKind::Unit => vec![(delta_label.clone(), 1)],
            LabelKind::Coeff => {
                let cert = coeff_zero_cert(module, &v.label, v.deg + shift)
                    .expect("uncertified coefficient zero in delta rules");
                entries.push((v.label.to_string(), v.deg + shift, cert));
                Vec::new()
            }
            LabelKind::Qa { eps, xi, rest } => {
                if eps.contains(&full_top) {
                    let stripped: Vec<u8> =
                        eps.iter().copied().filter(|&e| e != full_top).collect();
                    vec![(qa_label(&stripped, xi + 1, &rest, n), 1)]
                } else if toggle {
                    let (e2, _sign) = q_insert(full_top, &eps).expect("n not in eps");
                    vec![(qa_label(&e2, xi, &rest, n), 1)]
                } else {
                    Vec::new()
                }
            }
        }
    })?;
    let mut audit = DeltaAudit::default();
    audit.entries = entries;
    // strict audit for p odd: the structural zeros on the reduced part
    // land in vanishing groups
    if !toggle {
        let valid = map.valid_window();
        for v in module.iter() {
            if !valid.contains(v.deg) {
                continue;
            }
            if let LabelKind::Qa { eps, .. } = classify(&v.label, n) {
                if !eps.contains(&full_top) && module.rank_at(v.deg + shift) != 0 {
                    return Err(EngineError::Validation(format!(
                        "delta * {} declared zero but target group at {} has rank {}",
                        v.label,
                        v.deg + shift,
                        module.rank_at(v.deg + shift)
                    )));
                }
            }
        }
    }
    Ok((map, audit))
}

/// The multiplication-by-delta endomorphism of the chi module. Over the
/// reals the map is Laurent-exponent arithmetic; otherwise the truncated
/// rules apply.
pub fn delta_multiplication(chi: &ChiAlgebra) -> Result<(LinearMap, DeltaAudit)> {
    match chi.regime {
        Regime::Real => {
            let shift = chi.delta_shift();
            let delta_mono = LaurentMono::new(-chi.b_n - 1, 2 * chi.b_n + 1);
            let map = LinearMap::from_rule(&chi.module, &chi.module, shift, &mut |v| {
                let Some(m) = chi.laurent_exponents(&v.label) else {
                    return Vec::new();
                };
                let t = m.mul(&delta_mono);
                match chi.label_at_laurent(t) {
                    Some(l) => vec![(l.clone(), 1)],
                    None => Vec::new(),
                }
            })?;
            Ok((map, DeltaAudit::default()))
        }
        Regime::Truncated => delta_map_on(&chi.module, chi.prime, chi.n, chi.b_n),
    }
}

/// The Q_i action as a linear map on a chi-shaped module (full index set
/// folds into xi). Coefficient monomials are killed; inserting an index
/// carries the reordering sign.
pub fn q_map(module: &BigradedModule, chi_n: u32, i: u32, p: u32) -> Result<LinearMap> {
    let shift = q_degree(i, p);
    LinearMap::from_rule(module, module, shift, &mut |v| {
        match classify(&v.label, chi_n) {
            LabelKind::Qa { eps, xi, rest } => match q_insert(i as u8, &eps) {
                Some((e2, sign)) => vec![(qa_label(&e2, xi, &rest, chi_n), sign)],
                None => Vec::new(),
            },
            _ => Vec::new(),
        }
    })
}

/// The injective comparison with the Laurent coefficient ring (real
/// regime): every basis label maps to its Laurent monomial.
pub fn laurent_embedding(chi: &ChiAlgebra, laurent_ring: &BigradedModule) -> Result<LinearMap> {
    if chi.regime != Regime::Real {
        return Err(EngineError::Regime("laurent embedding needs the real regime".into()));
    }
    LinearMap::from_rule(&chi.module, laurent_ring, BiDegree::ZERO, &mut |v| {
        let m = chi.laurent_exponents(&v.label).expect("real chi label has exponents");
        let label = Label::sym("rho", m.rho).times_sym("tau", m.tau);
        vec![(label, 1)]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldmodel::coefficient_ring;

    fn trunc_chi(p: u32, n: u32, fmax: i64) -> ChiAlgebra {
        let model = MilnorKModel::exterior_local_model(n, p).unwrap();
        let w = Window::new(fmax, 0, fmax);
        chi_cohomology(&model, n, &w).unwrap()
    }

    fn real_chi(n: u32, fmax: i64) -> ChiAlgebra {
        let w = Window::new(fmax, -fmax, fmax);
        let model = MilnorKModel::real_model(&w);
        chi_cohomology(&model, n, &w).unwrap()
    }

    #[test]
    fn truncated_has_unique_a_prime() {
        let chi = trunc_chi(3, 2, 40);
        let at = chi.module.at(BiDegree::new(3, 2));
        assert_eq!(at.len(), 1);
        assert_eq!(at[0].label, Label::qa(&[]));
    }

    #[test]
    fn truncated_refuses_without_zeta() {
        let model = MilnorKModel::exterior_local_model(2, 3).unwrap();
        let mut m2 = model.clone();
        m2.zeta_p2 = false;
        let w = Window::new(20, 0, 20);
        assert!(chi_cohomology(&m2, 2, &w).is_err());
    }

    #[test]
    fn xi_lands_at_fourteen_six_for_p2_n2() {
        let chi = trunc_chi(2, 2, 20);
        let labels: Vec<String> = chi
            .module
            .at(BiDegree::new(14, 6))
            .iter()
            .map(|v| v.label.to_string())
            .collect();
        assert!(labels.contains(&"xi".to_string()), "{labels:?}");
    }

    #[test]
    fn real_chi_at_4_2_is_q0_a_prime() {
        let chi = real_chi(2, 12);
        let at = chi.module.at(BiDegree::new(4, 2));
        assert_eq!(at.len(), 1);
        assert_eq!(at[0].label, Label::qa(&[0]));
        assert_eq!(chi.laurent_exponents(&at[0].label).unwrap(), LaurentMono::new(-2, 4));
    }

    #[test]
    fn d_blocks_of_truncated_chi() {
        let chi = trunc_chi(3, 2, 60);
        assert_eq!(chi.d_index(0), -1); // the unit
        assert_eq!(chi.d_index(3), 0); // a'
        assert_eq!(chi.d_index(9), 0); // delta at 2 b_n + 1
        assert_eq!(chi.d_index(20), 2); // Q_2(a') at n+1 + 2p^2 - 1
        assert_eq!(chi.d_index(26), 2); // xi at 2 b_3
        // unit and reduced classes sit in blocks = -1 or 0 mod p
        for v in chi.module.iter() {
            let is_reduced = matches!(classify(&v.label, 2), LabelKind::Qa { .. });
            if is_reduced || v.label.is_one() {
                let i = chi.d_tag(v);
                let r = i.rem_euclid(3);
                assert!(r == 2 || r == 0, "class {} tagged D_{i}", v.label);
            }
        }
    }

    #[test]
    fn d_block_periodicity() {
        // multiplication by xi is a rank bijection on the reduced part:
        // rank at B + deg(xi) equals rank at B for every B with f >= 1
        let chi = trunc_chi(3, 2, 80);
        let xi_deg = qa_degree(&[2, 1, 0], 0, 2, 3); // (2 b_3, b_3 - 1)
        assert_eq!(xi_deg, BiDegree::new(26, 12));
        let reduced_rank = |d: BiDegree| -> usize {
            chi.module
                .iter()
                .filter(|v| v.deg == d)
                .filter(|v| matches!(classify(&v.label, 2), LabelKind::Qa { .. }))
                .count()
        };
        let probe = chi.module.window.padded(0, -xi_deg.f, 0, -xi_deg.s);
        let mut seen = 0;
        for v in chi.module.iter() {
            if v.deg.f >= 1
                && probe.contains(v.deg)
                && matches!(classify(&v.label, 2), LabelKind::Qa { .. })
            {
                assert_eq!(reduced_rank(v.deg), reduced_rank(v.deg + xi_deg), "at {}", v.deg);
                seen += 1;
            }
        }
        assert!(seen > 0);
        // and the schematic tags advance by exactly p per xi-power
        for v in chi.module.iter() {
            if let LabelKind::Qa { eps, xi, rest } = classify(&v.label, 2) {
                if xi >= 1 {
                    let lower = qa_label(&eps, xi - 1, &rest, 2);
                    let lower_vec = BasisVector::new(lower, v.deg - xi_deg);
                    assert_eq!(chi.d_tag(v), chi.d_tag(&lower_vec) + 3);
                }
            }
        }
    }

    #[test]
    fn delta_rules_truncated_odd() {
        let chi = trunc_chi(3, 2, 60);
        let (delta, audit) = delta_multiplication(&chi).unwrap();
        // delta . 1 = delta
        let one = BiDegree::new(0, 0);
        let cols = delta.columns_at(one).unwrap();
        let j = chi.module.position(one, &Label::one()).unwrap();
        let tdeg = one + chi.delta_shift();
        assert_eq!(cols[j].len(), 1);
        let (ti, c) = cols[j][0];
        assert_eq!(chi.module.at(tdeg)[ti].label, chi.delta_label());
        assert_eq!(c, 1);
        // delta . a' = 0 and delta . delta = 0: kernel rank 1 at each
        let (ker, _) = delta.kernel_cokernel(&chi.module, &chi.module).unwrap();
        assert_eq!(ker.rank_at(BiDegree::new(3, 2)), 1);
        assert_eq!(ker.rank_at(BiDegree::new(9, 4)), 1);
        assert!(!audit.entries.is_empty());
        // delta . Q_n(a') = a' xi
        let qn = BiDegree::new(3, 2) + q_degree(2, 3);
        let j = chi.module.position(qn, &Label::qa(&[2])).unwrap();
        let cols = delta.columns_at(qn).unwrap();
        let (ti, _) = cols[j][0];
        let target = chi.module.at(qn + chi.delta_shift())[ti].label.clone();
        assert_eq!(target, Label::qa(&[]).times_sym("xi", 1));
    }

    #[test]
    fn delta_real_follows_laurent_arithmetic() {
        let chi = real_chi(2, 24);
        let (delta, _) = delta_multiplication(&chi).unwrap();
        // delta . a' = Q_2(a')
        let a = BiDegree::new(3, 2);
        let j = chi.module.position(a, &Label::qa(&[])).unwrap();
        let cols = delta.columns_at(a).unwrap();
        assert_eq!(cols[j].len(), 1);
        let (ti, _) = cols[j][0];
        let target = chi.module.at(a + chi.delta_shift())[ti].label.clone();
        assert_eq!(target, Label::qa(&[2]));
        // delta . delta = xi (p = 2)
        let d = BiDegree::new(7, 3);
        let j = chi.module.position(d, &chi.delta_label()).unwrap();
        let cols = delta.columns_at(d).unwrap();
        let (ti, _) = cols[j][0];
        let target = chi.module.at(d + chi.delta_shift())[ti].label.clone();
        assert_eq!(target, Label::sym("xi", 1));
        // no tau-torsion over the reals: trivial kernel
        let (ker, _) = delta.kernel_cokernel(&chi.module, &chi.module).unwrap();
        assert_eq!(ker.total_rank(), 0);
    }

    #[test]
    fn delta_is_q_linear_up_to_graded_sign() {
        let chi = trunc_chi(3, 2, 60);
        let (delta, _) = delta_multiplication(&chi).unwrap();
        for i in 0..2u32 {
            let q = q_map(&chi.module, 2, i, 3).unwrap();
            let dq = q.compose(&delta, &chi.module, &chi.module);
            let qd = delta.compose(&q, &chi.module, &chi.module);
            assert!(dq.equals_scaled(&qd, -1), "Q_{i} linearity (p = 3)");
        }
        let chi = trunc_chi(2, 2, 40);
        let (delta, _) = delta_multiplication(&chi).unwrap();
        for i in 0..2u32 {
            let q = q_map(&chi.module, 2, i, 2).unwrap();
            let dq = q.compose(&delta, &chi.module, &chi.module);
            let qd = delta.compose(&q, &chi.module, &chi.module);
            assert!(dq.equals_scaled(&qd, 1), "Q_{i} linearity (p = 2)");
        }
    }

    #[test]
    fn delta_squared_behaviour() {
        let chi = trunc_chi(3, 2, 80);
        let (delta, _) = delta_multiplication(&chi).unwrap();
        let dd = delta.compose(&delta, &chi.module, &chi.module);
        assert!(dd.is_zero(), "delta^2 != 0 at p = 3");

        let chi = real_chi(2, 30);
        let (delta, _) = delta_multiplication(&chi).unwrap();
        let dd = delta.compose(&delta, &chi.module, &chi.module);
        let a = BiDegree::new(3, 2);
        let j = chi.module.position(a, &Label::qa(&[])).unwrap();
        let cols = dd.columns_at(a).unwrap();
        let (ti, _) = cols[j][0];
        let target = chi.module.at(a + chi.delta_shift().scaled(2))[ti].label.clone();
        // delta^2 a' = xi a'
        assert_eq!(target, Label::qa(&[]).times_sym("xi", 1));
    }

    #[test]
    fn q_operations_square_to_zero_and_anticommute() {
        for (p, n) in [(3u32, 2u32), (2, 2)] {
            let chi = trunc_chi(p, n, 60);
            for i in 0..=n {
                let q = q_map(&chi.module, n, i, p).unwrap();
                let qq = q.compose(&q, &chi.module, &chi.module);
                assert!(qq.is_zero(), "Q_{i}^2 != 0 (p={p})");
            }
            for i in 0..=n {
                for j in (i + 1)..=n {
                    let qi = q_map(&chi.module, n, i, p).unwrap();
                    let qj = q_map(&chi.module, n, j, p).unwrap();
                    let ij = qi.compose(&qj, &chi.module, &chi.module);
                    let ji = qj.compose(&qi, &chi.module, &chi.module);
                    assert!(ij.equals_scaled(&ji, -1), "Q_{i} Q_{j} != -Q_{j} Q_{i} (p={p})");
                }
            }
        }
    }

    #[test]
    fn q_application_shifts_by_q_degree() {
        let chi = trunc_chi(3, 2, 60);
        for i in 0..=2u32 {
            let q = q_map(&chi.module, 2, i, 3).unwrap();
            assert_eq!(q.shift, q_degree(i, 3), "bidegree audit for Q_{i}");
        }
    }

    #[test]
    fn laurent_embedding_is_injective() {
        let fmax = 20;
        let w = Window::new(fmax, -fmax, fmax);
        let chi = real_chi(2, fmax);
        let model = MilnorKModel::real_model(&w);
        let ring = coefficient_ring(&model, &w, true);
        let emb = laurent_embedding(&chi, &ring.module).unwrap();
        let (ker, _) = emb.kernel_cokernel(&chi.module, &ring.module).unwrap();
        assert_eq!(ker.total_rank(), 0);
        let a = BiDegree::new(3, 2);
        let j = chi.module.position(a, &Label::qa(&[])).unwrap();
        let cols = emb.columns_at(a).unwrap();
        let (ti, _) = cols[j][0];
        assert_eq!(ring.module.at(a)[ti].label.to_string(), "rho^3*tau^-1");
        let one = BiDegree::new(0, 0);
        let j = chi.module.position(one, &Label::one()).unwrap();
        let cols = emb.columns_at(one).unwrap();
        let (ti, _) = cols[j][0];
        assert!(ring.module.at(one)[ti].label.is_one());
    }
}
