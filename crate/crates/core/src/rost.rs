//! Symmetric-power iteration computing the cohomology of the stages M^i
//! up to the Rost motive M^{p-1}, the closed forms it must reproduce, and
//! the Chow / etale realizations.
//!
//! Each stage is a kernel/cokernel computation against the chi module:
//!
//!   H(M^1)  = Coker(x delta) + Ker(x delta){t},
//!   H(M^i)  = Coker(r_i) + Ker(r_i){t^i},   2 <= i <= p-1,
//!
//! where r_i has shift (2 b_n i + 1, b_n i) and is determined by the
//! hardcoded images of the module generators, extended Q- and xi-linearly.
//! The iteration never adjusts itself to match the closed form; any
//! discrepancy aborts with the first divergent bidegree.

use crate::bidegree::{b_number, ipow, BiDegree, Window};
use crate::chi::{
    classify, coeff_zero_cert, delta_multiplication, qa_label, ChiAlgebra, DeltaAudit, LabelKind,
    Regime, ZeroCert,
};
use crate::errors::{EngineError, Result};
use crate::fieldmodel::MilnorKModel;
use crate::label::{Ann, Label};
use crate::linmap::{tate_shift, LinearMap};
use crate::milnor::q_insert;
use crate::module::{BasisVector, BigradedModule, RankTable};
use serde::Serialize;

/// One entry of the integral-lift ledger: the class b = Q_{n-1}...Q_1(a')
/// t^{i-1} lifts to an integral class equal to p t^i.
#[derive(Clone, Debug, Serialize)]
pub struct LiftEntry {
    pub stage: u32,
    pub class: String,
    pub interpretation: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LiftLedger {
    pub entries: Vec<LiftEntry>,
}

#[derive(Clone, Debug)]
pub struct RostStage {
    pub i: u32,
    pub module: BigradedModule,
}

#[derive(Clone, Debug)]
pub struct RostOutput {
    /// The iterated module, cropped to the requested window.
    pub module: BigradedModule,
    /// The closed form on the same window.
    pub closed: BigradedModule,
    pub ledger: LiftLedger,
    pub delta_audit: DeltaAudit,
    pub stage_ranks: Vec<(u32, RankTable)>,
    pub n: u32,
    pub prime: u32,
    pub b_n: i64,
}

/// First stage: H(M) = Coker(x delta) + Ker(x delta)[b_n](2 b_n).
pub fn build_m1(chi: &ChiAlgebra) -> Result<(RostStage, DeltaAudit)> {
    let (delta, audit) = delta_multiplication(chi)?;
    let (ker, coker) = delta.kernel_cokernel(&chi.module, &chi.module)?;
    let module = coker.direct_sum(&tate_shift(&ker, 1, chi.b_n))?;
    Ok((RostStage { i: 1, module }, audit))
}

/// The connecting map r_i of stage i, as a rule on the chi-shaped source.
/// For 2 <= i < p-1 the map is multiplication by delta t^{i-1}: the unit
/// goes to delta t^{i-1} and stripping Q_n raises the xi-power; everything
/// else dies. The last stage i = p-1 additionally toggles Q_n onto the
/// classes without it (a' goes to Q_n(a')); for p = 2 the first stage is
/// already the last and the toggle lives in the delta rules.
pub(crate) fn step_map_on(
    source: &BigradedModule,
    prev: &BigradedModule,
    p: u32,
    n: u32,
    b_n: i64,
    i: u32,
) -> Result<(LinearMap, Vec<(String, BiDegree, ZeroCert)>)> {
    let shift = BiDegree::new(2 * b_n * i as i64 + 1, b_n * i as i64);
    let final_stage = i == p - 1;
    let t_pow = i as i64 - 1;
    let full_top = n as u8;
    let delta_eps: Vec<u8> = (0..n).rev().map(|k| k as u8).collect();
    let delta_label = Label::qa(&delta_eps);
    let tag = |k: i64| -> Label {
        if k == 0 {
            Label::one()
        } else {
            Label::sym("t", k)
        }
    };
    let mut audits: Vec<(String, BiDegree, ZeroCert)> = Vec::new();
    let map = LinearMap::from_rule(source, prev, shift, &mut |v| {
        match classify(&v.label, n) {
            LabelKind::Unit => vec![(delta_label.mul(&tag(t_pow)), 1)],
            LabelKind::Coeff => {
                let cert = coeff_zero_cert(prev, &v.label, v.deg + shift)
                    .expect("uncertified coefficient zero in restriction rules");
                audits.push((v.label.to_string(), v.deg + shift, cert));
                Vec::new()
            }
            LabelKind::Qa { eps, xi, rest } => {
                if eps.contains(&full_top) {
                    let stripped: Vec<u8> =
                        eps.iter().copied().filter(|&e| e != full_top).collect();
                    vec![(qa_label(&stripped, xi + 1, &rest, n).mul(&tag(t_pow)), 1)]
                } else if final_stage {
                    let (e2, _sign) = q_insert(full_top, &eps).expect("n not in eps");
                    vec![(qa_label(&e2, xi, &rest, n), 1)]
                } else {
                    Vec::new()
                }
            }
        }
    })?;
    Ok((map, audits))
}

/// Stage i for 2 <= i <= p-1: Coker(r_i) + Ker(r_i){t^i}, with the
/// stage-stability check (stages agree below f = 2 b_n i).
pub fn symmetric_power_step(i: u32, prev: &RostStage, chi: &ChiAlgebra) -> Result<RostStage> {
    symmetric_power_step_on(i, prev, &chi.module, chi.prime, chi.n, chi.b_n, true)
}

pub(crate) fn symmetric_power_step_on(
    i: u32,
    prev: &RostStage,
    source: &BigradedModule,
    p: u32,
    n: u32,
    b_n: i64,
    check_stability: bool,
) -> Result<RostStage> {
    if i < 2 || i > p - 1 {
        return Err(EngineError::Validation(format!("stage {i} out of range 2..=p-1")));
    }
    let (map, _audits) = step_map_on(source, &prev.module, p, n, b_n, i)?;
    let (ker, coker) = map.kernel_cokernel(source, &prev.module)?;
    let module = coker.direct_sum(&tate_shift(&ker, i as i64, b_n * i as i64))?;
    // stage stability below f = 2 b_n i: valid when the source vanishes in
    // negative degrees, so that the connecting maps cannot reach there
    // (negative-degree coefficients break the vanishing of the flanking
    // groups and stability with them)
    if check_stability {
        let low = Window {
            f_min: module.window.f_min,
            f_max: (2 * b_n * i as i64 - 1).min(module.window.f_max),
            s_min: module.window.s_min,
            s_max: module.window.s_max,
            w_min: module.window.w_min,
        };
        if !low.is_empty() {
            if let Some(d) = module.first_rank_mismatch(&prev.module, &low) {
                return Err(EngineError::RouteMismatch {
                    deg: d,
                    left: module.rank_at(d),
                    right: prev.module.rank_at(d),
                    context: format!("stage {i} disagrees with stage {} below 2 b_n i", i - 1),
                });
            }
        }
    }
    Ok(RostStage { i, module })
}

/// Run the kernel/cokernel iteration from a chi-shaped module whose delta
/// map is already built. Returns the final stage and per-stage rank
/// tables cropped to `report_window`.
pub(crate) fn iterate_stages(
    source: &BigradedModule,
    delta: &LinearMap,
    p: u32,
    n: u32,
    b_n: i64,
    report_window: &Window,
    check_stability: bool,
) -> Result<(BigradedModule, Vec<(u32, RankTable)>)> {
    let (ker, coker) = delta.kernel_cokernel(source, source)?;
    let mut stage = RostStage {
        i: 1,
        module: coker.direct_sum(&tate_shift(&ker, 1, b_n))?,
    };
    let mut ranks = vec![(1u32, stage.module.crop(*report_window).rank_table())];
    for i in 2..p {
        stage = symmetric_power_step_on(i, &stage, source, p, n, b_n, check_stability)?;
        ranks.push((i, stage.module.crop(*report_window).rank_table()));
    }
    Ok((stage.module, ranks))
}

/// Closed form of the Rost-motive cohomology.
///
/// Truncated regime: H + (Q~(n-1){a'} + H~{t}) {1, t, ..., t^{p-2}}: the
/// coefficient ring, the proper-subset operation classes on a' with
/// t-powers up to p-2, and reduced-coefficient multiples of t-powers 1
/// through p-1.
///
/// Real regime: the Z/2[rho, tau]-span of 1 and the classes Q^eps(a')
/// inside Z/2[rho, tau, tau^{-1}]/(rho^{2^{n+1}-1}), materialized per
/// bidegree as Laurent monomials.
pub fn rost_closed_form(model: &MilnorKModel, n: u32, window: &Window) -> Result<BigradedModule> {
    let p = model.prime;
    let b_n = b_number(p, n);
    let mut out = BigradedModule::new(p, *window);
    match model.kind {
        crate::fieldmodel::FieldKind::Real => {
            assert_eq!(p, 2);
            let rho_top = ipow(2, n + 1) - 1; // rho^{2^{n+1}-1} = 0
            // minimal tau-exponent per rho-exponent: the deepest generator
            // tau^{-d-1} rho^{f+n+1} whose rho-part is at most e (0 if only
            // the unit reaches)
            let mut c_min: Vec<i64> = vec![0; rho_top as usize];
            for mask in 0u32..(1 << n) {
                let eps: Vec<u8> =
                    (0..n).filter(|i| mask & (1 << i) != 0).map(|i| i as u8).collect();
                let d2: i64 = eps.iter().map(|&e| 1i64 << e).sum();
                let f2: i64 = eps.iter().map(|&e| (1i64 << (e + 1)) - 1).sum();
                let gen_rho = f2 + n as i64 + 1;
                let gen_tau = -d2 - 1;
                for e in gen_rho..rho_top {
                    let idx = e as usize;
                    if gen_tau < c_min[idx] {
                        c_min[idx] = gen_tau;
                    }
                }
            }
            for e in 0..rho_top {
                for c in c_min[e as usize].. {
                    let deg = BiDegree::new(e, c + e);
                    if deg.s > window.s_max {
                        break;
                    }
                    let label = Label::sym("rho", e).times_sym("tau", c);
                    out.push_windowed(BasisVector::new(label, deg))?;
                }
            }
        }
        _ => {
            // coefficient ring
            let f_top = window.f_max.min(model.max_degree() as i64);
            for f in 0..=f_top {
                for kappa in model.k_basis(f) {
                    for s in f.max(window.s_min)..=window.s_max {
                        out.push_windowed(BasisVector::new(
                            kappa.times_sym("tau", s - f),
                            BiDegree::new(f, s),
                        ))?;
                    }
                }
            }
            // Q~(n-1){a'} t^j for j = 0..p-2 (proper subsets of 0..n-1)
            for mask in 0u32..(1 << n) {
                let eps: Vec<u8> = (0..n)
                    .rev()
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| i as u8)
                    .collect();
                if eps.len() == n as usize {
                    continue; // the top class is excluded
                }
                let base = crate::chi::qa_degree(&eps, 0, n, p);
                for j in 0..=(p as i64 - 2) {
                    let deg = base + BiDegree::new(2 * b_n * j, b_n * j);
                    let mut label = Label::qa(&eps);
                    if j > 0 {
                        label = label.times_sym("t", j);
                    }
                    let mut v = BasisVector::new(label, deg);
                    if j > 0 {
                        v.ann.insert(Ann::Vertical);
                    }
                    out.push_windowed(v)?;
                }
            }
            // H~ t^j for j = 1..p-1
            for f in 0..=f_top {
                for kappa in model.k_basis(f) {
                    for j in 1..=(p as i64 - 1) {
                        for s in window.s_min..=window.s_max {
                            let b = s - f - b_n * j;
                            if b < 0 {
                                continue;
                            }
                            if f == 0 && b == 0 {
                                continue; // H~ excludes the unit
                            }
                            let deg = BiDegree::new(f + 2 * b_n * j, s);
                            let label = kappa.times_sym("tau", b).times_sym("t", j);
                            out.push_windowed(BasisVector::new(label, deg).with_ann(Ann::Vertical))?;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Window padding sufficient for the whole iteration.
fn iteration_padding(p: u32, b_n: i64) -> (i64, i64) {
    let steps = (p - 1) as i64;
    let f_pad = steps * (2 * b_n * steps + 2) + 2;
    let s_pad = steps * (b_n * steps + 1) + 2;
    (f_pad, s_pad)
}

/// Run the full iteration, assert the closed form, audit realizability,
/// and record the lift ledger.
pub fn rost_cohomology(model: &MilnorKModel, n: u32, window: &Window) -> Result<RostOutput> {
    let p = model.prime;
    let b_n = b_number(p, n);
    let (f_pad, s_pad) = iteration_padding(p, b_n);
    let big = window.padded(f_pad, f_pad, s_pad, s_pad);
    let chi = crate::chi::chi_cohomology(model, n, &big)?;

    let (delta, delta_audit) = delta_multiplication(&chi)?;
    let (final_module, stage_ranks) = iterate_stages(&chi.module, &delta, p, n, b_n, window, true)?;

    if !final_module.window.contains_window(window) {
        return Err(EngineError::Truncation {
            deg: BiDegree::new(window.f_max, window.s_max),
            what: format!(
                "iterated stage window {} does not cover requested {}",
                final_module.window, window
            ),
        });
    }
    let module = final_module.crop(*window);

    // realizability: on a smooth variety of dimension p^n - 1 every class
    // has w >= 0, s >= 0 and diagonal at most the dimension
    let dim = ipow(p as i64, n) - 1;
    for v in module.iter() {
        if v.deg.w() < 0 || v.deg.d() > dim || v.deg.s < 0 {
            return Err(EngineError::Validation(format!(
                "class {} at {} violates realizability (w = {}, d = {}, dim = {dim})",
                v.label,
                v.deg,
                v.deg.w(),
                v.deg.d()
            )));
        }
    }

    let closed = rost_closed_form(model, n, window)?;
    if let Some(d) = module.first_rank_mismatch(&closed, window) {
        return Err(EngineError::RouteMismatch {
            deg: d,
            left: module.rank_at(d),
            right: closed.rank_at(d),
            context: "iterated stage vs closed form".into(),
        });
    }

    // lift ledger: Q_{n-1}...Q_1(a') t^{i-1} = p t^i integrally
    let mut ledger = LiftLedger::default();
    if chi.regime == Regime::Truncated {
        let eps: Vec<u8> = (1..n).rev().map(|i| i as u8).collect();
        for i in 1..=(p - 1) {
            let mut label = Label::qa(&eps);
            if i > 1 {
                label = label.times_sym("t", i as i64 - 1);
            }
            ledger.entries.push(LiftEntry {
                stage: i,
                class: label.to_string(),
                interpretation: format!("p*t^{i} (integral lift)"),
            });
        }
    }

    Ok(RostOutput {
        module,
        closed,
        ledger,
        delta_audit,
        stage_ranks,
        n,
        prime: p,
        b_n,
    })
}

/// One Chow-diagonal generator of the Rost motive.
#[derive(Clone, Debug, Serialize)]
pub struct ChowClass {
    pub name: String,
    pub label: String,
    pub f_degree: i64,
    pub chow_degree: i64,
    pub torsion: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChowOfRost {
    pub classes: Vec<ChowClass>,
}

/// Extract the w = 0 diagonal of a truncated Rost module: the unit plus
/// the classes c_i(y^j) = Q_0...^Q_i...Q_{n-1}(a') t^{j-1}. c_0-classes
/// reduce free integral classes, the others p-torsion.
pub fn chow_of_rost(module: &BigradedModule, n: u32) -> Result<ChowOfRost> {
    let mut classes = Vec::new();
    for v in module.iter() {
        if v.deg.w() != 0 {
            continue;
        }
        if v.label.is_one() {
            classes.push(ChowClass {
                name: "1".into(),
                label: "1".into(),
                f_degree: 0,
                chow_degree: 0,
                torsion: false,
            });
            continue;
        }
        match classify(&v.label, n) {
            LabelKind::Qa { eps, xi, rest } => {
                if xi != 0 || !rest.without_sym("t").is_one() {
                    return Err(EngineError::Validation(format!(
                        "unexpected diagonal class {}",
                        v.label
                    )));
                }
                let missing: Vec<u8> = (0..n as u8).filter(|i| !eps.contains(i)).collect();
                if missing.len() != 1 || eps.len() != n as usize - 1 {
                    return Err(EngineError::Validation(format!(
                        "diagonal class {} is not of c_i shape",
                        v.label
                    )));
                }
                let i = missing[0];
                let j = rest.exp_of("t") + 1;
                classes.push(ChowClass {
                    name: if j == 1 { format!("c{i}(y)") } else { format!("c{i}(y^{j})") },
                    label: v.label.to_string(),
                    f_degree: v.deg.f,
                    chow_degree: v.deg.s,
                    torsion: i != 0,
                });
            }
            _ => {
                return Err(EngineError::Validation(format!(
                    "unexpected diagonal class {}",
                    v.label
                )))
            }
        }
    }
    classes.sort_by_key(|c| (c.chow_degree, c.name.clone()));
    Ok(ChowOfRost { classes })
}

/// Graded ranks of the tau-inverted (etale) realization.
#[derive(Clone, Debug, Serialize)]
pub struct EtaleRanks {
    pub description: String,
    pub ranks: Vec<(i64, u64)>,
}

/// Closed form of the etale realization: K[t]/(p, t^p) in the truncated
/// regime, Z/2[rho]/(rho^{2^{n+1}-1}) over the reals.
pub fn etale_realization(model: &MilnorKModel, n: u32, max_degree: i64) -> EtaleRanks {
    let p = model.prime;
    let b_n = b_number(p, n);
    let mut ranks = Vec::new();
    match model.kind {
        crate::fieldmodel::FieldKind::Real => {
            let top = ipow(2, n + 1) - 1;
            for m in 0..=max_degree {
                ranks.push((m, if m < top { 1 } else { 0 }));
            }
            EtaleRanks { description: format!("Z/2[rho]/(rho^{top})"), ranks }
        }
        _ => {
            for m in 0..=max_degree {
                let mut r = 0u64;
                for j in 0..p as i64 {
                    r += model.dim_k(m - 2 * b_n * j) as u64;
                }
                ranks.push((m, r));
            }
            EtaleRanks {
                description: "K^M_*(k)/p [t]/(t^p), deg t = 2 b_n".into(),
                ranks,
            }
        }
    }
}

/// Stable ranks of a module as the weight grows: the tau-inverted ranks.
/// Probes the two top weights of the window and requires agreement.
pub fn stable_ranks(module: &BigradedModule, max_f: i64) -> Result<Vec<(i64, u64)>> {
    let s1 = module.window.s_max;
    let s0 = s1 - 1;
    let mut out = Vec::new();
    for f in 0..=max_f {
        let a = module.rank_at(BiDegree::new(f, s0)) as u64;
        let b = module.rank_at(BiDegree::new(f, s1)) as u64;
        if a != b {
            return Err(EngineError::Truncation {
                deg: BiDegree::new(f, s1),
                what: format!("ranks not yet stable in weight ({a} vs {b}); enlarge s_max"),
            });
        }
        out.push((f, a));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chi::chi_cohomology;

    fn trunc(p: u32, n: u32, fmax: i64) -> RostOutput {
        let model = MilnorKModel::exterior_local_model(n, p).unwrap();
        let w = Window::new(fmax, 0, fmax + 10);
        rost_cohomology(&model, n, &w).unwrap()
    }

    fn real(n: u32, fmax: i64) -> RostOutput {
        let w = Window::new(fmax, -(fmax / 2), fmax + 10);
        let model = MilnorKModel::real_model(&w.padded(0, 60, 0, 60));
        rost_cohomology(&model, n, &w).unwrap()
    }

    #[test]
    fn m1_for_p3_n2_contains_the_displayed_classes() {
        let model = MilnorKModel::exterior_local_model(2, 3).unwrap();
        // pad below so the splitting is complete down to degree zero
        let w = Window::new(40, 0, 40).padded(12, 0, 6, 0);
        let chi = chi_cohomology(&model, 2, &w).unwrap();
        let (m1, _) = build_m1(&chi).unwrap();
        // unit at (0,0)
        assert_eq!(m1.module.rank_at(BiDegree::new(0, 0)), 1);
        // a' t at (3,2)+(8,4) = (11,6)
        let at = m1.module.at(BiDegree::new(11, 6));
        assert!(at.iter().any(|v| v.label.to_string() == "(a')*t"), "{at:?}");
        // delta t at (17,8)
        let at = m1.module.at(BiDegree::new(17, 8));
        assert!(at.iter().any(|v| v.label.to_string() == "Q1Q0(a')*t"), "{at:?}");
        // the Q_n(a')-block survives in the cokernel at this stage
        let at = m1.module.at(BiDegree::new(20, 10));
        assert!(at.iter().any(|v| v.label == Label::qa(&[2])), "{at:?}");
    }

    #[test]
    fn iteration_matches_closed_form_p3_n2() {
        let out = trunc(3, 2, 40);
        assert!(out.module.first_rank_mismatch(&out.closed, &out.module.window).is_none());
        // before the last stage the Q_n-block is still present
        assert!(out.stage_ranks[0].1 != out.stage_ranks[1].1);
    }

    #[test]
    fn iteration_matches_closed_form_p2() {
        // p = 2: a single step
        let out = trunc(2, 2, 30);
        assert_eq!(out.stage_ranks.len(), 1);
        let out = trunc(2, 3, 40);
        assert_eq!(out.stage_ranks.len(), 1);
    }

    #[test]
    fn real_n2_reproduces_the_seven_generator_module() {
        let out = real(2, 24);
        let bottoms = [
            (0, 0, "1"),
            (1, 1, "rho"),
            (2, 2, "rho^2"),
            (3, 2, "rho^3*tau^-1"),
            (4, 2, "rho^4*tau^-2"),
            (5, 3, "rho^5*tau^-2"),
            (6, 3, "rho^6*tau^-3"),
        ];
        for (f, s, name) in bottoms {
            let at = out.closed.at(BiDegree::new(f, s));
            assert_eq!(at.len(), 1, "({f},{s})");
            assert_eq!(at[0].label.to_string(), name);
            assert_eq!(out.closed.rank_at(BiDegree::new(f, s - 1)), 0);
            assert_eq!(out.closed.rank_at(BiDegree::new(f, s + 3)), 1);
        }
        // rho^7 = 0: nothing at f = 7
        for s in 0..20 {
            assert_eq!(out.closed.rank_at(BiDegree::new(7, s)), 0);
        }
        assert!(out.module.first_rank_mismatch(&out.closed, &out.module.window).is_none());
    }

    #[test]
    fn real_n3_runs() {
        let out = real(3, 40);
        for s in 0..30 {
            assert_eq!(out.closed.rank_at(BiDegree::new(15, s)), 0);
        }
        // Q^eps(a') for eps = (0,1,1): tau^{-7} rho^{14}: bottom at (14, 7)
        assert_eq!(out.closed.rank_at(BiDegree::new(14, 7)), 1);
    }

    #[test]
    fn chow_counts_and_degrees() {
        for (p, n) in [(2u32, 2u32), (3, 2), (2, 3)] {
            let out = trunc(p, n, 2 * b_number(p, n) * (p as i64 - 1) + 4);
            let chow = chow_of_rost(&out.module, n).unwrap();
            assert_eq!(
                chow.classes.len() as i64,
                1 + (p as i64 - 1) * n as i64,
                "count at (p,n)=({p},{n})"
            );
            for c in &chow.classes {
                if c.name == "1" {
                    continue;
                }
                let i: u32 = c.name[1..2].parse().unwrap();
                let j: i64 = if c.name.contains("y^") {
                    c.name[c.name.find("y^").unwrap() + 2..c.name.len() - 1].parse().unwrap()
                } else {
                    1
                };
                assert_eq!(
                    c.f_degree,
                    2 * b_number(p, n) * j - 2 * (ipow(p as i64, i) - 1),
                    "degree of {} at (p,n)=({p},{n})",
                    c.name
                );
                assert_eq!(c.torsion, i != 0);
            }
        }
        let out = trunc(3, 2, 40);
        let chow = chow_of_rost(&out.module, 2).unwrap();
        let names: Vec<&str> = chow.classes.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["1", "c1(y)", "c0(y)", "c1(y^2)", "c0(y^2)"]);
        let degs: Vec<i64> = chow.classes.iter().map(|c| c.chow_degree).collect();
        assert_eq!(degs, vec![0, 2, 4, 6, 8]);
    }

    #[test]
    fn etale_ranks() {
        let model = MilnorKModel::exterior_local_model(2, 3).unwrap();
        let et = etale_realization(&model, 2, 30);
        let total: u64 = et.ranks.iter().map(|(_, r)| r).sum();
        let k_total: u64 = (0..=3).map(|d| model.dim_k(d) as u64).sum();
        assert_eq!(total, 3 * k_total);
        let w = Window::new(20, -20, 20);
        let real = MilnorKModel::real_model(&w);
        let et = etale_realization(&real, 2, 10);
        let total: u64 = et.ranks.iter().map(|(_, r)| r).sum();
        assert_eq!(total, 7);
    }

    #[test]
    fn tau_inversion_collapses_to_etale() {
        let out = trunc(3, 2, 24);
        let stable = stable_ranks(&out.closed, 24).unwrap();
        let model = MilnorKModel::exterior_local_model(2, 3).unwrap();
        let et = etale_realization(&model, 2, 24);
        assert_eq!(stable, et.ranks);

        let out = real(2, 12);
        let stable = stable_ranks(&out.closed, 12).unwrap();
        let w = Window::new(20, -20, 20);
        let et = etale_realization(&MilnorKModel::real_model(&w), 2, 12);
        assert_eq!(stable, et.ranks);
    }

    #[test]
    fn lift_ledger_has_one_entry_per_stage() {
        let out = trunc(3, 2, 40);
        assert_eq!(out.ledger.entries.len(), 2);
        assert_eq!(out.ledger.entries[0].class, "Q1(a')");
        assert_eq!(out.ledger.entries[1].class, "Q1(a')*t");
        for e in &out.ledger.entries {
            let label: Label = e.class.parse().unwrap();
            let found = out.module.iter().any(|v| v.label == label && v.deg.w() == 0);
            assert!(found, "{}", e.class);
        }
    }

    #[test]
    fn p5_middle_stages_change_only_high_blocks() {
        // p = 5, n = 2: stage 3 only alters ranks at f >= 2 b_n * 3
        let model = MilnorKModel::exterior_local_model(2, 5).unwrap();
        let w = Window::new(50, 0, 60);
        let out = rost_cohomology(&model, 2, &w).unwrap();
        let b_n = b_number(5, 2);
        let threshold = 2 * b_n * 3;
        let r2 = &out.stage_ranks[1].1;
        let r3 = &out.stage_ranks[2].1;
        for (d, r) in &r2.0 {
            if d.f < threshold {
                assert_eq!(*r, r3.get(*d), "stage 3 changed rank at {d}");
            }
        }
    }
}
