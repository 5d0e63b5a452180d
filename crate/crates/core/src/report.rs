//! The verification matrix: every headline identity the engine claims,
//! run end to end and reported claim by claim. The claim keys follow the
//! engine's claim registry (see the README table); each check either
//! reproduces a closed form from an independent construction or validates
//! an invariant suite exhaustively over the window.

use crate::bidegree::{b_number, ipow, BiDegree, Window};
use crate::chi::{chi_cohomology, delta_multiplication, q_map};
use crate::errors::Result;
use crate::fieldmodel::MilnorKModel;
use crate::flag::{load_group_config, load_group_datum, BaseRing, G2_EXPLICIT_SAMPLE};
use crate::milnor::{q_monomial, q_on_real_laurent, EpsilonIndex, LaurentElt};
use crate::module::RankTable;
use crate::rost::{chow_of_rost, etale_realization, rost_cohomology, stable_ranks};
use crate::witt::{base_sq2_homology, witt_of, WittTarget};
use serde::Serialize;
use std::time::Instant;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub key: String,
    pub description: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerifyReport {
    pub entries: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let keyw = self.entries.iter().map(|e| e.key.len()).max().unwrap_or(4).max(4);
        out.push_str(&format!("{:<keyw$}  {:<6}  description\n", "key", "status"));
        out.push_str(&format!("{}\n", "-".repeat(keyw + 30)));
        for e in &self.entries {
            out.push_str(&format!(
                "{:<keyw$}  {:<6}  {}{}\n",
                e.key,
                if e.pass { "PASS" } else { "FAIL" },
                e.description,
                if e.detail.is_empty() { String::new() } else { format!(" [{}]", e.detail) }
            ));
        }
        out.push_str(&format!(
            "\n{} checks, {} passed, {} failed\n",
            self.entries.len(),
            self.entries.iter().filter(|e| e.pass).count(),
            self.entries.iter().filter(|e| !e.pass).count()
        ));
        out
    }

    fn add(&mut self, key: &str, description: &str, result: Result<String>) {
        match result {
            Ok(detail) => self.entries.push(CheckResult {
                key: key.into(),
                description: description.into(),
                pass: true,
                detail,
            }),
            Err(e) => self.entries.push(CheckResult {
                key: key.into(),
                description: description.into(),
                pass: false,
                detail: e.to_string(),
            }),
        }
    }
}

fn err(msg: String) -> crate::errors::EngineError {
    crate::errors::EngineError::Validation(msg)
}

/// Criterion 1: the closed forms over the reals.
fn check_real_closed_forms() -> Result<String> {
    let t0 = Instant::now();
    // n = 2, f <= 40: the rank-seven free module, per bidegree
    let w = Window::new(40, -20, 50);
    let model = MilnorKModel::real_model(&w.padded(0, 80, 0, 80));
    let out = rost_cohomology(&model, 2, &w)?;
    // independent oracle: brute-force span of the four generators inside
    // the truncated Laurent ring
    let mut oracle = RankTable::default();
    let gens = [(0i64, 0i64), (-1, 3), (-2, 4), (-3, 6)];
    for (gt, gr) in gens {
        for a in 0..7i64 {
            for c in 0..200i64 {
                let (tau, rho) = (gt + c, gr + a);
                if rho >= 7 {
                    break;
                }
                let deg = BiDegree::new(rho, tau + rho);
                if w.contains(deg) && oracle.get(deg) == 0 {
                    oracle.add(deg, 1);
                }
            }
        }
    }
    if let Some((d, x, y)) = out.module.rank_table().first_mismatch(&oracle, &w) {
        return Err(err(format!("n=2 mismatch at {d}: {x} vs {y}")));
    }
    // n = 3, f <= 60: generators Q^eps(a'), quotient rho^15 = 0
    let w3 = Window::new(60, -30, 70);
    let model3 = MilnorKModel::real_model(&w3.padded(0, 80, 0, 80));
    let out3 = rost_cohomology(&model3, 3, &w3)?;
    let mut oracle3 = RankTable::default();
    for eps in EpsilonIndex::all(3) {
        let g = q_monomial(&eps, 3);
        let (gt, gr) = if eps.support().is_empty() { (0, 0) } else { (g.tau, g.rho) };
        for a in 0..15i64 {
            for c in 0..220i64 {
                let (tau, rho) = (gt + c, gr + a);
                if rho >= 15 {
                    break;
                }
                let deg = BiDegree::new(rho, tau + rho);
                if w3.contains(deg) && oracle3.get(deg) == 0 {
                    oracle3.add(deg, 1);
                }
            }
        }
    }
    // include the unit span (eps = 0 gives a', not 1)
    for a in 0..15i64 {
        for c in 0..220i64 {
            let deg = BiDegree::new(a, c + a);
            if w3.contains(deg) && oracle3.get(deg) == 0 {
                oracle3.add(deg, 1);
            }
        }
    }
    if let Some((d, x, y)) = out3.module.rank_table().first_mismatch(&oracle3, &w3) {
        return Err(err(format!("n=3 mismatch at {d}: {x} vs {y}")));
    }
    let dt = t0.elapsed();
    if dt.as_secs() >= 60 {
        return Err(err(format!("runtime {dt:?} exceeds one minute")));
    }
    Ok(format!("n=2 and n=3 reproduced; {} ms", dt.as_millis()))
}

/// Criterion 2: derivation route vs closed form for the operation values.
fn check_two_route_operations() -> Result<String> {
    let mut count = 0;
    for n in [2u32, 3] {
        let aprime = LaurentElt::mono(q_monomial(&EpsilonIndex(vec![0; n as usize]), n));
        for mask in 0u32..(1 << n) {
            let eps: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
            if eps.iter().enumerate().any(|(i, &e)| e == 1 && i >= 2) {
                continue; // beyond the coproduct data
            }
            let mut x = aprime.clone();
            if eps.get(1) == Some(&1) {
                x = q_on_real_laurent(1, &x)?;
            }
            if eps[0] == 1 {
                x = q_on_real_laurent(0, &x)?;
            }
            let closed = LaurentElt::mono(q_monomial(&EpsilonIndex(eps.clone()), n));
            if x != closed {
                return Err(err(format!("route mismatch at n={n}, eps={eps:?}")));
            }
            count += 1;
        }
    }
    Ok(format!("{count} index patterns, exact equality"))
}

/// Criterion 3: iterated stages equal the closed form for the truncated
/// models.
fn check_truncated_equivalence() -> Result<String> {
    let t0 = Instant::now();
    for (p, n) in [(2u32, 2u32), (3, 2), (2, 3)] {
        let model = MilnorKModel::exterior_local_model(n, p)?;
        let w = Window::new(60, 0, 70);
        // rost_cohomology asserts the per-bidegree equality internally
        let _ = rost_cohomology(&model, n, &w)?;
    }
    let dt = t0.elapsed();
    if dt.as_secs() >= 300 {
        return Err(err(format!("runtime {dt:?} exceeds five minutes")));
    }
    Ok(format!("(2,2), (3,2), (2,3) on f <= 60; {} ms", dt.as_millis()))
}

/// Criterion 4: Chow generator counts and degrees.
fn check_chow_counts() -> Result<String> {
    for (p, n) in [(2u32, 2u32), (3, 2), (2, 3)] {
        let model = MilnorKModel::exterior_local_model(n, p)?;
        let b_n = b_number(p, n);
        let fmax = 2 * b_n * (p as i64 - 1) + 4;
        let w = Window::new(fmax, 0, fmax + 6);
        let out = rost_cohomology(&model, n, &w)?;
        let chow = chow_of_rost(&out.module, n)?;
        let expect = 1 + (p as i64 - 1) * n as i64;
        if chow.classes.len() as i64 != expect {
            return Err(err(format!(
                "(p,n)=({p},{n}): {} generators, expected {expect}",
                chow.classes.len()
            )));
        }
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
            let want = 2 * b_n * j - 2 * (ipow(p as i64, i) - 1);
            if c.f_degree != want {
                return Err(err(format!("degree of {} is {}, expected {want}", c.name, c.f_degree)));
            }
        }
        // the w = 0 slice of the closed form agrees
        let slice: u64 = out
            .closed
            .iter()
            .filter(|v| v.deg.w() == 0)
            .count() as u64;
        if slice != expect as u64 {
            return Err(err(format!("w = 0 slice has {slice} classes, expected {expect}")));
        }
    }
    Ok("counts 1 + (p-1) n and degrees 2 b_n j - 2(p^i - 1) verified".into())
}

/// Criterion 5: the cobordism infinity page and the relation ledger.
fn check_ahss() -> Result<String> {
    let model = MilnorKModel::exterior_local_model(2, 3)?;
    let w = Window::new(30, 0, 34);
    let out = crate::ahss::ah_of_rost(&model, 2, &w)?;
    if !out.ledger.contains("p*c1 = v1*c0 mod I^2") {
        return Err(err("relation ledger misses p c_1 = v_1 c_0".into()));
    }
    // infinity page was compared against both the tower closed form and
    // the submodule assembly inside ah_of_rost
    Ok(format!(
        "infinity page matches the display; ledger has {} entries",
        out.ledger.entries.len()
    ))
}

/// Criterion 6: the two truncated-theory routes.
fn check_ak_routes() -> Result<String> {
    for (p, n) in [(2u32, 2u32), (3, 2)] {
        let model = MilnorKModel::exterior_local_model(n, p)?;
        let w = Window::new(30, 0, 34);
        let _ = crate::ahss::ak_of_rost(&model, n, &w)?;
    }
    Ok("specialization route = direct route, per bidegree".into())
}

/// Criterion 7: flag assembly and relation audits.
fn check_flag_assembly() -> Result<String> {
    // real regime, rank-two catalog entry
    let w = Window::new(26, -13, 30);
    let model = MilnorKModel::real_model(&w.padded(0, 60, 0, 60));
    let g2 = load_group_datum("G2", 2)?;
    let out = crate::flag::motivic_of_flag(&g2, &model, &w)?;
    for want in ["rho^3 b1 = 0", "rho b2 = 0", "(a')^2 = rho^2 b1", "rho^4 a' = 0"] {
        if !out.relation_checks.iter().any(|c| c.relation == want) {
            return Err(err(format!("missing real relation audit `{want}`")));
        }
    }
    // truncated regime at p = 3
    let model = MilnorKModel::exterior_local_model(2, 3)?;
    let w = Window::new(30, 0, 34);
    let f4 = load_group_datum("F4", 3)?;
    let out = crate::flag::motivic_of_flag(&f4, &model, &w)?;
    if !out.relation_checks.iter().any(|c| c.relation == "H~ y^p = 0") {
        return Err(err("missing truncated relation audit".into()));
    }
    Ok("additive convolution and relation audits hold (G2 real, F4 p=3)".into())
}

/// Criterion 8: etale consistency, including the independent differential
/// route over the reals.
fn check_etale() -> Result<String> {
    // rost: stable weight ranks match the closed etale table
    let model = MilnorKModel::exterior_local_model(2, 3)?;
    let w = Window::new(24, 0, 60);
    let out = rost_cohomology(&model, 2, &w)?;
    let stable = stable_ranks(&out.closed, 24)?;
    let et = etale_realization(&model, 2, 24);
    if stable != et.ranks {
        return Err(err("truncated etale table mismatch".into()));
    }
    let wr = Window::new(12, -6, 60);
    let rm = MilnorKModel::real_model(&wr.padded(0, 80, 0, 80));
    let outr = rost_cohomology(&rm, 2, &wr)?;
    let stable = stable_ranks(&outr.closed, 12)?;
    let et = etale_realization(&rm, 2, 12);
    if stable != et.ranks {
        return Err(err("real etale table mismatch".into()));
    }
    // flags: the quotient presentation and the differential route agree
    let g2 = load_group_datum("G2", 2)?;
    let et = crate::flag::etale_of_flag(&g2, &rm, 16)?;
    if et.borel_ranks.as_deref() != Some(&et.ranks[..]) {
        return Err(err("differential route disagrees over the reals".into()));
    }
    let f4 = load_group_datum("F4", 3)?;
    let model3 = MilnorKModel::exterior_local_model(2, 3)?;
    let _ = crate::flag::etale_of_flag(&f4, &model3, 40)?;
    Ok("tau-inversion tables and the degree-seven route agree".into())
}

/// Criterion 9: Witt groups.
fn check_witt() -> Result<String> {
    let w = Window::new(20, -10, 24);
    let rost = witt_of(&WittTarget::Rost, &w, true)?;
    let mut names: Vec<&str> = rost.classes.iter().map(|c| c.name.as_str()).collect();
    names.sort();
    if names != vec!["1", "rho", "rho^2"] {
        return Err(err(format!("rost Witt classes {names:?}")));
    }
    let datum = load_group_config(G2_EXPLICIT_SAMPLE, 10)?;
    let BaseRing::Explicit(e) = &datum.base else { unreachable!() };
    let base_h = base_sq2_homology(e)?;
    let base_total: usize = base_h.iter().map(|(_, v)| v.len()).sum();
    let wt = Window::new(22, -11, 26);
    let twisted = witt_of(&WittTarget::TwistedFlag(datum), &wt, true)?;
    if twisted.classes.len() != 3 * base_total {
        return Err(err(format!(
            "twisted flag: {} classes, expected {}",
            twisted.classes.len(),
            3 * base_total
        )));
    }
    Ok(format!(
        "rost = three classes; twisted flag factorizes (3 x {base_total})"
    ))
}

/// Criterion 10: invariant suites, exhaustively over the window bases.
fn check_invariant_suites() -> Result<String> {
    let mut facts = Vec::new();
    // Q_i^2 = 0 and anticommutation on both chi regimes
    for (p, n) in [(3u32, 2u32), (2, 2)] {
        let model = MilnorKModel::exterior_local_model(n, p)?;
        let w = Window::new(50, 0, 56);
        let chi = chi_cohomology(&model, n, &w)?;
        for i in 0..=n {
            let q = q_map(&chi.module, n, i, p)?;
            if q.shift != crate::milnor::q_degree(i, p) {
                return Err(err(format!("Q_{i} bidegree audit failed")));
            }
            let qq = q.compose(&q, &chi.module, &chi.module);
            if !qq.is_zero() {
                return Err(err(format!("Q_{i}^2 != 0 at p = {p}")));
            }
        }
        for i in 0..=n {
            for j in (i + 1)..=n {
                let qi = q_map(&chi.module, n, i, p)?;
                let qj = q_map(&chi.module, n, j, p)?;
                let ij = qi.compose(&qj, &chi.module, &chi.module);
                let ji = qj.compose(&qi, &chi.module, &chi.module);
                if !ij.equals_scaled(&ji, -1) {
                    return Err(err(format!("Q_{i} Q_{j} sign check failed at p = {p}")));
                }
            }
        }
        // exactness bookkeeping at the delta map
        let (delta, _) = delta_multiplication(&chi)?;
        let (ker, coker) = delta.kernel_cokernel(&chi.module, &chi.module)?;
        let shift = chi.delta_shift();
        for deg in ker.window.iter() {
            let src = chi.module.rank_at(deg);
            if src == 0 {
                continue;
            }
            let k = ker.rank_at(deg);
            let t = chi.module.rank_at(deg + shift);
            let c = coker.rank_at(deg + shift);
            // rank(source) = rank(ker) + rank(im), rank(im) = t - c
            if src != k + (t - c) {
                return Err(err(format!("exactness bookkeeping fails at {deg}")));
            }
        }
        facts.push(format!("chi (p={p})"));
    }
    // d_r^2 = 0 on the cobordism pages is asserted inside homology();
    // realizability on final modules is asserted inside rost_cohomology;
    // run both to surface them here
    let model = MilnorKModel::exterior_local_model(2, 3)?;
    let w = Window::new(26, 0, 30);
    let _ = crate::ahss::ah_of_rost(&model, 2, &w)?;
    facts.push("cobordism pages (d^2 = 0)".into());
    let _ = rost_cohomology(&model, 2, &w)?;
    facts.push("realizability (w >= 0, d <= dim, s >= 0)".into());
    // Sq2 Sq2 = 0 on the real page
    let wr = Window::new(20, -10, 24);
    let _ = witt_of(&WittTarget::Rost, &wr, true)?;
    facts.push("page differential squares to zero".into());
    Ok(facts.join("; "))
}

/// Run the full matrix. The profile fixes the window sizes; "desk" is the
/// default and the only profile currently defined.
pub fn run_all_checks(profile: &str) -> VerifyReport {
    let _ = profile;
    let mut report = VerifyReport::default();
    report.add(
        "T6.4/C6.6",
        "real closed forms reproduce the iterated stage (n = 2, 3)",
        check_real_closed_forms(),
    );
    report.add(
        "L6.1",
        "operation values: derivation route = closed form",
        check_two_route_operations(),
    );
    report.add(
        "T3.3",
        "truncated models: iteration = closed form on f <= 60",
        check_truncated_equivalence(),
    );
    report.add(
        "C3.2",
        "Chow generator counts and degrees",
        check_chow_counts(),
    );
    report.add(
        "L4.4/T4.7/C4.6",
        "cobordism infinity page, assembly, relation ledger (p = 3, n = 2)",
        check_ahss(),
    );
    report.add(
        "C4.9=T5.5",
        "truncated-coefficient cobordism: two routes agree",
        check_ak_routes(),
    );
    report.add(
        "T3.12/T6.7",
        "flag assembly: additive convolution and relation audits",
        check_flag_assembly(),
    );
    report.add(
        "C3.4/C3.13/C6.8",
        "etale realizations, including the independent differential route",
        check_etale(),
    );
    report.add(
        "L7.5/L7.8/P7.6",
        "Witt groups: three classes, factorization over the base homology",
        check_witt(),
    );
    report.add(
        "invariants",
        "operation squares, signs, exactness, realizability, page differentials",
        check_invariant_suites(),
    );
    report
}
