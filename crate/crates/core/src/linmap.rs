//! Linear maps between bigraded modules, exact kernel/cokernel and
//! homology via F_p row reduction, tensor products and Tate twists.
//!
//! Row reduction is plain dense Gaussian elimination: blocks are small
//! (one matrix per bidegree) and determinism matters more than speed.

use crate::bidegree::{BiDegree, Window};
use crate::errors::{EngineError, Result};
use crate::fp;
use crate::label::{Ann, Label};
use crate::module::{BasisVector, BigradedModule};
use std::collections::BTreeMap;

type SparseVec = Vec<(usize, u32)>;

/// Row-reduce `rows` (vectors of length `width`) in place over F_p.
/// Returns the echelon rows (nonzero only) and their pivot columns,
/// in increasing pivot order.
pub(crate) fn rref(p: u32, rows: Vec<Vec<u32>>, width: usize) -> (Vec<Vec<u32>>, Vec<usize>) {
    let mut rows: Vec<Vec<u32>> = rows.into_iter().filter(|r| r.iter().any(|&x| x != 0)).collect();
    let mut echelon: Vec<Vec<u32>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for col in 0..width {
        // find a row with nonzero entry in col
        let mut found = None;
        for (i, r) in rows.iter().enumerate() {
            if r[col] != 0 {
                found = Some(i);
                break;
            }
        }
        let Some(i) = found else { continue };
        let mut piv = rows.swap_remove(i);
        let inv = fp::inv(p, piv[col]);
        for x in piv.iter_mut() {
            *x = fp::mul(p, *x, inv);
        }
        for r in rows.iter_mut() {
            let c = r[col];
            if c != 0 {
                for k in col..width {
                    r[k] = fp::sub(p, r[k], fp::mul(p, c, piv[k]));
                }
            }
        }
        for e in echelon.iter_mut() {
            let c = e[col];
            if c != 0 {
                for k in 0..width {
                    e[k] = fp::sub(p, e[k], fp::mul(p, c, piv[k]));
                }
            }
        }
        echelon.push(piv);
        pivots.push(col);
        rows.retain(|r| r.iter().any(|&x| x != 0));
        if rows.is_empty() {
            break;
        }
    }
    (echelon, pivots)
}

/// Reduce `v` against an echelon basis (pivots normalized to 1).
pub(crate) fn reduce_against(p: u32, v: &mut [u32], echelon: &[Vec<u32>], pivots: &[usize]) {
    for (row, &piv) in echelon.iter().zip(pivots.iter()) {
        let c = v[piv];
        if c != 0 {
            for k in 0..v.len() {
                v[k] = fp::sub(p, v[k], fp::mul(p, c, row[k]));
            }
        }
    }
}

/// A degreewise linear map `source -> target` of fixed bidegree shift:
/// it sends the component at (f,s) into (f,s)+shift. Columns are stored
/// per source bidegree, one sparse column per source basis vector.
#[derive(Clone, Debug)]
pub struct LinearMap {
    pub prime: u32,
    pub shift: BiDegree,
    pub source_window: Window,
    pub target_window: Window,
    cols: BTreeMap<BiDegree, Vec<SparseVec>>,
}

impl LinearMap {
    /// Bidegrees where the map is defined (source materialized and target
    /// component inside the target window).
    pub fn valid_window(&self) -> Window {
        self.source_window.intersect(&self.target_window.shifted(-self.shift))
    }

    /// Build a map from a per-basis-vector rule. Image terms whose target
    /// bidegree holds a zero group are dropped (a map into the zero group
    /// is zero); a missing label at a nonzero target group is an error.
    pub fn from_rule(
        src: &BigradedModule,
        tgt: &BigradedModule,
        shift: BiDegree,
        rule: &mut dyn FnMut(&BasisVector) -> Vec<(Label, i64)>,
    ) -> Result<LinearMap> {
        assert_eq!(src.prime, tgt.prime);
        let p = src.prime;
        let mut cols = BTreeMap::new();
        let valid = src.window.intersect(&tgt.window.shifted(-shift));
        for deg in src.degrees().collect::<Vec<_>>() {
            if !valid.contains(deg) {
                continue;
            }
            let tdeg = deg + shift;
            let mut degcols = Vec::with_capacity(src.rank_at(deg));
            for v in src.at(deg) {
                let mut col: SparseVec = Vec::new();
                for (label, coeff) in rule(v) {
                    let c = fp::norm(p, coeff);
                    if c == 0 {
                        continue;
                    }
                    match tgt.position(tdeg, &label) {
                        Some(i) => {
                            match col.binary_search_by(|(j, _)| j.cmp(&i)) {
                                Ok(k) => {
                                    col[k].1 = fp::add(p, col[k].1, c);
                                    if col[k].1 == 0 {
                                        col.remove(k);
                                    }
                                }
                                Err(k) => col.insert(k, (i, c)),
                            }
                        }
                        None => {
                            let rank = tgt.rank_at(tdeg);
                            if rank > 0 {
                                return Err(EngineError::UnresolvedImage {
                                    label: label.to_string(),
                                    deg: tdeg,
                                    rank,
                                });
                            }
                            // target group is zero: the term is zero
                        }
                    }
                }
                degcols.push(col);
            }
            cols.insert(deg, degcols);
        }
        Ok(LinearMap {
            prime: p,
            shift,
            source_window: src.window,
            target_window: tgt.window,
            cols,
        })
    }

    pub fn zero(src: &BigradedModule, tgt: &BigradedModule, shift: BiDegree) -> LinearMap {
        LinearMap::from_rule(src, tgt, shift, &mut |_| Vec::new()).expect("zero map")
    }

    pub fn columns_at(&self, deg: BiDegree) -> Option<&Vec<SparseVec>> {
        self.cols.get(&deg)
    }

    pub fn is_zero(&self) -> bool {
        self.cols.values().all(|cs| cs.iter().all(|c| c.is_empty()))
    }

    /// Apply to a vector given in source coordinates at `deg`.
    pub fn apply(&self, deg: BiDegree, v: &[u32], target_dim: usize) -> Vec<u32> {
        let mut out = vec![0u32; target_dim];
        if let Some(cols) = self.cols.get(&deg) {
            for (j, &c) in v.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for &(i, a) in &cols[j] {
                    out[i] = fp::add(self.prime, out[i], fp::mul(self.prime, a, c));
                }
            }
        }
        out
    }

    /// Matrix composition g∘f (apply self first, then g).
    pub fn compose(&self, g: &LinearMap, src: &BigradedModule, mid: &BigradedModule) -> LinearMap {
        let p = self.prime;
        let shift = self.shift + g.shift;
        let mut cols = BTreeMap::new();
        for (deg, degcols) in &self.cols {
            let mdeg = *deg + self.shift;
            let Some(gcols) = g.cols.get(&mdeg) else { continue };
            let mut out = Vec::with_capacity(degcols.len());
            for col in degcols {
                let mut acc: BTreeMap<usize, u32> = BTreeMap::new();
                for &(i, a) in col {
                    for &(k, b) in &gcols[i] {
                        let e = acc.entry(k).or_insert(0);
                        *e = fp::add(p, *e, fp::mul(p, a, b));
                    }
                }
                out.push(acc.into_iter().filter(|&(_, c)| c != 0).collect());
            }
            cols.insert(*deg, out);
        }
        let _ = (src, mid);
        LinearMap {
            prime: p,
            shift,
            source_window: self.source_window,
            target_window: g.target_window,
            cols,
        }
    }

    /// Do two maps with the same shift agree up to the scalar `c`?
    pub fn equals_scaled(&self, other: &LinearMap, c: i64) -> bool {
        if self.shift != other.shift {
            return false;
        }
        let p = self.prime;
        let cc = fp::norm(p, c);
        let degs: std::collections::BTreeSet<_> =
            self.cols.keys().chain(other.cols.keys()).copied().collect();
        for d in degs {
            let empty: Vec<SparseVec> = Vec::new();
            let a = self.cols.get(&d).unwrap_or(&empty);
            let b = other.cols.get(&d).unwrap_or(&empty);
            let n = a.len().max(b.len());
            for j in 0..n {
                let ca = a.get(j).cloned().unwrap_or_default();
                let cb: SparseVec = b
                    .get(j)
                    .cloned()
                    .unwrap_or_default()
                    .into_iter()
                    .map(|(i, x)| (i, fp::mul(p, x, cc)))
                    .filter(|&(_, x)| x != 0)
                    .collect();
                if ca != cb {
                    return false;
                }
            }
        }
        true
    }

    /// Exact kernel and cokernel, one row reduction per bidegree.
    ///
    /// Kernel vectors are named by their leading source label and carry the
    /// `ker` annotation; cokernel vectors are the surviving target labels.
    /// rank(ker) + rank(im) = rank(source) holds per bidegree by
    /// construction and is asserted.
    pub fn kernel_cokernel(
        &self,
        src: &BigradedModule,
        tgt: &BigradedModule,
    ) -> Result<(BigradedModule, BigradedModule)> {
        let p = self.prime;
        let ker_window = self.valid_window();
        let coker_window = ker_window.shifted(self.shift);
        let mut ker = BigradedModule::new(p, ker_window);
        let mut coker = BigradedModule::new(p, coker_window);

        // kernel and image per source bidegree
        for deg in ker_window
            .iter()
            .filter(|d| src.rank_at(*d) > 0 || tgt.rank_at(*d + self.shift) > 0)
            .collect::<Vec<_>>()
        {
            let tdeg = deg + self.shift;
            let n = src.rank_at(deg);
            let m = tgt.rank_at(tdeg);
            let empty: Vec<SparseVec> = vec![Vec::new(); n];
            let cols = self.cols.get(&deg).unwrap_or(&empty);

            // rows of the image matrix: columns of the map, as vectors in
            // target coordinates
            let im_rows: Vec<Vec<u32>> = cols
                .iter()
                .map(|c| {
                    let mut r = vec![0u32; m];
                    for &(i, a) in c {
                        r[i] = a;
                    }
                    r
                })
                .collect();
            let (im_ech, im_piv) = rref(p, im_rows, m);
            let im_rank = im_ech.len();

            // kernel: RREF of the map matrix (rows = target coords), free
            // columns give the kernel basis
            let mat_rows: Vec<Vec<u32>> = (0..m)
                .map(|i| {
                    let mut r = vec![0u32; n];
                    for (j, c) in cols.iter().enumerate() {
                        if let Ok(k) = c.binary_search_by(|(ti, _)| ti.cmp(&i)) {
                            r[j] = c[k].1;
                        }
                    }
                    r
                })
                .collect();
            let (ech, piv) = rref(p, mat_rows, n);
            let pivset: std::collections::BTreeSet<usize> = piv.iter().copied().collect();
            let mut ker_count = 0usize;
            for freecol in (0..n).filter(|j| !pivset.contains(j)) {
                // back-substitute: x[freecol] = 1, pivot coords adjust
                let mut x = vec![0u32; n];
                x[freecol] = 1;
                for (row, &pc) in ech.iter().zip(piv.iter()) {
                    // pivot normalized: x[pc] = -row[freecol]
                    x[pc] = fp::neg(p, row[freecol]);
                }
                let lead = src.at(deg)[freecol].clone();
                ker.push(BasisVector {
                    label: lead.label,
                    deg,
                    ann: {
                        let mut a = lead.ann;
                        a.insert(Ann::Ker);
                        a
                    },
                })?;
                ker_count += 1;
            }
            assert_eq!(ker_count + im_rank, n, "exactness bookkeeping at {deg}");

            // cokernel at tdeg: non-pivot target coordinates survive
            let covered: std::collections::BTreeSet<usize> = im_piv.iter().copied().collect();
            for (i, v) in tgt.at(tdeg).iter().enumerate() {
                if !covered.contains(&i) {
                    coker.push(v.clone())?;
                }
            }
        }
        Ok((ker, coker))
    }
}

/// Homology of a self-map d (with d∘d = 0) at every bidegree where the
/// window permits: Ker(d)/Im(d). Representatives are named by leading label.
pub fn homology(m: &BigradedModule, d: &LinearMap) -> Result<BigradedModule> {
    let p = m.prime;
    let shift = d.shift;
    let hw = m
        .window
        .intersect(&m.window.shifted(-shift))
        .intersect(&m.window.shifted(shift));
    let mut out = BigradedModule::new(p, hw);
    for deg in hw.iter().filter(|d| m.rank_at(*d) > 0).collect::<Vec<_>>() {
        let n = m.rank_at(deg);
        let ndeg_out = m.rank_at(deg + shift);
        let prev = deg - shift;
        // d at deg as columns
        let empty: Vec<SparseVec> = vec![Vec::new(); n];
        let cols = d.columns_at(deg).unwrap_or(&empty);
        // kernel of d at deg
        let mat_rows: Vec<Vec<u32>> = (0..ndeg_out)
            .map(|i| {
                let mut r = vec![0u32; n];
                for (j, c) in cols.iter().enumerate() {
                    if let Ok(k) = c.binary_search_by(|(ti, _)| ti.cmp(&i)) {
                        r[j] = c[k].1;
                    }
                }
                r
            })
            .collect();
        let (ech, piv) = rref(p, mat_rows, n);
        let pivset: std::collections::BTreeSet<usize> = piv.iter().copied().collect();
        let mut ker_vecs: Vec<Vec<u32>> = Vec::new();
        for freecol in (0..n).filter(|j| !pivset.contains(j)) {
            let mut x = vec![0u32; n];
            x[freecol] = 1;
            for (row, &pc) in ech.iter().zip(piv.iter()) {
                x[pc] = fp::neg(p, row[freecol]);
            }
            ker_vecs.push(x);
        }
        // image of d from deg - shift
        let nprev = m.rank_at(prev);
        let empty_prev: Vec<SparseVec> = vec![Vec::new(); nprev];
        let pcols = d.columns_at(prev).unwrap_or(&empty_prev);
        let im_rows: Vec<Vec<u32>> = pcols
            .iter()
            .map(|c| {
                let mut r = vec![0u32; n];
                for &(i, a) in c {
                    r[i] = a;
                }
                r
            })
            .collect();
        // check d∘d = 0: image vectors must be killed by d at deg
        for r in &im_rows {
            let img = d.apply(deg, r, ndeg_out);
            if img.iter().any(|&x| x != 0) {
                return Err(EngineError::Validation(format!(
                    "d∘d != 0 at {deg} (differential not a differential)"
                )));
            }
        }
        let (im_ech, im_piv) = rref(p, im_rows, n);
        // reduce kernel vectors against the image, then row-reduce what is left
        for v in ker_vecs.iter_mut() {
            reduce_against(p, v, &im_ech, &im_piv);
        }
        let (h_ech, h_piv) = rref(p, ker_vecs, n);
        for (row, &pc) in h_ech.iter().zip(h_piv.iter()) {
            let _ = row;
            let lead = &m.at(deg)[pc];
            out.push(BasisVector::new(lead.label.clone(), deg))?;
        }
    }
    Ok(out)
}

/// Additive tensor product: basis at d is all pairs of basis vectors whose
/// bidegrees sum to d, with concatenated (merged) labels.
pub fn tensor(m1: &BigradedModule, m2: &BigradedModule, window: &Window) -> Result<BigradedModule> {
    assert_eq!(m1.prime, m2.prime);
    let mut out = BigradedModule::new(m1.prime, *window);
    for d1 in m1.degrees().collect::<Vec<_>>() {
        for d2 in m2.degrees().collect::<Vec<_>>() {
            let d = d1 + d2;
            if !window.contains(d) {
                continue;
            }
            for v1 in m1.at(d1) {
                for v2 in m2.at(d2) {
                    out.push(BasisVector::new(v1.label.mul(&v2.label), d))?;
                }
            }
        }
    }
    Ok(out)
}

/// Tate twist: shift every basis vector by (2b, b) and tag names with the
/// vertical symbol `t^k` (no tag when k = 0).
pub fn tate_shift(m: &BigradedModule, k: i64, b: i64) -> BigradedModule {
    let shift = BiDegree::new(2 * b, b);
    let mut out = BigradedModule::new(m.prime, m.window.shifted(shift));
    for v in m.iter() {
        let mut nv = BasisVector {
            label: if k == 0 { v.label.clone() } else { v.label.times_sym("t", k) },
            deg: v.deg + shift,
            ann: v.ann.clone(),
        };
        if k != 0 {
            nv.ann.insert(Ann::Vertical);
        }
        out.push(nv).expect("tate shift cannot collide");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bidegree::Window;

    fn module_with(p: u32, w: Window, vecs: &[(&str, i64, i64)]) -> BigradedModule {
        let mut m = BigradedModule::new(p, w);
        for (name, f, s) in vecs {
            m.push(BasisVector::new(name.parse().unwrap(), BiDegree::new(*f, *s)))
                .unwrap();
        }
        m
    }

    #[test]
    fn zero_map_kernel_is_everything() {
        let w = Window::new(5, 0, 5);
        let src = module_with(3, w, &[("x0", 1, 1), ("x1", 1, 1), ("x2", 1, 1)]);
        let tgt = module_with(3, w, &[("y0", 2, 1), ("y1", 2, 1)]);
        let z = LinearMap::zero(&src, &tgt, BiDegree::new(1, 0));
        let (ker, coker) = z.kernel_cokernel(&src, &tgt).unwrap();
        assert_eq!(ker.rank_at(BiDegree::new(1, 1)), 3);
        assert_eq!(coker.rank_at(BiDegree::new(2, 1)), 2);
    }

    #[test]
    fn identity_map_kernel_and_cokernel_vanish() {
        let w = Window::new(5, 0, 5);
        let src = module_with(3, w, &[("x0", 1, 1), ("x1", 1, 1)]);
        let tgt = module_with(3, w, &[("x0", 1, 1), ("x1", 1, 1)]);
        let id = LinearMap::from_rule(&src, &tgt, BiDegree::ZERO, &mut |v| {
            vec![(v.label.clone(), 1)]
        })
        .unwrap();
        let (ker, coker) = id.kernel_cokernel(&src, &tgt).unwrap();
        assert_eq!(ker.total_rank(), 0);
        assert_eq!(coker.total_rank(), 0);
    }

    #[test]
    fn rank_bookkeeping_on_a_mixed_block() {
        // x0 -> y0, x1 -> y0, x2 -> 0 over F_3: rank(im)=1, ker rank 2
        let w = Window::new(5, 0, 5);
        let src = module_with(3, w, &[("x0", 1, 1), ("x1", 1, 1), ("x2", 1, 1)]);
        let tgt = module_with(3, w, &[("y0", 1, 1), ("y1", 1, 1)]);
        let f = LinearMap::from_rule(&src, &tgt, BiDegree::ZERO, &mut |v| {
            match v.label.to_string().as_str() {
                "x0" => vec![("y0".parse().unwrap(), 1)],
                "x1" => vec![("y0".parse().unwrap(), 2)],
                _ => vec![],
            }
        })
        .unwrap();
        let (ker, coker) = f.kernel_cokernel(&src, &tgt).unwrap();
        assert_eq!(ker.rank_at(BiDegree::new(1, 1)), 2);
        let surv = coker.at(BiDegree::new(1, 1));
        assert_eq!(surv.len(), 1);
        assert_eq!(surv[0].label.to_string(), "y1");
    }

    #[test]
    fn tate_shift_examples() {
        let w = Window::new(10, 0, 10);
        let m = module_with(2, w, &[("x", 3, 2)]);
        let s = tate_shift(&m, 1, 3);
        assert_eq!(s.rank_at(BiDegree::new(9, 5)), 1);
        assert_eq!(s.at(BiDegree::new(9, 5))[0].label.to_string(), "t*x");
        let id = tate_shift(&m, 0, 0);
        assert_eq!(id, m);
        // tagged unit lands at deg(t) = (2b, b)
        let unit = module_with(2, w, &[("1", 0, 0)]);
        let t = tate_shift(&unit, 1, 3);
        assert_eq!(t.at(BiDegree::new(6, 3))[0].label.to_string(), "t");
    }

    #[test]
    fn tensor_unit_and_rank_bilinearity() {
        let w = Window::new(10, 0, 10);
        let m = module_with(2, w, &[("x", 3, 2), ("y", 3, 2), ("z", 5, 3)]);
        let unit = module_with(2, w, &[("1", 0, 0)]);
        let t = tensor(&m, &unit, &w).unwrap();
        assert_eq!(t, m);
        let a = module_with(2, w, &[("a0", 2, 1), ("a1", 2, 1)]);
        let b = module_with(2, w, &[("b0", 2, 1), ("b1", 2, 1), ("b2", 2, 1)]);
        let ab = tensor(&a, &b, &w).unwrap();
        assert_eq!(ab.rank_at(BiDegree::new(4, 2)), 6);
    }

    #[test]
    fn homology_of_a_two_step_complex() {
        // d(x) = y at shift (1,0); H should keep z only
        let w = Window::new(5, 0, 5);
        let m = module_with(2, w, &[("x", 1, 1), ("y", 2, 1), ("z", 3, 3)]);
        let d = LinearMap::from_rule(&m, &m, BiDegree::new(1, 0), &mut |v| {
            if v.label.to_string() == "x" {
                vec![("y".parse().unwrap(), 1)]
            } else {
                vec![]
            }
        })
        .unwrap();
        let h = homology(&m, &d).unwrap();
        assert_eq!(h.rank_at(BiDegree::new(1, 1)), 0);
        assert_eq!(h.rank_at(BiDegree::new(2, 1)), 0);
        assert_eq!(h.rank_at(BiDegree::new(3, 3)), 1);
    }
}
