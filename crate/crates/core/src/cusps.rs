//! Cusps and genus of the modular curve X_G.
//!
//! Cusps are the double cosets `G \ GL2(Z/nZ) / U` where `U` is generated by
//! `[[1,1],[0,1]]` and `-I`. They are found by first splitting GL2 into right
//! cosets `G x` and then merging those under right multiplication by `U`.
//! The unit `a` acts on a cusp `G x U` by `G x diag(1, a) U`; cusps fixed by
//! every unit are the rational ones.

use crate::error::{Error, Result};
use crate::modmat::{gl2_elements, units, Mat2, Modulus};
use crate::subgroup::Subgroup;

/// Right cosets `G x` of a subgroup in an ambient list of matrices.
struct CosetTable {
    n: Modulus,
    /// coset id per matrix code, `u32::MAX` for matrices outside the ambient set
    id: Vec<u32>,
    reps: Vec<Mat2>,
}

impl CosetTable {
    fn new(g: &Subgroup, ambient: &[Mat2]) -> CosetTable {
        let n = g.modulus();
        let mut id = vec![u32::MAX; (n as usize).pow(4)];
        let mut reps = Vec::new();
        for x in ambient {
            if id[x.code() as usize] != u32::MAX {
                continue;
            }
            let k = reps.len() as u32;
            reps.push(*x);
            for h in g.elements() {
                id[h.mul_unchecked(x).code() as usize] = k;
            }
        }
        CosetTable { n, id, reps }
    }

    fn len(&self) -> usize {
        self.reps.len()
    }

    /// Coset of `rep(k) * m`.
    fn act(&self, k: usize, m: &Mat2) -> usize {
        debug_assert_eq!(m.modulus(), self.n);
        self.id[self.reps[k].mul_unchecked(m).code() as usize] as usize
    }

    /// Orbits of the right action of the matrices in `ms`.
    fn orbits(&self, ms: &[Mat2]) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut orbit = vec![start];
            let mut head = 0;
            while head < orbit.len() {
                let k = orbit[head];
                head += 1;
                for m in ms {
                    let j = self.act(k, m);
                    if !seen[j] {
                        seen[j] = true;
                        orbit.push(j);
                    }
                }
            }
            orbit.sort_unstable();
            out.push(orbit);
        }
        out
    }
}

/// The cusps of X_G with the Galois action of (Z/nZ)^x.
#[derive(Debug, Clone)]
pub struct CuspSet {
    pub n: Modulus,
    group_order: u64,
    /// Per cusp: representatives `x` of the right cosets `G x` it contains.
    pub cusps: Vec<Vec<Mat2>>,
    /// `action[i][k]` is the image of cusp `k` under the `i`-th unit.
    action: Vec<Vec<usize>>,
    units: Vec<u32>,
    pub rational_mask: Vec<bool>,
}

impl CuspSet {
    pub fn len(&self) -> usize {
        self.cusps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cusps.is_empty()
    }

    /// Number of matrices in the `k`-th double coset.
    pub fn double_coset_size(&self, k: usize) -> u64 {
        self.cusps[k].len() as u64 * self.group_order
    }

    pub fn units(&self) -> &[u32] {
        &self.units
    }

    /// Image of cusp `k` under `zeta -> zeta^a`.
    pub fn galois_image(&self, a: u32, k: usize) -> Option<usize> {
        let i = self.units.iter().position(|&u| u == a % self.n)?;
        Some(self.action[i][k])
    }

    pub fn rational_count(&self) -> usize {
        self.rational_mask.iter().filter(|&&r| r).count()
    }
}

fn check_hypothesis(g: &Subgroup) -> Result<()> {
    if !g.contains_minus_identity() || !g.has_full_det() {
        return Err(Error::Hypothesis);
    }
    Ok(())
}

pub fn cusp_set(g: &Subgroup) -> Result<CuspSet> {
    check_hypothesis(g)?;
    let n = g.modulus();
    let table = CosetTable::new(g, &gl2_elements(n));
    let u_gens = [Mat2::new(n, 1, 1, 0, 1), Mat2::minus_identity(n)];
    let orbits = table.orbits(&u_gens);

    let mut cusp_of = vec![0usize; table.len()];
    for (c, orbit) in orbits.iter().enumerate() {
        for &k in orbit {
            cusp_of[k] = c;
        }
    }
    let unit_list = units(n);
    let action: Vec<Vec<usize>> = unit_list
        .iter()
        .map(|&a| {
            let m = Mat2::new(n, 1, 0, 0, i64::from(a));
            orbits.iter().map(|orbit| cusp_of[table.act(orbit[0], &m)]).collect()
        })
        .collect();
    let rational_mask =
        (0..orbits.len()).map(|c| action.iter().all(|row| row[c] == c)).collect();
    let cusps =
        orbits.iter().map(|o| o.iter().map(|&k| table.reps[k]).collect()).collect();
    Ok(CuspSet {
        n,
        group_order: g.order(),
        cusps,
        action,
        units: unit_list,
        rational_mask,
    })
}

pub fn rational_cusp_count(g: &Subgroup) -> Result<usize> {
    Ok(cusp_set(g)?.rational_count())
}

/// Data entering the genus formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenusData {
    /// index of `G ∩ SL2` in SL2, which equals the index in PSL2 since -I is in G
    pub index: u64,
    pub elliptic2: u64,
    pub elliptic3: u64,
    pub cusps: u64,
    pub genus: u64,
}

pub fn genus_data(g: &Subgroup) -> Result<GenusData> {
    check_hypothesis(g)?;
    let n = g.modulus();
    let sl2: Vec<Mat2> = gl2_elements(n).into_iter().filter(|x| x.det() == 1).collect();
    let gamma_elems: Vec<Mat2> = g.elements().iter().copied().filter(|x| x.det() == 1).collect();
    let gamma = GammaView { n, elems: gamma_elems };
    let table = gamma.cosets(&sl2);

    let s = Mat2::new(n, 0, -1, 1, 0);
    let st = Mat2::new(n, 0, -1, 1, 1);
    let t = Mat2::new(n, 1, 1, 0, 1);
    let m = table.len() as u64;
    let e2 = (0..table.len()).filter(|&k| table.act(k, &s) == k).count() as u64;
    let e3 = (0..table.len()).filter(|&k| table.act(k, &st) == k).count() as u64;
    let cusps = table.orbits(&[t]).len() as u64;

    let twelve_g = 12 + m as i64 - 3 * e2 as i64 - 4 * e3 as i64 - 6 * cusps as i64;
    if twelve_g < 0 || twelve_g % 12 != 0 {
        return Err(Error::NonIntegralGenus { twelve_g });
    }
    Ok(GenusData { index: m, elliptic2: e2, elliptic3: e3, cusps, genus: (twelve_g / 12) as u64 })
}

pub fn genus(g: &Subgroup) -> Result<u64> {
    Ok(genus_data(g)?.genus)
}

/// `G ∩ SL2` as a bare element list, enough to build a coset table.
struct GammaView {
    n: Modulus,
    elems: Vec<Mat2>,
}

impl GammaView {
    fn cosets(&self, ambient: &[Mat2]) -> CosetTable {
        let mut id = vec![u32::MAX; (self.n as usize).pow(4)];
        let mut reps = Vec::new();
        for x in ambient {
            if id[x.code() as usize] != u32::MAX {
                continue;
            }
            let k = reps.len() as u32;
            reps.push(*x);
            for h in &self.elems {
                id[h.mul_unchecked(x).code() as usize] = k;
            }
        }
        CosetTable { n: self.n, id, reps }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subgroup::unit_generators;

    fn borel(n: Modulus) -> Subgroup {
        let mut gens = vec![Mat2::new(n, 1, 1, 0, 1), Mat2::minus_identity(n)];
        for u in unit_generators(n) {
            gens.push(Mat2::new(n, i64::from(u), 0, 0, 1));
            gens.push(Mat2::new(n, 1, 0, 0, i64::from(u)));
        }
        Subgroup::generate(&gens, n).unwrap()
    }

    #[test]
    fn full_group_has_one_cusp_and_genus_zero() {
        let g = Subgroup::gl2(9);
        let c = cusp_set(&g).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.rational_count(), 1);
        assert_eq!(genus(&g).unwrap(), 0);
    }

    #[test]
    fn x0_11() {
        let g = borel(11);
        assert_eq!(cusp_set(&g).unwrap().len(), 2);
        assert_eq!(rational_cusp_count(&g).unwrap(), 2);
        assert_eq!(genus(&g).unwrap(), 1);
    }

    #[test]
    fn x0_15_partition() {
        let g = borel(15);
        let c = cusp_set(&g).unwrap();
        assert_eq!(c.len(), 4);
        let total: u64 = (0..c.len()).map(|k| c.double_coset_size(k)).sum();
        assert_eq!(total, crate::modmat::gl2_order(15));
        assert_eq!(genus_data(&g).unwrap().cusps, 4);
    }

    #[test]
    fn hypothesis_is_enforced() {
        let g = Subgroup::trivial(5);
        assert!(matches!(cusp_set(&g), Err(Error::Hypothesis)));
        assert!(matches!(genus(&g), Err(Error::Hypothesis)));
    }
}
