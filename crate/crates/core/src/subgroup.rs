//! Subgroups of GL2(Z/nZ) given by generators.
//!
//! A [`Subgroup`] is built by closing a generator list under multiplication;
//! the full element list (sorted in canonical matrix order) and a membership
//! bitmap are computed at construction. Level is computed on first use.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::modmat::{divisors, gcd, gl2_elements, gl2_order, prime_factors, units, Mat2, Modulus};

/// Default ceiling on the number of elements a closure may produce.
pub const DEFAULT_ORDER_CAP: usize = 10_000_000;

pub struct Subgroup {
    n: Modulus,
    gens: Vec<Mat2>,
    elements: Vec<Mat2>,
    member: Vec<u64>,
    level: OnceLock<u64>,
}

impl Clone for Subgroup {
    fn clone(&self) -> Self {
        let level = OnceLock::new();
        if let Some(l) = self.level.get() {
            let _ = level.set(*l);
        }
        Subgroup {
            n: self.n,
            gens: self.gens.clone(),
            elements: self.elements.clone(),
            member: self.member.clone(),
            level,
        }
    }
}

impl fmt::Debug for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Subgroup")
            .field("n", &self.n)
            .field("order", &self.order())
            .field("gens", &self.gens)
            .finish()
    }
}

impl PartialEq for Subgroup {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.elements == other.elements
    }
}

impl Eq for Subgroup {}

/// A line in (Z/pZ)^2, normalized so its first nonzero coordinate is 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Line {
    pub p: u32,
    pub v: [u32; 2],
}

impl Line {
    pub fn new(p: u32, x: u32, y: u32) -> Option<Line> {
        let (x, y) = (x % p, y % p);
        if x == 0 && y == 0 {
            return None;
        }
        let lead = if x != 0 { x } else { y };
        let inv = crate::modmat::mod_inverse(u64::from(lead), u64::from(p))? as u32;
        Some(Line { p, v: [x * inv % p, y * inv % p] })
    }

    /// All p + 1 lines, in canonical order.
    pub fn all(p: u32) -> Vec<Line> {
        let mut out: Vec<Line> = (0..p).map(|y| Line { p, v: [1, y] }).collect();
        out.push(Line { p, v: [0, 1] });
        out.sort();
        out
    }

    /// Whether `m` (reduced mod p) maps this line to itself.
    pub fn is_stable_under(&self, m: &Mat2) -> bool {
        let p = self.p;
        let [a, b, c, d] = m.entries().map(|x| x % p);
        let [x, y] = self.v;
        let (u, w) = ((a * x + b * y) % p, (c * x + d * y) % p);
        // (u, w) parallel to (x, y)
        (u * y + p * p - w * x % p) % p == 0 && (u, w) != (0, 0)
    }

    pub fn parse(s: &str, p: u32) -> Result<Line> {
        let t = s.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
        let parts: Vec<i64> = t
            .split(',')
            .map(|x| x.trim().parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("bad line {s:?}: {e}")))?;
        if parts.len() != 2 {
            return Err(Error::Parse(format!("line needs two coordinates, got {s:?}")));
        }
        let r = |x: i64| x.rem_euclid(i64::from(p)) as u32;
        Line::new(p, r(parts[0]), r(parts[1]))
            .ok_or_else(|| Error::Parse(format!("zero vector does not span a line: {s:?}")))
    }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.v[0], self.v[1])
    }
}

impl Subgroup {
    /// Closure of `gens` in GL2(Z/nZ).
    pub fn generate(gens: &[Mat2], n: Modulus) -> Result<Subgroup> {
        Self::generate_with_cap(gens, n, DEFAULT_ORDER_CAP)
    }

    pub fn generate_with_cap(gens: &[Mat2], n: Modulus, cap: usize) -> Result<Subgroup> {
        for g in gens {
            if g.modulus() != n {
                return Err(Error::ModulusMismatch { left: g.modulus(), right: n });
            }
            if !g.is_invertible() {
                return Err(Error::NonInvertible { matrix: g.to_string(), modulus: n });
            }
        }
        let mut gens: Vec<Mat2> = gens.iter().copied().filter(|g| !g.is_identity()).collect();
        gens.sort();
        gens.dedup();

        let mut member = bitmap(n);
        let id = Mat2::identity(n);
        set_bit(&mut member, id.code());
        let mut elements = vec![id];
        let mut head = 0;
        while head < elements.len() {
            let x = elements[head];
            head += 1;
            for g in &gens {
                let y = x.mul_unchecked(g);
                if !get_bit(&member, y.code()) {
                    set_bit(&mut member, y.code());
                    elements.push(y);
                    if elements.len() > cap {
                        return Err(Error::OrderCap { cap });
                    }
                }
            }
        }
        elements.sort_unstable();
        Ok(Subgroup { n, gens, elements, member, level: OnceLock::new() })
    }

    /// Builds a subgroup from an element list already known to be a group.
    fn from_elements(n: Modulus, gens: Vec<Mat2>, mut elements: Vec<Mat2>) -> Subgroup {
        elements.sort_unstable();
        elements.dedup();
        let mut member = bitmap(n);
        for x in &elements {
            set_bit(&mut member, x.code());
        }
        Subgroup { n, gens, elements, member, level: OnceLock::new() }
    }

    /// The whole of GL2(Z/nZ).
    pub fn gl2(n: Modulus) -> Subgroup {
        let mut gens = vec![Mat2::new(n, 1, 1, 0, 1), Mat2::new(n, 1, 0, 1, 1)];
        gens.extend(unit_generators(n).into_iter().map(|u| Mat2::new(n, i64::from(u), 0, 0, 1)));
        let elements = gl2_elements(n);
        let g = Self::from_elements(n, gens, elements);
        let _ = g.level.set(1);
        g
    }

    pub fn trivial(n: Modulus) -> Subgroup {
        Self::from_elements(n, Vec::new(), vec![Mat2::identity(n)])
    }

    pub fn modulus(&self) -> Modulus {
        self.n
    }

    pub fn gens(&self) -> &[Mat2] {
        &self.gens
    }

    pub fn elements(&self) -> &[Mat2] {
        &self.elements
    }

    pub fn order(&self) -> u64 {
        self.elements.len() as u64
    }

    pub fn contains(&self, m: &Mat2) -> bool {
        m.modulus() == self.n && get_bit(&self.member, m.code())
    }

    pub fn is_subset_of(&self, other: &Subgroup) -> bool {
        self.n == other.n && self.gens.iter().all(|g| other.contains(g))
    }

    pub fn index_in_gl2(&self) -> u64 {
        gl2_order(u64::from(self.n)) / self.order()
    }

    pub fn contains_minus_identity(&self) -> bool {
        self.contains(&Mat2::minus_identity(self.n))
    }

    /// Whether det maps onto (Z/nZ)^x.
    pub fn has_full_det(&self) -> bool {
        let mut seen = vec![false; self.n as usize];
        for x in &self.elements {
            seen[x.det() as usize] = true;
        }
        units(self.n).into_iter().all(|u| seen[u as usize])
    }

    /// The group generated by this one and -I.
    pub fn with_minus_identity(&self) -> Subgroup {
        if self.contains_minus_identity() {
            return self.clone();
        }
        let mi = Mat2::minus_identity(self.n);
        let mut gens = self.gens.clone();
        gens.push(mi);
        gens.sort();
        let mut elements = self.elements.clone();
        elements.extend(self.elements.iter().map(|x| x.mul_unchecked(&mi)));
        Self::from_elements(self.n, gens, elements)
    }

    /// Image under reduction mod `m`.
    pub fn reduce(&self, m: Modulus) -> Result<Subgroup> {
        if m == self.n {
            return Ok(self.clone());
        }
        let gens =
            self.gens.iter().map(|g| g.reduce(m)).collect::<Result<Vec<_>>>()?;
        Subgroup::generate(&gens, m)
    }

    /// Full preimage in GL2(Z/n2Z) of this group under reduction.
    pub fn full_preimage(&self, n2: Modulus) -> Result<Subgroup> {
        if n2 % self.n != 0 {
            return Err(Error::NotADivisor { divisor: self.n, modulus: n2 });
        }
        if n2 == self.n {
            return Ok(self.clone());
        }
        let kernel = Mat2::identity(self.n).fiber(n2)?;
        let size = kernel.len() as u128 * self.elements.len() as u128;
        if size > DEFAULT_ORDER_CAP as u128 {
            return Err(Error::OrderCap { cap: DEFAULT_ORDER_CAP });
        }
        let mut elements = Vec::with_capacity(size as usize);
        for x in &self.elements {
            elements.extend(x.fiber(n2)?);
        }
        let gens = self.preimage_generators(n2)?;
        let g = Self::from_elements(n2, gens, elements);
        if let Some(l) = self.level.get() {
            let _ = g.level.set(*l);
        }
        Ok(g)
    }

    /// A generating set of the full preimage mod `n2` without building it.
    ///
    /// Valid when every prime dividing `n2` already divides the modulus, so
    /// the reduction kernel is generated by the elementary lifts `I + n E_ij`.
    pub fn preimage_generators(&self, n2: Modulus) -> Result<Vec<Mat2>> {
        if n2 % self.n != 0 {
            return Err(Error::NotADivisor { divisor: self.n, modulus: n2 });
        }
        let mut gens: Vec<Mat2> =
            self.gens.iter().map(|g| g.lift(n2)).collect::<Result<Vec<_>>>()?;
        if n2 == self.n {
            return Ok(gens);
        }
        let same_primes = prime_factors(u64::from(n2)) == prime_factors(u64::from(self.n));
        if same_primes {
            let m = i64::from(self.n);
            gens.push(Mat2::new(n2, 1 + m, 0, 0, 1));
            gens.push(Mat2::new(n2, 1, m, 0, 1));
            gens.push(Mat2::new(n2, 1, 0, m, 1));
            gens.push(Mat2::new(n2, 1, 0, 0, 1 + m));
        } else {
            gens.extend(Mat2::identity(self.n).fiber(n2)?.into_iter().filter(|x| !x.is_identity()));
        }
        gens.sort();
        gens.dedup();
        Ok(gens)
    }

    /// Smallest divisor `m` of the modulus with the group equal to the full
    /// preimage of its image mod `m`. Level 1 means the whole group.
    pub fn level(&self) -> u64 {
        *self.level.get_or_init(|| {
            let n = u64::from(self.n);
            let full = gl2_order(n);
            if self.order() == full {
                return 1;
            }
            for m in divisors(n).into_iter().skip(1) {
                if m == n {
                    return n;
                }
                let red = self.reduce(m as Modulus).expect("divisor");
                if red.order() * (full / gl2_order(m)) == self.order() {
                    return m;
                }
            }
            n
        })
    }

    /// `t * G * t^-1`.
    pub fn conjugate(&self, t: &Mat2) -> Result<Subgroup> {
        if t.modulus() != self.n {
            return Err(Error::ModulusMismatch { left: t.modulus(), right: self.n });
        }
        let ti = t.inv()?;
        let mut gens: Vec<Mat2> = self.gens.iter().map(|g| g.conjugate_by(t, &ti)).collect();
        gens.sort();
        let elements = self.elements.iter().map(|g| g.conjugate_by(t, &ti)).collect();
        let g = Self::from_elements(self.n, gens, elements);
        if let Some(l) = self.level.get() {
            let _ = g.level.set(*l);
        }
        Ok(g)
    }

    /// Counts of `(trace, det)` pairs over the elements; a conjugacy invariant.
    pub fn class_fingerprint(&self) -> BTreeMap<(u32, u32), u64> {
        let mut out = BTreeMap::new();
        for x in &self.elements {
            *out.entry((x.trace(), x.det())).or_insert(0) += 1;
        }
        out
    }

    /// Lines in (Z/pZ)^2 fixed (as sets) by the image mod p.
    pub fn stable_lines(&self, p: u32) -> Result<Vec<Line>> {
        if p < 2 || self.n % p != 0 {
            return Err(Error::NotADivisor { divisor: p, modulus: self.n });
        }
        Ok(Line::all(p)
            .into_iter()
            .filter(|l| self.gens.iter().all(|g| l.is_stable_under(g)))
            .collect())
    }

    /// Whether some vector of exact order `m` in (Z/mZ)^2 is fixed by every
    /// element of the image mod `m`.
    pub fn fixes_vector_of_order(&self, m: Modulus) -> Result<bool> {
        if m < 2 || self.n % m != 0 {
            return Err(Error::NotADivisor { divisor: m, modulus: self.n });
        }
        let red: Vec<Mat2> = self.gens.iter().map(|g| g.reduce(m)).collect::<Result<_>>()?;
        for x in 0..m {
            for y in 0..m {
                if gcd(gcd(u64::from(x), u64::from(y)), u64::from(m)) != 1 {
                    continue;
                }
                let fixed = red.iter().all(|g| {
                    let [a, b, c, d] = g.entries();
                    (a * x + b * y) % m == x && (c * x + d * y) % m == y
                });
                if fixed {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
}

/// A `t` with `t g t^-1 = h`, canonically first at the working level.
pub fn is_conjugate(g: &Subgroup, h: &Subgroup) -> Option<Mat2> {
    if g.n != h.n || g.order() != h.order() {
        return None;
    }
    if g == h {
        return Some(Mat2::identity(g.n));
    }
    if g.level() != h.level() || g.class_fingerprint() != h.class_fingerprint() {
        return None;
    }
    let level = g.level();
    if level == 1 {
        return Some(Mat2::identity(g.n));
    }
    // Both are full preimages at `level`, so conjugacy can be decided there.
    let work = working_modulus(g.n, level);
    let (gw, hw) = if work == g.n {
        (g.clone(), h.clone())
    } else {
        (g.reduce(work).ok()?, h.reduce(work).ok()?)
    };
    let t = search_conjugator(&gw, &hw)?;
    t.lift(g.n).ok()
}

/// Whether some conjugate of `g` lies inside `h`.
pub fn is_conjugate_into(g: &Subgroup, h: &Subgroup) -> bool {
    conjugator_into(g, h).is_some()
}

/// A `t` with `t g t^-1` contained in `h`, when one exists.
pub fn conjugator_into(g: &Subgroup, h: &Subgroup) -> Option<Mat2> {
    if g.n != h.n || h.order() % g.order() != 0 {
        return None;
    }
    let level = h.level();
    if level == 1 {
        return Some(Mat2::identity(g.n));
    }
    let work = working_modulus(h.n, level);
    let (gw, hw) = if work == h.n {
        (g.clone(), h.clone())
    } else {
        (g.reduce(work).ok()?, h.reduce(work).ok()?)
    };
    let t = search_conjugator(&gw, &hw)?;
    t.lift(g.n).ok()
}

/// Level-sized modulus sharing the prime support of `n`.
fn working_modulus(n: Modulus, level: u64) -> Modulus {
    let mut m = level as Modulus;
    if m < 2 {
        return n;
    }
    // Reduction to `m` must keep every prime of `n` so lifts stay invertible.
    while prime_factors(u64::from(m)) != prime_factors(u64::from(n)) {
        let extra = prime_factors(u64::from(n))
            .into_iter()
            .find(|p| m as u64 % p != 0)
            .expect("missing prime");
        m *= extra as Modulus;
    }
    m
}

/// Canonically first `t` in GL2(Z/nZ) with `t g t^-1` inside `h`.
fn search_conjugator(g: &Subgroup, h: &Subgroup) -> Option<Mat2> {
    let n = g.n;
    let gens = g.gens();
    if gens.is_empty() {
        return Some(Mat2::identity(n));
    }
    // Pre-filter by the first generator: its conjugate must be an element of
    // h with the same trace, determinant and order.
    let first = gens[0];
    let first_order = first.order();
    let targets: Vec<u32> = h
        .elements()
        .iter()
        .filter(|x| x.trace() == first.trace() && x.det() == first.det())
        .filter(|x| x.order() == first_order)
        .map(Mat2::code)
        .collect();
    if targets.is_empty() {
        return None;
    }
    let mut target_bits = bitmap(n);
    for c in &targets {
        set_bit(&mut target_bits, *c);
    }
    let total = n.pow(4);
    for code in 0..total {
        let t = Mat2::from_code(n, code);
        if !t.is_invertible() {
            continue;
        }
        let ti = t.inv().expect("invertible");
        if !get_bit(&target_bits, first.conjugate_by(&t, &ti).code()) {
            continue;
        }
        if gens[1..].iter().all(|x| h.contains(&x.conjugate_by(&t, &ti))) {
            return Some(t);
        }
    }
    None
}

/// A small generating set of (Z/nZ)^x, chosen greedily in increasing order.
pub fn unit_generators(n: Modulus) -> Vec<u32> {
    let mut gens = Vec::new();
    let mut reached = vec![false; n as usize];
    reached[1 % n as usize] = true;
    let mut elems = vec![1 % n];
    for u in units(n) {
        if reached[u as usize] {
            continue;
        }
        gens.push(u);
        // re-close
        let mut head = 0;
        elems.push(u);
        reached[u as usize] = true;
        while head < elems.len() {
            let x = elems[head];
            head += 1;
            for &g in &gens {
                let y = (u64::from(x) * u64::from(g) % u64::from(n)) as u32;
                if !reached[y as usize] {
                    reached[y as usize] = true;
                    elems.push(y);
                }
            }
        }
    }
    gens
}

fn bitmap(n: Modulus) -> Vec<u64> {
    let bits = (n as usize).pow(4);
    vec![0; bits.div_ceil(64)]
}

#[inline]
fn set_bit(b: &mut [u64], i: u32) {
    b[(i / 64) as usize] |= 1 << (i % 64);
}

#[inline]
fn get_bit(b: &[u64], i: u32) -> bool {
    b[(i / 64) as usize] >> (i % 64) & 1 == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn borel(n: Modulus) -> Subgroup {
        let mut gens = vec![Mat2::new(n, 1, 1, 0, 1)];
        for u in unit_generators(n) {
            gens.push(Mat2::new(n, i64::from(u), 0, 0, 1));
            gens.push(Mat2::new(n, 1, 0, 0, i64::from(u)));
        }
        Subgroup::generate(&gens, n).unwrap()
    }

    #[test]
    fn closure_orders() {
        assert_eq!(Subgroup::generate(&[Mat2::identity(27)], 27).unwrap().order(), 1);
        let b = borel(3);
        assert_eq!(b.order(), 12);
        assert_eq!(b.index_in_gl2(), 4);
        let full = Subgroup::generate(Subgroup::gl2(3).gens(), 3).unwrap();
        assert_eq!(full.order(), 48);
    }

    #[test]
    fn closure_rejects_bad_input() {
        assert!(Subgroup::generate(&[Mat2::new(9, 3, 0, 0, 1)], 9).is_err());
        assert!(matches!(
            Subgroup::generate_with_cap(Subgroup::gl2(9).gens(), 9, 100),
            Err(Error::OrderCap { .. })
        ));
    }

    #[test]
    fn minus_identity_and_det() {
        let full = Subgroup::gl2(3);
        assert!(full.contains_minus_identity() && full.has_full_det());
        let t = Subgroup::trivial(3);
        assert!(!t.contains_minus_identity() && !t.has_full_det());
    }

    #[test]
    fn levels() {
        assert_eq!(Subgroup::gl2(27).level(), 1);
        let pre = borel(3).full_preimage(9).unwrap();
        assert_eq!(pre.order(), 12 * 81);
        assert_eq!(pre.level(), 3);
        assert_eq!(borel(9).level(), 9);
        assert_eq!(Subgroup::trivial(3).full_preimage(9).unwrap().order(), 81);
        assert_eq!(Subgroup::gl2(3).full_preimage(27).unwrap().order(), gl2_order(27));
    }

    #[test]
    fn preimage_generators_generate_preimage() {
        let b = borel(3);
        let gens = b.preimage_generators(27).unwrap();
        let g = Subgroup::generate(&gens, 27).unwrap();
        assert_eq!(g, b.full_preimage(27).unwrap());
    }

    #[test]
    fn conjugacy() {
        let b = borel(9);
        let t = Mat2::new(9, 2, 5, 1, 6);
        let c = b.conjugate(&t).unwrap();
        let found = is_conjugate(&b, &c).unwrap();
        assert_eq!(b.conjugate(&found).unwrap(), c);
        assert!(is_conjugate(&b, &Subgroup::gl2(9)).is_none());
        assert!(is_conjugate_into(&Subgroup::trivial(9), &b));
        assert!(!is_conjugate_into(&Subgroup::gl2(9), &b));
    }

    #[test]
    fn lines() {
        assert_eq!(Line::all(3).len(), 4);
        assert!(Subgroup::gl2(3).stable_lines(3).unwrap().is_empty());
        assert_eq!(borel(3).stable_lines(3).unwrap(), vec![Line { p: 3, v: [1, 0] }]);
        let diag = Subgroup::generate(
            &[Mat2::new(3, 2, 0, 0, 1), Mat2::new(3, 1, 0, 0, 2)],
            3,
        )
        .unwrap();
        assert_eq!(diag.stable_lines(3).unwrap().len(), 2);
    }

    #[test]
    fn fixed_vectors() {
        assert!(!Subgroup::gl2(3).fixes_vector_of_order(3).unwrap());
        let x1 = Subgroup::generate(&[Mat2::new(9, 1, 1, 0, 1), Mat2::new(9, 1, 0, 0, 2)], 9)
            .unwrap();
        assert!(x1.fixes_vector_of_order(9).unwrap());
        assert!(x1.fixes_vector_of_order(3).unwrap());
    }

    #[test]
    fn unit_group_generators() {
        assert_eq!(unit_generators(27), vec![2]);
        assert_eq!(unit_generators(15).len(), 2);
    }
}
