//! 2x2 matrices over Z/nZ.
//!
//! Entries are always stored as least nonnegative residues so that equality,
//! ordering and hashing are bit-exact. Ordering is lexicographic on
//! `(a, b, c, d)` and is the canonical matrix order used for every
//! "first found" answer in the crate.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Modulus of the ambient ring Z/nZ.
pub type Modulus = u32;

/// A 2x2 matrix `[[a, b], [c, d]]` over Z/nZ.
///
/// Matrices act on column vectors: the first column is the image of the
/// first basis vector.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mat2 {
    n: Modulus,
    e: [u32; 4],
}

impl Mat2 {
    pub fn new(n: Modulus, a: i64, b: i64, c: i64, d: i64) -> Self {
        assert!(n >= 2, "modulus must be at least 2");
        let r = |x: i64| x.rem_euclid(i64::from(n)) as u32;
        Mat2 { n, e: [r(a), r(b), r(c), r(d)] }
    }

    pub fn from_entries(n: Modulus, e: [i64; 4]) -> Self {
        Self::new(n, e[0], e[1], e[2], e[3])
    }

    pub fn identity(n: Modulus) -> Self {
        Self::new(n, 1, 0, 0, 1)
    }

    pub fn scalar(n: Modulus, s: i64) -> Self {
        Self::new(n, s, 0, 0, s)
    }

    pub fn minus_identity(n: Modulus) -> Self {
        Self::scalar(n, -1)
    }

    pub fn modulus(&self) -> Modulus {
        self.n
    }

    pub fn entries(&self) -> [u32; 4] {
        self.e
    }

    pub fn a(&self) -> u32 {
        self.e[0]
    }
    pub fn b(&self) -> u32 {
        self.e[1]
    }
    pub fn c(&self) -> u32 {
        self.e[2]
    }
    pub fn d(&self) -> u32 {
        self.e[3]
    }

    /// Dense index in `0..n^4`, consistent with the canonical order.
    pub fn code(&self) -> u32 {
        let n = self.n;
        ((self.e[0] * n + self.e[1]) * n + self.e[2]) * n + self.e[3]
    }

    pub fn from_code(n: Modulus, code: u32) -> Self {
        let d = code % n;
        let c = (code / n) % n;
        let b = (code / n / n) % n;
        let a = code / n / n / n;
        Mat2 { n, e: [a, b, c, d] }
    }

    pub fn det(&self) -> u32 {
        let n = u64::from(self.n);
        let [a, b, c, d] = self.e.map(u64::from);
        ((a * d + n * n - (b * c) % n) % n) as u32
    }

    pub fn trace(&self) -> u32 {
        (self.e[0] + self.e[3]) % self.n
    }

    pub fn is_invertible(&self) -> bool {
        gcd(u64::from(self.det()), u64::from(self.n)) == 1
    }

    pub fn is_identity(&self) -> bool {
        self.e == [1, 0, 0, 1]
    }

    /// Product `self * rhs`.
    pub fn mul(&self, rhs: &Mat2) -> Result<Mat2> {
        if self.n != rhs.n {
            return Err(Error::ModulusMismatch { left: self.n, right: rhs.n });
        }
        Ok(self.mul_unchecked(rhs))
    }

    /// Product for callers that already know the moduli agree.
    #[inline]
    pub fn mul_unchecked(&self, rhs: &Mat2) -> Mat2 {
        debug_assert_eq!(self.n, rhs.n);
        let n = u64::from(self.n);
        let [a, b, c, d] = self.e.map(u64::from);
        let [e, f, g, h] = rhs.e.map(u64::from);
        Mat2 {
            n: self.n,
            e: [
                ((a * e + b * g) % n) as u32,
                ((a * f + b * h) % n) as u32,
                ((c * e + d * g) % n) as u32,
                ((c * f + d * h) % n) as u32,
            ],
        }
    }

    /// Inverse via the adjugate.
    pub fn inv(&self) -> Result<Mat2> {
        let det = self.det();
        let dinv = mod_inverse(u64::from(det), u64::from(self.n))
            .ok_or(Error::NonInvertible { matrix: self.to_string(), modulus: self.n })?
            as i64;
        let [a, b, c, d] = self.e.map(i64::from);
        Ok(Mat2::new(self.n, d * dinv, -b * dinv, -c * dinv, a * dinv))
    }

    /// `t * self * t^-1`.
    pub fn conjugate_by(&self, t: &Mat2, t_inv: &Mat2) -> Mat2 {
        t.mul_unchecked(self).mul_unchecked(t_inv)
    }

    /// Multiplicative order; `None` when not invertible.
    pub fn order(&self) -> Option<u64> {
        if !self.is_invertible() {
            return None;
        }
        let mut k = 1;
        let mut x = *self;
        while !x.is_identity() {
            x = x.mul_unchecked(self);
            k += 1;
        }
        Some(k)
    }

    /// Entrywise reduction modulo `m`, which must divide the modulus.
    pub fn reduce(&self, m: Modulus) -> Result<Mat2> {
        if m < 2 || self.n % m != 0 {
            return Err(Error::NotADivisor { divisor: m, modulus: self.n });
        }
        Ok(Mat2 { n: m, e: self.e.map(|x| x % m) })
    }

    /// Same residues read at a larger modulus `n2` (a multiple of ours).
    pub fn lift(&self, n2: Modulus) -> Result<Mat2> {
        if n2 % self.n != 0 {
            return Err(Error::NotADivisor { divisor: self.n, modulus: n2 });
        }
        Ok(Mat2 { n: n2, e: self.e })
    }

    /// All invertible matrices mod `n2` reducing to `self`.
    pub fn fiber(&self, n2: Modulus) -> Result<Vec<Mat2>> {
        if n2 % self.n != 0 {
            return Err(Error::NotADivisor { divisor: self.n, modulus: n2 });
        }
        let k = n2 / self.n;
        let mut out = Vec::with_capacity((k as usize).pow(4));
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    for m in 0..k {
                        let e = [
                            self.e[0] + i * self.n,
                            self.e[1] + j * self.n,
                            self.e[2] + l * self.n,
                            self.e[3] + m * self.n,
                        ];
                        let x = Mat2 { n: n2, e };
                        if x.is_invertible() {
                            out.push(x);
                        }
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Parses `[a,b,c,d]` at modulus `n`.
    pub fn parse(s: &str, n: Modulus) -> Result<Mat2> {
        let t = s.trim();
        let inner = t
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::Parse(format!("matrix must look like [a,b,c,d], got {t:?}")))?;
        let vals: Vec<i64> = inner
            .split(',')
            .map(|x| x.trim().parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("bad matrix entry in {t:?}: {e}")))?;
        if vals.len() != 4 {
            return Err(Error::Parse(format!("matrix needs 4 entries, got {}", vals.len())));
        }
        if n < 2 {
            return Err(Error::Parse(format!("modulus {n} is too small")));
        }
        Ok(Mat2::new(n, vals[0], vals[1], vals[2], vals[3]))
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.e;
        write!(f, "[{a},{b},{c},{d}]")
    }
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} mod {}", self.n)
    }
}

/// Matrix list in the `[a,b,c,d];[a,b,c,d]` form used on the command line.
pub fn parse_matrix_list(s: &str, n: Modulus) -> Result<Vec<Mat2>> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| Mat2::parse(t, n))
        .collect()
}

impl FromStr for Mat2 {
    type Err = Error;

    /// `[a,b,c,d] mod n`
    fn from_str(s: &str) -> Result<Self> {
        let (m, n) = s
            .split_once("mod")
            .ok_or_else(|| Error::Parse(format!("expected `[a,b,c,d] mod n`, got {s:?}")))?;
        let n: Modulus =
            n.trim().parse().map_err(|e| Error::Parse(format!("bad modulus in {s:?}: {e}")))?;
        Mat2::parse(m, n)
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn mod_inverse(a: u64, n: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i64 % n as i64, n as i64);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(n as i64) as u64)
}

/// Units of Z/nZ in increasing order.
pub fn units(n: Modulus) -> Vec<u32> {
    (1..n).filter(|&x| gcd(u64::from(x), u64::from(n)) == 1).collect()
}

/// Prime factors of `n`, increasing, without multiplicity.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Divisors of `n`, increasing.
pub fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n % d == 0).collect()
}

/// |GL2(Z/nZ)| = n^4 * prod_{p | n} (1 - 1/p)(1 - 1/p^2).
pub fn gl2_order(n: u64) -> u64 {
    let mut ord = n.pow(4);
    for p in prime_factors(n) {
        ord = ord / (p * p) * (p - 1) * (p * p - 1) / p;
    }
    ord
}

/// Every element of GL2(Z/nZ), in canonical order.
pub fn gl2_elements(n: Modulus) -> Vec<Mat2> {
    let total = n.pow(4);
    (0..total).map(|c| Mat2::from_code(n, c)).filter(Mat2::is_invertible).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_neutral() {
        let m = Mat2::new(27, 5, 7, 11, 2);
        assert_eq!(Mat2::identity(27).mul(&m).unwrap(), m);
    }

    #[test]
    fn antidiagonal_square_mod3() {
        let m = Mat2::new(3, 0, 2, 1, 0);
        assert_eq!(m.mul(&m).unwrap(), Mat2::new(3, 2, 0, 0, 2));
    }

    #[test]
    fn modulus_mismatch() {
        let x = Mat2::identity(3);
        let y = Mat2::identity(9);
        assert!(matches!(x.mul(&y), Err(Error::ModulusMismatch { .. })));
    }

    #[test]
    fn inverses() {
        assert_eq!(Mat2::identity(27).inv().unwrap(), Mat2::identity(27));
        assert_eq!(Mat2::new(3, 1, 1, 0, 1).inv().unwrap(), Mat2::new(3, 1, 2, 0, 1));
        assert!(matches!(Mat2::new(9, 0, 3, 1, 0).inv(), Err(Error::NonInvertible { .. })));
    }

    #[test]
    fn inverse_matches_brute_force_mod9() {
        for code in (0..9u32.pow(4)).step_by(37) {
            let m = Mat2::from_code(9, code);
            let brute = (0..9u32.pow(4))
                .map(|c| Mat2::from_code(9, c))
                .find(|y| m.mul_unchecked(y).is_identity());
            match m.inv() {
                Ok(inv) => assert_eq!(Some(inv), brute),
                Err(_) => assert_eq!(brute, None),
            }
        }
    }

    #[test]
    fn reduction() {
        let m = Mat2::new(27, 1, 9, 0, 1);
        assert_eq!(m.reduce(9).unwrap(), Mat2::identity(9));
        assert_eq!(m.reduce(27).unwrap(), m);
        assert!(m.reduce(5).is_err());
    }

    #[test]
    fn fibers() {
        assert_eq!(Mat2::identity(3).fiber(3).unwrap(), vec![Mat2::identity(3)]);
        let f = Mat2::identity(3).fiber(9).unwrap();
        assert_eq!(f.len(), 81);
        assert!(f.iter().all(Mat2::is_invertible));
        let total: usize =
            gl2_elements(3).iter().map(|x| x.fiber(9).unwrap().len()).sum();
        assert_eq!(total, 48 * 81);
        assert_eq!(total as u64, gl2_order(9));
    }

    #[test]
    fn group_orders() {
        assert_eq!(gl2_order(3), 48);
        assert_eq!(gl2_order(9), 3888);
        assert_eq!(gl2_order(27), 314_928);
        assert_eq!(gl2_elements(3).len(), 48);
        assert_eq!(gl2_elements(9).len(), 3888);
        assert_eq!(gl2_order(36), 96 * 3888);
    }

    #[test]
    fn parse_and_display() {
        let m = Mat2::parse(" [ 1, -1 ,30, 2] ", 27).unwrap();
        assert_eq!(m.to_string(), "[1,26,3,2]");
        let m2: Mat2 = "[1,26,3,2] mod 27".parse().unwrap();
        assert_eq!(m, m2);
        assert!(Mat2::parse("[1,2,3]", 27).is_err());
        assert_eq!(parse_matrix_list("[1,1,0,1];[2,0,0,1]", 3).unwrap().len(), 2);
    }

    #[test]
    fn code_roundtrip_preserves_order() {
        let mut v: Vec<Mat2> = (0..500).map(|c| Mat2::from_code(9, c * 13)).collect();
        let mut codes: Vec<u32> = v.iter().map(Mat2::code).collect();
        v.sort();
        codes.sort();
        assert_eq!(v.iter().map(Mat2::code).collect::<Vec<_>>(), codes);
    }
}
