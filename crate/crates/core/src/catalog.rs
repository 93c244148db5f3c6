//! Labeled subgroups and identification by conjugacy.
//!
//! Catalog files are line oriented: `label; modulus; [a,b,c,d] [a,b,c,d] ...`
//! with `#` starting a comment. Labels of the form `N.i.g.n` have their level
//! and index digits checked on load; other labels (the auxiliary `X0(N)`
//! groups) are only checked for full determinant.
//!
//! Some labeled groups do not contain `-I`: they are images that are not
//! determined by the modular curve alone. For those the index digit is the
//! index of the group itself and the genus digit is the genus of the curve of
//! `<G, -I>`.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use crate::cusps;
use crate::error::{Error, Result};
use crate::modmat::{parse_matrix_list, Mat2, Modulus};
use crate::subgroup::{is_conjugate, Subgroup};

pub const CATALOG_3ADIC: &str = include_str!("../data/catalog_3adic.txt");
pub const CATALOG_AUX: &str = include_str!("../data/catalog_aux.txt");

/// Label of the full group GL2(Z_3).
pub const FULL_LABEL: &str = "1.1.0.1";

/// The digits of an `N.i.g.n` label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub level: u64,
    pub index: u64,
    pub genus: u64,
    pub tiebreak: u64,
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Label> {
        let parts: Vec<&str> = s.trim().split('.').collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!("label {s:?} is not of the form N.i.g.n")));
        }
        let mut digits = [0u64; 4];
        for (slot, part) in digits.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|_| Error::Parse(format!("label {s:?}: bad component {part:?}")))?;
        }
        let [level, index, genus, tiebreak] = digits;
        Ok(Label { level, index, genus, tiebreak })
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}.{}", self.level, self.index, self.genus, self.tiebreak)
    }
}

/// Orders label strings numerically when both parse, else lexically.
pub fn label_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<Label>(), b.parse::<Label>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    label: String,
    gens: Vec<Mat2>,
    group: Subgroup,
}

impl CatalogEntry {
    pub fn new(label: &str, n: Modulus, gens: Vec<Mat2>) -> Result<CatalogEntry> {
        let group = Subgroup::generate(&gens, n)?;
        Ok(CatalogEntry { label: label.to_string(), gens, group })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn parsed_label(&self) -> Option<Label> {
        self.label.parse().ok()
    }

    pub fn modulus(&self) -> Modulus {
        self.group.modulus()
    }

    pub fn gens(&self) -> &[Mat2] {
        &self.gens
    }

    pub fn group(&self) -> &Subgroup {
        &self.group
    }

    /// Load-time checks: full determinant, and level and index digits.
    fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::Catalog { label: self.label.clone(), reason };
        if !self.group.has_full_det() {
            return Err(fail("determinant is not surjective".into()));
        }
        if let Some(l) = self.parsed_label() {
            let level = self.group.level();
            if level != l.level {
                return Err(fail(format!("level digit {} but computed level {level}", l.level)));
            }
            let index = self.group.index_in_gl2();
            if index != l.index {
                return Err(fail(format!("index digit {} but computed index {index}", l.index)));
            }
        }
        Ok(())
    }

    /// The group used for cusps and genus: `<G, -I>`.
    pub fn curve_group(&self) -> Subgroup {
        self.group.with_minus_identity()
    }

    /// Line in the catalog file format.
    pub fn to_line(&self) -> String {
        let gens: Vec<String> = self.gens.iter().map(Mat2::to_string).collect();
        format!("{}; {}; {}", self.label, self.modulus(), gens.join(" "))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    entries: Vec<CatalogEntry>,
    by_label: HashMap<String, usize>,
}

impl Catalog {
    pub fn from_entries(entries: Vec<CatalogEntry>) -> Result<Catalog> {
        let mut by_label = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if by_label.insert(e.label.clone(), i).is_some() {
                return Err(Error::Catalog {
                    label: e.label.clone(),
                    reason: "duplicate label".into(),
                });
            }
        }
        Ok(Catalog { entries, by_label })
    }

    /// The shipped 3-adic catalog.
    pub fn shipped() -> Result<Catalog> {
        parse_catalog(CATALOG_3ADIC)
    }

    /// Auxiliary Borel groups at levels prime to 3 or mixed.
    pub fn auxiliary() -> Result<Catalog> {
        parse_catalog(CATALOG_AUX)
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&CatalogEntry> {
        self.by_label.get(label.trim()).map(|&i| &self.entries[i])
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.label.as_str())
    }

    /// The label whose group is conjugate to `g`, after moving `g` to the
    /// entry's modulus. Groups whose level does not divide an entry's modulus
    /// never match it.
    pub fn identify(&self, g: &Subgroup) -> Result<Option<String>> {
        let mut found = Vec::new();
        let mut moved: HashMap<Modulus, Option<Subgroup>> = HashMap::new();
        for e in &self.entries {
            let m = e.modulus();
            let h = moved.entry(m).or_insert_with(|| at_modulus(g, m)).as_ref();
            let Some(h) = h else { continue };
            if h.order() != e.group.order() {
                continue;
            }
            if is_conjugate(h, &e.group).is_some() {
                found.push(e.label.clone());
            }
        }
        match found.len() {
            0 => Ok(None),
            1 => Ok(found.pop()),
            _ => Err(Error::AmbiguousIdentification(found)),
        }
    }
}

/// `g` as a subgroup mod `m`, when its level allows it.
pub fn at_modulus(g: &Subgroup, m: Modulus) -> Option<Subgroup> {
    let n = g.modulus();
    if n == m {
        Some(g.clone())
    } else if m % n == 0 {
        g.full_preimage(m).ok()
    } else if n % m == 0 && u64::from(m) % g.level() == 0 {
        g.reduce(m).ok()
    } else {
        None
    }
}

pub fn load_catalog<R: Read>(mut source: R) -> Result<Catalog> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    parse_catalog(&text)
}

pub fn parse_catalog(text: &str) -> Result<Catalog> {
    let mut entries = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(';').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!(
                "catalog line {}: expected `label; modulus; generators`",
                no + 1
            )));
        }
        let n: Modulus = fields[1]
            .parse()
            .map_err(|_| Error::Parse(format!("catalog line {}: bad modulus", no + 1)))?;
        if n < 2 {
            return Err(Error::Parse(format!("catalog line {}: modulus must be >= 2", no + 1)));
        }
        let gens = parse_generators(fields[2], n)?;
        let entry = CatalogEntry::new(fields[0], n, gens)?;
        entry.validate()?;
        entries.push(entry);
    }
    Catalog::from_entries(entries)
}

/// Whitespace or `;` separated `[a,b,c,d]` tokens.
fn parse_generators(s: &str, n: Modulus) -> Result<Vec<Mat2>> {
    let joined: Vec<&str> = s
        .split(']')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .collect();
    let list = joined.iter().map(|t| format!("{t}]")).collect::<Vec<_>>().join(";");
    if list.is_empty() {
        return Ok(Vec::new());
    }
    parse_matrix_list(&list, n)
}

/// Computed invariants of an entry against its label digits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryReport {
    pub label: String,
    pub level: u64,
    pub index: u64,
    pub genus: u64,
    pub has_minus_identity: bool,
    pub full_det: bool,
    pub level_ok: bool,
    pub index_ok: bool,
    pub genus_ok: bool,
}

impl EntryReport {
    pub fn ok(&self) -> bool {
        self.level_ok && self.index_ok && self.genus_ok && self.full_det
    }
}

impl fmt::Display for EntryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |ok: bool| if ok { "ok" } else { "MISMATCH" };
        write!(
            f,
            "{}: level {} {}, index {} {}, genus {} {}, -I {}, det {}",
            self.label,
            self.level,
            mark(self.level_ok),
            self.index,
            mark(self.index_ok),
            self.genus,
            mark(self.genus_ok),
            if self.has_minus_identity { "yes" } else { "no" },
            if self.full_det { "full" } else { "NOT FULL" },
        )
    }
}

pub fn verify_entry(e: &CatalogEntry) -> Result<EntryReport> {
    let g = e.group();
    let level = g.level();
    let index = g.index_in_gl2();
    let full_det = g.has_full_det();
    let genus = if full_det { cusps::genus(&e.curve_group())? } else { 0 };
    let digits = e.parsed_label();
    Ok(EntryReport {
        label: e.label.clone(),
        level,
        index,
        genus,
        has_minus_identity: g.contains_minus_identity(),
        full_det,
        level_ok: digits.map_or(true, |l| l.level == level),
        index_ok: digits.map_or(true, |l| l.index == index),
        genus_ok: digits.map_or(true, |l| l.genus == genus),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_parsing_and_order() {
        let l: Label = "27.243.12.1".parse().unwrap();
        assert_eq!((l.level, l.index, l.genus, l.tiebreak), (27, 243, 12, 1));
        assert_eq!(l.to_string(), "27.243.12.1");
        assert!("3.4.0".parse::<Label>().is_err());
        assert!("3.x.0.1".parse::<Label>().is_err());
        assert_eq!(label_cmp("9.72.0.10", "9.72.0.9"), std::cmp::Ordering::Greater);
        assert_eq!(label_cmp("3.8.0.2", "27.36.0.1"), std::cmp::Ordering::Less);
    }

    #[test]
    fn empty_catalog_is_valid() {
        assert!(parse_catalog("").unwrap().is_empty());
        assert!(parse_catalog("# only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn wrong_level_digit_is_rejected() {
        let text = "3.4.0.1; 27; [1,1,0,1] [0,26,1,0] [2,0,0,1]";
        match parse_catalog(text) {
            Err(Error::Catalog { label, reason }) => {
                assert_eq!(label, "3.4.0.1");
                assert!(reason.contains("level"), "{reason}");
            }
            other => panic!("expected level violation, got {other:?}"),
        }
    }

    #[test]
    fn partial_det_is_rejected() {
        assert!(matches!(parse_catalog("x; 3; [1,1,0,1]"), Err(Error::Catalog { .. })));
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        let text = "1.1.0.1; 3; [1,1,0,1] [0,2,1,0] [2,0,0,1]\n1.1.0.1; 3; [1,1,0,1] [0,2,1,0] [2,0,0,1]";
        assert!(matches!(parse_catalog(text), Err(Error::Catalog { .. })));
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(parse_catalog("3.4.0.1; 27"), Err(Error::Parse(_))));
        assert!(matches!(parse_catalog("3.4.0.1; x; [1,0,0,1]"), Err(Error::Parse(_))));
        assert!(matches!(parse_catalog("3.4.0.1; 27; [1,0,0]"), Err(Error::Parse(_))));
    }

    #[test]
    fn generator_tokens() {
        let g = parse_generators(" [1,1,0,1]  [2, 0, 0, 1]", 3).unwrap();
        assert_eq!(g, vec![Mat2::new(3, 1, 1, 0, 1), Mat2::new(3, 2, 0, 0, 1)]);
    }

    #[test]
    fn round_trip_line() {
        let c = parse_catalog("3.4.0.1; 3; [1,1,0,1] [2,0,0,1] [1,0,0,2]").unwrap();
        let e = c.get("3.4.0.1").unwrap();
        let again = parse_catalog(&e.to_line()).unwrap();
        assert_eq!(again.get("3.4.0.1").unwrap().group(), e.group());
    }
}
