//! Checks of printed claims against computation, shared by the CLI and the
//! acceptance suite. Each check carries the claim it tests.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::catalog::{verify_entry, Catalog};
use crate::classifier::{borel, torsion_label_set};
use crate::cusps::{genus_data, rational_cusp_count};
use crate::error::{Error, Result};
use crate::subgroup::is_conjugate_into;
use crate::transform::{parse_table, regenerate_table, RowCheck, IMAGE_MODULUS, TABLE1};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub citation: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>, citation: &str) -> Check {
        Check { name: name.into(), pass, detail: detail.into(), citation: citation.to_string() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "pass" } else { "FAIL" };
        write!(f, "[{status}] {}: {}", self.name, self.detail)?;
        if !self.citation.is_empty() {
            write!(f, " ({})", self.citation)?;
        }
        Ok(())
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// Images without a rational 3-isogeny, besides the full group.
pub const NO_ISOGENY_LABELS: &[&str] =
    &["3.3.0.1", "3.6.0.1", "9.9.0.1", "9.18.0.1", "9.18.0.2", "9.27.0.1", "9.27.0.2", "27.243.12.1"];

/// Images with a rational 3-isogeny.
pub fn isogeny_labels() -> Vec<String> {
    let mut out: Vec<String> = ["3.4.0.1", "3.8.0.1", "3.8.0.2", "3.12.0.1", "3.24.0.1", "9.12.0.1", "9.12.0.2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    out.extend((1..=4).map(|t| format!("9.24.0.{t}")));
    out.extend((1..=9).map(|t| format!("9.36.0.{t}")));
    out.extend((1..=16).map(|t| format!("9.72.0.{t}")));
    out.extend(["27.36.0.1", "27.72.0.1", "27.72.0.2"].map(String::from));
    out
}

/// Printed list of images forcing a rational point of order 3.
pub const PRINTED_THREE_TORSION: &[&str] = &[
    "3.8.0.1", "3.24.0.1", "9.24.0.1", "9.24.0.2", "9.72.0.1", "9.72.0.2", "9.72.0.3", "9.72.0.4", "9.72.0.5",
    "9.72.0.6", "9.72.0.7", "9.72.0.8", "9.72.0.9", "9.72.0.10", "27.72.0.1",
];

pub const PRINTED_NINE_TORSION: &[&str] = &["9.72.0.5"];

/// Printed list of the subgroups of 9.12.0.1 among images with a 3-isogeny.
pub const PRINTED_BOREL9: &[&str] = &[
    "9.12.0.1", "9.24.0.1", "9.24.0.3", "9.36.0.4", "9.72.0.5", "9.72.0.11", "9.36.0.5", "9.72.0.6", "9.72.0.12",
    "9.36.0.6", "9.72.0.7", "9.72.0.13", "27.36.0.1", "27.72.0.1", "27.72.0.2",
];

/// `(group, container)` pairs printed as containments.
pub const PRINTED_CONTAINMENTS: &[(&str, &str)] = &[
    ("3.6.0.1", "3.3.0.1"),
    ("9.9.0.1", "3.3.0.1"),
    ("9.18.0.1", "3.3.0.1"),
    ("9.18.0.2", "9.9.0.1"),
    ("9.27.0.2", "3.3.0.1"),
    ("3.12.0.1", "3.3.0.1"),
    ("9.36.0.7", "9.12.0.2"),
    ("9.36.0.8", "9.12.0.2"),
    ("9.36.0.9", "9.12.0.2"),
];

/// Printed rational cusp counts and genera of `X0(N)`.
pub const PRINTED_X0: &[(&str, usize, u64)] =
    &[("X0(15)", 4, 1), ("X0(11)", 2, 1), ("X0(17)", 2, 1), ("X0(21)", 4, 1), ("X0(36)", 6, 1)];

fn group<'a>(cat: &'a Catalog, label: &str) -> Result<&'a crate::subgroup::Subgroup> {
    cat.get(label).map(|e| e.group()).ok_or_else(|| Error::UnknownLabel(label.to_string()))
}

fn set_detail(computed: &BTreeSet<String>, printed: &BTreeSet<String>) -> String {
    if computed == printed {
        format!("{} label{}, equal", computed.len(), if computed.len() == 1 { "" } else { "s" })
    } else {
        let extra: Vec<_> = computed.difference(printed).cloned().collect();
        let missing: Vec<_> = printed.difference(computed).cloned().collect();
        format!("computed extra {extra:?}, computed missing {missing:?}")
    }
}

/// Level, index and genus digits of every label.
pub fn verify_catalog(cat: &Catalog) -> Result<Vec<Check>> {
    cat.entries()
        .iter()
        .map(|e| {
            let r = verify_entry(e)?;
            Ok(Check::new(e.label(), r.ok(), r.to_string(), "label digits"))
        })
        .collect()
}

/// Rational cusps and genus of the auxiliary `X0(N)`.
pub fn verify_auxiliary(aux: &Catalog) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &(label, cusps, genus) in PRINTED_X0 {
        let g = group(aux, label)?;
        let rational = rational_cusp_count(g)?;
        let gd = genus_data(g)?;
        out.push(Check::new(
            label,
            rational == cusps && gd.genus == genus,
            format!("{} cusps, {rational} rational (printed {cusps}), genus {} (printed {genus})", gd.cusps, gd.genus),
            "proof texts on X0(N)",
        ));
    }
    Ok(out)
}

/// Every printed transform row, plus a summary line.
pub fn verify_table1(cat: &Catalog) -> Result<(Vec<RowCheck>, Check)> {
    let rows = parse_table(TABLE1)?;
    let checks = regenerate_table(cat, &rows)?;
    let ok = checks.iter().filter(|c| c.reproduced).count();
    let summary =
        Check::new("table", ok == checks.len(), format!("{ok}/{} rows reproduced", checks.len()), "transform table");
    Ok((checks, summary))
}

/// Torsion sets and containment claims.
pub fn verify_lemmas(cat: &Catalog) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let printed: BTreeSet<String> = PRINTED_THREE_TORSION.iter().map(|s| s.to_string()).collect();
    let computed = torsion_label_set(cat, 3)?;
    out.push(Check::new("three-torsion set", computed == printed, set_detail(&computed, &printed), "order 3 point iff fixed vector mod 3"));
    let printed: BTreeSet<String> = PRINTED_NINE_TORSION.iter().map(|s| s.to_string()).collect();
    let computed = torsion_label_set(cat, 9)?;
    out.push(Check::new("nine-torsion set", computed == printed, set_detail(&computed, &printed), "order 9 point iff fixed vector mod 9"));

    for &(g, h) in PRINTED_CONTAINMENTS {
        let ok = is_conjugate_into(group(cat, g)?, group(cat, h)?);
        out.push(Check::new(format!("{g} in {h}"), ok, ok.to_string(), "printed containment"));
    }

    let b3 = borel(3).full_preimage(IMAGE_MODULUS)?;
    let mut bad = Vec::new();
    for l in isogeny_labels() {
        if !is_conjugate_into(group(cat, &l)?, &b3) {
            bad.push(l);
        }
    }
    for &l in NO_ISOGENY_LABELS {
        if is_conjugate_into(group(cat, l)?, &b3) {
            bad.push(l.to_string());
        }
    }
    out.push(Check::new(
        "Borel mod 3",
        bad.is_empty(),
        if bad.is_empty() {
            "images with a 3-isogeny lie in the Borel mod 3, the others do not".to_string()
        } else {
            format!("wrong for {bad:?}")
        },
        "conjugate to a subgroup of upper triangular matrices",
    ));

    let b9 = borel(9).full_preimage(IMAGE_MODULUS)?;
    let printed: BTreeSet<String> = PRINTED_BOREL9.iter().map(|s| s.to_string()).collect();
    let mut computed = BTreeSet::new();
    for l in isogeny_labels() {
        if is_conjugate_into(group(cat, &l)?, &b9) {
            computed.insert(l);
        }
    }
    out.push(Check::new("subgroups of 9.12.0.1", computed == printed, set_detail(&computed, &printed), "cyclic 9-isogeny iff Borel mod 9"));

    let mut outside = Vec::new();
    for &l in NO_ISOGENY_LABELS {
        let g = group(cat, l)?;
        if !is_conjugate_into(g, group(cat, "3.3.0.1")?) && !is_conjugate_into(g, group(cat, "9.27.0.1")?) {
            outside.push(l);
        }
    }
    out.push(Check::new(
        "no-isogeny images in 3.3.0.1 or 9.27.0.1",
        outside.is_empty(),
        if outside.is_empty() { "all contained".to_string() } else { format!("not contained: {outside:?}") },
        "printed containment",
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_lists() {
        assert_eq!(isogeny_labels().len(), 39);
        assert_eq!(PRINTED_THREE_TORSION.len(), 15);
        assert_eq!(PRINTED_BOREL9.len(), 15);
        let all: BTreeSet<String> = isogeny_labels().into_iter().collect();
        assert!(PRINTED_BOREL9.iter().all(|l| all.contains(*l)));
    }

    #[test]
    fn check_display() {
        let c = Check::new("x", false, "d", "c");
        assert_eq!(c.to_string(), "[FAIL] x: d (c)");
    }
}
