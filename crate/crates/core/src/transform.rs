//! Basis change across a rational 3-isogeny.
//!
//! Let `{P, Q}` be a basis of the 3-adic Tate module of `E1` with the isogeny
//! kernel inside `<P>`, and let `D = diag(1, 3)`. In the basis
//! `{phi(P/3), phi(Q)}` of `E2`, an element `[[a, b], [c, d]]` of the image of
//! `E1` (acting on column vectors, so `c = 0 mod 3`) becomes
//! `D^-1 M D = [[a, 3b], [c/3, d]]`.
//!
//! Images are stored mod 27, so the map is applied to a generating set of the
//! full preimage mod 81: that is where `c/3` is defined mod 27. The dual
//! isogeny has kernel on the second basis vector of `E2`.

use std::collections::BTreeMap;
use std::fmt;

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::modmat::{Mat2, Modulus};
use crate::subgroup::{Line, Subgroup};

/// Modulus at which 3-adic images are stored.
pub const IMAGE_MODULUS: Modulus = 27;
/// Working modulus of the transform.
pub const LIFT_MODULUS: Modulus = 81;

#[derive(Debug, Clone)]
pub struct TransformResult {
    pub input_label: String,
    pub line: Line,
    pub output_group: Subgroup,
    pub output_label: Option<String>,
}

/// A matrix `t` mod `n` with `t * v` spanning `e1` mod 3, where `v` spans `line`.
pub fn normalizing_conjugator(line: &Line, n: Modulus) -> Mat2 {
    let [x, y] = line.v;
    // columns: v and a complement
    let basis = if x != 0 {
        Mat2::new(n, i64::from(x), 0, i64::from(y), 1)
    } else {
        Mat2::new(n, 0, 1, 1, 0)
    };
    basis.inv().expect("line basis is invertible")
}

/// Image of `E2` from the image `g` of `E1` (given mod 27) and a stable line.
pub fn transform_image(g: &Subgroup, line: &Line) -> Result<Subgroup> {
    if line.p != 3 {
        return Err(Error::UnstableLine { line: format!("{line} at p={}", line.p) });
    }
    let g27 = to_image_modulus(g)?;
    if !line_is_stable(&g27, line) {
        return Err(Error::UnstableLine { line: line.to_string() });
    }
    let t = normalizing_conjugator(line, IMAGE_MODULUS);
    let normal = g27.conjugate(&t)?;
    let lifted = normal.preimage_generators(LIFT_MODULUS)?;
    let mapped = lifted.iter().map(basis_change).collect::<Result<Vec<_>>>()?;
    Subgroup::generate(&mapped, IMAGE_MODULUS)
}

/// `[[a, b], [c, d]] mod 81 -> [[a, 3b], [c/3, d]] mod 27`.
pub fn basis_change(m: &Mat2) -> Result<Mat2> {
    debug_assert_eq!(m.modulus(), LIFT_MODULUS);
    let [a, b, c, d] = m.entries().map(i64::from);
    if c % 3 != 0 {
        return Err(Error::TransformDivisibility);
    }
    Ok(Mat2::new(IMAGE_MODULUS, a, 3 * b, c / 3, d))
}

fn line_is_stable(g: &Subgroup, line: &Line) -> bool {
    g.gens().iter().all(|m| line.is_stable_under(m))
}

/// Brings a 3-power level group to modulus 27.
pub fn to_image_modulus(g: &Subgroup) -> Result<Subgroup> {
    let n = g.modulus();
    if n == IMAGE_MODULUS {
        Ok(g.clone())
    } else if IMAGE_MODULUS % n == 0 {
        g.full_preimage(IMAGE_MODULUS)
    } else if n % IMAGE_MODULUS == 0 && IMAGE_MODULUS as u64 % g.level() == 0 {
        g.reduce(IMAGE_MODULUS)
    } else {
        Err(Error::NotADivisor { divisor: IMAGE_MODULUS, modulus: n })
    }
}

/// Transforms along every stable line of a catalog entry.
pub fn transform_label(catalog: &Catalog, label: &str) -> Result<Vec<TransformResult>> {
    let entry = catalog.get(label).ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
    let group = entry.group();
    group
        .stable_lines(3)?
        .into_iter()
        .map(|line| {
            let out = transform_image(group, &line)?;
            let output_label = catalog.identify(&out)?;
            Ok(TransformResult {
                input_label: label.to_string(),
                line,
                output_group: out,
                output_label,
            })
        })
        .collect()
}

/// How the 3-adic images at the two ends of an isogeny edge relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRule {
    /// Degree prime to 3: the images are conjugate.
    LabelsEqual,
    /// Degree 3: one image is the transform of the other.
    Transform,
}

impl fmt::Display for EdgeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeRule::LabelsEqual => write!(f, "labels equal across edge"),
            EdgeRule::Transform => write!(f, "labels related by transform_image"),
        }
    }
}

pub fn ell_neq_p_rule(edge_prime: u32) -> EdgeRule {
    if edge_prime == 3 {
        EdgeRule::Transform
    } else {
        EdgeRule::LabelsEqual
    }
}

/// A printed row `input -> output` of the transform table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub input: String,
    pub output: String,
}

/// Outcome of checking one printed row.
#[derive(Debug, Clone)]
pub struct RowCheck {
    pub row: TableRow,
    /// Output label (or `None` when unidentified) for each stable line.
    pub line_outputs: Vec<(Line, Option<String>)>,
    pub reproduced: bool,
}

impl RowCheck {
    /// Whether the stable lines disagree on the output label.
    pub fn multiple_outputs(&self) -> bool {
        let mut labels: Vec<_> = self.line_outputs.iter().map(|(_, l)| l.clone()).collect();
        labels.sort();
        labels.dedup();
        labels.len() > 1
    }
}

pub const TABLE1: &str = include_str!("../data/table1.txt");

/// Parses `input -> output` rows; `#` starts a comment.
pub fn parse_table(text: &str) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (a, b) = line
            .split_once("->")
            .ok_or_else(|| Error::Parse(format!("table line {}: expected `a -> b`", no + 1)))?;
        rows.push(TableRow { input: a.trim().to_string(), output: b.trim().to_string() });
    }
    Ok(rows)
}

/// Recomputes every row of `rows` from the catalog generators.
pub fn regenerate_table(catalog: &Catalog, rows: &[TableRow]) -> Result<Vec<RowCheck>> {
    let mut cache: BTreeMap<String, Vec<(Line, Option<String>)>> = BTreeMap::new();
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        if !cache.contains_key(&row.input) {
            let outs = transform_label(catalog, &row.input)?
                .into_iter()
                .map(|r| (r.line, r.output_label))
                .collect();
            cache.insert(row.input.clone(), outs);
        }
        let line_outputs = cache[&row.input].clone();
        let reproduced =
            line_outputs.iter().any(|(_, l)| l.as_deref() == Some(row.output.as_str()));
        out.push(RowCheck { row: row.clone(), line_outputs, reproduced });
    }
    Ok(out)
}

/// Regenerates the shipped transform table.
pub fn regenerate_table1(catalog: &Catalog) -> Result<Vec<RowCheck>> {
    let rows = parse_table(TABLE1)?;
    let checks = regenerate_table(catalog, &rows)?;
    if let Some(bad) = checks.iter().find(|c| !c.reproduced) {
        return Err(Error::Catalog {
            label: bad.row.input.clone(),
            reason: format!(
                "row {} -> {} not reproduced by any stable line (got {:?})",
                bad.row.input, bad.row.output, bad.line_outputs
            ),
        });
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn borel3() -> Subgroup {
        let gens = [Mat2::new(3, 1, 1, 0, 1), Mat2::new(3, 2, 0, 0, 1), Mat2::new(3, 1, 0, 0, 2)];
        Subgroup::generate(&gens, 3).unwrap()
    }

    #[test]
    fn edge_rules() {
        assert_eq!(ell_neq_p_rule(2), EdgeRule::LabelsEqual);
        assert_eq!(ell_neq_p_rule(3), EdgeRule::Transform);
        assert_eq!(ell_neq_p_rule(37), EdgeRule::LabelsEqual);
        assert_eq!(EdgeRule::LabelsEqual.to_string(), "labels equal across edge");
    }

    #[test]
    fn basis_change_requires_divisibility() {
        assert!(matches!(
            basis_change(&Mat2::new(81, 1, 0, 1, 1)),
            Err(Error::TransformDivisibility)
        ));
        assert_eq!(
            basis_change(&Mat2::new(81, 2, 5, 30, 7)).unwrap(),
            Mat2::new(27, 2, 15, 10, 7)
        );
    }

    #[test]
    fn unstable_line_is_rejected() {
        let b = borel3();
        let bad = Line::new(3, 0, 1).unwrap();
        assert!(matches!(transform_image(&b, &bad), Err(Error::UnstableLine { .. })));
    }

    #[test]
    fn borel_maps_to_a_conjugate_of_itself() {
        let b = borel3();
        let line = b.stable_lines(3).unwrap()[0];
        let out = transform_image(&b, &line).unwrap();
        assert_eq!(out.level(), 3);
        assert_eq!(out.index_in_gl2(), 4);
        assert!(out.contains_minus_identity() && out.has_full_det());
        // the dual kernel is the second basis vector
        assert_eq!(out.stable_lines(3).unwrap(), vec![Line::new(3, 0, 1).unwrap()]);
    }

    #[test]
    fn table_parsing() {
        let rows = parse_table("# c\n3.4.0.1 -> 3.4.0.1\n\n9.12.0.1->3.12.0.1 # x\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].output, "3.12.0.1");
        assert!(parse_table("3.4.0.1 3.4.0.1").is_err());
        assert_eq!(parse_table(TABLE1).unwrap().len(), 39);
    }
}
