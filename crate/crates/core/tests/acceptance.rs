//! One pass/fail line per acceptance criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand::rngs::StdRng;

use threeadic::catalog::Catalog;
use threeadic::classifier::{check_oracle, parse_oracle, Classifier, FactBase, ORACLE};
use threeadic::cusps::{cusp_set, genus_data};
use threeadic::lmfdb::{crosscheck, Client, Mode};
use threeadic::report;
use threeadic::transform::transform_image;
use threeadic::{is_conjugate, Line, Mat2, Result};

const TABLE_BUDGET: Duration = Duration::from_secs(300);

const CITED_CLASSES: &[&str] = &[
    "37.a", "46.a", "726.b", "44.a", "176.a", "196.a", "196.b", "486.c", "486.d", "50.a", "50.b", "162.b", "98.a",
    "14.a", "19.a", "26.a", "54.a", "54.b", "30.a", "150.b", "80.b", "20.a", "1225.b", "14450.b", "121.a", "338.b",
    "175.b", "304.c", "432.b",
];

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into(), notes: Vec::new() }
}

fn failed_names(checks: &[report::Check]) -> Vec<String> {
    checks.iter().filter(|c| !c.pass).map(|c| c.to_string()).collect()
}

fn table1(cat: &Catalog) -> Result<Outcome> {
    let start = Instant::now();
    let (_, summary) = report::verify_table1(cat)?;
    let took = start.elapsed();
    Ok(outcome(
        summary.pass && took <= TABLE_BUDGET,
        format!("{} in {:.1}s", summary.detail, took.as_secs_f64()),
    ))
}

fn catalog(cat: &Catalog) -> Result<Outcome> {
    let checks = report::verify_catalog(cat)?;
    let g12 = cat.get("27.243.12.1").map(|e| genus_data(&e.curve_group())).transpose()?.map(|g| g.genus);
    let bad = failed_names(&checks);
    let mut o = outcome(
        bad.is_empty() && g12 == Some(12),
        format!("{} labels, {} mismatched, genus of 27.243.12.1 = {:?}", checks.len(), bad.len(), g12),
    );
    o.notes = bad;
    Ok(o)
}

fn lemma_checks(cat: &Catalog, torsion: bool) -> Result<Outcome> {
    let checks: Vec<_> = report::verify_lemmas(cat)?
        .into_iter()
        .filter(|c| c.name.contains("torsion") == torsion)
        .collect();
    let bad = failed_names(&checks);
    let mut o = outcome(bad.is_empty(), format!("{}/{} claims hold", checks.len() - bad.len(), checks.len()));
    o.notes = bad;
    Ok(o)
}

fn cusps() -> Result<Outcome> {
    let checks = report::verify_auxiliary(&Catalog::auxiliary()?)?;
    let bad = failed_names(&checks);
    let detail = checks.iter().map(|c| c.name.clone()).collect::<Vec<_>>().join(", ");
    let mut o = outcome(bad.is_empty(), format!("{detail}: {} mismatched", bad.len()));
    o.notes = bad;
    Ok(o)
}

fn classifier(c: &Classifier) -> Result<Outcome> {
    let facts = FactBase::shipped()?;
    let rows = parse_oracle(ORACLE)?;
    let checks = check_oracle(c, &facts, &rows)?;
    let mut notes = Vec::new();
    let mut bad = 0;
    for chk in &checks {
        if !chk.passed() {
            bad += 1;
            notes.push(format!(
                "{}: missing {:?}, unexpected {:?}",
                chk.query, chk.missing, chk.unexpected
            ));
        }
        for (printed, computed, why) in &chk.flagged {
            notes.push(format!(
                "FLAGGED {}: printed ({}) vs computed {} [{why}]",
                chk.query,
                printed.join(", "),
                computed.as_ref().map_or("none".to_string(), |t| format!("({})", t.join(", ")))
            ));
        }
    }
    let flagged: usize = checks.iter().map(|c| c.flagged.len()).sum();
    let mut o = outcome(
        bad == 0,
        format!("{} queries, {} rows, {bad} mismatched, {flagged} flagged", checks.len(), rows.len()),
    );
    o.notes = notes;
    Ok(o)
}

fn crosschecks(c: &Classifier) -> Result<Outcome> {
    let facts = FactBase::shipped()?;
    let client = Client::from_env();
    let mut notes = Vec::new();
    for class in CITED_CLASSES {
        let r = client.fetch_class(class, Mode::Offline).and_then(|rec| crosscheck(&rec, c, &facts));
        match r {
            Ok(r) if r.passed() => {}
            Ok(r) => notes.push(r.to_string()),
            Err(e) => notes.push(format!("{class}: {e}")),
        }
    }
    let mut o = outcome(
        notes.is_empty(),
        format!("{}/{} classes pass", CITED_CLASSES.len() - notes.len(), CITED_CLASSES.len()),
    );
    o.notes = notes;
    Ok(o)
}

fn random_unit_matrix(rng: &mut StdRng, n: u32) -> Mat2 {
    loop {
        let m = Mat2::new(n, rng.gen_range(0..n as i64), rng.gen_range(0..n as i64), rng.gen_range(0..n as i64), rng.gen_range(0..n as i64));
        if m.is_invertible() {
            return m;
        }
    }
}

fn properties(cat: &Catalog) -> Result<Outcome> {
    let mut notes = Vec::new();
    for e in cat.entries() {
        let g = e.curve_group();
        let cs = cusp_set(&g)?;
        let total: u64 = (0..cs.len()).map(|k| cs.double_coset_size(k)).sum();
        if total != threeadic::modmat::gl2_order(u64::from(g.modulus())) {
            notes.push(format!("{}: double cosets do not partition", e.label()));
        }
        for &a in cs.units() {
            for &b in cs.units() {
                let ab = (u64::from(a) * u64::from(b) % u64::from(cs.n)) as u32;
                for k in 0..cs.len() {
                    let step = cs.galois_image(b, k).and_then(|j| cs.galois_image(a, j));
                    if step != cs.galois_image(ab, k) {
                        notes.push(format!("{}: Galois action not compatible at {a},{b}", e.label()));
                    }
                }
            }
        }
        if genus_data(&g).is_err() {
            notes.push(format!("{}: genus not a nonnegative integer", e.label()));
        }
        for line in e.group().stable_lines(3)? {
            let out = transform_image(e.group(), &line)?;
            let dual = Line::new(3, 0, 1).expect("line");
            let back = transform_image(&out, &dual)?;
            if is_conjugate(&back, e.group()).is_none() {
                notes.push(format!("{} along {line}: round trip changes the class", e.label()));
            }
        }
    }
    let mut rng = StdRng::seed_from_u64(7);
    let labels: Vec<&str> = cat.labels().collect();
    for _ in 0..100 {
        let label = labels[rng.gen_range(0..labels.len())];
        let e = cat.get(label).expect("label");
        let t = random_unit_matrix(&mut rng, e.modulus());
        let conj = e.group().conjugate(&t)?;
        let got = cat.identify(&conj)?;
        if got.as_deref() != Some(label) {
            notes.push(format!("identify({label} conjugated) = {got:?}"));
        }
    }
    let mut o = outcome(notes.is_empty(), format!("{} catalog groups, 100 conjugations, {} failures", cat.len(), notes.len()));
    o.notes = notes;
    Ok(o)
}

fn main() -> ExitCode {
    let cat = Catalog::shipped().expect("shipped catalog loads");
    let cls = Classifier::new(&cat).expect("classifier data");
    let criteria: Vec<(&str, Box<dyn Fn() -> Result<Outcome>>)> = vec![
        ("table regeneration", Box::new(|| table1(&cat))),
        ("catalog self-consistency", Box::new(|| catalog(&cat))),
        ("torsion sets", Box::new(|| lemma_checks(&cat, true))),
        ("containments", Box::new(|| lemma_checks(&cat, false))),
        ("cusp counts", Box::new(cusps)),
        ("classifier regression", Box::new(|| classifier(&cls))),
        ("LMFDB crosschecks", Box::new(|| crosschecks(&cls))),
        ("property suites", Box::new(|| properties(&cat))),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        all &= o.pass;
        println!("criterion {} {name}: {} - {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        for n in &o.notes {
            println!("    {n}");
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
