use threeadic::catalog::Catalog;
use threeadic::classifier::{check_oracle, parse_oracle, Classifier, FactBase, ORACLE};

#[test]
fn printed_tuples_match_classification() {
    let cat = Catalog::shipped().unwrap();
    let c = Classifier::new(&cat).unwrap();
    let facts = FactBase::shipped().unwrap();
    facts.validate(&cat).unwrap();
    let rows = parse_oracle(ORACLE).unwrap();
    let mut bad = 0;
    for chk in check_oracle(&c, &facts, &rows).unwrap() {
        if !chk.passed() {
            bad += 1;
            eprintln!("{}: missing {:?} unexpected {:?} flagged {:?}", chk.query, chk.missing, chk.unexpected, chk.flagged);
        }
    }
    assert_eq!(bad, 0);
}
