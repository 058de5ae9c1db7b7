use geopriv::dataset::synthetic::{generate, to_tsv, SyntheticSpec};
use geopriv::dataset::{load_checkins, Region};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/synthetic_checkins.txt");

#[test]
fn fixture_matches_generator() {
    let text = to_tsv(&generate(&SyntheticSpec::default()));
    if std::env::var_os("GEOPRIV_BLESS").is_some() {
        std::fs::write(FIXTURE, &text).unwrap();
    }
    let on_disk = std::fs::read_to_string(FIXTURE).unwrap();
    assert!(on_disk == text, "fixture is stale; rerun with GEOPRIV_BLESS=1");
}

#[test]
fn fixture_loads_cleanly() {
    let report = load_checkins(FIXTURE, &Region::default()).unwrap();
    assert_eq!(report.checkins.len(), 10_000);
    assert_eq!(report.malformed, 0);
    assert_eq!(report.outside_region, 0);
}
