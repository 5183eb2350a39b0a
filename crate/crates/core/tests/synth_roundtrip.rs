use std::collections::BTreeMap;

use regen_core::pipeline::{Inputs, RunConfig};
use regen_core::synth::{generate_city, SynthConfig, BUNDLE_FILES};
use sha2::{Digest, Sha256};

fn small(seed: u64) -> SynthConfig {
    SynthConfig {
        grid_rows: 5,
        grid_cols: 6,
        borough_rows: 2,
        borough_cols: 3,
        venues_per_ward: 15.0,
        transitions_per_year: 8_000,
        seed,
        ..Default::default()
    }
}

fn hashes(dir: &std::path::Path) -> BTreeMap<&'static str, String> {
    BUNDLE_FILES.iter().map(|&f| (f, hex::encode(Sha256::digest(std::fs::read(dir.join(f)).unwrap())))).collect()
}

#[test]
fn files_parse_with_zero_rejections() {
    let bundle = generate_city(&small(3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    bundle.write_to(dir.path()).unwrap();
    let inputs = Inputs::load(&RunConfig::for_input_dir(dir.path())).unwrap();
    for f in inputs.rejections() {
        assert_eq!(f.rejected, 0, "{}: {:?}", f.file, f.by_reason);
    }
    assert_eq!(inputs.venues.len(), bundle.venues.len());
    assert_eq!(inputs.transitions.len(), 3 * 8_000);
    assert_eq!(inputs.wards.len(), 30);
    assert_eq!(inputs.imd.records.len(), 60);

    // Parsed tables equal the in-memory ones.
    let mem = bundle.tables();
    assert_eq!(inputs.venues.venues(), mem.venues.venues());
    assert_eq!(inputs.transitions.transitions, mem.transitions.transitions);
    assert_eq!(inputs.wards.wards(), mem.wards.wards());
    assert_eq!(inputs.expenditure.records, mem.expenditure.records);
    assert_eq!(inputs.imd.records, mem.imd.records);
}

#[test]
fn same_seed_gives_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_city(&small(11)).unwrap().write_to(a.path()).unwrap();
    generate_city(&small(11)).unwrap().write_to(b.path()).unwrap();
    assert_eq!(hashes(a.path()), hashes(b.path()));
}

#[test]
fn transition_count_is_exact() {
    for n in [1, 17, 5_000] {
        let b = generate_city(&SynthConfig { transitions_per_year: n, ..small(0) }).unwrap();
        assert_eq!(b.transitions.len(), 3 * n);
        assert!(b.ledger.counts.transitions_per_year.values().all(|&c| c == n));
    }
}
