use regen_core::metrics::{Variable, WardMetricsPanel};
use regen_core::pipeline::{build_network, RunConfig};
use regen_core::synth::{generate_city, oracle_ward_metrics, SynthBundle, SynthConfig};

fn city(rows: usize, cols: usize, transitions: usize, seed: u64) -> SynthBundle {
    generate_city(&SynthConfig {
        grid_rows: rows,
        grid_cols: cols,
        borough_rows: 2,
        borough_cols: 2,
        venues_per_ward: 20.0,
        transitions_per_year: transitions,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn pipeline_panel(b: &SynthBundle) -> WardMetricsPanel {
    let inputs = b.tables();
    build_network(&RunConfig::default(), &inputs).unwrap().1
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= 1e-9 * x.abs().max(1.0),
        (None, None) => true,
        _ => false,
    }
}

fn assert_panels_match(fast: &WardMetricsPanel, slow: &WardMetricsPanel) {
    assert_eq!(fast.ward_codes(), slow.ward_codes());
    assert_eq!(fast.rows().len(), slow.rows().len());
    for (a, b) in fast.rows().iter().zip(slow.rows()) {
        assert_eq!((&a.ward_code, a.t, a.year), (&b.ward_code, b.t, b.year));
        assert_eq!((a.n, a.ic, a.oc, a.vc), (b.n, b.ic, b.oc, b.vc), "{} t={}", a.ward_code, a.t);
        for v in Variable::ALL {
            assert!(close(v.value(a), v.value(b)), "{} t={} {}: {:?} vs {:?}", a.ward_code, a.t, v.name(), v.value(a), v.value(b));
        }
        let (ga, gb) = (fast.growth(&a.ward_code, a.t), slow.growth(&b.ward_code, b.t));
        assert_eq!(ga.is_some(), gb.is_some());
        if let (Some(ga), Some(gb)) = (ga, gb) {
            for (x, y) in [(ga.grn, gb.grn), (ga.gri, gb.gri), (ga.gro, gb.gro), (ga.grior, gb.grior), (ga.gracc, gb.gracc), (ga.grvc, gb.grvc)] {
                assert!(close(x, y));
            }
        }
    }
}

#[test]
fn twenty_ward_city_matches_oracle() {
    for seed in 0..3 {
        let b = city(4, 5, 4_000, seed);
        assert_panels_match(&pipeline_panel(&b), &oracle_ward_metrics(&b));
    }
}

#[test]
fn empty_year_has_zero_centralities() {
    let mut b = city(4, 5, 2_000, 9);
    let first = b.config.first_year;
    let lo = regen_core::ingest::time::year_start(first + 1);
    let hi = regen_core::ingest::time::year_start(first + 2);
    b.transitions.retain(|t| !(lo..hi).contains(&t.t_origin));
    let (fast, slow) = (pipeline_panel(&b), oracle_ward_metrics(&b));
    assert_panels_match(&fast, &slow);
    for p in [&fast, &slow] {
        assert!(p.rows().iter().filter(|r| r.t == 2).all(|r| r.ic == 0 && r.oc == 0 && r.n == 0));
    }
}

#[test]
fn single_ward_city_has_no_cross_flow() {
    let b = generate_city(&SynthConfig {
        grid_rows: 1,
        grid_cols: 1,
        venues_per_ward: 30.0,
        transitions_per_year: 500,
        ..Default::default()
    })
    .unwrap();
    let (fast, slow) = (pipeline_panel(&b), oracle_ward_metrics(&b));
    assert_panels_match(&fast, &slow);
    assert!(fast.rows().iter().all(|r| r.ic == 0 && r.oc == 0 && r.ior.is_none()));
}
