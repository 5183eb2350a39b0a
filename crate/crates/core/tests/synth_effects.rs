use regen_core::cohort::t_pvalue_two_sided;
use regen_core::metrics::GrowthRow;
use regen_core::pipeline::{build_network, RunConfig};
use regen_core::predict::{assemble_dataset, subset_by_change};
use regen_core::synth::{generate_city, oracle_label_counts, SynthBundle, SynthConfig};

fn config(delta: f64, sigma: f64, seed: u64) -> SynthConfig {
    SynthConfig {
        grid_rows: 12,
        grid_cols: 12,
        borough_rows: 3,
        borough_cols: 3,
        venues_per_ward: 25.0,
        transitions_per_year: 60_000,
        delta,
        sigma,
        seed,
        ..Default::default()
    }
}

fn welch_p(a: &[f64], b: &[f64]) -> f64 {
    let m = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let v = |x: &[f64], mu: f64| x.iter().map(|y| (y - mu).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
    let (ma, mb) = (m(a), m(b));
    let (sa, sb) = (v(a, ma) / a.len() as f64, v(b, mb) / b.len() as f64);
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (a.len() - 1) as f64 + sb * sb / (b.len() - 1) as f64);
    t_pvalue_two_sided(t, df)
}

fn endpoint_growth(b: &SynthBundle, pick: fn(&GrowthRow) -> Option<f64>) -> (Vec<f64>, Vec<f64>) {
    let inputs = b.tables();
    let (_, panel) = build_network(&RunConfig::default(), &inputs).unwrap();
    let (mut treated, mut other) = (Vec::new(), Vec::new());
    for w in panel.ward_codes() {
        let Some(g) = panel.endpoint_growth(w).as_ref().and_then(pick) else { continue };
        if b.ledger.effect[w] != 0.0 {
            treated.push(g);
        } else {
            other.push(g);
        }
    }
    (treated, other)
}

#[test]
fn no_effect_leaves_growth_indistinguishable() {
    for seed in 0..5 {
        let (t, o) = endpoint_growth(&generate_city(&config(0.0, 0.5, seed)).unwrap(), |g| g.grn);
        assert!(t.len() >= 5 && o.len() >= 5);
        let p = welch_p(&t, &o);
        assert!(p > 0.01, "seed {seed}: p = {p}");
    }
}

#[test]
fn planted_effect_shows_in_growth() {
    let (t, o) = endpoint_growth(&generate_city(&config(0.5, 0.5, 1)).unwrap(), |g| g.gri);
    let m = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    assert!(m(&t) > m(&o));
    assert!(welch_p(&t, &o) < 1e-6);
}

#[test]
fn label_counts_agree_with_dataset() {
    // Dense enough that every ward has complete features.
    let b = generate_city(&SynthConfig { venues_per_ward: 80.0, venue_dispersion: 50.0, ..config(0.5, 0.5, 2) }).unwrap();
    let inputs = b.tables();
    let rc = RunConfig { centre: b.config.centre(), ..Default::default() };
    let (_, panel) = build_network(&rc, &inputs).unwrap();
    let assembled = assemble_dataset(&panel, &inputs.imd, &inputs.wards, rc.centre);
    assert!(!assembled.excluded.contains_key("missing feature"), "{:?}", assembled.excluded);
    let data = assembled.dataset;
    for threshold in [0, 5, 25] {
        let c = oracle_label_counts(&b, threshold);
        let (improved, worsened) = subset_by_change(&data, threshold).class_counts();
        assert_eq!((c.improved, c.worsened), (improved, worsened), "threshold {threshold}");
    }
    let max = b.ledger.delta_rank.values().map(|d| d.unsigned_abs()).max().unwrap() as u32;
    let c = oracle_label_counts(&b, max);
    assert_eq!((c.improved, c.worsened), (0, 0));
    assert_eq!(subset_by_change(&data, max).len(), 0);
}

#[test]
fn strong_effect_improves_every_treated_ward() {
    let b = generate_city(&config(3.0, 0.0, 4)).unwrap();
    assert!(b.ledger.treated.len() > 10);
    for w in &b.ledger.treated {
        assert!(b.ledger.delta_rank[w] > 0, "{w}");
    }
}

