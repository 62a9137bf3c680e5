use irs_relay::channel::Geometry;
use irs_relay::experiment::{paired_draws, sweep_distance, ExperimentConfig, Scheme};
use irs_relay::optimizer::{relay_without_irs, AOConfig};
use irs_relay::rate::Instance;

#[test]
fn opt_alpha_dominates_conventional_per_trial() {
    let cfg = ExperimentConfig {
        geometry: Geometry { irs_rows: 3, irs_cols: 3, ..Geometry::default() },
        d0_list: vec![20.0, 45.0, 50.0, 80.0],
        trials: 4,
        ..ExperimentConfig::default()
    };
    let res = sweep_distance(&cfg, &AOConfig::default()).unwrap();
    for d0 in &cfg.d0_list {
        for t in 0..cfg.trials {
            let rate = |s| {
                res.records
                    .iter()
                    .find(|r| r.d0_m == *d0 && r.trial == t && r.scheme == s)
                    .unwrap()
                    .rate_bpshz
            };
            assert!(rate(Scheme::RelayingOptAlpha) >= rate(Scheme::ConventionalIRS) - 1e-9);
            assert!(rate(Scheme::RelayNoIRS) >= 0.0);
        }
        let opt = res.row(*d0, Scheme::RelayingOptAlpha).unwrap();
        let conv = res.row(*d0, Scheme::ConventionalIRS).unwrap();
        assert!(opt.mean_rate >= conv.mean_rate - 1e-9);
        assert_eq!(conv.relay_fraction, 0.0);
        assert_eq!(conv.mean_alpha, 1.0);
    }
}

#[test]
fn relay_without_irs_loses_next_to_the_ap() {
    // With the user 5 m from the AP the controller hears the AP worse than
    // the user does, so the relay cannot help and the IRS gain decides.
    let cfg = ExperimentConfig { d0_list: vec![5.0], trials: 50, schemes: vec![Scheme::ConventionalIRS, Scheme::RelayNoIRS], ..ExperimentConfig::default() };
    let res = sweep_distance(&cfg, &AOConfig::default()).unwrap();
    let conv = res.row(5.0, Scheme::ConventionalIRS).unwrap().mean_rate;
    let relay = res.row(5.0, Scheme::RelayNoIRS).unwrap().mean_rate;
    assert!(conv > relay, "{conv} vs {relay}");
}

#[test]
fn scheme_selection_and_order_are_respected() {
    let cfg = ExperimentConfig {
        geometry: Geometry { irs_rows: 2, irs_cols: 1, ..Geometry::default() },
        d0_list: vec![60.0, 30.0],
        trials: 2,
        schemes: vec![Scheme::RelayNoIRS, Scheme::RelayingEqualAlpha],
        ..ExperimentConfig::default()
    };
    let res = sweep_distance(&cfg, &AOConfig::default()).unwrap();
    let order: Vec<_> = res.rows.iter().map(|r| (r.d0_m, r.scheme)).collect();
    assert_eq!(
        order,
        vec![
            (60.0, Scheme::RelayNoIRS),
            (60.0, Scheme::RelayingEqualAlpha),
            (30.0, Scheme::RelayNoIRS),
            (30.0, Scheme::RelayingEqualAlpha)
        ]
    );
}

#[test]
fn relay_baseline_ignores_the_array() {
    let cfg = ExperimentConfig::default();
    let pb = cfg.power_budget().unwrap();
    let cs = paired_draws(&cfg, 4, 0).unwrap();
    let with_irs = relay_without_irs(&Instance::new(cs.clone(), pb));
    let stripped = irs_relay::channel::ChannelSet { h_ai: vec![], h_ic: vec![], g_iu: vec![], ..cs };
    let without = relay_without_irs(&Instance::new(stripped, pb));
    assert_eq!(with_irs.rate, without.rate);
    assert_eq!(with_irs.mode, without.mode);
}
