use std::path::PathBuf;

use risvec_core::{load_config, SweepAxis};

fn preset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn table1_preset_has_reference_values() {
    let cfg = load_config(preset("table1.cfg")).unwrap();
    let r = &cfg.radio;
    assert_eq!(r.path_exp_ris_edge, 2.2);
    assert_eq!(r.path_exp_direct, 3.5);
    assert_eq!(r.path_exp_user_ris, 2.2);
    assert_eq!(r.ris_elements, 36);
    assert_eq!(r.tx_power, 0.2);
    assert_eq!(r.noise_power, 1.44e-10);
    assert_eq!(r.bandwidth, 360e3);
    assert_eq!(cfg.scenario.num_vehicles, 15);
    let s = &cfg.semantic.params;
    assert_eq!(s.units_per_sentence, 100.0);
    assert_eq!(s.words_per_sentence, 20.0);
    assert_eq!(s.bits_per_sentence, 1200.0);
    assert_eq!(s.threshold, 0.9);
    let c = &cfg.compute;
    assert_eq!(c.cycles_per_bit, 1000.0);
    assert_eq!(c.local_freq, 2e9);
    assert_eq!(c.rsu_freq, 6e9);
    assert_eq!(c.sv_freq, 2e9);
    let a = &cfg.agent;
    assert_eq!(a.ppo.lr_actor, 3e-4);
    assert_eq!(a.ppo.lr_critic, 1e-3);
    assert_eq!(a.ppo.gamma, 0.6);
    assert_eq!(a.ppo.clip, 0.2);
    assert_eq!(a.episodes, 5000);
    // unstated Rician factor falls back to its default and is echoed
    assert_eq!(r.rician_factor, 3.0);
    assert!(cfg.to_ini().contains("rician_factor = 3\n"));
}

#[test]
fn sweep_presets_load() {
    let cases = [
        ("power_sweep.cfg", SweepAxis::Power, vec![0.1, 0.15, 0.2, 0.25, 0.3]),
        ("vehicles_sweep.cfg", SweepAxis::Vehicles, vec![15.0, 20.0, 25.0, 30.0]),
        ("ris_sweep.cfg", SweepAxis::RisElements, vec![16.0, 36.0, 64.0, 100.0]),
    ];
    for (file, axis, values) in cases {
        let cfg = load_config(preset(file)).unwrap();
        assert_eq!(cfg.experiment.sweep, axis, "{file}");
        assert_eq!(cfg.experiment.values, values, "{file}");
        for v in values {
            cfg.with_sweep_value(Some(v)).system().unwrap();
        }
    }
}

#[test]
fn small_preset_loads() {
    let cfg = load_config(preset("small.cfg")).unwrap();
    assert_eq!(cfg.scenario.num_vehicles, 3);
    assert_eq!(cfg.scenario.num_service_vehicles, 2);
    assert_eq!((cfg.radio.ris_elements, cfg.radio.phase_bits), (4, 2));
    assert_eq!((cfg.agent.episodes, cfg.agent.episode_len), (300, 100));
}
