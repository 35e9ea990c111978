use sonder_core::analytics::pipeline::PRESS;
use sonder_core::analytics::{press_models, synthetic_panel, PanelConfig};
use sonder_core::experiment::{
    analyze_simulation, simulate_agents, SimulationConfig, FACT_RESISTANCE, O2_MAX_RANK,
    O2_MEAN_CLICK_COMPLETENESS,
};

#[test]
fn simulated_effects_recovered() {
    let planted = [
        (O2_MAX_RANK.to_string(), 6.14),
        (O2_MEAN_CLICK_COMPLETENESS.to_string(), 7.6),
        (format!("o1_{FACT_RESISTANCE}"), -0.212),
    ];
    let mut hits = [0; 3];
    for seed in 0..20 {
        let data = simulate_agents(&SimulationConfig { seed, ..Default::default() }).unwrap();
        let (_, effects) = analyze_simulation(&data, "classical").unwrap();
        for (k, (name, target)) in planted.iter().enumerate() {
            let e = effects.iter().find(|e| &e.outcome == name && e.controls).unwrap();
            let ok = (e.estimate - target).abs() <= 3.0 * e.std_error;
            println!("seed {seed} {name}: {:.3} ({:.3}) {}", e.estimate, e.std_error, if ok { "ok" } else { "MISS" });
            hits[k] += ok as usize;
        }
    }
    assert!(hits.iter().all(|h| *h >= 18), "{hits:?}");
}

#[test]
fn press_panel_recovers_pooled_and_within_slopes() {
    let panel = synthetic_panel(&PanelConfig::default()).unwrap();
    let fits = press_models(&panel, "classical").unwrap();
    let b = |i: usize| fits[i].term(PRESS).unwrap().clone();
    let pooled = b(0);
    assert!((pooled.estimate + 0.28).abs() <= 3.0 * pooled.std_error, "{pooled:?}");
    let within = b(4);
    assert!((within.estimate + 0.17).abs() < (pooled.estimate + 0.17).abs());
    assert!((within.estimate + 0.17).abs() <= 3.0 * within.std_error, "{within:?}");
}
