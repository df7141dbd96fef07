//! Certificate verdicts on models with known integrability.

use bsde_core::brownian::sample_brownian;
use bsde_core::catalog::{build_model, catalog_names, Params};
use bsde_core::certificate::{check_conditions, compare_variants, grid_search, probe_lipschitz, CertificateConfig, Verdict};
use bsde_core::grid::make_grid;
use bsde_core::weights::{Variant, WeightParams, WeightSpec};

#[test]
fn bounded_model_passes_both_variants() {
    let model = build_model("bounded", &Params::new(), 1).unwrap();
    let grid = make_grid(1.0, 20).unwrap();
    let [a1, a2] = compare_variants(&model, &WeightSpec::default(), &grid, &CertificateConfig::default()).unwrap();
    for r in [&a1, &a2] {
        assert_eq!(r.verdict, Verdict::EvidencePass, "{}", r.reason);
        assert_eq!(r.lipschitz.violations, 0);
        assert_eq!(r.growth.len(), 5);
    }
    assert_eq!((a1.variant, a2.variant), (Variant::A1, Variant::A2));
}

#[test]
fn exp_square_terminal_fails_by_growth() {
    let model = build_model("exp_square", &Params::new(), 1).unwrap();
    let grid = make_grid(1.0, 20).unwrap();
    for variant in [Variant::A1, Variant::A2] {
        let r = check_conditions(&model, variant, &WeightSpec::default(), &grid, &CertificateConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::EvidenceFail, "{}", r.reason);
        assert_eq!(r.lipschitz.violations, 0);
        assert!(r.terminal_growth.iter().all(|g| *g > r.growth_threshold), "{:?}", r.terminal_growth);
    }
}

#[test]
fn exp_square_below_critical_coefficient_passes() {
    // E exp(a W(1)^2) |.|^2 = E exp(2a W(1)^2) is finite for a < 1/4.
    let mut p = Params::new();
    p.insert("coef".into(), 0.05);
    let model = build_model("exp_square", &p, 1).unwrap();
    let grid = make_grid(1.0, 20).unwrap();
    let r = check_conditions(&model, Variant::A1, &WeightSpec::default(), &grid, &CertificateConfig::default()).unwrap();
    assert_eq!(r.verdict, Verdict::EvidencePass, "{}", r.reason);
}

#[test]
fn lipschitz_violation_fails_by_probe() {
    let model = build_model("lipschitz_violation", &Params::new(), 1).unwrap();
    let grid = make_grid(1.0, 20).unwrap();
    let r = check_conditions(&model, Variant::A1, &WeightSpec::default(), &grid, &CertificateConfig::default()).unwrap();
    assert_eq!(r.verdict, Verdict::EvidenceFail);
    assert!(r.lipschitz.violations > 0);
    assert!(r.lipschitz.probes >= 10_000);
    assert!((r.lipschitz.worst_ratio - 2.0).abs() < 1e-9);
}

#[test]
fn catalog_models_honour_declared_moduli() {
    let e = sample_brownian(&make_grid(1.0, 20).unwrap(), 500, 2, 13).unwrap();
    for (name, _) in catalog_names() {
        let model = build_model(name, &Params::new(), 2).unwrap();
        let probe = probe_lipschitz(&model, &e, 10_000, 10.0, 1.0, 5).unwrap();
        if name == "lipschitz_violation" {
            assert!(probe.violations > 0);
        } else {
            assert_eq!(probe.violations, 0, "{name}");
            assert!(probe.worst_ratio <= 1.0 + 1e-9, "{name}: {}", probe.worst_ratio);
        }
    }
}

#[test]
fn verdicts_are_deterministic() {
    let model = build_model("sin_clip", &Params::new(), 1).unwrap();
    let grid = make_grid(1.0, 10).unwrap();
    let config = CertificateConfig { base_paths: 512, blocks: 16, seed: 4, ..Default::default() };
    let a = check_conditions(&model, Variant::A2, &WeightSpec::default(), &grid, &config).unwrap();
    let b = check_conditions(&model, Variant::A2, &WeightSpec::default(), &grid, &config).unwrap();
    assert_eq!(a, b);
    let (mut ta, mut tb) = (Vec::new(), Vec::new());
    a.write_text(&mut ta).unwrap();
    b.write_text(&mut tb).unwrap();
    assert_eq!(ta, tb);
    assert!(String::from_utf8(ta).unwrap().contains("verdict: evidence-pass"));
}

#[test]
fn grid_search_stops_at_first_pass() {
    let model = build_model("bounded", &Params::new(), 1).unwrap();
    let grid = make_grid(1.0, 10).unwrap();
    let config = CertificateConfig { base_paths: 512, blocks: 16, probes: 1000, ..Default::default() };
    let candidates = [
        WeightParams::new(2.0, 4.0, 5.0, 2250.0).unwrap(),
        WeightParams::new(3.0, 6.0, 6.0, 3000.0).unwrap(),
    ];
    let rows = grid_search(&model, Variant::A1, &WeightSpec::default(), &candidates, &grid, &config, true).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].1, Verdict::EvidencePass);
    let rows = grid_search(&model, Variant::A1, &WeightSpec::default(), &candidates, &grid, &config, false).unwrap();
    assert_eq!(rows.len(), 2);
}
