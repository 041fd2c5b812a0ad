use std::collections::BTreeMap;

use ergdvo::fitter::{
    match_branches, optimize, residuals, synth_data, synth_levels, FitSettings, Tier, TransitionDatum,
    TransitionSet,
};
use ergdvo::ion::{ModelParams, Sublattice};
use ergdvo::spectrum::{ModelOptions, SweepConfig};
use ergdvo::Error;

fn sweep(steps: usize) -> SweepConfig {
    SweepConfig { b_min: 0.0, b_max: 0.6, steps, ..SweepConfig::default() }
}

fn truth() -> ModelParams {
    ModelParams::er_gdvo4()
}

fn settings(free: &[&str]) -> FitSettings {
    FitSettings { free: free.iter().map(|s| s.to_string()).collect(), ..FitSettings::default() }
}

fn noiseless() -> TransitionSet {
    synth_data(&truth(), ModelOptions::default(), &sweep(7), 0.0, 1).unwrap()
}

fn residuals_at(params: &ModelParams, data: &[TransitionDatum], s: &FitSettings) -> Vec<f64> {
    let m = match_branches(params, ModelOptions::default(), data, s).unwrap();
    residuals(params, ModelOptions::default(), data, &m, s).unwrap()
}

#[test]
fn generating_parameters_leave_no_residual() {
    let set = noiseless();
    let r = residuals_at(&truth(), &set.data, &FitSettings::default());
    assert_eq!(r.len(), set.data.len());
    assert!(r.iter().all(|x| x.abs() < 1e-9), "{r:?}");
}

#[test]
fn residual_is_weighted_model_minus_data() {
    let mut set = noiseless();
    for d in &mut set.data {
        d.freq_ghz -= 1.0;
        d.weight = 2.5;
    }
    let r = residuals_at(&truth(), &set.data, &FitSettings::default());
    assert!(r.iter().all(|x| (x - 2.5).abs() < 1e-9));
}

#[test]
fn low_res_levels_are_scaled_by_the_tier_ratio() {
    let mut data = synth_levels(&truth(), ModelOptions::default(), &[16, 17, 30]).unwrap();
    for d in &mut data {
        d.freq_ghz -= 10.0;
    }
    let s = FitSettings { tier_ratio: 25.0, ..FitSettings::default() };
    let r = residuals_at(&truth(), &data, &s);
    assert!(r.iter().all(|x| (x - 2.0).abs() < 1e-9), "{r:?}");
}

#[test]
fn objective_ignores_data_order() {
    let set = noiseless();
    let mut p = truth();
    p.b_ex *= 1.05;
    p.theta = 3.0;
    let s = FitSettings::default();
    let forward: f64 = residuals_at(&p, &set.data, &s).iter().map(|r| r * r).sum();
    let mut shuffled = set.data.clone();
    shuffled.reverse();
    shuffled.rotate_left(7);
    let backward: f64 = residuals_at(&p, &shuffled, &s).iter().map(|r| r * r).sum();
    assert!((forward - backward).abs() <= 1e-12 * forward);
}

#[test]
fn unknown_label_is_reported_with_alternatives() {
    let mut set = noiseless();
    set.data[0].label = "L99".into();
    let err = match_branches(&truth(), ModelOptions::default(), &set.data, &FitSettings::default()).unwrap_err();
    match err {
        Error::UnmatchedLabel { label, available } => {
            assert!(label.starts_with("L99"));
            assert!(available.contains("L16"), "{available}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn same_seed_same_data() {
    let a = synth_data(&truth(), ModelOptions::default(), &sweep(5), 0.2, 42).unwrap();
    let b = synth_data(&truth(), ModelOptions::default(), &sweep(5), 0.2, 42).unwrap();
    let c = synth_data(&truth(), ModelOptions::default(), &sweep(5), 0.2, 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.seed, Some(42));
}

#[test]
fn noise_level_shows_in_the_residuals() {
    let config = SweepConfig { b_min: 0.0, b_max: 1.0, steps: 30, ..SweepConfig::default() };
    let set = synth_data(&truth(), ModelOptions::default(), &config, 0.1, 7).unwrap();
    assert!(set.data.len() >= 200, "{} points", set.data.len());
    let s = FitSettings { reference_ghz: set.reference_ghz, ..FitSettings::default() };
    let r = residuals_at(&truth(), &set.data, &s);
    let rms = (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt();
    assert!((rms / 0.1 - 1.0).abs() < 0.15, "rms {rms}");
}

fn perturbed() -> ModelParams {
    let mut p = truth();
    p.b_ex *= 1.1;
    p.b_dip *= 0.9;
    p
}

#[test]
fn optimizer_never_worsens_the_start() {
    let set = noiseless();
    let report = optimize(&perturbed(), ModelOptions::default(), &set.data, &settings(&["Bex", "Bdip"])).unwrap();
    assert!(report.objective <= report.initial_objective);
    assert!(report.objective < 1e-6 * report.initial_objective);
    assert!((report.params.b_ex / truth().b_ex - 1.0).abs() < 1e-4);
    assert!((report.params.b_dip / truth().b_dip - 1.0).abs() < 1e-4);
    assert_eq!(report.n_high_res, set.data.len());
}

#[test]
fn bounds_hold_at_the_result() {
    let set = noiseless();
    let start = perturbed();
    let mut s = settings(&["Bex", "theta"]);
    // The generating Bex lies below this interval.
    let lo = start.b_ex - 0.01 * start.b_ex.abs();
    let hi = start.b_ex + 0.01 * start.b_ex.abs();
    let (lo, hi) = (lo.min(hi), lo.max(hi));
    s.bounds = BTreeMap::from([("Bex".to_string(), (lo, hi))]);
    let report = optimize(&start, ModelOptions::default(), &set.data, &s).unwrap();
    assert!(report.params.b_ex >= lo && report.params.b_ex <= hi);
    assert!(report.params.theta.abs() <= 10.0);
    assert!(report.objective <= report.initial_objective);
}

#[test]
fn no_free_parameters_echoes_the_start() {
    let set = noiseless();
    let report = optimize(&perturbed(), ModelOptions::default(), &set.data, &settings(&[])).unwrap();
    assert_eq!(report.params, perturbed());
    assert_eq!(report.objective, report.initial_objective);
}

#[test]
fn fixing_a_parameter_at_its_true_value_does_not_hurt() {
    let set = noiseless();
    let mut start = perturbed();
    start.b_dip = truth().b_dip;
    let fixed = optimize(&start, ModelOptions::default(), &set.data, &settings(&["Bex"])).unwrap();
    let free = optimize(&start, ModelOptions::default(), &set.data, &settings(&["Bex", "Bdip"])).unwrap();
    let stall = 1e-10 * fixed.initial_objective;
    assert!(fixed.objective <= free.objective + stall, "{} vs {}", fixed.objective, free.objective);
}

#[test]
fn bad_requests_are_rejected() {
    let set = noiseless();
    let mut s = settings(&["Bex"]);
    s.bounds = BTreeMap::from([("Bex".to_string(), (5.0, 6.0))]);
    assert!(matches!(optimize(&truth(), ModelOptions::default(), &set.data, &s), Err(Error::InvalidArgument(_))));
    let s = settings(&["Bex", "Bex"]);
    assert!(matches!(optimize(&truth(), ModelOptions::default(), &set.data, &s), Err(Error::InvalidArgument(_))));
    let s = settings(&["Nope"]);
    assert!(matches!(optimize(&truth(), ModelOptions::default(), &set.data, &s), Err(Error::InvalidArgument(_))));
    let bad = vec![TransitionDatum {
        field_t: 0.1,
        freq_ghz: f64::NAN,
        sublattice: Sublattice::One,
        label: "L16".into(),
        tier: Tier::HighRes,
        weight: 1.0,
        exclude: false,
    }];
    assert!(optimize(&truth(), ModelOptions::default(), &bad, &settings(&["Bex"])).is_err());
}
