use ergdvo::angular::{BasisTag, OperatorMatrix, Units};
use ergdvo::ion::{ModelParams, Sublattice};
use ergdvo::spectrum::{
    eigensolve, field_sweep, find_avoided_crossing, one_magnon_pair, tracking_permutation, transition_strengths, Axis,
    Branch, BranchKey, BranchPoint, CrossingOutcome, Eigen, LineStrength, ModelOptions, Simulator, SpectralMap,
    SweepConfig,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn two_level(detuning: f64, coupling: f64) -> Eigen {
    let data = DMatrix::from_row_slice(2, 2, &[detuning, coupling, coupling, -detuning]).map(Complex64::from);
    eigensolve(&OperatorMatrix::from_data(BasisTag::Plain(2), Units::Ghz, data).unwrap()).unwrap()
}

/// Follows the branch that starts in the lower level through a two-level
/// crossing and reports where it ends up.
fn follow_lower(coupling: f64) -> usize {
    // Offset so no sample lands on the degeneracy itself.
    let steps: Vec<f64> = (0..=40).map(|i| -1.013 + 0.05 * i as f64).collect();
    let mut position = 0;
    let mut previous = two_level(steps[0], coupling);
    for &d in &steps[1..] {
        let current = two_level(d, coupling);
        let perm = tracking_permutation(&previous.vectors, &current.vectors).unwrap();
        position = perm.iter().position(|&p| p == position).unwrap();
        previous = current;
    }
    position
}

#[test]
fn two_level_toy_follows_character_or_energy() {
    // Weak coupling: the state keeps its character and ends up on top.
    assert_eq!(follow_lower(1e-4), 1);
    // Strong coupling: the adiabatic level stays lowest.
    assert_eq!(follow_lower(1.0), 0);
}

fn simulator() -> Simulator {
    Simulator::new(&ModelParams::er_gdvo4(), ModelOptions::default()).unwrap()
}

#[test]
fn strengths_obey_the_completeness_sum_rule() {
    let sim = simulator();
    for (b, magnons) in [(0.1, false), (0.45, false), (0.2, true)] {
        let eig = sim.solve(b, Sublattice::One, magnons).unwrap();
        let moments = sim.moments(magnons);
        let total: f64 = transition_strengths(&eig, 0, moments, Axis::Z).iter().map(LineStrength::total).sum();
        let g = eig.vectors.column(0).into_owned();
        let mut expected = 0.0;
        for axis in Axis::ALL {
            let w = &moments.component(axis).data * &g;
            let mean = g.dotc(&w);
            expected += w.norm_squared() - mean.norm_sqr();
        }
        assert!((total - expected).abs() < 1e-9 * expected, "B={b}: {total} vs {expected}");
    }
}

#[test]
fn channels_partition_the_cartesian_sum() {
    let sim = simulator();
    let eig = sim.solve(0.3, Sublattice::Two, false).unwrap();
    let moments = sim.moments(false);
    let zs = transition_strengths(&eig, 0, moments, Axis::Z);
    let xs = transition_strengths(&eig, 0, moments, Axis::X);
    for (a, b) in zs.iter().zip(&xs) {
        assert!(a.sigma >= 0.0 && a.pi >= 0.0);
        assert!((a.total() - b.total()).abs() < 1e-12 * a.total().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn strengths_ignore_eigenvector_phases(phases in prop::collection::vec(0.0f64..std::f64::consts::TAU, 52), b in 0.0f64..1.0) {
        let sim = simulator();
        let eig = sim.solve(b, Sublattice::One, false).unwrap();
        let moments = sim.moments(false);
        let base = transition_strengths(&eig, 0, moments, Axis::Z);
        let mut rotated = eig.clone();
        for (k, &phi) in phases.iter().enumerate() {
            let z = Complex64::from_polar(1.0, phi);
            for v in rotated.vectors.column_mut(k).iter_mut() {
                *v *= z;
            }
        }
        let moved = transition_strengths(&rotated, 0, moments, Axis::Z);
        for (a, c) in base.iter().zip(&moved) {
            prop_assert!((a.sigma - c.sigma).abs() < 1e-10 && (a.pi - c.pi).abs() < 1e-10);
        }
    }
}

fn sweep(b_min: f64, b_max: f64, steps: usize) -> SweepConfig {
    SweepConfig { b_min, b_max, steps, ..SweepConfig::default() }
}

#[test]
fn counts_follow_the_window() {
    let sim = simulator();
    let config = sweep(0.0, 0.6, 7);
    let out = field_sweep(&sim, &config).unwrap();
    for (k, &b) in out.map.fields.iter().enumerate() {
        let mut expected = 0;
        for s in Sublattice::BOTH {
            let e = sim.energies(b, s, false).unwrap();
            expected += e[1..]
                .iter()
                .map(|x| x - e[0] - out.reference_ghz)
                .filter(|f| *f >= config.window_min_ghz && *f <= config.window_max_ghz)
                .count();
        }
        assert_eq!(out.map.count_at(k), expected, "B={b}");
    }
}

fn frequencies_at(map: &SpectralMap, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = map.branches.iter().filter_map(|b| b.at_field_index(k)).map(|p| p.freq_ghz).collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn reference_only_shifts_frequencies() {
    let sim = simulator();
    let mut a = sweep(0.0, 0.5, 6);
    a.reference = Some(0.0);
    let mut b = a.clone();
    b.reference = Some(40.0);
    b.window_min_ghz -= 40.0;
    b.window_max_ghz -= 40.0;
    let ma = field_sweep(&sim, &a).unwrap().map;
    let mb = field_sweep(&sim, &b).unwrap().map;
    for k in 0..6 {
        let fa = frequencies_at(&ma, k);
        let fb = frequencies_at(&mb, k);
        assert_eq!(fa.len(), fb.len());
        for (x, y) in fa.iter().zip(&fb) {
            assert!((x - 40.0 - y).abs() < 1e-9);
        }
    }
}

#[test]
fn sweep_direction_does_not_change_frequencies() {
    let sim = simulator();
    let up = field_sweep(&sim, &sweep(0.1, 0.7, 13)).unwrap();
    let down = field_sweep(&sim, &sweep(0.7, 0.1, 13)).unwrap();
    for k in 0..13 {
        let fu = frequencies_at(&up.map, k);
        let fd = frequencies_at(&down.map, 12 - k);
        assert_eq!(fu.len(), fd.len());
        for (x, y) in fu.iter().zip(&fd) {
            assert!((x - y).abs() < 1e-8, "k={k}: {x} vs {y}");
        }
    }
    if up.warnings.is_empty() && down.warnings.is_empty() {
        let labels = |m: &SpectralMap| m.branches.iter().map(|b| b.label.clone()).collect::<Vec<_>>();
        assert_eq!(labels(&up.map), labels(&down.map));
    }
}

#[test]
fn exported_map_round_trips_bit_exactly() {
    let sim = simulator();
    let mut config = sweep(0.0, 0.3, 4);
    config.with_magnons = true;
    let map = field_sweep(&sim, &config).unwrap().map;
    let mut buf = Vec::new();
    map.export_csv(&mut buf).unwrap();
    let back = SpectralMap::load_csv(buf.as_slice()).unwrap();
    assert_eq!(back, map);
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("# schema_version="));
}

#[test]
fn export_shapes() {
    let empty = SpectralMap::default();
    let mut buf = Vec::new();
    empty.export_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1);
    let one = SpectralMap {
        fields: vec![0.0, 0.5],
        branches: vec![Branch {
            sublattice: Sublattice::One,
            label: "L16".into(),
            points: (0..2).map(|k| BranchPoint { field_index: k, freq_ghz: k as f64, strength: LineStrength::default() }).collect(),
        }],
    };
    let mut buf = Vec::new();
    one.export_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

/// Two hyperbolic branches `±√(s²(B−B0)² + (gap/2)²)` sampled on a grid.
fn hyperbola(gap: f64, centre: f64, steps: usize) -> SpectralMap {
    let fields: Vec<f64> = (0..steps).map(|i| i as f64 / (steps - 1) as f64).collect();
    let slope = 40.0;
    let branch = |label: &str, sign: f64| Branch {
        sublattice: Sublattice::One,
        label: label.into(),
        points: fields
            .iter()
            .enumerate()
            .map(|(k, &b)| BranchPoint {
                field_index: k,
                freq_ghz: sign * (slope * slope * (b - centre).powi(2) + gap * gap / 4.0).sqrt(),
                strength: LineStrength::default(),
            })
            .collect(),
    };
    SpectralMap { branches: vec![branch("A", 1.0), branch("B", -1.0)], fields }
}

#[test]
fn crossing_finder_recovers_a_hyperbola() {
    let map = hyperbola(3.0, 0.437, 201);
    let a = BranchKey::new(Sublattice::One, "A");
    let b = BranchKey::new(Sublattice::One, "B");
    let c = find_avoided_crossing(&map, &a, &b).unwrap().crossing().unwrap();
    assert!((c.gap_ghz - 3.0).abs() < 0.01, "{c:?}");
    assert!((c.b_star - 0.437).abs() < 1e-3);
    let monotone = hyperbola(3.0, 1.4, 50);
    assert!(matches!(find_avoided_crossing(&monotone, &a, &b).unwrap(), CrossingOutcome::NoCrossing { .. }));
    assert!(find_avoided_crossing(&map, &a, &BranchKey::new(Sublattice::Two, "B")).is_err());
}

fn one_magnon_gap(params: &ModelParams) -> f64 {
    let sim = Simulator::new(params, ModelOptions::default()).unwrap();
    let mut config = sweep(0.0, 0.5, 101);
    config.with_magnons = true;
    config.sublattices = vec![Sublattice::One];
    let map = field_sweep(&sim, &config).unwrap().map;
    let (a, b) = one_magnon_pair(&sim);
    match find_avoided_crossing(&map, &BranchKey::new(Sublattice::One, a), &BranchKey::new(Sublattice::One, b)).unwrap() {
        CrossingOutcome::Crossing(c) => c.gap_ghz,
        CrossingOutcome::NoCrossing { min_separation, .. } => min_separation,
    }
}

#[test]
fn crossing_gap_scales_with_exchange() {
    let base = ModelParams::er_gdvo4();
    let gap = one_magnon_gap(&base);
    let doubled = one_magnon_gap(&ModelParams { j_eff: 2.0 * base.j_eff, ..base.clone() });
    assert!((doubled / gap - 2.0).abs() < 0.1, "{gap} -> {doubled}");
    let off = one_magnon_gap(&ModelParams { j_eff: 0.0, ..base.clone() });
    assert!(off < 0.5, "{off}");
    let three = one_magnon_gap(&ModelParams { n_gd: 3, ..base });
    assert!((three - gap).abs() < 0.01 * gap, "{gap} vs {three}");
}
