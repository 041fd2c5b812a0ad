//! Fits model parameters to measured transition frequencies.
//!
//! High-resolution data are field-dependent transition frequencies identified
//! by branch label; low-resolution data are zero-field level energies above
//! the ground level. Every datum is tied to an eigenvalue rank once, from the
//! starting parameters, and that assignment is kept for the whole fit.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use argmin::core::{CostFunction, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{ghz_to_cm1, CM1_TO_GHZ};
use crate::error::{Error, Result};
use crate::ion::{ModelParams, Sublattice, MAX_MISALIGNMENT_DEG, PARAM_NAMES};
use crate::lsq::{self, LsqSettings};
use crate::spectrum::{
    field_sweep, track_branches, ModelOptions, Simulator, SweepConfig, TrackRequest, TRACK_MARGIN_GHZ,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    HighRes,
    LowRes,
}

/// One measured frequency.
///
/// High-res: transition frequency in GHz relative to the reference, label of
/// a tracked branch. Low-res: level energy above the ground level in GHz, label
/// `L<rank>` of the bare erbium level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionDatum {
    #[serde(rename = "field_T")]
    pub field_t: f64,
    #[serde(rename = "freq_GHz")]
    pub freq_ghz: f64,
    pub sublattice: Sublattice,
    pub label: String,
    pub tier: Tier,
    pub weight: f64,
    #[serde(default, with = "flag")]
    pub exclude: bool,
}

mod flag {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(serde::de::Error::custom(format!("exclude must be 0 or 1, got {other}"))),
        }
    }
}

impl TransitionDatum {
    fn validate(&self) -> Result<()> {
        if !(self.field_t.is_finite() && self.freq_ghz.is_finite()) {
            return Err(Error::Data(format!("non-finite value in datum {self:?}")));
        }
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(Error::Data(format!("weight must be positive, got {} for {}", self.weight, self.label)));
        }
        if self.tier == Tier::LowRes {
            low_res_rank(&self.label)?;
        }
        Ok(())
    }
}

fn low_res_rank(label: &str) -> Result<usize> {
    label
        .strip_prefix('L')
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Data(format!("low-res label must be L<rank>, got {label:?}")))
}

/// Transition data with the metadata carried in file comments.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransitionSet {
    pub data: Vec<TransitionDatum>,
    pub reference_ghz: Option<f64>,
    pub seed: Option<u64>,
}

pub const TRANSITION_HEADER: [&str; 7] = ["field_T", "freq_GHz", "sublattice", "label", "tier", "weight", "exclude"];

impl TransitionSet {
    pub fn from_csv<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut set = TransitionSet::default();
        for line in text.lines().filter(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            if let Some(v) = body.strip_prefix("reference_GHz=") {
                set.reference_ghz =
                    Some(v.trim().parse().map_err(|_| Error::Data(format!("bad reference_GHz comment {v:?}")))?);
            } else if let Some(v) = body.strip_prefix("seed=") {
                set.seed = Some(v.trim().parse().map_err(|_| Error::Data(format!("bad seed comment {v:?}")))?);
            }
        }
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        for (i, rec) in rdr.deserialize::<TransitionDatum>().enumerate() {
            let d = rec.map_err(|e| Error::Data(format!("transition row {}: {e}", i + 1)))?;
            d.validate()?;
            set.data.push(d);
        }
        Ok(set)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        crate::spectrum::write_schema_line(&mut w)?;
        if let Some(s) = self.seed {
            writeln!(w, "# seed={s}")?;
        }
        if let Some(r) = self.reference_ghz {
            writeln!(w, "# reference_GHz={r}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        for d in &self.data {
            csv.serialize(d)?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// Settings for one optimization run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSettings {
    pub with_magnons: bool,
    pub free: Vec<String>,
    /// Lower and upper bounds by parameter name; missing names are unbounded
    /// except `theta` and `Ecorr`, which always keep their physical limits.
    pub bounds: BTreeMap<String, (f64, f64)>,
    /// Ratio of high-res to low-res weights on squared residuals.
    pub tier_ratio: f64,
    /// Fixed reference frequency in GHz; `None` recomputes it for every trial
    /// parameter set.
    #[serde(rename = "reference_GHz")]
    pub reference_ghz: Option<f64>,
    /// Drop data flagged `exclude`. Defaults to dropping them only without magnons.
    pub apply_mask: Option<bool>,
    pub max_iterations: u64,
    /// Relative objective spread at which the simplex stops.
    pub tolerance: f64,
    /// Frequency window used to track branches when matching labels; should
    /// match the window the data were labelled with.
    #[serde(rename = "window_min_GHz")]
    pub window_min_ghz: f64,
    #[serde(rename = "window_max_GHz")]
    pub window_max_ghz: f64,
    /// Finish with a Levenberg–Marquardt run on finite-difference Jacobians.
    pub polish: bool,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            with_magnons: false,
            free: vec!["Bex".into(), "Bdip".into(), "theta".into(), "Ecorr".into()],
            bounds: BTreeMap::new(),
            tier_ratio: 100.0,
            reference_ghz: None,
            apply_mask: None,
            max_iterations: 400,
            tolerance: 1e-12,
            window_min_ghz: SweepConfig::default().window_min_ghz,
            window_max_ghz: SweepConfig::default().window_max_ghz,
            polish: true,
        }
    }
}

/// Largest |Ecorr| a fit may reach, cm⁻¹.
pub const MAX_ECORR_CM1: f64 = 10.0;

impl FitSettings {
    fn bound(&self, name: &str) -> (f64, f64) {
        let (mut lo, mut hi) = self.bounds.get(name).copied().unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
        let hard = match name {
            "theta" => Some(MAX_MISALIGNMENT_DEG),
            "Ecorr" => Some(MAX_ECORR_CM1),
            _ => None,
        };
        if let Some(h) = hard {
            lo = lo.max(-h);
            hi = hi.min(h);
        }
        (lo, hi)
    }

    fn window(&self) -> (f64, f64) {
        (self.window_min_ghz, self.window_max_ghz)
    }

    fn masks(&self) -> bool {
        self.apply_mask.unwrap_or(!self.with_magnons)
    }
}

/// Per-datum eigenvalue rank fixed from the starting parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchMatching {
    ranks: Vec<Option<usize>>,
}

impl BranchMatching {
    pub fn rank(&self, i: usize) -> Option<usize> {
        self.ranks[i]
    }
}

fn reference_for(sim: &Simulator, settings: &FitSettings) -> f64 {
    settings.reference_ghz.unwrap_or(sim.default_reference())
}

/// Resolves each used datum's label to an eigenvalue rank at `params`.
pub fn match_branches(
    params: &ModelParams,
    options: ModelOptions,
    data: &[TransitionDatum],
    settings: &FitSettings,
) -> Result<BranchMatching> {
    let sim = Simulator::new(params, options)?;
    let reference = reference_for(&sim, settings);
    let mut ranks = vec![None; data.len()];
    let used = |d: &TransitionDatum| !(settings.masks() && d.exclude);
    for (i, d) in data.iter().enumerate() {
        if used(d) && d.tier == Tier::LowRes {
            let r = low_res_rank(&d.label)?;
            if r >= sim.ion_model().operators().basis.dim() {
                return Err(Error::Data(format!("level rank {r} out of range")));
            }
            ranks[i] = Some(r);
        }
    }
    for s in Sublattice::BOTH {
        let idx: Vec<usize> = (0..data.len())
            .filter(|&i| data[i].tier == Tier::HighRes && data[i].sublattice == s && used(&data[i]))
            .collect();
        if idx.is_empty() {
            continue;
        }
        let mut fields: Vec<f64> = idx.iter().map(|&i| data[i].field_t).collect();
        fields.sort_by(f64::total_cmp);
        fields.dedup_by(|a, b| a.to_bits() == b.to_bits());
        let req = TrackRequest {
            fields: &fields,
            sublattice: s,
            with_magnons: settings.with_magnons,
            reference,
            window: settings.window(),
            margin: TRACK_MARGIN_GHZ,
        };
        let (branches, _) = track_branches(&sim, &req)?;
        let by_label: BTreeMap<&str, _> = branches.iter().map(|b| (b.label.as_str(), b)).collect();
        for &i in &idx {
            let d = &data[i];
            let k = fields.iter().position(|f| f.to_bits() == d.field_t.to_bits()).expect("field on grid");
            let rank = by_label
                .get(d.label.as_str())
                .and_then(|b| b.points.iter().find(|p| p.field_index == k))
                .map(|p| p.rank);
            match rank {
                Some(r) => ranks[i] = Some(r),
                None => {
                    let available: BTreeSet<&str> = branches
                        .iter()
                        .filter(|b| b.points.iter().any(|p| p.field_index == k))
                        .map(|b| b.label.as_str())
                        .collect();
                    return Err(Error::UnmatchedLabel {
                        label: format!("{} (sublattice {}, B = {} T)", d.label, s.label(), d.field_t),
                        available: available.into_iter().collect::<Vec<_>>().join(", "),
                    });
                }
            }
        }
    }
    Ok(BranchMatching { ranks })
}

/// Weighted residuals in GHz, one per used datum, in data order.
///
/// High-res: `weight · (model − measured)`. Low-res: the same scaled by
/// `1/√tier_ratio`.
pub fn residuals(
    params: &ModelParams,
    options: ModelOptions,
    data: &[TransitionDatum],
    matching: &BranchMatching,
    settings: &FitSettings,
) -> Result<Vec<f64>> {
    Ok(evaluate(params, options, data, matching, settings)?.into_iter().map(|(_, r)| r).collect())
}

/// (datum index, weighted residual) pairs.
fn evaluate(
    params: &ModelParams,
    options: ModelOptions,
    data: &[TransitionDatum],
    matching: &BranchMatching,
    settings: &FitSettings,
) -> Result<Vec<(usize, f64)>> {
    let sim = Simulator::new(params, options)?;
    let reference = reference_for(&sim, settings);
    let mut groups: BTreeMap<(Tier, Sublattice, u64), Vec<usize>> = BTreeMap::new();
    for (i, d) in data.iter().enumerate() {
        if matching.rank(i).is_some() {
            groups.entry((d.tier, d.sublattice, d.field_t.to_bits())).or_default().push(i);
        }
    }
    let low_scale = 1.0 / settings.tier_ratio.sqrt();
    let keys: Vec<_> = groups.into_iter().collect();
    let parts: Vec<Vec<(usize, f64)>> = keys
        .par_iter()
        .map(|((tier, s, bits), idx)| {
            let b = f64::from_bits(*bits);
            let magnons = settings.with_magnons && *tier == Tier::HighRes;
            let e = sim.energies(b, *s, magnons)?;
            Ok(idx
                .iter()
                .map(|&i| {
                    let d = &data[i];
                    let rank = matching.rank(i).expect("grouped");
                    let r = match tier {
                        Tier::HighRes => d.weight * (e[rank] - e[0] - reference - d.freq_ghz),
                        Tier::LowRes => low_scale * d.weight * (e[rank] - e[0] - d.freq_ghz),
                    };
                    (i, r)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<(usize, f64)> = parts.into_iter().flatten().collect();
    out.sort_by_key(|p| p.0);
    Ok(out)
}

/// Result of an optimization run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub params: ModelParams,
    pub free: Vec<String>,
    pub with_magnons: bool,
    pub initial_objective: f64,
    pub objective: f64,
    #[serde(rename = "rms_high_res_GHz")]
    pub rms_high_res_ghz: Option<f64>,
    #[serde(rename = "rms_low_res_cm1")]
    pub rms_low_res_cm1: Option<f64>,
    pub n_high_res: usize,
    pub n_low_res: usize,
    pub tier_ratio: f64,
    pub iterations: u64,
    pub evaluations: u64,
    pub converged: bool,
}

impl FitReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "fit ({} magnons): objective {:.6e} -> {:.6e}, {} iterations, converged: {}\n",
            if self.with_magnons { "with" } else { "without" },
            self.initial_objective,
            self.objective,
            self.iterations,
            self.converged
        ));
        if let Some(r) = self.rms_high_res_ghz {
            s.push_str(&format!("  high-res RMS {r:.4} GHz over {} points\n", self.n_high_res));
        }
        if let Some(r) = self.rms_low_res_cm1 {
            s.push_str(&format!("  low-res RMS {r:.3} cm-1 over {} points\n", self.n_low_res));
        }
        for name in &self.free {
            s.push_str(&format!("  {name} = {}\n", self.params.get(name).unwrap_or(f64::NAN)));
        }
        s
    }
}

#[derive(Clone)]
struct Problem<'a> {
    base: &'a ModelParams,
    options: ModelOptions,
    data: &'a [TransitionDatum],
    matching: &'a BranchMatching,
    settings: &'a FitSettings,
    bounds: Vec<(f64, f64)>,
    evaluations: &'a AtomicU64,
}

impl Problem<'_> {
    fn project(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.bounds).map(|(v, (lo, hi))| v.clamp(*lo, *hi)).collect()
    }

    fn params_at(&self, x: &[f64]) -> Result<ModelParams> {
        let mut p = self.base.clone();
        for (name, v) in self.settings.free.iter().zip(self.project(x)) {
            p.set(name, v)?;
        }
        Ok(p)
    }

    fn residuals(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let p = self.params_at(x)?;
        residuals(&p, self.options, self.data, self.matching, self.settings)
    }

    fn objective(&self, x: &[f64]) -> f64 {
        match self.residuals(x) {
            Ok(r) => r.iter().map(|v| v * v).sum(),
            Err(_) => f64::INFINITY,
        }
    }
}

impl CostFunction for Problem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.objective(x))
    }
}

/// Initial simplex edge for each parameter.
fn simplex_step(name: &str, value: f64) -> f64 {
    let absolute: f64 = match name {
        "theta" => 0.5,
        "Ecorr" => 0.5,
        "Bex" | "Bdip" => 0.02,
        "B0Gd" => 0.05,
        "Jeff" => 0.02,
        _ => 0.0,
    };
    absolute.max(0.05 * value.abs()).max(1e-3)
}

/// Bounded simplex descent on the weighted sum of squared residuals, with an
/// optional Levenberg–Marquardt polish. The returned point never has a larger
/// objective than the start and always lies within bounds.
pub fn optimize(
    initial: &ModelParams,
    options: ModelOptions,
    data: &[TransitionDatum],
    settings: &FitSettings,
) -> Result<FitReport> {
    initial.validate()?;
    let mut seen = BTreeSet::new();
    for name in &settings.free {
        if !PARAM_NAMES.contains(&name.as_str()) {
            return Err(Error::InvalidArgument(format!("unknown parameter {name:?}")));
        }
        if !seen.insert(name) {
            return Err(Error::InvalidArgument(format!("parameter {name:?} listed twice")));
        }
    }
    if !(settings.tier_ratio > 0.0) {
        return Err(Error::InvalidArgument("tier_ratio must be positive".into()));
    }
    for d in data {
        d.validate()?;
    }
    let bounds: Vec<(f64, f64)> = settings.free.iter().map(|n| settings.bound(n)).collect();
    let x0: Vec<f64> = settings.free.iter().map(|n| initial.get(n).expect("checked")).collect();
    for ((name, v), (lo, hi)) in settings.free.iter().zip(&x0).zip(&bounds) {
        if !(lo <= hi) || *v < *lo || *v > *hi {
            return Err(Error::InvalidArgument(format!("start {name} = {v} outside bounds [{lo}, {hi}]")));
        }
    }
    let matching = match_branches(initial, options, data, settings)?;
    let used = (0..data.len()).filter(|&i| matching.rank(i).is_some()).count();
    if used == 0 {
        return Err(Error::Data("no usable data after masking".into()));
    }
    let counter = AtomicU64::new(0);
    let problem = Problem { base: initial, options, data, matching: &matching, settings, bounds, evaluations: &counter };
    let f0 = problem.objective(&x0);
    if !f0.is_finite() {
        return Err(Error::InvalidArgument("objective is not finite at the starting point".into()));
    }
    let mut best = x0.clone();
    let mut best_f = f0;
    let mut iterations = 0;
    // A perfect start has nothing left to improve.
    let mut converged = x0.is_empty() || f0 == 0.0;
    if !converged {
        let mut simplex = vec![x0.clone()];
        for (i, name) in settings.free.iter().enumerate() {
            let mut v = x0.clone();
            let step = simplex_step(name, x0[i]);
            let (lo, hi) = problem.bounds[i];
            v[i] = if x0[i] + step <= hi { x0[i] + step } else { (x0[i] - step).max(lo) };
            simplex.push(v);
        }
        let sd_tol = settings.tolerance * f0.max(f64::MIN_POSITIVE);
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(sd_tol)
            .map_err(|e| Error::InvalidArgument(format!("simplex: {e}")))?;
        let res = Executor::new(problem.clone(), solver)
            .configure(|s| s.max_iters(settings.max_iterations))
            .run()
            .map_err(|e| Error::FitFailure(format!("simplex: {e}")))?;
        let state = res.state();
        iterations = state.get_iter();
        if let Some(x) = state.get_best_param() {
            let fx = problem.objective(x);
            if fx < best_f {
                best = problem.project(x);
                best_f = fx;
            }
        }
        converged = matches!(
            state.get_termination_status(),
            TerminationStatus::Terminated(TerminationReason::SolverConverged)
        );
        if settings.polish {
            let res_fn = |x: &[f64]| problem.residuals(x).ok();
            let jac_fn = |x: &[f64]| lsq::central_jacobian(&res_fn, x, 1e-7);
            if let Ok(out) = lsq::minimize(&best, &res_fn, &jac_fn, LsqSettings { tol: 1e-12, patience: 30 }) {
                let x = problem.project(&out.params);
                let fx = problem.objective(&x);
                if fx <= best_f {
                    best = x;
                    best_f = fx;
                    converged |= out.converged;
                }
            }
        }
    }
    let evaluations = counter.load(Ordering::Relaxed);
    let params = problem.params_at(&best)?;
    let detail = evaluate(&params, options, data, &matching, settings)?;
    let low_scale = 1.0 / settings.tier_ratio.sqrt();
    let (mut hi_ss, mut lo_ss, mut n_hi, mut n_lo) = (0.0, 0.0, 0, 0);
    for (i, r) in &detail {
        let d = &data[*i];
        let raw = r / d.weight;
        match d.tier {
            Tier::HighRes => {
                hi_ss += raw * raw;
                n_hi += 1;
            }
            Tier::LowRes => {
                let cm = ghz_to_cm1(raw / low_scale);
                lo_ss += cm * cm;
                n_lo += 1;
            }
        }
    }
    Ok(FitReport {
        params,
        free: settings.free.clone(),
        with_magnons: settings.with_magnons,
        initial_objective: f0,
        objective: best_f,
        rms_high_res_ghz: (n_hi > 0).then(|| (hi_ss / n_hi as f64).sqrt()),
        rms_low_res_cm1: (n_lo > 0).then(|| (lo_ss / n_lo as f64).sqrt()),
        n_high_res: n_hi,
        n_low_res: n_lo,
        tier_ratio: settings.tier_ratio,
        iterations,
        evaluations,
        converged,
    })
}

/// Stage 1 without magnons, stage 2 with magnons started from stage 1.
pub fn two_stage_fit(
    initial: &ModelParams,
    options: ModelOptions,
    data: &[TransitionDatum],
    stage1: &FitSettings,
    stage2: &FitSettings,
) -> Result<(FitReport, FitReport)> {
    let first = optimize(initial, options, data, &FitSettings { with_magnons: false, ..stage1.clone() })?;
    let second = optimize(&first.params, options, data, &FitSettings { with_magnons: true, ..stage2.clone() })?;
    Ok((first, second))
}

/// Default free parameters of the two stages.
pub fn stage_free_params() -> (Vec<String>, Vec<String>) {
    let s1: Vec<String> = ["Bex", "Bdip", "theta", "Ecorr"].iter().map(|s| s.to_string()).collect();
    let mut s2 = s1.clone();
    s2.extend(["Jeff", "B0Gd"].iter().map(|s| s.to_string()));
    (s1, s2)
}

/// Branches from a sweep with magnons whose frequency differs from the
/// same-label branch without magnons by more than this are flagged `exclude`.
pub const MAGNON_DEVIATION_GHZ: f64 = 3.0;

/// Samples every branch of a sweep as high-res data with Gaussian noise of
/// standard deviation `noise` GHz. The reference used is recorded, as is the
/// seed. With magnons on, points that the magnon-free model cannot describe
/// (magnon-dressed labels, or shifts above [`MAGNON_DEVIATION_GHZ`]) are
/// flagged `exclude`.
pub fn synth_data(
    params: &ModelParams,
    options: ModelOptions,
    sweep: &SweepConfig,
    noise: f64,
    seed: u64,
) -> Result<TransitionSet> {
    if !(noise >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise must be non-negative, got {noise}")));
    }
    let sim = Simulator::new(params, options)?;
    let out = field_sweep(&sim, sweep)?;
    let bare = if sweep.with_magnons {
        let cfg = SweepConfig { with_magnons: false, reference: Some(out.reference_ghz), ..sweep.clone() };
        Some(field_sweep(&sim, &cfg)?.map)
    } else {
        None
    };
    let normal = Normal::new(0.0, noise).map_err(|e| Error::InvalidArgument(format!("noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::new();
    for (k, branch, point) in out.map.rows() {
        let exclude = match &bare {
            None => false,
            Some(m) => m
                .branch(&crate::spectrum::BranchKey::new(branch.sublattice, branch.label.clone()))
                .and_then(|b| b.at_field_index(k))
                .is_none_or(|p| (p.freq_ghz - point.freq_ghz).abs() > MAGNON_DEVIATION_GHZ),
        };
        let jitter = if noise > 0.0 { normal.sample(&mut rng) } else { 0.0 };
        data.push(TransitionDatum {
            field_t: out.map.fields[k],
            freq_ghz: point.freq_ghz + jitter,
            sublattice: branch.sublattice,
            label: branch.label.clone(),
            tier: Tier::HighRes,
            weight: 1.0,
            exclude,
        });
    }
    Ok(TransitionSet { data, reference_ghz: Some(out.reference_ghz), seed: Some(seed) })
}

/// Zero-field level energies above the ground level of sublattice 1 as
/// low-res data for the given ranks.
pub fn synth_levels(params: &ModelParams, options: ModelOptions, ranks: &[usize]) -> Result<Vec<TransitionDatum>> {
    let sim = Simulator::new(params, options)?;
    let e = sim.energies(0.0, Sublattice::One, false)?;
    ranks
        .iter()
        .map(|&r| {
            let v = e.get(r).ok_or_else(|| Error::InvalidArgument(format!("rank {r} out of range")))?;
            Ok(TransitionDatum {
                field_t: 0.0,
                freq_ghz: v - e[0],
                sublattice: Sublattice::One,
                label: format!("L{r}"),
                tier: Tier::LowRes,
                weight: 1.0,
                exclude: false,
            })
        })
        .collect()
}

/// Converts a low-res energy from cm⁻¹ to the GHz stored in a datum.
pub fn low_res_from_cm1(cm1: f64) -> f64 {
    cm1 * CM1_TO_GHZ
}
