//! Field sweeps, level tracking, magnetic-dipole line strengths and
//! avoided-crossing search.
//!
//! Transition frequencies are measured from the global ground level of each
//! sublattice and reported relative to a reference frequency.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::{HalfInt, OperatorMatrix, TensorPhase};
use crate::error::{Error, Result};
use crate::ion::{CorrectionMode, IonModel, IonOptions, ModelParams, Sublattice};
use crate::magnon::{compose, exchange_coupling, gadolinium_zeeman, lift_ion, MagnonSpace, Sublattice2Magnons};
use crate::SCHEMA_VERSION;

/// Eigenvalues ascending with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

const HERMITIAN_TOL: f64 = 1e-10;

fn check_hermitian(h: &OperatorMatrix) -> Result<()> {
    let err = h.hermiticity_error();
    if err > HERMITIAN_TOL {
        return Err(Error::InvalidArgument(format!("matrix is not Hermitian (relative error {err:.3e})")));
    }
    Ok(())
}

pub fn eigensolve(h: &OperatorMatrix) -> Result<Eigen> {
    check_hermitian(h)?;
    let n = h.dim();
    let eig = nalgebra::SymmetricEigen::new(h.data.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Ascending eigenvalues without eigenvectors.
pub fn eigenvalues(h: &OperatorMatrix) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    let mut v: Vec<f64> = h.data.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Crystal axis of a magnetic-dipole component.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    #[default]
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Sigma,
    Pi,
    #[default]
    Average,
}

impl FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma" => Ok(Polarization::Sigma),
            "pi" => Ok(Polarization::Pi),
            "average" => Ok(Polarization::Average),
            other => Err(Error::InvalidArgument(format!("unknown polarization {other:?} (sigma, pi, average)"))),
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::Sigma => "sigma",
            Polarization::Pi => "pi",
            Polarization::Average => "average",
        })
    }
}

/// Relative magnetic-dipole strength split into σ and π channels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LineStrength {
    pub sigma: f64,
    pub pi: f64,
}

impl LineStrength {
    pub fn channel(&self, p: Polarization) -> f64 {
        match p {
            Polarization::Sigma => self.sigma,
            Polarization::Pi => self.pi,
            Polarization::Average => 0.5 * (self.sigma + self.pi),
        }
    }

    pub fn total(&self) -> f64 {
        self.sigma + self.pi
    }
}

/// Cartesian components of `L + 2S` on some basis.
#[derive(Clone, Debug)]
pub struct MomentOperators {
    pub x: OperatorMatrix,
    pub y: OperatorMatrix,
    pub z: OperatorMatrix,
}

impl MomentOperators {
    pub fn component(&self, axis: Axis) -> &OperatorMatrix {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }
}

fn strengths_of(
    vectors: &DMatrix<Complex64>,
    ground: &nalgebra::DVector<Complex64>,
    moments: &MomentOperators,
    pi_axis: Axis,
) -> Vec<LineStrength> {
    let mut out = vec![LineStrength::default(); vectors.ncols()];
    for axis in Axis::ALL {
        let w = &moments.component(axis).data * ground;
        let amp = vectors.adjoint() * w;
        for (s, a) in out.iter_mut().zip(amp.iter()) {
            if axis == pi_axis {
                s.pi += a.norm_sqr();
            } else {
                s.sigma += a.norm_sqr();
            }
        }
    }
    out
}

/// `|⟨f|(L+2S)_a|0⟩|²` from eigenvector `ground` to every eigenvector, with the
/// `pi_axis` component in the π channel and the other two in σ. The entry for
/// the ground state itself is zero.
pub fn transition_strengths(eigen: &Eigen, ground: usize, moments: &MomentOperators, pi_axis: Axis) -> Vec<LineStrength> {
    let g = eigen.vectors.column(ground).into_owned();
    let mut out = strengths_of(&eigen.vectors, &g, moments, pi_axis);
    out[ground] = LineStrength::default();
    out
}

/// Options of the model that are not fitted parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelOptions {
    pub correction_mode: CorrectionMode,
    pub tensor_phase: TensorPhase,
    pub sublattice2_magnons: Sublattice2Magnons,
    /// Dipole component reported in the π channel.
    pub pi_axis: Axis,
}

impl ModelOptions {
    pub fn ion(&self) -> IonOptions {
        IonOptions { correction_mode: self.correction_mode, tensor_phase: self.tensor_phase }
    }
}

/// Dominant product-state character of an eigenvector: ion level (energy rank
/// of the bare erbium Hamiltonian at the same field) and magnon number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Character {
    pub ion_level: usize,
    pub magnons: usize,
    pub weight: f64,
}

impl Character {
    pub fn label(&self) -> String {
        branch_label(self.ion_level, self.magnons)
    }
}

/// `L16` for ion level 16, `L16+1` for the same level with one magnon.
pub fn branch_label(ion_level: usize, magnons: usize) -> String {
    if magnons == 0 {
        format!("L{ion_level}")
    } else {
        format!("L{ion_level}+{magnons}")
    }
}

/// Erbium (optionally with magnons) Hamiltonian factory for one parameter set.
#[derive(Clone, Debug)]
pub struct Simulator {
    ion: IonModel,
    options: ModelOptions,
    space: MagnonSpace,
    exchange: [OperatorMatrix; 2],
    ion_moments: MomentOperators,
    composite_moments: MomentOperators,
    first_excited: usize,
    default_reference: f64,
}

impl Simulator {
    pub fn new(params: &ModelParams, options: ModelOptions) -> Result<Self> {
        let ion = IonModel::new(params, options.ion())?;
        Self::from_ion_model(ion, options)
    }

    pub fn from_ion_model(ion: IonModel, options: ModelOptions) -> Result<Self> {
        let params = ion.params().clone();
        let ops = ion.operators().clone();
        let space = MagnonSpace::new(params.n_gd)?;
        let exchange = Sublattice::BOTH.map(|s| exchange_coupling(&params, &ops, space, s, options.sublattice2_magnons));
        let ion_moments = MomentOperators { x: ops.moment_x(), y: ops.moment_y(), z: ops.moment_z() };
        let composite_moments = MomentOperators {
            x: lift_ion(&ion_moments.x, space),
            y: lift_ion(&ion_moments.y, space),
            z: lift_ion(&ion_moments.z, space),
        };
        let mut sim = Simulator {
            ion,
            options,
            space,
            exchange,
            ion_moments,
            composite_moments,
            first_excited: 0,
            default_reference: 0.0,
        };
        let eig = eigensolve(&sim.ion.hamiltonian(0.0, Sublattice::One))?;
        let basis = &sim.ion.operators().basis;
        let target = basis
            .j_list()
            .iter()
            .position(|&j| j == HalfInt::from_twice(13))
            .ok_or_else(|| Error::InvalidArgument("basis has no J = 13/2 block".into()))?;
        let first = (0..eig.values.len())
            .find(|&c| {
                let v: Vec<Complex64> = eig.vectors.column(c).iter().copied().collect();
                let w = basis.j_weights(&v);
                w.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i) == Some(target)
            })
            .ok_or_else(|| Error::InvalidArgument("no J = 13/2 level found".into()))?;
        sim.first_excited = first;
        sim.default_reference = eig.values[first] - eig.values[0];
        Ok(sim)
    }

    pub fn params(&self) -> &ModelParams {
        self.ion.params()
    }

    pub fn options(&self) -> ModelOptions {
        self.options
    }

    pub fn ion_model(&self) -> &IonModel {
        &self.ion
    }

    pub fn magnon_space(&self) -> MagnonSpace {
        self.space
    }

    /// Energy rank of the lowest `⁴I₁₃/₂` level at zero field (sublattice 1).
    pub fn first_excited_level(&self) -> usize {
        self.first_excited
    }

    /// Zero-field frequency of the lowest `⁴I₁₃/₂` transition of sublattice 1
    /// without magnons, GHz.
    pub fn default_reference(&self) -> f64 {
        self.default_reference
    }

    pub fn hamiltonian(&self, b: f64, s: Sublattice, with_magnons: bool) -> Result<OperatorMatrix> {
        let h_er = self.ion.hamiltonian(b, s);
        if !with_magnons {
            return Ok(h_er);
        }
        let params = self.params();
        let h_gd = gadolinium_zeeman(b, params.theta, params, self.space, s, self.options.sublattice2_magnons);
        compose(&h_er, &h_gd, &self.exchange[s.index()])
    }

    pub fn solve(&self, b: f64, s: Sublattice, with_magnons: bool) -> Result<Eigen> {
        eigensolve(&self.hamiltonian(b, s, with_magnons)?)
    }

    pub fn energies(&self, b: f64, s: Sublattice, with_magnons: bool) -> Result<Vec<f64>> {
        eigenvalues(&self.hamiltonian(b, s, with_magnons)?)
    }

    pub fn moments(&self, with_magnons: bool) -> &MomentOperators {
        if with_magnons {
            &self.composite_moments
        } else {
            &self.ion_moments
        }
    }

    /// Characters of the eigenvector columns `indices` of `eigen`, computed at field `b`.
    pub fn characters(
        &self,
        b: f64,
        s: Sublattice,
        eigen: &Eigen,
        indices: &[usize],
        with_magnons: bool,
    ) -> Result<Vec<Character>> {
        if !with_magnons {
            return Ok(indices.iter().map(|&i| Character { ion_level: i, magnons: 0, weight: 1.0 }).collect());
        }
        let ion = eigensolve(&self.ion.hamiltonian(b, s))?;
        let dm = self.space.dim();
        let u = ion.vectors.kronecker(&DMatrix::<Complex64>::identity(dm, dm));
        let cols = eigen.vectors.select_columns(indices);
        let proj = u.adjoint() * cols;
        Ok((0..indices.len())
            .map(|c| {
                let (best, weight) = proj
                    .column(c)
                    .iter()
                    .map(|z| z.norm_sqr())
                    .enumerate()
                    .fold((0, -1.0), |acc, (i, w)| if w > acc.1 { (i, w) } else { acc });
                Character { ion_level: best / dm, magnons: best % dm, weight }
            })
            .collect())
    }
}

/// Greedy overlap match of one eigenvector column.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelMatch {
    pub previous: usize,
    pub overlap: f64,
}

/// Overlaps below this never link two levels.
const LINK_MIN: f64 = 0.1;
/// Links weaker than this are reported as tracking losses.
pub const TRACKING_WARN: f64 = 0.5;

/// Matches every column of `current` to a column of `previous` by descending
/// `|⟨prev|curr⟩|²`, ties broken by lower previous index, then lower current index.
/// Columns with no partner above a small floor are unmatched.
pub fn track_levels(previous: &DMatrix<Complex64>, current: &DMatrix<Complex64>) -> Vec<Option<LevelMatch>> {
    let ov = previous.adjoint() * current;
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..ov.nrows() {
        for j in 0..ov.ncols() {
            let o = ov[(i, j)].norm_sqr();
            if o >= LINK_MIN {
                pairs.push((o, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_prev = vec![false; ov.nrows()];
    let mut out = vec![None; ov.ncols()];
    for (o, i, j) in pairs {
        if used_prev[i] || out[j].is_some() {
            continue;
        }
        used_prev[i] = true;
        out[j] = Some(LevelMatch { previous: i, overlap: o });
    }
    out
}

/// Convenience form of [`track_levels`] for full, equally sized eigenbases.
pub fn tracking_permutation(previous: &DMatrix<Complex64>, current: &DMatrix<Complex64>) -> Result<Vec<usize>> {
    if previous.shape() != current.shape() {
        return Err(Error::InvalidArgument("eigenbases differ in shape".into()));
    }
    let links = track_levels(previous, current);
    let mut free: Vec<usize> = {
        let used: BTreeSet<usize> = links.iter().flatten().map(|m| m.previous).collect();
        (0..previous.ncols()).filter(|i| !used.contains(i)).collect()
    };
    free.reverse();
    Ok(links
        .into_iter()
        .map(|m| match m {
            Some(m) => m.previous,
            None => free.pop().expect("counts match"),
        })
        .collect())
}

/// Sweep settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub b_min: f64,
    pub b_max: f64,
    pub steps: usize,
    #[serde(rename = "window_min_GHz")]
    pub window_min_ghz: f64,
    #[serde(rename = "window_max_GHz")]
    pub window_max_ghz: f64,
    pub sublattices: Vec<Sublattice>,
    pub with_magnons: bool,
    pub polarization: Polarization,
    /// Reference frequency in GHz; `None` uses [`Simulator::default_reference`].
    pub reference: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            b_min: 0.0,
            b_max: 1.0,
            steps: 201,
            window_min_ghz: -150.0,
            window_max_ghz: 250.0,
            sublattices: Sublattice::BOTH.to_vec(),
            with_magnons: false,
            polarization: Polarization::Average,
            reference: None,
        }
    }
}

/// Largest applied field accepted by a sweep, tesla.
pub const MAX_FIELD: f64 = 3.0;

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        for b in [self.b_min, self.b_max] {
            if !b.is_finite() || b.abs() > MAX_FIELD {
                return Err(Error::InvalidArgument(format!("field {b} T outside [-{MAX_FIELD}, {MAX_FIELD}]")));
            }
        }
        if self.steps < 2 {
            return Err(Error::InvalidArgument(format!("steps = {} (need at least 2)", self.steps)));
        }
        if !(self.window_min_ghz < self.window_max_ghz) {
            return Err(Error::InvalidArgument(format!(
                "empty window [{}, {}] GHz",
                self.window_min_ghz, self.window_max_ghz
            )));
        }
        if self.sublattices.is_empty() {
            return Err(Error::InvalidArgument("no sublattices requested".into()));
        }
        if let Some(r) = self.reference {
            if !r.is_finite() {
                return Err(Error::InvalidArgument("reference must be finite".into()));
            }
        }
        Ok(())
    }

    /// Field points from `b_min` to `b_max` inclusive, in sweep order.
    pub fn fields(&self) -> Vec<f64> {
        linspace(self.b_min, self.b_max, self.steps)
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// One sample of a branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchPoint {
    /// Index into [`SpectralMap::fields`].
    pub field_index: usize,
    pub freq_ghz: f64,
    pub strength: LineStrength,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub sublattice: Sublattice,
    pub label: String,
    pub points: Vec<BranchPoint>,
}

impl Branch {
    pub fn at_field_index(&self, k: usize) -> Option<&BranchPoint> {
        self.points.iter().find(|p| p.field_index == k)
    }
}

/// Labelled transition-frequency traces over a field grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpectralMap {
    pub fields: Vec<f64>,
    /// Sorted by sublattice, then label.
    pub branches: Vec<Branch>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SweepWarning {
    /// The best overlap link of an in-window level fell below [`TRACKING_WARN`].
    TrackingLoss { sublattice: Sublattice, field: f64, label: String, overlap: f64 },
    /// No level in the window at this field.
    EmptyWindow { sublattice: Sublattice, field: f64 },
}

impl fmt::Display for SweepWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepWarning::TrackingLoss { sublattice, field, label, overlap } => write!(
                f,
                "tracking loss at B = {field} T, sublattice {}: branch {label} overlap {overlap:.3}",
                sublattice.label()
            ),
            SweepWarning::EmptyWindow { sublattice, field } => {
                write!(f, "no levels in window at B = {field} T, sublattice {}", sublattice.label())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub map: SpectralMap,
    pub warnings: Vec<SweepWarning>,
    pub reference_ghz: f64,
}

/// Levels within this distance of the window are tracked too, so branches
/// entering the window already carry a label.
pub(crate) const TRACK_MARGIN_GHZ: f64 = 100.0;

struct FieldSolution {
    ranks: Vec<usize>,
    freqs: Vec<f64>,
    strengths: Vec<LineStrength>,
    characters: Vec<Character>,
    vectors: DMatrix<Complex64>,
}

#[derive(Clone, Debug)]
pub(crate) struct TrackedPoint {
    pub field_index: usize,
    pub rank: usize,
    pub freq_ghz: f64,
    pub strength: LineStrength,
}

#[derive(Clone, Debug)]
pub(crate) struct TrackedBranch {
    pub label: String,
    pub points: Vec<TrackedPoint>,
}

pub(crate) struct TrackRequest<'a> {
    pub fields: &'a [f64],
    pub sublattice: Sublattice,
    pub with_magnons: bool,
    pub reference: f64,
    pub window: (f64, f64),
    pub margin: f64,
}

fn solve_field(sim: &Simulator, b: f64, req: &TrackRequest<'_>) -> Result<FieldSolution> {
    let eig = sim.solve(b, req.sublattice, req.with_magnons)?;
    let e0 = eig.values[0];
    let (lo, hi) = (req.window.0 - req.margin, req.window.1 + req.margin);
    let ranks: Vec<usize> = (1..eig.values.len())
        .filter(|&i| {
            let f = eig.values[i] - e0 - req.reference;
            f >= lo && f <= hi
        })
        .collect();
    let freqs = ranks.iter().map(|&i| eig.values[i] - e0 - req.reference).collect();
    let vectors = eig.vectors.select_columns(&ranks);
    let ground = eig.vectors.column(0).into_owned();
    let strengths = strengths_of(&vectors, &ground, sim.moments(req.with_magnons), sim.options.pi_axis);
    let characters = sim.characters(b, req.sublattice, &eig, &ranks, req.with_magnons)?;
    Ok(FieldSolution { ranks, freqs, strengths, characters, vectors })
}

/// Tracks levels over `fields` for one sublattice; returns branches whose
/// points carry the eigenvalue rank, together with tracking warnings.
pub(crate) fn track_branches(sim: &Simulator, req: &TrackRequest<'_>) -> Result<(Vec<TrackedBranch>, Vec<SweepWarning>)> {
    let (grid, requested) = refine(req.fields);
    let solutions: Vec<FieldSolution> = grid.par_iter().map(|&b| solve_field(sim, b, req)).collect::<Result<Vec<_>>>()?;
    let in_window = |f: f64| f >= req.window.0 && f <= req.window.1;
    let mut branches: Vec<TrackedBranch> = Vec::new();
    let mut used_labels: BTreeSet<String> = BTreeSet::new();
    let mut warnings = Vec::new();
    let mut new_branch = |ch: &Character, branches: &mut Vec<TrackedBranch>| -> usize {
        let base = ch.label();
        let mut label = base.clone();
        let mut n = 2;
        while used_labels.contains(&label) {
            label = format!("{base}#{n}");
            n += 1;
        }
        used_labels.insert(label.clone());
        branches.push(TrackedBranch { label, points: Vec::new() });
        branches.len() - 1
    };
    let mut active: Vec<usize> = Vec::new();
    for (g, sol) in solutions.iter().enumerate() {
        let links = if g == 0 { vec![None; sol.ranks.len()] } else { track_levels(&solutions[g - 1].vectors, &sol.vectors) };
        let keep = requested[g];
        let mut now = Vec::with_capacity(sol.ranks.len());
        let mut any_in_window = false;
        for (c, link) in links.iter().enumerate() {
            let idx = match link {
                Some(m) => active[m.previous],
                None => new_branch(&sol.characters[c], &mut branches),
            };
            let freq = sol.freqs[c];
            if in_window(freq) {
                any_in_window = true;
                let overlap = link.map(|m| m.overlap);
                if g > 0 && overlap.unwrap_or(0.0) < TRACKING_WARN {
                    warnings.push(SweepWarning::TrackingLoss {
                        sublattice: req.sublattice,
                        field: grid[g],
                        label: branches[idx].label.clone(),
                        overlap: overlap.unwrap_or(0.0),
                    });
                }
            }
            if let Some(k) = keep {
                branches[idx].points.push(TrackedPoint {
                    field_index: k,
                    rank: sol.ranks[c],
                    freq_ghz: freq,
                    strength: sol.strengths[c],
                });
            }
            now.push(idx);
        }
        if let (Some(k), false) = (keep, any_in_window) {
            warnings.push(SweepWarning::EmptyWindow { sublattice: req.sublattice, field: req.fields[k] });
        }
        active = now;
    }
    branches.retain(|b| !b.points.is_empty());
    Ok((branches, warnings))
}

/// Largest field step used for tracking, tesla. Coarser requests are
/// subdivided so that branch identities do not depend on the sampling.
pub const TRACK_STEP: f64 = 0.005;

/// Tracking grid through `fields`, with the requested index of each grid point.
fn refine(fields: &[f64]) -> (Vec<f64>, Vec<Option<usize>>) {
    let mut grid = Vec::with_capacity(fields.len());
    let mut requested = Vec::with_capacity(fields.len());
    for (k, &b) in fields.iter().enumerate() {
        if k > 0 {
            let a = fields[k - 1];
            let pieces = ((b - a).abs() / TRACK_STEP).ceil() as usize;
            for i in 1..pieces {
                grid.push(a + (b - a) * i as f64 / pieces as f64);
                requested.push(None);
            }
        }
        grid.push(b);
        requested.push(Some(k));
    }
    (grid, requested)
}

/// Sweeps the applied field and collects labelled in-window transitions.
///
/// Labels come from the dominant character of each level where it is first
/// tracked. Field points are solved in parallel; tracking runs afterwards in
/// sweep order.
pub fn field_sweep(sim: &Simulator, config: &SweepConfig) -> Result<SweepOutput> {
    config.validate()?;
    let fields = config.fields();
    let reference = config.reference.unwrap_or(sim.default_reference());
    let window = (config.window_min_ghz, config.window_max_ghz);
    let mut branches = Vec::new();
    let mut warnings = Vec::new();
    let sublattices: BTreeSet<Sublattice> = config.sublattices.iter().copied().collect();
    for s in sublattices {
        let req = TrackRequest {
            fields: &fields,
            sublattice: s,
            with_magnons: config.with_magnons,
            reference,
            window,
            margin: TRACK_MARGIN_GHZ,
        };
        let (tracked, warn) = track_branches(sim, &req)?;
        warnings.extend(warn);
        for t in tracked {
            let points: Vec<BranchPoint> = t
                .points
                .iter()
                .filter(|p| p.freq_ghz >= window.0 && p.freq_ghz <= window.1)
                .map(|p| BranchPoint { field_index: p.field_index, freq_ghz: p.freq_ghz, strength: p.strength })
                .collect();
            if !points.is_empty() {
                branches.push(Branch { sublattice: s, label: t.label, points });
            }
        }
    }
    let mut map = SpectralMap { fields, branches };
    map.normalize();
    Ok(SweepOutput { map, warnings, reference_ghz: reference })
}

/// Column names of the spectral-map CSV.
pub const MAP_HEADER: [&str; 6] = ["field_T", "sublattice", "branch_label", "freq_GHz", "strength_sigma", "strength_pi"];

/// Writes `# schema_version=N` as the first line of an output file.
pub fn write_schema_line<W: Write>(w: &mut W) -> Result<()> {
    writeln!(w, "# schema_version={SCHEMA_VERSION}")?;
    Ok(())
}

/// Identifies a branch within a map.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BranchKey {
    pub sublattice: Sublattice,
    pub label: String,
}

impl BranchKey {
    pub fn new(sublattice: Sublattice, label: impl Into<String>) -> Self {
        BranchKey { sublattice, label: label.into() }
    }
}

impl SpectralMap {
    fn normalize(&mut self) {
        self.branches.sort_by(|a, b| (a.sublattice, &a.label).cmp(&(b.sublattice, &b.label)));
        for b in &mut self.branches {
            b.points.sort_by_key(|p| p.field_index);
        }
    }

    pub fn branch(&self, key: &BranchKey) -> Option<&Branch> {
        self.branches.iter().find(|b| b.sublattice == key.sublattice && b.label == key.label)
    }

    pub fn available_labels(&self) -> String {
        self.branches
            .iter()
            .map(|b| format!("{}:{}", b.sublattice.label(), b.label))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Number of transitions reported at field index `k`.
    pub fn count_at(&self, k: usize) -> usize {
        self.branches.iter().filter(|b| b.at_field_index(k).is_some()).count()
    }

    /// Rows in export order: field-major, then sublattice, then label.
    pub fn rows(&self) -> Vec<(usize, &Branch, &BranchPoint)> {
        let mut rows: Vec<(usize, &Branch, &BranchPoint)> =
            self.branches.iter().flat_map(|b| b.points.iter().map(move |p| (p.field_index, b, p))).collect();
        rows.sort_by(|a, b| (a.0, a.1.sublattice, &a.1.label).cmp(&(b.0, b.1.sublattice, &b.1.label)));
        rows
    }

    pub fn export_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write_schema_line(&mut w)?;
        let grid: Vec<String> = self.fields.iter().map(|b| b.to_string()).collect();
        writeln!(w, "# fields_T={}", grid.join(" "))?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(MAP_HEADER)?;
        for (k, b, p) in self.rows() {
            csv.write_record([
                self.fields[k].to_string(),
                b.sublattice.label().to_string(),
                b.label.clone(),
                p.freq_ghz.to_string(),
                p.strength.sigma.to_string(),
                p.strength.pi.to_string(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn export_path(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.export_csv(std::io::BufWriter::new(f))
    }

    /// Long-format plot data: one row per branch sample with the selected channel.
    pub fn write_plot_data<W: Write>(&self, mut w: W, polarization: Polarization) -> Result<()> {
        write_schema_line(&mut w)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["series", "field_T", "freq_GHz", &format!("strength_{polarization}")])?;
        for b in &self.branches {
            let series = format!("s{}:{}", b.sublattice.label(), b.label);
            for p in &b.points {
                csv.write_record([
                    series.clone(),
                    self.fields[p.field_index].to_string(),
                    p.freq_ghz.to_string(),
                    p.strength.channel(polarization).to_string(),
                ])?;
            }
        }
        csv.flush()?;
        Ok(())
    }

    pub fn load_csv<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut fields: Vec<f64> = Vec::new();
        let mut have_grid = false;
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some(rest) = line.strip_prefix("# fields_T=") {
                have_grid = true;
                for tok in rest.split_whitespace() {
                    fields.push(parse_f64(tok, "fields_T")?);
                }
            }
        }
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != MAP_HEADER {
            return Err(Error::Data(format!("unexpected header {header:?}, expected {MAP_HEADER:?}")));
        }
        let mut grouped: BTreeMap<(Sublattice, String), Vec<BranchPoint>> = BTreeMap::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = n + 2;
            let b = parse_f64(&rec[0], &format!("field_T on row {row}"))?;
            let k = match fields.iter().position(|&x| x.to_bits() == b.to_bits()) {
                Some(k) => k,
                None if !have_grid => {
                    fields.push(b);
                    fields.len() - 1
                }
                None => return Err(Error::Data(format!("row {row}: field {b} T not on the declared grid"))),
            };
            let s: u8 = rec[1].trim().parse().map_err(|_| Error::Data(format!("row {row}: bad sublattice {:?}", &rec[1])))?;
            let point = BranchPoint {
                field_index: k,
                freq_ghz: parse_f64(&rec[3], &format!("freq_GHz on row {row}"))?,
                strength: LineStrength {
                    sigma: parse_f64(&rec[4], &format!("strength_sigma on row {row}"))?,
                    pi: parse_f64(&rec[5], &format!("strength_pi on row {row}"))?,
                },
            };
            grouped.entry((Sublattice::from_label(s)?, rec[2].to_string())).or_default().push(point);
        }
        let branches = grouped
            .into_iter()
            .map(|((sublattice, label), points)| Branch { sublattice, label, points })
            .collect();
        let mut map = SpectralMap { fields, branches };
        map.normalize();
        Ok(map)
    }

    pub fn load_path(path: &Path) -> Result<Self> {
        Self::load_csv(std::fs::File::open(path)?)
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Data(format!("{what}: cannot parse {s:?} as a number")))?;
    if !v.is_finite() {
        return Err(Error::Data(format!("{what}: non-finite value {s:?}")));
    }
    Ok(v)
}

/// Location and size of the closest approach of two branches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AvoidedCrossing {
    pub b_star: f64,
    pub gap_ghz: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CrossingOutcome {
    Crossing(AvoidedCrossing),
    /// The separation has no interior minimum; its smallest sampled value is given.
    NoCrossing { min_separation: f64, at_field: f64 },
}

impl CrossingOutcome {
    pub fn crossing(&self) -> Option<AvoidedCrossing> {
        match self {
            CrossingOutcome::Crossing(c) => Some(*c),
            CrossingOutcome::NoCrossing { .. } => None,
        }
    }
}

/// Smallest interior local minimum of `|f_a − f_b|` over the common fields of
/// two branches, refined by a parabola through the sampled minimum and its
/// neighbours.
pub fn find_avoided_crossing(map: &SpectralMap, a: &BranchKey, b: &BranchKey) -> Result<CrossingOutcome> {
    let get = |k: &BranchKey| {
        map.branch(k).ok_or_else(|| Error::UnmatchedLabel {
            label: format!("{}:{}", k.sublattice.label(), k.label),
            available: map.available_labels(),
        })
    };
    let (ba, bb) = (get(a)?, get(b)?);
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for pa in &ba.points {
        if let Some(pb) = bb.at_field_index(pa.field_index) {
            samples.push((map.fields[pa.field_index], (pa.freq_ghz - pb.freq_ghz).abs()));
        }
    }
    if samples.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "branches {} and {} share {} field points, need at least 3",
            a.label,
            b.label,
            samples.len()
        )));
    }
    samples.sort_by(|x, y| x.0.total_cmp(&y.0));
    let interior = (1..samples.len() - 1)
        .filter(|&i| {
            let (l, c, r) = (samples[i - 1].1, samples[i].1, samples[i + 1].1);
            c <= l && c <= r && (c < l || c < r)
        })
        .min_by(|&x, &y| samples[x].1.total_cmp(&samples[y].1).then(x.cmp(&y)));
    let Some(i) = interior else {
        let &(at_field, min_separation) =
            samples.iter().min_by(|x, y| x.1.total_cmp(&y.1)).expect("non-empty");
        return Ok(CrossingOutcome::NoCrossing { min_separation, at_field });
    };
    let (x0, y0) = samples[i - 1];
    let (x1, y1) = samples[i];
    let (x2, y2) = samples[i + 1];
    let refined = parabola_vertex((x0, y0), (x1, y1), (x2, y2))
        .filter(|&(x, y)| x > x0 && x < x2 && y <= y1 && y >= 0.0)
        .unwrap_or((x1, y1));
    Ok(CrossingOutcome::Crossing(AvoidedCrossing { b_star: refined.0, gap_ghz: refined.1 }))
}

fn parabola_vertex(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> Option<(f64, f64)> {
    let (x0, y0) = p0;
    let (x1, y1) = p1;
    let (x2, y2) = p2;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a > 0.0) {
        return None;
    }
    let b = d01 - a * (x0 + x1);
    let xv = -b / (2.0 * a);
    let yv = y1 + (xv - x1) * (d01 + a * (xv - x0));
    Some((xv, yv))
}

/// Labels of the branches that meet at the one-magnon crossing: the second
/// `⁴I₁₃/₂` level without magnons and the first one with a single magnon.
pub fn one_magnon_pair(sim: &Simulator) -> (String, String) {
    let first = sim.first_excited_level();
    (branch_label(first + 1, 0), branch_label(first, 1))
}
