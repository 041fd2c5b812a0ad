//! The erbium Hamiltonian on the `⁴I` term: free ion, crystal field, Zeeman,
//! static gadolinium mean field and the projective `⁴I₁₃/₂` correction.
//!
//! All returned matrices are in GHz. Parameters enter in the units of the
//! fitted parameter set (cm⁻¹, tesla, degrees) and are converted here.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::angular::{
    orbital_operator, single_electron_c, spin_operator, tensor_operator, AngularBasis, BasisTag, Component,
    HalfInt, OperatorMatrix, ReducedElements, TensorPhase, Units,
};
use crate::constants::{cm1_to_ghz, MU_B_OVER_H};
use crate::error::{Error, Result};
use crate::spectrum::eigensolve;

/// Largest field misalignment from the c axis that a parameter set may carry, degrees.
pub const MAX_MISALIGNMENT_DEG: f64 = 10.0;

/// Largest magnon truncation supported.
pub const MAX_N_GD: usize = 20;

/// Per-J energy offsets in cm⁻¹, serialized as `{"13/2": 630.0}`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ManifoldOffsets(pub BTreeMap<HalfInt, f64>);

impl ManifoldOffsets {
    pub fn get(&self, j: HalfInt) -> f64 {
        self.0.get(&j).copied().unwrap_or(0.0)
    }
}

impl Serialize for ManifoldOffsets {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let m: BTreeMap<String, f64> = self.0.iter().map(|(j, v)| (j.to_string(), *v)).collect();
        m.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ManifoldOffsets {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let m = BTreeMap::<String, f64>::deserialize(de)?;
        let mut out = BTreeMap::new();
        for (k, v) in m {
            let j: HalfInt = k.parse().map_err(serde::de::Error::custom)?;
            out.insert(j, v);
        }
        Ok(ManifoldOffsets(out))
    }
}

fn default_g_gd() -> f64 {
    2.0
}

fn default_n_gd() -> usize {
    2
}

/// Physical model parameters, keyed by their conventional names.
///
/// Energies in cm⁻¹, fields in tesla, `theta` in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "F2")]
    pub f2: f64,
    #[serde(rename = "F4")]
    pub f4: f64,
    #[serde(rename = "F6")]
    pub f6: f64,
    pub zeta: f64,
    #[serde(rename = "B20")]
    pub b20: f64,
    #[serde(rename = "B40")]
    pub b40: f64,
    #[serde(rename = "B60")]
    pub b60: f64,
    #[serde(rename = "B44")]
    pub b44: f64,
    #[serde(rename = "B64")]
    pub b64: f64,
    #[serde(rename = "Ecorr")]
    pub e_corr: f64,
    #[serde(rename = "Bex")]
    pub b_ex: f64,
    #[serde(rename = "Bdip")]
    pub b_dip: f64,
    #[serde(rename = "B0Gd")]
    pub b0_gd: f64,
    #[serde(rename = "Jeff")]
    pub j_eff: f64,
    pub theta: f64,
    #[serde(rename = "gGd", default = "default_g_gd")]
    pub g_gd: f64,
    #[serde(rename = "NGd", default = "default_n_gd")]
    pub n_gd: usize,
    #[serde(default)]
    pub manifold_offsets: ManifoldOffsets,
}

/// Names accepted by [`ModelParams::get`] and [`ModelParams::set`].
pub const PARAM_NAMES: [&str; 17] = [
    "E0", "F2", "F4", "F6", "zeta", "B20", "B40", "B60", "B44", "B64", "Ecorr", "Bex", "Bdip", "B0Gd", "Jeff",
    "theta", "gGd",
];

impl ModelParams {
    /// Fitted parameter set for Er³⁺ in antiferromagnetic GdVO₄.
    pub fn er_gdvo4() -> Self {
        ModelParams {
            e0: 35539.9,
            f2: 97123.2,
            f4: 66243.0,
            f6: 54048.9,
            zeta: 2362.9,
            b20: -93.0,
            b40: 316.9,
            b60: -608.6,
            b44: 768.4,
            b64: -44.9,
            e_corr: -7.0,
            b_ex: -0.28,
            b_dip: 0.32,
            b0_gd: -1.18,
            j_eff: -0.38,
            theta: 6.8,
            g_gd: 2.0,
            n_gd: 2,
            manifold_offsets: ManifoldOffsets::default(),
        }
    }

    /// Every parameter zero, `gGd = 2`, `NGd = 2`.
    pub fn zero() -> Self {
        ModelParams {
            e0: 0.0,
            f2: 0.0,
            f4: 0.0,
            f6: 0.0,
            zeta: 0.0,
            b20: 0.0,
            b40: 0.0,
            b60: 0.0,
            b44: 0.0,
            b64: 0.0,
            e_corr: 0.0,
            b_ex: 0.0,
            b_dip: 0.0,
            b0_gd: 0.0,
            j_eff: 0.0,
            theta: 0.0,
            g_gd: 2.0,
            n_gd: 2,
            manifold_offsets: ManifoldOffsets::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = PARAM_NAMES.iter().all(|n| self.get(n).unwrap().is_finite())
            && self.manifold_offsets.0.values().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        if self.theta.abs() > MAX_MISALIGNMENT_DEG {
            return Err(Error::InvalidArgument(format!(
                "theta = {} deg exceeds the {MAX_MISALIGNMENT_DEG} deg misalignment bound",
                self.theta
            )));
        }
        if self.n_gd == 0 || self.n_gd > MAX_N_GD {
            return Err(Error::InvalidArgument(format!("NGd = {} outside 1..={MAX_N_GD}", self.n_gd)));
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "E0" => self.e0,
            "F2" => self.f2,
            "F4" => self.f4,
            "F6" => self.f6,
            "zeta" => self.zeta,
            "B20" => self.b20,
            "B40" => self.b40,
            "B60" => self.b60,
            "B44" => self.b44,
            "B64" => self.b64,
            "Ecorr" => self.e_corr,
            "Bex" => self.b_ex,
            "Bdip" => self.b_dip,
            "B0Gd" => self.b0_gd,
            "Jeff" => self.j_eff,
            "theta" => self.theta,
            "gGd" => self.g_gd,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "E0" => &mut self.e0,
            "F2" => &mut self.f2,
            "F4" => &mut self.f4,
            "F6" => &mut self.f6,
            "zeta" => &mut self.zeta,
            "B20" => &mut self.b20,
            "B40" => &mut self.b40,
            "B60" => &mut self.b60,
            "B44" => &mut self.b44,
            "B64" => &mut self.b64,
            "Ecorr" => &mut self.e_corr,
            "Bex" => &mut self.b_ex,
            "Bdip" => &mut self.b_dip,
            "B0Gd" => &mut self.b0_gd,
            "Jeff" => &mut self.j_eff,
            "theta" => &mut self.theta,
            "gGd" => &mut self.g_gd,
            _ => return Err(Error::InvalidArgument(format!("unknown parameter {name:?}"))),
        };
        *slot = value;
        Ok(())
    }
}

/// Gadolinium sublattice an erbium ion sits on; internal fields flip sign between the two.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sublattice {
    One,
    Two,
}

impl Sublattice {
    pub const BOTH: [Sublattice; 2] = [Sublattice::One, Sublattice::Two];

    pub fn sign(self) -> f64 {
        match self {
            Sublattice::One => 1.0,
            Sublattice::Two => -1.0,
        }
    }

    pub fn label(self) -> u8 {
        match self {
            Sublattice::One => 1,
            Sublattice::Two => 2,
        }
    }

    pub fn from_label(label: u8) -> Result<Self> {
        match label {
            1 => Ok(Sublattice::One),
            2 => Ok(Sublattice::Two),
            _ => Err(Error::InvalidArgument(format!("sublattice must be 1 or 2, got {label}"))),
        }
    }

    pub fn index(self) -> usize {
        self.label() as usize - 1
    }
}

impl Serialize for Sublattice {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_u8(self.label())
    }
}

impl<'de> Deserialize<'de> for Sublattice {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        Sublattice::from_label(u8::deserialize(de)?).map_err(serde::de::Error::custom)
    }
}

/// How the `⁴I₁₃/₂` correction combines the selected zero-field eigenvectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionMode {
    /// `Σᵢ |ψᵢ⟩⟨ψᵢ|`, a uniform shift of the manifold.
    #[default]
    Projector,
    /// `Σᵢⱼ |ψᵢ⟩⟨ψⱼ|` taken literally; depends on the eigenvector phases.
    AllPairs,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IonOptions {
    pub correction_mode: CorrectionMode,
    pub tensor_phase: TensorPhase,
}

/// Parameter-independent operator matrices on the `⁴I` basis.
#[derive(Clone, Debug)]
pub struct IonOperators {
    pub basis: AngularBasis,
    pub lx: OperatorMatrix,
    pub ly: OperatorMatrix,
    pub lz: OperatorMatrix,
    pub sx: OperatorMatrix,
    pub sy: OperatorMatrix,
    pub sz: OperatorMatrix,
    /// `L·S` eigenvalue of every basis state.
    pub l_dot_s: Vec<f64>,
    /// Unit-parameter crystal-field operators for B20, B40, B60, B44, B64.
    pub crystal_field: [OperatorMatrix; 5],
}

impl IonOperators {
    pub fn new(basis: AngularBasis, reduced: &ReducedElements, phase: TensorPhase) -> Result<Self> {
        let l = basis.l();
        let s = basis.s();
        let l_dot_s = basis
            .states()
            .iter()
            .map(|st| 0.5 * (st.j.casimir() - l.casimir() - s.casimir()))
            .collect();
        let lshell = 3;
        let cf = |k: i32, q: i32| -> Result<OperatorMatrix> {
            let u = reduced
                .get(k)
                .ok_or_else(|| Error::InvalidArgument(format!("no reduced element for k={k}")))?;
            let red = single_electron_c(lshell, k, phase) * u;
            if q == 0 {
                tensor_operator(k, 0, &basis, red)
            } else {
                let p = tensor_operator(k, q, &basis, red)?;
                let m = tensor_operator(k, -q, &basis, red)?;
                Ok(&p + &m)
            }
        };
        let crystal_field = [cf(2, 0)?, cf(4, 0)?, cf(6, 0)?, cf(4, 4)?, cf(6, 4)?];
        Ok(IonOperators {
            lx: orbital_operator(Component::X, &basis),
            ly: orbital_operator(Component::Y, &basis),
            lz: orbital_operator(Component::Z, &basis),
            sx: spin_operator(Component::X, &basis),
            sy: spin_operator(Component::Y, &basis),
            sz: spin_operator(Component::Z, &basis),
            l_dot_s,
            crystal_field,
            basis,
        })
    }

    /// Operators on the erbium `⁴I` term with the bundled reduced elements, built once per phase.
    pub fn erbium(phase: TensorPhase) -> Arc<IonOperators> {
        static WYBOURNE: OnceLock<Arc<IonOperators>> = OnceLock::new();
        static FLIPPED: OnceLock<Arc<IonOperators>> = OnceLock::new();
        let cell = match phase {
            TensorPhase::Wybourne => &WYBOURNE,
            TensorPhase::Flipped => &FLIPPED,
        };
        cell.get_or_init(|| {
            Arc::new(
                IonOperators::new(AngularBasis::erbium_4i(), &ReducedElements::erbium_4i(), phase)
                    .expect("bundled operators build"),
            )
        })
        .clone()
    }

    fn tag(&self) -> BasisTag {
        BasisTag::Ion(self.basis.clone())
    }

    /// `L_z + 2 S_z`
    pub fn moment_z(&self) -> OperatorMatrix {
        let mut m = self.lz.clone();
        m.add_scaled(2.0, &self.sz);
        m
    }

    pub fn moment_x(&self) -> OperatorMatrix {
        let mut m = self.lx.clone();
        m.add_scaled(2.0, &self.sx);
        m
    }

    pub fn moment_y(&self) -> OperatorMatrix {
        let mut m = self.ly.clone();
        m.add_scaled(2.0, &self.sy);
        m
    }
}

/// Spin–orbit coupling `λ L·S` with `λ = -ζ/(2S)` plus per-J offsets, in GHz.
pub fn free_ion(params: &ModelParams, basis: &AngularBasis) -> OperatorMatrix {
    let l = basis.l();
    let s = basis.s();
    let lambda = -params.zeta / (2.0 * s.value());
    let n = basis.dim();
    let mut data = DMatrix::<Complex64>::zeros(n, n);
    for (i, st) in basis.states().iter().enumerate() {
        let ls = 0.5 * (st.j.casimir() - l.casimir() - s.casimir());
        let e = lambda * ls + params.manifold_offsets.get(st.j);
        data[(i, i)] = Complex64::from(cm1_to_ghz(e));
    }
    OperatorMatrix { basis: BasisTag::Ion(basis.clone()), units: Units::Ghz, data }
}

/// `Σ B_k^0 C(k)_0 + Σ_{k=4,6} B_k^4 (C(k)_4 + C(k)_-4)`, in GHz.
pub fn crystal_field(params: &ModelParams, ops: &IonOperators) -> OperatorMatrix {
    let coeffs = [params.b20, params.b40, params.b60, params.b44, params.b64];
    let mut h = OperatorMatrix::zeros(ops.tag(), Units::Ghz);
    for (c, op) in coeffs.iter().zip(&ops.crystal_field) {
        if *c != 0.0 {
            h.add_scaled(cm1_to_ghz(*c), op);
        }
    }
    h
}

/// Zeeman term for an applied field `b` tilted by `theta_deg` from z towards x, in GHz.
pub fn zeeman(b: f64, theta_deg: f64, ops: &IonOperators) -> OperatorMatrix {
    let (sin, cos) = theta_deg.to_radians().sin_cos();
    let mut h = OperatorMatrix::zeros(ops.tag(), Units::Ghz);
    if b == 0.0 {
        return h;
    }
    let bz = MU_B_OVER_H * b * cos;
    let bx = MU_B_OVER_H * b * sin;
    h.add_scaled(bz, &ops.lz);
    h.add_scaled(2.0 * bz, &ops.sz);
    if bx != 0.0 {
        h.add_scaled(bx, &ops.lx);
        h.add_scaled(2.0 * bx, &ops.sx);
    }
    h
}

/// Static exchange and dipolar fields from the ordered gadolinium, along z.
pub fn mean_field(params: &ModelParams, sublattice: Sublattice, ops: &IonOperators) -> OperatorMatrix {
    let pre = sublattice.sign() * MU_B_OVER_H;
    let mut h = OperatorMatrix::zeros(ops.tag(), Units::Ghz);
    h.add_scaled(pre * (params.b_ex + 2.0 * params.b_dip), &ops.sz);
    h.add_scaled(pre * params.b_dip, &ops.lz);
    h
}

/// Dimensionless `⁴I₁₃/₂` projector built from the eigenvectors of a zero-field Hamiltonian.
///
/// The 13/2 states are the eigenvectors whose largest J weight is in the 13/2 block.
pub fn correction_projector(h_zero_field: &OperatorMatrix, mode: CorrectionMode) -> Result<OperatorMatrix> {
    let basis = match &h_zero_field.basis {
        BasisTag::Ion(b) => b.clone(),
        other => return Err(Error::InvalidArgument(format!("projector needs an ion basis, got {other:?}"))),
    };
    let target = HalfInt::from_twice(13);
    let target_pos = basis
        .j_list()
        .iter()
        .position(|&j| j == target)
        .ok_or_else(|| Error::InvalidArgument("basis has no J = 13/2 block".into()))?;
    let eig = eigensolve(h_zero_field)?;
    let n = basis.dim();
    let mut selected = Vec::new();
    for idx in 0..n {
        let v: Vec<Complex64> = eig.vectors.column(idx).iter().copied().collect();
        let weights = basis.j_weights(&v);
        let (best, &w) = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        if w < 0.5 {
            return Err(Error::AmbiguousCharacter { index: idx, weight: w });
        }
        if best == target_pos {
            selected.push(idx);
        }
    }
    if selected.len() != target.multiplicity() {
        return Err(Error::InvalidArgument(format!(
            "found {} eigenvectors of dominant J = 13/2, expected {}",
            selected.len(),
            target.multiplicity()
        )));
    }
    let mut p = DMatrix::<Complex64>::zeros(n, n);
    match mode {
        CorrectionMode::Projector => {
            for &i in &selected {
                let v = eig.vectors.column(i);
                p += v * v.adjoint();
            }
        }
        CorrectionMode::AllPairs => {
            let mut u = nalgebra::DVector::<Complex64>::zeros(n);
            for &i in &selected {
                u += eig.vectors.column(i);
            }
            p = &u * u.adjoint();
        }
    }
    Ok(OperatorMatrix { basis: BasisTag::Ion(basis), units: Units::Dimensionless, data: p })
}

/// `E_corr · P` for the projector derived from `h_zero_field`, in GHz.
pub fn projective_correction(
    params: &ModelParams,
    h_zero_field: &OperatorMatrix,
    mode: CorrectionMode,
) -> Result<OperatorMatrix> {
    let p = correction_projector(h_zero_field, mode)?;
    Ok(p.scaled(cm1_to_ghz(params.e_corr)).with_units(Units::Ghz))
}

/// Precomputed correction projectors, one per sublattice.
#[derive(Clone, Debug)]
pub struct CorrectionProjectors(pub [OperatorMatrix; 2]);

impl CorrectionProjectors {
    /// Projectors from the zero-field `H_FI + H_CF + H_MF` of each sublattice.
    pub fn compute(params: &ModelParams, ops: &IonOperators, mode: CorrectionMode) -> Result<Self> {
        let static_part = &free_ion(params, &ops.basis) + &crystal_field(params, ops);
        let build = |s: Sublattice| {
            let h0 = &static_part + &mean_field(params, s, ops);
            correction_projector(&h0, mode)
        };
        Ok(CorrectionProjectors([build(Sublattice::One)?, build(Sublattice::Two)?]))
    }
}

/// Erbium Hamiltonian assembler with the field-independent parts cached.
#[derive(Clone, Debug)]
pub struct IonModel {
    ops: Arc<IonOperators>,
    params: ModelParams,
    options: IonOptions,
    projectors: CorrectionProjectors,
    static_part: OperatorMatrix,
}

impl IonModel {
    pub fn new(params: &ModelParams, options: IonOptions) -> Result<Self> {
        let ops = IonOperators::erbium(options.tensor_phase);
        let projectors = CorrectionProjectors::compute(params, &ops, options.correction_mode)?;
        Self::with_projectors(params, options, projectors)
    }

    /// Uses projectors computed once elsewhere, e.g. from a starting parameter set.
    pub fn with_projectors(params: &ModelParams, options: IonOptions, projectors: CorrectionProjectors) -> Result<Self> {
        params.validate()?;
        let ops = IonOperators::erbium(options.tensor_phase);
        let static_part = &free_ion(params, &ops.basis) + &crystal_field(params, &ops);
        Ok(IonModel { ops, params: params.clone(), options, projectors, static_part })
    }

    pub fn operators(&self) -> &Arc<IonOperators> {
        &self.ops
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn options(&self) -> IonOptions {
        self.options
    }

    pub fn projectors(&self) -> &CorrectionProjectors {
        &self.projectors
    }

    /// `H_FI + H_CF + H_Z + H_MF + H_corr` at applied field `b` (tesla), in GHz.
    pub fn hamiltonian(&self, b: f64, sublattice: Sublattice) -> OperatorMatrix {
        self.hamiltonian_at(b, self.params.theta, sublattice)
    }

    /// As [`IonModel::hamiltonian`] with an explicit misalignment angle.
    pub fn hamiltonian_at(&self, b: f64, theta_deg: f64, sublattice: Sublattice) -> OperatorMatrix {
        let mut h = &self.static_part + &zeeman(b, theta_deg, &self.ops);
        h.add_scaled(1.0, &mean_field(&self.params, sublattice, &self.ops));
        if self.params.e_corr != 0.0 {
            h.add_scaled(cm1_to_ghz(self.params.e_corr), &self.projectors.0[sublattice.index()]);
        }
        h
    }
}

/// One-shot assembly of the erbium Hamiltonian with default options.
pub fn assemble_h_er(params: &ModelParams, b: f64, sublattice: Sublattice) -> Result<OperatorMatrix> {
    Ok(IonModel::new(params, IonOptions::default())?.hamiltonian(b, sublattice))
}

/// Landé factor of an LS-coupled level.
pub fn lande_g(l: HalfInt, s: HalfInt, j: HalfInt) -> f64 {
    1.0 + (j.casimir() + s.casimir() - l.casimir()) / (2.0 * j.casimir())
}
