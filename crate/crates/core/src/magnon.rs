//! Truncated spin-deviation (magnon) space of the nearest-neighbour gadolinium
//! sublattice and its exchange coupling to the erbium spin.
//!
//! The gadolinium operators are
//!
//! ```text
//! S_x = √N/2 [ D a + a† D ]
//! S_y = −i√N/2 [ D a − a† D ]
//! S_z = −a†a
//! ```
//!
//! with `D = (I − a†a/N)^{1/2}` on an `(N+1)`-dimensional Fock space. The
//! constant `N/2` of `S_z` is dropped; it is absorbed by the mean exchange field.
//! The sign of `S_y` is chosen so that `[S_x, S_y] = i (N/2 − a†a)` below the
//! truncation edge, the same algebra as the erbium spin. The exchange is then
//! isotropic and magnon creation pairs with raising of the erbium spin.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::{BasisTag, OperatorMatrix, Units};
use crate::constants::{cm1_to_ghz, MU_B_OVER_H};
use crate::error::{Error, Result};
use crate::ion::{IonOperators, ModelParams, Sublattice, MAX_N_GD};

/// Fock space `|0⟩ … |N⟩` of spin deviations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MagnonSpace {
    n_gd: usize,
}

impl MagnonSpace {
    pub fn new(n_gd: usize) -> Result<Self> {
        if n_gd == 0 || n_gd > MAX_N_GD {
            return Err(Error::InvalidArgument(format!("NGd = {n_gd} outside 1..={MAX_N_GD}")));
        }
        Ok(MagnonSpace { n_gd })
    }

    pub fn n_gd(self) -> usize {
        self.n_gd
    }

    pub fn dim(self) -> usize {
        self.n_gd + 1
    }

    fn tag(self) -> BasisTag {
        BasisTag::Magnon { n_gd: self.n_gd }
    }
}

/// How sublattice 2 is modelled when magnons are included.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sublattice2Magnons {
    /// Neighbouring gadolinium spins point the other way: the gadolinium spin
    /// operators are rotated by π about x and `B0Gd` changes sign, so the
    /// partner magnon stiffens with field while the sublattice-1 magnon softens.
    #[default]
    Mirrored,
    /// Same gadolinium operators and `B0Gd` as sublattice 1.
    Shared,
}

/// Gadolinium spin components on the magnon space.
#[derive(Clone, Debug)]
pub struct SpinDeviationOps {
    pub x: OperatorMatrix,
    pub y: OperatorMatrix,
    pub z: OperatorMatrix,
}

pub fn spin_deviation_ops(space: MagnonSpace) -> SpinDeviationOps {
    let dim = space.dim();
    let n = space.n_gd as f64;
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    for k in 1..dim {
        a[(k - 1, k)] = Complex64::from((k as f64).sqrt());
    }
    let adag = a.adjoint();
    let dressing = DMatrix::<Complex64>::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        (0..dim).map(|k| Complex64::from((1.0 - k as f64 / n).max(0.0).sqrt())),
    ));
    let lower = &dressing * &a;
    let raise = &adag * &dressing;
    let half_root = Complex64::from(n.sqrt() / 2.0);
    let x = (&lower + &raise) * half_root;
    let y = (&lower - &raise) * (half_root * Complex64::new(0.0, -1.0));
    let z = -(&adag * &a);
    let wrap = |data| OperatorMatrix { basis: space.tag(), units: Units::Dimensionless, data };
    SpinDeviationOps { x: wrap(x), y: wrap(y), z: wrap(z) }
}

impl SpinDeviationOps {
    /// Operators seen by sublattice `s` under `mode`.
    pub fn for_sublattice(&self, s: Sublattice, mode: Sublattice2Magnons) -> SpinDeviationOps {
        match (s, mode) {
            (Sublattice::Two, Sublattice2Magnons::Mirrored) => SpinDeviationOps {
                x: self.x.clone(),
                y: self.y.scaled(-1.0),
                z: self.z.scaled(-1.0),
            },
            _ => self.clone(),
        }
    }
}

fn effective_b0(params: &ModelParams, s: Sublattice, mode: Sublattice2Magnons) -> f64 {
    match (s, mode) {
        (Sublattice::Two, Sublattice2Magnons::Mirrored) => -params.b0_gd,
        _ => params.b0_gd,
    }
}

/// Gadolinium Zeeman term `(μB/h) g [B·S + B0 S_z]` on the magnon space, in GHz.
pub fn gadolinium_zeeman(
    b: f64,
    theta_deg: f64,
    params: &ModelParams,
    space: MagnonSpace,
    sublattice: Sublattice,
    mode: Sublattice2Magnons,
) -> OperatorMatrix {
    let ops = spin_deviation_ops(space).for_sublattice(sublattice, mode);
    let (sin, cos) = theta_deg.to_radians().sin_cos();
    let pre = MU_B_OVER_H * params.g_gd;
    let b0 = effective_b0(params, sublattice, mode);
    let mut h = OperatorMatrix::zeros(space.tag(), Units::Ghz);
    h.add_scaled(pre * (b * cos + b0), &ops.z);
    h.add_scaled(pre * b * sin, &ops.x);
    h
}

fn composite_tag(ion: &IonOperators, space: MagnonSpace) -> BasisTag {
    BasisTag::Composite { ion: ion.basis.clone(), n_gd: space.n_gd }
}

/// Heisenberg exchange `−(2 J_eff / √(N/2)) S_Gd · S` on the ion ⊗ magnon space, in GHz.
pub fn exchange_coupling(
    params: &ModelParams,
    ion: &IonOperators,
    space: MagnonSpace,
    sublattice: Sublattice,
    mode: Sublattice2Magnons,
) -> OperatorMatrix {
    let gd = spin_deviation_ops(space).for_sublattice(sublattice, mode);
    let pre = -2.0 * cm1_to_ghz(params.j_eff) / (space.n_gd as f64 / 2.0).sqrt();
    let tag = composite_tag(ion, space);
    let n = tag.dim();
    let mut data = DMatrix::<Complex64>::zeros(n, n);
    if pre != 0.0 {
        for (er, g) in [(&ion.sx, &gd.x), (&ion.sy, &gd.y), (&ion.sz, &gd.z)] {
            data += er.data.kronecker(&g.data);
        }
        data *= Complex64::from(pre);
    }
    OperatorMatrix { basis: tag, units: Units::Ghz, data }
}

/// `H_Er ⊗ I + I ⊗ H_Gd + H_int`, ion-major ordering.
pub fn compose(h_er: &OperatorMatrix, h_gd: &OperatorMatrix, h_int: &OperatorMatrix) -> Result<OperatorMatrix> {
    let (ion, n_gd) = match (&h_er.basis, &h_gd.basis) {
        (BasisTag::Ion(b), BasisTag::Magnon { n_gd }) => (b.clone(), *n_gd),
        (a, b) => {
            return Err(Error::InvalidArgument(format!("compose needs ion and magnon operators, got {a:?} and {b:?}")))
        }
    };
    let dm = n_gd + 1;
    let di = ion.dim();
    if h_int.dim() != di * dm {
        return Err(Error::InvalidArgument(format!(
            "coupling has dimension {}, expected {}",
            h_int.dim(),
            di * dm
        )));
    }
    let eye_m = DMatrix::<Complex64>::identity(dm, dm);
    let eye_i = DMatrix::<Complex64>::identity(di, di);
    let data = h_er.data.kronecker(&eye_m) + eye_i.kronecker(&h_gd.data) + &h_int.data;
    Ok(OperatorMatrix { basis: BasisTag::Composite { ion, n_gd }, units: Units::Ghz, data })
}

/// Lifts an ion operator to the composite space as `A ⊗ I`.
pub fn lift_ion(op: &OperatorMatrix, space: MagnonSpace) -> OperatorMatrix {
    let ion = match &op.basis {
        BasisTag::Ion(b) => b.clone(),
        other => panic!("lift_ion on non-ion operator {other:?}"),
    };
    let eye = DMatrix::<Complex64>::identity(space.dim(), space.dim());
    OperatorMatrix { basis: BasisTag::Composite { ion, n_gd: space.n_gd }, units: op.units, data: op.data.kronecker(&eye) }
}
