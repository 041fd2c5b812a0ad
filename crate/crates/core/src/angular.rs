//! Angular-momentum algebra on a single LS term.
//!
//! Wigner 3j and 6j symbols are evaluated with the Racah single-sum formulas in
//! exact big-rational arithmetic; only the final square root is taken in `f64`.
//! Operator matrices are built over an [`AngularBasis`] of `|L S J mJ⟩` states
//! with the Wigner–Eckart theorem, using the convention
//!
//! ```text
//! ⟨J m| T(k,q) |J' m'⟩ = (-1)^(J-m) (J k J'; -m q m') ⟨J‖T(k)‖J'⟩
//! ```
//!
//! Operators acting on the orbital part are recoupled from `⟨L‖T(k)‖L⟩` and
//! operators acting on the spin part from `⟨S‖T(k)‖S⟩` through a 6j symbol.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angular momentum or projection stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(n: i32) -> Self {
        HalfInt(2 * n)
    }

    /// Returns `None` unless `x` is an exact multiple of 1/2.
    pub fn from_f64(x: f64) -> Option<Self> {
        let t = 2.0 * x;
        (t.fract() == 0.0 && t.abs() < i32::MAX as f64).then_some(HalfInt(t as i32))
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// `j(j+1)`
    pub fn casimir(self) -> f64 {
        let j = self.value();
        j * (j + 1.0)
    }

    /// `2j+1`
    pub fn multiplicity(self) -> usize {
        (self.0 + 1).max(0) as usize
    }

    /// Projections `j, j-1, …, -j`.
    pub fn projections(self) -> impl Iterator<Item = HalfInt> {
        let j = self.0;
        (0..=(2 * j).max(-1)).step_by(2).map(move |k| HalfInt(j - k))
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl std::str::FromStr for HalfInt {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("cannot parse angular momentum {s:?}"));
        match s.split_once('/') {
            Some((num, "2")) => num.trim().parse::<i32>().map(HalfInt).map_err(|_| bad()),
            Some(_) => Err(bad()),
            None => s.parse::<i32>().map(HalfInt::from_int).map_err(|_| bad()),
        }
    }
}

fn check_pair(j: HalfInt, m: HalfInt) -> Result<()> {
    if j.0 < 0 {
        return Err(Error::InvalidArgument(format!("negative angular momentum {j}")));
    }
    if (j.0 - m.0) % 2 != 0 {
        return Err(Error::InvalidArgument(format!("j - m not an integer for j={j}, m={m}")));
    }
    if m.0.abs() > j.0 {
        return Err(Error::InvalidArgument(format!("|m| > j for j={j}, m={m}")));
    }
    Ok(())
}

/// Triangle rule in twice units, including the integer-perimeter condition.
pub fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    let (a, b, c) = (a.0, b.0, c.0);
    a >= 0 && b >= 0 && c >= 0 && (a + b + c) % 2 == 0 && c <= a + b && c >= (a - b).abs()
}

const MAX_FACTORIAL: usize = 256;

fn factorial(n: i32) -> &'static BigUint {
    static TABLE: OnceLock<Vec<BigUint>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(MAX_FACTORIAL + 1);
        t.push(BigUint::one());
        for k in 1..=MAX_FACTORIAL {
            let next = &t[k - 1] * BigUint::from(k);
            t.push(next);
        }
        t
    });
    assert!(n >= 0 && (n as usize) <= MAX_FACTORIAL, "factorial argument {n} out of range");
    &table[n as usize]
}

fn fact_int(n: i32) -> BigInt {
    BigInt::from(factorial(n).clone())
}

/// Δ(abc)² as an exact rational; arguments in twice units, triangle already checked.
fn delta_squared(a: i32, b: i32, c: i32) -> BigRational {
    let num = fact_int((a + b - c) / 2) * fact_int((a - b + c) / 2) * fact_int((-a + b + c) / 2);
    BigRational::new(num, fact_int((a + b + c) / 2 + 1))
}

/// Combines an exact `prefactor² · sum²` into `sign(sum)·sqrt(...)`.
fn signed_sqrt(prefactor_sq: BigRational, sum: BigRational) -> f64 {
    if sum.is_zero() {
        return 0.0;
    }
    let sign = if sum.is_negative() { -1.0 } else { 1.0 };
    let sq = prefactor_sq * &sum * &sum;
    sign * sq.to_f64().expect("finite rational").sqrt()
}

/// Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)`.
pub fn wigner3j(j1: HalfInt, j2: HalfInt, j3: HalfInt, m1: HalfInt, m2: HalfInt, m3: HalfInt) -> Result<f64> {
    check_pair(j1, m1)?;
    check_pair(j2, m2)?;
    check_pair(j3, m3)?;
    if m1.0 + m2.0 + m3.0 != 0 || !triangle(j1, j2, j3) {
        return Ok(0.0);
    }
    let (a, b, c) = (j1.0, j2.0, j3.0);
    let (ma, mb, mc) = (m1.0, m2.0, m3.0);

    let mut prefactor = delta_squared(a, b, c);
    for (j, m) in [(a, ma), (b, mb), (c, mc)] {
        prefactor *= BigRational::from_integer(fact_int((j + m) / 2) * fact_int((j - m) / 2));
    }

    // factorial arguments are k + s[i] for the first three, t[i] - k for the last three
    let s = [0, (c - b + ma) / 2, (c - a - mb) / 2];
    let t = [(a + b - c) / 2, (a - ma) / 2, (b + mb) / 2];
    let kmin = s.iter().map(|&x| -x).max().unwrap().max(0);
    let kmax = *t.iter().min().unwrap();
    let mut sum = BigRational::zero();
    for k in kmin..=kmax {
        let den = fact_int(k + s[0]) * fact_int(k + s[1]) * fact_int(k + s[2])
            * fact_int(t[0] - k) * fact_int(t[1] - k) * fact_int(t[2] - k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let phase = if ((a - b - mc) / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Ok(phase * signed_sqrt(prefactor, sum))
}

/// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}`.
pub fn wigner6j(j1: HalfInt, j2: HalfInt, j3: HalfInt, j4: HalfInt, j5: HalfInt, j6: HalfInt) -> Result<f64> {
    for j in [j1, j2, j3, j4, j5, j6] {
        if j.0 < 0 {
            return Err(Error::InvalidArgument(format!("negative angular momentum {j}")));
        }
    }
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if !triads.iter().all(|&(a, b, c)| triangle(a, b, c)) {
        return Ok(0.0);
    }
    let mut prefactor = BigRational::one();
    for &(a, b, c) in &triads {
        prefactor *= delta_squared(a.0, b.0, c.0);
    }
    let sums: Vec<i32> = triads.iter().map(|&(a, b, c)| (a.0 + b.0 + c.0) / 2).collect();
    let tops = [
        (j1.0 + j2.0 + j4.0 + j5.0) / 2,
        (j2.0 + j3.0 + j5.0 + j6.0) / 2,
        (j3.0 + j1.0 + j6.0 + j4.0) / 2,
    ];
    let tmin = *sums.iter().max().unwrap();
    let tmax = *tops.iter().min().unwrap();
    let mut sum = BigRational::zero();
    for t in tmin..=tmax {
        let mut den = BigInt::one();
        for &s in &sums {
            den *= fact_int(t - s);
        }
        for &u in &tops {
            den *= fact_int(u - t);
        }
        let term = BigRational::new(fact_int(t + 1), den);
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    Ok(signed_sqrt(prefactor, sum))
}

fn parity(twice_exponent: i32) -> f64 {
    debug_assert!(twice_exponent % 2 == 0, "non-integer phase exponent");
    if (twice_exponent / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// One `|J mJ⟩` state of an [`AngularBasis`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub j: HalfInt,
    pub mj: HalfInt,
}

/// Product structure `|L S J mJ⟩` over a fixed LS term, ordered J-block by
/// J-block in the order of `j_list`, each block with `mJ = J, J-1, …, -J`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularBasis {
    l: HalfInt,
    s: HalfInt,
    j_list: Vec<HalfInt>,
    states: Vec<BasisState>,
}

impl AngularBasis {
    pub fn new(l: HalfInt, s: HalfInt, j_list: Vec<HalfInt>) -> Result<Self> {
        if l.0 < 0 || s.0 < 0 {
            return Err(Error::InvalidArgument(format!("negative L={l} or S={s}")));
        }
        if j_list.is_empty() {
            return Err(Error::InvalidArgument("empty J list".into()));
        }
        for (i, &j) in j_list.iter().enumerate() {
            if !triangle(l, s, j) {
                return Err(Error::InvalidArgument(format!("J={j} not reachable from L={l}, S={s}")));
            }
            if j_list[..i].contains(&j) {
                return Err(Error::InvalidArgument(format!("J={j} listed twice")));
            }
        }
        let states = j_list
            .iter()
            .flat_map(|&j| j.projections().map(move |mj| BasisState { j, mj }))
            .collect();
        Ok(AngularBasis { l, s, j_list, states })
    }

    /// Every J allowed by `L` and `S`, highest first.
    pub fn full_term(l: HalfInt, s: HalfInt) -> Result<Self> {
        let hi = l.0 + s.0;
        let lo = (l.0 - s.0).abs();
        let js = (lo..=hi).rev().step_by(2).map(HalfInt).collect();
        Self::new(l, s, js)
    }

    /// The `⁴I` term (L = 6, S = 3/2) with J = 15/2, 13/2, 11/2, 9/2.
    pub fn erbium_4i() -> Self {
        Self::full_term(HalfInt::from_int(6), HalfInt::from_twice(3)).expect("valid term")
    }

    pub fn l(&self) -> HalfInt {
        self.l
    }

    pub fn s(&self) -> HalfInt {
        self.s
    }

    pub fn j_list(&self) -> &[HalfInt] {
        &self.j_list
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Index range of the block belonging to `j`.
    pub fn block(&self, j: HalfInt) -> Option<std::ops::Range<usize>> {
        let mut start = 0;
        for &jj in &self.j_list {
            let len = jj.multiplicity();
            if jj == j {
                return Some(start..start + len);
            }
            start += len;
        }
        None
    }

    /// Weight of a state vector in each J block, in `j_list` order.
    pub fn j_weights(&self, v: &[Complex64]) -> Vec<f64> {
        self.j_list
            .iter()
            .map(|&j| {
                self.block(j)
                    .unwrap()
                    .map(|i| v[i].norm_sqr())
                    .sum()
            })
            .collect()
    }
}

/// Which Hilbert space an [`OperatorMatrix`] lives on.
#[derive(Clone, Debug, PartialEq)]
pub enum BasisTag {
    Ion(AngularBasis),
    Magnon { n_gd: usize },
    Composite { ion: AngularBasis, n_gd: usize },
    Plain(usize),
}

impl BasisTag {
    pub fn dim(&self) -> usize {
        match self {
            BasisTag::Ion(b) => b.dim(),
            BasisTag::Magnon { n_gd } => n_gd + 1,
            BasisTag::Composite { ion, n_gd } => ion.dim() * (n_gd + 1),
            BasisTag::Plain(n) => *n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    Ghz,
    Dimensionless,
}

/// Dense complex square matrix tagged with its basis and units.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    pub basis: BasisTag,
    pub units: Units,
    pub data: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn zeros(basis: BasisTag, units: Units) -> Self {
        let n = basis.dim();
        OperatorMatrix { basis, units, data: DMatrix::zeros(n, n) }
    }

    pub fn identity(basis: BasisTag, units: Units) -> Self {
        let n = basis.dim();
        OperatorMatrix { basis, units, data: DMatrix::identity(n, n) }
    }

    pub fn from_data(basis: BasisTag, units: Units, data: DMatrix<Complex64>) -> Result<Self> {
        let n = basis.dim();
        if data.nrows() != n || data.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{}, basis has dimension {n}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(OperatorMatrix { basis, units, data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        OperatorMatrix { basis: self.basis.clone(), units: self.units, data: &self.data * Complex64::from(factor) }
    }

    /// Same matrix with different units, e.g. a dimensionless operator times an energy.
    pub fn with_units(mut self, units: Units) -> Self {
        self.units = units;
        self
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix { basis: self.basis.clone(), units: self.units, data: self.data.adjoint() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest `|H - H†|` entry relative to the largest entry (absolute when the matrix is zero).
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                err = err.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        let scale = self.max_abs();
        if scale > 0.0 {
            err / scale
        } else {
            err
        }
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_error() <= rel_tol
    }

    pub fn commutator(&self, other: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix {
            basis: self.basis.clone(),
            units: self.units,
            data: &self.data * &other.data - &other.data * &self.data,
        }
    }

    pub fn matmul(&self, other: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix { basis: self.basis.clone(), units: self.units, data: &self.data * &other.data }
    }

    /// In-place `self += factor * other`.
    pub fn add_scaled(&mut self, factor: f64, other: &OperatorMatrix) {
        self.data.zip_apply(&other.data, |a, b| *a += b * factor);
    }
}

impl std::ops::Add for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix { basis: self.basis.clone(), units: self.units, data: &self.data + &rhs.data }
    }
}

impl std::ops::Sub for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix { basis: self.basis.clone(), units: self.units, data: &self.data - &rhs.data }
    }
}

/// Which subsystem of the LS term an irreducible tensor acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Orbital,
    Spin,
}

/// Reduced element `⟨L S J‖T(k)‖L S J'⟩` of a rank-`k` tensor acting on one part,
/// given the term-level reduced element of that part.
pub fn recoupled_reduced(basis: &AngularBasis, part: Part, k: i32, j: HalfInt, jp: HalfInt, reduced: f64) -> f64 {
    let (l, s) = (basis.l, basis.s);
    let kk = HalfInt::from_int(k);
    let dims = (((j.0 + 1) * (jp.0 + 1)) as f64).sqrt();
    match part {
        Part::Orbital => {
            let six = wigner6j(l, j, s, jp, l, kk).expect("valid 6j");
            parity(l.0 + s.0 + jp.0 + 2 * k) * dims * six * reduced
        }
        Part::Spin => {
            let six = wigner6j(s, j, l, jp, s, kk).expect("valid 6j");
            parity(l.0 + s.0 + j.0 + 2 * k) * dims * six * reduced
        }
    }
}

/// Matrix of the `q` component of a rank-`k` tensor on `part`, without range checks on `k`.
pub(crate) fn spherical_component(basis: &AngularBasis, part: Part, k: i32, q: i32, reduced: f64) -> OperatorMatrix {
    let n = basis.dim();
    let kk = HalfInt::from_int(k);
    let qq = HalfInt::from_int(q);
    let mut data = DMatrix::<Complex64>::zeros(n, n);
    let js = basis.j_list.clone();
    for &j in &js {
        for &jp in &js {
            if !triangle(j, kk, jp) {
                continue;
            }
            let red = recoupled_reduced(basis, part, k, j, jp, reduced);
            if red == 0.0 {
                continue;
            }
            let rows = basis.block(j).unwrap();
            let cols = basis.block(jp).unwrap();
            for r in rows.clone() {
                let m = basis.states[r].mj;
                // only m' = m - q survives
                let mp = HalfInt(m.0 - qq.0);
                if mp.0.abs() > jp.0 {
                    continue;
                }
                let c = cols.start + ((jp.0 - mp.0) / 2) as usize;
                let three = wigner3j(j, kk, jp, HalfInt(-m.0), qq, mp).expect("valid 3j");
                let value = parity(j.0 - m.0) * three * red;
                data[(r, c)] = Complex64::from(value);
            }
        }
    }
    OperatorMatrix { basis: BasisTag::Ion(basis.clone()), units: Units::Dimensionless, data }
}

/// `⟨J mJ| T(k)_q |J' mJ'⟩` for an even-rank crystal-field tensor acting on the
/// orbital part, given the term-level reduced element `⟨L‖T(k)‖L⟩`.
pub fn tensor_operator(k: i32, q: i32, basis: &AngularBasis, reduced: f64) -> Result<OperatorMatrix> {
    if ![2, 4, 6].contains(&k) {
        return Err(Error::InvalidArgument(format!("tensor rank k={k} not in {{2, 4, 6}}")));
    }
    if q.abs() > k {
        return Err(Error::InvalidArgument(format!("|q|={} exceeds k={k}", q.abs())));
    }
    Ok(spherical_component(basis, Part::Orbital, k, q, reduced))
}

/// Cartesian or ladder component of a vector operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

fn vector_operator(component: Component, basis: &AngularBasis, part: Part) -> OperatorMatrix {
    let j = match part {
        Part::Orbital => basis.l,
        Part::Spin => basis.s,
    };
    let reduced = (j.casimir() * (j.0 + 1) as f64).sqrt();
    let tq = |q| spherical_component(basis, part, 1, q, reduced);
    let r2 = std::f64::consts::SQRT_2;
    let data = match component {
        Component::Z => tq(0).data,
        Component::Plus => tq(1).data * Complex64::from(-r2),
        Component::Minus => tq(-1).data * Complex64::from(r2),
        Component::X => (tq(-1).data - tq(1).data) * Complex64::from(1.0 / r2),
        Component::Y => (tq(-1).data + tq(1).data) * Complex64::new(0.0, 1.0 / r2),
    };
    OperatorMatrix { basis: BasisTag::Ion(basis.clone()), units: Units::Dimensionless, data }
}

/// Spin operator component over every `(J mJ, J' mJ')` pair, including inter-J blocks.
pub fn spin_operator(component: Component, basis: &AngularBasis) -> OperatorMatrix {
    vector_operator(component, basis, Part::Spin)
}

/// Orbital angular momentum component over every `(J mJ, J' mJ')` pair.
pub fn orbital_operator(component: Component, basis: &AngularBasis) -> OperatorMatrix {
    vector_operator(component, basis, Part::Orbital)
}

/// Sign convention for the single-electron reduced element `⟨f‖C(k)‖f⟩`.
///
/// `Wybourne` uses `⟨l‖C(k)‖l⟩ = (-1)^l (2l+1) (l k l; 0 0 0)`; `Flipped`
/// negates it, which flips the sign of every crystal-field parameter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorPhase {
    #[default]
    Wybourne,
    Flipped,
}

/// `⟨l‖C(k)‖l⟩` for a single electron of orbital momentum `l`.
pub fn single_electron_c(l: i32, k: i32, phase: TensorPhase) -> f64 {
    let ll = HalfInt::from_int(l);
    let kk = HalfInt::from_int(k);
    let z = HalfInt::from_int(0);
    let three = wigner3j(ll, kk, ll, z, z, z).expect("valid 3j");
    let value = parity(2 * l) * (2 * l + 1) as f64 * three;
    match phase {
        TensorPhase::Wybourne => value,
        TensorPhase::Flipped => -value,
    }
}

/// Term-level reduced elements `⟨LS‖U(k)‖LS⟩` indexed by rank.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedElements {
    entries: Vec<(i32, f64)>,
}

const BUNDLED_4I_F11: &str = include_str!("../data/reduced_u_4i_f11.txt");

impl ReducedElements {
    /// Parses lines of `k value`; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Data(format!("line {}: {what}: {line:?}", lineno + 1));
            let mut it = line.split_whitespace();
            let k: i32 = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad rank"))?;
            let v: f64 = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad value"))?;
            if it.next().is_some() {
                return Err(bad("trailing fields"));
            }
            if ![2, 4, 6].contains(&k) {
                return Err(bad("rank must be 2, 4 or 6"));
            }
            if entries.iter().any(|&(kk, _)| kk == k) {
                return Err(bad("duplicate rank"));
            }
            entries.push((k, v));
        }
        Ok(ReducedElements { entries })
    }

    /// `⟨⁴I‖U(k)‖⁴I⟩` for the f¹¹ configuration.
    pub fn erbium_4i() -> Self {
        Self::parse(BUNDLED_4I_F11).expect("bundled table parses")
    }

    pub fn get(&self, k: i32) -> Option<f64> {
        self.entries.iter().find(|&&(kk, _)| kk == k).map(|&(_, v)| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(twice: i32) -> HalfInt {
        HalfInt::from_twice(twice)
    }

    fn i(n: i32) -> HalfInt {
        HalfInt::from_int(n)
    }

    #[test]
    fn halfint_parse_and_display() {
        assert_eq!("15/2".parse::<HalfInt>().unwrap(), h(15));
        assert_eq!("3".parse::<HalfInt>().unwrap(), i(3));
        assert!("1/3".parse::<HalfInt>().is_err());
        assert_eq!(h(13).to_string(), "13/2");
        assert_eq!(i(2).to_string(), "2");
        assert_eq!(h(3).projections().collect::<Vec<_>>(), vec![h(3), h(1), h(-1), h(-3)]);
    }

    #[test]
    fn three_j_closed_forms() {
        let v = wigner3j(i(1), i(1), i(0), i(0), i(0), i(0)).unwrap();
        assert!((v + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(wigner3j(i(1), i(2), i(4), i(0), i(0), i(0)).unwrap(), 0.0);
        let v = wigner3j(i(1), i(1), i(2), i(0), i(0), i(0)).unwrap();
        assert!((v - (2.0f64 / 15.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn three_j_rejects_malformed_projection() {
        assert!(wigner3j(i(1), i(1), i(1), h(1), h(-1), i(0)).is_err());
        assert!(wigner3j(i(1), i(1), i(1), i(2), i(-2), i(0)).is_err());
        // projections not summing to zero are a selection rule, not an error
        assert_eq!(wigner3j(i(1), i(1), i(1), i(1), i(1), i(0)).unwrap(), 0.0);
    }

    #[test]
    fn six_j_closed_forms() {
        assert!((wigner6j(i(1), i(1), i(0), i(1), i(1), i(1)).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        assert!((wigner6j(i(1), i(1), i(1), i(1), i(1), i(1)).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(wigner6j(i(1), i(1), i(3), i(1), i(1), i(1)).unwrap(), 0.0);
        assert!(wigner6j(i(1), i(-1), i(1), i(1), i(1), i(1)).is_err());
    }

    #[test]
    fn erbium_basis_shape() {
        let b = AngularBasis::erbium_4i();
        assert_eq!(b.dim(), 52);
        assert_eq!(b.j_list(), &[h(15), h(13), h(11), h(9)]);
        assert_eq!(b.block(h(13)), Some(16..30));
        assert!(AngularBasis::new(i(6), h(3), vec![h(17)]).is_err());
    }

    #[test]
    fn tensor_operator_selection_rules() {
        let b = AngularBasis::erbium_4i();
        assert!(tensor_operator(3, 0, &b, 1.0).is_err());
        assert!(tensor_operator(2, 3, &b, 1.0).is_err());
        let c = tensor_operator(2, 0, &b, 1.0).unwrap();
        // stretched state against itself: one Wigner–Eckart factor times the 6j recoupling
        let expected = wigner3j(h(15), i(2), h(15), h(-15), i(0), h(15)).unwrap()
            * recoupled_reduced(&b, Part::Orbital, 2, h(15), h(15), 1.0);
        assert!((c.data[(0, 0)].re - expected).abs() < 1e-14);
        let c4 = tensor_operator(4, 4, &b, 1.0).unwrap();
        for (r, sr) in b.states().iter().enumerate() {
            for (cidx, sc) in b.states().iter().enumerate() {
                if sr.mj.twice() - sc.mj.twice() != 8 {
                    assert_eq!(c4.data[(r, cidx)], Complex64::from(0.0));
                }
            }
        }
        assert!(c.data.trace().norm() < 1e-12);
    }

    #[test]
    fn single_electron_reduced_values() {
        // ⟨f‖C(k)‖f⟩ = -7 (3 k 3; 0 0 0)
        assert!((single_electron_c(3, 2, TensorPhase::Wybourne) + 1.366_260_102_127_946).abs() < 1e-12);
        assert!((single_electron_c(3, 4, TensorPhase::Wybourne) - 1.128_152_149_635_532).abs() < 1e-12);
        assert!((single_electron_c(3, 6, TensorPhase::Wybourne) + 1.277_380_770_053_171).abs() < 1e-12);
        assert_eq!(
            single_electron_c(3, 4, TensorPhase::Flipped),
            -single_electron_c(3, 4, TensorPhase::Wybourne)
        );
    }

    #[test]
    fn reduced_table_parsing() {
        let t = ReducedElements::parse("# header\n2 0.5\n4 -0.25 # note\n\n6 1e-1\n").unwrap();
        assert_eq!(t.get(4), Some(-0.25));
        assert_eq!(t.get(6), Some(0.1));
        assert!(ReducedElements::parse("3 1.0").is_err());
        assert!(ReducedElements::parse("2 1.0\n2 2.0").is_err());
        assert!(ReducedElements::parse("2 x").is_err());
    }
}
