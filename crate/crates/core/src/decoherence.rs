//! Two-pulse echo decays (stretched exponential) and the temperature
//! dependence of the homogeneous linewidth.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::constants::H_OVER_KB_MK_PER_GHZ;
use crate::error::{Error, Result};
use crate::lsq::{self, LsqSettings};

/// One recorded echo amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EchoPoint {
    pub t12_us: f64,
    pub amplitude: f64,
    pub shot: u32,
}

/// Echo amplitudes versus pulse separation; several shots per delay allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct DecaySeries {
    points: Vec<EchoPoint>,
}

impl DecaySeries {
    pub fn new(points: Vec<EchoPoint>) -> Result<Self> {
        for p in &points {
            if !(p.t12_us.is_finite() && p.t12_us > 0.0) {
                return Err(Error::Data(format!("echo delay must be positive, got {}", p.t12_us)));
            }
            if !p.amplitude.is_finite() {
                return Err(Error::Data(format!("non-finite echo amplitude at t12 = {}", p.t12_us)));
            }
        }
        Ok(DecaySeries { points })
    }

    pub fn points(&self) -> &[EchoPoint] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reads `t12_us,amplitude,shot` rows; `#` lines are comments.
    pub fn from_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r);
        let points = rdr.deserialize().collect::<std::result::Result<Vec<EchoPoint>, _>>()?;
        Self::new(points)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        for p in &self.points {
            csv.serialize(p)?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// Keeps the largest amplitude recorded at each delay, sorted by delay.
pub fn best_of_shots(series: &DecaySeries) -> Result<DecaySeries> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("empty decay series".into()));
    }
    let mut best: BTreeMap<u64, EchoPoint> = BTreeMap::new();
    for p in series.points() {
        // Positive finite delays order like their bit patterns.
        best.entry(p.t12_us.to_bits())
            .and_modify(|b| {
                if p.amplitude > b.amplitude {
                    *b = *p;
                }
            })
            .or_insert(*p);
    }
    Ok(DecaySeries { points: best.into_values().collect() })
}

/// `A · exp[−(2 t12 / T_M)^x]`
pub fn mims_decay(t12_us: f64, t_m_us: f64, stretch: f64, amplitude0: f64) -> f64 {
    amplitude0 * (-(2.0 * t12_us / t_m_us).powf(stretch)).exp()
}

/// Fitted stretched-exponential decay. Covariance is ordered (T_M, x, A).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MimsFit {
    pub t_m_us: f64,
    pub stretch: f64,
    pub amplitude0: f64,
    pub covariance: [[f64; 3]; 3],
    pub evaluations: usize,
}

impl MimsFit {
    pub fn t_m_sigma(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn stretch_sigma(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }

    pub fn amplitude_sigma(&self) -> f64 {
        self.covariance[2][2].sqrt()
    }

    pub fn homogeneous_linewidth_khz(&self) -> f64 {
        homogeneous_linewidth_khz(self.t_m_us)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MimsOptions {
    /// Hold the stretch factor at this value.
    pub fixed_stretch: Option<f64>,
}

const MIN_DELAYS: usize = 4;

/// Initial phase-memory time from the delay where the echo has fallen to 1/e
/// of its first value; the model reaches 1/e at `2 t12 = T_M`.
fn initial_t_m(points: &[EchoPoint]) -> f64 {
    let first = points[0];
    let target = first.amplitude / std::f64::consts::E;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.amplitude >= target && b.amplitude <= target {
            let t = if a.amplitude == b.amplitude {
                a.t12_us
            } else {
                a.t12_us + (a.amplitude - target) / (a.amplitude - b.amplitude) * (b.t12_us - a.t12_us)
            };
            return 2.0 * t;
        }
    }
    let last = points[points.len() - 1];
    let drop = (first.amplitude / last.amplitude).ln();
    if drop.is_finite() && drop > 0.0 {
        2.0 * (last.t12_us - first.t12_us).max(last.t12_us) / drop
    } else {
        2.0 * last.t12_us
    }
}

/// Stretched-exponential fit to the best-of-shots reduction of `series`.
pub fn fit_mims(series: &DecaySeries) -> Result<MimsFit> {
    fit_mims_with(series, MimsOptions::default())
}

pub fn fit_mims_with(series: &DecaySeries, options: MimsOptions) -> Result<MimsFit> {
    let reduced = best_of_shots(series)?;
    let pts = reduced.points().to_vec();
    if pts.len() < MIN_DELAYS {
        return Err(Error::InvalidArgument(format!(
            "{} distinct delays after reduction, need at least {MIN_DELAYS}",
            pts.len()
        )));
    }
    if pts[0].amplitude <= 0.0 {
        return Err(Error::Data("first echo amplitude must be positive".into()));
    }
    let t0 = initial_t_m(&pts);
    let x_fixed = options.fixed_stretch;
    let a0 = pts.iter().map(|p| p.amplitude).fold(f64::MIN, f64::max) * (2.0 * pts[0].t12_us / t0).exp();
    let unpack = |p: &[f64]| -> (f64, f64, f64) {
        match x_fixed {
            Some(x) => (p[0], x, p[1]),
            None => (p[0], p[1], p[2]),
        }
    };
    let residuals = |p: &[f64]| -> Option<Vec<f64>> {
        let (t_m, x, a) = unpack(p);
        if !(t_m > 0.0 && x > 0.0) {
            return None;
        }
        Some(pts.iter().map(|q| mims_decay(q.t12_us, t_m, x, a) - q.amplitude).collect())
    };
    let jacobian = |p: &[f64]| -> Option<DMatrix<f64>> {
        let (t_m, x, a) = unpack(p);
        if !(t_m > 0.0 && x > 0.0) {
            return None;
        }
        let ncols = if x_fixed.is_some() { 2 } else { 3 };
        let mut j = DMatrix::zeros(pts.len(), ncols);
        for (i, q) in pts.iter().enumerate() {
            let u = 2.0 * q.t12_us / t_m;
            let ux = u.powf(x);
            let e = (-ux).exp();
            let d_t = a * e * ux * x / t_m;
            let d_a = e;
            j[(i, 0)] = d_t;
            if x_fixed.is_some() {
                j[(i, 1)] = d_a;
            } else {
                j[(i, 1)] = -a * e * ux * u.ln();
                j[(i, 2)] = d_a;
            }
        }
        Some(j)
    };
    let x0: Vec<f64> = match x_fixed {
        Some(_) => vec![t0, a0],
        None => vec![t0, 1.0, a0],
    };
    let out = lsq::minimize(&x0, &residuals, &jacobian, LsqSettings::default())
        .map_err(|e| Error::FitFailure(format!("echo decay fit: {e}")))?;
    let (t_m, x, a) = unpack(&out.params);
    if !out.converged || !(t_m > 0.0 && x > 0.0) {
        return Err(Error::FitFailure(format!(
            "echo decay fit did not converge ({}); last iterate T_M = {t_m} us, x = {x}, A = {a}",
            out.termination
        )));
    }
    let cov = lsq::covariance(&out.jacobian, &out.residuals, true)
        .ok_or_else(|| Error::FitFailure("singular Jacobian at the echo-decay optimum".into()))?;
    let mut full = [[0.0; 3]; 3];
    let map: Vec<usize> = if x_fixed.is_some() { vec![0, 2] } else { vec![0, 1, 2] };
    for (r, &fr) in map.iter().enumerate() {
        for (c, &fc) in map.iter().enumerate() {
            full[fr][fc] = cov[(r, c)];
        }
    }
    Ok(MimsFit { t_m_us: t_m, stretch: x, amplitude0: a, covariance: full, evaluations: out.evaluations })
}

/// `1 / (π T_M)` in kHz for `T_M` in microseconds.
pub fn homogeneous_linewidth_khz(t_m_us: f64) -> f64 {
    1e3 / (std::f64::consts::PI * t_m_us)
}

/// Synthetic decay with multiplicative Gaussian noise of relative size `noise`.
pub fn synth_decay<R: Rng>(
    delays_us: &[f64],
    shots: u32,
    t_m_us: f64,
    stretch: f64,
    amplitude0: f64,
    noise: f64,
    rng: &mut R,
) -> Result<DecaySeries> {
    let normal = Normal::new(0.0, noise).map_err(|e| Error::InvalidArgument(format!("noise: {e}")))?;
    let mut points = Vec::new();
    for &t in delays_us {
        let clean = mims_decay(t, t_m_us, stretch, amplitude0);
        for shot in 0..shots {
            points.push(EchoPoint { t12_us: t, amplitude: clean * (1.0 + normal.sample(rng)), shot });
        }
    }
    DecaySeries::new(points)
}

/// One homogeneous-linewidth measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinewidthPoint {
    #[serde(rename = "temperature_mK")]
    pub temperature_mk: f64,
    #[serde(rename = "gamma_h_kHz")]
    pub gamma_khz: f64,
    #[serde(rename = "sigma_kHz", default)]
    pub sigma_khz: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinewidthSeries {
    points: Vec<LinewidthPoint>,
}

impl LinewidthSeries {
    pub fn new(points: Vec<LinewidthPoint>) -> Result<Self> {
        for p in &points {
            if !(p.temperature_mk.is_finite() && p.temperature_mk > 0.0) {
                return Err(Error::Data(format!("temperature must be positive, got {}", p.temperature_mk)));
            }
            if !(p.gamma_khz.is_finite() && p.gamma_khz > 0.0) {
                return Err(Error::Data(format!("linewidth must be positive, got {}", p.gamma_khz)));
            }
            if let Some(s) = p.sigma_khz {
                if !(s.is_finite() && s > 0.0) {
                    return Err(Error::Data(format!("uncertainty must be positive, got {s}")));
                }
            }
        }
        Ok(LinewidthSeries { points })
    }

    pub fn points(&self) -> &[LinewidthPoint] {
        &self.points
    }

    /// Reads `temperature_mK,gamma_h_kHz[,sigma_kHz]` rows; `#` lines are comments.
    pub fn from_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(r);
        let points = rdr.deserialize().collect::<std::result::Result<Vec<LinewidthPoint>, _>>()?;
        Self::new(points)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        for p in &self.points {
            csv.serialize(p)?;
        }
        csv.flush()?;
        Ok(())
    }

    fn has_sigmas(&self) -> bool {
        self.points.iter().all(|p| p.sigma_khz.is_some())
    }
}

/// Parameters of `Γ_h(T) = Γ₀ + Γ_Δ exp(−hΔ / k_B T)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinewidthParams {
    #[serde(rename = "Gamma0_kHz")]
    pub gamma0_khz: f64,
    #[serde(rename = "GammaDelta_MHz")]
    pub gamma_delta_mhz: f64,
    #[serde(rename = "Delta_GHz")]
    pub delta_ghz: f64,
}

impl LinewidthParams {
    /// Linewidth in kHz at temperature `t_mk`.
    pub fn evaluate(&self, t_mk: f64) -> f64 {
        self.gamma0_khz + 1e3 * self.gamma_delta_mhz * (-self.delta_ghz * H_OVER_KB_MK_PER_GHZ / t_mk).exp()
    }

    /// `Γ_Δ / Γ₀`, dimensionless.
    pub fn activation_ratio(&self) -> f64 {
        1e3 * self.gamma_delta_mhz / self.gamma0_khz
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Inverse variance when every point carries an uncertainty, else unweighted.
    #[default]
    Auto,
    Unweighted,
    InverseVariance,
}

/// Fitted linewidth model. Covariance is ordered (Γ₀ kHz, Γ_Δ MHz, Δ GHz).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinewidthFit {
    pub params: LinewidthParams,
    pub covariance: [[f64; 3]; 3],
    pub weighted: bool,
    pub chi_square: f64,
    pub evaluations: usize,
}

impl LinewidthFit {
    pub fn sigmas(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.covariance[i][i].sqrt())
    }

    /// 1σ uncertainty of `Γ_Δ / Γ₀` by first-order propagation.
    pub fn activation_ratio_sigma(&self) -> f64 {
        let p = &self.params;
        let r = p.activation_ratio();
        let (v0, v1, c01) = (self.covariance[0][0], self.covariance[1][1], self.covariance[0][1]);
        let rel2 = v1 / (p.gamma_delta_mhz * p.gamma_delta_mhz) + v0 / (p.gamma0_khz * p.gamma0_khz)
            - 2.0 * c01 / (p.gamma_delta_mhz * p.gamma0_khz);
        r * rel2.max(0.0).sqrt()
    }
}

const MIN_LINEWIDTH_POINTS: usize = 4;

fn check_monotone(p: &LinewidthParams, t_lo: f64, t_hi: f64) -> Result<()> {
    if !(p.gamma0_khz > 0.0 && p.gamma_delta_mhz > 0.0 && p.delta_ghz > 0.0) {
        return Err(Error::FitFailure(format!("fitted linewidth parameters are not all positive: {p:?}")));
    }
    let grid: Vec<f64> = (0..=64).map(|i| t_lo + (t_hi - t_lo) * i as f64 / 64.0).collect();
    for w in grid.windows(2) {
        if p.evaluate(w[1]) < p.evaluate(w[0]) {
            return Err(Error::FitFailure(format!("fitted linewidth decreases between {} and {} mK", w[0], w[1])));
        }
    }
    Ok(())
}

/// Starting point: Γ₀ from the smallest linewidth, Δ from the log-slope of
/// `Γ − Γ₀` against `1/T` over the upper half of the temperature range, Γ_Δ
/// from one linear solve.
fn initial_linewidth(pts: &[LinewidthPoint], weights: &[f64]) -> Result<LinewidthParams> {
    let gamma0 = pts.iter().map(|p| p.gamma_khz).fold(f64::MAX, f64::min);
    let (t_min, t_max) = pts
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.temperature_mk), hi.max(p.temperature_mk)));
    let t_mid = 0.5 * (t_min + t_max);
    let upper: Vec<(f64, f64)> = pts
        .iter()
        .filter(|p| p.temperature_mk >= t_mid && p.gamma_khz > gamma0)
        .map(|p| (1.0 / p.temperature_mk, (p.gamma_khz - gamma0).ln()))
        .collect();
    if upper.len() < 2 {
        return Err(Error::FitFailure(
            "linewidth data are flat: fewer than two points rise above the minimum in the upper temperature half".into(),
        ));
    }
    let n = upper.len() as f64;
    let mx = upper.iter().map(|p| p.0).sum::<f64>() / n;
    let my = upper.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = upper.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = upper.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::FitFailure("linewidth data span a single temperature in the upper half".into()));
    }
    let delta = -(sxy / sxx) / H_OVER_KB_MK_PER_GHZ;
    if !(delta > 0.0) {
        return Err(Error::FitFailure(format!(
            "linewidth does not rise with temperature (initial activation energy {delta:.3} GHz)"
        )));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (p, w) in pts.iter().zip(weights) {
        let e = 1e3 * (-delta * H_OVER_KB_MK_PER_GHZ / p.temperature_mk).exp();
        num += w * w * e * (p.gamma_khz - gamma0);
        den += w * w * e * e;
    }
    let gamma_delta = if den > 0.0 { num / den } else { 0.0 };
    Ok(LinewidthParams { gamma0_khz: gamma0, gamma_delta_mhz: gamma_delta, delta_ghz: delta })
}

/// Weighted least-squares fit of the activated linewidth model.
pub fn fit_linewidth_temperature(series: &LinewidthSeries, weighting: Weighting) -> Result<LinewidthFit> {
    let pts = series.points().to_vec();
    if pts.len() < MIN_LINEWIDTH_POINTS {
        return Err(Error::InvalidArgument(format!(
            "{} linewidth points, need at least {MIN_LINEWIDTH_POINTS}",
            pts.len()
        )));
    }
    let weighted = match weighting {
        Weighting::Auto => series.has_sigmas(),
        Weighting::Unweighted => false,
        Weighting::InverseVariance => {
            if !series.has_sigmas() {
                return Err(Error::Data("inverse-variance weighting needs sigma_kHz on every point".into()));
            }
            true
        }
    };
    let weights: Vec<f64> = pts
        .iter()
        .map(|p| if weighted { 1.0 / p.sigma_khz.expect("checked") } else { 1.0 })
        .collect();
    let init = initial_linewidth(&pts, &weights)?;
    let params_of = |p: &[f64]| LinewidthParams { gamma0_khz: p[0], gamma_delta_mhz: p[1], delta_ghz: p[2] };
    let residuals = |p: &[f64]| -> Option<Vec<f64>> {
        let lp = params_of(p);
        let r: Vec<f64> =
            pts.iter().zip(&weights).map(|(q, w)| w * (lp.evaluate(q.temperature_mk) - q.gamma_khz)).collect();
        r.iter().all(|v| v.is_finite()).then_some(r)
    };
    let jacobian = |p: &[f64]| -> Option<DMatrix<f64>> {
        let mut j = DMatrix::zeros(pts.len(), 3);
        for (i, (q, w)) in pts.iter().zip(&weights).enumerate() {
            let k = H_OVER_KB_MK_PER_GHZ / q.temperature_mk;
            let e = (-p[2] * k).exp();
            j[(i, 0)] = *w;
            j[(i, 1)] = w * 1e3 * e;
            j[(i, 2)] = -w * 1e3 * p[1] * k * e;
        }
        Some(j)
    };
    let x0 = [init.gamma0_khz, init.gamma_delta_mhz, init.delta_ghz];
    let out = lsq::minimize(&x0, &residuals, &jacobian, LsqSettings::default())
        .map_err(|e| Error::FitFailure(format!("linewidth fit: {e}")))?;
    let fitted = params_of(&out.params);
    if !out.converged {
        return Err(Error::FitFailure(format!(
            "linewidth fit did not converge ({}); last iterate {fitted:?}",
            out.termination
        )));
    }
    let (t_lo, t_hi) = pts
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.temperature_mk), hi.max(p.temperature_mk)));
    check_monotone(&fitted, t_lo, t_hi)?;
    let cov = lsq::covariance(&out.jacobian, &out.residuals, !weighted)
        .ok_or_else(|| Error::FitFailure("singular Jacobian at the linewidth optimum".into()))?;
    let covariance = [0, 1, 2].map(|r| [0, 1, 2].map(|c| cov[(r, c)]));
    Ok(LinewidthFit { params: fitted, covariance, weighted, chi_square: out.sum_of_squares(), evaluations: out.evaluations })
}

/// Synthetic linewidths with multiplicative Gaussian noise; each point
/// carries `sigma = noise · Γ_h` of the clean curve.
pub fn synth_linewidth<R: Rng>(
    temperatures_mk: &[f64],
    params: &LinewidthParams,
    noise: f64,
    rng: &mut R,
) -> Result<LinewidthSeries> {
    let normal = Normal::new(0.0, noise).map_err(|e| Error::InvalidArgument(format!("noise: {e}")))?;
    let points = temperatures_mk
        .iter()
        .map(|&t| {
            let clean = params.evaluate(t);
            LinewidthPoint {
                temperature_mk: t,
                gamma_khz: clean * (1.0 + normal.sample(rng)),
                sigma_khz: (noise > 0.0).then_some(noise * clean),
            }
        })
        .collect();
    LinewidthSeries::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linewidth_from_phase_memory() {
        assert!((homogeneous_linewidth_khz(235.7) - 1.3504).abs() < 1e-4);
        assert!((homogeneous_linewidth_khz(2.0 * 235.7) - 0.5 * homogeneous_linewidth_khz(235.7)).abs() < 1e-15);
    }

    #[test]
    fn best_shot_per_delay() {
        let pts = [1.0, 0.7, 0.9].iter().enumerate().map(|(i, &a)| EchoPoint { t12_us: 5.0, amplitude: a, shot: i as u32 });
        let s = DecaySeries::new(pts.collect()).unwrap();
        let r = best_of_shots(&s).unwrap();
        assert_eq!(r.points().len(), 1);
        assert_eq!(r.points()[0].amplitude, 1.0);
        assert!(best_of_shots(&DecaySeries::new(vec![]).unwrap()).is_err());
    }

    #[test]
    fn noiseless_mims_round_trip() {
        let delays: Vec<f64> = (1..=30).map(|i| i as f64 * 10.0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = synth_decay(&delays, 1, 235.7, 1.4, 2.0, 0.0, &mut rng).unwrap();
        let fit = fit_mims(&s).unwrap();
        assert!((fit.t_m_us / 235.7 - 1.0).abs() < 1e-3);
        assert!((fit.stretch / 1.4 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn too_few_delays() {
        let pts = (1..=3).map(|i| EchoPoint { t12_us: i as f64, amplitude: 1.0 / i as f64, shot: 0 }).collect();
        assert!(matches!(fit_mims(&DecaySeries::new(pts).unwrap()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn flat_linewidth_fails() {
        let pts = (0..6)
            .map(|i| LinewidthPoint { temperature_mk: 40.0 + 20.0 * i as f64, gamma_khz: 1.4, sigma_khz: None })
            .collect();
        let r = fit_linewidth_temperature(&LinewidthSeries::new(pts).unwrap(), Weighting::Auto);
        assert!(matches!(r, Err(Error::FitFailure(_))));
    }

    #[test]
    fn echo_csv_reads_comments() {
        let text = "# schema_version=1\nt12_us,amplitude,shot\n1.5,0.9,0\n1.5,0.95,1\n";
        let s = DecaySeries::from_csv(text.as_bytes()).unwrap();
        assert_eq!(s.points().len(), 2);
    }

    #[test]
    fn linewidth_csv_optional_sigma() {
        let text = "temperature_mK,gamma_h_kHz,sigma_kHz\n40,1.4,0.1\n60,1.5,\n";
        let s = LinewidthSeries::from_csv(text.as_bytes()).unwrap();
        assert_eq!(s.points()[1].sigma_khz, None);
        let text = "temperature_mK,gamma_h_kHz\n40,1.4\n";
        assert_eq!(LinewidthSeries::from_csv(text.as_bytes()).unwrap().points().len(), 1);
    }
}
