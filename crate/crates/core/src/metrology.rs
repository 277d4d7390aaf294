//! Phase evolution, the two-outcome noon measurement, Fisher information and
//! Cramér–Rao bounds.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, NoonError, Result};
use crate::fock::{trace_of_product, DensityMatrix, Normalization};

/// Initial central-difference step in radians.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// What to do with probability that lands outside `span{|N,0⟩, |0,N⟩}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RestPolicy {
    /// Report a third outcome `p_rest = 1 − p₊ − p₋`.
    AggregateRest,
    /// Renormalize `p±` within the noon subspace.
    #[default]
    ConditionOnNoonSubspace,
}

/// Projective measurement `E± = ½(|N,0⟩ ± |0,N⟩)(⟨N,0| ± ⟨0,N|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MeasurementModel {
    pub photons: usize,
    pub policy: RestPolicy,
}

impl MeasurementModel {
    pub fn new(photons: usize, policy: RestPolicy) -> Result<Self> {
        if photons == 0 {
            return Err(invalid("measurement needs at least one photon"));
        }
        Ok(Self { photons, policy })
    }

    fn projector(&self, sign: f64) -> DMatrix<Complex64> {
        let n = self.photons;
        let mut e = DMatrix::zeros(n + 1, n + 1);
        e[(0, 0)] = Complex64::new(0.5, 0.0);
        e[(n, n)] = Complex64::new(0.5, 0.0);
        e[(0, n)] = Complex64::new(0.5 * sign, 0.0);
        e[(n, 0)] = Complex64::new(0.5 * sign, 0.0);
        e
    }

    pub fn projector_plus(&self) -> DMatrix<Complex64> {
        self.projector(1.0)
    }

    pub fn projector_minus(&self) -> DMatrix<Complex64> {
        self.projector(-1.0)
    }

    /// Projector onto `span{|N,0⟩, |0,N⟩}`.
    pub fn noon_subspace(&self) -> DMatrix<Complex64> {
        let n = self.photons;
        let mut p = DMatrix::zeros(n + 1, n + 1);
        p[(0, 0)] = Complex64::new(1.0, 0.0);
        p[(n, n)] = Complex64::new(1.0, 0.0);
        p
    }

    /// `Σ̂ = |N,0⟩⟨0,N| + |0,N⟩⟨N,0| = E₊ − E₋`.
    pub fn sigma(&self) -> DMatrix<Complex64> {
        let n = self.photons;
        let mut s = DMatrix::zeros(n + 1, n + 1);
        s[(0, n)] = Complex64::new(1.0, 0.0);
        s[(n, 0)] = Complex64::new(1.0, 0.0);
        s
    }
}

/// `ρ(φ) = e^{i n̂_b φ} ρ e^{−i n̂_b φ}`.
pub fn apply_phase_shift(rho: &DensityMatrix, phi: f64) -> DensityMatrix {
    let dim = rho.total_photons() + 1;
    let phases: Vec<Complex64> = (0..dim)
        .map(|m| Complex64::from_polar(1.0, m as f64 * phi))
        .collect();
    let matrix = DMatrix::from_fn(dim, dim, |i, j| {
        phases[i] * rho.entry(i, j) * phases[j].conj()
    });
    DensityMatrix::from_parts(matrix, rho.normalization())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeProbabilities {
    pub plus: f64,
    pub minus: f64,
    /// Present under [`RestPolicy::AggregateRest`].
    pub rest: Option<f64>,
}

impl OutcomeProbabilities {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.plus, self.minus];
        v.extend(self.rest);
        v
    }
}

/// `p(j|φ) = tr[E_j ρ(φ)]` under the model's rest policy.
pub fn outcome_probabilities(
    rho: &DensityMatrix,
    phi: f64,
    model: &MeasurementModel,
) -> Result<OutcomeProbabilities> {
    if rho.total_photons() != model.photons {
        return Err(NoonError::DimensionMismatch {
            expected: model.photons,
            found: rho.total_photons(),
        });
    }
    let shifted = apply_phase_shift(rho, phi);
    let plus = trace_of_product(&model.projector_plus(), shifted.matrix()).re;
    let minus = trace_of_product(&model.projector_minus(), shifted.matrix()).re;
    match model.policy {
        RestPolicy::AggregateRest => {
            if rho.normalization() != Normalization::TraceOne {
                return Err(NoonError::NotTraceOne);
            }
            Ok(OutcomeProbabilities {
                plus,
                minus,
                rest: Some(1.0 - plus - minus),
            })
        }
        RestPolicy::ConditionOnNoonSubspace => {
            let total = plus + minus;
            if !(total > 0.0) {
                return Err(NoonError::DegenerateSubspace);
            }
            Ok(OutcomeProbabilities {
                plus: plus / total,
                minus: minus / total,
                rest: None,
            })
        }
    }
}

/// `p± = ½ ± ½ cos(Nφ) e^{−Nδ/2}`.
pub fn analytic_probabilities(photons: usize, delta: f64, phi: f64) -> Result<(f64, f64)> {
    check_photons_delta(photons, delta)?;
    let n = photons as f64;
    let half_vis = 0.5 * (n * phi).cos() * (-n * delta / 2.0).exp();
    Ok((0.5 + half_vis, 0.5 - half_vis))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherEstimate {
    pub value: f64,
    /// Difference from the estimate one Richardson level lower.
    pub error_estimate: f64,
}

/// `F(φ) = Σⱼ (∂φ pⱼ)² / pⱼ` by central differences with two Richardson
/// levels, starting from `step`.
///
/// Outcomes with `p = 0` contribute nothing if their derivative vanishes and
/// are an error otherwise.
pub fn fisher_information_numeric<F>(
    probabilities: F,
    phi: f64,
    step: f64,
) -> Result<FisherEstimate>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(invalid(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let p0 = probabilities(phi)?;
    check_finite(&p0)?;
    let central = |h: f64| -> Result<Vec<f64>> {
        let hi = probabilities(phi + h)?;
        let lo = probabilities(phi - h)?;
        check_finite(&hi)?;
        check_finite(&lo)?;
        if hi.len() != p0.len() || lo.len() != p0.len() {
            return Err(invalid("probability function changed its outcome count"));
        }
        Ok(hi
            .iter()
            .zip(&lo)
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect())
    };
    let d0 = central(step)?;
    let d1 = central(step / 2.0)?;
    let d2 = central(step / 4.0)?;
    let richardson = |coarse: &[f64], fine: &[f64], factor: f64| -> Vec<f64> {
        coarse
            .iter()
            .zip(fine)
            .map(|(c, f)| (factor * f - c) / (factor - 1.0))
            .collect()
    };
    let r1_coarse = richardson(&d0, &d1, 4.0);
    let r1_fine = richardson(&d1, &d2, 4.0);
    let r2 = richardson(&r1_coarse, &r1_fine, 16.0);

    let value = fisher_sum(&p0, &r2)?;
    let lower = fisher_sum(&p0, &r1_fine)?;
    Ok(FisherEstimate {
        value,
        error_estimate: (value - lower).abs(),
    })
}

fn fisher_sum(p: &[f64], dp: &[f64]) -> Result<f64> {
    const ZERO_DERIVATIVE: f64 = 1e-9;
    let mut total = 0.0;
    for (j, (&pj, &dj)) in p.iter().zip(dp).enumerate() {
        if pj <= 0.0 {
            if dj.abs() > ZERO_DERIVATIVE {
                return Err(NoonError::SingularOutcome {
                    outcome: j,
                    derivative: dj,
                });
            }
            continue;
        }
        total += dj * dj / pj;
    }
    Ok(total)
}

fn check_finite(p: &[f64]) -> Result<()> {
    if p.iter().any(|x| !x.is_finite()) {
        return Err(NoonError::NonFinite("outcome probability".into()));
    }
    Ok(())
}

/// Closed forms of the two-outcome Fisher information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherVariant {
    /// `N² sin²(Nφ) / (e^{Nδ} − cos(Nφ))`, as printed.
    PaperPrinted,
    /// `N² sin²(Nφ) / (e^{Nδ} − cos²(Nφ))`, obtained by differentiating `p±`.
    #[default]
    Rederived,
}

pub fn fisher_information_analytic(
    photons: usize,
    delta: f64,
    phi: f64,
    variant: FisherVariant,
) -> Result<f64> {
    check_photons_delta(photons, delta)?;
    let n = photons as f64;
    let (s, c) = (n * phi).sin_cos();
    let denominator = match variant {
        FisherVariant::PaperPrinted => (n * delta).exp() - c,
        FisherVariant::Rederived => (n * delta).exp() - c * c,
    };
    if !(denominator > 0.0) {
        return Err(invalid(format!(
            "Fisher information undefined at N={photons}, delta={delta}, phi={phi}: denominator {denominator:e}"
        )));
    }
    Ok(n * n * s * s / denominator)
}

/// `Δφ ≥ 1/√F`.
pub fn cramer_rao_delta_phi(fisher: f64) -> Result<f64> {
    if !(fisher > 0.0) || !fisher.is_finite() {
        return Err(invalid(format!(
            "Cramér-Rao bound needs positive finite Fisher information, got {fisher}"
        )));
    }
    Ok(fisher.sqrt().recip())
}

/// `e^{Nδ/2} / N`, the bound at the operating point `φ = π/2N`.
pub fn min_uncertainty(photons: u64, delta: f64) -> f64 {
    let n = photons as f64;
    (n * delta / 2.0).exp() / n
}

pub fn shot_noise_limit(photons: u64) -> f64 {
    (photons as f64).sqrt().recip()
}

pub fn heisenberg_limit(photons: u64) -> f64 {
    (photons as f64).recip()
}

/// Integer photon number minimizing [`min_uncertainty`]: the better of
/// `⌊2/δ⌋` and `⌈2/δ⌉` (at least 1), ties going to the smaller.
pub fn optimal_photon_number(delta: f64) -> Result<u64> {
    if delta == 0.0 {
        return Err(NoonError::Unbounded(
            "with delta = 0 the bound 1/N decreases without limit".into(),
        ));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid(format!(
            "phase variance must be positive, got {delta}"
        )));
    }
    let x = 2.0 / delta;
    // 2^53: beyond this f64 no longer distinguishes consecutive integers.
    if x > 9_007_199_254_740_992.0 {
        return Err(NoonError::PhotonOverflow(x));
    }
    let lo = (x.floor() as u64).max(1);
    let hi = (x.ceil() as u64).max(1);
    if min_uncertainty(hi, delta) < min_uncertainty(lo, delta) {
        Ok(hi)
    } else {
        Ok(lo)
    }
}

/// Where the probabilities in a report came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilitySource {
    Analytic,
    ExactState,
}

/// Phase-estimation figures of merit at one `(N, δ, φ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub photons: u64,
    pub delta: f64,
    pub phi: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub fisher_information: f64,
    pub delta_phi_bound: f64,
    pub shot_noise_limit: f64,
    pub heisenberg_limit: f64,
    pub source: ProbabilitySource,
    pub variant: FisherVariant,
    pub policy: RestPolicy,
}

impl SensitivityReport {
    pub fn analytic(photons: u64, delta: f64, phi: f64, variant: FisherVariant) -> Result<Self> {
        let n = usize::try_from(photons).map_err(|_| invalid("photon number too large"))?;
        let (p_plus, p_minus) = analytic_probabilities(n, delta, phi)?;
        let fisher_information = fisher_information_analytic(n, delta, phi, variant)?;
        Ok(Self {
            photons,
            delta,
            phi,
            p_plus,
            p_minus,
            fisher_information,
            delta_phi_bound: cramer_rao_delta_phi(fisher_information)?,
            shot_noise_limit: shot_noise_limit(photons),
            heisenberg_limit: heisenberg_limit(photons),
            source: ProbabilitySource::Analytic,
            variant,
            policy: RestPolicy::ConditionOnNoonSubspace,
        })
    }
}

/// Sensitivity at `φ = π/2N` for every `N` in `photons`.
pub fn sensitivity_curve(
    delta: f64,
    photons: RangeInclusive<u64>,
) -> Result<Vec<SensitivityReport>> {
    if photons.is_empty() || *photons.start() == 0 {
        return Err(invalid(
            "photon range must be nonempty and start at 1 or above",
        ));
    }
    photons
        .map(|n| {
            SensitivityReport::analytic(n, delta, PI / (2.0 * n as f64), FisherVariant::Rederived)
        })
        .collect()
}

/// Real `x` where `e^{xδ/2}/x = 1/√x`, i.e. roots of `xδ = ln x`.
///
/// Empty when the noisy bound never drops below shot noise.
pub fn shot_noise_crossings(delta: f64) -> Vec<f64> {
    if !(delta > 0.0) || delta >= (-1.0f64).exp() {
        return Vec::new();
    }
    let g = |x: f64| x * delta - x.ln();
    let turn = 1.0 / delta;
    let mut hi = 2.0 * turn;
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    vec![bisect(g, 1.0, turn), bisect(g, turn, hi)]
}

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let lo_sign = g(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest resolvable feature `λ/(4N)`.
pub fn lithographic_resolution(wavelength: f64, photons: u64) -> Result<f64> {
    if photons == 0 {
        return Err(invalid("photon number must be at least 1"));
    }
    if !(wavelength > 0.0) || !wavelength.is_finite() {
        return Err(invalid(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    Ok(wavelength / (4.0 * photons as f64))
}

fn check_photons_delta(photons: usize, delta: f64) -> Result<()> {
    if photons == 0 {
        return Err(invalid("photon number must be at least 1"));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(invalid(format!(
            "phase variance must be finite and >= 0, got {delta}"
        )));
    }
    Ok(())
}
