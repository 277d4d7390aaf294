//! Gaussian-noise-averaged noon-state preparation.
//!
//! Every factor `(â† + e^{iφₖ} b̂†)` of the preparation product gets a phase
//! `φₖ ~ Normal(μₖ, δ)`, with `δ` the variance in rad². The averaged state is
//! built three ways: single noisy realizations ([`prepare_pure`]), a seeded
//! Monte Carlo mixture ([`prepare_mixed_mc`]) and the exact average from the
//! Gaussian characteristic function ([`prepare_mixed_exact`]).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, NoonError, Result};
use crate::fock::{apply_factors, DensityMatrix, Normalization, PureState};
use crate::rng::stream_rng;

/// Largest photon number [`prepare_mixed_exact`] accepts by default.
pub const DEFAULT_EXACT_CAP: usize = 20;

const MC_CHUNK: usize = 2048;

/// How the mean phases `μₖ` of the preparation factors are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetConvention {
    /// `μₖ = 2πk/N + π(N−1)/N`: roots of unity rotated so the noiseless
    /// product is exactly `|N,0⟩ + |0,N⟩` for every `N`.
    #[default]
    Noon,
    /// `μₖ = 2πk/N`, k = 1..N. The noiseless product is
    /// `|N,0⟩ + (−1)^{N+1}|0,N⟩`.
    RootsOfUnity,
    /// `μₖ = 2π(k−1)/N`. Same phase set as [`TargetConvention::RootsOfUnity`].
    RootsOfUnityZeroBased,
}

impl TargetConvention {
    pub fn phases(self, n: usize) -> Vec<f64> {
        let nf = n as f64;
        (1..=n)
            .map(|k| {
                let k = k as f64;
                match self {
                    TargetConvention::Noon => 2.0 * PI * k / nf + PI * (nf - 1.0) / nf,
                    TargetConvention::RootsOfUnity => 2.0 * PI * k / nf,
                    TargetConvention::RootsOfUnityZeroBased => 2.0 * PI * (k - 1.0) / nf,
                }
            })
            .collect()
    }
}

/// Mean phases and common variance of the preparation factors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseModel {
    photons: usize,
    delta: f64,
    target_phases: Vec<f64>,
}

impl NoiseModel {
    pub fn new(photons: usize, delta: f64) -> Result<Self> {
        Self::with_convention(photons, delta, TargetConvention::default())
    }

    pub fn with_convention(
        photons: usize,
        delta: f64,
        convention: TargetConvention,
    ) -> Result<Self> {
        if photons == 0 {
            return Err(invalid("noise model needs at least one factor"));
        }
        Self::with_targets(delta, convention.phases(photons))
    }

    pub fn with_targets(delta: f64, target_phases: Vec<f64>) -> Result<Self> {
        if target_phases.is_empty() {
            return Err(invalid("noise model needs at least one factor"));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(invalid(format!(
                "phase variance must be finite and >= 0, got {delta}"
            )));
        }
        if target_phases.iter().any(|p| !p.is_finite()) {
            return Err(NoonError::NonFinite("target phase".into()));
        }
        Ok(Self {
            photons: target_phases.len(),
            delta,
            target_phases,
        })
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    /// Phase variance δ in rad².
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn target_phases(&self) -> &[f64] {
        &self.target_phases
    }

    /// `E[e^{isφₖ}] = exp(isμₖ − s²δ/2)` for `s ∈ {−1, 0, 1}`.
    pub fn characteristic(&self, k: usize, s: i32) -> Complex64 {
        let s = s as f64;
        Complex64::from_polar((-s * s * self.delta / 2.0).exp(), s * self.target_phases[k])
    }

    /// `ln(2·N!)`, the log of the paper-norm prefactor's inverse.
    fn log_paper_norm(&self) -> f64 {
        std::f64::consts::LN_2 + (2..=self.photons).map(|k| (k as f64).ln()).sum::<f64>()
    }
}

/// One realization of the factor phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSample {
    pub phases: Vec<f64>,
    pub seed: u64,
    /// Stream index of the counter path `(seed, stream, k)`.
    pub stream: u64,
}

impl PhaseSample {
    /// Draws phase `k` as the `k`-th normal variate of stream `stream`.
    pub fn draw(model: &NoiseModel, seed: u64, stream: u64) -> Self {
        let mut rng = stream_rng(seed, stream);
        let sd = model.delta.sqrt();
        let phases = model
            .target_phases
            .iter()
            .map(|&mu| {
                // sd is finite and nonnegative by construction.
                Normal::new(mu, sd).expect("valid normal").sample(&mut rng)
            })
            .collect();
        Self {
            phases,
            seed,
            stream,
        }
    }

    /// A sample sitting exactly on the model's target phases.
    pub fn at_targets(model: &NoiseModel) -> Self {
        Self {
            phases: model.target_phases.clone(),
            seed: 0,
            stream: 0,
        }
    }
}

/// Normalized `∏ₖ(â† + e^{iφₖ} b̂†)|0⟩` for one phase realization.
pub fn prepare_pure(model: &NoiseModel, sample: &PhaseSample) -> Result<PureState> {
    if sample.phases.len() != model.photons {
        return Err(NoonError::DimensionMismatch {
            expected: model.photons,
            found: sample.phases.len(),
        });
    }
    Ok(apply_factors(&sample.phases)?.state)
}

/// Per-entry standard errors of a Monte Carlo matrix estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryErrors {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl EntryErrors {
    /// Delta-method standard error of `|z|` for entry `(i, j)`, ignoring the
    /// real/imaginary covariance.
    pub fn magnitude(&self, estimate: &DensityMatrix, i: usize, j: usize) -> f64 {
        let z = estimate.entry(i, j);
        let mag = z.norm();
        if mag == 0.0 {
            return self.re[(i, j)].hypot(self.im[(i, j)]);
        }
        ((z.re * self.re[(i, j)]).powi(2) + (z.im * self.im[(i, j)]).powi(2)).sqrt() / mag
    }
}

/// Monte Carlo estimate of the noise-averaged state.
///
/// Each sample's normalized product is weighted by its raw squared norm over
/// `2·N!`, which is the relative heralding probability of that realization.
/// The weighted mean is an unbiased estimate of the paper-norm average and the
/// trace-one matrix is the corresponding ratio estimate.
#[derive(Debug, Clone)]
pub struct MonteCarloMixture {
    pub samples: usize,
    pub seed: u64,
    pub paper_norm: DensityMatrix,
    pub paper_norm_se: EntryErrors,
    pub trace_one: DensityMatrix,
    pub trace_one_se: EntryErrors,
}

#[derive(Clone)]
struct Moments {
    count: usize,
    // X = per-sample paper-norm entry, Y = per-sample paper-norm trace.
    x: Vec<Complex64>,
    xx_re: Vec<f64>,
    xx_im: Vec<f64>,
    xy: Vec<Complex64>,
    y: f64,
    yy: f64,
}

impl Moments {
    fn new(dim: usize) -> Self {
        let len = dim * dim;
        Self {
            count: 0,
            x: vec![Complex64::new(0.0, 0.0); len],
            xx_re: vec![0.0; len],
            xx_im: vec![0.0; len],
            xy: vec![Complex64::new(0.0, 0.0); len],
            y: 0.0,
            yy: 0.0,
        }
    }

    fn push(&mut self, state: &PureState, weight: f64) {
        let a = state.amplitudes();
        let dim = a.len();
        self.count += 1;
        self.y += weight;
        self.yy += weight * weight;
        for (i, ai) in a.iter().enumerate() {
            let wa = ai * weight;
            for (j, aj) in a.iter().enumerate() {
                let x = wa * aj.conj();
                let idx = i * dim + j;
                self.x[idx] += x;
                self.xx_re[idx] += x.re * x.re;
                self.xx_im[idx] += x.im * x.im;
                self.xy[idx] += x * weight;
            }
        }
    }

    fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.y += other.y;
        self.yy += other.yy;
        for idx in 0..self.x.len() {
            self.x[idx] += other.x[idx];
            self.xx_re[idx] += other.xx_re[idx];
            self.xx_im[idx] += other.xx_im[idx];
            self.xy[idx] += other.xy[idx];
        }
    }
}

/// Equal-weight Monte Carlo over i.i.d. phase samples, heralding-weighted.
///
/// Sample `i` draws its phases from stream `i` of `seed`, and chunk sums are
/// combined in index order, so the output is bit-identical for any thread
/// count.
pub fn prepare_mixed_mc(
    model: &NoiseModel,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloMixture> {
    if samples == 0 {
        return Err(invalid("Monte Carlo needs at least one sample"));
    }
    let dim = model.photons + 1;
    let log_norm = model.log_paper_norm();
    let chunks = samples.div_ceil(MC_CHUNK);
    let partials: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Moments> {
            let mut acc = Moments::new(dim);
            let end = ((c + 1) * MC_CHUNK).min(samples);
            for i in c * MC_CHUNK..end {
                let sample = PhaseSample::draw(model, seed, i as u64);
                let product = apply_factors(&sample.phases)?;
                let weight = (product.log_norm_sqr - log_norm).exp();
                acc.push(&product.state, weight);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let mut total = Moments::new(dim);
    for p in &partials {
        total.merge(p);
    }

    let n = total.count as f64;
    let dof = (n - 1.0).max(1.0);
    let ratio_scale = Complex64::new(total.y, 0.0);
    let y_mean = total.y / n;

    let mut paper = DMatrix::zeros(dim, dim);
    let mut ratio = DMatrix::zeros(dim, dim);
    let mut paper_se = EntryErrors {
        re: DMatrix::zeros(dim, dim),
        im: DMatrix::zeros(dim, dim),
    };
    let mut ratio_se = paper_se.clone();
    for i in 0..dim {
        for j in 0..dim {
            let idx = i * dim + j;
            let sx = total.x[idx];
            let mean = sx / n;
            paper[(i, j)] = mean;
            paper_se.re[(i, j)] =
                ((total.xx_re[idx] - n * mean.re * mean.re).max(0.0) / dof / n).sqrt();
            paper_se.im[(i, j)] =
                ((total.xx_im[idx] - n * mean.im * mean.im).max(0.0) / dof / n).sqrt();

            let r = sx / ratio_scale;
            ratio[(i, j)] = r;
            // Var(X − R·Y) per component, from the accumulated moments.
            let var_re = (total.xx_re[idx] - 2.0 * r.re * total.xy[idx].re
                + r.re * r.re * total.yy)
                .max(0.0)
                / dof;
            let var_im = (total.xx_im[idx] - 2.0 * r.im * total.xy[idx].im
                + r.im * r.im * total.yy)
                .max(0.0)
                / dof;
            ratio_se.re[(i, j)] = (var_re / n).sqrt() / y_mean;
            ratio_se.im[(i, j)] = (var_im / n).sqrt() / y_mean;
        }
    }

    Ok(MonteCarloMixture {
        samples,
        seed,
        paper_norm: DensityMatrix::from_parts(paper, Normalization::PaperNorm),
        paper_norm_se: paper_se,
        trace_one: DensityMatrix::from_parts(ratio, Normalization::TraceOne),
        trace_one_se: ratio_se,
    })
}

/// Exact Gaussian average in both normalizations.
#[derive(Debug, Clone)]
pub struct ExactMixture {
    pub paper_norm: DensityMatrix,
    pub trace_one: DensityMatrix,
}

pub fn prepare_mixed_exact(model: &NoiseModel) -> Result<ExactMixture> {
    prepare_mixed_exact_with_cap(model, DEFAULT_EXACT_CAP)
}

/// Exact average of `∏ₖ(â† + e^{iφₖ}b̂†)|0⟩⟨0|∏ₖ(â + e^{−iφₖ}b̂)`.
///
/// Expanding the ket over subsets `S` and the bra over subsets `T` of the
/// factors, the `(m, m')` entry needs `Σ_{|S|=m,|T|=m'} ∏ₖ E[e^{i(sₖ−tₖ)φₖ}]`.
/// The phases are independent, so that sum is the `x^m y^{m'}` coefficient of
/// `∏ₖ (1 + χₖ(+1)·x + χₖ(−1)·y + x·y)`, built in `O(N³)`. The Fock ladder
/// factors combine with `1/(2·N!)` into `1/(2·√(C(N,m)·C(N,m')))`.
pub fn prepare_mixed_exact_with_cap(model: &NoiseModel, cap: usize) -> Result<ExactMixture> {
    let n = model.photons;
    if n > cap {
        return Err(NoonError::Capacity { requested: n, cap });
    }
    let dim = n + 1;
    let zero = Complex64::new(0.0, 0.0);
    let mut coeff = DMatrix::from_element(dim, dim, zero);
    coeff[(0, 0)] = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let up = model.characteristic(k, 1);
        let down = model.characteristic(k, -1);
        let mut next = DMatrix::from_element(dim, dim, zero);
        // After k factors only degrees <= k are populated.
        for i in 0..=k + 1 {
            for j in 0..=k + 1 {
                let mut v = if i <= k && j <= k {
                    coeff[(i, j)]
                } else {
                    zero
                };
                if i > 0 && j <= k {
                    v += up * coeff[(i - 1, j)];
                }
                if j > 0 && i <= k {
                    v += down * coeff[(i, j - 1)];
                }
                if i > 0 && j > 0 {
                    v += coeff[(i - 1, j - 1)];
                }
                next[(i, j)] = v;
            }
        }
        coeff = next;
    }

    let inv_sqrt_binom: Vec<f64> = (0..=n).map(|m| binomial(n, m).sqrt().recip()).collect();
    let mut paper = DMatrix::from_fn(dim, dim, |i, j| {
        coeff[(i, j)] * (0.5 * inv_sqrt_binom[i] * inv_sqrt_binom[j])
    });
    // Exact Hermitian symmetry; the recursion is symmetric up to rounding.
    for i in 0..dim {
        paper[(i, i)].im = 0.0;
        for j in i + 1..dim {
            let avg = (paper[(i, j)] + paper[(j, i)].conj()) * 0.5;
            paper[(i, j)] = avg;
            paper[(j, i)] = avg.conj();
        }
    }
    let paper_norm = DensityMatrix::from_parts(paper, Normalization::PaperNorm);
    let trace_one = paper_norm.to_trace_one()?;
    Ok(ExactMixture {
        paper_norm,
        trace_one,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Population of `span{|N,0⟩, |0,N⟩}` in a trace-one state.
pub fn noon_weight(rho: &DensityMatrix) -> Result<f64> {
    if rho.normalization() != Normalization::TraceOne {
        return Err(NoonError::NotTraceOne);
    }
    let n = rho.total_photons();
    if n == 0 {
        return Err(invalid("noon weight needs at least one photon"));
    }
    Ok(rho.entry(0, 0).re + rho.entry(n, n).re)
}

/// `⟨N,0|ρ|0,N⟩`.
pub fn noon_coherence(rho: &DensityMatrix) -> Complex64 {
    rho.entry(0, rho.total_photons())
}

/// `2·|⟨N,0|ρ|0,N⟩|`; equals `e^{−Nδ/2}` for the paper-norm average.
pub fn visibility(rho: &DensityMatrix) -> f64 {
    2.0 * noon_coherence(rho).norm()
}
