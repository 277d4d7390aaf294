//! Bootstrapped phase calibration.
//!
//! A noisy noon state of optimal size `N = 2/δ` measures phase to
//! `Δφ = eδ/2`. When that beats the apparatus error `√δ`, the improved
//! estimate recalibrates the phase shifters, giving the recursion
//! `δₙ₊₁ = (eδₙ/2)²`.

use std::f64::consts::E;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::metrology::{min_uncertainty, optimal_photon_number};

/// Bootstrapping improves the phase error iff `√δ < 2/e`.
pub const FEASIBILITY_THRESHOLD: f64 = 2.0 / E;

/// Photon counts quoted in the text for an initial ten-photon optimum,
/// keyed by iteration index.
pub const TEXT_PHOTON_COUNTS: [(u32, f64); 3] = [(0, 10.0), (2, 180.0), (3, 1e5)];

const MAX_EXACT_PHOTONS: f64 = 9_007_199_254_740_992.0;

pub fn can_bootstrap(delta: f64) -> Result<bool> {
    check_delta(delta)?;
    // Compare variances so the boundary (2/e)² itself is excluded exactly.
    Ok(delta < FEASIBILITY_THRESHOLD * FEASIBILITY_THRESHOLD)
}

/// One step of `δₙ₊₁ = (eδₙ/2)²`.
pub fn next_delta(delta: f64) -> f64 {
    let half = E * delta / 2.0;
    half * half
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMethod {
    ExactRecursion,
    PaperClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapRow {
    pub n: u32,
    /// Phase variance in rad².
    pub delta: f64,
    pub sqrt_delta: f64,
    /// Integer photon number, when it fits in the exact-integer range of f64.
    pub photons: Option<u64>,
    pub photons_real: f64,
    pub delta_phi: f64,
    /// Iteration stopped after this row because δ left the normal f64 range.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSchedule {
    pub method: ScheduleMethod,
    pub delta_0: f64,
    pub feasible: bool,
    pub iterations: Vec<BootstrapRow>,
}

/// Iterates the exact recursion for `steps` rounds, returning `steps + 1`
/// rows (fewer if δ underflows).
pub fn iterate_exact(delta_0: f64, steps: u32) -> Result<BootstrapSchedule> {
    let feasible = can_bootstrap(delta_0)?;
    let mut iterations = Vec::new();
    if feasible {
        let mut delta = delta_0;
        for n in 0..=steps {
            let photons = optimal_photon_number(delta).ok();
            let delta_phi = match photons {
                Some(p) => min_uncertainty(p, delta),
                // Continuous optimum e^{1}/(2/δ).
                None => E * delta / 2.0,
            };
            let next = next_delta(delta);
            let saturated = n < steps && !next.is_normal();
            iterations.push(BootstrapRow {
                n,
                delta,
                sqrt_delta: delta.sqrt(),
                photons,
                photons_real: 2.0 / delta,
                delta_phi,
                saturated,
            });
            if saturated {
                break;
            }
            delta = next;
        }
    }
    Ok(BootstrapSchedule {
        method: ScheduleMethod::ExactRecursion,
        delta_0,
        feasible,
        iterations,
    })
}

/// Evaluates `δₙ = ((e/2)δ₀)^{2ⁿ}` and `Nₙ = 2(N₀/e)^{2ⁿ}` as printed.
///
/// At `n = 0` this gives `(e/2)δ₀` and `2N₀`, not the initial values.
pub fn paper_closed_form(delta_0: f64, photons_0: f64, steps: u32) -> Result<BootstrapSchedule> {
    let feasible = can_bootstrap(delta_0)?;
    if !(photons_0 > 0.0) || !photons_0.is_finite() {
        return Err(invalid(format!(
            "initial photon number must be positive, got {photons_0}"
        )));
    }
    let mut iterations = Vec::new();
    for n in 0..=steps {
        let power = 2f64.powi(n as i32);
        let delta = (E / 2.0 * delta_0).powf(power);
        let photons_real = 2.0 * (photons_0 / E).powf(power);
        let saturated = !delta.is_normal() || !photons_real.is_finite();
        let photons = (photons_real.is_finite() && photons_real <= MAX_EXACT_PHOTONS)
            .then(|| photons_real.round() as u64);
        iterations.push(BootstrapRow {
            n,
            delta,
            sqrt_delta: delta.sqrt(),
            photons,
            photons_real,
            delta_phi: (photons_real * delta / 2.0).exp() / photons_real,
            saturated,
        });
        if saturated {
            break;
        }
    }
    Ok(BootstrapSchedule {
        method: ScheduleMethod::PaperClosedForm,
        delta_0,
        feasible,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub n: u32,
    pub exact_delta: Option<f64>,
    pub exact_photons: Option<u64>,
    pub closed_form_delta: Option<f64>,
    pub closed_form_photons: Option<f64>,
    pub text_photons: Option<f64>,
}

/// Exact recursion, printed closed form and quoted photon counts side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryComparison {
    pub delta_0: f64,
    pub photons_0: u64,
    pub feasible: bool,
    pub rows: Vec<TrajectoryRow>,
    pub discrepancies: Vec<String>,
}

pub fn compare_trajectories(delta_0: f64, steps: u32) -> Result<TrajectoryComparison> {
    let photons_0 = optimal_photon_number(delta_0)?;
    let exact = iterate_exact(delta_0, steps)?;
    let closed = paper_closed_form(delta_0, photons_0 as f64, steps)?;
    let text_applies = photons_0 == TEXT_PHOTON_COUNTS[0].1 as u64;

    let rows: Vec<TrajectoryRow> = (0..=steps)
        .map(|n| {
            let e = exact.iterations.get(n as usize);
            let c = closed.iterations.get(n as usize);
            TrajectoryRow {
                n,
                exact_delta: e.map(|r| r.delta),
                exact_photons: e.and_then(|r| r.photons),
                closed_form_delta: c.map(|r| r.delta),
                closed_form_photons: c.map(|r| r.photons_real),
                text_photons: text_applies
                    .then(|| {
                        TEXT_PHOTON_COUNTS
                            .iter()
                            .find(|(k, _)| *k == n)
                            .map(|(_, v)| *v)
                    })
                    .flatten(),
            }
        })
        .collect();

    let mut discrepancies = Vec::new();
    if let Some(first) = closed.iterations.first() {
        if (first.delta - delta_0).abs() > 1e-12 * delta_0 {
            discrepancies.push(format!(
                "closed form at n=0 gives delta={:.6} instead of delta_0={delta_0:.6} and N={:.3} instead of N_0={photons_0}",
                first.delta, first.photons_real
            ));
        }
    }
    for row in &rows {
        let Some(text) = row.text_photons else {
            continue;
        };
        let exact = row.exact_photons.map(|p| p as f64);
        for (label, value) in [
            ("exact recursion", exact),
            ("closed form", row.closed_form_photons),
        ] {
            if let Some(v) = value {
                if (v - text).abs() > 0.1 * text {
                    discrepancies.push(format!(
                        "n={}: {label} gives N={v:.0}, quoted value is {text:.0}",
                        row.n
                    ));
                }
            }
        }
    }
    Ok(TrajectoryComparison {
        delta_0,
        photons_0,
        feasible: exact.feasible,
        rows,
        discrepancies,
    })
}

/// Phase-shifter delay line with wave number `k` and length error `Δl`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayLineSpec {
    pub wave_number: f64,
    pub delay_error: f64,
}

impl DelayLineSpec {
    pub fn new(wave_number: f64, delay_error: f64) -> Result<Self> {
        if !(wave_number > 0.0) || !wave_number.is_finite() {
            return Err(invalid(format!(
                "wave number must be positive, got {wave_number}"
            )));
        }
        if !(delay_error >= 0.0) || !delay_error.is_finite() {
            return Err(invalid(format!(
                "delay error must be >= 0, got {delay_error}"
            )));
        }
        Ok(Self {
            wave_number,
            delay_error,
        })
    }
}

/// `√δ = k·Δl`.
pub fn phase_std_from_delay(spec: &DelayLineSpec) -> f64 {
    spec.wave_number * spec.delay_error
}

/// `Δl = √δ / k`.
pub fn delay_from_phase_std(wave_number: f64, sqrt_delta: f64) -> Result<f64> {
    if !(wave_number > 0.0) || !wave_number.is_finite() {
        return Err(invalid(format!(
            "wave number must be positive, got {wave_number}"
        )));
    }
    if !(sqrt_delta >= 0.0) {
        return Err(invalid(format!(
            "phase error must be >= 0, got {sqrt_delta}"
        )));
    }
    Ok(sqrt_delta / wave_number)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid(format!(
            "phase variance must be positive and finite, got {delta}"
        )));
    }
    Ok(())
}
