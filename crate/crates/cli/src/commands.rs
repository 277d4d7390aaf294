use std::f64::consts::PI;

use noon_core::bootstrap::{
    can_bootstrap, compare_trajectories, iterate_exact, paper_closed_form, BootstrapSchedule,
};
use noon_core::estimation::verify_crb;
use noon_core::metrology::{
    fisher_information_analytic, fisher_information_numeric, optimal_photon_number,
    outcome_probabilities, sensitivity_curve, shot_noise_crossings, DEFAULT_FD_STEP,
};
use noon_core::noisy_prep::{
    noon_weight, prepare_mixed_exact_with_cap, prepare_mixed_mc, visibility, EntryErrors,
    DEFAULT_EXACT_CAP,
};
use noon_core::{
    noon_state, DensityMatrix, FisherVariant, MeasurementModel, NoiseModel, RestPolicy,
    TargetConvention,
};
use serde::Serialize;

use crate::args::{
    BootstrapArgs, BootstrapMethod, Convention, CurveArgs, EstimateArgs, FisherArgs, FisherSource,
    MatrixNorm, Policy, PrepMethod, PrepareArgs,
};
use crate::config::Layer;
use crate::error::CliError;
use crate::output::{Cell, Format, Record, Report, Results, Table};

/// Settings shared by every command, echoed into the output.
#[derive(Debug, Clone, Serialize)]
pub struct Common {
    pub seed: u64,
    pub format: Format,
    pub digits: usize,
    pub output: Option<String>,
    pub in_units_of_pi: bool,
}

impl Common {
    fn angle(&self, value: f64) -> f64 {
        if self.in_units_of_pi {
            value * PI
        } else {
            value
        }
    }
}

#[derive(Serialize)]
struct RunConfig<'a, P: Serialize> {
    #[serde(flatten)]
    params: &'a P,
    #[serde(flatten)]
    common: &'a Common,
}

/// Rendered output plus an error to report after the output is written.
pub struct Outcome {
    pub bytes: Vec<u8>,
    pub deferred: Option<CliError>,
}

fn finish<P: Serialize>(
    command: &str,
    common: &Common,
    params: &P,
    results: Results,
    warnings: Vec<String>,
) -> Result<Vec<u8>, CliError> {
    let config = RunConfig { params, common };
    Report {
        command,
        config: &config,
        results: &results,
        warnings: &warnings,
    }
    .render(common.format, common.digits)
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<Convention> for TargetConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Noon => TargetConvention::Noon,
            Convention::RootsOfUnity => TargetConvention::RootsOfUnity,
            Convention::RootsOfUnityZeroBased => TargetConvention::RootsOfUnityZeroBased,
        }
    }
}

#[derive(Serialize)]
struct PrepareParams {
    n: usize,
    delta: f64,
    method: PrepMethod,
    samples: Option<usize>,
    convention: Convention,
    cap: Option<usize>,
    matrix: bool,
    normalization: MatrixNorm,
}

pub fn prepare(args: PrepareArgs, common: &Common, layer: &Layer) -> Result<Outcome, CliError> {
    let method = layer.pick(args.method, "method", PrepMethod::Exact)?;
    let params = PrepareParams {
        n: layer.require(args.n, "n")?,
        delta: layer.require(args.delta, "delta")?,
        method,
        samples: match method {
            PrepMethod::Mc => Some(layer.pick(args.samples, "samples", 100_000)?),
            PrepMethod::Exact => None,
        },
        convention: layer.pick(args.convention, "convention", Convention::Noon)?,
        cap: match method {
            PrepMethod::Exact => Some(layer.pick(args.cap, "cap", DEFAULT_EXACT_CAP)?),
            PrepMethod::Mc => None,
        },
        matrix: layer.switch(args.matrix, "matrix")?,
        normalization: layer.pick(args.normalization, "normalization", MatrixNorm::PaperNorm)?,
    };
    let n = params.n;
    let model = NoiseModel::with_convention(n, params.delta, params.convention.into())?;

    let (paper, trace_one, errors): (
        DensityMatrix,
        DensityMatrix,
        Option<(EntryErrors, EntryErrors)>,
    ) = match (params.samples, params.cap) {
        (Some(samples), _) => {
            let mc = prepare_mixed_mc(&model, samples, common.seed)?;
            (
                mc.paper_norm,
                mc.trace_one,
                Some((mc.paper_norm_se, mc.trace_one_se)),
            )
        }
        (None, cap) => {
            let exact = prepare_mixed_exact_with_cap(&model, cap.unwrap_or(DEFAULT_EXACT_CAP))?;
            (exact.paper_norm, exact.trace_one, None)
        }
    };

    let fidelity = trace_one.fidelity(&noon_state(n)?)?;
    let trace = paper.trace().re;
    let mut summary = Record::default();
    summary.push("n", n);
    summary.push("delta", params.delta);
    summary.push("noon_fidelity", fidelity);
    summary.push("noon_weight", noon_weight(&trace_one)?);
    summary.push("visibility", visibility(&paper));
    summary.push(
        "visibility_se",
        errors
            .as_ref()
            .map(|(p, _)| 2.0 * p.magnitude(&paper, 0, n)),
    );
    summary.push(
        "visibility_analytic",
        (-(n as f64) * params.delta / 2.0).exp(),
    );
    summary.push("trace_paper_norm", trace);
    summary.push("min_eigenvalue", trace_one.min_eigenvalue());

    let mut warnings = vec![format!(
        "visibility is 2|<N,0|rho|0,N>| of the 1/(2N!)-normalized average (trace {trace:.6}); \
         noon_fidelity and noon_weight use the trace-one state"
    )];
    if params.convention != Convention::Noon && n % 2 == 0 {
        warnings.push(
            "roots-of-unity targets produce (|N,0> - |0,N>)/sqrt(2) for even N; \
             noon_fidelity is measured against (|N,0> + |0,N>)/sqrt(2)"
                .into(),
        );
    }

    let table = params.matrix.then(|| {
        let (rho, se) = match params.normalization {
            MatrixNorm::PaperNorm => (&paper, errors.as_ref().map(|e| &e.0)),
            MatrixNorm::TraceOne => (&trace_one, errors.as_ref().map(|e| &e.1)),
        };
        let mut t = Table::new(&["row", "col", "re", "im", "re_se", "im_se"]);
        for i in 0..=n {
            for j in 0..=n {
                let z = rho.entry(i, j);
                t.push(vec![
                    i.into(),
                    j.into(),
                    z.re.into(),
                    z.im.into(),
                    se.map(|e| e.re[(i, j)]).into(),
                    se.map(|e| e.im[(i, j)]).into(),
                ]);
            }
        }
        t
    });

    let bytes = finish(
        "prepare",
        common,
        &params,
        Results { summary, table },
        warnings,
    )?;
    Ok(Outcome {
        bytes,
        deferred: None,
    })
}

#[derive(Serialize)]
struct CurveParams {
    delta: f64,
    n_min: u64,
    n_max: u64,
}

const MAX_CURVE_ROWS: u64 = 10_000_000;

pub fn curve(args: CurveArgs, common: &Common, layer: &Layer) -> Result<Outcome, CliError> {
    let params = CurveParams {
        delta: layer.require(args.delta, "delta")?,
        n_min: layer.pick(args.n_min, "n_min", 1)?,
        n_max: layer.pick(args.n_max, "n_max", 400)?,
    };
    if params.n_min == 0 || params.n_max < params.n_min {
        return Err(invalid(format!(
            "need 1 <= n-min <= n-max, got {}..{}",
            params.n_min, params.n_max
        )));
    }
    if params.n_max - params.n_min >= MAX_CURVE_ROWS {
        return Err(invalid(format!("at most {MAX_CURVE_ROWS} rows per curve")));
    }
    let rows = sensitivity_curve(params.delta, params.n_min..=params.n_max)?;
    // First minimum wins ties.
    let best = rows.iter().enumerate().fold(0, |b, (i, r)| {
        if r.delta_phi_bound < rows[b].delta_phi_bound {
            i
        } else {
            b
        }
    });

    let mut table = Table::new(&["n", "delta_phi", "shot_noise", "heisenberg", "is_minimum"]);
    for (i, r) in rows.iter().enumerate() {
        table.push(vec![
            r.photons.into(),
            r.delta_phi_bound.into(),
            r.shot_noise_limit.into(),
            r.heisenberg_limit.into(),
            (i == best).into(),
        ]);
    }
    let crossings = shot_noise_crossings(params.delta);
    let mut summary = Record::default();
    summary.push("minimum_n", rows[best].photons);
    summary.push("minimum_delta_phi", rows[best].delta_phi_bound);
    summary.push(
        "optimal_photon_number",
        optimal_photon_number(params.delta).ok(),
    );
    summary.push("shot_noise_crossing_low", crossings.first().copied());
    summary.push("shot_noise_crossing_high", crossings.get(1).copied());

    let bytes = finish(
        "curve",
        common,
        &params,
        Results {
            summary,
            table: Some(table),
        },
        Vec::new(),
    )?;
    Ok(Outcome {
        bytes,
        deferred: None,
    })
}

#[derive(Serialize)]
struct BootstrapParams {
    delta0: f64,
    sqrt_delta0: f64,
    steps: u32,
    method: BootstrapMethod,
}

fn resolve_delta0(args: &BootstrapArgs, layer: &Layer) -> Result<f64, CliError> {
    let from_sqrt = |s: f64| {
        if s < 0.0 || !s.is_finite() {
            Err(invalid(format!(
                "sqrt-delta0 must be non-negative, got {s}"
            )))
        } else {
            Ok(s * s)
        }
    };
    if let Some(d) = args.delta0 {
        return Ok(d);
    }
    if let Some(s) = args.sqrt_delta0 {
        return from_sqrt(s);
    }
    match (
        layer.get::<f64>("delta0")?,
        layer.get::<f64>("sqrt_delta0")?,
    ) {
        (Some(_), Some(_)) => Err(CliError::Config(
            "config sets both bootstrap.delta0 and bootstrap.sqrt_delta0".into(),
        )),
        (Some(d), None) => Ok(d),
        (None, Some(s)) => from_sqrt(s),
        (None, None) => Err(invalid(
            "missing required parameter `--delta0` or `--sqrt-delta0`",
        )),
    }
}

fn schedule_table(schedule: &BootstrapSchedule) -> Table {
    let mut t = Table::new(&[
        "n",
        "delta",
        "sqrt_delta",
        "photons",
        "photons_real",
        "delta_phi",
        "saturated",
    ]);
    for r in &schedule.iterations {
        t.push(vec![
            r.n.into(),
            r.delta.into(),
            r.sqrt_delta.into(),
            r.photons.into(),
            r.photons_real.into(),
            r.delta_phi.into(),
            r.saturated.into(),
        ]);
    }
    t
}

pub fn bootstrap(args: BootstrapArgs, common: &Common, layer: &Layer) -> Result<Outcome, CliError> {
    let delta0 = resolve_delta0(&args, layer)?;
    let params = BootstrapParams {
        delta0,
        sqrt_delta0: delta0.sqrt(),
        steps: layer.pick(args.steps, "steps", 3)?,
        method: layer.pick(args.method, "method", BootstrapMethod::Compare)?,
    };
    let feasible = can_bootstrap(delta0)?;
    let mut summary = Record::default();
    summary.push("feasible", feasible);
    let mut warnings = Vec::new();

    let table = match params.method {
        BootstrapMethod::Exact => schedule_table(&iterate_exact(delta0, params.steps)?),
        BootstrapMethod::ClosedForm => {
            let photons_0 = optimal_photon_number(delta0)?;
            summary.push("photons_0", photons_0);
            warnings.push(
                "closed form evaluated as printed: at n=0 it returns (e/2)delta0 and 2N0 \
                 rather than the initial values"
                    .into(),
            );
            schedule_table(&paper_closed_form(delta0, photons_0 as f64, params.steps)?)
        }
        BootstrapMethod::Compare => {
            let cmp = compare_trajectories(delta0, params.steps)?;
            summary.push("photons_0", cmp.photons_0);
            warnings.extend(cmp.discrepancies.iter().cloned());
            let mut t = Table::new(&[
                "n",
                "exact_delta",
                "exact_photons",
                "closed_form_delta",
                "closed_form_photons",
                "text_photons",
            ]);
            for r in &cmp.rows {
                t.push(vec![
                    r.n.into(),
                    r.exact_delta.into(),
                    r.exact_photons.into(),
                    r.closed_form_delta.into(),
                    r.closed_form_photons.into(),
                    r.text_photons.into(),
                ]);
            }
            t
        }
    };
    if table
        .rows
        .iter()
        .any(|r| r.last() == Some(&Cell::Bool(true)))
    {
        warnings.push("delta underflowed to a subnormal value; schedule truncated".into());
    }
    let bytes = finish(
        "bootstrap",
        common,
        &params,
        Results {
            summary,
            table: Some(table),
        },
        warnings,
    )?;
    Ok(Outcome {
        bytes,
        deferred: (!feasible).then_some(CliError::Infeasible {
            sqrt_delta: params.sqrt_delta0,
        }),
    })
}

#[derive(Serialize)]
struct EstimateParams {
    n: usize,
    delta: f64,
    phi: f64,
    shots: u64,
    trials: usize,
}

pub fn estimate(args: EstimateArgs, common: &Common, layer: &Layer) -> Result<Outcome, CliError> {
    let params = EstimateParams {
        n: layer.require(args.n, "n")?,
        delta: layer.require(args.delta, "delta")?,
        phi: common.angle(layer.require(args.phi, "phi")?),
        shots: layer.pick(args.shots, "shots", 10_000)?,
        trials: layer.pick(args.trials, "trials", 500)?,
    };
    let s = verify_crb(
        params.n,
        params.delta,
        params.phi,
        params.shots,
        params.trials,
        common.seed,
    )?;
    let mut summary = Record::default();
    summary.push("photons", s.photons);
    summary.push("delta", s.delta);
    summary.push("phi_true", s.phi_true);
    summary.push("shots", s.shots);
    summary.push("trials", s.trials);
    summary.push("seed", s.seed);
    summary.push("phi_hat_mean", s.phi_hat_mean);
    summary.push("phi_hat_se", s.phi_hat_se);
    summary.push("empirical_std", s.empirical_std);
    summary.push("crb_std", s.crb_std);
    summary.push("ratio", s.ratio);
    let bytes = finish(
        "estimate",
        common,
        &params,
        Results {
            summary,
            table: None,
        },
        Vec::new(),
    )?;
    Ok(Outcome {
        bytes,
        deferred: None,
    })
}

#[derive(Serialize)]
struct FisherParams {
    n: usize,
    delta: f64,
    phi_min: f64,
    phi_max: f64,
    phi_points: usize,
    source: FisherSource,
    policy: Option<Policy>,
    step: f64,
    cap: Option<usize>,
}

/// Relative difference, left empty where the reference is zero up to
/// rounding (`sin(Nφ) ≈ 0`).
fn relative(value: Option<f64>, reference: Option<f64>, scale: f64) -> Cell {
    match (value, reference) {
        (Some(v), Some(r)) if r > 1e-12 * scale => ((v - r).abs() / r).into(),
        _ => Cell::Empty,
    }
}

pub fn fisher(args: FisherArgs, common: &Common, layer: &Layer) -> Result<Outcome, CliError> {
    let n = layer.require(args.n, "n")?;
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let source = layer.pick(args.source, "source", FisherSource::Analytic)?;
    let exact = source == FisherSource::Exact;
    let mut warnings = vec![
        "f_paper_printed uses e^{N delta} - cos(N phi) in the denominator; the two-outcome \
         model gives e^{N delta} - cos^2(N phi) (f_rederived), which the numeric column checks"
            .to_owned(),
    ];
    let requested_policy = layer.pick_opt(args.policy, "policy")?;
    if !exact && requested_policy.is_some() {
        warnings.push("policy only applies to --source exact; ignored".into());
    }
    let params = FisherParams {
        n,
        delta: layer.require(args.delta, "delta")?,
        phi_min: common.angle(layer.pick(args.phi_min, "phi_min", 0.0)?),
        phi_max: match layer.pick_opt(args.phi_max, "phi_max")? {
            Some(v) => common.angle(v),
            None => PI / n as f64,
        },
        phi_points: layer.pick(args.phi_points, "phi_points", 33)?,
        source,
        policy: exact.then(|| requested_policy.unwrap_or(Policy::Condition)),
        step: layer.pick(args.step, "step", DEFAULT_FD_STEP)?,
        cap: if exact {
            Some(layer.pick(args.cap, "cap", DEFAULT_EXACT_CAP)?)
        } else {
            None
        },
    };
    if params.phi_points == 0 {
        return Err(invalid("phi-points must be at least 1"));
    }
    if !(params.phi_min.is_finite() && params.phi_max.is_finite()) {
        return Err(invalid("phi range must be finite"));
    }

    let state = match params.cap {
        Some(cap) => Some(prepare_mixed_exact_with_cap(
            &NoiseModel::new(n, params.delta)?,
            cap,
        )?),
        None => {
            // Validates δ for the analytic path.
            noon_core::metrology::analytic_probabilities(n, params.delta, 0.0)?;
            None
        }
    };
    let measurement = MeasurementModel::new(
        n,
        match params.policy {
            Some(Policy::Aggregate) => RestPolicy::AggregateRest,
            _ => RestPolicy::ConditionOnNoonSubspace,
        },
    )?;
    let probabilities = |phi: f64| -> noon_core::Result<Vec<f64>> {
        match &state {
            Some(s) => Ok(outcome_probabilities(&s.trace_one, phi, &measurement)?.to_vec()),
            None => noon_core::metrology::analytic_probabilities(n, params.delta, phi)
                .map(|(p, m)| vec![p, m]),
        }
    };

    let mut table = Table::new(&[
        "phi",
        "f_rederived",
        "f_paper_printed",
        "f_numeric",
        "f_numeric_error",
        "discrepancy",
        "numeric_rel_error",
    ]);
    let mut undefined = 0usize;
    let span = params.phi_max - params.phi_min;
    for k in 0..params.phi_points {
        let phi = if params.phi_points == 1 {
            params.phi_min
        } else {
            params.phi_min + span * k as f64 / (params.phi_points - 1) as f64
        };
        let rederived =
            fisher_information_analytic(n, params.delta, phi, FisherVariant::Rederived).ok();
        let printed =
            fisher_information_analytic(n, params.delta, phi, FisherVariant::PaperPrinted).ok();
        let numeric = match fisher_information_numeric(probabilities, phi, params.step) {
            Ok(f) => Some(f),
            Err(e @ noon_core::NoonError::Capacity { .. }) => return Err(e.into()),
            Err(_) => None,
        };
        if rederived.is_none() || printed.is_none() || numeric.is_none() {
            undefined += 1;
        }
        table.push(vec![
            phi.into(),
            rederived.into(),
            printed.into(),
            numeric.map(|f| f.value).into(),
            numeric.map(|f| f.error_estimate).into(),
            relative(printed, rederived, (n * n) as f64),
            relative(numeric.map(|f| f.value), rederived, (n * n) as f64),
        ]);
    }
    if undefined > 0 {
        warnings.push(format!(
            "{undefined} grid point(s) where a Fisher value is undefined (outcome probability \
             0 with sin(N phi) = 0); cells left empty"
        ));
    }
    let bytes = finish(
        "fisher",
        common,
        &params,
        Results {
            summary: Record::default(),
            table: Some(table),
        },
        warnings,
    )?;
    Ok(Outcome {
        bytes,
        deferred: None,
    })
}
