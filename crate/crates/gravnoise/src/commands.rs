//! One function per subcommand; each returns rendered text.

use gravnoise_core::gaussian::{
    build_diffusion, build_drift, onset_rate, propagate_with, shifted_frequencies, simon_min_eig, CovarianceState,
    OscillatorRates,
};
use gravnoise_core::hybrid::{
    dnm_matrix, lambda1_solve, pt_min_eig, sigma_minus, HybridGenerator, HybridOptions, HybridParams, HybridState,
};
use gravnoise_core::models::entropic_i_integrals;
use gravnoise_core::qubit::{negativity_rate, trajectory, QubitPairState, QubitRates};
use gravnoise_core::thresholds::{
    flag_codes, noise_report, threshold_for, Architecture, Flag, HYBRID_PERTURBATIVE_LEVELS,
};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::output::{grid_to_csv, grid_to_json, Provenance, Report, Table};
use crate::{scan, suites};

/// Paper values of the mediator integrals and their quoted precision.
pub const I_PLUS_REFERENCE: f64 = 1.17;
pub const I_MINUS_REFERENCE: f64 = 1.21;
pub const I_TOLERANCE: f64 = 0.01;

/// Relative gap between analytic and integrated onset rates that is flagged.
pub const ONSET_TOLERANCE: f64 = 0.05;
pub const ONSET_DISAGREEMENT: &str = "onset_disagreement";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Entangling threshold of the configured architecture.
    Threshold,
    /// Noise rates, threshold and verdicts of the configured model.
    Noise,
    /// Time evolution of the configured architecture.
    Evolve,
    /// Exclusion scan of the classical-quantum (D0, D2) plane.
    Scan,
    /// Invariant suites: tradeoff, positivity, Ehrenfest drift, grid.
    Validate,
    /// Mediator integrals of the non-local entropic model.
    Integrals,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Threshold => "threshold",
            Command::Noise => "noise",
            Command::Evolve => "evolve",
            Command::Scan => "scan",
            Command::Validate => "validate",
            Command::Integrals => "integrals",
        }
    }

    pub fn default_format(&self) -> Format {
        match self {
            Command::Scan => Format::Csv,
            _ => Format::Json,
        }
    }
}

pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub threads: Option<usize>,
    pub format: Format,
}

#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    pub trace: Option<String>,
    /// Set when a check failed; the body is still written.
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self {
            body,
            trace: None,
            failure: None,
        }
    }
}

pub fn run(command: Command, ctx: &Context) -> Result<Outcome, CliError> {
    match command {
        Command::Threshold => threshold(ctx).map(|r| Outcome::ok(r.render(ctx.format))),
        Command::Noise => noise(ctx).map(|r| Outcome::ok(r.render(ctx.format))),
        Command::Evolve => evolve(ctx),
        Command::Scan => scan_command(ctx),
        Command::Validate => validate(ctx),
        Command::Integrals => integrals(ctx).map(|r| Outcome::ok(r.render(ctx.format))),
    }
}

fn provenance(command: Command, ctx: &Context) -> Provenance {
    Provenance::new(command.name(), &ctx.config, ctx.seed)
}

fn model_name(config: &RunConfig) -> Option<String> {
    config.model.as_ref()?;
    config.model_kind().ok().map(|k| k.name().to_string())
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("core types serialize")
}

pub fn threshold(ctx: &Context) -> Result<Report, CliError> {
    let e = ctx.config.experiment()?;
    let t = threshold_for(e)?;
    let mut report = Report::new(
        model_name(&ctx.config),
        &ctx.config,
        provenance(Command::Threshold, ctx),
    );
    report.thresholds = to_value(&t);
    if t.paper.discrepant {
        report.flags.push(Flag::new(
            flag_codes::BENCHMARK_DISCREPANCY,
            format!(
                "computed threshold {:e} differs from the quoted scaling law {:e} by a factor {:.3e}",
                t.paper.computed, t.paper.paper, t.paper.ratio
            ),
        ));
    }
    if let Some(dx) = e.delta_x.filter(|dx| *dx >= e.d) {
        report.flags.push(Flag::new(
            flag_codes::SMALL_DISPLACEMENT,
            format!(
                "superposition width {dx:e} is not small against the separation {:e}",
                e.d
            ),
        ));
    }
    Ok(report)
}

pub fn noise(ctx: &Context) -> Result<Report, CliError> {
    let kernel = ctx.config.kernel()?;
    let r = noise_report(&kernel, ctx.config.experiment()?, &ctx.config.quadrature)?;
    let mut report = Report::new(
        Some(r.model.name().to_string()),
        &ctx.config,
        provenance(Command::Noise, ctx),
    );
    report.rates = to_value(&r.rates);
    report.thresholds = to_value(&r.threshold);
    report.verdicts = to_value(&r.verdicts);
    report.flags = r.flags;
    Ok(report)
}

/// Slope at `t = 0` from samples at `h` and `2h`, free of the `h²` term.
pub fn richardson_slope(y0: f64, y1: f64, y2: f64, h: f64) -> f64 {
    (4.0 * (y1 - y0) - (y2 - y0)) / (2.0 * h)
}

struct Evolution {
    summary: Value,
    trace: Table,
}

fn duration(ctx: &Context, scale: f64) -> Result<(f64, usize), CliError> {
    let steps = ctx.config.evolve.steps;
    if steps < 2 {
        return Err(CliError::Config("evolve.steps: at least 2 steps are needed".into()));
    }
    let t = match ctx.config.evolve.t_final {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => return Err(CliError::Config(format!("evolve.t_final: must be positive, got {t:e}"))),
        None if scale > 0.0 => 1.0 / scale,
        None => 1.0,
    };
    Ok((t, steps))
}

fn evolve_oscillators(ctx: &Context) -> Result<Evolution, CliError> {
    let e = ctx.config.experiment()?;
    let kernel = ctx.config.kernel()?;
    let omegas = [e.omega1.unwrap_or(0.0), e.omega2.unwrap_or(0.0)];
    let rates = OscillatorRates::from_kernel(&kernel, [e.m1, e.m2], omegas, e.d, &ctx.config.quadrature)?;
    rates.validate()?;
    let x = build_drift(e.m1, omegas[0], e.m2, omegas[1], e.d)?;
    let y = build_diffusion(&rates)?;
    let [w1, w2] = shifted_frequencies([e.m1, e.m2], omegas, e.d)?;
    let scale = [w1, w2, rates.gamma1, rates.gamma2, rates.g]
        .into_iter()
        .fold(0.0, f64::max);
    let (t_final, steps) = duration(ctx, scale)?;
    let h = t_final / steps as f64;
    let mut header = vec!["t"];
    header.extend([
        "g11", "g12", "g13", "g14", "g21", "g22", "g23", "g24", "g31", "g32", "g33", "g34", "g41", "g42", "g43", "g44",
    ]);
    header.push("simon_min_eig");
    let mut trace = Table::new(header);
    let mut record = |s: &CovarianceState| -> gravnoise_core::Result<f64> {
        let lam = simon_min_eig(s)?;
        let mut row = vec![s.t];
        row.extend(s.gamma);
        row.push(lam);
        trace.rows.push(row);
        Ok(lam)
    };
    let vacuum = CovarianceState::vacuum();
    record(&vacuum)?;
    let mut failure = None;
    let last = propagate_with(&vacuum, &x, &y, t_final, h * (1.0 + 1e-12), |s| {
        if failure.is_none() {
            if let Err(err) = record(s) {
                failure = Some(err);
            }
        }
    })?;
    if let Some(err) = failure {
        return Err(err.into());
    }
    let lam: Vec<f64> = trace.rows.iter().map(|r| r[17]).collect();
    let measured = richardson_slope(lam[0], lam[1], lam[2], trace.rows[1][0]);
    let analytic = onset_rate(&rates);
    Ok(Evolution {
        summary: json!({
            "t_final": t_final,
            "steps": trace.rows.len() - 1,
            "onset_analytic": analytic,
            "onset_measured": measured,
            "relative_error": rel_err(measured, analytic),
            "final_simon_min_eig": simon_min_eig(&last)?,
            "entangled_at_end": simon_min_eig(&last)? < 0.0,
        }),
        trace,
    })
}

fn rel_err(measured: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        measured.abs()
    } else {
        (measured - reference).abs() / reference.abs()
    }
}

fn evolve_qubits(ctx: &Context) -> Result<Evolution, CliError> {
    let e = ctx.config.experiment()?;
    let kernel = ctx.config.kernel()?;
    let dx = e.delta_x.unwrap_or(0.0);
    let rates = QubitRates::from_kernel(&kernel, [e.m1, e.m2], e.d, dx, &ctx.config.quadrature)?;
    rates.validate()?;
    let scale = [rates.gamma1, rates.gamma2, rates.beta_term.abs(), rates.coupling]
        .into_iter()
        .fold(0.0, f64::max);
    let (t_final, steps) = duration(ctx, scale)?;
    let samples = trajectory(&QubitPairState::product_superposition(), &rates, t_final, steps)?;
    let mut trace = Table::new(vec!["t", "negativity", "coherence_abs", "purity"]);
    for s in &samples {
        let rho = &s.state.rho;
        trace.rows.push(vec![
            s.state.t,
            s.negativity,
            rho[(0, 3)].norm(),
            rho.trace_product(rho).re,
        ]);
    }
    let n: Vec<f64> = samples.iter().map(|s| s.negativity).collect();
    let measured = richardson_slope(n[0], n[1], n[2], samples[1].state.t);
    let analytic = negativity_rate(&rates);
    Ok(Evolution {
        summary: json!({
            "t_final": t_final,
            "steps": steps,
            "onset_analytic": analytic,
            "onset_measured": measured,
            "relative_error": rel_err(measured, analytic),
            "final_negativity": n[n.len() - 1],
            "entangled_at_end": n[n.len() - 1] > 0.0,
        }),
        trace,
    })
}

fn evolve_hybrid(ctx: &Context) -> Result<Evolution, CliError> {
    let e = ctx.config.experiment()?;
    let kernel = ctx.config.kernel()?;
    let q = &ctx.config.quadrature;
    let omega = e.omega1.unwrap_or(0.0);
    let params = HybridParams::from_kernel(kernel, e.m1, omega, e.m2, e.d, e.delta_x.unwrap_or(0.0), q)?;
    let ev = ctx.config.evolve;
    let options = HybridOptions {
        n_max: ev.n_max,
        padding: ev.padding,
        quad_nodes: ev.quad_nodes,
    };
    let generator = HybridGenerator::new(&params, &options)?;
    let scale = [omega, params.g, generator.total_rate()]
        .into_iter()
        .fold(0.0, f64::max);
    let (t_final, steps) = duration(ctx, scale)?;
    let h = t_final / steps as f64;
    let mut trace = Table::new(vec![
        "t",
        "pt_min_eig",
        "sigma_minus_re",
        "sigma_minus_im",
        "p0",
        "p_top",
    ]);
    let state0 = HybridState::ground_superposition(ev.n_max);
    let (last, diag) = generator.evolve_with(&state0, t_final, h * (1.0 + 1e-12), |s: &HybridState| {
        let sm = sigma_minus(s);
        let pops = s.oscillator_populations();
        trace
            .rows
            .push(vec![s.t, pt_min_eig(s)?, sm.re, sm.im, pops[0], s.top_population()]);
        Ok(())
    })?;
    let lam: Vec<f64> = trace.rows.iter().map(|r| r[1]).collect();
    let measured = richardson_slope(lam[0], lam[1], lam[2], trace.rows[1][0]);
    let dnm = dnm_matrix(&params.kernel, e.m1, omega, HYBRID_PERTURBATIVE_LEVELS, q)?;
    let analytic = lambda1_solve(params.gamma2, params.g, params.beta_term, &dnm)?
        .minus
        .value;
    Ok(Evolution {
        summary: json!({
            "t_final": t_final,
            "steps": diag.steps,
            "fock_levels": ev.n_max,
            "onset_analytic": analytic,
            "onset_measured": measured,
            "relative_error": rel_err(measured, analytic),
            "final_pt_min_eig": pt_min_eig(&last)?,
            "max_trace_deviation": diag.max_trace_deviation,
            "max_hermiticity_defect": diag.max_hermiticity_defect,
            "max_top_population": diag.max_top_population,
        }),
        trace,
    })
}

pub fn evolve(ctx: &Context) -> Result<Outcome, CliError> {
    let mut report = noise(ctx)?;
    report.provenance = provenance(Command::Evolve, ctx);
    let evolution = match ctx.config.experiment()?.architecture {
        Architecture::Oscillators => evolve_oscillators(ctx)?,
        Architecture::Qubits => evolve_qubits(ctx)?,
        Architecture::Hybrid => evolve_hybrid(ctx)?,
    };
    let err = evolution.summary["relative_error"].as_f64().unwrap_or(f64::INFINITY);
    if err > ONSET_TOLERANCE {
        report.flags.push(Flag::new(
            ONSET_DISAGREEMENT,
            format!("analytic and integrated entanglement onset differ by {err:.3e} (relative)"),
        ));
    }
    if let Value::Object(map) = &mut report.verdicts {
        map.insert("evolution".into(), evolution.summary);
    }
    Ok(Outcome {
        body: report.render(ctx.format),
        trace: Some(evolution.trace.to_csv(&report.provenance)),
        failure: None,
    })
}

pub fn scan_command(ctx: &Context) -> Result<Outcome, CliError> {
    let spec = ctx.config.scan_spec();
    let grid = scan::scan_parallel(&spec, ctx.threads)?;
    let summary = scan::summary(&spec, &grid);
    let p = provenance(Command::Scan, ctx);
    let body = match ctx.format {
        Format::Csv => grid_to_csv(&grid, &p),
        Format::Json => grid_to_json(&grid, &summary, &p),
    };
    let check = grid.check();
    Ok(Outcome {
        body,
        trace: None,
        failure: (!check.ok()).then(|| check.failures().join("; ")),
    })
}

/// Draw counts of the validation suites.
pub const VALIDATE_DRAWS: [(&str, usize); 5] = [
    ("tradeoff", 200),
    ("cq_never_entangles", 200),
    ("positivity", 50),
    ("nonlocal_entangles", 20),
    ("ehrenfest", 4),
];

pub fn validate(ctx: &Context) -> Result<Outcome, CliError> {
    let q = &ctx.config.quadrature;
    let mut rng = suites::rng(ctx.seed);
    let results = vec![
        suites::tradeoff_suite(&mut rng, VALIDATE_DRAWS[0].1)?,
        suites::cq_never_entangles(&mut rng, VALIDATE_DRAWS[1].1)?,
        suites::positivity_suite(&mut rng, VALIDATE_DRAWS[2].1, q)?,
        suites::nonlocal_entangles(&mut rng, VALIDATE_DRAWS[3].1, q)?,
        suites::ehrenfest_suite(&mut rng, VALIDATE_DRAWS[4].1)?,
        suites::grid_suite(16)?,
    ];
    let mut report = Report::new(model_name(&ctx.config), &ctx.config, provenance(Command::Validate, ctx));
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
    let mut verdicts = serde_json::Map::new();
    for r in &results {
        verdicts.insert(r.name.to_string(), to_value(r));
    }
    verdicts.insert("all_passed".into(), json!(failed.is_empty()));
    report.verdicts = Value::Object(verdicts);
    Ok(Outcome {
        body: report.render(ctx.format),
        trace: None,
        failure: (!failed.is_empty()).then(|| format!("failed suites: {}", failed.join(", "))),
    })
}

pub fn integrals(ctx: &Context) -> Result<Report, CliError> {
    let i = entropic_i_integrals(&ctx.config.quadrature)?;
    let mut report = Report::new(
        model_name(&ctx.config),
        &ctx.config,
        provenance(Command::Integrals, ctx),
    );
    report.rates = json!({
        "i_plus": i.plus,
        "i_minus": i.minus,
        "i_plus_raw": i.plus_raw,
        "i_minus_raw": i.minus_raw,
    });
    report.thresholds = json!({
        "i_plus_reference": I_PLUS_REFERENCE,
        "i_minus_reference": I_MINUS_REFERENCE,
        "tolerance": I_TOLERANCE,
    });
    report.verdicts = json!({
        "i_plus_matches": (i.plus - I_PLUS_REFERENCE).abs() <= I_TOLERANCE,
        "i_minus_matches": (i.minus - I_MINUS_REFERENCE).abs() <= I_TOLERANCE,
    });
    Ok(report)
}
