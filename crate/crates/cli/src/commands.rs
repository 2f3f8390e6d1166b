//! Subcommand implementations: flag/config merging, dispatch into the core
//! crate, and rendering to csv/json/table.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;

use nrsync_core::budget::{
    aggregate, builtin_components, component, select_tae_variant, set_included,
    with_simulated_ta_error, BudgetReport, Policy, TaeVariant, DEFAULT_TARGET_NS,
};
use nrsync_core::pipeline::EpochRecord;
use nrsync_core::simulator::{run_scenario, sweep_avg_windows, SimResult};
use nrsync_core::timing::{Numerology, TA_ABSOLUTE_MAX};
use nrsync_core::{ErrorModelConfig, PipelineFileConfig, ScenarioConfig, ToaPriorConfig};

use crate::output::{cdf_csv_rows, csv_header, meta_value, write_output, SimSummary};
use crate::{
    BudgetArgs, CliError, ConstantsArgs, OutputFormat, PipelineArgs, PolicyArg, ScenarioFlags,
    SimArgs, SweepArgs, TaeArg,
};

const NS: f64 = 1e-9;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn to_json_string<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("output types always serialize")
}

fn to_json_pretty<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("output types always serialize");
    text.push('\n');
    text
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None | Some(0) => Ok(f()),
        Some(n) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Invalid(format!("cannot build a {n}-thread pool: {e}")))?
            .install(f)),
    }
}

// --- scenario flag merging ----------------------------------------------

fn default_scenario_config() -> ScenarioConfig {
    ScenarioConfig {
        scs_khz: 15,
        toa_prior: ToaPriorConfig::UniformInSlot { center_index: 100 },
        error_model: ErrorModelConfig::los_rel(0.5),
        trials: 1_000_000,
        avg_window: 1,
        seed: 42,
        confidence: 0.999,
        bias_correction: 0.0,
    }
}

fn check_scs_flag(scs: u32) -> Result<u32, CliError> {
    Numerology::from_scs_khz(scs).map_err(|e| usage(format!("--scs: {e}")))?;
    Ok(scs)
}

/// Config-file values form the base; explicit flags override field by
/// field. Flag values are checked here so bad flags exit as usage errors.
fn merge_scenario(flags: &ScenarioFlags, avg: Option<usize>) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &flags.config {
        Some(path) => load_json::<ScenarioConfig>(path)?,
        None => default_scenario_config(),
    };

    if let Some(scs) = flags.scs {
        cfg.scs_khz = check_scs_flag(scs)?;
    }
    if let Some(rel) = flags.sigma_rel {
        if !(rel.is_finite() && rel >= 0.0) {
            return Err(usage(format!(
                "--sigma-rel must be finite and >= 0, got {rel}"
            )));
        }
        cfg.error_model = ErrorModelConfig::los_rel(rel);
    }
    if let Some(ns) = flags.sigma_ns {
        if !(ns.is_finite() && ns >= 0.0) {
            return Err(usage(format!(
                "--sigma-ns must be finite and >= 0, got {ns}"
            )));
        }
        cfg.error_model = ErrorModelConfig::los_abs(ns * NS);
    }
    if let Some(trials) = flags.trials {
        if trials == 0 {
            return Err(usage("--trials must be >= 1"));
        }
        cfg.trials = trials;
    }
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(confidence) = flags.confidence {
        if !(confidence > 0.0 && confidence <= 1.0) {
            return Err(usage(format!(
                "--confidence must be in (0, 1], got {confidence}"
            )));
        }
        cfg.confidence = confidence;
    }
    if let Some(index) = flags.toa_slot {
        if index == 0 || index > TA_ABSOLUTE_MAX {
            return Err(usage(format!(
                "--toa-slot must be in 1..={TA_ABSOLUTE_MAX}, got {index}"
            )));
        }
        cfg.toa_prior = ToaPriorConfig::UniformInSlot {
            center_index: index,
        };
    }
    if let Some(toa_ns) = flags.toa_fixed_ns {
        if !(toa_ns.is_finite() && toa_ns >= 0.0) {
            return Err(usage("--toa-fixed-ns must be finite and >= 0"));
        }
        cfg.toa_prior = ToaPriorConfig::Fixed { toa: toa_ns * NS };
    }
    if let Some(range) = &flags.toa_range_ns {
        let (lo, hi) = (range[0], range[1]);
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(usage(format!(
                "--toa-range-ns [{lo}, {hi}) must be ordered and >= 0"
            )));
        }
        cfg.toa_prior = ToaPriorConfig::UniformInRange {
            lo: lo * NS,
            hi: hi * NS,
        };
    }
    if let Some(bias_ns) = flags.bias_correction_ns {
        if !bias_ns.is_finite() {
            return Err(usage("--bias-correction-ns must be finite"));
        }
        cfg.bias_correction = bias_ns * NS;
    }
    if let Some(k) = avg {
        if k == 0 {
            return Err(usage("--avg must be >= 1"));
        }
        cfg.avg_window = k;
    }
    Ok(cfg)
}

// --- constants ------------------------------------------------------------

pub fn constants(args: ConstantsArgs) -> Result<(), CliError> {
    let format = args.format.unwrap_or(OutputFormat::Table);
    let rows: Vec<(u32, u8, f64, f64, f64)> = Numerology::all()
        .iter()
        .map(|n| {
            let c = n.constants();
            (
                n.scs_khz(),
                n.mu(),
                c.t_c / NS,
                c.t_mu / NS,
                c.slot_width / NS,
            )
        })
        .collect();

    let content = match format {
        OutputFormat::Table => {
            let mut out = csv_header("constants", "{}");
            let _ = writeln!(
                out,
                "{:>7}  {:>2}  {:>10}  {:>12}  {:>13}",
                "scs_khz", "mu", "t_c_ns", "t_mu_ns", "slot_width_ns"
            );
            for (scs, mu, t_c, t_mu, slot) in &rows {
                let _ = writeln!(
                    out,
                    "{scs:>7}  {mu:>2}  {t_c:>10.6}  {t_mu:>12.6}  {slot:>13.6}"
                );
            }
            out
        }
        OutputFormat::Json => {
            let constants: Vec<serde_json::Value> = rows
                .iter()
                .map(|(scs, mu, t_c, t_mu, slot)| {
                    serde_json::json!({
                        "scs_khz": scs,
                        "mu": mu,
                        "t_c_ns": t_c,
                        "t_mu_ns": t_mu,
                        "slot_width_ns": slot,
                    })
                })
                .collect();
            to_json_pretty(&serde_json::json!({
                "meta": meta_value("constants", serde_json::json!({})),
                "constants": constants,
            }))
        }
        OutputFormat::Csv => {
            return Err(usage("--format: constants supports table or json"));
        }
    };
    write_output(args.output.as_deref(), &content)
}

// --- sim --------------------------------------------------------------------

fn sim_table(result: &SimResult, cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "sim: scs={} kHz trials={} avg={} seed={}",
        cfg.scs_khz, cfg.trials, cfg.avg_window, cfg.seed
    );
    let _ = writeln!(
        out,
        "p_e({}) = {:.3} ns",
        result.confidence,
        result.p_e / NS
    );
    let _ = writeln!(out, "mean |error| = {:.3} ns", result.mean_abs_error / NS);
    let _ = writeln!(
        out,
        "mean signed error = {:.3} ns",
        result.mean_signed_error / NS
    );
    for (q, v) in &result.quantiles {
        let _ = writeln!(out, "quantile {q} = {:.3} ns", v / NS);
    }
    let _ = writeln!(out, "saturations = {}", result.saturation_count);
    out
}

pub fn sim(args: SimArgs) -> Result<(), CliError> {
    let cfg = merge_scenario(&args.scenario, args.avg)?;
    let scenario = cfg.resolve()?;
    let result = with_pool(args.scenario.threads, || run_scenario(&scenario))??;
    let canonical = ScenarioConfig::from_scenario(&scenario);

    let format = args.format.unwrap_or(OutputFormat::Csv);
    let content = match format {
        OutputFormat::Csv => {
            csv_header("sim", &to_json_string(&canonical)) + &cdf_csv_rows(&result.cdf)
        }
        OutputFormat::Json => to_json_pretty(&SimSummary::new("sim", &canonical, &result)),
        OutputFormat::Table => {
            csv_header("sim", &to_json_string(&canonical)) + &sim_table(&result, &canonical)
        }
    };
    write_output(args.output.as_deref(), &content)?;

    if let Some(summary_path) = &args.summary {
        let summary = SimSummary::new("sim", &canonical, &result);
        write_output(Some(summary_path), &to_json_pretty(&summary))?;
    }
    Ok(())
}

// --- sweep --------------------------------------------------------------

/// One CDF column group per averaging window, rows padded to the longest.
fn sweep_csv_rows(results: &[(usize, SimResult)]) -> String {
    let mut out = String::new();
    let header: Vec<String> = results
        .iter()
        .flat_map(|(k, _)| [format!("error_ns_k{k}"), format!("cdf_k{k}")])
        .collect();
    let _ = writeln!(out, "{}", header.join(","));

    let columns: Vec<Vec<(f64, f64)>> = results
        .iter()
        .map(|(_, r)| r.cdf.distinct_points())
        .collect();
    let depth = columns.iter().map(Vec::len).max().unwrap_or(0);
    for row in 0..depth {
        let cells: Vec<String> = columns
            .iter()
            .flat_map(|points| match points.get(row) {
                Some((value, prob)) => [format!("{}", value / NS), format!("{prob}")],
                None => [String::new(), String::new()],
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let cfg = merge_scenario(&args.scenario, None)?;
    let windows = args.avg.unwrap_or_else(|| vec![1, 2, 4, 8, 16]);
    if windows.is_empty() || windows.contains(&0) {
        return Err(usage("--avg needs a comma-separated list of windows >= 1"));
    }
    let scenario = cfg.resolve()?;
    let results = with_pool(args.scenario.threads, || {
        sweep_avg_windows(&scenario, &windows)
    })??;

    let canonical = ScenarioConfig::from_scenario(&scenario);
    let config_value = serde_json::json!({
        "scenario": canonical,
        "windows": windows,
    });

    let format = args.format.unwrap_or(OutputFormat::Csv);
    let content = match format {
        OutputFormat::Csv => {
            csv_header("sweep", &to_json_string(&config_value)) + &sweep_csv_rows(&results)
        }
        OutputFormat::Json => {
            let windows_json: Vec<serde_json::Value> = results
                .iter()
                .map(|(k, r)| {
                    serde_json::json!({
                        "avg_window": k,
                        "p_e_ns": r.p_e / NS,
                        "mean_abs_error_ns": r.mean_abs_error / NS,
                        "mean_signed_error_ns": r.mean_signed_error / NS,
                        "saturation_count": r.saturation_count,
                    })
                })
                .collect();
            to_json_pretty(&serde_json::json!({
                "meta": meta_value("sweep", config_value),
                "windows": windows_json,
            }))
        }
        OutputFormat::Table => {
            let mut out = csv_header("sweep", &to_json_string(&config_value));
            let _ = writeln!(
                out,
                "sweep: scs={} kHz trials={} seed={}",
                canonical.scs_khz, canonical.trials, canonical.seed
            );
            let _ = writeln!(out, "{:>4}  {:>14}  {:>14}", "K", "mean_abs_ns", "p_e_ns");
            for (k, r) in &results {
                let _ = writeln!(
                    out,
                    "{k:>4}  {:>14.3}  {:>14.3}",
                    r.mean_abs_error / NS,
                    r.p_e / NS
                );
            }
            out
        }
    };
    write_output(args.output.as_deref(), &content)
}

// --- budget ----------------------------------------------------------------

fn budget_table(report: &BudgetReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "budget: scs={} kHz policy={} target={} ns",
        report.scs_khz,
        report.policy.name(),
        report.target_ns
    );
    let _ = writeln!(
        out,
        "{:<28} {:>15}  {:<8}  note",
        "component", "contribution_ns", "included"
    );
    for c in &report.components {
        let _ = writeln!(
            out,
            "{:<28} {:>15}  {:<8}  {}",
            c.name,
            c.contribution_ns,
            if c.included { "yes" } else { "no" },
            c.note
        );
    }
    let verdict = if report.pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        out,
        "total = {} ns -> {verdict} (margin {} ns)",
        report.total_ns, report.margin_ns
    );
    out
}

pub fn budget(args: BudgetArgs) -> Result<(), CliError> {
    let scs = check_scs_flag(args.scs.unwrap_or(15))?;
    let policy = match args.policy.unwrap_or(PolicyArg::WorstCaseSum) {
        PolicyArg::WorstCaseSum => Policy::WorstCaseSum,
        PolicyArg::RootSumSquare => Policy::RootSumSquare,
    };
    let tae = args.tae.unwrap_or(TaeArg::TxDiversity);
    let target_ns = args.target_ns.unwrap_or(DEFAULT_TARGET_NS);
    if !(target_ns.is_finite() && target_ns >= 0.0) {
        return Err(usage(format!(
            "--target-ns must be finite and >= 0, got {target_ns}"
        )));
    }

    let mut components = builtin_components();
    select_tae_variant(
        &mut components,
        match tae {
            TaeArg::TxDiversity => TaeVariant::TxDiversity,
            TaeArg::Positioning => TaeVariant::Positioning,
        },
    )?;
    if args.include_ul_tx_error {
        set_included(&mut components, component::UE_UL_TRANSMIT_TIMING, true)?;
    }

    let mut from_sim_p_e: Option<f64> = None;
    if let Some(path) = &args.from_sim {
        let summary: SimSummary = load_json(path)?;
        if summary.scs_khz != scs {
            return Err(CliError::Invalid(format!(
                "numerology mismatch: simulation summary is for {} kHz, budget for {scs} kHz",
                summary.scs_khz
            )));
        }
        components = with_simulated_ta_error(&components, summary.p_e_ns);
        from_sim_p_e = Some(summary.p_e_ns);
    }

    let report = aggregate(&components, scs, policy, target_ns)?;

    let config_value = serde_json::json!({
        "scs_khz": scs,
        "policy": policy.name(),
        "tae": match tae { TaeArg::TxDiversity => "tx-diversity", TaeArg::Positioning => "positioning" },
        "include_ul_tx_error": args.include_ul_tx_error,
        "target_ns": target_ns,
        "from_sim_p_e_ns": from_sim_p_e,
    });

    let format = args.format.unwrap_or(OutputFormat::Table);
    let content = match format {
        OutputFormat::Table => {
            csv_header("budget", &to_json_string(&config_value)) + &budget_table(&report)
        }
        OutputFormat::Json => {
            let components_json: Vec<serde_json::Value> = report
                .components
                .iter()
                .map(|c| {
                    serde_json::json!({
                        "name": c.name,
                        "contribution_ns": c.contribution_ns,
                        "included": c.included,
                        "note": c.note,
                    })
                })
                .collect();
            to_json_pretty(&serde_json::json!({
                "meta": meta_value("budget", config_value),
                "scs_khz": report.scs_khz,
                "policy": report.policy.name(),
                "target_ns": report.target_ns,
                "total_ns": report.total_ns,
                "pass": report.pass,
                "margin_ns": report.margin_ns,
                "components": components_json,
            }))
        }
        OutputFormat::Csv => {
            return Err(usage("--format: budget supports table or json"));
        }
    };
    write_output(args.output.as_deref(), &content)?;

    if args.fail_on_target_miss && !report.pass {
        return Err(CliError::TargetMiss(format!(
            "total {} ns exceeds target {} ns at {} kHz",
            report.total_ns, report.target_ns, report.scs_khz
        )));
    }
    Ok(())
}

// --- pipeline ------------------------------------------------------------

fn default_pipeline_config() -> PipelineFileConfig {
    PipelineFileConfig {
        scs_khz: 15,
        toa_prior: ToaPriorConfig::UniformInSlot { center_index: 100 },
        error_model: ErrorModelConfig::los_rel(0.5),
        granularity: nrsync_core::PipelineConfig::DEFAULT_GRANULARITY,
        timestamp_jitter: None,
        dl_timing_error: 0.0,
        dl_ul_asymmetry: 0.0,
        modem_host_delay: 0.0,
        drift_ppm: 10.0,
        resync_period: 10e-3,
        epochs: 1000,
        seed: 42,
    }
}

fn pipeline_csv_rows(trace: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,pre_offset_ns,post_offset_ns\n");
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{}",
            r.epoch,
            r.pre_offset / NS,
            r.post_offset / NS
        );
    }
    out
}

pub fn pipeline(args: PipelineArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => load_json::<PipelineFileConfig>(path)?,
        None => default_pipeline_config(),
    };
    if let Some(scs) = args.scs {
        cfg.scs_khz = check_scs_flag(scs)?;
    }
    if let Some(drift) = args.drift_ppm {
        if !drift.is_finite() {
            return Err(usage("--drift-ppm must be finite"));
        }
        cfg.drift_ppm = drift;
    }
    if let Some(ms) = args.resync_ms {
        if !(ms.is_finite() && ms > 0.0) {
            return Err(usage(format!("--resync-ms must be > 0, got {ms}")));
        }
        cfg.resync_period = ms * 1e-3;
    }
    if let Some(epochs) = args.epochs {
        if epochs == 0 {
            return Err(usage("--epochs must be >= 1"));
        }
        cfg.epochs = epochs;
    }
    if let Some(rel) = args.sigma_rel {
        if !(rel.is_finite() && rel >= 0.0) {
            return Err(usage("--sigma-rel must be finite and >= 0"));
        }
        cfg.error_model = ErrorModelConfig::los_rel(rel);
    }
    if let Some(ns) = args.sigma_ns {
        if !(ns.is_finite() && ns >= 0.0) {
            return Err(usage("--sigma-ns must be finite and >= 0"));
        }
        cfg.error_model = ErrorModelConfig::los_abs(ns * NS);
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(g_ns) = args.granularity_ns {
        if !(g_ns.is_finite() && g_ns > 0.0) {
            return Err(usage(format!("--granularity-ns must be > 0, got {g_ns}")));
        }
        cfg.granularity = g_ns * NS;
    }
    if let Some(index) = args.toa_slot {
        if index == 0 || index > TA_ABSOLUTE_MAX {
            return Err(usage(format!(
                "--toa-slot must be in 1..={TA_ABSOLUTE_MAX}, got {index}"
            )));
        }
        cfg.toa_prior = ToaPriorConfig::UniformInSlot {
            center_index: index,
        };
    }

    let (clock, resolved) = cfg.resolve()?;
    let trace = nrsync_core::simulate_sync_epochs(clock, &resolved)?;

    // canonical echo with the jitter default made explicit
    let mut canonical = cfg.clone();
    canonical.timestamp_jitter = Some(resolved.timestamp_jitter);
    let config_json = to_json_string(&canonical);

    let mean_abs = |f: fn(&EpochRecord) -> f64| {
        trace.iter().map(|r| f(r).abs()).sum::<f64>() / trace.len() as f64
    };
    let max_abs =
        |f: fn(&EpochRecord) -> f64| trace.iter().map(|r| f(r).abs()).fold(0.0f64, f64::max);

    let format = args.format.unwrap_or(OutputFormat::Csv);
    let content = match format {
        OutputFormat::Csv => csv_header("pipeline", &config_json) + &pipeline_csv_rows(&trace),
        OutputFormat::Json => {
            let records: Vec<serde_json::Value> = trace
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "epoch": r.epoch,
                        "pre_offset_ns": r.pre_offset / NS,
                        "post_offset_ns": r.post_offset / NS,
                    })
                })
                .collect();
            to_json_pretty(&serde_json::json!({
                "meta": meta_value("pipeline", serde_json::to_value(&canonical).unwrap()),
                "summary": {
                    "epochs": trace.len(),
                    "mean_abs_pre_offset_ns": mean_abs(|r| r.pre_offset) / NS,
                    "max_abs_pre_offset_ns": max_abs(|r| r.pre_offset) / NS,
                    "mean_abs_post_offset_ns": mean_abs(|r| r.post_offset) / NS,
                    "max_abs_post_offset_ns": max_abs(|r| r.post_offset) / NS,
                },
                "records": records,
            }))
        }
        OutputFormat::Table => {
            let mut out = csv_header("pipeline", &config_json);
            let _ = writeln!(
                out,
                "pipeline: scs={} kHz drift={} ppm resync={} ms epochs={} seed={}",
                canonical.scs_khz,
                canonical.drift_ppm,
                canonical.resync_period * 1e3,
                canonical.epochs,
                canonical.seed
            );
            let _ = writeln!(
                out,
                "pre-correction  |offset|: mean={:.3} ns max={:.3} ns",
                mean_abs(|r| r.pre_offset) / NS,
                max_abs(|r| r.pre_offset) / NS
            );
            let _ = writeln!(
                out,
                "post-correction |offset|: mean={:.3} ns max={:.3} ns",
                mean_abs(|r| r.post_offset) / NS,
                max_abs(|r| r.post_offset) / NS
            );
            out
        }
    };
    write_output(args.output.as_deref(), &content)
}
