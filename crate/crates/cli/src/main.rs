//! Scenario-driven command line for the manipulator control toolkit.
//!
//! Exit codes: 0 success, 1 validation/usage, 2 divergence guard, 3 I/O.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use rhcsim::analysis;
use rhcsim::dynamics;
use rhcsim::error::Error as SimError;
use rhcsim::sim::{compute_metrics, run_batch, run_scenario, TrajectoryLog};

use config::{parse_config, parse_config_str, set_path, ScenarioConfig};
use output::fmt_f64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Divergence(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Divergence(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::Diverged { .. } | SimError::NonFiniteDerivative { .. } => {
            CliError::Divergence(e.to_string())
        }
        other => CliError::Validation(other.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "rhcsim",
    about = "Receding-horizon tracking control of a two-link arm: simulate, compare, analyze",
    version
)]
struct Cli {
    /// Directory for generated files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Seed for randomized verification sweeps; simulations themselves are
    /// deterministic and ignore it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario; writes <name>_trajectory.csv, <name>_metrics.csv
    /// and <name>_plot.gp.
    Run { scenario: PathBuf },
    /// Run two or more scenarios side by side; writes the per-run files plus
    /// compare_metrics.csv and compare_plot.gp.
    Compare { scenarios: Vec<PathBuf> },
    /// Frozen-state stability report: closed-loop eigenvalues, sufficient
    /// thresholds and estimated disturbance gains; writes
    /// <name>_stability.csv and <name>_lemma2.csv.
    Analyze {
        scenario: PathBuf,
        /// Frozen joint configuration as "q1,q2" (repeatable). Defaults to a
        /// 3x3 grid over {-pi/2, 0, pi/2} per joint.
        #[arg(long = "state")]
        states: Vec<String>,
        /// Additionally verify this many random closed-loop draws (seeded by
        /// --seed); the outcome lands in the report header.
        #[arg(long, default_value_t = 0)]
        random_draws: usize,
    },
    /// Re-run one scenario over a list of values for one config key; writes
    /// <name>_sweep.csv with one row per value (divergences are recorded,
    /// not fatal).
    Sweep {
        scenario: PathBuf,
        /// Dotted config key, e.g. controller.h.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // keep usage problems on the validation exit code
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    std::fs::create_dir_all(&cli.out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", cli.out_dir.display())))?;
    match &cli.command {
        Command::Run { scenario } => cmd_run(&cli.out_dir, scenario),
        Command::Compare { scenarios } => cmd_compare(&cli.out_dir, scenarios),
        Command::Analyze {
            scenario,
            states,
            random_draws,
        } => cmd_analyze(&cli.out_dir, scenario, states, *random_draws, cli.seed),
        Command::Sweep {
            scenario,
            param,
            values,
        } => cmd_sweep(&cli.out_dir, scenario, param, values),
    }
}

fn write_run_outputs(
    out_dir: &Path,
    cfg: &ScenarioConfig,
    log: &TrajectoryLog,
) -> Result<(), CliError> {
    let metrics = compute_metrics(log, cfg.sim.settle_band).map_err(sim_error)?;
    output::write_file(
        &out_dir.join(format!("{}_trajectory.csv", cfg.name)),
        &output::trajectory_csv(cfg, log),
    )?;
    output::write_file(
        &out_dir.join(format!("{}_metrics.csv", cfg.name)),
        &output::metrics_csv(cfg, &metrics),
    )?;
    output::write_file(
        &out_dir.join(format!("{}_plot.gp", cfg.name)),
        &output::plot_script(cfg, log),
    )?;
    Ok(())
}

fn cmd_run(out_dir: &Path, scenario: &Path) -> Result<(), CliError> {
    let cfg = parse_config(scenario)?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    let log = run_scenario(&cfg.sim).map_err(sim_error)?;
    write_run_outputs(out_dir, &cfg, &log)?;
    let metrics = compute_metrics(&log, cfg.sim.settle_band).map_err(sim_error)?;
    let mut r = [0.0f64; 3];
    for row in &log.rows {
        r[0] = r[0].max(row.qref.norm());
        r[1] = r[1].max(row.qdref.norm());
        r[2] = r[2].max(row.qddref.norm());
    }
    println!(
        "{}: steady-state |e1| = [{}], peak torque = [{}], settling = {}",
        cfg.name,
        metrics
            .steady_state_e1
            .iter()
            .map(|v| fmt_f64(*v))
            .collect::<Vec<_>>()
            .join(", "),
        metrics
            .max_torque
            .iter()
            .map(|v| fmt_f64(*v))
            .collect::<Vec<_>>()
            .join(", "),
        metrics
            .settling_time
            .map_or("not settled".into(), |t| format!("{t} s")),
    );
    println!(
        "{}: reference bounds r0 = {}, r1 = {}, r2 = {}",
        cfg.name,
        fmt_f64(r[0]),
        fmt_f64(r[1]),
        fmt_f64(r[2])
    );
    Ok(())
}

fn cmd_compare(out_dir: &Path, scenarios: &[PathBuf]) -> Result<(), CliError> {
    if scenarios.len() < 2 {
        return Err(CliError::Validation(
            "compare needs at least two scenario files".into(),
        ));
    }
    let configs: Vec<ScenarioConfig> = scenarios
        .iter()
        .map(|p| parse_config(p))
        .collect::<Result<_, _>>()?;
    let first = &configs[0];
    for cfg in &configs[1..] {
        if cfg.sim.plant.dof() != first.sim.plant.dof() {
            return Err(CliError::Validation(format!(
                "scenario '{}' has a different joint count than '{}'",
                cfg.name, first.name
            )));
        }
        if cfg.sim.reference != first.sim.reference {
            return Err(CliError::Validation(format!(
                "scenario '{}' uses a different reference than '{}'; compared runs must track the same trajectory",
                cfg.name, first.name
            )));
        }
    }
    let sims: Vec<_> = configs.iter().map(|c| c.sim.clone()).collect();
    let logs = run_batch(&sims);

    let n = first.sim.plant.dof();
    let mut table = output::header(first, "compare (first scenario's configuration shown)", &[]);
    table.push_str(&output::metrics_header_columns(n).join(","));
    table.push('\n');
    let mut names = Vec::new();
    for (cfg, log) in configs.iter().zip(logs) {
        let log = log.map_err(sim_error)?;
        let metrics = compute_metrics(&log, cfg.sim.settle_band).map_err(sim_error)?;
        table.push_str(&output::metrics_row(&cfg.name, &metrics, cfg.torque_limit));
        table.push('\n');
        write_run_outputs(out_dir, cfg, &log)?;
        names.push(cfg.name.clone());
    }
    output::write_file(&out_dir.join("compare_metrics.csv"), &table)?;
    output::write_file(
        &out_dir.join("compare_plot.gp"),
        &output::compare_plot_script(&names, n),
    )?;
    println!(
        "compared {} scenarios into compare_metrics.csv",
        names.len()
    );
    Ok(())
}

fn parse_states(states: &[String], dof: usize) -> Result<Vec<DVector<f64>>, CliError> {
    if states.is_empty() {
        // default workspace grid
        let pts = [
            -std::f64::consts::FRAC_PI_2,
            0.0,
            std::f64::consts::FRAC_PI_2,
        ];
        let mut out = Vec::new();
        for &a in &pts {
            for &b in &pts {
                out.push(DVector::from_vec(vec![a, b]));
            }
        }
        return Ok(out);
    }
    states
        .iter()
        .map(|s| {
            let vals: Vec<f64> = s
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Validation(format!("--state '{s}': {e}")))?;
            if vals.len() != dof {
                return Err(CliError::Validation(format!(
                    "--state '{s}': expected {dof} joint angles"
                )));
            }
            Ok(DVector::from_vec(vals))
        })
        .collect()
}

struct StabilityRow {
    kind: &'static str,
    h: f64,
    q_w: f64,
    r_w: f64,
    max_re: f64,
    hurwitz: bool,
    threshold: f64,
    gamma_est: f64,
    margin: f64,
    q1: f64,
    q2: f64,
}

impl StabilityRow {
    fn csv(&self) -> String {
        [
            self.kind.to_string(),
            fmt_f64(self.h),
            fmt_f64(self.q_w),
            fmt_f64(self.r_w),
            fmt_f64(self.max_re),
            self.hurwitz.to_string(),
            fmt_f64(self.threshold),
            fmt_f64(self.gamma_est),
            fmt_f64(self.margin),
            fmt_f64(self.q1),
            fmt_f64(self.q2),
        ]
        .join(",")
    }
}

fn cmd_analyze(
    out_dir: &Path,
    scenario: &Path,
    states: &[String],
    random_draws: usize,
    seed: u64,
) -> Result<(), CliError> {
    let cfg = parse_config(scenario)?;
    let sim = &cfg.sim;
    let cp = sim
        .controller
        .as_ref()
        .ok_or_else(|| CliError::Validation("analyze needs a scenario with a controller".into()))?;
    let (h, q_w, r_w) = (cp.h, cp.q_weight, cp.r_weight);
    let grid_default = states.is_empty();
    let states = parse_states(states, sim.plant.dof())?;

    // disturbance gains from the logged run; a divergent run still gets a
    // stability report, with the gains marked unavailable
    let mut extra = vec![format!("seed: {seed}")];
    let (gamma_est, mu_est) = match run_scenario(sim) {
        Ok(log) => {
            let ub =
                analysis::estimate_gains(&log, &sim.nominal, &sim.plant, sim.friction.as_ref())
                    .map_err(sim_error)?;
            extra.push(format!(
                "estimated gains: gamma = {}, mu = {}, m_bar = {}, c_bar = {}, g_bar = {}, f_bar = {}, m_bound_ok = {}, all_converged = {}",
                fmt_f64(ub.gamma),
                fmt_f64(ub.mu),
                fmt_f64(ub.m_bar),
                fmt_f64(ub.c_bar),
                fmt_f64(ub.g_bar),
                fmt_f64(ub.f_bar),
                ub.m_bound_ok,
                ub.all_converged
            ));
            (ub.gamma, ub.mu)
        }
        Err(SimError::Diverged { t, speed }) => {
            extra.push(format!(
                "scenario run diverged at t = {t} (velocity norm {speed:.3e}); gains unavailable"
            ));
            (f64::NAN, f64::NAN)
        }
        Err(e) => return Err(sim_error(e)),
    };
    if grid_default {
        extra.push(
            "frozen states: default 3x3 workspace grid over {-pi/2, 0, pi/2} per joint".into(),
        );
    } else {
        extra.push(format!("frozen states: {} user-provided", states.len()));
    }
    if let Some(q) = states.first() {
        // both printed readings of the effort-weight threshold; the table's
        // threshold column carries the proof-consistent one
        let m_nom = dynamics::mass_matrix(q, &sim.nominal).map_err(sim_error)?;
        let q_eye = DMatrix::<f64>::identity(2 * sim.plant.dof(), 2 * sim.plant.dof());
        let (_, m_upper) = dynamics::mass_eig_bounds(&sim.nominal, 64).map_err(sim_error)?;
        if let Ok((thr, _)) =
            analysis::effort_weight_thresholds(h, q_w, r_w, &m_nom, m_upper, &q_eye)
        {
            extra.push(format!(
                "effort-weight threshold at first state: stated = {}, proof_consistent = {}",
                fmt_f64(thr.stated),
                fmt_f64(thr.proof_consistent)
            ));
        }
    }
    if random_draws > 0 {
        let sweep = analysis::lemma1_random_sweep(random_draws, seed).map_err(sim_error)?;
        extra.push(format!(
            "random draws: {} cases, strictly stable = {}, worst dense Re = {:.3e}, worst factorization gap = {:.3e}",
            sweep.cases, sweep.all_strictly_stable, sweep.worst_max_real, sweep.worst_gap
        ));
    }

    let q_eye_2n = DMatrix::<f64>::identity(2 * sim.plant.dof(), 2 * sim.plant.dof());
    let q_eye_3n = DMatrix::<f64>::identity(3 * sim.plant.dof(), 3 * sim.plant.dof());
    let (_, m_upper) = dynamics::mass_eig_bounds(&sim.nominal, 64).map_err(sim_error)?;

    let mut rows: Vec<StabilityRow> = Vec::new();
    let mut lemma2_rows: Vec<String> = Vec::new();
    for q in &states {
        let m_nom = dynamics::mass_matrix(q, &sim.nominal).map_err(sim_error)?;
        let m_true = dynamics::mass_matrix(q, &sim.plant).map_err(sim_error)?;

        // basic closed loop + effort-weight threshold on mu
        let report = analysis::lemma1_check(h, q_w, r_w, &m_nom).map_err(sim_error)?;
        let threshold = analysis::effort_weight_thresholds(h, q_w, r_w, &m_nom, m_upper, &q_eye_2n)
            .map(|(t, _)| t.proof_consistent)
            .unwrap_or(f64::NAN);
        rows.push(StabilityRow {
            kind: "A_basic",
            h,
            q_w,
            r_w,
            max_re: report.max_real,
            hurwitz: report.hurwitz,
            threshold,
            gamma_est: mu_est,
            margin: threshold - mu_est,
            q1: q[0],
            q2: q[1],
        });

        // mismatch closed loops + disturbance-gain thresholds on gamma
        let (b, b_eigs) = analysis::b_matrix(&m_true, &m_nom).map_err(sim_error)?;
        let b_bar = analysis::mismatch_matrix(&b, h);
        let rep = analysis::stability_report(analysis::ClosedLoopKind::MismatchLimit, &b_bar);
        let threshold = analysis::robustness_threshold(&b_bar, &q_eye_2n)
            .map(|(t, _)| t)
            .unwrap_or(f64::NAN);
        rows.push(StabilityRow {
            kind: "B_bar",
            h,
            q_w,
            r_w,
            max_re: rep.max_real,
            hurwitz: rep.hurwitz,
            threshold,
            gamma_est,
            margin: threshold - gamma_est,
            q1: q[0],
            q2: q[1],
        });

        let lemma2 = analysis::lemma2_check(&m_true, &m_nom, h).map_err(sim_error)?;
        let threshold =
            analysis::robustness_threshold(&analysis::integral_mismatch_matrix(&b, h), &q_eye_3n)
                .map(|(t, _)| t)
                .unwrap_or(f64::NAN);
        rows.push(StabilityRow {
            kind: "B_tilde",
            h,
            q_w,
            r_w,
            max_re: lemma2.report.max_real,
            hurwitz: lemma2.report.hurwitz,
            threshold,
            gamma_est,
            margin: threshold - gamma_est,
            q1: q[0],
            q2: q[1],
        });

        lemma2_rows.push(
            [
                fmt_f64(q[0]),
                fmt_f64(q[1]),
                fmt_f64(lemma2.eps_max),
                fmt_f64(b_eigs[0]),
                lemma2.eps_ok.to_string(),
                lemma2.routh_ok.to_string(),
                lemma2.report.hurwitz.to_string(),
                lemma2.consistent.to_string(),
            ]
            .join(","),
        );
    }

    // h-sweep of stability margins at the first frozen state
    if let Some(q) = states.first() {
        let m_nom = dynamics::mass_matrix(q, &sim.nominal).map_err(sim_error)?;
        let m_true = dynamics::mass_matrix(q, &sim.plant).map_err(sim_error)?;
        let (b, _) = analysis::b_matrix(&m_true, &m_nom).map_err(sim_error)?;
        for &hs in &[2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1] {
            let report = analysis::lemma1_check(hs, q_w, r_w, &m_nom).map_err(sim_error)?;
            rows.push(StabilityRow {
                kind: "A_basic",
                h: hs,
                q_w,
                r_w,
                max_re: report.max_real,
                hurwitz: report.hurwitz,
                threshold: f64::NAN,
                gamma_est: f64::NAN,
                margin: f64::NAN,
                q1: q[0],
                q2: q[1],
            });
            let rep = analysis::stability_report(
                analysis::ClosedLoopKind::IntegralMismatch,
                &analysis::integral_mismatch_matrix(&b, hs),
            );
            rows.push(StabilityRow {
                kind: "B_tilde",
                h: hs,
                q_w,
                r_w,
                max_re: rep.max_real,
                hurwitz: rep.hurwitz,
                threshold: f64::NAN,
                gamma_est: f64::NAN,
                margin: f64::NAN,
                q1: q[0],
                q2: q[1],
            });
        }
    }

    let mut csv = output::header(&cfg, "stability report", &extra);
    csv.push_str("matrix_kind,h,q_w,r_w,max_re_eig,hurwitz,threshold,gamma_est,margin,q1,q2\n");
    for row in &rows {
        csv.push_str(&row.csv());
        csv.push('\n');
    }
    output::write_file(&out_dir.join(format!("{}_stability.csv", cfg.name)), &csv)?;

    let mut csv = output::header(&cfg, "integral-loop mismatch report", &extra);
    csv.push_str("q1,q2,eps_max,b_min,eps_ok,routh_ok,hurwitz,consistent\n");
    for row in &lemma2_rows {
        csv.push_str(row);
        csv.push('\n');
    }
    output::write_file(&out_dir.join(format!("{}_lemma2.csv", cfg.name)), &csv)?;
    println!(
        "analyzed {} frozen states into {}_stability.csv",
        states.len(),
        cfg.name
    );
    Ok(())
}

fn cmd_sweep(out_dir: &Path, scenario: &Path, param: &str, values: &[f64]) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Validation(
            "sweep needs at least one value".into(),
        ));
    }
    let text = std::fs::read_to_string(scenario)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", scenario.display())))?;
    let base_table: toml::Table = text.parse().map_err(|e| {
        CliError::Validation(format!("{}: scenario parse error: {e}", scenario.display()))
    })?;

    let mut configs = Vec::new();
    for &v in values {
        let mut table = base_table.clone();
        set_path(&mut table, param, toml::Value::Float(v))?;
        let rendered =
            toml::to_string(&table).map_err(|e| CliError::Validation(format!("internal: {e}")))?;
        let cfg = parse_config_str(&rendered)
            .map_err(|e| CliError::Validation(format!("{param} = {v}: {e}")))?;
        configs.push(cfg);
    }

    let sims: Vec<_> = configs.iter().map(|c| c.sim.clone()).collect();
    let logs = run_batch(&sims);

    let n = configs[0].sim.plant.dof();
    let mut csv = output::header(
        &configs[0],
        "parameter sweep (base configuration shown)",
        &[format!("swept key: {param}")],
    );
    let mut cols = vec![param.to_string(), "status".to_string()];
    cols.extend(output::metrics_header_columns(n).into_iter().skip(1));
    csv.push_str(&cols.join(","));
    csv.push('\n');

    for ((cfg, log), &v) in configs.iter().zip(logs).zip(values.iter()) {
        match log {
            Ok(log) => {
                let metrics = compute_metrics(&log, cfg.sim.settle_band).map_err(sim_error)?;
                let row = output::metrics_row(&cfg.name, &metrics, cfg.torque_limit);
                let tail = row.split_once(',').map_or("", |(_, t)| t).to_string();
                csv.push_str(&format!("{},ok,{tail}\n", fmt_f64(v)));
            }
            Err(SimError::Diverged { t, speed }) => {
                let blanks = vec![String::new(); output::metrics_header_columns(n).len() - 1];
                csv.push_str(&format!(
                    "{},diverged at t={} (|qd|={:.3e}),{}\n",
                    fmt_f64(v),
                    fmt_f64(t),
                    speed,
                    blanks.join(",")
                ));
            }
            Err(e) => return Err(sim_error(e)),
        }
    }
    output::write_file(
        &out_dir.join(format!("{}_sweep.csv", configs[0].name)),
        &csv,
    )?;
    println!(
        "swept {param} over {} values into {}_sweep.csv",
        values.len(),
        configs[0].name
    );
    Ok(())
}
