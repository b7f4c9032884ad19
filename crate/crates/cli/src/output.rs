//! CSV and plot-script emission.
//!
//! Every file starts with a comment header that embeds the fully resolved
//! configuration (strip the leading `# ` and the text parses back as the
//! scenario), so runs are self-describing and reproducible from their own
//! outputs. Numbers are written with shortest round-trip formatting, which
//! makes repeated invocations byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rhcsim::sim::{Metrics, TrajectoryLog};

use crate::config::{resolved_toml_string, ScenarioConfig};
use crate::CliError;

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

/// Comment header: `##` lines are annotations, `# ` lines carry the resolved
/// configuration verbatim.
pub fn header(cfg: &ScenarioConfig, kind: &str, extra: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "## rhcsim {kind}");
    let _ = writeln!(out, "## scenario: {}", cfg.name);
    if cfg.defaulted.is_empty() {
        let _ = writeln!(out, "## defaulted keys: (none)");
    } else {
        let _ = writeln!(out, "## defaulted keys: {}", cfg.defaulted.join(", "));
    }
    for w in &cfg.warnings {
        let _ = writeln!(out, "## warning: {w}");
    }
    for line in extra {
        let _ = writeln!(out, "## {line}");
    }
    let _ = writeln!(
        out,
        "## resolved configuration follows (strip '# ' to re-parse):"
    );
    for line in resolved_toml_string(cfg).lines() {
        if line.is_empty() {
            let _ = writeln!(out, "#");
        } else {
            let _ = writeln!(out, "# {line}");
        }
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Trajectory CSV columns: t, q*, qd*, qref*, e1_*, u*, then e0_* for the
/// integral variant and qhat_*/qdhat_* when the observer is active.
pub fn trajectory_csv(cfg: &ScenarioConfig, log: &TrajectoryLog) -> String {
    let n = log.dof;
    let with_e0 = log.rows.first().is_some_and(|r| r.e0.is_some());
    let with_observer = log.rows.first().is_some_and(|r| r.zhat.is_some());

    let mut out = header(cfg, "trajectory", &[]);
    let mut cols = vec!["t".to_string()];
    for (prefix, count) in [("q", n), ("qd", n), ("qref", n)] {
        for j in 1..=count {
            cols.push(format!("{prefix}{j}"));
        }
    }
    for j in 1..=n {
        cols.push(format!("e1_{j}"));
    }
    for j in 1..=n {
        cols.push(format!("u{j}"));
    }
    if with_e0 {
        for j in 1..=n {
            cols.push(format!("e0_{j}"));
        }
    }
    if with_observer {
        for j in 1..=n {
            cols.push(format!("qhat_{j}"));
        }
        for j in 1..=n {
            cols.push(format!("qdhat_{j}"));
        }
    }
    out.push_str(&cols.join(","));
    out.push('\n');

    for row in &log.rows {
        let mut fields = vec![fmt_f64(row.t)];
        for v in row.q.iter().chain(row.qd.iter()).chain(row.qref.iter()) {
            fields.push(fmt_f64(*v));
        }
        for v in row.e1.iter().chain(row.u.iter()) {
            fields.push(fmt_f64(*v));
        }
        if let Some(e0) = &row.e0 {
            for v in e0.iter() {
                fields.push(fmt_f64(*v));
            }
        }
        if let Some(z) = &row.zhat {
            for j in 0..n {
                fields.push(fmt_f64(z[2 * j]));
            }
            for j in 0..n {
                fields.push(fmt_f64(z[2 * j + 1]));
            }
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn metrics_header_columns(n: usize) -> Vec<String> {
    let mut cols = vec!["scenario".to_string()];
    for j in 1..=n {
        cols.push(format!("rms_e1_{j}"));
    }
    for j in 1..=n {
        cols.push(format!("steady_state_e1_{j}"));
    }
    for j in 1..=n {
        cols.push(format!("max_torque_{j}"));
    }
    cols.push("settling_time".into());
    cols.push("energy_u".into());
    cols.push("torque_limit".into());
    cols.push("torque_within_limit".into());
    cols
}

pub fn metrics_row(name: &str, m: &Metrics, torque_limit: Option<f64>) -> String {
    let mut fields = vec![name.to_string()];
    for v in m
        .rms_e1
        .iter()
        .chain(m.steady_state_e1.iter())
        .chain(m.max_torque.iter())
    {
        fields.push(fmt_f64(*v));
    }
    fields.push(m.settling_time.map_or("not_settled".into(), fmt_f64));
    fields.push(fmt_f64(m.energy_u));
    match torque_limit {
        Some(limit) => {
            fields.push(fmt_f64(limit));
            fields.push((m.max_torque.max() <= limit).to_string());
        }
        None => {
            fields.push(String::new());
            fields.push(String::new());
        }
    }
    fields.join(",")
}

pub fn metrics_csv(cfg: &ScenarioConfig, m: &Metrics) -> String {
    let n = m.rms_e1.len();
    let mut out = header(cfg, "metrics", &[]);
    out.push_str(&metrics_header_columns(n).join(","));
    out.push('\n');
    out.push_str(&metrics_row(&cfg.name, m, cfg.torque_limit));
    out.push('\n');
    out
}

/// Gnuplot script with the position/error/torque panels for one run.
pub fn plot_script(cfg: &ScenarioConfig, log: &TrajectoryLog) -> String {
    let n = log.dof;
    let name = &cfg.name;
    let csv = format!("{name}_trajectory.csv");
    let mut s = String::new();
    let _ = writeln!(s, "# render with: gnuplot {name}_plot.gp");
    let _ = writeln!(s, "set datafile separator comma");
    let _ = writeln!(s, "set terminal pngcairo size 1400,1000");
    let _ = writeln!(s, "set output '{name}.png'");
    let _ = writeln!(s, "set multiplot layout 3,1 title '{name}'");
    let _ = writeln!(s, "set key outside right");
    let _ = writeln!(s, "set xlabel 't [s]'");

    // column indices are 1-based: t, q (2..), qd, qref, e1, u
    let q0 = 2;
    let qref0 = 2 + 2 * n;
    let e10 = 2 + 3 * n;
    let u0 = 2 + 4 * n;

    let _ = writeln!(s, "set ylabel 'position [rad]'");
    let mut clauses = Vec::new();
    for j in 0..n {
        clauses.push(format!(
            "'{csv}' every ::1 using 1:{} with lines title 'q{}'",
            q0 + j,
            j + 1
        ));
        clauses.push(format!(
            "'{csv}' every ::1 using 1:{} with lines dashtype 2 title 'qref{}'",
            qref0 + j,
            j + 1
        ));
    }
    let _ = writeln!(s, "plot {}", clauses.join(", \\\n     "));

    let _ = writeln!(s, "set ylabel 'tracking error [rad]'");
    let mut clauses = Vec::new();
    for j in 0..n {
        clauses.push(format!(
            "'{csv}' every ::1 using 1:{} with lines title 'e1_{}'",
            e10 + j,
            j + 1
        ));
    }
    let _ = writeln!(s, "plot {}", clauses.join(", \\\n     "));

    let _ = writeln!(s, "set ylabel 'torque [N m]'");
    let mut clauses = Vec::new();
    for j in 0..n {
        clauses.push(format!(
            "'{csv}' every ::1 using 1:{} with lines title 'u{}'",
            u0 + j,
            j + 1
        ));
    }
    if let Some(limit) = cfg.torque_limit {
        clauses.push(format!("{limit} with lines dashtype 3 title 'limit'"));
        clauses.push(format!("-{limit} with lines dashtype 3 notitle"));
    }
    let _ = writeln!(s, "plot {}", clauses.join(", \\\n     "));
    let _ = writeln!(s, "unset multiplot");
    s
}

/// Combined tracking-error plot over several runs.
pub fn compare_plot_script(names: &[String], n: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# render with: gnuplot compare_plot.gp");
    let _ = writeln!(s, "set datafile separator comma");
    let _ = writeln!(s, "set terminal pngcairo size 1400,700");
    let _ = writeln!(s, "set output 'compare.png'");
    let _ = writeln!(s, "set key outside right");
    let _ = writeln!(s, "set xlabel 't [s]'");
    let _ = writeln!(s, "set ylabel 'tracking error [rad]'");
    let e10 = 2 + 3 * n;
    let mut clauses = Vec::new();
    for name in names {
        for j in 0..n {
            clauses.push(format!(
                "'{name}_trajectory.csv' every ::1 using 1:{} with lines title '{name} e1_{}'",
                e10 + j,
                j + 1
            ));
        }
    }
    let _ = writeln!(s, "plot {}", clauses.join(", \\\n     "));
    s
}
