//! Running experiments and writing their artifacts.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use contact_thermo::diagnostics::{audit_laws, LawReport};
use contact_thermo::{simulate, Trajectory};
use serde::Serialize;

use crate::config::{ConfigError, Experiment};

/// Process exit status, ordered by severity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Success,
    Io,
    AuditFailure,
    StepFailure,
    ConfigError,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Io => 1,
            Status::ConfigError => 2,
            Status::StepFailure => 3,
            Status::AuditFailure => 4,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    pub fn status(&self) -> Status {
        match self {
            RunError::Config(_) => Status::ConfigError,
            RunError::Io { .. } => Status::Io,
        }
    }
}

/// What a finished run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub name: String,
    pub csv: PathBuf,
    pub json: PathBuf,
    pub summary_path: PathBuf,
    pub summary: String,
    pub report: LawReport,
    pub failure: Option<String>,
}

impl RunOutcome {
    pub fn status(&self, strict: bool) -> Status {
        if self.failure.is_some() {
            Status::StepFailure
        } else if strict && !self.report.passed() {
            Status::AuditFailure
        } else {
            Status::Success
        }
    }
}

#[derive(Serialize)]
struct JsonSummary<'a> {
    experiment: &'a str,
    model: &'a str,
    params: Vec<(String, f64)>,
    method: &'a str,
    h: f64,
    steps_requested: usize,
    steps_completed: usize,
    failure: Option<&'a str>,
    passed: bool,
    report: &'a LawReport,
}

/// Runs `exp` and writes `<name>.csv`, `<name>.json` and `<name>.txt` into `out_dir`.
pub fn run(exp: &Experiment, out_dir: &Path) -> Result<RunOutcome, RunError> {
    let traj = simulate(&exp.model, &exp.method, &exp.x0, &exp.stepper, exp.steps).map_err(|e| ConfigError {
        message: e.to_string(),
        field: None,
        line: None,
    })?;
    let report = audit_laws(&traj, &exp.model, &exp.tolerances);
    let failure = traj
        .failure
        .as_ref()
        .map(|f| format!("step {} failed: {}", f.step, f.error));

    fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let csv = out_dir.join(format!("{}.csv", exp.name));
    let json = out_dir.join(format!("{}.json", exp.name));
    let summary_path = out_dir.join(format!("{}.txt", exp.name));

    write_file(&csv, |w| write_csv(&traj, w))?;
    let doc = JsonSummary {
        experiment: &exp.name,
        model: exp.model.name(),
        params: exp.model.params().0,
        method: &traj.method,
        h: exp.stepper.h,
        steps_requested: exp.steps,
        steps_completed: traj.len().saturating_sub(1),
        failure: failure.as_deref(),
        passed: failure.is_none() && report.passed(),
        report: &report,
    };
    write_file(&json, |w| {
        serde_json::to_writer_pretty(&mut *w, &doc).map_err(io::Error::other)?;
        writeln!(w)
    })?;
    let summary = render_summary(exp, &traj, &report, failure.as_deref());
    write_file(&summary_path, |w| w.write_all(summary.as_bytes()))?;

    Ok(RunOutcome {
        name: exp.name.clone(),
        csv,
        json,
        summary_path,
        summary,
        report,
        failure,
    })
}

fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), RunError> {
    let wrap = |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(wrap)?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(wrap)?;
    w.flush().map_err(wrap)
}

/// Header `t,<components>,H,S_total,T_1[,T_2]`, values with 17 significant digits.
pub fn write_csv(traj: &Trajectory, w: &mut dyn Write) -> io::Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend(traj.layout.component_names());
    header.push("H".into());
    header.push("S_total".into());
    header.extend((1..=traj.layout.thermal_count()).map(|a| format!("T_{a}")));
    writeln!(w, "{}", header.join(","))?;

    let mut line = String::new();
    for k in 0..traj.len() {
        line.clear();
        let values = std::iter::once(traj.times[k])
            .chain(traj.states[k].iter().copied())
            .chain([traj.energy[k], traj.total_entropy[k]])
            .chain(traj.temperatures[k].iter().copied());
        for (i, v) in values.enumerate() {
            if i > 0 {
                line.push(',');
            }
            write!(line, "{v:.16e}").expect("writing to a String cannot fail");
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "VIOLATED"
    }
}

fn render_summary(exp: &Experiment, traj: &Trajectory, report: &LawReport, failure: Option<&str>) -> String {
    let mut s = String::new();
    let params = exp
        .model
        .params()
        .0
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ");
    let _ = writeln!(s, "experiment   {}", exp.name);
    let _ = writeln!(s, "model        {} ({params})", exp.model.name());
    let _ = writeln!(s, "method       {}", traj.method);
    let _ = writeln!(s, "step size    {}", exp.stepper.h);
    let _ = writeln!(s, "steps        {} of {}", traj.len().saturating_sub(1), exp.steps);
    let _ = writeln!(
        s,
        "energy       H0 = {:.10e}, max drift {:.3e} (tol {:e}) {}",
        traj.energy.first().copied().unwrap_or(f64::NAN),
        report.max_energy_drift,
        report.tol_energy,
        verdict(report.energy_ok)
    );
    match report.min_entropy_increment {
        Some(d) => {
            let _ = writeln!(
                s,
                "entropy      min increment {d:.3e} (floor -{:e}) {}",
                report.tol_entropy,
                verdict(report.entropy_ok)
            );
        }
        None => {
            let _ = writeln!(s, "entropy      no steps");
        }
    }
    let _ = writeln!(
        s,
        "first law    max residual {:.3e} (tol {:.3e}) {}",
        report.max_first_law_residual,
        report.tol_first_law,
        verdict(report.first_law_ok)
    );
    if let Some(last) = traj.temperatures.last() {
        let temps = last
            .iter()
            .enumerate()
            .map(|(a, t)| format!("T_{} = {t:.10}", a + 1))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(s, "final        {temps}");
    }
    if let Some(f) = failure {
        let _ = writeln!(s, "failure      {f}");
    }
    let status = if failure.is_some() {
        "step failure"
    } else if report.passed() {
        "laws hold"
    } else {
        "laws violated"
    };
    let _ = writeln!(s, "status       {status}");
    s
}

/// Loads and runs each configuration on its own thread. Results keep the input order.
pub fn batch(configs: &[PathBuf], out_dir: &Path) -> Vec<(PathBuf, Result<RunOutcome, RunError>)> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|path| {
                scope.spawn(move || {
                    let exp = crate::config::load(path)?;
                    run(&exp, out_dir)
                })
            })
            .collect();
        configs
            .iter()
            .cloned()
            .zip(handles.into_iter().map(|h| h.join().expect("experiment thread panicked")))
            .collect()
    })
}
