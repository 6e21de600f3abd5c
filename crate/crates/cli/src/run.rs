use std::fmt::Write as _;

use hilfer_core::{growth_certificate, residual, solve_global, CertificateKind, SolveStatus};

use crate::problem::Problem;
use crate::CliError;

/// Solved trajectory plus the metadata written to the CSV footer.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// (t, x, weighted x) per node, t strictly increasing.
    pub rows: Vec<(f64, f64, f64)>,
    pub status: SolveStatus,
    pub nu_hat: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub certificate: CertificateKind,
    pub windows: usize,
}

pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged | SolveStatus::HorizonReached => 0,
        SolveStatus::BlowUpSuspected => 2,
        SolveStatus::NotConverged => 3,
    }
}

pub const EXIT_PARSE: i32 = 4;

pub fn run_solve(problem: &Problem) -> Result<RunOutput, CliError> {
    let ivp = problem.ivp()?;
    let report = solve_global(&ivp, &problem.policy(), &problem.config())?;
    let traj = report.trajectory();
    let (rows, residual, certificate) = match &traj {
        Some(traj) => {
            let rows = (0..traj.len())
                .map(|j| (traj.nodes()[j], traj.raw(j), traj.weighted_values()[j]))
                .collect();
            (rows, residual(&ivp, traj), growth_certificate(&ivp, traj.nodes()).kind)
        }
        None => (Vec::new(), f64::NAN, CertificateKind::LocalOnly),
    };
    Ok(RunOutput {
        rows,
        status: report.status,
        nu_hat: report.blow_up_estimate,
        residual,
        iterations: report.iterations.iter().sum(),
        certificate,
        windows: report.windows(),
    })
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        exit_code(self.status)
    }

    pub fn status_line(&self) -> String {
        let mut s = format!("status={} windows={}", self.status, self.windows);
        if let Some(nu) = self.nu_hat {
            let _ = write!(s, " nu_hat={nu:.16e}");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,weighted_x\n");
        for (t, x, y) in &self.rows {
            let _ = writeln!(s, "{t:.16e},{x:.16e},{y:.16e}");
        }
        let _ = writeln!(s, "# meta: status={}", self.status);
        match self.nu_hat {
            Some(nu) => writeln!(s, "# meta: nu_hat={nu:.16e}"),
            None => writeln!(s, "# meta: nu_hat=none"),
        }
        .ok();
        let _ = writeln!(s, "# meta: residual={:.16e}", self.residual);
        let _ = writeln!(s, "# meta: iterations={}", self.iterations);
        let _ = writeln!(s, "# meta: certificate={:?}", self.certificate);
        s
    }
}

/// Rows and `# meta:` fields of a CSV written by [`RunOutput::to_csv`].
pub fn read_csv(text: &str) -> Option<(Vec<(f64, f64, f64)>, Vec<(String, String)>)> {
    let mut lines = text.lines();
    if lines.next()? != "t,x,weighted_x" {
        return None;
    }
    let mut rows = Vec::new();
    let mut meta = Vec::new();
    for line in lines {
        if let Some(m) = line.strip_prefix("# meta: ") {
            let (k, v) = m.split_once('=')?;
            meta.push((k.to_string(), v.to_string()));
            continue;
        }
        let mut it = line.split(',').map(|v| v.parse::<f64>().ok());
        rows.push((it.next()??, it.next()??, it.next()??));
    }
    Some((rows, meta))
}
