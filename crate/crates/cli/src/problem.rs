//! Problem files: `[section]` headers, `key = value` lines, `#` comments.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hilfer_core::{
    make_order, ContinuationPolicy, GrowthEnvelope, HilferError, IvpSpec, Lipschitz, Method, Rule, SolverConfig,
    WindowLength,
};

use crate::CliError;

/// Right-hand sides the CLI knows how to build.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhsKind {
    Zero,
    /// f = λ x
    Linear { lambda: f64 },
    /// f = c t^p
    PowerForcing { c: f64, p: f64 },
    /// f = sign · x^q, q > 1
    PowerNonlinear { q: f64, sign: f64 },
}

impl RhsKind {
    pub fn name(&self) -> &'static str {
        match self {
            RhsKind::Zero => "zero",
            RhsKind::Linear { .. } => "linear",
            RhsKind::PowerForcing { .. } => "power_forcing",
            RhsKind::PowerNonlinear { .. } => "power_nonlinear",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub alpha: f64,
    pub beta: f64,
    pub x0: f64,
    pub rhs: RhsKind,
    pub delta: f64,
    pub intervals: usize,
    /// `None` means the order's default grading.
    pub grading: Option<f64>,
    pub method: Method,
    pub rule: Rule,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub window: WindowLength,
    pub max_windows: usize,
    pub blow_up_threshold: f64,
    pub horizon: f64,
    pub output: Option<PathBuf>,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("order", &["alpha", "beta"]),
    ("initial", &["x0"]),
    ("rhs", &["kind", "lambda", "c", "p", "q", "sign", "delta"]),
    ("grid", &["N", "r"]),
    ("solver", &["method", "tol", "max_iter", "damping", "rule"]),
    ("continuation", &["window", "max_windows", "blow_up_threshold"]),
    ("run", &["horizon", "output"]),
];

struct Entry {
    value: String,
    line: usize,
}

struct Raw {
    entries: HashMap<(String, String), Entry>,
    last_line: usize,
}

impl Raw {
    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.get(section, key).map_or(self.last_line, |e| e.line)
    }

    fn err(&self, section: &str, key: &str, message: impl Into<String>) -> CliError {
        CliError::Parse {
            line: self.line_of(section, key),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn required(&self, section: &str, key: &str) -> Result<&Entry, CliError> {
        self.get(section, key)
            .ok_or_else(|| self.err(section, key, format!("missing required key in [{section}]")))
    }

    fn real(&self, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => parse_real(&e.value)
                .map(Some)
                .ok_or_else(|| self.err(section, key, format!("not a finite number: {:?}", e.value))),
        }
    }

    fn real_required(&self, section: &str, key: &str) -> Result<f64, CliError> {
        self.required(section, key)?;
        Ok(self.real(section, key)?.unwrap())
    }

    fn count(&self, section: &str, key: &str) -> Result<Option<usize>, CliError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<usize>()
                .map(Some)
                .map_err(|_| self.err(section, key, format!("not a non-negative integer: {:?}", e.value))),
        }
    }

    fn real_or_auto(&self, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        match self.get(section, key) {
            Some(e) if e.value == "auto" => Ok(None),
            _ => self.real(section, key),
        }
    }
}

fn parse_real(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn tokenize(text: &str) -> Result<Raw, CliError> {
    let mut entries: HashMap<(String, String), Entry> = HashMap::new();
    let mut section: Option<&str> = None;
    let mut last_line = 0;
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| CliError::Parse {
                    line,
                    key: content.to_string(),
                    message: "unterminated section header".into(),
                })?
                .trim();
            section = Some(
                SECTIONS
                    .iter()
                    .find(|(s, _)| *s == name)
                    .map(|(s, _)| *s)
                    .ok_or_else(|| CliError::Parse {
                        line,
                        key: name.to_string(),
                        message: "unknown section".into(),
                    })?,
            );
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| CliError::Parse {
            line,
            key: content.to_string(),
            message: "expected `key = value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or_else(|| CliError::Parse {
            line,
            key: key.to_string(),
            message: "key outside of any section".into(),
        })?;
        let known = SECTIONS.iter().find(|(s, _)| *s == sec).unwrap().1;
        if !known.contains(&key) {
            return Err(CliError::Parse {
                line,
                key: key.to_string(),
                message: format!("unknown key in [{sec}]"),
            });
        }
        let slot = (sec.to_string(), key.to_string());
        if let Some(prev) = entries.get(&slot) {
            return Err(CliError::Parse {
                line,
                key: key.to_string(),
                message: format!("duplicate key (first set on line {})", prev.line),
            });
        }
        entries.insert(slot, Entry { value: value.to_string(), line });
    }
    Ok(Raw { entries, last_line })
}

// Maps a library domain error back to the line of the offending key.
fn locate(raw: &Raw, e: HilferError) -> CliError {
    match e {
        HilferError::Domain { field, reason } => {
            let section = SECTIONS
                .iter()
                .find(|(_, keys)| keys.contains(&field))
                .map_or("run", |(s, _)| *s);
            raw.err(section, field, reason)
        }
        other => CliError::Solver(other),
    }
}

pub fn parse_problem(path: &Path) -> Result<Problem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_problem_str(&text)
}

pub fn parse_problem_str(text: &str) -> Result<Problem, CliError> {
    let raw = tokenize(text)?;

    let alpha = raw.real_required("order", "alpha")?;
    let beta = raw.real_required("order", "beta")?;
    make_order(alpha, beta).map_err(|e| locate(&raw, e))?;
    let x0 = raw.real_required("initial", "x0")?;

    let kind = raw.required("rhs", "kind")?.value.clone();
    let (rhs, used): (RhsKind, &[&str]) = match kind.as_str() {
        "zero" => (RhsKind::Zero, &[]),
        "linear" => (
            RhsKind::Linear {
                lambda: raw.real_required("rhs", "lambda")?,
            },
            &["lambda"],
        ),
        "power_forcing" => (
            RhsKind::PowerForcing {
                c: raw.real_required("rhs", "c")?,
                p: raw.real_required("rhs", "p")?,
            },
            &["c", "p"],
        ),
        "power_nonlinear" => {
            let q = raw.real_required("rhs", "q")?;
            if !(q > 1.0) {
                return Err(raw.err("rhs", "q", format!("must be > 1, got {q}")));
            }
            let sign = raw.real_required("rhs", "sign")?;
            if sign != 1.0 && sign != -1.0 {
                return Err(raw.err("rhs", "sign", format!("must be 1 or -1, got {sign}")));
            }
            (RhsKind::PowerNonlinear { q, sign }, &["q", "sign"])
        }
        other => return Err(raw.err("rhs", "kind", format!("unknown kind {other:?}"))),
    };
    for key in ["lambda", "c", "p", "q", "sign"] {
        if !used.contains(&key) && raw.get("rhs", key).is_some() {
            return Err(raw.err("rhs", key, format!("not used by kind {kind}")));
        }
    }
    let default_delta = match rhs {
        RhsKind::PowerForcing { p, .. } if p < 0.0 => -p,
        _ => 0.0,
    };
    let delta = raw.real("rhs", "delta")?.unwrap_or(default_delta);

    let intervals = raw.count("grid", "N")?.unwrap_or(1024);
    if intervals == 0 {
        return Err(raw.err("grid", "N", "must be at least 1"));
    }
    let grading = raw.real_or_auto("grid", "r")?;
    if let Some(r) = grading {
        if r < 1.0 {
            return Err(raw.err("grid", "r", format!("must be >= 1, got {r}")));
        }
    }

    let method = match raw.get("solver", "method").map(|e| e.value.as_str()) {
        None | Some("picard") => Method::Picard,
        Some("implicit_step") => Method::ImplicitStep,
        Some(other) => return Err(raw.err("solver", "method", format!("expected picard or implicit_step, got {other:?}"))),
    };
    let rule = match raw.get("solver", "rule").map(|e| e.value.as_str()) {
        None | Some("trapezoid") => Rule::Trapezoid,
        Some("rectangle") => Rule::Rectangle,
        Some(other) => return Err(raw.err("solver", "rule", format!("expected trapezoid or rectangle, got {other:?}"))),
    };
    let defaults = SolverConfig::default();
    let tol = raw.real("solver", "tol")?.unwrap_or(defaults.tol);
    let max_iter = raw.count("solver", "max_iter")?.unwrap_or(defaults.max_iter);
    let damping = raw.real("solver", "damping")?.unwrap_or(defaults.damping);

    let horizon = raw.real_required("run", "horizon")?;
    let policy = ContinuationPolicy::for_horizon(horizon);
    let window = match raw.real_or_auto("continuation", "window")? {
        None => WindowLength::Auto,
        Some(h) => WindowLength::Fixed(h),
    };
    let max_windows = raw.count("continuation", "max_windows")?.unwrap_or(policy.max_windows);
    let blow_up_threshold = raw
        .real("continuation", "blow_up_threshold")?
        .unwrap_or(ContinuationPolicy::DEFAULT_THRESHOLD);
    let output = raw.get("run", "output").map(|e| PathBuf::from(&e.value));

    let problem = Problem {
        alpha,
        beta,
        x0,
        rhs,
        delta,
        intervals,
        grading,
        method,
        rule,
        tol,
        max_iter,
        damping,
        window,
        max_windows,
        blow_up_threshold,
        horizon,
        output,
    };
    problem.ivp().map_err(|e| locate(&raw, e))?;
    problem.config().validate().map_err(|e| locate(&raw, e))?;
    problem.policy().validate().map_err(|e| locate(&raw, e))?;
    Ok(problem)
}

impl Problem {
    pub fn gamma(&self) -> f64 {
        self.alpha + self.beta - self.alpha * self.beta
    }

    pub fn ivp(&self) -> Result<IvpSpec, HilferError> {
        self.ivp_with_beta(self.beta)
    }

    /// Same problem with the type parameter β replaced.
    pub fn ivp_with_beta(&self, beta: f64) -> Result<IvpSpec, HilferError> {
        let order = make_order(self.alpha, beta)?;
        let (x0, delta, horizon) = (self.x0, self.delta, self.horizon);
        let spec = match self.rhs {
            RhsKind::Zero => IvpSpec::new(order, x0, |_t: f64, _x: f64| 0.0, delta, horizon)?
                .with_lipschitz(Lipschitz::Constant(0.0))
                .with_envelope(GrowthEnvelope::new(|_| 0.0, |r| r, |_| 0.0)),
            RhsKind::Linear { lambda } => IvpSpec::new(order, x0, move |_t: f64, x: f64| lambda * x, delta, horizon)?
                .with_lipschitz(Lipschitz::Constant(lambda.abs()))
                .with_envelope(GrowthEnvelope::new(move |_| lambda.abs(), |r| r, |_| 0.0)),
            RhsKind::PowerForcing { c, p } => {
                IvpSpec::new(order, x0, move |t: f64, _x: f64| c * t.powf(p), delta, horizon)?
                    .with_lipschitz(Lipschitz::Constant(0.0))
                    .with_envelope(GrowthEnvelope::new(|_| 0.0, |r| r, move |t| c.abs() * t.powf(p)))
            }
            RhsKind::PowerNonlinear { q, sign } => {
                let f = Arc::new(move |_t: f64, x: f64| sign * signed_power(x, q));
                IvpSpec::from_arc(order, x0, f, delta, horizon)?
                    .with_envelope(GrowthEnvelope::new(|_| 1.0, move |r| r.powf(q), |_| 0.0))
            }
        };
        Ok(spec)
    }

    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            method: self.method,
            rule: self.rule,
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            ..SolverConfig::default()
        }
    }

    pub fn policy(&self) -> ContinuationPolicy {
        let mut p = ContinuationPolicy::for_horizon(self.horizon);
        p.window_length = self.window;
        p.max_windows = self.max_windows;
        p.blow_up_threshold = self.blow_up_threshold;
        p.intervals = self.intervals;
        p.grading = self.grading;
        p
    }

    /// Canonical text form; `parse_problem_str(&p.to_text())` returns `p`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[order]\nalpha = {:?}\nbeta = {:?}\n", self.alpha, self.beta);
        let _ = writeln!(s, "[initial]\nx0 = {:?}\n", self.x0);
        let _ = writeln!(s, "[rhs]\nkind = {}", self.rhs.name());
        match self.rhs {
            RhsKind::Zero => {}
            RhsKind::Linear { lambda } => {
                let _ = writeln!(s, "lambda = {lambda:?}");
            }
            RhsKind::PowerForcing { c, p } => {
                let _ = writeln!(s, "c = {c:?}\np = {p:?}");
            }
            RhsKind::PowerNonlinear { q, sign } => {
                let _ = writeln!(s, "q = {q:?}\nsign = {sign:?}");
            }
        }
        let _ = writeln!(s, "delta = {:?}\n", self.delta);
        let r = self.grading.map_or("auto".to_string(), |r| format!("{r:?}"));
        let _ = writeln!(s, "[grid]\nN = {}\nr = {r}\n", self.intervals);
        let method = match self.method {
            Method::Picard => "picard",
            Method::ImplicitStep => "implicit_step",
        };
        let rule = match self.rule {
            Rule::Trapezoid => "trapezoid",
            Rule::Rectangle => "rectangle",
        };
        let _ = writeln!(
            s,
            "[solver]\nmethod = {method}\ntol = {:?}\nmax_iter = {}\ndamping = {:?}\nrule = {rule}\n",
            self.tol, self.max_iter, self.damping
        );
        let window = match self.window {
            WindowLength::Auto => "auto".to_string(),
            WindowLength::Fixed(h) => format!("{h:?}"),
        };
        let _ = writeln!(
            s,
            "[continuation]\nwindow = {window}\nmax_windows = {}\nblow_up_threshold = {:?}\n",
            self.max_windows, self.blow_up_threshold
        );
        let _ = writeln!(s, "[run]\nhorizon = {:?}", self.horizon);
        if let Some(out) = &self.output {
            let _ = writeln!(s, "output = {}", out.display());
        }
        s
    }
}

fn signed_power(x: f64, q: f64) -> f64 {
    if q.fract() == 0.0 && q.abs() < i32::MAX as f64 {
        x.powi(q as i32)
    } else {
        x.abs().powf(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[order]\nalpha = 0.5\nbeta = 0.5\n[initial]\nx0 = 1\n[rhs]\nkind = zero\n[run]\nhorizon = 1\n";

    #[test]
    fn minimal_file_gets_defaults() {
        let p = parse_problem_str(MINIMAL).unwrap();
        assert_eq!(p.gamma(), 0.75);
        assert_eq!(p.tol, 1e-10);
        assert_eq!(p.intervals, 1024);
        assert_eq!(p.grading, None);
        assert_eq!(p.method, Method::Picard);
        assert_eq!(p.blow_up_threshold, 1e8);
        assert_eq!(p.window, WindowLength::Auto);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# header\n\n{}", MINIMAL.replace("alpha = 0.5", "alpha = 0.5   # trailing"));
        assert_eq!(parse_problem_str(&text).unwrap().alpha, 0.5);
    }

    #[test]
    fn errors_carry_line_and_key() {
        let bad = MINIMAL.replace("beta = 0.5", "beta = 1.5");
        match parse_problem_str(&bad) {
            Err(CliError::Parse { line, key, .. }) => assert_eq!((line, key.as_str()), (3, "beta")),
            other => panic!("{other:?}"),
        }
        let unknown = MINIMAL.replace("x0 = 1", "x0 = 1\ny0 = 2");
        match parse_problem_str(&unknown) {
            Err(CliError::Parse { line, key, .. }) => assert_eq!((line, key.as_str()), (6, "y0")),
            other => panic!("{other:?}"),
        }
        let incomplete = MINIMAL.replace("kind = zero", "kind = linear");
        match parse_problem_str(&incomplete) {
            Err(CliError::Parse { key, .. }) => assert_eq!(key, "lambda"),
            other => panic!("{other:?}"),
        }
        let stray = MINIMAL.replace("kind = zero", "kind = zero\nlambda = 1");
        assert!(matches!(parse_problem_str(&stray), Err(CliError::Parse { .. })));
    }

    #[test]
    fn full_precision_numbers() {
        let text = MINIMAL.replace("x0 = 1", "x0 = 0.1000000000000000055511151231257827");
        assert_eq!(parse_problem_str(&text).unwrap().x0, 0.1);
    }

    #[test]
    fn forcing_delta_defaults_to_the_singularity() {
        let text = MINIMAL.replace("kind = zero", "kind = power_forcing\nc = 1\np = -0.25");
        assert_eq!(parse_problem_str(&text).unwrap().delta, 0.25);
    }

    #[test]
    fn odd_powers_keep_the_sign() {
        assert_eq!(signed_power(-2.0, 3.0), -8.0);
        assert_eq!(signed_power(-2.0, 2.0), 4.0);
    }
}
