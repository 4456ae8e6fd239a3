use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dclab_core::expr::{parse_expression, Expr, Var, Vars};
use dclab_core::{DcError, PeriodicFunction, Result, C64};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "dclab", version, about = "Spectra, kernels and solution operators for L = λ∂t − ir∂r")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Spectral values σ with their characters on a window of indices.
    Spectrum,
    /// Basic solutions and their adjoint partners.
    Basic,
    /// Kernels Ω₁, Ω₂ along a circle.
    Kernel,
    /// Laurent coefficients and the Cauchy formula for a synthesized solution of ℒu = 0.
    SolveHomogeneous,
    /// The operator T on a manufactured or given right-hand side.
    #[command(name = "solve-T")]
    #[serde(rename = "solve-T")]
    SolveT,
    /// Picard iteration for ℒu = r^τ|u|G(u, r, t).
    Semilinear,
    /// The second-order operator P built from λ and β.
    SecondOrder,
    /// Invariant μ and first-order form of a planar operator.
    Normalize,
    /// The identity suites on the configured operator.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Basic => "basic",
            Command::Kernel => "kernel",
            Command::SolveHomogeneous => "solve-homogeneous",
            Command::SolveT => "solve-T",
            Command::Semilinear => "semilinear",
            Command::SecondOrder => "second-order",
            Command::Normalize => "normalize",
            Command::Verify => "verify",
        }
    }
}

/// Command-line overrides; every field mirrors a key of the config file.
#[derive(Args, Debug, Default)]
pub struct Flags {
    /// JSON file with any of the keys below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, global = true)]
    pub nu: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    /// Coefficient c(t): an expression in t, `fourier:k,re,im;...`, or `@FILE`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c: Option<String>,
    /// β(t) of the second-order operator, same forms as --c.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Truncation order.
    #[arg(long = "J", global = true)]
    pub j: Option<i64>,
    /// Angular nodes.
    #[arg(long = "M", global = true)]
    pub m: Option<usize>,
    /// Radial nodes.
    #[arg(long = "P", global = true)]
    pub p: Option<usize>,
    /// Outer radius.
    #[arg(long = "R", global = true)]
    pub r: Option<f64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub j_min: Option<i64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub j_max: Option<i64>,
    /// Source circle radius for `kernel`.
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Right-hand side F(r, t) for `solve-T`; a manufactured one when absent.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub f: Option<String>,
    /// Angular factor g(r, t) of G = strength·g/(1 + |u|²) for `semilinear`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub g: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub strength: Option<f64>,
    /// Index of the basic solution used as u₀ in `semilinear`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub j0: Option<i64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a11: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a12: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a22: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a1: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a2: Option<String>,
    #[arg(long, global = true)]
    pub rho0: Option<f64>,
    #[arg(long, global = true)]
    pub terms: Option<usize>,
}

/// A fully resolved job. Written back as `config.json`, it reproduces the run.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    pub command: Option<Command>,
    pub a: f64,
    pub b: f64,
    pub nu: f64,
    pub eps: f64,
    pub c: String,
    pub beta: String,
    #[serde(rename = "J")]
    pub j: i64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "P")]
    pub p: usize,
    /// `None` selects the per-command default.
    #[serde(rename = "R")]
    pub r: Option<f64>,
    /// `None` selects the per-command default.
    pub tol: Option<f64>,
    pub threads: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub j_min: Option<i64>,
    pub j_max: Option<i64>,
    pub rho: f64,
    pub theta: f64,
    pub f: Option<String>,
    pub g: String,
    pub strength: f64,
    pub j0: i64,
    pub a11: String,
    pub a12: String,
    pub a22: Option<String>,
    pub a1: String,
    pub a2: String,
    pub rho0: f64,
    pub terms: usize,
}

impl Default for JobConfig {
    fn default() -> Self {
        Self {
            command: None,
            a: 1.0,
            b: 1.0,
            nu: 0.0,
            eps: 1.0,
            c: "i*0.5*exp(i*2*t)".into(),
            beta: "0".into(),
            j: 64,
            m: 128,
            p: 128,
            r: None,
            tol: None,
            threads: 0,
            seed: 0,
            out: PathBuf::from("dclab-out"),
            j_min: None,
            j_max: None,
            rho: 0.5,
            theta: 0.0,
            f: None,
            g: "sin(t) + 0.5*i".into(),
            strength: 1.0,
            j0: 1,
            a11: "x^2+y^2".into(),
            a12: "0".into(),
            a22: None,
            a1: "0".into(),
            a2: "0".into(),
            rho0: 0.1,
            terms: 4,
        }
    }
}

fn invalid(msg: impl Into<String>) -> DcError {
    DcError::InvalidInput(msg.into())
}

impl JobConfig {
    /// Defaults, then the config file, then the flags.
    pub fn resolve(command: Command, flags: &Flags) -> Result<Self> {
        let mut cfg = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
                serde_json::from_str::<JobConfig>(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?
            }
            None => JobConfig::default(),
        };
        if let Some(c) = cfg.command {
            if c != command {
                return Err(invalid(format!("config file is for `{}`, not `{}`", c.name(), command.name())));
            }
        }
        cfg.command = Some(command);
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = &flags.$field { cfg.$field = v.clone(); } )* };
        }
        take!(a, b, nu, eps, c, beta, j, m, p, threads, seed, out, rho, theta, g, strength, j0, a11, a12, a1, a2, rho0, terms);
        macro_rules! take_opt {
            ($($field:ident),*) => { $( if flags.$field.is_some() { cfg.$field = flags.$field.clone(); } )* };
        }
        take_opt!(r, tol, j_min, j_max, f, a22);
        if cfg.r.is_none() {
            cfg.r = Some(if command == Command::Semilinear { 0.2 } else { 1.0 });
        }
        if cfg.tol.is_none() {
            cfg.tol = Some(match command {
                Command::SolveT | Command::SecondOrder => 1e-4,
                Command::Semilinear => 1e-10,
                _ => 1e-8,
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(invalid(format!("a must be positive, got {}", self.a)));
        }
        if !(0.0..1.0).contains(&self.nu) {
            return Err(invalid(format!("nu must lie in [0, 1), got {}", self.nu)));
        }
        if self.j < 1 {
            return Err(invalid(format!("J must be at least 1, got {}", self.j)));
        }
        if self.m < 8 || self.p < 9 {
            return Err(invalid(format!("need M ≥ 8 and P ≥ 9, got M = {}, P = {}", self.m, self.p)));
        }
        if !(self.radius() > 0.0) || !(self.tolerance() > 0.0) {
            return Err(invalid("R and tol must be positive"));
        }
        if let (Some(lo), Some(hi)) = (self.j_min, self.j_max) {
            if lo > hi {
                return Err(invalid(format!("empty window [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn radius(&self) -> f64 {
        self.r.unwrap_or(1.0)
    }

    pub fn tolerance(&self) -> f64 {
        self.tol.unwrap_or(1e-8)
    }

    pub fn window(&self) -> (i64, i64) {
        (self.j_min.unwrap_or(-self.j), self.j_max.unwrap_or(self.j))
    }

    pub fn lambda(&self) -> C64 {
        C64::new(self.a, self.b * self.eps)
    }

    /// Odd sample count for periodic coefficients.
    pub fn periodic_grid(&self) -> usize {
        self.m | 1
    }
}

/// A coefficient of `t` alone: an expression, `fourier:k,re,im;...`, or `@FILE` holding either.
pub fn periodic_source(name: &str, src: &str, m: usize, base: &Path) -> Result<PeriodicFunction> {
    let src = src.trim();
    if let Some(path) = src.strip_prefix('@') {
        let path = base.join(path);
        let text = std::fs::read_to_string(&path).map_err(|e| invalid(format!("{name}: {}: {e}", path.display())))?;
        return periodic_source(name, &text, m, base);
    }
    if let Some(list) = src.strip_prefix("fourier:") {
        let mut modes = Vec::new();
        for item in list.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let parts: Vec<&str> = item.split(',').map(str::trim).collect();
            let bad = || invalid(format!("{name}: expected `k,re,im`, got `{item}`"));
            if parts.len() != 3 {
                return Err(bad());
            }
            let k: i64 = parts[0].parse().map_err(|_| bad())?;
            let re: f64 = parts[1].parse().map_err(|_| bad())?;
            let im: f64 = parts[2].parse().map_err(|_| bad())?;
            modes.push((k, C64::new(re, im)));
        }
        let band = modes.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        return PeriodicFunction::from_modes(m.max(2 * band + 1) | 1, &modes);
    }
    let e = parse_in(name, src, &[Var::T, Var::Theta])?;
    PeriodicFunction::from_fn(m, |t| e.eval(&Vars::cylinder(1.0, t)))
}

/// Parses `src`, allowing only the listed variables.
pub fn parse_in(name: &str, src: &str, allowed: &[Var]) -> Result<Expr> {
    let e = parse_expression(src).map_err(|err| err.context(name))?;
    if let Some(v) = Var::ALL.iter().find(|v| !allowed.contains(v) && e.uses(**v)) {
        let names: Vec<&str> = allowed.iter().map(|v| v.name()).collect();
        return Err(invalid(format!("{name}: variable '{}' is not allowed here (use {})", v.name(), names.join(", "))));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dclab_core::I;

    #[test]
    fn coefficient_sources_agree() {
        let base = Path::new(".");
        let expr = periodic_source("c", "i*0.5*exp(i*2*t)", 9, base).unwrap();
        let list = periodic_source("c", "fourier: 2, 0, 0.5", 9, base).unwrap();
        for k in 0..20 {
            let t = 0.37 * k as f64;
            let want = I * 0.5 * C64::from_polar(1.0, 2.0 * t);
            assert!((expr.eval(t) - want).norm() < 1e-14);
            assert!((list.eval(t) - want).norm() < 1e-14);
        }
        let dir = std::env::temp_dir().join(format!("dclab-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("c.txt"), "fourier: 2, 0, 0.5\n").unwrap();
        let file = periodic_source("c", "@c.txt", 9, &dir).unwrap();
        assert!((file.eval(1.0) - list.eval(1.0)).norm() < 1e-15);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn normalizer_coefficients_parse() {
        let e = parse_in("a12", "3*x*y", &Var::ALL).unwrap();
        assert_eq!(e.eval(&Vars::plane(0.5, -2.0)), C64::new(-3.0, 0.0));
        let lap = parse_in("a11", "x^2+y^2", &Var::ALL).unwrap();
        assert_eq!(lap.eval(&Vars::plane(1.0, 2.0)), C64::new(5.0, 0.0));
    }

    #[test]
    fn bad_sources_are_invalid_input() {
        let base = Path::new(".");
        for src in ["fourier: 1, 2", "fourier: a, 0, 0", "x + t", "sin(t", "@missing-file"] {
            assert!(matches!(periodic_source("c", src, 9, base), Err(DcError::InvalidInput(_))), "{src}");
        }
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = std::env::temp_dir().join(format!("dclab-flags-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("job.json");
        std::fs::write(&path, r#"{"a": 2.0, "J": 8, "command": "spectrum"}"#).unwrap();
        let flags = Flags { config: Some(path.clone()), j: Some(4), ..Flags::default() };
        let cfg = JobConfig::resolve(Command::Spectrum, &flags).unwrap();
        assert_eq!((cfg.a, cfg.j, cfg.tolerance(), cfg.radius()), (2.0, 4, 1e-8, 1.0));
        assert!(JobConfig::resolve(Command::Basic, &flags).is_err());
        std::fs::write(&path, r#"{"unknown": 1}"#).unwrap();
        assert!(JobConfig::resolve(Command::Spectrum, &flags).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
