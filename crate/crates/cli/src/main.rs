use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sip_effmass::Family;
use sip_effmass_cli::config::{Format, GridConfig, OutputKind, RunConfig, WaveChoice};
use sip_effmass_cli::run::execute;
use sip_effmass_cli::sweep::{sweep, workers_from_env};
use sip_effmass_cli::CliError;

/// Shape-invariant potentials with position-dependent effective mass.
///
/// Units: hbar = 1, e^2 = 1. Exit codes: 0 success, 2 configuration error,
/// 3 numerical error; errors are also printed to stderr as a JSON record.
#[derive(Parser, Debug)]
#[command(name = "sip-effmass", version, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Levels from the partial sums and from the closed form.
    Spectrum(Common),
    /// W, V1, V2 and their effective forms on the grid.
    Potential(Common),
    /// Normalized ground state and its annihilation residual.
    Groundstate(Common),
    /// Finite-difference eigenvalues against the algebraic gaps.
    Verify(Common),
    /// Shape-invariance residual on pole-free points.
    Shapecheck(Common),
    /// Every output listed under `outputs` in the config.
    Run(Common),
    /// Cartesian sweep; one artifact directory per point plus manifest.json.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Axis as KEY=V1,V2,...; repeatable.
        #[arg(long = "vary", value_name = "KEY=VALUES")]
        vary: Vec<String>,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    sigma0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rho0: Option<f64>,
    /// Coulomb charge.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<f64>,
    /// Coulomb angular momentum.
    #[arg(long)]
    l: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    e2: Option<f64>,
    /// Registry profile: constant, exp_mass, asinh_mu, arctan_mu.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    m0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Mass table (CSV with columns x,m) for the tabulated profile.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    x_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_hi: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Number of levels.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Waive q != 0 (constrained reductions).
    #[arg(long)]
    formal: bool,
    /// Richardson tolerance for verify.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_parser = ["auto", "closed", "generic"])]
    wavefunction: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_path(p)?,
            None => RunConfig::default(),
        };
        if let Some(f) = &self.family {
            cfg.family.tag = Some(f.parse::<Family>().map_err(|e| CliError::config(e.to_string()))?);
        }
        let fam = [
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("lambda0", self.lambda0),
            ("sigma0", self.sigma0),
            ("rho0", self.rho0),
            ("z", self.z),
            ("e2", self.e2),
        ];
        for (k, v) in fam {
            if let Some(v) = v {
                cfg.family.set(k, v)?;
            }
        }
        if let Some(l) = self.l {
            cfg.family.l = Some(l);
        }
        if let Some(p) = &self.profile {
            if cfg.profile.name.as_deref() != Some(p.as_str()) {
                cfg.profile.params.clear();
                cfg.profile.table = None;
            }
            cfg.profile.name = Some(p.clone());
        }
        for (k, v) in [("m0", self.m0), ("alpha", self.alpha), ("beta", self.beta)] {
            if let Some(v) = v {
                cfg.profile.params.insert(k.into(), v);
            }
        }
        if let Some(t) = &self.table {
            cfg.profile.table = Some(t.clone());
            cfg.profile.name.get_or_insert_with(|| "tabulated".into());
        }
        if self.x_lo.is_some() || self.x_hi.is_some() || self.points.is_some() {
            let base = cfg.grid;
            let x_lo = self.x_lo.or(base.map(|g| g.x_lo));
            let x_hi = self.x_hi.or(base.map(|g| g.x_hi));
            let (Some(x_lo), Some(x_hi)) = (x_lo, x_hi) else {
                return Err(CliError::config("a grid needs both --x-lo and --x-hi"));
            };
            let n_points = self.points.or(base.map(|g| g.n_points)).unwrap_or(4000);
            cfg.grid = Some(GridConfig { x_lo, x_hi, n_points });
        }
        if let Some(n) = self.n {
            cfg.n_levels = n;
        }
        if let Some(d) = &self.out_dir {
            cfg.out_dir = d.clone();
        }
        if let Some(f) = &self.format {
            cfg.format = if f == "json" { Format::Json } else { Format::Csv };
        }
        cfg.formal |= self.formal;
        if let Some(t) = self.tolerance {
            cfg.tolerances.richardson = t;
        }
        if let Some(w) = &self.wavefunction {
            cfg.wavefunction = match w.as_str() {
                "closed" => WaveChoice::Closed,
                "generic" => WaveChoice::Generic,
                _ => WaveChoice::Auto,
            };
        }
        Ok(cfg)
    }
}

fn parse_axis(s: &str) -> Result<(String, Vec<f64>), CliError> {
    let (key, values) = s.split_once('=').ok_or_else(|| CliError::config(format!("--vary expects KEY=V1,V2,..., got `{s}`")))?;
    let values = if values.trim().is_empty() {
        Vec::new()
    } else {
        values
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::config(format!("bad value `{v}` for axis {key}"))))
            .collect::<Result<_, _>>()?
    };
    Ok((key.trim().to_string(), values))
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    let single = |common: &Common, kind: OutputKind| -> Result<(), CliError> {
        let cfg = common.resolve()?;
        for f in execute(&cfg, &[kind], &cfg.out_dir)? {
            println!("{}", cfg.out_dir.join(f).display());
        }
        Ok(())
    };
    match cli.command {
        Command::Spectrum(c) => single(&c, OutputKind::Spectrum),
        Command::Potential(c) => single(&c, OutputKind::Potential),
        Command::Groundstate(c) => single(&c, OutputKind::Groundstate),
        Command::Verify(c) => single(&c, OutputKind::Verify),
        Command::Shapecheck(c) => single(&c, OutputKind::Shapecheck),
        Command::Run(c) => {
            let cfg = c.resolve()?;
            for f in execute(&cfg, &cfg.outputs, &cfg.out_dir)? {
                println!("{}", cfg.out_dir.join(f).display());
            }
            Ok(())
        }
        Command::Sweep { common, vary } => {
            let mut cfg = common.resolve()?;
            for v in &vary {
                let (k, vals) = parse_axis(v)?;
                cfg.sweep.axes.insert(k, vals);
            }
            let manifest = sweep(&cfg, &cfg.out_dir, workers_from_env()?)?;
            println!("{}", cfg.out_dir.join("manifest.json").display());
            if manifest.failed() > 0 {
                eprintln!("{} of {} sweep points failed; see manifest.json", manifest.failed(), manifest.points.len());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
