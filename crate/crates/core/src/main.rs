use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anistable::config::ModelConfig;
use anistable::density::{density_derivative_point, density_grid, GridSpec};
use anistable::harmonic::{green_function, harmonic_eval, poisson_kernel, BoundaryData, PoissonQuad};
use anistable::potential::{log_window, potential, potential_derivative};
use anistable::reports::{run_experiment, Suite};
use anistable::simulate::{simulate_exits, Domain, SimMode, SimScheme};
use anistable::symbol::char_exponent;
use anistable::{Error, ModelParams, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "anistable", version, about = "Anisotropic symmetric alpha-stable semigroups")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// JSON model document.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in model: isotropic-cauchy, product-cauchy, isotropic:ALPHA, axes:ALPHA:W.
    #[arg(long)]
    preset: Option<String>,
}

impl ModelArgs {
    fn build(&self) -> Result<ModelParams> {
        match (&self.config, &self.preset) {
            (Some(p), _) => ModelConfig::load(p)?.build(),
            (None, Some(name)) => ModelConfig::preset(name)?.build(),
            (None, None) => Err(Error::Config("need --config or --preset".into())),
        }
    }
}

#[derive(Args, Clone)]
struct McArgs {
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Simulation mode (atomic-exact or jump-split); defaults by model type.
    #[arg(long)]
    mode: Option<String>,
    /// Small-jump cutoff for jump-split mode.
    #[arg(long)]
    eps: Option<f64>,
}

impl McArgs {
    fn scheme(&self, m: &ModelParams) -> Result<SimScheme> {
        let mut s = SimScheme::for_model(m, self.seed);
        if let Some(mode) = &self.mode {
            s.mode = match mode.as_str() {
                "atomic-exact" => SimMode::AtomicExact,
                "jump-split" => SimMode::JumpSplit,
                _ => return Err(Error::InvalidParameter(format!("unknown mode {mode:?}"))),
            };
        }
        if let Some(e) = self.eps {
            s.eps = e;
        }
        s.validate(m)?;
        Ok(s)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Characteristic exponent Φ(u).
    Symbol {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        u: String,
    },
    /// Smoothness indices of the model as JSON.
    Indices {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Transition density on a grid (CSV) or at a point.
    Density {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Grid as L=EXTENT,N=POINTS.
        #[arg(long, default_value = "L=64,N=1024")]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        point: Option<String>,
        /// Multi-index of the derivative, e.g. 1,0.
        #[arg(long)]
        beta: Option<String>,
    },
    /// Potential kernel V(x) or D^β V(x).
    Potential {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        x: String,
        #[arg(long)]
        beta: Option<String>,
    },
    /// V along a ray, CSV r,V.
    PotentialProfile {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        dir: String,
        /// Radii as LO:HI:N, log spaced.
        #[arg(long, default_value = "0.5:50:32")]
        r: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// First exits from a ball or annulus, CSV tau,exit coords,overshoot,steps.
    Exit {
        #[command(flatten)]
        model: ModelArgs,
        /// ball:C1,C2,..:R or annulus:R_IN:R_OUT.
        #[arg(long, default_value = "ball:0,0:1")]
        domain: String,
        #[arg(long)]
        x0: String,
        #[command(flatten)]
        mc: McArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Green function of the unit ball.
    Green {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        x: String,
        #[arg(long)]
        v: String,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Poisson kernel of the unit ball.
    Poisson {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        x: String,
        #[arg(long)]
        z: String,
        #[command(flatten)]
        mc: McArgs,
        /// Gauss-Legendre order of the Ikeda-Watanabe rule.
        #[arg(long, default_value_t = 8)]
        order: usize,
    },
    /// Harmonic extension of boundary data into the unit ball.
    Harmonic {
        #[command(flatten)]
        model: ModelArgs,
        /// halfplane:AXIS[:T] (indicator of z[AXIS] > T, axis 0-based) or const:C.
        #[arg(long)]
        data: String,
        #[arg(long)]
        x: String,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Run the verification suite; exit code 0 iff all checks pass.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "fast")]
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad number {t:?} in {s:?}"))))
        .collect()
}

fn ints(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::InvalidParameter(format!("bad index {t:?} in {s:?}"))))
        .collect()
}

fn point(s: &str, d: usize) -> Result<Vec<f64>> {
    let v = floats(s)?;
    if v.len() != d {
        return Err(Error::InvalidParameter(format!("expected {d} coordinates, got {}", v.len())));
    }
    Ok(v)
}

fn parse_grid(s: &str, t: f64) -> Result<GridSpec> {
    let (mut l, mut n) = (None, None);
    for part in s.split(',') {
        match part.split_once('=') {
            Some(("L", v)) => l = v.parse::<f64>().ok(),
            Some(("N", v)) => n = v.parse::<usize>().ok(),
            _ => return Err(Error::InvalidParameter(format!("bad grid spec {s:?}"))),
        }
    }
    match (l, n) {
        (Some(l), Some(n)) => Ok(GridSpec::new(l, n, t)),
        _ => Err(Error::InvalidParameter(format!("grid needs L=..,N=.., got {s:?}"))),
    }
}

fn parse_domain(s: &str) -> Result<Domain> {
    let bad = || Error::InvalidParameter(format!("bad domain {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        ["ball", c, r] => Ok(Domain::ball(&floats(c)?, num(r)?)),
        ["annulus", a, b] => Ok(Domain::Annulus { inner: num(a)?, outer: num(b)? }),
        _ => Err(bad()),
    }
}

fn parse_data(s: &str) -> Result<BoundaryData> {
    let bad = || Error::InvalidParameter(format!("bad boundary data {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["halfplane", a] => Ok(BoundaryData::HalfSpace { axis: a.parse().map_err(|_| bad())?, threshold: 0.0 }),
        ["halfplane", a, t] => {
            Ok(BoundaryData::HalfSpace { axis: a.parse().map_err(|_| bad())?, threshold: t.parse().map_err(|_| bad())? })
        }
        ["const", c] => Ok(BoundaryData::Constant(c.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

fn writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

#[derive(Serialize)]
struct McOut {
    estimate: f64,
    stderr: f64,
    n: usize,
    seed: u64,
}

fn emit_mc(estimate: f64, stderr: f64, n: usize, seed: u64) -> Result<()> {
    println!("{}", serde_json::to_string(&McOut { estimate, stderr, n, seed }).map_err(|e| Error::Io(e.to_string()))?);
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Symbol { model, u } => {
            let m = model.build()?;
            println!("{}", char_exponent(&m, &point(&u, m.d())?));
        }
        Cmd::Indices { model } => {
            let m = model.build()?;
            println!("{}", serde_json::to_string_pretty(m.indices()).map_err(|e| Error::Io(e.to_string()))?);
        }
        Cmd::Density { model, t, grid, out, point: at, beta } => {
            let m = model.build()?;
            let beta = match beta {
                Some(b) => ints(&b)?,
                None => vec![0; m.d()],
            };
            match at {
                Some(x) => println!("{}", density_derivative_point(&m, t, &point(&x, m.d())?, &beta)?),
                None => {
                    let g = parse_grid(&grid, t)?;
                    let f = density_grid(&m, &g, &beta)?;
                    let path = out.ok_or_else(|| Error::InvalidParameter("grid output needs --out".into()))?;
                    f.write_csv(&path, false)?;
                }
            }
        }
        Cmd::Potential { model, x, beta } => {
            let m = model.build()?;
            let x = point(&x, m.d())?;
            match beta {
                Some(b) => {
                    let v = potential_derivative(&m, &x, &ints(&b)?)?;
                    if v.out_of_theorem {
                        eprintln!("warning: derivative order beyond the proven smoothness range");
                    }
                    println!("{}", v.value);
                }
                None => println!("{}", potential(&m, &x)?),
            }
        }
        Cmd::PotentialProfile { model, dir, r, out } => {
            let m = model.build()?;
            let dir = point(&dir, m.d())?;
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let p: Vec<&str> = r.split(':').collect();
            let bad = || Error::InvalidParameter(format!("bad radii {r:?}"));
            let [lo, hi, n] = p.as_slice() else { return Err(bad()) };
            let radii = log_window(lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?);
            let mut w = writer(&out)?;
            writeln!(w, "r,V")?;
            for r in radii {
                let x: Vec<f64> = dir.iter().map(|v| r * v / norm).collect();
                writeln!(w, "{r:.12e},{:.12e}", potential(&m, &x)?)?;
            }
        }
        Cmd::Exit { model, domain, x0, mc, out } => {
            let m = model.build()?;
            let s = mc.scheme(&m)?;
            let dom = parse_domain(&domain)?;
            let ex = simulate_exits(&m, &s, &dom, &point(&x0, m.d())?, mc.n)?;
            let mut w = writer(&out)?;
            let coords: Vec<String> = (1..=m.d()).map(|k| format!("x{k}")).collect();
            writeln!(w, "tau,{},overshoot,steps", coords.join(","))?;
            let mut flagged = 0;
            for e in &ex {
                let xs: Vec<String> = e.x_exit.iter().map(|v| format!("{v:.12e}")).collect();
                writeln!(w, "{:.12e},{},{:.12e},{}", e.tau, xs.join(","), e.overshoot, e.n_steps)?;
                flagged += e.truncation_bias_flag as usize;
            }
            if flagged > 0 {
                eprintln!("warning: {flagged} paths exceeded the small-jump bias budget");
            }
        }
        Cmd::Green { model, x, v, mc } => {
            let m = model.build()?;
            let g = green_function(&m, &mc.scheme(&m)?, &point(&x, m.d())?, &point(&v, m.d())?, mc.n)?;
            if g.near_diagonal {
                eprintln!("warning: x and v are close; the estimate has high variance");
            }
            emit_mc(g.estimate, g.stderr, g.n, mc.seed)?;
        }
        Cmd::Poisson { model, x, z, mc, order } => {
            let m = model.build()?;
            let q = PoissonQuad { order, n: mc.n };
            let e = poisson_kernel(&m, &mc.scheme(&m)?, &point(&x, m.d())?, &point(&z, m.d())?, &q)?;
            emit_mc(e.estimate, e.stderr, e.n, mc.seed)?;
        }
        Cmd::Harmonic { model, data, x, mc } => {
            let m = model.build()?;
            let e = harmonic_eval(&m, &mc.scheme(&m)?, &parse_data(&data)?, &point(&x, m.d())?, mc.n)?;
            emit_mc(e.estimate, e.stderr, e.n, mc.seed)?;
        }
        Cmd::Verify { config, suite, seed, out } => {
            let suite: Suite = suite.parse()?;
            let r = run_experiment(&config, suite, seed, out.as_deref())?;
            for c in &r.checks {
                let status = if c.pass { "PASS" } else { "FAIL" };
                match &c.error {
                    Some(e) => println!("{status} {:<32} error: {e}", c.name),
                    None => println!(
                        "{status} {:<32} predicted {:.6e} measured {:.6e} tol {:.3e} ({:.1}s)",
                        c.name, c.predicted, c.measured, c.tolerance, c.runtime_s
                    ),
                }
            }
            println!("{}/{} checks passed", r.passed(), r.checks.len());
            return Ok(r.all_pass());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
