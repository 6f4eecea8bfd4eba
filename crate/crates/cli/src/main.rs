//! Command-line surface: parse material/network/process documents, run
//! the library operations, emit curves as CSV and verification reports as
//! JSON. Exit codes: 0 success, 1 input error, 2 verification failure.

mod spec;

use std::fmt::Write as _;
use std::io::Write as _;
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use viscolevy::{
    conjugate, estimate_material_from_paths, material_from_characteristics,
    material_from_quadratic_forms, matrix_relaxation_numeric, mc_laplace_check, relaxation_rep,
    respond_creep, respond_relaxation, sample_pais_ensemble, sample_path,
    subordinator_from_material, verify_conjugation, LoadHistory, QvMode, TimeGrid,
};

use spec::{read_json, spec_of, FormsFile, LoadFile, MaterialFile, PaisFile};

/// Uniform grid argument `start:step:count`.
#[derive(Debug, Clone, Copy)]
struct GridArg(TimeGrid);

impl FromStr for GridArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:step:count, got '{s}'"));
        }
        let start: f64 = parts[0].parse().map_err(|e| format!("start: {e}"))?;
        let step: f64 = parts[1].parse().map_err(|e| format!("step: {e}"))?;
        let count: usize = parts[2].parse().map_err(|e| format!("count: {e}"))?;
        TimeGrid::new(start, step, count)
            .map(GridArg)
            .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum Mode {
    #[default]
    Creep,
    Relaxation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum QvArg {
    #[default]
    Known,
    Realized,
}

#[derive(Parser)]
#[command(
    name = "viscolevy",
    version,
    about = "Viscoelastic materials as Bernstein functions and Lévy processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the impulse response f(t) on a grid
    Eval {
        #[arg(long)]
        material: String,
        #[arg(long)]
        grid: GridArg,
        #[arg(long)]
        out: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Emit the conjugate material spec (atoms-only or pure stable input)
    Conjugate {
        #[arg(long)]
        material: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Sample the relaxation function r(t) on a grid (start > 0)
    Relax {
        #[arg(long)]
        material: String,
        #[arg(long)]
        grid: GridArg,
        #[arg(long)]
        out: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Series coupling of two or more materials (impulse responses add)
    Series {
        #[arg(long = "material", required = true, num_args = 1)]
        materials: Vec<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Parallel coupling of two or more materials (relaxations add)
    Parallel {
        #[arg(long = "material", required = true, num_args = 1)]
        materials: Vec<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Functional composition outer(inner(t))
    Compose {
        #[arg(long = "material", required = true, num_args = 1)]
        materials: Vec<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Response to a load (creep) or strain (relaxation) history
    Respond {
        #[arg(long)]
        material: String,
        #[arg(long)]
        load: String,
        #[arg(long)]
        grid: GridArg,
        #[arg(long, value_enum, default_value_t)]
        mode: Mode,
        #[arg(long)]
        out: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Compile quadratic thermodynamic forms into impulse-response curves
    Network {
        #[arg(long)]
        forms: String,
        #[arg(long)]
        grid: GridArg,
        #[arg(long)]
        out: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Emit relaxation curves instead of creep curves
        #[arg(long)]
        relaxation: bool,
    },
    /// Sample one subordinator path (CSV: time,value,is_jump)
    Simulate {
        #[arg(long)]
        material: String,
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Monte Carlo check of the Laplace functional e^{-τφ(λ)}
    McCheck {
        #[arg(long)]
        material: String,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Estimate the material of a PAIS from sampled paths and compare
    /// with the closed form
    Estimate {
        #[arg(long)]
        pais: String,
        #[arg(long)]
        grid: GridArg,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = 8)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t)]
        qv: QvArg,
        #[arg(long)]
        out: Option<String>,
    },
    /// Verify f * f* = t²/2 for the material and its conjugate
    Verify {
        #[arg(long)]
        material: String,
        #[arg(long)]
        grid: GridArg,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
        #[arg(long)]
        out: Option<String>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprintln!("{e}");
            std::process::exit(1);
        }
        Err(e) => {
            // Help and version displays.
            print!("{e}");
            std::process::exit(0);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn emit(out: &Option<String>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {path}"))?;
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn curve_csv(times: impl Iterator<Item = f64>, values: &[f64]) -> String {
    let mut text = String::from("t,value\n");
    for (t, v) in times.zip(values) {
        let _ = writeln!(text, "{t},{v}");
    }
    text
}

fn curve_json(op: &str, times: impl Iterator<Item = f64>, values: &[f64]) -> serde_json::Value {
    json!({
        "op": op,
        "curve": times.zip(values).map(|(t, v)| json!({"t": t, "value": v})).collect::<Vec<_>>(),
    })
}

fn load_material(path: &str) -> anyhow::Result<viscolevy::Material> {
    read_json::<MaterialFile>(path)?.to_material()
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Eval { material, grid, out, format } => {
            let m = load_material(&material)?;
            let GridArg(grid) = grid;
            let values: Vec<f64> = grid
                .times()
                .map(|t| m.eval_impulse(t))
                .collect::<viscolevy::Result<_>>()?;
            let text = match format {
                Format::Csv => curve_csv(grid.times(), &values),
                Format::Json => {
                    serde_json::to_string_pretty(&curve_json("eval", grid.times(), &values))? + "\n"
                }
            };
            emit(&out, &text)?;
            Ok(0)
        }
        Command::Conjugate { material, out } => {
            let m = load_material(&material)?;
            let c = conjugate(&m)?;
            let doc = MaterialFile::new(spec_of(&c));
            emit(&out, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
            Ok(0)
        }
        Command::Relax { material, grid, out, format } => {
            let m = load_material(&material)?;
            let GridArg(grid) = grid;
            if grid.start() <= 0.0 {
                bail!("relaxation grid must start after 0 (the δ₀ term is reported separately)");
            }
            let delta = viscolevy::delta_mass(&m)?;
            let values: Vec<f64> = match relaxation_rep(&m) {
                Ok(rep) => grid.times().map(|t| rep.eval(t)).collect(),
                Err(_) => viscolevy::relaxation_curve_numeric(&m, &grid)?,
            };
            let text = match format {
                Format::Csv => {
                    if delta != 0.0 {
                        eprintln!("note: relaxation carries a δ₀ term of mass {delta}");
                    }
                    curve_csv(grid.times(), &values)
                }
                Format::Json => {
                    let mut v = curve_json("relax", grid.times(), &values);
                    v["delta_mass"] = json!(delta);
                    serde_json::to_string_pretty(&v)? + "\n"
                }
            };
            emit(&out, &text)?;
            Ok(0)
        }
        Command::Series { materials, out } => {
            let built = load_all(&materials)?;
            let combined = built
                .into_iter()
                .reduce(|a, b| viscolevy::series(&a, &b))
                .expect("clap enforces at least one");
            emit(
                &out,
                &(serde_json::to_string_pretty(&MaterialFile::new(spec_of(&combined)))? + "\n"),
            )?;
            Ok(0)
        }
        Command::Parallel { materials, out } => {
            let built = load_all(&materials)?;
            let mut iter = built.into_iter();
            let mut acc = iter.next().expect("clap enforces at least one");
            for m in iter {
                acc = viscolevy::parallel(&acc, &m)?;
            }
            emit(
                &out,
                &(serde_json::to_string_pretty(&MaterialFile::new(spec_of(&acc)))? + "\n"),
            )?;
            Ok(0)
        }
        Command::Compose { materials, out } => {
            if materials.len() != 2 {
                bail!("compose takes exactly two --material flags: outer, inner");
            }
            let outer = load_material(&materials[0])?;
            let inner = load_material(&materials[1])?;
            let composed = viscolevy::compose(outer, inner);
            emit(
                &out,
                &(serde_json::to_string_pretty(&MaterialFile::new(spec_of(&composed)))? + "\n"),
            )?;
            Ok(0)
        }
        Command::Respond { material, load, grid, mode, out, format } => {
            let m = load_material(&material)?;
            let history: LoadHistory = read_json::<LoadFile>(&load)?.to_history()?;
            let GridArg(grid) = grid;
            match mode {
                Mode::Creep => {
                    let values = respond_creep(&m, &history, &grid)?;
                    let text = match format {
                        Format::Csv => curve_csv(grid.times(), &values),
                        Format::Json => {
                            serde_json::to_string_pretty(&curve_json("respond", grid.times(), &values))?
                                + "\n"
                        }
                    };
                    emit(&out, &text)?;
                }
                Mode::Relaxation => {
                    let resp = respond_relaxation(&m, &history, &grid)?;
                    let text = match format {
                        Format::Csv => {
                            for (t, mass) in &resp.impulses {
                                eprintln!("note: force impulse of mass {mass} at t = {t}");
                            }
                            curve_csv(grid.times(), &resp.values)
                        }
                        Format::Json => {
                            let mut v = curve_json("respond", grid.times(), &resp.values);
                            v["impulses"] = json!(resp
                                .impulses
                                .iter()
                                .map(|(t, mass)| json!({"t": t, "mass": mass}))
                                .collect::<Vec<_>>());
                            serde_json::to_string_pretty(&v)? + "\n"
                        }
                    };
                    emit(&out, &text)?;
                }
            }
            Ok(0)
        }
        Command::Network { forms, grid, out, format, relaxation } => {
            let pair = read_json::<FormsFile>(&forms)?.to_pair()?;
            let m = material_from_quadratic_forms(&pair)?;
            let GridArg(grid) = grid;
            let dim = m.dim();
            let matrices: Vec<nalgebra::DMatrix<f64>> = if relaxation {
                matrix_relaxation_numeric(&m, &grid)?.values
            } else {
                grid.times().map(|t| m.eval(t)).collect()
            };
            let text = match format {
                Format::Csv => {
                    let mut header = String::from("t");
                    for i in 0..dim {
                        for j in i..dim {
                            let _ = write!(header, ",f_{}{}", i + 1, j + 1);
                        }
                    }
                    let mut text = header + "\n";
                    for (t, mat) in grid.times().zip(&matrices) {
                        let _ = write!(text, "{t}");
                        for i in 0..dim {
                            for j in i..dim {
                                let _ = write!(text, ",{}", mat[(i, j)]);
                            }
                        }
                        text.push('\n');
                    }
                    text
                }
                Format::Json => {
                    let rows = |mat: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
                        (0..dim).map(|i| (0..dim).map(|j| mat[(i, j)]).collect()).collect()
                    };
                    serde_json::to_string_pretty(&json!({
                        "op": if relaxation { "network-relaxation" } else { "network" },
                        "atoms": m.atoms().iter().map(|(rate, j)| json!({
                            "rate": rate, "matrix": rows(j),
                        })).collect::<Vec<_>>(),
                        "drift": rows(m.drift()),
                        "constant": rows(m.constant()),
                        "curve": grid.times().zip(&matrices).map(|(t, mat)| json!({
                            "t": t, "matrix": rows(mat),
                        })).collect::<Vec<_>>(),
                    }))? + "\n"
                }
            };
            emit(&out, &text)?;
            Ok(0)
        }
        Command::Simulate { material, horizon, seed, out } => {
            let m = load_material(&material)?;
            let s = subordinator_from_material(&m)?;
            let path = sample_path(&s, horizon, seed)?;
            let jump_times: std::collections::BTreeSet<u64> =
                path.jumps.iter().map(|(t, _)| t.to_bits()).collect();
            let mut text = String::from("time,value,is_jump\n");
            for (t, v) in path.times.iter().zip(&path.values) {
                let flag = u8::from(jump_times.contains(&t.to_bits()));
                let _ = writeln!(text, "{t},{v},{flag}");
            }
            emit(&out, &text)?;
            Ok(0)
        }
        Command::McCheck { material, lambda, horizon, paths, seed, out } => {
            let m = load_material(&material)?;
            let s = subordinator_from_material(&m)?;
            let r = mc_laplace_check(&s, lambda, horizon, paths, seed)?;
            let pass = r.passes();
            let report = json!({
                "op": "mc-check",
                "estimate": r.estimate,
                "stderr": r.stderr,
                "analytic": r.analytic,
                "residual": (r.estimate - r.analytic).abs(),
                "tolerance": 4.0 * r.stderr,
                "pass": pass,
            });
            emit(&out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
            Ok(if pass { 0 } else { 2 })
        }
        Command::Estimate { pais, grid, paths, steps, seed, qv, out } => {
            let c = read_json::<PaisFile>(&pais)?.to_characteristics()?;
            let GridArg(grid) = grid;
            if grid.start() <= 0.0 {
                bail!("estimate grid must start after 0");
            }
            let t_grid: Vec<f64> = grid.times().collect();
            let ensemble = sample_pais_ensemble(&c, 1.0, steps, paths, seed)?;
            let mode = match qv {
                QvArg::Known => QvMode::Known,
                QvArg::Realized => QvMode::Realized,
            };
            let est = estimate_material_from_paths(&ensemble, &t_grid, mode)?;
            let closed = material_from_characteristics(&c)?;
            let dim = c.dim();
            let mut worst = 0.0_f64;
            let mut pass = true;
            for (k, &t) in t_grid.iter().enumerate() {
                let reference = closed.eval(t);
                for i in 0..dim {
                    for j in 0..dim {
                        let diff = (est.mean[k][(i, j)] - reference[(i, j)]).abs();
                        let se = est.stderr[k][(i, j)];
                        if se == 0.0 {
                            pass &= diff == 0.0;
                        } else {
                            worst = worst.max(diff / se);
                            pass &= diff <= 4.0 * se;
                        }
                    }
                }
            }
            let report = json!({
                "op": "estimate",
                "residual": worst,
                "tolerance": 4.0,
                "pass": pass,
                "paths": paths,
                "grid_points": t_grid.len(),
            });
            emit(&out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
            Ok(if pass { 0 } else { 2 })
        }
        Command::Verify { material, grid, tolerance, out } => {
            let m = load_material(&material)?;
            let c = conjugate(&m)?;
            let GridArg(grid) = grid;
            let residual = verify_conjugation(&m, &c, &grid)?;
            let pass = residual <= tolerance;
            let report = json!({
                "op": "verify",
                "residual": residual,
                "tolerance": tolerance,
                "pass": pass,
            });
            emit(&out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
            Ok(if pass { 0 } else { 2 })
        }
    }
}

fn load_all(paths: &[String]) -> anyhow::Result<Vec<viscolevy::Material>> {
    if paths.len() < 2 {
        bail!("need at least two --material flags");
    }
    paths.iter().map(|p| load_material(p)).collect()
}
