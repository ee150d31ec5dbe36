use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use k3stab::boundary::{cloud_csv, pi_param, SquareCoord};
use k3stab::chart::{central_charge, phase_of_stable};
use k3stab::mass::{invert_cell_detailed, mass_abc, mass_vector, triangle_check, DEFAULT_WINDOW};
use k3stab::tiling::{render_phase_cloud, render_tiling, RenderMode, RenderSpec};
use k3stab::verify::{run_suite, Suite, VerifyConfig};
use k3stab::{canonicalize, phase_cloud, ChartPoint, Error, Exec, InvertCell, ObjectAtom, Region, Window};

#[derive(Parser)]
#[command(
    name = "k3stab",
    version,
    about = "Mass embeddings of the stability manifold of a generic analytic K3 surface"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Region, canonical form, central charges, phases and triangle coordinates of a chart.
    Chart {
        /// Chart parameter as "re,im".
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        z: Complex64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        twist: i64,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
    },
    /// Mass sequence of T^twist σ_z on a window.
    Mass {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        z: Complex64,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        twist: i64,
        /// Index window "lo:hi".
        #[arg(long, allow_hyphen_values = true, value_parser = parse_window)]
        window: Option<Window>,
    },
    /// Recover a chart parameter from triangle coordinates.
    Invert {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        c: f64,
        #[arg(long, value_enum)]
        cell: CellArg,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
    },
    /// Write the ideal-triangle tiling as SVG.
    Tiling {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long)]
        depth: u32,
        #[arg(long, default_value_t = 600)]
        size: u32,
        /// Straight chords instead of geodesic arcs.
        #[arg(long)]
        chords: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the boundary parametrization at (u, [v:w]).
    Boundary {
        /// Strip coordinate; accepts inf and -inf.
        #[arg(long, allow_hyphen_values = true)]
        u: f64,
        /// Ray "v:w".
        #[arg(long, value_parser = parse_ray)]
        ray: (f64, f64),
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_window)]
        window: Option<Window>,
    },
    /// Phases of the semistable classes of the red-point lax stability condition, as CSV.
    Phases {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        z: Complex64,
        #[arg(long)]
        rmax: u32,
        #[arg(long)]
        nmax: u32,
        #[arg(long)]
        out: PathBuf,
        /// Also write a scatter plot.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
    /// Run the seeded property suites and print a JSON summary.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, env = "K3STAB_SEED", default_value_t = 0)]
        seed: u64,
        /// Evaluate samples on a single thread.
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CellArg {
    Delta0,
    #[value(name = "delta-1")]
    DeltaMinus1,
    I0,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Disk,
    Halfplane,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    Hn,
    Mass,
    Roundtrip,
    Boundary,
    Lax,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| format!("expected \"re,im\", got {s:?}"))?;
    let re: f64 = re.trim().parse().map_err(|e| format!("bad real part: {e}"))?;
    let im: f64 = im.trim().parse().map_err(|e| format!("bad imaginary part: {e}"))?;
    Ok(Complex64::new(re, im))
}

fn parse_window(s: &str) -> Result<Window, String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected \"lo:hi\", got {s:?}"))?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    Window::new(lo, hi).map_err(|e| e.to_string())
}

fn parse_ray(s: &str) -> Result<(f64, f64), String> {
    let (v, w) = s
        .split_once(':')
        .ok_or_else(|| format!("expected \"v:w\", got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("bad v: {e}"))?;
    let w: f64 = w.trim().parse().map_err(|e| format!("bad w: {e}"))?;
    Ok((v, w))
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// Exit status for library errors: 3 for violated mathematical preconditions,
/// 2 for everything the caller could have fixed in the arguments.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::TriangleViolation { .. } | Error::NoConvergence { .. } | Error::PhaseOrderViolation { .. } => 3,
        _ => 2,
    }
}

enum Failure {
    Lib(Error),
    Io(String),
    Properties,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn print_json(v: &Value) {
    let text = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    // a closed pipe downstream is not an error worth reporting
    let _ = writeln!(io::stdout().lock(), "{text}");
}

fn chart_report(z: Complex64, twist: i64, q: f64) -> Result<Value, Error> {
    let input = ChartPoint::new(z)?;
    let canon = canonicalize(twist, z)?;
    let chart = canon.chart;
    let atoms: Vec<ObjectAtom> = match chart.region() {
        Region::WZero => vec![
            ObjectAtom::sky(0),
            ObjectAtom::sky(1),
            ObjectAtom::sky(-1),
            ObjectAtom::structure(0),
        ],
        _ => vec![ObjectAtom::sky(0), ObjectAtom::sky(1), ObjectAtom::structure(0)],
    };
    let mut charges = serde_json::Map::new();
    let mut phases = serde_json::Map::new();
    for atom in atoms {
        charges.insert(atom.to_string(), complex_json(central_charge(&chart, atom.class())));
        phases.insert(atom.to_string(), json!(phase_of_stable(&chart, atom)?));
    }
    let (a, b, c) = mass_abc(&chart, q)?;
    let status = triangle_check(a, b, c, q);
    Ok(json!({
        "input": {"twist": twist, "z": complex_json(z), "region": input.region().to_string()},
        "region": input.region().to_string(),
        "canonical": {"twist": canon.twist, "z": complex_json(chart.z()), "region": chart.region().to_string()},
        "central_charges": charges,
        "phases": phases,
        "q": q,
        "abc": [a, b, c],
        "triangle": status.to_string(),
        "wall": chart.region() == Region::WZero,
    }))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Chart { z, twist, q } => print_json(&chart_report(z, twist, q)?),
        Command::Mass { z, q, twist, window } => {
            let p = k3stab::StabilityPoint::new(twist, ChartPoint::new(z)?);
            let f = mass_vector(&p, q, window.unwrap_or(DEFAULT_WINDOW))?;
            print_json(&serde_json::to_value(&f).expect("mass functions serialize"));
        }
        Command::Invert { a, b, c, cell, q } => {
            let cell = match cell {
                CellArg::Delta0 => InvertCell::Delta0,
                CellArg::DeltaMinus1 => InvertCell::DeltaMinus1,
                CellArg::I0 => InvertCell::I0,
            };
            let inv = invert_cell_detailed(a, b, c, cell, q)?;
            print_json(&json!({
                "cell": cell.to_string(),
                "q": q,
                "z": complex_json(inv.chart.z()),
                "region": inv.chart.region().to_string(),
                "residual": inv.residual,
                "iterations": inv.iterations,
            }));
        }
        Command::Tiling {
            mode,
            q,
            depth,
            size,
            chords,
            out,
        } => {
            let mode = match mode {
                ModeArg::Disk => RenderMode::DiskTiling,
                ModeArg::Halfplane => RenderMode::HalfPlaneTiling,
            };
            let svg = render_tiling(&RenderSpec {
                mode,
                q,
                depth,
                size,
                chords,
            })?;
            write_file(&out, &svg)?;
        }
        Command::Boundary { u, ray, q, window } => {
            let s = SquareCoord::new(u, ray.0, ray.1, q)?;
            let f = pi_param(&s, window.unwrap_or(DEFAULT_WINDOW))?;
            print_json(&serde_json::to_value(&f).expect("mass functions serialize"));
        }
        Command::Phases {
            z,
            rmax,
            nmax,
            out,
            svg,
            sequential,
        } => {
            let chart = ChartPoint::new(z)?;
            let exec = if sequential { Exec::Sequential } else { Exec::Parallel };
            let cloud = phase_cloud(&chart, rmax, nmax, exec)?;
            write_file(&out, &cloud_csv(&cloud))?;
            if let Some(path) = svg {
                write_file(&path, &render_phase_cloud(&cloud, 600))?;
            }
        }
        Command::Verify {
            suite,
            samples,
            seed,
            sequential,
        } => {
            let suite = match suite {
                SuiteArg::All => Suite::All,
                SuiteArg::Hn => Suite::Hn,
                SuiteArg::Mass => Suite::Mass,
                SuiteArg::Roundtrip => Suite::Roundtrip,
                SuiteArg::Boundary => Suite::Boundary,
                SuiteArg::Lax => Suite::Lax,
            };
            let exec = if sequential { Exec::Sequential } else { Exec::Parallel };
            let report = run_suite(suite, &VerifyConfig { samples, seed, exec });
            print_json(&serde_json::to_value(&report).expect("reports serialize"));
            if !report.passed {
                return Err(Failure::Properties);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Properties) => ExitCode::from(1),
    }
}
