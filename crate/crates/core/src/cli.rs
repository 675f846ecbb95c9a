//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when validation or an audit fails, 2 on
//! usage errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::entropy::{estimate_decay_rate, steady_state, theoretical_rate, RateEstimate};
use crate::experiments::{run, sweep, StopReason};
use crate::io::{
    parse_config, read_series, series_time_step, write_series, write_snapshot, RunConfig,
    SnapshotFormat,
};
use crate::mesh::{build_cartesian, export_mesh, import_mesh, MeshError};
use crate::scheme::{discretize_initial, total_mass};

#[derive(Debug, Parser)]
#[command(name = "fieldroad", version, about = "Field-road diffusion: finite-volume runs and decay rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one test case; writes the entropy series and snapshots.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Measure the decay rate over a grid of `d` or `D` values.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Check a mesh file for admissibility.
    VerifyMesh { mesh: PathBuf },
    /// Re-estimate the decay rate from a saved series CSV.
    Rate {
        series: PathBuf,
        /// Time step; inferred from the series when omitted.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Print the steady state and the theoretical rate bound.
    Steady { config: PathBuf },
    /// Write the cartesian mesh described by a config as a mesh file.
    Mesh {
        config: PathBuf,
        /// Defaults to standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Failure carrying its exit code.
struct Failure(i32, String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(1, e.to_string())
    }
}

pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run { config, output_dir } => cmd_run(&config, output_dir),
        Command::Sweep { config, output_dir } => cmd_sweep(&config, output_dir),
        Command::VerifyMesh { mesh } => cmd_verify_mesh(&mesh),
        Command::Rate { series, dt } => cmd_rate(&series, dt),
        Command::Steady { config } => cmd_steady(&config),
        Command::Mesh { config, output } => cmd_mesh(&config, output),
    };
    match result {
        Ok(()) => 0,
        Err(Failure(code, message)) => {
            eprintln!("error: {message}");
            code
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(1, format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| Failure(1, format!("{}:\n{e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure(1, format!("{}: {e}", dir.display())))
}

pub fn format_rate(rate: &RateEstimate) -> String {
    format!(
        "lambda_num={:?}\nslope={:?}\nfit_residual={:?}\ndiscrete_rate={:?}\n\
         window_start={:?}\nwindow_end={:?}\npoints={}",
        rate.lambda_num,
        rate.slope,
        rate.residual,
        rate.discrete_rate,
        rate.window_start,
        rate.window_end,
        rate.points
    )
}

fn cmd_run(config: &Path, output_dir: Option<PathBuf>) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let dir = output_dir.unwrap_or(cfg.output_dir.clone());
    let result = run(&cfg.spec)?;
    create_dir(&dir)?;
    write_series(&result.series, &dir.join("series.csv"))?;
    let ext = match cfg.snapshot_format {
        SnapshotFormat::VtkLegacy => "vtk",
        SnapshotFormat::Csv => "csv",
    };
    for snap in &result.snapshots {
        let path = dir.join(format!("snapshot_t{}.{ext}", snap.requested_time));
        write_snapshot(&snap.state, &result.mesh, &path, cfg.snapshot_format)?;
    }

    let mut report = String::new();
    let stop = match result.stop {
        StopReason::EntropyRatio => "entropy_ratio",
        StopReason::StepCap => "step_cap",
        StopReason::AtEquilibrium => "equilibrium",
    };
    writeln!(report, "steps={}\nstop={stop}", result.final_state.step).unwrap();
    writeln!(report, "v_inf={:?}\nu_inf={:?}", result.steady.field, result.steady.road).unwrap();
    match &result.rate {
        Ok(rate) => writeln!(report, "{}", format_rate(rate)).unwrap(),
        Err(e) => writeln!(report, "lambda_num=none ({e})").unwrap(),
    }
    let a = &result.audit;
    writeln!(
        report,
        "mass_defect={:e}\nmin_entry={:e}\ninequality_defect={:e}\nlog_inequality_defect={:e}",
        a.mass_defect, a.min_entry, a.inequality_defect, a.log_inequality_defect
    )
    .unwrap();
    std::fs::write(dir.join("report.txt"), &report).map_err(|e| Failure(1, e.to_string()))?;
    print!("{report}");
    Ok(())
}

fn cmd_sweep(config: &Path, output_dir: Option<PathBuf>) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let spec = cfg
        .sweep_spec()
        .ok_or_else(|| Failure(1, "config has no sweep_param / sweep_values".into()))?;
    let dir = output_dir.unwrap_or(cfg.output_dir.clone());
    let outcomes = sweep(&spec)?;
    create_dir(&dir)?;
    let mut csv = String::from("param,lambda_num,fit_residual\n");
    let mut failed = 0;
    for o in &outcomes {
        match &o.lambda_num {
            Ok(l) => {
                writeln!(csv, "{:?},{l:.16e},{:.16e}", o.point.value, o.fit_residual.unwrap_or(f64::NAN)).unwrap()
            }
            Err(e) => {
                failed += 1;
                eprintln!("{}={:?}: {e}", spec.param.key(), o.point.value);
                writeln!(csv, "{:?},NaN,NaN", o.point.value).unwrap();
            }
        }
    }
    let path = dir.join("sweep.csv");
    std::fs::write(&path, &csv).map_err(|e| Failure(1, format!("{}: {e}", path.display())))?;
    print!("{csv}");
    if failed > 0 {
        return Err(Failure(1, format!("{failed} of {} sweep points failed", outcomes.len())));
    }
    Ok(())
}

fn cmd_verify_mesh(path: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(1, format!("{}: {e}", path.display())))?;
    match import_mesh(&text) {
        Ok(mesh) => {
            println!(
                "admissible: {} field cells, {} edges, {} road cells",
                mesh.n_field_cells(),
                mesh.field_edges().len(),
                mesh.n_road_cells()
            );
            Ok(())
        }
        Err(MeshError::NotAdmissible(report)) => Err(Failure(1, format!("not admissible\n{report}"))),
        Err(e) => Err(e.into()),
    }
}

fn cmd_rate(path: &Path, dt: Option<f64>) -> Result<(), Failure> {
    let series = read_series(path)?;
    let dt = dt
        .or_else(|| series_time_step(&series))
        .ok_or_else(|| Failure(1, "cannot infer the time step; pass --dt".into()))?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Failure(1, format!("time step must be positive, got {dt}")));
    }
    let rate = estimate_decay_rate(&series, dt)?;
    println!("{}", format_rate(&rate));
    Ok(())
}

fn cmd_steady(config: &Path) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let spec = &cfg.spec;
    let mesh = build_cartesian(spec.geometry, spec.nx, spec.ny)?;
    let initial = discretize_initial(&spec.field, &spec.road, &mesh)?;
    let p = &spec.params;
    let steady = steady_state(total_mass(&initial, &mesh), &spec.geometry, p.road_to_field, p.field_to_road)?;
    println!(
        "v_inf={:?} u_inf={:?} mass={:?} lambda_2={:?}",
        steady.field,
        steady.road,
        steady.mass,
        theoretical_rate(p, &spec.geometry)
    );
    Ok(())
}

fn cmd_mesh(config: &Path, output: Option<PathBuf>) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let mesh = build_cartesian(cfg.spec.geometry, cfg.spec.nx, cfg.spec.ny)?;
    let text = export_mesh(&mesh);
    match output {
        Some(path) => std::fs::write(&path, text).map_err(|e| Failure(1, format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}
