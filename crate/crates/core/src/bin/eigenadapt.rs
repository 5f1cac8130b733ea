use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use eigenadapt::adapt::{fit_rate, AdaptConfig, AdaptHistory, RateWindow, DEFAULT_RATE_MIN_NDOF};
use eigenadapt::cli::{configure_threads, product_table, run_preset, run_to_dir, write_mesh_svg, Preset};
use eigenadapt::geometry::{initial_mesh, resolve_domain};
use eigenadapt::mesh::{read_mesh, write_mesh};
use eigenadapt::{Error, Result};

/// Adaptive finite elements for Dirichlet-Laplacian eigenvalue clusters.
///
/// Exit codes: 0 success, 2 configuration or argument error, 3 solver
/// failure, 4 I/O error. EIGENADAPT_THREADS caps worker threads.
#[derive(Parser)]
#[command(name = "eigenadapt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive loop for a `key = value` config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Artifacts go to <out>/<config file stem>/.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit the log-log slope of a history column against the dof count.
    Rate {
        #[arg(long)]
        history: PathBuf,
        /// Column name, e.g. eta_pointwise, eta_energy, lambda_12.
        #[arg(long)]
        field: String,
        /// Use levels with at least this many dofs.
        #[arg(long, conflicts_with = "levels")]
        min_ndof: Option<usize>,
        /// Use an inclusive level range FIRST..LAST.
        #[arg(long, value_parser = parse_range)]
        levels: Option<(usize, usize)>,
    },
    /// Run a named experiment preset.
    Preset {
        /// table1, lshape_compare, slit_multiple, slit_perturbed_j2 or slit_perturbed_cluster.
        name: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the dof budget of every run in the preset.
        #[arg(long)]
        max_dof: Option<usize>,
    },
    /// Mesh file utilities.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Write the initial criss-cross mesh of a domain.
    Dump {
        /// Builtin id (omega1, omega2, omega3, unit_square) or domain file.
        #[arg(long)]
        domain: String,
        /// Lattice subdivisions per unit length.
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read a mesh file, check it and print its statistics.
    Load {
        path: PathBuf,
        /// Also render the mesh to this SVG file.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once("..").ok_or("expected FIRST..LAST")?;
    Ok((a.parse().map_err(|_| "bad FIRST")?, b.parse().map_err(|_| "bad LAST")?))
}

fn execute(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Run { config, out } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg = AdaptConfig::parse(&text)?;
            let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
            let art = run_to_dir(&cfg, &out.join(stem))?;
            print!("{}", product_table(&art.history));
            println!("stop: {}  artifacts: {}", art.history.stop, art.dir.display());
            if let Some(f) = &art.history.failure {
                eprintln!("solver failure: {f}");
                return Err(Error::Solver { requested: cfg.cluster_hi + 3, converged: 0, worst_residual: f64::NAN });
            }
        }
        Command::Rate { history, field, min_ndof, levels } => {
            let h = AdaptHistory::from_csv(&std::fs::read_to_string(&history)?)?;
            let window = match levels {
                Some((a, b)) => RateWindow::Levels(a, b),
                None => RateWindow::MinDof(min_ndof.unwrap_or(DEFAULT_RATE_MIN_NDOF)),
            };
            println!("{:.6}", fit_rate(&h, &field, window)?);
        }
        Command::Preset { name, out, max_dof } => {
            let preset: Preset = name.parse()?;
            for art in run_preset(preset, &out, max_dof)? {
                println!(
                    "{}: {} levels, stop {}, slope eta_pointwise {}",
                    art.dir.display(),
                    art.history.rows.len(),
                    art.history.stop,
                    art.summary.slope_eta_pointwise.map_or("n/a".into(), |s| format!("{s:.3}"))
                );
            }
        }
        Command::Mesh { command: MeshCommand::Dump { domain, n, out } } => {
            let mesh = initial_mesh(&resolve_domain(&domain)?, n)?;
            let text = write_mesh(&mesh);
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
        }
        Command::Mesh { command: MeshCommand::Load { path, svg } } => {
            let mesh = read_mesh(&std::fs::read_to_string(&path)?)?;
            mesh.check_conformity().map_err(Error::Geometry)?;
            let s = mesh.stats();
            println!(
                "elements {}\nvertices {}\ninterior_p1_dofs {}\nh_max {:e}\nh_min {:e}\nmin_angle_deg {:.4}\nmax_adjacent_gen_diff {}\nmax_vertex_gen_diff {}",
                s.n_elements,
                s.n_vertices,
                s.n_interior_dofs_p1,
                s.h_max,
                s.h_min,
                s.min_angle.to_degrees(),
                s.max_adjacent_gen_diff,
                s.max_vertex_gen_diff
            );
            if let Some(p) = svg {
                write_mesh_svg(&mesh, &p)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eigenadapt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
