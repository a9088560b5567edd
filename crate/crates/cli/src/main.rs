// `!(x > 0.0)` style checks reject NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use grainfront::io;
use grainfront::microgen;
use grainfront::sim::stats::write_histogram;
use grainfront::sim::{oracle_track, size_histogram, RunConfig, Simulation, State, StatsRow, STATS_HEADER};
use grainfront::topology;
use grainfront::{Error, Result};

#[derive(Parser)]
#[command(name = "grainfront", version, about = "Front-tracking grain growth and recrystallization")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the initial microstructure and write it as a snapshot.
    Generate(Common),
    /// Run the configured schedule.
    Run {
        #[command(flatten)]
        common: Common,
        /// Stop at this time instead of the end of the schedule.
        #[arg(long)]
        until: Option<f64>,
        /// Snapshot interval, replacing the configured one.
        #[arg(long)]
        snapshot_every: Option<f64>,
    },
    /// Write the analytic reference curve of the configured case.
    Oracle(Common),
    /// Check a snapshot's mesh and topology invariants.
    Validate { snapshot: PathBuf },
    /// Print the statistics row of a snapshot.
    Stats {
        snapshot: PathBuf,
        /// Also print a surface-weighted size histogram with this bin width.
        #[arg(long)]
        histogram_bin: Option<f64>,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output.dir = o.clone();
    }
    Ok(cfg)
}

fn generate(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let spec = cfg.generator.as_ref().ok_or_else(|| Error::Config("generate needs a [generator] section".into()))?;
    let g = microgen::generate(spec)?;
    let state = State::new(g.mesh, g.grains);
    let out = &cfg.output.dir;
    state.save(&out.join("initial.vtk"))?;
    io::write_grains_csv(io::create(&out.join("grains.csv"))?, &state.mesh, &state.grains)?;
    println!(
        "{} grains, {} nodes, {} elements -> {}",
        state.grains.len(),
        state.mesh.n_nodes(),
        state.mesh.n_elements(),
        out.join("initial.vtk").display()
    );
    Ok(())
}

fn run(common: &Common, until: Option<f64>, snapshot_every: Option<f64>) -> Result<()> {
    let mut cfg = load(common)?;
    if snapshot_every.is_some() {
        cfg.output.snapshot_every = snapshot_every;
    }
    if let Some(u) = until {
        if !(u > 0.0) {
            return Err(Error::Config("--until must be positive".into()));
        }
    }
    cfg.validate()?;
    let mut sim = Simulation::new(cfg)?;
    let summary = sim.run(until)?;
    if let Some(last) = summary.rows.last() {
        println!("{STATS_HEADER}");
        print_row(last);
    }
    if let Some(l2) = summary.oracle_l2 {
        println!("max L2 error vs reference: {:.4}%", 100.0 * l2);
    }
    Ok(())
}

fn oracle(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let track =
        oracle_track(&cfg).ok_or_else(|| Error::Config("this configuration has no analytic reference".into()))?;
    let path = cfg.output.dir.join("oracle.csv");
    let mut w = io::create(&path)?;
    track.reference.write_csv(&mut w)?;
    std::io::Write::flush(&mut w)?;
    println!("{} samples -> {}", track.reference.len(), path.display());
    Ok(())
}

fn read_snapshot(path: &Path) -> Result<io::Snapshot> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    io::read_vtk(f, &path.display().to_string())
}

fn validate(path: &Path) -> Result<()> {
    let snap = read_snapshot(path)?;
    let topo = topology::build(&snap.mesh).map_err(|e| Error::Invariant(e.to_string()))?;
    topology::validate(&snap.mesh, &topo).into_result().map_err(|e| Error::Invariant(e.to_string()))?;
    println!("ok: {} surfaces, {} lines, {} points", topo.n_surfaces(), topo.lines.len(), topo.points.len());
    Ok(())
}

fn stats(path: &Path, bin: Option<f64>) -> Result<()> {
    let side = io::sidecar_path(path);
    let (mesh, grains, time, pc) = if side.exists() {
        let st = State::load(path)?;
        let pc = st.pc;
        (st.mesh, st.grains, st.time, pc)
    } else {
        let snap = read_snapshot(path)?;
        let areas = topology::surface_areas(&snap.mesh);
        let grains = snap
            .rho
            .iter()
            .map(|(s, &r)| (*s, grainfront::rex::GrainState::new(r, areas.get(s).copied().unwrap_or(0.0))))
            .collect();
        (snap.mesh, grains, snap.time, 0.0)
    };
    println!("{STATS_HEADER}");
    print_row(&StatsRow::compute(time, &mesh, &grains, pc));
    if let Some(b) = bin {
        if !(b > 0.0) {
            return Err(Error::Config("--histogram-bin must be positive".into()));
        }
        write_histogram(std::io::stdout().lock(), &size_histogram(&mesh, b), b)?;
    }
    Ok(())
}

fn print_row(row: &StatsRow) {
    let _ = row.write(std::io::stdout().lock());
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::InvalidSpec(_) => 2,
        Error::Invariant(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Generate(c) => generate(c),
        Cmd::Run { common, until, snapshot_every } => run(common, *until, *snapshot_every),
        Cmd::Oracle(c) => oracle(c),
        Cmd::Validate { snapshot } => validate(snapshot),
        Cmd::Stats { snapshot, histogram_bin } => stats(snapshot, *histogram_bin),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
