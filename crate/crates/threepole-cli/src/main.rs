//! `threepole` — command-line driver for three-pole signed distance fields.
//!
//! Pipeline commands: `compute-field` turns a triangle mesh into a field
//! grid, `reconstruct` turns a grid back into a mesh, `fit` trains a
//! coordinate network on the exact field, `sample` exports labeled training
//! points, `eval` compares a reconstruction against ground truth, and
//! `bench` times grid-to-mesh conversion across octree depths.
//!
//! Every command is deterministic for fixed inputs and `--seed`: primary
//! outputs are byte-identical across reruns and across `--threads`
//! settings. Each command with an `--out` writes a `<out>.manifest.json`
//! describing the run (flags, input hashes, stage timings).

mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use threepole::extract::{marching_cubes_3p, strip_null, cleanup};
use threepole::field::compute_grid_on;
use threepole::formats;
use threepole::learn::{train, LearnMode, TrainConfig};
use threepole::mesh::{load_obj, write_obj, TriangleMesh};
use threepole::metrics;
use threepole::octree::Octree;
use threepole::sample::{sample_points, SampleStrategy};

use manifest::{RunManifest, Stages};

#[derive(Parser)]
#[command(
    name = "threepole",
    version,
    about = "Three-pole signed distance fields: compute, learn, extract, evaluate"
)]
struct Cli {
    /// Rayon thread count (default: all cores). Affects timing only, never
    /// output bytes.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the exact field of a mesh on a lattice and write a grid file
    ComputeField(ComputeFieldArgs),
    /// Run null-aware marching cubes on a grid file and write an OBJ
    Reconstruct(ReconstructArgs),
    /// Train a coordinate network on the exact field of a mesh
    Fit(FitArgs),
    /// Export labeled training points for a mesh
    Sample(SampleArgs),
    /// Compare a reconstructed mesh against ground truth
    Eval(EvalArgs),
    /// Time grid-to-mesh conversion across depths
    Bench(BenchArgs),
}

#[derive(Args)]
struct MeshInput {
    /// Input mesh (OBJ, triangles/polygons with consistent winding)
    #[arg(long)]
    mesh: PathBuf,

    /// Flip triangle winding (use when the mesh is inside-out)
    #[arg(long)]
    flip: bool,

    /// Relative padding of the octree root cube around the mesh bounds
    #[arg(long, default_value_t = 0.05)]
    padding: f64,
}

impl MeshInput {
    fn load(&self) -> anyhow::Result<TriangleMesh> {
        let mut mesh = load_obj(&self.mesh)?;
        if self.flip {
            mesh.flip_windings();
        }
        Ok(mesh)
    }
}

#[derive(Args)]
struct ComputeFieldArgs {
    #[command(flatten)]
    input: MeshInput,

    /// Octree depth; the lattice has (2^depth + 1)^3 points
    #[arg(long, value_parser = clap::value_parser!(u32).range(4..=10))]
    depth: u32,

    /// Output grid file
    #[arg(long)]
    out: PathBuf,

    /// Also write the label grid (0 inside / 1 outside / 2 null) here
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Input grid file
    #[arg(long)]
    grid: PathBuf,

    /// Output OBJ path
    #[arg(long)]
    out: PathBuf,

    /// Iso level of the extracted surface
    #[arg(long, default_value_t = 0.0)]
    iso: f64,

    /// Fill boundary loops of up to this many edges (0 = off)
    #[arg(long, default_value_t = 0)]
    fill: usize,

    /// Laplacian smoothing iterations with the boundary pinned (0 = off)
    #[arg(long, default_value_t = 0)]
    smooth: usize,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: MeshInput,

    /// Octree depth for the exact field being learned
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=12))]
    depth: u32,

    /// Learning framework
    #[arg(long, value_enum, default_value_t = ModeArg::Triclass)]
    mode: ModeArg,

    /// Where the training points come from
    #[arg(long, value_enum, default_value_t = StrategyArg::Octree)]
    strategy: StrategyArg,

    /// Training point budget (octree strategy decides its own count)
    #[arg(long, default_value_t = 20_000)]
    count: usize,

    #[arg(long, default_value_t = 200)]
    epochs: usize,

    #[arg(long, default_value_t = 1e-4)]
    lr: f64,

    #[arg(long, default_value_t = 512)]
    batch: usize,

    /// Hidden layer widths
    #[arg(long, value_delimiter = ',', default_value = "256,256,256,256")]
    hidden: Vec<usize>,

    /// Sinusoidal positional encoding of the query point
    #[arg(long)]
    pos_enc: bool,

    /// Weight classes by inverse frequency (triclass only)
    #[arg(long)]
    class_weights: bool,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output model checkpoint
    #[arg(long)]
    out: PathBuf,

    /// Also evaluate the trained model on the field lattice and write the
    /// predicted grid here
    #[arg(long)]
    grid_out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    input: MeshInput,

    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=12))]
    depth: u32,

    #[arg(long, value_enum, default_value_t = StrategyArg::Octree)]
    strategy: StrategyArg,

    #[arg(long, default_value_t = 10_000)]
    count: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output sample batch file
    #[arg(long)]
    out: PathBuf,

    /// Omit the signed-distance targets (labels only)
    #[arg(long)]
    no_targets: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Reconstructed mesh (OBJ)
    #[arg(long)]
    rec: PathBuf,

    /// Ground-truth mesh (OBJ)
    #[arg(long)]
    gt: PathBuf,

    /// Surface sample count per mesh for chamfer/F-score
    #[arg(long, default_value_t = 100_000)]
    n: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Also compute exact EMD on this many surface samples (max 2048)
    #[arg(long)]
    emd: Option<usize>,

    /// Write the JSON record here as well (and a manifest alongside)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    input: MeshInput,

    /// Depths to benchmark
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        value_parser = clap::value_parser!(u32).range(6..=9)
    )]
    depths: Vec<u32>,

    /// Write the timing table as JSON here (and a manifest alongside)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Triclass,
    Br,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Random,
    Uniform,
    Octree,
}

impl From<StrategyArg> for SampleStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Random => SampleStrategy::Random,
            StrategyArg::Uniform => SampleStrategy::Uniform,
            StrategyArg::Octree => SampleStrategy::Octree,
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // build_global fails only if a pool already exists; first thing we do
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Cmd) -> anyhow::Result<()> {
    match cmd {
        Cmd::ComputeField(a) => compute_field(a),
        Cmd::Reconstruct(a) => reconstruct(a),
        Cmd::Fit(a) => fit(a),
        Cmd::Sample(a) => sample(a),
        Cmd::Eval(a) => eval(a),
        Cmd::Bench(a) => bench(a),
    }
}

fn compute_field(a: ComputeFieldArgs) -> anyhow::Result<()> {
    let mut stages = Stages::new();
    let mesh = stages.time("load_mesh", || a.input.load())?;
    let octree = stages.time("octree_build", || {
        Octree::build_with_padding(&mesh, a.depth, a.input.padding)
    })?;
    let grid = stages.time("evaluate", || compute_grid_on(&mesh, &octree))?;
    stages.time("write", || formats::write_grid(&a.out, &grid))?;
    if let Some(labels_out) = &a.labels_out {
        formats::write_labels(labels_out, grid.dims(), grid.bbox(), &grid.labels())?;
    }

    let dims = grid.dims();
    println!(
        "{}x{}x{} grid, {:.1}% null, occupied leaves: {}",
        dims[0],
        dims[1],
        dims[2],
        grid.null_fraction() * 100.0,
        octree.occupied_count()
    );

    RunManifest::new("compute-field", &stages)
        .arg("mesh", a.input.mesh.display())
        .arg("flip", a.input.flip)
        .arg("padding", a.input.padding)
        .arg("depth", a.depth)
        .arg("out", a.out.display())
        .input(&a.input.mesh)?
        .write_for(&a.out)
}

fn reconstruct(a: ReconstructArgs) -> anyhow::Result<()> {
    let mut stages = Stages::new();
    let grid = stages.time("read_grid", || formats::read_grid(&a.grid))?;
    let raw = stages.time("marching_cubes", || marching_cubes_3p(&grid, a.iso));
    let stripped = stages.time("strip", || strip_null(&raw));
    let mesh = stages.time("cleanup", || cleanup(&stripped, a.fill, a.smooth));
    stages.time("write", || write_obj(&mesh, &a.out))?;

    if mesh.triangles.is_empty() {
        eprintln!("warning: reconstruction has no faces (grid may be all null)");
    }
    println!("{} vertices, {} faces", mesh.vertices.len(), mesh.triangles.len());

    RunManifest::new("reconstruct", &stages)
        .arg("grid", a.grid.display())
        .arg("iso", a.iso)
        .arg("fill", a.fill)
        .arg("smooth", a.smooth)
        .arg("out", a.out.display())
        .input(&a.grid)?
        .write_for(&a.out)
}

fn fit(a: FitArgs) -> anyhow::Result<()> {
    let mut stages = Stages::new();
    let mesh = stages.time("load_mesh", || a.input.load())?;
    let octree = stages.time("octree_build", || {
        Octree::build_with_padding(&mesh, a.depth, a.input.padding)
    })?;
    let samples = stages.time("sample", || {
        sample_points(&mesh, &octree, a.strategy.into(), a.count, a.seed)
    })?;
    let hist = samples.label_histogram();
    println!(
        "{} training points (inside {}, outside {}, null {})",
        samples.len(),
        hist[0],
        hist[1],
        hist[2]
    );

    let mode = match a.mode {
        ModeArg::Triclass => LearnMode::TriClass,
        ModeArg::Br => LearnMode::BinaryRegression,
    };
    if a.class_weights && matches!(mode, LearnMode::BinaryRegression) {
        eprintln!("warning: --class-weights only applies to triclass mode; ignored");
    }
    let cfg = TrainConfig {
        mode,
        hidden: a.hidden.clone(),
        pos_enc: a.pos_enc,
        learning_rate: a.lr,
        batch_size: a.batch,
        epochs: a.epochs,
        seed: a.seed,
        class_weights: a.class_weights,
        ..TrainConfig::default()
    };
    let (model, loss_log) = stages.time("train", || train(&samples, octree.root_bounds(), &cfg))?;
    println!(
        "trained {} epochs, loss {:.6} -> {:.6}",
        loss_log.len(),
        loss_log.first().unwrap_or(&f64::NAN),
        loss_log.last().unwrap_or(&f64::NAN)
    );
    stages.time("write", || formats::write_model(&a.out, &model))?;

    if let Some(grid_out) = &a.grid_out {
        let n = octree.grid_points_per_axis();
        let grid = stages.time("predict_grid", || {
            model.predict_grid([n, n, n], octree.root_bounds())
        })?;
        formats::write_grid(grid_out, &grid)?;
        println!("predicted grid: {:.1}% null", grid.null_fraction() * 100.0);
    }

    RunManifest::new("fit", &stages)
        .arg("mesh", a.input.mesh.display())
        .arg("flip", a.input.flip)
        .arg("padding", a.input.padding)
        .arg("depth", a.depth)
        .arg("mode", format!("{:?}", mode))
        .arg("strategy", format!("{:?}", SampleStrategy::from(a.strategy)))
        .arg("count", a.count)
        .arg("epochs", a.epochs)
        .arg("lr", a.lr)
        .arg("batch", a.batch)
        .arg("hidden", format!("{:?}", a.hidden))
        .arg("pos_enc", a.pos_enc)
        .arg("class_weights", a.class_weights)
        .arg("seed", a.seed)
        .arg("out", a.out.display())
        .input(&a.input.mesh)?
        .write_for(&a.out)
}

fn sample(a: SampleArgs) -> anyhow::Result<()> {
    let mut stages = Stages::new();
    let mesh = stages.time("load_mesh", || a.input.load())?;
    let octree = stages.time("octree_build", || {
        Octree::build_with_padding(&mesh, a.depth, a.input.padding)
    })?;
    let batch = stages.time("sample", || {
        sample_points(&mesh, &octree, a.strategy.into(), a.count, a.seed)
    })?;
    stages.time("write", || formats::write_samples(&a.out, &batch, !a.no_targets))?;

    let hist = batch.label_histogram();
    println!(
        "{} points (inside {}, outside {}, null {})",
        batch.len(),
        hist[0],
        hist[1],
        hist[2]
    );

    RunManifest::new("sample", &stages)
        .arg("mesh", a.input.mesh.display())
        .arg("flip", a.input.flip)
        .arg("padding", a.input.padding)
        .arg("depth", a.depth)
        .arg("strategy", format!("{:?}", SampleStrategy::from(a.strategy)))
        .arg("count", a.count)
        .arg("seed", a.seed)
        .arg("targets", !a.no_targets)
        .arg("out", a.out.display())
        .input(&a.input.mesh)?
        .write_for(&a.out)
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let mut stages = Stages::new();
    let rec = stages.time("load_rec", || load_obj(&a.rec))?;
    let gt = stages.time("load_gt", || load_obj(&a.gt))?;

    let rec_pts = stages.time("sample_rec", || metrics::surface_sample(&rec, a.n, a.seed))?;
    let gt_pts =
        stages.time("sample_gt", || metrics::surface_sample(&gt, a.n, a.seed.wrapping_add(1)))?;
    let chamfer = stages.time("chamfer", || metrics::chamfer_l2(&rec_pts, &gt_pts))?;
    let tau = metrics::default_fscore_tau(&gt);
    let (_, _, f) = stages.time("fscore", || metrics::fscore(&rec_pts, &gt_pts, tau))?;
    let emd = match a.emd {
        Some(n_emd) => {
            if n_emd > metrics::EMD_MAX_POINTS {
                bail!("--emd {} exceeds the exact-matching cap {}", n_emd, metrics::EMD_MAX_POINTS);
            }
            let ra = metrics::surface_sample(&rec, n_emd, a.seed)?;
            let rb = metrics::surface_sample(&gt, n_emd, a.seed.wrapping_add(1))?;
            Some(stages.time("emd", || metrics::emd_exact(&ra, &rb))?)
        }
        None => None,
    };
    let topo = metrics::topology_stats(&rec);

    let record = serde_json::json!({
        "chamfer_l2": chamfer,
        "fscore": f,
        "emd": emd,
        "boundary_edges": topo.boundary_edges,
        "euler": topo.euler_characteristic,
        "components": topo.components,
    });
    let line = serde_json::to_string(&record)?;
    println!("{line}");

    if let Some(out) = &a.out {
        std::fs::write(out, format!("{line}\n"))
            .with_context(|| format!("writing {}", out.display()))?;
        RunManifest::new("eval", &stages)
            .arg("rec", a.rec.display())
            .arg("gt", a.gt.display())
            .arg("n", a.n)
            .arg("seed", a.seed)
            .arg("emd", format!("{:?}", a.emd))
            .arg("out", out.display())
            .input(&a.rec)?
            .input(&a.gt)?
            .write_for(out)?;
    }
    Ok(())
}

fn bench(a: BenchArgs) -> anyhow::Result<()> {
    let mut stages = Stages::new();
    let mesh = stages.time("load_mesh", || a.input.load())?;

    let mut depths = a.depths.clone();
    depths.sort_unstable();
    depths.dedup();

    println!("grid-to-mesh conversion, median of 3 runs, {} threads", rayon::current_num_threads());
    println!("{:>5} {:>12} {:>10} {:>10} {:>10}", "depth", "cubes", "vertices", "faces", "median_s");

    let mut rows = Vec::new();
    for &depth in &depths {
        let octree = Octree::build_with_padding(&mesh, depth, a.input.padding)?;
        let grid = compute_grid_on(&mesh, &octree)?;
        let cubes = {
            let c = (1u64 << depth) as u64;
            c * c * c
        };

        let mut runs = Vec::with_capacity(3);
        let mut mesh_out = None;
        for _ in 0..3 {
            let t = Instant::now();
            let raw = marching_cubes_3p(&grid, 0.0);
            let stripped = strip_null(&raw);
            runs.push(t.elapsed().as_secs_f64());
            mesh_out = Some(stripped);
        }
        runs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let median = runs[1];
        let m = mesh_out.unwrap();
        println!(
            "{:>5} {:>12} {:>10} {:>10} {:>10.4}",
            depth,
            cubes,
            m.vertices.len(),
            m.triangles.len(),
            median
        );
        rows.push(serde_json::json!({
            "depth": depth,
            "cubes": cubes,
            "vertices": m.vertices.len(),
            "faces": m.triangles.len(),
            "runs_s": runs,
            "median_s": median,
        }));
        stages.record(&format!("depth_{depth}_median"), median);
    }

    if let Some(out) = &a.out {
        let table = serde_json::json!({
            "threads": rayon::current_num_threads(),
            "rows": rows,
        });
        std::fs::write(out, format!("{}\n", serde_json::to_string_pretty(&table)?))
            .with_context(|| format!("writing {}", out.display()))?;
        RunManifest::new("bench", &stages)
            .arg("mesh", a.input.mesh.display())
            .arg("flip", a.input.flip)
            .arg("padding", a.input.padding)
            .arg(
                "depths",
                depths.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","),
            )
            .arg("out", out.display())
            .input(&a.input.mesh)?
            .write_for(out)?;
    }
    Ok(())
}
