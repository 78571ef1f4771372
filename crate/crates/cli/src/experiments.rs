//! Validation, likelihood, diffusion and timing harnesses.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Subcommand, ValueEnum};
use rayon::prelude::*;
use uniexp_core::models::{
    barabasi_albert, build_imm_death, build_moran, build_seirs, build_sir, eyam_loglik,
    imm_death_exact, join_graphs, JoinMode, SeirsParams, EYAM_MLE,
};
use uniexp_core::musps::{musps_expmv, sequential_sps, TimeGrid};
use uniexp_core::sps::{sps_expmv, SpsOptions, SpsResult};
use uniexp_core::sum::l1_distance;
use uniexp_core::RateMatrix;

use crate::commands::load_times;
use crate::error::{CliError, CliResult};
use crate::report::{csv_writer, real};

/// Worker pool sized by `UNIEXP_THREADS` (default 1).
fn pool() -> CliResult<rayon::ThreadPool> {
    let threads = match std::env::var("UNIEXP_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                CliError::input(format!(
                    "UNIEXP_THREADS must be a positive integer, got {s:?}"
                ))
            })?,
        Err(_) => 1,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::internal(e.to_string()))
}

fn variant(text: &str, eps: f64) -> CliResult<SpsOptions> {
    let opts: SpsOptions = text.parse()?;
    let opts = opts.with_eps(eps);
    opts.validate()?;
    Ok(opts)
}

/// Either a times file or `points` evenly spaced times on `(0, t_max]`.
#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, conflicts_with_all = ["t_max", "points"])]
    pub times: Option<PathBuf>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

impl GridArgs {
    fn grid(&self, default_t_max: f64, default_points: usize) -> CliResult<TimeGrid> {
        match &self.times {
            Some(path) => load_times(path),
            None => Ok(TimeGrid::uniform(
                self.points.unwrap_or(default_points),
                self.t_max.unwrap_or(default_t_max),
            )?),
        }
    }
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: u32,
    #[arg(long, default_value_t = 0.05)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.01)]
    pub gamma: f64,
    #[arg(long, default_value_t = 20.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1e-16)]
    pub eps: f64,
    /// SPS, SPSr, SPS2 or SPS2r (the prefix may be omitted).
    #[arg(long, default_value = "2r")]
    pub variant: String,
    /// Compare MUSPS and sequential SPS on this many times up to `--t-max`.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, default_value_t = 50.0)]
    pub t_max: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn validate(a: ValidateArgs) -> CliResult<()> {
    let opts = variant(&a.variant, a.eps)?;
    let (q, _) = build_imm_death(a.n, a.mu, a.gamma)?;
    let mut nu = vec![0.0; q.dim()];
    nu[a.n as usize] = 1.0;
    let mut w = csv_writer(a.out.as_deref())?;
    match a.points {
        None => {
            let r = sps_expmv(&nu, &q, a.t, opts)?;
            let exact = imm_death_exact(a.n, a.mu, a.gamma, a.t)?;
            w.write_record(["variant", "t", "m_lo", "m_hi", "l1_error"])?;
            w.write_record([
                opts.to_string(),
                real(a.t),
                r.m_lo_used.to_string(),
                r.m_used.to_string(),
                real(l1_distance(&r.dist, &exact)),
            ])?;
        }
        Some(points) => {
            let grid = TimeGrid::uniform(points, a.t_max)?;
            let multi = musps_expmv(&nu, &q, &grid, a.eps)?;
            let seq = sequential_sps(&nu, &q, &grid, opts)?;
            w.write_record(["t", "musps_error", "sequential_error"])?;
            for ((m, s), &t) in multi.iter().zip(&seq).zip(grid.times()) {
                let exact = imm_death_exact(a.n, a.mu, a.gamma, t)?;
                w.write_record([
                    real(t),
                    real(l1_distance(&m.dist, &exact)),
                    real(l1_distance(&s.dist, &exact)),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct EyamArgs {
    #[arg(long, default_value_t = EYAM_MLE.0)]
    pub beta: f64,
    #[arg(long, default_value_t = EYAM_MLE.1)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub eps: f64,
    #[arg(long, default_value = "SPS")]
    pub variant: String,
    /// Only the first-to-last observation pair.
    #[arg(long)]
    pub jump: bool,
}

pub fn eyam(a: EyamArgs) -> CliResult<()> {
    let opts = variant(&a.variant, a.eps)?;
    let (total, factors) = eyam_loglik(a.beta, a.gamma, opts, a.jump)?;
    let mut w = csv_writer(None)?;
    w.write_record([
        "factor", "t0", "t1", "dim", "rho_t", "m_lo", "m_hi", "loglik",
    ])?;
    for (k, f) in factors.iter().enumerate() {
        w.write_record([
            k.to_string(),
            real(f.t0),
            real(f.t1),
            f.dim.to_string(),
            real(f.rho_t),
            f.m_lo.to_string(),
            f.m_hi.to_string(),
            real(f.loglik),
        ])?;
    }
    let (t0, t1) = match (factors.first(), factors.last()) {
        (Some(a), Some(b)) => (real(a.t0), real(b.t1)),
        _ => (String::new(), String::new()),
    };
    let empty = String::new;
    w.write_record([
        "total".to_string(),
        t0,
        t1,
        empty(),
        empty(),
        empty(),
        empty(),
        real(total),
    ])?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct DiffusionArgs {
    /// Nodes in each random graph.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Partners drawn per new node; also the bridge weight.
    #[arg(long, default_value_t = 6)]
    pub m: usize,
    #[arg(long, default_value_t = 3)]
    pub seed_a: u64,
    #[arg(long, default_value_t = 9)]
    pub seed_b: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub eps: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Columns compare `G_hh` against the other three joins, starting from a
/// point mass on the highest-degree node of the first graph.
pub fn diffusion(a: DiffusionArgs) -> CliResult<()> {
    let ga = barabasi_albert(a.n, a.m, a.seed_a)?;
    let gb = barabasi_albert(a.n, a.m, a.seed_b)?;
    let grid = a.grid.grid(200.0, 40)?;
    let graphs = JoinMode::ALL
        .iter()
        .map(|&mode| join_graphs(&ga, &gb, mode, a.m as u64))
        .collect::<uniexp_core::Result<Vec<_>>>()?;
    let mut nu = vec![0.0; graphs[0].n_nodes()];
    nu[graphs[0].highest_degree_node()] = 1.0;
    let laplacians = graphs
        .iter()
        .map(|g| g.laplacian())
        .collect::<uniexp_core::Result<Vec<_>>>()?;
    let runs: Vec<Vec<SpsResult>> = pool()?.install(|| {
        laplacians
            .par_iter()
            .map(|q| musps_expmv(&nu, q, &grid, a.eps))
            .collect::<uniexp_core::Result<_>>()
    })?;
    let mut w = csv_writer(a.out.as_deref())?;
    let mut header = vec!["t".to_string()];
    header.extend(JoinMode::ALL[1..].iter().map(|m| format!("d_hh_{m}")));
    w.write_record(&header)?;
    for (k, &t) in grid.times().iter().enumerate() {
        let mut row = vec![real(t)];
        row.extend((1..4).map(|j| real(l1_distance(&runs[0][k].dist, &runs[j][k].dist))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BenchModel {
    ImmDeath,
    Moran,
    Sir,
    Seirs,
}

impl BenchModel {
    fn name(self) -> &'static str {
        match self {
            BenchModel::ImmDeath => "imm-death",
            BenchModel::Moran => "moran",
            BenchModel::Sir => "sir",
            BenchModel::Seirs => "seirs",
        }
    }

    /// Generator and start vector with the benchmark parameters.
    fn build(self, size: u32) -> CliResult<(RateMatrix, Vec<f64>)> {
        let (q, start) = match self {
            BenchModel::ImmDeath => {
                let (q, _) = build_imm_death(size, 0.05, 0.01)?;
                (q, size as usize)
            }
            BenchModel::Moran => {
                let (q, _) = build_moran(size, 210.0, 20.0, 0.002, 0.0)?;
                (q, size as usize / 2)
            }
            BenchModel::Sir => {
                let (q, map) = build_sir(size, 0.01, 0.25)?;
                let k = map.index_of(&[size.saturating_sub(1), 1.min(size)]);
                (
                    q,
                    k.ok_or_else(|| CliError::input("SIR size must be at least 1"))?,
                )
            }
            BenchModel::Seirs => {
                let (q, map) = build_seirs(size, SeirsParams::benchmark(size))?;
                let k = map.index_of(&[size.saturating_sub(1), 1.min(size), 0]);
                (
                    q,
                    k.ok_or_else(|| CliError::input("SEIRS size must be at least 1"))?,
                )
            }
        };
        let mut nu = vec![0.0; q.dim()];
        nu[start] = 1.0;
        Ok((q, nu))
    }

    fn default_size(self) -> u32 {
        match self {
            BenchModel::ImmDeath | BenchModel::Moran => 1000,
            BenchModel::Sir => 100,
            BenchModel::Seirs => 40,
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(subcommand)]
    pub kind: BenchKind,
}

#[derive(Debug, Args)]
pub struct BenchCommon {
    #[arg(long, value_enum, default_value = "imm-death")]
    pub model: BenchModel,
    /// Population size; the model's benchmark size by default.
    #[arg(long)]
    pub size: Option<u32>,
    #[arg(long, default_value_t = 1e-16)]
    pub eps: f64,
    /// Timed repetitions per configuration.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum BenchKind {
    /// All four single-time variants over a range of rho t.
    Sps {
        #[command(flatten)]
        common: BenchCommon,
        /// Comma-separated values of rho t.
        #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
        rho_t: Vec<f64>,
    },
    /// Multi-time evaluation against stepping with single-time SPS2r.
    Musps {
        #[command(flatten)]
        common: BenchCommon,
        #[command(flatten)]
        grid: GridArgs,
    },
}

/// Median, min and max of `repeats` timed calls, in milliseconds.
fn timed<T>(
    repeats: usize,
    mut f: impl FnMut() -> uniexp_core::Result<T>,
) -> uniexp_core::Result<(T, [f64; 3])> {
    let mut times = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        last = Some(f()?);
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    times.sort_by(f64::total_cmp);
    let stats = [times[times.len() / 2], times[0], times[times.len() - 1]];
    Ok((last.expect("at least one repeat"), stats))
}

fn ms(x: f64) -> String {
    format!("{x:.3}")
}

pub fn bench(a: BenchArgs) -> CliResult<()> {
    match a.kind {
        BenchKind::Sps { common, rho_t } => bench_sps(common, rho_t),
        BenchKind::Musps { common, grid } => bench_musps(common, grid),
    }
}

const BENCH_HEADER: [&str; 9] = [
    "variant",
    "model",
    "rho_t",
    "n_sparse",
    "wall_ms",
    "wall_min_ms",
    "wall_max_ms",
    "error",
    "reference",
];

fn bench_sps(c: BenchCommon, rho_ts: Vec<f64>) -> CliResult<()> {
    let size = c.size.unwrap_or(c.model.default_size());
    let (q, nu) = c.model.build(size)?;
    if q.rho() == 0.0 {
        return Err(CliError::input("model has no transitions"));
    }
    if let Some(bad) = rho_ts.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(CliError::input(format!(
            "rho_t must be finite and >= 0, got {bad}"
        )));
    }
    let variants = SpsOptions::all(c.eps);
    let units: Vec<(SpsOptions, f64)> = rho_ts
        .iter()
        .flat_map(|&r| variants.map(|v| (v, r)))
        .collect();
    let rows = pool()?.install(|| {
        units
            .par_iter()
            .map(|&(opts, rt)| {
                let t = rt / q.rho();
                let (r, stats) = timed(c.repeats, || sps_expmv(&nu, &q, t, opts))?;
                let (reference, name) = match c.model {
                    BenchModel::ImmDeath => (imm_death_exact(size, 0.05, 0.01, t)?, "exact"),
                    _ => (
                        sps_expmv(&nu, &q, t, SpsOptions::sps2r(1e-16))?.dist,
                        "SPS2r(1e-16)",
                    ),
                };
                Ok((
                    opts,
                    rt,
                    r.n_sparse,
                    stats,
                    l1_distance(&r.dist, &reference),
                    name,
                ))
            })
            .collect::<uniexp_core::Result<Vec<_>>>()
    })?;
    let mut w = csv_writer(c.out.as_deref())?;
    w.write_record(BENCH_HEADER)?;
    for (opts, rt, n_sparse, stats, err, name) in rows {
        w.write_record([
            opts.to_string(),
            c.model.name().to_string(),
            real(rt),
            n_sparse.to_string(),
            ms(stats[0]),
            ms(stats[1]),
            ms(stats[2]),
            real(err),
            name.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn bench_musps(c: BenchCommon, grid: GridArgs) -> CliResult<()> {
    let size = c.size.unwrap_or(c.model.default_size());
    let (q, nu) = c.model.build(size)?;
    let grid = grid.grid(40.27, 100)?;
    let (multi, m_stats) = timed(c.repeats, || musps_expmv(&nu, &q, &grid, c.eps))?;
    let (seq, s_stats) = timed(c.repeats, || {
        sequential_sps(&nu, &q, &grid, SpsOptions::sps2r(c.eps))
    })?;
    let (m_err, s_err, reference) = match c.model {
        BenchModel::ImmDeath => {
            let mut worst = (0.0f64, 0.0f64);
            for ((m, s), &t) in multi.iter().zip(&seq).zip(grid.times()) {
                let exact = imm_death_exact(size, 0.05, 0.01, t)?;
                worst.0 = worst.0.max(l1_distance(&m.dist, &exact));
                worst.1 = worst.1.max(l1_distance(&s.dist, &exact));
            }
            (worst.0, worst.1, "exact")
        }
        _ => {
            let diff = multi
                .iter()
                .zip(&seq)
                .map(|(m, s)| l1_distance(&m.dist, &s.dist))
                .fold(0.0, f64::max);
            (diff, diff, "each other")
        }
    };
    let rho_t = q.rho() * grid.last();
    let seq_products: u64 = seq.iter().map(|r| r.n_sparse).sum();
    let musps_products = multi.last().map_or(0, |r| r.n_sparse);
    let ratio = m_stats[0] / s_stats[0];
    let mut w = csv_writer(c.out.as_deref())?;
    let mut header = BENCH_HEADER.to_vec();
    header.push("ratio");
    w.write_record(&header)?;
    for (name, products, stats, err) in [
        ("MUSPS2r", musps_products, m_stats, m_err),
        ("sequential-SPS2r", seq_products, s_stats, s_err),
    ] {
        w.write_record([
            name.to_string(),
            c.model.name().to_string(),
            real(rho_t),
            products.to_string(),
            ms(stats[0]),
            ms(stats[1]),
            ms(stats[2]),
            real(err),
            reference.to_string(),
            format!("{ratio:.4}"),
        ])?;
    }
    w.flush()?;
    Ok(())
}
