//! Kernel front ends: single-time and multi-time evaluation, truncation
//! points and model export.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Subcommand};
use uniexp_core::models::{
    barabasi_albert, build_imm_death, build_moran, build_seirs, build_sir, build_sir_birth,
    SeirsParams, SirObservation, StateSpaceMap, Waning,
};
use uniexp_core::mtx::{load_matrix, load_vector, store_matrix, store_vector};
use uniexp_core::musps::{musps_expmv, TimeGrid};
use uniexp_core::poisson::{bound_set, single_tailed_window, two_tailed_window};
use uniexp_core::sps::{sps_expmv, SpsOptions};
use uniexp_core::RateMatrix;

use crate::error::{CliError, CliResult};
use crate::report::{command_line, create_dir, csv_writer, digest, real, RunReport};
use crate::{ExpmvArgs, MuspsArgs, QuantileArgs};

pub fn expmv(a: ExpmvArgs) -> CliResult<()> {
    let q = load_matrix(&a.matrix)?;
    let nu = load_vector(&a.nu)?;
    let opts = SpsOptions {
        renormalize: a.renorm,
        two_tailed: a.two_tailed,
        eps: a.eps,
    };
    let start = Instant::now();
    let r = sps_expmv(&nu, &q, a.t, opts)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    store_vector(&r.dist, &a.out)?;
    RunReport {
        command: command_line(),
        inputs: vec![digest(&a.matrix)?, digest(&a.nu)?],
        eps: a.eps,
        variant: opts.to_string(),
        m_lo: r.m_lo_used,
        m_hi: r.m_used,
        n_sparse: r.n_sparse,
        wall_ms,
        outputs: vec![a.out.display().to_string()],
    }
    .emit(a.report.as_deref())
}

pub fn load_times(path: &Path) -> CliResult<TimeGrid> {
    let times = load_vector(path)?;
    Ok(TimeGrid::new(times)?)
}

pub fn musps(a: MuspsArgs) -> CliResult<()> {
    let q = load_matrix(&a.matrix)?;
    let nu = load_vector(&a.nu)?;
    let grid = load_times(&a.times)?;
    let start = Instant::now();
    let results = musps_expmv(&nu, &q, &grid, a.eps)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    let dir = create_dir(&a.out_dir)?;
    let index = dir.join("index.csv");
    let mut w = csv_writer(Some(&index))?;
    w.write_record(["index", "t", "m_lo", "m_hi", "n_sparse", "mass", "path"])?;
    let mut outputs = vec![index.display().to_string()];
    for (k, (r, &t)) in results.iter().zip(grid.times()).enumerate() {
        let name = format!("t{k:05}.vec");
        store_vector(&r.dist, dir.join(&name))?;
        w.write_record([
            k.to_string(),
            real(t),
            r.m_lo_used.to_string(),
            r.m_used.to_string(),
            r.n_sparse.to_string(),
            real(r.mass()),
            name.clone(),
        ])?;
        outputs.push(dir.join(name).display().to_string());
    }
    w.flush()?;
    let last = results.last();
    RunReport {
        command: command_line(),
        inputs: vec![digest(&a.matrix)?, digest(&a.nu)?, digest(&a.times)?],
        eps: a.eps,
        variant: "MUSPS2r".to_string(),
        m_lo: results.first().map_or(0, |r| r.m_lo_used),
        m_hi: last.map_or(0, |r| r.m_used),
        n_sparse: last.map_or(0, |r| r.n_sparse),
        wall_ms,
        outputs,
    }
    .emit(a.report.as_deref())
}

pub fn quantile(a: QuantileArgs) -> CliResult<()> {
    if !(a.rho >= 0.0 && a.rho.is_finite()) {
        return Err(CliError::input(format!(
            "rho must be finite and >= 0, got {}",
            a.rho
        )));
    }
    if !(a.eps > 0.0 && a.eps < 1.0) {
        return Err(CliError::input(format!(
            "eps must lie in (0, 1), got {}",
            a.eps
        )));
    }
    let w = if a.two_tailed {
        two_tailed_window(a.rho, a.eps, None)
    } else {
        single_tailed_window(a.rho, a.eps, None)
    };
    let mut out = csv_writer(None)?;
    out.write_record([
        "m_lo",
        "m_hi",
        "m_plus",
        "m_minus",
        "minus_applicable",
        "m_plus_plus",
        "plus_plus_applicable",
    ])?;
    // The bounds describe the upper index, so they use its own tolerance.
    let upper_eps = if a.two_tailed { a.eps / 2.0 } else { a.eps };
    let b = (a.rho > 0.0).then(|| bound_set(a.rho, upper_eps));
    let opt = |x: Option<f64>| x.filter(|v| v.is_finite()).map(real).unwrap_or_default();
    out.write_record([
        w.m_lo.to_string(),
        w.m_hi.to_string(),
        opt(b.map(|b| b.m_plus)),
        opt(b.map(|b| b.m_minus)),
        b.is_some_and(|b| b.minus_applicable).to_string(),
        opt(b.map(|b| b.m_plus_plus)),
        b.is_some_and(|b| b.plus_plus_applicable).to_string(),
    ])?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct ModelOut {
    /// Generator in Matrix Market format.
    #[arg(long)]
    pub out: PathBuf,
    /// CSV listing every state and its index.
    #[arg(long)]
    pub states: Option<PathBuf>,
    /// Comma-separated start state, written as a point mass to `--nu-out`.
    #[arg(long, requires = "nu_out")]
    pub start: Option<String>,
    #[arg(long)]
    pub nu_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ModelCmd {
    /// Immigration-death: X -> X-1 at mu X, X -> X+1 at gamma (n - X).
    ImmDeath {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        gamma: f64,
        #[command(flatten)]
        out: ModelOut,
    },
    /// Moran model with mutation.
    Moran {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        u: f64,
        #[arg(long)]
        v: f64,
        #[command(flatten)]
        out: ModelOut,
    },
    /// SIR on the full (S, I) triangle.
    Sir {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
        #[command(flatten)]
        out: ModelOut,
    },
    /// SEIRS on the full (S, E, I) tetrahedron.
    Seirs {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        eta: f64,
        /// Waning immunity at eta I instead of eta R.
        #[arg(long)]
        waning_infectious: bool,
        #[command(flatten)]
        out: ModelOut,
    },
    /// SIR between two exact observations, on birth counts with a coffin.
    SirBirth {
        #[arg(long)]
        s0: u32,
        #[arg(long)]
        i0: u32,
        #[arg(long)]
        s1: u32,
        #[arg(long)]
        i1: u32,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
        #[command(flatten)]
        out: ModelOut,
    },
    /// Negative Laplacian of a preferential-attachment graph.
    Graph {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: u64,
        /// Also write the edge list.
        #[arg(long)]
        edges: Option<PathBuf>,
        #[command(flatten)]
        out: ModelOut,
    },
}

fn parse_state(text: &str) -> CliResult<Vec<u32>> {
    text.split(',')
        .map(|t| t.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::input(format!("bad state {text:?}: {e}")))
}

fn write_model(q: &RateMatrix, map: Option<&StateSpaceMap>, out: &ModelOut) -> CliResult<()> {
    store_matrix(q, &out.out)?;
    if let (Some(path), Some(map)) = (&out.states, map) {
        let mut w = csv_writer(Some(path))?;
        let mut header = vec!["index".to_string()];
        header.extend(map.labels().iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for (k, st) in map.states() {
            let mut row = vec![k.to_string()];
            row.extend(st.iter().map(|x| x.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    if let (Some(text), Some(path)) = (&out.start, &out.nu_out) {
        let k = match map {
            Some(map) => {
                let state = parse_state(text)?;
                map.index_of(&state).ok_or_else(|| {
                    CliError::input(format!("state {text:?} is not in the state space"))
                })?
            }
            None => {
                let k: usize = text
                    .trim()
                    .parse()
                    .map_err(|_| CliError::input(format!("bad node {text:?}")))?;
                if k >= q.dim() {
                    return Err(CliError::input(format!("node {k} outside 0..{}", q.dim())));
                }
                k
            }
        };
        let mut nu = vec![0.0; q.dim()];
        nu[k] = 1.0;
        store_vector(&nu, path)?;
    }
    Ok(())
}

pub fn model(cmd: ModelCmd) -> CliResult<()> {
    match cmd {
        ModelCmd::ImmDeath { n, mu, gamma, out } => {
            let (q, map) = build_imm_death(n, mu, gamma)?;
            write_model(&q, Some(&map), &out)
        }
        ModelCmd::Moran {
            n,
            alpha,
            beta,
            u,
            v,
            out,
        } => {
            let (q, map) = build_moran(n, alpha, beta, u, v)?;
            write_model(&q, Some(&map), &out)
        }
        ModelCmd::Sir {
            n,
            beta,
            gamma,
            out,
        } => {
            let (q, map) = build_sir(n, beta, gamma)?;
            write_model(&q, Some(&map), &out)
        }
        ModelCmd::Seirs {
            n,
            beta,
            delta,
            gamma,
            eta,
            waning_infectious,
            out,
        } => {
            let mut params = SeirsParams::new(beta, delta, gamma, eta);
            if waning_infectious {
                params.waning = Waning::PerInfectious;
            }
            let (q, map) = build_seirs(n, params)?;
            write_model(&q, Some(&map), &out)
        }
        ModelCmd::SirBirth {
            s0,
            i0,
            s1,
            i1,
            beta,
            gamma,
            out,
        } => {
            let obs = SirObservation::new(s0, i0, s1, i1)?;
            let (q, map) = build_sir_birth(obs, beta, gamma)?;
            write_model(&q, Some(&map), &out)
        }
        ModelCmd::Graph {
            n,
            m,
            seed,
            edges,
            out,
        } => {
            let g = barabasi_albert(n, m, seed)?;
            if let Some(path) = edges {
                std::fs::write(&path, g.to_edge_list())
                    .map_err(|e| CliError::io(format!("writing {}: {e}", path.display())))?;
            }
            write_model(&g.laplacian()?, None, &out)
        }
    }
}
