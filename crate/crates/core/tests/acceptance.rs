//! End-to-end acceptance checks. Runs without the libtest harness so that
//! one PASS/FAIL line per criterion is always printed.

mod common;

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::gillespie::sir_histogram;
use common::oracle::{exact_m_eps, PoissonTable};
use uniexp_core::models::*;
use uniexp_core::musps::{musps_expmv, sequential_sps, TimeGrid};
use uniexp_core::poisson::{bound_set, m_eps, two_tailed_window};
use uniexp_core::sps::{sps_expmv, SpsOptions};
use uniexp_core::sum::{compensated_sum, l1_distance};
use uniexp_core::RateMatrix;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn point(dim: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[k] = 1.0;
    v
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn imm_death_exactness() -> Outcome {
    let (q, _) = build_imm_death(1000, 0.05, 0.01).map_err(|e| e.to_string())?;
    let nu = point(1001, 1000);
    let exact = imm_death_exact(1000, 0.05, 0.01, 20.0).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for opts in SpsOptions::all(1e-16) {
        let start = Instant::now();
        let r = sps_expmv(&nu, &q, 20.0, opts).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        let err = l1_distance(&r.dist, &exact);
        let limit = if opts.renormalize { 1e-13 } else { 5e-12 };
        ensure(err <= limit, format!("{opts}: error {err:.2e} > {limit:e}"))?;
        ensure(
            took < Duration::from_secs(5),
            format!("{opts}: {:.2} s", secs(took)),
        )?;
        parts.push(format!("{opts} {err:.1e} in {:.3} s", secs(took)));
    }
    Ok(parts.join(", "))
}

fn missing_mass() -> Outcome {
    let u = f64::EPSILON / 2.0;
    let models: Vec<(RateMatrix, Vec<f64>)> = vec![
        {
            let (q, _) = build_imm_death(60, 0.05, 0.01).unwrap();
            (q, point(61, 60))
        },
        {
            let (q, _) = build_moran(60, 210.0, 20.0, 0.002, 0.0).unwrap();
            (q, point(61, 30))
        },
        {
            let (q, map) = build_sir(12, 0.3, 1.0).unwrap();
            let k = map.index_of(&[10, 2]).unwrap();
            let d = q.dim();
            (q, point(d, k))
        },
        {
            let (q, map) = build_seirs(8, SeirsParams::benchmark(8)).unwrap();
            let k = map.index_of(&[7, 1, 0]).unwrap();
            let d = q.dim();
            (q, point(d, k))
        },
    ];
    let rho_ts: Vec<f64> = (0..13)
        .map(|k| 0.01 * 50_000f64.powf(k as f64 / 12.0))
        .collect();
    let mut combos = 0;
    let mut rounding_band = 0;
    let mut worst_rel = 0.0f64;
    for (q, nu) in &models {
        for &rt in &rho_ts {
            combos += 1;
            let t = rt / q.rho();
            for eps in [1e-9, 1e-16] {
                let r = sps_expmv(nu, q, t, SpsOptions::default().with_eps(eps))
                    .map_err(|e| e.to_string())?;
                let deficit = 1.0 - compensated_sum(&r.dist);
                let slack = 100.0 * u * r.m_used as f64;
                ensure(
                    deficit <= eps + slack,
                    format!("rho_t={rt:.3} eps={eps:e}: deficit {deficit:e} above bound"),
                )?;
                if eps == 1e-9 {
                    ensure(
                        deficit > 0.0,
                        format!("rho_t={rt:.3} eps=1e-9: deficit {deficit:e} not positive"),
                    )?;
                    worst_rel = worst_rel.max(deficit / eps);
                } else {
                    // The true tail is below one ulp of 1, so the sign of the
                    // computed deficit is rounding noise.
                    ensure(
                        deficit > -slack,
                        format!("rho_t={rt:.3} eps=1e-16: deficit {deficit:e}"),
                    )?;
                    if deficit <= 0.0 {
                        rounding_band += 1;
                    }
                }
            }
        }
    }
    Ok(format!(
        "{combos} (model, t) pairs; eps=1e-9 deficits in (0, eps], max deficit/eps {worst_rel:.3}; \
         eps=1e-16 within the rounding band (|deficit| <= 100 u m), {rounding_band} nonpositive at rounding level"
    ))
}

fn quantile_grid() -> Outcome {
    let mut cases = Vec::new();
    for k in -2..=4 {
        for eps in [1e-16, 1e-9, 1e-3] {
            cases.push((10f64.powi(k), eps));
        }
    }
    let start = Instant::now();
    let got: Vec<u64> = cases
        .iter()
        .map(|&(rho, eps)| m_eps(rho, eps, None))
        .collect();
    let took = start.elapsed();
    let mut unordered = Vec::new();
    for (&(rho, eps), &m) in cases.iter().zip(&got) {
        let exact = exact_m_eps(rho, eps);
        ensure(
            m == exact,
            format!("rho={rho} eps={eps}: {m} vs oracle {exact}"),
        )?;
        let b = bound_set(rho, eps);
        let mf = m as f64;
        ensure(
            mf <= b.m_plus.ceil(),
            format!("m+ violated at rho={rho} eps={eps}"),
        )?;
        if b.minus_applicable {
            ensure(
                b.m_minus.floor() <= mf,
                format!("m- violated at rho={rho} eps={eps}"),
            )?;
        }
        if b.plus_plus_applicable {
            ensure(
                mf <= b.m_plus_plus.ceil(),
                format!("m++ violated at rho={rho} eps={eps}"),
            )?;
            // m++ is only sharper than m+ once rho is moderately large.
            if b.m_plus_plus.ceil() > b.m_plus.ceil() {
                unordered.push(format!(
                    "rho={rho} eps={eps:e} ({} vs {})",
                    b.m_plus_plus.ceil(),
                    b.m_plus.ceil()
                ));
            }
        }
    }
    ensure(
        took < Duration::from_secs(10),
        format!("grid took {:.2} s", secs(took)),
    )?;
    let ordering = if unordered.is_empty() {
        "ceil(m++) <= ceil(m+) everywhere".to_string()
    } else {
        format!("ceil(m++) > ceil(m+) at {}", unordered.join(", "))
    };
    Ok(format!(
        "{} cases exact and bracketed in {:.1} ms; {ordering}",
        cases.len(),
        took.as_secs_f64() * 1e3
    ))
}

fn quoted_pair() -> Outcome {
    // The pair corresponds to an upper tail of 1e-9, a total budget of 2e-9.
    let w = two_tailed_window(3439.5, 2e-9, None);
    ensure(
        (w.m_lo, w.m_hi) == (3081, 3797),
        format!("got ({}, {})", w.m_lo, w.m_hi),
    )?;
    let table = PoissonTable::new(3439.5);
    ensure(
        table.tail(3797) <= 1e-9 && table.tail(3796) > 1e-9,
        "oracle disagrees on the upper index",
    )?;
    let literal = two_tailed_window(3439.5, 1e-9, None);
    Ok(format!(
        "(3081, 3797) at total budget 2e-9, oracle-confirmed; budget 1e-9 gives ({}, {})",
        literal.m_lo, literal.m_hi
    ))
}

fn eyam() -> Outcome {
    const DIMS: [usize; 7] = [261, 946, 2059, 1387, 289, 197, 346];
    const RHOS: [f64; 7] = [101.5, 171.4, 217.1, 170.1, 83.1, 53.6, 106.3];
    let (beta, gamma) = EYAM_MLE;
    let start = Instant::now();
    let (coarse, factors) = eyam_loglik(beta, gamma, SpsOptions::default().with_eps(1e-9), false)
        .map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let (fine, _) =
        eyam_loglik(beta, gamma, SpsOptions::sps2r(1e-16), false).map_err(|e| e.to_string())?;
    let dims: Vec<usize> = factors.iter().map(|f| f.dim).collect();
    ensure(dims == DIMS, format!("sizes {dims:?}"))?;
    for (f, want) in factors.iter().zip(RHOS) {
        ensure(
            (f.rho_t - want).abs() <= 0.05,
            format!("rho {} vs {want}", f.rho_t),
        )?;
    }
    ensure(
        (coarse - fine).abs() <= 1e-7,
        format!("loglik {coarse} vs {fine}"),
    )?;
    ensure(
        took < Duration::from_secs(5),
        format!("full likelihood took {:.2} s", secs(took)),
    )?;
    let (_, jump) =
        eyam_loglik(beta, gamma, SpsOptions::sps2r(2e-9), true).map_err(|e| e.to_string())?;
    let j = &jump[0];
    ensure(j.dim == 30789, format!("jump size {}", j.dim))?;
    ensure(
        (j.rho_t - 3439.5).abs() <= 0.05,
        format!("jump rho {}", j.rho_t),
    )?;
    Ok(format!(
        "sizes and rho match, loglik {fine:.9} (|diff| {:.1e}), full run {:.2} s, jump d={} rho={:.2}",
        (coarse - fine).abs(),
        secs(took),
        j.dim,
        j.rho_t
    ))
}

fn musps_truth() -> Outcome {
    let (q, map) = build_seirs(40, SeirsParams::benchmark(40)).map_err(|e| e.to_string())?;
    let nu = point(q.dim(), map.index_of(&[39, 1, 0]).unwrap());
    let grid = TimeGrid::uniform(200, 100.0).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let multi = musps_expmv(&nu, &q, &grid, 1e-16).map_err(|e| e.to_string())?;
    let musps_time = start.elapsed();
    let start = Instant::now();
    sequential_sps(&nu, &q, &grid, SpsOptions::sps2r(1e-16)).map_err(|e| e.to_string())?;
    let seq_time = start.elapsed();
    let mut worst = 0.0f64;
    for (r, &t) in multi.iter().zip(grid.times()) {
        let direct = sps_expmv(&nu, &q, t, SpsOptions::sps2r(1e-16)).map_err(|e| e.to_string())?;
        worst = worst.max(l1_distance(&r.dist, &direct.dist));
    }
    ensure(
        worst <= 1e-12,
        format!("SEIRS max |MUSPS - direct| {worst:e}"),
    )?;

    let (q, _) = build_imm_death(1000, 0.05, 0.01).map_err(|e| e.to_string())?;
    let nu = point(1001, 1000);
    let grid = TimeGrid::uniform(2000, 50.0).map_err(|e| e.to_string())?;
    let multi = musps_expmv(&nu, &q, &grid, 1e-16).map_err(|e| e.to_string())?;
    let seq =
        sequential_sps(&nu, &q, &grid, SpsOptions::sps2r(1e-16)).map_err(|e| e.to_string())?;
    let mut excess = f64::NEG_INFINITY;
    for ((m, s), &t) in multi.iter().zip(&seq).zip(grid.times()) {
        let exact = imm_death_exact(1000, 0.05, 0.01, t).map_err(|e| e.to_string())?;
        excess = excess.max(l1_distance(&m.dist, &exact) - l1_distance(&s.dist, &exact));
    }
    ensure(
        excess <= 1e-14,
        format!("imm-death MUSPS error exceeds sequential by {excess:e}"),
    )?;
    let ratio = secs(musps_time) / secs(seq_time);
    Ok(format!(
        "SEIRS max diff {worst:.1e}; imm-death max excess {excess:.1e}; \
         SEIRS MUSPS/sequential time ratio {ratio:.2} (soft, {})",
        if ratio < 1.0 {
            "below 1"
        } else {
            "not below 1"
        }
    ))
}

fn cost_ratio() -> Outcome {
    let m = m_eps(1e6, 1e-16, None);
    let ratio = m as f64 / 1e6;
    ensure(ratio > 1.0 && ratio < 1.02, format!("ratio {ratio}"))?;
    let (q, _) = build_imm_death(200, 0.05, 0.01).map_err(|e| e.to_string())?;
    let nu = point(201, 200);
    for t in [0.1, 3.0, 40.0] {
        for opts in SpsOptions::all(1e-12) {
            let r = sps_expmv(&nu, &q, t, opts).map_err(|e| e.to_string())?;
            ensure(
                r.n_sparse == r.m_used,
                format!("{opts} t={t}: n_sparse {} vs m_hi {}", r.n_sparse, r.m_used),
            )?;
        }
    }
    Ok(format!(
        "m_eps(1e6, 1e-16) / 1e6 = {ratio:.5}; n_sparse equals m_hi"
    ))
}

fn headline() -> Outcome {
    const T: f64 = 40.27;
    let check = |name: &str, q: &RateMatrix, dim: usize, rho_t: f64| {
        ensure(q.dim() == dim, format!("{name}: d = {}", q.dim()))?;
        let got = q.rho() * T;
        ensure(
            (got - rho_t).abs() <= 0.01 * rho_t,
            format!("{name}: rho_t {got}"),
        )?;
        Ok::<String, String>(format!("{name} d={dim} rho_t={got:.1}"))
    };
    let s = |r: uniexp_core::Result<(RateMatrix, StateSpaceMap)>| {
        r.map(|x| x.0).map_err(|e| e.to_string())
    };
    let parts = [
        check(
            "imm-death",
            &s(build_imm_death(1000, 0.05, 0.01))?,
            1001,
            2014.0,
        )?,
        check(
            "moran",
            &s(build_moran(1000, 210.0, 20.0, 0.002, 0.0))?,
            1001,
            2316.0,
        )?,
        check("sir", &s(build_sir(100, 0.01, 0.25))?, 5151, 1573.0)?,
        check(
            "seirs",
            &s(build_seirs(40, SeirsParams::benchmark(40)))?,
            12341,
            2416.0,
        )?,
    ];
    Ok(parts.join(", "))
}

fn graph_diffusion() -> Outcome {
    let a = barabasi_albert(1000, 6, 3).map_err(|e| e.to_string())?;
    let b = barabasi_albert(1000, 6, 9).map_err(|e| e.to_string())?;
    let gs: Vec<WeightedGraph> = JoinMode::ALL
        .iter()
        .map(|&m| join_graphs(&a, &b, m, 6))
        .collect::<uniexp_core::Result<_>>()
        .map_err(|e| e.to_string())?;
    let nu = point(2000, gs[0].highest_degree_node());
    let mut times: Vec<f64> = (1..=40).map(|k| 5.0 * k as f64).collect();
    times.extend([400.0, 800.0, 1600.0, 3200.0, 4000.0]);
    let grid = TimeGrid::new(times).map_err(|e| e.to_string())?;
    let eps = 1e-12;
    let runs: Vec<_> = gs
        .iter()
        .map(|g| musps_expmv(&nu, &g.laplacian()?, &grid, eps))
        .collect::<uniexp_core::Result<_>>()
        .map_err(|e| e.to_string())?;
    let curve = |j: usize| -> Vec<f64> {
        runs[0]
            .iter()
            .zip(&runs[j])
            .map(|(x, y)| l1_distance(&x.dist, &y.dist))
            .collect()
    };
    let (d12, d13, d14) = (curve(1), curve(2), curve(3));
    let short = TimeGrid::new(grid.times()[..40].to_vec()).map_err(|e| e.to_string())?;
    let self_max = diffusion_discrepancy(&nu, &gs[0], &gs[0], &short, eps)
        .map_err(|e| e.to_string())?
        .into_iter()
        .fold(0.0, f64::max);
    ensure(self_max <= 2e-13, format!("self discrepancy {self_max:e}"))?;
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let gap23 = d12
        .iter()
        .zip(&d13)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let separation = (max(&d14) - max(&d12)).abs();
    ensure(
        gap23 < separation,
        format!("G2/G3 gap {gap23:.3e} vs G2/G4 separation {separation:.3e}"),
    )?;
    let last = |v: &[f64]| *v.last().unwrap();
    for (name, v) in [("d12", &d12), ("d13", &d13), ("d14", &d14)] {
        ensure(last(v) < 1e-6, format!("{name} at t=4000 is {:e}", last(v)))?;
    }
    Ok(format!(
        "self max {self_max:.1e}; max|d12-d13| {gap23:.3} < separation {separation:.3}; \
         at t=4000 d12 {:.1e}, d13 {:.1e}, d14 {:.1e}",
        last(&d12),
        last(&d13),
        last(&d14)
    ))
}

fn gillespie() -> Outcome {
    let (n, s0, i0, beta, gamma, t) = (10u32, 8u32, 2u32, 0.4, 1.0, 1.0);
    let paths = 1_000_000usize;
    let (q, map) = build_sir(n, beta, gamma).map_err(|e| e.to_string())?;
    let nu = point(q.dim(), map.index_of(&[s0, i0]).unwrap());
    let r = sps_expmv(&nu, &q, t, SpsOptions::sps2r(1e-16)).map_err(|e| e.to_string())?;
    let counts: HashMap<(u32, u32), u64> = sir_histogram(s0, i0, beta, gamma, t, paths, 2024);
    let mut bins: Vec<(f64, f64)> = map
        .states()
        .map(|(k, st)| {
            let observed = counts.get(&(st[0], st[1])).copied().unwrap_or(0) as f64;
            (r.dist[k], observed)
        })
        .collect();
    bins.sort_by(|x, y| y.0.total_cmp(&x.0));
    // Pool every bin with expected count below 5 into one.
    let np = paths as f64;
    let (mut kept, mut pooled) = (Vec::new(), (0.0, 0.0));
    for (p, obs) in bins {
        if p * np >= 5.0 {
            kept.push((p, obs));
        } else {
            pooled.0 += p;
            pooled.1 += obs;
        }
    }
    if pooled.0 > 0.0 || pooled.1 > 0.0 {
        kept.push(pooled);
    }
    let mut worst = 0.0f64;
    for &(p, obs) in &kept {
        let se = (np * p * (1.0 - p)).sqrt();
        let z = if se > 0.0 {
            (obs - np * p).abs() / se
        } else if obs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(z);
    }
    ensure(
        worst <= 3.0,
        format!("largest deviation {worst:.2} standard errors"),
    )?;
    Ok(format!(
        "{} bins, largest deviation {worst:.2} standard errors over {paths} paths",
        kept.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("immigration-death exactness", imm_death_exactness),
        ("missing-mass contract", missing_mass),
        ("quantile exactness and bounds", quantile_grid),
        ("quoted truncation pair", quoted_pair),
        ("Eyam reproduction", eyam),
        ("MUSPS against direct SPS", musps_truth),
        ("truncation cost ratio and n_sparse", cost_ratio),
        ("headline sizes and rates", headline),
        ("graph diffusion", graph_diffusion),
        ("Gillespie cross-check", gillespie),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let n = k + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let took = secs(start.elapsed());
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{took:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail} [{took:.1} s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
