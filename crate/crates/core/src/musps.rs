//! Many times from one series pass.
//!
//! The terms of the series for `ν e^{Qt_i}` differ between times only by the
//! scalar weights `(ρt_i)^j/j!`, so one sequence of products `νP^j` serves
//! every time on the grid. Each time keeps its own accumulator and a scalar
//! `g_i` carrying its weight relative to the shared product vector; only times
//! whose truncation window contains `j` are touched at step `j`. Per-time
//! constants are lost along the way and are restored by renormalizing every
//! output to the input mass, so only the renormalized two-tailed flavour is
//! offered.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::poisson::{two_tailed_window, TruncationWindow};
use crate::sparse::RateMatrix;
use crate::sps::{
    check_inputs, debug_assert_nonnegative, scale_in_place, sps_expmv, Guards, SpsOptions,
    SpsResult,
};
use crate::sum::compensated_sum;

/// Strictly ascending positive times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::invalid("time grid is empty"));
        }
        if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::invalid(format!(
                "times must be finite and > 0, got {t}"
            )));
        }
        if let Some(k) = times.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "times not ascending: t[{k}] = {} >= t[{}] = {}",
                times[k],
                k + 1,
                times[k + 1]
            )));
        }
        Ok(TimeGrid { times })
    }

    /// `t_max·k/n` for `k = 1..=n`.
    pub fn uniform(n: usize, t_max: f64) -> Result<Self> {
        Self::new((1..=n).map(|k| t_max * k as f64 / n as f64).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.times[self.times.len() - 1]
    }
}

/// `ν e^{Qt_i}` for every time on the grid, renormalized and two-tailed.
pub fn musps_expmv(
    nu: &[f64],
    q: &RateMatrix,
    grid: &TimeGrid,
    eps: f64,
) -> Result<Vec<SpsResult>> {
    musps_expmv_with(nu, q, grid, eps, Guards::default(), |_, _| {})
}

/// Truncation windows used for each time. Lower indices are lowered where
/// needed so that they are nondecreasing along the grid; upper indices are
/// nondecreasing already.
pub fn musps_windows(rho: f64, grid: &TimeGrid, eps: f64) -> Vec<TruncationWindow> {
    let mut hint = None;
    let mut windows: Vec<TruncationWindow> = grid
        .times()
        .iter()
        .map(|&t| {
            let w = two_tailed_window(rho * t, eps, hint);
            hint = Some(w.m_hi);
            w
        })
        .collect();
    for k in (0..windows.len().saturating_sub(1)).rev() {
        windows[k].m_lo = windows[k].m_lo.min(windows[k + 1].m_lo);
    }
    windows
}

/// [`musps_expmv`] with explicit guards and an observer called at every
/// step `j ≥ 1` with the range of times accumulated at that step.
pub fn musps_expmv_with(
    nu: &[f64],
    q: &RateMatrix,
    grid: &TimeGrid,
    eps: f64,
    guards: Guards,
    mut observe: impl FnMut(u64, Range<usize>),
) -> Result<Vec<SpsResult>> {
    check_inputs(nu, q)?;
    SpsOptions::sps2r(eps).validate()?;
    let times = grid.times();
    let n = times.len();
    let d = nu.len();
    let kernel = q.shift();
    let rho = kernel.rho();

    let b_start = compensated_sum(nu);
    if b_start == 0.0 {
        return Ok(times.iter().map(|t| SpsResult::zero(d, rho * t)).collect());
    }
    if rho == 0.0 {
        return Ok(times
            .iter()
            .map(|_| SpsResult::unchanged(nu, 0.0))
            .collect());
    }

    let windows = musps_windows(rho, grid, eps);
    let m_lo: Vec<u64> = windows.iter().map(|w| w.m_lo).collect();
    let m_hi: Vec<u64> = windows.iter().map(|w| w.m_hi).collect();

    let mut b = nu.iter().sum::<f64>();
    let mut events = 0;
    let mut v_pro = nu.to_vec();
    if b > guards.big {
        scale_in_place(&mut v_pro, b);
        b = 1.0;
        events += 1;
    }

    let mut v_sum = vec![vec![0.0; d]; n];
    let mut g = vec![1.0; n];
    let mut hi = 0;
    while hi < n && m_lo[hi] == 0 {
        v_sum[hi].copy_from_slice(&v_pro);
        hi += 1;
    }
    let mut lo = 0;

    let mut next = vec![0.0; d];
    let mut f = 1.0;
    for j in 1..=m_hi[n - 1] {
        while hi < n && m_lo[hi] <= j {
            hi += 1;
        }
        while m_hi[lo] < j {
            lo += 1;
        }

        // Scale by the largest active time. When no time is active the
        // scale only has to keep the product representable, and the next
        // time to become active does that.
        let t_ref = if lo < hi {
            times[hi - 1]
        } else {
            times[hi.min(n - 1)]
        };
        let s = t_ref / f;
        kernel.left_multiply_into(&v_pro, &mut next);
        std::mem::swap(&mut v_pro, &mut next);
        for x in v_pro.iter_mut() {
            *x *= s;
        }
        b *= rho * s;
        debug_assert_nonnegative(&v_pro);

        if b > guards.big || b < guards.small || (lo < hi && g[lo] < guards.small) {
            for i in lo..hi {
                scale_in_place(&mut v_sum[i], b * g[i]);
                g[i] = 1.0;
            }
            scale_in_place(&mut v_pro, b);
            b = 1.0;
            events += 1;
        }

        for i in lo..hi {
            g[i] *= times[i] / t_ref;
            let gi = g[i];
            for (acc, p) in v_sum[i].iter_mut().zip(&v_pro) {
                *acc += gi * p;
            }
        }
        observe(j, lo..hi);
        f += 1.0;
    }

    Ok(v_sum
        .into_iter()
        .zip(windows)
        .map(|(raw, w)| {
            debug_assert_nonnegative(&raw);
            SpsResult::renormalized(raw, b_start, Some(w), w.m_hi, events, w.rho_t)
        })
        .collect())
}

/// Baseline: step from each time to the next with [`sps_expmv`].
pub fn sequential_sps(
    nu: &[f64],
    q: &RateMatrix,
    grid: &TimeGrid,
    opts: SpsOptions,
) -> Result<Vec<SpsResult>> {
    let mut out: Vec<SpsResult> = Vec::with_capacity(grid.len());
    let mut prev_t = 0.0;
    for &t in grid.times() {
        let start = out.last().map_or(nu, |r| r.dist.as_slice());
        out.push(sps_expmv(start, q, t - prev_t, opts)?);
        prev_t = t;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> RateMatrix {
        RateMatrix::from_rates(2, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap()
    }

    fn closed_form(t: f64) -> [f64; 2] {
        let e = (-2.0 * t).exp();
        [(1.0 + e) / 2.0, (1.0 - e) / 2.0]
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![0.0, 1.0]).is_err());
        let e = TimeGrid::new(vec![1.0, 3.0, 2.0]).unwrap_err();
        assert!(e.to_string().contains("times not ascending"), "{e}");
        assert!(TimeGrid::new(vec![1.0, 1.0]).is_err());
        assert_eq!(
            TimeGrid::uniform(4, 2.0).unwrap().times(),
            &[0.5, 1.0, 1.5, 2.0]
        );
    }

    #[test]
    fn single_time_matches_sps2r() {
        let q = RateMatrix::from_rates(3, [(0, 1, 2.0), (1, 2, 0.5), (2, 0, 1.5), (1, 0, 0.25)])
            .unwrap();
        let nu = [0.2, 0.5, 0.3];
        for &t in &[0.01, 1.0, 37.0, 400.0] {
            let grid = TimeGrid::new(vec![t]).unwrap();
            let many = musps_expmv(&nu, &q, &grid, 1e-16).unwrap();
            let one = sps_expmv(&nu, &q, t, SpsOptions::sps2r(1e-16)).unwrap();
            assert_eq!(many[0].m_used, one.m_used);
            assert_eq!(many[0].m_lo_used, one.m_lo_used);
            for (a, b) in many[0].dist.iter().zip(&one.dist) {
                assert!((a - b).abs() < 1e-14, "t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn two_state_on_a_grid() {
        let grid = TimeGrid::new(vec![0.1, 0.5, 1.0, 2.0, 10.0, 60.0]).unwrap();
        let out = musps_expmv(&[1.0, 0.0], &two_state(), &grid, 1e-16).unwrap();
        for (r, &t) in out.iter().zip(grid.times()) {
            let want = closed_form(t);
            for (a, b) in r.dist.iter().zip(&want) {
                assert!((a - b).abs() < 1e-14, "t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn separated_times_match_direct() {
        // Windows that do not overlap leave steps where no time is active.
        let q = RateMatrix::from_rates(3, [(0, 1, 3.0), (1, 2, 1.0), (2, 0, 2.0), (2, 1, 0.5)])
            .unwrap();
        let nu = [1.0, 0.0, 0.0];
        let grid = TimeGrid::new(vec![2.0, 50.0, 400.0]).unwrap();
        let out = musps_expmv(&nu, &q, &grid, 1e-14).unwrap();
        for (r, &t) in out.iter().zip(grid.times()) {
            let one = sps_expmv(&nu, &q, t, SpsOptions::sps2r(1e-14)).unwrap();
            for (a, b) in r.dist.iter().zip(&one.dist) {
                assert!((a - b).abs() < 1e-13, "t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn guards_are_transparent() {
        let grid = TimeGrid::uniform(10, 30.0).unwrap();
        let nu = [1.0, 0.0];
        let plain = musps_expmv(&nu, &two_state(), &grid, 1e-16).unwrap();
        let tight = Guards {
            big: 1e3,
            small: 1e-3,
        };
        let forced = musps_expmv_with(&nu, &two_state(), &grid, 1e-16, tight, |_, _| {}).unwrap();
        assert!(forced[0].renorm_events > plain[0].renorm_events);
        for (p, f) in plain.iter().zip(&forced) {
            for (a, b) in p.dist.iter().zip(&f.dist) {
                assert!((a - b).abs() <= 1e-10 * a.abs(), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn sequential_composes() {
        let grid = TimeGrid::new(vec![0.5, 1.0]).unwrap();
        let seq = sequential_sps(&[1.0, 0.0], &two_state(), &grid, SpsOptions::default()).unwrap();
        let direct = sps_expmv(&[1.0, 0.0], &two_state(), 1.0, SpsOptions::default()).unwrap();
        for (a, b) in seq[1].dist.iter().zip(&direct.dist) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn windows_are_nested() {
        let grid = TimeGrid::uniform(300, 3000.0).unwrap();
        let w = musps_windows(1.3, &grid, 1e-12);
        for pair in w.windows(2) {
            assert!(pair[0].m_lo <= pair[1].m_lo && pair[0].m_hi <= pair[1].m_hi);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let grid = TimeGrid::new(vec![1.0, 2.0]).unwrap();
        let zero = RateMatrix::from_triplets(2, []).unwrap();
        let out = musps_expmv(&[0.4, 0.6], &zero, &grid, 1e-9).unwrap();
        assert!(out.iter().all(|r| r.dist == vec![0.4, 0.6]));
        let out = musps_expmv(&[0.0, 0.0], &two_state(), &grid, 1e-9).unwrap();
        assert!(out.iter().all(|r| r.degenerate));
    }
}
