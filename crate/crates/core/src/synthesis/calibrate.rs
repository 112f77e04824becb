//! Grid scan plus golden-section refinement for one- and two-parameter gate
//! families.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid points above this infidelity do not count as a bracket.
pub const SCAN_THRESHOLD: f64 = 0.5;

const GOLDEN_ITERS: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub params: Vec<f64>,
    pub infidelity: f64,
    pub leakage: f64,
    /// `(parameter, infidelity)` for every grid point; first parameter only
    /// for two-parameter scans.
    pub trace: Vec<(f64, f64)>,
}

/// Evaluates `family` on every grid point in parallel. Ties go to the earliest
/// (lowest) point.
fn scan<P, F>(points: &[P], family: &F) -> Result<Vec<(f64, f64)>>
where
    P: Sync,
    F: Fn(&P) -> Result<(f64, f64)> + Sync,
{
    points.par_iter().map(family).collect()
}

fn argmin(vals: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (k, v) in vals.iter().enumerate() {
        if v.0 < vals[best].0 {
            best = k;
        }
    }
    best
}

/// Golden-section minimum of `f` on `[a, b]`.
fn golden(mut a: f64, mut b: f64, f: &impl Fn(f64) -> Result<f64>, tol: f64) -> Result<f64> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..GOLDEN_ITERS {
        if (b - a).abs() <= tol * (1.0 + c.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { c } else { d })
}

fn bracket(grid: &[f64], k: usize) -> (f64, f64) {
    let lo = if k == 0 { grid[0] } else { grid[k - 1] };
    let hi = if k + 1 == grid.len() { grid[k] } else { grid[k + 1] };
    (lo, hi)
}

fn no_bracket(trace: Vec<(f64, f64)>) -> Error {
    Error::Calibration { message: format!("no grid point below infidelity {SCAN_THRESHOLD}"), trace }
}

/// Minimizes the infidelity returned by `family(p) = (infidelity, leakage)`
/// over an ascending `grid`.
pub fn calibrate<F>(family: F, grid: &[f64]) -> Result<Calibration>
where
    F: Fn(f64) -> Result<(f64, f64)> + Sync,
{
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Calibration { message: "grid must be non-empty and ascending".into(), trace: vec![] });
    }
    let vals = scan(grid, &|p: &f64| family(*p))?;
    let trace: Vec<(f64, f64)> = grid.iter().zip(&vals).map(|(&p, v)| (p, v.0)).collect();
    let k = argmin(&vals);
    if !(vals[k].0 < SCAN_THRESHOLD) {
        return Err(no_bracket(trace));
    }
    let (lo, hi) = bracket(grid, k);
    let p = if hi > lo { golden(lo, hi, &|x| family(x).map(|v| v.0), 1e-12)? } else { grid[k] };
    let (inf, leak) = family(p)?;
    let (p, inf, leak) = if inf <= vals[k].0 { (p, inf, leak) } else { (grid[k], vals[k].0, vals[k].1) };
    Ok(Calibration { params: vec![p], infidelity: inf, leakage: leak, trace })
}

/// Two-parameter version: product-grid scan, then alternating golden
/// sections within the neighbouring cells.
pub fn calibrate_2d<F>(family: F, grid_a: &[f64], grid_b: &[f64]) -> Result<Calibration>
where
    F: Fn(f64, f64) -> Result<(f64, f64)> + Sync,
{
    let ok = |g: &[f64]| !g.is_empty() && g.windows(2).all(|w| w[0] < w[1]);
    if !ok(grid_a) || !ok(grid_b) {
        return Err(Error::Calibration { message: "grids must be non-empty and ascending".into(), trace: vec![] });
    }
    let points: Vec<(f64, f64)> = grid_a.iter().flat_map(|&a| grid_b.iter().map(move |&b| (a, b))).collect();
    let vals = scan(&points, &|p: &(f64, f64)| family(p.0, p.1))?;
    let trace: Vec<(f64, f64)> = points.iter().zip(&vals).map(|(p, v)| (p.0, v.0)).collect();
    let k = argmin(&vals);
    if !(vals[k].0 < SCAN_THRESHOLD) {
        return Err(no_bracket(trace));
    }
    let (ka, kb) = (k / grid_b.len(), k % grid_b.len());
    let (la, ha) = bracket(grid_a, ka);
    let (lb, hb) = bracket(grid_b, kb);
    let (mut a, mut b) = points[k];
    for _ in 0..4 {
        if ha > la {
            a = golden(la, ha, &|x| family(x, b).map(|v| v.0), 1e-12)?;
        }
        if hb > lb {
            b = golden(lb, hb, &|y| family(a, y).map(|v| v.0), 1e-12)?;
        }
    }
    let (inf, leak) = family(a, b)?;
    let (a, b, inf, leak) = if inf <= vals[k].0 { (a, b, inf, leak) } else { (points[k].0, points[k].1, vals[k].0, vals[k].1) };
    Ok(Calibration { params: vec![a, b], infidelity: inf, leakage: leak, trace })
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_minimum() {
        let c = calibrate(|x| Ok(((x - 1.234).powi(2), 0.0)), &linspace(0.0, 3.0, 13)).unwrap();
        assert!((c.params[0] - 1.234).abs() < 1e-6);
        assert_eq!(c.trace.len(), 13);
    }

    #[test]
    fn ties_pick_lowest_parameter() {
        let c = calibrate(|x: f64| Ok(((x.abs() - 1.0).powi(2).min(0.1), 0.0)), &[-1.0, 1.0]).unwrap();
        assert!(c.params[0] < 0.0);
    }

    #[test]
    fn no_point_below_threshold_reports_trace() {
        match calibrate(|_| Ok((0.9, 0.0)), &linspace(0.0, 1.0, 5)) {
            Err(Error::Calibration { trace, .. }) => assert_eq!(trace.len(), 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_parameter_minimum() {
        let f = |a: f64, b: f64| Ok(((a - 0.3).powi(2) + (b + 0.7).powi(2) + 0.2 * (a - 0.3) * (b + 0.7), 0.0));
        let c = calibrate_2d(f, &linspace(-1.0, 1.0, 9), &linspace(-1.0, 1.0, 9)).unwrap();
        assert!((c.params[0] - 0.3).abs() < 1e-5 && (c.params[1] + 0.7).abs() < 1e-5, "{:?}", c.params);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let f = |x: f64| Ok(((x * 3.0).sin() + 1.0, 0.0));
        let grid = linspace(0.0, 6.0, 40);
        let run = |n| {
            rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(|| calibrate(f, &grid).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
