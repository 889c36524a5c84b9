//! Derivative-free minimisation: Nelder–Mead with restarts, and a seeded
//! multistart driver over a box.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::expr::BoxDomain;

#[derive(Clone, Debug)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Simplex diameter (max-norm) below which the run is converged.
    pub xatol: f64,
    /// Spread of simplex values below which the run is converged.
    pub fatol: f64,
    /// Number of times the simplex is rebuilt around the current best point.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 4000,
            xatol: 1e-11,
            fatol: 1e-15,
            restarts: 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Nelder–Mead with the dimension-adaptive coefficients of Gao and Han.
/// Non-finite objective values are treated as +∞.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let dim = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / dim, 0.75 - 1.0 / (2.0 * dim), 1.0 - 1.0 / dim);

    let mut evals = 0usize;
    let mut best = x0.to_vec();
    let mut best_f = eval(x0);
    evals += 1;
    let mut converged = false;

    for round in 0..=opts.restarts {
        let scale = if round == 0 { 1.0 } else { 0.1f64.powi(round as i32) };
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((best.clone(), best_f));
        for k in 0..n {
            let mut p = best.clone();
            p[k] += step[k] * scale;
            let mut v = eval(&p);
            evals += 1;
            if !v.is_finite() {
                p[k] = best[k] - step[k] * scale;
                v = eval(&p);
                evals += 1;
            }
            simplex.push((p, v));
        }
        converged = false;
        while evals < opts.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex_cmp(&a.0, &b.0)));
            let diam = simplex[1..]
                .iter()
                .flat_map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            let spread = simplex[n].1 - simplex[0].1;
            if diam <= opts.xatol && (spread <= opts.fatol || diam == 0.0) {
                converged = true;
                break;
            }
            if diam <= opts.xatol * 1e-3 {
                // Values are not settling but the simplex has collapsed.
                converged = simplex[0].1.is_finite();
                break;
            }
            let mut centroid = vec![0.0; n];
            for (p, _) in &simplex[..n] {
                for k in 0..n {
                    centroid[k] += p[k] / dim;
                }
            }
            let worst = simplex[n].clone();
            let along = |c: f64| -> Vec<f64> {
                (0..n).map(|k| centroid[k] + c * (worst.0[k] - centroid[k])).collect()
            };
            let xr = along(-alpha);
            let fr = eval(&xr);
            evals += 1;
            if fr < simplex[0].1 {
                let xe = along(-alpha * gamma);
                let fe = eval(&xe);
                evals += 1;
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < worst.1 {
                let xc = along(-alpha * rho);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(rho);
                let fc = eval(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
                continue;
            }
            let x_best = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                for k in 0..n {
                    vertex.0[k] = x_best[k] + sigma * (vertex.0[k] - x_best[k]);
                }
                vertex.1 = eval(&vertex.0);
                evals += 1;
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex_cmp(&a.0, &b.0)));
        if simplex[0].1 <= best_f {
            best = simplex[0].0.clone();
            best_f = simplex[0].1;
        }
        if evals >= opts.max_evals {
            break;
        }
    }
    Minimum {
        x: best,
        f: best_f,
        evals,
        converged: converged && best_f.is_finite(),
    }
}

pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Start points for a multistart run: the box centre first, then seeded
/// uniform samples of the shrunk box.
pub fn start_points(domain: &BoxDomain, n_starts: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_starts);
    if n_starts > 0 {
        out.push(domain.center());
    }
    while out.len() < n_starts {
        out.push(domain.sample(&mut rng));
    }
    out
}

#[derive(Clone, Debug)]
pub struct MultistartResult {
    pub best: Option<Minimum>,
    pub runs: Vec<Minimum>,
}

impl MultistartResult {
    pub fn converged_fraction(&self) -> f64 {
        if self.runs.is_empty() {
            return 0.0;
        }
        self.runs.iter().filter(|r| r.converged).count() as f64 / self.runs.len() as f64
    }
}

/// Minimise `f` over the shrunk box from `n_starts` seeded starts. Points
/// outside the shrunk box evaluate to +∞. Starts whose value is not finite
/// are skipped. Results are independent of thread scheduling.
pub fn multistart<F>(f: F, domain: &BoxDomain, n_starts: usize, seed: u64, opts: &NelderMeadOptions) -> MultistartResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let bounded = |x: &[f64]| {
        if domain.contains_shrunk(x) {
            f(x)
        } else {
            f64::INFINITY
        }
    };
    let step: Vec<f64> = domain.widths().iter().map(|w| 0.1 * w).collect();
    let starts = start_points(domain, n_starts, seed);
    let runs: Vec<Minimum> = starts
        .par_iter()
        .filter_map(|s| {
            if !bounded(s).is_finite() {
                return None;
            }
            Some(nelder_mead(bounded, s, &step, opts))
        })
        .collect();
    let best = select_best(&runs);
    MultistartResult { best, runs }
}

/// Smallest value; values within a relative 1e-12 of each other are tied
/// and resolved by the lexicographically smallest point.
pub fn select_best(runs: &[Minimum]) -> Option<Minimum> {
    let fmin = runs.iter().filter(|r| r.f.is_finite()).map(|r| r.f).fold(f64::INFINITY, f64::min);
    if !fmin.is_finite() {
        return None;
    }
    let tie = 1e-12 * (1.0 + fmin.abs());
    runs.iter()
        .filter(|r| r.f <= fmin + tie)
        .min_by(|a, b| lex_cmp(&a.x, &b.x))
        .cloned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &[0.1, 0.1], &NelderMeadOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m);
    }

    #[test]
    fn multistart_finds_global_minimum_deterministically() {
        let dom = BoxDomain::cube(2, -3.0, 3.0, 1e-3).unwrap();
        let f = |x: &[f64]| (x[0] * x[0] - 2.0).powi(2) + (x[1] - 0.5).powi(2) + 0.1 * x[0];
        let a = multistart(f, &dom, 32, 11, &NelderMeadOptions::default());
        let b = multistart(f, &dom, 32, 11, &NelderMeadOptions::default());
        let (a, b) = (a.best.unwrap(), b.best.unwrap());
        assert_eq!(a.x, b.x);
        assert!(a.x[0] < 0.0);
    }

    #[test]
    fn centre_is_first_start() {
        let dom = BoxDomain::new(vec![0.0, 2.0], vec![1.0, 4.0], 1e-3).unwrap();
        let s = start_points(&dom, 3, 0);
        assert_eq!(s[0], vec![0.5, 3.0]);
        assert!(s[1..].iter().all(|p| dom.contains_shrunk(p)));
    }
}
