//! Cross-method consistency checks.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::blowup::{bounded_combination_check, catastrophe_search};
use crate::characteristics::InitialField;
use crate::complex2d::{det_from_wirtinger, ComplexSystem2D};
use crate::demos::{demo_names, load_demo, Demo};
use crate::error::{Error, Result};
use crate::hodograph::{HodographSystem, DEFAULT_TOL_REAL};
use crate::mappings::catalog_entry;
use crate::potential::PotentialSystem;
use crate::problem::Problem;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed error (or the measured quantity).
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64, detail: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
            detail: detail.into(),
        }
    }

    fn failed(name: impl Into<String>, detail: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            passed: false,
            value: f64::NAN,
            tolerance: f64::NAN,
            detail: detail.into(),
        }
    }
}

pub const PDE_STEP: f64 = 1e-5;
/// Points count as regular when the smallest singular value of M (or of
/// `I + U0 t`) is at least this.
pub const REGULAR_SIGMA: f64 = 0.25;
pub const PDE_TOL: f64 = 1e-6;

/// Largest relative error of the blow-up polynomial coefficients against
/// `det J` (constant term) and `tr J` (next-to-leading term).
pub fn charpoly_error(sys: &HodographSystem, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sys.dim();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let u = sys.domain().sample(&mut rng);
        let j = sys.jacobian(&u)?;
        let p = sys.charpoly(&u)?;
        let d = crate::linalg::det(&j);
        let tr = j.trace();
        worst = worst.max((p.coeffs[0] - d).abs() / (1.0 + d.abs()));
        worst = worst.max((p.coeffs[n - 1] - tr).abs() / (1.0 + tr.abs()));
    }
    Ok(worst)
}

/// PDE residual at `count` random regular points `(x, t)` with
/// `0 ≤ t ≤ 0.8 × (first positive branch at u)` and `σ_min(M) ≥ REGULAR_SIGMA`. Returns the worst residual
/// and the number of points evaluated.
pub fn hodograph_pde_residuals(sys: &HodographSystem, count: usize, seed: u64) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    let mut tries = 0;
    while done < count && tries < 50 * count {
        tries += 1;
        let u = sys.domain().sample(&mut rng);
        let Ok(b) = sys.real_branches(&u, DEFAULT_TOL_REAL) else { continue };
        let t_max = 0.8 * b.smallest_positive().unwrap_or(1.25).min(1.25);
        let t = t_max * rng.random::<f64>();
        let Ok(m) = sys.build_m(&u, t) else { continue };
        if m.singular_values().min() < REGULAR_SIGMA {
            continue;
        }
        let Ok(x) = sys.map_forward(&u, t) else { continue };
        match sys.pde_residual(&x, t, PDE_STEP, &u) {
            Ok(r) => {
                worst = worst.max(r);
                done += 1;
            }
            Err(Error::SingularNearBlowup { .. }) | Err(Error::LeftDomain { .. }) | Err(Error::Eval(_)) => {}
            Err(_) => {
                worst = f64::INFINITY;
                done += 1;
            }
        }
    }
    (worst, done)
}

/// As [`hodograph_pde_residuals`], for initial data along characteristics.
pub fn field_pde_residuals(field: &InitialField, count: usize, seed: u64) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    let mut tries = 0;
    let inner = field
        .sample_box()
        .with_margin(0.1)
        .expect("margin 0.1 is valid");
    while done < count && tries < 50 * count {
        tries += 1;
        let x0 = inner.sample(&mut rng);
        let Ok(first) = field.min_positive_eigentime(&x0) else { continue };
        let t_max = 0.8 * first.unwrap_or(1.25).min(1.25);
        let t = t_max * rng.random::<f64>();
        let Ok(m) = field.deformation(&x0, t) else { continue };
        if m.singular_values().min() < REGULAR_SIGMA {
            continue;
        }
        let Some(x) = field.push(&x0, t) else { continue };
        match field.pde_residual(&x, t, PDE_STEP, &x0) {
            Ok(r) => {
                worst = worst.max(r);
                done += 1;
            }
            Err(Error::SingularNearBlowup { .. }) | Err(Error::LeftDomain { .. }) | Err(Error::Eval(_)) => {}
            Err(_) => {
                worst = f64::INFINITY;
                done += 1;
            }
        }
    }
    (worst, done)
}

/// `|det M − (F_V+t)(conj F_V+t) + |F_V̄|²|` relative to the scale of M.
pub fn factorization_error(sys: &HodographSystem, samples: usize, seed: u64) -> Result<f64> {
    let cs = ComplexSystem2D::new(sys.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let u = sys.domain().sample(&mut rng);
        let t = -3.0 + 6.0 * rng.random::<f64>();
        let m = sys.build_m(&u, t)?;
        let (fv, fvb) = cs.wirtinger(u[0], u[1])?;
        let c = det_from_wirtinger(fv, fvb, t);
        let scale = 1.0 + crate::linalg::det_scale(&m);
        worst = worst.max((crate::linalg::det(&m) - c.re).abs() / scale).max(c.im.abs() / scale);
    }
    Ok(worst)
}

/// Worst `||μ| − 1|` over real branch points with `|F_V̄| > 1e-6`, and the
/// number of such points.
pub fn beltrami_unit_error(sys: &HodographSystem, samples: usize, seed: u64) -> Result<(f64, usize)> {
    let cs = ComplexSystem2D::new(sys.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut used = 0;
    for _ in 0..samples {
        let u = sys.domain().sample(&mut rng);
        let (_, fvb) = cs.wirtinger(u[0], u[1])?;
        if fvb.norm() <= 1e-6 {
            continue;
        }
        for t in sys.real_branches(&u, DEFAULT_TOL_REAL)?.values() {
            match cs.beltrami_mu(u[0], u[1], t) {
                Ok(mu) => {
                    worst = worst.max((mu.abs_mu - 1.0).abs());
                    used += 1;
                }
                Err(Error::DegenerateDenominator) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok((worst, used))
}

/// Fraction of samples where a potential system has n real branches from
/// both the symmetric and the general eigen-solver.
pub fn potential_real_fraction(p: &PotentialSystem, samples: usize, seed: u64) -> Result<f64> {
    let sys = p.system();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = 0;
    for _ in 0..samples {
        let u = sys.domain().sample(&mut rng);
        let sym = p.potential_branches(&u)?.values().len();
        let gen = sys.real_branches(&u, DEFAULT_TOL_REAL)?.values().len();
        if sym == sys.dim() && gen == sys.dim() {
            ok += 1;
        }
    }
    Ok(ok as f64 / samples as f64)
}

/// Worst `|closed form − det M|` over random `(u, t)`.
pub fn catalog_error(name: &str, samples: usize, seed: u64) -> Result<f64> {
    let entry = catalog_entry(name).ok_or_else(|| Error::Unsupported(format!("no catalog entry {name}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let u = entry.system.domain().sample(&mut rng);
        let t = -3.0 + 6.0 * rng.random::<f64>();
        let d = entry.system.det_m(&u, t)?;
        worst = worst.max((entry.closed_form(&u, t)? - d).abs() / (1.0 + d.abs()));
    }
    Ok(worst)
}

/// Hodograph first catastrophe against the direct characteristics search.
pub fn cross_method_gap(demo: &Demo, starts: usize, seed: u64) -> Result<f64> {
    let sys = demo
        .hodograph
        .as_ref()
        .and_then(Problem::system)
        .ok_or_else(|| Error::Unsupported("demo has no hodograph data".into()))?;
    let field = demo
        .initial_data
        .as_ref()
        .and_then(Problem::field)
        .ok_or_else(|| Error::Unsupported("demo has no initial data".into()))?;
    let a = catastrophe_search(sys, true, starts, seed)?;
    let b = field.direct_catastrophe(starts, seed)?;
    Ok((a.t_c - b.t_c).abs())
}

fn record(out: &mut Vec<Check>, name: String, tol: f64, r: Result<f64>, detail: &str) {
    out.push(match r {
        Ok(v) => Check::new(name, v, tol, detail),
        Err(e) => Check::failed(name, e.to_string()),
    });
}

/// Checks that apply to a single problem.
pub fn problem_checks(label: &str, p: &Problem, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    if let Some(sys) = p.system() {
        record(&mut out, format!("{label}: blow-up polynomial coefficients"), 1e-10, charpoly_error(sys, 200, seed), "a0 = det J, a(n-1) = tr J");
        let (worst, done) = hodograph_pde_residuals(sys, 50, seed);
        out.push(if done == 50 {
            Check::new(format!("{label}: PDE residual (hodograph)"), worst, PDE_TOL, "50 regular points")
        } else {
            Check::failed(format!("{label}: PDE residual (hodograph)"), format!("only {done} regular points found"))
        });
        if sys.dim() == 2 {
            record(&mut out, format!("{label}: complex factorisation of det M"), 1e-10, factorization_error(sys, 200, seed), "relative to the row-norm scale");
            match beltrami_unit_error(sys, 200, seed) {
                Ok((_, 0)) => {}
                Ok((w, k)) => out.push(Check::new(format!("{label}: |mu| = 1 on branches"), w, 1e-8, format!("{k} branch points"))),
                Err(e) => out.push(Check::failed(format!("{label}: |mu| = 1 on branches"), e.to_string())),
            }
        }
    }
    if let Some(pot) = p.potential() {
        out.push(match potential_real_fraction(pot, 200, seed) {
            Ok(f) => Check::new(format!("{label}: potential branches real"), 1.0 - f, 0.0, "all n branches real"),
            Err(e) => Check::failed(format!("{label}: potential branches real"), e.to_string()),
        });
    }
    if let Some(field) = p.field() {
        let (worst, done) = field_pde_residuals(field, 50, seed);
        out.push(if done == 50 {
            Check::new(format!("{label}: PDE residual (characteristics)"), worst, PDE_TOL, "50 regular points")
        } else {
            Check::failed(format!("{label}: PDE residual (characteristics)"), format!("only {done} regular points found"))
        });
    }
    out
}

/// The full suite over every built-in demo.
pub fn demo_suite(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for name in demo_names() {
        let demo = match load_demo(name, &[]) {
            Ok(Some(d)) => d,
            Ok(None) => continue,
            Err(e) => {
                out.push(Check::failed(format!("{name}: load"), e.to_string()));
                continue;
            }
        };
        for p in demo.hodograph.iter().chain(&demo.initial_data) {
            out.extend(problem_checks(name, p, seed));
        }
        if demo.hodograph.is_some() && demo.initial_data.is_some() {
            record(&mut out, format!("{name}: hodograph vs characteristics t_c"), 1e-5, cross_method_gap(&demo, 64, seed), "first positive catastrophe");
        }
        if catalog_entry(name).is_some() {
            record(&mut out, format!("{name}: closed-form Jacobian"), 1e-10, catalog_error(name, 1000, seed), "1000 samples");
        }
    }
    out.push(ex61_blowup_exponents(seed));
    out
}

/// Derivative blow-up exponents at the first catastrophe of the tanh shear example.
pub fn ex61_blowup_exponents(seed: u64) -> Check {
    let name = "ex61: blow-up exponents at the catastrophe";
    let run = || -> Result<(f64, f64)> {
        let demo = load_demo("ex61", &[]).ok().flatten().expect("built-in demo");
        let sys = demo.hodograph.as_ref().and_then(Problem::system).expect("hodograph side");
        let rep = catastrophe_search(sys, true, 64, seed)?;
        let eps = [1e-3, 5e-4, 2.5e-4, 1.25e-4];
        let b = bounded_combination_check(sys, &rep.u_c, rep.t_c, &eps)?;
        Ok(((b.norm_slope - b.expected_slope).abs(), b.max_combination_slope()))
    };
    match run() {
        Ok((a, b)) => Check::new(name, a.max(b), 0.1, format!("norm slope error {a:.3e}, bounded slopes {b:.3e}")),
        Err(e) => Check::failed(name, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ex61_checks_pass() {
        let d = load_demo("ex61", &[]).unwrap().unwrap();
        let checks = problem_checks("ex61", d.hodograph.as_ref().unwrap(), 0);
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
        assert!(checks.len() >= 4);
        assert!(ex61_blowup_exponents(0).passed);
    }

    #[test]
    fn catalog_closed_forms() {
        for name in crate::mappings::CATALOG {
            assert!(catalog_error(name, 200, 1).unwrap() < 1e-10, "{name}");
        }
    }
}
