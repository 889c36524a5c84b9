//! The hodograph relations as a family of maps `u ↦ x = u t + f(u)`:
//! singular loci, their evolution in t, collapse along null directions,
//! and a catalog of stable singularities with closed-form Jacobians.

use rayon::prelude::*;
use serde::Serialize;

use crate::blowup::{loglog_slope, normal_form, null_space, DEFAULT_RANK_TOL};
use crate::characteristics::InitialField;
use crate::contour::{self, Lattice, Located, Polyline};
use crate::error::{Error, Result};
use crate::expr::{parse, BoxDomain, Expression, VectorFunction, DEFAULT_MARGIN};
use crate::hodograph::HodographSystem;
use crate::linalg;

#[derive(Clone, Debug, PartialEq)]
pub struct SingularLocus {
    pub t: f64,
    /// Zero curves of det M in u-space (2D systems).
    pub polylines: Vec<Polyline>,
    /// Refined zero points on lattice edges (any dimension).
    pub points: Vec<Vec<f64>>,
    pub empty: bool,
}

/// Lattice over the shrunk box of a domain.
pub fn domain_lattice(domain: &BoxDomain, per_axis: usize) -> Lattice {
    let (lo, hi) = domain.shrunk();
    Lattice::uniform(lo, hi, per_axis)
}

pub fn singular_locus(sys: &HodographSystem, t: f64, lat: &Lattice) -> Result<SingularLocus> {
    if lat.dim() != sys.dim() {
        return Err(Error::Dimension {
            expected: sys.dim(),
            found: lat.dim(),
        });
    }
    let field = |u: &[f64]| sys.det_m(u, t).ok();
    let empty = SingularLocus {
        t,
        polylines: Vec::new(),
        points: Vec::new(),
        empty: true,
    };
    match contour::locate(lat, &field) {
        Located::Uniform { values } => {
            // Exact zeros on nodes without a strict sign change.
            let points: Vec<Vec<f64>> = values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v == 0.0)
                .map(|(i, _)| lat.node(i))
                .collect();
            if points.is_empty() {
                Ok(empty)
            } else {
                Ok(SingularLocus {
                    t,
                    polylines: Vec::new(),
                    points,
                    empty: false,
                })
            }
        }
        Located::PointOnly(p) => Ok(SingularLocus {
            t,
            polylines: Vec::new(),
            points: vec![p],
            empty: false,
        }),
        Located::SignChange { lattice, values, .. } => {
            let (points, _) = contour::sign_change_points(&lattice, &values, &field);
            let polylines = if lattice.dim() == 2 {
                contour::marching_squares(&lattice, &values, &field)
            } else {
                Vec::new()
            };
            Ok(SingularLocus {
                t,
                polylines,
                points,
                empty: false,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub nonempty: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timeline {
    pub samples: Vec<(f64, bool)>,
    /// Maximal runs of equal emptiness; inner endpoints refined by bisection.
    pub intervals: Vec<Interval>,
}

impl Timeline {
    pub fn is_singular_at(&self, t: f64) -> Option<bool> {
        self.intervals.iter().find(|iv| iv.lo <= t && t <= iv.hi).map(|iv| iv.nonempty)
    }
}

pub const TIMELINE_SAMPLES: usize = 200;
pub const TIMELINE_TOL: f64 = 1e-7;

/// Emptiness of the singular locus over `[t_lo, t_hi]`.
pub fn singularity_timeline(sys: &HodographSystem, t_lo: f64, t_hi: f64, samples: usize, lat: &Lattice) -> Result<Timeline> {
    if !(t_lo < t_hi) || !t_lo.is_finite() || !t_hi.is_finite() {
        return Err(Error::Unsupported(format!("invalid time range {t_lo}:{t_hi}")));
    }
    let samples = samples.max(TIMELINE_SAMPLES);
    // det M(u, ·) at every node as a polynomial in t.
    let coeffs: Vec<Option<Vec<f64>>> = (0..lat.len())
        .into_par_iter()
        .map(|i| sys.charpoly(&lat.node(i)).ok().map(|p| p.coeffs))
        .collect();
    let nonempty = |t: f64| -> bool {
        let values: Vec<f64> = coeffs
            .iter()
            .map(|c| c.as_ref().map_or(f64::NAN, |c| linalg::eval_monic(c, t)))
            .collect();
        if values.contains(&0.0) {
            return true;
        }
        let field = |u: &[f64]| sys.det_m(u, t).ok();
        !matches!(contour::locate_from(lat, values, &field), Located::Uniform { .. })
    };
    // Samples plus midpoints: the midpoints are the aliasing guard.
    let m = 2 * samples - 1;
    let ts: Vec<f64> = (0..m)
        .map(|k| if k + 1 == m { t_hi } else { t_lo + (t_hi - t_lo) * k as f64 / (m - 1) as f64 })
        .collect();
    let flags: Vec<bool> = ts.par_iter().map(|&t| nonempty(t)).collect();
    let mut intervals: Vec<Interval> = Vec::new();
    let mut lo = t_lo;
    for k in 1..m {
        if flags[k] != flags[k - 1] {
            let (mut a, mut b) = (ts[k - 1], ts[k]);
            while b - a > TIMELINE_TOL {
                let mid = 0.5 * (a + b);
                if nonempty(mid) == flags[k - 1] {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let edge = 0.5 * (a + b);
            intervals.push(Interval {
                lo,
                hi: edge,
                nonempty: flags[k - 1],
            });
            lo = edge;
        }
    }
    intervals.push(Interval {
        lo,
        hi: t_hi,
        nonempty: flags[m - 1],
    });
    Ok(Timeline {
        samples: ts.into_iter().zip(flags).collect(),
        intervals,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollapseReport {
    pub deltas: Vec<f64>,
    /// Log-log slope of `‖δx‖` along each right null vector R.
    pub null_slopes: Vec<f64>,
    /// Log-log slope of `|L·δx|` for a generic direction, per left null vector.
    pub generic_slopes: Vec<f64>,
    /// All second derivatives vanish in the null directions (cubic collapse).
    pub degenerate: bool,
    /// Minimum slope accepted: 1.8, or 2.8 in the degenerate case.
    pub required: f64,
    pub passed: bool,
}

pub fn collapse_probe(sys: &HodographSystem, u0: &[f64], t0: f64, deltas: &[f64]) -> Result<CollapseReport> {
    let ns = null_space(sys, u0, t0, DEFAULT_RANK_TOL)?;
    let degenerate = normal_form(sys, u0, t0)?.degenerate;
    let x0 = sys.map_forward(u0, t0)?;
    let n = sys.dim();
    let dx = |du: &[f64]| -> Result<Vec<f64>> {
        let u: Vec<f64> = u0.iter().zip(du).map(|(a, b)| a + b).collect();
        let x = sys.map_forward(&u, t0)?;
        Ok(x.iter().zip(&x0).map(|(a, b)| a - b).collect())
    };
    let mut null_slopes = Vec::new();
    for r in &ns.right {
        let mut norms = Vec::new();
        for &d in deltas {
            let du: Vec<f64> = r.iter().map(|x| x * d).collect();
            norms.push(dx(&du)?.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        null_slopes.push(loglog_slope(deltas, &norms));
    }
    let generic: Vec<f64> = (0..n).map(|k| 1.0 / (k as f64 + 1.3)).collect();
    let gnorm = generic.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut generic_slopes = Vec::new();
    for l in &ns.left {
        let mut vals = Vec::new();
        for &d in deltas {
            let du: Vec<f64> = generic.iter().map(|x| x * d / gnorm).collect();
            let v: f64 = dx(&du)?.iter().zip(l).map(|(a, b)| a * b).sum();
            vals.push(v);
        }
        generic_slopes.push(loglog_slope(deltas, &vals));
    }
    let required = if degenerate { 2.8 } else { 1.8 };
    let passed = null_slopes.iter().chain(&generic_slopes).all(|&s| s >= required);
    Ok(CollapseReport {
        deltas: deltas.to_vec(),
        null_slopes,
        generic_slopes,
        degenerate,
        required,
        passed,
    })
}

/// `det U0 / det(I + U0 t)`: Jacobian of x ↦ u along the solution.
pub fn eulerian_jacobian(field: &InitialField, x0: &[f64], t: f64) -> Result<f64> {
    let den = field.det_deformation(x0, t)?;
    if den.abs() < 1e-12 {
        return Err(Error::BlowupTime);
    }
    Ok(linalg::det(&field.gradient(x0)?) / den)
}

/// One of the stable-singularity deformations.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub system: HodographSystem,
    /// det M as an expression in `(u1, …, un, t)`.
    pub closed_form_j: Expression,
    /// The single `u`-dependent factor `det M(u, 0)/(1+t)^{n-1}|_{t=0} + t`
    /// whose zero set is the singular locus away from `t = −1`.
    pub branch_factor: Expression,
}

pub const CATALOG: [&str; 5] = ["fold2d", "cusp2d", "fold3d", "cusp3d", "swallowtail"];

pub fn catalog_entry(name: &str) -> Option<CatalogEntry> {
    let (f, j, factor): (&[&str], &str, &str) = match name {
        "fold2d" => (&["u1^2", "u2"], "(1 + t)*(2*u1 + t)", "2*u1 + t"),
        "cusp2d" => (&["u1^3 + u1*u2", "u2"], "(1 + t)*(3*u1^2 + u2 + t)", "3*u1^2 + u2 + t"),
        "fold3d" => (&["u1^2", "u2", "u3"], "(1 + t)^2*(2*u1 + t)", "2*u1 + t"),
        "cusp3d" => (
            &["u1^3 + u1*u2", "u2", "u3"],
            "(1 + t)^2*(3*u1^2 + u2 + t)",
            "3*u1^2 + u2 + t",
        ),
        "swallowtail" => (
            &["u1^4 + u1^2*u2 + u1*u3", "u2", "u3"],
            "(1 + t)^2*(4*u1^3 + 2*u1*u2 + u3 + t)",
            "4*u1^3 + 2*u1*u2 + u3 + t",
        ),
        _ => return None,
    };
    let name = CATALOG.iter().copied().find(|c| *c == name)?;
    let n = f.len();
    let vars: Vec<String> = (1..=n).map(|k| format!("u{k}")).collect();
    let mut vars_t = vars.clone();
    vars_t.push("t".into());
    let comps = f.iter().map(|c| parse(c, &vars).expect("catalog expression")).collect();
    let vf = VectorFunction::from_components(comps).expect("catalog shape");
    let domain = BoxDomain::cube(n, -2.0, 2.0, DEFAULT_MARGIN).expect("catalog box");
    Some(CatalogEntry {
        name,
        system: HodographSystem::new(vf, domain).expect("catalog system"),
        closed_form_j: parse(j, &vars_t).expect("catalog Jacobian"),
        branch_factor: parse(factor, &vars_t).expect("catalog factor"),
    })
}

impl CatalogEntry {
    pub fn closed_form(&self, u: &[f64], t: f64) -> Result<f64> {
        let mut p = u.to_vec();
        p.push(t);
        Ok(self.closed_form_j.eval(&p)?)
    }

    pub fn factor(&self, u: &[f64], t: f64) -> Result<f64> {
        let mut p = u.to_vec();
        p.push(t);
        Ok(self.branch_factor.eval(&p)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(components: &[&str], lo: f64, hi: f64) -> HodographSystem {
        let vars = ["u", "v"];
        let f = VectorFunction::from_components(components.iter().map(|c| parse(c, &vars).unwrap()).collect()).unwrap();
        HodographSystem::new(f, BoxDomain::cube(2, lo, hi, 1e-3).unwrap()).unwrap()
    }

    #[test]
    fn map_forward_examples() {
        let fold = catalog_entry("fold2d").unwrap();
        assert_eq!(fold.system.map_forward(&[1.0, 1.0], 0.0).unwrap(), vec![1.0, 1.0]);
        let sw = catalog_entry("swallowtail").unwrap();
        assert_eq!(sw.system.map_forward(&[0.0; 3], 3.7).unwrap(), vec![0.0; 3]);
        let cusp = catalog_entry("cusp2d").unwrap();
        assert_eq!(cusp.system.map_forward(&[1.0, 1.0], 1.0).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn fold_locus_is_vertical_line() {
        let fold = catalog_entry("fold2d").unwrap();
        let t = 0.6;
        let lat = domain_lattice(fold.system.domain(), 41);
        let loc = singular_locus(&fold.system, t, &lat).unwrap();
        assert!(!loc.empty);
        assert_eq!(loc.polylines.len(), 1);
        for p in &loc.polylines[0].points {
            assert!((p[0] + t / 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn nonsingular_map_has_empty_locus() {
        let s = sys(&["-u^3/3 + 2*v^3/3 - u + 2*v", "u^3/3 - v^3/3 + u - v"], -3.0, 3.0);
        let loc = singular_locus(&s, 0.0, &domain_lattice(s.domain(), 81)).unwrap();
        assert!(loc.empty);
    }

    #[test]
    fn collapse_on_fold() {
        let fold = catalog_entry("fold2d").unwrap();
        let t = 0.5;
        let r = collapse_probe(&fold.system, &[-t / 2.0, 0.3], t, &[1e-2, 5e-3, 2.5e-3, 1.25e-3]).unwrap();
        assert!(!r.degenerate);
        assert!(r.passed, "{r:?}");
        assert!((r.null_slopes[0] - 2.0).abs() < 1e-6);
        let id = sys(&["0", "0"], -1.0, 1.0);
        assert!(matches!(collapse_probe(&id, &[0.0, 0.0], 1.0, &[1e-2, 1e-3]), Err(Error::NotSingular { .. })));
    }

    #[test]
    fn eulerian_jacobian_examples() {
        let vars = ["x"];
        let u0 = VectorFunction::from_components(vec![parse("-x", &vars).unwrap()]).unwrap();
        let field = InitialField::new(u0, BoxDomain::cube(1, -1.0, 1.0, 1e-3).unwrap()).unwrap();
        assert_eq!(eulerian_jacobian(&field, &[0.2], 0.0).unwrap(), -1.0);
        assert!((eulerian_jacobian(&field, &[0.2], 0.5).unwrap() + 2.0).abs() < 1e-15);
        assert!(matches!(eulerian_jacobian(&field, &[0.2], 1.0), Err(Error::BlowupTime)));
    }
}
