//! First gradient catastrophe and the fine structure of M at a blow-up:
//! null vectors, adjugate, bounded derivative combinations, normal forms.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hodograph::{BranchSelector, HodographSystem, DEFAULT_TOL_REAL};
use crate::linalg;
use crate::optimize::{multistart, NelderMeadOptions};

pub const DEFAULT_STARTS: usize = 64;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_RANK_TOL: f64 = 1e-6;
/// Optima closer than this fraction of the side length to the search box
/// are flagged as boundary-adjacent.
pub const BOUNDARY_FLAG: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchKind {
    /// Gradient catastrophe, t_c > 0.
    #[serde(rename = "GC")]
    Gc,
    Blowup,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatastropheReport {
    pub t_c: f64,
    pub u_c: Vec<f64>,
    pub x_c: Vec<f64>,
    pub branch_kind: BranchKind,
    pub n_starts: usize,
    pub converged_fraction: f64,
    /// The optimum sits against the (shrunk) search box, so it may be an
    /// infimum approached toward an open boundary rather than a catastrophe.
    pub boundary: bool,
    /// `|det M(u_c, t_c)|` divided by the product of the row norms of M.
    pub relative_det: f64,
    /// Lagrangian label of the catastrophe (characteristics searches only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0_c: Option<Vec<f64>>,
}

/// Minimise the selected branch value over the domain. `LargestNegative`
/// maximises (the latest blow-up at negative times).
pub fn catastrophe_search_by(
    sys: &HodographSystem,
    selector: BranchSelector,
    n_starts: usize,
    seed: u64,
) -> Result<CatastropheReport> {
    let sign = if selector == BranchSelector::LargestNegative { -1.0 } else { 1.0 };
    let phi = |u: &[f64]| -> f64 {
        match sys.real_branches(u, DEFAULT_TOL_REAL) {
            Ok(b) => b.select(selector).map_or(f64::INFINITY, |t| sign * t),
            Err(_) => f64::INFINITY,
        }
    };
    let res = multistart(phi, sys.domain(), n_starts, seed, &NelderMeadOptions::default());
    let fraction = res.converged_fraction();
    let best = res.best.ok_or(Error::NoBranch)?;
    let t_c = sign * best.f;
    let u_c = best.x;
    let x_c = sys.map_forward(&u_c, t_c)?;
    let m = sys.build_m(&u_c, t_c)?;
    let relative_det = linalg::det(&m).abs() / linalg::det_scale(&m).max(f64::MIN_POSITIVE);
    Ok(CatastropheReport {
        t_c,
        x_c,
        branch_kind: if t_c > 0.0 { BranchKind::Gc } else { BranchKind::Blowup },
        n_starts,
        converged_fraction: fraction,
        boundary: sys.domain().relative_clearance(&u_c) < BOUNDARY_FLAG,
        relative_det,
        u_c,
        x0_c: None,
    })
}

pub fn catastrophe_search(sys: &HodographSystem, want_positive: bool, n_starts: usize, seed: u64) -> Result<CatastropheReport> {
    let sel = if want_positive {
        BranchSelector::SmallestPositive
    } else {
        BranchSelector::LargestNegative
    };
    catastrophe_search_by(sys, sel, n_starts, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NullSpaceData {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// `M R = 0`.
    pub right: Vec<Vec<f64>>,
    /// `Lᵀ M = 0`.
    pub left: Vec<Vec<f64>>,
    pub adjugate: Vec<Vec<f64>>,
    /// `M̃ R̃ = 0`.
    pub adj_right: Vec<Vec<f64>>,
    /// `L̃ᵀ M̃ = 0`.
    pub adj_left: Vec<Vec<f64>>,
    /// `tr M̃`, the coefficient of the linear term of det M(t₀ + ε).
    pub a1: f64,
}

/// First clearly nonzero entry made positive, for reproducible output.
fn fix_sign(mut v: DVector<f64>) -> Vec<f64> {
    let big = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-8 * big) {
        if first < 0.0 {
            v = -v;
        }
    }
    v.iter().map(|&x| if x == 0.0 { 0.0 } else { x }).collect()
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Right and left null bases of `m` at relative tolerance `tol`.
fn null_bases(m: &DMatrix<f64>, tol: f64) -> (usize, Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let s = linalg::svd(m);
    let smax = s.sigma[0];
    let rank = if smax == 0.0 {
        0
    } else {
        s.sigma.iter().filter(|&&x| x > tol * smax).count()
    };
    let n = m.nrows();
    let right = (rank..n).map(|k| fix_sign(s.v.column(k).into_owned())).collect();
    let left = (rank..n).map(|k| fix_sign(s.u.column(k).into_owned())).collect();
    (rank, s.sigma, right, left)
}

pub fn null_space(sys: &HodographSystem, u: &[f64], t0: f64, tol: f64) -> Result<NullSpaceData> {
    let m = sys.build_m(u, t0)?;
    null_space_of(&m, tol)
}

pub fn null_space_of(m: &DMatrix<f64>, tol: f64) -> Result<NullSpaceData> {
    let s = linalg::svd(m);
    let smax = s.sigma[0];
    let smin = *s.sigma.last().unwrap();
    let ratio = if smax == 0.0 { 0.0 } else { smin / smax };
    if ratio > 1e-6 {
        return Err(Error::NotSingular { ratio });
    }
    let tol = tol.max(ratio * (1.0 + 1e-12));
    let (rank, singular_values, right, left) = null_bases(m, tol);
    let adj = linalg::adjugate(m);
    let (_, _, adj_right, adj_left) = null_bases(&adj, DEFAULT_RANK_TOL);
    Ok(NullSpaceData {
        rank,
        singular_values,
        right,
        left,
        a1: adj.trace(),
        adjugate: rows(&adj),
        adj_right,
        adj_left,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundedReport {
    pub eps: Vec<f64>,
    pub norms: Vec<f64>,
    /// Log-log slope of the Frobenius norm of ∂u/∂x against ε.
    pub norm_slope: f64,
    /// −1 for a simple blow-up, −2 when `A_1 = 0`.
    pub expected_slope: f64,
    /// Slopes of `‖∂u/∂x · R̃‖` for each adjugate right null vector.
    pub right_slopes: Vec<f64>,
    /// Slopes of `‖L̃ᵀ · ∂u/∂x‖` for each adjugate left null vector.
    pub left_slopes: Vec<f64>,
}

impl BoundedReport {
    pub fn max_combination_slope(&self) -> f64 {
        self.right_slopes
            .iter()
            .chain(&self.left_slopes)
            .fold(0.0f64, |m, s| m.max(s.abs()))
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.abs().ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn bounded_combination_check(sys: &HodographSystem, u0: &[f64], t0: f64, eps_list: &[f64]) -> Result<BoundedReport> {
    let ns = null_space(sys, u0, t0, DEFAULT_RANK_TOL)?;
    let scale = linalg::det_scale(&sys.build_m(u0, t0)?).max(1.0);
    let a1_zero = ns.a1.abs() <= 1e-8 * scale;
    let mut norms = Vec::new();
    let mut rc: Vec<Vec<f64>> = vec![Vec::new(); ns.adj_right.len()];
    let mut lc: Vec<Vec<f64>> = vec![Vec::new(); ns.adj_left.len()];
    for &e in eps_list {
        let m = sys.build_m(u0, t0 + e)?;
        let d = linalg::det(&m);
        let inv = linalg::inverse(&m).ok_or(Error::SingularNearBlowup {
            det: d,
            scale: linalg::det_scale(&m),
        })?;
        norms.push(inv.norm());
        for (k, r) in ns.adj_right.iter().enumerate() {
            rc[k].push((&inv * DVector::from_column_slice(r)).norm());
        }
        for (k, l) in ns.adj_left.iter().enumerate() {
            lc[k].push((DVector::from_column_slice(l).transpose() * &inv).norm());
        }
    }
    Ok(BoundedReport {
        eps: eps_list.to_vec(),
        norm_slope: loglog_slope(eps_list, &norms),
        norms,
        expected_slope: if a1_zero { -2.0 } else { -1.0 },
        right_slopes: rc.iter().map(|y| loglog_slope(eps_list, y)).collect(),
        left_slopes: lc.iter().map(|y| loglog_slope(eps_list, y)).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalFormData {
    /// `φ̃^β_kl = ½ Σ_i ∂²f_i/∂u_k∂u_l L^β_i`, one matrix per left null vector.
    pub phi_tilde: Vec<Vec<Vec<f64>>>,
    /// `φ^{αβ}_i = ½ Σ_kl ∂²f_i/∂u_k∂u_l R^α_k R^β_l`, indexed `[α][β][i]`.
    pub phi: Vec<Vec<Vec<f64>>>,
    /// Every entry of both families is below 1e-10 in magnitude.
    pub degenerate: bool,
}

pub fn normal_form(sys: &HodographSystem, u0: &[f64], t0: f64) -> Result<NormalFormData> {
    let ns = null_space(sys, u0, t0, DEFAULT_RANK_TOL)?;
    let h = sys.f().hessians(u0)?;
    let n = sys.dim();
    let phi_tilde: Vec<Vec<Vec<f64>>> = ns
        .left
        .iter()
        .map(|l| {
            let mut m = DMatrix::zeros(n, n);
            for (i, hi) in h.iter().enumerate() {
                m += hi * (0.5 * l[i]);
            }
            rows(&m)
        })
        .collect();
    let phi: Vec<Vec<Vec<f64>>> = ns
        .right
        .iter()
        .map(|ra| {
            let ra = DVector::from_column_slice(ra);
            ns.right
                .iter()
                .map(|rb| {
                    let rb = DVector::from_column_slice(rb);
                    h.iter().map(|hi| 0.5 * ra.dot(&(hi * &rb))).collect()
                })
                .collect()
        })
        .collect();
    let degenerate = phi_tilde
        .iter()
        .flatten()
        .flatten()
        .chain(phi.iter().flatten().flatten())
        .all(|x| x.abs() < 1e-10);
    Ok(NormalFormData {
        phi_tilde,
        phi,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, BoxDomain, VectorFunction};

    fn system(components: &[&str], vars: &[&str], lo: f64, hi: f64) -> HodographSystem {
        let f = VectorFunction::from_components(components.iter().map(|c| parse(c, vars).unwrap()).collect()).unwrap();
        HodographSystem::new(f, BoxDomain::cube(vars.len(), lo, hi, 1e-3).unwrap()).unwrap()
    }

    fn ex61() -> HodographSystem {
        system(&["-atanh(u) + 2*atanh(v)", "atanh(u) - atanh(v)"], &["u", "v"], -1.0, 1.0)
    }

    fn parallel(a: &[f64], b: &[f64]) -> bool {
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        (dot.abs() / (na * nb) - 1.0).abs() < 1e-10
    }

    #[test]
    fn ex61_search() {
        let r = catastrophe_search(&ex61(), true, DEFAULT_STARTS, DEFAULT_SEED).unwrap();
        assert!((r.t_c - (1.0 + 2f64.sqrt())).abs() < 1e-6, "{r:?}");
        assert!(r.u_c.iter().all(|x| x.abs() < 1e-5));
        assert!(!r.boundary);
        assert_eq!(r.branch_kind, BranchKind::Gc);
    }

    #[test]
    fn ex61_null_vectors() {
        let s2 = 2f64.sqrt();
        let ns = null_space(&ex61(), &[0.0, 0.0], 1.0 + s2, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(ns.rank, 1);
        assert!(parallel(&ns.right[0], &[-s2, 1.0]));
        assert!(parallel(&ns.left[0], &[1.0, -s2]));
        assert!(parallel(&ns.adj_right[0], &[s2, 1.0]));
        assert!(parallel(&ns.adj_left[0], &[1.0, s2]));
    }

    #[test]
    fn diagonal_null_space() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let ns = null_space_of(&m, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(ns.rank, 1);
        assert_eq!(ns.right[0], vec![1.0, 0.0]);
        assert_eq!(ns.left[0], vec![1.0, 0.0]);
    }

    #[test]
    fn fold_a1() {
        let s = system(&["u1^2", "u2"], &["u1", "u2"], -3.0, 3.0);
        let t = 0.7;
        let ns = null_space(&s, &[-t / 2.0, 0.4], t, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(ns.rank, 1);
        assert!((ns.a1 - (1.0 + t)).abs() < 1e-12);
        let nf = normal_form(&s, &[-t / 2.0, 0.4], t).unwrap();
        assert!(!nf.degenerate);
        assert!((nf.phi_tilde[0][0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn not_singular() {
        let s = system(&["0", "0"], &["u", "v"], -1.0, 1.0);
        assert!(matches!(null_space(&s, &[0.0, 0.0], 1.0, DEFAULT_RANK_TOL), Err(Error::NotSingular { .. })));
    }

    #[test]
    fn ex61_bounded_combinations_and_degeneracy() {
        let s = ex61();
        let t0 = 1.0 + 2f64.sqrt();
        let rep = bounded_combination_check(&s, &[0.0, 0.0], t0, &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!((rep.norm_slope + 1.0).abs() < 0.1, "{rep:?}");
        assert!(rep.max_combination_slope() < 0.1, "{rep:?}");
        assert!(normal_form(&s, &[0.0, 0.0], t0).unwrap().degenerate);
    }

    #[test]
    fn jordan_block_gives_slope_minus_two() {
        let s = system(&["2*u + v", "2*v"], &["u", "v"], -1.0, 1.0);
        let rep = bounded_combination_check(&s, &[0.0, 0.0], -2.0, &[1e-2, 1e-3, 1e-4]).unwrap();
        assert_eq!(rep.expected_slope, -2.0);
        assert!((rep.norm_slope + 2.0).abs() < 0.1, "{rep:?}");
    }

    #[test]
    fn linear_normal_form_is_zero() {
        let s = system(&["u + 2*v", "u + v"], &["u", "v"], -1.0, 1.0);
        let t0 = -(1.0 + 2f64.sqrt());
        let nf = normal_form(&s, &[0.1, 0.1], t0).unwrap();
        assert!(nf.degenerate);
    }
}
