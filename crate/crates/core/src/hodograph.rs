//! Hodograph relations `x = u t + f(u)`: the matrix M, the blow-up
//! polynomial, its real branches, and the implicit solution u(x, t).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::expr::{BoxDomain, VectorFunction};
use crate::linalg;

pub const DEFAULT_TOL_REAL: f64 = 1e-9;
pub const CLUSTER_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct HodographSystem {
    f: VectorFunction,
    domain: BoxDomain,
}

/// `det(J_f(u) + tI) = t^n + Σ a_k t^k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupPolynomial {
    /// `a_0 .. a_{n-1}`.
    pub coeffs: Vec<f64>,
}

impl BlowupPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, t: f64) -> f64 {
        linalg::eval_monic(&self.coeffs, t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        linalg::eval_monic_derivative(&self.coeffs, t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub t: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BranchSet {
    /// Ascending in `t`.
    pub roots: Vec<Branch>,
}

/// Which branch value a search follows at each u.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchSelector {
    SmallestPositive,
    LargestNegative,
    /// k-th real root in ascending order, counted with multiplicity.
    Sorted(usize),
}

impl BranchSet {
    /// Number of real roots counted with multiplicity.
    pub fn count(&self) -> usize {
        self.roots.iter().map(|b| b.multiplicity).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.roots
            .iter()
            .flat_map(|b| std::iter::repeat_n(b.t, b.multiplicity))
            .collect()
    }

    pub fn smallest_positive(&self) -> Option<f64> {
        self.roots.iter().map(|b| b.t).find(|&t| t > 0.0)
    }

    pub fn largest_negative(&self) -> Option<f64> {
        self.roots.iter().rev().map(|b| b.t).find(|&t| t < 0.0)
    }

    pub fn select(&self, sel: BranchSelector) -> Option<f64> {
        match sel {
            BranchSelector::SmallestPositive => self.smallest_positive(),
            BranchSelector::LargestNegative => self.largest_negative(),
            BranchSelector::Sorted(k) => self.values().get(k).copied(),
        }
    }

    /// Real parts of (near-)real eigenvalue negatives, clustered.
    pub(crate) fn from_real_values(mut ts: Vec<f64>) -> BranchSet {
        ts.sort_by(f64::total_cmp);
        let mut roots: Vec<Branch> = Vec::new();
        let mut group: Vec<f64> = Vec::new();
        let flush = |group: &mut Vec<f64>, roots: &mut Vec<Branch>| {
            if !group.is_empty() {
                let mean = group.iter().sum::<f64>() / group.len() as f64;
                roots.push(Branch {
                    t: mean,
                    multiplicity: group.len(),
                });
                group.clear();
            }
        };
        for t in ts {
            if let Some(&first) = group.first() {
                if (t - first).abs() > CLUSTER_TOL * (1.0 + first.abs()) {
                    flush(&mut group, &mut roots);
                }
            }
            group.push(t);
        }
        flush(&mut group, &mut roots);
        BranchSet { roots }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionSample {
    pub x: Vec<f64>,
    pub t: f64,
    pub u: Vec<f64>,
    /// `dudx[i][k] = ∂u_i/∂x_k`.
    pub dudx: Vec<Vec<f64>>,
    pub dudt: Vec<f64>,
    pub newton_iters: usize,
    pub residual: f64,
}

const MAX_NEWTON: usize = 100;
const MAX_HALVINGS: usize = 30;
const SINGULAR_REL: f64 = 1e-12;

impl HodographSystem {
    pub fn new(f: VectorFunction, domain: BoxDomain) -> Result<HodographSystem> {
        if f.arity() != domain.dim() {
            return Err(Error::Dimension {
                expected: f.arity(),
                found: domain.dim(),
            });
        }
        Ok(HodographSystem { f, domain })
    }

    pub fn dim(&self) -> usize {
        self.f.arity()
    }

    pub fn f(&self) -> &VectorFunction {
        &self.f
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn with_domain(&self, domain: BoxDomain) -> Result<HodographSystem> {
        HodographSystem::new(self.f.clone(), domain)
    }

    pub fn jacobian(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), u)?;
        Ok(self.f.jacobian(u)?)
    }

    /// `M = J_f(u) + tI`.
    pub fn build_m(&self, u: &[f64], t: f64) -> Result<DMatrix<f64>> {
        let mut m = self.jacobian(u)?;
        for i in 0..self.dim() {
            m[(i, i)] += t;
        }
        Ok(m)
    }

    pub fn det_m(&self, u: &[f64], t: f64) -> Result<f64> {
        Ok(linalg::det(&self.build_m(u, t)?))
    }

    /// `x = u t + f(u)`.
    pub fn map_forward(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        check_dim(self.dim(), u)?;
        let fu = self.f.eval(u)?;
        Ok(u.iter().zip(&fu).map(|(ui, fi)| ui * t + fi).collect())
    }

    pub fn charpoly(&self, u: &[f64]) -> Result<BlowupPolynomial> {
        let j = self.jacobian(u)?;
        Ok(BlowupPolynomial {
            coeffs: linalg::faddeev_leverrier(&(-j)),
        })
    }

    pub fn real_branches(&self, u: &[f64], tol_real: f64) -> Result<BranchSet> {
        let j = self.jacobian(u)?;
        Ok(branches_of_jacobian(&j, tol_real))
    }

    pub fn residual(&self, x: &[f64], u: &[f64], t: f64) -> Result<Vec<f64>> {
        let xu = self.map_forward(u, t)?;
        Ok(x.iter().zip(&xu).map(|(a, b)| a - b).collect())
    }

    /// Damped Newton for `x − u t − f(u) = 0` starting at `guess`.
    pub fn solve_u(&self, x: &[f64], t: f64, guess: &[f64]) -> Result<SolutionSample> {
        let n = self.dim();
        check_dim(n, x)?;
        check_dim(n, guess)?;
        if !self.domain.contains(guess) {
            return Err(Error::LeftDomain { point: guess.to_vec() });
        }
        let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let target = 1e-10 * (1.0 + norm(x));

        let mut u = guess.to_vec();
        let mut res = norm(&self.residual(x, &u, t)?);
        let mut iters = 0;
        while iters < MAX_NEWTON {
            let m = self.build_m(&u, t)?;
            let d = linalg::det(&m);
            let scale = linalg::det_scale(&m);
            if d.abs() <= SINGULAR_REL * scale {
                return Err(Error::SingularNearBlowup { det: d, scale });
            }
            if res == 0.0 {
                break;
            }
            let r = DVector::from_vec(self.residual(x, &u, t)?);
            let step = match m.clone().lu().solve(&r) {
                Some(s) => s,
                None => return Err(Error::SingularNearBlowup { det: d, scale }),
            };
            iters += 1;
            let mut lambda = 1.0;
            let mut accepted = None;
            let mut left = None;
            for _ in 0..=MAX_HALVINGS {
                let cand: Vec<f64> = u.iter().zip(step.iter()).map(|(a, s)| a + lambda * s).collect();
                if !self.domain.contains(&cand) {
                    left = Some(cand);
                } else if let Ok(rc) = self.residual(x, &cand, t) {
                    let rn = norm(&rc);
                    if rn < res {
                        accepted = Some((cand, rn));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            match accepted {
                Some((cand, rn)) => {
                    u = cand;
                    // Past the contract, continue only while the residual
                    // keeps shrinking substantially.
                    let done = rn <= target && rn > 0.5 * res;
                    res = rn;
                    if done {
                        break;
                    }
                }
                None if res <= target => break,
                None => {
                    if let Some(p) = left {
                        return Err(Error::LeftDomain { point: p });
                    }
                    return Err(Error::NoConvergence {
                        iterations: iters,
                        residual: res,
                    });
                }
            }
        }
        if res > target {
            return Err(Error::NoConvergence {
                iterations: iters,
                residual: res,
            });
        }
        let m = self.build_m(&u, t)?;
        let d = linalg::det(&m);
        let scale = linalg::det_scale(&m);
        if d.abs() <= SINGULAR_REL * scale {
            return Err(Error::SingularNearBlowup { det: d, scale });
        }
        let minv = linalg::inverse(&m).ok_or(Error::SingularNearBlowup { det: d, scale })?;
        let uv = DVector::from_column_slice(&u);
        let dudt = -(&minv * uv);
        Ok(SolutionSample {
            x: x.to_vec(),
            t,
            u,
            dudx: (0..n).map(|i| minv.row(i).iter().copied().collect()).collect(),
            dudt: dudt.iter().copied().collect(),
            newton_iters: iters,
            residual: res,
        })
    }

    /// Central-difference residual of `u_t + (u·∇)u = 0` at `(x, t)` with
    /// step `h`, following the solution branch through `guess`.
    ///
    /// Refuses (SingularNearBlowup) when `t` is within `√h` of a real branch
    /// at the centre, where the difference quotients are meaningless.
    pub fn pde_residual(&self, x: &[f64], t: f64, h: f64, guess: &[f64]) -> Result<f64> {
        let n = self.dim();
        let centre = self.solve_u(x, t, guess)?;
        let branches = self.real_branches(&centre.u, DEFAULT_TOL_REAL)?;
        if let Some(gap) = branches.roots.iter().map(|b| (b.t - t).abs()).reduce(f64::min) {
            if gap < h.sqrt() {
                let m = self.build_m(&centre.u, t)?;
                return Err(Error::SingularNearBlowup {
                    det: linalg::det(&m),
                    scale: linalg::det_scale(&m),
                });
            }
        }
        let solve_at = |xs: &[f64], ts: f64| self.solve_u(xs, ts, &centre.u).map(|s| s.u);
        let up = solve_at(x, t + h)?;
        let dn = solve_at(x, t - h)?;
        let mut du_dt: Vec<f64> = (0..n).map(|i| (up[i] - dn[i]) / (2.0 * h)).collect();
        for k in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            let a = solve_at(&xp, t)?;
            let b = solve_at(&xm, t)?;
            for i in 0..n {
                du_dt[i] += centre.u[k] * (a[i] - b[i]) / (2.0 * h);
            }
        }
        Ok(du_dt.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }
}

/// `t_i = −λ_i` over the real eigenvalues of `j`.
pub fn branches_of_jacobian(j: &DMatrix<f64>, tol_real: f64) -> BranchSet {
    let ts = linalg::eigenvalues(j)
        .into_iter()
        .filter(|z| z.im.abs() <= tol_real * (1.0 + z.re.abs()))
        .map(|z| -z.re)
        .collect();
    BranchSet::from_real_values(ts)
}
