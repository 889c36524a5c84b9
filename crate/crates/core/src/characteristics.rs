//! Lagrangian side: particles `x = x0 + u0(x0) t`, eigenvalue blow-up
//! times of ∇u0, and the fold region where `det(I + U0 t) < 0`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::blowup::{BranchKind, CatastropheReport, BOUNDARY_FLAG};
use crate::contour::{self, Lattice, Polyline};
use crate::error::{check_dim, Error, Result};
use crate::expr::{BoxDomain, VectorFunction};
use crate::hodograph::DEFAULT_TOL_REAL;
use crate::linalg;
use crate::optimize::{multistart, NelderMeadOptions};

#[derive(Clone, Debug)]
pub struct InitialField {
    u0: VectorFunction,
    sample_box: BoxDomain,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Eigentime {
    pub t: f64,
    /// Null vector of `I + U0 t`.
    pub h0: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evolution {
    pub t: f64,
    pub positions: Vec<Vec<f64>>,
    pub det: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldRegion {
    pub t: f64,
    /// Flat lattice indices (lowest corner) of cells with a sign change.
    pub cells: Vec<usize>,
    /// Boundary `det(I + U0 t) = 0` in Lagrangian coordinates (2D only).
    pub lagrangian: Vec<Polyline>,
    /// The same curves pushed forward to Eulerian positions.
    pub eulerian: Vec<Polyline>,
    /// Refined boundary points in Lagrangian coordinates (any dimension).
    pub points: Vec<Vec<f64>>,
    /// `det(I + U0 t) ≤ 0` on the whole lattice with no sign change.
    pub whole_lattice: bool,
}

impl FoldRegion {
    /// Is the Lagrangian point inside a closed boundary curve (2D)?
    pub fn contains_lagrangian(&self, x0: &[f64]) -> bool {
        self.whole_lattice
            || self
                .lagrangian
                .iter()
                .filter(|p| p.closed)
                .any(|p| contour::point_in_polygon([x0[0], x0[1]], &p.points))
    }
}

impl InitialField {
    pub fn new(u0: VectorFunction, sample_box: BoxDomain) -> Result<InitialField> {
        if u0.arity() != sample_box.dim() {
            return Err(Error::Dimension {
                expected: u0.arity(),
                found: sample_box.dim(),
            });
        }
        Ok(InitialField { u0, sample_box })
    }

    pub fn dim(&self) -> usize {
        self.u0.arity()
    }

    pub fn u0(&self) -> &VectorFunction {
        &self.u0
    }

    pub fn sample_box(&self) -> &BoxDomain {
        &self.sample_box
    }

    pub fn with_box(&self, sample_box: BoxDomain) -> Result<InitialField> {
        InitialField::new(self.u0.clone(), sample_box)
    }

    pub fn velocity(&self, x0: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x0)?;
        Ok(self.u0.eval(x0)?)
    }

    /// `U0 = ∇u0`.
    pub fn gradient(&self, x0: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), x0)?;
        Ok(self.u0.jacobian(x0)?)
    }

    /// `I + U0 t`.
    pub fn deformation(&self, x0: &[f64], t: f64) -> Result<DMatrix<f64>> {
        let n = self.dim();
        Ok(DMatrix::identity(n, n) + self.gradient(x0)? * t)
    }

    pub fn det_deformation(&self, x0: &[f64], t: f64) -> Result<f64> {
        Ok(linalg::det(&self.deformation(x0, t)?))
    }

    /// `t = −1/λ` for every real eigenvalue `λ` of `U0` with `|λ| > 1e-12`,
    /// ascending in `t`.
    pub fn eigentimes(&self, x0: &[f64]) -> Result<Vec<Eigentime>> {
        let g = self.gradient(x0)?;
        let n = self.dim();
        let mut out: Vec<Eigentime> = linalg::eigenvalues(&g)
            .into_iter()
            .filter(|z| z.im.abs() <= DEFAULT_TOL_REAL * (1.0 + z.re.abs()) && z.re.abs() > 1e-12)
            .map(|z| {
                let t = -1.0 / z.re;
                let m = DMatrix::identity(n, n) + &g * t;
                let s = linalg::svd(&m);
                let mut h: Vec<f64> = s.v.column(n - 1).iter().copied().collect();
                if h.iter().copied().find(|x| x.abs() > 1e-8).is_some_and(|x| x < 0.0) {
                    h.iter_mut().for_each(|x| *x = -*x);
                }
                Eigentime { t, h0: h }
            })
            .collect();
        out.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(out)
    }

    pub fn min_positive_eigentime(&self, x0: &[f64]) -> Result<Option<f64>> {
        Ok(self.eigentimes(x0)?.into_iter().map(|e| e.t).find(|&t| t > 0.0))
    }

    /// First positive eigentime minimised over the sample box.
    pub fn direct_catastrophe(&self, n_starts: usize, seed: u64) -> Result<CatastropheReport> {
        let phi = |x0: &[f64]| match self.min_positive_eigentime(x0) {
            Ok(Some(t)) => t,
            _ => f64::INFINITY,
        };
        let res = multistart(phi, &self.sample_box, n_starts, seed, &NelderMeadOptions::default());
        let fraction = res.converged_fraction();
        let best = res.best.ok_or(Error::NoBranch)?;
        let (t_c, x0c) = (best.f, best.x);
        let u_c = self.velocity(&x0c)?;
        let x_c: Vec<f64> = x0c.iter().zip(&u_c).map(|(a, u)| a + u * t_c).collect();
        let m = self.deformation(&x0c, t_c)?;
        Ok(CatastropheReport {
            t_c,
            u_c,
            x_c,
            branch_kind: if t_c > 0.0 { BranchKind::Gc } else { BranchKind::Blowup },
            n_starts,
            converged_fraction: fraction,
            boundary: self.sample_box.relative_clearance(&x0c) < BOUNDARY_FLAG,
            relative_det: linalg::det(&m).abs() / linalg::det_scale(&m).max(f64::MIN_POSITIVE),
            x0_c: Some(x0c),
        })
    }

    /// Pushed positions and `det(I + U0 t)` at every lattice node; nodes
    /// where `u0` fails give NaN entries.
    pub fn evolve(&self, lat: &Lattice, t: f64) -> Evolution {
        let nodes: Vec<(Vec<f64>, f64)> = {
            use rayon::prelude::*;
            (0..lat.len())
                .into_par_iter()
                .map(|i| {
                    let x0 = lat.node(i);
                    match (self.velocity(&x0), self.det_deformation(&x0, t)) {
                        (Ok(u), Ok(d)) => (x0.iter().zip(&u).map(|(a, v)| a + v * t).collect(), d),
                        _ => (vec![f64::NAN; x0.len()], f64::NAN),
                    }
                })
                .collect()
        };
        let (positions, det) = nodes.into_iter().unzip();
        Evolution { t, positions, det }
    }

    /// `x0 + u0(x0) t`.
    pub fn push(&self, x0: &[f64], t: f64) -> Option<Vec<f64>> {
        let u = self.velocity(x0).ok()?;
        Some(x0.iter().zip(&u).map(|(a, v)| a + v * t).collect())
    }

    /// Region where `det(I + U0 t) < 0`, i.e. where the velocity is
    /// multivalued after the fold.
    pub fn fold_region(&self, lat: &Lattice, t: f64) -> Result<FoldRegion> {
        if lat.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: lat.dim(),
            });
        }
        let field = |x0: &[f64]| self.det_deformation(x0, t).ok();
        let empty = |whole: bool, points: Vec<Vec<f64>>| FoldRegion {
            t,
            cells: if whole { (0..lat.len()).collect() } else { Vec::new() },
            lagrangian: Vec::new(),
            eulerian: Vec::new(),
            points,
            whole_lattice: whole,
        };
        let (active, values, level) = match contour::locate(lat, &field) {
            contour::Located::SignChange {
                lattice,
                values,
                zoom_level,
            } => (lattice, values, zoom_level),
            contour::Located::PointOnly(p) => return Ok(empty(false, vec![p])),
            contour::Located::Uniform { values } => {
                let finite: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
                if !finite.is_empty() && finite.iter().all(|&v| v <= 0.0) {
                    return Ok(empty(true, Vec::new()));
                }
                return Err(Error::EmptyRegion);
            }
        };
        let (points, cells) = contour::sign_change_points(&active, &values, &field);
        let (lagrangian, eulerian) = if active.dim() == 2 {
            let lines = contour::marching_squares(&active, &values, &field);
            let pushed = lines
                .iter()
                .map(|pl| Polyline {
                    points: pl
                        .points
                        .iter()
                        .map(|p| self.push(p, t).map_or([f64::NAN; 2], |x| [x[0], x[1]]))
                        .collect(),
                    closed: pl.closed,
                })
                .collect();
            (lines, pushed)
        } else {
            (Vec::new(), Vec::new())
        };
        let cells = if level == 0 { cells } else { Vec::new() };
        Ok(FoldRegion {
            t,
            cells,
            lagrangian,
            eulerian,
            points,
            whole_lattice: false,
        })
    }

    /// Lagrangian label and velocity of the particle at `(x, t)`: Newton on
    /// `x0 + u0(x0) t = x` from `guess`.
    pub fn solve_x0(&self, x: &[f64], t: f64, guess: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.dim();
        check_dim(n, x)?;
        let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let target = 1e-10 * (1.0 + norm(x));
        let resid = |p: &[f64]| -> Result<Vec<f64>> {
            let y = self.push(p, t).ok_or(Error::LeftDomain { point: p.to_vec() })?;
            Ok(x.iter().zip(&y).map(|(a, b)| a - b).collect())
        };
        let mut p = guess.to_vec();
        let mut res = norm(&resid(&p)?);
        for it in 0..100 {
            let m = self.deformation(&p, t)?;
            let d = linalg::det(&m);
            let scale = linalg::det_scale(&m);
            if d.abs() <= 1e-12 * scale {
                return Err(Error::SingularNearBlowup { det: d, scale });
            }
            if res == 0.0 {
                break;
            }
            let step = m
                .lu()
                .solve(&DVector::from_vec(resid(&p)?))
                .ok_or(Error::SingularNearBlowup { det: d, scale })?;
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..=30 {
                let cand: Vec<f64> = p.iter().zip(step.iter()).map(|(a, s)| a + lambda * s).collect();
                if let Ok(r) = resid(&cand) {
                    let rn = norm(&r);
                    if rn < res {
                        accepted = Some((cand, rn));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            match accepted {
                Some((cand, rn)) => {
                    p = cand;
                    let done = rn <= target && rn > 0.5 * res;
                    res = rn;
                    if done {
                        break;
                    }
                }
                None if res <= target => break,
                None => {
                    return Err(Error::NoConvergence {
                        iterations: it + 1,
                        residual: res,
                    })
                }
            }
        }
        if res > target {
            return Err(Error::NoConvergence {
                iterations: 100,
                residual: res,
            });
        }
        let u = self.velocity(&p)?;
        Ok((p, u))
    }

    /// Central-difference residual of `u_t + (u·∇)u = 0` with u obtained
    /// from the characteristics, following the particle labelled near
    /// `guess`. Refuses within `√h` of an eigentime.
    pub fn pde_residual(&self, x: &[f64], t: f64, h: f64, guess: &[f64]) -> Result<f64> {
        let n = self.dim();
        let (x0, u) = self.solve_x0(x, t, guess)?;
        if let Some(gap) = self.eigentimes(&x0)?.iter().map(|e| (e.t - t).abs()).reduce(f64::min) {
            if gap < h.sqrt() {
                let m = self.deformation(&x0, t)?;
                return Err(Error::SingularNearBlowup {
                    det: linalg::det(&m),
                    scale: linalg::det_scale(&m),
                });
            }
        }
        let at = |xs: &[f64], ts: f64| self.solve_x0(xs, ts, &x0).map(|r| r.1);
        let up = at(x, t + h)?;
        let dn = at(x, t - h)?;
        let mut r: Vec<f64> = (0..n).map(|i| (up[i] - dn[i]) / (2.0 * h)).collect();
        for k in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            let a = at(&xp, t)?;
            let b = at(&xm, t)?;
            for i in 0..n {
                r[i] += u[k] * (a[i] - b[i]) / (2.0 * h);
            }
        }
        Ok(r.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn field(components: &[&str], vars: &[&str], lo: f64, hi: f64) -> InitialField {
        let f = VectorFunction::from_components(components.iter().map(|c| parse(c, vars).unwrap()).collect()).unwrap();
        InitialField::new(f, BoxDomain::cube(vars.len(), lo, hi, 1e-3).unwrap()).unwrap()
    }

    #[test]
    fn one_dimensional_linear() {
        let f = field(&["-x"], &["x"], -1.0, 1.0);
        let e = f.eigentimes(&[0.3]).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].t, 1.0);
    }

    #[test]
    fn rotation_has_no_eigentimes() {
        let f = field(&["-y", "x"], &["x", "y"], -1.0, 1.0);
        assert!(f.eigentimes(&[0.2, 0.1]).unwrap().is_empty());
    }

    #[test]
    fn exponential_data_at_catastrophe_label() {
        let f = field(&["exp(-x^2 - y^2)", "exp(-x^2 - 2*y^2)"], &["x", "y"], -2.0, 2.0);
        let t = f.min_positive_eigentime(&[0.3721106, 0.45806095]).unwrap().unwrap();
        assert!((t - 0.7281359).abs() < 1e-6, "{t}");
    }

    #[test]
    fn evolve_at_zero_and_linear() {
        let f = field(&["0.5*x - y", "0.25*y"], &["x", "y"], -1.0, 1.0);
        let lat = Lattice::uniform(vec![-1.0, -1.0], vec![1.0, 1.0], 5);
        let e0 = f.evolve(&lat, 0.0);
        assert!(e0.det.iter().all(|&d| d == 1.0));
        assert_eq!(e0.positions[7], lat.node(7));
        let e = f.evolve(&lat, 2.0);
        assert!(e.det.iter().all(|&d| (d - 3.0).abs() < 1e-14));
    }

    #[test]
    fn linear_compression_degenerates_everywhere() {
        let f = field(&["-x", "-y"], &["x", "y"], -1.0, 1.0);
        let lat = Lattice::uniform(vec![-1.0, -1.0], vec![1.0, 1.0], 11);
        let r = f.fold_region(&lat, 1.0).unwrap();
        assert!(r.whole_lattice);
        assert!(matches!(f.fold_region(&lat, 0.5), Err(Error::EmptyRegion)));
    }

    #[test]
    fn solve_x0_inverts_push() {
        let f = field(&["tanh(x + 2*y)", "tanh(x + y)"], &["x", "y"], -2.0, 2.0);
        let x0 = [0.2, -0.1];
        let x = f.push(&x0, 0.5).unwrap();
        let (p, u) = f.solve_x0(&x, 0.5, &[0.0, 0.0]).unwrap();
        assert!((p[0] - x0[0]).abs() < 1e-12 && (p[1] - x0[1]).abs() < 1e-12);
        assert_eq!(u, f.velocity(&p).unwrap());
    }
}
