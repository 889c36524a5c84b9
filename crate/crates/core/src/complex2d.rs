//! Two-dimensional systems in complex form `F = f + i g`, `V = u + i v`.

use nalgebra::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hodograph::{HodographSystem, DEFAULT_TOL_REAL};

pub type C64 = Complex<f64>;

#[derive(Clone, Debug)]
pub struct ComplexSystem2D {
    sys: HodographSystem,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseLabel {
    NoBlowup,
    DoubleRoot,
    TwoNegative,
    TwoPositive,
    Mixed,
    ZeroRoot,
}

impl CaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseLabel::NoBlowup => "no-blowup",
            CaseLabel::DoubleRoot => "double-root",
            CaseLabel::TwoNegative => "two-negative",
            CaseLabel::TwoPositive => "two-positive",
            CaseLabel::Mixed => "mixed",
            CaseLabel::ZeroRoot => "zero-root",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification2D {
    /// `(f_u + g_v)² − 4 J0`.
    pub delta: f64,
    /// `(f_u − g_v)² + 4 f_v g_u`, the same quantity computed the other way.
    pub delta_alt: f64,
    pub t_minus: Option<f64>,
    pub t_plus: Option<f64>,
    pub label: CaseLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchFormulaCheck {
    /// `|F_V̄|² − (Im F_V)²`.
    pub radicand: f64,
    /// Largest distance between the complex-form roots and the real branches
    /// (0 when both agree there are none).
    pub residual: f64,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Beltrami {
    pub mu_re: f64,
    pub mu_im: f64,
    pub abs_mu: f64,
    pub quasi_conformal: bool,
}

impl ComplexSystem2D {
    pub fn new(sys: HodographSystem) -> Result<ComplexSystem2D> {
        if sys.dim() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                found: sys.dim(),
            });
        }
        Ok(ComplexSystem2D { sys })
    }

    pub fn system(&self) -> &HodographSystem {
        &self.sys
    }

    fn partials(&self, u: f64, v: f64) -> Result<[f64; 4]> {
        let j = self.sys.jacobian(&[u, v])?;
        Ok([j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]])
    }

    /// `(F_V, F_V̄)`.
    pub fn wirtinger(&self, u: f64, v: f64) -> Result<(C64, C64)> {
        let [fu, fv, gu, gv] = self.partials(u, v)?;
        Ok(wirtinger_from_partials(fu, fv, gu, gv))
    }

    pub fn classify(&self, u: f64, v: f64) -> Result<Classification2D> {
        let [fu, fv, gu, gv] = self.partials(u, v)?;
        let tr = fu + gv;
        let j0 = fu * gv - fv * gu;
        let delta = tr * tr - 4.0 * j0;
        let delta_alt = (fu - gv).powi(2) + 4.0 * fv * gu;
        let scale = tr * tr + 4.0 * j0.abs();
        let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
        if delta < -tol {
            return Ok(Classification2D {
                delta,
                delta_alt,
                t_minus: None,
                t_plus: None,
                label: CaseLabel::NoBlowup,
            });
        }
        let r = delta.max(0.0).sqrt();
        let (tm, tp) = (0.5 * (-tr - r), 0.5 * (-tr + r));
        let small = |t: f64| t.abs() <= 1e-12 * (1.0 + tr.abs());
        let label = if delta.abs() <= tol {
            CaseLabel::DoubleRoot
        } else if small(tm) || small(tp) {
            CaseLabel::ZeroRoot
        } else if tp < 0.0 {
            CaseLabel::TwoNegative
        } else if tm > 0.0 {
            CaseLabel::TwoPositive
        } else {
            CaseLabel::Mixed
        };
        Ok(Classification2D {
            delta,
            delta_alt,
            t_minus: Some(tm),
            t_plus: Some(tp),
            label,
        })
    }

    /// `t_± = −Re F_V ± sqrt(|F_V̄|² − (Im F_V)²)` against the real branches.
    pub fn branch_formula_check(&self, u: f64, v: f64) -> Result<BranchFormulaCheck> {
        let (fv, fvb) = self.wirtinger(u, v)?;
        let radicand = fvb.norm_sqr() - fv.im * fv.im;
        let branches = self.sys.real_branches(&[u, v], DEFAULT_TOL_REAL)?.values();
        if radicand >= 0.0 {
            let r = radicand.sqrt();
            let formula = [-fv.re - r, -fv.re + r];
            if branches.len() != 2 {
                return Ok(BranchFormulaCheck {
                    radicand,
                    residual: f64::INFINITY,
                    consistent: false,
                });
            }
            let residual = formula
                .iter()
                .zip(&branches)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok(BranchFormulaCheck {
                radicand,
                residual,
                consistent: residual <= 1e-9 * (1.0 + fv.norm() + fvb.norm()),
            })
        } else {
            Ok(BranchFormulaCheck {
                radicand,
                residual: 0.0,
                consistent: branches.is_empty(),
            })
        }
    }

    /// `μ = −F_V̄ / (conj(F_V) + t)`.
    pub fn beltrami_mu(&self, u: f64, v: f64, t: f64) -> Result<Beltrami> {
        let (fv, fvb) = self.wirtinger(u, v)?;
        let den = fv.conj() + t;
        if den.norm() <= 1e-12 {
            return Err(Error::DegenerateDenominator);
        }
        let mu = -fvb / den;
        Ok(Beltrami {
            mu_re: mu.re,
            mu_im: mu.im,
            abs_mu: mu.norm(),
            quasi_conformal: mu.norm() < 1.0,
        })
    }
}

pub fn wirtinger_from_partials(fu: f64, fv: f64, gu: f64, gv: f64) -> (C64, C64) {
    (
        C64::new(0.5 * (fu + gv), 0.5 * (gu - fv)),
        C64::new(0.5 * (fu - gv), 0.5 * (gu + fv)),
    )
}

/// `(F_V + t)(conj(F_V) + t) − F_V̄ conj(F_V̄)`, a complex number whose
/// imaginary part vanishes up to rounding.
pub fn det_from_wirtinger(fv: C64, fvb: C64, t: f64) -> C64 {
    (fv + t) * (fv.conj() + t) - fvb * fvb.conj()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, BoxDomain, VectorFunction};

    fn cs(f: &str, g: &str) -> ComplexSystem2D {
        let vars = ["u", "v"];
        let vf = VectorFunction::from_components(vec![parse(f, &vars).unwrap(), parse(g, &vars).unwrap()]).unwrap();
        ComplexSystem2D::new(HodographSystem::new(vf, BoxDomain::cube(2, -1.0, 1.0, 1e-3).unwrap()).unwrap()).unwrap()
    }

    fn ex61() -> ComplexSystem2D {
        cs("-atanh(u) + 2*atanh(v)", "atanh(u) - atanh(v)")
    }

    #[test]
    fn ex61_classification() {
        let c = ex61().classify(0.0, 0.0).unwrap();
        assert!((c.delta - 8.0).abs() < 1e-14);
        assert!((c.delta - c.delta_alt).abs() < 1e-14);
        assert!((c.t_plus.unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-14);
        assert!((c.t_minus.unwrap() - (1.0 - 2f64.sqrt())).abs() < 1e-14);
        assert_eq!(c.label, CaseLabel::Mixed);
    }

    #[test]
    fn ex61_wirtinger() {
        let (fv, fvb) = ex61().wirtinger(0.0, 0.0).unwrap();
        assert_eq!(fv, C64::new(-1.0, -0.5));
        assert_eq!(fvb, C64::new(0.0, 1.5));
        let chk = ex61().branch_formula_check(0.0, 0.0).unwrap();
        assert!(chk.consistent && chk.residual < 1e-12);
    }

    #[test]
    fn analytic_square_is_blowup_free() {
        let s = cs("u^2 - v^2", "2*u*v");
        let c = s.classify(0.3, 0.5).unwrap();
        assert!((c.delta + 16.0 * 0.25).abs() < 1e-12);
        assert_eq!(c.label, CaseLabel::NoBlowup);
        let (_, fvb) = s.wirtinger(0.3, 0.5).unwrap();
        assert_eq!(fvb, C64::new(0.0, 0.0));
        let chk = s.branch_formula_check(0.3, 0.5).unwrap();
        assert!(chk.radicand < 0.0 && chk.consistent);
        assert_eq!(s.beltrami_mu(0.3, 0.5, 1.0).unwrap().abs_mu, 0.0);
    }

    #[test]
    fn anti_analytic() {
        let s = cs("u", "-v");
        let (fv, fvb) = s.wirtinger(0.1, 0.2).unwrap();
        assert_eq!(fv, C64::new(0.0, 0.0));
        assert_eq!(fvb, C64::new(1.0, 0.0));
        let mu = s.beltrami_mu(0.1, 0.2, 2.0).unwrap();
        assert!((mu.abs_mu - 0.5).abs() < 1e-15);
        assert!(mu.quasi_conformal);
        assert!(matches!(s.beltrami_mu(0.1, 0.2, 0.0), Err(Error::DegenerateDenominator)));
    }

    #[test]
    fn mu_has_unit_modulus_on_blowup() {
        let s = ex61();
        let t = 1.0 + 2f64.sqrt();
        let mu = s.beltrami_mu(0.0, 0.0, t).unwrap();
        assert!((mu.abs_mu - 1.0).abs() < 1e-12);
    }
}
