use nalgebra::DMatrix;

use super::ast::{hyper_seed, EvalError, Expression};
use super::number::{Dual, Number};

/// `n` scalar functions of `n` variables.
///
/// Either an explicit list of component expressions, or the gradient of a
/// single scalar expression (potential systems). In the gradient form the
/// components are never written out symbolically: one extra dual level is
/// stacked on top of whatever the caller evaluates with.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorFunction {
    arity: usize,
    repr: Repr,
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Components(Vec<Expression>),
    Gradient(Expression),
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ShapeError {
    #[error("expected {expected} component expressions, got {found}")]
    ComponentCount { expected: usize, found: usize },
    #[error("component {index} has arity {found}, expected {expected}")]
    ComponentArity {
        index: usize,
        expected: usize,
        found: usize,
    },
}

impl VectorFunction {
    pub fn from_components(components: Vec<Expression>) -> Result<VectorFunction, ShapeError> {
        let n = components.len();
        if n == 0 {
            return Err(ShapeError::ComponentCount { expected: 1, found: 0 });
        }
        for (index, c) in components.iter().enumerate() {
            if c.arity() != n {
                return Err(ShapeError::ComponentArity {
                    index,
                    expected: n,
                    found: c.arity(),
                });
            }
        }
        Ok(VectorFunction {
            arity: n,
            repr: Repr::Components(components),
        })
    }

    /// `u ↦ ∇W(u)`.
    pub fn gradient_of(potential: Expression) -> VectorFunction {
        VectorFunction {
            arity: potential.arity(),
            repr: Repr::Gradient(potential),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn components(&self) -> Option<&[Expression]> {
        match &self.repr {
            Repr::Components(c) => Some(c),
            Repr::Gradient(_) => None,
        }
    }

    pub fn potential(&self) -> Option<&Expression> {
        match &self.repr {
            Repr::Gradient(w) => Some(w),
            Repr::Components(_) => None,
        }
    }

    pub fn variables(&self) -> &[String] {
        match &self.repr {
            Repr::Components(c) => c[0].variables(),
            Repr::Gradient(w) => w.variables(),
        }
    }

    fn check_point<N>(&self, p: &[N]) -> Result<(), EvalError> {
        if p.len() != self.arity {
            return Err(EvalError::Arity {
                expected: self.arity,
                found: p.len(),
            });
        }
        Ok(())
    }

    pub fn eval_with<N: Number>(&self, p: &[N]) -> Result<Vec<N>, EvalError> {
        self.check_point(p)?;
        match &self.repr {
            Repr::Components(c) => c.iter().map(|e| e.eval_with(p)).collect(),
            Repr::Gradient(w) => {
                let mut lifted: Vec<Dual<N>> = p.iter().map(|&x| Dual::lift(x)).collect();
                let mut out = Vec::with_capacity(self.arity);
                for i in 0..self.arity {
                    lifted[i].eps = N::constant(1.0);
                    out.push(w.eval_with(&lifted)?.eps);
                    lifted[i].eps = N::constant(0.0);
                }
                Ok(out)
            }
        }
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.eval_with(p)
    }

    /// `J[i][l] = ∂f_i/∂u_l`, exact (forward-mode duals).
    pub fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        self.check_point(p)?;
        let n = self.arity;
        let mut jac = DMatrix::zeros(n, n);
        match &self.repr {
            Repr::Components(_) => {
                let mut seeded: Vec<Dual<f64>> = p.iter().map(|&x| Dual::lift(x)).collect();
                for l in 0..n {
                    seeded[l].eps = 1.0;
                    let col = self.eval_with(&seeded)?;
                    for (i, v) in col.iter().enumerate() {
                        jac[(i, l)] = v.eps;
                    }
                    seeded[l].eps = 0.0;
                }
            }
            Repr::Gradient(w) => {
                // Hessian of the potential, filled symmetrically.
                let h = w.hessian(p)?;
                for i in 0..n {
                    for l in 0..n {
                        jac[(i, l)] = h[i][l];
                    }
                }
            }
        }
        Ok(jac)
    }

    /// `H_i[k][l] = ∂²f_i/∂u_k∂u_l` for every component; each matrix is
    /// bitwise symmetric.
    pub fn hessians(&self, p: &[f64]) -> Result<Vec<DMatrix<f64>>, EvalError> {
        self.check_point(p)?;
        let n = self.arity;
        let mut out = vec![DMatrix::zeros(n, n); n];
        for k in 0..n {
            for l in k..n {
                let seeded = hyper_seed(p, k, l);
                let vals = self.eval_with(&seeded)?;
                for (i, v) in vals.iter().enumerate() {
                    out[i][(k, l)] = v.eps.eps;
                    out[i][(l, k)] = v.eps.eps;
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn vf(components: &[&str], vars: &[&str]) -> VectorFunction {
        VectorFunction::from_components(components.iter().map(|c| parse(c, vars).unwrap()).collect()).unwrap()
    }

    #[test]
    fn linear_jacobian() {
        let f = vf(&["u + 2*v", "u + v"], &["u", "v"]);
        let j = f.jacobian(&[0.3, -4.0]).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, 1.0]));
    }

    #[test]
    fn atanh_system_jacobian_at_origin() {
        let f = vf(&["-atanh(u) + 2*atanh(v)", "atanh(u) - atanh(v)"], &["u", "v"]);
        let j = f.jacobian(&[0.0, 0.0]).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 1.0, -1.0]));
        for h in f.hessians(&[0.0, 0.0]).unwrap() {
            assert!(h.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn monomial_jacobian_and_hessians() {
        let f = vf(&["u^2", "v"], &["u", "v"]);
        assert_eq!(
            f.jacobian(&[3.0, 1.0]).unwrap(),
            DMatrix::from_row_slice(2, 2, &[6.0, 0.0, 0.0, 1.0])
        );
        let f = vf(&["u^2 + u*v", "v"], &["u", "v"]);
        let h = f.hessians(&[0.5, 0.5]).unwrap();
        assert_eq!(h[0], DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 0.0]));
        let f = vf(&["u^3"], &["u"]);
        assert_eq!(f.hessians(&[2.0]).unwrap()[0][(0, 0)], 12.0);
    }

    #[test]
    fn gradient_form_matches_explicit_components() {
        let w = parse("u^2*v + sin(u)*v^3", &["u", "v"]).unwrap();
        let g = VectorFunction::gradient_of(w);
        let explicit = vf(&["2*u*v + cos(u)*v^3", "u^2 + 3*sin(u)*v^2"], &["u", "v"]);
        let p = [0.4, -0.7];
        let a = g.eval(&p).unwrap();
        let b = explicit.eval(&p).unwrap();
        for k in 0..2 {
            assert!((a[k] - b[k]).abs() < 1e-14);
        }
        let ja = g.jacobian(&p).unwrap();
        let jb = explicit.jacobian(&p).unwrap();
        assert!((ja - jb).abs().max() < 1e-14);
        let ha = g.hessians(&p).unwrap();
        let hb = explicit.hessians(&p).unwrap();
        for i in 0..2 {
            assert!((&ha[i] - &hb[i]).abs().max() < 1e-13);
        }
    }

    #[test]
    fn shape_errors() {
        let a = parse("u", &["u", "v"]).unwrap();
        assert!(VectorFunction::from_components(vec![a.clone()]).is_err());
        assert!(VectorFunction::from_components(vec![]).is_err());
        let f = VectorFunction::from_components(vec![a.clone(), a]).unwrap();
        assert!(f.eval(&[1.0]).is_err());
    }
}
