//! Potential systems `f = ∇W̃`: M is a Hessian plus tI, so every branch is real.

use crate::error::{check_dim, Result};
use crate::expr::{BoxDomain, Expression, VectorFunction};
use crate::hodograph::{BranchSet, HodographSystem};
use crate::linalg;

#[derive(Clone, Debug)]
pub struct PotentialSystem {
    w: Expression,
    sys: HodographSystem,
}

impl PotentialSystem {
    pub fn from_potential(w: Expression, domain: BoxDomain) -> Result<PotentialSystem> {
        let sys = HodographSystem::new(VectorFunction::gradient_of(w.clone()), domain)?;
        Ok(PotentialSystem { w, sys })
    }

    pub fn system(&self) -> &HodographSystem {
        &self.sys
    }

    pub fn potential(&self) -> &Expression {
        &self.w
    }

    /// All n roots of det M = 0, from the symmetric eigenvalues of the Hessian.
    pub fn potential_branches(&self, u: &[f64]) -> Result<BranchSet> {
        let h = self.sys.jacobian(u)?;
        let ts = linalg::symmetric_eigenvalues(&h).into_iter().map(|l| -l).collect();
        Ok(BranchSet::from_real_values(ts))
    }

    /// `max_i |(u t + ∇W̃)_i − ∂W*/∂u_i|` with `W* = (t/2)Σu² + W̃`.
    pub fn gradient_map_check(&self, u: &[f64], t: f64) -> Result<f64> {
        check_dim(self.sys.dim(), u)?;
        let x = self.sys.map_forward(u, t)?;
        let grad = self.w.gradient(u)?;
        Ok(x.iter()
            .zip(u.iter().zip(&grad))
            .map(|(xi, (ui, gi))| (xi - (t * ui + gi)).abs())
            .fold(0.0, f64::max))
    }

    /// `(W̃_uu − W̃_vv)² + 4 W̃_uv²` for two-dimensional potentials.
    pub fn discriminant_2d(&self, u: &[f64]) -> Result<f64> {
        let h = self.w.hessian(u)?;
        Ok((h[0][0] - h[1][1]).powi(2) + 4.0 * h[0][1] * h[0][1])
    }
}

/// Largest `|J_ik − J_ki|` over a `10^n` lattice of the shrunk domain is at
/// most `tol`. Points where f fails are skipped.
pub fn is_potential(sys: &HodographSystem, tol: f64) -> bool {
    max_asymmetry(sys) <= tol
}

pub fn max_asymmetry(sys: &HodographSystem) -> f64 {
    let lat = crate::mappings::domain_lattice(sys.domain(), 10);
    (0..lat.len())
        .map(|i| match sys.jacobian(&lat.node(i)) {
            Ok(j) => (&j - j.transpose()).abs().max(),
            Err(_) => 0.0,
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use nalgebra::DMatrix;

    fn psys(w: &str) -> PotentialSystem {
        let vars = ["u", "v"];
        PotentialSystem::from_potential(parse(w, &vars).unwrap(), BoxDomain::cube(2, -2.0, 2.0, 1e-3).unwrap()).unwrap()
    }

    #[test]
    fn quadratic_potential() {
        let p = psys("(u^2 + v^2)/2");
        assert_eq!(p.system().f().eval(&[0.3, -0.4]).unwrap(), vec![0.3, -0.4]);
        let m = p.system().build_m(&[0.3, -0.4], 2.0).unwrap();
        assert_eq!(m, DMatrix::identity(2, 2) * 3.0);
        let b = p.potential_branches(&[0.1, 0.2]).unwrap();
        assert_eq!(b.values(), vec![-1.0, -1.0]);
    }

    #[test]
    fn cubic_potential_branches() {
        let p = psys("(u^3 + v^3)/6");
        assert_eq!(p.potential_branches(&[1.0, 2.0]).unwrap().values(), vec![-2.0, -1.0]);
    }

    #[test]
    fn u2v_potential() {
        let p = psys("u^2*v");
        let j = p.system().jacobian(&[0.5, 1.5]).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 0.0]));
        assert!(is_potential(p.system(), 1e-12));
        assert_eq!(p.system().map_forward(&[1.0, 1.0], 2.0).unwrap(), vec![4.0, 3.0]);
        assert_eq!(p.gradient_map_check(&[1.0, 1.0], 2.0).unwrap(), 0.0);
    }

    #[test]
    fn trivial_potential_has_zero_discriminant() {
        let p = psys("1.5*(u^2 + v^2) + 2*u - v + 4");
        assert!(p.discriminant_2d(&[0.3, 0.9]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn ex61_is_not_potential() {
        let vars = ["u", "v"];
        let f = VectorFunction::from_components(vec![
            parse("-atanh(u) + 2*atanh(v)", &vars).unwrap(),
            parse("atanh(u) - atanh(v)", &vars).unwrap(),
        ])
        .unwrap();
        let s = HodographSystem::new(f, BoxDomain::cube(2, -1.0, 1.0, 1e-3).unwrap()).unwrap();
        assert!(!is_potential(&s, 1e-9));
        let z = VectorFunction::from_components(vec![parse("0", &vars).unwrap(), parse("0", &vars).unwrap()]).unwrap();
        let s = HodographSystem::new(z, BoxDomain::cube(2, -1.0, 1.0, 1e-3).unwrap()).unwrap();
        assert!(is_potential(&s, 0.0));
    }
}
