use rand::{Rng, RngExt};

/// Axis-aligned box of admissible points (the velocity domain, or a sampling
/// box in Lagrangian coordinates).
///
/// The box is treated as open. Sampling and searches use the box shrunk by
/// `margin` times the side length on every face, which keeps them away from
/// boundaries where data such as `atanh` diverge.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    margin: f64,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum BoxError {
    #[error("lower and upper bounds have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("box has no coordinates")]
    Empty,
    #[error("axis {axis}: lower bound {lower} is not below upper bound {upper}")]
    Inverted { axis: usize, lower: f64, upper: f64 },
    #[error("margin {0} outside (0, 0.5)")]
    Margin(f64),
}

pub const DEFAULT_MARGIN: f64 = 1e-3;

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, margin: f64) -> Result<BoxDomain, BoxError> {
        if lower.len() != upper.len() {
            return Err(BoxError::LengthMismatch(lower.len(), upper.len()));
        }
        if lower.is_empty() {
            return Err(BoxError::Empty);
        }
        for (axis, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(BoxError::Inverted {
                    axis,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        if !(margin > 0.0 && margin < 0.5) {
            return Err(BoxError::Margin(margin));
        }
        Ok(BoxDomain { lower, upper, margin })
    }

    /// The cube `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64, margin: f64) -> Result<BoxDomain, BoxError> {
        BoxDomain::new(vec![lo; n], vec![hi; n], margin)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn with_margin(&self, margin: f64) -> Result<BoxDomain, BoxError> {
        BoxDomain::new(self.lower.clone(), self.upper.clone(), margin)
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    /// Bounds of the box shrunk by the margin.
    pub fn shrunk(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.lower.clone();
        let mut hi = self.upper.clone();
        for k in 0..self.dim() {
            let pad = self.margin * (self.upper[k] - self.lower[k]);
            lo[k] += pad;
            hi[k] -= pad;
        }
        (lo, hi)
    }

    /// Strictly inside the (open) box.
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| *l < *x && *x < *u)
    }

    /// Inside the shrunk box (boundary included).
    pub fn contains_shrunk(&self, p: &[f64]) -> bool {
        let (lo, hi) = self.shrunk();
        p.len() == self.dim() && p.iter().zip(lo.iter().zip(&hi)).all(|(x, (l, u))| *l <= *x && *x <= *u)
    }

    /// Smallest distance to a face of the shrunk box, relative to the side length.
    pub fn relative_clearance(&self, p: &[f64]) -> f64 {
        let (lo, hi) = self.shrunk();
        (0..self.dim())
            .map(|k| {
                let w = self.upper[k] - self.lower[k];
                ((p[k] - lo[k]).min(hi[k] - p[k])) / w
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let (lo, hi) = self.shrunk();
        lo.iter()
            .zip(&hi)
            .map(|(l, u)| l + (u - l) * rng.random::<f64>())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn rejects_bad_boxes() {
        assert!(BoxDomain::new(vec![0.0], vec![0.0], 0.1).is_err());
        assert!(BoxDomain::new(vec![0.0, 1.0], vec![1.0], 0.1).is_err());
        assert!(BoxDomain::new(vec![0.0], vec![1.0], 0.5).is_err());
        assert!(BoxDomain::new(vec![0.0], vec![1.0], 0.0).is_err());
        assert!(BoxDomain::new(vec![], vec![], 0.1).is_err());
    }

    #[test]
    fn open_box_and_shrunk_sampling() {
        let b = BoxDomain::cube(2, -1.0, 1.0, 0.01).unwrap();
        assert!(!b.contains(&[1.0, 0.0]));
        assert!(b.contains(&[0.999, 0.0]));
        assert!(!b.contains_shrunk(&[0.999, 0.0]));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let p = b.sample(&mut rng);
            assert!(b.contains_shrunk(&p));
        }
        assert_eq!(b.center(), vec![0.0, 0.0]);
    }
}
