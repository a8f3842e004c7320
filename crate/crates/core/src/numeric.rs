//! Small scalar and banded-linear-algebra helpers shared by the solver modules.

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Requires `f(lo)` and `f(hi)` to have opposite signs (zero counts as either sign).
/// Returns the midpoint of the final bracket.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Symmetric tridiagonal matrix stored by its diagonal and first off-diagonal.
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// LU factors of a [`SymTridiagonal`] (Thomas algorithm), reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct TridiagonalFactor {
    pivots: Vec<f64>,
    lower: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Factor without pivoting; valid for the diagonally dominant matrices built here.
    pub fn factor(&self) -> TridiagonalFactor {
        let n = self.diag.len();
        let mut pivots = vec![0.0; n];
        let mut lower = vec![0.0; n.saturating_sub(1)];
        if n == 0 {
            return TridiagonalFactor { pivots, lower, off: Vec::new() };
        }
        pivots[0] = self.diag[0];
        for i in 1..n {
            lower[i - 1] = self.off[i - 1] / pivots[i - 1];
            pivots[i] = self.diag[i] - lower[i - 1] * self.off[i - 1];
        }
        TridiagonalFactor { pivots, lower, off: self.off.clone() }
    }
}

impl TridiagonalFactor {
    /// Solve in place.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.pivots.len();
        debug_assert_eq!(rhs.len(), n);
        for i in 1..n {
            rhs[i] -= self.lower[i - 1] * rhs[i - 1];
        }
        if n == 0 {
            return;
        }
        rhs[n - 1] /= self.pivots[n - 1];
        for i in (0..n - 1).rev() {
            rhs[i] = (rhs[i] - self.off[i] * rhs[i + 1]) / self.pivots[i];
        }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10).is_none());
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_min(|x| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thomas_matches_dense_solve() {
        let m = SymTridiagonal { diag: vec![4.0, 5.0, 6.0, 7.0], off: vec![-1.0, -2.0, 0.5] };
        let dense = nalgebra::DMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                m.diag[i]
            } else if i + 1 == j {
                m.off[i]
            } else if j + 1 == i {
                m.off[j]
            } else {
                0.0
            }
        });
        let b = nalgebra::DVector::from_vec(vec![1.0, -2.0, 3.0, 0.25]);
        let expected = dense.lu().solve(&b).unwrap();
        let mut x = b.as_slice().to_vec();
        m.factor().solve_in_place(&mut x);
        for i in 0..4 {
            assert!((x[i] - expected[i]).abs() < 1e-14);
        }
    }
}
