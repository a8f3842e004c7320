//! Steepest descent in the weighted `H^1` metric restricted to tangent spaces.
//!
//! The metric on the free nodes is `T (x) I_n` with `T` symmetric tridiagonal. Nodes in the
//! active set may only move tangentially to the zero set of `W`, so each node carries an
//! orthonormal basis of its admissible directions (all of `R^n`, the tangent space of the
//! zero set, or nothing). The reduced system is block tridiagonal and is solved by block
//! elimination with blocks of size at most `n`.

use crate::numeric::dot;
use crate::potential::PotentialSpec;

/// How a node may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Freedom {
    Free,
    Tangent,
    Fixed,
}

pub(crate) struct TangentMetric {
    dim: usize,
    diag: Vec<f64>,
    off: Vec<f64>,
    freedom: Vec<Freedom>,
    rank: Vec<usize>,
    /// Basis columns of node `i` at `basis[i * dim * dim + j * dim ..]`.
    basis: Vec<f64>,
    /// Unit normal of the zero set at constrained nodes.
    normal: Vec<f64>,
    dinv: Vec<f64>,
    elim: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    block: Vec<f64>,
    coupling: Vec<f64>,
}

impl TangentMetric {
    /// Metric `int e^{c x} (v' w' + sigma v w)` with lumped mass, over nodes `0..weights.len()`
    /// (the last grid node is excluded).
    pub(crate) fn new(nodes: &[f64], weights: &[f64], sigma: f64, dim: usize) -> Self {
        let free = nodes.len() - 1;
        let mut diag = vec![0.0; free];
        let mut off = vec![0.0; free.saturating_sub(1)];
        let floor = f64::MIN_POSITIVE * 1e10;
        for i in 0..free {
            let h = nodes[i + 1] - nodes[i];
            let e = weights[i].max(floor);
            let stiff = e / (h * h);
            diag[i] += stiff + 0.5 * sigma * e;
            if i + 1 < free {
                diag[i + 1] += stiff + 0.5 * sigma * e;
                off[i] = -stiff;
            }
        }
        let dd = dim * dim;
        let mut basis = vec![0.0; free * dd];
        for i in 0..free {
            for k in 0..dim {
                basis[i * dd + k * dim + k] = 1.0;
            }
        }
        TangentMetric {
            dim,
            diag,
            off,
            freedom: vec![Freedom::Free; free],
            rank: vec![dim; free],
            basis,
            normal: vec![0.0; free * dim],
            dinv: vec![0.0; free * dd],
            elim: vec![0.0; free * dd],
            y: vec![0.0; free * dim],
            z: vec![0.0; free * dim],
            block: vec![0.0; dd],
            coupling: vec![0.0; dd],
        }
    }

    pub(crate) fn free_nodes(&self) -> usize {
        self.diag.len()
    }

    pub(crate) fn freedom(&self, i: usize) -> Freedom {
        self.freedom[i]
    }

    /// Restrict node `i` to the tangent space of the zero set at `u`.
    pub(crate) fn constrain(&mut self, spec: &PotentialSpec, i: usize, u: &[f64]) {
        let dim = self.dim;
        let dd = dim * dim;
        let g = spec.gradient(u);
        let gn = dot(&g, &g).sqrt();
        if gn == 0.0 || dim == 1 {
            self.set_fixed(i);
            return;
        }
        let n: Vec<f64> = g.iter().map(|v| v / gn).collect();
        self.normal[i * dim..(i + 1) * dim].copy_from_slice(&n);
        // Householder reflector taking e_0 to -sign(n_0) n; its other columns span n^perp
        let s = if n[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = n.clone();
        v[0] += s;
        let vv = dot(&v, &v);
        let b = &mut self.basis[i * dd..(i + 1) * dd];
        for col in 1..dim {
            for r in 0..dim {
                let id = if r == col { 1.0 } else { 0.0 };
                b[(col - 1) * dim + r] = id - 2.0 * v[r] * v[col] / vv;
            }
        }
        self.freedom[i] = Freedom::Tangent;
        self.rank[i] = dim - 1;
    }

    pub(crate) fn set_fixed(&mut self, i: usize) {
        self.freedom[i] = Freedom::Fixed;
        self.rank[i] = 0;
    }

    pub(crate) fn release(&mut self, i: usize) {
        let dim = self.dim;
        let dd = dim * dim;
        let b = &mut self.basis[i * dd..(i + 1) * dd];
        b.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..dim {
            b[k * dim + k] = 1.0;
        }
        self.freedom[i] = Freedom::Free;
        self.rank[i] = dim;
    }

    pub(crate) fn release_all(&mut self) {
        for i in 0..self.free_nodes() {
            if self.freedom[i] != Freedom::Free {
                self.release(i);
            }
        }
    }

    /// `(B_i^T B_j) * scale` into `self.coupling` (row-major `rank_i x rank_j`).
    fn cross(&mut self, i: usize, j: usize, scale: f64) {
        let dim = self.dim;
        let dd = dim * dim;
        let (ki, kj) = (self.rank[i], self.rank[j]);
        let both_free = self.freedom[i] == Freedom::Free && self.freedom[j] == Freedom::Free;
        for a in 0..ki {
            for b in 0..kj {
                self.coupling[a * kj + b] = if both_free {
                    if a == b {
                        scale
                    } else {
                        0.0
                    }
                } else {
                    let bi = &self.basis[i * dd + a * dim..i * dd + (a + 1) * dim];
                    let bj = &self.basis[j * dd + b * dim..j * dd + (b + 1) * dim];
                    scale * dot(bi, bj)
                };
            }
        }
    }

    /// Minimize `g . d + d^T P d / 2` over admissible `d`; writes `d` (all grid nodes, the
    /// last one zero) and returns `g . d`.
    pub(crate) fn solve(&mut self, grad: &[f64], out: &mut [f64]) -> f64 {
        let dim = self.dim;
        let dd = dim * dim;
        let free = self.free_nodes();
        for i in 0..free {
            let k = self.rank[i];
            // right-hand side -B^T g
            for a in 0..k {
                let col = &self.basis[i * dd + a * dim..i * dd + (a + 1) * dim];
                self.y[i * dim + a] = -dot(col, &grad[i * dim..(i + 1) * dim]);
            }
            // D_i = diag_i I - C^T E with E = D_{i-1}^{-1} C
            for a in 0..k {
                for b in 0..k {
                    self.block[a * k + b] = if a == b { self.diag[i] } else { 0.0 };
                }
            }
            if i > 0 && self.rank[i - 1] > 0 && k > 0 {
                let kp = self.rank[i - 1];
                self.cross(i - 1, i, self.off[i - 1]);
                let dinv_prev = &self.dinv[(i - 1) * dd..i * dd];
                let e = &mut self.elim[i * dd..(i + 1) * dd];
                for a in 0..kp {
                    for b in 0..k {
                        e[a * k + b] = (0..kp).map(|r| dinv_prev[a * kp + r] * self.coupling[r * k + b]).sum();
                    }
                }
                for a in 0..k {
                    for b in 0..k {
                        let s: f64 = (0..kp).map(|r| self.coupling[r * k + a] * e[r * k + b]).sum();
                        self.block[a * k + b] -= s;
                    }
                    let s: f64 = (0..kp).map(|r| e[r * k + a] * self.y[(i - 1) * dim + r]).sum();
                    self.y[i * dim + a] -= s;
                }
            } else {
                self.elim[i * dd..(i + 1) * dd].iter_mut().for_each(|v| *v = 0.0);
            }
            invert_spd(&mut self.block[..k * k], k, &mut self.dinv[i * dd..i * dd + k * k]);
        }
        // back substitution: z_i = D_i^{-1} y_i - E_{i+1} z_{i+1}
        for i in (0..free).rev() {
            let k = self.rank[i];
            for a in 0..k {
                let mut s: f64 = (0..k).map(|b| self.dinv[i * dd + a * k + b] * self.y[i * dim + b]).sum();
                if i + 1 < free && self.rank[i + 1] > 0 {
                    let kn = self.rank[i + 1];
                    s -= (0..kn).map(|b| self.elim[(i + 1) * dd + a * kn + b] * self.z[(i + 1) * dim + b]).sum::<f64>();
                }
                self.z[i * dim + a] = s;
            }
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut gd = 0.0;
        for i in 0..free {
            let k = self.rank[i];
            for a in 0..k {
                let za = self.z[i * dim + a];
                for r in 0..dim {
                    out[i * dim + r] += self.basis[i * dd + a * dim + r] * za;
                }
            }
            gd += dot(&out[i * dim..(i + 1) * dim], &grad[i * dim..(i + 1) * dim]);
        }
        gd
    }

    /// Multiplier of the normal constraint at a tangent node: `n . (g + P d)`.
    /// Negative means the node would rather move into `W > 0`.
    pub(crate) fn multiplier(&self, i: usize, grad: &[f64], d: &[f64]) -> f64 {
        let dim = self.dim;
        let free = self.free_nodes();
        let n = &self.normal[i * dim..(i + 1) * dim];
        let mut s = 0.0;
        for r in 0..dim {
            let mut pd = self.diag[i] * d[i * dim + r];
            if i > 0 {
                pd += self.off[i - 1] * d[(i - 1) * dim + r];
            }
            if i + 1 < free {
                pd += self.off[i] * d[(i + 1) * dim + r];
            }
            s += n[r] * (grad[i * dim + r] + pd);
        }
        s
    }
}

/// Inverse of a small symmetric positive definite matrix by Gauss-Jordan elimination.
fn invert_spd(a: &mut [f64], k: usize, out: &mut [f64]) {
    for r in 0..k {
        for c in 0..k {
            out[r * k + c] = if r == c { 1.0 } else { 0.0 };
        }
    }
    for p in 0..k {
        let piv = a[p * k + p];
        for c in 0..k {
            a[p * k + c] /= piv;
            out[p * k + c] /= piv;
        }
        for r in 0..k {
            if r != p {
                let f = a[r * k + p];
                if f != 0.0 {
                    for c in 0..k {
                        a[r * k + c] -= f * a[p * k + c];
                        out[r * k + c] -= f * out[p * k + c];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::SymTridiagonal;

    #[test]
    fn unconstrained_solve_matches_tridiagonal_per_component() {
        let spec = PotentialSpec::decoupled_quartic(0.6, 1.2).unwrap();
        let nodes: Vec<f64> = (0..12).map(|i| -3.0 + 0.5 * i as f64).collect();
        let weights: Vec<f64> = nodes.windows(2).map(|w| (0.7 * w[0]).exp() * (w[1] - w[0])).collect();
        let mut m = TangentMetric::new(&nodes, &weights, 2.0, 2);
        let grad: Vec<f64> = (0..24).map(|i| if i >= 22 { 0.0 } else { ((i * 7) % 5) as f64 - 2.0 }).collect();
        let mut d = vec![0.0; 24];
        let gd = m.solve(&grad, &mut d);
        let t = SymTridiagonal { diag: m.diag.clone(), off: m.off.clone() }.factor();
        for k in 0..2 {
            let mut rhs: Vec<f64> = (0..11).map(|i| -grad[i * 2 + k]).collect();
            t.solve_in_place(&mut rhs);
            for i in 0..11 {
                assert!((rhs[i] - d[i * 2 + k]).abs() < 1e-12 * (1.0 + rhs[i].abs()));
            }
        }
        assert!(gd < 0.0);
        let _ = spec;
    }

    #[test]
    fn tangent_nodes_move_along_the_zero_set() {
        let spec = PotentialSpec::decoupled_quartic(0.6, 1.2).unwrap();
        let nodes: Vec<f64> = (0..10).map(|i| -2.0 + 0.4 * i as f64).collect();
        let weights: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        let mut m = TangentMetric::new(&nodes, &weights, 1.0, 2);
        let u = [0.3, 0.9];
        m.constrain(&spec, 3, &u);
        m.set_fixed(6);
        let grad: Vec<f64> = (0..20).map(|i| if i >= 18 { 0.0 } else { (i as f64 * 0.37).sin() }).collect();
        let mut d = vec![0.0; 20];
        let gd = m.solve(&grad, &mut d);
        let n = spec.gradient(&u);
        assert!(dot(&n, &d[6..8]).abs() < 1e-12);
        assert_eq!(&d[12..14], &[0.0, 0.0]);
        assert!(gd < 0.0);
        // optimality in the admissible subspace: tangential residual of g + P d vanishes
        for i in [0usize, 1, 2, 4, 5, 7, 8] {
            for r in 0..2 {
                let mut pd = m.diag[i] * d[i * 2 + r];
                if i > 0 {
                    pd += m.off[i - 1] * d[(i - 1) * 2 + r];
                }
                if i + 1 < 9 {
                    pd += m.off[i] * d[(i + 1) * 2 + r];
                }
                assert!((grad[i * 2 + r] + pd).abs() < 1e-10, "node {i}");
            }
        }
        let lam = m.multiplier(3, &grad, &d);
        let nn = dot(&n, &n).sqrt();
        let mut res = [0.0; 2];
        for r in 0..2 {
            res[r] = grad[6 + r] + m.diag[3] * d[6 + r] + m.off[2] * d[4 + r] + m.off[3] * d[8 + r];
        }
        // the residual at the tangent node is parallel to the normal
        assert!((res[0] - lam * n[0] / nn).abs() < 1e-10);
        assert!((res[1] - lam * n[1] / nn).abs() < 1e-10);
    }
}
