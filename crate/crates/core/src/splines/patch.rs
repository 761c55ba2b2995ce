use super::knots::KnotVector;
use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Parametric direction of a tensor-product patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    U,
    V,
}

/// Bivariate NURBS patch. Control point `(i, j)` is stored at `j * n_u + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NurbsPatch {
    knots_u: KnotVector,
    knots_v: KnotVector,
    control_points: Vec<Point>,
    weights: Vec<f64>,
}

/// Nonzero basis functions of a patch at one parameter.
#[derive(Debug, Clone, Default)]
pub struct BasisEval {
    pub span: (usize, usize),
    /// Patch-local control indices of the nonzero functions.
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    /// Derivatives with respect to (xi, eta).
    pub param_grads: Vec<[f64; 2]>,
    /// Derivatives with respect to (x, y).
    pub grads: Vec<[f64; 2]>,
    pub point: Point,
    /// `jacobian[a][b] = d x_a / d xi_b`.
    pub jacobian: [[f64; 2]; 2],
    pub det_j: f64,
}

impl NurbsPatch {
    pub fn new(
        knots_u: KnotVector,
        knots_v: KnotVector,
        control_points: Vec<Point>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let n = knots_u.num_basis() * knots_v.num_basis();
        if control_points.len() != n || weights.len() != n {
            return Err(Error::Geometry(format!(
                "control net has {} points and {} weights, knots require {n}",
                control_points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Geometry("weights must be positive".into()));
        }
        if control_points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Geometry("non-finite control point".into()));
        }
        Ok(Self { knots_u, knots_v, control_points, weights })
    }

    /// Overwrite one control point and its weight.
    pub(crate) fn set_control(&mut self, index: usize, point: Point, weight: f64) {
        self.control_points[index] = point;
        self.weights[index] = weight;
    }

    pub fn knots(&self, dir: Direction) -> &KnotVector {
        match dir {
            Direction::U => &self.knots_u,
            Direction::V => &self.knots_v,
        }
    }

    pub fn knots_u(&self) -> &KnotVector {
        &self.knots_u
    }

    pub fn knots_v(&self) -> &KnotVector {
        &self.knots_v
    }

    pub fn degree(&self, dir: Direction) -> usize {
        self.knots(dir).degree()
    }

    pub fn n_u(&self) -> usize {
        self.knots_u.num_basis()
    }

    pub fn n_v(&self) -> usize {
        self.knots_v.num_basis()
    }

    pub fn num_basis(&self) -> usize {
        self.n_u() * self.n_v()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_u() + i
    }

    pub fn control_points(&self) -> &[Point] {
        &self.control_points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Parametric domain `[[u0, u1], [v0, v1]]`.
    pub fn domain(&self) -> [[f64; 2]; 2] {
        [
            [self.knots_u.first(), self.knots_u.last()],
            [self.knots_v.first(), self.knots_v.last()],
        ]
    }

    /// Evaluate the rational basis, its derivatives and the geometry map.
    ///
    /// Fails with a geometry error when the Jacobian determinant is not positive.
    pub fn eval_basis(&self, xi: [f64; 2]) -> Result<BasisEval> {
        let mut out = BasisEval::default();
        self.eval_basis_into(xi, &mut out)?;
        if !(out.det_j > 0.0) {
            return Err(Error::Geometry(format!(
                "non-positive Jacobian determinant {} at {:?}",
                out.det_j, xi
            )));
        }
        Ok(out)
    }

    /// Like [`eval_basis`](Self::eval_basis) but tolerates degenerate Jacobians
    /// (physical gradients are then left as zeros).
    pub fn eval_basis_into(&self, xi: [f64; 2], out: &mut BasisEval) -> Result<()> {
        let (p, q) = (self.knots_u.degree(), self.knots_v.degree());
        let su = self.knots_u.find_span(xi[0])?;
        let sv = self.knots_v.find_span(xi[1])?;
        let mut nu = vec![0.0; p + 1];
        let mut du = vec![0.0; p + 1];
        let mut nv = vec![0.0; q + 1];
        let mut dv = vec![0.0; q + 1];
        self.knots_u.basis_with_derivs(su, xi[0], &mut nu, &mut du);
        self.knots_v.basis_with_derivs(sv, xi[1], &mut nv, &mut dv);

        let count = (p + 1) * (q + 1);
        out.span = (su, sv);
        out.indices.clear();
        out.values.clear();
        out.param_grads.clear();
        out.grads.clear();
        let mut w_sum = 0.0;
        let mut w_du = 0.0;
        let mut w_dv = 0.0;
        for b in 0..=q {
            for a in 0..=p {
                let idx = self.index(su - p + a, sv - q + b);
                let w = self.weights[idx];
                let val = nu[a] * nv[b] * w;
                let gu = du[a] * nv[b] * w;
                let gv = nu[a] * dv[b] * w;
                w_sum += val;
                w_du += gu;
                w_dv += gv;
                out.indices.push(idx);
                out.values.push(val);
                out.param_grads.push([gu, gv]);
            }
        }
        let mut point = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        for k in 0..count {
            let r = out.values[k] / w_sum;
            let g = out.param_grads[k];
            let ru = (g[0] - r * w_du) / w_sum;
            let rv = (g[1] - r * w_dv) / w_sum;
            out.values[k] = r;
            out.param_grads[k] = [ru, rv];
            let c = self.control_points[out.indices[k]];
            for a in 0..2 {
                point[a] += r * c[a];
                jac[a][0] += ru * c[a];
                jac[a][1] += rv * c[a];
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        out.point = point;
        out.jacobian = jac;
        out.det_j = det;
        if det.abs() > 0.0 {
            // grad_x R = J^{-T} grad_xi R
            let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
            for g in &out.param_grads {
                out.grads.push([inv[0][0] * g[0] + inv[1][0] * g[1], inv[0][1] * g[0] + inv[1][1] * g[1]]);
            }
        } else {
            out.grads.resize(count, [0.0; 2]);
        }
        Ok(())
    }

    /// Mapped physical point of parameter `xi`.
    pub fn point(&self, xi: [f64; 2]) -> Result<Point> {
        let mut out = BasisEval::default();
        self.eval_basis_into(xi, &mut out)?;
        Ok(out.point)
    }

    /// Parameter whose image is `x`, by damped Newton iteration from `seed`,
    /// clamped to the domain. `None` if the iteration does not reach `tol`.
    pub fn invert(&self, x: Point, seed: [f64; 2], tol: f64) -> Option<[f64; 2]> {
        let dom = self.domain();
        let mut xi = seed;
        let mut e = BasisEval::default();
        for _ in 0..40 {
            self.eval_basis_into(xi, &mut e).ok()?;
            let r = [x[0] - e.point[0], x[1] - e.point[1]];
            if r[0].hypot(r[1]) <= tol {
                return Some(xi);
            }
            let j = e.jacobian;
            if !(e.det_j.abs() > 0.0) {
                return None;
            }
            let d = [(j[1][1] * r[0] - j[0][1] * r[1]) / e.det_j, (j[0][0] * r[1] - j[1][0] * r[0]) / e.det_j];
            let next = [
                (xi[0] + d[0]).clamp(dom[0][0], dom[0][1]),
                (xi[1] + d[1]).clamp(dom[1][0], dom[1][1]),
            ];
            if next == xi {
                return None;
            }
            xi = next;
        }
        None
    }

    /// Patch-local control indices along an edge, ordered by increasing parameter.
    pub fn edge_indices(&self, edge: Edge) -> Vec<usize> {
        let (nu, nv) = (self.n_u(), self.n_v());
        match edge {
            Edge::VMin => (0..nu).map(|i| self.index(i, 0)).collect(),
            Edge::VMax => (0..nu).map(|i| self.index(i, nv - 1)).collect(),
            Edge::UMin => (0..nv).map(|j| self.index(0, j)).collect(),
            Edge::UMax => (0..nv).map(|j| self.index(nu - 1, j)).collect(),
        }
    }

    /// Parameter of a point on `edge` given the running parameter `t` along it.
    pub fn edge_param(&self, edge: Edge, t: f64) -> [f64; 2] {
        let [[u0, u1], [v0, v1]] = self.domain();
        match edge {
            Edge::VMin => [t, v0],
            Edge::VMax => [t, v1],
            Edge::UMin => [u0, t],
            Edge::UMax => [u1, t],
        }
    }

    /// Rebuild a patch from homogeneous control data `[w x, w y, w]`.
    pub(crate) fn from_homogeneous(knots_u: KnotVector, knots_v: KnotVector, hom: &[[f64; 3]]) -> Result<Self> {
        let cps = hom.iter().map(|h| [h[0] / h[2], h[1] / h[2]]).collect();
        let ws = hom.iter().map(|h| h[2]).collect();
        Self::new(knots_u, knots_v, cps, ws)
    }

    pub(crate) fn homogeneous(&self) -> Vec<[f64; 3]> {
        self.control_points
            .iter()
            .zip(&self.weights)
            .map(|(c, &w)| [c[0] * w, c[1] * w, w])
            .collect()
    }
}

/// Edge of the parametric square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    /// u = u_min
    UMin,
    /// u = u_max
    UMax,
    /// v = v_min
    VMin,
    /// v = v_max
    VMax,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::UMin, Edge::UMax, Edge::VMin, Edge::VMax];

    /// Direction in which the edge runs.
    pub fn running(self) -> Direction {
        match self {
            Edge::UMin | Edge::UMax => Direction::V,
            Edge::VMin | Edge::VMax => Direction::U,
        }
    }
}
