use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use rayon::prelude::*;

use super::{dirac, heaviside, SmoothingParams, SymmetryMap};
use crate::assembly::{DesignPoint, Discretization};
use crate::error::{Error, Result};
use crate::model::DesignBasis;
use crate::splines::{Direction, Point};

/// Level-set value and physical gradient at a parametric point of a model patch.
pub fn eval_lsf(basis: &DesignBasis, coeffs: &[f64], patch: usize, xi: [f64; 2]) -> Result<(f64, [f64; 2])> {
    let d = basis
        .for_patch(patch)
        .ok_or_else(|| Error::InvalidInput(format!("patch {patch} carries no level set")))?;
    let e = d.nurbs.eval_basis(xi)?;
    let mut phi = 0.0;
    let mut g = [0.0; 2];
    for ((&i, &r), dr) in e.indices.iter().zip(&e.values).zip(&e.grads) {
        let c = coeffs[d.offset + i];
        phi += r * c;
        g[0] += dr[0] * c;
        g[1] += dr[1] * c;
    }
    Ok((phi, g))
}

/// Physical positions of the design quadrature points, in [`Discretization::design_points`] order.
pub fn design_point_positions(disc: &Discretization) -> Vec<Point> {
    disc.design_points().map(|(p, _)| p.x).collect()
}

/// Least-squares fit in the reduced variables.
///
/// Minimizes `int (Phi - target)^2` over the design patches plus
/// `penalty * sum_k Phi(c_k)^2` for the constraint points `c_k`, where
/// `Phi = sum R_i vars[map(i)]`. `target` holds one value per design point.
pub fn project_values(
    disc: &Discretization,
    sym: &SymmetryMap,
    target: &[f64],
    constraints: &[DesignPoint],
    penalty: f64,
) -> Result<Vec<f64>> {
    let n = sym.num_vars();
    let map = sym.map();
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; n];
    let mut count = 0;
    for ((pt, d), &f) in disc.design_points().zip(target) {
        for (&i, &ri) in d.idx.iter().zip(&d.r) {
            rhs[map[i]] += pt.w * ri * f;
            for (&j, &rj) in d.idx.iter().zip(&d.r) {
                trip.push(Triplet::new(map[i], map[j], pt.w * ri * rj));
            }
        }
        count += 1;
    }
    if count != target.len() {
        return Err(Error::InvalidInput(format!("expected {count} target values, got {}", target.len())));
    }
    if penalty > 0.0 {
        for c in constraints {
            for (&i, &ri) in c.idx.iter().zip(&c.r) {
                for (&j, &rj) in c.idx.iter().zip(&c.r) {
                    trip.push(Triplet::new(map[i], map[j], penalty * ri * rj));
                }
            }
        }
    }
    let mat = SparseColMat::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::Solver(format!("mass matrix creation failed: {e:?}")))?;
    let llt = mat
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::Solver(format!("design mass matrix is singular: {e:?}")))?;
    let mut b = Mat::from_fn(n, 1, |i, _| rhs[i]);
    llt.solve_in_place(b.as_mut());
    let out: Vec<f64> = (0..n).map(|i| b[(i, 0)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("level-set projection".into()));
    }
    Ok(out)
}

/// Mean diagonal of the reduced design mass matrix.
pub fn mean_mass_diagonal(disc: &Discretization, sym: &SymmetryMap) -> f64 {
    let map = sym.map();
    let mut diag = vec![0.0; sym.num_vars()];
    for (pt, d) in disc.design_points() {
        for (a, (&i, &ri)) in d.idx.iter().zip(&d.r).enumerate() {
            for (&j, &rj) in d.idx.iter().zip(&d.r).skip(a) {
                if map[i] == map[j] {
                    let f = if i == j { 1.0 } else { 2.0 };
                    diag[map[i]] += f * pt.w * ri * rj;
                }
            }
        }
    }
    diag.iter().sum::<f64>() / diag.len().max(1) as f64
}

/// L2 projection of a function of the physical point; returns reduced variables.
pub fn project_lsf(disc: &Discretization, sym: &SymmetryMap, target: impl Fn(Point) -> f64 + Sync) -> Result<Vec<f64>> {
    let xs = design_point_positions(disc);
    let values: Vec<f64> = xs.par_iter().map(|&x| target(x)).collect();
    project_values(disc, sym, &values, &[], 0.0)
}

/// A zero of the level set located on an isoparameter line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroPoint {
    /// Model patch index.
    pub patch: usize,
    pub xi: [f64; 2],
    pub x: Point,
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm.abs() <= 1e-10 || (b - a).abs() <= 1e-15 * (1.0 + m.abs()) {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Zeros of the level set along `lines_per_span` isoparameter lines per knot
/// span in each direction of every design patch, sampled `lines_per_span`
/// times per span along the line and refined by bisection.
pub fn interface_points(basis: &DesignBasis, coeffs: &[f64], lines_per_span: usize) -> Result<Vec<ZeroPoint>> {
    if lines_per_span == 0 {
        return Err(Error::InvalidInput("need at least one line per span".into()));
    }
    let mut out: Vec<ZeroPoint> = Vec::new();
    let scale = basis.control_points().iter().fold(0.0f64, |s, p| s.max(p[0].abs()).max(p[1].abs()));
    for d in &basis.patches {
        let phi = |xi: [f64; 2]| eval_lsf(basis, coeffs, d.patch, xi).map(|v| v.0).unwrap_or(f64::NAN);
        for line_dir in [Direction::U, Direction::V] {
            let across = match line_dir {
                Direction::U => Direction::V,
                Direction::V => Direction::U,
            };
            let params = |dir: Direction| -> Vec<f64> {
                let mut ts = Vec::new();
                for &(_, a, b) in &d.nurbs.knots(dir).spans() {
                    for k in 0..lines_per_span {
                        ts.push(a + (b - a) * k as f64 / lines_per_span as f64);
                    }
                }
                ts.push(d.nurbs.knots(dir).last());
                ts
            };
            let along = params(line_dir);
            for s in params(across) {
                let at = |t: f64| match line_dir {
                    Direction::U => [t, s],
                    Direction::V => [s, t],
                };
                let vals: Vec<f64> = along.iter().map(|&t| phi(at(t))).collect();
                for k in 0..along.len() {
                    let t = if vals[k] == 0.0 {
                        Some(along[k])
                    } else if k + 1 < along.len() && vals[k] * vals[k + 1] < 0.0 {
                        Some(bisect(|t| phi(at(t)), along[k], along[k + 1], vals[k]))
                    } else {
                        None
                    };
                    if let Some(t) = t {
                        let xi = at(t);
                        let x = d.nurbs.point(xi)?;
                        out.push(ZeroPoint { patch: d.patch, xi, x });
                    }
                }
            }
        }
    }
    // points on shared edges and line crossings appear more than once
    let tol = 1e-9 * scale.max(1e-300);
    let mut unique: Vec<ZeroPoint> = Vec::with_capacity(out.len());
    out.sort_by(|a, b| a.x[0].total_cmp(&b.x[0]));
    for p in out {
        let dup = unique
            .iter()
            .rev()
            .take_while(|q| p.x[0] - q.x[0] <= tol)
            .any(|q| (p.x[1] - q.x[1]).abs() <= tol);
        if !dup {
            unique.push(p);
        }
    }
    Ok(unique)
}

/// Reinitialize to a signed distance while pinning the current zero contour.
///
/// The target at every design point is the distance to the nearest interface
/// point with the sign of the current level set; it is fitted in the reduced
/// variables with a penalty of `penalty_factor` times the mean mass diagonal
/// on the level set at the interface points. Returns reduced variables, or
/// `None` when there is no interface.
pub fn reinitialize(
    disc: &Discretization,
    sym: &SymmetryMap,
    coeffs: &[f64],
    lines_per_span: usize,
    penalty_factor: f64,
) -> Result<Option<Vec<f64>>> {
    let zeros = interface_points(&disc.design, coeffs, lines_per_span)?;
    if zeros.is_empty() {
        log::warn!("reinitialization skipped: the level set has no zero contour");
        return Ok(None);
    }
    let pts: Vec<(&Point, f64)> = disc.design_points().map(|(p, d)| (&p.x, d.phi(coeffs))).collect();
    let target: Vec<f64> = pts
        .par_iter()
        .map(|&(x, phi)| {
            let dist = zeros
                .iter()
                .map(|z| (x[0] - z.x[0]).powi(2) + (x[1] - z.x[1]).powi(2))
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            if phi < 0.0 {
                -dist
            } else {
                dist
            }
        })
        .collect();
    let mut constraints = Vec::with_capacity(zeros.len());
    for z in &zeros {
        let d = disc.design.for_patch(z.patch).expect("zero points lie on design patches");
        let e = d.nurbs.eval_basis(z.xi)?;
        constraints.push(DesignPoint { idx: e.indices.iter().map(|&i| d.offset + i).collect(), r: e.values, grad: e.grads });
    }
    let penalty = penalty_factor * mean_mass_diagonal(disc, sym);
    project_values(disc, sym, &target, &constraints, penalty).map(Some)
}

/// `int delta(Phi)` over the design patches.
pub fn perimeter(disc: &Discretization, coeffs: &[f64], sp: SmoothingParams) -> f64 {
    disc.design_points().map(|(p, d)| p.w * dirac(d.phi(coeffs), sp)).sum()
}

/// `J_vol = int H(Phi)` and its gradient `int delta(Phi) R_i` over all coefficients.
pub fn volume_measure(disc: &Discretization, coeffs: &[f64], sp: SmoothingParams) -> (f64, Vec<f64>) {
    let mut j = 0.0;
    let mut g = vec![0.0; disc.num_design()];
    for (p, d) in disc.design_points() {
        let phi = d.phi(coeffs);
        j += p.w * heaviside(phi, sp);
        let dl = dirac(phi, sp);
        if dl != 0.0 {
            for (&i, &r) in d.idx.iter().zip(&d.r) {
                g[i] += p.w * dl * r;
            }
        }
    }
    (j, g)
}
