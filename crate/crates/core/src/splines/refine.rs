//! Knot insertion and degree elevation of NURBS patches.
//!
//! Both operations act on homogeneous control points, one parametric
//! direction at a time, and leave the geometry map unchanged.

use faer::linalg::solvers::Solve;
use faer::Mat;

use super::knots::KnotVector;
use super::patch::{Direction, NurbsPatch};
use crate::error::{Error, Result};

pub(crate) type Hom = [f64; 3];

/// Insert the knots `new_knots` (any order, repeats allowed) in direction `dir`.
pub fn knot_insert(patch: &NurbsPatch, new_knots: &[f64], dir: Direction) -> Result<NurbsPatch> {
    if new_knots.is_empty() {
        return Ok(patch.clone());
    }
    let kv = patch.knots(dir);
    let mut x = new_knots.to_vec();
    x.sort_by(f64::total_cmp);
    let (lo, hi) = (kv.first(), kv.last());
    if x.iter().any(|&u| !(u > lo && u < hi)) {
        return Err(Error::Refinement(format!("inserted knots must lie strictly inside ({lo}, {hi})")));
    }
    for &u in &x {
        let m = kv.multiplicity(u) + x.iter().filter(|&&v| v == u).count();
        if m > kv.degree() {
            return Err(Error::Refinement(format!(
                "knot {u} would reach multiplicity {m} > degree {}",
                kv.degree()
            )));
        }
    }
    let mut new_kv = None;
    let patch_out = map_curves(patch, dir, |pw| {
        let (ubar, q) = refine_curve(kv, pw, &x)?;
        if new_kv.is_none() {
            new_kv = Some(ubar);
        }
        Ok(q)
    })?;
    let new_kv = KnotVector::new(new_kv.expect("patch has at least one curve"), kv.degree())?;
    rebuild(patch, dir, new_kv, &patch_out)
}

/// Split every nonempty span in direction `dir` into `pieces` equal parts.
pub fn subdivide(patch: &NurbsPatch, pieces: usize, dir: Direction) -> Result<NurbsPatch> {
    if pieces == 0 {
        return Err(Error::Refinement("subdivision count must be positive".into()));
    }
    let knots: Vec<f64> = patch
        .knots(dir)
        .spans()
        .iter()
        .flat_map(|&(_, a, b)| (1..pieces).map(move |k| a + (b - a) * k as f64 / pieces as f64))
        .collect();
    knot_insert(patch, &knots, dir)
}

/// Raise the degree in direction `dir` by `t`, keeping the continuity at every knot.
pub fn degree_elevate(patch: &NurbsPatch, t: usize, dir: Direction) -> Result<NurbsPatch> {
    if t == 0 {
        return Ok(patch.clone());
    }
    let kv = patch.knots(dir);
    let p = kv.degree();
    let mut values = Vec::new();
    for (u, m) in kv.breakpoints() {
        values.extend(std::iter::repeat_n(u, m + t));
    }
    let new_kv = KnotVector::new(values, p + t)?;
    let n_new = new_kv.num_basis();
    let tau = new_kv.greville();

    // collocation matrix of the elevated basis at its Greville points
    let mut vals = vec![0.0; p + t + 1];
    let mut ders = vec![0.0; p + t + 1];
    let mut a = Mat::<f64>::zeros(n_new, n_new);
    for (k, &u) in tau.iter().enumerate() {
        let span = new_kv.find_span(u)?;
        new_kv.basis_with_derivs(span, u, &mut vals, &mut ders);
        for (l, &v) in vals.iter().enumerate() {
            a[(k, span - p - t + l)] = v;
        }
    }
    let lu = a.partial_piv_lu();

    let mut old_vals = vec![0.0; p + 1];
    let mut old_ders = vec![0.0; p + 1];
    let old_basis: Vec<(usize, Vec<f64>)> = tau
        .iter()
        .map(|&u| {
            let span = kv.find_span(u)?;
            kv.basis_with_derivs(span, u, &mut old_vals, &mut old_ders);
            Ok((span, old_vals.clone()))
        })
        .collect::<Result<_>>()?;

    let curves = map_curves(patch, dir, |pw| {
        let mut rhs = Mat::<f64>::zeros(n_new, 3);
        for (k, (span, b)) in old_basis.iter().enumerate() {
            for (l, &v) in b.iter().enumerate() {
                let c = pw[span - p + l];
                for d in 0..3 {
                    rhs[(k, d)] += v * c[d];
                }
            }
        }
        let sol = lu.solve(&rhs);
        Ok((0..n_new).map(|k| [sol[(k, 0)], sol[(k, 1)], sol[(k, 2)]]).collect())
    })?;
    rebuild(patch, dir, new_kv, &curves)
}

/// Refine a curve by knot insertion (Boehm/Oslo style, all knots at once).
pub(crate) fn refine_curve(kv: &KnotVector, pw: &[Hom], x: &[f64]) -> Result<(Vec<f64>, Vec<Hom>)> {
    let p = kv.degree();
    let u = kv.values();
    let n = pw.len() - 1;
    let m = n + p + 1;
    let r = x.len() - 1;
    let a = kv.find_span(x[0])?;
    let b = kv.find_span(x[r])? + 1;
    let mut ubar = vec![0.0; m + r + 2];
    let mut q = vec![[0.0; 3]; n + r + 2];
    q[..=(a - p)].copy_from_slice(&pw[..=(a - p)]);
    for j in (b - 1)..=n {
        q[j + r + 1] = pw[j];
    }
    ubar[..=a].copy_from_slice(&u[..=a]);
    for j in (b + p)..=m {
        ubar[j + r + 1] = u[j];
    }
    let mut i = b + p - 1;
    let mut k = b + p + r;
    for j in (0..=r).rev() {
        while x[j] <= u[i] && i > a {
            q[k - p - 1] = pw[i - p - 1];
            ubar[k] = u[i];
            k -= 1;
            i -= 1;
        }
        q[k - p - 1] = q[k - p];
        for l in 1..=p {
            let ind = k - p + l;
            let mut alfa = ubar[k + l] - x[j];
            if alfa.abs() == 0.0 {
                q[ind - 1] = q[ind];
            } else {
                alfa /= ubar[k + l] - u[i - p + l];
                for d in 0..3 {
                    q[ind - 1][d] = alfa * q[ind - 1][d] + (1.0 - alfa) * q[ind][d];
                }
            }
        }
        ubar[k] = x[j];
        k -= 1;
    }
    Ok((ubar, q))
}

/// Apply a curve operation to every row (`U`) or column (`V`) of the homogeneous net.
fn map_curves<F>(patch: &NurbsPatch, dir: Direction, mut f: F) -> Result<Vec<Vec<Hom>>>
where
    F: FnMut(&[Hom]) -> Result<Vec<Hom>>,
{
    let hom = patch.homogeneous();
    let (nu, nv) = (patch.n_u(), patch.n_v());
    match dir {
        Direction::U => (0..nv)
            .map(|j| {
                let row: Vec<Hom> = (0..nu).map(|i| hom[j * nu + i]).collect();
                f(&row)
            })
            .collect(),
        Direction::V => (0..nu)
            .map(|i| {
                let col: Vec<Hom> = (0..nv).map(|j| hom[j * nu + i]).collect();
                f(&col)
            })
            .collect(),
    }
}

fn rebuild(patch: &NurbsPatch, dir: Direction, new_kv: KnotVector, curves: &[Vec<Hom>]) -> Result<NurbsPatch> {
    match dir {
        Direction::U => {
            let nu = new_kv.num_basis();
            let nv = patch.n_v();
            let mut hom = Vec::with_capacity(nu * nv);
            for row in curves {
                hom.extend_from_slice(row);
            }
            NurbsPatch::from_homogeneous(new_kv, patch.knots_v().clone(), &hom)
        }
        Direction::V => {
            let nu = patch.n_u();
            let nv = new_kv.num_basis();
            let mut hom = vec![[0.0; 3]; nu * nv];
            for (i, col) in curves.iter().enumerate() {
                for (j, h) in col.iter().enumerate() {
                    hom[j * nu + i] = *h;
                }
            }
            NurbsPatch::from_homogeneous(patch.knots_u().clone(), new_kv, &hom)
        }
    }
}
