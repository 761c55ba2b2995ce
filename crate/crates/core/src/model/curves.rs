//! Planar rational curves used to assemble layered patch layouts.

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::splines::{refine_curve, Hom, KnotVector, NurbsPatch, Point};

/// Rational B-spline curve stored with homogeneous control points.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub knots: KnotVector,
    pub hom: Vec<Hom>,
}

impl Curve {
    /// Circular arc of `radius` around `center` from angle `a0` to `a1` (|a1 - a0| < pi).
    pub fn arc(center: Point, radius: f64, a0: f64, a1: f64) -> Self {
        let half = 0.5 * (a1 - a0);
        let mid = 0.5 * (a0 + a1);
        let w = half.cos();
        let p0 = [center[0] + radius * a0.cos(), center[1] + radius * a0.sin()];
        let p2 = [center[0] + radius * a1.cos(), center[1] + radius * a1.sin()];
        let d = radius / w;
        let p1 = [center[0] + d * mid.cos(), center[1] + d * mid.sin()];
        Self::quadratic(p0, p1, p2, w)
    }

    /// Straight segment, written as a quadratic with its midpoint as middle control point.
    pub fn line(p0: Point, p1: Point) -> Self {
        let mid = [0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1])];
        Self::quadratic(p0, mid, p1, 1.0)
    }

    /// Two straight pieces meeting at `corner`, joined C0 by a double knot at 0.5.
    pub fn polyline(p0: Point, corner: Point, p1: Point) -> Self {
        let knots = KnotVector::new(vec![0., 0., 0., 0.5, 0.5, 1., 1., 1.], 2).expect("valid knots");
        let m0 = [0.5 * (p0[0] + corner[0]), 0.5 * (p0[1] + corner[1])];
        let m1 = [0.5 * (corner[0] + p1[0]), 0.5 * (corner[1] + p1[1])];
        let hom = [p0, m0, corner, m1, p1].iter().map(|p| [p[0], p[1], 1.0]).collect();
        Self { knots, hom }
    }

    fn quadratic(p0: Point, p1: Point, p2: Point, w1: f64) -> Self {
        let knots = KnotVector::new(vec![0., 0., 0., 1., 1., 1.], 2).expect("valid knots");
        let hom = vec![[p0[0], p0[1], 1.0], [p1[0] * w1, p1[1] * w1, w1], [p2[0], p2[1], 1.0]];
        Self { knots, hom }
    }

    /// Apply the affine map `x -> A x + b`; conics stay exact.
    pub fn affine(&self, a: [[f64; 2]; 2], b: Point) -> Self {
        let hom = self
            .hom
            .iter()
            .map(|h| {
                let (x, y, w) = (h[0] / h[2], h[1] / h[2], h[2]);
                let nx = a[0][0] * x + a[0][1] * y + b[0];
                let ny = a[1][0] * x + a[1][1] * y + b[1];
                [nx * w, ny * w, w]
            })
            .collect();
        Self { knots: self.knots.clone(), hom }
    }

    pub fn start(&self) -> Point {
        let h = self.hom[0];
        [h[0] / h[2], h[1] / h[2]]
    }

    pub fn end(&self) -> Point {
        let h = self.hom[self.hom.len() - 1];
        [h[0] / h[2], h[1] / h[2]]
    }

    /// Same curve traversed backwards.
    pub fn reversed(&self) -> Self {
        let (a, b) = (self.knots.first(), self.knots.last());
        let vals = self.knots.values().iter().rev().map(|&k| a + b - k).collect();
        let knots = KnotVector::new(vals, self.knots.degree()).expect("mirrored knots stay valid");
        Self { knots, hom: self.hom.iter().rev().copied().collect() }
    }

    /// Insert knots (sorted or not) without changing the curve.
    pub fn insert_knots(&self, x: &[f64]) -> Result<Self> {
        if x.is_empty() {
            return Ok(self.clone());
        }
        let mut x = x.to_vec();
        x.sort_by(f64::total_cmp);
        let (values, hom) = refine_curve(&self.knots, &self.hom, &x)?;
        Ok(Self { knots: KnotVector::new(values, self.knots.degree())?, hom })
    }

    /// Knots present in `target` but missing here, with multiplicity.
    fn missing_knots(&self, target: &KnotVector) -> Vec<f64> {
        let mut out = Vec::new();
        for (u, m) in target.breakpoints() {
            let have = self.knots.multiplicity(u);
            out.extend(std::iter::repeat_n(u, m.saturating_sub(have)));
        }
        out
    }
}

/// Refine all curves to a common knot vector (union of knots, maximal multiplicity).
pub fn unify_knots(curves: &[Curve]) -> Result<Vec<Curve>> {
    let degree = curves[0].knots.degree();
    if curves.iter().any(|c| c.knots.degree() != degree) {
        return Err(Error::Geometry("curves must share a degree".into()));
    }
    let mut union: Vec<(f64, usize)> = Vec::new();
    for c in curves {
        for (u, m) in c.knots.breakpoints() {
            match union.iter_mut().find(|(v, _)| (*v - u).abs() < 1e-12) {
                Some(entry) => entry.1 = entry.1.max(m),
                None => union.push((u, m)),
            }
        }
    }
    union.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values = union.iter().flat_map(|&(u, m)| std::iter::repeat_n(u, m)).collect();
    let target = KnotVector::new(values, degree)?;
    curves.iter().map(|c| c.insert_knots(&c.missing_knots(&target))).collect()
}

/// Surface linear in v between `bottom` (v = 0) and `top` (v = 1).
pub fn ruled(bottom: &Curve, top: &Curve) -> Result<NurbsPatch> {
    if bottom.knots != top.knots {
        return Err(Error::Geometry("ruled surface needs matching knot vectors".into()));
    }
    let kv = KnotVector::new(vec![0., 0., 1., 1.], 1)?;
    let mut hom = bottom.hom.clone();
    hom.extend_from_slice(&top.hom);
    NurbsPatch::from_homogeneous(bottom.knots.clone(), kv, &hom)
}

/// Discrete Coons patch from four boundary curves.
///
/// `bottom`/`top` run in u, `left`/`right` in v; corners must coincide.
pub fn coons(bottom: &Curve, top: &Curve, left: &Curve, right: &Curve) -> Result<NurbsPatch> {
    if bottom.knots != top.knots || left.knots != right.knots {
        return Err(Error::Geometry("opposite Coons boundaries need matching knots".into()));
    }
    let close = |a: Point, b: Point| (a[0] - b[0]).hypot(a[1] - b[1]) < 1e-12 * (1.0 + a[0].hypot(a[1]));
    if !(close(bottom.start(), left.start())
        && close(bottom.end(), right.start())
        && close(top.start(), left.end())
        && close(top.end(), right.end()))
    {
        return Err(Error::Geometry("Coons boundary corners do not meet".into()));
    }
    let gu = normalized_greville(&bottom.knots);
    let gv = normalized_greville(&left.knots);
    let (nu, nv) = (gu.len(), gv.len());
    let b = &bottom.hom;
    let t = &top.hom;
    let l = &left.hom;
    let r = &right.hom;
    let mut hom = vec![[0.0; 3]; nu * nv];
    for j in 0..nv {
        let s = gv[j];
        for i in 0..nu {
            let q = gu[i];
            let mut h = [0.0; 3];
            for d in 0..3 {
                h[d] = (1.0 - s) * b[i][d] + s * t[i][d] + (1.0 - q) * l[j][d] + q * r[j][d]
                    - ((1.0 - q) * (1.0 - s) * b[0][d]
                        + q * (1.0 - s) * b[nu - 1][d]
                        + (1.0 - q) * s * t[0][d]
                        + q * s * t[nu - 1][d]);
            }
            hom[j * nu + i] = h;
        }
    }
    NurbsPatch::from_homogeneous(bottom.knots.clone(), left.knots.clone(), &hom)
}

fn normalized_greville(kv: &KnotVector) -> Vec<f64> {
    let (a, b) = (kv.first(), kv.last());
    kv.greville().iter().map(|g| (g - a) / (b - a)).collect()
}

/// Four closed-boundary segments spanning the sectors centred on 0, 90, 180 and 270 degrees.
///
/// Segment `k` runs counter-clockwise from angle `(2k - 1) * 45` to `(2k + 1) * 45` degrees
/// of the underlying circle before any affine map is applied.
#[derive(Debug, Clone)]
pub struct Loop {
    pub segments: [Curve; 4],
}

impl Loop {
    pub fn circle(radius: f64) -> Self {
        Self {
            segments: std::array::from_fn(|k| {
                let a = (2.0 * k as f64 - 1.0) * FRAC_PI_4;
                Curve::arc([0.0, 0.0], radius, a, a + 2.0 * FRAC_PI_4)
            }),
        }
    }

    /// Ellipse with semi-axes `a`, `b`, rotated by `angle` radians.
    ///
    /// Segment ends sit at polar angles of odd multiples of 45 degrees, like the circle.
    pub fn ellipse(a: f64, b: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let m = [[c * a, -s * b], [s * a, c * b]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        // circle parameter of the ellipse point seen at polar angle phi
        let param = |phi: f64| {
            let (dy, dx) = phi.sin_cos();
            let x = (m[1][1] * dx - m[0][1] * dy) / det;
            let y = (-m[1][0] * dx + m[0][0] * dy) / det;
            y.atan2(x)
        };
        Self {
            segments: std::array::from_fn(|k| {
                let phi = (2.0 * k as f64 - 1.0) * FRAC_PI_4;
                let t0 = param(phi);
                let mut t1 = param(phi + 2.0 * FRAC_PI_4);
                while t1 <= t0 {
                    t1 += 2.0 * std::f64::consts::PI;
                }
                Curve::arc([0.0, 0.0], 1.0, t0, t1).affine(m, [0.0, 0.0])
            }),
        }
    }

    /// Axis-aligned rectangle with half-widths `hx`, `hy`, rotated by `angle`.
    pub fn rectangle(hx: f64, hy: f64, angle: f64) -> Self {
        let corners = [[hx, -hy], [hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]];
        let base = Self { segments: std::array::from_fn(|k| Curve::line(corners[k], corners[k + 1])) };
        let (s, c) = angle.sin_cos();
        base.affine([[c, -s], [s, c]])
    }

    /// Square whose vertices point along the axes at distance `r` (a 45-degree turned square).
    pub fn diamond(r: f64) -> Self {
        let v = [[r, 0.0], [0.0, r], [-r, 0.0], [0.0, -r]];
        let mid = |a: Point, b: Point| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        Self {
            segments: std::array::from_fn(|k| {
                let prev = v[(k + 3) % 4];
                let next = v[(k + 1) % 4];
                Curve::polyline(mid(prev, v[k]), v[k], mid(v[k], next))
            }),
        }
    }

    pub fn affine(&self, a: [[f64; 2]; 2]) -> Self {
        Self { segments: std::array::from_fn(|k| self.segments[k].affine(a, [0.0, 0.0])) }
    }

    /// Segment end points, i.e. the four corners between sectors.
    pub fn corners(&self) -> [Point; 4] {
        std::array::from_fn(|k| self.segments[k].start())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(c: &Curve, t: f64) -> Point {
        let p = c.knots.degree();
        let span = c.knots.find_span(t).unwrap();
        let mut v = vec![0.0; p + 1];
        let mut d = vec![0.0; p + 1];
        c.knots.basis_with_derivs(span, t, &mut v, &mut d);
        let mut h = [0.0; 3];
        for (l, &b) in v.iter().enumerate() {
            for k in 0..3 {
                h[k] += b * c.hom[span - p + l][k];
            }
        }
        [h[0] / h[2], h[1] / h[2]]
    }

    #[test]
    fn arc_points_on_circle() {
        let c = Curve::arc([1.0, -2.0], 3.0, -0.3, 1.2);
        for i in 0..=30 {
            let p = eval(&c, i as f64 / 30.0);
            assert!(((p[0] - 1.0).hypot(p[1] + 2.0) - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn loops_close_and_unify() {
        for lp in [Loop::circle(2.0), Loop::ellipse(3.0, 1.0, 0.4), Loop::rectangle(2.0, 1.0, 0.0), Loop::diamond(2.0)] {
            for k in 0..4 {
                let a = lp.segments[k].end();
                let b = lp.segments[(k + 1) % 4].start();
                assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
            }
        }
        let curves = vec![Loop::circle(1.0).segments[0].clone(), Loop::diamond(2.0).segments[0].clone()];
        let u = unify_knots(&curves).unwrap();
        assert_eq!(u[0].knots, u[1].knots);
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let p = eval(&u[0], t);
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ellipse_is_exact() {
        let lp = Loop::ellipse(3.0, 1.5, 0.0);
        for c in &lp.segments {
            for i in 0..=20 {
                let p = eval(c, i as f64 / 20.0);
                assert!(((p[0] / 3.0).powi(2) + (p[1] / 1.5).powi(2) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coons_reproduces_bilinear_square() {
        let lp = Loop::rectangle(1.0, 1.0, 0.0);
        let s = &lp.segments;
        let patch = coons(&s[3], &s[1].reversed(), &s[2].reversed(), &s[0]).unwrap();
        let p = patch.point([0.25, 0.75]).unwrap();
        assert!((p[0] + 0.5).abs() < 1e-14 && (p[1] - 0.5).abs() < 1e-14);
    }
}
