use super::MultiPatchModel;
use crate::splines::Point;

struct PatchSamples {
    lo: Point,
    hi: Point,
    params: Vec<[f64; 2]>,
    points: Vec<Point>,
}

/// Maps physical points back to (patch, parameter) pairs.
pub struct PointLocator {
    patches: Vec<PatchSamples>,
    tol: f64,
}

impl PointLocator {
    /// `per_span` seed samples per knot span and direction.
    pub fn new(model: &MultiPatchModel, per_span: usize) -> Self {
        let [blo, bhi] = model.bounding_box();
        let tol = 1e-10 * (bhi[0] - blo[0]).hypot(bhi[1] - blo[1]);
        let patches = model
            .patches
            .iter()
            .map(|mp| {
                let p = &mp.nurbs;
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                // convex hull property of positive-weight NURBS
                for c in p.control_points() {
                    for a in 0..2 {
                        lo[a] = lo[a].min(c[a]);
                        hi[a] = hi[a].max(c[a]);
                    }
                }
                let ticks = |dir| {
                    let mut t = Vec::new();
                    for &(_, a, b) in &p.knots(dir).spans() {
                        for k in 0..per_span {
                            t.push(a + (b - a) * (k as f64 + 0.5) / per_span as f64);
                        }
                    }
                    t
                };
                let tu = ticks(crate::splines::Direction::U);
                let tv = ticks(crate::splines::Direction::V);
                let mut params = Vec::with_capacity(tu.len() * tv.len());
                let mut points = Vec::with_capacity(tu.len() * tv.len());
                for &v in &tv {
                    for &u in &tu {
                        if let Ok(x) = p.point([u, v]) {
                            params.push([u, v]);
                            points.push(x);
                        }
                    }
                }
                PatchSamples { lo, hi, params, points }
            })
            .collect();
        Self { patches, tol }
    }

    /// First patch (in model order) whose image contains `x`, with the parameter.
    pub fn locate(&self, model: &MultiPatchModel, x: Point) -> Option<(usize, [f64; 2])> {
        for (k, s) in self.patches.iter().enumerate() {
            let slack = self.tol;
            if x[0] < s.lo[0] - slack || x[0] > s.hi[0] + slack || x[1] < s.lo[1] - slack || x[1] > s.hi[1] + slack {
                continue;
            }
            let mut order: Vec<(f64, usize)> =
                s.points.iter().enumerate().map(|(i, c)| ((c[0] - x[0]).hypot(c[1] - x[1]), i)).collect();
            let m = order.len().min(3);
            if m == 0 {
                continue;
            }
            if order.len() > m {
                order.select_nth_unstable_by(m - 1, |a, b| a.0.total_cmp(&b.0));
            }
            order[..m].sort_by(|a, b| a.0.total_cmp(&b.0));
            let patch = &model.patches[k].nurbs;
            for &(_, i) in &order[..m] {
                if let Some(xi) = patch.invert(x, s.params[i], self.tol) {
                    return Some((k, xi));
                }
            }
        }
        None
    }
}
