use crate::error::{Error, Result};
use crate::model::DesignBasis;

/// Surjection from design coefficients to free variables.
///
/// Coincident control points on neighbouring patches always share a variable,
/// which keeps the level set continuous; with `mirror` the x- and y-axis
/// reflections of every control point are tied as well.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryMap {
    map: Vec<usize>,
    n_vars: usize,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

impl SymmetryMap {
    pub fn identity(m: usize) -> Self {
        Self { map: (0..m).collect(), n_vars: m }
    }

    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let n_vars = map.iter().map(|&k| k + 1).max().unwrap_or(0);
        let mut seen = vec![false; n_vars];
        for &k in &map {
            seen[k] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput("symmetry map must be surjective".into()));
        }
        Ok(Self { map, n_vars })
    }

    pub fn build(basis: &DesignBasis, mirror: bool) -> Result<Self> {
        let pts = basis.control_points();
        let m = pts.len();
        let scale = pts.iter().fold(0.0f64, |s, p| s.max(p[0].abs()).max(p[1].abs())).max(1e-300);
        let tol = 1e-9 * scale;
        let close = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol;
        let mut parent: Vec<usize> = (0..m).collect();
        for i in 0..m {
            let mut has_x = !mirror;
            let mut has_y = !mirror;
            for j in 0..m {
                if j > i && close(pts[i], pts[j]) {
                    union(&mut parent, i, j);
                }
                if mirror {
                    if close([-pts[i][0], pts[i][1]], pts[j]) {
                        union(&mut parent, i, j);
                        has_x = true;
                    }
                    if close([pts[i][0], -pts[i][1]], pts[j]) {
                        union(&mut parent, i, j);
                        has_y = true;
                    }
                }
            }
            if !(has_x && has_y) {
                return Err(Error::InvalidInput(format!(
                    "design control point {:?} has no mirror image; the design basis is not symmetric",
                    pts[i]
                )));
            }
        }
        let mut var_of_root = vec![usize::MAX; m];
        let mut map = vec![0; m];
        let mut n_vars = 0;
        for i in 0..m {
            let r = find(&mut parent, i);
            if var_of_root[r] == usize::MAX {
                var_of_root[r] = n_vars;
                n_vars += 1;
            }
            map[i] = var_of_root[r];
        }
        Ok(Self { map, n_vars })
    }

    pub fn num_vars(&self) -> usize {
        self.n_vars
    }

    pub fn num_coeffs(&self) -> usize {
        self.map.len()
    }

    /// Variable index of every coefficient.
    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn expand(&self, vars: &[f64]) -> Vec<f64> {
        self.map.iter().map(|&k| vars[k]).collect()
    }

    /// Chain rule for a gradient: `dJ/dvar_k = sum over i -> k of dJ/dPhi_i`.
    pub fn reduce(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_vars];
        for (&k, &g) in self.map.iter().zip(full) {
            out[k] += g;
        }
        out
    }

    /// Mean of the coefficients tied to each variable.
    pub fn restrict(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut sum = vec![0.0; self.n_vars];
        let mut count = vec![0usize; self.n_vars];
        for (&k, &c) in self.map.iter().zip(coeffs) {
            sum[k] += c;
            count[k] += 1;
        }
        sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect()
    }
}
