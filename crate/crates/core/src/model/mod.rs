//! Multi-patch problem geometries, boundary/region tagging, interface pairing
//! and the two-stage (design, solution) refinement.

mod builders;
pub mod curves;
mod locate;
mod refinement;

pub use builders::{
    build_annulus, build_camouflage_model, build_cloak_model, build_plate, CloakConfig, CAMOUFLAGE_MATERIALS,
    CLOAK_MATERIALS,
};
pub use locate::PointLocator;
pub use refinement::{refine_model, two_stage_refine, DesignBasis, DesignPatch, DirSpec, RefinementSpec};

use crate::assembly::MaterialPair;
use crate::error::{Error, Result};
use crate::splines::{Direction, Edge, GaussRule, NurbsPatch, Point};

/// Region a patch belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionLabel {
    Inside,
    Design,
    Outside,
    Sector,
}

/// Refinement class of a parametric direction: along the layers or across them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirClass {
    Tangential,
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind {
    /// Prescribed temperature (K).
    Dirichlet(f64),
    /// Prescribed inward heat flux (W/m^2).
    Neumann(f64),
    Insulated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTag {
    pub patch: usize,
    pub edge: Edge,
    pub kind: BoundaryKind,
}

/// Two patch edges sharing matched control points.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfacePair {
    pub patch1: usize,
    pub edge1: Edge,
    pub patch2: usize,
    pub edge2: Edge,
    /// Edge 2 runs opposite to edge 1.
    pub reversed: bool,
    /// Patch-local control indices `(side 1, side 2)` of coincident points.
    pub dof_pairs: Vec<(usize, usize)>,
}

impl InterfacePair {
    /// The same interface with the roles of the two sides exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            patch1: self.patch2,
            edge1: self.edge2,
            patch2: self.patch1,
            edge2: self.edge1,
            reversed: self.reversed,
            dof_pairs: self.dof_pairs.iter().map(|&(a, b)| (b, a)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NitscheParams {
    pub beta: f64,
    pub gamma: f64,
}

impl Default for NitscheParams {
    fn default() -> Self {
        Self { beta: 1e12, gamma: 0.5 }
    }
}

/// Fixed conductivities (W/mK) of the non-design regions and the design material pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conductivities {
    pub inside: f64,
    pub outside: f64,
    pub sector: f64,
    pub design: MaterialPair,
}

impl Conductivities {
    pub fn region(&self, label: RegionLabel) -> Option<f64> {
        match label {
            RegionLabel::Inside => Some(self.inside),
            RegionLabel::Outside => Some(self.outside),
            RegionLabel::Sector => Some(self.sector),
            RegionLabel::Design => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelPatch {
    pub nurbs: NurbsPatch,
    pub label: RegionLabel,
    /// Refinement class of the (u, v) directions.
    pub classes: [DirClass; 2],
}

impl ModelPatch {
    pub fn class(&self, dir: Direction) -> DirClass {
        match dir {
            Direction::U => self.classes[0],
            Direction::V => self.classes[1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiPatchModel {
    pub name: String,
    pub patches: Vec<ModelPatch>,
    pub interfaces: Vec<InterfacePair>,
    pub boundaries: Vec<BoundaryTag>,
    pub conductivity: Conductivities,
    pub nitsche: NitscheParams,
    /// Whether x/y mirror symmetry of the design is meaningful for this geometry.
    pub symmetric: bool,
}

impl MultiPatchModel {
    /// Assemble a model, pairing interfaces and checking that every edge is accounted for.
    pub fn new(
        name: impl Into<String>,
        patches: Vec<ModelPatch>,
        boundaries: Vec<BoundaryTag>,
        conductivity: Conductivities,
        symmetric: bool,
    ) -> Result<Self> {
        let interfaces = match_interfaces(&patches);
        let model = Self {
            name: name.into(),
            patches,
            interfaces,
            boundaries,
            conductivity,
            nitsche: NitscheParams::default(),
            symmetric,
        };
        model.validate()?;
        Ok(model)
    }

    /// Check labels, tags and interface coverage.
    pub fn validate(&self) -> Result<()> {
        for k in 0..self.patches.len() {
            for edge in Edge::ALL {
                let tags = self.boundaries.iter().filter(|b| b.patch == k && b.edge == edge).count();
                let shared = self
                    .interfaces
                    .iter()
                    .filter(|i| (i.patch1 == k && i.edge1 == edge) || (i.patch2 == k && i.edge2 == edge))
                    .count();
                match (tags, shared) {
                    (1, 0) | (0, 1) => {}
                    (0, 0) => {
                        return Err(Error::Model(format!("edge {edge:?} of patch {k} is neither tagged nor shared")))
                    }
                    _ => {
                        return Err(Error::Model(format!(
                            "edge {edge:?} of patch {k} has {tags} tags and {shared} interfaces"
                        )))
                    }
                }
            }
        }
        for b in &self.boundaries {
            if b.patch >= self.patches.len() {
                return Err(Error::Model(format!("boundary tag refers to missing patch {}", b.patch)));
            }
        }
        let c = &self.conductivity;
        if !(c.inside > 0.0 && c.outside > 0.0 && c.sector > 0.0 && c.design.k1 > 0.0 && c.design.k2 > 0.0) {
            return Err(Error::Model("conductivities must be positive".into()));
        }
        Ok(())
    }

    pub fn design_patches(&self) -> impl Iterator<Item = usize> + '_ {
        self.patches.iter().enumerate().filter(|(_, p)| p.label == RegionLabel::Design).map(|(k, _)| k)
    }

    /// Total number of solution basis functions (one block per patch).
    pub fn num_dofs(&self) -> usize {
        self.patches.iter().map(|p| p.nurbs.num_basis()).sum()
    }

    /// First global DOF index of every patch.
    pub fn dof_offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.patches.len());
        let mut acc = 0;
        for p in &self.patches {
            offs.push(acc);
            acc += p.nurbs.num_basis();
        }
        offs
    }

    /// Axis-aligned bounding box `[min, max]` of the mapped domain.
    pub fn bounding_box(&self) -> [Point; 2] {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.patches {
            for x in edge_samples(&p.nurbs, 16) {
                for a in 0..2 {
                    lo[a] = lo[a].min(x[a]);
                    hi[a] = hi[a].max(x[a]);
                }
            }
        }
        [lo, hi]
    }

    /// Largest distance between two boundary points of the patches with the
    /// given label (all patches if `None`), sampled along patch edges.
    pub fn diameter(&self, label: Option<RegionLabel>) -> f64 {
        let pts: Vec<Point> = self
            .patches
            .iter()
            .filter(|p| label.is_none_or(|l| p.label == l))
            .flat_map(|p| edge_samples(&p.nurbs, 16))
            .collect();
        let mut best = 0.0f64;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                best = best.max((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        best
    }

    /// Value of the solution field with global coefficients `t` at a parameter of patch `k`.
    pub fn field_at(&self, t: &[f64], k: usize, xi: [f64; 2]) -> Result<f64> {
        let offset: usize = self.patches[..k].iter().map(|p| p.nurbs.num_basis()).sum();
        let mut e = crate::splines::BasisEval::default();
        self.patches[k].nurbs.eval_basis_into(xi, &mut e)?;
        Ok(e.indices.iter().zip(&e.values).map(|(&i, &r)| r * t[offset + i]).sum())
    }

    /// Area of the patches carrying `label` (all patches if `None`) by Gauss quadrature.
    pub fn area(&self, label: Option<RegionLabel>) -> Result<f64> {
        let mut total = 0.0;
        for p in self.patches.iter().filter(|p| label.is_none_or(|l| p.label == l)) {
            total += patch_area(&p.nurbs)?;
        }
        Ok(total)
    }
}

/// Area of one patch with a generous Gauss rule.
pub fn patch_area(patch: &NurbsPatch) -> Result<f64> {
    let gu = GaussRule::new(patch.degree(Direction::U) + 10);
    let gv = GaussRule::new(patch.degree(Direction::V) + 10);
    let mut total = 0.0;
    for &(_, v0, v1) in &patch.knots_v().spans() {
        for (v, wv) in gv.mapped(v0, v1) {
            for &(_, u0, u1) in &patch.knots_u().spans() {
                for (u, wu) in gu.mapped(u0, u1) {
                    total += patch.eval_basis([u, v])?.det_j * wu * wv;
                }
            }
        }
    }
    Ok(total)
}

/// Mapped points along all four edges, `per_span` samples per knot span.
pub fn edge_samples(patch: &NurbsPatch, per_span: usize) -> Vec<Point> {
    let mut out = Vec::new();
    for edge in Edge::ALL {
        for &(_, a, b) in &patch.knots(edge.running()).spans() {
            for k in 0..=per_span {
                let t = a + (b - a) * k as f64 / per_span as f64;
                if let Ok(x) = patch.point(patch.edge_param(edge, t)) {
                    out.push(x);
                }
            }
        }
    }
    out
}

fn edge_data(patch: &NurbsPatch, edge: Edge) -> (Vec<usize>, Vec<Point>, Vec<f64>) {
    let idx = patch.edge_indices(edge);
    let pts = idx.iter().map(|&i| patch.control_points()[i]).collect();
    let ws = idx.iter().map(|&i| patch.weights()[i]).collect();
    (idx, pts, ws)
}

/// Pair every two edges whose control points and weights coincide (forward or reversed).
pub fn match_interfaces(patches: &[ModelPatch]) -> Vec<InterfacePair> {
    let scale = patches
        .iter()
        .flat_map(|p| p.nurbs.control_points())
        .fold(0.0f64, |m, c| m.max(c[0].abs()).max(c[1].abs()))
        .max(1e-300);
    let tol = 1e-9 * scale;
    let edges: Vec<(usize, Edge)> =
        (0..patches.len()).flat_map(|k| Edge::ALL.into_iter().map(move |e| (k, e))).collect();
    let mut out = Vec::new();
    for a in 0..edges.len() {
        for b in (a + 1)..edges.len() {
            let (pa, ea) = edges[a];
            let (pb, eb) = edges[b];
            let (ia, xa, wa) = edge_data(&patches[pa].nurbs, ea);
            let (ib, xb, wb) = edge_data(&patches[pb].nurbs, eb);
            if ia.len() != ib.len() {
                continue;
            }
            let n = ia.len();
            let same = |i: usize, j: usize| {
                (xa[i][0] - xb[j][0]).abs() <= tol
                    && (xa[i][1] - xb[j][1]).abs() <= tol
                    && (wa[i] - wb[j]).abs() <= 1e-9 * wa[i]
            };
            let reversed = if (0..n).all(|i| same(i, i)) {
                false
            } else if (0..n).all(|i| same(i, n - 1 - i)) {
                true
            } else {
                continue;
            };
            // degenerate edges (all points equal) never form interfaces
            if (0..n).all(|i| (xa[i][0] - xa[0][0]).abs() <= tol && (xa[i][1] - xa[0][1]).abs() <= tol) {
                continue;
            }
            let dof_pairs = (0..n).map(|i| (ia[i], ib[if reversed { n - 1 - i } else { i }])).collect();
            out.push(InterfacePair { patch1: pa, edge1: ea, patch2: pb, edge2: eb, reversed, dof_pairs });
        }
    }
    out
}
