use super::{match_interfaces, DirClass, MultiPatchModel, RegionLabel};
use crate::error::{Error, Result};
use crate::splines::{degree_elevate, subdivide, Direction, NurbsPatch};

/// Target degree and number of equal pieces each initial knot span is split into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirSpec {
    pub degree: usize,
    pub pieces: usize,
}

/// Refinement of every patch, given per direction class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefinementSpec {
    pub tangential: DirSpec,
    pub radial: DirSpec,
}

impl RefinementSpec {
    pub fn new(p: usize, q: usize, pieces_tangential: usize, pieces_radial: usize) -> Self {
        Self {
            tangential: DirSpec { degree: p, pieces: pieces_tangential },
            radial: DirSpec { degree: q, pieces: pieces_radial },
        }
    }

    fn get(&self, class: DirClass) -> DirSpec {
        match class {
            DirClass::Tangential => self.tangential,
            DirClass::Radial => self.radial,
        }
    }

    /// True when `self` is at least as fine as `other` in every respect.
    pub fn dominates(&self, other: &RefinementSpec) -> bool {
        self.tangential.degree >= other.tangential.degree
            && self.radial.degree >= other.radial.degree
            && self.tangential.pieces >= other.tangential.pieces
            && self.radial.pieces >= other.radial.pieces
    }
}

/// Level-set basis on one design patch; shares the parametrization of the solution patch.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPatch {
    /// Index of the patch in the model.
    pub patch: usize,
    pub nurbs: NurbsPatch,
    /// First global design-function index of this patch.
    pub offset: usize,
}

/// The frozen design basis (stage one of the refinement).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignBasis {
    pub patches: Vec<DesignPatch>,
    pub num_functions: usize,
}

impl DesignBasis {
    pub fn for_patch(&self, model_patch: usize) -> Option<&DesignPatch> {
        self.patches.iter().find(|d| d.patch == model_patch)
    }

    /// Physical control point of every global design function.
    pub fn control_points(&self) -> Vec<[f64; 2]> {
        self.patches.iter().flat_map(|d| d.nurbs.control_points().iter().copied()).collect()
    }
}

/// Elevate then subdivide every patch according to its direction classes.
pub fn refine_model(model: &MultiPatchModel, spec: &RefinementSpec) -> Result<MultiPatchModel> {
    let mut out = model.clone();
    for p in out.patches.iter_mut() {
        let mut nurbs = p.nurbs.clone();
        for dir in [Direction::U, Direction::V] {
            let target = spec.get(p.class(dir));
            let current = nurbs.degree(dir);
            if target.degree < current {
                return Err(Error::Refinement(format!(
                    "requested degree {} is below the geometric degree {current}",
                    target.degree
                )));
            }
            if target.pieces == 0 {
                return Err(Error::Refinement("refinement pieces must be positive".into()));
            }
            nurbs = degree_elevate(&nurbs, target.degree - current, dir)?;
            nurbs = subdivide(&nurbs, target.pieces, dir)?;
        }
        p.nurbs = nurbs;
    }
    out.interfaces = match_interfaces(&out.patches);
    snap_coincident(&mut out);
    out.validate()?;
    Ok(out)
}

/// Copy one representative onto every group of control points tied by interfaces.
///
/// Refinement computes coincident points independently on each side; the
/// rounding difference would otherwise show up as a spurious jump that the
/// interface penalty amplifies.
fn snap_coincident(model: &mut MultiPatchModel) {
    let offsets: Vec<usize> = model
        .patches
        .iter()
        .scan(0, |acc, p| {
            let o = *acc;
            *acc += p.nurbs.num_basis();
            Some(o)
        })
        .collect();
    let total = model.patches.iter().map(|p| p.nurbs.num_basis()).sum();
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for pair in &model.interfaces {
        for &(a, b) in &pair.dof_pairs {
            let ra = find(&mut parent, offsets[pair.patch1] + a);
            let rb = find(&mut parent, offsets[pair.patch2] + b);
            // the smaller global index stays the representative
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let owner = |g: usize| {
        let k = offsets.partition_point(|&o| o <= g) - 1;
        (k, g - offsets[k])
    };
    for g in 0..total {
        let r = find(&mut parent, g);
        if r == g {
            continue;
        }
        let (rk, ri) = owner(r);
        let src = &model.patches[rk].nurbs;
        let (pt, w) = (src.control_points()[ri], src.weights()[ri]);
        let (k, i) = owner(g);
        model.patches[k].nurbs.set_control(i, pt, w);
    }
}

/// Build the design basis (stage one) and the solution model (stage two) from a coarse model.
///
/// Both stages start from the same coarse patches, so a design patch and its
/// solution patch share one parametric domain.
pub fn two_stage_refine(
    model: &MultiPatchModel,
    design: &RefinementSpec,
    solution: &RefinementSpec,
) -> Result<(DesignBasis, MultiPatchModel)> {
    if !solution.dominates(design) {
        return Err(Error::Refinement("solution refinement must be at least the design refinement".into()));
    }
    let design_model = refine_model(model, design)?;
    let mut patches = Vec::new();
    let mut offset = 0;
    for (k, p) in design_model.patches.iter().enumerate() {
        if p.label == RegionLabel::Design {
            let n = p.nurbs.num_basis();
            patches.push(DesignPatch { patch: k, nurbs: p.nurbs.clone(), offset });
            offset += n;
        }
    }
    if patches.is_empty() {
        return Err(Error::Model("model has no design patch".into()));
    }
    let solution_model = refine_model(model, solution)?;
    Ok((DesignBasis { patches, num_functions: offset }, solution_model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_annulus, build_cloak_model, CloakConfig};

    #[test]
    fn annulus_counts() {
        let coarse = build_annulus(1.0, 2.0).unwrap();
        let design = RefinementSpec::new(2, 1, 7, 32);
        let solution = RefinementSpec::new(2, 1, 32, 32);
        let (basis, sol) = two_stage_refine(&coarse, &design, &solution).unwrap();
        assert_eq!(basis.num_functions, 1089);
        assert_eq!(sol.num_dofs(), 4389);
        assert_eq!(sol.interfaces.len(), 1);
    }

    #[test]
    fn identity_stage() {
        let coarse = build_cloak_model(CloakConfig::Circular).unwrap();
        let spec = RefinementSpec::new(2, 1, 3, 2);
        let (basis, sol) = two_stage_refine(&coarse, &spec, &spec).unwrap();
        for d in &basis.patches {
            assert_eq!(d.nurbs, sol.patches[d.patch].nurbs);
        }
        assert!(two_stage_refine(&coarse, &RefinementSpec::new(3, 1, 3, 2), &spec).is_err());
    }

    #[test]
    fn interfaces_match_after_refinement() {
        for cfg in [CloakConfig::Circular, CloakConfig::V, CloakConfig::VIII] {
            let coarse = build_cloak_model(cfg).unwrap();
            let sol = refine_model(&coarse, &RefinementSpec::new(3, 2, 5, 3)).unwrap();
            assert_eq!(sol.interfaces.len(), coarse.interfaces.len());
            for i in &sol.interfaces {
                let a = &sol.patches[i.patch1].nurbs;
                let b = &sol.patches[i.patch2].nurbs;
                for &(x, y) in &i.dof_pairs {
                    let (p, q) = (a.control_points()[x], b.control_points()[y]);
                    assert_eq!((p, a.weights()[x]), (q, b.weights()[y]));
                }
            }
        }
    }
}
