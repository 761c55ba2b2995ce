//! Built-in geometries: the annular ring benchmark, cloak plates and the camouflage plate.
//!
//! Plate problems are laid out in concentric layers. Each layer is bounded by
//! two closed loops split into four segments (sectors centred on the +x, +y,
//! -x and -y axes); every layer/sector pair becomes one ruled patch. A bilinear
//! core patch fills the innermost loop. All lengths are in metres.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use super::curves::{coons, ruled, unify_knots, Curve, Loop};
use super::{
    match_interfaces, BoundaryKind, BoundaryTag, Conductivities, DirClass, ModelPatch, MultiPatchModel, RegionLabel,
};
use crate::assembly::MaterialPair;
use crate::error::{Error, Result};
use crate::splines::{Direction, Edge, KnotVector, NurbsPatch, Point};

/// Obstacle insulator (inside), aluminium plate, copper/PDMS design pair.
pub const CLOAK_MATERIALS: Conductivities = Conductivities {
    inside: 1e-4,
    outside: 200.0,
    sector: 1e-4,
    design: MaterialPair { k1: 398.0, k2: 0.27 },
};

/// Magnesium object, aluminium 5457 plate, insulator sectors, copper/PDMS design pair.
pub const CAMOUFLAGE_MATERIALS: Conductivities = Conductivities {
    inside: 72.7,
    outside: 177.0,
    sector: 1e-4,
    design: MaterialPair { k1: 398.0, k2: 0.27 },
};

const HOT: f64 = 300.0;
const COLD: f64 = 200.0;

/// Annular ring `ra <= r <= rb` as one closed patch.
///
/// Circumferentially four C0-joined rational quadratic quarters (quadrant
/// breaks on the axes), radially linear; the seam at angle 0 is paired with
/// itself as an interface. Dirichlet 0 at `ra` and 100 at `rb`; conductivity 100
/// inside the interface (negative level set) and 10 outside.
pub fn build_annulus(ra: f64, rb: f64) -> Result<MultiPatchModel> {
    if !(ra > 0.0 && rb > ra && rb.is_finite()) {
        return Err(Error::Model(format!("annulus radii must satisfy 0 < ra < rb, got {ra}, {rb}")));
    }
    let ku = KnotVector::new(vec![0., 0., 0., 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1., 1., 1.], 2)?;
    let kv = KnotVector::new(vec![0., 0., 1., 1.], 1)?;
    let mut cps = Vec::new();
    let mut ws = Vec::new();
    for r in [rb, ra] {
        for k in 0..9 {
            let angle = k as f64 * FRAC_PI_4;
            let (d, w) = if k % 2 == 0 { (r, 1.0) } else { (r * std::f64::consts::SQRT_2, FRAC_1_SQRT_2) };
            let mut p = [d * angle.cos(), d * angle.sin()];
            if k == 8 {
                p = [r, 0.0];
            }
            cps.push(p);
            ws.push(w);
        }
    }
    let nurbs = orient(NurbsPatch::new(ku, kv, cps, ws)?)?;
    let patches = vec![ModelPatch { nurbs, label: RegionLabel::Design, classes: [DirClass::Tangential, DirClass::Radial] }];
    let boundaries = tag_free_edges(&patches, |pts| {
        let r = pts[0][0].hypot(pts[0][1]);
        if (r - ra).abs() < 1e-9 * rb {
            Some(BoundaryKind::Dirichlet(0.0))
        } else if (r - rb).abs() < 1e-9 * rb {
            Some(BoundaryKind::Dirichlet(100.0))
        } else {
            None
        }
    })?;
    let conductivity = Conductivities { inside: 1.0, outside: 1.0, sector: 1.0, design: MaterialPair { k1: 10.0, k2: 100.0 } };
    MultiPatchModel::new("annulus", patches, boundaries, conductivity, true)
}

/// Cloak obstacle/cloak shapes: the circular baseline and the eight variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloakConfig {
    Circular,
    /// Square obstacle.
    I,
    /// Horizontal rectangular obstacle.
    II,
    /// Vertical rectangular obstacle.
    III,
    /// Horizontal elliptical obstacle.
    IV,
    /// Inclined elliptical obstacle.
    V,
    /// Square cloak.
    VI,
    /// Horizontal rectangular cloak.
    VII,
    /// Inclined (45 degree) square cloak.
    VIII,
}

impl std::str::FromStr for CloakConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "CIRCULAR" | "BASELINE" | "CIRCLE" => Self::Circular,
            "I" | "1" => Self::I,
            "II" | "2" => Self::II,
            "III" | "3" => Self::III,
            "IV" | "4" => Self::IV,
            "V" | "5" => Self::V,
            "VI" | "6" => Self::VI,
            "VII" | "7" => Self::VII,
            "VIII" | "8" => Self::VIII,
            other => return Err(Error::InvalidInput(format!("unknown cloak configuration '{other}'"))),
        })
    }
}

/// Half side of the cloak plate (140 mm square).
pub const CLOAK_PLATE_HALF: f64 = 0.07;

/// 140 mm plate, insulating obstacle, design ring, aluminium outside.
///
/// Dimensions (read approximately from the configuration sketches):
/// obstacle circle r = 20 mm and cloak circle r = 40 mm for the baseline;
/// I square obstacle half-side 16 mm; II 48 x 24 mm rectangle; III 24 x 48 mm;
/// IV ellipse with semi-axes 26 / 14 mm; V the same ellipse turned by 30 degrees;
/// VI square cloak half-side 40 mm; VII 100 x 70 mm cloak; VIII square cloak
/// turned by 45 degrees with vertices 50 mm from the centre.
pub fn build_cloak_model(config: CloakConfig) -> Result<MultiPatchModel> {
    use CloakConfig::*;
    let obstacle = match config {
        I => Loop::rectangle(0.016, 0.016, 0.0),
        II => Loop::rectangle(0.024, 0.012, 0.0),
        III => Loop::rectangle(0.012, 0.024, 0.0),
        IV => Loop::ellipse(0.026, 0.014, 0.0),
        V => Loop::ellipse(0.026, 0.014, std::f64::consts::PI / 6.0),
        Circular | VI | VII | VIII => Loop::circle(0.02),
    };
    let cloak = match config {
        VI => Loop::rectangle(0.04, 0.04, 0.0),
        VII => Loop::rectangle(0.05, 0.035, 0.0),
        VIII => Loop::diamond(0.05),
        _ => Loop::circle(0.04),
    };
    let plate = Loop::rectangle(CLOAK_PLATE_HALF, CLOAK_PLATE_HALF, 0.0);
    let layers = vec![
        (obstacle, [RegionLabel::Inside; 4]),
        (cloak, [RegionLabel::Design; 4]),
        (plate, [RegionLabel::Outside; 4]),
    ];
    let name = format!("cloak-{config:?}").to_lowercase();
    build_layered(&name, RegionLabel::Inside, layers, CLOAK_PLATE_HALF, CLOAK_MATERIALS, config != V)
}

/// Half side of the camouflage plate (100 mm square).
pub const CAMOUFLAGE_PLATE_HALF: f64 = 0.05;

/// 100 mm plate with a magnesium disk (r < 12 mm), design ring (12-24 mm) and a
/// ring 24-36 mm whose left and right quarters are insulator sectors.
pub fn build_camouflage_model() -> Result<MultiPatchModel> {
    use RegionLabel::*;
    let layers = vec![
        (Loop::circle(0.012), [Inside; 4]),
        (Loop::circle(0.024), [Design; 4]),
        (Loop::circle(0.036), [Sector, Outside, Sector, Outside]),
        (Loop::rectangle(CAMOUFLAGE_PLATE_HALF, CAMOUFLAGE_PLATE_HALF, 0.0), [Outside; 4]),
    ];
    build_layered("camouflage", Inside, layers, CAMOUFLAGE_PLATE_HALF, CAMOUFLAGE_MATERIALS, true)
}

/// Rectangular plate `[0, width] x [0, height]` split into `nx x ny` bilinear
/// patches of uniform conductivity `kappa`; 300 K left, 200 K right, insulated
/// top and bottom.
pub fn build_plate(width: f64, height: f64, nx: usize, ny: usize, kappa: f64) -> Result<MultiPatchModel> {
    if !(width > 0.0 && height > 0.0) || nx == 0 || ny == 0 {
        return Err(Error::Model("plate needs positive size and patch counts".into()));
    }
    let kv = KnotVector::new(vec![0., 0., 1., 1.], 1)?;
    let mut patches = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let x0 = width * i as f64 / nx as f64;
            let x1 = width * (i + 1) as f64 / nx as f64;
            let y0 = height * j as f64 / ny as f64;
            let y1 = height * (j + 1) as f64 / ny as f64;
            let nurbs = NurbsPatch::new(kv.clone(), kv.clone(), vec![[x0, y0], [x1, y0], [x0, y1], [x1, y1]], vec![1.0; 4])?;
            patches.push(ModelPatch { nurbs, label: RegionLabel::Outside, classes: [DirClass::Tangential, DirClass::Radial] });
        }
    }
    let tol = 1e-9 * width.max(height);
    let boundaries = tag_free_edges(&patches, |pts| plate_edge_kind(pts, [0.0, width], [0.0, height], tol))?;
    let conductivity = Conductivities { inside: kappa, outside: kappa, sector: kappa, design: MaterialPair { k1: kappa, k2: kappa } };
    MultiPatchModel::new("plate", patches, boundaries, conductivity, false)
}

fn plate_edge_kind(pts: &[Point], xr: [f64; 2], yr: [f64; 2], tol: f64) -> Option<BoundaryKind> {
    if pts.iter().all(|p| (p[0] - xr[0]).abs() <= tol) {
        Some(BoundaryKind::Dirichlet(HOT))
    } else if pts.iter().all(|p| (p[0] - xr[1]).abs() <= tol) {
        Some(BoundaryKind::Dirichlet(COLD))
    } else if pts.iter().all(|p| (p[1] - yr[0]).abs() <= tol || (p[1] - yr[1]).abs() <= tol) {
        Some(BoundaryKind::Insulated)
    } else {
        None
    }
}

/// Core patch plus one ruled patch per (layer, sector); the last loop is the plate boundary.
fn build_layered(
    name: &str,
    core_label: RegionLabel,
    layers: Vec<(Loop, [RegionLabel; 4])>,
    half: f64,
    conductivity: Conductivities,
    symmetric: bool,
) -> Result<MultiPatchModel> {
    let first = &layers[0].0;
    let core_corners = first.corners().map(|c| [0.5 * c[0], 0.5 * c[1]]);
    let core = Loop { segments: std::array::from_fn(|k| Curve::line(core_corners[k], core_corners[(k + 1) % 4])) };

    // bring every segment onto one knot vector so shared edges have matching nets
    let mut all: Vec<Curve> = core.segments.to_vec();
    for (lp, _) in &layers {
        all.extend(lp.segments.iter().cloned());
    }
    let unified = unify_knots(&all)?;
    let loops: Vec<[Curve; 4]> =
        unified.chunks(4).map(|c| std::array::from_fn(|k| c[k].clone())).collect();

    let mut patches = Vec::new();
    let s = &loops[0];
    let core_patch = coons(&s[3], &s[1].reversed(), &s[2].reversed(), &s[0])?;
    patches.push(ModelPatch {
        nurbs: orient(core_patch)?,
        label: core_label,
        classes: [DirClass::Tangential, DirClass::Tangential],
    });
    for (layer, (_, labels)) in layers.iter().enumerate() {
        for k in 0..4 {
            let patch = ruled(&loops[layer][k], &loops[layer + 1][k])?;
            patches.push(ModelPatch {
                nurbs: orient(patch)?,
                label: labels[k],
                classes: [DirClass::Tangential, DirClass::Radial],
            });
        }
    }
    let tol = 1e-9 * half;
    let boundaries = tag_free_edges(&patches, |pts| plate_edge_kind(pts, [-half, half], [-half, half], tol))?;
    MultiPatchModel::new(name, patches, boundaries, conductivity, symmetric)
}

/// Tag every edge not shared with another patch using `classify` on its control points.
fn tag_free_edges<F>(patches: &[ModelPatch], classify: F) -> Result<Vec<BoundaryTag>>
where
    F: Fn(&[Point]) -> Option<BoundaryKind>,
{
    let interfaces = match_interfaces(patches);
    let mut tags = Vec::new();
    for (k, p) in patches.iter().enumerate() {
        for edge in Edge::ALL {
            let shared = interfaces
                .iter()
                .any(|i| (i.patch1 == k && i.edge1 == edge) || (i.patch2 == k && i.edge2 == edge));
            if shared {
                continue;
            }
            let pts: Vec<Point> = p.nurbs.edge_indices(edge).iter().map(|&i| p.nurbs.control_points()[i]).collect();
            let kind = classify(&pts)
                .ok_or_else(|| Error::Model(format!("cannot classify free edge {edge:?} of patch {k}")))?;
            tags.push(BoundaryTag { patch: k, edge, kind });
        }
    }
    Ok(tags)
}

/// Flip the v direction when the map is orientation-reversing.
fn orient(patch: NurbsPatch) -> Result<NurbsPatch> {
    let [[u0, u1], [v0, v1]] = patch.domain();
    let mut e = Default::default();
    patch.eval_basis_into([0.5 * (u0 + u1), 0.5 * (v0 + v1)], &mut e)?;
    let patch = if e.det_j < 0.0 { flip_v(&patch)? } else { patch };
    check_jacobian(&patch)?;
    Ok(patch)
}

fn flip_v(patch: &NurbsPatch) -> Result<NurbsPatch> {
    let kv = patch.knots(Direction::V);
    let (a, b) = (kv.first(), kv.last());
    let flipped = KnotVector::new(kv.values().iter().rev().map(|&k| a + b - k).collect(), kv.degree())?;
    let (nu, nv) = (patch.n_u(), patch.n_v());
    let mut cps = Vec::with_capacity(nu * nv);
    let mut ws = Vec::with_capacity(nu * nv);
    for j in (0..nv).rev() {
        for i in 0..nu {
            cps.push(patch.control_points()[j * nu + i]);
            ws.push(patch.weights()[j * nu + i]);
        }
    }
    NurbsPatch::new(patch.knots_u().clone(), flipped, cps, ws)
}

/// Reject folded patches: the Jacobian must stay positive on a sample grid.
fn check_jacobian(patch: &NurbsPatch) -> Result<()> {
    let [[u0, u1], [v0, v1]] = patch.domain();
    let n = 12;
    for i in 0..n {
        for j in 0..n {
            let u = u0 + (u1 - u0) * (i as f64 + 0.5) / n as f64;
            let v = v0 + (v1 - v0) * (j as f64 + 0.5) / n as f64;
            patch.eval_basis([u, v])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn annulus_boundaries_on_circles() {
        let m = build_annulus(1.0, 2.0).unwrap();
        assert_eq!(m.patches.len(), 1);
        assert_eq!(m.interfaces.len(), 1, "seam pairs with itself");
        let p = &m.patches[0].nurbs;
        for t in m.boundaries.iter() {
            let BoundaryKind::Dirichlet(val) = t.kind else { panic!("annulus edges are Dirichlet") };
            let r_expect = if val == 0.0 { 1.0 } else { 2.0 };
            for i in 0..=200 {
                let x = p.point(p.edge_param(t.edge, i as f64 / 200.0)).unwrap();
                assert!((x[0].hypot(x[1]) - r_expect).abs() < 1e-12);
            }
        }
        let area = m.area(None).unwrap();
        assert!((area - PI * 3.0).abs() < 1e-8, "area {area}");
        assert!(build_annulus(1.0, 1.0).is_err());
        assert!((m.diameter(None) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn all_cloak_configs_build() {
        for c in ["circular", "I", "II", "III", "IV", "V", "VI", "VII", "VIII"] {
            let cfg: CloakConfig = c.parse().unwrap();
            let m = build_cloak_model(cfg).unwrap();
            assert_eq!(m.patches.len(), 13);
            assert_eq!(m.symmetric, cfg != CloakConfig::V);
            let area = m.area(None).unwrap();
            assert!((area - 0.14 * 0.14).abs() < 1e-6 * 0.0196, "{c}: area {area}");
            // two Dirichlet sides and two insulated sides, each split over one outer patch
            let dir = m.boundaries.iter().filter(|b| matches!(b.kind, BoundaryKind::Dirichlet(_))).count();
            let ins = m.boundaries.iter().filter(|b| b.kind == BoundaryKind::Insulated).count();
            assert_eq!((dir, ins), (2, 2));
        }
        assert!("IX".parse::<CloakConfig>().is_err());
    }

    #[test]
    fn circular_cloak_regions() {
        let m = build_cloak_model(CloakConfig::Circular).unwrap();
        let design = m.area(Some(RegionLabel::Design)).unwrap();
        assert!((design - PI * (0.04f64.powi(2) - 0.02f64.powi(2))).abs() < 1e-12);
        let inside = m.area(Some(RegionLabel::Inside)).unwrap();
        assert!((inside - PI * 0.02f64.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn camouflage_layout() {
        let m = build_camouflage_model().unwrap();
        assert!(m.patches.iter().any(|p| p.label == RegionLabel::Sector));
        assert_eq!(m.conductivity.inside, 72.7);
        assert_eq!(m.conductivity.outside, 177.0);
        let area = m.area(None).unwrap();
        assert!((area - 0.01).abs() < 1e-6 * 0.01);
        let sector = m.area(Some(RegionLabel::Sector)).unwrap();
        assert!((sector - 0.5 * PI * (0.036f64.powi(2) - 0.024f64.powi(2))).abs() < 1e-12);
    }

    #[test]
    fn plate_splits() {
        let m = build_plate(0.14, 0.14, 2, 1, 200.0).unwrap();
        assert_eq!(m.interfaces.len(), 1);
        assert_eq!(m.boundaries.len(), 6);
    }
}
