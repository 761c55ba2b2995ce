use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat, Triplet};
use faer::{Mat, Side};
use rayon::prelude::*;
use std::sync::Arc;

use super::{BulkElement, Discretization, InterfaceElement};
use crate::error::{Error, Result};
use crate::levelset::SmoothingParams;
use crate::model::NitscheParams;

/// Conductivity and its level-set derivative at every quadrature point.
#[derive(Debug, Clone, PartialEq)]
pub struct Conductivity {
    pub bulk: Vec<f64>,
    pub dbulk: Vec<f64>,
    pub iface: Vec<[f64; 2]>,
    pub diface: Vec<[f64; 2]>,
}

impl Conductivity {
    /// Map the level set through the smoothed Heaviside on design patches;
    /// fixed region values elsewhere.
    pub fn from_level_set(disc: &Discretization, coeffs: &[f64], sp: SmoothingParams) -> Self {
        let c = &disc.model.conductivity;
        let pair = c.design;
        let mut bulk = vec![0.0; disc.n_points];
        let mut dbulk = vec![0.0; disc.n_points];
        for el in &disc.elements {
            let fixed = c.region(el.label);
            for (q, pt) in el.points.iter().enumerate() {
                let i = el.first_point + q;
                match (&pt.design, fixed) {
                    (Some(d), _) => {
                        let phi = d.phi(coeffs);
                        bulk[i] = pair.kappa_at(phi, sp);
                        dbulk[i] = pair.dkappa_dphi(phi, sp);
                    }
                    (None, Some(k)) => bulk[i] = k,
                    (None, None) => bulk[i] = pair.k1,
                }
            }
        }
        let mut iface = vec![[0.0; 2]; disc.n_interface_points];
        let mut diface = vec![[0.0; 2]; disc.n_interface_points];
        for el in &disc.interfaces {
            for (q, pt) in el.points.iter().enumerate() {
                let i = el.first_point + q;
                for s in 0..2 {
                    let label = disc.model.patches[el.patch[s]].label;
                    match (&pt.side[s].design, c.region(label)) {
                        (Some(d), _) => {
                            let phi = d.phi(coeffs);
                            iface[i][s] = pair.kappa_at(phi, sp);
                            diface[i][s] = pair.dkappa_dphi(phi, sp);
                        }
                        (None, Some(k)) => iface[i][s] = k,
                        (None, None) => iface[i][s] = pair.k1,
                    }
                }
            }
        }
        Self { bulk, dbulk, iface, diface }
    }

    /// The same conductivity everywhere.
    pub fn uniform(disc: &Discretization, kappa: f64) -> Self {
        Self {
            bulk: vec![kappa; disc.n_points],
            dbulk: vec![0.0; disc.n_points],
            iface: vec![[kappa; 2]; disc.n_interface_points],
            diface: vec![[0.0; 2]; disc.n_interface_points],
        }
    }
}

/// Which parts of the stiffness matrix to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parts {
    pub bulk: bool,
    /// Symmetric flux-consistency terms `Kn + Kn^T`.
    pub consistency: bool,
    pub penalty: bool,
}

impl Parts {
    pub const ALL: Parts = Parts { bulk: true, consistency: true, penalty: true };
    pub const BULK: Parts = Parts { bulk: true, consistency: false, penalty: false };
    pub const COUPLING: Parts = Parts { bulk: false, consistency: true, penalty: true };
}

/// Row-major local stiffness `sum kappa w grad N_a . grad N_b`.
pub fn bulk_local(el: &BulkElement, kappa: &[f64]) -> Vec<f64> {
    let n = el.dofs.len();
    let mut k = vec![0.0; n * n];
    for (pt, &kap) in el.points.iter().zip(kappa) {
        let s = kap * pt.w;
        for a in 0..n {
            let ga = pt.grad[a];
            for b in a..n {
                let gb = pt.grad[b];
                k[a * n + b] += s * (ga[0] * gb[0] + ga[1] * gb[1]);
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            k[a * n + b] = k[b * n + a];
        }
    }
    k
}

/// Local Nitsche coupling over the concatenated DOFs `[side 1, side 2]`.
pub fn interface_local(el: &InterfaceElement, kappa: &[[f64; 2]], nitsche: NitscheParams, parts: Parts) -> Vec<f64> {
    let n1 = el.dofs[0].len();
    let n = n1 + el.dofs[1].len();
    let mut k = vec![0.0; n * n];
    let mut jump = vec![0.0; n];
    let mut flux = vec![0.0; n];
    let g = nitsche.gamma;
    for (pt, kap) in el.points.iter().zip(kappa) {
        let nr = pt.normal;
        for a in 0..n1 {
            jump[a] = pt.side[0].n[a];
            let d = pt.side[0].grad[a];
            flux[a] = g * kap[0] * (d[0] * nr[0] + d[1] * nr[1]);
        }
        for a in n1..n {
            jump[a] = -pt.side[1].n[a - n1];
            let d = pt.side[1].grad[a - n1];
            flux[a] = (1.0 - g) * kap[1] * (d[0] * nr[0] + d[1] * nr[1]);
        }
        for a in 0..n {
            for b in 0..n {
                let mut v = 0.0;
                if parts.consistency {
                    v -= jump[a] * flux[b] + flux[a] * jump[b];
                }
                if parts.penalty {
                    v += nitsche.beta * jump[a] * jump[b];
                }
                k[a * n + b] += pt.w * v;
            }
        }
    }
    k
}

fn interface_dofs(el: &InterfaceElement) -> Vec<usize> {
    el.dofs[0].iter().chain(&el.dofs[1]).copied().collect()
}

/// Visit every local stiffness block as `(dofs, row-major values)` in a fixed order.
fn for_each_block(disc: &Discretization, cond: &Conductivity, parts: Parts, mut f: impl FnMut(&[usize], &[f64])) {
    if parts.bulk {
        let blocks: Vec<Vec<f64>> = disc
            .elements
            .par_iter()
            .map(|el| bulk_local(el, &cond.bulk[el.first_point..el.first_point + el.points.len()]))
            .collect();
        for (el, k) in disc.elements.iter().zip(&blocks) {
            f(&el.dofs, k);
        }
    }
    if parts.consistency || parts.penalty {
        for el in &disc.interfaces {
            let kap = &cond.iface[el.first_point..el.first_point + el.points.len()];
            f(&interface_dofs(el), &interface_local(el, kap, disc.model.nitsche, parts));
        }
    }
}

/// Visit the pattern of [`for_each_block`] without computing values.
fn for_each_pattern(disc: &Discretization, mut f: impl FnMut(&[usize])) {
    for el in &disc.elements {
        f(&el.dofs);
    }
    for el in &disc.interfaces {
        f(&interface_dofs(el));
    }
}

/// Full (unreduced) stiffness matrix.
pub fn assemble_matrix(disc: &Discretization, cond: &Conductivity, parts: Parts) -> Result<SparseColMat<usize, f64>> {
    let mut trip = Vec::new();
    for_each_block(disc, cond, parts, |dofs, k| {
        let n = dofs.len();
        for a in 0..n {
            for b in 0..n {
                trip.push(Triplet::new(dofs[a], dofs[b], k[a * n + b]));
            }
        }
    });
    SparseColMat::try_new_from_triplets(disc.n_dofs, disc.n_dofs, &trip)
        .map_err(|e| Error::Solver(format!("matrix creation failed: {e:?}")))
}

/// Full load vector from prescribed boundary fluxes.
pub fn assemble_load(disc: &Discretization) -> Vec<f64> {
    let mut f = vec![0.0; disc.n_dofs];
    for el in &disc.flux {
        for (w, n) in &el.points {
            for (&d, &na) in el.dofs.iter().zip(n) {
                f[d] += w * el.flux * na;
            }
        }
    }
    f
}

/// Prescribed values on constrained DOFs, zero elsewhere.
pub fn dirichlet_vector(disc: &Discretization) -> Vec<f64> {
    disc.dirichlet.iter().map(|d| d.unwrap_or(0.0)).collect()
}

enum Factor {
    Llt(Llt<usize, f64>),
    Lu(Lu<usize, f64>),
}

/// Sum kept as an unevaluated pair `s + c` (two-sum and fused multiply-add error terms).
#[derive(Clone, Copy, Default)]
struct Compensated {
    s: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        let z = t - self.s;
        self.c += (self.s - (t - z)) + (x - z);
        self.s = t;
    }

    fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        self.add(p);
        self.c += a.mul_add(b, -p);
    }

    fn value(self) -> f64 {
        self.s + self.c
    }
}

/// Interface penalty in Gram form: `K^s z = sum_q c_q j_q (j_q . z)`.
///
/// Applying the penalty through the jump at each interface point keeps its
/// action on a continuous field exactly zero, which the summed matrix entries
/// do not (entries of the order of the penalty lose the last bits when
/// contributions from several interfaces meet).
struct PenaltyTrace {
    dofs: Vec<Vec<usize>>,
    /// Per point: element index, `beta w`, jump values over the element DOFs.
    points: Vec<(usize, f64, Vec<f64>)>,
}

impl PenaltyTrace {
    fn new(disc: &Discretization) -> Self {
        let beta = disc.model.nitsche.beta;
        let mut dofs = Vec::new();
        let mut points = Vec::new();
        for (e, el) in disc.interfaces.iter().enumerate() {
            dofs.push(interface_dofs(el));
            for pt in &el.points {
                let jump = pt.side[0].n.iter().copied().chain(pt.side[1].n.iter().map(|v| -v)).collect();
                points.push((e, beta * pt.w, jump));
            }
        }
        Self { dofs, points }
    }
}

/// Reduced system `K_ff x = b_f`, together with what is needed to evaluate
/// residuals accurately for iterative refinement.
///
/// With a penalty around 1e12 the rounded sum of penalty and conduction
/// entries keeps the conduction part only to about 1e-8 relative; residuals
/// are therefore computed from the conduction matrix and the penalty trace
/// separately, with compensated sums.
pub struct ReducedSystem {
    /// `K_ff` summed into one matrix, used for factorization.
    pub matrix: SparseColMat<usize, f64>,
    /// Bulk and flux-consistency part of `K_ff`.
    pub conduction: SparseColMat<usize, f64>,
    /// Bulk and flux-consistency entries `(free row, constrained DOF, value)`.
    conduction_fixed: Vec<(usize, usize, f64)>,
    /// `F_f - K_fc T_c`.
    pub rhs: Vec<f64>,
    load: Vec<f64>,
    fixed: Vec<f64>,
    penalty: Arc<PenaltyTrace>,
    free_index: Arc<Vec<Option<usize>>>,
}

impl ReducedSystem {
    /// `F_f - (K z)_f` for a full vector `z`, with compensated accumulation.
    fn residual(&self, load: &[f64], z: &[f64]) -> Vec<f64> {
        let nf = self.conduction.nrows();
        let mut acc = vec![Compensated::default(); nf];
        for (d, fi) in self.free_index.iter().enumerate() {
            if let Some(i) = fi {
                acc[*i].add(load[d]);
            }
        }
        let sym = self.conduction.symbolic();
        let vals = self.conduction.val();
        let mut col = 0;
        for (d, fi) in self.free_index.iter().enumerate() {
            if fi.is_none() {
                continue;
            }
            for k in sym.col_ptr()[col]..sym.col_ptr()[col + 1] {
                acc[sym.row_idx()[k]].add_product(-vals[k], z[d]);
            }
            col += 1;
        }
        for &(i, d, v) in &self.conduction_fixed {
            acc[i].add_product(-v, z[d]);
        }
        for (e, c, jump) in &self.penalty.points {
            let dofs = &self.penalty.dofs[*e];
            let mut j = Compensated::default();
            for (&d, &n) in dofs.iter().zip(jump) {
                j.add_product(n, z[d]);
            }
            let cj = -c * j.value();
            for (&d, &n) in dofs.iter().zip(jump) {
                if let Some(i) = self.free_index[d] {
                    acc[i].add_product(n, cj);
                }
            }
        }
        acc.into_iter().map(Compensated::value).collect()
    }
}

/// A factorized free-free block, reusable for several right-hand sides.
pub struct Factorization {
    factor: Factor,
    system: ReducedSystem,
    free_dofs: Vec<usize>,
}

const REFINEMENT_SWEEPS: usize = 4;

impl Factorization {
    fn solve_reduced(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        match &self.factor {
            Factor::Llt(f) => f.solve_in_place(x.as_mut()),
            Factor::Lu(f) => f.solve_in_place(x.as_mut()),
        }
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }

    /// Solve `K z = load` on the free DOFs with constrained entries of `z` taken
    /// from `fixed`, refining iteratively against the split operator.
    fn solve_with(&self, load: &[f64], fixed: &[f64]) -> Result<Vec<f64>> {
        let mut z = fixed.to_vec();
        for &d in &self.free_dofs {
            z[d] = 0.0;
        }
        for sweep in 0..=REFINEMENT_SWEEPS {
            let r = self.system.residual(load, &z);
            let d = self.solve_reduced(&r);
            let mut dn = 0.0f64;
            let mut zn = 0.0f64;
            for (&g, di) in self.free_dofs.iter().zip(&d) {
                z[g] += di;
                dn = dn.max(di.abs());
                zn = zn.max(z[g].abs());
            }
            if sweep > 0 && !(dn > 4.0 * f64::EPSILON * zn) {
                break;
            }
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear solve produced non-finite values".into()));
        }
        Ok(z)
    }

    /// Solve `K_ff x_f = b_f` for a full-length right-hand side; constrained entries of the result are zero.
    pub fn solve_full(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.solve_with(rhs, &vec![0.0; rhs.len()])
    }

    pub fn system(&self) -> &ReducedSystem {
        &self.system
    }

    pub fn is_cholesky(&self) -> bool {
        matches!(self.factor, Factor::Llt(_))
    }
}

/// State solution with its factorization kept for the adjoint solve.
pub struct StateSolution {
    /// Full temperature coefficient vector including constrained DOFs.
    pub t: Vec<f64>,
    pub factorization: Factorization,
}

/// Dirichlet-eliminated system with a fixed sparsity pattern and cached symbolic factorization.
pub struct StateSolver {
    free_index: Arc<Vec<Option<usize>>>,
    free_dofs: Vec<usize>,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    llt: SymbolicLlt<usize>,
    lu: std::sync::OnceLock<SymbolicLu<usize>>,
    penalty: Arc<PenaltyTrace>,
}

impl StateSolver {
    pub fn new(disc: &Discretization) -> Result<Self> {
        let mut free_index = vec![None; disc.n_dofs];
        let mut free_dofs = Vec::new();
        for (d, c) in disc.dirichlet.iter().enumerate() {
            if c.is_none() {
                free_index[d] = Some(free_dofs.len());
                free_dofs.push(d);
            }
        }
        let mut pairs = Vec::new();
        for_each_pattern(disc, |dofs| {
            for &r in dofs {
                if let Some(fr) = free_index[r] {
                    for &c in dofs {
                        if let Some(fc) = free_index[c] {
                            pairs.push(Pair::new(fr, fc));
                        }
                    }
                }
            }
        });
        let nf = free_dofs.len();
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(nf, nf, &pairs)
            .map_err(|e| Error::Solver(format!("sparsity pattern creation failed: {e:?}")))?;
        let llt = SymbolicLlt::try_new(symbolic.as_ref(), Side::Lower)
            .map_err(|e| Error::Solver(format!("symbolic factorization failed: {e:?}")))?;
        Ok(Self {
            free_index: Arc::new(free_index),
            free_dofs,
            symbolic,
            argsort,
            llt,
            lu: std::sync::OnceLock::new(),
            penalty: Arc::new(PenaltyTrace::new(disc)),
        })
    }

    pub fn num_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    fn matrix(&self, vals: &[f64]) -> Result<SparseColMat<usize, f64>> {
        SparseColMat::new_from_argsort(self.symbolic.clone(), &self.argsort, vals)
            .map_err(|e| Error::Solver(format!("matrix creation failed: {e:?}")))
    }

    /// Reduced matrices and right-hand side `F_f - K_fc T_c`.
    pub fn assemble_reduced(&self, disc: &Discretization, cond: &Conductivity) -> Result<ReducedSystem> {
        let fixed = dirichlet_vector(disc);
        let load = assemble_load(disc);
        let mut soft = Vec::new();
        let mut pen = Vec::new();
        let mut soft_fixed = Vec::new();
        // values are pushed in the order of `for_each_pattern`, which the argsort expects
        let push = |dofs: &[usize], k: &[f64], vals: &mut Vec<f64>, fixed_part: Option<&mut Vec<(usize, usize, f64)>>| {
            let n = dofs.len();
            let mut fixed_part = fixed_part;
            for (a, &r) in dofs.iter().enumerate() {
                let Some(fr) = self.free_index[r] else { continue };
                for (b, &c) in dofs.iter().enumerate() {
                    let v = k.get(a * n + b).copied().unwrap_or(0.0);
                    match self.free_index[c] {
                        Some(_) => vals.push(v),
                        None => {
                            if let Some(fp) = fixed_part.as_deref_mut() {
                                if v != 0.0 {
                                    fp.push((fr, c, v));
                                }
                            }
                        }
                    }
                }
            }
        };
        for_each_block(disc, cond, Parts::BULK, |dofs, k| {
            push(dofs, k, &mut soft, Some(&mut soft_fixed));
            push(dofs, &[], &mut pen, None);
        });
        let nitsche = disc.model.nitsche;
        let consistency = Parts { bulk: false, consistency: true, penalty: false };
        let penalty = Parts { bulk: false, consistency: false, penalty: true };
        for el in &disc.interfaces {
            let kap = &cond.iface[el.first_point..el.first_point + el.points.len()];
            let dofs = interface_dofs(el);
            push(&dofs, &interface_local(el, kap, nitsche, consistency), &mut soft, Some(&mut soft_fixed));
            push(&dofs, &interface_local(el, kap, nitsche, penalty), &mut pen, None);
        }
        let total: Vec<f64> = soft.iter().zip(&pen).map(|(a, b)| a + b).collect();
        if total.iter().chain(soft_fixed.iter().map(|e| &e.2)).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("stiffness matrix has non-finite entries".into()));
        }
        let mut system = ReducedSystem {
            matrix: self.matrix(&total)?,
            conduction: self.matrix(&soft)?,
            conduction_fixed: soft_fixed,
            rhs: Vec::new(),
            load,
            fixed,
            penalty: Arc::clone(&self.penalty),
            free_index: Arc::clone(&self.free_index),
        };
        let mut z = system.fixed.clone();
        for &d in &self.free_dofs {
            z[d] = 0.0;
        }
        system.rhs = system.residual(&system.load, &z);
        if system.rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("load has non-finite entries".into()));
        }
        Ok(system)
    }

    /// Cholesky factorization of `K_ff`, falling back to LU when it is not positive definite.
    pub fn factorize(&self, system: ReducedSystem) -> Result<Factorization> {
        let mat = &system.matrix;
        let factor = match Llt::try_new_with_symbolic(self.llt.clone(), mat.as_ref(), Side::Lower) {
            Ok(f) => Factor::Llt(f),
            Err(_) => {
                log::warn!("Cholesky factorization failed, falling back to LU");
                let sym = match self.lu.get() {
                    Some(s) => s.clone(),
                    None => {
                        let s = SymbolicLu::try_new(self.symbolic.as_ref())
                            .map_err(|e| Error::Solver(format!("symbolic LU failed: {e:?}")))?;
                        self.lu.get_or_init(|| s).clone()
                    }
                };
                Factor::Lu(
                    Lu::try_new_with_symbolic(sym, mat.as_ref())
                        .map_err(|e| Error::Solver(format!("LU factorization failed: {e:?}")))?,
                )
            }
        };
        Ok(Factorization { factor, system, free_dofs: self.free_dofs.clone() })
    }

    /// Solve `K T = F` with Dirichlet values eliminated.
    pub fn solve_state(&self, disc: &Discretization, cond: &Conductivity) -> Result<StateSolution> {
        let system = self.assemble_reduced(disc, cond)?;
        let factorization = self.factorize(system)?;
        let sys = &factorization.system;
        let t = factorization.solve_with(&sys.load, &sys.fixed)?;
        Ok(StateSolution { t, factorization })
    }
}

/// Adjoint load `F[a] = sum_q w_q N_a(x_q) s_q` for a per-point source `s_q = -dj/dT`.
pub fn adjoint_load(disc: &Discretization, source: &[f64]) -> Vec<f64> {
    let mut f = vec![0.0; disc.n_dofs];
    for el in &disc.elements {
        for (q, pt) in el.points.iter().enumerate() {
            let s = source[el.first_point + q];
            if s == 0.0 {
                continue;
            }
            for (&d, &n) in el.dofs.iter().zip(&pt.n) {
                f[d] += pt.w * n * s;
            }
        }
    }
    f
}

/// Solve `K_ff P_f = F_f` reusing the state factorization; `P` vanishes on constrained DOFs.
pub fn solve_adjoint(state: &StateSolution, load: &[f64]) -> Result<Vec<f64>> {
    state.factorization.solve_full(load)
}

fn grad_at(dofs: &[usize], grads: &[[f64; 2]], u: &[f64]) -> [f64; 2] {
    let mut g = [0.0; 2];
    for (&d, gr) in dofs.iter().zip(grads) {
        g[0] += gr[0] * u[d];
        g[1] += gr[1] * u[d];
    }
    g
}

fn value_at(dofs: &[usize], n: &[f64], u: &[f64]) -> f64 {
    dofs.iter().zip(n).map(|(&d, &v)| v * u[d]).sum()
}

/// `P^T (dK/dPhi_i) T` for every design coefficient `i`.
pub fn sensitivity(disc: &Discretization, cond: &Conductivity, t: &[f64], p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; disc.num_design()];
    for el in &disc.elements {
        for (q, pt) in el.points.iter().enumerate() {
            let Some(d) = &pt.design else { continue };
            let dk = cond.dbulk[el.first_point + q];
            if dk == 0.0 {
                continue;
            }
            let gt = grad_at(&el.dofs, &pt.grad, t);
            let gp = grad_at(&el.dofs, &pt.grad, p);
            let s = dk * pt.w * (gt[0] * gp[0] + gt[1] * gp[1]);
            for (&i, &r) in d.idx.iter().zip(&d.r) {
                out[i] += s * r;
            }
        }
    }
    let gamma = disc.model.nitsche.gamma;
    for el in &disc.interfaces {
        for (q, pt) in el.points.iter().enumerate() {
            let dk = cond.diface[el.first_point + q];
            if dk == [0.0, 0.0] {
                continue;
            }
            let val = |s: usize, u: &[f64]| value_at(&el.dofs[s], &pt.side[s].n, u);
            let jump_t = val(0, t) - val(1, t);
            let jump_p = val(0, p) - val(1, p);
            for s in 0..2 {
                let Some(d) = &pt.side[s].design else { continue };
                if dk[s] == 0.0 {
                    continue;
                }
                let ws = if s == 0 { gamma } else { 1.0 - gamma };
                let gt = grad_at(&el.dofs[s], &pt.side[s].grad, t);
                let gp = grad_at(&el.dofs[s], &pt.side[s].grad, p);
                let nr = pt.normal;
                let c = -pt.w
                    * ws
                    * dk[s]
                    * (jump_p * (gt[0] * nr[0] + gt[1] * nr[1]) + jump_t * (gp[0] * nr[0] + gp[1] * nr[1]));
                for (&i, &r) in d.idx.iter().zip(&d.r) {
                    out[i] += c * r;
                }
            }
        }
    }
    out
}

/// Temperature, gradient and conductivity at every bulk point.
pub fn point_fields(disc: &Discretization, cond: &Conductivity, t: &[f64]) -> Vec<(f64, [f64; 2], f64)> {
    let mut out = vec![(0.0, [0.0; 2], 0.0); disc.n_points];
    for el in &disc.elements {
        for (q, pt) in el.points.iter().enumerate() {
            let i = el.first_point + q;
            out[i] = (value_at(&el.dofs, &pt.n, t), grad_at(&el.dofs, &pt.grad, t), cond.bulk[i]);
        }
    }
    out
}
