//! Closed-form references: the two-material annulus and finite-difference gradients.
//!
//! The annulus `ra < r < rb` holds temperature `ta` on the inner and `tb` on
//! the outer circle. Conductivity is `k_inner` for `r < rl` and `k_outer`
//! beyond, so the temperature is `c + d ln r` on each side.

use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusParams {
    pub ra: f64,
    pub rb: f64,
    pub ta: f64,
    pub tb: f64,
    pub k_inner: f64,
    pub k_outer: f64,
}

impl Default for AnnulusParams {
    fn default() -> Self {
        Self { ra: 1.0, rb: 2.0, ta: 0.0, tb: 100.0, k_inner: 100.0, k_outer: 10.0 }
    }
}

/// Piecewise logarithmic solution, `[inner, outer]` coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusSolution {
    pub params: AnnulusParams,
    pub rl: f64,
    pub c: [f64; 2],
    pub d: [f64; 2],
}

fn solve4(a: [[f64; 4]; 4], b: [f64; 4]) -> Result<[f64; 4]> {
    let m = Mat::from_fn(4, 4, |i, j| a[i][j]);
    let mut rhs = Mat::from_fn(4, 1, |i, _| b[i]);
    m.partial_piv_lu().solve_in_place(rhs.as_mut());
    let x = [rhs[(0, 0)], rhs[(1, 0)], rhs[(2, 0)], rhs[(3, 0)]];
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::NonFinite("singular annulus system".into()))
    }
}

/// Matrix of the conditions on `(c1, d1, c2, d2)`: inner value, outer value,
/// continuity and flux balance at `rl`.
fn system(p: &AnnulusParams, rl: f64) -> [[f64; 4]; 4] {
    let l = rl.ln();
    [
        [1.0, p.ra.ln(), 0.0, 0.0],
        [0.0, 0.0, 1.0, p.rb.ln()],
        [1.0, l, -1.0, -l],
        [0.0, p.k_inner, 0.0, -p.k_outer],
    ]
}

fn check(p: &AnnulusParams, rl: f64) -> Result<()> {
    if !(0.0 < p.ra && p.ra < rl && rl < p.rb) {
        return Err(Error::InvalidInput(format!("need 0 < ra < rl < rb, got {} {} {}", p.ra, rl, p.rb)));
    }
    if !(p.k_inner > 0.0 && p.k_outer > 0.0) {
        return Err(Error::InvalidInput("conductivities must be positive".into()));
    }
    Ok(())
}

pub fn annulus_state(p: AnnulusParams, rl: f64) -> Result<AnnulusSolution> {
    check(&p, rl)?;
    let x = solve4(system(&p, rl), [p.ta, p.tb, 0.0, 0.0])?;
    Ok(AnnulusSolution { params: p, rl, c: [x[0], x[2]], d: [x[1], x[3]] })
}

/// `int r (c + d ln r)^2 dr`.
fn antiderivative(c: f64, d: f64, r: f64) -> f64 {
    let l = r.ln();
    let r2 = r * r;
    c * c * r2 / 2.0 + 2.0 * c * d * (r2 / 2.0 * l - r2 / 4.0) + d * d * (r2 / 2.0 * l * l - r2 / 2.0 * l + r2 / 4.0)
}

/// Partial derivatives of [`antiderivative`] with respect to `c` and `d`.
fn antiderivative_grad(c: f64, d: f64, r: f64) -> [f64; 2] {
    let l = r.ln();
    let r2 = r * r;
    let a = r2 / 2.0 * l - r2 / 4.0;
    let b = r2 / 2.0 * l * l - r2 / 2.0 * l + r2 / 4.0;
    [c * r2 + 2.0 * d * a, 2.0 * c * a + 2.0 * d * b]
}

impl AnnulusSolution {
    fn side(&self, r: f64) -> usize {
        usize::from(r >= self.rl)
    }

    pub fn temperature(&self, r: f64) -> f64 {
        let s = self.side(r);
        self.c[s] + self.d[s] * r.ln()
    }

    /// Radial derivative `dT/dr`.
    pub fn dtemperature(&self, r: f64) -> f64 {
        self.d[self.side(r)] / r
    }

    pub fn conductivity(&self, r: f64) -> f64 {
        if r < self.rl {
            self.params.k_inner
        } else {
            self.params.k_outer
        }
    }

    /// `J = int T^2 dA` over the annulus.
    pub fn objective(&self) -> f64 {
        let p = &self.params;
        let inner = antiderivative(self.c[0], self.d[0], self.rl) - antiderivative(self.c[0], self.d[0], p.ra);
        let outer = antiderivative(self.c[1], self.d[1], p.rb) - antiderivative(self.c[1], self.d[1], self.rl);
        2.0 * PI * (inner + outer)
    }

    /// Solution of `-div(kappa grad P) = -2T`, `P = 0` on both circles, so that
    /// `dJ = P^T dK T` holds for the discrete counterpart.
    pub fn adjoint(&self) -> Result<AnnulusAdjoint> {
        let p = &self.params;
        let k = [p.k_inner, p.k_outer];
        // particular solution and its flux r P'
        let part = |s: usize, r: f64| ((self.c[s] - self.d[s]) * r * r + self.d[s] * r * r * r.ln()) / (2.0 * k[s]);
        let rflux = |s: usize, r: f64| (self.c[s] * r * r + self.d[s] * (r * r * r.ln() - r * r / 2.0)) / k[s];
        let rl = self.rl;
        // homogeneous part A ln r + B per side, unknowns (B1, A1, B2, A2)
        let rhs = [
            -part(0, p.ra),
            -part(1, p.rb),
            part(1, rl) - part(0, rl),
            k[1] * rflux(1, rl) - k[0] * rflux(0, rl),
        ];
        let x = solve4(system(p, rl), rhs)?;
        Ok(AnnulusAdjoint { state: *self, b: [x[0], x[2]], a: [x[1], x[3]] })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusAdjoint {
    state: AnnulusSolution,
    a: [f64; 2],
    b: [f64; 2],
}

impl AnnulusAdjoint {
    pub fn value(&self, r: f64) -> f64 {
        let s = &self.state;
        let i = s.side(r);
        let k = [s.params.k_inner, s.params.k_outer][i];
        ((s.c[i] - s.d[i]) * r * r + s.d[i] * r * r * r.ln()) / (2.0 * k) + self.a[i] * r.ln() + self.b[i]
    }
}

/// `J(rl)` for the annulus.
pub fn annulus_objective(p: AnnulusParams, rl: f64) -> Result<f64> {
    Ok(annulus_state(p, rl)?.objective())
}

/// `dJ/drl` through the derivative of the coefficient system.
pub fn annulus_objective_derivative(p: AnnulusParams, rl: f64) -> Result<f64> {
    let s = annulus_state(p, rl)?;
    let x = [s.c[0], s.d[0], s.c[1], s.d[1]];
    // A' x, only the continuity row depends on rl
    let ax = [0.0, 0.0, (x[1] - x[3]) / rl, 0.0];
    let dx = solve4(system(&p, rl), ax.map(|v| -v))?;
    let gi = antiderivative_grad(x[0], x[1], rl);
    let gi0 = antiderivative_grad(x[0], x[1], p.ra);
    let go = antiderivative_grad(x[2], x[3], p.rb);
    let go0 = antiderivative_grad(x[2], x[3], rl);
    let coeff_part = (gi[0] - gi0[0]) * dx[0] + (gi[1] - gi0[1]) * dx[1] + (go[0] - go0[0]) * dx[2] + (go[1] - go0[1]) * dx[3];
    let t_in = x[0] + x[1] * rl.ln();
    let t_out = x[2] + x[3] * rl.ln();
    let boundary_part = rl * (t_in * t_in - t_out * t_out);
    Ok(2.0 * PI * (coeff_part + boundary_part))
}

/// Minimizer of `J(rl)` over `(ra, rb)` by bisection on the derivative.
pub fn annulus_optimum(p: AnnulusParams) -> Result<(f64, f64)> {
    let span = p.rb - p.ra;
    let (mut lo, mut hi) = (p.ra + 1e-9 * span, p.rb - 1e-9 * span);
    let dlo = annulus_objective_derivative(p, lo)?;
    let dhi = annulus_objective_derivative(p, hi)?;
    if dlo >= 0.0 || dhi <= 0.0 {
        let j_lo = annulus_objective(p, lo)?;
        let j_hi = annulus_objective(p, hi)?;
        return Ok(if j_lo <= j_hi { (lo, j_lo) } else { (hi, j_hi) });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if annulus_objective_derivative(p, mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let rl = 0.5 * (lo + hi);
    Ok((rl, annulus_objective(p, rl)?))
}

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h` for the listed components.
pub fn fd_gradient<F>(mut f: F, x: &[f64], h: f64, components: &[usize]) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut y = x.to_vec();
    let mut out = Vec::with_capacity(components.len());
    for &i in components {
        y[i] = x[i] + h;
        let fp = f(&y)?;
        y[i] = x[i] - h;
        let fm = f(&y)?;
        y[i] = x[i];
        out.push((fp - fm) / (2.0 * h));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn satisfies_conditions() {
        let p = AnnulusParams::default();
        let s = annulus_state(p, 1.5).unwrap();
        assert!((s.temperature(1.0) - 0.0).abs() < 1e-12);
        assert!((s.temperature(2.0) - 100.0).abs() < 1e-12);
        let e = 1e-12;
        assert!((s.temperature(1.5 - e) - s.temperature(1.5)).abs() < 1e-9);
        assert!((100.0 * s.dtemperature(1.5 - e) - 10.0 * s.dtemperature(1.5)).abs() < 1e-8);
    }

    #[test]
    fn objective_matches_midpoint_sum() {
        let p = AnnulusParams::default();
        let s = annulus_state(p, 1.3).unwrap();
        let n = 200_000;
        let h = (p.rb - p.ra) / n as f64;
        let sum: f64 = (0..n)
            .map(|i| {
                let r = p.ra + (i as f64 + 0.5) * h;
                2.0 * PI * r * s.temperature(r).powi(2) * h
            })
            .sum();
        assert!((sum - s.objective()).abs() < 1e-6 * sum);
    }

    #[test]
    fn derivative_matches_differences() {
        let p = AnnulusParams::default();
        for rl in [1.2, 1.5, 1.8061, 1.9] {
            let d = annulus_objective_derivative(p, rl).unwrap();
            // Richardson-extrapolated central differences
            let cd = |h: f64| (annulus_objective(p, rl + h).unwrap() - annulus_objective(p, rl - h).unwrap()) / (2.0 * h);
            let fd = (4.0 * cd(5e-5) - cd(1e-4)) / 3.0;
            let scale = annulus_objective(p, rl).unwrap();
            assert!((d - fd).abs() < 1e-8 * scale, "{rl}: {d} vs {fd}");
        }
    }

    #[test]
    fn known_optimum() {
        let (rl, j) = annulus_optimum(AnnulusParams::default()).unwrap();
        assert!((rl - 1.806121103).abs() < 1e-8, "{rl}");
        assert!((j - 16094.5777).abs() < 1e-3, "{j}");
    }

    #[test]
    fn adjoint_solves_its_equation() {
        let p = AnnulusParams::default();
        let s = annulus_state(p, 1.4).unwrap();
        let a = s.adjoint().unwrap();
        assert!(a.value(1.0).abs() < 1e-10 && a.value(2.0).abs() < 1e-10);
        let e = 1e-7;
        assert!((a.value(1.4 - 1e-12) - a.value(1.4)).abs() < 1e-8);
        // flux continuity
        let dpi = (a.value(1.4 - e) - a.value(1.4 - 3.0 * e)) / (2.0 * e);
        let dpo = (a.value(1.4 + 3.0 * e) - a.value(1.4 + e)) / (2.0 * e);
        assert!((100.0 * dpi - 10.0 * dpo).abs() < 1e-3 * (100.0 * dpi).abs());
        // -(1/r)(k r P')' = -2T at an interior point
        let r = 1.7;
        let h = 1e-4;
        let rp = |r: f64| r * (a.value(r + h) - a.value(r - h)) / (2.0 * h);
        let lhs = -10.0 * (rp(r + h) - rp(r - h)) / (2.0 * h) / r;
        assert!((lhs + 2.0 * s.temperature(r)).abs() < 1e-3 * s.temperature(r).abs());
    }

    #[test]
    fn fd_of_quadratic() {
        let g = fd_gradient(|x| Ok(x[0] * x[0] + 3.0 * x[1]), &[2.0, 1.0], 1e-4, &[0, 1]).unwrap();
        assert!((g[0] - 4.0).abs() < 1e-8 && (g[1] - 3.0).abs() < 1e-8);
    }
}
