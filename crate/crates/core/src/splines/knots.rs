use crate::error::{Error, Result};

/// Relative tolerance used when comparing knot values.
const KNOT_EPS: f64 = 1e-12;

/// Clamped (open) knot vector of a univariate B-spline basis.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    values: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    /// Build a clamped knot vector, validating ordering and end multiplicities.
    pub fn new(values: Vec<f64>, degree: usize) -> Result<Self> {
        if values.len() < 2 * (degree + 1) {
            return Err(Error::InvalidKnots(format!(
                "{} knots is too few for degree {degree}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidKnots("non-finite knot".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidKnots("knots must be non-decreasing".into()));
        }
        let n = values.len();
        let lo = values[0];
        let hi = values[n - 1];
        if hi <= lo {
            return Err(Error::InvalidKnots("empty parameter range".into()));
        }
        if values[..=degree].iter().any(|&v| v != lo) || values[n - degree - 1..].iter().any(|&v| v != hi) {
            return Err(Error::InvalidKnots(format!(
                "end knots must repeat {} times",
                degree + 1
            )));
        }
        let kv = Self { values, degree };
        for &(u, m) in kv.breakpoints().iter() {
            if u > lo && u < hi && m > degree {
                return Err(Error::InvalidKnots(format!(
                    "interior knot {u} has multiplicity {m} > degree {degree}"
                )));
            }
        }
        Ok(kv)
    }

    /// Clamped knot vector on [0, 1] with `elements` equal spans.
    pub fn uniform(degree: usize, elements: usize) -> Result<Self> {
        if elements == 0 {
            return Err(Error::InvalidKnots("need at least one element".into()));
        }
        let mut v = vec![0.0; degree + 1];
        v.extend((1..elements).map(|i| i as f64 / elements as f64));
        v.extend(std::iter::repeat_n(1.0, degree + 1));
        Self::new(v, degree)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions.
    pub fn num_basis(&self) -> usize {
        self.values.len() - self.degree - 1
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Distinct knot values with their multiplicities.
    pub fn breakpoints(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &v in &self.values {
            match out.last_mut() {
                Some((u, m)) if *u == v => *m += 1,
                _ => out.push((v, 1)),
            }
        }
        out
    }

    /// Multiplicity of `u` in the knot vector (0 if absent).
    pub fn multiplicity(&self, u: f64) -> usize {
        let tol = KNOT_EPS * (self.last() - self.first());
        self.values.iter().filter(|&&v| (v - u).abs() <= tol).count()
    }

    /// Nonempty knot spans as `(span index, lower, upper)`.
    pub fn spans(&self) -> Vec<(usize, f64, f64)> {
        (self.degree..self.num_basis())
            .filter(|&i| self.values[i + 1] > self.values[i])
            .map(|i| (i, self.values[i], self.values[i + 1]))
            .collect()
    }

    /// Index `i` of the span with `knots[i] <= u < knots[i+1]`.
    ///
    /// The last knot maps to the last nonempty span.
    pub fn find_span(&self, u: f64) -> Result<usize> {
        let (lo, hi) = (self.first(), self.last());
        let tol = KNOT_EPS * (hi - lo);
        if !(u >= lo - tol && u <= hi + tol) {
            return Err(Error::OutOfDomain { value: u, lo, hi });
        }
        let n = self.num_basis();
        if u >= self.values[n] {
            return Ok(n - 1);
        }
        if u <= lo {
            return Ok(self.degree);
        }
        // upper bound in values[degree..=n]
        let slice = &self.values[self.degree..=n];
        let idx = slice.partition_point(|&k| k <= u);
        Ok(self.degree + idx - 1)
    }

    /// Nonzero basis values and first derivatives at `u` in span `span`.
    ///
    /// Writes `degree + 1` entries into `vals` and `ders` for functions
    /// `span - degree ..= span`.
    pub fn basis_with_derivs(&self, span: usize, u: f64, vals: &mut [f64], ders: &mut [f64]) {
        let p = self.degree;
        let k = &self.values;
        // ndu[j][r]: basis table with knot differences in the lower triangle
        let mut ndu = vec![0.0; (p + 1) * (p + 1)];
        let at = |j: usize, r: usize| j * (p + 1) + r;
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[at(0, 0)] = 1.0;
        for j in 1..=p {
            left[j] = u - k[span + 1 - j];
            right[j] = k[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[at(j, r)] = right[r + 1] + left[j - r];
                let temp = ndu[at(r, j - 1)] / ndu[at(j, r)];
                ndu[at(r, j)] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[at(j, j)] = saved;
        }
        for j in 0..=p {
            vals[j] = ndu[at(j, p)];
        }
        if p == 0 {
            ders[0] = 0.0;
            return;
        }
        for r in 0..=p {
            let mut d = 0.0;
            if r >= 1 {
                d += ndu[at(r - 1, p - 1)] / ndu[at(p, r - 1)];
            }
            if r < p {
                d -= ndu[at(r, p - 1)] / ndu[at(p, r)];
            }
            ders[r] = d * p as f64;
        }
    }

    /// Greville abscissae (knot averages), one per basis function.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.num_basis())
            .map(|i| {
                if p == 0 {
                    0.5 * (self.values[i] + self.values[i + 1])
                } else {
                    self.values[i + 1..=i + p].iter().sum::<f64>() / p as f64
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent recursive Cox-de Boor evaluation.
    fn cox_de_boor(k: &[f64], i: usize, p: usize, u: f64, last: bool) -> f64 {
        if p == 0 {
            let inside = k[i] <= u && u < k[i + 1];
            let at_end = last && u == k[i + 1] && k[i] < k[i + 1] && k[i + 1..].iter().all(|&x| x == k[i + 1]);
            return if inside || at_end { 1.0 } else { 0.0 };
        }
        let mut out = 0.0;
        let d1 = k[i + p] - k[i];
        if d1 > 0.0 {
            out += (u - k[i]) / d1 * cox_de_boor(k, i, p - 1, u, last);
        }
        let d2 = k[i + p + 1] - k[i + 1];
        if d2 > 0.0 {
            out += (k[i + p + 1] - u) / d2 * cox_de_boor(k, i + 1, p - 1, u, last);
        }
        out
    }

    #[test]
    fn find_span_conventions() {
        let kv = KnotVector::new(vec![0., 0., 0., 1., 1., 1.], 2).unwrap();
        assert_eq!(kv.find_span(0.0).unwrap(), 2);
        assert_eq!(kv.find_span(1.0).unwrap(), 2);
        let kv = KnotVector::new(vec![0., 0., 0., 0.5, 1., 1., 1.], 2).unwrap();
        assert_eq!(kv.find_span(0.5).unwrap(), 3);
        assert_eq!(kv.find_span(0.49).unwrap(), 2);
        assert!(kv.find_span(1.5).is_err());
        assert!(kv.find_span(-0.1).is_err());
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(KnotVector::new(vec![0., 0., 1., 1.], 2).is_err());
        assert!(KnotVector::new(vec![0., 0., 0., 0.7, 0.5, 1., 1., 1.], 2).is_err());
        assert!(KnotVector::new(vec![0., 0., 1., 1., 1.], 2).is_err());
        assert!(KnotVector::new(vec![0., 0., 0., 0.5, 0.5, 0.5, 1., 1., 1.], 2).is_err());
    }

    #[test]
    fn matches_recursive_evaluation() {
        let kv = KnotVector::new(vec![0., 0., 0., 0., 0.2, 0.5, 0.5, 0.8, 1., 1., 1., 1.], 3).unwrap();
        let p = 3;
        let mut vals = vec![0.0; p + 1];
        let mut ders = vec![0.0; p + 1];
        for s in 0..=200 {
            let u = s as f64 / 200.0;
            let span = kv.find_span(u).unwrap();
            kv.basis_with_derivs(span, u, &mut vals, &mut ders);
            for i in 0..kv.num_basis() {
                let expect = cox_de_boor(kv.values(), i, p, u, true);
                let got = if i + p >= span && i <= span { vals[i + p - span] } else { 0.0 };
                assert!((expect - got).abs() < 1e-13, "u={u} i={i}: {expect} vs {got}");
            }
            // derivative vs central difference of the recursive oracle
            if u > 0.01 && u < 0.99 && [0.2, 0.5, 0.8].iter().all(|k| (u - k).abs() > 0.01) {
                let h = 1e-6;
                for j in 0..=p {
                    let i = span - p + j;
                    let fd = (cox_de_boor(kv.values(), i, p, u + h, true) - cox_de_boor(kv.values(), i, p, u - h, true)) / (2.0 * h);
                    assert!((fd - ders[j]).abs() < 1e-6, "deriv u={u} i={i}");
                }
            }
        }
    }

    #[test]
    fn uniform_and_spans() {
        let kv = KnotVector::uniform(2, 4).unwrap();
        assert_eq!(kv.num_basis(), 6);
        assert_eq!(kv.spans().len(), 4);
        assert_eq!(kv.multiplicity(0.0), 3);
        assert_eq!(kv.multiplicity(0.5), 1);
        let g = kv.greville();
        assert_eq!(g.len(), 6);
        assert!((g[0] - 0.0).abs() < 1e-15 && (g[5] - 1.0).abs() < 1e-15);
    }
}
