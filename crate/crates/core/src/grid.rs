//! Periodic uniform grids, complex grid functions and the centered
//! finite-difference calculus on them.
//!
//! Values are stored row-major with axis order (x, y, z): the last axis is
//! contiguous. Periodicity lives entirely in index arithmetic. Face-valued
//! quantities (forward differences) are held in a [`StaggeredField`] whose
//! entry `i` along axis `a` represents the face at `i + 1/2`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// Periodic box `[lo, hi)^d` discretized with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    n: [usize; MAX_DIM],
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
    h: [f64; MAX_DIM],
}

impl GridSpec {
    pub fn new(n: &[usize], lo: &[f64], hi: &[f64]) -> Result<Self> {
        let dim = n.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::Config(format!("dim must be 1, 2 or 3 (got {dim})")));
        }
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::Config(format!(
                "bounds must have one entry per axis (dim {dim}, lo {}, hi {})",
                lo.len(),
                hi.len()
            )));
        }
        let mut spec =
            GridSpec { dim, n: [1; MAX_DIM], lo: [0.0; MAX_DIM], hi: [1.0; MAX_DIM], h: [1.0; MAX_DIM] };
        let mut total: usize = 1;
        for a in 0..dim {
            if n[a] < 4 {
                return Err(Error::Config(format!("n[{a}] must be >= 4 (got {})", n[a])));
            }
            if !(lo[a].is_finite() && hi[a].is_finite()) || hi[a] <= lo[a] {
                return Err(Error::Config(format!(
                    "axis {a}: need finite lo < hi (got [{}, {}])",
                    lo[a], hi[a]
                )));
            }
            total = total
                .checked_mul(n[a])
                .ok_or_else(|| Error::Size(format!("point count overflows usize at axis {a}")))?;
            spec.n[a] = n[a];
            spec.lo[a] = lo[a];
            spec.hi[a] = hi[a];
            spec.h[a] = (hi[a] - lo[a]) / n[a] as f64;
        }
        if total.checked_mul(std::mem::size_of::<Complex64>()).is_none_or(|b| b > isize::MAX as usize) {
            return Err(Error::Size(format!("{total} points do not fit in memory")));
        }
        Ok(spec)
    }

    /// Same `n` and bounds on every axis.
    pub fn cube(dim: usize, n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(&vec![n; dim], &vec![lo; dim], &vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> &[usize] {
        &self.n[..self.dim]
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo[..self.dim]
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi[..self.dim]
    }

    pub fn h(&self) -> &[f64] {
        &self.h[..self.dim]
    }

    pub fn len(&self) -> usize {
        self.n().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h_x h_y h_z` of a single point.
    pub fn cell_volume(&self) -> f64 {
        self.h().iter().product()
    }

    /// `|Omega|`.
    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.hi[a] - self.lo[a]).product()
    }

    /// Distance between consecutive entries along `axis` in the flat layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.n[axis + 1..self.dim].iter().product()
    }

    /// Multi-index of a flat position.
    pub fn unravel(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.n[a];
            idx /= self.n[a];
        }
        out
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        (0..self.dim).fold(0, |acc, a| acc * self.n[a] + multi[a] % self.n[a])
    }

    /// Physical coordinates `lo + i h` of a flat position.
    pub fn coords(&self, idx: usize) -> [f64; MAX_DIM] {
        let m = self.unravel(idx);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim {
            x[a] = self.lo[a] + m[a] as f64 * self.h[a];
        }
        x
    }

    /// Flat index of the periodic neighbour `i + 1` along `axis`.
    #[inline]
    pub fn forward(&self, idx: usize, axis: usize) -> usize {
        let s = self.stride(axis);
        let i = (idx / s) % self.n[axis];
        if i + 1 < self.n[axis] {
            idx + s
        } else {
            idx + s - self.n[axis] * s
        }
    }

    /// Flat index of the periodic neighbour `i - 1` along `axis`.
    #[inline]
    pub fn backward(&self, idx: usize, axis: usize) -> usize {
        let s = self.stride(axis);
        let i = (idx / s) % self.n[axis];
        if i > 0 {
            idx - s
        } else {
            idx + (self.n[axis] - 1) * s
        }
    }

    fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{:?} on {:?}..{:?} vs {:?} on {:?}..{:?}",
                self.n(),
                self.lo(),
                self.hi(),
                other.n(),
                other.lo(),
                other.hi()
            )))
        }
    }
}

/// Complex values on the points of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(spec: GridSpec) -> Self {
        GridFunction { spec, values: vec![Complex64::new(0.0, 0.0); spec.len()] }
    }

    pub fn constant(spec: GridSpec, c: Complex64) -> Self {
        GridFunction { spec, values: vec![c; spec.len()] }
    }

    pub fn from_values(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        Ok(GridFunction { spec, values })
    }

    /// Samples `f` at every grid point (only the first `dim` coordinates are meaningful).
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let values = (0..spec.len())
            .map(|idx| {
                let x = spec.coords(idx);
                f(&x[..spec.dim()])
            })
            .collect();
        GridFunction { spec, values }
    }

    pub fn from_real_fn(spec: GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        Self::from_fn(spec, |x| Complex64::new(f(x), 0.0))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_shape(&self, other: &GridFunction) -> Result<()> {
        self.spec.check_same(&other.spec)
    }

    pub fn scaled(&self, c: Complex64) -> GridFunction {
        self.map(|z| z * c)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> GridFunction {
        GridFunction { spec: self.spec, values: self.values.iter().map(|&z| f(z)).collect() }
    }

    pub fn zip_with(
        &self,
        other: &GridFunction,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<GridFunction> {
        self.same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridFunction { spec: self.spec, values })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Periodic translation by `by` points along `axis`: `out[i] = f[i - by]`.
    pub fn shifted(&self, axis: usize, by: isize) -> GridFunction {
        let n = self.spec.n[axis] as isize;
        let s = self.spec.stride(axis);
        let mut out = GridFunction::zeros(self.spec);
        for (idx, v) in out.values.iter_mut().enumerate() {
            let i = ((idx / s) % n as usize) as isize;
            let src_i = (i - by).rem_euclid(n) as usize;
            let src = idx - (i as usize) * s + src_i * s;
            *v = self.values[src];
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Face values of a vector grid function, one component per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredField {
    spec: GridSpec,
    components: Vec<Vec<Complex64>>,
}

impl StaggeredField {
    pub fn from_components(spec: GridSpec, components: Vec<Vec<Complex64>>) -> Result<Self> {
        if components.len() != spec.dim() || components.iter().any(|c| c.len() != spec.len()) {
            return Err(Error::ShapeMismatch(format!(
                "staggered field needs {} components of length {}",
                spec.dim(),
                spec.len()
            )));
        }
        Ok(StaggeredField { spec, components })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn component(&self, axis: usize) -> &[Complex64] {
        &self.components[axis]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.components
    }
}

/// Plain `h^d`-weighted sum with the first argument conjugated.
fn weighted_dot(spec: &GridSpec, f: &[Complex64], g: &[Complex64]) -> Complex64 {
    let s: Complex64 = f.iter().zip(g).map(|(a, b)| a.conj() * b).sum();
    s * spec.cell_volume()
}

/// `<f, g> = h^d sum conj(f) g`.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<Complex64> {
    f.same_shape(g)?;
    Ok(weighted_dot(&f.spec, &f.values, &g.values))
}

/// `<f, g>` for face fields: sum over axes of the `h^d`-weighted face sums.
pub fn staggered_inner_product(f: &StaggeredField, g: &StaggeredField) -> Result<Complex64> {
    f.spec.check_same(&g.spec)?;
    Ok(f.components.iter().zip(&g.components).map(|(a, b)| weighted_dot(&f.spec, a, b)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub l4: f64,
    pub linf: f64,
}

pub fn norms(f: &GridFunction) -> Norms {
    let w = f.spec.cell_volume();
    let (mut s2, mut s4, mut linf) = (0.0, 0.0, 0.0_f64);
    for z in &f.values {
        let a = z.norm_sqr();
        s2 += a;
        s4 += a * a;
        linf = linf.max(a.sqrt());
    }
    Norms { l2: (w * s2).sqrt(), l4: (w * s4).powf(0.25), linf }
}

pub fn l2_norm(f: &GridFunction) -> f64 {
    (f.spec.cell_volume() * f.values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

/// Forward differences `D_a f` on the faces `i + 1/2`.
pub fn gradient(f: &GridFunction) -> StaggeredField {
    let spec = f.spec;
    let components = (0..spec.dim())
        .map(|a| {
            let inv_h = 1.0 / spec.h[a];
            (0..spec.len()).map(|idx| (f.values[spec.forward(idx, a)] - f.values[idx]) * inv_h).collect()
        })
        .collect();
    StaggeredField { spec, components }
}

/// `sum_a d_a f^a` back on the grid points.
pub fn divergence(field: &StaggeredField) -> GridFunction {
    let spec = field.spec;
    let mut out = GridFunction::zeros(spec);
    for (a, comp) in field.components.iter().enumerate() {
        let inv_h = 1.0 / spec.h[a];
        for (idx, v) in out.values.iter_mut().enumerate() {
            *v += (comp[idx] - comp[spec.backward(idx, a)]) * inv_h;
        }
    }
    out
}

/// Second difference `D_a^2 f = (f_{i+1} - 2 f_i + f_{i-1}) / h^2` along one axis.
pub fn second_difference(f: &GridFunction, axis: usize) -> GridFunction {
    let spec = f.spec;
    let inv_h2 = 1.0 / (spec.h[axis] * spec.h[axis]);
    let values = (0..spec.len())
        .map(|idx| {
            (f.values[spec.forward(idx, axis)] - 2.0 * f.values[idx] + f.values[spec.backward(idx, axis)])
                * inv_h2
        })
        .collect();
    GridFunction { spec, values }
}

/// Periodic `(2d+1)`-point Laplacian.
pub fn laplacian(f: &GridFunction) -> GridFunction {
    let spec = f.spec;
    let inv_h2: Vec<f64> = spec.h().iter().map(|h| 1.0 / (h * h)).collect();
    let values = (0..spec.len())
        .map(|idx| {
            let c = f.values[idx];
            (0..spec.dim()).fold(Complex64::new(0.0, 0.0), |acc, a| {
                acc + (f.values[spec.forward(idx, a)] - 2.0 * c + f.values[spec.backward(idx, a)]) * inv_h2[a]
            })
        })
        .collect();
    GridFunction { spec, values }
}

/// `||grad_h f||_2^2` with the plain face-sum convention.
pub fn grad_norm_sq(f: &GridFunction) -> f64 {
    let g = gradient(f);
    staggered_inner_product(&g, &g).map(|z| z.re).unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevNorms {
    pub h1: f64,
    pub h2: f64,
}

pub fn h1h2_norms(f: &GridFunction) -> SobolevNorms {
    let l2 = l2_norm(f);
    let h1_sq = l2 * l2 + grad_norm_sq(f);
    let mut h2_sq = h1_sq;
    for a in 0..f.spec.dim() {
        h2_sq += l2_norm(&second_difference(f, a)).powi(2);
    }
    h2_sq += l2_norm(&laplacian(f)).powi(2);
    SobolevNorms { h1: h1_sq.sqrt(), h2: h2_sq.sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random(spec: GridSpec, rng: &mut ChaCha8Rng) -> GridFunction {
        GridFunction::from_fn(spec, |_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(&[3], &[0.0], &[1.0]).is_err());
        assert!(GridSpec::new(&[8], &[1.0], &[1.0]).is_err());
        assert!(GridSpec::new(&[8, 8], &[0.0], &[1.0]).is_err());
        assert!(GridSpec::new(&[], &[], &[]).is_err());
        assert!(GridSpec::new(&[4, 4, 4, 4], &[0.0; 4], &[1.0; 4]).is_err());
        assert!(matches!(GridSpec::new(&[usize::MAX / 2, 4], &[0.0, 0.0], &[1.0, 1.0]), Err(Error::Size(_))));
        let s = GridSpec::new(&[8, 16], &[-1.0, 0.0], &[1.0, 4.0]).unwrap();
        assert_eq!(s.len(), 128);
        assert_eq!(s.h(), &[0.25, 0.25]);
        assert_eq!(s.stride(0), 16);
        assert_eq!(s.stride(1), 1);
        assert_eq!(s.coords(17)[..2], [-0.75, 0.25]);
        assert_eq!(s.ravel(&s.unravel(77)), 77);
    }

    #[test]
    fn periodic_neighbours() {
        let s = GridSpec::new(&[4, 5], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(s.forward(4, 1), 0);
        assert_eq!(s.backward(0, 1), 4);
        assert_eq!(s.forward(15, 0), 0);
        assert_eq!(s.backward(2, 0), 17);
    }

    #[test]
    fn inner_product_conventions() {
        let s = GridSpec::cube(1, 8, 0.0, 1.0).unwrap();
        let one = GridFunction::constant(s, c(1.0, 0.0));
        let i = GridFunction::constant(s, c(0.0, 1.0));
        assert!((inner_product(&one, &one).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert!((inner_product(&one, &i).unwrap() - c(0.0, 1.0)).norm() < 1e-15);

        let s16 = GridSpec::cube(1, 16, 0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random(s16, &mut rng);
        let g = random(s16, &mut rng);
        let fg = inner_product(&f, &g).unwrap();
        let gf = inner_product(&g, &f).unwrap();
        assert!((fg - gf.conj()).norm() <= 1e-14);
        assert!(inner_product(&f, &one).is_err());
    }

    #[test]
    fn norm_examples() {
        let s = GridSpec::cube(1, 8, 0.0, 1.0).unwrap();
        let two = GridFunction::constant(s, c(2.0, 0.0));
        let n = norms(&two);
        assert!((n.l2 - 2.0).abs() < 1e-15);
        assert!((n.l4 - 2.0).abs() < 1e-15);
        assert_eq!(n.linf, 2.0);

        let s10 = GridSpec::cube(1, 10, 0.0, 1.0).unwrap();
        let mut delta = GridFunction::zeros(s10);
        delta.values_mut()[3] = c(1.0, 0.0);
        assert!((norms(&delta).l2 - 0.1f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn holder_l2_l4() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = GridSpec::cube(2, 8, -1.0, 2.0).unwrap();
        for _ in 0..100 {
            let f = random(s, &mut rng);
            let n = norms(&f);
            assert!(n.l2 <= s.volume().powf(0.25) * n.l4 * (1.0 + 1e-14));
        }
    }

    #[test]
    fn gradient_of_plane_wave() {
        let s = GridSpec::cube(1, 64, 0.0, 1.0).unwrap();
        let f = GridFunction::from_fn(s, |x| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * x[0]));
        let g = gradient(&f);
        assert!(g.components().iter().flatten().all(|z| z.is_finite()));
        let h = s.h()[0];
        let expect = 2.0 / h * (std::f64::consts::PI * h).sin().abs() * l2_norm(&f);
        let got = staggered_inner_product(&g, &g).unwrap().re.sqrt();
        assert!((got - expect).abs() <= 1e-12 * expect);

        let k = GridFunction::constant(s, c(3.0, -1.0));
        assert!(gradient(&k).component(0).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn laplacian_stencil_by_hand() {
        let s = GridSpec::cube(1, 4, 0.0, 1.0).unwrap();
        let mut f = GridFunction::zeros(s);
        f.values_mut()[0] = c(1.0, 0.0);
        let lap = laplacian(&f);
        let expect = [-32.0, 16.0, 0.0, 16.0];
        for (z, e) in lap.values().iter().zip(expect) {
            assert!((z - c(e, 0.0)).norm() < 1e-12);
        }
        let k = GridFunction::constant(s, c(5.0, 2.0));
        assert!(laplacian(&k).max_abs() == 0.0);
    }

    #[test]
    fn laplacian_is_div_grad() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for spec in [
            GridSpec::cube(1, 16, 0.0, 1.0).unwrap(),
            GridSpec::new(&[8, 12], &[0.0, -1.0], &[1.0, 2.0]).unwrap(),
            GridSpec::cube(3, 6, 0.0, 1.0).unwrap(),
        ] {
            let f = random(spec, &mut rng);
            let a = divergence(&gradient(&f));
            let b = laplacian(&f);
            let scale = b.max_abs();
            assert!(a.sub(&b).unwrap().max_abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn translation_commutes_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = GridSpec::new(&[6, 5, 4], &[0.0; 3], &[1.0, 2.0, 3.0]).unwrap();
        let f = random(s, &mut rng);
        for axis in 0..3 {
            let shifted = f.shifted(axis, 1);
            assert_eq!(laplacian(&shifted), laplacian(&f).shifted(axis, 1));
            let g1 = gradient(&shifted);
            let g2 = gradient(&f);
            for a in 0..3 {
                let lhs = GridFunction::from_values(s, g1.component(a).to_vec()).unwrap();
                let rhs = GridFunction::from_values(s, g2.component(a).to_vec()).unwrap();
                assert_eq!(lhs, rhs.shifted(axis, 1));
            }
        }
        assert_eq!(f.shifted(1, 5), f);
    }

    #[test]
    fn self_inner_product_real_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = GridSpec::cube(2, 8, 0.0, 1.0).unwrap();
        let f = random(s, &mut rng);
        let ff = inner_product(&f, &f).unwrap();
        assert!(ff.im == 0.0 || ff.im.abs() < 1e-16 * ff.re);
        assert!(ff.re > 0.0);
        let z = GridFunction::zeros(s);
        assert_eq!(inner_product(&z, &z).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn sobolev_norms() {
        let s = GridSpec::cube(1, 16, 0.0, 1.0).unwrap();
        let one = GridFunction::constant(s, c(1.0, 0.0));
        let n = h1h2_norms(&one);
        assert!((n.h1 - 1.0).abs() < 1e-15 && (n.h2 - 1.0).abs() < 1e-15);
        let n0 = h1h2_norms(&GridFunction::zeros(s));
        assert_eq!((n0.h1, n0.h2), (0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let f = random(s, &mut rng);
            let n = h1h2_norms(&f);
            assert!(n.h2 >= n.h1 && n.h1 >= l2_norm(&f));
        }
    }
}
