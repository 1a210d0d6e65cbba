//! DFT diagonalization of the periodic finite-difference Laplacian and the
//! exponential-time-differencing multipliers built on it.
//!
//! The second-order Laplacian is diagonal in the discrete Fourier basis with
//! eigenvalues `-lambda_k`, `lambda_k = sum_a (4/h_a^2) sin^2(pi k_a / n_a)`.
//! The ETD operator `G = phi1(tau Lambda / 2)` and its square root are Fourier
//! multipliers on the same basis, so every operator here costs one forward
//! and one inverse transform.
//!
//! Transform convention: forward is unnormalized, inverse carries `1/N`.
//! With that choice `||f||_2^2 = (h^d / N) sum_k |F_k|^2`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

const PHI1_TAYLOR_THRESHOLD: f64 = 1e-4;

/// `phi1(x) = (1 - e^{-x}) / x`, with `phi1(0) = 1`.
pub fn phi1(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("phi1 requires x >= 0 (got {x})")));
    }
    Ok(phi1_unchecked(x))
}

#[inline]
fn phi1_unchecked(x: f64) -> f64 {
    if x < PHI1_TAYLOR_THRESHOLD {
        1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0
    } else if x.is_infinite() {
        0.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// Multi-dimensional complex DFT over the row-major grid layout.
#[derive(Clone)]
pub struct Dft {
    spec: GridSpec,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for Dft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft").field("n", &self.spec.n()).finish()
    }
}

impl Dft {
    pub fn new(spec: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let forward = spec.n().iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = spec.n().iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Dft { spec, forward, inverse }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1/N` factor.
    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let inv_n = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= inv_n);
    }

    pub fn forward(&self, f: &GridFunction) -> Vec<Complex64> {
        let mut data = f.values().to_vec();
        self.forward_in_place(&mut data);
        data
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.spec.len(), "DFT buffer length");
        let dim = self.spec.dim();
        for (axis, plan) in plans.iter().enumerate() {
            let n = self.spec.n()[axis];
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            if axis + 1 == dim {
                // contiguous lines
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let stride = self.spec.stride(axis);
            let block = n * stride;
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (j, z) in line.iter_mut().enumerate() {
                        *z = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, z) in line.iter().enumerate() {
                        data[base + j * stride] = *z;
                    }
                }
            }
        }
    }
}

/// Signed mode index of DFT bin `j` for `n` points: `{-floor(n/2), ..., ceil(n/2)-1}`.
pub fn mode_index(j: usize, n: usize) -> isize {
    if j < n.div_ceil(2) {
        j as isize
    } else {
        j as isize - n as isize
    }
}

/// Eigenvalues `lambda_k >= 0` of `-Delta_h`, in DFT bin order.
pub fn laplacian_symbol(spec: &GridSpec) -> Vec<f64> {
    let per_axis: Vec<Vec<f64>> = (0..spec.dim())
        .map(|a| {
            let n = spec.n()[a];
            let h = spec.h()[a];
            (0..n)
                .map(|j| {
                    let s = (std::f64::consts::PI * mode_index(j, n) as f64 / n as f64).sin();
                    4.0 / (h * h) * s * s
                })
                .collect()
        })
        .collect();
    (0..spec.len())
        .map(|idx| {
            let m = spec.unravel(idx);
            (0..spec.dim()).map(|a| per_axis[a][m[a]]).sum()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplier {
    /// `G_h`
    G,
    /// `G_h^{1/2}`
    Gsqrt,
    /// `G_h Delta_h`
    GDelta,
    /// `Delta_h` itself, diagonalized.
    Laplacian,
}

/// Fourier multipliers of `Delta_h`, `G_h`, `G_h^{1/2}` and `G_h Delta_h`
/// for one grid and time step. Immutable once built.
#[derive(Debug, Clone)]
pub struct EtdMultipliers {
    spec: GridSpec,
    tau: f64,
    lam: Vec<f64>,
    g: Vec<f64>,
    gsqrt: Vec<f64>,
    gdelta: Vec<f64>,
    dft: Dft,
}

impl EtdMultipliers {
    pub fn build(spec: GridSpec, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Config(format!("tau must be finite and > 0 (got {tau})")));
        }
        let lam = laplacian_symbol(&spec);
        let g: Vec<f64> = lam.iter().map(|&l| phi1_unchecked(0.5 * tau * l)).collect();
        let gsqrt = g.iter().map(|v| v.sqrt()).collect();
        let gdelta = lam.iter().zip(&g).map(|(l, g)| -l * g).collect();
        Ok(EtdMultipliers { spec, tau, lam, g, gsqrt, gdelta, dft: Dft::new(spec) })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn lam(&self) -> &[f64] {
        &self.lam
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn gsqrt(&self) -> &[f64] {
        &self.gsqrt
    }

    pub fn gdelta(&self) -> &[f64] {
        &self.gdelta
    }

    pub fn dft(&self) -> &Dft {
        &self.dft
    }

    fn symbol(&self, which: Multiplier) -> &[f64] {
        match which {
            Multiplier::G => &self.g,
            Multiplier::Gsqrt => &self.gsqrt,
            Multiplier::GDelta => &self.gdelta,
            Multiplier::Laplacian => &self.lam,
        }
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if f.spec() != &self.spec {
            return Err(Error::ShapeMismatch(format!(
                "function on {:?} points, multipliers built for {:?}",
                f.spec().n(),
                self.spec.n()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, which: Multiplier, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        let mut data = self.dft.forward(f);
        self.apply_to_spectrum(which, &mut data);
        Ok(GridFunction::from_values(self.spec, data).expect("length preserved"))
    }

    /// Multiplies a forward spectrum in place and transforms back to grid values.
    pub(crate) fn apply_to_spectrum(&self, which: Multiplier, spectrum: &mut [Complex64]) {
        let sign = if which == Multiplier::Laplacian { -1.0 } else { 1.0 };
        for (z, m) in spectrum.iter_mut().zip(self.symbol(which)) {
            *z *= sign * m;
        }
        self.dft.inverse_in_place(spectrum);
    }

    /// `||G_h^{1/2} grad_h f||_2^2` via Parseval.
    pub fn gsqrt_grad_sq(&self, f: &GridFunction) -> Result<f64> {
        self.check(f)?;
        Ok(self.gsqrt_grad_sq_from_spectrum(&self.dft.forward(f)))
    }

    pub(crate) fn gsqrt_grad_sq_from_spectrum(&self, spectrum: &[Complex64]) -> f64 {
        let s: f64 = spectrum.iter().zip(&self.gdelta).map(|(z, gd)| -gd * z.norm_sqr()).sum();
        s * self.spec.cell_volume() / self.spec.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner_product, l2_norm, laplacian};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(spec: GridSpec, rng: &mut ChaCha8Rng) -> GridFunction {
        GridFunction::from_fn(spec, |_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn phi1_values() {
        assert_eq!(phi1(0.0).unwrap(), 1.0);
        // (1 - e^{-1.6}) / 1.6 evaluated with 50-digit arithmetic
        assert!((phi1(1.6).unwrap() - 0.498_814_676_253_340_4).abs() < 1e-15);
        assert!((phi1(1e-12).unwrap() - (1.0 - 5e-13)).abs() < 1e-15);
        assert!(phi1(-1e-3).is_err());
        assert!(phi1(f64::NAN).is_err());
        assert_eq!(phi1(f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn phi1_continuous_at_threshold() {
        let below = phi1(PHI1_TAYLOR_THRESHOLD * (1.0 - 1e-12)).unwrap();
        let above = phi1(PHI1_TAYLOR_THRESHOLD).unwrap();
        assert!((below - above).abs() < 1e-15);
    }

    #[test]
    fn phi1_decreasing() {
        let mut prev = phi1(0.0).unwrap();
        for i in 1..2000 {
            let v = phi1(i as f64 * 0.013).unwrap();
            assert!(v < prev && v > 0.0);
            prev = v;
        }
    }

    #[test]
    fn symbol_small_grid_by_hand() {
        let spec = GridSpec::cube(1, 4, 0.0, 1.0).unwrap();
        let m = EtdMultipliers::build(spec, 0.3).unwrap();
        let expect = [0.0, 32.0, 64.0, 32.0];
        for (l, e) in m.lam().iter().zip(expect) {
            assert!((l - e).abs() < 1e-12);
        }
        assert_eq!(m.g()[0], 1.0);
        assert_eq!(m.gsqrt()[0], 1.0);
        assert_eq!(m.gdelta()[0], 0.0);
        assert_eq!(mode_index(2, 4), -2);
        assert_eq!(mode_index(2, 5), 2);
        assert_eq!(mode_index(3, 5), -2);
    }

    #[test]
    fn build_rejects_bad_tau() {
        let spec = GridSpec::cube(1, 8, 0.0, 1.0).unwrap();
        assert!(EtdMultipliers::build(spec, 0.0).is_err());
        assert!(EtdMultipliers::build(spec, -1.0).is_err());
        assert!(EtdMultipliers::build(spec, f64::NAN).is_err());
    }

    #[test]
    fn multiplier_invariants() {
        let spec = GridSpec::new(&[8, 6], &[-1.0, 0.0], &[1.0, 3.0]).unwrap();
        for tau in [1e-10, 1e-3, 0.25, 10.0] {
            let m = EtdMultipliers::build(spec, tau).unwrap();
            let zero_count = m.lam().iter().filter(|&&l| l == 0.0).count();
            assert_eq!(zero_count, 1);
            assert_eq!(m.lam()[0], 0.0);
            for k in 0..spec.len() {
                assert!(m.lam()[k] >= 0.0);
                assert!(m.g()[k] > 0.0 && m.g()[k] <= 1.0);
                assert!((m.gsqrt()[k] * m.gsqrt()[k] - m.g()[k]).abs() <= 1e-15);
                assert_eq!(m.gdelta()[k], -m.lam()[k] * m.g()[k]);
            }
            let mut pairs: Vec<(f64, f64)> = m.lam().iter().copied().zip(m.g().iter().copied()).collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            for w in pairs.windows(2) {
                if w[1].0 > w[0].0 {
                    assert!(w[1].1 < w[0].1 || tau < 1e-8);
                }
            }
        }
    }

    #[test]
    fn tiny_tau_is_near_identity() {
        let spec = GridSpec::cube(1, 8, 0.0, 1.0).unwrap();
        let m = EtdMultipliers::build(spec, 1e-10).unwrap();
        assert!(m.g().iter().all(|&g| g >= 1.0 - 1e-7));
    }

    #[test]
    fn dft_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for spec in [
            GridSpec::cube(1, 64, 0.0, 1.0).unwrap(),
            GridSpec::new(&[12, 10], &[0.0; 2], &[1.0; 2]).unwrap(),
            GridSpec::new(&[4, 6, 8], &[0.0; 3], &[1.0; 3]).unwrap(),
        ] {
            let dft = Dft::new(spec);
            let f = random(spec, &mut rng);
            let mut data = f.values().to_vec();
            dft.forward_in_place(&mut data);
            dft.inverse_in_place(&mut data);
            let back = GridFunction::from_values(spec, data).unwrap();
            assert!(back.sub(&f).unwrap().max_abs() <= 1e-13 * f.max_abs());
        }
    }

    #[test]
    fn parseval_bookkeeping() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec = GridSpec::new(&[8, 16], &[-2.0, 0.0], &[2.0, 1.0]).unwrap();
        let f = random(spec, &mut rng);
        let spectrum = Dft::new(spec).forward(&f);
        let s: f64 = spectrum.iter().map(|z| z.norm_sqr()).sum();
        let via_spectrum = s * spec.cell_volume() / spec.len() as f64;
        let direct = l2_norm(&f).powi(2);
        assert!((via_spectrum - direct).abs() <= 1e-13 * direct);
    }

    #[test]
    fn constant_passes_through_g() {
        let spec = GridSpec::cube(2, 8, 0.0, 1.0).unwrap();
        let m = EtdMultipliers::build(spec, 0.5).unwrap();
        let c = GridFunction::constant(spec, Complex64::new(0.7, -0.2));
        let out = m.apply(Multiplier::G, &c).unwrap();
        assert!(out.sub(&c).unwrap().max_abs() < 1e-15);
        assert_eq!(m.gsqrt_grad_sq(&c).unwrap(), 0.0);
    }

    #[test]
    fn spectral_laplacian_matches_stencil() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let spec = GridSpec::new(&[9, 8, 6], &[0.0; 3], &[1.0, 2.0, 0.5]).unwrap();
        let m = EtdMultipliers::build(spec, 0.1).unwrap();
        let f = random(spec, &mut rng);
        let a = m.apply(Multiplier::Laplacian, &f).unwrap();
        let b = laplacian(&f);
        assert!(a.sub(&b).unwrap().max_abs() <= 1e-11 * b.max_abs());
    }

    #[test]
    fn real_input_stays_real() {
        let spec = GridSpec::cube(2, 10, 0.0, 1.0).unwrap();
        let f = GridFunction::from_real_fn(spec, |x| (3.0 * x[0]).sin() + x[1] * x[1]);
        let m = EtdMultipliers::build(spec, 0.2).unwrap();
        for which in [Multiplier::G, Multiplier::Gsqrt, Multiplier::GDelta] {
            let out = m.apply(which, &f).unwrap();
            let worst = out.values().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            assert!(worst <= 1e-13 * f.max_abs().max(out.max_abs()));
        }
    }

    #[test]
    fn gsqrt_grad_sq_matches_real_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let spec = GridSpec::cube(2, 16, -1.0, 1.0).unwrap();
        let m = EtdMultipliers::build(spec, 0.01).unwrap();
        let f = random(spec, &mut rng);
        let via_parseval = m.gsqrt_grad_sq(&f).unwrap();
        let gd = m.apply(Multiplier::GDelta, &f).unwrap();
        let real_space = -inner_product(&gd, &f).unwrap().re;
        assert!((via_parseval - real_space).abs() <= 1e-12 * real_space);
    }

    #[test]
    fn mismatched_spec_rejected() {
        let m = EtdMultipliers::build(GridSpec::cube(1, 8, 0.0, 1.0).unwrap(), 0.1).unwrap();
        let f = GridFunction::zeros(GridSpec::cube(1, 16, 0.0, 1.0).unwrap());
        assert!(m.apply(Multiplier::G, &f).is_err());
        assert!(m.gsqrt_grad_sq(&f).is_err());
    }
}
