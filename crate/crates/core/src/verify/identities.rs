//! Discrete identities and inequalities evaluated on concrete inputs.
//!
//! Each function returns a defect (relative error of an identity) or a
//! margin (how far an inequality is from being violated, negative when it
//! fails) so callers can aggregate worst cases.

use num_complex::Complex64;
use rand::Rng;

use crate::grid::{
    divergence, gradient, inner_product, l2_norm, laplacian, staggered_inner_product, GridFunction, GridSpec,
    StaggeredField,
};
use crate::spectral::{EtdMultipliers, Multiplier};

/// Margins above `-MARGIN_ROUNDOFF` are ties within rounding, not violations:
/// for large `tau` both sides of the smoothing bounds agree to the last bits.
pub const MARGIN_ROUNDOFF: f64 = 64.0 * f64::EPSILON;

pub fn violated(margin: f64) -> bool {
    margin < -MARGIN_ROUNDOFF
}

/// Uniform random complex values in `[-1, 1]^2` at every point.
pub fn random_grid_function(spec: GridSpec, rng: &mut impl Rng) -> GridFunction {
    GridFunction::from_fn(spec, |_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_staggered_field(spec: GridSpec, rng: &mut impl Rng) -> StaggeredField {
    let components = (0..spec.dim()).map(|_| random_grid_function(spec, rng).into_values()).collect();
    StaggeredField::from_components(spec, components).expect("component count equals dim")
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Relative defects of the three summation-by-parts identities:
/// `<psi, div F> = -<grad psi, F>`, `<psi, Lap phi> = -<grad psi, grad phi>`,
/// `<psi, Lap^2 phi> = <Lap psi, Lap phi>`.
pub fn summation_by_parts_defects(
    psi: &GridFunction,
    phi: &GridFunction,
    field: &StaggeredField,
) -> [f64; 3] {
    let grad_psi = gradient(psi);
    let lap_phi = laplacian(phi);
    let d1 = rel(
        inner_product(psi, &divergence(field)).expect("same grid"),
        -staggered_inner_product(&grad_psi, field).expect("same grid"),
    );
    let d2 = rel(
        inner_product(psi, &lap_phi).expect("same grid"),
        -staggered_inner_product(&grad_psi, &gradient(phi)).expect("same grid"),
    );
    let d3 = rel(
        inner_product(psi, &laplacian(&lap_phi)).expect("same grid"),
        inner_product(&laplacian(psi), &lap_phi).expect("same grid"),
    );
    [d1, d2, d3]
}

/// Defects of `<f, G g> = <G f, g> = <G^{1/2} f, G^{1/2} g>` (worst pair) and of
/// `G^{1/2} G^{1/2} f = G f` (max-norm, relative).
pub fn etd_operator_defects(mult: &EtdMultipliers, f: &GridFunction, g: &GridFunction) -> [f64; 2] {
    let gf = mult.apply(Multiplier::G, f).expect("same grid");
    let gg = mult.apply(Multiplier::G, g).expect("same grid");
    let sf = mult.apply(Multiplier::Gsqrt, f).expect("same grid");
    let sg = mult.apply(Multiplier::Gsqrt, g).expect("same grid");
    let a = inner_product(f, &gg).expect("same grid");
    let b = inner_product(&gf, g).expect("same grid");
    let c = inner_product(&sf, &sg).expect("same grid");
    let adjoint = rel(a, b).max(rel(a, c)).max(rel(b, c));

    let ssf = mult.apply(Multiplier::Gsqrt, &sf).expect("same grid");
    let square = ssf.sub(&gf).expect("same grid").max_abs() / gf.max_abs().max(f64::MIN_POSITIVE);
    [adjoint, square]
}

/// Relative margins of `||f||^2 >= tau/2 ||G^{1/2} grad f||^2` and
/// `||Lap f||^2 >= tau/2 ||G^{1/2} grad Lap f||^2`; negative means violated.
pub fn smoothing_margins(mult: &EtdMultipliers, f: &GridFunction) -> [f64; 2] {
    let half_tau = 0.5 * mult.tau();
    let lap = laplacian(f);
    let pairs = [
        (l2_norm(f).powi(2), half_tau * mult.gsqrt_grad_sq(f).expect("same grid")),
        (l2_norm(&lap).powi(2), half_tau * mult.gsqrt_grad_sq(&lap).expect("same grid")),
    ];
    pairs.map(|(lhs, rhs)| if lhs == 0.0 { -rhs } else { (lhs - rhs) / lhs })
}

/// Relative margin of `||G^{1/2} grad f||^2 <= ||grad f||^2`.
pub fn filter_contraction_margin(mult: &EtdMultipliers, f: &GridFunction) -> f64 {
    let g = gradient(f);
    let full = staggered_inner_product(&g, &g).expect("same grid").re;
    let filtered = mult.gsqrt_grad_sq(f).expect("same grid");
    if full == 0.0 {
        -filtered
    } else {
        (full - filtered) / full
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identities_hold_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let spec = GridSpec::new(&[8, 10], &[0.0, -1.0], &[1.0, 1.0]).unwrap();
        let mult = EtdMultipliers::build(spec, 0.01).unwrap();
        let psi = random_grid_function(spec, &mut rng);
        let phi = random_grid_function(spec, &mut rng);
        let field = random_staggered_field(spec, &mut rng);
        assert!(summation_by_parts_defects(&psi, &phi, &field).iter().all(|&d| d <= 1e-12));
        assert!(etd_operator_defects(&mult, &psi, &phi).iter().all(|&d| d <= 1e-12));
        assert!(smoothing_margins(&mult, &psi).iter().all(|&m| m >= 0.0));
        assert!(filter_contraction_margin(&mult, &psi) >= 0.0);
    }

    #[test]
    fn defect_detects_a_broken_identity() {
        assert!(rel(Complex64::new(1.0, 0.0), Complex64::new(1.1, 0.0)) > 0.05);
        assert_eq!(rel(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), 0.0);
        assert!(!violated(-1e-16) && violated(-1e-12) && !violated(0.0));
    }
}
