//! Independent re-derivations checked against the library.

use approx::assert_relative_eq;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use k3stab::mass::{invert_cell_detailed, wplus_abc, DEFAULT_WINDOW};
use k3stab::verify::{sample_point, sample_wminus, sample_wplus};
use k3stab::{canonicalize, mass_abc, mass_vector, ChartPoint, InvertCell, MassFunction, Region, StabilityPoint};

/// Plain masses at `q = 1`, straight from the piecewise-affine formulas.
fn affine_mass(z: Complex64, region: Region, n: i64) -> f64 {
    let (a, b, c) = (1.0, (Complex64::new(1.0, 0.0) - z).norm(), z.norm());
    match region {
        Region::WZero => a + n.abs() as f64 * c,
        _ if n <= 0 => a - n as f64 * c,
        _ => b + (n - 1) as f64 * c,
    }
}

#[test]
fn plain_masses_match_affine_formulas() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let p = sample_point(&mut r);
        let f = mass_vector(&p, 1.0, DEFAULT_WINDOW).unwrap();
        for k in -40..=40 {
            let expected = affine_mass(p.chart.z(), p.chart.region(), k - p.twist);
            assert_relative_eq!(f.value_at(k), expected, max_relative = 1e-13);
        }
    }
}

/// q-masses of `(k_x, T k_x, O_X)` from central charges, with phases fixed by
/// continuity from the heart `Coh X` rather than by a lookup table.
fn direct_abc(z: Complex64, q: f64) -> (f64, f64, f64) {
    let one = Complex64::new(1.0, 0.0);
    // Z(O_X) = −z lies in the upper half-plane for Im z < 0, phase in (0, 1)
    let phi_o = (-z).arg() / std::f64::consts::PI;
    // T k_x = I_x[1] and Z(I_x) = 1 − z, again in the upper half-plane
    let phi_t = 1.0 + (one - z).arg() / std::f64::consts::PI;
    (q, (one - z).norm() * q.powf(phi_t), z.norm() * q.powf(phi_o))
}

#[test]
fn q_masses_match_central_charges() {
    let mut r = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let p = sample_wminus(&mut r);
        for q in [0.3, 1.0, 4.0] {
            let (a, b, c) = mass_abc(&p, q).unwrap();
            let (x, y, w) = direct_abc(p.z(), q);
            assert_relative_eq!(a, x, max_relative = 1e-14);
            assert_relative_eq!(b, y, max_relative = 1e-14);
            assert_relative_eq!(c, w, max_relative = 1e-14);
        }
    }
}

#[test]
fn numeric_inverse_reproduces_direct_masses() {
    let mut r = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..60 {
        let p = sample_wminus(&mut r);
        for q in [0.5, 2.0, 5.0] {
            let (a, b, c) = direct_abc(p.z(), q);
            let inv = invert_cell_detailed(a, b, c, InvertCell::Delta0, q).unwrap();
            let (x, y, w) = direct_abc(inv.chart.z(), q);
            let s = x / a;
            assert_relative_eq!(y, s * b, max_relative = 1e-9);
            assert_relative_eq!(w, s * c, max_relative = 1e-9);
        }
    }
}

/// The cosine rule applied to `(|z − 1|, 1, |z|)` gives the parameter of `T σ_z`.
#[test]
fn canonical_form_agrees_with_cosine_rule() {
    let mut r = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..300 {
        let z = sample_wplus(&mut r).z();
        let (a, b, c) = ((z - 1.0).norm(), 1.0, z.norm());
        let theta = ((a * a + b * b - c * c) / (2.0 * a * b)).clamp(-1.0, 1.0).acos();
        let w = -(Complex64::from_polar(b / a, theta) - 1.0);
        let canon = canonicalize(4, z).unwrap();
        assert_eq!(canon.twist, 3);
        assert!((canon.chart.z() - w).norm() <= 1e-10 * (1.0 + w.norm()));
    }
}

#[test]
fn wplus_masses_are_projectively_those_of_the_canonical_form() {
    let mut r = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..200 {
        let chart = sample_wplus(&mut r);
        for q in [0.5, 1.0, 2.7] {
            let raw = mass_vector(&StabilityPoint::new(0, chart), q, DEFAULT_WINDOW).unwrap();
            let canon = mass_vector(&canonicalize(0, chart.z()).unwrap(), q, DEFAULT_WINDOW).unwrap();
            assert!(raw.projective_distance(&canon) <= 1e-9);
            let (a, b, _) = wplus_abc(&chart, q).unwrap();
            assert_relative_eq!(raw.value_at(-1), a, max_relative = 1e-15);
            assert_relative_eq!(raw.value_at(0), b, max_relative = 1e-15);
        }
    }
}

#[test]
fn mass_function_json_schema() {
    let p = StabilityPoint::new(2, ChartPoint::new(Complex64::new(-0.5, -1.5)).unwrap());
    let f = mass_vector(&p, 2.7, DEFAULT_WINDOW).unwrap();
    let json = serde_json::to_value(&f).unwrap();
    let keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 4);
    for key in ["q", "window", "values", "tail"] {
        assert!(keys.contains(&key), "{key}");
    }
    assert_eq!(json["window"], serde_json::json!([-16, 16]));
    assert_eq!(json["tail"]["left"]["kind"], "geometric");
    let back: MassFunction = serde_json::from_value(json).unwrap();
    assert_eq!(back, f);
}
