use proptest::prelude::*;
use rug::Float;

use cpm_core::drinfeld::{lambda_counts, reciprocal_sector, solve_roots};
use cpm_core::formfactor::{build_input, dhat_det, dhat_sum, order_limit, order_param_sq, ordered_pair, DetOptions, Method};
use cpm_core::lattice::LatticeOracle;
use cpm_core::CpmError;

fn kp(s: &str) -> Float {
    cpm_core::util::parse_float(s, 256).unwrap()
}

#[test]
fn ising_order_parameter_is_exact_for_large_l() {
    let rep = order_param_sq(2, 1, &kp("0.6"), 60, 128, Method::Det).unwrap();
    let limit = order_limit(2, 1, &kp("0.6"));
    assert!((limit.to_f64() - 0.64f64.powf(0.25)).abs() < 1e-15);
    assert!(rep.abs_error().to_f64() < 1e-20);
}

#[test]
fn finite_size_value_matches_lattice() {
    let oracle = LatticeOracle::new(3, 4, 0.35).unwrap();
    let rep = order_param_sq(3, 1, &kp("0.35"), 4, 128, Method::All).unwrap();
    assert!((oracle.mean_overlap(1).unwrap() - rep.finite_l.to_f64()).abs() < 1e-12);
}

#[test]
fn guard_and_domain_errors() {
    assert!(matches!(
        order_param_sq(3, 1, &kp("0.5"), 90, 64, Method::Sum),
        Err(CpmError::SizeGuard { .. })
    ));
    assert!(matches!(
        order_param_sq(3, 1, &kp("1.0"), 6, 64, Method::Det),
        Err(CpmError::DomainError(_)) | Err(CpmError::InvalidInput(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sum_equals_det(l in 2usize..8, a in 0u32..3, b in 0u32..3, kpv in 0.05f64..0.95) {
        prop_assume!(a != b);
        let (ket, bra) = ordered_pair(3, l, a, b);
        let input = build_input(3, l, ket, bra, &kp(&format!("{kpv:.6}")), 96).unwrap();
        let s = dhat_sum(&input).unwrap();
        let d = dhat_det(&input, &DetOptions::default()).unwrap();
        let diff = Float::with_val(192, &s - &d.value).abs().to_f64();
        prop_assert!(diff <= 1e-20 * s.to_f64().abs().max(1.0));
    }

    #[test]
    fn roots_are_negative_and_paired(n in 2u32..5, l in 2usize..10) {
        for q in 0..n {
            let roots = solve_roots(&lambda_counts(n, l, q).unwrap(), 96).unwrap();
            prop_assert!(roots.iter().all(|w| w.is_sign_negative()));
            let partner = solve_roots(&lambda_counts(n, l, reciprocal_sector(n, l, q)).unwrap(), 96).unwrap();
            prop_assert_eq!(roots.len(), partner.len());
        }
    }
}
