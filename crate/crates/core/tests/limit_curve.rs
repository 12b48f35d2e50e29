use nel_core::alpha::{alpha_closed_form, alpha_recursion};
use nel_core::limit_curve::{
    compute_a, eta_check_on, implicit_rhs, implicit_z, sup_deviation, LimitOde, IMPLICIT_K,
};
use nel_core::separatrix::{scaled_separatrix, SeparatrixConfig};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[test]
fn walk_recursion_equals_closed_form() {
    let table = alpha_recursion(60, 60).unwrap();
    let mut checked = 0;
    for n in 1..=60usize {
        for k in 0..=(60 - n) {
            let value = table.get(n, k).unwrap();
            if n % 2 == k % 2 {
                if n == 1 && k == 0 {
                    continue;
                }
                assert_eq!(value, &alpha_closed_form(n, k).unwrap(), "({n}, {k})");
                checked += 1;
            } else {
                assert!(value.is_zero(), "({n}, {k})");
            }
        }
    }
    assert!(checked > 800);
}

#[test]
fn walk_mass_never_grows() {
    // Each step splits |mass| in two halves and absorption only removes it.
    // From n = 2 the walk reaches n = k + 2, so 42 rows hold every walker.
    let table = alpha_recursion(42, 40).unwrap();
    let one = BigRational::one();
    let mut prev = one.clone();
    for k in 0..=40 {
        let alive: BigRational = (2..=42).filter_map(|n| table.get(n, k)).map(|v| v.abs()).sum();
        assert!(table.column_abs_sum(k) <= one, "k = {k}");
        assert!(alive <= prev, "k = {k}");
        prev = alive;
    }
}

#[test]
fn integrated_curve_satisfies_implicit_relation() {
    let ode = LimitOde::solve().unwrap();
    for i in 1..=100 {
        let t = i as f64 / 100.0;
        let z = ode.eval(t).unwrap();
        let k = t.powi(3) * implicit_rhs(z / t);
        assert!((k - IMPLICIT_K).abs() < 1e-8, "t = {t}: {k}");
        assert!((z - implicit_z(t).unwrap()).abs() < 1e-8);
    }
    assert!((compute_a() - 2f64.powf(5.0 / 6.0)).abs() < 1e-12);
}

#[test]
fn integral_relation_residual_is_the_boundary_term() {
    // Multiplying z' = cos(lambda t z) by (z + t z') and integrating leaves
    // exactly 2 sin(lambda t z(t)) / lambda.
    let cfg = SeparatrixConfig::default();
    let sep = scaled_separatrix(50, &cfg).unwrap();
    for t in [0.25, 0.5, 0.8] {
        let check = eta_check_on(&sep, t).unwrap();
        let predicted = 2.0 * (sep.lambda * t * sep.eval(t).unwrap()).sin().abs() / sep.lambda;
        assert!((check.residual_18 - predicted).abs() < 1e-7, "t = {t}");
        assert!(check.mismatch_29 < 5.0 * check.residual_18.max(1e-3));
    }
    assert!(eta_check_on(&sep, 1.5).is_err());
}

#[test]
fn separatrix_approaches_limit_curve() {
    let cfg = SeparatrixConfig::default();
    let ode = LimitOde::solve().unwrap();
    let d50 = sup_deviation(&scaled_separatrix(50, &cfg).unwrap(), &ode, 0.0, 0.9);
    let d100 = sup_deviation(&scaled_separatrix(100, &cfg).unwrap(), &ode, 0.0, 0.9);
    assert!(d100 < d50);
    assert!(d100 < 3e-3);
}

#[test]
fn beyond_turning_point_curve_decays_like_one_over_t() {
    // The first tail correction is -1/(lambda t^3), so the gap to 1/t is
    // about 1/(lambda 1.2^3) at t = 1.2 and halves when n doubles.
    let cfg = SeparatrixConfig::default();
    let gap = |n: i64| {
        let sep = scaled_separatrix(n, &cfg).unwrap();
        let t_hi = sep.t_max();
        let bound = 1.0 / (sep.lambda * 1.2f64.powi(3));
        let sup = (0..=200)
            .map(|i| 1.2 + (t_hi - 1.2) * i as f64 / 200.0)
            .map(|t| (sep.eval(t).unwrap() - 1.0 / t).abs())
            .fold(0.0, f64::max);
        (sup, bound)
    };
    let (g50, b50) = gap(50);
    let (g100, b100) = gap(100);
    assert!(g50 <= 1.2 * b50, "{g50} vs {b50}");
    assert!(g100 <= 1.2 * b100, "{g100} vs {b100}");
    let ratio = g50 / g100;
    assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
}
