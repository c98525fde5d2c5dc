//! Cross-module invariants as property tests.

use moment_lab::arith::{divisor_tau, gcd, kloosterman, tau0, weil_bound};
use moment_lab::cli::{parse_complex, Table};
use moment_lab::kernels::{big_phi_k, phi_k, phi_k_uv, KernelParams};
use moment_lab::modforms::form_space;
use moment_lab::moments::{mollifier_coeffs, second_moment_uv_main, TestWeight};
use moment_lab::mp;
use moment_lab::specialfn::gamma::ln_gamma;
use moment_lab::PrecisionContext;
use proptest::prelude::*;
use rug::{Complex, Float};

fn ctx() -> PrecisionContext {
    PrecisionContext::default()
}

fn cx(re: f64, im: f64) -> Complex {
    Complex::with_val(256, (re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tau_symmetric_in_v(n in 1u64..5000, re in -2.0f64..2.0, im in -5.0f64..5.0) {
        let c = ctx();
        let a = divisor_tau(n, &cx(re, im), &c);
        let b = divisor_tau(n, &cx(-re, -im), &c);
        let scale = 1.0 + mp::cabs_f64(&a);
        prop_assert!(mp::cabs_f64(&Complex::with_val(256, &a - &b)) <= c.tail_tol * scale);
    }

    #[test]
    fn tau0_multiplicative(m in 1u64..=100, n in 1u64..=100) {
        prop_assume!(gcd(m as i64, n as i64) == 1);
        prop_assert_eq!(tau0(m * n), tau0(m) * tau0(n));
    }

    #[test]
    fn mollifier_coefficients_bounded(m in 1.01f64..200.0) {
        prop_assume!(m.fract() != 0.0);
        let xs = mollifier_coeffs(m, 128).unwrap();
        prop_assert_eq!(xs.len(), m.floor() as usize + 1);
        prop_assert!(xs.iter().all(|x| x.to_f64().abs() <= 1.0));
    }

    #[test]
    fn table_csv_has_one_line_per_row(cells in proptest::collection::vec("[a-z0-9,\\.]{0,8}", 1..20)) {
        let mut t = Table::new(&["a"]);
        for c in &cells {
            t.push(vec![c.clone()]);
        }
        prop_assert_eq!(t.to_csv().lines().count(), cells.len() + 1);
        let j: Vec<serde_json::Value> = serde_json::from_str(&t.to_json()).unwrap();
        for (row, c) in j.iter().zip(&cells) {
            prop_assert_eq!(row["a"].as_str().unwrap(), c.as_str());
        }
    }

    #[test]
    fn complex_parse_round_trip(re in -10.0f64..10.0, im in -10.0f64..10.0) {
        let s = format!("{re}{im:+}i");
        let z = parse_complex(&s, 64).unwrap();
        prop_assert_eq!(z.real().to_f64(), re);
        prop_assert_eq!(z.imag().to_f64(), im);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weil_bound_random(m in -40i64..40, n in -40i64..40, c in 1u64..120) {
        let s = kloosterman(m, n, c, &ctx()).unwrap().to_f64();
        prop_assert!(s.abs() <= weil_bound(m, n, c) * (1.0 + 1e-12));
    }

    #[test]
    fn gamma_reflection(re in -3.3f64..3.7, im in 0.05f64..4.0) {
        let c = ctx();
        let z = cx(re, im);
        let one_minus = Complex::with_val(256, 1 - &z);
        let lhs = ln_gamma(&z, &c).unwrap() + ln_gamma(&one_minus, &c).unwrap();
        let pi = mp::pi(256);
        let sin = Complex::with_val(256, &z * &pi).sin();
        let rhs = (Complex::with_val(256, (&pi, 0)) / sin).ln();
        let d = Complex::with_val(256, lhs - rhs);
        prop_assert!(d.real().to_f64().abs() < 1e-60);
        let turns = d.imag().to_f64() / (2.0 * std::f64::consts::PI);
        prop_assert!((turns - turns.round()).abs() < 1e-50);
    }

    #[test]
    fn central_kernels_are_real(x in 0.02f64..0.98, k in 3u32..20) {
        let c = ctx();
        let p = KernelParams::central(k, 256);
        let v = big_phi_k(&c.f(x), &p, &c).unwrap();
        prop_assert!(v.value.imag().to_f64().abs() <= c.tail_tol);
    }

    #[test]
    fn phi_uv_symmetric_in_v(x in 0.05f64..0.5, k in 6u32..14, u in -0.3f64..0.3, vr in 0.05f64..0.3, vi in -1.0f64..1.0) {
        let c = ctx();
        let a = phi_k_uv(&c.f(x), &KernelParams::new(k, cx(u, 0.0), cx(vr, vi)).unwrap(), &c).unwrap();
        let b = phi_k_uv(&c.f(x), &KernelParams::new(k, cx(u, 0.0), cx(-vr, -vi)).unwrap(), &c).unwrap();
        let scale = 1.0 + mp::cabs_f64(&a);
        prop_assert!(mp::cabs_f64(&Complex::with_val(256, a - b)) <= 1e-50 * scale);
    }

    #[test]
    fn phi_functional_equation(x in 0.05f64..0.95, half_k in 1u32..10) {
        let c = ctx();
        let k = 2 * half_k;
        let xf = c.f(x);
        let a = phi_k(&xf, k, &c).unwrap().value;
        let b = phi_k(&Float::with_val(256, 1 - &xf), k, &c).unwrap().value;
        let diff = Float::with_val(256, a.real() - b.real()).abs().to_f64();
        prop_assert!(diff <= 1e-50 * (1.0 + a.real().to_f64().abs()));
    }

    #[test]
    fn uv_main_conjugation(ur in 0.05f64..0.4, ui in -0.3f64..0.3, t in 0.05f64..1.0, half_k in 3u32..12) {
        let c = ctx();
        let (u, v) = (cx(ur, ui), cx(0.0, t));
        let a = second_moment_uv_main(1, half_k, &u, &v, &c).unwrap();
        let ub = Complex::with_val(256, u.conj_ref());
        let vb = Complex::with_val(256, -Complex::with_val(256, v.conj_ref()));
        let b = second_moment_uv_main(1, half_k, &ub, &vb, &c).unwrap();
        let d = mp::cabs_f64(&Complex::with_val(256, a - Complex::with_val(256, b.conj_ref())));
        prop_assert!(d <= 1e-50 * (1.0 + mp::cabs_f64(&u)));
    }

    #[test]
    fn test_weight_nonnegative(y in 0.0f64..3.0) {
        let h = TestWeight::default();
        let v = h.eval(&Float::with_val(128, y));
        prop_assert!(v >= 0);
        if y <= h.theta1 || y >= h.theta2 {
            prop_assert!(v == 0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn hecke_relation_and_deligne(widx in 0usize..5, m in 1u64..=12, n in 1u64..=12) {
        let c = ctx();
        let w = [12u32, 16, 20, 24, 28][widx];
        let sp = form_space(w, &c).unwrap();
        prop_assume!((m * n) as usize <= sp.n_max);
        for f in &sp.forms {
            let lhs = Float::with_val(256, &f.lambda[m as usize] * &f.lambda[n as usize]);
            let mut rhs = Float::new(256);
            for d in 1..=m.min(n) {
                if m % d == 0 && n % d == 0 {
                    rhs += &f.lambda[(m * n / (d * d)) as usize];
                }
            }
            prop_assert!(Float::with_val(256, lhs - rhs).abs().to_f64() <= 1e-60);
            prop_assert!(f.lambda[n as usize].to_f64().abs() <= tau0(n) as f64 * (1.0 + 1e-10));
            prop_assert!(*f.omega().unwrap() > 0);
        }
    }
}
