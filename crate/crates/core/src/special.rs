//! Gamma, Beta and unit-ball constants.
//!
//! Everything downstream chains through `ln_gamma`, so Beta values are formed
//! in log space and exponentiated once.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G_HALF: f64 = 5.242_187_5;
const LANCZOS_COEFFS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];
const SQRT_TWO_PI: f64 = 2.506_628_274_631_000_5;

fn ln_gamma_unchecked(x: f64) -> f64 {
    let t = x + LANCZOS_G_HALF;
    let t = (x + 0.5) * t.ln() - t;
    let mut series = 0.999_999_999_999_997_092;
    let mut y = x;
    for c in LANCZOS_COEFFS {
        y += 1.0;
        series += c / y;
    }
    t + (SQRT_TWO_PI * series / x).ln()
}

/// Natural logarithm of the Gamma function for `x > 0` (Lanczos, g = 607/128).
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::domain(format!("ln_gamma requires finite x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

// Stirling remainder ln Γ(x) - [(x - 1/2) ln x - x + ln √(2π)], x ≥ 20.
fn stirling_tail(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
}

/// ln Γ(b + a) - ln Γ(b) without cancellation for large b.
fn ln_gamma_shift(a: f64, b: f64) -> f64 {
    (b - 0.5) * (a / b).ln_1p() + a * (a + b).ln() - a + stirling_tail(a + b) - stirling_tail(b)
}

/// ln B(a, b) = ln Γ(a) + ln Γ(b) - ln Γ(a + b).
///
/// When one argument is large the difference ln Γ(a + b) - ln Γ(b) is taken
/// from the Stirling series so that no digits are lost to cancellation.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!("beta requires a, b > 0, got ({a}, {b})")));
    }
    let (small, large) = if a <= b { (a, b) } else { (b, a) };
    if large >= 20.0 {
        Ok(ln_gamma_unchecked(small) - ln_gamma_shift(small, large))
    } else {
        Ok(ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b))
    }
}

/// The Beta function B(a, b) = Γ(a)Γ(b)/Γ(a + b).
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    ln_beta(a, b).map(f64::exp)
}

/// Volume ω_n of the unit ball in R^n.
pub fn unit_ball_volume(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("unit ball volume requires n >= 1"));
    }
    let half = n as f64 / 2.0;
    Ok((half * PI.ln() - ln_gamma_unchecked(half + 1.0)).exp())
}

/// n·ω_n, the surface area of the unit sphere S^{n-1}.
pub fn sphere_area(n: usize) -> Result<f64> {
    Ok(n as f64 * unit_ball_volume(n)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn ln_gamma_known_values() {
        assert_eq!(ln_gamma(1.0).unwrap().abs() < 1e-15, true);
        assert!((ln_gamma(0.5).unwrap() - PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-14);
        // reference values from a 30-digit evaluation
        let table = [
            (0.001, 6.907_178_885_383_853_682_5),
            (0.1, 2.252_712_651_734_205_959_9),
            (1.5, -0.120_782_237_635_245_222_35),
            (2.5, 0.284_682_870_472_919_159_63),
            (3.7, 1.428_072_326_665_387_921_9),
            (10.0, 12.801_827_480_081_469_611),
            (33.3, 82.603_723_581_654_952_928),
            (100.0, 359.134_205_369_575_398_78),
            (1000.0, 5_905.220_423_209_181_211_8),
        ];
        for (x, want) in table {
            assert!(rel(ln_gamma(x).unwrap(), want) < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn ln_gamma_rejects_bad_input() {
        assert!(ln_gamma(0.0).is_err());
        assert!(ln_gamma(-1.5).is_err());
        assert!(ln_gamma(f64::NAN).is_err());
        assert!(ln_gamma(f64::INFINITY).is_err());
    }

    #[test]
    fn beta_known_values() {
        assert!((beta_fn(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(rel(beta_fn(0.5, 0.5).unwrap(), PI) < 1e-14);
        assert!(rel(beta_fn(2.0, 3.0).unwrap(), 1.0 / 12.0) < 1e-14);
        assert!(beta_fn(0.0, 1.0).is_err());
        assert!(beta_fn(1.0, -2.0).is_err());
    }

    #[test]
    fn beta_large_arguments_do_not_overflow() {
        // B(1/2, 1e6) ~ sqrt(pi / 1e6)
        let b = beta_fn(0.5, 1e6).unwrap();
        assert!(rel(b, (PI / 1e6).sqrt()) < 1e-6);
    }

    #[test]
    fn unit_ball_volumes() {
        assert!(rel(unit_ball_volume(1).unwrap(), 2.0) < 1e-14);
        assert!(rel(unit_ball_volume(2).unwrap(), PI) < 1e-14);
        assert!(rel(unit_ball_volume(3).unwrap(), 4.0 * PI / 3.0) < 1e-14);
        assert!(unit_ball_volume(0).is_err());
    }

    #[test]
    fn sphere_area_matches_gamma_formula() {
        for n in 1..=10usize {
            let half = n as f64 / 2.0;
            let want = 2.0 * PI.powf(half) / ln_gamma(half).unwrap().exp();
            assert!(rel(sphere_area(n).unwrap(), want) < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn ln_beta_large_argument_reference() {
        // 30-digit references
        let cases = [
            (0.5, 1.0e7, -7.486_682_870_054_459_807),
            (1.5, 25.0, -4.963_898_935_407_253_239),
            (3.0, 1.0e4, -26.938_173_910_371_602_474),
        ];
        for (a, b, want) in cases {
            let got = ln_beta(a, b).unwrap();
            assert!((got - want).abs() < 2e-14 * want.abs(), "B({a}, {b}): {got} vs {want}");
        }
    }

    #[test]
    fn stirling_and_lanczos_paths_agree() {
        for (a, b) in [(2.5, 20.0), (0.3, 35.0), (7.0, 60.0)] {
            let direct = ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b);
            let shifted = ln_beta(a, b).unwrap();
            assert!((direct - shifted).abs() < 1e-12 * direct.abs(), "({a}, {b})");
        }
    }

    proptest! {
        #[test]
        fn beta_is_symmetric(a in 1e-2f64..50.0, b in 1e-2f64..50.0) {
            let ab = ln_beta(a, b).unwrap();
            let ba = ln_beta(b, a).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-13 * ab.abs().max(1.0));
        }

        #[test]
        fn ln_gamma_recurrence(x in 1e-3f64..1e3) {
            let lhs = ln_gamma(x + 1.0).unwrap();
            let rhs = ln_gamma(x).unwrap() + x.ln();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }
}
