//! Healthcare efficacy `g`: the reduction in mortality growth bought by
//! spending a fraction `h` of wealth per year on healthcare.

use alloc::format;
use alloc::sync::Arc;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

type Callback = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Bracket searched for the inverse marginal efficacy of a custom model.
pub const CUSTOM_INVERSE_BRACKET: (f64, f64) = (1e-12, 1e6);
const CUSTOM_INVERSE_RTOL: f64 = 1e-10;

/// User-supplied `g` and `g'`. `g` must vanish at 0 and be strictly
/// increasing and strictly concave on `h > 0`.
#[derive(Clone)]
pub struct CustomEfficacy {
    g: Callback,
    dg: Callback,
}

#[derive(Clone)]
pub enum EfficacyModel {
    /// No healthcare technology: `g ≡ 0`.
    Zero,
    /// `g(h) = a h^q / q` with `a > 0`, `0 < q < 1`.
    Isoelastic { a: f64, q: f64 },
    Custom(CustomEfficacy),
}

impl fmt::Debug for EfficacyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EfficacyModel::Zero => f.write_str("Zero"),
            EfficacyModel::Isoelastic { a, q } => {
                f.debug_struct("Isoelastic").field("a", a).field("q", q).finish()
            }
            EfficacyModel::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Value and maximizer of `sup_{h ≥ 0} { g(h) − k h }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conjugate {
    pub value: f64,
    pub h_star: f64,
}

impl EfficacyModel {
    /// Isoelastic efficacy. `a = 0` is the zero model.
    pub fn isoelastic(a: f64, q: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::invalid("a", "must be finite and nonnegative"));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid("q", "must lie in (0, 1)"));
        }
        if a == 0.0 {
            return Ok(EfficacyModel::Zero);
        }
        Ok(EfficacyModel::Isoelastic { a, q })
    }

    pub fn custom<G, D>(g: G, dg: D) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        EfficacyModel::Custom(CustomEfficacy {
            g: Arc::new(g),
            dg: Arc::new(dg),
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, EfficacyModel::Zero)
    }

    pub fn g(&self, h: f64) -> f64 {
        match self {
            EfficacyModel::Zero => 0.0,
            EfficacyModel::Isoelastic { a, q } => {
                if h <= 0.0 {
                    0.0
                } else {
                    a * h.powf(*q) / q
                }
            }
            EfficacyModel::Custom(c) => (c.g)(h),
        }
    }

    pub fn dg(&self, h: f64) -> f64 {
        match self {
            EfficacyModel::Zero => 0.0,
            EfficacyModel::Isoelastic { a, q } => a * h.powf(q - 1.0),
            EfficacyModel::Custom(c) => (c.dg)(h),
        }
    }

    /// Inverse marginal efficacy `I(y) = (g')⁻¹(y)` for `y > 0`.
    ///
    /// Custom models are inverted by geometric bisection on
    /// [`CUSTOM_INVERSE_BRACKET`] and clamp to its ends.
    pub fn inverse_marginal(&self, y: f64) -> f64 {
        match self {
            EfficacyModel::Zero => 0.0,
            EfficacyModel::Isoelastic { a, q } => (a / y).powf(1.0 / (1.0 - q)),
            EfficacyModel::Custom(c) => {
                let (mut lo, mut hi) = CUSTOM_INVERSE_BRACKET;
                if (c.dg)(lo) <= y {
                    return 0.0;
                }
                if (c.dg)(hi) >= y {
                    return hi;
                }
                while hi / lo - 1.0 > CUSTOM_INVERSE_RTOL {
                    let mid = (lo * hi).sqrt();
                    if (c.dg)(mid) > y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                (lo * hi).sqrt()
            }
        }
    }

    /// `S(k) = sup_{h ≥ 0} { g(h) − k h }` and its maximizer `I(k)`.
    pub fn conjugate(&self, k: f64) -> Result<Conjugate> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::domain(format!(
                "conjugate slope k={k} must be positive and finite"
            )));
        }
        Ok(match self {
            EfficacyModel::Zero => Conjugate {
                value: 0.0,
                h_star: 0.0,
            },
            EfficacyModel::Isoelastic { a, q } => {
                let e = 1.0 / (1.0 - q);
                Conjugate {
                    value: (1.0 - q) / q * a.powf(e) * k.powf(-q * e),
                    h_star: (a / k).powf(e),
                }
            }
            EfficacyModel::Custom(_) => {
                let h = self.inverse_marginal(k);
                Conjugate {
                    value: (self.g(h) - k * h).max(0.0),
                    h_star: h,
                }
            }
        })
    }

    /// `g(I(k))`: the mortality growth removed when marginal efficacy equals `k`.
    pub fn g_at_inverse(&self, k: f64) -> f64 {
        match self {
            EfficacyModel::Zero => 0.0,
            EfficacyModel::Isoelastic { a, q } => {
                let e = 1.0 / (1.0 - q);
                a.powf(e) * k.powf(-q * e) / q
            }
            EfficacyModel::Custom(_) => self.g(self.inverse_marginal(k)),
        }
    }
}

/// Free-function form of [`EfficacyModel::conjugate`].
pub fn efficacy_conjugate(efficacy: &EfficacyModel, k: f64) -> Result<Conjugate> {
    efficacy.conjugate(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Golden-section refinement of a coarse log-grid search for `sup g(h) − k h`.
    fn brute_conjugate(eff: &EfficacyModel, k: f64) -> (f64, f64) {
        let obj = |h: f64| eff.g(h) - k * h;
        let (lo_e, hi_e, n) = (-30.0f64, 20.0f64, 10000);
        let mut best = (0.0, 0.0);
        let mut best_i = 0;
        for i in 0..=n {
            let h = 10f64.powf(lo_e + (hi_e - lo_e) * i as f64 / n as f64);
            let v = obj(h);
            if v > best.1 {
                best = (h, v);
                best_i = i;
            }
        }
        if best.1 == 0.0 {
            return (0.0, 0.0);
        }
        let step = (hi_e - lo_e) / n as f64;
        let e = lo_e + step * best_i as f64;
        let (mut a, mut b) = (10f64.powf(e - step), 10f64.powf(e + step));
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if obj(c) > obj(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let h = 0.5 * (a + b);
        (obj(h), h)
    }

    #[test]
    fn zero_model_conjugate_is_zero() {
        let c = EfficacyModel::Zero.conjugate(0.5).unwrap();
        assert_eq!((c.value, c.h_star), (0.0, 0.0));
    }

    #[test]
    fn calibrated_conjugate_matches_grid_search() {
        let eff = EfficacyModel::isoelastic(0.1, 0.46).unwrap();
        let k = 0.33 / 0.67;
        // Plain grid over (0, 1] as a second, cruder oracle.
        let mut grid_best = (0.0, 0.0);
        for i in 1..=1_000_000 {
            let h = i as f64 * 1e-6;
            let v = eff.g(h) - k * h;
            if v > grid_best.0 {
                grid_best = (v, h);
            }
        }
        let c = eff.conjugate(k).unwrap();
        assert!((c.value - grid_best.0).abs() < 1e-9);
        assert!((c.h_star - grid_best.1).abs() < 2e-6);
        assert!((c.value - 0.0302).abs() < 5e-4, "{}", c.value);
        assert!((c.h_star - 0.0522).abs() < 5e-4, "{}", c.h_star);
    }

    #[test]
    fn nonpositive_slope_is_domain_error() {
        let eff = EfficacyModel::isoelastic(0.1, 0.46).unwrap();
        assert!(eff.conjugate(0.0).is_err());
        assert!(eff.conjugate(-1.0).is_err());
    }

    #[test]
    fn custom_matches_isoelastic() {
        let iso = EfficacyModel::isoelastic(0.1, 0.46).unwrap();
        let cus = EfficacyModel::custom(
            |h: f64| 0.1 * h.powf(0.46) / 0.46,
            |h: f64| 0.1 * h.powf(-0.54),
        );
        for k in [1e-2, 0.49, 3.0] {
            let a = iso.conjugate(k).unwrap();
            let b = cus.conjugate(k).unwrap();
            assert!((a.h_star / b.h_star - 1.0).abs() < 1e-9);
            assert!((a.value / b.value - 1.0).abs() < 1e-9);
            assert!((iso.g_at_inverse(k) / cus.g_at_inverse(k) - 1.0).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn closed_form_matches_brute_force(a in 0.01f64..1.0, q in 0.1f64..0.8, le in -3.0f64..3.0) {
            let k = 10f64.powf(le);
            let eff = EfficacyModel::isoelastic(a, q).unwrap();
            let c = eff.conjugate(k).unwrap();
            let (v, h) = brute_conjugate(&eff, k);
            prop_assert!((c.value / v - 1.0).abs() < 1e-6, "S {} vs {}", c.value, v);
            prop_assert!((c.h_star / h - 1.0).abs() < 1e-4, "h {} vs {}", c.h_star, h);
        }

        #[test]
        fn maximizer_beats_perturbations(a in 0.01f64..1.0, q in 0.1f64..0.9, le in -3.0f64..3.0, eps in 1e-6f64..1e-2) {
            let k = 10f64.powf(le);
            let eff = EfficacyModel::isoelastic(a, q).unwrap();
            let c = eff.conjugate(k).unwrap();
            let at = |h: f64| eff.g(h) - k * h;
            prop_assert!((at(c.h_star) - c.value).abs() <= 1e-12 * c.value.abs().max(1.0));
            let d = eps * c.h_star;
            prop_assert!(at(c.h_star + d) <= c.value * (1.0 + 1e-14));
            prop_assert!(at(c.h_star - d) <= c.value * (1.0 + 1e-14));
        }

        #[test]
        fn conjugate_decreasing(a in 0.01f64..1.0, q in 0.1f64..0.9, le in -3.0f64..3.0) {
            let k = 10f64.powf(le);
            let eff = EfficacyModel::isoelastic(a, q).unwrap();
            prop_assert!(eff.conjugate(2.0 * k).unwrap().value < eff.conjugate(k).unwrap().value);
        }
    }
}
