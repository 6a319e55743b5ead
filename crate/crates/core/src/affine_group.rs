//! The affine group Aff₊(ℝ), realized as the half-plane q > 0.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Point `(q, p)` of the half-plane, `q > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement<T> {
    q: T,
    p: T,
}

impl<T: Real> GroupElement<T> {
    pub fn new(q: T, p: T) -> Result<Self> {
        if !(q > T::zero()) || !q.is_finite() || !p.is_finite() {
            return Err(Error::domain(format!("group element needs finite q > 0 and finite p, got ({q}, {p})")));
        }
        Ok(GroupElement { q, p })
    }

    pub fn identity() -> Self {
        GroupElement { q: T::one(), p: T::zero() }
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn p(&self) -> T {
        self.p
    }

    /// `(q, p)(q0, p0) = (q q0, p0/q + p)`.
    pub fn compose(&self, g0: &Self) -> Self {
        GroupElement { q: self.q * g0.q, p: g0.p / self.q + self.p }
    }

    /// `(q, p)^{-1} = (1/q, -q p)`.
    pub fn inverse(&self) -> Self {
        GroupElement { q: T::one() / self.q, p: -self.q * self.p }
    }

    /// Left action on points: `g0 · (q, p)`.
    pub fn act(&self, point: &Self) -> Self {
        self.compose(point)
    }
}

/// Left translate of a function on the half-plane: `(q, p) ↦ f(q/q0, q0 (p - p0))`,
/// i.e. `f(g0^{-1} (q, p))`.
pub fn left_translate<T: Real, V>(
    g0: GroupElement<T>,
    f: impl Fn(T, T) -> V,
) -> impl Fn(T, T) -> V {
    move |q, p| f(q / g0.q, g0.q * (p - g0.p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{adaptive, Tolerance};
    use proptest::prelude::*;

    fn g(q: f64, p: f64) -> GroupElement<f64> {
        GroupElement::new(q, p).unwrap()
    }

    #[test]
    fn spec_examples() {
        let g0 = g(3.0, 4.0);
        assert_eq!(GroupElement::identity().compose(&g0), g0);
        assert_eq!(g(2.0, 1.0).compose(&g(3.0, 4.0)), g(6.0, 3.0));
        assert_eq!(g(5.0, -2.0).compose(&g(5.0, -2.0).inverse()), GroupElement::identity());
        assert_eq!(GroupElement::<f64>::identity().inverse(), GroupElement::identity());
        assert_eq!(g(2.0, 3.0).inverse(), g(0.5, -6.0));
        let h = g(0.3, 7.5);
        assert_eq!(h.inverse().inverse(), h);
    }

    #[test]
    fn invalid_elements() {
        assert!(GroupElement::new(0.0, 1.0).is_err());
        assert!(GroupElement::new(-1.0, 1.0).is_err());
        assert!(GroupElement::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn left_translate_examples() {
        let f = |q: f64, p: f64| q + 10.0 * p;
        let same = left_translate(GroupElement::identity(), f);
        assert_eq!(same(1.5, 2.0), f(1.5, 2.0));
        let shifted = left_translate(g(2.0, 0.0), |q: f64, _p: f64| q);
        assert_eq!(shifted(3.0, 9.0), 1.5);
    }

    #[test]
    fn measure_is_left_invariant() {
        // compactly supported bump on [0.5, 2] x [-1, 1]
        let bump = |q: f64, p: f64| {
            let u = (q - 1.25) / 0.75;
            if u.abs() >= 1.0 || p.abs() >= 1.0 {
                0.0
            } else {
                (-1.0 / (1.0 - u * u) - 1.0 / (1.0 - p * p)).exp()
            }
        };
        let tol = Tolerance::new(1e-10, 1e-14);
        let integrate = |f: &dyn Fn(f64, f64) -> f64, qlo: f64, qhi: f64, plo: f64, phi: f64| {
            adaptive(
                |q: f64| adaptive(|p: f64| f(q, p), plo, phi, tol).unwrap().value,
                qlo,
                qhi,
                tol,
            )
            .unwrap()
            .value
        };
        let base = integrate(&bump, 0.5, 2.0, -1.0, 1.0);
        let g0 = g(1.7, 0.4);
        // f(g0 g) has support g0 g ∈ box, i.e. g ∈ g0^{-1} box
        let moved = |q: f64, p: f64| {
            let h = g0.compose(&g(q, p));
            bump(h.q(), h.p())
        };
        let qlo = 0.5 / g0.q();
        let qhi = 2.0 / g0.q();
        let plo = (-1.0 - g0.p()) * g0.q();
        let phi = (1.0 - g0.p()) * g0.q();
        let other = integrate(&moved, qlo, qhi, plo, phi);
        assert!((base - other).abs() < 1e-8 * base, "{base} vs {other}");
    }

    proptest! {
        #[test]
        fn associativity(q1 in 0.1f64..10.0, p1 in -5.0f64..5.0, q2 in 0.1f64..10.0, p2 in -5.0f64..5.0, q3 in 0.1f64..10.0, p3 in -5.0f64..5.0) {
            let (a, b, c) = (g(q1, p1), g(q2, p2), g(q3, p3));
            let l = a.compose(&b).compose(&c);
            let r = a.compose(&b.compose(&c));
            prop_assert!((l.q() - r.q()).abs() <= 1e-13 * l.q());
            prop_assert!((l.p() - r.p()).abs() <= 1e-12 * (1.0 + l.p().abs()));
        }

        #[test]
        fn translation_is_an_action(q0 in 0.2f64..5.0, p0 in -3.0f64..3.0, q1 in 0.2f64..5.0, p1 in -3.0f64..3.0, q in 0.1f64..10.0, p in -4.0f64..4.0) {
            let f = |q: f64, p: f64| (q.ln() * 1.3).sin() + p * p * q;
            let g0 = g(q0, p0);
            let g1 = g(q1, p1);
            let both = left_translate(g0.compose(&g1), f);
            let inner = left_translate(g1, f);
            let outer = left_translate(g0, inner);
            let (x, y) = (both(q, p), outer(q, p));
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn single_precision_group() {
        let a = GroupElement::new(2.0_f32, 1.0).unwrap();
        let b = GroupElement::new(3.0_f32, 4.0).unwrap();
        assert_eq!(a.compose(&b), GroupElement::new(6.0, 3.0).unwrap());
    }
}
