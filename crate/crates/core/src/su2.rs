//! The Lie algebra su(2) in the basis {t₁, t₂, t₃} with `[tᵢ, tⱼ] = εᵢⱼₖ tₖ`.
//!
//! The invariant inner product is `⟨u, v⟩ = −tr(uv)` in the defining
//! representation `tᵢ = −(i/2)σᵢ`, so `|tᵢ|² = 1/2`. Every other module uses this
//! normalization.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{KwError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Su2Element<T = f64> {
    pub coeffs: [T; 3],
}

impl<T: Scalar> Su2Element<T> {
    pub fn new(c1: T, c2: T, c3: T) -> Self {
        Self {
            coeffs: [c1, c2, c3],
        }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    /// The generator `t_{i+1}`.
    pub fn basis(i: usize) -> Self {
        let mut e = Self::zero();
        e.coeffs[i] = T::one();
        e
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn scale(&self, k: &T) -> Self {
        Self {
            coeffs: std::array::from_fn(|i| self.coeffs[i].clone() * k.clone()),
        }
    }

    /// Euclidean sum of squared coordinates (twice the invariant norm).
    pub fn coord_sq(&self) -> T {
        self.coeffs
            .iter()
            .fold(T::zero(), |acc, c| acc + c.clone() * c.clone())
    }
}

/// Lie bracket; in coordinates this is the cross product.
pub fn bracket<T: Scalar>(u: &Su2Element<T>, v: &Su2Element<T>) -> Su2Element<T> {
    let [a1, a2, a3] = &u.coeffs;
    let [b1, b2, b3] = &v.coeffs;
    Su2Element::new(
        a2.clone() * b3.clone() - a3.clone() * b2.clone(),
        a3.clone() * b1.clone() - a1.clone() * b3.clone(),
        a1.clone() * b2.clone() - a2.clone() * b1.clone(),
    )
}

/// Invariant inner product `−tr(uv)`.
pub fn inner<T: Scalar>(u: &Su2Element<T>, v: &Su2Element<T>) -> T {
    let dot = u
        .coeffs
        .iter()
        .zip(&v.coeffs)
        .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone());
    dot * T::half()
}

pub fn norm(u: &Su2Element<f64>) -> f64 {
    inner(u, u).sqrt()
}

impl<T: Scalar> Add for Su2Element<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let [a1, a2, a3] = self.coeffs;
        let [b1, b2, b3] = o.coeffs;
        Self::new(a1 + b1, a2 + b2, a3 + b3)
    }
}

impl<T: Scalar> Sub for Su2Element<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let [a1, a2, a3] = self.coeffs;
        let [b1, b2, b3] = o.coeffs;
        Self::new(a1 - b1, a2 - b2, a3 - b3)
    }
}

impl<T: Scalar> Neg for Su2Element<T> {
    type Output = Self;
    fn neg(self) -> Self {
        let [a1, a2, a3] = self.coeffs;
        Self::new(-a1, -a2, -a3)
    }
}

impl Mul<Su2Element<f64>> for f64 {
    type Output = Su2Element<f64>;
    fn mul(self, u: Su2Element<f64>) -> Su2Element<f64> {
        u.scale(&self)
    }
}

/// Constant adjoint rotation `u ↦ g u g⁻¹` with `g = exp(angle · n̂)`.
///
/// The axis is normalized by its coordinate length, so `angle` is the rotation
/// angle of the induced SO(3) action on coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdRotation {
    unit_axis: [f64; 3],
    cos: f64,
    sin: f64,
}

impl AdRotation {
    pub fn new(axis: &Su2Element<f64>, angle: f64) -> Result<Self> {
        let len = axis.coord_sq().sqrt();
        if !(len > 0.0) || !len.is_finite() {
            return Err(KwError::DegenerateAxis);
        }
        Ok(Self {
            unit_axis: axis.coeffs.map(|c| c / len),
            cos: angle.cos(),
            sin: angle.sin(),
        })
    }

    pub fn apply(&self, u: &Su2Element<f64>) -> Su2Element<f64> {
        let n = Su2Element {
            coeffs: self.unit_axis,
        };
        let along = n.coeffs.iter().zip(&u.coeffs).map(|(a, b)| a * b).sum::<f64>();
        let cross = bracket(&n, u);
        Su2Element {
            coeffs: std::array::from_fn(|i| {
                u.coeffs[i] * self.cos
                    + cross.coeffs[i] * self.sin
                    + n.coeffs[i] * along * (1.0 - self.cos)
            }),
        }
    }

    /// Rotation matrix acting on coordinate columns.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let cols: [Su2Element<f64>; 3] = std::array::from_fn(|j| self.apply(&Su2Element::basis(j)));
        std::array::from_fn(|i| std::array::from_fn(|j| cols[j].coeffs[i]))
    }
}

/// Convenience wrapper matching the free-function form.
pub fn ad_rotate(axis: &Su2Element<f64>, angle: f64, u: &Su2Element<f64>) -> Result<Su2Element<f64>> {
    Ok(AdRotation::new(axis, angle)?.apply(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Q = BigRational;

    fn t(i: usize) -> Su2Element<Q> {
        Su2Element::basis(i)
    }

    // 2x2 complex matrices as [[(re, im); 2]; 2], t_j = -(i/2) sigma_j.
    type C = (f64, f64);
    type M2 = [[C; 2]; 2];

    fn cmul(a: C, b: C) -> C {
        (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
    }

    fn generator(j: usize) -> M2 {
        let z = (0.0, 0.0);
        let sigma: M2 = match j {
            0 => [[z, (1.0, 0.0)], [(1.0, 0.0), z]],
            1 => [[z, (0.0, -1.0)], [(0.0, 1.0), z]],
            _ => [[(1.0, 0.0), z], [z, (-1.0, 0.0)]],
        };
        sigma.map(|row| row.map(|c| cmul((0.0, -0.5), c)))
    }

    fn mat_mul(a: &M2, b: &M2) -> M2 {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let p = cmul(a[i][0], b[0][j]);
                let q = cmul(a[i][1], b[1][j]);
                (p.0 + q.0, p.1 + q.1)
            })
        })
    }

    #[test]
    fn bracket_structure_relations() {
        assert_eq!(bracket(&t(0), &t(1)), t(2));
        assert_eq!(bracket(&t(0), &t(0)), Su2Element::zero());
        assert_eq!(bracket(&t(1), &t(0)), -t(2));
    }

    #[test]
    fn inner_matches_matrix_trace() {
        for i in 0..3 {
            for j in 0..3 {
                let p = mat_mul(&generator(i), &generator(j));
                let minus_trace = -(p[0][0].0 + p[1][1].0);
                let got = inner(&Su2Element::<f64>::basis(i), &Su2Element::basis(j));
                assert!((got - minus_trace).abs() < 1e-15);
            }
        }
        assert_eq!(inner(&t(0), &t(0)), rational(1, 2));
        assert_eq!(inner(&t(0), &t(1)), rational(0, 1));
    }

    #[test]
    fn bracket_matches_matrix_commutator() {
        for i in 0..3 {
            for j in 0..3 {
                let (a, b) = (generator(i), generator(j));
                let ab = mat_mul(&a, &b);
                let ba = mat_mul(&b, &a);
                let comm: M2 = std::array::from_fn(|r| {
                    std::array::from_fn(|c| (ab[r][c].0 - ba[r][c].0, ab[r][c].1 - ba[r][c].1))
                });
                let expect = bracket(&Su2Element::<f64>::basis(i), &Su2Element::basis(j));
                let mut m = [[(0.0, 0.0); 2]; 2];
                for k in 0..3 {
                    let g = generator(k);
                    for r in 0..2 {
                        for c in 0..2 {
                            m[r][c].0 += expect.coeffs[k] * g[r][c].0;
                            m[r][c].1 += expect.coeffs[k] * g[r][c].1;
                        }
                    }
                }
                for r in 0..2 {
                    for c in 0..2 {
                        assert!((m[r][c].0 - comm[r][c].0).abs() < 1e-15);
                        assert!((m[r][c].1 - comm[r][c].1).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn rotation_examples() {
        let u = Su2Element::new(0.3, -1.2, 0.5);
        let id = ad_rotate(&Su2Element::new(1.0, 2.0, 3.0), 0.0, &u).unwrap();
        assert_eq!(id, u);

        // oracle: exp(theta * ad t3) via its power series in the adjoint representation
        let ad3 = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let theta = std::f64::consts::FRAC_PI_2;
        let mut term = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut sum = term;
        for k in 1..40 {
            let next: [[f64; 3]; 3] = std::array::from_fn(|i| {
                std::array::from_fn(|j| (0..3).map(|l| ad3[i][l] * term[l][j]).sum::<f64>() * theta / k as f64)
            });
            term = next;
            for i in 0..3 {
                for j in 0..3 {
                    sum[i][j] += term[i][j];
                }
            }
        }
        let got = ad_rotate(&Su2Element::basis(2), theta, &Su2Element::basis(0)).unwrap();
        for i in 0..3 {
            assert!((got.coeffs[i] - sum[i][0]).abs() < 1e-15);
        }
        assert!((got.coeffs[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_axis_rejected() {
        let err = AdRotation::new(&Su2Element::zero(), 1.0).unwrap_err();
        assert_eq!(err.to_string(), "degenerate rotation axis");
    }

    #[test]
    fn rotation_preserves_norm_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let axis = Su2Element::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let u = Su2Element::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let g = AdRotation::new(&axis, rng.gen_range(-4.0..4.0)).unwrap();
            assert!((norm(&g.apply(&u)) - norm(&u)).abs() < 1e-14);
        }
    }

    fn small_rational() -> impl Strategy<Value = Q> {
        (-12i64..=12, 1i64..=6).prop_map(|(n, d)| rational(n, d))
    }

    fn element() -> impl Strategy<Value = Su2Element<Q>> {
        (small_rational(), small_rational(), small_rational()).prop_map(|(a, b, c)| Su2Element::new(a, b, c))
    }

    fn float_element() -> impl Strategy<Value = Su2Element<f64>> {
        (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b, c)| Su2Element::new(a, b, c))
    }

    proptest! {
        #[test]
        fn jacobi_identity_exact(u in element(), v in element(), w in element()) {
            let s = bracket(&u, &bracket(&v, &w)) + bracket(&v, &bracket(&w, &u)) + bracket(&w, &bracket(&u, &v));
            prop_assert!(s.is_zero());
        }

        #[test]
        fn antisymmetric_and_ad_invariant(u in element(), v in element(), w in element()) {
            prop_assert_eq!(bracket(&u, &v), -bracket(&v, &u));
            let lhs = inner(&bracket(&w, &u), &v) + inner(&u, &bracket(&w, &v));
            prop_assert_eq!(lhs, rational(0, 1));
        }

        #[test]
        fn inner_positive_definite(u in element()) {
            let n = inner(&u, &u);
            prop_assert!(n >= rational(0, 1));
            prop_assert_eq!(n == rational(0, 1), u.is_zero());
        }

        #[test]
        fn rotation_is_automorphism(
            axis in float_element().prop_filter("nonzero", |a| a.coord_sq() > 1e-6),
            angle in -6.0..6.0f64,
            u in float_element(),
            v in float_element(),
        ) {
            let g = AdRotation::new(&axis, angle).unwrap();
            let lhs = g.apply(&bracket(&u, &v));
            let rhs = bracket(&g.apply(&u), &g.apply(&v));
            for i in 0..3 {
                prop_assert!((lhs.coeffs[i] - rhs.coeffs[i]).abs() < 1e-13);
            }
            prop_assert!((inner(&g.apply(&u), &g.apply(&v)) - inner(&u, &v)).abs() < 1e-13);
        }
    }
}
