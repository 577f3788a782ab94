//! Left-invariant su(2)-valued forms on S³ × ℝ⁺ with coefficients in the
//! orthonormal coframe `{e₁, e₂, e₃}` and `dy`.
//!
//! A 1-form `Σ c[i][a] tᵢ ⊗ eₐ` is stored as its 3×3 coefficient matrix (row =
//! Lie-algebra index, column = coframe index). Tangential 2-forms are stored
//! through their S³ Hodge dual: the coefficient of `tᵢ ⋆eₐ`, where
//! `⋆e₁ = e₂∧e₃` and cyclically, which makes `*₃` the identity on storage.

use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::su2::Su2Element;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantOneForm<T = f64> {
    pub c: [[T; 3]; 3],
}

impl<T: Scalar> InvariantOneForm<T> {
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> T) -> Self {
        Self {
            c: std::array::from_fn(|i| std::array::from_fn(|a| f(i, a))),
        }
    }

    pub fn zero() -> Self {
        Self::from_fn(|_, _| T::zero())
    }

    /// The elementary form `t_{i+1} ⊗ e_{a+1}`.
    pub fn unit(i: usize, a: usize) -> Self {
        Self::from_fn(|r, s| if r == i && s == a { T::one() } else { T::zero() })
    }

    /// `ω = Σ tᵢ eᵢ`.
    pub fn omega() -> Self {
        Self::from_fn(|i, a| if i == a { T::one() } else { T::zero() })
    }

    pub fn scale(&self, k: &T) -> Self {
        Self::from_fn(|i, a| self.c[i][a].clone() * k.clone())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, a| self.c[a][i].clone())
    }

    pub fn trace(&self) -> T {
        (0..3).fold(T::zero(), |acc, i| acc + self.c[i][i].clone())
    }

    /// Frobenius pairing `Σ c[i][a]·d[i][a]`.
    pub fn frobenius(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for i in 0..3 {
            for a in 0..3 {
                acc = acc + self.c[i][a].clone() * other.c[i][a].clone();
            }
        }
        acc
    }

    /// Invariant inner product; `|tᵢ eₐ|² = 1/2`.
    pub fn inner(&self, other: &Self) -> T {
        self.frobenius(other) * T::half()
    }

    pub fn norm_sq(&self) -> T {
        self.inner(self)
    }

    /// Lie-algebra coefficient along the coframe direction `a`.
    pub fn column(&self, a: usize) -> Su2Element<T> {
        Su2Element::new(self.c[0][a].clone(), self.c[1][a].clone(), self.c[2][a].clone())
    }

    pub fn from_columns(cols: &[Su2Element<T>; 3]) -> Self {
        Self::from_fn(|i, a| cols[a].coeffs[i].clone())
    }

    /// Applies a linear map to the Lie-algebra index of every column.
    pub fn map_columns(&self, f: impl Fn(&Su2Element<T>) -> Su2Element<T>) -> Self {
        let cols: [Su2Element<T>; 3] = std::array::from_fn(|a| f(&self.column(a)));
        Self::from_columns(&cols)
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().flatten().all(|x| x.is_zero())
    }
}

impl InvariantOneForm<f64> {
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl<T: Scalar> Add for InvariantOneForm<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::from_fn(|i, a| self.c[i][a].clone() + o.c[i][a].clone())
    }
}

impl<T: Scalar> Sub for InvariantOneForm<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::from_fn(|i, a| self.c[i][a].clone() - o.c[i][a].clone())
    }
}

impl<T: Scalar> Neg for InvariantOneForm<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::from_fn(|i, a| -self.c[i][a].clone())
    }
}

impl<'a, T: Scalar> Add for &'a InvariantOneForm<T> {
    type Output = InvariantOneForm<T>;
    fn add(self, o: Self) -> InvariantOneForm<T> {
        InvariantOneForm::from_fn(|i, a| self.c[i][a].clone() + o.c[i][a].clone())
    }
}

impl<'a, T: Scalar> Sub for &'a InvariantOneForm<T> {
    type Output = InvariantOneForm<T>;
    fn sub(self, o: Self) -> InvariantOneForm<T> {
        InvariantOneForm::from_fn(|i, a| self.c[i][a].clone() - o.c[i][a].clone())
    }
}

/// Invariant 2-form on S³ × ℝ⁺: `Σ T[i][a] tᵢ ⋆eₐ + Σ N[i][a] tᵢ dy∧eₐ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantTwoForm<T = f64> {
    pub tangential: InvariantOneForm<T>,
    pub normal: InvariantOneForm<T>,
}

impl<T: Scalar> InvariantTwoForm<T> {
    pub fn zero() -> Self {
        Self {
            tangential: InvariantOneForm::zero(),
            normal: InvariantOneForm::zero(),
        }
    }

    pub fn tangential(t: InvariantOneForm<T>) -> Self {
        Self {
            tangential: t,
            normal: InvariantOneForm::zero(),
        }
    }

    /// S³ Hodge star of the tangential part, as a 1-form.
    pub fn star3(&self) -> InvariantOneForm<T> {
        self.tangential.clone()
    }

    pub fn norm_sq(&self) -> T {
        self.tangential.norm_sq() + self.normal.norm_sq()
    }

    pub fn scale(&self, k: &T) -> Self {
        Self {
            tangential: self.tangential.scale(k),
            normal: self.normal.scale(k),
        }
    }
}

impl InvariantTwoForm<f64> {
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

impl<T: Scalar> Add for InvariantTwoForm<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            tangential: self.tangential + o.tangential,
            normal: self.normal + o.normal,
        }
    }
}

impl<T: Scalar> Sub for InvariantTwoForm<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            tangential: self.tangential - o.tangential,
            normal: self.normal - o.normal,
        }
    }
}

impl<T: Scalar> Neg for InvariantTwoForm<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            tangential: -self.tangential,
            normal: -self.normal,
        }
    }
}

/// `*₃[u ∧ v]` for tangential 1-forms, i.e. the S³ dual of `u∧v + v∧u`.
///
/// Entry `(k, d)` is `Σ εᵢⱼₖ εₐᵦd u[i][a] v[j][b]`, the polarized cofactor.
pub fn bracket_dual<T: Scalar>(u: &InvariantOneForm<T>, v: &InvariantOneForm<T>) -> InvariantOneForm<T> {
    InvariantOneForm::from_fn(|k, d| {
        let (k1, k2) = ((k + 1) % 3, (k + 2) % 3);
        let (d1, d2) = ((d + 1) % 3, (d + 2) % 3);
        u.c[k1][d1].clone() * v.c[k2][d2].clone() - u.c[k1][d2].clone() * v.c[k2][d1].clone()
            - u.c[k2][d1].clone() * v.c[k1][d2].clone()
            + u.c[k2][d2].clone() * v.c[k1][d1].clone()
    })
}

/// Graded bracket `[u ∧ v] = u∧v + v∧u` of two tangential 1-forms.
pub fn wedge_bracket<T: Scalar>(u: &InvariantOneForm<T>, v: &InvariantOneForm<T>) -> InvariantTwoForm<T> {
    InvariantTwoForm::tangential(bracket_dual(u, v))
}

/// `u ∧ u`, which is su(2)-valued and equals `½[u ∧ u]`.
pub fn wedge_square<T: Scalar>(u: &InvariantOneForm<T>) -> InvariantTwoForm<T> {
    InvariantTwoForm::tangential(bracket_dual(u, u).scale(&T::half()))
}

/// `−tr(u ∧ v)` for a tangential 1-form `u` and tangential 2-form `v`, as a
/// multiple of the S³ volume form.
pub fn trace_pairing<T: Scalar>(u: &InvariantOneForm<T>, v: &InvariantTwoForm<T>) -> T {
    u.inner(&v.tangential)
}

/// `−tr(u ∧ u ∧ u)` as a multiple of the S³ volume form; equals `(3/2) det c`.
pub fn trace_cube<T: Scalar>(u: &InvariantOneForm<T>) -> T {
    trace_pairing(u, &wedge_square(u))
}

/// `tr(F ∧ F)` for an invariant 2-form, as a multiple of `dy ∧ vol(S³)`.
pub fn trace_square<T: Scalar>(f: &InvariantTwoForm<T>) -> T {
    -f.normal.frobenius(&f.tangential)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;
    use num_rational::BigRational;
    use proptest::prelude::*;

    type Q = BigRational;

    fn q(n: i64) -> Q {
        Q::int(n)
    }

    #[test]
    fn omega_norm_is_three_halves() {
        assert_eq!(InvariantOneForm::<Q>::omega().norm_sq(), rational(3, 2));
    }

    #[test]
    fn omega_bracket_and_square() {
        let w = InvariantOneForm::<Q>::omega();
        assert_eq!(wedge_bracket(&w, &w).star3(), w.scale(&q(2)));
        assert_eq!(wedge_square(&w).star3(), w);
        assert!(wedge_bracket(&w, &InvariantOneForm::zero()).star3().is_zero());
    }

    #[test]
    fn cube_is_three_halves_det() {
        let u = InvariantOneForm::<Q>::from_fn(|i, a| rational((i * 3 + a) as i64 % 5 - 2, 1 + (i + a) as i64 % 2));
        let det = {
            let c = &u.c;
            c[0][0].clone() * (c[1][1].clone() * c[2][2].clone() - c[1][2].clone() * c[2][1].clone())
                - c[0][1].clone() * (c[1][0].clone() * c[2][2].clone() - c[1][2].clone() * c[2][0].clone())
                + c[0][2].clone() * (c[1][0].clone() * c[2][1].clone() - c[1][1].clone() * c[2][0].clone())
        };
        assert_eq!(trace_cube(&u), det * rational(3, 2));
    }

    fn form() -> impl Strategy<Value = InvariantOneForm<Q>> {
        proptest::array::uniform9(-6i64..=6).prop_map(|v| InvariantOneForm::from_fn(|i, a| q(v[3 * i + a])))
    }

    // Direct expansion over the Levi-Civita symbols, independent of the cofactor shortcut.
    fn brute_bracket(u: &InvariantOneForm<Q>, v: &InvariantOneForm<Q>) -> InvariantOneForm<Q> {
        fn eps(i: usize, j: usize, k: usize) -> i64 {
            match (i, j, k) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
                (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
                _ => 0,
            }
        }
        InvariantOneForm::from_fn(|k, d| {
            let mut acc = q(0);
            for i in 0..3 {
                for j in 0..3 {
                    for a in 0..3 {
                        for b in 0..3 {
                            let s = eps(i, j, k) * eps(a, b, d);
                            if s != 0 {
                                acc = acc + u.c[i][a].clone() * v.c[j][b].clone() * q(s);
                            }
                        }
                    }
                }
            }
            acc
        })
    }

    proptest! {
        #[test]
        fn bracket_matches_levi_civita_expansion(u in form(), v in form()) {
            prop_assert_eq!(bracket_dual(&u, &v), brute_bracket(&u, &v));
        }

        #[test]
        fn bracket_symmetric_on_one_forms(u in form(), v in form()) {
            prop_assert_eq!(wedge_bracket(&u, &v), wedge_bracket(&v, &u));
            prop_assert_eq!(wedge_square(&u).scale(&q(2)), wedge_bracket(&u, &u));
        }
    }
}
