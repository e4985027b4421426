//! Exact coefficients of the spiraling-orbit asymptotic series.
//!
//! Substituting
//!
//! ```text
//! r(t) = (M²/c) e^{-2δt} ρ(x),    x = δ² (M⁶/c⁴) e^{-6δt}
//! ```
//!
//! into the radial equation multiplied through by `r³`,
//! `r³r'' + δr³r' + c r − M² e^{-2δt} = 0`, and using `d/dt = −δ(2 + 6x d/dx)`
//! on `e^{-2δt} ρ(x)`, every power of δ, M, c and every exponential cancels.
//! What remains is a parameter-free equation in `x` alone:
//!
//! ```text
//! x ρ³ (2 + 6D)(1 + 6D) ρ + ρ − 1 = 0,     D = x d/dx
//! ```
//!
//! Writing `ρ = Σ (−1)ⁿ Cₙ xⁿ`, the coefficient of `xⁿ` is linear in `Cₙ`
//! given `C₀ … Cₙ₋₁`, so the `Cₙ` follow one at a time in exact arithmetic.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("truncation order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
}

/// `p` when the denominator is one, `p/q` otherwise.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Truncated power series `Σ_{n=0}^{N} aₙ xⁿ + O(x^{N+1})` over the rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalSeries {
    coeffs: Vec<Rational>,
}

impl RationalSeries {
    /// Series with the given coefficients; the truncation order is `len − 1`.
    ///
    /// # Panics
    /// If `coeffs` is empty.
    pub fn new(coeffs: Vec<Rational>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the constant coefficient");
        RationalSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        RationalSeries { coeffs: vec![Rational::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = Rational::one();
        s
    }

    /// A polynomial viewed as a series of the given order: coefficients past
    /// the polynomial's degree are exactly zero, those past `order` are dropped.
    pub fn from_polynomial(poly: &[Rational], order: usize) -> Self {
        let mut s = Self::zero(order);
        for (slot, c) in s.coeffs.iter_mut().zip(poly) {
            *slot = c.clone();
        }
        s
    }

    pub fn from_integers(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| rat(c)).collect())
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> &Rational {
        &self.coeffs[n]
    }

    fn same_order(&self, other: &Self) -> Result<(), SeriesError> {
        if self.order() != other.order() {
            return Err(SeriesError::OrderMismatch { left: self.order(), right: other.order() });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.same_order(other)?;
        Ok(Self::new(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.same_order(other)?;
        Ok(Self::new(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect()))
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.same_order(other)?;
        let n = self.order();
        let mut out = vec![Rational::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs[..=n - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(Self::new(out))
    }

    pub fn scalar_mul(&self, k: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * k).collect())
    }

    /// `d/dx`, lowering the order by one (an order-0 series maps to zero).
    pub fn x_derivative(&self) -> Self {
        if self.order() == 0 {
            return Self::zero(0);
        }
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(n, a)| a * rat(n as i64)).collect())
    }

    /// Euler operator `x d/dx`, keeping the order.
    pub fn euler(&self) -> Self {
        Self::new(self.coeffs.iter().enumerate().map(|(n, a)| a * rat(n as i64)).collect())
    }

    /// Multiply by `x`, keeping the order (the top coefficient falls off).
    pub fn shift_up(&self) -> Self {
        let mut out = Vec::with_capacity(self.coeffs.len());
        out.push(Rational::zero());
        out.extend(self.coeffs[..self.order()].iter().cloned());
        Self::new(out)
    }

    /// Index of the first nonzero coefficient, if any.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }
}

impl fmt::Display for RationalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (n, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match n {
                0 => write!(f, "{}", format_rational(c))?,
                1 => write!(f, "({})x", format_rational(c))?,
                _ => write!(f, "({})x^{n}", format_rational(c))?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(x^{})", self.order() + 1)
    }
}

/// The list `C₀ … C_N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpiralCoefficients {
    pub c: Vec<Rational>,
}

impl SpiralCoefficients {
    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    /// Coefficients `(−1)ⁿ Cₙ` of `ρ(x)`.
    pub fn rho_coeffs(&self) -> Vec<Rational> {
        self.c.iter().enumerate().map(|(n, c)| if n % 2 == 1 { -c } else { c.clone() }).collect()
    }

    pub fn as_strings(&self) -> Vec<String> {
        self.c.iter().map(format_rational).collect()
    }
}

/// `x ρ³ (2 + 6D)(1 + 6D) ρ + ρ − 1` at the order of `rho`.
pub fn residual(rho: &RationalSeries) -> RationalSeries {
    let n = rho.order();
    let d1 = rho.euler();
    let d2 = d1.euler();
    // (2 + 6D)(1 + 6D) = 2 + 18D + 36D²
    let op = rho
        .scalar_mul(&rat(2))
        .add(&d1.scalar_mul(&rat(18)))
        .and_then(|s| s.add(&d2.scalar_mul(&rat(36))))
        .expect("orders agree");
    let cube = rho.mul(rho).and_then(|sq| sq.mul(rho)).expect("orders agree");
    let nonlinear = cube.mul(&op).expect("orders agree").shift_up();
    nonlinear.add(rho).and_then(|s| s.sub(&RationalSeries::one(n))).expect("orders agree")
}

/// Solve for `C₀ … C_N` order by order.
///
/// At order `n` the residual coefficient is affine in `ρₙ`; its slope (the
/// pivot) is measured by evaluating the residual with `ρₙ = 0` and `ρₙ = 1`.
///
/// # Panics
/// If a pivot vanishes, which would mean the expansion cannot be continued.
pub fn spiral_coefficients(order: usize) -> SpiralCoefficients {
    let mut rho: Vec<Rational> = Vec::with_capacity(order + 1);
    for n in 0..=order {
        rho.push(Rational::zero());
        let base = residual(&RationalSeries::from_polynomial(&rho, n)).coeff(n).clone();
        rho[n] = Rational::one();
        let unit = residual(&RationalSeries::from_polynomial(&rho, n)).coeff(n).clone();
        let pivot = &unit - &base;
        assert!(!pivot.is_zero(), "zero pivot at order {n}: the spiral recursion cannot continue");
        rho[n] = -base / pivot;
    }
    let c = rho.into_iter().enumerate().map(|(n, r)| if n % 2 == 1 { -r } else { r }).collect();
    SpiralCoefficients { c }
}

/// Lowest power of `x` with a nonzero coefficient in the residual of the
/// truncated `ρ`, computed at working order `N + 2`. `None` if the residual
/// vanishes through that order.
pub fn residual_order(coeffs: &SpiralCoefficients) -> Option<usize> {
    let rho = RationalSeries::from_polynomial(&coeffs.rho_coeffs(), coeffs.order() + 2);
    residual(&rho).valuation()
}

/// Truncated series evaluated in floating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Approximant {
    pub r: f64,
    pub rdot: f64,
    /// Expansion variable `δ²(M⁶/c⁴)e^{−6δt}`; the series is meaningful for `x ≪ 1`.
    pub x: f64,
}

pub fn evaluate_approximant(coeffs: &SpiralCoefficients, m: f64, c: f64, delta: f64, t: f64) -> Approximant {
    let x = delta * delta * m.powi(6) / c.powi(4) * (-6.0 * delta * t).exp();
    let lead = m * m / c * (-2.0 * delta * t).exp();
    let mut rho = 0.0;
    let mut drho = 0.0;
    let mut xn = 1.0;
    for (n, cn) in coeffs.rho_coeffs().iter().enumerate() {
        let term = cn.to_f64().unwrap_or(f64::NAN) * xn;
        rho += term;
        drho += (2.0 + 6.0 * n as f64) * term;
        xn *= x;
    }
    Approximant { r: lead * rho, rdot: -delta * lead * drho, x }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: usize,
    #[serde(rename = "C")]
    pub c: String,
    /// `Cₙ/Cₙ₋₁` exactly, absent for `n = 0`.
    pub ratio: Option<String>,
    pub ratio_value: Option<f64>,
    /// `Cₙ/(n! aⁿ)` with the fitted `a`.
    pub normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    /// Least-squares fit of `ln(Cₙ/n!) ≈ b + n ln a` over `n = 1..N`.
    pub fitted_a: Option<f64>,
    pub rows: Vec<GrowthRow>,
}

fn ln_big(q: &Rational) -> f64 {
    // ln(p/q) without overflowing f64 for huge integers
    fn ln_int(n: &BigInt) -> f64 {
        let bits = n.bits();
        if bits < 1000 {
            return n.to_f64().unwrap_or(f64::NAN).abs().ln();
        }
        let shift = bits - 60;
        let top: BigInt = n.abs() >> shift;
        top.to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
    }
    ln_int(q.numer()) - ln_int(q.denom())
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Growth diagnostics for the coefficient list: exact successive ratios and
/// the normalisation `Cₙ/(n! aⁿ)` for a fitted geometric factor `a`.
pub fn growth_report(coeffs: &SpiralCoefficients) -> GrowthReport {
    let n_max = coeffs.order();
    let pts: Vec<(f64, f64)> = (1..=n_max)
        .filter(|&n| coeffs.c[n].is_positive())
        .map(|n| (n as f64, ln_big(&coeffs.c[n]) - ln_factorial(n)))
        .collect();
    let fitted_a = (pts.len() >= 2).then(|| {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxy / sxx).exp()
    });

    let rows = coeffs
        .c
        .iter()
        .enumerate()
        .map(|(n, cn)| {
            let ratio = (n > 0 && !coeffs.c[n - 1].is_zero()).then(|| cn / &coeffs.c[n - 1]);
            let normalized = fitted_a.map(|a| {
                if cn.is_positive() {
                    (ln_big(cn) - ln_factorial(n) - n as f64 * a.ln()).exp()
                } else {
                    f64::NAN
                }
            });
            GrowthRow {
                n,
                c: format_rational(cn),
                ratio_value: ratio.as_ref().and_then(|q| q.to_f64()),
                ratio: ratio.as_ref().map(format_rational),
                normalized,
            }
        })
        .collect();
    GrowthReport { fitted_a, rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn product_truncates() {
        let a = RationalSeries::from_integers(&[1, 1, 0]);
        let b = RationalSeries::from_integers(&[1, -1, 0]);
        assert_eq!(a.mul(&b).unwrap(), RationalSeries::from_integers(&[1, 0, -1]));
        let a = RationalSeries::from_integers(&[1, 1]);
        assert_eq!(a.mul(&a).unwrap(), RationalSeries::from_integers(&[1, 2]));
    }

    #[test]
    fn derivatives() {
        let s = RationalSeries::from_integers(&[1, 0, 3]);
        assert_eq!(s.x_derivative(), RationalSeries::from_integers(&[0, 6]));
        assert_eq!(s.euler(), RationalSeries::from_integers(&[0, 0, 6]));
        assert_eq!(RationalSeries::from_integers(&[5]).x_derivative(), RationalSeries::zero(0));
        assert_eq!(s.shift_up(), RationalSeries::from_integers(&[0, 1, 0]));
    }

    #[test]
    fn order_mismatch_is_an_error() {
        let a = RationalSeries::from_integers(&[1, 2]);
        let b = RationalSeries::from_integers(&[1, 2, 3]);
        assert_eq!(a.mul(&b), Err(SeriesError::OrderMismatch { left: 1, right: 2 }));
        assert!(a.add(&b).is_err());
    }

    #[test]
    fn rational_formatting() {
        assert_eq!(format_rational(&q(124, 1)), "124");
        assert_eq!(format_rational(&q(6, 4)), "3/2");
        assert_eq!(format_rational(&q(-1, 3)), "-1/3");
        let s = RationalSeries::new(vec![q(1, 1), q(0, 1), q(-1, 2)]);
        assert_eq!(s.to_string(), "1 + (-1/2)x^2 + O(x^3)");
    }

    #[test]
    fn leading_coefficients() {
        let c = spiral_coefficients(2);
        assert_eq!(c.as_strings(), ["1", "2", "124"]);
        assert_eq!(spiral_coefficients(0).as_strings(), ["1"]);
    }

    #[test]
    fn frozen_coefficients() {
        // independently derived from the time-domain equation with δ=1/3, M=2, c=5/2
        let expected = [
            "1", "2", "124", "24008", "9448496", "6270523392", "6303469469248", "8943787343660544",
        ];
        assert_eq!(spiral_coefficients(7).as_strings(), expected);
    }

    #[test]
    fn residual_order_is_one_past_truncation() {
        for n in 0..=12 {
            assert_eq!(residual_order(&spiral_coefficients(n)), Some(n + 1), "N = {n}");
        }
    }

    #[test]
    fn optimal_truncation_moves_out_as_x_shrinks() {
        // smallest term |Cₙ xⁿ| marks where the asymptotic series should be cut
        let c = spiral_coefficients(20);
        let turning = |x: f64| {
            (0..=20)
                .min_by(|&a, &b| {
                    let ta = ln_big(&c.c[a]) + a as f64 * x.ln();
                    let tb = ln_big(&c.c[b]) + b as f64 * x.ln();
                    ta.total_cmp(&tb)
                })
                .unwrap()
        };
        let (a, b, d) = (turning(1e-2), turning(1e-3), turning(3e-4));
        assert!(a < b && b < d, "{a} {b} {d}");
        assert!((1..=3).contains(&a));
    }

    #[test]
    fn residual_order_contract() {
        assert_eq!(residual_order(&spiral_coefficients(0)), Some(1));
        let known = SpiralCoefficients { c: vec![q(1, 1), q(2, 1), q(124, 1)] };
        assert_eq!(residual_order(&known), Some(3));
        let perturbed = SpiralCoefficients { c: vec![q(1, 1), q(3, 1)] };
        assert_eq!(residual_order(&perturbed), Some(1));
        let wrong_c2 = SpiralCoefficients { c: vec![q(1, 1), q(2, 1), q(125, 1)] };
        assert_eq!(residual_order(&wrong_c2), Some(2));
    }

    #[test]
    fn approximant_without_damping_is_circular() {
        let c = spiral_coefficients(4);
        for t in [0.0, 1.0, 50.0] {
            let a = evaluate_approximant(&c, 1.3, 2.0, 0.0, t);
            assert_eq!(a.r, 1.3 * 1.3 / 2.0);
            assert_eq!(a.x, 0.0);
        }
    }

    #[test]
    fn approximant_leading_term_dominates_late() {
        let c = spiral_coefficients(3);
        let (m, cc, d) = (1.0, 1.0, 0.2);
        for t in [5.0, 10.0, 20.0] {
            let a = evaluate_approximant(&c, m, cc, d, t);
            let lead = m * m / cc * (-2.0 * d * t).exp();
            assert!(((a.r / lead) - 1.0).abs() <= 2.5 * a.x);
            assert!(((a.rdot / (-2.0 * d * lead)) - 1.0).abs() <= 10.0 * a.x);
        }
    }

    #[test]
    fn growth_table_small_order() {
        let g = growth_report(&spiral_coefficients(2));
        let ratios: Vec<_> = g.rows.iter().map(|r| r.ratio.clone()).collect();
        assert_eq!(ratios, [None, Some("2".to_string()), Some("62".to_string())]);
        assert!(g.fitted_a.is_some());
        let g = growth_report(&spiral_coefficients(3));
        assert_eq!(g.rows[3].ratio.as_deref(), Some("6002/31"));
    }

    #[test]
    fn growth_ratios_increase() {
        let g = growth_report(&spiral_coefficients(14));
        let r: Vec<f64> = g.rows.iter().filter_map(|r| r.ratio_value).collect();
        assert!(r.windows(2).all(|w| w[1] > w[0]));
        assert!(g.rows.iter().all(|r| r.normalized.is_some_and(f64::is_finite)));
    }

    #[test]
    fn ln_of_huge_integers() {
        let big = Rational::from_integer(BigInt::from(10).pow(400));
        assert!((ln_big(&big) - 400.0 * 10f64.ln()).abs() < 1e-9);
    }

    fn arb_series(order: usize) -> impl Strategy<Value = RationalSeries> {
        prop::collection::vec((-20i64..20, 1i64..9), order + 1)
            .prop_map(|v| RationalSeries::new(v.into_iter().map(|(n, d)| q(n, d)).collect()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn mul_is_associative(a in arb_series(5), b in arb_series(5), c in arb_series(5)) {
            let left = a.mul(&b).unwrap().mul(&c).unwrap();
            let right = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn mul_distributes_and_commutes(a in arb_series(4), b in arb_series(4), c in arb_series(4)) {
            prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
            let left = a.mul(&b.add(&c).unwrap()).unwrap();
            let right = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn euler_is_a_derivation(a in arb_series(5), b in arb_series(5)) {
            let left = a.mul(&b).unwrap().euler();
            let right = a.euler().mul(&b).unwrap().add(&a.mul(&b.euler()).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }
    }
}
