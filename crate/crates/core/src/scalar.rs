//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating point type the planner can run on: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance used for probability-mass checks (weights summing to one, table rows).
    fn mass_tolerance() -> Self;

    /// Converts an `f64` literal. Panics only for values the type cannot represent at all.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn mass_tolerance() -> Self {
        1e-4
    }
}

impl Scalar for f64 {
    fn mass_tolerance() -> Self {
        1e-9
    }
}

/// Smallest value a likelihood product may take inside a logarithm.
pub fn log_floor<T: Scalar>() -> T {
    // 1e-300 underflows in f32; fall back to the smallest positive normal there.
    T::from_f64(1e-300)
        .filter(|v| *v > T::zero())
        .unwrap_or_else(T::min_positive_value)
}

/// Draws one standard normal variate in `T`.
#[inline]
pub fn standard_normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Draws a uniform variate in `[0, 1)`.
#[inline]
pub fn unit_uniform<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.random::<f64>())
}

/// `argmax` with ties broken towards the lowest index. `None` on an empty iterator.
pub fn argmax_by_key<I, T>(items: I) -> Option<usize>
where
    I: IntoIterator<Item = T>,
    T: PartialOrd,
{
    let mut best: Option<(usize, T)> = None;
    for (i, v) in items.into_iter().enumerate() {
        match &best {
            Some((_, b)) if !(v > *b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// `argmin` with ties broken towards the lowest index.
pub fn argmin_by_key<I, T>(items: I) -> Option<usize>
where
    I: IntoIterator<Item = T>,
    T: PartialOrd,
{
    let mut best: Option<(usize, T)> = None;
    for (i, v) in items.into_iter().enumerate() {
        match &best {
            Some((_, b)) if !(v < *b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arg_extrema_prefer_lowest_index() {
        assert_eq!(argmax_by_key([1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmin_by_key([2, 1, 1, 5]), Some(1));
        assert_eq!(argmax_by_key(Vec::<f64>::new()), None);
    }

    #[test]
    fn log_floor_is_positive_for_both_widths() {
        assert!(log_floor::<f32>() > 0.0);
        assert_eq!(log_floor::<f64>(), 1e-300);
    }
}
