//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the library is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Number of mantissa bits, including the implicit one.
    const MANTISSA_DIGITS: u32;

    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable in every Real")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    const MANTISSA_DIGITS: u32 = f32::MANTISSA_DIGITS;
}

impl Real for f64 {
    const MANTISSA_DIGITS: u32 = f64::MANTISSA_DIGITS;
}

/// Neumaier compensated sum over a fixed iteration order.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(items: I) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for x in items {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp = comp + ((sum - t) + x);
        } else {
            comp = comp + ((x - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1.0e16, 1.0, -1.0e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
        let naive: f64 = xs.iter().sum();
        assert_ne!(naive, 2.0);
    }
}
