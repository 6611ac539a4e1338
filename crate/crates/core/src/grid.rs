//! Uniform closed grids on `[0, 1]` and the discrete operators shared by the
//! solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_POINTS: usize = 2001;

/// A function on `[0, 1]` sampled at `x_i = i / (n_points - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Profile {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Profile {
    type Error = crate::error::Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        Profile::new(values)
    }
}

impl From<Profile> for Vec<f64> {
    fn from(p: Profile) -> Vec<f64> {
        p.values
    }
}

impl Profile {
    /// `values.len()` must be odd and at least 3 so that `x = 1/2` is a node.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_points(values.len())?;
        Ok(Profile { values })
    }

    pub fn from_fn(n_points: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_points(n_points)?;
        let h = 1.0 / (n_points - 1) as f64;
        Ok(Profile {
            values: (0..n_points).map(|i| f(i as f64 * h)).collect(),
        })
    }

    pub fn constant(n_points: usize, value: f64) -> Result<Self> {
        Self::from_fn(n_points, |_| value)
    }

    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.values.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.step()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_dist(&self, other: &Profile) -> Result<f64> {
        same_grid(self, other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Composite Simpson rule over `[0, 1]`.
    pub fn integrate(&self) -> f64 {
        simpson(&self.values, self.step())
    }

    /// Number of sign changes of `self - reference` in `(0, 1)`.
    pub fn crossings(&self, reference: f64) -> usize {
        sign_changes(self.values.iter().map(|v| v - reference))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Profile {
        Profile {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl std::ops::Index<usize> for Profile {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

pub(crate) fn check_points(n: usize) -> Result<()> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidParam {
            op: "Profile",
            name: "n_points",
            reason: format!("must be odd and at least 3, got {n}"),
        });
    }
    Ok(())
}

pub(crate) fn same_grid(a: &Profile, b: &Profile) -> Result<()> {
    if a.n_points() != b.n_points() {
        return Err(Error::GridMismatch(a.n_points(), b.n_points()));
    }
    Ok(())
}

/// `-u''` at node `i` with centered differences and mirror ghost points.
///
/// Differences of neighbours are formed first so that smooth data is
/// differenced without cancellation.
#[inline]
pub(crate) fn neg_laplacian(u: &[f64], i: usize, inv_h2: f64) -> f64 {
    let n = u.len();
    if i == 0 {
        2.0 * (u[0] - u[1]) * inv_h2
    } else if i == n - 1 {
        2.0 * (u[n - 1] - u[n - 2]) * inv_h2
    } else {
        ((u[i] - u[i - 1]) - (u[i + 1] - u[i])) * inv_h2
    }
}

/// Fourth-order centered `-u''` with even reflection across both ends.
pub(crate) fn neg_laplacian4(u: &[f64], i: usize, inv_h2: f64) -> f64 {
    let n = u.len() as isize;
    let at = |k: isize| -> f64 {
        let k = if k < 0 {
            -k
        } else if k > n - 1 {
            2 * (n - 1) - k
        } else {
            k
        };
        u[k as usize]
    };
    let i = i as isize;
    let c = at(i);
    let d1 = (c - at(i - 1)) + (c - at(i + 1));
    let d2 = (c - at(i - 2)) + (c - at(i + 2));
    (16.0 * d1 - d2) * inv_h2 / 12.0
}

/// Composite Simpson rule; `values.len()` must be odd.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    debug_assert!(n >= 3 && n % 2 == 1);
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (values[0] + values[n - 1] + 4.0 * odd + 2.0 * even)
}

/// Counts sign changes; exact zeros are attributed to the following interval.
pub fn sign_changes(values: impl IntoIterator<Item = f64>) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for v in values {
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && v.signum() != last {
            count += 1;
        }
        last = v.signum();
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn profile_rejects_even_or_tiny_grids() {
        assert!(Profile::new(vec![0.0; 4]).is_err());
        assert!(Profile::new(vec![0.0; 1]).is_err());
        assert!(Profile::new(vec![0.0; 5]).is_ok());
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let p = Profile::from_fn(11, |x| x * x * x - 2.0 * x + 1.0).unwrap();
        assert!((p.integrate() - (0.25 - 1.0 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn laplacian_of_cosine() {
        let p = Profile::from_fn(401, |x| (2.0 * PI * x).cos()).unwrap();
        let inv_h2 = 1.0 / (p.step() * p.step());
        for i in [0, 1, 57, 200, 399, 400] {
            let exact = 4.0 * PI * PI * p[i];
            assert!((neg_laplacian(p.values(), i, inv_h2) - exact).abs() < 2e-3);
            assert!((neg_laplacian4(p.values(), i, inv_h2) - exact).abs() < 1e-6);
        }
    }

    #[test]
    fn sign_change_rules() {
        assert_eq!(sign_changes([1.0, -1.0, 1.0]), 2);
        assert_eq!(sign_changes([1.0, 0.0, -1.0]), 1);
        assert_eq!(sign_changes([1.0, 0.0, 1.0]), 0);
        assert_eq!(sign_changes([0.0, 0.0]), 0);
        let p = Profile::from_fn(101, |x| (3.0 * PI * x).cos()).unwrap();
        assert_eq!(p.crossings(0.0), 3);
    }
}
