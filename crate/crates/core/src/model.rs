//! Parameters, coefficient functions and the scalar kinetics of the limit problem
//!
//! ```text
//! -w'' = lambda w - (b mu / d) w / (1 + w),   w'(0) = w'(1) = 0
//! ```
//!
//! obtained from the coupled system at `eps = 0` with the predator frozen at
//! `v = mu / d`.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A non-negative coefficient function on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CoeffFn {
    Constant { value: f64 },
    /// Piecewise-linear interpolation of `(xs[i], ys[i])`.
    Sampled { xs: Vec<f64>, ys: Vec<f64> },
}

impl CoeffFn {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidParam {
                op: "CoeffFn::constant",
                name: "value",
                reason: format!("must be finite and non-negative, got {value}"),
            });
        }
        Ok(CoeffFn::Constant { value })
    }

    pub fn sampled(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let bad = |reason: String| Error::Table(reason);
        if xs.len() != ys.len() {
            return Err(bad(format!("{} abscissae but {} values", xs.len(), ys.len())));
        }
        if xs.len() < 2 {
            return Err(bad("need at least two samples".into()));
        }
        if xs[0] != 0.0 || xs[xs.len() - 1] != 1.0 {
            return Err(bad("abscissae must start at 0 and end at 1".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(bad("abscissae must be strictly ascending".into()));
        }
        if ys.iter().any(|y| !(y.is_finite() && *y >= 0.0)) {
            return Err(bad("values must be finite and non-negative".into()));
        }
        if ys.iter().all(|y| *y == 0.0) {
            return Err(bad("coefficient is identically zero".into()));
        }
        Ok(CoeffFn::Sampled { xs, ys })
    }

    /// Loads a two-column `x,value` table. A header row is optional.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Table(e.to_string()))?;
            if record.len() < 2 {
                return Err(Error::Table(format!("row {}: expected two columns", row + 1)));
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(x), Ok(y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                // header
                _ if row == 0 => continue,
                _ => return Err(Error::Table(format!("row {}: not numeric", row + 1))),
            }
        }
        Self::sampled(xs, ys)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Table(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_reader(file)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CoeffFn::Constant { value } => *value,
            CoeffFn::Sampled { xs, ys } => {
                let x = x.clamp(0.0, 1.0);
                let j = match xs.partition_point(|&xi| xi <= x) {
                    0 => 0,
                    k if k >= xs.len() => xs.len() - 2,
                    k => k - 1,
                };
                let t = (x - xs[j]) / (xs[j + 1] - xs[j]);
                ys[j] + t * (ys[j + 1] - ys[j])
            }
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            CoeffFn::Constant { value } => Some(*value),
            CoeffFn::Sampled { .. } => None,
        }
    }

    /// Samples the coefficient on the uniform grid with `n_points` nodes.
    pub fn sample(&self, n_points: usize) -> Vec<f64> {
        let h = 1.0 / (n_points - 1) as f64;
        (0..n_points).map(|i| self.eval(i as f64 * h)).collect()
    }
}

/// Model parameters. `eps = 1/gamma` is the inverse saturation rate; `eps = 0`
/// is the limit system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub b: f64,
    pub d: f64,
    pub lambda: f64,
    pub mu: f64,
    pub eps: f64,
    pub coeff_a: CoeffFn,
    pub coeff_c: CoeffFn,
}

impl ModelParams {
    /// Parameters with `a = c = 1` and `eps = 0`.
    pub fn new(b: f64, d: f64, lambda: f64, mu: f64) -> Result<Self> {
        let p = ModelParams {
            b,
            d,
            lambda,
            mu,
            eps: 0.0,
            coeff_a: CoeffFn::Constant { value: 1.0 },
            coeff_c: CoeffFn::Constant { value: 1.0 },
        };
        p.validate()?;
        Ok(p)
    }

    /// The desk-scale configuration used throughout the tests:
    /// `b = d = 1`, `a = c = 1`, `mu = 50`, `lambda = 25`.
    pub fn desk() -> Self {
        Self::new(1.0, 1.0, 25.0, 50.0).expect("desk parameters are valid")
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        ModelParams {
            lambda,
            ..self.clone()
        }
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        ModelParams { mu, ..self.clone() }
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        ModelParams { eps, ..self.clone() }
    }

    pub fn with_coeffs(&self, coeff_a: CoeffFn, coeff_c: CoeffFn) -> Self {
        ModelParams {
            coeff_a,
            coeff_c,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, v: f64, ok: bool, what: &str| {
            if v.is_finite() && ok {
                Ok(())
            } else {
                Err(Error::InvalidParam {
                    op: "ModelParams",
                    name,
                    reason: format!("{what}, got {v}"),
                })
            }
        };
        check("b", self.b, self.b > 0.0, "must be positive")?;
        check("d", self.d, self.d > 0.0, "must be positive")?;
        check("lambda", self.lambda, true, "must be finite")?;
        check("mu", self.mu, true, "must be finite")?;
        check("eps", self.eps, self.eps >= 0.0, "must be non-negative")?;
        Ok(())
    }

    /// `b mu / d`, the right end of the admissible lambda range.
    pub fn beta(&self) -> f64 {
        self.b * self.mu / self.d
    }

    /// Saturation rate `gamma = 1/eps`, infinite for the limit system.
    pub fn gamma(&self) -> f64 {
        if self.eps == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.eps
        }
    }

    /// Checks `mu > 0` and `0 < lambda < b mu / d`.
    pub fn require_window(&self, op: &'static str) -> Result<()> {
        self.validate()?;
        if !(self.mu > 0.0) {
            return Err(domain(op, format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.lambda > 0.0 && self.lambda < self.beta()) {
            return Err(domain(
                op,
                format!(
                    "lambda = {} outside (0, b mu/d) = (0, {})",
                    self.lambda,
                    self.beta()
                ),
            ));
        }
        Ok(())
    }
}

/// The constant positive solution `w_0 = b mu/(d lambda) - 1`.
pub fn w0_const(p: &ModelParams) -> Result<f64> {
    p.require_window("w0_const")?;
    Ok(p.beta() / p.lambda - 1.0)
}

/// A point of the phase plane of `w' = z, z' = -f(w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub w: f64,
    pub z: f64,
}

fn check_w(op: &'static str, w: f64) -> Result<()> {
    if w > -1.0 {
        Ok(())
    } else {
        Err(domain(op, format!("w = {w} must exceed -1")))
    }
}

/// `f(w) = lambda w - (b mu/d) w/(1+w)`.
pub fn kinetic_f(w: f64, p: &ModelParams) -> Result<f64> {
    check_w("kinetic_f", w)?;
    Ok(f_raw(w, p.lambda, p.beta()))
}

pub fn kinetic_df(w: f64, p: &ModelParams) -> Result<f64> {
    check_w("kinetic_df", w)?;
    Ok(df_raw(w, p.lambda, p.beta()))
}

pub fn kinetic_d2f(w: f64, p: &ModelParams) -> Result<f64> {
    check_w("kinetic_d2f", w)?;
    Ok(d2f_raw(w, p.beta()))
}

pub fn kinetic_d3f(w: f64, p: &ModelParams) -> Result<f64> {
    check_w("kinetic_d3f", w)?;
    Ok(d3f_raw(w, p.beta()))
}

/// `F(w) = (lambda/2) w^2 - (b mu/d)(w - ln(1+w))`, so that `F' = f`.
pub fn potential_f(w: f64, p: &ModelParams) -> Result<f64> {
    check_w("potential_F", w)?;
    Ok(potential_raw(w, p.lambda, p.beta()))
}

/// Total energy `z^2/2 + F(w)`.
pub fn energy(s: PhaseState, p: &ModelParams) -> Result<f64> {
    Ok(0.5 * s.z * s.z + potential_f(s.w, p)?)
}

#[inline]
pub(crate) fn f_raw(w: f64, lambda: f64, beta: f64) -> f64 {
    lambda * w - beta * w / (1.0 + w)
}

#[inline]
pub(crate) fn df_raw(w: f64, lambda: f64, beta: f64) -> f64 {
    let s = 1.0 + w;
    lambda - beta / (s * s)
}

#[inline]
pub(crate) fn d2f_raw(w: f64, beta: f64) -> f64 {
    let s = 1.0 + w;
    2.0 * beta / (s * s * s)
}

#[inline]
pub(crate) fn d3f_raw(w: f64, beta: f64) -> f64 {
    let s = 1.0 + w;
    -6.0 * beta / (s * s * s * s)
}

#[inline]
pub(crate) fn potential_raw(w: f64, lambda: f64, beta: f64) -> f64 {
    0.5 * lambda * w * w - beta * (w - w.ln_1p())
}
