use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear function of time given by breakpoints `(t, value)`.
///
/// Outside the breakpoint range the end values are held.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct PiecewiseLinear {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(points: &[[f64; 2]]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("program needs at least one breakpoint".into()));
        }
        for w in points.windows(2) {
            if !(w[1][0] > w[0][0]) {
                return Err(Error::InvalidParameter(format!(
                    "program breakpoints must be strictly increasing in t ({} then {})",
                    w[0][0], w[1][0]
                )));
            }
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidParameter("program breakpoints must be finite".into()));
        }
        Ok(PiecewiseLinear {
            times: points.iter().map(|p| p[0]).collect(),
            values: points.iter().map(|p| p[1]).collect(),
        })
    }

    pub fn constant(value: f64) -> Self {
        PiecewiseLinear {
            times: vec![0.0],
            values: vec![value],
        }
    }

    /// Linear ramp from `v0` at `t0` to `v1` at `t1`.
    pub fn ramp(t0: f64, v0: f64, t1: f64, v1: f64) -> Result<Self> {
        Self::new(&[[t0, v0], [t1, v1]])
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.times.iter().zip(&self.values).map(|(&t, &v)| [t, v]).collect()
    }

    pub fn first_time(&self) -> f64 {
        self.times[0]
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let i = self.times.partition_point(|&x| x <= t);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Like [`eval`](Self::eval) but refuses times before the first breakpoint.
    pub fn eval_strict(&self, t: f64) -> Result<f64> {
        if t < self.times[0] {
            return Err(Error::BeforeWaveform { t, first: self.times[0] });
        }
        Ok(self.eval(t))
    }

    /// Slope at `t` (right derivative at breakpoints, zero outside the range).
    pub fn slope(&self, t: f64) -> f64 {
        let n = self.times.len();
        if n < 2 || t < self.times[0] || t >= self.times[n - 1] {
            return 0.0;
        }
        let i = self.times.partition_point(|&x| x <= t);
        (self.values[i] - self.values[i - 1]) / (self.times[i] - self.times[i - 1])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PiecewiseLinear {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

impl TryFrom<Vec<[f64; 2]>> for PiecewiseLinear {
    type Error = Error;

    fn try_from(points: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(&points)
    }
}

impl From<PiecewiseLinear> for Vec<[f64; 2]> {
    fn from(p: PiecewiseLinear) -> Self {
        p.points()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interpolates_and_holds_ends() {
        let p = PiecewiseLinear::new(&[[0.0, 0.0], [1.0, 1.0], [3.0, -1.0]]).unwrap();
        assert_eq!(p.eval(0.5), 0.5);
        assert_eq!(p.eval(2.0), 0.0);
        assert_eq!(p.eval(-1.0), 0.0);
        assert_eq!(p.eval(10.0), -1.0);
        assert_eq!(p.slope(0.5), 1.0);
        assert_eq!(p.slope(2.0), -1.0);
        assert_eq!(p.slope(5.0), 0.0);
    }

    #[test]
    fn strict_eval_rejects_early_times() {
        let p = PiecewiseLinear::ramp(1.0, 0.0, 2.0, 1.0).unwrap();
        assert!(matches!(p.eval_strict(0.5), Err(Error::BeforeWaveform { .. })));
        assert_eq!(p.eval_strict(1.5).unwrap(), 0.5);
    }

    #[test]
    fn rejects_unsorted_breakpoints() {
        assert!(PiecewiseLinear::new(&[[0.0, 1.0], [0.0, 2.0]]).is_err());
        assert!(PiecewiseLinear::new(&[]).is_err());
        assert!(serde_json::from_str::<PiecewiseLinear>("[[1.0, 0.0], [0.5, 1.0]]").is_err());
    }

    proptest! {
        #[test]
        fn stays_within_breakpoint_hull(vals in proptest::collection::vec(-10.0f64..10.0, 2..6), t in -1.0f64..8.0) {
            let pts: Vec<[f64; 2]> = vals.iter().enumerate().map(|(i, &v)| [i as f64, v]).collect();
            let p = PiecewiseLinear::new(&pts).unwrap();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let v = p.eval(t);
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }
}
