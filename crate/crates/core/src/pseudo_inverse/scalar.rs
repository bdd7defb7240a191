use serde::{Deserialize, Serialize};

use crate::error::{GenInvError, Result};

/// A real function of one variable with a known pseudo-inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scalar1DOperator {
    /// `v²`
    Square,
    /// `(v - a)²`, `a ≠ 0`
    ShiftedSquare { a: f64 },
    /// `max(v, 0)`
    Relu,
    /// `v · 1{|v| ≥ a}`
    HardThreshold { a: f64 },
    /// `sgn(v) · max(|v| - a, 0)`
    SoftThreshold { a: f64 },
    Tanh,
    /// `sgn(v)` with `sgn(0) = 0`
    Sign,
    /// `min(1, max(-1, v/ε))`
    SignEps { eps: f64 },
    Exp,
    Sine,
    /// `c · v`
    Linear { c: f64 },
    /// Piecewise-linear interpolation through `(xs[i], ys[i])`, constant
    /// beyond the end points.
    Sampled { xs: Vec<f64>, ys: Vec<f64> },
}

/// Value of a pseudo-inverse at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PinvValue {
    Value(f64),
    /// No nearest point of the image exists, or its source set has no
    /// smallest-norm element.
    Undefined,
    /// Both `+x` and `-x` attain the minimum.
    Nonunique(f64),
}

impl PinvValue {
    /// The value, taking the negative branch of a `±` pair.
    pub fn representative(&self) -> Option<f64> {
        match *self {
            PinvValue::Value(x) => Some(x),
            PinvValue::Nonunique(x) => Some(-x),
            PinvValue::Undefined => None,
        }
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Scalar1DOperator {
    pub fn name(&self) -> &'static str {
        use Scalar1DOperator::*;
        match self {
            Square => "square",
            ShiftedSquare { .. } => "shifted_square",
            Relu => "relu",
            HardThreshold { .. } => "hard_threshold",
            SoftThreshold { .. } => "soft_threshold",
            Tanh => "tanh",
            Sign => "sign",
            SignEps { .. } => "sign_eps",
            Exp => "exp",
            Sine => "sine",
            Linear { .. } => "linear",
            Sampled { .. } => "sampled",
        }
    }

    pub fn validate(&self) -> Result<()> {
        use Scalar1DOperator::*;
        let bad = |m: &str| Err(GenInvError::invalid(format!("{}: {m}", self.name())));
        match self {
            ShiftedSquare { a } if !a.is_finite() || *a == 0.0 => bad("a must be finite and nonzero"),
            HardThreshold { a } | SoftThreshold { a } if !a.is_finite() || *a < 0.0 => {
                bad("a must be finite and non-negative")
            }
            SignEps { eps } if !eps.is_finite() || *eps <= 0.0 => bad("eps must be positive"),
            Linear { c } if !c.is_finite() => bad("c must be finite"),
            Sampled { xs, ys } => {
                if xs.is_empty() || xs.len() != ys.len() {
                    return bad("xs and ys must be nonempty and of equal length");
                }
                if xs.iter().chain(ys).any(|x| !x.is_finite()) {
                    return bad("samples must be finite");
                }
                if xs.windows(2).any(|p| p[0] >= p[1]) {
                    return bad("xs must be strictly increasing");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Whether the pseudo-inverse is single-valued everywhere it is defined.
    pub fn is_unique(&self) -> bool {
        !matches!(self, Scalar1DOperator::Square)
    }

    pub fn eval(&self, v: f64) -> f64 {
        use Scalar1DOperator::*;
        match self {
            Square => v * v,
            ShiftedSquare { a } => (v - a) * (v - a),
            Relu => v.max(0.0),
            HardThreshold { a } => {
                if v.abs() >= *a {
                    v
                } else {
                    0.0
                }
            }
            SoftThreshold { a } => sgn(v) * (v.abs() - a).max(0.0),
            Tanh => v.tanh(),
            Sign => sgn(v),
            SignEps { eps } => (v / eps).clamp(-1.0, 1.0),
            Exp => v.exp(),
            Sine => v.sin(),
            Linear { c } => c * v,
            Sampled { xs, ys } => {
                let n = xs.len();
                if v <= xs[0] {
                    return ys[0];
                }
                if v >= xs[n - 1] {
                    return ys[n - 1];
                }
                let i = xs.partition_point(|&x| x <= v) - 1;
                let t = (v - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + t * (ys[i + 1] - ys[i])
            }
        }
    }

    pub fn pinv(&self, w: f64) -> PinvValue {
        closed_form_pinv(self, w)
    }
}

/// Exact pseudo-inverse of a scalar operator at `w`.
pub fn closed_form_pinv(op: &Scalar1DOperator, w: f64) -> PinvValue {
    use PinvValue::*;
    use Scalar1DOperator::*;
    if w.is_nan() {
        return Undefined;
    }
    match op {
        Square => {
            let r = w.max(0.0).sqrt();
            if r > 0.0 {
                Nonunique(r)
            } else {
                Value(0.0)
            }
        }
        ShiftedSquare { a } => Value(a - sgn(*a) * w.max(0.0).sqrt()),
        Relu => Value(w.max(0.0)),
        HardThreshold { a } => {
            if w.abs() > a / 2.0 {
                Value(sgn(w) * a.max(w.abs()))
            } else {
                Value(0.0)
            }
        }
        SoftThreshold { a } => Value(sgn(w) * (w.abs() + a)),
        Tanh => {
            if w.abs() < 1.0 {
                Value(w.atanh())
            } else {
                Undefined
            }
        }
        Sign => {
            if w.abs() <= 0.5 {
                Value(0.0)
            } else {
                Undefined
            }
        }
        SignEps { eps } => Value(eps * w.clamp(-1.0, 1.0)),
        Exp => {
            if w > 0.0 {
                Value(w.ln())
            } else {
                Undefined
            }
        }
        Sine => Value(w.clamp(-1.0, 1.0).asin()),
        Linear { c } => {
            if *c == 0.0 {
                Value(0.0)
            } else {
                Value(w / c)
            }
        }
        Sampled { xs, ys } => sampled_pinv(xs, ys, w),
    }
}

fn sampled_pinv(xs: &[f64], ys: &[f64], w: f64) -> PinvValue {
    let n = xs.len();
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let target = w.clamp(lo, hi);
    let mut candidates = Vec::new();
    if ys[0] == target {
        candidates.push(xs[0].min(0.0));
    }
    if ys[n - 1] == target {
        candidates.push(xs[n - 1].max(0.0));
    }
    for i in 0..n.saturating_sub(1) {
        let (x0, x1, y0, y1) = (xs[i], xs[i + 1], ys[i], ys[i + 1]);
        if y0 == y1 {
            if y0 == target {
                candidates.push(0.0f64.clamp(x0, x1));
            }
        } else if (y0.min(y1)..=y0.max(y1)).contains(&target) {
            candidates.push(x0 + (target - y0) / (y1 - y0) * (x1 - x0));
        }
    }
    let best = candidates.iter().copied().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let tol = 1e-12 * (1.0 + best);
    let neg = candidates.iter().any(|&v| (v + best).abs() <= tol);
    let pos = candidates.iter().any(|&v| (v - best).abs() <= tol);
    match (neg, pos) {
        (true, true) if best > tol => PinvValue::Nonunique(best),
        (true, false) => PinvValue::Value(-best),
        _ => PinvValue::Value(best),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Scalar1DOperator::*;

    #[test]
    fn table_examples() {
        assert_eq!(closed_form_pinv(&Relu, -3.0), PinvValue::Value(0.0));
        assert_eq!(closed_form_pinv(&HardThreshold { a: 2.0 }, 1.5), PinvValue::Value(2.0));
        assert_eq!(closed_form_pinv(&SoftThreshold { a: 1.0 }, 2.0), PinvValue::Value(3.0));
        assert_eq!(closed_form_pinv(&SignEps { eps: 0.5 }, 2.0), PinvValue::Value(0.5));
        assert_eq!(closed_form_pinv(&ShiftedSquare { a: 3.0 }, 4.0), PinvValue::Value(1.0));
        assert_eq!(closed_form_pinv(&Exp, -1.0), PinvValue::Undefined);
        assert_eq!(closed_form_pinv(&Tanh, 1.0), PinvValue::Undefined);
        assert_eq!(closed_form_pinv(&Sign, 0.6), PinvValue::Undefined);
        assert_eq!(closed_form_pinv(&Sign, -0.5), PinvValue::Value(0.0));
        assert_eq!(closed_form_pinv(&Square, 4.0), PinvValue::Nonunique(2.0));
        assert_eq!(closed_form_pinv(&Square, -1.0), PinvValue::Value(0.0));
        assert_eq!(closed_form_pinv(&Linear { c: 0.0 }, 5.0), PinvValue::Value(0.0));
    }

    #[test]
    fn hard_threshold_boundary_prefers_zero() {
        assert_eq!(closed_form_pinv(&HardThreshold { a: 2.0 }, 1.0), PinvValue::Value(0.0));
        assert_eq!(closed_form_pinv(&HardThreshold { a: 2.0 }, -3.0), PinvValue::Value(-3.0));
    }

    #[test]
    fn parameter_validation() {
        assert!(ShiftedSquare { a: 0.0 }.validate().is_err());
        assert!(HardThreshold { a: -1.0 }.validate().is_err());
        assert!(SignEps { eps: 0.0 }.validate().is_err());
        assert!(Sampled { xs: vec![0.0, 0.0], ys: vec![1.0, 2.0] }.validate().is_err());
        assert!(SoftThreshold { a: 0.0 }.validate().is_ok());
    }

    #[test]
    fn sampled_interpolates_and_inverts() {
        let op = Sampled {
            xs: vec![-2.0, -1.0, 1.0, 2.0],
            ys: vec![1.0, 0.0, 0.0, 1.0],
        };
        assert_eq!(op.eval(-1.5), 0.5);
        assert_eq!(op.eval(5.0), 1.0);
        // flat bottom contains zero
        assert_eq!(op.pinv(-3.0), PinvValue::Value(0.0));
        // symmetric branches
        assert_eq!(op.pinv(0.5), PinvValue::Nonunique(1.5));
        // rays at the top: nearest point of [2, ∞) and (-∞, -2]
        assert_eq!(op.pinv(7.0), PinvValue::Nonunique(2.0));
        let ramp = Sampled {
            xs: vec![1.0, 3.0],
            ys: vec![0.0, 4.0],
        };
        assert_eq!(ramp.pinv(2.0), PinvValue::Value(2.0));
        assert_eq!(ramp.pinv(-1.0), PinvValue::Value(0.0));
    }

    #[test]
    fn json_tagging() {
        let op: Scalar1DOperator = serde_json::from_str(r#"{"kind":"hard_threshold","a":2}"#).unwrap();
        assert_eq!(op, HardThreshold { a: 2.0 });
        assert_eq!(serde_json::to_string(&Sign).unwrap(), r#"{"kind":"sign"}"#);
    }
}
