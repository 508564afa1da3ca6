//! Linear under- and over-estimators of `x·y` and `f²` on a box.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSense {
    /// `aux ≥ …`
    Lower,
    /// `aux ≤ …`
    Upper,
}

/// `aux  ⋛  cx·x + cy·y + c0`, the sense given by `sense`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeCut<S> {
    pub sense: CutSense,
    pub cx: S,
    pub cy: S,
    pub c0: S,
}

impl<S: Scalar> EnvelopeCut<S> {
    /// Value of the right-hand side at `(x, y)`.
    pub fn eval(&self, x: S, y: S) -> S {
        self.cx * x + self.cy * y + self.c0
    }

    pub fn holds(&self, aux: S, x: S, y: S, tol: S) -> bool {
        let rhs = self.eval(x, y);
        match self.sense {
            CutSense::Lower => aux >= rhs - tol,
            CutSense::Upper => aux <= rhs + tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum EnvelopeError {
    #[error("bound [{lo}, {hi}] is not a finite interval")]
    BadBounds { lo: f64, hi: f64 },
}

fn check<S: Scalar>((lo, hi): (S, S)) -> Result<(), EnvelopeError> {
    if lo.is_finite() && hi.is_finite() && lo <= hi {
        Ok(())
    } else {
        Err(EnvelopeError::BadBounds { lo: lo.to_f64_lossy(), hi: hi.to_f64_lossy() })
    }
}

/// The four McCormick inequalities for `w = x·y` on `[xl,xu] × [yl,yu]`.
pub fn mccormick_envelope<S: Scalar>(x: (S, S), y: (S, S)) -> Result<[EnvelopeCut<S>; 4], EnvelopeError> {
    check(x)?;
    check(y)?;
    let ((xl, xu), (yl, yu)) = (x, y);
    Ok([
        EnvelopeCut { sense: CutSense::Lower, cx: yl, cy: xl, c0: -xl * yl },
        EnvelopeCut { sense: CutSense::Lower, cx: yu, cy: xu, c0: -xu * yu },
        EnvelopeCut { sense: CutSense::Upper, cx: yl, cy: xu, c0: -xu * yl },
        EnvelopeCut { sense: CutSense::Upper, cx: yu, cy: xl, c0: -xl * yu },
    ])
}

/// Default tangent points on `[fl, fu]`: the endpoints plus 0 when it is
/// interior; more points are spread evenly.
pub fn tangent_points<S: Scalar>(fl: S, fu: S, n: usize) -> Vec<S> {
    let mut pts = match n {
        0 => Vec::new(),
        1 => vec![(fl + fu) * S::half()],
        _ => {
            let mut p = vec![fl, fu];
            let inner: Vec<S> = (1..n - 1).map(|k| fl + (fu - fl) * S::of(k as f64 / (n - 1) as f64)).collect();
            p.extend(&inner);
            if fl < S::zero() && S::zero() < fu && !inner.is_empty() {
                // Replace the interior point nearest to 0 by 0 itself.
                let near = (2..p.len()).min_by(|&a, &b| p[a].abs().partial_cmp(&p[b].abs()).unwrap()).unwrap();
                p[near] = S::zero();
            }
            p
        }
    };
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    pts.dedup();
    pts
}

/// Tangents `s ≥ 2f₀f − f₀²` at `points` and the secant
/// `s ≤ (fl+fu) f − fl·fu`, for `s = f²` on `[fl, fu]`. The cuts use `x`
/// for `f` and leave `y` unused.
pub fn relax_quadratic<S: Scalar>(f: (S, S), points: &[S]) -> Result<Vec<EnvelopeCut<S>>, EnvelopeError> {
    check(f)?;
    if points.is_empty() {
        return Err(EnvelopeError::BadBounds { lo: f.0.to_f64_lossy(), hi: f.1.to_f64_lossy() });
    }
    let (fl, fu) = f;
    let mut cuts: Vec<EnvelopeCut<S>> = points
        .iter()
        .map(|&p| EnvelopeCut { sense: CutSense::Lower, cx: S::two() * p, cy: S::zero(), c0: -p * p })
        .collect();
    cuts.push(EnvelopeCut { sense: CutSense::Upper, cx: fl + fu, cy: S::zero(), c0: -fl * fu });
    Ok(cuts)
}

/// Bounds of `x·y` over the box.
pub fn product_range<S: Scalar>((xl, xu): (S, S), (yl, yu): (S, S)) -> (S, S) {
    let c = [xl * yl, xl * yu, xu * yl, xu * yu];
    let lo = c.iter().copied().fold(S::infinity(), S::min);
    let hi = c.iter().copied().fold(S::neg_infinity(), S::max);
    (lo, hi)
}

/// Bounds of `f²` over `[fl, fu]`.
pub fn square_range<S: Scalar>((fl, fu): (S, S)) -> (S, S) {
    let hi = (fl * fl).max(fu * fu);
    let lo = if fl <= S::zero() && S::zero() <= fu { S::zero() } else { (fl * fl).min(fu * fu) };
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_points() {
        assert_eq!(tangent_points(-2.0, 2.0, 3), vec![-2.0, 0.0, 2.0]);
        assert_eq!(tangent_points(1.0, 3.0, 3), vec![1.0, 2.0, 3.0]);
        assert_eq!(tangent_points(3.0, 3.0, 3), vec![3.0]);
    }
}
