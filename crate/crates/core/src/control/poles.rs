use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Coefficients `[c0, ..., c(n-1)]` of the monic polynomial
/// `s^n + c(n-1) s^(n-1) + ... + c0` with the given real roots.
pub fn poly_from_roots<T: Real>(roots: &[T]) -> Vec<T> {
    // running product, highest power last
    let mut c = vec![T::one()];
    for &r in roots {
        let mut next = vec![T::zero(); c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i + 1] += ci;
            next[i] -= r * ci;
        }
        c = next;
    }
    c.pop();
    c
}

/// State-feedback gains for the chain of integrators `x^(n) = u` with
/// `u = -(k0 x + k1 x' + ... + k(n-1) x^(n-1))` realizing the given poles.
pub fn place_chain<T: Real>(poles: &[T]) -> Result<Vec<T>> {
    if poles.is_empty() {
        return Err(Error::Parameter("no poles given".into()));
    }
    if poles.iter().any(|p| !p.is_finite() || *p >= T::zero()) {
        return Err(Error::Parameter("poles must be finite with negative real part".into()));
    }
    Ok(poly_from_roots(poles))
}

/// Desired closed-loop poles.
///
/// The translational loop on each axis is `outer`; the planar axes also
/// include the attitude dynamics and therefore get the four poles
/// `outer ∪ attitude`. Heading uses `attitude`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoleSet<T: Real> {
    pub outer: [T; 2],
    pub attitude: [T; 2],
}

impl<T: Real> Default for PoleSet<T> {
    fn default() -> Self {
        PoleSet {
            outer: [T::lit(-2.0), T::lit(-2.5)],
            attitude: [T::lit(-15.0), T::lit(-16.0)],
        }
    }
}

/// Integral action on the position error.
///
/// The integrator is treated as one more state of each translational chain
/// and its gain is placed together with the others, so the closed loop gets
/// the extra pole `integral_pole`. `None` disables the integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PiConfig<T: Real> {
    pub integral_pole: Option<T>,
    /// Per-axis clamp on the integrated error, m·s.
    pub limit: T,
    /// An axis integrates only while its error is within this band, m.
    pub band: T,
}

impl<T: Real> Default for PiConfig<T> {
    fn default() -> Self {
        PiConfig {
            integral_pole: Some(T::lit(-3.0)),
            limit: T::lit(2.0),
            band: T::lit(0.3),
        }
    }
}

impl<T: Real> PiConfig<T> {
    pub fn disabled(limit: T) -> Self {
        PiConfig {
            integral_pole: None,
            limit,
            band: T::lit(0.3),
        }
    }
}

/// Pole locations together with the derived feedback gains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerGains<T: Real> {
    pub poles: PoleSet<T>,
    pub pi: PiConfig<T>,
    /// Position, velocity, acceleration and jerk gains of the planar axes.
    pub planar: [T; 4],
    /// Gain on the integrated planar position error.
    pub planar_integral: T,
    /// Position and velocity gains of the vertical axis.
    pub vertical: [T; 2],
    pub vertical_integral: T,
    /// Angle and rate gains of the heading.
    pub heading: [T; 2],
}

fn with_integrator<T: Real>(poles: &[T], integral: Option<T>) -> Result<(Vec<T>, T)> {
    match integral {
        None => Ok((place_chain(poles)?, T::zero())),
        Some(p) => {
            let mut all = poles.to_vec();
            all.push(p);
            let k = place_chain(&all)?;
            Ok((k[1..].to_vec(), k[0]))
        }
    }
}

impl<T: Real> ControllerGains<T> {
    pub fn place(poles: PoleSet<T>, pi: PiConfig<T>) -> Result<Self> {
        if !(pi.limit > T::zero()) || !(pi.band > T::zero()) {
            return Err(Error::Parameter("integrator limit and band must be positive".into()));
        }
        let all = [poles.outer[0], poles.outer[1], poles.attitude[0], poles.attitude[1]];
        let (p, pi_planar) = with_integrator(&all, pi.integral_pole)?;
        let (v, pi_vertical) = with_integrator(&poles.outer, pi.integral_pole)?;
        let h = place_chain(&poles.attitude)?;
        Ok(ControllerGains {
            poles,
            pi,
            planar: [p[0], p[1], p[2], p[3]],
            planar_integral: pi_planar,
            vertical: [v[0], v[1]],
            vertical_integral: pi_vertical,
            heading: [h[0], h[1]],
        })
    }
}

impl<T: Real> Default for ControllerGains<T> {
    fn default() -> Self {
        Self::place(PoleSet::default(), PiConfig::default()).expect("default poles are stable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    #[test]
    fn double_integrator_cases() {
        assert_eq!(place_chain(&[-2.0, -2.0]).unwrap(), vec![4.0, 4.0]);
        assert_eq!(place_chain(&[-1.0, -2.0]).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn default_planar_gains() {
        let g = ControllerGains::<f64>::place(PoleSet::default(), PiConfig::disabled(2.0)).unwrap();
        let expect = [1200.0, 1235.0, 384.5, 35.5];
        for (a, b) in g.planar.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(g.vertical, [5.0, 4.5]);
        assert_eq!(g.heading, [240.0, 31.0]);
        assert_eq!(g.planar_integral, 0.0);
    }

    #[test]
    fn integrator_adds_a_pole() {
        // (s + 2)(s + 2.5)(s + 3) = s^3 + 7.5 s^2 + 18.5 s + 15
        let g = ControllerGains::<f64>::default();
        assert_eq!(g.vertical_integral, 15.0);
        assert_eq!(g.vertical, [18.5, 7.5]);
        assert!((g.planar_integral - 3600.0).abs() < 1e-9);
    }

    #[test]
    fn unstable_request_rejected() {
        assert!(place_chain(&[-1.0, 0.5]).is_err());
        assert!(place_chain(&[0.0f32]).is_err());
        let bad = PoleSet {
            outer: [-1.0, -2.0],
            attitude: [-3.0, 1.0],
        };
        assert!(ControllerGains::place(bad, PiConfig::default()).is_err());
        let unstable_pi = PiConfig {
            integral_pole: Some(0.1),
            ..PiConfig::default()
        };
        assert!(ControllerGains::place(PoleSet::default(), unstable_pi).is_err());
    }

    #[test]
    fn single_precision_gains() {
        let g = ControllerGains::<f32>::place(PoleSet::default(), PiConfig::disabled(2.0)).unwrap();
        assert!((g.planar[0] - 1200.0).abs() < 1e-3);
    }

    fn companion(k: &[f64]) -> DMatrix<f64> {
        let n = k.len();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
        }
        for (j, kj) in k.iter().enumerate() {
            a[(n - 1, j)] = -kj;
        }
        a
    }

    proptest! {
        #[test]
        fn companion_eigenvalues_match_poles(
            base in -10.0f64..-0.5,
            gaps in proptest::collection::vec(2.0f64..8.0, 1..4),
        ) {
            let mut poles = vec![base];
            for g in &gaps {
                poles.push(poles.last().unwrap() - g);
            }
            let k = place_chain(&poles).unwrap();
            let mut eig: Vec<f64> = companion(&k)
                .complex_eigenvalues()
                .iter()
                .map(|c| {
                    prop_assert!(c.im.abs() < 1e-6);
                    Ok(c.re)
                })
                .collect::<std::result::Result<_, _>>()?;
            eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for (e, p) in eig.iter().zip(&poles) {
                prop_assert!((e - p).abs() <= 1e-9 * p.abs().max(1.0), "{e} vs {p}");
            }
        }
    }
}
