use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};
use crate::num::{wrap_angle, Real};

/// One waypoint of a timed point list.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimedWaypoint<T: Real> {
    pub position: Vector3<T>,
    /// rad
    pub heading: T,
    /// s
    pub time: T,
}

impl<T: Real> TimedWaypoint<T> {
    pub fn new(position: Vector3<T>, heading: T, time: T) -> Self {
        TimedWaypoint {
            position,
            heading,
            time,
        }
    }
}

/// Reference state sampled from a spline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefPoint<T: Real> {
    pub stamp: T,
    pub position: Vector3<T>,
    pub velocity: Vector3<T>,
    pub acceleration: Vector3<T>,
    pub jerk: Vector3<T>,
    pub snap: Vector3<T>,
    /// Wrapped to (-pi, pi].
    pub heading: T,
    pub heading_rate: T,
    pub heading_accel: T,
    /// Set when the query time lay outside the spline and was clamped.
    pub clamped: bool,
}

impl<T: Real> RefPoint<T> {
    /// Stationary reference at `position`.
    pub fn hold(position: Vector3<T>, heading: T, stamp: T) -> Self {
        RefPoint {
            stamp,
            position,
            velocity: Vector3::zeros(),
            acceleration: Vector3::zeros(),
            jerk: Vector3::zeros(),
            snap: Vector3::zeros(),
            heading: wrap_angle(heading),
            heading_rate: T::zero(),
            heading_accel: T::zero(),
            clamped: false,
        }
    }
}

const CHANNELS: usize = 4;
const ORDER: usize = 6;
/// Derivatives held continuous at every knot and zero at both ends.
const SMOOTH: usize = 4;

/// Piecewise quintic in x, y, z and unwrapped heading, continuous up to the
/// fourth derivative, with derivatives 1 to 4 zero at both ends.
///
/// A rest-to-rest quintic through `n` points has four more conditions than
/// unknowns, so four free knots are inserted: at thirds of the first and last
/// interval, or at fifths when there is a single interval. The pieces are
/// stored in local time `u = (t - t_k) / h_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuinticSpline<T: Real> {
    knots: Vec<T>,
    coeffs: Vec<[[T; ORDER]; CHANNELS]>,
}

fn falling<T: Real>(j: usize, d: usize) -> T {
    // j! / (j - d)!
    let mut f = 1.0;
    for i in 0..d {
        f *= (j - i) as f64;
    }
    T::lit(f)
}

fn basis_row<T: Real>(u: T, d: usize) -> [T; ORDER] {
    let mut row = [T::zero(); ORDER];
    for (j, r) in row.iter_mut().enumerate().skip(d) {
        *r = falling::<T>(j, d) * u.powi((j - d) as i32);
    }
    row
}

fn unwrap_headings<T: Real>(wp: &[TimedWaypoint<T>]) -> Vec<T> {
    let mut out = Vec::with_capacity(wp.len());
    let mut prev = wp[0].heading;
    out.push(prev);
    for w in &wp[1..] {
        let next = prev + wrap_angle(w.heading - prev);
        out.push(next);
        prev = next;
    }
    out
}

/// Fits the rest-to-rest C⁴ quintic spline through `wp`.
pub fn fit_spline<T: Real>(wp: &[TimedWaypoint<T>]) -> Result<QuinticSpline<T>> {
    if wp.len() < 2 {
        return Err(Error::Parameter("spline needs at least 2 waypoints".into()));
    }
    if wp
        .iter()
        .any(|w| !w.time.is_finite() || w.position.iter().any(|c| !c.is_finite()) || !w.heading.is_finite())
    {
        return Err(Error::Parameter("non-finite waypoint".into()));
    }
    if wp.windows(2).any(|p| !(p[1].time > p[0].time)) {
        return Err(Error::Parameter("waypoint times must be strictly increasing".into()));
    }

    // knots with an optional value index
    let n = wp.len();
    let mut knots: Vec<(T, Option<usize>)> = Vec::with_capacity(n + 4);
    let inserts = |a: T, b: T, fracs: &[f64], out: &mut Vec<(T, Option<usize>)>| {
        for &f in fracs {
            out.push((a + (b - a) * T::lit(f), None));
        }
    };
    for i in 0..n {
        knots.push((wp[i].time, Some(i)));
        if i + 1 == n {
            break;
        }
        let (a, b) = (wp[i].time, wp[i + 1].time);
        if n == 2 {
            inserts(a, b, &[0.2, 0.4, 0.6, 0.8], &mut knots);
        } else if i == 0 || i + 2 == n {
            inserts(a, b, &[1.0 / 3.0, 2.0 / 3.0], &mut knots);
        }
    }
    let m = knots.len() - 1;
    let h: Vec<T> = knots.windows(2).map(|k| k[1].0 - k[0].0).collect();
    let headings = unwrap_headings(wp);
    let value = |i: usize, c: usize| -> T {
        if c < 3 {
            wp[i].position[c]
        } else {
            headings[i]
        }
    };

    let size = ORDER * m;
    let mut a = DMatrix::<T>::zeros(size, size);
    let mut rhs = DMatrix::<T>::zeros(size, CHANNELS);
    let mut row = 0;
    let put = |a: &mut DMatrix<T>, row: usize, seg: usize, coeffs: [T; ORDER], scale: T| {
        for (j, c) in coeffs.iter().enumerate() {
            a[(row, ORDER * seg + j)] += *c * scale;
        }
    };

    // interpolation at the start of every segment that begins on a waypoint
    for (k, (_, idx)) in knots.iter().enumerate().take(m) {
        if let Some(i) = idx {
            put(&mut a, row, k, basis_row(T::zero(), 0), T::one());
            for c in 0..CHANNELS {
                rhs[(row, c)] = value(*i, c);
            }
            row += 1;
        }
    }
    put(&mut a, row, m - 1, basis_row(T::one(), 0), T::one());
    for c in 0..CHANNELS {
        rhs[(row, c)] = value(n - 1, c);
    }
    row += 1;

    // continuity of derivatives 0..4, scaled to the right segment's time
    for k in 1..m {
        for d in 0..=SMOOTH {
            let ratio = (h[k] / h[k - 1]).powi(d as i32);
            put(&mut a, row, k - 1, basis_row(T::one(), d), ratio);
            put(&mut a, row, k, basis_row(T::zero(), d), -T::one());
            row += 1;
        }
    }

    // rest at both ends
    for d in 1..=SMOOTH {
        put(&mut a, row, 0, basis_row(T::zero(), d), T::one());
        row += 1;
        put(&mut a, row, m - 1, basis_row(T::one(), d), T::one());
        row += 1;
    }
    debug_assert_eq!(row, size);

    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("spline system is singular".into()))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("spline solve produced non-finite coefficients".into()));
    }
    let coeffs = (0..m)
        .map(|k| {
            let mut seg = [[T::zero(); ORDER]; CHANNELS];
            for (c, ch) in seg.iter_mut().enumerate() {
                for (j, v) in ch.iter_mut().enumerate() {
                    *v = sol[(ORDER * k + j, c)];
                }
            }
            seg
        })
        .collect();
    Ok(QuinticSpline {
        knots: knots.iter().map(|k| k.0).collect(),
        coeffs,
    })
}

impl<T: Real> QuinticSpline<T> {
    /// All knot times including the inserted ones.
    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn start_time(&self) -> T {
        self.knots[0]
    }

    pub fn end_time(&self) -> T {
        *self.knots.last().unwrap()
    }

    pub fn duration(&self) -> T {
        self.end_time() - self.start_time()
    }

    fn segment(&self, t: T) -> usize {
        let i = self.knots.partition_point(|k| *k <= t);
        i.clamp(1, self.coeffs.len()) - 1
    }

    /// Derivative `d` (0 to 5) of channel `c` (x, y, z, heading) at `t`,
    /// without clamping.
    pub fn derivative(&self, channel: usize, d: usize, t: T) -> T {
        self.piece_derivative(self.segment(t), channel, d, t)
    }

    /// Like [`Self::derivative`] but evaluates piece `k`'s polynomial even
    /// outside its interval.
    pub fn piece_derivative(&self, k: usize, channel: usize, d: usize, t: T) -> T {
        let h = self.knots[k + 1] - self.knots[k];
        let u = (t - self.knots[k]) / h;
        let row = basis_row(u, d);
        let c = &self.coeffs[k][channel];
        let mut s = T::zero();
        for j in d..ORDER {
            s += row[j] * c[j];
        }
        s / h.powi(d as i32)
    }

    fn vec(&self, d: usize, t: T) -> Vector3<T> {
        Vector3::new(
            self.derivative(0, d, t),
            self.derivative(1, d, t),
            self.derivative(2, d, t),
        )
    }

    /// Reference at `t`. Outside the spline the nearest endpoint is held with
    /// zero derivatives and `clamped` set.
    pub fn eval(&self, t: T) -> RefPoint<T> {
        let (t0, t1) = (self.start_time(), self.end_time());
        if t < t0 || t > t1 || !t.is_finite() {
            let end = if t > t1 { t1 } else { t0 };
            let mut r = RefPoint::hold(self.vec(0, end), self.derivative(3, 0, end), t);
            r.clamped = true;
            return r;
        }
        RefPoint {
            stamp: t,
            position: self.vec(0, t),
            velocity: self.vec(1, t),
            acceleration: self.vec(2, t),
            jerk: self.vec(3, t),
            snap: self.vec(4, t),
            heading: wrap_angle(self.derivative(3, 0, t)),
            heading_rate: self.derivative(3, 1, t),
            heading_accel: self.derivative(3, 2, t),
            clamped: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec3;
    use std::f64::consts::PI;

    fn wps() -> Vec<TimedWaypoint<f64>> {
        vec![
            TimedWaypoint::new(Vec3::new(0.0, 0.0, 1.0), 0.0, 0.0),
            TimedWaypoint::new(Vec3::new(2.0, 1.0, 1.5), 0.5, 2.0),
            TimedWaypoint::new(Vec3::new(4.0, -1.0, 2.0), 1.0, 3.5),
            TimedWaypoint::new(Vec3::new(5.0, 0.0, 1.0), 3.0, 5.0),
            TimedWaypoint::new(Vec3::new(7.0, 2.0, 1.0), -3.0, 7.0),
        ]
    }

    #[test]
    fn two_waypoints_rest_to_rest() {
        let s = fit_spline(&[
            TimedWaypoint::new(Vec3::zeros(), 0.0, 0.0),
            TimedWaypoint::new(Vec3::new(3.0, -1.0, 2.0), 1.0, 4.0),
        ])
        .unwrap();
        for t in [0.0, 4.0] {
            for d in 1..=4 {
                for c in 0..4 {
                    assert!(s.derivative(c, d, t).abs() < 1e-9, "c{c} d{d} t{t}");
                }
            }
        }
        assert!((s.eval(4.0).position - Vec3::new(3.0, -1.0, 2.0)).norm() < 1e-9);
    }

    #[test]
    fn interpolates_every_waypoint() {
        let w = wps();
        let s = fit_spline(&w).unwrap();
        for p in &w {
            assert!((s.eval(p.time).position - p.position).norm() < 1e-9);
        }
    }

    #[test]
    fn heading_is_unwrapped_then_wrapped() {
        let s = fit_spline(&wps()).unwrap();
        // 3.0 -> -3.0 is a short turn through pi, not a long one through 0
        let mid = s.eval(6.0).heading;
        assert!(mid.abs() > 2.9, "{mid}");
        assert!((s.eval(7.0).heading - (-3.0)).abs() < 1e-9);
        let h = s.eval(6.0).heading;
        assert!(h > -PI && h <= PI);
    }

    #[test]
    fn continuity_at_every_knot() {
        let s = fit_spline(&wps()).unwrap();
        for &k in &s.knots()[1..s.knots().len() - 1] {
            for d in 0..=4 {
                for c in 0..4 {
                    let l = s.derivative(c, d, k - 1e-12);
                    let r = s.derivative(c, d, k + 1e-12);
                    assert!((l - r).abs() < 1e-6 * (1.0 + l.abs()), "knot {k} d{d}");
                }
            }
        }
    }

    #[test]
    fn snap_continuity_by_finite_differences() {
        // central differences of the jerk of each neighbouring piece, each
        // polynomial extended across the knot
        let s = fit_spline(&wps()).unwrap();
        let h = 1e-4;
        let k = s.knots();
        for (i, &t) in k.iter().enumerate().take(k.len() - 1).skip(1) {
            for c in 0..4 {
                let fd = |seg: usize| {
                    (s.piece_derivative(seg, c, 3, t + h) - s.piece_derivative(seg, c, 3, t - h)) / (2.0 * h)
                };
                let (left, right) = (fd(i - 1), fd(i));
                assert!((left - right).abs() < 1e-6, "knot {t} channel {c}: {left} vs {right}");
            }
        }
    }

    #[test]
    fn velocity_matches_central_difference() {
        let s = fit_spline(&wps()).unwrap();
        let h = 1e-5;
        for i in 1..70 {
            let t = i as f64 * 0.1;
            let fd = (s.eval(t + h).position - s.eval(t - h).position) / (2.0 * h);
            assert!((fd - s.eval(t).velocity).norm() < 1e-6, "t {t}");
        }
    }

    #[test]
    fn fifth_difference_is_constant_per_piece() {
        let s = fit_spline(&wps()).unwrap();
        let k = s.knots();
        let h = 1e-2;
        for seg in 0..k.len() - 1 {
            let (a, b) = (k[seg], k[seg + 1]);
            if b - a < 6.0 * h {
                continue;
            }
            let fifth = |t: f64| {
                let f = |x: f64| s.derivative(0, 0, x);
                (f(t + 5.0 * h) - 5.0 * f(t + 4.0 * h) + 10.0 * f(t + 3.0 * h) - 10.0 * f(t + 2.0 * h) + 5.0 * f(t + h)
                    - f(t))
                    / h.powi(5)
            };
            let first = fifth(a + 1e-3);
            let last = fifth(b - 5.0 * h - 1e-3);
            assert!(
                (first - last).abs() < 1e-3 * (1.0 + first.abs()),
                "seg {seg}: {first} {last}"
            );
        }
    }

    #[test]
    fn out_of_range_is_clamped_and_flagged() {
        let s = fit_spline(&wps()).unwrap();
        let r = s.eval(9.0);
        assert!(r.clamped);
        assert!((r.position - Vec3::new(7.0, 2.0, 1.0)).norm() < 1e-9);
        assert_eq!(r.velocity, Vec3::zeros());
        assert!(!s.eval(3.0).clamped);
    }

    #[test]
    fn duplicate_times_rejected() {
        let w = vec![
            TimedWaypoint::new(Vec3::zeros(), 0.0, 1.0),
            TimedWaypoint::new(Vec3::zeros(), 0.0, 1.0),
        ];
        assert!(matches!(fit_spline(&w), Err(Error::Parameter(_))));
        assert!(fit_spline(&w[..1]).is_err());
    }

    #[test]
    fn single_precision_fit() {
        let w: Vec<TimedWaypoint<f32>> = wps()
            .iter()
            .map(|p| TimedWaypoint::new(p.position.cast::<f32>(), p.heading as f32, p.time as f32))
            .collect();
        let s = fit_spline(&w).unwrap();
        for p in &w {
            assert!((s.eval(p.time).position - p.position).norm() < 1e-3);
        }
    }
}
