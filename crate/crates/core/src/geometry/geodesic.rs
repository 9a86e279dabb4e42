//! Unit-speed geodesics of `c^{-2} δ` and the scalar Jacobi equation along them.
//!
//! State: position `(x, y)`, Euclidean heading `θ`, and the normal Jacobi
//! field `j` with `j(0) = 0`, `j'(0) = 1`:
//!
//! ```text
//! x' = c cos θ,  y' = c sin θ,  θ' = c_x sin θ − c_y cos θ,  j'' = −K j.
//! ```

use super::{ConformalField, Vec2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicState {
    pub position: Vec2,
    pub heading: f64,
    pub jacobi: f64,
    pub jacobi_rate: f64,
}

impl GeodesicState {
    pub fn start(position: Vec2, heading: f64) -> Self {
        GeodesicState {
            position,
            heading,
            jacobi: 0.0,
            jacobi_rate: 1.0,
        }
    }

    /// Unit tangent in coordinates times the local speed `c`.
    pub fn velocity(&self, field: &ConformalField) -> Vec2 {
        Vec2::from_polar(field.value(self.position), self.heading)
    }
}

#[derive(Clone, Copy)]
struct Deriv {
    dp: Vec2,
    dtheta: f64,
    dj: f64,
    djr: f64,
}

fn deriv(field: &ConformalField, s: &GeodesicState, jacobi: bool) -> Deriv {
    let jet = field.jet(s.position);
    let (sn, cs) = s.heading.sin_cos();
    let (dj, djr) = if jacobi {
        (s.jacobi_rate, -field.gauss_curvature(s.position) * s.jacobi)
    } else {
        (0.0, 0.0)
    };
    Deriv {
        dp: Vec2::new(jet.value * cs, jet.value * sn),
        dtheta: jet.gradient.x * sn - jet.gradient.y * cs,
        dj,
        djr,
    }
}

fn advance(s: &GeodesicState, d: &Deriv, h: f64) -> GeodesicState {
    GeodesicState {
        position: s.position + d.dp * h,
        heading: s.heading + d.dtheta * h,
        jacobi: s.jacobi + d.dj * h,
        jacobi_rate: s.jacobi_rate + d.djr * h,
    }
}

/// One classical Runge–Kutta step of length `h` in geodesic time.
pub fn rk4_step(field: &ConformalField, s: &GeodesicState, h: f64, jacobi: bool) -> GeodesicState {
    let k1 = deriv(field, s, jacobi);
    let k2 = deriv(field, &advance(s, &k1, 0.5 * h), jacobi);
    let k3 = deriv(field, &advance(s, &k2, 0.5 * h), jacobi);
    let k4 = deriv(field, &advance(s, &k3, h), jacobi);
    let w = h / 6.0;
    GeodesicState {
        position: s.position + (k1.dp + k2.dp * 2.0 + k3.dp * 2.0 + k4.dp) * w,
        heading: s.heading + (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta) * w,
        jacobi: s.jacobi + (k1.dj + 2.0 * k2.dj + 2.0 * k3.dj + k4.dj) * w,
        jacobi_rate: s.jacobi_rate + (k1.djr + 2.0 * k2.djr + 2.0 * k3.djr + k4.djr) * w,
    }
}

/// Integrates for time `t` with steps no longer than `max_step`.
/// `guard` is called after every step and may stop the integration early by
/// returning `false`; the last accepted state and elapsed time are returned.
pub fn integrate<G>(
    field: &ConformalField,
    start: GeodesicState,
    t: f64,
    max_step: f64,
    jacobi: bool,
    mut guard: G,
) -> (GeodesicState, f64, bool)
where
    G: FnMut(&GeodesicState) -> bool,
{
    if t <= 0.0 {
        return (start, 0.0, true);
    }
    let n = ((t / max_step).ceil() as usize).max(4);
    let h = t / n as f64;
    let mut s = start;
    for k in 0..n {
        let next = rk4_step(field, &s, h, jacobi);
        if !guard(&next) {
            return (s, k as f64 * h, false);
        }
        s = next;
    }
    (s, t, true)
}

/// Follows the ray from `start` until it crosses `|x| = radius`.
/// Returns the exit time and state, located by bisection on the final step.
pub fn ray_exit(
    field: &ConformalField,
    start: GeodesicState,
    radius: f64,
    max_step: f64,
    t_max: f64,
    jacobi: bool,
) -> Option<(f64, GeodesicState)> {
    let mut s = start;
    let mut t = 0.0;
    let r2 = radius * radius;
    while t < t_max {
        let next = rk4_step(field, &s, max_step, jacobi);
        if next.position.norm_squared() >= r2 {
            let (mut lo, mut hi) = (0.0, max_step);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let probe = rk4_step(field, &s, mid, jacobi);
                if probe.position.norm_squared() >= r2 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let h = 0.5 * (lo + hi);
            return Some((t + h, rk4_step(field, &s, h, jacobi)));
        }
        s = next;
        t += max_step;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_geodesic_is_a_straight_line_with_linear_jacobi_field() {
        let f = ConformalField::Unit;
        let (s, t, ok) = integrate(&f, GeodesicState::start(Vec2::new(-0.2, 0.1), 0.3), 0.7, 0.01, true, |_| true);
        assert!(ok);
        assert_eq!(t, 0.7);
        let expect = Vec2::new(-0.2, 0.1) + Vec2::from_polar(0.7, 0.3);
        assert!(s.position.distance(expect) < 1e-13);
        assert!((s.jacobi - 0.7).abs() < 1e-13);
    }

    #[test]
    fn hyperbolic_jacobi_field_grows_like_sinh() {
        let f = ConformalField::ConstantCurvature { kappa: -1.0 };
        let (s, _, _) = integrate(&f, GeodesicState::start(Vec2::ZERO, 0.0), 1.2, 0.005, true, |_| true);
        assert!((s.jacobi - 1.2f64.sinh()).abs() < 1e-9);
        // Radial geodesic through the origin of the Poincaré chart.
        assert!((s.position.x - (0.6f64).tanh()).abs() < 1e-9);
    }

    #[test]
    fn ray_exit_finds_unit_circle() {
        let f = ConformalField::Unit;
        let (t, s) = ray_exit(&f, GeodesicState::start(Vec2::new(0.5, 0.0), 0.0), 1.0, 0.01, 10.0, false).unwrap();
        assert!((t - 0.5).abs() < 1e-12);
        assert!((s.position.norm() - 1.0).abs() < 1e-12);
    }
}
