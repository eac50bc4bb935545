//! Hyperbolic trigonometry in H^2: right-angled hexagons, the truncated
//! ideal triangle of a tripod, and the center-triangle constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::h2::{self, V3};
use crate::space::acosh_stable;

/// A right-angled hexagon with sides in cyclic order (a, gamma, b, alpha,
/// c, beta); gamma lies between a and b, alpha between b and c, beta
/// between c and a.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RightAngledHexagon {
    pub sides: [f64; 6],
}

impl RightAngledHexagon {
    pub fn a(&self) -> f64 {
        self.sides[0]
    }
    pub fn gamma(&self) -> f64 {
        self.sides[1]
    }
    pub fn b(&self) -> f64 {
        self.sides[2]
    }
    pub fn alpha(&self) -> f64 {
        self.sides[3]
    }
    pub fn c(&self) -> f64 {
        self.sides[4]
    }
    pub fn beta(&self) -> f64 {
        self.sides[5]
    }

    /// Worst residual of the three alternating-side relations
    /// cosh c = sinh a sinh b cosh gamma - cosh a cosh b.
    pub fn relation_residual(&self) -> f64 {
        let s = &self.sides;
        let mut worst = 0.0f64;
        for k in 0..3 {
            let a = s[(2 * k) % 6];
            let g = s[(2 * k + 1) % 6];
            let b = s[(2 * k + 2) % 6];
            let c = s[(2 * k + 4) % 6];
            let lhs = c.cosh();
            let rhs = a.sinh() * b.sinh() * g.cosh() - a.cosh() * b.cosh();
            worst = worst.max((lhs - rhs).abs() / lhs.max(1.0));
        }
        worst
    }
}

/// Solve the right-angled hexagon from its three alternating sides.
pub fn solve_hexagon(a: f64, b: f64, c: f64) -> Result<RightAngledHexagon> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::InvalidInput(
            "hexagon sides must be positive".into(),
        ));
    }
    // cosh of the side between x and y, opposite z, computed as
    // 1 + (cosh z + cosh(x-y)) / (sinh x sinh y) without cancellation
    let side_between = |x: f64, y: f64, z: f64| -> Result<f64> {
        let u = (z.cosh() + (x - y).cosh()) / (x.sinh() * y.sinh());
        if u < 1e-300 {
            return Err(Error::Underflow(format!(
                "hexagon side underflows for alternating sides ({x}, {y}, {z})"
            )));
        }
        Ok(acosh_stable(1.0 + u))
    };
    let gamma = side_between(a, b, c)?;
    let alpha = side_between(b, c, a)?;
    let beta = side_between(c, a, b)?;
    Ok(RightAngledHexagon {
        sides: [a, gamma, b, alpha, c, beta],
    })
}

/// The truncated ideal triangle of a tripod at scale R.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HexagonHR {
    pub r_param: f64,
    /// Length of a long side (on the ideal triangle boundary).
    pub long_side: f64,
    /// Length of a short side (on the perpendicular at distance R).
    pub short_side: f64,
    /// Chord between consecutive ray points, the cuff piece length.
    pub chord: f64,
    /// chord - 2R, negative and uniformly bounded.
    pub t_defect: f64,
}

/// Tripod directions at the origin of H^2.
fn tripod_dirs() -> [V3; 3] {
    let mut out = [V3::zeros(); 3];
    for (k, d) in out.iter_mut().enumerate() {
        let th = 2.0 * std::f64::consts::PI * (k as f64) / 3.0;
        *d = V3::new(0.0, th.cos(), th.sin());
    }
    out
}

/// Construct the hexagon of the standard tripod at scale R by intersecting
/// the ideal triangle with the three perpendiculars.
pub fn hexagon_hr(r_param: f64) -> Result<HexagonHR> {
    if !(r_param > 1.0) {
        return Err(Error::InvalidInput("hexagon scale requires R > 1".into()));
    }
    // All corner computations run in frames centered at the ray points
    // (ray pointing along e1); the recentered ideal points have stable
    // closed forms and exponentially small lengths are read off through
    // asinh.  Normalizing points far from the frame origin would lose
    // absolute precision like e^{2R} eps, so cross-frame distances are
    // taken through the analytic frame-transition matrix instead.
    let big = r_param.exp();
    let small = (-r_param).exp();
    let sq3 = 3.0f64.sqrt();
    let i1 = V3::new(1.0, 1.0, 0.0);
    let i2 = V3::new(3.0 * big + small, -(3.0 * big - small), 2.0 * sq3);
    let i3 = V3::new(3.0 * big + small, -(3.0 * big - small), -2.0 * sq3);
    let u12c = h2::cross(&i1, &i2);
    let u31c = h2::cross(&i3, &i1);
    // the perpendicular at the recentered ray point has pole (0,1,0);
    // its intersection with a line of pole u is (-u2, 0, -u0)
    let corner = |u: &V3| -> Result<(V3, f64)> {
        let mut w = V3::new(-u[2], 0.0, -u[0]);
        let tl = -h2::mink(&w, &w);
        if tl <= 0.0 {
            return Err(Error::DegenerateConfiguration(
                "hexagon corner is ideal".into(),
            ));
        }
        w /= tl.sqrt();
        if w[0] < 0.0 {
            w = -w;
        }
        Ok((w, (w[2].abs()).asinh()))
    };
    let (c12, h12) = corner(&u12c)?;
    let (_c31, h31) = corner(&u31c)?;
    let short_side = h12 + h31;

    // long side between the ray-1 corner on side(1,2) and the ray-2 corner
    // on the same side; the latter has coordinates (|c12|, 0, -c12_z) in
    // the ray-2 frame by the threefold symmetry.
    let c21 = V3::new(c12[0], c12[1], -c12[2]);
    let theta = 2.0 * std::f64::consts::PI / 3.0;
    let rot = {
        let mut m = h2::M3::identity();
        m[(1, 1)] = theta.cos();
        m[(1, 2)] = -theta.sin();
        m[(2, 1)] = theta.sin();
        m[(2, 2)] = theta.cos();
        m
    };
    let o = V3::new(1.0, 0.0, 0.0);
    let e1 = V3::new(0.0, 1.0, 0.0);
    let t_fwd = h2::transvection(&o, &e1, r_param);
    let t_bwd = h2::transvection(&o, &e1, -r_param);
    let trans12 = t_bwd * rot * t_fwd;
    let c21_in_1 = trans12 * c21;
    let long_side = h2::distance(&c12, &c21_in_1);

    // chord between consecutive ray points: cosh L = cosh^2 R + sinh^2 R/2
    let chord = acosh_stable(r_param.cosh().powi(2) + 0.5 * r_param.sinh().powi(2));

    Ok(HexagonHR {
        r_param,
        long_side,
        short_side,
        chord,
        t_defect: chord - 2.0 * r_param,
    })
}

/// Constants of the center triangle of an ideal triangle: the side length
/// 2r of the equilateral triangle spanned by the three projection feet,
/// and the distance tau from its center to its sides.
pub fn center_triangle() -> (f64, f64) {
    let o = V3::new(1.0, 0.0, 0.0);
    let dirs = tripod_dirs();
    let ideal: Vec<V3> = dirs.iter().map(|v| o + v).collect();
    let feet: Vec<V3> = (0..3)
        .map(|k| {
            let u = h2::pole_through(&ideal[k], &ideal[(k + 1) % 3]).unwrap();
            h2::foot_on_line(&o, &u).unwrap()
        })
        .collect();
    let side = h2::distance(&feet[0], &feet[1]);
    let edge_pole = h2::pole_through(&feet[0], &feet[1]).unwrap();
    let tau = h2::signed_dist_to_line(&o, &edge_pole).abs();
    (side, tau)
}

/// Minimal clearance between a point within arc distance 3 of a projection
/// foot on one side of the ideal triangle and the other two sides.
pub fn thickness_clearance() -> f64 {
    let o = V3::new(1.0, 0.0, 0.0);
    let dirs = tripod_dirs();
    let ideal: Vec<V3> = dirs.iter().map(|v| o + v).collect();
    let u12 = h2::pole_through(&ideal[0], &ideal[1]).unwrap();
    let u23 = h2::pole_through(&ideal[1], &ideal[2]).unwrap();
    let u31 = h2::pole_through(&ideal[2], &ideal[0]).unwrap();
    let m12 = h2::foot_on_line(&o, &u12).unwrap();
    // unit tangent of side(1,2) at the foot
    let tan = h2::normalize_spacelike(&h2::cross(&u12, &m12)).unwrap();
    let mut best = f64::INFINITY;
    let n = 6001;
    for k in 0..n {
        let t = -3.0 + 6.0 * (k as f64) / ((n - 1) as f64);
        let p = h2::exp(&m12, &tan, t);
        for u in [&u23, &u31] {
            best = best.min(h2::signed_dist_to_line(&p, u).abs());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn symmetric_hexagon() {
        let h = solve_hexagon(1.3, 1.3, 1.3).unwrap();
        assert_relative_eq!(h.gamma(), h.alpha(), epsilon = 1e-12);
        assert_relative_eq!(h.gamma(), h.beta(), epsilon = 1e-12);
        assert!(h.relation_residual() < 1e-12);
    }

    #[test]
    fn nonpositive_sides_rejected() {
        assert!(solve_hexagon(0.0, 1.0, 1.0).is_err());
        assert!(solve_hexagon(1.0, -2.0, 1.0).is_err());
    }

    #[test]
    fn seam_side_slope_is_quarter() {
        // symmetric hexagons with alternating sides R/2: opposite sides
        // scale like e^{-R/4}
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut r = 8.0;
        while r <= 20.0 {
            let h = solve_hexagon(r / 2.0, r / 2.0, r / 2.0).unwrap();
            xs.push(r);
            ys.push(h.gamma().ln());
            r += 1.0;
        }
        let slope = crate::fitting::linear_slope(&xs, &ys);
        assert!((slope + 0.25).abs() < 0.02, "slope {slope}");
    }

    #[test]
    fn hexagon_hr_basic() {
        assert!(hexagon_hr(0.5).is_err());
        let mut prev_long = 0.0;
        let mut prev_short = f64::INFINITY;
        let mut r = 2.0;
        while r <= 20.0 {
            let h = hexagon_hr(r).unwrap();
            assert!(h.long_side > prev_long);
            assert!(h.short_side < prev_short);
            assert!(h.t_defect < 0.0, "t(R) negative, got {}", h.t_defect);
            assert!(h.t_defect.abs() < 1.0, "t(R) uniformly bounded");
            prev_long = h.long_side;
            prev_short = h.short_side;
            r += 0.5;
        }
    }

    #[test]
    fn hexagon_hr_short_side_slope() {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut r = 6.0;
        while r <= 16.0 {
            let h = hexagon_hr(r).unwrap();
            xs.push(r);
            ys.push(h.short_side.ln());
            r += 0.5;
        }
        let slope = crate::fitting::linear_slope(&xs, &ys);
        assert!((slope + 1.0).abs() < 0.02, "slope {slope}");
    }

    #[test]
    fn short_side_against_pants_hexagon() {
        // halving the doubled hexagon: the short side equals half the seam
        // of the right-angled hexagon whose alternating sides are the long
        // sides, up to an error that decays like e^{-2R}; certified at the
        // 1e-7 level for R >= 7.
        let mut r = 7.0;
        while r <= 20.0 {
            let h = hexagon_hr(r).unwrap();
            let rh = solve_hexagon(h.long_side, h.long_side, h.long_side).unwrap();
            assert!(
                (h.short_side - rh.gamma() / 2.0).abs() < 1e-7,
                "R={r}: {} vs {}",
                h.short_side,
                rh.gamma() / 2.0
            );
            r += 0.5;
        }
    }

    #[test]
    fn center_triangle_constants() {
        let (side, tau) = center_triangle();
        // oracle: ideal triangle 0, 1, infinity in the upper half plane has
        // feet i, (1+i)/2, 1+i; side = acosh(3/2)
        let z1 = (0.0f64, 1.0f64);
        let z2 = (0.5f64, 0.5f64);
        let cosh_d =
            1.0 + ((z1.0 - z2.0).powi(2) + (z1.1 - z2.1).powi(2)) / (2.0 * z1.1 * z2.1);
        assert_relative_eq!(side, acosh_stable(cosh_d), epsilon = 1e-12);
        assert_relative_eq!(side, crate::tol::CENTER_TRIANGLE_SIDE, epsilon = 1e-12);
        // tau from the equilateral-triangle median relations:
        // cosh rho = cosh(side/2) cosh(tau), sinh(side/2) = sin(pi/3) sinh rho
        let half = side / 2.0;
        let rho = (half.sinh() / (std::f64::consts::PI / 3.0).sin()).asinh();
        let tau2 = acosh_stable(rho.cosh() / half.cosh());
        assert_relative_eq!(tau, tau2, epsilon = 1e-9);
    }

    #[test]
    fn thickness_constant_frozen() {
        let c = thickness_clearance();
        assert_relative_eq!(c / 2.0, crate::tol::C0_THICK, epsilon = 1e-9);
    }

    #[test]
    fn equilateral_feet() {
        let o = V3::new(1.0, 0.0, 0.0);
        let dirs = tripod_dirs();
        let ideal: Vec<V3> = dirs.iter().map(|v| o + v).collect();
        let feet: Vec<V3> = (0..3)
            .map(|k| {
                let u = h2::pole_through(&ideal[k], &ideal[(k + 1) % 3]).unwrap();
                h2::foot_on_line(&o, &u).unwrap()
            })
            .collect();
        let d01 = h2::distance(&feet[0], &feet[1]);
        let d12 = h2::distance(&feet[1], &feet[2]);
        let d20 = h2::distance(&feet[2], &feet[0]);
        assert_relative_eq!(d01, d12, epsilon = 1e-10);
        assert_relative_eq!(d12, d20, epsilon = 1e-10);
    }

    proptest! {
        #[test]
        fn solve_round_trip(a in 0.2f64..6.0, b in 0.2f64..6.0, c in 0.2f64..6.0) {
            let h = solve_hexagon(a, b, c).unwrap();
            // reading off the alternating sides and resolving is the identity
            let h2 = solve_hexagon(h.a(), h.b(), h.c()).unwrap();
            for k in 0..6 {
                prop_assert!((h.sides[k] - h2.sides[k]).abs() < 1e-9);
            }
            prop_assert!(h.relation_residual() < 1e-9);
        }
    }
}
