//! Fast primitives for the hyperbolic plane in the hyperboloid model,
//! used by the hexagon solver and the Fenchel-Nielsen development.
//!
//! Points are future timelike unit vectors (<x,x> = -1), geodesics are
//! represented by their unit spacelike poles, and ideal points by future
//! null vectors.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type V3 = Vector3<f64>;
pub type M3 = Matrix3<f64>;

/// Minkowski pairing of signature (-,+,+).
pub fn mink(a: &V3, b: &V3) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Minkowski cross product: <cross(a,b), c> = det[a b c].
pub fn cross(a: &V3, b: &V3) -> V3 {
    let e = a.cross(b);
    V3::new(-e[0], e[1], e[2])
}

pub fn normalize_point(x: &V3) -> Result<V3> {
    let s = -mink(x, x);
    if s <= 0.0 {
        return Err(Error::DegenerateConfiguration(
            "vector is not timelike".into(),
        ));
    }
    let mut y = x / s.sqrt();
    if y[0] < 0.0 {
        y = -y;
    }
    Ok(y)
}

pub fn normalize_spacelike(x: &V3) -> Result<V3> {
    let s = mink(x, x);
    if s <= 0.0 {
        return Err(Error::DegenerateConfiguration(
            "vector is not spacelike".into(),
        ));
    }
    Ok(x / s.sqrt())
}

pub fn distance(p: &V3, q: &V3) -> f64 {
    crate::space::acosh_stable((-mink(p, q)).max(1.0))
}

/// Unit tangent at p toward q.
pub fn direction(p: &V3, q: &V3) -> Result<V3> {
    let d = distance(p, q);
    if d < 1e-14 {
        return Err(Error::DegenerateInput("direction of coincident points".into()));
    }
    Ok((q - p * d.cosh()) / d.sinh())
}

pub fn exp(p: &V3, v: &V3, t: f64) -> V3 {
    p * t.cosh() + v * t.sinh()
}

/// Pole of the geodesic through two points (or through a point and an
/// ideal point).
pub fn pole_through(a: &V3, b: &V3) -> Result<V3> {
    normalize_spacelike(&cross(a, b))
}

/// Pole of the geodesic through p with unit tangent v.
pub fn pole_of_line(p: &V3, v: &V3) -> Result<V3> {
    normalize_spacelike(&cross(p, v))
}

/// Signed distance from a point to the geodesic with pole u:
/// sinh(dist) = <p,u>.
pub fn signed_dist_to_line(p: &V3, u: &V3) -> f64 {
    mink(p, u).asinh()
}

/// Intersection point of two geodesics given by poles, if they cross.
pub fn intersect_lines(u1: &V3, u2: &V3) -> Result<V3> {
    normalize_point(&cross(u1, u2))
}

/// Foot of the perpendicular from p onto the geodesic with pole u.
pub fn foot_on_line(p: &V3, u: &V3) -> Result<V3> {
    let w = p - u * mink(p, u);
    normalize_point(&w)
}

/// Rotation by angle theta about the point p.
pub fn rotation_about(p: &V3, theta: f64) -> M3 {
    // conjugate the origin rotation by the transvection moving origin to p
    let t = transvection_to(p);
    let mut r = M3::identity();
    r[(1, 1)] = theta.cos();
    r[(1, 2)] = -theta.sin();
    r[(2, 1)] = theta.sin();
    r[(2, 2)] = theta.cos();
    t * r * iso_inverse(&t)
}

/// Transvection taking the origin to p.
pub fn transvection_to(p: &V3) -> M3 {
    let o = V3::new(1.0, 0.0, 0.0);
    let d = distance(&o, p);
    if d < 1e-15 {
        return M3::identity();
    }
    let v = direction(&o, p).unwrap();
    transvection(&o, &v, d)
}

/// Transvection by distance t along the geodesic through p with unit
/// tangent v.
pub fn transvection(p: &V3, v: &V3, t: f64) -> M3 {
    let (c, s) = (t.cosh(), t.sinh());
    let mut m = M3::zeros();
    for k in 0..3 {
        let mut e = V3::zeros();
        e[k] = 1.0;
        let a = -mink(&e, p);
        let b = mink(&e, v);
        let w = e - p * a - v * b;
        let img = p * (a * c + b * s) + v * (a * s + b * c) + w;
        m.set_column(k, &img);
    }
    m
}

/// Inverse through the form: g^{-1} = J g^T J.
pub fn iso_inverse(g: &M3) -> M3 {
    let j = M3::from_diagonal(&V3::new(-1.0, 1.0, 1.0));
    j * g.transpose() * j
}

/// Reflection across the geodesic with pole u.
pub fn reflection(u: &V3) -> M3 {
    let mut m = M3::identity();
    for k in 0..3 {
        let mut e = V3::zeros();
        e[k] = 1.0;
        let img = e - u * (2.0 * mink(&e, u));
        m.set_column(k, &img);
    }
    m
}

/// Angle at p between directions toward q and r.
pub fn angle_at(p: &V3, q: &V3, r: &V3) -> Result<f64> {
    let u = direction(p, q)?;
    let v = direction(p, r)?;
    Ok(mink(&u, &v).clamp(-1.0, 1.0).acos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn feet_and_poles() {
        let o = V3::new(1.0, 0.0, 0.0);
        let p = exp(&o, &V3::new(0.0, 1.0, 0.0), 1.0);
        // geodesic through origin with tangent e2: the x-axis-orthogonal line
        let u = pole_of_line(&o, &V3::new(0.0, 0.0, 1.0)).unwrap();
        let f = foot_on_line(&p, &u).unwrap();
        assert_relative_eq!(distance(&p, &f), 1.0, epsilon = 1e-12);
        assert_relative_eq!(signed_dist_to_line(&p, &u).abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn law_of_cosines_consistency() {
        // triangle with legs 1, 2 and angle pi/3 between them
        let o = V3::new(1.0, 0.0, 0.0);
        let a = exp(&o, &V3::new(0.0, 1.0, 0.0), 1.0);
        let dir2 = V3::new(0.0, (std::f64::consts::PI / 3.0).cos(), (std::f64::consts::PI / 3.0).sin());
        let b = exp(&o, &dir2, 2.0);
        let lhs = distance(&a, &b).cosh();
        let rhs = 1.0f64.cosh() * 2.0f64.cosh()
            - 1.0f64.sinh() * 2.0f64.sinh() * (std::f64::consts::PI / 3.0).cos();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
    }
}
