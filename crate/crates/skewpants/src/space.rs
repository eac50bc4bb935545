//! Model geometry of real hyperbolic space H^n (hyperboloid model, n <= 4)
//! and the complex hyperbolic plane CH^2 (Hermitian model, signature (2,1)).
//!
//! Both models live in an ambient K-vector space with the indefinite form
//! J = diag(-1, 1, ..., 1).  Points are vectors with <x,x> = -1 (complex
//! points carry a phase gauge and are compared projectively), tangent
//! vectors at p are ambient vectors with <v,p> = 0, and the Riemannian
//! metric is g(u,v) = Re<u,v>.  With this normalization geodesics are
//! cosh/sinh curves in both cases, distances satisfy cosh d = |<p,q>|,
//! totally real planes have curvature -1 and complex lines curvature -4.

use nalgebra::DVector;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol::Tolerances;

pub type C64 = Complex<f64>;
pub type Vec64 = DVector<C64>;

/// Which rank-one model we are working in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceKind {
    /// H^n in the hyperboloid model, n in {2,3,4}.
    RealHyperbolic(usize),
    /// CH^n in the Hermitian ball model; only n = 2 is supported.
    ComplexHyperbolic(usize),
}

impl SpaceKind {
    pub fn h2() -> Self {
        SpaceKind::RealHyperbolic(2)
    }
    pub fn h3() -> Self {
        SpaceKind::RealHyperbolic(3)
    }
    pub fn h4() -> Self {
        SpaceKind::RealHyperbolic(4)
    }
    pub fn ch2() -> Self {
        SpaceKind::ComplexHyperbolic(2)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SpaceKind::RealHyperbolic(n) if (2..=4).contains(&n) => Ok(()),
            SpaceKind::ComplexHyperbolic(2) => Ok(()),
            _ => Err(Error::InvalidInput(format!("unsupported space {self:?}"))),
        }
    }

    /// Ambient K-dimension (n+1 coordinates).
    pub fn ambient_dim(&self) -> usize {
        match *self {
            SpaceKind::RealHyperbolic(n) => n + 1,
            SpaceKind::ComplexHyperbolic(n) => n + 1,
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, SpaceKind::ComplexHyperbolic(_))
    }

    /// Real dimension of the tangent space.
    pub fn tangent_dim(&self) -> usize {
        match *self {
            SpaceKind::RealHyperbolic(n) => n,
            SpaceKind::ComplexHyperbolic(n) => 2 * n,
        }
    }

    /// Real dimension of the K-orthogonal complement of a unit tangent.
    pub fn normal_dim(&self) -> usize {
        match *self {
            SpaceKind::RealHyperbolic(n) => n - 1,
            SpaceKind::ComplexHyperbolic(n) => 2 * (n - 1),
        }
    }

    /// Base point (1, 0, ..., 0).
    pub fn origin(&self) -> ModelPoint {
        let mut v = Vec64::zeros(self.ambient_dim());
        v[0] = C64::new(1.0, 0.0);
        ModelPoint {
            space: *self,
            coords: v,
        }
    }

    /// Standard tangent direction e_{k+1} at the origin.
    pub fn axis(&self, k: usize) -> TangentVec {
        let mut v = Vec64::zeros(self.ambient_dim());
        v[k + 1] = C64::new(1.0, 0.0);
        TangentVec {
            base: self.origin(),
            vec: v,
        }
    }
}

/// Indefinite pairing <a,b> = -a0 conj(b0) + sum a_k conj(b_k).
/// Linear in `a`, conjugate-linear in `b`.
pub fn pairing(a: &Vec64, b: &Vec64) -> C64 {
    let mut s = -a[0] * b[0].conj();
    for k in 1..a.len() {
        s += a[k] * b[k].conj();
    }
    s
}

/// Riemannian metric g(u,v) = Re<u,v> on tangent vectors.
pub fn metric(a: &Vec64, b: &Vec64) -> f64 {
    pairing(a, b).re
}

pub fn norm(a: &Vec64) -> f64 {
    metric(a, a).max(0.0).sqrt()
}

/// A point of the model hypersurface <x,x> = -1.
#[derive(Clone, Debug)]
pub struct ModelPoint {
    pub space: SpaceKind,
    pub coords: Vec64,
}

/// A tangent vector attached to an explicit representative of its base point.
#[derive(Clone, Debug)]
pub struct TangentVec {
    pub base: ModelPoint,
    pub vec: Vec64,
}

impl ModelPoint {
    pub fn new(space: SpaceKind, coords: Vec64) -> Result<Self> {
        let p = ModelPoint { space, coords };
        p.check(&Tolerances::default())?;
        Ok(p)
    }

    pub fn check(&self, tol: &Tolerances) -> Result<()> {
        let s = pairing(&self.coords, &self.coords);
        if (s.re + 1.0).abs() > tol.model || s.im.abs() > tol.model {
            return Err(Error::InvalidInput(format!(
                "point self-pairing {s} differs from -1"
            )));
        }
        Ok(())
    }

    /// Radial rescale back onto the model hypersurface; the unique
    /// normalization used after arithmetic-heavy operations.
    ///
    /// Far from the coordinate origin the self-pairing loses absolute
    /// precision (it is a difference of numbers of size e^{2 rho}), so the
    /// rescale is applied only when the measured defect is above the
    /// representation noise floor and small enough to be genuine drift.
    pub fn renormalize(&mut self) {
        let s2 = -pairing(&self.coords, &self.coords).re;
        let q2: f64 = self.coords.iter().map(|z| z.norm_sqr()).sum();
        let noise = 32.0 * f64::EPSILON * q2;
        let defect = (s2 - 1.0).abs();
        if s2 > 0.0 && defect > noise && defect < 0.5 {
            let f = C64::new(1.0 / s2.sqrt(), 0.0);
            self.coords *= f;
        }
        if !self.space.is_complex() && self.coords[0].re < 0.0 {
            self.coords *= C64::new(-1.0, 0.0);
        }
    }

    /// True projective equality test: |<p,q>| = 1.
    pub fn same_point(&self, other: &ModelPoint, tol: f64) -> bool {
        self.space == other.space && distance(self, other).map(|d| d <= tol).unwrap_or(false)
    }

    /// Representative of `self` whose pairing with `anchor` is real and
    /// non-positive.  For real spaces this is the identity.
    pub fn gauge_align(&self, anchor: &ModelPoint) -> ModelPoint {
        if !self.space.is_complex() {
            return self.clone();
        }
        let u = pairing(&self.coords, &anchor.coords);
        let m = u.norm();
        if m < 1e-300 {
            return self.clone();
        }
        let lambda = -u.conj() / m;
        ModelPoint {
            space: self.space,
            coords: &self.coords * lambda,
        }
    }
}

impl TangentVec {
    pub fn new(base: ModelPoint, vec: Vec64) -> Result<Self> {
        let t = TangentVec { base, vec };
        t.check(&Tolerances::default())?;
        Ok(t)
    }

    pub fn check(&self, tol: &Tolerances) -> Result<()> {
        let s = pairing(&self.vec, &self.base.coords);
        if s.norm() > tol.model * 10.0 {
            return Err(Error::InvalidInput(format!(
                "tangent not orthogonal to base: <v,p> = {s}"
            )));
        }
        if metric(&self.vec, &self.vec) < -tol.model {
            return Err(Error::InvalidInput("tangent with negative square".into()));
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        norm(&self.vec)
    }

    pub fn normalized(&self) -> TangentVec {
        let n = self.norm();
        TangentVec {
            base: self.base.clone(),
            vec: &self.vec / C64::new(n, 0.0),
        }
    }

    pub fn scaled(&self, s: f64) -> TangentVec {
        TangentVec {
            base: self.base.clone(),
            vec: &self.vec * C64::new(s, 0.0),
        }
    }

    /// Remove components along the base point and renormalize the base
    /// constraint <v,p> = 0 (drift cleanup).
    pub fn reproject(&mut self) {
        let p = &self.base.coords;
        let a = pairing(&self.vec, p); // <v,p>, want 0; <p,p> = -1
        self.vec += p * a;
    }

    /// Multiplication by the complex structure J (complex spaces only).
    pub fn complex_structure(&self) -> Result<TangentVec> {
        if !self.base.space.is_complex() {
            return Err(Error::InvalidInput(
                "complex structure only exists in complex spaces".into(),
            ));
        }
        Ok(TangentVec {
            base: self.base.clone(),
            vec: &self.vec * C64::new(0.0, 1.0),
        })
    }
}

/// Relative coordinate disagreement of two points after gauge alignment.
/// Sharper than `distance` for near-coincident points, where arccosh near 1
/// has an inherent sqrt(eps) noise floor.
pub fn coincidence_residual(p: &ModelPoint, q: &ModelPoint) -> f64 {
    let qa = q.gauge_align(p);
    let scale = p.coords.norm().max(qa.coords.norm());
    let d1 = (&p.coords - &qa.coords).norm();
    let d2 = (&p.coords + &qa.coords).norm();
    d1.min(d2) / scale
}

/// Chordal distance: metric norm of the coordinate difference after
/// gauge alignment.  Agrees with the geodesic distance to third order for
/// nearby points and, unlike arccosh of the pairing, carries no sqrt(eps)
/// noise floor, so it is the right measure for near-coincident pairs.
pub fn chord_distance(p: &ModelPoint, q: &ModelPoint) -> f64 {
    let qa = q.gauge_align(p);
    let d1 = &p.coords - &qa.coords;
    let d2 = &p.coords + &qa.coords;
    // the matching representative gives a small spacelike chord; the
    // opposite one is timelike of norm ~ -4
    let m1 = metric(&d1, &d1);
    let m2 = metric(&d2, &d2);
    if m1 >= 0.0 && (m2 < 0.0 || m1 <= m2) {
        m1.sqrt()
    } else {
        m2.max(0.0).sqrt()
    }
}

/// Geodesic distance with the chordal refinement for nearly coincident
/// points.
pub fn distance_sharp(p: &ModelPoint, q: &ModelPoint) -> Result<f64> {
    let d = distance(p, q)?;
    if d < 1e-3 {
        Ok(chord_distance(p, q))
    } else {
        Ok(d)
    }
}

/// Geodesic distance, cosh d = |<p,q>|.
pub fn distance(p: &ModelPoint, q: &ModelPoint) -> Result<f64> {
    if p.space != q.space {
        return Err(Error::InvalidInput("points in different spaces".into()));
    }
    let c = pairing(&p.coords, &q.coords).norm().max(1.0);
    Ok(acosh_stable(c))
}

/// arccosh with care near 1.
pub fn acosh_stable(x: f64) -> f64 {
    if x < 1.0 {
        return 0.0;
    }
    let u = x - 1.0;
    (u + (u * (u + 2.0)).sqrt()).ln_1p()
}

/// Exponential map: p cosh t + v sinh t for unit v.
pub fn exp_map(v: &TangentVec, t: f64) -> ModelPoint {
    let n = v.norm();
    if n * t.abs() < 1e-300 {
        return v.base.clone();
    }
    let vv = &v.vec / C64::new(n, 0.0);
    let s = n * t;
    let mut p = ModelPoint {
        space: v.base.space,
        coords: &v.base.coords * C64::new(s.cosh(), 0.0) + vv * C64::new(s.sinh(), 0.0),
    };
    p.renormalize();
    p
}

/// Inverse of the exponential map; the returned vector is unit and is
/// paired with the distance by the caller when needed.
pub fn log_map(p: &ModelPoint, q: &ModelPoint) -> Result<(TangentVec, f64)> {
    let d = distance(p, q)?;
    if d < 1e-12 {
        return Err(Error::DegenerateInput(
            "log_map of coincident points".into(),
        ));
    }
    let qa = q.gauge_align(p);
    let c = d.cosh();
    let s = d.sinh();
    let mut v = TangentVec {
        base: p.clone(),
        vec: (&qa.coords - &p.coords * C64::new(c, 0.0)) / C64::new(s, 0.0),
    };
    v.reproject();
    let n = v.norm();
    v.vec /= C64::new(n, 0.0);
    Ok((v, d))
}

/// Point on the geodesic from p to q at parameter t (0 -> p, 1 -> q).
pub fn geodesic_point(p: &ModelPoint, q: &ModelPoint, t: f64) -> Result<ModelPoint> {
    if t == 0.0 {
        return Ok(p.clone());
    }
    let (v, d) = log_map(p, q)?;
    Ok(exp_map(&v, t * d))
}

/// Geodesic midpoint through coordinate averaging; unlike exp-based
/// interpolation this does not amplify the constraint defects of the
/// endpoints, so it stays sharp across long separations.
pub fn stable_midpoint(p: &ModelPoint, q: &ModelPoint) -> Result<ModelPoint> {
    let qa = q.gauge_align(p);
    let w = &p.coords + &qa.coords;
    let s2 = -metric(&w, &w);
    if s2 <= 0.0 {
        return Err(Error::DegenerateInput("midpoint of antipodal-like pair".into()));
    }
    let mut m = ModelPoint {
        space: p.space,
        coords: w / C64::new(s2.sqrt(), 0.0),
    };
    if !p.space.is_complex() && m.coords[0].re < 0.0 {
        m.coords *= C64::new(-1.0, 0.0);
    }
    Ok(m)
}

/// Parallel transport of `v` along the geodesic from its base point to `q`.
/// The returned vector is based at the gauge-aligned representative of `q`.
pub fn parallel_transport(v: &TangentVec, q: &ModelPoint) -> Result<TangentVec> {
    let p = &v.base;
    let d = distance(p, q)?;
    if d < 1e-11 {
        // zero-length geodesic: nothing moves, but adopt q's gauge
        let qa = q.gauge_align(p);
        return Ok(TangentVec {
            base: qa,
            vec: v.vec.clone(),
        });
    }
    let (u, _) = log_map(p, q)?;
    let qa = q.gauge_align(p);
    // direction of the geodesic at q
    let gp = &p.coords * C64::new(d.sinh(), 0.0) + &u.vec * C64::new(d.cosh(), 0.0);
    let a = pairing(&v.vec, &u.vec);
    let mut out = TangentVec {
        base: qa,
        vec: &v.vec + (&gp - &u.vec) * a,
    };
    out.reproject();
    Ok(out)
}

/// Transport along a piecewise-geodesic polyline of points.
pub fn transport_along(v: &TangentVec, path: &[ModelPoint]) -> Result<TangentVec> {
    let mut cur = v.clone();
    for q in path {
        cur = parallel_transport(&cur, q)?;
    }
    Ok(cur)
}

/// Riemannian angle between two tangent vectors at the same point.
pub fn angle(u: &TangentVec, v: &TangentVec) -> f64 {
    let c = metric(&u.vec, &v.vec) / (u.norm() * v.norm());
    c.clamp(-1.0, 1.0).acos()
}

/// Re-express `w` in the gauge of `base` (a representative of the same
/// point as w.base).  Real spaces: handles a possible sheet sign.
pub fn align_tangent_gauge(w: &TangentVec, base: &ModelPoint) -> TangentVec {
    let u = pairing(&w.base.coords, &base.coords);
    // w.base = lambda * base with |lambda| ~ 1; tangent identification
    // divides by lambda
    let lam = -u;
    let lam = if lam.norm() > 1e-300 {
        lam / lam.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    TangentVec {
        base: base.clone(),
        vec: &w.vec / lam,
    }
}

/// Norm of the difference of two unit tangents at the same point, gauge
/// aware; a sharp coincidence measure for directions.
pub fn tangent_residual(u: &TangentVec, w: &TangentVec) -> f64 {
    let wa = align_tangent_gauge(w, &u.base);
    (&u.vec - &wa.vec).norm()
}

/// Curvature tensor R(x,y)z of the model.
fn curvature_tensor(space: SpaceKind, x: &Vec64, y: &Vec64, z: &Vec64) -> Vec64 {
    if !space.is_complex() {
        // R(x,y)z = -( g(y,z) x - g(x,z) y )
        let a = metric(y, z);
        let b = metric(x, z);
        -(x * C64::new(a, 0.0) - y * C64::new(b, 0.0))
    } else {
        let i = C64::new(0.0, 1.0);
        let jx = x * i;
        let jy = y * i;
        let jz = z * i;
        let t1 = x * C64::new(metric(y, z), 0.0);
        let t2 = y * C64::new(metric(x, z), 0.0);
        let t3 = &jx * C64::new(metric(&jy, z), 0.0);
        let t4 = &jy * C64::new(metric(&jx, z), 0.0);
        let t5 = &jz * C64::new(2.0 * metric(x, &jy), 0.0);
        -(t1 - t2 + t3 - t4 + t5)
    }
}

/// Sectional curvature of the 2-plane spanned by two tangent vectors.
pub fn sectional_curvature(u: &TangentVec, w: &TangentVec) -> Result<f64> {
    let guu = metric(&u.vec, &u.vec);
    let gww = metric(&w.vec, &w.vec);
    let guw = metric(&u.vec, &w.vec);
    let gram = guu * gww - guw * guw;
    if gram < 1e-12 * guu * gww || gram <= 0.0 {
        return Err(Error::DegenerateInput(
            "sectional curvature of dependent span".into(),
        ));
    }
    let r = curvature_tensor(u.base.space, &u.vec, &w.vec, &w.vec);
    Ok(metric(&r, &u.vec) / gram)
}

/// A totally real tangent 2-plane (curvature -1), tangent to a unique
/// totally geodesic hyperbolic plane.
#[derive(Clone, Debug)]
pub struct RealPlane {
    pub base: ModelPoint,
    pub span: [TangentVec; 2],
}

impl RealPlane {
    /// Build from two independent tangent vectors after Gram-Schmidt;
    /// rejects spans whose curvature is not -1.
    pub fn new(u: &TangentVec, w: &TangentVec, tol: &Tolerances) -> Result<Self> {
        let e1 = u.normalized();
        let mut f = w.clone();
        let a = metric(&f.vec, &e1.vec);
        f.vec -= &e1.vec * C64::new(a, 0.0);
        let n = f.norm();
        if n < 1e-10 {
            return Err(Error::DegenerateInput("plane span is degenerate".into()));
        }
        f.vec /= C64::new(n, 0.0);
        let k = sectional_curvature(&e1, &f)?;
        if (k + 1.0).abs() > tol.curvature.max(1e-8) * 10.0 {
            return Err(Error::InvalidInput(format!(
                "span has curvature {k}, not a totally real plane"
            )));
        }
        Ok(RealPlane {
            base: e1.base.clone(),
            span: [e1, f],
        })
    }

    /// Ambient real span {p, u1, u2} as a basis list.
    fn real_basis(&self) -> [&Vec64; 3] {
        [
            &self.base.coords,
            &self.span[0].vec,
            &self.span[1].vec,
        ]
    }

    /// Orthonormal tangent basis of the plane at a point z known to lie
    /// on the plane: the spanning pair transported along the connecting
    /// geodesic, which stays inside the tangent plane because the plane
    /// is totally geodesic.
    pub fn tangent_basis_at(&self, z: &ModelPoint) -> Result<[TangentVec; 2]> {
        let d = distance(&self.base, z)?;
        if d < 1e-11 {
            let b1 = align_tangent_gauge(&self.span[0], z);
            let b2 = align_tangent_gauge(&self.span[1], z);
            return Ok([b1, b2]);
        }
        let mut b1 = parallel_transport(&self.span[0], z)?;
        let mut b2 = parallel_transport(&self.span[1], z)?;
        // re-orthonormalize against drift and purge normal components
        b1.reproject();
        let n1 = b1.norm();
        b1.vec /= C64::new(n1, 0.0);
        b2.reproject();
        let a = metric(&b2.vec, &b1.vec);
        b2.vec -= &b1.vec * C64::new(a, 0.0);
        let n2 = b2.norm();
        if n2 < 1e-8 {
            return Err(Error::DegenerateConfiguration(
                "plane basis degenerated under transport".into(),
            ));
        }
        b2.vec /= C64::new(n2, 0.0);
        Ok([b1, b2])
    }
}

/// Shortest-distance projection of an ambient vector onto the timelike
/// hyperboloid of the real span of `basis` (k = 2 for geodesics, 3 for
/// planes).  Returns the projected model point.
pub fn project_to_real_span(
    space: SpaceKind,
    basis: &[&Vec64],
    x: &ModelPoint,
) -> Result<ModelPoint> {
    let k = basis.len();
    // Gram matrix of the basis under Re<,>
    let mut g = nalgebra::DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = metric(basis[i], basis[j]);
        }
    }
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateConfiguration("plane basis is degenerate".into()))?;

    // components of x against the basis, split into real and imaginary parts
    let mut cr = nalgebra::DVector::<f64>::zeros(k);
    let mut ci = nalgebra::DVector::<f64>::zeros(k);
    for j in 0..k {
        let p = pairing(&x.coords, basis[j]);
        cr[j] = p.re;
        ci[j] = p.im;
    }
    let ar = &ginv * cr;
    let ai = &ginv * ci;
    let mut w = Vec64::zeros(basis[0].len());
    let mut wi = Vec64::zeros(basis[0].len());
    for j in 0..k {
        w += basis[j] * C64::new(ar[j], 0.0);
        wi += basis[j] * C64::new(ai[j], 0.0);
    }

    let ww = metric(&w, &w);
    let wiwi = metric(&wi, &wi);
    let y = if !space.is_complex() || wiwi.abs() < 1e-24 {
        if ww >= 0.0 {
            return Err(Error::DegenerateConfiguration(
                "projection target is not timelike".into(),
            ));
        }
        w
    } else {
        // maximize <w,y>^2 + <wi,y>^2 over unit timelike y in span{w,wi}:
        // y is the timelike eigenvector of the 2x2 Gram matrix.
        let m11 = ww;
        let m12 = metric(&w, &wi);
        let m22 = wiwi;
        let tr = m11 + m22;
        let det = m11 * m22 - m12 * m12;
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        let lam = (tr - disc) / 2.0; // most negative eigenvalue
        // eigenvector (alpha, beta)
        let (alpha, beta) = if m12.abs() > 1e-30 {
            (lam - m22, m12)
        } else if m11 <= m22 {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        let cand = &w * C64::new(alpha, 0.0) + &wi * C64::new(beta, 0.0);
        if metric(&cand, &cand) >= 0.0 {
            return Err(Error::DegenerateConfiguration(
                "projection target is not timelike".into(),
            ));
        }
        cand
    };
    let s2 = -metric(&y, &y);
    if s2 <= 0.0 {
        return Err(Error::DegenerateConfiguration(
            "projection target is not timelike".into(),
        ));
    }
    let mut p = ModelPoint {
        space,
        coords: y / C64::new(s2.sqrt(), 0.0),
    };
    // fix sheet/phase: pairing with x should have |.| >= 1 and we pick the
    // representative closest to x
    let c = pairing(&p.coords, &x.coords);
    if !space.is_complex() && c.re > 0.0 {
        p.coords *= C64::new(-1.0, 0.0);
    }
    Ok(p)
}

/// Shortest-distance projection onto the totally geodesic plane of `h`.
pub fn project_to_plane(x: &ModelPoint, h: &RealPlane) -> Result<ModelPoint> {
    let b = h.real_basis();
    project_to_real_span(x.space, &b, x)
}

/// Distance from a point to the geodesic through `p` with direction `v`.
pub fn project_to_geodesic(x: &ModelPoint, p: &ModelPoint, v: &TangentVec) -> Result<ModelPoint> {
    let basis = [&p.coords, &v.vec];
    project_to_real_span(x.space, &basis, x)
}

/// Composite parallel transport around the closed polygon `vertices`
/// (returning to vertices[0]).  The result is the matrix of the holonomy
/// in the orthonormal real tangent basis `basis` at vertices[0].
pub fn holonomy_around_polygon(
    vertices: &[ModelPoint],
    basis: &[TangentVec],
) -> Result<nalgebra::DMatrix<f64>> {
    if vertices.len() < 2 {
        return Err(Error::InvalidInput(
            "polygon needs at least 2 vertices".into(),
        ));
    }
    let m = basis.len();
    let mut cols = Vec::with_capacity(m);
    for b in basis {
        let mut cur = b.clone();
        for k in 1..=vertices.len() {
            let q = &vertices[k % vertices.len()];
            cur = parallel_transport(&cur, q)?;
        }
        // gauge: cur.base is a representative of vertices[0]; re-express in
        // the original gauge by aligning phases.
        let lam = if vertices[0].space.is_complex() {
            let u = pairing(&cur.base.coords, &vertices[0].coords);
            // cur.base = lam * vertices[0] with |lam| = 1; undo it
            -u.conj() / u.norm() * C64::new(-1.0, 0.0)
        } else {
            C64::new(1.0, 0.0)
        };
        cols.push(cur.vec * lam);
    }
    let mut mat = nalgebra::DMatrix::<f64>::zeros(m, m);
    for (j, col) in cols.iter().enumerate() {
        for (i, b) in basis.iter().enumerate() {
            mat[(i, j)] = metric(col, &b.vec);
        }
    }
    Ok(mat)
}

/// Orthonormal real basis of the full tangent space at p.
/// For complex spaces the basis is (b1, J b1, b2, J b2, ...).
pub fn tangent_basis(p: &ModelPoint) -> Vec<TangentVec> {
    let space = p.space;
    let dim = space.ambient_dim();
    let mut out: Vec<TangentVec> = Vec::new();
    let mut raw: Vec<Vec64> = Vec::new();
    for k in 0..dim {
        let mut e = Vec64::zeros(dim);
        e[k] = C64::new(1.0, 0.0);
        raw.push(e.clone());
        if space.is_complex() {
            raw.push(e * C64::new(0.0, 1.0));
        }
    }
    for cand in raw {
        if out.len() == space.tangent_dim() {
            break;
        }
        let mut v = TangentVec {
            base: p.clone(),
            vec: cand,
        };
        v.reproject();
        for prev in &out {
            let a = metric(&v.vec, &prev.vec);
            v.vec -= &prev.vec * C64::new(a, 0.0);
        }
        let n = v.norm();
        if n > 1e-6 {
            v.vec /= C64::new(n, 0.0);
            out.push(v);
        }
    }
    debug_assert_eq!(out.len(), space.tangent_dim());
    out
}

/// Orthonormal real basis of the K-orthogonal complement of the unit
/// tangent `v` (i.e. vectors orthogonal to v and, in the complex case, to
/// J v as well).
pub fn normal_basis(v: &TangentVec) -> Vec<TangentVec> {
    let space = v.base.space;
    let full = tangent_basis(&v.base);
    let mut kill: Vec<Vec64> = vec![v.vec.clone()];
    if space.is_complex() {
        kill.push(&v.vec * C64::new(0.0, 1.0));
    }
    let mut out = Vec::new();
    for cand in full {
        if out.len() == space.normal_dim() {
            break;
        }
        let mut w = cand;
        for k in &kill {
            let a = metric(&w.vec, k);
            w.vec -= k * C64::new(a, 0.0);
        }
        for prev in &out {
            let a = metric(&w.vec, &(prev as &TangentVec).vec);
            w.vec -= &(prev as &TangentVec).vec * C64::new(a, 0.0);
        }
        let n = w.norm();
        if n > 1e-6 {
            w.vec /= C64::new(n, 0.0);
            out.push(w);
        }
    }
    debug_assert_eq!(out.len(), space.normal_dim());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isometry::Isometry;
    use crate::rng::SubRng;
    use approx::assert_relative_eq;

    #[test]
    fn distance_identity_and_closed_form() {
        let s = SpaceKind::h2();
        let p = s.origin();
        assert_eq!(distance(&p, &p).unwrap(), 0.0);
        // hyperboloid points (1,0,0) and (3, sqrt(8), 0): cosh d = 3
        let mut q = Vec64::zeros(3);
        q[0] = C64::new(3.0, 0.0);
        q[1] = C64::new(8.0f64.sqrt(), 0.0);
        let q = ModelPoint::new(s, q).unwrap();
        assert_relative_eq!(
            distance(&p, &q).unwrap(),
            3.0f64.acosh(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn exp_log_round_trip_random() {
        for kind in [SpaceKind::h3(), SpaceKind::h4(), SpaceKind::ch2()] {
            let mut rng = SubRng::new(7, 0);
            for _ in 0..100 {
                let g = Isometry::random(kind, &mut rng);
                let p = g.apply_point(&kind.origin());
                let h = Isometry::random(kind, &mut rng);
                let q = h.apply_point(&kind.origin());
                let (v, d) = log_map(&p, &q).unwrap();
                let q2 = exp_map(&v, d);
                assert!(coincidence_residual(&q, &q2) < 1e-10, "{kind:?}");
            }
        }
    }

    #[test]
    fn exp_is_arclength_parametrized() {
        let s = SpaceKind::h3();
        let mut rng = SubRng::new(8, 0);
        let g = Isometry::random(s, &mut rng);
        let p = g.apply_point(&s.origin());
        let v = g.apply_tangent(&s.axis(1));
        for k in 0..21 {
            let t = k as f64;
            let q = exp_map(&v, t);
            assert_relative_eq!(distance(&p, &q).unwrap(), t, epsilon = 1e-8);
        }
    }

    #[test]
    fn transport_preserves_pairings_and_commutes_with_j() {
        for kind in [SpaceKind::h4(), SpaceKind::ch2()] {
            let mut rng = SubRng::new(9, 0);
            for _ in 0..50 {
                let g = Isometry::random(kind, &mut rng);
                let p = g.apply_point(&kind.origin());
                let h = Isometry::random(kind, &mut rng);
                let q = h.apply_point(&kind.origin());
                let basis = tangent_basis(&p);
                let u = &basis[0];
                let w = &basis[1];
                let tu = parallel_transport(u, &q).unwrap();
                let tw = parallel_transport(w, &q).unwrap();
                let before = pairing(&u.vec, &w.vec);
                let after = pairing(&tu.vec, &tw.vec);
                assert!((before - after).norm() < 1e-9);
                if kind.is_complex() {
                    let ju = u.complex_structure().unwrap();
                    let tju = parallel_transport(&ju, &q).unwrap();
                    let jtu = tu.complex_structure().unwrap();
                    let diff = (&tju.vec - &jtu.vec).norm_squared().sqrt();
                    assert!(diff < 1e-8, "transport does not commute with J");
                }
            }
        }
    }

    #[test]
    fn curvature_dichotomy_ch2() {
        let s = SpaceKind::ch2();
        let mut rng = SubRng::new(10, 0);
        for _ in 0..50 {
            let g = Isometry::random(s, &mut rng);
            let p = g.apply_point(&s.origin());
            let basis = tangent_basis(&p);
            let v = &basis[0];
            let jv = v.complex_structure().unwrap();
            let k1 = sectional_curvature(v, &jv).unwrap();
            assert_relative_eq!(k1, -4.0, epsilon = 1e-8);
            // w orthogonal to v and Jv
            let nb = normal_basis(v);
            let k2 = sectional_curvature(v, &nb[0]).unwrap();
            assert_relative_eq!(k2, -1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn real_space_has_constant_curvature() {
        let s = SpaceKind::h4();
        let mut rng = SubRng::new(11, 0);
        for _ in 0..50 {
            let g = Isometry::random(s, &mut rng);
            let p = g.apply_point(&s.origin());
            let b = tangent_basis(&p);
            let k = sectional_curvature(&b[1], &b[2]).unwrap();
            assert_relative_eq!(k, -1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn curvature_matches_circumference_oracle() {
        // independent check: circumference of a geodesic circle of radius r
        // in a plane of curvature -k^2 is 2 pi sinh(k r)/k.
        let s = SpaceKind::ch2();
        let p = s.origin();
        let b = tangent_basis(&p);
        let v = &b[0];
        for (w, expect) in [
            (v.complex_structure().unwrap(), -4.0),
            (normal_basis(v)[0].clone(), -1.0),
        ] {
            let r = 0.05;
            let n = 4000;
            let mut len = 0.0;
            let mut prev: Option<ModelPoint> = None;
            let mut first: Option<ModelPoint> = None;
            for k in 0..n {
                let th = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
                let dir = TangentVec {
                    base: p.clone(),
                    vec: &v.vec * C64::new(th.cos(), 0.0) + &w.vec * C64::new(th.sin(), 0.0),
                };
                let q = exp_map(&dir, r);
                if let Some(pr) = &prev {
                    len += distance(pr, &q).unwrap();
                }
                if first.is_none() {
                    first = Some(q.clone());
                }
                prev = Some(q);
            }
            len += distance(prev.as_ref().unwrap(), first.as_ref().unwrap()).unwrap();
            // invert C = 2 pi sinh(kr)/k for k
            let kk = (0.5..3.0)
                .step_by_search(|k| 2.0 * std::f64::consts::PI * (k * r).sinh() / k - len);
            let measured = -(kk * kk);
            assert!((measured - expect).abs() < 0.02, "{measured} vs {expect}");
        }
    }

    trait Bisect {
        fn step_by_search(&self, f: impl Fn(f64) -> f64) -> f64;
    }
    impl Bisect for std::ops::Range<f64> {
        fn step_by_search(&self, f: impl Fn(f64) -> f64) -> f64 {
            let (mut a, mut b) = (self.start, self.end);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if f(a) * f(m) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            0.5 * (a + b)
        }
    }

    #[test]
    fn projection_is_distance_nonincreasing() {
        for kind in [SpaceKind::h3(), SpaceKind::ch2()] {
            let mut rng = SubRng::new(12, 0);
            let p0 = kind.origin();
            let b = tangent_basis(&p0);
            let plane = if kind.is_complex() {
                let v = &b[0];
                let w = &normal_basis(v)[0];
                RealPlane::new(v, w, &Tolerances::default()).unwrap()
            } else {
                RealPlane::new(&b[0], &b[1], &Tolerances::default()).unwrap()
            };
            for _ in 0..200 {
                let g = Isometry::random(kind, &mut rng);
                let h = Isometry::random(kind, &mut rng);
                let x = g.apply_point(&p0);
                let y = h.apply_point(&p0);
                let px = project_to_plane(&x, &plane).unwrap();
                let py = project_to_plane(&y, &plane).unwrap();
                let d0 = distance(&x, &y).unwrap();
                let d1 = distance(&px, &py).unwrap();
                assert!(d1 <= d0 + 1e-9, "{kind:?}: {d1} > {d0}");
            }
        }
    }

    #[test]
    fn projection_matches_grid_oracle() {
        // dense search over the plane + refinement approximates the
        // projection independently of the closed form.
        for kind in [SpaceKind::h3(), SpaceKind::ch2()] {
            let p0 = kind.origin();
            let b = tangent_basis(&p0);
            let (u, w) = if kind.is_complex() {
                (b[0].clone(), normal_basis(&b[0])[0].clone())
            } else {
                (b[0].clone(), b[1].clone())
            };
            let plane = RealPlane::new(&u, &w, &Tolerances::default()).unwrap();
            let mut rng = SubRng::new(13, 0);
            for _ in 0..5 {
                let g = Isometry::random(kind, &mut rng);
                let x = g.apply_point(&p0);
                let px = project_to_plane(&x, &plane).unwrap();
                // grid oracle
                let mut best = (f64::INFINITY, p0.clone());
                let mut c0 = 0.0f64;
                let mut c1 = 0.0f64;
                let mut h = 0.1f64;
                for _ in 0..8 {
                    let mut improved = best.0;
                    for i in -20..=20 {
                        for j in -20..=20 {
                            let a0 = c0 + h * i as f64;
                            let a1 = c1 + h * j as f64;
                            let dir = TangentVec {
                                base: p0.clone(),
                                vec: &u.vec * C64::new(a0, 0.0) + &w.vec * C64::new(a1, 0.0),
                            };
                            let r = (a0 * a0 + a1 * a1).sqrt();
                            let q = exp_map(&dir.scaled(1.0 / r.max(1e-12)), r);
                            let d = distance(&x, &q).unwrap();
                            if d < improved {
                                improved = d;
                                best = (d, q.clone());
                                c0 = a0;
                                c1 = a1;
                            }
                        }
                    }
                    h *= 0.2;
                }
                assert!(
                    distance(&px, &best.1).unwrap() < 1e-5,
                    "{kind:?} projection disagrees with grid oracle"
                );
            }
        }
    }

    #[test]
    fn holonomy_two_gon_is_identity() {
        let s = SpaceKind::h3();
        let p = s.origin();
        let q = exp_map(&s.axis(0), 1.3);
        let basis = tangent_basis(&p);
        let m = holonomy_around_polygon(&[p.clone(), q], &basis).unwrap();
        let id = nalgebra::DMatrix::<f64>::identity(basis.len(), basis.len());
        assert!((m - id).norm() < 1e-9);
    }
}
