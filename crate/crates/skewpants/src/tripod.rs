//! Framed tripods, good connections between them, and skew pants with
//! loxodromic boundary.
//!
//! A connection is stored as a word of "letters": advances along the
//! cursor's first axis and small turns fixing the cursor origin.  All
//! exponentially sharp measurements (breaking angles, boundary loops) are
//! taken at the origin of a cursor frame, where they stay well
//! conditioned; coordinates of points far from the active frame origin
//! are only ever used for quantities that are O(1) or coarser.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexagon;
use crate::isometry::{axis_data, operator_angle, AxisData, Isometry, Mat};
use crate::rng::SubRng;
use crate::space::{
    angle, exp_map, metric, pairing, ModelPoint, SpaceKind, TangentVec,
    Vec64, C64,
};
use crate::tol::Tolerances;

/// Ray index paired with ray `i` by a connection (1 <-> 2, 3 <-> 3 in
/// 1-based labels).
pub fn conj_ray(i: usize) -> usize {
    [1, 0, 2][i]
}

/// An ordered triple of unit tangents with pairwise angle 2 pi / 3 inside
/// a totally real plane, plus an orthonormal frame of the K-orthogonal
/// complement of the plane's K-span.
#[derive(Clone, Debug)]
pub struct FramedTripod {
    pub base: ModelPoint,
    pub rays: [TangentVec; 3],
    pub frame: Vec<TangentVec>,
}

impl FramedTripod {
    /// The tripod at the origin spanned by the first two coordinate
    /// directions.
    pub fn standard(space: SpaceKind) -> Self {
        let base = space.origin();
        let u1 = space.axis(0);
        let u2 = space.axis(1);
        let ray = |th: f64| TangentVec {
            base: base.clone(),
            vec: &u1.vec * C64::new(th.cos(), 0.0) + &u2.vec * C64::new(th.sin(), 0.0),
        };
        let third = 2.0 * std::f64::consts::PI / 3.0;
        let rays = [ray(0.0), ray(third), ray(2.0 * third)];
        let frame = Self::complement_frame(&base, &u1, &u2);
        FramedTripod { base, rays, frame }
    }

    fn complement_frame(base: &ModelPoint, u1: &TangentVec, u2: &TangentVec) -> Vec<TangentVec> {
        let space = base.space;
        let mut kill: Vec<Vec64> = vec![u1.vec.clone(), u2.vec.clone()];
        if space.is_complex() {
            kill.push(&u1.vec * C64::new(0.0, 1.0));
            kill.push(&u2.vec * C64::new(0.0, 1.0));
        }
        let mut out = Vec::new();
        for cand in crate::space::tangent_basis(base) {
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
        out
    }

    pub fn random(space: SpaceKind, rng: &mut SubRng) -> Self {
        let g = Isometry::random(space, rng);
        Self::standard(space).transformed(&g)
    }

    pub fn transformed(&self, g: &Isometry) -> Self {
        FramedTripod {
            base: g.apply_point(&self.base),
            rays: [
                g.apply_tangent(&self.rays[0]),
                g.apply_tangent(&self.rays[1]),
                g.apply_tangent(&self.rays[2]),
            ],
            frame: self.frame.iter().map(|v| g.apply_tangent(v)).collect(),
        }
    }

    /// Cyclic relabeling (v1,v2,v3) -> (v2,v3,v1) with the same frame.
    pub fn cycled(&self) -> Self {
        FramedTripod {
            base: self.base.clone(),
            rays: [
                self.rays[1].clone(),
                self.rays[2].clone(),
                self.rays[0].clone(),
            ],
            frame: self.frame.clone(),
        }
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let third = 2.0 * std::f64::consts::PI / 3.0;
        for i in 0..3 {
            let a = angle(&self.rays[i], &self.rays[(i + 1) % 3]);
            if (a - third).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "tripod ray angle {a} differs from 2pi/3"
                )));
            }
        }
        let k = crate::space::sectional_curvature(&self.rays[0], &self.rays[1])?;
        if (k + 1.0).abs() > tol.curvature * 100.0 {
            return Err(Error::InvalidInput(format!(
                "tripod plane has curvature {k}"
            )));
        }
        for (i, f) in self.frame.iter().enumerate() {
            for r in &self.rays {
                if pairing(&f.vec, &r.vec).norm() > 1e-8 {
                    return Err(Error::InvalidInput(format!(
                        "frame vector {i} not K-orthogonal to the tripod plane"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Oriented in-plane basis (u1, u2) with rays at angles 0, 2pi/3,
    /// 4pi/3 from u1.
    pub fn plane_basis(&self) -> (TangentVec, TangentVec) {
        let u1 = self.rays[0].clone();
        // u2 ~ normalize(ray1 - cos(2pi/3) ray0)
        let mut u2 = self.rays[1].clone();
        let c = metric(&u2.vec, &u1.vec);
        u2.vec -= &u1.vec * C64::new(c, 0.0);
        let n = u2.norm();
        u2.vec /= C64::new(n, 0.0);
        (u1, u2)
    }

    /// In-plane unit normal of ray i (rotation by +pi/2 in the tripod
    /// orientation).
    pub fn in_plane_normal(&self, i: usize) -> TangentVec {
        let (u1, u2) = self.plane_basis();
        let th = 2.0 * std::f64::consts::PI / 3.0 * (i as f64) + std::f64::consts::FRAC_PI_2;
        TangentVec {
            base: self.base.clone(),
            vec: &u1.vec * C64::new(th.cos(), 0.0) + &u2.vec * C64::new(th.sin(), 0.0),
        }
    }

    pub fn ray_point(&self, i: usize, t: f64) -> ModelPoint {
        exp_map(&self.rays[i], t)
    }

    /// The pushed frame over gamma_{v_i}'(t) as an isometry taking the
    /// canonical frame (origin; e1 = base vector, e2 = first vector,
    /// e3.. = transported tripod frame) to it.
    pub fn pushed_frame_isometry(&self, i: usize, t: f64) -> Result<Isometry> {
        let p = self.ray_point(i, t);
        let base_vec = {
            // gamma'(t) via transport of the ray direction
            crate::space::parallel_transport(&self.rays[i], &p)?
        };
        let first = crate::space::parallel_transport(&self.in_plane_normal(i), &p)?;
        let mut cols: Vec<TangentVec> = vec![base_vec, first];
        for f in &self.frame {
            cols.push(crate::space::parallel_transport(f, &p)?);
        }
        frame_to_isometry(&p, &cols)
    }
}

/// Build the isometry whose columns are (point, v1, v2, ...) completed to
/// a full J-orthonormal system.  For real spaces the tangent columns are
/// completed by a deterministic orthonormal completion.
pub fn frame_to_isometry(p: &ModelPoint, vecs: &[TangentVec]) -> Result<Isometry> {
    let space = p.space;
    let dim = space.ambient_dim();
    let needed = if space.is_complex() { dim - 1 } else { dim - 1 };
    let mut cols: Vec<Vec64> = vec![p.coords.clone()];
    let mut have: Vec<TangentVec> = Vec::new();
    for v in vecs {
        have.push(v.clone());
    }
    // complete with Gram-Schmidt over the tangent basis (complex spaces
    // complete over the C-span, so only one vector per complex line)
    for cand in crate::space::tangent_basis(p) {
        if have.len() >= needed {
            break;
        }
        let mut w = cand;
        let wp = pairing(&w.vec, &p.coords);
        w.vec += &p.coords * wp;
        for prev in &have {
            let a = pairing(&w.vec, &prev.vec);
            w.vec -= &prev.vec * a;
        }
        let n = w.norm();
        if n > 1e-6 {
            w.vec /= C64::new(n, 0.0);
            have.push(w);
        }
    }
    if space.is_complex() {
        // keep only a C-basis: drop vectors inside the C-span of earlier
        let mut kept: Vec<TangentVec> = Vec::new();
        for v in have {
            let mut w = v;
            for prev in &kept {
                let a = pairing(&w.vec, &prev.vec);
                w.vec -= &prev.vec * a;
            }
            if crate::space::norm(&w.vec) > 1e-6 {
                let n = crate::space::norm(&w.vec);
                w.vec /= C64::new(n, 0.0);
                kept.push(w);
            }
            if kept.len() == dim - 1 {
                break;
            }
        }
        have = kept;
    }
    for v in &have {
        cols.push(v.vec.clone());
    }
    if cols.len() != dim {
        return Err(Error::DegenerateConfiguration(
            "could not complete frame to an isometry".into(),
        ));
    }
    let mut m = Mat::zeros(dim, dim);
    for (k, c) in cols.iter().enumerate() {
        m.set_column(k, c);
    }
    Isometry::new(space, m)
}

/// One step of a connection word, expressed in the cursor frame.
#[derive(Clone, Debug)]
pub enum Letter {
    /// Boost by t along the cursor's first axis.
    Advance(f64),
    /// Isometry fixing the cursor origin (ambient matrix, fixes e0).
    Turn(Mat),
}

impl Letter {
    fn matrix(&self, space: SpaceKind) -> Mat {
        match self {
            Letter::Advance(t) => {
                let o = space.origin();
                let e1 = space.axis(0);
                Isometry::transvection(&o, &e1, *t).matrix
            }
            Letter::Turn(q) => q.clone(),
        }
    }
}

/// Apply the word to a vector of end-frame coordinates, producing
/// start-frame coordinates (fold from the inside out).
pub fn word_apply(space: SpaceKind, letters: &[Letter], x: &Vec64) -> Vec64 {
    let mut v = x.clone();
    for l in letters.iter().rev() {
        v = l.matrix(space) * v;
    }
    v
}

/// Apply the inverse word: start-frame coordinates to end-frame.
pub fn word_apply_inverse(space: SpaceKind, letters: &[Letter], x: &Vec64) -> Vec64 {
    let mut v = x.clone();
    for l in letters {
        let m = l.matrix(space);
        let j = {
            let d = space.ambient_dim();
            let mut j = Mat::identity(d, d);
            j[(0, 0)] = C64::new(-1.0, 0.0);
            j
        };
        let minv = &j * m.adjoint() * &j;
        v = minv * v;
    }
    v
}

/// Full word as a single matrix (for coarse, relative-precision uses).
pub fn word_matrix(space: SpaceKind, letters: &[Letter]) -> Mat {
    let d = space.ambient_dim();
    let mut m = Mat::identity(d, d);
    for l in letters {
        m = m * l.matrix(space);
    }
    m
}

/// Random small rotation of the tangent space at the origin, fixing e0
/// and rotating a random tangent 2-plane by `angle`.
pub fn small_rotation(space: SpaceKind, ang: f64, rng: &mut SubRng) -> Mat {
    let o = space.origin();
    let basis = crate::space::tangent_basis(&o);
    let m = basis.len();
    let mut a = Vec64::zeros(space.ambient_dim());
    let mut b = Vec64::zeros(space.ambient_dim());
    for k in 0..m {
        a += &basis[k].vec * C64::new(rng.normal(), 0.0);
        b += &basis[k].vec * C64::new(rng.normal(), 0.0);
    }
    let na = crate::space::norm(&a);
    a /= C64::new(na, 0.0);
    let ab = metric(&b, &a);
    b -= &a * C64::new(ab, 0.0);
    let nb = crate::space::norm(&b);
    if nb < 1e-9 {
        return Mat::identity(space.ambient_dim(), space.ambient_dim());
    }
    b /= C64::new(nb, 0.0);
    let u = TangentVec {
        base: o.clone(),
        vec: a.clone(),
    };
    let target = TangentVec {
        base: o.clone(),
        vec: &a * C64::new(ang.cos(), 0.0) + &b * C64::new(ang.sin(), 0.0),
    };
    Isometry::rotation_between(&o, &u, &target).matrix
}

/// The flip: rotation by pi in the (e1, e2) tangent plane, negating the
/// base vector and first frame vector.
pub fn flip_matrix(space: SpaceKind) -> Mat {
    let d = space.ambient_dim();
    let mut m = Mat::identity(d, d);
    m[(1, 1)] = C64::new(-1.0, 0.0);
    m[(2, 2)] = C64::new(-1.0, 0.0);
    m
}

/// A good connection between ray `i` of tripod x and ray conj(i) of the
/// second tripod, with its placement and sharp end measurements.
#[derive(Clone, Debug)]
pub struct GoodConnection {
    pub ray_index: usize,
    pub r_param: f64,
    pub delta: f64,
    /// Word from the x-side pushed frame (at parameter R) to the placed
    /// y-side pushed frame (at parameter R).
    pub letters: Vec<Letter>,
    /// Placement isometry carrying the abstract y tripod onto the lift
    /// used by this connection.
    pub placement: Isometry,
    pub length: f64,
    pub breaking_angle_start: f64,
    pub breaking_angle_end: f64,
    pub frame_operator_angle: f64,
}

/// Angle between unit tangents at the frame origin, sharp for small
/// angles (computed through the transverse norm).
fn angle_sharp(u: &Vec64, v: &Vec64) -> f64 {
    let c = metric(u, v);
    let w = v - u * C64::new(c, 0.0);
    let s = crate::space::norm(&w);
    s.atan2(c)
}

/// Operator angle of an ambient matrix fixing e0, as a rotation of the
/// real tangent space at the origin.
pub fn tangent_operator_angle(space: SpaceKind, m: &Mat) -> f64 {
    let o = space.origin();
    let basis = crate::space::tangent_basis(&o);
    let k = basis.len();
    let mut real = DMatrix::<f64>::zeros(k, k);
    for (j, b) in basis.iter().enumerate() {
        let img = m * &b.vec;
        for (i, bi) in basis.iter().enumerate() {
            real[(i, j)] = metric(&img, &bi.vec);
        }
    }
    operator_angle(&real)
}

/// Build a good connection along ray `i` of `x`, placing a lift of `y`
/// from the frame-flow recipe: continue the ray to 2R, jitter, flow 2R,
/// flip and jitter, then walk back down the image ray to parameter R.
///
/// The jitters are rotations fixing the cursor origin; they model the
/// frame-flow witnesses and must stay within angle delta/2 of the
/// identity, as must the flow-image mismatch they produce.
pub fn build_good_connection(
    x: &FramedTripod,
    y: &FramedTripod,
    i: usize,
    r_param: f64,
    delta: f64,
    jitter_start: &Mat,
    jitter_end: &Mat,
) -> Result<GoodConnection> {
    let space = x.base.space;
    let a1 = tangent_operator_angle(space, jitter_start);
    if a1 > delta / 2.0 + 1e-12 {
        return Err(Error::PreconditionFailed(format!(
            "witness frame lies {a1:.3e} from the pushed frame, above delta/2"
        )));
    }
    let a2 = tangent_operator_angle(space, jitter_end);
    if a2 > delta / 2.0 + 1e-12 {
        return Err(Error::PreconditionFailed(format!(
            "flow image lies {a2:.3e} from the target frame, above delta/2"
        )));
    }
    let flip = flip_matrix(space);
    let letters = vec![
        Letter::Advance(r_param),
        Letter::Turn(jitter_start.clone()),
        Letter::Advance(2.0 * r_param),
        Letter::Turn(jitter_end * &flip),
        Letter::Advance(-r_param),
    ];

    // end point in the start frame and start point in the end frame
    let e0 = {
        let mut v = Vec64::zeros(space.ambient_dim());
        v[0] = C64::new(1.0, 0.0);
        v
    };
    let e1 = {
        let mut v = Vec64::zeros(space.ambient_dim());
        v[1] = C64::new(1.0, 0.0);
        v
    };
    let b_in_a = word_apply(space, &letters, &e0);
    let a_in_b = word_apply_inverse(space, &letters, &e0);

    let cosh_len = pairing(&b_in_a, &e0).norm().max(1.0);
    let length = crate::space::acosh_stable(cosh_len);

    // direction to the far end, measured at each frame origin
    let dir_at = |far: &Vec64| -> Vec64 {
        let c = pairing(far, &e0);
        // gauge-align and subtract the cosh component
        let lam = if space.is_complex() {
            -c.conj() / c.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let aligned = far * lam;
        let mut v = &aligned - &e0 * C64::new(cosh_len, 0.0);
        v /= C64::new((cosh_len * cosh_len - 1.0).max(1e-300).sqrt(), 0.0);
        v
    };
    let start_dir = dir_at(&b_in_a);
    let end_dir = dir_at(&a_in_b);
    let breaking_angle_start = angle_sharp(&e1, &start_dir);
    // at the far end the loop continues down the image ray (-e1), and the
    // connection arrives with direction -dir(b->a)
    let breaking_angle_end = angle_sharp(&e1, &end_dir);

    // frame condition: transport along the chain is trivial on advances,
    // so the comparison element is flip . J1 . J2 . flip
    let a_mat = &flip * jitter_start * jitter_end * &flip;
    let frame_operator_angle = tangent_operator_angle(space, &a_mat);

    // placement: x-frame placement . word . (y pushed frame)^{-1}
    let p_a = x.pushed_frame_isometry(i, r_param)?;
    let p_y = y.pushed_frame_isometry(conj_ray(i), r_param)?;
    let w = word_matrix(space, &letters);
    let placement = Isometry {
        space,
        matrix: &(p_a.matrix) * w * p_y.inverse().matrix,
    };

    Ok(GoodConnection {
        ray_index: i,
        r_param,
        delta,
        letters,
        placement,
        length,
        breaking_angle_start,
        breaking_angle_end,
        frame_operator_angle,
    })
}

/// Report of the three well-connectedness conditions for one connection.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ConnectionReport {
    pub length: f64,
    pub length_margin: f64,
    pub breaking_angle: f64,
    pub breaking_margin: f64,
    pub frame_angle: f64,
    pub frame_margin: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WellConnectedReport {
    pub pass: bool,
    pub connections: Vec<ConnectionReport>,
}

/// Evaluate the three conditions of well-connectedness (kappa fixed to 1)
/// for a triple of connections.
pub fn check_well_connected(
    x: &FramedTripod,
    _y: &FramedTripod,
    conns: &[GoodConnection],
    r_param: f64,
    delta: f64,
) -> Result<WellConnectedReport> {
    let _ = x;
    if conns.len() != 3 {
        return Err(Error::InvalidInput("expected three connections".into()));
    }
    let mut seen = [false; 3];
    for c in conns {
        if c.ray_index > 2 || seen[c.ray_index] {
            return Err(Error::InvalidInput(
                "connection ray indices must be 0,1,2".into(),
            ));
        }
        seen[c.ray_index] = true;
    }
    let mut reports = Vec::new();
    let mut pass = true;
    let angle_bound = (-r_param).exp() / delta;
    for c in conns {
        let length_margin = delta / 4.0 - (c.length - 4.0 * r_param).abs();
        let worst_break = c.breaking_angle_start.max(c.breaking_angle_end);
        let breaking_margin = angle_bound - worst_break;
        let frame_margin = delta - c.frame_operator_angle;
        pass &= length_margin >= 0.0 && breaking_margin >= 0.0 && frame_margin >= 0.0;
        reports.push(ConnectionReport {
            length: c.length,
            length_margin,
            breaking_angle: worst_break,
            breaking_margin,
            frame_angle: c.frame_operator_angle,
            frame_margin,
        });
    }
    Ok(WellConnectedReport {
        pass,
        connections: reports,
    })
}

/// A skew pants: two well-connected framed tripods, the three good
/// connections, and the three boundary loxodromics.
#[derive(Clone, Debug)]
pub struct SkewPants {
    pub x: FramedTripod,
    pub y: FramedTripod,
    pub conns: Vec<GoodConnection>,
    pub r_param: f64,
    pub delta: f64,
    pub cuffs: Vec<Isometry>,
}

/// Generate a random well-connected pair and its connections; jitter
/// angles are bounded by delta/4 so the configurations pass the strict
/// check.
pub fn make_well_connected_pair(
    x: &FramedTripod,
    y: &FramedTripod,
    r_param: f64,
    delta: f64,
    rng: &mut SubRng,
) -> Result<Vec<GoodConnection>> {
    let space = x.base.space;
    let mut out = Vec::new();
    for i in 0..3 {
        let j1 = small_rotation(space, rng.range(0.0, delta / 4.0), rng);
        let j2 = small_rotation(space, rng.range(0.0, delta / 4.0), rng);
        out.push(build_good_connection(x, y, i, r_param, delta, &j1, &j2)?);
    }
    Ok(out)
}

/// The ideal coplanar configuration: zero jitters.
pub fn make_ideal_pair(
    x: &FramedTripod,
    y: &FramedTripod,
    r_param: f64,
    delta: f64,
) -> Result<Vec<GoodConnection>> {
    let space = x.base.space;
    let id = Mat::identity(space.ambient_dim(), space.ambient_dim());
    let mut out = Vec::new();
    for i in 0..3 {
        out.push(build_good_connection(x, y, i, r_param, delta, &id, &id)?);
    }
    Ok(out)
}

/// Interior angle at a ray point of the isoceles triangle with two legs R
/// and apex angle 2pi/3 (the chord geometry of the truncated hexagon).
pub fn chord_base_angle(r_param: f64) -> f64 {
    let chord = crate::space::acosh_stable(
        r_param.cosh().powi(2) + 0.5 * r_param.sinh().powi(2),
    );
    // law of sines: sin(apex)/sinh(chord) = sin(phi)/sinh(R)
    let s = (3.0f64.sqrt() / 2.0) * r_param.sinh() / chord.sinh();
    s.asin()
}

/// In-plane rotation of the cursor by `ang` (in the (e1,e2) tangent
/// plane), fixing everything K-orthogonal to it.
fn in_plane_rotation(space: SpaceKind, ang: f64) -> Mat {
    let d = space.ambient_dim();
    let mut m = Mat::identity(d, d);
    m[(1, 1)] = C64::new(ang.cos(), 0.0);
    m[(1, 2)] = C64::new(-ang.sin(), 0.0);
    m[(2, 1)] = C64::new(ang.sin(), 0.0);
    m[(2, 2)] = C64::new(ang.cos(), 0.0);
    m
}

/// The boundary loop of a pants between connections k and k+1: a closed
/// piecewise geodesic with 4 breakpoints, its holonomy, and sharp
/// measurements, all in the frame of the loop start (the x ray point of
/// connection k).
#[derive(Clone, Debug)]
pub struct BoundaryLoop {
    pub holonomy: Isometry,
    /// Letters of the developed loop in the start frame.
    pub letters: Vec<Letter>,
    /// Cumulative segment lengths (4 segments).
    pub segment_lengths: [f64; 4],
    pub translation_length: f64,
    pub axis: AxisData,
}

/// Letters traversing a hexagon chord from the pushed frame at one ray
/// point to the pushed frame at the next.  `sign` is +1 when the target
/// ray is one step counterclockwise, -1 clockwise.
fn chord_letters(space: SpaceKind, r_param: f64, sign: f64) -> Vec<Letter> {
    let phi = chord_base_angle(r_param);
    let chord = crate::space::acosh_stable(
        r_param.cosh().powi(2) + 0.5 * r_param.sinh().powi(2),
    );
    // leave: rotate e1 from the outward ray to the chord direction
    // (pi - phi, toward the target side); arrive: rotate the incoming
    // chord direction back onto the outward ray of the target (-phi).
    let leave = in_plane_rotation(space, sign * (std::f64::consts::PI - phi));
    let arrive = in_plane_rotation(space, -sign * phi);
    vec![
        Letter::Turn(leave),
        Letter::Advance(chord),
        Letter::Turn(arrive),
    ]
}

fn inverse_letters(space: SpaceKind, letters: &[Letter]) -> Vec<Letter> {
    let d = space.ambient_dim();
    let j = {
        let mut j = Mat::identity(d, d);
        j[(0, 0)] = C64::new(-1.0, 0.0);
        j
    };
    letters
        .iter()
        .rev()
        .map(|l| match l {
            Letter::Advance(t) => Letter::Advance(-t),
            Letter::Turn(q) => Letter::Turn(&j * q.adjoint() * &j),
        })
        .collect()
}

/// Close the boundary loop between connections k and (k+1) mod 3.
pub fn close_boundary_loop(
    x: &FramedTripod,
    y: &FramedTripod,
    conns: &[GoodConnection],
    k: usize,
    tol: &Tolerances,
) -> Result<BoundaryLoop> {
    let space = x.base.space;
    let kn = (k + 1) % 3;
    let ck = conns
        .iter()
        .find(|c| c.ray_index == k)
        .ok_or_else(|| Error::InvalidInput("missing connection".into()))?;
    let cn = conns
        .iter()
        .find(|c| c.ray_index == kn)
        .ok_or_else(|| Error::InvalidInput("missing connection".into()))?;
    let _ = y;

    // x chord: ray k -> ray k+1 is one counterclockwise step
    let mut letters = chord_letters(space, ck.r_param, 1.0);
    // alpha_{k+1}: x side to y side
    letters.extend(cn.letters.iter().cloned());
    // y chord: ray conj(k+1) -> ray conj(k); the conjugation reverses the
    // cyclic orientation, and the flip mirrors the plane, so the turn
    // sign matches the x side
    letters.extend(chord_letters(space, ck.r_param, 1.0));
    // alpha_k reversed: y side back to the x frame
    letters.extend(inverse_letters(space, &ck.letters));

    let holonomy = Isometry {
        space,
        matrix: word_matrix(space, &letters),
    };
    let chord = crate::space::acosh_stable(
        ck.r_param.cosh().powi(2) + 0.5 * ck.r_param.sinh().powi(2),
    );
    let segment_lengths = [chord, cn.length, chord, ck.length];
    let axis = axis_data(&holonomy, tol)?;
    Ok(BoundaryLoop {
        translation_length: axis.translation_length,
        letters,
        holonomy,
        axis,
        segment_lengths,
    })
}

/// Assemble a full skew pants from a generated configuration.
pub fn make_skew_pants(
    x: &FramedTripod,
    y: &FramedTripod,
    conns: Vec<GoodConnection>,
    tol: &Tolerances,
) -> Result<SkewPants> {
    let mut cuffs = Vec::new();
    for k in 0..3 {
        let bl = close_boundary_loop(x, y, &conns, k, tol)?;
        cuffs.push(bl.holonomy);
    }
    let r_param = conns[0].r_param;
    let delta = conns[0].delta;
    Ok(SkewPants {
        x: x.clone(),
        y: y.clone(),
        conns,
        r_param,
        delta,
        cuffs,
    })
}

/// Monodromy of a cuff: rotational part and its operator angle.
pub fn boundary_monodromy(
    pants: &SkewPants,
    cuff: usize,
    tol: &Tolerances,
) -> Result<(DMatrix<f64>, f64)> {
    let ad = axis_data(&pants.cuffs[cuff], tol)?;
    let ang = ad.monodromy_angle();
    Ok((ad.monodromy, ang))
}

/// Distance from the origin of the loop-start frame to the holonomy axis
/// at a point rebased `t` along segment `seg` of the loop; used to
/// measure how closely the loop fellow-travels the axis.
pub fn loop_axis_distance(
    space: SpaceKind,
    bl: &BoundaryLoop,
    seg: usize,
    t: f64,
    tol: &Tolerances,
) -> Result<f64> {
    // rebase the loop word cyclically so it starts at the sample point
    let mut rebased: Vec<Letter> = Vec::new();
    // split the letters into [before sample][after sample] walking the
    // segments; segment boundaries are Advance letters of the loop
    let mut adv_seen = 0usize;
    let mut split_at = None;
    for (li, l) in bl.letters.iter().enumerate() {
        if let Letter::Advance(len) = l {
            if len.abs() > 1e-9 {
                if adv_seen == seg {
                    split_at = Some((li, *len));
                    break;
                }
                adv_seen += 1;
            }
        }
    }
    let (li, seg_len) = split_at
        .ok_or_else(|| Error::InvalidInput("segment index out of range".into()))?;
    let tt = t.clamp(0.0, 1.0) * seg_len.abs() * seg_len.signum();
    rebased.push(Letter::Advance(seg_len - tt));
    rebased.extend(bl.letters[li + 1..].iter().cloned());
    rebased.extend(bl.letters[..li].iter().cloned());
    rebased.push(Letter::Advance(tt));
    let g = Isometry {
        space,
        matrix: word_matrix(space, &rebased),
    };
    let ad = axis_data(&g, tol)?;
    crate::isometry::distance_to_axis(&space.origin(), &ad.point, &ad.direction)
}

/// Expected cuff length scale 2 L(R) + 8R with L the hexagon chord.
pub fn expected_cuff_length(r_param: f64) -> f64 {
    let h = hexagon::hexagon_hr(r_param).expect("R > 1");
    2.0 * h.chord + 8.0 * r_param
}
