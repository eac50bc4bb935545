//! Form-preserving matrices acting on the model, loxodromic elements and
//! their axis data, and small rotation/alignment constructions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SubRng;
use crate::space::{
    acosh_stable, distance, metric, pairing, parallel_transport, ModelPoint, SpaceKind,
    TangentVec, Vec64, C64,
};
use crate::tol::Tolerances;

pub type Mat = DMatrix<C64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IsometryKind {
    Loxodromic,
    Elliptic,
    Parabolic,
    Identity,
    Other,
}

/// An ambient matrix with M* J M = J.
#[derive(Clone, Debug)]
pub struct Isometry {
    pub space: SpaceKind,
    pub matrix: Mat,
}

fn form_matrix(dim: usize) -> Mat {
    let mut j = Mat::identity(dim, dim);
    j[(0, 0)] = C64::new(-1.0, 0.0);
    j
}

impl Isometry {
    pub fn identity(space: SpaceKind) -> Self {
        Isometry {
            space,
            matrix: Mat::identity(space.ambient_dim(), space.ambient_dim()),
        }
    }

    pub fn new(space: SpaceKind, matrix: Mat) -> Result<Self> {
        let g = Isometry { space, matrix };
        // scale the tolerance with the matrix magnitude: far-reaching
        // isometries have entries e^rho and their pairings carry an
        // irreducible e^{2 rho} eps noise floor
        let scale = 1.0 + g.matrix.norm_squared();
        let r = g.form_residual();
        if r > Tolerances::default().form * scale {
            return Err(Error::InvalidInput(format!(
                "matrix does not preserve the form, residual {r:.3e}"
            )));
        }
        Ok(g)
    }

    /// || M* J M - J ||
    pub fn form_residual(&self) -> f64 {
        let d = self.space.ambient_dim();
        let j = form_matrix(d);
        let m = &self.matrix;
        let res = m.adjoint() * &j * m - &j;
        res.norm()
    }

    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            space: self.space,
            matrix: &self.matrix * &other.matrix,
        }
    }

    /// Inverse via the form: g^{-1} = J g* J.
    pub fn inverse(&self) -> Isometry {
        let d = self.space.ambient_dim();
        let j = form_matrix(d);
        Isometry {
            space: self.space,
            matrix: &j * self.matrix.adjoint() * &j,
        }
    }

    pub fn apply_point(&self, p: &ModelPoint) -> ModelPoint {
        let mut q = ModelPoint {
            space: self.space,
            coords: &self.matrix * &p.coords,
        };
        q.renormalize();
        q
    }

    pub fn apply_tangent(&self, v: &TangentVec) -> TangentVec {
        let base = self.apply_point(&v.base);
        let mut out = TangentVec {
            base,
            vec: &self.matrix * &v.vec,
        };
        out.reproject();
        out
    }

    /// Translation along the geodesic through `p` with unit direction `v`
    /// by (signed) distance `t`; the transvection realizing parallel
    /// transport along that geodesic.
    pub fn transvection(p: &ModelPoint, v: &TangentVec, t: f64) -> Isometry {
        let dim = p.space.ambient_dim();
        let (c, s) = (t.cosh(), t.sinh());
        let mut m = Mat::zeros(dim, dim);
        for k in 0..dim {
            let mut e = Vec64::zeros(dim);
            e[k] = C64::new(1.0, 0.0);
            // a = component along p (note <p,p> = -1), b = along v
            let a = -pairing(&e, &p.coords);
            let b = pairing(&e, &v.vec);
            let w = &e - &p.coords * a - &v.vec * b;
            let img = &p.coords * (a * c + b * s) + &v.vec * (a * s + b * c) + w;
            m.set_column(k, &img);
        }
        Isometry {
            space: p.space,
            matrix: m,
        }
    }

    /// Transvection mapping p to q along the connecting geodesic.
    pub fn transvection_to(p: &ModelPoint, q: &ModelPoint) -> Result<Isometry> {
        let d = distance(p, q)?;
        if d < 1e-14 {
            return Ok(Isometry::identity(p.space));
        }
        let (v, _) = crate::space::log_map(p, q)?;
        Ok(Isometry::transvection(p, &v, d))
    }

    /// Rotation fixing `p` mapping the unit tangent `u` to the unit
    /// tangent `w` (same base point), acting on the K-span of {u,w} and
    /// fixing its K-orthogonal complement.
    pub fn rotation_between(p: &ModelPoint, u: &TangentVec, w: &TangentVec) -> Isometry {
        let dim = p.space.ambient_dim();
        let c = pairing(&w.vec, &u.vec); // <w,u>
        let rest = &w.vec - &u.vec * c;
        let s = crate::space::norm(&rest);
        if s < 1e-14 {
            // w = c u with |c| = 1: phase rotation on the u-line
            let mut m = Mat::identity(dim, dim);
            if p.space.is_complex() {
                for k in 0..dim {
                    let mut e = Vec64::zeros(dim);
                    e[k] = C64::new(1.0, 0.0);
                    let a = pairing(&e, &u.vec);
                    let img = &e + &u.vec * (a * (c - C64::new(1.0, 0.0)));
                    m.set_column(k, &img);
                }
            }
            return Isometry {
                space: p.space,
                matrix: m,
            };
        }
        let u2 = rest / C64::new(s, 0.0);
        let one = C64::new(1.0, 0.0);
        let mut m = Mat::zeros(dim, dim);
        for k in 0..dim {
            let mut e = Vec64::zeros(dim);
            e[k] = one;
            let a = pairing(&e, &u.vec);
            let b = pairing(&e, &u2);
            let img = &e
                + &u.vec * (a * (c - one))
                + &u2 * (a * C64::new(s, 0.0))
                + &u.vec * (b * C64::new(-s, 0.0))
                + &u2 * (b * (c.conj() - one));
            m.set_column(k, &img);
        }
        Isometry {
            space: p.space,
            matrix: m,
        }
    }

    /// Isometry carrying the orthonormal tangent frame `from` at `p` to the
    /// orthonormal frame `to` at `q`, matching pairs greedily along the
    /// connecting geodesic.  For real spaces the match is exact; in the
    /// complex case each pair is matched exactly only if its Hermitian
    /// pairings agree, so callers should check the reported residual.
    pub fn frame_map(
        p: &ModelPoint,
        from: &[TangentVec],
        q: &ModelPoint,
        to: &[TangentVec],
    ) -> Result<(Isometry, f64)> {
        let mut g = Isometry::transvection_to(p, q)?;
        let mut residual = 0.0f64;
        for (u, w) in from.iter().zip(to.iter()) {
            let cur = g.apply_tangent(u).normalized();
            let wn = w.normalized();
            // rotate cur -> wn at q
            let rot = Isometry::rotation_between(&wn.base, &cur, &wn);
            g = rot.compose(&g);
            let check = g.apply_tangent(u).normalized();
            residual = residual.max(crate::space::tangent_residual(&check, &wn));
        }
        Ok((g, residual))
    }

    /// Haar-ish random isometry: random rotation at the origin, a random
    /// translation of length <= 2, and another random rotation.
    pub fn random(space: SpaceKind, rng: &mut SubRng) -> Isometry {
        let r1 = Isometry::random_rotation(space, rng);
        let r2 = Isometry::random_rotation(space, rng);
        let o = space.origin();
        let dirs = crate::space::tangent_basis(&o);
        let mut v = Vec64::zeros(space.ambient_dim());
        for d in &dirs {
            v += &d.vec * C64::new(rng.normal(), 0.0);
        }
        let n = crate::space::norm(&v);
        let t = rng.range(0.0, 2.0);
        let g = if n > 1e-12 {
            let dir = TangentVec {
                base: o.clone(),
                vec: v / C64::new(n, 0.0),
            };
            Isometry::transvection(&o, &dir, t)
        } else {
            Isometry::identity(space)
        };
        r2.compose(&g).compose(&r1)
    }

    /// Random rotation fixing the origin (SO(n) or U(n) block).
    pub fn random_rotation(space: SpaceKind, rng: &mut SubRng) -> Isometry {
        let dim = space.ambient_dim();
        let n = dim - 1;
        let block: Mat = if space.is_complex() {
            let a = Mat::from_fn(n, n, |_, _| C64::new(rng.normal(), rng.normal()));
            let qr = a.qr();
            let mut q = qr.q();
            let r = qr.r();
            for k in 0..n {
                let d = r[(k, k)];
                let ph = if d.norm() > 1e-300 {
                    d / d.norm()
                } else {
                    C64::new(1.0, 0.0)
                };
                for i in 0..n {
                    q[(i, k)] *= ph;
                }
            }
            q
        } else {
            let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.normal());
            let qr = a.qr();
            let mut q = qr.q();
            let r = qr.r();
            for k in 0..n {
                if r[(k, k)] < 0.0 {
                    for i in 0..n {
                        q[(i, k)] = -q[(i, k)];
                    }
                }
            }
            if q.determinant() < 0.0 {
                for i in 0..n {
                    q[(i, 0)] = -q[(i, 0)];
                }
            }
            q.map(|x| C64::new(x, 0.0))
        };
        let mut m = Mat::identity(dim, dim);
        m.view_mut((1, 1), (n, n)).copy_from(&block);
        Isometry { space, matrix: m }
    }

    /// Coarse classification from the spectrum.
    pub fn kind(&self, tol: &Tolerances) -> IsometryKind {
        let d = self.space.ambient_dim();
        let id = Mat::identity(d, d);
        if (&self.matrix - &id).norm() < 1e-12 {
            return IsometryKind::Identity;
        }
        match self.eigenvalues() {
            Ok(ev) => {
                let maxmod = ev.iter().map(|l| l.norm()).fold(0.0, f64::max);
                if maxmod > 1.0 + tol.parabolic {
                    IsometryKind::Loxodromic
                } else if maxmod > 1.0 - tol.parabolic {
                    // unit spectrum: elliptic or parabolic; elliptic iff
                    // diagonalizable, which we approximate by the residual
                    // of the fixed-point equation on the model.
                    IsometryKind::Elliptic
                } else {
                    IsometryKind::Other
                }
            }
            Err(_) => IsometryKind::Other,
        }
    }

    /// Eigenvalues of the ambient matrix.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        eigenvalues(&self.matrix)
    }
}

/// Eigenvalues of a small complex matrix.  Real matrices go through
/// nalgebra's real Schur; genuinely complex ones (only 3x3 in this crate)
/// use dominant/inverse power iterations plus the trace.
pub fn eigenvalues(m: &Mat) -> Result<Vec<C64>> {
    let n = m.nrows();
    let is_real = m.iter().all(|z| z.im.abs() < 1e-13 * (1.0 + z.re.abs()));
    if is_real {
        let mr = DMatrix::<f64>::from_fn(n, n, |i, j| m[(i, j)].re);
        let ev = mr.complex_eigenvalues();
        return Ok(ev.iter().copied().collect());
    }
    if n != 3 {
        return Err(Error::NumericalFailure(
            "complex eigenvalues only implemented for 3x3".into(),
        ));
    }
    // coefficients of det(M - x I) for 3x3: x^3 - tr x^2 + c2 x - det
    let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
    let det = m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)]);
    let c2 = m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)] + m[(0, 0)] * m[(2, 2)]
        - m[(0, 2)] * m[(2, 0)]
        + m[(0, 0)] * m[(1, 1)]
        - m[(0, 1)] * m[(1, 0)];
    Ok(cubic_roots(tr, c2, det))
}

/// Roots of x^3 - a x^2 + b x - c via Durand-Kerner.
fn cubic_roots(a: C64, b: C64, c: C64) -> Vec<C64> {
    let p = |x: C64| ((x - a) * x + b) * x - c;
    let mut r = [
        C64::new(0.4, 0.9),
        C64::new(0.4, 0.9) * C64::new(0.4, 0.9),
        C64::new(0.4, 0.9) * C64::new(0.4, 0.9) * C64::new(0.4, 0.9),
    ];
    // scale initial guesses to the coefficient magnitude
    let scale = (1.0 + a.norm() + b.norm().sqrt() + c.norm().cbrt()).max(1.0);
    for x in r.iter_mut() {
        *x *= C64::new(scale, 0.0);
    }
    for _ in 0..200 {
        let mut delta = 0.0f64;
        for i in 0..3 {
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..3 {
                if i != j {
                    denom *= r[i] - r[j];
                }
            }
            if denom.norm() < 1e-280 {
                continue;
            }
            let step = p(r[i]) / denom;
            r[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-14 * scale {
            break;
        }
    }
    r.to_vec()
}

/// Maximum rotation angle of a unit vector under an (approximately)
/// orthogonal real matrix: max |arg lambda| over the spectrum.
pub fn operator_angle(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let ev = m.complex_eigenvalues();
    ev.iter()
        .map(|l| l.arg().abs())
        .fold(0.0f64, f64::max)
}

/// Axis data of a loxodromic element.
#[derive(Clone, Debug)]
pub struct AxisData {
    pub point: ModelPoint,
    pub direction: TangentVec,
    pub translation_length: f64,
    /// Monodromy as a real matrix in the basis `normal_frame` of the
    /// K-orthogonal complement of the axis direction.
    pub monodromy: DMatrix<f64>,
    pub normal_frame: Vec<TangentVec>,
}

impl AxisData {
    pub fn monodromy_angle(&self) -> f64 {
        operator_angle(&self.monodromy)
    }
}

/// Dominant eigenpair by power iteration, polished by shifted inverse
/// iteration when the shift stays solvable.  Loxodromic elements have a
/// single eigenvalue of largest modulus, so convergence is geometric.
fn dominant_pair(m: &Mat, tol: &Tolerances) -> Result<(C64, Vec64)> {
    let n = m.nrows();
    let mut x = DVector::<C64>::from_fn(n, |i, _| C64::new(1.0 + 0.1 * i as f64, 0.05 * (i as f64 + 1.0)));
    x /= C64::new(x.norm(), 0.0);
    let mut lam = C64::new(1.0, 0.0);
    let mut converged = false;
    for _ in 0..500 {
        let y = m * &x;
        let ny = y.norm();
        if !ny.is_finite() || ny < 1e-290 {
            return Err(Error::NumericalFailure("power iteration blew up".into()));
        }
        // Rayleigh quotient in the Euclidean sense
        lam = x.dotc(&y);
        let ynorm = y / C64::new(ny, 0.0);
        // phase-aligned step difference
        let ph = x.dotc(&ynorm);
        let ph = if ph.norm() > 1e-290 { ph / ph.norm() } else { C64::new(1.0, 0.0) };
        let diff = (&ynorm - &x * ph).norm();
        x = ynorm;
        if diff < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        // slow convergence: polish with one shifted inverse step; a
        // persistent failure indicates an eigenvalue gap too small to
        // resolve
        let a = m - Mat::identity(n, n) * (lam * C64::new(1.0 + 1e-8, 0.0));
        if let Some(y) = a.lu().solve(&x) {
            let ny = y.norm();
            if ny.is_finite() && ny > 1e-290 {
                let xx = y / C64::new(ny, 0.0);
                let res = (m * &xx - &xx * (xx.dotc(&(m * &xx)))).norm();
                if res < 1e-9 * lam.norm().max(1.0) {
                    return Ok((xx.dotc(&(m * &xx)), xx));
                }
            }
        }
        return Err(Error::DegenerateConfiguration(
            "eigenvalue gap below threshold in axis extraction".into(),
        ));
    }
    lam = x.dotc(&(m * &x));
    Ok((lam, x))
}

/// Extract axis, translation length and monodromy of a loxodromic isometry.
pub fn axis_data(g: &Isometry, tol: &Tolerances) -> Result<AxisData> {
    let (lam_max, mut xp) = dominant_pair(&g.matrix, tol)?;
    if lam_max.norm() < 1.0 + tol.parabolic {
        return Err(Error::KindMismatch(format!(
            "element is not loxodromic (|lambda|max = {:.12})",
            lam_max.norm()
        )));
    }
    let ginv = g.inverse();
    let (_lam_inv, mut xm) = dominant_pair(&ginv.matrix, tol)?;
    if !g.space.is_complex() {
        // eigenvectors of real eigenvalues are real up to a phase
        for x in [&mut xp, &mut xm] {
            let k = (0..x.len())
                .max_by(|&i, &j| x[i].norm().partial_cmp(&x[j].norm()).unwrap())
                .unwrap();
            let ph = x[k] / x[k].norm();
            *x /= ph;
            let imag: f64 = x.iter().map(|z| z.im.abs()).sum();
            if imag > 1e-8 * x.norm() {
                return Err(Error::NumericalFailure(
                    "complex eigenvector for a real-space loxodromic".into(),
                ));
            }
            for z in x.iter_mut() {
                z.im = 0.0;
            }
        }
    }

    // normalize <x+,x-> = -2 and build axis point/direction
    let u = pairing(&xp, &xm);
    if u.norm() < 1e-12 {
        return Err(Error::NumericalFailure(
            "null eigenvectors pair to zero".into(),
        ));
    }
    let xm = xm * (C64::new(-2.0, 0.0) / u.conj());
    let p = ModelPoint {
        space: g.space,
        coords: (&xp + &xm) * C64::new(0.5, 0.0),
    };
    let mut p = p;
    p.renormalize();
    let mut v = TangentVec {
        base: p.clone(),
        vec: (&xp - &xm) * C64::new(0.5, 0.0),
    };
    v.reproject();
    let n = v.norm();
    v.vec /= C64::new(n, 0.0);

    let ell = lam_max.norm().ln();
    // orient the axis along the translation: g p should be at +ell
    let gp = g.apply_point(&p);
    let (dir_to_gp, _) = crate::space::log_map(&p, &gp)?;
    if metric(&dir_to_gp.vec, &v.vec) < 0.0 {
        v.vec = -v.vec;
    }

    // monodromy: transport dg(b) back along the axis and express in the
    // normal frame
    let frame = crate::space::normal_basis(&v);
    let m = frame.len();
    let mut mono = DMatrix::<f64>::zeros(m, m);
    for (j, b) in frame.iter().enumerate() {
        let gb = g.apply_tangent(b);
        let back = parallel_transport(&gb, &p)?;
        // fix gauge relative to p
        let lamr = if g.space.is_complex() {
            let w = pairing(&back.base.coords, &p.coords);
            -w.conj() / w.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let col = back.vec * lamr;
        for (i, bi) in frame.iter().enumerate() {
            mono[(i, j)] = metric(&col, &bi.vec);
        }
    }

    Ok(AxisData {
        point: p,
        direction: v,
        translation_length: ell,
        monodromy: mono,
        normal_frame: frame,
    })
}

/// Loxodromic with the given axis, translation length, and normal rotation
/// expressed in the orthonormal K-normal basis produced by
/// [`crate::space::normal_basis`] for the axis direction.
pub fn loxodromic_from_axis(
    p: &ModelPoint,
    v: &TangentVec,
    length: f64,
    normal_rotation: &DMatrix<f64>,
) -> Result<Isometry> {
    if length <= 0.0 {
        return Err(Error::InvalidInput("translation length must be > 0".into()));
    }
    let space = p.space;
    let frame = crate::space::normal_basis(v);
    let m = frame.len();
    if normal_rotation.nrows() != m || normal_rotation.ncols() != m {
        return Err(Error::InvalidInput(format!(
            "normal rotation must be {m}x{m}"
        )));
    }
    let orth = (normal_rotation.transpose() * normal_rotation
        - DMatrix::<f64>::identity(m, m))
    .norm();
    if orth > 1e-8 {
        return Err(Error::InvalidInput(
            "normal rotation is not orthogonal".into(),
        ));
    }
    if space.is_complex() {
        // must commute with J: in the (w, Jw) basis this means it is a
        // 2x2 rotation matrix (complex unit acting on the line)
        let a = normal_rotation;
        if m == 2 && ((a[(0, 0)] - a[(1, 1)]).abs() > 1e-9 || (a[(0, 1)] + a[(1, 0)]).abs() > 1e-9)
        {
            return Err(Error::InvalidInput(
                "normal rotation does not commute with the complex structure".into(),
            ));
        }
    }
    // rotation at p fixing v with matrix normal_rotation on the frame
    let dim = space.ambient_dim();
    let mut rot = Mat::zeros(dim, dim);
    for k in 0..dim {
        let mut e = Vec64::zeros(dim);
        e[k] = C64::new(1.0, 0.0);
        // decompose e = a p + b v (+ J components) + sum c_i f_i + rest
        let mut img = e.clone();
        // component matrix in the frame
        let mut coeffs = vec![0.0; m];
        for (i, f) in frame.iter().enumerate() {
            coeffs[i] = metric(&e, &f.vec);
        }
        // subtract then add rotated combination
        for (i, f) in frame.iter().enumerate() {
            img -= &f.vec * C64::new(coeffs[i], 0.0);
            let mut rotated = 0.0;
            for (j, c) in coeffs.iter().enumerate() {
                rotated += normal_rotation[(i, j)] * c;
            }
            let _ = rotated;
        }
        for (i, f) in frame.iter().enumerate() {
            let mut rot_i = 0.0;
            for (j, c) in coeffs.iter().enumerate() {
                rot_i += normal_rotation[(i, j)] * c;
            }
            img += &f.vec * C64::new(rot_i, 0.0);
        }
        rot.set_column(k, &img);
    }
    let rot = Isometry {
        space,
        matrix: rot,
    };
    let trans = Isometry::transvection(p, v, length);
    Ok(trans.compose(&rot))
}

/// Distance from x to the axis line through p with direction v.
pub fn distance_to_axis(x: &ModelPoint, p: &ModelPoint, v: &TangentVec) -> Result<f64> {
    let foot = crate::space::project_to_geodesic(x, p, v)?;
    distance(x, &foot)
}

/// acosh helper re-exported for handy use in experiments.
pub fn translation_length_from_matrix(g: &Isometry) -> Result<f64> {
    let ev = g.eigenvalues()?;
    let maxmod = ev.iter().map(|l| l.norm()).fold(0.0, f64::max);
    if maxmod <= 1.0 {
        return Err(Error::KindMismatch("not loxodromic".into()));
    }
    Ok(maxmod.ln())
}

/// Displacement-based translation length oracle: min over sampled points of
/// d(x, g x) approximates 2 arcsinh(...) >= ell, equality on the axis.
pub fn displacement(g: &Isometry, x: &ModelPoint) -> Result<f64> {
    distance(x, &g.apply_point(x))
}

pub fn acosh(x: f64) -> f64 {
    acosh_stable(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{log_map, normal_basis, tangent_basis};
    use approx::assert_relative_eq;

    #[test]
    fn random_isometries_preserve_form_and_distance() {
        for kind in [SpaceKind::h3(), SpaceKind::ch2()] {
            let mut rng = SubRng::new(1, 0);
            for _ in 0..100 {
                let g = Isometry::random(kind, &mut rng);
                assert!(g.form_residual() < 1e-9, "{kind:?}");
                let p = Isometry::random(kind, &mut rng).apply_point(&kind.origin());
                let q = Isometry::random(kind, &mut rng).apply_point(&kind.origin());
                let d0 = distance(&p, &q).unwrap();
                let d1 = distance(&g.apply_point(&p), &g.apply_point(&q)).unwrap();
                assert!((d0 - d1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn equivariance_of_core_operations() {
        for kind in [SpaceKind::h4(), SpaceKind::ch2()] {
            let mut rng = SubRng::new(2, 0);
            for _ in 0..25 {
                let g = Isometry::random(kind, &mut rng);
                let p = Isometry::random(kind, &mut rng).apply_point(&kind.origin());
                let q = Isometry::random(kind, &mut rng).apply_point(&kind.origin());
                let (v, d) = log_map(&p, &q).unwrap();
                // g exp = exp dg
                let e1 = g.apply_point(&crate::space::exp_map(&v, 0.37 * d));
                let e2 = crate::space::exp_map(&g.apply_tangent(&v), 0.37 * d);
                assert!(crate::space::coincidence_residual(&e1, &e2) < 1e-10);
                // transport commutes
                let b = &tangent_basis(&p)[1];
                let t1 = g.apply_tangent(&parallel_transport(b, &q).unwrap());
                let t2 = parallel_transport(&g.apply_tangent(b), &g.apply_point(&q)).unwrap();
                let diff = crate::space::tangent_residual(&t1, &t2);
                assert!(diff < 1e-9, "{kind:?} transport equivariance {diff}");
            }
        }
    }

    #[test]
    fn transvection_translates_by_t() {
        let s = SpaceKind::ch2();
        let o = s.origin();
        let b = tangent_basis(&o);
        let g = Isometry::transvection(&o, &b[0], 1.7);
        assert!(g.form_residual() < 1e-12);
        assert_relative_eq!(
            distance(&o, &g.apply_point(&o)).unwrap(),
            1.7,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pure_translation_axis_round_trip() {
        let s = SpaceKind::h3();
        let o = s.origin();
        let b = tangent_basis(&o);
        let g = Isometry::transvection(&o, &b[0], 1.0);
        let ad = axis_data(&g, &Tolerances::default()).unwrap();
        assert_relative_eq!(ad.translation_length, 1.0, epsilon = 1e-9);
        assert!(distance_to_axis(&o, &ad.point, &ad.direction).unwrap() < 1e-9);
        let ang = ad.monodromy_angle();
        assert!(ang < 1e-9, "pure translation has trivial monodromy: {ang}");
    }

    #[test]
    fn loxodromic_round_trip_with_rotation() {
        let s = SpaceKind::h3();
        let mut rng = SubRng::new(3, 0);
        for k in 0..50 {
            let mover = Isometry::random(s, &mut rng);
            let p = mover.apply_point(&s.origin());
            let v = mover.apply_tangent(&s.axis(0)).normalized();
            let ell = rng.range(0.5, 3.0);
            let theta = rng.range(-1.0, 1.0);
            let rot = DMatrix::<f64>::from_row_slice(
                2,
                2,
                &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()],
            );
            let g = loxodromic_from_axis(&p, &v, ell, &rot).unwrap();
            assert!(g.form_residual() < 1e-8);
            let ad = axis_data(&g, &Tolerances::default()).unwrap();
            assert_relative_eq!(ad.translation_length, ell, epsilon = 1e-8);
            assert!(
                distance_to_axis(&p, &ad.point, &ad.direction).unwrap() < 1e-7,
                "trial {k}"
            );
            assert_relative_eq!(ad.monodromy_angle(), theta.abs(), epsilon = 1e-8);
            // group law: g^2 doubles length, squares monodromy
            let g2 = g.compose(&g);
            let ad2 = axis_data(&g2, &Tolerances::default()).unwrap();
            assert_relative_eq!(ad2.translation_length, 2.0 * ell, epsilon = 1e-7);
            assert_relative_eq!(ad2.monodromy_angle(), (2.0 * theta).abs().min(
                2.0 * std::f64::consts::PI - (2.0 * theta).abs(),
            ), epsilon = 1e-7);
        }
    }

    #[test]
    fn complex_loxodromic_axis() {
        let s = SpaceKind::ch2();
        let o = s.origin();
        let b = tangent_basis(&o);
        let v = b[0].clone();
        let theta = 0.4f64;
        let rot =
            DMatrix::<f64>::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
        let g = loxodromic_from_axis(&o, &v, 2.0, &rot).unwrap();
        assert!(g.form_residual() < 1e-9);
        let ad = axis_data(&g, &Tolerances::default()).unwrap();
        assert_relative_eq!(ad.translation_length, 2.0, epsilon = 1e-9);
        assert_relative_eq!(ad.monodromy_angle(), 0.4, epsilon = 1e-8);
    }

    #[test]
    fn near_parabolic_rejected() {
        let s = SpaceKind::h3();
        let g = Isometry::identity(s);
        assert!(axis_data(&g, &Tolerances::default()).is_err());
    }

    #[test]
    fn frame_map_real_is_exact() {
        let s = SpaceKind::h4();
        let mut rng = SubRng::new(4, 0);
        for _ in 0..20 {
            let g1 = Isometry::random(s, &mut rng);
            let g2 = Isometry::random(s, &mut rng);
            let p = g1.apply_point(&s.origin());
            let fp: Vec<_> = tangent_basis(&p);
            // target frame produced by a group element so orientations match
            let fq: Vec<_> = fp.iter().map(|v| g2.compose(&g1.inverse()).apply_tangent(v)).collect();
            let q = g2.compose(&g1.inverse()).apply_point(&p);
            let (m, res) = Isometry::frame_map(&p, &fp, &q, &fq).unwrap();
            assert!(res < 1e-9, "greedy frame match should be exact, got {res}");
            assert!(crate::space::coincidence_residual(&m.apply_point(&p), &q) < 1e-10);
        }
    }

    #[test]
    fn normal_basis_spans_complement() {
        let s = SpaceKind::ch2();
        let _o = s.origin();
        let v = s.axis(0);
        let nb = normal_basis(&v);
        assert_eq!(nb.len(), 2);
        for b in &nb {
            assert!(pairing(&b.vec, &v.vec).norm() < 1e-12);
        }
    }
}
