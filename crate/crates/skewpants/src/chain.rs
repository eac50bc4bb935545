//! Chains of twisted ruled bands attached along long sides, their
//! intrinsic mesh metric, and the efficiency and comparison tests that
//! control the glued geometry.
//!
//! Every band attaches the next one along its +r long side, with the
//! seam feet offset by roughly one and the seam directions nearly
//! opposite after transport.  Intrinsic distances come from a shortest
//! path in the union mesh graph followed by midpoint straightening
//! against the exact ruled surfaces.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::band::{
    compute_seam, make_approximate_band, standard_band, Resolution, RuledBand, Seam,
};
use crate::error::{Error, Result};
use crate::isometry::Isometry;
use crate::rng::SubRng;
use crate::space::{
    align_tangent_gauge, distance_sharp, exp_map, log_map, metric, parallel_transport,
    ModelPoint, SpaceKind, TangentVec, C64,
};
use crate::tol::Tolerances;

/// A junction between consecutive bands of a chain.
#[derive(Clone, Debug)]
pub struct Junction {
    /// Anchor point and direction of the shared geodesic (band a's seam
    /// foot on its +r side).
    pub line_point: ModelPoint,
    pub line_dir: TangentVec,
    /// Arc positions of the two seam feet along the shared line.
    pub foot_param_a: f64,
    pub foot_param_b: f64,
    pub oriented_offset: f64,
    pub direction_angle: f64,
    pub orientations_opposite: bool,
}

/// A chain of ruled bands.
pub struct BandChain {
    pub space: SpaceKind,
    pub r_param: f64,
    pub delta: f64,
    pub exponent_b: f64,
    pub bands: Vec<RuledBand>,
    pub seams: Vec<Seam>,
    pub junctions: Vec<Junction>,
    graph: ChainGraph,
}

struct ChainGraph {
    offsets: Vec<usize>,
    adj: Vec<Vec<(u32, f64)>>,
}

/// Arc parameter of a point on the line through (p, v).
pub fn line_param(x: &ModelPoint, p: &ModelPoint, v: &TangentVec) -> f64 {
    let zp = crate::space::pairing(&x.coords, &p.coords);
    let zv = crate::space::pairing(&x.coords, &v.vec);
    let th = -2.0 * (zp * zv.conj()).re / (zp.norm_sqr() + zv.norm_sqr());
    0.5 * th.clamp(-1.0 + 1e-15, 1.0 - 1e-15).atanh()
}

/// Report of one well-attachment check.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AttachmentReport {
    pub orientations_opposite: bool,
    pub oriented_offset: f64,
    pub offset_margin: f64,
    pub direction_angle: f64,
    pub angle_margin: f64,
    pub pass: bool,
}

/// Evaluate the well-attachment conditions for two bands sharing a long
/// side: band `a` on its `plus_a` side, band `b` on its `plus_b` side.
pub fn check_well_attached(
    seam_a: &Seam,
    plus_a: bool,
    seam_b: &Seam,
    plus_b: bool,
    sigma1: f64,
    sigma2: f64,
) -> Result<AttachmentReport> {
    let (foot_a, line_a, seam_dir_a) = side_data(seam_a, plus_a);
    let (foot_b, line_b, seam_dir_b) = side_data(seam_b, plus_b);
    let par = line_param(&foot_b, &foot_a, &line_a);
    let on_line = exp_map(&line_a, par);
    if distance_sharp(&on_line, &foot_b)? > 1e-5 {
        return Err(Error::InvalidInput("bands do not share a long side".into()));
    }
    let line_a_at_b = parallel_transport(&line_a, &foot_b)?;
    let cosang = metric(&line_a_at_b.vec, &line_b.vec);
    if cosang.abs() < 1.0 - 1e-6 {
        return Err(Error::InvalidInput(
            "shared side directions are not aligned".into(),
        ));
    }

    // induced boundary orientation of a long side: +r side runs against
    // the stored line direction, -r side along it
    let ia = if plus_a { -1.0 } else { 1.0 };
    let ib = (if plus_b { -1.0 } else { 1.0 }) * cosang.signum();
    let orientations_opposite = (ia * ib) < 0.0;

    let oriented_offset = par * ia;
    let offset_margin = sigma1 - (oriented_offset - 1.0).abs();

    let minus_a_at_b = {
        let t = parallel_transport(&seam_dir_a, &foot_b)?;
        TangentVec {
            base: t.base.clone(),
            vec: -t.vec.clone(),
        }
    };
    let sb = align_tangent_gauge(&seam_dir_b, &minus_a_at_b.base);
    let direction_angle = crate::space::angle(&minus_a_at_b, &sb);
    let angle_margin = sigma2 - direction_angle;

    let pass = orientations_opposite && offset_margin >= 0.0 && angle_margin >= 0.0;
    Ok(AttachmentReport {
        orientations_opposite,
        oriented_offset,
        offset_margin,
        direction_angle,
        angle_margin,
        pass,
    })
}

fn side_data(seam: &Seam, plus: bool) -> (ModelPoint, TangentVec, TangentVec) {
    if plus {
        (
            seam.foot_plus.clone(),
            seam.line_dir_plus.clone(),
            seam.dir_plus.clone(),
        )
    } else {
        (
            seam.foot_minus.clone(),
            seam.line_dir_minus.clone(),
            seam.dir_minus.clone(),
        )
    }
}

/// Options for chain generation.
#[derive(Clone, Copy, Debug)]
pub struct ChainSpec {
    pub r_param: f64,
    pub delta: f64,
    pub exponent_b: f64,
    pub bands: usize,
    pub resolution: Resolution,
    /// Endpoint perturbation budget for approximate chains (0 = exact).
    pub approx_budget: f64,
}

/// Build an admissible chain: band sizes in [R - delta, R + delta],
/// twists below delta, attachments (delta, R^{-b})-tight.
pub fn make_chain(
    space: SpaceKind,
    spec: &ChainSpec,
    rng: &mut SubRng,
    tol: &Tolerances,
) -> Result<BandChain> {
    let half_width = crate::tol::CENTER_TRIANGLE_SIDE / 2.0;
    let sigma2 = spec.r_param.powf(-spec.exponent_b);
    let mut bands: Vec<RuledBand> = Vec::new();
    let mut seams: Vec<Seam> = Vec::new();
    let mut junctions: Vec<Junction> = Vec::new();

    for k in 0..spec.bands {
        let rk = spec.r_param + rng.range(-spec.delta, spec.delta) * 0.9;
        let twist = rng.range(0.0, spec.delta * 0.9);
        let template = standard_band(space, rk, twist, half_width, spec.resolution)?;
        let placed = if k == 0 {
            template
        } else {
            let template_seam = compute_seam(&template, tol)?;
            // previous band's +r side carries the new band's -r side
            let prev_seam = &seams[k - 1];
            let (_foot_prev, line_prev, seam_dir_prev) = side_data(prev_seam, true);
            // oriented distance runs against the +r line direction
            let offset = 1.0 + rng.range(-spec.delta, spec.delta) * 0.45;
            let target_foot = exp_map(&line_prev, -offset);
            let mut line_at_target = parallel_transport(&line_prev, &target_foot)?;
            // the new band's -r side must run opposite to the previous
            // band's induced orientation: its stored line direction keeps
            // the sign of the shared line
            let _ = &mut line_at_target;
            let mut v_target = {
                let t = parallel_transport(&seam_dir_prev, &target_foot)?;
                TangentVec {
                    base: t.base.clone(),
                    vec: -t.vec,
                }
            };
            let tilt = rng.range(0.0, sigma2 * 0.45);
            v_target = tilt_within_normal(&line_at_target, &v_target, tilt, rng)?;

            let (foot_t, line_t, seam_dir_t) = side_data(&template_seam, false);
            let (map, _res) = Isometry::frame_map(
                &foot_t,
                &[line_t.clone(), seam_dir_t.clone()],
                &target_foot,
                &[line_at_target.clone(), v_target.clone()],
            )?;
            transform_band(&template, &map)?
        };
        let placed = if spec.approx_budget > 0.0 {
            make_approximate_band(&placed, spec.approx_budget, rng)?.band
        } else {
            placed
        };
        let seam = compute_seam(&placed, tol)?;
        if k > 0 {
            let rep = check_well_attached(
                &seams[k - 1],
                true,
                &seam,
                false,
                spec.delta,
                sigma2.max(1e-4),
            )?;
            let (foot_prev, line_prev, _) = side_data(&seams[k - 1], true);
            let (foot_new, _, _) = side_data(&seam, false);
            junctions.push(Junction {
                line_point: foot_prev.clone(),
                line_dir: line_prev.clone(),
                foot_param_a: 0.0,
                foot_param_b: line_param(&foot_new, &foot_prev, &line_prev),
                oriented_offset: rep.oriented_offset,
                direction_angle: rep.direction_angle,
                orientations_opposite: rep.orientations_opposite,
            });
        }
        bands.push(placed);
        seams.push(seam);
    }

    let graph = build_graph(&bands)?;
    Ok(BandChain {
        space,
        r_param: spec.r_param,
        delta: spec.delta,
        exponent_b: spec.exponent_b,
        bands,
        seams,
        junctions,
        graph,
    })
}

fn tilt_within_normal(
    line: &TangentVec,
    v: &TangentVec,
    tilt: f64,
    rng: &mut SubRng,
) -> Result<TangentVec> {
    if tilt == 0.0 {
        return Ok(v.clone());
    }
    let nb = crate::space::normal_basis(line);
    let mut w = crate::space::Vec64::zeros(v.vec.len());
    for b in &nb {
        w += &b.vec * C64::new(rng.normal(), 0.0);
    }
    let a = metric(&w, &v.vec);
    w -= &v.vec * C64::new(a, 0.0);
    let n = crate::space::norm(&w);
    if n < 1e-9 {
        return Ok(v.clone());
    }
    w /= C64::new(n, 0.0);
    Ok(TangentVec {
        base: v.base.clone(),
        vec: &v.vec * C64::new(tilt.cos(), 0.0) + w * C64::new(tilt.sin(), 0.0),
    })
}

fn transform_band(band: &RuledBand, g: &Isometry) -> Result<RuledBand> {
    crate::band::make_band(
        &g.apply_point(&band.center),
        &g.apply_tangent(&band.center_dir).normalized(),
        &g.apply_tangent(&band.w_minus).normalized(),
        &g.apply_tangent(&band.w_plus).normalized(),
        band.r_param,
        band.half_width,
        band.resolution,
    )
}

fn build_graph(bands: &[RuledBand]) -> Result<ChainGraph> {
    let mut offsets = vec![0usize];
    for b in bands.iter() {
        offsets.push(offsets.last().unwrap() + b.resolution.ns * b.resolution.nt);
    }
    let total = *offsets.last().unwrap();
    let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); total];

    for (k, b) in bands.iter().enumerate() {
        let (ns, nt) = (b.resolution.ns, b.resolution.nt);
        let base = offsets[k];
        for i in 0..ns {
            for j in 0..nt {
                let a = base + i * nt + j;
                for (di, dj) in [(0i64, 1i64), (1, 0), (1, 1), (1, -1)] {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= ns as i64 || jj >= nt as i64 {
                        continue;
                    }
                    let c = base + (ii as usize) * nt + jj as usize;
                    let d = distance_sharp(&b.mesh[a - base], &b.mesh[c - base])?;
                    adj[a].push((c as u32, d));
                    adj[c].push((a as u32, d));
                }
            }
        }
    }

    // junction edges between band k's +r row and band k+1's -r row
    for k in 0..bands.len().saturating_sub(1) {
        let nta = bands[k].resolution.nt;
        let ntb = bands[k + 1].resolution.nt;
        let row_a = (bands[k].resolution.ns - 1) * nta;
        let base_a = offsets[k] + row_a;
        let base_b = offsets[k + 1];
        let anchor = bands[k].mesh[row_a].clone();
        let dir = {
            let nxt = &bands[k].mesh[row_a + nta - 1];
            let (v, _) = log_map(&anchor, nxt)?;
            v
        };
        let pa: Vec<f64> = (0..nta)
            .map(|j| line_param(&bands[k].mesh[row_a + j], &anchor, &dir))
            .collect();
        let pb: Vec<f64> = (0..ntb)
            .map(|j| line_param(&bands[k + 1].mesh[j], &anchor, &dir))
            .collect();
        for (jb, &t) in pb.iter().enumerate() {
            let idx = pa.partition_point(|&x| x < t);
            for ja in [idx.saturating_sub(1), idx.min(nta - 1)] {
                let d = (pa[ja] - t).abs();
                if d < 1.0 {
                    let a = base_a + ja;
                    let bnode = base_b + jb;
                    adj[a].push((bnode as u32, d));
                    adj[bnode].push((a as u32, d));
                }
            }
        }
    }
    Ok(ChainGraph { offsets, adj })
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem(f64, u32);
impl Eq for HeapItem {}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.partial_cmp(&self.0).unwrap_or(Ordering::Equal)
    }
}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A point on the chain surface with its band and parameters.
#[derive(Clone, Debug)]
pub struct SurfacePoint {
    pub band: usize,
    pub s: f64,
    pub t: f64,
    pub point: ModelPoint,
}

/// A straightened intrinsic path on the chain.
#[derive(Clone, Debug)]
pub struct IntrinsicPath {
    pub points: Vec<SurfacePoint>,
    pub length: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Crossing {
    pub junction: usize,
    pub param: f64,
    pub tau: f64,
}

impl BandChain {
    fn node_band(&self, id: usize) -> usize {
        self.graph.offsets.partition_point(|&o| o <= id) - 1
    }

    fn node_params(&self, id: usize) -> (usize, f64, f64) {
        let k = self.node_band(id);
        let b = &self.bands[k];
        let local = id - self.graph.offsets[k];
        let (i, j) = (local / b.resolution.nt, local % b.resolution.nt);
        let s = -b.half_width
            + 2.0 * b.half_width * (i as f64) / ((b.resolution.ns - 1) as f64);
        let t = -b.half_len + 2.0 * b.half_len * (j as f64) / ((b.resolution.nt - 1) as f64);
        (k, s, t)
    }

    fn node_point(&self, id: usize) -> &ModelPoint {
        let k = self.node_band(id);
        &self.bands[k].mesh[id - self.graph.offsets[k]]
    }

    /// Surface point from band parameters.
    pub fn surface_point(&self, band: usize, s: f64, t: f64) -> Result<SurfacePoint> {
        let point = self.bands[band].at(s, t)?;
        Ok(SurfacePoint { band, s, t, point })
    }

    /// Nearest mesh node to the given surface point.
    fn nearest_node(&self, sp: &SurfacePoint) -> usize {
        let b = &self.bands[sp.band];
        let i = (((sp.s + b.half_width) / (2.0 * b.half_width))
            * ((b.resolution.ns - 1) as f64))
            .round()
            .clamp(0.0, (b.resolution.ns - 1) as f64) as usize;
        let j = (((sp.t + b.half_len) / (2.0 * b.half_len)) * ((b.resolution.nt - 1) as f64))
            .round()
            .clamp(0.0, (b.resolution.nt - 1) as f64) as usize;
        self.graph.offsets[sp.band] + i * b.resolution.nt + j
    }

    fn shortest_path(&self, src: usize, dst: usize) -> Result<Vec<usize>> {
        let n = self.graph.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![u32::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapItem(0.0, src as u32));
        while let Some(HeapItem(d, u)) = heap.pop() {
            let u = u as usize;
            if d > dist[u] {
                continue;
            }
            if u == dst {
                break;
            }
            for &(v, w) in &self.graph.adj[u] {
                let v = v as usize;
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u as u32;
                    heap.push(HeapItem(nd, v as u32));
                }
            }
        }
        if !dist[dst].is_finite() {
            return Err(Error::NumericalFailure("mesh graph disconnected".into()));
        }
        let mut path = vec![dst];
        let mut cur = dst;
        while cur != src {
            cur = prev[cur] as usize;
            path.push(cur);
        }
        path.reverse();
        Ok(path)
    }

    /// Project an ambient point onto the chain near a warm-start surface
    /// point, also trying the bands adjacent to it.
    fn project_near(&self, x: &ModelPoint, hint: &SurfacePoint) -> Result<SurfacePoint> {
        let mut best: Option<(f64, SurfacePoint)> = None;
        let lo = hint.band.saturating_sub(1);
        let hi = (hint.band + 1).min(self.bands.len() - 1);
        for k in lo..=hi {
            let b = &self.bands[k];
            let (s0, t0) = if k == hint.band {
                (hint.s, hint.t)
            } else {
                (0.0, hint.t)
            };
            let (s, t) = b.project_params_local(x, s0, t0)?;
            let p = b.at(s, t)?;
            let d = distance_sharp(x, &p)?;
            if best.as_ref().map(|(bd, _)| d < *bd).unwrap_or(true) {
                best = Some((
                    d,
                    SurfacePoint {
                        band: k,
                        s,
                        t,
                        point: p,
                    },
                ));
            }
        }
        Ok(best.unwrap().1)
    }

    /// Intrinsic geodesic between two surface points: mesh shortest path
    /// plus midpoint straightening.
    pub fn intrinsic_geodesic(
        &self,
        a: &SurfacePoint,
        b: &SurfacePoint,
    ) -> Result<IntrinsicPath> {
        let src = self.nearest_node(a);
        let dst = self.nearest_node(b);
        let mut pts: Vec<SurfacePoint> = vec![a.clone()];
        if src != dst {
            for &id in &self.shortest_path(src, dst)? {
                let (k, s, t) = self.node_params(id);
                pts.push(SurfacePoint {
                    band: k,
                    s,
                    t,
                    point: self.node_point(id).clone(),
                });
            }
        }
        pts.push(b.clone());
        // drop near-duplicates
        let mut cleaned: Vec<SurfacePoint> = vec![pts[0].clone()];
        for p in pts.into_iter().skip(1) {
            if distance_sharp(&cleaned.last().unwrap().point, &p.point)? > 1e-9 {
                cleaned.push(p);
            }
        }
        let mut pts = cleaned;
        if pts.len() == 1 {
            pts.push(b.clone());
        }
        let mut len = self.path_length(&pts)?;
        for _ in 0..80 {
            for i in 1..pts.len() - 1 {
                let mid =
                    crate::space::stable_midpoint(&pts[i - 1].point, &pts[i + 1].point)?;
                let hint = pts[i].clone();
                pts[i] = self.project_near(&mid, &hint)?;
            }
            let new_len = self.path_length(&pts)?;
            if (len - new_len).abs() < 1e-8 * (1.0 + new_len) {
                len = new_len;
                break;
            }
            len = new_len;
        }
        Ok(IntrinsicPath {
            points: pts,
            length: len,
        })
    }

    fn path_length(&self, pts: &[SurfacePoint]) -> Result<f64> {
        let mut s = 0.0;
        for w in pts.windows(2) {
            s += distance_sharp(&w[0].point, &w[1].point)?;
        }
        Ok(s)
    }

    /// Crossings of an intrinsic path with the junction lines.
    pub fn crossings(&self, path: &IntrinsicPath) -> Result<Vec<Crossing>> {
        let mut out = Vec::new();
        for w in path.points.windows(2) {
            let (p, q) = (&w[0], &w[1]);
            if p.band == q.band {
                continue;
            }
            let j = p.band.min(q.band);
            if j + 1 != p.band.max(q.band) || j >= self.junctions.len() {
                continue;
            }
            let jn = &self.junctions[j];
            let mid = crate::space::stable_midpoint(&p.point, &q.point)?;
            let par = line_param(&mid, &jn.line_point, &jn.line_dir);
            let tau = (par - jn.foot_param_a)
                .abs()
                .min((par - jn.foot_param_b).abs())
                .max(1.0);
            out.push(Crossing {
                junction: j,
                param: par,
                tau,
            });
        }
        Ok(out)
    }

    /// Point on one of a band's long sides at arc offset `t` from that
    /// side's seam foot.
    pub fn boundary_point(&self, band: usize, plus: bool, t: f64) -> Result<SurfacePoint> {
        let seam = &self.seams[band];
        let (_, line, _) = side_data(seam, plus);
        let y = exp_map(&line, t);
        let b = &self.bands[band];
        let (s, tt) = b.project_params_local(
            &y,
            if plus { b.half_width } else { -b.half_width },
            0.0,
        )?;
        Ok(SurfacePoint {
            band,
            s,
            t: tt,
            point: y,
        })
    }
}

/// Result of one efficiency trial.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EfficiencyTrial {
    pub intrinsic: f64,
    pub ambient: f64,
    pub ratio: f64,
    pub lamination_sum: f64,
}

/// Max intrinsic/ambient ratio over short boundary-to-boundary geodesics
/// avoiding short sides, with lamination-sum bookkeeping.
pub fn chain_efficiency(
    chain: &BandChain,
    trials: usize,
    rng: &mut SubRng,
) -> Result<Vec<EfficiencyTrial>> {
    let cap = crate::tol::efficiency_length_cap();
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < trials && attempts < trials * 40 {
        attempts += 1;
        let nb = chain.bands.len();
        let j = rng.usize_below(nb - 1);
        let span = 1 + rng.usize_below((nb - j - 1).min(3));
        let band_a = j;
        let band_b = j + span;
        // endpoints on the outer sides of the two bands, near the shared
        // waist cluster
        let base_t = rng.range(-2.0, 2.0);
        let pa = chain.boundary_point(band_a, false, base_t)?;
        let pb = chain.boundary_point(band_b, true, base_t + rng.range(-0.3, 0.3))?;
        let ambient = distance_sharp(&pa.point, &pb.point)?;
        if ambient > cap || ambient < 1e-7 {
            continue;
        }
        let path = chain.intrinsic_geodesic(&pa, &pb)?;
        if path.length > cap * 2.0 {
            continue;
        }
        let crossings = chain.crossings(&path)?;
        let lam: f64 = crossings
            .iter()
            .map(|c| c.tau.powf(-chain.exponent_b))
            .sum();
        out.push(EfficiencyTrial {
            intrinsic: path.length,
            ambient,
            ratio: path.length / ambient,
            lamination_sum: lam,
        });
    }
    if out.len() < trials {
        return Err(Error::NumericalFailure(format!(
            "only {} of {trials} efficiency trials produced admissible arcs",
            out.len()
        )));
    }
    Ok(out)
}

/// Hyperbolic median length in curvature -k^2.
pub fn comparison_median(a: f64, b: f64, c: f64, k: f64) -> f64 {
    let ka = (k * a).cosh();
    let kb = (k * b).cosh();
    let kc2 = (k * c / 2.0).cosh();
    crate::space::acosh_stable(((ka + kb) / (2.0 * kc2)).max(1.0)) / k
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CatSample {
    pub sides: [f64; 3],
    pub defect: f64,
}

/// Midpoint comparison of sampled triangles on the chain against the
/// model plane of curvature -kappa^2.
pub fn cat_comparison(
    chain: &BandChain,
    samples: usize,
    kappa: f64,
    rng: &mut SubRng,
) -> Result<Vec<CatSample>> {
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < samples && attempts < samples * 30 {
        attempts += 1;
        let j = rng.usize_below(chain.junctions.len().max(1));
        let scale = rng.range(0.002, 0.008);
        let t0 = rng.range(-2.0, 2.0);
        let p0 = chain.boundary_point(j, false, t0)?;
        let p1 = chain.boundary_point(j, false, t0 + scale * rng.range(0.8, 1.5))?;
        let p2 = chain.boundary_point(j + 1, true, t0 + scale * rng.range(-0.5, 0.5))?;
        let e01 = chain.intrinsic_geodesic(&p0, &p1)?;
        let e12 = chain.intrinsic_geodesic(&p1, &p2)?;
        let e20 = chain.intrinsic_geodesic(&p2, &p0)?;
        let (a, b, c) = (e12.length, e20.length, e01.length);
        if a + b <= c + 1e-9 || b + c <= a + 1e-9 || c + a <= b + 1e-9 {
            continue;
        }
        let m = point_at_half_length(chain, &e01)?;
        let med = chain.intrinsic_geodesic(&m, &p2)?;
        let comparison = comparison_median(a, b, c, kappa);
        out.push(CatSample {
            sides: [a, b, c],
            defect: med.length - comparison,
        });
    }
    if out.len() < samples {
        return Err(Error::NumericalFailure(format!(
            "only {} of {samples} CAT samples were non-degenerate",
            out.len()
        )));
    }
    Ok(out)
}

fn point_at_half_length(chain: &BandChain, path: &IntrinsicPath) -> Result<SurfacePoint> {
    let half = path.length / 2.0;
    let mut acc = 0.0;
    for w in path.points.windows(2) {
        let d = distance_sharp(&w[0].point, &w[1].point)?;
        if acc + d >= half {
            let frac = (half - acc) / d.max(1e-300);
            let p = crate::space::geodesic_point(&w[0].point, &w[1].point, frac)?;
            return chain.project_near(&p, &w[0]);
        }
        acc += d;
    }
    Ok(path.points.last().unwrap().clone())
}

/// Interior cone angle at a point of a junction line.
pub fn junction_cone_angle(chain: &BandChain, junction: usize, t: f64) -> Result<f64> {
    let jn = &chain.junctions[junction];
    let z = exp_map(&jn.line_dir, t);
    let h = 1e-4;
    let mut total = 0.0;
    for (k, plus) in [(junction, true), (junction + 1, false)] {
        let band = &chain.bands[k];
        let start_s = if plus { band.half_width } else { -band.half_width };
        let (s0, t0) = band.project_params_local(&z, start_s, 0.0)?;
        let inward = if plus { -h } else { h };
        let pa = band.at(s0, t0 + h)?;
        let pb = band.at(s0 + inward, t0)?;
        let pc = band.at(s0, t0 - h)?;
        let (va, _) = log_map(&z, &pa)?;
        let (vb, _) = log_map(&z, &pb)?;
        let (vc, _) = log_map(&z, &pc)?;
        total += crate::space::angle(&va, &vb) + crate::space::angle(&vb, &vc);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::standard_band;

    fn small_spec(bands: usize) -> ChainSpec {
        ChainSpec {
            r_param: 8.0,
            delta: 0.02,
            exponent_b: 2.0,
            bands,
            resolution: Resolution { ns: 9, nt: 257 },
            approx_budget: 0.0,
        }
    }

    #[test]
    fn chain_attachments_pass() {
        let mut rng = SubRng::new(40, 0);
        let tol = Tolerances::default();
        let chain = make_chain(SpaceKind::h3(), &small_spec(4), &mut rng, &tol).unwrap();
        assert_eq!(chain.bands.len(), 4);
        for jn in &chain.junctions {
            assert!(jn.orientations_opposite);
            assert!(
                (jn.oriented_offset - 1.0).abs() <= 0.02,
                "{}",
                jn.oriented_offset
            );
        }
    }

    #[test]
    fn attachment_violation_detected() {
        let mut rng = SubRng::new(41, 0);
        let tol = Tolerances::default();
        let chain = make_chain(SpaceKind::h3(), &small_spec(2), &mut rng, &tol).unwrap();
        let rep = check_well_attached(
            &chain.seams[0],
            true,
            &chain.seams[1],
            false,
            1e-9,
            1e-9,
        )
        .unwrap();
        assert!(!rep.pass);
    }

    #[test]
    fn single_band_efficiency_is_one() {
        let tol = Tolerances::default();
        let band = standard_band(
            SpaceKind::h3(),
            8.0,
            0.0,
            crate::tol::CENTER_TRIANGLE_SIDE / 2.0,
            Resolution { ns: 9, nt: 257 },
        )
        .unwrap();
        let seam = compute_seam(&band, &tol).unwrap();
        let graph = build_graph(std::slice::from_ref(&band)).unwrap();
        let chain = BandChain {
            space: SpaceKind::h3(),
            r_param: 8.0,
            delta: 0.0,
            exponent_b: 2.0,
            bands: vec![band],
            seams: vec![seam],
            junctions: vec![],
            graph,
        };
        let p = chain.surface_point(0, -0.3, 0.07).unwrap();
        let q = chain.surface_point(0, 0.35, -0.09).unwrap();
        let path = chain.intrinsic_geodesic(&p, &q).unwrap();
        let amb = distance_sharp(&p.point, &q.point).unwrap();
        let ratio = path.length / amb;
        assert!(ratio >= 1.0 - 1e-4, "intrinsic below ambient: {ratio}");
        assert!(ratio < 1.0 + 2e-3, "untwisted band ratio {ratio}");
    }

    #[test]
    fn chain_efficiency_small() {
        let mut rng = SubRng::new(42, 0);
        let tol = Tolerances::default();
        let chain = make_chain(SpaceKind::h3(), &small_spec(4), &mut rng, &tol).unwrap();
        let trials = chain_efficiency(&chain, 10, &mut rng).unwrap();
        for t in &trials {
            assert!(t.ratio >= 1.0 - 1e-4, "ratio below one: {}", t.ratio);
            assert!(t.ratio <= 1.05, "inefficient arc: {}", t.ratio);
            assert!(t.lamination_sum < crate::tol::LAMINATION_SUM_BOUND);
        }
    }

    #[test]
    fn cat_comparison_small() {
        let mut rng = SubRng::new(43, 0);
        let tol = Tolerances::default();
        let chain = make_chain(SpaceKind::h3(), &small_spec(3), &mut rng, &tol).unwrap();
        let samples = cat_comparison(&chain, 12, 1.0 / 2.0f64.sqrt(), &mut rng).unwrap();
        for s in &samples {
            assert!(
                s.defect <= 1e-3,
                "comparison defect {} for sides {:?}",
                s.defect,
                s.sides
            );
        }
    }

    #[test]
    fn cone_angles_full() {
        let mut rng = SubRng::new(44, 0);
        let tol = Tolerances::default();
        let chain = make_chain(SpaceKind::h3(), &small_spec(3), &mut rng, &tol).unwrap();
        for j in 0..chain.junctions.len() {
            for t in [-1.0, 0.0, 1.5] {
                let ang = junction_cone_angle(&chain, j, t).unwrap();
                assert!(
                    ang >= 2.0 * std::f64::consts::PI - 1e-3,
                    "cone angle {ang} at junction {j}"
                );
            }
        }
    }
}
