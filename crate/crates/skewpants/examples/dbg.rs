use skewpants::band::*;
use skewpants::space::*;
use skewpants::tol::Tolerances;
use num_complex::Complex;
fn main() {
    let r = 12.0;
    let band = standard_band(SpaceKind::h3(), r, 0.1, 0.48, Resolution{ns:17,nt:129}).unwrap();
    let tolr = Tolerances::default();
    let seam = compute_seam(&band, &tolr).unwrap();
    let plane = central_plane(&band, &seam, &tolr).unwrap();
    let foot = &seam.foot_plus;
    for t in [8.5, 8.9, 9.0, 9.1, 9.5] {
        let line_dir_at_foot = seam.line_dir_plus.clone();
        let y = exp_map(&line_dir_at_foot, t);
        let beta_dir = parallel_transport(&line_dir_at_foot, &y).unwrap();
        let seam_dir = parallel_transport(&seam.dir_plus, &y).unwrap();
        let mut sd = align_tangent_gauge(&seam_dir, &beta_dir.base);
        let a = metric(&sd.vec, &beta_dir.vec);
        sd.vec -= &beta_dir.vec * Complex::new(a, 0.0);
        let n = sd.norm();
        sd.vec /= Complex::new(n, 0.0);
        let py = project_to_plane(&y, &plane).unwrap();
        let h_basis = plane.tangent_basis_at(&py).unwrap();
        let base_dist = distance_sharp(&y, &py).unwrap();
        let base_acosh = distance(&y, &py).unwrap();
        let base_chord = chord_distance(&y, &py);
        // principal angle
        let moved: Vec<_> = [beta_dir.clone(), sd.clone()].iter().map(|v| parallel_transport(v, &h_basis[0].base).unwrap()).collect();
        let mut m = nalgebra::DMatrix::<f64>::zeros(2,2);
        for i in 0..2 { for j in 0..2 { m[(i,j)] = metric(&h_basis[i].vec, &moved[j].vec); } }
        let svd = m.svd(false,false);
        let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("t={t}: principal={:.4e} base_sharp={:.4e} (acosh {:.4e} chord {:.4e})", smin.clamp(-1.0,1.0).acos(), base_dist, base_acosh, base_chord);
    }
}
