//! Default numeric tolerances.
//!
//! Every tolerance used by the library lives here and can be scaled
//! globally (CLI flag `--tolerance-scale`) or overridden per call where
//! an operation takes a [`Tolerances`] argument.

/// Tolerance bundle passed to validation routines.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    /// Model constraint residual (<x,x> = -1, <x,v> = 0).
    pub model: f64,
    /// Form preservation residual for isometry matrices.
    pub form: f64,
    /// Inverse-property residuals (exp/log round trips).
    pub roundtrip: f64,
    /// Sectional curvature residual for plane classification.
    pub curvature: f64,
    /// Holonomy identity residual on the orthogonal complement.
    pub holonomy: f64,
    /// Seam orthogonality residual (seams are found by optimization).
    pub seam_ortho: f64,
    /// Mesh-metric convergence target (refining 2x moves lengths less).
    pub mesh: f64,
    /// Eigenvalue-gap floor below which axis extraction is rejected.
    pub eigen_gap: f64,
    /// |lambda|-1 floor below which an element counts as non-loxodromic.
    pub parabolic: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            model: 1e-10,
            form: 1e-9,
            roundtrip: 1e-8,
            curvature: 1e-8,
            holonomy: 1e-7,
            seam_ortho: 1e-6,
            mesh: 1e-3,
            eigen_gap: 1e-8,
            parabolic: 1e-6,
        }
    }
}

impl Tolerances {
    /// Multiply every tolerance by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Tolerances {
            model: self.model * s,
            form: self.form * s,
            roundtrip: self.roundtrip * s,
            curvature: self.curvature * s,
            holonomy: self.holonomy * s,
            seam_ortho: self.seam_ortho * s,
            mesh: self.mesh * s,
            eigen_gap: self.eigen_gap,
            parabolic: self.parabolic,
        }
    }
}

/// Side length of the center triangle of an ideal triangle, arccosh(3/2).
pub const CENTER_TRIANGLE_SIDE: f64 = 0.962_423_650_119_206_9;

/// Sum over short arcs of 1/tau^b stays below this bound for tight
/// developments at b = 2; measured once on the reference family and frozen.
pub const LAMINATION_SUM_BOUND: f64 = 6.0;

/// Thickness constant: half the minimal clearance between a point on a side
/// of an ideal triangle within distance 3 of the projection foot and the
/// other two sides. Frozen from the closed-form construction; a test
/// recomputes it.
pub const C0_THICK: f64 = 0.024_883_261_488_028_75;

/// Length cap min{1/4, C0} for lamination-crossing arcs.
pub fn arc_length_cap() -> f64 {
    0.25_f64.min(C0_THICK)
}

/// Length cap min{1/4, C0/2} used by chain efficiency tests.
pub fn efficiency_length_cap() -> f64 {
    0.25_f64.min(C0_THICK / 2.0)
}
