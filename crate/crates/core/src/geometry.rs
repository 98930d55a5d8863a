//! Pointing coordinates, the homogeneous correction transform, and its
//! affine decomposition.
//!
//! All angles are degrees. Azimuth is measured clockwise from north and
//! stored normalized to `[0, 360)`; elevation is measured above the horizon
//! with an operational envelope of `[-10, 90]` (antenna mounts accept small
//! negative elevations for correction purposes).

use thiserror::Error;

/// Elevation envelope accepted when constructing validated pointings.
pub const ELEVATION_MIN_DEG: f64 = -10.0;
pub const ELEVATION_MAX_DEG: f64 = 90.0;

const SINGULAR_DET_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("elevation {0} deg outside operational envelope [{ELEVATION_MIN_DEG}, {ELEVATION_MAX_DEG}]")]
    ElevationOutOfRange(f64),
    #[error("angle is not finite")]
    NonFiniteAngle,
    #[error("third row of transform must be (0, 0, 1), got ({0}, {1}, {2})")]
    BadThirdRow(f64, f64, f64),
    #[error("upper-left 2x2 block is singular (|det| = {0:e})")]
    SingularBlock(f64),
    #[error("homogeneous scale component must be nonzero")]
    ZeroScale,
}

/// An antenna pointing: azimuth and elevation in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pointing {
    azimuth_deg: f64,
    elevation_deg: f64,
}

impl Pointing {
    /// Validated constructor: normalizes azimuth to `[0, 360)` and requires
    /// elevation inside the operational envelope.
    pub fn new(azimuth_deg: f64, elevation_deg: f64) -> Result<Self, GeometryError> {
        if !azimuth_deg.is_finite() || !elevation_deg.is_finite() {
            return Err(GeometryError::NonFiniteAngle);
        }
        if !(ELEVATION_MIN_DEG..=ELEVATION_MAX_DEG).contains(&elevation_deg) {
            return Err(GeometryError::ElevationOutOfRange(elevation_deg));
        }
        Ok(Self::wrapped(azimuth_deg, elevation_deg))
    }

    /// Normalizes azimuth but skips the elevation envelope check. Transform
    /// application and offset arithmetic go through here: corrections are
    /// near-identity, so results may sit marginally outside the envelope
    /// without being errors.
    pub(crate) fn wrapped(azimuth_deg: f64, elevation_deg: f64) -> Self {
        Self {
            azimuth_deg: normalize_azimuth(azimuth_deg),
            elevation_deg,
        }
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth_deg
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation_deg
    }

    /// Lifts to canonical homogeneous form (scale component 1).
    pub fn to_homogeneous(self) -> HomogeneousPointing {
        HomogeneousPointing {
            x1: self.azimuth_deg,
            x2: self.elevation_deg,
            x3: 1.0,
        }
    }
}

/// Normalize an azimuth to `[0, 360)`.
pub fn normalize_azimuth(az_deg: f64) -> f64 {
    let r = az_deg.rem_euclid(360.0);
    // rem_euclid can return 360.0 when az is a tiny negative number.
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// A pointing in homogeneous coordinates `(x1, x2, x3)`; two values are
/// equivalent iff proportional, and the canonical form has `x3 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousPointing {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl HomogeneousPointing {
    /// Divides through by the scale component. Errors only when `x3 = 0`;
    /// transforms with the constrained third row never produce that.
    pub fn dehomogenize(self) -> Result<Pointing, GeometryError> {
        if self.x3 == 0.0 {
            return Err(GeometryError::ZeroScale);
        }
        Ok(Pointing::wrapped(self.x1 / self.x3, self.x2 / self.x3))
    }
}

/// The 3x3 correction transform acting on homogeneous pointings.
///
/// The third row is constrained to `(0, 0, 1)`, which makes the map affine
/// in the azimuth-elevation plane and keeps dehomogenization exact. The
/// upper-left 2x2 block must be invertible (corrections are near-identity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    rows: [[f64; 3]; 3],
}

impl Transform {
    pub fn identity() -> Self {
        Self {
            rows: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Builds a transform from full 3x3 entries, validating the invariants.
    pub fn new(rows: [[f64; 3]; 3]) -> Result<Self, GeometryError> {
        let [r0, r1, r2] = rows;
        if r2 != [0.0, 0.0, 1.0] {
            return Err(GeometryError::BadThirdRow(r2[0], r2[1], r2[2]));
        }
        for v in r0.iter().chain(r1.iter()) {
            if !v.is_finite() {
                return Err(GeometryError::NonFiniteAngle);
            }
        }
        let det = r0[0] * r1[1] - r0[1] * r1[0];
        if det.abs() < SINGULAR_DET_EPS {
            return Err(GeometryError::SingularBlock(det.abs()));
        }
        Ok(Self { rows })
    }

    /// Builds from the affine pieces: 2x2 block `a` and translation `t`.
    pub fn from_affine(a: [[f64; 2]; 2], t: [f64; 2]) -> Result<Self, GeometryError> {
        Self::new([
            [a[0][0], a[0][1], t[0]],
            [a[1][0], a[1][1], t[1]],
            [0.0, 0.0, 1.0],
        ])
    }

    /// Counter-clockwise rotation by `angle_deg` in the azimuth-elevation
    /// plane plus a translation.
    pub fn from_rotation_translation(angle_deg: f64, t: [f64; 2]) -> Result<Self, GeometryError> {
        let (s, c) = angle_deg.to_radians().sin_cos();
        Self::from_affine([[c, -s], [s, c]], t)
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        self.rows
    }

    /// Entry `t_{k,j}` with 1-based indices as written in matrix notation.
    pub fn entry(&self, k: usize, j: usize) -> f64 {
        self.rows[k - 1][j - 1]
    }

    /// The upper-left 2x2 block.
    pub fn affine_block(&self) -> [[f64; 2]; 2] {
        [
            [self.rows[0][0], self.rows[0][1]],
            [self.rows[1][0], self.rows[1][1]],
        ]
    }

    /// The translation column (first two entries of the third column).
    pub fn translation(&self) -> [f64; 2] {
        [self.rows[0][2], self.rows[1][2]]
    }

    /// Applies the transform to a pointing: lift to homogeneous form,
    /// multiply, dehomogenize, normalize azimuth. With the third row
    /// constrained to `(0, 0, 1)` the dehomogenization is exact.
    pub fn apply(&self, p: Pointing) -> Pointing {
        let x = p.to_homogeneous();
        let az = self.rows[0][0] * x.x1 + self.rows[0][1] * x.x2 + self.rows[0][2] * x.x3;
        let el = self.rows[1][0] * x.x1 + self.rows[1][1] * x.x2 + self.rows[1][2] * x.x3;
        Pointing::wrapped(az, el)
    }

    /// Like [`apply`](Self::apply) but without azimuth wrapping; used where
    /// arithmetic must stay on a continuous azimuth branch.
    pub(crate) fn apply_unwrapped(&self, az: f64, el: f64) -> (f64, f64) {
        (
            self.rows[0][0] * az + self.rows[0][1] * el + self.rows[0][2],
            self.rows[1][0] * az + self.rows[1][1] * el + self.rows[1][2],
        )
    }
}

/// Factorization of a transform's affine block as `A = R * S2 * S1`:
/// a scaling, then a shearing, then a counter-clockwise rotation,
/// plus the translation column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineDecomposition {
    /// Translation in degrees, `(azimuth, elevation)`.
    pub translation: [f64; 2],
    /// Diagonal of the scaling `S1`.
    pub scaling: [f64; 2],
    /// Upper off-diagonal entry of the unit-diagonal shear `S2`.
    pub shear: f64,
    /// Counter-clockwise rotation angle of `R`, in `(-180, 180]`.
    pub rotation_deg: f64,
}

impl AffineDecomposition {
    pub fn neutral() -> Self {
        Self {
            translation: [0.0, 0.0],
            scaling: [1.0, 1.0],
            shear: 0.0,
            rotation_deg: 0.0,
        }
    }
}

/// Decomposes the affine block as `A = R * U` with `R` a rotation and `U`
/// upper triangular with positive first diagonal entry, then splits
/// `U = S2 * S1`. The rotation angle is `atan2(A21, A11)`, which reproduces
/// the positive-diagonal convention of the published matrices.
pub fn decompose(t: &Transform) -> Result<AffineDecomposition, GeometryError> {
    let a = t.affine_block();
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() < SINGULAR_DET_EPS {
        return Err(GeometryError::SingularBlock(det.abs()));
    }
    let theta = a[1][0].atan2(a[0][0]);
    let (s, c) = theta.sin_cos();
    // U = R^T A; u21 vanishes by choice of theta.
    let u11 = c * a[0][0] + s * a[1][0];
    let u12 = c * a[0][1] + s * a[1][1];
    let u22 = -s * a[0][1] + c * a[1][1];
    Ok(AffineDecomposition {
        translation: t.translation(),
        scaling: [u11, u22],
        shear: u12 / u22,
        rotation_deg: theta.to_degrees(),
    })
}

/// Recomposes `R * S2 * S1` and the translation into a transform; exact
/// inverse of [`decompose`] up to rounding.
pub fn compose(d: &AffineDecomposition) -> Result<Transform, GeometryError> {
    let (s, c) = d.rotation_deg.to_radians().sin_cos();
    let [s1x, s2y] = d.scaling;
    // S2 * S1 is upper triangular with u12 = shear * s2y.
    let u12 = d.shear * s2y;
    Transform::from_affine(
        [
            [c * s1x, c * u12 - s * s2y],
            [s * s1x, s * u12 + c * s2y],
        ],
        d.translation,
    )
}

/// Great-circle angle in degrees between two pointings, treating
/// (azimuth, elevation) as (longitude, latitude). Symmetric, zero iff the
/// directions coincide, and always in `[0, 180]`.
pub fn angular_distance(a: Pointing, b: Pointing) -> f64 {
    let (va, vb) = (unit_vector(a), unit_vector(b));
    let dot = va[0] * vb[0] + va[1] * vb[1] + va[2] * vb[2];
    let cross = [
        va[1] * vb[2] - va[2] * vb[1],
        va[2] * vb[0] - va[0] * vb[2],
        va[0] * vb[1] - va[1] * vb[0],
    ];
    let cross_norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    cross_norm.atan2(dot).to_degrees()
}

fn unit_vector(p: Pointing) -> [f64; 3] {
    let (saz, caz) = p.azimuth_deg.to_radians().sin_cos();
    let (sel, cel) = p.elevation_deg.to_radians().sin_cos();
    [cel * caz, cel * saz, sel]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Affine block and translation of the transform learned by the
    /// improved calibration run; used as a fixture throughout the crate.
    pub(crate) const IMPROVED_CAL: [[f64; 3]; 3] = [
        [0.997936, -0.005520, 0.007442],
        [0.002914, 0.995512, -0.005053],
        [0.0, 0.0, 1.0],
    ];

    /// Transform learned by the manual step-track run.
    pub(crate) const STEP_TRACK: [[f64; 3]; 3] = [
        [0.994773, -0.017231, 0.022903],
        [0.007398, 0.992050, -0.016989],
        [0.0, 0.0, 1.0],
    ];

    #[test]
    fn apply_identity_is_noop() {
        let p = Pointing::new(114.67, 0.00).unwrap();
        let q = Transform::identity().apply(p);
        assert_eq!(q.azimuth_deg(), 114.67);
        assert_eq!(q.elevation_deg(), 0.00);
    }

    #[test]
    fn apply_matches_hand_computed_product() {
        // Direct matrix-vector product with the improved-calibration entries.
        let t = Transform::new(IMPROVED_CAL).unwrap();
        let q = t.apply(Pointing::new(180.0, 45.0).unwrap());
        assert_abs_diff_eq!(q.azimuth_deg(), 179.387522, epsilon = 1e-9);
        assert_abs_diff_eq!(q.elevation_deg(), 45.317507, epsilon = 1e-9);
    }

    #[test]
    fn apply_at_origin_exposes_translation_column() {
        let t = Transform::new(STEP_TRACK).unwrap();
        let q = t.apply(Pointing::new(0.0, 0.0).unwrap());
        assert_abs_diff_eq!(q.azimuth_deg(), 0.022903, epsilon = 1e-12);
        assert_abs_diff_eq!(q.elevation_deg(), -0.016989, epsilon = 1e-12);
    }

    #[test]
    fn decompose_improved_calibration_matrix() {
        let t = Transform::new(IMPROVED_CAL).unwrap();
        let d = decompose(&t).unwrap();
        assert_abs_diff_eq!(d.rotation_deg, 0.167279, epsilon = 5e-4);
        assert_abs_diff_eq!(d.scaling[0], 0.997940, epsilon = 1e-5);
        assert_abs_diff_eq!(d.scaling[1], 0.995524, epsilon = 1e-5);
        assert_abs_diff_eq!(d.shear, -0.002625, epsilon = 1e-5);
        assert_eq!(d.translation, [0.007442, -0.005053]);
    }

    #[test]
    fn decompose_identity_is_neutral() {
        let d = decompose(&Transform::identity()).unwrap();
        assert_eq!(d, AffineDecomposition::neutral());
    }

    #[test]
    fn decompose_recovers_pure_rotation() {
        let t = Transform::from_rotation_translation(10.0, [0.0, 0.0]).unwrap();
        let d = decompose(&t).unwrap();
        assert_abs_diff_eq!(d.rotation_deg, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.scaling[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.scaling[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.shear, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn compose_neutral_is_identity() {
        let t = compose(&AffineDecomposition::neutral()).unwrap();
        assert_eq!(t, Transform::identity());
    }

    #[test]
    fn compose_inverts_decompose_on_fixture() {
        let t = Transform::new(IMPROVED_CAL).unwrap();
        let back = compose(&decompose(&t).unwrap()).unwrap();
        for k in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(back.rows()[k][j], t.rows()[k][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn decompose_rejects_singular_block() {
        let r = Transform::new([[1.0, 2.0, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(matches!(r, Err(GeometryError::SingularBlock(_))));
    }

    #[test]
    fn transform_rejects_bad_third_row() {
        let r = Transform::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.1, 1.0]]);
        assert!(matches!(r, Err(GeometryError::BadThirdRow(..))));
    }

    #[test]
    fn pointing_rejects_out_of_envelope_elevation() {
        assert!(Pointing::new(10.0, 90.5).is_err());
        assert!(Pointing::new(10.0, -10.5).is_err());
        assert!(Pointing::new(10.0, -10.0).is_ok());
    }

    #[test]
    fn azimuth_is_normalized_on_construction() {
        assert_eq!(Pointing::new(-90.0, 0.0).unwrap().azimuth_deg(), 270.0);
        assert_eq!(Pointing::new(360.0, 0.0).unwrap().azimuth_deg(), 0.0);
        assert_eq!(Pointing::new(725.0, 0.0).unwrap().azimuth_deg(), 5.0);
        // A tiny negative azimuth must not normalize to exactly 360.
        let az = Pointing::new(-1e-17, 0.0).unwrap().azimuth_deg();
        assert!((0.0..360.0).contains(&az));
    }

    #[test]
    fn angular_distance_basics() {
        let a = Pointing::new(12.0, 34.0).unwrap();
        assert_eq!(angular_distance(a, a), 0.0);
        let e0 = Pointing::new(0.0, 0.0).unwrap();
        let e90 = Pointing::new(90.0, 0.0).unwrap();
        assert_abs_diff_eq!(angular_distance(e0, e90), 90.0, epsilon = 1e-12);
    }

    #[test]
    fn angular_distance_near_pole() {
        // Spherical law of cosines: points at colatitude 1 deg on opposite
        // meridians are 2 deg apart.
        let a = Pointing::new(0.0, 89.0).unwrap();
        let b = Pointing::new(180.0, 89.0).unwrap();
        assert_abs_diff_eq!(angular_distance(a, b), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn apply_is_affine_in_the_plane() {
        let t = Transform::new(IMPROVED_CAL).unwrap();
        let p = Pointing::new(120.0, 10.0).unwrap();
        let q = Pointing::new(250.0, 60.0).unwrap();
        for lambda in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let mix = Pointing::new(
                lambda * p.azimuth_deg() + (1.0 - lambda) * q.azimuth_deg(),
                lambda * p.elevation_deg() + (1.0 - lambda) * q.elevation_deg(),
            )
            .unwrap();
            let lhs = t.apply(mix);
            let tp = t.apply(p);
            let tq = t.apply(q);
            let rhs_az = lambda * tp.azimuth_deg() + (1.0 - lambda) * tq.azimuth_deg();
            let rhs_el = lambda * tp.elevation_deg() + (1.0 - lambda) * tq.elevation_deg();
            assert_abs_diff_eq!(lhs.azimuth_deg(), rhs_az, epsilon = 1e-9);
            assert_abs_diff_eq!(lhs.elevation_deg(), rhs_el, epsilon = 1e-9);
        }
    }

    #[test]
    fn rotation_block_is_orthogonal_with_unit_determinant() {
        let t = Transform::new(IMPROVED_CAL).unwrap();
        let d = decompose(&t).unwrap();
        let (s, c) = d.rotation_deg.to_radians().sin_cos();
        // R^T R = I and det R = +1 for the counter-clockwise convention.
        assert_abs_diff_eq!(c * c + s * s, 1.0, epsilon = 1e-12);
        assert!(c * c + s * s > 0.0);
    }
}

#[cfg(test)]
pub(crate) use tests::{IMPROVED_CAL, STEP_TRACK};
