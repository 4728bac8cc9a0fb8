//! DRR forward projection and its exact discrete adjoint.
//!
//! A posed detector casts one ray per pixel through the volume; the pixel
//! value is the line integral of attenuation along the clipped ray segment,
//! approximated by uniform sampling with trilinear interpolation. The adjoint
//! ([`backproject`]) scatters detector values back through the *same*
//! discretization — identical rays, sample points, trilinear weights and step
//! factors — so `<project(v), u> == <v, backproject(u)>` holds to floating
//! point rounding for every volume/image pair.
//!
//! # Geometry
//!
//! The unposed rig looks down +y (the posteroanterior direction): detector
//! columns run along +x, detector rows along -z (image top = cranial). A
//! [`ViewPose`] rotates the whole rig about the volume isocenter with
//! intrinsic Rz*Ry*Rx rotations and then shifts it by a world translation.
//!
//! # Sampling
//!
//! Each ray is clipped to the voxel-center bounding box. The segment of
//! length `L` is subdivided into `n = ceil(L / ray_step)` equal intervals and
//! sampled at the `n + 1` interval endpoints, each weighted by `L / n`; the
//! geometry's `ray_step` is therefore an upper bound on the sample spacing.
//! The quadrature error on a homogeneous medium is exactly `mu * L / n`,
//! first order in the step.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;
use crate::volume::{hu_to_attenuation, Boundary, ImageGrid2D, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryMode {
    /// Parallel rays along the posed view direction.
    Parallel,
    /// Rays diverge from a point source through the detector plane.
    ConeBeam,
}

/// Detector and source description shared by all views of a run.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProjectionGeometry {
    pub mode: GeometryMode,
    /// (rows, cols)
    pub detector_dims: (usize, usize),
    /// (row pitch, col pitch) in mm
    pub detector_pixel_spacing: (f64, f64),
    /// Source-to-isocenter distance in mm (cone beam only).
    pub source_to_isocenter: f64,
    /// Source-to-detector distance in mm (cone beam only).
    pub source_to_detector: f64,
    /// Upper bound on the ray sample spacing in mm.
    pub ray_step: f64,
}

/// Typical radiographic stand-off distances.
pub const DEFAULT_SOURCE_TO_ISOCENTER: f64 = 600.0;
pub const DEFAULT_SOURCE_TO_DETECTOR: f64 = 1100.0;

impl ProjectionGeometry {
    pub fn parallel(detector_dims: (usize, usize), pixel_spacing: (f64, f64), ray_step: f64) -> Self {
        ProjectionGeometry {
            mode: GeometryMode::Parallel,
            detector_dims,
            detector_pixel_spacing: pixel_spacing,
            source_to_isocenter: DEFAULT_SOURCE_TO_ISOCENTER,
            source_to_detector: DEFAULT_SOURCE_TO_DETECTOR,
            ray_step,
        }
    }

    pub fn cone_beam(
        detector_dims: (usize, usize),
        pixel_spacing: (f64, f64),
        source_to_isocenter: f64,
        source_to_detector: f64,
        ray_step: f64,
    ) -> Self {
        ProjectionGeometry {
            mode: GeometryMode::ConeBeam,
            detector_dims,
            detector_pixel_spacing: pixel_spacing,
            source_to_isocenter,
            source_to_detector,
            ray_step,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.detector_dims.0 == 0 || self.detector_dims.1 == 0 {
            return Err(Error::invalid("detector_dims", format!("{:?}", self.detector_dims)));
        }
        if !(self.detector_pixel_spacing.0 > 0.0 && self.detector_pixel_spacing.1 > 0.0) {
            return Err(Error::invalid(
                "detector_pixel_spacing",
                format!("{:?}", self.detector_pixel_spacing),
            ));
        }
        if !(self.ray_step > 0.0 && self.ray_step.is_finite()) {
            return Err(Error::invalid("ray_step", format!("{}", self.ray_step)));
        }
        if self.mode == GeometryMode::ConeBeam
            && !(self.source_to_isocenter > 0.0 && self.source_to_isocenter < self.source_to_detector)
        {
            return Err(Error::invalid(
                "cone beam distances",
                format!(
                    "need 0 < source_to_isocenter < source_to_detector, got {} and {}",
                    self.source_to_isocenter, self.source_to_detector
                ),
            ));
        }
        Ok(())
    }

    /// Detector sized so a volume's bounding sphere projects inside with the
    /// given margin fraction (5% by default elsewhere).
    pub fn fit_pixel_spacing(&self, v: &Volume, margin: f64) -> (f64, f64) {
        let (d, h, w) = v.dims();
        let (sx, sy, sz) = v.spacing();
        let ex = w as f64 * sx;
        let ey = h as f64 * sy;
        let ez = d as f64 * sz;
        let radius = 0.5 * (ex * ex + ey * ey + ez * ez).sqrt();
        let magnification = match self.mode {
            GeometryMode::Parallel => 1.0,
            GeometryMode::ConeBeam => self.source_to_detector / self.source_to_isocenter,
        };
        let span = 2.0 * radius * (1.0 + margin) * magnification;
        (span / self.detector_dims.0 as f64, span / self.detector_dims.1 as f64)
    }
}

/// Rigid view transform: intrinsic Rz*Ry*Rx rotation about the volume
/// isocenter followed by a world translation of the rig.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ViewPose {
    /// (rx, ry, rz) radians
    pub rotation: (f64, f64, f64),
    /// (tx, ty, tz) mm
    pub translation: (f64, f64, f64),
}

impl ViewPose {
    pub fn identity() -> Self {
        ViewPose {
            rotation: (0.0, 0.0, 0.0),
            translation: (0.0, 0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (rx, ry, rz) = self.rotation;
        let (tx, ty, tz) = self.translation;
        if ![rx, ry, rz, tx, ty, tz].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("pose", format!("{self:?}")));
        }
        Ok(())
    }

    /// Column-major 3x3 rotation matrix R = Rz(rz) * Ry(ry) * Rx(rx).
    pub fn rotation_matrix(&self) -> [[f64; 3]; 3] {
        let (rx, ry, rz) = self.rotation;
        let (sx, cx) = rx.sin_cos();
        let (sy, cy) = ry.sin_cos();
        let (sz, cz) = rz.sin_cos();
        // Rows of R = Rz * Ry * Rx.
        [
            [cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx],
            [sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx],
            [-sy, cy * sx, cy * cx],
        ]
    }
}

#[inline]
fn mat_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Uniform pose perturbation ranges, drawn with a counter-based PRNG.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PerturbationSpec {
    /// Half-width per rotation axis, radians.
    pub rotation_range: (f64, f64, f64),
    /// Half-width per translation axis, mm.
    pub translation_range: (f64, f64, f64),
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        let r = [
            self.rotation_range.0,
            self.rotation_range.1,
            self.rotation_range.2,
            self.translation_range.0,
            self.translation_range.1,
            self.translation_range.2,
        ];
        if r.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("perturbation ranges", format!("{self:?}")));
        }
        Ok(())
    }
}

/// The three standard orthogonal views: posteroanterior (rays along +y),
/// lateral (rays along -x) and axial (rays along -z). All translations zero.
pub fn standard_views() -> (ViewPose, ViewPose, ViewPose) {
    let pa = ViewPose::identity();
    let la = ViewPose {
        rotation: (0.0, 0.0, std::f64::consts::FRAC_PI_2),
        translation: (0.0, 0.0, 0.0),
    };
    let ax = ViewPose {
        rotation: (-std::f64::consts::FRAC_PI_2, 0.0, 0.0),
        translation: (0.0, 0.0, 0.0),
    };
    (pa, la, ax)
}

/// Deterministic perturbed pose: draw `draw_index` of the stream identified
/// by `spec.seed`. Component k of draw i uses counter `i * 6 + k`, mapped to
/// a uniform offset in ±range around the base component.
pub fn sample_perturbed_pose(base: &ViewPose, spec: &PerturbationSpec, draw_index: u64) -> ViewPose {
    let ranges = [
        spec.rotation_range.0,
        spec.rotation_range.1,
        spec.rotation_range.2,
        spec.translation_range.0,
        spec.translation_range.1,
        spec.translation_range.2,
    ];
    let bases = [
        base.rotation.0,
        base.rotation.1,
        base.rotation.2,
        base.translation.0,
        base.translation.1,
        base.translation.2,
    ];
    let mut out = [0.0f64; 6];
    for k in 0..6 {
        let u = rng::counter_f64(spec.seed, draw_index.wrapping_mul(6).wrapping_add(k as u64));
        out[k] = bases[k] + ranges[k] * (2.0 * u - 1.0);
    }
    ViewPose {
        rotation: (out[0], out[1], out[2]),
        translation: (out[3], out[4], out[5]),
    }
}

/// Posed rig frame: ray direction and detector axes in world space.
struct Rig {
    dir: [f64; 3],     // unit ray direction
    u: [f64; 3],       // detector column axis
    v: [f64; 3],       // detector row axis
    center: [f64; 3],  // isocenter + translation
}

impl Rig {
    fn new(volume: &Volume, pose: &ViewPose) -> Rig {
        let r = pose.rotation_matrix();
        let iso = volume.isocenter();
        let (tx, ty, tz) = pose.translation;
        Rig {
            dir: mat_vec(&r, [0.0, 1.0, 0.0]),
            u: mat_vec(&r, [1.0, 0.0, 0.0]),
            v: mat_vec(&r, [0.0, 0.0, -1.0]),
            center: [iso[0] + tx, iso[1] + ty, iso[2] + tz],
        }
    }
}

/// Origin point and unit direction of the ray through pixel (row, col).
#[inline]
fn pixel_ray(g: &ProjectionGeometry, rig: &Rig, row: usize, col: usize) -> ([f64; 3], [f64; 3]) {
    let (rows, cols) = g.detector_dims;
    let (pr, pc) = g.detector_pixel_spacing;
    let du = (col as f64 - (cols as f64 - 1.0) * 0.5) * pc;
    let dv = (row as f64 - (rows as f64 - 1.0) * 0.5) * pr;
    match g.mode {
        GeometryMode::Parallel => {
            let o = [
                rig.center[0] + rig.u[0] * du + rig.v[0] * dv,
                rig.center[1] + rig.u[1] * du + rig.v[1] * dv,
                rig.center[2] + rig.u[2] * du + rig.v[2] * dv,
            ];
            (o, rig.dir)
        }
        GeometryMode::ConeBeam => {
            let src = [
                rig.center[0] - rig.dir[0] * g.source_to_isocenter,
                rig.center[1] - rig.dir[1] * g.source_to_isocenter,
                rig.center[2] - rig.dir[2] * g.source_to_isocenter,
            ];
            let det_dist = g.source_to_detector - g.source_to_isocenter;
            let px = [
                rig.center[0] + rig.dir[0] * det_dist + rig.u[0] * du + rig.v[0] * dv,
                rig.center[1] + rig.dir[1] * det_dist + rig.u[1] * du + rig.v[1] * dv,
                rig.center[2] + rig.dir[2] * det_dist + rig.u[2] * du + rig.v[2] * dv,
            ];
            let d = [px[0] - src[0], px[1] - src[1], px[2] - src[2]];
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            (src, [d[0] / n, d[1] / n, d[2] / n])
        }
    }
}

/// Clip a ray against an axis-aligned box by the slab method. Returns the
/// parameter interval, empty when the ray misses.
#[inline]
fn clip_ray(o: [f64; 3], d: [f64; 3], lo: [f64; 3], hi: [f64; 3]) -> Option<(f64, f64)> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for a in 0..3 {
        if d[a].abs() < 1e-300 {
            if o[a] < lo[a] || o[a] > hi[a] {
                return None;
            }
        } else {
            let inv = 1.0 / d[a];
            let (ta, tb) = ((lo[a] - o[a]) * inv, (hi[a] - o[a]) * inv);
            let (near, far) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            t0 = t0.max(near);
            t1 = t1.min(far);
        }
    }
    if t0 < t1 {
        Some((t0, t1))
    } else {
        None
    }
}

/// Per-ray sampling plan: `n + 1` samples spaced `dt` from `t0`.
#[inline]
fn ray_plan(g: &ProjectionGeometry, o: [f64; 3], d: [f64; 3], v: &Volume) -> Option<(f64, f64, usize)> {
    let (lo, hi) = v.center_bounds();
    let (t0, t1) = clip_ray(o, d, lo, hi)?;
    let len = t1 - t0;
    if !(len > 0.0) || !len.is_finite() {
        return None;
    }
    let n = (len / g.ray_step).ceil().max(1.0) as usize;
    Some((t0, len / n as f64, n))
}

/// Accumulated line integral along one pixel ray.
#[inline]
fn integrate_ray(g: &ProjectionGeometry, rig: &Rig, v: &Volume, row: usize, col: usize) -> f64 {
    let (o, d) = pixel_ray(g, rig, row, col);
    let Some((t0, dt, n)) = ray_plan(g, o, d, v) else {
        return 0.0;
    };
    let mut acc = 0.0;
    for i in 0..=n {
        let t = t0 + i as f64 * dt;
        let p = [o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]];
        acc += v.sample_world(p, Boundary::ZeroOutside);
    }
    acc * dt
}

/// Forward projection: one line integral per detector pixel. Linear in the
/// volume. Parallelizes across pixels; the per-pixel reduction order is
/// fixed, so results are bit-identical for any thread count.
pub fn project(v: &Volume, g: &ProjectionGeometry, pose: &ViewPose) -> Result<ImageGrid2D> {
    g.validate()?;
    pose.validate()?;
    let rig = Rig::new(v, pose);
    let (rows, cols) = g.detector_dims;
    let mut data = vec![0.0f64; rows * cols];
    data.par_chunks_mut(cols).enumerate().for_each(|(r, row_buf)| {
        for (c, px) in row_buf.iter_mut().enumerate() {
            *px = integrate_ray(g, &rig, v, r, c);
        }
    });
    ImageGrid2D::new(rows, cols, g.detector_pixel_spacing, data)
}

/// Exact adjoint of [`project`] onto the given target grid: scatters each
/// pixel value along its ray with the same sample points, trilinear weights
/// and step factor the forward pass uses. Sequential over pixels so the
/// per-voxel accumulation order is fixed.
pub fn backproject(
    img: &ImageGrid2D,
    g: &ProjectionGeometry,
    pose: &ViewPose,
    target_dims: (usize, usize, usize),
    target_spacing: (f64, f64, f64),
    target_origin: (f64, f64, f64),
) -> Result<Volume> {
    g.validate()?;
    pose.validate()?;
    if (img.rows(), img.cols()) != g.detector_dims {
        return Err(Error::DimensionMismatch {
            context: "detector image vs geometry",
            left: format!("{}x{}", img.rows(), img.cols()),
            right: format!("{:?}", g.detector_dims),
        });
    }
    let mut out = Volume::zeros(target_dims, target_spacing, target_origin)?;
    let rig = Rig::new(&out, pose);
    let (nz, ny, nx) = target_dims;
    let (rows, cols) = g.detector_dims;
    for r in 0..rows {
        for c in 0..cols {
            let u = img.at(r, c);
            if u == 0.0 {
                continue;
            }
            let (o, d) = pixel_ray(g, &rig, r, c);
            let Some((t0, dt, n)) = ray_plan(g, o, d, &out) else {
                continue;
            };
            let w = u * dt;
            for i in 0..=n {
                let t = t0 + i as f64 * dt;
                let p = [o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]];
                scatter_trilinear(&mut out, p, w, nz, ny, nx);
            }
        }
    }
    Ok(out)
}

/// Adjoint of the trilinear gather in `Volume::sample_index` under
/// `Boundary::ZeroOutside` semantics.
#[inline]
fn scatter_trilinear(vol: &mut Volume, p: [f64; 3], w: f64, nz: usize, ny: usize, nx: usize) {
    let f = vol.world_to_index(p);
    const EPS: f64 = 1e-9;
    if f[0] < -EPS
        || f[1] < -EPS
        || f[2] < -EPS
        || f[0] > (nx - 1) as f64 + EPS
        || f[1] > (ny - 1) as f64 + EPS
        || f[2] > (nz - 1) as f64 + EPS
    {
        return;
    }
    let fx = f[0].clamp(0.0, (nx - 1) as f64);
    let fy = f[1].clamp(0.0, (ny - 1) as f64);
    let fz = f[2].clamp(0.0, (nz - 1) as f64);
    let (x0, wx) = cell(fx, nx);
    let (y0, wy) = cell(fy, ny);
    let (z0, wz) = cell(fz, nz);
    let x1 = (x0 + 1).min(nx - 1);
    let y1 = (y0 + 1).min(ny - 1);
    let z1 = (z0 + 1).min(nz - 1);
    let data = vol.data_mut();
    let idx = |z: usize, y: usize, x: usize| (z * ny + y) * nx + x;
    // Same weight algebra as the gather: value = sum of nodes times
    // products of (1-w)/w factors.
    data[idx(z0, y0, x0)] += w * (1.0 - wx) * (1.0 - wy) * (1.0 - wz);
    data[idx(z0, y0, x1)] += w * wx * (1.0 - wy) * (1.0 - wz);
    data[idx(z0, y1, x0)] += w * (1.0 - wx) * wy * (1.0 - wz);
    data[idx(z0, y1, x1)] += w * wx * wy * (1.0 - wz);
    data[idx(z1, y0, x0)] += w * (1.0 - wx) * (1.0 - wy) * wz;
    data[idx(z1, y0, x1)] += w * wx * (1.0 - wy) * wz;
    data[idx(z1, y1, x0)] += w * (1.0 - wx) * wy * wz;
    data[idx(z1, y1, x1)] += w * wx * wy * wz;
}

#[inline]
fn cell(f: f64, n: usize) -> (usize, f64) {
    if n == 1 {
        return (0, 0.0);
    }
    let i = (f.floor() as isize).clamp(0, n as isize - 2) as usize;
    (i, f - i as f64)
}

/// Normalization metadata reported alongside a DRR pair.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DrrMeta {
    pub pa_range: (f64, f64),
    pub la_range: (f64, f64),
    pub pa_constant: bool,
    pub la_constant: bool,
    pub radiographic: bool,
}

/// DRR simulation: HU volume to normalized PA and lateral detector images.
///
/// Applies [`hu_to_attenuation`], projects under the PA and lateral standard
/// views and min-max normalizes each image to [0, 1]. In radiographic mode
/// the integral image is mapped through `exp(-integral)` before
/// normalization. A constant integral image normalizes to all zeros and is
/// flagged in the returned metadata.
pub fn drr_simulate(
    ct: &Volume,
    g: &ProjectionGeometry,
    mu_water: f64,
    radiographic: bool,
) -> Result<(ImageGrid2D, ImageGrid2D, DrrMeta)> {
    let att = hu_to_attenuation(ct, mu_water)?;
    let (pa_pose, la_pose, _) = standard_views();
    let mut pa = project(&att, g, &pa_pose)?;
    let mut la = project(&att, g, &la_pose)?;
    if radiographic {
        for v in pa.data_mut() {
            *v = (-*v).exp();
        }
        for v in la.data_mut() {
            *v = (-*v).exp();
        }
    }
    let (pa_range, pa_constant) = normalize_in_place(&mut pa);
    let (la_range, la_constant) = normalize_in_place(&mut la);
    Ok((
        pa,
        la,
        DrrMeta {
            pa_range,
            la_range,
            pa_constant,
            la_constant,
            radiographic,
        },
    ))
}

/// Min-max normalize to [0, 1]; a constant image becomes all zeros.
/// Returns the pre-normalization (min, max) and the constant flag.
fn normalize_in_place(img: &mut ImageGrid2D) -> ((f64, f64), bool) {
    let (lo, hi) = img.min_max();
    if hi - lo <= 0.0 {
        for v in img.data_mut() {
            *v = 0.0;
        }
        return ((lo, hi), true);
    }
    let inv = 1.0 / (hi - lo);
    for v in img.data_mut() {
        *v = (*v - lo) * inv;
    }
    ((lo, hi), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn uniform_cube_volume(n: usize, spacing: f64, mu: f64) -> Volume {
        Volume::new(
            (n, n, n),
            (spacing, spacing, spacing),
            (0.0, 0.0, 0.0),
            vec![mu; n * n * n],
        )
        .unwrap()
    }

    fn random_volume(seed: u64, dims: (usize, usize, usize)) -> Volume {
        let mut rng = SplitMix64::new(seed);
        let n = dims.0 * dims.1 * dims.2;
        let data = (0..n).map(|_| rng.uniform(0.0, 0.05)).collect();
        Volume::new(dims, (1.0, 1.3, 0.9), (-3.0, 1.0, 2.0), data).unwrap()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn standard_views_are_orthogonal_rays() {
        let v = uniform_cube_volume(4, 1.0, 1.0);
        let (pa, la, ax) = standard_views();
        let rigs = [Rig::new(&v, &pa), Rig::new(&v, &la), Rig::new(&v, &ax)];
        for i in 0..3 {
            for j in (i + 1)..3 {
                let d = dot(&rigs[i].dir, &rigs[j].dir);
                assert!(d.abs() < 1e-12, "views {i},{j} not orthogonal: {d}");
            }
        }
        // PA rays along +y, LA along -x, AX along -z.
        assert!((rigs[0].dir[1] - 1.0).abs() < 1e-12);
        assert!((rigs[1].dir[0] + 1.0).abs() < 1e-12);
        assert!((rigs[2].dir[2] + 1.0).abs() < 1e-12);
        // PA and LA rotations differ by pi/2 about z.
        assert_eq!(la.rotation.2 - pa.rotation.2, std::f64::consts::FRAC_PI_2);
        for p in [pa, la, ax] {
            assert_eq!(p.translation, (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn zero_volume_projects_to_zero() {
        let v = Volume::zeros((6, 6, 6), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).unwrap();
        let g = ProjectionGeometry::parallel((8, 8), (1.0, 1.0), 0.5);
        let pose = ViewPose {
            rotation: (0.3, -0.2, 0.9),
            translation: (1.0, -2.0, 0.5),
        };
        let img = project(&v, &g, &pose).unwrap();
        assert!(img.data().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn uniform_slab_matches_analytic() {
        // 17 voxels at 2 mm spacing: center span 32 mm along every axis.
        let mu = 0.02;
        let v = uniform_cube_volume(17, 2.0, mu);
        let g = ProjectionGeometry::parallel((9, 9), (2.0, 2.0), 0.5);
        let (pa, _, _) = standard_views();
        let img = project(&v, &g, &pa).unwrap();
        let center = img.at(4, 4);
        assert!(
            (center - 0.64).abs() <= mu * g.ray_step + 1e-12,
            "center {center} not within mu*step of 0.64"
        );
    }

    #[test]
    fn quadrature_error_halves_with_step() {
        let mu = 0.02;
        let v = uniform_cube_volume(17, 2.0, mu);
        let (pa, _, _) = standard_views();
        // 32/0.5 and 32/0.25 are integers, so the sampling overshoot is
        // exactly mu * step.
        let coarse = project(&v, &ProjectionGeometry::parallel((9, 9), (2.0, 2.0), 0.5), &pa).unwrap();
        let fine = project(&v, &ProjectionGeometry::parallel((9, 9), (2.0, 2.0), 0.25), &pa).unwrap();
        let e_coarse = (coarse.at(4, 4) - 0.64).abs();
        let e_fine = (fine.at(4, 4) - 0.64).abs();
        assert!(e_coarse > 0.0);
        let ratio = e_fine / e_coarse;
        assert!((0.4..=0.6).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn projection_is_linear() {
        let v1 = random_volume(11, (8, 8, 8));
        let v2 = random_volume(12, (8, 8, 8));
        let (a, b) = (2.25, -0.75);
        let combo = Volume::new(
            v1.dims(),
            v1.spacing(),
            v1.origin(),
            v1.data().iter().zip(v2.data()).map(|(x, y)| a * x + b * y).collect(),
        )
        .unwrap();
        let g = ProjectionGeometry::cone_beam((10, 10), (1.5, 1.5), 50.0, 100.0, 0.5);
        let pose = ViewPose {
            rotation: (0.2, 0.1, -0.4),
            translation: (0.5, 1.0, -0.7),
        };
        let p1 = project(&v1, &g, &pose).unwrap();
        let p2 = project(&v2, &g, &pose).unwrap();
        let pc = project(&combo, &g, &pose).unwrap();
        let scale: f64 = pc.data().iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-30);
        for i in 0..pc.data().len() {
            let expect = a * p1.data()[i] + b * p2.data()[i];
            assert!(
                (pc.data()[i] - expect).abs() / scale < 1e-12,
                "linearity violated at pixel {i}"
            );
        }
    }

    #[test]
    fn asymmetric_phantom_pa_vs_la_differ() {
        let mut v = Volume::zeros((8, 8, 8), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).unwrap();
        // one hot octant: breaks rotational symmetry
        for z in 0..3 {
            for y in 0..2 {
                for x in 0..4 {
                    let i = v.index(z, y, x);
                    v.data_mut()[i] = 0.04;
                }
            }
        }
        let g = ProjectionGeometry::parallel((8, 8), (1.2, 1.2), 0.5);
        let (pa, la, _) = standard_views();
        let ipa = project(&v, &g, &pa).unwrap();
        let ila = project(&v, &g, &la).unwrap();
        assert_ne!(ipa.data(), ila.data());
    }

    #[test]
    fn adjoint_identity_random_poses() {
        let v = random_volume(21, (8, 8, 8));
        let mut rng = SplitMix64::new(99);
        for mode in [GeometryMode::Parallel, GeometryMode::ConeBeam] {
            for trial in 0..20 {
                let g = ProjectionGeometry {
                    mode,
                    detector_dims: (12, 12),
                    detector_pixel_spacing: (1.1, 0.9),
                    source_to_isocenter: 40.0,
                    source_to_detector: 90.0,
                    ray_step: 0.6,
                };
                let pose = ViewPose {
                    rotation: (
                        rng.uniform(-1.5, 1.5),
                        rng.uniform(-1.5, 1.5),
                        rng.uniform(-1.5, 1.5),
                    ),
                    translation: (rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)),
                };
                let u_data: Vec<f64> = (0..144).map(|_| rng.uniform(-1.0, 1.0)).collect();
                let u = ImageGrid2D::new(12, 12, (1.1, 0.9), u_data).unwrap();
                let pv = project(&v, &g, &pose).unwrap();
                let ptu = backproject(&u, &g, &pose, v.dims(), v.spacing(), v.origin()).unwrap();
                let lhs = dot(pv.data(), u.data());
                let rhs = dot(v.data(), ptu.data());
                let pv_norm = dot(pv.data(), pv.data()).sqrt();
                let u_norm = dot(u.data(), u.data()).sqrt();
                let rel = (lhs - rhs).abs() / (pv_norm * u_norm + 1e-30);
                assert!(rel < 1e-12, "mode {mode:?} trial {trial}: rel {rel}");
            }
        }
    }

    #[test]
    fn one_hot_pixel_support_near_ray() {
        let g = ProjectionGeometry::parallel((9, 9), (1.0, 1.0), 0.4);
        let pose = ViewPose {
            rotation: (0.35, -0.15, 0.6),
            translation: (0.2, -0.4, 0.1),
        };
        let mut img = ImageGrid2D::zeros(9, 9, (1.0, 1.0)).unwrap();
        img.set(2, 6, 1.0);
        let dims = (10, 10, 10);
        let spacing = (1.0, 1.0, 1.0);
        let origin = (0.0, 0.0, 0.0);
        let bp = backproject(&img, &g, &pose, dims, spacing, origin).unwrap();
        let probe = Volume::zeros(dims, spacing, origin).unwrap();
        let rig = Rig::new(&probe, &pose);
        let (o, d) = pixel_ray(&g, &rig, 2, 6);
        // Every nonzero voxel center must lie within the trilinear halo
        // (one voxel diagonal) of the ray line.
        let max_r = 3.0f64.sqrt() + 1e-9;
        for z in 0..dims.0 {
            for y in 0..dims.1 {
                for x in 0..dims.2 {
                    if bp.at(z, y, x) != 0.0 {
                        let p = bp.world_at(z, y, x);
                        let rel = [p[0] - o[0], p[1] - o[1], p[2] - o[2]];
                        let t = rel[0] * d[0] + rel[1] * d[1] + rel[2] * d[2];
                        let closest = [o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]];
                        let dist = ((p[0] - closest[0]).powi(2)
                            + (p[1] - closest[1]).powi(2)
                            + (p[2] - closest[2]).powi(2))
                        .sqrt();
                        assert!(dist <= max_r, "voxel ({z},{y},{x}) at distance {dist}");
                    }
                }
            }
        }
        assert!(bp.data().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn zero_image_backprojects_to_zero() {
        let g = ProjectionGeometry::parallel((5, 5), (1.0, 1.0), 0.5);
        let img = ImageGrid2D::zeros(5, 5, (1.0, 1.0)).unwrap();
        let bp = backproject(&img, &g, &ViewPose::identity(), (4, 4, 4), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).unwrap();
        assert!(bp.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backproject_checks_detector_dims() {
        let g = ProjectionGeometry::parallel((5, 5), (1.0, 1.0), 0.5);
        let img = ImageGrid2D::zeros(4, 5, (1.0, 1.0)).unwrap();
        assert!(backproject(&img, &g, &ViewPose::identity(), (4, 4, 4), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn degenerate_geometry_rejected() {
        let v = uniform_cube_volume(4, 1.0, 0.02);
        let mut g = ProjectionGeometry::parallel((4, 4), (1.0, 1.0), 0.5);
        g.ray_step = 0.0;
        assert!(project(&v, &g, &ViewPose::identity()).is_err());
        let bad_cone = ProjectionGeometry::cone_beam((4, 4), (1.0, 1.0), 120.0, 100.0, 0.5);
        assert!(project(&v, &bad_cone, &ViewPose::identity()).is_err());
    }

    #[test]
    fn perturbation_zero_ranges_is_identity() {
        let base = ViewPose {
            rotation: (0.1, 0.2, 0.3),
            translation: (1.0, 2.0, 3.0),
        };
        let spec = PerturbationSpec {
            rotation_range: (0.0, 0.0, 0.0),
            translation_range: (0.0, 0.0, 0.0),
            seed: 5,
        };
        let p = sample_perturbed_pose(&base, &spec, 17);
        assert_eq!(p, base);
    }

    #[test]
    fn perturbation_deterministic() {
        let base = ViewPose::identity();
        let spec = PerturbationSpec {
            rotation_range: (0.1, 0.1, 0.1),
            translation_range: (5.0, 5.0, 5.0),
            seed: 42,
        };
        assert_eq!(
            sample_perturbed_pose(&base, &spec, 3),
            sample_perturbed_pose(&base, &spec, 3)
        );
        assert_ne!(
            sample_perturbed_pose(&base, &spec, 3),
            sample_perturbed_pose(&base, &spec, 4)
        );
    }

    #[test]
    fn perturbation_statistics() {
        let base = ViewPose::identity();
        let spec = PerturbationSpec {
            rotation_range: (0.1, 0.1, 0.1),
            translation_range: (0.0, 0.0, 0.0),
            seed: 7,
        };
        let n = 10_000u64;
        let mut sum = 0.0;
        for i in 0..n {
            let p = sample_perturbed_pose(&base, &spec, i);
            assert!(p.rotation.0.abs() <= 0.1 + 1e-15);
            assert!(p.rotation.1.abs() <= 0.1 + 1e-15);
            assert!(p.rotation.2.abs() <= 0.1 + 1e-15);
            sum += p.rotation.0;
        }
        assert!((sum / n as f64).abs() < 0.005);
    }

    #[test]
    fn drr_all_air_is_zero_and_flagged() {
        let ct = Volume::new((6, 6, 6), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0), vec![-1000.0; 216]).unwrap();
        let g = ProjectionGeometry::parallel((8, 8), (1.0, 1.0), 0.5);
        let (pa, la, meta) = drr_simulate(&ct, &g, 0.02, false).unwrap();
        assert!(pa.data().iter().all(|&v| v == 0.0));
        assert!(la.data().iter().all(|&v| v == 0.0));
        assert!(meta.pa_constant && meta.la_constant);
    }

    #[test]
    fn drr_normalization_bounds() {
        let mut ct = Volume::new((8, 8, 8), (2.0, 2.0, 2.0), (0.0, 0.0, 0.0), vec![-1000.0; 512]).unwrap();
        for z in 2..6 {
            for y in 2..6 {
                for x in 2..5 {
                    let i = ct.index(z, y, x);
                    ct.data_mut()[i] = 0.0;
                }
            }
        }
        let g = ProjectionGeometry::parallel((16, 16), (1.5, 1.5), 0.5);
        let (pa, la, meta) = drr_simulate(&ct, &g, 0.02, false).unwrap();
        for img in [&pa, &la] {
            let (lo, hi) = img.min_max();
            assert_eq!(lo, 0.0);
            assert_eq!(hi, 1.0);
        }
        assert!(!meta.pa_constant && !meta.la_constant);
    }

    #[test]
    fn drr_radiographic_mode_inverts_contrast() {
        let mut ct = Volume::new((8, 8, 8), (2.0, 2.0, 2.0), (0.0, 0.0, 0.0), vec![-1000.0; 512]).unwrap();
        for z in 2..6 {
            for y in 2..6 {
                for x in 2..6 {
                    let i = ct.index(z, y, x);
                    ct.data_mut()[i] = 0.0;
                }
            }
        }
        let g = ProjectionGeometry::parallel((8, 8), (2.5, 2.5), 0.5);
        let (line, _, _) = drr_simulate(&ct, &g, 0.02, false).unwrap();
        let (radio, _, _) = drr_simulate(&ct, &g, 0.02, true).unwrap();
        // The densest pixel is the brightest in line-integral mode and the
        // darkest in radiographic mode.
        let (argmax_line, _) = line
            .data()
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert_eq!(radio.data()[argmax_line], 0.0);
    }

    #[test]
    fn projection_deterministic_across_thread_counts() {
        let v = random_volume(31, (12, 12, 12));
        let g = ProjectionGeometry::cone_beam((24, 24), (1.0, 1.0), 60.0, 110.0, 0.4);
        let pose = ViewPose {
            rotation: (0.4, 0.2, -0.3),
            translation: (1.0, 0.0, -1.0),
        };
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool8 = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let a = pool1.install(|| project(&v, &g, &pose).unwrap());
        let b = pool8.install(|| project(&v, &g, &pose).unwrap());
        assert_eq!(a.data(), b.data());
    }
}
