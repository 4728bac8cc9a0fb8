//! Volume, mask and 2D image value types plus grid arithmetic.
//!
//! A [`Volume`] is a dense 3D scalar grid in Hounsfield units (or linear
//! attenuation after [`hu_to_attenuation`]). Storage order is z-slowest,
//! x-fastest; spacing and origin are world-space millimetre quantities in
//! `(x, y, z)` order. A [`Mask`] is the binary counterpart sharing the same
//! geometry. All three types are immutable values after construction and all
//! operations here are pure functions.

use crate::error::{Error, Result};

/// Boundary behaviour of trilinear sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Queries outside the voxel-center span return 0. Used by the projector:
    /// ray samples beyond the scan contribute nothing.
    ZeroOutside,
    /// Queries are clamped to the voxel-center span. Used by resampling so
    /// output voxels in the half-voxel rim extend the edge value.
    ClampToEdge,
}

/// Tolerance (in continuous index units) by which a sample may sit past the
/// voxel-center span and still be treated as on the boundary. Absorbs the
/// one-ulp overshoot of computing the last ray sample as `t0 + n * dt`.
const INDEX_EPS: f64 = 1e-9;

/// Dense 3D scalar grid with physical geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: [usize; 3],    // (d, h, w) voxel counts = (nz, ny, nx)
    spacing: [f64; 3],   // (sx, sy, sz) mm per voxel
    origin: [f64; 3],    // world position (x, y, z) of voxel (0,0,0) center, mm
    data: Vec<f64>,
}

impl Volume {
    /// Build a volume, validating every invariant.
    pub fn new(dims: (usize, usize, usize), spacing: (f64, f64, f64), origin: (f64, f64, f64), data: Vec<f64>) -> Result<Self> {
        let (d, h, w) = dims;
        if d == 0 || h == 0 || w == 0 {
            return Err(Error::invalid("dims", format!("all dims must be >= 1, got {dims:?}")));
        }
        let (sx, sy, sz) = spacing;
        if !(sx > 0.0 && sy > 0.0 && sz > 0.0) || !(sx.is_finite() && sy.is_finite() && sz.is_finite()) {
            return Err(Error::invalid("spacing", format!("spacing must be finite and > 0, got {spacing:?}")));
        }
        let (ox, oy, oz) = origin;
        if !(ox.is_finite() && oy.is_finite() && oz.is_finite()) {
            return Err(Error::invalid("origin", format!("origin must be finite, got {origin:?}")));
        }
        let n = d
            .checked_mul(h)
            .and_then(|v| v.checked_mul(w))
            .ok_or_else(|| Error::invalid("dims", "voxel count overflows usize"))?;
        if data.len() != n {
            return Err(Error::invalid(
                "data",
                format!("data length {} != D*H*W = {}", data.len(), n),
            ));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid("data", format!("non-finite voxel value {bad}")));
        }
        Ok(Volume {
            dims: [d, h, w],
            spacing: [sx, sy, sz],
            origin: [ox, oy, oz],
            data,
        })
    }

    /// All-zero volume on the given grid.
    pub fn zeros(dims: (usize, usize, usize), spacing: (f64, f64, f64), origin: (f64, f64, f64)) -> Result<Self> {
        let n = dims.0 * dims.1 * dims.2;
        Volume::new(dims, spacing, origin, vec![0.0; n])
    }

    /// `(d, h, w)` voxel counts.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.dims[0], self.dims[1], self.dims[2])
    }

    pub fn nx(&self) -> usize {
        self.dims[2]
    }

    pub fn ny(&self) -> usize {
        self.dims[1]
    }

    pub fn nz(&self) -> usize {
        self.dims[0]
    }

    /// `(sx, sy, sz)` in mm.
    pub fn spacing(&self) -> (f64, f64, f64) {
        (self.spacing[0], self.spacing[1], self.spacing[2])
    }

    /// `(ox, oy, oz)` world position of voxel (0,0,0) center, mm.
    pub fn origin(&self) -> (f64, f64, f64) {
        (self.origin[0], self.origin[1], self.origin[2])
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, z: usize, y: usize, x: usize) -> usize {
        (z * self.dims[1] + y) * self.dims[2] + x
    }

    #[inline]
    pub fn at(&self, z: usize, y: usize, x: usize) -> f64 {
        self.data[self.index(z, y, x)]
    }

    /// Physical volume of one voxel in ml (1 ml = 1000 mm³).
    pub fn voxel_ml(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2] / 1000.0
    }

    /// World coordinate of the voxel-center `(z, y, x)`.
    pub fn world_at(&self, z: usize, y: usize, x: usize) -> [f64; 3] {
        [
            self.origin[0] + x as f64 * self.spacing[0],
            self.origin[1] + y as f64 * self.spacing[1],
            self.origin[2] + z as f64 * self.spacing[2],
        ]
    }

    /// Center of the voxel-center span: the rotation isocenter used by the
    /// projector.
    pub fn isocenter(&self) -> [f64; 3] {
        [
            self.origin[0] + (self.dims[2] - 1) as f64 * self.spacing[0] * 0.5,
            self.origin[1] + (self.dims[1] - 1) as f64 * self.spacing[1] * 0.5,
            self.origin[2] + (self.dims[0] - 1) as f64 * self.spacing[2] * 0.5,
        ]
    }

    /// Axis-aligned bounds of the voxel-center span: `[min_xyz, max_xyz]`.
    pub fn center_bounds(&self) -> ([f64; 3], [f64; 3]) {
        let max = [
            self.origin[0] + (self.dims[2] - 1) as f64 * self.spacing[0],
            self.origin[1] + (self.dims[1] - 1) as f64 * self.spacing[1],
            self.origin[2] + (self.dims[0] - 1) as f64 * self.spacing[2],
        ];
        (self.origin, max)
    }

    /// Continuous index `(fx, fy, fz)` of a world point.
    #[inline]
    pub fn world_to_index(&self, p: [f64; 3]) -> [f64; 3] {
        [
            (p[0] - self.origin[0]) / self.spacing[0],
            (p[1] - self.origin[1]) / self.spacing[1],
            (p[2] - self.origin[2]) / self.spacing[2],
        ]
    }

    /// Trilinear sample at a continuous index `(fx, fy, fz)`.
    #[inline]
    pub fn sample_index(&self, f: [f64; 3], boundary: Boundary) -> f64 {
        let nx = self.dims[2];
        let ny = self.dims[1];
        let nz = self.dims[0];
        let (mut fx, mut fy, mut fz) = (f[0], f[1], f[2]);
        match boundary {
            Boundary::ZeroOutside => {
                if fx < -INDEX_EPS
                    || fy < -INDEX_EPS
                    || fz < -INDEX_EPS
                    || fx > (nx - 1) as f64 + INDEX_EPS
                    || fy > (ny - 1) as f64 + INDEX_EPS
                    || fz > (nz - 1) as f64 + INDEX_EPS
                {
                    return 0.0;
                }
                fx = fx.clamp(0.0, (nx - 1) as f64);
                fy = fy.clamp(0.0, (ny - 1) as f64);
                fz = fz.clamp(0.0, (nz - 1) as f64);
            }
            Boundary::ClampToEdge => {
                fx = fx.clamp(0.0, (nx - 1) as f64);
                fy = fy.clamp(0.0, (ny - 1) as f64);
                fz = fz.clamp(0.0, (nz - 1) as f64);
            }
        }
        let (x0, wx) = cell(fx, nx);
        let (y0, wy) = cell(fy, ny);
        let (z0, wz) = cell(fz, nz);
        let x1 = (x0 + 1).min(nx - 1);
        let y1 = (y0 + 1).min(ny - 1);
        let z1 = (z0 + 1).min(nz - 1);

        let c000 = self.at(z0, y0, x0);
        let c001 = self.at(z0, y0, x1);
        let c010 = self.at(z0, y1, x0);
        let c011 = self.at(z0, y1, x1);
        let c100 = self.at(z1, y0, x0);
        let c101 = self.at(z1, y0, x1);
        let c110 = self.at(z1, y1, x0);
        let c111 = self.at(z1, y1, x1);

        let c00 = c000 + (c001 - c000) * wx;
        let c01 = c010 + (c011 - c010) * wx;
        let c10 = c100 + (c101 - c100) * wx;
        let c11 = c110 + (c111 - c110) * wx;
        let c0 = c00 + (c01 - c00) * wy;
        let c1 = c10 + (c11 - c10) * wy;
        c0 + (c1 - c0) * wz
    }

    /// Trilinear sample at a world point.
    #[inline]
    pub fn sample_world(&self, p: [f64; 3], boundary: Boundary) -> f64 {
        self.sample_index(self.world_to_index(p), boundary)
    }

    /// True when dims, spacing and origin are bit-identical.
    pub fn same_geometry(&self, other: &Volume) -> bool {
        self.dims == other.dims && self.spacing == other.spacing && self.origin == other.origin
    }

    /// Apply a function to every voxel, keeping the geometry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Volume {
        Volume {
            dims: self.dims,
            spacing: self.spacing,
            origin: self.origin,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Lower cell index and fractional weight along one axis.
#[inline]
fn cell(f: f64, n: usize) -> (usize, f64) {
    if n == 1 {
        return (0, 0.0);
    }
    let i = (f.floor() as isize).clamp(0, n as isize - 2) as usize;
    (i, f - i as f64)
}

/// Binary 3D grid sharing a [`Volume`]'s geometry. Values are 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    data: Vec<u8>,
}

impl Mask {
    pub fn new(dims: (usize, usize, usize), spacing: (f64, f64, f64), origin: (f64, f64, f64), data: Vec<u8>) -> Result<Self> {
        let probe = Volume::new(dims, spacing, origin, vec![0.0; data.len()])?;
        if let Some(bad) = data.iter().find(|&&v| v > 1) {
            return Err(Error::invalid("mask data", format!("values must be 0 or 1, got {bad}")));
        }
        let _ = probe;
        Ok(Mask {
            dims: [dims.0, dims.1, dims.2],
            spacing: [spacing.0, spacing.1, spacing.2],
            origin: [origin.0, origin.1, origin.2],
            data,
        })
    }

    /// Empty mask on the geometry of `v`.
    pub fn zeros_like(v: &Volume) -> Mask {
        Mask {
            dims: v.dims,
            spacing: v.spacing,
            origin: v.origin,
            data: vec![0; v.len()],
        }
    }

    /// Mask on the same grid as `v` from a per-voxel predicate over values.
    pub fn from_predicate(v: &Volume, pred: impl Fn(f64) -> bool) -> Mask {
        Mask {
            dims: v.dims,
            spacing: v.spacing,
            origin: v.origin,
            data: v.data.iter().map(|&x| u8::from(pred(x))).collect(),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.dims[0], self.dims[1], self.dims[2])
    }

    pub fn nx(&self) -> usize {
        self.dims[2]
    }

    pub fn ny(&self) -> usize {
        self.dims[1]
    }

    pub fn nz(&self) -> usize {
        self.dims[0]
    }

    pub fn spacing(&self) -> (f64, f64, f64) {
        (self.spacing[0], self.spacing[1], self.spacing[2])
    }

    pub fn origin(&self) -> (f64, f64, f64) {
        (self.origin[0], self.origin[1], self.origin[2])
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, z: usize, y: usize, x: usize) -> usize {
        (z * self.dims[1] + y) * self.dims[2] + x
    }

    #[inline]
    pub fn get(&self, z: usize, y: usize, x: usize) -> u8 {
        self.data[self.index(z, y, x)]
    }

    #[inline]
    pub fn set(&mut self, z: usize, y: usize, x: usize, v: u8) {
        let i = self.index(z, y, x);
        self.data[i] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn voxel_ml(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2] / 1000.0
    }

    /// Physical foreground volume in ml.
    pub fn volume_ml(&self) -> f64 {
        self.count() as f64 * self.voxel_ml()
    }

    pub fn same_geometry(&self, other: &Mask) -> bool {
        self.dims == other.dims && self.spacing == other.spacing && self.origin == other.origin
    }

    pub fn same_geometry_as_volume(&self, v: &Volume) -> bool {
        self.dims == v.dims && self.spacing == v.spacing && self.origin == v.origin
    }

    /// Voxelwise union. Geometries must match.
    pub fn union(&self, other: &Mask) -> Result<Mask> {
        self.zip(other, |a, b| a | b)
    }

    /// Voxelwise intersection. Geometries must match.
    pub fn intersect(&self, other: &Mask) -> Result<Mask> {
        self.zip(other, |a, b| a & b)
    }

    /// Voxelwise complement within the grid.
    pub fn complement(&self) -> Mask {
        Mask {
            dims: self.dims,
            spacing: self.spacing,
            origin: self.origin,
            data: self.data.iter().map(|&v| 1 - v).collect(),
        }
    }

    fn zip(&self, other: &Mask, f: impl Fn(u8, u8) -> u8) -> Result<Mask> {
        if !self.same_geometry(other) {
            return Err(Error::GeometryMismatch(format!(
                "{:?}/{:?}/{:?} vs {:?}/{:?}/{:?}",
                self.dims, self.spacing, self.origin, other.dims, other.spacing, other.origin
            )));
        }
        Ok(Mask {
            dims: self.dims,
            spacing: self.spacing,
            origin: self.origin,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// View the mask as a 0/1-valued volume on the same grid.
    pub fn to_volume(&self) -> Volume {
        Volume {
            dims: self.dims,
            spacing: self.spacing,
            origin: self.origin,
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }
}

/// Dense 2D scalar image with physical pixel spacing, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid2D {
    rows: usize,
    cols: usize,
    pixel_spacing: [f64; 2], // (row pitch, col pitch) mm
    data: Vec<f64>,
}

impl ImageGrid2D {
    pub fn new(rows: usize, cols: usize, pixel_spacing: (f64, f64), data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("image dims", format!("dims must be >= 1, got {rows}x{cols}")));
        }
        if !(pixel_spacing.0 > 0.0 && pixel_spacing.1 > 0.0) {
            return Err(Error::invalid("pixel spacing", format!("{pixel_spacing:?}")));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(
                "image data",
                format!("length {} != rows*cols = {}", data.len(), rows * cols),
            ));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid("image data", format!("non-finite pixel {bad}")));
        }
        Ok(ImageGrid2D {
            rows,
            cols,
            pixel_spacing: [pixel_spacing.0, pixel_spacing.1],
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize, pixel_spacing: (f64, f64)) -> Result<Self> {
        ImageGrid2D::new(rows, cols, pixel_spacing, vec![0.0; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixel_spacing(&self) -> (f64, f64) {
        (self.pixel_spacing[0], self.pixel_spacing[1])
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// Linear attenuation from Hounsfield units: `mu = mu_water * (1 + HU/1000)`,
/// clamped below at zero so everything at or below -1000 HU maps to vacuum.
pub fn hu_to_attenuation(v: &Volume, mu_water: f64) -> Result<Volume> {
    if !(mu_water > 0.0) {
        return Err(Error::invalid("mu_water", format!("must be > 0, got {mu_water}")));
    }
    Ok(v.map(|hu| (mu_water * (1.0 + hu / 1000.0)).max(0.0)))
}

/// Inverse of [`hu_to_attenuation`] on its non-clamped range; attenuation 0
/// maps back to -1000 HU.
pub fn attenuation_to_hu(v: &Volume, mu_water: f64) -> Result<Volume> {
    if !(mu_water > 0.0) {
        return Err(Error::invalid("mu_water", format!("must be > 0, got {mu_water}")));
    }
    Ok(v.map(|mu| 1000.0 * (mu / mu_water - 1.0)))
}

/// Default water attenuation at diagnostic energies, 1/mm.
pub const DEFAULT_MU_WATER: f64 = 0.02;

/// Trilinear resampling onto a `target_dims` grid covering the same physical
/// extent. Output spacing is `extent / target_dims` per axis; output voxel
/// centers are sampled with clamp-to-edge boundary handling so the half-voxel
/// rim extends edge values. Resampling to the input dims is an exact identity.
pub fn resample_trilinear(v: &Volume, target_dims: (usize, usize, usize)) -> Result<Volume> {
    let (td, th, tw) = target_dims;
    if td == 0 || th == 0 || tw == 0 {
        return Err(Error::invalid("target_dims", format!("{target_dims:?}")));
    }
    let (d, h, w) = v.dims();
    let (sx, sy, sz) = v.spacing();
    let (ox, oy, oz) = v.origin();
    // Physical extent per axis is n * s (full voxel cells); preserving it
    // fixes the output spacing and shifts the origin by the half-voxel
    // difference.
    let nsx = w as f64 * sx / tw as f64;
    let nsy = h as f64 * sy / th as f64;
    let nsz = d as f64 * sz / td as f64;
    let nox = ox - 0.5 * sx + 0.5 * nsx;
    let noy = oy - 0.5 * sy + 0.5 * nsy;
    let noz = oz - 0.5 * sz + 0.5 * nsz;

    let mut data = Vec::with_capacity(td * th * tw);
    for z in 0..td {
        // Source continuous index of the output voxel center, computed in
        // index space: exact when target dims equal source dims.
        let fz = (z as f64 + 0.5) * d as f64 / td as f64 - 0.5;
        for y in 0..th {
            let fy = (y as f64 + 0.5) * h as f64 / th as f64 - 0.5;
            for x in 0..tw {
                let fx = (x as f64 + 0.5) * w as f64 / tw as f64 - 0.5;
                data.push(v.sample_index([fx, fy, fz], Boundary::ClampToEdge));
            }
        }
    }
    Volume::new((td, th, tw), (nsx, nsy, nsz), (nox, noy, noz), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_volume() -> Volume {
        // 1x1x2 grid (one z slice, one y row, two x voxels): 0 then 10.
        Volume::new((1, 1, 2), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0), vec![0.0, 10.0]).unwrap()
    }

    #[test]
    fn rejects_zero_dims() {
        assert!(Volume::new((0, 1, 1), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0), vec![]).is_err());
    }

    #[test]
    fn rejects_bad_spacing() {
        assert!(Volume::new((1, 1, 1), (0.0, 1.0, 1.0), (0.0, 0.0, 0.0), vec![1.0]).is_err());
        assert!(Volume::new((1, 1, 1), (-1.0, 1.0, 1.0), (0.0, 0.0, 0.0), vec![1.0]).is_err());
    }

    #[test]
    fn rejects_length_mismatch() {
        assert!(Volume::new((2, 2, 2), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0), vec![0.0; 7]).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Volume::new((1, 1, 1), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0), vec![f64::NAN]).is_err());
    }

    #[test]
    fn mask_rejects_values_above_one() {
        assert!(Mask::new((1, 1, 1), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0), vec![2]).is_err());
    }

    #[test]
    fn storage_order_x_fastest() {
        let v = Volume::new(
            (2, 2, 2),
            (1.0, 1.0, 1.0),
            (0.0, 0.0, 0.0),
            (0..8).map(|i| i as f64).collect(),
        )
        .unwrap();
        assert_eq!(v.at(0, 0, 1), 1.0);
        assert_eq!(v.at(0, 1, 0), 2.0);
        assert_eq!(v.at(1, 0, 0), 4.0);
    }

    #[test]
    fn hu_water_air_and_clamp() {
        let v = Volume::new((1, 1, 3), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0), vec![0.0, -1000.0, -1500.0]).unwrap();
        let mu = hu_to_attenuation(&v, 0.02).unwrap();
        assert_eq!(mu.data()[0], 0.02);
        assert_eq!(mu.data()[1], 0.0);
        assert_eq!(mu.data()[2], 0.0);
    }

    #[test]
    fn hu_monotone_and_zero_below_air() {
        let hus: Vec<f64> = (-30..30).map(|i| i as f64 * 50.0).collect();
        let v = Volume::new((1, 1, hus.len()), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0), hus).unwrap();
        let mu = hu_to_attenuation(&v, 0.02).unwrap();
        for pair in mu.data().windows(2) {
            assert!(pair[1] >= pair[0]);
        }
        for (i, &hu) in v.data().iter().enumerate() {
            if hu <= -1000.0 {
                assert_eq!(mu.data()[i], 0.0);
            }
        }
    }

    #[test]
    fn resample_identity_same_dims() {
        let data: Vec<f64> = (0..27).map(|i| (i * 7 % 13) as f64).collect();
        let v = Volume::new((3, 3, 3), (1.5, 2.0, 1.0), (1.0, -2.0, 3.0), data).unwrap();
        let r = resample_trilinear(&v, (3, 3, 3)).unwrap();
        assert_eq!(r.data(), v.data());
        assert_eq!(r.spacing(), v.spacing());
        assert_eq!(r.origin(), v.origin());
    }

    #[test]
    fn resample_constant_stays_constant() {
        let v = Volume::new((2, 3, 4), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0), vec![7.0; 24]).unwrap();
        let r = resample_trilinear(&v, (5, 5, 5)).unwrap();
        for &x in r.data() {
            assert_eq!(x, 7.0);
        }
    }

    #[test]
    fn resample_ramp_midpoint() {
        // Ramp 0..10 along x resampled from 2 to 3 voxels: middle sample is
        // the trilinear value at the source midpoint, 5.0.
        let v = ramp_volume();
        let r = resample_trilinear(&v, (1, 1, 3)).unwrap();
        assert_eq!(r.data()[1], 5.0);
        // Edge samples are clamped to the span boundary values.
        assert_eq!(r.data()[0], 0.0);
        assert_eq!(r.data()[2], 10.0);
    }

    #[test]
    fn resample_preserves_extent() {
        let v = Volume::new((2, 2, 2), (2.0, 2.0, 2.0), (0.0, 0.0, 0.0), vec![1.0; 8]).unwrap();
        let r = resample_trilinear(&v, (4, 4, 4)).unwrap();
        let (sx, sy, sz) = r.spacing();
        assert_eq!((sx, sy, sz), (1.0, 1.0, 1.0));
        // extent = dims * spacing preserved: 2*2 = 4*1
        let (ox, oy, oz) = r.origin();
        assert_eq!((ox, oy, oz), (-0.5, -0.5, -0.5));
    }

    #[test]
    fn sample_zero_outside_vs_clamp() {
        let v = ramp_volume();
        assert_eq!(v.sample_index([-0.4, 0.0, 0.0], Boundary::ZeroOutside), 0.0);
        assert_eq!(v.sample_index([1.4, 0.0, 0.0], Boundary::ZeroOutside), 0.0);
        assert_eq!(v.sample_index([1.4, 0.0, 0.0], Boundary::ClampToEdge), 10.0);
        assert_eq!(v.sample_index([0.5, 0.0, 0.0], Boundary::ZeroOutside), 5.0);
    }

    #[test]
    fn boundary_sample_with_ulp_overshoot_kept() {
        let v = ramp_volume();
        let just_past = 1.0 + 1e-12;
        assert_eq!(v.sample_index([just_past, 0.0, 0.0], Boundary::ZeroOutside), 10.0);
    }

    #[test]
    fn mask_set_ops() {
        let v = Volume::zeros((1, 1, 4), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).unwrap();
        let mut a = Mask::zeros_like(&v);
        let mut b = Mask::zeros_like(&v);
        a.set(0, 0, 0, 1);
        a.set(0, 0, 1, 1);
        b.set(0, 0, 1, 1);
        b.set(0, 0, 2, 1);
        assert_eq!(a.union(&b).unwrap().count(), 3);
        assert_eq!(a.intersect(&b).unwrap().count(), 1);
        assert_eq!(a.complement().count(), 2);
    }

    #[test]
    fn volume_ml_arithmetic() {
        let v = Volume::zeros((10, 10, 10), (1.6, 1.6, 1.6), (0.0, 0.0, 0.0)).unwrap();
        let mut m = Mask::zeros_like(&v);
        for i in 0..1000 {
            m.data_mut()[i] = 1;
        }
        // 1000 voxels * 4.096 mm^3 = 4.096 ml
        assert!((m.volume_ml() - 4.096).abs() < 1e-12);
    }
}
