//! Image similarity, segmentation overlap, surface distance and correlation
//! metrics, plus clinical quantification of a segmentation result.
//!
//! Conventions:
//! * both-empty mask pairs score Dice = Jaccard = 1 (perfect agreement on
//!   absence); one-empty scores 0;
//! * hd95 uses the nearest-rank percentile and the max of the two directed
//!   percentiles; asd is the mean of the two directed mean distances;
//! * surfaces are foreground voxels with a face-adjacent background
//!   neighbour or a grid boundary, and distances are between voxel centers
//!   in mm;
//! * psnr of identical inputs returns `f64::INFINITY`; undefined metrics
//!   (zero-norm cosine operand, constant Pearson series, empty surface mask)
//!   are reported as errors, serialized downstream as null with a reason.

use crate::edt::{squared_edt, NO_SITE};
use crate::error::{Error, Result};
use crate::segment::SegResult;
use crate::volume::{Mask, Volume};

/// Conventional HU window width used as the default PSNR/SSIM data range.
pub const DEFAULT_DATA_RANGE: f64 = 4095.0;

/// Image and per-structure segmentation metrics for one case.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MetricsReport {
    pub cs: f64,
    pub psnr: f64,
    pub ssim: f64,
    pub structures: Vec<StructureMetrics>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct StructureMetrics {
    pub name: String,
    pub dice: f64,
    pub jaccard: f64,
    pub hd95: Option<f64>,
    pub asd: Option<f64>,
}

/// Physical volumes and pleural-cavity occupancy for one segmentation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuantReport {
    pub right_lung_ml: f64,
    pub left_lung_ml: f64,
    pub air_ml: f64,
    /// air / (air + right + left); 0 when the denominator is 0.
    pub occupancy: f64,
}

fn check_same_dims(a: &Volume, b: &Volume) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            context: "volumes",
            left: format!("{:?}", a.dims()),
            right: format!("{:?}", b.dims()),
        });
    }
    Ok(())
}

/// Cosine similarity of the flattened voxel vectors.
pub fn cosine_similarity(a: &Volume, b: &Volume) -> Result<f64> {
    check_same_dims(a, b)?;
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.data().iter().zip(b.data()) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedMetric {
            metric: "cs",
            reason: "zero-norm operand".into(),
        });
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Peak signal-to-noise ratio in dB over the given data range. Identical
/// inputs give `f64::INFINITY`.
pub fn psnr(a: &Volume, b: &Volume, data_range: f64) -> Result<f64> {
    check_same_dims(a, b)?;
    if !(data_range > 0.0) {
        return Err(Error::invalid("data_range", format!("{data_range}")));
    }
    let mse: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (data_range * data_range / mse).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SsimParams {
    /// Cubic window side, odd, >= 1.
    pub window: usize,
    pub data_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 7,
            data_range: DEFAULT_DATA_RANGE,
        }
    }
}

/// Mean local SSIM over all fully-inside positions of a cubic sliding
/// window with uniform weights. Local statistics use the biased (divide by
/// n) variance; stabilizers are C1 = (0.01 r)^2, C2 = (0.03 r)^2.
pub fn ssim(a: &Volume, b: &Volume, params: &SsimParams) -> Result<f64> {
    check_same_dims(a, b)?;
    let w = params.window;
    if w == 0 || w % 2 == 0 {
        return Err(Error::invalid("ssim window", format!("{w} (must be odd and >= 1)")));
    }
    let (d, h, wd) = a.dims();
    if d < w || h < w || wd < w {
        return Err(Error::invalid(
            "ssim window",
            format!("volume {:?} smaller than window {w}", a.dims()),
        ));
    }
    if !(params.data_range > 0.0) {
        return Err(Error::invalid("data_range", format!("{}", params.data_range)));
    }
    let c1 = (0.01 * params.data_range).powi(2);
    let c2 = (0.03 * params.data_range).powi(2);

    let sa = PrefixSums::build(a.data(), (d, h, wd));
    let sb = PrefixSums::build(b.data(), (d, h, wd));
    let saa = PrefixSums::build_product(a.data(), a.data(), (d, h, wd));
    let sbb = PrefixSums::build_product(b.data(), b.data(), (d, h, wd));
    let sab = PrefixSums::build_product(a.data(), b.data(), (d, h, wd));

    let n = (w * w * w) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for z in 0..=(d - w) {
        for y in 0..=(h - w) {
            for x in 0..=(wd - w) {
                let mu_a = sa.window_sum(z, y, x, w) / n;
                let mu_b = sb.window_sum(z, y, x, w) / n;
                let var_a = (saa.window_sum(z, y, x, w) / n - mu_a * mu_a).max(0.0);
                let var_b = (sbb.window_sum(z, y, x, w) / n - mu_b * mu_b).max(0.0);
                let cov = sab.window_sum(z, y, x, w) / n - mu_a * mu_b;
                let s = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                    / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
                total += s;
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}

/// 3D inclusive prefix sums with a zero border, for O(1) window sums.
struct PrefixSums {
    dims: (usize, usize, usize),
    s: Vec<f64>,
}

impl PrefixSums {
    fn build(data: &[f64], dims: (usize, usize, usize)) -> Self {
        Self::build_with(dims, |i| data[i])
    }

    fn build_product(a: &[f64], b: &[f64], dims: (usize, usize, usize)) -> Self {
        Self::build_with(dims, |i| a[i] * b[i])
    }

    fn build_with(dims: (usize, usize, usize), value: impl Fn(usize) -> f64) -> Self {
        let (d, h, w) = dims;
        let (sd, sh, sw) = (d + 1, h + 1, w + 1);
        let mut s = vec![0.0f64; sd * sh * sw];
        for z in 0..d {
            for y in 0..h {
                let mut row = 0.0;
                for x in 0..w {
                    row += value((z * h + y) * w + x);
                    let above = s[((z + 1) * sh + y) * sw + (x + 1)];
                    let behind = s[(z * sh + (y + 1)) * sw + (x + 1)];
                    let corner = s[(z * sh + y) * sw + (x + 1)];
                    s[((z + 1) * sh + (y + 1)) * sw + (x + 1)] = row + above + behind - corner;
                }
            }
        }
        PrefixSums { dims, s }
    }

    /// Sum over the window starting at (z, y, x) with side `w`.
    #[inline]
    fn window_sum(&self, z: usize, y: usize, x: usize, w: usize) -> f64 {
        let (_, h, wd) = self.dims;
        let (sh, sw) = (h + 1, wd + 1);
        let at = |z: usize, y: usize, x: usize| self.s[(z * sh + y) * sw + x];
        let (z0, y0, x0) = (z, y, x);
        let (z1, y1, x1) = (z + w, y + w, x + w);
        at(z1, y1, x1) - at(z0, y1, x1) - at(z1, y0, x1) - at(z1, y1, x0)
            + at(z0, y0, x1)
            + at(z0, y1, x0)
            + at(z1, y0, x0)
            - at(z0, y0, x0)
    }
}

fn check_same_geometry(a: &Mask, b: &Mask) -> Result<()> {
    if !a.same_geometry(b) {
        return Err(Error::GeometryMismatch("mask geometries differ".into()));
    }
    Ok(())
}

/// Dice overlap 2|A∩B| / (|A| + |B|); both-empty = 1.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    check_same_geometry(a, b)?;
    let inter = a.data().iter().zip(b.data()).filter(|(&x, &y)| x != 0 && y != 0).count();
    let total = a.count() + b.count();
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

/// Jaccard overlap |A∩B| / |A∪B|; both-empty = 1.
pub fn jaccard(a: &Mask, b: &Mask) -> Result<f64> {
    check_same_geometry(a, b)?;
    let mut inter = 0usize;
    let mut uni = 0usize;
    for (&x, &y) in a.data().iter().zip(b.data()) {
        if x != 0 && y != 0 {
            inter += 1;
        }
        if x != 0 || y != 0 {
            uni += 1;
        }
    }
    if uni == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / uni as f64)
}

/// Foreground voxels with at least one face-adjacent background neighbour,
/// counting the volume boundary as background.
pub fn surface_voxels(m: &Mask) -> Mask {
    let (nz, ny, nx) = m.dims();
    let mut out = m.clone();
    for v in out.data_mut().iter_mut() {
        *v = 0;
    }
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if m.get(z, y, x) == 0 {
                    continue;
                }
                let boundary = z == 0
                    || y == 0
                    || x == 0
                    || z == nz - 1
                    || y == ny - 1
                    || x == nx - 1
                    || m.get(z - 1, y, x) == 0
                    || m.get(z + 1, y, x) == 0
                    || m.get(z, y - 1, x) == 0
                    || m.get(z, y + 1, x) == 0
                    || m.get(z, y, x - 1) == 0
                    || m.get(z, y, x + 1) == 0;
                if boundary {
                    out.set(z, y, x, 1);
                }
            }
        }
    }
    out
}

/// Nearest-rank percentile of an unsorted sample (p in [0, 1]).
fn nearest_rank(values: &mut Vec<f64>, p: f64) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let n = values.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    values[rank - 1]
}

/// (hd95, asd) between the surfaces of two non-empty masks, in mm.
pub fn surface_distances(a: &Mask, b: &Mask) -> Result<(f64, f64)> {
    check_same_geometry(a, b)?;
    if a.count() == 0 || b.count() == 0 {
        return Err(Error::UndefinedMetric {
            metric: "surface_distances",
            reason: "empty mask".into(),
        });
    }
    let sa = surface_voxels(a);
    let sb = surface_voxels(b);
    let spacing = a.spacing();
    let dist_to_b = squared_edt(sb.data(), a.dims(), spacing);
    let dist_to_a = squared_edt(sa.data(), a.dims(), spacing);

    let collect = |surface: &Mask, field: &[f64]| -> Vec<f64> {
        surface
            .data()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, _)| {
                debug_assert!(field[i] < NO_SITE);
                field[i].sqrt()
            })
            .collect()
    };
    let mut d_ab = collect(&sa, &dist_to_b);
    let mut d_ba = collect(&sb, &dist_to_a);
    let mean_ab: f64 = d_ab.iter().sum::<f64>() / d_ab.len() as f64;
    let mean_ba: f64 = d_ba.iter().sum::<f64>() / d_ba.len() as f64;
    let hd95 = nearest_rank(&mut d_ab, 0.95).max(nearest_rank(&mut d_ba, 0.95));
    let asd = 0.5 * (mean_ab + mean_ba);
    Ok((hd95, asd))
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            context: "series",
            left: xs.len().to_string(),
            right: ys.len().to_string(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedMetric {
            metric: "pearson",
            reason: "need at least 2 samples".into(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedMetric {
            metric: "pearson",
            reason: "constant series".into(),
        });
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Physical volumes and occupancy from a segmentation result.
pub fn quantify(seg: &SegResult) -> QuantReport {
    let right_lung_ml = seg.right_lung.volume_ml();
    let left_lung_ml = seg.left_lung.volume_ml();
    let air_ml = seg.pneumothorax.volume_ml();
    let denom = air_ml + right_lung_ml + left_lung_ml;
    let occupancy = if denom > 0.0 { air_ml / denom } else { 0.0 };
    QuantReport {
        right_lung_ml,
        left_lung_ml,
        air_ml,
        occupancy,
    }
}
