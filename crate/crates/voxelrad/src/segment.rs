//! Rule-based pneumothorax segmentation.
//!
//! The pipeline separates free pleural air from aerated lung on a CT volume
//! using only intensity rules, morphology and connectivity:
//!
//! 1. lung proposal: union of ingested lung masks (when provided) or a
//!    classical low-attenuation fallback, closed with a small ball;
//! 2. body mask: threshold, close, flood the exterior from both grid
//!    corners, invert;
//! 3. candidate air: lung proposal ∩ body, thresholded against the candidate
//!    HU ceiling;
//! 4. refinement: close, keep only voxels darker than the air ceiling
//!    (default -950 HU) inside the body, then drop components not strictly
//!    exceeding the minimum volume (default 10 ml).
//!
//! The lung proposal is split into right/left by component centroid or, for
//! a fused mask, by a sagittal plane through the centroid.

use crate::error::{Error, Result};
use crate::morphology::{
    label_components, measure_components, morph_close_3d, region_grow, threshold, Connectivity,
    ThresholdSense,
};
use crate::volume::{Mask, Volume};

/// All pipeline knobs. Only the air ceiling (-950 HU) and the minimum
/// component volume (10 ml) are fixed by the method; everything else is a
/// tunable default.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegParams {
    /// Body/air separation threshold t_b, HU. Voxels >= t_b are body-like.
    pub body_threshold_hu: f64,
    /// Candidate-air ceiling t_p, HU, applied inside lung ∩ body.
    pub candidate_threshold_hu: f64,
    /// Air refinement ceiling, HU.
    pub air_hu: f64,
    /// Closing radius for the lung proposal, voxels.
    pub lung_close_radius: u32,
    /// Closing radius for the coarse body mask, voxels; sized to seal the
    /// trachea.
    pub body_close_radius: u32,
    /// Closing radius for the candidate air region, voxels.
    pub ptx_close_radius: u32,
    /// Connectivity used for region growing.
    pub grow_connectivity: Connectivity,
    /// Connectivity used for component labeling.
    pub label_connectivity: Connectivity,
    /// Minimum component volume v_t, ml (strictly-exceeds rule).
    pub min_component_ml: f64,
}

impl Default for SegParams {
    fn default() -> Self {
        SegParams {
            body_threshold_hu: -400.0,
            candidate_threshold_hu: -500.0,
            air_hu: -950.0,
            lung_close_radius: 2,
            body_close_radius: 6,
            ptx_close_radius: 2,
            grow_connectivity: Connectivity::Six,
            label_connectivity: Connectivity::TwentySix,
            min_component_ml: 10.0,
        }
    }
}

impl SegParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.air_hu < self.body_threshold_hu) {
            return Err(Error::invalid(
                "seg params",
                format!(
                    "air_hu ({}) must be below body_threshold_hu ({})",
                    self.air_hu, self.body_threshold_hu
                ),
            ));
        }
        if !(self.min_component_ml >= 0.0) {
            return Err(Error::invalid("seg params", "min_component_ml must be >= 0"));
        }
        Ok(())
    }
}

/// Segmentation output. Invariants: all masks share the input geometry,
/// pneumothorax ⊆ body, right ∪ left = lungs and right ∩ left = ∅.
#[derive(Debug, Clone)]
pub struct SegResult {
    pub lungs: Mask,
    pub body: Mask,
    pub pneumothorax: Mask,
    pub right_lung: Mask,
    pub left_lung: Mask,
}

/// Voxelwise union of lung masks followed by closing. Masks must share a
/// geometry; the list must be non-empty.
pub fn ensemble_lungs(masks: &[Mask], close_radius: u32) -> Result<Mask> {
    let Some(first) = masks.first() else {
        return Err(Error::invalid("lung masks", "mask list is empty"));
    };
    let mut acc = first.clone();
    for m in &masks[1..] {
        acc = acc.union(m)?;
    }
    Ok(morph_close_3d(&acc, close_radius))
}

/// Body mask: threshold at t_b, close with the body ball, flood the exterior
/// from both grid corners, union, invert. Fails when a corner voxel is
/// already inside the coarse body (degenerate scan touching the grid
/// corner).
pub fn body_mask(ct: &Volume, params: &SegParams) -> Result<Mask> {
    params.validate()?;
    let coarse = morph_close_3d(
        &threshold(ct, params.body_threshold_hu, ThresholdSense::AboveOrEqual),
        params.body_close_radius,
    );
    let (nz, ny, nx) = coarse.dims();
    let corner0 = (0, 0, 0);
    let corner1 = (nz - 1, ny - 1, nx - 1);
    for corner in [corner0, corner1] {
        if coarse.get(corner.0, corner.1, corner.2) != 0 {
            return Err(Error::CornerSeedInsideBody { index: corner });
        }
    }
    let grown0 = region_grow(&coarse, corner0, params.grow_connectivity)?;
    let grown1 = region_grow(&coarse, corner1, params.grow_connectivity)?;
    Ok(grown0.union(&grown1)?.complement())
}

/// Classical lung proposal used when no external lung masks are supplied:
/// low-attenuation voxels inside the body, keeping the two largest
/// components, closed with the lung ball. Deliberately simple; free pleural
/// air that touches a lung stays inside the proposal, which is what the
/// downstream pipeline expects.
pub fn classical_lung_segment(ct: &Volume, params: &SegParams) -> Result<Mask> {
    let body = body_mask(ct, params)?;
    let low = threshold(ct, params.body_threshold_hu, ThresholdSense::Below);
    let inside = low.intersect(&body)?;
    let kept = keep_largest(&inside, params.label_connectivity, 2);
    Ok(morph_close_3d(&kept, params.lung_close_radius))
}

fn keep_largest(m: &Mask, conn: Connectivity, max_components: usize) -> Mask {
    let (labels, counts) = label_components(m, conn);
    let mut order: Vec<usize> = (1..counts.len()).collect();
    // by count descending, ties by label ascending (raster order)
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    order.truncate(max_components);
    let keep: Vec<bool> = (0..counts.len()).map(|l| order.contains(&l)).collect();
    let mut out = m.clone();
    for (o, &l) in out.data_mut().iter_mut().zip(&labels) {
        *o = u8::from(l != 0 && keep[l as usize]);
    }
    out
}

/// Split a lung mask into (right, left). Components are assigned by centroid
/// x (patient right = smaller x); a single fused component is cut by the
/// sagittal plane through the mask centroid. Every foreground voxel lands in
/// exactly one side.
pub fn split_lungs(lungs: &Mask) -> (Mask, Mask) {
    let (labels, counts) = label_components(lungs, Connectivity::TwentySix);
    let n_comp = counts.len() - 1;
    let mut right = Mask::zeros_like(&Volume::zeros(lungs.dims(), lungs.spacing(), lungs.origin()).expect("valid geometry"));
    let mut left = right.clone();
    if n_comp == 0 {
        return (right, left);
    }
    let (nz, ny, nx) = lungs.dims();

    // per-component centroid x
    let mut sum_x = vec![0.0f64; counts.len()];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let l = labels[(z * ny + y) * nx + x] as usize;
                if l != 0 {
                    sum_x[l] += x as f64;
                }
            }
        }
    }
    let centroid_x: Vec<f64> = (0..counts.len())
        .map(|l| if counts[l] > 0 { sum_x[l] / counts[l] as f64 } else { 0.0 })
        .collect();

    if n_comp == 1 {
        // fused: sagittal plane through the mask centroid
        let plane = centroid_x[1];
        for (i, &l) in labels.iter().enumerate() {
            if l != 0 {
                let x = i % nx;
                if (x as f64) < plane {
                    right.data_mut()[i] = 1;
                } else {
                    left.data_mut()[i] = 1;
                }
            }
        }
        return (right, left);
    }

    // two largest by count (ties by label order), the rest joins the nearer
    let mut order: Vec<usize> = (1..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let (big_a, big_b) = (order[0], order[1]);
    let (right_label, left_label) = if centroid_x[big_a] <= centroid_x[big_b] {
        (big_a, big_b)
    } else {
        (big_b, big_a)
    };
    let cx_right = centroid_x[right_label];
    let cx_left = centroid_x[left_label];
    let mut side_is_right = vec![false; counts.len()];
    for l in 1..counts.len() {
        side_is_right[l] = if l == right_label {
            true
        } else if l == left_label {
            false
        } else {
            (centroid_x[l] - cx_right).abs() <= (centroid_x[l] - cx_left).abs()
        };
    }
    for (i, &l) in labels.iter().enumerate() {
        if l != 0 {
            if side_is_right[l as usize] {
                right.data_mut()[i] = 1;
            } else {
                left.data_mut()[i] = 1;
            }
        }
    }
    (right, left)
}

/// Run the full pipeline. `lung_masks` may be empty, in which case the
/// classical proposal stands in for ingested masks.
pub fn segment_pneumothorax(ct: &Volume, lung_masks: &[Mask], params: &SegParams) -> Result<SegResult> {
    params.validate()?;
    for m in lung_masks {
        if !m.same_geometry_as_volume(ct) {
            return Err(Error::GeometryMismatch("lung mask geometry differs from the CT".into()));
        }
    }
    let lungs = if lung_masks.is_empty() {
        classical_lung_segment(ct, params)?
    } else {
        ensemble_lungs(lung_masks, params.lung_close_radius)?
    };
    let body = body_mask(ct, params)?;
    let candidate = lungs.intersect(&body)?;
    let below_tp = threshold(ct, params.candidate_threshold_hu, ThresholdSense::Below);
    let candidate_air = candidate.intersect(&below_tp)?;
    let closed = morph_close_3d(&candidate_air, params.ptx_close_radius);
    // Air refinement before the volume filter so every surviving component
    // really is pure sub-ceiling air of sufficient size; the closing may
    // have rolled over brighter or extracorporeal voxels.
    let is_air = threshold(ct, params.air_hu, ThresholdSense::Below);
    let refined = closed.intersect(&is_air)?.intersect(&body)?;
    let pneumothorax = measure_components(&refined, params.label_connectivity, params.min_component_ml);
    let (right_lung, left_lung) = split_lungs(&lungs);
    Ok(SegResult {
        lungs,
        body,
        pneumothorax,
        right_lung,
        left_lung,
    })
}
