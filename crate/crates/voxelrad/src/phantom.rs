//! Synthetic chest phantom with analytic ground truth.
//!
//! A soft-tissue body ellipsoid (0 HU) in air (-1000 HU) containing two lung
//! ellipsoids (-800 HU). Optionally a pleural air crescent (-1000 HU) hugs
//! the outer surface of the right lung: the region between the lung
//! ellipsoid and a concentric copy scaled by `CAP_SCALE`, cut by a sagittal
//! plane placed so the crescent has a requested closed-form volume. An
//! optional decoy ellipsoid (-940 HU) inside the left lung exercises the air
//! refinement rule downstream.
//!
//! Every structure's volume has a closed form, so voxelized masks can be
//! checked against analytic values.

use crate::error::{Error, Result};
use crate::rng;
use crate::volume::{Mask, Volume};

/// Ratio of the crescent's outer ellipsoid to the lung ellipsoid; wider
/// laterally than in y/z so the crescent stays inside the body wall.
const CAP_SCALE: [f64; 3] = [1.30, 1.12, 1.15];
/// Decoy semi-axes as a fraction of the host lung's.
const DECOY_SCALE: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhantomSpec {
    /// Grid (d, h, w).
    pub dims: (usize, usize, usize),
    /// (sx, sy, sz) mm.
    pub spacing: (f64, f64, f64),
    /// World origin of voxel (0,0,0).
    pub origin: (f64, f64, f64),
    /// Pleural air volume in ml; 0 disables the cap.
    pub cap_ml: f64,
    /// Add a -940 HU decoy ellipsoid inside the left lung.
    pub decoy: bool,
    /// Uniform intensity noise half-width in HU (0 disables).
    pub noise_hu: f64,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            dims: (64, 64, 64),
            spacing: (1.6, 1.6, 1.6),
            origin: (0.0, 0.0, 0.0),
            cap_ml: 0.0,
            decoy: false,
            noise_hu: 0.0,
            seed: 0,
        }
    }
}

/// Closed-form structure volumes in ml.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct AnalyticVolumes {
    pub body_ml: f64,
    pub right_lung_ml: f64,
    pub left_lung_ml: f64,
    pub air_ml: f64,
    pub decoy_ml: f64,
}

#[derive(Debug, Clone)]
pub struct Phantom {
    pub volume: Volume,
    pub body: Mask,
    pub lungs: Mask,
    pub right_lung: Mask,
    pub left_lung: Mask,
    pub air: Mask,
    pub analytic: AnalyticVolumes,
    /// Lung semi-axes (ax, ay, az) mm, identical for both lungs.
    pub lung_semiaxes: (f64, f64, f64),
}

#[derive(Debug, Clone, Copy)]
struct Ellipsoid {
    center: [f64; 3],
    semi: [f64; 3],
}

impl Ellipsoid {
    #[inline]
    fn contains(&self, p: [f64; 3]) -> bool {
        let dx = (p[0] - self.center[0]) / self.semi[0];
        let dy = (p[1] - self.center[1]) / self.semi[1];
        let dz = (p[2] - self.center[2]) / self.semi[2];
        dx * dx + dy * dy + dz * dz <= 1.0
    }

    fn volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.semi[0] * self.semi[1] * self.semi[2]
    }

    /// Volume of the portion with x <= x_cut.
    fn volume_below(&self, x_cut: f64) -> f64 {
        let u = ((x_cut - self.center[0]) / self.semi[0]).clamp(-1.0, 1.0);
        // {x_hat >= z} portion of the unit ball is pi*(2/3 - z + z^3/3);
        // reflect for {x_hat <= u}.
        let z = -u;
        std::f64::consts::PI * self.semi[0] * self.semi[1] * self.semi[2] * (2.0 / 3.0 - z + z * z * z / 3.0)
    }
}

/// HU values assigned by the generator.
pub const HU_AIR: f64 = -1000.0;
pub const HU_BODY: f64 = 0.0;
pub const HU_LUNG: f64 = -800.0;
pub const HU_DECOY: f64 = -940.0;

pub fn generate_phantom(spec: &PhantomSpec) -> Result<Phantom> {
    let (d, h, w) = spec.dims;
    if d < 16 || h < 16 || w < 16 {
        return Err(Error::invalid("phantom dims", "need at least 16 voxels per axis"));
    }
    if !(spec.cap_ml >= 0.0) {
        return Err(Error::invalid("cap_ml", "must be >= 0"));
    }
    let (sx, sy, sz) = spec.spacing;
    let (ox, oy, oz) = spec.origin;
    let ex = w as f64 * sx * 0.5;
    let ey = h as f64 * sy * 0.5;
    let ez = d as f64 * sz * 0.5;
    let center = [
        ox + (w - 1) as f64 * sx * 0.5,
        oy + (h - 1) as f64 * sy * 0.5,
        oz + (d - 1) as f64 * sz * 0.5,
    ];

    let body = Ellipsoid {
        center,
        semi: [0.85 * ex, 0.80 * ey, 0.92 * ez],
    };
    // Proportions keep the chest wall at least ~3 voxels thick between the
    // pleural crescent and the exterior so the corner flood cannot leak
    // through voxelization staircases.
    let lung_semi = [0.28 * ex, 0.54 * ey, 0.60 * ez];
    let lung_dx = 0.36 * ex;
    let right_lung = Ellipsoid {
        center: [center[0] - lung_dx, center[1], center[2]],
        semi: lung_semi,
    };
    let left_lung = Ellipsoid {
        center: [center[0] + lung_dx, center[1], center[2]],
        semi: lung_semi,
    };
    let cap_outer = Ellipsoid {
        center: right_lung.center,
        semi: [
            CAP_SCALE[0] * lung_semi[0],
            CAP_SCALE[1] * lung_semi[1],
            CAP_SCALE[2] * lung_semi[2],
        ],
    };
    let decoy = Ellipsoid {
        center: left_lung.center,
        semi: [
            DECOY_SCALE * lung_semi[0],
            DECOY_SCALE * lung_semi[1],
            DECOY_SCALE * lung_semi[2],
        ],
    };

    // Solve the sagittal cut for the requested crescent volume.
    let cap_target_mm3 = spec.cap_ml * 1000.0;
    let max_cap = cap_outer.volume() - right_lung.volume();
    if cap_target_mm3 > 0.98 * max_cap {
        return Err(Error::invalid(
            "cap_ml",
            format!(
                "requested {} ml exceeds the {:.1} ml the phantom geometry supports",
                spec.cap_ml,
                0.98 * max_cap / 1000.0
            ),
        ));
    }
    let crescent_below = |x_cut: f64| cap_outer.volume_below(x_cut) - right_lung.volume_below(x_cut);
    let x_cut = if cap_target_mm3 > 0.0 {
        let mut lo = cap_outer.center[0] - cap_outer.semi[0];
        let mut hi = cap_outer.center[0] + cap_outer.semi[0];
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if crescent_below(mid) < cap_target_mm3 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    } else {
        f64::NEG_INFINITY
    };
    let air_analytic_mm3 = if cap_target_mm3 > 0.0 { crescent_below(x_cut) } else { 0.0 };

    let n = d * h * w;
    let mut data = vec![0.0f64; n];
    let mut body_bits = vec![0u8; n];
    let mut lung_bits = vec![0u8; n];
    let mut right_bits = vec![0u8; n];
    let mut left_bits = vec![0u8; n];
    let mut air_bits = vec![0u8; n];

    let mut i = 0usize;
    for z in 0..d {
        for y in 0..h {
            for x in 0..w {
                let p = [
                    ox + x as f64 * sx,
                    oy + y as f64 * sy,
                    oz + z as f64 * sz,
                ];
                let in_right = right_lung.contains(p);
                let in_left = left_lung.contains(p);
                let in_cap = cap_target_mm3 > 0.0 && p[0] <= x_cut && cap_outer.contains(p) && !in_right;
                let in_body = body.contains(p);
                let hu = if in_cap {
                    air_bits[i] = 1;
                    HU_AIR
                } else if in_right || in_left {
                    lung_bits[i] = 1;
                    if in_right {
                        right_bits[i] = 1;
                    } else {
                        left_bits[i] = 1;
                    }
                    if spec.decoy && decoy.contains(p) {
                        HU_DECOY
                    } else {
                        HU_LUNG
                    }
                } else if in_body {
                    HU_BODY
                } else {
                    HU_AIR
                };
                if in_body {
                    body_bits[i] = 1;
                }
                let noise = if spec.noise_hu > 0.0 {
                    spec.noise_hu * (2.0 * rng::counter_f64(spec.seed, i as u64) - 1.0)
                } else {
                    0.0
                };
                data[i] = hu + noise;
                i += 1;
            }
        }
    }

    let volume = Volume::new(spec.dims, spec.spacing, spec.origin, data)?;
    let analytic = AnalyticVolumes {
        body_ml: body.volume() / 1000.0,
        right_lung_ml: right_lung.volume() / 1000.0,
        left_lung_ml: left_lung.volume() / 1000.0,
        air_ml: air_analytic_mm3 / 1000.0,
        decoy_ml: if spec.decoy { decoy.volume() / 1000.0 } else { 0.0 },
    };
    Ok(Phantom {
        volume,
        body: Mask::new(spec.dims, spec.spacing, spec.origin, body_bits)?,
        lungs: Mask::new(spec.dims, spec.spacing, spec.origin, lung_bits)?,
        right_lung: Mask::new(spec.dims, spec.spacing, spec.origin, right_bits)?,
        left_lung: Mask::new(spec.dims, spec.spacing, spec.origin, left_bits)?,
        air: Mask::new(spec.dims, spec.spacing, spec.origin, air_bits)?,
        analytic,
        lung_semiaxes: (lung_semi[0], lung_semi[1], lung_semi[2]),
    })
}

/// Thomsen approximation of an ellipsoid's surface area (error < 1.1%).
pub fn ellipsoid_surface_approx(a: f64, b: f64, c: f64) -> f64 {
    const P: f64 = 1.6075;
    let term = ((a * b).powf(P) + (a * c).powf(P) + (b * c).powf(P)) / 3.0;
    4.0 * std::f64::consts::PI * term.powf(1.0 / P)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let spec = PhantomSpec {
            cap_ml: 20.0,
            noise_hu: 25.0,
            seed: 9,
            ..PhantomSpec::default()
        };
        let a = generate_phantom(&spec).unwrap();
        let b = generate_phantom(&spec).unwrap();
        assert_eq!(a.volume.data(), b.volume.data());
        assert_eq!(a.air.data(), b.air.data());
    }

    #[test]
    fn no_cap_means_empty_air() {
        let p = generate_phantom(&PhantomSpec::default()).unwrap();
        assert_eq!(p.air.count(), 0);
        assert_eq!(p.analytic.air_ml, 0.0);
    }

    #[test]
    fn cap_volume_matches_analytic() {
        // Voxelization error scales with the crescent's surface/volume ratio,
        // so small caps get a looser bound.
        for (target, tol) in [(5.0, 0.25), (15.0, 0.1), (30.0, 0.1)] {
            let spec = PhantomSpec {
                cap_ml: target,
                ..PhantomSpec::default()
            };
            let p = generate_phantom(&spec).unwrap();
            assert!((p.analytic.air_ml - target).abs() < 1e-6, "bisection off: {}", p.analytic.air_ml);
            let voxel = p.air.volume_ml();
            assert!(
                (voxel - target).abs() / target < tol,
                "cap {target} ml voxelized to {voxel} ml"
            );
        }
    }

    #[test]
    fn lung_volume_within_half_voxel_shell() {
        let spec = PhantomSpec::default();
        let p = generate_phantom(&spec).unwrap();
        let (a, b, c) = p.lung_semiaxes;
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * a * b * c;
        let voxelized = p.right_lung.count() as f64 * 1.6 * 1.6 * 1.6;
        let shell = 0.5 * ellipsoid_surface_approx(a, b, c) * 1.6;
        assert!(
            (voxelized - analytic).abs() <= shell,
            "analytic {analytic} voxelized {voxelized} tolerance {shell}"
        );
    }

    #[test]
    fn structures_disjoint_and_inside_body() {
        let spec = PhantomSpec {
            cap_ml: 30.0,
            decoy: true,
            ..PhantomSpec::default()
        };
        let p = generate_phantom(&spec).unwrap();
        assert_eq!(p.air.intersect(&p.lungs).unwrap().count(), 0);
        assert_eq!(p.right_lung.intersect(&p.left_lung).unwrap().count(), 0);
        assert_eq!(p.right_lung.union(&p.left_lung).unwrap(), p.lungs);
        // lungs and air inside the body ellipsoid
        assert_eq!(p.lungs.intersect(&p.body).unwrap(), p.lungs);
        assert_eq!(p.air.intersect(&p.body).unwrap(), p.air);
    }

    #[test]
    fn decoy_is_over_ten_ml() {
        let spec = PhantomSpec {
            decoy: true,
            ..PhantomSpec::default()
        };
        let p = generate_phantom(&spec).unwrap();
        assert!(p.analytic.decoy_ml > 10.0, "decoy {} ml", p.analytic.decoy_ml);
        // and it is present in the volume
        assert!(p.volume.data().iter().any(|&v| v == HU_DECOY));
    }

    #[test]
    fn oversized_cap_rejected() {
        let spec = PhantomSpec {
            cap_ml: 1000.0,
            ..PhantomSpec::default()
        };
        assert!(generate_phantom(&spec).is_err());
    }
}
