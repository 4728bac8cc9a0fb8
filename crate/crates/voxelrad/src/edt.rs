//! Exact squared Euclidean distance transform on anisotropic 3D grids.
//!
//! Separable lower-envelope-of-parabolas algorithm (Felzenszwalb &
//! Huttenlocher), one pass per axis with the axis' physical spacing folded
//! into the parabola coordinates. For every voxel the result is the exact
//! squared distance (in the supplied units) from the voxel center to the
//! nearest site-voxel center. Deterministic and single-allocation per axis.

const INF: f64 = f64::MAX / 4.0;

/// Squared-distance value assigned when no site exists anywhere.
pub const NO_SITE: f64 = INF;

/// 1D squared distance transform of sampled function `f` at positions
/// `i * step`, writing the result into `out`. `v` and `z` are scratch.
fn dt_1d(f: &[f64], step: f64, out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 1 {
        out[0] = f[0];
        return;
    }
    let x = |i: usize| i as f64 * step;
    let mut k = 0usize;
    v[0] = 0;
    z[0] = -INF;
    z[1] = INF;
    for q in 1..n {
        if f[q] >= INF {
            // parabola at infinity never wins
            continue;
        }
        loop {
            let p = v[k];
            let s = if f[p] >= INF {
                -INF
            } else {
                ((f[q] + x(q) * x(q)) - (f[p] + x(p) * x(p))) / (2.0 * x(q) - 2.0 * x(p))
            };
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[0] = -INF;
                    z[1] = INF;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = INF;
                break;
            }
        }
    }
    let mut k = 0usize;
    for q in 0..n {
        while z[k + 1] < x(q) {
            k += 1;
        }
        let p = v[k];
        let d = x(q) - x(p);
        out[q] = if f[p] >= INF { INF } else { d * d + f[p] };
    }
}

/// Exact squared distance from every voxel to the nearest `site` voxel, in
/// the units implied by `spacing` (pass unit spacing for voxel-index
/// distances). Voxels with no site anywhere get [`NO_SITE`].
///
/// `sites` has one entry per voxel in z-slowest x-fastest order; nonzero
/// marks a site.
pub fn squared_edt(sites: &[u8], dims: (usize, usize, usize), spacing: (f64, f64, f64)) -> Vec<f64> {
    let (nz, ny, nx) = dims;
    assert_eq!(sites.len(), nz * ny * nx);
    let mut d: Vec<f64> = sites.iter().map(|&s| if s != 0 { 0.0 } else { INF }).collect();

    let max_n = nx.max(ny).max(nz);
    let mut f = vec![0.0f64; max_n];
    let mut out = vec![0.0f64; max_n];
    let mut v = vec![0usize; max_n];
    let mut z = vec![0.0f64; max_n + 1];

    // x axis
    for zi in 0..nz {
        for yi in 0..ny {
            let base = (zi * ny + yi) * nx;
            f[..nx].copy_from_slice(&d[base..base + nx]);
            dt_1d(&f[..nx], spacing.0, &mut out[..nx], &mut v, &mut z);
            d[base..base + nx].copy_from_slice(&out[..nx]);
        }
    }
    // y axis
    for zi in 0..nz {
        for xi in 0..nx {
            for yi in 0..ny {
                f[yi] = d[(zi * ny + yi) * nx + xi];
            }
            dt_1d(&f[..ny], spacing.1, &mut out[..ny], &mut v, &mut z);
            for yi in 0..ny {
                d[(zi * ny + yi) * nx + xi] = out[yi];
            }
        }
    }
    // z axis
    for yi in 0..ny {
        for xi in 0..nx {
            for zi in 0..nz {
                f[zi] = d[(zi * ny + yi) * nx + xi];
            }
            dt_1d(&f[..nz], spacing.2, &mut out[..nz], &mut v, &mut z);
            for zi in 0..nz {
                d[(zi * ny + yi) * nx + xi] = out[zi];
            }
        }
    }
    d
}
