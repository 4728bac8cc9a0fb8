use voxelrad::phantom::{generate_phantom, PhantomSpec};
use voxelrad::segment::*;
use voxelrad::morphology::*;

fn main() {
    let spec = PhantomSpec { dims: (64,64,64), spacing: (1.6,1.6,1.6), cap_ml: 30.0, ..PhantomSpec::default() };
    let p = generate_phantom(&spec).unwrap();
    let params = SegParams::default();
    let coarse_raw = threshold(&p.volume, params.body_threshold_hu, ThresholdSense::AboveOrEqual);
    let coarse = morph_close_3d(&coarse_raw, params.body_close_radius);
    println!("coarse raw {} closed {}", coarse_raw.count(), coarse.count());
    let body = body_mask(&p.volume, &params).unwrap();
    // how many GT-lung voxels are inside coarse (i.e. swallowed by closing)?
    println!("lung voxels inside closed coarse: {}", p.lungs.intersect(&coarse).unwrap().count());
    println!("cap voxels inside closed coarse: {}", p.air.intersect(&coarse).unwrap().count());
    println!("lung voxels inside body: {} / {}", p.lungs.intersect(&body).unwrap().count(), p.lungs.count());
    println!("cap voxels inside body: {} / {}", p.air.intersect(&body).unwrap().count(), p.air.count());
    let low = threshold(&p.volume, params.body_threshold_hu, ThresholdSense::Below);
    let inside = low.intersect(&body).unwrap();
    let (_l, counts) = label_components(&inside, params.label_connectivity);
    let mut sizes: Vec<usize> = counts[1..].to_vec();
    sizes.sort_unstable_by(|a,b| b.cmp(a));
    println!("lowatt∩body component sizes: {:?}", &sizes[..sizes.len().min(6)]);
    // mid z slice of body along y=32: x profile
    let (nz, ny, _nx) = body.dims(); let _ = (nz, ny);
    let row: String = (0..64).map(|x| if body.get(32, 32, x) != 0 { '#' } else { '.' }).collect();
    println!("body z=32 y=32: {row}");
    let row2: String = (0..64).map(|x| if coarse.get(32, 32, x) != 0 { '#' } else { '.' }).collect();
    println!("coarse z=32 y=32: {row2}");
    let row3: String = (0..64).map(|x| if p.air.get(32, 32, x) != 0 { 'A' } else if p.lungs.get(32,32,x) != 0 { 'L' } else { '.' }).collect();
    println!("GT     z=32 y=32: {row3}");
}
