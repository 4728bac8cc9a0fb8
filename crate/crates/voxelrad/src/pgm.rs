//! 16-bit binary PGM (P5) export for detector images.
//!
//! Values are linearly mapped from [0, 1] to [0, 65535] (clamped) and written
//! big-endian per the PGM specification.

use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::ImageGrid2D;

pub fn save_pgm16(img: &ImageGrid2D, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(32 + img.data().len() * 2);
    out.extend_from_slice(format!("P5\n{} {}\n65535\n", img.cols(), img.rows()).as_bytes());
    for &v in img.data() {
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}
