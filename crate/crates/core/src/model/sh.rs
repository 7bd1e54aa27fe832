//! Real spherical-harmonics color evaluation (orders 0 to 3).

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
pub const SH_C1: f64 = 0.488_602_511_902_919_9;
pub const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
pub const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Number of stored reals for SH order `k`: three channels of `(k+1)^2` bands.
pub fn sh_coeff_count(k: usize) -> usize {
    3 * (k + 1) * (k + 1)
}

/// Basis values in coefficient order for a unit direction.
pub fn sh_basis(dir: &Vector3<f64>, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((k + 1) * (k + 1));
    out.push(SH_C0);
    if k == 0 {
        return out;
    }
    let (x, y, z) = (dir.x, dir.y, dir.z);
    out.extend([-SH_C1 * y, SH_C1 * z, -SH_C1 * x]);
    if k == 1 {
        return out;
    }
    let (xx, yy, zz) = (x * x, y * y, z * z);
    let (xy, yz, xz) = (x * y, y * z, x * z);
    out.extend([
        SH_C2[0] * xy,
        SH_C2[1] * yz,
        SH_C2[2] * (2.0 * zz - xx - yy),
        SH_C2[3] * xz,
        SH_C2[4] * (xx - yy),
    ]);
    if k == 2 {
        return out;
    }
    out.extend([
        SH_C3[0] * y * (3.0 * xx - yy),
        SH_C3[1] * xy * z,
        SH_C3[2] * y * (4.0 * zz - xx - yy),
        SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
        SH_C3[4] * x * (4.0 * zz - xx - yy),
        SH_C3[5] * z * (xx - yy),
        SH_C3[6] * x * (xx - 3.0 * yy),
    ]);
    out
}

/// Unclamped color (DC offset applied); useful for gradients.
pub fn sh_to_color_raw(sh: &[f64], dir: &Vector3<f64>, k: usize) -> Result<[f64; 3]> {
    if k > 3 {
        return Err(Error::ShOrder(k));
    }
    let expected = sh_coeff_count(k);
    if sh.len() != expected {
        return Err(Error::ShCoefficientCount {
            order: k,
            expected,
            got: sh.len(),
        });
    }
    let basis = sh_basis(dir, k);
    let mut rgb = [0.5; 3];
    for (j, b) in basis.iter().enumerate() {
        for (ch, v) in rgb.iter_mut().enumerate() {
            *v += b * sh[3 * j + ch];
        }
    }
    Ok(rgb)
}

/// View-dependent RGB in [0, 1].
pub fn sh_to_color(sh: &[f64], dir: &Vector3<f64>, k: usize) -> Result<[f64; 3]> {
    let rgb = sh_to_color_raw(sh, dir, k)?;
    Ok(rgb.map(|v| v.clamp(0.0, 1.0)))
}

/// DC coefficients that reproduce a given RGB color in [0, 1].
pub fn dc_from_rgb(rgb: [f64; 3]) -> [f64; 3] {
    rgb.map(|c| (c - 0.5) / SH_C0)
}
