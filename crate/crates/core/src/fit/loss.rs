//! Photometric loss (L1 + SSIM), image metrics and the loss gradient with
//! respect to the rendered image.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::math;
use crate::model::Image;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub l1: f64,
    pub ssim: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { l1: 0.8, ssim: 0.2 }
    }
}

/// Normalized 1D Gaussian taps.
pub fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = math::exp(-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

/// Separable Gaussian blur of one plane with zero padding.
fn blur(plane: &[f64], w: usize, h: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let xx = x as isize + k as isize - r;
                if xx >= 0 && (xx as usize) < w {
                    acc += t * plane[y * w + xx as usize];
                }
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let yy = y as isize + k as isize - r;
                if yy >= 0 && (yy as usize) < h {
                    acc += t * tmp[yy as usize * w + x];
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}

fn channel(img: &Image, c: usize) -> Vec<f64> {
    img.data.iter().skip(c).step_by(img.channels).copied().collect()
}

struct SsimChannel {
    /// SSIM map.
    s: Vec<f64>,
    /// Partial derivatives of the map with respect to mu_x, E[x^2] and E[xy].
    d_mu: Vec<f64>,
    d_xx: Vec<f64>,
    d_xy: Vec<f64>,
}

fn ssim_channel(x: &[f64], y: &[f64], w: usize, h: usize, taps: &[f64; SSIM_WINDOW], want_grad: bool) -> SsimChannel {
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let mx = blur(x, w, h, taps);
    let my = blur(y, w, h, taps);
    let mxx = blur(&xx, w, h, taps);
    let myy = blur(&yy, w, h, taps);
    let mxy = blur(&xy, w, h, taps);
    let n = w * h;
    let mut out = SsimChannel {
        s: vec![0.0; n],
        d_mu: if want_grad { vec![0.0; n] } else { Vec::new() },
        d_xx: if want_grad { vec![0.0; n] } else { Vec::new() },
        d_xy: if want_grad { vec![0.0; n] } else { Vec::new() },
    };
    for p in 0..n {
        let (ux, uy) = (mx[p], my[p]);
        let sxx = mxx[p] - ux * ux;
        let syy = myy[p] - uy * uy;
        let sxy = mxy[p] - ux * uy;
        let n1 = 2.0 * ux * uy + C1;
        let n2 = 2.0 * sxy + C2;
        let d1 = ux * ux + uy * uy + C1;
        let d2 = sxx + syy + C2;
        let s = (n1 * n2) / (d1 * d2);
        out.s[p] = s;
        if want_grad {
            out.d_mu[p] = s * ((2.0 * uy / n1 - 2.0 * ux / d1) + (2.0 * ux / d2 - 2.0 * uy / n2));
            out.d_xx[p] = -s / d2;
            out.d_xy[p] = 2.0 * s / n2;
        }
    }
    out
}

/// Mean SSIM over pixels and channels (11x11 Gaussian window, sigma 1.5,
/// zero padding).
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    let taps = gaussian_taps();
    let mut total = 0.0;
    for c in 0..a.channels {
        let m = ssim_channel(&channel(a, c), &channel(b, c), a.width, a.height, &taps, false);
        total += m.s.iter().sum::<f64>();
    }
    Ok(total / a.data.len() as f64)
}

pub fn mae(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.data.len() as f64)
}

/// PSNR in dB for intensities in [0, 1]; infinite for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    let mse = a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.data.len() as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { -10.0 * math::log10(mse) })
}

/// `w_l1 * MAE + w_ssim * (1 - SSIM)`.
pub fn photometric_loss(rendered: &Image, target: &Image, w: &LossWeights) -> Result<f64> {
    let l1 = mae(rendered, target)?;
    let s = if w.ssim != 0.0 { ssim(rendered, target)? } else { 1.0 };
    Ok(w.l1 * l1 + w.ssim * (1.0 - s))
}

/// Loss and its gradient with respect to every rendered value.
pub fn photometric_loss_grad(rendered: &Image, target: &Image, w: &LossWeights) -> Result<(f64, Vec<f64>)> {
    rendered.same_shape(target)?;
    let n = rendered.data.len() as f64;
    let mut grad: Vec<f64> = rendered
        .data
        .iter()
        .zip(&target.data)
        .map(|(x, y)| {
            let d = x - y;
            if d == 0.0 {
                0.0
            } else {
                w.l1 * d.signum() / n
            }
        })
        .collect();
    let l1 = mae(rendered, target)?;
    let mut ssim_total = 0.0;
    if w.ssim != 0.0 {
        let taps = gaussian_taps();
        let (wd, ht, ch) = (rendered.width, rendered.height, rendered.channels);
        for c in 0..ch {
            let x = channel(rendered, c);
            let y = channel(target, c);
            let m = ssim_channel(&x, &y, wd, ht, &taps, true);
            ssim_total += m.s.iter().sum::<f64>();
            // the symmetric window makes the adjoint of the blur a blur
            let g_mu = blur(&m.d_mu, wd, ht, &taps);
            let g_xx = blur(&m.d_xx, wd, ht, &taps);
            let g_xy = blur(&m.d_xy, wd, ht, &taps);
            for p in 0..wd * ht {
                let d = g_mu[p] + 2.0 * x[p] * g_xx[p] + y[p] * g_xy[p];
                grad[p * ch + c] -= w.ssim * d / n;
            }
        }
    }
    let s = if w.ssim != 0.0 { ssim_total / n } else { 1.0 };
    Ok((w.l1 * l1 + w.ssim * (1.0 - s), grad))
}
