//! Netpbm (PPM/PGM) and PNG image files.
//!
//! 8-bit output quantizes with `floor(255 v + 0.5)` after clamping to [0, 1].
//! Single-channel images are written as 16-bit PGM.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Image;

pub fn quantize8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

pub fn quantize16(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0 + 0.5).floor() as u16
}

/// Binary PPM (P6) for 3 channels, 16-bit binary PGM (P5) for 1 channel.
pub fn encode_netpbm(img: &Image) -> Result<Vec<u8>> {
    match img.channels {
        3 => {
            let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
            out.extend(img.data.iter().map(|&v| quantize8(v)));
            Ok(out)
        }
        1 => {
            let mut out = format!("P5\n{} {}\n65535\n", img.width, img.height).into_bytes();
            for &v in &img.data {
                out.extend(quantize16(v).to_be_bytes());
            }
            Ok(out)
        }
        c => Err(Error::Image(format!("cannot write a {c}-channel image as PPM/PGM"))),
    }
}

struct Header<'a> {
    rest: &'a [u8],
}

impl<'a> Header<'a> {
    fn token(&mut self) -> Result<&'a [u8]> {
        loop {
            while let Some((&c, tail)) = self.rest.split_first() {
                if !c.is_ascii_whitespace() {
                    break;
                }
                self.rest = tail;
            }
            if self.rest.first() == Some(&b'#') {
                let end = self.rest.iter().position(|&c| c == b'\n').unwrap_or(self.rest.len());
                self.rest = &self.rest[end..];
                continue;
            }
            break;
        }
        let end = self.rest.iter().position(|c| c.is_ascii_whitespace()).unwrap_or(self.rest.len());
        if end == 0 {
            return Err(Error::Image("truncated header".into()));
        }
        let (tok, tail) = self.rest.split_at(end);
        self.rest = tail;
        Ok(tok)
    }

    fn number(&mut self) -> Result<usize> {
        let t = self.token()?;
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Image(format!("bad header field `{}`", String::from_utf8_lossy(t))))
    }
}

/// Decodes binary P5/P6 with 8- or 16-bit samples into [0, 1] values.
pub fn decode_netpbm(bytes: &[u8]) -> Result<Image> {
    let mut h = Header { rest: bytes };
    let channels = match h.token()? {
        b"P6" => 3,
        b"P5" => 1,
        m => return Err(Error::Image(format!("unsupported magic `{}`", String::from_utf8_lossy(m)))),
    };
    let (w, ht, max) = (h.number()?, h.number()?, h.number()?);
    if !(1..=65535).contains(&max) {
        return Err(Error::Image(format!("bad maxval {max}")));
    }
    // exactly one whitespace byte separates the header from the samples
    let body = h.rest.get(1..).ok_or_else(|| Error::Image("missing pixel data".into()))?;
    let n = w * ht * channels;
    let wide = max > 255;
    let need = if wide { 2 * n } else { n };
    if body.len() < need {
        return Err(Error::Image(format!("expected {need} bytes of pixel data, found {}", body.len())));
    }
    let data = if wide {
        body[..need].chunks(2).map(|b| f64::from(u16::from_be_bytes([b[0], b[1]])) / max as f64).collect()
    } else {
        body[..n].iter().map(|&b| f64::from(b) / max as f64).collect()
    };
    Image::from_data(w, ht, channels, data)
}

pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        let bytes: Vec<u8> = match img.channels {
            3 => {
                enc.set_color(png::ColorType::Rgb);
                enc.set_depth(png::BitDepth::Eight);
                img.data.iter().map(|&v| quantize8(v)).collect()
            }
            1 => {
                enc.set_color(png::ColorType::Grayscale);
                enc.set_depth(png::BitDepth::Sixteen);
                img.data.iter().flat_map(|&v| quantize16(v).to_be_bytes()).collect()
            }
            c => return Err(Error::Image(format!("cannot write a {c}-channel image as PNG"))),
        };
        let mut w = enc.write_header().map_err(|e| Error::Image(e.to_string()))?;
        w.write_image_data(&bytes).map_err(|e| Error::Image(e.to_string()))?;
    }
    Ok(out)
}

pub fn decode_png(bytes: &[u8]) -> Result<Image> {
    let mut dec = png::Decoder::new(std::io::Cursor::new(bytes));
    dec.set_transformations(png::Transformations::EXPAND);
    let mut reader = dec.read_info().map_err(|e| Error::Image(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or_else(|| Error::Image("image too large".into()))?];
    let info = reader.next_frame(&mut buf).map_err(|e| Error::Image(e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let (src_ch, keep) = match info.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => return Err(Error::Image("palette PNG was not expanded".into())),
    };
    let samples: Vec<f64> = match info.bit_depth {
        png::BitDepth::Sixteen => buf[..info.buffer_size()]
            .chunks(2)
            .map(|b| f64::from(u16::from_be_bytes([b[0], b[1]])) / 65535.0)
            .collect(),
        _ => buf[..info.buffer_size()].iter().map(|&b| f64::from(b) / 255.0).collect(),
    };
    let data = samples.chunks(src_ch).flat_map(|px| px[..keep].to_vec()).collect();
    Image::from_data(w, h, keep, data)
}

fn is_png(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Writes PNG for `.png` paths and PPM/PGM otherwise.
pub fn save_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    let bytes = if is_png(path) { encode_png(img)? } else { encode_netpbm(img)? };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads PNG by extension, otherwise binary PPM/PGM.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if is_png(path) {
        decode_png(&bytes)
    } else {
        decode_netpbm(&bytes)
    }
}
