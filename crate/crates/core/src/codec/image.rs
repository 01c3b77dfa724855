//! 8-bit images, binary PNM I/O and a procedural test corpus.

use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};

/// Row-major, channel-interleaved 8-bit image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != height * width * channels || channels == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} bytes for a {height}x{width}x{channels} image",
                pixels.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            pixels,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: u8) -> Self {
        Self {
            height,
            width,
            channels,
            pixels: vec![value; height * width * channels],
        }
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> u8 {
        self.pixels[self.index(y, x, c)]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    /// Clamps to `[0, 255]` and rounds.
    pub fn from_f64(height: usize, width: usize, channels: usize, values: &[f64]) -> Result<Self> {
        let pixels = values.iter().map(|v| v.clamp(0.0, 255.0).round() as u8).collect();
        Self::new(height, width, channels, pixels)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64).collect()
    }
}

fn next_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut token = String::new();
    loop {
        let mut byte = [0u8; 1];
        if r.read(&mut byte)? == 0 {
            break;
        }
        let c = byte[0];
        if c == b'#' && token.is_empty() {
            let mut comment = Vec::new();
            r.read_until(b'\n', &mut comment)?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            break;
        }
        token.push(c as char);
    }
    if token.is_empty() {
        return Err(Error::Format("truncated PNM header".into()));
    }
    Ok(token)
}

fn header_number<R: BufRead>(r: &mut R) -> Result<usize> {
    let tok = next_token(r)?;
    tok.parse()
        .map_err(|_| Error::Format(format!("bad PNM header field {tok:?}")))
}

/// Reads a binary PGM (P5) or PPM (P6) with maxval 255.
pub fn read_pnm<R: BufRead>(mut r: R) -> Result<Image> {
    let channels = match next_token(&mut r)?.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(Error::Format(format!("unsupported PNM type {other}"))),
    };
    let width = header_number(&mut r)?;
    let height = header_number(&mut r)?;
    let maxval = header_number(&mut r)?;
    if maxval != 255 {
        return Err(Error::Format(format!("only maxval 255 is supported, got {maxval}")));
    }
    let mut pixels = vec![0u8; width * height * channels];
    r.read_exact(&mut pixels)?;
    Image::new(height, width, channels, pixels)
}

/// Writes P5 for one channel and P6 for three.
pub fn write_pnm<W: Write>(mut w: W, img: &Image) -> Result<()> {
    let magic = match img.channels {
        1 => "P5",
        3 => "P6",
        c => return Err(Error::InvalidArgument(format!("cannot write {c}-channel PNM"))),
    };
    write!(w, "{magic}\n{} {}\n255\n", img.width, img.height)?;
    w.write_all(&img.pixels)?;
    Ok(())
}

/// Procedural RGB scene: a smooth two-axis gradient, a few filled discs and
/// rectangles, and mild per-pixel texture.
pub fn synthetic_image<R: Rng + ?Sized>(height: usize, width: usize, rng: &mut R) -> Image {
    let base: [f64; 3] = [rng.random_range(40.0..200.0), rng.random_range(40.0..200.0), rng.random_range(40.0..200.0)];
    let gy: [f64; 3] = [rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0)];
    let gx: [f64; 3] = [rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0)];
    let mut v: Vec<f64> = Vec::with_capacity(height * width * 3);
    for y in 0..height {
        for x in 0..width {
            let (fy, fx) = (y as f64 / height as f64 - 0.5, x as f64 / width as f64 - 0.5);
            for c in 0..3 {
                v.push(base[c] + gy[c] * fy + gx[c] * fx);
            }
        }
    }
    let shapes = rng.random_range(2..6);
    for _ in 0..shapes {
        let color: [f64; 3] = [rng.random_range(0.0..255.0), rng.random_range(0.0..255.0), rng.random_range(0.0..255.0)];
        let cy = rng.random_range(0.0..height as f64);
        let cx = rng.random_range(0.0..width as f64);
        let size = rng.random_range(0.08..0.3) * height.min(width) as f64;
        let disc = rng.random_bool(0.5);
        for y in 0..height {
            for x in 0..width {
                let (dy, dx) = (y as f64 - cy, x as f64 - cx);
                let inside = if disc {
                    dy * dy + dx * dx <= size * size
                } else {
                    dy.abs() <= size && dx.abs() <= 0.6 * size
                };
                if inside {
                    let i = (y * width + x) * 3;
                    v[i..i + 3].copy_from_slice(&color);
                }
            }
        }
    }
    for p in v.iter_mut() {
        *p += rng.random_range(-6.0..6.0);
    }
    Image::from_f64(height, width, 3, &v).expect("shape is consistent")
}
