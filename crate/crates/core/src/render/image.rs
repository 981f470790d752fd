use std::path::Path;

use crate::error::{Error, Result};

/// Linear RGB buffer, row-major, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f64; 3]>,
}

impl FrameImage {
    pub fn new(width: usize, height: usize, fill: [f64; 3]) -> Self {
        Self {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    /// 8-bit channels, `floor(clamp(v) · 255 + 0.5)`.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|p| p.map(|v| (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8))
            .collect()
    }
}

pub fn encode_png(image: &FrameImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, image.width as u32, image.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_source_srgb(png::SrgbRenderingIntent::Perceptual);
        let mut w = enc
            .write_header()
            .map_err(|e| Error::Invalid(format!("png encoding failed: {e}")))?;
        w.write_image_data(&image.to_rgb8())
            .map_err(|e| Error::Invalid(format!("png encoding failed: {e}")))?;
    }
    Ok(out)
}

pub fn write_png(image: &FrameImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_png(image)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Decodes an 8-bit RGB PNG back into `[0, 1]` values.
pub fn decode_png(bytes: &[u8]) -> Result<FrameImage> {
    let bad = |e: png::DecodingError| Error::parse("png", "stream", e.to_string());
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(bad)?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf).map_err(bad)?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::parse("png", "header", "expected 8-bit RGB"));
    }
    let pixels = buf[..info.buffer_size()]
        .chunks(3)
        .map(|c| [c[0] as f64 / 255.0, c[1] as f64 / 255.0, c[2] as f64 / 255.0])
        .collect();
    Ok(FrameImage {
        width: info.width as usize,
        height: info.height as usize,
        pixels,
    })
}
