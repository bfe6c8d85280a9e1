//! PNG encoding for the raster outputs: RGB renderings, 16-bit label ids and 1-bit masks.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use png::{BitDepth, ColorType};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width * height * 3, "rgb buffer size");
        RgbImage {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        encode(
            self.width,
            self.height,
            ColorType::Rgb,
            BitDepth::Eight,
            &self.data,
        )
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_png()?)
    }
}

fn encode(
    width: usize,
    height: usize,
    color: ColorType,
    depth: BitDepth,
    data: &[u8],
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
        encoder.set_color(color);
        encoder.set_depth(depth);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Image(e.to_string()))?;
        writer
            .write_image_data(data)
            .map_err(|e| Error::Image(e.to_string()))?;
    }
    Ok(out)
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// 16-bit grayscale PNG, big-endian samples as the format requires.
pub fn encode_gray16(width: usize, height: usize, values: &[u16]) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_be_bytes()).collect();
    encode(
        width,
        height,
        ColorType::Grayscale,
        BitDepth::Sixteen,
        &bytes,
    )
}

pub fn decode_gray16(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Image(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Image(e.to_string()))?;
    if info.color_type != ColorType::Grayscale || info.bit_depth != BitDepth::Sixteen {
        return Err(Error::Image(format!(
            "expected 16-bit grayscale, got {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let stride = info.line_size;
    let mut values = Vec::with_capacity(width * height);
    for row in buf.chunks(stride).take(height) {
        values.extend(
            row[..width * 2]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]])),
        );
    }
    Ok((width, height, values))
}

pub fn read_gray16(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u16>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_gray16(&bytes)
}

/// 1-bit grayscale PNG; `true` is white.
pub fn encode_bits(width: usize, height: usize, bits: &[bool]) -> Result<Vec<u8>> {
    let stride = width.div_ceil(8);
    let mut packed = vec![0u8; stride * height];
    for y in 0..height {
        for x in 0..width {
            if bits[y * width + x] {
                packed[y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    encode(width, height, ColorType::Grayscale, BitDepth::One, &packed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray16_round_trip() {
        let values: Vec<u16> = (0..35).map(|i| (i * 1871) as u16).collect();
        let png = encode_gray16(7, 5, &values).unwrap();
        assert_eq!(decode_gray16(&png).unwrap(), (7, 5, values));
    }

    #[test]
    fn bit_png_decodes() {
        let bits: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let png = encode_bits(10, 3, &bits).unwrap();
        let decoder = png::Decoder::new(Cursor::new(png));
        let reader = decoder.read_info().unwrap();
        assert_eq!(reader.info().bit_depth, BitDepth::One);
        assert_eq!(reader.info().width, 10);
    }
}
