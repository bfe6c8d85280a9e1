//! Hyperspectral cube model and the little-endian `HSCUBE1` file format.
//!
//! Samples are stored band-interleaved-by-pixel: the `bands` values of pixel
//! `(x, y)` start at `(y * width + x) * bands`. Integer-coded cubes keep their
//! raw samples in memory and expose reflectance in `[0, 1]` by dividing by the
//! dtype maximum, so a full-size 8-bit cube costs one byte per sample.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::RgbImage;
use crate::spectral::Spectrum;

pub const MAGIC: &[u8; 8] = b"HSCUBE1\n";

/// Target wavelengths (nm) for the blue, green and red false-RGB channels.
pub const FALSE_RGB_TARGETS_NM: [f32; 3] = [470.0, 540.0, 640.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleType {
    U8,
    U16,
    F32,
}

impl SampleType {
    pub fn code(self) -> u8 {
        match self {
            SampleType::U8 => 0,
            SampleType::U16 => 1,
            SampleType::F32 => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(SampleType::U8),
            1 => Some(SampleType::U16),
            2 => Some(SampleType::F32),
            _ => None,
        }
    }

    fn bytes(self) -> usize {
        match self {
            SampleType::U8 => 1,
            SampleType::U16 => 2,
            SampleType::F32 => 4,
        }
    }

    /// Largest representable integer code; reflectance 1.0 maps to it.
    pub fn max_code(self) -> f32 {
        match self {
            SampleType::U8 => u8::MAX as f32,
            SampleType::U16 => u16::MAX as f32,
            SampleType::F32 => 1.0,
        }
    }
}

impl std::str::FromStr for SampleType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u8" => Ok(SampleType::U8),
            "u16" => Ok(SampleType::U16),
            "f32" => Ok(SampleType::F32),
            other => Err(Error::InvalidParameter(format!(
                "unknown dtype {other:?} (expected u8, u16 or f32)"
            ))),
        }
    }
}

/// Camera ground projection in the local world frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians, counter-clockwise from the world +x axis.
    pub yaw: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraMeta {
    /// Height above ground in meters.
    pub h_m: f64,
    /// Full field-of-view angle in degrees.
    pub fov_deg: f64,
    #[serde(default)]
    pub pose: Pose,
}

impl CameraMeta {
    pub fn new(h_m: f64, fov_deg: f64, pose: Pose) -> Result<Self> {
        let camera = CameraMeta { h_m, fov_deg, pose };
        camera.validate()?;
        Ok(camera)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_m.is_finite() && self.h_m > 0.0) {
            return Err(Error::InvalidCamera(format!(
                "height must be > 0 m, got {}",
                self.h_m
            )));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::InvalidCamera(format!(
                "field of view must be in (0, 180) degrees, got {}",
                self.fov_deg
            )));
        }
        let Pose { x, y, yaw } = self.pose;
        if !(x.is_finite() && y.is_finite() && yaw.is_finite()) {
            return Err(Error::InvalidCamera("pose must be finite".into()));
        }
        Ok(())
    }
}

impl Default for CameraMeta {
    fn default() -> Self {
        CameraMeta {
            h_m: 10.0,
            fov_deg: 35.0,
            pose: Pose::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Samples {
    U8(Vec<u8>),
    U16(Vec<u16>),
    F32(Vec<f32>),
}

impl Samples {
    pub fn len(&self) -> usize {
        match self {
            Samples::U8(v) => v.len(),
            Samples::U16(v) => v.len(),
            Samples::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_type(&self) -> SampleType {
        match self {
            Samples::U8(_) => SampleType::U8,
            Samples::U16(_) => SampleType::U16,
            Samples::F32(_) => SampleType::F32,
        }
    }

    #[inline]
    fn get(&self, i: usize) -> f32 {
        match self {
            Samples::U8(v) => v[i] as f32 / 255.0,
            Samples::U16(v) => v[i] as f32 / 65535.0,
            Samples::F32(v) => v[i],
        }
    }
}

/// `code / 255` for every 8-bit code.
fn u8_reflectance() -> &'static [f64; 256] {
    static TABLE: OnceLock<[f64; 256]> = OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(|i| i as f64 / 255.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperCube {
    width: usize,
    height: usize,
    bands: usize,
    wavelengths: Vec<f32>,
    samples: Samples,
    camera: CameraMeta,
}

impl HyperCube {
    pub fn new(
        width: usize,
        height: usize,
        wavelengths: Vec<f32>,
        samples: Samples,
        camera: CameraMeta,
    ) -> Result<Self> {
        let bands = wavelengths.len();
        if width == 0 || height == 0 || bands == 0 {
            return Err(Error::InvalidCube(format!(
                "dimensions must be non-zero, got {width}x{height}x{bands}"
            )));
        }
        check_wavelengths(&wavelengths)?;
        let expected = width * height * bands;
        if samples.len() != expected {
            return Err(Error::InvalidCube(format!(
                "expected {expected} samples, got {}",
                samples.len()
            )));
        }
        if let Samples::F32(values) = &samples {
            if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidCube(format!(
                    "reflectance {bad} outside [0, 1]"
                )));
            }
        }
        camera.validate()?;
        Ok(HyperCube {
            width,
            height,
            bands,
            wavelengths,
            samples,
            camera,
        })
    }

    /// Builds a cube whose dimensions are checked against an explicit band count.
    pub fn with_bands(
        width: usize,
        height: usize,
        bands: usize,
        wavelengths: Vec<f32>,
        samples: Samples,
        camera: CameraMeta,
    ) -> Result<Self> {
        if wavelengths.len() != bands {
            return Err(Error::InvalidCube(format!(
                "{bands} bands but {} wavelengths",
                wavelengths.len()
            )));
        }
        Self::new(width, height, wavelengths, samples, camera)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn wavelengths(&self) -> &[f32] {
        &self.wavelengths
    }

    pub fn camera(&self) -> &CameraMeta {
        &self.camera
    }

    pub fn set_camera(&mut self, camera: CameraMeta) -> Result<()> {
        camera.validate()?;
        self.camera = camera;
        Ok(())
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn sample_type(&self) -> SampleType {
        self.samples.sample_type()
    }

    /// Reflectance of sample `index` in the flat band-interleaved layout.
    #[inline]
    pub fn value(&self, index: usize) -> f32 {
        self.samples.get(index)
    }

    /// Writes the reflectance of pixel `pixel` (row-major index) into `out`.
    #[inline]
    pub fn pixel_into(&self, pixel: usize, out: &mut [f64]) {
        let start = pixel * self.bands;
        let end = start + self.bands;
        match &self.samples {
            Samples::U8(v) => {
                let table = u8_reflectance();
                for (o, &s) in out.iter_mut().zip(&v[start..end]) {
                    *o = table[s as usize];
                }
            }
            Samples::U16(v) => {
                for (o, &s) in out.iter_mut().zip(&v[start..end]) {
                    *o = s as f64 / 65535.0;
                }
            }
            Samples::F32(v) => {
                for (o, &s) in out.iter_mut().zip(&v[start..end]) {
                    *o = s as f64;
                }
            }
        }
    }

    pub fn pixel_spectrum(&self, x: usize, y: usize) -> Result<Spectrum> {
        if x >= self.width || y >= self.height {
            return Err(Error::OutOfBounds {
                x: x as i64,
                y: y as i64,
                width: self.width,
                height: self.height,
            });
        }
        let mut values = vec![0.0; self.bands];
        self.pixel_into(y * self.width + x, &mut values);
        Ok(Spectrum::new_unchecked(
            self.wavelengths.iter().map(|&w| w as f64).collect(),
            values,
        ))
    }

    /// Index of the band whose wavelength is nearest `target_nm`; ties go to the lower band.
    pub fn nearest_band(&self, target_nm: f32) -> usize {
        let mut best = 0;
        let mut best_dist = f32::INFINITY;
        for (i, &w) in self.wavelengths.iter().enumerate() {
            let d = (w - target_nm).abs();
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        best
    }

    /// False-colour rendering from the bands nearest 640/540/470 nm, each
    /// channel min-max stretched independently. A constant channel renders as 0.
    pub fn false_rgb(&self) -> Result<RgbImage> {
        if self.bands < 3 {
            return Err(Error::TooFewBands(self.bands));
        }
        let [blue, green, red] = FALSE_RGB_TARGETS_NM.map(|t| self.nearest_band(t));
        let n = self.pixel_count();
        let mut data = vec![0u8; n * 3];
        for (channel, band) in [red, green, blue].into_iter().enumerate() {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in 0..n {
                let v = self.value(p * self.bands + band) as f64;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi <= lo {
                continue;
            }
            let span = hi - lo;
            for p in 0..n {
                let v = self.value(p * self.bands + band) as f64;
                data[p * 3 + channel] = ((v - lo) / span * 255.0).round() as u8;
            }
        }
        Ok(RgbImage::new(self.width, self.height, data))
    }
}

fn check_wavelengths(wavelengths: &[f32]) -> Result<()> {
    if let Some(bad) = wavelengths.iter().position(|w| !w.is_finite()) {
        return Err(Error::CorruptHeader(format!(
            "wavelength {bad} is not finite"
        )));
    }
    if let Some(i) = wavelengths.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonIncreasingWavelengths { band: i + 1 });
    }
    Ok(())
}

fn header_len(bands: usize) -> usize {
    MAGIC.len() + 3 * 4 + 1 + 4 * bands + 4 + 4 + 3 * 8
}

/// Round-half-up quantization of a reflectance value to an integer code.
#[inline]
pub fn quantize(value: f32, max_code: f32) -> f32 {
    (value as f64 * max_code as f64 + 0.5)
        .floor()
        .clamp(0.0, max_code as f64) as f32
}

pub fn encode_cube(cube: &HyperCube, dtype: SampleType) -> Vec<u8> {
    let n = cube.samples.len();
    let mut buf = Vec::with_capacity(header_len(cube.bands) + n * dtype.bytes());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(cube.width as u32).to_le_bytes());
    buf.extend_from_slice(&(cube.height as u32).to_le_bytes());
    buf.extend_from_slice(&(cube.bands as u32).to_le_bytes());
    buf.push(dtype.code());
    for w in &cube.wavelengths {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    buf.extend_from_slice(&(cube.camera.h_m as f32).to_le_bytes());
    buf.extend_from_slice(&(cube.camera.fov_deg as f32).to_le_bytes());
    buf.extend_from_slice(&cube.camera.pose.x.to_le_bytes());
    buf.extend_from_slice(&cube.camera.pose.y.to_le_bytes());
    buf.extend_from_slice(&cube.camera.pose.yaw.to_le_bytes());

    match (&cube.samples, dtype) {
        (Samples::U8(v), SampleType::U8) => buf.extend_from_slice(v),
        (Samples::U16(v), SampleType::U16) => v
            .iter()
            .for_each(|s| buf.extend_from_slice(&s.to_le_bytes())),
        (_, SampleType::U8) => (0..n).for_each(|i| buf.push(quantize(cube.value(i), 255.0) as u8)),
        (_, SampleType::U16) => (0..n).for_each(|i| {
            buf.extend_from_slice(&(quantize(cube.value(i), 65535.0) as u16).to_le_bytes())
        }),
        (_, SampleType::F32) => {
            (0..n).for_each(|i| buf.extend_from_slice(&cube.value(i).to_le_bytes()))
        }
    }
    buf
}

pub fn decode_cube(bytes: &[u8]) -> Result<HyperCube> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut reader = HeaderReader {
        bytes,
        pos: MAGIC.len(),
    };
    let width = reader.u32()? as usize;
    let height = reader.u32()? as usize;
    let bands = reader.u32()? as usize;
    let code = reader.u8()?;
    let dtype = SampleType::from_code(code)
        .ok_or_else(|| Error::CorruptHeader(format!("unknown dtype code {code}")))?;
    if width == 0 || height == 0 || bands == 0 {
        return Err(Error::CorruptHeader(format!(
            "zero dimension {width}x{height}x{bands}"
        )));
    }
    let wavelengths = (0..bands)
        .map(|_| reader.f32())
        .collect::<Result<Vec<_>>>()?;
    let h_m = reader.f32()? as f64;
    let fov_deg = reader.f32()? as f64;
    let pose = Pose {
        x: reader.f64()?,
        y: reader.f64()?,
        yaw: reader.f64()?,
    };
    check_wavelengths(&wavelengths)?;
    let camera = CameraMeta { h_m, fov_deg, pose };
    camera
        .validate()
        .map_err(|e| Error::CorruptHeader(e.to_string()))?;

    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(bands))
        .ok_or_else(|| Error::CorruptHeader("dimensions overflow".into()))?;
    let expected = count * dtype.bytes();
    let payload = &bytes[reader.pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::InvalidCube(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let samples = match dtype {
        SampleType::U8 => Samples::U8(payload.to_vec()),
        SampleType::U16 => Samples::U16(
            payload
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes([c[0], c[1]]))
                .collect(),
        ),
        SampleType::F32 => Samples::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        ),
    };
    HyperCube::new(width, height, wavelengths, samples, camera)
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::CorruptHeader("header ends early".into()))?;
        self.pos = end;
        Ok(slice.try_into().expect("slice length"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        self.take().map(u32::from_le_bytes)
    }

    fn f32(&mut self) -> Result<f32> {
        self.take().map(f32::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.take().map(f64::from_le_bytes)
    }
}

pub fn save_cube(cube: &HyperCube, path: impl AsRef<Path>, dtype: SampleType) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_cube(cube, dtype);
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn load_cube(path: impl AsRef<Path>) -> Result<HyperCube> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_cube(&bytes)
}
