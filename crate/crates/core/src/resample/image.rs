use super::ResampleError;

/// Interpretation of the sample channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colorspace {
    Gray,
    /// Linear-agnostic RGB: channels are scored as-is after luma conversion.
    Rgb,
}

/// An equirectangular raster with unit-range samples.
///
/// Row-major, channel-interleaved. Width must be twice the height (full
/// sphere) unless constructed with [`ErpImage::new_any_aspect`].
#[derive(Debug, Clone, PartialEq)]
pub struct ErpImage {
    width: u32,
    height: u32,
    channels: u8,
    colorspace: Colorspace,
    data: Vec<f32>,
}

impl ErpImage {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<f32>) -> Result<Self, ResampleError> {
        if width != 2 * height {
            return Err(ResampleError::AspectRatio { width, height });
        }
        Self::new_any_aspect(width, height, channels, data)
    }

    /// Skips the 2:1 aspect check; every other invariant still holds.
    pub fn new_any_aspect(
        width: u32,
        height: u32,
        channels: u8,
        data: Vec<f32>,
    ) -> Result<Self, ResampleError> {
        if width == 0 || height == 0 {
            return Err(ResampleError::InvalidParameter(
                "image dimensions must be nonzero".into(),
            ));
        }
        let colorspace = match channels {
            1 => Colorspace::Gray,
            3 => Colorspace::Rgb,
            other => return Err(ResampleError::ChannelCount(other)),
        };
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(ResampleError::DataLength {
                context: "equirectangular image",
                got: data.len(),
                expected,
            });
        }
        for &s in &data {
            if !(0.0..=1.0).contains(&s) {
                return Err(ResampleError::SampleRange(f64::from(s)));
            }
        }
        Ok(Self {
            width,
            height,
            channels,
            colorspace,
            data,
        })
    }

    pub fn constant(width: u32, height: u32, channels: u8, value: f32) -> Result<Self, ResampleError> {
        let len = width as usize * height as usize * channels as usize;
        Self::new(width, height, channels, vec![value; len])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn colorspace(&self) -> Colorspace {
        self.colorspace
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Channel slice of the pixel at column `u`, row `v`.
    pub fn pixel(&self, u: u32, v: u32) -> &[f32] {
        debug_assert!(u < self.width && v < self.height);
        let idx = (v as usize * self.width as usize + u as usize) * self.channels as usize;
        &self.data[idx..idx + self.channels as usize]
    }

    pub(crate) fn sample_at(&self, col: u32, row: u32, channel: usize) -> f64 {
        let idx =
            (row as usize * self.width as usize + col as usize) * self.channels as usize + channel;
        f64::from(self.data[idx])
    }
}

/// One square tangential view rendered from an equirectangular image.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentView {
    plane_index: usize,
    dim: u32,
    channels: u8,
    data: Vec<f32>,
}

impl TangentView {
    pub fn new(
        plane_index: usize,
        dim: u32,
        channels: u8,
        data: Vec<f32>,
    ) -> Result<Self, ResampleError> {
        if channels != 1 && channels != 3 {
            return Err(ResampleError::ChannelCount(channels));
        }
        let expected = dim as usize * dim as usize * channels as usize;
        if data.len() != expected {
            return Err(ResampleError::DataLength {
                context: "tangent view",
                got: data.len(),
                expected,
            });
        }
        Ok(Self {
            plane_index,
            dim,
            channels,
            data,
        })
    }

    pub fn plane_index(&self) -> usize {
        self.plane_index
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}
