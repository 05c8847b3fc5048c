//! Per-channel smoothing of RGB images on their pixel grid.
//!
//! Pixel `(column, row)` is the regressor, so bandwidths are in pixels and the
//! design is the fixed grid. Each channel is fitted independently.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use image::{ImageFormat, Rgb, RgbImage};

use crate::bandwidth::{BandwidthGrid, BandwidthPlan, DomainMethod, RangeRule};
use crate::data::{Dataset, Points};
use crate::error::{Error, Result};
use crate::estimators::{fit, EstimatorKind, EstimatorSpec, PilotPolicy};
use crate::kernels::KernelFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    R,
    G,
    B,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::R, Channel::G, Channel::B];

    pub fn index(self) -> usize {
        match self {
            Channel::R => 0,
            Channel::G => 1,
            Channel::B => 2,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::R => "r",
            Channel::G => "g",
            Channel::B => "b",
        })
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "r" | "red" => Ok(Channel::R),
            "g" | "green" => Ok(Channel::G),
            "b" | "blue" => Ok(Channel::B),
            other => Err(Error::invalid(format!("unknown channel '{other}'"))),
        }
    }
}

/// RGB image with real-valued channels stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFrame {
    width: usize,
    height: usize,
    channels: [Vec<f64>; 3],
}

impl ImageFrame {
    pub fn new(width: usize, height: usize, channels: [Vec<f64>; 3]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if channels.iter().any(|c| c.len() != width * height) {
            return Err(Error::invalid("channel size does not match image dimensions"));
        }
        if channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("channel values must be finite"));
        }
        Ok(ImageFrame {
            width,
            height,
            channels,
        })
    }

    /// Same values in all three channels.
    pub fn gray(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        ImageFrame::new(width, height, [values.clone(), values.clone(), values])
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        let n = width * height;
        ImageFrame::new(width, height, rgb.map(|v| vec![v; n]))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channel(&self, c: Channel) -> &[f64] {
        &self.channels[c.index()]
    }

    pub fn set_channel(&mut self, c: Channel, values: Vec<f64>) -> Result<()> {
        if values.len() != self.width * self.height {
            return Err(Error::invalid("channel size does not match image dimensions"));
        }
        self.channels[c.index()] = values;
        Ok(())
    }

    pub fn get(&self, c: Channel, col: usize, row: usize) -> f64 {
        self.channels[c.index()][row * self.width + col]
    }

    /// Left-right mirror image.
    pub fn mirrored(&self) -> Self {
        let w = self.width;
        let flip = |v: &Vec<f64>| {
            let mut out = Vec::with_capacity(v.len());
            for row in v.chunks_exact(w) {
                out.extend(row.iter().rev());
            }
            out
        };
        ImageFrame {
            width: w,
            height: self.height,
            channels: [
                flip(&self.channels[0]),
                flip(&self.channels[1]),
                flip(&self.channels[2]),
            ],
        }
    }

    /// Channel values as outcomes over the pixel grid.
    pub fn channel_dataset(&self, c: Channel) -> Result<Dataset> {
        Dataset::new(Points::pixel_grid(self.width, self.height), self.channel(c).to_vec())
    }

    fn to_rgb8(&self) -> RgbImage {
        RgbImage::from_fn(self.width as u32, self.height as u32, |col, row| {
            let i = row as usize * self.width + col as usize;
            Rgb(self.channels.each_ref().map(|c| quantize(c[i])))
        })
    }

    /// Writes an 8-bit PNG, clamping to `[0, 255]` and rounding.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.save(path, ImageFormat::Png)
    }

    /// Writes a binary PPM (P6).
    pub fn save_ppm(&self, path: &Path) -> Result<()> {
        self.save(path, ImageFormat::Pnm)
    }

    fn save(&self, path: &Path, format: ImageFormat) -> Result<()> {
        self.to_rgb8()
            .save_with_format(path, format)
            .map_err(|e| image_error(path, e))
    }
}

fn image_error(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Image {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

/// Nearest 8-bit value after clamping to `[0, 255]`.
pub fn quantize(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

/// Reads a PNG (8-bit RGB / RGBA, alpha dropped) or binary PPM.
pub fn load_image(path: &Path) -> Result<ImageFrame> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = image::guess_format(&bytes).map_err(|e| image_error(path, e))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Pnm) {
        return Err(Error::Image {
            path: path.to_path_buf(),
            message: format!("unsupported format {format:?}; expected PNG or PPM (P6)"),
        });
    }
    let img = image::load_from_memory_with_format(&bytes, format)
        .map_err(|e| image_error(path, e))?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut channels = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    for px in img.pixels() {
        for (c, v) in channels.iter_mut().zip(px.0) {
            c.push(v as f64);
        }
    }
    ImageFrame::new(w, h, channels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSmooth {
    pub smoothed: Vec<f64>,
    /// `original − smoothed`.
    pub residuals: Vec<f64>,
    pub undefined: Vec<bool>,
    pub domain_bandwidth: Vec<f64>,
    pub range_bandwidth: Option<f64>,
}

/// Fits one channel at every pixel. Undefined pixels are imputed from the
/// nearest defined pixel when `fill_nearest`, otherwise keep their input value.
pub fn smooth_channel(
    frame: &ImageFrame,
    channel: Channel,
    spec: &EstimatorSpec,
    fill_nearest: bool,
) -> Result<ChannelSmooth> {
    let data = frame.channel_dataset(channel)?;
    let f = fit(&data, data.x(), spec)?;
    let original = frame.channel(channel);
    let values = if fill_nearest {
        f.fill_nearest()
    } else {
        f.estimates().to_vec()
    };
    let smoothed: Vec<f64> = values
        .iter()
        .zip(original)
        .map(|(v, o)| if v.is_nan() { *o } else { *v })
        .collect();
    let residuals = original.iter().zip(&smoothed).map(|(o, s)| o - s).collect();
    Ok(ChannelSmooth {
        smoothed,
        residuals,
        undefined: f.undefined_mask().to_vec(),
        domain_bandwidth: spec.domain.clone(),
        range_bandwidth: f.range_bandwidth(),
    })
}

/// Smoothed image (8-bit quantized values), offset-encoded residual image
/// (`residual + 128`, clamped), and per-channel diagnostics. Channels not
/// listed are copied through with zero residual.
#[derive(Debug, Clone)]
pub struct SmoothedImage {
    pub smoothed: ImageFrame,
    pub residual: ImageFrame,
    pub channels: Vec<(Channel, ChannelSmooth)>,
}

fn assemble(frame: &ImageFrame, fits: Vec<(Channel, ChannelSmooth)>) -> Result<SmoothedImage> {
    let mut smoothed = frame.clone();
    let n = frame.width * frame.height;
    let mut residual = ImageFrame::filled(frame.width, frame.height, [128.0; 3])?;
    for c in Channel::ALL {
        smoothed.set_channel(c, frame.channel(c).iter().map(|v| quantize(*v) as f64).collect())?;
    }
    for (c, fit) in &fits {
        smoothed.set_channel(*c, fit.smoothed.iter().map(|v| quantize(*v) as f64).collect())?;
        let enc: Vec<f64> = (0..n).map(|i| quantize(fit.residuals[i] + 128.0) as f64).collect();
        residual.set_channel(*c, enc)?;
    }
    Ok(SmoothedImage {
        smoothed,
        residual,
        channels: fits,
    })
}

/// Applies the same estimator spec to R, G and B independently.
pub fn smooth_image(frame: &ImageFrame, spec: &EstimatorSpec, fill_nearest: bool) -> Result<SmoothedImage> {
    let fits = Channel::ALL
        .iter()
        .map(|&c| Ok((c, smooth_channel(frame, c, spec, fill_nearest)?)))
        .collect::<Result<Vec<_>>>()?;
    assemble(frame, fits)
}

/// Range bandwidth multiplier for images. The pilot SD of a frame is dominated
/// by scene contrast, not noise, so the range bandwidth is a small fraction of it.
pub const DEFAULT_IMAGE_RANGE_MULTIPLIER: f64 = 0.04;

/// Image smoothing with per-channel bandwidth selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSmoother {
    pub kind: EstimatorKind,
    pub kernel: KernelFamily,
    pub range_kernel: KernelFamily,
    pub plan: BandwidthPlan,
    pub iterations: usize,
    pub fill_nearest: bool,
}

impl Default for ImageSmoother {
    fn default() -> Self {
        ImageSmoother {
            kind: EstimatorKind::Alc,
            kernel: KernelFamily::Uniform,
            range_kernel: KernelFamily::Uniform,
            plan: BandwidthPlan {
                range_rule: RangeRule::Multiplier(DEFAULT_IMAGE_RANGE_MULTIPLIER),
                ..BandwidthPlan::default()
            },
            iterations: 1,
            fill_nearest: false,
        }
    }
}

/// Default pixel search grid: 12 geometric steps from 1 to 12 pixels (capped
/// at the image extent) in both directions.
pub fn default_pixel_grid(width: usize, height: usize) -> Result<BandwidthGrid> {
    let cap = |len: usize| (len.saturating_sub(1) as f64).clamp(1.0, 12.0);
    let grid = |len: usize| {
        let hi = cap(len);
        if hi <= 1.0 {
            vec![1.0]
        } else {
            crate::bandwidth::geometric(1.0, hi, 12)
        }
    };
    let (gx, gy) = (grid(width), grid(height));
    if gx.len() != gy.len() {
        let n = gx.len().min(gy.len());
        return BandwidthGrid::new(vec![gx[..n].to_vec(), gy[..n].to_vec()]);
    }
    BandwidthGrid::new(vec![gx, gy])
}

impl ImageSmoother {
    /// Estimator spec for one channel. The isotropic bandwidth `h` is selected
    /// (or taken) first; the ALC pilot is the LC fit at `h` and the ALC itself
    /// runs at `h × inflation`.
    pub fn channel_spec(&self, frame: &ImageFrame, channel: Channel) -> Result<EstimatorSpec> {
        let mut plan = self.plan.clone();
        if plan.grid.is_none() && matches!(plan.method, DomainMethod::Aicc | DomainMethod::Lscv) {
            plan.grid = Some(default_pixel_grid(frame.width, frame.height)?);
        }
        let data = frame.channel_dataset(channel)?;
        let h = plan.resolve_domain(&data, self.kernel)?;
        if self.kind == EstimatorKind::Lc {
            return Ok(EstimatorSpec::lc(self.kernel, h));
        }
        Ok(EstimatorSpec {
            kind: EstimatorKind::Alc,
            kernel: self.kernel,
            range_kernel: self.range_kernel,
            domain: crate::bandwidth::scale_for_alc(&h, plan.inflation)?,
            range: plan.range_bandwidth(),
            pilot: PilotPolicy::IsotropicLc {
                enforce_rate: plan.inflation > 1.0,
                bandwidths: Some(h),
            },
            iterations: self.iterations,
        })
    }

    pub fn smooth(&self, frame: &ImageFrame, channels: &[Channel]) -> Result<SmoothedImage> {
        let fits = channels
            .iter()
            .map(|&c| {
                let spec = self.channel_spec(frame, c)?;
                Ok((c, smooth_channel(frame, c, &spec, self.fill_nearest)?))
            })
            .collect::<Result<Vec<_>>>()?;
        assemble(frame, fits)
    }
}
