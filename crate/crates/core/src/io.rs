//! PNG and binary PGM/PPM reading and writing.
//!
//! Integer samples are normalized to `[0, 1]` on load (divide by 255 or
//! 65535) and quantized back with rounding on save. PNG alpha channels are
//! accepted on read and dropped.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::resample::{ErpImage, ResampleError};

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Png {
        path: String,
        source: png::DecodingError,
    },
    #[error("{path}: {source}")]
    PngEncode {
        path: String,
        source: png::EncodingError,
    },
    #[error("{path}: unsupported format: {detail}")]
    Unsupported { path: String, detail: String },
    #[error("{path}: malformed netpbm header: {detail}")]
    Netpbm { path: String, detail: String },
    #[error(transparent)]
    Image(#[from] ResampleError),
}

/// Output sample depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

/// Loads a PNG, PGM or PPM image by file extension.
///
/// `require_aspect` enforces the 2:1 equirectangular shape.
pub fn load_image(path: &Path, require_aspect: bool) -> Result<ErpImage, ImageIoError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let (width, height, channels, data) = match ext.as_str() {
        "png" => load_png(path)?,
        "pgm" | "ppm" | "pnm" => load_netpbm(path)?,
        other => {
            return Err(ImageIoError::Unsupported {
                path: path_str(path),
                detail: format!("extension {other:?}; expected png, pgm or ppm"),
            })
        }
    };
    let img = if require_aspect {
        ErpImage::new(width, height, channels, data)?
    } else {
        ErpImage::new_any_aspect(width, height, channels, data)?
    };
    Ok(img)
}

/// Writes a PNG, PGM or PPM image by file extension.
pub fn save_image(path: &Path, img: &ErpImage, depth: BitDepth) -> Result<(), ImageIoError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "png" => save_png(path, img, depth),
        "pgm" | "ppm" => save_netpbm(path, img, depth),
        other => Err(ImageIoError::Unsupported {
            path: path_str(path),
            detail: format!("extension {other:?}; expected png, pgm or ppm"),
        }),
    }
}

fn load_png(path: &Path) -> Result<(u32, u32, u8, Vec<f32>), ImageIoError> {
    let file = File::open(path).map_err(|source| ImageIoError::Io {
        path: path_str(path),
        source,
    })?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|source| ImageIoError::Png {
        path: path_str(path),
        source,
    })?;
    let buffer_size = reader
        .output_buffer_size()
        .ok_or_else(|| ImageIoError::Unsupported {
            path: path_str(path),
            detail: "image too large to buffer".into(),
        })?;
    let mut buf = vec![0u8; buffer_size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|source| ImageIoError::Png {
            path: path_str(path),
            source,
        })?;
    buf.truncate(info.buffer_size());

    let (in_channels, keep): (usize, usize) = match info.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => {
            return Err(ImageIoError::Unsupported {
                path: path_str(path),
                detail: "indexed-color png".into(),
            })
        }
    };

    let data = match info.bit_depth {
        png::BitDepth::Eight => normalize_u8(&buf, in_channels, keep),
        png::BitDepth::Sixteen => normalize_u16_be(&buf, in_channels, keep),
        other => {
            return Err(ImageIoError::Unsupported {
                path: path_str(path),
                detail: format!("png bit depth {other:?}"),
            })
        }
    };
    Ok((info.width, info.height, keep as u8, data))
}

fn normalize_u8(buf: &[u8], in_channels: usize, keep: usize) -> Vec<f32> {
    buf.chunks_exact(in_channels)
        .flat_map(|px| px[..keep].iter().map(|&b| f32::from(b) / 255.0))
        .collect()
}

fn normalize_u16_be(buf: &[u8], in_channels: usize, keep: usize) -> Vec<f32> {
    buf.chunks_exact(2 * in_channels)
        .flat_map(|px| {
            (0..keep).map(move |c| {
                let v = u16::from_be_bytes([px[2 * c], px[2 * c + 1]]);
                f32::from(v) / 65535.0
            })
        })
        .collect()
}

fn save_png(path: &Path, img: &ErpImage, depth: BitDepth) -> Result<(), ImageIoError> {
    let file = File::create(path).map_err(|source| ImageIoError::Io {
        path: path_str(path),
        source,
    })?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), img.width(), img.height());
    encoder.set_color(match img.channels() {
        1 => png::ColorType::Grayscale,
        _ => png::ColorType::Rgb,
    });
    encoder.set_depth(match depth {
        BitDepth::Eight => png::BitDepth::Eight,
        BitDepth::Sixteen => png::BitDepth::Sixteen,
    });
    let mut writer = encoder
        .write_header()
        .map_err(|source| ImageIoError::PngEncode {
            path: path_str(path),
            source,
        })?;
    let bytes = quantize(img.data(), depth);
    writer
        .write_image_data(&bytes)
        .map_err(|source| ImageIoError::PngEncode {
            path: path_str(path),
            source,
        })?;
    Ok(())
}

fn quantize(data: &[f32], depth: BitDepth) -> Vec<u8> {
    match depth {
        BitDepth::Eight => data
            .iter()
            .map(|&v| (f64::from(v) * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect(),
        BitDepth::Sixteen => data
            .iter()
            .flat_map(|&v| {
                let q = (f64::from(v) * 65535.0).round().clamp(0.0, 65535.0) as u16;
                q.to_be_bytes()
            })
            .collect(),
    }
}

fn load_netpbm(path: &Path) -> Result<(u32, u32, u8, Vec<f32>), ImageIoError> {
    let mut raw = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|source| ImageIoError::Io {
            path: path_str(path),
            source,
        })?;
    let err = |detail: &str| ImageIoError::Netpbm {
        path: path_str(path),
        detail: detail.into(),
    };

    let mut pos = 0usize;
    let mut next_token = |raw: &[u8]| -> Option<String> {
        // Skip whitespace and '#' comments between header tokens.
        loop {
            while pos < raw.len() && raw[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < raw.len() && raw[pos] == b'#' {
                while pos < raw.len() && raw[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < raw.len() && !raw[pos].is_ascii_whitespace() {
            pos += 1;
        }
        (pos > start).then(|| String::from_utf8_lossy(&raw[start..pos]).into_owned())
    };

    let magic = next_token(&raw).ok_or_else(|| err("missing magic"))?;
    let channels: u8 = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(err(&format!("magic {other:?}; only binary P5/P6 supported"))),
    };
    let width: u32 = next_token(&raw)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err("bad width"))?;
    let height: u32 = next_token(&raw)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err("bad height"))?;
    let maxval: u32 = next_token(&raw)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err("bad maxval"))?;
    if maxval == 0 || maxval > 65535 {
        return Err(err(&format!("maxval {maxval} out of range")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;

    let count = width as usize * height as usize * channels as usize;
    let data = if maxval < 256 {
        let raster = raw.get(pos..pos + count).ok_or_else(|| err("truncated raster"))?;
        raster
            .iter()
            .map(|&b| f32::from(b) / maxval as f32)
            .collect()
    } else {
        let raster = raw
            .get(pos..pos + 2 * count)
            .ok_or_else(|| err("truncated raster"))?;
        raster
            .chunks_exact(2)
            .map(|b| f32::from(u16::from_be_bytes([b[0], b[1]])) / maxval as f32)
            .collect()
    };
    Ok((width, height, channels, data))
}

fn save_netpbm(path: &Path, img: &ErpImage, depth: BitDepth) -> Result<(), ImageIoError> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let maxval = match depth {
        BitDepth::Eight => 255u32,
        BitDepth::Sixteen => 65535,
    };
    let mut out = Vec::new();
    write!(out, "{magic}\n{} {}\n{maxval}\n", img.width(), img.height()).expect("vec write");
    out.extend(quantize(img.data(), depth));
    let file = File::create(path).map_err(|source| ImageIoError::Io {
        path: path_str(path),
        source,
    })?;
    let mut w = BufWriter::new(file);
    w.write_all(&out).map_err(|source| ImageIoError::Io {
        path: path_str(path),
        source,
    })?;
    Ok(())
}

/// Converts a tangential view into a saveable image (square, any-aspect).
pub fn view_to_image(view: &crate::resample::TangentView) -> ErpImage {
    ErpImage::new_any_aspect(view.dim(), view.dim(), view.channels(), view.data().to_vec())
        .expect("tangent view invariants match image invariants")
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn gradient(width: u32, height: u32, channels: u8) -> ErpImage {
        let mut data = Vec::new();
        for v in 0..height {
            for u in 0..width {
                for c in 0..channels {
                    let x = (u as f32 / (width - 1) as f32 + c as f32 * 0.1).min(1.0);
                    data.push(x);
                    let _ = v;
                }
            }
        }
        ErpImage::new_any_aspect(width, height, channels, data).unwrap()
    }

    #[test]
    fn png_round_trip_8_and_16_bit() {
        let dir = tempdir().unwrap();
        for (channels, depth, tol) in [
            (1u8, BitDepth::Eight, 0.5 / 255.0),
            (3, BitDepth::Eight, 0.5 / 255.0),
            (1, BitDepth::Sixteen, 0.5 / 65535.0),
            (3, BitDepth::Sixteen, 0.5 / 65535.0),
        ] {
            let img = gradient(33, 17, channels);
            let path = dir.path().join(format!("t_{channels}_{tol}.png"));
            save_image(&path, &img, depth).unwrap();
            let back = load_image(&path, false).unwrap();
            assert_eq!(back.width(), 33);
            assert_eq!(back.height(), 17);
            assert_eq!(back.channels(), channels);
            for (&a, &b) in img.data().iter().zip(back.data()) {
                assert!((a - b).abs() <= tol as f32 + 1e-7);
            }
        }
    }

    #[test]
    fn netpbm_round_trip() {
        let dir = tempdir().unwrap();
        let gray = gradient(20, 10, 1);
        let p = dir.path().join("x.pgm");
        save_image(&p, &gray, BitDepth::Sixteen).unwrap();
        let back = load_image(&p, false).unwrap();
        for (&a, &b) in gray.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 1.0 / 65535.0);
        }

        let rgb = gradient(20, 10, 3);
        let p = dir.path().join("x.ppm");
        save_image(&p, &rgb, BitDepth::Eight).unwrap();
        let back = load_image(&p, false).unwrap();
        assert_eq!(back.channels(), 3);
    }

    #[test]
    fn aspect_enforcement_on_load() {
        let dir = tempdir().unwrap();
        let img = gradient(33, 17, 1);
        let path = dir.path().join("bad.png");
        save_image(&path, &img, BitDepth::Eight).unwrap();
        assert!(load_image(&path, true).is_err());
        assert!(load_image(&path, false).is_ok());
    }

    #[test]
    fn unknown_extension_is_rejected() {
        assert!(matches!(
            load_image(Path::new("/nonexistent/file.bmp"), false),
            Err(ImageIoError::Unsupported { .. })
        ));
    }
}
