//! Single-channel f64 plane and the convolution primitives shared by the
//! metric kernels.

use crate::resample::{ErpImage, TangentView};

/// Rec.601 luma weights applied to RGB inputs before scoring.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// A grayscale plane in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Luma {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Luma {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "plane data length mismatch");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_view(view: &TangentView) -> Self {
        from_interleaved(
            view.dim() as usize,
            view.dim() as usize,
            view.channels() as usize,
            view.data(),
        )
    }

    pub fn from_image(img: &ErpImage) -> Self {
        from_interleaved(
            img.width() as usize,
            img.height() as usize,
            img.channels() as usize,
            img.data(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn min_side(&self) -> usize {
        self.width.min(self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Elementwise product with another plane of the same shape.
    pub fn product(&self, other: &Luma) -> Luma {
        assert_eq!((self.width, self.height), (other.width, other.height));
        Luma::new(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a * b)
                .collect(),
        )
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Luma {
        Luma::new(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip(&self, other: &Luma, f: impl Fn(f64, f64) -> f64) -> Luma {
        assert_eq!((self.width, self.height), (other.width, other.height));
        Luma::new(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.data.iter().copied()) / self.data.len() as f64
    }

    /// Population standard deviation.
    pub fn std_dev(&self) -> f64 {
        let mean = self.mean();
        let var = compensated_sum(self.data.iter().map(|&v| (v - mean) * (v - mean)))
            / self.data.len() as f64;
        var.max(0.0).sqrt()
    }

    /// Keep every second sample in both directions, starting at index 0.
    pub fn decimate2(&self) -> Luma {
        let w = self.width.div_ceil(2);
        let h = self.height.div_ceil(2);
        let mut data = Vec::with_capacity(w * h);
        for y in (0..self.height).step_by(2) {
            for x in (0..self.width).step_by(2) {
                data.push(self.at(x, y));
            }
        }
        Luma::new(w, h, data)
    }

    /// Non-overlapping 2x2 block mean; truncates odd tails.
    pub fn mean_pool2(&self) -> Luma {
        let w = self.width / 2;
        let h = self.height / 2;
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let s = self.at(2 * x, 2 * y)
                    + self.at(2 * x + 1, 2 * y)
                    + self.at(2 * x, 2 * y + 1)
                    + self.at(2 * x + 1, 2 * y + 1);
                data.push(s * 0.25);
            }
        }
        Luma::new(w, h, data)
    }
}

fn from_interleaved(width: usize, height: usize, channels: usize, data: &[f32]) -> Luma {
    let lum = match channels {
        1 => data.iter().map(|&v| f64::from(v)).collect(),
        _ => data
            .chunks_exact(channels)
            .map(|px| {
                (LUMA_WEIGHTS[0] * f64::from(px[0])
                    + LUMA_WEIGHTS[1] * f64::from(px[1])
                    + LUMA_WEIGHTS[2] * f64::from(px[2]))
                .clamp(0.0, 1.0)
            })
            .collect(),
    };
    Luma::new(width, height, lum)
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Normalized symmetric Gaussian tap vector of the given odd side length.
pub fn gaussian_kernel(side: usize, sigma: f64) -> Vec<f64> {
    assert!(side % 2 == 1, "gaussian window side must be odd");
    let half = (side / 2) as isize;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Separable convolution keeping only fully-supported output (valid region).
/// Output shrinks by `taps.len() - 1` in each direction.
pub fn conv_valid(plane: &Luma, taps: &[f64]) -> Luma {
    let k = taps.len();
    assert!(plane.width >= k && plane.height >= k, "plane below window support");
    let w_mid = plane.width - k + 1;
    // Horizontal pass.
    let mut mid = vec![0.0; w_mid * plane.height];
    for y in 0..plane.height {
        let row = &plane.data[y * plane.width..][..plane.width];
        let out = &mut mid[y * w_mid..][..w_mid];
        for (x, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (t, &w) in taps.iter().enumerate() {
                acc += w * row[x + t];
            }
            *slot = acc;
        }
    }
    // Vertical pass.
    let h_out = plane.height - k + 1;
    let mut data = vec![0.0; w_mid * h_out];
    for y in 0..h_out {
        let out = &mut data[y * w_mid..][..w_mid];
        for (t, &w) in taps.iter().enumerate() {
            let row = &mid[(y + t) * w_mid..][..w_mid];
            for (slot, &v) in out.iter_mut().zip(row) {
                *slot += w * v;
            }
        }
    }
    Luma::new(w_mid, h_out, data)
}

/// Separable convolution with half-sample symmetric padding (the edge sample
/// is repeated), output the same size as the input.
pub fn conv_symmetric(plane: &Luma, taps: &[f64]) -> Luma {
    let half = taps.len() / 2;
    // Horizontal pass.
    let mut mid = vec![0.0; plane.width * plane.height];
    for y in 0..plane.height {
        let row = &plane.data[y * plane.width..][..plane.width];
        let out = &mut mid[y * plane.width..][..plane.width];
        for (x, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (t, &w) in taps.iter().enumerate() {
                let idx = reflect(x as isize + t as isize - half as isize, plane.width);
                acc += w * row[idx];
            }
            *slot = acc;
        }
    }
    // Vertical pass.
    let mut data = vec![0.0; plane.width * plane.height];
    for y in 0..plane.height {
        let out = &mut data[y * plane.width..][..plane.width];
        for (t, &w) in taps.iter().enumerate() {
            let idx = reflect(y as isize + t as isize - half as isize, plane.height);
            let row = &mid[idx * plane.width..][..plane.width];
            for (slot, &v) in out.iter_mut().zip(row) {
                *slot += w * v;
            }
        }
    }
    Luma::new(plane.width, plane.height, data)
}

/// Half-sample symmetric reflection: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
fn reflect(mut i: isize, len: usize) -> usize {
    let n = len as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luma_conversion_weights() {
        let img = ErpImage::new(2, 1, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let luma = Luma::from_image(&img);
        assert!((luma.at(0, 0) - 0.299).abs() < 1e-12);
        assert!((luma.at(1, 0) - 0.587).abs() < 1e-12);
    }

    #[test]
    fn gray_passes_through() {
        let img = ErpImage::new(4, 2, 1, vec![0.1; 8]).unwrap();
        let luma = Luma::from_image(&img);
        assert!(luma.data().iter().all(|&v| (v - f64::from(0.1f32)).abs() < 1e-12));
    }

    #[test]
    fn gaussian_kernel_normalizes() {
        let k = gaussian_kernel(11, 1.5);
        assert_eq!(k.len(), 11);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(k[5] > k[4] && k[4] > k[3]);
        assert_eq!(k[0], k[10]);
    }

    #[test]
    fn conv_valid_constant_and_shape() {
        let plane = Luma::new(8, 6, vec![0.4; 48]);
        let out = conv_valid(&plane, &gaussian_kernel(3, 1.0));
        assert_eq!((out.width(), out.height()), (6, 4));
        for &v in out.data() {
            assert!((v - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn conv_symmetric_preserves_shape_and_dc() {
        let plane = Luma::new(5, 4, vec![0.7; 20]);
        let out = conv_symmetric(&plane, &[0.05, 0.25, 0.4, 0.25, 0.05]);
        assert_eq!((out.width(), out.height()), (5, 4));
        for &v in out.data() {
            assert!((v - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn reflect_folds_deep_indices() {
        assert_eq!(reflect(-1, 4), 0);
        assert_eq!(reflect(-2, 4), 1);
        assert_eq!(reflect(4, 4), 3);
        assert_eq!(reflect(5, 4), 2);
        assert_eq!(reflect(3, 2), 0);
        assert_eq!(reflect(-3, 1), 0);
    }

    #[test]
    fn decimate_and_pool_dims() {
        let plane = Luma::new(7, 5, (0..35).map(f64::from).collect());
        let d = plane.decimate2();
        assert_eq!((d.width(), d.height()), (4, 3));
        assert_eq!(d.at(0, 0), 0.0);
        assert_eq!(d.at(1, 0), 2.0);
        assert_eq!(d.at(0, 1), 14.0);

        let p = plane.mean_pool2();
        assert_eq!((p.width(), p.height()), (3, 2));
        assert_eq!(p.at(0, 0), (0.0 + 1.0 + 7.0 + 8.0) / 4.0);
    }

    #[test]
    fn compensated_sum_beats_naive_on_adversarial_input() {
        let values = vec![1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(values.iter().copied()), 2.0);
    }
}
