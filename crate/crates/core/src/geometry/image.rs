use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::RigidTransform2D;
use crate::numerics::{Scalar, Tensor};
use crate::{Error, Result};

const RAW_MAGIC: &[u8; 4] = b"BEV1";

/// Bird's-eye-view RGB raster, channel-last, intensities in `[0, 1]`.
///
/// World point `(x, y)` sits at pixel `(row, col) = ((y - origin.y) / upp,
/// (x - origin.x) / upp)`, pixel centers at integer coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BevImage {
    height: usize,
    width: usize,
    pixels: Vec<f32>,
    /// World units per pixel (meters for ETH/UCY, 1 for SDD pixel coordinates).
    pub units_per_pixel: f64,
    pub origin: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    Nearest,
    #[default]
    Bilinear,
}

impl BevImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f32>, units_per_pixel: f64, origin: [f64; 2]) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Config("image must be at least 1x1".into()));
        }
        if pixels.len() != height * width * 3 {
            return Err(Error::Dimension {
                op: "bev_image",
                lhs: vec![height, width, 3],
                rhs: vec![pixels.len()],
            });
        }
        if !(units_per_pixel.is_finite() && units_per_pixel > 0.0) {
            return Err(Error::Config(format!("invalid units per pixel {units_per_pixel}")));
        }
        if pixels.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::Config("pixel intensities must be finite and nonnegative".into()));
        }
        Ok(Self {
            height,
            width,
            pixels,
            units_per_pixel,
            origin,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::new(height, width, vec![0.0; height * width * 3], 1.0, [0.0, 0.0]).expect("valid size")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f32; 3] {
        let i = (row * self.width + col) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, row: usize, col: usize, rgb: [f32; 3]) {
        let i = (row * self.width + col) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Continuous `(row, col)` of a world point.
    pub fn world_to_pixel(&self, p: [f64; 2]) -> (f64, f64) {
        (
            (p[1] - self.origin[1]) / self.units_per_pixel,
            (p[0] - self.origin[0]) / self.units_per_pixel,
        )
    }

    fn sample(&self, row: f64, col: f64, mode: Sampling) -> [f32; 3] {
        let fetch = |r: i64, c: i64| -> [f32; 3] {
            if r < 0 || c < 0 || r >= self.height as i64 || c >= self.width as i64 {
                [0.0; 3]
            } else {
                self.pixel(r as usize, c as usize)
            }
        };
        match mode {
            Sampling::Nearest => fetch(row.round() as i64, col.round() as i64),
            Sampling::Bilinear => {
                let (r0, c0) = (row.floor(), col.floor());
                let (fr, fc) = ((row - r0) as f32, (col - c0) as f32);
                let (r0, c0) = (r0 as i64, c0 as i64);
                let (a, b, c, d) = (fetch(r0, c0), fetch(r0, c0 + 1), fetch(r0 + 1, c0), fetch(r0 + 1, c0 + 1));
                std::array::from_fn(|k| {
                    (a[k] * (1.0 - fc) + b[k] * fc) * (1.0 - fr) + (c[k] * (1.0 - fc) + d[k] * fc) * fr
                })
            }
        }
    }

    /// Reads a PNG (any color type is converted to RGB8).
    pub fn load_png(path: &Path, units_per_pixel: f64, origin: [f64; 2]) -> Result<Self> {
        let img = ::image::open(path)?.to_rgb8();
        let (w, h) = img.dimensions();
        let pixels = img.into_raw().into_iter().map(|v| v as f32 / 255.0).collect();
        Self::new(h as usize, w as usize, pixels, units_per_pixel, origin)
    }

    /// Raw container: `"BEV1"`, height `u32` LE, width `u32` LE, then
    /// `height * width * 3` bytes, row-major and channel-last.
    pub fn read_raw<R: Read>(mut r: R, units_per_pixel: f64, origin: [f64; 2]) -> Result<Self> {
        let mut head = [0u8; 12];
        r.read_exact(&mut head)?;
        if &head[..4] != RAW_MAGIC {
            return Err(Error::Load("raw image has bad magic".into()));
        }
        let h = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes")) as usize;
        let w = u32::from_le_bytes(head[8..12].try_into().expect("4 bytes")) as usize;
        let mut bytes = vec![0u8; h * w * 3];
        r.read_exact(&mut bytes)?;
        Self::new(h, w, bytes.into_iter().map(|v| v as f32 / 255.0).collect(), units_per_pixel, origin)
    }

    pub fn write_raw<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(RAW_MAGIC)?;
        w.write_all(&(self.height as u32).to_le_bytes())?;
        w.write_all(&(self.width as u32).to_le_bytes())?;
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    /// Loads `.png` or the raw container, chosen by extension.
    pub fn load(path: &Path, units_per_pixel: f64, origin: [f64; 2]) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("raw") | Some("bev") => Self::read_raw(std::fs::File::open(path)?, units_per_pixel, origin),
            _ => Self::load_png(path, units_per_pixel, origin),
        }
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect()
    }

    pub fn to_rgb_image(&self) -> ::image::RgbImage {
        ::image::RgbImage::from_raw(self.width as u32, self.height as u32, self.to_bytes())
            .expect("buffer sized from dimensions")
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_rgb_image().save(path)?;
        Ok(())
    }
}

/// Crops an `s × s` window aligned with the agent's frame.
///
/// `t` maps world coordinates into the agent frame (agent at the origin,
/// heading on +x). Output pixel `(row, col)` shows the agent-frame point
/// `((col - s/4) · upp, (row - s/2) · upp)`. The agent therefore sits at
/// `(s/2, s/4)` with three quarters of the crop ahead of it, and output rows
/// run parallel to the heading. Samples outside the source are zero.
pub fn rotate_crop(image: &BevImage, t: &RigidTransform2D, s: usize, mode: Sampling) -> Result<BevImage> {
    if s < 2 {
        return Err(Error::Crop(format!("crop side must be at least 2, got {s}")));
    }
    let padded = 3 * image.height.max(image.width);
    if s > padded {
        return Err(Error::Crop(format!("crop side {s} exceeds padded source side {padded}")));
    }
    let to_world = t.inverse();
    let agent = to_world.apply([0.0, 0.0]);
    let (ar, ac) = image.world_to_pixel(agent);
    if ar < -0.5 || ac < -0.5 || ar >= image.height as f64 - 0.5 || ac >= image.width as f64 - 0.5 {
        return Err(Error::Crop(format!("agent pixel ({ar:.1}, {ac:.1}) lies outside the source image")));
    }
    let upp = image.units_per_pixel;
    let (anchor_row, anchor_col) = ((s / 2) as f64, (s / 4) as f64);
    let mut pixels = Vec::with_capacity(s * s * 3);
    for row in 0..s {
        for col in 0..s {
            let local = [(col as f64 - anchor_col) * upp, (row as f64 - anchor_row) * upp];
            let (r, c) = image.world_to_pixel(to_world.apply(local));
            pixels.extend_from_slice(&image.sample(r, c, mode));
        }
    }
    BevImage::new(s, s, pixels, upp, [-anchor_col * upp, -anchor_row * upp])
}

/// Image split into projected patches, raster order.
#[derive(Debug, Clone)]
pub struct PatchTokens<F> {
    /// `[P, d_img]`
    pub tokens: Tensor<F>,
    pub patch_size: usize,
}

/// Flattened patches `[P, p·p·3]`.
///
/// Patches are taken in raster order over the patch grid; each is flattened
/// row by row, then column, then channel (channel-last).
pub fn extract_patches<F: Scalar>(image: &BevImage, patch_size: usize) -> Result<Tensor<F>> {
    if patch_size == 0 || !image.height.is_multiple_of(patch_size) || !image.width.is_multiple_of(patch_size) {
        return Err(Error::Config(format!(
            "image {}x{} is not divisible into {patch_size}-pixel patches",
            image.height, image.width
        )));
    }
    let (gh, gw) = (image.height / patch_size, image.width / patch_size);
    let flat = patch_size * patch_size * 3;
    let mut data = Vec::with_capacity(gh * gw * flat);
    for pr in 0..gh {
        for pc in 0..gw {
            for r in 0..patch_size {
                let row = pr * patch_size + r;
                let start = (row * image.width + pc * patch_size) * 3;
                data.extend(image.pixels[start..start + patch_size * 3].iter().map(|&v| F::from_f64(v as f64)));
            }
        }
    }
    Tensor::new(vec![gh * gw, flat], data)
}

/// Patches projected by `tokens = patches · w + b`.
pub fn patchify<F: Scalar>(image: &BevImage, patch_size: usize, w: &Tensor<F>, b: &Tensor<F>) -> Result<PatchTokens<F>> {
    let patches = extract_patches::<F>(image, patch_size)?;
    let flat = patches.cols();
    if w.shape() != [flat, b.len()] {
        return Err(Error::Dimension {
            op: "patchify",
            lhs: w.shape().to_vec(),
            rhs: vec![flat, b.len()],
        });
    }
    let d = b.len();
    let mut out = Vec::with_capacity(patches.rows() * d);
    for p in 0..patches.rows() {
        let row = patches.row(p);
        for j in 0..d {
            let mut acc = b.data()[j];
            for (k, &v) in row.iter().enumerate() {
                acc = acc + v * w.at(k, j);
            }
            out.push(acc);
        }
    }
    Ok(PatchTokens {
        tokens: Tensor::new(vec![patches.rows(), d], out)?,
        patch_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Every channel value distinct: `(row * W + col) * 3 + ch`.
    fn unique(h: usize, w: usize) -> BevImage {
        let pixels = (0..h * w * 3).map(|i| i as f32).collect();
        BevImage::new(h, w, pixels, 1.0, [0.0, 0.0]).unwrap()
    }

    #[test]
    fn anchor_pin_identity_heading() {
        let img = unique(20, 20);
        let t = RigidTransform2D { translation: [-10.0, -10.0], ..RigidTransform2D::identity() };
        let crop = rotate_crop(&img, &t, 8, Sampling::Nearest).unwrap();
        assert_eq!(crop.pixel(4, 2), img.pixel(10, 10));
        // Ahead of the agent (+x) is to the right of the anchor.
        assert_eq!(crop.pixel(4, 3), img.pixel(10, 11));
        assert_eq!(crop.pixel(5, 2), img.pixel(11, 10));
    }

    #[test]
    fn zero_image_gives_zero_crop() {
        let img = BevImage::zeros(16, 16);
        let t = RigidTransform2D::from_angle(0.7, [-3.0, -5.0]).compose(&RigidTransform2D::identity());
        let t = RigidTransform2D { translation: t.rotate([-8.0, -8.0]), ..t };
        let crop = rotate_crop(&img, &t, 6, Sampling::Bilinear).unwrap();
        assert!(crop.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quarter_turn_anchor_and_neighbors() {
        let img = unique(30, 30);
        // Agent at (12, 7) heading +y: world +y becomes agent +x.
        let t = crate::geometry::heading_transform_points(&[[12.0, 6.0], [12.0, 7.0]]).unwrap();
        let crop = rotate_crop(&img, &t, 10, Sampling::Nearest).unwrap();
        assert_eq!(crop.pixel(5, 2), img.pixel(7, 12));
        // One pixel ahead in the crop is one pixel down (+y) in the source.
        assert_eq!(crop.pixel(5, 3), img.pixel(8, 12));
        // Agent-frame +y (left of heading) is world -x.
        assert_eq!(crop.pixel(6, 2), img.pixel(7, 11));
    }

    #[test]
    fn crop_errors() {
        let img = unique(4, 4);
        let t = RigidTransform2D { translation: [-1.0, -1.0], ..RigidTransform2D::identity() };
        assert!(matches!(rotate_crop(&img, &t, 1, Sampling::Nearest), Err(Error::Crop(_))));
        assert!(matches!(rotate_crop(&img, &t, 13, Sampling::Nearest), Err(Error::Crop(_))));
        let far = RigidTransform2D { translation: [-50.0, 0.0], ..RigidTransform2D::identity() };
        assert!(matches!(rotate_crop(&img, &far, 4, Sampling::Nearest), Err(Error::Crop(_))));
    }

    #[test]
    fn patch_count_and_order() {
        let img = unique(4, 4);
        let patches = extract_patches::<f64>(&img, 2).unwrap();
        assert_eq!(patches.shape(), &[4, 12]);
        // Top-left patch: pixels (0,0),(0,1),(1,0),(1,1), channel-last.
        let expected: Vec<f64> = vec![0., 1., 2., 3., 4., 5., 12., 13., 14., 15., 16., 17.];
        assert_eq!(patches.row(0), expected.as_slice());
        assert!(extract_patches::<f64>(&img, 3).is_err());
    }

    #[test]
    fn patchify_projects_by_hand() {
        let img = unique(4, 4);
        // Projection summing channel 0 of each pixel into output 0, and a bias.
        let mut w = vec![0.0; 12 * 2];
        for k in (0..12).step_by(3) {
            w[k * 2] = 1.0;
        }
        w[2 * 2 + 1] = 2.0;
        let w = Tensor::new(vec![12, 2], w).unwrap();
        let b = Tensor::new(vec![2], vec![0.5, -1.0]).unwrap();
        let tokens = patchify(&img, 2, &w, &b).unwrap();
        assert_eq!(tokens.tokens.shape(), &[4, 2]);
        assert_eq!(tokens.tokens.row(0), &[0.0 + 3.0 + 12.0 + 15.0 + 0.5, 2.0 * 2.0 - 1.0]);

        let zero = BevImage::zeros(4, 4);
        let t = patchify(&zero, 2, &w, &Tensor::zeros(&[2])).unwrap();
        assert!(t.tokens.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn raw_roundtrip() {
        let img = BevImage::new(2, 3, (0..18).map(|i| i as f32 / 255.0).collect(), 0.5, [1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        img.write_raw(&mut buf).unwrap();
        let back = BevImage::read_raw(buf.as_slice(), 0.5, [1.0, 2.0]).unwrap();
        assert_eq!(back.height(), 2);
        for (a, b) in back.pixels().iter().zip(img.pixels()) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
