//! Slice preprocessing on grayscale pixel grids: Otsu thresholding, binary
//! masking, largest-component cropping and align-corners bilinear resizing.
//!
//! Images are row-major `f64` grids tagged with their intensity range so that
//! resampled (non-integer) results stay exact until written out.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declared intensity range of an image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Depth {
    /// `[0, 255]`
    Byte,
    /// `[0, 1]`
    Unit,
}

impl Depth {
    pub fn max_value(self) -> f64 {
        match self {
            Depth::Byte => 255.0,
            Depth::Unit => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    depth: Depth,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, depth: Depth, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage("zero dimension".into()));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch { expected: width * height, actual: data.len() });
        }
        let max = depth.max_value();
        if let Some(v) = data.iter().find(|v| !(0.0..=max).contains(*v)) {
            return Err(Error::InvalidImage(format!("intensity {v} outside [0, {max}]")));
        }
        Ok(Self { width, height, depth, data })
    }

    pub fn from_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(width, height, Depth::Byte, bytes.iter().map(|b| f64::from(*b)).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> Depth {
        self.depth
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Intensities rounded and clamped to 8 bits.
    pub fn to_bytes(&self) -> Vec<u8> {
        let scale = 255.0 / self.depth.max_value();
        self.data.iter().map(|v| (v * scale).round().clamp(0.0, 255.0) as u8).collect()
    }

    fn min_max(&self) -> (f64, f64) {
        self.data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch { expected: width * height, actual: bits.len() });
        }
        Ok(Self { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

/// Inclusive pixel bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BoundingBox {
    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }
}

pub fn histogram(img: &GrayImage) -> [u64; 256] {
    let mut h = [0u64; 256];
    for b in img.to_bytes() {
        h[b as usize] += 1;
    }
    h
}

/// Between-class variance of the split `{< t} | {>= t}` of a 256-bin
/// histogram, up to the constant factor `1/N²`.
fn between_class_variance(hist: &[u64; 256], t: usize, total: u64, total_sum: u64) -> f64 {
    let n0: u64 = hist[..t].iter().sum();
    let n1 = total - n0;
    if n0 == 0 || n1 == 0 {
        return 0.0;
    }
    let s0: u64 = hist[..t].iter().enumerate().map(|(i, c)| i as u64 * c).sum();
    // n0*n1*(m0 - m1)^2 with m0 = s0/n0 and m1 = (S - s0)/n1, rearranged to
    // keep the numerator an exact integer.
    let d = total as i128 * s0 as i128 - n0 as i128 * total_sum as i128;
    let d = d as f64;
    d * d / (n0 as f64 * n1 as f64)
}

/// Otsu threshold over the 8-bit histogram.
///
/// Pixels with intensity `>= T` form the foreground class. Among maximizers of
/// the between-class variance the lowest `T` wins.
pub fn otsu_threshold(img: &GrayImage) -> Result<u8> {
    if img.depth != Depth::Byte {
        return Err(Error::InvalidImage("Otsu thresholding needs an 8-bit image".into()));
    }
    let hist = histogram(img);
    if hist.iter().filter(|c| **c > 0).count() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(i, c)| i as u64 * c).sum();
    let mut best_t = 1;
    let mut best = f64::NEG_INFINITY;
    for t in 1..256 {
        let v = between_class_variance(&hist, t, total, total_sum);
        if v > best * (1.0 + 1e-12) {
            best = v;
            best_t = t;
        }
    }
    Ok(best_t as u8)
}

/// Foreground mask: set where intensity `>= threshold`.
pub fn make_mask(img: &GrayImage, threshold: f64) -> BinaryMask {
    BinaryMask { width: img.width, height: img.height, bits: img.data.iter().map(|v| *v >= threshold).collect() }
}

/// Pixelwise product of image and mask.
pub fn apply_mask(img: &GrayImage, mask: &BinaryMask) -> Result<GrayImage> {
    check_same_size(img, mask)?;
    let data = img.data.iter().zip(&mask.bits).map(|(v, m)| if *m { *v } else { 0.0 }).collect();
    Ok(GrayImage { data, ..img.clone() })
}

fn check_same_size(img: &GrayImage, mask: &BinaryMask) -> Result<()> {
    if img.width != mask.width || img.height != mask.height {
        return Err(Error::DimensionMismatch {
            expected: img.width * img.height,
            actual: mask.width * mask.height,
        });
    }
    Ok(())
}

/// Labels 4-connected components of the mask in raster order.
///
/// Returns the label grid (`0` = background, components numbered from 1) and
/// the pixel count of each component.
pub fn connected_components(mask: &BinaryMask) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = (mask.width, mask.height);
    let mut labels = vec![0u32; w * h];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.bits[start] || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        let mut size = 0;
        labels[start] = label;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if mask.bits[j] && labels[j] == 0 {
                    labels[j] = label;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Bounding box of the largest 4-connected component; the first component in
/// raster order wins ties.
pub fn foreground_bounds(mask: &BinaryMask) -> Result<BoundingBox> {
    let (labels, sizes) = connected_components(mask);
    let (best, _) = sizes
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, usize)>, (i, s)| match acc {
            Some((_, bs)) if bs >= *s => acc,
            _ => Some((i, *s)),
        })
        .ok_or(Error::NoForeground)?;
    let label = best as u32 + 1;
    let mut bb = BoundingBox { x0: usize::MAX, y0: usize::MAX, x1: 0, y1: 0 };
    for (i, l) in labels.iter().enumerate() {
        if *l == label {
            let (x, y) = (i % mask.width, i / mask.width);
            bb.x0 = bb.x0.min(x);
            bb.y0 = bb.y0.min(y);
            bb.x1 = bb.x1.max(x);
            bb.y1 = bb.y1.max(y);
        }
    }
    Ok(bb)
}

pub fn crop(img: &GrayImage, bb: BoundingBox) -> Result<GrayImage> {
    if bb.x1 >= img.width || bb.y1 >= img.height || bb.x0 > bb.x1 || bb.y0 > bb.y1 {
        return Err(Error::InvalidImage(format!("crop box {bb:?} outside image")));
    }
    let mut data = Vec::with_capacity(bb.width() * bb.height());
    for y in bb.y0..=bb.y1 {
        data.extend_from_slice(&img.data[y * img.width + bb.x0..=y * img.width + bb.x1]);
    }
    Ok(GrayImage { width: bb.width(), height: bb.height(), depth: img.depth, data })
}

/// Crops the image to the bounding box of the mask's largest component.
pub fn crop_foreground(img: &GrayImage, mask: &BinaryMask) -> Result<GrayImage> {
    check_same_size(img, mask)?;
    crop(img, foreground_bounds(mask)?)
}

/// Align-corners source coordinate of output index `i`.
fn source_coord(i: usize, in_len: usize, out_len: usize) -> f64 {
    if out_len == 1 {
        0.0
    } else {
        (i * (in_len - 1)) as f64 / (out_len - 1) as f64
    }
}

/// Bilinear resampling with the align-corners convention: output corners sit
/// exactly on input corners.
pub fn bilinear_resize(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidImage("output dimension must be >= 1".into()));
    }
    let (lo, hi) = img.min_max();
    let (w, h) = (img.width, img.height);
    let mut data = Vec::with_capacity(out_w * out_h);
    for yo in 0..out_h {
        let sy = source_coord(yo, h, out_h);
        let y0 = (sy.floor() as usize).min(h - 1);
        let y1 = (y0 + 1).min(h - 1);
        let fy = sy - y0 as f64;
        for xo in 0..out_w {
            let sx = source_coord(xo, w, out_w);
            let x0 = (sx.floor() as usize).min(w - 1);
            let x1 = (x0 + 1).min(w - 1);
            let fx = sx - x0 as f64;
            let top = (1.0 - fx) * img.get(x0, y0) + fx * img.get(x1, y0);
            let bottom = (1.0 - fx) * img.get(x0, y1) + fx * img.get(x1, y1);
            data.push(((1.0 - fy) * top + fy * bottom).clamp(lo, hi));
        }
    }
    Ok(GrayImage { width: out_w, height: out_h, depth: img.depth, data })
}

/// Processing record for one slice image.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrepRecord {
    pub threshold: u8,
    pub crop: BoundingBox,
    pub foreground_pixels: usize,
}

/// Full slice chain: Otsu mask, masking, largest-component crop, resize.
pub fn preprocess(img: &GrayImage, out_w: usize, out_h: usize) -> Result<(GrayImage, PrepRecord)> {
    let threshold = otsu_threshold(img)?;
    let mask = make_mask(img, f64::from(threshold));
    let masked = apply_mask(img, &mask)?;
    let bb = foreground_bounds(&mask)?;
    let cropped = crop(&masked, bb)?;
    let resized = bilinear_resize(&cropped, out_w, out_h)?;
    Ok((resized, PrepRecord { threshold, crop: bb, foreground_pixels: mask.count() }))
}

/// Encodes an image as binary PGM (`P5`, maxval 255).
pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.to_bytes());
    out
}

/// Decodes a binary PGM (`P5`) with maxval at most 255.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let bad = |m: &str| Error::InvalidImage(format!("PGM: {m}"));
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // skip whitespace and comments
        while pos < bytes.len() {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else if bytes[pos].is_ascii_whitespace() {
                pos += 1;
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("only binary P5 is supported"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (w, h, maxval) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(bad("maxval must be in 1..=255"));
    }
    // exactly one whitespace byte separates header and raster
    pos += 1;
    let raster = bytes.get(pos..pos + w * h).ok_or_else(|| bad("truncated raster"))?;
    let scale = 255.0 / maxval as f64;
    let data = raster.iter().map(|b| (f64::from(*b) * scale).min(255.0)).collect();
    GrayImage::new(w, h, Depth::Byte, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(w: usize, h: usize, v: &[u8]) -> GrayImage {
        GrayImage::from_bytes(w, h, v).unwrap()
    }

    #[test]
    fn otsu_splits_bimodal() {
        let data: Vec<u8> = (0..64).map(|i| if i < 32 { 10 } else { 200 }).collect();
        let t = otsu_threshold(&img(8, 8, &data)).unwrap();
        assert!(10 < t && t <= 200, "t = {t}");
        // lowest maximizer: every split between the modes is equally good
        assert_eq!(t, 11);
    }

    #[test]
    fn otsu_rejects_constant() {
        assert!(matches!(otsu_threshold(&img(3, 3, &[77; 9])), Err(Error::DegenerateHistogram)));
    }

    #[test]
    fn mask_examples() {
        let checker: Vec<u8> = (0..16).map(|i| if (i % 4 + i / 4) % 2 == 0 { 0 } else { 255 }).collect();
        let m = make_mask(&img(4, 4, &checker), 128.0);
        assert!(m.bits().iter().zip(&checker).all(|(b, v)| *b == (*v == 255)));
        assert_eq!(make_mask(&img(2, 1, &[5, 6]), 5.0).count(), 2);
        assert_eq!(make_mask(&img(2, 1, &[5, 6]), 7.0).count(), 0);
    }

    #[test]
    fn apply_mask_product() {
        let i = img(2, 2, &[10, 20, 30, 40]);
        let m = BinaryMask::new(2, 2, vec![true, false, false, true]).unwrap();
        assert_eq!(apply_mask(&i, &m).unwrap().data(), &[10.0, 0.0, 0.0, 40.0]);
        let wrong = BinaryMask::new(1, 4, vec![true; 4]).unwrap();
        assert!(apply_mask(&i, &wrong).is_err());
    }

    #[test]
    fn crop_single_blob_and_full_mask() {
        let mut bits = vec![false; 25];
        for (x, y) in [(1, 1), (2, 1), (2, 2), (3, 2), (2, 3)] {
            bits[y * 5 + x] = true;
        }
        let m = BinaryMask::new(5, 5, bits).unwrap();
        let i = GrayImage::new(5, 5, Depth::Byte, (0..25).map(f64::from).collect()).unwrap();
        let c = crop_foreground(&i, &m).unwrap();
        assert_eq!((c.width(), c.height()), (3, 3));
        assert_eq!(c.get(0, 0), 6.0);
        let full = BinaryMask::new(5, 5, vec![true; 25]).unwrap();
        assert_eq!(crop_foreground(&i, &full).unwrap(), i);
        let empty = BinaryMask::new(5, 5, vec![false; 25]).unwrap();
        assert!(matches!(crop_foreground(&i, &empty), Err(Error::NoForeground)));
    }

    #[test]
    fn resize_examples() {
        let c = GrayImage::new(3, 2, Depth::Byte, vec![42.0; 6]).unwrap();
        assert!(bilinear_resize(&c, 7, 5).unwrap().data().iter().all(|v| *v == 42.0));
        let i = GrayImage::new(2, 2, Depth::Byte, vec![0.0, 100.0, 50.0, 150.0]).unwrap();
        assert_eq!(bilinear_resize(&i, 2, 2).unwrap(), i);
        let up = bilinear_resize(&i, 3, 3).unwrap();
        assert_eq!(up.get(1, 1), 75.0);
        assert_eq!(up.get(2, 2), 150.0);
        assert!(bilinear_resize(&i, 0, 3).is_err());
    }

    #[test]
    fn pgm_round_trip_with_comment() {
        let i = img(3, 2, &[0, 1, 2, 253, 254, 255]);
        let bytes = write_pgm(&i);
        assert_eq!(read_pgm(&bytes).unwrap(), i);
        let mut commented = b"P5\n# made by hand\n3 2\n255\n".to_vec();
        commented.extend([0, 1, 2, 253, 254, 255]);
        assert_eq!(read_pgm(&commented).unwrap(), i);
        assert!(read_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(read_pgm(b"P5\n4 4\n255\n\x00").is_err());
    }

    #[test]
    fn preprocess_chain() {
        // dark frame, bright 4x4 square, and a stray bright pixel
        let mut data = vec![5u8; 100];
        for y in 3..7 {
            for x in 2..6 {
                data[y * 10 + x] = 180;
            }
        }
        data[99] = 200;
        let (out, rec) = preprocess(&img(10, 10, &data), 8, 8).unwrap();
        assert_eq!(rec.crop, BoundingBox { x0: 2, y0: 3, x1: 5, y1: 6 });
        assert!(out.data().iter().all(|v| *v == 180.0));
    }
}
