//! Test images, PGM I/O, detector transfer curves applied per pixel, and
//! ring metrics of the segmented output.

mod pgm;

pub use pgm::{read_pgm, write_pgm, PgmVariant};

use thiserror::Error;

use crate::solver::SweepResult;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImagingError {
    #[error("not a P2/P5 graymap")]
    BadMagic,
    #[error("bad PGM header: {0}")]
    BadHeader(String),
    #[error("pixel data truncated: expected {expected} samples, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("unsupported maxval {0}, only 255 is accepted")]
    UnsupportedMaxval(usize),
    #[error("bad pixel sample `{0}`")]
    BadSample(String),
    #[error("voltage range [{vmin}, {vmax}] exceeds the transfer curve grid [{lo}, {hi}]")]
    LutRangeError {
        vmin: f64,
        vmax: f64,
        lo: f64,
        hi: f64,
    },
    #[error("no ring: {0}")]
    NoRing(String),
    #[error("{0}")]
    InvalidInput(String),
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGray {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl ImageGray {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(ImagingError::InvalidInput(format!(
                "{} pixels do not fill a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(ImageGray {
            width,
            height,
            pixels,
        })
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Square image of a centred Gaussian, peak 255.
pub fn gen_gaussian_image(size: usize, sigma: f64) -> Result<ImageGray, ImagingError> {
    if size < 3 {
        return Err(ImagingError::InvalidInput(format!(
            "size must be at least 3, got {size}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(ImagingError::InvalidInput(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let c = (size as f64 - 1.0) / 2.0;
    let mut pixels = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let (dx, dy) = (x as f64 - c, y as f64 - c);
            let r2 = dx * dx + dy * dy;
            pixels.push((255.0 * (-r2 / (2.0 * sigma * sigma)).exp()).round() as u8);
        }
    }
    ImageGray::new(size, size, pixels)
}

/// Affine map of a pixel value onto `[vmin, vmax]`.
pub fn pixel_to_voltage(p: u8, vmin: f64, vmax: f64) -> f64 {
    match p {
        0 => vmin,
        255 => vmax,
        _ => vmin + p as f64 / 255.0 * (vmax - vmin),
    }
}

/// Tabulated transfer curve on a uniform input grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseLut {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Where the curve came from, e.g. `detector config 1`.
    pub provenance: String,
}

impl ResponseLut {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, provenance: &str) -> Result<Self, ImagingError> {
        let bad = |m: String| Err(ImagingError::InvalidInput(m));
        if grid.len() < 2 || grid.len() != values.len() {
            return bad(format!(
                "{} grid points for {} values",
                grid.len(),
                values.len()
            ));
        }
        if grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return bad("transfer curve must be finite".into());
        }
        let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
        if !(step > 0.0) {
            return bad("grid must be strictly increasing".into());
        }
        for (k, w) in grid.windows(2).enumerate() {
            if !(w[1] > w[0]) || ((w[1] - w[0]) - step).abs() > 1e-6 * step {
                return bad(format!("grid is not uniform at point {k}"));
            }
        }
        Ok(ResponseLut {
            grid,
            values,
            provenance: provenance.to_string(),
        })
    }

    /// Output column `node` of a sweep against the swept input.
    pub fn from_sweep(s: &SweepResult, node: &str, provenance: &str) -> Result<Self, ImagingError> {
        let values = s
            .column(node)
            .ok_or_else(|| ImagingError::InvalidInput(format!("sweep has no node `{node}`")))?;
        Self::new(s.inputs(), values, provenance)
    }

    fn tolerance(&self) -> f64 {
        1e-9 * self.grid[0]
            .abs()
            .max(self.grid[self.grid.len() - 1].abs())
            .max(1.0)
    }

    /// Linear interpolation; inputs just outside the grid take the end values.
    pub fn eval(&self, v: f64) -> f64 {
        let n = self.grid.len();
        let step = (self.grid[n - 1] - self.grid[0]) / (n - 1) as f64;
        let k = (((v - self.grid[0]) / step).floor().max(0.0) as usize).min(n - 2);
        let (x0, x1) = (self.grid[k], self.grid[k + 1]);
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let t = ((v - x0) / (x1 - x0)).clamp(0.0, 1.0);
        y0 + t * (y1 - y0)
    }

    pub fn output_range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            })
    }
}

/// Maps every pixel through the transfer curve and rescales the curve's own
/// output range to 0..255. A constant curve yields an all-zero image.
pub fn apply_detector(
    img: &ImageGray,
    lut: &ResponseLut,
    vmin: f64,
    vmax: f64,
) -> Result<ImageGray, ImagingError> {
    if !(vmin < vmax) {
        return Err(ImagingError::InvalidInput(format!(
            "need vmin < vmax, got {vmin} and {vmax}"
        )));
    }
    let (lo, hi) = (lut.grid[0], lut.grid[lut.grid.len() - 1]);
    let tol = lut.tolerance();
    if vmin < lo - tol || vmax > hi + tol {
        return Err(ImagingError::LutRangeError { vmin, vmax, lo, hi });
    }
    let (omin, omax) = lut.output_range();
    let span = omax - omin;
    // One entry per gray level; the map is purely per pixel.
    let table: Vec<u8> = (0..=255u8)
        .map(|p| {
            if !(span > 0.0) {
                return 0;
            }
            let out = lut.eval(pixel_to_voltage(p, vmin, vmax));
            (255.0 * (out - omin) / span).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    let pixels = img.pixels.iter().map(|p| table[*p as usize]).collect();
    ImageGray::new(img.width, img.height, pixels)
}

/// Mean pixel value in 1-px annuli about the image centre. Bin `k` holds the
/// pixels whose distance rounds to `k`, out to the inscribed circle.
pub fn radial_profile(img: &ImageGray) -> Result<Vec<f64>, ImagingError> {
    if img.width != img.height {
        return Err(ImagingError::InvalidInput(format!(
            "ring metrics need a square image, got {}x{}",
            img.width, img.height
        )));
    }
    let c = (img.width as f64 - 1.0) / 2.0;
    let bins = c.floor() as usize + 1;
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for y in 0..img.height {
        for x in 0..img.width {
            let r = (x as f64 - c).hypot(y as f64 - c).round() as usize;
            if r < bins {
                sum[r] += img.get(x, y) as f64;
                count[r] += 1;
            }
        }
    }
    Ok(sum
        .iter()
        .zip(&count)
        .map(|(s, n)| s / (*n).max(1) as f64)
        .collect())
}

/// `radius,mean` rows of the radial profile.
pub fn radial_profile_csv(profile: &[f64]) -> String {
    let mut out = String::from("radius,mean\n");
    for (r, m) in profile.iter().enumerate() {
        out.push_str(&format!("{r},{}\n", crate::cli::format_number(*m)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingMetrics {
    pub peak_radius: f64,
    /// Full width at half maximum of the radial profile, px.
    pub thickness: f64,
    pub peak_brightness: u8,
}

/// Peak radius, thickness and brightness of a bright ring.
pub fn ring_metrics(img: &ImageGray) -> Result<RingMetrics, ImagingError> {
    let p = radial_profile(img)?;
    let (lo, hi) = p
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
    if !(hi > lo) {
        return Err(ImagingError::NoRing("flat radial profile".into()));
    }
    let peak = p
        .iter()
        .position(|v| *v == hi)
        .expect("maximum is in the profile");
    if peak == 0 {
        return Err(ImagingError::NoRing("profile peaks at the centre".into()));
    }
    let half = 0.5 * hi;
    let at = |k: usize, j: usize| k as f64 + (half - p[k]) / (p[j] - p[k]) * (j as f64 - k as f64);
    let left = (1..=peak)
        .rev()
        .find(|&k| p[k - 1] < half)
        .map_or(0.0, |k| at(k - 1, k));
    let right = (peak..p.len() - 1)
        .find(|&k| p[k + 1] < half)
        .map_or((p.len() - 1) as f64, |k| at(k, k + 1));
    Ok(RingMetrics {
        peak_radius: peak as f64,
        thickness: right - left,
        peak_brightness: hi.round() as u8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn annulus(size: usize, r0: f64, r1: f64) -> ImageGray {
        let c = (size as f64 - 1.0) / 2.0;
        let mut px = Vec::new();
        for y in 0..size {
            for x in 0..size {
                let r = (x as f64 - c).hypot(y as f64 - c);
                px.push(if (r0..=r1).contains(&r) { 255 } else { 0 });
            }
        }
        ImageGray::new(size, size, px).unwrap()
    }

    fn transpose(img: &ImageGray) -> ImageGray {
        let mut px = vec![0; img.pixels.len()];
        for y in 0..img.height {
            for x in 0..img.width {
                px[x * img.height + y] = img.get(x, y);
            }
        }
        ImageGray::new(img.height, img.width, px).unwrap()
    }

    #[test]
    fn gaussian_values() {
        assert!(gen_gaussian_image(3, 1000.0)
            .unwrap()
            .pixels
            .iter()
            .all(|p| *p == 255));
        let g = gen_gaussian_image(65, 10.0).unwrap();
        assert_eq!(g.get(32, 32), 255);
        assert_eq!(g.get(42, 32), 155);
        assert!(gen_gaussian_image(2, 1.0).is_err());
        assert!(gen_gaussian_image(9, 0.0).is_err());
    }

    #[test]
    fn gaussian_has_fourfold_symmetry() {
        let g = gen_gaussian_image(33, 5.0).unwrap();
        let n = g.width - 1;
        for y in 0..g.height {
            for x in 0..g.width {
                let v = g.get(x, y);
                assert_eq!(v, g.get(n - x, y));
                assert_eq!(v, g.get(x, n - y));
                assert_eq!(v, g.get(y, x));
            }
        }
    }

    #[test]
    fn voltage_mapping() {
        assert_eq!(pixel_to_voltage(0, 0.3, 2.9), 0.3);
        assert_eq!(pixel_to_voltage(255, 0.3, 2.9), 2.9);
        assert!((pixel_to_voltage(51, 0.0, 3.0) - 0.6).abs() < 1e-15);
    }

    fn identity_lut() -> ResponseLut {
        let grid: Vec<f64> = (0..=60).map(|k| k as f64 * 0.05).collect();
        ResponseLut::new(grid.clone(), grid, "identity").unwrap()
    }

    #[test]
    fn identity_lut_preserves_image() {
        let g = gen_gaussian_image(65, 10.0).unwrap();
        assert_eq!(apply_detector(&g, &identity_lut(), 0.0, 3.0).unwrap(), g);
    }

    #[test]
    fn constant_lut_maps_to_zero() {
        let lut = ResponseLut::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.7; 4], "flat").unwrap();
        let g = gen_gaussian_image(17, 3.0).unwrap();
        assert!(apply_detector(&g, &lut, 0.0, 3.0)
            .unwrap()
            .pixels
            .iter()
            .all(|p| *p == 0));
    }

    #[test]
    fn lut_range_is_enforced() {
        let g = gen_gaussian_image(5, 1.0).unwrap();
        let e = apply_detector(&g, &identity_lut(), 0.0, 3.5);
        assert!(matches!(e, Err(ImagingError::LutRangeError { .. })));
        assert!(ResponseLut::new(vec![0.0, 1.0, 3.0], vec![0.0; 3], "x").is_err());
        assert!(ResponseLut::new(vec![0.0], vec![0.0], "x").is_err());
    }

    #[test]
    fn band_lut_turns_gaussian_into_ring() {
        let grid: Vec<f64> = (0..=60).map(|k| k as f64 * 0.05).collect();
        let values = grid
            .iter()
            .map(|v| if (1.0..=2.0).contains(v) { 1.0 } else { 0.0 })
            .collect();
        let lut = ResponseLut::new(grid, values, "band").unwrap();
        let out = apply_detector(
            &gen_gaussian_image(129, 129.0 / 6.0).unwrap(),
            &lut,
            0.0,
            3.0,
        )
        .unwrap();
        assert_eq!(out.get(64, 64), 0);
        assert_eq!(out.get(0, 0), 0);
        let m = ring_metrics(&out).unwrap();
        assert!(m.peak_radius > 5.0 && m.peak_radius < 60.0, "{m:?}");
    }

    #[test]
    fn annulus_metrics() {
        let a = annulus(61, 10.0, 14.0);
        let m = ring_metrics(&a).unwrap();
        assert!((10.0..=14.0).contains(&m.peak_radius), "{m:?}");
        assert!((m.thickness - 4.0).abs() <= 1.0, "{m:?}");
        assert_eq!(m.peak_brightness, 255);
        assert_eq!(ring_metrics(&transpose(&a)).unwrap(), m);
    }

    #[test]
    fn blobs_and_flat_images_have_no_ring() {
        assert!(matches!(
            ring_metrics(&gen_gaussian_image(65, 10.0).unwrap()),
            Err(ImagingError::NoRing(_))
        ));
        let flat = ImageGray::new(9, 9, vec![0; 81]).unwrap();
        assert!(matches!(ring_metrics(&flat), Err(ImagingError::NoRing(_))));
        let wide = ImageGray::new(3, 2, vec![0; 6]).unwrap();
        assert!(matches!(
            ring_metrics(&wide),
            Err(ImagingError::InvalidInput(_))
        ));
    }

    #[test]
    fn profile_csv_layout() {
        let csv = radial_profile_csv(&[255.0, 0.5]);
        assert!(csv.starts_with("radius,mean\n0,"));
        assert_eq!(csv.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn per_pixel_map_commutes_with_permutation(seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let g = gen_gaussian_image(21, 4.0).unwrap();
            let grid: Vec<f64> = (0..=30).map(|k| k as f64 * 0.1).collect();
            let values: Vec<f64> = grid.iter().map(|v| (v * 2.0).sin()).collect();
            let lut = ResponseLut::new(grid, values, "sine").unwrap();
            let mut order: Vec<usize> = (0..g.pixels.len()).collect();
            order.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
            let shuffled = ImageGray::new(21, 21, order.iter().map(|k| g.pixels[*k]).collect()).unwrap();
            let a = apply_detector(&g, &lut, 0.0, 3.0).unwrap();
            let b = apply_detector(&shuffled, &lut, 0.0, 3.0).unwrap();
            for (j, k) in order.iter().enumerate() {
                prop_assert_eq!(b.pixels[j], a.pixels[*k]);
            }
        }

        #[test]
        fn larger_lut_never_darkens(bump in 0.0f64..1.0, at in 0usize..31) {
            // Same output range, pointwise larger curve.
            let grid: Vec<f64> = (0..=30).map(|k| k as f64 * 0.1).collect();
            let base: Vec<f64> = grid.iter().map(|v| 0.5 + 0.4 * (v * 3.0).sin()).collect();
            let mut up = base.clone();
            up[at] = (up[at] + bump).min(0.9);
            let mut base = base;
            base.push(0.0);
            base.push(1.0);
            up.push(0.0);
            up.push(1.0);
            let mut g2 = grid.clone();
            g2.extend([3.1, 3.2]);
            let a = ResponseLut::new(g2.clone(), base, "a").unwrap();
            let b = ResponseLut::new(g2, up, "b").unwrap();
            let img = gen_gaussian_image(15, 3.0).unwrap();
            let pa = apply_detector(&img, &a, 0.0, 3.0).unwrap();
            let pb = apply_detector(&img, &b, 0.0, 3.0).unwrap();
            for (x, y) in pa.pixels.iter().zip(&pb.pixels) {
                prop_assert!(y >= x);
            }
        }
    }
}
