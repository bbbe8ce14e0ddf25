use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Windowed SSIM configuration.
///
/// Uniform (box) windows, fully inside the image, sliding by `stride`.
/// `k1`/`k2` are the usual stabilizers; `dynamic_range` is 1 because
/// intensities live in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SsimParams {
    pub window_size: usize,
    pub stride: usize,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window_size: 8,
            stride: 1,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    pub fn validate_for(&self, image_size: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSsimParams(msg));
        if self.window_size < 2 {
            return fail(format!("window_size {} < 2", self.window_size));
        }
        if self.window_size > image_size {
            return fail(format!(
                "window_size {} exceeds image size {image_size}",
                self.window_size
            ));
        }
        if self.stride == 0 {
            return fail("stride must be at least 1".into());
        }
        if !(self.k1 > 0.0) || !(self.k2 > 0.0) {
            return fail(format!("k1 and k2 must be positive, got {} / {}", self.k1, self.k2));
        }
        if !(self.dynamic_range > 0.0) {
            return fail(format!("dynamic_range must be positive, got {}", self.dynamic_range));
        }
        Ok(())
    }
}

/// Summed-area table: `t[r][c]` holds the sum of all pixels above and left
/// of (r, c) exclusive, so any window sum is four lookups.
struct Integral {
    size: usize,
    table: Vec<f64>,
}

impl Integral {
    fn build(size: usize, values: impl Fn(usize) -> f64) -> Self {
        let n = size + 1;
        let mut table = vec![0.0; n * n];
        for r in 0..size {
            let mut row_sum = 0.0;
            for c in 0..size {
                row_sum += values(r * size + c);
                table[(r + 1) * n + (c + 1)] = table[r * n + (c + 1)] + row_sum;
            }
        }
        Self { size, table }
    }

    /// Sum over rows [r0, r0+w) and cols [c0, c0+w).
    fn window_sum(&self, r0: usize, c0: usize, w: usize) -> f64 {
        let n = self.size + 1;
        let (r1, c1) = (r0 + w, c0 + w);
        self.table[r1 * n + c1] - self.table[r0 * n + c1] - self.table[r1 * n + c0]
            + self.table[r0 * n + c0]
    }
}

/// Mean structural similarity over all windows, in `[-1, 1]`.
///
/// Uses summed-area tables so cost is independent of window size; each
/// window needs population moments only. The formula per window is
/// `((2 mu_a mu_b + C1)(2 cov + C2)) / ((mu_a^2 + mu_b^2 + C1)(var_a + var_b + C2))`
/// and the result is the plain mean over windows in scan order.
pub fn ssim(a: &GrayImage, b: &GrayImage, params: &SsimParams) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::ImageDimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    let size = a.size();
    params.validate_for(size)?;

    let da = a.data();
    let db = b.data();
    let sum_a = Integral::build(size, |i| da[i]);
    let sum_b = Integral::build(size, |i| db[i]);
    let sum_aa = Integral::build(size, |i| da[i] * da[i]);
    let sum_bb = Integral::build(size, |i| db[i] * db[i]);
    let sum_ab = Integral::build(size, |i| da[i] * db[i]);

    let w = params.window_size;
    let n = (w * w) as f64;
    let c1 = params.c1();
    let c2 = params.c2();

    let mut total = 0.0;
    let mut windows = 0u64;
    let mut r0 = 0;
    while r0 + w <= size {
        let mut c0 = 0;
        while c0 + w <= size {
            let mu_a = sum_a.window_sum(r0, c0, w) / n;
            let mu_b = sum_b.window_sum(r0, c0, w) / n;
            // Population moments; can dip a hair below zero from
            // cancellation, which the C2 stabilizer absorbs.
            let var_a = sum_aa.window_sum(r0, c0, w) / n - mu_a * mu_a;
            let var_b = sum_bb.window_sum(r0, c0, w) / n - mu_b * mu_b;
            let cov = sum_ab.window_sum(r0, c0, w) / n - mu_a * mu_b;
            let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            windows += 1;
            c0 += params.stride;
        }
        r0 += params.stride;
    }
    Ok(total / windows as f64)
}

/// The dissimilarity used to score imagined futures: `1 - ssim`, in `[0, 2]`.
pub fn distance(a: &GrayImage, b: &GrayImage, params: &SsimParams) -> Result<f64> {
    Ok(1.0 - ssim(a, b, params)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    /// Direct two-pass window statistics, no shared tables. Deliberately a
    /// different algorithm from the production path so the two only agree
    /// if both are right.
    fn naive_ssim(a: &GrayImage, b: &GrayImage, p: &SsimParams) -> f64 {
        assert!(a.same_dims(b));
        let size = a.size();
        let w = p.window_size;
        let n = (w * w) as f64;
        let (c1, c2) = (p.c1(), p.c2());
        let mut total = 0.0;
        let mut count = 0u64;
        let mut r0 = 0;
        while r0 + w <= size {
            let mut c0 = 0;
            while c0 + w <= size {
                let mut mu_a = 0.0;
                let mut mu_b = 0.0;
                for r in r0..r0 + w {
                    for c in c0..c0 + w {
                        mu_a += a.get(r, c);
                        mu_b += b.get(r, c);
                    }
                }
                mu_a /= n;
                mu_b /= n;
                let mut var_a = 0.0;
                let mut var_b = 0.0;
                let mut cov = 0.0;
                for r in r0..r0 + w {
                    for c in c0..c0 + w {
                        let da = a.get(r, c) - mu_a;
                        let db = b.get(r, c) - mu_b;
                        var_a += da * da;
                        var_b += db * db;
                        cov += da * db;
                    }
                }
                var_a /= n;
                var_b /= n;
                cov /= n;
                total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                    / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
                count += 1;
                c0 += p.stride;
            }
            r0 += p.stride;
        }
        total / count as f64
    }

    fn random_image(size: usize, seed: u64) -> GrayImage {
        let mut rng = rng_from_seed(seed);
        GrayImage::from_fn(size, |_, _| rng.gen_range(0.0..=1.0)).unwrap()
    }

    #[test]
    fn identical_images_score_one() {
        for seed in 0..5 {
            let img = random_image(16, seed);
            let s = ssim(&img, &img, &SsimParams::default()).unwrap();
            assert!((s - 1.0).abs() < 1e-12, "got {s}");
        }
    }

    #[test]
    fn constant_images_match_closed_form() {
        let a = GrayImage::filled(16, 0.5).unwrap();
        let b = GrayImage::filled(16, 0.25).unwrap();
        // Variances vanish, so the contrast factor is exactly 1 and the
        // score reduces to the luminance term.
        let expected = (2.0 * 0.5 * 0.25 + 1e-4) / (0.5 * 0.5 + 0.25 * 0.25 + 1e-4);
        let s = ssim(&a, &b, &SsimParams::default()).unwrap();
        assert!((s - expected).abs() < 1e-9, "got {s}, want {expected}");
    }

    #[test]
    fn checkerboard_against_inverse_is_negative() {
        let a = GrayImage::from_fn(16, |r, c| ((r + c) % 2) as f64).unwrap();
        let b = GrayImage::from_fn(16, |r, c| ((r + c + 1) % 2) as f64).unwrap();
        let p = SsimParams::default();
        let s = ssim(&a, &b, &p).unwrap();
        assert!(s < -0.9, "inverted structure should score deeply negative, got {s}");
        let oracle = naive_ssim(&a, &b, &p);
        assert!((s - oracle).abs() < 1e-12, "got {s}, oracle {oracle}");
        // Every window: means 0.5, variances 0.25, covariance -0.25.
        let expected = (0.5 + 1e-4) * (-0.5 + 9e-4) / ((0.5 + 1e-4) * (0.5 + 9e-4));
        assert!((s - expected).abs() < 1e-12);
    }

    #[test]
    fn matches_direct_summation_oracle_on_random_pairs() {
        let p = SsimParams::default();
        for seed in 0..100 {
            let a = random_image(16, 1000 + seed);
            let b = random_image(16, 2000 + seed);
            let fast = ssim(&a, &b, &p).unwrap();
            let slow = naive_ssim(&a, &b, &p);
            assert!(
                (fast - slow).abs() < 1e-9,
                "seed {seed}: fast {fast} vs oracle {slow}"
            );
        }
    }

    #[test]
    fn strided_windows_match_oracle() {
        for stride in [2, 3, 5] {
            let p = SsimParams {
                stride,
                ..SsimParams::default()
            };
            let a = random_image(17, 42 + stride as u64);
            let b = random_image(17, 142 + stride as u64);
            let fast = ssim(&a, &b, &p).unwrap();
            let slow = naive_ssim(&a, &b, &p);
            assert!((fast - slow).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetry_is_bit_exact() {
        for seed in 0..10 {
            let a = random_image(16, 3000 + seed);
            let b = random_image(16, 4000 + seed);
            let ab = ssim(&a, &b, &SsimParams::default()).unwrap();
            let ba = ssim(&b, &a, &SsimParams::default()).unwrap();
            assert_eq!(ab.to_bits(), ba.to_bits());
        }
    }

    #[test]
    fn perturbing_one_pixel_drops_below_one() {
        let a = random_image(16, 9);
        let mut data = a.data().to_vec();
        data[3 * 16 + 7] = (data[3 * 16 + 7] + 0.25).min(1.0) - 0.001;
        let b = GrayImage::new(16, 16, data).unwrap();
        let s = ssim(&a, &b, &SsimParams::default()).unwrap();
        assert!(s < 1.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = GrayImage::filled(16, 0.5).unwrap();
        let b = GrayImage::filled(8, 0.5).unwrap();
        assert!(matches!(
            ssim(&a, &b, &SsimParams::default()),
            Err(Error::ImageDimensionMismatch(..))
        ));
    }

    #[test]
    fn bad_params_are_rejected() {
        let img = GrayImage::filled(8, 0.5).unwrap();
        let cases = [
            SsimParams {
                window_size: 1,
                ..SsimParams::default()
            },
            SsimParams {
                window_size: 9,
                ..SsimParams::default()
            },
            SsimParams {
                stride: 0,
                ..SsimParams::default()
            },
            SsimParams {
                k1: 0.0,
                ..SsimParams::default()
            },
            SsimParams {
                k2: -0.03,
                ..SsimParams::default()
            },
        ];
        for p in cases {
            assert!(ssim(&img, &img, &p).is_err(), "params {p:?} should fail");
        }
    }

    #[test]
    fn distance_is_one_minus_ssim() {
        let a = random_image(16, 5);
        let b = random_image(16, 6);
        let p = SsimParams::default();
        let s = ssim(&a, &b, &p).unwrap();
        let d = distance(&a, &b, &p).unwrap();
        assert_eq!(d, 1.0 - s);
        assert_eq!(distance(&a, &a, &p).unwrap(), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn score_stays_in_range(seed in 0u64..1000, size in 8usize..20) {
            let a = random_image(size, seed);
            let b = random_image(size, seed.wrapping_add(77));
            let s = ssim(&a, &b, &SsimParams::default()).unwrap();
            prop_assert!((-1.0..=1.0).contains(&s));
        }

        #[test]
        fn distance_stays_in_range(seed in 0u64..1000) {
            let a = random_image(12, seed);
            let b = random_image(12, seed.wrapping_add(13));
            let d = distance(&a, &b, &SsimParams::default()).unwrap();
            prop_assert!((0.0..=2.0).contains(&d));
        }
    }
}
