//! Image-quality metrics and training-loss diagnostics for synthesized
//! slices: PSNR, single-scale SSIM, and the least-squares GAN objective
//! (adversarial + L1 + perceptual terms).

use crate::{Error, Result};
use serde::Serialize;

/// Peak signal-to-noise ratio in dB. Identical inputs give +inf.
pub fn psnr(reference: &[f64], test: &[f64], peak: f64) -> Result<f64> {
    check_pair(reference, test)?;
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "psnr peak must be a positive finite value, got {peak}"
        )));
    }
    let mse = reference
        .iter()
        .zip(test)
        .map(|(&r, &t)| (r - t) * (r - t))
        .sum::<f64>()
        / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW as f64 - 1.0) / 2.0;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable valid-mode Gaussian blur: (w, h) -> (w-10, h-10).
fn blur_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - (SSIM_WINDOW - 1);
    let oh = h - (SSIM_WINDOW - 1);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            let mut acc = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                acc += kv * src[y * w + x + i];
            }
            tmp[y * ow + x] = acc;
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (j, &kv) in k.iter().enumerate() {
                acc += kv * tmp[(y + j) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Mean single-scale SSIM over an 11x11 Gaussian-weighted sliding window
/// (sigma 1.5, valid mode). `dynamic_range` is the assumed intensity span L;
/// stabilizers are C1 = (0.01 L)^2 and C2 = (0.03 L)^2.
pub fn ssim(
    reference: &[f64],
    test: &[f64],
    width: usize,
    height: usize,
    dynamic_range: f64,
) -> Result<f64> {
    check_pair(reference, test)?;
    if reference.len() != width * height {
        return Err(Error::ShapeMismatch {
            left: reference.len(),
            right: width * height,
        });
    }
    if width < SSIM_WINDOW || height < SSIM_WINDOW {
        return Err(Error::TooSmall { width, height });
    }
    if !(dynamic_range > 0.0) || !dynamic_range.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ssim dynamic range must be a positive finite value, got {dynamic_range}"
        )));
    }
    let c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
    let c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
    let k = gaussian_kernel();

    let n = reference.len();
    let mut xx = vec![0.0; n];
    let mut yy = vec![0.0; n];
    let mut xy = vec![0.0; n];
    for i in 0..n {
        xx[i] = reference[i] * reference[i];
        yy[i] = test[i] * test[i];
        xy[i] = reference[i] * test[i];
    }
    let mu_x = blur_valid(reference, width, height, &k);
    let mu_y = blur_valid(test, width, height, &k);
    let s_xx = blur_valid(&xx, width, height, &k);
    let s_yy = blur_valid(&yy, width, height, &k);
    let s_xy = blur_valid(&xy, width, height, &k);

    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = s_xx[i] - mx * mx;
        let var_y = s_yy[i] - my * my;
        let cov = s_xy[i] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        total += num / den;
    }
    Ok(total / mu_x.len() as f64)
}

/// Mean absolute difference between a generated slice and its target.
pub fn l1_loss(generated: &[f64], target: &[f64]) -> Result<f64> {
    check_pair(generated, target)?;
    Ok(generated
        .iter()
        .zip(target)
        .map(|(&g, &t)| (g - t).abs())
        .sum::<f64>()
        / generated.len() as f64)
}

/// Mean absolute difference between two feature embeddings.
pub fn perceptual_loss(feat_generated: &[f64], feat_target: &[f64]) -> Result<f64> {
    check_pair(feat_generated, feat_target)?;
    Ok(feat_generated
        .iter()
        .zip(feat_target)
        .map(|(&g, &t)| (g - t).abs())
        .sum::<f64>()
        / feat_generated.len() as f64)
}

/// Least-squares adversarial objective from discriminator outputs on real
/// and synthesized slices: -mean((d_real - 1)^2) - mean(d_fake^2).
/// A perfectly fooled discriminator (d_real = 1, d_fake = 0) scores 0; the
/// worst case (d_real = 0, d_fake = 1) scores -2.
pub fn adversarial_loss(d_real: &[f64], d_fake: &[f64]) -> Result<f64> {
    if d_real.is_empty() || d_fake.is_empty() {
        return Err(Error::EmptyInput);
    }
    let real_term = d_real.iter().map(|&d| (d - 1.0) * (d - 1.0)).sum::<f64>() / d_real.len() as f64;
    let fake_term = d_fake.iter().map(|&d| d * d).sum::<f64>() / d_fake.len() as f64;
    // Written as a subtraction from zero so the saturation case yields +0.0.
    Ok(0.0 - real_term - fake_term)
}

/// Composite generator objective: adversarial + lambda_l1 * L1 +
/// lambda_perc * perceptual.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LossBreakdown {
    pub adversarial: f64,
    pub l1: f64,
    pub perceptual: f64,
    pub lambda_l1: f64,
    pub lambda_perc: f64,
    pub total: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn pgan_loss(
    d_real: &[f64],
    d_fake: &[f64],
    generated: &[f64],
    target: &[f64],
    feat_generated: &[f64],
    feat_target: &[f64],
    lambda_l1: f64,
    lambda_perc: f64,
) -> Result<LossBreakdown> {
    if !lambda_l1.is_finite() || !lambda_perc.is_finite() {
        return Err(Error::InvalidParameter(
            "loss weights must be finite".into(),
        ));
    }
    let adversarial = adversarial_loss(d_real, d_fake)?;
    let l1 = l1_loss(generated, target)?;
    let perceptual = perceptual_loss(feat_generated, feat_target)?;
    Ok(LossBreakdown {
        adversarial,
        l1,
        perceptual,
        lambda_l1,
        lambda_perc,
        total: adversarial + lambda_l1 * l1 + lambda_perc * perceptual,
    })
}

/// A pair of equally shaped 2-D slices to score against each other.
pub struct SlicePair<'a> {
    reference: &'a [f64],
    test: &'a [f64],
    width: usize,
    height: usize,
}

impl<'a> SlicePair<'a> {
    pub fn new(reference: &'a [f64], test: &'a [f64], width: usize, height: usize) -> Result<Self> {
        check_pair(reference, test)?;
        if reference.len() != width * height {
            return Err(Error::ShapeMismatch {
                left: reference.len(),
                right: width * height,
            });
        }
        Ok(SlicePair {
            reference,
            test,
            width,
            height,
        })
    }

    pub fn psnr(&self, peak: f64) -> Result<f64> {
        psnr(self.reference, self.test, peak)
    }

    pub fn ssim(&self, dynamic_range: f64) -> Result<f64> {
        ssim(
            self.reference,
            self.test,
            self.width,
            self.height,
            dynamic_range,
        )
    }
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64, w: usize, h: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..w * h).map(|_| rng.gen_range(0.0..1.0)).collect()
    }

    /// Blob test image with smooth structure (pure noise has no structure
    /// for SSIM to agree about).
    fn blob_image(w: usize, h: usize) -> Vec<f64> {
        let (cx, cy) = (w as f64 * 0.4, h as f64 * 0.6);
        (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as f64, (i / w) as f64);
                let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                (-d2 / 40.0).exp()
            })
            .collect()
    }

    #[test]
    fn psnr_of_identical_images_is_infinite() {
        let img = random_image(1, 8, 8);
        assert_eq!(psnr(&img, &img, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_of_a_uniform_tenth_offset_is_twenty_db() {
        let img = random_image(2, 10, 10);
        let shifted: Vec<f64> = img.iter().map(|&v| v + 0.1).collect();
        let p = psnr(&img, &shifted, 1.0).unwrap();
        assert!((p - 20.0).abs() < 1e-9, "got {p}");
    }

    #[test]
    fn psnr_validates_inputs() {
        assert!(matches!(
            psnr(&[1.0], &[1.0, 2.0], 1.0),
            Err(Error::ShapeMismatch { left: 1, right: 2 })
        ));
        assert!(matches!(psnr(&[], &[], 1.0), Err(Error::EmptyInput)));
        assert!(matches!(
            psnr(&[1.0], &[1.0], 0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            psnr(&[1.0], &[1.0], f64::NAN),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn ssim_of_an_image_with_itself_is_exactly_one() {
        let img = blob_image(16, 16);
        assert_eq!(ssim(&img, &img, 16, 16, 1.0).unwrap(), 1.0);
        let noisy = random_image(3, 11, 11);
        assert_eq!(ssim(&noisy, &noisy, 11, 11, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn ssim_is_symmetric() {
        let a = blob_image(14, 18);
        let b = random_image(4, 14, 18);
        let ab = ssim(&a, &b, 14, 18, 1.0).unwrap();
        let ba = ssim(&b, &a, 14, 18, 1.0).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn ssim_of_two_constant_images_at_the_same_level_is_one() {
        let a = vec![0.5; 12 * 12];
        assert_eq!(ssim(&a, &a.clone(), 12, 12, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn ssim_rejects_images_below_the_window_size() {
        let a = vec![0.0; 10 * 12];
        assert!(matches!(
            ssim(&a, &a.clone(), 10, 12, 1.0),
            Err(Error::TooSmall {
                width: 10,
                height: 12
            })
        ));
    }

    #[test]
    fn ssim_of_an_inverted_image_is_low() {
        let img = blob_image(32, 32);
        let inverted: Vec<f64> = img.iter().map(|&v| 1.0 - v).collect();
        let s = ssim(&img, &inverted, 32, 32, 1.0).unwrap();
        assert!(s < 0.2, "got {s}");
    }

    #[test]
    fn ssim_drops_as_noise_grows() {
        let img = blob_image(24, 24);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise: Vec<f64> = (0..img.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let with = |amp: f64| -> Vec<f64> {
            img.iter()
                .zip(&noise)
                .map(|(&v, &n)| v + amp * n)
                .collect()
        };
        let s_small = ssim(&img, &with(0.02), 24, 24, 1.0).unwrap();
        let s_large = ssim(&img, &with(0.2), 24, 24, 1.0).unwrap();
        assert!(s_small > s_large);
        assert!(s_small > 0.8, "got {s_small}");
    }

    /// Direct per-window double-loop SSIM, kept deliberately naive.
    fn ssim_naive(a: &[f64], b: &[f64], w: usize, h: usize, l: f64) -> f64 {
        let k = gaussian_kernel();
        let c1 = (0.01 * l) * (0.01 * l);
        let c2 = (0.03 * l) * (0.03 * l);
        let mut total = 0.0;
        let mut count = 0;
        for wy in 0..h - 10 {
            for wx in 0..w - 10 {
                let (mut mx, mut my) = (0.0, 0.0);
                let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
                for j in 0..11 {
                    for i in 0..11 {
                        let weight = k[i] * k[j];
                        let va = a[(wy + j) * w + wx + i];
                        let vb = b[(wy + j) * w + wx + i];
                        mx += weight * va;
                        my += weight * vb;
                        sxx += weight * va * va;
                        syy += weight * vb * vb;
                        sxy += weight * va * vb;
                    }
                }
                let (var_x, var_y, cov) = (sxx - mx * mx, syy - my * my, sxy - mx * my);
                total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                    / ((mx * mx + my * my + c1) * (var_x + var_y + c2));
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn separable_ssim_matches_the_naive_windowed_form() {
        for seed in 0..5 {
            let a = random_image(seed, 16, 17);
            let b: Vec<f64> = blob_image(16, 17)
                .iter()
                .zip(&a)
                .map(|(&s, &n)| 0.7 * s + 0.3 * n)
                .collect();
            let fast = ssim(&a, &b, 16, 17, 1.0).unwrap();
            let slow = ssim_naive(&a, &b, 16, 17, 1.0);
            assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        }
    }

    #[test]
    fn l1_loss_hand_example_and_symmetry() {
        let g = [1.0, 2.0, 3.0];
        let t = [1.0, 1.0, 5.0];
        assert_eq!(l1_loss(&g, &t).unwrap(), 1.0);
        assert_eq!(l1_loss(&t, &g).unwrap(), 1.0);
        assert!(matches!(l1_loss(&[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn perceptual_loss_is_mean_absolute_feature_distance() {
        let f1 = [0.0, 0.5, -1.0, 2.0];
        let f2 = [1.0, 0.5, 1.0, 0.0];
        assert_eq!(perceptual_loss(&f1, &f2).unwrap(), (1.0 + 0.0 + 2.0 + 2.0) / 4.0);
    }

    #[test]
    fn adversarial_loss_saturation_points_are_exact() {
        // Discriminator fully fooled: real scored 1, fake scored 0.
        let fooled = adversarial_loss(&[1.0; 4], &[0.0; 4]).unwrap();
        assert_eq!(fooled, 0.0);
        assert!(fooled.is_sign_positive(), "must be +0.0, not -0.0");
        // Discriminator fully right: real scored 0, fake scored 1.
        assert_eq!(adversarial_loss(&[0.0; 4], &[1.0; 4]).unwrap(), -2.0);
    }

    #[test]
    fn adversarial_loss_matches_a_direct_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let nr = rng.gen_range(1..6);
            let nf = rng.gen_range(1..6);
            let dr: Vec<f64> = (0..nr).map(|_| rng.gen_range(-0.5..1.5)).collect();
            let df: Vec<f64> = (0..nf).map(|_| rng.gen_range(-0.5..1.5)).collect();
            let expect = -dr.iter().map(|&d| (d - 1.0).powi(2)).sum::<f64>() / nr as f64
                - df.iter().map(|&d| d.powi(2)).sum::<f64>() / nf as f64;
            assert!((adversarial_loss(&dr, &df).unwrap() - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn composite_loss_recombines_from_its_own_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let n = rng.gen_range(1..8);
            let draw = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
                (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
            };
            let dr = draw(&mut rng, n);
            let df = draw(&mut rng, n);
            let g = draw(&mut rng, n);
            let t = draw(&mut rng, n);
            let fg = draw(&mut rng, n);
            let ft = draw(&mut rng, n);
            let (l1w, lpw) = (rng.gen_range(0.0..150.0), rng.gen_range(0.0..150.0));
            let b = pgan_loss(&dr, &df, &g, &t, &fg, &ft, l1w, lpw).unwrap();
            let recombined = b.adversarial + b.lambda_l1 * b.l1 + b.lambda_perc * b.perceptual;
            assert!((b.total - recombined).abs() <= 1e-12 * b.total.abs().max(1.0));
            assert_eq!(b.adversarial, adversarial_loss(&dr, &df).unwrap());
            assert_eq!(b.l1, l1_loss(&g, &t).unwrap());
            assert_eq!(b.perceptual, perceptual_loss(&fg, &ft).unwrap());
        }
    }

    #[test]
    fn slice_pair_validates_its_shape() {
        let a = vec![0.0; 12];
        assert!(SlicePair::new(&a, &a.clone(), 4, 3).is_ok());
        assert!(matches!(
            SlicePair::new(&a, &a.clone(), 5, 3),
            Err(Error::ShapeMismatch { .. })
        ));
        let b = vec![0.0; 11];
        assert!(matches!(
            SlicePair::new(&a, &b, 4, 3),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn slice_pair_scores_delegate_to_the_plain_functions() {
        let a = blob_image(16, 16);
        let b = random_image(13, 16, 16);
        let pair = SlicePair::new(&a, &b, 16, 16).unwrap();
        assert_eq!(pair.psnr(1.0).unwrap(), psnr(&a, &b, 1.0).unwrap());
        assert_eq!(pair.ssim(1.0).unwrap(), ssim(&a, &b, 16, 16, 1.0).unwrap());
    }

    #[test]
    fn mean_std_population_form() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(m, 5.0);
        assert_eq!(s, 2.0);
        let (m1, s1) = mean_std(&[3.25]).unwrap();
        assert_eq!((m1, s1), (3.25, 0.0));
        assert!(matches!(mean_std(&[]), Err(Error::EmptyInput)));
        let (mi, _) = mean_std(&[f64::INFINITY, 20.0]).unwrap();
        assert!(mi.is_infinite());
    }
}
