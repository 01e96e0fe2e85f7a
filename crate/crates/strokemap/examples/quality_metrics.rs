//! Score a degraded image against its reference: PSNR, SSIM, and the
//! composite GAN training loss.
//!
//! Run with: cargo run --example quality_metrics

use strokemap::{mean_std, pgan_loss, Result, SlicePair};

fn main() -> Result<()> {
    let (w, h) = (64, 48);
    let reference: Vec<f64> = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            0.5 + 0.4 * ((x as f64 / 9.0).sin() * (y as f64 / 7.0).cos())
        })
        .collect();

    // Three degradation levels: deterministic "noise" from a hash-ish mix.
    let mut psnrs = Vec::new();
    for &amp in &[0.01, 0.05, 0.2] {
        let test: Vec<f64> = reference
            .iter()
            .enumerate()
            .map(|(i, &v)| v + amp * (((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5))
            .collect();
        let pair = SlicePair::new(&reference, &test, w, h)?;
        let (p, s) = (pair.psnr(1.0)?, pair.ssim(1.0)?);
        println!("noise amplitude {amp:>4}: PSNR {p:6.2} dB  SSIM {s:.4}");
        psnrs.push(p);
    }
    assert!(psnrs.windows(2).all(|w| w[0] > w[1]), "more noise, lower PSNR");
    let (mean, std) = mean_std(&psnrs)?;
    println!("PSNR over the three levels: {mean:.2} ± {std:.2} dB");

    // GAN loss on toy discriminator scores and feature vectors.
    let test: Vec<f64> = reference.iter().map(|&v| v + 0.02).collect();
    let breakdown = pgan_loss(
        &[0.9, 0.85, 0.95], // discriminator on real images
        &[0.2, 0.1, 0.15],  // discriminator on generated images
        &test,
        &reference,
        &[0.5, 0.52, 0.47], // features of the generated image
        &[0.5, 0.5, 0.5],   // features of the target image
        100.0,
        10.0,
    )?;
    println!(
        "pGAN loss: total {:.4} = adversarial {:.4} + {} * l1 {:.4} + {} * perceptual {:.4}",
        breakdown.total,
        breakdown.adversarial,
        breakdown.lambda_l1,
        breakdown.l1,
        breakdown.lambda_perc,
        breakdown.perceptual
    );
    Ok(())
}
