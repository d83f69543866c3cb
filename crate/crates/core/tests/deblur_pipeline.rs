use std::f64::consts::PI;

use oneshot_deblur::blind::{estimate_plane, radial_spectrum, BlurModel};
use oneshot_deblur::deblur::{
    adaptive_gamma, convolve_cols, convolve_rows, deblur, deblur_detailed, deblur_edges,
    deblur_unclipped, image_entropy, separable_convolve, TuningParams,
};
use oneshot_deblur::design::{design_inverse, feasibility_error, DesignConfig};
use oneshot_deblur::kernel::{derivative_kernel, sample_gg_kernel, FirKernel, GeneralizedGaussianPsf};
use oneshot_deblur::metrics::{highband_energy_ratio, ssim};
use oneshot_deblur::synthetic::{impulse, mixed_scene, power_law_field, simulate};
use oneshot_deblur::ImagePlane;

fn max_abs_diff(a: &ImagePlane, b: &ImagePlane) -> f64 {
    a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn fullband_design(beta: f64, sigma: f64) -> oneshot_deblur::InverseDesign {
    let psf = GeneralizedGaussianPsf::new(beta, sigma).unwrap();
    design_inverse(&psf, &DesignConfig::fullband(7)).unwrap()
}

#[test]
fn identity_kernels_leave_image_untouched() {
    let img = mixed_scene(40, 33, 5).unwrap();
    let id = FirKernel::identity();
    assert_eq!(separable_convolve(&img, &id, &id).unwrap(), img);
}

#[test]
fn row_and_column_passes_commute() {
    let img = mixed_scene(64, 48, 6).unwrap();
    let kx = fullband_design(1.5, 2.0).deblur_kernel;
    let ky = sample_gg_kernel(&GeneralizedGaussianPsf::new(1.2, 1.4).unwrap()).unwrap();
    let a = convolve_cols(&convolve_rows(&img, &kx).unwrap(), &ky).unwrap();
    let b = convolve_rows(&convolve_cols(&img, &ky).unwrap(), &kx).unwrap();
    assert!(max_abs_diff(&a, &b) <= 1e-12);
    assert!(max_abs_diff(&a, &separable_convolve(&img, &kx, &ky).unwrap()) <= 1e-12);
}

#[test]
fn gaussian_blur_of_impulse_is_product_kernel() {
    let img = impulse(33, 33).unwrap();
    let psf = GeneralizedGaussianPsf::gaussian(1.0).unwrap();
    let k = sample_gg_kernel(&psf).unwrap();
    let out = separable_convolve(&img, &k, &k).unwrap();
    // Sampled unit Gaussian on a ±6 support, normalized.
    let g: Vec<f64> = (-6..=6).map(|x: i32| (-(x * x) as f64 / 2.0).exp()).collect();
    let total: f64 = g.iter().sum();
    for y in 0..33i32 {
        for x in 0..33i32 {
            let (dx, dy) = (x - 16, y - 16);
            let expected = if dx.abs() <= 6 && dy.abs() <= 6 {
                g[(dx + 6) as usize] * g[(dy + 6) as usize] / (total * total)
            } else {
                0.0
            };
            assert!((out.get(x as usize, y as usize) - expected).abs() < 1e-15);
        }
    }
}

#[test]
fn kernel_longer_than_image_is_rejected() {
    let img = ImagePlane::filled(20, 10, 0.5).unwrap();
    let k = derivative_kernel(2, 15).unwrap();
    assert!(convolve_rows(&img, &k).is_ok());
    assert!(convolve_cols(&img, &k).is_err());
    assert!(separable_convolve(&img, &k, &k).is_err());
    assert!(deblur_edges(&img, &k).is_err());
}

#[test]
fn constant_image_has_no_edges() {
    let img = ImagePlane::filled(96, 96, 0.8).unwrap();
    let edges = deblur_edges(&img, &fullband_design(2.0, 1.0).deblur_kernel).unwrap();
    assert!(edges.samples().iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn step_response_is_local_and_antisymmetric() {
    let (w, h, edge) = (40, 96, 48);
    let img = ImagePlane::from_fn(w, h, |_, y| if y < edge { 0.0 } else { 1.0 }).unwrap();
    let d = fullband_design(1.5, 2.0).deblur_kernel;
    let c = d.len() / 2;
    let edges = deblur_edges(&img, &d).unwrap();
    for y in 0..h {
        let v = edges.get(w / 2, y);
        if y + c < edge || y >= edge + c {
            assert!(v.abs() < 1e-12, "row {y}: {v}");
        }
        // Every column sees the same profile.
        for x in 0..w {
            assert!((edges.get(x, y) - v).abs() < 1e-12);
        }
    }
    for j in 0..c {
        let (below, above) = (edges.get(0, edge + j), edges.get(0, edge - 1 - j));
        assert!((below + above).abs() < 1e-12, "offset {j}: {below} vs {above}");
    }
    assert!(edges.get(0, edge) != 0.0);
}

#[test]
fn zero_strength_returns_input() {
    let img = mixed_scene(64, 64, 9).unwrap();
    let design = fullband_design(1.5, 2.0);
    let out = deblur(&img, &design, &TuningParams::fixed(0.0).unwrap(), None).unwrap();
    assert_eq!(out, img);
}

#[test]
fn unclipped_deblur_is_linear_and_keeps_the_mean() {
    let f = mixed_scene(64, 56, 10).unwrap();
    let g = power_law_field(64, 56, 1.0, 11).unwrap();
    let design = fullband_design(1.0, 1.5);
    let params = TuningParams::fixed(0.7).unwrap();
    let run = |img: &ImagePlane| deblur_unclipped(img, &design, &params, None).unwrap().image;
    let (a, b) = (0.8, -1.7);
    let combo = f.map(|v| a * v).add_scaled(&g, b).unwrap();
    let expected = run(&f).map(|v| a * v).add_scaled(&run(&g), b).unwrap();
    assert!(max_abs_diff(&run(&combo), &expected) <= 1e-12);
    for img in [&f, &g] {
        assert!((run(img).mean() - img.mean()).abs() <= 1e-10);
    }
}

#[test]
fn noiseless_round_trip_in_the_feasible_region() {
    let img = mixed_scene(128, 128, 12).unwrap();
    for beta in [1.0, 1.5, 2.0] {
        for e in [-0.75f64, 0.0] {
            let psf = GeneralizedGaussianPsf::new(beta, e.exp()).unwrap();
            let design = design_inverse(&psf, &DesignConfig::fullband(7)).unwrap();
            assert!(feasibility_error(&psf, &design, PI).unwrap() <= 1e-2);
            let blurred = simulate(&img, &psf, 0.0, 0).unwrap();
            let out = deblur(&blurred, &design, &TuningParams::fixed(1.0).unwrap(), None).unwrap();
            let s = ssim(&img, &out).unwrap();
            assert!(s >= 0.999, "beta {beta}, scale e^{e}: SSIM {s}");
        }
    }
    let psf = GeneralizedGaussianPsf::new(1.5, 2.0).unwrap();
    let blurred = simulate(&img, &psf, 0.0, 0).unwrap();
    let out = deblur(&blurred, &fullband_design(1.5, 2.0), &TuningParams::fixed(1.0).unwrap(), None).unwrap();
    assert!(ssim(&img, &out).unwrap() >= 0.999);
}

#[test]
fn round_trip_restores_the_radial_spectrum() {
    let img = mixed_scene(256, 256, 13).unwrap();
    let psf = GeneralizedGaussianPsf::new(1.5, 2.0).unwrap();
    let blurred = simulate(&img, &psf, 0.0, 0).unwrap();
    let out = deblur(&blurred, &fullband_design(1.5, 2.0), &TuningParams::fixed(1.0).unwrap(), None).unwrap();
    let (a, b) = (radial_spectrum(&img, 64).unwrap(), radial_spectrum(&out, 64).unwrap());
    for j in 0..64 {
        if a.bin_edges[j + 1] > 0.9 * PI + 1e-12 {
            break;
        }
        let dev = (b.values[j] - a.values[j]).abs() / a.values[j];
        assert!(dev <= 0.02, "bin {j}: {dev}");
    }
}

#[test]
fn denoise_must_be_milder_than_the_blur() {
    let psf = GeneralizedGaussianPsf::gaussian(1.5).unwrap();
    let img = simulate(&mixed_scene(128, 128, 14).unwrap(), &psf, 0.0, 0).unwrap();
    let design = fullband_design(2.0, 1.5);
    let params = TuningParams::fixed(1.0).unwrap();
    let too_wide = GeneralizedGaussianPsf::gaussian(1.5).unwrap();
    assert!(deblur(&img, &design, &params, Some(&too_wide)).is_err());
    let mild = GeneralizedGaussianPsf::gaussian(0.75).unwrap();
    let smoothed = deblur(&img, &design, &params, Some(&mild)).unwrap();
    let sharp = deblur(&img, &design, &params, None).unwrap();
    let hb = |p: &ImagePlane| highband_energy_ratio(&radial_spectrum(p, 64).unwrap());
    assert!(hb(&smoothed) < hb(&sharp), "{} vs {}", hb(&smoothed), hb(&sharp));
}

/// `levels` equally spaced values, each occupying the same number of pixels.
fn uniform_levels(levels: usize) -> ImagePlane {
    ImagePlane::from_fn(levels, 8, |x, _| x as f64 / (levels - 1) as f64).unwrap()
}

#[test]
fn entropy_and_gamma_arithmetic() {
    assert!((image_entropy(&uniform_levels(2), 256) - 2f64.ln()).abs() < 1e-12);
    assert!((image_entropy(&uniform_levels(256), 256) - 256f64.ln()).abs() < 1e-12);
    assert_eq!(image_entropy(&ImagePlane::filled(9, 9, 0.4).unwrap(), 256), 0.0);

    let blurred = uniform_levels(128);
    let edges = uniform_levels(200);
    let (eb, ee) = (128f64.ln(), 200f64.ln());
    let g = adaptive_gamma(&blurred, &edges, 0.1);
    assert!((g - eb / (ee + 0.1)).abs() < 1e-12, "{g}");

    let flat = ImagePlane::filled(128, 8, 0.0).unwrap();
    assert_eq!(adaptive_gamma(&blurred, &flat, 0.5), 1.0);
    assert_eq!(adaptive_gamma(&edges, &uniform_levels(2), 0.1), 1.0);
}

#[test]
fn adaptive_strength_is_reported() {
    let img = mixed_scene(96, 96, 15).unwrap();
    let psf = GeneralizedGaussianPsf::gaussian(1.2).unwrap();
    let blurred = simulate(&img, &psf, 1.0 / 255.0, 16).unwrap();
    let design = design_inverse(&psf, &DesignConfig::default()).unwrap();
    let out = deblur_detailed(&blurred, &design, &TuningParams::default(), None).unwrap();
    assert!((0.0..=1.0).contains(&out.gamma));
    let edges = deblur_edges(&blurred, &design.deblur_kernel).unwrap();
    assert_eq!(out.gamma, adaptive_gamma(&blurred, &edges, 0.5));
    assert!(out.image.samples().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn blind_generalized_gaussian_deblur_raises_high_band() {
    for seed in 0..3u64 {
        let scene = mixed_scene(256, 256, 40 + seed).unwrap();
        let blurred = simulate(&scene, &GeneralizedGaussianPsf::new(1.8, 2.64).unwrap(), 1.0 / 255.0, 50 + seed).unwrap();
        let est = estimate_plane(&blurred, BlurModel::Gaussian, 2, 64).unwrap();
        let psf = GeneralizedGaussianPsf::new(1.8, est.alpha).unwrap();
        let design = design_inverse(&psf, &DesignConfig::default()).unwrap();
        let out = deblur(&blurred, &design, &TuningParams::default(), None).unwrap();
        let hb = |p: &ImagePlane| highband_energy_ratio(&radial_spectrum(p, 64).unwrap());
        assert!(hb(&out) > hb(&blurred), "seed {seed}");
    }
}
