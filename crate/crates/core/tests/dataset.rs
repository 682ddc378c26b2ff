//! Directional statistics of the synthetic distortion and degradation.

use deep_sesr_core::dataset::{degrade, synth_distort, DegradeOrder, DegradeSet, DegradeSpec};
use deep_sesr_core::image::{downsample_by_scale, sobel_gradient_magnitude, SaliencyMap, Scale};
use deep_sesr_core::metrics::cmi;
use deep_sesr_core::synth::synthetic_scene;

#[test]
fn distortion_lowers_foreground_contrast() {
    let scene = synthetic_scene(48, 64, 3).unwrap();
    let centered = SaliencyMap::from_fn(48, 64, |y, x| f64::from((12..36).contains(&y) && (16..48).contains(&x))).unwrap();
    let clean = cmi(&scene.image, &centered).unwrap();
    let lower = (0..100)
        .filter(|&seed| cmi(&synth_distort(&scene.image, seed).unwrap(), &centered).unwrap() < clean)
        .count();
    assert!(lower >= 90, "contrast dropped in only {lower} of 100 seeds");
}

#[test]
fn set_f_is_a_fair_coin() {
    let blur_first = (0..1000u64)
        .filter(|&seed| DegradeSpec::new(DegradeSet::F, Scale::X2, seed).resolve().0 == DegradeOrder::BlurFirst)
        .count();
    let freq = blur_first as f64 / 1000.0;
    assert!((freq - 0.5).abs() <= 0.05, "frequency {freq}");
}

#[test]
fn degraded_inputs_are_flatter_and_blurrier() {
    let (mut cmi_gt, mut cmi_x, mut grad_gt, mut grad_x) = (0.0, 0.0, 0.0, 0.0);
    for seed in 0..50 {
        let scene = synthetic_scene(48, 48, seed).unwrap();
        let e = downsample_by_scale(&scene.image, Scale::X2).unwrap();
        let x = degrade(&synth_distort(&scene.image, seed).unwrap(), &DegradeSpec::new(DegradeSet::U, Scale::X2, seed)).unwrap();
        let s = deep_sesr_core::image::resize_saliency(&scene.saliency, 24, 24).unwrap();
        cmi_gt += cmi(&e, &s).unwrap();
        cmi_x += cmi(&x, &s).unwrap();
        grad_gt += sobel_gradient_magnitude(&e).mean();
        grad_x += sobel_gradient_magnitude(&x).mean();
    }
    assert!(cmi_x < cmi_gt, "CMI {cmi_x} vs {cmi_gt}");
    assert!(grad_x < grad_gt, "gradient {grad_x} vs {grad_gt}");
}
