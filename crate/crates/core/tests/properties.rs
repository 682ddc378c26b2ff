//! Randomized invariants across modules.

use deep_sesr_core::autograd::{Eager, Graph, Mode};
use deep_sesr_core::dataset::epoch_order;
use deep_sesr_core::extractor::Identity;
use deep_sesr_core::image::{bicubic_resize, downsample_by_scale, ImageTensor, SaliencyMap, Scale};
use deep_sesr_core::losses::*;
use deep_sesr_core::metrics::{cmi, psnr, ssim};
use deep_sesr_core::model::{DeepSesr, FenetVariant, ModelConfig};
use deep_sesr_core::roi::{saliency_mode, select_roi};
use proptest::prelude::*;

fn image(h: usize, w: usize) -> impl Strategy<Value = ImageTensor> {
    prop::collection::vec(0.0..=1.0f64, 3 * h * w).prop_map(move |d| ImageTensor::new(h, w, d).unwrap())
}

fn mask(h: usize, w: usize) -> impl Strategy<Value = SaliencyMap> {
    prop::collection::vec(0.0..=1.0f64, h * w).prop_map(move |d| SaliencyMap::new(h, w, d).unwrap())
}

fn binary_mask(h: usize, w: usize) -> impl Strategy<Value = SaliencyMap> {
    prop::collection::vec(any::<bool>(), h * w)
        .prop_map(move |d| SaliencyMap::new(h, w, d.into_iter().map(f64::from).collect()).unwrap())
}

fn scale() -> impl Strategy<Value = Scale> {
    prop::sample::select(Scale::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn psnr_and_ssim_are_symmetric(a in image(12, 12), b in image(12, 12)) {
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        prop_assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cmi_flips_with_the_mask(img in image(6, 7), s in mask(6, 7)) {
        let forward = cmi(&img, &s).unwrap();
        let backward = cmi(&img, &s.complement()).unwrap();
        prop_assert!((forward + backward).abs() < 1e-12);
        prop_assert!(forward.abs() <= 1.0);
    }

    #[test]
    fn downsample_dims_are_ceil_division(h in 1usize..70, w in 1usize..70, s in scale()) {
        let img = ImageTensor::constant(h, w, [0.3, 0.5, 0.7]).unwrap();
        let lr = downsample_by_scale(&img, s).unwrap();
        prop_assert_eq!(lr.dims(), (h.div_ceil(s.get()), w.div_ceil(s.get())));
    }

    #[test]
    fn resize_keeps_values_in_range(img in image(5, 6), th in 1usize..15, tw in 1usize..15) {
        let out = bicubic_resize(&img, th, tw).unwrap();
        prop_assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    // cross-entropy of a soft map with itself is its entropy, so targets are binary
    fn losses_vanish_at_targets(e in image(8, 8), y in image(16, 16), s in binary_mask(8, 8)) {
        let tgt = Targets { saliency: Some(&s), enhanced: &e, sesr: &y };
        let pred = Predicted { saliency: Some(&s), enhanced: &e, sesr: Some(&y) };
        let b = total_objective(&pred, &tgt, &LossWeights::default(), &Identity).unwrap();
        prop_assert!(b.total >= 0.0);
        prop_assert!(b.total <= 1e-5, "total {}", b.total);
    }

    #[test]
    fn losses_are_non_negative(e in image(8, 8), eh in image(8, 8), y in image(16, 16), yh in image(16, 16), s in mask(8, 8), sh in mask(8, 8)) {
        let tgt = Targets { saliency: Some(&s), enhanced: &e, sesr: &y };
        let pred = Predicted { saliency: Some(&sh), enhanced: &eh, sesr: Some(&yh) };
        let b = total_objective(&pred, &tgt, &LossWeights::default(), &Identity).unwrap();
        for v in [b.saliency, b.contrast_lr, b.color_lr.total, b.content_lr, b.color_hr.total, b.content_hr, b.sharpness_hr] {
            prop_assert!(v >= 0.0);
        }
    }

    #[test]
    fn total_is_linear_in_weights(e in image(8, 8), eh in image(8, 8), y in image(16, 16), yh in image(16, 16), k in 0.1..10.0f64) {
        let tgt = Targets { saliency: None, enhanced: &e, sesr: &y };
        let pred = Predicted { saliency: None, enhanced: &eh, sesr: Some(&yh) };
        let w = LossWeights::default();
        let base = total_objective(&pred, &tgt, &w, &Identity).unwrap();
        let scaled = total_objective(&pred, &tgt, &w.scaled(k), &Identity).unwrap();
        prop_assert!((scaled.total - k * base.total).abs() <= 1e-9 * scaled.total.abs().max(1.0));
        prop_assert!((base.total - base.weighted_sum(&w)).abs() <= 1e-12 * base.total.max(1.0));
    }

    #[test]
    fn gray_shift_is_chromatically_invisible(e in image(4, 4), d in -0.2..0.2f64) {
        let shifted = ImageTensor::new(4, 4, e.data().iter().map(|v| v + d).collect()).unwrap();
        // clamping can break the uniform shift; only check unclamped pixels' images
        prop_assume!(e.data().iter().all(|v| (0.0..=1.0).contains(&(v + d))));
        prop_assert!(perceptual_color_lr(&e, &shifted).unwrap() < 1e-24);
    }

    #[test]
    fn epoch_order_is_a_permutation(len in 0usize..200, seed in any::<u64>(), epoch in 0u64..50) {
        let mut order = epoch_order(len, seed, epoch);
        prop_assert_eq!(&order, &epoch_order(len, seed, epoch));
        order.sort_unstable();
        prop_assert_eq!(order, (0..len).collect::<Vec<_>>());
    }

    #[test]
    fn roi_box_is_inside_and_salient(s in mask(20, 24)) {
        prop_assume!(s.data().iter().any(|&v| v >= 0.5));
        let b = select_roi(&s, 6.0, 0.5).unwrap();
        prop_assert!(b.x0 < b.x1 && b.x1 <= 24 && b.y0 < b.y1 && b.y1 <= 20);
        let (my, mx) = saliency_mode(&s, 6.0, 0.5).unwrap();
        prop_assert!((0.0..20.0).contains(&my) && (0.0..24.0).contains(&mx));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn enhance_only_matches_full_pass(seed in any::<u64>(), x in image(9, 10), two_d in any::<bool>()) {
        let cfg = ModelConfig {
            fenet_variant: if two_d { FenetVariant::TwoD } else { FenetVariant::OneD },
            rdb_stage1_count: 1,
            rdb_stage2_count: 1,
            rdb_growth: 4,
            fenet_out_channels: 4,
            head_channels: 4,
            seed,
            ..ModelConfig::default()
        };
        let m = DeepSesr::<f32>::init(&cfg).unwrap();
        let full = m.infer(&x).unwrap();
        let part = m.infer_enhance_only(&x).unwrap();
        prop_assert_eq!(&full.enhanced, &part.enhanced);
        prop_assert_eq!(&full.saliency, &part.saliency);

        // the taped executor in inference mode agrees with the eager one
        let mut g = Graph::new(m.params(), Mode::Eval);
        let v = g.input(x.to_tensor());
        let taped = m.forward(&mut g, &v, None).unwrap();
        let mut e = Eager::new(m.params());
        let ev = e.input(x.to_tensor());
        let eager = m.forward(&mut e, &ev, None).unwrap();
        prop_assert_eq!(g.value(taped.sesr.unwrap()), &*eager.sesr.unwrap());
    }
}
