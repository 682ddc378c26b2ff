//! Analytic gradients of every loss term and of the network against
//! central finite differences in 64-bit precision.

use deep_sesr_core::autograd::{Graph, Mode, Ops};
use deep_sesr_core::extractor::ConvStack;
use deep_sesr_core::gradcheck::{central_difference, relative_error};
use deep_sesr_core::image::{ImageTensor, SaliencyMap, Scale};
use deep_sesr_core::losses::*;
use deep_sesr_core::model::{DeepSesr, FenetVariant, ModelConfig};
use deep_sesr_core::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn image(rng: &mut ChaCha8Rng, h: usize, w: usize) -> ImageTensor {
    ImageTensor::new(h, w, (0..3 * h * w).map(|_| rng.random_range(0.05..0.95)).collect()).unwrap()
}

fn mask(rng: &mut ChaCha8Rng, h: usize, w: usize) -> SaliencyMap {
    SaliencyMap::new(h, w, (0..h * w).map(|_| rng.random_range(0.05..0.95)).collect()).unwrap()
}

fn img_from(v: &[f64], h: usize, w: usize) -> ImageTensor {
    ImageTensor::new(h, w, v.to_vec()).unwrap()
}

fn check(name: &str, analytic: &[f64], f: impl FnMut(&[f64]) -> f64, x: &[f64]) {
    let numeric = central_difference(f, x, STEP);
    let err = relative_error(analytic, &numeric);
    assert!(err <= TOL, "{name}: relative error {err:e}");
}

#[test]
fn per_term_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let extractor = ConvStack::random(5);
    for _ in 0..10 {
        let (a, b) = (image(&mut rng, 8, 8), image(&mut rng, 8, 8));
        let (s, sh) = (mask(&mut rng, 8, 8), mask(&mut rng, 8, 8));
        let x = b.data().to_vec();

        let r = saliency_loss_grad(&s, &sh).unwrap();
        check("saliency", &r.grad, |v| saliency_loss(&s, &SaliencyMap::new(8, 8, v.to_vec()).unwrap()).unwrap(), sh.data());

        let r = contrast_loss_lr_grad(&a, &b, &s, &sh).unwrap();
        check("contrast/e", &r.e_hat, |v| contrast_loss_lr(&a, &img_from(v, 8, 8), &s, &sh).unwrap(), &x);
        check(
            "contrast/s",
            &r.s_hat,
            |v| contrast_loss_lr(&a, &b, &s, &SaliencyMap::new(8, 8, v.to_vec()).unwrap()).unwrap(),
            sh.data(),
        );

        let r = perceptual_color_lr_grad(&a, &b).unwrap();
        check("perceptual lr", &r.grad, |v| perceptual_color_lr(&a, &img_from(v, 8, 8)).unwrap(), &x);
        let r = perceptual_color_hr_grad(&a, &b).unwrap();
        check("perceptual hr", &r.grad, |v| perceptual_color_hr(&a, &img_from(v, 8, 8)).unwrap(), &x);
        for tier in [Tier::Lr, Tier::Hr] {
            let (_, g) = color_loss_grad(&a, &b, tier).unwrap();
            check("color", &g, |v| color_loss(&a, &img_from(v, 8, 8), tier).unwrap().total, &x);
        }
        let r = content_loss_grad(&a, &b, &extractor).unwrap();
        check("content", &r.grad, |v| content_loss(&a, &img_from(v, 8, 8), &extractor).unwrap(), &x);
        let r = sharpness_loss_grad(&a, &b).unwrap();
        check("sharpness", &r.grad, |v| sharpness_loss(&a, &img_from(v, 8, 8)).unwrap(), &x);
    }
}

#[test]
fn total_objective_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let extractor = ConvStack::random(5);
    let w = LossWeights::default();
    for _ in 0..10 {
        let (e, e_hat) = (image(&mut rng, 8, 8), image(&mut rng, 8, 8));
        let (y, y_hat) = (image(&mut rng, 16, 16), image(&mut rng, 16, 16));
        let (s, s_hat) = (mask(&mut rng, 8, 8), mask(&mut rng, 8, 8));
        let tgt = Targets {
            saliency: Some(&s),
            enhanced: &e,
            sesr: &y,
        };
        let pred = Predicted {
            saliency: Some(&s_hat),
            enhanced: &e_hat,
            sesr: Some(&y_hat),
        };
        let (_, g) = total_objective_grad(&pred, &tgt, &w, &extractor).unwrap();
        let total = |sh: &SaliencyMap, eh: &ImageTensor, yh: &ImageTensor| {
            let p = Predicted {
                saliency: Some(sh),
                enhanced: eh,
                sesr: Some(yh),
            };
            total_objective(&p, &tgt, &w, &extractor).unwrap().total
        };
        check(
            "total/s",
            g.saliency.as_ref().unwrap(),
            |v| total(&SaliencyMap::new(8, 8, v.to_vec()).unwrap(), &e_hat, &y_hat),
            s_hat.data(),
        );
        check("total/e", &g.enhanced, |v| total(&s_hat, &img_from(v, 8, 8), &y_hat), e_hat.data());
        check("total/y", g.sesr.as_ref().unwrap(), |v| total(&s_hat, &e_hat, &img_from(v, 16, 16)), y_hat.data());
    }
}

/// End-to-end: parameter and input gradients of a small network under a
/// quadratic read-out, in training mode so batch statistics are live.
#[test]
fn network_is_differentiable() {
    for variant in [FenetVariant::OneD, FenetVariant::TwoD] {
        let cfg = ModelConfig {
            scale: Scale::X2,
            fenet_variant: variant,
            rdb_stage1_count: 1,
            rdb_stage2_count: 1,
            rdb_growth: 3,
            fenet_out_channels: 3,
            head_channels: 3,
            use_aan: true,
            seed: 9,
        };
        let mut model = DeepSesr::<f64>::init(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // zero biases put some ReLU inputs exactly on the kink
        for e in model.params_mut().entries_mut() {
            if e.name.ends_with(".bias") {
                e.value.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.1..0.1));
            }
        }
        let x: Vec<f64> = (0..2 * 3 * 8 * 8).map(|_| rng.random::<f64>()).collect();
        let readout = |m: &DeepSesr<f64>, xv: &[f64]| -> f64 {
            let mut g = Graph::new(m.params(), Mode::Train);
            let inp = g.input(Tensor::from_vec([2, 3, 8, 8], xv.to_vec()).unwrap());
            let o = m.forward(&mut g, &inp, None).unwrap();
            [o.saliency.unwrap(), o.enhanced, o.sesr.unwrap()]
                .iter()
                .enumerate()
                .map(|(k, &v)| g.value(v).data().iter().enumerate().map(|(i, t)| (k + 1) as f64 * t * t * (1.0 + (i % 3) as f64)).sum::<f64>())
                .sum()
        };

        let mut g = Graph::new(model.params(), Mode::Train);
        let inp = g.input_with_grad(Tensor::from_vec([2, 3, 8, 8], x.clone()).unwrap());
        let o = model.forward(&mut g, &inp, None).unwrap();
        let seeds = [o.saliency.unwrap(), o.enhanced, o.sesr.unwrap()]
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let t = g.value(v);
                let d = t.data().iter().enumerate().map(|(i, t)| 2.0 * (k + 1) as f64 * t * (1.0 + (i % 3) as f64)).collect();
                (v, Tensor::from_vec(g.shape(&v), d).unwrap())
            })
            .collect();
        let grads = g.backward(seeds).unwrap();
        check("network/input", grads.wrt(inp).unwrap().data(), |v| readout(&model, v), &x);

        // a few sampled coordinates of every trainable tensor, pooled
        let (mut analytic, mut numeric) = (Vec::new(), Vec::new());
        let mut probe = model.clone();
        for id in model.params().ids().filter(|&id| model.params().entry(id).trainable) {
            let len = model.params().get(id).len();
            for _ in 0..3 {
                let i = rng.random_range(0..len);
                analytic.push(grads.param(id).map_or(0.0, |t| t.data()[i]));
                let base = model.params().get(id).data()[i];
                let mut at = |v: f64| {
                    probe.params_mut().get_mut(id).data_mut()[i] = v;
                    readout(&probe, &x)
                };
                // a shorter step keeps probes from straddling ReLU kinks
                let h = 1e-7;
                let fd = (at(base + h) - at(base - h)) / (2.0 * h);
                at(base);
                numeric.push(fd);
            }
        }
        let err = relative_error(&analytic, &numeric);
        assert!(err <= TOL, "network parameters: relative error {err:e}");
    }
}
