use mgg::basenet::{BaseNet, BaseNetConfig};
use mgg::fap::{assign_frame_labels, fap_loss, FapConfig, FapNet};
use mgg::harness::{build_loss, prepare_sample, ModelConfig, MggModel, Objective, TrainConfig, Video};
use mgg::params::{ParamInit, ParamStore};
use mgg::seqgrad::{Activation, ConvSpec, Graph, Padding};
use mgg::spp::{assign_labels, generate_anchors, regression_targets, sample_minibatch, spp_loss, PyramidConfig, SppConfig, SppNet};
use mgg::Segment;
use ndarray::Array2;

use super::{gradcheck, project, random, rng, GradCheck};

fn store(entries: &[(&str, Array2<f64>)]) -> ParamStore<f64> {
    let mut s = ParamStore::new();
    for (name, value) in entries {
        s.insert(*name, value.clone()).unwrap();
    }
    s
}

pub fn conv(spec: ConvSpec, time: usize, c_in: usize, seed: u64) -> GradCheck {
    let mut r = rng(seed);
    let s = store(&[
        ("x", random(&mut r, (time, c_in), 1.0)),
        ("w", random(&mut r, spec.weight_shape(c_in), 0.5)),
        ("b", random(&mut r, (1, spec.filters), 0.5)),
    ]);
    gradcheck(&s, |g, b| {
        let (x, w, bias) = (b.var(g, "x").unwrap(), b.var(g, "w").unwrap(), b.var(g, "b").unwrap());
        let y = g.conv1d(x, &spec, w, bias).unwrap();
        project(g, y, seed + 1)
    })
}

/// Stride 1 and 2, same and valid padding, every activation.
pub fn conv_variants() -> Vec<GradCheck> {
    vec![
        conv(ConvSpec::new(4, 3, Activation::None), 9, 3, 1),
        conv(ConvSpec::new(3, 5, Activation::None).with_stride(2), 12, 2, 2),
        conv(ConvSpec { padding: Padding::Valid, ..ConvSpec::new(2, 3, Activation::None) }, 8, 3, 3),
        conv(ConvSpec::new(3, 3, Activation::Sigmoid), 7, 2, 4),
        conv(ConvSpec::new(3, 3, Activation::Relu), 7, 2, 5),
    ]
}

pub fn deconv() -> GradCheck {
    let spec = ConvSpec::new(3, 3, Activation::None).with_stride(2);
    let mut r = rng(6);
    let (t, c) = (5, 4);
    let s = store(&[
        ("x", random(&mut r, (t, c), 1.0)),
        ("w", random(&mut r, (c, spec.kernel * spec.filters), 0.5)),
        ("b", random(&mut r, (1, spec.filters), 0.5)),
    ]);
    gradcheck(&s, |g, b| {
        let (x, w, bias) = (b.var(g, "x").unwrap(), b.var(g, "w").unwrap(), b.var(g, "b").unwrap());
        let y = g.deconv1d(x, &spec, w, bias).unwrap();
        assert_eq!(g.value(y).nrows(), 2 * t);
        project(g, y, 7)
    })
}

pub fn maxpool() -> GradCheck {
    let mut r = rng(9);
    let s = store(&[("x", random(&mut r, (10, 3), 1.0))]);
    gradcheck(&s, |g, b| {
        let x = b.var(g, "x").unwrap();
        let y = g.maxpool1d(x, 2, 2).unwrap();
        project(g, y, 10)
    })
}

pub fn composite_ops() -> GradCheck {
    let mut r = rng(11);
    let s = store(&[
        ("a", random(&mut r, (4, 6), 1.0)),
        ("b", random(&mut r, (6, 6), 1.0)),
        ("row", random(&mut r, (1, 6), 1.0)),
        ("c", random(&mut r, (4, 6), 1.0)),
    ]);
    gradcheck(&s, |g, b| {
        let (a, m, row, c) =
            (b.var(g, "a").unwrap(), b.var(g, "b").unwrap(), b.var(g, "row").unwrap(), b.var(g, "c").unwrap());
        let p = g.matmul(a, m).unwrap();
        let p = g.add_row(p, row).unwrap();
        let q = g.mul(p, c).unwrap();
        let q = g.scale(q, 0.7).unwrap();
        let d = g.group_dot(q, p, 3).unwrap();
        let s1 = g.sigmoid(d).unwrap();
        let f = g.flatten(s1).unwrap();
        let f2 = g.flatten(c).unwrap();
        let cat = g.concat_rows(&[f, f2]).unwrap();
        let sum = g.add(a, c).unwrap();
        let rl = g.relu(sum).unwrap();
        let t1 = project(g, cat, 12);
        let t2 = project(g, rl, 13);
        g.add(t1, t2).unwrap()
    })
}

pub fn bilinear() -> GradCheck {
    let cfg = BaseNetConfig { hidden: 6, kernel: 3, rank: 2 };
    let net = BaseNet::new(3, &cfg, true).unwrap();
    let mut s = ParamStore::new();
    net.register(&mut s, &mut ParamInit::new(14)).unwrap();
    let mut r = rng(15);
    s.insert("x", random(&mut r, (8, 3), 1.0)).unwrap();
    gradcheck(&s, |g, b| {
        let x = b.var(g, "x").unwrap();
        let t = net.forward_full(g, b, x).unwrap();
        project(g, t, 16)
    })
}

pub fn bce_and_smooth_l1() -> GradCheck {
    let mut r = rng(17);
    let logits = random(&mut r, (12, 1), 2.0);
    let target = Array2::from_shape_fn((12, 1), |(i, _)| if i % 3 == 0 { 1.0 } else { 0.0 });
    let mask = Array2::from_shape_fn((12, 1), |(i, _)| if i < 10 { 1.0 } else { 0.0 });
    let s = store(&[("z", logits), ("p", random(&mut r, (6, 1), 3.0))]);
    let reg_target = random(&mut r, (6, 1), 3.0);
    gradcheck(&s, |g, b| {
        let z = b.var(g, "z").unwrap();
        let p = g.sigmoid(z).unwrap();
        let l1 = g.weighted_bce(p, &target, 2.0, 0.5, Some(&mask)).unwrap();
        let pv = b.var(g, "p").unwrap();
        let l2 = g.smooth_l1(pv, reg_target.clone(), Array2::ones((6, 1)), 3.0).unwrap();
        g.add(l1, l2).unwrap()
    })
}

pub fn spp_objective() -> GradCheck {
    let cfg = SppConfig { channels: 4, ..SppConfig::default() };
    let net = SppNet::new(3, &cfg, true).unwrap();
    let mut s = ParamStore::new();
    net.register(&mut s, &mut ParamInit::new(18)).unwrap();
    let mut r = rng(19);
    s.insert("x", random(&mut r, (32, 3), 1.0)).unwrap();
    let grid = generate_anchors(&PyramidConfig::default(), 32).unwrap();
    let gt = [Segment::span(3.0, 13.0), Segment::span(17.0, 30.0)];
    let labels = assign_labels(&grid, &gt);
    let targets = regression_targets(&grid, &labels).unwrap();
    let batch = sample_minibatch(&labels, &mut rng(20));
    assert!(!batch.positives.is_empty());
    gradcheck(&s, |g, b| {
        let x = b.var(g, "x").unwrap();
        let h = net.forward(g, b, x).unwrap();
        // gamma = 1 so the regression branch is checked at full scale
        spp_loss(g, h.scores, h.offsets, &targets, &batch, 1.0).unwrap().total
    })
}

pub fn fap_objective() -> GradCheck {
    let net = FapNet::new(3, &FapConfig { hidden: 4, kernel: 3 });
    let mut s = ParamStore::new();
    net.register(&mut s, &mut ParamInit::new(21)).unwrap();
    let mut r = rng(22);
    s.insert("x", random(&mut r, (24, 3), 1.0)).unwrap();
    let labels = assign_frame_labels(&[Segment::span(4.0, 14.0)], 24, 22, 10.0);
    gradcheck(&s, |g, b| {
        let x = b.var(g, "x").unwrap();
        let p = net.forward(g, b, x).unwrap();
        fap_loss(g, &p, &labels).unwrap().total
    })
}

pub fn tiny_model_config() -> ModelConfig {
    ModelConfig {
        feature_dim: 3,
        position_dim: 4,
        basenet: BaseNetConfig { hidden: 5, kernel: 3, rank: 2 },
        spp: SppConfig { channels: 4, ..SppConfig::default() },
        fap: FapConfig { hidden: 3, kernel: 3 },
    }
}

/// Joint loss of a small full model on a 32-frame input, every parameter.
pub fn full_model() -> (GradCheck, usize) {
    let model = MggModel::new(&tiny_model_config(), Default::default()).unwrap();
    let params = model.init_params::<f64>(23).unwrap();
    let mut r = rng(24);
    let features = random(&mut r, (32, 3), 1.0).mapv(|v| v as f32);
    let video = Video { id: "v".into(), features, annotations: vec![Segment::span(2.0, 12.0), Segment::span(16.0, 29.0)] };
    let train = TrainConfig::default();
    let sample = prepare_sample(&model, &video, train.eta).unwrap();
    let batch = sample_minibatch(&sample.labels, &mut rng(25));
    let input = model.prepare_input::<f64>(video.features.view()).unwrap();
    let report = gradcheck(&params, |g, b| {
        build_loss(&model, g, b, input.clone(), &sample, &batch, &train, Objective::Joint).unwrap().total
    });
    (report, params.scalar_count())
}

/// `<conv(x), y> - <x, deconv(y)>` for a stride-2 conv and the deconv sharing its weights.
pub fn adjoint_gap(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (t, c_lo, c_hi, k) = (12, 3, 4, 3);
    let conv_spec = ConvSpec::new(c_lo, k, Activation::None).with_stride(2);
    let deconv_spec = ConvSpec::new(c_hi, k, Activation::None).with_stride(2);
    let w = random(&mut r, conv_spec.weight_shape(c_hi), 1.0);
    let x = random(&mut r, (t, c_hi), 1.0);
    let y = random(&mut r, (t / 2, c_lo), 1.0);
    let mut g = Graph::<f64>::new();
    let (xv, yv, wv) = (g.input(x.clone()).unwrap(), g.input(y.clone()).unwrap(), g.input(w).unwrap());
    let b_lo = g.input(Array2::zeros((1, c_lo))).unwrap();
    let b_hi = g.input(Array2::zeros((1, c_hi))).unwrap();
    let cx = g.conv1d(xv, &conv_spec, wv, b_lo).unwrap();
    let dy = g.deconv1d(yv, &deconv_spec, wv, b_hi).unwrap();
    let lhs = (g.value(cx) * &y).sum();
    let rhs = (&x * g.value(dy)).sum();
    (lhs - rhs).abs() / lhs.abs().max(1.0)
}
