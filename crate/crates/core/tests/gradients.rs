use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvscm_core::nn::{
    softmax_cross_entropy, Activation, Block, Checkpoint, DenseLayer, Layer, LayerGrad,
    LayerRecord, Model, TvscmLayer,
};
use tvscm_core::Matrix;

const STEP: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

fn weighted_sum(r: &Matrix, y: &Matrix) -> f64 {
    r.as_slice().iter().zip(y.as_slice()).map(|(a, b)| a * b).sum()
}

fn assert_close(analytic: f64, numeric: f64, what: &str) {
    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
    let rel = (analytic - numeric).abs() / scale;
    assert!(rel <= TOLERANCE, "{what}: analytic {analytic} vs numeric {numeric} (rel {rel:e})");
}

fn central<F: FnMut(f64) -> f64>(mut f: F) -> f64 {
    (f(STEP) - f(-STEP)) / (2.0 * STEP)
}

fn tvscm_layer(a: f64, b: f64, n: usize, bias: Option<Vec<f64>>, threshold: usize) -> TvscmLayer {
    let mut l = TvscmLayer::with_threshold(a, b, n, bias.is_some(), threshold).unwrap();
    l.set_bias(bias).unwrap();
    l
}

/// Linear probe loss `Σ R ⊙ layer(X)` so that the upstream gradient is `R`.
#[test]
fn tvscm_layer_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in [4, 5, 16, 187] {
        for batch in [1, 7] {
            for with_bias in [false, true] {
                for threshold in [1, usize::MAX] {
                    let (a, b) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    let bias: Option<Vec<f64>> =
                        with_bias.then(|| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
                    let x = random_matrix(&mut rng, batch, n);
                    let r = random_matrix(&mut rng, batch, n);
                    let layer = tvscm_layer(a, b, n, bias.clone(), threshold);
                    let (grad, _) = layer.backward(&x, &r, false).unwrap();
                    let loss = |a: f64, b: f64, bias: Option<Vec<f64>>| {
                        weighted_sum(&r, &tvscm_layer(a, b, n, bias, threshold).forward(&x).unwrap())
                    };
                    let tag = format!("n={n} batch={batch} bias={with_bias} threshold={threshold}");
                    assert_close(grad.a, central(|h| loss(a + h, b, bias.clone())), &format!("∂a {tag}"));
                    assert_close(grad.b, central(|h| loss(a, b + h, bias.clone())), &format!("∂b {tag}"));
                    match (&bias, &grad.bias) {
                        (Some(bv), Some(gb)) => {
                            for k in [0, n / 2, n - 1] {
                                let numeric = central(|h| {
                                    let mut p = bv.clone();
                                    p[k] += h;
                                    loss(a, b, Some(p))
                                });
                                assert_close(gb[k], numeric, &format!("∂bias[{k}] {tag}"));
                            }
                        }
                        (None, None) => {}
                        _ => panic!("bias gradient presence does not match the layer"),
                    }
                }
            }
        }
    }
}

#[test]
fn unit_impulse_gradient() {
    let layer = TvscmLayer::new(1.0, 2.0, 4, false).unwrap();
    let e0 = Matrix::from_rows(&[[1.0, 0.0, 0.0, 0.0]]).unwrap();
    assert_eq!(layer.correlation(&e0, &e0), vec![1.0, 0.0, 0.0, 0.0]);
    let (grad, _) = layer.backward(&e0, &e0, false).unwrap();
    assert_eq!((grad.a, grad.b), (1.0, 0.0));
}

#[test]
fn zero_upstream_gives_zero_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let layer = tvscm_layer(0.4, -0.3, 9, Some(vec![0.1; 9]), 64);
    let x = random_matrix(&mut rng, 3, 9);
    let (grad, dx) = layer.backward(&x, &Matrix::zeros(3, 9), true).unwrap();
    assert_eq!((grad.a, grad.b), (0.0, 0.0));
    assert!(grad.bias.unwrap().iter().all(|&v| v == 0.0));
    assert!(dx.unwrap().as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn input_gradient_is_the_forward_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in [1, 2, 7, 16, 187, 784] {
        let a = rng.random_range(-1.0..1.0);
        let b = rng.random_range(-1.0..1.0);
        let bias = Some((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
        let with_bias = tvscm_layer(a, b, n, bias, 64);
        let without = tvscm_layer(a, b, n, None, 64);
        let x = random_matrix(&mut rng, 3, n);
        let g = random_matrix(&mut rng, 3, n);
        let (_, dx) = with_bias.backward(&x, &g, true).unwrap();
        let dx = dx.unwrap();
        let fwd = without.forward(&g).unwrap();
        let scale = fwd.max_abs().max(1e-300);
        for (p, q) in dx.as_slice().iter().zip(fwd.as_slice()) {
            assert!((p - q).abs() <= 1e-12 * scale, "n={n}");
        }
    }
}

#[test]
fn dense_layer_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (inputs, outputs, batch) in [(3, 2, 1), (6, 4, 7), (1, 1, 3)] {
        let w = random_matrix(&mut rng, outputs, inputs);
        let bias: Vec<f64> = (0..outputs).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = random_matrix(&mut rng, batch, inputs);
        let r = random_matrix(&mut rng, batch, outputs);
        let layer = DenseLayer::new(w.clone(), bias.clone()).unwrap();
        let (grad, dx) = layer.backward(&x, &r, true).unwrap();
        let loss = |w: &Matrix, bias: &[f64], x: &Matrix| {
            weighted_sum(&r, &DenseLayer::new(w.clone(), bias.to_vec()).unwrap().forward(x).unwrap())
        };
        for i in 0..outputs {
            for j in 0..inputs {
                let numeric = central(|h| {
                    let mut p = w.clone();
                    p.set(i, j, p.get(i, j) + h);
                    loss(&p, &bias, &x)
                });
                assert_close(grad.weights.get(i, j), numeric, &format!("∂W[{i},{j}]"));
            }
            let numeric = central(|h| {
                let mut p = bias.clone();
                p[i] += h;
                loss(&w, &p, &x)
            });
            assert_close(grad.bias[i], numeric, &format!("∂bias[{i}]"));
        }
        let dx = dx.unwrap();
        for s in 0..batch {
            for j in 0..inputs {
                let numeric = central(|h| {
                    let mut p = x.clone();
                    p.set(s, j, p.get(s, j) + h);
                    loss(&w, &bias, &p)
                });
                assert_close(dx.get(s, j), numeric, &format!("∂x[{s},{j}]"));
            }
        }
    }
}

#[test]
fn softmax_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let logits = random_matrix(&mut rng, 3, 4);
    let labels = [2, 0, 3];
    let (_, grad) = softmax_cross_entropy(&logits, &labels).unwrap();
    for s in 0..3 {
        for k in 0..4 {
            let numeric = central(|h| {
                let mut p = logits.clone();
                p.set(s, k, p.get(s, k) + h);
                softmax_cross_entropy(&p, &labels).unwrap().0
            });
            assert!((grad.get(s, k) - numeric).abs() <= 1e-5, "({s},{k})");
        }
    }
}

#[test]
fn softmax_limits() {
    let (loss, _) = softmax_cross_entropy(&Matrix::zeros(2, 5), &[1, 4]).unwrap();
    assert!((loss - 5f64.ln()).abs() < 1e-15);
    let peaked = Matrix::from_rows(&[[0.0, 800.0, 0.0]]).unwrap();
    let (loss, _) = softmax_cross_entropy(&peaked, &[1]).unwrap();
    assert!(loss.is_finite() && loss < 1e-300);
    assert!(softmax_cross_entropy(&peaked, &[3]).is_err());
}

fn two_layer_model(rng: &mut ChaCha8Rng, n: usize, classes: usize, with_bias: bool) -> Model {
    let mut tv = TvscmLayer::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), n, with_bias)
        .unwrap();
    if with_bias {
        tv.set_bias(Some((0..n).map(|_| rng.random_range(-0.5..0.5)).collect())).unwrap();
    }
    let head = DenseLayer::new(
        random_matrix(rng, classes, n),
        (0..classes).map(|_| rng.random_range(-0.5..0.5)).collect(),
    )
    .unwrap();
    Model::new(
        vec![
            Block {
                layer: Layer::Tvscm(tv),
                activation: Activation::Relu,
            },
            Block {
                layer: Layer::Dense(head),
                activation: Activation::Identity,
            },
        ],
        classes,
    )
    .unwrap()
}

fn model_loss(record: &Checkpoint, x: &Matrix, labels: &[usize]) -> f64 {
    let model = record.clone().into_model().unwrap();
    softmax_cross_entropy(&model.forward(x).unwrap(), labels).unwrap().0
}

#[test]
fn end_to_end_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for n in [6, 7, 64, 187] {
        for batch in [1, 7] {
            for with_bias in [false, true] {
                let classes = 3;
                let model = two_layer_model(&mut rng, n, classes, with_bias);
                let x = random_matrix(&mut rng, batch, n);
                let labels: Vec<usize> = (0..batch).map(|s| s % classes).collect();
                let trace = model.forward_train(&x).unwrap();
                let (_, dlogits) = softmax_cross_entropy(trace.logits(), &labels).unwrap();
                let grads = model.backward(&trace, &dlogits).unwrap();
                let record = Checkpoint::from_model(&model);
                let tag = format!("n={n} batch={batch} bias={with_bias}");

                let perturbed = |edit: &dyn Fn(&mut Vec<LayerRecord>, f64)| {
                    central(|h| {
                        let mut r = record.clone();
                        edit(&mut r.layers, h);
                        model_loss(&r, &x, &labels)
                    })
                };
                let (LayerGrad::Tvscm(gt), LayerGrad::Dense(gd)) = (&grads.layers[0], &grads.layers[1])
                else {
                    panic!("unexpected gradient layout");
                };
                let da = perturbed(&|l, h| {
                    if let LayerRecord::Tvscm { a, .. } = &mut l[0] {
                        *a += h;
                    }
                });
                assert_close(gt.a, da, &format!("∂a {tag}"));
                let db = perturbed(&|l, h| {
                    if let LayerRecord::Tvscm { b, .. } = &mut l[0] {
                        *b += h;
                    }
                });
                assert_close(gt.b, db, &format!("∂b {tag}"));
                if with_bias {
                    let k = n / 3;
                    let dbias = perturbed(&|l, h| {
                        if let LayerRecord::Tvscm { bias: Some(v), .. } = &mut l[0] {
                            v[k] += h;
                        }
                    });
                    assert_close(gt.bias.as_ref().unwrap()[k], dbias, &format!("∂bias {tag}"));
                }
                for (i, j) in [(0, 0), (1, n / 2), (2, n - 1)] {
                    let dw = perturbed(&|l, h| {
                        if let LayerRecord::Dense { weights, .. } = &mut l[1] {
                            weights[i][j] += h;
                        }
                    });
                    assert_close(gd.weights.get(i, j), dw, &format!("∂W[{i},{j}] {tag}"));
                }
                let dhb = perturbed(&|l, h| {
                    if let LayerRecord::Dense { bias, .. } = &mut l[1] {
                        bias[1] += h;
                    }
                });
                assert_close(gd.bias[1], dhb, &format!("∂head bias {tag}"));
            }
        }
    }
}

#[test]
fn forward_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let x = random_matrix(&mut rng, 5, 187);
    let naive = tvscm_layer(0.3, -0.7, 187, None, usize::MAX);
    let fast = tvscm_layer(0.3, -0.7, 187, None, 1);
    assert!(!naive.uses_fft() && fast.uses_fft());
    let (y1, y2) = (naive.forward(&x).unwrap(), naive.forward(&x).unwrap());
    assert!(y1.as_slice().iter().zip(y2.as_slice()).all(|(p, q)| p.to_bits() == q.to_bits()));
    let (f1, f2) = (fast.forward(&x).unwrap(), fast.forward(&x).unwrap());
    let scale = y1.max_abs();
    for ((p, q), r) in f1.as_slice().iter().zip(f2.as_slice()).zip(y1.as_slice()) {
        assert!((p - q).abs() <= 1e-9 * scale);
        assert!((p - r).abs() <= 1e-9 * scale);
    }
}

#[test]
fn layer_examples() {
    let zero = TvscmLayer::new(0.0, 0.0, 6, false).unwrap();
    let y = zero.forward(&Matrix::from_rows(&[[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]]).unwrap()).unwrap();
    assert!(y.as_slice().iter().all(|&v| v == 0.0));

    let l = TvscmLayer::new(1.0, 2.0, 4, false).unwrap();
    let y = l.forward(&Matrix::from_rows(&[[1.0, 0.0, 0.0, 0.0]]).unwrap()).unwrap();
    assert_eq!(y.as_slice(), &[1.0, 2.0, 1.0, 2.0]);

    let l = tvscm_layer(1.0, 3.0, 3, Some(vec![1.0; 3]), 64);
    let y = l.forward(&Matrix::from_rows(&[[1.0, -1.0, 0.0]]).unwrap()).unwrap();
    assert_eq!(y.as_slice(), &[0.0, 2.0, 1.0]);
    assert_eq!(l.parameter_count(), 5);
}
