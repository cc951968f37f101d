use irloc::encoding::{EncodedSample, LineSpan};
use irloc::neural::{
    detect_sample, kmax_average, line_scores, multiply_layer, read_report, train, train_model, write_report, CellKind, DetectionReport, Model,
    ModelConfig, TrainConfig,
};
use irloc::seed::SeedTree;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(cell: CellKind, kappa: usize, dense: usize) -> ModelConfig {
    ModelConfig { cell, layers: 2, hidden: 5, dense, kappa, dropout: 0.4 }
}

fn random_input(rng: &mut ChaCha8Rng, len: usize, dim: usize) -> Vec<f64> {
    (0..len * dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Worst relative error between analytic and central-difference gradients.
/// The denominator has a 1e-6 floor so that parameters with (near) zero
/// gradient are compared absolutely.
fn worst_gradient_error(model: &Model, x: &[f64], mask: &[f64], target: f64, dropout_seed: Option<u64>) -> f64 {
    let rng = || dropout_seed.map(ChaCha8Rng::seed_from_u64);
    let analytic = model.loss_and_gradient(x, mask, target, rng().as_mut()).unwrap().grad;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    for i in 0..model.params().len() {
        let orig = model.params()[i];
        probe.params_mut()[i] = orig + h;
        let up = probe.loss_and_gradient(x, mask, target, rng().as_mut()).unwrap().loss;
        probe.params_mut()[i] = orig - h;
        let down = probe.loss_and_gradient(x, mask, target, rng().as_mut()).unwrap().loss;
        probe.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for cell in [CellKind::Gru, CellKind::Lstm] {
        for kappa in 1..=3 {
            for dense in [0, 3] {
                let model = Model::new(small(cell, kappa, dense), 4, 8, 100 + kappa as u64).unwrap();
                let x = random_input(&mut rng, 8, 4);
                let ones = vec![1.0; 8];
                let mask: Vec<f64> = (0..8).map(|t| if (2..6).contains(&t) { 1.0 } else { 0.0 }).collect();
                for (m, y, drop) in [(&ones, 0.0, None), (&mask, 1.0, None), (&mask, 1.0, Some(9))] {
                    let err = worst_gradient_error(&model, &x, m, y, drop);
                    assert!(err < 1e-4, "{cell:?} κ={kappa} dense={dense} y={y} dropout={drop:?}: relative error {err:e}");
                }
            }
        }
    }
}

#[test]
fn zero_weights_give_one_half_everywhere() {
    for cell in [CellKind::Gru, CellKind::Lstm] {
        let model = Model::zeros(small(cell, 1, 3), 4, 8).unwrap();
        let x = random_input(&mut ChaCha8Rng::seed_from_u64(1), 8, 4);
        assert!(model.activations(&x).unwrap().iter().all(|&a| a == 0.5));
    }
}

#[test]
fn layer_identities_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let n = rng.gen_range(1..40);
        let a: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        assert_eq!(multiply_layer(&a, &vec![1.0; n]).unwrap(), a);
        assert!(multiply_layer(&a, &vec![0.0; n]).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(kmax_average(&a, 1).unwrap(), a.iter().cloned().fold(f64::MIN, f64::max));
        let mean = a.iter().sum::<f64>() / n as f64;
        assert!((kmax_average(&a, n).unwrap() - mean).abs() < 1e-12);
        let k = rng.gen_range(1..=n);
        let mut sorted = a.clone();
        sorted.sort_by(|x, y| y.total_cmp(x));
        let oracle = sorted[..k].iter().sum::<f64>() / k as f64;
        assert!((kmax_average(&a, k).unwrap() - oracle).abs() < 1e-12);
    }
    assert!(kmax_average(&[0.1], 2).is_err());
    assert!(multiply_layer(&[0.1], &[1.0, 1.0]).is_err());
}

/// Swapping the two directions' weights (and the halves of every input that
/// sees their concatenated output) makes the network read the sequence
/// backwards.
#[test]
fn mirrored_weights_reverse_the_sequence() {
    let cfg = small(CellKind::Gru, 1, 3);
    let model = Model::new(cfg, 4, 8, 3).unwrap();
    let layout = model.layout().clone();
    let h = layout.hidden;
    let mut mirrored = model.clone();
    let p = model.params();
    let q = mirrored.params_mut();
    let swap_halves = |src: &[f64], dst: &mut [f64], cols: usize| {
        for (r, row) in src.chunks(cols).enumerate() {
            dst[r * cols..r * cols + h].copy_from_slice(&row[h..]);
            dst[r * cols + h..(r + 1) * cols].copy_from_slice(&row[..h]);
        }
    };
    for l in 0..layout.layers() {
        let (f, b) = (layout.dirs[2 * l], layout.dirs[2 * l + 1]);
        let len = f.b + 3 * h - f.w;
        for (from, to) in [(f, b), (b, f)] {
            q[to.w..to.w + len].copy_from_slice(&p[from.w..from.w + len]);
            if l > 0 {
                swap_halves(&p[from.w..from.u], &mut q[to.w..to.u], 2 * h);
            }
        }
    }
    swap_halves(&p[layout.dense_w..layout.dense_b], &mut q[layout.dense_w..layout.dense_b], 2 * h);
    let x = random_input(&mut ChaCha8Rng::seed_from_u64(4), 8, 4);
    let reversed: Vec<f64> = x.chunks(4).rev().flatten().copied().collect();
    let a = model.activations(&x).unwrap();
    let mut b = mirrored.activations(&reversed).unwrap();
    b.reverse();
    for (u, v) in a.iter().zip(&b) {
        assert!((u - v).abs() < 1e-12, "{a:?} vs {b:?}");
    }
}

/// One layer, one hidden unit, one input, no dense layer: the whole network
/// written out with scalars.
#[test]
fn scalar_reference_gru() {
    let cfg = ModelConfig { cell: CellKind::Gru, layers: 1, hidden: 1, dense: 0, kappa: 1, dropout: 0.0 };
    let mut model = Model::zeros(cfg, 1, 3).unwrap();
    // per direction: W (z, r, n), U (z, r, n), b (z, r, n); then w (2), bias
    let values = [0.5, -0.3, 0.8, 0.2, 0.7, -0.6, 0.1, 0.05, -0.2, -0.4, 0.9, 0.3, -0.5, 0.6, 0.25, 0.0, 0.1, -0.1, 1.2, -0.7, 0.15];
    model.params_mut().copy_from_slice(&values);
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    let run = |p: &[f64], xs: &[f64]| -> Vec<f64> {
        let mut h = 0.0;
        let mut out = Vec::new();
        for &x in xs {
            let z = sig(p[0] * x + p[3] * h + p[6]);
            let r = sig(p[1] * x + p[4] * h + p[7]);
            let n = (p[2] * x + p[5] * (r * h) + p[8]).tanh();
            h = (1.0 - z) * h + z * n;
            out.push(h);
        }
        out
    };
    let xs = [0.3, -1.1, 0.7];
    let f = run(&values[..9], &xs);
    let rev: Vec<f64> = xs.iter().rev().copied().collect();
    let mut b = run(&values[9..18], &rev);
    b.reverse();
    let expected: Vec<f64> = (0..3).map(|t| sig(values[18] * f[t] + values[19] * b[t] + values[20])).collect();
    let got = model.activations(&xs).unwrap();
    for (g, e) in got.iter().zip(&expected) {
        assert!((g - e).abs() < 1e-14, "{got:?} vs {expected:?}");
    }
}

#[test]
fn masked_positions_do_not_move_the_loss() {
    // no recurrent layers: each activation sees only its own input row
    let cfg = ModelConfig { cell: CellKind::Gru, layers: 0, hidden: 1, dense: 3, kappa: 2, dropout: 0.0 };
    let model = Model::new(cfg, 4, 6, 8).unwrap();
    let mut x = random_input(&mut ChaCha8Rng::seed_from_u64(2), 6, 4);
    let mask = [0.0, 1.0, 1.0, 0.0, 1.0, 0.0];
    let before = model.loss_and_gradient(&x, &mask, 1.0, None).unwrap().loss;
    for t in [0, 3, 5] {
        x[t * 4..(t + 1) * 4].iter_mut().for_each(|v| *v += 0.5);
    }
    assert_eq!(model.loss_and_gradient(&x, &mask, 1.0, None).unwrap().loss, before);
}

/// Samples whose vulnerable line carries a distinctive input direction.
fn planted_samples(n: usize, seed: u64) -> Vec<EncodedSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (len, dim) = (12, 4);
    (0..n)
        .map(|i| {
            let vulnerable = i % 2 == 0;
            let mut inputs = random_input(&mut rng, len, dim);
            inputs.iter_mut().step_by(dim).for_each(|v| *v = -1.0);
            let lines: Vec<LineSpan> = (0..4).map(|k| LineSpan { statement: k + 1, start: 3 * k, end: 3 * k + 3 }).collect();
            let hot = rng.gen_range(0..4);
            if vulnerable {
                for t in 3 * hot..3 * hot + 3 {
                    inputs[t * dim] = 1.0;
                }
            }
            EncodedSample {
                id: format!("s{i}"),
                program: "p".into(),
                label: Some(if vulnerable { vec![hot + 1] } else { vec![] }),
                max_tokens: len,
                dim,
                inputs,
                tokens: len,
                window_start: 0,
                lines,
                locations: vec![None; 4],
            }
        })
        .collect()
}

#[test]
fn loss_decreases_on_separable_patterns() {
    let samples = planted_samples(64, 11);
    let cfg = ModelConfig { hidden: 6, dense: 4, ..ModelConfig::desk() };
    let tc = TrainConfig { epochs: 3, ..TrainConfig::default() };
    let (_, stats) = train(&samples, &cfg, &tc, &SeedTree::new(1)).unwrap();
    assert_eq!(stats.len(), 3);
    assert!(stats[0].mean_loss > stats[1].mean_loss && stats[1].mean_loss > stats[2].mean_loss, "{stats:?}");
}

#[test]
fn zero_epochs_return_the_initial_model() {
    let samples = planted_samples(8, 12);
    let init = Model::new(ModelConfig { hidden: 4, dense: 2, ..ModelConfig::desk() }, 4, 12, 3).unwrap();
    let tc = TrainConfig { epochs: 0, ..TrainConfig::default() };
    let (m, stats) = train_model(init.clone(), &samples, &tc, &SeedTree::new(1)).unwrap();
    assert!(stats.is_empty());
    assert_eq!(m, init);
}

#[test]
fn training_is_deterministic_across_thread_counts() {
    let samples = planted_samples(40, 13);
    let cfg = ModelConfig { hidden: 5, dense: 3, ..ModelConfig::desk() };
    let tc = TrainConfig { epochs: 2, batch: 8, ..TrainConfig::default() };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| train(&samples, &cfg, &tc, &SeedTree::new(9)).unwrap().0.write())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn model_file_round_trips() {
    let model = Model::new(small(CellKind::Lstm, 2, 3), 4, 8, 1).unwrap();
    let bytes = model.write();
    assert_eq!(Model::read(&bytes).unwrap(), model);
    assert!(Model::read(&bytes[..bytes.len() - 1]).is_err());
    let mut other = bytes.clone();
    other[8] = 9;
    assert!(Model::read(&other).unwrap_err().to_string().contains("version"));
}

#[test]
fn line_scores_match_a_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..100 {
        let n = rng.gen_range(1..30);
        let acts: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let mut lines = Vec::new();
        let mut at = 0;
        while at < n {
            let end = rng.gen_range(at + 1..=n);
            lines.push(LineSpan { statement: lines.len() + 1, start: at, end });
            at = end;
        }
        let kappa = rng.gen_range(1..4);
        for (s, l) in line_scores(&acts, &lines, kappa).iter().zip(&lines) {
            let mut v = acts[l.range()].to_vec();
            v.sort_by(|a, b| b.total_cmp(a));
            let k = kappa.min(v.len());
            let oracle = v[..k].iter().sum::<f64>() / k as f64;
            assert!((s.score - oracle).abs() < 1e-12);
        }
    }
}

#[test]
fn detection_is_monotone_in_the_threshold_and_round_trips() {
    let samples = planted_samples(10, 15);
    let model = Model::new(ModelConfig { hidden: 4, dense: 2, ..ModelConfig::desk() }, 4, 12, 5).unwrap();
    let mut previous = usize::MAX;
    for th in [0.0, 0.3, 0.45, 0.5, 0.55, 0.7, 1.0] {
        let n: usize = samples.iter().map(|s| detect_sample(&model, s, th, 1).unwrap().detected_statements(th).len()).sum();
        assert!(n <= previous);
        previous = n;
    }
    assert_eq!(previous, 0);
    let entries = samples.iter().map(|s| detect_sample(&model, s, 0.5, 1).unwrap()).collect();
    let report = DetectionReport { threshold: 0.5, kappa: 1, entries };
    assert_eq!(read_report(&write_report(&report)).unwrap(), report);
}
