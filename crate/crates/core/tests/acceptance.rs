//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `cargo test --test acceptance -- --nocapture`
//! to see them).
//!
//! Criteria that measure wall time take a shared lock so they are not
//! distorted by sibling tests on small machines.

use std::sync::Mutex;
use std::time::Instant;

use geohopca::experiments::{
    accuracy_and_confusion, gen_synthetic, recover_support, reconstruct_image,
    threshold_full_recovery_fp, tp_fp, train_classifier, Orientation, ScenarioSpec,
};
use geohopca::io::RgbImage;
use geohopca::pca::orthonormality_defect;
use geohopca::rng::Xoshiro256PlusPlus;
use geohopca::select::{
    brute_force_select, column_weights, residual_energy_on, select_columns, solve_blo, Cut,
    CutPool, Eta, SelectorConfig, SelectorStatus, Support, Weights,
};
use geohopca::shopca::{
    objective_f, sparse_geo_hopca, tensor_error_bound, threshold_support, ShopcaConfig,
};
use geohopca::tensor::{
    fold, frobenius_norm_sq, mode_product, tucker_reconstruct, unfold, DenseTensor, Matrix, Shape,
};

static TIMING_LOCK: Mutex<()> = Mutex::new(());

fn timing_guard() -> std::sync::MutexGuard<'static, ()> {
    TIMING_LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn random_matrix(rng: &mut Xoshiro256PlusPlus, rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, rng.normal_vec(rows * cols)).unwrap()
}

fn random_tensor(rng: &mut Xoshiro256PlusPlus, dims: &[usize]) -> DenseTensor {
    let shape = Shape::new(dims.to_vec()).unwrap();
    let len = shape.len();
    DenseTensor::new(shape, rng.normal_vec(len)).unwrap()
}

/// Random tensor of exact multilinear rank `ranks`.
fn random_low_rank(rng: &mut Xoshiro256PlusPlus, dims: &[usize], ranks: &[usize]) -> DenseTensor {
    let core = random_tensor(rng, ranks);
    let factors: Vec<Matrix> = dims
        .iter()
        .zip(ranks)
        .map(|(&j, &r)| random_matrix(rng, j, r))
        .collect();
    tucker_reconstruct(&core, &factors).unwrap()
}

#[test]
fn criterion_01_oracle_equivalence() {
    let _guard = timing_guard();
    let started = Instant::now();
    for seed in 0..20u64 {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1000 + seed);
        let a = random_matrix(&mut rng, 6, 12);
        let (_, eta_star, explained_star) = brute_force_select(&a, 3, 2).unwrap();
        let cfg = SelectorConfig::new(3, 2).with_eta(Eta::Fixed(eta_star + 1e-9));
        let res = select_columns(&a, &cfg).unwrap();
        assert_eq!(res.status, SelectorStatus::Converged, "seed {seed}");
        let tol = 1e-9 * explained_star.abs().max(1.0);
        assert!(
            (res.explained_variance - explained_star).abs() <= tol,
            "seed {seed}: explained {} vs oracle {}",
            res.explained_variance,
            explained_star
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "oracle equivalence took {elapsed:.2} s");
    println!(
        "criterion 1: PASS - selection matches the exhaustive oracle on 20 instances \
         ({elapsed:.2} s)"
    );
}

#[test]
fn criterion_02_selection_error_chain() {
    for seed in 0..100u64 {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2000 + seed);
        let a = random_matrix(&mut rng, 8, 20);
        let res = select_columns(&a, &SelectorConfig::new(5, 2)).unwrap();
        assert_eq!(res.status, SelectorStatus::Converged, "seed {seed}");
        let tight = residual_energy_on(&a, 2, &res.support).unwrap();
        let slack = 1e-9 * a.frobenius_norm_sq().max(1.0);
        assert!(
            res.eta_achieved <= tight + slack,
            "seed {seed}: eta {} > restricted residual {}",
            res.eta_achieved,
            tight
        );
        assert!(
            tight <= res.eta_target + slack,
            "seed {seed}: restricted residual {} > a-priori tolerance {}",
            tight,
            res.eta_target
        );
    }
    println!(
        "criterion 2: PASS - eta <= restricted residual energy <= a-priori tolerance on \
         100 instances"
    );
}

#[test]
fn criterion_03_tensor_bound_dominates_objective() {
    for seed in 0..50u64 {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3000 + seed);
        let x = random_low_rank(&mut rng, &[6, 7, 8], &[2, 2, 2]);
        let config = ShopcaConfig::new(vec![2, 2, 2], vec![5, 5, 5]);
        let res = sparse_geo_hopca(&x, &config).unwrap();
        assert!(res.all_converged(), "seed {seed}");
        let f = objective_f(&x, &res.factors).unwrap();
        let bound = tensor_error_bound(&x, &config).unwrap();
        let slack = 1e-9 * frobenius_norm_sq(&x);
        assert!(
            f <= bound + slack,
            "seed {seed}: objective {f} exceeds bound {bound}"
        );
    }
    println!("criterion 3: PASS - objective <= a-priori bound on 50 rank-(2,2,2) tensors");
}

#[test]
fn criterion_04_exact_recovery_of_low_rank_tensors() {
    for seed in 0..5u64 {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(4000 + seed);
        let x = random_low_rank(&mut rng, &[10, 10, 10], &[2, 2, 2]);
        let config = ShopcaConfig::new(vec![2, 2, 2], vec![100, 100, 100]);
        let res = sparse_geo_hopca(&x, &config).unwrap();
        let f = objective_f(&x, &res.factors).unwrap();
        let relative = f / frobenius_norm_sq(&x);
        assert!(
            relative <= 1e-12,
            "seed {seed}: relative objective {relative:e}"
        );
    }
    println!("criterion 4: PASS - noiseless rank-(2,2,2) inputs reconstruct to <= 1e-12");
}

#[test]
fn criterion_05_structural_invariants() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(5000);
    for trial in 0..500 {
        let order = 2 + rng.next_index(3);
        let dims: Vec<usize> = (0..order).map(|_| 2 + rng.next_index(5)).collect();
        let x = random_tensor(&mut rng, &dims);
        let mut ranks = Vec::with_capacity(order);
        let mut sparsity = Vec::with_capacity(order);
        for n in 0..order {
            let co = x.shape().co_mode_len(n + 1).unwrap();
            let k = 1 + rng.next_index(co.min(6));
            let r = 1 + rng.next_index(k.min(dims[n]));
            ranks.push(r);
            sparsity.push(k);
        }
        let config = ShopcaConfig::new(ranks.clone(), sparsity.clone());
        let res = sparse_geo_hopca(&x, &config).unwrap();
        for (n, factor) in res.factors.iter().enumerate() {
            assert!(
                orthonormality_defect(factor) <= 1e-10,
                "trial {trial} mode {n}: orthonormality"
            );
            assert!(
                res.supports[n].len() <= sparsity[n],
                "trial {trial} mode {n}: support size"
            );
        }
        let mut recomputed = x.clone();
        for (i, factor) in res.factors.iter().enumerate() {
            recomputed = mode_product(&recomputed, i + 1, &factor.transpose()).unwrap();
        }
        let drift = geohopca::tensor::frobenius_dist_sq(&res.core, &recomputed).unwrap();
        assert!(
            drift <= 1e-10 * frobenius_norm_sq(&res.core).max(1e-30),
            "trial {trial}: core recomputation"
        );
        for n in 1..=order {
            let back = fold(&unfold(&x, n).unwrap(), n, x.shape()).unwrap();
            assert_eq!(back.data(), x.data(), "trial {trial} mode {n}: fold/unfold");
        }
    }
    println!("criterion 5: PASS - structural invariants hold on 500 randomized decompositions");
}

#[test]
fn criterion_06_blo_exactness() {
    /// Documented tie rule, evaluated by brute force over bitmasks.
    fn enumerate(w: &[f64], k: usize, pool: &CutPool) -> Vec<usize> {
        let p = w.len();
        let mut best_value = f64::NEG_INFINITY;
        let mut best: Vec<usize> = Vec::new();
        for mask in 0u32..(1u32 << p) {
            let set: Vec<usize> = (0..p).filter(|&j| mask >> j & 1 == 1).collect();
            if set.len() > k || set.iter().any(|&j| w[j] == 0.0) {
                continue;
            }
            let support = Support::new(set.iter().map(|&j| j + 1).collect(), p).unwrap();
            if !pool.allows(&support) {
                continue;
            }
            let value: f64 = set.iter().map(|&j| w[j]).sum();
            let indices: Vec<usize> = set.iter().map(|&j| j + 1).collect();
            if value > best_value || (value == best_value && indices < best) {
                best_value = value;
                best = indices;
            }
        }
        best
    }

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(6000);
    for trial in 0..1000 {
        let p = 1 + rng.next_index(14);
        let k = 1 + rng.next_index(p);
        let w: Vec<f64> = (0..p).map(|_| rng.next_f64()).collect();
        let mut pool = CutPool::new();
        for _ in 0..rng.next_index(9) {
            let size = 1 + rng.next_index(p.min(4));
            let cut: Vec<usize> = rng
                .choose_indices(p, size)
                .into_iter()
                .map(|i| i + 1)
                .collect();
            pool.add(Cut::new(cut).unwrap());
        }
        let weights = Weights { w: w.clone() };
        let got = solve_blo(&weights, k, &pool).unwrap();
        let want = enumerate(&w, k, &pool);
        assert_eq!(
            got.indices(),
            want.as_slice(),
            "trial {trial}: p={p} k={k} w={w:?}"
        );
    }
    println!("criterion 6: PASS - tree search matches exhaustive enumeration on 1000 instances");
}

#[test]
fn criterion_07_support_recovery_at_scale() {
    let _guard = timing_guard();
    let started = Instant::now();
    let replicates = 10;
    let mut geo_tp = Vec::new();
    let mut geo_fp = Vec::new();
    let mut hosvd_fp = Vec::new();
    for seed in 0..replicates {
        let spec = ScenarioSpec::standard(1, 7000 + seed).unwrap();
        let (x, truth) = gen_synthetic(&spec).unwrap();
        let truth_support = &truth.supports[0];
        let k_star = truth_support.len();
        assert_eq!(k_star, 50);

        let support = recover_support(&x, 1, &SelectorConfig::new(k_star, 1)).unwrap();
        let m = tp_fp(&support, truth_support, 100);
        geo_tp.push(m.tp_rate);
        geo_fp.push(m.fp_rate);

        // The thresholding baseline is scored at its full-recovery operating
        // point (the smallest cutoff capturing the whole support), which is
        // where a magnitude threshold on a dense factor lands.
        let factor = geohopca::pca::truncated_left_svd(&unfold(&x, 1).unwrap(), 1)
            .unwrap()
            .u;
        hosvd_fp.push(threshold_full_recovery_fp(&factor, truth_support, 100).unwrap());
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (tp, fp, baseline_fp) = (mean(&geo_tp), mean(&geo_fp), mean(&hosvd_fp));
    let elapsed = started.elapsed().as_secs_f64();
    assert!(tp >= 0.90, "mean TP {tp} below 0.90");
    assert!(fp <= 0.15, "mean FP {fp} above 0.15");
    assert!(
        baseline_fp > fp,
        "thresholding baseline FP {baseline_fp} not above selection FP {fp}"
    );
    assert!(elapsed < 180.0, "recovery study took {elapsed:.1} s");
    println!(
        "criterion 7: PASS - 100^3 recovery: TP {tp:.3}, FP {fp:.3}, baseline FP \
         {baseline_fp:.3} ({elapsed:.1} s)"
    );
}

#[test]
fn criterion_08_mode_solve_scales_linearly() {
    let _guard = timing_guard();
    let solve_time = |j1: usize, seed: u64| -> f64 {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let x = random_tensor(&mut rng, &[j1, 10, 10]);
        let cfg = SelectorConfig::new(20, 5);
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let started = Instant::now();
            let unfolding = unfold(&x, 1).unwrap();
            let res = select_columns(&unfolding, &cfg).unwrap();
            assert_eq!(res.status, SelectorStatus::Converged);
            best = best.min(started.elapsed().as_secs_f64());
        }
        best
    };
    // Warm both paths once before timing.
    let _ = solve_time(50, 8000);
    let small = solve_time(200, 8001);
    let large = solve_time(400, 8002);
    let ratio = large / small;
    assert!(
        ratio <= 3.0,
        "doubling the mode extent scaled time by {ratio:.2} ({small:.4} s -> {large:.4} s)"
    );
    println!(
        "criterion 8: PASS - mode-1 solve time {small:.4} s -> {large:.4} s (x{ratio:.2} <= 3)"
    );
}

#[test]
fn criterion_09_classification_compression_gap() {
    // Always-run substitute: two synthetic classes with Gaussian means; the
    // compressed model (a tenth of the samples) must stay within 6 points of
    // the uncompressed model, averaged over 5 seeds.
    let dim = 64;
    let train_n = 120;
    let test_n = 40;
    let rank = 10;
    let mut gaps = Vec::new();
    for seed in 0..5u64 {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(9000 + seed);
        let means: Vec<Vec<f64>> = (0..2)
            .map(|_| rng.normal_vec(dim).iter().map(|v| v * 0.6).collect())
            .collect();
        let draw = |rng: &mut Xoshiro256PlusPlus, class: usize, count: usize| -> Matrix {
            let mut data = Vec::with_capacity(dim * count);
            for _ in 0..count {
                for &mu in &means[class] {
                    data.push(mu + rng.next_normal() * 0.8);
                }
            }
            Matrix::new(dim, count, data).unwrap()
        };
        let stacks = vec![draw(&mut rng, 0, train_n), draw(&mut rng, 1, train_n)];
        let mut test_data = Vec::new();
        let mut test_labels = Vec::new();
        for class in 0..2 {
            let block = draw(&mut rng, class, test_n);
            test_data.extend_from_slice(block.data());
            test_labels.extend(std::iter::repeat(class).take(test_n));
        }
        let test = Matrix::new(dim, 2 * test_n, test_data).unwrap();

        let full = train_classifier(&stacks, 1.0, rank).unwrap();
        let (acc_full, _) = accuracy_and_confusion(&full, &test, &test_labels).unwrap();
        let compressed = train_classifier(&stacks, 0.1, rank).unwrap();
        let (acc_small, _) = accuracy_and_confusion(&compressed, &test, &test_labels).unwrap();
        gaps.push((acc_full - acc_small).abs() * 100.0);
    }
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    assert!(
        mean_gap <= 6.0,
        "compression cost {mean_gap:.2} accuracy points (gaps {gaps:?})"
    );
    println!(
        "criterion 9: PASS - synthetic 2-class proxy loses {mean_gap:.2} points under 10x \
         compression"
    );

    // With user-supplied IDX files, also reproduce the digit benchmark.
    match std::env::var("GEOHOPCA_MNIST_DIR") {
        Err(_) => println!(
            "criterion 9 (digit data): SKIPPED - set GEOHOPCA_MNIST_DIR to run the IDX benchmark"
        ),
        Ok(dir) => {
            let dir = std::path::PathBuf::from(dir);
            let acc = |ratio: f64| -> f64 {
                let train =
                    geohopca::io::idx::read_images_file(&dir.join("train-images-idx3-ubyte"))
                        .unwrap();
                let train_labels =
                    geohopca::io::idx::read_labels_file(&dir.join("train-labels-idx1-ubyte"))
                        .unwrap();
                let test =
                    geohopca::io::idx::read_images_file(&dir.join("t10k-images-idx3-ubyte"))
                        .unwrap();
                let test_labels =
                    geohopca::io::idx::read_labels_file(&dir.join("t10k-labels-idx1-ubyte"))
                        .unwrap();
                let mut rng = Xoshiro256PlusPlus::seed_from_u64(0);
                let group = |images: &geohopca::io::idx::IdxImages,
                             labels: &[u8],
                             count: usize,
                             rng: &mut Xoshiro256PlusPlus|
                 -> Vec<Matrix> {
                    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); 10];
                    for (i, &l) in labels.iter().enumerate() {
                        by_class[l as usize].push(i);
                    }
                    by_class
                        .iter()
                        .map(|members| {
                            let picks = rng.choose_indices(members.len(), count);
                            let dim = images.samples.rows();
                            let mut data = Vec::with_capacity(dim * count);
                            for &p in &picks {
                                data.extend_from_slice(images.samples.col(members[p]));
                            }
                            Matrix::new(dim, count, data).unwrap()
                        })
                        .collect()
                };
                let train_stacks = group(&train, &train_labels, 500, &mut rng);
                let test_stacks = group(&test, &test_labels, 80, &mut rng);
                let model = train_classifier(&train_stacks, ratio, 20).unwrap();
                let dim = test_stacks[0].rows();
                let mut data = Vec::new();
                let mut labels = Vec::new();
                for (class, stack) in test_stacks.iter().enumerate() {
                    for c in 0..stack.cols() {
                        data.extend_from_slice(stack.col(c));
                        labels.push(class);
                    }
                }
                let test_matrix = Matrix::new(dim, labels.len(), data).unwrap();
                accuracy_and_confusion(&model, &test_matrix, &labels).unwrap().0 * 100.0
            };
            let full = acc(1.0);
            let compressed = acc(0.1);
            assert!(
                (full - 87.75).abs() <= 3.0,
                "uncompressed accuracy {full:.2} not within 3 points of 87.75"
            );
            assert!(
                (compressed - 84.62).abs() <= 4.0,
                "compressed accuracy {compressed:.2} not within 4 points of 84.62"
            );
            println!(
                "criterion 9 (digit data): PASS - accuracy {full:.2}% at ratio 1.0, \
                 {compressed:.2}% at ratio 0.1"
            );
        }
    }
}

#[test]
fn criterion_10_image_reconstruction_properties() {
    let _guard = timing_guard();
    // Structured 500x375 synthetic photograph: smooth gradients, blocks and
    // texture so the spectrum decays like a natural image.
    let (width, height) = (375usize, 500usize);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(10_000);
    let mut data = vec![0u8; 3 * width * height];
    let texture: Vec<f64> = rng.normal_vec(64);
    for i in 0..height {
        for j in 0..width {
            let x = j as f64 / width as f64;
            let y = i as f64 / height as f64;
            let block = if (i / 40 + j / 40) % 2 == 0 { 0.15 } else { 0.0 };
            let tex = 0.05 * texture[(i % 8) * 8 + (j % 8)];
            let r = 0.55 + 0.35 * (6.0 * x).sin() * (4.0 * y).cos() + block + tex;
            let g = 0.45 + 0.4 * y + 0.1 * (10.0 * x).sin() + tex;
            let b = 0.35 + 0.5 * x * y + block - tex;
            for (c, v) in [r, g, b].into_iter().enumerate() {
                data[(i * width + j) * 3 + c] = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            }
        }
    }
    let image = RgbImage::new(width, height, data).unwrap();
    let (_, report) = reconstruct_image(&image, 90, 2, Orientation::RowWise).unwrap();
    assert!(
        report.frobenius_error + 1e-9 >= report.dense_error,
        "sparse error {} below the dense optimum {}",
        report.frobenius_error,
        report.dense_error
    );
    assert!(
        report.eta_achieved <= report.eta_bound + 1e-9,
        "selection error {} above its a-priori tolerance {}",
        report.eta_achieved,
        report.eta_bound
    );
    assert!(
        report.runtime_seconds < 10.0,
        "reconstruction took {:.2} s",
        report.runtime_seconds
    );
    println!(
        "criterion 10: PASS - 90-component reconstruction: sparse {:.3} >= dense {:.3}, \
         eta {:.3e} <= tolerance {:.3e}, {:.2} s",
        report.frobenius_error,
        report.dense_error,
        report.eta_achieved,
        report.eta_bound,
        report.runtime_seconds
    );
}
