use std::time::Instant;

use mmcvae::data::Origin;
use mmcvae::eval::{accuracy_80_20, pca_2d, silhouette, Embeddings, LabelSource, LogisticOptions};
use mmcvae::kernels::{
    median_heuristic, mmd_biased, mmd_to_constant, permutation_test, KernelConfig,
};
use mmcvae::model::{
    kl_std_normal, loss_and_grad, loss_with_noise, reparameterize_with, Architecture,
    GaussianPosterior, Latent, MmcVae, Noise, Objective,
};
use mmcvae::tensor::{numeric_gradient, relative_error, sample_std_normal, Matrix, ParamSet, Rng};

use crate::{fmt_list, Outcome};

// ---------------------------------------------------------------- AC-1

const GRAD_TOL: f64 = 1e-4;
const GRAD_STEP: f64 = 1e-5;
/// Denominator floor for relative errors of near-zero gradient entries.
const GRAD_FLOOR: f64 = 1e-6;

pub fn ac1_gradients() -> mmcvae::Result<Outcome> {
    let started = Instant::now();
    let mut out = Outcome::new();
    let mut arch = Architecture::new(6, 2, 2);
    arch.hidden_dim = 8;
    let mut rng = Rng::seed_from_u64(101);
    let base = MmcVae::new(arch, &mut rng)?.with_s_prime(vec![0.4, -0.3])?;
    let x = sample_std_normal(&mut rng, 5, 6);
    let b = sample_std_normal(&mut rng, 4, 6);
    let noise = Noise::sample(&mut rng, 5, 4, 2, 2);
    let (l1, l2) = (1.0, 1.0);

    for kernel in [
        KernelConfig::MedianHeuristic,
        KernelConfig::Fixed { gamma: 0.5 },
    ] {
        let obj = Objective {
            lambda1: l1,
            lambda2: l2,
            kernel: kernel.clone(),
        };
        let mut model = base.clone();
        model.zero_grads();
        loss_and_grad(&mut model, &x, &b, &obj, &noise)?;
        let analytic: Vec<Matrix> = model.params().iter().map(|p| p.grad.clone()).collect();

        // Bandwidths are stop-gradient: the oracle holds each at its value
        // for the unperturbed parameters.
        let (gamma_s, gamma_z) = match kernel {
            KernelConfig::Fixed { gamma } => (gamma, gamma),
            _ => {
                let s_b = reparameterize_with(&model.encode(&b, Latent::S)?, &noise.s_background)?;
                let z_x = reparameterize_with(&model.encode(&x, Latent::Z)?, &noise.z_target)?;
                let z_b = reparameterize_with(&model.encode(&b, Latent::Z)?, &noise.z_background)?;
                (
                    median_heuristic(&s_b, &Matrix::row_vector(&model.s_prime))?,
                    median_heuristic(&z_x, &z_b)?,
                )
            }
        };
        let fixed = |g: f64| Objective {
            lambda1: l1,
            lambda2: l2,
            kernel: KernelConfig::Fixed { gamma: g },
        };
        let (obj_s, obj_z) = (fixed(gamma_s), fixed(gamma_z));
        let numeric = numeric_gradient(&mut model, GRAD_STEP, |m| {
            let a = loss_with_noise(m, &x, &b, &obj_s, &noise)?;
            let c = loss_with_noise(m, &x, &b, &obj_z, &noise)?;
            Ok(a.weighted_total(0.0, 0.0) + l1 * a.mmd_salient_dirac + l2 * c.mmd_background_match)
        })?;

        let mut worst = (0.0f64, String::new());
        let mut count = 0;
        for ((p, a), n) in model.params().iter().zip(&analytic).zip(&numeric) {
            for (k, (&av, &nv)) in a.data().iter().zip(n.data()).enumerate() {
                count += 1;
                let err = relative_error(av, nv, GRAD_FLOOR);
                if err > worst.0 || worst.1.is_empty() {
                    worst = (err, format!("{}[{k}]", p.name));
                }
            }
        }
        out.check(
            worst.0 < GRAD_TOL,
            format!(
                "{kernel:?}: {count} scalars over {} params, max relative error {:.2e} at {} (< {GRAD_TOL:e})",
                analytic.len(),
                worst.0,
                worst.1
            ),
        );
    }
    let secs = started.elapsed().as_secs_f64();
    out.check(secs < 10.0, format!("runtime {secs:.2}s (< 10s)"));
    Ok(out)
}

// ---------------------------------------------------------------- AC-2

const MMD_TOL: f64 = 1e-12;

fn naive_mmd(x: &Matrix, y: &Matrix, gamma: f64) -> f64 {
    let k = |a: &[f64], b: &[f64]| {
        let mut d = 0.0;
        for i in 0..a.len() {
            d += (a[i] - b[i]) * (a[i] - b[i]);
        }
        (-gamma * d).exp()
    };
    let mean_k = |p: &Matrix, q: &Matrix| {
        let mut s = 0.0;
        for i in 0..p.rows() {
            for j in 0..q.rows() {
                s += k(p.row(i), q.row(j));
            }
        }
        s / (p.rows() * q.rows()) as f64
    };
    mean_k(x, x) + mean_k(y, y) - 2.0 * mean_k(x, y)
}

fn naive_median_gamma(x: &Matrix, y: &Matrix) -> f64 {
    let pts: Vec<&[f64]> = (0..x.rows())
        .map(|i| x.row(i))
        .chain((0..y.rows()).map(|i| y.row(i)))
        .collect();
    let mut d = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d.push(
                pts[i]
                    .iter()
                    .zip(pts[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>(),
            );
        }
    }
    d.sort_by(f64::total_cmp);
    let n = d.len();
    let med = if n % 2 == 1 {
        d[n / 2]
    } else {
        0.5 * (d[n / 2 - 1] + d[n / 2])
    };
    1.0 / (2.0 * med)
}

fn random_pair(rng: &mut Rng) -> (Matrix, Matrix, f64) {
    let n = 1 + rng.below(30);
    let m = 1 + rng.below(30);
    let d = 1 + rng.below(6);
    let scale = 0.2 + 2.0 * rng.uniform();
    let x = sample_std_normal(rng, n, d).scale(scale);
    let y = sample_std_normal(rng, m, d).scale(scale).map(|v| v + 0.5);
    let gamma = 0.05 + 2.0 * rng.uniform();
    (x, y, gamma)
}

pub fn ac2_kernels() -> mmcvae::Result<Outcome> {
    let started = Instant::now();
    let mut out = Outcome::new();
    let mut rng = Rng::seed_from_u64(202);

    let mut worst_fixed = 0.0f64;
    let mut worst_median = 0.0f64;
    let mut worst_const = 0.0f64;
    let mut worst_self = 0.0f64;
    for i in 0..20 {
        let (x, y, gamma) = random_pair(&mut rng);
        let fixed = KernelConfig::Fixed { gamma };
        worst_fixed =
            worst_fixed.max((mmd_biased(&x, &y, &fixed)? - naive_mmd(&x, &y, gamma)).abs());
        if x.rows() + y.rows() >= 2 {
            let g = naive_median_gamma(&x, &y);
            let lib = mmd_biased(&x, &y, &KernelConfig::MedianHeuristic)?;
            worst_median = worst_median.max((lib - naive_mmd(&x, &y, g)).abs());
        }

        let c: Vec<f64> = y.row(0).to_vec();
        let tiles = 1 + i % 7;
        let tiled = Matrix::from_rows(&vec![c.clone(); tiles])?;
        worst_const = worst_const
            .max((mmd_to_constant(&x, &c, &fixed)? - mmd_biased(&x, &tiled, &fixed)?).abs());

        for k in [fixed, KernelConfig::MedianHeuristic] {
            if x.rows() >= 2 || matches!(k, KernelConfig::Fixed { .. }) {
                worst_self = worst_self.max(mmd_biased(&x, &x, &k)?.abs());
            }
        }
    }
    out.check(
        worst_fixed < MMD_TOL,
        format!("mmd_biased vs double loop, fixed γ, 20 instances: max |Δ| {worst_fixed:.1e}"),
    );
    out.check(
        worst_median < MMD_TOL,
        format!("mmd_biased vs double loop, median γ, 20 instances: max |Δ| {worst_median:.1e}"),
    );
    out.check(
        worst_const < MMD_TOL,
        format!("mmd_to_constant vs tiled mmd_biased: max |Δ| {worst_const:.1e}"),
    );
    out.check(
        worst_self < MMD_TOL,
        format!("MMD(X, X): max |value| {worst_self:.1e}"),
    );

    let mut r = Rng::seed_from_u64(2);
    let a = sample_std_normal(&mut r, 200, 1);
    let b = sample_std_normal(&mut r, 200, 1).map(|v| v + 3.0);
    let p = permutation_test(&a, &b, &KernelConfig::MedianHeuristic, 1000, &mut r)?.p_value;
    out.check(
        p < 0.01,
        format!("N(0,1) vs N(3,1), n=200, 1000 permutations: p = {p:.4} (< 0.01)"),
    );

    let mut accepted = 0;
    let mut ps = Vec::new();
    for seed in 0..20 {
        let mut r = Rng::seed_from_u64(1000 + seed);
        let a = sample_std_normal(&mut r, 200, 1);
        let b = sample_std_normal(&mut r, 200, 1);
        let p = permutation_test(&a, &b, &KernelConfig::MedianHeuristic, 200, &mut r)?.p_value;
        accepted += usize::from(p > 0.05);
        ps.push(p);
    }
    out.check(
        accepted >= 18,
        format!("identical distributions: p > 0.05 in {accepted}/20 repeats (≥ 18)"),
    );
    out.note(format!("null p-values {}", fmt_list(&ps)));

    let secs = started.elapsed().as_secs_f64();
    out.check(secs < 30.0, format!("runtime {secs:.2}s (< 30s)"));
    Ok(out)
}

// ---------------------------------------------------------------- AC-4

pub fn ac4_kl() -> mmcvae::Result<Outcome> {
    let started = Instant::now();
    let mut out = Outcome::new();
    let mut rng = Rng::seed_from_u64(404);
    let samples = 1_000_000;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let dim = 3;
        let mu: Vec<f64> = (0..dim).map(|_| 4.0 * rng.uniform() - 2.0).collect();
        let lv: Vec<f64> = (0..dim).map(|_| 4.0 * rng.uniform() - 2.0).collect();
        let post = GaussianPosterior {
            mu: Matrix::row_vector(&mu),
            logvar: Matrix::row_vector(&lv),
        };
        let closed = kl_std_normal(&post);
        // E_q[log q(z) − log p(z)] with z = μ + σ·ε
        let eps = rng.normal_vec(samples * dim);
        let mut acc = 0.0;
        for draw in eps.chunks_exact(dim) {
            let mut term = 0.0;
            for (k, &e) in draw.iter().enumerate() {
                let z = mu[k] + (0.5 * lv[k]).exp() * e;
                term += -0.5 * lv[k] - 0.5 * e * e + 0.5 * z * z;
            }
            acc += term;
        }
        let mc = acc / samples as f64;
        worst = worst.max((closed - mc).abs() / closed);
    }
    out.check(worst < 0.02, format!("10 diagonal Gaussians vs 10⁶-sample Monte Carlo: max relative error {worst:.4} (< 0.02)"));
    let zero = GaussianPosterior {
        mu: Matrix::zeros(4, 3),
        logvar: Matrix::zeros(4, 3),
    };
    let v = kl_std_normal(&zero);
    out.check(
        v == 0.0,
        format!("KL at mu = 0, logvar = 0 is {v:?} (exactly 0)"),
    );
    let secs = started.elapsed().as_secs_f64();
    out.check(secs < 10.0, format!("runtime {secs:.2}s (< 10s)"));
    Ok(out)
}

// ---------------------------------------------------------------- AC-5

fn brute_silhouette(points: &Matrix, labels: &[usize]) -> f64 {
    let n = points.rows();
    let dist = |i: usize, j: usize| {
        points
            .row(i)
            .iter()
            .zip(points.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += dist(i, j);
                counts[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if counts[own] == 0 {
            continue;
        }
        let a = sums[own] / counts[own] as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c != own && counts[c] > 0 {
                b = b.min(sums[c] / counts[c] as f64);
            }
        }
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / n as f64
}

fn shuffled_labels(rng: &mut Rng, n: usize, k: usize) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    rng.shuffle(&mut labels);
    labels
}

pub fn ac5_metrics() -> mmcvae::Result<Outcome> {
    let started = Instant::now();
    let mut out = Outcome::new();
    let mut rng = Rng::seed_from_u64(505);

    let mut worst_sil = 0.0f64;
    for _ in 0..20 {
        let d = 2 + rng.below(3);
        let k = 2 + rng.below(3);
        let labels = shuffled_labels(&mut rng, 50, k);
        let mut pts = sample_std_normal(&mut rng, 50, d);
        for (r, &l) in labels.iter().enumerate() {
            pts.row_mut(r)[0] += 1.5 * l as f64;
        }
        let lib = silhouette(&pts, &labels)?.score;
        worst_sil = worst_sil.max((lib - brute_silhouette(&pts, &labels)).abs());
    }
    out.check(
        worst_sil < 1e-12,
        format!("silhouette vs brute force, 20 × 50 points: max |Δ| {worst_sil:.1e} (< 1e-12)"),
    );

    let mut worst_pca = 0.0f64;
    for _ in 0..20 {
        let d = 2 + rng.below(6);
        let scales: Vec<f64> = (0..d).map(|_| 0.1 + 3.0 * rng.uniform()).collect();
        let mix = sample_std_normal(&mut rng, d, d);
        let raw = sample_std_normal(&mut rng, 80, d);
        let x = Matrix::from_vec(
            80,
            d,
            raw.data()
                .iter()
                .enumerate()
                .map(|(i, v)| v * scales[i % d])
                .collect(),
        )?
        .matmul(&mix)?;
        let n = x.rows() as f64;
        let means: Vec<f64> = (0..d)
            .map(|j| (0..x.rows()).map(|r| x.get(r, j)).sum::<f64>() / n)
            .collect();
        let cov = nalgebra::DMatrix::from_fn(d, d, |i, j| {
            (0..x.rows())
                .map(|r| (x.get(r, i) - means[i]) * (x.get(r, j) - means[j]))
                .sum::<f64>()
                / (n - 1.0)
        });
        let full = cov.symmetric_eigen();
        let mut ev: Vec<f64> = full.eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        let got = pca_2d(&x)?.explained;
        worst_pca = worst_pca
            .max((got[0] - ev[0]).abs())
            .max((got[1] - ev[1]).abs());
    }
    out.check(worst_pca < 1e-8, format!("pca_2d explained variance vs full eigendecomposition, 20 instances: max |Δ| {worst_pca:.1e} (< 1e-8)"));

    let opts = LogisticOptions::default();
    let mut separable = Vec::new();
    for seed in 0..5 {
        let mut r = Rng::seed_from_u64(50 + seed);
        let labels = shuffled_labels(&mut r, 200, 2);
        let mut pts = sample_std_normal(&mut r, 200, 3);
        for (row, &l) in labels.iter().enumerate() {
            pts.row_mut(row)[1] += if l == 1 { 6.0 } else { -6.0 };
        }
        let emb = Embeddings::new(pts, labels, vec![Origin::Target; 200])?;
        separable.push(accuracy_80_20(&emb, LabelSource::Class, seed, &opts)?);
    }
    out.check(
        separable.iter().all(|&a| a == 1.0),
        format!(
            "separable toys, 5 seeds: accuracies {} (all 1.0)",
            fmt_list(&separable)
        ),
    );

    let mut permuted = Vec::new();
    for seed in 0..10 {
        let mut r = Rng::seed_from_u64(900 + seed);
        let pts = sample_std_normal(&mut r, 1000, 3);
        let labels = shuffled_labels(&mut r, 1000, 2);
        let emb = Embeddings::new(pts, labels, vec![Origin::Target; 1000])?;
        permuted.push(accuracy_80_20(&emb, LabelSource::Class, seed, &opts)?);
    }
    let mean = permuted.iter().sum::<f64>() / permuted.len() as f64;
    out.check(
        (mean - 0.5).abs() <= 0.1,
        format!("permuted labels, 10 seeds: mean accuracy {mean:.4} (0.5 ± 0.1)"),
    );
    out.note(format!("per-seed {}", fmt_list(&permuted)));

    let secs = started.elapsed().as_secs_f64();
    out.check(secs < 30.0, format!("runtime {secs:.2}s (< 30s)"));
    Ok(out)
}
