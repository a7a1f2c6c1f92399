//! Values checked against independent oracles: loop evaluations, finite
//! differences, dense grids and numbers frozen from a separate numpy
//! implementation of the same estimators.

mod common;

use approx::assert_relative_eq;
use common::*;
use infoshrink::baselines::{
    chen_owen_shi, chen_owen_shi_lambda_hat, chen_owen_shi_mse, pooled_mle, zheng_weight,
    zheng_weight_estimator,
};
use infoshrink::data::Dataset;
use infoshrink::error::Error;
use infoshrink::family::{link_inverse, GlmFamily};
use infoshrink::inference::{debias_identity_residual, sandwich_variance_with_fit};
use infoshrink::linalg::{self, sym_eigenvalues_sorted};
use infoshrink::mle::{fit_mle, gram_matrix, log_likelihood, score, weighted_info};
use infoshrink::multi_source::{concat_sources, select_source_config, SelectionMode};
use infoshrink::select::{
    analytic_mse_gaussian, delta_sq_hat, estimated_amse_glm, estimated_mse_gaussian,
    lambda_bound_from_grams, lambda_bound_gaussian, lambda_bound_glm, select_lambda, PluginMse,
    DEFAULT_BRACKET,
};
use infoshrink::shrink::{
    estimating_function, kl_divergence, objective, penalized_hessian, shrink_weight_matrix,
    solve_dial_estimate, solve_dial_estimate_newton, SourceSummary,
};
use infoshrink::sim::rng::SimRng;
use infoshrink::sim::sweep::{lambda_sweep, linear_grid};
use infoshrink::sim::Setting;
use nalgebra::{DMatrix, DVector};

const G: GlmFamily = GlmFamily::Gaussian;
const B: GlmFamily = GlmFamily::Bernoulli;

#[test]
fn expit_saturates() {
    let m = link_inverse(B, &vec(&[40.0, -40.0, 0.0]));
    assert!((m[0] - 1.0).abs() < 1e-12);
    assert!(m[1].abs() < 1e-12);
    assert_eq!(m[2], 0.5);
    assert_eq!(link_inverse(G, &vec(&[1.5, -2.0])), vec(&[1.5, -2.0]));
}

#[test]
fn gram_matches_outer_product_loop() {
    let mut rng = SimRng::new(1, 0, 0);
    let x = random_design(&mut rng, 5, 50, 1.0);
    let d = Dataset::new(x.clone(), DVector::zeros(50)).unwrap();
    let mut oracle = DMatrix::<f64>::zeros(5, 5);
    for i in 0..50 {
        for a in 0..5 {
            for b in 0..5 {
                oracle[(a, b)] += x[(a, i)] * x[(b, i)] / 50.0;
            }
        }
    }
    assert!((gram_matrix(&d).unwrap() - oracle).amax() < 1e-12);

    let one = Dataset::new(DMatrix::from_column_slice(2, 1, &[1.0, 2.0]), vec(&[0.0]));
    // n < p is rejected at construction.
    assert!(one.is_err());
    let eye = Dataset::new(DMatrix::identity(3, 3), DVector::zeros(3)).unwrap();
    assert!((gram_matrix(&eye).unwrap() - DMatrix::identity(3, 3) / 3.0).amax() < 1e-15);
}

#[test]
fn bernoulli_info_is_jacobian_of_mean_map() {
    let (t, _) = bernoulli_toy();
    let beta = vec(&[0.3, -0.7, 0.4]);
    let n = t.n() as f64;
    let m = |b: &DVector<f64>| t.design() * link_inverse(B, &t.linear_predictor(b)) / n;
    let h = 1e-5;
    let info = weighted_info(B, &t, &beta);
    for j in 0..3 {
        let mut up = beta.clone();
        let mut dn = beta.clone();
        up[j] += h;
        dn[j] -= h;
        let col = (m(&up) - m(&dn)) / (2.0 * h);
        for i in 0..3 {
            assert!((info[(i, j)] - col[i]).abs() < 1e-6);
        }
    }
    let eye = Dataset::new(DMatrix::identity(4, 4), DVector::zeros(4)).unwrap();
    let v0 = weighted_info(B, &eye, &DVector::zeros(4));
    assert!((v0 - DMatrix::identity(4, 4) / 16.0).amax() < 1e-15);
}

#[test]
fn gaussian_fit_matches_normal_equations_and_reference_values() {
    let (t, s) = gaussian_toy();
    let f = fit_mle(G, &t).unwrap();
    let x = t.design();
    let direct = (x * x.transpose()).lu().solve(&(x * t.response())).unwrap();
    assert!((&f.beta_hat - direct).amax() < 1e-10);
    assert_relative_eq!(
        f.beta_hat,
        vec(&[0.3211104526852937, 1.6855147764995235, -0.05986576782254459]),
        epsilon = 1e-12
    );
    assert_relative_eq!(f.gamma_hat, 0.014878290090856556, epsilon = 1e-14);
    let f1 = fit_mle(G, &s).unwrap();
    assert_relative_eq!(
        f1.beta_hat,
        vec(&[0.1476243046096532, 1.6782152221390179, 0.02672650795670483]),
        epsilon = 1e-12
    );
}

#[test]
fn exact_gaussian_fit_has_zero_variance() {
    let mut rng = SimRng::new(2, 0, 0);
    let x = random_design(&mut rng, 3, 20, 1.0);
    let b0 = vec(&[0.5, -1.0, 2.0]);
    let d = Dataset::new(x.clone(), x.tr_mul(&b0)).unwrap();
    let f = fit_mle(G, &d).unwrap();
    assert!((f.beta_hat - b0).amax() < 1e-12);
    assert!(f.gamma_hat.abs() < 1e-20);
}

#[test]
fn bernoulli_fit_matches_numpy_and_zeroes_gradient() {
    let (t, s) = bernoulli_toy();
    let f = fit_mle(B, &t).unwrap();
    let g = score(B, &t, &f.beta_hat);
    assert!(linalg::max_abs(&g) < 1e-8);
    assert_relative_eq!(
        f.beta_hat,
        vec(&[-0.00633735643439237, -0.43846450435976503, 0.9669234053382633]),
        epsilon = 1e-8
    );
    let f1 = fit_mle(B, &s).unwrap();
    assert_relative_eq!(
        f1.beta_hat,
        vec(&[0.0854708095836066, 0.2714012433394697, -2.998244354903193]),
        epsilon = 1e-8
    );
}

#[test]
fn kl_examples() {
    let (_, s) = gaussian_toy();
    let src = SourceSummary::fit(G, &s).unwrap();
    assert_eq!(kl_divergence(G, &src, &src.beta1_hat).unwrap(), 0.0);

    let eye = Dataset::new(DMatrix::identity(3, 3), vec(&[1.0, 2.0, 3.0])).unwrap();
    let mut id = SourceSummary::fit(G, &eye).unwrap();
    id.gamma1_hat = 1.0;
    let beta = &id.beta1_hat - vec(&[1.0, 0.0, 0.0]);
    assert_relative_eq!(kl_divergence(G, &id, &beta).unwrap(), 0.5, epsilon = 1e-14);
}

#[test]
fn bernoulli_kl_matches_enumeration() {
    let (_, s) = bernoulli_toy();
    let f1 = fit_mle(B, &s).unwrap();
    // Three units only; the source fit comes from all ten.
    let x3 = s.design().columns(0, 3).into_owned();
    let d3 = Dataset::new(x3.clone(), DVector::zeros(3)).unwrap();
    let src = SourceSummary::from_fit(&d3, &f1);
    let beta = vec(&[0.2, -0.4, 0.3]);
    let h = |t: f64| 1.0 / (1.0 + (-t).exp());
    let mut oracle = 0.0;
    for i in 0..3 {
        let p1 = h(x3.column(i).dot(&f1.beta_hat));
        let p = h(x3.column(i).dot(&beta));
        for (q1, q) in [(p1, p), (1.0 - p1, 1.0 - p)] {
            oracle += q1 * (q1 / q).ln();
        }
    }
    let kl = kl_divergence(B, &src, &beta).unwrap();
    assert!((kl - oracle).abs() < 1e-10);
    assert!((kl - 1.2532221125451455).abs() < 1e-8);
}

#[test]
fn gaussian_objective_and_psi_match_matrix_forms() {
    let (t, s) = gaussian_toy();
    let src = SourceSummary::fit(G, &s).unwrap();
    let g1 = &src.gram;
    let g2 = gram_matrix(&t).unwrap();
    let (n1, n2) = (s.n() as f64, t.n() as f64);
    let beta = vec(&[0.1, 1.2, -0.3]);
    let lambda = 0.8;

    let mut ll = 0.0;
    for i in 0..t.n() {
        let th = t.design().column(i).dot(&beta);
        ll += t.response()[i] * th - th * th / 2.0;
    }
    let d = &beta - &src.beta1_hat;
    let mut quad = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            quad += d[a] * g1[(a, b)] * d[b];
        }
    }
    let oracle = ll / n2 - lambda * 0.5 * quad;
    let o = objective(G, &t, &src, &beta, lambda).unwrap();
    assert!((o - oracle).abs() < 1e-12);
    let _ = n1;

    let xy = t.design() * t.response() / n2;
    let psi_oracle = xy - &g2 * &beta - g1 * d * lambda;
    let psi = estimating_function(G, &t, &src, &beta, lambda).unwrap();
    assert!((psi - psi_oracle).amax() < 1e-12);

    let at0 = objective(G, &t, &src, &beta, 0.0).unwrap();
    assert!((at0 - log_likelihood(G, &t, &beta) / n2).abs() < 1e-14);
    let a = objective(G, &t, &src, &src.beta1_hat, 0.0).unwrap();
    let b = objective(G, &t, &src, &src.beta1_hat, 7.0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn penalized_hessian_is_minus_psi_jacobian() {
    let (t, s) = bernoulli_toy();
    let src = SourceSummary::fit(B, &s).unwrap();
    let beta = vec(&[0.1, -0.2, 0.5]);
    let lambda = 0.7;
    let h = 1e-5;
    let sm = penalized_hessian(B, &t, &src, &beta, lambda).unwrap();
    for j in 0..3 {
        let mut up = beta.clone();
        let mut dn = beta.clone();
        up[j] += h;
        dn[j] -= h;
        let col = (estimating_function(B, &t, &src, &up, lambda).unwrap()
            - estimating_function(B, &t, &src, &dn, lambda).unwrap())
            / (2.0 * h);
        for i in 0..3 {
            assert!((sm[(i, j)] + col[i]).abs() < 1e-6);
        }
    }
    assert_eq!(
        penalized_hessian(B, &t, &src, &beta, 0.0).unwrap(),
        weighted_info(B, &t, &beta)
    );
    let (tg, _) = gaussian_toy();
    let gsrc = SourceSummary::gaussian_gram(8, vec(&[0.0; 3]), gram_matrix(&tg).unwrap(), 1.0).unwrap();
    let hs = penalized_hessian(G, &tg, &gsrc, &beta, 2.5).unwrap();
    assert!((hs - gram_matrix(&tg).unwrap() * 3.5).amax() < 1e-14);
}

#[test]
fn gaussian_dial_estimate_matches_numpy() {
    let (t, s) = gaussian_toy();
    let src = SourceSummary::fit(G, &s).unwrap();
    let est = solve_dial_estimate(G, &t, &src, 0.7).unwrap();
    assert_relative_eq!(
        est.beta_tilde,
        vec(&[0.2510595838570094, 1.6726747215275601, -0.0315088010808675]),
        epsilon = 1e-12
    );
    let se2 = est.sandwich_var.diagonal();
    assert_relative_eq!(
        se2,
        vec(&[0.00065128270635261, 0.00090874702512135, 0.00115186784235507]),
        epsilon = 1e-15
    );
}

#[test]
fn bernoulli_dial_estimate_matches_numpy_and_grid() {
    let (t, s) = bernoulli_toy();
    let src = SourceSummary::fit(B, &s).unwrap();
    let est = solve_dial_estimate(B, &t, &src, 0.5).unwrap();
    assert!(est.converged);
    assert_relative_eq!(
        est.beta_tilde,
        vec(&[-1.8496178610714281e-06, -3.5300779793138885e-02, 6.5957735812360752e-02]),
        epsilon = 1e-8
    );
    // Brute-force maximization over a grid around the solution.
    let step = 0.01;
    let mut best = (f64::NEG_INFINITY, DVector::zeros(3));
    for a in -20..=20 {
        for b in -20..=20 {
            for c in -20..=20 {
                let beta = &est.beta_tilde
                    + vec(&[a as f64 * step, b as f64 * step, c as f64 * step]);
                let o = objective(B, &t, &src, &beta, 0.5).unwrap();
                if o > best.0 {
                    best = (o, beta);
                }
            }
        }
    }
    assert!((best.1 - &est.beta_tilde).amax() <= step / 2.0);
}

#[test]
fn weight_matrix_limits_and_reconstruction() {
    let eye = DMatrix::<f64>::identity(3, 3);
    assert_eq!(shrink_weight_matrix(&eye, &eye, 0.0).unwrap(), eye);
    assert!(linalg::inf_norm(&shrink_weight_matrix(&eye, &eye, 1e8).unwrap()) < 1e-6);

    let mut rng = SimRng::new(3, 0, 0);
    for _ in 0..10 {
        let beta = random_vec(&mut rng, 4, 1.0);
        let t = random_dataset(&mut rng, G, 30, &beta);
        let s = random_dataset(&mut rng, G, 40, &beta);
        let src = SourceSummary::fit(G, &s).unwrap();
        let f2 = fit_mle(G, &t).unwrap();
        let lambda = 0.1 + 3.0 * rng.uniform();
        let w = shrink_weight_matrix(&f2.gram, &src.gram, lambda).unwrap();
        let recon = &w * &f2.beta_hat + (DMatrix::identity(4, 4) - &w) * &src.beta1_hat;
        let est = solve_dial_estimate(G, &t, &src, lambda).unwrap();
        assert!((recon - est.beta_tilde).amax() < 1e-10);
    }
}

#[test]
fn equal_grams_give_the_midpoint() {
    let (t, _) = gaussian_toy();
    let f2 = fit_mle(G, &t).unwrap();
    let b1 = vec(&[1.0, -1.0, 0.5]);
    let src = SourceSummary::gaussian_gram(8, b1.clone(), f2.gram.clone(), 1.0).unwrap();
    let est = solve_dial_estimate(G, &t, &src, 1.0).unwrap();
    assert!((est.beta_tilde - (&b1 + &f2.beta_hat) / 2.0).amax() < 1e-12);
}

#[test]
fn delta_sq_hat_truncates_negative_eigenvalues() {
    let mut rng = SimRng::new(4, 0, 0);
    for _ in 0..20 {
        let beta = random_vec(&mut rng, 4, 1.0);
        let t = random_dataset(&mut rng, G, 15, &beta);
        let b1 = beta + random_vec(&mut rng, 4, 0.3);
        let s = random_dataset(&mut rng, G, 15, &b1);
        let src = SourceSummary::fit(G, &s).unwrap();
        let f2 = fit_mle(G, &t).unwrap();
        let out = delta_sq_hat(&f2, &src).unwrap();
        assert!(sym_eigenvalues_sorted(&out)[0] >= -1e-12);

        // Oracle: eigendecomposition through the Schur form of nalgebra's
        // general routine on the explicit matrix.
        let dp = &f2.beta_hat - &src.beta1_hat;
        let raw = &dp * dp.transpose()
            - f2.gram.clone().try_inverse().unwrap() * (f2.gamma_hat / f2.n as f64);
        let eig = nalgebra::SymmetricEigen::new(raw.clone());
        let expected = if eig.eigenvalues.iter().all(|&v| v < 0.0) {
            &dp * dp.transpose()
        } else {
            let mut acc = DMatrix::zeros(4, 4);
            for k in 0..4 {
                let v = eig.eigenvectors.column(k);
                acc += v * v.transpose() * eig.eigenvalues[k].max(0.0);
            }
            acc
        };
        assert!((out - expected).amax() < 1e-12);
    }
    // σ̂² = 0 leaves the outer product untouched.
    let (t, s) = gaussian_toy();
    let mut f2 = fit_mle(G, &t).unwrap();
    f2.gamma_hat = 0.0;
    let src = SourceSummary::fit(G, &s).unwrap();
    let dp = &f2.beta_hat - &src.beta1_hat;
    assert_eq!(delta_sq_hat(&f2, &src).unwrap(), &dp * dp.transpose());
}

#[test]
fn scalar_mse_example() {
    let p = 4;
    let eye = DMatrix::<f64>::identity(p, p);
    let mut dsq = DMatrix::zeros(p, p);
    dsq[(0, 0)] = 1.0;
    let curve = PluginMse::Gaussian {
        g1: eye.clone(),
        g2: eye,
        sigma2: 1.0,
        n2: 10,
        delta_sq: dsq,
    };
    for &l in &[0.0, 0.1, 0.5, 1.0, 3.0, 20.0] {
        let hand = (p as f64 / 10.0 + l * l) / ((1.0 + l) * (1.0 + l));
        assert!((curve.eval(l).unwrap() - hand).abs() < 1e-14);
    }
    let sel = curve.select(DEFAULT_BRACKET).unwrap();
    // d/dλ of the hand expression vanishes at λ = p/10.
    assert!((sel.lambda_tilde - 0.4).abs() < 1e-5);
}

#[test]
fn gaussian_plugin_curve_matches_numpy() {
    let (t, s) = gaussian_toy();
    let src = SourceSummary::fit(G, &s).unwrap();
    let f2 = fit_mle(G, &t).unwrap();
    let m = estimated_mse_gaussian(&f2, &src, 0.3).unwrap();
    assert!((m - 0.006277127743247516).abs() < 1e-14);
    let at0 = estimated_mse_gaussian(&f2, &src, 0.0).unwrap();
    let mle_var = f2.gamma_hat / f2.n as f64 * f2.gram.clone().try_inverse().unwrap().trace();
    assert!((at0 - mle_var).abs() < 1e-15);
    let sel = PluginMse::gaussian(&f2, &src).unwrap().select(DEFAULT_BRACKET).unwrap();
    // Dense 4·10⁵-point log grid minimum from the numpy oracle.
    assert!(rel_err(sel.lambda_tilde, 0.2270596687811443) < 1e-4);
    assert!((sel.mse_at_tilde - 0.006192217339523735).abs() < 1e-12);
}

#[test]
fn bernoulli_amse_matches_loop_and_reference_values() {
    let (t, s) = bernoulli_toy();
    let src = SourceSummary::fit(B, &s).unwrap();
    let f2 = fit_mle(B, &t).unwrap();
    let a1 = estimated_amse_glm(B, &t, &f2, &src, 1.0).unwrap();
    assert!((a1 - 32.50855309189642).abs() < 1e-6);

    // Term-by-term loop oracle using the model quantities.
    let h = |x: f64| 1.0 / (1.0 + (-x).exp());
    let info = |d: &Dataset, b: &DVector<f64>| {
        let mut m = DMatrix::<f64>::zeros(3, 3);
        for i in 0..d.n() {
            let x = d.design().column(i);
            let mu = h(x.dot(b));
            m += x * x.transpose() * (mu * (1.0 - mu) / d.n() as f64);
        }
        m
    };
    let v2 = info(&t, &f2.beta_hat);
    let v1 = info(&s, &f2.beta_hat);
    let mut u = DVector::<f64>::zeros(3);
    for i in 0..s.n() {
        let x = s.design().column(i);
        u += x * (h(x.dot(&f2.beta_hat)) - h(x.dot(&src.beta1_hat)));
    }
    let si = (&v2 + &v1).try_inverse().unwrap();
    let mut var = 0.0;
    let m = &si * &si * &v2;
    for k in 0..3 {
        var += m[(k, k)];
    }
    let b = &si * &u;
    let mut bias = 0.0;
    for k in 0..3 {
        bias += b[k] * b[k];
    }
    bias *= 8.0 / 100.0;
    assert!((a1 - (var + bias)).abs() < 1e-10);
    let a0 = estimated_amse_glm(B, &t, &f2, &src, 0.0).unwrap();
    assert!((a0 - 19.992966736908826).abs() < 1e-6);
}

#[test]
fn amse_reduces_to_gaussian_form_without_truncation() {
    let mut rng = SimRng::new(5, 0, 0);
    for _ in 0..10 {
        let beta = random_vec(&mut rng, 3, 1.0);
        let t = random_dataset(&mut rng, G, 25, &beta);
        let b1 = &beta + random_vec(&mut rng, 3, 0.5);
        let s = random_dataset(&mut rng, G, 35, &b1);
        let src = SourceSummary::fit(G, &s).unwrap();
        let f2 = fit_mle(G, &t).unwrap();
        let dp = &f2.beta_hat - &src.beta1_hat;
        let gauss = PluginMse::Gaussian {
            g1: src.gram.clone(),
            g2: f2.gram.clone(),
            sigma2: f2.gamma_hat,
            n2: f2.n,
            delta_sq: &dp * dp.transpose(),
        };
        let glm = PluginMse::glm(G, &f2, &src).unwrap();
        for &l in &[0.0, 0.2, 1.0, 5.0] {
            let a = glm.eval(l).unwrap();
            let b = gauss.eval(l).unwrap() * f2.n as f64;
            assert!(rel_err(a, b) < 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn amse_strictly_decreasing_when_fits_agree() {
    let (t, s) = bernoulli_toy();
    let f2 = fit_mle(B, &t).unwrap();
    let mut src = SourceSummary::fit(B, &s).unwrap();
    src.beta1_hat = f2.beta_hat.clone();
    let curve = PluginMse::glm(B, &f2, &src).unwrap();
    let grid = linear_grid(0.0, 10.0, 50);
    let vals: Vec<f64> = grid.iter().map(|&l| curve.eval(l).unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn selector_finds_known_minimum_and_matches_dense_grid() {
    let c = select_lambda(|l| (l - 3.0).powi(2) + 1.0, (0.0, 10.0)).unwrap();
    assert!((c.lambda_tilde - 3.0).abs() < 1e-5);

    let f = |l: f64| (l.ln() - 0.3).powi(2) * 0.2 + (0.5 * l).sin() * 0.05 + 1.0 / (1.0 + l);
    let c = select_lambda(f, (0.0, 10.0)).unwrap();
    let k = 100_000;
    let h = 10.0 / k as f64;
    let (mut arg, mut best) = (0.0, f64::INFINITY);
    for i in 1..=k {
        let l = i as f64 * h;
        if f(l) < best {
            best = f(l);
            arg = l;
        }
    }
    assert!((c.lambda_tilde - arg).abs() <= h);
}

#[test]
fn gaussian_bound_examples() {
    let eye = DMatrix::<f64>::identity(3, 3);
    let e1 = vec(&[1.0, 0.0, 0.0]);
    let b = lambda_bound_from_grams(&eye, &eye, &e1, 1.0 / 10.0).unwrap();
    assert!((b - 0.1).abs() < 1e-15);
    let b3 = lambda_bound_from_grams(&eye, &eye, &(&e1 * 3.0), 0.1).unwrap();
    assert!((b3 - 0.1 / 9.0).abs() < 1e-15);
    assert!(matches!(
        lambda_bound_from_grams(&eye, &eye, &DVector::zeros(3), 0.1),
        Err(Error::ZeroDelta)
    ));
}

#[test]
fn glm_bound_reduces_to_gaussian() {
    let mut rng = SimRng::new(6, 0, 0);
    for _ in 0..10 {
        let beta = random_vec(&mut rng, 3, 1.0);
        let t = random_dataset(&mut rng, G, 20, &beta);
        let s = random_dataset(&mut rng, G, 30, &beta);
        let src = SourceSummary::fit(G, &s).unwrap();
        let f2 = fit_mle(G, &t).unwrap();
        let beta_ref = &src.beta1_hat + random_vec(&mut rng, 3, 0.4);
        let sigma2 = 0.5 + rng.uniform();
        let glm = lambda_bound_glm(G, &t, &src, &beta_ref, sigma2).unwrap();
        let delta = &beta_ref - &src.beta1_hat;
        let gauss = lambda_bound_gaussian(&f2, &src, &delta, sigma2, t.n()).unwrap();
        assert!(rel_err(glm, gauss) < 1e-10);
    }
    let (t, s) = bernoulli_toy();
    let src = SourceSummary::fit(B, &s).unwrap();
    let b1 = src.beta1_hat.clone();
    assert!(matches!(lambda_bound_glm(B, &t, &src, &b1, 1.0), Err(Error::ZeroDelta)));
}

#[test]
fn bernoulli_bound_matches_numpy() {
    let (t, s) = bernoulli_toy();
    let src = SourceSummary::fit(B, &s).unwrap();
    let f2 = fit_mle(B, &t).unwrap();
    let b = lambda_bound_glm(B, &t, &src, &f2.beta_hat, 1.0).unwrap();
    assert!(rel_err(b, 0.034613063858902914) < 1e-7);
}

#[test]
fn analytic_mse_matches_monte_carlo() {
    let mut rng = SimRng::new(7, 0, 0);
    let (p, n2) = (3, 40);
    let x2 = random_design(&mut rng, p, n2, 1.0);
    let x1 = random_design(&mut rng, p, 60, 1.0);
    let g2 = &x2 * x2.transpose() / n2 as f64;
    let g1 = &x1 * x1.transpose() / 60.0;
    let beta2 = vec(&[0.5, -1.0, 0.8]);
    let delta = vec(&[0.2, -0.3, 0.1]);
    let beta1 = &beta2 - &delta;
    let lambdas = [0.0, 0.1, 0.5, 1.0, 4.0];
    let reps = 20_000;
    let mut sq = vec![Vec::with_capacity(reps); lambdas.len()];
    let mean = x2.tr_mul(&beta2);
    for _ in 0..reps {
        let y = DVector::from_fn(n2, |i, _| mean[i] + rng.normal());
        let xy = &x2 * y / n2 as f64;
        for (k, &l) in lambdas.iter().enumerate() {
            let s = &g2 + &g1 * l;
            let b = s.lu().solve(&(&xy + &g1 * &beta1 * l)).unwrap();
            sq[k].push((b - &beta2).norm_squared());
        }
    }
    for (k, &l) in lambdas.iter().enumerate() {
        let parts = analytic_mse_gaussian(&g1, &g2, 1.0, n2, &delta, l).unwrap();
        let m = sq[k].iter().sum::<f64>() / reps as f64;
        let sd = (sq[k].iter().map(|v| (v - m).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
        let se = sd / (reps as f64).sqrt();
        assert!((m - parts.total).abs() < 3.0 * se, "λ={l}: {m} vs {}", parts.total);
    }
    let z = analytic_mse_gaussian(&g1, &g2, 1.0, n2, &delta, 0.0).unwrap();
    assert_eq!(z.bias, 0.0);
    assert!((z.total - g2.clone().try_inverse().unwrap().trace() / n2 as f64).abs() < 1e-14);
}

#[test]
fn sandwich_variance_shrinks_in_loewner_order() {
    let mut rng = SimRng::new(8, 0, 0);
    for _ in 0..20 {
        let beta = random_vec(&mut rng, 4, 1.0);
        let t = random_dataset(&mut rng, G, 25, &beta);
        let s = random_dataset(&mut rng, G, 30, &beta);
        let src = SourceSummary::fit(G, &s).unwrap();
        let f2 = fit_mle(G, &t).unwrap();
        let v0 = sandwich_variance_with_fit(G, &f2, &src, 0.0).unwrap();
        assert!((&v0 - f2.covariance().unwrap()).amax() < 1e-14);
        let l = 0.05 + 2.0 * rng.uniform();
        let vl = sandwich_variance_with_fit(G, &f2, &src, l).unwrap();
        let gap = sym_eigenvalues_sorted(&(&v0 - &vl));
        assert!(gap[0] > 0.0);
    }
}

#[test]
fn debias_identity_examples() {
    let eye = DMatrix::<f64>::identity(3, 3);
    assert_eq!(debias_identity_residual(&eye, &eye, 0.0).unwrap(), 0.0);
    assert!(debias_identity_residual(&eye, &eye, 1.0).unwrap() < 1e-15);
    let mut rng = SimRng::new(9, 0, 0);
    for _ in 0..10 {
        let g1 = random_spd(&mut rng, 5);
        let g2 = random_spd(&mut rng, 5);
        for l in [0.1, 1.0, 10.0] {
            assert!(debias_identity_residual(&g1, &g2, l).unwrap() < 1e-10);
        }
        assert_eq!(debias_identity_residual(&g1, &g2, 0.0).unwrap(), 0.0);
    }
}

#[test]
fn pooled_is_stacked_ols() {
    let (t, s) = gaussian_toy();
    let pooled = pooled_mle(G, &t, &s).unwrap();
    let mut x = DMatrix::zeros(3, 18);
    x.columns_mut(0, 8).copy_from(t.design());
    x.columns_mut(8, 10).copy_from(s.design());
    let y = DVector::from_iterator(18, t.response().iter().chain(s.response().iter()).copied());
    let direct = (&x * x.transpose()).lu().solve(&(&x * y)).unwrap();
    assert!((pooled.beta_hat - direct).amax() < 1e-10);
    let same = pooled_mle(G, &t, &t).unwrap();
    assert!((same.beta_hat - fit_mle(G, &t).unwrap().beta_hat).amax() < 1e-12);
}

#[test]
fn chen_owen_shi_limits_and_selector() {
    let (t, s) = gaussian_toy();
    let src = SourceSummary::fit(G, &s).unwrap();
    let f2 = fit_mle(G, &t).unwrap();
    let far = chen_owen_shi(&f2, &src, 1e8).unwrap();
    // W_λ → (A₂ + A₁)⁻¹A₂, not I; pin the value of the printed formula.
    let a1 = &src.gram * 10.0;
    let a2 = &f2.gram * 8.0;
    let w_inf = (&a2 + &a1).lu().solve(&a2).unwrap();
    let lim = &w_inf * &f2.beta_hat + (DMatrix::identity(3, 3) - &w_inf) * &src.beta1_hat;
    assert!((far - lim).amax() < 1e-7);
    // At λ = 0 the weight is A₁⁻¹A₁ = I, so the estimator is β̂₂.
    let zero = chen_owen_shi(&f2, &src, 0.0).unwrap();
    assert!((zero - &f2.beta_hat).amax() < 1e-12);

    let curve = chen_owen_shi_lambda_hat(&f2, &src).unwrap();
    let g2_inv = f2.gram.clone().try_inverse().unwrap();
    let dsq = delta_sq_hat(&f2, &src).unwrap();
    let k = 20_000;
    let (lo, hi) = (DEFAULT_BRACKET.0.ln(), DEFAULT_BRACKET.1.ln());
    let (mut arg, mut best) = (0.0, f64::INFINITY);
    for i in 0..=k {
        let l = (lo + (hi - lo) * i as f64 / k as f64).exp();
        let v = chen_owen_shi_mse(&f2, &src, &g2_inv, &dsq, l).unwrap();
        if v < best {
            best = v;
            arg = l;
        }
    }
    assert!(curve.mse_at_tilde <= best + 1e-15);
    let step = (hi - lo) / k as f64;
    assert!((curve.lambda_tilde.ln() - arg.ln()).abs() <= step);
}

#[test]
fn zheng_fixed_point_and_convex_form() {
    let (t, s) = bernoulli_toy();
    let f2 = fit_mle(B, &t).unwrap();
    let mut src = SourceSummary::fit(B, &s).unwrap();
    let w = zheng_weight(B, &f2, &src).unwrap();
    let est = zheng_weight_estimator(B, &f2, &src).unwrap();
    let convex = &w * &f2.beta_hat + (DMatrix::identity(3, 3) - &w) * &src.beta1_hat;
    assert!((est - convex).amax() < 1e-10);

    src.beta1_hat = f2.beta_hat.clone();
    let est = zheng_weight_estimator(B, &f2, &src).unwrap();
    assert!((est - &f2.beta_hat).amax() < 1e-12);
}

#[test]
fn concatenated_gram_is_weighted_average() {
    let mut rng = SimRng::new(10, 0, 0);
    let beta = vec(&[1.0, 0.5, -0.5]);
    let a = random_dataset(&mut rng, G, 3, &beta);
    let b = random_dataset(&mut rng, G, 5, &beta);
    let c = concat_sources(&[a.clone(), b.clone()]).unwrap();
    assert_eq!(c.n(), 8);
    assert_eq!(c.design().column(3), b.design().column(0));
    let expected = (gram_matrix(&a).unwrap() * 3.0 + gram_matrix(&b).unwrap() * 5.0) / 8.0;
    assert!((gram_matrix(&c).unwrap() - expected).amax() < 1e-12);
    assert_eq!(concat_sources(&[a.clone()]).unwrap(), a);
}

#[test]
fn identical_sources_favour_full_concatenation() {
    let beta = vec(&[0.5, 1.0, -1.0]);
    let mut wins = 0;
    let reps = 50;
    for r in 0..reps {
        let mut rng = SimRng::new(11, 0, r);
        let t = random_dataset(&mut rng, G, 200, &beta);
        let s1 = random_dataset(&mut rng, G, 20, &beta);
        let s2 = random_dataset(&mut rng, G, 20, &beta);
        let sel = select_source_config(G, &t, &[s1, s2], SelectionMode::SinglesAndFull).unwrap();
        assert_ne!(sel.winner().config.id, "{}");
        if sel.winner().config.id == "{1,2}" {
            wins += 1;
        }
    }
    assert!(wins as f64 >= 0.9 * reps as f64, "full won {wins}/{reps}");
}

#[test]
fn large_source_gram_is_near_identity() {
    let cell = Setting::I { n1: 5000, n2: 50 }.build_cell(12).unwrap();
    let g = gram_matrix(&cell.sources[0]).unwrap();
    let block = g.view((1, 1), (10, 10)).into_owned();
    assert!((block - DMatrix::identity(10, 10)).amax() < 5.0 / (5000f64).sqrt());
}

#[test]
fn sweep_zero_is_mle_and_minimum_matches_selector() {
    let (t, s) = gaussian_toy();
    let src = SourceSummary::fit(G, &s).unwrap();
    let f2 = fit_mle(G, &t).unwrap();
    let zero = lambda_sweep(G, &t, &src, &[0.0]).unwrap();
    assert_eq!(zero.len(), 1);
    assert_eq!(zero[0].beta, f2.beta_hat.iter().copied().collect::<Vec<_>>());

    let grid = linear_grid(0.0, 2.0, 201);
    let rows = lambda_sweep(G, &t, &src, &grid).unwrap();
    let (arg, _) = rows
        .iter()
        .map(|r| (r.lambda, r.est_mse.unwrap()))
        .fold((0.0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
    let sel = PluginMse::gaussian(&f2, &src).unwrap().select(DEFAULT_BRACKET).unwrap();
    assert!((arg - sel.lambda_tilde).abs() <= 0.01 + 1e-12);
}

#[test]
fn newton_and_closed_form_agree_on_toy() {
    let (t, s) = gaussian_toy();
    let src = SourceSummary::fit(G, &s).unwrap();
    let f2 = fit_mle(G, &t).unwrap();
    for l in [0.0, 0.3, 2.0, 50.0] {
        let a = solve_dial_estimate(G, &t, &src, l).unwrap();
        let b = solve_dial_estimate_newton(G, &t, &f2, &src, l).unwrap();
        assert!((a.beta_tilde - b.beta_tilde).amax() < 1e-8);
    }
}
