use cpf_core::analytic::NoiseModel;
use cpf_core::rng::{StreamDomain, StreamFamily};
use cpf_core::spinbath::lorentz::{lorentz_cpf, LorentzEnsemble};
use cpf_core::spinbath::LorentzCouplingSpec;
use cpf_core::stochastic::{
    mc_conditional_coherence, mc_cpf_sampling, mc_cpf_semianalytic, mc_moments, ou_path_reference,
    sample_phase_pair, sample_postselected, trajectory_probabilities,
};
use cpf_core::{cpf_probability_table, Estimate, McConfig, Outcome};

const N: u64 = 1_000_000;

fn assert_within(e: &Estimate, expected: f64, k: f64, what: &str) {
    assert!(
        e.within_sigma(expected, k),
        "{what}: {e} vs {expected}, z = {:.2}",
        e.z_score(expected)
    );
}

#[test]
fn white_phase_moment_identity() {
    let white = NoiseModel::white(1.0).unwrap();
    let streams = StreamFamily::new(11, StreamDomain::Trajectory);
    let mut rng = streams.stream(0);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..N {
        let c = sample_phase_pair(&white, 1.0, 0.0, &mut rng)
            .unwrap()
            .coherence_first();
        s += c;
        s2 += c * c;
    }
    let mean = s / N as f64;
    let se = ((s2 / N as f64 - mean * mean) / (N - 1) as f64).sqrt();
    let e = Estimate::new(mean, se, N).unwrap();
    assert_within(&e, (-2.0f64).exp(), 3.0, "E cos 2θ1");
}

#[test]
fn ou_joint_moment_by_sampling() {
    let ou = NoiseModel::exp_corr_gauss(1.0, 1.0).unwrap();
    let (_, _, joint) = mc_moments(&ou, 1.0, 1.0, &McConfig::new(N, 12)).unwrap();
    assert_within(&joint, ou.joint_moment(1.0, 1.0).unwrap(), 3.0, "OU f(t,τ)");
}

#[test]
fn per_realization_probabilities_normalized() {
    let models = [
        NoiseModel::white(2.0).unwrap(),
        NoiseModel::exp_corr_gauss(1.0, 0.3).unwrap(),
        NoiseModel::static_gauss(1.5).unwrap(),
        NoiseModel::static_lorentz(1.0, 2.0).unwrap(),
    ];
    let mut rng = StreamFamily::new(13, StreamDomain::Trajectory).stream(0);
    for m in &models {
        for _ in 0..2000 {
            let tp = trajectory_probabilities(&sample_phase_pair(m, 0.8, 1.7, &mut rng).unwrap());
            for x in Outcome::BOTH {
                let sy: f64 = Outcome::BOTH.iter().map(|&y| tp.p_y_given_x(y, x)).sum();
                assert!((sy - 1.0).abs() < 1e-15);
                for y in Outcome::BOTH {
                    let p = tp.p_y_given_x(y, x);
                    assert!((0.0..=1.0).contains(&p));
                    let sz: f64 = Outcome::BOTH
                        .iter()
                        .map(|&z| tp.p_z_given_yx(z, y, x))
                        .sum();
                    assert!((sz - 1.0).abs() < 1e-15);
                    assert_eq!(
                        tp.p_z_given_yx(Outcome::Plus, y, x),
                        tp.p_z_given_yx(Outcome::Plus, y, x.flip())
                    );
                }
            }
        }
    }
}

#[test]
fn white_triples_follow_analytic_table() {
    let white = NoiseModel::white(1.0).unwrap();
    let (t, tau) = (0.4, 0.3);
    let counts = sample_postselected(&white, t, tau, Outcome::Plus, &McConfig::new(N, 14)).unwrap();
    let table = cpf_probability_table(&white.moments(t, tau).unwrap(), Outcome::Plus).unwrap();
    let kept = counts.kept() as f64;
    let mut chi2 = 0.0;
    for z in Outcome::BOTH {
        for x in Outcome::BOTH {
            let expected = kept * table.entry(z, x);
            chi2 += (counts.count(z, x) as f64 - expected).powi(2) / expected;
        }
    }
    // 3 degrees of freedom; p = 0.001 at 16.27
    assert!(chi2 < 16.27, "chi2 = {chi2}");
}

#[test]
fn first_outcome_is_fair() {
    let ou = NoiseModel::exp_corr_gauss(1.0, 2.0).unwrap();
    let cfg = McConfig::new(N, 15);
    // Same streams, so the two postselections partition one set of triples.
    let plus = sample_postselected(&ou, 1.0, 1.0, Outcome::Plus, &cfg).unwrap();
    let minus = sample_postselected(&ou, 1.0, 1.0, Outcome::Minus, &cfg).unwrap();
    assert_eq!(plus.kept() + minus.kept(), N);
    let x_plus: u64 = [plus, minus]
        .iter()
        .flat_map(|c| Outcome::BOTH.map(|z| c.count(z, Outcome::Plus)))
        .sum();
    let p = x_plus as f64 / N as f64;
    let se = (0.25 / N as f64).sqrt();
    assert!((p - 0.5).abs() <= 3.0 * se, "P(x=+1) = {p}");
}

#[test]
fn moment_examples() {
    let white = NoiseModel::white(1.0).unwrap();
    let (f, _, _) = mc_moments(&white, 0.5, 0.5, &McConfig::new(N, 16)).unwrap();
    assert_within(&f, (-1.0f64).exp(), 3.0, "white f(0.5)");

    let lor = NoiseModel::static_lorentz(1.0, 0.0).unwrap();
    let (_, _, joint) = mc_moments(&lor, 1.0, 1.0, &McConfig::new(N, 17)).unwrap();
    assert_within(&joint, ((-2.0f64).exp() + 1.0) / 2.0, 3.0, "Lorentz f(t,τ)");
}

#[test]
fn semianalytic_examples() {
    let white = NoiseModel::white(1.0).unwrap();
    for (k, &(t, tau)) in [(0.3, 0.7), (1.0, 1.0), (2.0, 0.5)].iter().enumerate() {
        let e = mc_cpf_semianalytic(&white, t, tau, &McConfig::new(N, 18 + k as u64)).unwrap();
        assert_within(&e, 0.0, 4.0, "white C");
    }
    let sg = NoiseModel::static_gauss(1.0).unwrap();
    let exact = (1.0 + (-8.0f64).exp()) / 2.0 - (-4.0f64).exp();
    assert!((exact - 0.48185).abs() < 5e-6);
    let e = mc_cpf_semianalytic(&sg, 1.0, 1.0, &McConfig::new(N, 21)).unwrap();
    assert_within(&e, exact, 3.0, "static Gauss C(1,1)");

    let ou = NoiseModel::exp_corr_gauss(1.0, 5.0).unwrap();
    let e = mc_cpf_semianalytic(&ou, 1.0, 1.0, &McConfig::new(N, 22)).unwrap();
    assert_within(&e, ou.cpf(1.0, 1.0).unwrap(), 3.0, "OU C(1,1)");
}

#[test]
fn sampling_example_lorentz() {
    let lor = NoiseModel::static_lorentz(1.0, 0.0).unwrap();
    let e = mc_cpf_sampling(&lor, 1.0, 1.0, Outcome::Plus, &McConfig::new(N, 23)).unwrap();
    assert_within(&e, 0.43233, 3.0, "Lorentz sampling C(1,1)");
}

#[test]
fn conditional_coherence_examples() {
    let white = NoiseModel::white(1.0).unwrap();
    let cfg = McConfig::new(N, 24);
    let plus = mc_conditional_coherence(&white, 2.0, 0.5, Outcome::Plus, &cfg).unwrap();
    let minus = mc_conditional_coherence(&white, 2.0, 0.5, Outcome::Minus, &cfg).unwrap();
    assert_within(&plus, (-1.0f64).exp(), 3.0, "white c^+");
    assert_within(&minus, (-1.0f64).exp(), 3.0, "white c^-");
    assert!(plus.combined_z(&minus) < 3.0);

    let zero = mc_conditional_coherence(&white, 1.0, 0.0, Outcome::Plus, &cfg).unwrap();
    assert_eq!(zero.value, 1.0);

    let lor = NoiseModel::static_lorentz(1.0, 0.0).unwrap();
    let e = mc_conditional_coherence(&lor, 1.0, 1.0, Outcome::Plus, &McConfig::new(N, 25)).unwrap();
    assert_within(&e, 0.68394, 3.0, "Lorentz c^+(1,1)");
}

#[test]
fn white_yx_independence_across_times() {
    let white = NoiseModel::white(0.6).unwrap();
    for (k, &(t, tau)) in [(0.2, 0.2), (0.5, 1.5), (3.0, 0.4)].iter().enumerate() {
        let cfg = McConfig::new(200_000, 30 + k as u64);
        let p = mc_conditional_coherence(&white, t, tau, Outcome::Plus, &cfg).unwrap();
        let m = mc_conditional_coherence(&white, t, tau, Outcome::Minus, &cfg).unwrap();
        assert!(p.combined_z(&m) < 3.0, "{p} vs {m}");
    }
}

#[test]
fn exact_ou_sampler_matches_path_integration() {
    let (t, tau) = (1.0, 1.0);
    for (k, (g, tau_c)) in [(1.0, 1.0), (1.0, 0.3), (0.7, 4.0)].into_iter().enumerate() {
        let ou = NoiseModel::exp_corr_gauss(g, tau_c).unwrap();
        let dt: f64 = tau_c.min(1.0 / g) / 50.0;
        let bias = 2.0 * (t + tau) * g * g * dt * dt / tau_c;
        let exact = mc_moments(&ou, t, tau, &McConfig::new(N, 40 + k as u64)).unwrap();
        let path = ou_path_reference(&ou, t, tau, &McConfig::new(200_000, 50 + k as u64)).unwrap();
        for (a, b) in [(exact.0, path.0), (exact.1, path.1), (exact.2, path.2)] {
            let sigma = a.std_error.hypot(b.std_error);
            assert!(
                (a.value - b.value).abs() <= 3.0 * sigma + bias,
                "g={g} τc={tau_c}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn path_reference_examples() {
    let ou = NoiseModel::exp_corr_gauss(1.0, 1.0).unwrap();
    let z = ou_path_reference(&ou, 0.0, 0.0, &McConfig::new(100, 1)).unwrap();
    assert_eq!((z.0.value, z.1.value, z.2.value), (1.0, 1.0, 1.0));

    let bias = 2.0 * 2.0 / 2500.0;
    let (f, _, joint) = ou_path_reference(&ou, 1.0, 1.0, &McConfig::new(400_000, 60)).unwrap();
    let f_exact = (-4.0 / std::f64::consts::E).exp();
    assert!((f_exact - 0.22958).abs() < 5e-6);
    assert!((f.value - f_exact).abs() <= 3.0 * f.std_error + bias, "{f}");
    let phi = 4.0 * (1.0 - (-1.0f64).exp()).powi(2);
    let j_exact = f_exact * f_exact * phi.cosh();
    assert!(
        (joint.value - j_exact).abs() <= 3.0 * joint.std_error + bias,
        "{joint}"
    );
}

fn scaled_error(e: &Estimate) -> f64 {
    e.std_error * (e.n_samples as f64).sqrt()
}

#[test]
fn standard_errors_scale_as_inverse_root_n() {
    let ou = NoiseModel::exp_corr_gauss(1.0, 1.0).unwrap();
    let sizes = [1_000u64, 10_000, 100_000, 1_000_000];
    let mut rows: Vec<[f64; 3]> = Vec::new();
    for (k, &n) in sizes.iter().enumerate() {
        let cfg = McConfig::new(n, 70 + k as u64);
        let (f, _, _) = mc_moments(&ou, 1.0, 1.0, &cfg).unwrap();
        let semi = mc_cpf_semianalytic(&ou, 1.0, 1.0, &cfg).unwrap();
        let samp = mc_cpf_sampling(&ou, 1.0, 1.0, Outcome::Plus, &cfg).unwrap();
        rows.push([scaled_error(&f), scaled_error(&semi), scaled_error(&samp)]);
    }
    let reference = rows[3];
    for row in &rows {
        for j in 0..3 {
            let ratio = row[j] / reference[j];
            assert!((0.8..=1.2).contains(&ratio), "σ√n ratio {ratio} ({rows:?})");
        }
    }
}

#[test]
fn lorentz_table_average_converges() {
    let spec = LorentzCouplingSpec::unpolarized(1.0, 0.0, 20).unwrap();
    let exact = lorentz_cpf(1.0, 1.0, 1.0).unwrap();
    let mut scaled = Vec::new();
    for (k, m) in [1_000u64, 10_000, 100_000, 1_000_000]
        .into_iter()
        .enumerate()
    {
        let e = LorentzEnsemble::sample(&spec, 1.0, 1.0, &McConfig::new(m, 80 + k as u64))
            .unwrap()
            .table_cpf()
            .unwrap();
        assert_within(&e, exact, 3.0, "ensemble C");
        scaled.push(scaled_error(&e));
    }
    for s in &scaled {
        let ratio = s / scaled[3];
        assert!((0.8..=1.2).contains(&ratio), "σ√M {scaled:?}");
    }
}

#[test]
fn estimates_reproducible_across_thread_counts() {
    let lor = LorentzCouplingSpec::unpolarized(1.0, 0.5, 10).unwrap();
    let ou = NoiseModel::exp_corr_gauss(1.0, 0.5).unwrap();
    let cfg = McConfig::new(50_000, 90).with_chunk_size(777);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let a = mc_cpf_semianalytic(&ou, 0.7, 1.1, &cfg).unwrap();
            let b = mc_cpf_sampling(&ou, 0.7, 1.1, Outcome::Minus, &cfg).unwrap();
            let c = LorentzEnsemble::sample(&lor, 0.7, 1.1, &cfg)
                .unwrap()
                .table_cpf()
                .unwrap();
            let d = ou_path_reference(&ou, 0.7, 1.1, &cfg).unwrap().2;
            [a, b, c, d].map(|e| (e.value.to_bits(), e.std_error.to_bits()))
        })
    };
    let one = run(1);
    for threads in [2, 3, 8] {
        assert_eq!(one, run(threads), "threads = {threads}");
    }
}

#[test]
fn detuned_lorentz_moments_by_sampling() {
    // f' = f and the cosine joint moment for ω ≠ 0
    let lor = NoiseModel::static_lorentz(0.8, 1.3).unwrap();
    for (k, &(t, tau)) in [(0.5, 1.0), (1.2, 0.4), (2.0, 2.0)].iter().enumerate() {
        let m = lor.moments(t, tau).unwrap();
        let (f, fp, joint) = mc_moments(&lor, t, tau, &McConfig::new(N, 100 + k as u64)).unwrap();
        assert_within(&f, m.f_t, 3.0, "f(t)");
        assert_within(&fp, m.f_tau, 3.0, "f'(τ)");
        assert_within(&joint, m.f_joint, 3.0, "f(t,τ)");
    }
}
