use entropic::dirichlet_probe::{
    builtin_family, logsob_probe, poincare_probe, poincare_probe_family, CylinderFunction, OuterMap, TestFunction,
};
use entropic::entropic_measure::{bridge_covariance, EntropicParams, Partition};

fn params(beta: f64) -> EntropicParams {
    EntropicParams::new(beta).unwrap()
}

/// Exact variance of a linear functional Σ_i c_i g(t_i) of the discretized path.
fn linear_variance(weights: &[f64], partition: &Partition, beta: f64) -> f64 {
    let t = partition.interior();
    let mut v = 0.0;
    for i in 0..t.len() {
        for j in 0..t.len() {
            v += weights[i] * weights[j] * bridge_covariance(t[i], t[j], params(beta)).unwrap();
        }
    }
    v
}

#[test]
fn linear_step_functional_matches_bridge_covariance() {
    let beta = 1.0;
    let p = Partition::dyadic(5).unwrap();
    let step = TestFunction::step(vec![0.0, 0.3, 0.7, 1.0], vec![1.0, -2.0, 0.5]).unwrap();
    let f = CylinderFunction::new(
        vec![step.clone()],
        OuterMap::Linear {
            weights: vec![1.5],
            offset: 0.2,
        },
    )
    .unwrap();
    // g = g(t_i) on cell i, cell 0 carries g = 0
    let cells = step.cell_integrals(&p);
    let weights: Vec<f64> = cells[1..].iter().map(|c| 1.5 * c).collect();
    let exact = linear_variance(&weights, &p, beta);
    let r = poincare_probe(&f, params(beta), &p, 100_000, 31).unwrap();
    let l = &r.levels[0];
    assert!((l.variance.value - exact).abs() <= 3.0 * l.variance.stderr, "{l:?} vs {exact}");
    let energy = 1.5 * 1.5 * step.inner(&step);
    assert!((l.energy.value - energy).abs() < 1e-12 * energy, "{} vs {energy}", l.energy.value);
}

#[test]
fn mean_functional_poincare_margin() {
    let f = CylinderFunction::new(vec![TestFunction::one()], OuterMap::identity()).unwrap();
    let p = Partition::dyadic(8).unwrap();
    for (i, beta) in [0.5, 1.0, 2.0, 5.0].into_iter().enumerate() {
        let r = poincare_probe(&f, params(beta), &p, 100_000, 100 + i as u64).unwrap();
        let exact = 1.0 / (12.0 * (beta + 1.0));
        let l = &r.levels[0];
        assert!((l.variance.value - exact).abs() <= 3.0 * l.variance.stderr, "β={beta}: {l:?}");
        assert!(l.poincare_margin.value > 0.0);
        assert!((l.poincare_margin.value - (1.0 / beta - exact)).abs() <= 4.0 * l.poincare_margin.stderr);
        assert_eq!(r.levels[1].cells, 128);
    }
}

#[test]
fn family_never_fails_poincare() {
    let fam = builtin_family();
    let refs: Vec<&CylinderFunction> = fam.iter().map(|(_, f)| f).collect();
    let p = Partition::dyadic(8).unwrap();
    for (i, beta) in [0.5, 1.0, 2.0, 5.0].into_iter().enumerate() {
        let reports = poincare_probe_family(&refs, params(beta), &p, 100_000, 200 + i as u64).unwrap();
        for ((name, _), r) in fam.iter().zip(&reports) {
            assert!(r.poincare_pass(), "{name} β={beta}: {:?}", r.levels);
            for l in &r.levels {
                assert!(l.variance.stderr >= 0.0 && l.energy.value >= 0.0);
            }
        }
    }
}

#[test]
fn logsob_ratio_is_stable() {
    let f = CylinderFunction::new(vec![TestFunction::one()], OuterMap::identity()).unwrap();
    let p = Partition::dyadic(6).unwrap();
    let small = logsob_probe(&f, params(1.0), &p, 10_000, 1).unwrap();
    let large = logsob_probe(&f, params(1.0), &p, 100_000, 2).unwrap();
    let (a, b) = (small.levels[0].logsob_ratio.unwrap(), large.levels[0].logsob_ratio.unwrap());
    assert!(a.value.is_finite() && b.value.is_finite());
    assert!((a.value - b.value).abs() <= 4.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt(), "{a:?} vs {b:?}");
}

#[test]
fn logsob_ratio_is_bounded_across_beta() {
    // small-noise expansion for F = ∫g: Ent(F²) ≈ 2 Var F, so the ratio is
    // ≈ β/(6(β+1)), increasing in β towards 1/6
    let f = CylinderFunction::new(vec![TestFunction::one()], OuterMap::identity()).unwrap();
    let p = Partition::dyadic(6).unwrap();
    let mut prev = 0.0;
    for (i, beta) in [0.5, 1.0, 2.0, 5.0].into_iter().enumerate() {
        let r = logsob_probe(&f, params(beta), &p, 100_000, 300 + i as u64).unwrap();
        let ratio = r.levels[0].logsob_ratio.unwrap();
        assert!(ratio.value > prev, "β={beta}: {ratio:?}");
        assert!(ratio.value <= 1.0 / 6.0 + 4.0 * ratio.stderr, "β={beta}: {ratio:?}");
        let small_noise = beta / (6.0 * (beta + 1.0));
        assert!((ratio.value - small_noise).abs() / small_noise < 0.1, "β={beta}: {ratio:?}");
        prev = ratio.value;
    }
}
