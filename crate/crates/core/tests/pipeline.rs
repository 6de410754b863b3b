use irs_outage::monte_carlo::{estimate, SamplerSpec};
use irs_outage::outage::{outage, outage_probability};
use irs_outage::rmt::{asymptotic_limit, gaussian_mi, iid_emi, iid_g, iid_variance, SolverConfig, VarianceVariant};
use irs_outage::{CorrelationSet, PhaseShifts, Scenario, SystemDims};

#[test]
fn iid_scenario_agrees_with_closed_forms() {
    let dims = SystemDims::new(4, 4, 12).unwrap();
    let rho = 5.0;
    let sc = Scenario::new(CorrelationSet::identity(dims), PhaseShifts::ramp(12), rho).unwrap();
    let an = gaussian_mi(&sc.spectra().unwrap(), &SolverConfig::default(), VarianceVariant::LargeL).unwrap();
    let tau = dims.tau();
    assert!((an.mi.mean_nats - iid_emi(4, tau, rho).unwrap()).abs() < 1e-9);
    assert!((an.mi.var_nats2 - iid_variance(rho, iid_g(tau, rho).unwrap())).abs() < 1e-9);
}

#[test]
fn mean_increases_toward_limit() {
    let rho = 10.0;
    let lim = asymptotic_limit(4, rho).unwrap().mean_nats;
    let means: Vec<f64> = [4, 8, 32, 128, 1024].iter().map(|&l| iid_emi(4, 4.0 / l as f64, rho).unwrap()).collect();
    assert!(means.windows(2).all(|w| w[1] > w[0]));
    assert!(*means.last().unwrap() < lim);
}

#[test]
fn theory_and_sampling_agree_on_median() {
    let dims = SystemDims::new(3, 3, 8).unwrap();
    let corr = CorrelationSet::exponential(dims, 0.3, 0.3, 0.3, 0.3).unwrap();
    let sc = Scenario::new(corr, PhaseShifts::zeros(8), 10.0).unwrap();
    let an = gaussian_mi(&sc.spectra().unwrap(), &SolverConfig::default(), VarianceVariant::LargeL).unwrap();
    let o = outage(an.mi.mean_nats, an.mi.var_nats2, an.mi.mean_nats).unwrap();
    assert!((o.p_out - 0.5).abs() < 1e-15);
    let st = estimate(&sc, &SamplerSpec::new(1, 20_000, 4).unwrap(), &[an.mi.mean_nats]).unwrap();
    assert!((st.outage[0].p_hat - 0.5).abs() < 0.05);
    assert!((st.mean - an.mi.mean_nats).abs() / an.mi.mean_nats < 0.02);
    assert_eq!(outage_probability(an.mi.mean_nats, an.mi.var_nats2, -1.0).unwrap() < 1e-10, true);
}
