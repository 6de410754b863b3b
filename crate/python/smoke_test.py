"""Smoke test for the irs_outage_py extension module."""

import math

import irs_outage_py as io


def main():
    lim = io.asymptotic_limit(4, 2.0)
    assert abs(lim[0] - 1.0) < 1e-15
    assert abs(lim[1] / 4 - (math.log(4) - 0.5)) < 1e-12
    assert abs(lim[2] - math.log(4 / 3)) < 1e-12

    iid = io.Scenario(4, 4, 4, rho=10.0)
    mean, var = iid.mean_variance("large_l")
    assert abs(mean - io.iid_emi(4, 1.0, 10.0)) < 1e-8 * mean
    assert abs(var - io.iid_variance(1.0, 10.0)) < 1e-8

    sc = io.Scenario(4, 4, 8, rho=10.0, mu_r1=0.8, mu_t1=0.8, mu_r2=0.8, mu_t2=0.8,
                     phases=[2 * math.pi * i / 8 for i in range(1, 9)])
    mean, var = sc.mean_variance()
    rate = io.outage_rate(mean, var, 0.1)
    p, logp = sc.outage(rate)
    assert abs(p - 0.1) < 1e-10 and abs(logp - math.log(0.1)) < 1e-9

    grad = sc.gradient(rate)
    assert len(grad) == 8 and abs(sum(grad)) < 1e-10

    theta, traj = sc.optimize(rate, max_outer=50)
    assert all(b <= a for a, b in zip(traj, traj[1:]))
    assert sc.with_phases(theta).outage(rate)[0] <= p

    mc = sc.monte_carlo(seed=1, samples=5000, thresholds_nats=[rate])
    assert abs(mc["mean"] - mean) / mean < 0.02
    assert 0.05 < mc["outage"][0][1] < 0.15

    assert io.min_irs_size(0.9, 20, 10.0) == 31
    assert sc.dmt(float(min(sc.dims[0], sc.dims[1]))) == 0.0

    try:
        io.Scenario(4, 4, 0, rho=1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("zero IRS size accepted")

    print("smoke test passed:", sc, f"mean={mean:.4f} nats, var={var:.4f}, p_out(opt)={traj[-1]:.4f}")


if __name__ == "__main__":
    main()
