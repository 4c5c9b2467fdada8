import math

import pytest

import netrecon as nr

COUNTS = """# toy survey
#default_N 5
a b 5 5
a c 4 5
b c 1 5
c d 0 5
"""


def test_version_string():
    assert nr.__version__.count(".") == 2


def test_parse_and_effective_counts():
    counts = nr.parse_counts(COUNTS)
    assert counts.n == 4
    assert counts.labels == ["a", "b", "c", "d"]
    assert counts.effective(0, 1) == (5, 5)
    assert counts.effective(1, 0) == (5, 5)  # undirected: order is irrelevant
    assert counts.effective(0, 3) == (0, 5)  # absent pair, default trials
    assert counts.common_trials() == 5
    round_trip = nr.parse_counts(nr.write_counts(counts))
    assert round_trip.effective(0, 2) == (4, 5)


def test_parse_errors_are_value_errors():
    with pytest.raises(nr.ParseError):
        nr.parse_counts("a a 1 2\n")
    with pytest.raises(ValueError):
        nr.parse_counts("a b 7 2\n")  # events above trials


def test_posterior_matches_hand_computation():
    params = nr.IidParams(alpha=0.5, beta=0.1, rho=0.1)
    counts = nr.parse_counts("#default_N 2\na b 2 2\n", extra_nodes=["c"])
    post = nr.e_step(counts, params)
    # two hits out of two: rho a^2 / (rho a^2 + (1-rho) b^2)
    expect = 0.1 * 0.25 / (0.1 * 0.25 + 0.9 * 0.01)
    assert post.q(0, 1) == pytest.approx(expect, abs=1e-12)
    assert post.q(0, 2) == pytest.approx(0.1 * 0.25 / (0.1 * 0.25 + 0.9 * 0.81), abs=1e-12)


def test_synth_fit_recovers_iid_parameters():
    truth = nr.IidParams(alpha=0.42, beta=0.004, rho=0.034)
    spec = nr.SynthSpec(n=150, truth=truth, trials=[8], seed=11)
    net = nr.generate_ground_truth(spec)
    counts = nr.generate_observations(net, spec)
    cfg = nr.EmConfig()
    cfg.seed = 5
    res = nr.run_em(counts, "iid", cfg)
    assert res.trace.converged
    fit = res.params
    assert isinstance(fit, nr.IidParams)
    assert fit.alpha == pytest.approx(truth.alpha, abs=0.06)
    assert fit.beta == pytest.approx(truth.beta, abs=0.004)
    assert fit.rho == pytest.approx(truth.rho, abs=0.01)

    rates = nr.derived_rates(fit)
    assert rates.fdr[0] == pytest.approx(1 - rates.precision[0], abs=1e-12)

    lls = [it.loglik for it in res.trace.iterations]
    assert all(b - a >= -1e-9 for a, b in zip(lls, lls[1:]))


def test_sampling_tracks_marginals():
    params = nr.IidParams(alpha=0.9, beta=0.05, rho=0.2)
    counts = nr.parse_counts("#default_N 3\na b 3 3\na c 2 3\n", extra_nodes=["d"])
    post = nr.e_step(counts, params)
    samples = nr.sample_networks(post, 4000, seed=33)
    freq = sum(s.has_edge(0, 1) for s in samples) / len(samples)
    q = post.q(0, 1)
    assert freq == pytest.approx(q, abs=4 * math.sqrt(q * (1 - q) / 4000))
    assert nr.expected_degree(post, 0) == pytest.approx(post.q(0, 1) + post.q(0, 2) + post.q(0, 3),
                                                        abs=1e-12)


def test_gof_report_on_well_specified_data():
    truth = nr.IidParams(alpha=0.55, beta=0.01, rho=0.08)
    spec = nr.SynthSpec(n=120, truth=truth, trials=[6], seed=4)
    counts = nr.generate_observations(nr.generate_ground_truth(spec), spec)
    cfg = nr.EmConfig()
    cfg.seed = 9
    fit = nr.run_em(counts, "iid", cfg).params
    observed = nr.observed_histogram(counts)
    predicted = nr.predicted_histogram(fit, counts.n, counts.common_trials())
    assert sum(observed) == pytest.approx(counts.pair_count)
    assert sum(predicted) == pytest.approx(counts.pair_count, rel=1e-9)
    report = nr.chi_squared_gof(observed, predicted, fitted_param_count=3, significance=0.05)
    assert report.dof >= 1
    assert not report.rejected


def test_multilevel_fit_and_posterior_shape():
    truth = nr.MultiLevelParams(alpha=[0.02, 0.35, 0.8], rho=[0.85, 0.1, 0.05])
    spec = nr.SynthSpec(n=80, truth=truth, trials=[10], seed=21)
    counts = nr.generate_observations(nr.generate_ground_truth(spec), spec)
    cfg = nr.EmConfig()
    cfg.seed = 2
    res = nr.run_em(counts, "multilevel", cfg, levels=3)
    fit = res.params
    assert isinstance(fit, nr.MultiLevelParams)
    assert fit.levels == 3
    assert list(fit.alpha) == sorted(fit.alpha)  # canonical level order
    assert sum(fit.rho) == pytest.approx(1.0, abs=1e-9)
    weights = res.posterior.level_q(0, 1)
    assert len(weights) == 3
    assert sum(weights) == pytest.approx(1.0, abs=1e-9)


def test_contract_violation_raises():
    counts = nr.parse_counts(COUNTS)  # undirected
    with pytest.raises(nr.ContractError):
        nr.run_em(counts, "pernode")
