import math
import os
from pathlib import Path

import pytest

import radt_lab as rl

SOURCE_DIR = Path(os.environ.get("RADT_SOURCE_DIR", Path(__file__).resolve().parents[2]))


def test_version():
    assert rl.__version__.count(".") == 2


def test_chainwalk_optimal_value():
    mdp = rl.chain_walk(5, 0.9, 5)
    assert (mdp.num_states, mdp.num_actions, mdp.horizon) == (5, 2, 5)
    # The last cell is first reachable at step 4 with four successes in a row.
    assert math.isclose(rl.optimal_value(mdp), 0.9**4, rel_tol=1e-12)


def test_shift_keeps_shape_and_changes_dynamics():
    target = rl.chain_walk()
    source = rl.apply_shift(target, "transition_perturb", 0.5, 7)
    assert source.num_states == target.num_states
    assert source.fingerprint() != target.fingerprint()
    same = rl.apply_shift(target, "transition_perturb", 0.0, 7)
    assert same.fingerprint() == target.fingerprint()
    with pytest.raises(Exception):
        rl.apply_shift(target, "teleport", 0.5)


def test_collect_roundtrip_and_returns():
    mdp = rl.chain_walk()
    beta = rl.StationaryPolicy.uniform(5, 5, 2)
    ds = rl.collect(mdp, beta, 2000, 3)
    assert len(ds) == 2000
    assert ds.num_transitions == 10000
    back = rl.Dataset.from_jsonl(ds.to_jsonl())
    assert back == ds
    returns = ds.returns()
    mean = sum(returns) / len(returns)
    assert abs(mean - rl.policy_value(mdp, beta)) < 0.05


def test_exact_cdf_pipeline_beats_raw_source():
    target = rl.chain_walk()
    source = rl.apply_shift(target, "transition_perturb", 0.5, 7)
    beta = rl.StationaryPolicy.uniform(5, 5, 2)
    t_ds = rl.collect(target, beta, 50, 1, "target")
    s_ds = rl.collect(source, beta, 500, 2, "source")
    aug = rl.augment_exact_cdf(s_ds, source, target, beta, 4)
    assert len(aug) == len(s_ds)
    policy = rl.fit_tabular(rl.mix(t_ds, aug, 5))
    report = rl.evaluate(policy, target, [1.0], n_rollouts=100, seed=6)
    result = report["results"][0]
    assert result["exact"] is not None
    assert 0.0 <= result["exact"] <= rl.optimal_value(target) + 1e-12
    probs = policy.action_probs(0, 0, 1.0)
    assert probs is None or math.isclose(sum(probs), 1.0)


def test_config_errors_surface_as_value_errors(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[data]\nn_source = many\n")
    with pytest.raises(ValueError, match="data.n_source"):
        rl.config_hash(bad)


def test_experiment_is_deterministic():
    overrides = ["run.seeds=0..1", "data.n_target_small=10", "data.n_target_large=20", "data.n_source=20",
                 "eval.n_rollouts=10", "run.cells=1T, RADT-ExactCDF"]
    config = SOURCE_DIR / "configs" / "demo.ini"
    a, summary = rl.run_experiment(config, overrides, jobs=2)
    b, _ = rl.run_experiment(config, overrides, jobs=1)
    assert a == b
    assert a.startswith("config_hash,")
    assert summary["provenance"]["config_hash"] == rl.config_hash(config, overrides)
