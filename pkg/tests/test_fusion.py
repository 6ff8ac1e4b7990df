import warnings

import numpy as np
import pytest

from dsprt.errors import ConfigError, KernelError
from dsprt.fusion import FusionConfig, FusionState, Status, fusion_apply, fusion_batch
from dsprt.sensor import LocalThresholds, Message


def cfg(a=3.0, b=3.0, w=1.0, K=2):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return FusionConfig(a, b, (w,) * K, (w,) * K)


def msg(i, bit, t=1.0):
    return Message(i, bit, 1, t)


def test_three_ones_decide():
    c, s = cfg(K=1), FusionState.fresh(1)
    assert fusion_apply(s, msg(0, 1, 1), c) is Status.RUNNING
    assert fusion_apply(s, msg(0, 1, 2), c) is Status.RUNNING
    assert fusion_apply(s, msg(0, 1, 3), c) is Status.DECIDED1
    assert s.decision_time == 3 and s.counts == [3]


def test_alternating_bits_never_decide():
    c, s = cfg(K=1), FusionState.fresh(1)
    for k in range(1000):
        fusion_apply(s, msg(0, (k + 1) % 2, k), c)
        assert s.u_tilde in (0.0, 1.0)
    assert s.status is Status.RUNNING


def test_exact_lower_hit_decides_zero():
    c, s = cfg(a=2.0, K=1), FusionState.fresh(1)
    fusion_apply(s, msg(0, 0), c)
    assert fusion_apply(s, msg(0, 0), c) is Status.DECIDED0


def test_apply_after_decision_is_a_kernel_error():
    c, s = cfg(b=1.0, K=1), FusionState.fresh(1)
    fusion_apply(s, msg(0, 1), c)
    with pytest.raises(KernelError):
        fusion_apply(s, msg(0, 1), c)
    with pytest.raises(KernelError):
        fusion_batch(s, [msg(0, 1)], c)


def test_batch_reaches_threshold():
    c = cfg(w=2.0)
    s = FusionState(u_tilde=-1.0, counts=[0, 0])
    assert fusion_batch(s, [msg(1, 1), msg(0, 1)], c) is Status.DECIDED1
    assert s.u_tilde == 3.0


def test_batch_net_zero():
    c, s = cfg(), FusionState.fresh(2)
    assert fusion_batch(s, [msg(0, 1), msg(1, 0)], c) is Status.RUNNING
    assert s.u_tilde == 0.0 and s.counts == [1, 1]


def test_batch_stops_at_first_crossing():
    c = cfg(a=1.0, b=1.0, K=3)
    s = FusionState.fresh(3)
    fusion_batch(s, [msg(2, 0), msg(0, 1), msg(1, 1)], c)
    # sensor 0 goes first and decides; sensors 1, 2 are not applied
    assert s.status is Status.DECIDED1 and s.counts == [1, 0, 0]


def test_batch_mixed_times_rejected():
    with pytest.raises(ValueError):
        fusion_batch(FusionState.fresh(2), [msg(0, 1, 1.0), msg(1, 1, 2.0)], cfg())


def test_config_validation_and_warning():
    with pytest.raises(ConfigError):
        FusionConfig(1, 1, (1.0,), (1.0, 1.0))
    with pytest.raises(ConfigError):
        FusionConfig(1, 1, (0.0,), (1.0,))
    with pytest.raises(ConfigError):
        FusionConfig(0, 1, (1.0,), (1.0,))
    with pytest.warns(UserWarning):
        FusionConfig(3, 3, (1.0, 1.0), (1.0, 1.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        FusionConfig(5, 5, (1.0, 1.0), (1.0, 1.0))
        FusionConfig(5, 5, (1.0, 1.0), (1.0, 1.0)).with_thresholds(1, 1)


def test_constructors():
    th = [LocalThresholds(1.0, 2.0), LocalThresholds(0.5, 0.5)]
    c = FusionConfig.from_thresholds(th, 9, 9)
    assert c.w_lo == (1.0, 0.5) and c.w_hi == (2.0, 0.5) and c.c_prime == 4.0 and c.K == 2


def test_batch_equals_sequential_fuzz():
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        K = int(rng.integers(1, 6))
        w_lo = tuple(rng.uniform(0.2, 3.0, K))
        w_hi = tuple(rng.uniform(0.2, 3.0, K))
        a, b = rng.uniform(0.5, 8.0, 2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            c = FusionConfig(a, b, w_lo, w_hi)
        start = float(rng.uniform(-a + 1e-9, b - 1e-9))
        senders = rng.choice(K, size=int(rng.integers(1, K + 1)), replace=False)
        msgs = [Message(int(i), int(rng.integers(0, 2)), 1, 7.0) for i in senders]
        s_batch = FusionState(u_tilde=start, counts=[0] * K)
        fusion_batch(s_batch, list(msgs), c)
        s_seq = FusionState(u_tilde=start, counts=[0] * K)
        for m in sorted(msgs, key=lambda m: m.sensor):
            if fusion_apply(s_seq, m, c) is not Status.RUNNING:
                break
        assert (s_batch.u_tilde, s_batch.counts, s_batch.status, s_batch.decision_time) == \
            (s_seq.u_tilde, s_seq.counts, s_seq.status, s_seq.decision_time)
        assert abs(s_batch.u_tilde - start) <= c.c_prime
        if s_batch.status is Status.RUNNING:
            assert -a < s_batch.u_tilde < b
