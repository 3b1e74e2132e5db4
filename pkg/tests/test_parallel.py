# test_parallel.py
import logging

import numpy as np

from estimators import QccValue, Status
from parallel import CHUNK_SIZE, auxiliary_rng, derive_seed, replicate_rng, run_replicates


def draw(index, rng):
    return index, float(rng.standard_normal())


def test_results_in_index_order_for_any_thread_count():
    count = 3 * CHUNK_SIZE + 7
    single = run_replicates(draw, count, seed=1, threads=1)
    pooled = run_replicates(draw, count, seed=1, threads=5)
    assert single == pooled
    assert [index for index, _ in single] == list(range(count))


def test_replicate_streams_depend_only_on_seed_and_index():
    assert replicate_rng(5, 3).random() == replicate_rng(5, 3).random()
    assert replicate_rng(5, 3).random() != replicate_rng(5, 4).random()
    assert replicate_rng(5, 3).random() != replicate_rng(6, 3).random()


def test_auxiliary_stream_distinct_from_replicates():
    assert auxiliary_rng(5, 0).random() != replicate_rng(5, 0).random()


def test_derive_seed():
    seed = derive_seed(7, "null:abc")
    assert seed == derive_seed(7, "null:abc")
    assert seed != derive_seed(7, "alt:abc")
    assert seed != derive_seed(8, "null:abc")
    assert 0 <= seed < 2 ** 64
    np.random.default_rng(seed)


def test_summary_line_counts_failed_statuses(caplog):
    def alternate(index, rng):
        return [QccValue(0.0, Status.OK if index % 3 else Status.EMPTY_SET), QccValue(0.5, Status.OK)]

    with caplog.at_level(logging.INFO, logger="qcc_toolkit"):
        run_replicates(alternate, 30, seed=2, threads=1, context="BATCH")
    summaries = [message for message in caplog.messages if message.startswith("[BATCH]")]
    assert len(summaries) == 1
    assert "non_ok=10" in summaries[0]
