import json
import os
import subprocess

import pytest

import btblab


def test_offset_codec():
    pc, target = 0b101101000, 0b101111000
    assert btblab.required_offset_width(pc, target) == 3
    assert btblab.encode_offset(pc, target) == (3, 0b110)
    assert btblab.decode_target(pc, 3, 0b110) == target
    assert btblab.required_offset_width(0x1000, 0x1004, isa="x86") == 3


def test_capacity_table():
    rows = btblab.capacity_table()
    assert [r["conv"] for r in rows] == [116, 232, 464, 928, 1856, 3712, 7424]
    assert rows[4]["btbx"] == 4160
    assert abs(rows[4]["ratio_conv"] - 2.24) <= 0.01
    assert btblab.btbx_total_bits(512) == 118784
    off = btblab.capacity_table([0.01])
    assert off[0]["extrapolated"] and off[0]["pdede"] is None


def test_generate_simulate_compare(tmp_path):
    trace = tmp_path / "t.btbt"
    assert btblab.gen_trace(str(trace), branches=500, records=10000, seed=3) == 10000
    counts = btblab.offset_histogram(str(trace))
    assert sum(counts) > 0

    m = btblab.simulate(trace, "btbx", budget_kb=14.5)
    assert m["schema"] == "btblab.metrics/1"
    assert sum(m["hits_by_source"].values()) + m["taken_btb_misses"] == m["taken_branches"]

    rows = btblab.compare(trace, 14.5)
    assert [r["model"] for r in rows] == list(btblab.DEFAULT_MODELS)
    by_cli = btblab.simulate(trace, "conv", sets=16, warmup=0)
    assert by_cli["warmup_records"] == 0


def test_errors(tmp_path):
    bad = tmp_path / "bad.btbt"
    bad.write_bytes(b"nope, not a trace")
    with pytest.raises(btblab.TraceError):
        btblab.simulate(bad, "btbx", budget_kb=14.5)
    trace = tmp_path / "t.btbt"
    btblab.gen_trace(str(trace), branches=10, records=100)
    with pytest.raises(ValueError):
        btblab.simulate(trace, "nope", budget_kb=14.5)
    with pytest.raises(ValueError):
        btblab.gen_trace(str(trace), dist="0-6:0.5")


@pytest.mark.skipif("BTBLAB_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_matches_binding(tmp_path):
    trace = tmp_path / "t.btbt"
    btblab.gen_trace(str(trace), branches=300, records=5000, seed=9)
    out = subprocess.run(
        [os.environ["BTBLAB_CLI"], "simulate", "--model", "pdede", "--budget-kb", "1.8", str(trace)],
        check=True,
        capture_output=True,
        text=True,
    ).stdout
    assert json.loads(out) == btblab.simulate(trace, "pdede", budget_kb=1.8)
