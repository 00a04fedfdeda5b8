"""Python access to the btblab branch target buffer simulator."""

import json

from ._core import (
    TraceError,
    btbx_total_bits,
    capacity_table,
    decode_target,
    encode_offset,
    gen_trace,
    offset_histogram,
    required_offset_width,
)

__all__ = [
    "TraceError",
    "btbx_total_bits",
    "capacity_table",
    "compare",
    "decode_target",
    "encode_offset",
    "gen_trace",
    "offset_histogram",
    "required_offset_width",
    "simulate",
]

DEFAULT_MODELS = ("conv", "rbtb", "pdede", "btbx")


def simulate(path, model, budget_kb=None, sets=None, warmup=None, measure=None):
    """Run one model over a trace file and return its metrics as a dict."""
    from ._core import simulate_json

    return json.loads(simulate_json(str(path), model, budget_kb, sets, warmup, measure))


def compare(path, budget_kb, models=DEFAULT_MODELS, warmup=None, measure=None):
    """Run several models at one budget; one metrics dict per model, in order."""
    from ._core import compare_json

    return json.loads(compare_json(str(path), list(models), budget_kb, warmup, measure))
