import json

from ._core import *  # noqa: F401,F403
from ._core import _run_scenario


def run_scenario(spec, telemetry=False):
    """Run the closed loop; returns the summary dict, plus the telemetry CSV text if asked."""
    summary, csv = _run_scenario(spec, telemetry)
    summary = json.loads(summary)
    return (summary, csv) if telemetry else summary
