"""Smoke test for the chartquiz Python extension.

Build it first:

    cargo build -p chartquiz-py --features extension-module

The script copies the built library next to a temporary import path, so no
install step is needed.
"""

import importlib
import json
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_extension():
    for profile in ("release", "debug"):
        for name in ("libchartquiz.so", "libchartquiz.dylib", "chartquiz.dll"):
            lib = ROOT / "target" / profile / name
            if lib.exists():
                dest = Path(tempfile.mkdtemp()) / ("chartquiz.pyd" if name.endswith(".dll") else "chartquiz.so")
                shutil.copy(lib, dest)
                sys.path.insert(0, str(dest.parent))
                return importlib.import_module("chartquiz")
    sys.exit("chartquiz extension not built; run: cargo build -p chartquiz-py --features extension-module")


def main():
    cq = load_extension()

    assert abs(cq.overall_score(0.7, 0.6, 0.5) - 0.62) < 1e-12
    try:
        cq.overall_score(1.5, 0.5, 0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range component accepted")

    ranked = cq.retrieve_templates(json.dumps(features(chart_type="pie")), 2)
    assert ranked and ranked[0][0].startswith("pie"), ranked

    fixtures = ROOT / "fixtures" / "walkthrough"
    with tempfile.TemporaryDirectory() as data:
        studio = cq.Studio(data, [str(fixtures / "mock_fixtures.json")])
        pid = studio.create_project("Fruit sales")["id"]
        request = json.loads((fixtures / "instructor_input.json").read_text())["text"]
        assert studio.analyze(pid, request)["chart_type"] == "bar"
        version = studio.generate(pid)
        cq.validate("question_version", json.dumps(version))
        studio.generate_cohort(pid, (fixtures / "cohort_spec.json").read_text())
        run = studio.simulate(pid, version["id"])
        sankey = studio.sankey(pid, run["id"])
        assert sankey["total_responses"] == 20
        stats = studio.compare(pid, run["id"])
        assert abs(stats["entries"][0]["accuracy"] - 0.95) < 1e-12
        assert len(studio.strategies(pid, run["id"], 3)) <= 3
        try:
            studio.simulate(pid, "v9")
        except cq.ChartquizError as e:
            assert str(e).startswith("[UnknownVersion]"), e
        else:
            raise AssertionError("unknown version accepted")
    print("python smoke test passed")


def features(**overrides):
    base = {
        "cognitive_complexity": 3,
        "context_domain": "general",
        "context_richness": 3,
        "difficulty_target": 3,
        "chart_type": None,
        "data_complexity": 3,
        "color_scheme": "auto",
        "misleader": None,
        "embellishment_level": 3,
        "distractor_count": 3,
        "plausibility": 3,
        "distractor_strategy": "mixed",
        "knowledge_points": ["retrieve_value"],
        "hint_presence": False,
    }
    base.update(overrides)
    return base


if __name__ == "__main__":
    main()
