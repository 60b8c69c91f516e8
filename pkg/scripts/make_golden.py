"""Regenerate the golden bundles in tests/data/golden from the 8x8 fixture.

Run only when an intended change alters outputs; review the diff afterwards.
"""

import json
import os
import shutil
import sys
import tempfile
from contextlib import redirect_stdout
from io import StringIO

from cspath.cli import main

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "tests", "data")


def run_pipeline(workdir):
    with open(os.path.join(DATA, "golden_pipeline.json")) as f:
        pipe = json.load(f)
    shutil.copy(os.path.join(DATA, pipe["field"]), workdir)
    cwd = os.getcwd()
    os.environ["SOURCE_DATE_EPOCH"] = "0"
    try:
        os.chdir(workdir)
        for argv in pipe["steps"]:
            with redirect_stdout(StringIO()):
                main(argv)
    finally:
        os.chdir(cwd)


if __name__ == "__main__":
    target = os.path.join(DATA, "golden")
    with tempfile.TemporaryDirectory() as tmp:
        run_pipeline(tmp)
        os.remove(os.path.join(tmp, "field8.csv"))
        shutil.rmtree(target, ignore_errors=True)
        shutil.copytree(tmp, target)
    print(f"wrote {target}", file=sys.stderr)
