"""Runs the test_* functions in tests/checks.py and writes result.json."""

import json
import os
import sys
import time
import traceback

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import checks  # noqa: E402

results = []
failed = False
start = time.time()
for name in sorted(n for n in dir(checks) if n.startswith("test_")):
    t0 = time.time()
    status, message = "pass", ""
    try:
        getattr(checks, name)()
    except AssertionError:
        status, message = "fail", traceback.format_exc()
        failed = True
        sys.stderr.write(message)
    results.append({"id": "tests/checks.py::" + name, "status": status,
                    "duration_s": round(time.time() - t0, 6), "message": message})
doc = {"schema_version": 1, "exit_code": 1 if failed else 0,
       "duration_s": round(time.time() - start, 6), "tests": results}
out = os.environ.get("TASKFORGE_ARTIFACT_DIR", ".")
with open(os.path.join(out, "result.json"), "w") as fh:
    json.dump(doc, fh)
sys.exit(1 if failed else 0)
