"""Runs tests/test_*.py and writes a JUnit XML report."""

import importlib.util
import os
import signal
import sys
import time
import traceback
import xml.etree.ElementTree as ET

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "src"))


class Timeout(Exception):
    pass


def on_alarm(signum, frame):
    raise Timeout("test exceeded 2s")


def load(path, name):
    spec = importlib.util.spec_from_file_location(name, path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    out_dir = os.environ.get("TASKFORGE_ARTIFACT_DIR", os.path.join(ROOT, ".taskforge", "artifacts"))
    os.makedirs(out_dir, exist_ok=True)
    signal.signal(signal.SIGALRM, on_alarm)
    suites = ET.Element("testsuites")
    failed = False
    for fname in sorted(os.listdir(os.path.join(ROOT, "tests"))):
        if not (fname.startswith("test_") and fname.endswith(".py")):
            continue
        rel = "tests/" + fname
        suite = ET.SubElement(suites, "testsuite", name=rel)
        try:
            module = load(os.path.join(ROOT, rel), fname[:-3])
        except Exception:
            sys.stderr.write(traceback.format_exc())
            failed = True
            continue
        for name, fn in vars(module).items():
            if not (name.startswith("test_") and callable(fn)):
                continue
            case = ET.SubElement(suite, "testcase", classname=rel, name=name)
            start = time.time()
            signal.alarm(2)
            try:
                fn()
            except AssertionError as err:
                failed = True
                node = ET.SubElement(case, "failure", message=str(err)[:200])
                node.text = traceback.format_exc()
            except BaseException as err:
                failed = True
                node = ET.SubElement(case, "error", message=type(err).__name__)
                node.text = traceback.format_exc()
            finally:
                signal.alarm(0)
            case.set("time", "%.3f" % (time.time() - start))
    ET.ElementTree(suites).write(os.path.join(out_dir, "junit.xml"), encoding="unicode")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
