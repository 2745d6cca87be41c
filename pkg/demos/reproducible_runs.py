"""Running shipped configs through the command line entry point twice.

Artifacts carry the tool version and the sha256 of the config text, and
all randomness comes from the config's seed, so the two output trees
must match byte for byte.  The compare step then orders the runs.
"""
import filecmp
import os
import tempfile
from pathlib import Path

from inverseset import fixture_config
from inverseset.cli import compare_runs, main as cli


def main():
    configs = [str(fixture_config(n)) for n in ("annulus", "annulus_feasibility_only")]
    with tempfile.TemporaryDirectory() as tmp:
        roots = []
        for label in ("a", "b"):
            os.environ["INVERSESET_OUTPUT_DIR"] = str(Path(tmp) / label)
            print(f"run {label}: exit {cli(['run', *configs])}")
            roots.append(Path(tmp) / label)
        for name in ("annulus", "annulus_feasibility_only"):
            cmp = filecmp.dircmp(roots[0] / name, roots[1] / name)
            files = sorted(p.name for p in (roots[0] / name).iterdir())
            print(f"{name}: {len(files)} files, differing: {cmp.diff_files or 'none'}")
        report = compare_runs([roots[0] / "annulus", roots[0] / "annulus_feasibility_only"])
        for check in report["checks"]:
            print(f"{check['check']}: {'PASS' if check['passed'] else 'FAIL'}")
        print(f"most diverse: {report['most_diverse']}")


if __name__ == "__main__":
    main()
