"""Time each pipeline stage on a corpus program (default: the evaluation module).

    python3 scripts/time_eval_module.py
    python3 scripts/time_eval_module.py --program running_example.c --repeat 10
"""

import argparse
import statistics
import sys
import tempfile
from importlib import resources
from pathlib import Path

from microdeduct.driver import PipelineConfig, run


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--program", default="eval_module.c", help="file name inside the bundled corpus, or a path")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    path = Path(args.program)
    text = path.read_text() if path.exists() else resources.files("microdeduct.corpus").joinpath(args.program).read_text()
    runs = []
    with tempfile.TemporaryDirectory() as d:
        src = Path(d) / path.name
        src.write_text(text)
        for _ in range(args.repeat):
            res = run(PipelineConfig(src))
            runs.append(dict(res.timings, total=sum(res.timings.values())))
    print(f"{path.name}: {res.status.name} {res.report.verified_count}/{len(res.report.results)} VCs, {args.repeat} runs")
    for stage in runs[0]:
        xs = [r[stage] for r in runs]
        print(f"  {stage:>5}: median {statistics.median(xs):.3f} s  max {max(xs):.3f} s")
    return int(res.status)


if __name__ == "__main__":
    sys.exit(main())
