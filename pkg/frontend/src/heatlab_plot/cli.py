"""Command line entry point: ``heatlab-plot <figure spec file>``.

The spec file holds ``key = value`` lines (``#`` starts a comment):

    input_csv = out/bounds.csv
    kind      = bounds_envelope
    output    = figs/envelope.png
    # optional: log_x / log_y (true|false), report = out/report.json

Exit codes: 0 rendered, 1 bad spec or failed render.
"""

from __future__ import annotations

import argparse
import sys

from .figures import PlotError, parse_figure_spec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="heatlab-plot",
        description="Render one figure from heatlab CSV output.")
    parser.add_argument("spec", help="figure spec file (key = value lines)")
    args = parser.parse_args(argv)
    try:
        text = open(args.spec).read()
    except OSError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 1
    try:
        result = render(parse_figure_spec(text))
    except PlotError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 1
    line = f"wrote {result.output}"
    if result.annotation:
        line += f"  [{result.annotation}]"
    print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
