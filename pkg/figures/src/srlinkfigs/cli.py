"""Command line: render a metrics CSV to one figure."""
from __future__ import annotations

import argparse
import sys

from .render import MissingSeries, render
from .specs import SPECS


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="srlinkfigs",
                                     description="Render srlinksim metric CSVs")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render one figure from a CSV")
    r.add_argument("csv", help="metrics.csv produced by srlinksim run")
    r.add_argument("figure_id", choices=sorted(SPECS))
    r.add_argument("out", help="output image path (.svg recommended)")
    args = parser.parse_args(sys.argv[1:] if argv is None else argv)

    try:
        summary = render(args.csv, args.figure_id, args.out)
    except (MissingSeries, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {summary['path']} ({summary['n_series']} series, "
          f"y-{summary['yscale']})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
