"""Command-line entry point: `plot <kind> --in DIR --out FILE.png`."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import PlotsError
from .figures import KINDS, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render a figure from tumorfront output files.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    parser.add_argument("kind", choices=sorted(KINDS),
                        help="which figure to draw")
    parser.add_argument("--in", dest="in_dir", required=True, metavar="DIR",
                        help="directory holding the run's artifacts")
    parser.add_argument("--out", required=True, metavar="FILE.png",
                        help="image file to write")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        render(args.kind, Path(args.in_dir), Path(args.out))
    except (PlotsError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
