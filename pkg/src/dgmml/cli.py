"""Console-script shim for the ``dgmml`` command."""

import sys

from .bench import cli_main


def main() -> None:
    raise SystemExit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
