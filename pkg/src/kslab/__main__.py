"""Allow `python3 -m kslab` as an alias for the `kslab` console script."""

import sys

from kslab.cli import main

if __name__ == "__main__":
    sys.exit(main())
