"""Allow `python -m heliodac` as an alias for the console script."""

import sys

from heliodac.cli import main

if __name__ == "__main__":
    sys.exit(main())
