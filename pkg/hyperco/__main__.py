import sys

from hyperco.cli_io import cli_main

if __name__ == "__main__":
    sys.exit(cli_main())
