"""CLI Entry Point — run the PBIM toolkit from the command line."""
import os
import sys

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from pbim.cli import main


if __name__ == "__main__":
    sys.exit(main())
