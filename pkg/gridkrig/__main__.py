"""
python -m gridkrig
"""

import sys

from gridkrig.cli import main

if __name__ == "__main__":
    sys.exit(main())
